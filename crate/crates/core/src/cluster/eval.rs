//! Post-hoc scoring of unsupervised clusters against ground-truth events.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Event;

/// Optimal one-to-one assignment maximizing the total of `weights`
/// (`rows × cols`, any shape). Returns, for each row, its matched column
/// or `None` when there are more rows than columns.
pub fn hungarian_max(weights: &[Vec<f64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let max_w = weights.iter().flatten().copied().fold(0.0, f64::max);
    // Square cost matrix, 1-based, padded with zero-weight dummies.
    let cost = |i: usize, j: usize| -> f64 {
        let w = if i <= rows && j <= cols { weights[i - 1][j - 1] } else { 0.0 };
        max_w - w
    };

    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            out[i - 1] = Some(j - 1);
        }
    }
    out
}

/// Cluster-to-event alignment and the resulting accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMatch {
    /// Entry `c` is the event matched to cluster `c`, `None` if unmatched.
    pub matched_map: Vec<Option<u32>>,
    pub accuracy: f64,
}

/// Aligns cluster indices with event ids by maximizing the number of
/// agreeing snapshots over the `k × E` agreement matrix.
pub fn match_labels(assignments: &[usize], truth_event_ids: &[u32]) -> Result<LabelMatch> {
    if assignments.len() != truth_event_ids.len() {
        return Err(Error::invalid(format!(
            "match_labels: {} assignments vs {} truth labels",
            assignments.len(),
            truth_event_ids.len()
        )));
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let events: Vec<u32> = truth_event_ids.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let col: HashMap<u32, usize> = events.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut agree = vec![vec![0.0; events.len()]; k];
    for (&c, e) in assignments.iter().zip(truth_event_ids) {
        agree[c][col[e]] += 1.0;
    }
    let matching = hungarian_max(&agree);
    let matched: f64 = matching
        .iter()
        .enumerate()
        .filter_map(|(c, m)| m.map(|j| agree[c][j]))
        .sum();
    let n = assignments.len();
    Ok(LabelMatch {
        matched_map: matching.into_iter().map(|m| m.map(|j| events[j])).collect(),
        accuracy: if n == 0 { 0.0 } else { matched / n as f64 },
    })
}

fn comb2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand Index. Returns 1.0 when both partitions are trivially
/// identical in structure (the chance-corrected ratio is 0/0).
pub fn ari<A: Hash + Eq, B: Hash + Eq>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("ari: lengths differ ({} vs {})", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::invalid("ari: need at least 2 points"));
    }
    let mut table: HashMap<(&A, &B), usize> = HashMap::new();
    let mut rows: HashMap<&A, usize> = HashMap::new();
    let mut cols: HashMap<&B, usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    // Sort counts so float summation order does not depend on hashing.
    let sorted_sum = |counts: Vec<usize>| -> f64 {
        let mut c = counts;
        c.sort_unstable();
        c.into_iter().map(|n| comb2(n as f64)).sum()
    };
    let index = sorted_sum(table.into_values().collect());
    let sum_a = sorted_sum(rows.into_values().collect());
    let sum_b = sorted_sum(cols.into_values().collect());
    let total = comb2(a.len() as f64);
    let expected = sum_a * sum_b / total;
    let max_index = (sum_a + sum_b) / 2.0;
    if max_index == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max_index - expected))
}

/// Scores of a clustering against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub ari: f64,
    /// Column labels of `confusion`, in scenario order.
    pub event_ids: Vec<u32>,
    /// `k × E` counts: row = cluster, column = true event.
    pub confusion: Vec<Vec<u64>>,
    /// Meters, one per snapshot that entered the distance statistics.
    pub positioning_errors: Vec<f64>,
    pub median_error: Option<f64>,
    pub mean_error: Option<f64>,
    /// Snapshots whose true or predicted event is the no-object baseline
    /// (or an unmatched cluster) and that were not matched correctly.
    pub detection_misses: u64,
    pub matched_map: Vec<Option<u32>>,
    /// Fraction of each event's snapshots mapped back to that event.
    pub per_event_accuracy: BTreeMap<u32, f64>,
}

/// Turns cluster assignments into predicted positions and scores them.
///
/// A snapshot's predicted position is the reference point of the event its
/// cluster maps to. Snapshots involving the no-object baseline count as
/// zero error when matched correctly and as detection misses otherwise.
pub fn positioning_report(
    assignments: &[usize],
    matched_map: &[Option<u32>],
    events: &[Event],
    truth_event_ids: &[u32],
) -> Result<EvaluationReport> {
    if assignments.len() != truth_event_ids.len() {
        return Err(Error::invalid(format!(
            "positioning_report: {} assignments vs {} truth labels",
            assignments.len(),
            truth_event_ids.len()
        )));
    }
    if let Some(&c) = assignments.iter().find(|&&c| c >= matched_map.len()) {
        return Err(Error::invalid(format!("positioning_report: cluster {c} missing from matched_map")));
    }
    let column: HashMap<u32, usize> = events.iter().enumerate().map(|(i, e)| (e.event_id, i)).collect();
    if let Some(t) = truth_event_ids.iter().find(|t| !column.contains_key(t)) {
        return Err(Error::invalid(format!("positioning_report: unknown event_id {t}")));
    }

    let k = matched_map.len();
    let mut confusion = vec![vec![0u64; events.len()]; k];
    let mut errors = Vec::new();
    let mut misses = 0u64;
    let mut matched = 0u64;
    let mut per_event = vec![(0u64, 0u64); events.len()];
    for (&c, &t) in assignments.iter().zip(truth_event_ids) {
        let tcol = column[&t];
        confusion[c][tcol] += 1;
        let predicted = matched_map[c];
        per_event[tcol].1 += 1;
        if predicted == Some(t) {
            matched += 1;
            per_event[tcol].0 += 1;
        }
        let true_ref = events[tcol].reference_point;
        let pred_ref = predicted.and_then(|p| events[column[&p]].reference_point);
        match (true_ref, pred_ref) {
            (Some(a), Some(b)) => errors.push(a.distance(b)),
            _ if predicted == Some(t) => errors.push(0.0),
            _ => misses += 1,
        }
    }

    let n = assignments.len();
    let (median_error, mean_error) = if errors.is_empty() {
        (None, None)
    } else {
        let mut sorted = errors.clone();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
        };
        (Some(median), Some(errors.iter().sum::<f64>() / m as f64))
    };

    Ok(EvaluationReport {
        accuracy: if n == 0 { 0.0 } else { matched as f64 / n as f64 },
        ari: if n >= 2 { ari(assignments, truth_event_ids)? } else { 0.0 },
        event_ids: events.iter().map(|e| e.event_id).collect(),
        confusion,
        positioning_errors: errors,
        median_error,
        mean_error,
        detection_misses: misses,
        matched_map: matched_map.to_vec(),
        per_event_accuracy: events
            .iter()
            .zip(&per_event)
            .filter(|(_, (_, total))| *total > 0)
            .map(|(e, (ok, total))| (e.event_id, *ok as f64 / *total as f64))
            .collect(),
    })
}
