//! File-based pipeline stages: simulate → train → evaluate.
//!
//! Each stage reads and writes plain CSV/JSON in an output directory, so
//! datasets and models can be archived and re-evaluated independently.
//! Artifacts never embed paths or timestamps; the same configuration and
//! seed reproduce them byte for byte.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::write_taps_csv;
use crate::cluster::{match_labels, positioning_report, select_k, ClusterModel, EvaluationReport, KMeansParams};
use crate::error::{Error, Result};
use crate::features::build_matrix;
use crate::ofdm::{collect_dataset_with_link, read_csi_csv, write_csi_csv, CsiSnapshot, LinkQuality, OfdmConfig};
use crate::scene::{validate_scenario, Scenario};

/// Version string written into every report.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

pub const CSI_FILE: &str = "csi.csv";
pub const LINK_FILE: &str = "link.json";
pub const TAPS_FILE: &str = "taps.csv";
pub const MODEL_FILE: &str = "model.json";
pub const REPORT_FILE: &str = "report.json";
pub const HEATMAP_FILE: &str = "heatmap.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` selects [`Scenario::desk_default`].
    pub scenario_path: Option<PathBuf>,
    pub ofdm: OfdmConfig,
    pub snapshots_per_event: usize,
    pub seed: u64,
    pub k_min: usize,
    /// `None` means `min(n − 1, 2E)`, with E the number of scenario events.
    pub k_max: Option<usize>,
    pub kmeans: KMeansParams,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario_path: None,
            ofdm: OfdmConfig::default(),
            snapshots_per_event: 200,
            seed: 1,
            k_min: 2,
            k_max: None,
            kmeans: KMeansParams::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// The path-free part of a [`RunConfig`], echoed into artifacts and hashed.
///
/// Simulation settings appear only in the simulate stage's echo; the later
/// stages never read them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots_per_event: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ofdm: Option<OfdmConfig>,
    pub k_min: usize,
    pub k_max: Option<usize>,
    pub kmeans: KMeansParams,
    /// SHA-256 of the scenario's canonical JSON.
    pub scenario_sha256: String,
}

impl ConfigEcho {
    /// SHA-256 of the echo's compact JSON, hex encoded.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunConfig {
    /// Loads and validates the configured scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let scene = match &self.scenario_path {
            Some(path) => Scenario::load(path)?,
            None => Scenario::desk_default(),
        };
        let violations = validate_scenario(&scene);
        if violations.is_empty() {
            Ok(scene)
        } else {
            Err(Error::InvalidScenario(violations))
        }
    }

    /// Echo for the simulate stage (`simulation = true`) or the later ones.
    pub fn echo(&self, scene: &Scenario, simulation: bool) -> ConfigEcho {
        let canonical = serde_json::to_string(scene).expect("scenario serializes");
        ConfigEcho {
            seed: self.seed,
            snapshots_per_event: simulation.then_some(self.snapshots_per_event),
            ofdm: simulation.then(|| self.ofdm.clone()),
            k_min: self.k_min,
            k_max: self.k_max,
            kmeans: self.kmeans,
            scenario_sha256: sha256_hex(canonical.as_bytes()),
        }
    }

    fn out_path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.output_dir).map_err(|e| Error::io(&self.output_dir, e))?;
        Ok(self.output_dir.join(name))
    }
}

/// Sidecar written next to the CSI dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub version: String,
    pub config_hash: String,
    pub config: ConfigEcho,
    pub events: Vec<LinkQuality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub version: String,
    pub config_hash: String,
    pub config: ConfigEcho,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub csi_path: PathBuf,
    pub link_path: PathBuf,
    pub snapshots: Vec<CsiSnapshot>,
    pub link: LinkReport,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

/// Reads a CSI dataset CSV from disk.
pub fn load_dataset(path: &Path) -> Result<Vec<CsiSnapshot>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csi_csv(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn load_model(path: &Path) -> Result<ClusterModel> {
    let model: ClusterModel = read_json(path)?;
    if model.k == 0 || model.centroids.len() != model.k || model.centroids.iter().any(|c| c.len() != model.dim()) {
        return Err(Error::parse(path, format!("model has k = {} but {} ragged centroids", model.k, model.centroids.len())));
    }
    Ok(model)
}

/// Simulates the dataset and writes `csi.csv` and `link.json`; with
/// `dump_taps`, also the channel taps as `taps.csv`.
pub fn simulate(cfg: &RunConfig, dump_taps: bool) -> Result<SimulateOutput> {
    let scene = cfg.scenario()?;
    let collection = collect_dataset_with_link(&scene, &cfg.ofdm, cfg.snapshots_per_event, cfg.seed)?;

    let csi_path = cfg.out_path(CSI_FILE)?;
    let mut out = create(&csi_path)?;
    write_csi_csv(&collection.snapshots, &mut out)?;
    out.flush().map_err(|e| Error::io(&csi_path, e))?;

    if dump_taps {
        let taps_path = cfg.out_path(TAPS_FILE)?;
        let mut out = create(&taps_path)?;
        write_taps_csv(&scene, &mut out)?;
        out.flush().map_err(|e| Error::io(&taps_path, e))?;
    }

    let echo = cfg.echo(&scene, true);
    let link = LinkReport {
        version: VERSION.to_string(),
        config_hash: echo.hash(),
        config: echo,
        events: collection.link,
    };
    let link_path = cfg.out_path(LINK_FILE)?;
    write_json(&link_path, &link)?;
    Ok(SimulateOutput {
        csi_path,
        link_path,
        snapshots: collection.snapshots,
        link,
    })
}

/// Fits the cluster model on a dataset and writes `model.json`.
///
/// Ground-truth labels in the dataset are never read.
pub fn train(dataset: &Path, cfg: &RunConfig) -> Result<ClusterModel> {
    let snapshots = load_dataset(dataset)?;
    let unlabeled: Vec<CsiSnapshot> = snapshots
        .into_iter()
        .map(|s| CsiSnapshot { event_id: None, ..s })
        .collect();
    let model = train_snapshots(&unlabeled, cfg)?;
    write_json(&cfg.out_path(MODEL_FILE)?, &model)?;
    Ok(model)
}

/// In-memory training step behind [`train`].
pub fn train_snapshots(snapshots: &[CsiSnapshot], cfg: &RunConfig) -> Result<ClusterModel> {
    let (x, _) = build_matrix(snapshots)?;
    let n = x.nrows();
    if n < cfg.k_min {
        return Err(Error::invalid(format!("{n} snapshots is fewer than k_min = {}", cfg.k_min)));
    }
    let k_max = match cfg.k_max {
        Some(k) => k,
        None => (n - 1).min(2 * cfg.scenario()?.events.len()),
    };
    Ok(select_k(x.view(), cfg.k_min, k_max, cfg.seed, &cfg.kmeans)?.model)
}

/// Scores a model on a labeled dataset and writes `report.json` and
/// `heatmap.csv` (`event_x,event_y,accuracy`, one row per event with a
/// reference point).
pub fn evaluate(dataset: &Path, model: &Path, cfg: &RunConfig) -> Result<EvaluationFile> {
    let snapshots = load_dataset(dataset)?;
    let model = load_model(model)?;
    let file = evaluate_snapshots(&snapshots, &model, cfg)?;
    write_json(&cfg.out_path(REPORT_FILE)?, &file)?;

    let scene = cfg.scenario()?;
    let heatmap_path = cfg.out_path(HEATMAP_FILE)?;
    let mut out = create(&heatmap_path)?;
    write_heatmap(&scene, &file.report, &mut out).map_err(|e| Error::io(&heatmap_path, e))?;
    out.flush().map_err(|e| Error::io(&heatmap_path, e))?;
    Ok(file)
}

/// In-memory evaluation step behind [`evaluate`].
pub fn evaluate_snapshots(snapshots: &[CsiSnapshot], model: &ClusterModel, cfg: &RunConfig) -> Result<EvaluationFile> {
    let scene = cfg.scenario()?;
    let truth: Vec<u32> = snapshots
        .iter()
        .map(|s| {
            s.event_id.ok_or_else(|| {
                Error::invalid(format!("snapshot {} has no event_id; evaluation needs labels", s.snapshot_id))
            })
        })
        .collect::<Result<_>>()?;
    let (x, _) = build_matrix(snapshots)?;
    let assignments = model.assign_rows(x.view())?;
    let mut matched_map = match_labels(&assignments, &truth)?.matched_map;
    // Clusters that received no snapshot map to nothing.
    matched_map.resize(model.k, None);
    let report = positioning_report(&assignments, &matched_map, &scene.events, &truth)?;
    let echo = cfg.echo(&scene, false);
    Ok(EvaluationFile {
        version: VERSION.to_string(),
        config_hash: echo.hash(),
        config: echo,
        report,
    })
}

pub fn write_heatmap<W: Write>(scene: &Scenario, report: &EvaluationReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "event_x,event_y,accuracy")?;
    for event in &scene.events {
        if let Some(p) = event.reference_point {
            let acc = report.per_event_accuracy.get(&event.event_id).copied().unwrap_or(f64::NAN);
            writeln!(out, "{:.4},{:.4},{:.6}", p.x, p.y, acc)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> RunConfig {
        RunConfig {
            snapshots_per_event: 3,
            output_dir: dir.to_path_buf(),
            ..Default::default()
        }
    }

    #[test]
    fn echo_hash_ignores_output_dir() {
        let a = small(Path::new("a"));
        let b = small(Path::new("b"));
        let scene = Scenario::desk_default();
        assert_eq!(a.echo(&scene, true).hash(), b.echo(&scene, true).hash());
        let c = RunConfig { seed: 2, ..a.clone() };
        assert_ne!(a.echo(&scene, true).hash(), c.echo(&scene, true).hash());
        // Later stages ignore simulation settings.
        let d = RunConfig { snapshots_per_event: 9, ..a.clone() };
        assert_eq!(a.echo(&scene, false).hash(), d.echo(&scene, false).hash());
    }

    #[test]
    fn simulate_writes_expected_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        let out = simulate(&cfg, false).unwrap();
        let text = std::fs::read_to_string(&out.csi_path).unwrap();
        let k = cfg.ofdm.active_subcarriers;
        assert_eq!(text.lines().count(), 1 + 10 * 3 * 2 * k);
        assert_eq!(out.link.events.len(), 10);
    }

    #[test]
    fn too_few_snapshots_for_k_min() {
        let cfg = RunConfig { k_min: 50, ..small(Path::new(".")) };
        let scene = Scenario::desk_default();
        let data = crate::ofdm::collect_dataset(&scene, &cfg.ofdm, 1, 0).unwrap();
        assert!(matches!(train_snapshots(&data, &cfg), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn heatmap_has_one_row_per_located_event() {
        let scene = Scenario::desk_default();
        let report = EvaluationReport {
            accuracy: 1.0,
            ari: 1.0,
            event_ids: vec![],
            confusion: vec![],
            positioning_errors: vec![],
            median_error: None,
            mean_error: None,
            detection_misses: 0,
            matched_map: vec![],
            per_event_accuracy: Default::default(),
        };
        let mut buf = Vec::new();
        write_heatmap(&scene, &report, &mut buf).unwrap();
        let located = scene.events.iter().filter(|e| e.reference_point.is_some()).count();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + located);
    }
}
