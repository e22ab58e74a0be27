use ndarray::{Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::OfdmConfig;
use crate::channel::ChannelResponse;
use crate::error::{Error, Result};
use crate::rng::{splitmix64, stream_rng};

const PILOT_SEED: u64 = 0x5049_4C4F_545F_5345;

/// Known block-pilot grid: `n_pilot_symbols × K` fixed QPSK symbols.
pub fn pilot_grid(cfg: &OfdmConfig) -> Array2<Complex64> {
    let (rows, k) = (cfg.n_pilot_symbols, cfg.active_subcarriers);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Array2::from_shape_fn((rows, k), |(s, j)| {
        let word = splitmix64(PILOT_SEED.wrapping_add((s * k + j) as u64));
        let i = if word & 1 == 0 { r } else { -r };
        let q = if word & 2 == 0 { r } else { -r };
        Complex64::new(i, q)
    })
}

/// Passes a transmitted symbol grid through each photodetector's channel
/// and adds circular complex Gaussian noise.
///
/// The noise variance for photodetector `p` is `mean_k |h_p[k]|² / SNR`,
/// so `snr_db` is the average per-subcarrier SNR of that receiver. Noise
/// is drawn from the stream `stream_rng(seed, 0)` in (pd, symbol,
/// subcarrier) order, real part first.
pub fn apply_channel(
    cfg: &OfdmConfig,
    grid: ArrayView2<Complex64>,
    responses: &[ChannelResponse],
    seed: u64,
) -> Result<Vec<Array2<Complex64>>> {
    let k = cfg.active_subcarriers;
    if grid.ncols() != k {
        return Err(Error::invalid(format!(
            "apply_channel: grid has {} columns, expected {k}",
            grid.ncols()
        )));
    }
    let freqs = cfg.subcarrier_freqs();
    for r in responses {
        let matches = r.freqs.len() == k
            && r.h.len() == k
            && r.freqs
                .iter()
                .zip(&freqs)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs());
        if !matches {
            return Err(Error::invalid(format!(
                "apply_channel: response for pd {} is not sampled at the {k} active subcarrier frequencies",
                r.pd_index
            )));
        }
    }

    let mut rng = stream_rng(seed, 0);
    let snr = cfg.snr_linear();
    let mut out = Vec::with_capacity(responses.len());
    for r in responses {
        let mut y = Array2::from_shape_fn(grid.dim(), |(s, j)| r.h[j] * grid[[s, j]]);
        if !cfg.is_noiseless() {
            let mean_power = r.h.iter().map(|h| h.norm_sqr()).sum::<f64>() / k as f64;
            let sigma = (mean_power / snr / 2.0).sqrt();
            for v in y.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += Complex64::new(re * sigma, im * sigma);
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Least-squares estimate per photodetector and subcarrier: the mean over
/// pilot symbols of `Y / X`. No smoothing across subcarriers.
pub fn estimate_csi(
    cfg: &OfdmConfig,
    received_pilots: &[Array2<Complex64>],
    known_pilots: ArrayView2<Complex64>,
) -> Result<Array2<Complex64>> {
    let k = cfg.active_subcarriers;
    let n = known_pilots.nrows();
    if n == 0 || known_pilots.ncols() != k {
        return Err(Error::invalid(format!(
            "estimate_csi: pilot grid is {}x{}, expected nx{k} with n >= 1",
            n,
            known_pilots.ncols()
        )));
    }
    if let Some(((s, j), _)) = known_pilots.indexed_iter().find(|(_, x)| x.norm_sqr() == 0.0) {
        return Err(Error::invalid(format!("estimate_csi: zero pilot at symbol {s}, subcarrier {j}")));
    }
    let mut h = Array2::zeros((received_pilots.len(), k));
    for (p, y) in received_pilots.iter().enumerate() {
        if y.dim() != known_pilots.dim() {
            return Err(Error::invalid(format!(
                "estimate_csi: received pilots for pd {p} are {:?}, expected {:?}",
                y.dim(),
                known_pilots.dim()
            )));
        }
        for j in 0..k {
            let sum: Complex64 = (0..n).map(|s| y[[s, j]] / known_pilots[[s, j]]).sum();
            h[[p, j]] = sum / n as f64;
        }
    }
    Ok(h)
}

/// One-tap zero-forcing equalization followed by hard QAM demapping.
pub fn equalize_and_demap(
    cfg: &OfdmConfig,
    received: ArrayView2<Complex64>,
    h_est: ArrayView1<Complex64>,
    pd: usize,
) -> Result<Vec<u8>> {
    let qam = cfg.qam()?;
    if received.ncols() != h_est.len() {
        return Err(Error::invalid(format!(
            "equalize_and_demap: {} subcarriers received, {} channel estimates",
            received.ncols(),
            h_est.len()
        )));
    }
    if let Some(j) = h_est.iter().position(|h| h.norm_sqr() == 0.0) {
        return Err(Error::EqualizationSingularity { pd, subcarrier: j + 1 });
    }
    let equalized: Vec<Complex64> = received
        .rows()
        .into_iter()
        .flat_map(|row| row.iter().zip(h_est.iter()).map(|(y, h)| y / h).collect::<Vec<_>>())
        .collect();
    Ok(qam.demap(&equalized))
}

/// Fraction of differing bits.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::invalid(format!("ber: lengths differ ({} vs {})", tx.len(), rx.len())));
    }
    if tx.is_empty() {
        return Ok(0.0);
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / tx.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::s;

    fn flat_response(cfg: &OfdmConfig, h: Complex64) -> ChannelResponse {
        ChannelResponse {
            pd_index: 0,
            event_id: 0,
            freqs: cfg.subcarrier_freqs(),
            h: vec![h; cfg.active_subcarriers],
        }
    }

    #[test]
    fn noiseless_channel_is_exact_product() {
        let mut cfg = OfdmConfig::default();
        cfg.snr_db = f64::INFINITY;
        let x = pilot_grid(&cfg);
        let h = Complex64::from_polar(0.3, 1.0);
        let y = apply_channel(&cfg, x.view(), &[flat_response(&cfg, h)], 9).unwrap();
        assert_eq!(y[0], x.mapv(|v| h * v));
    }

    #[test]
    fn noise_power_matches_snr() {
        let mut cfg = OfdmConfig::default();
        cfg.snr_db = 10.0;
        let rows = 100_000 / cfg.active_subcarriers + 1;
        let zeros = Array2::<Complex64>::zeros((rows, cfg.active_subcarriers));
        let y = apply_channel(&cfg, zeros.view(), &[flat_response(&cfg, Complex64::new(1.0, 0.0))], 4).unwrap();
        let power = y[0].iter().map(|w| w.norm_sqr()).sum::<f64>() / y[0].len() as f64;
        assert!((power - 0.1).abs() < 0.003, "{power}");
    }

    #[test]
    fn same_seed_same_noise() {
        let cfg = OfdmConfig::default();
        let x = pilot_grid(&cfg);
        let r = [flat_response(&cfg, Complex64::new(1.0, 0.0))];
        assert_eq!(
            apply_channel(&cfg, x.view(), &r, 3).unwrap(),
            apply_channel(&cfg, x.view(), &r, 3).unwrap()
        );
        assert_ne!(
            apply_channel(&cfg, x.view(), &r, 3).unwrap(),
            apply_channel(&cfg, x.view(), &r, 4).unwrap()
        );
    }

    #[test]
    fn frequency_mismatch_rejected() {
        let cfg = OfdmConfig::default();
        let mut r = flat_response(&cfg, Complex64::new(1.0, 0.0));
        r.freqs[3] += 1.0;
        assert!(apply_channel(&cfg, pilot_grid(&cfg).view(), &[r], 0).is_err());
    }

    #[test]
    fn noiseless_flat_estimate_is_exact() {
        let mut cfg = OfdmConfig::default();
        cfg.snr_db = f64::INFINITY;
        let h = Complex64::from_polar(0.5, std::f64::consts::FRAC_PI_4);
        let x = pilot_grid(&cfg);
        let y = apply_channel(&cfg, x.view(), &[flat_response(&cfg, h)], 0).unwrap();
        let est = estimate_csi(&cfg, &y, x.view()).unwrap();
        for v in est.iter() {
            assert!((v - h).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_pilot_rejected() {
        let cfg = OfdmConfig::default();
        let mut x = pilot_grid(&cfg);
        x[[1, 2]] = Complex64::new(0.0, 0.0);
        let y = vec![x.clone()];
        assert!(matches!(estimate_csi(&cfg, &y, x.view()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn zero_estimate_is_singular() {
        let cfg = OfdmConfig::default();
        let y = Array2::<Complex64>::ones((2, cfg.active_subcarriers));
        let mut h = ndarray::Array1::<Complex64>::ones(cfg.active_subcarriers);
        h[5] = Complex64::new(0.0, 0.0);
        let err = equalize_and_demap(&cfg, y.view(), h.view(), 1).unwrap_err();
        assert!(matches!(err, Error::EqualizationSingularity { pd: 1, subcarrier: 6 }));
    }

    #[test]
    fn ber_extremes() {
        let b = vec![0u8, 1, 1, 0, 1];
        let nb: Vec<u8> = b.iter().map(|x| 1 - x).collect();
        assert_eq!(ber(&b, &b).unwrap(), 0.0);
        assert_eq!(ber(&b, &nb).unwrap(), 1.0);
        assert!(ber(&b, &b[..2]).is_err());
    }

    #[test]
    fn noiseless_end_to_end_recovers_bits() {
        let mut cfg = OfdmConfig::default();
        cfg.snr_db = f64::INFINITY;
        cfg.qam_order = 64;
        let qam = cfg.qam().unwrap();
        let k = cfg.active_subcarriers;
        let bits: Vec<u8> = (0..3 * k * qam.bits_per_symbol()).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
        let data = Array2::from_shape_vec((3, k), qam.map(&bits).unwrap()).unwrap();
        let pilots = pilot_grid(&cfg);
        let grid = ndarray::concatenate![ndarray::Axis(0), pilots, data];
        let resp = ChannelResponse {
            pd_index: 0,
            event_id: 0,
            freqs: cfg.subcarrier_freqs(),
            h: (0..k).map(|j| Complex64::from_polar(1e-5 * (1.0 + j as f64), 0.3 * j as f64)).collect(),
        };
        let y = apply_channel(&cfg, grid.view(), &[resp], 0).unwrap();
        let rx_pilots = vec![y[0].slice(s![..cfg.n_pilot_symbols, ..]).to_owned()];
        let h = estimate_csi(&cfg, &rx_pilots, pilots.view()).unwrap();
        let out = equalize_and_demap(&cfg, y[0].slice(s![cfg.n_pilot_symbols.., ..]), h.row(0), 0).unwrap();
        assert_eq!(out, bits);
    }
}
