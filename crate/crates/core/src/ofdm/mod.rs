//! DCO-OFDM link with block-pilot least-squares channel estimation.
//!
//! The per-subcarrier estimates the receiver needs for equalization are the
//! same quantity exported as sensing observations ([`CsiSnapshot`]).

mod dataset;
mod link;
mod modem;
mod qam;

pub use dataset::{collect_dataset, collect_dataset_with_link, read_csi_csv, write_csi_csv, Collection, LinkQuality};
pub use link::{apply_channel, ber, equalize_and_demap, estimate_csi, pilot_grid};
pub use modem::{demodulate, fft, hermitian_assemble, ifft, modulate, Waveform};
pub use qam::{qam_demap, qam_map, Qam};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a DC bias given in dB to a multiple of the signal standard deviation.
pub fn bias_from_db(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Power of two, at least 8.
    pub fft_size: usize,
    /// Active subcarriers occupy bins `1..=active_subcarriers`.
    pub active_subcarriers: usize,
    pub cp_len: usize,
    /// 4, 16 or 64.
    pub qam_order: u32,
    pub n_pilot_symbols: usize,
    pub n_data_symbols: usize,
    /// Hertz.
    pub subcarrier_spacing: f64,
    /// DC offset in multiples of the signal standard deviation.
    pub dc_bias: f64,
    /// Per-subcarrier electrical SNR at the receiver. `+inf` disables noise.
    #[serde(with = "snr_serde")]
    pub snr_db: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            fft_size: 64,
            active_subcarriers: 24,
            cp_len: 8,
            qam_order: 4,
            n_pilot_symbols: 4,
            n_data_symbols: 8,
            subcarrier_spacing: 50e3,
            dc_bias: bias_from_db(13.0),
            snr_db: 25.0,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("fft_size {n} must be a power of two >= 8")));
        }
        if self.active_subcarriers == 0 || self.active_subcarriers > n / 2 - 1 {
            return Err(Error::invalid(format!(
                "active_subcarriers {} must be in 1..={}",
                self.active_subcarriers,
                n / 2 - 1
            )));
        }
        Qam::new(self.qam_order)?;
        if self.n_pilot_symbols == 0 {
            return Err(Error::invalid("n_pilot_symbols must be >= 1"));
        }
        if !(self.subcarrier_spacing > 0.0 && self.subcarrier_spacing.is_finite()) {
            return Err(Error::invalid("subcarrier_spacing must be > 0"));
        }
        if !(self.dc_bias >= 0.0 && self.dc_bias.is_finite()) {
            return Err(Error::invalid("dc_bias must be >= 0"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db must be a number or +inf"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    /// Linear per-subcarrier SNR.
    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Baseband frequencies of the active subcarriers, `k · spacing`.
    pub fn subcarrier_freqs(&self) -> Vec<f64> {
        (1..=self.active_subcarriers)
            .map(|k| k as f64 * self.subcarrier_spacing)
            .collect()
    }

    pub fn qam(&self) -> Result<Qam> {
        Qam::new(self.qam_order)
    }
}

/// JSON has no infinity; the noiseless setting is written as the string `"inf"`.
mod snr_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Num(*v).serialize(s)
        } else {
            Repr::Text(if *v > 0.0 { "inf" } else { "-inf" }.to_string()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Pilot-estimated channel gains for one observation: `P × K`, one row
/// per photodetector.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSnapshot {
    /// Ground truth, carried for evaluation only; absent when loaded from an
    /// unlabeled dataset.
    pub event_id: Option<u32>,
    pub snapshot_id: u64,
    pub h_est: Array2<Complex64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = OfdmConfig::default();
        cfg.validate().unwrap();
        assert!((cfg.dc_bias - 4.4668).abs() < 1e-4);
        assert_eq!(cfg.subcarrier_freqs().last().copied(), Some(1.2e6));
    }

    #[test]
    fn rejects_bad_numerology() {
        let mut cfg = OfdmConfig::default();
        cfg.fft_size = 48;
        assert!(cfg.validate().is_err());
        let mut cfg = OfdmConfig::default();
        cfg.active_subcarriers = 32;
        assert!(cfg.validate().is_err());
        let mut cfg = OfdmConfig::default();
        cfg.qam_order = 32;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noiseless_snr_survives_json() {
        let mut cfg = OfdmConfig::default();
        cfg.snr_db = f64::INFINITY;
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"snr_db\":\"inf\""));
        let back: OfdmConfig = serde_json::from_str(&text).unwrap();
        assert!(back.is_noiseless());
    }
}
