//! DCO-OFDM waveform: Hermitian spectrum assembly, IFFT, cyclic prefix,
//! DC bias and clipping, plus the matching receiver front end.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::OfdmConfig;
use crate::error::{Error, Result};

/// Places `symbols` on bins `1..=K` and their conjugates on `N-1..=N-K`,
/// leaving DC and Nyquist empty so the inverse transform is real.
pub fn hermitian_assemble(symbols: &[Complex64], fft_size: usize) -> Result<Vec<Complex64>> {
    let k = symbols.len();
    if fft_size < 4 || k + 1 > fft_size / 2 {
        return Err(Error::invalid(format!(
            "hermitian_assemble: {k} subcarriers do not fit an FFT of size {fft_size} (max {})",
            (fft_size / 2).saturating_sub(1)
        )));
    }
    let mut spectrum = vec![Complex64::new(0.0, 0.0); fft_size];
    for (i, s) in symbols.iter().enumerate() {
        spectrum[i + 1] = *s;
        spectrum[fft_size - i - 1] = s.conj();
    }
    Ok(spectrum)
}

/// Inverse FFT with `1/N` normalization.
pub fn ifft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
    buf
}

/// Unnormalized forward FFT.
pub fn fft(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Nonnegative drive signal of one frame plus the affine map applied to
/// the raw IFFT output, so a receiver can undo it.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    /// Multiplier applied to the IFFT output.
    pub scale: f64,
    /// Offset added after scaling.
    pub bias: f64,
    /// Number of samples clipped to zero.
    pub clipped: usize,
}

/// Modulates a symbol grid (rows are OFDM symbols, columns are active
/// subcarriers) into a real, nonnegative sample stream.
///
/// Each symbol is scaled by `N / sqrt(2K)`, the reciprocal of the expected
/// standard deviation of a unit-energy Hermitian frame, then offset by
/// `dc_bias` and clipped at zero.
pub fn modulate(cfg: &OfdmConfig, grid: &Array2<Complex64>) -> Result<Waveform> {
    if grid.ncols() != cfg.active_subcarriers {
        return Err(Error::invalid(format!(
            "modulate: grid has {} columns, config has {} active subcarriers",
            grid.ncols(),
            cfg.active_subcarriers
        )));
    }
    let n = cfg.fft_size;
    let scale = n as f64 / (2.0 * cfg.active_subcarriers as f64).sqrt();
    let bias = cfg.dc_bias;
    let mut samples = Vec::with_capacity(grid.nrows() * (n + cfg.cp_len));
    let mut clipped = 0;
    for row in grid.rows() {
        let symbols: Vec<Complex64> = row.to_vec();
        let time = ifft(&hermitian_assemble(&symbols, n)?);
        for x in time[n - cfg.cp_len..].iter().chain(time.iter()) {
            let v = x.re * scale + bias;
            if v < 0.0 {
                clipped += 1;
                samples.push(0.0);
            } else {
                samples.push(v);
            }
        }
    }
    Ok(Waveform {
        samples,
        scale,
        bias,
        clipped,
    })
}

/// Receiver front end for a channel-free frame: undo bias and scale, drop
/// each cyclic prefix, FFT, and read back the active subcarriers.
pub fn demodulate(cfg: &OfdmConfig, wave: &Waveform) -> Result<Array2<Complex64>> {
    let n = cfg.fft_size;
    let sym_len = n + cfg.cp_len;
    if !wave.samples.len().is_multiple_of(sym_len) {
        return Err(Error::invalid(format!(
            "demodulate: {} samples is not a whole number of {sym_len}-sample symbols",
            wave.samples.len()
        )));
    }
    let n_sym = wave.samples.len() / sym_len;
    let k = cfg.active_subcarriers;
    let mut grid = Array2::zeros((n_sym, k));
    for (s, chunk) in wave.samples.chunks_exact(sym_len).enumerate() {
        let body: Vec<Complex64> = chunk[cfg.cp_len..]
            .iter()
            .map(|&v| Complex64::new((v - wave.bias) / wave.scale, 0.0))
            .collect();
        let spectrum = fft(&body);
        for j in 0..k {
            grid[[s, j]] = spectrum[j + 1];
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::qam::Qam;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_grid(rows: usize, k: usize, seed: u64) -> Array2<Complex64> {
        let q = Qam::new(4).unwrap();
        let mut rng = stream_rng(seed, 0);
        let bits: Vec<u8> = (0..rows * k * 2).map(|_| rng.gen_range(0..2)).collect();
        Array2::from_shape_vec((rows, k), q.map(&bits).unwrap()).unwrap()
    }

    #[test]
    fn assemble_small() {
        let x = hermitian_assemble(&[Complex64::new(1.0, 1.0)], 8).unwrap();
        let z = Complex64::new(0.0, 0.0);
        assert_eq!(x, vec![z, Complex64::new(1.0, 1.0), z, z, z, z, z, Complex64::new(1.0, -1.0)]);
    }

    #[test]
    fn assemble_rejects_too_many() {
        let s = vec![Complex64::new(1.0, 0.0); 4];
        assert!(hermitian_assemble(&s, 8).is_err());
        assert!(hermitian_assemble(&s[..3], 8).is_ok());
    }

    #[test]
    fn assembled_energy_doubles() {
        let g = random_grid(1, 24, 3);
        let syms = g.row(0).to_vec();
        let x = hermitian_assemble(&syms, 64).unwrap();
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let es: f64 = syms.iter().map(|v| v.norm_sqr()).sum();
        assert!((ex - 2.0 * es).abs() < 1e-12);
    }

    #[test]
    fn frame_round_trip_without_channel() {
        let cfg = OfdmConfig::default();
        let grid = random_grid(6, cfg.active_subcarriers, 11);
        let wave = modulate(&cfg, &grid).unwrap();
        assert_eq!(wave.clipped, 0);
        assert!(wave.samples.iter().all(|&v| v >= 0.0));
        let back = demodulate(&cfg, &wave).unwrap();
        let err = (&back - &grid).iter().map(|d| d.norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn clipping_is_rare_at_13db_bias() {
        // Roughly 1e6 samples; a Gaussian tail at 4.47 sigma predicts ~4e-6.
        let cfg = OfdmConfig::default();
        let rows = 1_000_000 / (cfg.fft_size + cfg.cp_len) + 1;
        let grid = random_grid(rows, cfg.active_subcarriers, 5);
        let wave = modulate(&cfg, &grid).unwrap();
        assert!(wave.samples.len() >= 1_000_000);
        let frac = wave.clipped as f64 / wave.samples.len() as f64;
        assert!(frac < 1e-4, "clipped fraction {frac}");
        assert!(wave.samples.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn zero_bias_clips_and_stays_nonnegative() {
        let mut cfg = OfdmConfig::default();
        cfg.dc_bias = 0.0;
        let wave = modulate(&cfg, &random_grid(10, cfg.active_subcarriers, 2)).unwrap();
        assert!(wave.clipped > 0);
        assert!(wave.samples.iter().all(|&v| v >= 0.0));
    }

    proptest! {
        #[test]
        fn fft_round_trip(log_n in 3u32..11, seed in any::<u64>()) {
            let n = 1usize << log_n;
            let mut rng = stream_rng(seed, 1);
            let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let back = ifft(&fft(&x));
            let err = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-9);
        }

        #[test]
        fn hermitian_spectrum_gives_real_signal(log_n in 3u32..11, seed in any::<u64>()) {
            let n = 1usize << log_n;
            let mut rng = stream_rng(seed, 2);
            let k = rng.gen_range(1..n / 2);
            let syms: Vec<Complex64> = (0..k).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let t = ifft(&hermitian_assemble(&syms, n).unwrap());
            let max_imag = t.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
            prop_assert!(max_imag < 1e-9);
        }
    }
}
