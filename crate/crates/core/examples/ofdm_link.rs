//! DCO-OFDM link: waveform statistics, QPSK over a flat AWGN channel
//! against the closed form Q(sqrt(SNR)), and data BER over the bundled
//! channel for each QAM order.
//!
//! ```text
//! cargo run --release --example ofdm_link
//! ```

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use statrs::function::erf::erfc;
use vlc_sense::channel::ChannelResponse;
use vlc_sense::ofdm::{apply_channel, ber, collect_dataset_with_link, demodulate, equalize_and_demap, modulate, Qam, OfdmConfig};
use vlc_sense::rng::stream_rng;
use vlc_sense::scene::Scenario;

fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn main() -> vlc_sense::Result<()> {
    let cfg = OfdmConfig::default();
    let k = cfg.active_subcarriers;
    let qpsk = Qam::new(4)?;
    let mut rng = stream_rng(5, 0);

    let symbols = 2000;
    let bits: Vec<u8> = (0..symbols * k * 2).map(|_| rng.gen_range(0..2)).collect();
    let grid = Array2::from_shape_vec((symbols, k), qpsk.map(&bits)?).expect("grid shape");
    let wave = modulate(&cfg, &grid)?;
    let back = demodulate(&cfg, &wave)?;
    let err = grid.iter().zip(back.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mean = wave.samples.iter().sum::<f64>() / wave.samples.len() as f64;
    println!(
        "waveform: {} samples, mean {mean:.3} (bias {:.3}), {} clipped, round-trip error {err:.1e}",
        wave.samples.len(),
        wave.bias,
        wave.clipped
    );

    // Flat channel, equalized with the true gain: plain AWGN.
    let awgn = OfdmConfig { snr_db: 10.0, ..cfg.clone() };
    let flat = ChannelResponse {
        pd_index: 0,
        event_id: 0,
        freqs: awgn.subcarrier_freqs(),
        h: vec![Complex64::new(1.0, 0.0); k],
    };
    let rx = apply_channel(&awgn, back.view(), &[flat], 11)?;
    let rx_bits = equalize_and_demap(&awgn, rx[0].view(), Array1::from_elem(k, Complex64::new(1.0, 0.0)).view(), 0)?;
    println!(
        "QPSK, flat channel at 10 dB: BER {:.3e} over {} bits, Q(sqrt(10)) = {:.3e}",
        ber(&bits, &rx_bits)?,
        bits.len(),
        q_function(10f64.sqrt())
    );

    // The desk channel rolls off across the band, so the upper subcarriers
    // run below the nominal SNR and estimated CSI adds its own noise.
    let scene = Scenario::desk_default();
    println!("desk channel, estimated CSI:");
    println!("{:>6} {:>12} {:>12} {:>12}", "snr_db", "QPSK", "16-QAM", "64-QAM");
    for snr_db in [10.0, 20.0, 30.0, 40.0, f64::INFINITY] {
        let mut row = format!("{snr_db:>6}");
        for qam_order in [4, 16, 64] {
            let cfg = OfdmConfig { snr_db, qam_order, ..OfdmConfig::default() };
            let link = collect_dataset_with_link(&scene, &cfg, 20, 7)?.link;
            let errors: f64 = link.iter().map(|q| q.mean_ber * q.bits as f64).sum();
            let bits: u64 = link.iter().map(|q| q.bits).sum();
            row += &format!(" {:>12.3e}", errors / bits as f64);
        }
        println!("{row}");
    }
    Ok(())
}
