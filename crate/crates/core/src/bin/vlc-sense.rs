use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vlc_sense::cluster::KMeansParams;
use vlc_sense::ofdm::OfdmConfig;
use vlc_sense::pipeline::{self, RunConfig};
use vlc_sense::scene::{validate_scenario, Scenario};
use vlc_sense::Error;

/// Device-free indoor monitoring over a simulated VLC link.
#[derive(Parser)]
#[command(name = "vlc-sense", version)]
struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario file utilities.
    Scene {
        #[command(subcommand)]
        action: SceneAction,
    },
    /// Simulate CSI snapshots for every event; writes csi.csv and link.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        snapshots: usize,
        /// Per-subcarrier receiver SNR in dB; `inf` disables noise.
        #[arg(long, default_value_t = OfdmConfig::default().snr_db)]
        snr_db: f64,
        /// QAM order of the data symbols (4, 16 or 64).
        #[arg(long, default_value_t = 4)]
        qam: u32,
        /// Also write the channel taps as taps.csv.
        #[arg(long)]
        taps: bool,
    },
    /// Cluster a CSI dataset without its labels; writes model.json.
    Train {
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        /// Largest k tried [default: min(n - 1, 2 x events)].
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long, default_value_t = KMeansParams::default().restarts)]
        restarts: usize,
    },
    /// Score a model against a labeled dataset; writes report.json and heatmap.csv.
    Evaluate {
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum SceneAction {
    /// Check a scenario JSON file; prints OK or one violation per line.
    Validate { file: PathBuf },
    /// Print the bundled desk scenario as JSON.
    Default,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON [default: bundled desk scenario].
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn config(self) -> RunConfig {
        RunConfig {
            scenario_path: self.scenario,
            seed: self.seed,
            output_dir: self.out,
            ..RunConfig::default()
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Scene { action: SceneAction::Validate { file } } => {
            let violations = validate_scenario(&Scenario::load(&file)?);
            if violations.is_empty() {
                println!("OK");
                Ok(())
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Err(Error::InvalidScenario(violations))
            }
        }
        Command::Scene { action: SceneAction::Default } => {
            println!("{}", Scenario::desk_default().to_json_pretty());
            Ok(())
        }
        Command::Simulate { common, snapshots, snr_db, qam, taps } => {
            let mut cfg = common.config();
            cfg.snapshots_per_event = snapshots;
            cfg.ofdm.snr_db = snr_db;
            cfg.ofdm.qam_order = qam;
            let out = pipeline::simulate(&cfg, taps)?;
            println!("wrote {} ({} snapshots)", out.csi_path.display(), out.snapshots.len());
            for q in &out.link.events {
                println!("event {:>3}: data BER {:.3e} over {} bits", q.event_id, q.mean_ber, q.bits);
            }
            println!("wrote {}", out.link_path.display());
            Ok(())
        }
        Command::Train { dataset, common, k_min, k_max, restarts } => {
            let mut cfg = common.config();
            cfg.k_min = k_min;
            cfg.k_max = k_max;
            cfg.kmeans.restarts = restarts;
            let model = pipeline::train(&dataset, &cfg)?;
            for (k, s) in &model.silhouette_by_k {
                eprintln!("k = {k:>2}: silhouette {s:.4}");
            }
            println!("selected k = {}", model.k);
            println!("wrote {}", cfg.output_dir.join(pipeline::MODEL_FILE).display());
            Ok(())
        }
        Command::Evaluate { dataset, model, common } => {
            let cfg = common.config();
            let file = pipeline::evaluate(&dataset, &model, &cfg)?;
            let r = &file.report;
            let meters = |v: Option<f64>| v.map_or("n/a".to_string(), |m| format!("{m:.4} m"));
            println!("accuracy {:.4}, ARI {:.4}", r.accuracy, r.ari);
            println!(
                "median error {}, mean error {}, detection misses {}",
                meters(r.median_error),
                meters(r.mean_error),
                r.detection_misses
            );
            println!("wrote {}", cfg.output_dir.join(pipeline::REPORT_FILE).display());
            println!("wrote {}", cfg.output_dir.join(pipeline::HEATMAP_FILE).display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(1);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error[invalid-input]: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
