use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Hyperspectral dental image pipeline.
#[derive(Debug, Parser)]
#[command(name = "specseg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a cube to an sRGB PPM image.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use the original observer even when the camera misses part of the
        /// visible range.
        #[arg(long)]
        no_cmf_correction: bool,
    },
    /// Resample a cube onto the 170-band 450-950 nm grid.
    Resample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count annotated pixels and images per class.
    Census {
        #[arg(long)]
        manifest: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail unless the counts equal the full dataset's reference table.
        #[arg(long)]
        check_reference: bool,
    },
    /// Tag every image of a manifest train or test.
    Split {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        test_probability: f64,
        /// Write the validation report here as well as to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train the per-pixel classifier on the train images of a manifest.
    TrainPixel {
        #[arg(long)]
        manifest: PathBuf,
        /// `rgbpixel` or `spixel`.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        momentum: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Predict every annotated pixel of the test images.
    PredictPixel {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Directory receiving `<image_id>.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Predict every image instead of only the test images.
        #[arg(long)]
        all: bool,
    },
    /// Class-based and image-based metrics of a prediction directory.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Text report; the class table also goes to `<report>.csv`.
        #[arg(long)]
        report: PathBuf,
    },
    /// Sanity checks of the embedded tables and transfer functions.
    Selftest,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("HSCB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("HSCB_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Convert {
            input,
            out,
            no_cmf_correction,
        } => commands::convert(&input, &out, !no_cmf_correction),
        Command::Resample { input, out } => commands::resample(&input, &out),
        Command::Census {
            manifest,
            out,
            check_reference,
        } => commands::census(&manifest, out.as_deref(), check_reference),
        Command::Split {
            manifest,
            out,
            seed,
            test_probability,
            report,
        } => commands::split(&manifest, &out, seed, test_probability, report.as_deref()),
        Command::TrainPixel {
            manifest,
            mode,
            out,
            history,
            seed,
            epochs,
            learning_rate,
            momentum,
            batch_size,
        } => {
            let mut cfg = specseg::TrainConfig {
                seed,
                ..Default::default()
            };
            if let Some(v) = epochs {
                cfg.epochs = v;
            }
            if let Some(v) = learning_rate {
                cfg.learning_rate = v;
            }
            if let Some(v) = momentum {
                cfg.momentum = v;
            }
            if let Some(v) = batch_size {
                cfg.batch_size = v;
            }
            commands::train_pixel(&manifest, &mode, &out, history.as_deref(), &cfg)
        }
        Command::PredictPixel {
            manifest,
            model,
            out,
            all,
        } => commands::predict_pixel(&manifest, &model, &out, all),
        Command::Eval {
            manifest,
            predictions,
            report,
        } => commands::eval(&manifest, &predictions, &report),
        Command::Selftest => commands::selftest(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
