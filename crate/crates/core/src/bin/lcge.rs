use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lcge::config::HallucinationConfig;
use lcge::image::{read_png, write_png};
use lcge::pipeline::{
    build_databases, evaluate_loo, hallucinate, prepare_all, read_landmarks, train_models, DatabaseSet,
    DatasetManifest, ModelSet, Sample, Split,
};
use lcge::synth::{write_dataset, DatasetSpec};

/// Face hallucination with per-component CNNs and exemplar enhancement.
#[derive(Parser)]
#[command(name = "lcge", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config file of `key = value` lines
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    scale: Option<usize>,
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train the five component networks on a manifest's training faces
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory for the weights files
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and save the patch databases from every face of a manifest
    BuildDb {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hallucinate one low-resolution image
    Hallucinate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Landmarks in output pixel coordinates
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-out evaluation; writes a CSV and prints a table
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the plain-text table here
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Write a synthetic face dataset with a manifest
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        train: usize,
        #[arg(long, default_value_t = 16)]
        test: usize,
        #[arg(long, default_value_t = 160)]
        width: usize,
        #[arg(long, default_value_t = 120)]
        height: usize,
    },
}

fn config(g: &Global) -> lcge::Result<HallucinationConfig> {
    let mut cfg = match &g.config {
        Some(path) => HallucinationConfig::load(path)?,
        None => HallucinationConfig::default(),
    };
    for kv in &g.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| lcge::Error::InvalidArgument(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k, v)?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(scale) = g.scale {
        cfg.scale = scale;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_samples(manifest: &DatasetManifest) -> lcge::Result<Vec<Sample>> {
    manifest.entries.iter().map(Sample::load).collect()
}

fn run(cli: Cli) -> lcge::Result<()> {
    let cfg = config(&cli.global)?;
    match cli.command {
        Command::Train { manifest, out } => {
            let m = DatasetManifest::load(&manifest)?;
            let data = prepare_all(&load_samples(&m)?, &cfg)?;
            let mut train: Vec<_> = data.iter().filter(|p| p.split == Split::Train).collect();
            if train.is_empty() {
                train = data.iter().collect();
            }
            train_models(&train, &cfg)?.save(&out)?;
            println!("trained 5 networks on {} faces into {}", train.len(), out.display());
        }
        Command::BuildDb { manifest, models, out } => {
            let m = DatasetManifest::load(&manifest)?;
            let models = ModelSet::load(&models, cfg.train.architecture)?;
            let data = prepare_all(&load_samples(&m)?, &cfg)?;
            let all: Vec<_> = data.iter().collect();
            build_databases(&all, &models, &cfg)?.save(&out)?;
            println!("built databases from {} faces into {}", all.len(), out.display());
        }
        Command::Hallucinate {
            input,
            landmarks,
            models,
            db,
            out,
        } => {
            let lr = read_png(&input)?;
            let lms = read_landmarks(&landmarks, lr.width() * cfg.scale, lr.height() * cfg.scale)?;
            let models = ModelSet::load(&models, cfg.train.architecture)?;
            let dbs = DatabaseSet::load(&db, cfg.enhance_remainder)?;
            let hr = hallucinate(&lr, &lms, &models, &dbs, &cfg)?;
            write_png(&out, &hr)?;
            println!("wrote {}x{} image to {}", hr.width(), hr.height(), out.display());
        }
        Command::Evaluate { manifest, out, table } => {
            let m = DatasetManifest::load(&manifest)?;
            let report = evaluate_loo(&m, &cfg)?;
            report.write_csv(&out)?;
            let text = report.to_table();
            if let Some(path) = table {
                std::fs::write(&path, &text).map_err(|e| lcge::Error::from(e).at(&path))?;
            }
            print!("{text}");
        }
        Command::Synth {
            out,
            train,
            test,
            width,
            height,
        } => {
            let spec = DatasetSpec {
                train_subjects: train,
                test_subjects: test,
                width,
                height,
                seed: cfg.seed,
            };
            let manifest = write_dataset(&out, &spec)?;
            println!("wrote {} faces, manifest {}", train + test, manifest.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
