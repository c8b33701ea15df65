use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use stormcast::synth::CorpusSpec;
use stormcast_cli::commands::{self, balance_line};
use stormcast_cli::transport::HttpTransport;
use stormcast_cli::{CliError, CliResult, RunConfig};

/// Next-day geomagnetic storm forecasts from SDO/HMI continuum images.
#[derive(Parser)]
#[command(name = "stormcast", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set svm.c=10`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Never touch the network.
    #[arg(long, global = true)]
    offline: bool,
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download daily 00:00 images into the cache.
    Fetch {
        #[arg(long)]
        start: NaiveDate,
        #[arg(long)]
        end: NaiveDate,
    },
    /// Count sunspots and regions for every image not yet in the features CSV.
    Extract {
        /// Directory of `YYYYMMDD_*.png|jpg` images or an image cache.
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-stage PNGs for every processed date here.
        #[arg(long)]
        debug_dir: Option<PathBuf>,
        /// Stop after this many new dates.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Pair feature records with Kp labels.
    Dataset {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        kp: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split, scale, oversample and train the SVM.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Score the held-out split and write ROC, JSON and table reports.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// SWPC 3-day forecast archive for the baseline rows.
        #[arg(long)]
        swpc: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pearson correlation of 10R + S against SILSO daily numbers.
    Correlate {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        silso: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast tomorrow from today's and yesterday's images.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        today: PathBuf,
        #[arg(long)]
        yesterday: PathBuf,
        /// Yesterday was a storm day.
        #[arg(long)]
        prev_storm: bool,
    },
    /// Generate a synthetic corpus (images, Kp file, truth.json).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        days: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "2013-01-01")]
        start: NaiveDate,
    },
    /// Render one noiseless synthetic sun.
    Render {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        spots: usize,
        #[arg(long)]
        groups: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// extract, dataset, train and evaluate in one working directory.
    Run {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        kp: PathBuf,
        #[arg(long)]
        swpc: Option<PathBuf>,
        #[arg(long)]
        work: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    cfg.offline |= cli.offline;
    let p = cfg.paths.clone();
    let or = |v: Option<PathBuf>, d: &PathBuf| v.unwrap_or_else(|| d.clone());

    match cli.command {
        Command::Fetch { start, end } => {
            let out = commands::cmd_fetch(&cfg, start, end, &HttpTransport::default())?;
            println!(
                "{} day(s) available ({} from cache), {} gap(s)",
                out.manifest.entries.len(),
                out.cached,
                out.gaps.len()
            );
            for (d, why) in &out.gaps {
                println!("  gap {d}: {why}");
            }
        }
        Command::Extract { images, out, debug_dir, limit } => {
            let images = or(images, &p.cache.join("images"));
            let out = or(out, &p.features);
            let s = commands::cmd_extract(&cfg, &images, &out, debug_dir.as_deref(), limit)?;
            println!(
                "{} extracted, {} already present, {} failed; {} records in {}",
                s.extracted,
                s.already_present,
                s.failed.len(),
                s.total_records,
                out.display()
            );
        }
        Command::Dataset { features, kp, out } => {
            let out = or(out, &p.dataset);
            let a = commands::cmd_dataset(&or(features, &p.features), &kp, &out)?;
            println!(
                "{} examples written to {}, {} dates skipped",
                a.examples.len(),
                out.display(),
                a.skipped.len()
            );
        }
        Command::Train { dataset, model } => {
            let model = or(model, &p.model);
            let t = commands::cmd_train(&cfg, &or(dataset, &p.dataset), &model)?;
            println!("{} train / {} test examples", t.train_size, t.test_size);
            println!("{}", balance_line("before SMOTE", &t.summary.before_smote));
            println!("{}", balance_line("after SMOTE ", &t.summary.after_smote));
            println!(
                "gamma {:.6}, {} support vectors, {} iterations{}",
                t.summary.gamma,
                t.summary.support_vectors,
                t.summary.iterations,
                if t.summary.converged { "" } else { " (NOT converged)" }
            );
            println!("model written to {}", model.display());
        }
        Command::Evaluate { model, dataset, swpc, out } => {
            let e = commands::cmd_evaluate(
                &cfg,
                &or(model, &p.model),
                &or(dataset, &p.dataset),
                swpc.as_deref(),
                &or(out, &p.reports),
            )?;
            print!("{}", e.table);
        }
        Command::Correlate { features, silso, out } => {
            let c = commands::cmd_correlate(&cfg, &or(features, &p.features), &silso, out.as_deref())?;
            println!(
                "PCC {:.4}, mean(10R+S - SESC) {:.2} over {} days",
                c.pcc, c.mean_diff, c.n_matched
            );
        }
        Command::Predict { model, today, yesterday, prev_storm } => {
            let f = commands::cmd_predict(&cfg, &or(model, &p.model), &today, &yesterday, prev_storm)?;
            println!("{} {:.6}", f.class, f.decision_value);
        }
        Command::Synth { out, days, seed, start } => {
            let spec = CorpusSpec {
                days,
                seed,
                start,
                ..CorpusSpec::default()
            };
            let c = commands::cmd_synth(&out, &spec)?;
            println!("{} images and {} written", c.days.len(), c.kp_file.display());
        }
        Command::Render { out, spots, groups, seed } => {
            commands::cmd_render(&out, spots, groups, seed)?;
        }
        Command::Run { images, kp, swpc, work } => {
            let r = commands::cmd_run(&cfg, &images, &kp, swpc.as_deref(), &work)?;
            println!("{} records, {} examples", r.extract.total_records, r.examples);
            println!("{}", balance_line("before SMOTE", &r.train.summary.before_smote));
            println!("{}", balance_line("after SMOTE ", &r.train.summary.after_smote));
            print!("{}", r.evaluate.table);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            let e = CliError::Internal("unexpected panic".into());
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
