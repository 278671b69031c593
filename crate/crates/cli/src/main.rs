use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lvmap::config::ConfigDoc;
use lvmap::error::{Error, ErrorClass};
use lvmap::eval::EvalConfig;
use lvmap::pipeline::{self, PipelineConfig};

/// Lidar-visual radiance field mapping with per-modality uncertainty.
#[derive(Parser, Debug)]
#[command(name = "lvmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Pipeline config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `[pipeline] out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides `[pipeline] seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render frames, tracks and the reference cloud.
    Simulate,
    /// Split the trajectory into submaps.
    Partition,
    /// Train one field per submap.
    Train,
    /// Accumulate colour and depth Hessians.
    Hessian,
    /// Export, annotate and filter submap clouds.
    Filter,
    /// Merge the filtered submap clouds.
    Merge,
    /// Evaluate the merged cloud, or two arbitrary PLY files with `--recon`.
    Evaluate {
        #[arg(long, requires_all = ["reference", "trajectory"])]
        recon: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
        /// TUM trajectory; each point's sensor origin is the nearest pose.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Run every stage, or resume from `--stage`.
    Pipeline {
        #[arg(long)]
        stage: Option<String>,
    },
}

fn load_config(common: &Common) -> Result<PipelineConfig, Error> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "required for this command"))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn eval_config(common: &Common) -> Result<EvalConfig, Error> {
    match &common.config {
        None => Ok(EvalConfig::default()),
        Some(path) => EvalConfig::from_section(&ConfigDoc::load(path)?.section_or_empty("eval")),
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Command::Evaluate {
        recon: Some(recon),
        reference: Some(reference),
        trajectory: Some(trajectory),
    } = &cli.command
    {
        let report = pipeline::cmd_eval(recon, reference, trajectory, &eval_config(&cli.common)?)?;
        print!("{}", report.to_text());
        return Ok(());
    }
    let cfg = load_config(&cli.common)?;
    let out: &Path = &cfg.out;
    let stage = match &cli.command {
        Command::Simulate => "simulate",
        Command::Partition => "partition",
        Command::Train => "train",
        Command::Hessian => "hessian",
        Command::Filter => "filter",
        Command::Merge => "merge",
        Command::Evaluate { .. } => "evaluate",
        Command::Pipeline { stage } => {
            let report = pipeline::cmd_pipeline(&cfg, out, stage.as_deref())?;
            print!("{}", report.to_text());
            return Ok(());
        }
    };
    pipeline::write_snapshot(&cfg, out)?;
    pipeline::run_stage(&cfg, out, stage)?;
    if stage == "evaluate" {
        let path = pipeline::report_path(out);
        print!("{}", std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))?);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SILVR_LOG", "warn")).init();
    if cli.common.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Config => 2,
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            })
        }
    }
}
