use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sentdecomp_cli::config::{ENV_OUTPUT_DIR, ENV_SEED};
use sentdecomp_cli::{InStage, Overrides, Pipeline, PipelineConfig, Stage, StageError};

#[derive(Parser)]
#[command(name = "sentdecomp", version, about = "Decompose sentence embeddings into syntactic dictionary atoms")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "sentdecomp.toml")]
    config: PathBuf,
    /// Root seed; overrides `seed` in the config.
    #[arg(long, global = true, env = ENV_SEED)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true, env = ENV_OUTPUT_DIR)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate a synthetic corpus with a known dictionary.
    Synth,
    /// Load and check the corpus.
    Validate,
    /// Train POS, DEP and position probes.
    Probe,
    /// Train the dictionary model.
    DictTrain,
    /// Random hyperparameter search.
    Sweep,
    /// Atom statistics and corpus-level contributions.
    PoolAnalyze,
    /// Per-class attribution shares.
    Attribute,
    /// Summarize existing artifacts.
    Report,
    /// Every stage the config has a section for.
    All,
}

fn run(cli: &Cli) -> Result<(), StageError> {
    let overrides = Overrides { seed: cli.seed, output_dir: cli.output.clone() };
    let config = PipelineConfig::load(&cli.config, &overrides).stage("cli")?;
    let pipeline = Pipeline::new(config);
    let stage = match cli.command {
        Command::All => {
            for path in pipeline.run_all()? {
                eprintln!("wrote {}", path.display());
            }
            return Ok(());
        }
        Command::Synth => Stage::Synth,
        Command::Validate => Stage::Validate,
        Command::Probe => Stage::Probe,
        Command::DictTrain => Stage::DictTrain,
        Command::Sweep => Stage::Sweep,
        Command::PoolAnalyze => Stage::PoolAnalyze,
        Command::Attribute => Stage::Attribute,
        Command::Report => Stage::Report,
    };
    for path in pipeline.run_stage(stage)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
