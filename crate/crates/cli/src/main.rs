use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use disrupt_pipeline::synth::{write_synth_corpus, SynthParams};
use disrupt_pipeline::{Pipeline, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "disrupt", version, about = "Citation disruption pipeline")]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the offline stub classifier.
    #[arg(long, global = true)]
    stub: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read and filter the corpus.
    Ingest,
    /// Build the citation network and the eligible sample.
    Graph,
    /// Label eligible papers as conceptual or empirical.
    Classify,
    /// Score disruption for eligible papers.
    Disrupt,
    /// Fit the regression models.
    Regress,
    /// Summarize every stage.
    Report,
    /// All stages in order, plus a manifest.
    Run,
    /// Write a synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 5000)]
        papers: usize,
        /// Planted conceptual boost; 0 disables it.
        #[arg(long, default_value_t = 1.0)]
        effect: f64,
        #[arg(long)]
        output: PathBuf,
        /// Also write a journal allowlist here.
        #[arg(long)]
        allowlist: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, String> {
    let path = cli
        .config
        .as_ref()
        .ok_or("--config is required for this command")?;
    let mut config = PipelineConfig::load(path).map_err(|e| e.to_string())?;
    if cli.stub {
        config.classifier.stub = true;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out_dir {
        config.paths.out_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), String> {
    let stage = match &cli.command {
        Command::Synth {
            papers,
            effect,
            output,
            allowlist,
        } => {
            let seed = match (cli.seed, &cli.config) {
                (Some(seed), _) => seed,
                (None, Some(_)) => load_config(cli)?.seed,
                (None, None) => 0,
            };
            let params = SynthParams::new(*papers, seed, *effect);
            let corpus = write_synth_corpus(&params, output, allowlist.as_deref())
                .map_err(|e| format!("synth: {e}"))?;
            eprintln!("wrote {} papers to {}", corpus.len(), output.display());
            return Ok(());
        }
        Command::Run => None,
        Command::Ingest => Some(Stage::Ingest),
        Command::Graph => Some(Stage::Graph),
        Command::Classify => Some(Stage::Classify),
        Command::Disrupt => Some(Stage::Disrupt),
        Command::Regress => Some(Stage::Regress),
        Command::Report => Some(Stage::Report),
    };
    let pipeline = Pipeline::new(load_config(cli)?).map_err(|e| e.to_string())?;
    let result = match stage {
        Some(stage) => pipeline.run_stage(stage),
        None => pipeline.run(),
    };
    result.map(|_| ()).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
