use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sentimill::pipeline::{self, Overrides, Pipeline, PipelineError};
use sentimill::youtube::{CommentOrder, API_KEY_ENV};

/// Sentiment analysis of YouTube comments.
#[derive(Parser, Debug)]
#[command(name = "sentimill", version)]
struct Cli {
    /// Log verbosity (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Order {
    Relevance,
    Time,
}

impl From<Order> for CommentOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::Relevance => CommentOrder::Relevance,
            Order::Time => CommentOrder::Time,
        }
    }
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Plain shuffled split instead of per-class stratification.
    #[arg(long)]
    no_stratify: bool,
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            output_dir: self.out_dir.clone(),
            lexicon: self.lexicon.clone(),
            no_stratify: self.no_stratify,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Download top-level comments of one video to JSONL.
    Fetch {
        #[arg(long)]
        video_id: String,
        #[arg(long, default_value_t = 1000)]
        max: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = API_KEY_ENV, hide_env_values = true)]
        api_key: Option<String>,
        /// Replay recorded API pages from this directory.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Order::Relevance)]
        order: Order,
    },
    /// Score and label a JSONL corpus with the polarity lexicon.
    Label {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Tab-separated `word<TAB>score` lexicon replacing the built-in one.
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Scores with |s| at or below this value are labeled neutral.
        #[arg(long, default_value_t = 0.0)]
        neutral_band: f64,
    },
    /// Split, vectorize, train and evaluate on labeled or synthetic datasets.
    TrainEval(RunArgs),
    /// Polarity histogram and optional comparison chart.
    Report {
        /// Labeled JSONL corpus.
        #[arg(long)]
        input: PathBuf,
        /// `comparison.json` written by train-eval.
        #[arg(long)]
        comparison: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = sentimill::report::DEFAULT_BINS)]
        bins: usize,
    },
    /// Every phase for every configured dataset, then the manifest.
    RunAll {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, env = API_KEY_ENV, hide_env_values = true)]
        api_key: Option<String>,
    },
}

fn print_tables(outcomes: &[pipeline::DatasetOutcome]) {
    for o in outcomes {
        print!("{}", o.table.to_csv());
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Fetch {
            video_id,
            max,
            out,
            api_key,
            fixtures,
            order,
        } => {
            let dataset = pipeline::fetch_video(&video_id, max, api_key.as_deref(), fixtures.as_deref(), order.into())
                .map_err(|e| e.in_phase("fetch"))?;
            sentimill::corpus::save_jsonl(&dataset, &out).map_err(|e| PipelineError::from(e).in_phase("fetch"))?;
            println!("fetched {} comments into {}", dataset.len(), out.display());
        }
        Command::Label {
            input,
            out,
            lexicon,
            neutral_band,
        } => {
            let labeled = pipeline::label_file(&input, lexicon.as_deref(), &out, neutral_band)
                .map_err(|e| e.in_phase("label"))?;
            println!("{}", pipeline::distribution_summary(&labeled));
        }
        Command::TrainEval(args) => {
            let cfg = pipeline::load_config(&args.config, &args.overrides())?;
            let mut p = Pipeline::new(cfg, None)?;
            let (outcomes, _) = p.run_train_eval()?;
            print_tables(&outcomes);
        }
        Command::Report {
            input,
            comparison,
            out_dir,
            bins,
        } => {
            let written =
                pipeline::report_files(&input, comparison.as_deref(), &out_dir, bins).map_err(|e| e.in_phase("report"))?;
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::RunAll { run, api_key } => {
            let cfg = pipeline::load_config(&run.config, &run.overrides())?;
            let mut p = Pipeline::new(cfg, api_key)?;
            let (outcomes, manifest) = p.run_all()?;
            print_tables(&outcomes);
            log::info!("{} artifacts listed in manifest", manifest.artifacts.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
