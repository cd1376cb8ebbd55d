use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bugdestiny::pipeline::{self, Balancing, PipelineError, RunConfig, Subset, Task};

#[derive(Parser)]
#[command(
    name = "bugdestiny",
    about = "Predict resolution time and final resolution of bug reports from \
             sentiment, priority, and topic features.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Override the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the raw export, derive labels and the chronological split, and
    /// write the binary corpus cache.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Train the configured task's model grid and write report tables.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Override the configured task.
        #[arg(long, value_enum)]
        task: Option<TaskArg>,
        /// Restrict the grid to one balancing mode.
        #[arg(long, value_enum)]
        balancing: Option<BalancingArg>,
        /// Restrict numeric-time rows to one duration subset.
        #[arg(long, value_enum)]
        subset: Option<SubsetArg>,
    },
    /// Score a new report with the models saved by `experiment`.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Identifier echoed back in the output.
        #[arg(long, default_value = "new-report")]
        id: String,
        /// Free-text description of the report.
        #[arg(long)]
        description: String,
        /// Priority P1..P5 (missing entries in exports default to P3).
        #[arg(long, default_value = "P3")]
        priority: String,
    },
    /// Fit the emotionality regression and emit scatter data, an SVG plot,
    /// and fit metadata.
    PlotScatter {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TaskArg {
    TimeToResolution,
    TimeToFix,
    NumericTime,
    Destiny,
    Correlation,
}

impl From<TaskArg> for Task {
    fn from(value: TaskArg) -> Self {
        match value {
            TaskArg::TimeToResolution => Task::TimeToResolution,
            TaskArg::TimeToFix => Task::TimeToFix,
            TaskArg::NumericTime => Task::NumericTime,
            TaskArg::Destiny => Task::Destiny,
            TaskArg::Correlation => Task::Correlation,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BalancingArg {
    None,
    Smote,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SubsetArg {
    Full,
    Short,
    Long,
}

fn load_config(common: &Common) -> Result<RunConfig, PipelineError> {
    let mut config = RunConfig::from_toml_file(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.paths.out = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest { common } => {
            let config = load_config(&common)?;
            pipeline::cmd_ingest(&config)?;
        }
        Command::Experiment { common, task, balancing, subset } => {
            let mut config = load_config(&common)?;
            if let Some(task) = task {
                config.task = task.into();
            }
            if let Some(balancing) = balancing {
                config.balancing = Some(match balancing {
                    BalancingArg::None => Balancing::None,
                    BalancingArg::Smote => Balancing::Smote,
                });
            }
            if let Some(subset) = subset {
                config.subset = Some(match subset {
                    SubsetArg::Full => Subset::Full,
                    SubsetArg::Short => Subset::Short,
                    SubsetArg::Long => Subset::Long,
                });
            }
            pipeline::cmd_experiment(&config)?;
        }
        Command::Predict { common, id, description, priority } => {
            let config = load_config(&common)?;
            let priority = bugdestiny::corpus::Priority::parse(&priority)
                .ok_or_else(|| {
                    PipelineError::Config(format!(
                        "invalid priority {priority:?} (expected P1..P5)"
                    ))
                })?
                .numeric();
            let records = pipeline::cmd_predict(&config, &[(id, description, priority)])?;
            println!("{}", serde_json::to_string_pretty(&records).unwrap());
        }
        Command::PlotScatter { common } => {
            let mut config = load_config(&common)?;
            config.task = Task::Correlation;
            pipeline::cmd_experiment(&config)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
