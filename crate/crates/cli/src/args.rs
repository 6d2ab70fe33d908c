use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "maxrand",
    version,
    about = "Standard and maximum random baselines for classifiers evaluated on reused validation sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expected accuracy of one random classifier and of the best of t.
    Baseline {
        #[command(flatten)]
        task: TaskArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Tail probabilities of an observed best accuracy under both baselines.
    Pvalue {
        #[command(flatten)]
        task: TaskArgs,
        /// Observed accuracy; n * acc must be an integer.
        #[arg(long)]
        acc: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Least attainable accuracies that beat the baseline or reach significance.
    Threshold {
        #[command(flatten)]
        task: TaskArgs,
        /// Significance level for the p-value threshold.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep over dataset sizes and evaluation counts.
    Grid {
        /// n axis: comma list or log:START:END:COUNT (omit with --labels).
        #[arg(long)]
        n: Option<String>,
        /// t axis: comma list or log:START:END:COUNT.
        #[arg(long)]
        t: String,
        #[command(flatten)]
        labels: LabelArgs,
        #[arg(long, value_enum, default_value_t = GridQuantity::ExpectedMax)]
        quantity: GridQuantity,
        /// Accuracy for --quantity p-value.
        #[arg(long)]
        acc: Option<f64>,
        /// Significance level for --quantity threshold.
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify reported results against both baselines.
    Audit {
        /// Records file (CSV or JSON lines).
        input: PathBuf,
        #[arg(long, value_enum)]
        input_format: Option<InputFormat>,
        /// Also evaluate how well validation accuracy predicts held-out accuracy.
        #[arg(long)]
        eval_heldout: bool,
        /// Write the summary here instead of after the verdicts.
        #[arg(long)]
        summary_out: Option<PathBuf>,
        /// Write the held-out evaluation here instead of after the summary.
        #[arg(long)]
        eval_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo estimate of the maximum random baseline next to the closed form.
    Simulate {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also estimate the tail probability at this accuracy.
        #[arg(long)]
        acc: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Empirical expected-maximum curves from per-prompt accuracies.
    Curve {
        /// Records file with per_prompt_accuracies.
        input: PathBuf,
        #[arg(long, value_enum)]
        input_format: Option<InputFormat>,
        /// t axis: comma list or log:START:END:COUNT (default 1..=number of prompts).
        #[arg(long)]
        t: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Number of labels per example.
    #[arg(long, group = "scheme")]
    pub m: Option<u32>,
    /// Per-example label counts, e.g. "2;3;4" (n defaults to their number).
    #[arg(long, group = "scheme")]
    pub labels: Option<String>,
    /// Per-example success probability.
    #[arg(long, group = "scheme")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TaskArgs {
    /// Number of validation examples.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub labels: LabelArgs,
    /// Number of evaluations of the validation set.
    #[arg(long, default_value_t = 1)]
    pub t: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Convenience switch for --format json.
    #[arg(long)]
    pub json: bool,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    pub fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridQuantity {
    ExpectedMax,
    PValue,
    Threshold,
}
