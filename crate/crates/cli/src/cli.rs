use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (",
    env!("PASSTHRU_BUILD_ID"),
    ")"
);

/// Pricing-panel pipeline, event-study estimation and DiD summaries.
#[derive(Debug, Parser)]
#[command(name = "passthru", version = VERSION, propagate_version = true)]
pub struct Cli {
    /// Worker threads for parallel stages (defaults to all cores).
    #[arg(long, global = true, env = "PANEL_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate the four base relations and write them with a rejects report.
    Ingest(IngestArgs),
    /// Build the monthly analysis table and the treated/control splits.
    BuildPanel(BuildPanelArgs),
    /// Fit the binned event study on one analysis table.
    Fit(FitArgs),
    /// Windowed post-minus-pre contrasts of fitted coefficients.
    Did(DidArgs),
    /// Render coefficient tables.
    Report(ReportArgs),
    /// Export per-bin confidence intervals for plotting.
    PlotData(PlotDataArgs),
    /// Generate synthetic base relations.
    Simulate(SimulateArgs),
    /// Run every stage from a JSON configuration.
    RunAll(RunAllArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding products, offers, clicks and retailers files.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub products: Option<PathBuf>,
    #[arg(long)]
    pub offers: Option<PathBuf>,
    #[arg(long)]
    pub clicks: Option<PathBuf>,
    #[arg(long)]
    pub retailers: Option<PathBuf>,
    /// Reject offers and clicks that reference unknown products or retailers.
    #[arg(long)]
    pub strict_refs: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildPanelArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Pattern file; the built-in SUP patterns are used when omitted.
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    #[arg(long, default_value = "2022-02")]
    pub base_month: String,
    #[arg(long, default_value = "-24:36", allow_hyphen_values = true)]
    pub window: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub panel: PathBuf,
    /// Outcome column: P or logP.
    #[arg(long, default_value = "P")]
    pub outcome: String,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub ref_bin: i32,
    /// Cluster dimensions; only `prod,ret` is supported.
    #[arg(long, default_value = "prod,ret")]
    pub cluster: String,
    /// Small-sample correction: none or standard.
    #[arg(long, default_value = "standard")]
    pub ssc: String,
    /// RMSE denominator: n or n-k.
    #[arg(long, default_value = "n")]
    pub rmse_denominator: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DidArgs {
    #[arg(long)]
    pub fit_treated: PathBuf,
    #[arg(long)]
    pub fit_control: Option<PathBuf>,
    #[arg(long, default_value = "6,12,full", value_delimiter = ',')]
    pub windows: Vec<String>,
    /// Degrees of freedom for treated-minus-control: treated or min.
    #[arg(long, default_value = "treated")]
    pub dof_rule: String,
    /// Fail when a window bin was not estimated instead of reweighting.
    #[arg(long)]
    pub strict_missing: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Treated fit, optionally followed by the control fit.
    #[arg(long, num_args = 1..=2, required = true)]
    pub fits: Vec<PathBuf>,
    /// Output formats: csv, latex or both.
    #[arg(long, default_value = "csv,latex", value_delimiter = ',')]
    pub format: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[arg(long, required = true)]
    pub fit: Vec<PathBuf>,
    /// Group label per fit; defaults to Treated, Control.
    #[arg(long)]
    pub group: Vec<String>,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunAllArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Input directory with the base relations (overrides `input`).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub patterns: Option<PathBuf>,
    #[arg(long)]
    pub outcome: Option<String>,
    /// Control sample: control or strict.
    #[arg(long)]
    pub control_sample: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<String>>,
    #[arg(long)]
    pub ssc: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}
