mod cli;
mod run_all;
mod stages;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use passthru_core::estimator::{EventStudyFit, FitOptions};
use passthru_core::simulate::SimConfig;
use passthru_core::summaries::DidOptions;

use cli::{Cli, Command};
use stages::{FitSettings, InputPaths, PanelSettings};

/// An error tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:#}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

fn tagged<T>(stage: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|source| StageError { stage, source }.into())
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        anyhow::ensure!(n > 0, "PANEL_THREADS must be a positive integer");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    tagged("passthru", configure_threads(cli.threads))?;
    match cli.command {
        Command::Ingest(a) => tagged(
            "ingest",
            (|| {
                let base = a.input.clone().unwrap_or_default();
                let defaults = InputPaths::in_dir(&base);
                let paths = InputPaths {
                    products: a.products.unwrap_or(defaults.products),
                    offers: a.offers.unwrap_or(defaults.offers),
                    clicks: a.clicks.unwrap_or(defaults.clicks),
                    retailers: a.retailers.unwrap_or(defaults.retailers),
                };
                stages::ingest(&paths, a.strict_refs, &a.out).map(drop)
            })(),
        ),
        Command::BuildPanel(a) => tagged(
            "build-panel",
            (|| {
                let settings = PanelSettings {
                    patterns: a.patterns,
                    base_month: a.base_month,
                    window: a.window,
                };
                stages::build_panel_stage(&a.input, &settings, &a.out).map(drop)
            })(),
        ),
        Command::Fit(a) => tagged(
            "fit",
            (|| {
                stages::parse_cluster(&a.cluster)?;
                let settings = FitSettings {
                    outcome: a.outcome.parse()?,
                    options: FitOptions {
                        ref_bin: a.ref_bin,
                        tol: a.tol,
                        max_iter: a.max_iter,
                        ssc: a.ssc.parse()?,
                        rmse_denominator: a.rmse_denominator.parse()?,
                        ..FitOptions::default()
                    },
                };
                stages::fit_stage(&a.panel, &settings, &a.out).map(drop)
            })(),
        ),
        Command::Did(a) => tagged(
            "did",
            (|| {
                let treated: EventStudyFit = stages::read_json(&a.fit_treated)?;
                let control: Option<EventStudyFit> = a
                    .fit_control
                    .as_deref()
                    .map(stages::read_json)
                    .transpose()?;
                let options = DidOptions {
                    strict_missing: a.strict_missing,
                    dof_rule: a.dof_rule.parse()?,
                    ..Default::default()
                };
                let windows = stages::parse_windows(&a.windows)?;
                stages::did_stage(&treated, control.as_ref(), &windows, &options, &a.out).map(drop)
            })(),
        ),
        Command::Report(a) => tagged(
            "report",
            (|| {
                let fits: Vec<EventStudyFit> = a
                    .fits
                    .iter()
                    .map(|p| stages::read_json(p))
                    .collect::<Result<_>>()?;
                let formats = stages::parse_formats(&a.format)?;
                stages::report_stage(
                    &fits[0],
                    fits.get(1),
                    &formats,
                    &DidOptions::default(),
                    &a.out,
                )
                .map(drop)
            })(),
        ),
        Command::PlotData(a) => tagged(
            "plot-data",
            (|| {
                anyhow::ensure!(
                    a.group.is_empty() || a.group.len() == a.fit.len(),
                    "give one --group per --fit"
                );
                let fits: Vec<EventStudyFit> = a
                    .fit
                    .iter()
                    .map(|p| stages::read_json(p))
                    .collect::<Result<_>>()?;
                let default_groups = ["Treated", "Control"];
                let labelled: Vec<(String, &EventStudyFit)> = fits
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let group = a.group.get(i).cloned().unwrap_or_else(|| {
                            default_groups
                                .get(i)
                                .map_or_else(|| format!("Fit{}", i + 1), |g| g.to_string())
                        });
                        (group, f)
                    })
                    .collect();
                stages::plot_stage(&labelled, a.level, &a.out)
            })(),
        ),
        Command::Simulate(a) => tagged(
            "simulate",
            (|| {
                let mut config = match &a.config {
                    Some(p) => stages::read_json::<SimConfig>(p)?,
                    None => SimConfig::default(),
                };
                if let Some(seed) = a.seed {
                    config.seed = seed;
                }
                stages::simulate_stage(&config, &a.out)
            })(),
        ),
        Command::RunAll(a) => run_all::run_all(&a).map(|m| {
            log::info!(
                "run complete; {} outputs recorded in {}",
                m.outputs.len(),
                PathBuf::from(run_all::MANIFEST).display()
            );
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
