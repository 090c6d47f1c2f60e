//! `run-all`: every stage in sequence from one JSON configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use passthru_core::estimator::{FitOptions, Outcome, RmseDenominator, SmallSampleCorrection};
use passthru_core::simulate::SimConfig;
use passthru_core::summaries::{DidOptions, DofRule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cli::{RunAllArgs, VERSION};
use crate::stages::{self, FitSettings, InputPaths, PanelSettings};
use crate::StageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory.
    pub out: Option<PathBuf>,
    /// Directory with the base relations; when absent, `simulate` must be
    /// configured and its output is used.
    pub input: Option<PathBuf>,
    pub simulate: Option<SimConfig>,
    pub ingest: IngestSection,
    pub build_panel: BuildPanelSection,
    pub fit: FitSection,
    pub did: DidSection,
    pub report: ReportSection,
    pub plot_data: PlotSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub strict_refs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildPanelSection {
    pub patterns: Option<PathBuf>,
    pub base_month: String,
    pub window: String,
}

impl Default for BuildPanelSection {
    fn default() -> Self {
        let d = PanelSettings::default();
        BuildPanelSection {
            patterns: d.patterns,
            base_month: d.base_month,
            window: d.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub outcome: String,
    pub ref_bin: i32,
    pub ssc: SmallSampleCorrection,
    pub rmse_denominator: RmseDenominator,
    pub tol: f64,
    pub max_iter: usize,
    /// Comparison sample: `control` (all non-SUP) or `strict` (graphics cards).
    pub control_sample: String,
}

impl Default for FitSection {
    fn default() -> Self {
        let d = FitOptions::default();
        FitSection {
            outcome: "P".into(),
            ref_bin: d.ref_bin,
            ssc: d.ssc,
            rmse_denominator: d.rmse_denominator,
            tol: d.tol,
            max_iter: d.max_iter,
            control_sample: "control".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DidSection {
    pub windows: Vec<String>,
    pub dof_rule: DofRule,
    pub strict_missing: bool,
}

impl Default for DidSection {
    fn default() -> Self {
        DidSection {
            windows: vec!["6".into(), "12".into(), "full".into()],
            dof_rule: DofRule::Treated,
            strict_missing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub formats: Vec<String>,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            formats: vec!["csv".into(), "latex".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotSection {
    pub level: f64,
}

impl Default for PlotSection {
    fn default() -> Self {
        PlotSection { level: 0.90 }
    }
}

impl RunConfig {
    /// Read a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = stages::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(v) = p.as_mut() {
                if v.is_relative() {
                    *v = base.join(&*v);
                }
            }
        };
        rebase(&mut cfg.out);
        rebase(&mut cfg.input);
        rebase(&mut cfg.build_panel.patterns);
        Ok(cfg)
    }

    /// Command-line flags take precedence over the file.
    pub fn apply_flags(&mut self, args: &RunAllArgs) {
        if let Some(v) = &args.out {
            self.out = Some(v.clone());
        }
        if let Some(v) = &args.input {
            self.input = Some(v.clone());
        }
        if let Some(v) = &args.patterns {
            self.build_panel.patterns = Some(v.clone());
        }
        if let Some(v) = &args.outcome {
            self.fit.outcome = v.clone();
        }
        if let Some(v) = &args.control_sample {
            self.fit.control_sample = v.clone();
        }
        if let Some(v) = &args.windows {
            self.did.windows = v.clone();
        }
        if let Some(v) = &args.ssc {
            if let Ok(ssc) = v.parse() {
                self.fit.ssc = ssc;
            }
        }
        if let (Some(seed), Some(sim)) = (args.seed, self.simulate.as_mut()) {
            sim.seed = seed;
        }
    }
}

/// Reproducibility record written after a successful run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// SHA-256 of the effective configuration (after flag overrides).
    pub config_sha256: String,
    pub library_version: String,
    pub build: String,
    pub started_at: String,
    pub finished_at: String,
    /// Input file → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the output directory → SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("{}: cannot read", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn collect_files(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for entry in entries {
        let path = entry.path();
        if path.is_dir() {
            collect_files(&path, root, out)?;
        } else if path != root.join(MANIFEST) {
            let rel = path
                .strip_prefix(root)?
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            out.insert(rel, sha256_file(&path)?);
        }
    }
    Ok(())
}

fn stage<T>(name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log::info!("stage {name}");
    f().map_err(|source| {
        StageError {
            stage: name,
            source,
        }
        .into()
    })
}

pub fn run_all(args: &RunAllArgs) -> Result<RunManifest> {
    let started_at = Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true);
    let mut cfg = stage("run-all", || RunConfig::load(&args.config))?;
    cfg.apply_flags(args);
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("passthru-out"));
    let config_sha256 = hex::encode(Sha256::digest(serde_json::to_vec(&cfg)?));

    stage("run-all", || {
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        // A stale manifest must never vouch for a partial rerun.
        let manifest = out.join(MANIFEST);
        if manifest.exists() {
            fs::remove_file(&manifest)?;
        }
        if let Some(ssc) = &args.ssc {
            ssc.parse::<SmallSampleCorrection>()?;
        }
        Ok(())
    })?;

    let input = match (&cfg.input, &cfg.simulate) {
        (Some(dir), _) => dir.clone(),
        (None, Some(sim)) => {
            let raw = out.join("raw");
            stage("simulate", || stages::simulate_stage(sim, &raw))?;
            raw
        }
        (None, None) => {
            return Err(StageError {
                stage: "run-all",
                source: anyhow::anyhow!("config names neither `input` nor `simulate`"),
            }
            .into())
        }
    };

    let paths = InputPaths::in_dir(&input);
    let mut inputs = BTreeMap::new();
    stage("ingest", || {
        for p in paths.files() {
            if p.exists() {
                inputs.insert(p.display().to_string(), sha256_file(p)?);
            }
        }
        if let Some(p) = cfg.build_panel.patterns.as_ref().filter(|p| p.exists()) {
            inputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        stages::ingest(&paths, cfg.ingest.strict_refs, &out.join("ingest"))
    })?;

    let panel_dir = out.join("panel");
    let settings = PanelSettings {
        patterns: cfg.build_panel.patterns.clone(),
        base_month: cfg.build_panel.base_month.clone(),
        window: cfg.build_panel.window.clone(),
    };
    stage("build-panel", || {
        stages::build_panel_stage(&out.join("ingest"), &settings, &panel_dir)
    })?;

    let (fit_t, fit_c) = stage("fit", || {
        let fit_settings = FitSettings {
            outcome: cfg.fit.outcome.parse::<Outcome>()?,
            options: FitOptions {
                ref_bin: cfg.fit.ref_bin,
                tol: cfg.fit.tol,
                max_iter: cfg.fit.max_iter,
                ssc: cfg.fit.ssc,
                rmse_denominator: cfg.fit.rmse_denominator,
                ..FitOptions::default()
            },
        };
        let control_file = match cfg.fit.control_sample.as_str() {
            "control" => "obs_control.csv",
            "strict" => "obs_strict.csv",
            other => bail!("unknown control sample {other:?} (expected control or strict)"),
        };
        let t = stages::fit_stage(
            &panel_dir.join("obs_treated.csv"),
            &fit_settings,
            &out.join("fit").join("fit_treated.json"),
        )
        .context("treated sample")?;
        let c = stages::fit_stage(
            &panel_dir.join(control_file),
            &fit_settings,
            &out.join("fit").join("fit_control.json"),
        )
        .context("control sample")?;
        Ok((t, c))
    })?;

    let did_options = DidOptions {
        strict_missing: cfg.did.strict_missing,
        dof_rule: cfg.did.dof_rule,
        ..Default::default()
    };
    stage("did", || {
        let windows = stages::parse_windows(&cfg.did.windows)?;
        stages::did_stage(
            &fit_t,
            Some(&fit_c),
            &windows,
            &did_options,
            &out.join("did.json"),
        )
    })?;
    stage("report", || {
        let formats = stages::parse_formats(&cfg.report.formats)?;
        stages::report_stage(
            &fit_t,
            Some(&fit_c),
            &formats,
            &did_options,
            &out.join("tables"),
        )
    })?;
    stage("plot-data", || {
        stages::plot_stage(
            &[
                ("Treated".to_string(), &fit_t),
                ("Control".to_string(), &fit_c),
            ],
            cfg.plot_data.level,
            &out.join("series.csv"),
        )
    })?;

    stage("manifest", || {
        let mut outputs = BTreeMap::new();
        collect_files(&out, &out, &mut outputs)?;
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            config_sha256,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            build: VERSION.to_string(),
            started_at,
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            inputs,
            outputs,
        };
        stages::write_json(&out.join(MANIFEST), &manifest)?;
        Ok(manifest)
    })
}
