//! One function per pipeline stage, shared by the subcommands and `run-all`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use passthru_core::estimator::{EventStudyFit, FitOptions, Outcome, RegressionSample};
use passthru_core::ingest::{
    check_references, load_table, write_rejects, write_table, RefCheck, Table, TableKind,
    TableRecord,
};
use passthru_core::pipeline::{read_obs, write_obs, EventWindow, PanelOutput, PipelineConfig};
use passthru_core::simulate::{generate, write_raw, SimConfig};
use passthru_core::summaries::{
    did_treated_minus_control, did_window, export_plot_data, render_table, write_plot_csv,
    DidOptions, DidSummary, TableFormat, Window,
};
use passthru_core::{
    build_panel, fit_event_study, ClickRecord, OfferRecord, ProductRecord, RetailerRecord,
    SupPatternSet, YearMonth,
};
use serde::{Deserialize, Serialize};

/// Locations of the four base relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputPaths {
    pub products: PathBuf,
    pub offers: PathBuf,
    pub clicks: PathBuf,
    pub retailers: PathBuf,
}

impl InputPaths {
    /// `DIR/<table>.csv`, or `.jsonl`/`.ndjson` when only those exist.
    pub fn in_dir(dir: &Path) -> Self {
        let pick = |kind: TableKind| {
            ["csv", "jsonl", "ndjson"]
                .iter()
                .map(|ext| dir.join(format!("{}.{ext}", kind.name())))
                .find(|p| p.exists())
                .unwrap_or_else(|| dir.join(format!("{}.csv", kind.name())))
        };
        InputPaths {
            products: pick(TableKind::Products),
            offers: pick(TableKind::Offers),
            clicks: pick(TableKind::Clicks),
            retailers: pick(TableKind::Retailers),
        }
    }

    pub fn files(&self) -> [&Path; 4] {
        [&self.products, &self.offers, &self.clicks, &self.retailers]
    }
}

/// The validated base relations.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub products: Table<ProductRecord>,
    pub offers: Table<OfferRecord>,
    pub clicks: Table<ClickRecord>,
    pub retailers: Table<RetailerRecord>,
    pub references: RefCheck,
    pub strict_refs: bool,
}

#[derive(Debug, Serialize)]
struct TableCounts {
    data_rows: usize,
    accepted: usize,
    rejected: usize,
}

#[derive(Debug, Serialize)]
struct IngestSummary<'a> {
    tables: BTreeMap<&'static str, TableCounts>,
    references: &'a RefCheck,
    strict_refs: bool,
}

fn counts<R>(t: &Table<R>) -> TableCounts {
    TableCounts {
        data_rows: t.data_rows,
        accepted: t.rows.len(),
        rejected: t.rejects.len(),
    }
}

pub fn load_inputs(paths: &InputPaths, strict_refs: bool) -> Result<Ingested> {
    let products = load_table::<ProductRecord>(&paths.products)?;
    let mut offers = load_table::<OfferRecord>(&paths.offers)?;
    let mut clicks = load_table::<ClickRecord>(&paths.clicks)?;
    let retailers = load_table::<RetailerRecord>(&paths.retailers)?;
    let references = check_references(
        &products.rows,
        &retailers.rows,
        &mut offers,
        &mut clicks,
        strict_refs,
    );
    if references.total() > 0 {
        log::warn!(
            "{} offer/click rows reference unknown products or retailers",
            references.total()
        );
    }
    Ok(Ingested {
        products,
        offers,
        clicks,
        retailers,
        references,
        strict_refs,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("{}: cannot open", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{}: invalid JSON", path.display()))
}

fn write_records<R: TableRecord>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = create(path)?;
    write_table(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

/// Write the validated tables, `rejects.csv` and `ingest.json` into `out`.
pub fn write_ingested(out: &Path, data: &Ingested) -> Result<()> {
    write_records(&out.join("products.csv"), &data.products.rows)?;
    write_records(&out.join("offers.csv"), &data.offers.rows)?;
    write_records(&out.join("clicks.csv"), &data.clicks.rows)?;
    write_records(&out.join("retailers.csv"), &data.retailers.rows)?;
    let rejects: Vec<_> = [
        &data.products.rejects,
        &data.offers.rejects,
        &data.clicks.rejects,
        &data.retailers.rejects,
    ]
    .into_iter()
    .flatten()
    .cloned()
    .collect();
    let mut w = create(&out.join("rejects.csv"))?;
    write_rejects(&mut w, &rejects)?;
    w.flush()?;
    let summary = IngestSummary {
        tables: BTreeMap::from([
            ("products", counts(&data.products)),
            ("offers", counts(&data.offers)),
            ("clicks", counts(&data.clicks)),
            ("retailers", counts(&data.retailers)),
        ]),
        references: &data.references,
        strict_refs: data.strict_refs,
    };
    write_json(&out.join("ingest.json"), &summary)
}

pub fn ingest(paths: &InputPaths, strict_refs: bool, out: &Path) -> Result<Ingested> {
    let data = load_inputs(paths, strict_refs)?;
    write_ingested(out, &data)?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSettings {
    pub patterns: Option<PathBuf>,
    pub base_month: String,
    pub window: String,
}

impl Default for PanelSettings {
    fn default() -> Self {
        PanelSettings {
            patterns: None,
            base_month: "2022-02".into(),
            window: "-24:36".into(),
        }
    }
}

pub fn build_panel_stage(
    input: &Path,
    settings: &PanelSettings,
    out: &Path,
) -> Result<PanelOutput> {
    let patterns = match &settings.patterns {
        Some(p) => SupPatternSet::from_path(p)?,
        None => SupPatternSet::builtin(),
    };
    let config = PipelineConfig {
        base_month: settings.base_month.parse::<YearMonth>()?,
        window: settings.window.parse::<EventWindow>()?,
        ..PipelineConfig::default()
    };
    let data = load_inputs(&InputPaths::in_dir(input), false)?;
    let rejected = data.products.rejects.len()
        + data.offers.rejects.len()
        + data.clicks.rejects.len()
        + data.retailers.rejects.len();
    if rejected > 0 {
        log::warn!("{rejected} malformed input rows skipped; run `ingest` for the rejects report");
    }
    let panel = build_panel(
        &data.products.rows,
        &data.offers.rows,
        &data.clicks.rows,
        &data.retailers.rows,
        &patterns,
        &config,
    )?;
    for (name, rows) in [
        ("obs.csv", &panel.obs),
        ("obs_treated.csv", &panel.splits.treated),
        ("obs_control.csv", &panel.splits.control),
        ("obs_strict.csv", &panel.splits.strict),
    ] {
        let mut w = create(&out.join(name))?;
        write_obs(&mut w, rows)?;
        w.flush()?;
    }
    write_json(&out.join("diagnostics.json"), &panel.diagnostics)?;
    Ok(panel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub outcome: Outcome,
    pub options: FitOptions,
}

pub fn parse_cluster(dims_arg: &str) -> Result<()> {
    let mut dims: Vec<&str> = dims_arg.split(',').map(str::trim).collect();
    dims.sort_unstable();
    if dims != ["prod", "ret"] {
        bail!("unsupported clustering {dims_arg:?}; only two-way `prod,ret` clustering is available");
    }
    Ok(())
}

pub fn fit_stage(panel: &Path, settings: &FitSettings, out: &Path) -> Result<EventStudyFit> {
    let file = File::open(panel).with_context(|| format!("{}: cannot open", panel.display()))?;
    let rows = read_obs(BufReader::new(file))?;
    let sample = RegressionSample::from_obs(&rows, settings.outcome)?;
    let fit = fit_event_study(&sample, &settings.options)?;
    if let Some(note) = &fit.vcov_note {
        log::warn!("{}: covariance unavailable: {note}", panel.display());
    }
    write_json(out, &fit)?;
    Ok(fit)
}

/// Windowed contrasts for the treated fit, the control fit and their
/// difference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DidReport {
    pub windows: Vec<Window>,
    pub treated: Vec<DidSummary>,
    pub control: Option<Vec<DidSummary>>,
    pub treated_minus_control: Option<Vec<DidSummary>>,
}

pub fn parse_windows(list: &[String]) -> Result<Vec<Window>> {
    let windows = list
        .iter()
        .map(|w| w.parse::<Window>())
        .collect::<Result<Vec<_>, _>>()?;
    if windows.is_empty() {
        bail!("no DiD windows requested");
    }
    Ok(windows)
}

pub fn did_stage(
    treated: &EventStudyFit,
    control: Option<&EventStudyFit>,
    windows: &[Window],
    options: &DidOptions,
    out: &Path,
) -> Result<DidReport> {
    let single = |fit: &EventStudyFit| {
        windows
            .iter()
            .map(|&w| did_window(fit, w, options))
            .collect::<Result<Vec<_>, _>>()
    };
    let report = DidReport {
        windows: windows.to_vec(),
        treated: single(treated).context("treated fit")?,
        control: control.map(single).transpose().context("control fit")?,
        treated_minus_control: control
            .map(|c| {
                windows
                    .iter()
                    .map(|&w| did_treated_minus_control(treated, c, w, options))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?,
    };
    write_json(out, &report)?;
    Ok(report)
}

pub fn parse_formats(list: &[String]) -> Result<Vec<TableFormat>> {
    let mut formats = list
        .iter()
        .map(|f| f.parse::<TableFormat>())
        .collect::<Result<Vec<_>, _>>()?;
    formats.dedup();
    if formats.is_empty() {
        bail!("no table format requested");
    }
    Ok(formats)
}

/// Write `table.csv` and/or `table.tex` into `out`.
pub fn report_stage(
    treated: &EventStudyFit,
    control: Option<&EventStudyFit>,
    formats: &[TableFormat],
    options: &DidOptions,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for &format in formats {
        let path = out.join(match format {
            TableFormat::Csv => "table.csv",
            TableFormat::Latex => "table.tex",
        });
        let mut w = create(&path)?;
        w.write_all(render_table(treated, control, format, &options.stars).as_bytes())?;
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

pub fn plot_stage(fits: &[(String, &EventStudyFit)], level: f64, out: &Path) -> Result<()> {
    let series = fits
        .iter()
        .map(|(group, fit)| export_plot_data(fit, level, group))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = create(out)?;
    write_plot_csv(&mut w, &series)?;
    w.flush()?;
    Ok(())
}

pub fn simulate_stage(config: &SimConfig, out: &Path) -> Result<()> {
    let data = generate(config)?;
    write_raw(out, &data)?;
    Ok(())
}
