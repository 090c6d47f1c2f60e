//! Windowed DiD contrasts, significance stars, tables and plot series.

mod did;
mod plot;
mod render;
mod stars;

use thiserror::Error;

pub use did::{
    did_treated_minus_control, did_window, ContrastWeight, DidGroup, DidOptions, DidSummary,
    DofRule, Window,
};
pub use plot::{export_plot_data, write_plot_csv, PlotPoint, PlotSeries};
pub use render::{fmt2, parse_csv_table, render_table, ParsedCells, ParsedTable, TableFormat};
pub use stars::{stars, StarScheme};

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("invalid window {0:?} (expected a positive multiple of 3 or `full`)")]
    InvalidWindow(String),
    #[error("DiD({window}): no estimated {side}-event bins in the window")]
    EmptyWindowSide { window: Window, side: &'static str },
    #[error("DiD({window}): bins {bins:?} were not estimated")]
    MissingBins { window: Window, bins: Vec<i32> },
    #[error("DiD({window}): treated bins {treated:?} and control bins {control:?} differ")]
    IncompatibleBins {
        window: Window,
        treated: Vec<i32>,
        control: Vec<i32>,
    },
    #[error("fit has no covariance matrix")]
    MissingCovariance,
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("unknown table format {0:?} (expected csv or latex)")]
    InvalidFormat(String),
    #[error("unknown dof rule {0:?} (expected treated or min)")]
    InvalidDofRule(String),
    #[error("table parse: {0}")]
    TableParse(String),
}
