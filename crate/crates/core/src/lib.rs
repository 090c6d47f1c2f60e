//! Pricing-panel pipeline and two-way fixed-effects event-study estimator.
//!
//! The crate is organised along the analysis path:
//!
//! - [`ingest`] reads the four raw relations (products, offers, clicks,
//!   retailers) and computes the latest-observation retailer snapshot.
//! - [`pipeline`] turns raw rows into the monthly product-retailer index
//!   panel and splits it into treated, control and strict-control samples.
//! - [`estimator`] fits the binned event-study regression with product and
//!   retailer fixed effects and two-way cluster-robust covariance.
//! - [`summaries`] forms windowed post-minus-pre contrasts, significance
//!   stars, tables and plot series.
//! - [`simulate`] generates raw relations with a known effect.

pub mod decimal;
pub mod estimator;
pub mod ingest;
pub mod pipeline;
pub mod simulate;
pub mod summaries;

pub use decimal::{Price, PriceParseError};
pub use estimator::{
    cgm_vcov, fit_event_study, fit_statistics, t_pvalue, within_transform, EstimatorError,
    EventStudyFit, FitOptions, FixedEffectsSolution, RegressionSample, RmseDenominator,
    SmallSampleCorrection,
};
pub use ingest::{
    load_table, retailer_snapshot, ClickRecord, IngestError, OfferRecord, ProductRecord,
    RetailerRecord, TableKind,
};
pub use pipeline::{
    build_panel, Diagnostics, IndexedObservation, PanelCell, PipelineConfig, PipelineError,
    SupPatternSet, YearMonth,
};
pub use simulate::{generate, SimConfig};
pub use summaries::{did_treated_minus_control, did_window, stars, DidSummary, StarScheme, Window};
