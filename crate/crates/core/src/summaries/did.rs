//! Windowed post-minus-pre contrasts of bin coefficients.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::stars::StarScheme;
use super::SummaryError;
use crate::estimator::{t_pvalue, EventStudyFit};

/// Averaging window: `±w` months or every bin on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Window {
    Months(u32),
    Full,
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Window::Months(w) => write!(f, "{w}m"),
            Window::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Window {
    type Err = SummaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if s == "full" {
            return Ok(Window::Full);
        }
        let digits = s.strip_suffix('m').unwrap_or(&s);
        match digits.parse::<u32>() {
            Ok(w) if w > 0 && w % 3 == 0 => Ok(Window::Months(w)),
            _ => Err(SummaryError::InvalidWindow(s.to_string())),
        }
    }
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Which degrees of freedom a treated-minus-control contrast uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DofRule {
    #[default]
    Treated,
    /// Smaller of the two fits' inference dof.
    Min,
}

impl FromStr for DofRule {
    type Err = SummaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "treated" => Ok(DofRule::Treated),
            "min" => Ok(DofRule::Min),
            other => Err(SummaryError::InvalidDofRule(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DidOptions {
    /// Fail instead of reweighting when a window bin was not estimated.
    pub strict_missing: bool,
    pub dof_rule: DofRule,
    pub stars: StarScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastWeight {
    pub bin: i32,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DidGroup {
    Single,
    TreatedMinusControl,
}

/// A windowed DiD summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DidSummary {
    pub window: Window,
    pub group: DidGroup,
    pub estimate: f64,
    pub se: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
    pub dof: u64,
    pub degenerate: bool,
    /// Weights over bins (the reference bin included with its implicit zero
    /// coefficient); post weights sum to +1, pre weights to −1.
    pub contrast: Vec<ContrastWeight>,
    /// Control-side weights for treated-minus-control contrasts.
    pub control_contrast: Option<Vec<ContrastWeight>>,
    /// Window bins absent from the fit and left out of the averages.
    pub missing_bins: Vec<i32>,
}

/// Resolved window sides for one fit.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sides {
    pub pre: Vec<i32>,
    pub post: Vec<i32>,
    pub missing: Vec<i32>,
}

pub(crate) fn window_sides(
    fit: &EventStudyFit,
    window: Window,
    strict: bool,
) -> Result<Sides, SummaryError> {
    let available: BTreeSet<i32> = fit
        .bins
        .iter()
        .copied()
        .chain(std::iter::once(fit.ref_bin))
        .collect();
    let (pre_set, post_set): (Vec<i32>, Vec<i32>) = match window {
        Window::Months(w) => {
            let w = w as i32;
            (
                (-w / 3..=-1).map(|k| 3 * k).collect(),
                (1..=w / 3).map(|k| 3 * k).collect(),
            )
        }
        Window::Full => {
            let universe: BTreeSet<i32> =
                available.iter().chain(&fit.dropped_bins).copied().collect();
            (
                universe.iter().copied().filter(|&b| b < 0).collect(),
                universe.iter().copied().filter(|&b| b > 0).collect(),
            )
        }
    };
    let mut missing = Vec::new();
    let mut keep = |set: Vec<i32>| -> Vec<i32> {
        set.into_iter()
            .filter(|b| {
                let ok = available.contains(b);
                if !ok {
                    missing.push(*b);
                }
                ok
            })
            .collect()
    };
    let pre = keep(pre_set);
    let post = keep(post_set);
    missing.sort_unstable();
    if strict && !missing.is_empty() {
        return Err(SummaryError::MissingBins {
            window,
            bins: missing,
        });
    }
    if !missing.is_empty() {
        log::warn!(
            "DiD({window}): bins {missing:?} not estimated; averaging over the remaining bins"
        );
    }
    if pre.is_empty() || post.is_empty() {
        return Err(SummaryError::EmptyWindowSide {
            window,
            side: if pre.is_empty() { "pre" } else { "post" },
        });
    }
    Ok(Sides { pre, post, missing })
}

fn beta_or_ref(fit: &EventStudyFit, bin: i32) -> f64 {
    if bin == fit.ref_bin {
        0.0
    } else {
        fit.coefficient(bin).expect("bin resolved against fit")
    }
}

/// Point estimate and contrast vector of one fit's window.
///
/// Coefficients are taken relative to the first post bin before averaging,
/// so a common shift of all coefficients cancels exactly.
pub(crate) fn contrast(fit: &EventStudyFit, sides: &Sides) -> (f64, Vec<ContrastWeight>) {
    let anchor = beta_or_ref(fit, sides.post[0]);
    let mean = |bins: &[i32]| {
        bins.iter()
            .map(|&b| beta_or_ref(fit, b) - anchor)
            .sum::<f64>()
            / bins.len() as f64
    };
    let estimate = mean(&sides.post) - mean(&sides.pre);
    let mut weights: Vec<ContrastWeight> = sides
        .pre
        .iter()
        .map(|&bin| ContrastWeight {
            bin,
            weight: -1.0 / sides.pre.len() as f64,
        })
        .chain(sides.post.iter().map(|&bin| ContrastWeight {
            bin,
            weight: 1.0 / sides.post.len() as f64,
        }))
        .collect();
    weights.sort_by_key(|w| w.bin);
    (estimate, weights)
}

/// `cᵀ V c` over the fit's estimated bins.
pub(crate) fn contrast_variance(fit: &EventStudyFit, weights: &[ContrastWeight]) -> Option<f64> {
    let v = fit.vcov.as_ref()?;
    let k = fit.k();
    let mut c = vec![0.0; k];
    for w in weights {
        if let Some(i) = fit.position(w.bin) {
            c[i] += w.weight;
        }
    }
    let mut var = 0.0;
    for i in 0..k {
        for j in 0..k {
            var += c[i] * v[i * k + j] * c[j];
        }
    }
    Some(var.max(0.0))
}

fn summarize(
    window: Window,
    group: DidGroup,
    estimate: f64,
    variance: Option<f64>,
    dof: u64,
    stars: &StarScheme,
) -> DidSummary {
    let (se, t, p, degenerate) = match variance {
        Some(var) => {
            let se = var.sqrt();
            let test = t_pvalue(estimate, se, dof.max(1));
            (Some(se), Some(test.t), Some(test.p), test.degenerate)
        }
        None => (None, None, None, false),
    };
    DidSummary {
        window,
        group,
        estimate,
        se,
        t,
        p,
        stars: p.map_or(String::new(), |p| stars.label(p).to_string()),
        dof,
        degenerate,
        contrast: Vec::new(),
        control_contrast: None,
        missing_bins: Vec::new(),
    }
}

/// `mean(β_b, b ∈ post) − mean(β_b, b ∈ pre)` with delta-method inference.
pub fn did_window(
    fit: &EventStudyFit,
    window: Window,
    options: &DidOptions,
) -> Result<DidSummary, SummaryError> {
    let sides = window_sides(fit, window, options.strict_missing)?;
    let (estimate, weights) = contrast(fit, &sides);
    let variance = contrast_variance(fit, &weights);
    let mut s = summarize(
        window,
        DidGroup::Single,
        estimate,
        variance,
        fit.dof_inference,
        &options.stars,
    );
    s.contrast = weights;
    s.missing_bins = sides.missing;
    Ok(s)
}

/// `DiD_T(w) − DiD_C(w)`, treating the two fits as independent.
pub fn did_treated_minus_control(
    treated: &EventStudyFit,
    control: &EventStudyFit,
    window: Window,
    options: &DidOptions,
) -> Result<DidSummary, SummaryError> {
    let sides_t = window_sides(treated, window, options.strict_missing)?;
    let sides_c = window_sides(control, window, options.strict_missing)?;
    if sides_t.pre != sides_c.pre || sides_t.post != sides_c.post {
        return Err(SummaryError::IncompatibleBins {
            window,
            treated: [sides_t.pre.clone(), sides_t.post.clone()].concat(),
            control: [sides_c.pre.clone(), sides_c.post.clone()].concat(),
        });
    }
    let (est_t, w_t) = contrast(treated, &sides_t);
    let (est_c, w_c) = contrast(control, &sides_c);
    let variance = contrast_variance(treated, &w_t)
        .zip(contrast_variance(control, &w_c))
        .map(|(a, b)| a + b);
    let dof = match options.dof_rule {
        DofRule::Treated => treated.dof_inference,
        DofRule::Min => treated.dof_inference.min(control.dof_inference),
    };
    let mut s = summarize(
        window,
        DidGroup::TreatedMinusControl,
        est_t - est_c,
        variance,
        dof,
        &options.stars,
    );
    s.contrast = w_t;
    s.control_contrast = Some(w_c);
    let mut missing: Vec<i32> = sides_t.missing.into_iter().chain(sides_c.missing).collect();
    missing.sort_unstable();
    missing.dedup();
    s.missing_bins = missing;
    Ok(s)
}
