use std::io::Write;

use serde::{Deserialize, Serialize};

use super::SummaryError;
use crate::estimator::{t_quantile, EventStudyFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub bin: i32,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-bin confidence intervals for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub group: String,
    pub level: f64,
    pub points: Vec<PlotPoint>,
}

/// `estimate ± q·se` with `q` the t quantile at `(1 + level)/2` and the
/// fit's inference dof. The reference bin is emitted as a zero-width
/// interval at 0.
pub fn export_plot_data(
    fit: &EventStudyFit,
    level: f64,
    group: &str,
) -> Result<PlotSeries, SummaryError> {
    if !(0.0 < level && level < 1.0) {
        return Err(SummaryError::InvalidLevel(level));
    }
    if fit.vcov.is_none() {
        return Err(SummaryError::MissingCovariance);
    }
    let q = t_quantile(0.5 * (1.0 + level), fit.dof_inference.max(1) as f64);
    let mut points: Vec<PlotPoint> = fit
        .bins
        .iter()
        .map(|&bin| {
            let est = fit.coefficient(bin).unwrap_or(0.0);
            let half = q * fit.se(bin).unwrap_or(0.0);
            PlotPoint {
                bin,
                estimate: est,
                lower: est - half,
                upper: est + half,
            }
        })
        .collect();
    points.push(PlotPoint {
        bin: fit.ref_bin,
        estimate: 0.0,
        lower: 0.0,
        upper: 0.0,
    });
    points.sort_by_key(|p| p.bin);
    Ok(PlotSeries {
        group: group.to_string(),
        level,
        points,
    })
}

fn level_suffix(level: f64) -> String {
    let pct = level * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round() as i64)
    } else {
        format!("{pct}").replace('.', "_")
    }
}

/// CSV with columns `bin,group,estimate,lo90,hi90` (suffix follows the level).
pub fn write_plot_csv<W: Write>(writer: W, series: &[PlotSeries]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let suffix = series
        .first()
        .map_or_else(|| "90".to_string(), |s| level_suffix(s.level));
    w.write_record([
        "bin",
        "group",
        "estimate",
        &format!("lo{suffix}"),
        &format!("hi{suffix}"),
    ])?;
    for s in series {
        for p in &s.points {
            w.write_record([
                p.bin.to_string(),
                s.group.clone(),
                p.estimate.to_string(),
                p.lower.to_string(),
                p.upper.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::two_sided_p;
    use crate::summaries::did::tests::hand_fit;
    use approx::assert_abs_diff_eq;

    /// Bisection on the CDF built from the tail probability.
    fn quantile_by_bisection(prob: f64, dof: f64) -> f64 {
        let cdf = |t: f64| {
            if t >= 0.0 {
                1.0 - two_sided_p(t, dof) / 2.0
            } else {
                two_sided_p(t, dof) / 2.0
            }
        };
        let (mut lo, mut hi) = (-1e3, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn intervals_include_reference_and_match_oracle() {
        let fit = hand_fit(
            &[-3, 3, 6],
            &[1.0, 2.0, -1.5],
            Some(vec![4.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.0, 0.0]),
        );
        let s = export_plot_data(&fit, 0.90, "Treated").unwrap();
        assert_eq!(
            s.points.iter().map(|p| p.bin).collect::<Vec<_>>(),
            [-3, 0, 3, 6]
        );
        let q = quantile_by_bisection(0.95, 5.0);
        assert_abs_diff_eq!(s.points[0].upper, 1.0 + 2.0 * q, epsilon = 1e-9);
        assert_abs_diff_eq!(s.points[2].lower, 2.0 - 0.5 * q, epsilon = 1e-9);
        assert_eq!((s.points[1].lower, s.points[1].upper), (0.0, 0.0));
        assert_eq!((s.points[3].lower, s.points[3].upper), (-1.5, -1.5));
        for p in &s.points {
            assert!(p.lower <= p.estimate && p.estimate <= p.upper);
        }
    }

    #[test]
    fn normal_limit_half_width() {
        let mut fit = hand_fit(&[3], &[0.0], Some(vec![1.0]));
        fit.dof_inference = 1_000_000;
        let s = export_plot_data(&fit, 0.90, "Control").unwrap();
        let p = s.points.iter().find(|p| p.bin == 3).unwrap();
        assert_abs_diff_eq!(p.upper, 1.645, epsilon = 1e-2);
    }

    #[test]
    fn csv_layout() {
        let fit = hand_fit(&[3], &[1.0], Some(vec![0.0]));
        let s = export_plot_data(&fit, 0.90, "Treated").unwrap();
        let mut buf = Vec::new();
        write_plot_csv(&mut buf, &[s]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "bin,group,estimate,lo90,hi90\n0,Treated,0,0,0\n3,Treated,1,1,1\n"
        );
    }

    #[test]
    fn needs_covariance() {
        let fit = hand_fit(&[3], &[1.0], None);
        assert!(matches!(
            export_plot_data(&fit, 0.9, "x"),
            Err(SummaryError::MissingCovariance)
        ));
    }
}
