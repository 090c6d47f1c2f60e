//! Student-t tail probabilities and quantiles via the regularized
//! incomplete beta function.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg};
use statrs::function::gamma::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Set when `se == 0`; `p` is then reported as 0.
    pub degenerate: bool,
}

/// Two-sided tail probability `P(|T| ≥ |t|)` for `T ~ t(dof)`.
pub fn two_sided_p(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    beta_reg(0.5 * dof, 0.5, x).clamp(0.0, 1.0)
}

/// t statistic and two-sided p-value for `estimate / se`.
pub fn t_pvalue(estimate: f64, se: f64, dof: u64) -> TTest {
    assert!(dof >= 1, "t_pvalue needs at least one degree of freedom");
    if se == 0.0 {
        let t = if estimate == 0.0 {
            0.0
        } else {
            estimate.signum() * f64::INFINITY
        };
        return TTest {
            t,
            p: 0.0,
            degenerate: true,
        };
    }
    let t = estimate / se;
    TTest {
        t,
        p: two_sided_p(t, dof as f64),
        degenerate: false,
    }
}

/// Quantile function of the t distribution with `dof` degrees of freedom.
pub fn t_quantile(prob: f64, dof: f64) -> f64 {
    assert!((0.0..=1.0).contains(&prob), "probability out of range");
    if prob == 0.5 {
        return 0.0;
    }
    let tail = if prob > 0.5 { 1.0 - prob } else { prob };
    if tail == 0.0 {
        return if prob > 0.5 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    let x = inv_beta_reg(0.5 * dof, 0.5, 2.0 * tail);
    let mut q = (dof * (1.0 - x) / x).sqrt();
    // Polish the starting point with Newton steps on the upper tail.
    let ln_c =
        ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    for _ in 0..50 {
        let density = (ln_c - (dof + 1.0) / 2.0 * (1.0 + q * q / dof).ln()).exp();
        let step = (two_sided_p(q, dof) / 2.0 - tail) / density;
        if !step.is_finite() {
            break;
        }
        q = (q + step).max(0.5 * q);
        if step.abs() <= 1e-15 * q.max(1.0) {
            break;
        }
    }
    if prob > 0.5 {
        q
    } else {
        -q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// ∫_{|t|}^{∞} of the t density, doubled, by composite Simpson on the
    /// substitution u = atan(s/√ν) which maps the tail to a finite interval.
    fn p_by_quadrature(t: f64, dof: f64) -> f64 {
        let ln_c = statrs::function::gamma::ln_gamma((dof + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(dof / 2.0)
            - 0.5 * (dof * std::f64::consts::PI).ln();
        let sq = dof.sqrt();
        // density in s, times ds/du = √ν sec²u
        let f = |u: f64| {
            let s = sq * u.tan();
            let c = u.cos();
            (ln_c - (dof + 1.0) / 2.0 * (1.0 + s * s / dof).ln()).exp() * sq / (c * c)
        };
        let a = (t.abs() / sq).atan();
        let b = std::f64::consts::FRAC_PI_2;
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        2.0 * acc * h / 3.0
    }

    #[test]
    fn quadrature_oracle_checkpoint() {
        // t(5) critical value 2.571 leaves 5% in both tails.
        assert_abs_diff_eq!(p_by_quadrature(2.571, 5.0), 0.05, epsilon = 1e-3);
    }

    #[test]
    fn examples() {
        assert_eq!(t_pvalue(0.0, 1.0, 10).p, 1.0);
        assert_abs_diff_eq!(t_pvalue(1.96, 1.0, 1_000_000).p, 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(t_pvalue(2.571, 1.0, 5).p, 0.05, epsilon = 1e-3);
        let d = t_pvalue(3.0, 0.0, 4);
        assert!(d.degenerate);
        assert_eq!(d.p, 0.0);
    }

    #[test]
    fn matches_quadrature() {
        for dof in [1.0, 5.0, 30.0, 1000.0] {
            for t in [0.1, 0.5, 1.0, 2.0, 3.5, 7.0, 10.0] {
                assert_abs_diff_eq!(two_sided_p(t, dof), p_by_quadrature(t, dof), epsilon = 1e-6);
                assert_eq!(two_sided_p(-t, dof), two_sided_p(t, dof));
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for dof in [1.0, 3.0, 7.0, 40.0, 1e6] {
            for p in [0.55, 0.9, 0.95, 0.975, 0.999] {
                let q = t_quantile(p, dof);
                assert_abs_diff_eq!(1.0 - two_sided_p(q, dof) / 2.0, p, epsilon = 1e-10);
                assert_abs_diff_eq!(
                    t_quantile(1.0 - p, dof),
                    -q,
                    epsilon = 1e-9 * q.abs().max(1.0)
                );
            }
        }
        assert_abs_diff_eq!(t_quantile(0.95, 1e7), 1.6448536, epsilon = 1e-5);
        assert_abs_diff_eq!(t_quantile(0.975, 5.0), 2.5705818, epsilon = 1e-6);
    }
}
