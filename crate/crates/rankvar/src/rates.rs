//! Closed-form critical depth rates and regime classification.
//!
//! For attributes with an exponential-type tail the trustworthy ranking
//! depth grows like n^{1/4} (log n)^{((1/alpha)-1)/2}; for polynomially
//! decaying tails like (n^{alpha/2} p)^{1/(2 alpha + 1)}. On bounded support
//! with F(x) ~ x^alpha at the ranked endpoint, what matters is the size
//! ratio p^2 / n^alpha and, when alpha > 1/2, the depth threshold
//! (n^{alpha/2} / p)^{1/(2 alpha - 1)}. These are growth rates from
//! asymptotic theory: constant factors are unidentified, so reports carry
//! raw formula values plus interpretation notes, never verdicts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail regime of the attribute distribution at the ranked end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailFamily {
    Exponential,
    Polynomial,
    Bounded,
}

/// Finite-sample diagnostics for the bounded-support regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    /// p^2 / n^alpha, the quantity that must stay small for any ranks to be
    /// recoverable on bounded support.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_ratio: Option<f64>,
    /// (n^{alpha/2} / p)^{1/(2 alpha - 1)}; present only when alpha > 1/2.
    /// Correct depth is attainable while it grows strictly slower than this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_threshold: Option<f64>,
    /// (log j0)^{2 alpha} * p^2 / n^alpha, the boundary quantity at
    /// alpha = 1/2; present only when alpha = 1/2 and a depth was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_depth_term: Option<f64>,
    /// True when p^2 / n^alpha >= 1, the regime where even the first rank
    /// becomes unreliable as n and p grow proportionally.
    pub degenerate: bool,
}

impl RegimeDiagnostics {
    fn empty() -> Self {
        RegimeDiagnostics {
            size_ratio: None,
            rank_threshold: None,
            log_depth_term: None,
            degenerate: false,
        }
    }
}

/// Evaluated critical-rate quantities for one (n, p, alpha) configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub family: TailFamily,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u64>,
    /// The applicable depth growth rate for this family.
    pub rate: f64,
    pub diagnostics: RegimeDiagnostics,
    pub notes: Vec<String>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha={alpha} must be positive and finite")))
    }
}

/// Critical depth growth rate for exponential-type tails,
/// n^{1/4} (log n)^{((1/alpha)-1)/2}, at a real-valued n > 1.
pub fn critical_rate_exponential_real(n: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(n.is_finite() && n > 1.0) {
        return Err(Error::Domain(format!(
            "n={n} must exceed 1 so that log n is positive"
        )));
    }
    let log_n = n.ln();
    Ok(n.powf(0.25) * log_n.powf(0.5 * (1.0 / alpha - 1.0)))
}

/// Critical depth growth rate for exponential-type tails at an integer n >= 2.
pub fn critical_rate_exponential(n: u64, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("n={n} must be at least 2")));
    }
    critical_rate_exponential_real(n as f64, alpha)
}

/// Critical depth growth rate for polynomially decaying tails,
/// (n^{alpha/2} p)^{1/(2 alpha + 1)}.
///
/// Evaluated in log space so extreme alpha (the exponential-tail limit) does
/// not overflow.
pub fn critical_rate_polynomial(n: u64, p: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 1 || p < 1 {
        return Err(Error::Domain(format!("n={n} and p={p} must be at least 1")));
    }
    let log_rate = (0.5 * alpha * (n as f64).ln() + (p as f64).ln()) / (2.0 * alpha + 1.0);
    Ok(log_rate.exp())
}

/// Depth threshold (n^{alpha/2} / p)^{1/(2 alpha - 1)} for bounded support
/// with alpha > 1/2.
pub fn bounded_rank_threshold(n: u64, p: u64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha <= 0.5 {
        return Err(Error::Domain(format!(
            "alpha={alpha} must exceed 1/2 for the depth threshold to exist"
        )));
    }
    if n < 1 || p < 1 {
        return Err(Error::Domain(format!("n={n} and p={p} must be at least 1")));
    }
    let log_thr = (0.5 * alpha * (n as f64).ln() - (p as f64).ln()) / (2.0 * alpha - 1.0);
    Ok(log_thr.exp())
}

/// Builds the report for an exponential-type tail (p does not enter).
pub fn regime_report_exponential(n: u64, alpha: f64) -> Result<RegimeReport> {
    let rate = critical_rate_exponential(n, alpha)?;
    Ok(RegimeReport {
        family: TailFamily::Exponential,
        n,
        p: None,
        alpha,
        depth: None,
        rate,
        diagnostics: RegimeDiagnostics::empty(),
        notes: vec![
            "correct ranking depth is expected while it grows strictly slower than the rate"
                .into(),
        ],
    })
}

/// Builds the report for a polynomially decaying tail.
pub fn regime_report_polynomial(n: u64, p: u64, alpha: f64) -> Result<RegimeReport> {
    let rate = critical_rate_polynomial(n, p, alpha)?;
    Ok(RegimeReport {
        family: TailFamily::Polynomial,
        n,
        p: Some(p),
        alpha,
        depth: None,
        rate,
        diagnostics: RegimeDiagnostics::empty(),
        notes: vec![
            "correct ranking depth is expected while it grows strictly slower than the rate"
                .into(),
        ],
    })
}

/// Classifies a bounded-support configuration with F(x) ~ x^alpha at the
/// ranked endpoint.
///
/// All quantities are finite-sample diagnostics; the underlying theory is
/// asymptotic, so the notes describe regimes rather than assert conclusions.
pub fn classify_bounded_support(
    n: u64,
    p: u64,
    alpha: f64,
    depth: Option<u64>,
) -> Result<RegimeReport> {
    check_alpha(alpha)?;
    if n < 1 || p < 1 {
        return Err(Error::Domain(format!("n={n} and p={p} must be at least 1")));
    }
    if let Some(j0) = depth {
        if j0 < 1 {
            return Err(Error::Domain("depth must be at least 1 when supplied".into()));
        }
    }
    let log_ratio = 2.0 * (p as f64).ln() - alpha * (n as f64).ln();
    let size_ratio = log_ratio.exp();
    let degenerate = size_ratio >= 1.0;

    let mut notes = Vec::new();
    let mut rank_threshold = None;
    let mut log_depth_term = None;

    let rate = if alpha < 0.5 {
        notes.push(format!(
            "alpha={alpha} < 1/2: every rank down to p becomes attainable when the \
             size ratio is small; no depth constraint below the full list"
        ));
        p as f64
    } else if alpha == 0.5 {
        if let Some(j0) = depth {
            log_depth_term = Some((j0 as f64).ln().powf(2.0 * alpha) * size_ratio);
            notes.push(
                "alpha = 1/2 boundary: the supplied depth is attainable when \
                 (log j0)^(2 alpha) * p^2 / n^alpha is small"
                    .into(),
            );
        } else {
            notes.push(
                "alpha = 1/2 boundary: supply a depth to evaluate the \
                 (log j0)^(2 alpha) * p^2 / n^alpha criterion"
                    .into(),
            );
        }
        p as f64
    } else {
        let thr = bounded_rank_threshold(n, p, alpha)?;
        rank_threshold = Some(thr);
        notes.push(format!(
            "alpha={alpha} > 1/2: correct depth is expected while it grows strictly \
             slower than the threshold {thr:.6}"
        ));
        thr
    };
    if degenerate {
        notes.push(format!(
            "degenerate size regime: p^2 / n^alpha = {size_ratio:.6} >= 1, so even \
             the first rank is unreliable when n and p keep growing at these \
             relative rates"
        ));
    }

    Ok(RegimeReport {
        family: TailFamily::Bounded,
        n,
        p: Some(p),
        alpha,
        depth,
        rate,
        diagnostics: RegimeDiagnostics {
            size_ratio: Some(size_ratio),
            rank_threshold,
            log_depth_term,
            degenerate,
        },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exponential_rate_with_unit_alpha_drops_the_log_factor() {
        let v = critical_rate_exponential(10_000, 1.0).unwrap();
        assert!((v - 10.0).abs() < 1e-9, "got {v}");
        let w = critical_rate_exponential(500, 1.0).unwrap();
        assert!((w - 500f64.powf(0.25)).abs() < 1e-9, "got {w}");
    }

    #[test]
    fn exponential_rate_at_real_e_fourth() {
        let n = std::f64::consts::E.powi(4);
        let v = critical_rate_exponential_real(n, 2.0).unwrap();
        let expect = std::f64::consts::E * 4f64.powf(-0.25);
        assert!((v - expect).abs() < 1e-9, "got {v}, expected {expect}");
    }

    #[test]
    fn exponential_rate_rejects_tiny_n() {
        assert!(critical_rate_exponential(1, 1.0).is_err());
        assert!(critical_rate_exponential_real(1.0, 1.0).is_err());
        assert!(critical_rate_exponential(10, 0.0).is_err());
    }

    #[test]
    fn polynomial_rate_matches_hand_evaluation() {
        let v = critical_rate_polynomial(10_000, 10_000, 2.0).unwrap();
        let expect = 1e8f64.powf(0.2);
        assert!((v - expect).abs() < 1e-9, "got {v}, expected {expect}");
    }

    #[test]
    fn polynomial_rate_with_quadratic_p_has_the_composite_exponent() {
        // With p = 0.0005 n^2 and alpha = 4 the rate is proportional to
        // n^{4/9}; both grid points keep p an exact integer.
        let lo = critical_rate_polynomial(1_000, 500, 4.0).unwrap();
        let hi = critical_rate_polynomial(1_000_000, 500_000_000, 4.0).unwrap();
        let slope = (hi.ln() - lo.ln()) / (1e6f64.ln() - 1e3f64.ln());
        assert!((slope - 4.0 / 9.0).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn polynomial_rate_approaches_the_exponential_limit_for_huge_alpha() {
        let v = critical_rate_polynomial(10_000, 10_000, 1e6).unwrap();
        let ratio = v / 10_000f64.powf(0.25);
        assert!((ratio - 1.0).abs() < 0.01, "ratio {ratio}");
        assert!((v - 10.0).abs() < 0.1, "rate {v}");
    }

    #[test]
    fn bounded_threshold_slope_with_quadratic_p() {
        // p = 5e-6 n^2 at alpha = 6: the threshold grows like n^{1/11}.
        let lo = classify_bounded_support(5_000, 125, 6.0, None).unwrap();
        let hi = classify_bounded_support(500_000, 1_250_000, 6.0, None).unwrap();
        let slope = (hi.diagnostics.rank_threshold.unwrap().ln()
            - lo.diagnostics.rank_threshold.unwrap().ln())
            / (500_000f64.ln() - 5_000f64.ln());
        assert!((slope - 1.0 / 11.0).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn bounded_classification_flags_the_degenerate_regime() {
        let r = classify_bounded_support(100, 100, 1.0, None).unwrap();
        assert!((r.diagnostics.size_ratio.unwrap() - 100.0).abs() < 1e-9);
        assert!(r.diagnostics.degenerate);
        assert!(r.notes.iter().any(|n| n.contains("degenerate")));
    }

    #[test]
    fn bounded_threshold_reproduces_the_schools_configuration() {
        let r = classify_bounded_support(680, 75, 6.0, None).unwrap();
        let thr = r.diagnostics.rank_threshold.unwrap();
        assert!((thr - 4.0).abs() < 0.01, "threshold {thr}");
        assert_eq!(r.rate, thr);
    }

    #[test]
    fn bounded_diagnostics_appear_only_in_their_regimes() {
        let below = classify_bounded_support(100, 10, 0.4, Some(3)).unwrap();
        assert!(below.diagnostics.rank_threshold.is_none());
        assert!(below.diagnostics.log_depth_term.is_none());
        assert_eq!(below.rate, 10.0);

        let at = classify_bounded_support(10_000, 50, 0.5, Some(7)).unwrap();
        let term = at.diagnostics.log_depth_term.unwrap();
        let expect = 7f64.ln() * (2500.0 / 100.0);
        assert!((term - expect).abs() < 1e-9, "term {term}");
        assert!(at.diagnostics.rank_threshold.is_none());

        let above = classify_bounded_support(100, 10, 0.6, None).unwrap();
        assert!(above.diagnostics.rank_threshold.is_some());
        assert!(above.diagnostics.log_depth_term.is_none());
    }

    #[test]
    fn nonpositive_alpha_is_a_domain_error() {
        assert!(classify_bounded_support(100, 10, 0.0, None).is_err());
        assert!(classify_bounded_support(100, 10, -1.0, None).is_err());
        assert!(critical_rate_polynomial(100, 10, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn exponential_rate_increases_in_n(n in 8u64..100_000, alpha in 0.1f64..10.0) {
            let a = critical_rate_exponential(n, alpha).unwrap();
            let b = critical_rate_exponential(n + 1, alpha).unwrap();
            prop_assert!(b > a, "rate fell from {a} to {b} at n={n}");
        }

        #[test]
        fn polynomial_rate_increases_in_n_and_p(
            n in 8u64..100_000,
            p in 1u64..100_000,
            alpha in 0.1f64..10.0,
        ) {
            let base = critical_rate_polynomial(n, p, alpha).unwrap();
            prop_assert!(critical_rate_polynomial(n + 1, p, alpha).unwrap() > base);
            prop_assert!(critical_rate_polynomial(n, p + 1, alpha).unwrap() > base);
        }
    }
}
