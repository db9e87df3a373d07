//! Tail diagnostics for deciding which critical-rate regime a dataset is in.
//!
//! A polynomial tail index comes from the Hill estimator; light tails are
//! checked by regressing the empirical survival function under a stretched
//! exponential model; QQ points compare data against any tail model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tail::TailModel;

/// Hill estimate of a polynomial tail index from the top k order statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillFit {
    /// Order statistics used, counted from the top.
    pub k: usize,
    /// Estimated tail index: k / sum of log(top value / threshold).
    pub alpha: f64,
    /// The (k+1)-th largest value, the threshold the top k are compared to.
    pub threshold: f64,
    /// Estimates at every depth 1..=k; a flat trace supports the polynomial
    /// model. The last entry equals `alpha`.
    pub trace: Vec<f64>,
}

/// Fits the tail index of a polynomial (Pareto-like) upper tail.
///
/// Requires at least k+1 observations and a positive threshold; the top k
/// values must not all equal the threshold.
pub fn hill_estimator(data: &[f64], k: usize) -> Result<HillFit> {
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    if data.len() < k + 1 {
        return Err(Error::Argument(format!(
            "need at least {} observations for k={k}, got {}",
            k + 1,
            data.len()
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("data must be finite".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite"));

    let mut trace = Vec::with_capacity(k);
    for depth in 1..=k {
        let threshold = sorted[depth];
        if threshold <= 0.0 {
            return Err(Error::Domain(format!(
                "threshold at depth {depth} is {threshold}; the polynomial model needs a \
                 positive tail"
            )));
        }
        let sum: f64 = sorted[..depth].iter().map(|&y| (y / threshold).ln()).sum();
        trace.push(depth as f64 / sum);
    }
    let alpha = trace[k - 1];
    if !alpha.is_finite() {
        return Err(Error::Domain(
            "top values all equal the threshold; the tail index is undefined".into(),
        ));
    }
    Ok(HillFit { k, alpha, threshold: sorted[k], trace })
}

/// Least-squares fit of a stretched exponential upper tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StretchedExpFit {
    /// Stretch exponent; 1 is exponential, below 1 is heavier.
    pub gamma: f64,
    /// Rate in front of the stretched power.
    pub lambda: f64,
    /// The shift the fit was performed at.
    pub shift: f64,
    /// Fraction of variance explained on the regression scale.
    pub r_squared: f64,
    pub points: usize,
}

/// Fits survival(x) = exp(-lambda (x - shift)^gamma) by regressing
/// log(-log survival) on log(x - shift) at the empirical plotting positions
/// i / (n + 1).
///
/// All observations must exceed `shift` and at least 10 are required. A
/// non-positive fitted gamma means the model does not describe the data.
pub fn fit_stretched_exp(data: &[f64], shift: f64) -> Result<StretchedExpFit> {
    if data.len() < 10 {
        return Err(Error::Argument(format!(
            "need at least 10 observations, got {}",
            data.len()
        )));
    }
    if !shift.is_finite() || data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("data and shift must be finite".into()));
    }
    if data.iter().any(|&v| v <= shift) {
        return Err(Error::Domain(format!(
            "every observation must exceed the shift {shift}"
        )));
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();

    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (i, &x) in sorted.iter().enumerate() {
        let q = (i + 1) as f64 / (n + 1) as f64;
        // -log survival = -log(1 - q), via log1p for precision.
        ys.push((-(-q).ln_1p()).ln());
        xs.push((x - shift).ln());
    }
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return Err(Error::Domain(
            "observations are all equal after shifting; the regression is degenerate".into(),
        ));
    }
    let gamma = sxy / sxx;
    let lambda = (mean_y - gamma * mean_x).exp();
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(StretchedExpFit { gamma, lambda, shift, r_squared, points: n })
}

/// Pairs (observed value, model quantile) at the plotting positions
/// i / (n + 1), with the data sorted ascending. Points near the diagonal
/// support the model.
pub fn qq_points(data: &[f64], model: &TailModel) -> Result<Vec<(f64, f64)>> {
    model.validate()?;
    if data.is_empty() {
        return Err(Error::Argument("need at least one observation".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("data must be finite".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let q = (i + 1) as f64 / (n + 1) as f64;
            Ok((x, model.quantile(q)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::substream;
    use crate::tail::TailModel;
    use proptest::prelude::*;

    // ----- hill -----

    #[test]
    fn hill_matches_the_hand_computed_fixture() {
        let fit = hill_estimator(&[1.0, 2.0, 4.0, 8.0], 3).unwrap();
        let expect = 1.0 / (2.0 * std::f64::consts::LN_2);
        assert!((fit.alpha - expect).abs() < 1e-12, "alpha {} vs {expect}", fit.alpha);
        assert_eq!(fit.threshold, 1.0);
        assert_eq!(fit.trace.len(), 3);
        assert_eq!(fit.trace[2], fit.alpha);
        let first = 1.0 / std::f64::consts::LN_2;
        assert!((fit.trace[0] - first).abs() < 1e-12, "trace[0] {}", fit.trace[0]);
    }

    #[test]
    fn hill_recovers_a_known_polynomial_index() {
        let model = TailModel::Pareto { alpha: 3.0 };
        let mut rng = substream(99, &[0]);
        let data = model.sample_iid(20_000, &mut rng).unwrap();
        let fit = hill_estimator(&data, 1000).unwrap();
        assert!((fit.alpha - 3.0).abs() < 0.3, "alpha {}", fit.alpha);
    }

    #[test]
    fn hill_rejects_bad_inputs() {
        assert!(hill_estimator(&[1.0, 2.0], 0).is_err());
        assert!(hill_estimator(&[1.0, 2.0], 2).is_err());
        assert!(hill_estimator(&[0.0, 1.0], 1).is_err());
        assert!(hill_estimator(&[-2.0, -1.0, 5.0], 2).is_err());
        assert!(hill_estimator(&[3.0, 3.0, 3.0, 3.0], 2).is_err());
        assert!(hill_estimator(&[1.0, f64::NAN, 2.0], 1).is_err());
    }

    // ----- stretched exponential -----

    #[test]
    fn stretched_exp_fit_is_exact_on_model_quantiles() {
        let (lambda, gamma, shift) = (0.7, 1.8, 2.0);
        let n = 50;
        let data: Vec<f64> = (1..=n)
            .map(|i| {
                let q = i as f64 / (n + 1) as f64;
                shift + ((-(-q).ln_1p()) / lambda).powf(1.0 / gamma)
            })
            .collect();
        let fit = fit_stretched_exp(&data, shift).unwrap();
        assert!((fit.gamma - gamma).abs() < 1e-9, "gamma {}", fit.gamma);
        assert!((fit.lambda - lambda).abs() < 1e-9, "lambda {}", fit.lambda);
        assert!(fit.r_squared > 1.0 - 1e-12, "r2 {}", fit.r_squared);
        assert_eq!(fit.points, 50);
    }

    #[test]
    fn pure_exponential_data_fits_with_gamma_one() {
        let n = 200;
        let rate = 2.5;
        let data: Vec<f64> = (1..=n)
            .map(|i| {
                let q = i as f64 / (n + 1) as f64;
                -(-q).ln_1p() / rate
            })
            .collect();
        let fit = fit_stretched_exp(&data, 0.0).unwrap();
        assert!((fit.gamma - 1.0).abs() < 1e-9, "gamma {}", fit.gamma);
        assert!((fit.lambda - rate).abs() < 1e-9, "lambda {}", fit.lambda);
    }

    #[test]
    fn stretched_exp_rejects_bad_inputs() {
        let ok: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        assert!(fit_stretched_exp(&ok[..5], 0.0).is_err());
        assert!(fit_stretched_exp(&ok, 1.0).is_err());
        assert!(fit_stretched_exp(&[4.0; 12], 0.0).is_err());
    }

    // ----- qq -----

    #[test]
    fn single_observation_pairs_with_the_median() {
        let model = TailModel::Exponential { rate: 2.0 };
        let points = qq_points(&[0.9], &model).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].0, 0.9);
        let median = model.quantile(0.5).unwrap();
        assert!((points[0].1 - median).abs() < 1e-15);
    }

    #[test]
    fn exact_model_quantiles_land_on_the_diagonal() {
        let model = TailModel::BoundedPower { alpha: 1.0 };
        let data: Vec<f64> = (1..=5).map(|i| i as f64 / 6.0).collect();
        for (observed, theoretical) in qq_points(&data, &model).unwrap() {
            assert!(
                (observed - theoretical).abs() < 1e-12,
                "{observed} vs {theoretical}"
            );
        }
    }

    #[test]
    fn qq_validates_model_and_data() {
        let bad = TailModel::Pareto { alpha: 0.0 };
        assert!(qq_points(&[1.0], &bad).is_err());
        let model = TailModel::Exponential { rate: 1.0 };
        assert!(qq_points(&[], &model).is_err());
        assert!(qq_points(&[f64::INFINITY], &model).is_err());
    }

    // ----- properties -----

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn qq_theoretical_coordinates_are_nondecreasing(
            mut data in proptest::collection::vec(0.01f64..100.0, 1..40),
        ) {
            let model = TailModel::Exponential { rate: 1.0 };
            let points = qq_points(&data, &model).unwrap();
            for w in points.windows(2) {
                prop_assert!(w[0].0 <= w[1].0);
                prop_assert!(w[0].1 <= w[1].1);
            }
            data.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let observed: Vec<f64> = points.iter().map(|p| p.0).collect();
            prop_assert_eq!(observed, data);
        }

        #[test]
        fn hill_trace_is_finite_on_distinct_positive_data(
            raw in proptest::collection::vec(0.1f64..1000.0, 3..30),
        ) {
            let mut data = raw.clone();
            data.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            data.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            prop_assume!(data.len() >= 3);
            let k = data.len() - 1;
            let fit = hill_estimator(&data, k).unwrap();
            for (depth, a) in fit.trace.iter().enumerate() {
                prop_assert!(a.is_finite() && *a > 0.0, "depth {depth}: {a}");
            }
        }
    }
}
