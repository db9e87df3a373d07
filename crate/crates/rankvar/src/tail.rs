//! Parametric attribute distributions.
//!
//! The ranking model draws latent per-item attributes from a common
//! distribution F; how quickly F decays at the ranked end is what decides how
//! deep a ranking can be trusted. This module provides the concrete families
//! used throughout the crate, exact inverse-CDF sampling, and a fast
//! generator for the k most extreme order statistics of a virtual size-p
//! sample based on the Renyi representation of uniform order statistics.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Which end of the sorted sample `sample_extreme_order_stats` produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// Attribute distribution family.
///
/// All families are parameterized so that the tail behavior is explicit:
/// `Exponential` and `StretchedExp` decay like exp(-c x^gamma), `Pareto`
/// polynomially, and `BoundedPower` has bounded support with density
/// exponent `alpha - 1` at the lower endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TailModel {
    /// F(x) = 1 - exp(-rate * x) for x >= 0.
    Exponential { rate: f64 },
    /// F(x) = 1 - x^(-alpha) for x >= 1.
    Pareto { alpha: f64 },
    /// F(x) = x^alpha on [0, 1].
    BoundedPower { alpha: f64 },
    /// Gaussian with mean `mu` and standard deviation `sigma`.
    Normal { mu: f64, sigma: f64 },
    /// Survival 1 - F(x) = exp(-lambda * (x - shift)^gamma) for x >= shift.
    StretchedExp { lambda: f64, gamma: f64, shift: f64 },
}

impl TailModel {
    /// Checks that all shape and scale parameters are strictly positive and
    /// finite (and that location parameters are finite).
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            TailModel::Exponential { rate } => ok(rate),
            TailModel::Pareto { alpha } => ok(alpha),
            TailModel::BoundedPower { alpha } => ok(alpha),
            TailModel::Normal { mu, sigma } => mu.is_finite() && ok(sigma),
            TailModel::StretchedExp { lambda, gamma, shift } => {
                ok(lambda) && ok(gamma) && shift.is_finite()
            }
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "invalid distribution parameters: {self:?} (scale and shape \
                 parameters must be positive and finite)"
            )))
        }
    }

    /// F evaluated at `x`, assuming `validate` has passed.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            TailModel::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            TailModel::Pareto { alpha } => {
                if x <= 1.0 {
                    0.0
                } else {
                    -(-alpha * x.ln()).exp_m1()
                }
            }
            TailModel::BoundedPower { alpha } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    x.powf(alpha)
                }
            }
            TailModel::Normal { mu, sigma } => std_normal().cdf((x - mu) / sigma),
            TailModel::StretchedExp { lambda, gamma, shift } => {
                if x <= shift {
                    0.0
                } else {
                    -(-lambda * (x - shift).powf(gamma)).exp_m1()
                }
            }
        }
    }

    /// F^{-1}(u) for u in the open interval (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!(
                "quantile argument u={u} must lie strictly inside (0, 1)"
            )));
        }
        Ok(self.quantile_unchecked(u))
    }

    /// F^{-1}(u) without parameter or range checks.
    fn quantile_unchecked(&self, u: f64) -> f64 {
        match *self {
            TailModel::Exponential { rate } => -(-u).ln_1p() / rate,
            TailModel::Pareto { alpha } => (1.0 - u).powf(-1.0 / alpha),
            TailModel::BoundedPower { alpha } => u.powf(1.0 / alpha),
            TailModel::Normal { mu, sigma } => mu + sigma * std_normal_quantile(u),
            TailModel::StretchedExp { lambda, gamma, shift } => {
                shift + ((-(-u).ln_1p()) / lambda).powf(1.0 / gamma)
            }
        }
    }

    /// Value x with survival 1 - F(x) = s. Used for upper order statistics,
    /// where computing 1 - s first would lose the digits that matter.
    fn survival_quantile_unchecked(&self, s: f64) -> f64 {
        match *self {
            TailModel::Exponential { rate } => -s.ln() / rate,
            TailModel::Pareto { alpha } => s.powf(-1.0 / alpha),
            TailModel::BoundedPower { alpha } => (1.0 - s).powf(1.0 / alpha),
            TailModel::Normal { mu, sigma } => mu - sigma * std_normal_quantile(s),
            TailModel::StretchedExp { lambda, gamma, shift } => {
                shift + ((-s.ln()) / lambda).powf(1.0 / gamma)
            }
        }
    }

    /// Draws `count` independent values by applying the quantile function to
    /// uniform variates from `rng`, one per value in output order.
    pub fn sample_iid<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out = Vec::with_capacity(count);
        self.fill_iid(&mut out, count, rng);
        Ok(out)
    }

    /// Appends `count` inverse-CDF draws to `out`. Callers must have
    /// validated the parameters.
    pub(crate) fn fill_iid<R: Rng + ?Sized>(&self, out: &mut Vec<f64>, count: usize, rng: &mut R) {
        out.reserve(count);
        for _ in 0..count {
            let u: f64 = rng.sample(Open01);
            out.push(self.quantile_unchecked(u));
        }
    }

    /// Samples the `k` most extreme order statistics of a virtual i.i.d.
    /// sample of size `p`, in O(k) time and memory.
    ///
    /// Uses the Renyi representation: partial sums V_j of independent
    /// exponential spacings Z_i / (p - i + 1) give uniform order statistics
    /// via 1 - exp(-V_j), which the quantile function maps to the target
    /// family. `side` selects the lowest or the highest k values; the output
    /// is sorted ascending either way.
    pub fn sample_extreme_order_stats<R: Rng + ?Sized>(
        &self,
        p: u64,
        k: usize,
        side: Side,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.validate()?;
        if k == 0 {
            return Ok(Vec::new());
        }
        if (k as u64) > p {
            return Err(Error::Argument(format!(
                "cannot take k={k} extreme order statistics from a sample of size p={p}"
            )));
        }
        let mut out = Vec::with_capacity(k);
        let mut v = 0.0_f64;
        for i in 0..k {
            let u: f64 = rng.sample(Open01);
            v += -u.ln() / (p - i as u64) as f64;
            // Probability mass between the ranked end and this order
            // statistic; exp_m1 keeps it accurate when v is tiny.
            let w = -(-v).exp_m1();
            out.push(match side {
                Side::Lower => self.quantile_unchecked(w),
                Side::Upper => self.survival_quantile_unchecked(w),
            });
        }
        if side == Side::Upper {
            out.reverse();
        }
        Ok(out)
    }

    /// Tail exponent `a` when the upper tail decays like exp(-c x^a), so the
    /// family falls in the exponential-type regime. `None` for polynomial
    /// decay and bounded support, where that regime does not apply.
    pub fn light_tail_exponent(&self) -> Option<f64> {
        match *self {
            TailModel::Exponential { .. } => Some(1.0),
            TailModel::Normal { .. } => Some(2.0),
            TailModel::StretchedExp { gamma, .. } => Some(gamma),
            TailModel::Pareto { .. } | TailModel::BoundedPower { .. } => None,
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Standard normal quantile, tightened by one Newton step so that the
/// cdf/quantile round-trip holds to full double precision.
fn std_normal_quantile(u: f64) -> f64 {
    let n = std_normal();
    let mut q = n.inverse_cdf(u);
    let density = n.pdf(q);
    if density > 0.0 && q.is_finite() {
        q -= (n.cdf(q) - u) / density;
    }
    q
}
