use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{FiniteMarket, Sided};
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledBoundReport<T> {
    pub holds: bool,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `rhs - lhs` seen.
    pub min_slack: T,
    /// First claim violating the bound beyond `1e-10`.
    pub witness: Option<Vec<T>>,
}

/// Both sides of
/// `E[U(X)] <= I_V(l1 Y) + I_V(l2 Y) + l1 E[X Y] - (l2 - l1) E[X^- Y]`
/// for a normalized utility.
pub fn scaled_bound_sides<T: Scalar>(
    un: &UtilitySpec<T>,
    probs: &[T],
    x: &[T],
    y: &[T],
    l1: T,
    l2: T,
) -> (T, T) {
    let mut lhs = T::zero();
    let mut rhs = T::zero();
    for i in 0..probs.len() {
        let p = probs[i];
        if p == T::zero() {
            continue;
        }
        let neg = (-x[i]).max(T::zero());
        lhs = lhs + p * un.u(x[i]);
        rhs = rhs
            + p * (un.v(l1 * y[i]) + un.v(l2 * y[i]) + l1 * x[i] * y[i] - (l2 - l1) * neg * y[i]);
    }
    (lhs, rhs)
}

/// Checks the two-multiplier upper bound on random claims `X = B + G theta - s`.
pub fn scaled_bound_check<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    y_tilde: &[T],
    lambdas: (T, T),
    samples: usize,
    seed: u64,
) -> Result<ScaledBoundReport<T>> {
    let (l1, l2) = lambdas;
    if !(l1 > T::zero() && l2 > l1) {
        return Err(Error::InvalidInput("need 0 < lambda1 < lambda2".into()));
    }
    if y_tilde.len() != m.states() || y_tilde.iter().any(|y| !(*y >= T::zero())) {
        return Err(Error::InvalidInput(
            "Y must be nonnegative with one entry per state".into(),
        ));
    }
    let un = if u.normalized {
        u.clone()
    } else {
        u.normalize()?
    };
    for lam in [l1, l2] {
        let iv: T = (0..m.states())
            .map(|i| m.probs[i] * un.v(lam * y_tilde[i]))
            .sum();
        if !iv.is_finite() {
            return Err(Error::InvalidInput(format!(
                "I_V({}) Y is infinite",
                lam.as_f64()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ScaledBoundReport {
        holds: true,
        samples,
        violations: 0,
        min_slack: T::infinity(),
        witness: None,
    };
    for _ in 0..samples {
        let theta: Vec<T> = m
            .generators
            .iter()
            .map(|g| {
                let t: f64 = rng.gen_range(-3.0..3.0);
                lit(if g.sided == Sided::One { t.abs() } else { t })
            })
            .collect();
        let mut x = m.claim(&theta);
        for (xi, &b) in x.iter_mut().zip(&m.endowment) {
            let s: f64 = if rng.gen_bool(0.5) {
                rng.gen_range(0.0..1.0)
            } else {
                0.0
            };
            *xi = *xi + b - lit(s);
        }
        let (lhs, rhs) = scaled_bound_sides(&un, &m.probs, &x, y_tilde, l1, l2);
        if lhs == T::neg_infinity() {
            continue;
        }
        let slack = rhs - lhs;
        report.min_slack = report.min_slack.min(slack);
        if slack < -lit::<T>(1e-10) * (T::one() + rhs.abs()) {
            report.violations += 1;
            report.holds = false;
            if report.witness.is_none() {
                report.witness = Some(x);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Generator;

    #[test]
    fn bound_holds_on_binomial() {
        let m = FiniteMarket::new(
            vec![0.3, 0.7],
            vec![Generator {
                payoff: vec![2.0, -1.0],
                sided: Sided::Two,
            }],
            None,
        )
        .unwrap();
        for u in [
            UtilitySpec::<f64>::exponential(1.0).unwrap(),
            UtilitySpec::<f64>::log(1.0).unwrap(),
        ] {
            let r = scaled_bound_check(&m, &u, &[0.8, 1.2], (0.5, 2.0), 500, 7).unwrap();
            assert!(r.holds, "{r:?}");
            assert!(r.min_slack >= -1e-10);
        }
    }

    #[test]
    fn tight_at_zero_claim_and_matching_multipliers() {
        // X = 0 gives 0 <= V(l1 Y) + V(l2 Y), with equality when l Y = U'(0) = 1 for exponential utility
        let u = UtilitySpec::<f64>::exponential(1.0)
            .unwrap()
            .normalize()
            .unwrap();
        let (lhs, rhs) = scaled_bound_sides(&u, &[1.0], &[0.0], &[1.0], 1.0, 1.0 + 1e-12);
        assert!(lhs.abs() < 1e-15 && rhs.abs() < 1e-10, "{lhs} {rhs}");
    }

    #[test]
    fn rejects_bad_multipliers() {
        let m = FiniteMarket::new(vec![1.0], vec![], None).unwrap();
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        assert!(scaled_bound_check(&m, &u, &[1.0], (2.0, 1.0), 10, 0).is_err());
    }
}
