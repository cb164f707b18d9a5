use serde::Serialize;

use super::{DualSolution, FiniteMarket, PrimalSolution, SolveOptions};
use crate::scalar::{lit, Scalar};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerReport<T> {
    /// `E[X_hat U'(B + X_hat)]`.
    pub marginal_value: T,
    /// Extra capital charged by the dual completion.
    pub excess: T,
    /// `|marginal_value - excess| <= 1e-6`.
    pub agree: bool,
    pub corner: bool,
    /// Largest `|Y_hat - U'(B + X_hat)|` over states strictly inside the domain.
    pub marginal_mismatch: T,
    /// Set for kinked utilities, where `U'` is the right derivative.
    pub subgradient_dependent: bool,
}

pub fn classify_corner<T: Scalar>(
    m: &FiniteMarket<T>,
    p: &PrimalSolution<T>,
    d: &DualSolution<T>,
    u: &UtilitySpec<T>,
    opts: SolveOptions<T>,
) -> CornerReport<T> {
    let n = m.states();
    let wealth: Vec<T> = (0..n).map(|i| m.endowment[i] + p.x_hat[i]).collect();
    let marginal_value: T = (0..n)
        .map(|i| m.probs[i] * p.x_hat[i] * u.du(wealth[i]))
        .sum();
    let interior = |z: T| match u.lower_bound() {
        Some(l) => z - l > lit::<T>(1e-6) * l.abs().max(T::one()),
        None => true,
    };
    let marginal_mismatch = (0..n)
        .filter(|&i| interior(wealth[i]))
        .map(|i| (d.y_hat[i] - u.du(wealth[i])).abs())
        .fold(T::zero(), T::max);
    let agree = (marginal_value - d.excess).abs() <= lit(1e-6);
    let corner = marginal_value > opts.corner_tol && d.excess > opts.corner_tol;
    CornerReport {
        marginal_value,
        excess: d.excess,
        agree,
        corner,
        marginal_mismatch,
        subgradient_dependent: !u.is_differentiable(),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::extended::ExtReal;
    use crate::market::{solve_dual, solve_primal, Generator, Sided};

    fn binomial(p: f64) -> FiniteMarket<f64> {
        FiniteMarket::new(
            vec![p, 1.0 - p],
            vec![Generator {
                payoff: vec![1.0, -1.0],
                sided: Sided::Two,
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn truncated_exponential_corner() {
        let u = UtilitySpec::<f64>::custom(
            Arc::new(|x: f64| 1.0 - (-x).exp()),
            Arc::new(|x: f64| (-x).exp()),
            ExtReal::Finite(-1.0),
        )
        .unwrap();
        let m = binomial(0.9);
        let opts = SolveOptions::default();
        let p = solve_primal(&m, &u, opts).unwrap();
        let d = solve_dual(&m, &u, opts).unwrap();
        let r = classify_corner(&m, &p, &d, &u, opts);
        let e = 1f64.exp();
        assert!(r.corner && r.agree, "{r:?}");
        assert!((r.marginal_value - (0.9 / e - 0.1 * e)).abs() < 1e-6);
        assert!(r.marginal_mismatch < 1e-6);
        assert!(!r.subgradient_dependent);
    }

    #[test]
    fn interior_optimum_is_not_a_corner() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        let m = binomial(2.0 / 3.0);
        let opts = SolveOptions::default();
        let p = solve_primal(&m, &u, opts).unwrap();
        let d = solve_dual(&m, &u, opts).unwrap();
        let r = classify_corner(&m, &p, &d, &u, opts);
        assert!(!r.corner && r.agree);
        assert!(r.marginal_value.abs() < 1e-9);
    }
}
