//! One-period markets on finitely many states.
//!
//! Claims attainable at zero cost form the cone `C = {G theta - s : s >= 0}` spanned by the
//! generator columns of `G`, with `theta_j >= 0` for one-sided generators.

mod arbitrage;
mod bound;
mod complete;
mod corner;
mod dual;
mod indirect;
mod primal;

pub use arbitrage::{check_no_arbitrage, core_margin, ArbitrageReport};
pub use bound::{scaled_bound_check, ScaledBoundReport};
pub use complete::{complete_market_value, CompleteValue};
pub use corner::{classify_corner, CornerReport};
pub use dual::{solve_dual, support_function, Completion, DualSolution};
pub use indirect::{indirect_utility_profile, IndirectProfile, IndirectRow};
pub use primal::{solve_primal, PrimalSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sided {
    #[serde(rename = "one")]
    One,
    #[serde(rename = "two")]
    Two,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator<T> {
    pub payoff: Vec<T>,
    pub sided: Sided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMarket<T> {
    pub probs: Vec<T>,
    pub generators: Vec<Generator<T>>,
    pub endowment: Vec<T>,
    /// Indices (in the input) of the states that were kept.
    #[serde(skip)]
    pub kept_states: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketJson<T> {
    probs: Vec<T>,
    generators: Vec<Generator<T>>,
    #[serde(default)]
    endowment: Option<Vec<T>>,
}

/// Tolerances shared by the solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    /// Target for the barrier duality gap and primal/dual agreement.
    pub tol: T,
    /// Threshold separating full from effective completions.
    pub corner_tol: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-6),
            corner_tol: lit(1e-8),
        }
    }
}

impl<T: Scalar> FiniteMarket<T> {
    /// Validates the instance and drops zero-probability states.
    pub fn new(
        probs: Vec<T>,
        generators: Vec<Generator<T>>,
        endowment: Option<Vec<T>>,
    ) -> Result<Self> {
        let n = probs.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "probs: at least one state required".into(),
            ));
        }
        for (i, p) in probs.iter().enumerate() {
            if !(p.is_finite() && *p >= T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "probs[{i}]: must be a nonnegative number"
                )));
            }
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > lit::<T>(1e-12).max(T::epsilon() * lit(16.0)) {
            return Err(Error::InvalidInput(format!(
                "probs: sum is {total}, expected 1"
            )));
        }
        for (j, g) in generators.iter().enumerate() {
            if g.payoff.len() != n {
                return Err(Error::InvalidInput(format!(
                    "generators[{j}].payoff: length {} does not match {n} states",
                    g.payoff.len()
                )));
            }
            if g.payoff.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "generators[{j}].payoff: non-finite entry"
                )));
            }
            if g.payoff.iter().all(|x| *x == T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "generators[{j}].payoff: zero claim"
                )));
            }
        }
        let endowment = endowment.unwrap_or_else(|| vec![T::zero(); n]);
        if endowment.len() != n || endowment.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "endowment: expected {n} finite numbers"
            )));
        }
        let kept: Vec<usize> = (0..n).filter(|&i| probs[i] > T::zero()).collect();
        let pick = |v: &[T]| kept.iter().map(|&i| v[i]).collect::<Vec<T>>();
        let generators = generators
            .iter()
            .map(|g| Generator {
                payoff: pick(&g.payoff),
                sided: g.sided,
            })
            .filter(|g| g.payoff.iter().any(|x| *x != T::zero()))
            .collect();
        Ok(Self {
            probs: pick(&probs),
            generators,
            endowment: pick(&endowment),
            kept_states: kept,
        })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: MarketJson<T> = serde_json::from_str(s).map_err(|e| {
            Error::InvalidInput(format!(
                "market JSON, line {} column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        Self::new(raw.probs, raw.generators, raw.endowment)
    }

    pub fn states(&self) -> usize {
        self.probs.len()
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn expect(&self, x: &[T]) -> T {
        crate::scalar::expectation(&self.probs, x)
    }

    /// `G theta`.
    pub fn claim(&self, theta: &[T]) -> Vec<T> {
        (0..self.states())
            .map(|i| {
                self.generators
                    .iter()
                    .zip(theta)
                    .map(|(g, &t)| g.payoff[i] * t)
                    .sum()
            })
            .collect()
    }

    pub fn has_endowment(&self) -> bool {
        self.endowment.iter().any(|b| *b != T::zero())
    }

    /// Same market with every generator multiplied by `c > 0`.
    pub fn scaled_generators(&self, c: T) -> Self {
        let mut out = self.clone();
        for g in &mut out.generators {
            g.payoff.iter_mut().for_each(|x| *x = *x * c);
        }
        out
    }

    /// Whether `E[g Z] = 0` (two-sided) or `<= 0` (one-sided) for every generator, to `tol`.
    pub fn separates(&self, z: &[T], tol: T) -> bool {
        self.generators.iter().all(|g| {
            let v: T = self
                .probs
                .iter()
                .zip(&g.payoff)
                .zip(z)
                .map(|((&p, &x), &y)| p * x * y)
                .sum();
            match g.sided {
                Sided::Two => v.abs() <= tol,
                Sided::One => v <= tol,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_drop_null_states() {
        let m = FiniteMarket::<f64>::from_json_str(
            r#"{"probs":[0.5,0.0,0.5],"generators":[{"payoff":[1,3,-1],"sided":"two"},{"payoff":[0,1,0],"sided":"one"}]}"#,
        )
        .unwrap();
        assert_eq!(m.states(), 2);
        assert_eq!(m.dim(), 1, "generator living on the null state is dropped");
        assert_eq!(m.kept_states, vec![0, 2]);
        assert_eq!(m.endowment, vec![0.0, 0.0]);
    }

    #[test]
    fn malformed_inputs() {
        let bad = [
            r#"{"probs":[0.5,0.6],"generators":[]}"#,
            r#"{"probs":[0.5,0.5],"generators":[{"payoff":[1],"sided":"two"}]}"#,
            r#"{"probs":[0.5,0.5],"generators":[{"payoff":[0,0],"sided":"two"}]}"#,
            r#"{"probs":[0.5,0.5],"generators":[{"payoff":[1,-1],"sided":"three"}]}"#,
            r#"{"probs":[1.0],"generators":[],"extra":1}"#,
            r#"{"probs":[0.5,0.5],"generators":[],"endowment":[1]}"#,
        ];
        for b in bad {
            assert!(
                matches!(
                    FiniteMarket::<f64>::from_json_str(b),
                    Err(Error::InvalidInput(_))
                ),
                "{b}"
            );
        }
    }
}
