use serde::Serialize;

use super::{FiniteMarket, Sided};
use crate::optimize::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArbitrageReport<T> {
    pub arbitrage_free: bool,
    /// Strictly positive separating density with `E[Y] = 1` when arbitrage free.
    pub density: Option<Vec<T>>,
    /// Nonnegative, nonzero claim in `C` otherwise.
    pub arbitrage: Option<Vec<T>>,
    pub theta: Option<Vec<T>>,
}

/// Decides whether the cone admits a strictly positive separating density.
pub fn check_no_arbitrage<T: Scalar>(m: &FiniteMarket<T>) -> ArbitrageReport<T> {
    let (n, k) = (m.states(), m.dim());
    // variables (Y_1..Y_n, t); maximize t with Y >= t, E[Y] = 1, t <= 1
    let mut lp = LinearProgram::new(n + 1);
    lp.objective[n] = T::one();
    lp.nonneg[n] = false;
    for i in 0..n {
        let mut row = vec![T::zero(); n + 1];
        row[i] = -T::one();
        row[n] = T::one();
        lp.constrain(row, Relation::Le, T::zero());
    }
    let mut mass = m.probs.clone();
    mass.push(T::zero());
    lp.constrain(mass, Relation::Eq, T::one());
    for g in &m.generators {
        let mut row: Vec<T> = m
            .probs
            .iter()
            .zip(&g.payoff)
            .map(|(&p, &x)| p * x)
            .collect();
        row.push(T::zero());
        let rel = if g.sided == Sided::Two {
            Relation::Eq
        } else {
            Relation::Le
        };
        lp.constrain(row, rel, T::zero());
    }
    let mut cap = vec![T::zero(); n + 1];
    cap[n] = T::one();
    lp.constrain(cap, Relation::Le, T::one());
    if let LpOutcome::Optimal { x, value } = lp.solve() {
        if value > lit(1e-9) {
            return ArbitrageReport {
                arbitrage_free: true,
                density: Some(x[..n].to_vec()),
                arbitrage: None,
                theta: None,
            };
        }
    }
    // maximize E[G theta] subject to 0 <= G theta <= 1
    let mut lp = LinearProgram::new(k);
    for (j, g) in m.generators.iter().enumerate() {
        lp.objective[j] = m.expect(&g.payoff);
        lp.nonneg[j] = g.sided == Sided::One;
    }
    for i in 0..n {
        let row: Vec<T> = m.generators.iter().map(|g| g.payoff[i]).collect();
        lp.constrain(row.clone(), Relation::Ge, T::zero());
        lp.constrain(row, Relation::Le, T::one());
    }
    match lp.solve() {
        LpOutcome::Optimal { x, value } if value > lit(1e-12) => {
            let claim = m.claim(&x);
            ArbitrageReport {
                arbitrage_free: false,
                density: None,
                arbitrage: Some(claim),
                theta: Some(x),
            }
        }
        // numerically borderline: no positive density and no strict arbitrage claim
        _ => ArbitrageReport {
            arbitrage_free: false,
            density: None,
            arbitrage: None,
            theta: None,
        },
    }
}

/// Largest `t` such that `B + G theta >= lower + t` for some admissible `theta` (capped at 1).
/// A positive margin means `B + C` meets the interior of the utility domain.
pub fn core_margin<T: Scalar>(m: &FiniteMarket<T>, lower: T) -> T {
    let (n, k) = (m.states(), m.dim());
    let mut lp = LinearProgram::new(k + 1);
    lp.objective[k] = T::one();
    lp.nonneg[k] = false;
    for (j, g) in m.generators.iter().enumerate() {
        lp.nonneg[j] = g.sided == Sided::One;
    }
    for i in 0..n {
        let mut row: Vec<T> = m.generators.iter().map(|g| -g.payoff[i]).collect();
        row.push(T::one());
        lp.constrain(row, Relation::Le, m.endowment[i] - lower);
    }
    let mut cap = vec![T::zero(); k + 1];
    cap[k] = T::one();
    lp.constrain(cap, Relation::Le, T::one());
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => value,
        _ => T::neg_infinity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Generator;

    fn market(
        probs: Vec<f64>,
        gens: Vec<(Vec<f64>, Sided)>,
        b: Option<Vec<f64>>,
    ) -> FiniteMarket<f64> {
        FiniteMarket::new(
            probs,
            gens.into_iter()
                .map(|(payoff, sided)| Generator { payoff, sided })
                .collect(),
            b,
        )
        .unwrap()
    }

    #[test]
    fn symmetric_binomial_is_arbitrage_free() {
        let m = market(vec![0.5, 0.5], vec![(vec![1.0, -1.0], Sided::Two)], None);
        let r = check_no_arbitrage(&m);
        assert!(r.arbitrage_free);
        let d = r.density.unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_lottery_is_arbitrage() {
        let m = market(vec![0.5, 0.5], vec![(vec![1.0, 0.0], Sided::One)], None);
        let r = check_no_arbitrage(&m);
        assert!(!r.arbitrage_free);
        let x = r.arbitrage.unwrap();
        assert!(x[0] > 0.0 && x[1] == 0.0);
    }

    #[test]
    fn one_sided_short_sale_constraint() {
        // (1, -1) is only arbitrage-free as a ray if some density prices it at <= 0
        let m = market(vec![0.9, 0.1], vec![(vec![1.0, -1.0], Sided::One)], None);
        assert!(check_no_arbitrage(&m).arbitrage_free);
        let m = market(vec![0.5, 0.5], vec![(vec![1.0, 1.0], Sided::Two)], None);
        assert!(!check_no_arbitrage(&m).arbitrage_free);
    }

    #[test]
    fn core_margin_sign() {
        let m = market(vec![0.5, 0.5], vec![(vec![1.0, -1.0], Sided::Two)], None);
        assert!((core_margin(&m, -1.0) - 1.0).abs() < 1e-12);
        assert!(core_margin(&m, 0.0) <= 0.0);
        let m = market(
            vec![0.5, 0.5],
            vec![(vec![1.0, -1.0], Sided::Two)],
            Some(vec![0.5, 0.5]),
        );
        assert!(core_margin(&m, 0.0) > 0.0);
    }
}
