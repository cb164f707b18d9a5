use serde::Serialize;

use super::{check_no_arbitrage, core_margin, FiniteMarket, Sided, SolveOptions};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::optimize::{
    minimize_barrier, strictly_feasible_point, BarrierOptions, BarrierProblem, Constraint,
    LinearProgram, LpOutcome, Relation, SmoothEval,
};
use crate::scalar::{lit, Scalar};
use crate::utility::{Family, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Completion {
    Full,
    Effective,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution<T> {
    pub y_hat: Vec<T>,
    /// `I_V(Y_hat) + support_term`.
    pub value: T,
    /// Support function of `(B + C) ∩ dom I_U` at `Y_hat`.
    pub support_term: T,
    /// `support_term - E[B Y_hat]`: the extra initial capital the completion charges.
    pub excess: T,
    pub completion: Completion,
    pub q_hat: Vec<T>,
    /// Multiplier of the domain constraint; nonzero only on states pinned at the lower bound.
    pub nu: Vec<T>,
}

/// `sup {E[X Y] : X in B + C, X >= lower}` for `Y >= 0`.
pub fn support_function<T: Scalar>(m: &FiniteMarket<T>, lower: Option<T>, y: &[T]) -> T {
    let (n, k) = (m.states(), m.dim());
    let base: T = (0..n).map(|i| m.probs[i] * m.endowment[i] * y[i]).sum();
    if k == 0 {
        return base;
    }
    let mut lp = LinearProgram::new(k);
    for (j, g) in m.generators.iter().enumerate() {
        let terms: Vec<T> = (0..n).map(|i| m.probs[i] * g.payoff[i] * y[i]).collect();
        let scale: T = terms.iter().map(|t| t.abs()).sum();
        let c: T = terms.iter().copied().sum();
        lp.objective[j] = if c.abs() <= scale * lit(1e-11) {
            T::zero()
        } else {
            c
        };
        lp.nonneg[j] = g.sided == Sided::One;
    }
    if let Some(l) = lower {
        for i in 0..n {
            let row: Vec<T> = m.generators.iter().map(|g| -g.payoff[i]).collect();
            lp.constrain(row, Relation::Le, m.endowment[i] - l);
        }
    }
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => base + value,
        LpOutcome::Unbounded => T::infinity(),
        LpOutcome::Infeasible => T::neg_infinity(),
    }
}

/// `min_{Y >= 0} E[V(Y)] + support(Y)`, solved jointly with the multiplier `nu` of the domain
/// constraint: minimize `E[V(Y) + B Y + (B - lower) nu]` over `Y, nu >= 0` with `Y + nu`
/// separating.
pub fn solve_dual<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    opts: SolveOptions<T>,
) -> Result<DualSolution<T>> {
    if !check_no_arbitrage(m).arbitrage_free {
        return Err(Error::Arbitrage);
    }
    let lower = u.lower_bound();
    if let Some(l) = lower {
        let margin = core_margin(m, l);
        if !(margin > lit(1e-12)) {
            return Err(Error::InfeasibleCore {
                margin: margin.as_f64(),
            });
        }
    }
    let (mut y, mut nu) = if let Family::PiecewiseLinear { slopes, kinks } = &u.family {
        (dual_lp(m, u, slopes, kinks)?, vec![T::zero(); m.states()])
    } else {
        dual_barrier(m, u, lower, opts)?
    };
    // beyond U'(lower) the conjugate is affine with the same marginal cost as nu; keep Y minimal
    if let Some(l) = lower {
        let cap = u.du(l);
        if u.u(l).is_finite() && cap.is_finite() {
            for i in 0..y.len() {
                if y[i] > cap {
                    nu[i] = nu[i] + (y[i] - cap);
                    y[i] = cap;
                }
            }
        }
    }
    Ok(assemble(m, u, y, nu, opts))
}

pub(crate) fn assemble<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    y: Vec<T>,
    nu: Vec<T>,
    opts: SolveOptions<T>,
) -> DualSolution<T> {
    let y: Vec<T> = y.into_iter().map(|v| v.max(T::zero())).collect();
    let iv = m.expect(&y.iter().map(|&v| u.v(v)).collect::<Vec<_>>());
    let support_term = support_function(m, u.lower_bound(), &y);
    let by: T = (0..m.states())
        .map(|i| m.probs[i] * m.endowment[i] * y[i])
        .sum();
    let excess = support_term - by;
    let completion = if excess <= opts.corner_tol {
        Completion::Full
    } else {
        Completion::Effective
    };
    let mass = m.expect(&y);
    let q_hat = y.iter().map(|&v| v / mass).collect();
    DualSolution {
        value: iv + support_term,
        y_hat: y,
        support_term,
        excess,
        completion,
        q_hat,
        nu,
    }
}

fn separation_rows<T: Scalar>(
    m: &FiniteMarket<T>,
    with_nu: bool,
) -> (Vec<(Vec<T>, T)>, Vec<(Vec<T>, T)>) {
    let n = m.states();
    let dim = if with_nu { 2 * n } else { n };
    let (mut eq, mut le) = (Vec::new(), Vec::new());
    for g in &m.generators {
        let mut row = vec![T::zero(); dim];
        for i in 0..n {
            row[i] = m.probs[i] * g.payoff[i];
            if with_nu {
                row[n + i] = row[i];
            }
        }
        match g.sided {
            Sided::Two => eq.push((row, T::zero())),
            Sided::One => le.push((row, T::zero())),
        }
    }
    (eq, le)
}

fn dual_barrier<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    lower: Option<T>,
    opts: SolveOptions<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let n = m.states();
    let with_nu = lower.is_some();
    let dim = if with_nu { 2 * n } else { n };
    let (mut equalities, sep_le) = separation_rows(m, with_nu);
    let mut ineq: Vec<(Vec<T>, T)> = Vec::new();
    for i in 0..dim {
        let mut a = vec![T::zero(); dim];
        a[i] = -T::one();
        ineq.push((a, T::zero()));
    }
    ineq.extend(sep_le);
    let (start, implicit) = strictly_feasible_point(dim, &equalities, &ineq)?;
    if implicit.iter().any(|&i| i < n) && !u.v(T::zero()).is_finite() {
        return Err(Error::DualDiverges);
    }
    equalities.extend(implicit.iter().map(|&i| ineq[i].clone()));
    let inequalities: Vec<Constraint<T>> = ineq
        .iter()
        .enumerate()
        .filter(|(i, _)| !implicit.contains(i))
        .map(|(_, (a, b))| Constraint::Affine {
            a: a.clone(),
            b: *b,
        })
        .collect();
    let probs = m.probs.clone();
    let endowment = m.endowment.clone();
    let l = lower.unwrap_or(T::zero());
    let objective = move |w: &[T]| -> Option<SmoothEval<T>> {
        let mut value = T::zero();
        let mut grad = vec![T::zero(); dim];
        let mut hess = Mat::zeros(dim, dim);
        for i in 0..n {
            let yi = w[i];
            let vi = u.v(yi);
            if !vi.is_finite() || yi < T::zero() {
                return None;
            }
            value = value + probs[i] * (vi + endowment[i] * yi);
            grad[i] = probs[i] * (u.dv(yi) + endowment[i]);
            hess[(i, i)] = probs[i] * u.d2v(yi);
            if with_nu {
                let c = probs[i] * (endowment[i] - l);
                value = value + c * w[n + i];
                grad[n + i] = c;
            }
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return None;
        }
        Some(SmoothEval { value, grad, hess })
    };
    let problem = BarrierProblem {
        dim,
        objective: Box::new(objective),
        equalities,
        inequalities,
    };
    let bopts = BarrierOptions {
        gap_tol: (opts.tol * lit(1e-6)).min(lit(1e-12)),
        ..BarrierOptions::default()
    };
    let res = minimize_barrier(&problem, start, bopts)?;
    let y = res.w[..n].to_vec();
    let nu = if with_nu {
        res.w[n..].to_vec()
    } else {
        vec![T::zero(); n]
    };
    Ok((y, nu))
}

fn dual_lp<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    slopes: &[T],
    kinks: &[T],
) -> Result<Vec<T>> {
    let n = m.states();
    // variables (Y, v); minimize E[v + B Y] with v >= U(c) - c Y, Y within the slope range
    let mut lp = LinearProgram::new(2 * n);
    let (lo, hi) = (*slopes.last().expect("nonempty"), slopes[0]);
    let mut points = vec![T::zero()];
    points.extend_from_slice(kinks);
    for i in 0..n {
        lp.objective[i] = -m.probs[i] * m.endowment[i];
        lp.objective[n + i] = -m.probs[i];
        lp.nonneg[n + i] = false;
        for &c in &points {
            let mut row = vec![T::zero(); 2 * n];
            row[i] = -c;
            row[n + i] = -T::one();
            lp.constrain(row, Relation::Le, -u.u(c));
        }
        let mut row = vec![T::zero(); 2 * n];
        row[i] = T::one();
        lp.constrain(row.clone(), Relation::Le, hi);
        lp.constrain(row, Relation::Ge, lo);
    }
    let (eq, le) = separation_rows(m, false);
    for (mut row, b) in eq {
        row.resize(2 * n, T::zero());
        lp.constrain(row, Relation::Eq, b);
    }
    for (mut row, b) in le {
        row.resize(2 * n, T::zero());
        lp.constrain(row, Relation::Le, b);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Ok(x[..n].to_vec()),
        LpOutcome::Infeasible => Err(Error::UnboundedUtility {
            value: f64::INFINITY,
        }),
        LpOutcome::Unbounded => Err(Error::NoConvergence(
            "piecewise-linear dual is unbounded".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{solve_primal, Generator};

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
    fn symmetric_exponential_dual() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        let d = solve_dual(&binomial(0.5), &u, SolveOptions::default()).unwrap();
        assert!(
            (d.y_hat[0] - 1.0).abs() < 1e-7 && (d.y_hat[1] - 1.0).abs() < 1e-7,
            "{d:?}"
        );
        assert!((d.value + 1.0).abs() < 1e-9);
        assert_eq!(d.completion, Completion::Full);
    }

    #[test]
    fn skewed_exponential_dual() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        let d = solve_dual(&binomial(2.0 / 3.0), &u, SolveOptions::default()).unwrap();
        assert!(
            (d.q_hat[0] - 0.75).abs() < 1e-7 && (d.q_hat[1] - 1.5).abs() < 1e-7,
            "{d:?}"
        );
        assert!((d.value + 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-9);
        assert!(d.support_term.abs() < 1e-9);
    }

    #[test]
    fn complete_market_has_zero_support() {
        let m = FiniteMarket::new(
            vec![0.2, 0.3, 0.5],
            vec![
                Generator {
                    payoff: vec![1.0, -1.0, 0.2],
                    sided: Sided::Two,
                },
                Generator {
                    payoff: vec![0.5, 1.0, -1.0],
                    sided: Sided::Two,
                },
            ],
            None,
        )
        .unwrap();
        for u in [
            UtilitySpec::<f64>::exponential(1.0).unwrap(),
            UtilitySpec::<f64>::log(1.0).unwrap(),
        ] {
            let d = solve_dual(&m, &u, SolveOptions::default()).unwrap();
            let p = solve_primal(&m, &u, SolveOptions::default()).unwrap();
            assert!(d.support_term.abs() < 1e-8);
            assert!(
                (d.value - p.value).abs() < 1e-7,
                "{} vs {}",
                d.value,
                p.value
            );
        }
    }

    #[test]
    fn corner_market_effective_completion() {
        use crate::extended::ExtReal;
        use std::sync::Arc;
        let u = UtilitySpec::<f64>::custom(
            Arc::new(|x: f64| 1.0 - (-x).exp()),
            Arc::new(|x: f64| (-x).exp()),
            ExtReal::Finite(-1.0),
        )
        .unwrap();
        let m = binomial(0.9);
        let d = solve_dual(&m, &u, SolveOptions::default()).unwrap();
        let p = solve_primal(&m, &u, SolveOptions::default()).unwrap();
        assert_eq!(d.completion, Completion::Effective);
        let e = 1f64.exp();
        // Y_hat = U'(X_hat) with X_hat = (1, -1)
        assert!(
            (d.y_hat[0] - 1.0 / e).abs() < 1e-6 && (d.y_hat[1] - e).abs() < 1e-6,
            "{:?}",
            d.y_hat
        );
        assert!((d.support_term - (0.9 / e - 0.1 * e)).abs() < 1e-6);
        assert!((d.value - p.value).abs() < 1e-7);
    }

    #[test]
    fn piecewise_linear_dual_matches_primal() {
        let u = UtilitySpec::<f64>::piecewise_linear(vec![3.0, 1.0, 0.5], vec![-1.0, 1.0]).unwrap();
        let m = binomial(0.6);
        let d = solve_dual(&m, &u, SolveOptions::default()).unwrap();
        let p = solve_primal(&m, &u, SolveOptions::default()).unwrap();
        assert!(
            (d.value - p.value).abs() < 1e-9,
            "{} vs {}",
            d.value,
            p.value
        );
        // theta = 1 sits on both kinks
        assert!((p.theta[0] - 1.0).abs() < 1e-9 && (p.value - 0.2).abs() < 1e-12);
    }
}
