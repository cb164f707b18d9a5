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

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimalSolution<T> {
    pub x_hat: Vec<T>,
    pub theta: Vec<T>,
    pub value: T,
    /// `B + lambda X_hat` leaves the utility domain for every `lambda > 1`.
    pub boundary_flag: bool,
    /// Disposed wealth `G theta - X_hat`; identically zero at the optimum for monotone utilities.
    pub slack: Vec<T>,
}

/// `sup_theta E[U(B + G theta)]` over admissible `theta`.
pub fn solve_primal<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    opts: SolveOptions<T>,
) -> Result<PrimalSolution<T>> {
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
    let theta = if m.dim() == 0 {
        Vec::new()
    } else if let Family::PiecewiseLinear { slopes, kinks } = &u.family {
        primal_lp(m, u, slopes, kinks)?
    } else {
        primal_barrier(m, u, lower, opts)?
    };
    Ok(finish(m, u, theta))
}

pub(crate) fn finish<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    theta: Vec<T>,
) -> PrimalSolution<T> {
    let x_hat = m.claim(&theta);
    let wealth: Vec<T> = m
        .endowment
        .iter()
        .zip(&x_hat)
        .map(|(&b, &x)| b + x)
        .collect();
    let value = m.expect(&wealth.iter().map(|&z| u.u(z)).collect::<Vec<_>>());
    let boundary_flag = match u.lower_bound() {
        Some(l) => wealth
            .iter()
            .zip(&x_hat)
            .any(|(&z, &x)| x < T::zero() && z - l <= lit::<T>(1e-6) * l.abs().max(T::one())),
        None => false,
    };
    let slack = vec![T::zero(); m.states()];
    PrimalSolution {
        x_hat,
        theta,
        value,
        boundary_flag,
        slack,
    }
}

fn primal_barrier<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    lower: Option<T>,
    opts: SolveOptions<T>,
) -> Result<Vec<T>> {
    let (n, k) = (m.states(), m.dim());
    let rows: Vec<Vec<T>> = (0..n)
        .map(|i| m.generators.iter().map(|g| g.payoff[i]).collect())
        .collect();
    let mut ineq: Vec<(Vec<T>, T)> = Vec::new();
    for (j, g) in m.generators.iter().enumerate() {
        if g.sided == Sided::One {
            let mut a = vec![T::zero(); k];
            a[j] = -T::one();
            ineq.push((a, T::zero()));
        }
    }
    if let Some(l) = lower {
        for i in 0..n {
            ineq.push((rows[i].iter().map(|&x| -x).collect(), m.endowment[i] - l));
        }
    }
    let (start, implicit) = strictly_feasible_point(k, &[], &ineq)?;
    let equalities: Vec<(Vec<T>, T)> = implicit.iter().map(|&i| ineq[i].clone()).collect();
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
    let objective = move |theta: &[T]| -> Option<SmoothEval<T>> {
        let mut value = T::zero();
        let mut grad = vec![T::zero(); k];
        let mut hess = Mat::zeros(k, k);
        for i in 0..n {
            let z = endowment[i] + rows[i].iter().zip(theta).map(|(&a, &t)| a * t).sum::<T>();
            let uz = u.u(z);
            if !uz.is_finite() {
                return None;
            }
            let (d1, d2) = (u.du(z), u.d2u(z));
            value = value - probs[i] * uz;
            for a in 0..k {
                grad[a] = grad[a] - probs[i] * d1 * rows[i][a];
                for b in 0..k {
                    hess[(a, b)] = hess[(a, b)] - probs[i] * d2 * rows[i][a] * rows[i][b];
                }
            }
        }
        Some(SmoothEval { value, grad, hess })
    };
    let problem = BarrierProblem {
        dim: k,
        objective: Box::new(objective),
        equalities,
        inequalities,
    };
    let bopts = BarrierOptions {
        gap_tol: (opts.tol * lit(1e-6)).min(lit(1e-12)),
        ..BarrierOptions::default()
    };
    let res = minimize_barrier(&problem, start, bopts)?;
    Ok(res.w)
}

/// Concave piecewise-linear utility as the minimum of its affine pieces.
pub(crate) fn affine_pieces<T: Scalar>(
    u: &UtilitySpec<T>,
    slopes: &[T],
    kinks: &[T],
) -> Vec<(T, T)> {
    slopes
        .iter()
        .enumerate()
        .map(|(r, &s)| {
            let c = if kinks.is_empty() {
                T::zero()
            } else {
                kinks[r.saturating_sub(1).min(kinks.len() - 1)]
            };
            (u.u(c) - s * c, s)
        })
        .collect()
}

fn primal_lp<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    slopes: &[T],
    kinks: &[T],
) -> Result<Vec<T>> {
    let (n, k) = (m.states(), m.dim());
    let pieces = affine_pieces(u, slopes, kinks);
    // variables (theta, w); maximize E[w] with w_i <= alpha + s (B_i + G_i theta)
    let mut lp = LinearProgram::new(k + n);
    for (j, g) in m.generators.iter().enumerate() {
        lp.nonneg[j] = g.sided == Sided::One;
    }
    for i in 0..n {
        lp.objective[k + i] = m.probs[i];
        lp.nonneg[k + i] = false;
        for &(alpha, s) in &pieces {
            let mut row = vec![T::zero(); k + n];
            for (j, g) in m.generators.iter().enumerate() {
                row[j] = -s * g.payoff[i];
            }
            row[k + i] = T::one();
            lp.constrain(row, Relation::Le, alpha + s * m.endowment[i]);
        }
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Ok(x[..k].to_vec()),
        LpOutcome::Unbounded => Err(Error::UnboundedUtility {
            value: f64::INFINITY,
        }),
        LpOutcome::Infeasible => Err(Error::InvalidInput(
            "piecewise-linear primal is infeasible".into(),
        )),
    }
}
