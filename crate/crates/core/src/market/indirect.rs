use serde::Serialize;

use super::primal::affine_pieces;
use super::{FiniteMarket, Sided, SolveOptions};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::optimize::{
    minimize_barrier, strictly_feasible_point, BarrierOptions, BarrierProblem, Constraint,
    LinearProgram, LpOutcome, Relation, SmoothEval,
};
use crate::scalar::{lit, Scalar};
use crate::utility::{Family, UtilitySpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndirectRow<T> {
    pub x: T,
    /// `sup E[U(B + X)]` over `X` in the cone and `B >= 0` with `E[U_hat(B / x)] <= 1`.
    pub value: T,
    pub ratio: T,
    pub endowment: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndirectProfile<T> {
    pub rows: Vec<IndirectRow<T>>,
    /// Ratios `value / x` are finite, nonincreasing, and the last is at most a tenth of the first.
    pub sublinear: bool,
}

/// Indirect utility of nonnegative endowments with Orlicz norm (built from `U_hat`) at most `x`.
/// The utility is normalized to `U(0) = 0` first.
pub fn indirect_utility_profile<T: Scalar>(
    m: &FiniteMarket<T>,
    u: &UtilitySpec<T>,
    xs: &[T],
    opts: SolveOptions<T>,
) -> Result<IndirectProfile<T>> {
    if xs.is_empty() || xs.iter().any(|&x| !(x > T::zero() && x.is_finite())) {
        return Err(Error::InvalidInput(
            "x grid must be positive and finite".into(),
        ));
    }
    let un = if u.normalized {
        u.clone()
    } else {
        u.normalize()?
    };
    let mut rows = Vec::with_capacity(xs.len());
    for &x in xs {
        let (value, endowment) = match &un.family {
            Family::PiecewiseLinear { slopes, kinks } => indirect_lp(m, &un, slopes, kinks, x)?,
            _ => indirect_barrier(m, &un, x, opts)?,
        };
        rows.push(IndirectRow {
            x,
            value,
            ratio: value / x,
            endowment,
        });
    }
    let ratios: Vec<T> = rows.iter().map(|r| r.ratio).collect();
    let sublinear = ratios.iter().all(|r| r.is_finite())
        && ratios
            .windows(2)
            .all(|w| w[1] <= w[0] + lit::<T>(1e-9) * w[0].abs().max(T::one()))
        && ratios[ratios.len() - 1] <= lit::<T>(0.1) * ratios[0];
    Ok(IndirectProfile { rows, sublinear })
}

fn indirect_barrier<T: Scalar>(
    m: &FiniteMarket<T>,
    un: &UtilitySpec<T>,
    x: T,
    opts: SolveOptions<T>,
) -> Result<(T, Vec<T>)> {
    let (n, k) = (m.states(), m.dim());
    let dim = n + k;
    let u_hat = |b: T| -un.u(-b);
    // B_i = c x with U_hat(c) = 1/2 keeps the norm constraint strictly slack
    let half: T = lit(0.5);
    let cap = un.lower_bound().map(|l| -l * lit::<T>(1.0 - 1e-9));
    let c = match cap {
        Some(cap) if !(u_hat(cap) > half) => cap * half,
        _ => {
            let mut hi = cap.unwrap_or(T::one());
            while !(u_hat(hi) >= half) && hi < lit(1e12) {
                hi = hi * lit(2.0);
            }
            let mut lo = T::zero();
            for _ in 0..200 {
                let mid = (lo + hi) * half;
                if u_hat(mid) < half {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    let cb = c * x;
    let mut ineq: Vec<(Vec<T>, T)> = Vec::new();
    for i in 0..n {
        let mut a = vec![T::zero(); dim];
        a[i] = -T::one();
        ineq.push((a, T::zero()));
    }
    for (j, g) in m.generators.iter().enumerate() {
        if g.sided == Sided::One {
            let mut a = vec![T::zero(); dim];
            a[n + j] = -T::one();
            ineq.push((a, T::zero()));
        }
    }
    if let Some(l) = un.lower_bound() {
        for i in 0..n {
            let mut a = vec![T::zero(); dim];
            a[i] = -T::one();
            for (j, g) in m.generators.iter().enumerate() {
                a[n + j] = -g.payoff[i];
            }
            ineq.push((a, -l));
        }
    }
    let real = ineq.len();
    let mut phase1 = ineq.clone();
    for i in 0..n {
        let mut a = vec![T::zero(); dim];
        a[i] = T::one();
        phase1.push((a, cb));
    }
    let (start, implicit) = strictly_feasible_point(dim, &[], &phase1)?;
    let implicit: Vec<usize> = implicit.into_iter().filter(|&i| i < real).collect();
    let equalities: Vec<(Vec<T>, T)> = implicit.iter().map(|&i| ineq[i].clone()).collect();
    let mut inequalities: Vec<Constraint<T>> = ineq
        .iter()
        .enumerate()
        .filter(|(i, _)| !implicit.contains(i))
        .map(|(_, (a, b))| Constraint::Affine {
            a: a.clone(),
            b: *b,
        })
        .collect();
    let probs = m.probs.clone();
    let norm = move |w: &[T]| -> Option<SmoothEval<T>> {
        let mut value = -T::one();
        let mut grad = vec![T::zero(); dim];
        let mut hess = Mat::zeros(dim, dim);
        for i in 0..n {
            let b = w[i] / x;
            let v = un.u(-b);
            if !v.is_finite() {
                return None;
            }
            value = value - probs[i] * v;
            grad[i] = probs[i] * un.du(-b) / x;
            hess[(i, i)] = -probs[i] * un.d2u(-b) / (x * x);
        }
        Some(SmoothEval { value, grad, hess })
    };
    inequalities.push(Constraint::Smooth(Box::new(norm)));
    let rows: Vec<Vec<T>> = (0..n)
        .map(|i| m.generators.iter().map(|g| g.payoff[i]).collect())
        .collect();
    let probs = m.probs.clone();
    let objective = move |w: &[T]| -> Option<SmoothEval<T>> {
        let mut value = T::zero();
        let mut grad = vec![T::zero(); dim];
        let mut hess = Mat::zeros(dim, dim);
        for i in 0..n {
            let mut row = vec![T::zero(); dim];
            row[i] = T::one();
            row[n..].copy_from_slice(&rows[i]);
            let z: T = row.iter().zip(w).map(|(&a, &b)| a * b).sum();
            let uz = un.u(z);
            if !uz.is_finite() {
                return None;
            }
            let (d1, d2) = (un.du(z), un.d2u(z));
            value = value - probs[i] * uz;
            for a in 0..dim {
                grad[a] = grad[a] - probs[i] * d1 * row[a];
                for b in 0..dim {
                    hess[(a, b)] = hess[(a, b)] - probs[i] * d2 * row[a] * row[b];
                }
            }
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
    Ok((-res.value, res.w[..n].to_vec()))
}

fn indirect_lp<T: Scalar>(
    m: &FiniteMarket<T>,
    un: &UtilitySpec<T>,
    slopes: &[T],
    kinks: &[T],
    x: T,
) -> Result<(T, Vec<T>)> {
    let (n, k) = (m.states(), m.dim());
    let pieces = affine_pieces(un, slopes, kinks);
    // variables (B, theta, w, t): maximize E[w], w_i <= U(B_i + G_i theta), t_i >= U_hat(B_i / x)
    let (ob, ot, ow, oq) = (0, n, n + k, 2 * n + k);
    let mut lp = LinearProgram::new(3 * n + k);
    for (j, g) in m.generators.iter().enumerate() {
        lp.nonneg[ot + j] = g.sided == Sided::One;
    }
    for i in 0..n {
        lp.objective[ow + i] = m.probs[i];
        lp.nonneg[ow + i] = false;
        lp.nonneg[oq + i] = false;
        for &(alpha, s) in &pieces {
            let mut row = vec![T::zero(); 3 * n + k];
            row[ob + i] = -s;
            for (j, g) in m.generators.iter().enumerate() {
                row[ot + j] = -s * g.payoff[i];
            }
            row[ow + i] = T::one();
            lp.constrain(row, Relation::Le, alpha);
            let mut row = vec![T::zero(); 3 * n + k];
            row[ob + i] = s / x;
            row[oq + i] = -T::one();
            lp.constrain(row, Relation::Le, alpha);
        }
    }
    let mut row = vec![T::zero(); 3 * n + k];
    row[oq..oq + n].copy_from_slice(&m.probs[..n]);
    lp.constrain(row, Relation::Le, T::one());
    match lp.solve() {
        LpOutcome::Optimal { x: sol, value } => Ok((value, sol[..n].to_vec())),
        LpOutcome::Unbounded => Ok((T::infinity(), vec![T::infinity(); n])),
        LpOutcome::Infeasible => Err(Error::InvalidInput(
            "indirect utility program is infeasible".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::Generator;

    fn binomial() -> FiniteMarket<f64> {
        FiniteMarket::new(
            vec![0.5, 0.5],
            vec![Generator {
                payoff: vec![1.0, -1.0],
                sided: Sided::Two,
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn exponential_is_sublinear() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        let p = indirect_utility_profile(
            &binomial(),
            &u,
            &[1.0, 10.0, 100.0, 1000.0],
            SolveOptions::default(),
        )
        .unwrap();
        assert!(
            p.sublinear,
            "{:?}",
            p.rows.iter().map(|r| r.ratio).collect::<Vec<_>>()
        );
        // normalized exponential utility is bounded by one
        assert!(
            p.rows.iter().all(|r| r.value <= 1.0 && r.value > 0.0),
            "{p:?}"
        );
        // at x = 1 the best endowment is the constant ln 2, leaving 1 - 1/2
        assert!((p.rows[0].value - 0.5).abs() < 1e-9);
        assert!((p.rows[0].endowment[0] - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn linear_is_not_sublinear() {
        let u = UtilitySpec::<f64>::linear();
        let p = indirect_utility_profile(
            &binomial(),
            &u,
            &[1.0, 10.0, 100.0],
            SolveOptions::default(),
        )
        .unwrap();
        assert!(!p.sublinear);
        for r in &p.rows {
            assert!((r.ratio - 1.0).abs() < 1e-9, "{r:?}");
        }
    }

    #[test]
    fn truncated_quadratic_bounded_by_bliss_level() {
        let u = UtilitySpec::<f64>::truncated_quadratic(1.0).unwrap();
        let p = indirect_utility_profile(
            &binomial(),
            &u,
            &[1.0, 10.0, 100.0],
            SolveOptions::default(),
        )
        .unwrap();
        assert!(p.sublinear);
        assert!(p.rows.iter().all(|r| r.value <= 0.5 + 1e-9));
    }

    #[test]
    fn rejects_bad_grid() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        assert!(
            indirect_utility_profile(&binomial(), &u, &[0.0], SolveOptions::default()).is_err()
        );
    }
}
