//! Log-barrier Newton method for small smooth convex programs
//!
//! ```text
//! minimize f(w)  subject to  E w = e,  h_i(w) <= 0
//! ```
//!
//! Equalities are eliminated through an orthonormal null-space basis; each centering step is a
//! damped Newton iteration with backtracking that never leaves the open feasible set.

use super::lp::{LinearProgram, LpOutcome, Relation};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, null_space, regularized_spd_solve, Mat};
use crate::scalar::{lit, Scalar};

/// Value, gradient and Hessian of a twice differentiable function.
#[derive(Debug, Clone)]
pub struct SmoothEval<T> {
    pub value: T,
    pub grad: Vec<T>,
    pub hess: Mat<T>,
}

/// Objective callback: `None` signals a point outside the function's domain.
pub type Objective<'a, T> = dyn Fn(&[T]) -> Option<SmoothEval<T>> + 'a;

pub enum Constraint<'a, T> {
    /// `a . w <= b`
    Affine { a: Vec<T>, b: T },
    /// `h(w) <= 0` for a convex `h`.
    Smooth(Box<Objective<'a, T>>),
}

pub struct BarrierProblem<'a, T> {
    pub dim: usize,
    pub objective: Box<Objective<'a, T>>,
    pub equalities: Vec<(Vec<T>, T)>,
    pub inequalities: Vec<Constraint<'a, T>>,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions<T> {
    /// Target bound on `(#inequalities) / t`, relative to `max(1, |f|)`.
    pub gap_tol: T,
    pub newton_tol: T,
    pub t0: T,
    pub mu: T,
    pub max_newton: usize,
    /// Iterates beyond this sup-norm are treated as escaping to infinity.
    pub max_norm: T,
}

impl<T: Scalar> Default for BarrierOptions<T> {
    fn default() -> Self {
        Self {
            gap_tol: lit(1e-12),
            newton_tol: lit(1e-13),
            t0: T::one(),
            mu: lit(8.0),
            max_newton: 400,
            max_norm: lit(1e9),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierResult<T> {
    pub w: Vec<T>,
    pub value: T,
    pub newton_steps: usize,
    /// Upper bound on `f(w) - min f` implied by the final barrier parameter.
    pub gap_bound: T,
}

impl<'a, T: Scalar> BarrierProblem<'a, T> {
    /// Barrier function `t f + sum -ln(slack)` with derivatives; `None` when infeasible.
    fn centered(&self, w: &[T], t: T, with_derivs: bool) -> Option<(T, Vec<T>, Mat<T>)> {
        let f = (self.objective)(w)?;
        if !f.value.is_finite() {
            return None;
        }
        let n = self.dim;
        let mut val = t * f.value;
        let (mut g, mut h) = if with_derivs {
            (f.grad.iter().map(|&x| t * x).collect::<Vec<_>>(), {
                let mut h = f.hess.clone();
                h.data.iter_mut().for_each(|x| *x = *x * t);
                h
            })
        } else {
            (Vec::new(), Mat::zeros(0, 0))
        };
        for c in &self.inequalities {
            match c {
                Constraint::Affine { a, b } => {
                    let s = *b - dot(a, w);
                    if !(s > T::zero()) {
                        return None;
                    }
                    val = val - s.ln();
                    if with_derivs {
                        let inv = T::one() / s;
                        for i in 0..n {
                            g[i] = g[i] + a[i] * inv;
                            for j in 0..n {
                                h[(i, j)] = h[(i, j)] + a[i] * a[j] * inv * inv;
                            }
                        }
                    }
                }
                Constraint::Smooth(hf) => {
                    let e = hf(w)?;
                    let s = -e.value;
                    if !(s > T::zero()) {
                        return None;
                    }
                    val = val - s.ln();
                    if with_derivs {
                        let inv = T::one() / s;
                        for i in 0..n {
                            g[i] = g[i] + e.grad[i] * inv;
                            for j in 0..n {
                                h[(i, j)] = h[(i, j)]
                                    + e.hess[(i, j)] * inv
                                    + e.grad[i] * e.grad[j] * inv * inv;
                            }
                        }
                    }
                }
            }
        }
        if !val.is_finite() {
            return None;
        }
        Some((val, g, h))
    }
}

/// Minimizes the barrier problem starting from a strictly feasible `start` that satisfies the
/// equality constraints.
pub fn minimize_barrier<T: Scalar>(
    problem: &BarrierProblem<'_, T>,
    start: Vec<T>,
    opts: BarrierOptions<T>,
) -> Result<BarrierResult<T>> {
    let n = problem.dim;
    let mut eq = Mat::zeros(problem.equalities.len(), n);
    for (i, (row, _)) in problem.equalities.iter().enumerate() {
        for j in 0..n {
            eq[(i, j)] = row[j];
        }
    }
    let basis = null_space(&eq, lit(1e-11));
    let k = basis.len();
    if problem.centered(&start, opts.t0, false).is_none() {
        return Err(Error::InvalidInput(
            "barrier start point is not strictly feasible".into(),
        ));
    }
    let m = problem.inequalities.len();
    let mut w = start;
    let mut t = opts.t0;
    let mut steps = 0;
    loop {
        // centering
        for _ in 0..opts.max_newton {
            if k == 0 {
                break;
            }
            let (val, g, h) = problem
                .centered(&w, t, true)
                .expect("iterate stays feasible");
            let gz: Vec<T> = basis.iter().map(|b| dot(b, &g)).collect();
            let mut hz = Mat::zeros(k, k);
            let hb: Vec<Vec<T>> = basis.iter().map(|b| h.mul_vec(b)).collect();
            for i in 0..k {
                for j in 0..k {
                    hz[(i, j)] = dot(&basis[i], &hb[j]);
                }
            }
            let neg: Vec<T> = gz.iter().map(|&x| -x).collect();
            let dz = regularized_spd_solve(&hz, &neg);
            let decrement = -dot(&gz, &dz);
            if decrement.is_nan() {
                return Err(Error::NoConvergence("NaN Newton decrement".into()));
            }
            let mut dw = vec![T::zero(); n];
            for (b, &c) in basis.iter().zip(&dz) {
                for (d, &bi) in dw.iter_mut().zip(b) {
                    *d = *d + c * bi;
                }
            }
            if decrement / lit(2.0) <= opts.newton_tol * (T::one() + val.abs()) {
                // one last full step: the decrement bounds the objective error, not the iterate error
                let trial: Vec<T> = w.iter().zip(&dw).map(|(&a, &d)| a + d).collect();
                if let Some((tv, _, _)) = problem.centered(&trial, t, false) {
                    if tv <= val + T::epsilon() * lit::<T>(16.0) * (T::one() + val.abs()) {
                        w = trial;
                    }
                }
                break;
            }
            let slope = dot(&g, &dw);
            let mut s = T::one();
            let mut accepted = false;
            for _ in 0..80 {
                let trial: Vec<T> = w.iter().zip(&dw).map(|(&a, &d)| a + s * d).collect();
                if let Some((tv, _, _)) = problem.centered(&trial, t, false) {
                    if tv <= val + lit::<T>(0.25) * s * slope {
                        w = trial;
                        accepted = true;
                        break;
                    }
                }
                s = s * lit(0.5);
            }
            steps += 1;
            if !accepted {
                break;
            }
            if norm_inf(&w) > opts.max_norm {
                let value = (problem.objective)(&w).map(|e| e.value).unwrap_or(T::nan());
                return Err(Error::UnboundedUtility {
                    value: value.as_f64(),
                });
            }
        }
        let value = (problem.objective)(&w).map(|e| e.value).unwrap_or(T::nan());
        let gap = T::count(m) / t;
        if m == 0 || gap <= opts.gap_tol * value.abs().max(T::one()) {
            return Ok(BarrierResult {
                w,
                value,
                newton_steps: steps,
                gap_bound: gap,
            });
        }
        t = t * opts.mu;
        if t > lit(1e30) {
            return Err(Error::NoConvergence("barrier parameter overflow".into()));
        }
    }
}

/// Finds a point satisfying the equalities with every affine inequality slack as large as
/// possible (capped at one). Affine inequalities that cannot be made strict are reported as
/// implicit equalities; their indices are returned alongside the point.
pub fn strictly_feasible_point<T: Scalar>(
    dim: usize,
    equalities: &[(Vec<T>, T)],
    inequalities: &[(Vec<T>, T)],
) -> Result<(Vec<T>, Vec<usize>)> {
    let tol: T = lit(1e-9);
    let mut implicit: Vec<usize> = Vec::new();
    loop {
        let mut lp = LinearProgram::new(dim + 1);
        lp.objective[dim] = T::one();
        for (row, rhs) in equalities {
            let mut r = row.clone();
            r.push(T::zero());
            lp.constrain(r, Relation::Eq, *rhs);
        }
        for (i, (row, rhs)) in inequalities.iter().enumerate() {
            let mut r = row.clone();
            if implicit.contains(&i) {
                r.push(T::zero());
                lp.constrain(r, Relation::Eq, *rhs);
            } else {
                r.push(T::one());
                lp.constrain(r, Relation::Le, *rhs);
            }
        }
        let mut cap = vec![T::zero(); dim + 1];
        cap[dim] = T::one();
        lp.constrain(cap, Relation::Le, T::one());
        let (x, s) = match lp.solve() {
            LpOutcome::Optimal { x, value } => (x, value),
            LpOutcome::Infeasible => {
                return Err(Error::InvalidInput(
                    "constraint system is infeasible".into(),
                ))
            }
            LpOutcome::Unbounded => unreachable!("slack is capped"),
        };
        if s > tol || implicit.len() == inequalities.len() {
            return Ok((x[..dim].to_vec(), implicit));
        }
        // locate the inequalities that are tight on the whole feasible set
        let mut found = false;
        for (i, (row, rhs)) in inequalities.iter().enumerate() {
            if implicit.contains(&i) {
                continue;
            }
            let mut lp = LinearProgram::new(dim);
            lp.objective = row.iter().map(|&a| -a).collect();
            for (r, b) in equalities {
                lp.constrain(r.clone(), Relation::Eq, *b);
            }
            for (j, (r, b)) in inequalities.iter().enumerate() {
                let rel = if implicit.contains(&j) {
                    Relation::Eq
                } else {
                    Relation::Le
                };
                lp.constrain(r.clone(), rel, *b);
            }
            lp.constrain(row.clone(), Relation::Ge, *rhs - T::one());
            let max_slack = match lp.solve() {
                LpOutcome::Optimal { value, .. } => value + *rhs,
                LpOutcome::Unbounded => T::one(),
                LpOutcome::Infeasible => T::zero(),
            };
            if max_slack <= tol {
                implicit.push(i);
                found = true;
            }
        }
        if !found {
            return Ok((x[..dim].to_vec(), implicit));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_objective(center: Vec<f64>) -> Box<Objective<'static, f64>> {
        Box::new(move |w: &[f64]| {
            let n = w.len();
            let value = w
                .iter()
                .zip(&center)
                .map(|(a, c)| (a - c).powi(2))
                .sum::<f64>()
                / 2.0;
            let grad = w.iter().zip(&center).map(|(a, c)| a - c).collect();
            Some(SmoothEval {
                value,
                grad,
                hess: Mat::identity(n),
            })
        })
    }

    #[test]
    fn projects_onto_halfspace_with_equality() {
        // min |w - (2, 2, 0)|^2 / 2  st  w0 + w1 + w2 = 1,  w0 <= 0.2
        let problem = BarrierProblem {
            dim: 3,
            objective: quad_objective(vec![2.0, 2.0, 0.0]),
            equalities: vec![(vec![1.0, 1.0, 1.0], 1.0)],
            inequalities: vec![Constraint::Affine {
                a: vec![1.0, 0.0, 0.0],
                b: 0.2,
            }],
        };
        let (start, implicit) =
            strictly_feasible_point(3, &problem.equalities, &[(vec![1.0, 0.0, 0.0], 0.2)]).unwrap();
        assert!(implicit.is_empty());
        let r = minimize_barrier(&problem, start, BarrierOptions::default()).unwrap();
        // w0 = 0.2 active, then w1 - 2 = w2 with w1 + w2 = 0.8
        assert!((r.w[0] - 0.2).abs() < 1e-9);
        assert!((r.w[1] - 1.4).abs() < 1e-9);
        assert!((r.w[2] + 0.6).abs() < 1e-9);
    }

    #[test]
    fn detects_implicit_equalities() {
        // w0 <= 0 and -w0 <= 0 force w0 = 0
        let ineq = vec![
            (vec![1.0, 0.0], 0.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, 1.0], 1.0),
        ];
        let (_, implicit) = strictly_feasible_point::<f64>(2, &[], &ineq).unwrap();
        assert_eq!(implicit, vec![0, 1]);
    }
}
