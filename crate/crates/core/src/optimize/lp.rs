//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Only meant for the handful-of-variables programs that appear in finite-market arbitrage
//! tests and support-function evaluation.

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// `maximize objective . x` subject to `row . x (rel) rhs`, with `x_j >= 0` where
/// `nonneg[j]` and `x_j` free otherwise.
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub rows: Vec<(Vec<T>, Relation, T)>,
    pub nonneg: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Unbounded,
    Infeasible,
}

impl<T: Scalar> LpOutcome<T> {
    pub fn optimal(&self) -> Option<(&[T], T)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![T::zero(); n],
            rows: Vec::new(),
            nonneg: vec![false; n],
        }
    }

    pub fn constrain(&mut self, row: Vec<T>, rel: Relation, rhs: T) -> &mut Self {
        assert_eq!(row.len(), self.objective.len());
        self.rows.push((row, rel, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome<T> {
        Tableau::build(self).run(self)
    }
}

struct Tableau<T> {
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
    n_struct: usize,
    n_art_start: usize,
    n_cols: usize,
    col_of: Vec<(usize, Option<usize>)>,
    eps: T,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.objective.len();
        let mut col_of = Vec::with_capacity(n);
        let mut n_struct = 0;
        for j in 0..n {
            if lp.nonneg[j] {
                col_of.push((n_struct, None));
                n_struct += 1;
            } else {
                col_of.push((n_struct, Some(n_struct + 1)));
                n_struct += 2;
            }
        }
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = lp
            .rows
            .iter()
            .filter(|r| r.1 != Relation::Le || r.2 < T::zero())
            .count();
        let n_art_start = n_struct + n_slack;
        let n_cols = n_art_start + n_art;
        let scale = lp
            .rows
            .iter()
            .flat_map(|r| r.0.iter().chain(std::iter::once(&r.2)))
            .fold(T::one(), |s, &x| s.max(x.abs()));
        let eps = T::epsilon() * lit(1e3) * scale;

        let mut t = vec![vec![T::zero(); n_cols + 1]; m];
        let mut basis = vec![0; m];
        let (mut slack, mut art) = (n_struct, n_art_start);
        for (i, (row, rel, rhs)) in lp.rows.iter().enumerate() {
            let flip = *rhs < T::zero();
            let sign = if flip { -T::one() } else { T::one() };
            for j in 0..n {
                let (p, q) = col_of[j];
                t[i][p] = sign * row[j];
                if let Some(q) = q {
                    t[i][q] = -sign * row[j];
                }
            }
            t[i][n_cols] = sign * *rhs;
            let rel = match (rel, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => *r,
            };
            match rel {
                Relation::Le => {
                    t[i][slack] = T::one();
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    t[i][slack] = -T::one();
                    slack += 1;
                    t[i][art] = T::one();
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    t[i][art] = T::one();
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Self {
            t,
            basis,
            n_struct,
            n_art_start,
            n_cols,
            col_of,
            eps,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v = *v / p;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != T::zero() {
                    for (v, &pv) in row.iter_mut().zip(&prow) {
                        *v = *v - f * pv;
                    }
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `cost . x` over the current tableau, with columns `>= limit` barred from
    /// entering. Returns `false` on unboundedness.
    fn optimize(&mut self, cost: &[T], limit: usize) -> bool {
        for _ in 0..50_000 {
            let m = self.t.len();
            let mut entering = None;
            for j in 0..limit {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j];
                for i in 0..m {
                    r = r - cost[self.basis[i]] * self.t[i][j];
                }
                if r > self.eps {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..m {
                let a = self.t[i][c];
                if a > self.eps {
                    let ratio = self.t[i][self.n_cols] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - self.eps
                                || (ratio <= lr + self.eps && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
        true
    }

    fn run(mut self, lp: &LinearProgram<T>) -> LpOutcome<T> {
        let n_cols = self.n_cols;
        if self.n_art_start < n_cols {
            let mut cost = vec![T::zero(); n_cols];
            for c in cost.iter_mut().skip(self.n_art_start) {
                *c = -T::one();
            }
            self.optimize(&cost, n_cols);
            let infeas: T = (0..self.t.len())
                .filter(|&i| self.basis[i] >= self.n_art_start)
                .map(|i| self.t[i][n_cols])
                .sum();
            if infeas > self.eps * lit(10.0) {
                return LpOutcome::Infeasible;
            }
            // drive zero-level artificials out of the basis, dropping redundant rows
            let mut i = 0;
            while i < self.t.len() {
                if self.basis[i] >= self.n_art_start {
                    let col = (0..self.n_art_start).find(|&j| self.t[i][j].abs() > self.eps);
                    match col {
                        Some(j) => {
                            self.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            self.t.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![T::zero(); n_cols];
        for (j, &(p, q)) in self.col_of.iter().enumerate() {
            cost[p] = lp.objective[j];
            if let Some(q) = q {
                cost[q] = -lp.objective[j];
            }
        }
        if !self.optimize(&cost, self.n_art_start) {
            return LpOutcome::Unbounded;
        }
        let mut xs = vec![T::zero(); self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                xs[b] = self.t[i][n_cols];
            }
        }
        let x: Vec<T> = self
            .col_of
            .iter()
            .map(|&(p, q)| xs[p] - q.map_or(T::zero(), |q| xs[q]))
            .collect();
        let value = x.iter().zip(&lp.objective).map(|(&a, &b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![3.0, 5.0];
        lp.nonneg = vec![true, true];
        lp.constrain(vec![1.0, 0.0], Relation::Le, 4.0)
            .constrain(vec![0.0, 2.0], Relation::Le, 12.0)
            .constrain(vec![3.0, 2.0], Relation::Le, 18.0);
        let (x, v) = lp.solve().optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((v - 36.0_f64).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn free_variables_equalities_and_negative_rhs() {
        // max -x - y st x + y = -2 (free vars), x >= -5
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, -1.0_f64];
        lp.constrain(vec![1.0, 1.0], Relation::Eq, -2.0).constrain(
            vec![1.0, 0.0],
            Relation::Ge,
            -5.0,
        );
        let (_, v) = lp.solve().optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn detects_unbounded_and_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0_f64];
        lp.constrain(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0_f64];
        lp.constrain(vec![1.0], Relation::Ge, 2.0)
            .constrain(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 0.0_f64];
        lp.nonneg = vec![true, true];
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 1.0).constrain(
            vec![2.0, 2.0],
            Relation::Eq,
            2.0,
        );
        let (x, v) = lp.solve().optimal().map(|(x, v)| (x.to_vec(), v)).unwrap();
        assert!((v - 1.0).abs() < 1e-12 && x[1].abs() < 1e-12);
    }
}
