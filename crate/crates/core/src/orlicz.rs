//! Young functions, modulars and gauge norms on finite and countable probability spaces.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::optimize::brent_root;
use crate::scalar::{lit, Scalar};
use crate::utility::UtilitySpec;

#[derive(Clone)]
pub enum Young<T: Scalar> {
    /// `e^{|x|} - 1`
    Exponential,
    /// `scale |x|^p`, `p > 1`
    Power {
        p: T,
        scale: T,
    },
    /// `x^2 ln(e + |x|)`
    PowerLog,
    /// `y ln y - y + 1` for `|y| >= 1`, zero below; conjugate of `Exponential`.
    ExpConjugate,
    /// `U_hat` of a utility.
    FromUtility(UtilitySpec<T>),
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Scalar> fmt::Debug for Young<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Young::Exponential => write!(f, "exp"),
            Young::Power { p, scale } => write!(f, "{scale}|x|^{p}"),
            Young::PowerLog => write!(f, "x^2 ln(e+|x|)"),
            Young::ExpConjugate => write!(f, "exp*"),
            Young::FromUtility(u) => write!(f, "U_hat[{:?}]", u.family),
            Young::Custom(_) => write!(f, "custom"),
        }
    }
}

impl<T: Scalar> Young<T> {
    pub fn power(p: T) -> Self {
        Young::Power { p, scale: T::one() }
    }

    /// `exp`, `power:p`, `powerlog` or `expconj`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Young::Exponential),
            "powerlog" => Ok(Young::PowerLog),
            "expconj" => Ok(Young::ExpConjugate),
            _ => {
                let p = s
                    .strip_prefix("power:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("unknown Young function `{s}`")))?;
                if !(p >= 1.0) {
                    return Err(Error::InvalidInput(
                        "power Young function needs p >= 1".into(),
                    ));
                }
                Ok(Young::power(lit(p)))
            }
        }
    }

    pub fn eval(&self, x: T) -> T {
        let a = x.abs();
        match self {
            Young::Exponential => a.exp_m1(),
            Young::Power { p, scale } => *scale * a.powf(*p),
            Young::PowerLog => a * a * (T::E() + a).ln(),
            Young::ExpConjugate => {
                if a <= T::one() {
                    T::zero()
                } else {
                    a * a.ln() - a + T::one()
                }
            }
            Young::FromUtility(u) => u.u_hat(a),
            Young::Custom(f) => f(a),
        }
    }

    /// `p * Phi(x)` with the weight folded into the exponent where that avoids overflow.
    pub fn eval_weighted(&self, x: T, p: T) -> T {
        if p == T::zero() {
            return T::zero();
        }
        match self {
            Young::Exponential => (p.ln() + x.abs()).exp() - p,
            _ => p * self.eval(x),
        }
    }

    /// Conjugate Young function, where it has a closed form.
    pub fn conjugate(&self) -> Option<Self> {
        match self {
            Young::Exponential => Some(Young::ExpConjugate),
            Young::Power { p, scale } if *p > T::one() => {
                let q = *p / (*p - T::one());
                let s =
                    (T::one() - T::one() / *p) * (*scale * *p).powf(-T::one() / (*p - T::one()));
                Some(Young::Power { p: q, scale: s })
            }
            _ => None,
        }
    }
}

/// Random variable on a finite probability space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRandomVariable<T> {
    pub outcomes: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Scalar> FiniteRandomVariable<T> {
    pub fn new(outcomes: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if outcomes.len() != probs.len() || outcomes.is_empty() {
            return Err(Error::InvalidInput(
                "outcomes and probs must have the same nonzero length".into(),
            ));
        }
        if probs.iter().any(|p| !(*p >= T::zero())) || outcomes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "probs must be nonnegative and outcomes finite".into(),
            ));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > lit::<T>(1e-12).max(T::epsilon() * lit(8.0)) {
            return Err(Error::InvalidInput(format!("probs sum to {total}, not 1")));
        }
        Ok(Self { outcomes, probs })
    }

    pub fn constant(c: T) -> Self {
        Self {
            outcomes: vec![c],
            probs: vec![T::one()],
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            outcomes: self.outcomes.iter().map(|&x| c * x).collect(),
            probs: self.probs.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.outcomes
            .iter()
            .zip(&self.probs)
            .all(|(x, p)| *x == T::zero() || *p == T::zero())
    }
}

/// Bound on the Young mass beyond a truncation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailBound<T> {
    Bound(T),
    /// The remaining mass is infinite.
    Divergent,
    Unavailable,
}

type TermFn<T> = Arc<dyn Fn(usize) -> (T, T) + Send + Sync>;
type TailFn<T> = Arc<dyn Fn(&Young<T>, usize, T) -> TailBound<T> + Send + Sync>;

/// Random variable with countably many atoms. `term(i)` is the `i`-th atom
/// `(outcome, probability)`; `tail(phi, m, s)` bounds `sum_{i >= m} p_i Phi(s x_i)`.
#[derive(Clone)]
pub struct SeriesRandomVariable<T: Scalar> {
    pub term: TermFn<T>,
    pub tail: TailFn<T>,
    /// Set when every outcome is zero.
    pub zero: bool,
}

impl<T: Scalar> SeriesRandomVariable<T> {
    pub fn new(term: TermFn<T>, tail: TailFn<T>) -> Self {
        Self {
            term,
            tail,
            zero: false,
        }
    }

    pub fn zero() -> Self {
        Self {
            term: Arc::new(|_| (T::zero(), T::zero())),
            tail: Arc::new(|_, _, _| TailBound::Bound(T::zero())),
            zero: true,
        }
    }
}

/// A modular or norm value with its numerical error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: ExtReal<T>,
    pub error_bound: T,
}

/// Either kind of random variable.
#[derive(Clone, Copy)]
pub enum Variable<'a, T: Scalar> {
    Finite(&'a FiniteRandomVariable<T>),
    Series(&'a SeriesRandomVariable<T>),
}

const MAX_TERMS: usize = 10_000_000;

/// `rho(s X) = E[Phi(s X)]`.
pub fn modular_scaled<T: Scalar>(phi: &Young<T>, x: Variable<'_, T>, s: T) -> Result<Estimate<T>> {
    let overflow: T = lit(1e300);
    match x {
        Variable::Finite(v) => {
            let mut total = T::zero();
            for (&o, &p) in v.outcomes.iter().zip(&v.probs) {
                total = total + phi.eval_weighted(s * o, p);
                if !(total < overflow) {
                    return Ok(Estimate {
                        value: ExtReal::PosInf,
                        error_bound: T::zero(),
                    });
                }
            }
            Ok(Estimate {
                value: ExtReal::Finite(total),
                error_bound: T::zero(),
            })
        }
        Variable::Series(v) => {
            if v.zero || s == T::zero() {
                return Ok(Estimate {
                    value: ExtReal::Finite(T::zero()),
                    error_bound: T::zero(),
                });
            }
            let mut total = T::zero();
            for m in 0..MAX_TERMS {
                match (v.tail)(phi, m, s) {
                    TailBound::Divergent => {
                        return Ok(Estimate {
                            value: ExtReal::PosInf,
                            error_bound: T::zero(),
                        })
                    }
                    TailBound::Unavailable => {
                        return Err(Error::TailBoundUnavailable { scale: s.as_f64() })
                    }
                    TailBound::Bound(b) => {
                        if b <= lit::<T>(1e-12) * total.max(lit(0.1)) {
                            return Ok(Estimate {
                                value: ExtReal::Finite(total),
                                error_bound: b,
                            });
                        }
                    }
                }
                let (o, p) = (v.term)(m);
                total = total + phi.eval_weighted(s * o, p);
                if !(total < overflow) {
                    return Ok(Estimate {
                        value: ExtReal::PosInf,
                        error_bound: T::zero(),
                    });
                }
            }
            Err(Error::NoConvergence(
                "series modular did not reach its tail tolerance".into(),
            ))
        }
    }
}

pub fn modular<T: Scalar>(phi: &Young<T>, x: Variable<'_, T>) -> Result<Estimate<T>> {
    modular_scaled(phi, x, T::one())
}

/// Gauge norm with a certified bracket `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norm<T> {
    pub value: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Norm<T> {
    pub fn error_bound(&self) -> T {
        (self.upper - self.value).max(self.value - self.lower)
    }
}

/// Luxemburg norm `inf{lambda > 0 : E[Phi(X / lambda)] <= 1}`.
pub fn gauge_norm<T: Scalar>(phi: &Young<T>, x: Variable<'_, T>) -> Result<Norm<T>> {
    let zero = match x {
        Variable::Finite(v) => v.is_zero(),
        Variable::Series(v) => v.zero,
    };
    if zero {
        return Ok(Norm {
            value: T::zero(),
            lower: T::zero(),
            upper: T::zero(),
        });
    }
    // excess(lambda) = rho(X / lambda) - 1, decreasing in lambda
    let excess = |lam: T| -> Result<(T, T)> {
        let m = modular_scaled(phi, x, T::one() / lam)?;
        Ok((m.value.to_float() - T::one(), m.error_bound))
    };
    let mut lo: T = lit(1e-12);
    let mut hi: T = lit(1e12);
    // bracket expansion
    let mut tries = 0;
    while excess(hi)?.0 > T::zero() {
        hi = hi * lit(1e6);
        tries += 1;
        if tries > 10 || !hi.is_finite() {
            return Err(Error::NonFiniteNorm);
        }
    }
    tries = 0;
    while excess(lo)?.0 <= T::zero() {
        lo = lo * lit(1e-6);
        tries += 1;
        if tries > 10 || lo == T::zero() {
            return Ok(Norm {
                value: lo,
                lower: T::zero(),
                upper: lo,
            });
        }
    }
    // bisection in log scale, tracking certified sides
    let mut cert_lo = lo;
    let mut cert_hi = hi;
    for _ in 0..200 {
        if cert_hi / cert_lo - T::one() <= lit(1e-13) {
            break;
        }
        let mid = (cert_lo * cert_hi).sqrt();
        let (e, err) = excess(mid)?;
        if e - err > T::zero() {
            cert_lo = mid;
        } else if e + err <= T::zero() {
            cert_hi = mid;
        } else {
            // inside the numerical band of the root
            let value = mid;
            return Ok(Norm {
                value,
                lower: cert_lo,
                upper: cert_hi,
            });
        }
        if cert_hi / cert_lo - T::one() <= lit(1e-6) {
            break;
        }
    }
    // polish where the modular is finite on the whole bracket
    let (e_lo, _) = excess(cert_lo)?;
    if e_lo.is_finite() {
        let f = |lam: T| excess(lam).map(|e| e.0).unwrap_or(T::nan());
        if let Ok(root) = brent_root(f, cert_lo, cert_hi, cert_lo * lit(1e-15)) {
            return Ok(Norm {
                value: root,
                lower: cert_lo,
                upper: cert_hi,
            });
        }
    }
    let value = (cert_lo + cert_hi) / lit(2.0);
    Ok(Norm {
        value,
        lower: cert_lo,
        upper: cert_hi,
    })
}

/// Membership in the Orlicz space and its heart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub in_space: bool,
    pub in_heart: bool,
    pub note: String,
}

/// On finite spaces every variable lies in both; for series variables the answer is a
/// semi-decision over scalings `10^-6 .. 10^6`.
pub fn membership<T: Scalar>(phi: &Young<T>, x: Variable<'_, T>) -> Result<Membership> {
    match x {
        Variable::Finite(_) => Ok(Membership {
            in_space: true,
            in_heart: true,
            note: "finite probability space: every random variable lies in the Orlicz heart".into(),
        }),
        Variable::Series(_) => {
            let scales: Vec<T> = (-6..=6).map(|e| lit(10f64.powi(e))).collect();
            let finite: Vec<bool> = scales
                .iter()
                .map(|&s| modular_scaled(phi, x, s).map(|m| m.value.is_finite()))
                .collect::<Result<_>>()?;
            Ok(Membership {
                in_space: finite.iter().any(|&f| f),
                in_heart: finite.iter().all(|&f| f),
                note: "checked on scalings 1e-6..1e6".into(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta2Report<T> {
    pub satisfied: bool,
    /// Largest observed ratio `Phi(2x) / Phi(x)` when satisfied.
    pub k_bound: Option<T>,
    /// First grid point whose ratio crossed the threshold.
    pub witness: Option<T>,
    pub witness_ratio: Option<T>,
    pub ratios: Vec<(T, T)>,
}

/// Grid semi-decision for `Phi(2x) <= K Phi(x)` beyond `x0`.
pub fn delta2_check<T: Scalar>(
    phi: &Young<T>,
    x0: T,
    grid: &[T],
    threshold: T,
) -> Result<Delta2Report<T>> {
    if grid.len() < 3 || grid.iter().any(|&x| !(x > x0)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "grid must be increasing, above x0, with at least 3 points".into(),
        ));
    }
    if grid[grid.len() - 1] / grid[0] < lit(999.999) {
        return Err(Error::InvalidInput(
            "grid must span at least three decades".into(),
        ));
    }
    let mut ratios = Vec::with_capacity(grid.len());
    for &x in grid {
        let r = phi.eval(lit::<T>(2.0) * x) / phi.eval(x);
        let r = if r.is_nan() { T::infinity() } else { r };
        ratios.push((x, r));
        if r > threshold {
            return Ok(Delta2Report {
                satisfied: false,
                k_bound: None,
                witness: Some(x),
                witness_ratio: Some(r),
                ratios,
            });
        }
    }
    let tail = &ratios[ratios.len() / 2..];
    let settled = tail
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * (T::one() + lit::<T>(1e-9)));
    if settled {
        let k = ratios.iter().map(|r| r.1).fold(T::zero(), T::max);
        Ok(Delta2Report {
            satisfied: true,
            k_bound: Some(k),
            witness: None,
            witness_ratio: None,
            ratios,
        })
    } else {
        let last = ratios[ratios.len() - 1];
        Err(Error::InconclusiveGrid {
            x: last.0.as_f64(),
            last_ratio: last.1.as_f64(),
        })
    }
}

/// Log-spaced grid with `per_decade` points per decade.
pub fn log_grid<T: Scalar>(lo: T, hi: T, per_decade: usize) -> Vec<T> {
    let decades = (hi / lo).log10();
    let n = (decades * T::count(per_decade))
        .ceil()
        .to_usize()
        .unwrap_or(1)
        .max(2);
    (0..=n)
        .map(|i| lo * (T::count(i) / T::count(n) * (hi / lo).ln()).exp())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow<T> {
    pub k: usize,
    pub modulars: Vec<Estimate<T>>,
    pub norm: Norm<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport<T> {
    pub scalings: Vec<T>,
    pub rows: Vec<ConvergenceRow<T>>,
    /// Some scaling whose modular is strictly decreasing and fell by 1e3 or more.
    pub modular_to_zero: bool,
    /// Norm at the last index at least a tenth of the first, against the 1e3 drop asked of the modular.
    pub norm_bounded_away: bool,
}

/// Tabulates `rho(lambda Y_k)` and `||Y_k||` over `ks`.
pub fn modular_vs_norm_convergence<T: Scalar, F>(
    phi: &Young<T>,
    seq: F,
    ks: &[usize],
    scalings: &[T],
) -> Result<ConvergenceReport<T>>
where
    F: Fn(usize) -> SeriesRandomVariable<T>,
{
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let y = seq(k);
        let modulars = scalings
            .iter()
            .map(|&s| modular_scaled(phi, Variable::Series(&y), s))
            .collect::<Result<Vec<_>>>()?;
        let norm = gauge_norm(phi, Variable::Series(&y))?;
        rows.push(ConvergenceRow { k, modulars, norm });
    }
    let modular_to_zero = (0..scalings.len()).any(|j| {
        let vals: Vec<T> = rows
            .iter()
            .map(|r| r.modulars[j].value.to_float())
            .collect();
        vals.len() >= 2
            && vals.iter().all(|v| v.is_finite())
            && vals.windows(2).all(|w| w[1] < w[0])
            && vals[vals.len() - 1] <= vals[0] * lit(1e-3)
    });
    let norm_bounded_away = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => b.norm.value > T::zero() && b.norm.value >= a.norm.value * lit(0.1),
        _ => false,
    };
    Ok(ConvergenceReport {
        scalings: scalings.to_vec(),
        rows,
        modular_to_zero,
        norm_bounded_away,
    })
}

/// `E|XY| <= 2 ||X||_phi ||Y||_psi` for a conjugate pair `(phi, psi)`.
pub fn holder_check<T: Scalar>(
    x: &FiniteRandomVariable<T>,
    y: &FiniteRandomVariable<T>,
    phi: &Young<T>,
    psi: &Young<T>,
) -> Result<bool> {
    if x.probs != y.probs {
        return Err(Error::InvalidInput(
            "variables must share a probability vector".into(),
        ));
    }
    let lhs: T = x
        .outcomes
        .iter()
        .zip(&y.outcomes)
        .zip(&x.probs)
        .map(|((&a, &b), &p)| p * (a * b).abs())
        .sum();
    let nx = gauge_norm(phi, Variable::Finite(x))?.value;
    let ny = gauge_norm(psi, Variable::Finite(y))?.value;
    let rhs = lit::<T>(2.0) * nx * ny;
    Ok(lhs <= rhs * (T::one() + lit::<T>(1e-10)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn coin() -> FiniteRandomVariable<f64> {
        FiniteRandomVariable::new(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap()
    }

    /// Geometric series variable: outcome `i + 1` with mass `(1 - q) q^i`.
    fn geometric(q: f64) -> SeriesRandomVariable<f64> {
        SeriesRandomVariable::new(
            Arc::new(move |i| ((i + 1) as f64, (1.0 - q) * q.powi(i as i32))),
            Arc::new(move |phi, m, s| match phi {
                // sum_{i>=m} (1-q) q^i e^{s(i+1)} for q e^s < 1
                Young::Exponential => {
                    let r = q * s.exp();
                    if r >= 1.0 {
                        TailBound::Divergent
                    } else {
                        TailBound::Bound((1.0 - q) * s.exp() * r.powi(m as i32) / (1.0 - r))
                    }
                }
                _ => TailBound::Unavailable,
            }),
        )
    }

    #[test]
    fn finite_modular_examples() {
        let m = modular(&Young::Exponential, Variable::Finite(&coin())).unwrap();
        assert!((m.value.finite().unwrap() - (E - 1.0)).abs() < 1e-15);
        let z = FiniteRandomVariable::constant(0.0);
        assert_eq!(
            modular(&Young::PowerLog, Variable::Finite(&z))
                .unwrap()
                .value,
            ExtReal::Finite(0.0)
        );
    }

    #[test]
    fn finite_norm_examples() {
        let n = gauge_norm(&Young::Exponential, Variable::Finite(&coin())).unwrap();
        assert!((n.value - 1.0 / LN_2).abs() < 1e-12);
        let three = FiniteRandomVariable::constant(3.0);
        let n = gauge_norm(&Young::<f64>::power(2.0), Variable::Finite(&three)).unwrap();
        assert!((n.value - 3.0).abs() < 1e-12);
        let z = FiniteRandomVariable::constant(0.0);
        assert_eq!(
            gauge_norm(&Young::Exponential, Variable::Finite(&z))
                .unwrap()
                .value,
            0.0
        );
    }

    #[test]
    fn norm_solves_unit_modular() {
        let x = FiniteRandomVariable::new(vec![0.3, -2.0, 5.0], vec![0.2, 0.5, 0.3]).unwrap();
        for phi in [
            Young::Exponential,
            Young::<f64>::power(3.0),
            Young::PowerLog,
        ] {
            let n = gauge_norm(&phi, Variable::Finite(&x)).unwrap();
            let m = modular_scaled(&phi, Variable::Finite(&x), 1.0 / n.value).unwrap();
            assert!((m.value.finite().unwrap() - 1.0).abs() < 1e-10, "{phi:?}");
        }
    }

    #[test]
    fn series_modular_against_closed_form() {
        let g = geometric(0.5);
        let s = 0.3;
        let m = modular_scaled(&Young::Exponential, Variable::Series(&g), s).unwrap();
        // E[e^{sX}] - 1 for X ~ 1 + Geom
        let r = 0.5 * s.exp();
        let closed = 0.5 * s.exp() / (1.0 - r) - 1.0;
        assert!((m.value.finite().unwrap() - closed).abs() < 1e-10);
        assert!(m.error_bound < 1e-10);
        let inf = modular_scaled(&Young::Exponential, Variable::Series(&g), 1.0).unwrap();
        assert_eq!(inf.value, ExtReal::PosInf);
        assert!(matches!(
            modular(&Young::PowerLog, Variable::Series(&g)),
            Err(Error::TailBoundUnavailable { .. })
        ));
    }

    #[test]
    fn series_norm_and_membership() {
        let g = geometric(0.5);
        let n = gauge_norm(&Young::Exponential, Variable::Series(&g)).unwrap();
        assert!(n.lower <= n.value && n.value <= n.upper);
        let m = modular_scaled(&Young::Exponential, Variable::Series(&g), 1.0 / n.value).unwrap();
        assert!((m.value.finite().unwrap() - 1.0).abs() < 1e-9);
        let mem = membership(&Young::Exponential, Variable::Series(&g)).unwrap();
        assert!(mem.in_space && !mem.in_heart);
        let fin = membership(&Young::Exponential, Variable::Finite(&coin())).unwrap();
        assert!(fin.in_space && fin.in_heart);
    }

    #[test]
    fn delta2_verdicts() {
        let grid = log_grid(1.0, 1e4, 10);
        let p = delta2_check(&Young::<f64>::power(2.0), 0.5, &grid, 1e6).unwrap();
        assert!(p.satisfied);
        assert!((p.k_bound.unwrap() - 4.0).abs() < 1e-12);
        let pl = delta2_check(&Young::PowerLog, 0.5, &grid, 1e6).unwrap();
        assert!(pl.satisfied && pl.k_bound.unwrap() <= 8.0);
        let e = delta2_check(&Young::Exponential, 0.5, &grid, 1e6).unwrap();
        assert!(!e.satisfied && e.witness.is_some());
        let r30 = Young::Exponential.eval(60.0) / Young::Exponential.eval(30.0);
        assert!(r30 > 30f64.exp() * 0.9);
    }

    #[test]
    fn delta2_inconclusive_and_bad_grid() {
        // ratio 4 ln(e + 2x)^3 / ln(e + x)^3 style growth is slow; use a ratio that climbs
        let climbing = Young::Custom(Arc::new(|x: f64| {
            (x.ln().max(0.0) + 1.0).powf(x.ln().max(0.0) + 1.0)
        }));
        let grid = log_grid(1.0, 1e3, 5);
        assert!(matches!(
            delta2_check(&climbing, 0.5, &grid, 1e6),
            Err(Error::InconclusiveGrid { .. })
        ));
        assert!(delta2_check(&Young::<f64>::power(2.0), 0.5, &[1.0, 2.0, 3.0], 1e6).is_err());
    }

    #[test]
    fn power_conjugate_pair() {
        let half_square = Young::<f64>::Power { p: 2.0, scale: 0.5 };
        match half_square.conjugate().unwrap() {
            Young::Power { p, scale } => {
                assert!((p - 2.0).abs() < 1e-15 && (scale - 0.5).abs() < 1e-15)
            }
            _ => unreachable!(),
        }
        let x = coin();
        let y = FiniteRandomVariable::new(vec![1.0, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(holder_check(&x, &y, &half_square, &half_square).unwrap());
        let z = FiniteRandomVariable::new(vec![0.0, 0.0], vec![0.5, 0.5]).unwrap();
        assert!(holder_check(&z, &y, &Young::Exponential, &Young::ExpConjugate).unwrap());
    }

    #[test]
    fn weighted_eval_avoids_overflow() {
        let v = Young::Exponential.eval_weighted(720.0, 1e-310_f64.max(f64::MIN_POSITIVE));
        assert!(v.is_finite());
    }

    #[test]
    fn parse_names() {
        assert!(matches!(
            Young::<f64>::parse("exp").unwrap(),
            Young::Exponential
        ));
        assert!(matches!(
            Young::<f64>::parse("power:3").unwrap(),
            Young::Power { .. }
        ));
        assert!(Young::<f64>::parse("power:x").is_err());
    }
}
