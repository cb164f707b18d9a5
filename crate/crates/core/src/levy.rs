//! Exponential-utility corner solution in a Lévy model.
//!
//! `X` has drift `b_x`, no Gaussian part, and Lévy measure
//! `F(dx) = c0 x^{-5/2} e^{-x} 1_{x > 0} dx + delta_{-1/2}(dx)` with `c0 = 3 / (4 sqrt(pi))`.
//! Utility is `U(x) = -e^{-x}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::optimize::brent_root;
use crate::quadrature::{integrate, integrate_tail, QuadOptions};
use crate::scalar::{lit, Scalar};

/// Width of the series window at the origin.
const SERIES_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevyModel<T> {
    pub b_x: T,
    pub horizon: T,
}

impl<T: Scalar> Default for LevyModel<T> {
    fn default() -> Self {
        Self {
            b_x: lit(-2.0),
            horizon: T::one(),
        }
    }
}

impl<T: Scalar> LevyModel<T> {
    pub fn new(b_x: T, horizon: T) -> Result<Self> {
        if !b_x.is_finite() || !(horizon > T::zero() && horizon.is_finite()) {
            return Err(Error::InvalidInput(
                "need finite drift and positive finite horizon".into(),
            ));
        }
        Ok(Self { b_x, horizon })
    }

    /// `A = -(b_x + 2 - 1/(2 sqrt e))`; positive exactly when the corner regime applies.
    pub fn a(&self) -> T {
        -(self.b_x + lit(2.0) - lit::<T>(0.5) * lit::<T>(-0.5).exp())
    }

    /// Largest drift for which the optimum sits at `theta = -1`.
    pub fn drift_threshold() -> T {
        lit::<T>(-2.0) + lit::<T>(0.5) * lit::<T>(-0.5).exp()
    }
}

fn c0<T: Scalar>() -> T {
    lit::<T>(3.0) / (lit::<T>(4.0) * T::PI().sqrt())
}

/// Density of the positive-jump part.
pub fn levy_density<T: Scalar>(x: T) -> T {
    c0::<T>() * x.powf(lit(-2.5)) * (-x).exp()
}

fn qopts<T: Scalar>() -> QuadOptions<T> {
    QuadOptions::tol(lit(1e-15), lit(1e-13))
}

/// `ln E[e^{v X_1}]` in closed form.
pub fn cumulant<T: Scalar>(m: &LevyModel<T>, v: T) -> ExtReal<T> {
    if v > T::one() {
        return ExtReal::PosInf;
    }
    ExtReal::Finite(
        (-v / lit(2.0)).exp() + (T::one() - v).powf(lit(1.5)) - lit(2.0)
            + (lit::<T>(2.0) + m.b_x) * v,
    )
}

/// `kappa'(v)` in closed form for `v <= 1`.
pub fn cumulant_derivative<T: Scalar>(m: &LevyModel<T>, v: T) -> T {
    -lit::<T>(0.5) * (-v / lit(2.0)).exp() - lit::<T>(1.5) * (T::one() - v).sqrt()
        + lit(2.0)
        + m.b_x
}

/// `c0 int_0^inf h(x) x^{-5/2} dx` where `h(x) = x^2 (s0 + s1 x + s2 x^2) + O(x^5)` at the origin.
/// `h` must already include the `e^{-x}` factor so large `x` never overflows.
fn positive_jump_integral<T: Scalar, H: Fn(T) -> T>(h: H, series: [T; 3]) -> Result<T> {
    let eps: T = lit(SERIES_EPS);
    let c = c0::<T>();
    // int_0^eps x^{k - 5/2} dx = eps^{k - 3/2} / (k - 3/2)
    let head = c
        * (series[0] * eps.powf(lit(0.5)) / lit(0.5)
            + series[1] * eps.powf(lit(1.5)) / lit(1.5)
            + series[2] * eps.powf(lit(2.5)) / lit(2.5));
    let body = |x: T| c * h(x) * x.powf(lit(-2.5));
    // x = s^2 on [eps, 1] removes the x^{-1/2} behaviour
    let mid = integrate(
        |s: T| lit::<T>(2.0) * s * body(s * s),
        eps.sqrt(),
        T::one(),
        qopts(),
    )?;
    let tail = integrate_tail(body, T::one(), qopts())?;
    Ok(head + mid.value + tail.value)
}

/// `b_x v + int (e^{vx} - 1 - vx) F(dx)` evaluated numerically.
pub fn cumulant_by_quadrature<T: Scalar>(m: &LevyModel<T>, v: T) -> Result<ExtReal<T>> {
    if v > T::one() {
        return Ok(ExtReal::PosInf);
    }
    let a = v - T::one();
    let series = [
        v * v / lit(2.0),
        (a * a * a + T::one() - lit::<T>(3.0) * v) / lit(6.0),
        (a * a * a * a - T::one() + lit::<T>(4.0) * v) / lit(24.0),
    ];
    let h = |x: T| {
        if x < T::one() {
            crate::scalar::expm1_minus_linear(v * x) * (-x).exp()
        } else {
            (a * x).exp() - (T::one() + v * x) * (-x).exp()
        }
    };
    let cont = positive_jump_integral(h, series)?;
    let half: T = lit(-0.5);
    let atom = (v * half).exp_m1() - v * half;
    Ok(ExtReal::Finite(m.b_x * v + cont + atom))
}

/// `int x (e^x - 1) F(dx)` by quadrature; equals `2 - 1/(2 sqrt e)`.
pub fn exponential_moment_integral<T: Scalar>() -> Result<T> {
    // x (e^x - 1) e^{-x} = x (1 - e^{-x}) = x^2 - x^3/2 + x^4/6 - ...
    let series = [T::one(), lit(-0.5), lit(1.0 / 6.0)];
    let cont = positive_jump_integral(|x: T| -x * (-x).exp_m1(), series)?;
    let h: T = lit(-0.5);
    Ok(cont + h * h.exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerAnalysis<T> {
    pub a_closed_form: T,
    pub a_quadrature: T,
    /// Interior root of the first-order condition, as an optimal `theta`.
    pub interior_root: Option<T>,
    pub optimal_theta: T,
}

/// Maximizes `-exp(kappa(-theta) T)` over buy-and-hold `theta`.
pub fn corner_analysis<T: Scalar>(m: &LevyModel<T>) -> Result<CornerAnalysis<T>> {
    // kappa(w) is convex and finite for w <= 1, so an interior optimum exists iff kappa'(1) > 0
    let d = |w: T| cumulant_derivative(m, w);
    if d(T::one()) >= T::zero() {
        let mut lo = lit::<T>(-1.0);
        while d(lo) > T::zero() {
            lo = lo * lit(2.0);
        }
        let w = brent_root(d, lo, T::one(), lit(1e-14))?;
        return Err(Error::InteriorOptimum {
            root: (-w).as_f64(),
        });
    }
    let a_quadrature = -(m.b_x + exponential_moment_integral::<T>()?);
    Ok(CornerAnalysis {
        a_closed_form: m.a(),
        a_quadrature,
        interior_root: None,
        optimal_theta: -T::one(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualSequenceRow<T> {
    pub n: usize,
    pub k_n: T,
    pub b_n: T,
    pub c_n: T,
    /// P-drift of the stochastic logarithm of `Z^(n)`.
    pub drift_l: T,
    /// Drift of `ln Z^(n)` under `Q^(n)`, integrated directly.
    pub drift_ln_z_q: T,
    /// `-exp((drift_l - drift_ln_z_q) T)`.
    pub value: T,
    /// The same value through `-E[Z] exp(-E[Z ln Z] / E[Z])` with `E[Z] = exp((kappa(1) + K_n) T)`
    /// and `E[Z ln Z] / E[Z] = (B_n + C_n) T`.
    pub value_entropy: T,
    /// `b_x + int x W_n(x) F(dx)`.
    pub residual_b2: T,
}

/// Shared quadrature results for all rows.
struct SequenceBase<T> {
    a_quad: T,
    kappa1_quad: T,
    kappa1: T,
}

fn sequence_base<T: Scalar>(m: &LevyModel<T>) -> Result<SequenceBase<T>> {
    if !(m.a() > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "drift {} violates b_x < -2 + 1/(2 sqrt e)",
            m.b_x.as_f64()
        )));
    }
    Ok(SequenceBase {
        a_quad: -(m.b_x + exponential_moment_integral::<T>()?),
        kappa1_quad: cumulant_by_quadrature(m, T::one())?.to_float(),
        kappa1: cumulant(m, T::one()).to_float(),
    })
}

fn sequence_row<T: Scalar>(
    m: &LevyModel<T>,
    base: &SequenceBase<T>,
    n: usize,
) -> Result<DualSequenceRow<T>> {
    let c = c0::<T>();
    let nn = T::count(n);
    let (lo, hi) = (nn, nn + T::one());
    let k = m.a() / (nn + lit(0.5));
    // K_n e^{-x} dx / F(dx)
    let bump = |x: T| k * x.powf(lit(2.5)) / c;
    let b_n = integrate(|x: T| bump(x).ln_1p() * levy_density(x), lo, hi, qopts())?.value;
    // W_n f = (1 - e^{-x}) c0 x^{-5/2} + K_n on [n, n+1]
    let wf = |x: T| -(-x).exp_m1() * c * x.powf(lit(-2.5)) + k;
    let c_n = integrate(|x: T| wf(x) * bump(x).ln_1p(), lo, hi, qopts())?.value;
    let kx = integrate(|x: T| k * x, lo, hi, qopts())?.value;
    let residual_b2 = -base.a_quad + kx;
    let drift_l = base.kappa1_quad + integrate(|_| k, lo, hi, qopts())?.value;
    // b_x + int ((1 + W_n) ln(1 + W_n) - x) F(dx), with the part off [n, n+1] equal to -A
    let local = integrate(
        |x: T| {
            let ef = c * x.powf(lit(-2.5));
            (ef + k) * (x + bump(x).ln_1p()) - x * ef
        },
        lo,
        hi,
        qopts(),
    )?
    .value;
    let drift_ln_z_q = -base.a_quad + local;
    let t = m.horizon;
    let value = -((drift_l - drift_ln_z_q) * t).exp();
    let mass = ((base.kappa1 + k) * t).exp();
    let value_entropy = -mass * (-(b_n + c_n) * t).exp();
    Ok(DualSequenceRow {
        n,
        k_n: k,
        b_n,
        c_n,
        drift_l,
        drift_ln_z_q,
        value,
        value_entropy,
        residual_b2,
    })
}

/// Rows `n = 1..=n_max` of the dual optimizing sequence, computed in parallel.
pub fn dual_sequence<T: Scalar>(m: &LevyModel<T>, n_max: usize) -> Result<Vec<DualSequenceRow<T>>> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let base = sequence_base(m)?;
    (1..=n_max)
        .into_par_iter()
        .map(|n| sequence_row(m, &base, n))
        .collect()
}

/// Single row of [`dual_sequence`].
pub fn dual_sequence_row<T: Scalar>(m: &LevyModel<T>, n: usize) -> Result<DualSequenceRow<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("rows start at n = 1".into()));
    }
    sequence_row(m, &sequence_base(m)?, n)
}

/// Limit of the sequence values: `-exp(kappa(1) T)`.
pub fn dual_sequence_limit<T: Scalar>(m: &LevyModel<T>) -> T {
    -(cumulant(m, T::one()).to_float() * m.horizon).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflatorVerdict<T> {
    /// Drift of `X` under the measure with density `e^{X_T - kappa(1) T}`, by quadrature.
    pub drift_q: T,
    /// `E_t[(c - X_T) e^{X_T}]` given `X_t = x_t`.
    pub lhs: T,
    /// Sign bound on `D_t (c - x_t)` for any `D_t >= 0`: positive when `x_t < c`.
    pub rhs_sign: i8,
    pub window: (T, T),
    pub contradiction: bool,
}

/// Tests whether `(c, x_t)` rules out a supermartingale deflator `D` with `D_T = e^{X_T}` and
/// `D (c - X)` a supermartingale.
pub fn deflator_nonexistence<T: Scalar>(
    m: &LevyModel<T>,
    c: T,
    x_t: T,
    t: T,
) -> Result<DeflatorVerdict<T>> {
    if !(c >= T::zero()) || !(t >= T::zero() && t < m.horizon) || !x_t.is_finite() {
        return Err(Error::InvalidInput(
            "need c >= 0, 0 <= t < T and finite x_t".into(),
        ));
    }
    let drift_q = m.b_x + exponential_moment_integral::<T>()?;
    let tau = m.horizon - t;
    let kappa1 = cumulant(m, T::one()).to_float();
    let lhs = (x_t + kappa1 * tau).exp() * (c - x_t - drift_q * tau);
    let rhs_sign = if c - x_t > T::zero() {
        1
    } else if c - x_t < T::zero() {
        -1
    } else {
        0
    };
    let contradiction = lhs > T::zero() && rhs_sign <= 0;
    Ok(DeflatorVerdict {
        drift_q,
        lhs,
        rhs_sign,
        window: (c, c - drift_q * tau),
        contradiction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LevyModel<f64> {
        LevyModel::default()
    }

    #[test]
    fn closed_form_values() {
        let m = model();
        assert_eq!(cumulant(&m, 0.0), ExtReal::Finite(0.0));
        let k1 = cumulant(&m, 1.0).to_float();
        assert!((k1 - ((-0.5f64).exp() - 2.0)).abs() < 1e-15);
        assert_eq!(cumulant(&m, 1.01), ExtReal::PosInf);
        assert!((m.a() - 0.5 / 1f64.exp().sqrt()).abs() < 1e-15);
        assert!((LevyModel::<f64>::drift_threshold() + 1.6967346701436833).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let m = model();
        for v in [-3.0, -1.0, 0.0, 0.5, 0.9, 1.0] {
            let q = cumulant_by_quadrature(&m, v).unwrap().to_float();
            let c = cumulant(&m, v).to_float();
            assert!((q - c).abs() < 1e-8, "v={v}: {q} vs {c}");
        }
        assert_eq!(cumulant_by_quadrature(&m, 1.5).unwrap(), ExtReal::PosInf);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = LevyModel::<f64>::new(-1.3, 1.0).unwrap();
        for v in [-2.0, 0.0, 0.7] {
            let h = 1e-6;
            let fd = (cumulant(&m, v + h).to_float() - cumulant(&m, v - h).to_float()) / (2.0 * h);
            assert!((fd - cumulant_derivative(&m, v)).abs() < 1e-8);
        }
    }

    #[test]
    fn moment_identity() {
        let q = exponential_moment_integral::<f64>().unwrap();
        assert!((q - (2.0 - 0.5 * (-0.5f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn corner_and_interior_regimes() {
        let c = corner_analysis(&model()).unwrap();
        assert_eq!(c.optimal_theta, -1.0);
        assert!((c.a_closed_form - c.a_quadrature).abs() < 1e-9);
        match corner_analysis(&LevyModel::new(-1.0, 1.0).unwrap()) {
            Err(Error::InteriorOptimum { root }) => {
                let m = LevyModel::<f64>::new(-1.0, 1.0).unwrap();
                assert!(root > -1.0 && root < 0.0);
                assert!(cumulant_derivative(&m, -root).abs() < 1e-10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sequence_rows_are_consistent() {
        let m = model();
        let rows = dual_sequence(&m, 6).unwrap();
        let limit = dual_sequence_limit(&m);
        assert!((limit + ((-0.5f64).exp() - 2.0).exp()).abs() < 1e-15);
        for r in &rows {
            assert!((r.k_n - m.a() / (r.n as f64 + 0.5)).abs() < 1e-15);
            assert!(r.residual_b2.abs() < 1e-7);
            assert!((r.drift_ln_z_q - (r.b_n + r.c_n)).abs() < 1e-7, "{r:?}");
            assert!((r.value - r.value_entropy).abs() < 1e-7);
            // weak duality: every separating measure bounds the attainable utility from above
            assert!(r.value >= limit - 1e-12);
            assert!((r.drift_l - (cumulant(&m, 1.0).to_float() + r.k_n)).abs() < 1e-9);
        }
        let single = dual_sequence_row(&m, 3).unwrap();
        assert_eq!(single, rows[2]);
    }

    #[test]
    fn deflator_witness() {
        let m = model();
        let a = m.a();
        let v = deflator_nonexistence(&m, 0.0, a / 2.0, 0.0).unwrap();
        assert!(v.contradiction && v.lhs > 0.0 && v.rhs_sign < 0);
        assert!((v.drift_q + a).abs() < 1e-9);
        let below = deflator_nonexistence(&m, 0.0, -1.0, 0.0).unwrap();
        assert!(!below.contradiction);
        assert!(deflator_nonexistence(&m, 0.0, 0.1, 1.0).is_err());
    }
}
