//! Countable market where exponential utility is strictly higher over the economic closure of
//! the attainable cone than over the cone itself.
//!
//! States are the integers with `P(n) = e^{-|n|}` for `n` in `{1, +-2, +-3, ...}`,
//! `P(-1) = e^{-5}` and the remaining mass on `0`. The claim `X` is `-1, 1` on states `-1, 1`;
//! the shocks are `Y_k(n) = n 1_{|n| >= max(k, 2)}` and the traded assets `X_k = X + Y_k`.
//! Computations run on the symmetric truncation `|n| <= N`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::optimize::{brent_min, brent_root};
use crate::orlicz::{SeriesRandomVariable, TailBound, Young};
use crate::scalar::{lit, Scalar};

/// State `0` split into atoms `X = -j` (`j >= 1`) with masses `w e^{-order j} / (j^3 z)`, so
/// that `E[e^{-lambda X}]` is finite exactly for `lambda <= order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitZero<T> {
    pub mass: T,
    pub order: T,
}

impl<T: Scalar> Default for SplitZero<T> {
    fn default() -> Self {
        Self {
            mass: lit(0.005),
            order: lit(1.5),
        }
    }
}

impl<T: Scalar> SplitZero<T> {
    /// Normalizer `z = sum_j e^{-order j} / j^3`.
    pub fn normalizer(&self) -> T {
        let mut total = T::zero();
        for j in 1..10_000usize {
            let jj = T::count(j);
            let term = (-self.order * jj).exp() / (jj * jj * jj);
            total = total + term;
            if term < T::epsilon() * total * lit(1e-3) {
                break;
            }
        }
        total
    }

    /// `sum_j w_j e^{lambda j}`; infinite above `order`.
    fn moment(&self, lam: T) -> ExtReal<T> {
        if lam > self.order {
            return ExtReal::PosInf;
        }
        let z = self.normalizer();
        let mut total = T::zero();
        let d = self.order - lam;
        for j in 1..100_000usize {
            let jj = T::count(j);
            let term = (-d * jj).exp() / (jj * jj * jj);
            total = total + term;
            // remaining terms are below term * j^3 sum_{i > j} i^{-3} <= term j / 2
            if term * jj < T::epsilon() * total * lit(1e-3) {
                break;
            }
        }
        ExtReal::Finite(self.mass * total / z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMarket<T> {
    pub truncation: usize,
    pub split_zero: Option<SplitZero<T>>,
}

fn e<T: Scalar>(x: f64) -> T {
    lit::<T>(x).exp()
}

impl<T: Scalar> GapMarket<T> {
    pub fn new(truncation: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::InvalidInput(
                "truncation level must be at least 2".into(),
            ));
        }
        Ok(Self {
            truncation,
            split_zero: None,
        })
    }

    pub fn with_split_zero(mut self, split: SplitZero<T>) -> Result<Self> {
        if !(split.mass > T::zero() && split.mass < self.zero_mass()) || !(split.order > T::zero())
        {
            return Err(Error::InvalidInput(
                "split mass must lie in (0, P(0)) and order be positive".into(),
            ));
        }
        self.split_zero = Some(split);
        Ok(self)
    }

    /// Untruncated `P({0}) = 1 - 2/(e^2 - e) - e^{-1} - e^{-5}`.
    pub fn zero_mass(&self) -> T {
        let ee = T::E();
        T::one() - lit::<T>(2.0) / (ee * ee - ee) - e(-1.0) - e(-5.0)
    }

    pub fn prob(&self, n: i64) -> T {
        match n {
            0 => self.zero_mass(),
            -1 => e(-5.0),
            _ => lit::<T>(-(n.unsigned_abs() as f64)).exp(),
        }
    }

    /// States `-N..=N` of the truncated space.
    pub fn states(&self) -> Vec<i64> {
        let n = self.truncation as i64;
        (-n..=n).collect()
    }

    /// Mass lost to truncation, `2 e^{-N} / (e - 1)`.
    pub fn truncation_error(&self) -> T {
        lit::<T>(2.0) * lit::<T>(-(self.truncation as f64)).exp() / (T::E() - T::one())
    }

    pub fn x(n: i64) -> T {
        match n {
            1 => T::one(),
            -1 => -T::one(),
            _ => T::zero(),
        }
    }

    pub fn y(k: usize, n: i64) -> T {
        if n.unsigned_abs() as usize >= k.max(2) {
            lit(n as f64)
        } else {
            T::zero()
        }
    }

    /// `E[e^{-lambda X}]` under the untruncated law of `X`, including the mass at `X = 0`.
    pub fn exponential_moment(&self, lam: T) -> ExtReal<T> {
        let base = e::<T>(-5.0) * lam.exp() + e::<T>(-1.0) * (-lam).exp();
        let rest = T::one() - e::<T>(-5.0) - e::<T>(-1.0);
        match &self.split_zero {
            None => ExtReal::Finite(base + rest),
            Some(s) => match s.moment(lam) {
                ExtReal::Finite(v) => ExtReal::Finite(base + rest - s.mass + v),
                _ => ExtReal::PosInf,
            },
        }
    }

    /// `E[X e^{-lambda X}]`, i.e. minus the derivative of the exponential moment.
    pub fn tilted_mean(&self, lam: T) -> ExtReal<T> {
        let base = e::<T>(-1.0) * (-lam).exp() - e::<T>(-5.0) * lam.exp();
        match &self.split_zero {
            None => ExtReal::Finite(base),
            Some(s) => {
                if lam > s.order {
                    return ExtReal::NegInf;
                }
                let z = s.normalizer();
                let d = s.order - lam;
                let mut total = T::zero();
                for j in 1..100_000usize {
                    let jj = T::count(j);
                    let term = (-d * jj).exp() / (jj * jj);
                    total = total + term;
                    if d == T::zero() && j > 1 {
                        // sum 1/j^2 converges slowly; finish with pi^2/6
                        total = T::PI() * T::PI() / lit(6.0);
                        break;
                    }
                    if term * jj < T::epsilon() * total * lit(1e-3) {
                        break;
                    }
                }
                ExtReal::Finite(base - s.mass * total / z)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentArgmin<T> {
    pub lambda: T,
    pub value: T,
    /// `|e^{-5} e^lambda - e^{-1} e^{-lambda}|` at the minimizer.
    pub foc_residual: T,
    /// Minimizer sits at the finiteness boundary of the moment.
    pub corner: bool,
}

/// Minimizer of the convex `lambda -> E[e^{-lambda X}]` on `[lo, hi]`, located through the sign of
/// its derivative `-E[X e^{-lambda X}]`.
fn moment_minimizer<T: Scalar>(m: &GapMarket<T>, lo: T, hi: T) -> T {
    let d = |l: T| m.tilted_mean(l).to_float();
    if d(hi) >= T::zero() {
        hi
    } else if d(lo) <= T::zero() {
        lo
    } else {
        brent_root(d, lo, hi, lit(1e-15)).unwrap_or_else(|_| {
            brent_min(|l| m.exponential_moment(l).to_float(), lo, hi, lit(1e-12)).x
        })
    }
}

/// Minimizes `lambda -> E[e^{-lambda X}]` over the region where it is finite.
pub fn exponential_moment_argmin<T: Scalar>(m: &GapMarket<T>) -> MomentArgmin<T> {
    let upper = m.split_zero.map(|s| s.order).unwrap_or(lit(10.0));
    let lambda = moment_minimizer(m, lit(-10.0), upper);
    let value = m.exponential_moment(lambda).to_float();
    let corner = m.split_zero.is_some() && lambda == upper;
    let foc_residual = (e::<T>(-5.0) * lambda.exp() - e::<T>(-1.0) * (-lambda).exp()).abs();
    MomentArgmin {
        lambda,
        value,
        foc_residual,
        corner,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Completions<T> {
    pub states: Vec<i64>,
    /// `e^{-X} / E[e^{-X}]`, the optimal effective completion of the cone.
    pub effective: Vec<T>,
    /// `e^{-2X} / E[e^{-2X}]`, the full completion.
    pub full: Vec<T>,
    pub entropy_full: T,
    /// `E[X e^{-X}] = e^{-2} - e^{-4}`.
    pub corner_value: T,
    /// `I_V(e^{-X}) + E[X e^{-X}] + E[e^{-X}]`, zero for `V(y) = y ln y - y`.
    pub identity_residual: T,
    /// `E^Q[X]` under the full completion.
    pub full_mean_x: T,
    /// Largest `|E^Q[Y_k]|` over `k <= N` under the full completion.
    pub full_mean_y: T,
}

pub fn completions<T: Scalar>(m: &GapMarket<T>) -> Completions<T> {
    let m1 = m.exponential_moment(T::one()).to_float();
    let m2 = m.exponential_moment(lit(2.0)).to_float();
    let states = m.states();
    let x = |n: i64| GapMarket::<T>::x(n);
    let effective: Vec<T> = states.iter().map(|&n| (-x(n)).exp() / m1).collect();
    let full: Vec<T> = states
        .iter()
        .map(|&n| (-lit::<T>(2.0) * x(n)).exp() / m2)
        .collect();
    // the three atoms of X carry the whole law
    let atoms = [
        (-1.0, e::<T>(-5.0)),
        (1.0, e::<T>(-1.0)),
        (0.0, T::one() - e::<T>(-5.0) - e::<T>(-1.0)),
    ];
    let v = |y: T| y * y.ln() - y;
    let mut iv = T::zero();
    let mut corner_value = T::zero();
    let mut full_mean_x = T::zero();
    for (xv, p) in atoms {
        let xv: T = lit(xv);
        iv = iv + p * v((-xv).exp());
        corner_value = corner_value + p * xv * (-xv).exp();
        full_mean_x = full_mean_x + p * xv * (-lit::<T>(2.0) * xv).exp() / m2;
    }
    let identity_residual = iv + corner_value + m1;
    let mut full_mean_y = T::zero();
    for k in 2..=m.truncation {
        // pair n with -n so the symmetric cancellation is exact
        let mut s = T::zero();
        for n in k..=m.truncation {
            let n = n as i64;
            s = s
                + (GapMarket::<T>::y(k, n) * m.prob(n) * full[(n + m.truncation as i64) as usize]
                    + GapMarket::<T>::y(k, -n)
                        * m.prob(-n)
                        * full[(m.truncation as i64 - n) as usize]);
        }
        full_mean_y = full_mean_y.max(s.abs());
    }
    Completions {
        states,
        effective,
        full,
        entropy_full: -m2.ln(),
        corner_value,
        identity_residual,
        full_mean_x,
        full_mean_y,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapMechanics<T> {
    /// Partial sums `xi_j = lambda_1 + ... + lambda_j`.
    pub xi: Vec<T>,
    /// `E[e^{-Z}]` on the truncated space.
    pub moment_z: T,
    /// `E[e^{-xi_N X}]`.
    pub moment_xi_x: T,
    pub moment_x: T,
    /// `E[e^{-Z}] >= E[e^{-xi_N X}]`, from conditional Jensen.
    pub jensen_first: bool,
    /// `E[e^{-xi_N X}] >= E[e^{-X}]`; guaranteed when `xi_N <= 1`.
    pub jensen_second: bool,
    /// Largest `|E[Y_k | X]|` over the shocks involved.
    pub conditional_mean_y: T,
}

fn check_coeffs<T: Scalar>(m: &GapMarket<T>, coeffs: &[(usize, T)]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput(
            "at least one coefficient required".into(),
        ));
    }
    for w in coeffs.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidInput(
                "shock indices must be distinct and ascending".into(),
            ));
        }
    }
    if let Some(&(k, _)) = coeffs.iter().find(|(k, _)| *k > m.truncation) {
        return Err(Error::IndexOutOfTruncation {
            index: k,
            truncation: m.truncation,
        });
    }
    if coeffs.iter().any(|(k, l)| *k == 0 || !l.is_finite()) {
        return Err(Error::InvalidInput(
            "indices start at 1 and coefficients must be finite".into(),
        ));
    }
    Ok(())
}

/// `Z = sum_i lambda_i X_{k(i)}` evaluated at state `n`.
fn portfolio<T: Scalar>(coeffs: &[(usize, T)], n: i64) -> T {
    coeffs
        .iter()
        .map(|&(k, l)| l * (GapMarket::<T>::x(n) + GapMarket::<T>::y(k, n)))
        .sum()
}

/// `E[e^{-Z}]` on the truncated space.
pub fn portfolio_moment<T: Scalar>(m: &GapMarket<T>, coeffs: &[(usize, T)]) -> Result<T> {
    check_coeffs(m, coeffs)?;
    Ok(m.states()
        .iter()
        .map(|&n| m.prob(n) * (-portfolio(coeffs, n)).exp())
        .sum())
}

pub fn gap_mechanics<T: Scalar>(
    m: &GapMarket<T>,
    coeffs: &[(usize, T)],
) -> Result<GapMechanics<T>> {
    check_coeffs(m, coeffs)?;
    let mut xi = Vec::with_capacity(coeffs.len());
    let mut acc = T::zero();
    for &(_, l) in coeffs {
        acc = acc + l;
        xi.push(acc);
    }
    let last = acc;
    let states = m.states();
    let moment_z: T = states
        .iter()
        .map(|&n| m.prob(n) * (-portfolio(coeffs, n)).exp())
        .sum();
    let law_x = |lam: T| -> T {
        states
            .iter()
            .map(|&n| m.prob(n) * (-lam * GapMarket::<T>::x(n)).exp())
            .sum()
    };
    let moment_xi_x = law_x(last);
    let moment_x = law_x(T::one());
    // X = 0 on every state carrying a shock, so E[Y_k | X = 0] is the only nontrivial value
    let p0: T = states
        .iter()
        .filter(|&&n| GapMarket::<T>::x(n) == T::zero())
        .map(|&n| m.prob(n))
        .sum();
    let mut conditional_mean_y = T::zero();
    for &(k, _) in coeffs {
        let mut s = T::zero();
        for n in k.max(2)..=m.truncation {
            let n = n as i64;
            s = s + (GapMarket::<T>::y(k, n) * m.prob(n) + GapMarket::<T>::y(k, -n) * m.prob(-n));
        }
        conditional_mean_y = conditional_mean_y.max((s / p0).abs());
    }
    let slack = lit::<T>(1e-12);
    Ok(GapMechanics {
        xi,
        moment_z,
        moment_xi_x,
        moment_x,
        jensen_first: moment_z >= moment_xi_x * (T::one() - slack),
        jensen_second: moment_xi_x >= moment_x * (T::one() - slack),
        conditional_mean_y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationGrowth<T> {
    pub truncations: Vec<usize>,
    pub moments: Vec<T>,
    pub increasing: bool,
    /// Last two moments agree within `1e-10`.
    pub stabilized: bool,
}

/// `E[e^{-Z}]` at several truncation levels.
pub fn truncation_growth<T: Scalar>(
    coeffs: &[(usize, T)],
    truncations: &[usize],
) -> Result<TruncationGrowth<T>> {
    let moments = truncations
        .iter()
        .map(|&n| portfolio_moment(&GapMarket::new(n)?, coeffs))
        .collect::<Result<Vec<T>>>()?;
    let increasing = moments.windows(2).all(|w| w[1] > w[0]);
    let stabilized = moments.len() >= 2 && {
        let k = moments.len();
        (moments[k - 1] - moments[k - 2]).abs() <= lit(1e-10)
    };
    Ok(TruncationGrowth {
        truncations: truncations.to_vec(),
        moments,
        increasing,
        stabilized,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCertificate<T> {
    /// `-E[e^{-X}]`.
    pub u_over_c: T,
    /// `-E[e^{-2X}]`, or the corner value at `order X` for a split state `0`.
    pub u_over_bipolar: T,
    pub margin: T,
    pub strict_gap: bool,
    /// Maximizer of `-E[e^{-lambda X}]` over all `lambda`.
    pub lambda_bipolar: T,
    /// Maximizer over `|lambda| <= 1`.
    pub lambda_c: T,
    /// Best `-E[e^{-Z}]` over the sampled strategies with `|xi_N| <= 0.999`.
    pub sampled_best: T,
    pub sampled_strategies: usize,
    /// No sampled strategy beats `u_over_c` by more than `1e-9`.
    pub sampled_ok: bool,
    /// `E[e^{-lambda X}] - (e^{-5} e^lambda + e^{-1} e^{-lambda})`, the mass at `X = 0`.
    pub constant_mass: T,
    pub entropy_full: T,
    pub corner_value: T,
}

/// Strict utility gap between the cone and its economic closure, with a randomized check of the
/// cone-side bound at the market's own truncation.
pub fn gap_certificate<T: Scalar>(
    m: &GapMarket<T>,
    samples: usize,
    seed: u64,
) -> Result<GapCertificate<T>> {
    let f = |l: T| m.exponential_moment(l).to_float();
    let u_over_c = -f(T::one());
    let hi = m.split_zero.map(|s| s.order).unwrap_or(lit(10.0));
    let lambda_bipolar = moment_minimizer(m, lit(-10.0), hi);
    let u_over_bipolar = -f(lambda_bipolar);
    let lambda_c = moment_minimizer(m, -T::one(), T::one());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_best = T::neg_infinity();
    for _ in 0..samples {
        let terms = rng.gen_range(1..=4usize).min(m.truncation);
        let mut ks: Vec<usize> = Vec::with_capacity(terms);
        while ks.len() < terms {
            let k = rng.gen_range(1..=m.truncation);
            if !ks.contains(&k) {
                ks.push(k);
            }
        }
        ks.sort_unstable();
        let mut xi: Vec<f64> = (0..terms).map(|_| rng.gen_range(-3.0..3.0)).collect();
        xi[terms - 1] = rng.gen_range(-0.999..=0.999);
        let coeffs: Vec<(usize, T)> = (0..terms)
            .map(|i| {
                (
                    ks[i],
                    lit::<T>(xi[i] - if i == 0 { 0.0 } else { xi[i - 1] }),
                )
            })
            .collect();
        let v = -portfolio_moment(m, &coeffs)?;
        sampled_best = sampled_best.max(v);
    }
    let c = completions(m);
    let margin = u_over_bipolar - u_over_c;
    Ok(GapCertificate {
        u_over_c,
        u_over_bipolar,
        margin,
        strict_gap: margin > T::zero(),
        lambda_bipolar,
        lambda_c,
        sampled_best,
        sampled_strategies: samples,
        sampled_ok: samples == 0 || sampled_best <= u_over_c + lit(1e-9),
        constant_mass: T::one() - e::<T>(-5.0) - e::<T>(-1.0),
        entropy_full: c.entropy_full,
        corner_value: c.corner_value,
    })
}

/// `Y_k` on the untruncated space as a series variable for the Orlicz routines. Tail bounds are
/// available for the exponential and power Young functions.
pub fn shock_variable<T: Scalar>(k: usize) -> SeriesRandomVariable<T> {
    let k0 = k.max(2);
    let term = Arc::new(move |i: usize| {
        let n = k0 + i / 2;
        let x: T = T::count(n);
        let p = (-x).exp();
        (if i.is_multiple_of(2) { x } else { -x }, p)
    });
    let tail = Arc::new(move |phi: &Young<T>, m: usize, s: T| -> TailBound<T> {
        // atoms from index m cover |n| >= n0, each sign at most once more
        let n0 = T::count(k0 + m / 2);
        match phi {
            Young::Exponential => {
                let d = T::one() - s.abs();
                if !(d > T::zero()) {
                    return TailBound::Divergent;
                }
                TailBound::Bound(lit::<T>(2.0) * (-d * n0).exp() / -(-d).exp_m1())
            }
            Young::Power { p, scale } => {
                let r = (T::one() + T::one() / n0).powf(*p) * (-T::one()).exp();
                if !(r < T::one()) {
                    return TailBound::Bound(T::infinity());
                }
                TailBound::Bound(
                    lit::<T>(2.0) * *scale * s.abs().powf(*p) * n0.powf(*p) * (-n0).exp()
                        / (T::one() - r),
                )
            }
            _ => TailBound::Unavailable,
        }
    });
    SeriesRandomVariable::new(term, tail)
}

/// `E[e^{s |Y_k|} - 1] = 2 sum_{n >= k} (e^{-(1 - s) n} - e^{-n})` for `0 <= s < 1`.
pub fn shock_modular_closed_form<T: Scalar>(k: usize, s: T) -> ExtReal<T> {
    let s = s.abs();
    if s >= T::one() {
        return ExtReal::PosInf;
    }
    let k = T::count(k.max(2));
    let geo = |d: T| (-d * k).exp() / -(-d).exp_m1();
    ExtReal::Finite(lit::<T>(2.0) * (geo(T::one() - s) - geo(T::one())))
}
