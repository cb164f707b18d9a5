//! Concave utilities, their concave conjugates and the induced Young functions.
//!
//! Every family is stored in raw form. `normalize` shifts evaluation so that `U(0) = 0`;
//! `u_hat` and `v_hat` are always built from the normalized utility.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::optimize::brent_root;
use crate::scalar::{lit, Scalar};

pub type RealFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum Family<T> {
    /// `U(x) = -e^{-rate x} / rate`
    Exponential {
        rate: T,
    },
    /// `U(x) = ln(shift + x)`
    Log {
        shift: T,
    },
    /// `U(x) = (1 + x)^p / p` for `p < 1`, `p != 0`
    Power {
        exponent: T,
    },
    /// `U(x) = x - x^2 / 2`; not monotone beyond `x = 1`.
    Quadratic,
    /// `U(x) = -(bliss - x)^2 / 2` up to `bliss`, constant afterwards.
    TruncatedQuadratic {
        bliss: T,
    },
    /// Continuous piecewise linear with `U(0) = 0`; `slopes` strictly decreasing and
    /// nonnegative, one more slope than kinks.
    PiecewiseLinear {
        slopes: Vec<T>,
        kinks: Vec<T>,
    },
    Custom {
        u: RealFn<T>,
        du: RealFn<T>,
    },
}

impl<T: fmt::Display + fmt::Debug> fmt::Debug for Family<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Exponential { rate } => write!(f, "Exponential {{ rate: {rate} }}"),
            Family::Log { shift } => write!(f, "Log {{ shift: {shift} }}"),
            Family::Power { exponent } => write!(f, "Power {{ exponent: {exponent} }}"),
            Family::Quadratic => write!(f, "Quadratic"),
            Family::TruncatedQuadratic { bliss } => {
                write!(f, "TruncatedQuadratic {{ bliss: {bliss} }}")
            }
            Family::PiecewiseLinear { slopes, kinks } => {
                write!(
                    f,
                    "PiecewiseLinear {{ slopes: {slopes:?}, kinks: {kinks:?} }}"
                )
            }
            Family::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// Left-tail classification of a utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Finite slope as `x -> -inf`.
    #[serde(rename = "L_F")]
    LinearFinite,
    /// Superlinear left tail on the whole line.
    #[serde(rename = "SL_F")]
    SuperlinearFinite,
    /// Domain bounded below.
    #[serde(rename = "SL_INF")]
    SuperlinearInfinite,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::LinearFinite => "L_F",
            Case::SuperlinearFinite => "SL_F",
            Case::SuperlinearInfinite => "SL_INF",
        })
    }
}

/// Search settings for numerically conjugated custom utilities.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateBracket<T> {
    /// Gap kept from a finite lower domain bound.
    pub lower_gap: T,
    /// Lower end used when the domain is unbounded below.
    pub lower: T,
    pub upper: T,
    pub tol: T,
}

impl<T: Scalar> Default for ConjugateBracket<T> {
    fn default() -> Self {
        Self {
            lower_gap: lit(1e-9),
            lower: lit(-1e6),
            upper: lit(1e6),
            tol: lit(1e-10),
        }
    }
}

#[derive(Debug, Clone)]
pub struct UtilitySpec<T: Scalar> {
    pub family: Family<T>,
    pub x_lower: ExtReal<T>,
    pub x_bliss: ExtReal<T>,
    /// `U(0)` of the raw family.
    pub u_at_zero: T,
    /// Right derivative `U'_+(0)`.
    pub a: T,
    pub normalized: bool,
    pub bracket: ConjugateBracket<T>,
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg.to_string()))
    }
}

impl<T: Scalar> UtilitySpec<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        check(
            rate > T::zero() && rate.is_finite(),
            "exponential rate must be positive",
        )?;
        Self::build(Family::Exponential { rate })
    }

    pub fn log(shift: T) -> Result<Self> {
        check(
            shift >= T::zero() && shift.is_finite(),
            "log shift must be nonnegative",
        )?;
        Self::build(Family::Log { shift })
    }

    pub fn power(exponent: T) -> Result<Self> {
        check(
            exponent < T::one() && exponent != T::zero() && exponent.is_finite(),
            "power exponent must be below 1 and nonzero",
        )?;
        Self::build(Family::Power { exponent })
    }

    pub fn quadratic() -> Self {
        Self::build(Family::Quadratic).expect("quadratic is always valid")
    }

    pub fn truncated_quadratic(bliss: T) -> Result<Self> {
        check(bliss.is_finite(), "bliss point must be finite")?;
        Self::build(Family::TruncatedQuadratic { bliss })
    }

    pub fn piecewise_linear(slopes: Vec<T>, kinks: Vec<T>) -> Result<Self> {
        check(!slopes.is_empty(), "at least one slope required")?;
        check(
            slopes.len() == kinks.len() + 1,
            "need exactly one more slope than kinks",
        )?;
        check(
            slopes.iter().all(|s| s.is_finite() && *s >= T::zero()),
            "slopes must be nonnegative",
        )?;
        check(
            slopes.windows(2).all(|w| w[0] > w[1]),
            "slopes must be strictly decreasing",
        )?;
        check(kinks.iter().all(|k| k.is_finite()), "kinks must be finite")?;
        check(
            kinks.windows(2).all(|w| w[0] < w[1]),
            "kinks must be strictly increasing",
        )?;
        Self::build(Family::PiecewiseLinear { slopes, kinks })
    }

    /// `U(x) = x`.
    pub fn linear() -> Self {
        Self::piecewise_linear(vec![T::one()], vec![]).expect("valid")
    }

    /// Custom utility from `U`, its derivative and the lower domain bound.
    pub fn custom(u: RealFn<T>, du: RealFn<T>, x_lower: ExtReal<T>) -> Result<Self> {
        check(
            !matches!(x_lower, ExtReal::PosInf),
            "lower domain bound cannot be +inf",
        )?;
        let family = Family::Custom { u, du };
        let mut spec = Self {
            family,
            x_lower,
            x_bliss: ExtReal::PosInf,
            u_at_zero: T::nan(),
            a: T::nan(),
            normalized: false,
            bracket: ConjugateBracket::default(),
        };
        spec.x_bliss = spec.detect_bliss();
        spec.u_at_zero = spec.raw_u(T::zero());
        spec.a = spec.raw_du(T::zero());
        Ok(spec)
    }

    fn build(family: Family<T>) -> Result<Self> {
        use ExtReal::*;
        let (x_lower, x_bliss) = match &family {
            Family::Exponential { .. } | Family::Quadratic => (NegInf, PosInf),
            Family::Log { shift } => (Finite(-*shift), PosInf),
            Family::Power { .. } => (Finite(-T::one()), PosInf),
            Family::TruncatedQuadratic { bliss } => (NegInf, Finite(*bliss)),
            Family::PiecewiseLinear { slopes, kinks } => {
                let bliss = if slopes[0] == T::zero() {
                    NegInf
                } else if *slopes.last().expect("nonempty") == T::zero() {
                    Finite(*kinks.last().expect("a zero final slope follows a kink"))
                } else {
                    PosInf
                };
                (NegInf, bliss)
            }
            Family::Custom { .. } => unreachable!("custom specs go through UtilitySpec::custom"),
        };
        let mut spec = Self {
            family,
            x_lower,
            x_bliss,
            u_at_zero: T::zero(),
            a: T::zero(),
            normalized: false,
            bracket: ConjugateBracket::default(),
        };
        spec.u_at_zero = spec.raw_u(T::zero());
        spec.a = spec.raw_du(T::zero());
        Ok(spec)
    }

    /// Returns the spec evaluated with `U(0) = 0`.
    pub fn normalize(&self) -> Result<Self> {
        if self.x_lower >= self.x_bliss {
            return Err(Error::DegenerateUtility(self.x_lower.to_float().as_f64()));
        }
        let zero = ExtReal::Finite(T::zero());
        if !(self.x_lower < zero && zero < self.x_bliss) || !self.u_at_zero.is_finite() {
            return Err(Error::InvalidInput(format!(
                "0 must lie strictly between the domain bound {} and the bliss point {}",
                self.x_lower, self.x_bliss
            )));
        }
        let mut out = self.clone();
        out.normalized = true;
        Ok(out)
    }

    fn offset(&self) -> T {
        if self.normalized {
            self.u_at_zero
        } else {
            T::zero()
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.family, Family::Custom { .. })
    }

    /// False for kinked families, where derivative-based quantities use the right derivative.
    pub fn is_differentiable(&self) -> bool {
        !matches!(self.family, Family::PiecewiseLinear { .. })
    }

    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self.family, Family::PiecewiseLinear { .. })
    }

    /// False only for the plain quadratic, which turns down past its maximum.
    pub fn is_monotone(&self) -> bool {
        !matches!(self.family, Family::Quadratic)
    }

    /// Finite lower domain bound, if any.
    pub fn lower_bound(&self) -> Option<T> {
        self.x_lower.finite()
    }

    /// `U(x)`; `-inf` outside the domain.
    pub fn u(&self, x: T) -> T {
        self.raw_u(x) - self.offset()
    }

    /// `U(x)` without normalization.
    pub fn raw_u(&self, x: T) -> T {
        if let ExtReal::Finite(lo) = self.x_lower {
            if x < lo {
                return T::neg_infinity();
            }
        }
        let half: T = lit(0.5);
        match &self.family {
            Family::Exponential { rate } => -(-*rate * x).exp() / *rate,
            Family::Log { shift } => (*shift + x).ln(),
            Family::Power { exponent } => (T::one() + x).powf(*exponent) / *exponent,
            Family::Quadratic => x - half * x * x,
            Family::TruncatedQuadratic { bliss } => {
                if x <= *bliss {
                    -half * (*bliss - x).powi(2)
                } else {
                    T::zero()
                }
            }
            Family::PiecewiseLinear { slopes, kinks } => piecewise_value(slopes, kinks, x),
            Family::Custom { u, .. } => u(x),
        }
    }

    /// Right derivative `U'_+(x)`.
    pub fn du(&self, x: T) -> T {
        self.raw_du(x)
    }

    fn raw_du(&self, x: T) -> T {
        match &self.family {
            Family::Exponential { rate } => (-*rate * x).exp(),
            Family::Log { shift } => T::one() / (*shift + x),
            Family::Power { exponent } => (T::one() + x).powf(*exponent - T::one()),
            Family::Quadratic => T::one() - x,
            Family::TruncatedQuadratic { bliss } => (*bliss - x).max(T::zero()),
            Family::PiecewiseLinear { slopes, kinks } => {
                let i = kinks.iter().take_while(|&&k| k <= x).count();
                slopes[i]
            }
            Family::Custom { du, .. } => du(x),
        }
    }

    /// `U''(x)`; zero on linear pieces, finite-differenced for custom utilities.
    pub fn d2u(&self, x: T) -> T {
        match &self.family {
            Family::Exponential { rate } => -*rate * (-*rate * x).exp(),
            Family::Log { shift } => -T::one() / (*shift + x).powi(2),
            Family::Power { exponent } => {
                (*exponent - T::one()) * (T::one() + x).powf(*exponent - lit(2.0))
            }
            Family::Quadratic => -T::one(),
            Family::TruncatedQuadratic { bliss } => {
                if x < *bliss {
                    -T::one()
                } else {
                    T::zero()
                }
            }
            Family::PiecewiseLinear { .. } => T::zero(),
            Family::Custom { du, .. } => {
                let h = T::epsilon().cbrt() * x.abs().max(T::one());
                let (lo, hi) = match self.x_lower {
                    ExtReal::Finite(l) if x - h <= l => (x, x + h),
                    _ => (x - h, x + h),
                };
                (du(hi) - du(lo)) / (hi - lo)
            }
        }
    }

    /// `V(y) = sup_x {U(x) - x y}`; `+inf` where the supremum is infinite. Custom utilities
    /// return NaN when the numeric search fails; see [`UtilitySpec::try_v`].
    pub fn v(&self, y: T) -> T {
        self.try_v(y).unwrap_or(T::nan())
    }

    pub fn try_v(&self, y: T) -> Result<T> {
        Ok(self.raw_v(y)? - self.offset())
    }

    fn raw_v(&self, y: T) -> Result<T> {
        let inf = T::infinity();
        let half: T = lit(0.5);
        if y.is_nan() {
            return Err(Error::InvalidInput("NaN argument".into()));
        }
        Ok(match &self.family {
            Family::Exponential { rate } => {
                if y < T::zero() {
                    inf
                } else if y == T::zero() {
                    T::zero()
                } else {
                    (y * y.ln() - y) / *rate
                }
            }
            Family::Log { shift } => {
                if y <= T::zero() {
                    inf
                } else {
                    -y.ln() - T::one() + *shift * y
                }
            }
            Family::Power { exponent } => {
                let q = *exponent / (*exponent - T::one());
                if y < T::zero() || (y == T::zero() && q < T::zero()) {
                    inf
                } else if y == T::zero() {
                    T::zero()
                } else {
                    y - y.powf(q) / q
                }
            }
            Family::Quadratic => half * (T::one() - y).powi(2),
            Family::TruncatedQuadratic { bliss } => {
                if y < T::zero() {
                    inf
                } else {
                    half * y * y - *bliss * y
                }
            }
            Family::PiecewiseLinear { slopes, kinks } => {
                let (lo, hi) = (*slopes.last().expect("nonempty"), slopes[0]);
                if y < lo || y > hi {
                    inf
                } else {
                    kinks
                        .iter()
                        .map(|&k| piecewise_value(slopes, kinks, k) - k * y)
                        .fold(T::zero(), T::max)
                }
            }
            Family::Custom { u, .. } => {
                let x = self.custom_argmax(y)?;
                u(x) - x * y
            }
        })
    }

    /// `V'(y)`, equal to minus the maximizer in the conjugate.
    pub fn dv(&self, y: T) -> T {
        match &self.family {
            Family::Exponential { rate } => y.ln() / *rate,
            Family::Log { shift } => *shift - T::one() / y,
            Family::Power { exponent } => {
                let q = *exponent / (*exponent - T::one());
                T::one() - y.powf(q - T::one())
            }
            Family::Quadratic => y - T::one(),
            Family::TruncatedQuadratic { bliss } => y - *bliss,
            Family::PiecewiseLinear { slopes, kinks } => {
                // right derivative: minus the largest maximizing point
                let i = slopes.iter().take_while(|&&s| s > y).count();
                if i == 0 {
                    T::neg_infinity()
                } else {
                    -kinks.get(i - 1).copied().unwrap_or(T::infinity())
                }
            }
            Family::Custom { .. } => self.custom_argmax(y).map(|x| -x).unwrap_or(T::nan()),
        }
    }

    /// `V''(y)`.
    pub fn d2v(&self, y: T) -> T {
        match &self.family {
            Family::Exponential { rate } => T::one() / (*rate * y),
            Family::Log { .. } => T::one() / (y * y),
            Family::Power { exponent } => {
                let q = *exponent / (*exponent - T::one());
                -(q - T::one()) * y.powf(q - lit(2.0))
            }
            Family::Quadratic | Family::TruncatedQuadratic { .. } => T::one(),
            Family::PiecewiseLinear { .. } => T::zero(),
            Family::Custom { .. } => match self.custom_argmax(y) {
                Ok(x) => {
                    let c = self.d2u(x);
                    if c < T::zero() {
                        -T::one() / c
                    } else {
                        T::infinity()
                    }
                }
                Err(_) => T::nan(),
            },
        }
    }

    /// Maximizer of `U(x) - x y` for a custom utility: the root of `U'(x) = y`.
    fn custom_argmax(&self, y: T) -> Result<T> {
        let Family::Custom { u, du } = &self.family else {
            unreachable!("only called for custom utilities")
        };
        let b = self.bracket;
        let lo = match self.x_lower {
            ExtReal::Finite(l) => l + b.lower_gap,
            _ => b.lower,
        };
        let g = |x: T| du(x) - y;
        if !(g(lo) >= T::zero()) {
            // U'(lo) < y: the maximizer is pinned at the lower end
            if let ExtReal::Finite(l) = self.x_lower {
                if u(l).is_finite() {
                    return Ok(l);
                }
            }
            return Err(Error::BracketTooSmall {
                y: y.as_f64(),
                boundary: lo.as_f64(),
            });
        }
        let mut hi = b.upper;
        let mut expansions = 0;
        while g(hi) > T::zero() {
            if expansions == 6 {
                if y == T::zero() && du(hi) <= lit(1e-12) {
                    return Ok(hi);
                }
                return Err(Error::BracketTooSmall {
                    y: y.as_f64(),
                    boundary: hi.as_f64(),
                });
            }
            hi = hi * lit(10.0);
            expansions += 1;
        }
        if g(hi) == T::zero() && y == T::zero() {
            // flat beyond the bliss point: take the smallest maximizer
            return Ok(self.x_bliss.finite().unwrap_or(hi));
        }
        brent_root(g, lo, hi, b.tol)
    }

    /// Approximate bliss point of a custom utility: first point where `U'` vanishes to 1e-12.
    fn detect_bliss(&self) -> ExtReal<T> {
        let Family::Custom { du, .. } = &self.family else {
            return self.x_bliss;
        };
        let flat = |x: T| du(x) <= lit(1e-12);
        let upper: T = lit(1e6);
        if !flat(upper) {
            return ExtReal::PosInf;
        }
        let mut lo = match self.x_lower {
            ExtReal::Finite(l) => l + lit(1e-9),
            _ => lit(-1e6),
        };
        if flat(lo) {
            return ExtReal::Finite(lo);
        }
        let mut hi = upper;
        for _ in 0..200 {
            let mid = (lo + hi) / lit(2.0);
            if flat(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= lit::<T>(1e-12) * hi.abs().max(T::one()) {
                break;
            }
        }
        ExtReal::Finite(hi)
    }

    /// Tail classification.
    pub fn classify_case(&self) -> Case {
        if self.x_lower.is_finite() {
            return Case::SuperlinearInfinite;
        }
        match &self.family {
            Family::PiecewiseLinear { .. } => Case::LinearFinite,
            Family::Custom { .. } => {
                // constant slope far to the left means a linear tail
                let s1 = self.du(lit(-100.0));
                let s2 = self.du(lit(-1000.0));
                if s2 <= s1 * lit(1.0 + 1e-6) {
                    Case::LinearFinite
                } else {
                    Case::SuperlinearFinite
                }
            }
            _ => Case::SuperlinearFinite,
        }
    }

    /// Young function `U_hat(x) = -U_0(-|x|)` of the normalized utility.
    pub fn u_hat(&self, x: T) -> T {
        -(self.raw_u(-x.abs()) - self.u_at_zero)
    }

    /// Conjugate Young function `V_hat(y) = V_0(|y| max a)` of the normalized utility.
    pub fn v_hat(&self, y: T) -> T {
        self.raw_v(y.abs().max(self.a))
            .map(|v| v - self.u_at_zero)
            .unwrap_or(T::nan())
    }

    /// Fenchel gap `V(y) + x y - U(x) >= 0`.
    pub fn fenchel_gap(&self, x: T, y: T) -> T {
        self.v(y) + x * y - self.u(x)
    }

    pub fn conjugate(&self) -> Result<ConjugatePair<T>> {
        ConjugatePair::new(self.clone())
    }

    /// Short command-line form: `exp[:rate]`, `log[:shift]`, `power:p`, `quadratic`,
    /// `truncquad:bliss`, `linear`.
    pub fn from_shorthand(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> Result<T> {
            match (arg, default) {
                (Some(a), _) => a
                    .parse::<f64>()
                    .map(lit)
                    .map_err(|_| Error::InvalidInput(format!("bad utility parameter `{a}`"))),
                (None, Some(d)) => Ok(lit(d)),
                (None, None) => Err(Error::InvalidInput(format!(
                    "utility `{name}` needs a parameter"
                ))),
            }
        };
        match name {
            "exp" | "exponential" => Self::exponential(num(Some(1.0))?),
            "log" => Self::log(num(Some(1.0))?),
            "power" => Self::power(num(None)?),
            "quadratic" => Ok(Self::quadratic()),
            "truncquad" | "truncated_quadratic" => Self::truncated_quadratic(num(Some(1.0))?),
            "linear" => Ok(Self::linear()),
            _ => Err(Error::InvalidInput(format!("unknown utility `{s}`"))),
        }
    }

    /// JSON form `{"family": ..., "params": {...}, "normalized": bool}`.
    pub fn to_json(&self) -> Result<Value> {
        let f = |x: T| json!(x.as_f64());
        let (family, params) = match &self.family {
            Family::Exponential { rate } => ("exponential", json!({ "rate": f(*rate) })),
            Family::Log { shift } => ("log", json!({ "shift": f(*shift) })),
            Family::Power { exponent } => ("power", json!({ "exponent": f(*exponent) })),
            Family::Quadratic => ("quadratic", json!({})),
            Family::TruncatedQuadratic { bliss } => {
                ("truncated_quadratic", json!({ "bliss": f(*bliss) }))
            }
            Family::PiecewiseLinear { slopes, kinks } => (
                "piecewise_linear",
                json!({
                    "slopes": slopes.iter().map(|s| s.as_f64()).collect::<Vec<_>>(),
                    "kinks": kinks.iter().map(|s| s.as_f64()).collect::<Vec<_>>(),
                }),
            ),
            Family::Custom { .. } => {
                return Err(Error::Unsupported(
                    "custom utilities have no JSON form".into(),
                ))
            }
        };
        Ok(json!({ "family": family, "params": params, "normalized": self.normalized }))
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidInput("utility must be a JSON object".into()))?;
        let family = obj
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidInput("field `family` must be a string".into()))?;
        let empty = Map::new();
        let params = match obj.get("params") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => {
                return Err(Error::InvalidInput(
                    "field `params` must be an object".into(),
                ))
            }
        };
        let scalar = |key: &str| -> Result<T> {
            params
                .get(key)
                .and_then(Value::as_f64)
                .map(lit)
                .ok_or_else(|| Error::InvalidInput(format!("params.{key} must be a number")))
        };
        let list = |key: &str| -> Result<Vec<T>> {
            params
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::InvalidInput(format!("params.{key} must be an array")))?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_f64().map(lit).ok_or_else(|| {
                        Error::InvalidInput(format!("params.{key}[{i}] must be a number"))
                    })
                })
                .collect()
        };
        let spec = match family {
            "exponential" => Self::exponential(scalar("rate")?)?,
            "log" => Self::log(scalar("shift")?)?,
            "power" => Self::power(scalar("exponent")?)?,
            "quadratic" => Self::quadratic(),
            "truncated_quadratic" => Self::truncated_quadratic(scalar("bliss")?)?,
            "piecewise_linear" => Self::piecewise_linear(list("slopes")?, list("kinks")?)?,
            "custom" => {
                return Err(Error::Unsupported(
                    "custom utilities cannot be read from JSON".into(),
                ))
            }
            other => return Err(Error::InvalidInput(format!("unknown family `{other}`"))),
        };
        match obj.get("normalized") {
            None | Some(Value::Bool(false)) => Ok(spec),
            Some(Value::Bool(true)) => spec.normalize(),
            Some(_) => Err(Error::InvalidInput(
                "field `normalized` must be a boolean".into(),
            )),
        }
    }
}

fn piecewise_value<T: Scalar>(slopes: &[T], kinks: &[T], x: T) -> T {
    // integrate the slope function from 0 to x
    let mut breaks: Vec<T> = Vec::with_capacity(kinks.len() + 2);
    breaks.push(T::neg_infinity());
    breaks.extend_from_slice(kinks);
    breaks.push(T::infinity());
    let (lo, hi, sign) = if x >= T::zero() {
        (T::zero(), x, T::one())
    } else {
        (x, T::zero(), -T::one())
    };
    let mut total = T::zero();
    for (i, &s) in slopes.iter().enumerate() {
        let a = breaks[i].max(lo);
        let b = breaks[i + 1].min(hi);
        if b > a {
            total = total + s * (b - a);
        }
    }
    sign * total
}

/// Conjugate data attached to a utility.
#[derive(Debug, Clone)]
pub struct ConjugatePair<T: Scalar> {
    pub spec: UtilitySpec<T>,
    pub case_tag: Case,
}

impl<T: Scalar> ConjugatePair<T> {
    pub fn new(spec: UtilitySpec<T>) -> Result<Self> {
        if spec.is_custom() {
            // surface bracket problems up front
            spec.try_v(spec.a)?;
        }
        let case_tag = spec.classify_case();
        Ok(Self { spec, case_tag })
    }

    pub fn v(&self, y: T) -> T {
        self.spec.v(y)
    }

    pub fn u_hat(&self, x: T) -> T {
        self.spec.u_hat(x)
    }

    pub fn v_hat(&self, y: T) -> T {
        self.spec.v_hat(y)
    }
}

/// Serde adapter so specs embed directly in other JSON documents.
impl<T: Scalar> Serialize for UtilitySpec<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json()
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for UtilitySpec<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Self::from_json(&v).map_err(serde::de::Error::custom)
    }
}
