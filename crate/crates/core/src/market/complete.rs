use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimize::brent_min;
use crate::scalar::{lit, Scalar};
use crate::utility::{Family, UtilitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompleteValue<T> {
    /// `min_{lambda > 0} E[V(lambda q)]`.
    pub value: T,
    pub lambda: T,
    /// Entropy formula `-E[q] exp(-E[q ln q] / E[q]) / rate` for exponential utilities.
    pub closed_form: Option<T>,
}

/// Value of the complete market priced by the density `q`.
pub fn complete_market_value<T: Scalar>(
    probs: &[T],
    q: &[T],
    u: &UtilitySpec<T>,
) -> Result<CompleteValue<T>> {
    if probs.len() != q.len() || q.iter().any(|v| !(*v >= T::zero() && v.is_finite())) {
        return Err(Error::InvalidInput(
            "density must be finite, nonnegative and match probs".into(),
        ));
    }
    let mass = crate::scalar::expectation(probs, q);
    if !(mass > T::zero()) {
        return Err(Error::InvalidInput("density has zero mass".into()));
    }
    let phi = |lam: T| -> T {
        let mut total = T::zero();
        for (&p, &z) in probs.iter().zip(q) {
            if p > T::zero() {
                total = total + p * u.v(lam * z);
            }
        }
        if total.is_nan() {
            T::infinity()
        } else {
            total
        }
    };
    let f = |t: T| phi(t.exp());
    // coarse scan of log lambda
    let ts: Vec<T> = (0..=160)
        .map(|i| lit::<T>(-40.0) + lit::<T>(0.5) * T::count(i))
        .collect();
    let vals: Vec<T> = ts.iter().map(|&t| f(t)).collect();
    let best = (0..ts.len())
        .filter(|&i| vals[i].is_finite())
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite"));
    let Some(i) = best else {
        return Err(Error::NotBlissFree);
    };
    if i == 0 {
        // the infimum is approached as lambda -> 0, where it equals U(inf)
        return Err(Error::NotBlissFree);
    }
    if i == ts.len() - 1 {
        return Err(Error::NoConvergence(
            "complete-market minimizer beyond lambda = e^40".into(),
        ));
    }
    let m = brent_min(f, ts[i - 1], ts[i + 1], lit(1e-12));
    let mut lam = m.x.exp();
    let mut value = m.fx;
    // Newton polish in lambda
    if u.is_differentiable() {
        for _ in 0..20 {
            let (mut d1, mut d2) = (T::zero(), T::zero());
            for (&p, &z) in probs.iter().zip(q) {
                if p > T::zero() && z > T::zero() {
                    d1 = d1 + p * z * u.dv(lam * z);
                    d2 = d2 + p * z * z * u.d2v(lam * z);
                }
            }
            if !(d2 > T::zero()) || !d1.is_finite() {
                break;
            }
            let next = lam - d1 / d2;
            if !(next > T::zero()) {
                break;
            }
            let fv = phi(next);
            if !(fv <= value + T::epsilon() * value.abs() * lit(4.0)) {
                break;
            }
            let done = (next - lam).abs() <= lit::<T>(1e-15) * lam;
            lam = next;
            value = fv;
            if done {
                break;
            }
        }
    }
    let closed_form = match u.family {
        Family::Exponential { rate } => {
            let zlnz: T = probs
                .iter()
                .zip(q)
                .filter(|(_, &z)| z > T::zero())
                .map(|(&p, &z)| p * z * z.ln())
                .sum();
            let offset = if u.normalized { u.u_at_zero } else { T::zero() };
            Some(-mass * (-zlnz / mass).exp() / rate - offset)
        }
        _ => None,
    };
    Ok(CompleteValue {
        value,
        lambda: lam,
        closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_entropy_value() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        let p = [2.0 / 3.0, 1.0 / 3.0];
        let q = [0.75, 1.5];
        let c = complete_market_value(&p, &q, &u).unwrap();
        let target = -2.0 * 2f64.sqrt() / 3.0;
        assert!((c.value - target).abs() < 1e-12);
        assert!((c.closed_form.unwrap() - target).abs() < 1e-12);
        assert!(-(-(0.5 * (9.0f64 / 8.0).ln())).exp() - target < 1e-15);
    }

    #[test]
    fn q_equal_p() {
        let u = UtilitySpec::<f64>::exponential(1.0).unwrap();
        let c = complete_market_value(&[0.3, 0.7], &[1.0, 1.0], &u).unwrap();
        assert!((c.lambda - 1.0).abs() < 1e-10);
        assert!((c.value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalized_and_other_families() {
        let u = UtilitySpec::<f64>::exponential(2.0)
            .unwrap()
            .normalize()
            .unwrap();
        let c = complete_market_value(&[0.4, 0.6], &[1.2, 0.8667], &u).unwrap();
        assert!((c.value - c.closed_form.unwrap()).abs() < 1e-12);
        let tq = UtilitySpec::<f64>::truncated_quadratic(1.0).unwrap();
        // E[V(lambda q)] = lambda^2 E[q^2]/2 - lambda E[q], minimized at E[q]/E[q^2]
        let c = complete_market_value(&[0.5, 0.5], &[0.5, 1.5], &tq).unwrap();
        assert!((c.lambda - 1.0 / 1.25).abs() < 1e-9);
        assert!((c.value + 0.5 / 1.25).abs() < 1e-12);
    }

    #[test]
    fn bliss_reached() {
        // V = 0 on [0, 1] for a linear utility, so any density is priced at U(inf) only through
        // lambda q = 1; a non-constant density makes every lambda infinite
        let lin = UtilitySpec::<f64>::linear();
        assert!(matches!(
            complete_market_value(&[0.5, 0.5], &[0.5, 1.5], &lin),
            Err(Error::NotBlissFree)
        ));
    }
}
