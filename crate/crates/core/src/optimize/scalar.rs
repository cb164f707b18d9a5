use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Result of a one-dimensional minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMin<T> {
    pub x: T,
    pub fx: T,
    pub iterations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[a, b]`, stopping once the
/// bracket is shorter than `tol`.
pub fn golden_section<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> ScalarMin<T> {
    let inv_phi: T = lit(0.618_033_988_749_894_8);
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while hi - lo > tol && iterations < 500 {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    // the endpoints are never evaluated by the interior probes
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [lo, hi, a, b] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    ScalarMin {
        x: best.0,
        fx: best.1,
        iterations,
    }
}

/// Brent's minimizer (golden section with parabolic interpolation) on `[a, b]`.
pub fn brent_min<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> ScalarMin<T> {
    let cgold: T = lit(0.381_966_011_250_105_1);
    let eps = T::epsilon().sqrt();
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut x = a + cgold * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (T::zero(), T::zero());
    let two: T = lit(2.0);
    let half: T = lit(0.5);
    let mut iterations = 0;
    for _ in 0..1000 {
        iterations += 1;
        let m = half * (a + b);
        let tol1 = eps * x.abs() + tol / lit(3.0);
        let tol2 = two * tol1;
        if (x - m).abs() <= tol2 - half * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (half * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = cgold * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    ScalarMin { x, fx, iterations }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect_root<T: Scalar, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    tol: T,
    max_iter: usize,
) -> Result<T> {
    let (mut lo, mut hi) = (a, b);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "no sign change on [{}, {}]",
            a.as_f64(),
            b.as_f64()
        )));
    }
    for _ in 0..max_iter {
        let mid = (lo + hi) / lit(2.0);
        if (hi - lo).abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / lit(2.0))
}

/// Brent's root finder (bisection, secant and inverse quadratic interpolation).
pub fn brent_root<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Result<T> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if (fa > T::zero()) == (fb > T::zero()) && fa != T::zero() && fb != T::zero() {
        return Err(Error::InvalidInput(format!(
            "no sign change on [{}, {}]",
            a.as_f64(),
            b.as_f64()
        )));
    }
    let two: T = lit(2.0);
    let (mut c, mut fc) = (a, fa);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..300 {
        if (fb > T::zero()) == (fc > T::zero()) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = two * T::epsilon() * b.abs() + tol / two;
        let xm = (c - b) / two;
        if xm.abs() <= tol1 || fb == T::zero() {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * xm * s;
                q = T::one() - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (two * xm * qq * (qq - r) - (b - a) * (r - T::one()));
                q = (qq - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            }
            p = p.abs();
            let min1 = lit::<T>(3.0) * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if two * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b = if d.abs() > tol1 {
            b + d
        } else if xm > T::zero() {
            b + tol1
        } else {
            b - tol1
        };
        fb = f(b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_and_brent_find_quadratic_minimum() {
        let f = |x: f64| (x - 0.3).powi(2) + 1.0;
        // the offset flattens f below sqrt(eps), so location is only good to ~1e-8
        let g = golden_section(f, -2.0, 3.0, 1e-10);
        assert!((g.x - 0.3).abs() < 1e-7);
        let g = golden_section(|x: f64| (x - 0.3).powi(2), -2.0, 3.0, 1e-10);
        assert!((g.x - 0.3).abs() < 1e-9);
        let b = brent_min(f, -2.0, 3.0, 1e-12);
        assert!((b.x - 0.3).abs() < 1e-7);
        assert!((b.fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_section_reports_boundary_minimum() {
        let g = golden_section(|x: f64| x, -1.0, 2.0, 1e-12);
        assert_eq!(g.x, -1.0);
    }

    #[test]
    fn root_finders_agree() {
        let f = |x: f64| x.exp() - 2.0;
        let r1 = bisect_root(f, 0.0, 2.0, 1e-14, 200).unwrap();
        let r2 = brent_root(f, 0.0, 2.0, 1e-14).unwrap();
        assert!((r1 - std::f64::consts::LN_2).abs() < 1e-13);
        assert!((r2 - std::f64::consts::LN_2).abs() < 1e-13);
        assert!(bisect_root(f, 1.0, 2.0, 1e-12, 10).is_err());
    }

    #[test]
    fn works_in_f32() {
        let m = golden_section(|x: f32| (x - 1.5) * (x - 1.5), 0.0, 4.0, 1e-5);
        assert!((m.x - 1.5).abs() < 1e-3);
    }
}
