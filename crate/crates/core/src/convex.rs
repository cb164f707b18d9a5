//! Brute-force convex analysis on one-dimensional grids: conjugates, closed hulls and
//! infimal convolution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Shape {
    Convex,
    Concave,
}

/// Extended-real valued function sampled on a strictly increasing grid.
///
/// Convexity is not enforced at construction, so hulls of arbitrary samples can be taken;
/// [`GridFunction::is_consistent`] checks it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction<T> {
    pub grid: Vec<T>,
    pub values: Vec<ExtReal<T>>,
    pub shape: Shape,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(grid: Vec<T>, values: Vec<ExtReal<T>>, shape: Shape) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(
                "grid and values differ in length".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(
                "grid must be strictly increasing".into(),
            ));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::InvalidInput("need at least one finite value".into()));
        }
        Ok(Self {
            grid,
            values,
            shape,
        })
    }

    pub fn from_fn<F: Fn(T) -> ExtReal<T>>(grid: Vec<T>, f: F, shape: Shape) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values, shape)
    }

    /// Grid function of a finite-valued closure.
    pub fn sample<F: Fn(T) -> T>(grid: Vec<T>, f: F, shape: Shape) -> Result<Self> {
        Self::from_fn(grid, |x| ExtReal::from(f(x)), shape)
    }

    /// The `+inf` (convex) or `-inf` (concave) value outside the domain.
    fn outside(&self) -> ExtReal<T> {
        match self.shape {
            Shape::Convex => ExtReal::PosInf,
            Shape::Concave => ExtReal::NegInf,
        }
    }

    fn sign(&self) -> T {
        match self.shape {
            Shape::Convex => T::one(),
            Shape::Concave => -T::one(),
        }
    }

    /// Finite points `(x, f(x))`.
    pub fn finite_points(&self) -> Vec<(T, T)> {
        self.grid
            .iter()
            .zip(&self.values)
            .filter_map(|(&x, v)| v.finite().map(|f| (x, f)))
            .collect()
    }

    /// Value at an exact grid point.
    pub fn at(&self, x: T) -> Option<ExtReal<T>> {
        self.grid
            .iter()
            .position(|&g| g == x)
            .map(|i| self.values[i])
    }

    /// Value at the grid point within `tol` of `x`.
    pub fn at_near(&self, x: T, tol: T) -> Option<ExtReal<T>> {
        self.grid
            .iter()
            .position(|&g| (g - x).abs() <= tol)
            .map(|i| self.values[i])
    }

    /// Second-difference check of the finite values against the declared shape.
    pub fn is_consistent(&self, tol: T) -> bool {
        let s = self.sign();
        self.finite_points().windows(3).all(|w| {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            s * (s2 - s1) >= -tol * (T::one() + s1.abs().max(s2.abs()))
        })
    }

    fn check_proper(&self) -> Result<()> {
        let bad = self.outside().neg();
        if self.values.contains(&bad) || self.finite_points().is_empty() {
            return Err(Error::ImproperFunction);
        }
        Ok(())
    }

    /// Conjugate on `dual_grid`: `sup_x {x y - f(x)}` for convex input, `inf_x` for concave.
    pub fn conjugate(&self, dual_grid: &[T]) -> Result<GridFunction<T>> {
        self.check_proper()?;
        let pts = self.finite_points();
        let s = self.sign();
        let values = dual_grid
            .iter()
            .map(|&y| {
                let best = pts
                    .iter()
                    .map(|&(x, f)| s * (x * y - f))
                    .fold(T::neg_infinity(), T::max);
                ExtReal::Finite(s * best)
            })
            .collect();
        if dual_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(
                "dual grid must be strictly increasing".into(),
            ));
        }
        Ok(GridFunction {
            grid: dual_grid.to_vec(),
            values,
            shape: self.shape,
        })
    }

    /// Slopes used as the dual grid for biconjugation: consecutive secants of the finite
    /// points together with `extra` uniformly spaced slopes covering their range.
    pub fn secant_dual_grid(&self, extra: usize) -> Vec<T> {
        let pts = self.finite_points();
        let mut slopes: Vec<T> = pts
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let lo = slopes.iter().copied().fold(T::infinity(), T::min);
        let hi = slopes.iter().copied().fold(T::neg_infinity(), T::max);
        if extra >= 2 && hi > lo {
            for i in 0..extra {
                slopes.push(lo + (hi - lo) * T::count(i) / T::count(extra - 1));
            }
        }
        slopes.sort_by(|a, b| a.partial_cmp(b).expect("finite slopes"));
        slopes.dedup();
        slopes
    }

    /// `f**` on the original grid, `+-inf` outside the hull of the finite domain.
    pub fn biconjugate(&self) -> Result<GridFunction<T>> {
        let dual = self.secant_dual_grid(self.grid.len());
        let star = self.conjugate(&dual)?;
        let pts = star.finite_points();
        let s = self.sign();
        let fin = self.finite_points();
        let (lo, hi) = (fin[0].0, fin[fin.len() - 1].0);
        let values = self
            .grid
            .iter()
            .map(|&x| {
                if x < lo || x > hi {
                    return self.outside();
                }
                let best = pts
                    .iter()
                    .map(|&(y, g)| s * (x * y - g))
                    .fold(T::neg_infinity(), T::max);
                ExtReal::Finite(s * best)
            })
            .collect();
        Ok(GridFunction {
            grid: self.grid.clone(),
            values,
            shape: self.shape,
        })
    }

    /// Max `|f** - f|` over interior grid points where `f` is finite.
    pub fn biconjugate_deviation(&self) -> Result<T> {
        let bi = self.biconjugate()?;
        let n = self.grid.len();
        let mut dev = T::zero();
        for i in 1..n.saturating_sub(1) {
            if let (Some(a), Some(b)) = (self.values[i].finite(), bi.values[i].finite()) {
                dev = dev.max((a - b).abs());
            }
        }
        Ok(dev)
    }

    /// Closed convex (concave) hull of the finite graph points by the monotone chain,
    /// evaluated on the grid.
    pub fn closed_hull(&self) -> GridFunction<T> {
        let s = self.sign();
        // lower hull of (x, s f)
        let pts: Vec<(T, T)> = self
            .finite_points()
            .into_iter()
            .map(|(x, f)| (x, s * f))
            .collect();
        let mut hull: Vec<(T, T)> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= T::zero() {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let values = self
            .grid
            .iter()
            .map(|&x| {
                if hull.is_empty() || x < hull[0].0 || x > hull[hull.len() - 1].0 {
                    return self.outside();
                }
                let j = hull.partition_point(|h| h.0 < x);
                let v = if j < hull.len() && hull[j].0 == x {
                    hull[j].1
                } else {
                    let (a, b) = (hull[j - 1], hull[j]);
                    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
                };
                ExtReal::Finite(s * v)
            })
            .collect();
        GridFunction {
            grid: self.grid.clone(),
            values,
            shape: self.shape,
        }
    }

    /// Max absolute difference at shared grid points where both functions are finite.
    pub fn max_deviation(&self, other: &GridFunction<T>) -> T {
        let mut dev = T::zero();
        for (x, v) in self.grid.iter().zip(&self.values) {
            if let (Some(a), Some(Some(b))) = (v.finite(), other.at(*x).map(|o| o.finite())) {
                dev = dev.max((a - b).abs());
            }
        }
        dev
    }

    /// Largest grid spacing.
    pub fn spacing(&self) -> T {
        self.grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }
}

/// Uniform grid of `n` points on `[a, b]`.
pub fn uniform_grid<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    (0..n)
        .map(|i| a + (b - a) * T::count(i) / T::count(n - 1))
        .collect()
}

/// `(f [] g)(x) = inf_z {f(x - z) + g(z)}` for convex `f, g` on grids with a common spacing
/// (sup-convolution for concave inputs). The result lives on the Minkowski-sum grid.
pub fn inf_convolution<T: Scalar>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
) -> Result<GridFunction<T>> {
    if f.shape != g.shape {
        return Err(Error::InvalidInput(
            "convolution needs functions of the same shape".into(),
        ));
    }
    let h = f.grid[1] - f.grid[0];
    let tol = h * lit(1e-9);
    let uniform = |grid: &[T]| grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol);
    if !uniform(&f.grid) || !uniform(&g.grid) {
        return Err(Error::InvalidInput(
            "convolution grids must share one uniform spacing".into(),
        ));
    }
    let (nf, ng) = (f.grid.len(), g.grid.len());
    let origin = f.grid[0] + g.grid[0];
    let grid: Vec<T> = (0..nf + ng - 1).map(|k| origin + h * T::count(k)).collect();
    let s = f.sign();
    let mut values = vec![f.outside(); nf + ng - 1];
    for (i, fv) in f.values.iter().enumerate() {
        let Some(a) = fv.finite() else { continue };
        for (j, gv) in g.values.iter().enumerate() {
            let Some(b) = gv.finite() else { continue };
            let cand = ExtReal::Finite(a + b);
            let slot = &mut values[i + j];
            let better = match slot.finite() {
                None => true,
                Some(c) => s * (a + b) < s * c,
            };
            if better {
                *slot = cand;
            }
        }
    }
    if values.iter().all(|v| !v.is_finite()) {
        return Err(Error::EmptyDomain);
    }
    Ok(GridFunction {
        grid,
        values,
        shape: f.shape,
    })
}

/// Max deviation between `(f [] g)*` and `f* + g*` on `dual_grid`.
pub fn convolution_identity_deviation<T: Scalar>(
    f: &GridFunction<T>,
    g: &GridFunction<T>,
    dual_grid: &[T],
) -> Result<T> {
    let conv = inf_convolution(f, g)?.conjugate(dual_grid)?;
    let fs = f.conjugate(dual_grid)?;
    let gs = g.conjugate(dual_grid)?;
    let mut dev = T::zero();
    for i in 0..dual_grid.len() {
        let sum = fs.values[i].add(gs.values[i])?;
        if let (Some(a), Some(b)) = (conv.values[i].finite(), sum.finite()) {
            dev = dev.max((a - b).abs());
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(n: usize) -> GridFunction<f64> {
        GridFunction::sample(
            uniform_grid::<f64>(-5.0, 5.0, n),
            |x| x * x / 2.0,
            Shape::Convex,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_is_self_conjugate() {
        let f = quad(2001);
        let ys = uniform_grid::<f64>(-3.0, 3.0, 121);
        let fs = f.conjugate(&ys).unwrap();
        for (y, v) in ys.iter().zip(&fs.values) {
            assert!((v.finite().unwrap() - y * y / 2.0).abs() < 2e-3);
        }
        assert!(fs.is_consistent(1e-9));
    }

    #[test]
    fn cone_indicator_conjugate() {
        let grid = uniform_grid::<f64>(-5.0, 5.0, 101);
        let f = GridFunction::from_fn(
            grid,
            |x: f64| {
                if x <= 0.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            },
            Shape::Convex,
        )
        .unwrap();
        let ys = uniform_grid::<f64>(-2.0, 2.0, 41);
        let fs = f.conjugate(&ys).unwrap();
        for (y, v) in ys.iter().zip(&fs.values) {
            let v = v.finite().unwrap();
            if *y >= 0.0 {
                assert_eq!(v, 0.0);
            } else {
                // grows with the grid width: -5 y
                assert!((v + 5.0 * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_conjugate() {
        let f = GridFunction::sample(
            uniform_grid::<f64>(-10.0, 5.0, 6001),
            f64::exp,
            Shape::Convex,
        )
        .unwrap();
        let ys = uniform_grid::<f64>(0.1, 20.0, 50);
        let fs = f.conjugate(&ys).unwrap();
        for (y, v) in ys.iter().zip(&fs.values) {
            assert!((v.finite().unwrap() - (y * y.ln() - y)).abs() < 1e-3);
        }
    }

    #[test]
    fn biconjugation() {
        let f = quad(401);
        assert!(f.biconjugate_deviation().unwrap() < 5e-3);
        let lin = GridFunction::sample(
            uniform_grid::<f64>(-2.0, 2.0, 41),
            |x| 3.0 * x - 1.0,
            Shape::Convex,
        )
        .unwrap();
        assert!(lin.biconjugate_deviation().unwrap() < 1e-10);
        let w = GridFunction::sample(
            uniform_grid::<f64>(-1.0, 3.0, 401),
            |x: f64| (x * x).min((x - 2.0) * (x - 2.0)),
            Shape::Convex,
        )
        .unwrap();
        let bi = w.biconjugate().unwrap();
        let hull = w.closed_hull();
        assert!(bi.max_deviation(&hull) < w.spacing());
        assert!(w.at(1.0).is_some());
        let at1 = bi.values[200].finite().unwrap();
        assert!(at1 < 1.0 - 0.5);
    }

    #[test]
    fn concave_conjugate_and_hull() {
        let g = GridFunction::sample(
            uniform_grid::<f64>(-3.0, 3.0, 601),
            |x| -(x * x),
            Shape::Concave,
        )
        .unwrap();
        let ys = uniform_grid::<f64>(-2.0, 2.0, 21);
        // inf_x {x y + x^2} = -y^2/4
        let gs = g.conjugate(&ys).unwrap();
        for (y, v) in ys.iter().zip(&gs.values) {
            assert!((v.finite().unwrap() + y * y / 4.0).abs() < 1e-4);
        }
        assert!(g.is_consistent(1e-9));
        assert!(g.closed_hull().max_deviation(&g) < 1e-12);
    }

    #[test]
    fn hull_is_idempotent() {
        let w = GridFunction::sample(
            uniform_grid::<f64>(-2.0, 2.0, 81),
            |x: f64| (3.0 * x).sin() + x * x,
            Shape::Convex,
        )
        .unwrap();
        let h1 = w.closed_hull();
        let h2 = h1.closed_hull();
        assert!(h1.max_deviation(&h2) < 1e-12);
        assert!(h1.is_consistent(1e-9));
    }

    #[test]
    fn convolution_examples() {
        let h = 0.01;
        let grid = uniform_grid::<f64>(-3.0, 3.0, 601);
        let f = GridFunction::sample(grid.clone(), |x| x * x / 2.0, Shape::Convex).unwrap();
        let g = GridFunction::sample(grid, |x| x * x, Shape::Convex).unwrap();
        let c = inf_convolution(&f, &g).unwrap();
        for (x, v) in c.grid.iter().zip(&c.values) {
            if x.abs() <= 3.0 {
                assert!((v.finite().unwrap() - x * x / 3.0).abs() < 5e-3);
            }
        }
        // indicator of {0} is the identity
        let delta = GridFunction::from_fn(
            uniform_grid::<f64>(-1.0, 1.0, 201),
            |x: f64| {
                if x.abs() < h / 2.0 {
                    ExtReal::Finite(0.0)
                } else {
                    ExtReal::PosInf
                }
            },
            Shape::Convex,
        )
        .unwrap();
        let fd = inf_convolution(&f, &delta).unwrap();
        for (x, v) in f.grid.iter().zip(&f.values) {
            assert_eq!(fd.at_near(*x, h * 1e-6).unwrap(), *v);
        }
        let ys = uniform_grid::<f64>(-2.0, 2.0, 41);
        assert!(convolution_identity_deviation(&f, &g, &ys).unwrap() < 1e-12);
    }

    #[test]
    fn improper_and_empty() {
        let mut f = quad(11);
        f.values[3] = ExtReal::NegInf;
        assert!(matches!(f.conjugate(&[0.0]), Err(Error::ImproperFunction)));
        let a = GridFunction::from_fn(
            uniform_grid::<f64>(0.0, 1.0, 5),
            |x: f64| {
                if x < 0.8 {
                    ExtReal::Finite(x)
                } else {
                    ExtReal::PosInf
                }
            },
            Shape::Convex,
        )
        .unwrap();
        let mut b = a.clone();
        b.values = vec![ExtReal::PosInf; 5];
        assert!(matches!(inf_convolution(&a, &b), Err(Error::EmptyDomain)));
    }
}
