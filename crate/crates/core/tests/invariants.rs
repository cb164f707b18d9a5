use approx::assert_relative_eq;
use proptest::prelude::*;

use orlicz_duality::convex::{uniform_grid, GridFunction, Shape};
use orlicz_duality::market::{
    solve_dual, solve_primal, FiniteMarket, Generator, Sided, SolveOptions,
};
use orlicz_duality::orlicz::{gauge_norm, modular_scaled, FiniteRandomVariable, Variable, Young};
use orlicz_duality::quadrature::{integrate, QuadOptions};
use orlicz_duality::{Gap, Utility};

fn utilities() -> impl Strategy<Value = Utility> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|a| Utility::exponential(a).unwrap()),
        (0.0f64..2.0).prop_map(|s| Utility::log(s).unwrap()),
        (0.1f64..0.9).prop_map(|p| Utility::power(p).unwrap()),
        (0.5f64..3.0).prop_map(|b| Utility::truncated_quadratic(b).unwrap()),
    ]
}

fn probs(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    })
}

fn variable() -> impl Strategy<Value = FiniteRandomVariable<f64>> {
    (1usize..6)
        .prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), probs(n)))
        .prop_filter_map("nonzero", |(x, p)| {
            let v = FiniteRandomVariable::new(x, p).ok()?;
            (!v.is_zero()).then_some(v)
        })
}

fn youngs() -> impl Strategy<Value = Young<f64>> {
    prop_oneof![
        Just(Young::parse("exp").unwrap()),
        (1.2f64..4.0).prop_map(|p| Young::parse(&format!("power:{p}")).unwrap())
    ]
}

/// Three-state market with a payoff taking both signs, so it is free of arbitrage.
fn market() -> impl Strategy<Value = FiniteMarket<f64>> {
    (probs(3), 0.2f64..3.0, 0.2f64..3.0, -1.0f64..1.0).prop_map(|(p, up, down, mid)| {
        let g = Generator {
            payoff: vec![up, mid, -down],
            sided: Sided::Two,
        };
        FiniteMarket::new(p, vec![g], None).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn fenchel_young_inequality(u in utilities(), x in -2.0f64..4.0, y in 0.05f64..5.0) {
        let lo = u.lower_bound().unwrap_or(f64::NEG_INFINITY);
        prop_assume!(x > lo);
        let lhs = u.u(x);
        let rhs = u.v(y) + x * y;
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "U({x}) = {lhs} > V({y}) + xy = {rhs}");
        prop_assert!(u.fenchel_gap(x, y) >= -1e-9);
    }

    #[test]
    fn conjugate_is_convex(u in utilities(), y in 0.1f64..4.0, h in 0.01f64..0.5) {
        let (a, b, c) = (u.v(y), u.v(y + h), u.v(y + 2.0 * h));
        prop_assert!(a - 2.0 * b + c >= -1e-9);
    }

    #[test]
    fn gauge_norm_is_homogeneous(phi in youngs(), x in variable(), c in 0.1f64..5.0) {
        let n1 = gauge_norm(&phi, Variable::Finite(&x)).unwrap().value;
        let n2 = gauge_norm(&phi, Variable::Finite(&x.scaled(c))).unwrap().value;
        assert_relative_eq!(n2, c * n1, max_relative = 1e-6);
        let n3 = gauge_norm(&phi, Variable::Finite(&x.scaled(-1.0))).unwrap().value;
        assert_relative_eq!(n3, n1, max_relative = 1e-9);
    }

    #[test]
    fn modular_is_monotone_in_scale(phi in youngs(), x in variable(), s in 0.05f64..1.0) {
        let a = modular_scaled(&phi, Variable::Finite(&x), s).unwrap().value.to_float();
        let b = modular_scaled(&phi, Variable::Finite(&x), 2.0 * s).unwrap().value.to_float();
        prop_assert!(a <= b);
        // convexity with Phi(0) = 0
        prop_assert!(2.0 * a <= b + 1e-12);
    }

    #[test]
    fn norm_triangle_inequality(phi in youngs(), n in 1usize..5, seed in prop::collection::vec(-3.0f64..3.0, 10), p in probs(5)) {
        let p: Vec<f64> = p[..n].to_vec();
        let s: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / s).collect();
        let x = FiniteRandomVariable::new(seed[..n].to_vec(), p.clone()).unwrap();
        let y = FiniteRandomVariable::new(seed[5..5 + n].to_vec(), p.clone()).unwrap();
        prop_assume!(!x.is_zero() && !y.is_zero());
        let sum = FiniteRandomVariable::new(x.outcomes.iter().zip(&y.outcomes).map(|(a, b)| a + b).collect(), p).unwrap();
        prop_assume!(!sum.is_zero());
        let nx = gauge_norm(&phi, Variable::Finite(&x)).unwrap().value;
        let ny = gauge_norm(&phi, Variable::Finite(&y)).unwrap().value;
        let ns = gauge_norm(&phi, Variable::Finite(&sum)).unwrap().value;
        prop_assert!(ns <= (nx + ny) * (1.0 + 1e-6));
    }

    #[test]
    fn biconjugate_of_convex_samples(a in 0.1f64..3.0, b in -2.0f64..2.0, c in 0.0f64..1.0) {
        let grid = uniform_grid(-2.0, 2.0, 81);
        let f = GridFunction::sample(grid, |x: f64| a * x * x + b * x + c * x.abs(), Shape::Convex).unwrap();
        prop_assert!(f.biconjugate_deviation().unwrap() < 1e-9);
    }

    #[test]
    fn biconjugate_is_a_minorant(vals in prop::collection::vec(-3.0f64..3.0, 21)) {
        let grid = uniform_grid(-1.0, 1.0, 21);
        let f = GridFunction::sample(grid.clone(), |x: f64| vals[((x + 1.0) * 10.0).round() as usize], Shape::Convex).unwrap();
        let g = f.biconjugate().unwrap();
        for &x in &grid {
            let fx = f.at_near(x, 1e-12).unwrap().to_float();
            let gx = g.at_near(x, 1e-9).unwrap().to_float();
            prop_assert!(gx <= fx + 1e-9, "f**({x}) = {gx} > f = {fx}");
        }
    }

    #[test]
    fn primal_and_dual_agree(m in market(), u in utilities()) {
        let opts = SolveOptions::default();
        let p = solve_primal(&m, &u, opts).unwrap();
        let d = solve_dual(&m, &u, opts).unwrap();
        prop_assert!(p.value <= d.value + 1e-6, "weak duality: {} > {}", p.value, d.value);
        prop_assert!((p.value - d.value).abs() <= 1e-5 * (1.0 + d.value.abs()), "{} vs {}", p.value, d.value);
    }

    #[test]
    fn quadrature_integrates_polynomials(c in prop::collection::vec(-5.0f64..5.0, 6), a in -3.0f64..0.0, b in 0.0f64..3.0) {
        let poly = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
        let exact = |x: f64| c.iter().enumerate().map(|(i, k)| k * x.powi(i as i32 + 1) / (i as f64 + 1.0)).sum::<f64>();
        let q = integrate(poly, a, b, QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, exact(b) - exact(a), epsilon = 1e-11, max_relative = 1e-12);
    }

    #[test]
    fn gap_moment_is_log_convex(l in 0.05f64..3.0, h in 0.01f64..0.5) {
        let m = Gap::new(40).unwrap();
        let e = |t: f64| m.exponential_moment(t).to_float();
        let (a, b, c) = (e(l), e(l + h), e(l + 2.0 * h));
        prop_assert!(b.ln() * 2.0 <= a.ln() + c.ln() + 1e-12);
    }
}
