//! The numbered acceptance criteria, shared by the integration tests and the CLI.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex::{convolution_identity_deviation, uniform_grid, GridFunction, Shape};
use crate::gap::{
    completions, gap_certificate, shock_modular_closed_form, shock_variable, GapMarket,
};
use crate::levy::{
    corner_analysis, cumulant, cumulant_by_quadrature, cumulant_derivative, deflator_nonexistence,
    dual_sequence, dual_sequence_limit, LevyModel,
};
use crate::market::{
    check_no_arbitrage, complete_market_value, solve_dual, solve_primal, FiniteMarket, Generator,
    Sided, SolveOptions,
};
use crate::orlicz::{
    delta2_check, gauge_norm, log_grid, modular_vs_norm_convergence, FiniteRandomVariable,
    Variable, Young,
};
use crate::utility::UtilitySpec;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    /// One line per checked item; failing items start with `FAIL`.
    pub details: Vec<String>,
    pub elapsed_s: f64,
    pub time_limit_s: Option<f64>,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let first_fail = self.details.iter().find(|d| d.starts_with("FAIL"));
        format!(
            "criterion {:>2} {:<28} {} ({:.2} s){}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_s,
            first_fail.map(|d| format!(": {d}")).unwrap_or_default()
        )
    }
}

/// Collects checks for one criterion.
struct Checks {
    details: Vec<String>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Self {
            details: Vec::new(),
            ok: true,
        }
    }

    fn check(&mut self, ok: bool, msg: String) {
        self.ok &= ok;
        self.details
            .push(format!("{} {msg}", if ok { "ok  " } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.check(false, format!("{what}: {e}"));
    }
}

fn run(
    id: u8,
    name: &'static str,
    time_limit_s: Option<f64>,
    body: impl FnOnce(&mut Checks),
) -> CriterionResult {
    let start = Instant::now();
    let mut c = Checks::new();
    body(&mut c);
    let elapsed_s = start.elapsed().as_secs_f64();
    if let Some(limit) = time_limit_s {
        c.check(
            elapsed_s < limit,
            format!("runtime {elapsed_s:.3} s < {limit} s"),
        );
    }
    CriterionResult {
        id,
        name,
        passed: c.ok,
        details: c.details,
        elapsed_s,
        time_limit_s,
    }
}

pub fn criterion_1() -> CriterionResult {
    run(1, "cumulant closed form", Some(1.0), |c| {
        let m = LevyModel::<f64>::default();
        for v in [-3.0, -1.0, 0.0, 0.5, 0.9, 1.0] {
            match cumulant_by_quadrature(&m, v) {
                Ok(q) => {
                    let d = (q.to_float() - cumulant(&m, v).to_float()).abs();
                    c.check(
                        d < 1e-8,
                        format!("v = {v}: |quadrature - closed form| = {d:.3e} < 1e-8"),
                    );
                }
                Err(e) => c.error("quadrature", e),
            }
        }
    })
}

pub fn criterion_2() -> CriterionResult {
    run(2, "corner solution", Some(1.0), |c| {
        let m = LevyModel::<f64>::default();
        // sign scan of the first-order condition kappa'(w), w = -theta, on the admissible w <= 1
        let grid: Vec<f64> = (0..=4000)
            .map(|i| -30.0 + 31.0 * i as f64 / 4000.0)
            .collect();
        let sign_change = grid
            .windows(2)
            .any(|w| cumulant_derivative(&m, w[0]) * cumulant_derivative(&m, w[1]) <= 0.0);
        c.check(
            !sign_change,
            "no interior root of the first-order condition on theta >= -1".into(),
        );
        match corner_analysis(&m) {
            Ok(a) => {
                c.check(
                    a.interior_root.is_none() && a.optimal_theta == -1.0,
                    format!("optimal theta = {}", a.optimal_theta),
                );
                let d = (a.a_closed_form - a.a_quadrature).abs();
                c.check(
                    d < 1e-7,
                    format!("A closed form vs quadrature: {d:.3e} < 1e-7"),
                );
                let exact = 0.5 / 1f64.exp().sqrt();
                c.check(
                    (a.a_closed_form - exact).abs() < 1e-15,
                    format!("A = {:.15} = 1/(2 sqrt e)", a.a_closed_form),
                );
            }
            Err(e) => c.error("corner analysis", e),
        }
    })
}

pub fn criterion_3() -> CriterionResult {
    run(3, "dual optimizing sequence", Some(30.0), |c| {
        let m = LevyModel::<f64>::default();
        let rows = match dual_sequence(&m, 50) {
            Ok(r) => r,
            Err(e) => return c.error("dual sequence", e),
        };
        let limit = dual_sequence_limit(&m);
        let rises: Vec<usize> = rows
            .windows(2)
            .filter(|w| w[1].value > w[0].value)
            .map(|w| w[1].n)
            .collect();
        c.check(
            rises.is_empty(),
            format!(
                "values nonincreasing for n <= 50 (value_1 = {:.7}, value_2 = {:.7}; rises at n = {:?})",
                rows[0].value, rows[1].value, rises
            ),
        );
        let below = rows.iter().filter(|r| r.value < limit - 1e-12).count();
        c.check(
            below == 0,
            format!("values bounded below by -exp(kappa(1)) = {limit:.9}"),
        );
        let gap = rows[49].value - limit;
        c.check(
            gap.abs() < 1e-4,
            format!("final gap value_50 - limit = {gap:.4e} < 1e-4"),
        );
        let worst = rows.iter().map(|r| r.residual_b2.abs()).fold(0.0, f64::max);
        c.check(
            worst < 1e-7,
            format!("martingale residual max {worst:.3e} < 1e-7"),
        );
        let ident = rows
            .iter()
            .map(|r| (r.drift_ln_z_q - r.b_n - r.c_n).abs())
            .fold(0.0, f64::max);
        c.check(
            ident < 1e-7,
            format!("drift of ln Z under Q^(n) = B_n + C_n within {ident:.3e}"),
        );
    })
}

pub fn criterion_4() -> CriterionResult {
    run(4, "deflator non-existence", Some(1.0), |c| {
        let m = LevyModel::<f64>::default();
        let a = m.a();
        match deflator_nonexistence(&m, 0.0, a / 2.0, 0.0) {
            Ok(v) => {
                c.check(
                    v.contradiction && v.lhs > 0.0 && v.rhs_sign <= 0,
                    format!(
                        "witness c = 0, x_t = A/2: lhs = {:.6e} > 0, rhs <= 0",
                        v.lhs
                    ),
                );
                let d = (v.drift_q + a).abs();
                c.check(d < 1e-7, format!("drift under Q_hat = -A within {d:.3e}"));
            }
            Err(e) => c.error("deflator check", e),
        }
    })
}

pub fn criterion_5() -> CriterionResult {
    run(5, "gap market certificate", Some(5.0), |c| {
        let ee = 1f64.exp();
        let certs = [30usize, 60].map(|n| {
            let m = GapMarket::<f64>::new(n).expect("valid truncation");
            (
                m.clone(),
                gap_certificate(&m, 200, 30).expect("certificate"),
                completions(&m),
            )
        });
        let (m, cert, comp) = &certs[0];
        let m1 = m
            .states()
            .iter()
            .map(|&n| m.prob(n) * (-GapMarket::<f64>::x(n)).exp())
            .sum::<f64>();
        let m2 = m
            .states()
            .iter()
            .map(|&n| m.prob(n) * (-2.0 * GapMarket::<f64>::x(n)).exp())
            .sum::<f64>();
        c.check(
            (cert.u_over_c + m1).abs() < 1e-9,
            format!(
                "u over C = {:.12} = -E[e^-X] (state sum {:.12})",
                cert.u_over_c, -m1
            ),
        );
        c.check(
            (cert.u_over_bipolar + m2).abs() < 1e-9,
            format!(
                "u over bipolar = {:.12} = -E[e^-2X] (state sum {:.12})",
                cert.u_over_bipolar, -m2
            ),
        );
        c.check(
            cert.strict_gap && cert.margin > 0.05,
            format!("strict gap {:.6} > 0.05", cert.margin),
        );
        c.check(
            cert.sampled_ok,
            format!(
                "200 sampled strategies stay below -E[e^-X] (best {:.12})",
                cert.sampled_best
            ),
        );
        let cv = (comp.corner_value - (ee.powi(-2) - ee.powi(-4))).abs();
        c.check(
            cv < 1e-12,
            format!("corner value E[X e^-X] = e^-2 - e^-4 within {cv:.2e}"),
        );
        // entropy of the full completion from its state-price density
        let h: f64 = m
            .states()
            .iter()
            .zip(&comp.full)
            .map(|(&n, &q)| m.prob(n) * q * q.ln())
            .sum();
        let de = (h - comp.entropy_full).abs();
        c.check(
            de < 1e-12,
            format!("entropy E[q ln q] = -ln E[e^-2X] within {de:.2e}"),
        );
        let (_, cert60, comp60) = &certs[1];
        let stab = [
            (cert.u_over_c, cert60.u_over_c),
            (cert.u_over_bipolar, cert60.u_over_bipolar),
            (cert.margin, cert60.margin),
            (cert.lambda_bipolar, cert60.lambda_bipolar),
            (cert.lambda_c, cert60.lambda_c),
            (comp.entropy_full, comp60.entropy_full),
            (comp.corner_value, comp60.corner_value),
            (comp.full_mean_y, comp60.full_mean_y),
        ]
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
        c.check(
            stab < 1e-9,
            format!("N = 30 vs N = 60 stability {stab:.2e} < 1e-9"),
        );
    })
}

fn random_market(rng: &mut ChaCha8Rng, endowment: bool) -> FiniteMarket<f64> {
    loop {
        let n = rng.gen_range(2..=6usize);
        let k = rng.gen_range(1..=(n - 1).min(3));
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let ps: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / ps).collect();
        // a strictly positive density q with E[q] = 1 prices every generator at zero
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..2.0)).collect();
        let eq: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        let q: Vec<f64> = q.iter().map(|x| x / eq).collect();
        let gens: Vec<Generator<f64>> = (0..k)
            .map(|_| {
                let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let price: f64 = (0..n).map(|i| p[i] * q[i] * g[i]).sum();
                Generator {
                    payoff: g.iter().map(|x| x - price).collect(),
                    sided: if rng.gen_bool(0.25) {
                        Sided::One
                    } else {
                        Sided::Two
                    },
                }
            })
            .collect();
        let b = endowment.then(|| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect());
        if let Ok(m) = FiniteMarket::new(p, gens, b) {
            if m.dim() > 0 {
                return m;
            }
        }
    }
}

pub fn criterion_6(seed: u64) -> CriterionResult {
    run(6, "finite-scale duality", Some(60.0), |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let markets: Vec<FiniteMarket<f64>> = (0..200)
            .map(|i| random_market(&mut rng, i % 2 == 1))
            .collect();
        let utilities = [
            UtilitySpec::<f64>::exponential(1.0).expect("utility"),
            UtilitySpec::log(1.0).expect("utility"),
        ];
        let opts = SolveOptions::default();
        let results: Vec<(usize, &'static str, Result<f64, String>)> = markets
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, m)| {
                utilities.iter().zip(["exp", "log"]).map(move |(u, name)| {
                    let gap = solve_primal(m, u, opts)
                        .and_then(|p| solve_dual(m, u, opts).map(|d| (p.value - d.value).abs()))
                        .map_err(|e| e.to_string());
                    (i, name, gap)
                })
            })
            .collect();
        let mut worst = 0.0f64;
        for (i, name, r) in &results {
            match r {
                Ok(g) => {
                    worst = worst.max(*g);
                    if *g >= 1e-6 {
                        c.check(
                            false,
                            format!("instance {i} ({name}): primal - dual = {g:.3e}"),
                        );
                    }
                }
                Err(e) => c.check(false, format!("instance {i} ({name}): {e}")),
            }
        }
        c.check(
            worst < 1e-6,
            format!("max |primal - dual| over 200 instances x 2 utilities = {worst:.3e} < 1e-6"),
        );
    })
}

pub fn criterion_7(seed: u64) -> CriterionResult {
    run(7, "complete-market formula", None, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let n = rng.gen_range(2..=6usize);
            let draw = |rng: &mut ChaCha8Rng| {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
            };
            let p = draw(&mut rng);
            let qm = draw(&mut rng);
            let q: Vec<f64> = qm.iter().zip(&p).map(|(a, b)| a / b).collect();
            let u = UtilitySpec::<f64>::exponential(rng.gen_range(0.5..2.0)).expect("utility");
            match complete_market_value(&p, &q, &u) {
                Ok(v) => worst = worst.max((v.value - v.closed_form.expect("exponential")).abs()),
                Err(e) => c.error("complete market", e),
            }
        }
        c.check(
            worst < 1e-9,
            format!("50 random (P, Q): max |minimization - entropy formula| = {worst:.3e} < 1e-9"),
        );
        let u = UtilitySpec::<f64>::exponential(1.0).expect("utility");
        match complete_market_value(&[2.0 / 3.0, 1.0 / 3.0], &[0.75, 1.5], &u) {
            Ok(v) => {
                let d = (v.value + 2.0 * 2f64.sqrt() / 3.0).abs();
                c.check(
                    d < 1e-9,
                    format!(
                        "two-state value {:.15} = -2 sqrt 2 / 3 within {d:.2e}",
                        v.value
                    ),
                );
            }
            Err(e) => c.error("two-state value", e),
        }
    })
}

/// Exhaustive search for an integer arbitrage `theta` in `[-8, 8]^k`.
fn grid_arbitrage(m: &FiniteMarket<f64>) -> bool {
    let k = m.dim();
    let mut theta = vec![-8i32; k];
    loop {
        let admissible = m
            .generators
            .iter()
            .zip(&theta)
            .all(|(g, &t)| g.sided == Sided::Two || t >= 0);
        if admissible {
            let th: Vec<f64> = theta.iter().map(|&t| t as f64).collect();
            let x = m.claim(&th);
            if x.iter().all(|&v| v >= -1e-12) && x.iter().any(|&v| v > 1e-12) {
                return true;
            }
        }
        let mut j = 0;
        loop {
            if j == k {
                return false;
            }
            theta[j] += 1;
            if theta[j] <= 8 {
                break;
            }
            theta[j] = -8;
            j += 1;
        }
    }
}

pub fn criterion_8(seed: u64) -> CriterionResult {
    run(8, "no-arbitrage verdicts", None, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut instances = Vec::new();
        while instances.len() < 100 {
            let k = rng.gen_range(1..=3usize);
            let gens: Vec<Generator<f64>> = (0..k)
                .map(|_| Generator {
                    payoff: (0..3).map(|_| rng.gen_range(-2..=2) as f64).collect(),
                    sided: if rng.gen_bool(0.3) {
                        Sided::One
                    } else {
                        Sided::Two
                    },
                })
                .collect();
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..1.0)).collect();
            let s: f64 = p.iter().sum();
            if let Ok(m) = FiniteMarket::new(p.iter().map(|x| x / s).collect(), gens, None) {
                instances.push(m);
            }
        }
        let verdicts: Vec<(bool, bool)> = instances
            .par_iter()
            .map(|m| (!check_no_arbitrage(m).arbitrage_free, grid_arbitrage(m)))
            .collect();
        let disagreements = verdicts.iter().filter(|(a, b)| a != b).count();
        let arbitrages = verdicts.iter().filter(|(_, b)| *b).count();
        c.check(
            disagreements == 0,
            format!("100 instances ({arbitrages} with arbitrage): {disagreements} disagreements between LP and grid"),
        );
    })
}

pub fn criterion_9(seed: u64) -> CriterionResult {
    run(9, "convex analysis oracles", Some(30.0), |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_ratio = 0.0f64;
        for _ in 0..20 {
            let (a, b, s, t) = (
                rng.gen_range(0.1..2.0),
                rng.gen_range(0.0..1.5),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..0.5),
            );
            let grid = uniform_grid(-3.0, 3.0, rng.gen_range(101..=401usize));
            match GridFunction::sample(
                grid,
                |x: f64| a * x * x + b * (x - s).abs() + t * (x / 2.0).exp(),
                Shape::Convex,
            ) {
                Ok(f) => match f.biconjugate_deviation() {
                    Ok(d) => worst_ratio = worst_ratio.max(d / f.spacing()),
                    Err(e) => c.error("biconjugate", e),
                },
                Err(e) => c.error("grid function", e),
            }
        }
        c.check(
            worst_ratio < 1.0,
            format!("biconjugation deviation / h = {worst_ratio:.3e} < 1 on 20 grids"),
        );
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let h = 0.02;
            let n1 = rng.gen_range(50..=200usize);
            let n2 = rng.gen_range(50..=200usize);
            let g1 = uniform_grid(-(n1 as f64) * h / 2.0, (n1 as f64) * h / 2.0, n1 + 1);
            let g2 = uniform_grid(
                -(n2 as f64) * h / 2.0 + h,
                (n2 as f64) * h / 2.0 + h,
                n2 + 1,
            );
            let (a1, a2, b1, s2) = (
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.0..1.0),
                rng.gen_range(-0.5..0.5),
            );
            let f = GridFunction::sample(g1, |x: f64| a1 * x * x + b1 * x.abs(), Shape::Convex);
            let g = GridFunction::sample(g2, |x: f64| a2 * (x - s2) * (x - s2), Shape::Convex);
            match (f, g) {
                (Ok(f), Ok(g)) => {
                    let ys = uniform_grid(-1.5, 1.5, 61);
                    match convolution_identity_deviation(&f, &g, &ys) {
                        Ok(d) => worst = worst.max(d),
                        Err(e) => c.error("convolution", e),
                    }
                }
                _ => c.error("grid function", "construction failed"),
            }
        }
        c.check(
            worst < 1e-9,
            format!("(f [] g)* = f* + g* on 50 random pairs within {worst:.3e}"),
        );
    })
}

pub fn criterion_10(seed: u64) -> CriterionResult {
    run(10, "Orlicz suite", None, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut homog = 0.0f64;
        let mut monotone_fail = 0usize;
        let mut errors = 0usize;
        for i in 0..500 {
            let phi = if i % 2 == 0 {
                Young::Exponential
            } else {
                Young::power(rng.gen_range(1.2..4.0))
            };
            let n = rng.gen_range(1..=8usize);
            let outcomes: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let probs: Vec<f64> = {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect()
            };
            let scale = rng.gen_range(-4.0..4.0);
            let bigger: Vec<f64> = outcomes
                .iter()
                .map(|x| x * (1.0 + rng.gen_range(0.0..1.0)))
                .collect();
            let (Ok(x), Ok(y)) = (
                FiniteRandomVariable::new(outcomes, probs.clone()),
                FiniteRandomVariable::new(bigger, probs),
            ) else {
                errors += 1;
                continue;
            };
            let cx = x.scaled(scale);
            match (
                gauge_norm(&phi, Variable::Finite(&x)),
                gauge_norm(&phi, Variable::Finite(&cx)),
                gauge_norm(&phi, Variable::Finite(&y)),
            ) {
                (Ok(nx), Ok(ncx), Ok(ny)) => {
                    homog = homog
                        .max((ncx.value - scale.abs() * nx.value).abs() / nx.value.max(1e-300));
                    if nx.value > ny.value * (1.0 + 1e-10) {
                        monotone_fail += 1;
                    }
                }
                _ => errors += 1,
            }
        }
        c.check(
            errors == 0 && homog < 1e-8,
            format!("homogeneity on 500 instances: max relative error {homog:.3e}"),
        );
        c.check(
            monotone_fail == 0,
            format!("monotonicity on 500 instances: {monotone_fail} violations"),
        );
        let grid = log_grid(1.0, 1e4, 10);
        match delta2_check(&Young::power(3.0), 0.0, &grid, 1e6) {
            Ok(r) => c.check(
                r.satisfied,
                format!(
                    "power 3 satisfies the doubling condition (K = {:?})",
                    r.k_bound
                ),
            ),
            Err(e) => c.error("power doubling", e),
        }
        match delta2_check(&Young::Exponential, 0.0, &grid, 1e6) {
            Ok(r) => c.check(
                !r.satisfied && r.witness.is_some(),
                format!(
                    "exponential fails the doubling condition, witness x = {:?}",
                    r.witness
                ),
            ),
            Err(e) => c.error("exponential doubling", e),
        }
        let ks = [2usize, 4, 8, 16, 32];
        let scalings = [0.5, 0.9];
        match modular_vs_norm_convergence(
            &Young::Exponential,
            shock_variable::<f64>,
            &ks,
            &scalings,
        ) {
            Ok(r) => {
                let mut worst = 0.0f64;
                for row in &r.rows {
                    for (j, &s) in scalings.iter().enumerate() {
                        let exact = shock_modular_closed_form::<f64>(row.k, s).to_float();
                        worst = worst.max((row.modulars[j].value.to_float() - exact).abs());
                    }
                }
                c.check(
                    worst < 1e-6,
                    format!("Y_k modulars match the closed-form series within {worst:.3e}"),
                );
                c.check(r.modular_to_zero, "Y_k converges to zero modularly".into());
                let norms: Vec<f64> = r.rows.iter().map(|row| row.norm.value).collect();
                c.check(
                    r.norm_bounded_away
                        && norms.iter().all(|&v| v >= 1.0 - 1e-6)
                        && norms.windows(2).all(|w| w[1] <= w[0] + 1e-9),
                    format!("Y_k norms stay at or above 1 and decrease: {norms:.6?}"),
                );
            }
            Err(e) => c.error("Y_k table", e),
        }
    })
}

/// Runs every criterion in order.
pub fn run_all(seed: u64) -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(seed),
        criterion_7(seed),
        criterion_8(seed),
        criterion_9(seed),
        criterion_10(seed),
    ]
}
