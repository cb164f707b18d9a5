use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use orlicz_duality::acceptance;
use orlicz_duality::gap::{
    completions, exponential_moment_argmin, gap_certificate, gap_mechanics, shock_variable,
    truncation_growth, GapMarket, SplitZero,
};
use orlicz_duality::levy::{corner_analysis, dual_sequence, dual_sequence_limit, LevyModel};
use orlicz_duality::market::{classify_corner, solve_dual, solve_primal, SolveOptions};
use orlicz_duality::orlicz::{
    delta2_check, gauge_norm, log_grid, membership, modular_scaled, modular_vs_norm_convergence,
    FiniteRandomVariable, SeriesRandomVariable, Variable, Young,
};
use orlicz_duality::{Market, Utility};

const SCHEMA_VERSION: u32 = 1;
const THREADS_ENV: &str = "ORLICZ_DUALITY_THREADS";

#[derive(Parser)]
#[command(
    name = "orlicz-duality",
    version,
    about = "Utility maximization by convex duality"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
    Pretty,
}

#[derive(Subcommand)]
enum Command {
    /// Primal and dual optima of a finite market.
    Solve {
        /// Market JSON file.
        #[arg(long)]
        market: String,
        /// Utility shorthand (`exp[:rate]`, `log[:shift]`, `power:p`, `quadratic`, `truncquad:b`,
        /// `linear`), inline JSON, or a `.json` file.
        #[arg(long, default_value = "exp")]
        utility: String,
        #[arg(long, value_enum, default_value = "json")]
        report: Output,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        corner_tol: f64,
    },
    /// Dual optimizing sequence of the Lévy corner example.
    Levy {
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        bx: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 50)]
        nmax: usize,
        #[arg(long, value_enum, default_value = "csv")]
        out: Output,
    },
    /// Utility gap certificate of the countable market.
    Gap {
        #[arg(long = "N", default_value_t = 40)]
        truncation: usize,
        #[arg(long, value_enum, default_value = "json")]
        report: Output,
        /// Sampled strategies for the cone-side bound.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Split state 0 so that X only has exponential moments up to order 1.5.
        #[arg(long)]
        split_zero: Option<f64>,
    },
    /// Orlicz modulars, gauge norms and the doubling condition.
    Orlicz {
        /// `exp`, `power:p`, `powerlog` or `expconj`.
        #[arg(long, default_value = "exp")]
        phi: String,
        /// JSON file `{"outcomes": [...], "probs": [...]}`, or `shock:k` for the countable shock `Y_k`.
        #[arg(long)]
        var: Option<String>,
        #[arg(long, value_enum, default_value = "norm")]
        op: OrliczOp,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long, default_value_t = 1e6)]
        threshold: f64,
    },
    /// Conjugate of a utility on a list of points.
    Conjugate {
        #[arg(long, default_value = "exp")]
        utility: String,
        /// Comma-separated dual points.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        y: Vec<f64>,
        #[arg(long, value_enum, default_value = "json")]
        report: Output,
    },
    /// Runs the acceptance criteria and prints a pass/fail matrix.
    Acceptance {
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long, value_enum, default_value = "pretty")]
        report: Output,
        /// Also print per-item details and runtimes.
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrliczOp {
    Norm,
    Modular,
    Delta2,
    Membership,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Input(anyhow::Error),
    Acceptance(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Acceptance(name)) => {
            eprintln!("acceptance failed: first failing criterion is {name}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
        if n == 0 {
            bail!("{THREADS_ENV} must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

/// Seventeen significant digits, locale free.
fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    let written = out.write_all(text.as_bytes()).and_then(|()| {
        if text.ends_with('\n') {
            Ok(())
        } else {
            out.write_all(b"\n")
        }
    });
    match written {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit_json<S: Serialize>(value: &S) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn read(path: &str) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read `{path}`"))
}

fn parse_utility(s: &str) -> Result<Utility> {
    let text = if s.trim_start().starts_with('{') {
        s.to_string()
    } else if s.ends_with(".json") {
        read(s)?
    } else {
        return Utility::from_shorthand(s).map_err(|e| anyhow!("--utility: {e}"));
    };
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| anyhow!("utility JSON, line {} column {}: {e}", e.line(), e.column()))?;
    Utility::from_json(&value).map_err(|e| anyhow!("utility JSON: {e}"))
}

fn run(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Solve {
            market,
            utility,
            report,
            tol,
            corner_tol,
        } => solve(&market, &utility, report, tol, corner_tol)?,
        Command::Levy {
            bx,
            horizon,
            nmax,
            out,
        } => levy(bx, horizon, nmax, out)?,
        Command::Gap {
            truncation,
            report,
            samples,
            seed,
            split_zero,
        } => gap(truncation, report, samples, seed, split_zero)?,
        Command::Orlicz {
            phi,
            var,
            op,
            scale,
            threshold,
        } => orlicz(&phi, var.as_deref(), op, scale, threshold)?,
        Command::Conjugate { utility, y, report } => conjugate(&utility, &y, report)?,
        Command::Acceptance {
            seed,
            report,
            verbose,
        } => return run_acceptance(seed, report, verbose),
    }
    Ok(())
}

fn solve(market: &str, utility: &str, report: Output, tol: f64, corner_tol: f64) -> Result<()> {
    let positive = |t: f64| t > 0.0 && t.is_finite();
    if !positive(tol) || !positive(corner_tol) {
        bail!("tolerances must be positive");
    }
    let m = Market::from_json_str(&read(market)?).map_err(|e| anyhow!("{market}: {e}"))?;
    let u = parse_utility(utility)?;
    let opts = SolveOptions { tol, corner_tol };
    let p = solve_primal(&m, &u, opts)?;
    let d = solve_dual(&m, &u, opts)?;
    let corner = classify_corner(&m, &p, &d, &u, opts);
    match report {
        Output::Json => emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "kept_states": m.kept_states,
            "primal": p,
            "dual": d,
            "duality_gap": p.value - d.value,
            "corner": corner,
        })),
        Output::Csv => {
            let mut s = String::from("state,prob,endowment,x_hat,y_hat,q_hat,nu\n");
            for i in 0..m.states() {
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    m.kept_states[i],
                    f17(m.probs[i]),
                    f17(m.endowment[i]),
                    f17(p.x_hat[i]),
                    f17(d.y_hat[i]),
                    f17(d.q_hat[i]),
                    f17(d.nu[i])
                );
            }
            emit(&s)
        }
        Output::Pretty => emit(&format!(
            "primal value  {}\ndual value    {}\ntheta         {:?}\ncompletion    {:?}\nsupport term  {}\ncorner        {}\n",
            f17(p.value),
            f17(d.value),
            p.theta,
            d.completion,
            f17(d.support_term),
            corner.corner
        )),
    }
}

fn levy(bx: f64, horizon: f64, nmax: usize, out: Output) -> Result<()> {
    let m = LevyModel::new(bx, horizon)?;
    if nmax == 0 {
        bail!("--nmax must be at least 1");
    }
    let corner = corner_analysis(&m)?;
    let rows = dual_sequence(&m, nmax)?;
    match out {
        Output::Csv => {
            let mut s = String::from("n,K_n,B_n,C_n,value_n,residual_B2\n");
            for r in &rows {
                s += &format!(
                    "{},{},{},{},{},{}\n",
                    r.n,
                    f17(r.k_n),
                    f17(r.b_n),
                    f17(r.c_n),
                    f17(r.value),
                    f17(r.residual_b2)
                );
            }
            emit(&s)
        }
        Output::Json => emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "model": m,
            "corner": corner,
            "limit": dual_sequence_limit(&m),
            "rows": rows,
        })),
        Output::Pretty => {
            let mut s = format!(
                "A = {}  limit = {}\n",
                f17(corner.a_closed_form),
                f17(dual_sequence_limit(&m))
            );
            for r in &rows {
                s += &format!(
                    "{:>4}  {}  {}\n",
                    r.n,
                    f17(r.value),
                    f17(r.value - dual_sequence_limit(&m))
                );
            }
            emit(&s)
        }
    }
}

fn gap(
    truncation: usize,
    report: Output,
    samples: usize,
    seed: u64,
    split_zero: Option<f64>,
) -> Result<()> {
    let mut m = GapMarket::<f64>::new(truncation)?;
    if let Some(mass) = split_zero {
        m = m.with_split_zero(SplitZero {
            mass,
            ..SplitZero::default()
        })?;
    }
    let cert = gap_certificate(&m, samples, seed)?;
    let comp = completions(&m);
    let argmin = exponential_moment_argmin(&m);
    let ks: Vec<usize> = [2usize, 4, 8, 16, 32]
        .into_iter()
        .filter(|&k| k <= truncation.max(2))
        .collect();
    let table =
        modular_vs_norm_convergence(&Young::Exponential, shock_variable::<f64>, &ks, &[0.5, 0.9])?;
    let mechanics = gap_mechanics(&m, &[(2.min(truncation), 0.5)])?;
    let growth_boundary = truncation_growth(&[(2, 1.0)], &[10, 20, 40])?;
    let growth_inside = truncation_growth(&[(2, 0.5)], &[20, 40])?;
    match report {
        Output::Json => emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "truncation": truncation,
            "truncation_error": m.truncation_error(),
            "certificate": cert,
            "strict_gap": cert.strict_gap,
            "moment_argmin": argmin,
            "completions": {
                "entropy_full": comp.entropy_full,
                "corner_value": comp.corner_value,
                "identity_residual": comp.identity_residual,
                "full_mean_x": comp.full_mean_x,
                "full_mean_y": comp.full_mean_y,
            },
            "mechanics": mechanics,
            "growth_at_xi_1": growth_boundary,
            "growth_at_xi_half": growth_inside,
            "shock_table": table,
            "notes": [
                "exponential moments include the mass at X = 0; the two-term display differs by that constant"
            ],
        })),
        Output::Csv => {
            let mut s = String::from("k,modular_0.5,modular_0.9,norm\n");
            for r in &table.rows {
                s += &format!(
                    "{},{},{},{}\n",
                    r.k,
                    f17(r.modulars[0].value.to_float()),
                    f17(r.modulars[1].value.to_float()),
                    f17(r.norm.value)
                );
            }
            emit(&s)
        }
        Output::Pretty => emit(&format!(
            "u over C        {}\nu over bipolar  {}\nmargin          {}\nstrict gap      {}\n",
            f17(cert.u_over_c),
            f17(cert.u_over_bipolar),
            f17(cert.margin),
            cert.strict_gap
        )),
    }
}

enum Var {
    Finite(FiniteRandomVariable<f64>),
    Series(SeriesRandomVariable<f64>),
}

impl Var {
    fn as_variable(&self) -> Variable<'_, f64> {
        match self {
            Var::Finite(v) => Variable::Finite(v),
            Var::Series(v) => Variable::Series(v),
        }
    }
}

fn parse_var(spec: &str) -> Result<Var> {
    if let Some(k) = spec.strip_prefix("shock:") {
        let k: usize = k
            .parse()
            .with_context(|| format!("bad shock index `{k}`"))?;
        return Ok(Var::Series(shock_variable(k)));
    }
    let v: FiniteRandomVariable<f64> = serde_json::from_str(&read(spec)?)
        .map_err(|e| anyhow!("{spec}: line {} column {}: {e}", e.line(), e.column()))?;
    Ok(Var::Finite(
        FiniteRandomVariable::new(v.outcomes, v.probs).map_err(|e| anyhow!("{spec}: {e}"))?,
    ))
}

fn orlicz(phi: &str, var: Option<&str>, op: OrliczOp, scale: f64, threshold: f64) -> Result<()> {
    let phi = Young::<f64>::parse(phi)?;
    if op == OrliczOp::Delta2 {
        let r = delta2_check(&phi, 0.0, &log_grid(1.0, 1e4, 10), threshold)?;
        return emit_json(&json!({ "schema_version": SCHEMA_VERSION, "delta2": r }));
    }
    let var = parse_var(var.ok_or_else(|| anyhow!("--var is required for this operation"))?)?;
    let x = var.as_variable();
    let body = match op {
        OrliczOp::Norm => {
            let n = gauge_norm(&phi, x)?;
            json!({ "value": n.value, "error_bound": n.error_bound(), "lower": n.lower, "upper": n.upper })
        }
        OrliczOp::Modular => {
            let m = modular_scaled(&phi, x, scale)?;
            let v = m.value.to_float();
            let value = if v.is_finite() {
                json!(v)
            } else {
                json!("inf")
            };
            json!({ "value": value, "error_bound": m.error_bound, "scale": scale })
        }
        OrliczOp::Membership => json!(membership(&phi, x)?),
        OrliczOp::Delta2 => unreachable!("handled above"),
    };
    emit_json(&json!({ "schema_version": SCHEMA_VERSION, "result": body }))
}

fn conjugate(utility: &str, ys: &[f64], report: Output) -> Result<()> {
    let u = parse_utility(utility)?;
    let pair = u.conjugate()?;
    let rows: Vec<Value> = ys
        .iter()
        .map(|&y| json!({ "y": y, "v": pair.spec.v(y), "v_hat": pair.v_hat(y) }))
        .collect();
    match report {
        Output::Csv => {
            let mut s = String::from("y,v,v_hat\n");
            for &y in ys {
                s += &format!(
                    "{},{},{}\n",
                    f17(y),
                    f17(pair.spec.v(y)),
                    f17(pair.v_hat(y))
                );
            }
            emit(&s)
        }
        _ => emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "utility": u.to_json()?,
            "case": pair.case_tag,
            "rows": rows,
        })),
    }
}

fn run_acceptance(seed: u64, report: Output, verbose: bool) -> std::result::Result<(), Failure> {
    let results = acceptance::run_all(seed);
    let failures = |r: &acceptance::CriterionResult| -> Vec<String> {
        r.details
            .iter()
            .filter(|d| d.starts_with("FAIL") && !d.contains("runtime"))
            .cloned()
            .collect()
    };
    match report {
        Output::Json => emit_json(&json!({
            "schema_version": SCHEMA_VERSION,
            "seed": seed,
            "criteria": results
                .iter()
                .map(|r| json!({ "id": r.id, "name": r.name, "passed": r.passed, "failures": failures(r) }))
                .collect::<Vec<_>>(),
        }))?,
        _ => {
            let mut s = String::new();
            for r in &results {
                if verbose {
                    s += &r.line();
                    s.push('\n');
                    for d in &r.details {
                        s += &format!("    {d}\n");
                    }
                } else {
                    s += &format!(
                        "{:>2}  {:<28} {}\n",
                        r.id,
                        r.name,
                        if r.passed { "PASS" } else { "FAIL" }
                    );
                }
            }
            emit(&s)?;
        }
    }
    match results.iter().find(|r| !r.passed) {
        Some(r) => Err(Failure::Acceptance(format!("{} ({})", r.id, r.name))),
        None => Ok(()),
    }
}
