//! Command-line front end: one binary over every module, reproducible seeds,
//! JSON or CSV reports, and the full resolved configuration echoed into each
//! output so any number in a report can be regenerated from the report alone.
//!
//! Floats print with 17 significant digits, rationals as exact `p/q` strings.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::certify::{certify, scan_k, CellStatus, ScanReport};
use crate::error::{Error, Result};
use crate::fourier::{brute_force_coeff, exact_table, FourierTable, ORACLE_CAP};
use crate::instance::{evaluate_instance, generate, Instance, InstanceEval};
use crate::ktw::vertex;
use crate::nopairwise::{build_and_solve, monarchy_check, verify_zero_expectation, BalanceSystem};
use crate::numeric::{fmt_rat, rat_to_f64, Rat};
use crate::predicate::{Assignment, Predicate};
use crate::rounding::{
    build_scheme, check_h_conditions, cubic_h, evaluate_scheme, main_term_expansion, truncated_h,
    BandReport, HKind, RoundingPolynomial,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum HChoice {
    /// 3x − 3x² + x³ (stationary at 1, but too loose for the closeness band).
    Cubic,
    /// 1 − (1−x)³·T_m(−Bx), the damped polynomial built for a δ₀ band.
    Trunc,
    /// Explicit coefficients via --coeffs.
    Custom,
}

/// Shared polynomial selection: which h, and its parameters.
#[derive(Args, Clone, Debug)]
struct HArgs {
    #[arg(long = "h", value_enum, default_value_t = HChoice::Cubic)]
    h: HChoice,
    /// Band parameter δ₀ as `p/q` in (0, 1]; required for trunc.
    #[arg(long)]
    delta0: Option<String>,
    /// Truncation-order hint for trunc (search starts here).
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated rationals a₁,a₂,… for custom (h = Σ a_i xⁱ).
    #[arg(long)]
    coeffs: Option<String>,
}

#[derive(clap::Parser, Debug)]
#[command(
    name = "presidential",
    version,
    about = "Rounding schemes for president-plus-citizens vote predicates",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Base seed; all randomness derives from it through fixed streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Accepted for interface stability; execution is single-threaded.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format; defaults to json (hplot defaults to csv).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Inspect a predicate or build one from a target weight.
    #[command(subcommand)]
    Predicate(PredicateCmd),
    /// Exact Fourier coefficients for every orbit up to a set size.
    Fourier(FourierArgs),
    /// Build rounding polynomials and schemes, check shape conditions.
    #[command(subcommand)]
    Round(RoundCmd),
    /// Vertex sweep + sampled interior + margin inequality for one cell.
    Certify(CertifyArgs),
    /// Sweep k for a δ₀ family and report the positivity threshold.
    Scan(ScanArgs),
    /// Bias-only balance systems and the monarchy counterexample.
    #[command(subcommand)]
    Nopairwise(NoPairwiseCmd),
    /// Planted constraint instances: generate and evaluate.
    #[command(subcommand)]
    Instance(InstanceCmd),
    /// Sample (Δ, h(1+Δ)) rows for external plotting.
    Hplot(HplotArgs),
}

#[derive(Subcommand, Debug)]
enum PredicateCmd {
    /// Parameters, margins, and orbit ranges of sign(a·x₁ + Σx_i).
    Info {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        a: u32,
    },
    /// Round a relative weight δ ∈ (0,1) to the nearest valid a for k.
    Normalize {
        #[arg(long)]
        k: u32,
        /// Target δ as `p/q`.
        #[arg(long)]
        delta: String,
    },
}

#[derive(Args, Debug)]
struct FourierArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    a: u32,
    /// Largest citizen-set size tabulated.
    #[arg(long)]
    tmax: u32,
    /// Cross-check every tabulated coefficient against 2^k brute force.
    #[arg(long)]
    oracle: bool,
}

#[derive(Subcommand, Debug)]
enum RoundCmd {
    /// Scheme coefficients c₁, c₃, c₅, … for a predicate and polynomial.
    Build {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        a: u32,
        #[command(flatten)]
        h: HArgs,
    },
    /// Stationarity, closeness-band, and range conditions for h.
    CheckH {
        #[command(flatten)]
        h: HArgs,
        /// Grid spacing for the band checks.
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
    },
    /// Expected value V at a vertex orbit, with the per-degree breakdown.
    Eval {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        a: u32,
        #[command(flatten)]
        h: HArgs,
        /// President vote, +1 or -1.
        #[arg(long, allow_hyphen_values = true)]
        x1: i8,
        /// Number of +1 citizens.
        #[arg(long)]
        t: u32,
    },
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    a: u32,
    #[command(flatten)]
    h: HArgs,
    /// Interior sample count.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Mixture support size per interior sample.
    #[arg(long, default_value_t = 3)]
    support: usize,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    kmin: u32,
    #[arg(long)]
    kmax: u32,
    /// Family lower bound δ₀ as `p/q`; also parameterizes trunc.
    #[arg(long)]
    delta0: String,
    #[arg(long = "h", value_enum, default_value_t = HChoice::Trunc)]
    h: HChoice,
    /// Truncation-order hint for trunc.
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated rationals for custom.
    #[arg(long)]
    coeffs: Option<String>,
}

#[derive(Subcommand, Debug)]
enum NoPairwiseCmd {
    /// Solve the odd-moment balance system over biased point types.
    Solve {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        a: u32,
        /// Largest balanced degree (odd).
        #[arg(long)]
        m: u32,
        /// Re-verify zero expectation against this many random odd tables.
        #[arg(long, default_value_t = 0)]
        zero_trials: usize,
    },
    /// Check the a = k−2 polytope against the two-ones-one-minus point.
    Monarchy {
        #[arg(long)]
        k: u32,
    },
}

#[derive(Subcommand, Debug)]
enum InstanceCmd {
    /// Sample a planted instance; --out writes the instance file itself.
    Gen {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        a: u32,
        #[arg(long)]
        n_vars: usize,
        #[arg(long)]
        clauses: usize,
        /// Fraction of clauses whose signs are re-randomized.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
    },
    /// Average a scheme over an instance's clause vertices.
    Eval {
        /// Instance file written by `instance gen`.
        #[arg(long)]
        file: PathBuf,
        #[command(flatten)]
        h: HArgs,
    },
}

#[derive(Args, Debug)]
struct HplotArgs {
    #[command(flatten)]
    h: HArgs,
    /// First Δ sample.
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    /// Last Δ sample (inclusive up to rounding).
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long)]
    step: f64,
}

/// 17-significant-digit floats, so reports round-trip bit-for-bit.
struct SciFloats;

impl serde_json::ser::Formatter for SciFloats {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

fn json_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFloats);
    v.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("serializer emits utf8")
}

fn f64_cell(v: f64) -> String {
    format!("{v:.16e}")
}

/// Exact rational as its canonical `p/q` (or integer) string.
fn rs(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

fn parse_rat(s: &str) -> Result<Rat> {
    crate::numeric::parse_rat(s).map_err(Error::Param)
}

fn parse_coeffs(s: &str) -> Result<Vec<Rat>> {
    s.split(',').map(parse_rat).collect()
}

fn make_h(args: &HArgs) -> Result<RoundingPolynomial> {
    match args.h {
        HChoice::Cubic => Ok(cubic_h()),
        HChoice::Trunc => {
            let d0 = args
                .delta0
                .as_deref()
                .ok_or_else(|| Error::Param("trunc needs --delta0".into()))?;
            truncated_h(&parse_rat(d0)?, args.m)
        }
        HChoice::Custom => {
            let coeffs = args
                .coeffs
                .as_deref()
                .ok_or_else(|| Error::Param("custom needs --coeffs".into()))?;
            Ok(RoundingPolynomial {
                coeffs: parse_coeffs(coeffs)?,
                kind: HKind::Custom,
            })
        }
    }
}

fn h_config(args: &HArgs) -> Value {
    json!({
        "h": match args.h { HChoice::Cubic => "cubic", HChoice::Trunc => "trunc", HChoice::Custom => "custom" },
        "delta0": args.delta0,
        "m": args.m,
        "coeffs": args.coeffs,
    })
}

fn h_report(h: &RoundingPolynomial) -> Value {
    let kind = match &h.kind {
        HKind::Cubic => json!("cubic"),
        HKind::TruncatedExp { delta0, b, m, eta } => json!({
            "trunc": { "delta0": rs(delta0), "b": rs(b), "m": m, "eta": eta }
        }),
        HKind::Custom => json!("custom"),
    };
    json!({
        "kind": kind,
        "degree": h.degree(),
        "coeffs": h.coeffs.iter().map(rs).collect::<Vec<_>>(),
    })
}

struct Rendered {
    config: Value,
    result: Value,
    /// Pre-shaped rows for CSV mode; generic flattening otherwise.
    csv: Option<String>,
    /// Subcommands whose natural shape is tabular default to CSV.
    prefers_csv: bool,
    /// Written verbatim to --out instead of the report (which then goes to
    /// stdout); lets `instance gen` emit the documented instance file format.
    artifact: Option<String>,
}

impl Rendered {
    fn new(config: Value, result: Value) -> Self {
        Rendered {
            config,
            result,
            csv: None,
            prefers_csv: false,
            artifact: None,
        }
    }
}

pub fn run() -> i32 {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let rendered = dispatch(&cli)?;
    let format = cli.format.unwrap_or(if rendered.prefers_csv {
        Format::Csv
    } else {
        Format::Json
    });
    let mut config = rendered.config;
    if let Some(obj) = config.as_object_mut() {
        obj.insert("seed".into(), json!(cli.seed));
        obj.insert("threads".into(), json!(cli.threads));
        obj.insert(
            "format".into(),
            json!(match format {
                Format::Json => "json",
                Format::Csv => "csv",
            }),
        );
    }
    let text = match format {
        Format::Json => json_string(&json!({ "config": config, "result": rendered.result })) + "\n",
        Format::Csv => {
            let mut out = format!("# config {}\n", json_string(&config));
            match rendered.csv {
                Some(rows) => out.push_str(&rows),
                None => out.push_str(&flat_csv(&rendered.result)),
            }
            out
        }
    };
    match (&cli.out, rendered.artifact) {
        (Some(path), Some(artifact)) => {
            std::fs::write(path, artifact)?;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
        (Some(path), None) => std::fs::write(path, text)?,
        (None, _) => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<Rendered> {
    match &cli.cmd {
        Cmd::Predicate(c) => run_predicate(c),
        Cmd::Fourier(c) => run_fourier(c),
        Cmd::Round(c) => run_round(c),
        Cmd::Certify(c) => run_certify(c, cli.seed),
        Cmd::Scan(c) => run_scan(c),
        Cmd::Nopairwise(c) => run_nopairwise(c, cli.seed),
        Cmd::Instance(c) => run_instance(c, cli.seed, cli.out.is_some()),
        Cmd::Hplot(c) => run_hplot(c),
    }
}

// ---------------------------------------------------------------- predicate

fn run_predicate(cmd: &PredicateCmd) -> Result<Rendered> {
    match *cmd {
        PredicateCmd::Info { k, a } => {
            let p = Predicate::new(k, a)?;
            let config = json!({ "subcommand": "predicate info", "k": k, "a": a });
            let result = json!({
                "k": p.k,
                "a": p.a,
                "delta": rs(&p.delta()),
                "delta_f64": rat_to_f64(&p.delta()),
                "u": p.u,
                "v": p.v,
                "tau": p.v - 1,
                "is_monarchy": p.is_monarchy(),
                "feasible_t": {
                    "president_plus": [*p.feasible_t(1).start(), *p.feasible_t(1).end()],
                    "president_minus": [*p.feasible_t(-1).start(), *p.feasible_t(-1).end()],
                },
            });
            Ok(Rendered::new(config, result))
        }
        PredicateCmd::Normalize { k, ref delta } => {
            let target = parse_rat(delta)?;
            let p = Predicate::from_delta(k, &target)?;
            let config = json!({ "subcommand": "predicate normalize", "k": k, "delta": delta });
            let achieved = p.delta();
            let result = json!({
                "k": p.k,
                "a": p.a,
                "delta": rs(&achieved),
                "delta_f64": rat_to_f64(&achieved),
                "offset": rs(&(&achieved - &target)),
            });
            Ok(Rendered::new(config, result))
        }
    }
}

// ------------------------------------------------------------------ fourier

fn oracle_report(p: &Predicate, f: &FourierTable) -> Result<Value> {
    if p.k > ORACLE_CAP {
        return Err(Error::Cap {
            k: p.k,
            cap: ORACLE_CAP,
        });
    }
    let mut checked = 0u32;
    let mut mismatches = Vec::new();
    let mut compare = |label: String, exact: &Rat, subset: &[u32]| -> Result<()> {
        let brute = brute_force_coeff(p, subset)?;
        checked += 1;
        if &brute != exact {
            mismatches.push(json!({ "orbit": label, "table": rs(exact), "brute": rs(&brute) }));
        }
        Ok(())
    };
    let pres: Vec<u32> = vec![1];
    compare("president".into(), &f.p_hat_president, &pres)?;
    for (&t, coeff) in &f.citizens {
        let subset: Vec<u32> = (2..2 + t).collect();
        compare(format!("{t} citizens"), coeff, &subset)?;
    }
    for (&t, coeff) in &f.president_citizens {
        let subset: Vec<u32> = std::iter::once(1).chain(2..2 + t).collect();
        compare(format!("president + {t} citizens"), coeff, &subset)?;
    }
    Ok(json!({
        "checked": checked,
        "agree": mismatches.is_empty(),
        "mismatches": mismatches,
    }))
}

fn run_fourier(args: &FourierArgs) -> Result<Rendered> {
    let p = Predicate::new(args.k, args.a)?;
    let f = exact_table(&p, args.tmax)?;
    let config = json!({
        "subcommand": "fourier", "k": args.k, "a": args.a,
        "tmax": args.tmax, "oracle": args.oracle,
    });
    let citizens: Vec<Value> = f
        .citizens
        .iter()
        .map(|(t, c)| json!({ "t": t, "exact": rs(c), "f64": rat_to_f64(c) }))
        .collect();
    let president_citizens: Vec<Value> = f
        .president_citizens
        .iter()
        .map(|(t, c)| json!({ "t": t, "exact": rs(c), "f64": rat_to_f64(c) }))
        .collect();
    let oracle = if args.oracle {
        Some(oracle_report(&p, &f)?)
    } else {
        None
    };
    let mut rows = String::from("kind,t,exact,f64\n");
    rows.push_str(&format!(
        "president,,{},{}\n",
        f.p_hat_president,
        f64_cell(rat_to_f64(&f.p_hat_president))
    ));
    for (t, c) in &f.citizens {
        rows.push_str(&format!("citizen,{t},{c},{}\n", f64_cell(rat_to_f64(c))));
    }
    for (t, c) in &f.president_citizens {
        rows.push_str(&format!(
            "president_citizen,{t},{c},{}\n",
            f64_cell(rat_to_f64(c))
        ));
    }
    let result = json!({
        "k": f.k,
        "a": f.a,
        "t_max": f.t_max,
        "president": { "exact": rs(&f.p_hat_president), "f64": rat_to_f64(&f.p_hat_president) },
        "citizens": citizens,
        "president_citizens": president_citizens,
        "sign_findings": f.sign_findings,
        "oracle": oracle,
    });
    Ok(Rendered {
        config,
        result,
        csv: Some(rows),
        prefers_csv: false,
        artifact: None,
    })
}

// -------------------------------------------------------------------- round

fn band_json(b: &BandReport) -> Value {
    json!({
        "points": b.points,
        "min_margin": b.min_margin,
        "argmin": b.argmin,
        "lipschitz_bound": b.lipschitz_bound,
        "excursion_slack": b.excursion_slack,
        "certified_between_grid": b.certified_between_grid,
        "ok": b.ok,
        "worst_violation": b.worst_violation.map(|(d, v)| json!({ "delta": d, "deficit": v })),
    })
}

fn orbit_assignment(p: &Predicate, x1: i8, t: u32) -> Result<Assignment> {
    if x1 != 1 && x1 != -1 {
        return Err(Error::Param(format!("x1 must be ±1, got {x1}")));
    }
    if t > p.k - 1 {
        return Err(Error::Range(format!("t = {t} exceeds citizen count {}", p.k - 1)));
    }
    let mut bits = vec![-1i8; p.k as usize];
    bits[0] = x1;
    for b in bits.iter_mut().take(1 + t as usize).skip(1) {
        *b = 1;
    }
    Assignment::new(bits)
}

fn run_round(cmd: &RoundCmd) -> Result<Rendered> {
    match cmd {
        RoundCmd::Build { k, a, h } => {
            let p = Predicate::new(*k, *a)?;
            let poly = make_h(h)?;
            let s = build_scheme(&p, poly)?;
            let mut config = json!({ "subcommand": "round build", "k": k, "a": a });
            merge(&mut config, h_config(h));
            let c_odd: Vec<Value> = s
                .c_odd
                .iter()
                .map(|(l, c)| {
                    json!({
                        "degree": 2 * l + 1,
                        "exact": rs(c),
                        "f64": rat_to_f64(c),
                    })
                })
                .collect();
            let result = json!({
                "k": p.k,
                "a": p.a,
                "h": h_report(&s.h),
                "c1": { "exact": rs(&s.c1), "f64": rat_to_f64(&s.c1) },
                "c_odd": c_odd,
                "epsilon_scale": s.epsilon_scale,
            });
            Ok(Rendered::new(config, result))
        }
        RoundCmd::CheckH { h, grid_step } => {
            let poly = make_h(h)?;
            let d0 = match (&poly.kind, &h.delta0) {
                (HKind::TruncatedExp { delta0, .. }, _) => delta0.clone(),
                (_, Some(s)) => parse_rat(s)?,
                (_, None) => return Err(Error::Param("check-h needs --delta0".into())),
            };
            let mut config = json!({ "subcommand": "round check-h", "grid_step": grid_step });
            merge(&mut config, h_config(h));
            let rep = check_h_conditions(&poly, &d0, *grid_step)?;
            let result = json!({
                "h": h_report(&poly),
                "delta0": rs(&d0),
                "stationary_ok": rep.stationary_ok,
                "unit_value_ok": rep.unit_value_ok,
                "closeness": band_json(&rep.closeness),
                "range": band_json(&rep.range),
                "passed": rep.passed,
            });
            Ok(Rendered::new(config, result))
        }
        RoundCmd::Eval { k, a, h, x1, t } => {
            let p = Predicate::new(*k, *a)?;
            let poly = make_h(h)?;
            let s = build_scheme(&p, poly)?;
            let f = exact_table(&p, (2 * s.h.degree() + 1).max(1) as u32)?;
            let x = orbit_assignment(&p, *x1, *t)?;
            if p.evaluate(&x)? != 1 {
                return Err(Error::InfeasibleOrbit { x1: *x1, t: *t });
            }
            let pt = vertex(&p, &x)?;
            let breakdown = evaluate_scheme(&s, &f, &pt)?;
            let fast = crate::certify::evaluate_vertex_fast(&s, &f, *x1, *t)?;
            let main = main_term_expansion(&s, &f, &pt)?;
            let mut config = json!({ "subcommand": "round eval", "k": k, "a": a, "x1": x1, "t": t });
            merge(&mut config, h_config(h));
            let result = json!({
                "x1": x1,
                "t": t,
                "total": breakdown.total,
                "per_degree": breakdown.per_degree.iter()
                    .map(|(d, v)| json!({ "degree": d, "value": v }))
                    .collect::<Vec<_>>(),
                "fast_total": fast,
                "main_term": {
                    "main": main.main,
                    "residual": main.residual,
                    "delta": main.delta,
                    "degree1": main.degree1,
                },
            });
            Ok(Rendered::new(config, result))
        }
    }
}

// ------------------------------------------------------------------ certify

fn run_certify(args: &CertifyArgs, seed: u64) -> Result<Rendered> {
    let p = Predicate::new(args.k, args.a)?;
    let poly = make_h(&args.h)?;
    let s = build_scheme(&p, poly)?;
    let f = exact_table(&p, (2 * s.h.degree() + 1).max(1) as u32)?;
    let rep = certify(&s, &f, args.samples, args.support, seed)?;
    let mut config = json!({
        "subcommand": "certify", "k": args.k, "a": args.a,
        "samples": args.samples, "support": args.support,
    });
    merge(&mut config, h_config(&args.h));
    let result = json!({
        "k": rep.k,
        "a": rep.a,
        "min_vertex_value": rs(&rep.min_vertex_value),
        "min_vertex_value_f64": rat_to_f64(&rep.min_vertex_value),
        "argmin_orbit": { "x1": rep.argmin_orbit.0, "t": rep.argmin_orbit.1 },
        "interior": {
            "n_points": rep.interior.n_points,
            "support_size": rep.interior.support_size,
            "seed": rep.interior.seed,
            "min": rep.interior.min,
            "argmin_index": rep.interior.argmin_index,
            "case_split": {
                "high_count": rep.interior.case_split.high_count,
                "high_min": rep.interior.case_split.high_min,
                "low_count": rep.interior.case_split.low_count,
                "low_min": rep.interior.case_split.low_min,
                "alpha_findings": rep.interior.case_split.alpha_findings,
            },
        },
        "margin": {
            "ok": rep.margin.ok,
            "worst": { "x1": rep.margin.worst.x1, "t": rep.margin.worst.t, "margin": rs(&rep.margin.worst.margin) },
            "failures": rep.margin.failures.iter()
                .map(|r| json!({ "x1": r.x1, "t": r.t, "margin": rs(&r.margin) }))
                .collect::<Vec<_>>(),
        },
        "delta_bounds": { "min": rs(&rep.delta_bounds.0), "max": rs(&rep.delta_bounds.1) },
        "passed": rep.passed,
    });
    Ok(Rendered::new(config, result))
}

// --------------------------------------------------------------------- scan

fn scan_csv(rep: &ScanReport) -> String {
    let mut rows =
        String::from("k,a,delta,min_vertex_value,argmin_x1,argmin_t,margin_ineq,delta_min,delta_max,passed\n");
    let opt_rat = |r: &Option<Rat>| r.as_ref().map(|x| x.to_string()).unwrap_or_default();
    for r in &rep.rows {
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            r.a.map(|a| a.to_string()).unwrap_or_default(),
            opt_rat(&r.delta),
            opt_rat(&r.min_vertex_value),
            r.argmin_orbit.map(|(x1, _)| x1.to_string()).unwrap_or_default(),
            r.argmin_orbit.map(|(_, t)| t.to_string()).unwrap_or_default(),
            opt_rat(&r.margin_ineq),
            r.delta_bounds.as_ref().map(|(lo, _)| lo.to_string()).unwrap_or_default(),
            r.delta_bounds.as_ref().map(|(_, hi)| hi.to_string()).unwrap_or_default(),
            r.passed.map(|p| p.to_string()).unwrap_or_default(),
        ));
    }
    match rep.k_star {
        Some(k) => rows.push_str(&format!("# k_star {k}\n")),
        None => rows.push_str("# k_star none\n"),
    }
    rows
}

fn run_scan(args: &ScanArgs) -> Result<Rendered> {
    let d0 = parse_rat(&args.delta0)?;
    let hargs = HArgs {
        h: args.h,
        delta0: Some(args.delta0.clone()),
        m: args.m,
        coeffs: args.coeffs.clone(),
    };
    let poly = make_h(&hargs)?;
    let rep = scan_k(&d0, &poly, args.kmin, args.kmax)?;
    let mut config = json!({
        "subcommand": "scan", "kmin": args.kmin, "kmax": args.kmax, "delta0": args.delta0,
    });
    merge(&mut config, h_config(&hargs));
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| {
            let status = match &r.status {
                CellStatus::Ok => json!("ok"),
                CellStatus::NoPredicate => json!("no_predicate"),
                CellStatus::NoScheme(reason) => json!({ "no_scheme": reason }),
            };
            json!({
                "k": r.k,
                "a": r.a,
                "status": status,
                "delta": r.delta.as_ref().map(rs),
                "min_vertex_value": r.min_vertex_value.as_ref().map(rs),
                "min_vertex_value_f64": r.min_vertex_value.as_ref().map(rat_to_f64),
                "argmin_orbit": r.argmin_orbit.map(|(x1, t)| json!({ "x1": x1, "t": t })),
                "margin_ineq": r.margin_ineq.as_ref().map(rs),
                "delta_bounds": r.delta_bounds.as_ref()
                    .map(|(lo, hi)| json!({ "min": rs(lo), "max": rs(hi) })),
                "passed": r.passed,
            })
        })
        .collect();
    let result = json!({ "k_star": rep.k_star, "rows": rows });
    Ok(Rendered {
        config,
        result,
        csv: Some(scan_csv(&rep)),
        prefers_csv: false,
        artifact: None,
    })
}

// --------------------------------------------------------------- nopairwise

fn balance_json(sys: &BalanceSystem) -> Value {
    let types: Vec<Value> = sys
        .types
        .iter()
        .map(|t| {
            json!({
                "label": t.label,
                "president_bias": t.president_bias,
                "ones": t.ones,
                "minus_ones": t.minus_ones,
                "witness_x": t.witness.0.bits(),
                "witness_y": t.witness.1.bits(),
            })
        })
        .collect();
    json!({
        "k": sys.predicate.k,
        "a": sys.predicate.a,
        "degrees": sys.degrees,
        "types": types,
        "matrix": sys.matrix.iter()
            .map(|row| row.iter().map(rs).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "solution": sys.solution.iter().map(rs).collect::<Vec<_>>(),
        "residuals": sys.residuals.iter().map(rs).collect::<Vec<_>>(),
        "alternative_sign_residuals": sys.alternative_sign_residuals.iter().map(rs).collect::<Vec<_>>(),
        "full_to_filler_ratio": sys.full_to_filler_ratio.as_ref().map(rs),
        "full_to_filler_ratio_f64": sys.full_to_filler_ratio.as_ref().map(rat_to_f64),
    })
}

fn run_nopairwise(cmd: &NoPairwiseCmd, seed: u64) -> Result<Rendered> {
    match *cmd {
        NoPairwiseCmd::Solve {
            k,
            a,
            m,
            zero_trials,
        } => {
            let p = Predicate::new(k, a)?;
            let sys = build_and_solve(&p, m)?;
            let zero = if zero_trials > 0 {
                let f = exact_table(&p, m)?;
                let rep = verify_zero_expectation(&sys, &f, zero_trials, seed)?;
                Some(json!({
                    "trials": rep.trials,
                    "checks": rep.checks,
                    "all_zero": rep.all_zero,
                    "max_abs": rs(&rep.max_abs),
                }))
            } else {
                None
            };
            let config = json!({
                "subcommand": "nopairwise solve", "k": k, "a": a, "m": m,
                "zero_trials": zero_trials,
            });
            let mut result = balance_json(&sys);
            result
                .as_object_mut()
                .expect("balance report is an object")
                .insert("zero_expectation".into(), zero.unwrap_or(Value::Null));
            Ok(Rendered::new(config, result))
        }
        NoPairwiseCmd::Monarchy { k } => {
            let rep = monarchy_check(k)?;
            let config = json!({ "subcommand": "nopairwise monarchy", "k": k });
            let result = json!({
                "k": rep.k,
                "a": rep.a,
                "vertices_checked": rep.vertices_checked,
                "all_vertices_ok": rep.all_vertices_ok,
                "candidate": rep.candidate.iter().map(rs).collect::<Vec<_>>(),
                "candidate_inside": rep.candidate_inside,
                "violating_coordinate": rep.violating_coordinate,
            });
            Ok(Rendered::new(config, result))
        }
    }
}

// ----------------------------------------------------------------- instance

fn instance_eval_json(ev: &InstanceEval) -> Value {
    json!({
        "n_clauses": ev.n_clauses,
        "avg_v": ev.avg_v,
        "min_v": ev.min_v,
        "max_abs_v": ev.max_abs_v,
        "planted_satisfied": ev.planted_satisfied,
        "repaired": ev.repaired,
        "proxy": ev.proxy,
        "caveat": ev.caveat,
    })
}

fn run_instance(cmd: &InstanceCmd, seed: u64, out_takes_instance: bool) -> Result<Rendered> {
    match cmd {
        InstanceCmd::Gen {
            k,
            a,
            n_vars,
            clauses,
            eps,
        } => {
            let p = Predicate::new(*k, *a)?;
            let inst = generate(&p, *n_vars, *clauses, *eps, seed)?;
            let satisfied = inst.satisfied_by_planted()?;
            let config = json!({
                "subcommand": "instance gen", "k": k, "a": a,
                "n_vars": n_vars, "clauses": clauses, "eps": eps,
            });
            let mut result = json!({
                "n_vars": inst.n_vars,
                "k": inst.k,
                "a": inst.a,
                "n_clauses": inst.clauses.len(),
                "eps": inst.eps,
                "planted_satisfied": satisfied,
            });
            let mut rendered = if out_takes_instance {
                let artifact = inst.to_json()? + "\n";
                let mut r = Rendered::new(config, Value::Null);
                r.artifact = Some(artifact);
                r
            } else {
                result
                    .as_object_mut()
                    .expect("summary is an object")
                    .insert("instance".into(), serde_json::to_value(&inst)?);
                Rendered::new(config, Value::Null)
            };
            rendered.result = result;
            Ok(rendered)
        }
        InstanceCmd::Eval { file, h } => {
            let text = std::fs::read_to_string(file)?;
            let inst = Instance::from_json(&text)?;
            let p = inst.predicate()?;
            let poly = make_h(h)?;
            let s = build_scheme(&p, poly)?;
            let f = exact_table(&p, (2 * s.h.degree() + 1).max(1) as u32)?;
            let ev = evaluate_instance(&inst, &s, &f)?;
            let mut config = json!({
                "subcommand": "instance eval",
                "file": file.display().to_string(),
            });
            merge(&mut config, h_config(h));
            Ok(Rendered::new(config, instance_eval_json(&ev)))
        }
    }
}

// -------------------------------------------------------------------- hplot

fn run_hplot(args: &HplotArgs) -> Result<Rendered> {
    if !(args.step > 0.0) || !args.step.is_finite() {
        return Err(Error::Param(format!("step must be positive, got {}", args.step)));
    }
    if args.to < args.from {
        return Err(Error::Param("empty range: --to below --from".into()));
    }
    let poly = make_h(&args.h)?;
    let dd = poly.dd_value();
    let n = ((args.to - args.from) / args.step).round() as usize;
    let mut rows = String::from("delta,h\n");
    let mut points = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let delta = args.from + i as f64 * args.step;
        let h = dd
            .eval(crate::numeric::Dd::from_f64(1.0 + delta))
            .to_f64();
        rows.push_str(&format!("{},{}\n", f64_cell(delta), f64_cell(h)));
        points.push(json!({ "delta": delta, "h": h }));
    }
    let mut config = json!({
        "subcommand": "hplot", "from": args.from, "to": args.to, "step": args.step,
    });
    merge(&mut config, h_config(&args.h));
    let result = json!({ "count": points.len(), "points": points });
    Ok(Rendered {
        config,
        result,
        csv: Some(rows),
        prefers_csv: true,
        artifact: None,
    })
}

// ------------------------------------------------------------------ helpers

fn merge(into: &mut Value, from: Value) {
    if let (Some(obj), Value::Object(src)) = (into.as_object_mut(), from) {
        for (k, v) in src {
            obj.insert(k, v);
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, inner, out);
            }
        }
        Value::Array(items) => {
            for (i, inner) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), inner, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Number(n) => {
            let cell = match n.as_f64() {
                Some(f) if !n.is_i64() && !n.is_u64() => f64_cell(f),
                _ => n.to_string(),
            };
            out.push((prefix.to_string(), cell));
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
    }
}

/// One header row and one value row with dotted column names.
fn flat_csv(v: &Value) -> String {
    let mut cells = Vec::new();
    flatten("", v, &mut cells);
    let header: Vec<String> = cells.iter().map(|(k, _)| csv_escape(k)).collect();
    let row: Vec<String> = cells.iter().map(|(_, v)| csv_escape(v)).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing_round_trips() {
        assert_eq!(parse_rat("3/4").unwrap(), crate::numeric::rat(3, 4));
        assert_eq!(parse_rat("-5").unwrap(), crate::numeric::rat(-5, 1));
        assert_eq!(parse_rat(" 7 / 2 ").unwrap(), crate::numeric::rat(7, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert_eq!(
            parse_coeffs("1,-3/2,0").unwrap(),
            vec![
                crate::numeric::rat(1, 1),
                crate::numeric::rat(-3, 2),
                crate::numeric::rat(0, 1)
            ]
        );
    }

    #[test]
    fn float_cells_carry_17_digits() {
        assert_eq!(f64_cell(0.5), "5.0000000000000000e-1");
        assert_eq!(f64_cell(1.0 / 3.0), "3.3333333333333331e-1");
        let v = json!({ "x": 0.1 });
        assert_eq!(json_string(&v), "{\"x\":1.0000000000000001e-1}");
    }

    #[test]
    fn flattening_uses_dotted_names() {
        let v = json!({ "a": { "b": 1, "c": [true, null] }, "d": "x,y" });
        let csv = flat_csv(&v);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "a.b,a.c.0,a.c.1,d");
        assert_eq!(lines.next().unwrap(), "1,true,,\"x,y\"");
    }

    #[test]
    fn orbit_assignment_places_ones_first() {
        let p = Predicate::new(6, 2).unwrap();
        let x = orbit_assignment(&p, -1, 3).unwrap();
        assert_eq!(x.bits(), &[-1, 1, 1, 1, -1, -1]);
        assert!(orbit_assignment(&p, 0, 3).is_err());
        assert!(orbit_assignment(&p, 1, 6).is_err());
    }
}
