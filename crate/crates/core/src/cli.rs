//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure, 2 bad arguments,
//! 3 refused by the work budget. Every failure writes one line
//! `error kind=<kind> message="<text>"` to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rug::{Float, Rational};
use serde::Serialize;
use serde_json::{json, Value};

use crate::asymptotics::{self, FMethod, RegimeThresholds};
use crate::budget::WorkBudget;
use crate::chain_dp;
use crate::error::{invalid, Error, Result};
use crate::formulas::{self, ClosedFormOptions, SpectralVariant};
use crate::genfun;
use crate::numeric::{float_to_decimal, parse_rational, rational_to_f64, MIN_PRECISION};
use crate::oracle;
use crate::simulator::{self, MonteCarloConfig};
use crate::trig_core::{self, SpectralTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_BAD_ARGS: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "invwalk", version, about = "Expected inversions of random adjacent-transposition walks")]
pub struct RunRequest {
    #[command(subcommand)]
    pub command: Command,

    /// Output format (each subcommand has its own default)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the primary output here instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Drop the "meta" object (timings, notes) from JSON output
    #[arg(long, global = true)]
    pub no_meta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Normalize {
    None,
    N,
    SqrtMn,
    M2,
    Limit,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact value from the triangular recursion
    Exact {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
    },
    /// Spectral closed form
    Closed {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = MIN_PRECISION)]
        precision: u32,
        /// theorem1, ser2 or ser3
        #[arg(long, default_value = "theorem1")]
        variant: String,
    },
    /// Eriksen's binomial formula, exact
    Eriksen {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
    },
    /// Rational generating function
    Gf {
        #[arg(long)]
        m: usize,
        /// Move probability of the lazy chain
        #[arg(long)]
        p: Option<String>,
        /// Also print the first N+1 series coefficients
        #[arg(long)]
        series: Option<usize>,
        /// Match the denominator roots against the spectrum
        #[arg(long)]
        check_poles: bool,
    },
    /// Two-sided bounds (m >= 3)
    Bounds {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
    },
    /// Lazy chain, exact
    Lazy {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
        /// Move probability, default m/(m+1)
        #[arg(long)]
        p: Option<String>,
    },
    /// Monte Carlo estimate
    Simulate {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        lazy_p: Option<String>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Regime laws
    Asym {
        #[arg(long, requires = "n")]
        m: Option<usize>,
        #[arg(long, requires = "m")]
        n: Option<u64>,
        /// Evaluate f(KAPPA)
        #[arg(long, value_name = "KAPPA")]
        f: Option<f64>,
        /// Evaluate g(KAPPA)
        #[arg(long, value_name = "KAPPA")]
        g: Option<f64>,
        /// Check the limits shared by the three regimes
        #[arg(long)]
        consistency: bool,
        /// series or quadrature, for --f
        #[arg(long, default_value = "series")]
        method: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Cross-method verification suite
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
    },
    /// Table of values over a grid of m, with n given as an expression in m
    Sweep {
        /// Comma list of values or ranges "start:end[:step]"
        #[arg(long)]
        m: String,
        /// Expressions in m, e.g. "m^2" or "2*m^3*log(m)"; comma list, repeatable
        #[arg(long, required = true, value_delimiter = ',')]
        n: Vec<String>,
        /// Comma list of dp, dp-float, closed, eriksen, lower, upper, predict, simulate
        #[arg(long, default_value = "dp-float,closed")]
        methods: String,
        #[arg(long, default_value_t = MIN_PRECISION)]
        precision: u32,
        #[arg(long, value_enum, default_value_t = Normalize::None)]
        normalize: Normalize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

/// One line of tabular output; the CSV header is
/// `m,n,method,value,precision_bits,flags`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub m: Option<usize>,
    pub n: Option<u64>,
    pub method: String,
    pub value: String,
    pub precision_bits: Option<u32>,
    pub flags: String,
}

enum Output {
    Text(String),
    Json(Value),
    Csv(Vec<Row>),
}

enum Failure {
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn decimal_digits(precision: u32) -> usize {
    ((precision as f64) * std::f64::consts::LOG10_2).floor() as usize
}

fn float_string(x: &Float) -> String {
    float_to_decimal(x, decimal_digits(x.prec()))
}

fn f64_string(x: f64) -> String {
    format!("{x}")
}

fn parse_probability(s: &str) -> Result<Rational> {
    match parse_rational(s) {
        Some(q) => Ok(q),
        None => invalid(format!("cannot parse {s:?} as an exact number")),
    }
}

fn row(m: usize, n: u64, method: &str, value: String, precision: Option<u32>, flags: &str) -> Row {
    Row {
        m: Some(m),
        n: Some(n),
        method: method.into(),
        value,
        precision_bits: precision,
        flags: flags.into(),
    }
}

/// Parses argv (including the program name), runs the request and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let request = match RunRequest::try_parse_from(args) {
        Ok(r) => r,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let detail = e.to_string();
            let message = detail
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
                .collect::<Vec<_>>()
                .join(" ");
            let message = message.trim_start_matches("error: ");
            let _ = writeln!(err, "error kind=invalid-argument message={}", quote(message));
            return EXIT_BAD_ARGS;
        }
    };
    execute(&request, out, err)
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).unwrap_or_else(|_| "\"\"".into())
}

pub fn execute(request: &RunRequest, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = WorkBudget::from_env()
        .map_err(Failure::Lib)
        .and_then(|budget| dispatch(request, budget, err)).and_then(|(output, code)| {
        let text = render(output, request.no_meta)?;
        let written = match &request.output {
            Some(path) => std::fs::write(path, text.as_bytes()),
            None => out.write_all(text.as_bytes()),
        };
        written.map_err(|e| Failure::Lib(Error::InvalidArgument(format!("cannot write output: {e}"))))?;
        Ok(code)
    });
    match result {
        Ok(Some(failed)) => {
            let _ = writeln!(err, "error kind=verification-failed message={}", quote(&format!("{failed} check(s) failed")));
            EXIT_VERIFY_FAILED
        }
        Ok(None) => EXIT_OK,
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error kind={} message={}", e.kind(), quote(&e.to_string()));
            match e {
                Error::BudgetExceeded { .. } => EXIT_BUDGET,
                Error::Internal(_) => EXIT_VERIFY_FAILED,
                _ => EXIT_BAD_ARGS,
            }
        }
    }
}

fn render(output: Output, no_meta: bool) -> std::result::Result<String, Failure> {
    Ok(match output {
        Output::Text(s) => {
            if s.ends_with('\n') {
                s
            } else {
                s + "\n"
            }
        }
        Output::Json(mut v) => {
            if no_meta {
                if let Value::Object(map) = &mut v {
                    map.shift_remove("meta");
                }
            }
            let mut s = serde_json::to_string(&v).map_err(|e| Error::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Output::Csv(rows) => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(["m", "n", "method", "value", "precision_bits", "flags"])
                .map_err(|e| Error::Internal(e.to_string()))?;
            for r in rows {
                w.serialize(r).map_err(|e| Error::Internal(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))?
        }
    })
}

type Dispatched = std::result::Result<(Output, Option<usize>), Failure>;

fn dispatch(req: &RunRequest, budget: WorkBudget, err: &mut dyn Write) -> Dispatched {
    let fmt = |default: Format| req.format.unwrap_or(default);
    let ok = |o: Output| Ok((o, None));
    match &req.command {
        Command::Exact { m, n } => {
            let v = chain_dp::expected_inversions_dp(*m, *n, budget)?;
            ok(exact_output(fmt(Format::Text), "dp", *m, *n, &v, None))
        }
        Command::Eriksen { m, n } => {
            let v = formulas::eriksen(*m, *n, budget)?;
            ok(exact_output(fmt(Format::Text), "eriksen", *m, *n, &v, None))
        }
        Command::Lazy { m, n, p } => {
            let p = match p {
                Some(s) => parse_probability(s)?,
                None => formulas::default_laziness(*m),
            };
            let v = formulas::aperiodic_expected(*m, *n, &p, budget)?;
            ok(exact_output(fmt(Format::Text), "lazy", *m, *n, &v, Some(&p)))
        }
        Command::Closed {
            m,
            n,
            precision,
            variant,
        } => {
            let variant: SpectralVariant = variant.parse()?;
            if *precision < MIN_PRECISION {
                return Err(Error::InvalidArgument(format!("precision must be at least {MIN_PRECISION}")).into());
            }
            budget.check("closed form", (*m as u128 + 1).pow(2) * 64)?;
            let opts = ClosedFormOptions::with_precision(*precision).variant(variant);
            let v = formulas::closed_form(*m, *n, &opts)?;
            let value = float_string(&v.value);
            let flags = if v.saturated { "saturated" } else { "" };
            ok(match fmt(Format::Text) {
                Format::Text => Output::Text(value),
                Format::Json => Output::Json(json!({
                    "method": "closed",
                    "m": m,
                    "n": n,
                    "value": value,
                    "precision_bits": precision,
                    "variant": variant.name(),
                    "saturated": v.saturated,
                })),
                Format::Csv => Output::Csv(vec![row(*m, *n, "closed", value, Some(*precision), flags)]),
            })
        }
        Command::Bounds { m, n } => {
            let b = formulas::bounds(*m, *n)?;
            ok(match fmt(Format::Text) {
                Format::Text => Output::Text(format!("lower={} upper={}", f64_string(b.lower), f64_string(b.upper))),
                Format::Json => Output::Json(json!({
                    "method": "bounds",
                    "m": m,
                    "n": n,
                    "lower": f64_string(b.lower),
                    "upper": f64_string(b.upper),
                    "precision_bits": 53,
                })),
                Format::Csv => Output::Csv(vec![
                    row(*m, *n, "lower", f64_string(b.lower), Some(53), ""),
                    row(*m, *n, "upper", f64_string(b.upper), Some(53), ""),
                ]),
            })
        }
        Command::Gf {
            m,
            p,
            series,
            check_poles,
        } => ok(gf_command(*m, p.as_deref(), *series, *check_poles, fmt(Format::Text))?),
        Command::Simulate {
            m,
            n,
            trials,
            seed,
            lazy_p,
            workers,
        } => {
            let cfg = MonteCarloConfig {
                m: *m,
                n: *n,
                trials: *trials,
                seed: *seed,
                lazy_p: lazy_p.as_deref().map(parse_probability).transpose()?,
                workers: *workers,
            };
            let s = simulator::monte_carlo(&cfg, budget)?;
            let flags = format!("trials={};seed={}", s.trials, s.seed);
            ok(match fmt(Format::Json) {
                Format::Text => Output::Text(format!(
                    "mean={} stderr={} variance={}",
                    s.mean, s.stderr, s.variance
                )),
                Format::Json => Output::Json(json!({
                    "method": "simulate",
                    "m": s.m,
                    "n": s.n,
                    "trials": s.trials,
                    "lazy_p": s.lazy_p,
                    "mean": s.mean,
                    "variance": s.variance,
                    "stderr": s.stderr,
                    "seed": s.seed,
                    "meta": {"elapsed": s.elapsed},
                })),
                Format::Csv => Output::Csv(vec![
                    row(s.m, s.n, "simulate-mean", f64_string(s.mean), Some(53), &flags),
                    row(s.m, s.n, "simulate-stderr", f64_string(s.stderr), Some(53), &flags),
                ]),
            })
        }
        Command::Asym {
            m,
            n,
            f,
            g,
            consistency,
            method,
            tol,
        } => ok(asym_command(*m, *n, *f, *g, *consistency, method, *tol, budget, fmt(Format::Json))?),
        Command::Verify { level } => {
            let start = Instant::now();
            let checks = verification_suite(*level, budget, &mut |c: &CheckOutcome| {
                let _ = writeln!(err, "{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            });
            let failed = checks.iter().filter(|c| !c.passed).count();
            let output = match fmt(Format::Text) {
                Format::Json => Output::Json(json!({
                    "level": if *level == Level::Quick { "quick" } else { "full" },
                    "passed": failed == 0,
                    "checks": checks,
                    "meta": {"elapsed": start.elapsed().as_secs_f64()},
                })),
                _ => Output::Text(
                    checks
                        .iter()
                        .map(|c| format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
                        .collect::<Vec<_>>()
                        .join("\n"),
                ),
            };
            Ok((output, (failed > 0).then_some(failed)))
        }
        Command::Sweep {
            m,
            n,
            methods,
            precision,
            normalize,
            trials,
            seed,
            workers,
        } => {
            let start = Instant::now();
            let spec = SweepSpec {
                ms: parse_m_list(m)?,
                ns: n.iter().map(|e| NExpr::parse(e)).collect::<Result<Vec<_>>>()?,
                methods: methods
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<SweepMethod>>>()?,
                precision: *precision,
                normalize: *normalize,
                trials: *trials,
                seed: *seed,
                workers: *workers,
            };
            let rows = sweep(&spec, budget)?;
            ok(match fmt(Format::Csv) {
                Format::Json => Output::Json(json!({
                    "rows": rows,
                    "meta": {"elapsed": start.elapsed().as_secs_f64()},
                })),
                Format::Text | Format::Csv => Output::Csv(rows),
            })
        }
    }
}

fn exact_output(format: Format, method: &str, m: usize, n: u64, v: &Rational, p: Option<&Rational>) -> Output {
    match format {
        Format::Text => Output::Text(v.to_string()),
        Format::Json => {
            let mut obj = json!({"method": method, "m": m, "n": n});
            if let Some(p) = p {
                obj["p"] = json!(p.to_string());
            }
            obj["value"] = json!(v.to_string());
            Output::Json(obj)
        }
        Format::Csv => {
            let flags = match p {
                Some(p) => format!("exact;p={p}"),
                None => "exact".into(),
            };
            Output::Csv(vec![row(m, n, method, v.to_string(), None, &flags)])
        }
    }
}

fn gf_command(m: usize, p: Option<&str>, series: Option<usize>, check_poles: bool, format: Format) -> Result<Output> {
    let mut rf = genfun::build_gf(m)?;
    let p = p.map(parse_probability).transpose()?;
    if let Some(p) = &p {
        rf = genfun::aperiodic_gf(&rf, m, p)?;
    }
    let poles = if check_poles {
        let table = SpectralTable::new(m, 128)?;
        Some(match &p {
            Some(p) => genfun::pole_check_lazy(&rf, &table, p, genfun::POLE_TOLERANCE)?,
            None => genfun::pole_check(&rf, &table, genfun::POLE_TOLERANCE)?,
        })
    } else {
        None
    };
    let text = rf.to_string();
    Ok(match format {
        Format::Text => {
            let mut lines = vec![text];
            if let Some(n) = series {
                let s: Vec<String> = genfun::series(&rf, n).iter().map(|c| c.to_string()).collect();
                lines.push(format!("series: {}", s.join(", ")));
            }
            if let Some(r) = &poles {
                lines.push(format!(
                    "poles: {} ({} of degree {} unmatched)",
                    if r.passed { "ok" } else { "unmatched" },
                    r.unmatched_degree,
                    r.denominator_degree
                ));
            }
            Output::Text(lines.join("\n"))
        }
        Format::Json => {
            let coeffs = |poly: &genfun::Polynomial| poly.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>();
            let mut obj = json!({
                "m": m,
                "text": text,
                "numerator": coeffs(rf.numerator()),
                "denominator": coeffs(rf.denominator()),
            });
            if let Some(p) = &p {
                obj["p"] = json!(p.to_string());
            }
            if let Some(n) = series {
                obj["series"] = json!(genfun::series(&rf, n).iter().map(|c| c.to_string()).collect::<Vec<_>>());
            }
            if let Some(r) = &poles {
                obj["poles"] = serde_json::to_value(r).map_err(|e| Error::Internal(e.to_string()))?;
            }
            Output::Json(obj)
        }
        Format::Csv => {
            let n = series.unwrap_or(20);
            let flags = match &p {
                Some(p) => format!("exact;p={p}"),
                None => "exact".into(),
            };
            Output::Csv(
                genfun::series(&rf, n)
                    .iter()
                    .enumerate()
                    .map(|(k, c)| row(m, k as u64, "gf", c.to_string(), None, &flags))
                    .collect(),
            )
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn asym_command(
    m: Option<usize>,
    n: Option<u64>,
    f: Option<f64>,
    g: Option<f64>,
    consistency: bool,
    method: &str,
    tol: f64,
    budget: WorkBudget,
    format: Format,
) -> Result<Output> {
    let modes = usize::from(m.is_some()) + usize::from(f.is_some()) + usize::from(g.is_some()) + usize::from(consistency);
    if modes != 1 {
        return invalid("asym needs exactly one of --m/--n, --f, --g, --consistency");
    }
    let scalar = |name: &str, kappa: f64, value: f64| match format {
        Format::Csv => Output::Csv(vec![Row {
            m: None,
            n: None,
            method: name.into(),
            value: f64_string(value),
            precision_bits: Some(53),
            flags: format!("kappa={kappa}"),
        }]),
        Format::Text => Output::Text(f64_string(value)),
        Format::Json => Output::Json(json!({"function": name, "kappa": kappa, "value": value})),
    };
    if let Some(kappa) = f {
        let method: FMethod = method.parse()?;
        return Ok(scalar("f", kappa, asymptotics::f_kappa(kappa, method, tol)?));
    }
    if let Some(kappa) = g {
        return Ok(scalar("g", kappa, asymptotics::g_kappa(kappa, tol)?));
    }
    if consistency {
        let r = asymptotics::consistency_limits(tol)?;
        return Ok(match format {
            Format::Text => {
                let mut lines = vec![format!("limit sqrt(2/pi) = {}", r.limit)];
                for s in &r.f_side {
                    lines.push(format!("sqrt(k) f(k)  k={}: {} (deviation {:.4})", s.kappa, s.value, s.deviation));
                }
                for s in &r.g_side {
                    lines.push(format!("g(k)/sqrt(k)  k={}: {} (deviation {:.4})", s.kappa, s.value, s.deviation));
                }
                lines.push(format!("monotone: f {} g {}", r.f_monotone, r.g_monotone));
                Output::Text(lines.join("\n"))
            }
            Format::Json => Output::Json(serde_json::to_value(&r).map_err(|e| Error::Internal(e.to_string()))?),
            Format::Csv => Output::Csv(
                r.f_side
                    .iter()
                    .map(|s| ("sqrt_kappa_f", s))
                    .chain(r.g_side.iter().map(|s| ("g_over_sqrt_kappa", s)))
                    .map(|(name, s)| Row {
                        m: None,
                        n: None,
                        method: name.into(),
                        value: f64_string(s.value),
                        precision_bits: Some(53),
                        flags: format!("kappa={}", s.kappa),
                    })
                    .collect(),
            ),
        });
    }
    let (m, n) = (m.expect("mode checked"), n.expect("clap requires n with m"));
    let est = asymptotics::predict(m, n)?;
    // compare with the closed form when it fits the budget
    let closed = if budget.check("closed form", (m as u128 + 1).pow(2) * 64).is_ok() {
        Some(formulas::closed_form(m, n, &ClosedFormOptions::default())?.to_f64())
    } else {
        None
    };
    let rel = closed.map(|c| if c == 0.0 { (est.predicted - c).abs() } else { (est.predicted - c).abs() / c });
    let kappa = est.kappa.map(|k| format!(";kappa={k}")).unwrap_or_default();
    let flags = format!("regime={}{}{}", est.regime.name(), kappa, if est.clamped { ";clamped" } else { "" });
    Ok(match format {
        Format::Text => {
            let mut s = format!("regime={} predicted={}", est.regime.name(), est.predicted);
            if let Some(c) = closed {
                s.push_str(&format!(" closed={c} relative_error={}", rel.unwrap()));
            }
            Output::Text(s)
        }
        Format::Json => Output::Json(json!({
            "m": m,
            "n": n,
            "regime": est.regime,
            "predicted": est.predicted,
            "normalizer": est.normalizer,
            "kappa": est.kappa,
            "lower": est.lower,
            "upper": est.upper,
            "clamped": est.clamped,
            "closed_form": closed,
            "relative_error": rel,
            "meta": {"thresholds": RegimeThresholds::default(), "note": "regime boundaries are engineering choices"},
        })),
        Format::Csv => {
            let mut rows = vec![row(m, n, "predict", f64_string(est.predicted), Some(53), &flags)];
            if let Some(c) = closed {
                rows.push(row(m, n, "closed", f64_string(c), Some(53), ""));
            }
            Output::Csv(rows)
        }
    })
}

/// Outcome of one verification check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        passed,
        detail,
    }
}

fn guarded(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    match f() {
        Ok((passed, detail)) => outcome(name, passed, detail),
        Err(e) => outcome(name, false, format!("error: {e}")),
    }
}

/// Runs the cross-method checks. `progress` sees each outcome as it lands.
pub fn verification_suite(level: Level, budget: WorkBudget, progress: &mut dyn FnMut(&CheckOutcome)) -> Vec<CheckOutcome> {
    let full = level == Level::Full;
    let mut out = Vec::new();
    let mut push = |c: CheckOutcome| {
        progress(&c);
        out.push(c);
    };

    let id_max = if full { 60 } else { 20 };
    push(guarded("trig-identities", || {
        let mut worst = 0.0f64;
        for m in 1..=id_max {
            for prec in [53u32, 128] {
                let table = SpectralTable::new(m, prec)?;
                let report = trig_core::verify_identities(&table, f64::MAX)?;
                for c in &report.checks {
                    // a few ulps of the sum itself
                    let tol = c.expected.abs().max(1.0) * 2f64.powi(6 - prec as i32);
                    worst = worst.max(c.residual / tol);
                }
            }
        }
        Ok((worst < 1.0, format!("m <= {id_max}, worst residual {worst:.3} of tolerance")))
    }));

    push(guarded("spectral-certification", || {
        let mut ok = true;
        for m in [2usize, 3] {
            ok &= trig_core::certify_spectrum(m, 256, 1e-8)?.all_passed();
        }
        Ok((ok, "m in {2, 3}".into()))
    }));

    push(guarded("functional-equation", || {
        let mut ok = true;
        for (m, order) in [(1usize, 6usize), (2, 6), (3, 5)] {
            ok &= chain_dp::functional_equation_residual(m, order, budget)?.is_zero();
        }
        Ok((ok, "(1,6) (2,6) (3,5)".into()))
    }));

    let (grid_m, grid_n) = if full { (8usize, 25u64) } else { (5, 12) };
    push(guarded("four-way-agreement", || {
        let mut mismatches = 0;
        for m in 1..=grid_m {
            let dp = chain_dp::expected_inversions_trajectory(m, grid_n, budget)?;
            let gf = genfun::series(&genfun::build_gf(m)?, grid_n as usize);
            let cf = formulas::ClosedFormEvaluator::new(m, ClosedFormOptions::with_precision(128))?;
            for (n, v) in dp.iter().enumerate() {
                let e = formulas::eriksen(m, n as u64, budget)?;
                let c = cf.eval(n as u64).value;
                let exact = Float::with_val(128, v);
                let diff = Float::with_val(128, &c - &exact).abs().to_f64();
                let close = diff <= 1e-9 * rational_to_f64(v).abs().max(1.0);
                if e != *v || gf[n] != *v || !close {
                    mismatches += 1;
                }
            }
        }
        Ok((mismatches == 0, format!("m <= {grid_m}, n <= {grid_n}, {mismatches} mismatches")))
    }));

    push(guarded("dp-symmetry", || {
        let mut ok = true;
        for m in 1..=6 {
            let mut s = chain_dp::InversionState::initial(m)?;
            for _ in 0..=10 {
                ok &= chain_dp::symmetry_check(&s) && s.is_probability_array();
                s.advance();
            }
        }
        Ok((ok, "m <= 6, n <= 10".into()))
    }));

    let (sw_m, sw_n) = if full { (12usize, 300u64) } else { (8, 100) };
    push(guarded("bounds-sandwich", || {
        let mut violations = 0;
        for m in 3..=sw_m {
            let dp = chain_dp::expected_inversions_trajectory(m, sw_n, budget)?;
            for (n, v) in dp.iter().enumerate() {
                let b = formulas::bounds(m, n as u64)?;
                let v = rational_to_f64(v);
                let (below, above) = (v < b.lower, v > b.upper);
                if below || above {
                    violations += 1;
                }
            }
        }
        Ok((violations == 0, format!("3 <= m <= {sw_m}, n <= {sw_n}, {violations} violations")))
    }));

    let pole_max = if full { 6 } else { 4 };
    push(guarded("gf-poles", || {
        let mut ok = true;
        for m in 1..=pole_max {
            let rf = genfun::build_gf(m)?;
            ok &= genfun::pole_check(&rf, &SpectralTable::new(m, 128)?, genfun::POLE_TOLERANCE)?.passed;
        }
        Ok((ok, format!("m <= {pole_max}")))
    }));

    let bf_n = if full { 8 } else { 6 };
    push(guarded("brute-force", || {
        let mut ok = true;
        for m in 1..=3 {
            let dp = chain_dp::expected_inversions_trajectory(m, bf_n as u64, budget)?;
            for (n, v) in dp.iter().enumerate() {
                ok &= oracle::enumerate_expected_inversions(m, n)? == *v;
            }
        }
        Ok((ok, format!("m <= 3, n <= {bf_n}")))
    }));

    let (mc_ms, mc_ns, trials): (&[usize], &[u64], u64) = if full {
        (&[5, 10, 20], &[10, 100, 1000], 100_000)
    } else {
        (&[5, 10], &[10, 100], 20_000)
    };
    push(guarded("monte-carlo", || {
        let mut misses = 0;
        for &m in mc_ms {
            for &n in mc_ns {
                let cfg = MonteCarloConfig {
                    m,
                    n,
                    trials,
                    seed: 42,
                    lazy_p: None,
                    workers: rayon::current_num_threads(),
                };
                let s = simulator::monte_carlo(&cfg, budget)?;
                let exact = chain_dp::expected_inversions_float(m, n, budget)?;
                if !s.agrees_with(exact, 4.0) {
                    misses += 1;
                }
            }
        }
        Ok((misses <= 1, format!("{} cells, {trials} trials, {misses} outside 4 sigma", mc_ms.len() * mc_ns.len())))
    }));

    push(guarded("monte-carlo-determinism", || {
        let mk = |workers| MonteCarloConfig {
            m: 7,
            n: 60,
            trials: 5_000,
            seed: 42,
            lazy_p: None,
            workers,
        };
        let a = simulator::monte_carlo(&mk(1), budget)?;
        let b = simulator::monte_carlo(&mk(4), budget)?;
        Ok((a.same_result(&b), "workers 1 vs 4".into()))
    }));

    push(guarded("lazy-chain", || {
        let m = 6;
        let n = 40;
        let p = formulas::default_laziness(m);
        let exact = formulas::aperiodic_expected(m, n, &p, budget)?;
        let series = genfun::series(&genfun::aperiodic_gf(&genfun::build_gf(m)?, m, &p)?, n as usize);
        let cfg = MonteCarloConfig {
            m,
            n,
            trials,
            seed: 7,
            lazy_p: Some(p),
            workers: rayon::current_num_threads(),
        };
        let s = simulator::monte_carlo(&cfg, budget)?;
        let ok = series[n as usize] == exact && s.agrees_with(rational_to_f64(&exact), 4.0);
        Ok((ok, format!("m = {m}, n = {n}, p = m/(m+1)")))
    }));

    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMethod {
    Dp,
    DpFloat,
    Closed,
    Eriksen,
    Lower,
    Upper,
    Predict,
    Simulate,
}

impl std::str::FromStr for SweepMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dp" => SweepMethod::Dp,
            "dp-float" => SweepMethod::DpFloat,
            "closed" => SweepMethod::Closed,
            "eriksen" => SweepMethod::Eriksen,
            "lower" => SweepMethod::Lower,
            "upper" => SweepMethod::Upper,
            "predict" => SweepMethod::Predict,
            "simulate" => SweepMethod::Simulate,
            other => return invalid(format!("unknown sweep method {other:?}")),
        })
    }
}

impl SweepMethod {
    fn name(self) -> &'static str {
        match self {
            SweepMethod::Dp => "dp",
            SweepMethod::DpFloat => "dp-float",
            SweepMethod::Closed => "closed",
            SweepMethod::Eriksen => "eriksen",
            SweepMethod::Lower => "lower",
            SweepMethod::Upper => "upper",
            SweepMethod::Predict => "predict",
            SweepMethod::Simulate => "simulate",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub ms: Vec<usize>,
    pub ns: Vec<NExpr>,
    pub methods: Vec<SweepMethod>,
    pub precision: u32,
    pub normalize: Normalize,
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

/// "10,20,40" or "10:50:10" (end inclusive, step 1 by default), or a mix.
pub fn parse_m_list(s: &str) -> Result<Vec<usize>> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("bad m value {t:?}")))
    };
    let mut out = Vec::new();
    for part in s.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let step = if fields.len() == 3 { num(fields[2])? } else { 1 };
                if step == 0 || a > b {
                    return invalid(format!("bad range {part:?}"));
                }
                out.extend((a..=b).step_by(step));
            }
            _ => return invalid(format!("bad range {part:?}")),
        }
    }
    if out.contains(&0) {
        return invalid("m must be at least 1");
    }
    Ok(out)
}

fn normalizer(kind: Normalize, m: usize, n: u64) -> (f64, &'static str) {
    let (mf, nf) = (m as f64, n as f64);
    match kind {
        Normalize::None => (1.0, ""),
        Normalize::N => (nf, "normalized=n"),
        Normalize::SqrtMn => ((mf * nf).sqrt(), "normalized=sqrt(mn)"),
        Normalize::M2 => (mf * mf, "normalized=m^2"),
        Normalize::Limit => (mf * (mf + 1.0) / 4.0, "normalized=m(m+1)/4"),
    }
}

/// Evaluates every method at every `(m, n(m))` of the grid.
pub fn sweep(spec: &SweepSpec, budget: WorkBudget) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for &m in &spec.ms {
        for expr in &spec.ns {
            let n = expr.eval_steps(m)?;
            let (scale, norm_flag) = normalizer(spec.normalize, m, n);
            for &method in &spec.methods {
                let mut flags: Vec<String> = Vec::new();
                let (value, precision): (Value, Option<u32>) = match method {
                    SweepMethod::Dp | SweepMethod::Eriksen => {
                        let v = if method == SweepMethod::Dp {
                            chain_dp::expected_inversions_dp(m, n, budget)?
                        } else {
                            formulas::eriksen(m, n, budget)?
                        };
                        flags.push("exact".into());
                        if spec.normalize == Normalize::None {
                            (Value::String(v.to_string()), None)
                        } else {
                            (json!(rational_to_f64(&v)), Some(53))
                        }
                    }
                    SweepMethod::DpFloat => (json!(chain_dp::expected_inversions_float(m, n, budget)?), Some(53)),
                    SweepMethod::Closed => {
                        budget.check("closed form", (m as u128 + 1).pow(2) * 64)?;
                        let v = formulas::closed_form(m, n, &ClosedFormOptions::with_precision(spec.precision))?;
                        if v.saturated {
                            flags.push("saturated".into());
                        }
                        (json!(v.to_f64()), Some(spec.precision))
                    }
                    SweepMethod::Lower | SweepMethod::Upper => {
                        let b = formulas::bounds(m, n)?;
                        (json!(if method == SweepMethod::Lower { b.lower } else { b.upper }), Some(53))
                    }
                    SweepMethod::Predict => {
                        let e = asymptotics::predict(m, n)?;
                        flags.push(format!("regime={}", e.regime.name()));
                        if e.clamped {
                            flags.push("clamped".into());
                        }
                        (json!(e.predicted), Some(53))
                    }
                    SweepMethod::Simulate => {
                        let s = simulator::monte_carlo(
                            &MonteCarloConfig {
                                m,
                                n,
                                trials: spec.trials,
                                seed: spec.seed,
                                lazy_p: None,
                                workers: spec.workers,
                            },
                            budget,
                        )?;
                        flags.push(format!("stderr={}", s.stderr / scale));
                        (json!(s.mean), Some(53))
                    }
                };
                if !norm_flag.is_empty() {
                    flags.push(norm_flag.into());
                }
                let value = match value {
                    Value::String(s) => s,
                    v => f64_string(v.as_f64().unwrap_or(f64::NAN) / scale),
                };
                rows.push(row(m, n, method.name(), value, precision, &flags.join(";")));
            }
        }
    }
    Ok(rows)
}

/// `n` as an expression in `m`: numbers, `m`, `log(...)` (natural),
/// `+ - * / ^` and parentheses.
#[derive(Debug, Clone, PartialEq)]
pub enum NExpr {
    Num(f64),
    M,
    Log(Box<NExpr>),
    Neg(Box<NExpr>),
    Bin(char, Box<NExpr>, Box<NExpr>),
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn error<T>(&self, what: &str) -> Result<T> {
        invalid(format!("bad n expression at offset {}: {what}", self.pos))
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&format!("expected '{}'", c as char))
        }
    }

    fn sum(&mut self) -> Result<NExpr> {
        let mut lhs = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = NExpr::Bin(op as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<NExpr> {
        let mut lhs = self.power()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.power()?;
            lhs = NExpr::Bin(op as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn power(&mut self) -> Result<NExpr> {
        let base = self.unary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.power()?;
            return Ok(NExpr::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<NExpr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(NExpr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<NExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match text.parse::<f64>() {
                    Ok(v) => Ok(NExpr::Num(v)),
                    Err(_) => self.error(&format!("bad number {text:?}")),
                }
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"m" => Ok(NExpr::M),
                    b"log" => {
                        self.expect(b'(')?;
                        let e = self.sum()?;
                        self.expect(b')')?;
                        Ok(NExpr::Log(Box::new(e)))
                    }
                    other => self.error(&format!("unknown name {:?}", String::from_utf8_lossy(other))),
                }
            }
            _ => self.error("expected a number, m, log(...) or '('"),
        }
    }
}

impl NExpr {
    pub fn parse(s: &str) -> Result<NExpr> {
        let mut p = ExprParser { src: s.as_bytes(), pos: 0 };
        let e = p.sum()?;
        if p.peek().is_some() {
            return p.error("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, m: f64) -> f64 {
        match self {
            NExpr::Num(v) => *v,
            NExpr::M => m,
            NExpr::Log(e) => e.eval(m).ln(),
            NExpr::Neg(e) => -e.eval(m),
            NExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval(m), b.eval(m));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
        }
    }

    /// Nearest nonnegative integer step count at `m`.
    pub fn eval_steps(&self, m: usize) -> Result<u64> {
        let v = self.eval(m as f64).round();
        if !(v.is_finite() && (0.0..1.8e19).contains(&v)) {
            return invalid(format!("n expression gives {v} at m = {m}"));
        }
        Ok(v as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["invwalk"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn exact_json() {
        let (code, out, _) = run_str(&["exact", "--m", "2", "--n", "3", "--format", "json"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), r#"{"method":"dp","m":2,"n":3,"value":"3/2"}"#);
    }

    #[test]
    fn gf_text() {
        let (code, out, _) = run_str(&["gf", "--m", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "t / (1 - t^2)");
    }

    #[test]
    fn exit_codes() {
        let (code, _, err) = run_str(&["exact", "--m", "x", "--n", "3"]);
        assert_eq!(code, EXIT_BAD_ARGS);
        assert_eq!(err.lines().count(), 1);
        assert!(err.starts_with("error kind=invalid-argument"));
        let (code, _, err) = run_str(&["bounds", "--m", "2", "--n", "3"]);
        assert_eq!(code, EXIT_BAD_ARGS);
        assert!(err.starts_with("error kind=domain"));
    }

    #[test]
    fn expressions() {
        let e = NExpr::parse("2*m^3*log(m) + 1").unwrap();
        let m: f64 = 10.0;
        assert!((e.eval(m) - (2.0 * 1000.0 * m.ln() + 1.0)).abs() < 1e-9);
        assert_eq!(NExpr::parse("m^2").unwrap().eval_steps(7).unwrap(), 49);
        assert_eq!(NExpr::parse("(m+1)/2").unwrap().eval(5.0), 3.0);
        assert!(NExpr::parse("m^").is_err());
        assert!(NExpr::parse("exp(m)").is_err());
        assert!(NExpr::parse("-m").unwrap().eval_steps(3).is_err());
    }

    #[test]
    fn m_lists() {
        assert_eq!(parse_m_list("3,5:9:2").unwrap(), vec![3, 5, 7, 9]);
        assert!(parse_m_list("0").is_err());
        assert!(parse_m_list("9:3").is_err());
    }

    #[test]
    fn sweep_csv() {
        let (code, out, _) = run_str(&["sweep", "--m", "3,4", "--n", "m^2", "--methods", "dp,closed"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "m,n,method,value,precision_bits,flags");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("3,9,dp,"));
    }
}
