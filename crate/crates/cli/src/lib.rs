//! `dp2ff` command-line front end.
//!
//! Every invocation emits one JSON object with the keys `command`, `params`,
//! `result`, `errors` in that order, or CSV with a header row. Residues and
//! `inf` are strings; counts and indices are numbers.
//!
//! Exit status: 0 on success, 1 on a domain error, 2 on a usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dp2ff::confinement::{agr_scan, ConfineOptions, ScanResult, DEFAULT_MAX_STEPS, SCAN_PRIME_LIMIT};
use dp2ff::expr::{parse_map_expr, CustomMap};
use dp2ff::fpdynamics::{dp2_fp_orbit, dp2_fp_orbit_from, dp2_period, first_finite_state, FpState};
use dp2ff::maps::{build_dp2_params, dp2_scalar_residual, DP2Params, MapFamily, PlaneMap, QrtParams};
use dp2ff::numbers::{parse_rational, rat, reduce_proj};
use dp2ff::tau::{reduced_solution, taucond, TauParams};
use dp2ff::{Error, FpProj, Prime, Rational};

pub const USAGE_CODE: &str = "USAGE";
pub const IO_CODE: &str = "IO_ERROR";

#[derive(Debug, Parser)]
#[command(name = "dp2ff", version, about = "Discrete Painleve II over finite fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Dp2,
    Qrt,
    Custom,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long, value_enum, default_value_t = MapKind::Dp2)]
    pub map: MapKind,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<String>,
    #[arg(long)]
    pub gamma: Option<u32>,
    #[arg(long = "expr-x")]
    pub expr_x: Option<String>,
    #[arg(long = "expr-y")]
    pub expr_y: Option<String>,
    /// `name=value`, repeatable.
    #[arg(long = "param", allow_hyphen_values = true)]
    pub params: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orbit over P^1(F_p) (dP-II) or exact evolution over Q (qrt, custom).
    Evolve {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, allow_hyphen_values = true)]
        u0: String,
        #[arg(long, allow_hyphen_values = true)]
        u1: String,
        #[arg(long)]
        steps: usize,
    },
    /// Reduced tau-function solution with its conditions and period.
    TauOrbit {
        #[arg(long)]
        p: u64,
        #[arg(long = "N")]
        big_n: u32,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        lambda: String,
        #[arg(long)]
        count: usize,
    },
    /// Almost-good-reduction scan over all singular reduced states.
    AgrScan {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long = "max-steps", default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },
    /// Projective reduction of a rational.
    Reduce {
        #[arg(long)]
        p: u64,
        #[arg(long, allow_hyphen_values = true)]
        value: String,
    },
    /// Residuals of the scalar equation along `u_1, u_2, ...`.
    SolveCheck {
        #[arg(long, allow_hyphen_values = true)]
        seq: String,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        delta: String,
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        #[arg(long)]
        p: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evolve { .. } => "evolve",
            Command::TauOrbit { .. } => "tau-orbit",
            Command::AgrScan { .. } => "agr-scan",
            Command::Reduce { .. } => "reduce",
            Command::SolveCheck { .. } => "solve-check",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => USAGE_CODE,
            CliError::Domain(e) => e.code(),
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Domain(e) => e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Rows of the CSV rendering; the first row is the header.
type Table = Vec<Vec<String>>;

struct Artifact {
    json: Value,
    csv: Table,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn prime(p: u64) -> CliResult<Prime> {
    if p < 3 {
        return Err(usage(format!("--p must be at least 3, got {p}")));
    }
    Ok(Prime::new(p)?)
}

/// Malformed numbers keep the parser's error code.
fn rational(_flag: &str, s: &str) -> CliResult<Rational> {
    Ok(parse_rational(s)?)
}

fn required<'a>(flag: &str, v: &'a Option<String>) -> CliResult<&'a str> {
    v.as_deref()
        .ok_or_else(|| usage(format!("--{flag} is required for this map")))
}

fn token(x: FpProj) -> Value {
    Value::String(x.to_string())
}

fn tokens(xs: &[FpProj]) -> Value {
    Value::Array(xs.iter().copied().map(token).collect())
}

fn opt_str(v: &Option<String>) -> Value {
    v.as_ref().map_or(Value::Null, |s| Value::String(s.clone()))
}

fn sequence_table(xs: &[FpProj]) -> Table {
    let mut t = vec![vec!["index".to_string(), "value".to_string()]];
    t.extend(xs.iter().enumerate().map(|(i, x)| vec![(i + 1).to_string(), x.to_string()]));
    t
}

fn map_params_json(m: &MapArgs) -> Value {
    let mut bindings = serde_json::Map::new();
    for b in &m.params {
        if let Some((k, v)) = b.split_once('=') {
            bindings.insert(k.trim().to_string(), Value::String(v.trim().to_string()));
        }
    }
    json!({
        "p": m.p,
        "map": format!("{:?}", m.map).to_lowercase(),
        "a": opt_str(&m.a),
        "delta": opt_str(&m.delta),
        "z0": opt_str(&m.z0),
        "gamma": m.gamma,
        "expr_x": opt_str(&m.expr_x),
        "expr_y": opt_str(&m.expr_y),
        "param": Value::Object(bindings),
    })
}

fn params_json(cmd: &Command) -> Value {
    match cmd {
        Command::Evolve { map, u0, u1, steps } => {
            let mut v = map_params_json(map);
            let o = v.as_object_mut().expect("object");
            o.insert("u0".into(), json!(u0));
            o.insert("u1".into(), json!(u1));
            o.insert("steps".into(), json!(steps));
            v
        }
        Command::TauOrbit { p, big_n, lambda, count } => {
            json!({ "p": p, "N": big_n, "lambda": lambda, "count": count })
        }
        Command::AgrScan { map, max_steps } => {
            let mut v = map_params_json(map);
            v.as_object_mut()
                .expect("object")
                .insert("max_steps".into(), json!(max_steps));
            v
        }
        Command::Reduce { p, value } => json!({ "p": p, "value": value }),
        Command::SolveCheck { seq, a, delta, z0, p } => {
            json!({ "seq": seq, "a": a, "delta": delta, "z0": z0, "p": p })
        }
    }
}

fn dp2_params(m: &MapArgs, p: Prime) -> CliResult<DP2Params> {
    let a = rational("a", required("a", &m.a)?)?;
    let d = rational("delta", required("delta", &m.delta)?)?;
    let z0 = rational("z0", required("z0", &m.z0)?)?;
    Ok(build_dp2_params(p, a, d, z0)?)
}

fn map_family(m: &MapArgs) -> CliResult<MapFamily> {
    let p = prime(m.p)?;
    match m.map {
        MapKind::Dp2 => Ok(MapFamily::Dp2(dp2_params(m, p)?)),
        MapKind::Qrt => {
            let gamma = m.gamma.ok_or_else(|| usage("--gamma is required for --map qrt"))?;
            let a: i64 = required("a", &m.a)?
                .trim()
                .parse()
                .map_err(|_| usage("--a must be an integer for --map qrt"))?;
            Ok(MapFamily::Qrt(QrtParams::new(p, gamma, a, false)?))
        }
        MapKind::Custom => {
            let ex = parse_map_expr(required("expr-x", &m.expr_x)?)?;
            let ey = parse_map_expr(required("expr-y", &m.expr_y)?)?;
            let mut bindings = BTreeMap::new();
            for b in &m.params {
                let (k, v) = b
                    .split_once('=')
                    .ok_or_else(|| usage(format!("--param expects name=value, got `{b}`")))?;
                bindings.insert(k.trim().to_string(), rational("param", v.trim())?);
            }
            Ok(MapFamily::Custom(CustomMap::new(p, ex, ey, bindings)?))
        }
    }
}

fn evolve(m: &MapArgs, u0: &str, u1: &str, steps: usize) -> CliResult<Artifact> {
    let p = prime(m.p)?;
    if m.map == MapKind::Dp2 {
        let params = dp2_params(m, p)?;
        let (v0, v1) = (FpProj::parse(u0, p)?, FpProj::parse(u1, p)?);
        let seq = dp2_fp_orbit(v0, v1, steps, &params)?;
        let period = dp2_period(FpState::new(v0, v1, 1), &params)?;
        return Ok(Artifact {
            json: json!({ "sequence": tokens(&seq), "period": period }),
            csv: sequence_table(&seq),
        });
    }
    // Exact evolution over Q with (x, y) = (u_n, u_{n-1}).
    let family = map_family(m)?;
    let (mut x, mut y) = (rational("u1", u1)?, rational("u0", u0)?);
    let mut exact = Vec::with_capacity(steps);
    for n in 1..=steps as i64 {
        exact.push(x.clone());
        if (n as usize) < steps {
            (x, y) = family.step(&x, &y, n)?;
        }
    }
    let seq: Vec<FpProj> = exact.iter().map(|v| reduce_proj(v, p)).collect();
    let exact_json: Vec<Value> = exact.iter().map(|v| Value::String(v.to_string())).collect();
    Ok(Artifact {
        json: json!({ "sequence": tokens(&seq), "exact": exact_json, "period": Value::Null }),
        csv: sequence_table(&seq),
    })
}

fn tau_orbit(p: u64, big_n: u32, lambda: &str, count: usize) -> CliResult<Artifact> {
    let p = prime(p)?;
    if count == 0 {
        return Err(usage("--count must be at least 1"));
    }
    let t = TauParams::new(big_n, rational("lambda", lambda)?)?;
    let seq = reduced_solution(&t, p, count)?;
    let cond = taucond(&t, p)?;
    // A prefix long enough to contain an adjacent finite pair seeds the F_p orbit.
    let probe_len = count.max(2 * p.get() as usize + 2);
    let probe = if probe_len == count { seq.clone() } else { reduced_solution(&t, p, probe_len)? };
    let params = t.dp2_params(p)?;
    let (period, agrees) = match first_finite_state(&probe) {
        Some(s) => {
            let start = s.n as usize;
            let evolved = dp2_fp_orbit_from(s, probe_len - start, &params)?;
            (Value::from(dp2_period(s, &params)?), json!(evolved[..] == probe[start..]))
        }
        None => (Value::Null, Value::Null),
    };
    Ok(Artifact {
        json: json!({
            "sequence": tokens(&seq),
            "period": period,
            "cond_diag": [token(cond.first_value), token(cond.second_value)],
            "cond_holds": [cond.first_holds, cond.second_holds],
            "evolution_agrees": agrees,
        }),
        csv: sequence_table(&seq),
    })
}

fn opt_token(x: Option<FpProj>) -> Value {
    x.map_or(Value::Null, token)
}

fn scan_artifact(s: &ScanResult) -> Artifact {
    let mut csv = vec![["point", "y_residue", "n", "status", "m", "image_x", "image_y", "pole_orders"]
        .iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()];
    let mut records = Vec::with_capacity(s.records.len());
    for r in &s.records {
        let rep = &r.report;
        let (ix, iy) = rep.image.map_or((None, None), |(x, y)| (Some(x), Some(y)));
        let poles: Vec<Value> = rep.pole_orders.iter().map(|o| o.map_or(Value::Null, Value::from)).collect();
        records.push(json!({
            "point": r.point.to_string(),
            "y_residue": r.y_residue.to_string(),
            "n": r.n,
            "status": rep.status.code(),
            "m": rep.m,
            "image_x": opt_token(ix),
            "image_y": opt_token(iy),
            "pole_orders": poles,
        }));
        let show = |x: Option<FpProj>| x.map_or(String::new(), |v| v.to_string());
        csv.push(vec![
            r.point.to_string(),
            r.y_residue.to_string(),
            r.n.to_string(),
            rep.status.code().to_string(),
            rep.m.map_or(String::new(), |m| m.to_string()),
            show(ix),
            show(iy),
            rep.pole_orders
                .iter()
                .map(|o| o.map_or("inf".to_string(), |v| v.to_string()))
                .collect::<Vec<_>>()
                .join(";"),
        ]);
    }
    Artifact {
        json: json!({
            "has_agr": s.has_agr,
            "closed_form_ok": s.closed_form_ok,
            "records": records,
        }),
        csv,
    }
}

fn scan(m: &MapArgs, max_steps: usize) -> CliResult<Artifact> {
    if m.p > SCAN_PRIME_LIMIT {
        return Err(usage(format!("agr-scan requires --p <= {SCAN_PRIME_LIMIT}")));
    }
    let family = map_family(m)?;
    let opts = ConfineOptions { max_steps, ..Default::default() };
    Ok(scan_artifact(&agr_scan(&family, &opts)?))
}

fn reduce(p: u64, value: &str) -> CliResult<Artifact> {
    let p = prime(p)?;
    let v = reduce_proj(&rational("value", value)?, p);
    Ok(Artifact {
        json: token(v),
        csv: vec![vec!["value".into()], vec![v.to_string()]],
    })
}

/// Parameters for a residual over Q; the prime only has to make them integral.
fn residual_params(a: Rational, d: Rational, z0: Rational, p: Option<u64>) -> CliResult<DP2Params> {
    if let Some(p) = p {
        return Ok(DP2Params::build(prime(p)?, a, d, z0, true)?);
    }
    let mut q = 3;
    loop {
        if let Ok(pr) = Prime::new(q) {
            if let Ok(params) = DP2Params::build(pr, a.clone(), d.clone(), z0.clone(), true) {
                return Ok(params);
            }
        }
        q += 2;
    }
}

fn solve_check(seq: &str, a: &str, d: &str, z0: &str, p: Option<u64>) -> CliResult<Artifact> {
    let u = seq
        .split(',')
        .map(|s| rational("seq", s.trim()))
        .collect::<CliResult<Vec<_>>>()?;
    if u.len() < 3 {
        return Err(usage("--seq needs at least three values"));
    }
    let params = residual_params(rational("a", a)?, rational("delta", d)?, rational("z0", z0)?, p)?;
    let mut residuals = Vec::new();
    let mut skipped = Vec::new();
    let mut csv = vec![vec!["n".to_string(), "residual".to_string()]];
    let mut all_zero = true;
    // u[i] is u_{i+1}.
    for i in 1..u.len() - 1 {
        let n = i as i64 + 1;
        match dp2_scalar_residual(&u[i - 1], &u[i], &u[i + 1], n, &params) {
            Ok(r) => {
                all_zero &= r == rat(0);
                residuals.push(json!({ "n": n, "value": r.to_string() }));
                csv.push(vec![n.to_string(), r.to_string()]);
            }
            Err(Error::DivisionByZero) => {
                skipped.push(n);
                csv.push(vec![n.to_string(), "skipped".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Artifact {
        json: json!({ "residuals": residuals, "skipped": skipped, "all_zero": all_zero }),
        csv,
    })
}

fn execute(cmd: &Command) -> CliResult<Artifact> {
    match cmd {
        Command::Evolve { map, u0, u1, steps } => evolve(map, u0, u1, *steps),
        Command::TauOrbit { p, big_n, lambda, count } => tau_orbit(*p, *big_n, lambda, *count),
        Command::AgrScan { map, max_steps } => scan(map, *max_steps),
        Command::Reduce { p, value } => reduce(*p, value),
        Command::SolveCheck { seq, a, delta, z0, p } => solve_check(seq, a, delta, z0, *p),
    }
}

fn render_csv(rows: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn render(cli: &Cli, outcome: &CliResult<Artifact>) -> String {
    match (cli.format, outcome) {
        (Format::Json, _) => {
            let (result, errors) = match outcome {
                Ok(a) => (a.json.clone(), json!([])),
                Err(e) => (Value::Null, json!([{ "code": e.code(), "message": e.message() }])),
            };
            let doc = json!({
                "command": cli.command.name(),
                "params": params_json(&cli.command),
                "result": result,
                "errors": errors,
            });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
        (Format::Csv, Ok(a)) => render_csv(&a.csv),
        (Format::Csv, Err(e)) => render_csv(&vec![
            vec!["code".into(), "message".into()],
            vec![e.code().into(), e.message()],
        ]),
    }
}

/// Parses `argv` (program name first) and runs one command.
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { exit_code: 0, stdout: text, stderr: String::new() }
            } else {
                Outcome { exit_code: 2, stdout: String::new(), stderr: text }
            };
        }
    };
    let outcome = execute(&cli.command);
    let exit_code = outcome.as_ref().map_or_else(CliError::exit_code, |_| 0);
    let text = render(&cli, &outcome);
    let stderr = match &outcome {
        Err(e) => format!("error [{}]: {}\n", e.code(), e.message()),
        Ok(_) => String::new(),
    };
    match &cli.out {
        None => Outcome { exit_code, stdout: text, stderr },
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => Outcome { exit_code, stdout: String::new(), stderr },
            Err(e) => Outcome {
                exit_code: 1,
                stdout: String::new(),
                stderr: format!("error [{IO_CODE}]: {}: {e}\n", path.display()),
            },
        },
    }
}
