//! Command-line front end.
//!
//! Every command writes one report, JSON by default or CSV with
//! `--format csv`, to `--out` or standard output. Exit codes: 0 when the
//! criterion holds or the command succeeded, 1 when it fails, 2 on usage or
//! input errors, 3 when the outcome is undetermined.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coeff::{CoefficientField, SamplingPlan};
use crate::elasticity::{
    elasticity_check, elasticity_nu_set, elasticity_p_interval, elasticity_shift_lower, elasticity_shift_upper,
    ElasticityParams,
};
use crate::error::Error;
use crate::linalg::{sym_eigs, AngleInterval};
use crate::operator::OperatorSpec;
use crate::oracle::{
    contraction_sim, evolution_start, form_values, random_grid, random_testfield, stable_step, violation_search, Grid,
    TestField, SUPPORT_EPS, VIOLATION_TOL,
};
use crate::rng::Rng;
use crate::scalar::{scalar_angle, scalar_check, scalar_p_interval, PExponent};
use crate::system::{
    general2d_necessary, shift_lower_bound, shift_upper_bound, sym_p_interval, system_angle, system_check, PInterval,
    ShiftMode, ShiftReport,
};
use crate::verdict::{ext_real_opt, Scope, Status, Verdict, Witness};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDETERMINED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "lpdiss", version, about = "Lp-dissipativity criteria, angles and numerical oracles")]
pub struct Cli {
    /// JSON run configuration, used when no subcommand is given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Evaluate the dissipativity criterion of an operator at one exponent.
    Check(Common),
    /// Angle of dissipativity: the arguments θ keeping e^{iθ}A dissipative.
    Angle(Common),
    /// Exponent interval, ratio set and shift results for planar elasticity.
    Elasticity(Common),
    /// Shifted operators A + k·I·d²/dx² (or k·I·d²/dx² − A with --upper).
    Shift(ShiftArgs),
    /// Evaluate the functional on a field, or search for a violating field.
    Oracle(OracleArgs),
    /// Lp norm along the evolution u_t = (A u')'.
    Sim(SimArgs),
    /// Boundary of the admissible exponents over a parameter range.
    Region(RegionArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Scalar,
    Diag,
    General2d,
    Elasticity,
}

#[derive(ValueEnum, Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    #[arg(long, value_enum)]
    op: Option<OpKind>,
    /// Coefficient file: an operator, a field, or a list of fields.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    /// Poisson ratio for the elasticity operator.
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Spatial sample points for variable coefficients.
    #[arg(long)]
    points: Option<usize>,
    /// Direction samples per point.
    #[arg(long)]
    dirs: Option<usize>,
    /// Refinement rounds.
    #[arg(long)]
    refine: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(skip)]
    inline: Option<OperatorSpec>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Positive,
    AnyReal,
    Psd,
}

#[derive(Args, Debug, Clone)]
struct ShiftArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = ModeArg::Positive)]
    mode: ModeArg,
    /// Study k·I·d²/dx² − A instead of A + k·I·d²/dx².
    #[arg(long)]
    upper: bool,
}

#[derive(Args, Debug, Clone)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Maximum number of functional evaluations of the search.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Evaluate the functional on this test field instead of searching.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Write the violating field here when the search finds one.
    #[arg(long)]
    save_field: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Initial datum; a seeded random field when absent.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Start from the violating field of the oracle search.
    #[arg(long, conflicts_with = "field")]
    witness: bool,
    /// Grid nodes of the random initial field.
    #[arg(long, default_value_t = 257)]
    nodes: usize,
    /// Final time; 200 steps when absent.
    #[arg(long)]
    t: Option<f64>,
    /// Time step; the largest stable step when absent.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct RegionArgs {
    #[command(flatten)]
    common: Common,
    /// Start of the ν range (elasticity) or of the ratio range μₘ/μ₁ (diag).
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long, default_value_t = 11)]
    rows: usize,
    /// Explicit comma-separated rows instead of a range.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Vec<f64>,
}

/// JSON configuration accepted by `--config`, one run per file.
#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub operator: Option<OperatorRef>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub plan: Option<PlanConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

/// An operator given inline or as a path relative to the config file.
#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum OperatorRef {
    Path(PathBuf),
    Inline(OperatorSpec),
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub seed: Option<u64>,
    pub n_points: Option<usize>,
    pub n_directions: Option<usize>,
    pub refine_iters: Option<usize>,
}

/// What every command writes.
#[derive(Serialize, Debug, Default)]
pub struct Report {
    pub command: String,
    pub verdict: Option<Status>,
    #[serde(with = "ext_real_opt")]
    pub margin: Option<f64>,
    pub witness: Option<Witness>,
    pub interval: Option<AngleInterval>,
    pub p_interval: Option<PInterval>,
    pub oracle: Option<Value>,
    pub notes: Vec<String>,
    pub version: String,
    pub seed: u64,
    pub details: Value,
    #[serde(skip)]
    table: Option<Table>,
}

#[derive(Debug, Clone)]
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Report {
    fn new(command: &str, plan: &SamplingPlan) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: plan.seed,
            details: Value::Null,
            ..Default::default()
        }
    }

    fn exit_code(&self) -> i32 {
        match self.verdict {
            None | Some(Status::Holds) => EXIT_HOLDS,
            Some(Status::Fails) => EXIT_FAILS,
            Some(Status::Undetermined) => EXIT_UNDETERMINED,
        }
    }

    fn absorb(&mut self, v: &Verdict) {
        self.verdict = Some(v.status);
        self.margin = Some(v.margin);
        self.witness = v.witness.clone();
        self.notes.extend(v.notes.iter().cloned());
    }

    /// The report as JSON text, newline terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The table of a region run, or `key,value` rows of every leaf of the
    /// JSON report otherwise.
    pub fn to_csv(&self) -> String {
        let table = match &self.table {
            Some(t) => t.clone(),
            None => {
                let mut rows = Vec::new();
                flatten("", &serde_json::to_value(self).expect("report serializes"), &mut rows);
                Table {
                    header: vec!["key".into(), "value".into()],
                    rows: rows.into_iter().map(|(k, v)| vec![k, v]).collect(),
                }
            }
        };
        let mut out = String::new();
        for row in std::iter::once(&table.header).chain(&table.rows) {
            out.push_str(&row.iter().map(|c| csv_cell(c)).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        Value::Null => out.push((prefix.into(), String::new())),
        Value::Bool(b) => out.push((prefix.into(), b.to_string())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
        Value::Number(n) => out.push((
            prefix.into(),
            match (n.as_u64(), n.as_i64()) {
                (Some(u), _) => u.to_string(),
                (_, Some(i)) => i.to_string(),
                _ => fmt_num(n.as_f64().unwrap_or(f64::NAN)),
            },
        )),
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Shortest representation that parses back to `x`, in exponent notation
/// outside [1e−5, 1e16).
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x != 0.0 && (x.abs() >= 1e16 || x.abs() < 1e-5) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// A failure with its exit code and a message for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotConverged { .. } => EXIT_UNDETERMINED,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Runs the command line `args` (program name first) writing to the
/// process streams, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_HOLDS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let command = match (cli.command, cli.config) {
        (Some(c), None) => c,
        (None, Some(path)) => command_from_config(&path)?,
        (Some(_), Some(_)) => return Err(usage("--config cannot be combined with a subcommand")),
        (None, None) => return Err(usage("a subcommand or --config is required; see --help")),
    };
    let common = match &command {
        Command::Check(c) | Command::Angle(c) | Command::Elasticity(c) => c.clone(),
        Command::Shift(a) => a.common.clone(),
        Command::Oracle(a) => a.common.clone(),
        Command::Sim(a) => a.common.clone(),
        Command::Region(a) => a.common.clone(),
    };
    let plan = plan_of(&common)?;
    let report = match &command {
        Command::Check(c) => check(c, &plan)?,
        Command::Angle(c) => angle(c, &plan)?,
        Command::Elasticity(c) => elasticity(c, &plan)?,
        Command::Shift(a) => shift(a, &plan)?,
        Command::Oracle(a) => oracle(a, &plan)?,
        Command::Sim(a) => sim(a, &plan)?,
        Command::Region(a) => region(a, &plan)?,
    };
    let text = match common.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    match &common.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| usage(format!("cannot write the report: {e}")))?,
    }
    Ok(report.exit_code())
}

fn command_from_config(path: &Path) -> Result<Command, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| usage(format!("malformed config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    // Parsing the bare command fills in the defaults of its own flags.
    let parsed = Cli::try_parse_from(["lpdiss", cfg.command.as_str()])
        .map_err(|_| usage(format!("unknown command '{}' in config", cfg.command)))?;
    let mut command = parsed.command.expect("subcommand parsed");
    let common = match &mut command {
        Command::Check(c) | Command::Angle(c) | Command::Elasticity(c) => c,
        Command::Shift(a) => &mut a.common,
        Command::Oracle(a) => &mut a.common,
        Command::Sim(a) => &mut a.common,
        Command::Region(a) => &mut a.common,
    };
    match cfg.operator {
        Some(OperatorRef::Path(p)) => common.file = Some(base.join(p)),
        Some(OperatorRef::Inline(op)) => common.inline = Some(op),
        None => {}
    }
    common.p = cfg.p;
    common.nu = cfg.nu;
    if let Some(plan) = cfg.plan {
        common.seed = plan.seed;
        common.points = plan.n_points;
        common.dirs = plan.n_directions;
        common.refine = plan.refine_iters;
    }
    common.out = cfg.output.map(|o| base.join(o));
    common.format = cfg.format.unwrap_or_default();
    Ok(command)
}

fn plan_of(c: &Common) -> Result<SamplingPlan, Failure> {
    let d = SamplingPlan::default();
    let plan = SamplingPlan {
        seed: c.seed.unwrap_or(d.seed),
        n_points: c.points.unwrap_or(d.n_points),
        n_directions: c.dirs.unwrap_or(d.n_directions),
        refine_iters: c.refine.unwrap_or(d.refine_iters),
    };
    plan.validate()?;
    Ok(plan)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| usage(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed JSON in {}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| usage(format!("invalid {what}: {e}")))
}

fn operator(c: &Common) -> Result<OperatorSpec, Failure> {
    if let Some(op) = &c.inline {
        op.validate()?;
        return Ok(op.clone());
    }
    let op = match (c.op, &c.file) {
        (Some(OpKind::Elasticity), None) => {
            let nu = c.nu.ok_or_else(|| usage("--nu is required for the elasticity operator"))?;
            OperatorSpec::Elasticity { nu }
        }
        (_, None) => return Err(usage("--file is required unless --op elasticity is given")),
        (kind, Some(path)) => {
            let v = read_json(path)?;
            if v.get("op").is_some() {
                from_value(v, "operator")?
            } else {
                match kind {
                    None => return Err(usage("--op is required when the file holds coefficient fields")),
                    Some(OpKind::Scalar) => OperatorSpec::Scalar {
                        field: from_value(v, "coefficient field")?,
                    },
                    Some(OpKind::Diag) => {
                        let blocks: Vec<CoefficientField> = if v.is_array() {
                            from_value(v, "list of coefficient fields")?
                        } else {
                            vec![from_value(v, "coefficient field")?]
                        };
                        OperatorSpec::Diagonal { blocks }
                    }
                    Some(OpKind::General2d) => OperatorSpec::General2d {
                        blocks: from_value(v, "2x2 array of coefficient fields")?,
                    },
                    Some(OpKind::Elasticity) => {
                        return Err(usage("the elasticity operator takes --nu, not --file"));
                    }
                }
            }
        }
    };
    op.validate()?;
    Ok(op)
}

fn exponent(c: &Common) -> Result<PExponent, Failure> {
    let p = c.p.ok_or_else(|| usage("--p is required"))?;
    Ok(PExponent::new(p)?)
}

fn elasticity_params(c: &Common, op: Option<&OperatorSpec>) -> Result<ElasticityParams, Failure> {
    let nu = match (c.nu, op) {
        (Some(nu), _) => nu,
        (None, Some(OperatorSpec::Elasticity { nu })) => *nu,
        _ => return Err(usage("--nu is required")),
    };
    Ok(ElasticityParams::new(nu)?)
}

/// Exponents for a single constant real symmetric block, from its extreme
/// eigenvalues.
fn constant_block_interval(op: &OperatorSpec) -> Option<PInterval> {
    let OperatorSpec::Diagonal { blocks } = op else {
        return None;
    };
    let [block] = blocks.as_slice() else {
        return None;
    };
    if !block.is_constant() {
        return None;
    }
    let a = block.eval(&[0.0]).ok()?;
    if !a.is_real() || a.asymmetry() > 1e-12 * a.max_abs() {
        return None;
    }
    let (re, _) = crate::linalg::re_im_split(&a);
    let eig = sym_eigs(&re).ok()?;
    let mu1 = *eig.values.first()?;
    let mum = *eig.values.last()?;
    sym_p_interval(mu1.max(0.0), mum).ok()
}

fn check(c: &Common, plan: &SamplingPlan) -> Result<Report, Failure> {
    let op = operator(c)?;
    let p = exponent(c)?;
    let mut report = Report::new("check", plan);
    let verdict = match &op {
        OperatorSpec::Scalar { field } => {
            report.p_interval = Some(scalar_p_interval(field, plan)?);
            scalar_check(field, &p, plan)?
        }
        OperatorSpec::Diagonal { blocks } => {
            report.p_interval = constant_block_interval(&op);
            system_check(blocks, &p, plan)?
        }
        OperatorSpec::General2d { blocks } => general2d_necessary(blocks, &p, plan)?,
        OperatorSpec::Elasticity { .. } => {
            let params = elasticity_params(c, Some(&op))?;
            report.p_interval = Some(elasticity_p_interval(&params));
            elasticity_check(&params, &p)?
        }
    };
    report.absorb(&verdict);
    if verdict.scope == Scope::NecessaryOnly && verdict.holds() {
        report.verdict = Some(Status::Undetermined);
        report.notes.push("the necessary condition holds; sufficiency is not decided".into());
    }
    report.details = json!({ "p": p.p(), "operator": op_name(&op), "verdict": verdict });
    Ok(report)
}

fn op_name(op: &OperatorSpec) -> &'static str {
    match op {
        OperatorSpec::Scalar { .. } => "scalar",
        OperatorSpec::Diagonal { .. } => "diag",
        OperatorSpec::General2d { .. } => "general2d",
        OperatorSpec::Elasticity { .. } => "elasticity",
    }
}

fn angle(c: &Common, plan: &SamplingPlan) -> Result<Report, Failure> {
    let op = operator(c)?;
    let p = exponent(c)?;
    let mut report = Report::new("angle", plan);
    let result = match &op {
        OperatorSpec::Scalar { field } => scalar_angle(field, &p, plan).map(|r| {
            report.interval = Some(r.interval);
            report.details = json!({ "p": p.p(), "operator": "scalar", "angle": r });
        }),
        OperatorSpec::Diagonal { blocks } => system_angle(blocks, &p, plan).map(|r| {
            report.interval = Some(r.interval);
            report.details = json!({ "p": p.p(), "operator": "diag", "angle": r });
        }),
        _ => {
            return Err(usage("angles are available for scalar and diagonal operators"));
        }
    };
    match result {
        Ok(()) => {
            report.verdict = Some(Status::Holds);
            Ok(report)
        }
        Err(Error::NotDissipative { margin, witness }) => {
            report.verdict = Some(Status::Fails);
            report.margin = Some(margin);
            report.witness = witness.map(|w| *w);
            report.notes.push("the operator is not dissipative; no angle applies".into());
            Ok(report)
        }
        Err(e) => Err(e.into()),
    }
}

fn elasticity(c: &Common, plan: &SamplingPlan) -> Result<Report, Failure> {
    let inline = c.inline.clone();
    let params = elasticity_params(c, inline.as_ref())?;
    let mut report = Report::new("elasticity", plan);
    report.p_interval = Some(elasticity_p_interval(&params));
    let mut details = json!({
        "nu": params.nu,
        "gamma": params.gamma,
        "strong_elliptic": params.strong_elliptic,
        "threshold": ext(params.threshold()),
    });
    if let Some(pv) = c.p {
        let p = PExponent::new(pv)?;
        let verdict = elasticity_check(&params, &p)?;
        report.absorb(&verdict);
        details["p"] = json!(p.p());
        details["nu_set"] = json!(elasticity_nu_set(&p));
        details["shift_lower"] = json!(elasticity_shift_lower(&params, &p)?);
        match elasticity_shift_upper(&params, &p) {
            Ok(r) => details["shift_upper"] = json!(r),
            Err(e) => report.notes.push(format!("shift of kΔ − E unavailable: {e}")),
        }
    }
    report.details = details;
    Ok(report)
}

fn ext(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn shift(a: &ShiftArgs, plan: &SamplingPlan) -> Result<Report, Failure> {
    let c = &a.common;
    let op = operator(c)?;
    let p = exponent(c)?;
    let mut report = Report::new("shift", plan);
    let result: ShiftReport = match (&op, a.upper) {
        (OperatorSpec::Elasticity { .. }, false) => elasticity_shift_lower(&elasticity_params(c, Some(&op))?, &p)?,
        (OperatorSpec::Elasticity { .. }, true) => elasticity_shift_upper(&elasticity_params(c, Some(&op))?, &p)?,
        (OperatorSpec::Diagonal { blocks }, false) => {
            let mode = match a.mode {
                ModeArg::Positive => ShiftMode::Positive,
                ModeArg::AnyReal => ShiftMode::AnyReal,
                ModeArg::Psd => ShiftMode::PositiveSemidefinite,
            };
            shift_lower_bound(blocks, &p, plan, mode)?
        }
        (OperatorSpec::Diagonal { blocks }, true) => shift_upper_bound(blocks, &p, plan)?,
        _ => return Err(usage("shifts are available for diagonal systems and elasticity")),
    };
    report.verdict = Some(if result.exists { Status::Holds } else { Status::Fails });
    report.margin = Some(result.criterion_value);
    report.notes.extend(result.notes.iter().cloned());
    report.details = json!({ "p": p.p(), "operator": op_name(&op), "upper": a.upper, "shift": result });
    Ok(report)
}

fn read_field(path: &Path) -> Result<TestField, Failure> {
    from_value(read_json(path)?, "test field")
}

fn oracle(a: &OracleArgs, plan: &SamplingPlan) -> Result<Report, Failure> {
    let c = &a.common;
    let op = operator(c)?;
    let p = exponent(c)?;
    let mut report = Report::new("oracle", plan);
    if let Some(path) = &a.field {
        let v = read_field(path)?;
        let values = form_values(&op, &p, &v, SUPPORT_EPS)?;
        let value = crate::oracle::form_value(&op, &p, &v)?;
        report.margin = Some(value);
        if value < -VIOLATION_TOL {
            report.verdict = Some(Status::Fails);
        }
        report.oracle = Some(json!({
            "mode": "evaluate",
            "value": value,
            "elasticity_value": values.elasticity,
            "gradient_energy": values.gradient_energy,
        }));
        return Ok(report);
    }
    if a.budget == 0 {
        return Err(usage("--budget must be at least 1"));
    }
    match violation_search(&op, &p, plan, a.budget)? {
        Some(found) => {
            report.verdict = Some(Status::Fails);
            report.margin = Some(found.value);
            report.oracle = Some(json!({
                "mode": "search",
                "value": found.value,
                "source": found.source,
                "ladder": found.ladder.map(|(mu, r)| json!({ "mu_amp": mu, "cutoff_r": r })),
                "evaluations": found.evaluations,
                "grid": found.field.grid(),
            }));
            if let Some(path) = &a.save_field {
                let text = serde_json::to_string(&found.field).expect("field serializes");
                write_atomic(path, text.as_bytes())?;
            }
        }
        None => {
            report.verdict = Some(Status::Undetermined);
            report.oracle = Some(json!({ "mode": "search", "value": null, "evaluations": a.budget }));
            report.notes.push("no violating field within the budget; this proves nothing".into());
        }
    }
    Ok(report)
}

fn sim(a: &SimArgs, plan: &SamplingPlan) -> Result<Report, Failure> {
    let c = &a.common;
    let op = operator(c)?;
    let p = exponent(c)?;
    let mut report = Report::new("sim", plan);
    let u0 = if let Some(path) = &a.field {
        read_field(path)?
    } else if a.witness {
        let found = violation_search(&op, &p, plan, 64)?
            .ok_or_else(|| Failure {
                code: EXIT_UNDETERMINED,
                message: "the oracle found no violating field to start from".into(),
            })?;
        evolution_start(&found.field, &p)?
    } else {
        let n = op.space_dim();
        let grid = if a.nodes == 257 {
            random_grid(&op)?
        } else {
            Grid::new(vec![0.0; n], vec![1.0; n], vec![a.nodes; n])?
        };
        let mut rng = Rng::derived(plan.seed, 0x51);
        random_testfield(&grid, op.components(), true, &mut rng)?
    };
    let dt = match a.dt {
        Some(dt) => dt,
        None => stable_step(&op, &u0)?,
    };
    let t_final = a.t.unwrap_or(200.0 * dt);
    let r = contraction_sim(&op, &p, &u0, t_final, dt)?;
    report.verdict = Some(match (r.monotone, a.witness) {
        (true, false) => Status::Holds,
        (true, true) => Status::Undetermined,
        (false, _) => Status::Fails,
    });
    if r.monotone && a.witness {
        report.notes.push("no norm increase observed from the witness datum; inconclusive".into());
    }
    report.margin = Some(-r.worst_increase);
    report.table = Some(Table {
        header: vec!["step".into(), "time".into(), "norm".into()],
        rows: r
            .times
            .iter()
            .zip(&r.norms)
            .enumerate()
            .map(|(k, (t, n))| vec![k.to_string(), fmt_num(*t), fmt_num(*n)])
            .collect(),
    });
    report.oracle = Some(json!(r));
    Ok(report)
}

fn linspace(from: f64, to: f64, rows: usize) -> Vec<f64> {
    if rows == 1 {
        return vec![from];
    }
    (0..rows)
        .map(|i| from + (to - from) * i as f64 / (rows - 1) as f64)
        .collect()
}

fn region(a: &RegionArgs, plan: &SamplingPlan) -> Result<Report, Failure> {
    let c = &a.common;
    let kind = match (&c.inline, c.op) {
        (Some(OperatorSpec::Elasticity { .. }), _) | (None, Some(OpKind::Elasticity)) => OpKind::Elasticity,
        (None, Some(OpKind::Diag)) => OpKind::Diag,
        _ => return Err(usage("region needs --op elasticity (rows in nu) or --op diag (rows in mu_m/mu_1)")),
    };
    let (default_from, default_to) = if kind == OpKind::Elasticity { (-1.0, 0.45) } else { (1.0, 100.0) };
    let values = if a.values.is_empty() {
        if a.rows == 0 {
            return Err(usage("--rows must be at least 1"));
        }
        let from = a.from.unwrap_or(default_from);
        let to = a.to.unwrap_or(default_to);
        if !(from.is_finite() && to.is_finite() && from <= to) {
            return Err(usage(format!("invalid range [{from}, {to}]")));
        }
        linspace(from, to, a.rows)
    } else {
        a.values.clone()
    };
    let mut report = Report::new("region", plan);
    let interval_cells = |i: &PInterval| {
        vec![
            fmt_num(i.p_lo),
            fmt_num(i.p_hi),
            i.closed_lo.to_string(),
            i.closed_hi.to_string(),
            i.empty.to_string(),
        ]
    };
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let header: Vec<String>;
    if kind == OpKind::Elasticity {
        header = ["nu", "segment", "p_lo", "p_hi", "closed_lo", "closed_hi", "empty"]
            .map(String::from)
            .to_vec();
        let crosses = values.iter().any(|v| *v < 0.5) && values.iter().any(|v| *v > 0.5);
        if crosses {
            report
                .notes
                .push("the nu range crosses 1/2, where the operator is undefined; rows are split into two segments".into());
        }
        if values.contains(&0.5) {
            report.notes.push("nu = 1/2 is skipped".into());
        }
        for nu in values.into_iter().filter(|v| *v != 0.5) {
            let params = ElasticityParams::new(nu)?;
            let interval = elasticity_p_interval(&params);
            let segment = if crosses && nu > 0.5 { 1 } else { 0 };
            let mut row = vec![fmt_num(nu), segment.to_string()];
            row.extend(interval_cells(&interval));
            rows.push(row);
            json_rows.push(json!({ "nu": nu, "segment": segment, "p_interval": interval }));
        }
    } else {
        header = ["ratio", "p_lo", "p_hi", "closed_lo", "closed_hi", "empty"]
            .map(String::from)
            .to_vec();
        for r in values {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(usage(format!("eigenvalue ratio {r} must be finite and at least 1")));
            }
            let interval = sym_p_interval(1.0, r)?;
            let mut row = vec![fmt_num(r)];
            row.extend(interval_cells(&interval));
            rows.push(row);
            json_rows.push(json!({ "ratio": r, "p_interval": interval }));
        }
    }
    report.details = json!({ "operator": if kind == OpKind::Elasticity { "elasticity" } else { "diag" }, "rows": json_rows });
    report.table = Some(Table { header, rows });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["lpdiss"];
        argv.extend_from_slice(args);
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn number_formatting_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456789.0, 2.5e20, -0.0, 11.867_9] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert!(fmt_num(1.0 / 3.0).trim_start_matches("0.").len() <= 17);
    }

    #[test]
    fn elasticity_check_exit_and_margin() {
        let (code, out, _) = run_capture(&["check", "--op", "elasticity", "--nu", "0.3", "--p", "2"]);
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!((v["margin"].as_f64().unwrap() - 0.172_839).abs() < 1e-6);
        for key in ["command", "verdict", "margin", "witness", "interval", "p_interval", "oracle", "notes", "version", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["check", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["check", "--op", "diag", "--p", "3"]).0, 2);
        assert_eq!(run_capture(&[]).0, 2);
        let (code, _, err) = run_capture(&["check", "--op", "elasticity", "--nu", "0.3", "--p", "0.5"]);
        assert_eq!(code, 2);
        assert!(err.starts_with("error:"));
    }

    #[test]
    fn region_rows() {
        let (code, out, _) = run_capture(&["region", "--op", "diag", "--values", "1,9", "--format", "csv"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "ratio,p_lo,p_hi,closed_lo,closed_hi,empty");
        assert_eq!(lines[1], "1,1,inf,false,false,false");
        assert!(lines[2].starts_with("9,1.25,5"));
        let (_, out, _) = run_capture(&["region", "--op", "elasticity", "--from", "0", "--to", "1.5", "--rows", "4"]);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["details"]["rows"][2]["segment"], 1);
        assert!(v["notes"][1].as_str().unwrap().contains("skipped"));
        assert!(v["notes"][0].as_str().unwrap().contains("crosses"));
    }
}
