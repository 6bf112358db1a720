//! Command-line front end.
//!
//! Exit codes: 0 on success (Supports or Indeterminate), 2 when a requested
//! diagnostic refutes, 1 on usage or config errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{operator_from_json, operator_to_json, parse_vector_spec, CriterionRequest};
use crate::criteria::{
    chaos_backward_summability, check_d_criterion, check_fhc_criterion, check_kitai, fhc_necessary_series,
    mixing_cofiniteness, transitivity_witness, CriterionData, DiagnosticVerdict, SRule, Sample, SeriesClaims,
    VerdictState, D_TOL,
};
use crate::dynamics::{Operator, Target};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spaces::{Address, SeqVector};
use crate::zoo::{implication_violations, zoo_diagnose, zoo_entry, zoo_list, Budget, Side, ZooReport};

#[derive(Parser, Debug)]
#[command(name = "opshift", version, about = "Operator-weighted backward shifts and their dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Orbit norms ||T^n x|| for n = 0..=steps.
    Orbit(OrbitArgs),
    /// Run one criterion and print its verdict.
    Criterion(CriterionArgs),
    /// The catalog of worked examples.
    Zoo {
        #[command(subcommand)]
        cmd: ZooCmd,
    },
    /// Ground truths, implication audit and (optionally) diagnostics for the whole catalog.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct OpSource {
    /// Catalog entry id.
    #[arg(long, conflicts_with = "config")]
    zoo: Option<String>,
    /// Operator config file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Which operator of a catalog entry.
    #[arg(long, value_enum, default_value_t = SideArg::Primary)]
    side: SideArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Primary,
    Base,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    #[command(flatten)]
    src: OpSource,
    /// `delta:ADDR[:VALUE]`, `ADDR=V;ADDR=V`, a JSON array, or `random:K`.
    #[arg(long)]
    vector: String,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct CriterionArgs {
    #[command(flatten)]
    src: OpSource,
    /// transitivity, mixing, chaos, fhc-necessary, kitai, fhc-criterion, d-criterion
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    horizon: Option<u64>,
    /// Full invocation as JSON (criterion, horizon, targets, vector, claims, n0, sets).
    #[arg(long)]
    request: Option<PathBuf>,
    /// Sample vector, or the target center when `--radius` is given.
    #[arg(long)]
    vector: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Outer index of a component target.
    #[arg(long, allow_hyphen_values = true)]
    index: Option<i64>,
    /// Right-inverse rule for the Kitai-type criteria.
    #[arg(long, value_enum, default_value_t = RuleArg::Single)]
    rule: RuleArg,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    Single,
    Sequence,
}

#[derive(Subcommand, Debug)]
enum ZooCmd {
    /// Ids, descriptions and ground truths.
    List {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run declared diagnostics and compare with the expected verdicts.
    Run(ZooRunArgs),
    /// Write an entry's operators as config JSON.
    Export {
        id: String,
        #[arg(long, value_enum, default_value_t = SideArg::Primary)]
        side: SideArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ZooRunArgs {
    /// Entry id; omit with `--all`.
    id: Option<String>,
    #[arg(long, conflicts_with = "id")]
    all: bool,
    /// `default` or a horizon cap N >= 1.
    #[arg(long, default_value = "default")]
    budget: String,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Also run the diagnostics under this budget (`default` or N).
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (program name first), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Orbit(a) => orbit(a),
        Command::Criterion(a) => criterion(a),
        Command::Zoo { cmd } => match cmd {
            ZooCmd::List { format } => zoo_list_cmd(format),
            ZooCmd::Run(a) => zoo_run(a),
            ZooCmd::Export { id, side, out } => {
                let e = zoo_entry(&id)?;
                let built = e.build()?;
                let op = built.side(side.into())?;
                emit(out.as_deref(), &pretty(&operator_to_json(op)?))?;
                Ok(0)
            }
        },
        Command::Report(a) => report(a),
    }
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Primary => Side::Primary,
            SideArg::Base => Side::Base,
        }
    }
}

fn load(src: &OpSource) -> Result<Operator> {
    match (&src.zoo, &src.config) {
        (Some(id), None) => zoo_entry(id)?.build()?.side(src.side.into()).cloned(),
        (None, Some(p)) => {
            let text = read(p)?;
            let v: Value = serde_json::from_str(&text).map_err(|e| {
                Error::Config(format!("{}: line {}, column {}: {e}", p.display(), e.line(), e.column()))
            })?;
            operator_from_json(&v).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
        _ => Err(Error::Argument("give exactly one of --zoo or --config".into())),
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Argument(format!("{}: {e}", p.display()))),
        None => {
            let mut so = std::io::stdout().lock();
            let _ = so.write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Argument(format!("csv: {e}"))
}

/// `random:K` draws K dyadic coordinates on scalar components; anything
/// else goes through the config vector grammar.
fn vector_for(op: &Operator, spec: &str, seed: u64) -> Result<SeqVector> {
    let Some(k) = spec.strip_prefix("random:") else {
        return parse_vector_spec(op.space(), spec);
    };
    let k: usize = k.parse().map_err(|_| Error::Parse(format!("bad count in `{spec}`")))?;
    if !op.is_scalar_chain() {
        return Err(Error::Unsupported("random vectors need scalar components".into()));
    }
    let lo = if op.is_bilateral() { -8 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let items: Vec<(Address, Scalar)> = (0..k)
        .map(|_| {
            let j = rng.gen_range(lo..=8);
            let num = rng.gen_range(-16i64..=16);
            (Address::seq(j), Scalar::ratio(num, 8))
        })
        .collect();
    SeqVector::from_entries(op.space().clone(), items)
}

fn orbit(a: OrbitArgs) -> Result<i32> {
    let op = load(&a.src)?;
    let x = vector_for(&op, &a.vector, a.seed)?;
    let norms = op.orbit_norms(&x, a.steps)?;
    let text = match a.format {
        Format::Csv => csv_text(
            &["n", "norm"],
            norms.iter().enumerate().map(|(n, t)| vec![n.to_string(), t.to_decimal_string()]),
        )?,
        Format::Json => pretty(&json!({
            "operator": op.describe(),
            "vector": x.to_json(),
            "norms": norms.iter().map(Scalar::to_decimal_string).collect::<Vec<_>>(),
        })),
    };
    emit(a.out.as_deref(), &text)?;
    Ok(0)
}

fn criterion(a: CriterionArgs) -> Result<i32> {
    let op = load(&a.src)?;
    let verdict = if let Some(p) = &a.request {
        let text = read(p)?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: line {}, column {}: {e}", p.display(), e.line(), e.column())))?;
        let mut req = CriterionRequest::from_json(&op, &v).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        if let Some(h) = a.horizon {
            req.horizon = h;
        }
        run_request(&op, &req, a.rule, a.tol)?
    } else if a.src.zoo.is_some() && a.vector.is_none() {
        let id = a.src.zoo.as_deref().unwrap_or_default();
        let name = a
            .criterion
            .as_deref()
            .ok_or_else(|| Error::Argument("--criterion is required".into()))?;
        let e = zoo_entry(id)?;
        let d = e
            .diagnostics
            .iter()
            .find(|d| d.criterion == name || d.name == name)
            .ok_or_else(|| Error::Argument(format!("entry `{id}` declares no `{name}` diagnostic")))?;
        let built = e.build()?;
        d.run(&built, a.horizon.unwrap_or(d.horizon))?
    } else {
        let req = request_from_flags(&op, &a)?;
        run_request(&op, &req, a.rule, a.tol)?
    };
    let text = match a.format {
        Format::Json => pretty(&verdict.to_json()),
        Format::Csv => csv_text(
            &["label", "n", "value"],
            verdict.certificates.iter().map(|c| {
                let value = match &c.value {
                    Value::String(s) => s.clone(),
                    v => v.to_string(),
                };
                vec![c.label.clone(), c.n.map(|n| n.to_string()).unwrap_or_default(), value]
            }),
        )?,
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if verdict.state == VerdictState::Refutes { 2 } else { 0 })
}

fn request_from_flags(op: &Operator, a: &CriterionArgs) -> Result<CriterionRequest> {
    let criterion = a
        .criterion
        .clone()
        .ok_or_else(|| Error::Argument("--criterion is required".into()))?;
    let horizon = a
        .horizon
        .ok_or_else(|| Error::Argument("--horizon is required without a catalog diagnostic".into()))?;
    let spec = a
        .vector
        .as_deref()
        .ok_or_else(|| Error::Argument("--vector is required".into()))?;
    let mut targets = Vec::new();
    let mut vector = None;
    if let Some(r) = &a.radius {
        let space = match (a.index, op.as_block()) {
            (Some(j), Some(b)) => b.component_space(j),
            (Some(_), None) => return Err(Error::Argument("--index needs a block shift".into())),
            (None, _) => op.space().clone(),
        };
        let center = parse_vector_spec(&space, spec)?;
        targets.push(Target::new(a.index, center, Scalar::parse(r)?)?);
    } else {
        vector = Some(vector_for(op, spec, a.seed)?);
    }
    let v = json!({"criterion": criterion, "horizon": horizon});
    let mut req = CriterionRequest::from_json(op, &v)?;
    req.targets = targets;
    req.vector = vector;
    Ok(req)
}

/// Dispatches a parsed request to the matching criterion.
fn run_request(op: &Operator, req: &CriterionRequest, rule: RuleArg, tol: f64) -> Result<DiagnosticVerdict> {
    let h = req.horizon;
    let need_vector = || {
        req.vector
            .clone()
            .ok_or_else(|| Error::Argument(format!("{} needs a vector", req.criterion)))
    };
    let need_target = || {
        if req.targets.is_empty() {
            Err(Error::Argument(format!("{} needs a target (give --radius)", req.criterion)))
        } else {
            Ok(())
        }
    };
    let claims = SeriesClaims {
        backward: req.backward.clone(),
        forward: req.forward.clone(),
    };
    let data = || -> Result<CriterionData> {
        let mut s = Sample::new("x", need_vector()?);
        if let Some(c) = &req.forward {
            s = s.forward(c.clone());
        }
        if let Some(c) = &req.backward {
            s = s.backward(c.clone());
        }
        let r = match rule {
            RuleArg::Single => SRule::canonical_single(op),
            RuleArg::Sequence => SRule::canonical_sequence(op),
        };
        Ok(CriterionData::one_set(vec![s], r).with_sets(req.sets.clone()))
    };
    match req.criterion.as_str() {
        "transitivity" => {
            need_target()?;
            transitivity_witness(op, &req.targets, 1..=h)
        }
        "mixing" => {
            need_target()?;
            mixing_cofiniteness(op, &req.targets, h, req.n0)
        }
        "chaos" => chaos_backward_summability(op, &need_vector()?, h, &claims),
        "fhc-necessary" => {
            need_target()?;
            fhc_necessary_series(op, &req.targets[0], h, &claims)
        }
        "kitai" => check_kitai(op, &data()?, h, tol),
        "fhc-criterion" => check_fhc_criterion(op, &data()?, h),
        "d-criterion" => check_d_criterion(op, &data()?, h, D_TOL),
        other => Err(Error::Argument(format!("unknown criterion `{other}`"))),
    }
}

fn parse_budget(s: &str) -> Result<Budget> {
    if s == "default" {
        return Ok(Budget::Default);
    }
    match s.parse::<u64>() {
        Ok(b) if b >= 1 => Ok(Budget::Max(b)),
        _ => Err(Error::Argument(format!("--budget must be `default` or an integer >= 1, got `{s}`"))),
    }
}

/// Diagnoses `ids` in catalog order, optionally one thread per entry.
fn diagnose_all(ids: &[&str], budget: Budget, parallel: bool) -> Result<Vec<ZooReport>> {
    if !parallel {
        return ids.iter().map(|id| zoo_diagnose(id, budget)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = ids.iter().map(|id| s.spawn(move || zoo_diagnose(id, budget))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Argument("worker panicked".into()))))
            .collect()
    })
}

fn zoo_list_cmd(format: Format) -> Result<i32> {
    let list = zoo_list();
    let text = match format {
        Format::Json => pretty(&Value::Array(list.iter().map(|e| e.summary_json()).collect())),
        Format::Csv => {
            let mut rows = Vec::new();
            for e in &list {
                for t in &e.truths {
                    let mut r = vec![e.id.to_string(), t.side.as_str().to_string()];
                    r.extend(crate::zoo::Property::ALL.iter().map(|p| t.get(*p).as_str().to_string()));
                    r.push(e.description.to_string());
                    rows.push(r);
                }
            }
            csv_text(&["id", "side", "HC", "WM", "MIX", "CHAOS", "FHC", "description"], rows)?
        }
    };
    emit(None, &text)?;
    Ok(0)
}

fn zoo_run(a: ZooRunArgs) -> Result<i32> {
    let budget = parse_budget(&a.budget)?;
    let list = zoo_list();
    let ids: Vec<&str> = match (&a.id, a.all) {
        (Some(id), false) => vec![zoo_entry(id)?.id],
        (None, true) => list.iter().map(|e| e.id).collect(),
        _ => return Err(Error::Argument("give an entry id or --all".into())),
    };
    let reports = diagnose_all(&ids, budget, a.parallel)?;
    let text = match a.format {
        Format::Json => pretty(&Value::Array(reports.iter().map(ZooReport::to_json).collect())),
        Format::Csv => csv_text(
            &["id", "diagnostic", "side", "expected", "verdict", "skipped", "matches"],
            reports.iter().flat_map(|r| {
                r.rows.iter().map(move |d| {
                    vec![
                        r.id.clone(),
                        d.name.clone(),
                        d.side.as_str().to_string(),
                        d.expected.as_str().to_string(),
                        d.verdict.state.as_str().to_string(),
                        d.skipped.to_string(),
                        d.matches().to_string(),
                    ]
                })
            }),
        )?,
    };
    emit(a.out.as_deref(), &text)?;
    Ok(if reports.iter().all(ZooReport::all_match) { 0 } else { 1 })
}

fn report(a: ReportArgs) -> Result<i32> {
    let list = zoo_list();
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    for e in &list {
        for t in &e.truths {
            for v in implication_violations(t) {
                violations.push(json!({"id": e.id, "side": t.side.as_str(), "violation": v}));
            }
        }
        entries.push(e.summary_json());
    }
    let mut out = json!({
        "entries": entries,
        "implication_violations": violations,
    });
    let mut ok = violations.is_empty();
    if let Some(b) = &a.budget {
        let ids: Vec<&str> = list.iter().map(|e| e.id).collect();
        let reports = diagnose_all(&ids, parse_budget(b)?, a.parallel)?;
        ok &= reports.iter().all(ZooReport::all_match);
        out["diagnostics"] = Value::Array(reports.iter().map(ZooReport::to_json).collect());
    }
    emit(a.out.as_deref(), &pretty(&out))?;
    Ok(if ok { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_parsing() {
        assert_eq!(parse_budget("default").unwrap(), Budget::Default);
        assert_eq!(parse_budget("30").unwrap(), Budget::Max(30));
        assert!(parse_budget("0").is_err());
        assert!(parse_budget("lots").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["opshift", "orbit", "--vector", "delta:1"]), 1);
        assert_eq!(run(["opshift", "frobnicate"]), 1);
        assert_eq!(run(["opshift", "orbit", "--zoo", "nope", "--vector", "delta:1"]), 1);
    }
}
