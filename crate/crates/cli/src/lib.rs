//! Command-line front end for `negtype`.
//!
//! Every subcommand produces one report (JSON by default, or an aligned
//! table) and an exit code: 0 success, 1 a "fails" verdict from `check` or a
//! violated inequality from `certify`, 2 input errors, 3 solver failures.

mod render;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use negtype::certificate::{certificate_ratio, distorted_inequality_slack};
use negtype::classical::{supremal_negative_type, SupremalValue};
use negtype::closed_forms::{hamming_reference, kmn_reference, simplex_embedding};
use negtype::distorted::SIGN_LAW_EPS;
use negtype::{
    embedding_stats, gap_estimate, min_distortion, standard_space, Family, GraphSpec, Method, PsdCertificate,
    SemiMetricSpace, SolverOptions, Status, VerdictEngine,
};

pub use render::{fmt_num, round_sig, SIG_DIGITS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "negtype", version, about = "Distorted negative type and Euclidean distortion of finite semi-metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Complete,
    Bipartite,
    Hamming,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    InteriorPoint,
    Dykstra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Args, Debug)]
#[group(id = "source", required = true, multiple = false)]
struct SourceChoice {
    /// Distance matrix file: CSV (optional label header) or JSON {"labels", "dist"}.
    #[arg(long, group = "source")]
    input: Option<PathBuf>,
    /// Edge-list graph file: first line "n <count>", then "i j" per line.
    #[arg(long, group = "source")]
    graph: Option<PathBuf>,
    /// Built-in family.
    #[arg(long, group = "source")]
    family: Option<FamilyArg>,
}

#[derive(Args, Debug)]
struct Source {
    #[command(flatten)]
    choice: SourceChoice,
    /// First part size of K_{m,n}.
    #[arg(long)]
    m: Option<usize>,
    /// Point count of K_n, second part size of K_{m,n}, or cube dimension of H_n.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Search {
    /// Random restarts for certificate and gap searches.
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct Solver {
    /// Relative bracket width for c2.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::InteriorPoint)]
    method: MethodArg,
    #[command(flatten)]
    search: Search,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Euclidean distortion c2(X, d^{p/2}) with embedding and certificate.
    Distortion {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Decide (strict) p-negative type with distortion C.
    Check {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        #[arg(long = "C")]
        c: f64,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Supremal p-negative type.
    Supremal {
        #[command(flatten)]
        source: Source,
        /// Bisection tolerance on p.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 64.0)]
        cap: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Estimate the distorted type gap.
    Gap {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        #[arg(long = "C")]
        c: f64,
        #[command(flatten)]
        search: Search,
        #[command(flatten)]
        output: Output,
    },
    /// Verify a certificate matrix: cone membership, ratio and slack.
    Certify {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        /// JSON file holding the matrix as rows, as {"Q": rows}, or a distortion report.
        #[arg(long)]
        cert: PathBuf,
        #[arg(long = "C")]
        c: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Coordinates of an optimal embedding of (X, d^{p/2}).
    Embed {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Closed-form reference data for K_n, K_{m,n} or H_n.
    Reference {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Verdict grid over comma-separated p and C values.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long = "C", value_delimiter = ',', required = true)]
        c: Vec<f64>,
        #[command(flatten)]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    /// The report, unless it was written to `--out`.
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Solver(String),
}

impl From<negtype::Error> for Failure {
    fn from(e: negtype::Error) -> Self {
        match e {
            negtype::Error::SolverFailure(_) | negtype::Error::SearchFailure { .. } => Failure::Solver(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

struct Report {
    json: Value,
    table: String,
    code: i32,
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: EXIT_OK, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: EXIT_INPUT, stdout: String::new(), stderr: text },
            };
        }
    };
    let (output, default_format) = match &cli.command {
        Command::Sweep { output, .. } => (output, Format::Table),
        Command::Distortion { output, .. }
        | Command::Check { output, .. }
        | Command::Supremal { output, .. }
        | Command::Gap { output, .. }
        | Command::Certify { output, .. }
        | Command::Embed { output, .. }
        | Command::Reference { output, .. } => (output, Format::Json),
    };
    let format = output.format.unwrap_or(default_format);
    let out_path = output.out.clone();
    match execute(&cli.command) {
        Ok(report) => {
            let text = match format {
                Format::Json => render::json(report.json),
                Format::Table => report.table,
            };
            match out_path {
                Some(path) => match fs::write(&path, &text) {
                    Ok(()) => Outcome { code: report.code, stdout: String::new(), stderr: String::new() },
                    Err(e) => diagnostic(EXIT_INPUT, format!("cannot write {}: {e}", path.display())),
                },
                None => Outcome { code: report.code, stdout: text, stderr: String::new() },
            }
        }
        Err(Failure::Input(msg)) => diagnostic(EXIT_INPUT, msg),
        Err(Failure::Solver(msg)) => diagnostic(EXIT_SOLVER, format!("solver failure: {msg}")),
    }
}

fn diagnostic(code: i32, msg: String) -> Outcome {
    Outcome { code, stdout: String::new(), stderr: format!("error: {msg}\n") }
}

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn family_of(arg: FamilyArg, m: Option<usize>, n: Option<usize>) -> Res<Family> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::Input(format!("--family {arg:?} needs --{flag}").to_lowercase()));
    let fam = match arg {
        FamilyArg::Complete => Family::Complete { n: need(n, "n")? },
        FamilyArg::Bipartite => Family::Bipartite { m: need(m, "m")?, n: need(n, "n")? },
        FamilyArg::Hamming => Family::Hamming { n: need(n, "n")? },
    };
    fam.check()?;
    Ok(fam)
}

fn load(source: &Source) -> Res<SemiMetricSpace> {
    let c = &source.choice;
    if let Some(path) = &c.input {
        let text = read(path)?;
        let x = if text.trim_start().starts_with('{') {
            SemiMetricSpace::from_json_str(&text)
        } else {
            SemiMetricSpace::from_csv_str(&text)
        };
        return Ok(x?);
    }
    if let Some(path) = &c.graph {
        return Ok(GraphSpec::parse(&read(path)?)?.shortest_path_metric()?);
    }
    let arg = c.family.ok_or_else(|| Failure::Input("no input given".into()))?;
    Ok(standard_space(family_of(arg, source.m, source.n)?)?)
}

fn solver_options(s: &Solver) -> Res<SolverOptions> {
    if !(s.tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", s.tol)));
    }
    Ok(SolverOptions {
        method: match s.method {
            MethodArg::InteriorPoint => Method::InteriorPoint,
            MethodArg::Dykstra => Method::Dykstra,
        },
        rel_tol: s.tol,
        restarts: s.search.restarts,
        seed: s.search.seed,
        ..SolverOptions::default()
    })
}

fn execute(cmd: &Command) -> Res<Report> {
    match cmd {
        Command::Distortion { source, p, solver, .. } => distortion(&load(source)?, *p, &solver_options(solver)?),
        Command::Check { source, p, c, solver, .. } => check(&load(source)?, *p, *c, &solver_options(solver)?),
        Command::Supremal { source, tol, cap, .. } => supremal(&load(source)?, *tol, *cap),
        Command::Gap { source, p, c, search, .. } => gap(&load(source)?, *p, *c, search),
        Command::Certify { source, p, cert, c, .. } => certify(&load(source)?, *p, cert, *c),
        Command::Embed { source, p, solver, .. } => embed(&load(source)?, *p, &solver_options(solver)?),
        Command::Reference { family, m, n, p, .. } => reference(family_of(*family, *m, *n)?, *p),
        Command::Sweep { source, p, c, solver, .. } => sweep(load(source)?, p, c, solver_options(solver)?),
    }
}

fn distortion(x: &SemiMetricSpace, p: f64, opts: &SolverOptions) -> Res<Report> {
    let r = min_distortion(x, p, opts)?;
    let mut json = r.to_json();
    json["labels"] = json!(x.labels());
    json["method"] = json!(r.method);
    json["iterations"] = json!(r.iterations);
    let table = render::key_values(&[
        ("p", json!(r.p)),
        ("c2", json!(r.c2)),
        ("bracket_lo", json!(r.bracket[0])),
        ("bracket_hi", json!(r.bracket[1])),
        ("embedding_dim", json!(r.embedding.dim)),
        ("certificate_ratio", json!(r.certificate.as_ref().map(|(_, ratio)| *ratio))),
        ("certificate_rank", json!(r.certificate.as_ref().map(|(q, _)| q.rank()))),
        ("method", json!(r.method)),
    ]);
    Ok(Report { json, table, code: EXIT_OK })
}

fn check(x: &SemiMetricSpace, p: f64, c: f64, opts: &SolverOptions) -> Res<Report> {
    let v = VerdictEngine::new(x.clone(), opts.clone()).verdict(p, c)?;
    let mut json = v.to_json();
    json["c2_bracket"] = json!(v.c2_bracket);
    let table = render::key_values(&[
        ("p", json!(v.p)),
        ("C", json!(v.c)),
        ("status", json!(v.status.as_str())),
        ("c2", json!(v.c2_used)),
        ("c2_bracket", json!(format!("[{}, {}]", fmt_num(v.c2_bracket[0]), fmt_num(v.c2_bracket[1])))),
        ("supremal_p", json!(v.supremal_p)),
        ("rationale", json["rationale"].clone()),
        ("ambiguous", json!(v.ambiguous)),
    ]);
    let code = if v.status == Status::Fails { EXIT_FAILS } else { EXIT_OK };
    Ok(Report { json, table, code })
}

fn supremal(x: &SemiMetricSpace, tol: f64, cap: f64) -> Res<Report> {
    if !(tol > 0.0) || !(cap >= 1.0) {
        return Err(Failure::Input(format!("need --tol > 0 and --cap >= 1, got {tol} and {cap}")));
    }
    let s = supremal_negative_type(x, tol, cap);
    let value = match s.value {
        SupremalValue::Finite { value } => json!(value),
        SupremalValue::AtLeastCap => json!("at-least-cap"),
    };
    let upper = s.bracket[1].is_finite().then_some(s.bracket[1]);
    let json = json!({ "supremal_p": value, "bracket": [s.bracket[0], upper], "cap": s.cap, "tol": tol });
    let table = render::key_values(&[
        ("supremal_p", value.clone()),
        ("bracket_lo", json!(s.bracket[0])),
        ("bracket_hi", json!(upper)),
        ("cap", json!(s.cap)),
    ]);
    Ok(Report { json, table, code: EXIT_OK })
}

fn sign_word(value: f64, eps: f64) -> &'static str {
    if value > eps {
        "positive"
    } else if value < -eps {
        "negative"
    } else {
        "zero"
    }
}

fn gap(x: &SemiMetricSpace, p: f64, c: f64, search: &Search) -> Res<Report> {
    let g = gap_estimate(x, p, c, search.restarts.max(1), search.seed)?;
    let scale = x.max_distance().powf(p);
    let sign = sign_word(g.value, SIGN_LAW_EPS * scale);
    let mut json = g.to_json();
    json["p"] = json!(p);
    json["C"] = json!(c);
    json["scale"] = json!(scale);
    json["sign"] = json!(sign);
    let table = render::key_values(&[
        ("p", json!(p)),
        ("C", json!(c)),
        ("value", json!(g.value)),
        ("sign", json!(sign)),
        ("scale", json!(scale)),
        ("rank", json!(g.argmin_q.rank())),
        ("restarts_used", json!(g.restarts_used)),
        ("sign_confident", json!(g.sign_confident)),
    ]);
    Ok(Report { json, table, code: EXIT_OK })
}

fn certificate_rows(text: &str) -> Res<Vec<Vec<f64>>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Failure::Input(format!("certificate: {e}")))?;
    let m = if v.is_array() {
        &v
    } else if v.get("Q").is_some() {
        &v["Q"]
    } else if v.pointer("/certificate/Q").is_some() {
        &v["certificate"]["Q"]
    } else {
        return Err(Failure::Input("certificate: expected rows, {\"Q\": rows} or a report with a certificate".into()));
    };
    serde_json::from_value(m.clone()).map_err(|e| Failure::Input(format!("certificate: {e}")))
}

fn certify(x: &SemiMetricSpace, p: f64, path: &Path, c: Option<f64>) -> Res<Report> {
    let rows = certificate_rows(&read(path)?)?;
    if rows.len() != x.len() {
        return Err(negtype::Error::DimensionMismatch { expected: x.len(), got: rows.len() }.into());
    }
    let q = PsdCertificate::from_rows(&rows)?;
    let ratio = match certificate_ratio(x, p, &q) {
        Ok(r) => Some(r),
        Err(negtype::Error::ZeroDenominator) => None,
        Err(e) => return Err(e.into()),
    };
    let mut code = EXIT_OK;
    let mut fields = vec![
        ("valid", json!(true)),
        ("p", json!(p)),
        ("rank", json!(q.rank())),
        ("pos", json!(q.pos())),
        ("sign_eps", json!(q.sign_eps())),
        ("ratio", json!(ratio)),
        ("distortion_lower_bound", json!(ratio.map(|r| r.max(1.0).sqrt()))),
    ];
    if let Some(c) = c {
        if !(c >= 1.0) {
            return Err(Failure::Input(format!("--C must be >= 1, got {c}")));
        }
        let slack = distorted_inequality_slack(x, p, c, &q)?;
        let mass: f64 = q.matrix().iter().map(|v| v.abs()).sum();
        let tol = 1e-9 * x.max_distance().powf(p) * mass * c * c;
        let holds = slack <= tol;
        if !holds {
            code = EXIT_FAILS;
        }
        fields.push(("C", json!(c)));
        fields.push(("slack", json!(slack)));
        fields.push(("inequality_holds", json!(holds)));
    }
    let json = Value::Object(fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect());
    Ok(Report { json, table: render::key_values(&fields), code })
}

fn embed(x: &SemiMetricSpace, p: f64, opts: &SolverOptions) -> Res<Report> {
    let r = min_distortion(x, p, opts)?;
    let stats = embedding_stats(x, p, &r.embedding)?;
    let json = json!({
        "p": p,
        "c2": r.c2,
        "dim": r.embedding.dim,
        "scale": r.embedding.scale,
        "labels": x.labels(),
        "points": r.embedding.points,
        "expansion": stats.expansion,
        "contraction": stats.contraction,
        "distortion": stats.distortion,
    });
    let headers: Vec<String> =
        std::iter::once("label".to_string()).chain((0..r.embedding.dim).map(|k| format!("x{k}"))).collect();
    let rows: Vec<Vec<Value>> = x
        .labels()
        .iter()
        .zip(&r.embedding.points)
        .map(|(l, pt)| std::iter::once(json!(l)).chain(pt.iter().map(|v| json!(v))).collect())
        .collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut table = render::key_values(&[("p", json!(p)), ("c2", json!(r.c2)), ("distortion", json!(stats.distortion))]);
    table.push('\n');
    table.push_str(&render::grid(&header_refs, &rows));
    Ok(Report { json, table, code: EXIT_OK })
}

fn reference(family: Family, p: Option<f64>) -> Res<Report> {
    if let Some(p) = p {
        if !(p >= 0.0) || !p.is_finite() {
            return Err(negtype::Error::BadExponent(p).into());
        }
    }
    let x = standard_space(family)?;
    let (name, m, n) = match family {
        Family::Complete { n } => ("complete", None, n),
        Family::Bipartite { m, n } => ("bipartite", Some(m), n),
        Family::Hamming { n } => ("hamming", None, n),
    };
    let (supremal, c2, embedding, certificate) = match family {
        Family::Complete { n } => (None, p.map(|_| 1.0), Some(simplex_embedding(n)?), None),
        Family::Bipartite { m, n } => {
            let r = kmn_reference(m, n)?;
            (Some(r.supremal), p.map(|p| r.c2_at(p)), p.map(|p| r.embedding_at(p)), Some(r.certificate))
        }
        Family::Hamming { n } => {
            let r = hamming_reference(n)?;
            let sup = (n >= 2).then_some(1.0);
            (sup, p.map(|p| r.c2_at(p)), p.map(|p| r.embedding_at(p)), r.certificate)
        }
    };
    let mut fields: Vec<(&str, Value)> = vec![("family", json!(name))];
    if let Some(m) = m {
        fields.push(("m", json!(m)));
    }
    fields.push(("n", json!(n)));
    fields.push(("supremal_p", supremal.map_or(json!("unbounded"), |s| json!(s))));
    if let Some(p) = p {
        fields.push(("p", json!(p)));
        fields.push(("c2", json!(c2)));
    }
    let mut json = Value::Object(fields.iter().map(|(k, v)| (k.to_string(), v.clone())).collect());
    if let Some(e) = &embedding {
        json["embedding"] = json!({ "dim": e.dim, "scale": e.scale, "points": e.points });
        fields.push(("embedding_dim", json!(e.dim)));
        if let Some(p) = p {
            let stats = embedding_stats(&x, p, e)?;
            json["embedding"]["distortion"] = json!(stats.distortion);
            fields.push(("embedding_distortion", json!(stats.distortion)));
        }
    }
    if let Some(q) = &certificate {
        let ratio = p.map(|p| certificate_ratio(&x, p, q)).transpose()?;
        json["certificate"] = serde_json::to_value(q.to_json(ratio)).expect("certificate serializes");
        fields.push(("certificate_rank", json!(q.rank())));
        if ratio.is_some() {
            fields.push(("certificate_ratio", json!(ratio)));
        }
    }
    Ok(Report { json, table: render::key_values(&fields), code: EXIT_OK })
}

fn sweep(x: SemiMetricSpace, ps: &[f64], cs: &[f64], opts: SolverOptions) -> Res<Report> {
    let engine = VerdictEngine::new(x, opts);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &p in ps {
        for &c in cs {
            let v = engine.verdict(p, c)?;
            let j = v.to_json();
            cells.push(vec![
                json!(p),
                json!(c),
                json!(v.status.as_str()),
                json!(v.c2_used),
                j["rationale"].clone(),
                json!(v.ambiguous),
            ]);
            rows.push(j);
        }
    }
    let table = render::grid(&["p", "C", "status", "c2", "rationale", "ambiguous"], &cells);
    Ok(Report { json: json!({ "rows": rows }), table, code: EXIT_OK })
}
