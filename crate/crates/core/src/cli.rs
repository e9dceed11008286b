//! Command-line front end of the `filtlab` binary.
//!
//! Every command prints one JSON line to stdout; with `--out DIR` the same
//! line and the command's CSV tables are written to files in `DIR`. Reports
//! carry the resolved configuration and arithmetic mode and contain no
//! timestamps, so identical flags give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::invariants::{compare_fingerprints, fingerprint, InvariantFingerprint};
use crate::iteration::{
    concentration_check, decide_standardness, iterate, write_csv, Decision, FunctionSpec,
    InitialMetricSpec, IterationReport, Semantics, DEFAULT_TOL, DEFAULT_WINDOW,
};
use crate::model::{MarkovModel, ModelFile};
use crate::numeric::{Mode, Rational, Scalar};
use crate::shadow::{
    exchangeability_check, level_law, sampling_tolerance, secondary_entropy, shadow_stabilization,
    write_law_csv, LevelLaw,
};
use crate::trees::{
    brute_force_coupling_oracle, criterion_check, quotient_criterion, LeafValuation, TreeBuilder,
    TreeCouplingSemantics, ORACLE_LEAF_LIMIT,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "filtlab",
    version,
    about = "Standardness diagnostics for tail filtrations of Markov chains"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Force exact rational arithmetic.
    #[arg(long, global = true, conflicts_with = "float")]
    pub exact: bool,
    /// Force f64 arithmetic.
    #[arg(long, global = true)]
    pub float: bool,
    /// Decision tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Directory for report files.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SemanticsArg {
    Kantorovich,
    TvPerLevel,
    TvRefresh,
}

impl SemanticsArg {
    fn resolve(self) -> Semantics {
        match self {
            SemanticsArg::Kantorovich => Semantics::Kantorovich,
            SemanticsArg::TvPerLevel | SemanticsArg::TvRefresh => Semantics::TvRefresh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingArg {
    Markov,
    Orbit,
    Iso,
    All,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Iterate the semimetric and report the functional under both semantics.
    Analyze(AnalyzeArgs),
    /// Evaluate the tree-coupling criterion for a function.
    Criterion(CriterionArgs),
    /// Compare finite invariants of one or two models.
    Invariants(InvariantsArgs),
    /// Sample distance matrices and estimate distance laws.
    Shadow(ShadowArgs),
    /// Pass to a subsequence of levels and write the resulting model.
    Telescope(TelescopeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    pub model: PathBuf,
    /// Last level to compute; defaults to min(horizon, 16).
    #[arg(long)]
    pub levels: Option<usize>,
    /// Semantics used for the headline decision.
    #[arg(long, value_enum, default_value_t = SemanticsArg::Kantorovich)]
    pub semantics: SemanticsArg,
    /// `discrete`, `cylinder:w0,w1,...` or `function:FILE`.
    #[arg(long, default_value = "discrete")]
    pub init: String,
    /// Decision window; defaults to min(5, computed levels).
    #[arg(long)]
    pub window: Option<usize>,
    /// Ball radius for the concentration check.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CriterionArgs {
    pub model: PathBuf,
    /// Level of the partition whose elements are coupled.
    #[arg(long)]
    pub level: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Function files; the level-0 coordinate is used when none is given.
    #[arg(long = "function")]
    pub functions: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = CouplingArg::All)]
    pub semantics: CouplingArg,
    /// Check the quotient filtration seen from this level.
    #[arg(long)]
    pub quotient: Option<usize>,
    /// Cross-check small pairs against exhaustive enumeration.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InvariantsArgs {
    pub model: PathBuf,
    pub other: Option<PathBuf>,
    #[arg(long)]
    pub levels: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ShadowArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub level: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub matrix_size: usize,
    #[arg(long, value_enum, default_value_t = SemanticsArg::Kantorovich)]
    pub semantics: SemanticsArg,
    #[arg(long, default_value = "discrete")]
    pub init: String,
    /// Levels for the stabilization test, e.g. `2,4,6,8`.
    #[arg(long, value_delimiter = ',')]
    pub stabilize: Vec<usize>,
    /// Radius for the covering number of the law's support.
    #[arg(long, default_value_t = 0.01)]
    pub entropy_eps: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TelescopeArgs {
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub schedule: Vec<usize>,
}

/// Failure of a command together with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() {
            EXIT_INPUT
        } else {
            EXIT_NUMERIC
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = std::result::Result<Output, Failure>;

/// What a command produced: the JSON report, extra files, and the exit code.
pub struct Output {
    pub name: &'static str,
    pub report: Value,
    pub files: Vec<(String, Vec<u8>)>,
    pub code: i32,
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Exact => "exact",
        Mode::Float => "float",
    }
}

fn resolve_mode(global: &GlobalArgs, files: &[&ModelFile]) -> Mode {
    if global.exact {
        return Mode::Exact;
    }
    if global.float {
        return Mode::Float;
    }
    let (states, horizon) = files
        .iter()
        .map(|f| f.size_hint())
        .fold((0, 0), |(s, h), (s2, h2)| (s.max(s2), h.max(h2)));
    Mode::auto(states, horizon)
}

fn load(path: &Path) -> std::result::Result<ModelFile, Failure> {
    ModelFile::load(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
    })
}

fn input_err(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn parse_init<S: Scalar>(spec: &str) -> Result<InitialMetricSpec<S>> {
    if spec == "discrete" {
        return Ok(InitialMetricSpec::DiscreteOnLevel0);
    }
    if let Some(w) = spec.strip_prefix("cylinder:") {
        let weights = w
            .split(',')
            .map(|x| S::parse_number(x.trim()))
            .collect::<Result<Vec<S>>>()?;
        return InitialMetricSpec::weighted(weights);
    }
    if let Some(path) = spec.strip_prefix("function:") {
        return Ok(InitialMetricSpec::FromFunction(FunctionSpec::load(path)?));
    }
    Err(Error::Invalid(format!(
        "flag `--init`: expected discrete, cylinder:W,... or function:FILE, got {spec:?}"
    )))
}

fn num<S: Scalar>(x: &S) -> Value {
    Value::String(x.repr())
}

fn matrix_json<S: Scalar>(d: &crate::transport::Semimetric<S>) -> Value {
    Value::Array(
        d.matrix()
            .rows()
            .into_iter()
            .map(|r| Value::Array(r.iter().map(num).collect()))
            .collect(),
    )
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    if let Some(t) = cli.global.threads {
        if t == 0 {
            eprintln!("error: flag `--threads` must be positive");
            return EXIT_INPUT;
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_NUMERIC;
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(out) => match emit(&cli.global, &out) {
            Ok(()) => out.code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INPUT
            }
        },
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn emit(global: &GlobalArgs, out: &Output) -> Result<()> {
    let line = serde_json::to_string(&out.report)?;
    println!("{line}");
    if let Some(dir) = &global.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.jsonl", out.name)), format!("{line}\n"))?;
        for (name, bytes) in &out.files {
            fs::write(dir.join(name), bytes)?;
        }
    }
    Ok(())
}

/// Runs the command without printing anything.
pub fn execute(cli: &Cli) -> Outcome {
    let g = &cli.global;
    if !(g.tol > 0.0 && g.tol.is_finite()) {
        return Err(input_err("flag `--tol` must be positive"));
    }
    match &cli.command {
        Command::Analyze(a) => {
            let file = load(&a.model)?;
            let mode = resolve_mode(g, &[&file]);
            match mode {
                Mode::Exact => analyze::<Rational>(g, a, &file, mode),
                Mode::Float => analyze::<f64>(g, a, &file, mode),
            }
        }
        Command::Criterion(a) => {
            if !(a.eps > 0.0 && a.eps < 1.0) {
                return Err(input_err(format!(
                    "flag `--eps` must lie in (0, 1), got {}",
                    a.eps
                )));
            }
            let file = load(&a.model)?;
            let mode = resolve_mode(g, &[&file]);
            match mode {
                Mode::Exact => criterion::<Rational>(g, a, &file, mode),
                Mode::Float => criterion::<f64>(g, a, &file, mode),
            }
        }
        Command::Invariants(a) => {
            let first = load(&a.model)?;
            let second = a.other.as_deref().map(load).transpose()?;
            let files: Vec<&ModelFile> = std::iter::once(&first).chain(second.as_ref()).collect();
            let mode = resolve_mode(g, &files);
            match mode {
                Mode::Exact => invariants::<Rational>(g, a, &first, second.as_ref(), mode),
                Mode::Float => invariants::<f64>(g, a, &first, second.as_ref(), mode),
            }
        }
        Command::Shadow(a) => {
            let file = load(&a.model)?;
            let mode = resolve_mode(g, &[&file]);
            match mode {
                Mode::Exact => shadow::<Rational>(g, a, &file, mode),
                Mode::Float => shadow::<f64>(g, a, &file, mode),
            }
        }
        Command::Telescope(a) => {
            let file = load(&a.model)?;
            let mode = resolve_mode(g, &[&file]);
            match mode {
                Mode::Exact => telescope::<Rational>(g, a, &file, mode),
                Mode::Float => telescope::<f64>(g, a, &file, mode),
            }
        }
    }
}

fn header(g: &GlobalArgs, command: &Command, mode: Mode) -> Value {
    json!({
        "command": command,
        "global": g,
        "mode": mode_name(mode),
    })
}

fn series_json<S: Scalar>(r: &IterationReport<S>, decision: Decision) -> Value {
    json!({
        "semantics": r.semantics.name(),
        "decision": decision.name(),
        "levels": r.levels.iter().map(|l| json!({
            "n": l.level,
            "I_n": num(&l.functional),
            "max_pair_distance": num(&l.max_pair_distance),
        })).collect::<Vec<_>>(),
    })
}

const DISCREPANCY_NOTE: &str = "kantorovich iterates the transfer of the previous level's semimetric and contracts; \
tv_refresh measures total variation of cotransition rows afresh at each level. The two series answer different \
coupling questions and may disagree.";

fn analyze<S: Scalar>(g: &GlobalArgs, a: &AnalyzeArgs, file: &ModelFile, mode: Mode) -> Outcome {
    let model: MarkovModel<S> = file.build()?;
    let levels = a.levels.unwrap_or(model.horizon().min(16));
    let init = parse_init::<S>(&a.init)?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(input_err(format!(
            "flag `--eps` must lie in (0, 1), got {}",
            a.eps
        )));
    }
    let primary = a.semantics.resolve();
    let mut reports = Vec::new();
    for sem in [Semantics::Kantorovich, Semantics::TvRefresh] {
        let r = iterate(&model, &init, levels, sem)?;
        let window = a.window.unwrap_or(DEFAULT_WINDOW.min(r.levels.len()));
        let d = decide_standardness(&r, g.tol, window)?;
        reports.push((r, d));
    }
    let (main, main_decision) = reports
        .iter()
        .find(|(r, _)| r.semantics == primary)
        .expect("both computed");
    let last = main.levels.last().ok_or(Error::LevelMissing(levels))?;
    let conc = concentration_check(&model, main, last.level, a.eps)?;
    let disagree = reports[0].1 != reports[1].1;
    let mut report = header(g, &Command::Analyze(a.clone()), mode);
    report["model"] = json!({ "kind": model.kind(), "horizon": model.horizon(), "max_states": model.max_state_count() });
    report["semantics"] = json!(primary.name());
    report["decision"] = json!(main_decision.name());
    report["series"] = Value::Array(reports.iter().map(|(r, d)| series_json(r, *d)).collect());
    report["concentration"] = json!({
        "level": last.level,
        "eps": a.eps,
        "vertex": conc.vertex,
        "best_vertex": conc.best_vertex,
        "mass": num(&conc.mass),
    });
    if last.distances.size() <= 16 {
        report["final_distances"] = matrix_json(&last.distances);
    }
    report["ergodicity"] =
        serde_json::to_value(model.ergodicity_diagnostic(levels.max(1).min(model.horizon()))?)?;
    report["discrepancy"] = json!({ "decisions_differ": disagree, "note": DISCREPANCY_NOTE });
    let mut csv = Vec::new();
    let rows: Vec<_> = reports.iter().map(|(r, d)| (r, *d)).collect();
    write_csv(&rows, &mut csv)?;
    Ok(Output {
        name: "analyze",
        report,
        files: vec![("series.csv".into(), csv)],
        code: EXIT_OK,
    })
}

fn coordinate_function<S: Scalar>(model: &MarkovModel<S>) -> FunctionSpec<S> {
    let entries = model
        .labels(0)
        .iter()
        .map(|&l| (vec![l], S::from_int(l as i64)));
    FunctionSpec::from_table(1, entries).expect("depth-1 paths")
}

fn criterion<S: Scalar>(
    g: &GlobalArgs,
    a: &CriterionArgs,
    file: &ModelFile,
    mode: Mode,
) -> Outcome {
    let model: MarkovModel<S> = file.build()?;
    let mut functions = Vec::new();
    if a.functions.is_empty() {
        functions.push(("x_0".to_string(), coordinate_function(&model)));
    }
    for p in &a.functions {
        let f = FunctionSpec::load(p).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
        functions.push((p.display().to_string(), f));
    }
    let semantics: Vec<TreeCouplingSemantics> = match a.semantics {
        CouplingArg::Markov => vec![TreeCouplingSemantics::MarkovRecursive],
        CouplingArg::Orbit => vec![TreeCouplingSemantics::AutomorphismOrbit],
        CouplingArg::Iso => vec![TreeCouplingSemantics::IsoMixture],
        CouplingArg::All => TreeCouplingSemantics::ALL.to_vec(),
    };
    let (target, level) = match a.quotient {
        Some(k) => {
            if k >= a.level {
                return Err(input_err(format!(
                    "flag `--quotient`: {k} must be below level {}",
                    a.level
                )));
            }
            (model.rebased(k)?, a.level - k)
        }
        None => (model.clone(), a.level),
    };
    let mut rows = Vec::new();
    let mut mismatches = 0usize;
    let mut oracle_checked = 0usize;
    for (name, f) in &functions {
        for &sem in &semantics {
            let result = match a.quotient {
                Some(k) => quotient_criterion(&model, f, a.eps, a.level, k, sem),
                None => criterion_check(&model, f, a.eps, a.level, sem),
            };
            let r = match result {
                Ok(r) => r,
                Err(e @ Error::NotHomogeneous { .. }) => {
                    rows.push(json!({
                        "function": name,
                        "semantics": sem.name(),
                        "applicable": false,
                        "reason": e.to_string(),
                    }));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let mut oracle = Value::Null;
            if a.oracle {
                let trees = TreeBuilder::new(&target).level(level)?;
                let v = LeafValuation::new(f.clone());
                let (mut checked, mut skipped, mut bad) = (0usize, 0usize, Vec::new());
                for p in &r.pairs {
                    let (x, y) = (&trees[p.a], &trees[p.b]);
                    if x.leaf_count + y.leaf_count > ORACLE_LEAF_LIMIT {
                        skipped += 1;
                        continue;
                    }
                    let expected = match brute_force_coupling_oracle(x, y, &v, &v, sem) {
                        Ok(d) => Some(d),
                        Err(Error::NoCoupling) => None,
                        Err(Error::TooLarge { .. }) => {
                            skipped += 1;
                            continue;
                        }
                        Err(e) => return Err(e.into()),
                    };
                    checked += 1;
                    let same = match (&expected, &p.distance) {
                        (Some(x), Some(y)) => x.near(y),
                        (None, None) => true,
                        _ => false,
                    };
                    if !same {
                        bad.push(json!([p.a, p.b]));
                    }
                }
                oracle_checked += checked;
                mismatches += bad.len();
                oracle = json!({ "checked": checked, "skipped": skipped, "mismatches": bad });
            }
            rows.push(json!({
                "function": name,
                "semantics": sem.name(),
                "applicable": true,
                "level": r.level,
                "eps": r.eps,
                "satisfied": r.satisfied,
                "pair_mass_below_eps": num(&r.pair_mass_below_eps),
                "no_coupling_pairs": r.pairs.iter().filter(|p| p.distance.is_none()).map(|p| json!([p.a, p.b])).collect::<Vec<_>>(),
                "pairs": r.pairs.iter().map(|p| json!({
                    "a": p.a,
                    "b": p.b,
                    "distance": p.distance.as_ref().map(num),
                })).collect::<Vec<_>>(),
                "oracle": oracle,
            }));
        }
    }
    let mut report = header(g, &Command::Criterion(a.clone()), mode);
    report["results"] = Value::Array(rows);
    if a.oracle {
        report["oracle"] = json!({ "checked": oracle_checked, "mismatches": mismatches });
    }
    let code = if mismatches > 0 { EXIT_ORACLE } else { EXIT_OK };
    Ok(Output {
        name: "criterion",
        report,
        files: Vec::new(),
        code,
    })
}

fn fingerprint_json<S: Scalar>(f: &InvariantFingerprint<S>) -> Value {
    Value::Array(
        f.levels
            .iter()
            .map(|l| {
                json!({
                    "level": l.level,
                    "classes": l.classes.iter().map(|(form, c)| json!({
                        "form": form.to_string(),
                        "mass": num(&c.mass),
                        "leaf_count": c.leaf_count.to_string(),
                        "members": c.members,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn invariants<S: Scalar>(
    g: &GlobalArgs,
    a: &InvariantsArgs,
    first: &ModelFile,
    second: Option<&ModelFile>,
    mode: Mode,
) -> Outcome {
    let fa = fingerprint(&first.build::<S>()?, a.levels)?;
    let fb = second
        .map(|f| fingerprint(&f.build::<S>()?, a.levels))
        .transpose()?;
    let mut report = header(g, &Command::Invariants(a.clone()), mode);
    report["fingerprints"] = Value::Array(
        std::iter::once(&fa)
            .chain(fb.as_ref())
            .map(fingerprint_json)
            .collect(),
    );
    if let Some(fb) = &fb {
        let c = compare_fingerprints(&fa, fb);
        report["comparison"] = json!({
            "equal_up_to": c.equal_up_to,
            "first_mismatch": c.first_mismatch,
            "verdict": if c.first_mismatch.is_none() { "agree" } else { "mismatch" },
            "note": "agreement of these invariants is necessary for finite isomorphism, not a certificate",
        });
    }
    report["warning"] = json!(fa.warning);
    Ok(Output {
        name: "invariants",
        report,
        files: Vec::new(),
        code: EXIT_OK,
    })
}

fn law_json<S: Scalar>(l: &LevelLaw<S>, entropy_eps: f64) -> Value {
    let support: Vec<f64> = l.empirical.points.iter().map(|p| p.0.to_f64()).collect();
    json!({
        "level": l.level,
        "count": l.empirical.count,
        "empirical": l.empirical.points.iter().map(|(v, f)| json!({"distance": num(v), "frequency": f})).collect::<Vec<_>>(),
        "ci_half_width": l.empirical.ci_half_width,
        "exact": l.exact.as_ref().map(|e| e.iter().map(|(v, w)| json!({"distance": num(v), "mass": num(w)})).collect::<Vec<_>>()),
        "tv_to_exact": l.tv_to_exact,
        "secondary_entropy": { "eps": entropy_eps, "covering_number": secondary_entropy(&support, entropy_eps) },
    })
}

fn shadow<S: Scalar>(g: &GlobalArgs, a: &ShadowArgs, file: &ModelFile, mode: Mode) -> Outcome {
    let model: MarkovModel<S> = file.build()?;
    let init = parse_init::<S>(&a.init)?;
    let sem = a.semantics.resolve();
    if !(a.entropy_eps > 0.0) {
        return Err(input_err("flag `--entropy-eps` must be positive"));
    }
    let top = a
        .stabilize
        .iter()
        .copied()
        .chain([a.level])
        .max()
        .unwrap_or(a.level);
    let iter = iterate(&model, &init, top, sem)?;
    let (sample, law) = level_law(&model, &iter, a.level, a.matrix_size, a.samples, g.seed)?;
    let mut report = header(g, &Command::Shadow(a.clone()), mode);
    report["semantics"] = json!(sem.name());
    report["law"] = law_json(&law, a.entropy_eps);
    report["exchangeability"] = match exchangeability_check(&sample) {
        Ok(d) => json!({ "max_tv": d }),
        Err(Error::MatrixTooSmall { .. }) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let mut laws = vec![law];
    if !a.stabilize.is_empty() {
        let tol = sampling_tolerance(a.samples);
        let s = shadow_stabilization(
            &model,
            &init,
            sem,
            a.matrix_size,
            a.samples,
            &a.stabilize,
            g.seed,
            tol,
        )?;
        report["stabilization"] = json!({
            "levels": s.laws.iter().map(|l| l.level).collect::<Vec<_>>(),
            "laws": s.laws.iter().map(|l| law_json(l, a.entropy_eps)).collect::<Vec<_>>(),
            "successive_distances": s.successive,
            "tol": s.tol,
            "stabilized": s.stabilized,
            "stabilized_from": s.stabilized_from,
        });
        laws = s.laws;
    }
    let mut csv = Vec::new();
    write_law_csv(&laws, &mut csv)?;
    Ok(Output {
        name: "shadow",
        report,
        files: vec![("law.csv".into(), csv)],
        code: EXIT_OK,
    })
}

fn telescope<S: Scalar>(
    g: &GlobalArgs,
    a: &TelescopeArgs,
    file: &ModelFile,
    mode: Mode,
) -> Outcome {
    let model: MarkovModel<S> = file.build()?;
    let t = model.telescope(&a.schedule)?;
    let out = ModelFile::from_model(&t)?;
    let mut report = header(g, &Command::Telescope(a.clone()), mode);
    report["schedule"] = json!(a.schedule);
    report["model"] = serde_json::to_value(&out)?;
    let text = serde_json::to_vec(&out)?;
    Ok(Output {
        name: "telescope",
        report,
        files: vec![("telescoped.json".into(), text)],
        code: EXIT_OK,
    })
}
