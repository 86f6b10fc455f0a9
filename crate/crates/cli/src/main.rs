use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mvops::acceptance::{counterexample_records, run_all};
use mvops::construct::{GramBlocks, PolySystem, SystemEnvelope};
use mvops::error::Error;
use mvops::families::{self, FAMILIES};
use mvops::linrel::{
    classify_ranks, compute_relation, relation_from_coefficients, theorem3_check, theorem4_construct,
    LinearRelation, RelationEnvelope,
};
use mvops::manifest::Manifest;
use mvops::matrixkit::{self, Matrix};
use mvops::moments::FamilySpec;
use mvops::report::{theorem_records, CheckRecord, Tolerances, VerdictReport};
use mvops::ttr::{fit_ttr, generate_from_ttr, validate_rank_conditions, ThreeTermData, TtrEnvelope};

/// Multivariate orthogonal polynomials: catalog verifications and checks of
/// three-term and linear structure relations.
#[derive(Parser, Debug)]
#[command(name = "mvops", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Relative singular-value threshold for numeric rank.
    #[arg(long, global = true, env = "MVOPS_TOL_RANK", default_value_t = 1e-9)]
    tol_rank: f64,
    /// Residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_res: f64,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized perturbations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Include wall time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a catalog family and run every check on it.
    Family(FamilyArgs),
    /// The two-variable example whose C̃_{n,1} lose rank.
    Counterexample {
        /// Largest degree.
        #[arg(long, default_value_t = 8)]
        n: usize,
    },
    /// Compatibility and rank conditions for three-term data and a relation.
    Check(CheckArgs),
    /// Generate a system forward from three-term data.
    Generate(GenerateArgs),
    /// The relation Q_n = P_n + M_n P_{n-1} between two systems.
    Relate(RelateArgs),
    /// Run the acceptance criteria of a manifest.
    Acceptance {
        /// Manifest file; the built-in one by default.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct FamilyArgs {
    /// Family name, optionally with parameters (`disk:mu=1.5`).
    name: String,
    /// Top degree.
    #[arg(short = 'N', long = "N", default_value_t = 5)]
    n: usize,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Chebyshev kind, 1 to 4.
    #[arg(long)]
    kind: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a1: Option<f64>,
    /// Simplex or Laguerre parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    k: Vec<f64>,
    /// Cube parameters a, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    a: Vec<f64>,
    /// Cube parameters b, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    b: Vec<f64>,
    /// Shifted direction, one-based.
    #[arg(long)]
    j: Option<usize>,
    /// Cube shift: 0 for a + e_j, 1 for b + e_j.
    #[arg(long)]
    shift: Option<u32>,
    /// Write monic P, Q, their three-term data and the relation here.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long, value_parser = ["3", "4"])]
    theorem: String,
    /// Three-term data (JSON envelope): of Q for theorem 3, of P for theorem 4.
    #[arg(long)]
    ttr: PathBuf,
    /// Relation as a JSON envelope.
    #[arg(long, conflicts_with = "m", required_unless_present = "m")]
    relation: Option<PathBuf>,
    /// M_1, M_2, … as plain-text matrix files.
    #[arg(long, num_args = 1..)]
    m: Vec<PathBuf>,
    /// Add uniform noise of this size to every B and C block.
    #[arg(long)]
    perturb: Option<f64>,
    /// Write the partner's three-term data here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Three-term data (JSON envelope).
    #[arg(long)]
    ttr: PathBuf,
    /// Top degree; all the data supports by default.
    #[arg(short = 'N', long = "N")]
    n: Option<usize>,
    #[arg(long)]
    perturb: Option<f64>,
    /// Write the system (JSON envelope) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RelateArgs {
    /// System P (JSON envelope).
    #[arg(long)]
    p: PathBuf,
    /// System Q (JSON envelope).
    #[arg(long)]
    q: PathBuf,
    /// Functional of P; without it the relation is read off the coefficients.
    #[arg(long)]
    functional: Option<String>,
    /// Write the relation (JSON envelope) here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors in the input rather than in the mathematics.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_)
            | Error::UnknownFamily(_)
            | Error::InvalidParameter(_)
            | Error::InadmissibleRho(_)
            | Error::Json(_)
            | Error::ShapeMismatch(_)
    )
}

/// Usage errors propagate; mathematical ones become a failing record.
fn attempt<T>(records: &mut Vec<CheckRecord>, name: &str, r: mvops::error::Result<T>) -> anyhow::Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if is_usage(&e) => Err(Usage(e.into()).into()),
        Err(e) => {
            records.push(CheckRecord::flag(name, false, e.to_string()));
            Ok(None)
        }
    }
}

fn usage<T>(r: mvops::error::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| Usage(e.into()).into())
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(|e| Usage(e).into())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    serde_json::from_str(&read(path)?)
        .with_context(|| format!("{} is not a valid envelope", path.display()))
        .map_err(|e| Usage(e).into())
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn perturb(t: &mut ThreeTermData, eps: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for blocks in t.b.iter_mut().chain(t.c.iter_mut()) {
        for m in blocks.iter_mut() {
            m.iter_mut().for_each(|x| *x += eps * rng.random_range(-1.0..1.0));
        }
    }
}

fn family_spec(args: &FamilyArgs) -> anyhow::Result<FamilySpec> {
    let mut spec: FamilySpec = usage(args.name.parse())?;
    if !FAMILIES.contains(&spec.name.as_str()) {
        return Err(Usage(anyhow!(
            "unknown family `{}`; known: {}",
            spec.name,
            FAMILIES.join(", ")
        ))
        .into());
    }
    let scalars = [
        ("mu", args.mu),
        ("kind", args.kind.map(f64::from)),
        ("rho", args.rho),
        ("alpha", args.alpha),
        ("beta", args.beta),
        ("a1", args.a1),
        ("j", args.j.map(|j| j as f64)),
        ("shift", args.shift.map(f64::from)),
    ];
    for (key, v) in scalars {
        if let Some(v) = v {
            spec = spec.with(key, &[v]);
        }
    }
    for (key, v) in [("k", &args.k), ("a", &args.a), ("b", &args.b)] {
        if !v.is_empty() {
            spec = spec.with(key, v);
        }
    }
    Ok(spec)
}

fn cmd_family(args: &FamilyArgs, tol: Tolerances) -> anyhow::Result<VerdictReport> {
    let spec = family_spec(args)?;
    let mut records = Vec::new();
    let mut notes = Vec::new();
    let Some(run) = attempt(&mut records, "construction", families::run(&spec, args.n, tol))? else {
        return Ok(VerdictReport::new(vec![], tol, records));
    };
    records.extend(run.records.iter().cloned());
    let b = &run.bundle;
    notes.push(format!("u = {}, ⟨u, 1⟩ = {}", b.u.label(), b.u.mass()));
    if let Some(v) = &b.v {
        notes.push(format!("v = {}, ⟨v, 1⟩ = {}", v.label(), v.mass()));
    }
    notes.extend(b.notes.iter().cloned());
    for (n, a) in &b.alignments {
        notes.push(format!("printed C̃ at n={n}: {a:?}"));
    }
    let word = |o: bool| if o { "orthogonal" } else { "not orthogonal" };
    let observed = b.verdict.unwrap_or(run.pass);
    notes.push(if run.matches_paper {
        format!("matches paper: {}", word(b.paper_orthogonal))
    } else {
        format!(
            "disagrees with paper: observed {}, paper {}",
            word(observed),
            word(b.paper_orthogonal)
        )
    });
    if let Some(e) = Manifest::builtin().expected_failure(&spec.to_string(), None, None) {
        notes.push(format!("expected failure: {}", e.reason));
    }
    if let Some(dir) = &args.export {
        export(dir, b)?;
        notes.push(format!("exported to {}", dir.display()));
    }
    let mut report = VerdictReport::new(vec![], tol, records);
    report.notes = notes;
    Ok(report)
}

/// Monic `P`, `Q`, their three-term data and the monic relation.
fn export(dir: &Path, b: &families::FamilyBundle) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let (pm, _) = b.p.monic_form()?;
    let (qm, _) = b.q.monic_form()?;
    let top = pm.max_degree().min(qm.max_degree());
    let (pm, qm) = (pm.truncated(top), qm.truncated(top));
    let rel = relation_from_coefficients(&qm, &pm)?;
    let (tp, _) = fit_ttr(&pm, top)?;
    let (tq, _) = fit_ttr(&qm, top)?;
    write_json(&dir.join("p.json"), &pm.to_envelope())?;
    write_json(&dir.join("q.json"), &qm.to_envelope())?;
    write_json(&dir.join("ttr_p.json"), &tp.to_envelope())?;
    write_json(&dir.join("ttr_q.json"), &tq.to_envelope())?;
    write_json(&dir.join("relation.json"), &rel.to_envelope())?;
    for n in 1..=rel.max_degree() {
        write(&dir.join(format!("m_{n}.txt")), &matrixkit::to_text(&rel.m[n]))?;
    }
    Ok(())
}

fn cmd_counterexample(n: usize, tol: Tolerances) -> anyhow::Result<VerdictReport> {
    let manifest = Manifest::builtin();
    let mut records = Vec::new();
    if n < 2 {
        return Err(Usage(anyhow!("--n must be at least 2")).into());
    }
    if let Some(r) = attempt(&mut records, "counterexample", counterexample_records(&manifest, 2, n))? {
        records = r;
    }
    let mut report = VerdictReport::new(vec![], tol, records);
    report.notes.push(format!(
        "tolerance of the exact construction: {:.0e}",
        manifest.tolerances.tight
    ));
    Ok(report)
}

fn load_relation(args: &CheckArgs, d: usize) -> anyhow::Result<LinearRelation> {
    if let Some(path) = &args.relation {
        return usage(LinearRelation::from_envelope(&read_json::<RelationEnvelope>(path)?));
    }
    let m = args
        .m
        .iter()
        .map(|p| usage(matrixkit::from_text(&read(p)?)).with_context(|| p.display().to_string()))
        .collect::<anyhow::Result<Vec<Matrix>>>()
        .map_err(Usage)?;
    usage(LinearRelation::from_matrices(d, m))
}

fn cmd_check(args: &CheckArgs, tol: Tolerances, seed: u64) -> anyhow::Result<VerdictReport> {
    let mut t = usage(ThreeTermData::from_envelope(&read_json::<TtrEnvelope>(&args.ttr)?))?;
    let rel = load_relation(args, t.dim)?;
    let mut notes = Vec::new();
    if let Some(eps) = args.perturb {
        perturb(&mut t, eps, seed);
        notes.push(format!("B and C perturbed by up to {eps:e} (seed {seed})"));
    }
    if !t.is_monic() && args.theorem == "3" {
        bail!(Usage(anyhow!("theorem 3 takes the monic three-term data of Q")));
    }
    let len = t.len().min(rel.max_degree());
    if len < t.len() {
        notes.push(format!("three-term data truncated to the {len} degrees the relation covers"));
    }
    let t = truncate(&t, len)?;
    let mut records = Vec::new();
    let run = if args.theorem == "3" {
        theorem3_check(&t, &rel, tol.res, tol.rank)
    } else {
        theorem4_construct(&t, &rel, tol.res, tol.rank)
    };
    if let Some((partner, report)) = attempt(&mut records, "theorem", run)? {
        records.extend(theorem_records(&report, true));
        if let Some(out) = &args.out {
            write_json(out, &partner.to_envelope())?;
        }
    }
    let mut report = VerdictReport::new(vec![], tol, records);
    report.notes = notes;
    Ok(report)
}

fn truncate(t: &ThreeTermData, len: usize) -> anyhow::Result<ThreeTermData> {
    usage(ThreeTermData::new(
        t.dim,
        t.a[..len].to_vec(),
        t.b[..len].to_vec(),
        t.c[..len].to_vec(),
    ))
}

fn cmd_generate(args: &GenerateArgs, tol: Tolerances, seed: u64) -> anyhow::Result<VerdictReport> {
    let mut t = usage(ThreeTermData::from_envelope(&read_json::<TtrEnvelope>(&args.ttr)?))?;
    let mut notes = Vec::new();
    if let Some(eps) = args.perturb {
        perturb(&mut t, eps, seed);
        notes.push(format!("B and C perturbed by up to {eps:e} (seed {seed})"));
    }
    let n = args.n.unwrap_or(t.len());
    if n > t.len() {
        bail!(Usage(anyhow!("data covers degrees below {}, asked for N = {n}", t.len())));
    }
    let mut records = Vec::new();
    for r in validate_rank_conditions(&t, tol.rank).records {
        records.push(CheckRecord::from_rank("", &r));
    }
    if let Some(g) = attempt(&mut records, "generation", generate_from_ttr(&t, n))? {
        for (k, r) in g.residuals.iter().enumerate() {
            records.push(CheckRecord::residual("consistency", *r, tol.res).at(k));
        }
        if let Some(out) = &args.out {
            write_json(out, &g.system.to_envelope())?;
        }
    }
    let mut report = VerdictReport::new(vec![], tol, records);
    report.notes = notes;
    Ok(report)
}

fn cmd_relate(args: &RelateArgs, tol: Tolerances) -> anyhow::Result<VerdictReport> {
    let p = usage(PolySystem::from_envelope(&read_json::<SystemEnvelope>(&args.p)?))?;
    let q = usage(PolySystem::from_envelope(&read_json::<SystemEnvelope>(&args.q)?))?;
    let mut records = Vec::new();
    let rel = match &args.functional {
        Some(f) => {
            let u = usage(usage(f.parse::<FamilySpec>())?.functional())?;
            let h = GramBlocks::of(&u, &p);
            attempt(&mut records, "relation", compute_relation(&q, &p, &u, &h))?
        }
        None => attempt(&mut records, "relation", relation_from_coefficients(&q, &p))?,
    };
    let mut notes = Vec::new();
    if let Some(rel) = rel {
        for n in 1..=rel.max_degree() {
            records.push(CheckRecord::residual("fourier tail", rel.tails[n], tol.res).at(n));
        }
        let cls = classify_ranks(&rel, tol.rank);
        notes.push(format!("rank pattern of M_n: {} (ranks {:?}, full {:?})", cls.class, cls.ranks, cls.full));
        if let Some(out) = &args.out {
            write_json(out, &rel.to_envelope())?;
        }
    }
    let mut report = VerdictReport::new(vec![], tol, records);
    report.notes = notes;
    Ok(report)
}

fn cmd_acceptance(manifest: Option<&Path>, json: bool) -> anyhow::Result<bool> {
    let m = match manifest {
        Some(p) => usage(Manifest::load(p))?,
        None => Manifest::builtin(),
    };
    let outcomes = run_all(&m);
    if json {
        println!("{}", serde_json::to_string_pretty(&outcomes)?);
    } else {
        for o in &outcomes {
            println!("{}", o.line());
        }
    }
    Ok(outcomes.iter().all(|o| o.pass()))
}

fn run(cli: &Cli, argv: Vec<String>) -> anyhow::Result<bool> {
    let g = &cli.global;
    let tol = Tolerances {
        rank: g.tol_rank,
        res: g.tol_res,
    };
    if !(tol.rank > 0.0 && tol.res > 0.0) {
        bail!(Usage(anyhow!("tolerances must be positive")));
    }
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Family(a) => cmd_family(a, tol)?,
        Command::Counterexample { n } => cmd_counterexample(*n, tol)?,
        Command::Check(a) => cmd_check(a, tol, g.seed)?,
        Command::Generate(a) => cmd_generate(a, tol, g.seed)?,
        Command::Relate(a) => cmd_relate(a, tol)?,
        Command::Acceptance { manifest } => return cmd_acceptance(manifest.as_deref(), g.json),
    };
    report.command = argv;
    if g.timing {
        report.elapsed_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    if g.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_text());
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut echo = vec!["mvops".to_string()];
    echo.extend(argv.into_iter().skip(1));
    match run(&cli, echo) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<Usage>().is_some() || e.downcast_ref::<Error>().is_some_and(is_usage);
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
