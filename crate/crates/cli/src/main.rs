//! `pdgloss`: inconsistency of PDG files, closed-form divergences, loss
//! identities, and factor-graph free energies.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use pdgloss::closed_form::{alpha_to_confidences, pdg_divergence, renyi_divergence};
use pdgloss::commands::{marginals, run_loss, CommandError, LossParams, Report};
use pdgloss::dsl::{self, Document};
use pdgloss::factor_graph::{WeightedFactorGraph, FREE_ENERGY_TOLERANCE, GIBBS_TV_TOLERANCE};
use pdgloss::losses::{Check, SolverSummary, LOSS_TOLERANCE};
use pdgloss::solver::{chernoff_divergence, min_gamma_score};
use pdgloss::{Cpd, Edge, Error, Pdg, Score, SolveOptions, Variable};

#[derive(Parser)]
#[command(name = "pdgloss", version, about = "Inconsistency of probabilistic dependency graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Worker threads for the solver (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Show values in bits only.
    #[arg(long, global = true)]
    bits: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Convergence tolerance on successive objective values.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of solver restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// The γ-inconsistency of the PDG in a file.
    Inconsistency {
        file: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        /// Also print the marginals of the optimal joint distribution.
        #[arg(long)]
        show_argmin: bool,
    },
    /// Divergence between two distributions given as comma-separated lists.
    Divergence {
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        /// Rényi divergence of this order instead.
        #[arg(long, conflicts_with = "chernoff")]
        alpha: Option<f64>,
        /// Chernoff divergence instead.
        #[arg(long)]
        chernoff: bool,
        /// Cross-check the closed form against the solver.
        #[arg(long)]
        verify: bool,
    },
    /// Evaluate a standard loss two ways: directly and as an inconsistency.
    Loss {
        name: String,
        file: PathBuf,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Partition function of a factor graph (`.pdg` or `.json`).
    Fg {
        file: PathBuf,
        /// Compare the free energy with the PDG's inconsistency at γ = 1.
        #[arg(long)]
        check_free_energy: bool,
    },
    /// Run the queries of every `.pdg` and `.json` file in a directory.
    CheckAll {
        #[arg(default_value = "models")]
        dir: PathBuf,
    },
    /// Print a file in canonical form.
    Fmt {
        file: PathBuf,
        /// Exit with status 1 if the file is not already canonical.
        #[arg(long, conflicts_with = "write")]
        check: bool,
        /// Rewrite the file in place.
        #[arg(long)]
        write: bool,
    },
}

enum Failure {
    Command(CommandError),
    Parse(String),
    Io(String),
    Usage(String),
}

impl From<CommandError> for Failure {
    fn from(e: CommandError) -> Self {
        Failure::Command(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Command(e.into())
    }
}

impl From<dsl::DslError> for Failure {
    fn from(e: dsl::DslError) -> Self {
        Failure::Command(e.into())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Command(CommandError::Parse(_)) | Failure::Parse(_) | Failure::Usage(_) => 1,
            Failure::Command(CommandError::Model(Error::UnsupportedHardStructure { .. })) => 3,
            _ => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Command(e) => e.to_string(),
            Failure::Parse(m) | Failure::Io(m) | Failure::Usage(m) => m.clone(),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn read(path: &Path) -> Outcome<Vec<u8>> {
    std::fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn parse_file(path: &Path) -> Outcome<(Vec<u8>, Document)> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Failure::Io(format!("{}: not UTF-8", path.display())))?;
    let doc = dsl::parse(&text).map_err(|e| Failure::Parse(format!("{}:{e}", path.display())))?;
    Ok((bytes, doc))
}

fn options(g: &Global) -> SolveOptions {
    let mut opts = SolveOptions::default().with_seed(g.seed);
    if let Some(t) = g.tol {
        opts.tol = t;
    }
    opts.restarts = g.restarts;
    opts
}

fn inconsistency(path: &Path, gamma: Option<f64>, show_argmin: bool, opts: &SolveOptions) -> Outcome<Report> {
    let (bytes, doc) = parse_file(path)?;
    let gamma = gamma.or_else(|| doc.query_number("inconsistency", "gamma")).unwrap_or(0.0);
    let pdg = doc.to_pdg()?;
    let result = min_gamma_score(&pdg, gamma, opts)?;
    let mut report = Report::new("inconsistency", &bytes);
    report.push(format!("inconsistency (gamma={gamma})"), result.inconsistency);
    report.diagnostics.push(SolverSummary::from(&result));
    if show_argmin {
        report.argmin = Some(marginals(&result.argmin));
    }
    Ok(report)
}

fn distribution(values: &[f64]) -> Outcome<Cpd> {
    Ok(Cpd::unconditional(Variable::indexed("X", values.len()), values.to_vec())
        .map_err(|e| Error::NotASimplex(format!("{values:?}: {e}")))?)
}

#[allow(clippy::too_many_arguments)]
fn divergence(
    p: &[f64],
    q: &[f64],
    r: f64,
    s: f64,
    alpha: Option<f64>,
    chernoff: bool,
    verify: bool,
    opts: &SolveOptions,
) -> Outcome<Report> {
    let input = format!("p={p:?} q={q:?} r={r} s={s} alpha={alpha:?} chernoff={chernoff}");
    let mut report = Report::new("divergence", input.as_bytes());
    let (pc, qc) = (distribution(p)?, distribution(q)?);
    let (value, r, s) = if chernoff {
        let c = chernoff_divergence(&pc, &qc, 1e-12)?;
        report.push("chernoff", c.value);
        report.scalar("beta*", c.beta_star);
        (c.value, c.beta_star, 1.0 - c.beta_star)
    } else if let Some(a) = alpha {
        let v = renyi_divergence(p, q, a)?;
        report.push(format!("renyi (alpha={a})"), v);
        let (r, s) = match alpha_to_confidences(a) {
            Ok(pair) => pair,
            Err(_) if verify => return Err(Failure::Usage(format!("--verify needs an order in (0, 1), got {a}"))),
            Err(_) => (a, 1.0),
        };
        (v, r, s)
    } else {
        let v = pdg_divergence(p, q, r, s)?;
        report.push(format!("pdg divergence (r={r}, s={s})"), v);
        (v, r, s)
    };
    if verify {
        let pdg = Pdg::new(
            pc.targets().to_vec(),
            vec![Edge::new("p", pc.clone()).with_beta(r), Edge::new("q", qc.clone()).with_beta(s)],
        )?;
        let result = min_gamma_score(&pdg, 0.0, opts)?;
        let solved = result.inconsistency;
        report.push("solver", solved);
        report.diagnostics.push(SolverSummary::from(&result));
        report.check(Check::new(
            "closed form = solver",
            value.distance(solved) <= LOSS_TOLERANCE,
            format!("{value} vs {solved}"),
        ));
    }
    Ok(report)
}

fn loss(name: &str, path: &Path, params: &LossParams, opts: &SolveOptions) -> Outcome<Report> {
    let (bytes, doc) = parse_file(path)?;
    let mut report = Report::new(format!("loss {name}"), &bytes);
    for r in run_loss(name, &doc, params, opts)? {
        report.add_loss(&r);
    }
    Ok(report)
}

fn factor_graph(path: &Path) -> Outcome<(Vec<u8>, WeightedFactorGraph)> {
    if path.extension().is_some_and(|e| e == "json") {
        let bytes = read(path)?;
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let fg = WeightedFactorGraph::from_json(&text)?;
        Ok((bytes, fg))
    } else {
        let (bytes, doc) = parse_file(path)?;
        Ok((bytes, doc.factor_graph()?))
    }
}

fn fg(path: &Path, check: bool, opts: &SolveOptions) -> Outcome<Report> {
    let (bytes, graph) = factor_graph(path)?;
    let mut report = Report::new("fg", &bytes);
    let pf = graph.partition_function(opts.parallel)?;
    report.scalar("Z", pf.z);
    report.scalar("log Z", pf.log_z);
    if check {
        let r = graph.free_energy_identity(opts)?;
        report.push("free energy (-log Z)", r.free_energy);
        report.push("normalization offset", Score::nats(r.offset));
        report.push("inconsistency (gamma=1)", r.inconsistency);
        report.scalar("residual", r.residual);
        report.scalar("argmin total variation", r.argmin_tv);
        report.check(Check::new(
            "inconsistency = -log Z + offset",
            r.residual <= FREE_ENERGY_TOLERANCE,
            format!("residual {:.3e}, tolerance {FREE_ENERGY_TOLERANCE:e}", r.residual),
        ));
        report.check(Check::new(
            "argmin = Gibbs distribution",
            r.argmin_tv <= GIBBS_TV_TOLERANCE,
            format!("total variation {:.3e}, tolerance {GIBBS_TV_TOLERANCE:e}", r.argmin_tv),
        ));
        report.diagnostics.push(r.solver);
    }
    Ok(report)
}

/// Runs every query in a file; files without queries get the default for their kind.
fn run_file(path: &Path, opts: &SolveOptions) -> Outcome<Report> {
    if path.extension().is_some_and(|e| e == "json") {
        return fg(path, true, opts);
    }
    let (bytes, doc) = parse_file(path)?;
    let mut report = Report::new(format!("check {}", path.display()), &bytes);
    let mut queries: Vec<(String, Option<String>, Option<f64>)> = doc
        .queries()
        .into_iter()
        .map(|(k, ps)| {
            let name = ps.iter().find_map(|(key, p)| match p {
                dsl::Param::Word(w) if key == "name" => Some(w.clone()),
                _ => None,
            });
            let gamma = ps.iter().find_map(|(key, p)| match p {
                dsl::Param::Number(v) if key == "gamma" => Some(*v),
                _ => None,
            });
            (k.to_string(), name, gamma)
        })
        .collect();
    if queries.is_empty() {
        let kind = if doc.has_factors() { "free-energy" } else { "inconsistency" };
        queries.push((kind.into(), None, None));
    }
    for (kind, name, gamma) in queries {
        let sub = match kind.as_str() {
            "loss" => {
                let name = name.ok_or_else(|| Failure::Usage(format!("{}: loss query without name=", path.display())))?;
                loss(&name, path, &LossParams { beta: None, gamma }, opts)?
            }
            "inconsistency" => inconsistency(path, gamma, false, opts)?,
            "free-energy" => fg(path, true, opts)?,
            other => return Err(Failure::Usage(format!("{}: unknown query `{other}`", path.display()))),
        };
        report.results.extend(sub.results);
        report.scalars.extend(sub.scalars);
        for c in sub.checks {
            report.check(c);
        }
        report.diagnostics.extend(sub.diagnostics);
    }
    Ok(report)
}

fn check_all(dir: &Path, json: bool, opts: &SolveOptions) -> Outcome<(Vec<Report>, bool)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "pdg" || e == "json"))
        .collect();
    files.sort();
    let mut reports = Vec::new();
    let mut all_ok = true;
    for f in files {
        let start = Instant::now();
        let mut report = match run_file(&f, opts) {
            Ok(r) => r,
            Err(e) => {
                let mut r = Report::new(format!("check {}", f.display()), b"");
                r.check(Check::new("runs", false, e.message()));
                r
            }
        };
        report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        let ok = report.ok && !report.any_unconverged();
        all_ok &= ok;
        if !json {
            let status = if ok { "pass" } else { "FAIL" };
            println!("[{status}] {} ({:.0} ms)", f.display(), report.wall_time_ms);
            for c in report.checks.iter().filter(|c| !c.passed) {
                println!("    {}: {}", c.name, c.detail);
            }
        }
        reports.push(report);
    }
    Ok((reports, all_ok))
}

fn fmt(path: &Path, check: bool, write: bool) -> Outcome<bool> {
    let (bytes, doc) = parse_file(path)?;
    let canonical = dsl::serialize(&doc);
    if check {
        let same = canonical.as_bytes() == bytes.as_slice();
        if !same {
            eprintln!("{}: not in canonical form", path.display());
        }
        return Ok(same);
    }
    if write {
        if canonical.as_bytes() != bytes.as_slice() {
            std::fs::write(path, canonical).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        }
    } else {
        print!("{canonical}");
    }
    Ok(true)
}

fn print_text(report: &Report, bits: bool) {
    println!("{}", report.command);
    let names = report.results.iter().map(|q| q.name.len()).chain(report.scalars.iter().map(|v| v.name.len()));
    let width = names.max().unwrap_or(0);
    for q in &report.results {
        if bits {
            println!("  {:width$}  {:>18} bits", q.name, display(q.nats.bits()));
        } else {
            println!("  {:width$}  {:>18} nats  {:>18} bits", q.name, display(q.nats.value()), display(q.nats.bits()));
        }
    }
    for v in &report.scalars {
        println!("  {:width$}  {:>18}", v.name, display(v.value));
    }
    if let Some(argmin) = &report.argmin {
        println!("argmin marginals:");
        for m in argmin {
            let cells: Vec<String> = m.values.iter().map(|(v, p)| format!("{v}={p:.6}")).collect();
            println!("  {}: {}", m.variable, cells.join(" "));
        }
    }
    for c in &report.checks {
        println!("  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    for d in &report.diagnostics {
        println!(
            "  solver: {:?} family, {} iterations, {} restarts, {}",
            d.family,
            d.iterations,
            d.restarts_used,
            if d.converged { "converged" } else { "NOT converged" }
        );
    }
}

fn display(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else if x.abs() < 5e-11 {
        format!("{:.10}", 0.0)
    } else {
        format!("{x:.10}")
    }
}

fn run(cli: Cli) -> Outcome<ExitCode> {
    let g = &cli.global;
    let mut opts = options(g);
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        opts.parallel = n > 1;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Inconsistency { file, gamma, show_argmin } => inconsistency(file, *gamma, *show_argmin, &opts)?,
        Command::Divergence { p, q, r, s, alpha, chernoff, verify } => {
            divergence(p, q, *r, *s, *alpha, *chernoff, *verify, &opts)?
        }
        Command::Loss { name, file, beta, gamma } => loss(name, file, &LossParams { beta: *beta, gamma: *gamma }, &opts)?,
        Command::Fg { file, check_free_energy } => fg(file, *check_free_energy, &opts)?,
        Command::CheckAll { dir } => {
            let (reports, ok) = check_all(dir, g.json, &opts)?;
            if g.json {
                println!("{}", serde_json_array(&reports));
            }
            return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(5) });
        }
        Command::Fmt { file, check, write } => {
            return Ok(if fmt(file, *check, *write)? { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
    };
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    if g.json {
        println!("{}", report.to_json());
    } else {
        print_text(&report, g.bits);
    }
    Ok(if report.any_unconverged() {
        ExitCode::from(2)
    } else if !report.ok {
        ExitCode::from(5)
    } else {
        ExitCode::SUCCESS
    })
}

fn serde_json_array(reports: &[Report]) -> String {
    let items: Vec<String> = reports.iter().map(Report::to_json).collect();
    format!("[\n{}\n]", items.join(",\n"))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
