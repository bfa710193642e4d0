//! `reinforce`: sampling, simulation, density evaluation and verification.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 on bad
//! usage or input.

mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use reinforce_core::beta_family::log_density_nu_at;
use reinforce_core::bridge::{couple_u_fields_with, log_density_q, USampler};
use reinforce_core::graph::GraphSpec;
use reinforce_core::magic::{log_density_magic_at, path_probability_closed, sample_magic_point};
use reinforce_core::process::{simulate_errw, simulate_vrjp_with, VrjpRun};
use reinforce_core::rng::par_draws;
use reinforce_core::verify::suites::{run_all, run_suite, Effort};
use reinforce_core::verify::SuiteReport;
use reinforce_core::{
    BetaSampler, EdgeInitialWeights, FamilyParams, Network, UField, VertexOrdering,
};

use input::{parse_indices, parse_reals, GraphArg, VectorSource};
use output::{indexed, real, CsvOut, Target};

#[derive(Debug, Parser)]
#[command(name = "reinforce", version, about, propagate_version = true)]
struct Cli {
    /// Worker threads for independent draws (output order never depends on it).
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact draws of the random potential β.
    SampleBeta(SampleBeta),
    /// Draws of the VRJP mixing field u rooted at a base vertex, with γ.
    SampleU(SampleU),
    /// The fields u rooted at every vertex, all computed from one potential.
    CoupleU(CoupleU),
    /// VRJP trajectories as a jump log.
    SimulateVrjp(SimulateVrjp),
    /// Edge reinforced random walk paths.
    SimulateErrw(SimulateErrw),
    /// Draws from the ERRW mixing measure on the slice y[e0] = 1.
    MagicSample(MagicSample),
    /// Density of the ERRW mixing measure at a point y.
    MagicDensity(MagicDensity),
    /// Probability that the ERRW follows a path.
    PathProb(PathProb),
    /// Density of the potential law at β.
    DensityNu(DensityNu),
    /// Density of the VRJP mixing field at u.
    DensityQ(DensityQ),
    /// Run a verification suite, or `all`.
    Verify(Verify),
}

#[derive(Debug, Clone, Args)]
struct Draws {
    /// Number of draws.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV; `-` for stdout. Defaults to `$REINFORCE_OUTPUT_DIR/<command>.csv`.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ThetaArg {
    /// Inline vector, e.g. `1,1,1`.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, value_name = "FILE")]
    theta_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PhiArg {
    /// Initial local times, inline.
    #[arg(long)]
    phi: Option<String>,
    #[arg(long, value_name = "FILE")]
    phi_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AArg {
    /// Initial edge weights, inline, in graph edge order.
    #[arg(long)]
    a: Option<String>,
    #[arg(long, value_name = "FILE")]
    a_file: Option<PathBuf>,
}

impl ThetaArg {
    fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        VectorSource::new(self.theta.clone(), self.theta_file.clone()).resolve("theta", n)
    }
}

impl PhiArg {
    fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        VectorSource::new(self.phi.clone(), self.phi_file.clone()).resolve("phi", n)
    }
}

impl AArg {
    fn resolve(&self, net: Network) -> Result<EdgeInitialWeights> {
        let a = VectorSource::new(self.a.clone(), self.a_file.clone()).resolve("a", net.edge_count())?;
        Ok(EdgeInitialWeights::new(net, a)?)
    }
}

#[derive(Debug, Args)]
struct SampleBeta {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    theta: ThetaArg,
    /// Elimination order, e.g. `2,0,1`; the law does not depend on it.
    #[arg(long)]
    ordering: Option<String>,
    #[command(flatten)]
    draws: Draws,
}

#[derive(Debug, Args)]
struct SampleU {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    phi: PhiArg,
    /// Base vertex.
    #[arg(long, default_value_t = 0)]
    i0: usize,
    #[command(flatten)]
    draws: Draws,
}

#[derive(Debug, Args)]
struct CoupleU {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    phi: PhiArg,
    #[command(flatten)]
    draws: Draws,
}

#[derive(Debug, Args)]
struct SimulateVrjp {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    phi: PhiArg,
    /// Starting vertex.
    #[arg(long, default_value_t = 0)]
    i0: usize,
    /// Simulated time horizon.
    #[arg(long, default_value_t = 100.0)]
    t_end: f64,
    /// Stop a trajectory after this many jumps.
    #[arg(long)]
    max_jumps: Option<usize>,
    /// Record local times every K jumps (0 disables).
    #[arg(long, value_name = "K", default_value_t = 0)]
    snapshot_every: usize,
    /// Number of trajectories.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateErrw {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    a: AArg,
    #[arg(long, default_value_t = 0)]
    i0: usize,
    /// Steps per walk.
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Number of walks.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MagicSample {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    a: AArg,
    /// Base vertex of the walk.
    #[arg(long, default_value_t = 0)]
    i0: usize,
    /// Reference edge normalised to 1.
    #[arg(long, default_value_t = 0)]
    e0: usize,
    #[command(flatten)]
    draws: Draws,
}

#[derive(Debug, Args)]
struct MagicDensity {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    a: AArg,
    #[arg(long, default_value_t = 0)]
    i0: usize,
    /// Edge conductances, inline, in graph edge order.
    #[arg(long)]
    y: String,
    /// Print the natural log of the density.
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Args)]
struct PathProb {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    a: AArg,
    /// Vertex sequence, e.g. `0,1,0`.
    #[arg(long)]
    path: String,
}

#[derive(Debug, Args)]
struct DensityNu {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    theta: ThetaArg,
    #[arg(long)]
    beta: String,
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Args)]
struct DensityQ {
    #[command(flatten)]
    graph: GraphArg,
    #[command(flatten)]
    phi: PhiArg,
    #[arg(long, default_value_t = 0)]
    i0: usize,
    /// Field values; the entry at `i0` must be 0.
    #[arg(long, allow_hyphen_values = true)]
    u: String,
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Args)]
struct Verify {
    /// Suite name, or `all`.
    suite: String,
    #[arg(long)]
    seed: u64,
    /// Reduced sample sizes for a fast smoke run.
    #[arg(long)]
    quick: bool,
    /// Also list passing checks.
    #[arg(long)]
    verbose: bool,
    /// Structured JSON report.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

/// Sidecar written next to every sampled CSV.
#[derive(Serialize)]
struct Meta<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    ordering: Option<Vec<usize>>,
    graph: GraphSpec,
    config: serde_json::Value,
}

impl<'a> Meta<'a> {
    fn new(command: &'a str, seed: u64, net: &Network, config: serde_json::Value) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            ordering: None,
            graph: net.to_spec(),
            config,
        }
    }

    fn with_ordering(mut self, ord: &VertexOrdering) -> Self {
        self.ordering = Some(ord.order().to_vec());
        self
    }
}

enum Outcome {
    Done,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(k) = cli.jobs {
        if k == 0 {
            bail!("--jobs must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("configuring worker pool")?;
    }
    let command = match cli.command {
        Command::Verify(c) => return verify(c),
        other => other,
    };
    match command {
        Command::SampleBeta(c) => sample_beta(c),
        Command::SampleU(c) => sample_u(c),
        Command::CoupleU(c) => couple_u(c),
        Command::SimulateVrjp(c) => simulate_vrjp(c),
        Command::SimulateErrw(c) => simulate_errw_cmd(c),
        Command::MagicSample(c) => magic_sample(c),
        Command::MagicDensity(c) => magic_density(c),
        Command::PathProb(c) => path_prob(c),
        Command::DensityNu(c) => density_nu(c),
        Command::DensityQ(c) => density_q(c),
        Command::Verify(_) => unreachable!("handled above"),
    }?;
    Ok(Outcome::Done)
}

fn print_density(log_density: f64, log: bool) {
    if log {
        println!("{log_density}");
    } else {
        println!("{}", log_density.exp());
    }
}

fn check_vertex(net: &Network, v: usize, flag: &str) -> Result<()> {
    if v >= net.n() {
        bail!("--{flag} {v} is not a vertex (graph has {})", net.n());
    }
    Ok(())
}

fn sample_beta(c: SampleBeta) -> Result<()> {
    let net = c.graph.load()?;
    let n = net.n();
    let theta = c.theta.resolve(n)?;
    let ordering = match &c.ordering {
        Some(s) => VertexOrdering::new(parse_indices(s)?)?,
        None => VertexOrdering::identity(n),
    };
    if ordering.len() != n {
        bail!("--ordering has {} entries, expected {n}", ordering.len());
    }
    let params = FamilyParams::new(net.clone(), theta.clone())?;
    let sampler = BetaSampler::new(&params, &ordering)?;
    let rows = par_draws(
        c.draws.n,
        c.draws.seed,
        || (sampler.clone(), vec![0.0; n]),
        |(s, buf), rng| s.sample_into(rng, buf).to_vec(),
    );
    let mut out = CsvOut::create(Target::resolve(c.draws.out.as_deref(), "sample-beta"), &indexed("beta", n))?;
    for r in &rows {
        out.row(r.iter().map(|&x| real(x)))?;
    }
    let meta = Meta::new("sample-beta", c.draws.seed, &net, json!({ "theta": theta, "draws": c.draws.n }))
        .with_ordering(&ordering);
    out.finish(&meta)
}

fn sample_u(c: SampleU) -> Result<()> {
    let net = c.graph.load()?;
    let n = net.n();
    let phi = c.phi.resolve(n)?;
    check_vertex(&net, c.i0, "i0")?;
    let sampler = USampler::new(net.clone(), &phi, c.i0)?;
    let rows = par_draws(c.draws.n, c.draws.seed, || sampler.clone(), |s, rng| {
        let (u, g) = s.sample(rng);
        let mut row = u.u().to_vec();
        row.push(g.value());
        row
    });
    let mut header = indexed("u", n);
    header.push("gamma".into());
    let mut out = CsvOut::create(Target::resolve(c.draws.out.as_deref(), "sample-u"), &header)?;
    for r in &rows {
        out.row(r.iter().map(|&x| real(x)))?;
    }
    let meta = Meta::new(
        "sample-u",
        c.draws.seed,
        &net,
        json!({ "phi": phi, "i0": c.i0, "draws": c.draws.n }),
    )
    .with_ordering(&VertexOrdering::identity(n));
    out.finish(&meta)
}

fn couple_u(c: CoupleU) -> Result<()> {
    let net = c.graph.load()?;
    let n = net.n();
    let phi = c.phi.resolve(n)?;
    let theta: Vec<f64> = phi.iter().map(|p| p * p).collect();
    let ordering = VertexOrdering::identity(n);
    let sampler = BetaSampler::new(&FamilyParams::new(net.clone(), theta)?, &ordering)?;
    let fields = par_draws(c.draws.n, c.draws.seed, || sampler.clone(), |s, rng| {
        s.sample(rng);
        couple_u_fields_with(&s.factors())
    });
    let mut header = vec!["draw".to_string(), "base".to_string()];
    header.extend(indexed("u", n));
    let mut out = CsvOut::create(Target::resolve(c.draws.out.as_deref(), "couple-u"), &header)?;
    for (d, m) in fields.iter().enumerate() {
        for i in 0..n {
            let mut row = vec![d.to_string(), i.to_string()];
            row.extend((0..n).map(|j| real(m[(i, j)])));
            out.row(row)?;
        }
    }
    let meta = Meta::new("couple-u", c.draws.seed, &net, json!({ "phi": phi, "draws": c.draws.n }))
        .with_ordering(&ordering);
    out.finish(&meta)
}

/// One row of a VRJP jump log.
struct LogRow {
    step: usize,
    time: f64,
    vertex: usize,
    local: Option<Vec<f64>>,
}

fn simulate_vrjp(c: SimulateVrjp) -> Result<()> {
    let net = c.graph.load()?;
    let n = net.n();
    let phi = c.phi.resolve(n)?;
    check_vertex(&net, c.i0, "i0")?;
    if !(c.t_end > 0.0 && c.t_end.is_finite()) {
        bail!("--t-end must be positive and finite");
    }
    if !phi.iter().all(|&p| p > 0.0 && p.is_finite()) {
        bail!("--phi entries must be positive");
    }
    let run = VrjpRun { start: c.i0, t_end: c.t_end, max_jumps: c.max_jumps, record: false };
    let k = c.snapshot_every;
    let logs = par_draws(c.n, c.seed, || (), |_, rng| {
        let mut rows = vec![LogRow {
            step: 0,
            time: 0.0,
            vertex: c.i0,
            local: (k > 0).then(|| phi.clone()),
        }];
        let out = simulate_vrjp_with(&net, &phi, run, rng, |s, _| {
            let step = rows.len();
            rows.push(LogRow {
                step,
                time: s.t,
                vertex: s.current,
                local: (k > 0 && step % k == 0).then(|| s.local.clone()),
            });
        });
        (rows, out.state.local)
    });
    let mut header: Vec<String> = ["trajectory", "step", "time", "vertex"].map(String::from).into();
    if k > 0 {
        header.extend(indexed("local", n));
    }
    let mut out = CsvOut::create(Target::resolve(c.out.as_deref(), "simulate-vrjp"), &header)?;
    for (t, (rows, _)) in logs.iter().enumerate() {
        for r in rows {
            let mut fields = vec![t.to_string(), r.step.to_string(), real(r.time), r.vertex.to_string()];
            if k > 0 {
                match &r.local {
                    Some(l) => fields.extend(l.iter().map(|&x| real(x))),
                    None => fields.extend(std::iter::repeat_n(String::new(), n)),
                }
            }
            out.row(fields)?;
        }
    }
    let final_local: Vec<&Vec<f64>> = logs.iter().map(|(_, l)| l).collect();
    let meta = Meta::new(
        "simulate-vrjp",
        c.seed,
        &net,
        json!({
            "phi": phi,
            "i0": c.i0,
            "t_end": c.t_end,
            "max_jumps": c.max_jumps,
            "snapshot_every": k,
            "trajectories": c.n,
            "final_local_times": final_local,
        }),
    );
    out.finish(&meta)
}

fn simulate_errw_cmd(c: SimulateErrw) -> Result<()> {
    let net = c.graph.load()?;
    check_vertex(&net, c.i0, "i0")?;
    let a = c.a.resolve(net.clone())?;
    let paths = par_draws(c.n, c.seed, || (), |_, rng| simulate_errw(&net, a.edge(), c.i0, c.steps, rng));
    let header = ["walk", "step", "vertex"].map(String::from);
    let mut out = CsvOut::create(Target::resolve(c.out.as_deref(), "simulate-errw"), &header)?;
    for (w, p) in paths.iter().enumerate() {
        for (s, v) in p.iter().enumerate() {
            out.row([w.to_string(), s.to_string(), v.to_string()])?;
        }
    }
    let meta = Meta::new(
        "simulate-errw",
        c.seed,
        &net,
        json!({ "a": a.edge(), "i0": c.i0, "steps": c.steps, "walks": c.n }),
    );
    out.finish(&meta)
}

fn magic_sample(c: MagicSample) -> Result<()> {
    let net = c.graph.load()?;
    check_vertex(&net, c.i0, "i0")?;
    if c.e0 >= net.edge_count() {
        bail!("--e0 {} is not an edge (graph has {})", c.e0, net.edge_count());
    }
    let a = c.a.resolve(net.clone())?;
    let points = par_draws(c.draws.n, c.draws.seed, || (), |_, rng| {
        sample_magic_point(&a, c.i0, c.e0, rng).map(|p| p.into_edge())
    });
    let mut out = CsvOut::create(
        Target::resolve(c.draws.out.as_deref(), "magic-sample"),
        &indexed("y", net.edge_count()),
    )?;
    for p in points {
        out.row(p?.iter().map(|&x| real(x)))?;
    }
    let meta = Meta::new(
        "magic-sample",
        c.draws.seed,
        &net,
        json!({ "a": a.edge(), "i0": c.i0, "e0": c.e0, "draws": c.draws.n }),
    );
    out.finish(&meta)
}

fn magic_density(c: MagicDensity) -> Result<()> {
    let net = c.graph.load()?;
    check_vertex(&net, c.i0, "i0")?;
    let y = parse_reals(&c.y).context("parsing --y")?;
    if y.len() != net.edge_count() {
        bail!("--y has {} entries, expected {}", y.len(), net.edge_count());
    }
    if !y.iter().all(|&v| v > 0.0 && v.is_finite()) {
        bail!("--y entries must be positive");
    }
    let a = c.a.resolve(net.clone())?;
    print_density(log_density_magic_at(&net, &y, &a, c.i0), c.log);
    Ok(())
}

fn path_prob(c: PathProb) -> Result<()> {
    let net = c.graph.load()?;
    let path = parse_indices(&c.path).context("parsing --path")?;
    let a = c.a.resolve(net)?;
    println!("{}", path_probability_closed(&a, &path)?);
    Ok(())
}

fn density_nu(c: DensityNu) -> Result<()> {
    let net = c.graph.load()?;
    let theta = c.theta.resolve(net.n())?;
    let beta = parse_reals(&c.beta).context("parsing --beta")?;
    let params = FamilyParams::new(net, theta)?;
    print_density(log_density_nu_at(&params, &beta)?, c.log);
    Ok(())
}

fn density_q(c: DensityQ) -> Result<()> {
    let net = c.graph.load()?;
    let phi = c.phi.resolve(net.n())?;
    let u = parse_reals(&c.u).context("parsing --u")?;
    let field = UField::new(net, c.i0, u, phi)?;
    print_density(log_density_q(&field), c.log);
    Ok(())
}

/// Report file contents; timings are left out so reruns are byte-identical.
#[derive(Serialize)]
struct VerifyReport<'a> {
    master_seed: u64,
    effort: &'static str,
    pass: bool,
    suites: Vec<SuiteEntry<'a>>,
}

#[derive(Serialize)]
struct SuiteEntry<'a> {
    suite: &'a str,
    seed: u64,
    pass: bool,
    checks: &'a [reinforce_core::verify::TestReport],
}

fn verify(c: Verify) -> Result<Outcome> {
    let effort = if c.quick { Effort::Quick } else { Effort::Full };
    let reports: Vec<SuiteReport> = if c.suite == "all" {
        run_all(c.seed, effort)
    } else {
        vec![run_suite(&c.suite, c.seed, effort)?]
    };
    for r in &reports {
        println!("{}", r.summary_line());
        for check in r.checks.iter().filter(|ch| c.verbose || !ch.pass) {
            println!("    {}", check.line());
        }
    }
    let pass = reports.iter().all(|r| r.pass);
    println!(
        "{}: {} of {} suites passed",
        if pass { "PASS" } else { "FAIL" },
        reports.iter().filter(|r| r.pass).count(),
        reports.len()
    );
    if let Some(path) = &c.report {
        let report = VerifyReport {
            master_seed: c.seed,
            effort: if c.quick { "quick" } else { "full" },
            pass,
            suites: reports
                .iter()
                .map(|r| SuiteEntry { suite: &r.suite, seed: r.seed, pass: r.pass, checks: &r.checks })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, text + "\n").with_context(|| path.display().to_string())?;
    }
    Ok(if pass { Outcome::Done } else { Outcome::ChecksFailed })
}
