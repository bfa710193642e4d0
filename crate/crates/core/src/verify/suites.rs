//! Cross-module verification suites.
//!
//! Every suite derives its randomness from `derive_seed(master, name)`, so a
//! report is reproducible from the master seed alone. p-value checks inside
//! a suite share a Bonferroni-corrected level; moment checks use 4-SE windows.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Exp, Gamma as GammaDist};

use super::ks::{ks_one_sample, ks_two_sample};
use super::quadrature::{integrate_nested, quadrature_mass, Estimate, Range, Tolerance};
use super::stats::{correlation, independence_scan, mc_mean};
use super::{bonferroni, SuiteReport, TestReport};
use crate::beta_family::{
    laplace_transform, log_density_nu_at, marginal_ig_params, BetaSampler, FamilyParams,
};
use crate::bridge::{
    beta_from_u_gamma, certify_inverse, determinant_identity_check, jacobian_check,
    log_density_q, phi_map, UField, USampler,
};
use crate::error::QuadratureError;
use crate::graph::{enumerate_spanning_trees, graph_distance, spanning_tree_polynomial, Network};
use crate::linalg::{eliminate, ordered_weights};
use crate::magic::{
    log_density_magic_at, path_probability_closed, sample_mixed_conductances,
    EdgeInitialWeights,
};
use crate::process::{
    choose_t_end, errw_path_probability_direct, estimate_u_trajectory, phi_weighted_network,
    simulate_errw, simulate_vrjp, time_rescale_phi, ConvergencePolicy, VrjpRun,
};
use crate::rng::{derive_seed, par_draws, stream_rng, StreamRng};
use crate::VertexOrdering;

/// Family-wise level for p-value checks.
pub const ALPHA: f64 = 0.01;
/// Width of moment windows, in standard errors.
pub const SE_WINDOW: f64 = 4.0;

/// Names accepted by [`run_suite`], in execution order.
pub const SUITES: [&str; 15] = [
    "nu-mass",
    "laplace",
    "marginals",
    "independence",
    "round-trip",
    "determinant",
    "jacobian",
    "q-mass",
    "vrjp-u",
    "gamma",
    "path-prob",
    "magic-mass",
    "bridge",
    "time-rescale",
    "matrix-tree",
];

/// Sample sizes: `Full` runs the acceptance sizes, `Quick` a smoke-test fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Effort {
    #[default]
    Full,
    Quick,
}

impl Effort {
    fn size(self, full: usize, quick: usize) -> usize {
        match self {
            Effort::Full => full,
            Effort::Quick => quick,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSuite(pub String);

impl std::fmt::Display for UnknownSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "unknown suite '{}'; expected one of: {}, all", self.0, SUITES.join(", "))
    }
}

impl std::error::Error for UnknownSuite {}

/// Run one named suite.
pub fn run_suite(name: &str, master_seed: u64, effort: Effort) -> Result<SuiteReport, UnknownSuite> {
    let seed = derive_seed(master_seed, name);
    let start = Instant::now();
    let checks = match name {
        "nu-mass" => nu_mass(seed, effort),
        "laplace" => laplace(seed, effort),
        "marginals" => marginals(seed, effort),
        "independence" => independence(seed, effort),
        "round-trip" => round_trip(seed, effort),
        "determinant" => determinant(seed, effort),
        "jacobian" => jacobian(seed, effort),
        "q-mass" => q_mass(seed, effort),
        "vrjp-u" => vrjp_u(seed, effort),
        "gamma" => gamma(seed, effort),
        "path-prob" => path_prob(seed, effort),
        "magic-mass" => magic_mass(seed, effort),
        "bridge" => bridge(seed, effort),
        "time-rescale" => time_rescale(seed, effort),
        "matrix-tree" => matrix_tree(seed, effort),
        other => return Err(UnknownSuite(other.to_string())),
    };
    let checks = checks.into_iter().map(|c| c.with_seed(seed)).collect();
    Ok(SuiteReport::new(name, seed, checks, start.elapsed().as_secs_f64()))
}

/// Run every suite in [`SUITES`] order.
pub fn run_all(master_seed: u64, effort: Effort) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .map(|s| run_suite(s, master_seed, effort).expect("listed suite"))
        .collect()
}

/// Connected graph on `n` vertices: a random recursive tree plus each other
/// pair with probability `extra`, weights uniform on `[0.5, 2]`.
pub fn random_network<R: Rng + ?Sized>(n: usize, extra: f64, rng: &mut R) -> Network {
    let mut edges = Vec::new();
    let mut present = vec![vec![false; n]; n];
    for k in 1..n {
        let parent = rng.random_range(0..k);
        present[parent][k] = true;
    }
    for i in 0..n {
        for j in i + 1..n {
            if present[i][j] || rng.random::<f64>() < extra {
                edges.push((i, j, rng.random_range(0.5..2.0)));
            }
        }
    }
    Network::new(n, &edges).expect("tree edges keep the graph connected")
}

fn uniform_vec<R: Rng + ?Sized>(n: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs: 1e-10,
        rel: 1e-6,
        max_intervals: 200,
    }
}

fn mass_report(name: String, est: Result<Estimate, QuadratureError>, tol: f64) -> TestReport {
    match est {
        Ok(e) => TestReport::residual(name, e.value, (e.value - 1.0).abs(), tol),
        Err(QuadratureError::NotConverged { value, .. }) => {
            TestReport::residual(name + " (not converged)", value, f64::INFINITY, tol)
        }
        Err(_) => TestReport::residual(name, f64::NAN, f64::INFINITY, tol),
    }
}

// ---------------------------------------------------------------------------
// Potentials

/// Mass of `ν^{W,θ}` in pivot coordinates: `x_k = t_k²`, `β_k = (x_k + schur_k)/2`
/// maps `(0,∞)^n` onto the support with `dβ = Π t_k dt_k`.
pub fn nu_mass_quadrature(p: &FamilyParams, tol: Tolerance) -> Result<Estimate, QuadratureError> {
    let n = p.n();
    let w = ordered_weights(p.net(), &VertexOrdering::identity(n));
    let density = |t: &[f64]| -> f64 {
        let mut x = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        let mut beta = vec![0.0; n];
        let r: Result<(), std::convert::Infallible> = eliminate(n, &w, &mut x, &mut h, |k, schur, _| {
            let xk = t[k] * t[k];
            beta[k] = 0.5 * (xk + schur);
            Ok(xk)
        });
        let Ok(()) = r;
        match log_density_nu_at(p, &beta) {
            Ok(l) => (l + t.iter().map(|v| v.ln()).sum::<f64>()).exp(),
            // A pivot lost to rounding at the edge of the support.
            Err(_) => 0.0,
        }
    };
    integrate_nested(n, &|_, _| Range::Above(0.0), &density, tol)
}

fn nu_mass(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let per_size = effort.size(5, 1);
    let mut out = Vec::new();
    for n in [2, 3] {
        for k in 0..per_size {
            let net = random_network(n, 0.5, &mut rng);
            let theta = uniform_vec(n, 0.5, 2.0, &mut rng);
            let p = FamilyParams::new(net, theta).expect("positive θ");
            out.push(mass_report(
                format!("nu-mass n={n} #{k}"),
                nu_mass_quadrature(&p, quad_tol()),
                1e-3,
            ));
        }
    }
    out
}

fn laplace(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let draws = effort.size(1_000_000, 20_000);
    let mut out = Vec::new();
    for (g, n) in [2usize, 3, 4, 3, 4].into_iter().enumerate() {
        let net = random_network(n, 0.5, &mut rng);
        let theta = uniform_vec(n, 0.5, 2.0, &mut rng);
        let p = FamilyParams::new(net, theta).expect("positive θ");
        let lambdas: Vec<Vec<f64>> = (0..5).map(|_| uniform_vec(n, 0.0, 2.0, &mut rng)).collect();
        let sampler = BetaSampler::new(&p, &VertexOrdering::identity(n)).expect("valid sizes");
        let values = par_draws(
            draws,
            derive_seed(seed, &format!("graph-{g}")),
            || (sampler.clone(), vec![0.0; n]),
            |(s, beta), rng| {
                s.sample_into(rng, beta);
                let mut v = [0.0; 5];
                for (slot, l) in v.iter_mut().zip(&lambdas) {
                    *slot = (-l.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>()).exp();
                }
                v
            },
        );
        for (li, l) in lambdas.iter().enumerate() {
            let col: Vec<f64> = values.iter().map(|v| v[li]).collect();
            let m = mc_mean(&col);
            let exact = laplace_transform(&p, l).expect("λ ≥ 0");
            out.push(
                TestReport::residual(
                    format!("laplace graph {g} (n={n}) λ#{li}"),
                    m.mean - exact,
                    m.z_score(exact),
                    SE_WINDOW,
                )
                .with_samples(draws),
            );
        }
    }
    out
}

fn beta_draws(p: &FamilyParams, draws: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = p.n();
    let sampler = BetaSampler::new(p, &VertexOrdering::identity(n)).expect("valid sizes");
    par_draws(
        draws,
        seed,
        || sampler.clone(),
        |s, rng| s.sample(rng).into_beta(),
    )
}

fn marginals(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let draws = effort.size(100_000, 2_000);
    let graphs = [
        Network::path(&uniform_vec(4, 0.5, 2.0, &mut rng)).expect("valid path"),
        Network::new(3, &[(0, 1, 1.0), (1, 2, 0.5), (0, 2, 2.0)]).expect("valid triangle"),
        random_network(4, 1.0, &mut rng),
    ];
    let tests: usize = graphs.iter().map(|g| g.n()).sum();
    let level = bonferroni(ALPHA, tests);
    let mut out = Vec::new();
    for (g, net) in graphs.into_iter().enumerate() {
        let n = net.n();
        let theta = uniform_vec(n, 0.5, 2.0, &mut rng);
        let p = FamilyParams::new(net, theta.clone()).expect("positive θ");
        let rows = beta_draws(&p, draws, derive_seed(seed, &format!("graph-{g}")));
        for i in 0..n {
            let ig = marginal_ig_params(&p, i).expect("connected graph");
            let xs: Vec<f64> = rows.iter().map(|b| 1.0 / (2.0 * b[i] * theta[i])).collect();
            let ks = ks_one_sample(&xs, |x| ig.cdf(x));
            out.push(
                TestReport::p_value(format!("marginal graph {g} vertex {i}"), ks.statistic, ks.p_value, level)
                    .with_samples(draws),
            );
        }
    }
    out
}

fn independence(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let draws = effort.size(100_000, 5_000);
    let net = Network::path(&uniform_vec(4, 0.5, 2.0, &mut rng)).expect("valid path");
    let theta = uniform_vec(5, 0.5, 2.0, &mut rng);
    let p = FamilyParams::new(net.clone(), theta).expect("positive θ");
    let rows = beta_draws(&p, draws, derive_seed(seed, "draws"));
    let far: Vec<(usize, usize)> = (0..5)
        .flat_map(|i| (i + 1..5).map(move |j| (i, j)))
        .filter(|&(i, j)| graph_distance(&net, i, j) >= 2)
        .collect();
    let mut out: Vec<TestReport> = independence_scan(&rows, &far)
        .into_iter()
        .map(|c| {
            TestReport::residual(format!("corr(β{}, β{}) ≈ 0", c.i, c.j), c.r, c.z, SE_WINDOW)
                .with_samples(draws)
        })
        .collect();
    let adjacent: Vec<(usize, usize)> = (0..4).map(|i| (i, i + 1)).collect();
    let scan = independence_scan(&rows, &adjacent);
    let strongest = scan
        .iter()
        .max_by(|a, b| a.z.total_cmp(&b.z))
        .expect("four adjacent pairs");
    out.push(
        TestReport::power(
            format!("power: corr(β{}, β{}) ≠ 0", strongest.i, strongest.j),
            strongest.r,
            strongest.z,
            SE_WINDOW,
        )
        .with_samples(draws),
    );
    out
}

// ---------------------------------------------------------------------------
// Change of variables

fn random_u_instance(rng: &mut StreamRng) -> (USampler, usize) {
    let n = rng.random_range(2..=6);
    let net = random_network(n, 0.4, rng);
    let phi = uniform_vec(n, 0.5, 2.0, rng);
    let i0 = rng.random_range(0..n);
    (USampler::new(net, &phi, i0).expect("valid instance"), i0)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / y).abs())
        .fold(0.0, f64::max)
}

fn round_trip(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let instances = effort.size(1_000, 100);
    let (mut worst_beta, mut worst_u, mut worst_gamma) = (0.0f64, 0.0f64, 0.0f64);
    let mut uncertified = 0usize;
    for _ in 0..instances {
        let (mut s, i0) = random_u_instance(&mut rng);
        let (b, u, g) = s.sample_with_beta(&mut rng);
        let back = beta_from_u_gamma(&u, g);
        worst_beta = worst_beta.max(max_rel(back.beta(), b.beta()));
        if !certify_inverse(&u, &back) {
            uncertified += 1;
        }
        match phi_map(&back, i0) {
            Ok((u2, g2)) => {
                let du = u2
                    .u()
                    .iter()
                    .zip(u.u())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                worst_u = worst_u.max(du);
                // Mixed error: γ ∼ Gamma(1/2) gets arbitrarily close to 0, where
                // recovering it from β_{i0} cancels and only absolute accuracy is meaningful.
                let dg = (g2.value() - g.value()).abs() / g.value().max(1.0);
                worst_gamma = worst_gamma.max(dg);
            }
            Err(_) => {
                worst_u = f64::INFINITY;
                worst_gamma = f64::INFINITY;
            }
        }
    }
    vec![
        TestReport::residual("Φ⁻¹∘Φ = id on β (max rel)", worst_beta, worst_beta, 1e-10),
        TestReport::residual("Φ∘Φ⁻¹ = id on u (max abs)", worst_u, worst_u, 1e-10),
        TestReport::residual("Φ∘Φ⁻¹ = id on γ (max |Δγ|/max(γ,1))", worst_gamma, worst_gamma, 1e-10),
        TestReport::residual(
            "positivity certificate failures",
            uncertified as f64,
            uncertified as f64,
            0.5,
        ),
    ]
    .into_iter()
    .map(|r| r.with_samples(instances))
    .collect()
}

fn determinant(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let instances = effort.size(1_000, 100);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let (mut s, i0) = random_u_instance(&mut rng);
        let (b, _, _) = s.sample_with_beta(&mut rng);
        let r = determinant_identity_check(&b, i0).unwrap_or(f64::INFINITY);
        worst = worst.max(r);
    }
    vec![TestReport::residual("determinant identity (max rel)", worst, worst, 1e-9)
        .with_samples(instances)]
}

fn jacobian(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let instances = effort.size(100, 20);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=5);
        let net = random_network(n, 0.4, &mut rng);
        let phi = uniform_vec(n, 0.5, 2.0, &mut rng);
        let i0 = rng.random_range(0..n);
        let (u, g) = USampler::new(net, &phi, i0)
            .expect("valid instance")
            .sample(&mut rng);
        worst = worst.max(jacobian_check(&u, g));
    }
    vec![TestReport::residual("Jacobian closed form vs central differences", worst, worst, 1e-5)
        .with_samples(instances)]
}

/// Mass of `Q^{W,φ}_{i0}` over `u_{j≠i0} ∈ ℝ^{n−1}`, for `n ≤ 4`.
pub fn q_mass_quadrature(
    net: &Arc<Network>,
    phi: &[f64],
    i0: usize,
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    let n = net.n();
    let free: Vec<usize> = (0..n).filter(|&j| j != i0).collect();
    let log_density = |v: &[f64]| {
        let mut u = vec![0.0; n];
        for (k, &j) in free.iter().enumerate() {
            u[j] = v[k];
        }
        match UField::new(net.clone(), i0, u, phi.to_vec()) {
            Ok(f) => log_density_q(&f),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    quadrature_mass(&log_density, &vec![Range::Real; free.len()], tol)
}

fn q_mass(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let per_size = effort.size(3, 1);
    let mut out = Vec::new();
    for (n, tol) in [(2, 1e-4), (3, 1e-3)] {
        for k in 0..per_size {
            let net = Arc::new(random_network(n, 0.5, &mut rng));
            let phi = uniform_vec(n, 0.5, 2.0, &mut rng);
            let i0 = rng.random_range(0..n);
            out.push(mass_report(
                format!("Q mass n={n} #{k}"),
                q_mass_quadrature(&net, &phi, i0, quad_tol()),
                tol,
            ));
        }
    }
    out
}

fn vrjp_u(seed: u64, effort: Effort) -> Vec<TestReport> {
    let trajectories = effort.size(10_000, 300);
    let exact_draws = effort.size(100_000, 3_000);
    let policy = match effort {
        Effort::Full => ConvergencePolicy::default(),
        Effort::Quick => ConvergencePolicy {
            start: 25.0,
            cap: 100.0,
            pilot: 50,
            tolerance: 0.05,
        },
    };
    let cases: [(&str, Network, Vec<f64>, usize); 3] = [
        ("path3 φ≡1", Network::path(&[1.0, 0.7]).expect("valid"), vec![1.0; 3], 0),
        (
            "triangle φ=(0.5,1,2)",
            Network::new(3, &[(0, 1, 1.0), (1, 2, 0.5), (0, 2, 2.0)]).expect("valid"),
            vec![0.5, 1.0, 2.0],
            0,
        ),
        (
            "4-cycle φ=(1,0.7,1.4,1)",
            Network::cycle(&[1.0, 1.5, 0.8, 1.2]).expect("valid"),
            vec![1.0, 0.7, 1.4, 1.0],
            2,
        ),
    ];
    let tests: usize = cases.iter().map(|c| c.1.n() - 1).sum();
    let level = bonferroni(ALPHA, tests);
    let mut out = Vec::new();
    for (name, net, phi, i0) in cases {
        let n = net.n();
        let conv = choose_t_end(&net, &phi, i0, policy, derive_seed(seed, name));
        out.push(TestReport::residual(
            format!("{name}: median |U(t)−U(t/2)| at t_end={}", conv.t_end),
            conv.t_end,
            conv.median_drift,
            policy.tolerance,
        ));
        let est = par_draws(
            trajectories,
            derive_seed(seed, &format!("{name}/vrjp")),
            || (),
            |_, rng| estimate_u_trajectory(&net, &phi, i0, conv.t_end, rng).full,
        );
        let sampler = USampler::new(net.clone(), &phi, i0).expect("valid instance");
        let exact = par_draws(
            exact_draws,
            derive_seed(seed, &format!("{name}/exact")),
            || sampler.clone(),
            |s, rng| s.sample(rng).0.u().to_vec(),
        );
        for j in (0..n).filter(|&j| j != i0) {
            let a: Vec<f64> = est.iter().map(|u| u[j]).collect();
            let b: Vec<f64> = exact.iter().map(|u| u[j]).collect();
            let ks = ks_two_sample(&a, &b);
            out.push(
                TestReport::p_value(format!("{name}: U_{j} VRJP vs exact"), ks.statistic, ks.p_value, level)
                    .with_samples(trajectories),
            );
        }
    }
    out
}

fn gamma(seed: u64, effort: Effort) -> Vec<TestReport> {
    let draws = effort.size(100_000, 5_000);
    let cases = [
        (
            Network::new(3, &[(0, 1, 1.0), (1, 2, 0.5), (0, 2, 2.0)]).expect("valid"),
            vec![0.5, 1.5, 2.0],
            1usize,
        ),
        (
            Network::cycle(&[1.0, 1.5, 0.8, 1.2]).expect("valid"),
            vec![1.0, 0.7, 1.4, 1.0],
            0usize,
        ),
    ];
    let level = bonferroni(ALPHA, cases.len());
    let mut out = Vec::new();
    for (c, (net, phi, i0)) in cases.into_iter().enumerate() {
        let n = net.n();
        let sampler = USampler::new(net, &phi, i0).expect("valid instance");
        let rows = par_draws(
            draws,
            derive_seed(seed, &format!("case-{c}")),
            || sampler.clone(),
            |s, rng| {
                let (u, g) = s.sample(rng);
                let mut row = u.u().to_vec();
                row.push(g.value());
                row
            },
        );
        let gammas: Vec<f64> = rows.iter().map(|r| r[n]).collect();
        let law = GammaDist::new(0.5, phi[i0] * phi[i0]).expect("valid gamma");
        let ks = ks_one_sample(&gammas, |x| law.cdf(x));
        out.push(
            TestReport::p_value(
                format!("case {c}: γ ~ Gamma(1/2, φ_{i0}²)"),
                ks.statistic,
                ks.p_value,
                level,
            )
            .with_samples(draws),
        );
        for j in (0..n).filter(|&j| j != i0) {
            let uj: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let cr = correlation(&gammas, &uj);
            out.push(
                TestReport::residual(
                    format!("case {c}: corr(γ, u_{j}) ≈ 0"),
                    cr.r,
                    cr.r.abs() / cr.se,
                    SE_WINDOW,
                )
                .with_samples(draws),
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Edge reinforcement

/// All walks with at most `max_steps` steps starting at `start`.
pub fn all_paths(net: &Network, start: usize, max_steps: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![start]];
    let mut frontier = vec![vec![start]];
    for _ in 0..max_steps {
        let mut next = Vec::new();
        for p in &frontier {
            for &(j, _, _) in net.neighbors(*p.last().expect("non-empty")) {
                let mut q = p.clone();
                q.push(j);
                next.push(q);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn path_prob(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let walks = effort.size(1_000_000, 20_000);
    let depth = 4;
    let graphs = [
        ("triangle", Network::complete(3, 1.0).expect("valid")),
        ("4-cycle", Network::cycle(&[1.0; 4]).expect("valid")),
    ];
    let mut out = Vec::new();
    for (name, net) in graphs {
        let net = Arc::new(net);
        let a = EdgeInitialWeights::new(net.clone(), uniform_vec(net.edge_count(), 0.3, 3.0, &mut rng))
            .expect("positive a");
        let mut worst = 0.0f64;
        let mut count = 0;
        for start in 0..net.n() {
            for p in all_paths(&net, start, 6) {
                let closed = path_probability_closed(&a, &p).expect("valid path");
                let direct = errw_path_probability_direct(&net, a.edge(), &p).expect("valid path");
                worst = worst.max(((closed - direct) / direct).abs());
                count += 1;
            }
        }
        out.push(
            TestReport::residual(format!("{name}: closed form = direct product"), worst, worst, 1e-12)
                .with_samples(count),
        );

        let sims = par_draws(
            walks,
            derive_seed(seed, name),
            || (),
            |_, rng| simulate_errw(&net, a.edge(), 0, depth, rng),
        );
        let mut freq: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in sims {
            *freq.entry(s).or_default() += 1;
        }
        for p in all_paths(&net, 0, depth).into_iter().filter(|p| p.len() == depth + 1) {
            let exact = path_probability_closed(&a, &p).expect("valid path");
            let f = *freq.get(&p).unwrap_or(&0) as f64 / walks as f64;
            let se = (exact * (1.0 - exact) / walks as f64).sqrt();
            out.push(
                TestReport::residual(
                    format!("{name}: frequency of {p:?}"),
                    f - exact,
                    (f - exact).abs() / se,
                    SE_WINDOW,
                )
                .with_samples(walks),
            );
        }
    }
    out
}

fn triangle_magic(a: &EdgeInitialWeights, f: &dyn Fn(&[f64]) -> f64) -> Result<Estimate, QuadratureError> {
    // Reference edge 0; the other two coordinates in log scale.
    let net = a.net();
    let integrand = |v: &[f64]| {
        let y = [1.0, v[0].exp(), v[1].exp()];
        f(&y) * log_density_magic_at(net, &y, a, 0).exp()
    };
    integrate_nested(2, &|_, _| Range::Real, &integrand, quad_tol())
}

fn triangle_weights(rng: &mut StreamRng) -> [(String, EdgeInitialWeights); 2] {
    let net = Arc::new(Network::complete(3, 1.0).expect("valid"));
    let random = uniform_vec(3, 0.5, 3.0, rng);
    [
        ("a≡1".to_string(), EdgeInitialWeights::uniform(net.clone(), 1.0).expect("positive")),
        (
            format!("a=({:.3},{:.3},{:.3})", random[0], random[1], random[2]),
            EdgeInitialWeights::new(net, random).expect("positive"),
        ),
    ]
}

fn magic_mass(seed: u64, _effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    triangle_weights(&mut rng)
        .into_iter()
        .map(|(name, a)| mass_report(format!("magic mass triangle {name}"), triangle_magic(&a, &|_| 1.0), 1e-3))
        .collect()
}

/// A named statistic of edge conductances.
type EdgeStatistic = (&'static str, fn(&[f64]) -> f64);

/// Bounded 0-homogeneous statistics of triangle conductances.
fn homogeneous_stats() -> [EdgeStatistic; 5] {
    fn s(y: &[f64]) -> f64 {
        y.iter().sum()
    }
    [
        ("y1/Σy", |y| y[1] / s(y)),
        ("y2/Σy", |y| y[2] / s(y)),
        ("y0y1/(y0+y1)²", |y| y[0] * y[1] / (y[0] + y[1]).powi(2)),
        ("y1²/(y1²+y2²)", |y| y[1] * y[1] / (y[1] * y[1] + y[2] * y[2])),
        ("27y0y1y2/(Σy)³", |y| 27.0 * y[0] * y[1] * y[2] / s(y).powi(3)),
    ]
}

fn bridge(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let draws = effort.size(200_000, 5_000);
    let mut out = Vec::new();
    for (name, a) in triangle_weights(&mut rng) {
        let ys = par_draws(
            draws,
            derive_seed(seed, &name),
            || (),
            |_, rng| sample_mixed_conductances(&a, 0, rng).0,
        );
        for (label, f) in homogeneous_stats() {
            let vals: Vec<f64> = ys.iter().map(|y| f(y)).collect();
            let m = mc_mean(&vals);
            match triangle_magic(&a, &f) {
                Ok(q) => out.push(
                    TestReport::residual(
                        format!("{name}: E[{label}] mixed VRJP vs magic density"),
                        m.mean - q.value,
                        m.z_score(q.value),
                        SE_WINDOW,
                    )
                    .with_samples(draws),
                ),
                Err(_) => out.push(TestReport::residual(
                    format!("{name}: E[{label}] (quadrature failed)"),
                    f64::NAN,
                    f64::INFINITY,
                    SE_WINDOW,
                )),
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Time scales and spanning trees

struct JumpSummary {
    vertices: Vec<usize>,
    holds: Vec<f64>,
}

fn first_jumps(net: &Network, phi: &[f64], jumps: usize, rescale: bool, rng: &mut StreamRng) -> JumpSummary {
    let out = simulate_vrjp(
        net,
        phi,
        VrjpRun {
            start: 0,
            t_end: f64::INFINITY,
            max_jumps: Some(jumps),
            record: true,
        },
        rng,
    );
    let mut traj = out.trajectory.expect("recorded");
    if rescale {
        traj = time_rescale_phi(&traj, phi);
    }
    JumpSummary {
        vertices: traj.vertices,
        holds: traj.holds[..jumps].to_vec(),
    }
}

fn time_rescale(seed: u64, effort: Effort) -> Vec<TestReport> {
    let runs = effort.size(100_000, 5_000);
    let jumps = 4;
    let mut out = Vec::new();

    // Two vertices, W = 1, φ = (2, 3): the first rescaled hold is Exp(6).
    let edge = Network::path(&[1.0]).expect("valid");
    let phi2 = [2.0, 3.0];
    let first = par_draws(runs, derive_seed(seed, "edge"), || (), |_, rng| {
        first_jumps(&edge, &phi2, 1, true, rng).holds[0]
    });
    let exp6 = Exp::new(6.0).expect("positive rate");
    let ks = ks_one_sample(&first, |x| exp6.cdf(x));
    let level = bonferroni(ALPHA, 2);
    out.push(
        TestReport::p_value("edge φ=(2,3): first rescaled hold ~ Exp(6)", ks.statistic, ks.p_value, level)
            .with_samples(runs),
    );

    let net = Network::new(3, &[(0, 1, 1.0), (1, 2, 0.5), (0, 2, 2.0)]).expect("valid");
    let phi = [0.6, 1.0, 1.7];
    let target = phi_weighted_network(&net, &phi);
    let general = par_draws(runs, derive_seed(seed, "general"), || (), |_, rng| {
        first_jumps(&net, &phi, jumps, true, rng)
    });
    let unit = par_draws(runs, derive_seed(seed, "unit"), || (), |_, rng| {
        first_jumps(&target, &[1.0; 3], jumps, false, rng)
    });
    let ks = ks_two_sample(
        &general.iter().map(|s| s.holds[0]).collect::<Vec<_>>(),
        &unit.iter().map(|s| s.holds[0]).collect::<Vec<_>>(),
    );
    out.push(
        TestReport::p_value("triangle: first hold, rescaled vs W^φ", ks.statistic, ks.p_value, level)
            .with_samples(runs),
    );

    let tally = |v: &[JumpSummary]| {
        let mut m: HashMap<Vec<usize>, usize> = HashMap::new();
        for s in v {
            *m.entry(s.vertices.clone()).or_default() += 1;
        }
        m
    };
    let (tg, tu) = (tally(&general), tally(&unit));
    let nf = runs as f64;
    for p in all_paths(&net, 0, jumps).into_iter().filter(|p| p.len() == jumps + 1) {
        let a = *tg.get(&p).unwrap_or(&0) as f64 / nf;
        let b = *tu.get(&p).unwrap_or(&0) as f64 / nf;
        let pooled = 0.5 * (a + b);
        let se = (2.0 * pooled * (1.0 - pooled) / nf).sqrt();
        let z = if se > 0.0 { (a - b).abs() / se } else { 0.0 };
        out.push(
            TestReport::residual(format!("triangle: jump chain {p:?}"), a - b, z, SE_WINDOW)
                .with_samples(runs),
        );
    }
    for k in 0..jumps {
        let a = mc_mean(&general.iter().map(|s| s.holds[k]).collect::<Vec<_>>());
        let b = mc_mean(&unit.iter().map(|s| s.holds[k]).collect::<Vec<_>>());
        let d = super::stats::difference(a, b);
        out.push(
            TestReport::residual(format!("triangle: mean hold {k}"), d.mean, d.z_score(0.0), SE_WINDOW)
                .with_samples(runs),
        );
    }
    out
}

fn matrix_tree(seed: u64, effort: Effort) -> Vec<TestReport> {
    let mut rng = stream_rng(seed, 0);
    let instances = effort.size(100, 20);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let n = rng.random_range(2..=7);
        let net = random_network(n, 0.5, &mut rng);
        let u: Vec<f64> = uniform_vec(n, -1.5, 1.5, &mut rng);
        let fast = spanning_tree_polynomial(&net, &u);
        let brute: f64 = enumerate_spanning_trees(&net)
            .expect("n ≤ 7")
            .iter()
            .map(|tree| {
                tree.iter()
                    .map(|&e| {
                        let edge = net.edges()[e];
                        edge.w * (u[edge.i] + u[edge.j]).exp()
                    })
                    .product::<f64>()
            })
            .sum();
        worst = worst.max(((fast - brute) / brute).abs());
    }
    vec![TestReport::residual("matrix-tree vs enumeration (max rel)", worst, worst, 1e-10)
        .with_samples(instances)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", 1, Effort::Quick).is_err());
    }

    #[test]
    fn path_enumeration_counts() {
        let tri = Network::complete(3, 1.0).unwrap();
        // 1 + 2 + 4 + 8 walks of length ≤ 3.
        assert_eq!(all_paths(&tri, 0, 3).len(), 15);
    }

    #[test]
    fn random_networks_are_connected() {
        let mut rng = stream_rng(5, 0);
        for n in 1..8 {
            let g = random_network(n, 0.3, &mut rng);
            assert_eq!(g.n(), n);
            assert!(g.edge_count() >= n - 1);
        }
    }

    #[test]
    fn quick_suites_pass() {
        for name in ["matrix-tree", "determinant", "path-prob", "q-mass"] {
            let r = run_suite(name, 11, Effort::Quick).unwrap();
            assert!(r.pass, "{name}: {:#?}", r.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        }
    }
}
