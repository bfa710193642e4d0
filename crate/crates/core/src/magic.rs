//! Mixing measure of the edge reinforced random walk.
//!
//! The ERRW with initial weights `a` started at `i0` is a mixture of
//! reversible Markov chains with edge conductances `y`. The mixing law has the
//! explicit density of [`log_density_magic`] on the slice `{y_{e0} = 1}`, and
//! it is also the law of `W_e e^{u_i + u_j}` when `W_e ∼ Gamma(a_e, 1)` and
//! `u` is the VRJP field with unit initial local times.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::beta_family::check_positive;
use crate::bridge::USampler;
use crate::error::{ParamError, PathError};
use crate::graph::{spanning_tree_sum, Network};
use crate::process::validate_path;

/// Initial edge weights `a_e` and the vertex sums `a_i = Σ_{e∋i} a_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeInitialWeights {
    net: Arc<Network>,
    edge: Vec<f64>,
    vertex: Vec<f64>,
}

impl EdgeInitialWeights {
    pub fn new(net: impl Into<Arc<Network>>, a: Vec<f64>) -> Result<Self, ParamError> {
        let net = net.into();
        check_positive("a", &a, net.edge_count())?;
        let vertex = vertex_sums(&net, &a);
        Ok(Self {
            net,
            edge: a,
            vertex,
        })
    }

    pub fn uniform(net: impl Into<Arc<Network>>, a: f64) -> Result<Self, ParamError> {
        let net = net.into();
        let m = net.edge_count();
        Self::new(net, vec![a; m])
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn shared_net(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn edge(&self) -> &[f64] {
        &self.edge
    }

    pub fn vertex(&self) -> &[f64] {
        &self.vertex
    }
}

fn vertex_sums(net: &Network, per_edge: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; net.n()];
    for (e, edge) in net.edges().iter().enumerate() {
        out[edge.i] += per_edge[e];
        out[edge.j] += per_edge[e];
    }
    out
}

/// Edge conductances normalised so that `y_{e0} = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagicPoint {
    net: Arc<Network>,
    reference: usize,
    edge: Vec<f64>,
}

impl MagicPoint {
    /// Divides `y` by `y[reference]`.
    pub fn normalized(
        net: impl Into<Arc<Network>>,
        reference: usize,
        mut y: Vec<f64>,
    ) -> Result<Self, ParamError> {
        let net = net.into();
        check_positive("y", &y, net.edge_count())?;
        if reference >= y.len() {
            return Err(ParamError::Invalid(format!(
                "reference edge {reference} out of range"
            )));
        }
        let scale = y[reference];
        for v in &mut y {
            *v /= scale;
        }
        y[reference] = 1.0;
        Ok(Self {
            net,
            reference,
            edge: y,
        })
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    pub fn edge(&self) -> &[f64] {
        &self.edge
    }

    pub fn into_edge(self) -> Vec<f64> {
        self.edge
    }

    /// `y_i = Σ_{e∋i} y_e`.
    pub fn vertex(&self) -> Vec<f64> {
        vertex_sums(&self.net, &self.edge)
    }
}

/// `log C(a, i0)` with
/// `C = 2^{1−|V|+Σa_e} π^{−(|V|−1)/2} Π_i Γ(½(a_i + 1 − 1_{i=i0})) / Π_e Γ(a_e)`.
pub fn log_constant_c(a: &EdgeInitialWeights, i0: usize) -> f64 {
    let n = a.net.n() as f64;
    let sum_a: f64 = a.edge.iter().sum();
    let vertex_part: f64 = a
        .vertex
        .iter()
        .enumerate()
        .map(|(i, ai)| ln_gamma(0.5 * (ai + 1.0 - if i == i0 { 1.0 } else { 0.0 })))
        .sum();
    let edge_part: f64 = a.edge.iter().map(|&ae| ln_gamma(ae)).sum();
    (1.0 - n + sum_a) * 2f64.ln() - 0.5 * (n - 1.0) * PI.ln() + vertex_part - edge_part
}

/// Log density of the mixing measure at `y`, with respect to
/// `Π_{e≠e0} dy_e / y_e`:
/// `C(a,i0) √y_{i0} Π_e y_e^{a_e} / Π_i y_i^{(a_i+1)/2} · √D(y)`.
pub fn log_density_magic(y: &MagicPoint, a: &EdgeInitialWeights, i0: usize) -> f64 {
    log_density_magic_at(&a.net, &y.edge, a, i0)
}

/// [`log_density_magic`] at raw per-edge values (the caller fixes `y_{e0}`).
pub fn log_density_magic_at(net: &Network, y: &[f64], a: &EdgeInitialWeights, i0: usize) -> f64 {
    let yv = vertex_sums(net, y);
    let edge_part: f64 = y.iter().zip(&a.edge).map(|(ye, ae)| ae * ye.ln()).sum();
    let vertex_part: f64 = yv
        .iter()
        .zip(&a.vertex)
        .map(|(yi, ai)| 0.5 * (ai + 1.0) * yi.ln())
        .sum();
    log_constant_c(a, i0) + 0.5 * yv[i0].ln() + edge_part - vertex_part
        + 0.5 * spanning_tree_sum(net, y).ln()
}

/// Crossings per edge and departures per vertex along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCounts {
    pub edge: Vec<u32>,
    pub vertex: Vec<u32>,
}

pub fn path_counts(net: &Network, path: &[usize]) -> Result<PathCounts, PathError> {
    validate_path(net, path, None)?;
    let mut c = PathCounts {
        edge: vec![0; net.edge_count()],
        vertex: vec![0; net.n()],
    };
    for w in path.windows(2) {
        c.edge[net.edge_index(w[0], w[1]).unwrap()] += 1;
        c.vertex[w[0]] += 1;
    }
    Ok(c)
}

/// ERRW path probability by integrating the Markov path probability against
/// the mixing measure:
/// `Π_e (a_e)_{N_e} / [Π_{k<N_{i0}} (a_{i0} + 2k) · Π_{i≠i0} Π_{k<N_i} (a_i + 1 + 2k)]`,
/// where `(x)_m` is the rising factorial and `N_i` counts departures from `i`.
pub fn path_probability_closed(a: &EdgeInitialWeights, path: &[usize]) -> Result<f64, PathError> {
    let c = path_counts(&a.net, path)?;
    let i0 = path[0];
    let mut log_p = 0.0;
    for (e, &ne) in c.edge.iter().enumerate() {
        log_p += (0..ne).map(|k| (a.edge[e] + k as f64).ln()).sum::<f64>();
    }
    for (i, &ni) in c.vertex.iter().enumerate() {
        let shift = if i == i0 { 0.0 } else { 1.0 };
        log_p -= (0..ni)
            .map(|k| (a.vertex[i] + shift + 2.0 * k as f64).ln())
            .sum::<f64>();
    }
    Ok(log_p.exp())
}

/// Independent `W_e ∼ Gamma(a_e, 1)`.
pub fn sample_mixed_w<R: Rng + ?Sized>(a: &EdgeInitialWeights, rng: &mut R) -> Vec<f64> {
    a.edge
        .iter()
        .map(|&ae| {
            Gamma::new(ae, 1.0)
                .expect("positive shape")
                .sample(rng)
                .max(f64::MIN_POSITIVE)
        })
        .collect()
}

/// Per-edge `W_e e^{u_i + u_j}` for a gamma-mixed VRJP field rooted at `i0`,
/// not yet normalised. Also returns the `W` draw.
pub fn sample_mixed_conductances<R: Rng + ?Sized>(
    a: &EdgeInitialWeights,
    i0: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let w = sample_mixed_w(a, rng);
    let net = a
        .net
        .reweighted(|e| w[a.net.edge_index(e.i, e.j).unwrap()])
        .expect("gamma draws are positive");
    let n = net.n();
    let mut sampler = USampler::new(net, &vec![1.0; n], i0).expect("unit initial local times");
    let (u, _) = sampler.sample(rng);
    let u = u.u();
    let y = a
        .net
        .edges()
        .iter()
        .zip(&w)
        .map(|(e, we)| we * (u[e.i] + u[e.j]).exp())
        .collect();
    (y, w)
}

/// One draw from the mixing measure on the slice `{y_{e0} = 1}`.
pub fn sample_magic_point<R: Rng + ?Sized>(
    a: &EdgeInitialWeights,
    i0: usize,
    e0: usize,
    rng: &mut R,
) -> Result<MagicPoint, ParamError> {
    if i0 >= a.net.n() {
        return Err(ParamError::Invalid(format!("base vertex {i0} out of range")));
    }
    if e0 >= a.net.edge_count() {
        return Err(ParamError::Invalid(format!("reference edge {e0} out of range")));
    }
    let (y, _) = sample_mixed_conductances(a, i0, rng);
    MagicPoint::normalized(a.net.clone(), e0, y)
}

/// `Π_k y_{x_k x_{k+1}} / y_{x_k}`: path probability of the reversible chain
/// with conductances `y`.
pub fn markov_path_probability(y: &MagicPoint, path: &[usize]) -> Result<f64, PathError> {
    markov_path_probability_at(&y.net, &y.edge, path)
}

pub fn markov_path_probability_at(
    net: &Network,
    y: &[f64],
    path: &[usize],
) -> Result<f64, PathError> {
    let c = path_counts(net, path)?;
    let yv = vertex_sums(net, y);
    let mut log_p = 0.0;
    for (e, &ne) in c.edge.iter().enumerate() {
        log_p += ne as f64 * y[e].ln();
    }
    for (i, &ni) in c.vertex.iter().enumerate() {
        log_p -= ni as f64 * yv[i].ln();
    }
    Ok(log_p.exp())
}
