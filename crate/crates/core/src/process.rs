//! Event-driven simulation of the vertex reinforced jump process (VRJP) and
//! the edge reinforced random walk (ERRW).
//!
//! While the VRJP `Y` sits at `i`, the local times of all other vertices are
//! frozen, so the jump rates `W_ij L_j` are constant and the holding time is
//! exactly exponential. No time discretisation is involved.
//!
//! The time-changed process `Z_t = Y_{D⁻¹(t)}`, `D(t) = Σ(L_i² − φ_i²)`, has
//! local times `ℓ_i = L_i² − φ_i²`, so it is obtained from `Y` directly.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::PathError;
use crate::graph::Network;

/// State of the VRJP in its own (`Y`) time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct VrjpState {
    pub current: usize,
    pub t: f64,
    /// `L_i(t) = φ_i + time spent at i`.
    pub local: Vec<f64>,
    pub phi: Vec<f64>,
}

/// One jump: `hold` time spent at `from` before moving to `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    pub hold: f64,
}

impl VrjpState {
    pub fn new(start: usize, phi: &[f64]) -> Self {
        Self {
            current: start,
            t: 0.0,
            local: phi.to_vec(),
            phi: phi.to_vec(),
        }
    }

    /// Local times `ℓ_i = L_i² − φ_i²` of `Z` and its clock `D(t)`.
    pub fn z_record(&self) -> ZRecord {
        let ell: Vec<f64> = self
            .local
            .iter()
            .zip(&self.phi)
            .map(|(l, p)| (l - p) * (l + p))
            .collect();
        ZRecord {
            t_z: ell.iter().sum(),
            ell,
        }
    }

    /// Stay at the current vertex for `dt` without jumping.
    pub fn advance(&mut self, dt: f64) {
        self.local[self.current] += dt;
        self.t += dt;
    }
}

/// Local times of the time-changed process `Z`; `Σ ℓ_i = t_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZRecord {
    pub ell: Vec<f64>,
    pub t_z: f64,
}

/// Sample the next jump from the current state and apply it.
pub fn vrjp_step<R: Rng + ?Sized>(s: &mut VrjpState, net: &Network, rng: &mut R) -> Jump {
    let i = s.current;
    let nbrs = net.neighbors(i);
    let total: f64 = nbrs.iter().map(|&(j, w, _)| w * s.local[j]).sum();
    let e: f64 = rng.sample(Exp1);
    let hold = e / total;
    let mut target = rng.random::<f64>() * total;
    let mut to = nbrs[nbrs.len() - 1].0;
    for &(j, w, _) in nbrs {
        target -= w * s.local[j];
        if target < 0.0 {
            to = j;
            break;
        }
    }
    s.advance(hold);
    s.current = to;
    Jump { from: i, to, hold }
}

/// `D(t) = Σ_i (L_i(t)² − φ_i²)`.
pub fn time_change_d(s: &VrjpState) -> f64 {
    s.z_record().t_z
}

/// Finite-time plug-in of the mixing field rooted at `i0`:
/// `U_i = ½ log((ℓ_i + φ_i²) / (ℓ_{i0} + φ_{i0}²)) = log(L_i / L_{i0})`.
///
/// Its limit has law `Q^{W,φ}_{i0}`, and given the limit `Z` jumps from `i`
/// to `j` at rate `½ W_ij e^{U_j − U_i}`.
pub fn estimate_u(ell: &[f64], phi: &[f64], i0: usize) -> Vec<f64> {
    let base = ell[i0] + phi[i0] * phi[i0];
    let mut u: Vec<f64> = ell
        .iter()
        .zip(phi)
        .map(|(l, p)| 0.5 * ((l + p * p) / base).ln())
        .collect();
    u[i0] = 0.0;
    u
}

/// The same plug-in with the `φ` offset removed:
/// `½ log((ℓ_i + φ_i²) / (ℓ_{i0} + φ_{i0}²)) − ½ log(φ_i² / φ_{i0}²)`.
///
/// This is `log(L̃_i / L̃_{i0})` for the rescaled process of
/// [`time_rescale_phi`], whose limit has law `Q^{W^φ,1}_{i0}` with
/// `W^φ_ij = W_ij φ_i φ_j`. It coincides with [`estimate_u`] when `φ ≡ 1`.
pub fn estimate_u_rescaled(ell: &[f64], phi: &[f64], i0: usize) -> Vec<f64> {
    let mut u = estimate_u(ell, phi, i0);
    for (i, ui) in u.iter_mut().enumerate() {
        *ui -= (phi[i] / phi[i0]).ln();
    }
    u[i0] = 0.0;
    u
}

/// Vertex sequence with the time spent at each visit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub vertices: Vec<usize>,
    pub holds: Vec<f64>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.holds.iter().sum()
    }

    /// Jump times (cumulative holds, excluding the final partial visit).
    pub fn jump_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.holds[..self.holds.len().saturating_sub(1)]
            .iter()
            .map(|h| {
                t += h;
                t
            })
            .collect()
    }
}

/// Options for [`simulate_vrjp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrjpRun {
    pub start: usize,
    /// Stop at this `Y` time.
    pub t_end: f64,
    /// Also stop after this many jumps.
    pub max_jumps: Option<usize>,
    pub record: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VrjpOutcome {
    pub state: VrjpState,
    pub jumps: usize,
    pub trajectory: Option<Trajectory>,
}

/// Simulate the VRJP until `t_end` (the last visit is cut at `t_end`).
pub fn simulate_vrjp<R: Rng + ?Sized>(
    net: &Network,
    phi: &[f64],
    run: VrjpRun,
    rng: &mut R,
) -> VrjpOutcome {
    simulate_vrjp_with(net, phi, run, rng, |_, _| {})
}

/// As [`simulate_vrjp`], calling `observe(state, jump)` after every jump.
pub fn simulate_vrjp_with<R: Rng + ?Sized>(
    net: &Network,
    phi: &[f64],
    run: VrjpRun,
    rng: &mut R,
    mut observe: impl FnMut(&VrjpState, &Jump),
) -> VrjpOutcome {
    let mut s = VrjpState::new(run.start, phi);
    let mut traj = run.record.then(Trajectory::default);
    let mut jumps = 0;
    if net.n() == 1 {
        s.advance(run.t_end);
        if let Some(t) = traj.as_mut() {
            t.vertices.push(run.start);
            t.holds.push(run.t_end);
        }
        return VrjpOutcome {
            state: s,
            jumps,
            trajectory: traj,
        };
    }
    loop {
        if run.max_jumps.is_some_and(|m| jumps >= m) {
            break;
        }
        let j = vrjp_step(&mut s, net, rng);
        if s.t > run.t_end {
            // Truncate the final visit; the sampled jump never happens.
            let rest = j.hold - (s.t - run.t_end);
            s.local[j.from] -= s.t - run.t_end;
            s.t = run.t_end;
            s.current = j.from;
            if let Some(t) = traj.as_mut() {
                t.vertices.push(j.from);
                t.holds.push(rest);
            }
            return VrjpOutcome {
                state: s,
                jumps,
                trajectory: traj,
            };
        }
        jumps += 1;
        if let Some(t) = traj.as_mut() {
            t.vertices.push(j.from);
            t.holds.push(j.hold);
        }
        observe(&s, &j);
    }
    if let Some(t) = traj.as_mut() {
        t.vertices.push(s.current);
        t.holds.push(0.0);
    }
    VrjpOutcome {
        state: s,
        jumps,
        trajectory: traj,
    }
}

/// Field estimates from one trajectory at `t_end / 2` and `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct UEstimate {
    pub half: Vec<f64>,
    pub full: Vec<f64>,
    pub jumps: usize,
}

/// Run one VRJP from `i0` and return the `U` plug-in at `t_end/2` and `t_end`.
pub fn estimate_u_trajectory<R: Rng + ?Sized>(
    net: &Network,
    phi: &[f64],
    i0: usize,
    t_end: f64,
    rng: &mut R,
) -> UEstimate {
    let half = t_end / 2.0;
    let mut at_half: Option<VrjpState> = None;
    let mut s = VrjpState::new(i0, phi);
    let mut jumps = 0;
    if net.n() > 1 {
        loop {
            let i = s.current;
            let j = vrjp_step(&mut s, net, rng);
            if at_half.is_none() && s.t >= half {
                let mut h = s.clone();
                h.local[i] -= s.t - half;
                h.t = half;
                at_half = Some(h);
            }
            if s.t >= t_end {
                s.local[i] -= s.t - t_end;
                s.t = t_end;
                s.current = j.from;
                break;
            }
            jumps += 1;
        }
    }
    let at_half = at_half.unwrap_or_else(|| s.clone());
    let est = |st: &VrjpState| estimate_u(&st.z_record().ell, phi, i0);
    UEstimate {
        half: est(&at_half),
        full: est(&s),
        jumps,
    }
}

/// Choice of `t_end` for the `U` plug-in: start at `start` and double until
/// the median over `pilot` trajectories of `|U(t) − U(t/2)|` is below
/// `tolerance` for every coordinate, or `cap` is reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePolicy {
    pub start: f64,
    pub cap: f64,
    pub pilot: usize,
    pub tolerance: f64,
}

impl Default for ConvergencePolicy {
    fn default() -> Self {
        Self {
            start: 100.0,
            cap: 1e4,
            pilot: 200,
            tolerance: 0.01,
        }
    }
}

/// Outcome of [`choose_t_end`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub t_end: f64,
    /// Largest per-coordinate median of `|U(t) − U(t/2)|`.
    pub median_drift: f64,
    pub converged: bool,
}

/// Worst per-coordinate median drift between the half-time and full-time plug-ins.
pub fn median_drift(estimates: &[UEstimate]) -> f64 {
    let Some(first) = estimates.first() else {
        return 0.0;
    };
    (0..first.full.len())
        .map(|j| {
            let mut d: Vec<f64> = estimates
                .iter()
                .map(|e| (e.full[j] - e.half[j]).abs())
                .collect();
            d.sort_by(f64::total_cmp);
            d[d.len() / 2]
        })
        .fold(0.0, f64::max)
}

pub fn choose_t_end(
    net: &Network,
    phi: &[f64],
    i0: usize,
    policy: ConvergencePolicy,
    seed: u64,
) -> ConvergenceCheck {
    let mut t = policy.start;
    let mut round = 0;
    loop {
        let est = crate::rng::par_draws(
            policy.pilot,
            crate::rng::derive_seed(seed, &format!("pilot-{round}")),
            || (),
            |_, rng| estimate_u_trajectory(net, phi, i0, t, rng),
        );
        let drift = median_drift(&est);
        if drift < policy.tolerance || t * 2.0 > policy.cap {
            return ConvergenceCheck {
                t_end: t,
                median_drift: drift,
                converged: drift < policy.tolerance,
            };
        }
        t *= 2.0;
        round += 1;
    }
}

/// `s̃ = A(s)`: holds of the visit at `v` divided by `φ_v`.
///
/// The result is a VRJP trajectory with weights `W_ij φ_i φ_j` and `φ ≡ 1`.
pub fn time_rescale_phi(traj: &Trajectory, phi: &[f64]) -> Trajectory {
    Trajectory {
        vertices: traj.vertices.clone(),
        holds: traj
            .vertices
            .iter()
            .zip(&traj.holds)
            .map(|(&v, h)| h / phi[v])
            .collect(),
    }
}

/// `W^φ_ij = W_ij φ_i φ_j`.
pub fn phi_weighted_network(net: &Network, phi: &[f64]) -> Network {
    net.reweighted(|e| e.w * phi[e.i] * phi[e.j])
        .expect("positive weights stay positive")
}

/// Jump chain of the Markov process with rates `½ W_ij e^{u_j − u_i}`, i.e.
/// the reversible chain with conductances `W_ij e^{u_i + u_j}`.
pub fn markov_jump_chain<R: Rng + ?Sized>(
    net: &Network,
    u: &[f64],
    start: usize,
    steps: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut path = Vec::with_capacity(steps + 1);
    path.push(start);
    let mut cur = start;
    for _ in 0..steps {
        let nbrs = net.neighbors(cur);
        let total: f64 = nbrs.iter().map(|&(j, w, _)| w * u[j].exp()).sum();
        let mut target = rng.random::<f64>() * total;
        let mut next = nbrs[nbrs.len() - 1].0;
        for &(j, w, _) in nbrs {
            target -= w * u[j].exp();
            if target < 0.0 {
                next = j;
                break;
            }
        }
        path.push(next);
        cur = next;
    }
    path
}

/// Local times of a `Z` path: `ℓ_{x_k} += t_{k+1} − t_k`, with `t_0 = 0`
/// and `t_{n+1} = t`.
pub fn path_local_times(n: usize, path: &[usize], jump_times: &[f64], t: f64) -> Vec<f64> {
    assert_eq!(jump_times.len() + 1, path.len());
    let mut ell = vec![0.0; n];
    let mut prev = 0.0;
    for (k, &v) in path.iter().enumerate() {
        let next = jump_times.get(k).copied().unwrap_or(t);
        ell[v] += next - prev;
        prev = next;
    }
    ell
}

/// Density `p_t` (per `Π ½ W_{x_{k−1} x_k} dt_k`) that the time-changed VRJP
/// follows `path` from `path[0]` with the given jump times up to time `t`.
///
/// `p_t = exp(−Σ_E W_ij (√(φ_i²+ℓ_i) √(φ_j²+ℓ_j) − φ_i φ_j))
///        · Π_{i≠x_0} φ_i / Π_{i≠x_n} √(φ_i² + ℓ_i)`.
/// For a closed path (`x_n = x_0`) the prefactor is `Π_{i≠x_0} φ_i/√(φ_i²+ℓ_i)`.
pub fn vrjp_path_density(
    net: &Network,
    phi: &[f64],
    path: &[usize],
    jump_times: &[f64],
    t: f64,
) -> Result<f64, PathError> {
    validate_path(net, path, None)?;
    let ell = path_local_times(net.n(), path, jump_times, t);
    let (start, end) = (path[0], *path.last().unwrap());
    let root = |i: usize| (phi[i] * phi[i] + ell[i]).sqrt();
    let energy: f64 = net
        .edges()
        .iter()
        .map(|e| e.w * (root(e.i) * root(e.j) - phi[e.i] * phi[e.j]))
        .sum();
    let mut log_pre = 0.0;
    for i in 0..net.n() {
        if i != start {
            log_pre += phi[i].ln();
        }
        if i != end {
            log_pre -= root(i).ln();
        }
    }
    Ok((log_pre - energy).exp())
}

/// Integrand of the mixture route: given `u`, the Markov process with rates
/// `½ W e^{u_j − u_i}` has path density `e^{u_{x_n} − u_{x_0}} e^{−Σ β̃_i ℓ_i}`.
pub fn mixture_path_integrand(net: &Network, u: &[f64], path: &[usize], ell: &[f64]) -> f64 {
    let tb = crate::bridge::tilde_beta(net, u);
    let exponent: f64 = tb.iter().zip(ell).map(|(b, l)| b * l).sum();
    (u[*path.last().unwrap()] - u[path[0]] - exponent).exp()
}

pub(crate) fn validate_path(
    net: &Network,
    path: &[usize],
    start: Option<usize>,
) -> Result<(), PathError> {
    let first = *path.first().ok_or(PathError::Empty)?;
    if let Some(s) = start {
        if first != s {
            return Err(PathError::WrongStart {
                expected: s,
                got: first,
            });
        }
    }
    for &v in path {
        if v >= net.n() {
            return Err(PathError::VertexOutOfRange(v));
        }
    }
    for (step, w) in path.windows(2).enumerate() {
        if net.edge_index(w[0], w[1]).is_none() {
            return Err(PathError::NotAnEdge {
                step,
                from: w[0],
                to: w[1],
            });
        }
    }
    Ok(())
}

/// ERRW state: `z[e] = a_e + number of crossings of e so far`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrwState {
    pub current: usize,
    pub step: usize,
    pub z: Vec<f64>,
}

impl ErrwState {
    pub fn new(start: usize, a: &[f64]) -> Self {
        Self {
            current: start,
            step: 0,
            z: a.to_vec(),
        }
    }
}

/// One reinforced step: move along `{X_n, j}` with probability proportional
/// to `z({X_n, j})`, then add one to that edge.
pub fn errw_step<R: Rng + ?Sized>(s: &mut ErrwState, net: &Network, rng: &mut R) -> usize {
    let nbrs = net.neighbors(s.current);
    let total: f64 = nbrs.iter().map(|&(_, _, e)| s.z[e]).sum();
    let mut target = rng.random::<f64>() * total;
    let mut chosen = nbrs[nbrs.len() - 1];
    for &nb in nbrs {
        target -= s.z[nb.2];
        if target < 0.0 {
            chosen = nb;
            break;
        }
    }
    s.z[chosen.2] += 1.0;
    s.current = chosen.0;
    s.step += 1;
    s.current
}

pub fn simulate_errw<R: Rng + ?Sized>(
    net: &Network,
    a: &[f64],
    start: usize,
    steps: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut s = ErrwState::new(start, a);
    let mut path = Vec::with_capacity(steps + 1);
    path.push(start);
    for _ in 0..steps {
        path.push(errw_step(&mut s, net, rng));
    }
    path
}

/// Probability that the ERRW with initial weights `a` follows `path`, as the
/// product of the one-step conditional probabilities.
pub fn errw_path_probability_direct(
    net: &Network,
    a: &[f64],
    path: &[usize],
) -> Result<f64, PathError> {
    validate_path(net, path, None)?;
    let mut z = a.to_vec();
    let mut p = 1.0;
    for w in path.windows(2) {
        let total: f64 = net.neighbors(w[0]).iter().map(|&(_, _, e)| z[e]).sum();
        let e = net.edge_index(w[0], w[1]).unwrap();
        p *= z[e] / total;
        z[e] += 1.0;
    }
    Ok(p)
}
