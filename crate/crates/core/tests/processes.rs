//! Distributional checks of the simulators against the mixing measures.

use std::collections::HashMap;

use reinforce_core::bridge::USampler;
use reinforce_core::magic::{path_probability_closed, sample_mixed_w};
use reinforce_core::process::{
    estimate_u_rescaled, estimate_u_trajectory, markov_jump_chain, mixture_path_integrand,
    path_local_times, phi_weighted_network, simulate_vrjp, vrjp_path_density, VrjpRun, VrjpState,
};
use reinforce_core::rng::{par_draws, stream_rng};
use reinforce_core::verify::ks::ks_two_sample;
use reinforce_core::verify::stats::mc_mean;
use reinforce_core::{EdgeInitialWeights, Network};

fn triangle() -> Network {
    Network::new(3, &[(0, 1, 1.0), (1, 2, 0.5), (0, 2, 2.0)]).unwrap()
}

fn tally(paths: impl IntoIterator<Item = Vec<usize>>) -> (HashMap<Vec<usize>, usize>, usize) {
    let mut m = HashMap::new();
    let mut n = 0;
    for p in paths {
        *m.entry(p).or_default() += 1;
        n += 1;
    }
    (m, n)
}

fn assert_same_frequencies(a: &HashMap<Vec<usize>, usize>, b: &HashMap<Vec<usize>, usize>, n: usize) {
    let nf = n as f64;
    for key in a.keys().chain(b.keys()) {
        let pa = *a.get(key).unwrap_or(&0) as f64 / nf;
        let pb = *b.get(key).unwrap_or(&0) as f64 / nf;
        let pooled = 0.5 * (pa + pb);
        let se = (2.0 * pooled * (1.0 - pooled) / nf).sqrt();
        assert!((pa - pb).abs() < 4.0 * se, "{key:?}: {pa} vs {pb}");
    }
}

#[test]
fn vrjp_jump_chain_is_a_mixture_of_markov_chains() {
    // Given the mixing field u, the jump chain moves i → j with probability
    // proportional to W_ij e^{u_j}.
    let net = triangle();
    let phi = [0.8, 1.0, 1.5];
    let runs = 100_000;
    let steps = 3;
    let vrjp = par_draws(runs, 1, || (), |_, rng| {
        simulate_vrjp(
            &net,
            &phi,
            VrjpRun { start: 0, t_end: f64::INFINITY, max_jumps: Some(steps), record: true },
            rng,
        )
        .trajectory
        .unwrap()
        .vertices
    });
    let sampler = USampler::new(net.clone(), &phi, 0).unwrap();
    let mixture = par_draws(runs, 2, || sampler.clone(), |s, rng| {
        let (u, _) = s.sample(rng);
        markov_jump_chain(&net, u.u(), 0, steps, rng)
    });
    let (a, n) = tally(vrjp);
    let (b, _) = tally(mixture);
    assert_eq!(a.len(), 8);
    assert_same_frequencies(&a, &b, n);
}

#[test]
fn path_density_equals_mixture_average() {
    let net = triangle();
    let phi = [0.8, 1.0, 1.5];
    let cases: [(&[usize], &[f64], f64); 4] = [
        (&[0], &[], 0.7),
        (&[0, 1, 0], &[0.3, 0.9], 1.4),
        (&[0, 2, 1], &[0.5, 0.8], 1.2),
        (&[1, 0, 2, 0], &[0.2, 0.6, 1.1], 2.0),
    ];
    for (path, times, t) in cases {
        let closed = vrjp_path_density(&net, &phi, path, times, t).unwrap();
        let ell = path_local_times(net.n(), path, times, t);
        let sampler = USampler::new(net.clone(), &phi, path[0]).unwrap();
        let vals = par_draws(200_000, 3, || sampler.clone(), |s, rng| {
            let (u, _) = s.sample(rng);
            mixture_path_integrand(&net, u.u(), path, &ell)
        });
        let m = mc_mean(&vals);
        assert!(m.z_score(closed) < 4.0, "{path:?}: closed {closed}, mixture {} ± {}", m.mean, m.se);
    }
}

#[test]
fn offset_plug_in_has_the_reweighted_law() {
    // Removing ½ log(φ_i²/φ_{i0}²) from the plug-in gives the field of the
    // process with weights W_ij φ_i φ_j and unit initial local times.
    let net = Network::path(&[1.0]).unwrap();
    let phi = [1.0, 2.0];
    let rows = par_draws(2_000, 4, || (), |_, rng| {
        let e = estimate_u_trajectory(&net, &phi, 0, 400.0, rng);
        let mut s = VrjpState::new(0, &phi);
        // Recover ℓ from the plug-in: L_1 / L_0 = e^{U_1}.
        s.local = vec![1.0, e.full[1].exp()];
        let z = s.z_record();
        (e.full[1], estimate_u_rescaled(&z.ell, &phi, 0)[1])
    });
    let plain: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let offset: Vec<f64> = rows.iter().map(|r| r.1).collect();
    for (o, p) in offset.iter().zip(&plain) {
        assert!((o - (p - 2f64.ln())).abs() < 1e-12);
    }
    let reweighted = phi_weighted_network(&net, &phi);
    let mut s1 = USampler::new(net.clone(), &phi, 0).unwrap();
    let mut s2 = USampler::new(reweighted, &[1.0, 1.0], 0).unwrap();
    let mut rng = stream_rng(5, 0);
    let exact: Vec<f64> = (0..50_000).map(|_| s1.sample(&mut rng).0.u()[1]).collect();
    let exact_rw: Vec<f64> = (0..50_000).map(|_| s2.sample(&mut rng).0.u()[1]).collect();
    assert!(ks_two_sample(&plain, &exact).p_value > 0.001);
    assert!(ks_two_sample(&offset, &exact_rw).p_value > 0.001);
    assert!(ks_two_sample(&offset, &exact).p_value < 1e-6);
}

#[test]
fn gamma_mixed_vrjp_is_the_reinforced_walk() {
    let net = Network::complete(3, 1.0).unwrap();
    let a = EdgeInitialWeights::new(net.clone(), vec![0.7, 1.5, 2.2]).unwrap();
    let runs = 200_000;
    let steps = 3;
    let paths = par_draws(runs, 6, || (), |_, rng| {
        let w = sample_mixed_w(&a, rng);
        let mixed = net.reweighted(|e| w[net.edge_index(e.i, e.j).unwrap()]).unwrap();
        simulate_vrjp(
            &mixed,
            &[1.0; 3],
            VrjpRun { start: 0, t_end: f64::INFINITY, max_jumps: Some(steps), record: true },
            rng,
        )
        .trajectory
        .unwrap()
        .vertices
    });
    let (freq, n) = tally(paths);
    for (p, count) in &freq {
        let exact = path_probability_closed(&a, p).unwrap();
        let f = *count as f64 / n as f64;
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((f - exact).abs() < 4.0 * se, "{p:?}: {f} vs {exact}");
    }
    assert_eq!(freq.len(), 8);
}

#[test]
fn holding_time_matches_survival_formula() {
    // P(no jump from 0 before Z-time t) = exp(−Σ_{j∼0} W_0j φ_j (√(φ_0² + t) − φ_0)).
    let net = triangle();
    let phi = [0.8, 1.0, 1.5];
    let t = 0.9;
    let mut rng = stream_rng(7, 0);
    let runs = 100_000;
    let mut stayed = 0;
    for _ in 0..runs {
        let out = simulate_vrjp(
            &net,
            &phi,
            VrjpRun { start: 0, t_end: f64::INFINITY, max_jumps: Some(1), record: true },
            &mut rng,
        );
        let hold = out.trajectory.unwrap().holds[0];
        // Z-time of the first jump: (φ_0 + hold)² − φ_0².
        if (phi[0] + hold).powi(2) - phi[0] * phi[0] > t {
            stayed += 1;
        }
    }
    let exact = vrjp_path_density(&net, &phi, &[0], &[], t).unwrap();
    let f = stayed as f64 / runs as f64;
    assert!((f - exact).abs() < 4.0 * (exact * (1.0 - exact) / runs as f64).sqrt());
}
