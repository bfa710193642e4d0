//! Algebraic invariants checked on randomly generated instances.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use reinforce_core::beta_family::{laplace_transform, log_density_nu_at, BetaSampler};
use reinforce_core::bridge::{beta_from_u_gamma, certify_inverse, phi_map, USampler};
use reinforce_core::graph::{
    enumerate_spanning_trees, laplacian_cofactor, spanning_tree_polynomial, tilted_conductances,
};
use reinforce_core::linalg::{green_column, log_determinant, lu_factorize};
use reinforce_core::magic::path_probability_closed;
use reinforce_core::process::errw_path_probability_direct;
use reinforce_core::rng::stream_rng;
use reinforce_core::verify::suites::random_network;
use reinforce_core::{EdgeInitialWeights, FamilyParams, Network, PotentialMatrix, VertexOrdering};

fn instance(n: usize, seed: u64) -> (Network, Vec<f64>, rand_chacha::ChaCha8Rng) {
    let mut rng = stream_rng(seed, 0);
    let net = random_network(n, 0.5, &mut rng);
    let theta = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
    (net, theta, rng)
}

fn random_perm(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        p.swap(i, rng.random_range(0..=i));
    }
    p
}

/// Determinant of the leading `k × k` block (textbook Gaussian elimination via nalgebra).
fn leading_minor(m: &DMatrix<f64>, k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        m.view((0, 0), (k, k)).into_owned().determinant()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tree_polynomial_matches_enumeration(n in 1usize..=6, seed in any::<u64>()) {
        let (net, _, mut rng) = instance(n, seed);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let c = tilted_conductances(&net, &u);
        let brute: f64 = enumerate_spanning_trees(&net)
            .unwrap()
            .iter()
            .map(|t| t.iter().map(|&e| c[e]).product::<f64>())
            .sum();
        let fast = spanning_tree_polynomial(&net, &u);
        prop_assert!(((fast - brute) / brute).abs() < 1e-10);
        // Every principal cofactor gives the same sum.
        for d in 0..n {
            let cof = laplacian_cofactor(&net, &c, d);
            prop_assert!(((cof - brute) / brute).abs() < 1e-10);
        }
    }

    #[test]
    fn tree_polynomial_shift(n in 1usize..=6, seed in any::<u64>(), shift in -2.0f64..2.0) {
        let (net, _, mut rng) = instance(n, seed);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shifted: Vec<f64> = u.iter().map(|x| x + shift).collect();
        let lhs = spanning_tree_polynomial(&net, &shifted);
        let rhs = (2.0 * (n as f64 - 1.0) * shift).exp() * spanning_tree_polynomial(&net, &u);
        prop_assert!(((lhs - rhs) / rhs).abs() < 1e-10);
    }

    #[test]
    fn relabeling_is_a_symmetry(n in 2usize..=6, seed in any::<u64>()) {
        let (net, theta, mut rng) = instance(n, seed);
        let perm = random_perm(n, &mut rng);
        let moved = net.relabeled(&perm).unwrap();
        let mut theta_moved = vec![0.0; n];
        for v in 0..n {
            theta_moved[perm[v]] = theta[v];
        }
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut u_moved = vec![0.0; n];
        for v in 0..n {
            u_moved[perm[v]] = u[v];
        }
        let d0 = spanning_tree_polynomial(&net, &u);
        let d1 = spanning_tree_polynomial(&moved, &u_moved);
        prop_assert!(((d0 - d1) / d0).abs() < 1e-10);

        let p = FamilyParams::new(net, theta).unwrap();
        let q = FamilyParams::new(moved, theta_moved).unwrap();
        let lambda: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        let mut lambda_moved = vec![0.0; n];
        for v in 0..n {
            lambda_moved[perm[v]] = lambda[v];
        }
        let l0 = laplace_transform(&p, &lambda).unwrap();
        let l1 = laplace_transform(&q, &lambda_moved).unwrap();
        prop_assert!(((l0 - l1) / l0).abs() < 1e-12);

        let b = BetaSampler::new(&p, &VertexOrdering::identity(n)).unwrap().sample(&mut rng);
        let mut b_moved = vec![0.0; n];
        for v in 0..n {
            b_moved[perm[v]] = b.beta()[v];
        }
        let d0 = log_density_nu_at(&p, b.beta()).unwrap();
        let d1 = log_density_nu_at(&q, &b_moved).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9 * d0.abs().max(1.0));
    }

    #[test]
    fn pivots_are_ratios_of_leading_minors(n in 1usize..=6, seed in any::<u64>()) {
        let (net, theta, mut rng) = instance(n, seed);
        let p = FamilyParams::new(net.clone(), theta).unwrap();
        let ord = VertexOrdering::new(random_perm(n, &mut rng)).unwrap();
        let b = BetaSampler::new(&p, &VertexOrdering::identity(n)).unwrap().sample(&mut rng);
        let m = PotentialMatrix::new(&net, b.beta()).unwrap();
        let f = lu_factorize(&m, &ord).unwrap();
        // Reorder the dense matrix into elimination order.
        let dense = m.dense();
        let permuted = DMatrix::from_fn(n, n, |r, c| dense[(ord.vertex(r), ord.vertex(c))]);
        for k in 0..n {
            let ratio = leading_minor(&permuted, k + 1) / leading_minor(&permuted, k);
            prop_assert!(((f.pivots()[k] - ratio) / ratio).abs() < 1e-8);
        }
        let ld = log_determinant(&f).unwrap();
        prop_assert!((ld - dense.determinant().ln()).abs() < 1e-9 * ld.abs().max(1.0));
    }

    #[test]
    fn green_column_ignores_ordering(n in 1usize..=6, seed in any::<u64>()) {
        let (net, theta, mut rng) = instance(n, seed);
        let p = FamilyParams::new(net.clone(), theta).unwrap();
        let b = BetaSampler::new(&p, &VertexOrdering::identity(n)).unwrap().sample(&mut rng);
        let m = PotentialMatrix::new(&net, b.beta()).unwrap();
        let i0 = rng.random_range(0..n);
        let g = green_column(&m, i0).unwrap();
        let inv = m.dense().try_inverse().unwrap();
        let ord = VertexOrdering::new(random_perm(n, &mut rng)).unwrap();
        let f = lu_factorize(&m, &ord).unwrap();
        let mut e = vec![0.0; n];
        e[i0] = 1.0;
        let g2 = f.solve(&e);
        for j in 0..n {
            prop_assert!(g[j] > 0.0);
            prop_assert!(((g[j] - inv[(j, i0)]) / g[j]).abs() < 1e-8);
            prop_assert!(((g[j] - g2[j]) / g[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn change_of_variables_round_trip(n in 1usize..=6, seed in any::<u64>()) {
        let (net, theta, mut rng) = instance(n, seed);
        let phi: Vec<f64> = theta.iter().map(|t| t.sqrt()).collect();
        let i0 = rng.random_range(0..n);
        let (b, u, g) = USampler::new(net, &phi, i0).unwrap().sample_with_beta(&mut rng);
        prop_assert_eq!(u.u()[i0], 0.0);
        let back = beta_from_u_gamma(&u, g);
        for (x, y) in back.beta().iter().zip(b.beta()) {
            prop_assert!(((x - y) / y).abs() < 1e-10);
        }
        prop_assert!(certify_inverse(&u, &back));
        let (u2, _) = phi_map(&back, i0).unwrap();
        for (x, y) in u2.u().iter().zip(u.u()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_path_probability_matches_direct(
        n in 2usize..=5,
        seed in any::<u64>(),
        steps in 0usize..=6,
    ) {
        let (net, _, mut rng) = instance(n, seed);
        let a: Vec<f64> = (0..net.edge_count()).map(|_| rng.random_range(0.2..4.0)).collect();
        let mut path = vec![rng.random_range(0..n)];
        for _ in 0..steps {
            let nb = net.neighbors(*path.last().unwrap());
            path.push(nb[rng.random_range(0..nb.len())].0);
        }
        let direct = errw_path_probability_direct(&net, &a, &path).unwrap();
        let w = EdgeInitialWeights::new(net, a).unwrap();
        let closed = path_probability_closed(&w, &path).unwrap();
        prop_assert!(((closed - direct) / direct).abs() < 1e-12);
    }
}
