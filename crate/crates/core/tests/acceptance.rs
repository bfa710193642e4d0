//! Acceptance suite: runs every criterion at its stated size and tolerance and
//! prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p reinforce-core --test acceptance [-- suite ...]`
//! Set `ACCEPTANCE_VERBOSE=1` to list every individual check.

use std::process::ExitCode;

use reinforce_core::verify::suites::{run_suite, Effort, SUITES};

const MASTER_SEED: u64 = 20_240_917;

const CRITERIA: [(&str, &str); 15] = [
    ("nu-mass", "mass of the potential law is 1 (quadrature, n = 2, 3)"),
    ("laplace", "Laplace transform: MC vs closed form"),
    ("marginals", "reciprocal inverse-Gaussian marginals (KS)"),
    ("independence", "independence at graph distance ≥ 2"),
    ("round-trip", "(u, γ) change of variables round trip"),
    ("determinant", "determinant identity"),
    ("jacobian", "Jacobian closed form vs finite differences"),
    ("q-mass", "mass of the VRJP mixing density is 1"),
    ("vrjp-u", "VRJP limit field vs exact sampler (KS)"),
    ("gamma", "γ ~ Gamma(1/2, φ²) and uncorrelated with u"),
    ("path-prob", "ERRW closed-form path probabilities"),
    ("magic-mass", "mass of the ERRW mixing measure is 1"),
    ("bridge", "gamma-mixed VRJP vs ERRW mixing measure"),
    ("time-rescale", "time-rescaled VRJP vs reweighted VRJP"),
    ("matrix-tree", "matrix-tree theorem vs enumeration"),
];

fn main() -> ExitCode {
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    assert_eq!(CRITERIA.map(|c| c.0), SUITES, "criteria table out of sync");

    let mut failed = 0;
    for (k, (name, what)) in CRITERIA.iter().enumerate() {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == name) {
            continue;
        }
        let report = run_suite(name, MASTER_SEED, Effort::Full).expect("known suite");
        let bad: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
        println!(
            "criterion {:>2} {:<13} {:<4}  {} ({} checks, {:.1}s)",
            k + 1,
            name,
            if report.pass { "PASS" } else { "FAIL" },
            what,
            report.checks.len(),
            report.elapsed_secs
        );
        if verbose {
            for c in &report.checks {
                println!("      {}", c.line());
            }
        } else {
            for c in &bad {
                println!("      {}", c.line());
            }
        }
        if !report.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all criteria passed");
        ExitCode::SUCCESS
    }
}
