//! Acceptance suite: runs every verification criterion with the shipped
//! default seeds and prints one pass/fail line per criterion.

use std::time::Instant;

use levysync_core::verify;

#[test]
fn acceptance_criteria() {
    let mut failed = Vec::new();
    let total = Instant::now();
    let outcomes = {
        // run criteria one at a time so each gets its own timing line
        let mut list = Vec::new();
        let t = Instant::now();
        list.push((verify::criterion_eigenvalues().unwrap(), t.elapsed()));
        let t = Instant::now();
        list.push((
            verify::criterion_two_solution_decay(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        let t = Instant::now();
        let sweep = verify::run_default_sweep(verify::DEFAULT_SEED).unwrap();
        let sweep_elapsed = t.elapsed();
        list.push((verify::criterion_component_spread(&sweep), sweep_elapsed));
        let t = Instant::now();
        list.push((verify::criterion_averaged_convergence(&sweep), t.elapsed()));
        let t = Instant::now();
        list.push((
            verify::criterion_pullback_attractor(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        let t = Instant::now();
        list.push((
            verify::criterion_stationary_orbit(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        let t = Instant::now();
        list.push((
            verify::criterion_averaged_attractor(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        let t = Instant::now();
        list.push((
            verify::criterion_weighted_integrals(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        let t = Instant::now();
        list.push((
            verify::criterion_transform_consistency(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        let t = Instant::now();
        list.push((
            verify::criterion_comparison_inequality(verify::DEFAULT_SEED).unwrap(),
            t.elapsed(),
        ));
        list
    };
    for (outcome, elapsed) in &outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {:2}: {} ({:.2}s) — {}",
            outcome.id,
            outcome.name,
            elapsed.as_secs_f64(),
            outcome.details
        );
        if !outcome.passed {
            failed.push(outcome.id);
        }
    }
    println!(
        "acceptance total: {:.2}s, {}/{} passed",
        total.elapsed().as_secs_f64(),
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
