//! Acceptance criteria and trend examples on the seeded synthetic corpus.
//!
//! Prints one PASS/FAIL line per check and exits non-zero if any fails.

mod criteria;
mod examples;
mod support;

use support::Runner;

fn main() {
    let mut r = Runner::default();
    println!("acceptance criteria");
    r.check("C1 GP oracle equivalence", criteria::c1_gp_oracle);
    r.check("C2 gradient check", criteria::c2_gradient);
    r.check("C3 integration accuracy", criteria::c3_integration);
    r.check("C4 scheme contrast", criteria::c4_scheme_contrast);
    r.check("C5 persistency ordering", criteria::c5_persistency_ordering);
    r.check("C6 shuffle robustness", criteria::c6_shuffle);
    r.check("C7 training window insensitivity", criteria::c7_tw);
    r.check("C8 simulation consistency", criteria::c8_simulation);
    r.check("C9 determinism", criteria::c9_determinism);
    r.check("C10 geodetic pathway", criteria::c10_spmd_pathway);
    println!("trend examples");
    r.check("three-regime convergence", examples::three_regime_convergence);
    r.check("frozen vs growing bank on held-out trips", examples::frozen_vs_growing);
    r.check("hybrid persistency per trip", examples::hybrid_dominance_per_trip);
    r.check("packet rate vs threshold per trip", examples::rate_monotone_per_trip);
    r.check("hybrid packet rate per trip", examples::hybrid_rate_per_trip);
    r.check("corpus packet rates", examples::corpus_rates);
    r.check("two shuffle seeds", examples::two_shuffle_seeds);
    r.check("build reference run", examples::build_reference_run);
    r.check("sweep output trends", examples::sweep_csvs);
    if r.failed.is_empty() {
        println!("all checks passed");
    } else {
        println!("{} failed: {}", r.failed.len(), r.failed.join(", "));
        std::process::exit(1);
    }
}
