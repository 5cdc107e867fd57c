//! Every example under `examples/` runs to completion and passes its own checks.

#[allow(dead_code)]
#[path = "../examples/critical_points_1d.rs"]
mod critical_points_1d;

#[allow(dead_code)]
#[path = "../examples/cumulant_table.rs"]
mod cumulant_table;

#[allow(dead_code)]
#[path = "../examples/em_gradient_equivalence.rs"]
mod em_gradient_equivalence;

#[allow(dead_code)]
#[path = "../examples/expansion_scan.rs"]
mod expansion_scan;

#[allow(dead_code)]
#[path = "../examples/finite_sample_em.rs"]
mod finite_sample_em;

#[allow(dead_code)]
#[path = "../examples/mra_orbit_identity.rs"]
mod mra_orbit_identity;

#[allow(dead_code)]
#[path = "../examples/snr_normalization.rs"]
mod snr_normalization;

#[allow(dead_code)]
#[path = "../examples/t1_decay.rs"]
mod t1_decay;

#[allow(dead_code)]
#[path = "../examples/two_mixture_landscape.rs"]
mod two_mixture_landscape;

#[test]
fn critical_points_1d_runs() {
    critical_points_1d::run_example().unwrap();
}

#[test]
fn cumulant_table_runs() {
    cumulant_table::run_example().unwrap();
}

#[test]
fn em_gradient_equivalence_runs() {
    em_gradient_equivalence::run_example().unwrap();
}

#[test]
fn expansion_scan_runs() {
    expansion_scan::run_example().unwrap();
}

#[test]
fn finite_sample_em_runs() {
    finite_sample_em::run_example().unwrap();
}

#[test]
fn mra_orbit_identity_runs() {
    mra_orbit_identity::run_example().unwrap();
}

#[test]
fn snr_normalization_runs() {
    snr_normalization::run_example().unwrap();
}

#[test]
fn t1_decay_runs() {
    t1_decay::run_example().unwrap();
}

#[test]
fn two_mixture_landscape_runs() {
    two_mixture_landscape::run_example().unwrap();
}
