//! Cross-checks between the assembled block systems, the dense QZ oracle,
//! and the shift-invert Arnoldi solver on desk-scale cavities.

use std::collections::BTreeMap;

use cavity_eig_core::assembly::{assemble, build_gevp, Formulation};
use cavity_eig_core::eigen::{
    dense_qz_oracle, dense_qz_oracle_deflated, factorize_with, solve_with_operator,
    shift_invert_arnoldi, ShiftInvertOp, SolverConfig, QZ_ORACLE_CAP,
};
use cavity_eig_core::fem::Medium;
use cavity_eig_core::mesh::generate_box_mesh;
use cavity_eig_core::Complex64;

fn vacuum() -> BTreeMap<i32, Medium> {
    let mut m = BTreeMap::new();
    m.insert(0, Medium::vacuum());
    m
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Constant-scalar direction of the magnetic-field block system (its known
/// common null vector).
fn hfield_null(split: usize, total: usize) -> Vec<Complex64> {
    let mut v = vec![c(0.0, 0.0); total];
    for z in v.iter_mut().skip(split) {
        *z = c(1.0, 0.0);
    }
    v
}

#[test]
fn cube_hfield_spectrum_approaches_analytic_value() {
    // 3x3x3 cells: coarse but already within ~15% of 2 pi^2
    let mesh = generate_box_mesh(1.0, 1.0, 1.0, 3, 3, 3).unwrap();
    let sys = assemble(&mesh, &vacuum(), Formulation::HField).unwrap();
    let gevp = build_gevp(&sys);
    let total = gevp.k.nrows();

    let cfg = SolverConfig {
        shift: c(19.0, 0.0),
        nev: 6,
        tol: 1e-10,
        ..SolverConfig::default()
    };
    let fact = factorize_with(&gevp.k, &gevp.m, cfg.shift, 1).unwrap();
    let op = ShiftInvertOp::new(&fact, &gevp.m).with_purge(hfield_null(gevp.split, total));
    let pairs = solve_with_operator(&op, &gevp.k, &gevp.m, &cfg, gevp.split).unwrap();

    let analytic = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    let lowest = pairs
        .iter()
        .map(|p| p.lambda.norm())
        .fold(f64::MAX, f64::min);
    let rel = (lowest - analytic).abs() / analytic;
    eprintln!("cube 3x3x3 HField lowest |lambda| = {lowest:.4} (analytic {analytic:.4}, rel {rel:.3})");
    assert!(rel < 0.2, "coarse-mesh eigenvalue too far off: {rel}");

    // every accepted pair satisfies its residual bound
    for p in &pairs {
        assert!(p.residual <= cfg.tol, "residual {}", p.residual);
    }

    // dummy variable: zeta entries all (nearly) the same
    for p in &pairs {
        let mean: Complex64 = p.zeta.iter().sum::<Complex64>() / p.zeta.len() as f64;
        let var: f64 = p
            .zeta
            .iter()
            .map(|z| (z - mean).norm_sqr())
            .sum::<f64>()
            / p.zeta.len() as f64;
        let xi_norm: f64 = p.xi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let stat = var.sqrt() / (mean.norm() + xi_norm);
        eprintln!("lambda = {:.4} dummy stat = {:.3e}", p.lambda, stat);
        assert!(stat < 1e-6, "zeta not constant: {stat}");
    }
}

#[test]
fn cube_hfield_arnoldi_matches_qz_oracle() {
    let mesh = generate_box_mesh(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
    let sys = assemble(&mesh, &vacuum(), Formulation::HField).unwrap();
    let gevp = build_gevp(&sys);
    let total = gevp.k.nrows();
    eprintln!("cube 2x2x2 HField GEVP dimension {total}");

    let cfg = SolverConfig {
        shift: c(21.0, 0.5),
        nev: 5,
        tol: 1e-10,
        ..SolverConfig::default()
    };
    let fact = factorize_with(&gevp.k, &gevp.m, cfg.shift, 1).unwrap();
    let op = ShiftInvertOp::new(&fact, &gevp.m).with_purge(hfield_null(gevp.split, total));
    let pairs = solve_with_operator(&op, &gevp.k, &gevp.m, &cfg, gevp.split).unwrap();
    // the magnetic-field pencil is singular along the constant-scalar
    // direction; deflate it so the oracle eigenvalues are well conditioned
    let oracle = dense_qz_oracle_deflated(
        &gevp.k,
        &gevp.m,
        &hfield_null(gevp.split, total),
        QZ_ORACLE_CAP,
    )
    .unwrap();

    for p in &pairs {
        let best = oracle
            .iter()
            .map(|o| (o.lambda - p.lambda).norm() / p.lambda.norm())
            .fold(f64::MAX, f64::min);
        eprintln!("arnoldi {:.6} matched to {:.3e}", p.lambda, best);
        assert!(best < 1e-8, "no oracle match for {}", p.lambda);
    }
}

#[test]
fn cube_efield_matches_hfield_eigenvalues() {
    let mesh = generate_box_mesh(1.0, 1.0, 1.0, 3, 3, 3).unwrap();

    let sys_e = assemble(&mesh, &vacuum(), Formulation::EField).unwrap();
    let gevp_e = build_gevp(&sys_e);
    let cfg = SolverConfig {
        shift: c(20.0, 0.0),
        nev: 3,
        tol: 1e-10,
        ..SolverConfig::default()
    };
    let pairs_e = shift_invert_arnoldi(&gevp_e.k, &gevp_e.m, &cfg).unwrap();

    let sys_h = assemble(&mesh, &vacuum(), Formulation::HField).unwrap();
    let gevp_h = build_gevp(&sys_h);
    let fact = factorize_with(&gevp_h.k, &gevp_h.m, cfg.shift, 1).unwrap();
    let op = ShiftInvertOp::new(&fact, &gevp_h.m)
        .with_purge(hfield_null(gevp_h.split, gevp_h.k.nrows()));
    let pairs_h = solve_with_operator(&op, &gevp_h.k, &gevp_h.m, &cfg, gevp_h.split).unwrap();

    let le = pairs_e[0].lambda;
    let lh = pairs_h[0].lambda;
    let rel = (le - lh).norm() / le.norm();
    eprintln!("E {:.5} vs H {:.5}: rel diff {:.3e}", le, lh, rel);
    assert!(rel < 0.05, "formulations disagree: {rel}");
}

#[test]
fn naive_formulation_has_dc_cluster_mixed_does_not() {
    let mesh = generate_box_mesh(1.0, 1.0, 1.0, 2, 2, 2).unwrap();

    let sys_n = assemble(&mesh, &vacuum(), Formulation::NaiveCurlCurl).unwrap();
    let gevp_n = build_gevp(&sys_n);
    let naive = dense_qz_oracle(&gevp_n.k, &gevp_n.m).unwrap();
    let naive_zero = naive.iter().filter(|p| p.lambda.norm() < 1e-6).count();
    eprintln!(
        "naive: {} eigenvalues, {} near zero",
        naive.len(),
        naive_zero
    );
    assert!(naive_zero >= 1, "expected a spurious dc cluster");

    let sys_e = assemble(&mesh, &vacuum(), Formulation::EField).unwrap();
    let gevp_e = build_gevp(&sys_e);
    let mixed = dense_qz_oracle(&gevp_e.k, &gevp_e.m).unwrap();
    let mixed_zero = mixed.iter().filter(|p| p.lambda.norm() < 1e-6).count();
    eprintln!("mixed E: {} eigenvalues, {} near zero", mixed.len(), mixed_zero);
    assert_eq!(mixed_zero, 0, "mixed formulation must be dc-free");
}
