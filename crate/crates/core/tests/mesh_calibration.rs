//! Exploration probes for picking mesh parameters that land near the
//! published mesh sizes. Ignored by default; run explicitly when tuning.

use cavity_eig_core::mesh::{generate_cylinder_mesh, generate_torus_mesh};

#[test]
#[ignore = "parameter exploration; run with --ignored"]
fn cylinder_parameter_scan() {
    for (naz, nr, nl) in [
        (7, 3, 9),
        (6, 4, 11),
        (6, 5, 13),
        (7, 5, 13),
        (6, 6, 15),
        (6, 7, 17),
        (6, 8, 19),
        (6, 9, 18),
        (7, 9, 20),
        (6, 10, 21),
    ] {
        let m = generate_cylinder_mesh(0.2, 0.5, naz, nr, nl).unwrap();
        let total_h = m.n_edges() + m.n_vertices();
        eprintln!(
            "cyl naz={naz} nr={nr} nl={nl}: h = {:.4}, V = {}, E = {}, T = {}, H-system = {}",
            m.h,
            m.n_vertices(),
            m.n_edges(),
            m.n_tets(),
            total_h
        );
    }
}

#[test]
#[ignore = "parameter exploration; run with --ignored"]
fn torus_parameter_scan() {
    for (nmaj, naz, nr) in [
        (24, 4, 2),
        (30, 5, 3),
        (36, 5, 3),
        (40, 6, 4),
        (48, 6, 4),
        (56, 6, 5),
        (61, 6, 5),
        (61, 6, 7),
        (67, 7, 6),
        (72, 6, 6),
    ] {
        let m = generate_torus_mesh(0.8, 0.4, nmaj, naz, nr).unwrap();
        let total_h = m.n_edges() + m.n_vertices();
        let bdry_e = m.n_boundary_edges();
        let bdry_v = m.n_boundary_vertices();
        let e_sys = (m.n_edges() - bdry_e) + (m.n_vertices() - bdry_v);
        eprintln!(
            "torus nmaj={nmaj} naz={naz} nr={nr}: h = {:.4}, V = {}, E = {}, T = {}, H-system = {}, E-system = {}",
            m.h,
            m.n_vertices(),
            m.n_edges(),
            m.n_tets(),
            total_h,
            e_sys
        );
    }
}
