//! Matrix, field and sweep-table writers.

use std::fmt::Write as _;

use anyhow::{bail, Result};

use cavity_eig_core::analysis::ConvergenceRow;
use cavity_eig_core::assembly::DofMap;
use cavity_eig_core::fem::edge_basis;
use cavity_eig_core::mesh::Mesh;
use cavity_eig_core::sparse::CsMat;
use cavity_eig_core::Complex64;

/// MatrixMarket coordinate format, complex general, 1-based indices.
pub fn matrix_market(a: &CsMat, comment: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "%%MatrixMarket matrix coordinate complex general");
    let _ = writeln!(s, "% {comment}");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (c, v) in cols.iter().zip(vals) {
            let _ = writeln!(s, "{} {} {:.16e} {:.16e}", i + 1, *c as usize + 1, v.re, v.im);
        }
    }
    s
}

/// One exported mode: per-tet field vectors at centroids plus the scalar
/// part at vertices, expanded from active DOFs to full entity sets.
pub struct VtkMode {
    pub label: String,
    /// Field vector at each tet centroid.
    pub cell_field: Vec<[Complex64; 3]>,
    /// Scalar at each vertex (zero where constrained or absent).
    pub point_scalar: Vec<Complex64>,
}

/// Interpolates the edge-coefficient vector at every tet centroid and
/// scatters the scalar coefficients onto vertices.
pub fn reconstruct_mode(
    mesh: &Mesh,
    dofmap: &DofMap,
    xi: &[Complex64],
    zeta: &[Complex64],
    label: String,
) -> Result<VtkMode> {
    if xi.len() != dofmap.m() || zeta.len() != dofmap.n() {
        bail!(
            "mode has {} field + {} scalar coefficients but the mesh expects {} + {}",
            xi.len(),
            zeta.len(),
            dofmap.m(),
            dofmap.n()
        );
    }
    let centroid = [0.25f64; 4];
    let mut cell_field = Vec::with_capacity(mesh.n_tets());
    for t in 0..mesh.n_tets() {
        let coords = mesh.tet_coords(t);
        let mut acc = [Complex64::new(0.0, 0.0); 3];
        for (k, &(edge, sign)) in mesh.tet_edges[t].iter().enumerate() {
            let Some(dof) = dofmap.edge_dof(edge) else {
                continue;
            };
            let w = edge_basis(&coords, k, sign as f64, &centroid)?;
            let c = xi[dof as usize];
            for dim in 0..3 {
                acc[dim] += c * w[dim];
            }
        }
        cell_field.push(acc);
    }
    let mut point_scalar = vec![Complex64::new(0.0, 0.0); mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        if let Some(dof) = dofmap.vertex_dof(v as u32) {
            point_scalar[v] = zeta[dof as usize];
        }
    }
    Ok(VtkMode {
        label,
        cell_field,
        point_scalar,
    })
}

/// Legacy ASCII VTK unstructured grid with the given modes attached.
pub fn vtk_legacy(mesh: &Mesh, modes: &[VtkMode]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "cavity-eig modes");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:.9e} {:.9e} {:.9e}", v.pos[0], v.pos[1], v.pos[2]);
    }
    let nt = mesh.n_tets();
    let _ = writeln!(s, "CELLS {} {}", nt, 5 * nt);
    for t in &mesh.tets {
        let v = t.vertices;
        let _ = writeln!(s, "4 {} {} {} {}", v[0], v[1], v[2], v[3]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "10");
    }
    if !modes.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nt}");
        for mode in modes {
            for (suffix, pick) in [("re", 0usize), ("im", 1usize)] {
                let _ = writeln!(s, "VECTORS {}_{suffix} double", mode.label);
                for f in &mode.cell_field {
                    let comp = |z: Complex64| if pick == 0 { z.re } else { z.im };
                    let _ = writeln!(
                        s,
                        "{:.9e} {:.9e} {:.9e}",
                        comp(f[0]),
                        comp(f[1]),
                        comp(f[2])
                    );
                }
            }
        }
        let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
        for mode in modes {
            for (suffix, pick) in [("re", 0usize), ("im", 1usize)] {
                let _ = writeln!(s, "SCALARS {}_zeta_{suffix} double 1", mode.label);
                let _ = writeln!(s, "LOOKUP_TABLE default");
                for z in &mode.point_scalar {
                    let val = if pick == 0 { z.re } else { z.im };
                    let _ = writeln!(s, "{val:.9e}");
                }
            }
        }
    }
    s
}

/// Sweep table: one block per refinement level plus the fitted order.
pub fn sweep_table(
    formulation: &str,
    rows: &[ConvergenceRow],
    seconds: &[f64],
    observed_order: Option<f64>,
    reference: Option<Complex64>,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# cavity-eig sweep v1");
    let _ = writeln!(s, "formulation = {formulation}");
    if let Some(r) = reference {
        let _ = writeln!(s, "reference = {:.16e} {:.16e}", r.re, r.im);
    }
    let _ = writeln!(s, "levels = {}", rows.len());
    for (i, row) in rows.iter().enumerate() {
        let _ = writeln!(s, "[level {i}]");
        let _ = writeln!(s, "h = {:.16e}", row.h);
        let _ = writeln!(s, "lambda = {:.16e} {:.16e}", row.lambda.re, row.lambda.im);
        let _ = writeln!(s, "unknowns = {}", row.unknowns);
        if let Some(err) = row.reference_error {
            let _ = writeln!(s, "reference_error = {err:.16e}");
        }
        let _ = writeln!(s, "solve_seconds = {:.16e}", seconds.get(i).copied().unwrap_or(0.0));
    }
    let _ = writeln!(s, "[footer]");
    match observed_order {
        Some(p) => {
            let _ = writeln!(s, "observed_order = {p:.16e}");
        }
        None => {
            let _ = writeln!(s, "observed_order = none");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use cavity_eig_core::assembly::{build_dofmap, Formulation};
    use cavity_eig_core::mesh::generate_box_mesh;
    use cavity_eig_core::sparse::Triplets;

    #[test]
    fn matrix_market_header_and_entries() {
        let mut t = Triplets::new(2, 3);
        t.push(0, 0, Complex64::new(1.0, -2.0));
        t.push(1, 2, Complex64::new(0.5, 0.0));
        let a = t.to_csr();
        let text = matrix_market(&a, "test");
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate complex general"
        );
        assert!(text.contains("2 3 2"));
        assert!(text.contains("1 1 1.0000000000000000e0 -2.0000000000000000e0"));
        assert!(text.contains("2 3 5.0000000000000000e-1 0.0000000000000000e0"));
    }

    #[test]
    fn vtk_header_and_sizes() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        let dofmap = build_dofmap(&mesh, Formulation::HField);
        let xi = vec![Complex64::new(1.0, 0.0); dofmap.m()];
        let zeta = vec![Complex64::new(0.5, 0.0); dofmap.n()];
        let mode = reconstruct_mode(&mesh, &dofmap, &xi, &zeta, "mode0".into()).unwrap();
        let text = vtk_legacy(&mesh, &[mode]);
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("POINTS 8 double"));
        assert!(text.contains("CELLS 6 30"));
        assert!(text.contains("VECTORS mode0_re double"));
        assert!(text.contains("SCALARS mode0_zeta_re double 1"));
    }

    #[test]
    fn vtk_empty_mode_list_is_valid() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        let text = vtk_legacy(&mesh, &[]);
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(!text.contains("CELL_DATA"));
    }

    #[test]
    fn reconstruct_rejects_wrong_dof_count() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        let dofmap = build_dofmap(&mesh, Formulation::HField);
        let xi = vec![Complex64::new(1.0, 0.0); 3];
        let zeta = vec![];
        assert!(reconstruct_mode(&mesh, &dofmap, &xi, &zeta, "m".into()).is_err());
    }
}
