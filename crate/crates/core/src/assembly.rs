//! Global assembly of the block eigensystem
//! `[[A, beta*B], [C, 0]] (xi, zeta)^T = Lambda [[D, 0], [0, 0]] (xi, zeta)^T`.
//!
//! Edge degrees of freedom carry the field, vertex degrees of freedom carry
//! the dummy scalar. The electric-field formulation eliminates boundary
//! edges and boundary vertices (essential conditions); the magnetic-field
//! formulation keeps everything (all conditions natural); the naive
//! curl-curl formulation eliminates boundary edges and has no scalar block
//! at all.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::fem::{local_matrices, FemError, Medium};
use crate::mesh::Mesh;
use crate::sparse::{CsMat, Triplets};

pub use crate::fem::Formulation;

const UNCONSTRAINED: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub enum AssemblyError {
    Element(FemError),
    MissingMedium { region: i32 },
    /// The constraint block is structurally empty (its norm vanishes), so
    /// the scaling constant is undefined.
    EmptyConstraintBlock,
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::Element(e) => write!(f, "element assembly failed: {e}"),
            AssemblyError::MissingMedium { region } => {
                write!(f, "no medium configured for region {region}")
            }
            AssemblyError::EmptyConstraintBlock => {
                write!(f, "constraint block is empty; the scaling constant is undefined")
            }
        }
    }
}

impl core::error::Error for AssemblyError {}

impl From<FemError> for AssemblyError {
    fn from(e: FemError) -> Self {
        AssemblyError::Element(e)
    }
}

/// Active/constrained partition of edges and vertices for a formulation.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub formulation: Formulation,
    /// Active edge ids, ascending.
    pub edge_dofs: Vec<u32>,
    /// Active vertex ids, ascending (empty for the naive formulation).
    pub scalar_dofs: Vec<u32>,
    pub constrained_edges: Vec<u32>,
    pub constrained_vertices: Vec<u32>,
    edge_index: Vec<u32>,
    vertex_index: Vec<u32>,
}

impl DofMap {
    /// Number of active edge (field) unknowns.
    pub fn m(&self) -> usize {
        self.edge_dofs.len()
    }

    /// Number of active scalar unknowns.
    pub fn n(&self) -> usize {
        self.scalar_dofs.len()
    }

    pub fn edge_dof(&self, edge: u32) -> Option<u32> {
        match self.edge_index[edge as usize] {
            UNCONSTRAINED => None,
            i => Some(i),
        }
    }

    pub fn vertex_dof(&self, vertex: u32) -> Option<u32> {
        match self.vertex_index[vertex as usize] {
            UNCONSTRAINED => None,
            i => Some(i),
        }
    }
}

/// Partitions mesh entities into active and constrained sets.
pub fn build_dofmap(mesh: &Mesh, formulation: Formulation) -> DofMap {
    let ne = mesh.n_edges();
    let nv = mesh.n_vertices();
    let mut edge_index = vec![UNCONSTRAINED; ne];
    let mut vertex_index = vec![UNCONSTRAINED; nv];
    let mut edge_dofs = Vec::new();
    let mut scalar_dofs = Vec::new();
    let mut constrained_edges = Vec::new();
    let mut constrained_vertices = Vec::new();

    for e in 0..ne {
        let constrained = formulation.constrains_boundary() && mesh.boundary_edge_flags[e];
        if constrained {
            constrained_edges.push(e as u32);
        } else {
            edge_index[e] = edge_dofs.len() as u32;
            edge_dofs.push(e as u32);
        }
    }
    if formulation.has_constraint() {
        for v in 0..nv {
            let constrained = formulation.constrains_boundary() && mesh.boundary_vertex_flags[v];
            if constrained {
                constrained_vertices.push(v as u32);
            } else {
                vertex_index[v] = scalar_dofs.len() as u32;
                scalar_dofs.push(v as u32);
            }
        }
    }
    DofMap {
        formulation,
        edge_dofs,
        scalar_dofs,
        constrained_edges,
        constrained_vertices,
        edge_index,
        vertex_index,
    }
}

/// Assembled sparse blocks of the mixed system, with the constraint
/// scaling already computed.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    /// Curl-curl block, `m x m`.
    pub a: CsMat,
    /// Gradient coupling block, `m x n`.
    pub b: CsMat,
    /// Divergence constraint block, `n x m`.
    pub c: CsMat,
    /// Mass block, `m x m`.
    pub d: CsMat,
    /// Constraint scaling: ratio of the infinity norms of `A` and `B`
    /// (the same rule provides alpha for the electric-field system).
    pub beta: f64,
    pub formulation: Formulation,
    pub dofmap: DofMap,
}

impl BlockSystem {
    pub fn m(&self) -> usize {
        self.dofmap.m()
    }

    pub fn n(&self) -> usize {
        self.dofmap.n()
    }

    /// Discrete divergence residual `||C xi||_2 / ||xi||_2`.
    pub fn constraint_residual(&self, xi: &[Complex64]) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        let cx = self.c.matvec_alloc(xi);
        let num: f64 = cx.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = xi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        num / den.max(f64::MIN_POSITIVE)
    }
}

/// Ratio of maximum absolute row sums, `rho(A) / rho(B)`.
pub fn compute_beta(a: &CsMat, b: &CsMat) -> Result<f64, AssemblyError> {
    let nb = b.inf_norm();
    if nb == 0.0 {
        return Err(AssemblyError::EmptyConstraintBlock);
    }
    Ok(a.inf_norm() / nb)
}

/// Assembles the block system for a mesh and per-region media.
///
/// Entries are signed sums of element matrices scattered through の edge
/// incidence; duplicate contributions are reduced in a canonical order so
/// the result does not depend on element visitation order.
pub fn assemble(
    mesh: &Mesh,
    media: &BTreeMap<i32, Medium>,
    formulation: Formulation,
) -> Result<BlockSystem, AssemblyError> {
    let dofmap = build_dofmap(mesh, formulation);
    let m = dofmap.m();
    let n = dofmap.n();

    let mut ta = Triplets::with_capacity(m, m, 36 * mesh.n_tets());
    let mut td = Triplets::with_capacity(m, m, 36 * mesh.n_tets());
    let mut tb = Triplets::new(m, n);
    let mut tc = Triplets::new(n, m);

    for (t, tet) in mesh.tets.iter().enumerate() {
        let medium = media
            .get(&tet.region)
            .ok_or(AssemblyError::MissingMedium { region: tet.region })?;
        let coords = mesh.tet_coords(t);
        let em = local_matrices(&coords, medium, formulation)?;
        let incidence = &mesh.tet_edges[t];

        for (r, &(er, sr)) in incidence.iter().enumerate() {
            let Some(row) = dofmap.edge_dof(er) else {
                continue;
            };
            let srf = sr as f64;
            for (cc, &(ec, sc)) in incidence.iter().enumerate() {
                let Some(col) = dofmap.edge_dof(ec) else {
                    continue;
                };
                let w = srf * sc as f64;
                ta.push(row as usize, col as usize, em.a[r][cc] * w);
                td.push(row as usize, col as usize, em.d[r][cc] * w);
            }
            if formulation.has_constraint() {
                for (node, &gv) in tet.vertices.iter().enumerate() {
                    if let Some(vcol) = dofmap.vertex_dof(gv) {
                        tb.push(row as usize, vcol as usize, em.b[r][node] * srf);
                    }
                }
            }
        }
        if formulation.has_constraint() {
            for (node, &gv) in tet.vertices.iter().enumerate() {
                let Some(vrow) = dofmap.vertex_dof(gv) else {
                    continue;
                };
                for (cc, &(ec, sc)) in incidence.iter().enumerate() {
                    if let Some(col) = dofmap.edge_dof(ec) {
                        tc.push(vrow as usize, col as usize, em.c[node][cc] * sc as f64);
                    }
                }
            }
        }
    }

    let a = ta.to_csr();
    let b = tb.to_csr();
    let c = tc.to_csr();
    let d = td.to_csr();
    // beta is meaningless without a scalar block (naive formulation, or a
    // mesh so coarse that every vertex is constrained)
    let beta = if formulation.has_constraint() && n > 0 {
        compute_beta(&a, &b)?
    } else {
        1.0
    };
    Ok(BlockSystem {
        a,
        b,
        c,
        d,
        beta,
        formulation,
        dofmap,
    })
}

/// The generalized eigenvalue problem `K x = Lambda M x` in block form.
#[derive(Debug, Clone)]
pub struct Gevp {
    /// `[[A, beta*B], [C, 0]]` (just `A` for the naive formulation).
    pub k: CsMat,
    /// `[[D, 0], [0, 0]]` (just `D` for the naive formulation).
    pub m: CsMat,
    /// Field/scalar partition point: the first `split` unknowns are edges.
    pub split: usize,
}

/// Stacks the blocks into the sparse pencil.
pub fn build_gevp(sys: &BlockSystem) -> Gevp {
    let m = sys.m();
    let n = sys.n();
    let total = m + n;
    let mut tk = Triplets::with_capacity(total, total, sys.a.nnz() + sys.b.nnz() + sys.c.nnz());
    for i in 0..m {
        let (cols, vals) = sys.a.row(i);
        for (c, v) in cols.iter().zip(vals) {
            tk.push(i, *c as usize, *v);
        }
        let (cols, vals) = sys.b.row(i);
        for (c, v) in cols.iter().zip(vals) {
            tk.push(i, m + *c as usize, v * sys.beta);
        }
    }
    for i in 0..n {
        let (cols, vals) = sys.c.row(i);
        for (c, v) in cols.iter().zip(vals) {
            tk.push(m + i, *c as usize, *v);
        }
    }
    let mut tm = Triplets::with_capacity(total, total, sys.d.nnz());
    for i in 0..m {
        let (cols, vals) = sys.d.row(i);
        for (c, v) in cols.iter().zip(vals) {
            tm.push(i, *c as usize, *v);
        }
    }
    Gevp {
        k: tk.to_csr(),
        m: tm.to_csr(),
        split: m,
    }
}

/// Spatial positions of the stacked unknowns: edge midpoints for the field
/// block, vertex positions for the scalar block. Drives the geometric
/// fill-reducing ordering of the shifted factorization.
pub fn gevp_coordinates(mesh: &Mesh, dofmap: &DofMap) -> Vec<[f64; 3]> {
    let mut coords = Vec::with_capacity(dofmap.m() + dofmap.n());
    for &e in &dofmap.edge_dofs {
        let [a, b] = mesh.edges[e as usize].endpoints;
        let pa = mesh.vertices[a as usize].pos;
        let pb = mesh.vertices[b as usize].pos;
        coords.push([
            0.5 * (pa[0] + pb[0]),
            0.5 * (pa[1] + pb[1]),
            0.5 * (pa[2] + pb[2]),
        ]);
    }
    for &v in &dofmap.scalar_dofs {
        coords.push(mesh.vertices[v as usize].pos);
    }
    coords
}

/// Discrete gradient on the active DOFs: column `v` holds the edge
/// coefficients of `grad` of the nodal function at vertex `v` (+1 at the
/// high endpoint, -1 at the low endpoint, constrained entities dropped).
pub fn discrete_gradient(mesh: &Mesh, dofmap: &DofMap) -> CsMat {
    let mut t = Triplets::new(dofmap.m(), dofmap.n().max(mesh.n_vertices()));
    for (e, edge) in mesh.edges.iter().enumerate() {
        let Some(row) = dofmap.edge_dof(e as u32) else {
            continue;
        };
        let [lo, hi] = edge.endpoints;
        if let Some(col) = dofmap.vertex_dof(hi) {
            t.push(row as usize, col as usize, Complex64::new(1.0, 0.0));
        }
        if let Some(col) = dofmap.vertex_dof(lo) {
            t.push(row as usize, col as usize, Complex64::new(-1.0, 0.0));
        }
    }
    t.to_csr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::reference_media;
    use crate::mesh::{generate_box_mesh, generate_torus_mesh};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn vacuum_media() -> BTreeMap<i32, Medium> {
        let mut m = BTreeMap::new();
        m.insert(0, Medium::vacuum());
        m
    }

    fn cylinder_media() -> BTreeMap<i32, Medium> {
        let mut m = BTreeMap::new();
        m.insert(0, reference_media::cylinder());
        m
    }

    #[test]
    fn cube_dof_counts_by_formulation() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        let h = build_dofmap(&mesh, Formulation::HField);
        assert_eq!(h.m(), 19);
        assert_eq!(h.n(), 8);
        assert!(h.constrained_edges.is_empty());
        assert!(h.constrained_vertices.is_empty());

        // only the body diagonal is interior on the single-cell cube
        let e = build_dofmap(&mesh, Formulation::EField);
        assert_eq!(e.m(), 1);
        assert_eq!(e.n(), 0);
        assert_eq!(e.constrained_edges.len(), 18);
        assert_eq!(e.constrained_vertices.len(), 8);

        let nv = build_dofmap(&mesh, Formulation::NaiveCurlCurl);
        assert_eq!(nv.m(), 1);
        assert_eq!(nv.n(), 0);
    }

    #[test]
    fn torus_hfield_has_no_constraints() {
        let mesh = generate_torus_mesh(0.8, 0.4, 6, 3, 1).unwrap();
        let d = build_dofmap(&mesh, Formulation::HField);
        assert_eq!(d.m(), mesh.n_edges());
        assert_eq!(d.n(), mesh.n_vertices());
    }

    #[test]
    fn identity_tensors_make_c_equal_to_b_transpose() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
        let sys = assemble(&mesh, &vacuum_media(), Formulation::HField).unwrap();
        assert_eq!(sys.c, sys.b.transpose());
    }

    #[test]
    fn lossless_media_yield_hermitian_blocks() {
        let mesh = generate_box_mesh(1.0, 0.7, 0.9, 2, 2, 2).unwrap();
        let mut media = BTreeMap::new();
        media.insert(0, Medium::isotropic(c(3.0, 0.0), c(1.5, 0.0)));
        let sys = assemble(&mesh, &media, Formulation::HField).unwrap();
        for (mat, scale) in [(&sys.a, sys.a.inf_norm()), (&sys.d, sys.d.inf_norm())] {
            let mt = mat.transpose();
            for i in 0..mat.nrows() {
                let (cols, vals) = mat.row(i);
                for (cc, v) in cols.iter().zip(vals) {
                    let vt = mt.get(i, *cc as usize).conj();
                    assert!((v - vt).norm() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn curl_block_annihilates_discrete_gradients() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
        for formulation in [Formulation::EField, Formulation::HField] {
            let sys = assemble(&mesh, &cylinder_media(), formulation).unwrap();
            let g = discrete_gradient(&mesh, &sys.dofmap);
            // random nodal coefficients
            let mut state = 99u64;
            let mut u = vec![c(0.0, 0.0); g.ncols()];
            for z in u.iter_mut() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                *z = c(
                    (state >> 12) as f64 / (1u64 << 52) as f64 - 0.5,
                    ((state >> 20) & 0xffff) as f64 / 65536.0 - 0.5,
                );
            }
            let ge = g.matvec_alloc(&u);
            let age = sys.a.matvec_alloc(&ge);
            let num: f64 = age.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let scale = sys.a.inf_norm() * ge.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            assert!(
                num <= 1e-12 * scale.max(1e-300),
                "gradient not annihilated: {num:e} vs scale {scale:e}"
            );
        }
    }

    #[test]
    fn beta_is_the_norm_ratio() {
        // rho(A) = 10, rho(B) = 2 -> beta = 5
        let mut ta = Triplets::new(2, 2);
        ta.push(0, 0, c(6.0, 0.0));
        ta.push(0, 1, c(-4.0, 0.0));
        ta.push(1, 1, c(3.0, 0.0));
        let a = ta.to_csr();
        let mut tb = Triplets::new(2, 1);
        tb.push(0, 0, c(0.0, 2.0));
        let b = tb.to_csr();
        assert!((compute_beta(&a, &b).unwrap() - 5.0).abs() < 1e-15);

        // scaling A by 3 scales beta by 3
        let mut ta3 = Triplets::new(2, 2);
        ta3.push(0, 0, c(18.0, 0.0));
        ta3.push(0, 1, c(-12.0, 0.0));
        ta3.push(1, 1, c(9.0, 0.0));
        let a3 = ta3.to_csr();
        assert!((compute_beta(&a3, &b).unwrap() - 15.0).abs() < 1e-14);

        let empty = Triplets::new(2, 1).to_csr();
        assert!(matches!(
            compute_beta(&a, &empty),
            Err(AssemblyError::EmptyConstraintBlock)
        ));
    }

    #[test]
    fn assembly_scales_linearly_with_permittivity() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
        let scale = c(2.5, 0.0);
        let mut m1 = BTreeMap::new();
        m1.insert(0, Medium::isotropic(c(1.0, 0.0), c(1.0, 0.0)));
        let mut m2 = BTreeMap::new();
        m2.insert(0, Medium::isotropic(scale, c(1.0, 0.0)));

        // electric-field: D and C scale with eps, A unchanged
        let e1 = assemble(&mesh, &m1, Formulation::EField).unwrap();
        let e2 = assemble(&mesh, &m2, Formulation::EField).unwrap();
        assert_eq!(e1.a, e2.a);
        for i in 0..e1.d.nrows() {
            let (cols, vals) = e1.d.row(i);
            for (cc, v) in cols.iter().zip(vals) {
                let w = e2.d.get(i, *cc as usize);
                assert!((w - scale * v).norm() < 1e-13 * v.norm().max(1e-30));
            }
        }
        // magnetic-field: A scales with 1/eps
        let h1 = assemble(&mesh, &m1, Formulation::HField).unwrap();
        let h2 = assemble(&mesh, &m2, Formulation::HField).unwrap();
        for i in 0..h1.a.nrows() {
            let (cols, vals) = h1.a.row(i);
            for (cc, v) in cols.iter().zip(vals) {
                let w = h2.a.get(i, *cc as usize);
                assert!((scale * w - v).norm() < 1e-12 * v.norm().max(1e-30));
            }
        }
    }

    #[test]
    fn assembly_is_element_order_independent() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
        let sys1 = assemble(&mesh, &cylinder_media(), Formulation::HField).unwrap();

        // rotate the tet list; edge ids are order independent by construction
        let mut permuted = mesh.clone();
        permuted.tets.rotate_left(7);
        let permuted = crate::mesh::classify_boundary(permuted).unwrap();
        let sys2 = assemble(&permuted, &cylinder_media(), Formulation::HField).unwrap();
        assert_eq!(sys1.a, sys2.a);
        assert_eq!(sys1.b, sys2.b);
        assert_eq!(sys1.c, sys2.c);
        assert_eq!(sys1.d, sys2.d);
        assert_eq!(sys1.beta, sys2.beta);
    }

    #[test]
    fn missing_medium_reported() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        let mut media = BTreeMap::new();
        media.insert(5, Medium::vacuum());
        match assemble(&mesh, &media, Formulation::HField) {
            Err(AssemblyError::MissingMedium { region: 0 }) => {}
            other => panic!("expected missing medium, got ok={}", other.is_ok()),
        }
    }

    #[test]
    fn gevp_block_layout() {
        let mesh = generate_box_mesh(1.0, 1.0, 1.0, 1, 1, 1).unwrap();

        let sys_e = assemble(&mesh, &vacuum_media(), Formulation::EField).unwrap();
        let g_e = build_gevp(&sys_e);
        assert_eq!(g_e.k.nrows(), 1);
        assert_eq!(g_e.m.nrows(), 1);

        let sys_h = assemble(&mesh, &vacuum_media(), Formulation::HField).unwrap();
        let g_h = build_gevp(&sys_h);
        assert_eq!(g_h.k.nrows(), 27);
        assert_eq!(g_h.m.nonzero_rows(), 19);
        assert_eq!(g_h.split, 19);
        // spot-check the beta-scaled coupling block
        let (cols, vals) = g_h.k.row(0);
        for (cc, v) in cols.iter().zip(vals) {
            if *cc as usize >= 19 {
                let raw = sys_h.b.get(0, *cc as usize - 19);
                assert!((v - raw * sys_h.beta).norm() < 1e-15 * v.norm().max(1e-30));
            }
        }

        let sys_n = assemble(&mesh, &vacuum_media(), Formulation::NaiveCurlCurl).unwrap();
        let g_n = build_gevp(&sys_n);
        assert_eq!(g_n.k.nrows(), sys_n.m());
        assert_eq!(g_n.k, sys_n.a);
        assert_eq!(g_n.m, sys_n.d);
    }
}
