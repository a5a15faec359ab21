//! Element-level kernels: lowest-order (Whitney) edge basis functions,
//! linear nodal functions, and the local matrices of the mixed
//! discretization with complex anisotropic material tensors.
//!
//! Test and trial functions are real-valued, so the sesquilinear forms
//! reduce to plain integrals and all conjugation questions disappear at
//! this level; material tensors enter unconjugated.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Float;

use crate::mesh::{signed_volume, LOCAL_EDGES};

pub type Tensor3 = [[Complex64; 3]; 3];

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Complex material pair of a region: relative permittivity and
/// permeability tensors. Neither needs to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    pub eps_r: Tensor3,
    pub mu_r: Tensor3,
}

impl Medium {
    pub fn isotropic(eps_r: Complex64, mu_r: Complex64) -> Self {
        Medium {
            eps_r: scalar_tensor(eps_r),
            mu_r: scalar_tensor(mu_r),
        }
    }

    pub fn vacuum() -> Self {
        Medium::isotropic(C1, C1)
    }
}

pub fn scalar_tensor(v: Complex64) -> Tensor3 {
    [[v, C0, C0], [C0, v, C0], [C0, C0, v]]
}

pub fn identity_tensor() -> Tensor3 {
    scalar_tensor(C1)
}

/// Which eigenvalue system is being discretized.
///
/// `EField` solves for the electric field with essential boundary
/// conditions; `HField` solves for the magnetic field with all-natural
/// boundary conditions; `NaiveCurlCurl` is the electric-field curl-curl
/// system without the divergence constraint, kept to demonstrate the
/// spurious dc modes it admits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    EField,
    HField,
    NaiveCurlCurl,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::EField => "e",
            Formulation::HField => "h",
            Formulation::NaiveCurlCurl => "naive",
        }
    }

    /// Whether the constraint block (and scalar space) is present.
    pub fn has_constraint(self) -> bool {
        !matches!(self, Formulation::NaiveCurlCurl)
    }

    /// Whether essential boundary conditions are imposed on the field.
    pub fn constrains_boundary(self) -> bool {
        !matches!(self, Formulation::HField)
    }
}

#[derive(Debug, Clone)]
pub enum FemError {
    DegenerateTet { volume: f64 },
    SingularTensor { det_abs: f64, tolerance: f64 },
    MissingMedium { region: i32 },
    Message(String),
}

impl fmt::Display for FemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FemError::DegenerateTet { volume } => {
                write!(f, "degenerate tetrahedron (volume {volume:.3e})")
            }
            FemError::SingularTensor { det_abs, tolerance } => write!(
                f,
                "material tensor is numerically singular (|det| {det_abs:.3e} < {tolerance:.3e})"
            ),
            FemError::MissingMedium { region } => {
                write!(f, "no medium configured for region {region}")
            }
            FemError::Message(m) => write!(f, "{m}"),
        }
    }
}

impl core::error::Error for FemError {}

/// Quadrature rule on the reference tetrahedron in barycentric form.
/// Weights are fractions of the element volume and sum to one.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Four-point rule, exact for polynomials up to degree 2.
    pub fn degree2() -> Self {
        let a = (5.0 + 3.0 * 5.0f64.sqrt()) / 20.0;
        let b = (5.0 - 5.0f64.sqrt()) / 20.0;
        let mut points = Vec::with_capacity(4);
        for i in 0..4 {
            let mut p = [b; 4];
            p[i] = a;
            points.push(p);
        }
        QuadratureRule {
            points,
            weights: alloc::vec![0.25; 4],
        }
    }
}

/// Frobenius norm of a complex 3x3 tensor.
fn tensor_norm(t: &Tensor3) -> f64 {
    let mut s = 0.0;
    for row in t {
        for v in row {
            s += v.norm_sqr();
        }
    }
    s.sqrt()
}

fn tensor_det(t: &Tensor3) -> Complex64 {
    t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1])
        - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
        + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])
}

/// Inverts a complex 3x3 tensor by the adjugate. Tensors with
/// `|det| < 1e-12 * ||t||^3` are reported singular.
pub fn invert_tensor(t: &Tensor3) -> Result<Tensor3, FemError> {
    let det = tensor_det(t);
    let scale = tensor_norm(t);
    let tolerance = 1e-12 * scale * scale * scale;
    if det.norm() <= tolerance {
        return Err(FemError::SingularTensor {
            det_abs: det.norm(),
            tolerance,
        });
    }
    let inv_det = det.finv();
    let cof = |r1: usize, c1: usize, r2: usize, c2: usize| t[r1][c1] * t[r2][c2] - t[r1][c2] * t[r2][c1];
    Ok([
        [
            cof(1, 1, 2, 2) * inv_det,
            -cof(0, 1, 2, 2) * inv_det,
            cof(0, 1, 1, 2) * inv_det,
        ],
        [
            -cof(1, 0, 2, 2) * inv_det,
            cof(0, 0, 2, 2) * inv_det,
            -cof(0, 0, 1, 2) * inv_det,
        ],
        [
            cof(1, 0, 2, 1) * inv_det,
            -cof(0, 0, 2, 1) * inv_det,
            cof(0, 0, 1, 1) * inv_det,
        ],
    ])
}

pub fn tensor_matvec(t: &Tensor3, v: [Complex64; 3]) -> [Complex64; 3] {
    let mut out = [C0; 3];
    for (i, row) in t.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

fn real3_to_c(v: [f64; 3]) -> [Complex64; 3] {
    [
        Complex64::new(v[0], 0.0),
        Complex64::new(v[1], 0.0),
        Complex64::new(v[2], 0.0),
    ]
}

fn dot_rc(a: [f64; 3], b: [Complex64; 3]) -> Complex64 {
    b[0] * a[0] + b[1] * a[1] + b[2] * a[2]
}

/// Constant gradients of the four barycentric coordinates, plus the volume.
pub fn barycentric_gradients(coords: &[[f64; 3]; 4]) -> Result<([[f64; 3]; 4], f64), FemError> {
    let vol = signed_volume(coords);
    let mut max_edge = 0.0f64;
    for (a, b) in LOCAL_EDGES {
        let d = [
            coords[a][0] - coords[b][0],
            coords[a][1] - coords[b][1],
            coords[a][2] - coords[b][2],
        ];
        max_edge = max_edge.max((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
    }
    if vol.abs() <= 1e-14 * max_edge * max_edge * max_edge {
        return Err(FemError::DegenerateTet { volume: vol });
    }
    // grad(lambda_i) = (opposite face normal) / (3 * volume); computed from
    // the cross product of the two face edges with a parity sign.
    let mut grads = [[0.0f64; 3]; 4];
    for i in 0..4 {
        let others: [usize; 3] = match i {
            0 => [1, 3, 2],
            1 => [0, 2, 3],
            2 => [0, 3, 1],
            _ => [0, 1, 2],
        };
        let p0 = coords[others[0]];
        let e1 = [
            coords[others[1]][0] - p0[0],
            coords[others[1]][1] - p0[1],
            coords[others[1]][2] - p0[2],
        ];
        let e2 = [
            coords[others[2]][0] - p0[0],
            coords[others[2]][1] - p0[1],
            coords[others[2]][2] - p0[2],
        ];
        let n = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        grads[i] = [n[0] / (6.0 * vol), n[1] / (6.0 * vol), n[2] / (6.0 * vol)];
    }
    Ok((grads, vol))
}

/// Whitney edge function of local edge `k` at a barycentric point, with the
/// orientation `sign` applied: `sign * (l_i grad l_j - l_j grad l_i)`.
pub fn edge_basis(
    coords: &[[f64; 3]; 4],
    edge_local: usize,
    sign: f64,
    bary: &[f64; 4],
) -> Result<[f64; 3], FemError> {
    let (grads, _) = barycentric_gradients(coords)?;
    let (i, j) = LOCAL_EDGES[edge_local];
    Ok([
        sign * (bary[i] * grads[j][0] - bary[j] * grads[i][0]),
        sign * (bary[i] * grads[j][1] - bary[j] * grads[i][1]),
        sign * (bary[i] * grads[j][2] - bary[j] * grads[i][2]),
    ])
}

/// Curl of the (unsigned) Whitney function of local edge `k`:
/// the constant `2 grad l_i x grad l_j`.
pub fn edge_curl(grads: &[[f64; 3]; 4], edge_local: usize) -> [f64; 3] {
    let (i, j) = LOCAL_EDGES[edge_local];
    let a = grads[i];
    let b = grads[j];
    [
        2.0 * (a[1] * b[2] - a[2] * b[1]),
        2.0 * (a[2] * b[0] - a[0] * b[2]),
        2.0 * (a[0] * b[1] - a[1] * b[0]),
    ]
}

/// Local matrices of one tetrahedron, unsigned (orientation signs are
/// applied when scattering into the global system).
///
/// `a`: curl-curl stiffness (6x6), `d`: vector mass (6x6), `b`: gradient
/// coupling (6x4, rows are edge test functions), `c`: divergence constraint
/// (4x6, rows are nodal test functions). The naive formulation leaves `b`
/// and `c` zero.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub a: [[Complex64; 6]; 6],
    pub d: [[Complex64; 6]; 6],
    pub b: [[Complex64; 4]; 6],
    pub c: [[Complex64; 6]; 4],
}

/// Builds the element matrices for the given formulation.
///
/// The magnetic-field system uses the inverse permittivity in the
/// curl-curl block and the permeability in the mass and constraint blocks;
/// the electric-field (and naive) system swaps the roles.
pub fn local_matrices(
    coords: &[[f64; 3]; 4],
    medium: &Medium,
    formulation: Formulation,
) -> Result<ElementMatrices, FemError> {
    let (grads, vol) = barycentric_gradients(coords)?;
    let (t_curl, t_mass) = match formulation {
        Formulation::HField => (invert_tensor(&medium.eps_r)?, &medium.mu_r),
        Formulation::EField | Formulation::NaiveCurlCurl => {
            (invert_tensor(&medium.mu_r)?, &medium.eps_r)
        }
    };

    let mut out = ElementMatrices {
        a: [[C0; 6]; 6],
        d: [[C0; 6]; 6],
        b: [[C0; 4]; 6],
        c: [[C0; 6]; 4],
    };

    // curl-curl block: constant integrand, integrated exactly
    let curls: Vec<[f64; 3]> = (0..6).map(|k| edge_curl(&grads, k)).collect();
    for col in 0..6 {
        let tc = tensor_matvec(&t_curl, real3_to_c(curls[col]));
        for row in 0..6 {
            out.a[row][col] = dot_rc(curls[row], tc) * vol;
        }
    }

    // mass and coupling blocks by quadrature (degree 2 is exact for these
    // products of linear functions)
    let rule = QuadratureRule::degree2();
    let whitney = |k: usize, bary: &[f64; 4]| -> [f64; 3] {
        let (i, j) = LOCAL_EDGES[k];
        [
            bary[i] * grads[j][0] - bary[j] * grads[i][0],
            bary[i] * grads[j][1] - bary[j] * grads[i][1],
            bary[i] * grads[j][2] - bary[j] * grads[i][2],
        ]
    };
    for (pt, wt) in rule.points.iter().zip(&rule.weights) {
        let w_at: Vec<[f64; 3]> = (0..6).map(|k| whitney(k, pt)).collect();
        let scale = wt * vol;
        for col in 0..6 {
            let tw = tensor_matvec(t_mass, real3_to_c(w_at[col]));
            for row in 0..6 {
                out.d[row][col] += dot_rc(w_at[row], tw) * scale;
            }
            if formulation.has_constraint() {
                for node in 0..4 {
                    out.c[node][col] += dot_rc(grads[node], tw) * scale;
                }
            }
        }
        if formulation.has_constraint() {
            for row in 0..6 {
                for node in 0..4 {
                    out.b[row][node] += Complex64::new(dot3(grads[node], w_at[row]) * scale, 0.0);
                }
            }
        }
    }
    Ok(out)
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Local discrete-gradient incidence: column `j` expresses `grad l_j` in
/// the unsigned local edge basis (+1 at the edge head, -1 at the tail).
pub fn local_gradient_incidence() -> [[f64; 4]; 6] {
    let mut g = [[0.0f64; 4]; 6];
    for (k, (i, j)) in LOCAL_EDGES.iter().enumerate() {
        g[k][*j] = 1.0;
        g[k][*i] = -1.0;
    }
    g
}

/// Paper-ready media used by the validation cases: both tensors
/// non-Hermitian (electric and magnetic loss at once).
pub mod reference_media {
    use super::*;

    /// Cylinder cavity medium: diagonal lossy permittivity, permeability
    /// with imaginary off-diagonal coupling.
    pub fn cylinder() -> Medium {
        let j = Complex64::new(0.0, 1.0);
        let eps = [
            [Complex64::new(2.0, 1.0), C0, C0],
            [C0, Complex64::new(2.0, 1.0), C0],
            [C0, C0, Complex64::new(2.0, 0.0)],
        ];
        let mu = [
            [Complex64::new(2.0, -1.0), 0.375 * j, C0],
            [0.375 * j, Complex64::new(2.0, -1.0), C0],
            [C0, C0, Complex64::new(2.0, 0.0)],
        ];
        Medium { eps_r: eps, mu_r: mu }
    }

    /// Torus cavity medium: full lossy permittivity, diagonal lossy
    /// permeability.
    pub fn torus() -> Medium {
        let j = Complex64::new(0.0, 1.0);
        let d = Complex64::new(2.0, -0.5);
        let eps = [
            [d, 0.25 * j, 0.25 * j],
            [-0.25 * j, d, 0.25 * j],
            [-0.25 * j, -0.25 * j, d],
        ];
        let mu = [
            [Complex64::new(1.0, -0.2), C0, C0],
            [C0, Complex64::new(1.0, -0.4), C0],
            [C0, C0, Complex64::new(1.0, -0.8)],
        ];
        Medium { eps_r: eps, mu_r: mu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REF_TET: [[f64; 3]; 4] = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ];

    fn skewed_tet() -> [[f64; 3]; 4] {
        [
            [0.1, -0.2, 0.05],
            [1.3, 0.1, -0.2],
            [0.4, 0.9, 0.3],
            [-0.1, 0.2, 1.1],
        ]
    }

    #[test]
    fn reference_tet_gradients() {
        let (g, vol) = barycentric_gradients(&REF_TET).unwrap();
        assert!((vol - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(g[1], [1.0, 0.0, 0.0]);
        assert_eq!(g[2], [0.0, 1.0, 0.0]);
        assert_eq!(g[3], [0.0, 0.0, 1.0]);
        for dim in 0..3 {
            assert!((g[0][dim] + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_sum_to_zero_on_any_tet() {
        let (g, _) = barycentric_gradients(&skewed_tet()).unwrap();
        for dim in 0..3 {
            let s: f64 = (0..4).map(|i| g[i][dim]).sum();
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn sliver_tet_rejected() {
        let coords = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.5, 0.5, 1e-16],
        ];
        assert!(matches!(
            barycentric_gradients(&coords),
            Err(FemError::DegenerateTet { .. })
        ));
    }

    /// Tangential line integral of the edge basis along each edge, by
    /// two-point Gauss quadrature on the segment.
    fn edge_circulation(coords: &[[f64; 3]; 4], basis_edge: usize, along_edge: usize) -> f64 {
        let (i, j) = LOCAL_EDGES[along_edge];
        let pa = coords[i];
        let pb = coords[j];
        let tang = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
        let gauss = [0.5 - 0.5 / 3.0f64.sqrt(), 0.5 + 0.5 / 3.0f64.sqrt()];
        let mut total = 0.0;
        for t in gauss {
            let mut bary = [0.0; 4];
            bary[i] = 1.0 - t;
            bary[j] = t;
            let w = edge_basis(coords, basis_edge, 1.0, &bary).unwrap();
            total += 0.5 * dot3(w, tang);
        }
        total
    }

    #[test]
    fn edge_dofs_are_dual_to_circulations() {
        for coords in [REF_TET, skewed_tet()] {
            for be in 0..6 {
                for ae in 0..6 {
                    let c = edge_circulation(&coords, be, ae);
                    let expect = if be == ae { 1.0 } else { 0.0 };
                    assert!(
                        (c - expect).abs() < 1e-12,
                        "circulation of basis {be} along {ae} = {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn curl_matches_closed_form() {
        let (g, _) = barycentric_gradients(&REF_TET).unwrap();
        // edge (1,2): curl = 2 grad l1 x grad l2 = 2 * x-hat x y-hat = 2 z-hat
        let k = LOCAL_EDGES.iter().position(|&e| e == (1, 2)).unwrap();
        let c = edge_curl(&g, k);
        assert!((c[0]).abs() < 1e-15 && (c[1]).abs() < 1e-15);
        assert!((c[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn invert_tensor_roundtrip_on_reference_media() {
        for t in [
            identity_tensor(),
            reference_media::cylinder().mu_r,
            reference_media::cylinder().eps_r,
            reference_media::torus().eps_r,
        ] {
            let inv = invert_tensor(&t).unwrap();
            let mut err = 0.0f64;
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = C0;
                    for k in 0..3 {
                        s += t[i][k] * inv[k][j];
                    }
                    let expect = if i == j { C1 } else { C0 };
                    err = err.max((s - expect).norm());
                }
            }
            assert!(err < 1e-14, "inverse roundtrip error {err}");
        }
    }

    #[test]
    fn invert_tensor_rejects_zero() {
        let z = [[C0; 3]; 3];
        assert!(matches!(
            invert_tensor(&z),
            Err(FemError::SingularTensor { .. })
        ));
    }

    #[test]
    fn quadrature_degree2_matches_closed_form_mass() {
        // int l_i l_j = vol/20 (i != j), vol/10 (i == j)
        let rule = QuadratureRule::degree2();
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for coords in [REF_TET, skewed_tet()] {
            let (_, vol) = barycentric_gradients(&coords).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    let mut q = 0.0;
                    for (pt, wt) in rule.points.iter().zip(&rule.weights) {
                        q += wt * vol * pt[i] * pt[j];
                    }
                    let exact = if i == j { vol / 10.0 } else { vol / 20.0 };
                    assert!((q - exact).abs() < 1e-14 * vol.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn identity_tensors_make_c_the_transpose_of_b() {
        let m = Medium::vacuum();
        for coords in [REF_TET, skewed_tet()] {
            let em = local_matrices(&coords, &m, Formulation::HField).unwrap();
            for row in 0..6 {
                for node in 0..4 {
                    assert!((em.b[row][node] - em.c[node][row]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn curl_curl_block_has_rank_three() {
        let m = Medium::vacuum();
        let em = local_matrices(&REF_TET, &m, Formulation::HField).unwrap();
        // dense rank by row elimination with partial pivoting
        let mut a: Vec<Vec<Complex64>> = (0..6).map(|r| em.a[r].to_vec()).collect();
        let mut rank = 0;
        for col in 0..6 {
            let piv = (rank..6).max_by(|&r1, &r2| {
                a[r1][col]
                    .norm()
                    .partial_cmp(&a[r2][col].norm())
                    .unwrap()
            });
            let piv = piv.unwrap();
            if a[piv][col].norm() < 1e-10 {
                continue;
            }
            a.swap(rank, piv);
            let pv = a[rank][col];
            for r in rank + 1..6 {
                let f = a[r][col] / pv;
                for cc in 0..6 {
                    let sub = f * a[rank][cc];
                    a[r][cc] -= sub;
                }
            }
            rank += 1;
        }
        assert_eq!(rank, 3);
    }

    #[test]
    fn curl_curl_block_annihilates_gradients() {
        let m = reference_media::cylinder();
        for formulation in [Formulation::EField, Formulation::HField] {
            let em = local_matrices(&skewed_tet(), &m, formulation).unwrap();
            let g = local_gradient_incidence();
            for node in 0..4 {
                for row in 0..6 {
                    let mut s = C0;
                    for k in 0..6 {
                        s += em.a[row][k] * g[k][node];
                    }
                    assert!(s.norm() < 1e-12, "A ge != 0: {s}");
                }
            }
        }
    }

    #[test]
    fn mass_block_scales_linearly_with_tensor() {
        let m1 = Medium::vacuum();
        let m2 = Medium::isotropic(Complex64::new(2.0, 0.0), C1);
        let e1 = local_matrices(&REF_TET, &m1, Formulation::EField).unwrap();
        let e2 = local_matrices(&REF_TET, &m2, Formulation::EField).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                assert!((e2.d[r][c] - 2.0 * e1.d[r][c]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_block_hermitian_positive_for_hermitian_tensor() {
        let m = Medium::vacuum();
        let em = local_matrices(&skewed_tet(), &m, Formulation::HField).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                assert!((em.d[r][c] - em.d[c][r].conj()).norm() < 1e-14);
            }
        }
        // positive definiteness via a few random real vectors
        let mut state = 0x1234_5678u64;
        for _ in 0..20 {
            let mut v = [0.0f64; 6];
            for x in v.iter_mut() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                *x = (state >> 12) as f64 / (1u64 << 52) as f64 - 0.5;
            }
            let mut quad = C0;
            for r in 0..6 {
                for c in 0..6 {
                    quad += em.d[r][c] * v[r] * v[c];
                }
            }
            let vnorm: f64 = v.iter().map(|x| x * x).sum();
            if vnorm > 1e-12 {
                assert!(quad.re > 0.0, "quadratic form not positive: {quad}");
                assert!(quad.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn naive_formulation_has_no_constraint_blocks() {
        let m = Medium::vacuum();
        let em = local_matrices(&REF_TET, &m, Formulation::NaiveCurlCurl).unwrap();
        for row in 0..6 {
            for node in 0..4 {
                assert_eq!(em.b[row][node], C0);
                assert_eq!(em.c[node][row], C0);
            }
        }
    }

    #[test]
    fn constraint_block_uses_mass_tensor() {
        // with mu = 2I the H-field constraint doubles relative to vacuum
        let m1 = Medium::vacuum();
        let m2 = Medium::isotropic(C1, Complex64::new(2.0, 0.0));
        let e1 = local_matrices(&skewed_tet(), &m1, Formulation::HField).unwrap();
        let e2 = local_matrices(&skewed_tet(), &m2, Formulation::HField).unwrap();
        for node in 0..4 {
            for col in 0..6 {
                assert!((e2.c[node][col] - 2.0 * e1.c[node][col]).norm() < 1e-14);
            }
        }
    }
}
