//! Mode classification, analytic references, convergence tracking, and the
//! spurious-mode audit.
//!
//! The dummy-variable theory gives two checkable signatures on computed
//! eigenvectors: the scalar part of an electric-field mode vanishes, and
//! the scalar part of a magnetic-field mode is constant. Modes violating
//! either are flagged, as are modes with a nonzero discrete divergence and
//! near-zero eigenvalues on simply connected domains.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use num_traits::Float;

use crate::assembly::{assemble, build_gevp, AssemblyError, BlockSystem, Formulation};
use crate::eigen::{
    factorize_full, solve_with_operator, EigenError, EigenPair, ShiftInvertOp, SolverConfig,
};
use crate::fem::Medium;
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Physical,
    SpuriousDc,
    SpuriousNonzero,
    DummyViolation,
}

impl ModeKind {
    pub fn label(self) -> &'static str {
        match self {
            ModeKind::Physical => "physical",
            ModeKind::SpuriousDc => "spurious_dc",
            ModeKind::SpuriousNonzero => "spurious_nonzero",
            ModeKind::DummyViolation => "dummy_violation",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeClassification {
    pub kind: ModeKind,
    /// `||C xi||_2 / ||xi||_2`.
    pub divergence_residual: f64,
    /// Electric field: `||zeta||_inf / ||xi||_2`; magnetic field: the
    /// relative standard deviation of the zeta entries.
    pub dummy_stat: f64,
    /// Set for near-zero modes on multiply connected domains, which may be
    /// genuine resonances and are reported rather than condemned.
    pub possible_physical_dc: bool,
}

/// Classification thresholds. All configurable; the defaults sit an order
/// of magnitude below the discretization noise observed at desk scale.
#[derive(Debug, Clone)]
pub struct Thresholds {
    pub dummy_tol: f64,
    pub divergence_tol: f64,
    /// Absolute magnitude below which an eigenvalue counts as dc.
    pub dc_abs: f64,
    /// Whether the domain is multiply connected (dc modes may be physical).
    pub multiply_connected: bool,
}

impl Thresholds {
    /// Default thresholds for a solve around `shift` on the given mesh:
    /// the dc cutoff scales with the shift magnitude, and the topology is
    /// read off the mesh's Euler characteristic.
    pub fn for_solve(shift: Complex64, mesh: &Mesh) -> Self {
        Thresholds {
            dummy_tol: 1e-6,
            divergence_tol: 1e-8,
            dc_abs: 1e-6 * shift.norm().max(f64::MIN_POSITIVE),
            multiply_connected: mesh.euler_characteristic() != 1,
        }
    }
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Dummy-variable statistic of a computed pair.
///
/// The electric-field scalar must vanish, so the statistic is its maximum
/// magnitude relative to the field norm. The magnetic-field scalar must be
/// constant, so the statistic is the spread of its entries relative to
/// their mean plus the field norm.
pub fn dummy_stat(formulation: Formulation, pair: &EigenPair) -> f64 {
    if pair.zeta.is_empty() {
        return 0.0;
    }
    let xi_norm = norm2(&pair.xi);
    match formulation {
        Formulation::EField | Formulation::NaiveCurlCurl => {
            let zmax = pair.zeta.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            zmax / xi_norm.max(f64::MIN_POSITIVE)
        }
        Formulation::HField => {
            let n = pair.zeta.len() as f64;
            let mean: Complex64 = pair.zeta.iter().sum::<Complex64>() / n;
            let var: f64 = pair.zeta.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n;
            var.sqrt() / (mean.norm() + xi_norm).max(f64::MIN_POSITIVE)
        }
    }
}

/// Classifies one computed mode against the thresholds.
pub fn classify(pair: &EigenPair, sys: &BlockSystem, thresholds: &Thresholds) -> ModeClassification {
    let divergence_residual = sys.constraint_residual(&pair.xi);
    let stat = dummy_stat(sys.formulation, pair);
    let near_zero = pair.lambda.norm() < thresholds.dc_abs;
    let kind = if near_zero {
        ModeKind::SpuriousDc
    } else if stat > thresholds.dummy_tol {
        ModeKind::DummyViolation
    } else if divergence_residual > thresholds.divergence_tol {
        ModeKind::SpuriousNonzero
    } else {
        ModeKind::Physical
    };
    ModeClassification {
        kind,
        divergence_residual,
        dummy_stat: stat,
        possible_physical_dc: near_zero && thresholds.multiply_connected,
    }
}

/// One classified mode of a solve.
#[derive(Debug, Clone)]
pub struct ClassifiedMode {
    pub pair: EigenPair,
    pub class: ModeClassification,
}

/// Everything a solve produces, ready for serialization.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub formulation: Formulation,
    pub h: f64,
    pub beta: f64,
    pub shift: Complex64,
    /// Field and scalar unknown counts.
    pub m: usize,
    pub n: usize,
    pub modes: Vec<ClassifiedMode>,
    /// Wall-clock seconds, filled by the front end (zero from the library).
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
}

impl SolveReport {
    pub fn dominant(&self) -> Option<&ClassifiedMode> {
        self.modes
            .iter()
            .find(|m| m.class.kind == ModeKind::Physical)
    }

    pub fn has_dummy_violation(&self) -> bool {
        self.modes
            .iter()
            .any(|m| m.class.kind == ModeKind::DummyViolation)
    }
}

#[derive(Debug, Clone)]
pub enum SolveError {
    Assembly(AssemblyError),
    Eigen(EigenError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Assembly(e) => write!(f, "{e}"),
            SolveError::Eigen(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<AssemblyError> for SolveError {
    fn from(e: AssemblyError) -> Self {
        SolveError::Assembly(e)
    }
}

impl From<EigenError> for SolveError {
    fn from(e: EigenError) -> Self {
        SolveError::Eigen(e)
    }
}

/// The constant-scalar direction the magnetic-field pencil is singular
/// along (zero on the field block, one on the scalar block).
pub fn hfield_null_direction(split: usize, total: usize) -> Vec<Complex64> {
    let mut v = alloc::vec![Complex64::new(0.0, 0.0); total];
    for z in v.iter_mut().skip(split) {
        *z = Complex64::new(1.0, 0.0);
    }
    v
}

/// Assembles, solves and classifies in one call.
///
/// The magnetic-field system is solved with its known singular direction
/// purged and one deficient pivot tolerated; the other formulations expect
/// a regular shifted matrix.
pub fn solve_cavity(
    mesh: &Mesh,
    media: &BTreeMap<i32, Medium>,
    formulation: Formulation,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let sys = assemble(mesh, media, formulation)?;
    let report = solve_assembled(&sys, mesh, cfg)?;
    Ok(report)
}

/// Solves an already-assembled block system.
pub fn solve_assembled(
    sys: &BlockSystem,
    mesh: &Mesh,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let gevp = build_gevp(sys);
    let total = gevp.k.nrows();
    let coords = crate::assembly::gevp_coordinates(mesh, &sys.dofmap);
    let pairs = match sys.formulation {
        Formulation::HField => {
            let fact = factorize_full(&gevp.k, &gevp.m, cfg.shift, 1, Some(&coords))?;
            let op = ShiftInvertOp::new(&fact, &gevp.m)
                .with_purge(hfield_null_direction(gevp.split, total));
            solve_with_operator(&op, &gevp.k, &gevp.m, cfg, gevp.split)?
        }
        _ => {
            let fact = factorize_full(&gevp.k, &gevp.m, cfg.shift, 0, Some(&coords))?;
            let op = ShiftInvertOp::new(&fact, &gevp.m);
            solve_with_operator(&op, &gevp.k, &gevp.m, cfg, gevp.split)?
        }
    };
    let thresholds = Thresholds::for_solve(cfg.shift, mesh);
    let modes = pairs
        .into_iter()
        .map(|pair| {
            let class = classify(&pair, sys, &thresholds);
            ClassifiedMode { pair, class }
        })
        .collect();
    Ok(SolveReport {
        formulation: sys.formulation,
        h: mesh.h,
        beta: sys.beta,
        shift: cfg.shift,
        m: sys.m(),
        n: sys.n(),
        modes,
        assemble_seconds: 0.0,
        solve_seconds: 0.0,
    })
}

/// Resonances of a perfectly conducting rectangular box filled with
/// vacuum: `Lambda = (i pi/a)^2 + (j pi/b)^2 + (k pi/c)^2` with transverse
/// electric and magnetic mode counting. Returns `(Lambda, multiplicity)`
/// sorted ascending.
pub fn analytic_box_spectrum(a: f64, b: f64, c: f64, max_index: usize) -> Vec<(f64, usize)> {
    let pi = core::f64::consts::PI;
    let mut modes: Vec<f64> = Vec::new();
    for i in 0..=max_index {
        for j in 0..=max_index {
            for k in 0..=max_index {
                let lambda = (i as f64 * pi / a).powi(2)
                    + (j as f64 * pi / b).powi(2)
                    + (k as f64 * pi / c).powi(2);
                // TM modes need both transverse indices, TE needs the axial
                // index plus at least one transverse
                let tm = i >= 1 && j >= 1;
                let te = k >= 1 && (i >= 1 || j >= 1);
                if tm {
                    modes.push(lambda);
                }
                if te {
                    modes.push(lambda);
                }
            }
        }
    }
    modes.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut out: Vec<(f64, usize)> = Vec::new();
    for lam in modes {
        match out.last_mut() {
            Some((l, count)) if (lam - *l).abs() <= 1e-9 * lam.abs() => *count += 1,
            _ => out.push((lam, 1)),
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub lambda: Complex64,
    /// Relative error against the reference value, when one is known.
    pub reference_error: Option<f64>,
    pub unknowns: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Observed convergence order from a Richardson fit (needs enough
    /// levels, `None` otherwise).
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum StudyError {
    Solve(SolveError),
    NeedTwoLevels,
    NoPhysicalMode { level: usize },
    /// Two materially different eigenvalues compete for the tracked branch.
    TrackingAmbiguity {
        level: usize,
        first: Complex64,
        second: Complex64,
    },
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyError::Solve(e) => write!(f, "{e}"),
            StudyError::NeedTwoLevels => write!(f, "a study needs at least two mesh sizes"),
            StudyError::NoPhysicalMode { level } => {
                write!(f, "no physical mode found at refinement level {level}")
            }
            StudyError::TrackingAmbiguity {
                level,
                first,
                second,
            } => write!(
                f,
                "eigenvalue tracking ambiguous at level {level}: {first} vs {second}"
            ),
        }
    }
}

impl core::error::Error for StudyError {}

impl From<SolveError> for StudyError {
    fn from(e: SolveError) -> Self {
        StudyError::Solve(e)
    }
}

/// Picks, among the physical modes, the one nearest `target`, reporting an
/// ambiguity when a materially different candidate sits within the capture
/// radius at a comparable distance.
pub fn track_dominant(
    report: &SolveReport,
    target: Complex64,
    level: usize,
) -> Result<Complex64, StudyError> {
    let mut candidates: Vec<Complex64> = report
        .modes
        .iter()
        .filter(|m| m.class.kind == ModeKind::Physical)
        .map(|m| m.pair.lambda)
        .collect();
    if candidates.is_empty() {
        return Err(StudyError::NoPhysicalMode { level });
    }
    candidates.sort_by(|x, y| {
        (x - target)
            .norm()
            .partial_cmp(&(y - target).norm())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let first = candidates[0];
    let radius = 0.2 * target.norm().max(f64::MIN_POSITIVE);
    for &second in candidates.iter().skip(1) {
        let d1 = (first - target).norm();
        let d2 = (second - target).norm();
        let materially_different = (second - first).norm() > 1e-3 * first.norm();
        if d2 <= radius && materially_different && d2 < 2.0 * d1.max(1e-3 * radius) {
            return Err(StudyError::TrackingAmbiguity {
                level,
                first,
                second,
            });
        }
    }
    Ok(first)
}

/// Tracks the dominant eigenvalue across a refinement sequence and fits
/// the observed convergence order.
pub fn convergence_study(
    meshes: &[Mesh],
    media: &BTreeMap<i32, Medium>,
    formulation: Formulation,
    cfg: &SolverConfig,
    reference: Option<Complex64>,
) -> Result<ConvergenceStudy, StudyError> {
    if meshes.len() < 2 {
        return Err(StudyError::NeedTwoLevels);
    }
    // levels are independent solves at the configured shift; the branch is
    // matched afterwards by nearest-eigenvalue continuation
    let mut reports = Vec::with_capacity(meshes.len());
    for mesh in meshes {
        reports.push(solve_cavity(mesh, media, formulation, cfg)?);
    }
    let rows = track_study_rows(&reports, cfg.shift, reference)?;
    let observed_order = fit_observed_order(&rows, reference);
    Ok(ConvergenceStudy {
        rows,
        observed_order,
    })
}

/// Sequential continuation pass over per-level reports: level 0 tracks the
/// eigenvalue nearest the shift, each later level tracks the previous one.
pub fn track_study_rows(
    reports: &[SolveReport],
    shift: Complex64,
    reference: Option<Complex64>,
) -> Result<Vec<ConvergenceRow>, StudyError> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut target = shift;
    for (level, report) in reports.iter().enumerate() {
        let lambda = track_dominant(report, target, level)?;
        rows.push(ConvergenceRow {
            h: report.h,
            lambda,
            reference_error: reference.map(|r| (lambda - r).norm() / r.norm()),
            unknowns: report.m + report.n,
        });
        target = lambda;
    }
    Ok(rows)
}

/// Least-squares slope of `log(error)` against `log(h)` when a reference
/// is available, otherwise a Richardson fit over consecutive triplets.
pub fn fit_observed_order(rows: &[ConvergenceRow], reference: Option<Complex64>) -> Option<f64> {
    if let Some(r) = reference {
        if rows.len() < 2 {
            return None;
        }
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|row| (row.lambda - r).norm() > 0.0)
            .map(|row| (row.h.ln(), (row.lambda - r).norm().ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        if sxx == 0.0 {
            return None;
        }
        return Some(sxy / sxx);
    }
    if rows.len() < 3 {
        return None;
    }
    let mut orders = Vec::new();
    for w in rows.windows(3) {
        let r = (w[0].lambda - w[1].lambda).norm() / (w[1].lambda - w[2].lambda).norm();
        let (h1, h2, h3) = (w[0].h, w[1].h, w[2].h);
        let g = |p: f64| (h1.powf(p) - h2.powf(p)) / (h2.powf(p) - h3.powf(p));
        let (mut lo, mut hi) = (0.05f64, 10.0f64);
        if (g(lo) - r).signum() == (g(hi) - r).signum() {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) - r).signum() == (g(lo) - r).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        orders.push(0.5 * (lo + hi));
    }
    if orders.is_empty() {
        None
    } else {
        Some(orders.iter().sum::<f64>() / orders.len() as f64)
    }
}

/// Absolute dc cutoff used by the audit, in 1/m^2.
pub const AUDIT_DC_ABS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct AuditReport {
    /// Near-zero eigenvalue counts among the `nev` modes nearest the shift.
    pub naive_near_zero: usize,
    pub efield_near_zero: usize,
    pub hfield_near_zero: usize,
    pub dominant_e: Option<Complex64>,
    pub dominant_h: Option<Complex64>,
    pub multiply_connected: bool,
    /// Near-zero modes flagged possible-physical (multiply connected only).
    pub flagged_dc: usize,
    pub nev: usize,
}

impl AuditReport {
    /// The audit passes when the mixed formulations are free of unflagged
    /// near-zero modes.
    pub fn passes(&self) -> bool {
        if self.multiply_connected {
            true
        } else {
            self.efield_near_zero == 0 && self.hfield_near_zero == 0
        }
    }
}

/// Runs the naive and both mixed formulations near a small positive shift
/// and counts near-zero eigenvalues in each.
pub fn spurious_audit(
    mesh: &Mesh,
    media: &BTreeMap<i32, Medium>,
    cfg: &SolverConfig,
) -> Result<AuditReport, SolveError> {
    spurious_audit_with_threshold(mesh, media, cfg, AUDIT_DC_ABS)
}

/// [`spurious_audit`] with an explicit near-zero cutoff in 1/m^2.
pub fn spurious_audit_with_threshold(
    mesh: &Mesh,
    media: &BTreeMap<i32, Medium>,
    cfg: &SolverConfig,
    dc_abs: f64,
) -> Result<AuditReport, SolveError> {
    let multiply_connected = mesh.euler_characteristic() != 1;
    let count_near_zero = |report: &SolveReport| {
        report
            .modes
            .iter()
            .filter(|m| m.pair.lambda.norm() < dc_abs)
            .count()
    };

    let naive = solve_cavity(mesh, media, Formulation::NaiveCurlCurl, cfg)?;
    let efield = solve_cavity(mesh, media, Formulation::EField, cfg)?;
    let hfield = solve_cavity(mesh, media, Formulation::HField, cfg)?;

    let flagged_dc = [&efield, &hfield]
        .iter()
        .flat_map(|r| r.modes.iter())
        .filter(|m| m.class.possible_physical_dc)
        .count();

    Ok(AuditReport {
        naive_near_zero: count_near_zero(&naive),
        efield_near_zero: count_near_zero(&efield),
        hfield_near_zero: count_near_zero(&hfield),
        dominant_e: efield.dominant().map(|m| m.pair.lambda),
        dominant_h: hfield.dominant().map(|m| m.pair.lambda),
        multiply_connected,
        flagged_dc,
        nev: cfg.nev,
    })
}

#[derive(Debug, Clone)]
pub struct CrossCheckRow {
    pub h: f64,
    pub lambda_e: Complex64,
    pub lambda_h: Complex64,
    pub rel_diff: f64,
}

/// Solves both mixed formulations on each mesh and reports the relative
/// difference of the tracked dominant eigenvalues.
pub fn e_h_cross_check(
    meshes: &[Mesh],
    media: &BTreeMap<i32, Medium>,
    cfg: &SolverConfig,
) -> Result<Vec<CrossCheckRow>, StudyError> {
    let mut out = Vec::new();
    let mut target = cfg.shift;
    for (level, mesh) in meshes.iter().enumerate() {
        let mut level_cfg = cfg.clone();
        level_cfg.shift = target;
        let re = solve_cavity(mesh, media, Formulation::EField, &level_cfg)?;
        let rh = solve_cavity(mesh, media, Formulation::HField, &level_cfg)?;
        let le = track_dominant(&re, target, level)?;
        let lh = track_dominant(&rh, target, level)?;
        out.push(CrossCheckRow {
            h: mesh.h,
            lambda_e: le,
            lambda_h: lh,
            rel_diff: (le - lh).norm() / le.norm().max(f64::MIN_POSITIVE),
        });
        target = le;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_cube_spectrum_starts_at_two_pi_squared() {
        let spec = analytic_box_spectrum(1.0, 1.0, 1.0, 4);
        let (lam, mult) = spec[0];
        let expected = 2.0 * core::f64::consts::PI * core::f64::consts::PI;
        assert!((lam - expected).abs() < 1e-12);
        assert_eq!(mult, 3);
    }

    #[test]
    fn box_spectrum_lowest_mode_of_flat_box() {
        // 1 x 0.5 x 0.75: lowest admissible triple is (1, 0, 1)
        let spec = analytic_box_spectrum(1.0, 0.5, 0.75, 4);
        let (lam, _) = spec[0];
        let pi = core::f64::consts::PI;
        let expected = pi * pi * (1.0 + 1.0 / 0.5625);
        assert!(
            (lam - expected).abs() < 1e-10,
            "lowest {lam} vs expected {expected}"
        );
    }

    #[test]
    fn box_spectrum_invariant_under_axis_relabeling() {
        let s1 = analytic_box_spectrum(1.0, 0.5, 0.75, 3);
        let s2 = analytic_box_spectrum(0.75, 1.0, 0.5, 3);
        assert_eq!(s1.len(), s2.len());
        for (a, b) in s1.iter().zip(&s2) {
            assert!((a.0 - b.0).abs() < 1e-10);
            assert_eq!(a.1, b.1);
        }
    }

    fn fake_pair(lambda: Complex64, xi: Vec<Complex64>, zeta: Vec<Complex64>) -> EigenPair {
        EigenPair {
            lambda,
            xi,
            zeta,
            residual: 0.0,
            omega: crate::eigen::omega_from_lambda(lambda),
        }
    }

    #[test]
    fn dummy_stat_zero_for_constant_hfield_scalar() {
        let pair = fake_pair(
            c(20.0, 0.0),
            alloc::vec![c(0.6, 0.0), c(0.8, 0.0)],
            alloc::vec![c(0.3, 0.1); 7],
        );
        assert!(dummy_stat(Formulation::HField, &pair) < 1e-15);
    }

    #[test]
    fn dummy_stat_zero_for_vanishing_efield_scalar() {
        let pair = fake_pair(
            c(20.0, 0.0),
            alloc::vec![c(1.0, 0.0)],
            alloc::vec![c(0.0, 0.0); 4],
        );
        assert_eq!(dummy_stat(Formulation::EField, &pair), 0.0);
    }

    #[test]
    fn dummy_stat_detects_nonconstant_scalar() {
        let pair = fake_pair(
            c(20.0, 0.0),
            alloc::vec![c(1.0, 0.0)],
            alloc::vec![c(1.0, 0.0), c(-1.0, 0.0)],
        );
        assert!(dummy_stat(Formulation::HField, &pair) > 0.1);
        assert!(dummy_stat(Formulation::EField, &pair) > 0.1);
    }

    #[test]
    fn order_fit_recovers_quadratic_convergence() {
        // synthetic sequence lambda = L + C h^2
        let reference = c(19.739, 0.0);
        let rows: Vec<ConvergenceRow> = [0.5f64, 0.25, 0.125]
            .iter()
            .map(|&h| ConvergenceRow {
                h,
                lambda: reference + c(3.0 * h * h, 0.0),
                reference_error: None,
                unknowns: 0,
            })
            .collect();
        let with_ref = fit_observed_order(&rows, Some(reference)).unwrap();
        assert!((with_ref - 2.0).abs() < 1e-6, "got {with_ref}");
        let without_ref = fit_observed_order(&rows, None).unwrap();
        assert!((without_ref - 2.0).abs() < 1e-6, "got {without_ref}");
    }

    #[test]
    fn order_fit_handles_nonuniform_ratios() {
        let reference = c(10.0, 2.0);
        let rows: Vec<ConvergenceRow> = [0.61f64, 0.37, 0.19, 0.11]
            .iter()
            .map(|&h| ConvergenceRow {
                h,
                lambda: reference + c(2.0, 0.5) * h.powf(1.7),
                reference_error: None,
                unknowns: 0,
            })
            .collect();
        let p = fit_observed_order(&rows, None).unwrap();
        assert!((p - 1.7).abs() < 0.05, "got {p}");
    }
}
