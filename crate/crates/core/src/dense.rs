//! Dense complex linear algebra: Givens rotations, Hessenberg reduction,
//! the Schur decomposition, and the QZ (generalized Schur) decomposition.
//!
//! Everything here is written for moderate dimensions (the restart blocks of
//! the Arnoldi solver and the dense verification oracle). Storage is
//! row-major `Complex64`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Float;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DMat {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl DMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DMat {
            nrows,
            ncols,
            data: vec![ZERO; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let nrows = rows.len();
        let ncols = if nrows > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols);
            data.extend_from_slice(r);
        }
        DMat { nrows, ncols, data }
    }

    pub fn from_sparse(a: &crate::sparse::CsMat) -> Self {
        let mut m = DMat::zeros(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            let (cols, vals) = a.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m[(i, *c as usize)] = *v;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn mul(&self, other: &DMat) -> DMat {
        assert_eq!(self.ncols, other.nrows);
        let mut out = DMat::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let aik = self[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..other.ncols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![ZERO; self.nrows];
        for i in 0..self.nrows {
            let mut acc = ZERO;
            for j in 0..self.ncols {
                acc += self[(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn conj_transpose(&self) -> DMat {
        let mut out = DMat::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn sub(&self, other: &DMat) -> DMat {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for DMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.ncols + c]
    }
}

impl IndexMut<(usize, usize)> for DMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.ncols + c]
    }
}

impl fmt::Display for DMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                let v = self[(i, j)];
                write!(f, "({:+.3e},{:+.3e}) ", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenseError {
    /// The QR or QZ iteration failed to converge within the iteration cap.
    NoConvergence,
}

impl fmt::Display for DenseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenseError::NoConvergence => write!(f, "eigenvalue iteration failed to converge"),
        }
    }
}

impl core::error::Error for DenseError {}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with `c` real,
/// mapping `(a, b)` to `(r, 0)`.
pub fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    if b == ZERO {
        return (1.0, ZERO, a);
    }
    if a == ZERO {
        let nb = b.norm();
        return (0.0, b.conj() / nb, Complex64::new(nb, 0.0));
    }
    let na = a.norm();
    let nb = b.norm();
    let d = na.hypot(nb);
    let c = na / d;
    let phase = a / na;
    let s = phase * b.conj() / d;
    let r = phase * d;
    (c, s, r)
}

/// Applies `G` to rows `(i, k)` over columns `[jlo, jhi)`.
#[inline]
fn left_rot(a: &mut DMat, i: usize, k: usize, c: f64, s: Complex64, jlo: usize, jhi: usize) {
    for j in jlo..jhi {
        let x = a[(i, j)];
        let y = a[(k, j)];
        a[(i, j)] = c * x + s * y;
        a[(k, j)] = -s.conj() * x + c * y;
    }
}

/// Applies the column rotation pairing columns `(j, k)` over rows `[rlo, rhi)`:
/// `col_j <- c*col_j - conj(s)*col_k`, `col_k <- s*col_j + c*col_k`.
///
/// With `(c, s) = givens(A[r0][k], A[r0][j])` this zeroes `A[r0][j]`.
#[inline]
fn right_rot(a: &mut DMat, j: usize, k: usize, c: f64, s: Complex64, rlo: usize, rhi: usize) {
    for r in rlo..rhi {
        let x = a[(r, j)];
        let y = a[(r, k)];
        a[(r, j)] = c * x - s.conj() * y;
        a[(r, k)] = s * x + c * y;
    }
}

/// Reduces `h` to upper Hessenberg form by a unitary similarity,
/// accumulating the transform into `q` (`A_in = Q H Q^H` when `q` starts
/// as the identity).
pub fn hessenberg_in_place(h: &mut DMat, q: &mut DMat) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for j in 0..n - 2 {
        for i in (j + 2..n).rev() {
            if h[(i, j)] == ZERO {
                continue;
            }
            let (c, s, r) = givens(h[(i - 1, j)], h[(i, j)]);
            h[(i - 1, j)] = r;
            h[(i, j)] = ZERO;
            left_rot(h, i - 1, i, c, s, j + 1, n);
            // similarity: apply G^H from the right (same as right_rot with -s)
            right_rot(h, i - 1, i, c, -s, 0, n);
            right_rot(q, i - 1, i, c, -s, 0, n);
        }
    }
}

fn wilkinson_shift(h: &DMat, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr2 = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let e1 = tr2 + disc;
    let e2 = tr2 - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Complex Schur decomposition `A = Q T Q^H` with `T` upper triangular.
///
/// Returns `(T, Q)`.
pub fn schur(a: &DMat) -> Result<(DMat, DMat), DenseError> {
    assert_eq!(a.nrows(), a.ncols());
    let n = a.nrows();
    let mut t = a.clone();
    let mut q = DMat::identity(n);
    if n <= 1 {
        return Ok((t, q));
    }
    hessenberg_in_place(&mut t, &mut q);

    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE / ulp;
    let mut hi = n - 1;
    let mut stall = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n;

    loop {
        // deflate negligible subdiagonals at the bottom
        while hi > 0 {
            let sub = t[(hi, hi - 1)].norm();
            let local = t[(hi - 1, hi - 1)].norm() + t[(hi, hi)].norm();
            if sub <= smlnum.max(ulp * local) {
                t[(hi, hi - 1)] = ZERO;
                hi -= 1;
                stall = 0;
            } else {
                break;
            }
        }
        if hi == 0 {
            break;
        }
        // active block [lo..=hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let local = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            if sub <= smlnum.max(ulp * local) {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        total += 1;
        stall += 1;
        if total > max_total {
            return Err(DenseError::NoConvergence);
        }
        let mu = if stall % 12 == 0 {
            t[(hi, hi)] + Complex64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(&t, hi)
        };
        // implicit single-shift QR sweep over [lo..=hi]
        let mut x = t[(lo, lo)] - mu;
        let mut y = t[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s, _) = givens(x, y);
            let jlo = if k > lo { k - 1 } else { lo };
            left_rot(&mut t, k, k + 1, c, s, jlo, n);
            let rhi = n.min(k + 3);
            right_rot(&mut t, k, k + 1, c, -s, 0, rhi);
            right_rot(&mut q, k, k + 1, c, -s, 0, n);
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
    }
    // clean the strictly lower part
    for i in 1..n {
        for j in 0..i {
            t[(i, j)] = ZERO;
        }
    }
    Ok((t, q))
}

/// Swaps the diagonal entries `j` and `j+1` of the upper triangular `t` by a
/// unitary similarity, updating `q` accordingly.
pub fn schur_swap(t: &mut DMat, q: &mut DMat, j: usize) {
    let n = t.nrows();
    let l1 = t[(j, j)];
    let l2 = t[(j + 1, j + 1)];
    let t12 = t[(j, j + 1)];
    let (c, s, _) = givens(t12, l2 - l1);
    left_rot(t, j, j + 1, c, s, j, n);
    right_rot(t, j, j + 1, c, -s, 0, j + 2);
    right_rot(q, j, j + 1, c, -s, 0, n);
    t[(j + 1, j)] = ZERO;
    t[(j, j)] = l2;
    t[(j + 1, j + 1)] = l1;
}

/// Reorders the Schur form so that the diagonal positions listed in
/// `select` (by original position) are moved to the leading block,
/// preserving their relative order.
pub fn schur_reorder(t: &mut DMat, q: &mut DMat, select: &[bool]) {
    let n = t.nrows();
    debug_assert_eq!(select.len(), n);
    let mut sel: Vec<bool> = select.to_vec();
    let mut front = 0usize;
    for i in 0..n {
        if sel[i] {
            let mut k = i;
            while k > front {
                schur_swap(t, q, k - 1);
                sel.swap(k - 1, k);
                k -= 1;
            }
            front += 1;
        }
    }
}

/// Right eigenvectors of an upper triangular matrix, one column per
/// eigenvalue, each normalized to unit 2-norm.
pub fn triangular_eigenvectors(t: &DMat) -> DMat {
    let n = t.nrows();
    let mut vecs = DMat::zeros(n, n);
    let scale = t.max_abs().max(1.0);
    for i in 0..n {
        let lambda = t[(i, i)];
        let mut z = vec![ZERO; n];
        z[i] = ONE;
        for k in (0..i).rev() {
            let mut acc = ZERO;
            for j in k + 1..=i {
                acc += t[(k, j)] * z[j];
            }
            let mut denom = t[(k, k)] - lambda;
            if denom.norm() < f64::EPSILON * scale {
                denom = Complex64::new(f64::EPSILON * scale, 0.0);
            }
            z[k] = -acc / denom;
        }
        let nrm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for k in 0..=i {
            vecs[(k, i)] = z[k] / nrm;
        }
    }
    vecs
}

/// Generalized Schur (QZ) decomposition of the pencil `(A, B)`:
/// `A = Q S Z^H`, `B = Q T Z^H` with `S`, `T` upper triangular.
pub struct QzDecomposition {
    pub s: DMat,
    pub t: DMat,
    pub q: DMat,
    pub z: DMat,
    /// Diagonal of `S`: generalized eigenvalue numerators.
    pub alpha: Vec<Complex64>,
    /// Diagonal of `T`: generalized eigenvalue denominators.
    pub beta: Vec<Complex64>,
}

/// Reduces `(h, t)` to Hessenberg-triangular form, accumulating `q`, `z`.
fn hessenberg_triangular(h: &mut DMat, t: &mut DMat, q: &mut DMat, z: &mut DMat) {
    let n = h.nrows();
    // QR-factor T with row rotations, applied to H as well.
    for j in 0..n {
        for i in (j + 1..n).rev() {
            if t[(i, j)] == ZERO {
                continue;
            }
            let (c, s, r) = givens(t[(i - 1, j)], t[(i, j)]);
            t[(i - 1, j)] = r;
            t[(i, j)] = ZERO;
            left_rot(t, i - 1, i, c, s, j + 1, n);
            left_rot(h, i - 1, i, c, s, 0, n);
            right_rot(q, i - 1, i, c, -s, 0, n);
        }
    }
    if n < 3 {
        return;
    }
    // Reduce H to Hessenberg while keeping T triangular.
    for j in 0..n - 2 {
        for i in ((j + 2)..n).rev() {
            if h[(i, j)] == ZERO {
                continue;
            }
            let (c, s, r) = givens(h[(i - 1, j)], h[(i, j)]);
            h[(i - 1, j)] = r;
            h[(i, j)] = ZERO;
            left_rot(h, i - 1, i, c, s, j + 1, n);
            left_rot(t, i - 1, i, c, s, i - 1, n);
            right_rot(q, i - 1, i, c, -s, 0, n);
            // restore T's triangularity: zero T[i][i-1]
            let (c2, s2, r2) = givens(t[(i, i)], t[(i, i - 1)]);
            t[(i, i)] = r2;
            t[(i, i - 1)] = ZERO;
            right_rot(t, i - 1, i, c2, s2, 0, i);
            right_rot(h, i - 1, i, c2, s2, 0, n);
            right_rot(z, i - 1, i, c2, s2, 0, n);
        }
    }
}

/// Eigenvalues of the 2x2 trailing pencil, used as QZ shifts.
fn qz_shift(h: &DMat, t: &DMat, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let e = t[(hi - 1, hi - 1)];
    let f = t[(hi - 1, hi)];
    let g = t[(hi, hi)];
    // det([[a,b],[c,d]] - l*[[e,f],[0,g]]) = (eg) l^2 - (ag + de - cf) l + (ad - bc)
    let aa = e * g;
    let bb = -(a * g + d * e - c * f);
    let cc = a * d - b * c;
    let target = d / g;
    if aa.norm() < 1e-300 {
        return target;
    }
    let disc = (bb * bb - 4.0 * aa * cc).sqrt();
    // stable quadratic roots
    let qv = if (bb + disc).norm() >= (bb - disc).norm() {
        -0.5 * (bb + disc)
    } else {
        -0.5 * (bb - disc)
    };
    let r1 = qv / aa;
    let r2 = if qv.norm() > 0.0 { cc / qv } else { r1 };
    if (r1 - target).norm() <= (r2 - target).norm() {
        r1
    } else {
        r2
    }
}

/// QZ iteration on a Hessenberg-triangular pencil. Follows the deflation
/// strategy of the classical single-shift algorithm, including the chase
/// that exposes infinite eigenvalues when `T` has zero diagonal entries.
pub fn qz(a: &DMat, b: &DMat) -> Result<QzDecomposition, DenseError> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    assert_eq!(b.ncols(), n);
    let mut h = a.clone();
    let mut t = b.clone();
    let mut q = DMat::identity(n);
    let mut z = DMat::identity(n);
    if n == 0 {
        return Ok(QzDecomposition {
            s: h,
            t,
            q,
            z,
            alpha: Vec::new(),
            beta: Vec::new(),
        });
    }
    hessenberg_triangular(&mut h, &mut t, &mut q, &mut z);

    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE / ulp;
    let anorm = h.norm_fro().max(1e-300);
    let bnorm = t.norm_fro().max(1e-300);
    let atol = smlnum.max(ulp * anorm);
    let btol = smlnum.max(ulp * bnorm);

    let mut ilast = n - 1;
    let mut total = 0usize;
    let mut stall = 0usize;
    let max_total = 80 * n;
    let mut eshift = ZERO;

    'outer: loop {
        // --- deflation checks at the bottom ---
        if ilast == 0 {
            if t[(0, 0)].norm() <= btol {
                t[(0, 0)] = ZERO;
            }
            break;
        }
        if h[(ilast, ilast - 1)].norm()
            <= atol.max(ulp * (h[(ilast - 1, ilast - 1)].norm() + h[(ilast, ilast)].norm()))
        {
            h[(ilast, ilast - 1)] = ZERO;
            if t[(ilast, ilast)].norm() <= btol {
                t[(ilast, ilast)] = ZERO;
            }
            ilast -= 1;
            stall = 0;
            continue;
        }
        if t[(ilast, ilast)].norm() <= btol {
            // infinite eigenvalue at the bottom: zero H[ilast][ilast-1]
            // with a column rotation, then deflate.
            t[(ilast, ilast)] = ZERO;
            let (c, s, r) = givens(h[(ilast, ilast)], h[(ilast, ilast - 1)]);
            h[(ilast, ilast)] = r;
            h[(ilast, ilast - 1)] = ZERO;
            right_rot(&mut h, ilast - 1, ilast, c, s, 0, ilast);
            right_rot(&mut t, ilast - 1, ilast, c, s, 0, ilast);
            right_rot(&mut z, ilast - 1, ilast, c, s, 0, n);
            ilast -= 1;
            stall = 0;
            continue;
        }
        // find the start of the unreduced active block
        let mut lo = ilast;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if sub <= atol.max(ulp * local) {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        // look for zero diagonals of T inside [lo, ilast): chase them so the
        // block either splits or exposes the infinite eigenvalue at the bottom
        let mut chased = false;
        for jstart in (lo..ilast).rev() {
            if t[(jstart, jstart)].norm() > btol {
                continue;
            }
            t[(jstart, jstart)] = ZERO;
            let ilazro = jstart == lo;
            // two-consecutive-small test: the fill dropped below the
            // subdiagonal is negligible when this product is tiny
            let ilazr2 = !ilazro
                && h[(jstart, jstart - 1)].norm() * h[(jstart + 1, jstart)].norm()
                    <= h[(jstart, jstart)].norm() * atol;
            if ilazro || ilazr2 {
                // split the block by zeroing H subdiagonals with row rotations
                let mut scale_subdiag = ilazr2;
                let mut jch = jstart;
                loop {
                    let (c, s, r) = givens(h[(jch, jch)], h[(jch + 1, jch)]);
                    h[(jch, jch)] = r;
                    h[(jch + 1, jch)] = ZERO;
                    left_rot(&mut h, jch, jch + 1, c, s, jch + 1, n);
                    left_rot(&mut t, jch, jch + 1, c, s, jch + 1, n);
                    right_rot(&mut q, jch, jch + 1, c, -s, 0, n);
                    if scale_subdiag {
                        // the partner entry in row jch+1 is exactly zero, so
                        // scaling is the entire update for this column
                        let v = h[(jch, jch - 1)];
                        h[(jch, jch - 1)] = c * v;
                        scale_subdiag = false;
                    }
                    t[(jch + 1, jch)] = ZERO;
                    if t[(jch + 1, jch + 1)].norm() >= btol {
                        break;
                    }
                    t[(jch + 1, jch + 1)] = ZERO;
                    jch += 1;
                    if jch >= ilast {
                        break;
                    }
                }
            } else {
                // push the zero diagonal down one position at a time with
                // row+column rotation pairs until it reaches the bottom
                for jch in jstart..ilast {
                    let (c, s, r) = givens(t[(jch, jch + 1)], t[(jch + 1, jch + 1)]);
                    t[(jch, jch + 1)] = r;
                    t[(jch + 1, jch + 1)] = ZERO;
                    if jch + 2 < n {
                        left_rot(&mut t, jch, jch + 1, c, s, jch + 2, n);
                    }
                    left_rot(&mut h, jch, jch + 1, c, s, jch - 1, n);
                    right_rot(&mut q, jch, jch + 1, c, -s, 0, n);
                    let (c2, s2, r2) = givens(h[(jch + 1, jch)], h[(jch + 1, jch - 1)]);
                    h[(jch + 1, jch)] = r2;
                    h[(jch + 1, jch - 1)] = ZERO;
                    right_rot(&mut h, jch - 1, jch, c2, s2, 0, jch + 1);
                    right_rot(&mut t, jch - 1, jch, c2, s2, 0, jch);
                    right_rot(&mut z, jch - 1, jch, c2, s2, 0, n);
                }
            }
            chased = true;
            break;
        }
        if chased {
            continue 'outer;
        }

        total += 1;
        stall += 1;
        if total > max_total {
            return Err(DenseError::NoConvergence);
        }
        let shift = if stall % 14 == 0 {
            eshift += h[(ilast, ilast - 1)] / t[(ilast - 1, ilast - 1)];
            eshift
        } else {
            qz_shift(&h, &t, ilast)
        };

        // --- single-shift implicit QZ sweep on [lo..=ilast] ---
        let mut x = h[(lo, lo)] - shift * t[(lo, lo)];
        let mut y = h[(lo + 1, lo)];
        for k in lo..ilast {
            let (c, s, _) = givens(x, y);
            if k > lo {
                let r = c * x + s * y;
                h[(k, k - 1)] = r;
                h[(k + 1, k - 1)] = ZERO;
            }
            left_rot(&mut h, k, k + 1, c, s, k, n);
            left_rot(&mut t, k, k + 1, c, s, k, n);
            right_rot(&mut q, k, k + 1, c, -s, 0, n);
            // T picked up fill at (k+1, k): clear it with a column rotation
            let (c2, s2, r2) = givens(t[(k + 1, k + 1)], t[(k + 1, k)]);
            t[(k + 1, k + 1)] = r2;
            t[(k + 1, k)] = ZERO;
            right_rot(&mut t, k, k + 1, c2, s2, 0, k + 1);
            let rhi = n.min(k + 3);
            right_rot(&mut h, k, k + 1, c2, s2, 0, rhi.max(ilast + 1));
            right_rot(&mut z, k, k + 1, c2, s2, 0, n);
            if k + 1 < ilast {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }

    // clean strictly lower parts
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = ZERO;
            t[(i, j)] = ZERO;
        }
    }
    let alpha = (0..n).map(|i| h[(i, i)]).collect();
    let beta = (0..n).map(|i| t[(i, i)]).collect();
    Ok(QzDecomposition {
        s: h,
        t,
        q,
        z,
        alpha,
        beta,
    })
}

/// Right eigenvector of the triangular pencil `(S, T)` for the eigenvalue at
/// diagonal position `i`, expressed in the original basis (`Z z`).
pub fn qz_eigenvector(dec: &QzDecomposition, i: usize) -> Vec<Complex64> {
    let n = dec.s.nrows();
    let lambda = dec.alpha[i] / dec.beta[i];
    let scale = dec.s.max_abs().max(lambda.norm() * dec.t.max_abs()).max(1.0);
    let mut zv = vec![ZERO; n];
    zv[i] = ONE;
    for k in (0..i).rev() {
        let mut acc = ZERO;
        for j in k + 1..=i {
            acc += (dec.s[(k, j)] - lambda * dec.t[(k, j)]) * zv[j];
        }
        let mut denom = dec.s[(k, k)] - lambda * dec.t[(k, k)];
        if denom.norm() < f64::EPSILON * scale {
            denom = Complex64::new(f64::EPSILON * scale, 0.0);
        }
        zv[k] = -acc / denom;
    }
    let x = dec.z.matvec(&zv);
    let nrm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    x.into_iter().map(|v| v / nrm).collect()
}
