//! Complex sparse matrices in triplet and compressed-row form.
//!
//! Assembly accumulates duplicate entries in a canonical order (sorted by
//! value within each position), so the stored matrix is bit-identical no
//! matter how the contributing elements were visited.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

/// Triplet (coordinate) accumulator used while building a matrix.
#[derive(Debug, Clone)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(u32, u32, Complex64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Triplets {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    /// Adds `value` at `(row, col)`. Duplicates are merged by `to_csr`.
    pub fn push(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row as u32, col as u32, value));
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Compresses into CSR, summing duplicates.
    ///
    /// Duplicate contributions at one position are summed in value order,
    /// which makes the result independent of insertion order.
    pub fn to_csr(mut self) -> CsMat {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(cmp_c64(&a.2, &b.2)));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<Complex64> = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            let (r, c, _) = self.entries[i];
            let mut sum = Complex64::new(0.0, 0.0);
            while i < self.entries.len() && self.entries[i].0 == r && self.entries[i].1 == c {
                sum += self.entries[i].2;
                i += 1;
            }
            row_ptr[r as usize + 1] += 1;
            col_idx.push(c);
            values.push(sum);
        }
        for r in 0..self.nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsMat {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

fn cmp_c64(a: &Complex64, b: &Complex64) -> core::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Compressed sparse row matrix over `Complex64`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsMat {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<Complex64>,
}

impl CsMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsMat {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, Complex64::new(1.0, 0.0));
        }
        t.to_csr()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[Complex64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Entry at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(p) => vals[p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[i] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// Maximum absolute row sum (the matrix infinity norm).
    pub fn inf_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (_, vals) = self.row(i);
            let s: f64 = vals.iter().map(|v| v.norm()).sum();
            if s > worst {
                worst = s;
            }
        }
        worst
    }

    pub fn transpose(&self) -> CsMat {
        let mut t = Triplets::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push(*c as usize, i, *v);
            }
        }
        t.to_csr()
    }

    /// `self - sigma * other`, matching dimensions required.
    pub fn sub_scaled(&self, sigma: Complex64, other: &CsMat) -> CsMat {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut t = Triplets::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push(i, *c as usize, *v);
            }
            let (cols, vals) = other.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push(i, *c as usize, -sigma * v);
            }
        }
        t.to_csr()
    }

    /// Structurally nonzero row count (rows with at least one entry).
    pub fn nonzero_rows(&self) -> usize {
        (0..self.nrows)
            .filter(|&i| self.row_ptr[i + 1] > self.row_ptr[i])
            .count()
    }
}

impl fmt::Display for CsMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}x{} sparse, {} nnz", self.nrows, self.ncols, self.nnz())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicate_accumulation_is_insertion_order_independent() {
        let build = |order: &[usize]| {
            let entries = [
                (0usize, 0usize, c(1.0e16, 0.0)),
                (0, 0, c(1.0, 0.0)),
                (0, 0, c(-1.0e16, 0.0)),
            ];
            let mut t = Triplets::new(2, 2);
            for &k in order {
                let (r, cidx, v) = entries[k];
                t.push(r, cidx, v);
            }
            t.to_csr()
        };
        let a = build(&[0, 1, 2]);
        let b = build(&[2, 0, 1]);
        let d = build(&[1, 2, 0]);
        assert_eq!(a, b);
        assert_eq!(a, d);
    }

    #[test]
    fn matvec_and_inf_norm() {
        let mut t = Triplets::new(2, 3);
        t.push(0, 0, c(1.0, 2.0));
        t.push(0, 2, c(0.0, -1.0));
        t.push(1, 1, c(3.0, 4.0));
        let a = t.to_csr();
        let x = [c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
        let y = a.matvec_alloc(&x);
        assert_eq!(y[0], c(1.0, 2.0) + c(0.0, -2.0));
        assert_eq!(y[1], c(0.0, 1.0) * c(3.0, 4.0));
        // rows sums: |1+2i| + |i| = sqrt(5)+1, |3+4i| = 5
        assert!((a.inf_norm() - 5.0).abs() < 1e-15);
        assert_eq!(a.get(0, 1), c(0.0, 0.0));
        assert_eq!(a.get(1, 1), c(3.0, 4.0));
    }

    #[test]
    fn transpose_roundtrip() {
        let mut t = Triplets::new(3, 2);
        t.push(2, 0, c(1.0, 1.0));
        t.push(0, 1, c(2.0, 0.0));
        let a = t.to_csr();
        let att = a.transpose().transpose();
        assert_eq!(a, att);
    }
}
