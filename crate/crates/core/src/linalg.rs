//! Sparse assembly and direct solves.
//!
//! Systems are assembled with complex entries. When every entry is real the
//! real factorization is used (real and imaginary right-hand sides as two
//! columns); otherwise the equivalent real block system
//! `[[Re M, -Im M], [Im M, Re M]]` of twice the size is factored.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative residual accepted from a direct solve.
pub const SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct Triplets {
    n: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets { n, entries: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, v: C64) {
        debug_assert!(row < self.n && col < self.n);
        if v != C64::new(0.0, 0.0) {
            self.entries.push((row, col, v));
        }
    }

    pub fn push_real(&mut self, row: usize, col: usize, v: f64) {
        self.push(row, col, C64::new(v, 0.0));
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    /// Entries of `row`, duplicates summed, sorted by column.
    pub fn row(&self, row: usize) -> Vec<(usize, C64)> {
        let mut out: Vec<(usize, C64)> = self
            .entries
            .iter()
            .filter(|e| e.0 == row)
            .map(|e| (e.1, e.2))
            .collect();
        out.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, C64)> = Vec::with_capacity(out.len());
        for (c, v) in out {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged
    }

    /// All rows, duplicates summed, each sorted by column.
    pub fn rows(&self) -> Vec<Vec<(usize, C64)>> {
        let mut out: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.n];
        for &(r, c, v) in &self.entries {
            out[r].push((c, v));
        }
        for row in &mut out {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, C64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            *row = merged;
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im == 0.0)
    }

    /// Dense copy; intended for small operators.
    pub fn to_dense(&self) -> Mat<faer::c64> {
        let mut m = Mat::<faer::c64>::zeros(self.n, self.n);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }
}

/// A factored sparse system.
pub struct Factored {
    n: usize,
    kind: FactorKind,
}

enum FactorKind {
    Real(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Block(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

pub fn factor(m: &Triplets) -> Result<Factored> {
    let n = m.n;
    if m.is_real() {
        let t: Vec<Triplet<usize, usize, f64>> = m.entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v.re)).collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &t)
            .map_err(|e| Error::Singular(format!("sparse assembly failed: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Singular(format!("sparse LU failed: {e:?}")))?;
        Ok(Factored { n, kind: FactorKind::Real(lu) })
    } else {
        let mut t = Vec::with_capacity(4 * m.entries.len());
        for &(r, c, v) in &m.entries {
            if v.re != 0.0 {
                t.push(Triplet::new(r, c, v.re));
                t.push(Triplet::new(r + n, c + n, v.re));
            }
            if v.im != 0.0 {
                t.push(Triplet::new(r, c + n, -v.im));
                t.push(Triplet::new(r + n, c, v.im));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(2 * n, 2 * n, &t)
            .map_err(|e| Error::Singular(format!("sparse assembly failed: {e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::Singular(format!("sparse LU failed: {e:?}")))?;
        Ok(Factored { n, kind: FactorKind::Block(lu) })
    }
}

impl Factored {
    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.len() });
        }
        let x: Vec<C64> = match &self.kind {
            FactorKind::Real(lu) => {
                let rhs = Mat::from_fn(n, 2, |i, j| if j == 0 { b[i].re } else { b[i].im });
                let sol = lu.solve(&rhs);
                (0..n).map(|i| C64::new(sol[(i, 0)], sol[(i, 1)])).collect()
            }
            FactorKind::Block(lu) => {
                let rhs = Mat::from_fn(2 * n, 1, |i, _| if i < n { b[i].re } else { b[i - n].im });
                let sol = lu.solve(&rhs);
                (0..n).map(|i| C64::new(sol[(i, 0)], sol[(i + n, 0)])).collect()
            }
        };
        if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Singular("solve produced nonfinite values".into()));
        }
        Ok(x)
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖Mx - b‖ / max(‖b‖, tiny)`.
pub fn relative_residual(m: &Triplets, x: &[C64], b: &[C64]) -> f64 {
    let r: Vec<C64> = m.matvec(x).iter().zip(b).map(|(a, b)| a - b).collect();
    let nb = norm2(b);
    let nr = norm2(&r);
    if nb == 0.0 {
        nr
    } else {
        nr / nb
    }
}

/// Factor, solve and check the residual.
pub fn solve_checked(m: &Triplets, b: &[C64]) -> Result<(Vec<C64>, f64)> {
    let f = factor(m)?;
    let x = f.solve(b)?;
    let res = relative_residual(m, &x, b);
    if !(res <= SOLVE_TOL) {
        return Err(Error::Residual { residual: res, tol: SOLVE_TOL });
    }
    Ok((x, res))
}

/// Sparse Kronecker product `A ⊗ B`.
pub fn kron(a: &Triplets, b: &Triplets) -> Triplets {
    let mut out = Triplets::new(a.n * b.n);
    out.entries.reserve(a.entries.len() * b.entries.len());
    for &(ra, ca, va) in &a.entries {
        for &(rb, cb, vb) in &b.entries {
            out.push(ra * b.n + rb, ca * b.n + cb, va * vb);
        }
    }
    out
}

pub fn identity(n: usize) -> Triplets {
    let mut t = Triplets::new(n);
    for i in 0..n {
        t.push_real(i, i, 1.0);
    }
    t
}

impl Triplets {
    /// Conjugate transpose.
    pub fn adjoint(&self) -> Triplets {
        Triplets { n: self.n, entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect() }
    }

    /// `self += s · other`.
    pub fn add_scaled(&mut self, other: &Triplets, s: C64) {
        assert_eq!(self.n, other.n);
        for &(r, c, v) in &other.entries {
            self.push(r, c, v * s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn real_and_block_paths_agree_with_hand_solution() {
        // [[2, 1], [0, 4]] x = [1, 2] -> x = [0.25, 0.5]
        let mut m = Triplets::new(2);
        m.push_real(0, 0, 2.0);
        m.push_real(0, 1, 1.0);
        m.push_real(1, 1, 4.0);
        let (x, _) = solve_checked(&m, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!((x[0] - c(0.25, 0.0)).norm() < 1e-15 && (x[1] - c(0.5, 0.0)).norm() < 1e-15, "{x:?}");

        // (1 + i) x = 2 -> x = 1 - i
        let mut z = Triplets::new(1);
        z.push(0, 0, c(1.0, 1.0));
        let (x, _) = solve_checked(&z, &[c(2.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn kron_of_identities() {
        let k = kron(&identity(3), &identity(2));
        assert_eq!(k.n(), 6);
        let x: Vec<C64> = (0..6).map(|i| c(i as f64, 0.0)).collect();
        assert_eq!(k.matvec(&x), x);
    }

    #[test]
    fn singular_is_reported() {
        let mut m = Triplets::new(2);
        m.push_real(0, 0, 1.0);
        m.push_real(0, 1, 1.0);
        m.push_real(1, 0, 1.0);
        m.push_real(1, 1, 1.0);
        assert!(solve_checked(&m, &[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
    }
}
