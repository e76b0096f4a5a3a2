//! Compressed-row sparse operators and Krylov solvers.
//!
//! Everything here targets the small structured systems produced by the
//! five-point assembly: symmetric positive definite systems go through
//! Jacobi-preconditioned CG, the nonsymmetric centered-flux systems through
//! BiCGStab.

use crate::error::{CoreError, Result};
use crate::field::{axpy, dot, norm2};

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for row in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[row] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                if self.col_idx[k] == row {
                    d[row] = self.values[k];
                }
            }
        }
        d
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|row| {
                self.row_ptr[row]..self.row_ptr[row + 1]
            })
            .map(|r| r.map(|k| self.values[k]).sum())
            .collect()
    }

    /// Maximum relative asymmetry max |a_ij - a_ji| / max |a_ij|.
    pub fn asymmetry(&self) -> f64 {
        let mut max_entry = 0.0_f64;
        let mut max_gap = 0.0_f64;
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[k];
                max_entry = max_entry.max(self.values[k].abs());
                let transposed = self.get(col, row);
                max_gap = max_gap.max((self.values[k] - transposed).abs());
            }
        }
        if max_entry == 0.0 {
            0.0
        } else {
            max_gap / max_entry
        }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        for k in self.row_ptr[row]..self.row_ptr[row + 1] {
            if self.col_idx[k] == col {
                return self.values[k];
            }
        }
        0.0
    }

    pub fn entries(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }
}

/// Accumulating builder; repeated (row, col) contributions are summed.
#[derive(Debug)]
pub struct CsrBuilder {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl CsrBuilder {
    pub fn new(n: usize) -> Self {
        CsrBuilder {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        let entries = &mut self.rows[row];
        // rows of the five-point stencil hold <= 5 entries; linear scan wins
        for e in entries.iter_mut() {
            if e.0 == col {
                e.1 += value;
                return;
            }
        }
        entries.push((col, value));
    }

    pub fn build(mut self) -> SparseOperator {
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut self.rows {
            row.sort_unstable_by_key(|e| e.0);
            for &(c, v) in row.iter() {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD systems.
///
/// Stops when ||b - Ax||_2 <= tol * ||b||_2. `x0` warm-starts the iteration.
pub fn pcg(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n();
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let target = tol * norm_b;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.apply(&x);
        for i in 0..n {
            r[i] -= ax[i];
        }
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        if res <= target {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(CoreError::LinearSolverDivergence {
                iterations: it,
                residual: res,
                target,
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        res = norm2(&r);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if res <= target {
        Ok((
            x,
            SolveStats {
                iterations: max_iter,
                residual: res,
            },
        ))
    } else {
        Err(CoreError::LinearSolverDivergence {
            iterations: max_iter,
            residual: res,
            target,
        })
    }
}

/// Jacobi-preconditioned BiCGStab for the (mildly) nonsymmetric systems of
/// the centered flux scheme.
pub fn bicgstab(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n();
    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let target = tol * norm_b;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = b.to_vec();
    {
        let ax = a.apply(&x);
        for i in 0..n {
            r[i] -= ax[i];
        }
    }
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut res = norm2(&r);

    for it in 0..max_iter {
        if res <= target {
            return Ok((
                x,
                SolveStats {
                    iterations: it,
                    residual: res,
                },
            ));
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < f64::MIN_POSITIVE || !rho_new.is_finite() {
            return Err(CoreError::LinearSolverDivergence {
                iterations: it,
                residual: res,
                target,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat: Vec<f64> = p.iter().zip(&inv_diag).map(|(pi, di)| pi * di).collect();
        a.matvec(&p_hat, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) <= target {
            axpy(alpha, &p_hat, &mut x);
            let ax = a.apply(&x);
            let res_fin = norm2(
                &b.iter()
                    .zip(&ax)
                    .map(|(bi, ai)| bi - ai)
                    .collect::<Vec<_>>(),
            );
            return Ok((
                x,
                SolveStats {
                    iterations: it + 1,
                    residual: res_fin,
                },
            ));
        }
        let s_hat: Vec<f64> = s.iter().zip(&inv_diag).map(|(si, di)| si * di).collect();
        let t = a.apply(&s_hat);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            return Err(CoreError::LinearSolverDivergence {
                iterations: it,
                residual: res,
                target,
            });
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r);
    }
    if res <= target {
        Ok((
            x,
            SolveStats {
                iterations: max_iter,
                residual: res,
            },
        ))
    } else {
        Err(CoreError::LinearSolverDivergence {
            iterations: max_iter,
            residual: res,
            target,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spd() -> SparseOperator {
        // 1D Dirichlet Laplacian, n = 5
        let mut b = CsrBuilder::new(5);
        for i in 0..5 {
            b.add(i, i, 2.0);
            if i > 0 {
                b.add(i, i - 1, -1.0);
            }
            if i < 4 {
                b.add(i, i + 1, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn builder_accumulates_and_sorts() {
        let mut b = CsrBuilder::new(3);
        b.add(0, 2, 1.0);
        b.add(0, 0, 2.0);
        b.add(0, 2, 0.5);
        let a = b.build();
        assert_eq!(a.get(0, 2), 1.5);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn pcg_solves_spd() {
        let a = small_spd();
        let b = vec![1.0, 0.0, 2.0, 0.0, 1.0];
        let (x, stats) = pcg(&a, &b, None, 1e-14, 100).unwrap();
        let r = a.apply(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
        assert!(stats.iterations <= 5);
    }

    #[test]
    fn pcg_zero_rhs_returns_zero() {
        let a = small_spd();
        let (x, stats) = pcg(&a, &[0.0; 5], None, 1e-12, 10).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        let mut builder = CsrBuilder::new(4);
        let dense = [
            [4.0, -1.0, 0.0, 0.3],
            [-1.2, 4.0, -0.8, 0.0],
            [0.0, -1.1, 4.0, -0.9],
            [0.2, 0.0, -1.0, 4.0],
        ];
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    builder.add(i, j, v);
                }
            }
        }
        let a = builder.build();
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let (x, _) = bicgstab(&a, &b, None, 1e-13, 200).unwrap();
        let r = a.apply(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-11);
        }
    }

    #[test]
    fn warm_start_cuts_iterations() {
        let a = small_spd();
        let b = vec![1.0, 2.0, 3.0, 2.0, 1.0];
        let (x, _) = pcg(&a, &b, None, 1e-14, 100).unwrap();
        let (_, stats) = pcg(&a, &b, Some(&x), 1e-14, 100).unwrap();
        assert_eq!(stats.iterations, 0);
    }
}
