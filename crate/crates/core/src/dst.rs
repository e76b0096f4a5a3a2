//! Fast direct solver for the cell-centered Dirichlet Laplacian.
//!
//! With the half-cell ghost closure (ghost value = -cell value, so the
//! face value on the boundary is exactly zero), the 1D operator
//!
//! ```text
//!   (T x)_i = -x_{i-1} + 2 x_i - x_{i+1},   x_{-1} := -x_0, x_n := -x_{n-1}
//! ```
//!
//! has eigenvectors sin((i + 1/2) k pi / n), k = 1..n, with eigenvalues
//! 2 - 2 cos(k pi / n). These are the DST-II / DST-III transform pair, so a
//! two-dimensional Poisson problem separates and solves in O(N log N) with a
//! residual at roundoff level.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// One-dimensional DST-II (forward) / scaled DST-III (inverse) pair of
/// length `n`, realized through a complex FFT of length `4 n`.
pub struct Dst1d {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1d {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(4 * n);
        Dst1d { n, fft }
    }

    /// Forward transform: `out[k-1] = sum_i x[i] sin(k pi (2i+1) / (2n))`
    /// for k = 1..=n.
    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        let mut z = vec![Complex64::default(); 4 * n];
        for (i, &xi) in x.iter().enumerate() {
            z[2 * i + 1] = Complex64::new(xi, 0.0);
        }
        self.fft.process(&mut z);
        // forward FFT kernel is e^{-2 pi i j k / (4n)}; its imaginary part
        // carries -sin
        for k in 1..=n {
            out[k - 1] = -z[k].im;
        }
    }

    /// Inverse of [`forward`]: reconstructs x from the n coefficients. The
    /// top coefficient (k = n) enters with weight 1/2; the overall factor is
    /// 2/n.
    pub fn inverse(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(coeffs.len(), n);
        debug_assert_eq!(out.len(), n);
        let mut z = vec![Complex64::default(); 4 * n];
        for k in 1..=n {
            let c = if k == n { 0.5 } else { 1.0 };
            z[k] = Complex64::new(c * coeffs[k - 1], 0.0);
        }
        self.fft.process(&mut z);
        let scale = 2.0 / n as f64;
        for i in 0..n {
            out[i] = -scale * z[2 * i + 1].im;
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// Direct spectral solver for `lap_h psi = f` on an `nx x ny` cell grid with
/// homogeneous Dirichlet closure on all sides.
pub struct FastPoisson {
    nx: usize,
    ny: usize,
    dst_x: Dst1d,
    dst_y: Dst1d,
    /// (2 - 2 cos(k pi / nx)) / hx^2, k = 1..=nx
    lam_x: Vec<f64>,
    lam_y: Vec<f64>,
}

impl FastPoisson {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64) -> Self {
        let lam = |n: usize, h: f64| -> Vec<f64> {
            (1..=n)
                .map(|k| (2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos()) / (h * h))
                .collect()
        };
        FastPoisson {
            nx,
            ny,
            dst_x: Dst1d::new(nx),
            dst_y: Dst1d::new(ny),
            lam_x: lam(nx, hx),
            lam_y: lam(ny, hy),
        }
    }

    /// Solves `lap_h psi = f` (sign convention: lap_h is the discrete
    /// Laplacian, negative semi-definite). Unique solvability comes from the
    /// Dirichlet closure: every eigenvalue -(lam_x + lam_y) is negative.
    pub fn solve(&self, f: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(f.len(), nx * ny);
        let mut coeff = vec![0.0; nx * ny];

        // transform rows (x-direction)
        let mut row_out = vec![0.0; nx];
        for j in 0..ny {
            self.dst_x.forward(&f[j * nx..(j + 1) * nx], &mut row_out);
            coeff[j * nx..(j + 1) * nx].copy_from_slice(&row_out);
        }
        // transform columns (y-direction), scale, transform back
        let mut col = vec![0.0; ny];
        let mut col_out = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = coeff[j * nx + i];
            }
            self.dst_y.forward(&col, &mut col_out);
            for j in 0..ny {
                col_out[j] /= -(self.lam_x[i] + self.lam_y[j]);
            }
            self.dst_y.inverse(&col_out, &mut col);
            for j in 0..ny {
                coeff[j * nx + i] = col[j];
            }
        }
        let mut psi = vec![0.0; nx * ny];
        let mut row = vec![0.0; nx];
        for j in 0..ny {
            row.copy_from_slice(&coeff[j * nx..(j + 1) * nx]);
            self.dst_x.inverse(&row, &mut row_out);
            psi[j * nx..(j + 1) * nx].copy_from_slice(&row_out);
        }
        psi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dst2(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (1..=n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(i, &xi)| {
                        xi * ((k as f64 * std::f64::consts::PI * (2 * i + 1) as f64)
                            / (2.0 * n as f64))
                            .sin()
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn forward_matches_naive_transform() {
        for n in [1, 2, 3, 5, 8, 17, 32] {
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7 - 1.3).sin()).collect();
            let dst = Dst1d::new(n);
            let mut got = vec![0.0; n];
            dst.forward(&x, &mut got);
            let want = naive_dst2(&x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12 * (1.0 + w.abs()), "n={n} {g} vs {w}");
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for n in [1, 2, 7, 16, 33] {
            let x: Vec<f64> = (0..n).map(|i| (i as f64).cos() + 0.1 * i as f64).collect();
            let dst = Dst1d::new(n);
            let mut c = vec![0.0; n];
            let mut back = vec![0.0; n];
            dst.forward(&x, &mut c);
            dst.inverse(&c, &mut back);
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn eigenvector_relation_holds() {
        // T phi_k = lambda_k phi_k including both boundary rows
        let n = 9;
        for k in 1..=n {
            let theta = k as f64 * std::f64::consts::PI / n as f64;
            let phi: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) * theta).sin()).collect();
            let lambda = 2.0 - 2.0 * theta.cos();
            for i in 0..n {
                let left = if i == 0 { -phi[0] } else { phi[i - 1] };
                let right = if i == n - 1 { -phi[n - 1] } else { phi[i + 1] };
                let t = -left + 2.0 * phi[i] - right;
                assert!((t - lambda * phi[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poisson_solve_has_tiny_residual() {
        let (nx, ny) = (12, 9);
        let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
        let solver = FastPoisson::new(nx, ny, hx, hy);
        let f: Vec<f64> = (0..nx * ny).map(|m| (m * 37 % 11) as f64 - 5.0).collect();
        let psi = solver.solve(&f);
        // apply the discrete Laplacian with ghost = -cell closure
        for j in 0..ny {
            for i in 0..nx {
                let c = psi[j * nx + i];
                let w = if i == 0 { -c } else { psi[j * nx + i - 1] };
                let e = if i == nx - 1 { -c } else { psi[j * nx + i + 1] };
                let s = if j == 0 { -c } else { psi[(j - 1) * nx + i] };
                let n_ = if j == ny - 1 { -c } else { psi[(j + 1) * nx + i] };
                let lap = (w - 2.0 * c + e) / (hx * hx) + (s - 2.0 * c + n_) / (hy * hy);
                assert!(
                    (lap - f[j * nx + i]).abs() < 1e-9,
                    "cell ({i},{j}): {lap} vs {}",
                    f[j * nx + i]
                );
            }
        }
    }
}
