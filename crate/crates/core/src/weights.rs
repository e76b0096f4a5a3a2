//! Green function, harmonic correction and weight fields.
//!
//! The solver removes the point charges from the potential equation by
//! splitting off `G(x) = sum_j alpha_j log|x - x_j| + H(x)`, where the
//! harmonic part `H` matches the boundary potential. The weight
//!
//! ```text
//!   w(x) = prod_j |x - x_j|^{alpha_j} e^{H(x)} = e^{G(x)}
//! ```
//!
//! multiplies the transformed densities. `w` degenerates (to 0 or infinity)
//! exactly at the charges, so the scheme only ever consumes cell averages of
//! `w` and `1/w` (mass matrices) and face values (transmissibilities); both
//! stay finite and positive for strengths below 2 in two dimensions.

use crate::charges::ChargeSet;
use crate::dst::FastPoisson;
use crate::error::{CoreError, Result};
use crate::field::norm_inf;
use crate::grid::{FaceField, Grid};
use crate::quadrature::{average_rect, gauss5_line_average, QuadratureConfig};
use rayon::prelude::*;

/// Relative residual enforced on the harmonic-extension solve.
pub const HARMONIC_SOLVE_TOL: f64 = 1e-10;

/// Cell-averaged and face-evaluated weight data on a grid.
#[derive(Debug, Clone)]
pub struct WeightField {
    /// Green function at cell centers (cell-average convention on cells that
    /// contain a charge, where the pointwise value is infinite).
    pub g_cells: Vec<f64>,
    /// Harmonic part at cell centers.
    pub h_cells: Vec<f64>,
    /// Cell averages of w.
    pub w_cells: Vec<f64>,
    /// Cell averages of 1/w.
    pub winv_cells: Vec<f64>,
    /// Face values of w (midpoint; 5-point Gauss on faces of charged cells).
    pub w_faces: FaceField,
    /// Face values of 1/w.
    pub winv_faces: FaceField,
}

impl WeightField {
    /// Unit weight on every cell and face (no charges, zero boundary data).
    pub fn uniform(grid: &Grid) -> Self {
        WeightField {
            g_cells: vec![0.0; grid.n_cells()],
            h_cells: vec![0.0; grid.n_cells()],
            w_cells: vec![1.0; grid.n_cells()],
            winv_cells: vec![1.0; grid.n_cells()],
            w_faces: FaceField::constant(grid, 1.0),
            winv_faces: FaceField::constant(grid, 1.0),
        }
    }
}

/// Solves `lap H = 0` with Dirichlet data
/// `H = -sum_j alpha_j log|x - x_j| + g` sampled at boundary-face midpoints.
///
/// The data is finite because charges are strictly interior. The returned
/// field satisfies the five-point Laplacian on interior cells to solver
/// precision.
pub fn solve_harmonic_extension(
    set: &ChargeSet,
    g: &dyn Fn(f64, f64) -> f64,
    grid: &Grid,
) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    let mut rhs = vec![0.0; n];
    let area = grid.cell_area();
    let mut data_scale = 0.0_f64;
    for bf in grid.boundary_faces() {
        let mut d = g(bf.x, bf.y);
        for c in &set.charges {
            let r2 = (bf.x - c.x).powi(2) + (bf.y - c.y).powi(2);
            d -= 0.5 * c.alpha * r2.ln();
        }
        if !d.is_finite() {
            return Err(CoreError::InvalidInput(format!(
                "boundary data not finite at ({}, {})",
                bf.x, bf.y
            )));
        }
        data_scale = data_scale.max(d.abs());
        // ghost elimination against the prescribed face value: the data
        // moves to the right-hand side of the zero-data operator
        rhs[bf.cell] -= 2.0 * bf.length * d / (bf.dist * area);
    }
    let solver = FastPoisson::new(grid.nx, grid.ny, grid.hx, grid.hy);
    let h = solver.solve(&rhs);

    // harmonicity check on cells not touching the boundary closure
    let mut worst = 0.0_f64;
    for j in 1..grid.ny - 1 {
        for i in 1..grid.nx - 1 {
            let k = grid.idx(i, j);
            let lap = (h[k - 1] - 2.0 * h[k] + h[k + 1]) / (grid.hx * grid.hx)
                + (h[k - grid.nx] - 2.0 * h[k] + h[k + grid.nx]) / (grid.hy * grid.hy);
            worst = worst.max(lap.abs());
        }
    }
    let h_scale = norm_inf(&h).max(data_scale).max(1.0);
    let hmin = grid.hx.min(grid.hy);
    let target = 10.0 * HARMONIC_SOLVE_TOL * h_scale * 2.0 / (hmin * hmin);
    if worst > target {
        return Err(CoreError::LinearSolverDivergence {
            iterations: 0,
            residual: worst,
            target,
        });
    }
    Ok(h)
}

/// Bilinear interpolation from cell-center values, clamped to the center
/// lattice near the boundary.
pub fn bilinear_from_cells(values: &[f64], grid: &Grid, x: f64, y: f64) -> f64 {
    let fx = (x - grid.domain.x0) / grid.hx - 0.5;
    let fy = (y - grid.domain.y0) / grid.hy - 0.5;
    let i0 = (fx.floor() as isize).clamp(0, grid.nx as isize - 2) as usize;
    let j0 = (fy.floor() as isize).clamp(0, grid.ny as isize - 2) as usize;
    let tx = (fx - i0 as f64).clamp(0.0, 1.0);
    let ty = (fy - j0 as f64).clamp(0.0, 1.0);
    let k = grid.idx(i0, j0);
    let v00 = values[k];
    let v10 = values[k + 1];
    let v01 = values[k + grid.nx];
    let v11 = values[k + grid.nx + 1];
    v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
}

/// `sum_j alpha_j log|x - x_j|`; -inf/+inf at charge positions.
fn log_singular_part(set: &ChargeSet, x: f64, y: f64) -> f64 {
    let mut s = 0.0;
    for c in &set.charges {
        let r2 = (x - c.x).powi(2) + (y - c.y).powi(2);
        s += 0.5 * c.alpha * r2.ln();
    }
    s
}

/// Pointwise weight `w(x) = e^{G(x)}` with H interpolated bilinearly.
pub fn weight_at(set: &ChargeSet, h_cells: &[f64], grid: &Grid, x: f64, y: f64) -> f64 {
    (log_singular_part(set, x, y) + bilinear_from_cells(h_cells, grid, x, y)).exp()
}

/// Green function at a point: `sum_j alpha_j log|x - x_j| + H(x)`.
pub fn eval_green(
    set: &ChargeSet,
    h_cells: &[f64],
    grid: &Grid,
    x: f64,
    y: f64,
) -> Result<f64> {
    let diam = grid.domain.width().hypot(grid.domain.height());
    for c in &set.charges {
        if (x - c.x).hypot(y - c.y) < 1e-13 * diam {
            return Err(CoreError::EvaluationAtSingularity { x, y });
        }
    }
    Ok(log_singular_part(set, x, y) + bilinear_from_cells(h_cells, grid, x, y))
}

/// Builds cell-averaged and face-evaluated weights from a solved harmonic
/// part. Positivity and finiteness of every stored value is enforced.
pub fn build_weight_field(
    set: &ChargeSet,
    h_cells: Vec<f64>,
    grid: &Grid,
    quad: &QuadratureConfig,
) -> Result<WeightField> {
    let positions = set.positions();
    let n = grid.n_cells();

    let log_w = |x: f64, y: f64| log_singular_part(set, x, y) + bilinear_from_cells(&h_cells, grid, x, y);
    let w_fn = |x: f64, y: f64| log_w(x, y).exp();
    let winv_fn = |x: f64, y: f64| (-log_w(x, y)).exp();

    let cell_results: Vec<Result<(f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % grid.nx, k / grid.nx);
            let rect = grid.cell_rect(i, j);
            let w_avg = average_rect(&w_fn, rect, &positions, quad)?;
            let winv_avg = average_rect(&winv_fn, rect, &positions, quad)?;
            let singular = positions
                .iter()
                .any(|&(px, py)| rect.contains_closed(px, py));
            let g = if singular {
                average_rect(&|x, y| log_singular_part(set, x, y), rect, &positions, quad)?
                    + h_cells[k]
            } else {
                let (cx, cy) = grid.cell_center(i, j);
                log_singular_part(set, cx, cy) + h_cells[k]
            };
            Ok((w_avg, winv_avg, g))
        })
        .collect();

    let mut w_cells = vec![0.0; n];
    let mut winv_cells = vec![0.0; n];
    let mut g_cells = vec![0.0; n];
    for (k, r) in cell_results.into_iter().enumerate() {
        let (w, wi, g) = r?;
        w_cells[k] = w;
        winv_cells[k] = wi;
        g_cells[k] = g;
    }

    // cells whose closed box contains a charge: their four faces take a
    // line-quadrature average instead of the midpoint value
    let mut charged_cells: Vec<(usize, usize)> = Vec::new();
    for &(px, py) in &positions {
        let (i, j) = grid.cell_of(px, py);
        charged_cells.push((i, j));
    }
    let face_is_quadrature = |i: usize, j: usize, x_face: bool| -> bool {
        charged_cells.iter().any(|&(ci, cj)| {
            if x_face {
                j == cj && (i == ci || i == ci + 1)
            } else {
                i == ci && (j == cj || j == cj + 1)
            }
        })
    };

    let mut w_faces = FaceField::constant(grid, 0.0);
    let mut winv_faces = FaceField::constant(grid, 0.0);
    for j in 0..grid.ny {
        for i in 0..=grid.nx {
            let k = grid.x_face_idx(i, j);
            let (xm, ym) = grid.x_face_center(i, j);
            if face_is_quadrature(i, j, true) {
                let a = (xm, ym - 0.5 * grid.hy);
                let b = (xm, ym + 0.5 * grid.hy);
                w_faces.x[k] = gauss5_line_average(&w_fn, a, b);
                winv_faces.x[k] = gauss5_line_average(&winv_fn, a, b);
            } else {
                w_faces.x[k] = w_fn(xm, ym);
                winv_faces.x[k] = winv_fn(xm, ym);
            }
        }
    }
    for j in 0..=grid.ny {
        for i in 0..grid.nx {
            let k = grid.y_face_idx(i, j);
            let (xm, ym) = grid.y_face_center(i, j);
            if face_is_quadrature(i, j, false) {
                let a = (xm - 0.5 * grid.hx, ym);
                let b = (xm + 0.5 * grid.hx, ym);
                w_faces.y[k] = gauss5_line_average(&w_fn, a, b);
                winv_faces.y[k] = gauss5_line_average(&winv_fn, a, b);
            } else {
                w_faces.y[k] = w_fn(xm, ym);
                winv_faces.y[k] = winv_fn(xm, ym);
            }
        }
    }

    for (name, values) in [
        ("w_cells", &w_cells),
        ("winv_cells", &winv_cells),
        ("w_faces.x", &w_faces.x),
        ("w_faces.y", &w_faces.y),
        ("winv_faces.x", &winv_faces.x),
        ("winv_faces.y", &winv_faces.y),
    ] {
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "weight field {name} contains a non-positive or non-finite value"
            )));
        }
    }

    Ok(WeightField {
        g_cells,
        h_cells,
        w_cells,
        winv_cells,
        w_faces,
        winv_faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charges::{validate_charges, Charge};
    use crate::grid::Rect;

    #[test]
    fn constant_boundary_data_gives_constant_h() {
        let grid = Grid::unit(16);
        let set = ChargeSet::empty();
        let h = solve_harmonic_extension(&set, &|_, _| 3.0, &grid).unwrap();
        for &v in &h {
            assert!((v - 3.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn no_charges_zero_data_gives_unit_weight() {
        let grid = Grid::unit(8);
        let set = ChargeSet::empty();
        let h = solve_harmonic_extension(&set, &|_, _| 0.0, &grid).unwrap();
        let wf = build_weight_field(&set, h, &grid, &QuadratureConfig::default()).unwrap();
        for &v in wf.w_cells.iter().chain(&wf.winv_cells) {
            assert_eq!(v, 1.0);
        }
        for &v in wf.w_faces.x.iter().chain(&wf.w_faces.y) {
            assert_eq!(v, 1.0);
        }
        // G coincides with H when there are no charges
        assert_eq!(wf.g_cells, wf.h_cells);
    }

    #[test]
    fn green_closed_form_with_zero_harmonic_part() {
        // analytic reference: single charge, H forced to zero
        let grid = Grid::new(Rect::new(-1.0, -1.0, 1.0, 1.0).unwrap(), 16, 16).unwrap();
        let set = validate_charges(&[Charge::new(0.0, 0.0, 0.5)], &grid.domain).unwrap();
        let h = vec![0.0; grid.n_cells()];
        let g = eval_green(&set, &h, &grid, 0.25, 0.0).unwrap();
        // 0.5 ln(1/4) = -ln 2
        assert!((g - 0.5 * 0.25_f64.ln()).abs() < 1e-14);
        assert!((g + 0.6931471805599453).abs() < 1e-10);
    }

    #[test]
    fn green_rejects_singular_point() {
        let grid = Grid::unit(8);
        let set = validate_charges(&[Charge::new(0.5, 0.5, 0.5)], &Rect::UNIT).unwrap();
        let h = vec![0.0; grid.n_cells()];
        assert!(matches!(
            eval_green(&set, &h, &grid, 0.5, 0.5),
            Err(CoreError::EvaluationAtSingularity { .. })
        ));
    }

    #[test]
    fn opposite_charges_cancel_at_equidistant_point() {
        let grid = Grid::unit(16);
        let set = validate_charges(
            &[Charge::new(0.25, 0.5, 0.3), Charge::new(0.75, 0.5, -0.3)],
            &Rect::UNIT,
        )
        .unwrap();
        let h: Vec<f64> = (0..grid.n_cells()).map(|k| 0.1 * k as f64).collect();
        let g = eval_green(&set, &h, &grid, 0.5, 0.9).unwrap();
        let h_interp = bilinear_from_cells(&h, &grid, 0.5, 0.9);
        assert!((g - h_interp).abs() < 1e-12);
    }

    #[test]
    fn constant_weight_cells_have_reciprocal_averages() {
        let grid = Grid::unit(8);
        let set = ChargeSet::empty();
        let h = solve_harmonic_extension(&set, &|_, _| 2.0, &grid).unwrap();
        let wf = build_weight_field(&set, h, &grid, &QuadratureConfig::default()).unwrap();
        for (w, wi) in wf.w_cells.iter().zip(&wf.winv_cells) {
            assert!((w * wi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bilinear_reproduces_linear_fields() {
        let grid = Grid::unit(8);
        let vals: Vec<f64> = (0..grid.n_cells())
            .map(|k| {
                let (x, y) = grid.cell_center(k % 8, k / 8);
                2.0 * x - 3.0 * y + 0.5
            })
            .collect();
        let v = bilinear_from_cells(&vals, &grid, 0.4, 0.6);
        assert!((v - (2.0 * 0.4 - 3.0 * 0.6 + 0.5)).abs() < 1e-14);
    }
}
