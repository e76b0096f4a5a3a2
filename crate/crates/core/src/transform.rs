//! Maps between physical variables (ion concentrations and the full
//! potential) and the weighted variables the solver evolves.
//!
//! Pointwise, `u = c_n / w`, `v = w c_p` and `psi = phi - G`. On the grid
//! the maps use one weight representative per cell and species: the anion
//! side divides by the cell average of `w`, the cation side divides by the
//! cell average of `1/w`. Multiplication by a degenerate pointwise weight
//! never happens, every stored value stays finite, and the discrete ion
//! masses `sum w u |K|` and `sum w^{-1} v |K|` equal the physical masses
//! exactly. On singularity-free cells the convention agrees with the
//! pointwise transform to second order in the cell size.

use crate::elliptic::PoissonSolver;
use crate::error::{CoreError, Result};
use crate::field::min_value;
use crate::grid::Grid;
use crate::weights::WeightField;

/// Physical fields at one instant: ion concentrations and potential.
#[derive(Debug, Clone)]
pub struct PhysicalState {
    pub c_n: Vec<f64>,
    pub c_p: Vec<f64>,
    pub phi: Vec<f64>,
    pub t: f64,
}

/// Weighted fields at one instant; the solver's state.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub psi: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        State {
            u: vec![0.0; n],
            v: vec![0.0; n],
            psi: vec![0.0; n],
            t: 0.0,
        }
    }
}

pub fn physical_to_weighted(p: &PhysicalState, weights: &WeightField) -> State {
    let n = p.c_n.len();
    let mut s = State::zeros(n);
    s.t = p.t;
    for k in 0..n {
        s.u[k] = p.c_n[k] / weights.w_cells[k];
        s.v[k] = p.c_p[k] / weights.winv_cells[k];
        s.psi[k] = p.phi[k] - weights.g_cells[k];
    }
    s
}

pub fn weighted_to_physical(s: &State, weights: &WeightField) -> PhysicalState {
    let n = s.u.len();
    let mut p = PhysicalState {
        c_n: vec![0.0; n],
        c_p: vec![0.0; n],
        phi: vec![0.0; n],
        t: s.t,
    };
    for k in 0..n {
        p.c_n[k] = s.u[k] * weights.w_cells[k];
        p.c_p[k] = s.v[k] * weights.winv_cells[k];
        p.phi[k] = s.psi[k] + weights.g_cells[k];
    }
    p
}

/// Norms of the transformed initial data, reported against the configured
/// smallness budget.
#[derive(Debug, Clone, Copy)]
pub struct InitialReport {
    pub l2w_u0: f64,
    pub l2winv_v0: f64,
    /// `l2w_u0^2 + l2winv_v0^2`
    pub h0: f64,
    pub budget: f64,
    pub within_budget: bool,
}

/// Transforms nonnegative initial concentrations and fixes the initial
/// potential from the coupled Poisson equation (never from user input).
pub fn prepare_initial(
    c_n0: &[f64],
    c_p0: &[f64],
    weights: &WeightField,
    grid: &Grid,
    solver: &PoissonSolver,
    budget: f64,
) -> Result<(State, InitialReport)> {
    for (species, field) in [("c_n0", c_n0), ("c_p0", c_p0)] {
        let min = min_value(field);
        if min < 0.0 {
            return Err(CoreError::NegativeInitialData {
                species,
                count: field.iter().filter(|&&x| x < 0.0).count(),
                min,
            });
        }
    }
    let n = grid.n_cells();
    let mut state = State::zeros(n);
    for k in 0..n {
        state.u[k] = c_n0[k] / weights.w_cells[k];
        state.v[k] = c_p0[k] / weights.winv_cells[k];
    }
    state.psi = solver.solve_psi(weights, &state.u, &state.v)?;

    let area = grid.cell_area();
    let l2w_u0 = crate::diagnostics::weighted_norm(&state.u, &weights.w_cells, area, 2.0);
    let l2winv_v0 = crate::diagnostics::weighted_norm(&state.v, &weights.winv_cells, area, 2.0);
    let h0 = l2w_u0 * l2w_u0 + l2winv_v0 * l2winv_v0;
    let report = InitialReport {
        l2w_u0,
        l2winv_v0,
        h0,
        budget,
        within_budget: h0 < budget,
    };
    Ok((state, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::POISSON_TOL;

    fn uniform_setup(n: usize) -> (Grid, WeightField, PoissonSolver) {
        let grid = Grid::unit(n);
        let weights = WeightField::uniform(&grid);
        let solver = PoissonSolver::new(&grid, POISSON_TOL);
        (grid, weights, solver)
    }

    #[test]
    fn identity_transform_without_charges() {
        let (grid, weights, _) = uniform_setup(8);
        let n = grid.n_cells();
        let p = PhysicalState {
            c_n: (0..n).map(|k| k as f64 * 0.1).collect(),
            c_p: (0..n).map(|k| 1.0 + (k % 3) as f64).collect(),
            phi: (0..n).map(|k| (k as f64).sin()).collect(),
            t: 0.5,
        };
        let s = physical_to_weighted(&p, &weights);
        assert_eq!(s.u, p.c_n);
        assert_eq!(s.v, p.c_p);
        assert_eq!(s.psi, p.phi);
        assert_eq!(s.t, 0.5);
    }

    #[test]
    fn zero_state_maps_to_green_potential() {
        let (grid, mut weights, _) = uniform_setup(8);
        for (k, g) in weights.g_cells.iter_mut().enumerate() {
            *g = k as f64 * 0.01;
        }
        let s = State::zeros(grid.n_cells());
        let p = weighted_to_physical(&s, &weights);
        assert!(p.c_n.iter().all(|&x| x == 0.0));
        assert!(p.c_p.iter().all(|&x| x == 0.0));
        assert_eq!(p.phi, weights.g_cells);
    }

    #[test]
    fn unit_weighted_state_recovers_cell_averages() {
        let (grid, mut weights, _) = uniform_setup(8);
        for k in 0..grid.n_cells() {
            weights.w_cells[k] = 1.0 + 0.25 * (k % 5) as f64;
            weights.winv_cells[k] = 1.0 / (1.0 + 0.1 * (k % 7) as f64);
        }
        let mut s = State::zeros(grid.n_cells());
        s.u.fill(1.0);
        s.v.fill(1.0);
        let p = weighted_to_physical(&s, &weights);
        assert_eq!(p.c_n, weights.w_cells);
        assert_eq!(p.c_p, weights.winv_cells);
    }

    #[test]
    fn zero_initial_data_gives_zero_state() {
        let (grid, weights, solver) = uniform_setup(8);
        let zero = vec![0.0; grid.n_cells()];
        let (s, report) =
            prepare_initial(&zero, &zero, &weights, &grid, &solver, 1e-6).unwrap();
        assert!(s.u.iter().all(|&x| x == 0.0));
        assert!(s.psi.iter().all(|&x| x == 0.0));
        assert_eq!(report.h0, 0.0);
        assert!(report.within_budget);
    }

    #[test]
    fn electroneutral_constant_data() {
        let (grid, weights, solver) = uniform_setup(8);
        let ones = vec![1.0; grid.n_cells()];
        let (s, _) = prepare_initial(&ones, &ones, &weights, &grid, &solver, 1e-6).unwrap();
        assert!(s.u.iter().all(|&x| x == 1.0));
        assert!(s.v.iter().all(|&x| x == 1.0));
        assert!(s.psi.iter().all(|&x| x.abs() < 1e-12));
    }

    #[test]
    fn negative_initial_data_rejected() {
        let (grid, weights, solver) = uniform_setup(8);
        let mut c = vec![0.0; grid.n_cells()];
        c[3] = -1e-9;
        let zero = vec![0.0; grid.n_cells()];
        assert!(matches!(
            prepare_initial(&c, &zero, &weights, &grid, &solver, 1e-6),
            Err(CoreError::NegativeInitialData { species: "c_n0", .. })
        ));
    }
}
