//! Conservative time integration of the weighted system
//!
//! ```text
//!   w u_t       = div [ w       (grad u - u grad psi) ]
//!   w^{-1} v_t  = div [ w^{-1}  (grad v + v grad psi) ]
//!   lap psi     = w u - w^{-1} v,     psi = 0 on the boundary
//! ```
//!
//! with no-flux boundary conditions for both species. Each backward-Euler
//! step freezes the potential and solves one linear parabolic problem per
//! species; an inner Picard loop recomputes the potential from the new
//! densities until the iterates settle. Fluxes are either exponentially
//! fitted (Scharfetter-Gummel, the default: positivity-preserving and exact
//! on discrete Boltzmann equilibria) or centered (kept for order checks).
//!
//! The flux part of every step matrix has zero column sums, so the weighted
//! ion masses telescope exactly; the only drift left is iterative-solver
//! noise, which is projected out after each solve (see `linearized_step`).

use crate::diagnostics::{
    gamma_negative_sup, record_for, theta_from_sigma, weighted_norm, weighted_total,
    DiagnosticsRecord, StabilityFlag,
};
use crate::elliptic::PoissonSolver;
use crate::error::{CoreError, Result};
use crate::field::{kahan_sum, min_value, norm_inf};
use crate::grid::Grid;
use crate::sparse::{bicgstab, pcg, CsrBuilder, SparseOperator};
use crate::transform::State;
use crate::weights::WeightField;

/// Two-point flux discretization of the drift term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxScheme {
    /// Exponential fitting; the implicit step matrix is an M-matrix and is
    /// solved in symmetrized (diagonally scaled) form by CG.
    ScharfetterGummel,
    /// Arithmetic face averaging; second order but not positivity
    /// preserving. The step matrix is mildly nonsymmetric.
    Centered,
}

/// Time-stepping parameters.
#[derive(Debug, Clone, Copy)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub flux_scheme: FluxScheme,
    /// Relative tolerance on successive Picard iterates in weighted L2.
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Interpolation parameter forwarded to the stability diagnostics.
    pub theta_sigma: f64,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(CoreError::InvalidInput(
                "dt and t_end must be positive".into(),
            ));
        }
        if !(self.picard_tol > 0.0) || self.picard_max < 1 {
            return Err(CoreError::InvalidInput(
                "picard_tol must be positive and picard_max >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Bernoulli function z / (e^z - 1), extended by 1 at z = 0.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 - 0.5 * z + z * z / 12.0
    } else {
        z / z.exp_m1()
    }
}

/// Symmetrized off-diagonal factor (z/2) / sinh(z/2) = B(z) e^{z/2}.
fn sym_factor(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 - z * z / 24.0
    } else {
        let h = 0.5 * z;
        h / h.sinh()
    }
}

/// Picard-failure cap: each retry halves dt.
pub const STEP_RETRY_CAP: usize = 10;

/// Per-step solver bookkeeping.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepInfo {
    pub picard_iterations: usize,
    /// Minimum density seen in the raw linear-solver output, before the
    /// roundoff repair (both species).
    pub raw_min: f64,
    /// Mass fraction removed by clipping solver noise, relative to the
    /// species mass (max over species).
    pub clipped_mass_rel: f64,
}

/// One simulation context: grid, weights and the potential solver.
pub struct Stepper<'a> {
    pub grid: &'a Grid,
    pub weights: &'a WeightField,
    pub poisson: &'a PoissonSolver,
    /// Relative tolerance for the species linear systems.
    pub linear_tol: f64,
    pub linear_max_iter: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &'a Grid, weights: &'a WeightField, poisson: &'a PoissonSolver) -> Self {
        Stepper {
            grid,
            weights,
            poisson,
            linear_tol: 1e-13,
            linear_max_iter: 20_000,
        }
    }

    /// Assembles the backward-Euler system for one species with frozen
    /// potential. `drift_sign` is +1 for the anion variable (drift `-u grad
    /// psi` inside the flux) and -1 for the cation variable.
    ///
    /// For the exponentially fitted flux the returned operator is the
    /// symmetrized similarity transform `D M D^{-1}`, `D = diag(e^{-s
    /// psi/2})`, together with the scaling vector `D`; it is symmetric
    /// positive definite. The centered operator is returned as-is.
    fn assemble_species(
        &self,
        cell_w: &[f64],
        face_w: &crate::grid::FaceField,
        psi_bar: &[f64],
        dt: f64,
        drift_sign: f64,
        scheme: FluxScheme,
    ) -> (SparseOperator, Option<Vec<f64>>) {
        let grid = self.grid;
        let n = grid.n_cells();
        let area = grid.cell_area();
        let mut b = CsrBuilder::new(n);
        for (k, &w) in cell_w.iter().enumerate() {
            b.add(k, k, w * area / dt);
        }
        let mut face = |k: usize, l: usize, t: f64| {
            let dpsi = psi_bar[l] - psi_bar[k];
            match scheme {
                FluxScheme::ScharfetterGummel => {
                    let q = sym_factor(dpsi);
                    b.add(k, k, t * bernoulli(-drift_sign * dpsi));
                    b.add(l, l, t * bernoulli(drift_sign * dpsi));
                    b.add(k, l, -t * q);
                    b.add(l, k, -t * q);
                }
                FluxScheme::Centered => {
                    let half = 0.5 * drift_sign * dpsi;
                    b.add(k, k, t * (1.0 + half));
                    b.add(k, l, -t * (1.0 - half));
                    b.add(l, l, t * (1.0 - half));
                    b.add(l, k, -t * (1.0 + half));
                }
            }
        };
        for j in 0..grid.ny {
            for i in 1..grid.nx {
                let t = face_w.x[grid.x_face_idx(i, j)] * grid.hy / grid.hx;
                face(grid.idx(i - 1, j), grid.idx(i, j), t);
            }
        }
        for j in 1..grid.ny {
            for i in 0..grid.nx {
                let t = face_w.y[grid.y_face_idx(i, j)] * grid.hx / grid.hy;
                face(grid.idx(i, j - 1), grid.idx(i, j), t);
            }
        }
        let scale = match scheme {
            FluxScheme::ScharfetterGummel => Some(
                psi_bar
                    .iter()
                    .map(|&p| (-0.5 * drift_sign * p).exp())
                    .collect(),
            ),
            FluxScheme::Centered => None,
        };
        (b.build(), scale)
    }

    fn solve_species(
        &self,
        cell_w: &[f64],
        face_w: &crate::grid::FaceField,
        old: &[f64],
        psi_bar: &[f64],
        dt: f64,
        drift_sign: f64,
        scheme: FluxScheme,
        warm: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        let area = self.grid.cell_area();
        let (op, scale) = self.assemble_species(cell_w, face_w, psi_bar, dt, drift_sign, scheme);
        let rhs: Vec<f64> = old
            .iter()
            .zip(cell_w)
            .map(|(o, w)| o * w * area / dt)
            .collect();
        match scale {
            Some(d) => {
                let b: Vec<f64> = rhs.iter().zip(&d).map(|(r, di)| r * di).collect();
                let x0: Option<Vec<f64>> =
                    warm.map(|w| w.iter().zip(&d).map(|(wi, di)| wi * di).collect());
                let (y, _) = pcg(&op, &b, x0.as_deref(), self.linear_tol, self.linear_max_iter)?;
                Ok(y.iter().zip(&d).map(|(yi, di)| yi / di).collect())
            }
            None => {
                let (x, _) = bicgstab(&op, &rhs, warm, self.linear_tol, self.linear_max_iter)?;
                Ok(x)
            }
        }
    }

    /// Removes iterative-solver noise from a species solve. With the
    /// exponentially fitted flux the exact solution of the linear system is
    /// nonnegative and conserves the weighted mass exactly (zero flux column
    /// sums); negatives and mass drift in the Krylov output are residual
    /// noise. Clipping plus a multiplicative mass restore projects the
    /// output back onto that manifold and returns (raw_min, clipped mass
    /// fraction). The centered scheme may produce genuine negatives, which
    /// are monitored and must not be masked: only the mass restore runs.
    fn repair(
        &self,
        new: &mut [f64],
        cell_w: &[f64],
        mass_target: f64,
        clip: bool,
    ) -> (f64, f64) {
        let area = self.grid.cell_area();
        let raw_min = min_value(new);
        let mut clipped_rel = 0.0;
        if clip && raw_min < 0.0 {
            let clipped: f64 = kahan_sum(
                new.iter()
                    .zip(cell_w)
                    .filter(|(x, _)| **x < 0.0)
                    .map(|(x, w)| -x * w * area),
            );
            for x in new.iter_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
            if mass_target.abs() > 0.0 {
                clipped_rel = clipped / mass_target.abs();
            }
        }
        let mass_now = weighted_total(new, cell_w, area);
        if mass_now != 0.0 {
            let ratio = mass_target / mass_now;
            if ratio.is_finite() && ratio > 0.5 && ratio < 2.0 {
                for x in new.iter_mut() {
                    *x *= ratio;
                }
            }
        }
        (raw_min, clipped_rel)
    }

    /// One backward-Euler solve per species against a frozen potential.
    /// Boundary faces carry no flux. Returns the repaired fields and the
    /// raw solver minima / clipped-mass bookkeeping.
    pub fn linearized_step(
        &self,
        s: &State,
        psi_bar: &[f64],
        dt: f64,
        scheme: FluxScheme,
        warm: Option<(&[f64], &[f64])>,
    ) -> Result<(Vec<f64>, Vec<f64>, StepInfo)> {
        if norm_inf(psi_bar) > 200.0 {
            return Err(CoreError::InvalidInput(
                "frozen potential out of representable range".into(),
            ));
        }
        let area = self.grid.cell_area();
        let w = self.weights;
        let clip = scheme == FluxScheme::ScharfetterGummel;

        let mass_u = weighted_total(&s.u, &w.w_cells, area);
        let mut u_new = self.solve_species(
            &w.w_cells,
            &w.w_faces,
            &s.u,
            psi_bar,
            dt,
            1.0,
            scheme,
            warm.map(|w| w.0),
        )?;
        let (raw_min_u, clip_u) = self.repair(&mut u_new, &w.w_cells, mass_u, clip);

        let mass_v = weighted_total(&s.v, &w.winv_cells, area);
        let mut v_new = self.solve_species(
            &w.winv_cells,
            &w.winv_faces,
            &s.v,
            psi_bar,
            dt,
            -1.0,
            scheme,
            warm.map(|w| w.1),
        )?;
        let (raw_min_v, clip_v) = self.repair(&mut v_new, &w.winv_cells, mass_v, clip);

        Ok((
            u_new,
            v_new,
            StepInfo {
                picard_iterations: 0,
                raw_min: raw_min_u.min(raw_min_v),
                clipped_mass_rel: clip_u.max(clip_v),
            },
        ))
    }

    /// Advances one time step: iterate `psi_k = potential(u_k, v_k)`,
    /// `(u_{k+1}, v_{k+1}) = linearized_step(s, psi_k)` until the update is
    /// small relative to the iterate norms. The returned state carries the
    /// potential recomputed from the accepted densities.
    pub fn picard_step(&self, s: &State, dt: f64, cfg: &SchemeConfig) -> Result<(State, StepInfo)> {
        let area = self.grid.cell_area();
        let w = self.weights;
        let mut u_k = s.u.clone();
        let mut v_k = s.v.clone();
        let mut info = StepInfo::default();
        let mut last_update = f64::INFINITY;
        for k in 1..=cfg.picard_max {
            let psi_bar = self.poisson.solve_psi(w, &u_k, &v_k)?;
            let (u_next, v_next, step_info) =
                self.linearized_step(s, &psi_bar, dt, cfg.flux_scheme, Some((&u_k, &v_k)))?;
            let du: Vec<f64> = u_next.iter().zip(&u_k).map(|(a, b)| a - b).collect();
            let dv: Vec<f64> = v_next.iter().zip(&v_k).map(|(a, b)| a - b).collect();
            let update = weighted_norm(&du, &w.w_cells, area, 2.0)
                + weighted_norm(&dv, &w.winv_cells, area, 2.0);
            let scale = weighted_norm(&u_k, &w.w_cells, area, 2.0)
                + weighted_norm(&v_k, &w.winv_cells, area, 2.0)
                + 1.0;
            u_k = u_next;
            v_k = v_next;
            info.raw_min = step_info.raw_min;
            info.clipped_mass_rel = step_info.clipped_mass_rel;
            last_update = update / scale;
            if update <= cfg.picard_tol * scale {
                let psi = self.poisson.solve_psi(w, &u_k, &v_k)?;
                info.picard_iterations = k;
                return Ok((
                    State {
                        u: u_k,
                        v: v_k,
                        psi,
                        t: s.t + dt,
                    },
                    info,
                ));
            }
        }
        Err(CoreError::PicardNonconvergence {
            max_iterations: cfg.picard_max,
            update: last_update,
        })
    }
}

/// Output cadence and stability-monitor constants for a run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Keep a snapshot every this many accepted steps (0 = endpoints only).
    pub snapshot_every: usize,
    /// C in the envelope polynomial Gamma(H).
    pub gamma_c: f64,
    /// Constant term eps1 in Gamma(H); doubles as the smallness budget.
    pub eps1: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            snapshot_every: 10,
            gamma_c: 1.0,
            eps1: 1e-6,
        }
    }
}

/// Extremal values accumulated over a whole run.
#[derive(Debug, Clone, Copy)]
pub struct RunStats {
    /// Minimum density over all accepted states and cells.
    pub min_u: f64,
    pub min_v: f64,
    /// Minimum raw linear-solver output before the roundoff repair.
    pub raw_min: f64,
    /// Largest clipped-mass fraction in any accepted step.
    pub max_clipped_mass_rel: f64,
    pub accepted_steps: usize,
    pub retries: usize,
}

impl Default for RunStats {
    fn default() -> Self {
        RunStats {
            min_u: f64::INFINITY,
            min_v: f64::INFINITY,
            raw_min: f64::INFINITY,
            max_clipped_mass_rel: 0.0,
            accepted_steps: 0,
            retries: 0,
        }
    }
}

/// Time-ordered simulation output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<State>,
    pub records: Vec<DiagnosticsRecord>,
    pub stats: RunStats,
    /// `max(H(0), eps2)`: the level the stability monitor flags against.
    pub h_threshold: f64,
    pub eps2: f64,
    /// True if any record exceeded the threshold.
    pub stability_warning: bool,
}

/// Marches the weighted system from `initial` to `cfg.t_end`, recording
/// diagnostics after every accepted step. A Picard failure halves the step
/// and retries, up to [`STEP_RETRY_CAP`] halvings, then propagates.
pub fn run(
    initial: &State,
    cfg: &SchemeConfig,
    weights: &WeightField,
    grid: &Grid,
    poisson: &PoissonSolver,
    opts: &RunOptions,
) -> Result<Trajectory> {
    cfg.validate()?;
    let stepper = Stepper::new(grid, weights, poisson);
    let theta = theta_from_sigma(cfg.theta_sigma)?;
    let eps2 = gamma_negative_sup(opts.gamma_c, theta.theta, opts.eps1);
    let area = grid.cell_area();
    let l2u0 = weighted_norm(&initial.u, &weights.w_cells, area, 2.0);
    let l2v0 = weighted_norm(&initial.v, &weights.winv_cells, area, 2.0);
    let h0 = l2u0 * l2u0 + l2v0 * l2v0;
    let h_threshold = h0.max(eps2);

    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut stats = RunStats::default();
    records.push(record_for(initial, weights, grid, 0, h_threshold)?);
    snapshots.push(initial.clone());
    stats.min_u = min_value(&initial.u);
    stats.min_v = min_value(&initial.v);

    let mut state = initial.clone();
    let t_tiny = 1e-12 * cfg.t_end;
    let mut step_idx = 0usize;
    while state.t < cfg.t_end - t_tiny {
        let dt_full = cfg.dt.min(cfg.t_end - state.t);
        let mut dt_try = dt_full;
        let mut attempt = 0usize;
        let (next, info) = loop {
            match stepper.picard_step(&state, dt_try, cfg) {
                Ok(out) => break out,
                Err(CoreError::PicardNonconvergence { max_iterations, update })
                    if attempt < STEP_RETRY_CAP =>
                {
                    let _ = (max_iterations, update);
                    attempt += 1;
                    stats.retries += 1;
                    dt_try *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        state = next;
        step_idx += 1;
        stats.accepted_steps += 1;
        stats.min_u = stats.min_u.min(min_value(&state.u));
        stats.min_v = stats.min_v.min(min_value(&state.v));
        stats.raw_min = stats.raw_min.min(info.raw_min);
        stats.max_clipped_mass_rel = stats.max_clipped_mass_rel.max(info.clipped_mass_rel);
        records.push(record_for(
            &state,
            weights,
            grid,
            info.picard_iterations,
            h_threshold,
        )?);
        if opts.snapshot_every > 0 && step_idx % opts.snapshot_every == 0 {
            snapshots.push(state.clone());
        }
    }
    if snapshots.last().map(|s| s.t) != Some(state.t) {
        snapshots.push(state.clone());
    }
    let stability_warning = records
        .iter()
        .any(|r| r.stability_flag == StabilityFlag::Warning);
    Ok(Trajectory {
        snapshots,
        records,
        stats,
        h_threshold,
        eps2,
        stability_warning,
    })
}

/// Charge-conserving equilibrium: Boltzmann-distributed species with fixed
/// weighted masses, self-consistent with the potential. Damped fixed-point
/// iteration on the potential; the damping halves whenever the update grows.
pub fn solve_ccpb(
    weights: &WeightField,
    grid: &Grid,
    poisson: &PoissonSolver,
    mass_n: f64,
    mass_p: f64,
    tol: f64,
) -> Result<State> {
    if mass_n < 0.0 || mass_p < 0.0 || !(tol > 0.0) {
        return Err(CoreError::InvalidInput(
            "equilibrium needs nonnegative masses and a positive tolerance".into(),
        ));
    }
    let n = grid.n_cells();
    let area = grid.cell_area();
    let max_iter = 5000;
    let mut psi = vec![0.0; n];
    let mut lambda = 0.5;
    let mut prev_update = f64::INFINITY;

    let boltzmann = |psi: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let zu = kahan_sum(
            psi.iter()
                .zip(&weights.w_cells)
                .map(|(p, w)| w * p.exp() * area),
        );
        let zv = kahan_sum(
            psi.iter()
                .zip(&weights.winv_cells)
                .map(|(p, w)| w * (-p).exp() * area),
        );
        let a = if mass_n > 0.0 { mass_n / zu } else { 0.0 };
        let b = if mass_p > 0.0 { mass_p / zv } else { 0.0 };
        (
            psi.iter().map(|p| a * p.exp()).collect(),
            psi.iter().map(|p| b * (-p).exp()).collect(),
        )
    };

    for _it in 0..max_iter {
        let (u, v) = boltzmann(&psi);
        let psi_raw = poisson.solve_psi(weights, &u, &v)?;
        let mut update = 0.0_f64;
        for k in 0..n {
            let next = (1.0 - lambda) * psi[k] + lambda * psi_raw[k];
            update = update.max((next - psi[k]).abs());
            psi[k] = next;
        }
        if update > prev_update {
            lambda = (0.5 * lambda).max(1e-3);
        }
        prev_update = update;
        if update <= tol {
            let (u, v) = boltzmann(&psi);
            let psi_state = poisson.solve_psi(weights, &u, &v)?;
            return Ok(State {
                u,
                v,
                psi: psi_state,
                t: 0.0,
            });
        }
    }
    Err(CoreError::CcpbNonconvergence {
        max_iterations: max_iter,
        update: prev_update,
    })
}
