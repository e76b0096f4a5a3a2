//! Singularity-aware adaptive quadrature on rectangles.
//!
//! Panels are estimated with tensor Gauss 3x3 and refined dyadically. A
//! panel holding a singular point in its interior is never evaluated
//! directly: it is split at the point, so every descendant sees the
//! singularity at a corner, where all Gauss nodes stay at positive distance.
//! The refinement therefore grades geometrically into each singular point.
//!
//! Integrands are assumed nonnegative (weights and their reciprocals), which
//! makes the relative-tolerance bookkeeping meaningful.

use crate::error::{CoreError, Result};
use crate::grid::Rect;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    /// Relative tolerance on the panel-refinement change.
    pub rel_tol: f64,
    /// Subdivision cap (levels below the starting rectangle).
    pub max_depth: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-8,
            max_depth: 20,
        }
    }
}

const G3_NODES: [f64; 3] = [-0.774596669241483_4, 0.0, 0.774596669241483_4];
const G3_WEIGHTS: [f64; 3] = [
    0.555555555555555_6,
    0.888888888888888_9,
    0.555555555555555_6,
];

const G5_NODES: [f64; 5] = [
    -0.906179845938664_0,
    -0.538469310105683_1,
    0.0,
    0.538469310105683_1,
    0.906179845938664_0,
];
const G5_WEIGHTS: [f64; 5] = [
    0.236926885056189_1,
    0.478628670499366_5,
    0.568888888888888_9,
    0.478628670499366_5,
    0.236926885056189_1,
];

fn gauss9<F: Fn(f64, f64) -> f64>(f: &F, r: &Rect) -> f64 {
    let cx = 0.5 * (r.x0 + r.x1);
    let cy = 0.5 * (r.y0 + r.y1);
    let sx = 0.5 * r.width();
    let sy = 0.5 * r.height();
    let mut acc = 0.0;
    for (i, &xi) in G3_NODES.iter().enumerate() {
        let x = cx + sx * xi;
        for (j, &eta) in G3_NODES.iter().enumerate() {
            acc += G3_WEIGHTS[i] * G3_WEIGHTS[j] * f(x, cy + sy * eta);
        }
    }
    acc * sx * sy
}

/// Average of f along the segment a--b by 5-point Gauss.
pub fn gauss5_line_average<F: Fn(f64, f64) -> f64>(f: &F, a: (f64, f64), b: (f64, f64)) -> f64 {
    let cx = 0.5 * (a.0 + b.0);
    let cy = 0.5 * (a.1 + b.1);
    let dx = 0.5 * (b.0 - a.0);
    let dy = 0.5 * (b.1 - a.1);
    let mut acc = 0.0;
    for (k, &t) in G5_NODES.iter().enumerate() {
        acc += G5_WEIGHTS[k] * f(cx + dx * t, cy + dy * t);
    }
    acc * 0.5
}

/// Where a singular point sits relative to a panel.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PointPlacement {
    Outside,
    Corner,
    /// On the closed panel but not at a corner (interior or edge); the panel
    /// is split at this point.
    Inside(f64, f64),
}

fn placement(r: &Rect, points: &[(f64, f64)]) -> PointPlacement {
    for &(px, py) in points {
        if px < r.x0 || px > r.x1 || py < r.y0 || py > r.y1 {
            continue;
        }
        let on_x_edge = px == r.x0 || px == r.x1;
        let on_y_edge = py == r.y0 || py == r.y1;
        if on_x_edge && on_y_edge {
            return PointPlacement::Corner;
        }
        return PointPlacement::Inside(px, py);
    }
    PointPlacement::Outside
}

fn split_at(r: &Rect, px: f64, py: f64, out: &mut Vec<Rect>) {
    out.clear();
    let xs = [r.x0, px.clamp(r.x0, r.x1), r.x1];
    let ys = [r.y0, py.clamp(r.y0, r.y1), r.y1];
    for k in 0..2 {
        for l in 0..2 {
            if xs[k + 1] > xs[k] && ys[l + 1] > ys[l] {
                out.push(Rect {
                    x0: xs[k],
                    y0: ys[l],
                    x1: xs[k + 1],
                    y1: ys[l + 1],
                });
            }
        }
    }
}

struct Worker<'a, F: Fn(f64, f64) -> f64> {
    f: &'a F,
    singular: &'a [(f64, f64)],
    tol_leaf: f64,
    max_depth: usize,
    unresolved: f64,
}

impl<'a, F: Fn(f64, f64) -> f64> Worker<'a, F> {
    fn children(&self, r: &Rect) -> (Vec<Rect>, bool) {
        let mut kids = Vec::with_capacity(4);
        match placement(r, self.singular) {
            PointPlacement::Inside(px, py) => {
                split_at(r, px, py, &mut kids);
                (kids, false)
            }
            PointPlacement::Corner => {
                split_at(r, 0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1), &mut kids);
                (kids, true)
            }
            PointPlacement::Outside => {
                split_at(r, 0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1), &mut kids);
                (kids, true)
            }
        }
    }

    fn refine(&mut self, r: &Rect, depth: usize) -> f64 {
        let (kids, evaluable) = self.children(r);
        let fine: f64 = kids.iter().map(|k| gauss9(self.f, k)).sum();
        if evaluable {
            let coarse = gauss9(self.f, r);
            let err = (fine - coarse).abs();
            if err <= self.tol_leaf {
                return fine;
            }
            if depth >= self.max_depth {
                // geometric-tail allowance for the error left on this panel
                self.unresolved += 2.0 * err;
                return fine;
            }
        } else if depth >= self.max_depth {
            // singular point strictly inside at the cap: descend one forced
            // level so each child sees it at a corner, and account its error
            let mut total = 0.0;
            for k in &kids {
                let (grand, _) = self.children(k);
                let f2: f64 = grand.iter().map(|g| gauss9(self.f, g)).sum();
                let err = (f2 - gauss9(self.f, k)).abs();
                if err > self.tol_leaf {
                    self.unresolved += 2.0 * err;
                }
                total += f2;
            }
            return total;
        }
        kids.iter().map(|k| self.refine(k, depth + 1)).sum()
    }
}

/// Adaptive integral of `f` over `rect`, refining toward the listed singular
/// points until the per-panel refinement change drops below the relative
/// tolerance.
pub fn integrate_rect<F: Fn(f64, f64) -> f64>(
    f: &F,
    rect: Rect,
    singular: &[(f64, f64)],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    // coarse scale estimate used to convert the relative tolerance into a
    // per-leaf absolute budget
    let estimate = match placement(&rect, singular) {
        PointPlacement::Inside(px, py) => {
            let mut kids = Vec::new();
            split_at(&rect, px, py, &mut kids);
            kids.iter().map(|k| gauss9(f, k)).sum()
        }
        _ => gauss9(f, &rect),
    };
    let mut worker = Worker {
        f,
        singular,
        tol_leaf: cfg.rel_tol * estimate.abs() / 8.0,
        max_depth: cfg.max_depth,
        unresolved: 0.0,
    };
    let value = worker.refine(&rect, 0);
    if !value.is_finite() {
        return Err(CoreError::InvalidInput(
            "quadrature produced a non-finite value".into(),
        ));
    }
    let tolerance = cfg.rel_tol * value.abs().max(f64::MIN_POSITIVE);
    if worker.unresolved > tolerance {
        return Err(CoreError::QuadratureNonconvergence {
            max_depth: cfg.max_depth,
            error: worker.unresolved,
            tolerance,
        });
    }
    Ok(value)
}

/// Cell average of `f` over `rect`.
pub fn average_rect<F: Fn(f64, f64) -> f64>(
    f: &F,
    rect: Rect,
    singular: &[(f64, f64)],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    Ok(integrate_rect(f, rect, singular, cfg)? / rect.area())
}
