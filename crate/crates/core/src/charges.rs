//! Permanent point charges and their admissibility screening.

use crate::error::{CoreError, Result};
use crate::grid::{Grid, Rect};

/// Strength threshold below which the well-posedness theory applies. The
/// solver still runs above it (the bound is sufficient, not necessary); the
/// charge set is merely flagged inadmissible.
pub const ALPHA_ADMISSIBLE_LIMIT: f64 = 2.0 * std::f64::consts::SQRT_2 - 2.0;

/// One fixed point charge: position inside the domain and signed strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    pub x: f64,
    pub y: f64,
    pub alpha: f64,
}

impl Charge {
    pub fn new(x: f64, y: f64, alpha: f64) -> Self {
        Charge { x, y, alpha }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

/// Validated, ordered set of point charges.
#[derive(Debug, Clone)]
pub struct ChargeSet {
    pub charges: Vec<Charge>,
    /// True iff every |alpha| lies strictly below [`ALPHA_ADMISSIBLE_LIMIT`].
    pub admissible: bool,
}

impl ChargeSet {
    pub fn empty() -> Self {
        ChargeSet {
            charges: Vec::new(),
            admissible: true,
        }
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.charges.iter().map(|c| (c.x, c.y)).collect()
    }
}

/// Screens a list of charges against the domain.
///
/// Duplicated positions, zero strengths and positions not strictly interior
/// are hard errors. Strengths at or above the admissibility threshold only
/// clear the `admissible` flag; callers may proceed with a warning.
pub fn validate_charges(charges: &[Charge], domain: &Rect) -> Result<ChargeSet> {
    for c in charges {
        if c.alpha == 0.0 {
            return Err(CoreError::ZeroStrength { x: c.x, y: c.y });
        }
        if !domain.contains_strictly(c.x, c.y) {
            return Err(CoreError::ChargeOutsideDomain { x: c.x, y: c.y });
        }
    }
    for (k, a) in charges.iter().enumerate() {
        for b in charges.iter().skip(k + 1) {
            if a.x == b.x && a.y == b.y {
                return Err(CoreError::DuplicateChargePosition { x: a.x, y: a.y });
            }
        }
    }
    let admissible = charges.iter().all(|c| c.alpha.abs() < ALPHA_ADMISSIBLE_LIMIT);
    Ok(ChargeSet {
        charges: charges.to_vec(),
        admissible,
    })
}

/// Moves every charge onto the center of its grid cell and reports the snap
/// distances. Face and node quadrature then never touches a singularity.
/// Charges landing in the same cell are rejected.
pub fn snap_to_cell_centers(set: &ChargeSet, grid: &Grid) -> Result<(ChargeSet, Vec<f64>)> {
    let mut snapped = Vec::with_capacity(set.len());
    let mut moved = Vec::with_capacity(set.len());
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(set.len());
    for c in &set.charges {
        let (i, j) = grid.cell_of(c.x, c.y);
        if cells.contains(&(i, j)) {
            let (cx, cy) = grid.cell_center(i, j);
            return Err(CoreError::DuplicateChargePosition { x: cx, y: cy });
        }
        cells.push((i, j));
        let (cx, cy) = grid.cell_center(i, j);
        moved.push(((cx - c.x).powi(2) + (cy - c.y).powi(2)).sqrt());
        snapped.push(Charge::new(cx, cy, c.alpha));
    }
    Ok((
        ChargeSet {
            charges: snapped,
            admissible: set.admissible,
        },
        moved,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_value() {
        assert!((ALPHA_ADMISSIBLE_LIMIT - 0.8284271247461903).abs() < 1e-15);
    }

    #[test]
    fn admissible_single_charge() {
        let set = validate_charges(&[Charge::new(0.5, 0.5, 0.5)], &Rect::UNIT).unwrap();
        assert!(set.admissible);
    }

    #[test]
    fn empty_set_is_admissible() {
        let set = validate_charges(&[], &Rect::UNIT).unwrap();
        assert!(set.admissible);
        assert!(set.is_empty());
    }

    #[test]
    fn strong_charge_flagged_not_rejected() {
        let set = validate_charges(&[Charge::new(0.5, 0.5, 1.0)], &Rect::UNIT).unwrap();
        assert!(!set.admissible);
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn hard_errors() {
        assert!(matches!(
            validate_charges(&[Charge::new(0.5, 0.5, 0.0)], &Rect::UNIT),
            Err(CoreError::ZeroStrength { .. })
        ));
        assert!(matches!(
            validate_charges(&[Charge::new(0.0, 0.5, 0.3)], &Rect::UNIT),
            Err(CoreError::ChargeOutsideDomain { .. })
        ));
        assert!(matches!(
            validate_charges(&[Charge::new(1.5, 0.5, 0.3)], &Rect::UNIT),
            Err(CoreError::ChargeOutsideDomain { .. })
        ));
        assert!(matches!(
            validate_charges(
                &[Charge::new(0.5, 0.5, 0.3), Charge::new(0.5, 0.5, -0.3)],
                &Rect::UNIT
            ),
            Err(CoreError::DuplicateChargePosition { .. })
        ));
    }

    #[test]
    fn snapping_moves_to_cell_centers() {
        let grid = Grid::unit(8);
        let set = validate_charges(&[Charge::new(0.49, 0.52, 0.4)], &Rect::UNIT).unwrap();
        let (snapped, moved) = snap_to_cell_centers(&set, &grid).unwrap();
        let c = snapped.charges[0];
        assert_eq!((c.x, c.y), (0.4375, 0.5625));
        assert!(moved[0] > 0.0 && moved[0] < grid.hx);
    }

    #[test]
    fn snapping_collision_rejected() {
        let grid = Grid::unit(4);
        let set = validate_charges(
            &[Charge::new(0.30, 0.30, 0.4), Charge::new(0.45, 0.45, -0.4)],
            &Rect::UNIT,
        )
        .unwrap();
        assert!(matches!(
            snap_to_cell_centers(&set, &grid),
            Err(CoreError::DuplicateChargePosition { .. })
        ));
    }
}
