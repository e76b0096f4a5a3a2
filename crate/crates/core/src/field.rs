//! Small numeric helpers for cell fields stored as flat `Vec<f64>`.

/// Compensated (Kahan) summation. Conserved-quantity bookkeeping relies on
/// this being deterministic and accurate to a few ulps regardless of the
/// number of cells.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn min_value(a: &[f64]) -> f64 {
    a.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

pub fn max_value(a: &[f64]) -> f64 {
    a.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_beats_naive_on_adversarial_input() {
        // 1 + 1e-16 * 1e6 summed naively loses the tail entirely.
        let mut values = vec![1.0_f64];
        values.extend(std::iter::repeat(1e-16).take(1_000_000));
        let k = kahan_sum(values.iter().copied());
        assert!((k - (1.0 + 1e-10)).abs() < 1e-15);
    }

    #[test]
    fn basics() {
        let a = [1.0, 2.0, -3.0];
        let b = [2.0, 0.5, 1.0];
        assert_eq!(dot(&a, &b), 0.0);
        assert_eq!(norm_inf(&a), 3.0);
        assert_eq!(min_value(&a), -3.0);
        assert_eq!(max_value(&a), 2.0);
        let mut y = [1.0, 1.0, 1.0];
        axpy(2.0, &a, &mut y);
        assert_eq!(y, [3.0, 5.0, -5.0]);
    }
}
