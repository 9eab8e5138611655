//! Linear mean-field bound `dp/dt = M p`.

use nalgebra::DVector;

use crate::spectral::MetzlerMatrix;
use crate::{Error, Result};

/// Integrates `dp/dt = mat p` with classical RK4 and returns `p` at each
/// grid time. The step is at most `1e-3 / max(1, ||mat||_inf)`.
pub fn mean_field_ode(mat: &MetzlerMatrix, p0: &[f64], t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let m = mat.matrix();
    if p0.len() != mat.dim() {
        return Err(Error::DimensionMismatch {
            expected: mat.dim(),
            got: p0.len(),
        });
    }
    if p0.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidParameter("initial probabilities must lie in [0, 1]".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("time grid must be sorted and nonnegative".into()));
    }
    let norm = m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0f64, f64::max);
    let h_max = 1e-3 / norm.max(1.0);
    let mut p = DVector::from_column_slice(p0);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / h_max).ceil() as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = m * &p;
                let k2 = m * (&p + &k1 * (0.5 * h));
                let k3 = m * (&p + &k2 * (0.5 * h));
                let k4 = m * (&p + &k3 * h);
                p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            t = target;
        }
        out.push(p.iter().copied().collect());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn negative_identity_decays_exponentially() {
        let m = MetzlerMatrix::new(-DMatrix::identity(3, 3)).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0];
        let out = mean_field_ode(&m, &[1.0, 1.0, 1.0], &grid).unwrap();
        for (t, p) in grid.iter().zip(&out) {
            for v in p {
                assert!((v - (-t).exp()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_probabilities() {
        let m = MetzlerMatrix::new(-DMatrix::identity(1, 1)).unwrap();
        assert!(mean_field_ode(&m, &[1.5], &[1.0]).is_err());
    }
}
