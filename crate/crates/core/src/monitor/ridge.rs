//! Ridge regression with an unpenalised intercept.

use nalgebra::{DMatrix, DVector};

use super::MonitorError;

/// Fit `y ≈ b + X w` minimising `|y - b - X w|² + alpha |w|²`.
/// Returns `(b, w)`. Columns and targets are centred so the intercept is
/// not shrunk.
pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], alpha: f64) -> Result<(f64, Vec<f64>), MonitorError> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(MonitorError::EmptyCorpus);
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(MonitorError::InvalidParameter(format!("alpha = {alpha}")));
    }
    let p = x[0].len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    if p == 0 {
        return Ok((y_mean, Vec::new()));
    }
    let mut means = vec![0.0; p];
    for row in x {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let xc = DMatrix::from_fn(n, p, |i, j| x[i][j] - means[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += alpha;
    }
    let rhs = xc.transpose() * yc;

    let scale = (0..p)
        .map(|j| gram[(j, j)].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let chol = gram.clone().cholesky();
    let w = match chol {
        Some(c) if (0..p).all(|j| c.l()[(j, j)].powi(2) > 1e-12 * scale) => c.solve(&rhs),
        _ if alpha > 0.0 => gram.lu().solve(&rhs).ok_or(MonitorError::SingularSystem)?,
        _ => return Err(MonitorError::SingularSystem),
    };
    let w: Vec<f64> = w.iter().copied().collect();
    let b = y_mean - means.iter().zip(&w).map(|(m, wi)| m * wi).sum::<f64>();
    Ok((b, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let (b, w) = fit_ridge(&x, &[0.0, 1.0, 2.0], 1e-12).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn heavy_shrinkage_gives_the_mean() {
        let x = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, -1.0], vec![3.0, 0.0]];
        let y = [0.0, 1.0, 1.0, 1.0];
        let (b, w) = fit_ridge(&x, &y, 1e12).unwrap();
        assert!(w.iter().all(|v| v.abs() < 1e-9));
        assert_abs_diff_eq!(b, 0.75, epsilon = 1e-9);
    }

    #[test]
    fn rank_deficient_without_penalty_is_singular() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert_eq!(fit_ridge(&x, &[0.0, 1.0, 0.0], 0.0), Err(MonitorError::SingularSystem));
        assert!(fit_ridge(&x, &[0.0, 1.0, 0.0], 1.0).is_ok());
    }
}
