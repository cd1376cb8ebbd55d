//! Linear epsilon-insensitive SVR over a single feature, used for the
//! emotionality vs time-to-resolution analysis.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvrError {
    #[error("need at least 2 rows to fit, got {0}")]
    TooFewRows(usize),
    #[error("emotionality has zero variance; the regression is undefined")]
    ZeroVariance,
}

#[derive(Debug, Clone)]
pub struct SvrFit {
    pub slope: f64,
    pub intercept: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub train_loss: f64,
}

impl SvrFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Fits y ~ slope * x + intercept by subgradient descent on the
/// epsilon-insensitive loss with an L2 penalty on the slope. Inputs are
/// standardized internally; the returned coefficients are in original units.
pub fn train_svr(rows: &[(f64, f64)], epsilon: f64, lambda: f64) -> Result<SvrFit, SvrError> {
    if rows.len() < 2 {
        return Err(SvrError::TooFewRows(rows.len()));
    }
    let n = rows.len() as f64;
    let x_mean = rows.iter().map(|(x, _)| x).sum::<f64>() / n;
    let x_std = (rows.iter().map(|(x, _)| (x - x_mean).powi(2)).sum::<f64>() / n).sqrt();
    if x_std == 0.0 {
        return Err(SvrError::ZeroVariance);
    }
    let y_mean = rows.iter().map(|(_, y)| y).sum::<f64>() / n;
    let y_std = (rows.iter().map(|(_, y)| (y - y_mean).powi(2)).sum::<f64>() / n)
        .sqrt()
        .max(1e-12);

    let scaled: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(x, y)| ((x - x_mean) / x_std, (y - y_mean) / y_std))
        .collect();
    let eps_scaled = epsilon / y_std;

    let mut w = 0.0f64;
    let mut b = 0.0f64;
    let iters = 4000;
    let mut loss = f64::NAN;
    for t in 0..iters {
        // Decaying step keeps the subgradient iteration convergent.
        let lr = 0.5 / (1.0 + t as f64 * 0.01);
        let mut gw = lambda * w;
        let mut gb = 0.0;
        let mut l = 0.5 * lambda * w * w;
        for &(x, y) in &scaled {
            let r = w * x + b - y;
            l += (r.abs() - eps_scaled).max(0.0);
            if r.abs() > eps_scaled {
                gw += r.signum() * x;
                gb += r.signum();
            }
        }
        gw /= n;
        gb /= n;
        l /= n;
        w -= lr * gw;
        b -= lr * gb;
        loss = l;
    }

    let slope = w * y_std / x_std;
    let intercept = y_mean + b * y_std - slope * x_mean;
    Ok(SvrFit { slope, intercept, epsilon, lambda, train_loss: loss })
}
