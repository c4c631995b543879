//! Small ensemble statistics helpers.

use serde::{Deserialize, Serialize};

/// Sample mean with its standard error (`None` for fewer than two samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    pub stderr: Option<f64>,
}

impl MeanEstimate {
    pub fn from_samples<I: IntoIterator<Item = f64>>(samples: I) -> Self {
        let xs: Vec<f64> = samples.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                stderr: None,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = (n > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self { n, mean, stderr }
    }

    pub fn stderr_or_zero(&self) -> f64 {
        self.stderr.unwrap_or(0.0)
    }
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
