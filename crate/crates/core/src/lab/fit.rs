use serde::{Deserialize, Serialize};

/// Ordinary least squares line through `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; absent with only two points.
    pub slope_stderr: Option<f64>,
    pub r2: f64,
    pub points: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    Some(LineFit {
        slope,
        intercept,
        slope_stderr: (n > 2).then(|| (sse / (nf - 2.0) / sxx).sqrt()),
        r2: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        points: n,
    })
}

/// Fit of `log metric` against `log eps` over the points with positive
/// finite values.
pub fn loglog_fit(eps: &[f64], metric: &[f64]) -> Option<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(metric)
        .filter(|(e, m)| **e > 0.0 && **m > 0.0 && m.is_finite())
        .map(|(e, m)| (e.ln(), m.ln()))
        .unzip();
    ols(&x, &y)
}

/// Fit of `y' = C M0 y (1 + log+(y / M0))` to a sampled growth curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiFit {
    /// Slope of the linearised model `F(y(t)) = C t + b`.
    pub c_fit: f64,
    /// Coefficient of determination of that line.
    pub r2: f64,
    /// Smallest `C` for which the differential inequality holds at every
    /// interior sample (centred differences).
    pub c_bound: f64,
    pub m0: f64,
}

fn riccati_rhs(c: f64, m0: f64, y: f64) -> f64 {
    c * m0 * y * (1.0 + (y / m0).ln().max(0.0))
}

/// Antiderivative of `1 / (M0 y (1 + log+(y / M0)))`, zero at `y = M0`.
/// Exact solutions of the model are straight lines in `(t, F(y))`.
fn riccati_potential(m0: f64, y: f64) -> f64 {
    let r = (y / m0).ln();
    if r <= 0.0 {
        r / m0
    } else {
        r.ln_1p() / m0
    }
}

pub fn riccati_fit(times: &[f64], y: &[f64], m0: f64) -> Option<RiccatiFit> {
    let n = times.len();
    if n < 3 || y.len() != n || !(m0 > 0.0) || y.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let mut c_bound: f64 = 0.0;
    for k in 1..n - 1 {
        let dy = (y[k + 1] - y[k - 1]) / (times[k + 1] - times[k - 1]);
        c_bound = c_bound.max(dy / riccati_rhs(1.0, m0, y[k]));
    }
    let f: Vec<f64> = y.iter().map(|&v| riccati_potential(m0, v)).collect();
    let line = ols(times, &f)?;
    Some(RiccatiFit {
        c_fit: line.slope,
        r2: line.r2,
        c_bound,
        m0,
    })
}
