use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub ci95_slope: (f64, f64),
    pub points_used: usize,
}

/// Least-squares fit of `ln(value) = intercept + slope · ln(k)`.
///
/// The slope interval uses Student's t with `points − 2` degrees of freedom.
/// With zero spread in the values, `R²` is reported as 0 and the interval
/// collapses onto the slope.
pub fn fit_power_law(ks: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    if ks.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: ks.len(), got: values.len() });
    }
    let n = ks.len();
    if n < 3 {
        return Err(Error::arg(format!("a power-law fit needs at least 3 points, got {n}")));
    }
    if let Some(v) = ks.iter().chain(values).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::arg(format!("power-law inputs must be positive and finite, got {v}")));
    }
    let x: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::degenerate("all k values are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 0.0 };
    let se = (ss_res / (nf - 2.0) / sxx).sqrt();
    let ci95_slope = if syy > 0.0 && se > 0.0 {
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).map_err(|e| Error::degenerate(e.to_string()))?.inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    } else {
        (slope, slope)
    };
    Ok(PowerLawFit { slope, intercept, r_squared, ci95_slope, points_used: n })
}
