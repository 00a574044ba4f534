//! Least-squares growth fits on log-transformed tables.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root mean square of the log-space residuals.
    pub residual: f64,
    /// 95% confidence interval for the exponent.
    pub ci95: (f64, f64),
    pub rows: usize,
}

/// Ordinary least squares of `y` on `x` with a Student-t interval for the slope.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<GrowthFit> {
    let k = x.len();
    if k != y.len() {
        return Err(Error::DegenerateTable("columns of different lengths".into()));
    }
    if k < 4 {
        return Err(Error::DegenerateTable(format!("{k} rows, need at least 4")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateTable("non-finite entries".into()));
    }
    let mx = x.iter().sum::<f64>() / k as f64;
    let my = y.iter().sum::<f64>() / k as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateTable("all abscissae equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let dof = (k - 2) as f64;
    let se = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::DegenerateTable(e.to_string()))?.inverse_cdf(0.975);
    Ok(GrowthFit {
        exponent: slope,
        intercept,
        residual: (sse / k as f64).sqrt(),
        ci95: (slope - t * se, slope + t * se),
        rows: k,
    })
}

fn positive_logs(v: &[f64], what: &str) -> Result<Vec<f64>> {
    v.iter()
        .map(|&a| if a > 0.0 { Ok(a.ln()) } else { Err(Error::DegenerateTable(format!("non-positive {what} {a}"))) })
        .collect()
}

/// Fits `y ≈ C (ln n)^a`: the slope of `ln y` against `ln ln n` (all `n > 1`).
pub fn fit_growth(ns: &[f64], ys: &[f64]) -> Result<GrowthFit> {
    let logs = positive_logs(ns, "n")?;
    let x = positive_logs(&logs, "ln n")?;
    linear_fit(&x, &positive_logs(ys, "y")?)
}

/// Fits `y ≈ C n^a`: the slope of `ln y` against `ln n`.
pub fn fit_power(ns: &[f64], ys: &[f64]) -> Result<GrowthFit> {
    linear_fit(&positive_logs(ns, "n")?, &positive_logs(ys, "y")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_models() {
        let ns: Vec<f64> = (3..12).map(|k| 2f64.powi(k)).collect();
        let sq: Vec<f64> = ns.iter().map(|n| n.ln().powi(2)).collect();
        let f = fit_growth(&ns, &sq).unwrap();
        assert!((f.exponent - 2.0).abs() < 0.01);
        assert!(f.residual < 1e-12);
        let c = fit_growth(&ns, &vec![3.0; ns.len()]).unwrap();
        assert!(c.exponent.abs() < 0.01);
        let p = fit_power(&ns, &ns.iter().map(|n| 5.0 / n.sqrt()).collect::<Vec<_>>()).unwrap();
        assert!((p.exponent + 0.5).abs() < 1e-12);
    }

    #[test]
    fn interval_covers_noisy_slope() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|a| 1.5 * a + if (*a as i32) % 2 == 0 { 0.3 } else { -0.3 }).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!(f.ci95.0 < 1.5 && 1.5 < f.ci95.1);
    }

    #[test]
    fn degenerate_tables() {
        assert!(fit_growth(&[2.0, 4.0, 8.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_growth(&[4.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
        assert!(fit_growth(&[2.0, 4.0, 8.0, 16.0], &[1.0, 0.0, 3.0, 4.0]).is_err());
    }
}
