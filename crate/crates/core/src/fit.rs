use serde::Serialize;

use crate::error::{Error, Result};

/// Coordinates in which a straight line is fitted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitMode {
    /// `ln y = slope·ln x + intercept`
    LogLog,
    /// `ln y = slope·x + intercept`
    SemiLog,
    /// `y = slope·x + intercept`
    Linear,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub mode: FitMode,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Ordinary least-squares line in the coordinates selected by `mode`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], mode: FitMode) -> Result<LineFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!("{} x values but {} y values", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::invalid("a fit needs at least 3 points"));
    }
    let positive = |v: &[f64], name: &str| -> Result<()> {
        match v.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            Some(bad) => Err(Error::invalid(format!("{name} value {bad} is not positive and finite"))),
            None => Ok(()),
        }
    };
    let (u, v): (Vec<f64>, Vec<f64>) = match mode {
        FitMode::LogLog => {
            positive(xs, "x")?;
            positive(ys, "y")?;
            (xs.iter().map(|x| x.ln()).collect(), ys.iter().map(|y| y.ln()).collect())
        }
        FitMode::SemiLog => {
            positive(ys, "y")?;
            (xs.to_vec(), ys.iter().map(|y| y.ln()).collect())
        }
        FitMode::Linear => (xs.to_vec(), ys.to_vec()),
    };
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let sxx: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
    let sxy: f64 = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let syy: f64 = v.iter().map(|b| (b - mv).powi(2)).sum();
    if !(sxx > 1e-300 * n) {
        return Err(Error::invalid("x values are constant"));
    }
    let slope = sxy / sxx;
    let intercept = mv - slope * mu;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit { mode, slope, intercept, r_squared, points: u.len() })
}
