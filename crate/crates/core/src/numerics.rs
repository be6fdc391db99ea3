//! Central finite differences with optional one-level Richardson extrapolation.

use serde::{Deserialize, Serialize};

/// Step size and extrapolation settings shared by every derivative operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    /// Finite-difference step `h`.
    pub step: f64,
    /// Combine steps `h` and `h/2` into a fourth-order estimate.
    pub richardson: bool,
    /// Metrics with `|det g|` below this are treated as singular.
    pub degeneracy_threshold: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self { step: 1e-3, richardson: true, degeneracy_threshold: 1e-12 }
    }
}

impl NumericsConfig {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_richardson(mut self, richardson: bool) -> Self {
        self.richardson = richardson;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(format!("finite-difference step must be positive, got {}", self.step));
        }
        if !(self.degeneracy_threshold > 0.0) {
            return Err(format!(
                "degeneracy threshold must be positive, got {}",
                self.degeneracy_threshold
            ));
        }
        Ok(())
    }
}

fn central<E, F>(f: &F, point: &[f64], axis: usize, h: f64) -> Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let mut p = point.to_vec();
    let (hi, lo) = (point[axis] + h, point[axis] - h);
    p[axis] = hi;
    let plus = f(&p)?;
    p[axis] = lo;
    let minus = f(&p)?;
    // divide by the spacing actually sampled, not the nominal 2h
    let width = hi - lo;
    Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / width).collect())
}

/// Partial derivative along `axis` of a vector-valued function, componentwise.
pub fn partial<E, F>(f: F, point: &[f64], axis: usize, cfg: &NumericsConfig) -> Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    let coarse = central(&f, point, axis, cfg.step)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = central(&f, point, axis, cfg.step / 2.0)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

/// All first partials: `result[axis][component]`.
pub fn jacobian<E, F>(f: F, point: &[f64], cfg: &NumericsConfig) -> Result<Vec<Vec<f64>>, E>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, E>,
{
    (0..point.len()).map(|axis| partial(&f, point, axis, cfg)).collect()
}
