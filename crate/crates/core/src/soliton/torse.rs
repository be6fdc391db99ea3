use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use super::Result;
use crate::geometry::{self, curvature_at, vector_jet, MetricSpec, NumericsConfig, VectorFieldSpec};
use crate::numerics::jacobian;
use crate::spacetime::UNIT_NORM_TOL;

/// `(∇_j ξ)^k − δ^k_j − η_j ξ^k` at `(k, j)`.
fn torse_tensor(m: &MetricSpec, xi: &VectorFieldSpec, p: &[f64], cfg: &NumericsConfig) -> geometry::Result<DMatrix<f64>> {
    let jet = vector_jet(m, xi, p, cfg)?;
    let n = m.dim();
    let eta = &jet.g * &jet.v;
    Ok(DMatrix::from_fn(n, n, |k, j| {
        let id = if j == k { 1.0 } else { 0.0 };
        jet.nabla[(k, j)] - id - eta[j] * jet.v[k]
    }))
}

/// `max_{j,k} |(∇_j ξ)^k − δ^k_j − η_j ξ^k|`.
pub fn torse_forming_residual(
    m: &MetricSpec,
    xi: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64> {
    Ok(torse_tensor(m, xi, p, cfg)?.amax())
}

/// Largest of the torse-forming residual and its first partial
/// derivatives at `p`.
///
/// A flow can satisfy the equation at an isolated point, as `∂_t` does at
/// `t = 1/2` on the flat scale factor `√t`. Identities obtained by
/// differentiating the equation need it to hold to first order.
pub fn torse_forming_local_residual(
    m: &MetricSpec,
    xi: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64> {
    let at = |q: &[f64]| torse_tensor(m, xi, q, cfg).map(|t| t.as_slice().to_vec());
    let d = jacobian(at, p, cfg)?;
    let slope = d.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(torse_forming_residual(m, xi, p, cfg)?.max(slope))
}

/// Residuals of the identities a unit torse-forming flow implies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorseConsequences {
    /// `∇_ξ ξ = 0`.
    pub geodesic: f64,
    /// `(∇_X η)(Y) = g(X,Y) + η(X)η(Y)`.
    pub eta_derivative: f64,
    /// `R(X,Y)ξ = η(Y)X − η(X)Y`.
    pub curvature_on_flow: f64,
    /// `η(R(X,Y)Z) = η(X)g(Y,Z) − η(Y)g(X,Z)`.
    pub eta_curvature: f64,
    /// `g(ξ, ξ)`.
    pub norm: f64,
    /// False when `g(ξ, ξ) ≠ −1`; the identities then say nothing.
    pub unit_timelike: bool,
}

impl TorseConsequences {
    pub fn max(&self) -> f64 {
        self.geodesic.max(self.eta_derivative).max(self.curvature_on_flow).max(self.eta_curvature)
    }
}

pub fn torse_consequence_residuals(
    m: &MetricSpec,
    xi: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TorseConsequences> {
    let n = m.dim();
    let jet = vector_jet(m, xi, p, cfg)?;
    let c = curvature_at(m, p, cfg)?;
    let (g, x) = (&c.metric, &jet.v);
    let eta = g * x;
    let norm = x.dot(&eta);
    let riem = &c.riemann;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

    let geodesic = (&jet.nabla * x).amax();

    let lowered = g * &jet.nabla; // (∇_i η)_j at (j, i)
    let mut eta_derivative = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = g[(i, j)] + eta[i] * eta[j];
            eta_derivative = eta_derivative.max((lowered[(j, i)] - expect).abs());
        }
    }

    let mut curvature_on_flow = 0.0f64;
    let mut eta_curvature = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let rx: f64 = (0..n).map(|k| riem.get4(l, k, i, j) * x[k]).sum();
                let expect = eta[j] * delta(l, i) - eta[i] * delta(l, j);
                curvature_on_flow = curvature_on_flow.max((rx - expect).abs());
            }
            for k in 0..n {
                let er: f64 = (0..n).map(|l| eta[l] * riem.get4(l, k, i, j)).sum();
                let expect = eta[i] * g[(j, k)] - eta[j] * g[(i, k)];
                eta_curvature = eta_curvature.max((er - expect).abs());
            }
        }
    }

    Ok(TorseConsequences {
        geodesic,
        eta_derivative,
        curvature_on_flow,
        eta_curvature,
        norm,
        unit_timelike: (norm + 1.0).abs() <= UNIT_NORM_TOL,
    })
}
