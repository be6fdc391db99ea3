use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{soliton_residual, Result, SolitonError, SolitonParams};
use crate::geometry::{
    self, cov_deriv_tensor11, curvature_at, matrix_max_abs, metric_pair, vector_at, vector_jet,
    MetricSpec, NumericsConfig, TensorSample, VectorFieldSpec,
};
use crate::numerics::jacobian;
use crate::spacetime::FluidState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CkvCategory {
    /// Non-constant `Φ`.
    Proper,
    /// Constant non-zero `Φ`.
    Homothetic,
    Killing,
    NotCkv,
}

/// Conformal Killing fit `£_V g ≈ 2Φ g` over a set of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CkvAnalysis {
    pub phi: Vec<f64>,
    /// `max |£_V g − 2Φ g|` per point.
    pub residual: Vec<f64>,
    pub category: CkvCategory,
    pub tolerance: f64,
    /// Einstein constant per point, when attached.
    pub theta: Option<Vec<f64>>,
    /// Conformal factor an Einstein spacetime forces, when attached.
    pub psi: Option<Vec<f64>>,
}

impl CkvAnalysis {
    pub fn attach_einstein(mut self, theta: Vec<f64>, psi: Vec<f64>) -> Self {
        self.theta = Some(theta);
        self.psi = Some(psi);
        self
    }
}

/// Categorizes pre-sampled `(g, g⁻¹, £_V g)` triples.
pub fn ckv_from_samples(
    samples: &[(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)],
    tolerance: f64,
) -> Result<CkvAnalysis> {
    if !(tolerance >= 0.0) {
        return Err(SolitonError::NegativeTolerance(tolerance));
    }
    if samples.len() < 2 {
        return Err(SolitonError::TooFewPoints { needed: 2, got: samples.len() });
    }
    let mut phi = Vec::with_capacity(samples.len());
    let mut residual = Vec::with_capacity(samples.len());
    for (g, inv, lie) in samples {
        let n = g.nrows() as f64;
        let f = inv.component_mul(lie).sum() / (2.0 * n);
        residual.push(matrix_max_abs(&(lie - g * (2.0 * f))));
        phi.push(f);
    }
    let max = phi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    let category = if residual.iter().any(|r| *r > tolerance) {
        CkvCategory::NotCkv
    } else if phi.iter().all(|f| f.abs() <= tolerance) {
        CkvCategory::Killing
    } else if max - min <= tolerance {
        CkvCategory::Homothetic
    } else {
        CkvCategory::Proper
    };
    Ok(CkvAnalysis { phi, residual, category, tolerance, theta: None, psi: None })
}

/// `Φ = tr(g⁻¹ £_V g) / 2n` at each point, then categorized.
pub fn ckv_fit(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    points: &[Vec<f64>],
    cfg: &NumericsConfig,
    tolerance: f64,
) -> Result<CkvAnalysis> {
    let samples = points
        .iter()
        .map(|p| {
            let jet = vector_jet(m, v, p, cfg)?;
            let lie = jet.lie_derivative();
            Ok((jet.g, jet.inv, lie))
        })
        .collect::<Result<Vec<_>>>()?;
    ckv_from_samples(&samples, tolerance)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EinsteinFit {
    pub theta: Vec<f64>,
    /// `max |S − θ g|` per point.
    pub residual: Vec<f64>,
}

/// `θ = tr(g⁻¹ S)/n` and the residual of `S = θ g`.
pub fn einstein_fit_at(s: &DMatrix<f64>, g: &DMatrix<f64>, inv: &DMatrix<f64>) -> (f64, f64) {
    let theta = inv.component_mul(s).sum() / g.nrows() as f64;
    (theta, matrix_max_abs(&(s - g * theta)))
}

pub fn einstein_fit(s: &[TensorSample], g: &[TensorSample]) -> Result<EinsteinFit> {
    let mut fit = EinsteinFit { theta: Vec::new(), residual: Vec::new() };
    for (si, gi) in s.iter().zip(g) {
        let gm = gi.matrix();
        let inv = gm.clone().try_inverse().ok_or_else(|| {
            geometry::GeometryError::SingularMetric { det: gm.determinant(), point: gi.point.clone() }
        })?;
        let (theta, residual) = einstein_fit_at(&si.matrix(), &gm, &inv);
        fit.theta.push(theta);
        fit.residual.push(residual);
    }
    Ok(fit)
}

/// `Ψ = −[Λ + αθ − βr/2 − ½(p + ½)]`, the conformal factor of `V` on an
/// Einstein spacetime `S = θ g`.
pub fn psi_for_einstein(theta: f64, r: f64, alpha: f64, beta: f64, p: f64, lambda: f64) -> f64 {
    -(lambda + alpha * theta - 0.5 * beta * r - 0.5 * (p + 0.5))
}

/// `κ/2 [(α+β)σ + 3(α−β)ρ] + (2β−α)λ − Λ + ½(p + ½)`.
pub fn phi_closed_form(fluid: &FluidState, alpha: f64, beta: f64, p: f64, lambda: f64) -> f64 {
    0.5 * fluid.kappa * ((alpha + beta) * fluid.sigma + 3.0 * (alpha - beta) * fluid.rho)
        + (2.0 * beta - alpha) * fluid.lambda
        - lambda
        + 0.5 * (p + 0.5)
}

/// The dual one-form of `V`, its exterior derivative and the skew operator
/// `F` defined by `dω(X, Y) = g(X, FY)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoFormPack {
    /// `ω_i = g_ij V^j`.
    pub omega: DVector<f64>,
    /// `(dω)_ij = ½(∂_i ω_j − ∂_j ω_i)`.
    pub d_omega: DMatrix<f64>,
    /// `F^k_j = g^ki (dω)_ij`.
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl TwoFormPack {
    /// `g(X, FY) + g(FX, Y)`.
    pub fn skew_pairing(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let gf = &self.g * &self.f;
        x.dot(&(&gf * y)) + y.dot(&(&gf * x))
    }

    /// `max |gF + (gF)ᵀ|`.
    pub fn skewness(&self) -> f64 {
        let gf = &self.g * &self.f;
        matrix_max_abs(&(&gf + gf.transpose()))
    }

    /// `max |dω(X, Y) − g(X, FY)|` over coordinate vectors.
    pub fn defining_residual(&self) -> f64 {
        matrix_max_abs(&(&self.d_omega - &self.g * &self.f))
    }
}

fn omega_at(m: &MetricSpec, v: &VectorFieldSpec, q: &[f64], cfg: &NumericsConfig) -> geometry::Result<Vec<f64>> {
    let (g, _) = metric_pair(m, q, cfg)?;
    let x = vector_at(m, v, q, cfg)?;
    Ok((g * x).as_slice().to_vec())
}

fn two_form_raw(m: &MetricSpec, v: &VectorFieldSpec, p: &[f64], cfg: &NumericsConfig) -> geometry::Result<TwoFormPack> {
    let n = m.dim();
    let (g, inv) = metric_pair(m, p, cfg)?;
    let omega = DVector::from_vec(omega_at(m, v, p, cfg)?);
    let d = jacobian(|q| omega_at(m, v, q, cfg), p, cfg)?;
    let d_omega = DMatrix::from_fn(n, n, |i, j| 0.5 * (d[i][j] - d[j][i]));
    let f = &inv * &d_omega;
    Ok(TwoFormPack { omega, d_omega, f, g })
}

pub fn two_form_pack(m: &MetricSpec, v: &VectorFieldSpec, p: &[f64], cfg: &NumericsConfig) -> Result<TwoFormPack> {
    Ok(two_form_raw(m, v, p, cfg)?)
}

/// `max_{i,j} |g(∇_i V, ∂_j) − ½(£_V g)_ij + g(F∂_i, ∂_j)|`.
///
/// The covariant derivative comes from the connection, `F` from finite
/// differences of `ω`, so the two sides are independent computations.
pub fn nabla_decomposition_check(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64> {
    let jet = vector_jet(m, v, p, cfg)?;
    let pack = two_form_raw(m, v, p, cfg)?;
    let lowered = &jet.g * &jet.nabla; // g_jk (∇_i V)^k at (j, i)
    let lie = jet.lie_derivative();
    let gf = &jet.g * &pack.f; // g(F∂_i, ∂_j) at (j, i)
    let n = m.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let rhs = 0.5 * lie[(i, j)] - gf[(j, i)];
            worst = worst.max((lowered[(j, i)] - rhs).abs());
        }
    }
    Ok(worst)
}

/// Residuals of the identities a conformal Ricci–Yamabe soliton with a
/// torse-forming flow imposes on `V` and its dual form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonConsequences {
    /// `(div F)Y + κ(σ+ρ)[3α + η(V)]η(Y) + [λ + κ(σ−ρ)/2]ω(Y)`.
    pub divergence_of_f: f64,
    /// `∇_X|V|² + 2g(FX, V) − (£_V g)(X, V)`; holds for every `V`.
    pub norm_transport: f64,
    /// `R(X,Y)V − (∇_Y F)X + (∇_X F)Y − ακ(σ+ρ)[Yη(X) − Xη(Y)]`.
    pub curvature_of_v: f64,
    /// Norm of the soliton equation itself.
    pub soliton_residual: f64,
    /// True when the soliton equation holds within tolerance.
    pub applicable: bool,
}

pub fn soliton_consequences(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    xi: &VectorFieldSpec,
    fluid: &FluidState,
    params: &SolitonParams,
    p: &[f64],
    cfg: &NumericsConfig,
    tolerance: f64,
) -> Result<SolitonConsequences> {
    let n = m.dim();
    let soliton = soliton_residual(m, v, Some(xi), params, p, cfg)?.max_abs();
    let jet = vector_jet(m, v, p, cfg)?;
    let c = curvature_at(m, p, cfg)?;
    let pack = two_form_raw(m, v, p, cfg)?;
    let nab_f = cov_deriv_tensor11(m, |q| two_form_raw(m, v, q, cfg).map(|t| t.f), p, cfg)?;
    let nf = |i: usize, l: usize, j: usize| nab_f[(i * n + l) * n + j];

    let g = &c.metric;
    let vv = &jet.v;
    let eta = g * vector_at(m, xi, p, cfg)?;
    let omega = &pack.omega;
    let b = params.alpha * fluid.ricci_b();
    let eta_v = eta.dot(vv);

    let mut divergence_of_f = 0.0f64;
    for j in 0..n {
        let div: f64 = (0..n).map(|k| nf(k, k, j)).sum();
        let expect = -fluid.ricci_b() * (3.0 * params.alpha + eta_v) * eta[j] - fluid.ricci_a() * omega[j];
        divergence_of_f = divergence_of_f.max((div - expect).abs());
    }

    let norm2 = |q: &[f64]| -> geometry::Result<Vec<f64>> {
        let (gq, _) = metric_pair(m, q, cfg)?;
        let x = vector_at(m, v, q, cfg)?;
        Ok(vec![x.dot(&(gq * &x))])
    };
    let dnorm = jacobian(norm2, p, cfg)?;
    let gf = g * &pack.f;
    let lie = jet.lie_derivative();
    let mut norm_transport = 0.0f64;
    for i in 0..n {
        let gfv: f64 = (0..n).map(|l| gf[(l, i)] * vv[l]).sum();
        let lv: f64 = (0..n).map(|j| lie[(i, j)] * vv[j]).sum();
        norm_transport = norm_transport.max((dnorm[i][0] + 2.0 * gfv - lv).abs());
    }

    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut curvature_of_v = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let rv: f64 = (0..n).map(|k| c.riemann.get4(l, k, i, j) * vv[k]).sum();
                let rhs = nf(j, l, i) - nf(i, l, j) + b * (delta(l, j) * eta[i] - delta(l, i) * eta[j]);
                curvature_of_v = curvature_of_v.max((rv - rhs).abs());
            }
        }
    }

    Ok(SolitonConsequences {
        divergence_of_f,
        norm_transport,
        curvature_of_v,
        soliton_residual: soliton,
        applicable: soliton <= tolerance,
    })
}
