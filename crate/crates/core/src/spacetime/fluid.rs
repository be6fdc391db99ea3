use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use super::{ModelError, Result, ScalarProfile, UNIT_NORM_TOL};
use crate::geometry::{
    curvature_at, matrix_max_abs, orthonormal_frame_from_matrix, vector_at, MetricSpec,
    NumericsConfig, TensorSample, Valence, VectorFieldSpec,
};

/// Pointwise perfect-fluid data: energy density `σ`, pressure `ρ`,
/// gravitational constant `κ` and cosmological constant `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub sigma: f64,
    pub rho: f64,
    pub kappa: f64,
    pub lambda: f64,
}

impl FluidState {
    pub fn new(sigma: f64, rho: f64, kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(ModelError::NonPositiveKappa(kappa));
        }
        Ok(Self { sigma, rho, kappa, lambda })
    }

    /// `σ = 3ρ`.
    pub fn radiation(rho: f64, kappa: f64, lambda: f64) -> Result<Self> {
        Self::new(3.0 * rho, rho, kappa, lambda)
    }

    /// `ρ = 0`.
    pub fn dust(sigma: f64, kappa: f64, lambda: f64) -> Result<Self> {
        Self::new(sigma, 0.0, kappa, lambda)
    }

    /// Coefficient `A` of `g` in the perfect-fluid Ricci tensor.
    pub fn ricci_a(&self) -> f64 {
        self.lambda + 0.5 * self.kappa * (self.sigma - self.rho)
    }

    /// Coefficient `B` of `η ⊗ η` in the perfect-fluid Ricci tensor.
    pub fn ricci_b(&self) -> f64 {
        self.kappa * (self.sigma + self.rho)
    }

    /// `4λ + κ(σ − 3ρ)`.
    pub fn scalar_curvature(&self) -> f64 {
        4.0 * self.lambda + self.kappa * (self.sigma - 3.0 * self.rho)
    }
}

/// Fluid data that may vary with cosmic time.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidProfile {
    pub sigma: ScalarProfile,
    pub rho: ScalarProfile,
    pub kappa: ScalarProfile,
    pub lambda: ScalarProfile,
}

impl FluidProfile {
    pub fn constant(state: FluidState) -> Self {
        Self {
            sigma: state.sigma.into(),
            rho: state.rho.into(),
            kappa: state.kappa.into(),
            lambda: state.lambda.into(),
        }
    }

    pub fn at(&self, p: &[f64]) -> Result<FluidState> {
        FluidState::new(self.sigma.at(p)?, self.rho.at(p)?, self.kappa.at(p)?, self.lambda.at(p)?)
    }
}

/// Lowers `ξ` after checking `g(ξ, ξ) = −1`.
pub fn unit_timelike_covector(g: &DMatrix<f64>, xi: &DVector<f64>) -> Result<DVector<f64>> {
    let eta = g * xi;
    let norm = xi.dot(&eta);
    if (norm + 1.0).abs() > UNIT_NORM_TOL {
        return Err(ModelError::NotUnitTimelike { norm });
    }
    Ok(eta)
}

fn raised_norm(g: &TensorSample, eta: &TensorSample) -> Result<()> {
    let inv = g
        .matrix()
        .try_inverse()
        .ok_or(ModelError::NotUnitTimelike { norm: f64::NAN })?;
    let e = eta.vector();
    let norm = e.dot(&(inv * &e));
    if (norm + 1.0).abs() > UNIT_NORM_TOL {
        return Err(ModelError::NotUnitTimelike { norm });
    }
    Ok(())
}

fn rank2(a: f64, g: &DMatrix<f64>, b: f64, eta: &DVector<f64>) -> DMatrix<f64> {
    g * a + eta * eta.transpose() * b
}

/// `T = ρ g + (σ + ρ) η ⊗ η`.
pub fn energy_momentum(fluid: &FluidState, g: &TensorSample, eta: &TensorSample) -> Result<TensorSample> {
    raised_norm(g, eta)?;
    let t = rank2(fluid.rho, &g.matrix(), fluid.sigma + fluid.rho, &eta.vector());
    Ok(TensorSample::from_matrix(Valence::Tensor02, &t, &g.point, true))
}

/// `S = [λ + κ(σ − ρ)/2] g + κ(σ + ρ) η ⊗ η`.
pub fn ricci_from_fluid(fluid: &FluidState, g: &TensorSample, eta: &TensorSample) -> Result<TensorSample> {
    raised_norm(g, eta)?;
    let s = rank2(fluid.ricci_a(), &g.matrix(), fluid.ricci_b(), &eta.vector());
    Ok(TensorSample::from_matrix(Valence::Tensor02, &s, &g.point, true))
}

/// `S + (λ − r/2) g − κ T` at `p`.
pub fn efe_residual(
    m: &MetricSpec,
    fluid: &FluidState,
    xi: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    let c = curvature_at(m, p, cfg)?;
    let v = vector_at(m, xi, p, cfg)?;
    let eta = unit_timelike_covector(&c.metric, &v)?;
    let s = c.ricci.matrix();
    let t = rank2(fluid.rho, &c.metric, fluid.sigma + fluid.rho, &eta);
    let res = &s + &c.metric * (fluid.lambda - 0.5 * c.scalar) - t * fluid.kappa;
    Ok(TensorSample::from_matrix(Valence::Tensor02, &res, p, true))
}

/// `r − [4λ + κ(σ − 3ρ)]` with `r` computed from the metric.
pub fn scalar_curvature_identity(
    m: &MetricSpec,
    fluid: &FluidState,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64> {
    let c = curvature_at(m, p, cfg)?;
    Ok(c.scalar - fluid.scalar_curvature())
}

/// `(QX)^i = g^ik S_kj X^j`.
pub fn ricci_operator(s: &TensorSample, inv: &TensorSample, x: &DVector<f64>) -> DVector<f64> {
    inv.matrix() * s.matrix() * x
}

/// Best fit of a Ricci sample to `A g + B η ⊗ η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluidFormFit {
    pub a: f64,
    pub b: f64,
    /// `max |S − A g − B η ⊗ η|`.
    pub residual: f64,
    /// Spread of `S(e, e)` over the spatial frame directions.
    pub spread: f64,
    pub perfect_fluid: bool,
}

/// Reads `(σ, ρ)` off a Ricci sample for the given `κ`, `λ`.
///
/// `A` is the mean of `S(e_a, e_a)` over the three spatial frame vectors
/// orthogonal to `ξ`, and `B = S(ξ, ξ) + A`.
pub fn fluid_from_ricci(
    s: &TensorSample,
    g: &TensorSample,
    xi: &DVector<f64>,
    kappa: f64,
    lambda: f64,
    tolerance: f64,
) -> Result<(FluidState, FluidFormFit)> {
    if !(kappa > 0.0) {
        return Err(ModelError::NonPositiveKappa(kappa));
    }
    let gm = g.matrix();
    let sm = s.matrix();
    let eta = unit_timelike_covector(&gm, xi)?;
    let frame = orthonormal_frame_from_matrix(&gm, Some(xi), true)?;
    let spatial: Vec<f64> = frame.vectors[1..]
        .iter()
        .map(|e| (e.transpose() * &sm * e)[0])
        .collect();
    let a = spatial.iter().sum::<f64>() / spatial.len() as f64;
    let spread = spatial.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - spatial.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = xi.dot(&(&sm * xi)) + a;
    let residual = matrix_max_abs(&(&sm - rank2(a, &gm, b, &eta)));
    let diff = 2.0 * (a - lambda) / kappa;
    let sum = b / kappa;
    let state = FluidState { sigma: 0.5 * (sum + diff), rho: 0.5 * (sum - diff), kappa, lambda };
    let fit = FluidFormFit {
        a,
        b,
        residual,
        spread,
        perfect_fluid: residual <= tolerance && spread <= tolerance,
    };
    Ok((state, fit))
}

/// Eigenvalues of the mixed EFE left side against `{−κσ, κρ, κρ, κρ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenCheckResult {
    /// Real parts, ascending.
    pub eigenvalues: Vec<f64>,
    /// Largest imaginary part encountered.
    pub max_imaginary: f64,
    /// Ascending.
    pub expected: Vec<f64>,
    pub max_deviation: f64,
    pub efe_residual: f64,
    /// False when the EFE residual exceeds the tolerance given.
    pub applicable: bool,
}

/// Real parts and largest imaginary part of the spectrum.
///
/// The Schur iteration stalls on zero or exactly degenerate spectra, so the
/// matrix is shifted by a multiple of the identity first.
fn eigenvalues(m: DMatrix<f64>) -> (Vec<f64>, f64) {
    let n = m.nrows();
    let shift = 1.0 + matrix_max_abs(&m) * 1.618;
    let shifted = m + DMatrix::identity(n, n) * shift;
    match Schur::try_new(shifted, 1e-15, 100_000) {
        Some(schur) => {
            let ev = schur.complex_eigenvalues();
            (
                ev.iter().map(|z| z.re - shift).collect(),
                ev.iter().fold(0.0f64, |acc, z| acc.max(z.im.abs())),
            )
        }
        None => (vec![f64::NAN; n], f64::INFINITY),
    }
}

pub(crate) fn eigen_check_from(
    g: &DMatrix<f64>,
    inv: &DMatrix<f64>,
    s: &DMatrix<f64>,
    r: f64,
    eta: &DVector<f64>,
    fluid: &FluidState,
    efe_tolerance: f64,
) -> EigenCheckResult {
    let n = g.nrows();
    let lhs = s + g * (fluid.lambda - 0.5 * r);
    let t = rank2(fluid.rho, g, fluid.sigma + fluid.rho, eta);
    let efe = matrix_max_abs(&(&lhs - t * fluid.kappa));
    let mixed = inv * &lhs;
    let (mut eigenvalues, max_imaginary) = eigenvalues(mixed);
    eigenvalues.sort_by(f64::total_cmp);
    let mut expected = vec![fluid.kappa * fluid.rho; n];
    expected[0] = -fluid.kappa * fluid.sigma;
    expected.sort_by(f64::total_cmp);
    let max_deviation = eigenvalues
        .iter()
        .zip(&expected)
        .fold(max_imaginary, |m, (a, b)| m.max((a - b).abs()));
    EigenCheckResult {
        eigenvalues,
        max_imaginary,
        expected,
        max_deviation,
        efe_residual: efe,
        applicable: efe <= efe_tolerance,
    }
}

pub fn einstein_eigen_check(
    m: &MetricSpec,
    fluid: &FluidState,
    xi: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
    efe_tolerance: f64,
) -> Result<EigenCheckResult> {
    let c = curvature_at(m, p, cfg)?;
    let v = vector_at(m, xi, p, cfg)?;
    let eta = unit_timelike_covector(&c.metric, &v)?;
    Ok(eigen_check_from(&c.metric, &c.inverse, &c.ricci.matrix(), c.scalar, &eta, fluid, efe_tolerance))
}
