//! Soliton equations on perfect fluid spacetimes.
//!
//! Every family is evaluated as a left-hand-side tensor that vanishes on a
//! solution. With `L = £_V g`, `c = p + 2/n` and `n = 4`:
//!
//! | family                         | residual                                   |
//! |--------------------------------|--------------------------------------------|
//! | `ricci`                        | `L + 2S + 2Λg`                             |
//! | `conformal_ricci`              | `L + 2S + (2Λ − c)g`                       |
//! | `conformal_eta_ricci`          | `L + 2S + (2Λ − c)g + 2μ η⊗η`              |
//! | `yamabe`                       | `½L − (r − Λ)g`                            |
//! | `ricci_yamabe`                 | `L + 2αS − (2Λ − βr)g`                     |
//! | `gradient_ricci_yamabe`        | `Hess f + αS − (Λ − βr/2)g`                |
//! | `conformal_ricci_yamabe`       | `L + 2αS + (2Λ − βr − c)g`                 |
//! | `conformal_eta_ricci_yamabe`   | `L + 2αS + (2Λ − βr − c)g + 2μ η⊗η`        |
//!
//! `α` and `β` are ignored by families that do not mention them. Constants
//! such as `Λ` and `μ` are recovered from projections of sampled tensors;
//! the closed forms in [`lambda_closed_form`] and [`eta_closed_forms`] are
//! independent oracles for those projections.

mod conformal;
mod eta;
mod torse;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    curvature_at, hessian_matrix, matrix_max_abs, orthonormal_frame_from_matrix, vector_at,
    vector_jet, FramePack, GeometryError, MetricSpec, NumericsConfig, TensorSample, Valence,
    VectorFieldSpec,
};
use crate::spacetime::{unit_timelike_covector, FluidState, ModelError, ScalarProfile};

pub use conformal::{
    ckv_fit, ckv_from_samples, einstein_fit, einstein_fit_at, nabla_decomposition_check,
    phi_closed_form, psi_for_einstein, soliton_consequences, two_form_pack, CkvAnalysis,
    CkvCategory, EinsteinFit, SolitonConsequences, TwoFormPack,
};
pub use eta::{
    displayed_system_residual, eta_closed_forms, eta_projection_gap, eta_projection_solve,
    eta_projection_solve_terms, laplacian_identity_check, EtaSolitonSolve, LaplacianIdentity,
};
pub use torse::{
    torse_consequence_residuals, torse_forming_local_residual, torse_forming_residual, TorseConsequences,
};

/// Default `|Λ|` below which a soliton is steady.
pub const STEADY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolitonError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{family} needs a value for Λ")]
    MissingLambda { family: SolitonFamily },
    #[error("{family} needs a value for μ")]
    MissingMu { family: SolitonFamily },
    #[error("μ is only meaningful for η-families, not {family}")]
    UnexpectedMu { family: SolitonFamily },
    #[error("{family} fixes n = 4, got dimension {dim}")]
    ConformalDimension { family: SolitonFamily, dim: usize },
    #[error("{family} needs a gradient potential field")]
    NotGradient { family: SolitonFamily },
    #[error("a unit timelike flow ξ is required here")]
    MissingFlow,
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
    #[error("at least {needed} sample points are required, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("singular projection system (det = {0})")]
    SingularSystem(f64),
}

impl From<GeometryError> for SolitonError {
    fn from(e: GeometryError) -> Self {
        SolitonError::Model(ModelError::Geometry(e))
    }
}

pub type Result<T> = std::result::Result<T, SolitonError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonFamily {
    Ricci,
    ConformalRicci,
    ConformalEtaRicci,
    Yamabe,
    RicciYamabe,
    GradientRicciYamabe,
    ConformalRicciYamabe,
    ConformalEtaRicciYamabe,
}

impl SolitonFamily {
    pub const ALL: [SolitonFamily; 8] = [
        SolitonFamily::Ricci,
        SolitonFamily::ConformalRicci,
        SolitonFamily::ConformalEtaRicci,
        SolitonFamily::Yamabe,
        SolitonFamily::RicciYamabe,
        SolitonFamily::GradientRicciYamabe,
        SolitonFamily::ConformalRicciYamabe,
        SolitonFamily::ConformalEtaRicciYamabe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolitonFamily::Ricci => "ricci",
            SolitonFamily::ConformalRicci => "conformal_ricci",
            SolitonFamily::ConformalEtaRicci => "conformal_eta_ricci",
            SolitonFamily::Yamabe => "yamabe",
            SolitonFamily::RicciYamabe => "ricci_yamabe",
            SolitonFamily::GradientRicciYamabe => "gradient_ricci_yamabe",
            SolitonFamily::ConformalRicciYamabe => "conformal_ricci_yamabe",
            SolitonFamily::ConformalEtaRicciYamabe => "conformal_eta_ricci_yamabe",
        }
    }

    pub fn is_eta(self) -> bool {
        matches!(self, SolitonFamily::ConformalEtaRicci | SolitonFamily::ConformalEtaRicciYamabe)
    }

    pub fn is_conformal(self) -> bool {
        matches!(
            self,
            SolitonFamily::ConformalRicci
                | SolitonFamily::ConformalEtaRicci
                | SolitonFamily::ConformalRicciYamabe
                | SolitonFamily::ConformalEtaRicciYamabe
        )
    }
}

impl std::fmt::Display for SolitonFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Family tag and constants of a soliton equation.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonParams {
    pub family: SolitonFamily,
    pub alpha: f64,
    pub beta: f64,
    /// Conformal pressure `p`, possibly time dependent.
    pub p: ScalarProfile,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
}

impl SolitonParams {
    pub fn new(family: SolitonFamily, alpha: f64, beta: f64, p: f64) -> Self {
        Self { family, alpha, beta, p: ScalarProfile::Const(p), lambda: None, mu: None }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.family.is_conformal() && dim != 4 {
            return Err(SolitonError::ConformalDimension { family: self.family, dim });
        }
        if self.mu.is_some() && !self.family.is_eta() {
            return Err(SolitonError::UnexpectedMu { family: self.family });
        }
        Ok(())
    }

    fn require_lambda(&self) -> Result<f64> {
        self.lambda.ok_or(SolitonError::MissingLambda { family: self.family })
    }

    fn require_mu(&self) -> Result<f64> {
        self.mu.ok_or(SolitonError::MissingMu { family: self.family })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonClass {
    Expanding,
    Steady,
    Shrinking,
}

impl SolitonClass {
    fn mirrored(self) -> Self {
        match self {
            SolitonClass::Expanding => SolitonClass::Shrinking,
            SolitonClass::Steady => SolitonClass::Steady,
            SolitonClass::Shrinking => SolitonClass::Expanding,
        }
    }
}

/// Which sign of `Λ` counts as expanding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `Λ > 0` expanding, `Λ < 0` shrinking.
    #[default]
    PositiveExpanding,
    /// `Λ < 0` expanding, `Λ > 0` shrinking.
    NegativeExpanding,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub lambda: f64,
    pub class: SolitonClass,
    pub convention: SignConvention,
    pub tolerance: f64,
}

pub fn classify(lambda: f64, convention: SignConvention, tolerance: f64) -> Result<ClassificationResult> {
    if !(tolerance >= 0.0) {
        return Err(SolitonError::NegativeTolerance(tolerance));
    }
    let positive = if lambda.abs() <= tolerance {
        SolitonClass::Steady
    } else if lambda > 0.0 {
        SolitonClass::Expanding
    } else {
        SolitonClass::Shrinking
    };
    let class = match convention {
        SignConvention::PositiveExpanding => positive,
        SignConvention::NegativeExpanding => positive.mirrored(),
    };
    Ok(ClassificationResult { lambda, class, convention, tolerance })
}

/// Tensors entering a soliton equation at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SolitonTerms {
    pub g: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    /// `£_V g`.
    pub lie: DMatrix<f64>,
    pub ricci: DMatrix<f64>,
    pub r: f64,
    /// The fluid flow, when one is given.
    pub xi: Option<DVector<f64>>,
    /// `η = g(ξ, ·)`.
    pub eta: Option<DVector<f64>>,
    pub div_xi: Option<f64>,
    /// `Hess f` when `V = grad f`.
    pub hessian: Option<DMatrix<f64>>,
}

impl SolitonTerms {
    /// Samples every term from the metric.
    pub fn sample(
        m: &MetricSpec,
        v: &VectorFieldSpec,
        xi: Option<&VectorFieldSpec>,
        p: &[f64],
        cfg: &NumericsConfig,
    ) -> Result<Self> {
        let c = curvature_at(m, p, cfg)?;
        let lie = vector_jet(m, v, p, cfg)?.lie_derivative();
        let hessian = match v.potential() {
            Some(f) => Some(hessian_matrix(m, f, p, cfg)?),
            None => None,
        };
        let (xi_v, eta, div_xi) = match xi {
            Some(field) => {
                let x = vector_at(m, field, p, cfg)?;
                let eta = &c.metric * &x;
                let div = vector_jet(m, field, p, cfg)?.nabla.trace();
                (Some(x), Some(eta), Some(div))
            }
            None => (None, None, None),
        };
        Ok(Self {
            g: c.metric,
            inv: c.inverse,
            lie,
            ricci: c.ricci.matrix(),
            r: c.scalar,
            xi: xi_v,
            eta,
            div_xi,
            hessian,
        })
    }

    /// Terms of a perfect fluid spacetime whose flow is torse-forming and
    /// serves as the potential field: `S = A g + B η⊗η`, `£_ξ g = 2(g + η⊗η)`,
    /// `r = 4λ + κ(σ − 3ρ)` and `div ξ = n − 1`.
    pub fn synthetic(g: DMatrix<f64>, xi: DVector<f64>, fluid: &FluidState) -> Result<Self> {
        let n = g.nrows();
        let inv = g
            .clone()
            .try_inverse()
            .ok_or(GeometryError::SingularMetric { det: 0.0, point: vec![] })?;
        let eta = unit_timelike_covector(&g, &xi)?;
        let ee = &eta * eta.transpose();
        let ricci = &g * fluid.ricci_a() + &ee * fluid.ricci_b();
        let lie = (&g + &ee) * 2.0;
        Ok(Self {
            g,
            inv,
            lie,
            ricci,
            r: fluid.scalar_curvature(),
            xi: Some(xi),
            eta: Some(eta),
            div_xi: Some((n - 1) as f64),
            hessian: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub(crate) fn flow(&self) -> Result<(&DVector<f64>, &DVector<f64>)> {
        match (&self.xi, &self.eta) {
            (Some(x), Some(e)) => {
                let norm = x.dot(e);
                if (norm + 1.0).abs() > crate::spacetime::UNIT_NORM_TOL {
                    return Err(ModelError::NotUnitTimelike { norm }.into());
                }
                Ok((x, e))
            }
            _ => Err(SolitonError::MissingFlow),
        }
    }

    pub(crate) fn frame(&self) -> Result<FramePack> {
        let (xi, _) = self.flow()?;
        Ok(orthonormal_frame_from_matrix(&self.g, Some(xi), true)?)
    }
}

/// Left-hand side of the family's equation from pre-sampled terms, with
/// the conformal pressure already evaluated.
pub fn residual_from_terms(terms: &SolitonTerms, params: &SolitonParams, p: f64) -> Result<DMatrix<f64>> {
    let n = terms.dim();
    params.validate(n)?;
    let lambda = params.require_lambda()?;
    let (g, l, s, r) = (&terms.g, &terms.lie, &terms.ricci, terms.r);
    let (a, b) = (params.alpha, params.beta);
    let c = p + 2.0 / n as f64;
    let eta_term = |m: DMatrix<f64>| -> Result<DMatrix<f64>> {
        let mu = params.require_mu()?;
        let (_, eta) = terms.flow()?;
        Ok(m + eta * eta.transpose() * (2.0 * mu))
    };
    Ok(match params.family {
        SolitonFamily::Ricci => l + s * 2.0 + g * (2.0 * lambda),
        SolitonFamily::ConformalRicci => l + s * 2.0 + g * (2.0 * lambda - c),
        SolitonFamily::ConformalEtaRicci => eta_term(l + s * 2.0 + g * (2.0 * lambda - c))?,
        SolitonFamily::Yamabe => l * 0.5 - g * (r - lambda),
        SolitonFamily::RicciYamabe => l + s * (2.0 * a) - g * (2.0 * lambda - b * r),
        SolitonFamily::GradientRicciYamabe => {
            let h = terms
                .hessian
                .as_ref()
                .ok_or(SolitonError::NotGradient { family: params.family })?;
            h + s * a - g * (lambda - 0.5 * b * r)
        }
        SolitonFamily::ConformalRicciYamabe => l + s * (2.0 * a) + g * (2.0 * lambda - b * r - c),
        SolitonFamily::ConformalEtaRicciYamabe => {
            eta_term(l + s * (2.0 * a) + g * (2.0 * lambda - b * r - c))?
        }
    })
}

/// The soliton equation's left-hand side at `p`. `xi` supplies `η` for the
/// η-families.
pub fn soliton_residual(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    xi: Option<&VectorFieldSpec>,
    params: &SolitonParams,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    params.validate(m.dim())?;
    let terms = SolitonTerms::sample(m, v, xi, p, cfg)?;
    let res = residual_from_terms(&terms, params, params.p.at(p)?)?;
    Ok(TensorSample::from_matrix(Valence::Tensor02, &res, p, true))
}

/// `Hess f + αS − (Λ − βr/2)g`, whatever family tag `params` carries.
pub fn gradient_soliton_residual(
    m: &MetricSpec,
    f: &crate::dsl::Expr,
    params: &SolitonParams,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    let gradient = SolitonParams { family: SolitonFamily::GradientRicciYamabe, mu: None, ..params.clone() };
    soliton_residual(m, &VectorFieldSpec::Gradient(f.clone()), None, &gradient, p, cfg)
}

/// The `Λ` zeroing the `ξξ` component of the residual. Every family is
/// affine in `Λ`, so two evaluations determine it.
pub fn lambda_from_terms(terms: &SolitonTerms, params: &SolitonParams, p: f64) -> Result<f64> {
    let (xi, _) = terms.flow()?;
    let at = |lambda: f64| -> Result<f64> {
        let q = SolitonParams { lambda: Some(lambda), ..params.clone() };
        let e = residual_from_terms(terms, &q, p)?;
        Ok(xi.dot(&(e * xi)))
    };
    let e0 = at(0.0)?;
    let slope = at(1.0)? - e0;
    Ok(-e0 / slope)
}

/// `Λ` from the `ξξ` projection of numerically sampled `£_V g`, `S`, `r`.
pub fn lambda_from_projection(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    xi: &VectorFieldSpec,
    params: &SolitonParams,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64> {
    params.validate(m.dim())?;
    let terms = SolitonTerms::sample(m, v, Some(xi), p, cfg)?;
    lambda_from_terms(&terms, params, params.p.at(p)?)
}

/// `κ/2 [(α+β)σ + 3(α−β)ρ] + (2β−α)λ + ½(p + ½)`.
pub fn lambda_closed_form(fluid: &FluidState, alpha: f64, beta: f64, p: f64) -> f64 {
    0.5 * fluid.kappa * ((alpha + beta) * fluid.sigma + 3.0 * (alpha - beta) * fluid.rho)
        + (2.0 * beta - alpha) * fluid.lambda
        + 0.5 * (p + 0.5)
}

/// `ακ(σ + 3ρ)/2 + βr/2 − αλ + ½(p + ½)`, the same value before `r` is
/// eliminated.
pub fn lambda_with_scalar_curvature(fluid: &FluidState, alpha: f64, beta: f64, r: f64, p: f64) -> f64 {
    0.5 * alpha * fluid.kappa * (fluid.sigma + 3.0 * fluid.rho) + 0.5 * beta * r - alpha * fluid.lambda
        + 0.5 * (p + 0.5)
}

/// Largest absolute entry of a matrix residual.
pub fn residual_norm(m: &DMatrix<f64>) -> f64 {
    matrix_max_abs(m)
}
