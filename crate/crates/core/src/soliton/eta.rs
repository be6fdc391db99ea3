use serde::{Deserialize, Serialize};

use super::{residual_from_terms, Result, SolitonError, SolitonFamily, SolitonParams, SolitonTerms};
use crate::dsl::Expr;
use crate::geometry::{laplacian_routes, metric_pair, vector_at, LaplacianRoutes, MetricSpec, NumericsConfig, VectorFieldSpec};
use crate::spacetime::{FluidState, ModelError, ScalarProfile, UNIT_NORM_TOL};

/// `(Λ, μ)` solved from the frame trace and the `ξξ` component of the
/// conformal η-Ricci–Yamabe equation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaSolitonSolve {
    pub lambda: f64,
    pub mu: f64,
    pub div_xi: f64,
    /// Rows scaled to read `4Λ − μ = rhs[0]` and `Λ − μ = rhs[1]`.
    pub coefficients: [[f64; 2]; 2],
    pub rhs: [f64; 2],
    /// `max |A (Λ, μ) − rhs|`.
    pub system_residual: f64,
}

/// Solves from pre-sampled terms; `terms.lie` must be `£_ξ g`.
pub fn eta_projection_solve_terms(terms: &SolitonTerms, alpha: f64, beta: f64, p: f64) -> Result<EtaSolitonSolve> {
    let (xi, _) = terms.flow()?;
    let div_xi = terms.div_xi.ok_or(SolitonError::MissingFlow)?;
    let frame = terms.frame()?;
    let base = SolitonParams::new(SolitonFamily::ConformalEtaRicciYamabe, alpha, beta, p);
    let project = |lambda: f64, mu: f64| -> Result<(f64, f64)> {
        let q = base.clone().with_lambda(lambda).with_mu(mu);
        let e = residual_from_terms(terms, &q, p)?;
        Ok((frame.trace(&e), xi.dot(&(&e * xi))))
    };
    let (t0, x0) = project(0.0, 0.0)?;
    let (tl, xl) = project(1.0, 0.0)?;
    let (tm, xm) = project(0.0, 1.0)?;
    let (tl, tm, xl, xm) = (tl - t0, tm - t0, xl - x0, xm - x0);

    let s1 = 4.0 / tl;
    let s2 = 1.0 / xl;
    let a = [[tl * s1, tm * s1], [xl * s2, xm * s2]];
    let rhs = [-t0 * s1, -x0 * s2];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(det.abs() > 1e-12) || !det.is_finite() {
        return Err(SolitonError::SingularSystem(det));
    }
    let lambda = (rhs[0] * a[1][1] - a[0][1] * rhs[1]) / det;
    let mu = (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det;
    let system_residual = (a[0][0] * lambda + a[0][1] * mu - rhs[0])
        .abs()
        .max((a[1][0] * lambda + a[1][1] * mu - rhs[1]).abs());
    Ok(EtaSolitonSolve { lambda, mu, div_xi, coefficients: a, rhs, system_residual })
}

/// Samples `£_ξ g`, `S`, `r`, `div ξ` at `point` and solves for `(Λ, μ)`.
pub fn eta_projection_solve(
    m: &MetricSpec,
    xi: &VectorFieldSpec,
    alpha: f64,
    beta: f64,
    p: &ScalarProfile,
    point: &[f64],
    cfg: &NumericsConfig,
) -> Result<EtaSolitonSolve> {
    let terms = SolitonTerms::sample(m, xi, Some(xi), point, cfg)?;
    eta_projection_solve_terms(&terms, alpha, beta, p.at(point)?)
}

/// The closed forms for `(Λ, μ)` exactly as displayed:
///
/// `Λ = (2β−α)λ + κ/2 [((2β−3α)/3)σ − (2β−α)ρ] + ½(p + ½) − div ξ/3`,
/// `μ = −κ [((2β+3α)/3)σ − (2β−α)ρ] − div ξ/3`.
pub fn eta_closed_forms(fluid: &FluidState, alpha: f64, beta: f64, p: f64, div_xi: f64) -> (f64, f64) {
    let (k, s, r) = (fluid.kappa, fluid.sigma, fluid.rho);
    let lambda = (2.0 * beta - alpha) * fluid.lambda
        + 0.5 * k * ((2.0 * beta - 3.0 * alpha) / 3.0 * s - (2.0 * beta - alpha) * r)
        + 0.5 * (p + 0.5)
        - div_xi / 3.0;
    let mu = -k * ((2.0 * beta + 3.0 * alpha) / 3.0 * s - (2.0 * beta - alpha) * r) - div_xi / 3.0;
    (lambda, mu)
}

/// Residuals of `(Λ, μ)` in the displayed trace and `ξξ` equations
/// `4Λ − μ = 4(2β−α)λ + κ(2β−α)(σ−3ρ) + 2(p+½) − div ξ` and
/// `Λ − μ = (2β−α)λ + κ/2 [(2β+α)σ − 3(2β−α)ρ] + ½(p+½)`.
pub fn displayed_system_residual(
    fluid: &FluidState,
    alpha: f64,
    beta: f64,
    p: f64,
    div_xi: f64,
    lambda: f64,
    mu: f64,
) -> [f64; 2] {
    let (k, s, r) = (fluid.kappa, fluid.sigma, fluid.rho);
    let c = 2.0 * beta - alpha;
    let trace = 4.0 * c * fluid.lambda + k * c * (s - 3.0 * r) + 2.0 * (p + 0.5) - div_xi;
    let flow = c * fluid.lambda + 0.5 * k * ((2.0 * beta + alpha) * s - 3.0 * c * r) + 0.5 * (p + 0.5);
    [4.0 * lambda - mu - trace, lambda - mu - flow]
}

/// Projection solve minus displayed closed forms on exact perfect-fluid
/// terms: `(βκ(σ−3ρ)/6, 2βκ(σ−3ρ)/3)`.
///
/// The `ξξ` component of the equation gives `Λ − μ` with `(α+β)σ + 3(α−β)ρ`
/// inside the bracket, not `(2β+α)σ − 3(2β−α)ρ`; the two agree only when
/// `β = 0` or `σ = 3ρ`.
pub fn eta_projection_gap(fluid: &FluidState, beta: f64) -> (f64, f64) {
    let g = beta * fluid.kappa * (fluid.sigma - 3.0 * fluid.rho);
    (g / 6.0, 2.0 * g / 3.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianIdentity {
    /// `Δf = div grad f`.
    pub laplacian: f64,
    /// `−3[μ + κ{((2β+3α)/3)σ − (2β−α)ρ}]`.
    pub rhs: f64,
    pub residual: f64,
    pub trace_of_hessian: f64,
    pub route_disagreement: f64,
}

/// Compares `Δf` with the value the η-soliton predicts for a unit timelike
/// gradient flow `ξ = grad f`.
pub fn laplacian_identity_check(
    m: &MetricSpec,
    f: &Expr,
    fluid: &FluidState,
    alpha: f64,
    beta: f64,
    mu: f64,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<LaplacianIdentity> {
    let (g, _) = metric_pair(m, p, cfg)?;
    let grad = vector_at(m, &VectorFieldSpec::Gradient(f.clone()), p, cfg)?;
    let norm = grad.dot(&(g * &grad));
    if (norm + 1.0).abs() > UNIT_NORM_TOL {
        return Err(ModelError::NotUnitTimelike { norm }.into());
    }
    let routes: LaplacianRoutes = laplacian_routes(m, f, p, cfg)?;
    let (k, s, r) = (fluid.kappa, fluid.sigma, fluid.rho);
    let rhs = -3.0 * (mu + k * ((2.0 * beta + 3.0 * alpha) / 3.0 * s - (2.0 * beta - alpha) * r));
    let laplacian = routes.divergence_of_gradient;
    Ok(LaplacianIdentity {
        laplacian,
        rhs,
        residual: (laplacian - rhs).abs(),
        trace_of_hessian: routes.trace_of_hessian,
        route_disagreement: routes.disagreement(),
    })
}
