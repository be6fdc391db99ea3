//! Runs every applicable identity of a [`Scenario`] over its plan points and
//! assembles an [`IdentityReport`].
//!
//! Checks come in four kinds. Identities hold on any input and are always
//! asserted. Hypotheses (unit timelike flow, torse-forming flow, field
//! equations) are reported but never asserted; consequences are asserted
//! only when the hypotheses they rest on hold, and flagged otherwise.
//! Diagnostics are reported without affecting the verdict.
//!
//! The torse-forming hypothesis is tested to first order around each point,
//! since its curvature consequences come from differentiating it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    christoffel, christoffel_exact, curvature_at, div_tensor11, divergence_vector, einstein_tensor,
    inverse_metric, laplacian_routes, lie_derivative_metric, vector_at, NumericsConfig, TensorSample,
    Valence, VectorFieldSpec,
};
use crate::scenario::{FluidSource, Scenario, ScenarioFile, Tolerances};
use crate::soliton::{
    ckv_from_samples, classify, einstein_fit_at, eta_closed_forms, eta_projection_gap,
    eta_projection_solve_terms, lambda_closed_form, lambda_from_terms, laplacian_identity_check,
    nabla_decomposition_check, phi_closed_form, psi_for_einstein, residual_from_terms,
    soliton_consequences, torse_consequence_residuals, torse_forming_local_residual, two_form_pack,
    CkvAnalysis, ClassificationResult, SolitonFamily, SolitonTerms,
};
use crate::spacetime::{efe_residual, fluid_from_ricci, unit_timelike_covector, FluidState};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every identity plus the soliton solve.
    Analyze,
    /// Identities only; no soliton constants are solved for.
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Identity,
    Hypothesis,
    Consequence,
    Expectation,
    Diagnostic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not asserted because a hypothesis does not hold.
    Flagged,
    /// Reported only.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub kind: CheckKind,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl IdentityCheck {
    pub fn within(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub point: Vec<f64>,
    pub identities: Vec<IdentityCheck>,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Spread { mean, min, max, spread: max - min })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub max_ricci_asymmetry: f64,
    /// Christoffel error ratio when the step is halved, without
    /// extrapolation; about 4 for second-order stencils. Absent when the
    /// error is at rounding level.
    pub fd_convergence_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub asserted: usize,
    pub failed: usize,
    pub flagged: usize,
    pub point_errors: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub schema_version: String,
    pub tool: String,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub scenario: ScenarioFile,
    pub numerics: NumericsConfig,
    pub tolerances: Tolerances,
    pub warnings: Vec<String>,
    pub points: Vec<PointReport>,
    pub constants: BTreeMap<String, Spread>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ckv: Option<CkvAnalysis>,
    /// Scenario-level checks: expectations and cross-point consistency.
    pub checks: Vec<IdentityCheck>,
    pub health: Health,
    pub summary: Summary,
    pub verdict: Verdict,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Every check of the report, point by point, then scenario-level.
    pub fn all_checks(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.points.iter().flat_map(|p| p.identities.iter()).chain(self.checks.iter())
    }

    /// The named check at every point where it was evaluated.
    pub fn point_checks<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a IdentityCheck> + 'a {
        self.points.iter().flat_map(move |p| p.identities.iter().filter(move |c| c.name == name))
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("every plan point failed; first error: {first}")]
    AllPointsFailed { first: String, count: usize },
}

#[derive(Default)]
struct Checks(Vec<IdentityCheck>);

impl Checks {
    fn push(&mut self, name: &str, kind: CheckKind, residual: f64, tolerance: f64, status: Status, note: Option<String>) {
        self.0.push(IdentityCheck { name: name.to_string(), kind, residual, tolerance, status, note });
    }

    fn status(residual: f64, tolerance: f64) -> Status {
        if residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn identity(&mut self, name: &str, residual: f64, tolerance: f64) {
        self.push(name, CheckKind::Identity, residual, tolerance, Self::status(residual, tolerance), None);
    }

    fn hypothesis(&mut self, name: &str, residual: f64, tolerance: f64) -> bool {
        let holds = residual <= tolerance;
        let note = (!holds).then(|| "hypothesis does not hold".to_string());
        self.push(name, CheckKind::Hypothesis, residual, tolerance, Status::Info, note);
        holds
    }

    /// Asserted when `missing` is empty, flagged with the missing hypotheses
    /// otherwise.
    fn consequence(&mut self, name: &str, residual: f64, tolerance: f64, missing: &[&str]) {
        if missing.is_empty() {
            self.push(name, CheckKind::Consequence, residual, tolerance, Self::status(residual, tolerance), None);
        } else {
            let note = format!("not asserted: {} does not hold", missing.join(", "));
            self.push(name, CheckKind::Consequence, residual, tolerance, Status::Flagged, Some(note));
        }
    }

    fn expectation(&mut self, name: &str, residual: f64, tolerance: f64, note: Option<String>) {
        self.push(name, CheckKind::Expectation, residual, tolerance, Self::status(residual, tolerance), note);
    }

    fn diagnostic(&mut self, name: &str, residual: f64, tolerance: f64, note: Option<&str>) {
        self.push(name, CheckKind::Diagnostic, residual, tolerance, Status::Info, note.map(str::to_string));
    }
}

/// Per-point results that feed scenario-level analysis.
#[derive(Default)]
struct PointEval {
    checks: Checks,
    constants: BTreeMap<String, f64>,
    ckv_sample: Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>,
    einstein: Option<(f64, f64, f64)>,
    ricci_asymmetry: f64,
}

fn missing(flags: &[(&'static str, bool)]) -> Vec<&'static str> {
    flags.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect()
}

fn evaluate_point(s: &Scenario, mode: Mode, p: &[f64]) -> Result<PointEval, String> {
    let m = &s.metric;
    let cfg = &s.numerics;
    let tol = s.tolerances.identity;
    let e = |err: &dyn std::fmt::Display| err.to_string();
    let mut out = PointEval::default();
    let ch = &mut out.checks;
    let k = &mut out.constants;

    let c = curvature_at(m, p, cfg).map_err(|x| e(&x))?;
    out.ricci_asymmetry = c.ricci_asymmetry;
    ch.identity("ricci_symmetry", c.ricci_asymmetry, tol);
    let fd = christoffel(m, p, cfg).map_err(|x| e(&x))?;
    let exact = christoffel_exact(m, p, cfg).map_err(|x| e(&x))?;
    let gamma_err = fd.components.iter().zip(&exact.components).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    ch.identity("christoffel_accuracy", gamma_err, tol);
    let mixed_einstein = |q: &[f64]| {
        let g = einstein_tensor(m, q, cfg)?.matrix();
        Ok(inverse_metric(m, q, cfg)?.matrix() * g)
    };
    let bianchi = div_tensor11(m, mixed_einstein, p, cfg).map_err(|x| e(&x))?.max_abs();
    ch.identity("contracted_bianchi", bianchi, s.tolerances.bianchi);
    k.insert("r".into(), c.scalar);
    let s_mat = c.ricci.matrix();
    let (theta, einstein_res) = einstein_fit_at(&s_mat, &c.metric, &c.inverse);
    k.insert("theta".into(), theta);
    ch.diagnostic("einstein_form", einstein_res, tol, Some("S = θg"));
    out.einstein = Some((theta, einstein_res, c.scalar));

    // flow hypotheses
    let mut unit = false;
    let mut torse = false;
    let mut xi_vec: Option<DVector<f64>> = None;
    if let Some(xi) = &s.flow {
        let x = vector_at(m, xi, p, cfg).map_err(|x| e(&x))?;
        let norm = x.dot(&(&c.metric * &x));
        unit = ch.hypothesis("flow_unit_timelike", (norm + 1.0).abs(), tol);
        k.insert("div_xi".into(), divergence_vector(m, xi, p, cfg).map_err(|x| e(&x))?);
        let tf = torse_forming_local_residual(m, xi, p, cfg).map_err(|x| e(&x))?;
        torse = ch.hypothesis("torse_forming", tf, tol);
        let tc = torse_consequence_residuals(m, xi, p, cfg).map_err(|x| e(&x))?;
        let need = missing(&[("flow_unit_timelike", unit), ("torse_forming", torse)]);
        ch.consequence("geodesic_flow", tc.geodesic, tol, &need);
        ch.consequence("eta_derivative", tc.eta_derivative, tol, &need);
        ch.consequence("curvature_on_flow", tc.curvature_on_flow, tol, &need);
        ch.consequence("eta_curvature", tc.eta_curvature, tol, &need);
        if let VectorFieldSpec::Gradient(f) = xi {
            let routes = laplacian_routes(m, f, p, cfg).map_err(|x| e(&x))?;
            ch.identity("laplacian_routes", routes.disagreement(), tol);
            k.insert("laplacian".into(), routes.divergence_of_gradient);
        }
        xi_vec = Some(x);
    }

    // fluid
    let mut fluid: Option<FluidState> = None;
    let mut efe = false;
    if let (Some(source), Some(xi), Some(x)) = (&s.fluid, &s.flow, &xi_vec) {
        let state = match source {
            FluidSource::Explicit(profile) => Some(profile.at(p).map_err(|x| e(&x))?),
            FluidSource::FitFromRicci { kappa, lambda } if unit => {
                let (state, fit) = fluid_from_ricci(&c.ricci, &TensorSample::from_matrix(Valence::Tensor02, &c.metric, p, true), x, *kappa, *lambda, tol)
                    .map_err(|x| e(&x))?;
                ch.identity("perfect_fluid_form", fit.residual.max(fit.spread), tol);
                Some(state)
            }
            FluidSource::FitFromRicci { .. } => {
                ch.consequence("perfect_fluid_form", f64::INFINITY, tol, &["flow_unit_timelike"]);
                None
            }
        };
        if let Some(state) = state {
            k.insert("sigma".into(), state.sigma);
            k.insert("rho".into(), state.rho);
            if unit {
                let res = efe_residual(m, &state, xi, p, cfg).map_err(|x| e(&x))?.max_abs();
                efe = match source {
                    FluidSource::Explicit(_) => {
                        ch.identity("einstein_field_equations", res, tol);
                        res <= tol
                    }
                    FluidSource::FitFromRicci { .. } => ch.hypothesis("einstein_field_equations", res, tol),
                };
                let eta = unit_timelike_covector(&c.metric, x).map_err(|x| e(&x))?;
                let eig = crate::spacetime::eigen_check_from(
                    &c.metric, &c.inverse, &s_mat, c.scalar, &eta, &state, tol,
                );
                let need = missing(&[("einstein_field_equations", efe)]);
                ch.consequence("scalar_curvature_identity", (c.scalar - state.scalar_curvature()).abs(), tol, &need);
                ch.consequence("einstein_eigenvalues", eig.max_deviation, tol, &need);
            } else {
                ch.consequence("einstein_field_equations", f64::INFINITY, tol, &["flow_unit_timelike"]);
            }
            if s.file.expect.radiation == Some(true) {
                let etol = s.file.expect.tolerance.unwrap_or(tol);
                ch.expectation("expect_radiation", (state.sigma - 3.0 * state.rho).abs(), etol, None);
            }
            fluid = Some(state);
        }
    }

    // field V
    if let Some(v) = &s.field {
        let pack = two_form_pack(m, v, p, cfg).map_err(|x| e(&x))?;
        ch.identity("two_form_skewness", pack.skewness(), tol);
        ch.identity("two_form_definition", pack.defining_residual(), tol);
        ch.identity("nabla_decomposition", nabla_decomposition_check(m, v, p, cfg).map_err(|x| e(&x))?, tol);
        let lie = lie_derivative_metric(m, v, p, cfg).map_err(|x| e(&x))?.matrix();
        let n = c.metric.nrows() as f64;
        k.insert("phi".into(), c.inverse.component_mul(&lie).sum() / (2.0 * n));
        out.ckv_sample = Some((c.metric.clone(), c.inverse.clone(), lie));
    }

    let Some(setup) = s.soliton.as_ref().filter(|_| mode == Mode::Analyze) else {
        return Ok(out);
    };
    let v = s.field.as_ref().expect("validated: soliton implies a field");
    let params = &setup.params;
    let pval = params.p.at(p).map_err(|x| e(&x))?;
    let terms = SolitonTerms::sample(m, v, s.flow.as_ref(), p, cfg).map_err(|x| e(&x))?;
    let family = params.family;
    let same_field = !s.separate_field;

    let (lambda, mu, given) = if family.is_eta() {
        match (params.lambda, params.mu) {
            (Some(l), Some(mu)) => (l, Some(mu), true),
            _ => {
                let solve = eta_projection_solve_terms(&terms, params.alpha, params.beta, pval).map_err(|x| e(&x))?;
                ch.diagnostic("eta_system", solve.system_residual, tol, None);
                (solve.lambda, Some(solve.mu), false)
            }
        }
    } else {
        match params.lambda {
            Some(l) => (l, None, true),
            None => (lambda_from_terms(&terms, params, pval).map_err(|x| e(&x))?, None, false),
        }
    };
    k.insert("lambda".into(), lambda);
    if let Some(mu) = mu {
        k.insert("mu".into(), mu);
    }
    let solved = crate::soliton::SolitonParams { lambda: Some(lambda), mu, ..params.clone() };
    let soliton_res = residual_from_terms(&terms, &solved, pval).map_err(|x| e(&x))?.amax();
    let soliton_holds = soliton_res <= tol;
    if given {
        ch.identity("soliton_equation", soliton_res, tol);
    } else {
        ch.diagnostic("soliton_equation", soliton_res, tol, Some("full tensor residual at the projected constants"));
    }

    let (Some(fluid), Some(xi)) = (fluid, s.flow.as_ref()) else {
        return Ok(out);
    };
    let closed_need = missing(&[
        ("flow_unit_timelike", unit),
        ("torse_forming", torse),
        ("einstein_field_equations", efe),
        ("field_equals_flow", same_field),
    ]);
    match family {
        SolitonFamily::ConformalRicciYamabe => {
            let cf = lambda_closed_form(&fluid, params.alpha, params.beta, pval);
            k.insert("lambda_closed_form".into(), cf);
            k.insert("phi_closed_form".into(), phi_closed_form(&fluid, params.alpha, params.beta, pval, lambda));
            if !given {
                ch.consequence("lambda_closed_form", (lambda - cf).abs(), tol, &closed_need);
            }
            let cons = soliton_consequences(m, v, xi, &fluid, &solved, p, cfg, tol).map_err(|x| e(&x))?;
            ch.identity("norm_transport", cons.norm_transport, tol);
            let mut need = closed_need.clone();
            need.retain(|n| *n != "field_equals_flow");
            if !soliton_holds {
                need.push("soliton_equation");
            }
            ch.consequence("divergence_of_f", cons.divergence_of_f, tol, &need);
            ch.consequence("curvature_of_v", cons.curvature_of_v, tol, &need);
        }
        SolitonFamily::ConformalEtaRicciYamabe => {
            let mu = mu.expect("η family carries μ");
            let div = k.get("div_xi").copied().unwrap_or(0.0);
            let (lc, mc) = eta_closed_forms(&fluid, params.alpha, params.beta, pval, div);
            let (dl, dm) = eta_projection_gap(&fluid, params.beta);
            k.insert("lambda_closed_form".into(), lc);
            k.insert("mu_closed_form".into(), mc);
            if !given {
                ch.diagnostic(
                    "eta_closed_forms",
                    (lambda - lc).abs().max((mu - mc).abs()),
                    tol,
                    Some("displayed closed forms; differ from the projection by (βκ(σ−3ρ)/6, 2βκ(σ−3ρ)/3)"),
                );
                ch.consequence(
                    "eta_closed_forms_corrected",
                    (lambda - lc - dl).abs().max((mu - mc - dm).abs()),
                    tol,
                    &closed_need,
                );
            }
            if let VectorFieldSpec::Gradient(f) = xi {
                let need = missing(&[("flow_unit_timelike", unit), ("einstein_field_equations", efe)]);
                if unit {
                    let li = laplacian_identity_check(m, f, &fluid, params.alpha, params.beta, mu, p, cfg)
                        .map_err(|x| e(&x))?;
                    ch.consequence("laplacian_identity", li.residual, tol, &need);
                } else {
                    ch.consequence("laplacian_identity", f64::INFINITY, tol, &need);
                }
            }
        }
        _ => {}
    }
    Ok(out)
}

/// The serialized name of a unit enum variant.
fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default()
}

/// Christoffel error ratio at steps `h` and `h/2`, second-order stencils.
fn convergence_ratio(s: &Scenario, p: &[f64]) -> Option<f64> {
    let exact = christoffel_exact(&s.metric, p, &s.numerics).ok()?;
    let err = |h: f64| -> Option<f64> {
        let cfg = s.numerics.with_step(h).with_richardson(false);
        let fd = christoffel(&s.metric, p, &cfg).ok()?;
        Some(fd.components.iter().zip(&exact.components).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())))
    };
    let h = s.numerics.step.max(1e-2);
    let (a, b) = (err(h)?, err(h / 2.0)?);
    (a > 1e-11 && b > 0.0).then(|| a / b)
}

/// Evaluates the scenario at every plan point. Points are evaluated in
/// parallel and reported in plan order; the result does not depend on
/// scheduling.
pub fn run_suite(s: &Scenario, mode: Mode) -> Result<IdentityReport, ReportError> {
    let evals: Vec<Result<PointEval, String>> =
        s.points.par_iter().map(|p| evaluate_point(s, mode, p)).collect();

    if evals.iter().all(|e| e.is_err()) {
        let first = evals.iter().find_map(|e| e.as_ref().err().cloned()).unwrap_or_default();
        return Err(ReportError::AllPointsFailed { first, count: evals.len() });
    }

    let tol = s.tolerances.identity;
    let mut points = Vec::with_capacity(evals.len());
    let mut samples = Vec::new();
    let mut einstein = Vec::new();
    let mut max_asym = 0.0f64;
    let mut gathered: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut first_ok = None;
    for (index, (p, ev)) in s.points.iter().zip(evals).enumerate() {
        match ev {
            Ok(ev) => {
                first_ok.get_or_insert(index);
                max_asym = max_asym.max(ev.ricci_asymmetry);
                for (name, v) in &ev.constants {
                    gathered.entry(name.clone()).or_default().push(*v);
                }
                if let Some(sample) = ev.ckv_sample {
                    samples.push(sample);
                }
                if let Some(e) = ev.einstein {
                    einstein.push(e);
                }
                points.push(PointReport {
                    index,
                    point: p.clone(),
                    identities: ev.checks.0,
                    constants: ev.constants,
                    error: None,
                });
            }
            Err(err) => points.push(PointReport {
                index,
                point: p.clone(),
                identities: Vec::new(),
                constants: BTreeMap::new(),
                error: Some(err),
            }),
        }
    }
    let constants: BTreeMap<String, Spread> =
        gathered.iter().filter_map(|(k, v)| Spread::of(v).map(|s| (k.clone(), s))).collect();

    let mut checks = Checks::default();
    let lambda = constants.get("lambda").copied();
    let mu = constants.get("mu").copied();
    if let Some(l) = lambda {
        checks.diagnostic("lambda_constant", l.spread, tol, Some("spread of Λ over the plan"));
    }
    if let Some(m) = mu {
        checks.diagnostic("mu_constant", m.spread, tol, Some("spread of μ over the plan"));
    }

    let classification = match (&s.soliton, lambda, mode) {
        (Some(setup), Some(l), Mode::Analyze) => classify(l.mean, setup.convention, s.tolerances.steady).ok(),
        _ => None,
    };

    let ckv = if samples.len() >= 2 {
        ckv_from_samples(&samples, tol).ok().map(|mut a| {
            let all_einstein = einstein.len() == samples.len() && einstein.iter().all(|(_, res, _)| *res <= tol);
            if let (true, Some(setup), Some(l)) = (all_einstein, &s.soliton, lambda) {
                let params = &setup.params;
                let psi: Option<Vec<f64>> = s
                    .points
                    .iter()
                    .zip(&points)
                    .filter(|(_, pr)| pr.error.is_none())
                    .zip(&einstein)
                    .map(|((p, _), (theta, _, r))| {
                        params.p.at(p).ok().map(|pv| psi_for_einstein(*theta, *r, params.alpha, params.beta, pv, l.mean))
                    })
                    .collect();
                if let Some(psi) = psi {
                    a = a.attach_einstein(einstein.iter().map(|e| e.0).collect(), psi);
                }
            }
            a
        })
    } else {
        None
    };

    let expect = &s.file.expect;
    let etol = expect.tolerance.unwrap_or(tol);
    if mode == Mode::Analyze {
        if let Some(want) = expect.lambda {
            let got = lambda.map(|l| (l.min - want).abs().max((l.max - want).abs())).unwrap_or(f64::INFINITY);
            checks.expectation("expect_lambda", got, etol, None);
        }
        if let Some(want) = expect.mu {
            let got = mu.map(|l| (l.min - want).abs().max((l.max - want).abs())).unwrap_or(f64::INFINITY);
            checks.expectation("expect_mu", got, etol, None);
        }
        if let Some(want) = expect.classification {
            let got = classification.map(|c| c.class);
            let note = Some(format!("expected {}, got {}", label(&want), got.map_or("none".into(), |g| label(&g))));
            checks.expectation("expect_classification", if got == Some(want) { 0.0 } else { 1.0 }, 0.0, note);
        }
    }
    if let Some(want) = expect.ckv {
        let got = ckv.as_ref().map(|c| c.category);
        let note = Some(format!("expected {}, got {}", label(&want), got.map_or("none".into(), |g| label(&g))));
        checks.expectation("expect_ckv", if got == Some(want) { 0.0 } else { 1.0 }, 0.0, note);
    }

    let health = Health {
        max_ricci_asymmetry: max_asym,
        fd_convergence_ratio: first_ok.and_then(|i| convergence_ratio(s, &s.points[i])),
    };

    let mut summary = Summary::default();
    for c in points.iter().flat_map(|p| p.identities.iter()).chain(checks.0.iter()) {
        match c.status {
            Status::Pass => summary.asserted += 1,
            Status::Fail => {
                summary.asserted += 1;
                summary.failed += 1;
            }
            Status::Flagged => summary.flagged += 1,
            Status::Info => {}
        }
    }
    summary.point_errors = points.iter().filter(|p| p.error.is_some()).count();
    let verdict = if summary.failed == 0 && summary.point_errors == 0 { Verdict::Pass } else { Verdict::Fail };

    Ok(IdentityReport {
        schema_version: SCHEMA_VERSION.to_string(),
        tool: format!("solitonlab {}", env!("CARGO_PKG_VERSION")),
        mode,
        generated_at: None,
        scenario: s.file.clone(),
        numerics: s.numerics,
        tolerances: s.tolerances,
        warnings: s.warnings.clone(),
        points,
        constants,
        classification,
        ckv,
        checks: checks.0,
        health,
        summary,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Text,
}

pub fn emit_report(r: &IdentityReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => text_report(r),
    }
}

fn status_tag(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Flagged => "FLAG",
        Status::Info => "info",
    }
}

fn text_report(r: &IdentityReport) -> String {
    let mut out = String::new();
    let name = r.scenario.name.as_deref().unwrap_or("(unnamed)");
    let _ = writeln!(out, "scenario {name}: {} mode, {} point(s), schema {}", mode_name(r.mode), r.points.len(), r.schema_version);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for p in &r.points {
        let coords: Vec<String> = p.point.iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "\npoint {} ({})", p.index, coords.join(", "));
        if let Some(err) = &p.error {
            let _ = writeln!(out, "  ERROR {err}");
            continue;
        }
        for c in &p.identities {
            write_check(&mut out, c);
        }
    }
    if !r.checks.is_empty() {
        let _ = writeln!(out, "\nscenario checks");
        for c in &r.checks {
            write_check(&mut out, c);
        }
    }
    if !r.constants.is_empty() {
        let _ = writeln!(out, "\nconstants (mean, spread)");
        for (k, v) in &r.constants {
            let _ = writeln!(out, "  {k:<20} {:>14.9} {:>10.2e}", v.mean, v.spread);
        }
    }
    if let Some(c) = &r.classification {
        let _ = writeln!(out, "\nclassification: {} (Λ = {}, {})", label(&c.class), c.lambda, label(&c.convention));
    }
    if let Some(c) = &r.ckv {
        let _ = writeln!(out, "conformal Killing: {}", label(&c.category));
    }
    let ratio = r.health.fd_convergence_ratio.map(|x| format!("{x:.3}")).unwrap_or_else(|| "n/a".into());
    let _ = writeln!(out, "health: max Ricci asymmetry {:.2e}, FD convergence ratio {ratio}", r.health.max_ricci_asymmetry);
    let s = &r.summary;
    let _ = writeln!(
        out,
        "\n{} asserted, {} failed, {} flagged, {} point error(s)\nverdict: {}",
        s.asserted,
        s.failed,
        s.flagged,
        s.point_errors,
        if r.passed() { "PASS" } else { "FAIL" }
    );
    out
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Analyze => "analyze",
        Mode::Verify => "verify",
    }
}

fn write_check(out: &mut String, c: &IdentityCheck) {
    let _ = write!(out, "  {} {:<28} {:>10.3e} (tol {:.0e})", status_tag(c.status), c.name, c.residual, c.tolerance);
    if let Some(n) = &c.note {
        let _ = write!(out, "  {n}");
    }
    out.push('\n');
}
