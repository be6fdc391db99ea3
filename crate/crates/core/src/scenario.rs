//! Scenario files: the JSON description of a spacetime, its fields, fluid,
//! soliton constants and the points to evaluate at.
//!
//! [`ScenarioFile`] is the raw serde form and round-trips through JSON;
//! [`Scenario`] is the validated form with every expression parsed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, ParseError};
use crate::geometry::{metric_at, MetricSpec, NumericsConfig, Signature, VectorFieldSpec};
use crate::soliton::{CkvCategory, SignConvention, SolitonClass, SolitonFamily, SolitonParams, STEADY_TOL};
use crate::spacetime::{catalog_metric_on, default_coords, CatalogMetric, FluidProfile, ModelError, ScalarProfile};

/// Default residual tolerance for asserted identities.
pub const DEFAULT_TOLERANCE: f64 = 1e-5;
/// Default tolerance for the contracted Bianchi identity, which nests three
/// levels of finite differences.
pub const DEFAULT_BIANCHI_TOLERANCE: f64 = 1e-4;
/// Largest number of evaluation points a plan may expand to.
pub const MAX_POINTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("invalid value at {location}: {message}")]
    Invalid { location: String, message: String },
    #[error("expression error at {location}: {source}")]
    Expression {
        location: String,
        #[source]
        source: ParseError,
    },
    #[error("model error at {location}: {source}")]
    Model {
        location: String,
        #[source]
        source: ModelError,
    },
}

impl ScenarioError {
    fn invalid(location: &str, message: impl Into<String>) -> Self {
        ScenarioError::Invalid { location: location.to_string(), message: message.into() }
    }

    fn model(location: &str, source: ModelError) -> Self {
        match source {
            ModelError::Parse(source) => ScenarioError::Expression { location: location.to_string(), source },
            source => ScenarioError::Model { location: location.to_string(), source },
        }
    }

    /// JSON-pointer-style location of the offending value.
    pub fn location(&self) -> Option<&str> {
        match self {
            ScenarioError::Io { .. } => None,
            ScenarioError::Schema { location, .. }
            | ScenarioError::Invalid { location, .. }
            | ScenarioError::Expression { location, .. }
            | ScenarioError::Model { location, .. } => Some(location),
        }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// A number, or an expression in the time coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarValue {
    Number(f64),
    Expr(String),
}

impl From<f64> for ScalarValue {
    fn from(v: f64) -> Self {
        ScalarValue::Number(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricBlock {
    Catalog(CatalogMetric),
    /// Full symmetric grid of component expressions.
    Components(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldBlock {
    /// Contravariant components.
    Components(Vec<String>),
    /// `grad f` for the given potential.
    Gradient(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitFluid {
    pub sigma: ScalarValue,
    pub rho: ScalarValue,
    pub kappa: ScalarValue,
    pub lambda: ScalarValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFluid {
    pub kappa: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FluidBlock {
    Explicit(ExplicitFluid),
    /// Read `σ` and `ρ` off the sampled Ricci tensor at each point.
    FitFromRicci(FitFluid),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolitonBlock {
    pub family: SolitonFamily,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "zero_scalar")]
    pub p: ScalarValue,
    /// Solved from projections when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default)]
    pub convention: SignConvention,
}

fn zero_scalar() -> ScalarValue {
    ScalarValue::Number(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub coordinate: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanBlock {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<f64>>,
    /// Cartesian product of the listed axes; other coordinates take `base`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<GridAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub richardson: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bianchi_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tolerance: Option<f64>,
}

/// Scenario-level claims checked after the run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<SolitonClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ckv: Option<CkvCategory>,
    /// `σ = 3ρ` at every point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radiation: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl ExpectBlock {
    pub fn is_empty(&self) -> bool {
        *self == ExpectBlock::default()
    }
}

/// The raw scenario document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Must be 4 when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<String>>,
    pub metric: MetricBlock,
    /// The fluid flow `ξ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FieldBlock>,
    /// The soliton field `V`; defaults to the flow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soliton: Option<SolitonBlock>,
    pub plan: PlanBlock,
    #[serde(default, skip_serializing_if = "is_default_numerics")]
    pub numerics: NumericsBlock,
    #[serde(default, skip_serializing_if = "ExpectBlock::is_empty")]
    pub expect: ExpectBlock,
}

fn is_default_numerics(n: &NumericsBlock) -> bool {
    *n == NumericsBlock::default()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub identity: f64,
    pub bianchi: f64,
    pub steady: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { identity: DEFAULT_TOLERANCE, bianchi: DEFAULT_BIANCHI_TOLERANCE, steady: STEADY_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FluidSource {
    Explicit(FluidProfile),
    FitFromRicci { kappa: f64, lambda: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolitonSetup {
    pub params: SolitonParams,
    pub convention: SignConvention,
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub metric: MetricSpec,
    pub flow: Option<VectorFieldSpec>,
    /// `V`, falling back to the flow.
    pub field: Option<VectorFieldSpec>,
    /// True when `V` was given separately from `ξ`.
    pub separate_field: bool,
    pub fluid: Option<FluidSource>,
    pub soliton: Option<SolitonSetup>,
    pub points: Vec<Vec<f64>>,
    pub numerics: NumericsConfig,
    pub tolerances: Tolerances,
    /// Plan points where the metric cannot be evaluated.
    pub warnings: Vec<String>,
}

/// Defaults applied while loading.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LoadOptions {
    /// Identity tolerance used when the scenario does not set one.
    pub default_tolerance: Option<f64>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    load_scenario_with(path, &LoadOptions::default())
}

pub fn load_scenario_with(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    scenario_from_str(&text, options)
}

pub fn scenario_from_str(text: &str, options: &LoadOptions) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
        location: pointer(&e.path().to_string()),
        message: e.inner().to_string(),
    })?;
    validate(file, options)
}

pub fn scenario_from_value(value: serde_json::Value, options: &LoadOptions) -> Result<Scenario> {
    let file: ScenarioFile = serde_path_to_error::deserialize(value).map_err(|e| ScenarioError::Schema {
        location: pointer(&e.path().to_string()),
        message: e.inner().to_string(),
    })?;
    validate(file, options)
}

/// `metric.components[0][1]` to `/metric/components/0/1`.
fn pointer(path: &str) -> String {
    if path == "." || path.is_empty() {
        return "/".to_string();
    }
    let mut out = String::new();
    for part in path.split('.') {
        let mut rest = part;
        if let Some(i) = rest.find('[') {
            out.push('/');
            out.push_str(&rest[..i]);
            rest = &rest[i..];
            for idx in rest.split('[').filter(|s| !s.is_empty()) {
                out.push('/');
                out.push_str(idx.trim_end_matches(']'));
            }
        } else {
            out.push('/');
            out.push_str(rest);
        }
    }
    out.replace("//", "/")
}

fn scalar_profile(v: &ScalarValue, name: &str, location: &str, coords: &[String]) -> Result<ScalarProfile> {
    match v {
        ScalarValue::Number(x) if x.is_finite() => Ok(ScalarProfile::Const(*x)),
        ScalarValue::Number(x) => Err(ScenarioError::invalid(location, format!("{name} must be finite, got {x}"))),
        ScalarValue::Expr(text) => {
            ScalarProfile::parse_time(name, text, coords).map_err(|e| ScenarioError::model(location, e))
        }
    }
}

fn field_spec(block: &FieldBlock, location: &str, coords: &[String]) -> Result<VectorFieldSpec> {
    match block {
        FieldBlock::Components(cs) => {
            if cs.len() != coords.len() {
                return Err(ScenarioError::invalid(
                    &format!("{location}/components"),
                    format!("expected {} components, got {}", coords.len(), cs.len()),
                ));
            }
            let exprs = cs
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    dsl::parse(c, coords).map_err(|source| ScenarioError::Expression {
                        location: format!("{location}/components/{i}"),
                        source,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(VectorFieldSpec::Components(exprs))
        }
        FieldBlock::Gradient(f) => dsl::parse(f, coords)
            .map(VectorFieldSpec::Gradient)
            .map_err(|source| ScenarioError::Expression { location: format!("{location}/gradient"), source }),
    }
}

fn positive(v: Option<f64>, default: f64, location: &str) -> Result<f64> {
    match v {
        None => Ok(default),
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(ScenarioError::invalid(location, format!("must be positive, got {x}"))),
    }
}

fn validate(file: ScenarioFile, options: &LoadOptions) -> Result<Scenario> {
    if let Some(d) = file.dimension {
        if d != 4 {
            return Err(ScenarioError::invalid("/dimension", format!("only dimension 4 is supported, got {d}")));
        }
    }
    let coords = file.coordinates.clone().unwrap_or_else(default_coords);
    if coords.len() != 4 {
        return Err(ScenarioError::invalid("/coordinates", format!("expected 4 names, got {}", coords.len())));
    }
    for (i, c) in coords.iter().enumerate() {
        if coords[..i].contains(c) {
            return Err(ScenarioError::invalid(&format!("/coordinates/{i}"), format!("duplicate coordinate `{c}`")));
        }
    }

    let metric = match &file.metric {
        MetricBlock::Catalog(entry) => {
            catalog_metric_on(entry, coords.clone()).map_err(|e| ScenarioError::model("/metric/catalog", e))?
        }
        MetricBlock::Components(grid) => {
            if grid.len() != 4 || grid.iter().any(|row| row.len() != 4) {
                return Err(ScenarioError::invalid("/metric/components", "expected a 4 x 4 grid"));
            }
            let mut exprs = Vec::with_capacity(4);
            for (i, row) in grid.iter().enumerate() {
                let mut parsed = Vec::with_capacity(4);
                for (j, text) in row.iter().enumerate() {
                    parsed.push(dsl::parse(text, &coords).map_err(|source| ScenarioError::Expression {
                        location: format!("/metric/components/{i}/{j}"),
                        source,
                    })?);
                }
                exprs.push(parsed);
            }
            MetricSpec::new(coords.clone(), exprs, Signature::Lorentzian)
                .map_err(|e| ScenarioError::model("/metric/components", e.into()))?
        }
    };

    let flow = file.flow.as_ref().map(|b| field_spec(b, "/flow", &coords)).transpose()?;
    let explicit_field = file.field.as_ref().map(|b| field_spec(b, "/field", &coords)).transpose()?;
    let separate_field = explicit_field.is_some();
    let field = explicit_field.or_else(|| flow.clone());

    let fluid = match &file.fluid {
        None => None,
        Some(FluidBlock::Explicit(f)) => {
            let at = |name: &str, v: &ScalarValue| scalar_profile(v, name, &format!("/fluid/explicit/{name}"), &coords);
            let profile = FluidProfile {
                sigma: at("sigma", &f.sigma)?,
                rho: at("rho", &f.rho)?,
                kappa: at("kappa", &f.kappa)?,
                lambda: at("lambda", &f.lambda)?,
            };
            if let ScalarProfile::Const(k) = profile.kappa {
                if !(k > 0.0) {
                    return Err(ScenarioError::invalid("/fluid/explicit/kappa", format!("must be positive, got {k}")));
                }
            }
            Some(FluidSource::Explicit(profile))
        }
        Some(FluidBlock::FitFromRicci(f)) => {
            if !(f.kappa > 0.0) {
                return Err(ScenarioError::invalid(
                    "/fluid/fit_from_ricci/kappa",
                    format!("must be positive, got {}", f.kappa),
                ));
            }
            if flow.is_none() {
                return Err(ScenarioError::invalid("/fluid/fit_from_ricci", "fitting a fluid needs a flow"));
            }
            Some(FluidSource::FitFromRicci { kappa: f.kappa, lambda: f.lambda })
        }
    };

    let soliton = match &file.soliton {
        None => None,
        Some(s) => {
            let p = scalar_profile(&s.p, "p", "/soliton/p", &coords)?;
            let params = SolitonParams { family: s.family, alpha: s.alpha, beta: s.beta, p, lambda: s.lambda, mu: s.mu };
            params.validate(4).map_err(|e| ScenarioError::invalid("/soliton", e.to_string()))?;
            if field.is_none() {
                return Err(ScenarioError::invalid("/soliton", "a soliton needs a flow or field"));
            }
            if s.family.is_eta() {
                if flow.is_none() {
                    return Err(ScenarioError::invalid("/soliton", format!("{} needs a flow", s.family)));
                }
                if s.lambda.is_some() != s.mu.is_some() {
                    return Err(ScenarioError::invalid("/soliton", "give both lambda and mu, or neither"));
                }
            } else if s.lambda.is_none() && flow.is_none() {
                return Err(ScenarioError::invalid("/soliton/lambda", "without a flow, lambda must be given"));
            }
            if s.family == SolitonFamily::GradientRicciYamabe
                && !matches!(field, Some(VectorFieldSpec::Gradient(_)))
            {
                return Err(ScenarioError::invalid("/soliton/family", "gradient_ricci_yamabe needs a gradient field"));
            }
            Some(SolitonSetup { params, convention: s.convention })
        }
    };

    let n = &file.numerics;
    let numerics = NumericsConfig {
        step: positive(n.step, NumericsConfig::default().step, "/numerics/step")?,
        richardson: n.richardson.unwrap_or(true),
        degeneracy_threshold: positive(
            n.degeneracy_threshold,
            NumericsConfig::default().degeneracy_threshold,
            "/numerics/degeneracy_threshold",
        )?,
    };
    let default_tol = options.default_tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let steady = match n.steady_tolerance {
        None => STEADY_TOL,
        Some(x) if x >= 0.0 => x,
        Some(x) => return Err(ScenarioError::invalid("/numerics/steady_tolerance", format!("must be non-negative, got {x}"))),
    };
    let tolerances = Tolerances {
        identity: positive(n.tolerance, default_tol, "/numerics/tolerance")?,
        bianchi: positive(n.bianchi_tolerance, DEFAULT_BIANCHI_TOLERANCE, "/numerics/bianchi_tolerance")?,
        steady,
    };
    if let Some(t) = file.expect.tolerance {
        positive(Some(t), t, "/expect/tolerance")?;
    }

    let points = expand_plan(&file.plan, &coords)?;
    let warnings = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            let reason = match metric_at(&metric, p) {
                Err(e) => Some(e.to_string()),
                Ok(g) => {
                    let det = g.matrix().determinant();
                    (!(det.abs() >= numerics.degeneracy_threshold)).then(|| format!("metric degenerate (det = {det:e})"))
                }
            };
            reason.map(|r| format!("point {i} {p:?}: {r}"))
        })
        .collect();

    Ok(Scenario { file, metric, flow, field, separate_field, fluid, soliton, points, numerics, tolerances, warnings })
}

/// Sets the number at dotted path `param` (for example `soliton.alpha` or
/// `metric.catalog.hubble`) in a raw scenario document. The parent object
/// must exist; the leaf is created if absent.
pub fn apply_override(doc: &mut serde_json::Value, param: &str, value: f64) -> Result<()> {
    let location = format!("/{}", param.replace('.', "/"));
    let parts: Vec<&str> = param.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ScenarioError::invalid(&location, "empty path segment"));
    }
    let (leaf, parents) = parts.split_last().expect("split yields one segment");
    let mut node = doc;
    for part in parents {
        node = node
            .get_mut(*part)
            .ok_or_else(|| ScenarioError::invalid(&location, format!("no `{part}` in the scenario")))?;
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| ScenarioError::invalid(&location, "parent is not an object"))?;
    let number = serde_json::Number::from_f64(value)
        .ok_or_else(|| ScenarioError::invalid(&location, format!("{value} is not a finite number")))?;
    obj.insert(leaf.to_string(), serde_json::Value::Number(number));
    Ok(())
}

fn expand_plan(plan: &PlanBlock, coords: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    for (i, p) in plan.points.iter().enumerate() {
        if p.len() != coords.len() {
            return Err(ScenarioError::invalid(
                &format!("/plan/points/{i}"),
                format!("expected {} coordinates, got {}", coords.len(), p.len()),
            ));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(ScenarioError::invalid(&format!("/plan/points/{i}"), "coordinates must be finite"));
        }
        points.push(p.clone());
    }
    if !plan.grid.is_empty() {
        let base = plan.base.clone().unwrap_or_else(|| vec![0.0; coords.len()]);
        if base.len() != coords.len() {
            return Err(ScenarioError::invalid("/plan/base", format!("expected {} coordinates", coords.len())));
        }
        let mut axes: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, axis) in plan.grid.iter().enumerate() {
            let loc = format!("/plan/grid/{i}");
            let idx = coords.iter().position(|c| *c == axis.coordinate).ok_or_else(|| {
                ScenarioError::invalid(&format!("{loc}/coordinate"), format!("unknown coordinate `{}`", axis.coordinate))
            })?;
            if axes.iter().any(|(j, _)| *j == idx) {
                return Err(ScenarioError::invalid(&format!("{loc}/coordinate"), "axis listed twice"));
            }
            if axis.count == 0 || !axis.from.is_finite() || !axis.to.is_finite() {
                return Err(ScenarioError::invalid(&loc, "needs a positive count and finite bounds"));
            }
            let values = if axis.count == 1 {
                vec![axis.from]
            } else {
                (0..axis.count)
                    .map(|k| axis.from + (axis.to - axis.from) * k as f64 / (axis.count - 1) as f64)
                    .collect()
            };
            axes.push((idx, values));
        }
        let total = axes.iter().map(|(_, v)| v.len()).product::<usize>();
        if points.len() + total > MAX_POINTS {
            return Err(ScenarioError::invalid("/plan", format!("plan expands to more than {MAX_POINTS} points")));
        }
        let mut grid = vec![base];
        for (idx, values) in &axes {
            grid = grid
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q[*idx] = *v;
                        q
                    })
                })
                .collect();
        }
        points.extend(grid);
    }
    if points.is_empty() {
        return Err(ScenarioError::invalid("/plan", "at least one evaluation point is required"));
    }
    Ok(points)
}
