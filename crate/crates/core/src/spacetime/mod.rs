//! Test spacetimes and perfect-fluid algebra.
//!
//! The catalog covers Minkowski space, the flat de Sitter slicing and flat
//! generalized Robertson–Walker metrics `−dt² + q(t)²(dx² + dy² + dz²)`.
//! The first coordinate is always cosmic time.

mod fluid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, EvalError, Expr, ParseError};
use crate::geometry::{GeometryError, MetricSpec, Signature};

pub(crate) use fluid::eigen_check_from;
pub use fluid::{
    efe_residual, einstein_eigen_check, energy_momentum, fluid_from_ricci, ricci_from_fluid,
    ricci_operator, scalar_curvature_identity, unit_timelike_covector, EigenCheckResult,
    FluidFormFit, FluidProfile, FluidState,
};

/// Default unit-norm tolerance for timelike flows.
pub const UNIT_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("flow is not unit timelike: g(ξ, ξ) = {norm}")]
    NotUnitTimelike { norm: f64 },
    #[error("gravitational constant must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("`{name}` may depend on the time coordinate only")]
    NotTimeOnly { name: String },
    #[error("catalog metrics are four-dimensional; got {0} coordinates")]
    CatalogDimension(usize),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Named entries of the metric catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CatalogMetric {
    Minkowski,
    DeSitter { hubble: f64 },
    GrwFlat { scale_factor: String },
}

impl CatalogMetric {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogMetric::Minkowski => "minkowski",
            CatalogMetric::DeSitter { .. } => "de_sitter",
            CatalogMetric::GrwFlat { .. } => "grw_flat",
        }
    }
}

/// One line per catalog entry: name, parameters, line element.
pub fn catalog_listing() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        ("minkowski", "-", "-dt^2 + dx^2 + dy^2 + dz^2"),
        ("de_sitter", "hubble: H", "-dt^2 + exp(2 H t) (dx^2 + dy^2 + dz^2)"),
        ("grw_flat", "scale_factor: q(t)", "-dt^2 + q(t)^2 (dx^2 + dy^2 + dz^2)"),
    ]
}

pub fn default_coords() -> Vec<String> {
    ["t", "x", "y", "z"].iter().map(|s| s.to_string()).collect()
}

/// Builds a catalog metric on the standard coordinates `t, x, y, z`.
pub fn catalog_metric(entry: &CatalogMetric) -> Result<MetricSpec> {
    catalog_metric_on(entry, default_coords())
}

/// Builds a catalog metric on caller-chosen coordinate names; the first name
/// plays the role of `t`.
pub fn catalog_metric_on(entry: &CatalogMetric, coords: Vec<String>) -> Result<MetricSpec> {
    if coords.len() != 4 {
        return Err(ModelError::CatalogDimension(coords.len()));
    }
    let t = || Expr::Var { index: 0, name: coords[0].clone() };
    let q = match entry {
        CatalogMetric::Minkowski => Expr::Const(1.0),
        CatalogMetric::DeSitter { hubble } => Expr::unary(
            dsl::Func::Exp,
            Expr::binary(dsl::BinOp::Mul, Expr::Const(*hubble), t()),
        ),
        CatalogMetric::GrwFlat { scale_factor } => {
            let q = dsl::parse(scale_factor, &coords)?;
            if !(1..4).all(|i| q.independent_of(i)) {
                return Err(ModelError::NotTimeOnly { name: "scale_factor".into() });
            }
            q
        }
    };
    let spatial = if q.is_one() {
        Expr::Const(1.0)
    } else {
        Expr::binary(dsl::BinOp::Pow, q, Expr::Const(2.0))
    };
    let entries = vec![Expr::Const(-1.0), spatial.clone(), spatial.clone(), spatial];
    Ok(MetricSpec::diagonal(coords, entries, Signature::Lorentzian)?)
}

/// A scalar that is either constant or an expression in the time coordinate.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarProfile {
    Const(f64),
    Expr(Expr),
}

impl ScalarProfile {
    /// Parses `text` over `coords`, rejecting dependence on anything but the
    /// first coordinate.
    pub fn parse_time(name: &str, text: &str, coords: &[String]) -> Result<Self> {
        let e = dsl::parse(text, coords)?;
        if !(1..coords.len()).all(|i| e.independent_of(i)) {
            return Err(ModelError::NotTimeOnly { name: name.to_string() });
        }
        Ok(match e {
            Expr::Const(c) => ScalarProfile::Const(c),
            other => ScalarProfile::Expr(other),
        })
    }

    pub fn at(&self, p: &[f64]) -> Result<f64> {
        match self {
            ScalarProfile::Const(c) => Ok(*c),
            ScalarProfile::Expr(e) => Ok(e.evaluate(p)?),
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, ScalarProfile::Const(_))
    }
}

impl From<f64> for ScalarProfile {
    fn from(v: f64) -> Self {
        ScalarProfile::Const(v)
    }
}
