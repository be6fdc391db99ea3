//! Pointwise pseudo-Riemannian tensor calculus on a single chart.
//!
//! Every operation is a pure function of a [`MetricSpec`], a coordinate point
//! and a [`NumericsConfig`]. Metric derivatives come from central differences
//! of the component expressions; derivatives of the connection are central
//! differences of already assembled Christoffel symbols.
//!
//! Conventions (fixed so that a torse-forming unit field on de Sitter satisfies
//! `R(X,Y)ξ = η(Y)X − η(X)Y` and the Ricci tensor of de Sitter is `3g`):
//!
//! * `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, stored as `R^l_kij` with
//!   `R(∂_i, ∂_j)∂_k = R^l_kij ∂_l`;
//! * `S(X,Y) = tr(Z ↦ R(Z,X)Y)`, i.e. `S_kj = R^i_kij`;
//! * `(∇_j V)^k = ∂_j V^k + Γ^k_jm V^m`, stored as a (1,1) sample at `[k][j]`.

mod curvature;
mod fields;
mod frame;
mod tensor;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, EvalError, Expr, ParseError};
pub use crate::numerics::NumericsConfig;

pub use curvature::{
    christoffel, christoffel_exact, curvature_at, einstein_tensor, inverse_metric, metric_at,
    ricci, riemann, scalar_curvature, Curvature,
};
pub use fields::{
    cov_deriv_vector, div_tensor11, divergence_vector, gradient_scalar, hessian_scalar,
    laplacian_routes, laplacian_scalar, lie_derivative_metric, vector_at, LaplacianRoutes,
    VectorFieldSpec,
};
pub(crate) use curvature::metric_pair;
pub(crate) use fields::{cov_deriv_tensor11, hessian_matrix, vector_jet};
pub use frame::{orthonormal_frame, orthonormal_frame_from_matrix, FramePack};
pub use tensor::{matrix_max_abs, max_abs, ChristoffelSample, TensorSample, Valence};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("metric is singular at {point:?}: |det g| = {det:e}")]
    SingularMetric { det: f64, point: Vec<f64> },
    #[error("expected exactly one timelike direction, found {negative} of {dim}")]
    Signature { negative: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("metric component grid is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("coordinate names must be unique; `{0}` repeats")]
    DuplicateCoordinate(String),
    #[error("invalid numerics configuration: {0}")]
    Numerics(String),
    #[error("orthonormal frame construction failed: {0}")]
    Frame(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// Expected sign pattern of the metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    /// One negative direction, `(-,+,+,+)` in four dimensions.
    #[default]
    Lorentzian,
    Riemannian,
}

/// Coordinate values of one chart point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoordinatePoint(pub Vec<f64>);

impl std::ops::Deref for CoordinatePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for CoordinatePoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A metric given by symmetric component expressions over named coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpec {
    coords: Vec<String>,
    /// Row-major `n × n`, symmetric as expressions.
    components: Vec<Expr>,
    signature: Signature,
}

impl MetricSpec {
    pub fn new(coords: Vec<String>, grid: Vec<Vec<Expr>>, signature: Signature) -> Result<Self> {
        let n = coords.len();
        if n < 2 {
            return Err(GeometryError::Dimension { expected: 2, got: n });
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(GeometryError::DuplicateCoordinate(c.clone()));
            }
        }
        if grid.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: grid.len() });
        }
        let mut components = Vec::with_capacity(n * n);
        for row in &grid {
            if row.len() != n {
                return Err(GeometryError::Dimension { expected: n, got: row.len() });
            }
            for e in row {
                if let Some(ix) = e.max_var_index() {
                    if ix >= n {
                        return Err(GeometryError::Dimension { expected: n, got: ix + 1 });
                    }
                }
            }
            components.extend(row.iter().cloned());
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if components[i * n + j] != components[j * n + i] {
                    return Err(GeometryError::Asymmetric { i, j });
                }
            }
        }
        Ok(Self { coords, components, signature })
    }

    /// Parses a grid of component strings.
    pub fn parse(coords: Vec<String>, grid: &[Vec<String>], signature: Signature) -> Result<Self> {
        let parsed = grid
            .iter()
            .map(|row| row.iter().map(|s| dsl::parse(s, &coords)).collect())
            .collect::<std::result::Result<Vec<Vec<Expr>>, _>>()?;
        Self::new(coords, parsed, signature)
    }

    /// `diag(entries)` with constant-free expressions.
    pub fn diagonal(coords: Vec<String>, entries: Vec<Expr>, signature: Signature) -> Result<Self> {
        let n = entries.len();
        let grid = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { entries[i].clone() } else { Expr::Const(0.0) })
                    .collect()
            })
            .collect();
        Self::new(coords, grid, signature)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    /// Raw `g_ij(P)` without the degeneracy check.
    pub(crate) fn evaluate(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if point.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: point.len() });
        }
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.components[i * n + j].evaluate(point)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }
}
