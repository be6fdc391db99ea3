use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Index structure of a sampled tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valence {
    Scalar,
    Vector,
    OneForm,
    /// Covariant rank 2, `T_ij`.
    Tensor02,
    /// Contravariant rank 2, `T^ij`.
    Tensor20,
    /// Mixed, `T^i_j`.
    Tensor11,
    /// `R^l_kij`.
    Tensor13,
}

impl Valence {
    pub fn rank(self) -> usize {
        match self {
            Valence::Scalar => 0,
            Valence::Vector | Valence::OneForm => 1,
            Valence::Tensor02 | Valence::Tensor20 | Valence::Tensor11 => 2,
            Valence::Tensor13 => 4,
        }
    }
}

/// Components of a tensor at one coordinate point, stored row-major with the
/// first index slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorSample {
    pub valence: Valence,
    pub dim: usize,
    pub point: Vec<f64>,
    pub components: Vec<f64>,
    /// Set on rank-2 samples whose storage is exactly symmetric.
    pub symmetric: bool,
}

impl TensorSample {
    pub fn scalar(value: f64, point: &[f64]) -> Self {
        Self {
            valence: Valence::Scalar,
            dim: point.len(),
            point: point.to_vec(),
            components: vec![value],
            symmetric: false,
        }
    }

    pub fn from_vector(valence: Valence, v: &DVector<f64>, point: &[f64]) -> Self {
        debug_assert_eq!(valence.rank(), 1);
        Self {
            valence,
            dim: v.len(),
            point: point.to_vec(),
            components: v.iter().copied().collect(),
            symmetric: false,
        }
    }

    /// Builds a rank-2 sample. With `symmetric` set, the storage is averaged
    /// with its transpose so that the flag holds exactly.
    pub fn from_matrix(valence: Valence, m: &DMatrix<f64>, point: &[f64], symmetric: bool) -> Self {
        debug_assert_eq!(valence.rank(), 2);
        let n = m.nrows();
        let mut components = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let v = if symmetric { 0.5 * (m[(i, j)] + m[(j, i)]) } else { m[(i, j)] };
                components.push(v);
            }
        }
        Self { valence, dim: n, point: point.to_vec(), components, symmetric }
    }

    pub fn from_rank4(components: Vec<f64>, dim: usize, point: &[f64]) -> Self {
        debug_assert_eq!(components.len(), dim.pow(4));
        Self {
            valence: Valence::Tensor13,
            dim,
            point: point.to_vec(),
            components,
            symmetric: false,
        }
    }

    pub fn value(&self) -> f64 {
        self.components[0]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.components[i]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        self.components[i * self.dim + j]
    }

    pub fn get4(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.components[((l * n + k) * n + i) * n + j]
    }

    pub fn vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.components)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.components)
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        max_abs(&self.components)
    }
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Infinity norm of a matrix.
pub fn matrix_max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Christoffel symbols of the second kind, `Γ^k_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChristoffelSample {
    pub dim: usize,
    pub point: Vec<f64>,
    /// Index `(k * n + i) * n + j`.
    pub components: Vec<f64>,
}

impl ChristoffelSample {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.components[(k * n + i) * n + j]
    }
}
