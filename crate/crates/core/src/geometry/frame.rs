use nalgebra::{DMatrix, DVector};

use super::curvature::metric_checked;
use super::{GeometryError, MetricSpec, Result};
use crate::numerics::NumericsConfig;

/// Orthonormal frame at a point: `g(e_i, e_j) = ε_i δ_ij`, timelike vector first.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePack {
    pub vectors: Vec<DVector<f64>>,
    pub signs: Vec<f64>,
}

impl FramePack {
    /// Largest deviation of `g(e_i, e_j)` from `ε_i δ_ij`.
    pub fn orthonormality_error(&self, g: &DMatrix<f64>) -> f64 {
        let n = self.vectors.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { self.signs[i] } else { 0.0 };
                let v = (self.vectors[i].transpose() * g * &self.vectors[j])[0];
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    /// `Σ_i ε_i T(e_i, e_i)` for a covariant rank-2 tensor.
    pub fn trace(&self, t: &DMatrix<f64>) -> f64 {
        self.vectors
            .iter()
            .zip(&self.signs)
            .map(|(e, s)| s * (e.transpose() * t * e)[0])
            .sum()
    }
}

fn inner(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.transpose() * g * b)[0]
}

/// Gram–Schmidt under an indefinite metric given as a matrix.
///
/// Candidates are the hint (if any), the coordinate basis, then sums and
/// differences of basis pairs; near-null residuals are skipped.
pub fn orthonormal_frame_from_matrix(
    g: &DMatrix<f64>,
    timelike_hint: Option<&DVector<f64>>,
    lorentzian: bool,
) -> Result<FramePack> {
    let n = g.nrows();
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    if let Some(h) = timelike_hint {
        if h.len() != n {
            return Err(GeometryError::Dimension { expected: n, got: h.len() });
        }
        candidates.push(h.clone());
    }
    let basis = |i: usize| DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 });
    for i in 0..n {
        candidates.push(basis(i));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            candidates.push(basis(i) + basis(j));
            candidates.push(basis(i) - basis(j));
        }
    }

    let mut vectors: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut signs: Vec<f64> = Vec::with_capacity(n);
    for c in candidates {
        if vectors.len() == n {
            break;
        }
        let mut w = c.clone();
        // two passes of classical Gram–Schmidt
        for _ in 0..2 {
            for (e, s) in vectors.iter().zip(&signs) {
                let coeff = s * inner(g, &w, e);
                w -= e * coeff;
            }
        }
        let norm2 = inner(g, &w, &w);
        if norm2.abs() <= 1e-9 * scale * c.norm_squared() {
            continue;
        }
        vectors.push(w / norm2.abs().sqrt());
        signs.push(norm2.signum());
    }
    if vectors.len() < n {
        return Err(GeometryError::Frame(format!("only {} independent directions found", vectors.len())));
    }
    let negative = signs.iter().filter(|s| **s < 0.0).count();
    let expected = if lorentzian { 1 } else { 0 };
    if negative != expected {
        return Err(GeometryError::Signature { negative, dim: n });
    }
    // timelike first, spacelike keep discovery order
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| if signs[i] < 0.0 { 0 } else { 1 });
    let frame = FramePack {
        vectors: order.iter().map(|&i| vectors[i].clone()).collect(),
        signs: order.iter().map(|&i| signs[i]).collect(),
    };
    let err = frame.orthonormality_error(g);
    if err > 1e-9 * scale.max(1.0) {
        return Err(GeometryError::Frame(format!("orthonormality error {err:e}")));
    }
    Ok(frame)
}

pub fn orthonormal_frame(
    m: &MetricSpec,
    p: &[f64],
    timelike_hint: Option<&DVector<f64>>,
    cfg: &NumericsConfig,
) -> Result<FramePack> {
    let g = metric_checked(m, p, cfg)?;
    // every metric handled here is expected to carry one timelike direction
    orthonormal_frame_from_matrix(&g, timelike_hint, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_frame_is_coordinate_basis() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
        let f = orthonormal_frame_from_matrix(&g, None, true).unwrap();
        assert_eq!(f.signs, vec![-1.0, 1.0, 1.0, 1.0]);
        for (i, e) in f.vectors.iter().enumerate() {
            assert_eq!(e[i], 1.0);
            assert_eq!(e.norm(), 1.0);
        }
    }

    #[test]
    fn de_sitter_frame_is_normalized_basis() {
        let e2 = (2.0f64).exp();
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, e2, e2, e2]));
        let f = orthonormal_frame_from_matrix(&g, None, true).unwrap();
        assert_eq!(f.vectors[0], DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]));
        for i in 1..4 {
            assert!((f.vectors[i][i] - (-1.0f64).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn riemannian_metric_is_rejected() {
        let g = DMatrix::<f64>::identity(4, 4);
        assert_eq!(
            orthonormal_frame_from_matrix(&g, None, true).unwrap_err(),
            GeometryError::Signature { negative: 0, dim: 4 }
        );
    }

    #[test]
    fn null_coordinates_and_hints() {
        // ds² = -2 du dv + dx² + dy²: both coordinate directions u, v are null
        let mut g = DMatrix::<f64>::identity(4, 4);
        g[(0, 0)] = 0.0;
        g[(1, 1)] = 0.0;
        g[(0, 1)] = -1.0;
        g[(1, 0)] = -1.0;
        let f = orthonormal_frame_from_matrix(&g, None, true).unwrap();
        assert!(f.orthonormality_error(&g) < 1e-12);
        assert_eq!(f.signs[0], -1.0);

        let minkowski = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
        let boosted = DVector::from_vec(vec![2.0, 1.0, 0.5, 0.0]);
        let f = orthonormal_frame_from_matrix(&minkowski, Some(&boosted), true).unwrap();
        let u = &boosted / (4.0f64 - 1.25).sqrt();
        assert!((&f.vectors[0] - u).amax() < 1e-12);
    }
}
