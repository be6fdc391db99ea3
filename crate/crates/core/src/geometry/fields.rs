use nalgebra::{DMatrix, DVector};

use super::curvature::{check_config, gamma_raw, metric_pair};
use super::tensor::{TensorSample, Valence};
use super::{GeometryError, MetricSpec, Result};
use crate::dsl::Expr;
use crate::numerics::{jacobian, NumericsConfig};

/// A contravariant vector field, given either by components or as the
/// gradient of a scalar potential.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorFieldSpec {
    Components(Vec<Expr>),
    Gradient(Expr),
}

impl VectorFieldSpec {
    pub fn zero(n: usize) -> Self {
        VectorFieldSpec::Components(vec![Expr::Const(0.0); n])
    }

    /// The coordinate basis field `∂_axis`.
    pub fn coordinate(n: usize, axis: usize) -> Self {
        VectorFieldSpec::Components(
            (0..n).map(|i| Expr::Const(if i == axis { 1.0 } else { 0.0 })).collect(),
        )
    }

    pub fn potential(&self) -> Option<&Expr> {
        match self {
            VectorFieldSpec::Gradient(f) => Some(f),
            VectorFieldSpec::Components(_) => None,
        }
    }
}

fn scalar_partials(f: &Expr, p: &[f64], cfg: &NumericsConfig) -> Result<Vec<f64>> {
    let j = jacobian(|q| f.evaluate(q).map(|v| vec![v]).map_err(GeometryError::from), p, cfg)?;
    Ok(j.into_iter().map(|d| d[0]).collect())
}

pub fn vector_at(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<DVector<f64>> {
    let n = m.dim();
    match v {
        VectorFieldSpec::Components(c) => {
            if c.len() != n {
                return Err(GeometryError::Dimension { expected: n, got: c.len() });
            }
            let vals = c.iter().map(|e| e.evaluate(p)).collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(DVector::from_vec(vals))
        }
        VectorFieldSpec::Gradient(f) => {
            let (_, inv) = metric_pair(m, p, cfg)?;
            let df = DVector::from_vec(scalar_partials(f, p, cfg)?);
            Ok(inv * df)
        }
    }
}

/// Value and covariant derivative of a vector field at a point, with the
/// metric data used to build them.
#[derive(Clone, Debug)]
pub(crate) struct VectorJet {
    pub v: DVector<f64>,
    /// `(∇_j V)^k` at `(k, j)`.
    pub nabla: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub inv: DMatrix<f64>,
}

pub(crate) fn vector_jet(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<VectorJet> {
    check_config(cfg)?;
    let n = m.dim();
    let (g, inv) = metric_pair(m, p, cfg)?;
    let gamma = gamma_raw(m, p, cfg)?;
    let val = vector_at(m, v, p, cfg)?;
    let dv = jacobian(|q| vector_at(m, v, q, cfg).map(|x| x.as_slice().to_vec()), p, cfg)?;
    let mut nabla = DMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let conn: f64 = (0..n).map(|mm| gamma[(k * n + j) * n + mm] * val[mm]).sum();
            nabla[(k, j)] = dv[j][k] + conn;
        }
    }
    Ok(VectorJet { v: val, nabla, g, inv })
}

impl VectorJet {
    pub fn lie_derivative(&self) -> DMatrix<f64> {
        let gn = &self.g * &self.nabla;
        &gn + gn.transpose()
    }
}

pub fn cov_deriv_vector(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    let jet = vector_jet(m, v, p, cfg)?;
    Ok(TensorSample::from_matrix(Valence::Tensor11, &jet.nabla, p, false))
}

/// `(£_V g)_ij = g_ik (∇_j V)^k + g_jk (∇_i V)^k`.
pub fn lie_derivative_metric(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    let jet = vector_jet(m, v, p, cfg)?;
    Ok(TensorSample::from_matrix(Valence::Tensor02, &jet.lie_derivative(), p, true))
}

pub fn gradient_scalar(
    m: &MetricSpec,
    f: &Expr,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    check_config(cfg)?;
    let v = vector_at(m, &VectorFieldSpec::Gradient(f.clone()), p, cfg)?;
    Ok(TensorSample::from_vector(Valence::Vector, &v, p))
}

pub(crate) fn hessian_matrix(
    m: &MetricSpec,
    f: &Expr,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<DMatrix<f64>> {
    check_config(cfg)?;
    let n = m.dim();
    let gamma = gamma_raw(m, p, cfg)?;
    let df = scalar_partials(f, p, cfg)?;
    let d2 = jacobian(|q| scalar_partials(f, q, cfg), p, cfg)?;
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let second = 0.5 * (d2[i][j] + d2[j][i]);
            let conn: f64 = (0..n).map(|k| gamma[(k * n + i) * n + j] * df[k]).sum();
            h[(i, j)] = second - conn;
        }
    }
    Ok(h)
}

/// `(Hess f)_ij = ∂_i∂_j f − Γ^k_ij ∂_k f`.
pub fn hessian_scalar(
    m: &MetricSpec,
    f: &Expr,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<TensorSample> {
    Ok(TensorSample::from_matrix(Valence::Tensor02, &hessian_matrix(m, f, p, cfg)?, p, true))
}

pub fn divergence_vector(
    m: &MetricSpec,
    v: &VectorFieldSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<f64> {
    Ok(vector_jet(m, v, p, cfg)?.nabla.trace())
}

/// The Laplacian computed two independent ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplacianRoutes {
    /// `g^ij (Hess f)_ij`.
    pub trace_of_hessian: f64,
    /// `div(grad f)`.
    pub divergence_of_gradient: f64,
}

impl LaplacianRoutes {
    pub fn disagreement(&self) -> f64 {
        (self.trace_of_hessian - self.divergence_of_gradient).abs()
    }
}

pub fn laplacian_routes(
    m: &MetricSpec,
    f: &Expr,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<LaplacianRoutes> {
    let (_, inv) = metric_pair(m, p, cfg)?;
    let h = hessian_matrix(m, f, p, cfg)?;
    let trace_of_hessian = inv.component_mul(&h).sum();
    let divergence_of_gradient =
        divergence_vector(m, &VectorFieldSpec::Gradient(f.clone()), p, cfg)?;
    Ok(LaplacianRoutes { trace_of_hessian, divergence_of_gradient })
}

/// `Δf = div(grad f)`.
pub fn laplacian_scalar(m: &MetricSpec, f: &Expr, p: &[f64], cfg: &NumericsConfig) -> Result<f64> {
    divergence_vector(m, &VectorFieldSpec::Gradient(f.clone()), p, cfg)
}

/// Covariant derivative of a (1,1) field: `(∇_i F)^l_j` at index `(i*n + l)*n + j`.
pub(crate) fn cov_deriv_tensor11<F>(
    m: &MetricSpec,
    field: F,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    check_config(cfg)?;
    let n = m.dim();
    let gamma = gamma_raw(m, p, cfg)?;
    let f0 = field(p)?;
    let flat = |q: &[f64]| -> Result<Vec<f64>> {
        let f = field(q)?;
        Ok((0..n * n).map(|ix| f[(ix / n, ix % n)]).collect())
    };
    let df = jacobian(flat, p, cfg)?;
    let gam = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for l in 0..n {
            for j in 0..n {
                let mut v = df[i][l * n + j];
                for mm in 0..n {
                    v += gam(l, i, mm) * f0[(mm, j)] - gam(mm, i, j) * f0[(l, mm)];
                }
                out[(i * n + l) * n + j] = v;
            }
        }
    }
    Ok(out)
}

/// `(div F)_j = (∇_k F)^k_j`, the contraction of the derivative slot with
/// the upper index.
pub fn div_tensor11<F>(m: &MetricSpec, field: F, p: &[f64], cfg: &NumericsConfig) -> Result<TensorSample>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let n = m.dim();
    let nab = cov_deriv_tensor11(m, field, p, cfg)?;
    let div = DVector::from_fn(n, |j, _| (0..n).map(|k| nab[(k * n + k) * n + j]).sum());
    Ok(TensorSample::from_vector(Valence::OneForm, &div, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse, BinOp, Func};
    use crate::geometry::Signature;

    fn coords() -> Vec<String> {
        ["t", "x", "y", "z"].iter().map(|s| s.to_string()).collect()
    }

    fn warped(q: Expr) -> MetricSpec {
        let q2 = Expr::binary(BinOp::Pow, q, Expr::Const(2.0));
        MetricSpec::diagonal(
            coords(),
            vec![Expr::Const(-1.0), q2.clone(), q2.clone(), q2],
            Signature::Lorentzian,
        )
        .unwrap()
    }

    fn de_sitter(h: f64) -> MetricSpec {
        let t = Expr::Var { index: 0, name: "t".into() };
        warped(Expr::unary(Func::Exp, Expr::binary(BinOp::Mul, Expr::Const(h), t)))
    }

    fn minkowski() -> MetricSpec {
        warped(Expr::Const(1.0))
    }

    fn field(src: [&str; 4]) -> VectorFieldSpec {
        VectorFieldSpec::Components(src.iter().map(|s| parse(s, &coords()).unwrap()).collect())
    }

    fn f(src: &str) -> Expr {
        parse(src, &coords()).unwrap()
    }

    const P: [f64; 4] = [0.6, 0.3, -0.2, 0.9];

    #[test]
    fn covariant_derivative_examples() {
        let cfg = NumericsConfig::default();
        let dt = VectorFieldSpec::coordinate(4, 0);
        assert!(cov_deriv_vector(&minkowski(), &dt, &P, &cfg).unwrap().max_abs() == 0.0);
        let n1 = cov_deriv_vector(&de_sitter(1.0), &dt, &P, &cfg).unwrap();
        assert!((n1.get2(1, 1) - 1.0).abs() < 1e-9);
        assert!(n1.get2(0, 0).abs() < 1e-12);
        let n2 = cov_deriv_vector(&de_sitter(2.0), &dt, &P, &cfg).unwrap();
        assert!((n2.get2(1, 1) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn lie_derivative_examples() {
        let cfg = NumericsConfig::default();
        let dt = VectorFieldSpec::coordinate(4, 0);
        assert!(lie_derivative_metric(&minkowski(), &dt, &P, &cfg).unwrap().max_abs() == 0.0);
        let l = lie_derivative_metric(&de_sitter(1.0), &dt, &P, &cfg).unwrap();
        assert!(l.get2(0, 0).abs() < 1e-10);
        let e2t = (2.0 * P[0]).exp();
        assert!((l.get2(1, 1) - 2.0 * e2t).abs() < 1e-8);
        let euler = field(["t", "x", "y", "z"]);
        let le = lie_derivative_metric(&minkowski(), &euler, &P, &cfg).unwrap();
        let g = metric_pair(&minkowski(), &P, &cfg).unwrap().0;
        assert!((le.matrix() - g * 2.0).abs().max() < 1e-10);
    }

    #[test]
    fn gradient_examples() {
        let cfg = NumericsConfig::default();
        let g = gradient_scalar(&minkowski(), &f("t"), &P, &cfg).unwrap();
        assert!((g.vector() - DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0])).amax() < 1e-12);
        let gd = gradient_scalar(&de_sitter(1.0), &f("t"), &P, &cfg).unwrap();
        assert!((gd.get(0) + 1.0).abs() < 1e-12);
        let gm = metric_pair(&de_sitter(1.0), &P, &cfg).unwrap().0;
        let v = gd.vector();
        assert!(((v.transpose() * &gm * &v)[0] + 1.0).abs() < 1e-12);
        let gx = gradient_scalar(&minkowski(), &f("x"), &P, &cfg).unwrap();
        assert!((gx.get(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hessian_examples() {
        let cfg = NumericsConfig::default();
        assert!(hessian_scalar(&minkowski(), &f("t"), &P, &cfg).unwrap().max_abs() < 1e-9);
        let h = hessian_scalar(&de_sitter(1.0), &f("t"), &P, &cfg).unwrap();
        assert!((h.get2(1, 1) + (2.0 * P[0]).exp()).abs() < 1e-8);
        let h2 = hessian_scalar(&minkowski(), &f("x^2"), &P, &cfg).unwrap();
        assert!((h2.get2(1, 1) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn divergence_and_laplacian_examples() {
        let cfg = NumericsConfig::default();
        let dt = VectorFieldSpec::coordinate(4, 0);
        assert!(divergence_vector(&minkowski(), &dt, &P, &cfg).unwrap().abs() < 1e-12);
        assert!((divergence_vector(&de_sitter(1.0), &dt, &P, &cfg).unwrap() - 3.0).abs() < 1e-9);
        let grad_t = VectorFieldSpec::Gradient(f("t"));
        assert!((divergence_vector(&de_sitter(1.0), &grad_t, &P, &cfg).unwrap() + 3.0).abs() < 1e-8);
        assert!(laplacian_scalar(&minkowski(), &f("t"), &P, &cfg).unwrap().abs() < 1e-9);
        assert!((laplacian_scalar(&de_sitter(1.0), &f("t"), &P, &cfg).unwrap() + 3.0).abs() < 1e-8);
        let r = laplacian_routes(&minkowski(), &f("x^2 + y^2"), &P, &cfg).unwrap();
        assert!((r.divergence_of_gradient - 4.0).abs() < 1e-8);
        assert!(r.disagreement() < 1e-6);
    }

    #[test]
    fn tensor_divergence_examples() {
        let cfg = NumericsConfig::default();
        let n = 4;
        let zero = |_: &[f64]| Ok(DMatrix::zeros(n, n));
        assert!(div_tensor11(&de_sitter(1.0), zero, &P, &cfg).unwrap().max_abs() == 0.0);
        let id = |_: &[f64]| Ok(DMatrix::identity(n, n));
        assert!(div_tensor11(&minkowski(), id, &P, &cfg).unwrap().max_abs() < 1e-12);
        // identity is parallel on any metric
        assert!(div_tensor11(&de_sitter(1.0), id, &P, &cfg).unwrap().max_abs() < 1e-9);
        let fx = |q: &[f64]| {
            let mut m = DMatrix::zeros(n, n);
            m[(1, 2)] = q[1];
            Ok(m)
        };
        let d = div_tensor11(&minkowski(), fx, &P, &cfg).unwrap();
        assert!((d.get(2) - 1.0).abs() < 1e-10);
        assert!(d.get(0).abs() + d.get(1).abs() + d.get(3).abs() < 1e-10);
    }
}
