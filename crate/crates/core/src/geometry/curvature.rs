use nalgebra::DMatrix;

use super::tensor::{ChristoffelSample, TensorSample, Valence};
use super::{GeometryError, MetricSpec, Result};
use crate::dsl;
use crate::numerics::{jacobian, NumericsConfig};

pub(crate) fn check_config(cfg: &NumericsConfig) -> Result<()> {
    cfg.validate().map_err(GeometryError::Numerics)
}

/// `g(P)` with the degeneracy check applied.
pub(crate) fn metric_checked(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<DMatrix<f64>> {
    let g = m.evaluate(p)?;
    let det = g.determinant();
    if !(det.abs() >= cfg.degeneracy_threshold) {
        return Err(GeometryError::SingularMetric { det, point: p.to_vec() });
    }
    Ok(g)
}

/// `(g, g⁻¹)` at a point.
pub(crate) fn metric_pair(
    m: &MetricSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = metric_checked(m, p, cfg)?;
    let inv = g
        .clone()
        .try_inverse()
        .ok_or(GeometryError::SingularMetric { det: 0.0, point: p.to_vec() })?;
    // exact symmetry of the stored inverse
    let inv = (&inv + inv.transpose()) * 0.5;
    Ok((g, inv))
}

pub fn metric_at(m: &MetricSpec, p: &[f64]) -> Result<TensorSample> {
    let g = metric_checked(m, p, &NumericsConfig::default())?;
    Ok(TensorSample::from_matrix(Valence::Tensor02, &g, p, true))
}

pub fn inverse_metric(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<TensorSample> {
    let (_, inv) = metric_pair(m, p, cfg)?;
    Ok(TensorSample::from_matrix(Valence::Tensor20, &inv, p, true))
}

fn flatten(g: &DMatrix<f64>) -> Vec<f64> {
    let n = g.nrows();
    (0..n * n).map(|ix| g[(ix / n, ix % n)]).collect()
}

/// Assembles `Γ^k_ij` from `g⁻¹` and `dg[a][i*n+j] = ∂_a g_ij`.
fn assemble_gamma(inv: &DMatrix<f64>, dg: &[Vec<f64>]) -> Vec<f64> {
    let n = inv.nrows();
    let d = |a: usize, i: usize, j: usize| dg[a][i * n + j];
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in i..n {
            // first kind, lowered on l
            let lowered: Vec<f64> =
                (0..n).map(|l| 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j))).collect();
            for k in 0..n {
                let v: f64 = (0..n).map(|l| inv[(k, l)] * lowered[l]).sum();
                gamma[(k * n + i) * n + j] = v;
                gamma[(k * n + j) * n + i] = v;
            }
        }
    }
    gamma
}

pub(crate) fn gamma_raw(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<Vec<f64>> {
    let (_, inv) = metric_pair(m, p, cfg)?;
    let dg = jacobian(|q| metric_checked(m, q, cfg).map(|g| flatten(&g)), p, cfg)?;
    Ok(assemble_gamma(&inv, &dg))
}

pub fn christoffel(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<ChristoffelSample> {
    check_config(cfg)?;
    Ok(ChristoffelSample { dim: m.dim(), point: p.to_vec(), components: gamma_raw(m, p, cfg)? })
}

/// Christoffel symbols from symbolically differentiated metric components.
/// Used as an accuracy reference for the finite-difference route.
pub fn christoffel_exact(
    m: &MetricSpec,
    p: &[f64],
    cfg: &NumericsConfig,
) -> Result<ChristoffelSample> {
    let n = m.dim();
    let (_, inv) = metric_pair(m, p, cfg)?;
    let mut dg = vec![vec![0.0; n * n]; n];
    for (a, slot) in dg.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                slot[i * n + j] = dsl::differentiate(m.component(i, j), a).evaluate(p)?;
            }
        }
    }
    Ok(ChristoffelSample { dim: n, point: p.to_vec(), components: assemble_gamma(&inv, &dg) })
}

/// `R^l_kij = ∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`.
fn assemble_riemann(n: usize, gamma: &[f64], dgamma: &[Vec<f64>]) -> Vec<f64> {
    let g = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let dg = |a: usize, k: usize, i: usize, j: usize| dgamma[a][(k * n + i) * n + j];
    let mut r = vec![0.0; n.pow(4)];
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    let mut v = dg(i, l, j, k) - dg(j, l, i, k);
                    for m in 0..n {
                        v += g(l, i, m) * g(m, j, k) - g(l, j, m) * g(m, i, k);
                    }
                    r[((l * n + k) * n + i) * n + j] = v;
                    r[((l * n + k) * n + j) * n + i] = -v;
                }
            }
        }
    }
    r
}

/// Curvature quantities at one point, computed together.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub christoffel: ChristoffelSample,
    pub riemann: TensorSample,
    pub ricci: TensorSample,
    /// `max |S_ij − S_ji|` before symmetrization.
    pub ricci_asymmetry: f64,
    pub scalar: f64,
    pub einstein: TensorSample,
}

pub fn curvature_at(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<Curvature> {
    check_config(cfg)?;
    let n = m.dim();
    let (g, inv) = metric_pair(m, p, cfg)?;
    let gamma = gamma_raw(m, p, cfg)?;
    let dgamma = jacobian(|q| gamma_raw(m, q, cfg), p, cfg)?;
    let riem = assemble_riemann(n, &gamma, &dgamma);

    let mut s = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            s[(k, j)] = (0..n).map(|i| riem[((i * n + k) * n + i) * n + j]).sum();
        }
    }
    let ricci_asymmetry = (&s - s.transpose()).iter().fold(0.0f64, |a, v: &f64| a.max(v.abs()));
    let ricci = TensorSample::from_matrix(Valence::Tensor02, &s, p, true);
    let s = ricci.matrix();
    let scalar = inv.component_mul(&s).sum();
    let einstein = TensorSample::from_matrix(Valence::Tensor02, &(&s - &g * (0.5 * scalar)), p, true);

    Ok(Curvature {
        metric: g,
        inverse: inv,
        christoffel: ChristoffelSample { dim: n, point: p.to_vec(), components: gamma },
        riemann: TensorSample::from_rank4(riem, n, p),
        ricci,
        ricci_asymmetry,
        scalar,
        einstein,
    })
}

pub fn riemann(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<TensorSample> {
    Ok(curvature_at(m, p, cfg)?.riemann)
}

pub fn ricci(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<TensorSample> {
    Ok(curvature_at(m, p, cfg)?.ricci)
}

pub fn scalar_curvature(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<f64> {
    Ok(curvature_at(m, p, cfg)?.scalar)
}

pub fn einstein_tensor(m: &MetricSpec, p: &[f64], cfg: &NumericsConfig) -> Result<TensorSample> {
    Ok(curvature_at(m, p, cfg)?.einstein)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{BinOp, Expr, Func};
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

    fn sqrt_frw() -> MetricSpec {
        let t = Expr::Var { index: 0, name: "t".into() };
        warped(Expr::binary(BinOp::Pow, t, Expr::Const(0.5)))
    }

    const E2: f64 = 7.389_056_098_930_65;

    #[test]
    fn metric_and_inverse_examples() {
        let cfg = NumericsConfig::default();
        let p1 = [1.0, 0.2, -0.3, 0.5];
        let g = metric_at(&minkowski(), &p1).unwrap();
        assert_eq!(g.components, vec![-1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.]);
        let g0 = metric_at(&de_sitter(1.0), &[0.0; 4]).unwrap();
        assert_eq!(g0.get2(1, 1), 1.0);
        let g1 = metric_at(&de_sitter(1.0), &p1).unwrap();
        assert!((g1.get2(2, 2) - E2).abs() < 1e-12);
        assert_eq!(g1.get2(0, 0), -1.0);
        let inv = inverse_metric(&de_sitter(1.0), &p1, &cfg).unwrap();
        assert!((inv.get2(3, 3) - 1.0 / E2).abs() < 1e-15);
        let prod = g1.matrix() * inv.matrix();
        assert!((prod - DMatrix::identity(4, 4)).abs().max() < 1e-12);
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let m = MetricSpec::diagonal(
            coords(),
            vec![Expr::Const(-1.0), Expr::Const(1.0), Expr::Const(1.0), Expr::Const(0.0)],
            Signature::Lorentzian,
        )
        .unwrap();
        let cfg = NumericsConfig::default();
        assert!(matches!(
            inverse_metric(&m, &[0.0; 4], &cfg),
            Err(GeometryError::SingularMetric { .. })
        ));
    }

    #[test]
    fn christoffel_examples() {
        let cfg = NumericsConfig::default();
        let z = christoffel(&minkowski(), &[0.3, 1.0, 2.0, 3.0], &cfg).unwrap();
        assert!(z.components.iter().all(|v| *v == 0.0));
        for t in [-1.0, 0.0, 0.7] {
            let c = christoffel(&de_sitter(1.0), &[t, 0.0, 0.0, 0.0], &cfg).unwrap();
            let e2t = (2.0f64 * t).exp();
            assert!((c.get(0, 1, 1) - e2t).abs() < 1e-9 * e2t.max(1.0));
            assert!((c.get(1, 0, 1) - 1.0).abs() < 1e-9);
            assert_eq!(c.get(1, 0, 1), c.get(1, 1, 0));
        }
        let c = christoffel(&sqrt_frw(), &[1.0, 0.0, 0.0, 0.0], &cfg).unwrap();
        assert!((c.get(1, 0, 1) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn de_sitter_curvature_is_constant() {
        let cfg = NumericsConfig::default();
        for t in [-1.0, 0.0, 1.0] {
            let p = [t, 0.1, 0.2, 0.3];
            let c = curvature_at(&de_sitter(1.0), &p, &cfg).unwrap();
            let g = &c.metric;
            // R(X,Y)Z = g(Y,Z)X − g(X,Z)Y  ⇒  R^l_kij = δ^l_i g_jk − δ^l_j g_ik
            for l in 0..4 {
                for k in 0..4 {
                    for i in 0..4 {
                        for j in 0..4 {
                            let di = if l == i { 1.0 } else { 0.0 };
                            let dj = if l == j { 1.0 } else { 0.0 };
                            let expected = di * g[(j, k)] - dj * g[(i, k)];
                            let got = c.riemann.get4(l, k, i, j);
                            assert!((got - expected).abs() < 1e-6, "R^{l}_{k}{i}{j}: {got} vs {expected}");
                        }
                    }
                }
            }
            let s = c.ricci.matrix();
            assert!((s - g * 3.0).abs().max() < 1e-5);
            assert!((c.scalar - 12.0).abs() < 1e-5);
            assert!((c.einstein.matrix() + g * 3.0).abs().max() < 1e-5);
        }
    }

    #[test]
    fn minkowski_is_flat() {
        let cfg = NumericsConfig::default();
        let c = curvature_at(&minkowski(), &[0.5, -1.0, 2.0, 0.0], &cfg).unwrap();
        assert!(c.riemann.max_abs() <= 1e-10);
        assert!(c.ricci.max_abs() <= 1e-10);
        assert!(c.scalar.abs() <= 1e-10);
        assert!(c.einstein.max_abs() <= 1e-10);
    }

    #[test]
    fn sqrt_frw_curvature() {
        let cfg = NumericsConfig::default();
        let c = curvature_at(&sqrt_frw(), &[1.0, 0.0, 0.0, 0.0], &cfg).unwrap();
        assert!((c.ricci.get2(0, 0) - 0.75).abs() < 1e-6);
        assert!((c.ricci.get2(1, 1) - 0.25).abs() < 1e-6);
        assert!(c.scalar.abs() < 1e-6);
        assert!((c.einstein.get2(0, 0) - 0.75).abs() < 1e-6);
    }

    #[test]
    fn exact_christoffel_matches_finite_differences() {
        let cfg = NumericsConfig::default();
        let p = [0.4, 0.0, 0.0, 0.0];
        let fd = christoffel(&de_sitter(1.0), &p, &cfg).unwrap();
        let ex = christoffel_exact(&de_sitter(1.0), &p, &cfg).unwrap();
        let err = fd.components.iter().zip(&ex.components).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{err}");
    }
}
