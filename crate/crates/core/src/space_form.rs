//! Constant-curvature base manifolds in the conformal chart
//! `g_ij = δ_ij / (1 + c|x|²/4)²`.
//!
//! Index layout: `christoffel[[k, i, j]] = Γ^k_ij` and
//! `curvature[[h, k, i, j]] = R^h_kij`, where
//! `R(∂_i, ∂_j)∂_k = R^h_kij ∂_h` for `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest conformal factor accepted before the chart is considered
/// degenerate.
const CHART_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    pub n: usize,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasePoint(pub Vec<f64>);

impl BasePoint {
    pub fn origin(n: usize) -> Self {
        BasePoint(vec![0.0; n])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// Metric, inverse metric and derived geometry at one base point.
#[derive(Clone, Debug)]
pub struct BaseGeometry {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub christoffel: Array3<f64>,
    pub curvature: Array4<f64>,
}

impl SpaceForm {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("dimension must be at least 2, got {n}")));
        }
        if !c.is_finite() {
            return Err(Error::Config(format!("curvature must be finite, got {c}")));
        }
        Ok(Self { n, c })
    }

    fn conformal_factor(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: x.len(),
            });
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let factor = 1.0 + 0.25 * self.c * r2;
        if factor <= CHART_MARGIN {
            return Err(Error::ChartDomain {
                x: x.to_vec(),
                factor,
            });
        }
        Ok(factor)
    }

    /// `g_ij` and `g^ij`.
    pub fn metric(&self, x: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let phi = self.conformal_factor(x)?;
        let n = self.n;
        Ok((
            DMatrix::identity(n, n) / (phi * phi),
            DMatrix::identity(n, n) * (phi * phi),
        ))
    }

    /// `Γ^k_ij` of the conformally flat metric `e^{2σ}δ`, `σ = −ln φ`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Array3<f64>> {
        let phi = self.conformal_factor(x)?;
        let n = self.n;
        let dsigma: Vec<f64> = x.iter().map(|xi| -0.5 * self.c * xi / phi).collect();
        let mut gamma = Array3::zeros((n, n, n));
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if k == i {
                        v += dsigma[j];
                    }
                    if k == j {
                        v += dsigma[i];
                    }
                    if i == j {
                        v -= dsigma[k];
                    }
                    gamma[[k, i, j]] = v;
                }
            }
        }
        Ok(gamma)
    }

    /// `R^h_kij = c (δ^h_i g_kj − δ^h_j g_ki)`.
    pub fn curvature(&self, x: &[f64]) -> Result<Array4<f64>> {
        let (g, _) = self.metric(x)?;
        Ok(constant_curvature_tensor(self.c, &g))
    }

    pub fn geometry(&self, x: &[f64]) -> Result<BaseGeometry> {
        let (metric, inverse) = self.metric(x)?;
        Ok(BaseGeometry {
            christoffel: self.christoffel(x)?,
            curvature: constant_curvature_tensor(self.c, &metric),
            metric,
            inverse,
        })
    }

    /// Christoffel symbols from central differences of the metric (Koszul
    /// formula), independent of [`SpaceForm::christoffel`].
    pub fn christoffel_fd(&self, x: &[f64], h: f64) -> Result<Array3<f64>> {
        let n = self.n;
        let (_, gi) = self.metric(x)?;
        let mut dg = Vec::with_capacity(n);
        for m in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[m] += h;
            xm[m] -= h;
            let (gp, _) = self.metric(&xp)?;
            let (gm, _) = self.metric(&xm)?;
            dg.push((gp - gm) / (2.0 * h));
        }
        let mut gamma = Array3::zeros((n, n, n));
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for l in 0..n {
                        v += gi[(k, l)] * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                    }
                    gamma[[k, i, j]] = 0.5 * v;
                }
            }
        }
        Ok(gamma)
    }

    /// Curvature from central differences of [`SpaceForm::christoffel_fd`].
    pub fn curvature_fd(&self, x: &[f64], h: f64) -> Result<Array4<f64>> {
        let n = self.n;
        let gamma = self.christoffel_fd(x, h)?;
        let mut dgamma = Vec::with_capacity(n);
        for m in 0..n {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[m] += h;
            xm[m] -= h;
            let gp = self.christoffel_fd(&xp, h)?;
            let gm = self.christoffel_fd(&xm, h)?;
            dgamma.push((gp - gm) / (2.0 * h));
        }
        Ok(riemann_from_christoffel(&gamma, &dgamma))
    }
}

/// `R^h_kij = ∂_iΓ^h_jk − ∂_jΓ^h_ik + Γ^h_il Γ^l_jk − Γ^h_jl Γ^l_ik`,
/// with `dgamma[m] = ∂_m Γ`.
pub fn riemann_from_christoffel(gamma: &Array3<f64>, dgamma: &[Array3<f64>]) -> Array4<f64> {
    let n = gamma.shape()[0];
    let mut r = Array4::zeros((n, n, n, n));
    for h in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = dgamma[i][[h, j, k]] - dgamma[j][[h, i, k]];
                    for l in 0..n {
                        v += gamma[[h, i, l]] * gamma[[l, j, k]] - gamma[[h, j, l]] * gamma[[l, i, k]];
                    }
                    r[[h, k, i, j]] = v;
                }
            }
        }
    }
    r
}

pub fn constant_curvature_tensor(c: f64, g: &DMatrix<f64>) -> Array4<f64> {
    let n = g.nrows();
    let mut r = Array4::zeros((n, n, n, n));
    for h in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    if h == i {
                        v += g[(k, j)];
                    }
                    if h == j {
                        v -= g[(k, i)];
                    }
                    r[[h, k, i, j]] = c * v;
                }
            }
        }
    }
    r
}

/// Sectional curvature `g(R(u,v)v, u) / (|u|²|v|² − g(u,v)²)`.
pub fn sectional_curvature(r: &Array4<f64>, g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = g.nrows();
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[(i, j)] * a[i] * b[j];
            }
        }
        s
    };
    // w^h = R^h_kij u^i v^j v^k
    let mut w = vec![0.0; n];
    for (h, wh) in w.iter_mut().enumerate() {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    *wh += r[[h, k, i, j]] * u[i] * v[j] * v[k];
                }
            }
        }
    }
    dot(&w, u) / (dot(u, u) * dot(v, v) - dot(u, v).powi(2))
}

/// Max |R^h_kij + R^h_ijk + R^h_jki|.
pub fn bianchi_residual(r: &Array4<f64>) -> f64 {
    let n = r.shape()[0];
    let mut worst: f64 = 0.0;
    for h in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = r[[h, k, i, j]] + r[[h, i, j, k]] + r[[h, j, k, i]];
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    worst
}
