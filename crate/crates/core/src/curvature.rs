//! Curvature, Ricci tensor, Einstein residuals and holomorphic sectional
//! curvature of the lifted metric.
//!
//! Convention: `K(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]} Z`, stored as
//! `full[[a, b, c, d]]`, the `e_d` component of `K(e_a, e_b) e_c`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use ndarray::Array4;
use serde::Serialize;

use crate::bundle::{gradient, CotangentPoint, LiftedField, FD_STEP};
use crate::coefficients::{CoefficientSource, PointCoefficients};
use crate::connection::{chart_christoffel, TensorialConnection};
use crate::error::{Error, Result};

/// One of the twelve adapted-frame curvature blocks. The letters name the
/// arguments `X`, `Y`, `Z` of `K(X,Y)Z` and the output component, with
/// `Q` horizontal and `P` vertical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    QQQQ,
    QQQP,
    QQPQ,
    QQPP,
    PPQQ,
    PPQP,
    PPPQ,
    PPPP,
    PQQQ,
    PQQP,
    PQPQ,
    PQPP,
}

impl BlockKind {
    pub const ALL: [BlockKind; 12] = [
        BlockKind::QQQQ,
        BlockKind::QQQP,
        BlockKind::QQPQ,
        BlockKind::QQPP,
        BlockKind::PPQQ,
        BlockKind::PPQP,
        BlockKind::PPPQ,
        BlockKind::PPPP,
        BlockKind::PQQQ,
        BlockKind::PQQP,
        BlockKind::PQPQ,
        BlockKind::PQPP,
    ];

    /// Whether each of the four slots is vertical.
    fn vertical(self) -> [bool; 4] {
        let name = format!("{self:?}");
        let mut out = [false; 4];
        for (slot, ch) in out.iter_mut().zip(name.chars()) {
            *slot = ch == 'P';
        }
        out
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureBlocks {
    pub n: usize,
    pub full: Array4<f64>,
}

fn max_abs4(a: &Array4<f64>) -> f64 {
    a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

impl CurvatureBlocks {
    /// The `n⁴` block `[i, j, k, h]`.
    pub fn block(&self, kind: BlockKind) -> Array4<f64> {
        let n = self.n;
        let off = kind.vertical().map(|v| if v { n } else { 0 });
        Array4::from_shape_fn((n, n, n, n), |(i, j, k, h)| {
            self.full[[off[0] + i, off[1] + j, off[2] + k, off[3] + h]]
        })
    }

    pub fn max_deviation(&self, other: &CurvatureBlocks) -> f64 {
        self.full
            .iter()
            .zip(other.full.iter())
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    /// Per-block maximum deviation, in [`BlockKind::ALL`] order.
    pub fn block_deviation(&self, other: &CurvatureBlocks) -> [f64; 12] {
        BlockKind::ALL.map(|k| max_abs4(&(self.block(k) - other.block(k))))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs4(&self.full)
    }

    /// First Bianchi identity `K(X,Y)Z + K(Y,Z)X + K(Z,X)Y = 0`.
    pub fn bianchi_residual(&self) -> f64 {
        let m = 2 * self.n;
        let k = &self.full;
        let mut worst = 0.0f64;
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        let s = k[[a, b, c, d]] + k[[b, c, a, d]] + k[[c, a, b, d]];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Antisymmetry in the first two arguments.
    pub fn antisymmetry_residual(&self) -> f64 {
        let swapped = self.full.clone().permuted_axes([1, 0, 2, 3]);
        max_abs4(&(&self.full + &swapped))
    }

    /// `K(X,Y)Z` for chart-free frame components.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let m = 2 * self.n;
        let mut out = DVector::zeros(m);
        for a in 0..m {
            for b in 0..m {
                let xy = x[a] * y[b];
                if xy == 0.0 {
                    continue;
                }
                for c in 0..m {
                    let w = xy * z[c];
                    for d in 0..m {
                        out[d] += w * self.full[[a, b, c, d]];
                    }
                }
            }
        }
        out
    }
}

/// Closed-form curvature from the tensorial connection and its vertical
/// derivatives. Horizontal covariant derivatives of natural tensors over a
/// space form vanish, so only `∂^k` derivatives, quadratic connection
/// terms, the curvature part of `[δ_i, δ_j]` and the lifted base curvature
/// contribute.
pub fn curvature_blocks(pt: &CotangentPoint, pc: &PointCoefficients) -> Result<CurvatureBlocks> {
    let n = pt.n();
    let m = 2 * n;
    let tc = TensorialConnection::new(pt, pc)?;
    let (g, dg) = (&tc.gamma, &tc.dgamma);
    let r0 = &pt.r0;
    let curv = &pt.geometry.curvature;
    let d_along = |a: usize, b: usize, c: usize, d: usize| {
        if a < n {
            0.0
        } else {
            dg[[a - n, b, c, d]]
        }
    };
    let full = Array4::from_shape_fn((m, m, m, m), |(a, b, c, d)| {
        let mut k = d_along(a, b, c, d) - d_along(b, a, c, d);
        for e in 0..m {
            k += g[[b, c, e]] * g[[a, e, d]] - g[[a, c, e]] * g[[b, e, d]];
        }
        if a < n && b < n {
            for l in 0..n {
                k -= r0[[l, a, b]] * g[[n + l, c, d]];
            }
            if c < n && d < n {
                k += curv[[d, c, a, b]];
            } else if c >= n && d >= n {
                k -= curv[[c - n, d - n, a, b]];
            }
        }
        k
    });
    Ok(CurvatureBlocks { n, full })
}

/// Curvature computed in the chart from finite-difference Christoffel
/// symbols (themselves finite differences of the metric), then converted
/// to the adapted frame.
pub fn curvature_oracle<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
) -> Result<CurvatureBlocks> {
    let n = field.space_form.n;
    let m = 2 * n;
    let gc = chart_christoffel(field, z, FD_STEP)?;
    let flat = |w: &[f64]| -> Result<DMatrix<f64>> {
        let a = chart_christoffel(field, w, FD_STEP)?;
        Ok(DMatrix::from_iterator(m * m, m, a))
    };
    let dflat = gradient(flat, z, FD_STEP)?;
    // dgc[[s, k, mu, nu]] = ∂_s Γ^k_μν, unflattening the row-major layout
    let dgc = Array4::from_shape_fn((m, m, m, m), |(s, k, mu, nu)| {
        let idx = (k * m + mu) * m + nu;
        dflat[s][(idx % (m * m), idx / (m * m))]
    });
    // R^κ_λμν = ∂_μΓ^κ_νλ − ∂_νΓ^κ_μλ + Γ^κ_μσΓ^σ_νλ − Γ^κ_νσΓ^σ_μλ
    let rc = Array4::from_shape_fn((m, m, m, m), |(k, l, mu, nu)| {
        let mut r = dgc[[mu, k, nu, l]] - dgc[[nu, k, mu, l]];
        for s in 0..m {
            r += gc[[k, mu, s]] * gc[[s, nu, l]] - gc[[k, nu, s]] * gc[[s, mu, l]];
        }
        r
    });
    let sample = field.sample(z)?;
    let (e, einv) = (&sample.frame, &sample.frame_inverse);
    Ok(CurvatureBlocks {
        n,
        full: to_frame4(&rc, e, einv),
    })
}

/// `K^d_abc = E⁻¹^d_κ R^κ_λμν E^λ_c E^μ_a E^ν_b`, stored `[a, b, c, d]`.
fn to_frame4(rc: &Array4<f64>, e: &DMatrix<f64>, einv: &DMatrix<f64>) -> Array4<f64> {
    let m = e.nrows();
    let mut s1 = Array4::<f64>::zeros((m, m, m, m));
    for d in 0..m {
        for l in 0..m {
            for mu in 0..m {
                for nu in 0..m {
                    s1[[d, l, mu, nu]] = (0..m).map(|k| einv[(d, k)] * rc[[k, l, mu, nu]]).sum();
                }
            }
        }
    }
    let mut s2 = Array4::<f64>::zeros((m, m, m, m));
    for d in 0..m {
        for c in 0..m {
            for mu in 0..m {
                for nu in 0..m {
                    s2[[d, c, mu, nu]] = (0..m).map(|l| s1[[d, l, mu, nu]] * e[(l, c)]).sum();
                }
            }
        }
    }
    let mut s3 = Array4::<f64>::zeros((m, m, m, m));
    for d in 0..m {
        for c in 0..m {
            for a in 0..m {
                for nu in 0..m {
                    s3[[d, c, a, nu]] = (0..m).map(|mu| s2[[d, c, mu, nu]] * e[(mu, a)]).sum();
                }
            }
        }
    }
    Array4::from_shape_fn((m, m, m, m), |(a, b, c, d)| {
        (0..m).map(|nu| s3[[d, c, a, nu]] * e[(nu, b)]).sum()
    })
}

/// Ricci tensor `Ric(Y,Z) = trace(X ↦ K(X,Y)Z)` as adapted-frame blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct RicciBlocks {
    /// `Ric(δ_j, δ_k)`.
    pub qq: DMatrix<f64>,
    /// `Ric(∂^j, ∂^k)`.
    pub pp: DMatrix<f64>,
    /// `Ric(δ_j, ∂^k)`.
    pub qp: DMatrix<f64>,
    /// `Ric(∂^j, δ_k)`.
    pub pq: DMatrix<f64>,
}

impl RicciBlocks {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.qq.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.qq);
        m.view_mut((0, n), (n, n)).copy_from(&self.qp);
        m.view_mut((n, 0), (n, n)).copy_from(&self.pq);
        m.view_mut((n, n), (n, n)).copy_from(&self.pp);
        m
    }

    /// Symmetry of the assembled tensor; this includes `RicQP = RicPQᵀ`.
    pub fn symmetry_residual(&self) -> f64 {
        let m = self.to_dense();
        (&m - m.transpose()).amax()
    }
}

pub fn ricci_blocks(k: &CurvatureBlocks) -> RicciBlocks {
    let n = k.n;
    let m = 2 * n;
    let ric = DMatrix::from_fn(m, m, |b, c| (0..m).map(|a| k.full[[a, b, c, a]]).sum());
    RicciBlocks {
        qq: ric.view((0, 0), (n, n)).into_owned(),
        qp: ric.view((0, n), (n, n)).into_owned(),
        pq: ric.view((n, 0), (n, n)).into_owned(),
        pp: ric.view((n, n), (n, n)).into_owned(),
    }
}

/// Coefficients of the best fit `residual ≈ u·A + v·B` of one block,
/// where `A` is the metric-like pattern and `B` the covector-bilinear one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PatternFit {
    pub u: f64,
    pub v: f64,
    /// Largest entry of `residual − uA − vB`.
    pub misfit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EinsteinResidual {
    /// Max-norm of `Ric − ρG` on the HH, VV and HV blocks.
    pub blocks: [f64; 3],
    pub max: f64,
    pub fits: [PatternFit; 3],
}

/// Smallest `|p|²` for which the covector pattern is fitted.
const PATTERN_GUARD: f64 = 1e-4;

fn fit_patterns(r: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, use_b: bool) -> PatternFit {
    let aa = a.dot(a);
    let ar = a.dot(r);
    let (u, v) = if use_b {
        let (ab, bb, br) = (a.dot(b), b.dot(b), b.dot(r));
        let det = aa * bb - ab * ab;
        if det.abs() > 1e-14 * aa * bb {
            ((ar * bb - ab * br) / det, (aa * br - ab * ar) / det)
        } else {
            (ar / aa, 0.0)
        }
    } else {
        (ar / aa, 0.0)
    };
    let misfit = (r - a * u - b * v).amax();
    PatternFit { u, v, misfit }
}

pub fn einstein_residual(
    pt: &CotangentPoint,
    ricci: &RicciBlocks,
    g: &DMatrix<f64>,
    rho: f64,
) -> EinsteinResidual {
    let n = pt.n();
    let res = ricci.to_dense() - g * rho;
    let hh = res.view((0, 0), (n, n)).into_owned();
    let vv = res.view((n, n), (n, n)).into_owned();
    let hv = res.view((0, n), (n, n)).into_owned();
    let blocks = [hh.amax(), vv.amax(), hv.amax()];
    let use_b = pt.p.norm_squared() >= PATTERN_GUARD;
    let (p, g0) = (&pt.p, &pt.g0);
    let fits = [
        fit_patterns(&hh, pt.metric(), &(p * p.transpose()), use_b),
        fit_patterns(&vv, pt.inverse_metric(), &(g0 * g0.transpose()), use_b),
        fit_patterns(&hv, &DMatrix::identity(n, n), &(p * g0.transpose()), use_b),
    ];
    EinsteinResidual {
        blocks,
        max: blocks.into_iter().fold(0.0, f64::max),
        fits,
    }
}

/// `k(X) = G(K(X,JX)JX, X) / G(X,X)²`.
pub fn holomorphic_sectional_curvature(
    k: &CurvatureBlocks,
    g: &DMatrix<f64>,
    j: &DMatrix<f64>,
    x: &DVector<f64>,
) -> Result<f64> {
    let norm2 = x.dot(&(g * x));
    if !(norm2 > 0.0) {
        return Err(Error::ZeroVector);
    }
    let jx = j * x;
    let kx = k.apply(x, &jx, &jx);
    Ok(kx.dot(&(g * x)) / (norm2 * norm2))
}

/// Sectional curvature of the plane spanned by `x` and `y`.
pub fn sectional_curvature(k: &CurvatureBlocks, g: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let num = k.apply(x, y, y).dot(&(g * x));
    let gxx = x.dot(&(g * x));
    let gyy = y.dot(&(g * y));
    let gxy = x.dot(&(g * y));
    num / (gxx * gyy - gxy * gxy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{assemble_g, assemble_j};
    use crate::coefficients::{Branch, CoefficientFamily, LambdaRule, Perturbation};
    use crate::jets::FamilySpec;
    use crate::space_form::SpaceForm;

    fn sphere(lambda: LambdaRule, c: f64, n: usize) -> (SpaceForm, CoefficientFamily) {
        (
            SpaceForm::new(n, c).unwrap(),
            CoefficientFamily::new(FamilySpec::constant(1.0), FamilySpec::constant(0.0), lambda, c, n),
        )
    }

    fn twisted() -> (SpaceForm, CoefficientFamily) {
        (
            SpaceForm::new(3, 0.5).unwrap(),
            CoefficientFamily::new(
                FamilySpec::poly([1.0, 0.3]),
                FamilySpec::poly([0.2, 0.5]),
                LambdaRule::Explicit {
                    spec: FamilySpec::rational([1.0], [1.0, 0.5]),
                },
                0.5,
                3,
            ),
        )
    }

    fn point(sf: &SpaceForm, t: f64) -> CotangentPoint {
        let x: Vec<f64> = [0.3, -0.2, 0.1][..sf.n].to_vec();
        let dir: Vec<f64> = [0.6, 0.5, -0.7][..sf.n].to_vec();
        CotangentPoint::with_energy(sf, &x, &dir, t).unwrap()
    }

    #[test]
    fn closed_form_matches_oracle() {
        let cases = [
            sphere(LambdaRule::Case1 { rho: 6.0 }, 1.0, 2),
            twisted(),
            sphere(
                LambdaRule::Explicit {
                    spec: FamilySpec::poly([1.0, 0.4]),
                },
                -1.0,
                3,
            ),
        ];
        for (sf, fam) in cases {
            let pt = point(&sf, 0.2);
            let pc = fam.at(pt.t).unwrap();
            let exact = curvature_blocks(&pt, &pc).unwrap();
            let oracle = curvature_oracle(&LiftedField::new(&sf, &fam), &pt.coords()).unwrap();
            let dev = exact.max_deviation(&oracle);
            assert!(dev < 1e-4, "{dev} {:?}", exact.block_deviation(&oracle));
            assert!(exact.bianchi_residual() < 1e-10);
            assert!(oracle.bianchi_residual() < 1e-4);
            assert!(exact.antisymmetry_residual() < 1e-12);
            let ric = ricci_blocks(&exact);
            assert!(ric.symmetry_residual() < 1e-8);
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let (sf, fam) = sphere(
            LambdaRule::Explicit {
                spec: FamilySpec::constant(1.0),
            },
            0.0,
            2,
        );
        let pt = point(&sf, 0.3);
        let k = curvature_blocks(&pt, &fam.at(pt.t).unwrap()).unwrap();
        assert_eq!(k.max_abs(), 0.0);
        let oracle = curvature_oracle(&LiftedField::new(&sf, &fam), &pt.coords()).unwrap();
        assert!(oracle.max_abs() < 1e-5);
    }

    #[test]
    fn horizontal_block_at_zero_covector_lifts_base() {
        // constant coefficients, p = 0: the HH block is the base curvature
        let (sf, fam) = sphere(
            LambdaRule::Explicit {
                spec: FamilySpec::constant(1.0),
            },
            1.0,
            2,
        );
        let pt = CotangentPoint::new(&sf, &[0.2, -0.1], &[0.0, 0.0]).unwrap();
        let pc = fam.at(0.0).unwrap();
        let k = curvature_blocks(&pt, &pc).unwrap();
        let qqqq = k.block(BlockKind::QQQQ);
        let oracle = curvature_oracle(&LiftedField::new(&sf, &fam), &pt.coords()).unwrap();
        assert!(k.max_deviation(&oracle) < 1e-4);
        // at p = 0 every tensorial connection term vanishes, so QQQQ_{ijk}^h = R^h_kij
        let base = &pt.geometry.curvature;
        let lifted = Array4::from_shape_fn((2, 2, 2, 2), |(i, j, kk, h)| base[[h, kk, i, j]]);
        assert!(max_abs4(&(qqqq - lifted)) < 1e-12);
    }

    #[test]
    fn case1_is_einstein_with_constant_holomorphic_curvature() {
        for (rho, k_expected) in [(6.0, 4.0), (3.0, 2.0)] {
            let (sf, fam) = sphere(LambdaRule::Case1 { rho }, 1.0, 2);
            for t in [0.05, 0.2, 0.4] {
                let pt = point(&sf, t);
                let pc = fam.at(t).unwrap();
                let k = curvature_blocks(&pt, &pc).unwrap();
                let g = assemble_g(&pt, &pc).to_dense();
                let j = assemble_j(&pt, &pc).to_dense();
                let res = einstein_residual(&pt, &ricci_blocks(&k), &g, rho);
                assert!(res.max < 1e-6, "t={t} {res:?}");
                for x in [
                    DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
                    DVector::from_vec(vec![0.3, -0.7, 0.2, 0.5]),
                ] {
                    let kh = holomorphic_sectional_curvature(&k, &g, &j, &x).unwrap();
                    assert!((kh - k_expected).abs() < 1e-3, "t={t} k={kh}");
                }
            }
        }
    }

    #[test]
    fn case2_constant_branch_is_einstein() {
        let (sf, fam) = sphere(
            LambdaRule::Case2 {
                rho: 2.0,
                branch: Branch::Minus,
            },
            1.0,
            2,
        );
        for t in [0.05, 0.25, 0.45] {
            let pt = point(&sf, t);
            let pc = fam.at(t).unwrap();
            let k = curvature_blocks(&pt, &pc).unwrap();
            let g = assemble_g(&pt, &pc).to_dense();
            let res = einstein_residual(&pt, &ricci_blocks(&k), &g, 2.0);
            assert!(res.max < 1e-6, "t={t} {res:?}");
        }
    }

    #[test]
    fn scaled_lambda_breaks_einstein() {
        let (sf, fam) = sphere(LambdaRule::Case1 { rho: 6.0 }, 1.0, 2);
        let fam = fam.with_perturbation(Perturbation::LambdaScale(1.1));
        let pt = point(&sf, 0.2);
        let pc = fam.at(0.2).unwrap();
        let k = curvature_blocks(&pt, &pc).unwrap();
        let g = assemble_g(&pt, &pc).to_dense();
        let res = einstein_residual(&pt, &ricci_blocks(&k), &g, 6.0);
        assert!(res.max > 1e-2, "{res:?}");
        assert!(res.fits.iter().all(|f| f.misfit < 1e-8), "{res:?}");
    }

    #[test]
    fn flat_holomorphic_curvature_vanishes() {
        let (sf, fam) = sphere(
            LambdaRule::Explicit {
                spec: FamilySpec::constant(1.0),
            },
            0.0,
            2,
        );
        let pt = point(&sf, 0.3);
        let pc = fam.at(0.3).unwrap();
        let k = curvature_blocks(&pt, &pc).unwrap();
        let g = assemble_g(&pt, &pc).to_dense();
        let j = assemble_j(&pt, &pc).to_dense();
        let x = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(holomorphic_sectional_curvature(&k, &g, &j, &x).unwrap(), 0.0);
        assert!(holomorphic_sectional_curvature(&k, &g, &j, &DVector::zeros(4)).is_err());
    }
}
