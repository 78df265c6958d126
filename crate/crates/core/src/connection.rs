//! Levi-Civita connection of the lifted metric in the adapted frame.
//!
//! The connection is split into the base Christoffel terms, which every
//! natural metric shares, and six tensorial blocks:
//!
//! ```text
//! ∇_{∂^i} ∂^j = Q^{ij}_h ∂^h + Q̃^{ijh} δ_h
//! ∇_{∂^i} δ_j = P_j^{ih} δ_h + P̃_j^i_h ∂^h
//! ∇_{δ_i} ∂^j = (−Γ^j_ih + P̃_i^j_h) ∂^h + P_i^{jh} δ_h
//! ∇_{δ_i} δ_j = (Γ^h_ij + S̃_ij^h) δ_h + S_ijh ∂^h
//! ```
//!
//! Block arrays are stored by argument order: `p[[i, j, h]]` is the `δ_h`
//! component of `∇_{∂^i} δ_j`, i.e. `P_j^{ih}`.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};

use crate::bundle::{
    frame_at, frame_brackets_numeric, gradient, CotangentPoint, LiftedField, MetricJets, FD_STEP,
};
use crate::coefficients::{CoefficientSource, PointCoefficients};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionBlocks {
    pub q: Array3<f64>,
    pub q_tilde: Array3<f64>,
    pub p: Array3<f64>,
    pub p_tilde: Array3<f64>,
    pub s: Array3<f64>,
    pub s_tilde: Array3<f64>,
}

fn max_abs3(a: &Array3<f64>) -> f64 {
    a.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn max_diff3(a: &Array3<f64>, b: &Array3<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

impl ConnectionBlocks {
    pub fn names() -> [&'static str; 6] {
        ["Q", "Q~", "P", "P~", "S", "S~"]
    }

    pub fn arrays(&self) -> [&Array3<f64>; 6] {
        [
            &self.q,
            &self.q_tilde,
            &self.p,
            &self.p_tilde,
            &self.s,
            &self.s_tilde,
        ]
    }

    /// Blockwise maximum absolute deviation, in [`ConnectionBlocks::names`] order.
    pub fn deviation(&self, other: &ConnectionBlocks) -> [f64; 6] {
        let (a, b) = (self.arrays(), other.arrays());
        [0, 1, 2, 3, 4, 5].map(|k| max_diff3(a[k], b[k]))
    }

    pub fn max_deviation(&self, other: &ConnectionBlocks) -> f64 {
        self.deviation(other).into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.arrays().into_iter().map(max_abs3).fold(0.0, f64::max)
    }

    /// Residual of the index symmetries forced by torsion-freeness:
    /// `Q^{ij}_h = Q^{ji}_h` and `S_ijh − S_jih = R⁰_hij` (the vertical
    /// part of `[δ_i, δ_j]`), with `r0` indexed `[l, i, j]`.
    pub fn symmetry_residual(&self, r0: &Array3<f64>) -> f64 {
        let q = &self.q - &self.q.clone().permuted_axes([1, 0, 2]);
        let s = &self.s - &self.s.clone().permuted_axes([1, 0, 2]) - &r0.clone().permuted_axes([1, 2, 0]);
        max_abs3(&q).max(max_abs3(&s))
    }
}

/// Full connection coefficients in the adapted frame:
/// `full[[a, b, d]]` is the `e_d` component of `∇_{e_a} e_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedConnection {
    pub n: usize,
    pub full: Array3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConnectionMutation {
    /// Negate the `δ_h` component of `∇_{∂^i} δ_j` only, leaving its
    /// partner in `∇_{δ_j} ∂^i` intact. Breaks torsion-freeness.
    FlipP,
}

impl AdaptedConnection {
    pub fn from_blocks(blocks: &ConnectionBlocks, pt: &CotangentPoint) -> Self {
        let n = pt.n();
        let gamma = &pt.geometry.christoffel;
        let mut full = Array3::zeros((2 * n, 2 * n, 2 * n));
        for i in 0..n {
            for j in 0..n {
                for h in 0..n {
                    full[[n + i, n + j, n + h]] = blocks.q[[i, j, h]];
                    full[[n + i, n + j, h]] = blocks.q_tilde[[i, j, h]];
                    full[[n + i, j, h]] = blocks.p[[i, j, h]];
                    full[[n + i, j, n + h]] = blocks.p_tilde[[i, j, h]];
                    full[[i, n + j, n + h]] = -gamma[[j, i, h]] + blocks.p_tilde[[j, i, h]];
                    full[[i, n + j, h]] = blocks.p[[j, i, h]];
                    full[[i, j, h]] = gamma[[h, i, j]] + blocks.s_tilde[[i, j, h]];
                    full[[i, j, n + h]] = blocks.s[[i, j, h]];
                }
            }
        }
        Self { n, full }
    }

    /// The six blocks, after removing the base Christoffel terms.
    /// The `P` blocks are read from the `∇_{∂^i} δ_j` slots.
    pub fn blocks(&self, pt: &CotangentPoint) -> ConnectionBlocks {
        let n = self.n;
        let gamma = &pt.geometry.christoffel;
        let f = &self.full;
        ConnectionBlocks {
            q: Array3::from_shape_fn((n, n, n), |(i, j, h)| f[[n + i, n + j, n + h]]),
            q_tilde: Array3::from_shape_fn((n, n, n), |(i, j, h)| f[[n + i, n + j, h]]),
            p: Array3::from_shape_fn((n, n, n), |(i, j, h)| f[[n + i, j, h]]),
            p_tilde: Array3::from_shape_fn((n, n, n), |(i, j, h)| f[[n + i, j, n + h]]),
            s: Array3::from_shape_fn((n, n, n), |(i, j, h)| f[[i, j, n + h]]),
            s_tilde: Array3::from_shape_fn((n, n, n), |(i, j, h)| {
                f[[i, j, h]] - gamma[[h, i, j]]
            }),
        }
    }

    /// The base Christoffel symbols as seen in the `δ_h` component of
    /// `∇_{δ_i} δ_j` once the tensorial part `S̃` is removed.
    pub fn base_christoffel(&self, blocks: &ConnectionBlocks) -> Array3<f64> {
        let n = self.n;
        Array3::from_shape_fn((n, n, n), |(h, i, j)| {
            self.full[[i, j, h]] - blocks.s_tilde[[i, j, h]]
        })
    }

    pub fn mutated(&self, mutation: ConnectionMutation) -> Self {
        let mut out = self.clone();
        let n = self.n;
        match mutation {
            ConnectionMutation::FlipP => {
                for i in 0..n {
                    for j in 0..n {
                        for h in 0..n {
                            out.full[[n + i, j, h]] = -out.full[[n + i, j, h]];
                        }
                    }
                }
            }
        }
        out
    }
}

/// Block views of a `2n × 2n` symmetric natural field and its derivatives.
struct Blocks<'a> {
    n: usize,
    m: &'a DMatrix<f64>,
}

impl Blocks<'_> {
    fn hh(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }
    fn vv(&self, i: usize, j: usize) -> f64 {
        self.m[(self.n + i, self.n + j)]
    }
    /// Pairing of `δ_i` (first) with `∂^j` (second).
    fn hv(&self, i: usize, j: usize) -> f64 {
        self.m[(i, self.n + j)]
    }
}

/// The six tensorial blocks from their closed-form expressions in the
/// metric blocks, the inverse blocks and their vertical derivatives.
pub fn mtensor_coeffs(pt: &CotangentPoint, pc: &PointCoefficients) -> Result<ConnectionBlocks> {
    let n = pt.n();
    let jets = MetricJets::new(pt, pc)?;
    let g = Blocks { n, m: &jets.g };
    let h = Blocks { n, m: &jets.h };
    let dg: Vec<Blocks> = jets.dg.iter().map(|m| Blocks { n, m }).collect();
    let ginv = pt.inverse_metric();
    let r0 = &pt.r0;
    let (c2, c3) = (pc.c[1].v0, pc.c[2].v0);
    let sum = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>();

    // ½(∂^iG2^{jk} + ∂^jG2^{ik} − ∂^kG2^{ij})
    let vvv = |i: usize, j: usize, k: usize| {
        0.5 * (dg[i].vv(j, k) + dg[j].vv(i, k) - dg[k].vv(i, j))
    };
    // ½(∂^iG3^j_k + ∂^jG3^i_k), G3^j_k pairing δ_k with ∂^j
    let vvh = |i: usize, j: usize, k: usize| 0.5 * (dg[i].hv(k, j) + dg[j].hv(k, i));
    // ½(∂^iG3^k_j − ∂^kG3^i_j)
    let pv = |i: usize, j: usize, k: usize| 0.5 * (dg[i].hv(j, k) - dg[k].hv(j, i));
    // ½(∂^iG1_jk − R⁰_ljk G2^{li})
    let ph = |i: usize, j: usize, k: usize| {
        0.5 * (dg[i].hh(j, k) - sum(&|l| r0[[l, j, k]] * g.vv(l, i)))
    };
    // ½(c2 g^{kl} R⁰_lij − ∂^kG1_ij)
    let sv = |i: usize, j: usize, k: usize| {
        0.5 * (c2 * sum(&|l| ginv[(k, l)] * r0[[l, i, j]]) - dg[k].hh(i, j))
    };
    // −c3 R⁰_ijk
    let sh = |i: usize, j: usize, k: usize| -c3 * r0[[i, j, k]];

    let shape = (n, n, n);
    Ok(ConnectionBlocks {
        q: Array3::from_shape_fn(shape, |(i, j, hh)| {
            sum(&|k| vvv(i, j, k) * h.vv(k, hh) + vvh(i, j, k) * h.hv(k, hh))
        }),
        q_tilde: Array3::from_shape_fn(shape, |(i, j, hh)| {
            sum(&|k| vvv(i, j, k) * h.hv(hh, k) + vvh(i, j, k) * h.hh(k, hh))
        }),
        p: Array3::from_shape_fn(shape, |(i, j, hh)| {
            sum(&|k| pv(i, j, k) * h.hv(hh, k) + ph(i, j, k) * h.hh(k, hh))
        }),
        p_tilde: Array3::from_shape_fn(shape, |(i, j, hh)| {
            sum(&|k| pv(i, j, k) * h.vv(k, hh) + ph(i, j, k) * h.hv(k, hh))
        }),
        s: Array3::from_shape_fn(shape, |(i, j, hh)| {
            sum(&|k| sv(i, j, k) * h.vv(k, hh) + sh(i, j, k) * h.hv(k, hh))
        }),
        s_tilde: Array3::from_shape_fn(shape, |(i, j, hh)| {
            sum(&|k| sv(i, j, k) * h.hv(hh, k) + sh(i, j, k) * h.hh(k, hh))
        }),
    })
}

pub fn closed_form_connection(pt: &CotangentPoint, pc: &PointCoefficients) -> Result<AdaptedConnection> {
    Ok(AdaptedConnection::from_blocks(&mtensor_coeffs(pt, pc)?, pt))
}

/// Tensorial part `Γ̂` of the connection and its vertical derivatives,
/// from the frame form of the Koszul formula: the horizontal derivatives
/// of natural tensors vanish covariantly, so only `∂^k` derivatives and
/// the curvature part of `[δ_i, δ_j]` survive.
pub struct TensorialConnection {
    pub n: usize,
    /// `gamma[[a, b, d]]`: `e_d` component of the tensorial part of `∇_{e_a} e_b`.
    pub gamma: Array3<f64>,
    /// `dgamma[[k, a, b, d]] = ∂^k gamma[[a, b, d]]`.
    pub dgamma: Array4<f64>,
}

impl TensorialConnection {
    pub fn new(pt: &CotangentPoint, pc: &PointCoefficients) -> Result<Self> {
        let n = pt.n();
        let m = 2 * n;
        let jets = MetricJets::new(pt, pc)?;
        let (g, h) = (&jets.g, &jets.h);
        let r0 = &pt.r0;
        let curv = &pt.geometry.curvature;

        // vertical derivative of G along frame index `a` (zero for horizontal)
        let dg = |a: usize, b: usize, c: usize| if a < n { 0.0 } else { jets.dg[a - n][(b, c)] };
        let ddg = |k: usize, a: usize, b: usize, c: usize| {
            if a < n {
                0.0
            } else {
                jets.ddg[a - n][k][(b, c)]
            }
        };
        // G([δ_a, δ_b], e_c) with [δ_a, δ_b] = R⁰_lab ∂^l
        let cb = |a: usize, b: usize, c: usize| {
            if a < n && b < n {
                (0..n).map(|l| r0[[l, a, b]] * g[(n + l, c)]).sum()
            } else {
                0.0
            }
        };
        let dcb = |k: usize, a: usize, b: usize, c: usize| {
            if a < n && b < n {
                (0..n)
                    .map(|l| curv[[k, l, a, b]] * g[(n + l, c)] + r0[[l, a, b]] * jets.dg[k][(n + l, c)])
                    .sum()
            } else {
                0.0
            }
        };

        let kos = Array3::from_shape_fn((m, m, m), |(a, b, c)| {
            0.5 * (dg(a, b, c) + dg(b, a, c) - dg(c, a, b) + cb(a, b, c) - cb(a, c, b) - cb(b, c, a))
        });
        let dkos = Array4::from_shape_fn((n, m, m, m), |(k, a, b, c)| {
            0.5 * (ddg(k, a, b, c) + ddg(k, b, a, c) - ddg(k, c, a, b) + dcb(k, a, b, c)
                - dcb(k, a, c, b)
                - dcb(k, b, c, a))
        });
        let gamma = Array3::from_shape_fn((m, m, m), |(a, b, d)| {
            (0..m).map(|c| h[(d, c)] * kos[[a, b, c]]).sum()
        });
        let dgamma = Array4::from_shape_fn((n, m, m, m), |(k, a, b, d)| {
            (0..m)
                .map(|c| jets.dh[k][(d, c)] * kos[[a, b, c]] + h[(d, c)] * dkos[[k, a, b, c]])
                .sum()
        });
        Ok(Self { n, gamma, dgamma })
    }

    /// The full connection: tensorial part plus base Christoffel terms.
    pub fn full(&self, pt: &CotangentPoint) -> AdaptedConnection {
        let n = self.n;
        let gamma = &pt.geometry.christoffel;
        let mut full = self.gamma.clone();
        for i in 0..n {
            for j in 0..n {
                for h in 0..n {
                    full[[i, j, h]] += gamma[[h, i, j]];
                    full[[i, n + j, n + h]] -= gamma[[j, i, h]];
                }
            }
        }
        AdaptedConnection { n, full }
    }
}

/// Chart Christoffel symbols `[κ, μ, ν]` of the lifted metric by central
/// differences of its chart components.
pub fn chart_christoffel<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
    h: f64,
) -> Result<Array3<f64>> {
    let gc = field.sample(z)?.coordinate_metric();
    let gc_inv = gc
        .try_inverse()
        .ok_or_else(|| Error::DegenerateStructure("chart metric is singular".into()))?;
    let d = gradient(|w| Ok(field.sample(w)?.coordinate_metric()), z, h)?;
    let m = z.len();
    // first kind: [μν, λ] = ½(∂_μ G_λν + ∂_ν G_λμ − ∂_λ G_μν)
    let first = Array3::from_shape_fn((m, m, m), |(l, mu, nu)| {
        0.5 * (d[mu][(l, nu)] + d[nu][(l, mu)] - d[l][(mu, nu)])
    });
    Ok(Array3::from_shape_fn((m, m, m), |(k, mu, nu)| {
        (0..m).map(|l| gc_inv[(k, l)] * first[[l, mu, nu]]).sum()
    }))
}

/// Levi-Civita connection of the lifted metric computed entirely by finite
/// differences in the chart and converted to the adapted frame.
pub fn koszul_oracle<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
) -> Result<AdaptedConnection> {
    let n = field.space_form.n;
    let m = 2 * n;
    let gc = chart_christoffel(field, z, FD_STEP)?;
    let sample = field.sample(z)?;
    let (e, einv) = (&sample.frame, &sample.frame_inverse);
    let de = gradient(|w| frame_at(field.space_form, w), z, FD_STEP)?;
    let mut full = Array3::zeros((m, m, m));
    for a in 0..m {
        for b in 0..m {
            // chart components of ∇_{e_a} e_b
            let v: Vec<f64> = (0..m)
                .map(|k| {
                    (0..m)
                        .map(|mu| {
                            let inner: f64 = (0..m).map(|nu| gc[[k, mu, nu]] * e[(nu, b)]).sum();
                            e[(mu, a)] * (de[mu][(k, b)] + inner)
                        })
                        .sum()
                })
                .collect();
            for d in 0..m {
                full[[a, b, d]] = (0..m).map(|k| einv[(d, k)] * v[k]).sum();
            }
        }
    }
    Ok(AdaptedConnection { n, full })
}

/// Maximum residuals of metric compatibility and torsion-freeness of
/// `conn`, with frame derivatives and brackets taken numerically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricTorsion {
    pub metric: f64,
    pub torsion: f64,
}

pub fn metric_torsion_check<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
    conn: &AdaptedConnection,
) -> Result<MetricTorsion> {
    let m = z.len();
    let sample = field.sample(z)?;
    let (e, g) = (&sample.frame, &sample.g);
    let dga = gradient(|w| Ok(field.sample(w)?.g), z, FD_STEP)?;
    let brackets = frame_brackets_numeric(field.space_form, z, FD_STEP)?;
    let f = &conn.full;
    let mut metric = 0.0f64;
    let mut torsion = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let ea_g: f64 = (0..m).map(|mu| e[(mu, a)] * dga[mu][(b, c)]).sum();
                let contr: f64 = (0..m)
                    .map(|d| f[[a, b, d]] * g[(d, c)] + f[[a, c, d]] * g[(b, d)])
                    .sum();
                metric = metric.max((ea_g - contr).abs());
                let t = f[[a, b, c]] - f[[b, a, c]] - brackets[[c, a, b]];
                torsion = torsion.max(t.abs());
            }
        }
    }
    Ok(MetricTorsion { metric, torsion })
}
