//! Pointwise lifted structures on the cotangent bundle: the adapted frame,
//! the metric `G`, the complex structure `J`, the closed-form inverse `H`,
//! and the fundamental form, plus the induced-chart field used by the
//! finite-difference oracles.
//!
//! Adapted-frame index convention: for a `2n` index `a`, `a < n` is the
//! horizontal field `δ_a = ∂/∂q^a + Γ⁰_ah ∂/∂p_h`, and `a ≥ n` is the
//! vertical field `∂^{a−n} = ∂/∂p_{a−n}`. A `(1,1)` tensor is stored with
//! `m[(a, b)]` the `e_a` component of the image of `e_b`.

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;

use crate::coefficients::{CoefficientSource, PointCoefficients};
use crate::error::{Error, Result};
use crate::jets::Jet3;
use crate::space_form::{BaseGeometry, SpaceForm};

/// Central-difference step used by every finite-difference oracle.
pub const FD_STEP: f64 = 1e-4;

/// A point `(x, p)` of the cotangent bundle with the base quantities the
/// lifted structures need.
#[derive(Clone, Debug)]
pub struct CotangentPoint {
    pub x: Vec<f64>,
    pub p: DVector<f64>,
    /// Energy density `½ g^{ik} p_i p_k`.
    pub t: f64,
    pub geometry: BaseGeometry,
    /// `g^{ij} p_j`.
    pub g0: DVector<f64>,
    /// `Γ⁰_ih = p_k Γ^k_ih`.
    pub gamma0: DMatrix<f64>,
    /// `R⁰_lij = p_h R^h_lij`, indexed `[l, i, j]`.
    pub r0: Array3<f64>,
    identity: DMatrix<f64>,
}

impl CotangentPoint {
    pub fn new(sf: &SpaceForm, x: &[f64], p: &[f64]) -> Result<Self> {
        let n = sf.n;
        if p.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        let geometry = sf.geometry(x)?;
        let p = DVector::from_column_slice(p);
        let g0 = &geometry.inverse * &p;
        let t = 0.5 * p.dot(&g0);
        let gamma0 = DMatrix::from_fn(n, n, |i, h| {
            (0..n).map(|k| p[k] * geometry.christoffel[[k, i, h]]).sum()
        });
        let r0 = Array3::from_shape_fn((n, n, n), |(l, i, j)| {
            (0..n).map(|h| p[h] * geometry.curvature[[h, l, i, j]]).sum()
        });
        Ok(Self {
            x: x.to_vec(),
            p,
            t,
            geometry,
            g0,
            gamma0,
            r0,
            identity: DMatrix::identity(n, n),
        })
    }

    /// Point over `x` whose covector points along `direction` and has
    /// energy density exactly `t`.
    pub fn with_energy(sf: &SpaceForm, x: &[f64], direction: &[f64], t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::Inadmissible {
                t,
                reason: "negative energy density".into(),
            });
        }
        let (_, ginv) = sf.metric(x)?;
        let d = DVector::from_column_slice(direction);
        let norm2 = d.dot(&(&ginv * &d));
        if !(norm2 > 0.0) {
            return Err(Error::ZeroVector);
        }
        let p = d * ((2.0 * t) / norm2).sqrt();
        Self::new(sf, x, p.as_slice())
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.geometry.metric
    }

    pub fn inverse_metric(&self) -> &DMatrix<f64> {
        &self.geometry.inverse
    }

    /// Chart coordinates `z = (x, p)`.
    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().copied().chain(self.p.iter().copied()).collect()
    }

    fn base(&self, b: Base) -> &DMatrix<f64> {
        match b {
            Base::Metric => &self.geometry.metric,
            Base::Inverse => &self.geometry.inverse,
            Base::Identity => &self.identity,
        }
    }

    fn factor(&self, f: Factor) -> &DVector<f64> {
        match f {
            Factor::P => &self.p,
            Factor::G0 => &self.g0,
        }
    }

    /// `∂^k` of the factor: `∂^k p_i = δ_ki`, `∂^k g⁰_i = g^{ki}`.
    fn factor_derivative(&self, f: Factor) -> &DMatrix<f64> {
        match f {
            Factor::P => &self.identity,
            Factor::G0 => &self.geometry.inverse,
        }
    }
}

/// A `2n × 2n` object stored as its four `n × n` adapted-frame blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockTensor {
    pub hh: DMatrix<f64>,
    pub hv: DMatrix<f64>,
    pub vh: DMatrix<f64>,
    pub vv: DMatrix<f64>,
}

impl BlockTensor {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows() / 2;
        Self {
            hh: m.view((0, 0), (n, n)).into_owned(),
            hv: m.view((0, n), (n, n)).into_owned(),
            vh: m.view((n, 0), (n, n)).into_owned(),
            vv: m.view((n, n), (n, n)).into_owned(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.hh.nrows();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&self.hh);
        m.view_mut((0, n), (n, n)).copy_from(&self.hv);
        m.view_mut((n, 0), (n, n)).copy_from(&self.vh);
        m.view_mut((n, n), (n, n)).copy_from(&self.vv);
        m
    }

    pub fn n(&self) -> usize {
        self.hh.nrows()
    }

    pub fn symmetry_residual(&self) -> f64 {
        let m = self.to_dense();
        max_abs(&(&m - m.transpose()))
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let m = self.to_dense();
        max_abs(&(&m + m.transpose()))
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Base {
    Metric,
    Inverse,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Factor {
    P,
    G0,
}

/// `B_ij = α(t) A_ij + β(t) u_i v_j` with `A ∈ {g, g⁻¹, I}`, `u, v ∈ {p, g⁰}`.
#[derive(Clone, Copy, Debug)]
struct NaturalBlock {
    alpha: Jet3,
    beta: Jet3,
    base: Base,
    u: Factor,
    v: Factor,
}

impl NaturalBlock {
    fn new(alpha: Jet3, beta: Jet3, base: Base, u: Factor, v: Factor) -> Self {
        Self {
            alpha,
            beta,
            base,
            u,
            v,
        }
    }

    fn value(&self, pt: &CotangentPoint) -> DMatrix<f64> {
        let u = pt.factor(self.u);
        let v = pt.factor(self.v);
        pt.base(self.base) * self.alpha.v0 + (u * v.transpose()) * self.beta.v0
    }

    /// `∂^k B_ij = α'g⁰_k A_ij + β'g⁰_k u_i v_j + β(U_ki v_j + u_i V_kj)`.
    fn d1(&self, pt: &CotangentPoint) -> Vec<DMatrix<f64>> {
        let n = pt.n();
        let a = pt.base(self.base);
        let (u, v) = (pt.factor(self.u), pt.factor(self.v));
        let (du, dv) = (pt.factor_derivative(self.u), pt.factor_derivative(self.v));
        let (a1, b0, b1) = (self.alpha.v1, self.beta.v0, self.beta.v1);
        (0..n)
            .map(|k| {
                let g0k = pt.g0[k];
                DMatrix::from_fn(n, n, |i, j| {
                    a1 * g0k * a[(i, j)]
                        + b1 * g0k * u[i] * v[j]
                        + b0 * (du[(k, i)] * v[j] + u[i] * dv[(k, j)])
                })
            })
            .collect()
    }

    /// `∂^l ∂^k B_ij`, indexed `[l][k]`.
    fn d2(&self, pt: &CotangentPoint) -> Vec<Vec<DMatrix<f64>>> {
        let n = pt.n();
        let a = pt.base(self.base);
        let ginv = pt.inverse_metric();
        let g0 = &pt.g0;
        let (u, v) = (pt.factor(self.u), pt.factor(self.v));
        let (du, dv) = (pt.factor_derivative(self.u), pt.factor_derivative(self.v));
        let (a1, a2) = (self.alpha.v1, self.alpha.v2);
        let (b0, b1, b2) = (self.beta.v0, self.beta.v1, self.beta.v2);
        (0..n)
            .map(|l| {
                (0..n)
                    .map(|k| {
                        DMatrix::from_fn(n, n, |i, j| {
                            let uv = u[i] * v[j];
                            (a2 * g0[l] * g0[k] + a1 * ginv[(l, k)]) * a[(i, j)]
                                + (b2 * g0[l] * g0[k] + b1 * ginv[(l, k)]) * uv
                                + b1 * g0[k] * (du[(l, i)] * v[j] + u[i] * dv[(l, j)])
                                + b1 * g0[l] * (du[(k, i)] * v[j] + u[i] * dv[(k, j)])
                                + b0 * (du[(k, i)] * dv[(l, j)] + du[(l, i)] * dv[(k, j)])
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// A symmetric natural `2n × 2n` field: the HH, HV and VV blocks
/// (VH is the transpose of HV).
#[derive(Clone, Copy, Debug)]
struct NaturalSymmetric {
    hh: NaturalBlock,
    hv: NaturalBlock,
    vv: NaturalBlock,
}

fn join(n: usize, hh: &DMatrix<f64>, hv: &DMatrix<f64>, vv: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(hh);
    m.view_mut((0, n), (n, n)).copy_from(hv);
    m.view_mut((n, 0), (n, n)).copy_from(&hv.transpose());
    m.view_mut((n, n), (n, n)).copy_from(vv);
    m
}

impl NaturalSymmetric {
    fn value(&self, pt: &CotangentPoint) -> DMatrix<f64> {
        join(pt.n(), &self.hh.value(pt), &self.hv.value(pt), &self.vv.value(pt))
    }

    fn d1(&self, pt: &CotangentPoint) -> Vec<DMatrix<f64>> {
        let (hh, hv, vv) = (self.hh.d1(pt), self.hv.d1(pt), self.vv.d1(pt));
        (0..pt.n()).map(|k| join(pt.n(), &hh[k], &hv[k], &vv[k])).collect()
    }

    fn d2(&self, pt: &CotangentPoint) -> Vec<Vec<DMatrix<f64>>> {
        let (hh, hv, vv) = (self.hh.d2(pt), self.hv.d2(pt), self.vv.d2(pt));
        (0..pt.n())
            .map(|l| {
                (0..pt.n())
                    .map(|k| join(pt.n(), &hh[l][k], &hv[l][k], &vv[l][k]))
                    .collect()
            })
            .collect()
    }
}

fn metric_field(pc: &PointCoefficients) -> NaturalSymmetric {
    let [c1, c2, c3] = pc.c;
    let [d1, d2, d3] = pc.d;
    NaturalSymmetric {
        hh: NaturalBlock::new(c1, d1, Base::Metric, Factor::P, Factor::P),
        hv: NaturalBlock::new(c3, d3, Base::Identity, Factor::P, Factor::G0),
        vv: NaturalBlock::new(c2, d2, Base::Inverse, Factor::G0, Factor::G0),
    }
}

/// Scalar coefficients of the closed-form inverse metric:
/// `H_HH = e1 g⁻¹ + f1 g⁰g⁰`, `H_VV = e2 g + f2 pp`, `H_HV = e3 I + f3 g⁰p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseCoefficients {
    pub e: [Jet3; 3],
    pub f: [Jet3; 3],
}

const SINGULAR: f64 = 1e-12;

pub fn inverse_coeffs(pc: &PointCoefficients) -> Result<InverseCoefficients> {
    let [c1, c2, c3] = pc.c;
    let [d1, d2, d3] = pc.d;
    let t = Jet3::variable(pc.t);
    let det0 = c1 * c2 - c3 * c3;
    if det0.v0.abs() < SINGULAR {
        return Err(Error::SingularCoefficients {
            t: pc.t,
            reason: "c1 c2 - c3² vanishes",
        });
    }
    let e1 = c2 / det0;
    let e2 = c1 / det0;
    let e3 = -c3 / det0;
    let h1 = c1 + 2.0 * t * d1;
    let h2 = c2 + 2.0 * t * d2;
    let h3 = c3 + 2.0 * t * d3;
    let det = h1 * h2 - h3 * h3;
    if det.v0.abs() < SINGULAR || h2.v0.abs() < SINGULAR {
        return Err(Error::SingularCoefficients {
            t: pc.t,
            reason: "lifted block determinant vanishes",
        });
    }
    let f1 = -(c2 * d1 * e1 - c3 * d3 * e1 - c3 * d2 * e3 + c2 * d3 * e3
        + 2.0 * t * d1 * d2 * e1
        - 2.0 * t * d3 * d3 * e1)
        / det;
    let cross = (d3 * e1 + d2 * e3) * h1 - (d1 * e1 + d3 * e3) * h3;
    let f2 = h3 * cross / (h2 * det) - (d2 * e2 + d3 * e3) / h2;
    let f3 = -cross / det;
    Ok(InverseCoefficients {
        e: [e1, e2, e3],
        f: [f1, f2, f3],
    })
}

fn inverse_field(ic: &InverseCoefficients) -> NaturalSymmetric {
    let [e1, e2, e3] = ic.e;
    let [f1, f2, f3] = ic.f;
    NaturalSymmetric {
        hh: NaturalBlock::new(e1, f1, Base::Inverse, Factor::G0, Factor::G0),
        hv: NaturalBlock::new(e3, f3, Base::Identity, Factor::G0, Factor::P),
        vv: NaturalBlock::new(e2, f2, Base::Metric, Factor::P, Factor::P),
    }
}

pub fn assemble_g(pt: &CotangentPoint, pc: &PointCoefficients) -> BlockTensor {
    BlockTensor::from_dense(&metric_field(pc).value(pt))
}

pub fn assemble_j(pt: &CotangentPoint, pc: &PointCoefficients) -> BlockTensor {
    let [a1, a2, a3] = pc.a.map(|j| j.v0);
    let [b1, b2, b3] = pc.b.map(|j| j.v0);
    let (g, ginv, p, g0) = (pt.metric(), pt.inverse_metric(), &pt.p, &pt.g0);
    let n = pt.n();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    BlockTensor {
        // component δ_j of Jδ_i
        hh: DMatrix::from_fn(n, n, |j, i| -a3 * delta(i, j) - b3 * p[i] * g0[j]),
        // component δ_j of J∂^i
        hv: DMatrix::from_fn(n, n, |j, i| -(a2 * ginv[(i, j)] + b2 * g0[i] * g0[j])),
        // component ∂^j of Jδ_i
        vh: DMatrix::from_fn(n, n, |j, i| a1 * g[(i, j)] + b1 * p[i] * p[j]),
        // component ∂^j of J∂^i
        vv: DMatrix::from_fn(n, n, |j, i| a3 * delta(i, j) + b3 * g0[i] * p[j]),
    }
}

pub fn invert_g_closed_form(pt: &CotangentPoint, pc: &PointCoefficients) -> Result<BlockTensor> {
    let ic = inverse_coeffs(pc)?;
    Ok(BlockTensor::from_dense(&inverse_field(&ic).value(pt)))
}

/// `Ω(X, Y) = G(X, JY)`.
pub fn fundamental_form(pt: &CotangentPoint, pc: &PointCoefficients) -> BlockTensor {
    let g = assemble_g(pt, pc).to_dense();
    let j = assemble_j(pt, pc).to_dense();
    BlockTensor::from_dense(&(g * j))
}

/// `max |J² + I|`.
pub fn j_squared_residual(pt: &CotangentPoint, pc: &PointCoefficients) -> f64 {
    let j = assemble_j(pt, pc).to_dense();
    let n2 = j.nrows();
    max_abs(&(&j * &j + DMatrix::identity(n2, n2)))
}

/// `max |G(JX, JY) − G(X, Y)|` over all frame pairs.
pub fn hermitian_residual(pt: &CotangentPoint, pc: &PointCoefficients) -> f64 {
    let g = assemble_g(pt, pc).to_dense();
    let j = assemble_j(pt, pc).to_dense();
    max_abs(&(j.transpose() * &g * &j - &g))
}

/// `G`, its inverse and their vertical derivatives, all closed form.
pub struct MetricJets {
    pub g: DMatrix<f64>,
    /// `∂^k G`, indexed by `k`.
    pub dg: Vec<DMatrix<f64>>,
    /// `∂^l ∂^k G`, indexed `[l][k]`.
    pub ddg: Vec<Vec<DMatrix<f64>>>,
    pub h: DMatrix<f64>,
    /// `∂^k H`, indexed by `k`.
    pub dh: Vec<DMatrix<f64>>,
}

impl MetricJets {
    pub fn new(pt: &CotangentPoint, pc: &PointCoefficients) -> Result<Self> {
        let gf = metric_field(pc);
        let hf = inverse_field(&inverse_coeffs(pc)?);
        Ok(Self {
            g: gf.value(pt),
            dg: gf.d1(pt),
            ddg: gf.d2(pt),
            h: hf.value(pt),
            dh: hf.d1(pt),
        })
    }
}

/// The lifted structure as a field on the induced chart `z = (q, p)`.
pub struct LiftedField<'a, S: CoefficientSource + ?Sized> {
    pub space_form: &'a SpaceForm,
    pub source: &'a S,
}

/// Everything the oracles need at one chart point.
#[derive(Clone, Debug)]
pub struct FieldSample {
    /// Frame matrix: column `a` holds the chart components of `e_a`.
    pub frame: DMatrix<f64>,
    pub frame_inverse: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub j: DMatrix<f64>,
}

impl FieldSample {
    /// Chart components of the metric, `E⁻ᵀ G E⁻¹`.
    pub fn coordinate_metric(&self) -> DMatrix<f64> {
        self.frame_inverse.transpose() * &self.g * &self.frame_inverse
    }

    /// Chart components of `J`, `E J E⁻¹`.
    pub fn coordinate_j(&self) -> DMatrix<f64> {
        &self.frame * &self.j * &self.frame_inverse
    }
}

pub fn frame_matrix(pt: &CotangentPoint) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = pt.n();
    let mut e = DMatrix::identity(2 * n, 2 * n);
    let mut einv = DMatrix::identity(2 * n, 2 * n);
    for i in 0..n {
        for h in 0..n {
            e[(n + h, i)] = pt.gamma0[(i, h)];
            einv[(n + h, i)] = -pt.gamma0[(i, h)];
        }
    }
    (e, einv)
}

impl<'a, S: CoefficientSource + ?Sized> LiftedField<'a, S> {
    pub fn new(space_form: &'a SpaceForm, source: &'a S) -> Self {
        Self { space_form, source }
    }

    pub fn point(&self, z: &[f64]) -> Result<CotangentPoint> {
        let n = self.space_form.n;
        if z.len() != 2 * n {
            return Err(Error::Dimension {
                expected: 2 * n,
                got: z.len(),
            });
        }
        CotangentPoint::new(self.space_form, &z[..n], &z[n..])
    }

    pub fn sample(&self, z: &[f64]) -> Result<FieldSample> {
        let pt = self.point(z)?;
        let pc = self.source.at(pt.t)?;
        let (frame, frame_inverse) = frame_matrix(&pt);
        Ok(FieldSample {
            frame,
            frame_inverse,
            g: assemble_g(&pt, &pc).to_dense(),
            j: assemble_j(&pt, &pc).to_dense(),
        })
    }
}

/// Five-point central difference of a matrix-valued function along chart
/// axis `mu`. The `O(h⁴)` stencil keeps truncation error negligible even
/// where the coefficient functions have large third derivatives.
pub fn central_difference<F>(f: F, z: &[f64], mu: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    let at = |k: f64| {
        let mut w = z.to_vec();
        w[mu] += k * h;
        f(&w)
    };
    let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
    Ok(((p1 - m1) * 8.0 - (p2 - m2)) / (12.0 * h))
}

/// Chart partial derivatives `∂_μ F` for every axis.
pub fn gradient<F>(f: F, z: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>>
where
    F: Fn(&[f64]) -> Result<DMatrix<f64>>,
{
    (0..z.len()).map(|mu| central_difference(&f, z, mu, h)).collect()
}

/// Nijenhuis tensor `N(X,Y) = [JX,JY] − J[JX,Y] − J[X,JY] − [X,Y]`,
/// computed in the chart by finite differences and returned in the
/// adapted frame as `[d, a, b]`: the `e_d` component of `N(e_a, e_b)`.
pub fn nijenhuis_tensor<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
    h: f64,
) -> Result<Array3<f64>> {
    let centre = field.sample(z)?;
    let jc = centre.coordinate_j();
    let dj = gradient(|w| Ok(field.sample(w)?.coordinate_j()), z, h)?;
    let m = z.len();
    let nc = Array3::from_shape_fn((m, m, m), |(k, mu, nu)| {
        let mut s = 0.0;
        for l in 0..m {
            s += jc[(l, mu)] * dj[l][(k, nu)] - jc[(l, nu)] * dj[l][(k, mu)];
            s -= jc[(k, l)] * (dj[mu][(l, nu)] - dj[nu][(l, mu)]);
        }
        s
    });
    Ok(to_frame3(&nc, &centre.frame, &centre.frame_inverse))
}

pub fn nijenhuis_numeric<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
) -> Result<f64> {
    let n = nijenhuis_tensor(field, z, FD_STEP)?;
    Ok(n.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

/// Max component of the exterior derivative of `Ω` in the chart.
pub fn d_omega_numeric<S: CoefficientSource + ?Sized>(
    field: &LiftedField<'_, S>,
    z: &[f64],
) -> Result<f64> {
    let omega = |w: &[f64]| {
        let s = field.sample(w)?;
        Ok(s.coordinate_metric() * s.coordinate_j())
    };
    let d = gradient(omega, z, FD_STEP)?;
    let m = z.len();
    let mut worst = 0.0f64;
    for a in 0..m {
        for b in (a + 1)..m {
            for c in (b + 1)..m {
                let v = d[a][(b, c)] + d[b][(c, a)] + d[c][(a, b)];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Convert a chart `(1,2)` tensor `T^κ_μν` to the adapted frame.
pub fn to_frame3(t: &Array3<f64>, e: &DMatrix<f64>, einv: &DMatrix<f64>) -> Array3<f64> {
    let m = e.nrows();
    // contract one index at a time to keep the cost at m⁴
    let mut s1 = Array3::<f64>::zeros((m, m, m));
    for d in 0..m {
        for mu in 0..m {
            for nu in 0..m {
                s1[[d, mu, nu]] = (0..m).map(|k| einv[(d, k)] * t[[k, mu, nu]]).sum::<f64>();
            }
        }
    }
    let mut s2 = Array3::<f64>::zeros((m, m, m));
    for d in 0..m {
        for a in 0..m {
            for nu in 0..m {
                s2[[d, a, nu]] = (0..m).map(|mu| s1[[d, mu, nu]] * e[(mu, a)]).sum::<f64>();
            }
        }
    }
    Array3::from_shape_fn((m, m, m), |(d, a, b)| {
        (0..m).map(|nu| s2[[d, a, nu]] * e[(nu, b)]).sum()
    })
}

/// Dense numeric inverse of `G`, used as an oracle for the closed form.
pub fn dense_inverse(g: &BlockTensor) -> Result<DMatrix<f64>> {
    g.to_dense()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateStructure("metric is singular".into()))
}

/// `true` when the dense metric admits a Cholesky factorization.
pub fn is_positive_definite(g: &BlockTensor) -> bool {
    g.to_dense().cholesky().is_some()
}

/// Frame field evaluated alone (no coefficients needed), for brackets.
pub fn frame_at(sf: &SpaceForm, z: &[f64]) -> Result<DMatrix<f64>> {
    let n = sf.n;
    let pt = CotangentPoint::new(sf, &z[..n], &z[n..])?;
    Ok(frame_matrix(&pt).0)
}

/// Lie brackets of frame fields, `[e_a, e_b] = C^d_ab e_d`, as `[d, a, b]`,
/// by finite differences of the frame matrix.
pub fn frame_brackets_numeric(sf: &SpaceForm, z: &[f64], h: f64) -> Result<Array3<f64>> {
    let e = frame_at(sf, z)?;
    let einv = e
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateStructure("frame is singular".into()))?;
    let de = gradient(|w| frame_at(sf, w), z, h)?;
    let m = z.len();
    // chart components of [e_a, e_b]: e_a^μ ∂_μ e_b − e_b^μ ∂_μ e_a
    let mut out = Array3::zeros((m, m, m));
    for a in 0..m {
        for b in 0..m {
            let mut v = DVector::zeros(m);
            for mu in 0..m {
                for k in 0..m {
                    v[k] += e[(mu, a)] * de[mu][(k, b)] - e[(mu, b)] * de[mu][(k, a)];
                }
            }
            let w = &einv * v;
            for d in 0..m {
                out[[d, a, b]] = w[d];
            }
        }
    }
    Ok(out)
}

/// Closed-form frame brackets: `[δ_i, δ_j] = R⁰_lij ∂^l`,
/// `[δ_i, ∂^j] = −Γ^j_ih ∂^h`, vertical fields commute.
pub fn frame_brackets(pt: &CotangentPoint) -> Array3<f64> {
    let n = pt.n();
    let gamma = &pt.geometry.christoffel;
    let mut out = Array3::zeros((2 * n, 2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                out[[n + l, i, j]] = pt.r0[[l, i, j]];
                out[[n + l, i, n + j]] = -gamma[[j, i, l]];
                out[[n + l, n + j, i]] = gamma[[j, i, l]];
            }
        }
    }
    out
}
