//! Matrix and vector norm algebra: gauges, dual gauges, unit-ball extreme
//! points, and the variational dual oracle.

mod checks;
mod variational;

pub use checks::{
    check_clunky_condition, check_left_orthogonal_invariance, check_rank_one_isotropy,
    check_sym_rank_one_strict_convexity, ConditionReport,
};
pub use variational::{variational_sup, VariationalConfig, VariationalResult};

use crate::error::{CoreError, Result};
use crate::linalg::{self, Mat, MAX_DIM};
use serde::{Deserialize, Serialize};

/// Exponent of an l^p norm; infinity is a dedicated branch, never a limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PExp {
    Finite(f64),
    Inf,
}

impl PExp {
    pub fn validate(&self) -> Result<()> {
        match self {
            PExp::Finite(p) if *p >= 1.0 && p.is_finite() => Ok(()),
            PExp::Inf => Ok(()),
            PExp::Finite(p) => Err(CoreError::InvalidSpec(format!("p must be in [1, inf], got {p}"))),
        }
    }

    /// Hoelder conjugate: 1 <-> inf, p -> p/(p-1).
    pub fn conjugate(&self) -> PExp {
        match self {
            PExp::Inf => PExp::Finite(1.0),
            PExp::Finite(p) if *p == 1.0 => PExp::Inf,
            PExp::Finite(p) => PExp::Finite(p / (p - 1.0)),
        }
    }
}

impl Serialize for PExp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PExp::Finite(p) => s.serialize_f64(*p),
            PExp::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PExp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::Number(n) => {
                let p = n.as_f64().ok_or_else(|| D::Error::custom("bad exponent"))?;
                Ok(PExp::Finite(p))
            }
            serde_json::Value::String(s) if s.eq_ignore_ascii_case("inf") => Ok(PExp::Inf),
            _ => Err(D::Error::custom("exponent must be a number or \"inf\"")),
        }
    }
}

/// Unit ball of a norm on R^dim: an l^p ball or (for dim 2) a centrally
/// symmetric convex polygon given by its vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorBallSpec {
    pub dim: usize,
    #[serde(flatten)]
    pub kind: VectorBallKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorBallKind {
    Lp { p: PExp },
    Polygon { vertices: Vec<[f64; 2]> },
}

/// Extreme points of a vector ball: an explicit vertex list for polyhedral
/// balls, or the whole sphere (navigated through the argmax oracle) for
/// strictly convex ones.
#[derive(Clone, Debug)]
pub enum ExtremePoints {
    Vertices(Vec<Vec<f64>>),
    Sphere(VectorBallSpec),
}

const SYMMETRY_TOL: f64 = 1e-9;

impl VectorBallSpec {
    pub fn lp(dim: usize, p: PExp) -> Self {
        VectorBallSpec { dim, kind: VectorBallKind::Lp { p } }
    }

    pub fn l1(dim: usize) -> Self {
        Self::lp(dim, PExp::Finite(1.0))
    }

    pub fn l2(dim: usize) -> Self {
        Self::lp(dim, PExp::Finite(2.0))
    }

    pub fn linf(dim: usize) -> Self {
        Self::lp(dim, PExp::Inf)
    }

    /// Regular k-gon with vertices on the unit circle starting at angle 0.
    /// k must be even so the ball is centrally symmetric.
    pub fn regular_polygon(k: usize) -> Result<Self> {
        if k < 4 || k % 2 != 0 {
            return Err(CoreError::InvalidSpec(format!("regular polygon needs an even k >= 4, got {k}")));
        }
        let verts: Vec<[f64; 2]> = (0..k)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let spec = VectorBallSpec { dim: 2, kind: VectorBallKind::Polygon { vertices: verts } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(CoreError::InvalidSpec(format!("ball dim must be in 1..={MAX_DIM}")));
        }
        match &self.kind {
            VectorBallKind::Lp { p } => p.validate(),
            VectorBallKind::Polygon { vertices } => {
                if self.dim != 2 {
                    return Err(CoreError::InvalidSpec("polygon balls require dim 2".into()));
                }
                if vertices.len() < 4 || vertices.len() % 2 != 0 {
                    return Err(CoreError::InvalidSpec("polygon ball needs an even number (>= 4) of vertices".into()));
                }
                // Central symmetry: every vertex has its antipode in the list.
                for v in vertices {
                    let has_neg = vertices
                        .iter()
                        .any(|w| (w[0] + v[0]).abs() <= SYMMETRY_TOL && (w[1] + v[1]).abs() <= SYMMETRY_TOL);
                    if !has_neg {
                        return Err(CoreError::InvalidSpec(format!(
                            "polygon ball not centrally symmetric: vertex ({}, {}) has no antipode",
                            v[0], v[1]
                        )));
                    }
                }
                let ordered = order_by_angle(vertices)?;
                // Convex position: every vertex strictly extremal.
                let k = ordered.len();
                for i in 0..k {
                    let a = ordered[i];
                    let b = ordered[(i + 1) % k];
                    let c = ordered[(i + 2) % k];
                    let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                    if cross <= SYMMETRY_TOL {
                        return Err(CoreError::InvalidSpec("polygon ball vertices not in strictly convex position".into()));
                    }
                }
                Ok(())
            }
        }
    }

    /// Vertices sorted counterclockwise by angle (polygon balls only).
    fn ordered_vertices(&self) -> Result<Vec<[f64; 2]>> {
        match &self.kind {
            VectorBallKind::Polygon { vertices } => order_by_angle(vertices),
            _ => Err(CoreError::Unsupported("not a polygon ball".into())),
        }
    }

    /// Outward edge functionals a_i with a_i . x = 1 on edge i; the gauge of
    /// the polygon is max_i a_i . x and the polar polygon has the a_i as
    /// vertices.
    fn edge_functionals(&self) -> Result<Vec<[f64; 2]>> {
        let verts = self.ordered_vertices()?;
        let k = verts.len();
        let mut out = Vec::with_capacity(k);
        for i in 0..k {
            let v = verts[i];
            let w = verts[(i + 1) % k];
            let det = v[0] * w[1] - v[1] * w[0];
            if det.abs() < 1e-14 {
                return Err(CoreError::InvalidSpec("polygon ball edge through the origin".into()));
            }
            out.push([(w[1] - v[1]) / det, (v[0] - w[0]) / det]);
        }
        Ok(out)
    }

    /// Minkowski gauge of the ball.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(match &self.kind {
            VectorBallKind::Lp { p } => lp_norm(x, *p),
            VectorBallKind::Polygon { .. } => {
                let fns = self.edge_functionals()?;
                fns.iter().map(|a| a[0] * x[0] + a[1] * x[1]).fold(0.0, f64::max)
            }
        })
    }

    /// Gauge together with a subgradient g with <g, x> = gauge(x) and
    /// dual_gauge(g) <= 1.
    pub fn gauge_subgrad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.gauge_subgrad_relaxed(x, 0.0)
    }

    /// Like `gauge_subgrad`, but averages over the pieces active within a
    /// relative tie tolerance. The result is an epsilon-subgradient; ascent
    /// methods use it to follow ridges of max-type gauges instead of
    /// zigzagging across them.
    pub fn gauge_subgrad_relaxed(&self, x: &[f64], tie: f64) -> Result<(f64, Vec<f64>)> {
        self.check_len(x)?;
        match &self.kind {
            VectorBallKind::Lp { p } => Ok(lp_subgrad(x, *p, tie)),
            VectorBallKind::Polygon { .. } => {
                let fns = self.edge_functionals()?;
                let vals: Vec<f64> = fns.iter().map(|a| a[0] * x[0] + a[1] * x[1]).collect();
                let best = vals.iter().fold(0.0f64, |m, &v| m.max(v));
                if best <= 0.0 {
                    return Ok((0.0, vec![0.0, 0.0]));
                }
                let mut arg = [0.0, 0.0];
                let mut count = 0.0;
                for (a, &v) in fns.iter().zip(&vals) {
                    if v >= best * (1.0 - tie) {
                        arg[0] += a[0];
                        arg[1] += a[1];
                        count += 1.0;
                    }
                }
                Ok((best, vec![arg[0] / count, arg[1] / count]))
            }
        }
    }

    /// Dual-norm value (support function of the ball).
    pub fn dual_gauge(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        Ok(match &self.kind {
            VectorBallKind::Lp { p } => lp_norm(y, p.conjugate()),
            VectorBallKind::Polygon { .. } => {
                let verts = self.ordered_vertices()?;
                verts.iter().map(|v| v[0] * y[0] + v[1] * y[1]).fold(0.0, f64::max)
            }
        })
    }

    /// Ball of the dual norm in closed form.
    pub fn dual_spec(&self) -> Result<VectorBallSpec> {
        match &self.kind {
            VectorBallKind::Lp { p } => Ok(VectorBallSpec::lp(self.dim, p.conjugate())),
            VectorBallKind::Polygon { .. } => {
                let fns = self.edge_functionals()?;
                let spec = VectorBallSpec { dim: 2, kind: VectorBallKind::Polygon { vertices: fns } };
                spec.validate()?;
                Ok(spec)
            }
        }
    }

    /// Extreme points of the unit ball.
    pub fn extreme_points(&self) -> Result<ExtremePoints> {
        self.validate()?;
        match &self.kind {
            VectorBallKind::Lp { p } => match p {
                PExp::Finite(p1) if *p1 == 1.0 => {
                    let mut verts = Vec::with_capacity(2 * self.dim);
                    for i in 0..self.dim {
                        for s in [1.0, -1.0] {
                            let mut v = vec![0.0; self.dim];
                            v[i] = s;
                            verts.push(v);
                        }
                    }
                    Ok(ExtremePoints::Vertices(verts))
                }
                PExp::Inf => {
                    let count = 1usize << self.dim;
                    let mut verts = Vec::with_capacity(count);
                    for bits in 0..count {
                        let v: Vec<f64> =
                            (0..self.dim).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
                        verts.push(v);
                    }
                    Ok(ExtremePoints::Vertices(verts))
                }
                _ => Ok(ExtremePoints::Sphere(self.clone())),
            },
            VectorBallKind::Polygon { .. } => {
                let verts = self.ordered_vertices()?;
                Ok(ExtremePoints::Vertices(verts.iter().map(|v| vec![v[0], v[1]]).collect()))
            }
        }
    }

    /// Extreme point of the ball maximizing c . b.
    pub fn argmax(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c)?;
        match self.extreme_points()? {
            ExtremePoints::Vertices(verts) => {
                let mut best = f64::NEG_INFINITY;
                let mut arg = vec![0.0; self.dim];
                for v in verts {
                    let val = linalg::vec_dot(c, &v);
                    if val > best {
                        best = val;
                        arg = v;
                    }
                }
                Ok(arg)
            }
            ExtremePoints::Sphere(_) => {
                let nc = linalg::vec_norm(c);
                if nc == 0.0 {
                    // Any unit vector attains the (zero) maximum.
                    let mut v = vec![0.0; self.dim];
                    v[0] = 1.0;
                    return Ok(v);
                }
                match &self.kind {
                    VectorBallKind::Lp { p: PExp::Finite(p) } => {
                        let q = p / (p - 1.0);
                        let nq = lp_norm(c, PExp::Finite(q));
                        Ok(c.iter().map(|ci| ci.signum() * (ci.abs() / nq).powf(q - 1.0)).collect())
                    }
                    _ => unreachable!("sphere case only arises for finite p > 1"),
                }
            }
        }
    }

    /// Whether b (assumed of gauge ~1) is an extreme point of the ball.
    pub fn is_extreme(&self, b: &[f64], tol: f64) -> Result<bool> {
        self.check_len(b)?;
        let g = self.gauge(b)?;
        if (g - 1.0).abs() > tol.max(1e-9) {
            return Ok(false);
        }
        match self.extreme_points()? {
            ExtremePoints::Sphere(_) => Ok(true),
            ExtremePoints::Vertices(verts) => Ok(verts.iter().any(|v| {
                v.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) <= tol.max(1e-8)
            })),
        }
    }

    /// Directions tangent to the face of the unit sphere containing b
    /// (gauge(b) = 1). Empty when b is a vertex or the ball is strictly
    /// convex.
    pub fn face_directions(&self, b: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(b)?;
        let tol = 1e-9;
        match &self.kind {
            VectorBallKind::Lp { p } => match p {
                PExp::Finite(p1) if *p1 == 1.0 => {
                    let active: Vec<usize> =
                        (0..self.dim).filter(|&i| b[i].abs() > tol).collect();
                    let mut dirs = Vec::new();
                    for ai in 0..active.len() {
                        for aj in (ai + 1)..active.len() {
                            let (i, j) = (active[ai], active[aj]);
                            let mut d = vec![0.0; self.dim];
                            d[i] = b[i].signum();
                            d[j] = -b[j].signum();
                            dirs.push(d);
                        }
                    }
                    Ok(dirs)
                }
                PExp::Inf => {
                    let mut dirs = Vec::new();
                    for i in 0..self.dim {
                        if b[i].abs() < 1.0 - tol {
                            let mut d = vec![0.0; self.dim];
                            d[i] = 1.0;
                            dirs.push(d);
                        }
                    }
                    Ok(dirs)
                }
                _ => Ok(Vec::new()),
            },
            VectorBallKind::Polygon { .. } => {
                let fns = self.edge_functionals()?;
                let verts = self.ordered_vertices()?;
                let active: Vec<usize> = (0..fns.len())
                    .filter(|&i| (fns[i][0] * b[0] + fns[i][1] * b[1] - 1.0).abs() <= 1e-7)
                    .collect();
                if active.len() != 1 {
                    // Vertex (two active edges) or interior: no face to move in.
                    return Ok(Vec::new());
                }
                let i = active[0];
                let v = verts[i];
                let w = verts[(i + 1) % verts.len()];
                Ok(vec![vec![w[0] - v[0], w[1] - v[1]]])
            }
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(CoreError::Shape {
                expected: format!("vector of dim {}", self.dim),
                got: format!("dim {}", x.len()),
            });
        }
        Ok(())
    }
}

fn order_by_angle(vertices: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let mut out = vertices.to_vec();
    for v in &out {
        if v[0] == 0.0 && v[1] == 0.0 {
            return Err(CoreError::InvalidSpec("polygon ball vertex at the origin".into()));
        }
    }
    out.sort_by(|a, b| a[1].atan2(a[0]).partial_cmp(&b[1].atan2(b[0])).unwrap());
    Ok(out)
}

fn lp_norm(x: &[f64], p: PExp) -> f64 {
    match p {
        PExp::Inf => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        PExp::Finite(p) if p == 1.0 => x.iter().map(|v| v.abs()).sum(),
        PExp::Finite(p) if p == 2.0 => linalg::vec_norm(x),
        PExp::Finite(p) => x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p),
    }
}

fn lp_subgrad(x: &[f64], p: PExp, tie: f64) -> (f64, Vec<f64>) {
    let g = lp_norm(x, p);
    if g == 0.0 {
        return (0.0, vec![0.0; x.len()]);
    }
    let sub = match p {
        PExp::Inf => {
            let cutoff = g * (1.0 - tie);
            let active: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() >= cutoff).collect();
            let w = 1.0 / active.len() as f64;
            let mut s = vec![0.0; x.len()];
            for i in active {
                s[i] = w * x[i].signum();
            }
            s
        }
        PExp::Finite(p) if p == 1.0 => x.iter().map(|v| v.signum()).collect(),
        PExp::Finite(p) if p == 2.0 => x.iter().map(|v| v / g).collect(),
        PExp::Finite(p) => x.iter().map(|v| v.signum() * (v.abs() / g).powf(p - 1.0)).collect(),
    };
    (g, sub)
}

/// A named matrix norm on n x d matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixNormSpec {
    pub n: usize,
    pub d: usize,
    #[serde(flatten)]
    pub kind: NormKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormKind {
    Frobenius,
    Schatten { p: PExp },
    KyFan { k: usize },
    /// Space ball acting on the rows, value ball combining the row norms.
    MixedRows { value_ball: VectorBallSpec, space_ball: VectorBallSpec },
    /// Value ball acting on the columns, space ball combining them.
    MixedCols { value_ball: VectorBallSpec, space_ball: VectorBallSpec },
}

impl MatrixNormSpec {
    pub fn frobenius(n: usize, d: usize) -> Self {
        MatrixNormSpec { n, d, kind: NormKind::Frobenius }
    }

    pub fn schatten(n: usize, d: usize, p: PExp) -> Self {
        MatrixNormSpec { n, d, kind: NormKind::Schatten { p } }
    }

    pub fn ky_fan(n: usize, d: usize, k: usize) -> Self {
        MatrixNormSpec { n, d, kind: NormKind::KyFan { k } }
    }

    pub fn mixed_rows(value_ball: VectorBallSpec, space_ball: VectorBallSpec) -> Self {
        MatrixNormSpec { n: value_ball.dim, d: space_ball.dim, kind: NormKind::MixedRows { value_ball, space_ball } }
    }

    pub fn mixed_cols(value_ball: VectorBallSpec, space_ball: VectorBallSpec) -> Self {
        MatrixNormSpec { n: value_ball.dim, d: space_ball.dim, kind: NormKind::MixedCols { value_ball, space_ball } }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_DIM || self.d == 0 || self.d > MAX_DIM {
            return Err(CoreError::InvalidSpec(format!("dimensions must be in 1..={MAX_DIM}")));
        }
        match &self.kind {
            NormKind::Frobenius => Ok(()),
            NormKind::Schatten { p } => p.validate(),
            NormKind::KyFan { k } => {
                if *k == 0 || *k > self.n.min(self.d) {
                    Err(CoreError::InvalidSpec(format!("ky fan k must be in 1..=min(n,d), got {k}")))
                } else {
                    Ok(())
                }
            }
            NormKind::MixedRows { value_ball, space_ball } | NormKind::MixedCols { value_ball, space_ball } => {
                value_ball.validate()?;
                space_ball.validate()?;
                if value_ball.dim != self.n {
                    return Err(CoreError::InvalidSpec(format!(
                        "value ball dim {} does not match n = {}",
                        value_ball.dim, self.n
                    )));
                }
                if space_ball.dim != self.d {
                    return Err(CoreError::InvalidSpec(format!(
                        "space ball dim {} does not match d = {}",
                        space_ball.dim, self.d
                    )));
                }
                Ok(())
            }
        }
    }

    fn check_shape(&self, a: &Mat) -> Result<()> {
        if a.rows() != self.n || a.cols() != self.d {
            return Err(CoreError::Shape {
                expected: format!("{}x{} matrix", self.n, self.d),
                got: format!("{}x{}", a.rows(), a.cols()),
            });
        }
        Ok(())
    }

    /// |A|_K.
    pub fn gauge(&self, a: &Mat) -> Result<f64> {
        self.check_shape(a)?;
        Ok(match &self.kind {
            NormKind::Frobenius => a.frobenius(),
            NormKind::Schatten { p } => match p {
                PExp::Finite(p2) if *p2 == 2.0 => a.frobenius(),
                PExp::Inf => linalg::singular_values(a).first().copied().unwrap_or(0.0),
                PExp::Finite(p1) if *p1 == 1.0 => linalg::singular_values(a).iter().sum(),
                PExp::Finite(pf) => {
                    linalg::singular_values(a).iter().map(|s| s.powf(*pf)).sum::<f64>().powf(1.0 / pf)
                }
            },
            NormKind::KyFan { k } => linalg::singular_values(a).iter().take(*k).sum(),
            NormKind::MixedRows { value_ball, space_ball } => {
                let row_norms: Result<Vec<f64>> = (0..self.n).map(|i| space_ball.gauge(a.row(i))).collect();
                value_ball.gauge(&row_norms?)?
            }
            NormKind::MixedCols { value_ball, space_ball } => {
                let col_norms: Result<Vec<f64>> = (0..self.d).map(|j| value_ball.gauge(&a.col(j))).collect();
                space_ball.gauge(&col_norms?)?
            }
        })
    }

    /// Gauge together with a matrix subgradient G satisfying
    /// tr(G^T A) = |A|_K and |G|_{K dual} <= 1.
    pub fn gauge_subgrad(&self, a: &Mat) -> Result<(f64, Mat)> {
        self.gauge_subgrad_relaxed(a, 0.0)
    }

    /// Epsilon-subgradient averaging over near-active pieces (see the
    /// vector-ball counterpart).
    pub fn gauge_subgrad_relaxed(&self, a: &Mat, tie: f64) -> Result<(f64, Mat)> {
        self.check_shape(a)?;
        match &self.kind {
            NormKind::Frobenius => {
                let g = a.frobenius();
                if g == 0.0 {
                    return Ok((0.0, Mat::zeros(self.n, self.d)));
                }
                Ok((g, a.scale(1.0 / g)))
            }
            NormKind::Schatten { p } => {
                let dec = linalg::svd(a);
                let (g, w) = lp_subgrad(&dec.sigma, *p, tie);
                Ok((g, compose_from_svd(&dec, &w, self.n, self.d)))
            }
            NormKind::KyFan { k } => {
                let dec = linalg::svd(a);
                let g: f64 = dec.sigma.iter().take(*k).sum();
                let r = dec.sigma.len();
                let k = *k;
                // Split occupancy of the k-th slot among singular values tied
                // with sigma_{k-1} at the boundary.
                let mut w = vec![0.0; r];
                if g > 0.0 {
                    let boundary = dec.sigma[k - 1];
                    let cutoff = boundary * (1.0 - tie) - tie * dec.sigma[0];
                    let tied: Vec<usize> =
                        (0..r).filter(|&i| dec.sigma[i] >= cutoff && dec.sigma[i] <= boundary * (1.0 + tie) + tie * dec.sigma[0] && dec.sigma[i] > 0.0).collect();
                    let above: Vec<usize> = (0..r).filter(|&i| dec.sigma[i] > boundary * (1.0 + tie) + tie * dec.sigma[0]).collect();
                    for &i in &above {
                        w[i] = 1.0;
                    }
                    let slots = k.saturating_sub(above.len()) as f64;
                    if !tied.is_empty() && slots > 0.0 {
                        let share = slots / tied.len() as f64;
                        for &i in &tied {
                            w[i] = share.min(1.0);
                        }
                    }
                }
                Ok((g, compose_from_svd(&dec, &w, self.n, self.d)))
            }
            NormKind::MixedRows { value_ball, space_ball } => {
                let mut row_norms = vec![0.0; self.n];
                let mut row_subs = Vec::with_capacity(self.n);
                for i in 0..self.n {
                    let (rn, rs) = space_ball.gauge_subgrad_relaxed(a.row(i), tie)?;
                    row_norms[i] = rn;
                    row_subs.push(rs);
                }
                let (g, outer) = value_ball.gauge_subgrad_relaxed(&row_norms, tie)?;
                let m = Mat::from_fn(self.n, self.d, |i, j| outer[i] * row_subs[i][j]);
                Ok((g, m))
            }
            NormKind::MixedCols { value_ball, space_ball } => {
                let mut col_norms = vec![0.0; self.d];
                let mut col_subs = Vec::with_capacity(self.d);
                for j in 0..self.d {
                    let (cn, cs) = value_ball.gauge_subgrad_relaxed(&a.col(j), tie)?;
                    col_norms[j] = cn;
                    col_subs.push(cs);
                }
                let (g, outer) = space_ball.gauge_subgrad_relaxed(&col_norms, tie)?;
                let m = Mat::from_fn(self.n, self.d, |i, j| outer[j] * col_subs[j][i]);
                Ok((g, m))
            }
        }
    }

    /// The dual norm's spec, when a closed form is coded. Ky Fan duals are
    /// deliberately left to the variational oracle.
    pub fn dual_spec(&self) -> Option<MatrixNormSpec> {
        match &self.kind {
            NormKind::Frobenius => Some(self.clone()),
            NormKind::Schatten { p } => Some(MatrixNormSpec::schatten(self.n, self.d, p.conjugate())),
            NormKind::KyFan { .. } => None,
            NormKind::MixedRows { value_ball, space_ball } => Some(MatrixNormSpec {
                n: self.n,
                d: self.d,
                kind: NormKind::MixedRows {
                    value_ball: value_ball.dual_spec().ok()?,
                    space_ball: space_ball.dual_spec().ok()?,
                },
            }),
            NormKind::MixedCols { value_ball, space_ball } => Some(MatrixNormSpec {
                n: self.n,
                d: self.d,
                kind: NormKind::MixedCols {
                    value_ball: value_ball.dual_spec().ok()?,
                    space_ball: space_ball.dual_spec().ok()?,
                },
            }),
        }
    }

    /// |A|_{K dual}: closed form where coded, otherwise the variational
    /// oracle with its default (seeded, deterministic) configuration.
    pub fn dual_gauge(&self, a: &Mat) -> Result<f64> {
        self.check_shape(a)?;
        match self.dual_spec() {
            Some(ds) => ds.gauge(a),
            None => Ok(self.dual_gauge_variational(a, &VariationalConfig::default())?.value),
        }
    }

    /// sup tr(A^T B) over gauge(B) <= 1 by concave surrogate ascent.
    /// Deterministic given the config seed.
    pub fn dual_gauge_variational(&self, a: &Mat, cfg: &VariationalConfig) -> Result<VariationalResult> {
        self.check_shape(a)?;
        self.validate()?;
        let spec = self.clone();
        // Relaxed ties let the ascent ride the ridges of max-type gauges.
        let mut gauge = move |b: &Mat| spec.gauge_subgrad_relaxed(b, 1e-7).expect("shape fixed by caller");
        Ok(variational_sup(self.n, self.d, &mut gauge, a, cfg, None))
    }

    /// Induced norm on normal directions: nu -> |e_1 tensor nu|_K.
    pub fn spatial_gauge(&self, nu: &[f64]) -> Result<f64> {
        let mut e1 = vec![0.0; self.n];
        e1[0] = 1.0;
        self.gauge(&Mat::outer(&e1, nu))
    }

    /// Ball in R^n whose gauge matches the value factor of rank-one jumps:
    /// |b tensor nu|_K = value_gauge(b) * spatial_gauge(nu) for the coded
    /// norm families (Euclidean for the orthogonally invariant ones).
    pub fn value_ball(&self) -> VectorBallSpec {
        match &self.kind {
            NormKind::MixedRows { value_ball, .. } | NormKind::MixedCols { value_ball, .. } => value_ball.clone(),
            _ => VectorBallSpec::l2(self.n),
        }
    }

    /// Whether the norm is additive across the value components (the value
    /// ball is l1), which makes the energy split into per-component terms.
    pub fn is_additive(&self) -> bool {
        match &self.kind {
            NormKind::MixedRows { value_ball, .. } => {
                matches!(value_ball.kind, VectorBallKind::Lp { p: PExp::Finite(p) } if p == 1.0)
            }
            _ => false,
        }
    }
}

fn compose_from_svd(dec: &linalg::Svd, weights: &[f64], n: usize, d: usize) -> Mat {
    Mat::from_fn(n, d, |i, j| {
        (0..dec.sigma.len()).map(|k| weights[k] * dec.u.get(i, k) * dec.v.get(j, k)).sum()
    })
}
