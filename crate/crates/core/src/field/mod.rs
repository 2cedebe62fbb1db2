//! Vector fields on intervals and planar domains: exact piecewise-constant /
//! piecewise-rigid polygonal fields and raster grid fields.

pub mod geometry;
mod ops;

pub use ops::{
    check_simplicity, grid_gradient, quotient_normalize, rasterize, rect_poly, symmetrized_gradient,
    GridGradient, QuotientMode,
};

use crate::error::{CoreError, Result};
use geometry::{moments, point_key, signed_area, PolygonMoments, Pt, SNAP_TOL};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Bounded computational domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Domain {
    Interval { bounds: [f64; 2] },
    Rectangle { bounds: [[f64; 2]; 2] },
    Disc { center: [f64; 2], radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            Domain::Interval { bounds } => bounds[1] - bounds[0],
            Domain::Rectangle { bounds } => (bounds[0][1] - bounds[0][0]) * (bounds[1][1] - bounds[1][0]),
            Domain::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain::Interval { bounds } => bounds[1] > bounds[0],
            Domain::Rectangle { bounds } => bounds[0][1] > bounds[0][0] && bounds[1][1] > bounds[1][0],
            Domain::Disc { radius, .. } => *radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(CoreError::InvalidField("domain has nonpositive measure".into()))
        }
    }

    /// Axis-aligned bounding box as [[x0, x1], [y0, y1]] (or [[a, b]] in 1d).
    pub fn bounding_box(&self) -> Vec<[f64; 2]> {
        match self {
            Domain::Interval { bounds } => vec![*bounds],
            Domain::Rectangle { bounds } => vec![bounds[0], bounds[1]],
            Domain::Disc { center, radius } => vec![
                [center[0] - radius, center[0] + radius],
                [center[1] - radius, center[1] + radius],
            ],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Interval { bounds } => x[0] > bounds[0] && x[0] < bounds[1],
            Domain::Rectangle { bounds } => {
                x[0] > bounds[0][0] && x[0] < bounds[0][1] && x[1] > bounds[1][0] && x[1] < bounds[1][1]
            }
            Domain::Disc { center, radius } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) < *radius
            }
        }
    }

    /// Whether the segment (a, b) lies on the domain boundary.
    fn segment_on_boundary(&self, a: Pt, b: Pt) -> bool {
        match self {
            Domain::Rectangle { bounds } => {
                let on = |p: Pt, axis: usize, v: f64| (p[axis] - v).abs() <= SNAP_TOL;
                (on(a, 0, bounds[0][0]) && on(b, 0, bounds[0][0]))
                    || (on(a, 0, bounds[0][1]) && on(b, 0, bounds[0][1]))
                    || (on(a, 1, bounds[1][0]) && on(b, 1, bounds[1][0]))
                    || (on(a, 1, bounds[1][1]) && on(b, 1, bounds[1][1]))
            }
            _ => false,
        }
    }

    /// Exact integrals of 1, x, y, x^2, xy, y^2 over the domain (2d only).
    fn moments(&self) -> Result<PolygonMoments> {
        match self {
            Domain::Rectangle { bounds } => {
                let [x0, x1] = bounds[0];
                let [y0, y1] = bounds[1];
                let (lx, ly) = (x1 - x0, y1 - y0);
                let ix1 = (x1 * x1 - x0 * x0) / 2.0;
                let iy1 = (y1 * y1 - y0 * y0) / 2.0;
                Ok(PolygonMoments {
                    area: lx * ly,
                    ix: ix1 * ly,
                    iy: iy1 * lx,
                    ixx: (x1.powi(3) - x0.powi(3)) / 3.0 * ly,
                    iyy: (y1.powi(3) - y0.powi(3)) / 3.0 * lx,
                    ixy: ix1 * iy1,
                })
            }
            _ => Err(CoreError::Unsupported("exact moments only for rectangle domains".into())),
        }
    }
}

/// Per-region value: a constant vector, or an infinitesimal rigid motion
/// x -> omega * (-x2, x1) + shift (only for n = d = 2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Value {
    Constant(Vec<f64>),
    Rigid { skew: f64, shift: [f64; 2] },
}

impl Value {
    pub fn zero(n: usize) -> Value {
        Value::Constant(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        match self {
            Value::Constant(v) => v.len(),
            Value::Rigid { .. } => 2,
        }
    }

    pub fn is_rigid(&self) -> bool {
        matches!(self, Value::Rigid { .. })
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Value::Constant(v) => v.clone(),
            Value::Rigid { skew, shift } => {
                vec![-skew * x[1] + shift[0], skew * x[0] + shift[1]]
            }
        }
    }

    /// Promote a constant 2-vector to a rigid motion with zero rotation.
    fn as_rigid(&self) -> Result<(f64, [f64; 2])> {
        match self {
            Value::Rigid { skew, shift } => Ok((*skew, *shift)),
            Value::Constant(v) if v.len() == 2 => Ok((0.0, [v[0], v[1]])),
            Value::Constant(_) => Err(CoreError::Unsupported("rigid promotion needs 2 components".into())),
        }
    }

    pub fn add_scaled(&self, t: f64, other: &Value) -> Result<Value> {
        match (self, other) {
            (Value::Constant(a), Value::Constant(b)) => {
                if a.len() != b.len() {
                    return Err(CoreError::Shape { expected: format!("{} components", a.len()), got: format!("{}", b.len()) });
                }
                Ok(Value::Constant(a.iter().zip(b).map(|(x, y)| x + t * y).collect()))
            }
            _ => {
                let (sa, ta) = self.as_rigid()?;
                let (sb, tb) = other.as_rigid()?;
                Ok(Value::Rigid { skew: sa + t * sb, shift: [ta[0] + t * tb[0], ta[1] + t * tb[1]] })
            }
        }
    }

    pub fn scale(&self, s: f64) -> Value {
        match self {
            Value::Constant(v) => Value::Constant(v.iter().map(|x| s * x).collect()),
            Value::Rigid { skew, shift } => Value::Rigid { skew: s * skew, shift: [s * shift[0], s * shift[1]] },
        }
    }

    /// Difference evaluated at a point (used on jump interfaces).
    pub fn diff_at(&self, other: &Value, x: &[f64]) -> Vec<f64> {
        let a = self.eval(x);
        let b = other.eval(x);
        a.iter().zip(&b).map(|(p, q)| p - q).collect()
    }

    pub fn max_abs_diff(&self, other: &Value) -> f64 {
        match (self, other) {
            (Value::Constant(a), Value::Constant(b)) => {
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
            _ => {
                let (sa, ta) = self.as_rigid().unwrap_or((f64::NAN, [f64::NAN; 2]));
                let (sb, tb) = other.as_rigid().unwrap_or((f64::NAN, [f64::NAN; 2]));
                (sa - sb).abs().max((ta[0] - tb[0]).abs()).max((ta[1] - tb[1]).abs())
            }
        }
    }
}

/// One region of a polygonal partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    #[serde(flatten)]
    pub geometry: RegionGeometry,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionGeometry {
    Interval([f64; 2]),
    Polygon(Vec<Pt>),
}

/// Interior interface between two regions of a planar partition. The normal
/// is a unit vector pointing from the right region into the left region.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Edge {
    pub p: Pt,
    pub q: Pt,
    pub length: f64,
    pub normal: Pt,
    /// Region index; None is the implicit background region.
    pub left: Option<usize>,
    pub right: Option<usize>,
}

/// Jump location of a 1d piecewise-constant field.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Jump1d {
    pub t: f64,
    /// Region on the low side.
    pub left: usize,
    /// Region on the high side.
    pub right: usize,
}

#[derive(Clone, Debug)]
pub enum EdgeSet {
    OneD(Vec<Jump1d>),
    TwoD(Vec<Edge>),
}

fn default_schema_polygonal() -> String {
    "tvk.field.polygonal/1".into()
}

#[derive(Serialize, Deserialize)]
struct RawPolygonalField {
    #[serde(default = "default_schema_polygonal")]
    schema: String,
    domain: Domain,
    n: usize,
    #[serde(default)]
    background: Option<Value>,
    regions: Vec<Region>,
}

/// Exact piecewise-constant or piecewise-rigid field over a polygonal
/// partition. Explicit regions may cover only part of the domain; the rest
/// is an implicit background region carrying `background`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawPolygonalField", into = "RawPolygonalField")]
pub struct PolygonalField {
    pub domain: Domain,
    pub n: usize,
    pub background: Value,
    pub regions: Vec<Region>,
    edges: EdgeSet,
}

impl From<PolygonalField> for RawPolygonalField {
    fn from(f: PolygonalField) -> Self {
        RawPolygonalField {
            schema: default_schema_polygonal(),
            domain: f.domain,
            n: f.n,
            background: Some(f.background),
            regions: f.regions,
        }
    }
}

impl TryFrom<RawPolygonalField> for PolygonalField {
    type Error = CoreError;
    fn try_from(raw: RawPolygonalField) -> Result<Self> {
        PolygonalField::new(
            raw.domain,
            raw.n,
            raw.background.unwrap_or(Value::Constant(vec![0.0; raw.n])),
            raw.regions,
        )
    }
}

impl PolygonalField {
    pub fn new(domain: Domain, n: usize, background: Value, regions: Vec<Region>) -> Result<Self> {
        domain.validate()?;
        if n == 0 || n > crate::linalg::MAX_DIM {
            return Err(CoreError::InvalidField("value dimension out of range".into()));
        }
        let d = domain.dim();
        let check_value = |v: &Value| -> Result<()> {
            match v {
                Value::Constant(c) if c.len() == n => Ok(()),
                Value::Rigid { .. } if n == 2 && d == 2 => Ok(()),
                Value::Rigid { .. } => Err(CoreError::InvalidField("rigid values require n = d = 2".into())),
                Value::Constant(c) => Err(CoreError::Shape {
                    expected: format!("{n} components"),
                    got: format!("{}", c.len()),
                }),
            }
        };
        check_value(&background)?;
        for r in &regions {
            check_value(&r.value)?;
        }

        let mut field = PolygonalField { domain, n, background, regions, edges: EdgeSet::TwoD(Vec::new()) };
        match d {
            1 => field.build_1d()?,
            2 => field.build_2d()?,
            _ => unreachable!(),
        }
        Ok(field)
    }

    fn build_1d(&mut self) -> Result<()> {
        let [a, b] = match self.domain {
            Domain::Interval { bounds } => bounds,
            _ => unreachable!(),
        };
        let mut spans: Vec<(usize, [f64; 2])> = Vec::new();
        for (i, r) in self.regions.iter().enumerate() {
            match &r.geometry {
                RegionGeometry::Interval(iv) => {
                    if iv[1] <= iv[0] {
                        return Err(CoreError::InvalidField("empty interval region".into()));
                    }
                    spans.push((i, *iv));
                }
                RegionGeometry::Polygon(_) => {
                    return Err(CoreError::InvalidField("polygon region in a 1d domain".into()))
                }
            }
        }
        spans.sort_by(|x, y| x.1[0].partial_cmp(&y.1[0]).unwrap());
        if spans.is_empty() {
            return Err(CoreError::InvalidField("1d field needs at least one interval".into()));
        }
        if (spans[0].1[0] - a).abs() > SNAP_TOL || (spans.last().unwrap().1[1] - b).abs() > SNAP_TOL {
            return Err(CoreError::InvalidField("intervals must tile the domain".into()));
        }
        let mut jumps = Vec::new();
        for w in spans.windows(2) {
            let (i, iv) = w[0];
            let (j, jv) = w[1];
            if (iv[1] - jv[0]).abs() > SNAP_TOL {
                return Err(CoreError::InvalidField("gap or overlap between interval regions".into()));
            }
            jumps.push(Jump1d { t: iv[1], left: i, right: j });
        }
        self.edges = EdgeSet::OneD(jumps);
        Ok(())
    }

    fn build_2d(&mut self) -> Result<()> {
        if matches!(self.domain, Domain::Disc { .. }) {
            return Err(CoreError::Unsupported(
                "polygonal fields live on interval or rectangle domains; disc domains are grid-masked".into(),
            ));
        }
        let mut total_area = 0.0;
        // Normalize orientation to counterclockwise.
        for r in self.regions.iter_mut() {
            match &mut r.geometry {
                RegionGeometry::Polygon(poly) => {
                    if poly.len() < 3 {
                        return Err(CoreError::InvalidField("polygon with fewer than 3 vertices".into()));
                    }
                    let area = signed_area(poly);
                    if area.abs() <= SNAP_TOL {
                        return Err(CoreError::InvalidField("degenerate polygon region".into()));
                    }
                    if area < 0.0 {
                        poly.reverse();
                    }
                    total_area += area.abs();
                }
                RegionGeometry::Interval(_) => {
                    return Err(CoreError::InvalidField("interval region in a 2d domain".into()))
                }
            }
        }
        let omega = self.domain.measure();
        if total_area > omega * (1.0 + 1e-9) + SNAP_TOL {
            return Err(CoreError::InvalidField(format!(
                "regions overflow the domain: total area {total_area} > |domain| {omega}"
            )));
        }

        // Match directed boundary segments by snapped endpoint keys.
        type Key = ((i64, i64), (i64, i64));
        let mut segs: HashMap<Key, Vec<(usize, Pt, Pt)>> = HashMap::new();
        for (ri, r) in self.regions.iter().enumerate() {
            let poly = match &r.geometry {
                RegionGeometry::Polygon(p) => p,
                _ => unreachable!(),
            };
            let k = poly.len();
            for i in 0..k {
                let a = poly[i];
                let b = poly[(i + 1) % k];
                segs.entry((point_key(a), point_key(b))).or_default().push((ri, a, b));
            }
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut visited: std::collections::HashSet<Key> = std::collections::HashSet::new();
        let mut keys: Vec<Key> = segs.keys().copied().collect();
        keys.sort();
        for key in keys {
            if visited.contains(&key) {
                continue;
            }
            let (ka, kb) = key;
            let owners = &segs[&key];
            if owners.len() > 1 {
                return Err(CoreError::InvalidField("two regions trace the same directed segment (overlap)".into()));
            }
            let (ri, a, b) = owners[0];
            let reverse = segs.get(&(kb, ka));
            visited.insert(key);
            let length = geometry::dist(a, b);
            if length <= SNAP_TOL {
                continue;
            }
            let t = [(b[0] - a[0]) / length, (b[1] - a[1]) / length];
            let normal = [-t[1], t[0]]; // points into the region tracing a -> b
            match reverse {
                Some(partners) => {
                    if partners.len() > 1 {
                        return Err(CoreError::InvalidField("more than two regions share a segment".into()));
                    }
                    visited.insert((kb, ka));
                    let (rj, _, _) = partners[0];
                    edges.push(Edge { p: a, q: b, length, normal, left: Some(ri), right: Some(rj) });
                }
                None => {
                    if self.domain.segment_on_boundary(a, b) {
                        continue;
                    }
                    edges.push(Edge { p: a, q: b, length, normal, left: Some(ri), right: None });
                }
            }
        }
        // Canonical deterministic order.
        edges.sort_by_key(|e| (point_key(e.p), point_key(e.q)));
        self.edges = EdgeSet::TwoD(edges);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn region_value(&self, idx: Option<usize>) -> &Value {
        match idx {
            Some(i) => &self.regions[i].value,
            None => &self.background,
        }
    }

    /// Area (or length) of a region.
    pub fn region_measure(&self, idx: usize) -> f64 {
        match &self.regions[idx].geometry {
            RegionGeometry::Interval(iv) => iv[1] - iv[0],
            RegionGeometry::Polygon(p) => signed_area(p).abs(),
        }
    }

    pub fn background_measure(&self) -> f64 {
        let explicit: f64 = (0..self.regions.len()).map(|i| self.region_measure(i)).sum();
        (self.domain.measure() - explicit).max(0.0)
    }

    /// True if any region (or the background) carries a rigid value.
    pub fn has_rigid_values(&self) -> bool {
        self.background.is_rigid() || self.regions.iter().any(|r| r.value.is_rigid())
    }

    /// Pointwise combination self + t * other on an identical partition.
    pub fn add_scaled(&self, t: f64, other: &PolygonalField) -> Result<PolygonalField> {
        if self.regions.len() != other.regions.len() || self.n != other.n {
            return Err(CoreError::InvalidField("fields live on different partitions".into()));
        }
        let mut out = self.clone();
        out.background = self.background.add_scaled(t, &other.background)?;
        for (r, o) in out.regions.iter_mut().zip(&other.regions) {
            r.value = r.value.add_scaled(t, &o.value)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> PolygonalField {
        let mut out = self.clone();
        out.background = out.background.scale(s);
        for r in out.regions.iter_mut() {
            r.value = r.value.scale(s);
        }
        out
    }

    /// Integral of the field over the domain (exact; affine values integrate
    /// through polygon moments).
    pub fn integral(&self) -> Result<Vec<f64>> {
        match self.dim() {
            1 => {
                let mut total = vec![0.0; self.n];
                for r in &self.regions {
                    let len = match &r.geometry {
                        RegionGeometry::Interval(iv) => iv[1] - iv[0],
                        _ => unreachable!(),
                    };
                    if let Value::Constant(v) = &r.value {
                        for (t, x) in total.iter_mut().zip(v) {
                            *t += len * x;
                        }
                    }
                }
                Ok(total)
            }
            _ => {
                let mut total = vec![0.0; self.n];
                let mut covered = PolygonMoments::default();
                for r in &self.regions {
                    let poly = match &r.geometry {
                        RegionGeometry::Polygon(p) => p,
                        _ => unreachable!(),
                    };
                    let m = moments(poly);
                    covered.area += m.area;
                    covered.ix += m.ix;
                    covered.iy += m.iy;
                    add_value_integral(&mut total, &r.value, &m);
                }
                // Background integral from the complement moments.
                let dm = self.domain.moments()?;
                let rest = PolygonMoments {
                    area: dm.area - covered.area,
                    ix: dm.ix - covered.ix,
                    iy: dm.iy - covered.iy,
                    ..Default::default()
                };
                add_value_integral(&mut total, &self.background, &rest);
                Ok(total)
            }
        }
    }

    /// Squared L2 norm of the field over the domain (exact for 2d fields via
    /// polygon moments, exact for 1d constants).
    pub fn l2_norm_sq(&self) -> Result<f64> {
        match self.dim() {
            1 => {
                let mut s = 0.0;
                for r in &self.regions {
                    if let (RegionGeometry::Interval(iv), Value::Constant(v)) = (&r.geometry, &r.value) {
                        s += (iv[1] - iv[0]) * v.iter().map(|x| x * x).sum::<f64>();
                    }
                }
                Ok(s)
            }
            _ => {
                let mut s = 0.0;
                let mut covered = PolygonMoments::default();
                for r in &self.regions {
                    let poly = match &r.geometry {
                        RegionGeometry::Polygon(p) => p,
                        _ => unreachable!(),
                    };
                    let m = moments(poly);
                    covered.area += m.area;
                    covered.ix += m.ix;
                    covered.iy += m.iy;
                    covered.ixx += m.ixx;
                    covered.ixy += m.ixy;
                    covered.iyy += m.iyy;
                    s += value_l2_sq(&r.value, &m);
                }
                let dm = self.domain.moments()?;
                let rest = PolygonMoments {
                    area: dm.area - covered.area,
                    ix: dm.ix - covered.ix,
                    iy: dm.iy - covered.iy,
                    ixx: dm.ixx - covered.ixx,
                    ixy: dm.ixy - covered.ixy,
                    iyy: dm.iyy - covered.iyy,
                };
                s += value_l2_sq(&self.background, &rest);
                Ok(s)
            }
        }
    }

    /// Largest pointwise difference between two fields on the same partition.
    pub fn max_value_diff(&self, other: &PolygonalField) -> f64 {
        let mut worst = self.background.max_abs_diff(&other.background);
        for (r, o) in self.regions.iter().zip(&other.regions) {
            worst = worst.max(r.value.max_abs_diff(&o.value));
        }
        worst
    }
}

fn add_value_integral(total: &mut [f64], value: &Value, m: &PolygonMoments) {
    match value {
        Value::Constant(v) => {
            for (t, x) in total.iter_mut().zip(v) {
                *t += m.area * x;
            }
        }
        Value::Rigid { skew, shift } => {
            total[0] += -skew * m.iy + shift[0] * m.area;
            total[1] += skew * m.ix + shift[1] * m.area;
        }
    }
}

fn value_l2_sq(value: &Value, m: &PolygonMoments) -> f64 {
    match value {
        Value::Constant(v) => m.area * v.iter().map(|x| x * x).sum::<f64>(),
        Value::Rigid { skew, shift } => {
            // |(-w y + s1, w x + s2)|^2 = w^2 (x^2 + y^2) + 2 w (s2 x - s1 y) + |s|^2
            skew * skew * (m.ixx + m.iyy)
                + 2.0 * skew * (shift[1] * m.ix - shift[0] * m.iy)
                + (shift[0] * shift[0] + shift[1] * shift[1]) * m.area
        }
    }
}

fn default_schema_grid() -> String {
    "tvk.field.grid/1".into()
}

#[derive(Serialize, Deserialize)]
struct RawGridField {
    #[serde(default = "default_schema_grid")]
    schema: String,
    domain: Domain,
    n: usize,
    shape: Vec<usize>,
    #[serde(default)]
    offset: Vec<f64>,
    values: Vec<f64>,
}

/// Raster sampling of a field on a uniform cell grid over the domain's
/// bounding box. Cells whose centers fall outside the domain are masked.
/// The 2d cell order is column-ordered: flat = i1 * m2 + i2.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawGridField", into = "RawGridField")]
pub struct GridField {
    pub domain: Domain,
    pub n: usize,
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub offset: Vec<f64>,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl From<GridField> for RawGridField {
    fn from(g: GridField) -> Self {
        RawGridField {
            schema: default_schema_grid(),
            domain: g.domain,
            n: g.n,
            shape: g.shape,
            offset: g.offset,
            values: g.values,
        }
    }
}

impl TryFrom<RawGridField> for GridField {
    type Error = CoreError;
    fn try_from(raw: RawGridField) -> Result<Self> {
        let offset = if raw.offset.is_empty() { vec![0.0; raw.domain.dim()] } else { raw.offset };
        let mut g = GridField::zeros(raw.domain, raw.n, &raw.shape, &offset)?;
        if raw.values.len() != g.values.len() {
            return Err(CoreError::Shape {
                expected: format!("{} values", g.values.len()),
                got: format!("{}", raw.values.len()),
            });
        }
        g.values = raw.values;
        if g.values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidField("grid values must be finite".into()));
        }
        Ok(g)
    }
}

impl GridField {
    pub fn zeros(domain: Domain, n: usize, shape: &[usize], offset: &[f64]) -> Result<Self> {
        domain.validate()?;
        let d = domain.dim();
        if shape.len() != d || shape.iter().any(|&m| m == 0) {
            return Err(CoreError::Shape { expected: format!("{d} positive grid sizes"), got: format!("{shape:?}") });
        }
        if offset.len() != d {
            return Err(CoreError::Shape { expected: format!("{d} offsets"), got: format!("{}", offset.len()) });
        }
        let bbox = domain.bounding_box();
        let spacing: Vec<f64> = bbox.iter().zip(shape).map(|(b, &m)| (b[1] - b[0]) / m as f64).collect();
        let cells: usize = shape.iter().product();
        let mut g = GridField {
            domain,
            n,
            shape: shape.to_vec(),
            spacing,
            offset: offset.to_vec(),
            values: vec![0.0; cells * n],
            mask: vec![false; cells],
        };
        for idx in 0..cells {
            let x = g.cell_center(idx);
            g.mask[idx] = g.domain.contains(&x);
        }
        Ok(g)
    }

    pub fn from_fn(
        domain: Domain,
        n: usize,
        shape: &[usize],
        offset: &[f64],
        mut f: impl FnMut(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let mut g = GridField::zeros(domain, n, shape, offset)?;
        for idx in 0..g.cells() {
            if g.mask[idx] {
                let x = g.cell_center(idx);
                let v = f(&x);
                g.values[idx * n..(idx + 1) * n].copy_from_slice(&v);
            }
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        match self.dim() {
            1 => coords[0],
            _ => coords[0] * self.shape[1] + coords[1],
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![idx],
            _ => vec![idx / self.shape[1], idx % self.shape[1]],
        }
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let bbox = self.domain.bounding_box();
        let c = self.coords(idx);
        (0..self.dim())
            .map(|ax| bbox[ax][0] + (c[ax] as f64 + 0.5) * self.spacing[ax] + self.offset[ax])
            .collect()
    }

    pub fn value(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.n..(idx + 1) * self.n]
    }

    pub fn value_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.n..(idx + 1) * self.n]
    }

    pub fn active_cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells()).filter(|&i| self.mask[i])
    }

    pub fn add_scaled(&self, t: f64, other: &GridField) -> Result<GridField> {
        if self.shape != other.shape || self.n != other.n {
            return Err(CoreError::Shape { expected: format!("{:?} x {}", self.shape, self.n), got: format!("{:?} x {}", other.shape, other.n) });
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += t * b;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> GridField {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= s;
        }
        out
    }

    /// L2 norm over active cells with the cell measure weight.
    pub fn l2_norm(&self) -> f64 {
        let w: f64 = self.spacing.iter().product();
        let mut s = 0.0;
        for idx in self.active_cells() {
            s += self.value(idx).iter().map(|x| x * x).sum::<f64>();
        }
        (w * s).sqrt()
    }

    pub fn max_value_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

fn default_schema_set() -> String {
    "tvk.simple-set/1".into()
}

/// A candidate simple set: a union of polygons inside a planar domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimpleSetSpec {
    #[serde(default = "default_schema_set")]
    pub schema: String,
    pub domain: Domain,
    pub polygons: Vec<Vec<Pt>>,
}

impl SimpleSetSpec {
    pub fn new(domain: Domain, polygons: Vec<Vec<Pt>>) -> Result<Self> {
        domain.validate()?;
        if domain.dim() != 2 {
            return Err(CoreError::Unsupported("simple sets are planar".into()));
        }
        let mut set = SimpleSetSpec { schema: default_schema_set(), domain, polygons };
        for poly in set.polygons.iter_mut() {
            if poly.len() < 3 || signed_area(poly).abs() <= SNAP_TOL {
                return Err(CoreError::InvalidField("degenerate polygon in set".into()));
            }
            if signed_area(poly) < 0.0 {
                poly.reverse();
            }
        }
        let area = set.measure();
        if area <= SNAP_TOL {
            return Err(CoreError::InvalidField("set has null measure".into()));
        }
        if area >= set.domain.measure() - SNAP_TOL {
            return Err(CoreError::InvalidField("set must leave positive measure uncovered".into()));
        }
        Ok(set)
    }

    pub fn measure(&self) -> f64 {
        self.polygons.iter().map(|p| signed_area(p).abs()).sum()
    }

    pub fn contains(&self, x: Pt) -> bool {
        self.polygons.iter().any(|p| geometry::contains(p, x))
    }
}

/// Either exact polygonal or raster representation; operations that accept
/// both take this.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnyField {
    Polygonal(PolygonalField),
    Grid(GridField),
}

impl AnyField {
    pub fn n(&self) -> usize {
        match self {
            AnyField::Polygonal(f) => f.n,
            AnyField::Grid(f) => f.n,
        }
    }

    pub fn domain(&self) -> &Domain {
        match self {
            AnyField::Polygonal(f) => &f.domain,
            AnyField::Grid(f) => &f.domain,
        }
    }

    pub fn add_scaled(&self, t: f64, other: &AnyField) -> Result<AnyField> {
        match (self, other) {
            (AnyField::Polygonal(a), AnyField::Polygonal(b)) => Ok(AnyField::Polygonal(a.add_scaled(t, b)?)),
            (AnyField::Grid(a), AnyField::Grid(b)) => Ok(AnyField::Grid(a.add_scaled(t, b)?)),
            _ => Err(CoreError::Unsupported("cannot combine polygonal and grid fields".into())),
        }
    }

    pub fn scale(&self, s: f64) -> AnyField {
        match self {
            AnyField::Polygonal(f) => AnyField::Polygonal(f.scale(s)),
            AnyField::Grid(f) => AnyField::Grid(f.scale(s)),
        }
    }

    pub fn max_value_diff(&self, other: &AnyField) -> f64 {
        match (self, other) {
            (AnyField::Polygonal(a), AnyField::Polygonal(b)) => a.max_value_diff(b),
            (AnyField::Grid(a), AnyField::Grid(b)) => a.max_value_diff(b),
            _ => f64::NAN,
        }
    }
}

/// Two-region field: value b on the set E, zero elsewhere.
pub fn make_indicator(set: &SimpleSetSpec, b: &[f64]) -> Result<PolygonalField> {
    let n = b.len();
    let regions: Vec<Region> = set
        .polygons
        .iter()
        .map(|p| Region { geometry: RegionGeometry::Polygon(p.clone()), value: Value::Constant(b.to_vec()) })
        .collect();
    PolygonalField::new(set.domain.clone(), n, Value::Constant(vec![0.0; n]), regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Pt> {
        vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
    }

    fn domain03() -> Domain {
        Domain::Rectangle { bounds: [[0.0, 3.0], [0.0, 3.0]] }
    }

    #[test]
    fn indicator_of_unit_square_has_four_interior_edges() {
        let set = SimpleSetSpec::new(domain03(), vec![rect(1.0, 2.0, 1.0, 2.0)]).unwrap();
        let f = make_indicator(&set, &[0.0, 1.0]).unwrap();
        match f.edges() {
            EdgeSet::TwoD(edges) => {
                assert_eq!(edges.len(), 4);
                let total: f64 = edges.iter().map(|e| e.length).sum();
                assert_abs_diff_eq!(total, 4.0, epsilon = 1e-12);
                for e in edges {
                    assert_abs_diff_eq!(e.normal[0].hypot(e.normal[1]), 1.0, epsilon = 1e-12);
                    assert_eq!(e.left, Some(0));
                    assert_eq!(e.right, None);
                }
            }
            _ => panic!("expected 2d edges"),
        }
    }

    #[test]
    fn half_domain_indicator_keeps_only_the_interface() {
        let dom = Domain::Rectangle { bounds: [[0.0, 1.0], [0.0, 1.0]] };
        let set = SimpleSetSpec::new(dom, vec![rect(0.0, 0.5, 0.0, 1.0)]).unwrap();
        let f = make_indicator(&set, &[1.0, 0.0]).unwrap();
        match f.edges() {
            EdgeSet::TwoD(edges) => {
                assert_eq!(edges.len(), 1);
                assert_abs_diff_eq!(edges[0].length, 1.0, epsilon = 1e-12);
                // Interface x = 0.5 with a horizontal unit normal.
                assert_abs_diff_eq!(edges[0].normal[0].abs(), 1.0, epsilon = 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn shared_edges_are_matched_between_regions() {
        let dom = Domain::Rectangle { bounds: [[0.0, 4.0], [0.0, 4.0]] };
        let regions = vec![
            Region { geometry: RegionGeometry::Polygon(rect(1.0, 2.0, 1.0, 2.0)), value: Value::Constant(vec![1.0, 0.0]) },
            Region { geometry: RegionGeometry::Polygon(rect(2.0, 3.0, 1.0, 2.0)), value: Value::Constant(vec![0.0, 1.0]) },
        ];
        let f = PolygonalField::new(dom, 2, Value::zero(2), regions).unwrap();
        match f.edges() {
            EdgeSet::TwoD(edges) => {
                let shared: Vec<_> = edges.iter().filter(|e| e.left.is_some() && e.right.is_some()).collect();
                assert_eq!(shared.len(), 1);
                assert_abs_diff_eq!(shared[0].length, 1.0, epsilon = 1e-12);
                let free_len: f64 = edges.iter().filter(|e| e.right.is_none()).map(|e| e.length).sum();
                assert_abs_diff_eq!(free_len, 6.0, epsilon = 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn null_set_rejected() {
        let bad = SimpleSetSpec::new(domain03(), vec![rect(1.0, 1.0, 1.0, 2.0)]);
        assert!(bad.is_err());
    }

    #[test]
    fn one_dimensional_partition_and_jumps() {
        let dom = Domain::Interval { bounds: [0.0, 1.0] };
        let regions = vec![
            Region { geometry: RegionGeometry::Interval([0.0, 0.4]), value: Value::Constant(vec![0.0]) },
            Region { geometry: RegionGeometry::Interval([0.4, 1.0]), value: Value::Constant(vec![2.0]) },
        ];
        let f = PolygonalField::new(dom, 1, Value::zero(1), regions).unwrap();
        match f.edges() {
            EdgeSet::OneD(jumps) => {
                assert_eq!(jumps.len(), 1);
                assert_abs_diff_eq!(jumps[0].t, 0.4, epsilon = 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn gapped_1d_partition_rejected() {
        let dom = Domain::Interval { bounds: [0.0, 1.0] };
        let regions = vec![
            Region { geometry: RegionGeometry::Interval([0.0, 0.4]), value: Value::Constant(vec![0.0]) },
            Region { geometry: RegionGeometry::Interval([0.5, 1.0]), value: Value::Constant(vec![2.0]) },
        ];
        assert!(PolygonalField::new(dom, 1, Value::zero(1), regions).is_err());
    }

    #[test]
    fn grid_field_mask_and_centers() {
        let dom = Domain::Disc { center: [0.0, 0.0], radius: 1.0 };
        let g = GridField::zeros(dom, 2, &[8, 8], &[0.0, 0.0]).unwrap();
        assert!(g.mask.iter().any(|&m| m));
        assert!(g.mask.iter().any(|&m| !m));
        // Corner cells are outside the disc.
        assert!(!g.mask[0]);
        let c = g.cell_center(0);
        assert_abs_diff_eq!(c[0], -1.0 + 0.125, epsilon = 1e-12);
    }

    #[test]
    fn field_json_round_trip() {
        let set = SimpleSetSpec::new(domain03(), vec![rect(1.0, 2.0, 1.0, 2.0)]).unwrap();
        let f = make_indicator(&set, &[1.0]).unwrap();
        let js = serde_json::to_string(&f).unwrap();
        let back: PolygonalField = serde_json::from_str(&js).unwrap();
        assert_eq!(back.regions.len(), 1);
        match back.edges() {
            EdgeSet::TwoD(e) => assert_eq!(e.len(), 4),
            _ => panic!(),
        }
        let any: AnyField = serde_json::from_str(&js).unwrap();
        assert!(matches!(any, AnyField::Polygonal(_)));
    }

    #[test]
    fn rigid_value_evaluation() {
        // skew = -1 gives the motion x -> (x2, -x1).
        let v = Value::Rigid { skew: -1.0, shift: [0.0, 0.0] };
        let out = v.eval(&[0.25, 0.5]);
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -0.25, epsilon = 1e-15);
    }

    #[test]
    fn exact_l2_and_integral_for_rigid_fields() {
        let dom = Domain::Rectangle { bounds: [[-1.0, 1.0], [-1.0, 1.0]] };
        let regions = vec![Region {
            geometry: RegionGeometry::Polygon(rect(-1.0, 1.0, -1.0, 1.0)),
            value: Value::Rigid { skew: 1.0, shift: [0.0, 0.0] },
        }];
        let f = PolygonalField::new(dom, 2, Value::zero(2), regions).unwrap();
        // integral of |x|^2 over the square is 8/3; the rotation field has
        // |v(x)| = |x|.
        assert_abs_diff_eq!(f.l2_norm_sq().unwrap(), 8.0 / 3.0, epsilon = 1e-12);
        let total = f.integral().unwrap();
        assert_abs_diff_eq!(total[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(total[1], 0.0, epsilon = 1e-12);
    }
}
