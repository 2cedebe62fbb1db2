//! Operators on fields: discrete gradients, quotient-space normalization,
//! rasterization, and the simplicity check for polygonal sets.

use super::geometry::{self, point_key, Pt};
use super::{AnyField, Domain, GridField, PolygonalField, RegionGeometry, SimpleSetSpec, Value};
use crate::error::{CoreError, Result};
use crate::linalg::Mat;
use std::collections::HashMap;

/// Forward-difference gradients. A cell carries a gradient only if it and
/// all of its forward neighbors are active; the last layer per axis is
/// dropped (no values outside the domain enter the differences).
#[derive(Clone, Debug)]
pub struct GridGradient {
    /// (flat cell index, n x d gradient matrix)
    pub cells: Vec<(usize, Mat)>,
    /// Cell measure (product of spacings).
    pub cell_measure: f64,
}

pub fn grid_gradient(u: &GridField) -> GridGradient {
    let d = u.dim();
    let n = u.n;
    let mut cells = Vec::new();
    let strides: Vec<usize> = match d {
        1 => vec![1],
        _ => vec![u.shape[1], 1],
    };
    for idx in 0..u.cells() {
        if !u.mask[idx] {
            continue;
        }
        let c = u.coords(idx);
        let mut ok = true;
        for ax in 0..d {
            if c[ax] + 1 >= u.shape[ax] {
                ok = false;
                break;
            }
            if !u.mask[idx + strides[ax]] {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let here = u.value(idx);
        let mut g = Mat::zeros(n, d);
        for ax in 0..d {
            let fwd = u.value(idx + strides[ax]);
            for comp in 0..n {
                g.set(comp, ax, (fwd[comp] - here[comp]) / u.spacing[ax]);
            }
        }
        cells.push((idx, g));
    }
    GridGradient { cells, cell_measure: u.spacing.iter().product() }
}

/// (grad + grad^T) / 2 per cell; requires n = d.
pub fn symmetrized_gradient(u: &GridField) -> Result<GridGradient> {
    if u.n != u.dim() {
        return Err(CoreError::Unsupported(format!(
            "symmetrized gradient needs n = d, got n = {}, d = {}",
            u.n,
            u.dim()
        )));
    }
    let mut g = grid_gradient(u);
    for (_, m) in g.cells.iter_mut() {
        *m = m.symmetrize();
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuotientMode {
    /// Subtract the mean vector.
    Constants,
    /// Subtract the L2 projection onto infinitesimal rigid motions
    /// (translations plus the rotation field); n = d = 2 only.
    Rigid,
}

/// Remove the quotient-kernel component of a field. Idempotent and linear;
/// kernel elements map to zero.
pub fn quotient_normalize(u: &AnyField, mode: QuotientMode) -> Result<AnyField> {
    match u {
        AnyField::Grid(g) => Ok(AnyField::Grid(quotient_normalize_grid(g, mode)?)),
        AnyField::Polygonal(p) => Ok(AnyField::Polygonal(quotient_normalize_polygonal(p, mode)?)),
    }
}

fn quotient_normalize_grid(u: &GridField, mode: QuotientMode) -> Result<GridField> {
    let active: Vec<usize> = u.active_cells().collect();
    if active.is_empty() {
        return Err(CoreError::InvalidField("no active cells".into()));
    }
    match mode {
        QuotientMode::Constants => {
            let mut mean = vec![0.0; u.n];
            for &idx in &active {
                for (m, v) in mean.iter_mut().zip(u.value(idx)) {
                    *m += v;
                }
            }
            for m in mean.iter_mut() {
                *m /= active.len() as f64;
            }
            let mut out = u.clone();
            for &idx in &active {
                for (v, m) in out.value_mut(idx).iter_mut().zip(&mean) {
                    *v -= m;
                }
            }
            Ok(out)
        }
        QuotientMode::Rigid => {
            if u.n != 2 || u.dim() != 2 {
                return Err(CoreError::Unsupported("rigid quotient needs n = d = 2".into()));
            }
            // Least squares onto span{e1, e2, rot} with rot(x) = (-x2, x1).
            let mut g = [[0.0f64; 3]; 3];
            let mut rhs = [0.0f64; 3];
            for &idx in &active {
                let x = u.cell_center(idx);
                let v = u.value(idx);
                let basis = [[1.0, 0.0], [0.0, 1.0], [-x[1], x[0]]];
                for i in 0..3 {
                    for j in 0..3 {
                        g[i][j] += basis[i][0] * basis[j][0] + basis[i][1] * basis[j][1];
                    }
                    rhs[i] += basis[i][0] * v[0] + basis[i][1] * v[1];
                }
            }
            let coef = solve3(g, rhs)?;
            let mut out = u.clone();
            for &idx in &active {
                let x = u.cell_center(idx);
                let vv = out.value_mut(idx);
                vv[0] -= coef[0] - coef[2] * x[1];
                vv[1] -= coef[1] + coef[2] * x[0];
            }
            Ok(out)
        }
    }
}

fn quotient_normalize_polygonal(u: &PolygonalField, mode: QuotientMode) -> Result<PolygonalField> {
    match mode {
        QuotientMode::Constants => {
            let total = u.integral()?;
            let omega = u.domain.measure();
            let mean: Vec<f64> = total.iter().map(|t| t / omega).collect();
            let shift = Value::Constant(mean);
            let mut out = u.clone();
            out.background = out.background.add_scaled(-1.0, &shift)?;
            for r in out.regions.iter_mut() {
                r.value = r.value.add_scaled(-1.0, &shift)?;
            }
            Ok(out)
        }
        QuotientMode::Rigid => {
            if u.n != 2 || u.dim() != 2 {
                return Err(CoreError::Unsupported("rigid quotient needs n = d = 2".into()));
            }
            // Gram matrix of {e1, e2, rot} over the whole domain, exact.
            let dm = match &u.domain {
                Domain::Rectangle { .. } => domain_moments(&u.domain)?,
                _ => return Err(CoreError::Unsupported("rigid quotient needs a rectangle domain".into())),
            };
            let g = [
                [dm.area, 0.0, -dm.iy],
                [0.0, dm.area, dm.ix],
                [-dm.iy, dm.ix, dm.ixx + dm.iyy],
            ];
            // rhs_i = integral of u . basis_i, exact via region moments.
            let mut rhs = [0.0f64; 3];
            let mut covered = geometry::PolygonMoments::default();
            for r in &u.regions {
                let poly = match &r.geometry {
                    RegionGeometry::Polygon(p) => p,
                    _ => unreachable!(),
                };
                let m = geometry::moments(poly);
                accumulate_rigid_rhs(&mut rhs, &r.value, &m);
                covered = add_moments(covered, m);
            }
            let rest = sub_moments(dm, covered);
            accumulate_rigid_rhs(&mut rhs, &u.background, &rest);
            let coef = solve3(g, rhs)?;
            let proj = Value::Rigid { skew: coef[2], shift: [coef[0], coef[1]] };
            let mut out = u.clone();
            out.background = out.background.add_scaled(-1.0, &proj)?;
            for r in out.regions.iter_mut() {
                r.value = r.value.add_scaled(-1.0, &proj)?;
            }
            Ok(out)
        }
    }
}

fn domain_moments(domain: &Domain) -> Result<geometry::PolygonMoments> {
    match domain {
        Domain::Rectangle { bounds } => {
            let poly = vec![
                [bounds[0][0], bounds[1][0]],
                [bounds[0][1], bounds[1][0]],
                [bounds[0][1], bounds[1][1]],
                [bounds[0][0], bounds[1][1]],
            ];
            Ok(geometry::moments(&poly))
        }
        _ => Err(CoreError::Unsupported("moments only for rectangles".into())),
    }
}

fn add_moments(a: geometry::PolygonMoments, b: geometry::PolygonMoments) -> geometry::PolygonMoments {
    geometry::PolygonMoments {
        area: a.area + b.area,
        ix: a.ix + b.ix,
        iy: a.iy + b.iy,
        ixx: a.ixx + b.ixx,
        ixy: a.ixy + b.ixy,
        iyy: a.iyy + b.iyy,
    }
}

fn sub_moments(a: geometry::PolygonMoments, b: geometry::PolygonMoments) -> geometry::PolygonMoments {
    geometry::PolygonMoments {
        area: a.area - b.area,
        ix: a.ix - b.ix,
        iy: a.iy - b.iy,
        ixx: a.ixx - b.ixx,
        ixy: a.ixy - b.ixy,
        iyy: a.iyy - b.iyy,
    }
}

/// integral over the region of u . e1, u . e2, u . rot for an affine value.
fn accumulate_rigid_rhs(rhs: &mut [f64; 3], value: &Value, m: &geometry::PolygonMoments) {
    match value {
        Value::Constant(v) => {
            rhs[0] += v[0] * m.area;
            rhs[1] += v[1] * m.area;
            rhs[2] += -v[0] * m.iy + v[1] * m.ix;
        }
        Value::Rigid { skew, shift } => {
            // u = (-w y + s1, w x + s2)
            rhs[0] += -skew * m.iy + shift[0] * m.area;
            rhs[1] += skew * m.ix + shift[1] * m.area;
            // u . rot = w (x^2 + y^2) - s1 y + s2 x
            rhs[2] += skew * (m.ixx + m.iyy) - shift[0] * m.iy + shift[1] * m.ix;
        }
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-14 {
            return Err(CoreError::Numerical("singular projection system".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..3 {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Ok([b[0] / a[0][0], b[1] / a[1][1], b[2] / a[2][2]])
}

/// Cell-center sampling of a polygonal field. Cells straddling an edge take
/// the value of the region containing the center; centers that sit exactly
/// on an interface resolve to the nearest region.
pub fn rasterize(p: &PolygonalField, shape: &[usize]) -> Result<GridField> {
    let n = p.n;
    let field = p.clone();
    GridField::from_fn(p.domain.clone(), n, shape, &vec![0.0; p.domain.dim()], move |x| {
        sample_polygonal(&field, x)
    })
}

fn sample_polygonal(p: &PolygonalField, x: &[f64]) -> Vec<f64> {
    match p.dim() {
        1 => {
            for r in &p.regions {
                if let RegionGeometry::Interval(iv) = &r.geometry {
                    if x[0] >= iv[0] && x[0] < iv[1] {
                        return r.value.eval(x);
                    }
                }
            }
            p.background.eval(x)
        }
        _ => {
            let pt = [x[0], x[1]];
            for r in &p.regions {
                if let RegionGeometry::Polygon(poly) = &r.geometry {
                    if geometry::contains(poly, pt) {
                        return r.value.eval(x);
                    }
                }
            }
            // Near-interface fallback: nearest region within the snap band.
            let mut best = (f64::INFINITY, None::<usize>);
            for (i, r) in p.regions.iter().enumerate() {
                if let RegionGeometry::Polygon(poly) = &r.geometry {
                    let dist = geometry::distance(poly, pt);
                    if dist < best.0 {
                        best = (dist, Some(i));
                    }
                }
            }
            match best {
                (d, Some(i)) if d <= geometry::SNAP_TOL => p.regions[i].value.eval(x),
                _ => p.background.eval(x),
            }
        }
    }
}

/// Indecomposability of a union-of-polygons set and of its complement.
///
/// The set itself is checked exactly through the adjacency graph of its
/// polygons over shared positive-length edges (vertices must match, as for
/// partitions). The complement is probed by flood fill on a raster of the
/// domain at `resolution` cells per axis; connectivity thinner than a cell
/// is not resolved.
pub fn check_simplicity(set: &SimpleSetSpec, resolution: usize) -> Result<(bool, bool)> {
    // Component count of the polygon adjacency graph.
    let k = set.polygons.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    let mut seg_owner: HashMap<((i64, i64), (i64, i64)), usize> = HashMap::new();
    for (pi, poly) in set.polygons.iter().enumerate() {
        let m = poly.len();
        for i in 0..m {
            let a = poly[i];
            let b = poly[(i + 1) % m];
            seg_owner.insert((point_key(a), point_key(b)), pi);
        }
    }
    for ((ka, kb), &pi) in &seg_owner {
        if let Some(&pj) = seg_owner.get(&(*kb, *ka)) {
            let (ri, rj) = (find(&mut parent, pi), find(&mut parent, pj));
            if ri != rj {
                parent[ri] = rj;
            }
        }
    }
    let roots: std::collections::HashSet<usize> = (0..k).map(|i| find(&mut parent, i)).collect();
    let set_connected = roots.len() <= 1;

    // Complement components by flood fill over cell centers.
    let grid = GridField::zeros(set.domain.clone(), 1, &[resolution, resolution], &[0.0, 0.0])?;
    let cells = grid.cells();
    let mut label = vec![-1i32; cells];
    let outside = |idx: usize| -> bool {
        if !grid.mask[idx] {
            return false;
        }
        let x = grid.cell_center(idx);
        !set.contains([x[0], x[1]])
    };
    let mut components = 0;
    let m2 = grid.shape[1];
    for start in 0..cells {
        if label[start] >= 0 || !outside(start) {
            continue;
        }
        components += 1;
        if components > 1 {
            break;
        }
        let mut stack = vec![start];
        label[start] = components;
        while let Some(idx) = stack.pop() {
            let c = grid.coords(idx);
            let mut neighbors = Vec::with_capacity(4);
            if c[0] > 0 {
                neighbors.push(idx - m2);
            }
            if c[0] + 1 < grid.shape[0] {
                neighbors.push(idx + m2);
            }
            if c[1] > 0 {
                neighbors.push(idx - 1);
            }
            if c[1] + 1 < grid.shape[1] {
                neighbors.push(idx + 1);
            }
            for nb in neighbors {
                if label[nb] < 0 && outside(nb) {
                    label[nb] = components;
                    stack.push(nb);
                }
            }
        }
    }
    let complement_connected = components <= 1;
    Ok((set_connected, complement_connected))
}

/// Convenience constructor for rectangle polygons.
pub fn rect_poly(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Pt> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_indicator, Region};
    use approx::assert_abs_diff_eq;

    fn domain01() -> Domain {
        Domain::Rectangle { bounds: [[0.0, 1.0], [0.0, 1.0]] }
    }

    #[test]
    fn gradient_exact_on_affine_fields() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![-0.5, 0.25]]).unwrap();
        let u = GridField::from_fn(domain01(), 2, &[16, 16], &[0.0, 0.0], |x| {
            vec![m.get(0, 0) * x[0] + m.get(0, 1) * x[1], m.get(1, 0) * x[0] + m.get(1, 1) * x[1]]
        })
        .unwrap();
        let g = grid_gradient(&u);
        assert_eq!(g.cells.len(), 15 * 15);
        for (_, gm) in &g.cells {
            assert!(gm.add_scaled(-1.0, &m).max_abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let u = GridField::from_fn(domain01(), 1, &[8, 8], &[0.0, 0.0], |_| vec![3.0]).unwrap();
        let g = grid_gradient(&u);
        for (_, gm) in &g.cells {
            assert_eq!(gm.max_abs(), 0.0);
        }
    }

    #[test]
    fn symmetrized_gradient_kills_rigid_motions() {
        let dom = Domain::Rectangle { bounds: [[-1.0, 1.0], [-1.0, 1.0]] };
        let u = GridField::from_fn(dom, 2, &[32, 32], &[0.0, 0.0], |x| {
            vec![-0.7 * x[1] + 0.3, 0.7 * x[0] - 0.1]
        })
        .unwrap();
        let g = symmetrized_gradient(&u).unwrap();
        for (_, gm) in &g.cells {
            assert!(gm.max_abs() < 1e-12);
        }
    }

    #[test]
    fn identity_field_symmetrized_gradient_is_identity() {
        let u = GridField::from_fn(domain01(), 2, &[8, 8], &[0.0, 0.0], |x| vec![x[0], x[1]]).unwrap();
        let g = symmetrized_gradient(&u).unwrap();
        for (_, gm) in &g.cells {
            assert!(gm.add_scaled(-1.0, &Mat::identity(2)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn quotient_constants_is_idempotent_and_kills_constants() {
        let u = GridField::from_fn(domain01(), 2, &[8, 8], &[0.0, 0.0], |_| vec![2.0, -1.0]).unwrap();
        let out = quotient_normalize(&AnyField::Grid(u), QuotientMode::Constants).unwrap();
        if let AnyField::Grid(g) = &out {
            assert!(g.values.iter().all(|v| v.abs() < 1e-12));
        }
        let twice = quotient_normalize(&out, QuotientMode::Constants).unwrap();
        assert!(out.max_value_diff(&twice) < 1e-12);
    }

    #[test]
    fn quotient_rigid_kills_rigid_motions_exactly() {
        let dom = Domain::Rectangle { bounds: [[-1.0, 1.0], [-1.0, 1.0]] };
        let regions = vec![Region {
            geometry: RegionGeometry::Polygon(rect_poly(-1.0, 1.0, -1.0, 0.0)),
            value: Value::Rigid { skew: 0.5, shift: [1.0, -2.0] },
        }, Region {
            geometry: RegionGeometry::Polygon(rect_poly(-1.0, 1.0, 0.0, 1.0)),
            value: Value::Rigid { skew: 0.5, shift: [1.0, -2.0] },
        }];
        let u = PolygonalField::new(dom, 2, Value::Rigid { skew: 0.5, shift: [1.0, -2.0] }, regions).unwrap();
        let out = quotient_normalize(&AnyField::Polygonal(u), QuotientMode::Rigid).unwrap();
        if let AnyField::Polygonal(p) = out {
            for r in &p.regions {
                assert!(r.value.max_abs_diff(&Value::Rigid { skew: 0.0, shift: [0.0, 0.0] }) < 1e-12);
            }
        } else {
            panic!();
        }
    }

    #[test]
    fn rasterize_left_half_column_ordered() {
        let set = SimpleSetSpec::new(domain01(), vec![rect_poly(0.0, 0.5, 0.0, 1.0)]).unwrap();
        let f = make_indicator(&set, &[1.0, 0.0]).unwrap();
        let g = rasterize(&f, &[2, 2]).unwrap();
        // flat = i1 * m2 + i2: cells (0,0), (0,1) are the left column.
        assert_abs_diff_eq!(g.value(0)[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.value(1)[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.value(2)[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.value(3)[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn simplicity_of_basic_fixtures() {
        let dom = Domain::Rectangle { bounds: [[0.0, 4.0], [0.0, 4.0]] };
        // A single interior square: simple.
        let square = SimpleSetSpec::new(dom.clone(), vec![rect_poly(1.0, 2.0, 1.0, 2.0)]).unwrap();
        assert_eq!(check_simplicity(&square, 128).unwrap(), (true, true));
        // Two disjoint squares: not indecomposable.
        let two = SimpleSetSpec::new(
            dom.clone(),
            vec![rect_poly(0.5, 1.5, 0.5, 1.5), rect_poly(2.5, 3.5, 2.5, 3.5)],
        )
        .unwrap();
        assert_eq!(check_simplicity(&two, 128).unwrap(), (false, true));
        // A frame whose hole disconnects the complement. Shared edges carry
        // matching vertices, so the bottom and top bars are split where the
        // side bars attach.
        let bottom = vec![[1.0, 1.0], [3.0, 1.0], [3.0, 1.5], [2.5, 1.5], [1.5, 1.5], [1.0, 1.5]];
        let top = vec![[1.0, 2.5], [1.5, 2.5], [2.5, 2.5], [3.0, 2.5], [3.0, 3.0], [1.0, 3.0]];
        let left = rect_poly(1.0, 1.5, 1.5, 2.5);
        let right = rect_poly(2.5, 3.0, 1.5, 2.5);
        let frame = SimpleSetSpec::new(dom, vec![bottom, top, left, right]).unwrap();
        assert_eq!(check_simplicity(&frame, 128).unwrap(), (true, false));
    }

    #[test]
    fn rasterize_three_region_fixture_recovers_regions() {
        let dom = Domain::Rectangle { bounds: [[0.0, 3.0], [0.0, 1.0]] };
        let regions = vec![
            Region { geometry: RegionGeometry::Polygon(rect_poly(0.0, 1.0, 0.0, 1.0)), value: Value::Constant(vec![1.0]) },
            Region { geometry: RegionGeometry::Polygon(rect_poly(1.0, 2.0, 0.0, 1.0)), value: Value::Constant(vec![2.0]) },
            Region { geometry: RegionGeometry::Polygon(rect_poly(2.0, 3.0, 0.0, 1.0)), value: Value::Constant(vec![3.0]) },
        ];
        let f = PolygonalField::new(dom, 1, Value::zero(1), regions).unwrap();
        let g = rasterize(&f, &[9, 3]).unwrap();
        for idx in 0..g.cells() {
            let x = g.cell_center(idx);
            let expect = 1.0 + x[0].floor().min(2.0);
            assert_abs_diff_eq!(g.value(idx)[0], expect, epsilon = 1e-12);
        }
    }
}
