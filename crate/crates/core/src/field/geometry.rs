//! Planar polygon primitives: areas, moments, containment, and the snapped
//! segment keys used to match shared edges between partition regions.
//!
//! Partitions must be specified with exactly matching vertices (within the
//! snap tolerance); there is no polygon clipping here.

/// Snap tolerance for shared-edge matching, in coordinate units.
pub const SNAP_TOL: f64 = 1e-9;

pub type Pt = [f64; 2];

#[inline]
pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dist(a: Pt, b: Pt) -> f64 {
    sub(a, b)[0].hypot(sub(a, b)[1])
}

/// Integer key for a point at SNAP_TOL resolution.
#[inline]
pub fn point_key(p: Pt) -> (i64, i64) {
    ((p[0] / SNAP_TOL).round() as i64, (p[1] / SNAP_TOL).round() as i64)
}

/// Signed area (positive for counterclockwise orientation).
pub fn signed_area(poly: &[Pt]) -> f64 {
    let k = poly.len();
    let mut s = 0.0;
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

/// Exact polygon integrals of 1, x, y, x^2, xy, y^2 (shoelace formulas).
/// Assumes counterclockwise orientation.
#[derive(Clone, Copy, Debug, Default)]
pub struct PolygonMoments {
    pub area: f64,
    pub ix: f64,
    pub iy: f64,
    pub ixx: f64,
    pub ixy: f64,
    pub iyy: f64,
}

pub fn moments(poly: &[Pt]) -> PolygonMoments {
    let k = poly.len();
    let mut m = PolygonMoments::default();
    for i in 0..k {
        let [x0, y0] = poly[i];
        let [x1, y1] = poly[(i + 1) % k];
        let c = x0 * y1 - x1 * y0;
        m.area += c / 2.0;
        m.ix += (x0 + x1) * c / 6.0;
        m.iy += (y0 + y1) * c / 6.0;
        m.ixx += (x0 * x0 + x0 * x1 + x1 * x1) * c / 12.0;
        m.iyy += (y0 * y0 + y0 * y1 + y1 * y1) * c / 12.0;
        m.ixy += (x0 * y1 + 2.0 * x0 * y0 + 2.0 * x1 * y1 + x1 * y0) * c / 24.0;
    }
    m
}

/// Strict crossing-number containment test. Points within SNAP_TOL of an
/// edge are reported as not contained; resolve those with `distance`.
pub fn contains(poly: &[Pt], p: Pt) -> bool {
    if distance(poly, p) <= SNAP_TOL {
        return false;
    }
    let k = poly.len();
    let mut inside = false;
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let t = (p[1] - a[1]) / (b[1] - a[1]);
            let x = a[0] + t * (b[0] - a[0]);
            if x > p[0] {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from p to the polygon boundary.
pub fn distance(poly: &[Pt], p: Pt) -> f64 {
    let k = poly.len();
    let mut best = f64::INFINITY;
    for i in 0..k {
        best = best.min(segment_distance(poly[i], poly[(i + 1) % k], p));
    }
    best
}

pub fn segment_distance(a: Pt, b: Pt, p: Pt) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(a, p);
    }
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0);
    dist([a[0] + t * ab[0], a[1] + t * ab[1]], p)
}

/// Whether every vertex of `poly` lies on one line (degenerate boundary
/// direction set).
pub fn collinear_points(pts: &[Pt], tol: f64) -> bool {
    if pts.len() < 3 {
        return true;
    }
    let a = pts[0];
    let mut dir: Option<Pt> = None;
    for p in &pts[1..] {
        let v = sub(*p, a);
        let n = v[0].hypot(v[1]);
        if n < tol {
            continue;
        }
        match dir {
            None => dir = Some([v[0] / n, v[1] / n]),
            Some(d) => {
                if (d[0] * v[1] - d[1] * v[0]).abs() > tol * n {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const UNIT_SQUARE: [Pt; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn unit_square_moments() {
        let m = moments(&UNIT_SQUARE);
        assert_abs_diff_eq!(m.area, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.ix, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.iy, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(m.ixx, 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.iyy, 1.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.ixy, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn containment() {
        assert!(contains(&UNIT_SQUARE, [0.5, 0.5]));
        assert!(!contains(&UNIT_SQUARE, [1.5, 0.5]));
        // On-edge points are ambiguous by design.
        assert!(!contains(&UNIT_SQUARE, [1.0, 0.5]));
        assert!(distance(&UNIT_SQUARE, [1.0, 0.5]) <= SNAP_TOL);
    }

    #[test]
    fn collinearity() {
        assert!(collinear_points(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 1e-9));
        assert!(!collinear_points(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], 1e-9));
    }
}
