//! Total-variation and total-deformation energies: exact jump-formula
//! evaluation on polygonal fields and quadrature on grid fields.

use crate::error::{CoreError, Result};
use crate::field::{
    grid_gradient, symmetrized_gradient, EdgeSet, GridField, PolygonalField, SimpleSetSpec, Value,
};
use crate::linalg::Mat;
use crate::norm::{MatrixNormSpec, VectorBallSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyReport {
    pub value: f64,
    pub method: String,
    /// Per-edge (exact) or per-included-cell (grid) contributions, in the
    /// canonical edge/cell order. The value is their exact running sum.
    pub breakdown: Vec<f64>,
}

impl EnergyReport {
    fn from_parts(method: &str, breakdown: Vec<f64>) -> Self {
        let value = breakdown.iter().sum();
        EnergyReport { value, method: method.into(), breakdown }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], order 8.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_29),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_29),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Line quadrature setup for the deformation energy: order-8 Gauss-Legendre
/// per panel, optionally subdividing each edge into equal panels.
#[derive(Clone, Copy, Debug)]
pub struct EdgeQuadrature {
    pub panels: usize,
}

impl Default for EdgeQuadrature {
    fn default() -> Self {
        EdgeQuadrature { panels: 1 }
    }
}

fn constant_value<'v>(value: &'v Value, what: &str) -> Result<&'v [f64]> {
    match value {
        Value::Constant(v) => Ok(v),
        Value::Rigid { .. } => Err(CoreError::Unsupported(format!(
            "{what} requires constant region values (rigid values evaluate through the deformation energy)"
        ))),
    }
}

/// Exact total variation of a piecewise-constant field: the jump matrix
/// (b_left - b_right) tensor nu integrated over every interior interface.
pub fn tv_exact(u: &PolygonalField, spec: &MatrixNormSpec) -> Result<EnergyReport> {
    spec.validate()?;
    let d = u.dim();
    if spec.n != u.n || spec.d != d {
        return Err(CoreError::Shape {
            expected: format!("norm on {}x{}", u.n, d),
            got: format!("norm on {}x{}", spec.n, spec.d),
        });
    }
    let mut breakdown = Vec::new();
    match u.edges() {
        EdgeSet::OneD(jumps) => {
            for j in jumps {
                let l = constant_value(u.region_value(Some(j.left)), "tv_exact")?;
                let r = constant_value(u.region_value(Some(j.right)), "tv_exact")?;
                let db: Vec<f64> = r.iter().zip(l).map(|(a, b)| a - b).collect();
                breakdown.push(spec.gauge(&Mat::outer(&db, &[1.0]))?);
            }
        }
        EdgeSet::TwoD(edges) => {
            for e in edges {
                let l = constant_value(u.region_value(e.left), "tv_exact")?;
                let r = constant_value(u.region_value(e.right), "tv_exact")?;
                let db: Vec<f64> = l.iter().zip(r).map(|(a, b)| a - b).collect();
                breakdown.push(spec.gauge(&Mat::outer(&db, &e.normal))? * e.length);
            }
        }
    }
    Ok(EnergyReport::from_parts("exact-jump", breakdown))
}

/// Exact total deformation of a piecewise-rigid field: per interface, line
/// quadrature of |(w_left(x) - w_right(x)) sym-tensor nu|_K.
pub fn td_exact(u: &PolygonalField, spec: &MatrixNormSpec, quad: &EdgeQuadrature) -> Result<EnergyReport> {
    spec.validate()?;
    if u.n != 2 || u.dim() != 2 || spec.n != 2 || spec.d != 2 {
        return Err(CoreError::Unsupported("deformation energy needs n = d = 2".into()));
    }
    let edges = match u.edges() {
        EdgeSet::TwoD(e) => e,
        _ => return Err(CoreError::Unsupported("deformation energy needs a planar field".into())),
    };
    let mut breakdown = Vec::with_capacity(edges.len());
    for e in edges {
        let wl = u.region_value(e.left);
        let wr = u.region_value(e.right);
        let mut contribution = 0.0;
        let panels = quad.panels.max(1);
        for panel in 0..panels {
            let t0 = panel as f64 / panels as f64;
            let t1 = (panel + 1) as f64 / panels as f64;
            let half = 0.5 * (t1 - t0) * e.length;
            for (node, weight) in GL8 {
                let t = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * node;
                let x = [e.p[0] + t * (e.q[0] - e.p[0]), e.p[1] + t * (e.q[1] - e.p[1])];
                let dw = wl.diff_at(wr, &x);
                contribution += weight * half * spec.gauge(&Mat::sym_outer(&dw, &e.normal))?;
            }
        }
        breakdown.push(contribution);
    }
    Ok(EnergyReport::from_parts("exact-jump", breakdown))
}

/// Grid total variation: cell measure times the gauge of the forward
/// difference gradient, summed over cells with complete stencils.
pub fn tv_grid(u: &GridField, spec: &MatrixNormSpec) -> Result<EnergyReport> {
    spec.validate()?;
    if spec.n != u.n || spec.d != u.dim() {
        return Err(CoreError::Shape {
            expected: format!("norm on {}x{}", u.n, u.dim()),
            got: format!("norm on {}x{}", spec.n, spec.d),
        });
    }
    let grad = grid_gradient(u);
    let mut breakdown = Vec::with_capacity(grad.cells.len());
    for (_, g) in &grad.cells {
        breakdown.push(grad.cell_measure * spec.gauge(g)?);
    }
    Ok(EnergyReport::from_parts("grid-quadrature", breakdown))
}

/// Grid total deformation: as tv_grid with the symmetrized gradient.
pub fn td_grid(u: &GridField, spec: &MatrixNormSpec) -> Result<EnergyReport> {
    spec.validate()?;
    let grad = symmetrized_gradient(u)?;
    if spec.n != u.n || spec.d != u.dim() {
        return Err(CoreError::Shape {
            expected: format!("norm on {}x{}", u.n, u.dim()),
            got: format!("norm on {}x{}", spec.n, spec.d),
        });
    }
    let mut breakdown = Vec::with_capacity(grad.cells.len());
    for (_, g) in &grad.cells {
        breakdown.push(grad.cell_measure * spec.gauge(g)?);
    }
    Ok(EnergyReport::from_parts("grid-quadrature", breakdown))
}

/// Perimeter of a polygonal set weighted by a norm on the normals.
/// The Euclidean ball reproduces the relative perimeter in the domain.
pub fn anisotropic_perimeter(set: &SimpleSetSpec, normal_ball: &VectorBallSpec) -> Result<f64> {
    if normal_ball.dim != 2 {
        return Err(CoreError::Shape { expected: "normal ball of dim 2".into(), got: format!("dim {}", normal_ball.dim) });
    }
    let indicator = crate::field::make_indicator(set, &[1.0])?;
    let edges = match indicator.edges() {
        EdgeSet::TwoD(e) => e,
        _ => unreachable!(),
    };
    let mut total = 0.0;
    for e in edges {
        total += normal_ball.gauge(&e.normal)? * e.length;
    }
    Ok(total)
}

/// Perimeter weighted by the norm a matrix spec induces on normals,
/// nu -> |e_1 tensor nu|_K.
pub fn anisotropic_perimeter_induced(set: &SimpleSetSpec, spec: &MatrixNormSpec) -> Result<f64> {
    let indicator = crate::field::make_indicator(set, &[1.0])?;
    let edges = match indicator.edges() {
        EdgeSet::TwoD(e) => e,
        _ => unreachable!(),
    };
    let mut total = 0.0;
    for e in edges {
        total += spec.spatial_gauge(&e.normal)? * e.length;
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoareaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub levels: usize,
}

/// Compares the grid total variation of a scalar field against the level-set
/// reconstruction: sum over a midpoint grid of thresholds of the indicator
/// energies times the level spacing.
pub fn coarea_check(u: &GridField, spec: &MatrixNormSpec, levels: usize) -> Result<CoareaReport> {
    if u.n != 1 {
        return Err(CoreError::Unsupported("coarea check needs a scalar field".into()));
    }
    if levels == 0 {
        return Err(CoreError::InvalidSpec("need at least one level".into()));
    }
    let lhs = tv_grid(u, spec)?.value;
    let active: Vec<usize> = u.active_cells().collect();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &idx in &active {
        let v = u.value(idx)[0];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi - lo > 0.0) {
        return Err(CoreError::InvalidField("constant field: both sides of the coarea identity vanish".into()));
    }
    let dt = (hi - lo) / levels as f64;
    let mut rhs = 0.0;
    let mut indicator = u.clone();
    for k in 0..levels {
        let t = lo + (k as f64 + 0.5) * dt;
        for idx in 0..u.cells() {
            indicator.value_mut(idx)[0] = if u.value(idx)[0] > t { 1.0 } else { 0.0 };
        }
        rhs += tv_grid(&indicator, spec)?.value * dt;
    }
    let gap = if lhs > 0.0 { (lhs - rhs).abs() / lhs } else { (lhs - rhs).abs() };
    Ok(CoareaReport { lhs, rhs, gap, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_indicator, rect_poly, Domain, Region, RegionGeometry, SimpleSetSpec};
    use crate::norm::PExp;
    use approx::assert_abs_diff_eq;

    fn domain(b: f64) -> Domain {
        Domain::Rectangle { bounds: [[0.0, b], [0.0, b]] }
    }

    fn unit_square_in(b: f64) -> SimpleSetSpec {
        SimpleSetSpec::new(domain(b), vec![rect_poly(1.0, 2.0, 1.0, 2.0)]).unwrap()
    }

    #[test]
    fn frobenius_indicator_equals_perimeter() {
        let set = unit_square_in(3.0);
        let u = make_indicator(&set, &[1.0, 0.0]).unwrap();
        let spec = MatrixNormSpec::frobenius(2, 2);
        let report = tv_exact(&u, &spec).unwrap();
        assert_abs_diff_eq!(report.value, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.breakdown.iter().sum::<f64>(), report.value, epsilon = 1e-12);
    }

    #[test]
    fn mixed_rows_indicator_scales_with_value_l1_norm() {
        let set = unit_square_in(3.0);
        let u = make_indicator(&set, &[1.0, 1.0]).unwrap();
        let spec = MatrixNormSpec::mixed_rows(VectorBallSpec::l1(2), VectorBallSpec::l2(2));
        assert_abs_diff_eq!(tv_exact(&u, &spec).unwrap().value, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn one_dimensional_single_jump() {
        let dom = Domain::Interval { bounds: [0.0, 1.0] };
        let regions = vec![
            Region { geometry: RegionGeometry::Interval([0.0, 0.3]), value: Value::Constant(vec![0.0, 0.0]) },
            Region { geometry: RegionGeometry::Interval([0.3, 1.0]), value: Value::Constant(vec![0.6, 0.8]) },
        ];
        let u = crate::field::PolygonalField::new(dom, 2, Value::zero(2), regions).unwrap();
        let frob = MatrixNormSpec::frobenius(2, 1);
        assert_abs_diff_eq!(tv_exact(&u, &frob).unwrap().value, 1.0, epsilon = 1e-12);
        let l1 = MatrixNormSpec::mixed_rows(VectorBallSpec::l1(2), VectorBallSpec::l2(1));
        assert_abs_diff_eq!(tv_exact(&u, &l1).unwrap().value, 1.4, epsilon = 1e-12);
    }

    #[test]
    fn rigid_field_on_whole_domain_has_zero_deformation() {
        let dom = Domain::Rectangle { bounds: [[-1.0, 1.0], [-1.0, 1.0]] };
        let u = crate::field::PolygonalField::new(
            dom,
            2,
            Value::Rigid { skew: 1.3, shift: [0.2, -0.4] },
            vec![],
        )
        .unwrap();
        let spec = MatrixNormSpec::frobenius(2, 2);
        assert_abs_diff_eq!(td_exact(&u, &spec, &EdgeQuadrature::default()).unwrap().value, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn halfspace_displacement_deformation() {
        // e_2 on the lower half of (-1,1)^2: the interface is the segment
        // (-1,1) x {0} and the integrand is |e2 sym e2|_F = 1.
        let dom = Domain::Rectangle { bounds: [[-1.0, 1.0], [-1.0, 1.0]] };
        let regions = vec![Region {
            geometry: RegionGeometry::Polygon(rect_poly(-1.0, 1.0, -1.0, 0.0)),
            value: Value::Constant(vec![0.0, 1.0]),
        }];
        let u = crate::field::PolygonalField::new(dom, 2, Value::zero(2), regions).unwrap();
        let spec = MatrixNormSpec::frobenius(2, 2);
        assert_abs_diff_eq!(td_exact(&u, &spec, &EdgeQuadrature::default()).unwrap().value, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_tv_of_affine_field_is_exact_on_included_cells() {
        let m = 32usize;
        let u = GridField::from_fn(domain(1.0), 2, &[m, m], &[0.0, 0.0], |x| {
            vec![2.0 * x[0] - x[1], 0.5 * x[1]]
        })
        .unwrap();
        let spec = MatrixNormSpec::frobenius(2, 2);
        let report = tv_grid(&u, &spec).unwrap();
        let grad_norm = (4.0f64 + 1.0 + 0.25).sqrt();
        let frac = ((m - 1) * (m - 1)) as f64 / (m * m) as f64;
        assert_abs_diff_eq!(report.value, grad_norm * frac, epsilon = 1e-12);
    }

    #[test]
    fn anisotropic_perimeters_of_squares() {
        let set = unit_square_in(3.0);
        assert_abs_diff_eq!(anisotropic_perimeter(&set, &VectorBallSpec::l2(2)).unwrap(), 4.0, epsilon = 1e-12);
        // Axis-aligned normals have the same l1 and l2 norms.
        assert_abs_diff_eq!(anisotropic_perimeter(&set, &VectorBallSpec::l1(2)).unwrap(), 4.0, epsilon = 1e-12);
        // 45-degree square: every normal has |nu|_1 = sqrt(2).
        let c = 2.0;
        let r = 0.5 * 2.0f64.sqrt();
        let diamond = SimpleSetSpec::new(
            domain(4.0),
            vec![vec![[c + r, c], [c, c + r], [c - r, c], [c, c - r]]],
        )
        .unwrap();
        assert_abs_diff_eq!(
            anisotropic_perimeter(&diamond, &VectorBallSpec::l1(2)).unwrap(),
            4.0 * 2.0f64.sqrt(),
            epsilon = 1e-12
        );
        // Induced norm from the Frobenius spec is Euclidean.
        let frob = MatrixNormSpec::frobenius(2, 2);
        assert_abs_diff_eq!(anisotropic_perimeter_induced(&set, &frob).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn coarea_for_linear_ramp() {
        let m = 64usize;
        let u = GridField::from_fn(domain(1.0), 1, &[m, m], &[0.0, 0.0], |x| vec![x[0]]).unwrap();
        let spec = MatrixNormSpec::mixed_rows(VectorBallSpec::l1(1), VectorBallSpec::l1(2));
        let report = coarea_check(&u, &spec, 64).unwrap();
        assert!(report.gap <= 0.03, "gap {} too large", report.gap);
        let frob = MatrixNormSpec::frobenius(1, 2);
        let report2 = coarea_check(&u, &frob, 64).unwrap();
        assert!(report2.gap <= 0.03, "gap {} too large", report2.gap);
    }

    #[test]
    fn coarea_rejects_constant_fields() {
        let u = GridField::from_fn(domain(1.0), 1, &[8, 8], &[0.0, 0.0], |_| vec![1.0]).unwrap();
        let spec = MatrixNormSpec::frobenius(1, 2);
        assert!(coarea_check(&u, &spec, 16).is_err());
    }

    #[test]
    fn two_valued_coarea_single_band() {
        let m = 64usize;
        let u = GridField::from_fn(domain(1.0), 1, &[m, m], &[0.0, 0.0], |x| {
            vec![if x[0] > 0.5 { 2.0 } else { 0.0 }]
        })
        .unwrap();
        let spec = MatrixNormSpec::frobenius(1, 2);
        let report = coarea_check(&u, &spec, 32).unwrap();
        // Every level between 0 and 2 sees the same vertical interface.
        assert!(report.gap <= 1e-10, "gap {}", report.gap);
    }

    #[test]
    fn tv_convexity_on_a_common_partition() {
        let dom = Domain::Rectangle { bounds: [[0.0, 4.0], [0.0, 4.0]] };
        let mk = |b1: [f64; 2], b2: [f64; 2]| {
            crate::field::PolygonalField::new(
                dom.clone(),
                2,
                Value::zero(2),
                vec![
                    Region { geometry: RegionGeometry::Polygon(rect_poly(1.0, 2.0, 1.0, 2.0)), value: Value::Constant(b1.to_vec()) },
                    Region { geometry: RegionGeometry::Polygon(rect_poly(2.0, 3.0, 1.0, 2.0)), value: Value::Constant(b2.to_vec()) },
                ],
            )
            .unwrap()
        };
        let u = mk([1.0, 0.3], [0.0, 1.0]);
        let v = mk([-0.2, 0.8], [0.4, 0.4]);
        let spec = MatrixNormSpec::schatten(2, 2, PExp::Finite(1.0));
        for &lam in &[0.25, 0.5, 0.75] {
            let mix = u.scale(lam).add_scaled(1.0 - lam, &v).unwrap();
            let lhs = tv_exact(&mix, &spec).unwrap().value;
            let rhs = lam * tv_exact(&u, &spec).unwrap().value + (1.0 - lam) * tv_exact(&v, &spec).unwrap().value;
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn tv_invariant_under_constant_shift() {
        let set = unit_square_in(3.0);
        let u = make_indicator(&set, &[1.0, -0.5]).unwrap();
        let shifted = u
            .add_scaled(1.0, &crate::field::PolygonalField::new(
                u.domain.clone(),
                2,
                Value::Constant(vec![0.7, 0.2]),
                u.regions
                    .iter()
                    .map(|r| Region { geometry: r.geometry.clone(), value: Value::Constant(vec![0.7, 0.2]) })
                    .collect(),
            )
            .unwrap())
            .unwrap();
        let spec = MatrixNormSpec::frobenius(2, 2);
        assert_abs_diff_eq!(
            tv_exact(&u, &spec).unwrap().value,
            tv_exact(&shifted, &spec).unwrap().value,
            epsilon = 1e-12
        );
    }
}
