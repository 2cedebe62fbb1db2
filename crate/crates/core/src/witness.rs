//! Numerical extremality certifier: searches for a nontrivial midpoint
//! decomposition u0 = (u0 + t z)/2 + (u0 - t z)/2 with both halves inside
//! the unit energy ball. A decomposable verdict ships a re-verifiable
//! certificate; "no decomposition found" is evidence at a tolerance, never
//! a proof.

use crate::atoms::{Atom, EnergyKind};
use crate::energy::{td_exact, td_grid, tv_exact, tv_grid, EdgeQuadrature};
use crate::error::{CoreError, Result};
use crate::field::geometry::Pt;
use crate::field::{
    quotient_normalize, AnyField, Domain, EdgeSet, PolygonalField, QuotientMode, RegionGeometry,
    Value,
};
use crate::linalg;
use crate::norm::MatrixNormSpec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Energy evaluation used throughout the search. The quadrature must match
/// the rule that normalized the atom: the searched functional is convex in
/// the step and equals one exactly at step zero, so feasibility questions
/// stay well posed. (A mismatched rule shifts the baseline by its quadrature
/// error and fakes feasible steps of that size.)
#[derive(Clone, Debug)]
pub struct EnergyEvaluator {
    pub spec: MatrixNormSpec,
    pub kind: EnergyKind,
    pub quad: EdgeQuadrature,
}

impl EnergyEvaluator {
    pub fn new(spec: MatrixNormSpec, kind: EnergyKind) -> Self {
        EnergyEvaluator { spec, kind, quad: EdgeQuadrature::default() }
    }

    pub fn energy(&self, field: &AnyField) -> Result<f64> {
        Ok(match (field, self.kind) {
            (AnyField::Polygonal(f), EnergyKind::Tv) => tv_exact(f, &self.spec)?.value,
            (AnyField::Polygonal(f), EnergyKind::Td) => td_exact(f, &self.spec, &self.quad)?.value,
            (AnyField::Grid(f), EnergyKind::Tv) => tv_grid(f, &self.spec)?.value,
            (AnyField::Grid(f), EnergyKind::Td) => td_grid(f, &self.spec)?.value,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessConfig {
    /// Total directions searched; structured classes come first, random
    /// directions pad up to this count.
    pub directions: usize,
    pub seed: u64,
    /// A step beyond this threshold counts as a decomposition. For grid
    /// fields the effective threshold is max(step_threshold, 5h).
    pub step_threshold: f64,
    /// Feasibility slack: energies up to 1 + tol count as inside the ball.
    pub feasibility_tol: f64,
    /// Bisection iterations for the maximal step.
    pub bisection_iters: usize,
    /// Worker threads for direction evaluation. Results are identical for
    /// any thread count: evaluations are pure and the certificate always
    /// selects the smallest catalog index among successes.
    pub threads: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig {
            directions: 500,
            seed: 7,
            step_threshold: 1e-4,
            feasibility_tol: 1e-13,
            bisection_iters: 30,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Direction {
    pub class: &'static str,
    pub field: AnyField,
}

#[derive(Clone, Debug)]
pub struct DirectionCatalog {
    pub directions: Vec<Direction>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub count: usize,
    pub max_t_star: f64,
}

fn default_schema_cert() -> String {
    "tvk.certificate/1".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionCertificate {
    #[serde(default = "default_schema_cert")]
    pub schema: String,
    pub spec: MatrixNormSpec,
    pub energy: EnergyKind,
    pub quad_panels: usize,
    pub feasibility_tol: f64,
    #[serde(flatten)]
    pub outcome: CertOutcome,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum CertOutcome {
    Decomposable {
        direction_class: String,
        direction_index: usize,
        t_star: f64,
        direction: AnyField,
        v: AnyField,
        w: AnyField,
        energy_v: f64,
        energy_w: f64,
    },
    NoDecompositionFound {
        directions: usize,
        seed: u64,
        max_t_star: f64,
        max_class: String,
        step_threshold: f64,
        per_class: Vec<ClassReport>,
        note: String,
    },
}

/// Largest t with max(E(u0 + t z), E(u0 - t z)) <= 1 + tol, by doubling and
/// bisection. Soundness rests on the convexity of the energy: the feasible
/// steps form an interval around 0.
pub fn max_step(
    u0: &AnyField,
    z: &AnyField,
    eval: &EnergyEvaluator,
    tol: f64,
    bisection_iters: usize,
) -> Result<f64> {
    let e0 = eval.energy(u0)?;
    if (e0 - 1.0).abs() > 1e-6 {
        return Err(CoreError::InvalidField(format!(
            "max_step needs a unit-energy base field, got energy {e0}"
        )));
    }
    let feasible = |t: f64| -> Result<bool> {
        let plus = eval.energy(&u0.add_scaled(t, z)?)?;
        if plus > 1.0 + tol {
            return Ok(false);
        }
        let minus = eval.energy(&u0.add_scaled(-t, z)?)?;
        Ok(minus <= 1.0 + tol)
    };
    let mut lo = 0.0f64;
    let mut hi = 1e-8;
    if feasible(hi)? {
        loop {
            lo = hi;
            hi *= 2.0;
            if !feasible(hi)? {
                break;
            }
            if hi > 1e9 {
                return Err(CoreError::Numerical(
                    "direction stays feasible at enormous steps; the evaluator does not see it".into(),
                ));
            }
        }
    }
    for _ in 0..bisection_iters {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn quotient_mode(kind: EnergyKind) -> QuotientMode {
    match kind {
        EnergyKind::Tv => QuotientMode::Constants,
        EnergyKind::Td => QuotientMode::Rigid,
    }
}

/// Project out the energy kernel and scale to unit L2 norm; None when the
/// direction is (numerically) a pure kernel element.
fn finish_direction(field: AnyField, kind: EnergyKind) -> Option<AnyField> {
    let projected = quotient_normalize(&field, quotient_mode(kind)).ok()?;
    let norm = match &projected {
        AnyField::Polygonal(f) => f.l2_norm_sq().ok()?.sqrt(),
        AnyField::Grid(f) => f.l2_norm(),
    };
    if norm < 1e-10 {
        return None;
    }
    Some(projected.scale(1.0 / norm))
}

/// The base partition with all values replaced by zero except the listed
/// assignments.
fn partition_direction(
    base: &PolygonalField,
    assignments: &[(Option<usize>, Value)],
) -> Result<PolygonalField> {
    let zero = if base.has_rigid_values() && base.n == 2 {
        Value::Rigid { skew: 0.0, shift: [0.0, 0.0] }
    } else {
        Value::zero(base.n)
    };
    let mut regions = base.regions.clone();
    let mut background = zero.clone();
    for r in regions.iter_mut() {
        r.value = zero.clone();
    }
    for (idx, v) in assignments {
        match idx {
            Some(i) => regions[*i].value = v.clone(),
            None => background = v.clone(),
        }
    }
    PolygonalField::new(base.domain.clone(), base.n, background, regions)
}

/// Interface energy mass adjacent to each region, used to balance
/// rescale-split directions.
fn region_energy_shares(base: &PolygonalField, eval: &EnergyEvaluator) -> Result<Vec<f64>> {
    let mut shares = vec![0.0; base.regions.len()];
    if let EdgeSet::TwoD(edges) = base.edges() {
        for e in edges {
            let l = base.region_value(e.left);
            let r = base.region_value(e.right);
            let mid = [0.5 * (e.p[0] + e.q[0]), 0.5 * (e.p[1] + e.q[1])];
            let db = l.diff_at(r, &mid);
            let jump = match eval.kind {
                EnergyKind::Tv => eval.spec.gauge(&linalg::Mat::outer(&db, &e.normal))? * e.length,
                EnergyKind::Td => eval.spec.gauge(&linalg::Mat::sym_outer(&db, &e.normal))? * e.length,
            };
            if let Some(i) = e.left {
                shares[i] += jump;
            }
            if let Some(i) = e.right {
                shares[i] += jump;
            }
        }
    }
    Ok(shares)
}

/// Interface lines eligible for glide directions: lines carrying interior
/// edges such that no region polygon straddles the extended line. Restricted
/// to fields whose explicit regions tile the domain, since the implicit
/// background cannot be split. Returns (rotation center, unit tangent); the
/// center is the length-weighted centroid of the line's interface edges,
/// which makes the affine jump factor integrate to zero along the interface.
fn glide_lines(base: &PolygonalField) -> Vec<(Pt, Pt)> {
    let edges = match base.edges() {
        EdgeSet::TwoD(e) => e,
        _ => return Vec::new(),
    };
    if base.background_measure() > 1e-9 * base.domain.measure() {
        return Vec::new();
    }
    // (anchor point, tangent, weighted midpoint accumulator, total length)
    let mut lines: Vec<(Pt, Pt, [f64; 2], f64)> = Vec::new();
    'edges: for e in edges {
        let t = [(e.q[0] - e.p[0]) / e.length, (e.q[1] - e.p[1]) / e.length];
        let mid = [0.5 * (e.p[0] + e.q[0]), 0.5 * (e.p[1] + e.q[1])];
        for (p0, t0, acc, total) in lines.iter_mut() {
            let parallel = (t[0] * t0[1] - t[1] * t0[0]).abs() < 1e-12;
            if parallel {
                let d = [e.p[0] - p0[0], e.p[1] - p0[1]];
                if (d[0] * t0[1] - d[1] * t0[0]).abs() < 1e-9 {
                    acc[0] += mid[0] * e.length;
                    acc[1] += mid[1] * e.length;
                    *total += e.length;
                    continue 'edges;
                }
            }
        }
        let n = [-t[1], t[0]];
        for r in &base.regions {
            if let RegionGeometry::Polygon(poly) = &r.geometry {
                let mut pos = false;
                let mut neg = false;
                for v in poly {
                    let s = (v[0] - e.p[0]) * n[0] + (v[1] - e.p[1]) * n[1];
                    if s > 1e-9 {
                        pos = true;
                    }
                    if s < -1e-9 {
                        neg = true;
                    }
                }
                if pos && neg {
                    continue 'edges;
                }
            }
        }
        lines.push((e.p, t, [mid[0] * e.length, mid[1] * e.length], e.length));
    }
    lines
        .into_iter()
        .map(|(_, t, acc, total)| ([acc[0] / total, acc[1] / total], t))
        .collect()
}

fn random_rigid(rng: &mut impl Rng) -> Value {
    Value::Rigid {
        skew: linalg::gaussian(rng),
        shift: [linalg::gaussian(rng), linalg::gaussian(rng)],
    }
}

/// Build the search catalog for a unit-energy field. Structured classes
/// follow the fixed-partition reduction (a decomposition of a piecewise
/// field is piecewise over the same jump set, so per-region value
/// perturbations span the candidate face), glide directions cover flat
/// interface lines, profile and trigonometric fields probe grid atoms.
pub fn build_catalog(u0: &AnyField, eval: &EnergyEvaluator, cfg: &WitnessConfig) -> Result<DirectionCatalog> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut directions: Vec<Direction> = Vec::new();
    let push = |class: &'static str, field: AnyField, directions: &mut Vec<Direction>| {
        if let Some(f) = finish_direction(field, eval.kind) {
            directions.push(Direction { class, field: f });
        }
    };

    match u0 {
        AnyField::Polygonal(base) => {
            let rigid_mode = eval.kind == EnergyKind::Td;
            if rigid_mode {
                for (p0, t) in glide_lines(base) {
                    let nrm = [-t[1], t[0]];
                    let mut assignments = Vec::new();
                    for (i, r) in base.regions.iter().enumerate() {
                        if let RegionGeometry::Polygon(poly) = &r.geometry {
                            let side = poly
                                .iter()
                                .map(|v| (v[0] - p0[0]) * nrm[0] + (v[1] - p0[1]) * nrm[1])
                                .fold(0.0f64, |acc, s| if s.abs() > acc.abs() { s } else { acc });
                            let sign = if side >= 0.0 { 1.0 } else { -1.0 };
                            // Rotation field about p0, flipped across the line.
                            assignments.push((
                                Some(i),
                                Value::Rigid { skew: sign, shift: [sign * p0[1], -sign * p0[0]] },
                            ));
                        }
                    }
                    if let Ok(f) = partition_direction(base, &assignments) {
                        push("interface-glide", AnyField::Polygonal(f), &mut directions);
                    }
                }
            }

            // Face directions: move one region's value within the face of the
            // value ball it sits on.
            if !rigid_mode {
                let vb = eval.spec.value_ball();
                for (i, r) in base.regions.iter().enumerate() {
                    if let Value::Constant(v) = &r.value {
                        let g = vb.gauge(v)?;
                        if g < 1e-12 {
                            continue;
                        }
                        let unit: Vec<f64> = v.iter().map(|x| x / g).collect();
                        for fdir in vb.face_directions(&unit)? {
                            for s in [1.0, -1.0] {
                                let scaled: Vec<f64> = fdir.iter().map(|x| s * x).collect();
                                if let Ok(f) =
                                    partition_direction(base, &[(Some(i), Value::Constant(scaled))])
                                {
                                    push("face", AnyField::Polygonal(f), &mut directions);
                                }
                            }
                        }
                    }
                }
            }

            // Rescale splits between pairs of regions, balanced by their
            // interface energy shares.
            let shares = region_energy_shares(base, eval)?;
            for i in 0..base.regions.len() {
                for j in (i + 1)..base.regions.len() {
                    if shares[i] <= 1e-12 || shares[j] <= 1e-12 {
                        continue;
                    }
                    let vi = base.regions[i].value.scale(1.0 / shares[i]);
                    let vj = base.regions[j].value.scale(-1.0 / shares[j]);
                    if let Ok(f) = partition_direction(base, &[(Some(i), vi), (Some(j), vj)]) {
                        push("rescale-split", AnyField::Polygonal(f), &mut directions);
                    }
                }
            }

            // Per-region basis bumps (background included).
            let mut slots: Vec<Option<usize>> = (0..base.regions.len()).map(Some).collect();
            slots.push(None);
            for slot in &slots {
                if rigid_mode {
                    let basis = [
                        Value::Rigid { skew: 0.0, shift: [1.0, 0.0] },
                        Value::Rigid { skew: 0.0, shift: [0.0, 1.0] },
                        Value::Rigid { skew: 1.0, shift: [0.0, 0.0] },
                    ];
                    for b in basis {
                        if let Ok(f) = partition_direction(base, &[(*slot, b)]) {
                            push("rigid-bump", AnyField::Polygonal(f), &mut directions);
                        }
                    }
                } else {
                    for c in 0..base.n {
                        let mut v = vec![0.0; base.n];
                        v[c] = 1.0;
                        if let Ok(f) = partition_direction(base, &[(*slot, Value::Constant(v))]) {
                            push("value-bump", AnyField::Polygonal(f), &mut directions);
                        }
                    }
                }
            }

            // Random per-region values up to the budget.
            while directions.len() < cfg.directions {
                let assignments: Vec<(Option<usize>, Value)> = slots
                    .iter()
                    .map(|slot| {
                        let v = if rigid_mode {
                            random_rigid(&mut rng)
                        } else {
                            Value::Constant(linalg::gaussian_vec(base.n, &mut rng))
                        };
                        (*slot, v)
                    })
                    .collect();
                match partition_direction(base, &assignments) {
                    Ok(f) => push("random", AnyField::Polygonal(f), &mut directions),
                    Err(_) => break,
                }
            }
        }
        AnyField::Grid(base) => {
            let center = match &base.domain {
                Domain::Disc { center, .. } => *center,
                _ => [0.0, 0.0],
            };
            // Radial profiles times the polar frame fields.
            let profiles: Vec<Box<dyn Fn(f64) -> f64>> = vec![
                Box::new(|_r| 1.0),
                Box::new(|r| r),
                Box::new(|r| r * r),
                Box::new(|r| 1.0 - r),
                Box::new(|r| if r < 0.4 { 1.0 } else { 0.0 }),
                Box::new(|r| if (0.4..0.7).contains(&r) { 1.0 } else { 0.0 }),
                Box::new(|r| if r >= 0.7 { 1.0 } else { 0.0 }),
            ];
            for profile in &profiles {
                for radial in [true, false] {
                    let mut f = base.clone();
                    for idx in 0..f.cells() {
                        let x = f.cell_center(idx);
                        let masked = f.mask[idx];
                        let dx = [x[0] - center[0], x[1] - center[1]];
                        let r = dx[0].hypot(dx[1]);
                        let dir = if radial { [dx[0] / r, dx[1] / r] } else { [-dx[1] / r, dx[0] / r] };
                        let amp = if masked { profile(r) } else { 0.0 };
                        let v = f.value_mut(idx);
                        v[0] = amp * dir[0];
                        v[1] = amp * dir[1];
                    }
                    push("profile", AnyField::Grid(f), &mut directions);
                }
            }
            // Smooth random fields from a low-order trigonometric dictionary.
            let budget_smooth = cfg.directions.saturating_sub(directions.len()) * 3 / 4;
            for _ in 0..budget_smooth {
                let mut coeffs = Vec::new();
                for _ in 0..base.n {
                    let modes: Vec<(f64, f64, f64, f64, f64)> = (0..4)
                        .map(|_| {
                            (
                                linalg::gaussian(&mut rng),
                                rng.gen_range(0..3) as f64,
                                rng.gen_range(0..3) as f64,
                                rng.gen::<f64>() * std::f64::consts::TAU,
                                rng.gen::<f64>() * std::f64::consts::TAU,
                            )
                        })
                        .collect();
                    coeffs.push(modes);
                }
                let mut f = base.clone();
                for idx in 0..f.cells() {
                    let x = f.cell_center(idx);
                    let masked = f.mask[idx];
                    let v = f.value_mut(idx);
                    for (comp, modes) in coeffs.iter().enumerate() {
                        v[comp] = 0.0;
                        if masked {
                            for (a, kx, ky, px, py) in modes {
                                v[comp] += a
                                    * (std::f64::consts::PI * kx * x[0] + px).sin()
                                    * (std::f64::consts::PI * ky * x[1] + py).sin();
                            }
                        }
                    }
                }
                push("fourier", AnyField::Grid(f), &mut directions);
            }
            while directions.len() < cfg.directions {
                let mut f = base.clone();
                for idx in 0..f.cells() {
                    let masked = f.mask[idx];
                    let v = f.value_mut(idx);
                    for c in 0..v.len() {
                        v[c] = if masked { linalg::gaussian(&mut rng) } else { 0.0 };
                    }
                }
                push("random-cell", AnyField::Grid(f), &mut directions);
            }
        }
    }

    if cfg.directions > 0 {
        directions.truncate(cfg.directions);
    }
    Ok(DirectionCatalog { directions, seed: cfg.seed })
}

/// Effective decision threshold: grid atoms are only extremal up to the
/// discretization scale.
pub fn effective_threshold(u0: &AnyField, cfg: &WitnessConfig) -> f64 {
    match u0 {
        AnyField::Grid(g) => {
            let h = g.spacing.iter().cloned().fold(0.0f64, f64::max);
            cfg.step_threshold.max(5.0 * h)
        }
        AnyField::Polygonal(_) => cfg.step_threshold,
    }
}

/// Search the catalog for a midpoint decomposition of a unit-energy atom.
/// Directions are scanned in catalog order and the first success wins, so
/// the result is deterministic and monotone under catalog growth.
pub fn certify(atom: &Atom, cfg: &WitnessConfig) -> Result<DecompositionCertificate> {
    let eval = EnergyEvaluator::new(atom.spec.clone(), atom.energy);
    let tol = match atom.field {
        AnyField::Grid(_) => cfg.feasibility_tol.max(1e-12),
        AnyField::Polygonal(_) => cfg.feasibility_tol,
    };
    let catalog = build_catalog(&atom.field, &eval, cfg)?;
    if catalog.directions.is_empty() {
        return Err(CoreError::InvalidField("empty direction catalog".into()));
    }
    let threshold = effective_threshold(&atom.field, cfg);

    // Steps are evaluated block by block (in parallel when configured);
    // scanning results in catalog order keeps early exit deterministic.
    let steps = evaluate_steps(&atom.field, &catalog, &eval, tol, cfg)?;

    let mut per_class: Vec<ClassReport> = Vec::new();
    let mut max_t = 0.0f64;
    let mut max_class = String::new();
    for (index, dir) in catalog.directions.iter().enumerate() {
        let t_star = steps[index];
        if t_star > threshold {
            let v = atom.field.add_scaled(t_star, &dir.field)?;
            let w = atom.field.add_scaled(-t_star, &dir.field)?;
            let energy_v = eval.energy(&v)?;
            let energy_w = eval.energy(&w)?;
            return Ok(DecompositionCertificate {
                schema: default_schema_cert(),
                spec: atom.spec.clone(),
                energy: atom.energy,
                quad_panels: eval.quad.panels,
                feasibility_tol: tol,
                outcome: CertOutcome::Decomposable {
                    direction_class: dir.class.to_string(),
                    direction_index: index,
                    t_star,
                    direction: dir.field.clone(),
                    v,
                    w,
                    energy_v,
                    energy_w,
                },
            });
        }
        match per_class.iter_mut().find(|c| c.class == dir.class) {
            Some(c) => {
                c.count += 1;
                c.max_t_star = c.max_t_star.max(t_star);
            }
            None => {
                per_class.push(ClassReport { class: dir.class.to_string(), count: 1, max_t_star: t_star })
            }
        }
        if t_star > max_t {
            max_t = t_star;
            max_class = dir.class.to_string();
        }
    }
    Ok(DecompositionCertificate {
        schema: default_schema_cert(),
        spec: atom.spec.clone(),
        energy: atom.energy,
        quad_panels: eval.quad.panels,
        feasibility_tol: tol,
        outcome: CertOutcome::NoDecompositionFound {
            directions: catalog.directions.len(),
            seed: cfg.seed,
            max_t_star: max_t,
            max_class,
            step_threshold: threshold,
            per_class,
            note: "absence of a decomposition at this tolerance is not a proof of extremality".into(),
        },
    })
}

/// Maximal steps for the whole catalog; pure per-direction work fanned out
/// over threads in fixed blocks, results returned in catalog order.
fn evaluate_steps(
    u0: &AnyField,
    catalog: &DirectionCatalog,
    eval: &EnergyEvaluator,
    tol: f64,
    cfg: &WitnessConfig,
) -> Result<Vec<f64>> {
    let threads = cfg.threads.max(1);
    if threads == 1 {
        return catalog
            .directions
            .iter()
            .map(|d| max_step(u0, &d.field, eval, tol, cfg.bisection_iters))
            .collect();
    }
    let mut out = vec![0.0; catalog.directions.len()];
    let mut failure: Option<CoreError> = None;
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (worker, chunk) in catalog.directions.chunks(catalog.directions.len().div_ceil(threads)).enumerate()
        {
            handles.push((
                worker,
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|d| max_step(u0, &d.field, eval, tol, cfg.bisection_iters))
                        .collect::<Vec<Result<f64>>>()
                }),
            ));
        }
        let chunk_len = catalog.directions.len().div_ceil(threads);
        for (worker, handle) in handles {
            let results = handle.join().expect("direction worker panicked");
            for (offset, r) in results.into_iter().enumerate() {
                match r {
                    Ok(t) => out[worker * chunk_len + offset] = t,
                    Err(e) => {
                        if failure.is_none() {
                            failure = Some(e);
                        }
                    }
                }
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Independent re-evaluation of a decomposable certificate against the atom
/// it claims to decompose: both energies inside the ball at 1e-9, the
/// midpoint identity, consistency of v with the stored direction and step,
/// and nontriviality.
pub fn verify_certificate(cert: &DecompositionCertificate, u0: &AnyField) -> Result<bool> {
    let (v, w, direction, t_star) = match &cert.outcome {
        CertOutcome::Decomposable { v, w, direction, t_star, .. } => (v, w, direction, *t_star),
        CertOutcome::NoDecompositionFound { .. } => {
            return Err(CoreError::Unsupported("only decomposable certificates are verifiable".into()))
        }
    };
    let eval = EnergyEvaluator {
        spec: cert.spec.clone(),
        kind: cert.energy,
        quad: EdgeQuadrature { panels: cert.quad_panels },
    };
    let tol = 1e-9;
    if eval.energy(v)? > 1.0 + tol || eval.energy(w)? > 1.0 + tol {
        return Ok(false);
    }
    let mid = v.scale(0.5).add_scaled(0.5, w)?;
    if mid.max_value_diff(u0) > 1e-12 {
        return Ok(false);
    }
    let expected_v = u0.add_scaled(t_star, direction)?;
    if expected_v.max_value_diff(v) > 1e-9 {
        return Ok(false);
    }
    Ok(v.max_value_diff(w) > 1e-9)
}

/// Dimension of the face of the energy ball around a piecewise-constant
/// atom, estimated as the rank of the feasible structured value directions.
/// Zero means extremal within its fixed-partition class.
pub fn face_dimension_estimate(atom: &Atom, cfg: &WitnessConfig) -> Result<usize> {
    let base = match &atom.field {
        AnyField::Polygonal(f) if !f.has_rigid_values() => f,
        _ => {
            return Err(CoreError::Unsupported(
                "face dimension estimates need a piecewise-constant field".into(),
            ))
        }
    };
    let eval = EnergyEvaluator::new(atom.spec.clone(), atom.energy);
    let e0 = eval.energy(&atom.field)?;
    if (e0 - 1.0).abs() > 1e-6 {
        return Err(CoreError::InvalidField(format!(
            "face estimate needs a unit-energy atom, got energy {e0}"
        )));
    }
    // Structured directions only: a zero budget suppresses the random pad.
    let structured = build_catalog(&atom.field, &eval, &WitnessConfig { directions: 0, ..cfg.clone() })?;
    let mut feasible: Vec<Vec<f64>> = Vec::new();
    for dir in &structured.directions {
        let t_star = max_step(&atom.field, &dir.field, &eval, cfg.feasibility_tol, cfg.bisection_iters)?;
        if t_star > cfg.step_threshold {
            if let AnyField::Polygonal(f) = &dir.field {
                // Flatten with sqrt(measure) weights so the Euclidean inner
                // product matches L2.
                let mut flat = Vec::with_capacity((f.regions.len() + 1) * f.n);
                for (i, r) in f.regions.iter().enumerate() {
                    let wgt = base.region_measure(i).sqrt();
                    if let Value::Constant(v) = &r.value {
                        flat.extend(v.iter().map(|x| wgt * x));
                    }
                }
                let wgt = base.background_measure().sqrt();
                if let Value::Constant(v) = &f.background {
                    flat.extend(v.iter().map(|x| wgt * x));
                }
                feasible.push(flat);
            }
        }
    }
    // Gram-Schmidt rank.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in feasible {
        for b in &basis {
            let proj = linalg::vec_dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= proj * y;
            }
        }
        let n = linalg::vec_norm(&v);
        if n > 1e-8 {
            for x in v.iter_mut() {
                *x /= n;
            }
            basis.push(v);
        }
    }
    Ok(basis.len())
}
