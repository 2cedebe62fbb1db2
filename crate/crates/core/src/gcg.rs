//! Generalized conditional gradient for one-dimensional inverse problems
//! min_u (1/2)||A u - f||^2 + alpha * TV(u) over vector-valued signals on an
//! interval. The linear minimization oracle ranges over the unit-energy jump
//! atoms b 1_(t,T) with b an extreme point of the jump-norm ball, and each
//! insertion is followed by a fully corrective nonnegative coefficient fit.
//! Constant components span the energy kernel and are fitted unpenalized.

use crate::error::{CoreError, Result};
use crate::field::Domain;
use crate::linalg::{vec_dot, vec_norm};
use crate::norm::MatrixNormSpec;
use serde::{Deserialize, Serialize};

/// Sampling kernel for convolution observations: a normalized box of the
/// given width (its moving average has exact closed-form atom responses).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "kebab-case")]
pub enum Kernel {
    Box { width: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ObservationKind {
    PointwiseSamples,
    Convolution(Kernel),
}

/// Measured data: values of u (or of a kernel average of u) at sample
/// locations strictly inside the interval. `data` is location-major with n
/// components per location.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Observation {
    pub domain: Domain,
    pub n: usize,
    #[serde(flatten)]
    pub kind: ObservationKind,
    pub locations: Vec<f64>,
    pub data: Vec<f64>,
    /// Provenance only; the solver never reads it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_note: Option<String>,
}

impl Observation {
    pub fn validate(&self) -> Result<()> {
        let [a, b] = match self.domain {
            Domain::Interval { bounds } => bounds,
            _ => return Err(CoreError::Unsupported("observations live on an interval".into())),
        };
        if self.locations.is_empty() {
            return Err(CoreError::InvalidField("no sample locations".into()));
        }
        if self.locations.iter().any(|&x| x <= a || x >= b) {
            return Err(CoreError::InvalidField("sample locations must be strictly inside the interval".into()));
        }
        if self.data.len() != self.locations.len() * self.n {
            return Err(CoreError::Shape {
                expected: format!("{} data values", self.locations.len() * self.n),
                got: format!("{}", self.data.len()),
            });
        }
        if let ObservationKind::Convolution(Kernel::Box { width }) = &self.kind {
            if !(*width > 0.0) {
                return Err(CoreError::InvalidField("kernel width must be positive".into()));
            }
        }
        Ok(())
    }

    fn bounds(&self) -> [f64; 2] {
        match self.domain {
            Domain::Interval { bounds } => bounds,
            _ => unreachable!(),
        }
    }

    /// Response of the scalar step 1_(t,T) at sample location x.
    fn step_response(&self, x: f64, t: f64) -> f64 {
        let [_, end] = self.bounds();
        match &self.kind {
            ObservationKind::PointwiseSamples => {
                if x > t {
                    1.0
                } else {
                    0.0
                }
            }
            ObservationKind::Convolution(Kernel::Box { width }) => {
                let lo = (x - 0.5 * width).max(t);
                let hi = (x + 0.5 * width).min(end);
                (hi - lo).max(0.0) / width
            }
        }
    }

    /// Response of the constant function 1 at sample location x.
    fn constant_response(&self, x: f64) -> f64 {
        let [start, end] = self.bounds();
        match &self.kind {
            ObservationKind::PointwiseSamples => 1.0,
            ObservationKind::Convolution(Kernel::Box { width }) => {
                let lo = (x - 0.5 * width).max(start);
                let hi = (x + 0.5 * width).min(end);
                (hi - lo).max(0.0) / width
            }
        }
    }

    /// Stacked response of the jump atom b 1_(t,T).
    pub fn apply_atom(&self, t: f64, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.locations.len() * self.n];
        for (i, &x) in self.locations.iter().enumerate() {
            let phi = self.step_response(x, t);
            for c in 0..self.n {
                out[i * self.n + c] = phi * b[c];
            }
        }
        out
    }

    /// Stacked response of the constant gamma.
    pub fn apply_constant(&self, gamma: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.locations.len() * self.n];
        for (i, &x) in self.locations.iter().enumerate() {
            let phi = self.constant_response(x);
            for c in 0..self.n {
                out[i * self.n + c] = phi * gamma[c];
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcgAtom {
    pub t: f64,
    pub b: Vec<f64>,
    pub coeff: f64,
}

fn default_schema_run() -> String {
    "tvk.gcg-run/1".into()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcgState {
    #[serde(default = "default_schema_run")]
    pub schema: String,
    pub atoms: Vec<GcgAtom>,
    pub constant: Vec<f64>,
    pub objective: Vec<f64>,
    pub gap: Vec<f64>,
    pub alpha: f64,
    pub alpha_max: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl GcgState {
    /// Value of the iterate at a point (piecewise constant plus constant).
    pub fn evaluate(&self, x: f64) -> Vec<f64> {
        let mut v = self.constant.clone();
        for a in &self.atoms {
            if x > a.t {
                for (vi, bi) in v.iter_mut().zip(&a.b) {
                    *vi += a.coeff * bi;
                }
            }
        }
        v
    }

    /// Surrogate total variation: the sum of coefficients of unit atoms.
    pub fn tv_surrogate(&self) -> f64 {
        self.atoms.iter().map(|a| a.coeff).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GcgConfig {
    pub max_iters: usize,
    pub gap_tol: f64,
    /// Initial candidate grid for the jump location.
    pub t_grid: usize,
    /// Relative tolerance of the golden-section polish in t.
    pub t_tol: f64,
    /// Inner corrective solver iterations and tolerance.
    pub corrective_iters: usize,
    pub corrective_tol: f64,
    /// Coefficients at or below this fraction of the largest are pruned.
    pub prune_tol: f64,
    /// Atoms closer than this merge into their conic combination; None uses
    /// the sampling resolution (jumps inside one sample gap are not
    /// identifiable from the data).
    pub merge_radius: Option<f64>,
}

impl Default for GcgConfig {
    fn default() -> Self {
        GcgConfig {
            max_iters: 60,
            gap_tol: 1e-8,
            t_grid: 1024,
            t_tol: 1e-10,
            corrective_iters: 4000,
            corrective_tol: 1e-10,
            prune_tol: 1e-9,
            merge_radius: None,
        }
    }
}

/// Best unit atom for a residual functional: maximizes b . G(t) over the
/// jump grid (with golden-section polish) and over the extreme points of
/// the value ball. Returns None when the functional is numerically zero.
pub fn lmo(
    weights: &[f64],
    obs: &Observation,
    spec: &MatrixNormSpec,
    cfg: &GcgConfig,
) -> Result<Option<(f64, Vec<f64>, f64)>> {
    obs.validate()?;
    let ball = spec.value_ball();
    let [start, end] = obs.bounds();
    let span = end - start;
    let m = obs.locations.len();
    let n = obs.n;

    // G(t) = sum_i phi_i(t) w_i in R^n; value(t) = support function of the
    // ball at G(t).
    let g_at = |t: f64| -> Vec<f64> {
        let mut g = vec![0.0; n];
        for i in 0..m {
            let phi = obs.step_response(obs.locations[i], t);
            if phi != 0.0 {
                for c in 0..n {
                    g[c] += phi * weights[i * n + c];
                }
            }
        }
        g
    };
    let value_at = |t: f64| -> Result<f64> { ball.dual_gauge(&g_at(t)) };

    let scale: f64 = weights.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale < 1e-14 {
        return Ok(None);
    }

    let mut best_t = start + 0.5 * span / cfg.t_grid as f64;
    let mut best_v = f64::NEG_INFINITY;
    for j in 0..cfg.t_grid {
        let t = start + span * (j as f64 + 0.5) / cfg.t_grid as f64;
        let v = value_at(t)?;
        if v > best_v {
            best_v = v;
            best_t = t;
        }
    }
    // Golden-section polish around the best grid cell.
    let gr = (5.0f64.sqrt() - 1.0) / 2.0;
    let dt = span / cfg.t_grid as f64;
    let mut lo = (best_t - dt).max(start + 1e-12);
    let mut hi = (best_t + dt).min(end - 1e-12);
    let mut c = hi - gr * (hi - lo);
    let mut d = lo + gr * (hi - lo);
    let mut fc = value_at(c)?;
    let mut fd = value_at(d)?;
    while hi - lo > cfg.t_tol * span {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = value_at(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = value_at(d)?;
        }
    }
    let t_polished = 0.5 * (lo + hi);
    let v_polished = value_at(t_polished)?;
    let (t_star, v_star) = if v_polished >= best_v { (t_polished, v_polished) } else { (best_t, best_v) };

    if v_star <= 1e-14 * scale {
        return Ok(None);
    }
    let b = ball.argmax(&g_at(t_star))?;
    Ok(Some((t_star, b, v_star)))
}

/// Fenchel duality gap of the current iterate: the scaled residual is dual
/// feasible (the support value over atoms comes from the lmo), and the gap
/// is the difference of primal and dual objectives. Nonnegative by weak
/// duality; zero exactly at the optimum.
pub fn duality_gap(
    state: &GcgState,
    obs: &Observation,
    alpha: f64,
    spec: &MatrixNormSpec,
    cfg: &GcgConfig,
) -> Result<f64> {
    let residual = residual_of(state, obs);
    let eta: Vec<f64> = residual.iter().map(|r| -r).collect();
    let support = match lmo(&eta, obs, spec, cfg)? {
        Some((_, _, v)) => v,
        None => 0.0,
    };
    let scale = if support > alpha { alpha / support } else { 1.0 };
    let primal = 0.5 * vec_dot(&residual, &residual) + alpha * state.tv_surrogate();
    let dual = scale * vec_dot(&eta, &obs.data) - 0.5 * scale * scale * vec_dot(&eta, &eta);
    Ok(primal - dual)
}

fn residual_of(state: &GcgState, obs: &Observation) -> Vec<f64> {
    let mut r = obs.apply_constant(&state.constant);
    for a in &state.atoms {
        let col = obs.apply_atom(a.t, &a.b);
        for (ri, ci) in r.iter_mut().zip(&col) {
            *ri += a.coeff * ci;
        }
    }
    for (ri, fi) in r.iter_mut().zip(&obs.data) {
        *ri -= fi;
    }
    r
}

/// Unpenalized least-squares fit of the constant component to the data
/// residual (per component; the design is diagonal across components).
fn fit_constant(obs: &Observation, target: &[f64]) -> Vec<f64> {
    let m = obs.locations.len();
    let n = obs.n;
    let mut num = vec![0.0; n];
    let mut den = 0.0;
    for i in 0..m {
        let phi = obs.constant_response(obs.locations[i]);
        den += phi * phi;
        for c in 0..n {
            num[c] += phi * target[i * n + c];
        }
    }
    if den <= 0.0 {
        return vec![0.0; n];
    }
    num.iter().map(|x| x / den).collect()
}

/// Fully corrective step: minimize 0.5||Ac + Cg - f||^2 + alpha sum(c) over
/// c >= 0 and free g by accelerated projected gradient from a warm start.
#[allow(clippy::too_many_arguments)]
fn corrective(
    obs: &Observation,
    alpha: f64,
    atoms: &[(f64, Vec<f64>)],
    coeffs: &mut Vec<f64>,
    gamma: &mut Vec<f64>,
    cfg: &GcgConfig,
) -> Result<f64> {
    let m = obs.locations.len();
    let n = obs.n;
    let rows = m * n;
    let k = atoms.len();
    let cols: Vec<Vec<f64>> = atoms.iter().map(|(t, b)| obs.apply_atom(*t, b)).collect();
    let mut const_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        const_cols.push(obs.apply_constant(&e));
    }

    let apply = |c: &[f64], g: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; rows];
        for (cj, col) in c.iter().zip(&cols) {
            if *cj != 0.0 {
                for (o, v) in out.iter_mut().zip(col) {
                    *o += cj * v;
                }
            }
        }
        for (gj, col) in g.iter().zip(&const_cols) {
            if *gj != 0.0 {
                for (o, v) in out.iter_mut().zip(col) {
                    *o += gj * v;
                }
            }
        }
        out
    };
    let objective = |c: &[f64], g: &[f64]| -> f64 {
        let ax = apply(c, g);
        let mut q = 0.0;
        for (a, f) in ax.iter().zip(&obs.data) {
            q += (a - f) * (a - f);
        }
        0.5 * q + alpha * c.iter().sum::<f64>()
    };

    // Lipschitz constant of the least-squares gradient via power iteration
    // on the Gram operator.
    let mut v = vec![1.0; k + n];
    let mut lip = 1.0;
    for _ in 0..30 {
        let ax = apply(&v[..k], &v[k..]);
        let mut back = vec![0.0; k + n];
        for j in 0..k {
            back[j] = vec_dot(&ax, &cols[j]);
        }
        for c in 0..n {
            back[k + c] = vec_dot(&ax, &const_cols[c]);
        }
        let nb = vec_norm(&back);
        if nb < 1e-30 {
            break;
        }
        lip = nb / vec_norm(&v).max(1e-30);
        for (vi, bi) in v.iter_mut().zip(&back) {
            *vi = bi / nb;
        }
    }
    let step = 1.0 / lip.max(1e-12);

    let mut c = coeffs.clone();
    let mut g = gamma.clone();
    let mut yc = c.clone();
    let mut yg = g.clone();
    let mut theta = 1.0f64;
    let initial = objective(&c, &g);
    let mut best = initial;

    for _ in 0..cfg.corrective_iters {
        let ax = apply(&yc, &yg);
        let mut r = vec![0.0; rows];
        for i in 0..rows {
            r[i] = ax[i] - obs.data[i];
        }
        let mut new_c = vec![0.0; k];
        let mut max_kkt = 0.0f64;
        for j in 0..k {
            let grad = vec_dot(&r, &cols[j]) + alpha;
            new_c[j] = (yc[j] - step * grad).max(0.0);
            // KKT violation: gradient must vanish on the support and be
            // nonnegative off it.
            let viol = if new_c[j] > 0.0 { grad.abs() } else { (-grad).max(0.0) };
            max_kkt = max_kkt.max(viol);
        }
        let mut new_g = vec![0.0; n];
        for cc in 0..n {
            let grad = vec_dot(&r, &const_cols[cc]);
            new_g[cc] = yg[cc] - step * grad;
            max_kkt = max_kkt.max(grad.abs());
        }
        // Restarted acceleration.
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let mix = (theta - 1.0) / theta_next;
        for j in 0..k {
            yc[j] = new_c[j] + mix * (new_c[j] - c[j]);
            if yc[j] < 0.0 {
                yc[j] = 0.0;
            }
        }
        for cc in 0..n {
            yg[cc] = new_g[cc] + mix * (new_g[cc] - g[cc]);
        }
        c = new_c;
        g = new_g;
        theta = theta_next;

        if max_kkt <= cfg.corrective_tol {
            break;
        }
        let now = objective(&c, &g);
        if now > best + 1e-12 * best.abs().max(1.0) {
            // Momentum restart on objective increase; acceleration is not
            // monotone on its own.
            yc = c.clone();
            yg = g.clone();
            theta = 1.0;
            if !now.is_finite() || now > 10.0 * initial + 1.0 {
                return Err(CoreError::Numerical("corrective step diverged".into()));
            }
        } else if now < best {
            best = now;
        }
    }
    *coeffs = c;
    *gamma = g;
    Ok(objective(coeffs, gamma))
}

/// Full solver: alternates lmo insertion with fully corrective coefficient
/// fits, pruning zero atoms, until the duality gap passes the tolerance.
pub fn solve(obs: &Observation, alpha: f64, spec: &MatrixNormSpec, cfg: &GcgConfig) -> Result<GcgState> {
    obs.validate()?;
    spec.validate()?;
    if !(alpha > 0.0) {
        return Err(CoreError::InvalidSpec("alpha must be positive".into()));
    }
    if spec.d != 1 || spec.n != obs.n {
        return Err(CoreError::Shape {
            expected: format!("norm on {}x1", obs.n),
            got: format!("norm on {}x{}", spec.n, spec.d),
        });
    }

    // Jumps closer than the sampling resolution (or the kernel footprint)
    // are not identifiable from the data, so the support is cleaned at that
    // scale.
    let merge_radius = cfg.merge_radius.unwrap_or_else(|| {
        let mut xs = obs.locations.clone();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let gap = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        match &obs.kind {
            ObservationKind::Convolution(Kernel::Box { width }) => gap.max(*width),
            ObservationKind::PointwiseSamples => gap,
        }
    });

    let mut gamma = fit_constant(obs, &obs.data);
    let mut atoms: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();

    let mut state = GcgState {
        schema: default_schema_run(),
        atoms: Vec::new(),
        constant: gamma.clone(),
        objective: Vec::new(),
        gap: Vec::new(),
        alpha,
        alpha_max: 0.0,
        converged: false,
        iterations: 0,
    };

    // Largest penalty with a nonzero solution, from the constant-fit
    // residual.
    {
        let r0 = residual_of(&state, obs);
        let eta: Vec<f64> = r0.iter().map(|x| -x).collect();
        state.alpha_max = match lmo(&eta, obs, spec, cfg)? {
            Some((_, _, v)) => v,
            None => 0.0,
        };
    }

    for iter in 0..cfg.max_iters {
        state.iterations = iter + 1;
        let residual = residual_of(&state, obs);
        let obj = 0.5 * vec_dot(&residual, &residual) + alpha * state.tv_surrogate();
        state.objective.push(obj);
        let gap = duality_gap(&state, obs, alpha, spec, cfg)?;
        state.gap.push(gap);
        if gap <= cfg.gap_tol {
            state.converged = true;
            break;
        }

        let eta: Vec<f64> = residual.iter().map(|x| -x).collect();
        let candidate = lmo(&eta, obs, spec, cfg)?;
        let (t_new, b_new, v_new) = match candidate {
            Some(c) => c,
            None => {
                state.converged = true;
                break;
            }
        };
        if v_new <= alpha * (1.0 + 1e-12) {
            // First-order condition: no atom improves the objective.
            state.converged = true;
            break;
        }
        let duplicate = atoms.iter().any(|(t, b)| {
            (t - t_new).abs() < 1e-12
                && b.iter().zip(&b_new).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) < 1e-12
        });
        if !duplicate {
            atoms.push((t_new, b_new));
            coeffs.push(0.0);
        }

        corrective(obs, alpha, &atoms, &mut coeffs, &mut gamma, cfg)?;

        // Prune numerically dead atoms.
        let cmax = coeffs.iter().cloned().fold(0.0f64, f64::max);
        let keep: Vec<bool> = coeffs.iter().map(|&c| c > cfg.prune_tol * cmax.max(1.0)).collect();
        let mut next_atoms = Vec::new();
        let mut next_coeffs = Vec::new();
        for ((a, &c), k) in atoms.iter().zip(&coeffs).zip(&keep) {
            if *k {
                next_atoms.push(a.clone());
                next_coeffs.push(c);
            }
        }
        atoms = next_atoms;
        coeffs = next_coeffs;
        merge_nearby(&mut atoms, &mut coeffs, spec, merge_radius)?;

        state.atoms = atoms
            .iter()
            .zip(&coeffs)
            .map(|((t, b), &c)| GcgAtom { t: *t, b: b.clone(), coeff: c })
            .collect();
        state.constant = gamma.clone();
    }

    if state.gap.is_empty() {
        let gap = duality_gap(&state, obs, alpha, spec, cfg)?;
        state.gap.push(gap);
    }
    Ok(state)
}

/// Replace clusters of atoms within the merge radius by their conic
/// combination at the coefficient-weighted location, whenever the combined
/// direction is itself an extreme point (always the case for strictly
/// convex value balls). Without merging, the oracle keeps inserting
/// slightly shifted or rotated copies of the same jump: those are not
/// identifiable from data sampled more coarsely than the radius.
fn merge_nearby(
    atoms: &mut Vec<(f64, Vec<f64>)>,
    coeffs: &mut Vec<f64>,
    spec: &MatrixNormSpec,
    radius: f64,
) -> Result<()> {
    let ball = spec.value_ball();
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[a].0.partial_cmp(&atoms[b].0).unwrap());
    let mut merged_atoms: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut merged_coeffs: Vec<f64> = Vec::new();
    let mut cursor = 0usize;
    while cursor < order.len() {
        let mut group = vec![order[cursor]];
        let mut end = cursor + 1;
        while end < order.len() && atoms[order[end]].0 - atoms[order[end - 1]].0 <= radius {
            group.push(order[end]);
            end += 1;
        }
        cursor = end;
        if group.len() == 1 {
            let i = group[0];
            merged_atoms.push(atoms[i].clone());
            merged_coeffs.push(coeffs[i]);
            continue;
        }
        let n = atoms[group[0]].1.len();
        let mut combined = vec![0.0; n];
        let mut mass = 0.0;
        let mut t_bar = 0.0;
        for &j in &group {
            mass += coeffs[j];
            t_bar += coeffs[j] * atoms[j].0;
            for (x, y) in combined.iter_mut().zip(&atoms[j].1) {
                *x += coeffs[j] * y;
            }
        }
        let g = ball.gauge(&combined)?;
        let unit: Vec<f64> =
            if g > 0.0 { combined.iter().map(|x| x / g).collect() } else { combined.clone() };
        if g > 0.0 && mass > 0.0 && ball.is_extreme(&unit, 1e-7)? {
            merged_atoms.push((t_bar / mass, unit));
            merged_coeffs.push(g);
        } else {
            // A genuinely non-extremal combination (possible on faces of
            // polyhedral balls): keep the vertices separate.
            for &j in &group {
                merged_atoms.push(atoms[j].clone());
                merged_coeffs.push(coeffs[j]);
            }
        }
    }
    *atoms = merged_atoms;
    *coeffs = merged_coeffs;
    Ok(())
}

/// Post-hoc soundness check: every solution atom has a value in the extreme
/// set of the jump-norm ball (vertex membership for polyhedral balls, unit
/// norm for strictly convex ones).
pub fn atoms_are_extremal(state: &GcgState, spec: &MatrixNormSpec) -> Result<bool> {
    let ball = spec.value_ball();
    for a in &state.atoms {
        if !ball.is_extreme(&a.b, 1e-7)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::VectorBallSpec;
    use approx::assert_abs_diff_eq;

    fn interval() -> Domain {
        Domain::Interval { bounds: [0.0, 1.0] }
    }

    fn sample_locations(m: usize) -> Vec<f64> {
        (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect()
    }

    fn pointwise_obs(n: usize, locations: Vec<f64>, data: Vec<f64>) -> Observation {
        Observation {
            domain: interval(),
            n,
            kind: ObservationKind::PointwiseSamples,
            locations,
            data,
            noise_note: None,
        }
    }

    /// Data from a single jump atom plus a constant.
    fn single_atom_data(t0: f64, b: &[f64], coeff: f64, gamma: &[f64], m: usize) -> Observation {
        let locations = sample_locations(m);
        let n = b.len();
        let mut data = vec![0.0; m * n];
        for (i, &x) in locations.iter().enumerate() {
            for c in 0..n {
                data[i * n + c] = gamma[c] + if x > t0 { coeff * b[c] } else { 0.0 };
            }
        }
        pointwise_obs(n, locations, data)
    }

    #[test]
    fn lmo_recovers_a_concentrated_residual() {
        // Mean-centered step residual along e1 jumping at t0 = 0.6: the
        // windowed sum peaks exactly at t0. Brute force over a fine grid
        // agrees with the oracle.
        let m = 64;
        let locations = sample_locations(m);
        let mut weights = vec![0.0; 2 * m];
        for (i, &x) in locations.iter().enumerate() {
            weights[2 * i] = if x > 0.6 { 0.6 } else { -0.4 };
        }
        let obs = pointwise_obs(2, locations.clone(), vec![0.0; 2 * m]);
        let spec = MatrixNormSpec::mixed_rows(VectorBallSpec::l1(2), VectorBallSpec::l2(1));
        let cfg = GcgConfig::default();
        let (t, b, v) = lmo(&weights, &obs, &spec, &cfg).unwrap().unwrap();
        // Brute force over candidate jumps and the four vertices.
        let mut brute = f64::NEG_INFINITY;
        for j in 0..4096 {
            let tc = (j as f64 + 0.5) / 4096.0;
            for (bi, sign) in [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)] {
                let mut g = 0.0;
                for (i, &x) in locations.iter().enumerate() {
                    if x > tc {
                        g += sign * weights[i * 2 + bi];
                    }
                }
                brute = brute.max(g);
            }
        }
        assert_abs_diff_eq!(v, brute, epsilon = 1e-9 * (1.0 + brute));
        assert!(b[0] > 0.9 && (t - 0.6).abs() < 1.0 / 64.0 + 1e-9, "t = {t}, b = {b:?}");
    }

    #[test]
    fn lmo_returns_none_on_zero_residual() {
        let obs = pointwise_obs(2, sample_locations(16), vec![0.0; 32]);
        let spec = MatrixNormSpec::frobenius(2, 1);
        assert!(lmo(&obs.data.clone(), &obs, &spec, &GcgConfig::default()).unwrap().is_none());
    }

    #[test]
    fn recovers_single_atom_with_small_penalty() {
        let spec = MatrixNormSpec::frobenius(2, 1);
        let obs = single_atom_data(0.37, &[0.6, 0.8], 1.5, &[0.2, -0.1], 96);
        let cfg = GcgConfig::default();
        let state = solve(&obs, 1e-4, &spec, &cfg).unwrap();
        assert!(state.converged, "gap history {:?}", state.gap);
        assert_eq!(state.atoms.len(), 1);
        let a = &state.atoms[0];
        assert!((a.t - 0.37).abs() <= 1.5 / 96.0, "t = {}", a.t);
        assert_abs_diff_eq!(a.coeff, 1.5, epsilon = 1e-2);
        assert!(atoms_are_extremal(&state, &spec).unwrap());
        // Objective history never increases.
        for w in state.objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }

    #[test]
    fn large_penalty_returns_the_zero_solution() {
        let spec = MatrixNormSpec::frobenius(2, 1);
        let obs = single_atom_data(0.5, &[1.0, 0.0], 1.0, &[0.0, 0.0], 48);
        let cfg = GcgConfig::default();
        let probe = solve(&obs, 1e-3, &spec, &cfg).unwrap();
        let alpha_max = probe.alpha_max;
        assert!(alpha_max > 0.0);
        let state = solve(&obs, 1.05 * alpha_max, &spec, &cfg).unwrap();
        assert!(state.atoms.is_empty(), "atoms: {:?}", state.atoms);
        assert!(state.converged);
        assert!(state.gap.last().unwrap() <= &cfg.gap_tol);
    }

    #[test]
    fn gap_positive_at_zero_with_descent_available() {
        let spec = MatrixNormSpec::frobenius(1, 1);
        let obs = single_atom_data(0.5, &[1.0], 2.0, &[0.0], 48);
        let cfg = GcgConfig::default();
        let state = GcgState {
            schema: default_schema_run(),
            atoms: vec![],
            constant: vec![0.0],
            objective: vec![],
            gap: vec![],
            alpha: 0.01,
            alpha_max: 0.0,
            converged: false,
            iterations: 0,
        };
        let gap = duality_gap(&state, &obs, 0.01, &spec, &cfg).unwrap();
        assert!(gap > 0.1, "gap = {gap}");
    }

    #[test]
    fn two_separated_jumps_are_recovered() {
        let m = 128;
        let locations = sample_locations(m);
        let mut data = vec![0.0; 2 * m];
        for (i, &x) in locations.iter().enumerate() {
            let v0 = if x > 0.3 { 1.0 } else { 0.0 };
            let v1 = if x > 0.7 { 0.8 } else { 0.0 };
            data[2 * i] = v0;
            data[2 * i + 1] = v1 - 0.5 * v0;
        }
        let obs = pointwise_obs(2, locations, data);
        let spec = MatrixNormSpec::frobenius(2, 1);
        let state = solve(&obs, 5e-4, &spec, &GcgConfig::default()).unwrap();
        assert!(state.converged);
        assert_eq!(state.atoms.len(), 2, "atoms: {:?}", state.atoms);
        let mut ts: Vec<f64> = state.atoms.iter().map(|a| a.t).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ts[0] - 0.3).abs() < 2.0 / 128.0);
        assert!((ts[1] - 0.7).abs() < 2.0 / 128.0);
        assert!(atoms_are_extremal(&state, &spec).unwrap());
    }

    #[test]
    fn convolution_observation_round_trip() {
        let m = 64;
        let locations = sample_locations(m);
        let kernel = Kernel::Box { width: 0.05 };
        let mut obs = Observation {
            domain: interval(),
            n: 1,
            kind: ObservationKind::Convolution(kernel),
            locations: locations.clone(),
            data: vec![0.0; m],
            noise_note: Some("synthetic, noiseless".into()),
        };
        let truth = obs.apply_atom(0.45, &[1.0]);
        obs.data = truth;
        let spec = MatrixNormSpec::frobenius(1, 1);
        let state = solve(&obs, 1e-4, &spec, &GcgConfig::default()).unwrap();
        assert!(state.converged);
        assert_eq!(state.atoms.len(), 1);
        assert!((state.atoms[0].t - 0.45).abs() < 0.03, "t = {}", state.atoms[0].t);
    }

    #[test]
    fn gap_sequence_dominated_by_a_fitted_one_over_k_envelope() {
        let spec = MatrixNormSpec::frobenius(2, 1);
        let obs = single_atom_data(0.41, &[0.6, 0.8], 1.2, &[0.1, 0.3], 96);
        let state = solve(&obs, 1e-3, &spec, &GcgConfig::default()).unwrap();
        let running_min: Vec<f64> = state
            .gap
            .iter()
            .scan(f64::INFINITY, |m, &g| {
                *m = m.min(g);
                Some(*m)
            })
            .collect();
        // Least-squares fit of C in g_k ~ C/k, then an upper envelope test.
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, g) in running_min.iter().enumerate() {
            let k = (i + 1) as f64;
            num += g / k;
            den += 1.0 / (k * k);
        }
        let c_fit = num / den;
        for (i, g) in running_min.iter().enumerate() {
            let k = (i + 1) as f64;
            assert!(*g <= 5.0 * c_fit / k + 1e-12, "k = {k}, g = {g}, fit = {c_fit}");
        }
    }
}
