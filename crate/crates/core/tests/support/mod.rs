//! Shared acceptance-test machinery: an independent dense-grid proximal
//! gradient solver used as the oracle for the conditional-gradient solver,
//! plus the seeded solver fixtures. The oracle never touches the solver's
//! code path: it discretizes the interval into cells and minimizes the same
//! objective by FISTA with an exact total-variation prox computed on the
//! dual side.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvk_core::field::Domain;
use tvk_core::gcg::{Kernel, Observation, ObservationKind};
use tvk_core::norm::{MatrixNormSpec, VectorBallSpec};

/// Jump-norm branches the oracle supports (the prox needs the projection
/// onto the dual ball in closed form).
#[derive(Clone, Copy, Debug)]
pub enum JumpBall {
    Euclid,
    L1,
}

impl JumpBall {
    fn norm(&self, v: &[f64]) -> f64 {
        match self {
            JumpBall::Euclid => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            JumpBall::L1 => v.iter().map(|x| x.abs()).sum(),
        }
    }

    /// Project a dual block onto the tau-scaled dual ball.
    fn project_dual(&self, p: &mut [f64], tau: f64) {
        match self {
            JumpBall::Euclid => {
                let n = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > tau {
                    for x in p.iter_mut() {
                        *x *= tau / n;
                    }
                }
            }
            JumpBall::L1 => {
                for x in p.iter_mut() {
                    *x = x.clamp(-tau, tau);
                }
            }
        }
    }
}

pub struct OracleSolution {
    pub u: Vec<f64>,
    pub objective: f64,
    pub cells: usize,
}

/// Sparse sampling operator rows: (cell, weight) pairs per sample location.
fn operator_rows(obs: &Observation, cells: usize) -> Vec<Vec<(usize, f64)>> {
    let [a, b] = match obs.domain {
        Domain::Interval { bounds } => bounds,
        _ => panic!("oracle needs an interval domain"),
    };
    let delta = (b - a) / cells as f64;
    obs.locations
        .iter()
        .map(|&x| match &obs.kind {
            ObservationKind::PointwiseSamples => {
                let c = (((x - a) / delta).floor() as usize).min(cells - 1);
                vec![(c, 1.0)]
            }
            ObservationKind::Convolution(Kernel::Box { width }) => {
                let lo = (x - 0.5 * width).max(a);
                let hi = (x + 0.5 * width).min(b);
                let c0 = (((lo - a) / delta).floor() as usize).min(cells - 1);
                let c1 = (((hi - a) / delta).ceil() as usize).min(cells);
                let mut row = Vec::new();
                for c in c0..c1 {
                    let cell_lo = a + c as f64 * delta;
                    let cell_hi = cell_lo + delta;
                    let overlap = (hi.min(cell_hi) - lo.max(cell_lo)).max(0.0);
                    if overlap > 0.0 {
                        row.push((c, overlap / width));
                    }
                }
                row
            }
        })
        .collect()
}

/// Discrete objective of a cellwise-constant candidate.
pub fn oracle_objective(
    obs: &Observation,
    alpha: f64,
    ball: JumpBall,
    u: &[f64],
    cells: usize,
) -> f64 {
    let n = obs.n;
    let rows = operator_rows(obs, cells);
    let mut quad = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for k in 0..n {
            let mut v = 0.0;
            for &(c, w) in row {
                v += w * u[c * n + k];
            }
            let d = v - obs.data[i * n + k];
            quad += d * d;
        }
    }
    let mut tv = 0.0;
    for c in 0..cells - 1 {
        let diff: Vec<f64> = (0..n).map(|k| u[(c + 1) * n + k] - u[c * n + k]).collect();
        tv += ball.norm(&diff);
    }
    0.5 * quad + alpha * tv
}

/// FISTA with a dual-ascent total-variation prox on a uniform grid.
pub fn prox_gradient_oracle(
    obs: &Observation,
    alpha: f64,
    ball: JumpBall,
    cells: usize,
    outer_iters: usize,
    inner_iters: usize,
) -> OracleSolution {
    let n = obs.n;
    let rows = operator_rows(obs, cells);
    let dim = cells * n;

    // Lipschitz constant of the data gradient by power iteration on A^T A.
    let mut v = vec![1.0; dim];
    let mut lip = 1.0f64;
    for _ in 0..60 {
        let mut av = vec![0.0; obs.locations.len() * n];
        for (i, row) in rows.iter().enumerate() {
            for k in 0..n {
                for &(c, w) in row {
                    av[i * n + k] += w * v[c * n + k];
                }
            }
        }
        let mut atav = vec![0.0; dim];
        for (i, row) in rows.iter().enumerate() {
            for k in 0..n {
                for &(c, w) in row {
                    atav[c * n + k] += w * av[i * n + k];
                }
            }
        }
        let nv: f64 = atav.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nv < 1e-30 {
            break;
        }
        lip = nv / v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-30);
        for (x, y) in v.iter_mut().zip(&atav) {
            *x = y / nv;
        }
    }
    let step = 1.0 / lip.max(1e-12);
    let tau = alpha * step;

    let grad = |u: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in rows.iter().enumerate() {
            for k in 0..n {
                let mut vik = 0.0;
                for &(c, w) in row {
                    vik += w * u[c * n + k];
                }
                let r = vik - obs.data[i * n + k];
                for &(c, w) in row {
                    out[c * n + k] += w * r;
                }
            }
        }
    };

    // TV prox through its dual: z = v - D^T p with blockwise-projected p,
    // ascended by FISTA with a warm start across outer iterations.
    let mut p = vec![0.0; (cells - 1) * n];
    let mut prox = |v: &[f64], p: &mut Vec<f64>| -> Vec<f64> {
        let mut py = p.clone();
        let mut theta = 1.0f64;
        let mut z = vec![0.0; dim];
        for _ in 0..inner_iters {
            // z = v - D^T p_y
            for i in 0..dim {
                z[i] = v[i];
            }
            for c in 0..cells - 1 {
                for k in 0..n {
                    z[c * n + k] += py[c * n + k];
                    z[(c + 1) * n + k] -= py[c * n + k];
                }
            }
            // Ascent step on the dual: p + (1/4) D z, blockwise projection.
            let mut pnew = vec![0.0; (cells - 1) * n];
            for c in 0..cells - 1 {
                for k in 0..n {
                    pnew[c * n + k] = py[c * n + k] + 0.25 * (z[(c + 1) * n + k] - z[c * n + k]);
                }
                ball.project_dual(&mut pnew[c * n..(c + 1) * n], tau);
            }
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let mix = (theta - 1.0) / theta_next;
            for i in 0..pnew.len() {
                py[i] = pnew[i] + mix * (pnew[i] - p[i]);
            }
            *p = pnew;
            theta = theta_next;
        }
        for i in 0..dim {
            z[i] = v[i];
        }
        for c in 0..cells - 1 {
            for k in 0..n {
                z[c * n + k] += p[c * n + k];
                z[(c + 1) * n + k] -= p[c * n + k];
            }
        }
        z
    };

    let mut u = vec![0.0; dim];
    let mut y = u.clone();
    let mut theta = 1.0f64;
    let mut g = vec![0.0; dim];
    let mut best = f64::INFINITY;
    let mut best_u = u.clone();
    let mut since_improvement = 0usize;
    for _ in 0..outer_iters {
        grad(&y, &mut g);
        let v: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        let unew = prox(&v, &mut p);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let mix = (theta - 1.0) / theta_next;
        for i in 0..dim {
            y[i] = unew[i] + mix * (unew[i] - u[i]);
        }
        u = unew;
        theta = theta_next;
        let obj = oracle_objective(obs, alpha, ball, &u, cells);
        if obj < best * (1.0 - 1e-12) {
            best = obj;
            best_u = u.clone();
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if obj > best * (1.0 + 1e-6) {
                // Momentum restart.
                y = u.clone();
                theta = 1.0;
            }
            if since_improvement > 400 {
                break;
            }
        }
    }
    OracleSolution { u: best_u, objective: best, cells }
}

pub struct GcgFixture {
    pub name: &'static str,
    pub obs: Observation,
    pub spec: MatrixNormSpec,
    pub ball: JumpBall,
    pub alpha: f64,
    pub true_atoms: usize,
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Jitter a jump location away from sample points and oracle cell edges so
/// the 4096-cell discretization can represent the optimum exactly.
fn safe_jump(rng: &mut ChaCha8Rng, samples: &[f64]) -> f64 {
    let delta = 1.0 / 4096.0;
    loop {
        let t = 0.15 + 0.7 * rng.gen::<f64>();
        let near_sample = samples.iter().any(|&x| (x - t).abs() < 3.0 * delta);
        let to_edge = (t / delta) - (t / delta).floor();
        if !near_sample && to_edge > 0.25 && to_edge < 0.75 {
            return t;
        }
    }
}

fn synth(
    name: &'static str,
    seed: u64,
    n: usize,
    m: usize,
    kind: ObservationKind,
    spec: MatrixNormSpec,
    ball: JumpBall,
    alpha: f64,
    jump_values: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    gamma: Vec<f64>,
) -> GcgFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locations: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let mut jumps: Vec<f64> = (0..jump_values.len()).map(|_| safe_jump(&mut rng, &locations)).collect();
    // Keep jumps well separated relative to the sampling resolution.
    jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 1..jumps.len() {
        if jumps[i] - jumps[i - 1] < 0.12 {
            jumps[i] = (jumps[i - 1] + 0.14).min(0.9);
        }
    }
    let mut obs = Observation {
        domain: Domain::Interval { bounds: [0.0, 1.0] },
        n,
        kind,
        locations,
        data: vec![0.0; m * n],
        noise_note: Some("synthetic, noiseless".into()),
    };
    let mut data = obs.apply_constant(&gamma);
    for ((t, b), c) in jumps.iter().zip(&jump_values).zip(&coeffs) {
        let col = obs.apply_atom(*t, b);
        for (d, v) in data.iter_mut().zip(&col) {
            *d += c * v;
        }
    }
    obs.data = data;
    GcgFixture { name, obs, spec, ball, alpha, true_atoms: jump_values.len() }
}

/// The five seeded solver fixtures.
pub fn gcg_fixtures() -> Vec<GcgFixture> {
    vec![
        synth(
            "scalar-single-jump",
            101,
            1,
            64,
            ObservationKind::PointwiseSamples,
            MatrixNormSpec::frobenius(1, 1),
            JumpBall::Euclid,
            1e-3,
            vec![vec![1.0]],
            vec![1.4],
            vec![0.25],
        ),
        synth(
            "planar-two-jumps",
            102,
            2,
            96,
            ObservationKind::PointwiseSamples,
            MatrixNormSpec::frobenius(2, 1),
            JumpBall::Euclid,
            2e-3,
            vec![unit(vec![0.6, 0.8]), unit(vec![-1.0, 0.5])],
            vec![1.0, 0.7],
            vec![0.1, -0.2],
        ),
        synth(
            "axis-three-jumps",
            103,
            2,
            128,
            ObservationKind::PointwiseSamples,
            MatrixNormSpec::mixed_rows(VectorBallSpec::l1(2), VectorBallSpec::l2(1)),
            JumpBall::L1,
            1e-3,
            vec![vec![1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]],
            vec![0.9, 0.6, 0.5],
            vec![0.0, 0.3],
        ),
        synth(
            "convolved-two-jumps",
            104,
            2,
            96,
            ObservationKind::Convolution(Kernel::Box { width: 0.04 }),
            MatrixNormSpec::frobenius(2, 1),
            JumpBall::Euclid,
            5e-4,
            vec![unit(vec![1.0, 1.0]), unit(vec![0.2, -1.0])],
            vec![1.1, 0.8],
            vec![-0.1, 0.1],
        ),
        synth(
            "scalar-two-jumps",
            105,
            1,
            80,
            ObservationKind::PointwiseSamples,
            MatrixNormSpec::frobenius(1, 1),
            JumpBall::Euclid,
            2e-3,
            vec![vec![1.0], vec![-1.0]],
            vec![0.9, 1.3],
            vec![0.5],
        ),
    ]
}
