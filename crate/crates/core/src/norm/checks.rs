//! Sampled verification of the structural conditions a matrix norm may
//! satisfy. These checks quantify over continua, so a pass is sampled
//! evidence, never a proof; every report says so and carries the seed.

use super::MatrixNormSpec;
use crate::error::{CoreError, Result};
use crate::linalg::{self, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
    /// Largest violation of an equality-type identity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    /// Smallest observed margin of a strict inequality.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    pub note: String,
}

const NOTE: &str = "sampled evidence only";

fn unit_vec(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v = linalg::gaussian_vec(dim, rng);
        let n = linalg::vec_norm(&v);
        if n > 1e-8 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// |b tensor nu|_K = |b| for every b and unit nu, sampled.
pub fn check_rank_one_isotropy(spec: &MatrixNormSpec, samples: usize, seed: u64) -> Result<ConditionReport> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-10;
    let mut max_dev = 0.0f64;
    let mut witness = None;
    for _ in 0..samples {
        let b = linalg::gaussian_vec(spec.n, &mut rng);
        let nu = unit_vec(spec.d, &mut rng);
        let dev = (spec.gauge(&Mat::outer(&b, &nu))? - linalg::vec_norm(&b)).abs();
        if dev > max_dev {
            max_dev = dev;
            witness = Some(serde_json::json!({ "b": b, "nu": nu }));
        }
    }
    Ok(ConditionReport {
        condition: "rank-one-isotropy".into(),
        samples,
        seed,
        pass: max_dev <= tol,
        max_deviation: Some(max_dev),
        worst_margin: None,
        tolerance: tol,
        witness,
        note: NOTE.into(),
    })
}

/// |QA|_K = |A|_K for random orthogonal Q, sampled.
pub fn check_left_orthogonal_invariance(
    spec: &MatrixNormSpec,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-10;
    let mut max_dev = 0.0f64;
    let mut witness = None;
    for _ in 0..samples {
        let a = linalg::gaussian_mat(spec.n, spec.d, &mut rng);
        let q = linalg::random_orthogonal(spec.n, &mut rng);
        let dev = (spec.gauge(&q.matmul(&a))? - spec.gauge(&a)?).abs();
        if dev > max_dev {
            max_dev = dev;
            witness = Some(serde_json::json!({ "a": a.data(), "q": q.data() }));
        }
    }
    Ok(ConditionReport {
        condition: "left-orthogonal-invariance".into(),
        samples,
        seed,
        pass: max_dev <= tol,
        max_deviation: Some(max_dev),
        worst_margin: None,
        tolerance: tol,
        witness,
        note: NOTE.into(),
    })
}

/// Left orthogonal invariance plus the strict projection inequality
/// |(e_1 e_1^T)(b tensor nu)|_K < |b tensor nu|_K for unit b not parallel
/// to e_1. Samples stay a fixed distance from the poles b = +-e_1, where the
/// margin degenerates to zero by continuity.
pub fn check_clunky_condition(spec: &MatrixNormSpec, samples: usize, seed: u64) -> Result<ConditionReport> {
    spec.validate()?;
    let invariance = check_left_orthogonal_invariance(spec, samples, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let mut worst = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        let b = loop {
            let b = unit_vec(spec.n, &mut rng);
            if b[0].abs() <= 1.0 - 1e-3 {
                break b;
            }
        };
        let nu = unit_vec(spec.d, &mut rng);
        let full = spec.gauge(&Mat::outer(&b, &nu))?;
        // (e_1 e_1^T)(b tensor nu) = (b . e_1) (e_1 tensor nu).
        let projected = b[0].abs() * spec.spatial_gauge(&nu)?;
        let margin = full - projected;
        if margin < worst {
            worst = margin;
            witness = Some(serde_json::json!({ "b": b, "nu": nu, "full": full, "projected": projected }));
        }
    }
    let tol = 1e-12;
    Ok(ConditionReport {
        condition: "left-invariant-strict-projection".into(),
        samples,
        seed,
        pass: invariance.pass && worst > tol,
        max_deviation: invariance.max_deviation,
        worst_margin: Some(worst),
        tolerance: tol,
        witness,
        note: NOTE.into(),
    })
}

/// Strict convexity of lambda -> |((1-lambda)a + lambda b) sym-tensor nu|_K
/// for linearly independent a, b; probed by second differences on a
/// 101-point grid.
pub fn check_sym_rank_one_strict_convexity(
    spec: &MatrixNormSpec,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    spec.validate()?;
    if spec.n != spec.d {
        return Err(CoreError::Unsupported("symmetrized products need n = d".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = 101usize;
    let tol = 1e-9;
    let mut min_sd = f64::INFINITY;
    let mut witness = None;
    for _ in 0..samples {
        // Reject nearly collinear pairs; the condition only quantifies over
        // linearly independent ones.
        let (a, b) = loop {
            let a = unit_vec(spec.d, &mut rng);
            let b = unit_vec(spec.d, &mut rng);
            if linalg::vec_dot(&a, &b).abs() < 1.0 - 1e-3 {
                break (a, b);
            }
        };
        let nu = unit_vec(spec.d, &mut rng);
        let mut vals = Vec::with_capacity(grid);
        for i in 0..grid {
            let lam = i as f64 / (grid - 1) as f64;
            let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (1.0 - lam) * x + lam * y).collect();
            vals.push(spec.gauge(&Mat::sym_outer(&c, &nu))?);
        }
        for i in 1..grid - 1 {
            let sd = vals[i - 1] - 2.0 * vals[i] + vals[i + 1];
            if sd < min_sd {
                min_sd = sd;
                witness = Some(serde_json::json!({ "a": a, "b": b, "nu": nu, "lambda_index": i }));
            }
        }
    }
    Ok(ConditionReport {
        condition: "sym-rank-one-strict-convexity".into(),
        samples,
        seed,
        pass: min_sd > tol,
        max_deviation: None,
        worst_margin: Some(min_sd),
        tolerance: tol,
        witness,
        note: NOTE.into(),
    })
}
