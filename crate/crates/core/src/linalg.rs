//! Dense matrices up to 8x8 with a self-contained one-sided Jacobi SVD.

use crate::error::{CoreError, Result};
use rand::Rng;

/// Largest row/column dimension supported by the norm machinery.
pub const MAX_DIM: usize = 8;

const INLINE_CAP: usize = 16;

/// Backing storage: matrices up to 4x4 (the common case in per-cell and
/// per-edge loops) live on the stack.
#[derive(Clone, Debug)]
enum Buf {
    Inline { len: usize, data: [f64; INLINE_CAP] },
    Heap(Vec<f64>),
}

impl Buf {
    fn new(len: usize) -> Self {
        if len <= INLINE_CAP {
            Buf::Inline { len, data: [0.0; INLINE_CAP] }
        } else {
            Buf::Heap(vec![0.0; len])
        }
    }

    #[inline]
    fn as_slice(&self) -> &[f64] {
        match self {
            Buf::Inline { len, data } => &data[..*len],
            Buf::Heap(v) => v,
        }
    }

    #[inline]
    fn as_mut_slice(&mut self) -> &mut [f64] {
        match self {
            Buf::Inline { len, data } => &mut data[..*len],
            Buf::Heap(v) => v,
        }
    }
}

/// Row-major dense matrix. Sizes stay tiny (n, d <= 8), so everything is
/// plain loops over a short buffer.
#[derive(Clone, Debug)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Buf,
}

impl PartialEq for Mat {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data.as_slice() == other.data.as_slice()
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: Buf::new(rows * cols) }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(CoreError::Shape { expected: "at least one row".into(), got: "0 rows".into() });
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(CoreError::Shape { expected: format!("{cols} cols in every row"), got: "ragged rows".into() });
        }
        Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rank-one matrix b a^T for b in R^rows, a in R^cols.
    pub fn outer(b: &[f64], a: &[f64]) -> Self {
        Mat::from_fn(b.len(), a.len(), |i, j| b[i] * a[j])
    }

    /// Symmetrized tensor product (b a^T + a b^T) / 2; requires equal lengths.
    pub fn sym_outer(b: &[f64], a: &[f64]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        Mat::from_fn(b.len(), a.len(), |i, j| 0.5 * (b[i] * a[j] + a[i] * b[j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data.as_slice()[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data.as_mut_slice()[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        self.data.as_slice()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data.as_slice()[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for x in out.data.as_mut_slice() {
            *x *= s;
        }
        out
    }

    /// self + s * other (shapes must match).
    pub fn add_scaled(&self, s: f64, other: &Mat) -> Mat {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.as_mut_slice().iter_mut().zip(other.data.as_slice()) {
            *a += s * b;
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius inner product tr(self^T other).
    pub fn dot(&self, other: &Mat) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.as_slice().iter().zip(other.data.as_slice()).map(|(a, b)| a * b).sum()
    }

    /// (self + self^T) / 2; requires a square matrix.
    pub fn symmetrize(&self) -> Mat {
        debug_assert_eq!(self.rows, self.cols);
        Mat::from_fn(self.rows, self.cols, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        Mat::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Full decomposition a = u * diag(sigma) * v^T with sigma sorted descending.
/// u is rows x r and v is cols x r where r = min(rows, cols).
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Mat,
    pub v: Mat,
    pub sigma: Vec<f64>,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD. Orthogonalizes the columns of the (possibly
/// transposed) input by plane rotations; column norms become the singular
/// values. Converges in a handful of sweeps for these sizes.
pub fn svd(a: &Mat) -> Svd {
    // Work with the orientation that has the fewer columns.
    let transposed = a.rows < a.cols;
    let mut w = if transposed { a.transpose() } else { a.clone() };
    let m = w.rows;
    let k = w.cols;
    let mut v = Mat::identity(k);

    let scale = w.frobenius();
    let tol = JACOBI_TOL * scale.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if gamma.abs() <= tol * tol || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w.get(i, p);
                    let wq = w.get(i, q);
                    w.set(i, p, c * wp - s * wq);
                    w.set(i, q, s * wp + c * wq);
                }
                for i in 0..k {
                    let vp = v.get(i, p);
                    let vq = v.get(i, q);
                    v.set(i, p, c * vp - s * vq);
                    v.set(i, q, s * vp + c * vq);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sigma: Vec<f64> = (0..k)
        .map(|j| (0..m).map(|i| w.get(i, j).powi(2)).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());

    let mut u = Mat::zeros(m, k);
    let mut vs = Mat::zeros(k, k);
    let mut sig_sorted = vec![0.0; k];
    for (new_j, &old_j) in order.iter().enumerate() {
        sig_sorted[new_j] = sigma[old_j];
        let s = sigma[old_j];
        for i in 0..m {
            u.set(i, new_j, if s > tol { w.get(i, old_j) / s } else { 0.0 });
        }
        for i in 0..k {
            vs.set(i, new_j, v.get(i, old_j));
        }
    }
    sigma = sig_sorted;

    if transposed {
        Svd { u: vs, v: u, sigma }
    } else {
        Svd { u, v: vs, sigma }
    }
}

/// Singular values only, sorted descending.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    svd(a).sigma
}

/// Standard normal sample via Box-Muller (keeps the RNG stream simple and
/// reproducible across platforms).
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

pub fn gaussian_vec(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn gaussian_mat(rows: usize, cols: usize, rng: &mut impl Rng) -> Mat {
    Mat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-ish random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Mat {
    loop {
        let g = gaussian_mat(n, n, rng);
        let mut cols: Vec<Vec<f64>> = (0..n).map(|j| g.col(j)).collect();
        let mut ok = true;
        for j in 0..n {
            // Two passes of re-orthogonalization for stability.
            for _ in 0..2 {
                for i in 0..j {
                    let proj: f64 = cols[j].iter().zip(&cols[i]).map(|(a, b)| a * b).sum();
                    let prev = cols[i].clone();
                    for (x, p) in cols[j].iter_mut().zip(&prev) {
                        *x -= proj * p;
                    }
                }
            }
            let norm: f64 = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            for x in cols[j].iter_mut() {
                *x /= norm;
            }
        }
        if ok {
            return Mat::from_fn(n, n, |i, j| cols[j][i]);
        }
    }
}

pub fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn vec_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svd_diagonal() {
        let a = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let s = singular_values(&a);
        assert_abs_diff_eq!(s[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let rows = rng.gen_range(1..=6);
            let cols = rng.gen_range(1..=6);
            let a = gaussian_mat(rows, cols, &mut rng);
            let dec = svd(&a);
            let r = dec.sigma.len();
            let recon = Mat::from_fn(rows, cols, |i, j| {
                (0..r).map(|k| dec.u.get(i, k) * dec.sigma[k] * dec.v.get(j, k)).sum()
            });
            assert!(recon.add_scaled(-1.0, &a).frobenius() < 1e-10 * (1.0 + a.frobenius()));
            // Singular vectors orthonormal on the nonzero part.
            for k in 0..r {
                if dec.sigma[k] > 1e-9 {
                    let u_k: Vec<f64> = (0..rows).map(|i| dec.u.get(i, k)).collect();
                    assert_abs_diff_eq!(vec_norm(&u_k), 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn svd_zero_matrix() {
        let a = Mat::zeros(3, 2);
        let s = singular_values(&a);
        assert!(s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=5 {
            let q = random_orthogonal(n, &mut rng);
            let qtq = q.transpose().matmul(&q);
            assert!(qtq.add_scaled(-1.0, &Mat::identity(n)).frobenius() < 1e-10);
        }
    }
}
