//! Seeded random problems that are mean-square stable at `X = 0`.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::problem::{OriginalProblem, StandardProblem};
use crate::sparse::SparseMat;

#[derive(Debug, Clone)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    /// Number of terms including the deterministic one.
    pub r: usize,
    /// Off-diagonal fill of `A` and of each noise block.
    pub density: f64,
    /// Total Frobenius norm of all noise blocks together.
    pub noise: f64,
    /// Add a nonidentity SPD mass matrix.
    pub mass: bool,
}

impl GenSpec {
    pub fn new(n: usize, m: usize, l: usize, r: usize) -> Self {
        Self { n, m, l, r, density: 0.1, noise: 0.5, mass: false }
    }

    pub fn with_mass(mut self) -> Self {
        self.mass = true;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }
}

fn sprand(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density.clamp(0.0, 1.0)) {
                t.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    t
}

/// Sparse `A` with `A + Aᵀ ≼ -2I`: the diagonal dominates the averaged row
/// and column sums.
pub fn stable_matrix(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseMat {
    let mut t = sprand(rng, n, density);
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];
    for &(i, j, v) in &t {
        rows[i] += v.abs();
        cols[j] += v.abs();
    }
    for i in 0..n {
        t.push((i, i, -(1.0 + 0.5 * (rows[i] + cols[i]) + rng.gen_range(0.0..1.0))));
    }
    SparseMat::from_triplets(n, n, &t).expect("valid triplets")
}

fn noise_blocks(rng: &mut ChaCha8Rng, spec: &GenSpec) -> Vec<SparseMat> {
    let k = spec.r.saturating_sub(1);
    (0..k)
        .map(|_| {
            let mut t = sprand(rng, spec.n, spec.density);
            for i in 0..spec.n {
                t.push((i, i, rng.gen_range(-1.0..1.0)));
            }
            let s = SparseMat::from_triplets(spec.n, spec.n, &t).expect("valid triplets");
            let scale = spec.noise / (k as f64).sqrt() / s.norm_fro().max(f64::MIN_POSITIVE);
            s.scaled(scale)
        })
        .collect()
}

fn dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat<f64> {
    Mat::from_fn(rows, cols, |_, _| scale * rng.gen_range(-1.0..1.0))
}

/// `I` plus a small SPD tridiagonal perturbation.
pub fn mass_matrix(rng: &mut ChaCha8Rng, n: usize) -> SparseMat {
    let mut t = Vec::new();
    for i in 0..n {
        t.push((i, i, 1.0 + rng.gen_range(0.1..0.3)));
        if i + 1 < n {
            let v = rng.gen_range(-0.05..0.05);
            t.push((i, i + 1, v));
            t.push((i + 1, i, v));
        }
    }
    SparseMat::from_triplets(n, n, &t).expect("valid triplets")
}

/// A natively standard problem.
pub fn random_standard(spec: &GenSpec, seed: u64) -> Result<StandardProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let a = stable_matrix(&mut rng, n, spec.density);
    let ahat = noise_blocks(&mut rng, spec);
    let b = dense(&mut rng, n, spec.m, 1.0);
    let bhat = (1..spec.r).map(|_| dense(&mut rng, n, spec.m, spec.noise)).collect();
    let c = dense(&mut rng, spec.l, n, 1.0);
    let e = spec.mass.then(|| mass_matrix(&mut rng, n));
    StandardProblem::new(a, b, c, ahat, bhat, e)
}

/// An original-form problem with an SPD weight and, if asked, a cross term.
pub fn random_original(spec: &GenSpec, seed: u64, cross_term: bool) -> Result<OriginalProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let m = spec.m;
    let mut a = vec![stable_matrix(&mut rng, n, spec.density)];
    a.extend(noise_blocks(&mut rng, spec));
    let mut b = vec![dense(&mut rng, n, m, 1.0)];
    b.extend((1..spec.r).map(|_| dense(&mut rng, n, m, spec.noise)));
    let c = dense(&mut rng, spec.l, n, 1.0);
    let l = cross_term.then(|| dense(&mut rng, n, m, 0.2));
    let w = dense(&mut rng, m, m, 1.0);
    let mut weight = &w * w.transpose();
    for i in 0..m {
        weight[(i, i)] += 0.5 + m as f64 * 0.1;
    }
    let e = spec.mass.then(|| mass_matrix(&mut rng, n));
    OriginalProblem::new(a, b, c, l, weight, e)
}
