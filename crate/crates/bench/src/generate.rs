//! Synthetic problems: a 1D heat equation and sparse multiplicative noise.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scare_core::problem::{OriginalProblem, StandardProblem};
use scare_core::SparseMat;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::loader::LoadedProblem;

/// Uniform on `(0, 1]`.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// `ns * (M .* sprand(M))`: every stored entry of `A` (and every entry of
/// `B`) is kept with probability `density` and multiplied by `ns * u`,
/// `u ~ U(0, 1]`.
pub fn gen_noise_blocks(a: &SparseMat, b: &Mat<f64>, ns: f64, density: f64, seed: u64) -> (SparseMat, Mat<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let density = density.clamp(0.0, 1.0);
    let keep = |rng: &mut ChaCha8Rng| density >= 1.0 || rng.gen_bool(density);
    let mut vals = Vec::with_capacity(a.nnz());
    for &v in a.values() {
        let k = keep(&mut rng);
        let u = unit(&mut rng);
        vals.push(if k { ns * v * u } else { 0.0 });
    }
    let a1 = a.with_values(vals);
    let b1 = Mat::from_fn(b.nrows(), b.ncols(), |i, j| {
        let k = keep(&mut rng);
        let u = unit(&mut rng);
        if k {
            ns * b[(i, j)] * u
        } else {
            0.0
        }
    });
    (a1, b1)
}

/// Parameters of [`gen_heat_problem`]; the textual form is
/// `heat:n=1357,m=7,l=6[,mass=1][,scale=1e-4][,react=1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatSpec {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    #[serde(default)]
    pub mass: bool,
    /// Diffusion coefficient multiplying `(n+1)² tridiag(1, -2, 1)`.
    #[serde(default = "one")]
    pub scale: f64,
    /// Uniform damping subtracted from the diagonal.
    #[serde(default)]
    pub react: f64,
}

fn one() -> f64 {
    1.0
}

impl HeatSpec {
    pub fn new(n: usize, m: usize, l: usize) -> Self {
        Self { n, m, l, mass: false, scale: 1.0, react: 0.0 }
    }

    /// Rail-sized: `n = 1357`, `m = 7`, `l = 6`.
    pub fn rail_small() -> Self {
        Self::new(1357, 7, 6)
    }
}

impl fmt::Display for HeatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "heat:n={},m={},l={}", self.n, self.m, self.l)?;
        if self.mass {
            write!(f, ",mass=1")?;
        }
        if self.scale != 1.0 {
            write!(f, ",scale={}", self.scale)?;
        }
        if self.react != 0.0 {
            write!(f, ",react={}", self.react)?;
        }
        Ok(())
    }
}

impl FromStr for HeatSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| BenchError::Config(format!("generator {s:?}: {msg}"));
        let rest = s.strip_prefix("heat:").or_else(|| (s == "heat").then_some("")).ok_or_else(|| bad("only `heat` is known".into()))?;
        let mut spec = HeatSpec::rail_small();
        for kv in rest.split(',').filter(|t| !t.is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {kv:?}")))?;
            let int = || v.parse::<usize>().map_err(|_| bad(format!("bad value for {k}")));
            match k.trim() {
                "n" => spec.n = int()?,
                "m" => spec.m = int()?,
                "l" => spec.l = int()?,
                "mass" => spec.mass = int()? != 0,
                "scale" => spec.scale = v.parse().map_err(|_| bad("bad scale".into()))?,
                "react" => spec.react = v.parse().map_err(|_| bad("bad react".into()))?,
                other => return Err(bad(format!("unknown key {other}"))),
            }
        }
        if spec.n < 3 || spec.m == 0 || spec.l == 0 || !(spec.scale > 0.0) || !(spec.react >= 0.0) {
            return Err(bad("need n >= 3, m, l >= 1 and a positive scale, nonnegative react".into()));
        }
        Ok(spec)
    }
}

fn tridiag(n: usize, lower: f64, diag: f64, upper: f64) -> SparseMat {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, lower));
        }
        t.push((i, i, diag));
        if i + 1 < n {
            t.push((i, i + 1, upper));
        }
    }
    SparseMat::from_triplets(n, n, &t).expect("indices in range")
}

/// Random dense matrix whose columns have unit norm.
fn unit_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat<f64> {
    let mut m = Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
    for j in 0..cols {
        let s = m.col(j).norm_l2();
        for i in 0..rows {
            m[(i, j)] /= s;
        }
    }
    m
}

/// 1D diffusion on `n` interior nodes with random unit-norm inputs and
/// outputs; `E` is the linear finite element mass matrix when asked.
pub fn gen_heat_problem(spec: &HeatSpec, seed: u64) -> Result<StandardProblem> {
    if spec.n < 3 {
        return Err(BenchError::Config(format!("heat problem needs n >= 3, got {}", spec.n)));
    }
    let n = spec.n;
    let h2 = ((n + 1) as f64).powi(2) * spec.scale;
    let a = tridiag(n, h2, -2.0 * h2 - spec.react, h2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = unit_columns(&mut rng, n, spec.m);
    let c = unit_columns(&mut rng, n, spec.l).transpose().to_owned();
    let e = spec.mass.then(|| tridiag(n, 1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0));
    Ok(StandardProblem::new(a, b, c, vec![], vec![], e)?)
}

/// Adds one noise term per `(scale, seed)` pair to a deterministic problem.
/// Reusing a seed reproduces the same block, so combined cases share the
/// blocks of the single-term cases.
pub fn with_noise(p: LoadedProblem, terms: &[(f64, u64)]) -> Result<LoadedProblem> {
    if terms.is_empty() {
        return Ok(p);
    }
    if p.r() != 1 {
        return Err(BenchError::Config(format!("noise can only be added to r = 1 problems, got r = {}", p.r())));
    }
    if let Some((ns, _)) = terms.iter().find(|(s, _)| !(*s >= 0.0)) {
        return Err(BenchError::Config(format!("noise scale {ns} must be nonnegative")));
    }
    let blocks = |a: &SparseMat, b: &Mat<f64>| -> (Vec<SparseMat>, Vec<Mat<f64>>) {
        terms.iter().map(|&(ns, seed)| gen_noise_blocks(a, b, ns, 1.0, seed)).unzip()
    };
    Ok(match p {
        LoadedProblem::Standard(s) => {
            let (ah, bh) = blocks(s.a(), s.b());
            LoadedProblem::Standard(StandardProblem::new(s.a().clone(), s.b().clone(), s.c().clone(), ah, bh, s.e().cloned())?)
        }
        LoadedProblem::Original(o) => {
            let (ah, bh) = blocks(&o.a()[0], &o.b()[0]);
            let mut a = vec![o.a()[0].clone()];
            a.extend(ah);
            let mut b = vec![o.b()[0].clone()];
            b.extend(bh);
            let l = o.has_cross_term().then(|| o.l().clone());
            LoadedProblem::Original(OriginalProblem::new(a, b, o.c().clone(), l, o.weight().clone(), o.e().cloned())?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_labels_round_trip() {
        let s: HeatSpec = "heat:n=40,m=2,l=3,mass=1,scale=0.5".parse().unwrap();
        assert_eq!(s, HeatSpec { n: 40, m: 2, l: 3, mass: true, scale: 0.5, react: 0.0 });
        assert_eq!(s.to_string().parse::<HeatSpec>().unwrap(), s);
        assert_eq!("heat".parse::<HeatSpec>().unwrap(), HeatSpec::rail_small());
        assert!("heat:n=2".parse::<HeatSpec>().is_err());
        assert!("rail:n=5".parse::<HeatSpec>().is_err());
    }
}
