//! Real shift generation from a projection of the current closed loop onto
//! the span of recent residual factors.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::dense::{hstack, upper_rsolve};
use crate::engine::SolverState;
use crate::error::{Error, Result};
use crate::kernels::{ShiftedFactorization, ShiftedPencil};
use crate::problem::StandardProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftStrategy {
    Hamiltonian,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMode {
    /// Use every stable eigenvalue of one projection before recomputing.
    Cached,
    /// Recompute in every iteration.
    PerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftConfig {
    pub strategy: ShiftStrategy,
    pub window: usize,
    pub mode: ShiftMode,
    /// Smallest admissible shift; `None` means `1e-8 ‖A‖₁`.
    #[serde(default)]
    pub gamma_floor: Option<f64>,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        Self { strategy: ShiftStrategy::Hamiltonian, window: 1, mode: ShiftMode::Cached, gamma_floor: None }
    }
}

impl ShiftConfig {
    pub fn new(strategy: ShiftStrategy, window: usize, mode: ShiftMode) -> Self {
        Self { strategy, window, mode, gamma_floor: None }
    }

    /// The twelve variants `hami 1/2/5`, `hami c 1/2/5`, `proj 1/2/5`, `proj c 1/2/5`.
    pub fn variants() -> Vec<ShiftConfig> {
        let mut out = Vec::with_capacity(12);
        for strategy in [ShiftStrategy::Hamiltonian, ShiftStrategy::Projection] {
            for mode in [ShiftMode::Cached, ShiftMode::PerIteration] {
                for window in [1, 2, 5] {
                    out.push(ShiftConfig::new(strategy, window, mode));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Invalid("shift window must be at least 1".into()));
        }
        if let Some(f) = self.gamma_floor {
            if !(f > 0.0) {
                return Err(Error::Invalid(format!("gamma floor {f} must be positive")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ShiftConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.strategy {
            ShiftStrategy::Hamiltonian => "hami",
            ShiftStrategy::Projection => "proj",
        };
        match self.mode {
            ShiftMode::Cached => write!(f, "{name} {}", self.window),
            ShiftMode::PerIteration => write!(f, "{name} c {}", self.window),
        }
    }
}

impl FromStr for ShiftConfig {
    type Err = Error;

    /// Parses labels such as `hami 1`, `proj c 5` or `hami-c-2`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(|c: char| c.is_whitespace() || c == '-' || c == '_').filter(|p| !p.is_empty()).collect();
        let bad = || Error::Invalid(format!("unrecognized shift variant {s:?}"));
        let strategy = match parts.first().copied() {
            Some("hami") | Some("hamiltonian") => ShiftStrategy::Hamiltonian,
            Some("proj") | Some("projection") => ShiftStrategy::Projection,
            _ => return Err(bad()),
        };
        let (mode, rest) = match parts.get(1).copied() {
            Some("c") => (ShiftMode::PerIteration, &parts[2..]),
            _ => (ShiftMode::Cached, &parts[1..]),
        };
        let window = match rest {
            [w] => w.parse().map_err(|_| bad())?,
            _ => return Err(bad()),
        };
        let cfg = ShiftConfig::new(strategy, window, mode);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Shifts computed at one iteration and not yet used.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ShiftCache {
    pub pending: VecDeque<f64>,
    pub source_iteration: usize,
}

impl ShiftCache {
    pub fn new(pending: impl IntoIterator<Item = f64>, source_iteration: usize) -> Self {
        Self { pending: pending.into_iter().collect(), source_iteration }
    }
}

/// Columns whose norm falls below this fraction after orthogonalization are
/// treated as linearly dependent.
const BASIS_DROP_TOL: f64 = 1e-10;

/// Orthonormal basis of the span of the last `s` factors (each `ℓ x n`,
/// newest last), or of `fallbackᵀ` when there is no history.
pub fn build_basis(history: &[Mat<f64>], s: usize, fallback: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let take = s.min(history.len());
    let cols: Vec<MatRef<'_, f64>> = if take == 0 {
        vec![fallback.transpose()]
    } else {
        history[history.len() - take..].iter().rev().map(|m| m.transpose()).collect()
    };
    orthonormalize(hstack(&cols).as_ref())
}

/// Gram-Schmidt with one reorthogonalization pass, dropping dependent columns.
pub fn orthonormalize(w: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = w.nrows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for j in 0..w.ncols() {
        let mut v: Vec<f64> = (0..n).map(|i| w[(i, j)]).collect();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm0 > 0.0) {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm0);
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > BASIS_DROP_TOL {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(Mat::from_fn(n, basis.len(), |i, j| basis[j][i]))
}

/// Projected closed-loop data of the CARE surrogate.
#[derive(Debug, Clone)]
pub struct Projected {
    /// `Uᵀ (A + BF) W`.
    pub a: Mat<f64>,
    /// `(Uᵀ B Kpi⁻¹)(Uᵀ B Kpi⁻¹)ᵀ`.
    pub g: Mat<f64>,
    /// `(C W)ᵀ (C W)`.
    pub q: Mat<f64>,
}

/// Projects the current closed loop onto `U`. With a mass matrix the right
/// basis is `W = E⁻¹U`; `mass` must then factor `E`.
pub fn project(
    u: MatRef<'_, f64>,
    p: &StandardProblem,
    f: MatRef<'_, f64>,
    kpi: MatRef<'_, f64>,
    c: MatRef<'_, f64>,
    mass: Option<&ShiftedFactorization>,
) -> Result<Projected> {
    let w = match mass {
        Some(fac) => fac.solve(u)?,
        None => u.to_owned(),
    };
    let ut = u.transpose();
    let ub = ut * p.b();
    let a = ut * p.a().mul_dense(&w)? + &ub * (f * &w);
    let ubk = upper_rsolve(ub.as_ref(), kpi);
    let g = &ubk * ubk.transpose();
    let cw = c * &w;
    let q = cw.transpose() * &cw;
    Ok(Projected { a, g, q })
}

/// A stable eigenvalue together with its ranking data.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    gamma: f64,
    weight: f64,
    imag: f64,
}

/// Two weights closer than this count as equal.
const WEIGHT_TIE: f64 = 1e-10;
const DEDUP_REL: f64 = 1e-12;

fn rank_candidates(mut cands: Vec<Candidate>, floor: f64) -> Vec<f64> {
    // Chain weights into tie groups first so the final order is a total one.
    cands.sort_by(|x, y| y.weight.total_cmp(&x.weight));
    let mut keyed: Vec<(usize, Candidate)> = Vec::with_capacity(cands.len());
    let mut group = 0;
    for (i, c) in cands.iter().enumerate() {
        if i > 0 && cands[i - 1].weight - c.weight > WEIGHT_TIE {
            group += 1;
        }
        keyed.push((group, *c));
    }
    keyed.sort_by(|(gx, x), (gy, y)| gx.cmp(gy).then(x.imag.total_cmp(&y.imag)).then(y.gamma.total_cmp(&x.gamma)));
    let mut out: Vec<f64> = Vec::new();
    for (_, c) in keyed {
        let g = c.gamma.max(floor);
        if !out.iter().any(|o| (o - g).abs() <= DEDUP_REL * o.abs().max(g.abs())) {
            out.push(g);
        }
    }
    out
}

/// Shifts from the Hamiltonian `[[Ā, Ḡ], [Q̄, -Āᵀ]]`: `-Re λ` over stable
/// eigenvalues, ranked by the norm of the lower half of the unit eigenvector
/// (largest first), then by `|Im λ|` (smallest first), then by `|Re λ|`.
pub fn hamiltonian_candidates(proj: &Projected, floor: f64) -> Result<Vec<f64>> {
    let d = proj.a.nrows();
    let h = Mat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, true) => proj.a[(i, j)],
        (true, false) => proj.g[(i, j - d)],
        (false, true) => proj.q[(i - d, j)],
        (false, false) => -proj.a[(j - d, i - d)],
    });
    let eig = h.eigen().map_err(|e| Error::ShiftFailure(format!("Hamiltonian eigensolver: {e:?}")))?;
    let vals = eig.S().column_vector();
    let vecs = eig.U();
    let mut cands = Vec::new();
    for k in 0..2 * d {
        let lam = vals[k];
        if !(lam.re < 0.0) {
            continue;
        }
        let total: f64 = (0..2 * d).map(|i| vecs[(i, k)].norm_sqr()).sum();
        let lower: f64 = (d..2 * d).map(|i| vecs[(i, k)].norm_sqr()).sum();
        let weight = if total > 0.0 { (lower / total).sqrt() } else { 0.0 };
        cands.push(Candidate { gamma: -lam.re, weight, imag: lam.im.abs() });
    }
    Ok(rank_candidates(cands, floor))
}

/// Shifts `-Re λ` over the stable eigenvalues of `Ā`, most negative first.
pub fn projection_candidates(a: MatRef<'_, f64>, floor: f64) -> Result<Vec<f64>> {
    let vals = a.to_owned().eigenvalues().map_err(|e| Error::ShiftFailure(format!("projected eigensolver: {e:?}")))?;
    let mut cands: Vec<Candidate> = vals
        .iter()
        .filter(|l| l.re < 0.0)
        .map(|l| Candidate { gamma: -l.re, weight: 0.0, imag: 0.0 })
        .collect();
    cands.sort_by(|x, y| y.gamma.total_cmp(&x.gamma));
    Ok(rank_candidates(cands, floor))
}

/// Residual-Hamiltonian shifts for the basis `u`, falling back to projection
/// shifts when the Hamiltonian has no stable eigenvalue.
pub fn hamiltonian_shifts(
    u: MatRef<'_, f64>,
    p: &StandardProblem,
    state: &SolverState,
    floor: f64,
    mass: Option<&ShiftedFactorization>,
) -> Result<ShiftCache> {
    let proj = project(u, p, state.f.as_ref(), state.kpi.as_ref(), state.c.as_ref(), mass)?;
    let mut list = hamiltonian_candidates(&proj, floor)?;
    if list.is_empty() {
        list = projection_candidates(proj.a.as_ref(), floor)?;
    }
    if list.is_empty() {
        return Err(Error::ShiftFailure("no stable eigenvalue in the projected problem".into()));
    }
    Ok(ShiftCache::new(list, state.k))
}

pub fn projection_shifts(
    u: MatRef<'_, f64>,
    p: &StandardProblem,
    state: &SolverState,
    floor: f64,
    mass: Option<&ShiftedFactorization>,
) -> Result<ShiftCache> {
    let proj = project(u, p, state.f.as_ref(), state.kpi.as_ref(), state.c.as_ref(), mass)?;
    let list = projection_candidates(proj.a.as_ref(), floor)?;
    if list.is_empty() {
        return Err(Error::ShiftFailure("projected closed loop has no stable eigenvalue".into()));
    }
    Ok(ShiftCache::new(list, state.k))
}

/// Per-solve shift generator.
#[derive(Debug)]
pub struct ShiftEngine {
    cfg: ShiftConfig,
    floor: f64,
    mass: Option<ShiftedFactorization>,
    cache: ShiftCache,
    iteration: Option<usize>,
    recomputed: bool,
    last: Option<f64>,
    computations: usize,
}

impl ShiftEngine {
    pub fn new(cfg: ShiftConfig, p: &StandardProblem) -> Result<Self> {
        cfg.validate()?;
        let floor = cfg.gamma_floor.unwrap_or_else(|| 1e-8 * p.a().norm_one()).max(f64::MIN_POSITIVE);
        let mass = match p.e() {
            Some(e) => Some(ShiftedPencil::new(e, None)?.factor(0.0).map_err(|_| Error::Singular("E"))?),
            None => None,
        };
        Ok(Self { cfg, floor, mass, cache: ShiftCache::default(), iteration: None, recomputed: false, last: None, computations: 0 })
    }

    pub fn config(&self) -> &ShiftConfig {
        &self.cfg
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn cache(&self) -> &ShiftCache {
        &self.cache
    }

    /// How many projections have been computed so far.
    pub fn computations(&self) -> usize {
        self.computations
    }

    /// Computes the full candidate list for the current state.
    pub fn compute(&self, p: &StandardProblem, state: &SolverState) -> Result<ShiftCache> {
        let history: Vec<Mat<f64>> = state.s_history.iter().cloned().collect();
        let u = build_basis(&history, self.cfg.window, state.c.as_ref())?;
        match self.cfg.strategy {
            ShiftStrategy::Hamiltonian => hamiltonian_shifts(u.as_ref(), p, state, self.floor, self.mass.as_ref()),
            ShiftStrategy::Projection => projection_shifts(u.as_ref(), p, state, self.floor, self.mass.as_ref()),
        }
    }

    /// The shift for the iteration that starts from `state`. Calling it
    /// again for the same iteration (after a rejected shift) yields the
    /// next candidate.
    pub fn next(&mut self, p: &StandardProblem, state: &SolverState) -> Result<f64> {
        if self.iteration != Some(state.k) {
            self.iteration = Some(state.k);
            self.recomputed = false;
            if self.cfg.mode == ShiftMode::PerIteration {
                self.cache.pending.clear();
            }
        }
        if self.cache.pending.is_empty() {
            if self.recomputed {
                // Every candidate of this iteration was rejected.
                let g = self.last.map_or(1.0, |g| g * 1.5).max(self.floor);
                self.last = Some(g);
                return Ok(g);
            }
            self.cache = self.compute(p, state)?;
            self.recomputed = true;
            self.computations += 1;
        }
        let g = self.cache.pending.pop_front().ok_or_else(|| Error::ShiftFailure("empty shift list".into()))?;
        self.last = Some(g);
        Ok(g)
    }
}

/// Queue form of shift selection: per-iteration mode recomputes, cached mode
/// pops and recomputes once the queue is empty.
pub fn next_shift(
    cfg: &ShiftConfig,
    mut cache: ShiftCache,
    p: &StandardProblem,
    state: &SolverState,
) -> Result<(f64, ShiftCache)> {
    if cfg.mode == ShiftMode::PerIteration || cache.pending.is_empty() {
        let engine = ShiftEngine::new(*cfg, p)?;
        cache = engine.compute(p, state)?;
    }
    let g = cache.pending.pop_front().ok_or_else(|| Error::ShiftFailure("empty shift list".into()))?;
    Ok((g, cache))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        let all = ShiftConfig::variants();
        assert_eq!(all.len(), 12);
        for cfg in all {
            assert_eq!(cfg.to_string().parse::<ShiftConfig>().unwrap(), cfg);
        }
        assert_eq!("hami c 1".parse::<ShiftConfig>().unwrap().mode, ShiftMode::PerIteration);
        assert!("hami 0".parse::<ShiftConfig>().is_err());
    }

    #[test]
    fn scalar_hamiltonian() {
        let one = Mat::from_fn(1, 1, |_, _| 1.0);
        let proj = Projected { a: -&one, g: one.clone(), q: one };
        let g = hamiltonian_candidates(&proj, 1e-8).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_projection() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { [-1.0, -3.0, -2.0][i] } else { 0.0 });
        assert_eq!(projection_candidates(a.as_ref(), 1e-8).unwrap(), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn duplicate_factors_collapse() {
        let s = Mat::from_fn(2, 6, |i, j| ((i * 6 + j) as f64).sin());
        let u = build_basis(&[s.clone(), s.clone()], 2, s.as_ref()).unwrap();
        assert_eq!(u.ncols(), 2);
        let err = build_basis(&[], 1, Mat::<f64>::zeros(2, 6).as_ref()).unwrap_err();
        assert!(matches!(err, Error::EmptyBasis));
    }
}
