//! The general left semi-tensor product on small dense matrices.
//!
//! The solver itself only needs the stacked-block case in
//! [`super::stacked`]; this module exists to check the product identities.

use faer::{Mat, MatRef};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::{kron_eye_right, lu_inverse, rel_diff, shape};
use crate::error::{Error, Result};

/// `a ⋉ b`: `(a ⊗ I_{p/n}) b` when `n | p`, `a (b ⊗ I_{n/p})` when `p | n`.
pub fn semi_tensor(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let (n, p) = (a.ncols(), b.nrows());
    if n == 0 || p == 0 {
        return Err(Error::dims("semi-tensor product", shape(a), shape(b)));
    }
    if p % n == 0 {
        Ok(kron_eye_right(a, p / n) * b)
    } else if n % p == 0 {
        Ok(a * kron_eye_right(b, n / p))
    } else {
        Err(Error::dims("semi-tensor product", shape(a), shape(b)))
    }
}

/// Left-to-right product `m_1 ⋉ m_2 ⋉ ...`.
pub fn semi_tensor_chain(ms: &[MatRef<'_, f64>]) -> Result<Mat<f64>> {
    let (first, rest) = ms.split_first().ok_or_else(|| Error::Invalid("empty product".into()))?;
    rest.iter().try_fold(first.to_owned(), |acc, m| semi_tensor(acc.as_ref(), *m))
}

fn plus_identity(m: Mat<f64>) -> Mat<f64> {
    let k = m.nrows();
    m + Mat::<f64>::identity(k, k)
}

/// Relative deviations of the three product identities. An identity whose
/// inverse does not exist is reported as `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityDeviation {
    /// `U ⋉ (I + V ⋉ U) = (I + U ⋉ V) ⋉ U`
    pub push_through: f64,
    /// `U ⋉ (I + V ⋉ U)^{-1} = (I + U ⋉ V)^{-1} ⋉ U`
    pub push_through_inverse: Option<f64>,
    /// The Sherman-Morrison-Woodbury form of `M^{-1} - (M + U ⋉ D ⋉ V)^{-1}`.
    pub smw: Option<f64>,
}

impl IdentityDeviation {
    pub fn max(&self) -> f64 {
        [Some(self.push_through), self.push_through_inverse, self.smw]
            .into_iter()
            .flatten()
            .fold(0.0, f64::max)
    }
}

/// Evaluates both push-through identities for `u`, `v` by explicit Kronecker
/// expansion. `V ⋉ U` and `U ⋉ V` must be square.
pub fn push_through_deviation(u: MatRef<'_, f64>, v: MatRef<'_, f64>) -> Result<(f64, Option<f64>)> {
    let vu = plus_identity(semi_tensor(v, u)?);
    let uv = plus_identity(semi_tensor(u, v)?);
    if vu.nrows() != vu.ncols() || uv.nrows() != uv.ncols() {
        return Err(Error::Invalid("V ⋉ U and U ⋉ V must be square".into()));
    }
    let lhs = semi_tensor(u, vu.as_ref())?;
    let rhs = semi_tensor(uv.as_ref(), u)?;
    let dev_a = rel_diff(lhs.as_ref(), rhs.as_ref());

    let dev_b = match (lu_inverse(vu.as_ref(), "I + V ⋉ U"), lu_inverse(uv.as_ref(), "I + U ⋉ V")) {
        (Ok(vu_inv), Ok(uv_inv)) => {
            let lhs = semi_tensor(u, vu_inv.as_ref())?;
            let rhs = semi_tensor(uv_inv.as_ref(), u)?;
            Some(rel_diff(lhs.as_ref(), rhs.as_ref()))
        }
        _ => None,
    };
    Ok((dev_a, dev_b))
}

/// Deviation of the SMW identity, or `None` when one of the inverses fails.
pub fn smw_deviation(m: MatRef<'_, f64>, u: MatRef<'_, f64>, d: MatRef<'_, f64>, v: MatRef<'_, f64>) -> Result<Option<f64>> {
    let (Ok(m_inv), Ok(d_inv)) = (lu_inverse(m, "M"), lu_inverse(d, "D")) else {
        return Ok(None);
    };
    let udv = semi_tensor_chain(&[u, d, v])?;
    let Ok(pert_inv) = lu_inverse((m + &udv).as_ref(), "M + U ⋉ D ⋉ V") else {
        return Ok(None);
    };
    let lhs = &m_inv - pert_inv;
    let core = d_inv + semi_tensor_chain(&[v, m_inv.as_ref(), u])?;
    let Ok(core_inv) = lu_inverse(core.as_ref(), "D^{-1} + V ⋉ M^{-1} ⋉ U") else {
        return Ok(None);
    };
    let rhs = semi_tensor_chain(&[m_inv.as_ref(), u, core_inv.as_ref(), v, m_inv.as_ref()])?;
    Ok(Some(rel_diff(lhs.as_ref(), rhs.as_ref())))
}

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Draws a random conformable instance from `seed` and evaluates all three
/// identities.
///
/// `U` is `a x b` and `V` is `bt x at`, so both products with the identity
/// are square. The SMW check uses `M` of order `nt`, `U` `n x d`, `D` of
/// order `dt` and `V` `dt x nt`.
pub fn ltimes_identities_check(seed: u64) -> Result<IdentityDeviation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b, t) = (rng.gen_range(1..=4), rng.gen_range(1..=4), rng.gen_range(1..=3));
    let u = random(&mut rng, a, b);
    let v = random(&mut rng, b * t, a * t);
    // Alternate which operand is the larger one.
    let (dev_a, dev_b) = if seed.is_multiple_of(2) {
        push_through_deviation(u.as_ref(), v.as_ref())?
    } else {
        push_through_deviation(v.as_ref(), u.as_ref())?
    };

    let (n, d, t) = (rng.gen_range(1..=5), rng.gen_range(1..=3), rng.gen_range(1..=3));
    let mut m = random(&mut rng, n * t, n * t);
    for i in 0..n * t {
        m[(i, i)] += 2.0 * (n * t) as f64;
    }
    let su = random(&mut rng, n, d);
    let mut sd = random(&mut rng, d * t, d * t);
    for i in 0..d * t {
        sd[(i, i)] += 2.0 * (d * t) as f64;
    }
    let sv = random(&mut rng, d * t, n * t);
    let smw = smw_deviation(m.as_ref(), su.as_ref(), sd.as_ref(), sv.as_ref())?;
    Ok(IdentityDeviation { push_through: dev_a, push_through_inverse: dev_b, smw })
}
