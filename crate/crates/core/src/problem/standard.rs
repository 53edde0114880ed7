use faer::Mat;

use crate::dense::{shape, upper_rsolve};
use crate::error::{Error, Result};
use crate::kernels::{Block, RowOrder, ShiftedPencil, StackedMat};
use crate::problem::original::OriginalProblem;
use crate::problem::residual::DenseProblem;
use crate::sparse::SparseMat;

/// Largest dimension accepted by the dense reference paths.
pub const DENSE_LIMIT: usize = 2000;

/// A SCARE in standard form
///
/// `CᵀC + AᵀXE + EᵀXA + Âᵀ⋉X⋉Â = (EᵀXB + Âᵀ⋉X⋉B̂)(I + B̂ᵀ⋉X⋉B̂)⁻¹(*)ᵀ`
///
/// together with the starting feedback `F0` and accumulator `Kpi0` of the
/// iteration. A natively standard problem has `F0 = 0` and `Kpi0 = I`; the
/// in-place adapter keeps the original coefficients and moves the weights
/// into `F0`, `Kpi0` instead.
#[derive(Debug, Clone)]
pub struct StandardProblem {
    e: Option<SparseMat>,
    a: SparseMat,
    b: Mat<f64>,
    c: Mat<f64>,
    ahat: StackedMat,
    bhat: StackedMat,
    kron_flip: bool,
    f0: Mat<f64>,
    kpi0: Mat<f64>,
    pencil: ShiftedPencil,
}

impl StandardProblem {
    /// A natively standard problem. `ahat` and `bhat` hold the `r - 1`
    /// stochastic blocks; `e = None` means `E = I`.
    pub fn new(
        a: SparseMat,
        b: Mat<f64>,
        c: Mat<f64>,
        ahat: Vec<SparseMat>,
        bhat: Vec<Mat<f64>>,
        e: Option<SparseMat>,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let ahat = StackedMat::from_sparse_blocks(ahat, n, n)?;
        let bhat = StackedMat::from_dense_blocks(bhat, n, m)?;
        Self::assemble(a, b, c, ahat, bhat, e, false, Mat::zeros(m, n), Mat::identity(m, m))
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        a: SparseMat,
        b: Mat<f64>,
        c: Mat<f64>,
        ahat: StackedMat,
        bhat: StackedMat,
        e: Option<SparseMat>,
        kron_flip: bool,
        f0: Mat<f64>,
        kpi0: Mat<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if a.ncols() != n {
            return Err(Error::dims("A", a.shape(), (n, n)));
        }
        if b.nrows() != n {
            return Err(Error::dims("B", shape(b.as_ref()), (n, m)));
        }
        if c.ncols() != n {
            return Err(Error::dims("C", shape(c.as_ref()), (c.nrows(), n)));
        }
        if (ahat.block_rows(), ahat.block_cols()) != (n, n) {
            return Err(Error::dims("Â block", (ahat.block_rows(), ahat.block_cols()), (n, n)));
        }
        if (bhat.block_rows(), bhat.block_cols()) != (n, m) {
            return Err(Error::dims("B̂ block", (bhat.block_rows(), bhat.block_cols()), (n, m)));
        }
        if ahat.block_count() != bhat.block_count() {
            return Err(Error::Invalid(format!(
                "Â has {} blocks but B̂ has {}",
                ahat.block_count(),
                bhat.block_count()
            )));
        }
        if shape(f0.as_ref()) != (m, n) || shape(kpi0.as_ref()) != (m, m) {
            return Err(Error::dims("initial feedback", shape(f0.as_ref()), shape(kpi0.as_ref())));
        }
        let e = match e {
            Some(e) if e.is_identity() => None,
            other => other,
        };
        if let Some(e) = &e {
            if e.shape() != (n, n) {
                return Err(Error::dims("E", e.shape(), (n, n)));
            }
        }
        let pencil = ShiftedPencil::new(&a, e.as_ref())?;
        Ok(Self { e, a, b, c, ahat, bhat, kron_flip, f0, kpi0, pencil })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Number of rows of `C`.
    pub fn l(&self) -> usize {
        self.c.nrows()
    }

    /// Number of noise terms plus one.
    pub fn r(&self) -> usize {
        self.ahat.block_count() + 1
    }

    pub fn a(&self) -> &SparseMat {
        &self.a
    }

    pub fn b(&self) -> &Mat<f64> {
        &self.b
    }

    pub fn c(&self) -> &Mat<f64> {
        &self.c
    }

    pub fn e(&self) -> Option<&SparseMat> {
        self.e.as_ref()
    }

    pub fn ahat(&self) -> &StackedMat {
        &self.ahat
    }

    pub fn bhat(&self) -> &StackedMat {
        &self.bhat
    }

    pub fn kron_flip(&self) -> bool {
        self.kron_flip
    }

    /// Row layout of the stacked products, set by `kron_flip`.
    pub fn row_order(&self) -> RowOrder {
        if self.kron_flip {
            RowOrder::BlockMajor
        } else {
            RowOrder::Interleaved
        }
    }

    pub fn f0(&self) -> &Mat<f64> {
        &self.f0
    }

    pub fn kpi0(&self) -> &Mat<f64> {
        &self.kpi0
    }

    pub fn pencil(&self) -> &ShiftedPencil {
        &self.pencil
    }

    /// The same problem with a different right-hand side factor.
    pub fn with_c(&self, c: Mat<f64>) -> Result<Self> {
        if c.ncols() != self.n() {
            return Err(Error::dims("C", shape(c.as_ref()), (c.nrows(), self.n())));
        }
        Ok(Self { c, ..self.clone() })
    }

    /// `F0 + Kpi0⁻¹ F̂`: converts a standard-form feedback into the feedback
    /// carried by this problem's iteration.
    pub fn native_feedback(&self, fhat: &Mat<f64>) -> Mat<f64> {
        &self.f0 + crate::dense::upper_solve(self.kpi0.as_ref(), fhat.as_ref())
    }

    /// Dense standard-form coefficients with `F0` and `Kpi0` folded in:
    /// `A + B F0`, `B Kpi0⁻¹`, `Âᵢ + B̂ᵢ F0`, `B̂ᵢ Kpi0⁻¹`.
    pub fn to_dense(&self) -> Result<DenseProblem> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
        }
        let a = self.a.to_dense() + &self.b * &self.f0;
        let b = upper_rsolve(self.b.as_ref(), self.kpi0.as_ref());
        let ahat = self
            .ahat
            .blocks()
            .iter()
            .zip(self.bhat.blocks())
            .map(|(ai, bi)| ai.to_dense() + bi.to_dense() * &self.f0)
            .collect();
        let bhat = self
            .bhat
            .blocks()
            .iter()
            .map(|bi| upper_rsolve(bi.to_dense().as_ref(), self.kpi0.as_ref()))
            .collect();
        Ok(DenseProblem { a, b, c: self.c.clone(), ahat, bhat, e: self.e.as_ref().map(SparseMat::to_dense) })
    }
}

/// Explicit transform to standard form: `A = A₀ - B₀R⁻¹Lᵀ`, `B = B₀P⁻¹`,
/// `Âᵢ = Aᵢ - BᵢR⁻¹Lᵀ`, `B̂ᵢ = BᵢP⁻¹` with `PᵀP = R`.
///
/// With a nonzero `L` the shifted coefficients lose their sparsity; use
/// [`adapt_in_place`] for large problems with cross terms.
pub fn standardize(orig: &OriginalProblem) -> Result<StandardProblem> {
    let p = orig.weight_factor()?;
    let n = orig.n();
    let m = orig.m();
    let shift = |ai: &SparseMat, bi: &Mat<f64>, gain: &Option<Mat<f64>>| -> SparseMat {
        match gain {
            Some(g) => SparseMat::from_dense(&(ai.to_dense() - bi * g), 0.0),
            None => ai.clone(),
        }
    };
    let gain = if orig.has_cross_term() { Some(orig.gain()?) } else { None };
    let a = shift(&orig.a()[0], &orig.b()[0], &gain);
    let b = upper_rsolve(orig.b()[0].as_ref(), p.as_ref());
    let ahat: Vec<Block> = orig.a()[1..]
        .iter()
        .zip(&orig.b()[1..])
        .map(|(ai, bi)| Block::Sparse(shift(ai, bi, &gain)))
        .collect();
    let bhat: Vec<Block> = orig.b()[1..]
        .iter()
        .map(|bi| Block::Dense(upper_rsolve(bi.as_ref(), p.as_ref())))
        .collect();
    StandardProblem::assemble(
        a,
        b,
        orig.c().clone(),
        StackedMat::new(ahat, n, n)?,
        StackedMat::new(bhat, n, m)?,
        orig.e().cloned(),
        false,
        Mat::zeros(m, n),
        Mat::identity(m, m),
    )
}

/// Keeps the original coefficients and starts the iteration from
/// `F0 = -R⁻¹Lᵀ`, `Kpi0ᵀKpi0 = R`, with block-major stacking.
pub fn adapt_in_place(orig: &OriginalProblem) -> Result<StandardProblem> {
    let kpi0 = orig.weight_factor()?;
    let n = orig.n();
    let m = orig.m();
    let f0 = if orig.has_cross_term() { -orig.gain()? } else { Mat::zeros(m, n) };
    StandardProblem::assemble(
        orig.a()[0].clone(),
        orig.b()[0].clone(),
        orig.c().clone(),
        StackedMat::from_sparse_blocks(orig.a()[1..].to_vec(), n, n)?,
        StackedMat::from_dense_blocks(orig.b()[1..].to_vec(), n, m)?,
        orig.e().cloned(),
        true,
        f0,
        kpi0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> SparseMat {
        SparseMat::from_triplets(1, 1, &[(0, 0, v)]).unwrap()
    }

    fn m1(v: f64) -> Mat<f64> {
        Mat::from_fn(1, 1, |_, _| v)
    }

    #[test]
    fn trivial_weights_keep_coefficients() {
        let orig = OriginalProblem::new(
            vec![scalar(-1.0), scalar(0.3)],
            vec![m1(1.0), m1(0.2)],
            m1(1.0),
            None,
            m1(1.0),
            None,
        )
        .unwrap();
        let p = standardize(&orig).unwrap();
        assert_eq!(p.a().to_dense()[(0, 0)], -1.0);
        assert_eq!(p.b()[(0, 0)], 1.0);
        assert_eq!(p.ahat().blocks()[0].to_dense()[(0, 0)], 0.3);
        let q = adapt_in_place(&orig).unwrap();
        assert_eq!(q.f0()[(0, 0)], 0.0);
        assert_eq!(q.kpi0()[(0, 0)], 1.0);
        assert!(q.kron_flip());
    }

    #[test]
    fn scalar_weight_scales_input() {
        let orig = OriginalProblem::new(vec![scalar(-1.0)], vec![m1(1.0)], m1(1.0), None, m1(4.0), None).unwrap();
        let p = standardize(&orig).unwrap();
        assert!((p.b()[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p.r(), 1);
        let q = adapt_in_place(&orig).unwrap();
        assert!((q.kpi0()[(0, 0)] - 2.0).abs() < 1e-15);
        let d = q.to_dense().unwrap();
        assert!((d.b[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn indefinite_weight_is_rejected() {
        let err = OriginalProblem::new(vec![scalar(-1.0)], vec![m1(1.0)], m1(1.0), None, m1(-1.0), None).unwrap_err();
        assert!(matches!(err, Error::WeightNotPositiveDefinite));
    }
}
