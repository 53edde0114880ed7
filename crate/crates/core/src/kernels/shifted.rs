//! Shifted sparse solves with `A - γE` and the low-rank corrected variant
//! for `A + BF - γE`.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, MatRef};

use crate::dense::{all_finite, lu_solve, shape};
use crate::error::{Error, Result};
use crate::sparse::SparseMat;

/// Shifted solves are direct, so there is no solver tolerance; the
/// fill-reducing ordering is the backend default.
pub const SPARSE_BACKEND: &str = "faer sparse LU, default ordering";

/// The sparsity pattern of `A - γE` with a symbolic LU computed once.
///
/// Every shift reuses the symbolic analysis; only the numeric
/// factorization is redone.
#[derive(Debug, Clone)]
pub struct ShiftedPencil {
    n: usize,
    symbolic_pattern: SymbolicSparseColMat<usize>,
    symbolic: SymbolicLu<usize>,
    a_vals: Vec<f64>,
    e_vals: Vec<f64>,
}

impl ShiftedPencil {
    /// `e = None` means `E = I`.
    pub fn new(a: &SparseMat, e: Option<&SparseMat>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("shifted pencil", a.shape(), a.shape()));
        }
        let eye;
        let e = match e {
            Some(e) => e,
            None => {
                eye = SparseMat::identity(n);
                &eye
            }
        };
        if e.shape() != a.shape() {
            return Err(Error::dims("shifted pencil", a.shape(), e.shape()));
        }
        // Build both matrices on the union pattern, stored column-wise (the
        // CSR storage of the transpose).
        let zeroed = |m: &SparseMat| m.triplets().into_iter().map(|(i, j, _)| (j, i, 0.0));
        let mut ta: Vec<_> = a.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        ta.extend(zeroed(e));
        let mut te: Vec<_> = e.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        te.extend(zeroed(a));
        let at = SparseMat::from_triplets(n, n, &ta)?;
        let et = SparseMat::from_triplets(n, n, &te)?;
        debug_assert_eq!(at.col_idx(), et.col_idx());

        let pattern = SymbolicSparseColMat::new_checked(n, n, at.row_ptr().to_vec(), None, at.col_idx().to_vec());
        let symbolic = SymbolicLu::try_new(pattern.as_ref())
            .map_err(|e| Error::Invalid(format!("symbolic LU failed: {e:?}")))?;
        Ok(Self {
            n,
            symbolic_pattern: pattern,
            symbolic,
            a_vals: at.values().to_vec(),
            e_vals: et.values().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Numeric LU of `A - γE`.
    pub fn factor(&self, gamma: f64) -> Result<ShiftedFactorization> {
        let vals: Vec<f64> = self.a_vals.iter().zip(&self.e_vals).map(|(a, e)| a - gamma * e).collect();
        let mat = SparseColMatRef::new(self.symbolic_pattern.as_ref(), &vals);
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), mat).map_err(|e| Error::ShiftRejected {
            gamma,
            reason: format!("sparse LU failed: {e:?}"),
        })?;
        let fac = ShiftedFactorization { gamma, n: self.n, lu };
        // The backend does not flag tiny pivots; a probe solve catches the
        // exactly singular case.
        let probe = fac.lu.solve(Mat::<f64>::from_fn(self.n, 1, |i, _| 1.0 + (i % 7) as f64));
        if !all_finite(probe.as_ref()) {
            return Err(Error::ShiftRejected { gamma, reason: "A - γE is singular".into() });
        }
        Ok(fac)
    }
}

/// A numeric factorization of `A - γE`. Read-only after construction, so it
/// can be shared across threads.
#[derive(Debug)]
pub struct ShiftedFactorization {
    gamma: f64,
    n: usize,
    lu: Lu<usize, f64>,
}

impl ShiftedFactorization {
    pub fn new(a: &SparseMat, e: Option<&SparseMat>, gamma: f64) -> Result<Self> {
        ShiftedPencil::new(a, e)?.factor(gamma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(A - γE)^{-1} rhs`.
    pub fn solve(&self, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
        if rhs.nrows() != self.n {
            return Err(Error::dims("shifted solve", (self.n, self.n), shape(rhs)));
        }
        self.checked(self.lu.solve(rhs))
    }

    /// `rows (A - γE)^{-1}`.
    pub fn solve_rows(&self, rows: MatRef<'_, f64>) -> Result<Mat<f64>> {
        if rows.ncols() != self.n {
            return Err(Error::dims("shifted row solve", shape(rows), (self.n, self.n)));
        }
        let x = self.lu.solve_transpose(rows.transpose());
        Ok(self.checked(x)?.transpose().to_owned())
    }

    fn checked(&self, x: Mat<f64>) -> Result<Mat<f64>> {
        if all_finite(x.as_ref()) {
            Ok(x)
        } else {
            Err(Error::ShiftRejected { gamma: self.gamma, reason: "non-finite shifted solve".into() })
        }
    }
}

/// Result of a corrected row solve.
#[derive(Debug, Clone)]
pub struct SmwSolution {
    /// `rows (A + BF - γE)^{-1}`.
    pub x: Mat<f64>,
    /// `x B`, obtained as a by-product.
    pub xb: Mat<f64>,
}

/// Computes `rows (A + BF - γE)^{-1}` from solves with `A - γE` only.
///
/// `rows` and `F` go through the factorization together; the `m x m` core
/// `I + F (A - γE)^{-1} B` is then inverted densely.
pub fn smw_solve(fac: &ShiftedFactorization, b: MatRef<'_, f64>, f: MatRef<'_, f64>, rows: MatRef<'_, f64>) -> Result<SmwSolution> {
    let n = fac.n();
    let m = b.ncols();
    if b.nrows() != n || f.ncols() != n || f.nrows() != m {
        return Err(Error::dims("smw solve", shape(b), shape(f)));
    }
    let t = rows.nrows();
    let f_zero = f.norm_l2() == 0.0;
    let joint = if f_zero {
        fac.solve_rows(rows)?
    } else {
        fac.solve_rows(crate::dense::vstack(&[rows, f]).as_ref())?
    };
    let ra = joint.submatrix(0, 0, t, n);
    let rab = ra * b;
    if f_zero {
        return Ok(SmwSolution { x: ra.to_owned(), xb: rab });
    }
    let fa = joint.submatrix(t, 0, m, n);
    let mut core = fa * b;
    for i in 0..m {
        core[(i, i)] += 1.0;
    }
    // W core = rab  <=>  core^T W^T = rab^T
    let w = lu_solve(core.transpose(), rab.transpose(), "SMW core")
        .map_err(|_| Error::ShiftRejected { gamma: fac.gamma(), reason: "singular SMW core matrix".into() })?
        .transpose()
        .to_owned();
    let x = ra - &w * fa;
    Ok(SmwSolution { x, xb: w })
}

/// `rows (A + BF - γE)^{-1}`.
pub fn smw_row_solve(fac: &ShiftedFactorization, b: MatRef<'_, f64>, f: MatRef<'_, f64>, rows: MatRef<'_, f64>) -> Result<Mat<f64>> {
    Ok(smw_solve(fac, b, f, rows)?.x)
}
