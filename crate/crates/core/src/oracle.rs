//! Small dense reference solvers and identity checks, independent of the
//! low-rank iteration.

use faer::linalg::solvers::SolveLstsq;
use faer::{Mat, MatRef};

use crate::dense::{lower_solve, lu_inverse, lu_solve, symmetrize};
use crate::error::{Error, Result};
use crate::kernels::{chol_spd, stacked_gram, RowOrder, StackedMat};
use crate::problem::{DenseProblem, DenseSolution, StandardProblem};

/// Largest dimension for the flattened Newton system.
pub const NEWTON_LIMIT: usize = 60;
/// Largest dimension for the CARE reference.
pub const CARE_LIMIT: usize = 500;

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Stop once `‖𝒞(X)‖_F ≤ tol ‖CᵀC‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    pub x0: Option<Mat<f64>>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 50, x0: None }
    }
}

fn vech_index(n: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            idx.push((i, j));
        }
    }
    idx
}

/// Matrix of `Δ ↦ A_Xᵀ Δ + Δ A_X + Σ Â_{X,i}ᵀ Δ Â_{X,i}` on symmetric `Δ`,
/// in the basis `e_i e_jᵀ + e_j e_iᵀ` (`i > j`) and `e_i e_iᵀ`.
fn frechet_matrix(ax: &Mat<f64>, ahx: &[Mat<f64>]) -> Mat<f64> {
    let n = ax.nrows();
    let idx = vech_index(n);
    let dim = idx.len();
    let mut out = Mat::<f64>::zeros(dim, dim);
    for (col, &(i, j)) in idx.iter().enumerate() {
        // Image of the basis element, only its lower triangle is needed.
        let mut img = Mat::<f64>::zeros(n, n);
        let pairs: &[(usize, usize)] = if i == j { &[(i, j)] } else { &[(i, j), (j, i)] };
        for &(s, t) in pairs {
            // e_s e_tᵀ contributes A_Xᵀ e_s e_tᵀ + e_s e_tᵀ A_X and Âᵀ e_s e_tᵀ Â.
            for p in 0..n {
                img[(p, t)] += ax[(s, p)];
                img[(s, p)] += ax[(t, p)];
            }
            for ah in ahx {
                for q in 0..n {
                    let w = ah[(t, q)];
                    if w == 0.0 {
                        continue;
                    }
                    for p in 0..n {
                        img[(p, q)] += ah[(s, p)] * w;
                    }
                }
            }
        }
        for (row, &(p, q)) in idx.iter().enumerate() {
            out[(row, col)] = img[(p, q)];
        }
    }
    out
}

/// Newton's method on `𝒞(X) = 0` with the Fréchet system flattened into a
/// dense linear system over the symmetric unknowns.
pub fn newton_ref_solve(p: &StandardProblem, opts: &NewtonOptions) -> Result<DenseSolution> {
    newton_dense(&p.to_dense()?, opts)
}

pub fn newton_dense(d: &DenseProblem, opts: &NewtonOptions) -> Result<DenseSolution> {
    let n = d.n();
    if n > NEWTON_LIMIT {
        return Err(Error::TooLarge { n, limit: NEWTON_LIMIT });
    }
    // The E = I form has the same solution.
    let d = d.to_identity_mass()?;
    let scale = (d.c.transpose() * &d.c).norm_l2();
    let mut x = opts.x0.clone().unwrap_or_else(|| Mat::zeros(n, n));
    let idx = vech_index(n);
    for it in 0..=opts.max_iter {
        let res = d.residual(x.as_ref())?;
        let rn = res.norm_l2();
        if rn <= opts.tol * scale || rn == 0.0 {
            return Ok(DenseSolution { x, iterations: it, residual: rn });
        }
        if it == opts.max_iter {
            break;
        }
        let fx = d.feedback(x.as_ref())?;
        let ax = &d.a + &d.b * &fx;
        let ahx: Vec<Mat<f64>> = d.ahat.iter().zip(&d.bhat).map(|(a, b)| a + b * &fx).collect();
        let jac = frechet_matrix(&ax, &ahx);
        let rhs = Mat::from_fn(idx.len(), 1, |k, _| -res[idx[k]]);
        let sol = lu_solve(jac.as_ref(), rhs.as_ref(), "Newton system").map_err(|_| Error::Oracle("singular Newton system".into()))?;
        for (k, &(i, j)) in idx.iter().enumerate() {
            x[(i, j)] += sol[(k, 0)];
            if i != j {
                x[(j, i)] += sol[(k, 0)];
            }
        }
        if !crate::dense::all_finite(x.as_ref()) {
            return Err(Error::Oracle("Newton iteration diverged".into()));
        }
    }
    Err(Error::Oracle(format!("Newton did not reach tolerance in {} steps", opts.max_iter)))
}

/// Stabilizing solution of `CᵀC + AᵀX + XA - XBBᵀX = 0` from the stable
/// invariant subspace of the Hamiltonian, computed with the matrix sign
/// function.
pub fn care_schur_solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>, c: MatRef<'_, f64>) -> Result<DenseSolution> {
    let n = a.nrows();
    if n > CARE_LIMIT {
        return Err(Error::TooLarge { n, limit: CARE_LIMIT });
    }
    let g = b * b.transpose();
    let q = c.transpose() * c;
    let mut z = Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => a[(i, j)],
        (true, false) => -g[(i, j - n)],
        (false, true) => -q[(i - n, j)],
        (false, false) => -a[(j - n, i - n)],
    });
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..100 {
        iterations = it + 1;
        let zi = lu_inverse(z.as_ref(), "Hamiltonian").map_err(|_| Error::Oracle("Hamiltonian has imaginary-axis eigenvalues".into()))?;
        // Determinant scaling speeds up the early steps.
        let lu = z.partial_piv_lu();
        let u = lu.U();
        let logdet: f64 = (0..2 * n).map(|i| u[(i, i)].abs().ln()).sum();
        let mu = if it < 20 { (-logdet / (2 * n) as f64).exp() } else { 1.0 };
        let next = (&z * mu + zi * (1.0 / mu)) * 0.5;
        let change = (&next - &z).norm_l2();
        z = next;
        if !crate::dense::all_finite(z.as_ref()) {
            break;
        }
        if change <= 1e-13 * z.norm_l2() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Oracle("sign iteration did not converge (imaginary-axis eigenvalues?)".into()));
    }
    // (sign(H) + I) [I; X] = 0.
    let lhs = Mat::from_fn(2 * n, n, |i, j| z[(i, n + j)] + if i == n + j { 1.0 } else { 0.0 });
    let rhs = Mat::from_fn(2 * n, n, |i, j| -(z[(i, j)] + if i == j { 1.0 } else { 0.0 }));
    let x = symmetrize(&lhs.qr().solve_lstsq(&rhs));
    let res = &q + a.transpose() * &x + &x * a - &x * &g * &x;
    Ok(DenseSolution { residual: res.norm_l2(), x, iterations })
}

/// Deviations reported by [`residual_formula_check`].
#[derive(Debug, Clone, Copy)]
pub struct FormulaCheck {
    /// `‖𝒞(H_γ) - C̃ᵀC̃‖_F / ‖𝒞(H_γ)‖_F`.
    pub residual: f64,
    /// Relative deviation of the closed-form `L_Xᵀ` from its definition.
    pub feedback: f64,
}

impl FormulaCheck {
    pub fn max(&self) -> f64 {
        self.residual.max(self.feedback)
    }
}

/// Builds the one-step approximation `H_γ` and checks the factored residual
/// formula and the incorporated feedback against dense evaluations.
pub fn residual_formula_check(p: &StandardProblem, gamma: f64) -> Result<FormulaCheck> {
    let d = p.to_dense()?.to_identity_mass()?;
    formula_check_dense(&d, p.row_order(), gamma)
}

pub fn formula_check_dense(d: &DenseProblem, order: RowOrder, gamma: f64) -> Result<FormulaCheck> {
    if !(gamma > 0.0) {
        return Err(Error::Invalid(format!("shift {gamma} must be positive")));
    }
    let n = d.n();
    let m = d.m();
    let l = d.c.nrows();
    let root = (2.0 * gamma).sqrt();
    let mut a_gamma = d.a.clone();
    for i in 0..n {
        a_gamma[(i, i)] -= gamma;
    }
    let ca = lu_solve(a_gamma.transpose(), d.c.transpose(), "A - γI")?.transpose().to_owned();
    let y = &ca * &d.b;
    let yhat: Vec<Mat<f64>> = d.bhat.iter().map(|bi| &ca * bi * root).collect();
    let mut g = &y * y.transpose();
    for i in 0..l {
        g[(i, i)] += 1.0;
    }
    let ginv_ca = lu_solve(g.as_ref(), ca.as_ref(), "I + YYᵀ")?;
    let x = symmetrize(&(ca.transpose() * &ginv_ca * (2.0 * gamma)));

    let btx = d.b.transpose() * &x;
    let lower: Vec<Mat<f64>> = d.ahat.iter().zip(&yhat).map(|(ai, yi)| &ca * ai * root - yi * &btx).collect();
    let ystack = StackedMat::from_dense_blocks(yhat.clone(), l, m)?;
    let mt = chol_spd(stacked_gram(g.as_ref(), &ystack, order).as_ref())?;
    let flat = StackedMat::from_dense_blocks(lower.clone(), l, n)?.to_dense(order);
    let bottom = lower_solve(mt.transpose(), flat.as_ref());
    let top = &d.c + &ginv_ca * (2.0 * gamma);
    let ctc = top.transpose() * &top + bottom.transpose() * &bottom;
    let res = d.residual(x.as_ref())?;
    let rn = res.norm_l2();
    let residual = if rn > 0.0 { (&res - &ctc).norm_l2() / rn } else { ctc.norm_l2() };

    // L_Xᵀ from its definition and from the closed form.
    let px = chol_spd(d.middle(x.as_ref()).as_ref())?;
    let direct = lower_solve(px.transpose(), d.coupling(x.as_ref()).transpose());
    let mut inner = Mat::<f64>::zeros(m, n);
    for (yi, li) in yhat.iter().zip(&lower) {
        inner += yi.transpose() * lu_solve(g.as_ref(), li.as_ref(), "I + YYᵀ")?;
    }
    let formula = lower_solve(px.transpose(), inner.as_ref()) + &px * &btx;
    let dn = direct.norm_l2();
    let feedback = if dn > 0.0 { (&direct - &formula).norm_l2() / dn } else { formula.norm_l2() };
    Ok(FormulaCheck { residual, feedback })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMat;

    fn scalar() -> StandardProblem {
        let a = SparseMat::from_triplets(1, 1, &[(0, 0, -1.0)]).unwrap();
        let one = Mat::from_fn(1, 1, |_, _| 1.0);
        StandardProblem::new(a, one.clone(), one, vec![], vec![], None).unwrap()
    }

    #[test]
    fn newton_scalar_root() {
        let sol = newton_ref_solve(&scalar(), &NewtonOptions::default()).unwrap();
        assert!((sol.x[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn sign_function_scalar_root() {
        let a = Mat::from_fn(1, 1, |_, _| -1.0);
        let one = Mat::from_fn(1, 1, |_, _| 1.0);
        let sol = care_schur_solve(a.as_ref(), one.as_ref(), one.as_ref()).unwrap();
        assert!((sol.x[(0, 0)] - (2f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn hand_evaluated_formula() {
        let chk = residual_formula_check(&scalar(), 1.0).unwrap();
        assert!(chk.residual < 1e-14, "{chk:?}");
        assert!(chk.feedback < 1e-14, "{chk:?}");
    }
}
