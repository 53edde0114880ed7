//! Dense evaluation of the residual, the feedback and the incorporated
//! residual. These are reference paths for small problems.

use faer::{Mat, MatRef};

use crate::dense::{lu_solve, shape, symmetrize, upper_rsolve, upper_solve};
use crate::error::{Error, Result};
use crate::kernels::chol_spd;
use crate::problem::original::OriginalProblem;
use crate::problem::standard::{StandardProblem, DENSE_LIMIT};

/// Dense standard-form coefficients. `e = None` means `E = I`.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub a: Mat<f64>,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    pub ahat: Vec<Mat<f64>>,
    pub bhat: Vec<Mat<f64>>,
    pub e: Option<Mat<f64>>,
}

/// A dense symmetric solution with the data of the run that produced it.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub x: Mat<f64>,
    pub iterations: usize,
    /// Frobenius norm of the final residual.
    pub residual: f64,
}

impl DenseProblem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    fn check_x(&self, x: MatRef<'_, f64>) -> Result<()> {
        let n = self.n();
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
        }
        if shape(x) != (n, n) {
            return Err(Error::dims("dense residual", (n, n), shape(x)));
        }
        Ok(())
    }

    /// `I + Σ B̂ᵢᵀ X B̂ᵢ`.
    pub fn middle(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let m = self.m();
        let mut r = Mat::<f64>::identity(m, m);
        for bi in &self.bhat {
            r += bi.transpose() * x * bi;
        }
        r
    }

    /// `EᵀXB + Σ ÂᵢᵀXB̂ᵢ` (`n x m`).
    pub fn coupling(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let xb = x * &self.b;
        let mut t = match &self.e {
            Some(e) => e.transpose() * xb,
            None => xb,
        };
        for (ai, bi) in self.ahat.iter().zip(&self.bhat) {
            t += ai.transpose() * x * bi;
        }
        t
    }

    /// `AᵀXE + EᵀXA + Σ ÂᵢᵀXÂᵢ`.
    fn linear_part(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let xa = x * &self.a;
        let exa = match &self.e {
            Some(e) => e.transpose() * xa,
            None => xa,
        };
        let mut out = &exa + exa.transpose();
        for ai in &self.ahat {
            out += ai.transpose() * x * ai;
        }
        out
    }

    /// The residual `CᵀC + AᵀXE + EᵀXA + Σ ÂᵢᵀXÂᵢ - T (I + Σ B̂ᵢᵀXB̂ᵢ)⁻¹ Tᵀ`
    /// with `T = EᵀXB + Σ ÂᵢᵀXB̂ᵢ`.
    pub fn residual(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        self.check_x(x)?;
        let t = self.coupling(x);
        let w = lu_solve(self.middle(x).as_ref(), t.transpose(), "I + B̂ᵀ⋉X⋉B̂")?;
        let out = self.c.transpose() * &self.c + self.linear_part(x) - &t * w;
        Ok(symmetrize(&out))
    }

    /// `F̂ = -(I + Σ B̂ᵢᵀXB̂ᵢ)⁻¹ Tᵀ` (`m x n`).
    pub fn feedback(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        self.check_x(x)?;
        let t = self.coupling(x);
        Ok(-lu_solve(self.middle(x).as_ref(), t.transpose(), "I + B̂ᵀ⋉X⋉B̂")?)
    }

    /// The same unknown written with `E = I`: `C E⁻¹`, `A E⁻¹`, `Âᵢ E⁻¹`.
    /// The residuals satisfy `𝒢(X) = Eᵀ 𝒞'(X) E`.
    pub fn to_identity_mass(&self) -> Result<DenseProblem> {
        let Some(e) = &self.e else {
            return Ok(self.clone());
        };
        let right_inv = |m: &Mat<f64>| -> Result<Mat<f64>> {
            // M E⁻¹ = (E⁻ᵀ Mᵀ)ᵀ
            Ok(lu_solve(e.transpose(), m.transpose(), "E")?.transpose().to_owned())
        };
        Ok(DenseProblem {
            a: right_inv(&self.a)?,
            b: self.b.clone(),
            c: right_inv(&self.c)?,
            ahat: self.ahat.iter().map(right_inv).collect::<Result<_>>()?,
            bhat: self.bhat.clone(),
            e: None,
        })
    }

    /// The incorporated residual `𝒞_X(Δ)` built from `A_X`, `B_X`, `Â_X`,
    /// `B̂_X` with `𝒞_X(0) = 𝒞(X)`.
    pub fn incorporation_residual(&self, x: MatRef<'_, f64>, delta: MatRef<'_, f64>) -> Result<Mat<f64>> {
        self.check_x(x)?;
        self.check_x(delta)?;
        if let Some(e) = &self.e {
            let inner = self.to_identity_mass()?.incorporation_residual(x, delta)?;
            return Ok(symmetrize(&(e.transpose() * inner * e)));
        }
        let incorporated = self.incorporate(x)?;
        let base = self.residual(x)?;
        let n = self.n();
        let shifted = incorporated.with_c(Mat::zeros(0, n)).residual(delta)?;
        Ok(base + shifted)
    }

    /// Coefficients of the incorporated equation for `Δ = X⋆ - X` (`E = I`).
    pub fn incorporate(&self, x: MatRef<'_, f64>) -> Result<DenseProblem> {
        if self.e.is_some() {
            return Err(Error::Invalid("incorporation is formed on the E = I form".into()));
        }
        let px = chol_spd(self.middle(x).as_ref())?;
        let bx = upper_rsolve(self.b.as_ref(), px.as_ref());
        let bhx: Vec<Mat<f64>> = self.bhat.iter().map(|bi| upper_rsolve(bi.as_ref(), px.as_ref())).collect();
        // L_Xᵀ = P_X⁻ᵀ (BᵀX + Σ B̂ᵢᵀXÂᵢ) = P_X⁻ᵀ Tᵀ
        let lxt = crate::dense::lower_solve(px.transpose(), self.coupling(x).transpose());
        let ax = &self.a - &bx * &lxt;
        let ahx = self.ahat.iter().zip(&bhx).map(|(ai, bi)| ai - bi * &lxt).collect();
        Ok(DenseProblem { a: ax, b: bx, c: self.c.clone(), ahat: ahx, bhat: bhx, e: None })
    }

    pub fn with_c(&self, c: Mat<f64>) -> DenseProblem {
        DenseProblem { c, ..self.clone() }
    }
}

/// Dense residual of a standard-form problem (with `F0`, `Kpi0` folded in).
pub fn residual_dense(p: &StandardProblem, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
    p.to_dense()?.residual(x)
}

/// Standard-form feedback `F̂_X`.
pub fn feedback_dense(p: &StandardProblem, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
    p.to_dense()?.feedback(x)
}

pub fn incorporation_residual_dense(p: &StandardProblem, x: MatRef<'_, f64>, delta: MatRef<'_, f64>) -> Result<Mat<f64>> {
    p.to_dense()?.incorporation_residual(x, delta)
}

/// Residual of the original form, evaluated term by term from `Q`, `L`, `R`.
pub fn residual_original_dense(orig: &OriginalProblem, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = orig.n();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
    }
    if shape(x) != (n, n) {
        return Err(Error::dims("original residual", (n, n), shape(x)));
    }
    let e = orig.e().map(|e| e.to_dense()).unwrap_or_else(|| Mat::identity(n, n));
    let a: Vec<Mat<f64>> = orig.a().iter().map(|ai| ai.to_dense()).collect();
    let b = orig.b();
    let l = orig.l();
    let q = orig.c().transpose() * orig.c() + l * lu_solve(orig.weight().as_ref(), l.transpose(), "R")?;
    let exa = e.transpose() * x * &a[0];
    let mut lin = q + &exa + exa.transpose();
    let mut t = l + e.transpose() * x * &b[0];
    let mut mid = orig.weight().clone();
    for i in 1..orig.r() {
        lin += a[i].transpose() * x * &a[i];
        t += a[i].transpose() * x * &b[i];
        mid += b[i].transpose() * x * &b[i];
    }
    let w = lu_solve(mid.as_ref(), t.transpose(), "R + Σ BᵢᵀXBᵢ")?;
    Ok(symmetrize(&(lin - &t * w)))
}

/// Original-form feedback `F_X = -R⁻¹Lᵀ + P⁻¹F̂_X`.
pub fn feedback_original_dense(orig: &OriginalProblem, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let p = orig.weight_factor()?;
    let fhat = crate::problem::standardize(orig)?.to_dense()?.feedback(x)?;
    Ok(upper_solve(p.as_ref(), fhat.as_ref()) - orig.gain()?)
}
