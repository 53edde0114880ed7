//! Problem directories: `A.mtx`, `B.mtx`, `C.mtx`, optional `E.mtx`,
//! `L.mtx`, `R.mtx` and the stochastic blocks `A1.mtx`, `B1.mtx`, ...

use std::path::{Path, PathBuf};

use faer::Mat;
use scare_core::kernels::Block;
use scare_core::problem::{standardize, OriginalProblem, StandardProblem};
use scare_core::SparseMat;

use crate::error::{BenchError, Result};
use crate::mmio;

#[derive(Debug, Clone)]
pub enum LoadedProblem {
    Standard(StandardProblem),
    Original(OriginalProblem),
}

impl LoadedProblem {
    pub fn n(&self) -> usize {
        match self {
            LoadedProblem::Standard(p) => p.n(),
            LoadedProblem::Original(p) => p.n(),
        }
    }

    pub fn r(&self) -> usize {
        match self {
            LoadedProblem::Standard(p) => p.r(),
            LoadedProblem::Original(p) => p.r(),
        }
    }

    pub fn into_standard(self) -> Result<StandardProblem> {
        Ok(match self {
            LoadedProblem::Standard(p) => p,
            LoadedProblem::Original(p) => standardize(&p)?,
        })
    }
}

fn file(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.mtx"))
}

fn required(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = file(dir, name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(BenchError::Missing(p))
    }
}

fn optional(dir: &Path, name: &str) -> Option<PathBuf> {
    Some(file(dir, name)).filter(|p| p.is_file())
}

fn wrap(file: &Path) -> impl Fn(scare_core::Error) -> BenchError {
    let file = file.display().to_string();
    move |source| BenchError::Load { file: file.clone(), source }
}

fn check_shape(path: &Path, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(BenchError::Load {
            file: path.display().to_string(),
            source: scare_core::Error::Invalid(format!("shape {got:?}, expected {want:?}")),
        })
    }
}

fn sparse(path: &Path, want: (usize, usize)) -> Result<SparseMat> {
    let m = mmio::read_sparse(path)?;
    check_shape(path, m.shape(), want)?;
    Ok(m)
}

fn dense(path: &Path, want: (usize, usize)) -> Result<Mat<f64>> {
    let m = mmio::read_dense(path)?;
    check_shape(path, (m.nrows(), m.ncols()), want)?;
    Ok(m)
}

/// Reads a problem directory. `r` is one plus the number of consecutive
/// `A{i}.mtx` files; the form is original when `L.mtx` or `R.mtx` exists.
pub fn load_problem(dir: &Path) -> Result<LoadedProblem> {
    if !dir.is_dir() {
        return Err(BenchError::Missing(dir.to_path_buf()));
    }
    let a_path = required(dir, "A")?;
    let a = mmio::read_sparse(&a_path)?;
    let n = a.nrows();
    check_shape(&a_path, a.shape(), (n, n))?;
    let b_path = required(dir, "B")?;
    let b = mmio::read_dense(&b_path)?;
    let m = b.ncols();
    check_shape(&b_path, (b.nrows(), m), (n, m))?;
    let c_path = required(dir, "C")?;
    let c = mmio::read_dense(&c_path)?;
    check_shape(&c_path, (c.nrows(), c.ncols()), (c.nrows(), n))?;
    let e = optional(dir, "E").map(|p| sparse(&p, (n, n))).transpose()?;

    let mut ahat = Vec::new();
    let mut bhat = Vec::new();
    for i in 1.. {
        let Some(ap) = optional(dir, &format!("A{i}")) else { break };
        ahat.push(sparse(&ap, (n, n))?);
        bhat.push(dense(&required(dir, &format!("B{i}"))?, (n, m))?);
    }

    let l = optional(dir, "L").map(|p| dense(&p, (n, m))).transpose()?;
    let r_path = optional(dir, "R");
    if l.is_none() && r_path.is_none() {
        let p = StandardProblem::new(a, b, c, ahat, bhat, e).map_err(wrap(dir))?;
        return Ok(LoadedProblem::Standard(p));
    }
    let weight = match &r_path {
        Some(p) => dense(p, (m, m))?,
        None => Mat::identity(m, m),
    };
    let mut av = vec![a];
    av.extend(ahat);
    let mut bv = vec![b];
    bv.extend(bhat);
    let blame = r_path.unwrap_or_else(|| dir.to_path_buf());
    let p = OriginalProblem::new(av, bv, c, l, weight, e).map_err(wrap(&blame))?;
    // Surface a bad weight at load time rather than at solve time.
    p.weight_factor().map_err(wrap(&blame))?;
    Ok(LoadedProblem::Original(p))
}

/// Writes a natively standard problem in the layout read by [`load_problem`].
pub fn save_problem(dir: &Path, p: &StandardProblem) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    mmio::write_sparse(&file(dir, "A"), p.a())?;
    mmio::write_dense(&file(dir, "B"), p.b())?;
    mmio::write_dense(&file(dir, "C"), p.c())?;
    if let Some(e) = p.e() {
        mmio::write_sparse(&file(dir, "E"), e)?;
    }
    for (i, (a, b)) in p.ahat().blocks().iter().zip(p.bhat().blocks()).enumerate() {
        let a = match a {
            Block::Sparse(s) => s.clone(),
            Block::Dense(d) => SparseMat::from_dense(d, 0.0),
        };
        mmio::write_sparse(&file(dir, &format!("A{}", i + 1)), &a)?;
        mmio::write_dense(&file(dir, &format!("B{}", i + 1)), &b.to_dense())?;
    }
    Ok(())
}
