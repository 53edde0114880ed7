use faer::{Mat, MatRef};

use crate::dense::shape;
use crate::error::{Error, Result};
use crate::sparse::SparseMat;

/// One block of a [`StackedMat`].
#[derive(Debug, Clone)]
pub enum Block {
    Dense(Mat<f64>),
    Sparse(SparseMat),
}

impl Block {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Block::Dense(m) => (m.nrows(), m.ncols()),
            Block::Sparse(s) => s.shape(),
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            Block::Dense(m) => m.clone(),
            Block::Sparse(s) => s.to_dense(),
        }
    }

    /// `x * block`.
    pub fn left_mul(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        match self {
            Block::Dense(m) => {
                if x.ncols() != m.nrows() {
                    return Err(Error::dims("block product", shape(x), shape(m.as_ref())));
                }
                Ok(x * m)
            }
            Block::Sparse(s) => s.left_mul_dense(&x.to_owned()),
        }
    }

    /// `block * x`.
    pub fn mul(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        match self {
            Block::Dense(m) => {
                if m.ncols() != x.nrows() {
                    return Err(Error::dims("block product", shape(m.as_ref()), shape(x)));
                }
                Ok(m * x)
            }
            Block::Sparse(s) => s.mul_dense(&x.to_owned()),
        }
    }

    /// `block^T * x`.
    pub fn tmul(&self, x: MatRef<'_, f64>) -> Result<Mat<f64>> {
        match self {
            Block::Dense(m) => {
                if m.nrows() != x.nrows() {
                    return Err(Error::dims("block^T product", (m.ncols(), m.nrows()), shape(x)));
                }
                Ok(m.transpose() * x)
            }
            Block::Sparse(s) => s.tmul_dense(&x.to_owned()),
        }
    }
}

/// How the rows of a stack are laid out when it is flattened.
///
/// `BlockMajor` lists block 1 first, then block 2, ..., which is the layout of
/// `I_k ⊗ G` Gram matrices. `Interleaved` lists row 1 of every block, then
/// row 2, ..., the layout produced by `(x ⊗ I_k)` semi-tensor products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrder {
    BlockMajor,
    Interleaved,
}

impl RowOrder {
    /// Flat row index of row `row` of block `block` in a stack of `k` blocks of `p` rows.
    pub fn flat_index(self, block: usize, row: usize, k: usize, p: usize) -> usize {
        match self {
            RowOrder::BlockMajor => block * p + row,
            RowOrder::Interleaved => row * k + block,
        }
    }
}

/// A vertical stack `[M_1; ...; M_k]` of equally sized blocks, used as the
/// right operand of the semi-tensor product.
#[derive(Debug, Clone)]
pub struct StackedMat {
    blocks: Vec<Block>,
    block_rows: usize,
    block_cols: usize,
}

impl StackedMat {
    pub fn new(blocks: Vec<Block>, block_rows: usize, block_cols: usize) -> Result<Self> {
        for b in &blocks {
            if b.shape() != (block_rows, block_cols) {
                return Err(Error::dims("stacked block", (block_rows, block_cols), b.shape()));
            }
        }
        Ok(Self { blocks, block_rows, block_cols })
    }

    pub fn empty(block_rows: usize, block_cols: usize) -> Self {
        Self { blocks: Vec::new(), block_rows, block_cols }
    }

    pub fn from_dense_blocks(blocks: Vec<Mat<f64>>, block_rows: usize, block_cols: usize) -> Result<Self> {
        Self::new(blocks.into_iter().map(Block::Dense).collect(), block_rows, block_cols)
    }

    pub fn from_sparse_blocks(blocks: Vec<SparseMat>, block_rows: usize, block_cols: usize) -> Result<Self> {
        Self::new(blocks.into_iter().map(Block::Sparse).collect(), block_rows, block_cols)
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Dense copies of every block.
    pub fn dense_blocks(&self) -> Vec<Mat<f64>> {
        self.blocks.iter().map(Block::to_dense).collect()
    }

    /// Returns block `i` as a dense matrix reference; panics on sparse blocks.
    pub fn dense_block(&self, i: usize) -> MatRef<'_, f64> {
        match &self.blocks[i] {
            Block::Dense(m) => m.as_ref(),
            Block::Sparse(_) => panic!("block {i} is sparse"),
        }
    }

    /// Flattens to a `(k p) x q` dense matrix using `order`.
    pub fn to_dense(&self, order: RowOrder) -> Mat<f64> {
        let (k, p, q) = (self.block_count(), self.block_rows, self.block_cols);
        let mut out = Mat::zeros(k * p, q);
        for (b, blk) in self.blocks.iter().enumerate() {
            let d = blk.to_dense();
            for i in 0..p {
                let r = order.flat_index(b, i, k, p);
                for j in 0..q {
                    out[(r, j)] = d[(i, j)];
                }
            }
        }
        out
    }

    /// Inverse of [`StackedMat::to_dense`] for dense stacks.
    pub fn from_flat(m: MatRef<'_, f64>, k: usize, order: RowOrder) -> Result<Self> {
        if k == 0 {
            return Ok(Self::empty(0, m.ncols()));
        }
        if m.nrows() % k != 0 {
            return Err(Error::Invalid(format!("{} rows do not split into {k} blocks", m.nrows())));
        }
        let p = m.nrows() / k;
        let blocks = (0..k)
            .map(|b| Mat::from_fn(p, m.ncols(), |i, j| m[(order.flat_index(b, i, k, p), j)]))
            .collect();
        Self::from_dense_blocks(blocks, p, m.ncols())
    }

    /// Blockwise `M_i * x`.
    pub fn mul_right(&self, x: MatRef<'_, f64>) -> Result<StackedMat> {
        let blocks = self.blocks.iter().map(|b| b.mul(x)).collect::<Result<Vec<_>>>()?;
        Self::from_dense_blocks(blocks, self.block_rows, x.ncols())
    }

    /// Blockwise `x * M_i` (a left factor applied to every block).
    pub fn mul_left_each(&self, x: MatRef<'_, f64>) -> Result<StackedMat> {
        ltimes(x, self)
    }

    /// Blockwise `M_i + N_i`.
    pub fn add(&self, other: &StackedMat) -> Result<StackedMat> {
        if self.block_count() != other.block_count()
            || (self.block_rows, self.block_cols) != (other.block_rows, other.block_cols)
        {
            return Err(Error::dims(
                "stacked add",
                (self.block_count() * self.block_rows, self.block_cols),
                (other.block_count() * other.block_rows, other.block_cols),
            ));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.to_dense() + b.to_dense())
            .collect();
        Self::from_dense_blocks(blocks, self.block_rows, self.block_cols)
    }

    pub fn fro_sq(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| match b {
                Block::Dense(m) => m.norm_l2().powi(2),
                Block::Sparse(s) => s.norm_fro().powi(2),
            })
            .sum()
    }
}

/// Semi-tensor product `x ⋉ M` for a stacked right operand whose blocks have
/// as many rows as `x` has columns: block `i` of the result is `x * M_i`.
pub fn ltimes(x: MatRef<'_, f64>, m: &StackedMat) -> Result<StackedMat> {
    if x.ncols() != m.block_rows() {
        return Err(Error::dims("ltimes", shape(x), (m.block_rows(), m.block_cols())));
    }
    let blocks = m.blocks.iter().map(|b| b.left_mul(x)).collect::<Result<Vec<_>>>()?;
    StackedMat::from_dense_blocks(blocks, x.nrows(), m.block_cols())
}

/// `G ⊗ I_k + Ŷ Ŷ^T` (interleaved) or `I_k ⊗ G + Ŷ Ŷ^T` (block-major) for a
/// stack `Ŷ` of `k` blocks with `p` rows and a `p x p` base matrix `G`.
pub fn stacked_gram(base: MatRef<'_, f64>, y: &StackedMat, order: RowOrder) -> Mat<f64> {
    let (k, p) = (y.block_count(), y.block_rows());
    let flat = y.to_dense(order);
    let mut g = &flat * flat.transpose();
    for b in 0..k {
        for i in 0..p {
            for j in 0..p {
                g[(order.flat_index(b, i, k, p), order.flat_index(b, j, k, p))] += base[(i, j)];
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{kron_eye_left, kron_eye_right};

    fn m2(a: [[f64; 2]; 2]) -> Mat<f64> {
        Mat::from_fn(2, 2, |i, j| a[i][j])
    }

    #[test]
    fn identity_left_factor() {
        let b = m2([[1.0, 2.0], [3.0, 4.0]]);
        let s = StackedMat::from_dense_blocks(vec![b.clone()], 2, 2).unwrap();
        let out = ltimes(Mat::<f64>::identity(2, 2).as_ref(), &s).unwrap();
        assert_eq!(out.dense_block(0), b.as_ref());
    }

    #[test]
    fn equal_inner_dimension_is_the_matrix_product() {
        let a = m2([[1.0, -1.0], [0.5, 2.0]]);
        let b = m2([[3.0, 0.0], [1.0, 1.0]]);
        let s = StackedMat::from_dense_blocks(vec![b.clone()], 2, 2).unwrap();
        let out = ltimes(a.as_ref(), &s).unwrap();
        assert!((out.dense_block(0) - &a * &b).norm_l2() == 0.0);
    }

    #[test]
    fn sparse_blocks_and_empty_stacks() {
        let sp = SparseMat::from_triplets(2, 2, &[(0, 1, 2.0), (1, 0, -1.0)]).unwrap();
        let s = StackedMat::from_sparse_blocks(vec![sp.clone(), sp.scaled(3.0)], 2, 2).unwrap();
        let x = Mat::from_fn(3, 2, |i, j| (i + j) as f64);
        let out = ltimes(x.as_ref(), &s).unwrap();
        assert_eq!(out.block_count(), 2);
        assert!((out.dense_block(1) - &x * sp.to_dense() * 3.0).norm_l2() < 1e-14);

        let empty = StackedMat::empty(2, 5);
        let out = ltimes(x.as_ref(), &empty).unwrap();
        assert_eq!((out.block_count(), out.block_rows(), out.block_cols()), (0, 3, 5));
    }

    #[test]
    fn conformability_error_names_shapes() {
        let s = StackedMat::from_dense_blocks(vec![Mat::zeros(3, 2)], 3, 2).unwrap();
        let err = ltimes(Mat::<f64>::zeros(2, 2).as_ref(), &s).unwrap_err();
        assert!(err.to_string().contains("(2, 2)") && err.to_string().contains("(3, 2)"));
    }

    #[test]
    fn gram_orders_match_kronecker_forms() {
        let g = m2([[2.0, 0.5], [0.5, 3.0]]);
        let blocks = vec![m2([[1.0, 2.0], [0.0, 1.0]]), m2([[0.0, -1.0], [1.0, 1.0]]), m2([[2.0, 0.0], [0.0, 0.5]])];
        let y = StackedMat::from_dense_blocks(blocks, 2, 2).unwrap();
        for (order, base) in [
            (RowOrder::BlockMajor, kron_eye_left(3, g.as_ref())),
            (RowOrder::Interleaved, kron_eye_right(g.as_ref(), 3)),
        ] {
            let flat = y.to_dense(order);
            let expect = base + &flat * flat.transpose();
            assert!((stacked_gram(g.as_ref(), &y, order) - expect).norm_l2() < 1e-14);
            let back = StackedMat::from_flat(flat.as_ref(), 3, order).unwrap();
            assert!((back.to_dense(order) - &flat).norm_l2() == 0.0);
        }
    }
}
