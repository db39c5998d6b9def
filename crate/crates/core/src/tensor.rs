//! Dense tensors and the multilinear products the decomposition relies on.
//!
//! Storage is column-major throughout: the first index varies fastest, the
//! last slowest. That convention makes the last-mode matricization a pure
//! reshape and keeps `vec`/`unvec` compatible with nalgebra's layout.

use nalgebra::{DMatrix, DVector};

use crate::error::CpdError;
use crate::Result;

/// Dense real tensor of order 2, 3 or 4 (order 2 is accepted for utility
/// operations; matricization for decomposition requires order 3 or 4).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    /// Build a tensor from explicit dimensions and column-major data.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(CpdError::invalid("tensor must have at least one mode"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(CpdError::invalid("tensor dimensions must be positive"));
        }
        let expect: usize = dims.iter().product();
        if data.len() != expect {
            return Err(CpdError::invalid(format!(
                "data length {} does not match product of dims {}",
                data.len(),
                expect
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len: usize = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Linear offset of a multi-index (first index fastest).
    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut off = 0;
        let mut stride = 1;
        for (i, (&k, &d)) in idx.iter().zip(&self.dims).enumerate() {
            debug_assert!(k < d, "index {k} out of bounds in mode {i}");
            let _ = i;
            off += k * stride;
            stride *= d;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    /// Frobenius inner product; dimensions must match.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        if self.dims != other.dims {
            return Err(CpdError::invalid("inner product requires equal dims"));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Frobenius norm: Euclidean norm of the entries.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Entrywise difference; dimensions must match.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(CpdError::invalid("subtraction requires equal dims"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        DenseTensor::new(self.dims.clone(), data)
    }
}

/// A CP model: one factor matrix per mode, all with `R` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<DMatrix<f64>>,
}

impl FactorSet {
    /// Validate and wrap the factor matrices. All must share a column count
    /// `R >= 1` and no column may be identically zero.
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(CpdError::invalid("factor set must have at least one mode"));
        }
        let r = factors[0].ncols();
        if r == 0 {
            return Err(CpdError::invalid("factor matrices must have R >= 1 columns"));
        }
        for (n, f) in factors.iter().enumerate() {
            if f.ncols() != r {
                return Err(CpdError::invalid(format!(
                    "factor {n} has {} columns, expected {r}",
                    f.ncols()
                )));
            }
            if f.nrows() == 0 {
                return Err(CpdError::invalid(format!("factor {n} has no rows")));
            }
            for c in 0..r {
                if f.column(c).norm() == 0.0 {
                    return Err(CpdError::invalid(format!(
                        "factor {n} column {c} is the zero vector"
                    )));
                }
            }
        }
        Ok(Self { factors })
    }

    pub fn rank(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn mode_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn factor(&self, mode: usize) -> &DMatrix<f64> {
        &self.factors[mode]
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }
}

/// Last-mode matricization: column `k` is the vectorized `k`-th slice.
#[derive(Debug, Clone)]
pub struct Matricization {
    pub matrix: DMatrix<f64>,
    pub leading_dims: Vec<usize>,
    pub last_dim: usize,
}

/// Outer product of one vector per mode: entry `(i1,..,iN) = ∏ v_n[i_n]`.
pub fn outer_rank1(vectors: &[DVector<f64>]) -> Result<DenseTensor> {
    if vectors.is_empty() {
        return Err(CpdError::invalid("outer product needs at least one vector"));
    }
    if vectors.iter().any(|v| v.is_empty()) {
        return Err(CpdError::invalid("outer product vectors must be nonempty"));
    }
    let dims: Vec<usize> = vectors.iter().map(|v| v.len()).collect();
    let len: usize = dims.iter().product();
    let mut data = vec![0.0; len];
    let mut idx = vec![0usize; dims.len()];
    for slot in data.iter_mut() {
        let mut p = 1.0;
        for (n, &i) in idx.iter().enumerate() {
            p *= vectors[n][i];
        }
        *slot = p;
        // advance the mixed-radix counter, first index fastest
        for (i, d) in idx.iter_mut().zip(&dims) {
            *i += 1;
            if *i < *d {
                break;
            }
            *i = 0;
        }
    }
    DenseTensor::new(dims, data)
}

/// Evaluate a CP model as a dense tensor: the sum of its rank-1 terms.
pub fn cp_evaluate(model: &FactorSet) -> DenseTensor {
    cp_evaluate_matrices(model.factors()).expect("factor set invariants hold")
}

/// [`cp_evaluate`] on raw matrices; unlike [`FactorSet`], zero columns are
/// permitted (useful when evaluating factor files of unknown provenance).
pub fn cp_evaluate_matrices(factors: &[DMatrix<f64>]) -> Result<DenseTensor> {
    if factors.is_empty() {
        return Err(CpdError::invalid("need at least one factor matrix"));
    }
    let r = factors[0].ncols();
    if r == 0 || factors.iter().any(|f| f.ncols() != r) {
        return Err(CpdError::invalid("factor matrices must share R >= 1 columns"));
    }
    let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
    let len: usize = dims.iter().product();
    let mut data = vec![0.0; len];
    let mut idx = vec![0usize; dims.len()];
    for slot in data.iter_mut() {
        let mut acc = 0.0;
        for c in 0..r {
            let mut p = 1.0;
            for (n, &i) in idx.iter().enumerate() {
                p *= factors[n][(i, c)];
            }
            acc += p;
        }
        *slot = acc;
        for (i, d) in idx.iter_mut().zip(&dims) {
            *i += 1;
            if *i < *d {
                break;
            }
            *i = 0;
        }
    }
    DenseTensor::new(dims, data)
}

/// Last-mode matricization of an order-3 or order-4 tensor.
///
/// With column-major storage this is a reshape: column `k` of the result is
/// the contiguous block of entries belonging to the `k`-th last-mode slice.
pub fn matricize(t: &DenseTensor) -> Result<Matricization> {
    let order = t.order();
    if order != 3 && order != 4 {
        return Err(CpdError::UnsupportedOrder {
            order,
            expected: "3 or 4",
        });
    }
    let last_dim = *t.dims().last().unwrap();
    let leading_dims: Vec<usize> = t.dims()[..order - 1].to_vec();
    let rows: usize = leading_dims.iter().product();
    let matrix = DMatrix::from_column_slice(rows, last_dim, t.data());
    Ok(Matricization {
        matrix,
        leading_dims,
        last_dim,
    })
}

/// Khatri-Rao (columnwise Kronecker) product: column `j` is `a_j ⊗ b_j`.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(CpdError::invalid(format!(
            "khatri_rao column mismatch: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let (na, nb, m) = (a.nrows(), b.nrows(), a.ncols());
    let mut out = DMatrix::zeros(na * nb, m);
    for j in 0..m {
        for p in 0..na {
            let apj = a[(p, j)];
            for q in 0..nb {
                out[(p * nb + q, j)] = apj * b[(q, j)];
            }
        }
    }
    Ok(out)
}

/// Kronecker product of two matrices.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, ma) = a.shape();
    let (nb, mb) = b.shape();
    let mut out = DMatrix::zeros(na * nb, ma * mb);
    for i in 0..na {
        for j in 0..ma {
            let aij = a[(i, j)];
            for p in 0..nb {
                for q in 0..mb {
                    out[(i * nb + p, j * mb + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization of a matrix.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`]: reshape a vector into a `rows x cols` matrix.
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    if v.len() != rows * cols {
        return Err(CpdError::invalid(format!(
            "unvec size mismatch: {} entries into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Khatri-Rao chain with the last-mode-adjacent factor leftmost:
/// `Y ⊙ X` for two leading factors, `Z ⊙ Y ⊙ X` for three.
pub fn khatri_rao_chain(leading_factors: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if leading_factors.is_empty() {
        return Err(CpdError::invalid("khatri_rao_chain needs at least one factor"));
    }
    let mut acc = leading_factors.last().unwrap().clone();
    for f in leading_factors.iter().rev().skip(1) {
        acc = khatri_rao(&acc, f)?;
    }
    Ok(acc)
}
