//! Truncated-SVD rank factorization of a matricization and the orthonormal
//! nullspace basis of `Eᵀ`.
//!
//! `full_rank_factorize` produces `T ≈ E Fᵀ` with `E` the leading left
//! singular vectors and `F = V_R Σ_R`; `nullspace_basis` completes `E` to an
//! orthonormal basis and returns the complement, which spans `N(Eᵀ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::CpdError;
use crate::tensor::Matricization;
use crate::Result;

/// Rank selection for [`full_rank_factorize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSpec {
    /// Count singular values above `trunc_tol * sigma_1`.
    Auto,
    /// Truncate to exactly this rank.
    Fixed(usize),
}

/// Result of the truncated-SVD factorization `T ≈ E Fᵀ`.
#[derive(Debug, Clone)]
pub struct RankFactorization {
    /// Leading left singular vectors, orthonormal columns (`rows x R`).
    pub e: DMatrix<f64>,
    /// `V_R Σ_R` (`cols x R`), full column rank.
    pub f: DMatrix<f64>,
    /// All singular values, nonincreasing.
    pub singular_values: DVector<f64>,
    /// The rank actually used.
    pub rank_used: usize,
    /// Set when a fixed rank reaches into numerically-zero singular values.
    pub rank_warning: bool,
}

/// Orthonormal basis of `N(Eᵀ)`.
#[derive(Debug, Clone)]
pub struct NullspaceBasis {
    vectors: Vec<DVector<f64>>,
}

impl NullspaceBasis {
    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    /// Ambient dimension (rows of `E`).
    pub fn ambient_dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }
}

/// Count singular values above `tol_rel * sigma_1`.
pub fn numerical_rank(m: &DMatrix<f64>, tol_rel: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let s1 = sv.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return 0;
    }
    sv.iter().take_while(|&&s| s > tol_rel * s1).count()
}

/// Flip each column of `u` (and the matching row of `v_t`) so its
/// largest-magnitude entry is positive. Makes factorizations reproducible.
fn fix_signs(u: &mut DMatrix<f64>, v_t: &mut DMatrix<f64>) {
    for c in 0..u.ncols() {
        let col = u.column(c);
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if u[(best, c)] < 0.0 {
            for i in 0..u.nrows() {
                u[(i, c)] = -u[(i, c)];
            }
            if c < v_t.nrows() {
                for j in 0..v_t.ncols() {
                    v_t[(c, j)] = -v_t[(c, j)];
                }
            }
        }
    }
}

/// Truncated-SVD full-rank factorization of a matricization.
///
/// `E` holds the first `R` left singular vectors, `F = V_R Σ_R`, so
/// `E Fᵀ` is the rank-`R` truncation of `T`. With `RankSpec::Auto`, `R`
/// counts the singular values above `trunc_tol * sigma_1`.
pub fn full_rank_factorize(
    t: &Matricization,
    rank: RankSpec,
    trunc_tol: f64,
) -> Result<RankFactorization> {
    let m = &t.matrix;
    let max_rank = m.nrows().min(m.ncols());
    let svd = m.clone().svd(true, true);
    let mut u = svd.u.expect("svd with u requested");
    let mut v_t = svd.v_t.expect("svd with v_t requested");

    // Sort singular triplets in nonincreasing order ourselves; do not rely
    // on backend ordering.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let singular_values =
        DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i]));
    let u_sorted = DMatrix::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let v_t_sorted = DMatrix::from_rows(&order.iter().map(|&i| v_t.row(i).into_owned()).collect::<Vec<_>>());
    u = u_sorted;
    v_t = v_t_sorted;

    let s1 = singular_values[0];
    if s1 == 0.0 {
        return Err(CpdError::RankZero);
    }

    let rank_used = match rank {
        RankSpec::Auto => {
            let tol = trunc_tol.max(0.0);
            singular_values.iter().take_while(|&&s| s > tol * s1).count()
        }
        RankSpec::Fixed(r) => {
            if r == 0 || r > max_rank {
                return Err(CpdError::invalid(format!(
                    "requested rank {r} outside 1..={max_rank}"
                )));
            }
            r
        }
    };
    let rank_warning = singular_values[rank_used - 1] <= 1e-12 * s1;

    fix_signs(&mut u, &mut v_t);

    let e = u.columns(0, rank_used).into_owned();
    let mut f = DMatrix::zeros(m.ncols(), rank_used);
    for i in 0..rank_used {
        let si = singular_values[i];
        for j in 0..m.ncols() {
            f[(j, i)] = si * v_t[(i, j)];
        }
    }

    Ok(RankFactorization {
        e,
        f,
        singular_values,
        rank_used,
        rank_warning,
    })
}

/// Orthonormal complement of the column space of `e` (columns orthonormal).
///
/// Greedy modified Gram-Schmidt over the standard basis: at each round the
/// candidate with the largest residual against the current span is accepted,
/// which keeps the construction deterministic and well conditioned.
pub fn orthonormal_complement(e: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let m = e.nrows();
    let r = e.ncols();
    if m < r {
        return Err(CpdError::invalid("complement of a wide matrix"));
    }
    let needed = m - r;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(needed);

    let orthogonalize = |v: &DVector<f64>, basis: &[DVector<f64>]| -> DVector<f64> {
        let mut w = v.clone();
        // two passes of MGS for numerical orthogonality
        for _ in 0..2 {
            let coeffs = e.transpose() * &w;
            w -= e * coeffs;
            for b in basis {
                let c = b.dot(&w);
                w -= b * c;
            }
        }
        w
    };

    let mut used = vec![false; m];
    for _ in 0..needed {
        let mut best_k = usize::MAX;
        let mut best_norm = -1.0;
        let mut best_vec = DVector::zeros(m);
        for k in 0..m {
            if used[k] {
                continue;
            }
            let mut cand = DVector::zeros(m);
            cand[k] = 1.0;
            let w = orthogonalize(&cand, &basis);
            let n = w.norm();
            if n > best_norm {
                best_norm = n;
                best_k = k;
                best_vec = w;
            }
        }
        if best_norm <= 1e-10 {
            return Err(CpdError::invalid(
                "failed to complete orthonormal basis; input not orthonormal?",
            ));
        }
        used[best_k] = true;
        let mut v = best_vec / best_norm;
        // sign convention: largest-magnitude entry positive
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if v[best] < 0.0 {
            v = -v;
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Orthonormal basis of `N(Eᵀ)` for a rank factorization.
pub fn nullspace_basis(fact: &RankFactorization) -> Result<NullspaceBasis> {
    let m = fact.e.nrows();
    if m == fact.rank_used {
        return Err(CpdError::EmptyNullspace {
            rank: fact.rank_used,
        });
    }
    let vectors = orthonormal_complement(&fact.e)?;
    Ok(NullspaceBasis { vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{cp_evaluate, matricize};
    use crate::testdata;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn randn_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                m[(r, c)] = StandardNormal.sample(rng);
            }
        }
        m
    }

    #[test]
    fn identity_auto_rank() {
        let t = Matricization {
            matrix: DMatrix::identity(3, 3),
            leading_dims: vec![3],
            last_dim: 3,
        };
        let f = full_rank_factorize(&t, RankSpec::Auto, 1e-10).unwrap();
        assert_eq!(f.rank_used, 3);
        let gram = f.e.transpose() * &f.e;
        assert!((gram - DMatrix::identity(3, 3)).norm() <= 1e-12);
        assert!((&f.e * f.f.transpose() - &t.matrix).norm() <= 1e-12);
    }

    #[test]
    fn zero_matrix_is_rank_zero() {
        let t = Matricization {
            matrix: DMatrix::zeros(4, 3),
            leading_dims: vec![4],
            last_dim: 3,
        };
        assert!(matches!(
            full_rank_factorize(&t, RankSpec::Auto, 1e-10),
            Err(CpdError::RankZero)
        ));
    }

    #[test]
    fn reference_case_factorizes_at_rank_four() {
        let case = testdata::reference_case_3x3x6();
        let t = matricize(&case.tensor).unwrap();
        assert_eq!(numerical_rank(&t.matrix, 1e-8), 4);
        let f = full_rank_factorize(&t, RankSpec::Fixed(4), 0.0).unwrap();
        assert_eq!(f.e.shape(), (9, 4));
        assert_eq!(f.f.shape(), (6, 4));
        let resid = (&f.e * f.f.transpose() - &t.matrix).norm() / t.matrix.norm();
        assert!(resid <= 1e-12, "relative residual {resid}");
        let gram = f.e.transpose() * &f.e;
        assert!((gram - DMatrix::identity(4, 4)).norm() <= 1e-12);
    }

    #[test]
    fn noisy_reference_spectrum_reveals_rank() {
        let case = testdata::reference_case_3x3x6();
        let clean = case.tensor.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let noise: Vec<f64> = (0..clean.len())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let nn = noise.iter().map(|x| x * x).sum::<f64>().sqrt();
        let theta = 1e-6;
        let data: Vec<f64> = clean
            .data()
            .iter()
            .zip(&noise)
            .map(|(a, n)| a + theta * n / nn)
            .collect();
        let noisy = crate::tensor::DenseTensor::new(clean.dims().to_vec(), data).unwrap();
        let t = matricize(&noisy).unwrap();
        let f = full_rank_factorize(&t, RankSpec::Auto, 1e-3).unwrap();
        assert_eq!(f.rank_used, 4);
        let ratio = f.singular_values[4] / f.singular_values[0];
        assert!(
            ratio > 1e-9 && ratio < 1e-4,
            "noise-floor singular value ratio {ratio}"
        );
    }

    #[test]
    fn truncation_residual_matches_tail_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..10 {
            let rows = 4 + (trial % 3);
            let cols = 3 + (trial % 4);
            let m = randn_matrix(&mut rng, rows, cols);
            let t = Matricization {
                matrix: m.clone(),
                leading_dims: vec![rows],
                last_dim: cols,
            };
            let r = 1 + trial % rows.min(cols);
            let f = full_rank_factorize(&t, RankSpec::Fixed(r), 0.0).unwrap();
            let resid = (&f.e * f.f.transpose() - &m).norm();
            let tail: f64 = f
                .singular_values
                .iter()
                .skip(r)
                .map(|s| s * s)
                .sum::<f64>()
                .sqrt();
            assert_relative_eq!(resid, tail, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn nullspace_of_trivial_embedding() {
        let e = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let basis = orthonormal_complement(&e).unwrap();
        assert_eq!(basis.len(), 1);
        assert_relative_eq!(basis[0][1].abs(), 1.0, max_relative = 1e-14);
        assert!(basis[0][0].abs() <= 1e-14);
    }

    #[test]
    fn random_orthonormal_complement_projector_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = randn_matrix(&mut rng, 10, 3);
        let qr = a.qr();
        let e = qr.q().columns(0, 3).into_owned();
        let basis = orthonormal_complement(&e).unwrap();
        assert_eq!(basis.len(), 7);
        let mut proj = &e * e.transpose();
        for b in &basis {
            proj += b * b.transpose();
        }
        assert!((proj - DMatrix::identity(10, 10)).norm() <= 1e-10);
        for b in &basis {
            assert!((e.transpose() * b).norm() <= 1e-10);
        }
    }

    #[test]
    fn reference_nullspace_spans_published_basis() {
        let case = testdata::reference_case_3x3x6();
        let t = matricize(&case.tensor).unwrap();
        let f = full_rank_factorize(&t, RankSpec::Fixed(4), 0.0).unwrap();
        let ns = nullspace_basis(&f).unwrap();
        assert_eq!(ns.count(), 5);
        // Compare projectors: our orthonormal basis vs the published integer
        // basis (orthonormalized here via QR).
        let ours = DMatrix::from_columns(
            &ns.vectors().iter().cloned().collect::<Vec<_>>(),
        );
        let published = DMatrix::from_columns(&case.nullspace_basis);
        let q = published.qr().q().columns(0, 5).into_owned();
        let p_ours = &ours * ours.transpose();
        let p_pub = &q * q.transpose();
        assert!(
            (p_ours - p_pub).norm() <= 1e-8,
            "nullspace projectors disagree"
        );
    }

    #[test]
    fn empty_nullspace_is_an_error() {
        let t = Matricization {
            matrix: DMatrix::identity(3, 3),
            leading_dims: vec![3],
            last_dim: 3,
        };
        let f = full_rank_factorize(&t, RankSpec::Fixed(3), 0.0).unwrap();
        assert!(matches!(
            nullspace_basis(&f),
            Err(CpdError::EmptyNullspace { rank: 3 })
        ));
    }

    #[test]
    fn fixed_rank_beyond_numerical_rank_sets_warning() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let x = randn_matrix(&mut rng, 3, 2);
        let y = randn_matrix(&mut rng, 4, 2);
        let z = randn_matrix(&mut rng, 5, 2);
        let model = crate::tensor::FactorSet::new(vec![x, y, z]).unwrap();
        let t = matricize(&cp_evaluate(&model)).unwrap();
        let f = full_rank_factorize(&t, RankSpec::Fixed(4), 0.0).unwrap();
        assert!(f.rank_warning, "rank 4 of a rank-2 tensor should warn");
        let f2 = full_rank_factorize(&t, RankSpec::Fixed(2), 0.0).unwrap();
        assert!(!f2.rank_warning);
    }
}
