//! A small reference problem with a fully known closed-form answer, shared
//! by the test suites and benchmarks.
//!
//! The case is a rank-4 tensor in `R^{3x3x6}` whose matricization has rank 4
//! and critical rank 5, so exactly one nullspace equation is dropped when the
//! square system is formed. With all-ones normalization vectors the square
//! system has six real solutions, four of which satisfy the dropped equation
//! and reconstruct the generating rank-1 components exactly.

use nalgebra::{DMatrix, DVector};

use crate::tensor::{cp_evaluate, DenseTensor, FactorSet};

/// Everything known in closed form about the reference case.
pub struct ReferenceCase {
    /// The rank-4 tensor itself (3x3x6).
    pub tensor: DenseTensor,
    /// Generating factors (X 3x4, Y 3x4, Z 6x4).
    pub factors: FactorSet,
    /// An integer basis of `N(Eᵀ)` for the rank-4 matricization (5 vectors
    /// of length 9). The first four generate the kept equations, the fifth
    /// the dropped one.
    pub nullspace_basis: Vec<DVector<f64>>,
    /// All-ones normalization vectors reproduce the known solution set.
    pub norm_vectors: Vec<DVector<f64>>,
    /// The six real solutions `(x1,x2,x3, y1,y2,y3)` of the square system.
    pub solutions: Vec<Vec<f64>>,
    /// How many of [`Self::solutions`] satisfy the dropped equation (the
    /// first `true_solution_count` entries as listed).
    pub true_solution_count: usize,
    /// Factor matrices recovered by the algorithm from the four true
    /// solutions, in the order the solutions are listed.
    pub recovered_factors: FactorSet,
}

/// Build the reference 3x3x6 rank-4 case.
pub fn reference_case_3x3x6() -> ReferenceCase {
    let x = DMatrix::from_row_slice(
        3,
        4,
        &[
            0.0, 1.0, 0.5, 1.0 / 3.0, //
            1.0, 0.0, 1.0, 0.5, //
            0.5, 1.0, 0.0, 1.0,
        ],
    );
    let y = DMatrix::from_row_slice(
        3,
        4,
        &[
            0.5, 1.0, 0.0, 1.0, //
            1.0, 0.0, 1.0, 0.5, //
            0.0, 1.0, 0.5, -1.0 / 3.0,
        ],
    );
    let z = DMatrix::from_row_slice(
        6,
        4,
        &[
            1.0, 1.0, 1.0, 1.0, //
            -1.0, 1.0, 1.0, 1.0, //
            1.0, -1.0, 1.0, 1.0, //
            1.0, 1.0, -1.0, 1.0, //
            1.0, 1.0, 1.0, -1.0, //
            -1.0, -1.0, 1.0, 1.0,
        ],
    );
    let factors = FactorSet::new(vec![x, y, z]).expect("reference factors are valid");
    let tensor = cp_evaluate(&factors);

    let nullspace_basis = vec![
        DVector::from_vec(vec![13.0, 4.0, -8.0, 0.0, 0.0, 0.0, 0.0, 0.0, -5.0]),
        DVector::from_vec(vec![4.0, 2.0, -4.0, 5.0, 0.0, 0.0, 0.0, -5.0, 0.0]),
        DVector::from_vec(vec![68.0, 19.0, -38.0, 15.0, 0.0, 0.0, -30.0, 0.0, 0.0]),
        DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0]),
        DVector::from_vec(vec![26.0, 33.0, -26.0, 20.0, -10.0, 0.0, 0.0, 0.0, 0.0]),
    ];

    let norm_vectors = vec![
        DVector::from_element(3, 1.0),
        DVector::from_element(3, 1.0),
    ];

    // The four true solutions first (normalized generating columns), then
    // the two spurious ones that fail the dropped equation.
    let solutions = vec![
        vec![0.0, 2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 0.0],
        vec![0.5, 0.0, 0.5, 0.5, 0.0, 0.5],
        vec![1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0, 2.0 / 3.0, 1.0 / 3.0],
        vec![
            2.0 / 11.0,
            3.0 / 11.0,
            6.0 / 11.0,
            6.0 / 7.0,
            3.0 / 7.0,
            -2.0 / 7.0,
        ],
        vec![
            19.0 / 45.0,
            26.0 / 135.0,
            52.0 / 135.0,
            20.0 / 63.0,
            10.0 / 63.0,
            11.0 / 21.0,
        ],
        vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    ];

    let x_hat = DMatrix::from_row_slice(
        3,
        4,
        &[
            0.0,
            0.5,
            1.0 / 3.0,
            2.0 / 11.0,
            2.0 / 3.0,
            0.0,
            2.0 / 3.0,
            3.0 / 11.0,
            1.0 / 3.0,
            0.5,
            0.0,
            6.0 / 11.0,
        ],
    );
    let y_hat = DMatrix::from_row_slice(
        3,
        4,
        &[
            1.0 / 3.0,
            0.5,
            0.0,
            6.0 / 7.0,
            2.0 / 3.0,
            0.0,
            2.0 / 3.0,
            3.0 / 7.0,
            0.0,
            0.5,
            1.0 / 3.0,
            -2.0 / 7.0,
        ],
    );
    let z_hat = DMatrix::from_row_slice(
        6,
        4,
        &[
            2.25, 4.0, 2.25, 77.0 / 36.0, //
            -2.25, 4.0, 2.25, 77.0 / 36.0, //
            2.25, -4.0, 2.25, 77.0 / 36.0, //
            2.25, 4.0, -2.25, 77.0 / 36.0, //
            2.25, 4.0, 2.25, -77.0 / 36.0, //
            -2.25, -4.0, 2.25, 77.0 / 36.0,
        ],
    );
    let recovered_factors =
        FactorSet::new(vec![x_hat, y_hat, z_hat]).expect("recovered factors are valid");

    ReferenceCase {
        tensor,
        factors,
        nullspace_basis,
        norm_vectors,
        solutions,
        true_solution_count: 4,
        recovered_factors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{khatri_rao, matricize};

    #[test]
    fn published_basis_annihilates_the_matricization_range() {
        let case = reference_case_3x3x6();
        let t = matricize(&case.tensor).unwrap();
        let kr = khatri_rao(case.factors.factor(1), case.factors.factor(0)).unwrap();
        for u in &case.nullspace_basis {
            // u ⊥ range(T) = range(Y ⊙ X)
            assert!((t.matrix.transpose() * u).norm() <= 1e-12 * t.matrix.norm());
            assert!((kr.transpose() * u).norm() <= 1e-12 * kr.norm());
        }
    }

    #[test]
    fn recovered_factors_reproduce_the_tensor() {
        let case = reference_case_3x3x6();
        let rebuilt = cp_evaluate(&case.recovered_factors);
        let err = rebuilt.sub(&case.tensor).unwrap().frobenius_norm()
            / case.tensor.frobenius_norm();
        assert!(err <= 1e-14, "reference recovered factors err {err}");
    }
}
