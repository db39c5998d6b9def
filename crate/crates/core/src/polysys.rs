//! The square polynomial system read off a nullspace basis of `Eᵀ`.
//!
//! Each nullspace vector, reshaped to the leading mode dimensions, yields one
//! bilinear (order 3) or trilinear (order 4) equation `xᵀUy = 0` resp.
//! `uᵀ(z⊗y⊗x) = 0`. The first `Σ(dim−1)` equations are kept and combined with
//! one affine normalization per mode to form a square system; the remaining
//! equations are "dropped" and only enter through the residual `δ` used to
//! select solutions. Coefficients are stored as unvectorized blocks so the
//! bilinear and trilinear cases share one contraction routine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::CpdError;
use crate::rankfact::NullspaceBasis;
use crate::tensor::DenseTensor;
use crate::Result;

/// Critical rank `R* = ∏ dims − Σ(dims − 1)` of the leading dimensions.
pub fn critical_rank(leading_dims: &[usize]) -> usize {
    let prod: usize = leading_dims.iter().product();
    let sum: usize = leading_dims.iter().map(|&d| d - 1).sum();
    prod - sum
}

/// A point in the (complex) solution space, one coordinate block per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPoint {
    parts: Vec<DVector<Complex64>>,
}

impl EvalPoint {
    pub fn new(parts: Vec<DVector<Complex64>>) -> Self {
        Self { parts }
    }

    pub fn from_real_parts(parts: &[DVector<f64>]) -> Self {
        Self {
            parts: parts
                .iter()
                .map(|p| p.map(|x| Complex64::new(x, 0.0)))
                .collect(),
        }
    }

    /// Split a flat coordinate vector into per-mode blocks.
    pub fn from_flat(dims: &[usize], flat: &DVector<Complex64>) -> Self {
        let mut parts = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &d in dims {
            parts.push(DVector::from_iterator(d, (0..d).map(|i| flat[off + i])));
            off += d;
        }
        Self { parts }
    }

    pub fn parts(&self) -> &[DVector<Complex64>] {
        &self.parts
    }

    pub fn part(&self, mode: usize) -> &DVector<Complex64> {
        &self.parts[mode]
    }

    pub fn mode_dims(&self) -> Vec<usize> {
        self.parts.iter().map(|p| p.len()).collect()
    }

    pub fn flatten(&self) -> DVector<Complex64> {
        let n: usize = self.parts.iter().map(|p| p.len()).sum();
        let mut out = DVector::zeros(n);
        let mut off = 0;
        for p in &self.parts {
            for (i, &x) in p.iter().enumerate() {
                out[off + i] = x;
            }
            off += p.len();
        }
        out
    }

    pub fn max_imag(&self) -> f64 {
        self.parts
            .iter()
            .flat_map(|p| p.iter())
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn max_real(&self) -> f64 {
        self.parts
            .iter()
            .flat_map(|p| p.iter())
            .map(|c| c.re.abs())
            .fold(0.0, f64::max)
    }

    /// Relative reality test: `max|Im| <= tol * (1 + max|Re|)`.
    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol * (1.0 + self.max_real())
    }

    /// Real projection of the coordinates (imaginary parts discarded).
    pub fn real_parts(&self) -> Vec<DVector<f64>> {
        self.parts.iter().map(|p| p.map(|c| c.re)).collect()
    }

    /// Euclidean distance to another point of the same shape.
    pub fn distance(&self, other: &EvalPoint) -> f64 {
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// The square polynomial system plus the dropped-equation blocks.
#[derive(Debug, Clone)]
pub struct PolySystem {
    leading_dims: Vec<usize>,
    kept: Vec<DenseTensor>,
    dropped: Vec<DenseTensor>,
    norms: Vec<DVector<f64>>,
    seed: u64,
}

impl PolySystem {
    /// Assemble a system from explicit coefficient blocks.
    ///
    /// `kept` must hold `Σ(dim−1)` blocks and every block's dimensions must
    /// equal `leading_dims`. The implied rank `∏dims − (kept + dropped)` must
    /// be positive.
    pub fn from_blocks(
        leading_dims: Vec<usize>,
        kept: Vec<DenseTensor>,
        dropped: Vec<DenseTensor>,
        norms: Vec<DVector<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let modes = leading_dims.len();
        if modes != 2 && modes != 3 {
            return Err(CpdError::UnsupportedOrder {
                order: modes + 1,
                expected: "3 or 4",
            });
        }
        let kept_needed: usize = leading_dims.iter().map(|&d| d - 1).sum();
        if kept.len() != kept_needed {
            return Err(CpdError::invalid(format!(
                "expected {kept_needed} kept blocks, got {}",
                kept.len()
            )));
        }
        let prod: usize = leading_dims.iter().product();
        if kept.len() + dropped.len() >= prod {
            return Err(CpdError::invalid(
                "too many coefficient blocks for the ambient dimension",
            ));
        }
        for b in kept.iter().chain(&dropped) {
            if b.dims() != leading_dims.as_slice() {
                return Err(CpdError::invalid("coefficient block dims mismatch"));
            }
        }
        if norms.len() != modes {
            return Err(CpdError::invalid("one normalization vector per mode required"));
        }
        for (m, c) in norms.iter().enumerate() {
            if c.len() != leading_dims[m] {
                return Err(CpdError::invalid(format!(
                    "normalization vector {m} has wrong length"
                )));
            }
        }
        Ok(Self {
            leading_dims,
            kept,
            dropped,
            norms,
            seed,
        })
    }

    pub fn leading_dims(&self) -> &[usize] {
        &self.leading_dims
    }

    pub fn kept_blocks(&self) -> &[DenseTensor] {
        &self.kept
    }

    pub fn dropped_blocks(&self) -> &[DenseTensor] {
        &self.dropped
    }

    pub fn norm_vectors(&self) -> &[DVector<f64>] {
        &self.norms
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Implied rank: ambient dimension minus the number of nullspace blocks.
    pub fn rank(&self) -> usize {
        let prod: usize = self.leading_dims.iter().product();
        prod - self.kept.len() - self.dropped.len()
    }

    /// Total number of scalar unknowns (and equations).
    pub fn dimension(&self) -> usize {
        self.leading_dims.iter().sum()
    }

    fn check_point(&self, p: &EvalPoint) -> Result<()> {
        if p.mode_dims() != self.leading_dims {
            return Err(CpdError::invalid("evaluation point has wrong mode dims"));
        }
        Ok(())
    }

    /// Evaluate the square system: kept multilinear equations followed by the
    /// affine normalizations `c_mᵀ v_m − 1`.
    pub fn eval(&self, p: &EvalPoint) -> Result<DVector<Complex64>> {
        self.check_point(p)?;
        Ok(self.eval_unchecked(p.parts()))
    }

    pub(crate) fn eval_unchecked(&self, parts: &[DVector<Complex64>]) -> DVector<Complex64> {
        let n = self.dimension();
        let mut out = DVector::zeros(n);
        for (j, block) in self.kept.iter().enumerate() {
            out[j] = contract_all(block, parts);
        }
        for (m, c) in self.norms.iter().enumerate() {
            let mut acc = Complex64::new(-1.0, 0.0);
            for (i, &ci) in c.iter().enumerate() {
                acc += ci * parts[m][i];
            }
            out[self.kept.len() + m] = acc;
        }
        out
    }

    /// Jacobian of [`Self::eval`] with respect to all coordinates, modes
    /// stacked in order.
    pub fn jacobian(&self, p: &EvalPoint) -> Result<DMatrix<Complex64>> {
        self.check_point(p)?;
        Ok(self.jacobian_unchecked(p.parts()))
    }

    pub(crate) fn jacobian_unchecked(&self, parts: &[DVector<Complex64>]) -> DMatrix<Complex64> {
        let n = self.dimension();
        let modes = self.leading_dims.len();
        let offsets = self.mode_offsets();
        let mut jac = DMatrix::zeros(n, n);
        for (j, block) in self.kept.iter().enumerate() {
            for m in 0..modes {
                let grad = contract_gradient(block, parts, m);
                for (i, &g) in grad.iter().enumerate() {
                    jac[(j, offsets[m] + i)] = g;
                }
            }
        }
        for (m, c) in self.norms.iter().enumerate() {
            for (i, &ci) in c.iter().enumerate() {
                jac[(self.kept.len() + m, offsets[m] + i)] = Complex64::new(ci, 0.0);
            }
        }
        jac
    }

    pub(crate) fn mode_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.leading_dims.len());
        let mut off = 0;
        for &d in &self.leading_dims {
            offsets.push(off);
            off += d;
        }
        offsets
    }

    /// Residual `δ = sqrt(Σ qᵢ²)` of the dropped equations at a real point.
    ///
    /// The point is expected to be (numerically) real; evaluation uses the
    /// real projection of the coordinates. Returns 0 when nothing was
    /// dropped.
    pub fn dropped_residual(&self, p: &EvalPoint) -> f64 {
        let parts = p.real_parts();
        self.dropped
            .iter()
            .map(|block| {
                let q = contract_all_real(block, &parts);
                q * q
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Norm of the kept multilinear equations only (no normalization rows).
    pub fn bilinear_residual(&self, p: &EvalPoint) -> Result<f64> {
        self.check_point(p)?;
        Ok(self
            .kept
            .iter()
            .map(|block| contract_all(block, p.parts()).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

/// Build the square system from a nullspace basis: the first `Σ(dim−1)`
/// basis vectors become kept blocks, the rest dropped blocks, and the
/// normalization vectors are drawn standard-normal from the seed.
pub fn build_system(
    ns: &NullspaceBasis,
    leading_dims: &[usize],
    rank: usize,
    seed: u64,
) -> Result<PolySystem> {
    let prod: usize = leading_dims.iter().product();
    let critical = critical_rank(leading_dims);
    if rank > critical {
        return Err(CpdError::UnderdeterminedRank { rank, critical });
    }
    if rank == 0 {
        return Err(CpdError::invalid("rank must be positive"));
    }
    if ns.count() != prod - rank {
        return Err(CpdError::invalid(format!(
            "nullspace has {} vectors, expected {}",
            ns.count(),
            prod - rank
        )));
    }
    if ns.ambient_dim() != prod {
        return Err(CpdError::invalid("nullspace ambient dimension mismatch"));
    }

    let kept_count: usize = leading_dims.iter().map(|&d| d - 1).sum();
    let mut kept = Vec::with_capacity(kept_count);
    let mut dropped = Vec::with_capacity(ns.count() - kept_count);
    for (i, u) in ns.vectors().iter().enumerate() {
        let block = DenseTensor::new(leading_dims.to_vec(), u.as_slice().to_vec())?;
        if i < kept_count {
            kept.push(block);
        } else {
            dropped.push(block);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(crate::seeding::subseed(
        seed,
        crate::seeding::domain::NORM_VECTORS,
    ));
    let norms = leading_dims
        .iter()
        .map(|&d| DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng))))
        .collect();

    PolySystem::from_blocks(leading_dims.to_vec(), kept, dropped, norms, seed)
}

/// Full contraction of a coefficient block with one complex vector per mode.
fn contract_all(block: &DenseTensor, parts: &[DVector<Complex64>]) -> Complex64 {
    let dims = block.dims();
    let mut idx = vec![0usize; dims.len()];
    let mut acc = Complex64::new(0.0, 0.0);
    for &coeff in block.data() {
        if coeff != 0.0 {
            let mut p = Complex64::new(coeff, 0.0);
            for (n, &i) in idx.iter().enumerate() {
                p *= parts[n][i];
            }
            acc += p;
        }
        for (i, d) in idx.iter_mut().zip(dims) {
            *i += 1;
            if *i < *d {
                break;
            }
            *i = 0;
        }
    }
    acc
}

fn contract_all_real(block: &DenseTensor, parts: &[DVector<f64>]) -> f64 {
    let dims = block.dims();
    let mut idx = vec![0usize; dims.len()];
    let mut acc = 0.0;
    for &coeff in block.data() {
        if coeff != 0.0 {
            let mut p = coeff;
            for (n, &i) in idx.iter().enumerate() {
                p *= parts[n][i];
            }
            acc += p;
        }
        for (i, d) in idx.iter_mut().zip(dims) {
            *i += 1;
            if *i < *d {
                break;
            }
            *i = 0;
        }
    }
    acc
}

/// Gradient of the full contraction with respect to the `skip`-th mode.
fn contract_gradient(
    block: &DenseTensor,
    parts: &[DVector<Complex64>],
    skip: usize,
) -> DVector<Complex64> {
    let dims = block.dims();
    let mut out = DVector::zeros(dims[skip]);
    let mut idx = vec![0usize; dims.len()];
    for &coeff in block.data() {
        if coeff != 0.0 {
            let mut p = Complex64::new(coeff, 0.0);
            for (n, &i) in idx.iter().enumerate() {
                if n != skip {
                    p *= parts[n][i];
                }
            }
            out[idx[skip]] += p;
        }
        for (i, d) in idx.iter_mut().zip(dims) {
            *i += 1;
            if *i < *d {
                break;
            }
            *i = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rankfact::{full_rank_factorize, nullspace_basis, RankSpec};
    use crate::tensor::{cp_evaluate, matricize, FactorSet};
    use crate::testdata;
    use approx::assert_relative_eq;

    fn reference_system() -> PolySystem {
        let case = testdata::reference_case_3x3x6();
        let kept: Vec<DenseTensor> = case.nullspace_basis[..4]
            .iter()
            .map(|u| DenseTensor::new(vec![3, 3], u.as_slice().to_vec()).unwrap())
            .collect();
        let dropped = vec![DenseTensor::new(
            vec![3, 3],
            case.nullspace_basis[4].as_slice().to_vec(),
        )
        .unwrap()];
        PolySystem::from_blocks(vec![3, 3], kept, dropped, case.norm_vectors.clone(), 0)
            .unwrap()
    }

    fn complex_point(xs: &[f64]) -> EvalPoint {
        let x = DVector::from_iterator(3, xs[..3].iter().map(|&v| Complex64::new(v, 0.0)));
        let y = DVector::from_iterator(3, xs[3..].iter().map(|&v| Complex64::new(v, 0.0)));
        EvalPoint::new(vec![x, y])
    }

    #[test]
    fn critical_rank_values() {
        assert_eq!(critical_rank(&[3, 3]), 5);
        assert_eq!(critical_rank(&[1, 7]), 1);
        assert_eq!(critical_rank(&[3, 3, 4]), 29);
        assert_eq!(critical_rank(&[2, 4]), 4);
    }

    #[test]
    fn reference_system_vanishes_on_published_solutions() {
        let case = testdata::reference_case_3x3x6();
        let sys = reference_system();
        for sol in &case.solutions {
            let p = complex_point(sol);
            let r = sys.eval(&p).unwrap().norm();
            assert!(r <= 1e-12, "residual {r} at {sol:?}");
        }
    }

    #[test]
    fn dropped_residual_separates_true_from_spurious() {
        let case = testdata::reference_case_3x3x6();
        let sys = reference_system();
        for (i, sol) in case.solutions.iter().enumerate() {
            let p = complex_point(sol);
            let delta = sys.dropped_residual(&p);
            if i < case.true_solution_count {
                assert!(delta <= 1e-12, "true solution {i} has delta {delta}");
            } else {
                assert!(delta > 1e-3, "spurious solution {i} has delta {delta}");
            }
        }
    }

    #[test]
    fn first_kept_equation_matches_published_coefficients() {
        // 13 x1 y1 + 4 x2 y1 − 8 x3 y1 − 5 x3 y3 at a few probe points.
        let sys = reference_system();
        let probe = |x: [f64; 3], y: [f64; 3]| -> f64 {
            let p = complex_point(&[x[0], x[1], x[2], y[0], y[1], y[2]]);
            sys.eval(&p).unwrap()[0].re
        };
        assert_relative_eq!(probe([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), 13.0);
        assert_relative_eq!(probe([0.0, 1.0, 0.0], [1.0, 0.0, 0.0]), 4.0);
        assert_relative_eq!(probe([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]), -8.0);
        assert_relative_eq!(probe([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]), -5.0);
        assert_relative_eq!(probe([0.0, 0.0, 1.0], [0.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn eval_at_origin_gives_negated_normalizations() {
        let sys = reference_system();
        let p = complex_point(&[0.0; 6]);
        let v = sys.eval(&p).unwrap();
        for j in 0..4 {
            assert_eq!(v[j], Complex64::new(0.0, 0.0));
        }
        assert_eq!(v[4], Complex64::new(-1.0, 0.0));
        assert_eq!(v[5], Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn bilinear_entries_match_double_loop() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = reference_system();
        let coords: Vec<Complex64> = (0..6)
            .map(|_| {
                Complex64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let x = DVector::from_column_slice(&coords[..3]);
        let y = DVector::from_column_slice(&coords[3..]);
        let p = EvalPoint::new(vec![x.clone(), y.clone()]);
        let v = sys.eval(&p).unwrap();
        for (j, block) in sys.kept_blocks().iter().enumerate() {
            let mut expect = Complex64::new(0.0, 0.0);
            for a in 0..3 {
                for b in 0..3 {
                    expect += block.get(&[a, b]) * x[a] * y[b];
                }
            }
            assert!((v[j] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn bilinearity_scaling() {
        // kept equations are bilinear: scaling (x, y) by (a, b) scales them by a*b
        let sys = reference_system();
        let p = complex_point(&[0.3, -0.7, 1.1, 0.2, 0.9, -0.4]);
        let base = sys.eval(&p).unwrap();
        let a = Complex64::new(1.7, 0.3);
        let b = Complex64::new(-0.6, 1.2);
        let scaled = EvalPoint::new(vec![p.part(0) * a, p.part(1) * b]);
        let v = sys.eval(&scaled).unwrap();
        for j in 0..sys.kept_blocks().len() {
            let expect = base[j] * a * b;
            assert!((v[j] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn jacobian_matches_central_differences() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sys = reference_system();
        let coords: Vec<Complex64> = (0..6)
            .map(|_| {
                Complex64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let flat = DVector::from_column_slice(&coords);
        let p = EvalPoint::from_flat(&[3, 3], &flat);
        let jac = sys.jacobian(&p).unwrap();
        let h = 1e-7;
        for col in 0..6 {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[col] += Complex64::new(h, 0.0);
            minus[col] -= Complex64::new(h, 0.0);
            let fp = sys.eval(&EvalPoint::from_flat(&[3, 3], &plus)).unwrap();
            let fm = sys.eval(&EvalPoint::from_flat(&[3, 3], &minus)).unwrap();
            for row in 0..6 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!(
                    (jac[(row, col)] - fd).norm() <= 1e-6,
                    "jacobian mismatch at ({row},{col})"
                );
            }
        }
    }

    #[test]
    fn jacobian_unit_point_pattern() {
        // At x = e1, y = e1 with U(0,0) = 0, the row is [0, φᵀ | 0, φ'ᵀ]
        // where φ is the first column tail and φ' the first row tail of U.
        let block = DenseTensor::new(
            vec![3, 3],
            vec![0.0, 2.0, 3.0, 4.0, 9.0, 9.0, 5.0, 9.0, 9.0],
        )
        .unwrap();
        let norms = vec![DVector::from_element(3, 1.0), DVector::from_element(3, 1.0)];
        let mut kept = vec![block];
        kept.extend((0..3).map(|_| DenseTensor::zeros(vec![3, 3]).unwrap()));
        let sys = PolySystem::from_blocks(vec![3, 3], kept, vec![], norms, 0).unwrap();
        let p = complex_point(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let jac = sys.jacobian(&p).unwrap();
        let row: Vec<f64> = (0..6).map(|c| jac[(0, c)].re).collect();
        assert_eq!(row, vec![0.0, 2.0, 3.0, 0.0, 4.0, 5.0]);
        // zero blocks contribute zero rows apart from normalizations
        for j in 1..4 {
            assert!((0..6).all(|c| jac[(j, c)].norm() == 0.0));
        }
        assert_eq!(jac[(4, 0)].re, 1.0);
        assert_eq!(jac[(5, 3)].re, 1.0);
    }

    #[test]
    fn build_system_counts_and_regime() {
        let case = testdata::reference_case_3x3x6();
        let t = matricize(&case.tensor).unwrap();
        let fact = full_rank_factorize(&t, RankSpec::Fixed(4), 0.0).unwrap();
        let ns = nullspace_basis(&fact).unwrap();
        let sys = build_system(&ns, &[3, 3], 4, 7).unwrap();
        assert_eq!(sys.kept_blocks().len(), 4);
        assert_eq!(sys.dropped_blocks().len(), 1);
        assert_eq!(sys.rank(), 4);
        assert_eq!(sys.dimension(), 6);

        // every block, vectorized, lies in N(Eᵀ)
        for block in sys.kept_blocks().iter().chain(sys.dropped_blocks()) {
            let v = DVector::from_column_slice(block.data());
            assert!((fact.e.transpose() * v).norm() <= 1e-10);
        }

        // rank above critical is refused
        assert!(matches!(
            build_system(&ns, &[3, 3], 6, 7),
            Err(CpdError::InvalidInput(_)) | Err(CpdError::UnderdeterminedRank { .. })
        ));
    }

    #[test]
    fn rank_equal_critical_drops_nothing() {
        // 2x2xK at R = R* = 2: two kept blocks, none dropped.
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut randn = |r: usize, c: usize| {
            DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng))
        };
        let model = FactorSet::new(vec![randn(2, 2), randn(2, 2), randn(5, 2)]).unwrap();
        let t = matricize(&cp_evaluate(&model)).unwrap();
        let fact = full_rank_factorize(&t, RankSpec::Fixed(2), 0.0).unwrap();
        let ns = nullspace_basis(&fact).unwrap();
        assert_eq!(ns.count(), 2);
        let sys = build_system(&ns, &[2, 2], 2, 1).unwrap();
        assert_eq!(sys.kept_blocks().len(), 2);
        assert!(sys.dropped_blocks().is_empty());
        // with nothing dropped the residual is identically zero
        let p = EvalPoint::from_real_parts(&[
            DVector::from_vec(vec![0.3, 0.4]),
            DVector::from_vec(vec![-1.0, 2.0]),
        ]);
        assert_eq!(sys.dropped_residual(&p), 0.0);
        // kept blocks are exactly the unvec'd nullspace vectors
        for (block, u) in sys.kept_blocks().iter().zip(ns.vectors()) {
            assert_eq!(block.data(), u.as_slice());
        }
    }

    #[test]
    fn norm_vectors_are_seed_deterministic() {
        let case = testdata::reference_case_3x3x6();
        let t = matricize(&case.tensor).unwrap();
        let fact = full_rank_factorize(&t, RankSpec::Fixed(4), 0.0).unwrap();
        let ns = nullspace_basis(&fact).unwrap();
        let a = build_system(&ns, &[3, 3], 4, 42).unwrap();
        let b = build_system(&ns, &[3, 3], 4, 42).unwrap();
        let c = build_system(&ns, &[3, 3], 4, 43).unwrap();
        assert_eq!(a.norm_vectors()[0], b.norm_vectors()[0]);
        assert_ne!(a.norm_vectors()[0], c.norm_vectors()[0]);
    }
}
