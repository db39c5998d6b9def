//! Multi-homogeneous linear-product start systems and predictor-corrector
//! path tracking.
//!
//! The start system `Q0` multiplies one random linear form per mode in each
//! product equation and reuses the affine normalizations of the target
//! system. Its solutions are enumerated exactly by distributing the product
//! equations among the modes and solving small dense linear systems. Each
//! start solution is tracked along `H(v,t) = (1−t)γ·Q0(v) + t·P(v)` with an
//! Euler predictor and a Newton corrector.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::CpdError;
use crate::polysys::{EvalPoint, PolySystem};
use crate::seeding::{domain, subseed};
use crate::Result;

/// Multi-homogeneous Bézout number for one-per-mode variable groups:
/// `(Σ(d−1))! / ∏(d−1)!`.
pub fn bezout_count(leading_dims: &[usize]) -> usize {
    let mut result: u128 = 1;
    let mut pool: u128 = 0;
    for &d in leading_dims {
        let k = (d - 1) as u128;
        for i in 1..=k {
            // multiply by C(pool + i, i) incrementally: result *= (pool+i)/i
            result = result
                .checked_mul(pool + i)
                .expect("Bezout count overflow")
                / i;
        }
        pool += k;
    }
    usize::try_from(result).expect("Bezout count exceeds usize")
}

/// Linear-product start system with known, enumerable solutions.
#[derive(Debug, Clone)]
pub struct StartSystem {
    leading_dims: Vec<usize>,
    /// `forms[mode][j]`: the mode's linear form in the `j`-th product
    /// equation; `j` ranges over `Σ(dim−1)` equations.
    forms: Vec<Vec<DVector<f64>>>,
    norms: Vec<DVector<f64>>,
    seed: u64,
}

const INDEPENDENCE_TOL: f64 = 1e-10;
const MAX_REDRAWS: usize = 32;
const MAX_SUBSET_SAMPLES: usize = 200;

impl StartSystem {
    /// Generate a start system whose normalization vectors are shared with
    /// an existing polynomial system (the homotopy then deforms only the
    /// product equations).
    pub fn with_norms(
        leading_dims: &[usize],
        norms: Vec<DVector<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if norms.len() != leading_dims.len() {
            return Err(CpdError::invalid("one normalization vector per mode"));
        }
        for (c, &d) in norms.iter().zip(leading_dims) {
            if c.len() != d {
                return Err(CpdError::invalid("normalization vector length mismatch"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, domain::START_FORMS));
        let eq_count: usize = leading_dims.iter().map(|&d| d - 1).sum();
        for _ in 0..MAX_REDRAWS {
            let forms: Vec<Vec<DVector<f64>>> = leading_dims
                .iter()
                .map(|&d| {
                    (0..eq_count)
                        .map(|_| {
                            DVector::from_iterator(
                                d,
                                (0..d).map(|_| StandardNormal.sample(&mut rng)),
                            )
                        })
                        .collect()
                })
                .collect();
            let candidate = Self {
                leading_dims: leading_dims.to_vec(),
                forms,
                norms: norms.clone(),
                seed,
            };
            if candidate.forms_independent(&mut rng) {
                return Ok(candidate);
            }
        }
        Err(CpdError::DegenerateRandomness(
            "could not draw independent start-system forms".into(),
        ))
    }

    /// Check that any `d` forms of each mode are linearly independent, by
    /// subset determinants (exhaustive when small, sampled otherwise).
    fn forms_independent(&self, rng: &mut ChaCha8Rng) -> bool {
        let eq_count = self.equation_count();
        for (mode, &d) in self.leading_dims.iter().enumerate() {
            if eq_count < d {
                continue; // fewer forms than the dimension: nothing to pin down
            }
            let n_subsets = binomial(eq_count, d);
            let check = |subset: &[usize]| -> bool {
                let cols: Vec<DVector<f64>> =
                    subset.iter().map(|&j| self.forms[mode][j].clone()).collect();
                let m = DMatrix::from_columns(&cols);
                m.determinant().abs() > INDEPENDENCE_TOL
            };
            if n_subsets <= MAX_SUBSET_SAMPLES {
                for subset in (0..eq_count).combinations(d) {
                    if !check(&subset) {
                        return false;
                    }
                }
            } else {
                for _ in 0..MAX_SUBSET_SAMPLES {
                    let mut subset: Vec<usize> = Vec::with_capacity(d);
                    while subset.len() < d {
                        let j = rng.random_range(0..eq_count);
                        if !subset.contains(&j) {
                            subset.push(j);
                        }
                    }
                    if !check(&subset) {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn leading_dims(&self) -> &[usize] {
        &self.leading_dims
    }

    pub fn forms(&self, mode: usize) -> &[DVector<f64>] {
        &self.forms[mode]
    }

    pub fn norm_vectors(&self) -> &[DVector<f64>] {
        &self.norms
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of product equations, `Σ(dim−1)`.
    pub fn equation_count(&self) -> usize {
        self.leading_dims.iter().map(|&d| d - 1).sum()
    }

    pub fn dimension(&self) -> usize {
        self.leading_dims.iter().sum()
    }

    pub(crate) fn eval_unchecked(&self, parts: &[DVector<Complex64>]) -> DVector<Complex64> {
        let n = self.dimension();
        let eq_count = self.equation_count();
        let mut out = DVector::zeros(n);
        for j in 0..eq_count {
            let mut p = Complex64::new(1.0, 0.0);
            for (mode, part) in parts.iter().enumerate() {
                p *= dot_rc(&self.forms[mode][j], part);
            }
            out[j] = p;
        }
        for (m, c) in self.norms.iter().enumerate() {
            out[eq_count + m] = dot_rc(c, &parts[m]) - Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn eval(&self, p: &EvalPoint) -> Result<DVector<Complex64>> {
        if p.mode_dims() != self.leading_dims {
            return Err(CpdError::invalid("evaluation point has wrong mode dims"));
        }
        Ok(self.eval_unchecked(p.parts()))
    }

    pub(crate) fn jacobian_unchecked(&self, parts: &[DVector<Complex64>]) -> DMatrix<Complex64> {
        let n = self.dimension();
        let eq_count = self.equation_count();
        let modes = self.leading_dims.len();
        let mut offsets = Vec::with_capacity(modes);
        let mut off = 0;
        for &d in &self.leading_dims {
            offsets.push(off);
            off += d;
        }
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..eq_count {
            let dots: Vec<Complex64> = (0..modes)
                .map(|m| dot_rc(&self.forms[m][j], &parts[m]))
                .collect();
            for m in 0..modes {
                let mut rest = Complex64::new(1.0, 0.0);
                for (mm, &dm) in dots.iter().enumerate() {
                    if mm != m {
                        rest *= dm;
                    }
                }
                for (i, &fi) in self.forms[m][j].iter().enumerate() {
                    jac[(j, offsets[m] + i)] = rest * fi;
                }
            }
        }
        for (m, c) in self.norms.iter().enumerate() {
            for (i, &ci) in c.iter().enumerate() {
                jac[(eq_count + m, offsets[m] + i)] = Complex64::new(ci, 0.0);
            }
        }
        jac
    }
}

/// Generate a self-contained start system (normalization vectors drawn from
/// the same seed).
pub fn make_start_system(leading_dims: &[usize], seed: u64) -> Result<StartSystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, domain::NORM_VECTORS));
    let norms = leading_dims
        .iter()
        .map(|&d| DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng))))
        .collect();
    StartSystem::with_norms(leading_dims, norms, seed)
}

/// Enumerate all `M` solutions of the start system.
///
/// Every way of distributing the product equations among the modes (mode `m`
/// absorbs `dim − 1` of them) determines one solution: the absorbed forms
/// plus the normalization row make a square nonsingular linear system per
/// mode.
pub fn enumerate_start_solutions(q: &StartSystem) -> Result<Vec<EvalPoint>> {
    let dims = q.leading_dims().to_vec();
    let eq_count = q.equation_count();
    let all: Vec<usize> = (0..eq_count).collect();
    let mut assignments: Vec<Vec<Vec<usize>>> = Vec::new();
    distribute(&all, &dims, 0, &mut Vec::new(), &mut assignments);

    let expected = bezout_count(&dims);
    if assignments.len() != expected {
        return Err(CpdError::DegenerateRandomness(format!(
            "enumerated {} assignments, expected {expected}",
            assignments.len()
        )));
    }

    let mut solutions = Vec::with_capacity(expected);
    for assignment in &assignments {
        let mut parts: Vec<DVector<Complex64>> = Vec::with_capacity(dims.len());
        for (mode, taken) in assignment.iter().enumerate() {
            let d = dims[mode];
            let mut a = DMatrix::zeros(d, d);
            for (row, &j) in taken.iter().enumerate() {
                for col in 0..d {
                    a[(row, col)] = q.forms(mode)[j][col];
                }
            }
            for col in 0..d {
                a[(d - 1, col)] = q.norm_vectors()[mode][col];
            }
            let mut rhs = DVector::zeros(d);
            rhs[d - 1] = 1.0;
            let sol = a.lu().solve(&rhs).ok_or_else(|| {
                CpdError::DegenerateRandomness("singular start subsystem".into())
            })?;
            parts.push(sol.map(|x| Complex64::new(x, 0.0)));
        }
        let point = EvalPoint::new(parts);
        let resid = q.eval_unchecked(point.parts()).norm();
        if resid > 1e-10 {
            return Err(CpdError::DegenerateRandomness(format!(
                "start solution residual {resid} above 1e-10"
            )));
        }
        solutions.push(point);
    }
    Ok(solutions)
}

/// Recursively split the remaining equation indices: mode `m` takes any
/// `dims[m] − 1` of them.
fn distribute(
    remaining: &[usize],
    dims: &[usize],
    mode: usize,
    acc: &mut Vec<Vec<usize>>,
    out: &mut Vec<Vec<Vec<usize>>>,
) {
    if mode == dims.len() {
        if remaining.is_empty() {
            out.push(acc.clone());
        }
        return;
    }
    let take = dims[mode] - 1;
    for subset in remaining.iter().copied().combinations(take) {
        let rest: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|j| !subset.contains(j))
            .collect();
        acc.push(subset);
        distribute(&rest, dims, mode + 1, acc, out);
        acc.pop();
    }
}

/// Knobs of the predictor-corrector tracker.
#[derive(Debug, Clone)]
pub struct TrackerConfig {
    /// Unit-modulus homotopy constant.
    pub gamma: Complex64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub divergence_norm: f64,
    /// Target residual of the final Newton polish on `P` at `t = 1`.
    pub t_end_refine_tol: f64,
    pub seed: u64,
}

impl TrackerConfig {
    /// Defaults with a seed-derived homotopy constant.
    pub fn from_seed(seed: u64) -> Self {
        Self {
            gamma: gamma_for_attempt(seed, 0),
            initial_step: 0.05,
            min_step: 1e-7,
            max_step: 0.2,
            newton_tol: 1e-10,
            newton_max_iters: 5,
            divergence_norm: 1e8,
            t_end_refine_tol: 1e-12,
            seed,
        }
    }
}

/// Unit-modulus homotopy constant `exp(iθ)` with `θ` kept away from the real
/// axis (`|θ| ∈ [0.1π, 0.9π]`): a near-real constant keeps the homotopy
/// real-symmetric and lets real paths cross, which defeats path tracking.
/// `attempt` selects independent redraws for collision recovery.
pub fn gamma_for_attempt(seed: u64, attempt: u64) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(
        seed,
        domain::GAMMA.wrapping_add(attempt.wrapping_mul(0x9e37)),
    ));
    let u: f64 = rng.random();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let theta = sign * std::f64::consts::PI * (0.1 + 0.8 * u);
    Complex64::new(theta.cos(), theta.sin())
}

/// Where a tracked path ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStatus {
    Converged,
    Diverged,
    Stalled,
}

/// Outcome of tracking one start solution to `t = 1`.
#[derive(Debug, Clone)]
pub struct PathResult {
    pub start_index: usize,
    pub endpoint: EvalPoint,
    pub status: PathStatus,
    /// `‖P(endpoint)‖` after the final polish.
    pub final_residual: f64,
    pub steps: usize,
    pub is_real: bool,
}

const DEFAULT_REALITY_TOL: f64 = 1e-8;
const MAX_TRACK_STEPS: usize = 20_000;

/// Track one start solution of `Q0` along `H = (1−t)γQ0 + tP` to `t = 1`.
///
/// Euler predictor (tangent from a linear solve), Newton corrector at fixed
/// `t`, step halved on corrector failure and grown 1.5x after two successes.
/// All failure modes are encoded in the returned status, never as errors.
pub fn track_path(
    p: &PolySystem,
    q: &StartSystem,
    start: &EvalPoint,
    start_index: usize,
    cfg: &TrackerConfig,
) -> PathResult {
    debug_assert_eq!(p.leading_dims(), q.leading_dims());
    let dims = p.leading_dims().to_vec();
    let gamma = cfg.gamma;

    let eval_h = |flat: &DVector<Complex64>, t: f64| -> DVector<Complex64> {
        let pt = EvalPoint::from_flat(&dims, flat);
        let pv = p.eval_unchecked(pt.parts());
        let qv = q.eval_unchecked(pt.parts());
        qv * (gamma * (1.0 - t)) + pv * Complex64::new(t, 0.0)
    };
    let jac_h = |flat: &DVector<Complex64>, t: f64| -> DMatrix<Complex64> {
        let pt = EvalPoint::from_flat(&dims, flat);
        let pj = p.jacobian_unchecked(pt.parts());
        let qj = q.jacobian_unchecked(pt.parts());
        qj * (gamma * (1.0 - t)) + pj * Complex64::new(t, 0.0)
    };
    // dH/dt = P − γ Q0
    let dh_dt = |flat: &DVector<Complex64>| -> DVector<Complex64> {
        let pt = EvalPoint::from_flat(&dims, flat);
        let pv = p.eval_unchecked(pt.parts());
        let qv = q.eval_unchecked(pt.parts());
        pv - qv * gamma
    };

    let finish = |flat: DVector<Complex64>, status: PathStatus, steps: usize| -> PathResult {
        let endpoint = EvalPoint::from_flat(&dims, &flat);
        let final_residual = p.eval_unchecked(endpoint.parts()).norm();
        let is_real = endpoint.is_real(DEFAULT_REALITY_TOL);
        PathResult {
            start_index,
            endpoint,
            status,
            final_residual,
            steps,
        is_real,
        }
    };

    let mut v = start.flatten();
    let mut t = 0.0f64;
    let mut h = cfg.initial_step.clamp(cfg.min_step, cfg.max_step);
    let mut steps = 0usize;
    let mut consecutive_ok = 0usize;

    while t < 1.0 {
        steps += 1;
        if steps > MAX_TRACK_STEPS {
            return finish(v, PathStatus::Stalled, steps);
        }
        if v.norm() > cfg.divergence_norm {
            return finish(v, PathStatus::Diverged, steps);
        }

        let h_eff = h.min(1.0 - t);
        let t_next = if 1.0 - t <= h { 1.0 } else { t + h_eff };

        // Euler predictor
        let predicted = match jac_h(&v, t).lu().solve(&(-dh_dt(&v))) {
            Some(tangent) => &v + tangent * Complex64::new(h_eff, 0.0),
            None => v.clone(), // singular tangent solve: rely on the corrector
        };
        let step_norm = (&predicted - &v).norm();

        // Newton corrector at t_next
        let mut w = predicted.clone();
        let mut corrected = false;
        for _ in 0..cfg.newton_max_iters {
            let r = eval_h(&w, t_next);
            if !r.iter().all(|c| c.is_finite()) {
                break;
            }
            if r.norm() <= cfg.newton_tol {
                corrected = true;
                break;
            }
            match jac_h(&w, t_next).lu().solve(&(-r)) {
                Some(delta) => w += delta,
                None => break,
            }
            if w.norm() > cfg.divergence_norm {
                return finish(w, PathStatus::Diverged, steps);
            }
        }
        if !corrected && w.iter().all(|c| c.is_finite()) {
            corrected = eval_h(&w, t_next).norm() <= cfg.newton_tol;
        }
        // Locality guard against path jumping: the accumulated correction
        // must stay small relative to the predictor displacement.
        if corrected {
            let correction = (&w - &predicted).norm();
            if correction > 0.5 * step_norm + 1e-13 * (1.0 + v.norm()) {
                corrected = false;
            }
        }

        if corrected {
            v = w;
            t = t_next;
            consecutive_ok += 1;
            if consecutive_ok >= 2 {
                h = (h * 1.5).min(cfg.max_step);
            }
        } else {
            consecutive_ok = 0;
            h *= 0.5;
            if h < cfg.min_step {
                return finish(v, PathStatus::Stalled, steps);
            }
        }
    }

    // Final polish: Newton on P alone, keeping the best iterate. Once the
    // refinement target is reached, keep going while each step still
    // improves the residual (accuracy below the target is free).
    let mut best = v.clone();
    let mut best_res = {
        let pt = EvalPoint::from_flat(&dims, &v);
        p.eval_unchecked(pt.parts()).norm()
    };
    let mut w = v;
    for _ in 0..(cfg.newton_max_iters + 5) {
        if best_res == 0.0 {
            break;
        }
        let pt = EvalPoint::from_flat(&dims, &w);
        let r = p.eval_unchecked(pt.parts());
        let delta = match p.jacobian_unchecked(pt.parts()).lu().solve(&(-r)) {
            Some(d) => d,
            None => break,
        };
        w += delta;
        if !w.iter().all(|c| c.is_finite()) || w.norm() > cfg.divergence_norm {
            break;
        }
        let res = {
            let pt = EvalPoint::from_flat(&dims, &w);
            p.eval_unchecked(pt.parts()).norm()
        };
        let improved = res < best_res;
        if improved {
            best_res = res;
            best = w.clone();
        } else if best_res <= cfg.t_end_refine_tol {
            break;
        }
    }

    let status = if best_res <= 10.0 * cfg.newton_tol {
        PathStatus::Converged
    } else {
        PathStatus::Stalled
    };
    finish(best, status, steps)
}

/// Filter converged endpoints down to the distinct real solutions.
///
/// Keeps converged endpoints whose imaginary parts are below
/// `reality_tol·(1 + max|Re|)`, drops the imaginary parts, merges points
/// within `cluster_tol` (keeping the smallest residual), and orders the
/// result lexicographically by coordinates rounded to 9 decimals.
pub fn classify_real(
    results: &[PathResult],
    reality_tol: f64,
    cluster_tol: f64,
) -> Vec<EvalPoint> {
    let mut candidates: Vec<&PathResult> = results
        .iter()
        .filter(|r| r.status == PathStatus::Converged && r.endpoint.is_real(reality_tol))
        .collect();
    candidates.sort_by(|a, b| {
        a.final_residual
            .partial_cmp(&b.final_residual)
            .unwrap()
            .then(a.start_index.cmp(&b.start_index))
    });

    let mut kept: Vec<EvalPoint> = Vec::new();
    for cand in candidates {
        let real = EvalPoint::from_real_parts(&cand.endpoint.real_parts());
        if kept.iter().all(|k| k.distance(&real) > cluster_tol) {
            kept.push(real);
        }
    }

    let key = |p: &EvalPoint| -> Vec<i64> {
        p.real_parts()
            .iter()
            .flat_map(|part| part.iter().map(|&x| (x * 1e9).round() as i64).collect::<Vec<_>>())
            .collect()
    };
    kept.sort_by_key(key);
    kept
}

/// Unconjugated dot product of a real vector with a complex vector.
fn dot_rc(a: &DVector<f64>, b: &DVector<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += *x * *y;
    }
    acc
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut res: u128 = 1;
    for i in 1..=k {
        res = res * (n - k + i) as u128 / i as u128;
    }
    res as usize
}
