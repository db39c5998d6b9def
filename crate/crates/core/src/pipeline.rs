//! End-to-end decomposition: matricize, factorize, build and solve the
//! polynomial system, select solutions by dropped-equation residual, stack
//! the leading factors and recover the last factor by a linear solve.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::CpdError;
use crate::homotopy::{
    classify_real, enumerate_start_solutions, gamma_for_attempt, track_path, PathResult,
    PathStatus, StartSystem, TrackerConfig,
};
use crate::polysys::{build_system, critical_rank, EvalPoint, PolySystem};
use crate::rankfact::{full_rank_factorize, nullspace_basis, RankFactorization};
use crate::seeding::{domain, subseed};
use crate::tensor::{
    cp_evaluate, khatri_rao_chain, matricize, outer_rank1, DenseTensor, FactorSet,
};
use crate::Result;

pub use crate::rankfact::RankSpec;

/// Everything needed to run one decomposition.
#[derive(Debug, Clone)]
pub struct DecomposeRequest {
    pub tensor: DenseTensor,
    pub rank: RankSpec,
    pub seed: u64,
    /// Relative truncation tolerance for automatic rank detection.
    pub trunc_tol: f64,
    pub tracker: TrackerConfig,
    pub reality_tol: f64,
    pub cluster_tol: f64,
}

impl DecomposeRequest {
    /// Request with default tolerances and a seed-derived tracker config.
    pub fn new(tensor: DenseTensor, rank: RankSpec, seed: u64) -> Self {
        Self {
            tensor,
            rank,
            seed,
            trunc_tol: 1e-6,
            tracker: TrackerConfig::from_seed(seed),
            reality_tol: 1e-8,
            cluster_tol: 1e-6,
        }
    }
}

/// Path outcome tallies for one tracking run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathStats {
    pub converged: usize,
    pub diverged: usize,
    pub stalled: usize,
}

impl PathStats {
    fn tally(results: &[PathResult]) -> Self {
        let mut s = PathStats::default();
        for r in results {
            match r.status {
                PathStatus::Converged => s.converged += 1,
                PathStatus::Diverged => s.diverged += 1,
                PathStatus::Stalled => s.stalled += 1,
            }
        }
        s
    }

    pub fn total(&self) -> usize {
        self.converged + self.diverged + self.stalled
    }
}

/// Result of a successful decomposition.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub factors: FactorSet,
    /// `‖A − Â‖_F / ‖A‖_F` against the request tensor.
    pub relative_error: f64,
    /// Number of distinct real isolated solutions found.
    pub s_real: usize,
    /// Dropped-equation residuals of the selected solutions, ascending.
    pub deltas: Vec<f64>,
    pub path_stats: PathStats,
    /// Condition number estimate of the coordinate matrix `W`.
    pub w_condition: f64,
    pub rank_used: usize,
    pub seed: u64,
    pub gamma: Complex64,
}

/// Intermediate artifacts shared by [`decompose`] and
/// [`enumerate_decompositions`].
struct SolveStage {
    fact: RankFactorization,
    system: PolySystem,
    leading_dims: Vec<usize>,
    rank: usize,
    s_real: Vec<EvalPoint>,
    stats: PathStats,
    gamma: Complex64,
}

fn solve_stage(req: &DecomposeRequest) -> Result<SolveStage> {
    let order = req.tensor.order();
    if order != 3 && order != 4 {
        return Err(CpdError::UnsupportedOrder {
            order,
            expected: "3 or 4",
        });
    }
    let t = matricize(&req.tensor)?;
    let leading_dims = t.leading_dims.clone();
    let last_dim = t.last_dim;
    let critical = critical_rank(&leading_dims);
    let max_rank = last_dim.min(critical);

    let fact = match req.rank {
        RankSpec::Fixed(r) => {
            if r == 0 || r > max_rank {
                return Err(CpdError::OutOfRegime {
                    rank: r,
                    last_dim,
                    critical,
                });
            }
            full_rank_factorize(&t, RankSpec::Fixed(r), req.trunc_tol)?
        }
        RankSpec::Auto => {
            let f = full_rank_factorize(&t, RankSpec::Auto, req.trunc_tol)?;
            if f.rank_used > max_rank {
                return Err(CpdError::OutOfRegime {
                    rank: f.rank_used,
                    last_dim,
                    critical,
                });
            }
            f
        }
    };
    let rank = fact.rank_used;

    let ns = nullspace_basis(&fact)?;
    let system = build_system(&ns, &leading_dims, rank, req.seed)?;
    let start = StartSystem::with_norms(
        &leading_dims,
        system.norm_vectors().to_vec(),
        req.seed,
    )?;
    let starts = enumerate_start_solutions(&start)?;

    let mut tracker = req.tracker.clone();
    let mut results = track_batch(&system, &start, &starts, &tracker, req.cluster_tol);
    // A collision that survives step-shrinking usually means the homotopy
    // constant landed near one of the finitely many bad angles; redraw it
    // and re-track the whole batch.
    for attempt in 1..=3u64 {
        if collision_indices(&results, req.cluster_tol).is_empty() {
            break;
        }
        tracker.gamma = gamma_for_attempt(req.seed, attempt);
        results = track_batch(&system, &start, &starts, &tracker, req.cluster_tol);
    }

    let stats = PathStats::tally(&results);
    let s_real = classify_real(&results, req.reality_tol, req.cluster_tol);

    Ok(SolveStage {
        fact,
        system,
        leading_dims,
        rank,
        s_real,
        stats,
        gamma: tracker.gamma,
    })
}

/// Track every start point, re-tracking colliding paths with smaller steps.
fn track_batch(
    system: &PolySystem,
    start: &StartSystem,
    starts: &[EvalPoint],
    tracker: &TrackerConfig,
    cluster_tol: f64,
) -> Vec<PathResult> {
    let mut results: Vec<PathResult> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| track_path(system, start, s, i, tracker))
        .collect();

    // Two paths landing on one endpoint almost always means one of them
    // jumped onto its neighbor mid-track.
    for shrink in [5.0, 25.0] {
        let colliding = collision_indices(&results, cluster_tol);
        if colliding.is_empty() {
            break;
        }
        let mut cfg = tracker.clone();
        cfg.initial_step = (tracker.initial_step / shrink).max(cfg.min_step);
        cfg.max_step = (tracker.max_step / shrink).max(cfg.min_step);
        let redone: Vec<PathResult> = colliding
            .par_iter()
            .map(|&i| track_path(system, start, &starts[i], i, &cfg))
            .collect();
        for r in redone {
            let i = r.start_index;
            results[i] = r;
        }
    }
    results
}

/// Indices of converged paths whose endpoints coincide with another path's
/// endpoint within `tol`.
fn collision_indices(results: &[PathResult], tol: f64) -> Vec<usize> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for r in results {
        if r.status != PathStatus::Converged {
            continue;
        }
        match groups
            .iter_mut()
            .find(|g| results[g[0]].endpoint.distance(&r.endpoint) <= tol)
        {
            Some(g) => g.push(r.start_index),
            None => groups.push(vec![r.start_index]),
        }
    }
    groups.into_iter().filter(|g| g.len() > 1).flatten().collect()
}

/// Stack solution points into leading-mode factors and recover the last
/// factor from the rank factorization: `W = Eᵀ·(chain)`, last = `F W^{−ᵀ}`.
///
/// Returns the factor set and the condition estimate of `W`.
pub fn reconstruct_from_solutions(
    fact: &RankFactorization,
    leading_dims: &[usize],
    points: &[&EvalPoint],
) -> Result<(FactorSet, f64)> {
    let r = points.len();
    if r == 0 {
        return Err(CpdError::invalid("no solutions to reconstruct from"));
    }
    let mut stacked: Vec<DMatrix<f64>> = Vec::with_capacity(leading_dims.len());
    for (m, &d) in leading_dims.iter().enumerate() {
        let mut mat = DMatrix::zeros(d, r);
        for (c, p) in points.iter().enumerate() {
            for i in 0..d {
                mat[(i, c)] = p.part(m)[i].re;
            }
        }
        stacked.push(mat);
    }

    let chain = khatri_rao_chain(&stacked)?;
    let w = fact.e.transpose() * &chain;
    let svd = w.clone().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > 1e12 {
        return Err(CpdError::IllConditionedW { cond });
    }

    // last factor L solves W Lᵀ = Fᵀ, i.e. L = F W^{−ᵀ}
    let lu = w.lu();
    let lt = lu
        .solve(&fact.f.transpose())
        .ok_or(CpdError::IllConditionedW { cond })?;
    let last = lt.transpose();

    stacked.push(last);
    Ok((FactorSet::new(stacked)?, cond))
}

/// Run the full decomposition pipeline.
pub fn decompose(req: &DecomposeRequest) -> Result<DecompositionReport> {
    let stage = solve_stage(req)?;
    let r = stage.rank;
    if stage.s_real.len() < r {
        return Err(CpdError::InsufficientRealSolutions {
            found: stage.s_real.len(),
            needed: r,
        });
    }

    // Order candidate solutions by dropped residual, then by residual of the
    // square system, keeping the lexicographic order from classification as
    // the final tie-breaker.
    let mut scored: Vec<(f64, f64, usize)> = stage
        .s_real
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let delta = stage.system.dropped_residual(p);
            let res = stage.system.eval(p).map(|v| v.norm()).unwrap_or(f64::MAX);
            (delta, res, i)
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then(a.2.cmp(&b.2))
    });
    let selected: Vec<&EvalPoint> = scored[..r].iter().map(|&(_, _, i)| &stage.s_real[i]).collect();
    let mut deltas: Vec<f64> = scored[..r].iter().map(|&(d, _, _)| d).collect();
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let (factors, w_condition) =
        reconstruct_from_solutions(&stage.fact, &stage.leading_dims, &selected)?;
    let relative_error = cp_relative_error(&req.tensor, &factors)?;

    Ok(DecompositionReport {
        factors,
        relative_error,
        s_real: stage.s_real.len(),
        deltas,
        path_stats: stage.stats,
        w_condition,
        rank_used: r,
        seed: req.seed,
        gamma: stage.gamma,
    })
}

/// `‖A − cp_evaluate(factors)‖_F / ‖A‖_F`.
pub fn cp_relative_error(tensor: &DenseTensor, factors: &FactorSet) -> Result<f64> {
    let rebuilt = cp_evaluate(factors);
    let diff = tensor.sub(&rebuilt)?;
    let denom = tensor.frobenius_norm();
    if denom == 0.0 {
        return Err(CpdError::invalid("relative error of a zero tensor"));
    }
    Ok(diff.frobenius_norm() / denom)
}

/// Component matching between two factor sets of equal rank and dims.
#[derive(Debug, Clone)]
pub struct MatchReport {
    /// `permutation[r]` is the truth component matched to found component `r`.
    pub permutation: Vec<usize>,
    /// Frobenius distance between unit-normalized components, per found
    /// component.
    pub component_errors: Vec<f64>,
    pub max_error: f64,
}

/// Greedy best-match of normalized rank-1 components.
///
/// Each component is evaluated as a dense rank-1 tensor, scaled to unit
/// Frobenius norm with its largest-magnitude entry made positive, so the
/// matching is invariant to per-mode rescaling of the factor columns.
pub fn match_components(found: &FactorSet, truth: &FactorSet) -> Result<MatchReport> {
    if found.rank() != truth.rank() {
        return Err(CpdError::invalid("rank mismatch in component matching"));
    }
    if found.mode_dims() != truth.mode_dims() {
        return Err(CpdError::invalid("mode dims mismatch in component matching"));
    }
    let r = found.rank();
    let f_comps: Vec<DenseTensor> = (0..r).map(|c| normalized_component(found, c)).collect();
    let t_comps: Vec<DenseTensor> = (0..r).map(|c| normalized_component(truth, c)).collect();

    let mut errs = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..r {
            errs[(i, j)] = f_comps[i].sub(&t_comps[j]).unwrap().frobenius_norm();
        }
    }

    let mut permutation = vec![usize::MAX; r];
    let mut component_errors = vec![0.0; r];
    let mut found_used = vec![false; r];
    let mut truth_used = vec![false; r];
    for _ in 0..r {
        let mut best = (f64::INFINITY, 0usize, 0usize);
        for i in 0..r {
            if found_used[i] {
                continue;
            }
            for j in 0..r {
                if truth_used[j] {
                    continue;
                }
                if errs[(i, j)] < best.0 {
                    best = (errs[(i, j)], i, j);
                }
            }
        }
        let (e, i, j) = best;
        found_used[i] = true;
        truth_used[j] = true;
        permutation[i] = j;
        component_errors[i] = e;
    }
    let max_error = component_errors.iter().copied().fold(0.0, f64::max);
    Ok(MatchReport {
        permutation,
        component_errors,
        max_error,
    })
}

fn normalized_component(fs: &FactorSet, col: usize) -> DenseTensor {
    let cols: Vec<DVector<f64>> = fs
        .factors()
        .iter()
        .map(|f| f.column(col).into_owned())
        .collect();
    let t = outer_rank1(&cols).expect("factor columns are nonempty");
    let norm = t.frobenius_norm();
    // Sign anchor: first entry within a relative whisker of the maximum
    // magnitude, so ties between equal-magnitude entries resolve the same
    // way for two nearly identical components.
    let max_abs = t.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let anchor = t
        .data()
        .iter()
        .find(|x| x.abs() >= max_abs * (1.0 - 1e-6))
        .copied()
        .unwrap_or(1.0);
    let scale = if anchor < 0.0 { -1.0 / norm } else { 1.0 / norm };
    let data = t.data().iter().map(|x| x * scale).collect();
    DenseTensor::new(t.dims().to_vec(), data).expect("same shape")
}

/// Generate a noisy rank-`R` tensor and its generating factors.
///
/// Factor entries are i.i.d. standard normal from the seed; the noise tensor
/// is scaled to unit Frobenius norm and multiplied by `theta`, so
/// `‖Ã − A‖_F = theta` exactly. `theta = 0` yields an exact rank-`R` tensor.
pub fn synthesize(
    dims: &[usize],
    rank: usize,
    theta: f64,
    seed: u64,
    allow_out_of_regime: bool,
) -> Result<(DenseTensor, FactorSet)> {
    if dims.len() < 2 {
        return Err(CpdError::invalid("synthesize needs at least two modes"));
    }
    if rank == 0 {
        return Err(CpdError::invalid("rank must be positive"));
    }
    if !allow_out_of_regime {
        let leading = &dims[..dims.len() - 1];
        let last = dims[dims.len() - 1];
        let max_rank = last.min(critical_rank(leading));
        if rank > max_rank {
            return Err(CpdError::OutOfRegime {
                rank,
                last_dim: last,
                critical: critical_rank(leading),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, domain::SYNTH));
    let mut factors = Vec::with_capacity(dims.len());
    for &d in dims {
        let mut m = DMatrix::zeros(d, rank);
        for c in 0..rank {
            for i in 0..d {
                m[(i, c)] = StandardNormal.sample(&mut rng);
            }
        }
        factors.push(m);
    }
    let model = FactorSet::new(factors)?;
    let clean = cp_evaluate(&model);

    let noise: Vec<f64> = (0..clean.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let noise_norm = noise.iter().map(|x| x * x).sum::<f64>().sqrt();
    let data: Vec<f64> = clean
        .data()
        .iter()
        .zip(&noise)
        .map(|(a, n)| a + theta * n / noise_norm)
        .collect();
    let noisy = DenseTensor::new(dims.to_vec(), data)?;
    Ok((noisy, model))
}

/// All decompositions found by sweeping `R`-subsets of the real solution set.
#[derive(Debug)]
pub struct EnumerationOutcome {
    pub reports: Vec<DecompositionReport>,
    /// Set when the subset sweep hit the cap before finishing.
    pub truncated: bool,
    pub subsets_tested: usize,
}

/// Enumerate candidate decompositions from `R`-subsets of the real solution
/// set (intended for the `R = R*` regime where several may exist).
///
/// Subsets whose Khatri-Rao stack loses column rank are skipped; subsets
/// reconstructing the tensor within `rel_err_threshold` are returned. At
/// most `subset_cap` subsets are examined; hitting the cap sets `truncated`
/// rather than failing.
pub fn enumerate_decompositions(
    req: &DecomposeRequest,
    rel_err_threshold: f64,
    subset_cap: usize,
) -> Result<EnumerationOutcome> {
    let stage = solve_stage(req)?;
    let r = stage.rank;
    if stage.s_real.len() < r {
        return Err(CpdError::InsufficientRealSolutions {
            found: stage.s_real.len(),
            needed: r,
        });
    }

    let mut reports = Vec::new();
    let mut truncated = false;
    let mut subsets_tested = 0usize;
    let mut indices: Vec<usize> = (0..r).collect();

    loop {
        if subsets_tested >= subset_cap {
            truncated = true;
            break;
        }
        subsets_tested += 1;
        let points: Vec<&EvalPoint> = indices.iter().map(|&i| &stage.s_real[i]).collect();
        match reconstruct_from_solutions(&stage.fact, &stage.leading_dims, &points) {
            Ok((factors, w_condition)) => {
                let relative_error = cp_relative_error(&req.tensor, &factors)?;
                if relative_error <= rel_err_threshold {
                    let mut deltas: Vec<f64> = points
                        .iter()
                        .map(|p| stage.system.dropped_residual(p))
                        .collect();
                    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    reports.push(DecompositionReport {
                        factors,
                        relative_error,
                        s_real: stage.s_real.len(),
                        deltas,
                        path_stats: stage.stats,
                        w_condition,
                        rank_used: r,
                        seed: req.seed,
                        gamma: stage.gamma,
                    });
                }
            }
            Err(CpdError::IllConditionedW { .. }) => {} // rank-deficient stack: skip
            Err(e) => return Err(e),
        }
        if !advance_combination(&mut indices, stage.s_real.len()) {
            break;
        }
    }

    Ok(EnumerationOutcome {
        reports,
        truncated,
        subsets_tested,
    })
}

/// Advance a sorted index combination in lexicographic order.
fn advance_combination(indices: &mut [usize], n: usize) -> bool {
    let r = indices.len();
    let mut i = r;
    while i > 0 {
        i -= 1;
        if indices[i] < n - (r - i) {
            indices[i] += 1;
            for j in i + 1..r {
                indices[j] = indices[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
