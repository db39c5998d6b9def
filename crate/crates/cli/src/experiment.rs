//! Seeded noise-sweep experiments emitting CSV.
//!
//! For each noise level the sweep synthesizes `trials` random rank-`R`
//! tensors (trial seeds are `seed + trial`, so any row can be re-run in
//! isolation), decomposes them, and records the relative error against the
//! clean tensor. Trials run in parallel but rows are emitted in
//! deterministic `(theta, trial)` order; failed trials become rows with a
//! status token instead of aborting the sweep.

use std::fmt::Write as _;
use std::time::Instant;

use cphom::pipeline::{
    cp_relative_error, decompose, synthesize, DecomposeRequest, RankSpec,
};
use cphom::tensor::cp_evaluate;
use cphom::CpdError;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub noise_levels: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub theta: f64,
    pub trial: u64,
    pub seed: u64,
    pub relative_error: Option<f64>,
    pub s_real: Option<usize>,
    pub converged_paths: Option<usize>,
    pub wall_ms: u128,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct ThetaSummary {
    pub theta: f64,
    /// Median relative error over successful trials, if any succeeded.
    pub median_error: Option<f64>,
    pub failures: usize,
}

#[derive(Debug)]
pub struct SweepResult {
    pub shape: String,
    pub rows: Vec<TrialOutcome>,
    pub summaries: Vec<ThetaSummary>,
}

/// `"3x3x6r4"` → `([3,3,6], 4)`.
pub fn parse_shape(s: &str) -> Result<(Vec<usize>, usize), String> {
    let (dims_part, rank_part) = s
        .rsplit_once('r')
        .ok_or_else(|| format!("shape `{s}` missing rank suffix, expected e.g. 3x3x6r4"))?;
    let rank: usize = rank_part
        .parse()
        .map_err(|_| format!("bad rank in shape `{s}`"))?;
    let dims: Result<Vec<usize>, _> = dims_part.split('x').map(|d| d.parse()).collect();
    let dims = dims.map_err(|_| format!("bad dimensions in shape `{s}`"))?;
    if dims.len() < 3 || dims.len() > 4 {
        return Err(format!("shape `{s}` must have 3 or 4 dimensions"));
    }
    if rank == 0 {
        return Err(format!("shape `{s}` must have positive rank"));
    }
    Ok((dims, rank))
}

pub fn shape_string(dims: &[usize], rank: usize) -> String {
    let ds: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    format!("{}r{rank}", ds.join("x"))
}

fn status_token(e: &CpdError) -> &'static str {
    match e {
        CpdError::OutOfRegime { .. } => "out-of-regime",
        CpdError::UnderdeterminedRank { .. } => "underdetermined-rank",
        CpdError::InsufficientRealSolutions { .. } => "insufficient-real-solutions",
        CpdError::IllConditionedW { .. } => "ill-conditioned-w",
        CpdError::RankZero => "rank-zero",
        CpdError::EmptyNullspace { .. } => "empty-nullspace",
        CpdError::DegenerateRandomness(_) => "degenerate-randomness",
        CpdError::UnsupportedOrder { .. } => "unsupported-order",
        CpdError::InvalidInput(_) => "invalid-input",
    }
}

fn run_trial(dims: &[usize], rank: usize, theta: f64, seed: u64, trial: u64) -> TrialOutcome {
    let start = Instant::now();
    let outcome = synthesize(dims, rank, theta, seed, false).and_then(|(noisy, truth)| {
        let clean = cp_evaluate(&truth);
        let req = DecomposeRequest::new(noisy, RankSpec::Fixed(rank), seed);
        let report = decompose(&req)?;
        let err = cp_relative_error(&clean, &report.factors)?;
        Ok((err, report))
    });
    let wall_ms = start.elapsed().as_millis();
    match outcome {
        Ok((err, report)) => TrialOutcome {
            theta,
            trial,
            seed,
            relative_error: Some(err),
            s_real: Some(report.s_real),
            converged_paths: Some(report.path_stats.converged),
            wall_ms,
            status: "ok".into(),
        },
        Err(e) => TrialOutcome {
            theta,
            trial,
            seed,
            relative_error: None,
            s_real: None,
            converged_paths: None,
            wall_ms,
            status: status_token(&e).into(),
        },
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn run_sweep(spec: &SweepSpec) -> SweepResult {
    let shape = shape_string(&spec.dims, spec.rank);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for &theta in &spec.noise_levels {
        let theta_rows: Vec<TrialOutcome> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| run_trial(&spec.dims, spec.rank, theta, spec.seed + trial, trial))
            .collect();
        let mut errs: Vec<f64> = theta_rows.iter().filter_map(|r| r.relative_error).collect();
        let failures = theta_rows.len() - errs.len();
        summaries.push(ThetaSummary {
            theta,
            median_error: median(&mut errs),
            failures,
        });
        rows.extend(theta_rows);
    }
    SweepResult {
        shape,
        rows,
        summaries,
    }
}

/// RFC-4180-style CSV: header row, one row per trial in `(theta, trial)`
/// order, and one `median` summary row per noise level.
pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str("shape,theta,trial,seed,relative_error,s_real,converged_paths,wall_ms,status\r\n");
    let mut summary_iter = result.summaries.iter().peekable();
    let mut last_theta: Option<f64> = None;
    for row in &result.rows {
        if let Some(prev) = last_theta {
            if prev != row.theta {
                if let Some(s) = summary_iter.next() {
                    push_summary(&mut out, &result.shape, s);
                }
            }
        }
        last_theta = Some(row.theta);
        writeln_row(&mut out, &result.shape, row);
    }
    for s in summary_iter {
        push_summary(&mut out, &result.shape, s);
    }
    out
}

fn writeln_row(out: &mut String, shape: &str, r: &TrialOutcome) {
    write!(
        out,
        "{},{:e},{},{},{},{},{},{},{}\r\n",
        shape,
        r.theta,
        r.trial,
        r.seed,
        r.relative_error
            .map_or(String::new(), |v| format!("{v:.16e}")),
        r.s_real.map_or(String::new(), |v| v.to_string()),
        r.converged_paths.map_or(String::new(), |v| v.to_string()),
        r.wall_ms,
        r.status,
    )
    .unwrap();
}

fn push_summary(out: &mut String, shape: &str, s: &ThetaSummary) {
    write!(
        out,
        "{},{:e},median,,{},,,,summary\r\n",
        shape,
        s.theta,
        s.median_error
            .map_or(String::new(), |v| format!("{v:.16e}")),
    )
    .unwrap();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_parsing() {
        assert_eq!(parse_shape("3x3x6r4").unwrap(), (vec![3, 3, 6], 4));
        assert_eq!(parse_shape("3x3x4x30r28").unwrap(), (vec![3, 3, 4, 30], 28));
        assert!(parse_shape("3x3").is_err());
        assert!(parse_shape("3x3r0").is_err());
        assert!(parse_shape("axbr2").is_err());
        assert_eq!(shape_string(&[3, 3, 6], 4), "3x3x6r4");
    }

    #[test]
    fn small_sweep_rows_and_medians() {
        let spec = SweepSpec {
            dims: vec![2, 2, 3],
            rank: 2,
            noise_levels: vec![0.0, 1e-6],
            trials: 3,
            seed: 50,
        };
        let result = run_sweep(&spec);
        assert_eq!(result.rows.len(), 6);
        assert_eq!(result.summaries.len(), 2);
        // θ=0 rows recover exactly
        let clean_median = result.summaries[0].median_error.unwrap();
        assert!(clean_median <= 1e-10, "clean median {clean_median}");
        // seeds derive as seed + trial
        assert_eq!(result.rows[0].seed, 50);
        assert_eq!(result.rows[2].seed, 52);

        let csv = render_csv(&result);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 6 + 2);
        assert!(lines[0].starts_with("shape,theta,trial,"));
        assert!(lines[4].contains("median"));
        assert!(lines[lines.len() - 1].contains("median"));
    }

    #[test]
    fn sweep_is_deterministic_modulo_wall_ms() {
        let spec = SweepSpec {
            dims: vec![2, 2, 3],
            rank: 2,
            noise_levels: vec![1e-4],
            trials: 2,
            seed: 9,
        };
        let a = run_sweep(&spec);
        let b = run_sweep(&spec);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.relative_error, y.relative_error);
            assert_eq!(x.status, y.status);
            assert_eq!(x.seed, y.seed);
        }
    }

    #[test]
    fn failures_become_status_rows() {
        // rank 5 on (2,4,7) is outside the solvable regime for every trial
        let spec = SweepSpec {
            dims: vec![2, 4, 7],
            rank: 5,
            noise_levels: vec![0.0],
            trials: 2,
            seed: 1,
        };
        let result = run_sweep(&spec);
        assert_eq!(result.rows.len(), 2);
        for row in &result.rows {
            assert_eq!(row.status, "out-of-regime");
            assert!(row.relative_error.is_none());
        }
        assert_eq!(result.summaries[0].failures, 2);
        assert!(result.summaries[0].median_error.is_none());
    }
}
