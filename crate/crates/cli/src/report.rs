//! Rendering of decomposition reports as JSON or plain text.

use cphom::pipeline::DecompositionReport;
use serde::Serialize;

#[derive(Debug, Serialize)]
struct PathsJson {
    converged: usize,
    diverged: usize,
    stalled: usize,
}

/// JSON report with a fixed key set.
#[derive(Debug, Serialize)]
struct ReportJson {
    relative_error: f64,
    s_real: usize,
    deltas: Vec<f64>,
    paths: PathsJson,
    seed: u64,
    gamma_re: f64,
    gamma_im: f64,
    rank_used: usize,
}

pub fn render_json(r: &DecompositionReport) -> String {
    let j = ReportJson {
        relative_error: r.relative_error,
        s_real: r.s_real,
        deltas: r.deltas.clone(),
        paths: PathsJson {
            converged: r.path_stats.converged,
            diverged: r.path_stats.diverged,
            stalled: r.path_stats.stalled,
        },
        seed: r.seed,
        gamma_re: r.gamma.re,
        gamma_im: r.gamma.im,
        rank_used: r.rank_used,
    };
    serde_json::to_string_pretty(&j).expect("report serializes")
}

pub fn render_text(r: &DecompositionReport) -> String {
    let deltas: Vec<String> = r.deltas.iter().map(|d| format!("{d:.3e}")).collect();
    format!(
        "rank_used       {}\n\
         relative_error  {:.16e}\n\
         s_real          {}\n\
         deltas          [{}]\n\
         paths           converged {} / diverged {} / stalled {}\n\
         w_condition     {:.3e}\n\
         seed            {}\n\
         gamma           {:+.16e} {:+.16e}i\n",
        r.rank_used,
        r.relative_error,
        r.s_real,
        deltas.join(", "),
        r.path_stats.converged,
        r.path_stats.diverged,
        r.path_stats.stalled,
        r.w_condition,
        r.seed,
        r.gamma.re,
        r.gamma.im,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use cphom::pipeline::{decompose, synthesize, DecomposeRequest, RankSpec};

    #[test]
    fn json_has_the_fixed_key_set() {
        let (tensor, _) = synthesize(&[2, 2, 3], 2, 0.0, 3, false).unwrap();
        let rep = decompose(&DecomposeRequest::new(tensor, RankSpec::Fixed(2), 3)).unwrap();
        let json = render_json(&rep);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec![
                "deltas",
                "gamma_im",
                "gamma_re",
                "paths",
                "rank_used",
                "relative_error",
                "s_real",
                "seed"
            ]
        );
        let paths = obj["paths"].as_object().unwrap();
        let mut pk: Vec<&str> = paths.keys().map(|s| s.as_str()).collect();
        pk.sort_unstable();
        assert_eq!(pk, vec!["converged", "diverged", "stalled"]);
    }
}
