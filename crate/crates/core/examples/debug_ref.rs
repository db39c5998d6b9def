use cphom::pipeline::{decompose, synthesize, DecomposeRequest, RankSpec, cp_relative_error};
use cphom::tensor::cp_evaluate;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn run(dims: &[usize], rank: usize, theta: f64, trials: u64, seed0: u64) -> f64 {
    let mut errs = Vec::new();
    for trial in 0..trials {
        let seed = seed0 + trial;
        let (noisy, truth) = synthesize(dims, rank, theta, seed, false).unwrap();
        let clean = cp_evaluate(&truth);
        let req = DecomposeRequest::new(noisy, RankSpec::Fixed(rank), seed);
        if let Ok(rep) = decompose(&req) {
            errs.push(cp_relative_error(&clean, &rep.factors).unwrap());
        }
    }
    median(errs)
}

fn main() {
    print!("3x3x6r4 theta=1e-10 medians: ");
    for base in 0..10u64 {
        print!("{:.2e} ", run(&[3, 3, 6], 4, 1e-10, 20, base * 10_000));
    }
    println!();
    print!("3x3x4x30r28 theta=1e-6 medians: ");
    for base in 0..10u64 {
        print!("{:.2e} ", run(&[3, 3, 4, 30], 28, 1e-6, 5, base * 10_000));
    }
    println!();
}
