//! Plain-text tensor and factor files.
//!
//! Tensor file: a header line `tensor N d1 d2 … dN`, then the `∏ dᵢ` entries
//! in column-major order (first index fastest), whitespace separated across
//! any number of lines. Lines whose first non-blank character is `#` are
//! comments. Factor file: header `factors N R d1 … dN`, then one block per
//! mode holding `dₙ` rows of `R` values.
//!
//! Values are written with 17 significant digits so a write/read round trip
//! is value-exact for doubles.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cphom::nalgebra::DMatrix;
use cphom::tensor::{DenseTensor, FactorSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Shape(String),
}

impl FormatError {
    fn parse(line: usize, msg: impl Into<String>) -> Self {
        FormatError::Parse {
            line,
            msg: msg.into(),
        }
    }
}

fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// Token stream with line numbers; `#`-lines are skipped.
struct Tokens {
    toks: Vec<(String, usize)>,
    pos: usize,
}

impl Tokens {
    fn new(text: &str) -> Self {
        let mut toks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim_start();
            if trimmed.starts_with('#') {
                continue;
            }
            for t in line.split_whitespace() {
                toks.push((t.to_string(), i + 1));
            }
        }
        Self { toks, pos: 0 }
    }

    fn last_line(&self) -> usize {
        self.toks.last().map_or(1, |(_, l)| *l)
    }

    fn next(&mut self, what: &str) -> Result<(&str, usize), FormatError> {
        match self.toks.get(self.pos) {
            Some((t, l)) => {
                self.pos += 1;
                Ok((t.as_str(), *l))
            }
            None => Err(FormatError::parse(
                self.last_line(),
                format!("unexpected end of file, expected {what}"),
            )),
        }
    }

    fn next_usize(&mut self, what: &str) -> Result<usize, FormatError> {
        let (t, l) = self.next(what)?;
        t.parse()
            .map_err(|_| FormatError::parse(l, format!("expected {what}, got `{t}`")))
    }

    fn next_f64(&mut self, what: &str) -> Result<f64, FormatError> {
        let (t, l) = self.next(what)?;
        t.parse()
            .map_err(|_| FormatError::parse(l, format!("expected {what}, got `{t}`")))
    }

    fn expect_end(&mut self) -> Result<(), FormatError> {
        if let Some((t, l)) = self.toks.get(self.pos) {
            return Err(FormatError::parse(
                *l,
                format!("unexpected trailing token `{t}`"),
            ));
        }
        Ok(())
    }
}

pub fn render_tensor(t: &DenseTensor) -> String {
    let mut out = String::new();
    write!(out, "tensor {}", t.order()).unwrap();
    for d in t.dims() {
        write!(out, " {d}").unwrap();
    }
    out.push('\n');
    for chunk in t.data().chunks(8) {
        let line: Vec<String> = chunk.iter().map(|&x| format_value(x)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_tensor(path: &Path, t: &DenseTensor) -> Result<(), FormatError> {
    fs::write(path, render_tensor(t))?;
    Ok(())
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor, FormatError> {
    let mut toks = Tokens::new(text);
    let (tag, line) = toks.next("`tensor` header")?;
    if tag != "tensor" {
        return Err(FormatError::parse(
            line,
            format!("expected `tensor` header, got `{tag}`"),
        ));
    }
    let order = toks.next_usize("tensor order")?;
    if order == 0 || order > 8 {
        return Err(FormatError::parse(line, format!("bad tensor order {order}")));
    }
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        let d = toks.next_usize("dimension")?;
        if d == 0 {
            return Err(FormatError::parse(line, "dimensions must be positive"));
        }
        dims.push(d);
    }
    let len: usize = dims.iter().product();
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(toks.next_f64("tensor entry")?);
    }
    toks.expect_end()?;
    DenseTensor::new(dims, data).map_err(|e| FormatError::Shape(e.to_string()))
}

pub fn read_tensor(path: &Path) -> Result<DenseTensor, FormatError> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn render_factors(f: &FactorSet) -> String {
    let mut out = String::new();
    write!(out, "factors {} {}", f.order(), f.rank()).unwrap();
    for d in f.mode_dims() {
        write!(out, " {d}").unwrap();
    }
    out.push('\n');
    for m in f.factors() {
        for i in 0..m.nrows() {
            let row: Vec<String> = (0..m.ncols()).map(|j| format_value(m[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn write_factors(path: &Path, f: &FactorSet) -> Result<(), FormatError> {
    fs::write(path, render_factors(f))?;
    Ok(())
}

/// Parse the factor matrices without enforcing [`FactorSet`] invariants
/// (zero columns are tolerated, e.g. for diagnosing arbitrary files).
pub fn parse_factor_matrices(text: &str) -> Result<Vec<DMatrix<f64>>, FormatError> {
    let mut toks = Tokens::new(text);
    let (tag, line) = toks.next("`factors` header")?;
    if tag != "factors" {
        return Err(FormatError::parse(
            line,
            format!("expected `factors` header, got `{tag}`"),
        ));
    }
    let order = toks.next_usize("factor order")?;
    if order == 0 || order > 8 {
        return Err(FormatError::parse(line, format!("bad factor order {order}")));
    }
    let rank = toks.next_usize("rank")?;
    if rank == 0 {
        return Err(FormatError::parse(line, "rank must be positive"));
    }
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        dims.push(toks.next_usize("dimension")?);
    }
    let mut factors = Vec::with_capacity(order);
    for &d in &dims {
        let mut m = DMatrix::zeros(d, rank);
        for i in 0..d {
            for j in 0..rank {
                m[(i, j)] = toks.next_f64("factor entry")?;
            }
        }
        factors.push(m);
    }
    toks.expect_end()?;
    Ok(factors)
}

pub fn parse_factors(text: &str) -> Result<FactorSet, FormatError> {
    let factors = parse_factor_matrices(text)?;
    FactorSet::new(factors).map_err(|e| FormatError::Shape(e.to_string()))
}

pub fn read_factor_matrices(path: &Path) -> Result<Vec<DMatrix<f64>>, FormatError> {
    parse_factor_matrices(&fs::read_to_string(path)?)
}

pub fn read_factors(path: &Path) -> Result<FactorSet, FormatError> {
    parse_factors(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cphom::pipeline::synthesize;

    #[test]
    fn tensor_roundtrip_is_value_exact() {
        let (t, f) = synthesize(&[3, 2, 4], 2, 1e-3, 9, false).unwrap();
        let back = parse_tensor(&render_tensor(&t)).unwrap();
        assert_eq!(t, back);
        let fb = parse_factors(&render_factors(&f)).unwrap();
        for (a, b) in f.factors().iter().zip(fb.factors()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn comments_and_layout_are_ignored() {
        let text = "# a comment\ntensor 2 2 2\n1 2\n# another\n3 4\n";
        let t = parse_tensor(text).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        assert_eq!(t.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn malformed_header_reports_line() {
        let err = parse_tensor("tensorx 2 2 2\n1 2 3 4\n").unwrap_err();
        match err {
            FormatError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bad_value_reports_its_line() {
        let err = parse_tensor("tensor 2 2 2\n1 2\n3 oops\n").unwrap_err();
        match err {
            FormatError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn missing_and_extra_values_are_errors() {
        assert!(parse_tensor("tensor 2 2 2\n1 2 3\n").is_err());
        assert!(parse_tensor("tensor 2 2 2\n1 2 3 4 5\n").is_err());
    }
}
