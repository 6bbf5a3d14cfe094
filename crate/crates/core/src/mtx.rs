//! Matrix Market coordinate files: a dense-materializing reader with sparsity
//! statistics, and a writer for dense matrices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, Mat};

/// Above this many entries the numerical rank is not computed.
pub const RANK_ENTRY_LIMIT: usize = 1000 * 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReadOptions {
    /// Read `pattern` files with every listed entry set to one.
    pub allow_pattern: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MtxStats {
    pub rows: usize,
    pub cols: usize,
    /// Nonzero entries of the expanded matrix (symmetric storage counted on both sides).
    pub nnz: usize,
    pub density: f64,
    pub rank: Option<usize>,
}

impl MtxStats {
    pub fn of(m: &Mat) -> Result<Self> {
        let (rows, cols) = m.shape();
        let nnz = m.iter().filter(|v| **v != 0.0).count();
        let rank = if rows * cols <= RANK_ENTRY_LIMIT {
            Some(numerical_rank(m, None)?)
        } else {
            None
        };
        Ok(MtxStats {
            rows,
            cols,
            nnz,
            density: if rows * cols == 0 {
                0.0
            } else {
                nnz as f64 / (rows * cols) as f64
            },
            rank,
        })
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Pattern,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(name: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        source_name: name.into(),
        line,
        msg: msg.into(),
    }
}

fn parse_header(name: &str, line: &str) -> Result<(Field, Symmetry)> {
    let words: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(parse_err(
            name,
            1,
            "expected `%%MatrixMarket matrix <format> <field> <symmetry>`",
        ));
    }
    if words[2] != "coordinate" {
        return Err(parse_err(
            name,
            1,
            format!("unsupported format `{}`; only coordinate", words[2]),
        ));
    }
    let field = match words[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "pattern" => Field::Pattern,
        other => {
            return Err(parse_err(
                name,
                1,
                format!("unsupported field type `{other}`"),
            ))
        }
    };
    let sym = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => {
            return Err(parse_err(
                name,
                1,
                format!("unsupported symmetry `{other}`"),
            ))
        }
    };
    Ok((field, sym))
}

/// Parses Matrix Market text. `name` labels error messages.
pub fn parse_matrix_market(text: &str, name: &str, opts: ReadOptions) -> Result<Mat> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(name, 1, "empty file"))?;
    let (field, sym) = parse_header(name, header)?;
    if field == Field::Pattern && !opts.allow_pattern {
        return Err(parse_err(
            name,
            1,
            "pattern matrices carry no values and are rejected (enable pattern reading to treat entries as ones)",
        ));
    }
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(name, 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|w| {
            w.parse()
                .map_err(|_| parse_err(name, size_line, format!("bad size field `{w}`")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols, entries] = dims[..] else {
        return Err(parse_err(
            name,
            size_line,
            "size line needs `rows cols entries`",
        ));
    };
    if sym == Symmetry::Symmetric && rows != cols {
        return Err(parse_err(
            name,
            size_line,
            "symmetric matrix must be square",
        ));
    }
    let mut m = Mat::zeros(rows, cols);
    let mut seen = 0;
    for (ln, line) in body {
        let words: Vec<&str> = line.split_whitespace().collect();
        let want = if field == Field::Pattern { 2 } else { 3 };
        if words.len() != want {
            return Err(parse_err(
                name,
                ln,
                format!("expected {want} fields, found {}", words.len()),
            ));
        }
        let idx = |w: &str, lim: usize| -> Result<usize> {
            let i: usize = w
                .parse()
                .map_err(|_| parse_err(name, ln, format!("bad index `{w}`")))?;
            if i == 0 || i > lim {
                return Err(parse_err(
                    name,
                    ln,
                    format!("index {i} out of range 1..={lim}"),
                ));
            }
            Ok(i - 1)
        };
        let (i, j) = (idx(words[0], rows)?, idx(words[1], cols)?);
        let v = if field == Field::Pattern {
            1.0
        } else {
            let v: f64 = words[2]
                .parse()
                .map_err(|_| parse_err(name, ln, format!("bad value `{}`", words[2])))?;
            if !v.is_finite() {
                return Err(parse_err(name, ln, "non-finite value"));
            }
            v
        };
        m[(i, j)] += v;
        if sym == Symmetry::Symmetric && i != j {
            m[(j, i)] += v;
        }
        seen += 1;
    }
    if seen != entries {
        return Err(parse_err(
            name,
            text.lines().count(),
            format!("header promised {entries} entries, found {seen}"),
        ));
    }
    Ok(m)
}

pub fn read_matrix_market(path: &Path, opts: ReadOptions) -> Result<Mat> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text, &path.display().to_string(), opts)
}

/// Reads a file and reports its sparsity statistics.
pub fn load_matrix_market(path: &Path, opts: ReadOptions) -> Result<(Mat, MtxStats)> {
    let m = read_matrix_market(path, opts)?;
    let stats = MtxStats::of(&m)?;
    Ok((m, stats))
}

/// Formats `m` as a general real coordinate file listing its nonzeros.
/// Values use shortest round-trip formatting, so reading back is exact.
pub fn format_matrix_market(m: &Mat) -> String {
    let nnz = m.iter().filter(|v| **v != 0.0).count();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nnz);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {:?}", i + 1, j + 1, v);
            }
        }
    }
    out
}

pub fn write_matrix_market(path: &Path, m: &Mat) -> Result<()> {
    fs::write(path, format_matrix_market(m))?;
    Ok(())
}
