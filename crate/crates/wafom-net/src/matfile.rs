//! Text format for generating matrices.
//!
//! The format is line-oriented and bit-exact:
//!
//! ```text
//! # optional comment lines start with '#'
//! n m S
//! <column 1 of C_1 as lowercase hex>
//! ...          (m lines)
//!
//! <column 1 of C_2>
//! ...          (S blocks total, separated by a blank line)
//! ```
//!
//! Each column line is the n-bit column written as one big integer in
//! lowercase hex: bit `n - j` of the integer is row `j`, so row 1 is the
//! most significant of the n used bits. This matches the in-memory packing
//! of [`crate::f2`], making parse/format a pure radix conversion. Blank
//! lines and comments may appear anywhere; writing always emits the
//! canonical layout above, so read-then-write is byte-identical up to
//! dropped comments.

use crate::f2::GeneratingMatrixSet;
use std::fmt::Write as _;
use std::path::Path;

/// Parse or I/O failure, with the 1-based line number where applicable.
#[derive(Debug, thiserror::Error)]
pub enum MatFileError {
    #[error("line {line}: expected header `n m S`, got {got:?}")]
    BadHeader { line: usize, got: String },
    #[error("line {line}: header value out of range ({detail})")]
    BadDimensions { line: usize, detail: String },
    #[error("line {line}: not a lowercase hex integer: {got:?}")]
    BadColumn { line: usize, got: String },
    #[error("line {line}: column value {value:#x} has bits above row n = {n}")]
    ColumnTooWide { line: usize, value: u64, n: u32 },
    #[error("matrix {index} is incomplete: expected {expected} columns, file ended after {got}")]
    MissingColumns {
        index: usize,
        expected: u32,
        got: u32,
    },
    #[error("line {line}: trailing content after the last matrix")]
    TrailingContent { line: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Reads a matrix set from `path`.
pub fn read_matrices(path: impl AsRef<Path>) -> Result<GeneratingMatrixSet, MatFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| MatFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrices(&text)
}

/// Writes a matrix set to `path`, preceded by the given comment lines
/// (written as `# ...`).
pub fn write_matrices(
    path: impl AsRef<Path>,
    g: &GeneratingMatrixSet,
    comments: &[&str],
) -> Result<(), MatFileError> {
    let path = path.as_ref();
    std::fs::write(path, format_matrices(g, comments)).map_err(|source| MatFileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses the text form of a matrix set.
pub fn parse_matrices(text: &str) -> Result<GeneratingMatrixSet, MatFileError> {
    // Content lines with their 1-based numbers; comments and blanks are
    // structural noise.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(MatFileError::BadHeader {
        line: 1,
        got: String::new(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parsed: Vec<u32> = fields.iter().filter_map(|f| f.parse().ok()).collect();
    if fields.len() != 3 || parsed.len() != 3 {
        return Err(MatFileError::BadHeader {
            line: hline,
            got: header.to_string(),
        });
    }
    let (n, m, s) = (parsed[0], parsed[1], parsed[2]);
    if !(1..=64).contains(&n) || s < 1 {
        return Err(MatFileError::BadDimensions {
            line: hline,
            detail: format!("n = {n} must be 1..=64 and S = {s} >= 1"),
        });
    }

    let mut matrices: Vec<Vec<u64>> = Vec::with_capacity(s as usize);
    for index in 0..s as usize {
        let mut mat = Vec::with_capacity(m as usize);
        for _ in 0..m {
            let (lno, l) = lines.next().ok_or(MatFileError::MissingColumns {
                index,
                expected: m,
                got: mat.len() as u32,
            })?;
            let ok = !l.is_empty()
                && l.chars()
                    .all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase());
            let value = if ok {
                u64::from_str_radix(l, 16).ok()
            } else {
                None
            };
            let value = value.ok_or(MatFileError::BadColumn {
                line: lno,
                got: l.to_string(),
            })?;
            if n < 64 && value >> n != 0 {
                return Err(MatFileError::ColumnTooWide {
                    line: lno,
                    value,
                    n,
                });
            }
            mat.push(value);
        }
        matrices.push(mat);
    }
    if let Some((line, _)) = lines.next() {
        return Err(MatFileError::TrailingContent { line });
    }
    Ok(GeneratingMatrixSet::new(n, matrices))
}

/// Formats a matrix set in the canonical layout.
#[must_use]
pub fn format_matrices(g: &GeneratingMatrixSet, comments: &[&str]) -> String {
    let width = (g.n() as usize).div_ceil(4);
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{} {} {}", g.n(), g.m(), g.dim());
    for i in 0..g.dim() as usize {
        for j in 0..g.m() as usize {
            let _ = writeln!(out, "{:0width$x}", g.column(i, j));
        }
        if i + 1 < g.dim() as usize {
            out.push('\n');
        }
    }
    out
}
