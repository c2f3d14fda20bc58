//! Matrix Market I/O for square real matrices.
//!
//! Reads `coordinate real|integer general|symmetric` and
//! `array real|integer general|symmetric`. Symmetric coordinate files store
//! one triangle and are mirrored on read; symmetric array files store the
//! lower triangle column by column.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{CooMatrix, DenseMatrix, ImplicitOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtxLayout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtxSymmetry {
    General,
    Symmetric,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket(format!("line {line}: {}", msg.into()))
}

fn parse_header(line: &str) -> Result<(MtxLayout, MtxSymmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(1, format!("bad header `{line}`")));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => MtxLayout::Coordinate,
        "array" => MtxLayout::Array,
        other => return Err(err(1, format!("unsupported format `{other}`"))),
    };
    match tokens[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(err(1, format!("unsupported field `{other}`"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => MtxSymmetry::General,
        "symmetric" => MtxSymmetry::Symmetric,
        other => return Err(err(1, format!("unsupported symmetry `{other}`"))),
    };
    Ok((layout, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse::<T>().map_err(|_| err(line, format!("bad {what} `{tok}`")))
}

/// Parse a Matrix Market stream into an operator: coordinate files become
/// [`super::OperatorKind::SparseCoo`], array files [`super::OperatorKind::Dense`].
pub fn read_matrix_market<R: Read>(reader: R) -> Result<ImplicitOperator> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let (layout, symmetry) = parse_header(&header?)?;

    let mut data = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        data.push((no, trimmed.to_string()));
    }
    let mut data = data.into_iter();
    let (size_no, size_line) = data.next().ok_or_else(|| err(2, "missing size line"))?;
    let mut size = size_line.split_whitespace();
    let rows: usize = parse_num(size.next(), size_no, "row count")?;
    let cols: usize = parse_num(size.next(), size_no, "column count")?;
    if rows != cols {
        return Err(err(size_no, format!("matrix must be square, got {rows}x{cols}")));
    }
    let n = rows;

    match layout {
        MtxLayout::Coordinate => {
            let nnz: usize = parse_num(size.next(), size_no, "entry count")?;
            let mut m = CooMatrix::new(n);
            let mut count = 0;
            for (no, line) in data {
                let mut t = line.split_whitespace();
                let i: usize = parse_num(t.next(), no, "row index")?;
                let j: usize = parse_num(t.next(), no, "column index")?;
                let v: f64 = parse_num(t.next(), no, "value")?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(err(no, format!("index ({i}, {j}) out of range for n = {n}")));
                }
                m.push(i - 1, j - 1, v)?;
                if symmetry == MtxSymmetry::Symmetric && i != j {
                    m.push(j - 1, i - 1, v)?;
                }
                count += 1;
            }
            if count != nnz {
                return Err(err(size_no, format!("declared {nnz} entries, found {count}")));
            }
            Ok(ImplicitOperator::sparse(m))
        }
        MtxLayout::Array => {
            let values: Vec<(usize, f64)> = data
                .map(|(no, line)| parse_num::<f64>(Some(line.as_str()), no, "value").map(|v| (no, v)))
                .collect::<Result<_>>()?;
            let expected = match symmetry {
                MtxSymmetry::General => n * n,
                MtxSymmetry::Symmetric => n * (n + 1) / 2,
            };
            if values.len() != expected {
                return Err(err(size_no, format!("expected {expected} values, found {}", values.len())));
            }
            let mut m = DenseMatrix::zeros(n);
            let mut it = values.into_iter().map(|(_, v)| v);
            for j in 0..n {
                let start = if symmetry == MtxSymmetry::Symmetric { j } else { 0 };
                for i in start..n {
                    let v = it.next().unwrap_or_default();
                    m.set(i, j, v);
                    if symmetry == MtxSymmetry::Symmetric {
                        m.set(j, i, v);
                    }
                }
            }
            Ok(ImplicitOperator::dense(m))
        }
    }
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<ImplicitOperator> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_matrix_market(file)
}

/// Write `op` (materialized through matvecs when it is not already dense or
/// sparse). `Symmetric` output requires exact symmetry and writes the lower
/// triangle only.
pub fn write_matrix_market<W: Write>(
    op: &ImplicitOperator,
    layout: MtxLayout,
    symmetry: MtxSymmetry,
    mut w: W,
) -> Result<()> {
    let n = op.dim();
    let sym = symmetry == MtxSymmetry::Symmetric;
    let dense = op.to_dense();
    if sym && !dense.is_symmetric() {
        return Err(Error::MatrixMarket("cannot write a non-symmetric matrix as symmetric".into()));
    }
    let sym_word = if sym { "symmetric" } else { "general" };
    match layout {
        MtxLayout::Coordinate => {
            let mut entries = Vec::new();
            // column-major order, as most readers expect
            for j in 0..n {
                let start = if sym { j } else { 0 };
                for i in start..n {
                    let v = dense.get(i, j);
                    if v != 0.0 {
                        entries.push((i, j, v));
                    }
                }
            }
            writeln!(w, "%%MatrixMarket matrix coordinate real {sym_word}")?;
            writeln!(w, "{n} {n} {}", entries.len())?;
            for (i, j, v) in entries {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        MtxLayout::Array => {
            writeln!(w, "%%MatrixMarket matrix array real {sym_word}")?;
            writeln!(w, "{n} {n}")?;
            for j in 0..n {
                let start = if sym { j } else { 0 };
                for i in start..n {
                    writeln!(w, "{:e}", dense.get(i, j))?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_matrix_market_file(
    op: &ImplicitOperator,
    layout: MtxLayout,
    symmetry: MtxSymmetry,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix_market(op, layout, symmetry, &mut w)?;
    w.flush()?;
    Ok(())
}
