//! Operator dumps in Matrix Market coordinate format.
//!
//! ```text
//! %%MatrixMarket matrix coordinate complex general
//! % basis n_atoms=<N> fock_cutoff=<n_max>
//! <dim> <dim> <nnz>
//! <row> <col> <re> <im>      (1-based, row-major order, %.17e)
//! ```

use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;

use super::{BasisSpec, OperatorMatrix, SparseMatrix};
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate complex general";

pub fn write_matrix_market<W: Write>(op: &OperatorMatrix, mut out: W) -> Result<()> {
    let basis = op.basis();
    let m = op.matrix();
    writeln!(out, "{HEADER}")?;
    writeln!(
        out,
        "% basis n_atoms={} fock_cutoff={}",
        basis.n_atoms(),
        basis.fock_cutoff()
    )?;
    writeln!(out, "{} {} {}", m.dim(), m.dim(), m.nnz())?;
    for (r, c, v) in m.iter() {
        writeln!(out, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im)?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        location: format!("matrix market line {line}"),
        message: message.into(),
    }
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<OperatorMatrix> {
    let mut basis = None;
    let mut size = None;
    let mut triplets = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if lineno == 1 {
            if line.trim() != HEADER {
                return Err(parse_err(lineno, "unexpected header"));
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('%') {
            let mut n_atoms = None;
            let mut cutoff = None;
            for tok in comment.split_whitespace() {
                if let Some(v) = tok.strip_prefix("n_atoms=") {
                    n_atoms = v.parse::<usize>().ok();
                } else if let Some(v) = tok.strip_prefix("fock_cutoff=") {
                    cutoff = v.parse::<usize>().ok();
                }
            }
            if let (Some(n), Some(c)) = (n_atoms, cutoff) {
                basis = Some(BasisSpec::new(n, c)?);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if size.is_none() {
            if fields.len() != 3 {
                return Err(parse_err(lineno, "expected `rows cols nnz`"));
            }
            let parsed: Vec<usize> = fields
                .iter()
                .map(|f| f.parse().map_err(|_| parse_err(lineno, "bad size field")))
                .collect::<Result<_>>()?;
            size = Some((parsed[0], parsed[2]));
            continue;
        }
        if fields.len() != 4 {
            return Err(parse_err(lineno, "expected `row col re im`"));
        }
        let r: usize = fields[0].parse().map_err(|_| parse_err(lineno, "bad row"))?;
        let c: usize = fields[1].parse().map_err(|_| parse_err(lineno, "bad col"))?;
        let re: f64 = fields[2].parse().map_err(|_| parse_err(lineno, "bad real part"))?;
        let im: f64 = fields[3].parse().map_err(|_| parse_err(lineno, "bad imaginary part"))?;
        if r == 0 || c == 0 {
            return Err(parse_err(lineno, "indices are 1-based"));
        }
        triplets.push((r - 1, c - 1, C64::new(re, im)));
    }
    let basis = basis.ok_or_else(|| parse_err(2, "missing basis comment"))?;
    let (dim, nnz) = size.ok_or_else(|| parse_err(3, "missing size line"))?;
    if dim != basis.dim() {
        return Err(parse_err(3, format!("dimension {dim} does not match basis {basis}")));
    }
    if triplets.len() != nnz {
        return Err(parse_err(3, format!("declared {nnz} entries, found {}", triplets.len())));
    }
    if triplets.iter().any(|&(r, c, _)| r >= dim || c >= dim) {
        return Err(parse_err(3, "entry outside the declared dimension"));
    }
    let m = SparseMatrix::from_triplets(dim, triplets);
    let hermitian = m.hermiticity_defect() == 0.0;
    Ok(OperatorMatrix::new(basis, m, hermitian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{collective_spin, SpinOp};

    #[test]
    fn dump_is_exact() {
        let b = BasisSpec::new(3, 2).unwrap();
        let jy = collective_spin(b, SpinOp::Jy);
        let mut buf = Vec::new();
        write_matrix_market(&jy, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(HEADER));
        let back = read_matrix_market(buf.as_slice()).unwrap();
        assert_eq!(back.basis(), b);
        assert_eq!(back.matrix(), jy.matrix());
    }

    #[test]
    fn rejects_wrong_count() {
        let text = format!("{HEADER}\n% basis n_atoms=1 fock_cutoff=0\n2 2 2\n1 1 1.0 0.0\n");
        assert!(read_matrix_market(text.as_bytes()).is_err());
    }
}
