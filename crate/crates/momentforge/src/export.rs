//! SDP file exporters and an independent SDPA reader.
//!
//! Two formats are written: SDPA sparse (`.dat-s`), the line-oriented
//! interchange format consumed by SDPA-family solvers, and a structured
//! text document (`.relax`) that additionally carries the moment map and
//! exact objective rationals for downstream tooling and regression diffs.
//!
//! SDPA solvers minimize `c·x` subject to `Σ xᵢ Fᵢ − F₀ ⪰ 0`. Our program
//! maximizes `b·y` subject to `C + Σ yᵢ Aᵢ ⪰ 0`, so files are written with
//! `c = −b`, `F₀ = −C`, `Fᵢ = Aᵢ`; the optimum of the original program is
//! the NEGATIVE of the minimum such a solver reports. The file header
//! repeats this convention.

use crate::relaxation::{BlockSdp, MomentRelaxation, SparseSymMat};
use std::io::{self, Write};

pub fn write_sdpa_sparse(sdp: &BlockSdp, sink: &mut dyn Write) -> io::Result<()> {
    let m = sdp.num_variables();
    writeln!(sink, "\"SDPA sparse export: maximize b.y with C + sum_i y_i*A_i >= 0")?;
    writeln!(sink, "\"encoded for minimizing solvers as c = -b, F_0 = -C, F_i = A_i;")?;
    writeln!(sink, "\"the original maximum equals MINUS the minimum reported by the solver.")?;
    if sdp.constant_offset != 0.0 {
        writeln!(
            sink,
            "\"a constant objective offset of {:.16e} must be added to the recovered maximum.",
            sdp.constant_offset
        )?;
    }
    writeln!(sink, "{m}")?;
    writeln!(sink, "{}", sdp.num_blocks())?;
    let sizes: Vec<String> = sdp.block_dims.iter().map(|d| d.to_string()).collect();
    writeln!(sink, "{}", sizes.join(" "))?;
    let costs: Vec<String> = sdp.b.iter().map(|v| format!("{:.16e}", -v)).collect();
    writeln!(sink, "{}", costs.join(" "))?;
    for (blk, mat) in sdp.c.iter().enumerate() {
        for &(r, c, v) in &mat.entries {
            writeln!(sink, "0 {} {} {} {:.16e}", blk + 1, r + 1, c + 1, -v)?;
        }
    }
    for (var, mats) in sdp.a.iter().enumerate() {
        for (blk, mat) in mats.iter().enumerate() {
            for &(r, c, v) in &mat.entries {
                writeln!(sink, "{} {} {} {} {:.16e}", var + 1, blk + 1, r + 1, c + 1, v)?;
            }
        }
    }
    Ok(())
}

/// Emits the structured export: block sizes, variable count, the moment map,
/// the index matrix in coordinate form, and the exact objective. Output is
/// deterministic byte for byte.
pub fn write_structured(
    sdp: &BlockSdp,
    relax: &MomentRelaxation,
    sink: &mut dyn Write,
) -> io::Result<()> {
    let alphabet = relax.basis.alphabet();
    writeln!(sink, "relaxation:")?;
    writeln!(sink, "  level: {}", relax.basis.level())?;
    writeln!(sink, "  basis_size: {}", relax.basis.size())?;
    writeln!(sink, "  variables: {}", relax.num_variables())?;
    let blocks: Vec<String> = sdp.block_dims.iter().map(|d| d.to_string()).collect();
    writeln!(sink, "  blocks: [{}]", blocks.join(", "))?;
    writeln!(sink, "moments:")?;
    for (i, word) in relax.moments.iter().enumerate() {
        writeln!(sink, "  {}: \"{}\"", i + 1, alphabet.display_word(word))?;
    }
    writeln!(sink, "objective:")?;
    writeln!(sink, "  constant: ")?;
    for (i, coeff) in relax.objective.iter().enumerate().skip(1) {
        if i == 1 || !num::Zero::is_zero(coeff) {
            writeln!(sink, "  {}: {}", i, coeff)?;
        }
    }
    writeln!(sink, "index_matrix:")?;
    for (j, row) in relax.index_matrix.iter().enumerate() {
        for (k, &v) in row.iter().enumerate().skip(j) {
            if v != 0 {
                writeln!(sink, "  - [{j}, {k}, {v}]")?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum SdpaReadError {
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("unexpected end of file: {0}")]
    Truncated(String),
}

fn invalid(line: usize, message: impl Into<String>) -> SdpaReadError {
    SdpaReadError::Invalid { line, message: message.into() }
}

/// Robustness caps: far beyond any real export, small enough that malformed
/// headers cannot trigger huge allocations.
const MAX_VARIABLES: usize = 1_000_000;
const MAX_BLOCKS: usize = 4096;
const MAX_BLOCK_DIM: usize = 100_000;

/// A deliberately independent, minimal reader for SDPA sparse files written
/// by [`write_sdpa_sparse`]; it undoes the minimization encoding
/// (`C = −F₀`, `Aᵢ = Fᵢ`, `b = −c`) and serves as the round-trip oracle.
/// Never panics on malformed input.
pub fn read_sdpa_sparse(text: &str) -> Result<BlockSdp, SdpaReadError> {
    let mut data_lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut header = Vec::new();
    let mut entry_lines = Vec::new();
    for (no, line) in &mut data_lines {
        if line.starts_with('"') || line.starts_with('*') {
            if header.len() < 4 {
                continue;
            }
            return Err(invalid(no, "comments are only allowed before the data header"));
        }
        if header.len() < 4 {
            header.push((no, line));
        } else {
            entry_lines.push((no, line));
        }
    }
    if header.len() < 4 {
        return Err(SdpaReadError::Truncated(
            "expected variable count, block count, block sizes, and objective".into(),
        ));
    }

    let tokens = |line: &str| -> Vec<String> {
        line.split(|ch: char| ch.is_whitespace() || matches!(ch, ',' | '{' | '}' | '(' | ')'))
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    };
    let parse_usize = |no: usize, tok: &str, what: &str| -> Result<usize, SdpaReadError> {
        tok.parse::<usize>()
            .map_err(|_| invalid(no, format!("{what}: expected a nonnegative integer, got {tok:?}")))
    };
    let parse_f64 = |no: usize, tok: &str, what: &str| -> Result<f64, SdpaReadError> {
        let v: f64 = tok
            .parse()
            .map_err(|_| invalid(no, format!("{what}: expected a number, got {tok:?}")))?;
        if !v.is_finite() {
            return Err(invalid(no, format!("{what}: value {tok:?} is not finite")));
        }
        Ok(v)
    };

    let (no, line) = header[0];
    let toks = tokens(line);
    if toks.len() != 1 {
        return Err(invalid(no, "variable-count line must hold a single integer"));
    }
    let m = parse_usize(no, &toks[0], "variable count")?;
    if m > MAX_VARIABLES {
        return Err(invalid(no, format!("variable count {m} exceeds the reader cap")));
    }

    let (no, line) = header[1];
    let toks = tokens(line);
    if toks.len() != 1 {
        return Err(invalid(no, "block-count line must hold a single integer"));
    }
    let nblocks = parse_usize(no, &toks[0], "block count")?;
    if nblocks == 0 || nblocks > MAX_BLOCKS {
        return Err(invalid(no, format!("block count {nblocks} is out of range")));
    }

    let (no, line) = header[2];
    let toks = tokens(line);
    if toks.len() != nblocks {
        return Err(invalid(
            no,
            format!("expected {nblocks} block sizes, found {}", toks.len()),
        ));
    }
    let mut block_dims = Vec::with_capacity(nblocks);
    for t in &toks {
        // diagonal blocks are conventionally negative; we only accept dense
        let d = t
            .parse::<i64>()
            .map_err(|_| invalid(no, format!("block size: expected an integer, got {t:?}")))?;
        if d <= 0 || d as usize > MAX_BLOCK_DIM {
            return Err(invalid(no, format!("block size {d} is out of range")));
        }
        block_dims.push(d as usize);
    }

    let (no, line) = header[3];
    let toks = tokens(line);
    if toks.len() != m {
        return Err(invalid(no, format!("expected {m} objective entries, found {}", toks.len())));
    }
    let mut b = Vec::with_capacity(m);
    for t in &toks {
        b.push(-parse_f64(no, t, "objective entry")?);
    }

    let empty = |dim: usize| SparseSymMat { dim, entries: Vec::new() };
    let mut c: Vec<SparseSymMat> = block_dims.iter().map(|&d| empty(d)).collect();
    let mut a: Vec<Vec<SparseSymMat>> = (0..m)
        .map(|_| block_dims.iter().map(|&d| empty(d)).collect())
        .collect();

    for (no, line) in entry_lines {
        let toks = tokens(line);
        if toks.len() != 5 {
            return Err(invalid(
                no,
                format!("entry must be `matno blkno i j value`, found {} tokens", toks.len()),
            ));
        }
        let matno = parse_usize(no, &toks[0], "matrix number")?;
        let blkno = parse_usize(no, &toks[1], "block number")?;
        let i = parse_usize(no, &toks[2], "row")?;
        let j = parse_usize(no, &toks[3], "column")?;
        let value = parse_f64(no, &toks[4], "value")?;
        if matno > m {
            return Err(invalid(no, format!("matrix number {matno} exceeds {m}")));
        }
        if blkno == 0 || blkno > nblocks {
            return Err(invalid(no, format!("block number {blkno} is out of range")));
        }
        let dim = block_dims[blkno - 1];
        if i == 0 || j == 0 || i > dim || j > dim {
            return Err(invalid(no, format!("position ({i},{j}) is outside a {dim}x{dim} block")));
        }
        let (r, cidx) = if i <= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        let target = if matno == 0 {
            &mut c[blkno - 1]
        } else {
            &mut a[matno - 1][blkno - 1]
        };
        let v = if matno == 0 { -value } else { value };
        target.entries.push((r, cidx, v));
    }

    Ok(BlockSdp { block_dims, c, a, b, constant_offset: 0.0 })
}
