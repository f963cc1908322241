//! Text formats.
//!
//! Matrices and vectors use a coordinate format:
//!
//! ```text
//! ring=Fp:101 rows=3 cols=2 nnz=2
//! 1 1 5
//! 3 2 100
//! ```
//!
//! Indices are 1-based; entries may appear in any order but not twice.
//! Values are decimal for `Z` and `Fp`, hex bit patterns for `F2e`.
//! A vector is a matrix with one column. Measurements use
//! `ring=<tag> blocks=<M> bits=<l> nnz=<k>` followed by `<block> <bit> <value>`
//! lines, and graphs use `left=<N> right=<M> d=<d>` followed by one line of
//! neighbors per left vertex. Blank lines and lines starting with `#` are
//! ignored.

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::{AlgebraError, Ring, RingContext};
use crate::expander::{BipartiteGraph, ExpanderError};
use crate::sketch::{Measurement, SketchError};
use crate::sparse::{SparseError, SparseMat, SparseVec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("file is over ring {found}, expected {expected}")]
    RingMismatch { found: String, expected: String },
    #[error("header declares {declared} entries, found {found}")]
    Count { declared: usize, found: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Expander(#[from] ExpanderError),
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `key=value` pairs of a header line, checked against the expected keys.
fn parse_header<'a>(line: &'a str, keys: &[&str]) -> Result<HashMap<&'a str, &'a str>, IoError> {
    let mut fields = HashMap::new();
    for token in line.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| IoError::Header(format!("expected key=value, got {token:?}")))?;
        if !keys.contains(&k) {
            return Err(IoError::Header(format!("unknown key {k:?}")));
        }
        if fields.insert(k, v).is_some() {
            return Err(IoError::Header(format!("repeated key {k:?}")));
        }
    }
    for k in keys {
        if !fields.contains_key(k) {
            return Err(IoError::Header(format!("missing key {k:?}")));
        }
    }
    Ok(fields)
}

fn header_num<T: std::str::FromStr>(fields: &HashMap<&str, &str>, key: &str) -> Result<T, IoError> {
    fields[key]
        .parse()
        .map_err(|_| IoError::Header(format!("{key}={} is not a number", fields[key])))
}

/// Ring named by the header of a matrix, vector or measurement file.
pub fn peek_ring(text: &str) -> Result<RingContext, IoError> {
    let (_, line) = content_lines(text)
        .next()
        .ok_or_else(|| IoError::Header("empty file".into()))?;
    let tag = line
        .split_whitespace()
        .find_map(|t| t.strip_prefix("ring="))
        .ok_or_else(|| IoError::Header("missing key \"ring\"".into()))?;
    Ok(tag.parse()?)
}

fn check_ring<R: Ring>(ring: &R, tag: &str) -> Result<(), IoError> {
    let found: RingContext = tag.parse()?;
    if found.to_string() != ring.tag() {
        return Err(IoError::RingMismatch {
            found: found.to_string(),
            expected: ring.tag(),
        });
    }
    Ok(())
}

fn line_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Line {
        line,
        msg: msg.into(),
    }
}

/// Parses `i j v` triples (or `block bit v`) with 1-based, range-checked indices.
fn parse_triples<R: Ring>(
    ring: &R,
    lines: impl Iterator<Item = (usize, impl AsRef<str>)>,
    bounds: (usize, usize),
    declared: usize,
) -> Result<Vec<(usize, usize, R::Elem)>, IoError> {
    let mut out = Vec::with_capacity(declared);
    for (no, line) in lines {
        let parts: Vec<&str> = line.as_ref().split_whitespace().collect();
        if parts.len() != 3 {
            return Err(line_err(no, "expected three fields"));
        }
        let index = |s: &str, bound: usize| -> Result<usize, IoError> {
            let v: usize = s
                .parse()
                .map_err(|_| line_err(no, format!("bad index {s:?}")))?;
            if v == 0 || v > bound {
                return Err(line_err(no, format!("index {v} outside 1..={bound}")));
            }
            Ok(v - 1)
        };
        let i = index(parts[0], bounds.0)?;
        let j = index(parts[1], bounds.1)?;
        let v = ring
            .parse_elem(parts[2])
            .map_err(|e| line_err(no, e.to_string()))?;
        if ring.is_zero(&v) {
            return Err(line_err(no, "explicit zero entry"));
        }
        out.push((i, j, v));
    }
    if out.len() != declared {
        return Err(IoError::Count {
            declared,
            found: out.len(),
        });
    }
    Ok(out)
}

pub fn read_matrix<R: Ring>(ring: &R, text: &str) -> Result<SparseMat<R::Elem>, IoError> {
    let mut lines = content_lines(text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| IoError::Header("empty file".into()))?;
    let fields = parse_header(header, &["ring", "rows", "cols", "nnz"])?;
    check_ring(ring, fields["ring"])?;
    let rows: usize = header_num(&fields, "rows")?;
    let cols: usize = header_num(&fields, "cols")?;
    let nnz: usize = header_num(&fields, "nnz")?;
    let triples = parse_triples(ring, lines, (rows, cols), nnz)?;
    Ok(SparseMat::from_triplets(ring, rows, cols, triples)?)
}

pub fn write_matrix<R: Ring>(ring: &R, m: &SparseMat<R::Elem>) -> String {
    let mut out = format!(
        "ring={} rows={} cols={} nnz={}\n",
        ring.tag(),
        m.rows(),
        m.cols(),
        m.nnz()
    );
    for (i, j, v) in m.triplets() {
        out.push_str(&format!("{} {} {}\n", i + 1, j + 1, ring.format_elem(v)));
    }
    out
}

pub fn read_vector<R: Ring>(ring: &R, text: &str) -> Result<SparseVec<R::Elem>, IoError> {
    let m = read_matrix(ring, text)?;
    if m.cols() != 1 {
        return Err(IoError::Header(format!(
            "a vector file has cols=1, got cols={}",
            m.cols()
        )));
    }
    Ok(m.into_columns().pop().expect("one column"))
}

pub fn write_vector<R: Ring>(ring: &R, v: &SparseVec<R::Elem>) -> String {
    let m = SparseMat::from_columns(v.len(), vec![v.clone()]).expect("one column");
    write_matrix(ring, &m)
}

pub fn read_measurement<R: Ring>(ring: &R, text: &str) -> Result<Measurement<R::Elem>, IoError> {
    let mut lines = content_lines(text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| IoError::Header("empty file".into()))?;
    let fields = parse_header(header, &["ring", "blocks", "bits", "nnz"])?;
    check_ring(ring, fields["ring"])?;
    let blocks: u64 = header_num(&fields, "blocks")?;
    let bits: usize = header_num(&fields, "bits")?;
    let nnz: usize = header_num(&fields, "nnz")?;
    let len = usize::try_from(blocks as u128 * bits as u128)
        .map_err(|_| IoError::Header("measurement too long".into()))?;
    let block_bound = usize::try_from(blocks).unwrap_or(usize::MAX);
    let triples = parse_triples(ring, lines, (block_bound, bits), nnz)?;
    let entries = triples
        .into_iter()
        .map(|(b, k, v)| (b * bits + k, v))
        .collect();
    let values = SparseVec::try_new(ring, len, entries)?;
    Ok(Measurement::new(blocks, bits, values)?)
}

pub fn write_measurement<R: Ring>(ring: &R, z: &Measurement<R::Elem>) -> String {
    let mut out = format!(
        "ring={} blocks={} bits={} nnz={}\n",
        ring.tag(),
        z.blocks(),
        z.bits(),
        z.values().nnz()
    );
    for (idx, v) in z.values().iter() {
        out.push_str(&format!(
            "{} {} {}\n",
            idx / z.bits() + 1,
            idx % z.bits() + 1,
            ring.format_elem(v)
        ));
    }
    out
}

pub fn read_graph(text: &str) -> Result<BipartiteGraph, IoError> {
    let mut lines = content_lines(text);
    let (_, header) = lines
        .next()
        .ok_or_else(|| IoError::Header("empty file".into()))?;
    let fields = parse_header(header, &["left", "right", "d"])?;
    let left: usize = header_num(&fields, "left")?;
    let right: u64 = header_num(&fields, "right")?;
    let d: usize = header_num(&fields, "d")?;
    let mut lists = Vec::with_capacity(left);
    for (no, line) in lines {
        let list = line
            .split_whitespace()
            .map(|s| match s.parse::<u64>() {
                Ok(v) if v >= 1 && v <= right => Ok(v - 1),
                _ => Err(line_err(no, format!("bad right vertex {s:?}"))),
            })
            .collect::<Result<Vec<u64>, IoError>>()?;
        if list.len() != d {
            return Err(line_err(
                no,
                format!("expected {d} neighbors, got {}", list.len()),
            ));
        }
        lists.push(list);
    }
    if lists.len() != left {
        return Err(IoError::Count {
            declared: left,
            found: lists.len(),
        });
    }
    Ok(BipartiteGraph::from_adjacency(right, lists)?)
}

pub fn write_graph(g: &BipartiteGraph) -> String {
    let mut out = format!("left={} right={} d={}\n", g.left(), g.right(), g.degree());
    for nbrs in g.adjacency() {
        let line: Vec<String> = nbrs.iter().map(|r| (r + 1).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
