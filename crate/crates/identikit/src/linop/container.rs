//! Binary container for spaces and operators.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic b"IDKTCON1"
//! 8       8     u64 header length H
//! 16      H     header, UTF-8 JSON (see `Header`), keys in fixed order
//! 16+H    ...   f64 arrays, in this order:
//!                 domain nodes   (n_dom * dim_dom, node-major)
//!                 domain weights (n_dom)
//!                 codomain nodes   (operators only)
//!                 codomain weights (operators only)
//!                 matrix, row-major (n_cod * n_dom, operators only)
//! ```
//!
//! Tensor-axis metadata is not stored; a space read back has no axes.

use std::io::{Read, Write};

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{LinOp, Space, WeightedSpace};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"IDKTCON1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    kind: String,
    domain: SpaceHeader,
    codomain: Option<SpaceHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceHeader {
    label: String,
    dim: usize,
    nodes: usize,
    probability: bool,
}

impl SpaceHeader {
    fn of(s: &WeightedSpace) -> Self {
        SpaceHeader { label: s.label().to_string(), dim: s.dim(), nodes: s.len(), probability: s.is_probability() }
    }
}

fn write_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Container(format!("truncated data section: {e}")))?;
    Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn write_header(w: &mut impl Write, h: &Header) -> Result<()> {
    let json = serde_json::to_vec(h).map_err(|e| Error::Container(e.to_string()))?;
    w.write_all(&MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<Header> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::Container("missing magic".into()))?;
    if magic != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| Error::Container("missing header length".into()))?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 20 {
        return Err(Error::Container("header too large".into()));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(|_| Error::Container("truncated header".into()))?;
    serde_json::from_slice(&json).map_err(|e| Error::Container(format!("bad header: {e}")))
}

fn write_space_arrays(w: &mut impl Write, s: &WeightedSpace) -> Result<()> {
    write_f64s(w, s.nodes())?;
    write_f64s(w, s.weights())
}

fn read_space_arrays(r: &mut impl Read, h: &SpaceHeader) -> Result<Space> {
    let nodes = read_f64s(r, h.nodes * h.dim)?;
    let weights = read_f64s(r, h.nodes)?;
    if h.probability {
        WeightedSpace::probability(&h.label, h.dim, nodes, weights)
    } else {
        WeightedSpace::new(&h.label, h.dim, nodes, weights)
    }
}

pub fn write_space(w: &mut impl Write, s: &WeightedSpace) -> Result<()> {
    write_header(w, &Header { kind: "space".into(), domain: SpaceHeader::of(s), codomain: None })?;
    write_space_arrays(w, s)
}

pub fn read_space(r: &mut impl Read) -> Result<Space> {
    let h = read_header(r)?;
    if h.kind != "space" {
        return Err(Error::Container(format!("expected a space, found '{}'", h.kind)));
    }
    read_space_arrays(r, &h.domain)
}

pub fn write_operator(w: &mut impl Write, op: &LinOp) -> Result<()> {
    let h = Header {
        kind: "operator".into(),
        domain: SpaceHeader::of(op.domain()),
        codomain: Some(SpaceHeader::of(op.codomain())),
    };
    write_header(w, &h)?;
    write_space_arrays(w, op.domain())?;
    write_space_arrays(w, op.codomain())?;
    write_f64s(w, &op.row_major())
}

pub fn read_operator(r: &mut impl Read) -> Result<LinOp> {
    let h = read_header(r)?;
    if h.kind != "operator" {
        return Err(Error::Container(format!("expected an operator, found '{}'", h.kind)));
    }
    let cod_h = h.codomain.as_ref().ok_or_else(|| Error::Container("operator without codomain".into()))?;
    let domain = read_space_arrays(r, &h.domain)?;
    let codomain = read_space_arrays(r, cod_h)?;
    let data = read_f64s(r, codomain.len() * domain.len())?;
    let n = domain.len();
    let m = Mat::from_fn(codomain.len(), n, |i, j| data[i * n + j]);
    LinOp::new(&domain, &codomain, m)
}
