//! Text format: a `#` line holding a JSON header, then one point per line.
//!
//! Coordinates are written with Rust's shortest round-trip float formatting, so
//! reading a file back yields bit-identical values.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{PointSet, Provenance, Window};
use crate::error::PointProcError;

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    count: usize,
    window: Window,
    provenance: Provenance,
    palm_conditioned: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
}

pub fn write_point_set<W: Write>(ps: &PointSet, mut out: W) -> std::io::Result<()> {
    let header = Header {
        dim: ps.dim(),
        count: ps.len(),
        window: ps.window().clone(),
        provenance: ps.provenance().clone(),
        palm_conditioned: ps.palm_conditioned(),
        warning: ps.warning().map(str::to_owned),
    };
    writeln!(out, "#{}", serde_json::to_string(&header)?)?;
    for p in ps.iter() {
        let mut first = true;
        for x in p {
            if !first {
                out.write_all(b" ")?;
            }
            write!(out, "{x}")?;
            first = false;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_point_set<R: BufRead>(input: R) -> Result<PointSet, PointProcError> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| PointProcError::Format("empty input".into()))?
        .map_err(|e| PointProcError::Format(e.to_string()))?;
    let json = first
        .strip_prefix('#')
        .ok_or_else(|| PointProcError::Format("missing '#' header line".into()))?;
    let header: Header =
        serde_json::from_str(json).map_err(|e| PointProcError::Format(format!("header: {e}")))?;
    if header.window.dim() != header.dim {
        return Err(PointProcError::Format("header dimension disagrees with window".into()));
    }
    let mut coords = Vec::with_capacity(header.count * header.dim);
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| PointProcError::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let before = coords.len();
        for tok in line.split_whitespace() {
            let x: f64 = tok.parse().map_err(|_| {
                PointProcError::Format(format!("line {}: bad number {tok:?}", lineno + 2))
            })?;
            coords.push(x);
        }
        if coords.len() - before != header.dim {
            return Err(PointProcError::Format(format!(
                "line {}: expected {} coordinates",
                lineno + 2,
                header.dim
            )));
        }
    }
    if coords.len() != header.count * header.dim {
        return Err(PointProcError::Format(format!(
            "header announces {} points, found {}",
            header.count,
            coords.len() / header.dim
        )));
    }
    let mut ps = PointSet::from_parts(coords, header.window, header.provenance, header.palm_conditioned);
    if let Some(w) = header.warning {
        ps.set_warning(w);
    }
    if let Some(i) = ps.iter().position(|p| !ps.window().contains(p)) {
        return Err(PointProcError::Format(format!("point {i} lies outside the window")));
    }
    Ok(ps)
}
