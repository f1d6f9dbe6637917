//! CSV form of a harmonic embedding.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::embedding::HarmonicEmbedding;
use crate::error::CorrectorError;

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    vertex_count: usize,
    residual: f64,
    solver_iterations: usize,
    tolerance: f64,
}

/// `#` JSON header, then `vertex,x0..,phi0..,chi0..,interior` rows.
pub fn write_embedding_csv<W: Write>(emb: &HarmonicEmbedding, mut out: W) -> std::io::Result<()> {
    let header = Header {
        dim: emb.dim(),
        vertex_count: emb.vertex_count(),
        residual: emb.residual(),
        solver_iterations: emb.solver_iterations(),
        tolerance: emb.tolerance(),
    };
    writeln!(out, "#{}", serde_json::to_string(&header)?)?;
    let d = emb.dim();
    let mut cols = vec!["vertex".to_string()];
    for prefix in ["x", "phi", "chi"] {
        cols.extend((0..d).map(|c| format!("{prefix}{c}")));
    }
    cols.push("interior".into());
    writeln!(out, "{}", cols.join(","))?;
    for v in emb.vertices() {
        let mut row = vec![v.to_string()];
        for field in [emb.position(v), emb.phi(v), emb.chi(v)] {
            row.extend(field.unwrap().iter().map(|x| x.to_string()));
        }
        row.push(u8::from(emb.is_interior(v)).to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn bad(msg: impl std::fmt::Display) -> CorrectorError {
    CorrectorError::Parameter(format!("malformed embedding CSV: {msg}"))
}

pub fn read_embedding_csv<R: BufRead>(input: R) -> Result<HarmonicEmbedding, CorrectorError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| bad("empty"))?.map_err(bad)?;
    let h: Header = serde_json::from_str(first.strip_prefix('#').ok_or_else(|| bad("missing header"))?).map_err(bad)?;
    lines.next();
    let d = h.dim;
    let mut emb = HarmonicEmbedding {
        dim: d,
        slot: vec![u32::MAX; h.vertex_count],
        vertices: Vec::new(),
        interior: Vec::new(),
        positions: Vec::new(),
        phi: Vec::new(),
        chi: Vec::new(),
        residual: h.residual,
        solver_iterations: h.solver_iterations,
        tolerance: h.tolerance,
    };
    for line in lines {
        let line = line.map_err(bad)?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 * d + 2 {
            return Err(bad(&line));
        }
        let v: usize = f[0].parse().map_err(|_| bad(&line))?;
        if v >= h.vertex_count || emb.slot[v] != u32::MAX {
            return Err(bad(format!("vertex {v}")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&line));
        emb.slot[v] = emb.vertices.len() as u32;
        emb.vertices.push(v as u32);
        for c in 0..d {
            emb.positions.push(num(f[1 + c])?);
            emb.phi.push(num(f[1 + d + c])?);
            emb.chi.push(num(f[1 + 2 * d + c])?);
        }
        emb.interior.push(match f[3 * d + 1] {
            "1" => true,
            "0" => false,
            _ => return Err(bad(&line)),
        });
    }
    if emb.vertices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad("vertices out of order"));
    }
    Ok(emb)
}
