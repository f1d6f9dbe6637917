//! CSV forms of walk paths and kernels.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{InducedKernel, WalkKind, WalkPath};
use crate::error::WalkError;

#[derive(Serialize, Deserialize)]
struct Header {
    kind: WalkKind,
    seed: u64,
}

/// `#` JSON header, then `step,vertex` (discrete) or `time,vertex` (continuous) rows.
pub fn write_walk_csv<W: Write>(path: &WalkPath, mut out: W) -> std::io::Result<()> {
    let header = Header {
        kind: path.kind(),
        seed: path.seed(),
    };
    writeln!(out, "#{}", serde_json::to_string(&header)?)?;
    if path.kind().is_continuous() {
        writeln!(out, "time,vertex")?;
        for (t, v) in path.times().iter().zip(path.vertices()) {
            writeln!(out, "{t},{v}")?;
        }
    } else {
        writeln!(out, "step,vertex")?;
        for (k, v) in path.vertices().iter().enumerate() {
            writeln!(out, "{k},{v}")?;
        }
    }
    Ok(())
}

fn bad(msg: impl std::fmt::Display) -> WalkError {
    WalkError::Parameter(format!("malformed CSV: {msg}"))
}

pub fn read_walk_csv<R: BufRead>(input: R) -> Result<WalkPath, WalkError> {
    let mut lines = input.lines();
    let first = lines.next().ok_or_else(|| bad("empty"))?.map_err(bad)?;
    let header: Header = serde_json::from_str(first.strip_prefix('#').ok_or_else(|| bad("missing header"))?)
        .map_err(bad)?;
    lines.next();
    let mut vertices = Vec::new();
    let mut times = Vec::new();
    for line in lines {
        let line = line.map_err(bad)?;
        let (t, v) = line.split_once(',').ok_or_else(|| bad(&line))?;
        times.push(t.parse::<f64>().map_err(|_| bad(&line))?);
        vertices.push(v.parse::<u32>().map_err(|_| bad(&line))?);
    }
    if vertices.is_empty() {
        return Err(bad("no rows"));
    }
    Ok(WalkPath::new(header.kind, header.seed, vertices, times))
}

/// `x,y,p` triplets of every computed row.
pub fn write_kernel_csv<W: Write>(kernel: &InducedKernel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "x,y,p")?;
    for (x, y, p) in kernel.triplets() {
        writeln!(out, "{x},{y},{p}")?;
    }
    Ok(())
}

pub fn read_kernel_csv<R: BufRead>(input: R) -> Result<Vec<(usize, usize, f64)>, WalkError> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(bad)?;
        if k == 0 {
            if line != "x,y,p" {
                return Err(bad("expected header x,y,p"));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad(&line));
        }
        out.push((
            f[0].parse().map_err(|_| bad(&line))?,
            f[1].parse().map_err(|_| bad(&line))?,
            f[2].parse().map_err(|_| bad(&line))?,
        ));
    }
    Ok(out)
}
