//! Per-box CSV records.
//!
//! A `#` line carries the field parameters as JSON, followed by a header row and one
//! row per box: index components, `;`-separated sub-box counts, nice and good flags,
//! cluster membership and hole id (empty when no decomposition covers the box).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ClusterDecomposition, GoodBoxField};
use crate::error::PartitionError;
use crate::pointproc::Window;

#[derive(Serialize, Deserialize)]
struct Header {
    dim: usize,
    s: f64,
    alpha: f64,
    zlo: Vec<i64>,
    shape: Vec<usize>,
    window: Window,
    point_count: usize,
    #[serde(default)]
    l: Option<i64>,
}

pub fn write_field_csv<W: Write>(
    field: &GoodBoxField,
    decomp: Option<&ClusterDecomposition>,
    mut out: W,
) -> std::io::Result<()> {
    let header = Header {
        dim: field.dim(),
        s: field.s(),
        alpha: field.alpha(),
        zlo: field.zlo().to_vec(),
        shape: field.shape().to_vec(),
        window: field.window().clone(),
        point_count: field.point_count(),
        l: decomp.map(|d| d.l()),
    };
    writeln!(out, "#{}", serde_json::to_string(&header)?)?;
    let axes: Vec<String> = (0..field.dim()).map(|a| format!("z{a}")).collect();
    writeln!(out, "{},counts,nice,good,cluster,hole", axes.join(","))?;
    for i in 0..field.len() {
        let z = field.z_of(i);
        let zs: Vec<String> = z.iter().map(|c| c.to_string()).collect();
        let counts: Vec<String> = field.subbox_counts(i).iter().map(|c| c.to_string()).collect();
        let (cluster, hole) = match decomp.and_then(|d| d.index_of(&z).map(|j| (d, j))) {
            Some((d, j)) => (
                u8::from(d.in_cluster(j)).to_string(),
                d.hole_id(j).map(|h| h.to_string()).unwrap_or_default(),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            zs.join(","),
            counts.join(";"),
            u8::from(field.is_nice(i)),
            u8::from(field.is_good(i)),
            cluster,
            hole
        )?;
    }
    Ok(())
}

/// Reads the field back (counts are authoritative; flags are recomputed and checked).
pub fn read_field_csv<R: BufRead>(input: R) -> Result<GoodBoxField, PartitionError> {
    let fmt = |m: String| PartitionError::Consistency(m);
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| fmt("empty field file".into()))?
        .map_err(|e| fmt(e.to_string()))?;
    let header: Header = serde_json::from_str(first.strip_prefix('#').ok_or_else(|| fmt("missing header".into()))?)
        .map_err(|e| fmt(format!("header: {e}")))?;
    lines.next();
    let m = super::subboxes_per_side(header.dim).pow(header.dim as u32);
    let mut counts = Vec::new();
    let mut flags = Vec::new();
    for line in lines {
        let line = line.map_err(|e| fmt(e.to_string()))?;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != header.dim + 5 {
            return Err(fmt(format!("bad row {line:?}")));
        }
        let row: Result<Vec<u32>, _> = cols[header.dim].split(';').map(str::parse).collect();
        let row = row.map_err(|_| fmt(format!("bad counts in {line:?}")))?;
        if row.len() != m {
            return Err(fmt(format!("expected {m} counts in {line:?}")));
        }
        counts.extend(row);
        flags.push((cols[header.dim + 1] == "1", cols[header.dim + 2] == "1"));
    }
    let mut field = GoodBoxField::from_counts(header.dim, header.s, header.alpha, header.zlo, header.shape, counts)?;
    if flags.iter().enumerate().any(|(i, &(n, g))| field.is_nice(i) != n || field.is_good(i) != g) {
        return Err(fmt("stored flags disagree with the counts".into()));
    }
    field.set_origin(header.window, header.point_count);
    Ok(field)
}
