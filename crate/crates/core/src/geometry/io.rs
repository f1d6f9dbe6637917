//! Edge-list text format for graphs.
//!
//! ```text
//! graph <vertex count> <dim>
//! v <index> <coordinates...> <tainted 0|1>
//! e <i> <j>          (i < j)
//! ```

use std::io::{BufRead, Write};

use super::Graph;
use crate::error::GeometryError;

pub fn write_graph<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "graph {} {}", g.len(), g.dim())?;
    for v in 0..g.len() {
        write!(out, "v {v}")?;
        for x in g.position(v) {
            write!(out, " {x}")?;
        }
        writeln!(out, " {}", u8::from(g.is_tainted(v)))?;
    }
    for (i, j) in g.edges() {
        writeln!(out, "e {i} {j}")?;
    }
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> GeometryError {
    GeometryError::Format(format!("line {line}: {msg}"))
}

pub fn read_graph<R: BufRead>(input: R) -> Result<Graph, GeometryError> {
    let mut lines = input.lines().enumerate();
    let (n, dim) = match lines.next() {
        Some((_, Ok(h))) => {
            let f: Vec<&str> = h.split_whitespace().collect();
            if f.len() != 3 || f[0] != "graph" {
                return Err(bad(1, "expected 'graph <n> <dim>'"));
            }
            let n: usize = f[1].parse().map_err(|_| bad(1, "bad vertex count"))?;
            let dim: usize = f[2].parse().map_err(|_| bad(1, "bad dimension"))?;
            (n, dim)
        }
        _ => return Err(bad(1, "missing header")),
    };
    let mut positions = vec![f64::NAN; n * dim];
    let mut tainted = vec![false; n];
    let mut seen = vec![false; n];
    let mut edges = Vec::new();
    for (k, line) in lines {
        let lineno = k + 1;
        let line = line.map_err(|e| bad(lineno, e))?;
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.first() {
            None => continue,
            Some(&"v") => {
                if f.len() != dim + 3 {
                    return Err(bad(lineno, "wrong field count for vertex"));
                }
                let v: usize = f[1].parse().map_err(|_| bad(lineno, "bad index"))?;
                if v >= n || seen[v] {
                    return Err(bad(lineno, format!("vertex {v} out of range or repeated")));
                }
                seen[v] = true;
                for a in 0..dim {
                    positions[v * dim + a] = f[2 + a].parse().map_err(|_| bad(lineno, "bad coordinate"))?;
                }
                tainted[v] = match f[dim + 2] {
                    "0" => false,
                    "1" => true,
                    other => return Err(bad(lineno, format!("bad tainted flag {other:?}"))),
                };
            }
            Some(&"e") => {
                if f.len() != 3 {
                    return Err(bad(lineno, "wrong field count for edge"));
                }
                let i: u32 = f[1].parse().map_err(|_| bad(lineno, "bad edge endpoint"))?;
                let j: u32 = f[2].parse().map_err(|_| bad(lineno, "bad edge endpoint"))?;
                if i >= j {
                    return Err(bad(lineno, "edge endpoints must satisfy i < j"));
                }
                edges.push((i, j));
            }
            Some(other) => return Err(bad(lineno, format!("unknown record {other:?}"))),
        }
    }
    if let Some(v) = seen.iter().position(|&s| !s) {
        return Err(GeometryError::Format(format!("vertex {v} missing")));
    }
    Graph::from_edges(dim, positions, &edges, tainted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_delaunay;
    use crate::pointproc::{sample_poisson, Window};

    #[test]
    fn round_trip() {
        let ps = sample_poisson(1.0, &Window::cube(2, 0.0, 8.0).unwrap(), 5).unwrap();
        let g = build_delaunay(&ps).unwrap().into_graph();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        assert_eq!(read_graph(&buf[..]).unwrap(), g);
    }

    #[test]
    fn malformed_input() {
        assert!(read_graph("graph 2 2\nv 0 0 0 0\n".as_bytes()).is_err());
        assert!(read_graph("graph 2 2\nv 0 0 0 0\nv 1 1 1 0\ne 1 0\n".as_bytes()).is_err());
        assert!(read_graph("graph 2 2\nv 0 0 0 0\nv 1 1 1 0\ne 0 1\n".as_bytes()).is_ok());
    }
}
