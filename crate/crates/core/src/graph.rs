//! Cut problems: edge-list parsing, the Ising encoding, and a brute-force
//! oracle for small graphs.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OccupationState, ProblemInstance};

/// Undirected weighted graph with edges stored as `(u, v, w)`, `u < v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for &(u, v, w) in &edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {u}")));
            }
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for {n_vertices} vertices"
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({u}, {v})")));
            }
        }
        let edges = edges
            .into_iter()
            .map(|(u, v, w)| (u.min(v), u.max(v), w))
            .collect();
        Ok(Self { n_vertices, edges })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|&(_, _, w)| w).sum()
    }
}

/// Parse a whitespace-separated edge list: one `u v [weight]` per line,
/// `#` starts a comment, blank lines are ignored, vertex ids are 0-based,
/// and a missing weight defaults to 1.0.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = HashSet::new();
    let mut max_vertex: Option<usize> = None;
    for (line_idx, raw) in text.lines().enumerate() {
        let line = line_idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::GraphParse {
                line,
                msg: format!("expected 'u v [weight]', got {} fields", fields.len()),
            });
        }
        let u: usize = fields[0].parse().map_err(|_| Error::GraphParse {
            line,
            msg: format!("bad vertex id '{}'", fields[0]),
        })?;
        let v: usize = fields[1].parse().map_err(|_| Error::GraphParse {
            line,
            msg: format!("bad vertex id '{}'", fields[1]),
        })?;
        let w: f64 = match fields.get(2) {
            Some(s) => s.parse().map_err(|_| Error::GraphParse {
                line,
                msg: format!("bad weight '{s}'"),
            })?,
            None => 1.0,
        };
        if u == v {
            return Err(Error::GraphParse {
                line,
                msg: format!("self-loop at vertex {u}"),
            });
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::GraphParse {
                line,
                msg: format!("non-positive weight {w}"),
            });
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(Error::GraphParse {
                line,
                msg: format!("duplicate edge ({u}, {v})"),
            });
        }
        edges.push((key.0, key.1, w));
        max_vertex = Some(max_vertex.map_or(u.max(v), |m| m.max(u.max(v))));
    }
    let n_vertices = max_vertex.map_or(0, |m| m + 1);
    Ok(Graph { n_vertices, edges })
}

/// Inverse of `parse_edge_list` for valid graphs.
pub fn serialize_edge_list(graph: &Graph) -> String {
    let mut out = String::new();
    for &(u, v, w) in &graph.edges {
        let _ = writeln!(out, "{u} {v} {w}");
    }
    out
}

/// Encode a cut problem: `J_uv = +w_uv`, so cut edges prefer opposite
/// signs; `lambda_bias` optionally breaks the global flip symmetry.
pub fn maxcut_instance(graph: &Graph, n: u32, lambda_bias: f64) -> Result<ProblemInstance> {
    let m = graph.n_vertices;
    if m < 1 {
        return Err(Error::InvalidParameter(
            "cut encoding needs at least one vertex".into(),
        ));
    }
    let mut j = vec![0.0; m * m];
    for &(u, v, w) in &graph.edges {
        j[u * m + v] = w;
        j[v * m + u] = w;
    }
    ProblemInstance::from_flat(m, j, n, lambda_bias)
}

/// Cut weight of a sign assignment: `sum_edges w (1 - s_u s_v) / 2`.
pub fn cut_value(graph: &Graph, signs: &[i8]) -> Result<f64> {
    if signs.len() != graph.n_vertices {
        return Err(Error::DimensionMismatch(format!(
            "{} signs for {} vertices",
            signs.len(),
            graph.n_vertices
        )));
    }
    if let Some(pos) = signs.iter().position(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidParameter(format!(
            "sign at vertex {pos} must be +1 or -1"
        )));
    }
    Ok(graph
        .edges
        .iter()
        .map(|&(u, v, w)| w * f64::from(1 - signs[u] * signs[v]) / 2.0)
        .sum())
}

/// Exhaustive optimum over all `2^(n-1)` sign patterns (vertex 0 fixed +1).
pub fn brute_force_maxcut(graph: &Graph) -> Result<(f64, Vec<i8>)> {
    let n = graph.n_vertices;
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    if n > 20 {
        return Err(Error::InvalidParameter(format!(
            "brute force capped at 20 vertices, got {n}"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    let mut witness = vec![1i8; n];
    let mut signs = vec![1i8; n];
    for mask in 0u64..(1u64 << (n - 1)) {
        for (i, s) in signs.iter_mut().enumerate().skip(1) {
            *s = if mask >> (i - 1) & 1 == 1 { -1 } else { 1 };
        }
        let value = cut_value(graph, &signs)?;
        if value > best {
            best = value;
            witness.copy_from_slice(&signs);
        }
    }
    Ok((best, witness))
}

/// Sign readout of an occupation state, canonicalized so vertex 0 is +1;
/// zero spins resolve to +1 before the flip.
pub fn readout_signs(state: &OccupationState, n: u32) -> Vec<i8> {
    let mut signs: Vec<i8> = state
        .sign_pattern(n)
        .into_iter()
        .map(|s| if s == 0 { 1 } else { s })
        .collect();
    if signs.first() == Some(&-1) {
        for s in &mut signs {
            *s = -*s;
        }
    }
    signs
}
