//! Weighted graphs in the control eigenbasis and the Stoer–Wagner global
//! minimum cut.

use serde::{Deserialize, Serialize};

use crate::error::{QdistError, Result};

/// Undirected graph on `n` vertices with a dense symmetric weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set(i, j, f(i, j))?;
            }
        }
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if !(w.is_finite() && w >= 0.0) {
            return Err(QdistError::InvalidInput(format!("edge weight must be non-negative, got {w}")));
        }
        if i == j {
            return Ok(());
        }
        self.weights[i * self.n + j] = w;
        self.weights[j * self.n + i] = w;
        Ok(())
    }

    /// Total weight of edges crossing between `side` and its complement.
    pub fn cut_weight(&self, side: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if side[i] != side[j] {
                    total += self.weight(i, j);
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutResult {
    /// The two sides of the cut; the first always contains vertex 0.
    pub partition: (Vec<usize>, Vec<usize>),
    pub cut_weight: f64,
    /// Edges crossing the cut as `(i, j, weight)` with `i < j`, zero weights omitted.
    pub edges_removed: Vec<(usize, usize, f64)>,
}

impl CutResult {
    fn from_side(g: &WeightedGraph, side: &[bool]) -> Self {
        // orient so that vertex 0 is on the first side
        let flip = !side[0];
        let on_first = |v: usize| side[v] != flip;
        let first: Vec<usize> = (0..g.n).filter(|&v| on_first(v)).collect();
        let second: Vec<usize> = (0..g.n).filter(|&v| !on_first(v)).collect();
        let mut edges = Vec::new();
        let mut total = 0.0;
        for i in 0..g.n {
            for j in i + 1..g.n {
                if on_first(i) != on_first(j) {
                    let w = g.weight(i, j);
                    total += w;
                    if w > 0.0 {
                        edges.push((i, j, w));
                    }
                }
            }
        }
        Self {
            partition: (first, second),
            cut_weight: total,
            edges_removed: edges,
        }
    }
}

/// Global minimum cut by Stoer–Wagner: `n - 1` maximum-adjacency phases,
/// each ending in a cut-of-the-phase and a merge of the last two vertices.
/// `O(n³)` with the dense weight matrix.
pub fn stoer_wagner_min_cut(graph: &WeightedGraph) -> Result<CutResult> {
    let n = graph.n;
    if n < 2 {
        return Err(QdistError::InvalidInput(
            "minimum cut needs at least two vertices".into(),
        ));
    }
    let mut w = graph.weights.clone();
    // members[v]: original vertices merged into super-vertex v
    let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut alive: Vec<usize> = (0..n).collect();

    let mut best_weight = f64::INFINITY;
    let mut best_side: Vec<usize> = Vec::new();

    while alive.len() > 1 {
        let m = alive.len();
        let mut in_a = vec![false; n];
        let mut conn = vec![0.0f64; n];
        let mut prev = alive[0];
        let mut last = alive[0];
        in_a[last] = true;
        for &v in &alive {
            conn[v] = w[last * n + v];
        }
        for _step in 1..m {
            prev = last;
            // most tightly connected vertex; ties go to the lowest index
            let mut pick = usize::MAX;
            let mut pick_w = f64::NEG_INFINITY;
            for &v in &alive {
                if !in_a[v] && conn[v] > pick_w {
                    pick = v;
                    pick_w = conn[v];
                }
            }
            last = pick;
            in_a[last] = true;
            for &v in &alive {
                if !in_a[v] {
                    conn[v] += w[last * n + v];
                }
            }
        }
        let phase_cut = conn[last];
        if phase_cut < best_weight {
            best_weight = phase_cut;
            best_side = members[last].clone();
        }
        // merge `last` into `prev`
        for &v in &alive {
            if v != prev && v != last {
                w[prev * n + v] += w[last * n + v];
                w[v * n + prev] = w[prev * n + v];
            }
        }
        let moved = std::mem::take(&mut members[last]);
        members[prev].extend(moved);
        alive.retain(|&v| v != last);
    }

    let mut side = vec![false; n];
    for v in best_side {
        side[v] = true;
    }
    Ok(CutResult::from_side(graph, &side))
}
