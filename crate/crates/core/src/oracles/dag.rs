//! Source-to-sink paths in a DAG; items are edge-indicator vectors.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dag {
    n_nodes: usize,
    edges: Vec<(usize, usize)>,
    source: usize,
    sink: usize,
    topo: Vec<usize>,
    out_edges: Vec<Vec<usize>>,
}

impl Dag {
    /// Edge `e` of `edges` is coordinate `e` of the item vectors.
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize)>, source: usize, sink: usize) -> Result<Self> {
        if source >= n_nodes || sink >= n_nodes {
            return Err(Error::InvalidArgument("source or sink out of range".into()));
        }
        let mut out_edges = vec![Vec::new(); n_nodes];
        let mut indeg = vec![0usize; n_nodes];
        for (e, &(u, v)) in edges.iter().enumerate() {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidArgument(format!("edge {e} references a missing node")));
            }
            out_edges[u].push(e);
            indeg[v] += 1;
        }
        // Kahn's algorithm, smallest node first for a canonical order
        let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..n_nodes)
            .filter(|&v| indeg[v] == 0)
            .map(std::cmp::Reverse)
            .collect();
        let mut topo = Vec::with_capacity(n_nodes);
        while let Some(std::cmp::Reverse(u)) = ready.pop() {
            topo.push(u);
            for &e in &out_edges[u] {
                let v = edges[e].1;
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.push(std::cmp::Reverse(v));
                }
            }
        }
        if topo.len() != n_nodes {
            return Err(Error::InfeasibleStructure("graph has a cycle".into()));
        }
        let dag = Self {
            n_nodes,
            edges,
            source,
            sink,
            topo,
            out_edges,
        };
        if !dag.reaches_sink() {
            return Err(Error::InfeasibleStructure("sink unreachable from source".into()));
        }
        Ok(dag)
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    fn reaches_sink(&self) -> bool {
        self.best_to_sink(&vec![0.0; self.edges.len()])[self.source].is_finite()
    }

    fn best_to_sink(&self, w: &[f64]) -> Vec<f64> {
        let mut best = vec![f64::NEG_INFINITY; self.n_nodes];
        best[self.sink] = 0.0;
        for &u in self.topo.iter().rev() {
            if u == self.sink {
                continue;
            }
            for &e in &self.out_edges[u] {
                let cand = w[e] + best[self.edges[e].1];
                if cand > best[u] {
                    best[u] = cand;
                }
            }
        }
        best
    }

    /// Maximum-reward path as sorted edge ids. Walking from the source, the
    /// lowest-id optimal edge is taken at every node.
    pub fn longest_path(&self, w: &[f64]) -> Result<Vec<usize>> {
        let best = self.best_to_sink(w);
        if !best[self.source].is_finite() {
            return Err(Error::InfeasibleStructure("sink unreachable from source".into()));
        }
        let mut path = Vec::new();
        let mut u = self.source;
        while u != self.sink {
            let mut pick: Option<(usize, f64)> = None;
            for &e in &self.out_edges[u] {
                let val = w[e] + best[self.edges[e].1];
                match pick {
                    Some((pe, pv)) if val < pv || (val == pv && e > pe) => {}
                    _ => pick = Some((e, val)),
                }
            }
            let (e, _) = pick.ok_or_else(|| Error::Oracle("dead end on optimal path".into()))?;
            path.push(e);
            u = self.edges[e].1;
        }
        path.sort_unstable();
        Ok(path)
    }

    /// All source-sink paths (sorted edge ids), up to `limit`.
    pub fn enumerate_paths(&self, limit: usize) -> Result<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.dfs(self.source, &mut stack, &mut out, limit)?;
        Ok(out)
    }

    fn dfs(&self, u: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) -> Result<()> {
        if u == self.sink {
            if out.len() >= limit {
                return Err(Error::InvalidArgument(format!("more than {limit} paths")));
            }
            let mut p = stack.clone();
            p.sort_unstable();
            out.push(p);
            return Ok(());
        }
        for &e in &self.out_edges[u] {
            stack.push(e);
            self.dfs(self.edges[e].1, stack, out, limit)?;
            stack.pop();
        }
        Ok(())
    }
}
