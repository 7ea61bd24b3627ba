//! Undirected multigraphs given as 0-based edge lists.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(num_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= num_vertices || v >= num_vertices {
                return Err(Error::Domain(format!(
                    "edge {i} = ({u}, {v}) references a vertex outside 0..{num_vertices}"
                )));
            }
        }
        Ok(Self { num_vertices, edges })
    }

    /// Vertex count is one past the largest endpoint.
    pub fn from_edges(edges: Vec<(usize, usize)>) -> Self {
        let n = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
        Self { num_vertices: n, edges }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self { num_vertices: n, edges }
    }

    pub fn cycle(n: usize) -> Self {
        let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self { num_vertices: n, edges }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|&(u, v)| u == v)
    }

    /// Rank of the edge subset in the cycle matroid: `|V| - #components`.
    pub fn rank_of(&self, chosen: impl Iterator<Item = usize>) -> usize {
        let mut uf = UnionFind::new(self.num_vertices);
        let mut rank = 0;
        for e in chosen {
            let (u, v) = self.edges[e];
            if uf.union(u, v) {
                rank += 1;
            }
        }
        rank
    }

    pub fn rank(&self) -> usize {
        self.rank_of(0..self.edges.len())
    }

    pub fn is_connected(&self) -> bool {
        self.num_vertices <= 1 || self.rank() == self.num_vertices - 1
    }

    /// Edge ids partitioned into 2-connected blocks (bridges form their own
    /// block, parallel edges share one). Loops are returned as singleton blocks.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices;
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut blocks = Vec::new();
        for (id, &(u, v)) in self.edges.iter().enumerate() {
            if u == v {
                blocks.push(vec![id]);
            } else {
                adj[u].push((v, id));
                adj[v].push((u, id));
            }
        }

        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0;
        let mut edge_stack: Vec<usize> = Vec::new();

        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            // (vertex, edge id used to reach it, next adjacency index)
            let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
            while let Some(frame) = stack.last_mut() {
                let (v, parent_edge, idx) = *frame;
                if idx < adj[v].len() {
                    frame.2 += 1;
                    let (w, id) = adj[v][idx];
                    if id == parent_edge {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        edge_stack.push(id);
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, id, 0));
                    } else if disc[w] < disc[v] {
                        edge_stack.push(id);
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[v]);
                        if low[v] >= disc[p] {
                            let mut block = Vec::new();
                            while let Some(id) = edge_stack.pop() {
                                block.push(id);
                                if id == parent_edge {
                                    break;
                                }
                            }
                            block.sort_unstable();
                            blocks.push(block);
                        }
                    }
                }
            }
        }
        blocks.sort();
        blocks
    }

    /// Vertices touched by the given edges, sorted.
    pub fn vertices_of(&self, edge_ids: &[usize]) -> Vec<usize> {
        let mut vs: Vec<usize> = edge_ids
            .iter()
            .flat_map(|&e| [self.edges[e].0, self.edges[e].1])
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }
}

#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` if the two were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}
