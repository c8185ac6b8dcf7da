//! Network topology as a symmetric adjacency bit matrix over numbered nodes.
//!
//! Edge ordinals are the 1-based rank of a neighbor within a node's adjacency
//! row, ordered by node id. `index_edge` and `index_vertex` are the rank and
//! select halves of that bijection; everything the caching layer stores is an
//! ordinal produced here.

use std::collections::BTreeMap;
use std::fmt;

/// 1-based stable node identifier. Ids are never reused after a removal
/// within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(id: u32) -> NodeId {
        debug_assert!(id >= 1, "node ids start at 1");
        NodeId(id)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    fn index(self) -> usize {
        (self.0 - 1) as usize
    }

    fn from_index(idx: usize) -> NodeId {
        NodeId(idx as u32 + 1)
    }
}

impl From<u32> for NodeId {
    fn from(id: u32) -> NodeId {
        NodeId::new(id)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    SelfLoop { id: u32 },
    IdOutOfRange { id: u32, node_count: u32 },
    DuplicateEdge { a: u32, b: u32 },
    WeightCountMismatch { edges: usize, weights: usize },
    NonPositiveWeight { a: u32, b: u32, weight: f64 },
    DeadNode { id: u32 },
    NotAdjacent { a: u32, b: u32 },
    OrdinalOutOfRange { id: u32, ordinal: u32, degree: u32 },
    NonContiguousId { id: u32, expected: u32 },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::SelfLoop { id } => write!(f, "self-loop on node {id}"),
            GraphError::IdOutOfRange { id, node_count } => {
                write!(f, "node id {id} out of range 1..={node_count}")
            }
            GraphError::DuplicateEdge { a, b } => write!(f, "duplicate edge {a}-{b}"),
            GraphError::WeightCountMismatch { edges, weights } => {
                write!(f, "{weights} weights for {edges} edges")
            }
            GraphError::NonPositiveWeight { a, b, weight } => {
                write!(f, "edge {a}-{b} has non-positive weight {weight}")
            }
            GraphError::DeadNode { id } => write!(f, "node {id} is not alive"),
            GraphError::NotAdjacent { a, b } => write!(f, "nodes {a} and {b} are not adjacent"),
            GraphError::OrdinalOutOfRange { id, ordinal, degree } => {
                write!(f, "edge ordinal {ordinal} out of range at node {id} (degree {degree})")
            }
            GraphError::NonContiguousId { id, expected } => {
                write!(f, "new node id must be {expected}, got {id}")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// Square bit matrix with per-row rank/select. Rows grow together.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    n: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn new(n: usize) -> BitMatrix {
        let words_per_row = n.div_ceil(64).max(1);
        BitMatrix { n, words_per_row, words: vec![0; n * words_per_row] }
    }

    fn get(&self, row: usize, col: usize) -> bool {
        let w = self.words[row * self.words_per_row + col / 64];
        w >> (col % 64) & 1 == 1
    }

    fn set(&mut self, row: usize, col: usize, value: bool) {
        let w = &mut self.words[row * self.words_per_row + col / 64];
        if value {
            *w |= 1 << (col % 64);
        } else {
            *w &= !(1 << (col % 64));
        }
    }

    fn row(&self, row: usize) -> &[u64] {
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    /// Number of set cells in `row` at columns <= col.
    fn rank(&self, row: usize, col: usize) -> u32 {
        let r = self.row(row);
        let word = col / 64;
        let mut count = 0;
        for w in &r[..word] {
            count += w.count_ones();
        }
        let keep = col % 64 + 1; // columns within the last word, inclusive
        let mask = if keep == 64 { u64::MAX } else { (1u64 << keep) - 1 };
        count + (r[word] & mask).count_ones()
    }

    /// Column of the k-th (1-based) set cell in `row`, plus the number of
    /// cells a left-to-right scan examines to reach it.
    fn select(&self, row: usize, k: u32) -> Option<(usize, u32)> {
        let mut remaining = k;
        for (wi, &w) in self.row(row).iter().enumerate() {
            let ones = w.count_ones();
            if ones < remaining {
                remaining -= ones;
                continue;
            }
            let mut bits = w;
            for _ in 1..remaining {
                bits &= bits - 1; // drop lowest set bit
            }
            let col = wi * 64 + bits.trailing_zeros() as usize;
            return Some((col, col as u32 + 1));
        }
        None
    }

    fn row_ones(&self, row: usize) -> u32 {
        self.row(row).iter().map(|w| w.count_ones()).sum()
    }

    fn clear_row(&mut self, row: usize) {
        self.words[row * self.words_per_row..(row + 1) * self.words_per_row].fill(0);
    }

    fn grow(&mut self, new_n: usize) {
        debug_assert!(new_n >= self.n);
        let new_wpr = new_n.div_ceil(64).max(1);
        let mut words = vec![0; new_n * new_wpr];
        for r in 0..self.n {
            words[r * new_wpr..r * new_wpr + self.words_per_row].copy_from_slice(self.row(r));
        }
        self.n = new_n;
        self.words_per_row = new_wpr;
        self.words = words;
    }
}

/// Undirected network topology: adjacency bit matrix, per-node alive flags,
/// positive edge weights (unit by default). Dead nodes keep their id; their
/// row and column are cleared.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: BitMatrix,
    alive: Vec<bool>,
    weights: BTreeMap<(u32, u32), f64>,
}

fn weight_key(a: NodeId, b: NodeId) -> (u32, u32) {
    let (a, b) = (a.get(), b.get());
    if a <= b { (a, b) } else { (b, a) }
}

impl Graph {
    /// Builds a graph with unit edge weights.
    pub fn build(node_count: u32, edges: &[(u32, u32)]) -> Result<Graph, GraphError> {
        Self::build_inner(node_count, edges, None)
    }

    /// Builds a graph with one positive weight per edge, in edge order.
    pub fn build_weighted(
        node_count: u32,
        edges: &[(u32, u32)],
        weights: &[f64],
    ) -> Result<Graph, GraphError> {
        if weights.len() != edges.len() {
            return Err(GraphError::WeightCountMismatch {
                edges: edges.len(),
                weights: weights.len(),
            });
        }
        Self::build_inner(node_count, edges, Some(weights))
    }

    fn build_inner(
        node_count: u32,
        edges: &[(u32, u32)],
        weights: Option<&[f64]>,
    ) -> Result<Graph, GraphError> {
        let n = node_count as usize;
        let mut g = Graph {
            adjacency: BitMatrix::new(n),
            alive: vec![true; n],
            weights: BTreeMap::new(),
        };
        for (idx, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(GraphError::SelfLoop { id: a });
            }
            for id in [a, b] {
                if id < 1 || id > node_count {
                    return Err(GraphError::IdOutOfRange { id, node_count });
                }
            }
            let (na, nb) = (NodeId::new(a), NodeId::new(b));
            if g.adjacency.get(na.index(), nb.index()) {
                return Err(GraphError::DuplicateEdge { a, b });
            }
            let w = weights.map_or(1.0, |ws| ws[idx]);
            if !w.is_finite() || w <= 0.0 {
                return Err(GraphError::NonPositiveWeight { a, b, weight: w });
            }
            g.adjacency.set(na.index(), nb.index(), true);
            g.adjacency.set(nb.index(), na.index(), true);
            g.weights.insert(weight_key(na, nb), w);
        }
        Ok(g)
    }

    /// Total ids ever issued, dead nodes included.
    pub fn node_count(&self) -> u32 {
        self.alive.len() as u32
    }

    pub fn alive_count(&self) -> u32 {
        self.alive.iter().filter(|&&a| a).count() as u32
    }

    pub fn is_alive(&self, v: NodeId) -> bool {
        self.contains(v) && self.alive[v.index()]
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.get() >= 1 && v.get() <= self.node_count()
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| NodeId::from_index(i))
    }

    fn check_alive(&self, v: NodeId) -> Result<(), GraphError> {
        if !self.contains(v) {
            return Err(GraphError::IdOutOfRange { id: v.get(), node_count: self.node_count() });
        }
        if !self.alive[v.index()] {
            return Err(GraphError::DeadNode { id: v.get() });
        }
        Ok(())
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.contains(a) && self.contains(b) && self.adjacency.get(a.index(), b.index())
    }

    pub fn degree(&self, v: NodeId) -> u32 {
        if !self.contains(v) {
            return 0;
        }
        self.adjacency.row_ones(v.index())
    }

    /// Largest degree over alive nodes.
    pub fn max_degree(&self) -> u32 {
        self.alive_nodes().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Alive neighbors in strictly increasing id order. This order defines
    /// edge ordinals.
    pub fn neighbors(&self, v: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.check_alive(v)?;
        let row = v.index();
        Ok((0..self.alive.len())
            .filter(|&c| self.adjacency.get(row, c))
            .map(NodeId::from_index)
            .collect())
    }

    /// Edge ordinal of `j` at `i`: the 1-based rank of `j` among the alive
    /// neighbors of `i`.
    pub fn index_edge(&self, i: NodeId, j: NodeId) -> Result<u32, GraphError> {
        self.check_alive(i)?;
        self.check_alive(j)?;
        if !self.adjacency.get(i.index(), j.index()) {
            return Err(GraphError::NotAdjacent { a: i.get(), b: j.get() });
        }
        Ok(self.adjacency.rank(i.index(), j.index()))
    }

    /// Neighbor of `i` reached over its `k`-th edge.
    pub fn index_vertex(&self, i: NodeId, k: u32) -> Result<NodeId, GraphError> {
        self.index_vertex_counted(i, k).map(|(v, _)| v)
    }

    /// Like [`Graph::index_vertex`], also reporting how many row cells the
    /// ordinal scan examined before stopping.
    pub fn index_vertex_counted(&self, i: NodeId, k: u32) -> Result<(NodeId, u32), GraphError> {
        self.check_alive(i)?;
        let degree = self.degree(i);
        if k < 1 || k > degree {
            return Err(GraphError::OrdinalOutOfRange { id: i.get(), ordinal: k, degree });
        }
        let (col, comparisons) = self
            .adjacency
            .select(i.index(), k)
            .expect("ordinal within degree");
        Ok((NodeId::from_index(col), comparisons))
    }

    /// Marks `v` dead and clears its row and column. Returns the former
    /// neighbors so callers can invalidate caches whose ordinals shifted.
    pub fn remove_node(&mut self, v: NodeId) -> Result<Vec<NodeId>, GraphError> {
        self.check_alive(v)?;
        let former = self.neighbors(v)?;
        self.adjacency.clear_row(v.index());
        for u in &former {
            self.adjacency.set(u.index(), v.index(), false);
        }
        self.weights.retain(|&(a, b), _| a != v.get() && b != v.get());
        self.alive[v.index()] = false;
        Ok(former)
    }

    /// Adds node `node_count + 1` with unit-weight edges to `neighbors`.
    pub fn add_node(&mut self, id: u32, neighbors: &[u32]) -> Result<NodeId, GraphError> {
        let expected = self.node_count() + 1;
        if id != expected {
            return Err(GraphError::NonContiguousId { id, expected });
        }
        let mut seen = Vec::with_capacity(neighbors.len());
        for &u in neighbors {
            if u == id {
                return Err(GraphError::SelfLoop { id });
            }
            if u < 1 || u > self.node_count() {
                return Err(GraphError::IdOutOfRange { id: u, node_count: self.node_count() });
            }
            self.check_alive(NodeId::new(u))?;
            if seen.contains(&u) {
                return Err(GraphError::DuplicateEdge { a: id, b: u });
            }
            seen.push(u);
        }
        let n = expected as usize;
        self.adjacency.grow(n);
        self.alive.push(true);
        let v = NodeId::new(id);
        for &u in neighbors {
            let u = NodeId::new(u);
            self.adjacency.set(v.index(), u.index(), true);
            self.adjacency.set(u.index(), v.index(), true);
            self.weights.insert(weight_key(v, u), 1.0);
        }
        Ok(v)
    }

    /// Weight of the edge between `a` and `b`, if adjacent.
    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<f64> {
        if !self.are_adjacent(a, b) {
            return None;
        }
        self.weights.get(&weight_key(a, b)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Five-node desk fixture: edges 1-3, 1-4, 2-4, 3-5, 4-5.
    pub(crate) fn desk() -> Graph {
        Graph::build(5, &[(1, 3), (1, 4), (2, 4), (3, 5), (4, 5)]).unwrap()
    }

    fn n(id: u32) -> NodeId {
        NodeId::new(id)
    }

    #[test]
    fn desk_fixture_shape() {
        let g = desk();
        assert_eq!(g.node_count(), 5);
        assert_eq!(g.neighbors(n(1)).unwrap(), vec![n(3), n(4)]);
        assert_eq!(g.neighbors(n(4)).unwrap(), vec![n(1), n(2), n(5)]);
        assert_eq!(g.degree(n(2)), 1);
        assert_eq!(g.max_degree(), 3);
        // second set bit of row 1 sits at column 4
        assert_eq!(g.index_vertex_counted(n(1), 2).unwrap(), (n(4), 4));
    }

    #[test]
    fn single_node_graph() {
        let g = Graph::build(1, &[]).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.neighbors(n(1)).unwrap(), vec![]);
        assert_eq!(g.degree(n(1)), 0);
    }

    #[test]
    fn two_node_symmetry() {
        let g = Graph::build(2, &[(1, 2)]).unwrap();
        assert!(g.are_adjacent(n(1), n(2)));
        assert!(g.are_adjacent(n(2), n(1)));
        assert_eq!(g.index_edge(n(1), n(2)).unwrap(), 1);
        assert_eq!(g.index_edge(n(2), n(1)).unwrap(), 1);
    }

    #[test]
    fn build_rejections() {
        assert_eq!(
            Graph::build(3, &[(2, 2)]).unwrap_err(),
            GraphError::SelfLoop { id: 2 }
        );
        assert_eq!(
            Graph::build(3, &[(1, 4)]).unwrap_err(),
            GraphError::IdOutOfRange { id: 4, node_count: 3 }
        );
        assert_eq!(
            Graph::build(3, &[(1, 2), (2, 1)]).unwrap_err(),
            GraphError::DuplicateEdge { a: 2, b: 1 }
        );
        assert_eq!(
            Graph::build_weighted(2, &[(1, 2)], &[]).unwrap_err(),
            GraphError::WeightCountMismatch { edges: 1, weights: 0 }
        );
        assert_eq!(
            Graph::build_weighted(2, &[(1, 2)], &[0.0]).unwrap_err(),
            GraphError::NonPositiveWeight { a: 1, b: 2, weight: 0.0 }
        );
    }

    #[test]
    fn desk_edge_ordinals() {
        let g = desk();
        assert_eq!(g.index_edge(n(1), n(4)).unwrap(), 2);
        assert_eq!(g.index_edge(n(1), n(3)).unwrap(), 1);
        assert_eq!(g.index_edge(n(4), n(2)).unwrap(), 2);
        assert_eq!(g.index_edge(n(2), n(4)).unwrap(), 1);
        assert_eq!(
            g.index_edge(n(1), n(2)).unwrap_err(),
            GraphError::NotAdjacent { a: 1, b: 2 }
        );
    }

    #[test]
    fn index_vertex_inverts_index_edge() {
        let g = desk();
        for i in 1..=5 {
            for j in 1..=5 {
                if g.are_adjacent(n(i), n(j)) {
                    let k = g.index_edge(n(i), n(j)).unwrap();
                    assert_eq!(g.index_vertex(n(i), k).unwrap(), n(j));
                }
            }
            let deg = g.degree(n(i));
            for k in 1..=deg {
                let j = g.index_vertex(n(i), k).unwrap();
                assert_eq!(g.index_edge(n(i), j).unwrap(), k);
            }
            assert!(g.index_vertex(n(i), deg + 1).is_err());
        }
    }

    #[test]
    fn ordinal_out_of_range_carries_degree() {
        let g = desk();
        assert_eq!(
            g.index_vertex(n(2), 2).unwrap_err(),
            GraphError::OrdinalOutOfRange { id: 2, ordinal: 2, degree: 1 }
        );
    }

    #[test]
    fn remove_node_clears_row_and_column() {
        let mut g = desk();
        let former = g.remove_node(n(4)).unwrap();
        assert_eq!(former, vec![n(1), n(2), n(5)]);
        assert!(!g.is_alive(n(4)));
        assert_eq!(g.neighbors(n(1)).unwrap(), vec![n(3)]);
        assert_eq!(g.neighbors(n(2)).unwrap(), vec![]);
        assert_eq!(g.weight(n(1), n(4)), None);
        assert_eq!(g.remove_node(n(4)).unwrap_err(), GraphError::DeadNode { id: 4 });
    }

    #[test]
    fn remove_node_preserves_other_adjacency() {
        let mut g = desk();
        g.remove_node(n(3)).unwrap();
        assert_eq!(g.neighbors(n(1)).unwrap(), vec![n(4)]);
        assert_eq!(g.neighbors(n(5)).unwrap(), vec![n(4)]);
        assert!(g.are_adjacent(n(4), n(5)));
        assert!(g.are_adjacent(n(2), n(4)));
    }

    #[test]
    fn remove_only_node() {
        let mut g = Graph::build(1, &[]).unwrap();
        assert_eq!(g.remove_node(n(1)).unwrap(), vec![]);
        assert_eq!(g.alive_count(), 0);
    }

    #[test]
    fn add_node_appends_and_connects() {
        let mut g = desk();
        let v = g.add_node(6, &[1, 5]).unwrap();
        assert_eq!(v, n(6));
        assert_eq!(g.node_count(), 6);
        assert_eq!(g.neighbors(n(6)).unwrap(), vec![n(1), n(5)]);
        assert_eq!(g.neighbors(n(1)).unwrap(), vec![n(3), n(4), n(6)]);
        assert_eq!(g.weight(n(1), n(6)), Some(1.0));
        // existing ordinals at 1 are unchanged, 6 ranks last
        assert_eq!(g.index_edge(n(1), n(6)).unwrap(), 3);
    }

    #[test]
    fn add_node_rejects_wrong_id_and_dead_neighbor() {
        let mut g = desk();
        assert_eq!(
            g.add_node(9, &[1]).unwrap_err(),
            GraphError::NonContiguousId { id: 9, expected: 6 }
        );
        g.remove_node(n(2)).unwrap();
        assert_eq!(g.add_node(6, &[2]).unwrap_err(), GraphError::DeadNode { id: 2 });
        assert_eq!(
            g.add_node(6, &[1, 1]).unwrap_err(),
            GraphError::DuplicateEdge { a: 6, b: 1 }
        );
    }

    #[test]
    fn ordinals_cover_degree_without_gaps() {
        // wide graph crossing the 64-bit word boundary
        let edges: Vec<(u32, u32)> = (2..=70).map(|j| (1, j)).collect();
        let g = Graph::build(70, &edges).unwrap();
        assert_eq!(g.degree(NodeId::new(1)), 69);
        for k in 1..=69 {
            let v = g.index_vertex(NodeId::new(1), k).unwrap();
            assert_eq!(g.index_edge(NodeId::new(1), v).unwrap(), k);
            assert_eq!(v.get(), k + 1);
        }
    }

    #[test]
    fn dead_node_queries_error() {
        let mut g = desk();
        g.remove_node(n(5)).unwrap();
        assert_eq!(g.neighbors(n(5)).unwrap_err(), GraphError::DeadNode { id: 5 });
        assert_eq!(g.index_edge(n(3), n(5)).unwrap_err(), GraphError::DeadNode { id: 5 });
    }
}
