//! Network topology, shortest-path trees and the distributed setup protocols.
//!
//! Agents are indexed `0..m` in memory. Text formats and the CLI use the
//! 1-based identifiers `1..m`; [`Graph::parse_edge_list`] and
//! [`Graph::to_edge_list`] translate.

mod protocol;
mod spectral;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use protocol::{
    best_leader, distributed_bellman_ford, elect_leader, election_outcome, BestLeader,
    ShortestPathTree, TreeError,
};
pub use spectral::{communication_matrix, second_eigenvalue_magnitude, CommunicationMatrix};

/// Agent index, `0..m`.
pub type Agent = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("a graph needs at least one agent")]
    Empty,
    #[error("grid topology needs a perfect square agent count, got {0}")]
    NotSquare(usize),
    #[error("self-loop on agent {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references an agent outside 1..={2}")]
    OutOfRange(usize, usize, usize),
    #[error("graph is disconnected: agent {0} is unreachable from agent 1")]
    Disconnected(usize),
    #[error("custom topology needs an edge list")]
    MissingEdges,
    #[error("malformed edge list at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown topology `{0}`")]
    UnknownTopology(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Cycle,
    Grid,
    Star,
    Complete,
    Custom,
}

impl FromStr for TopologyKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cycle" => Ok(Self::Cycle),
            "grid" => Ok(Self::Grid),
            "star" => Ok(Self::Star),
            "complete" => Ok(Self::Complete),
            "custom" => Ok(Self::Custom),
            other => Err(GraphError::UnknownTopology(other.to_string())),
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Cycle => "cycle",
            Self::Grid => "grid",
            Self::Star => "star",
            Self::Complete => "complete",
            Self::Custom => "custom",
        };
        f.write_str(name)
    }
}

/// A connected, undirected, simple graph on agents `0..m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbours: Vec<Vec<Agent>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from 0-based edges. Duplicates and reversed copies are
    /// merged; self-loops and disconnected inputs are rejected.
    pub fn from_edges(m: usize, edges: &[(Agent, Agent)]) -> Result<Self, GraphError> {
        if m == 0 {
            return Err(GraphError::Empty);
        }
        let mut sets = vec![BTreeSet::new(); m];
        for &(v, w) in edges {
            if v >= m || w >= m {
                return Err(GraphError::OutOfRange(v + 1, w + 1, m));
            }
            if v == w {
                return Err(GraphError::SelfLoop(v + 1));
            }
            sets[v].insert(w);
            sets[w].insert(v);
        }
        let neighbours: Vec<Vec<Agent>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = neighbours.iter().map(Vec::len).sum::<usize>() / 2;
        let graph = Self {
            neighbours,
            edge_count,
        };
        if let Some(unreached) = graph.bfs_distances(0).iter().position(Option::is_none) {
            return Err(GraphError::Disconnected(unreached + 1));
        }
        Ok(graph)
    }

    /// Parses the edge-list text format: first line `m`, then one `v w` pair
    /// per line with 1-based ids. Blank lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            reason: "missing agent count".into(),
        })?;
        let m: usize = header.parse().map_err(|_| GraphError::Parse {
            line: first,
            reason: format!("expected agent count, found `{header}`"),
        })?;
        let mut edges = Vec::new();
        for (line, content) in lines {
            let ids: Vec<&str> = content.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| GraphError::Parse {
                    line,
                    reason: format!("expected agent id, found `{s}`"),
                })
            };
            if ids.len() != 2 {
                return Err(GraphError::Parse {
                    line,
                    reason: format!("expected two ids, found {}", ids.len()),
                });
            }
            let (v, w) = (parse(ids[0])?, parse(ids[1])?);
            if v == 0 || w == 0 || v > m || w > m {
                return Err(GraphError::OutOfRange(v, w, m));
            }
            edges.push((v - 1, w - 1));
        }
        Self::from_edges(m, &edges)
    }

    /// Renders the graph in the edge-list text format (each edge once, `v < w`).
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.m());
        for (v, w) in self.edges() {
            out.push_str(&format!("{} {}\n", v + 1, w + 1));
        }
        out
    }

    pub fn m(&self) -> usize {
        self.neighbours.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Neighbours of `v` in increasing order.
    pub fn neighbours(&self, v: Agent) -> &[Agent] {
        &self.neighbours[v]
    }

    pub fn degree(&self, v: Agent) -> usize {
        self.neighbours[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbours.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, v: Agent, w: Agent) -> bool {
        self.neighbours[v].binary_search(&w).is_ok()
    }

    /// Each undirected edge once, as `(v, w)` with `v < w`.
    pub fn edges(&self) -> impl Iterator<Item = (Agent, Agent)> + '_ {
        self.neighbours
            .iter()
            .enumerate()
            .flat_map(|(v, ns)| ns.iter().filter(move |&&w| w > v).map(move |&w| (v, w)))
    }

    /// Hop distances from `source`; `None` for unreachable agents.
    fn bfs_distances(&self, source: Agent) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.m()];
        let mut queue = VecDeque::from([source]);
        dist[source] = Some(0);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap_or(0);
            for &w in &self.neighbours[v] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Builds one of the named topologies. Star's centre is agent 0 (id 1); grid
/// is the row-major `√m × √m` lattice with 4-neighbour adjacency.
pub fn make_topology(
    kind: TopologyKind,
    m: usize,
    custom_edges: Option<&[(Agent, Agent)]>,
) -> Result<Graph, GraphError> {
    if m == 0 {
        return Err(GraphError::Empty);
    }
    let edges: Vec<(Agent, Agent)> = match kind {
        TopologyKind::Cycle => match m {
            1 => vec![],
            2 => vec![(0, 1)],
            _ => (0..m).map(|i| (i, (i + 1) % m)).collect(),
        },
        TopologyKind::Grid => {
            let side = (m as f64).sqrt().round() as usize;
            if side * side != m {
                return Err(GraphError::NotSquare(m));
            }
            let mut edges = Vec::with_capacity(2 * m);
            for r in 0..side {
                for c in 0..side {
                    let v = r * side + c;
                    if c + 1 < side {
                        edges.push((v, v + 1));
                    }
                    if r + 1 < side {
                        edges.push((v, v + side));
                    }
                }
            }
            edges
        }
        TopologyKind::Star => (1..m).map(|w| (0, w)).collect(),
        TopologyKind::Complete => (0..m)
            .flat_map(|v| (v + 1..m).map(move |w| (v, w)))
            .collect(),
        TopologyKind::Custom => custom_edges.ok_or(GraphError::MissingEdges)?.to_vec(),
    };
    Graph::from_edges(m, &edges)
}

/// Exact hop distances from `source` (breadth-first search).
pub fn bfs_distances(g: &Graph, source: Agent) -> Vec<usize> {
    g.bfs_distances(source)
        .into_iter()
        .map(|d| d.expect("graph invariant: connected"))
        .collect()
}

/// Sum of hop distances from `v` to every agent.
pub fn sum_of_distances(g: &Graph, v: Agent) -> usize {
    bfs_distances(g, v).iter().sum()
}

/// Largest hop distance between any two agents.
pub fn diameter(g: &Graph) -> usize {
    (0..g.m())
        .map(|v| bfs_distances(g, v).into_iter().max().unwrap_or(0))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_degrees() {
        let g = make_topology(TopologyKind::Star, 9, None).unwrap();
        assert_eq!(g.degree(0), 8);
        assert!((1..9).all(|w| g.degree(w) == 1));
    }

    #[test]
    fn grid_three_by_three() {
        let g = make_topology(TopologyKind::Grid, 9, None).unwrap();
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.degree(4), 4);
        for corner in [0, 2, 6, 8] {
            assert_eq!(g.degree(corner), 2);
        }
        assert_eq!(
            make_topology(TopologyKind::Grid, 10, None),
            Err(GraphError::NotSquare(10))
        );
    }

    #[test]
    fn small_cycles() {
        assert_eq!(make_topology(TopologyKind::Cycle, 1, None).unwrap().edge_count(), 0);
        assert_eq!(make_topology(TopologyKind::Cycle, 2, None).unwrap().edge_count(), 1);
        assert_eq!(make_topology(TopologyKind::Cycle, 6, None).unwrap().edge_count(), 6);
    }

    #[test]
    fn custom_edges_validated() {
        let bad = make_topology(TopologyKind::Custom, 3, Some(&[(0, 0), (1, 2)]));
        assert_eq!(bad, Err(GraphError::SelfLoop(1)));
        let split = make_topology(TopologyKind::Custom, 4, Some(&[(0, 1), (2, 3)]));
        assert_eq!(split, Err(GraphError::Disconnected(3)));
        assert_eq!(
            make_topology(TopologyKind::Custom, 3, None),
            Err(GraphError::MissingEdges)
        );
    }

    #[test]
    fn bfs_examples() {
        let cycle = make_topology(TopologyKind::Cycle, 6, None).unwrap();
        assert_eq!(bfs_distances(&cycle, 0), vec![0, 1, 2, 3, 2, 1]);
        let star = make_topology(TopologyKind::Star, 5, None).unwrap();
        assert_eq!(bfs_distances(&star, 0), vec![0, 1, 1, 1, 1]);
        let complete = make_topology(TopologyKind::Complete, 4, None).unwrap();
        assert_eq!(bfs_distances(&complete, 1), vec![1, 0, 1, 1]);
    }

    #[test]
    fn diameters() {
        assert_eq!(diameter(&make_topology(TopologyKind::Complete, 5, None).unwrap()), 1);
        assert_eq!(diameter(&make_topology(TopologyKind::Cycle, 6, None).unwrap()), 3);
        assert_eq!(diameter(&make_topology(TopologyKind::Star, 20, None).unwrap()), 2);
        assert_eq!(diameter(&make_topology(TopologyKind::Star, 1, None).unwrap()), 0);
    }

    #[test]
    fn edge_list_format() {
        let text = "4\n1 2\n2 1\n2 3 # chain\n\n3 4\n3 4\n";
        let g = Graph::parse_edge_list(text).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.to_edge_list(), "4\n1 2\n2 3\n3 4\n");
        assert!(matches!(
            Graph::parse_edge_list("3\n1 2 3\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert_eq!(
            Graph::parse_edge_list("3\n1 4\n"),
            Err(GraphError::OutOfRange(1, 4, 3))
        );
        assert_eq!(Graph::parse_edge_list("2\n1 1\n"), Err(GraphError::SelfLoop(1)));
    }
}
