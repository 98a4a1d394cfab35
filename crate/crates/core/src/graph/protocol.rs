//! Synchronous message-passing protocols run before the bandit interaction:
//! distributed Bellman-Ford, min-score leader election, and best-leader
//! selection by sum of shortest paths.
//!
//! Each protocol is executed round by round over per-agent mailboxes; an
//! agent only reads its own state, its neighbour list and what arrived in
//! its mailbox.

use std::cmp::Ordering;

use thiserror::Error;

use super::{bfs_distances, Agent, Graph};

/// Shortest-path (BFS) tree rooted at one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestPathTree {
    root: Agent,
    parent: Vec<Option<Agent>>,
    children: Vec<Vec<Agent>>,
    dist: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("root {0} has nonzero distance or a parent")]
    BadRoot(Agent),
    #[error("agent {0} has no parent")]
    Orphan(Agent),
    #[error("agent {agent}: parent {parent} is not a neighbour")]
    ParentNotAdjacent { agent: Agent, parent: Agent },
    #[error("agent {0}: distance is not one more than its parent's")]
    DistanceStep(Agent),
    #[error("agent {agent}: distance {got} differs from hop distance {expected}")]
    NotShortest {
        agent: Agent,
        got: usize,
        expected: usize,
    },
    #[error("children of agent {0} disagree with parent pointers")]
    ChildrenMismatch(Agent),
}

impl ShortestPathTree {
    pub fn root(&self) -> Agent {
        self.root
    }

    pub fn parent(&self, w: Agent) -> Option<Agent> {
        self.parent[w]
    }

    pub fn children(&self, w: Agent) -> &[Agent] {
        &self.children[w]
    }

    /// Hop distance from the root to `w`.
    pub fn dist(&self, w: Agent) -> usize {
        self.dist[w]
    }

    pub fn distances(&self) -> &[usize] {
        &self.dist
    }

    pub fn m(&self) -> usize {
        self.dist.len()
    }

    /// `Σ_w d(root, w)`.
    pub fn sum_of_distances(&self) -> usize {
        self.dist.iter().sum()
    }

    pub fn depth(&self) -> usize {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    /// Checks the structural invariants against `g`.
    pub fn validate(&self, g: &Graph) -> Result<(), TreeError> {
        let root = self.root;
        if self.dist[root] != 0 || self.parent[root].is_some() {
            return Err(TreeError::BadRoot(root));
        }
        let oracle = bfs_distances(g, root);
        for w in 0..self.m() {
            if self.dist[w] != oracle[w] {
                return Err(TreeError::NotShortest {
                    agent: w,
                    got: self.dist[w],
                    expected: oracle[w],
                });
            }
            if w == root {
                continue;
            }
            let parent = self.parent[w].ok_or(TreeError::Orphan(w))?;
            if !g.has_edge(w, parent) {
                return Err(TreeError::ParentNotAdjacent { agent: w, parent });
            }
            if self.dist[w] != self.dist[parent] + 1 {
                return Err(TreeError::DistanceStep(w));
            }
        }
        for z in 0..self.m() {
            let mut expected: Vec<Agent> =
                (0..self.m()).filter(|&w| self.parent[w] == Some(z)).collect();
            let mut got = self.children[z].clone();
            expected.sort_unstable();
            got.sort_unstable();
            if expected != got {
                return Err(TreeError::ChildrenMismatch(z));
            }
        }
        Ok(())
    }
}

/// Distributed Bellman-Ford from `source`: `m − 1` synchronous rounds in
/// which every agent sends its current distance estimate to its neighbours,
/// followed by one round where every agent sends its id to its parent.
///
/// A parent changes only when the distance strictly improves; among equally
/// good neighbours the lowest id wins.
pub fn distributed_bellman_ford(g: &Graph, source: Agent) -> ShortestPathTree {
    let m = g.m();
    let mut dist: Vec<Option<usize>> = vec![None; m];
    dist[source] = Some(0);
    let mut parent: Vec<Option<Agent>> = vec![None; m];
    let mut inbox: Vec<Vec<(Agent, Option<usize>)>> = vec![Vec::new(); m];

    for _round in 1..m {
        for mail in inbox.iter_mut() {
            mail.clear();
        }
        for w in 0..m {
            for &z in g.neighbours(w) {
                inbox[z].push((w, dist[w]));
            }
        }
        let mut next = dist.clone();
        for w in 0..m {
            let offer = inbox[w]
                .iter()
                .filter_map(|&(z, d)| d.map(|d| (d + 1, z)))
                .min();
            if let Some((candidate, via)) = offer {
                if dist[w].is_none_or(|current| candidate < current) {
                    next[w] = Some(candidate);
                    parent[w] = Some(via);
                }
            }
        }
        dist = next;
    }

    let mut children = vec![Vec::new(); m];
    for (w, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(w);
        }
    }
    ShortestPathTree {
        root: source,
        parent,
        children,
        dist: dist
            .into_iter()
            .map(|d| d.expect("graph invariant: connected"))
            .collect(),
    }
}

fn score_order(a: &(f64, Agent), b: &(f64, Agent)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Runs `m` rounds of min-score leader election and returns every agent whose
/// final state equals its initial `(id, f)` pair, i.e. every agent that
/// self-identifies as leader. Each agent keeps the lexicographically smallest
/// `(f, id)` pair it has seen so far; scores compare exactly.
pub fn election_outcome(g: &Graph, f: &[f64]) -> Vec<Agent> {
    let m = g.m();
    assert_eq!(f.len(), m, "one score per agent");
    let initial: Vec<(f64, Agent)> = f.iter().copied().zip(0..m).collect();
    let mut state = initial.clone();
    for _round in 0..m {
        let next: Vec<(f64, Agent)> = (0..m)
            .map(|v| {
                g.neighbours(v)
                    .iter()
                    .map(|&w| state[w])
                    .fold(state[v], |best, seen| {
                        if score_order(&seen, &best) == Ordering::Less {
                            seen
                        } else {
                            best
                        }
                    })
            })
            .collect();
        state = next;
    }
    (0..m)
        .filter(|&v| score_order(&state[v], &initial[v]) == Ordering::Equal)
        .collect()
}

/// Elects the agent minimising `f`, ties broken by the smaller id.
pub fn elect_leader(g: &Graph, f: &[f64]) -> Agent {
    let leaders = election_outcome(g, f);
    assert_eq!(leaders.len(), 1, "election must produce exactly one leader");
    leaders[0]
}

/// Result of best-leader selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestLeader {
    pub leader: Agent,
    pub sum_of_distances: usize,
    /// `f_v = Σ_w d_vw` as computed by each agent through convergecast.
    pub sums: Vec<usize>,
}

/// Sums the distances reported up the tree: every agent starts with its own
/// `(id, distance)` record and, for `m` rounds, forwards the records it has
/// not yet sent to its parent.
fn convergecast_sum(tree: &ShortestPathTree) -> usize {
    let m = tree.m();
    let mut known: Vec<Vec<(Agent, usize)>> = (0..m).map(|w| vec![(w, tree.dist(w))]).collect();
    let mut unsent: Vec<Vec<(Agent, usize)>> = known.clone();
    for _round in 0..m {
        let mut arriving: Vec<Vec<(Agent, usize)>> = vec![Vec::new(); m];
        for w in 0..m {
            if let Some(p) = tree.parent(w) {
                arriving[p].append(&mut unsent[w]);
            }
        }
        for (w, records) in arriving.into_iter().enumerate() {
            known[w].extend_from_slice(&records);
            unsent[w].extend(records);
        }
    }
    let root = &known[tree.root()];
    debug_assert_eq!(root.len(), m);
    root.iter().map(|&(_, d)| d).sum()
}

/// Picks the leader minimising the sum of shortest paths: one Bellman-Ford
/// sweep and convergecast per source, then leader election on the sums.
pub fn best_leader(g: &Graph) -> BestLeader {
    let sums: Vec<usize> = (0..g.m())
        .map(|v| convergecast_sum(&distributed_bellman_ford(g, v)))
        .collect();
    let scores: Vec<f64> = sums.iter().map(|&s| s as f64).collect();
    let leader = elect_leader(g, &scores);
    BestLeader {
        leader,
        sum_of_distances: sums[leader],
        sums,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_topology, TopologyKind};

    fn topo(kind: TopologyKind, m: usize) -> Graph {
        make_topology(kind, m, None).unwrap()
    }

    #[test]
    fn grid_tree_from_centre() {
        let g = topo(TopologyKind::Grid, 9);
        let tree = distributed_bellman_ford(&g, 4);
        tree.validate(&g).unwrap();
        let mut d = tree.distances().to_vec();
        d.sort_unstable();
        assert_eq!(d, vec![0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert_eq!(tree.children(4), &[1, 3, 5, 7]);
        // Corners attach to their lowest-id neighbour on the middle ring.
        assert_eq!(tree.children(1), &[0, 2]);
        assert_eq!(tree.children(3), &[6]);
        assert_eq!(tree.children(5), &[8]);
        assert!(tree.children(7).is_empty());
        assert_eq!(tree.depth(), 2);
    }

    #[test]
    fn source_row() {
        let g = topo(TopologyKind::Cycle, 7);
        for v in 0..7 {
            let tree = distributed_bellman_ford(&g, v);
            assert_eq!(tree.dist(v), 0);
            assert_eq!(tree.parent(v), None);
        }
    }

    #[test]
    fn single_agent_tree() {
        let g = topo(TopologyKind::Star, 1);
        let tree = distributed_bellman_ford(&g, 0);
        tree.validate(&g).unwrap();
        assert_eq!(best_leader(&g).leader, 0);
    }

    #[test]
    fn validator_catches_bad_trees() {
        let g = topo(TopologyKind::Cycle, 4);
        let mut tree = distributed_bellman_ford(&g, 0);
        tree.dist[2] = 1;
        assert!(tree.validate(&g).is_err());
        let mut tree = distributed_bellman_ford(&g, 0);
        tree.children[0].clear();
        assert_eq!(tree.validate(&g), Err(TreeError::ChildrenMismatch(0)));
    }

    #[test]
    fn election_examples() {
        let g = topo(TopologyKind::Cycle, 4);
        assert_eq!(elect_leader(&g, &[3.0, 1.0, 1.0, 5.0]), 1);
        assert_eq!(elect_leader(&g, &[2.0; 4]), 0);
        let line = topo(TopologyKind::Cycle, 9);
        let mut f = vec![10.0; 9];
        f[6] = -1.0;
        assert_eq!(elect_leader(&line, &f), 6);
    }

    #[test]
    fn best_leader_examples() {
        let star = best_leader(&topo(TopologyKind::Star, 9));
        assert_eq!((star.leader, star.sum_of_distances), (0, 8));
        let grid = best_leader(&topo(TopologyKind::Grid, 9));
        assert_eq!((grid.leader, grid.sum_of_distances), (4, 12));
        let cycle = best_leader(&topo(TopologyKind::Cycle, 4));
        assert_eq!((cycle.leader, cycle.sum_of_distances), (0, 4));
    }
}
