//! Laplacian-based gossip matrix `P = I − (D − M) / (1 + max degree)` and its spectrum.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Agent, Graph, GraphError};

/// Symmetric, doubly stochastic averaging matrix supported on the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationMatrix {
    entries: DMatrix<f64>,
    /// Non-zero off-diagonal pattern, per row: `(column, weight)`.
    sparse_rows: Vec<Vec<(Agent, f64)>>,
}

impl CommunicationMatrix {
    pub fn m(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, v: Agent, w: Agent) -> f64 {
        self.entries[(v, w)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Non-zero entries of row `v` (diagonal included).
    pub fn row(&self, v: Agent) -> &[(Agent, f64)] {
        &self.sparse_rows[v]
    }

    /// `out = P · x` for a vector indexed by agent.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (v, slot) in out.iter_mut().enumerate() {
            *slot = self.sparse_rows[v].iter().map(|&(w, p)| p * x[w]).sum();
        }
    }
}

pub fn communication_matrix(g: &Graph) -> CommunicationMatrix {
    let m = g.m();
    let scale = 1.0 / (1.0 + g.max_degree() as f64);
    let mut entries = DMatrix::<f64>::identity(m, m);
    let mut sparse_rows = Vec::with_capacity(m);
    for v in 0..m {
        entries[(v, v)] = 1.0 - scale * g.degree(v) as f64;
        let mut row = vec![(v, entries[(v, v)])];
        for &w in g.neighbours(v) {
            entries[(v, w)] = scale;
            row.push((w, scale));
        }
        row.sort_by_key(|&(w, _)| w);
        sparse_rows.push(row);
    }
    CommunicationMatrix {
        entries,
        sparse_rows,
    }
}

/// Second-largest eigenvalue magnitude of `P`, from a dense symmetric
/// eigendecomposition. Zero for a single agent.
pub fn second_eigenvalue_magnitude(p: &CommunicationMatrix) -> Result<f64, GraphError> {
    let eigen = SymmetricEigen::try_new(p.entries.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| GraphError::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut magnitudes: Vec<f64> = eigen.eigenvalues.iter().map(|l| l.abs()).collect();
    if magnitudes.iter().any(|l| !l.is_finite()) {
        return Err(GraphError::Numerical("non-finite eigenvalue".into()));
    }
    magnitudes.sort_by(|a, b| b.total_cmp(a));
    Ok(magnitudes.get(1).copied().unwrap_or(0.0))
}
