//! Cavity-array geometries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected, unweighted graph of coupled cavities. Edges are stored as
/// `(min, max)` pairs in sorted order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CavityGraph {
    n_cavities: usize,
    edges: Vec<(usize, usize)>,
}

impl CavityGraph {
    pub fn n_cavities(&self) -> usize {
        self.n_cavities
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Open chain or ring of `n` cavities.
    pub fn chain(n: usize, periodic: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("a chain needs >= 2 cavities, got {n}")));
        }
        if periodic && n < 3 {
            return Err(Error::InvalidGraph(format!("a ring needs >= 3 cavities, got {n}")));
        }
        let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if periodic {
            edges.push((n - 1, 0));
        }
        Self::from_edge_list(n, &edges)
    }

    /// Validates and canonicalizes an explicit edge list.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("no cavities".into()));
        }
        let mut canon = Vec::with_capacity(edges.len());
        for &(j, k) in edges {
            if j == k {
                return Err(Error::InvalidGraph(format!("self-loop at cavity {j}")));
            }
            if j >= n || k >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({j}, {k}) references a cavity >= {n}"
                )));
            }
            canon.push((j.min(k), j.max(k)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge {:?}", w[0])));
        }
        Ok(Self {
            n_cavities: n,
            edges: canon,
        })
    }

    /// A single isolated cavity.
    pub fn single() -> Self {
        Self {
            n_cavities: 1,
            edges: Vec::new(),
        }
    }
}
