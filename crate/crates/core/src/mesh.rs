//! Partitions of the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    /// Uniform mesh with `n_elements` elements of length `1/n_elements`.
    pub fn uniform(n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(LabError::InvalidMesh("need at least one element".into()));
        }
        let nodes = (0..=n_elements)
            .map(|i| i as f64 / n_elements as f64)
            .collect();
        Ok(Self { nodes })
    }

    /// Mesh with explicitly given node coordinates.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(LabError::InvalidMesh("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(LabError::InvalidMesh("nodes must span [0, 1]".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidMesh(
                "nodes must be strictly increasing".into(),
            ));
        }
        Ok(Self { nodes })
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Largest element length.
    pub fn h(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Indices of the nodes at x = 0 and x = 1.
    pub fn boundary_nodes(&self) -> (usize, usize) {
        (0, self.nodes.len() - 1)
    }

    /// Uniform refinement: every element split in two.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(1.0);
        Self { nodes }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&x| f(x)))
    }
}
