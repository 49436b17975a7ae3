use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::Mesh;
use crate::measures::MeasureTable;

/// Directed weights `w[i][j] = A[i][j] · (1 − d_rel(j))` stored row-wise.
///
/// Indices are compact: nodes pruned during construction are absent, and
/// `mesh_id` maps a compact index back to the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    mesh_ids: Vec<usize>,
    d_rel: Vec<f64>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    strength: Vec<f64>,
}

pub fn build_weights(mesh: &Mesh, measures: &MeasureTable) -> Result<WeightedGraph> {
    if measures.len() != mesh.len() {
        return Err(Error::Precondition(format!(
            "measure table has {} rows for a {}-node mesh",
            measures.len(),
            mesh.len()
        )));
    }
    WeightedGraph::from_adjacency(&mesh.adjacency, &measures.d_rel())
}

impl WeightedGraph {
    /// Builds the weighted graph over a symmetric adjacency, pruning nodes
    /// that neither emit nor receive walkers.
    pub fn from_adjacency(adjacency: &[Vec<usize>], d_rel: &[f64]) -> Result<Self> {
        let n = adjacency.len();
        if d_rel.len() != n {
            return Err(Error::Precondition(format!(
                "{} relative distances for {n} nodes",
                d_rel.len()
            )));
        }
        if let Some(bad) = d_rel.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(Error::Precondition(format!(
                "d_rel value {bad} outside [0, 1]"
            )));
        }
        let weight_to = |j: usize| 1.0 - d_rel[j];
        let full_strength: Vec<f64> = adjacency
            .iter()
            .map(|nb| nb.iter().map(|&j| weight_to(j)).sum())
            .collect();

        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let receives = !adjacency[i].is_empty() && d_rel[i] < 1.0;
            if full_strength[i] > 0.0 {
                keep.push(i);
            } else if receives {
                return Err(Error::Connectivity(format!(
                    "node {i} receives walkers but has zero strength"
                )));
            } else {
                log::warn!("pruning node {i}: zero strength and no incoming weight");
            }
        }
        if keep.is_empty() {
            return Err(Error::Connectivity("no node with positive strength".into()));
        }

        let mut compact = vec![usize::MAX; n];
        for (c, &i) in keep.iter().enumerate() {
            compact[i] = c;
        }
        let mut offsets = Vec::with_capacity(keep.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for &i in &keep {
            for &j in &adjacency[i] {
                if compact[j] != usize::MAX {
                    targets.push(compact[j]);
                    weights.push(weight_to(j));
                }
            }
            offsets.push(targets.len());
        }
        let graph = WeightedGraph {
            d_rel: keep.iter().map(|&i| d_rel[i]).collect(),
            strength: keep.iter().map(|&i| full_strength[i]).collect(),
            mesh_ids: keep,
            offsets,
            targets,
            weights,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    /// The whole graph must be connected, and so must the recurrent part
    /// (`d_rel < 1`), otherwise the stationary state is not unique.
    fn check_connected(&self) -> Result<()> {
        let n = self.len();
        let reach = |allowed: &dyn Fn(usize) -> bool| -> (usize, usize) {
            let total = (0..n).filter(|&i| allowed(i)).count();
            let Some(seed) = (0..n).find(|&i| allowed(i)) else {
                return (0, 0);
            };
            let mut seen = vec![false; n];
            seen[seed] = true;
            let mut count = 1;
            let mut queue = VecDeque::from([seed]);
            while let Some(u) = queue.pop_front() {
                for (v, _) in self.out_edges(u) {
                    if allowed(v) && !seen[v] {
                        seen[v] = true;
                        count += 1;
                        queue.push_back(v);
                    }
                }
            }
            (count, total)
        };
        let (reached, total) = reach(&|_| true);
        if reached != total {
            return Err(Error::Connectivity(format!(
                "{reached} of {total} nodes reachable after pruning"
            )));
        }
        let (reached, total) = reach(&|i| self.d_rel[i] < 1.0);
        if total == 0 {
            return Err(Error::Connectivity("every node has d_rel = 1".into()));
        }
        if reached != total {
            return Err(Error::Connectivity(format!(
                "recurrent subgraph splits: {reached} of {total} nodes reachable"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mesh_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh_ids.is_empty()
    }

    pub fn mesh_ids(&self) -> &[usize] {
        &self.mesh_ids
    }

    pub fn mesh_id(&self, i: usize) -> usize {
        self.mesh_ids[i]
    }

    /// Compact index of a mesh node, if it survived pruning.
    pub fn compact_index(&self, mesh_id: usize) -> Option<usize> {
        self.mesh_ids.binary_search(&mesh_id).ok()
    }

    pub fn d_rel(&self) -> &[f64] {
        &self.d_rel
    }

    pub fn strength(&self) -> &[f64] {
        &self.strength
    }

    pub(crate) fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Outgoing (target, weight) pairs.
    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row(i);
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn targets(&self, i: usize) -> &[usize] {
        &self.targets[self.row(i)]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[self.row(i)]
    }

    /// `w[i][j]`, zero when not adjacent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let r = self.row(i);
        match self.targets[r.clone()].binary_search(&j) {
            Ok(k) => self.weights[r.start + k],
            Err(_) => 0.0,
        }
    }

    #[cfg(test)]
    pub(crate) fn zero_strength_for_test(&mut self, i: usize) {
        self.strength[i] = 0.0;
    }

    /// Expands a compact density onto the full mesh, zeros at pruned nodes.
    pub fn to_mesh_vector(&self, compact: &[f64], mesh_len: usize) -> Vec<f64> {
        let mut out = vec![0.0; mesh_len];
        for (c, &id) in self.mesh_ids.iter().enumerate() {
            out[id] = compact[c];
        }
        out
    }

    /// Edge currents `C_ij = w_ij η_i / St_i`, aligned with the row storage.
    pub fn edge_currents(&self, eta: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.weights.len()];
        for i in 0..self.len() {
            let per_weight = eta[i] / self.strength[i];
            for k in self.row(i) {
                c[k] = self.weights[k] * per_weight;
            }
        }
        c
    }

    /// Outgoing walker fraction `J⁺_i = Σ_j C_ij`.
    pub fn outflow(&self, eta: &[f64]) -> Vec<f64> {
        let c = self.edge_currents(eta);
        (0..self.len())
            .map(|i| c[self.row(i)].iter().sum())
            .collect()
    }

    /// Incoming walker fraction `J⁻_i = Σ_j C_ji`.
    pub fn inflow(&self, eta: &[f64]) -> Vec<f64> {
        let c = self.edge_currents(eta);
        let mut j_in = vec![0.0; self.len()];
        for i in 0..self.len() {
            for k in self.row(i) {
                j_in[self.targets[k]] += c[k];
            }
        }
        j_in
    }

    /// One step of the balance form `η + J⁻ − J⁺`.
    pub fn balance_step(&self, eta: &[f64]) -> Vec<f64> {
        let out = self.outflow(eta);
        let inn = self.inflow(eta);
        (0..self.len()).map(|i| eta[i] + inn[i] - out[i]).collect()
    }
}

/// Stationary state of the reversible chain: `π_i ∝ (1 − d_rel(i)) · St_i`.
pub fn analytic_stationary(wg: &WeightedGraph) -> Vec<f64> {
    let raw: Vec<f64> = (0..wg.len())
        .map(|i| (1.0 - wg.d_rel[i]) * wg.strength[i])
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}
