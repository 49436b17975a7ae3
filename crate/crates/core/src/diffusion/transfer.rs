use crate::error::{Error, Result};

use super::graph::WeightedGraph;

/// Drift in total mass beyond which a step rescales the density.
pub const RENORMALIZE_THRESHOLD: f64 = 1e-13;

/// Sparse column-stochastic operator, `T[i][j] = w[j][i] / St[j]`, row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOperator {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

pub fn build_transfer(wg: &WeightedGraph) -> Result<TransferOperator> {
    let n = wg.len();
    if let Some(j) = (0..n).find(|&j| wg.strength()[j] <= 0.0) {
        return Err(Error::Precondition(format!("node {j} has zero strength")));
    }
    // Row i of T collects the edges j -> i, i.e. the transpose pattern.
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for j in 0..n {
        let st = wg.strength()[j];
        for (i, w) in wg.out_edges(j) {
            incoming[i].push((j, w / st));
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    offsets.push(0);
    for mut row in incoming {
        row.sort_unstable_by_key(|&(j, _)| j);
        for (j, v) in row {
            cols.push(j);
            vals.push(v);
        }
        offsets.push(cols.len());
    }
    Ok(TransferOperator {
        n,
        offsets,
        cols,
        vals,
    })
}

impl TransferOperator {
    /// Builds an operator from explicit rows of (column, value) entries.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for (j, v) in row {
                if j >= n {
                    return Err(Error::Precondition(format!("column {j} out of range")));
                }
                cols.push(j);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Ok(Self {
            n,
            offsets,
            cols,
            vals,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.offsets[i]..self.offsets[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (&j, &v) in self.cols.iter().zip(&self.vals) {
            sums[j] += v;
        }
        sums
    }

    /// `out = T x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let r = self.offsets[i]..self.offsets[i + 1];
            *o = self.cols[r.clone()]
                .iter()
                .zip(&self.vals[r])
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(x, &mut out);
        out
    }

    /// Sub-operator on `keep` (ascending indices), reindexed.
    pub fn restrict(&self, keep: &[usize]) -> TransferOperator {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let rows = keep
            .iter()
            .map(|&i| {
                self.row(i)
                    .filter(|&(j, _)| map[j] != usize::MAX)
                    .map(|(j, v)| (map[j], v))
                    .collect()
            })
            .collect();
        TransferOperator::from_rows(rows).expect("restricted columns are in range")
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// Walker density at a time step.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub eta: Vec<f64>,
    pub t: u64,
}

impl DensityState {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        validate_density(&eta)?;
        Ok(Self { eta, t: 0 })
    }

    pub fn delta(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::Lookup { id: at, len: n });
        }
        let mut eta = vec![0.0; n];
        eta[at] = 1.0;
        Ok(Self { eta, t: 0 })
    }

    pub fn mass(&self) -> f64 {
        self.eta.iter().sum()
    }
}

pub fn validate_density(eta: &[f64]) -> Result<()> {
    if eta.is_empty() {
        return Err(Error::Domain("empty density".into()));
    }
    if let Some(v) = eta.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!(
            "density entry {v} is negative or not finite"
        )));
    }
    let mass: f64 = eta.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("density sums to {mass}, not 1")));
    }
    Ok(())
}

/// Rescales to unit mass when the drift exceeds [`RENORMALIZE_THRESHOLD`].
pub(crate) fn renormalize(eta: &mut [f64]) {
    let mass: f64 = eta.iter().sum();
    if (mass - 1.0).abs() > RENORMALIZE_THRESHOLD {
        eta.iter_mut().for_each(|v| *v /= mass);
    }
}

/// One master-equation step `η(t+1) = T η(t)` with drift control.
pub fn step(t: &TransferOperator, state: &DensityState) -> DensityState {
    let mut eta = t.apply(&state.eta);
    renormalize(&mut eta);
    DensityState {
        eta,
        t: state.t + 1,
    }
}

/// One step without drift control, for conservation checks.
pub fn step_raw(t: &TransferOperator, state: &DensityState) -> DensityState {
    DensityState {
        eta: t.apply(&state.eta),
        t: state.t + 1,
    }
}
