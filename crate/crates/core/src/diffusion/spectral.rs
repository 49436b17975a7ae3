//! Spectra of the transfer operator through its symmetric similarity
//! transform.
//!
//! Detailed balance `π_j T_ij = π_i T_ji` makes `M = Π^{-1/2} T Π^{1/2}`
//! symmetric wherever π is positive. Nodes with π = 0 (the arg-max of
//! `d_rat_min`, which no walker ever enters) have identically zero rows in
//! T and contribute eigenvalue 0; the symmetric solve runs on the
//! remaining recurrent block.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

use super::transfer::TransferOperator;

pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// |λ + 1| below this flags a period-2 mode.
pub const MINUS_ONE_TOLERANCE: f64 = 1e-8;

/// Sparse symmetric matrix sharing T's pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricOperator {
    inner: TransferOperator,
}

impl SymmetricOperator {
    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.inner.apply(x)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.inner.to_dense()
    }

    /// max |M_ij − M_ji| over stored entries.
    pub fn asymmetry(&self) -> f64 {
        (0..self.len())
            .flat_map(|i| self.inner.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

/// `M[i][j] = T[i][j] · sqrt(π_j / π_i)`.
pub fn symmetrize(op: &TransferOperator, pi: &[f64]) -> Result<SymmetricOperator> {
    if pi.len() != op.len() {
        return Err(Error::Precondition(format!(
            "π has {} entries for a {}-node operator",
            pi.len(),
            op.len()
        )));
    }
    if let Some(i) = pi.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::Precondition(format!(
            "π[{i}] = {} is not strictly positive",
            pi[i]
        )));
    }
    let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let rows = (0..op.len())
        .map(|i| {
            op.row(i)
                .map(|(j, v)| (j, v * sqrt_pi[j] / sqrt_pi[i]))
                .collect()
        })
        .collect();
    Ok(SymmetricOperator {
        inner: TransferOperator::from_rows(rows)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Dense,
    OrthogonalIteration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub dense_cap: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            dense_cap: DEFAULT_DENSE_CAP,
            max_iterations: 200_000,
            tolerance: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    /// Top-k eigenvalues of T, descending.
    pub eigenvalues: Vec<f64>,
    pub node_count: usize,
    pub lambda_min: f64,
    /// 1 − max(|λ₂|, |λ_n|).
    pub spectral_gap: f64,
    /// Leading eigenvector of T scaled to unit sum; zero at transient nodes.
    pub leading_vector: Vec<f64>,
    pub has_minus_one: bool,
    pub transient_count: usize,
    pub method: SolveMethod,
}

pub fn spectrum(op: &TransferOperator, pi: &[f64], k: usize) -> Result<SpectralSummary> {
    spectrum_with(op, pi, k, &SpectrumOptions::default())
}

pub fn spectrum_with(
    op: &TransferOperator,
    pi: &[f64],
    k: usize,
    opts: &SpectrumOptions,
) -> Result<SpectralSummary> {
    let n = op.len();
    if pi.len() != n {
        return Err(Error::Precondition(format!(
            "π has {} entries for a {n}-node operator",
            pi.len()
        )));
    }
    if pi.iter().any(|&p| p < 0.0 || !p.is_finite()) {
        return Err(Error::Precondition(
            "π has negative or non-finite entries".into(),
        ));
    }
    let recurrent: Vec<usize> = (0..n).filter(|&i| pi[i] > 0.0).collect();
    if recurrent.is_empty() {
        return Err(Error::Precondition("π has no positive entry".into()));
    }
    let transient = n - recurrent.len();
    let k = k.clamp(1, n);
    let pi_r: Vec<f64> = recurrent.iter().map(|&i| pi[i]).collect();
    let m = symmetrize(&op.restrict(&recurrent), &pi_r)?;
    let nr = m.len();

    // Top eigenvalues of the recurrent block; we always want at least two
    // so the gap is defined.
    let want = (k.max(2)).min(nr);
    let (top, lead, lambda_min_r, method) = if nr <= opts.dense_cap {
        let mut vals: Vec<f64> = m
            .to_dense()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let lead = certified_perron_vector(&m, &pi_r, vals[0], opts.tolerance)?;
        let min = *vals.last().expect("non-empty");
        (vals[..want].to_vec(), lead, min, SolveMethod::Dense)
    } else {
        let (vals, vecs) = top_eigenpairs(&m, want, 1.0, opts)?;
        let lead = vecs.column(0).iter().copied().collect();
        // Bottom of M is the top of −M.
        let (neg, _) = top_eigenpairs(&m, 1, -1.0, opts)?;
        (vals, lead, -neg[0], SolveMethod::OrthogonalIteration)
    };

    let mut all: Vec<f64> = top;
    all.extend(std::iter::repeat_n(0.0, transient));
    all.sort_by(|a, b| b.total_cmp(a));
    let lambda_min = if transient > 0 {
        lambda_min_r.min(0.0)
    } else {
        lambda_min_r
    };
    let second = all.get(1).copied().unwrap_or(lambda_min);
    let spectral_gap = if n > 1 {
        1.0 - second.abs().max(lambda_min.abs())
    } else {
        0.0
    };

    let lead_r: Vec<f64> = lead;
    let sign = if lead_r.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let mapped: Vec<f64> = lead_r
        .iter()
        .zip(&pi_r)
        .map(|(v, p)| sign * v * p.sqrt())
        .collect();
    let total: f64 = mapped.iter().sum();
    let mut leading_vector = vec![0.0; n];
    for (&i, v) in recurrent.iter().zip(mapped) {
        leading_vector[i] = v / total;
    }

    all.truncate(k);
    Ok(SpectralSummary {
        eigenvalues: all,
        node_count: n,
        lambda_min,
        spectral_gap,
        leading_vector,
        has_minus_one: (lambda_min + 1.0).abs() < MINUS_ONE_TOLERANCE,
        transient_count: transient,
        method,
    })
}

/// `sqrt(π)` normalized, accepted as the eigenvector of `lambda` only if
/// its residual `‖Mv − λv‖∞` is below `tolerance`.
fn certified_perron_vector(
    m: &SymmetricOperator,
    pi: &[f64],
    lambda: f64,
    tolerance: f64,
) -> Result<Vec<f64>> {
    let norm = pi.iter().sum::<f64>().sqrt();
    let v: Vec<f64> = pi.iter().map(|p| p.sqrt() / norm).collect();
    let residual = m
        .apply(&v)
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max);
    if residual > tolerance {
        return Err(Error::Numerical(format!(
            "stationary vector is not an eigenvector of λ = {lambda} (residual {residual:e})"
        )));
    }
    Ok(v)
}

/// Orthogonal iteration with Rayleigh–Ritz on `(I + sign·M) / 2`, whose
/// eigenvalues lie in [0, 1] for a stochastic similarity. Returns the top
/// `k` eigenvalues of `sign·M` (descending) and their vectors.
fn top_eigenpairs(
    m: &SymmetricOperator,
    k: usize,
    sign: f64,
    opts: &SpectrumOptions,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.len();
    let shifted = |x: &DVector<f64>| -> DVector<f64> {
        let mx = m.apply(x.as_slice());
        DVector::from_iterator(n, x.iter().zip(mx).map(|(a, b)| 0.5 * (a + sign * b)))
    };
    // Deterministic, generic start block.
    let mut q = DMatrix::from_fn(n, k, |i, c| {
        let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((c as u64 + 1) * 0xBF58_476D);
        1.0 + (h % 1000) as f64 / 1000.0 + if c > 0 { (i % (c + 2)) as f64 } else { 0.0 }
    });
    q = q.qr().q();
    let mut ritz_prev = vec![f64::INFINITY; k];
    for iter in 0..opts.max_iterations {
        let mut z = DMatrix::zeros(n, k);
        for c in 0..k {
            z.set_column(c, &shifted(&q.column(c).into_owned()));
        }
        q = z.qr().q();
        if iter % 10 == 9 || iter + 1 == opts.max_iterations {
            let mut aq = DMatrix::zeros(n, k);
            for c in 0..k {
                aq.set_column(c, &shifted(&q.column(c).into_owned()));
            }
            let small = q.transpose() * &aq;
            let small = 0.5 * (&small + small.transpose());
            let eig = SymmetricEigen::new(small);
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let ritz: Vec<f64> = order
                .iter()
                .map(|&c| 2.0 * eig.eigenvalues[c] - 1.0)
                .collect();
            let change = ritz
                .iter()
                .zip(&ritz_prev)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            ritz_prev = ritz.clone();
            if change < opts.tolerance {
                let rotated = &q * &eig.eigenvectors;
                let vecs = DMatrix::from_fn(n, k, |i, c| rotated[(i, order[c])]);
                return Ok((ritz, vecs));
            }
        }
    }
    Err(Error::Numerical(format!(
        "orthogonal iteration for {k} eigenpairs of a {n}-node operator did not converge in {} iterations (last Ritz values {:?})",
        opts.max_iterations, ritz_prev
    )))
}

/// Eigenvalues of T from a dense non-symmetric (Schur) solve, as
/// (real, imaginary) pairs sorted by descending real part.
pub fn transfer_eigenvalues_dense(op: &TransferOperator) -> Result<Vec<(f64, f64)>> {
    let schur =
        nalgebra::linalg::Schur::try_new(op.to_dense(), 1e-14, 100_000).ok_or_else(|| {
            Error::Numerical(format!(
                "Schur decomposition of the {}-node transfer matrix did not converge",
                op.len()
            ))
        })?;
    let mut vals: Vec<(f64, f64)> = schur
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    vals.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(vals)
}
