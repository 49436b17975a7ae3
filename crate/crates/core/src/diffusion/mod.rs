//! Weighted random walks on a mesh: weights, the transfer operator, the
//! master-equation iteration, spectra and a Monte-Carlo walker ensemble.

mod evolve;
mod graph;
mod spectral;
mod transfer;
mod walkers;

pub use evolve::{
    evolve, evolve_with, l1_distance, linf_distance, EvolveOptions, Termination, TerminationStatus,
    Trajectory, DEFAULT_MAX_STEPS, DEFAULT_TOLERANCE,
};
pub use graph::{analytic_stationary, build_weights, WeightedGraph};
pub use spectral::{
    spectrum, spectrum_with, symmetrize, transfer_eigenvalues_dense, SolveMethod, SpectralSummary,
    SpectrumOptions, SymmetricOperator, DEFAULT_DENSE_CAP, MINUS_ONE_TOLERANCE,
};
pub use transfer::{
    build_transfer, step, step_raw, validate_density, DensityState, TransferOperator,
    RENORMALIZE_THRESHOLD,
};
pub use walkers::monte_carlo_walk;

#[cfg(test)]
mod tests;
