//! Numerical laboratory for generalized Gibbs ensembles of the
//! Ablowitz–Ladik lattice and the Schur flow.
//!
//! The crate samples the ensembles through their CMV Lax matrices, computes
//! empirical spectral measures, minimizes the circular and interval
//! free-energy functionals, integrates the flows, and checks the relation
//! between the density of states and the β-derivative of the equilibrium
//! measure.

pub mod cmv;
pub mod density;
pub mod dynamics;
pub mod eigen;
pub mod equilibrium;
pub mod error;
pub mod lab;
pub mod potential;
pub mod rng;
pub mod sampling;
pub mod spectral;
pub mod stats;

pub use cmv::{
    build_cmv, build_periodic_cmv, build_xi, conserved_quantities, BoundaryMode, CmvMatrix, ConservedQuantities,
    Topology, VerblunskyVector, C64,
};
pub use density::GridDensity;
pub use error::{GgeError, Result};
pub use potential::{Domain, Potential};
pub use rng::{stream_rng, GgeRng, StreamId};
pub use sampling::{
    run_ensemble, sample_al_gge, sample_circular_beta, sample_ensemble, sample_jacobi_beta, sample_schur_gge,
    sample_theta, ChainStats, EnsembleKind, EnsembleSpec, McmcParams, SampleSet, ThetaMethod, ThetaParams,
};
pub use spectral::{
    density_estimate, distance_d, fourier_coeffs, EmpiricalMeasure, Estimator, FourierCoeffs, IntervalEmpiricalMeasure,
};
