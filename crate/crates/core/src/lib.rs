pub mod bands;
pub mod basis;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod hamiltonian;
pub mod observables;
pub mod perturbation;
pub mod propagation;
pub mod rng;
pub mod zeno;
