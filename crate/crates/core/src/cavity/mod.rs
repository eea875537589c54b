//! Cavity-EIT physics: finesse bookkeeping, reflection spectra and their fits,
//! storage/retrieval efficiency, coupling strength and blockade estimates.

mod blockade;
mod coupling;
mod fit;
mod params;
mod reflection;
mod storage;

pub use blockade::{blockade_radius, forster_gamma_estimate, BlockadeParams, Polarizabilities};
pub use coupling::{
    cooperativity_chain, coupling_and_cooperativity, single_atom_coupling, transverse_factor,
    CouplingReport, GeometryParams,
};
pub use fit::{
    fit_spectrum, read_spectrum_csv, synthetic_spectrum, write_spectrum_csv, FitParam, FitResult,
    FitStage, NoiseModel,
};
pub use params::{complete_cavity_params, CavityParams, PartialCavity};
pub use reflection::{
    conditional_phase, effective_cooperativity, reflection, spectrum, EitParams, Measured,
    ReflectionModel, ReflectionValue, SpectrumPoint,
};
pub use storage::storage_retrieval_efficiency;
