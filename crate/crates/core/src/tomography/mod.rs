//! State, process and efficiency tomography.
//!
//! The process path follows the superoperator route: measure output states for a
//! spanning set of inputs, solve for the superoperator matrix `M` in an
//! orthonormal basis, contract with the β tensor to get `χ`, then change basis.

mod bootstrap;
mod efficiency;
mod process;
mod state;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::{DensityMatrix, OperatorBasis};

pub use bootstrap::{bootstrap, mean_and_std, resample_counts};
pub use efficiency::{
    average_efficiency, efficiency_matrix_from_chi, efficiency_matrix_from_measurements,
    harmonic_mean_efficiency, EfficiencyMatrix,
};
pub use process::{
    beta_tensor, change_chi_basis, chi_from_superop, chi_of_kraus, gate_adapted_basis,
    postselect_chi, process_fidelity, process_tomography, superop_from_chi, superop_from_pairs,
    BetaTensor, ProcessReport, TomographyDataset,
};
pub use state::{state_tomography, PairSource, StateCalibration};

/// Superoperator matrix `M_ij = tr(D_i† ℰ(D_j))` in an orthonormal basis `𝒟`.
#[derive(Debug, Clone)]
pub struct SuperopMatrix {
    entries: CMatrix,
    basis: Arc<OperatorBasis>,
}

impl SuperopMatrix {
    pub fn new(entries: CMatrix, basis: Arc<OperatorBasis>) -> Result<Self> {
        let n = basis.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: entries.nrows() });
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParameter("non-finite superoperator entry".into()));
        }
        Ok(SuperopMatrix { entries, basis })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn basis_tag(&self) -> &str {
        self.basis.tag()
    }

    /// `ℰ(ρ)` via coefficient expansion.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        let a = self.basis.coefficients(rho)?;
        Ok(self.basis.combine(&(&self.entries * a)))
    }
}

/// χ matrix with `ℰ(ρ) = Σ_ij χ_ij A_i ρ A_j†`.
#[derive(Debug, Clone)]
pub struct ProcessMatrix {
    entries: CMatrix,
    basis: Arc<OperatorBasis>,
    postselected: bool,
}

impl ProcessMatrix {
    pub fn new(entries: CMatrix, basis: Arc<OperatorBasis>, postselected: bool) -> Result<Self> {
        let n = basis.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: entries.nrows() });
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParameter("non-finite χ entry".into()));
        }
        Ok(ProcessMatrix { entries, basis, postselected })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn basis(&self) -> &Arc<OperatorBasis> {
        &self.basis
    }

    pub fn basis_tag(&self) -> &str {
        self.basis.tag()
    }

    pub fn is_postselected(&self) -> bool {
        self.postselected
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.basis.dim();
        let els = self.basis.elements();
        let left: Vec<CMatrix> = els.iter().map(|a| a * rho).collect();
        let mut out = CMatrix::zeros(d, d);
        for (j, aj) in els.iter().enumerate() {
            let adj = aj.adjoint();
            let mut acc = CMatrix::zeros(d, d);
            for (i, l) in left.iter().enumerate() {
                let x = self.entries[(i, j)];
                if x != crate::linalg::ZERO {
                    acc += l * x;
                }
            }
            out += acc * adj;
        }
        out
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> CMatrix {
        self.apply(rho.matrix())
    }

    /// Deviation from Hermiticity and the smallest eigenvalue. Statistical CP
    /// violations are reported here, never repaired.
    pub fn invariant_report(&self) -> (f64, f64) {
        let herm = linalg::hermiticity_error(&self.entries);
        let min = linalg::eigvalsh(&self.entries).first().copied().unwrap_or(0.0);
        (herm, min)
    }

    /// Whether the Hermiticity (1e-8) and positivity (−1e-6) checks pass.
    pub fn satisfies_invariants(&self) -> bool {
        let (herm, min) = self.invariant_report();
        herm <= 1e-8 && min >= -1e-6
    }
}
