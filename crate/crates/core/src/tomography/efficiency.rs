use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantum::OperatorBasis;

use super::ProcessMatrix;

/// Efficiency matrix `Θ`: the survival probability of input `ρ` is `tr(Θ†ρ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyMatrix {
    entries: CMatrix,
}

impl EfficiencyMatrix {
    /// Validating constructor: Hermitian within 1e-8, eigenvalues in [−1e-6, 1 + 1e-6].
    pub fn new(entries: CMatrix) -> Result<Self> {
        let m = EfficiencyMatrix { entries };
        if !m.is_valid() {
            return Err(Error::InvalidParameter(
                "efficiency matrix must be Hermitian with eigenvalues in [0, 1]".into(),
            ));
        }
        Ok(m)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_valid(&self) -> bool {
        if !self.entries.is_square() || linalg::hermiticity_error(&self.entries) > 1e-8 {
            return false;
        }
        let ev = linalg::eigvalsh(&self.entries);
        ev.iter().all(|&x| (-1e-6..=1.0 + 1e-6).contains(&x))
    }

    /// `Re tr(Θ† ρ)`.
    pub fn efficiency(&self, rho: &CMatrix) -> f64 {
        linalg::hs_inner(&self.entries, rho).re
    }
}

/// `Θ = Σ_ij χ_ij A_j† A_i`.
pub fn efficiency_matrix_from_chi(chi: &ProcessMatrix) -> EfficiencyMatrix {
    let els = chi.basis().elements();
    let d = chi.basis().dim();
    let mut theta = CMatrix::zeros(d, d);
    for (j, aj) in els.iter().enumerate() {
        let adj = aj.adjoint();
        for (i, ai) in els.iter().enumerate() {
            let x = chi.entries()[(i, j)];
            if x != linalg::ZERO {
                theta += (&adj * ai) * x;
            }
        }
    }
    EfficiencyMatrix { entries: linalg::hermitian_part(&theta) }
}

/// `Θ = Σ_j A^j η_j*` from measured efficiencies `η_j = tr(Θ† A_j)` of a spanning
/// set of inputs `A_j`.
pub fn efficiency_matrix_from_measurements(values: &[(CMatrix, f64)]) -> Result<EfficiencyMatrix> {
    let basis = OperatorBasis::new("efficiency-inputs", values.iter().map(|(a, _)| a.clone()).collect())
        .map_err(|_| Error::SingularInputSet(f64::INFINITY))?;
    if !basis.has_dual() {
        return Err(Error::SingularInputSet(linalg::condition_number(basis.metric())));
    }
    let dual = crate::quantum::dual_basis(&basis)?;
    let d = basis.dim();
    let theta = dual
        .elements()
        .iter()
        .zip(values)
        .fold(CMatrix::zeros(d, d), |acc, (a, (_, eta))| acc + a.scale(*eta));
    Ok(EfficiencyMatrix { entries: theta })
}

/// `η̄ = tr(Θ)/d`.
pub fn average_efficiency(theta: &EfficiencyMatrix) -> f64 {
    linalg::trace(&theta.entries).re / theta.dim() as f64
}

/// `(mean of η⁻¹)⁻¹`.
pub fn harmonic_mean_efficiency(etas: &[f64]) -> Result<f64> {
    if etas.is_empty() {
        return Err(Error::InvalidParameter("no efficiencies given".into()));
    }
    if let Some(&bad) = etas.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::ZeroEfficiency(bad));
    }
    Ok(etas.len() as f64 / etas.iter().map(|e| 1.0 / e).sum::<f64>())
}
