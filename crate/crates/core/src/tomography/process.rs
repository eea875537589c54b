use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::quantum::{
    pauli_product_basis, pauli_string, DensityMatrix, GateUnitary, OperatorBasis,
    PolarizationLabel,
};
use crate::sim::counts::CountsTable;

use super::efficiency::{average_efficiency, efficiency_matrix_from_chi, EfficiencyMatrix};
use super::state::{state_tomography, StateCalibration};
use super::{ProcessMatrix, SuperopMatrix};

const INPUT_CONDITION_LIMIT: f64 = 1e12;

/// Input/output state pairs of a process.
#[derive(Debug, Clone, Default)]
pub struct TomographyDataset {
    pub pairs: Vec<(DensityMatrix, DensityMatrix)>,
}

/// Solves `b_k = M a_k` for the superoperator, where `a_k`, `b_k` are the basis
/// coefficients of the k-th input and output. More pairs than `d²` are combined
/// in the least-squares sense.
pub fn superop_from_pairs(
    data: &TomographyDataset,
    basis: Arc<OperatorBasis>,
) -> Result<SuperopMatrix> {
    let n = basis.len();
    let k = data.pairs.len();
    if k < n {
        return Err(Error::SingularInputSet(f64::INFINITY));
    }
    let mut a = CMatrix::zeros(n, k);
    let mut b = CMatrix::zeros(n, k);
    for (col, (rin, rout)) in data.pairs.iter().enumerate() {
        a.set_column(col, &basis.coefficients(rin.matrix())?);
        b.set_column(col, &basis.coefficients(rout.matrix())?);
    }
    let cond = linalg::condition_number(&a);
    if !(cond < INPUT_CONDITION_LIMIT) {
        return Err(Error::SingularInputSet(cond));
    }
    let a_inv = if k == n { linalg::inverse(&a) } else { linalg::pseudo_inverse(&a) }
        .ok_or(Error::SingularInputSet(cond))?;
    SuperopMatrix::new(b * a_inv, basis)
}

/// `β_ijkl = tr(D_i† D_k D_j D_l†)` stored as an `n² × n²` matrix with row
/// `(i, j) → i·n + j` and column `(k, l) → k·n + l`, so that `vec χ = β · vec M`.
#[derive(Debug, Clone)]
pub struct BetaTensor {
    matrix: CMatrix,
    basis: Arc<OperatorBasis>,
}

impl BetaTensor {
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> crate::linalg::C64 {
        let n = self.basis.len();
        self.matrix[(i * n + j, k * n + l)]
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis_tag(&self) -> &str {
        self.basis.tag()
    }

    /// `max |Σ_kl β_ijkl β_klmn − δ_im δ_jn|`.
    pub fn self_inverse_error(&self) -> f64 {
        let sq = &self.matrix * &self.matrix;
        linalg::max_abs_diff(&sq, &linalg::identity(sq.nrows()))
    }
}

pub fn beta_tensor(basis: Arc<OperatorBasis>) -> Result<BetaTensor> {
    if !basis.is_orthonormal() {
        return Err(Error::NotOrthonormal(basis.tag().to_string()));
    }
    let n = basis.len();
    let els = basis.elements();
    // P_ik = D_i† D_k stored transposed so that tr(P Q) is a plain dot product.
    let p: Vec<CMatrix> = (0..n * n)
        .map(|ik| (els[ik / n].adjoint() * &els[ik % n]).transpose())
        .collect();
    let q: Vec<CMatrix> = (0..n * n).map(|jl| &els[jl / n] * els[jl % n].adjoint()).collect();
    let mut m = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for k in 0..n {
            let pik = &p[i * n + k];
            for j in 0..n {
                for l in 0..n {
                    let v: crate::linalg::C64 =
                        pik.iter().zip(q[j * n + l].iter()).map(|(x, y)| x * y).sum();
                    m[(i * n + j, k * n + l)] = v;
                }
            }
        }
    }
    Ok(BetaTensor { matrix: m, basis })
}

fn same_basis(a: &OperatorBasis, b: &OperatorBasis) -> Result<()> {
    if a.tag() != b.tag() || a.len() != b.len() {
        return Err(Error::BasisMismatch(a.tag().to_string(), b.tag().to_string()));
    }
    Ok(())
}

fn vec_rows(m: &CMatrix) -> CVector {
    let n = m.nrows();
    CVector::from_iterator(n * m.ncols(), (0..n * m.ncols()).map(|x| m[(x / n, x % n)]))
}

fn unvec_rows(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| v[i * n + j])
}

/// `χ_ij = Σ_kl β_ijkl M_kl`.
pub fn chi_from_superop(m: &SuperopMatrix, beta: &BetaTensor) -> Result<ProcessMatrix> {
    same_basis(m.basis(), &beta.basis)?;
    let n = beta.basis.len();
    let chi = unvec_rows(&(&beta.matrix * vec_rows(m.entries())), n);
    ProcessMatrix::new(chi, beta.basis.clone(), false)
}

/// Inverse of [`chi_from_superop`] (β is self-inverse).
pub fn superop_from_chi(chi: &ProcessMatrix, beta: &BetaTensor) -> Result<SuperopMatrix> {
    same_basis(chi.basis(), &beta.basis)?;
    let n = beta.basis.len();
    SuperopMatrix::new(unvec_rows(&(&beta.matrix * vec_rows(chi.entries())), n), beta.basis.clone())
}

/// `χ' = C χ C†` where column `i` of `C` holds the coefficients of `A_i` in `to`.
pub fn change_chi_basis(chi: &ProcessMatrix, to: Arc<OperatorBasis>) -> Result<ProcessMatrix> {
    let from = chi.basis();
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch { expected: from.dim(), got: to.dim() });
    }
    let n = from.len();
    let mut c = CMatrix::zeros(n, n);
    for (i, a) in from.elements().iter().enumerate() {
        c.set_column(i, &to.coefficients(a)?);
    }
    let entries = &c * chi.entries() * c.adjoint();
    ProcessMatrix::new(entries, to, chi.is_postselected())
}

/// `A_i = U · B_i` with `B_i` the unnormalized Pauli products. In this basis the
/// ideal gate has `χ = δ_{1,i} δ_{1,j}`.
pub fn gate_adapted_basis(u: &GateUnitary) -> OperatorBasis {
    let d = u.dim();
    let n_qubits = d.trailing_zeros() as usize;
    assert_eq!(1 << n_qubits, d, "gate dimension must be a power of two");
    let elements = (0..d * d).map(|i| u.matrix() * pauli_string(n_qubits, i)).collect();
    OperatorBasis::new(format!("adapted{n_qubits}"), elements).expect("unitary image of a basis")
}

/// `χ^ps = χ / η̄` with `η̄ = tr(Θ)/d`.
pub fn postselect_chi(chi: &ProcessMatrix) -> Result<(ProcessMatrix, f64)> {
    if chi.is_postselected() {
        return Err(Error::InvalidParameter("χ is already postselected".into()));
    }
    let eta = average_efficiency(&efficiency_matrix_from_chi(chi));
    if !(eta > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let ps = ProcessMatrix::new(chi.entries().unscale(eta), chi.basis().clone(), true)?;
    Ok((ps, eta))
}

/// `F = (1/d²) Σ_ij χ_ij tr(U†A_i) tr(A_j†U)`; equals `χ_11` in the gate-adapted basis.
pub fn process_fidelity(chi_ps: &ProcessMatrix, ideal: &GateUnitary) -> f64 {
    let d = ideal.dim() as f64;
    let ud = ideal.matrix().adjoint();
    let v: Vec<_> = chi_ps.basis().elements().iter().map(|a| linalg::trace(&(&ud * a))).collect();
    let mut f = crate::linalg::ZERO;
    for (i, vi) in v.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            f += chi_ps.entries()[(i, j)] * vi * vj.conj();
        }
    }
    f.re / (d * d)
}

/// Everything derived from one process-tomography dataset.
#[derive(Debug, Clone)]
pub struct ProcessReport {
    pub superop: SuperopMatrix,
    /// χ in the normalized Pauli basis, absolute (not postselected).
    pub chi: ProcessMatrix,
    pub chi_ps: ProcessMatrix,
    /// χ^ps in the gate-adapted basis.
    pub chi_ps_adapted: ProcessMatrix,
    pub theta: EfficiencyMatrix,
    /// η̄ = tr(Θ)/d.
    pub eta_bar_theta: f64,
    /// η̄ = tr(χ)/d (normalized Pauli basis).
    pub eta_bar_trace: f64,
    pub fidelity_ps: f64,
    /// η̄ · F^ps with η̄ from Θ.
    pub fidelity_pro: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

/// Reconstructs every input's output state from counts, then runs the
/// superoperator → β → χ chain in the normalized Pauli basis.
pub fn process_tomography(
    counts: &CountsTable,
    calibration: &StateCalibration,
    ideal: &GateUnitary,
) -> Result<ProcessReport> {
    let d = ideal.dim();
    let n_qubits = d.trailing_zeros() as usize;
    let mut data = TomographyDataset::default();
    for input in counts.inputs() {
        let label: PolarizationLabel = input.parse()?;
        if label.len() != n_qubits {
            return Err(Error::DimensionMismatch { expected: n_qubits, got: label.len() });
        }
        let rho_out = state_tomography(counts, &input, n_qubits, calibration)?;
        data.pairs.push((label.ket().projector(), rho_out));
    }
    if data.pairs.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let basis = Arc::new(pauli_product_basis(n_qubits, true));
    let superop = superop_from_pairs(&data, basis.clone())?;
    let beta = beta_tensor(basis)?;
    let chi = chi_from_superop(&superop, &beta)?;
    let theta = efficiency_matrix_from_chi(&chi);
    let (chi_ps, eta_bar_theta) = postselect_chi(&chi)?;
    let eta_bar_trace = chi.trace() / d as f64;
    let fidelity_ps = process_fidelity(&chi_ps, ideal);
    let chi_ps_adapted = change_chi_basis(&chi_ps, Arc::new(gate_adapted_basis(ideal)))?;
    let (hermiticity_error, min_eigenvalue) = chi_ps.invariant_report();
    Ok(ProcessReport {
        superop,
        chi,
        chi_ps,
        chi_ps_adapted,
        theta,
        eta_bar_theta,
        eta_bar_trace,
        fidelity_ps,
        fidelity_pro: eta_bar_theta * fidelity_ps,
        hermiticity_error,
        min_eigenvalue,
    })
}

/// Channel `ρ ↦ K ρ K†` for a single Kraus operator, as a χ matrix in `basis`.
pub fn chi_of_kraus(kraus: &[CMatrix], basis: Arc<OperatorBasis>) -> Result<ProcessMatrix> {
    let n = basis.len();
    let mut chi = CMatrix::zeros(n, n);
    for k in kraus {
        let c = basis.coefficients(k)?;
        chi += &c * c.adjoint();
    }
    ProcessMatrix::new(chi, basis, false)
}
