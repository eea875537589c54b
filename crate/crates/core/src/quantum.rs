//! Foundational quantum-information types.
//!
//! Qubit ordering: the control qubit is always the first (most significant)
//! tensor factor, so the computational basis of two qubits is (HH, HV, VH, VV).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, hs_inner, CMatrix, CVector, C64, ONE, ZERO};

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const METRIC_CONDITION_LIMIT: f64 = 1e12;

/// Single-photon polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    /// Amplitudes in the (|H⟩, |V⟩) basis.
    pub fn amplitudes(self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Polarization::H => [ONE, ZERO],
            Polarization::V => [ZERO, ONE],
            Polarization::D => [c(s, 0.0), c(s, 0.0)],
            Polarization::A => [c(s, 0.0), c(-s, 0.0)],
            Polarization::R => [c(s, 0.0), c(0.0, -s)],
            Polarization::L => [c(s, 0.0), c(0.0, s)],
        }
    }

    /// The other member of the same basis.
    pub fn orthogonal(self) -> Polarization {
        match self {
            Polarization::H => Polarization::V,
            Polarization::V => Polarization::H,
            Polarization::D => Polarization::A,
            Polarization::A => Polarization::D,
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Polarization::H => 'H',
            Polarization::V => 'V',
            Polarization::D => 'D',
            Polarization::A => 'A',
            Polarization::R => 'R',
            Polarization::L => 'L',
        }
    }

    pub fn from_char(ch: char) -> Result<Self> {
        Ok(match ch {
            'H' => Polarization::H,
            'V' => Polarization::V,
            'D' => Polarization::D,
            'A' => Polarization::A,
            'R' => Polarization::R,
            'L' => Polarization::L,
            other => return Err(Error::Parse(format!("unknown polarization `{other}`"))),
        })
    }

    pub fn ket(self) -> Ket {
        Ket::from_vec(self.amplitudes().to_vec()).expect("polarization kets are normalized")
    }
}

/// Ordered tuple of single-photon polarizations, control first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolarizationLabel(pub Vec<Polarization>);

impl PolarizationLabel {
    pub fn new(photons: Vec<Polarization>) -> Self {
        PolarizationLabel(photons)
    }

    pub fn photons(&self) -> &[Polarization] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ket(&self) -> Ket {
        polarization_ket(self)
    }
}

impl FromStr for PolarizationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::Parse("empty polarization label".into()));
        }
        s.chars().map(Polarization::from_char).collect::<Result<Vec<_>>>().map(PolarizationLabel)
    }
}

impl fmt::Display for PolarizationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

/// Tensor-product ket of a polarization label in the computational basis.
pub fn polarization_ket(label: &PolarizationLabel) -> Ket {
    label
        .photons()
        .iter()
        .map(|p| p.ket())
        .reduce(|acc, k| acc.tensor(&k))
        .unwrap_or_else(|| Ket::from_vec(vec![ONE]).unwrap())
}

/// Possibly sub-normalized state vector; `norm² ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    amplitudes: CVector,
}

impl Ket {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n2 = amplitudes.norm_squared();
        if !(n2 > 0.0 && n2 <= 1.0 + NORM_TOL) || amplitudes.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParameter(format!("ket norm² {n2} outside (0, 1]")));
        }
        Ok(Ket { amplitudes })
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Result<Self> {
        Self::new(CVector::from_vec(amplitudes))
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized_from(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("cannot normalize a zero vector".into()));
        }
        Self::new(v.unscale(n))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_squared() - 1.0).abs() <= NORM_TOL
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket { amplitudes: self.amplitudes.kronecker(&other.amplitudes) }
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(linalg::outer(&self.amplitudes, &self.amplitudes))
    }
}

/// Hermitian PSD matrix with trace in [0, 1]; loss shows up as trace deficit.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), got: entries.ncols() });
        }
        let herm = linalg::hermiticity_error(&entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!("density matrix not Hermitian ({herm:.2e})")));
        }
        let min = linalg::eigvalsh(&entries).first().copied().unwrap_or(0.0);
        if min < -HERMITIAN_TOL {
            return Err(Error::InvalidParameter(format!("negative eigenvalue {min:.3e}")));
        }
        let tr = linalg::trace(&entries).re;
        if !(-HERMITIAN_TOL..=1.0 + HERMITIAN_TOL).contains(&tr) {
            return Err(Error::InvalidParameter(format!("trace {tr} outside [0, 1]")));
        }
        Ok(DensityMatrix { entries })
    }

    /// Wraps a matrix without validation (used for intermediate linear-algebra results).
    pub fn new_unchecked(entries: CMatrix) -> Self {
        DensityMatrix { entries }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    /// Rescaled to unit trace.
    pub fn normalized(&self) -> Result<DensityMatrix> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroTrace);
        }
        Ok(DensityMatrix { entries: self.entries.unscale(t) })
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, ket: &Ket) -> f64 {
        let v = ket.amplitudes();
        v.dotc(&(&self.entries * v)).re
    }

    /// Fidelity with a pure target state after normalizing `ρ` (postselected fidelity).
    pub fn fidelity_to_pure(&self, ket: &Ket) -> Result<f64> {
        Ok(self.normalized()?.expectation(ket) / ket.norm_squared())
    }
}

/// A basis of `d²` operators on a `d`-dimensional space together with its
/// metric `g_ij = tr(A_i† A_j)` and, when `g` is invertible, the dual basis.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    tag: String,
    dim: usize,
    elements: Vec<CMatrix>,
    metric: CMatrix,
    dual: Option<Vec<CMatrix>>,
    orthonormal: bool,
}

impl OperatorBasis {
    /// Builds the metric and, if it is invertible (condition number below 1e12),
    /// the dual basis. A non-invertible metric is not an error here; it surfaces
    /// from [`dual_basis`] and from [`OperatorBasis::coefficients`].
    pub fn new(tag: impl Into<String>, elements: Vec<CMatrix>) -> Result<Self> {
        let dim = elements.first().map(|m| m.nrows()).unwrap_or(0);
        if dim == 0 || elements.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: elements.len() });
        }
        if let Some(bad) = elements.iter().find(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.nrows().max(bad.ncols()) });
        }
        let n = elements.len();
        let metric = CMatrix::from_fn(n, n, |i, j| hs_inner(&elements[i], &elements[j]));
        let orthonormal = linalg::max_abs_diff(&metric, &linalg::identity(n)) <= HERMITIAN_TOL;
        let dual = if orthonormal {
            Some(elements.clone())
        } else {
            let cond = linalg::condition_number(&metric);
            if cond < METRIC_CONDITION_LIMIT {
                linalg::inverse(&metric).map(|h| {
                    (0..n)
                        .map(|j| {
                            elements
                                .iter()
                                .enumerate()
                                .fold(CMatrix::zeros(dim, dim), |acc, (i, a)| acc + a * h[(i, j)])
                        })
                        .collect()
                })
            } else {
                None
            }
        };
        Ok(OperatorBasis { tag: tag.into(), dim, elements, metric, dual, orthonormal })
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Dimension `d` of the state space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of elements, `d²`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn metric(&self) -> &CMatrix {
        &self.metric
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    pub fn has_dual(&self) -> bool {
        self.dual.is_some()
    }

    fn dual_elements(&self) -> Result<&[CMatrix]> {
        self.dual
            .as_deref()
            .ok_or_else(|| Error::SingularMetric(linalg::condition_number(&self.metric)))
    }

    /// Expansion coefficients `c_j = tr(A^j† B)` with `B = Σ_j A_j c_j`.
    pub fn coefficients(&self, op: &CMatrix) -> Result<CVector> {
        if op.nrows() != self.dim || op.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: op.nrows() });
        }
        let dual = self.dual_elements()?;
        Ok(CVector::from_iterator(dual.len(), dual.iter().map(|a| hs_inner(a, op))))
    }

    /// `Σ_j A_j c_j`.
    pub fn combine(&self, coefficients: &CVector) -> CMatrix {
        self.elements
            .iter()
            .zip(coefficients.iter())
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (a, c)| acc + a * *c)
    }
}

/// The dual basis `A^j = Σ_i A_i h_ij`, `h = g⁻¹`, satisfying `tr(A_i† A^j) = δ_ij`.
pub fn dual_basis(basis: &OperatorBasis) -> Result<OperatorBasis> {
    let dual = basis.dual_elements()?.to_vec();
    OperatorBasis::new(format!("dual({})", basis.tag), dual)
}

pub fn pauli_matrices() -> [CMatrix; 4] {
    let m = |a: [C64; 4]| CMatrix::from_row_slice(2, 2, &a);
    [
        m([ONE, ZERO, ZERO, ONE]),
        m([ZERO, ONE, ONE, ZERO]),
        m([ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        m([ONE, ZERO, ZERO, c(-1.0, 0.0)]),
    ]
}

/// Pauli string index → matrix, with digit order (I, X, Y, Z) and the first qubit
/// most significant, so that for two qubits element 0 is I⊗I, element 1 is I⊗X,
/// element 2 is I⊗Y and element 15 is Z⊗Z.
pub fn pauli_string(n_qubits: usize, index: usize) -> CMatrix {
    let paulis = pauli_matrices();
    (0..n_qubits)
        .map(|q| {
            let digit = (index / 4usize.pow((n_qubits - 1 - q) as u32)) % 4;
            paulis[digit].clone()
        })
        .reduce(|acc, p| linalg::kron(&acc, &p))
        .unwrap_or_else(|| linalg::identity(1))
}

/// The `4^n` tensor products of {I, X, Y, Z}. With `normalized`, each element is
/// divided by `√(2^n)` and the basis is orthonormal.
pub fn pauli_product_basis(n_qubits: usize, normalized: bool) -> OperatorBasis {
    assert!(n_qubits >= 1, "at least one qubit");
    let scale = if normalized { 1.0 / (2f64.powi(n_qubits as i32)).sqrt() } else { 1.0 };
    let elements = (0..4usize.pow(n_qubits as u32))
        .map(|i| pauli_string(n_qubits, i).scale(scale))
        .collect();
    let tag = if normalized { format!("pauli{n_qubits}/norm") } else { format!("pauli{n_qubits}") };
    OperatorBasis::new(tag, elements).expect("Pauli products form a basis")
}

/// Operator basis of projectors onto all product states built from `singles`
/// (e.g. H, V, D, R for the standard tomography input set).
pub fn product_state_basis(n_qubits: usize, singles: &[Polarization]) -> Result<OperatorBasis> {
    let labels = product_labels(n_qubits, singles);
    let tag = format!(
        "states{}:{}",
        n_qubits,
        singles.iter().map(|p| p.as_char()).collect::<String>()
    );
    OperatorBasis::new(tag, labels.iter().map(|l| l.ket().projector().into_matrix()).collect())
}

/// All labels of `n` photons drawn from `singles`, first photon most significant.
pub fn product_labels(n: usize, singles: &[Polarization]) -> Vec<PolarizationLabel> {
    let k = singles.len();
    (0..k.pow(n as u32))
        .map(|idx| {
            PolarizationLabel(
                (0..n).map(|q| singles[(idx / k.pow((n - 1 - q) as u32)) % k]).collect(),
            )
        })
        .collect()
}

/// Projector basis `|u_i⟩⟨u_j|` of the computational basis; element index `i·d + j`.
pub fn matrix_unit_basis(dim: usize) -> OperatorBasis {
    let elements = (0..dim * dim)
        .map(|a| {
            let mut m = CMatrix::zeros(dim, dim);
            m[(a / dim, a % dim)] = ONE;
            m
        })
        .collect();
    OperatorBasis::new(format!("units{dim}"), elements).expect("matrix units form a basis")
}

/// Unitary matrix, `U†U = 1` within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct GateUnitary(CMatrix);

impl GateUnitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !linalg::is_unitary(&m, 1e-12) {
            return Err(Error::InvalidParameter("matrix is not unitary".into()));
        }
        Ok(GateUnitary(m))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        Ket { amplitudes: &self.0 * ket.amplitudes() }
    }
}

/// diag(1, −1, 1, 1) in (HH, HV, VH, VV).
pub fn cphase_unitary() -> GateUnitary {
    let d = CVector::from_vec(vec![ONE, -ONE, ONE, ONE]);
    GateUnitary(CMatrix::from_diagonal(&d))
}

/// Basis conventions for the CNOT view of the gate.
///
/// The CPHASE phase sits on |HV⟩, so with the target analyzed in {D, A} the
/// target flips exactly when the control is H. `target_rotation` maps H→D and
/// V→A; conjugating CPHASE with it on the target yields a CNOT in the {H, V}
/// target basis with the same control convention.
#[derive(Debug, Clone)]
pub struct CnotConvention {
    pub control_basis: [Polarization; 2],
    pub target_basis: [Polarization; 2],
    pub flipping_control: Polarization,
    pub target_rotation: CMatrix,
}

impl Default for CnotConvention {
    fn default() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CnotConvention {
            control_basis: [Polarization::H, Polarization::V],
            target_basis: [Polarization::D, Polarization::A],
            flipping_control: Polarization::H,
            target_rotation: CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]),
        }
    }
}

/// `(1 ⊗ W) · CPHASE · (1 ⊗ W)†` with the rotation `W` of [`CnotConvention`].
pub fn cnot_equivalent_unitary() -> (GateUnitary, CnotConvention) {
    let conv = CnotConvention::default();
    let rot = linalg::kron(&linalg::identity(2), &conv.target_rotation);
    let u = &rot * cphase_unitary().matrix() * rot.adjoint();
    (GateUnitary::new(u).expect("conjugated unitary"), conv)
}

/// Haar-uniform pure state: normalized vector of i.i.d. standard complex Gaussians.
pub fn haar_random_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Ket {
    assert!(d >= 1);
    loop {
        let v = CVector::from_iterator(
            d,
            (0..d).map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal))),
        );
        if let Ok(k) = Ket::normalized_from(v) {
            return k;
        }
    }
}

/// Shared handle used by matrices that carry their basis.
pub type BasisRef = Arc<OperatorBasis>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn label(s: &str) -> PolarizationLabel {
        s.parse().unwrap()
    }

    #[test]
    fn polarization_kets() {
        let d = polarization_ket(&label("D"));
        assert!((d.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((d.amplitudes()[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let h = polarization_ket(&label("H"));
        assert_eq!(h.amplitudes().as_slice(), &[ONE, ZERO]);
        let dd = polarization_ket(&label("DD"));
        for a in dd.amplitudes().iter() {
            assert!((a - c(0.5, 0.0)).norm() < 1e-15);
        }
        assert!(dd.is_normalized());
    }

    #[test]
    fn basis_pairs_are_orthogonal() {
        for p in Polarization::ALL {
            assert_eq!(p.ket().inner(&p.orthogonal().ket()).norm(), 0.0);
        }
    }

    #[test]
    fn label_round_trip_and_errors() {
        assert_eq!(label("HDRL").to_string(), "HDRL");
        assert!("HX".parse::<PolarizationLabel>().is_err());
        assert!("".parse::<PolarizationLabel>().is_err());
    }

    #[test]
    fn cphase_action() {
        let u = cphase_unitary();
        let hv = u.apply(&label("HV").ket());
        assert!((hv.amplitudes()[1] + ONE).norm() < 1e-15);
        let vv = u.apply(&label("VV").ket());
        assert!((vv.amplitudes()[3] - ONE).norm() < 1e-15);
        let bell = Ket::from_vec(vec![c(0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
        let out = u.apply(&label("DD").ket());
        assert!((out.inner(&bell).norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gates_square_to_identity() {
        let cp = cphase_unitary();
        let (cn, conv) = cnot_equivalent_unitary();
        let id = linalg::identity(4);
        assert!(linalg::max_abs_diff(&(cp.matrix() * cp.matrix()), &id) < 1e-14);
        assert!(linalg::max_abs_diff(&(cn.matrix() * cn.matrix()), &id) < 1e-14);
        // Control H flips the target in the {H, V} basis after conjugation.
        let out = cn.apply(&label("HH").ket());
        assert!((out.amplitudes()[1].norm() - 1.0).abs() < 1e-14);
        assert_eq!(conv.flipping_control, Polarization::H);
        // Bare CPHASE flips D↔A on the target when the control is H.
        let out = cp.apply(&label("HD").ket());
        assert!((out.inner(&label("HA").ket()).norm() - 1.0).abs() < 1e-14);
        let out = cp.apply(&label("VD").ket());
        assert!((out.inner(&label("VD").ket()).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_basis_layout() {
        let b = pauli_product_basis(2, false);
        let ix = linalg::kron(&pauli_matrices()[0], &pauli_matrices()[1]);
        assert!(linalg::max_abs_diff(b.element(1), &ix) < 1e-15);
        assert!(!b.is_orthonormal());
        let n = pauli_product_basis(2, true);
        assert!(n.is_orthonormal());
        assert!(linalg::max_abs_diff(n.metric(), &linalg::identity(16)) < 1e-12);
        let one = pauli_product_basis(1, true);
        assert!((hs_inner(one.element(1), one.element(1)).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dual_of_orthonormal_is_itself() {
        let b = pauli_product_basis(2, true);
        let d = dual_basis(&b).unwrap();
        for (x, y) in b.elements().iter().zip(d.elements()) {
            assert!(linalg::max_abs_diff(x, y) < 1e-15);
        }
    }

    #[test]
    fn dual_of_product_states() {
        use Polarization::*;
        let b = product_state_basis(2, &[H, V, D, R]).unwrap();
        let d = dual_basis(&b).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let v = hs_inner(b.element(i), d.element(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - c(expect, 0.0)).norm() < 1e-10);
            }
        }
        let mut r = rng::stream(3, &[]);
        for _ in 0..100 {
            let op = CMatrix::from_fn(4, 4, |_, _| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5));
            let back = b.combine(&b.coefficients(&op).unwrap());
            assert!(linalg::max_abs_diff(&op, &back) < 1e-9);
        }
    }

    #[test]
    fn dependent_set_has_singular_metric() {
        let mut els = pauli_product_basis(1, true).elements().to_vec();
        els[3] = els[2].clone();
        let b = OperatorBasis::new("dep", els).unwrap();
        assert!(matches!(dual_basis(&b), Err(Error::SingularMetric(_))));
        assert!(b.coefficients(&linalg::identity(2)).is_err());
    }

    #[test]
    fn haar_sampling() {
        let mut r1 = rng::stream(11, &[]);
        let mut r2 = rng::stream(11, &[]);
        let a: Vec<Ket> = (0..5).map(|_| haar_random_ket(4, &mut r1)).collect();
        let b: Vec<Ket> = (0..5).map(|_| haar_random_ket(4, &mut r2)).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|k| k.is_normalized()));
        let one = haar_random_ket(1, &mut r1);
        assert!((one.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn haar_first_moment_is_maximally_mixed() {
        let d = 4;
        let n = 100_000;
        let mut r = rng::stream(2024, &[]);
        let mut sum = CMatrix::zeros(d, d);
        let mut sum_sq = nalgebra::DMatrix::<f64>::zeros(d, d);
        for _ in 0..n {
            let p = haar_random_ket(d, &mut r).projector().into_matrix();
            for (k, z) in p.iter().enumerate() {
                sum_sq[k] += z.re * z.re + z.im * z.im;
            }
            sum += p;
        }
        let mean = sum.unscale(n as f64);
        for i in 0..d {
            for j in 0..d {
                let k = j * d + i;
                let expect = if i == j { 0.25 } else { 0.0 };
                let m = mean[(i, j)];
                let var = sum_sq[k] / n as f64 - m.norm_sqr();
                let se = (var / n as f64).sqrt();
                assert!((m - c(expect, 0.0)).norm() < 3.0 * se * std::f64::consts::SQRT_2 + 1e-12,
                    "entry ({i},{j}) = {m} vs {expect}, se {se}");
            }
        }
    }

    #[test]
    fn density_matrix_validation() {
        let rho = label("D").ket().projector();
        assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        let bad = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.2, 0.0), c(-0.2, 0.0)]));
        assert!(DensityMatrix::new(bad).is_err());
        let half = DensityMatrix::new(rho.matrix().scale(0.5)).unwrap();
        assert!((half.fidelity_to_pure(&label("D").ket()).unwrap() - 1.0).abs() < 1e-14);
    }
}
