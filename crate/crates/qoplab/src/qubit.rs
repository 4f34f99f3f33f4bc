//! Qubit building blocks shared by the protocol modules.
//!
//! Convention used throughout this crate: computational basis ordered
//! (|0⟩, |1⟩) with
//!
//! σₓ = |1⟩⟨0| + |0⟩⟨1|,   σ_y = −i(|1⟩⟨0| − |0⟩⟨1|),   σ_z = |1⟩⟨1| − |0⟩⟨0|.
//!
//! The excited state |1⟩ carries σ_z = +1 (the opposite sign choice from the
//! most common matrix tables; all protocol algebra in this crate is
//! self-consistent with it).

use num_complex::Complex;

use crate::error::Result;
use crate::qstate::{CMatrix, CVector, HilbertSpec, Ket, OpKind, Operator, C64};

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// σₓ = |1⟩⟨0| + |0⟩⟨1|.
pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

/// σ_y = −i(|1⟩⟨0| − |0⟩⟨1|).
pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)])
}

/// σ_z = |1⟩⟨1| − |0⟩⟨0|.
pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
}

pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

/// The four maximally entangled two-qubit states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellKind {
    /// (|01⟩ − |10⟩)/√2
    PsiMinus,
    /// (|01⟩ + |10⟩)/√2
    PsiPlus,
    /// (|00⟩ − |11⟩)/√2
    PhiMinus,
    /// (|00⟩ + |11⟩)/√2
    PhiPlus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] =
        [BellKind::PsiMinus, BellKind::PsiPlus, BellKind::PhiMinus, BellKind::PhiPlus];

    pub fn label(&self) -> &'static str {
        match self {
            BellKind::PsiMinus => "psi_minus",
            BellKind::PsiPlus => "psi_plus",
            BellKind::PhiMinus => "phi_minus",
            BellKind::PhiPlus => "phi_plus",
        }
    }
}

/// Bell state on a fresh 2-qubit space.
pub fn bell(kind: BellKind) -> Result<Ket> {
    let spec = HilbertSpec::qubits(2)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let amp = match kind {
        BellKind::PsiMinus => vec![c(0.0, 0.0), c(r, 0.0), c(-r, 0.0), c(0.0, 0.0)],
        BellKind::PsiPlus => vec![c(0.0, 0.0), c(r, 0.0), c(r, 0.0), c(0.0, 0.0)],
        BellKind::PhiMinus => vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-r, 0.0)],
        BellKind::PhiPlus => vec![c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)],
    };
    Ket::new(spec, CVector::from_vec(amp))
}

/// CNOT as a 4×4 matrix: first factor is the control.
pub fn cnot2() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    m[(2, 3)] = c(1.0, 0.0);
    m[(3, 2)] = c(1.0, 0.0);
    m
}

/// CNOT embedded in an n-qubit register.
pub fn cnot(spec: &HilbertSpec, control: usize, target: usize) -> Result<Operator> {
    Operator::embed(spec, &[control, target], &cnot2(), OpKind::Unitary)
}

/// Single-qubit Pauli embedded in an n-qubit register.
pub fn pauli_on(spec: &HilbertSpec, qubit: usize, pauli: &CMatrix) -> Result<Operator> {
    Operator::embed(spec, &[qubit], pauli, OpKind::Unitary)
}

/// General single-qubit pure state cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
pub fn bloch_ket(theta: f64, phi: f64) -> Result<Ket> {
    let spec = HilbertSpec::qubits(1)?;
    let amp = CVector::from_vec(vec![
        c((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]);
    Ket::normalized(spec, amp)
}
