//! Pauli matrices and their Kronecker embeddings into the 8-dimensional
//! spin (x) valley (x) sublattice space.
//!
//! Basis ordering is frozen project-wide: spin outermost, sublattice
//! innermost, index = 4*i_spin + 2*i_valley + i_sublattice. The four 2x2
//! diagonal blocks then appear in the order (up K, up K', down K, down K').

use crate::matrix::{commutator, AlgebraError, OperatorMatrix};
use num_complex::Complex64;

/// The three two-level subsystems: sublattice (sigma), valley (tau), spin (s).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Sigma,
    Tau,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which Pauli matrix in which subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpaceIndex {
    pub space: Space,
    pub axis: Axis,
}

impl SpaceIndex {
    pub const fn new(space: Space, axis: Axis) -> Self {
        Self { space, axis }
    }
}

/// Plain 2x2 Pauli matrix.
pub fn pauli2(axis: Axis) -> OperatorMatrix {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let entries = match axis {
        Axis::X => vec![z, one, one, z],
        Axis::Y => vec![z, -i, i, z],
        Axis::Z => vec![one, z, z, -one],
    };
    OperatorMatrix::from_entries(2, entries)
}

/// Kronecker product in the fixed spin (x) valley (x) sublattice order.
pub fn kron3(
    s_part: &OperatorMatrix,
    tau_part: &OperatorMatrix,
    sigma_part: &OperatorMatrix,
) -> OperatorMatrix {
    assert_eq!(s_part.dim(), 2);
    assert_eq!(tau_part.dim(), 2);
    assert_eq!(sigma_part.dim(), 2);
    s_part.kron(tau_part).kron(sigma_part)
}

/// Embeds a single Pauli matrix into the 8x8 space with identities in the
/// other two subsystems. Only the z axis exists for the valley space.
pub fn pauli_operator(idx: SpaceIndex) -> Result<OperatorMatrix, AlgebraError> {
    if idx.space == Space::Tau && idx.axis != Axis::Z {
        return Err(AlgebraError::InvalidTauAxis);
    }
    let id = OperatorMatrix::identity(2);
    let p = pauli2(idx.axis);
    Ok(match idx.space {
        Space::S => kron3(&p, &id, &id),
        Space::Tau => kron3(&id, &p, &id),
        Space::Sigma => kron3(&id, &id, &p),
    })
}

// The embeddings below appear in every Hamiltonian and gauge-field
// expression, so they get short named constructors.

pub fn sigma_x() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::Sigma, Axis::X)).unwrap()
}
pub fn sigma_y() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::Sigma, Axis::Y)).unwrap()
}
pub fn sigma_z() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::Sigma, Axis::Z)).unwrap()
}
pub fn tau_z() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::Tau, Axis::Z)).unwrap()
}
pub fn spin_x() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::S, Axis::X)).unwrap()
}
pub fn spin_y() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::S, Axis::Y)).unwrap()
}
pub fn spin_z() -> OperatorMatrix {
    pauli_operator(SpaceIndex::new(Space::S, Axis::Z)).unwrap()
}

/// sigma_z tau_z s_z, the mass-term structure.
pub fn sigma_z_tau_z_spin_z() -> OperatorMatrix {
    &(&sigma_z() * &tau_z()) * &spin_z()
}
