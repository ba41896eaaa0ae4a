//! The model Hamiltonians: free Dirac, full Kane-Mele with Rashba and
//! magnetic terms (momentum-space part), the spin-conserving reduction and
//! its four 2x2 valley/spin blocks.

use crate::matrix::OperatorMatrix;
use crate::params::PhysParams;
use crate::pauli::{pauli2, sigma_x, sigma_y, sigma_z_tau_z_spin_z, spin_x, spin_y, tau_z, Axis};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("B = {0} but the position-dependent magnetic term is excluded here; it lives in the affine gauge field (pass acknowledge_b_exclusion = true)")]
    MagneticTermExcluded(f64),
}

/// Classical momentum point (p = hbar k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumPoint {
    pub px: f64,
    pub py: f64,
}

impl MomentumPoint {
    pub const fn new(px: f64, py: f64) -> Self {
        Self { px, py }
    }

    pub const ZERO: Self = Self::new(0.0, 0.0);

    pub fn norm(&self) -> f64 {
        self.px.hypot(self.py)
    }

    pub fn wave_vector(&self, hbar: f64) -> WaveVector {
        WaveVector::new(self.px / hbar, self.py / hbar)
    }
}

/// Wave vector k; the eigenspinor families are parameterized in k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    pub kx: f64,
    pub ky: f64,
}

impl WaveVector {
    pub const fn new(kx: f64, ky: f64) -> Self {
        Self { kx, ky }
    }

    pub fn norm(&self) -> f64 {
        self.kx.hypot(self.ky)
    }

    pub fn momentum(&self, hbar: f64) -> MomentumPoint {
        MomentumPoint::new(hbar * self.kx, hbar * self.ky)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valley {
    K,
    KPrime,
}

/// One of the four (spin, valley) sectors, mapped to storage blocks 0..3
/// in the order (up K, up K', down K, down K').
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockLabel {
    pub spin: Spin,
    pub valley: Valley,
}

impl BlockLabel {
    pub const UP_K: Self = Self {
        spin: Spin::Up,
        valley: Valley::K,
    };
    pub const UP_KPRIME: Self = Self {
        spin: Spin::Up,
        valley: Valley::KPrime,
    };
    pub const DOWN_K: Self = Self {
        spin: Spin::Down,
        valley: Valley::K,
    };
    pub const DOWN_KPRIME: Self = Self {
        spin: Spin::Down,
        valley: Valley::KPrime,
    };

    pub const ALL: [Self; 4] = [Self::UP_K, Self::UP_KPRIME, Self::DOWN_K, Self::DOWN_KPRIME];

    /// Storage block index 0..3.
    pub fn index(&self) -> usize {
        2 * usize::from(self.spin == Spin::Down) + usize::from(self.valley == Valley::KPrime)
    }

    /// s_z eigenvalue, +1 for spin up.
    pub fn spin_sign(&self) -> f64 {
        match self.spin {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    /// tau_z eigenvalue, +1 in the K valley.
    pub fn valley_sign(&self) -> f64 {
        match self.valley {
            Valley::K => 1.0,
            Valley::KPrime => -1.0,
        }
    }

    /// Sign of the sigma_z mass term in this block (= spin_sign * valley_sign).
    pub fn mass_sign(&self) -> f64 {
        self.spin_sign() * self.valley_sign()
    }

    /// Column name used in CSV output.
    pub fn name(&self) -> &'static str {
        match (self.spin, self.valley) {
            (Spin::Up, Valley::K) => "up_K",
            (Spin::Up, Valley::KPrime) => "up_Kp",
            (Spin::Down, Valley::K) => "down_K",
            (Spin::Down, Valley::KPrime) => "down_Kp",
        }
    }
}

/// Per-block container in the fixed storage order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerBlock<T> {
    pub up_k: T,
    pub up_kp: T,
    pub down_k: T,
    pub down_kp: T,
}

impl<T> PerBlock<T> {
    pub fn from_fn(mut f: impl FnMut(BlockLabel) -> T) -> Self {
        Self {
            up_k: f(BlockLabel::UP_K),
            up_kp: f(BlockLabel::UP_KPRIME),
            down_k: f(BlockLabel::DOWN_K),
            down_kp: f(BlockLabel::DOWN_KPRIME),
        }
    }

    pub fn get(&self, label: BlockLabel) -> &T {
        match (label.spin, label.valley) {
            (Spin::Up, Valley::K) => &self.up_k,
            (Spin::Up, Valley::KPrime) => &self.up_kp,
            (Spin::Down, Valley::K) => &self.down_k,
            (Spin::Down, Valley::KPrime) => &self.down_kp,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerBlock<U> {
        PerBlock {
            up_k: f(&self.up_k),
            up_kp: f(&self.up_kp),
            down_k: f(&self.down_k),
            down_kp: f(&self.down_kp),
        }
    }
}

/// Free Dirac Hamiltonian v_F (sigma_x tau_z p_x + sigma_y p_y) as 8x8.
pub fn build_h0(params: &PhysParams, p: MomentumPoint) -> OperatorMatrix {
    let kinetic_x = (&sigma_x() * &tau_z()).scale_re(params.v_f * p.px);
    let kinetic_y = sigma_y().scale_re(params.v_f * p.py);
    &kinetic_x + &kinetic_y
}

/// Momentum-space part of the full interaction Hamiltonian: free Dirac plus
/// the mass term and the Rashba term. The position-dependent magnetic term
/// is represented only through the affine gauge field; a nonzero B must be
/// acknowledged explicitly so the caller cannot drop it by accident.
pub fn build_km_hamiltonian(
    params: &PhysParams,
    p: MomentumPoint,
    acknowledge_b_exclusion: bool,
) -> Result<OperatorMatrix, ModelError> {
    if params.b_field != 0.0 && !acknowledge_b_exclusion {
        return Err(ModelError::MagneticTermExcluded(params.b_field));
    }
    let mass = sigma_z_tau_z_spin_z().scale_re(params.delta_so);
    let rashba_a = &(&sigma_x() * &tau_z()) * &spin_y();
    let rashba_b = &sigma_y() * &spin_x();
    let rashba = (&rashba_a - &rashba_b).scale_re(params.lambda_r);
    Ok(&(&build_h0(params, p) + &mass) + &rashba)
}

/// The 2x2 Hamiltonian of one (spin, valley) block: the K' valley flips the
/// p_x term, the mass sign follows sigma_z tau_z s_z.
pub fn block_hamiltonian(
    label: BlockLabel,
    p: MomentumPoint,
    delta_so: f64,
    params: &PhysParams,
) -> OperatorMatrix {
    let sx = pauli2(Axis::X).scale_re(params.v_f * label.valley_sign() * p.px);
    let sy = pauli2(Axis::Y).scale_re(params.v_f * p.py);
    let mass = pauli2(Axis::Z).scale_re(label.mass_sign() * delta_so);
    &(&sx + &sy) + &mass
}

/// Positive branch of E = +-sqrt(v_F^2 p^2 + delta^2).
pub fn energy(p: MomentumPoint, delta_so: f64, params: &PhysParams) -> f64 {
    (params.v_f * p.norm()).hypot(delta_so)
}

/// Both dispersion branches, (E_plus, E_minus).
pub fn dispersion(p: MomentumPoint, delta_so: f64, params: &PhysParams) -> (f64, f64) {
    let e = energy(p, delta_so, params);
    (e, -e)
}

/// Momentum above the gap at which the positive branch reaches `e`;
/// the inverse of `energy` for e >= delta.
pub fn momentum_at_energy(e: f64, delta_so: f64, params: &PhysParams) -> f64 {
    debug_assert!(e >= delta_so.abs());
    (e * e - delta_so * delta_so).max(0.0).sqrt() / params.v_f
}
