//! Block eigenspinors in the chiral parameterization, carrier-number
//! operators and their zero-momentum concentration matrices, the Dirac
//! density of states, and the Landau-level ladder.

use crate::hamiltonian::{BlockLabel, Spin, Valley, WaveVector};
use crate::matrix::OperatorMatrix;
use crate::params::PhysParams;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("Landau ladder needs B > 0, got {0}")]
    NonPositiveField(f64),
    #[error("highest filled Landau index must be at least 1, got {0}")]
    InvalidLevelIndex(usize),
}

/// Positive/negative energy eigenspinors of one block, parameterized by the
/// chiral angles cos(theta) = delta/E and tan(phi) = k_y/k_x.
#[derive(Debug, Clone)]
pub struct BlockSpinor {
    pub label: BlockLabel,
    pub theta: f64,
    pub phi: f64,
    pub positive: [Complex64; 2],
    pub negative: [Complex64; 2],
}

/// The four eigenspinor families. The K-valley blocks carry exp(+i phi),
/// the K'-valley blocks exp(-i phi); phi = 0 at k = 0 by convention
/// (theta = 0 there, so nothing observable depends on it).
pub fn block_eigenspinors(
    label: BlockLabel,
    k: WaveVector,
    delta_so: f64,
    params: &PhysParams,
) -> BlockSpinor {
    let theta = (params.v_f * params.hbar * k.norm()).atan2(delta_so);
    let phi = if k.kx == 0.0 && k.ky == 0.0 {
        0.0
    } else {
        k.ky.atan2(k.kx)
    };
    let c = Complex64::new((0.5 * theta).cos(), 0.0);
    let s = Complex64::new((0.5 * theta).sin(), 0.0);
    let phase = match label.valley {
        Valley::K => Complex64::new(0.0, phi).exp(),
        Valley::KPrime => Complex64::new(0.0, -phi).exp(),
    };
    let (positive, negative) = match (label.spin, label.valley) {
        (Spin::Up, Valley::K) => ([c, s * phase], [s, -c * phase]),
        (Spin::Up, Valley::KPrime) => ([s, -c * phase], [c, s * phase]),
        (Spin::Down, Valley::K) => ([s, c * phase], [c, -s * phase]),
        (Spin::Down, Valley::KPrime) => ([c, -s * phase], [s, c * phase]),
    };
    BlockSpinor {
        label,
        theta,
        phi,
        positive,
        negative,
    }
}

/// Particle/antiparticle (hole) concentrations per area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierDensities {
    pub n_p: f64,
    pub n_a: f64,
}

impl CarrierDensities {
    pub fn new(n_p: f64, n_a: f64) -> Self {
        assert!(n_p >= 0.0 && n_a >= 0.0, "concentrations are non-negative");
        Self { n_p, n_a }
    }

    /// Net carrier concentration n = n_p - n_a.
    pub fn net(&self) -> f64 {
        self.n_p - self.n_a
    }
}

/// Number operator n_p |p><p| + n_a |a><a| of one block.
pub fn number_operator(
    label: BlockLabel,
    k: WaveVector,
    dens: CarrierDensities,
    delta_so: f64,
    params: &PhysParams,
) -> OperatorMatrix {
    let spinor = block_eigenspinors(label, k, delta_so, params);
    let mut m = OperatorMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            let v = dens.n_p * spinor.positive[i] * spinor.positive[j].conj()
                + dens.n_a * spinor.negative[i] * spinor.negative[j].conj();
            m.set(i, j, v);
        }
    }
    m
}

/// Density of states of one gapped Dirac branch, |E|/(2 pi v_F^2 hbar^2).
pub fn dos_dirac(e: f64, params: &PhysParams) -> f64 {
    e.abs() / (2.0 * std::f64::consts::PI * params.v_f * params.v_f * params.hbar * params.hbar)
}

/// Net carrier concentration with the Fermi level at the top of the gap:
/// n = delta^2/(4 pi hbar^2 v_F^2), the integral of the DOS over (0, delta).
pub fn gap_carrier_density(delta_so: f64, params: &PhysParams) -> f64 {
    debug_assert!(delta_so > 0.0);
    delta_so * delta_so
        / (4.0 * std::f64::consts::PI * params.hbar * params.hbar * params.v_f * params.v_f)
}

/// Landau-level ladder with the lowest `highest_filled + 1` levels and the
/// carrier concentration between the ground level and the Fermi level.
#[derive(Debug, Clone)]
pub struct LandauLadder {
    /// Cyclotron frequency eB/(mc).
    pub omega_c: f64,
    /// Level energies hbar omega_c (n + 1/2) for n = 0..=highest_filled.
    pub levels: Vec<f64>,
    /// Index of the highest filled level.
    pub highest_filled: usize,
    /// States per area per energy, m/(2 pi hbar^2).
    pub rho_l: f64,
    /// Carriers per area, rho_l (E_F - E_0) = eBN/(hc).
    pub kappa: f64,
    /// Ground level energy hbar omega_c / 2.
    pub ground_energy: f64,
    /// Reported Fermi level; at the highest filled level, or halfway to the
    /// next level when `fermi_between` was requested (kappa is unchanged:
    /// there are no states inside the gap).
    pub fermi_energy: f64,
}

pub fn landau_ladder(
    params: &PhysParams,
    highest_filled: usize,
    fermi_between: bool,
) -> Result<LandauLadder, SpectraError> {
    if params.b_field <= 0.0 {
        return Err(SpectraError::NonPositiveField(params.b_field));
    }
    if highest_filled < 1 {
        return Err(SpectraError::InvalidLevelIndex(highest_filled));
    }
    let omega_c = params.e_charge * params.b_field / (params.mass * params.c_light);
    let level = |n: usize| params.hbar * omega_c * (n as f64 + 0.5);
    let levels: Vec<f64> = (0..=highest_filled).map(level).collect();
    let rho_l =
        params.mass / (2.0 * std::f64::consts::PI * params.hbar * params.hbar);
    let ground_energy = level(0);
    let kappa = rho_l * (level(highest_filled) - ground_energy);
    let fermi_energy = if fermi_between {
        params.hbar * omega_c * (highest_filled as f64 + 1.0)
    } else {
        level(highest_filled)
    };
    Ok(LandauLadder {
        omega_c,
        levels,
        highest_filled,
        rho_l,
        kappa,
        ground_energy,
        fermi_energy,
    })
}
