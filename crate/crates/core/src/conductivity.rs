//! The conductivity engines: force balance on the kinematic momentum,
//! Berry-curvature integration, the Kubo formula, and the Landau-level
//! Hall conductivity. All spin results come out in units of e/2pi, charge
//! results in units of e^2/h, with the raw coefficient available too.
//!
//! Fermi-surface integrals reduce to the radial energy variable through
//! p dp = E dE / v_F^2. The occupied-states integral is evaluated through
//! its complement: over each 2x2 block the band-summed Berry flux vanishes,
//! so integrating the conduction-band curvature over E >= E_F with an
//! overall minus sign counts exactly the filled states (full valence band
//! plus conduction states up to E_F). The integrands decay as 1/E^2, so the
//! truncated tail beyond E_cut is added in closed form.

use crate::fw::{berry_curvature, CurvatureMethod};
use crate::hamiltonian::{
    energy, momentum_at_energy, BlockLabel, MomentumPoint, PerBlock, WaveVector,
};
use crate::matrix::OperatorMatrix;
use crate::params::PhysParams;
use crate::pauli::{pauli2, sigma_x, sigma_y, sigma_z, sigma_z_tau_z_spin_z, tau_z, Axis};
use crate::quadrature::adaptive_simpson;
use crate::spectra::{gap_carrier_density, landau_ladder, number_operator, CarrierDensities,
    SpectraError};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConductivityError {
    #[error("Fermi level {e_f} lies below the gap edge {delta_so}")]
    FermiLevelBelowGap { e_f: f64, delta_so: f64 },
    #[error("spin Hall engines need a positive gap, got delta_so = {0}")]
    GapRequired(f64),
    #[error("force balance is derived for lambda_R = B = 0, got lambda_R = {lambda_r}, B = {b_field}")]
    CouplingsNotSupported { lambda_r: f64, b_field: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidQuadratureSpec(String),
    #[error("spin current came out non-scalar (max deviation {0:.3e}); the concentration matrices are inconsistent")]
    NonScalarCurrent(f64),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// In-plane constant electric field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EFieldVector {
    pub ex: f64,
    pub ey: f64,
}

impl EFieldVector {
    pub const fn new(ex: f64, ey: f64) -> Self {
        Self { ex, ey }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ex * self.ex + self.ey * self.ey
    }

    /// epsilon_ij E_j for i = x, y.
    pub fn curl_contraction(&self) -> [f64; 2] {
        [self.ey, -self.ex]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConductivityMethod {
    ForceBalance,
    Berry,
    Kubo,
    Iqhe,
}

impl ConductivityMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ForceBalance => "force_balance",
            Self::Berry => "berry",
            Self::Kubo => "kubo",
            Self::Iqhe => "iqhe",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConductivityUnits {
    /// Spin conductivity in multiples of e/(2 pi).
    EOver2Pi,
    /// Charge conductivity in multiples of e^2/h.
    E2OverH,
}

/// One engine's output. `total` follows the spin convention
/// (up K + up K') - (down K + down K') when per-block values exist.
#[derive(Debug, Clone, PartialEq)]
pub struct ConductivityResult {
    pub method: ConductivityMethod,
    pub per_block: Option<PerBlock<f64>>,
    pub total: f64,
    pub units: ConductivityUnits,
    pub quadrature_error: f64,
}

impl ConductivityResult {
    fn from_blocks(
        method: ConductivityMethod,
        per_block: PerBlock<f64>,
        quadrature_error: f64,
    ) -> Self {
        let total = per_block.up_k + per_block.up_kp - per_block.down_k - per_block.down_kp;
        Self {
            method,
            per_block: Some(per_block),
            total,
            units: ConductivityUnits::EOver2Pi,
            quadrature_error,
        }
    }

    /// The dimensional coefficient, total times e/(2 pi) or e^2/h.
    pub fn raw_total(&self, params: &PhysParams) -> f64 {
        match self.units {
            ConductivityUnits::EOver2Pi => self.total * params.e_charge / (2.0 * PI),
            ConductivityUnits::E2OverH => {
                self.total * params.e_charge * params.e_charge / params.planck()
            }
        }
    }

    /// CSV row matching the header in [`csv_header`].
    pub fn csv_row(&self, ef_over_delta: f64) -> String {
        let block = |v: Option<f64>| match v {
            Some(x) => format!("{x:.11e}"),
            None => String::new(),
        };
        format!(
            "{},{:.11e},{:.11e},{},{},{},{},{:.11e}",
            self.method.name(),
            ef_over_delta,
            self.total,
            block(self.per_block.as_ref().map(|b| b.up_k)),
            block(self.per_block.as_ref().map(|b| b.up_kp)),
            block(self.per_block.as_ref().map(|b| b.down_k)),
            block(self.per_block.as_ref().map(|b| b.down_kp)),
            self.quadrature_error
        )
    }
}

/// Column names of the conductivity CSV rows.
pub fn csv_header() -> &'static str {
    "method,E_F_over_delta,sigma_total,sigma_block_up_K,sigma_block_up_Kp,sigma_block_down_K,sigma_block_down_Kp,quad_error"
}

/// Quadrature scheme for the Fermi-surface integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadScheme {
    /// Adaptive Simpson on the radial energy integral.
    AdaptiveRadial,
    /// Midpoint Riemann sum on a polar momentum grid.
    PolarGrid { n_radial: usize, n_angular: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Energy cutoff E_cut = e_cut_factor * delta; the exact 1/E^2 tail
    /// beyond the cutoff is added in closed form.
    pub e_cut_factor: f64,
    pub rel_tol: f64,
    pub scheme: QuadScheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            e_cut_factor: 1e4,
            rel_tol: 1e-10,
            scheme: QuadScheme::AdaptiveRadial,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), ConductivityError> {
        if !(self.e_cut_factor >= 10.0) {
            return Err(ConductivityError::InvalidQuadratureSpec(format!(
                "e_cut_factor must be at least 10, got {}",
                self.e_cut_factor
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(ConductivityError::InvalidQuadratureSpec(format!(
                "rel_tol must lie in (0, 1e-3], got {}",
                self.rel_tol
            )));
        }
        if let QuadScheme::PolarGrid {
            n_radial,
            n_angular,
        } = self.scheme
        {
            if n_radial < 8 || n_angular < 8 {
                return Err(ConductivityError::InvalidQuadratureSpec(format!(
                    "polar grid too coarse: {n_radial} x {n_angular} (need at least 8 each)"
                )));
            }
        }
        Ok(())
    }
}

// --------------------------------------------------------------------------
// IQHE
// --------------------------------------------------------------------------

/// Hall conductivity with N filled Landau levels, -N e^2/h, obtained through
/// the drift-velocity chain rather than the closed form: the force balance
/// fixes v_i = (c/B) epsilon_ij E_j, the current is j = -e kappa v, and the
/// conductivity is read off j_i = sigma epsilon_ij E_j.
pub fn sigma_iqhe(
    highest_filled: usize,
    params: &PhysParams,
) -> Result<ConductivityResult, ConductivityError> {
    let ladder = landau_ladder(params, highest_filled, false)?;
    let probe = EFieldVector::new(0.0, 1.0);
    let eps_e = probe.curl_contraction();
    let drift = [
        params.c_light / params.b_field * eps_e[0],
        params.c_light / params.b_field * eps_e[1],
    ];
    let current = [
        -params.e_charge * ladder.kappa * drift[0],
        -params.e_charge * ladder.kappa * drift[1],
    ];
    let sigma_raw =
        (current[0] * probe.ey - current[1] * probe.ex) / probe.norm_sqr();
    let unit = params.e_charge * params.e_charge / params.planck();
    Ok(ConductivityResult {
        method: ConductivityMethod::Iqhe,
        per_block: None,
        total: sigma_raw / unit,
        units: ConductivityUnits::E2OverH,
        quadrature_error: 0.0,
    })
}

// --------------------------------------------------------------------------
// Force balance
// --------------------------------------------------------------------------

/// Velocity operators and the three addends of the kinematic-momentum
/// equation of motion, for the spin-conserving Hamiltonian in a constant
/// electric field.
pub struct ForceOperators {
    velocity: [OperatorMatrix; 2],
    gauge_constant: [OperatorMatrix; 2],
    efield: EFieldVector,
    delta_so: f64,
    hbar: f64,
    v_f: f64,
    e_charge: f64,
}

/// Builds the velocity and force operators. Only the spin-conserving
/// setting is supported: lambda_R and B must vanish.
pub fn force_operators(
    params: &PhysParams,
    efield: EFieldVector,
) -> Result<ForceOperators, ConductivityError> {
    if params.lambda_r != 0.0 || params.b_field != 0.0 {
        return Err(ConductivityError::CouplingsNotSupported {
            lambda_r: params.lambda_r,
            b_field: params.b_field,
        });
    }
    let field = crate::gauge::km_gauge_field(params);
    Ok(ForceOperators {
        velocity: [
            (&sigma_x() * &tau_z()).scale_re(params.v_f),
            sigma_y().scale_re(params.v_f),
        ],
        gauge_constant: field.constant,
        efield,
        delta_so: params.delta_so,
        hbar: params.hbar,
        v_f: params.v_f,
        e_charge: params.e_charge,
    })
}

impl ForceOperators {
    /// dx/dt and dy/dt, the constant matrices v_F sigma_x tau_z and v_F sigma_y.
    pub fn velocity(&self, axis: usize) -> &OperatorMatrix {
        &self.velocity[axis]
    }

    /// (i delta/hbar) sigma_z tau_z s_z Pi_i evaluated at p, with
    /// Pi_i = p_i - A_i the kinematic momentum of the spin-conserving field.
    pub fn kinematic_term(&self, axis: usize, p: MomentumPoint) -> OperatorMatrix {
        let p_i = [p.px, p.py][axis];
        let pi = &OperatorMatrix::identity(8).scale_re(p_i) - &self.gauge_constant[axis];
        (&sigma_z_tau_z_spin_z() * &pi).scale(Complex64::new(0.0, self.delta_so / self.hbar))
    }

    /// -(delta^2/(2 hbar v_F^2)) epsilon_ij (dr_j/dt) sigma_z tau_z, the
    /// Lorentz-force analogue driven by the non-Abelian field strength.
    pub fn lorentz_term(&self, axis: usize) -> OperatorMatrix {
        let eps_velocity = match axis {
            0 => self.velocity[1].clone(),
            _ => (&self.velocity[0]).neg_clone(),
        };
        let coeff = -self.delta_so * self.delta_so / (2.0 * self.hbar * self.v_f * self.v_f);
        (&eps_velocity * &(&sigma_z() * &tau_z())).scale_re(coeff)
    }

    /// e E_i times the identity.
    pub fn electric_term(&self, axis: usize) -> OperatorMatrix {
        let e_i = [self.efield.ex, self.efield.ey][axis];
        OperatorMatrix::identity(8).scale_re(self.e_charge * e_i)
    }

    /// Full force operator, the sum of the three addends.
    pub fn total(&self, axis: usize, p: MomentumPoint) -> OperatorMatrix {
        &(&self.kinematic_term(axis, p) + &self.lorentz_term(axis)) + &self.electric_term(axis)
    }
}

impl OperatorMatrix {
    fn neg_clone(&self) -> OperatorMatrix {
        self.scale_re(-1.0)
    }
}

/// The 8x8 Hall velocity operator, the electric-field-dependent part of the
/// force-free velocity: dr_i/dt = -(2 e hbar v^2/delta^2) eps_ij E_j sigma_z tau_z.
pub fn hall_velocity_operator(
    efield: EFieldVector,
    delta_so: f64,
    params: &PhysParams,
) -> Result<[OperatorMatrix; 2], ConductivityError> {
    if delta_so <= 0.0 {
        return Err(ConductivityError::GapRequired(delta_so));
    }
    let coeff = -2.0 * params.e_charge * params.hbar * params.v_f * params.v_f
        / (delta_so * delta_so);
    let eps_e = efield.curl_contraction();
    let structure = &sigma_z() * &tau_z();
    Ok([
        structure.scale_re(coeff * eps_e[0]),
        structure.scale_re(coeff * eps_e[1]),
    ])
}

/// Per-block Hall velocity, the 2x2 restriction of the operator above:
/// the K valley carries -(2 e hbar v^2/delta^2) eps_ij E_j sigma_z, the
/// K' valley the opposite sign, for both spins.
pub fn hall_velocity(
    label: BlockLabel,
    efield: EFieldVector,
    delta_so: f64,
    params: &PhysParams,
) -> Result<[OperatorMatrix; 2], ConductivityError> {
    if delta_so <= 0.0 {
        return Err(ConductivityError::GapRequired(delta_so));
    }
    let coeff = -label.valley_sign() * 2.0 * params.e_charge * params.hbar * params.v_f
        * params.v_f
        / (delta_so * delta_so);
    let eps_e = efield.curl_contraction();
    let sz = pauli2(Axis::Z);
    Ok([
        sz.scale_re(coeff * eps_e[0]),
        sz.scale_re(coeff * eps_e[1]),
    ])
}

/// Electric-field sector of the force equation with the Hall velocity
/// substituted: e E_i - (delta^2/(2 hbar v^2)) eps_ij (dr_Hj/dt) sigma_z tau_z.
/// A matrix identity: both components vanish.
pub fn efield_cancellation_residual(
    efield: EFieldVector,
    delta_so: f64,
    params: &PhysParams,
) -> Result<[OperatorMatrix; 2], ConductivityError> {
    let hall = hall_velocity_operator(efield, delta_so, params)?;
    let coeff = delta_so * delta_so / (2.0 * params.hbar * params.v_f * params.v_f);
    let structure = &sigma_z() * &tau_z();
    let residual = |axis: usize| {
        // eps_ij picks the other component with the sign of the symbol
        let eps_hall = match axis {
            0 => hall[1].clone(),
            _ => hall[0].neg_clone(),
        };
        let e_i = [efield.ex, efield.ey][axis];
        let field_term = (&eps_hall * &structure).scale_re(coeff);
        &OperatorMatrix::identity(8).scale_re(params.e_charge * e_i) - &field_term
    };
    Ok([residual(0), residual(1)])
}

fn scalar_of(m: &OperatorMatrix) -> Result<f64, ConductivityError> {
    let s = 0.5 * (m.get(0, 0) + m.get(1, 1)).re;
    let deviation = m
        .max_abs_diff(&OperatorMatrix::identity(m.dim()).scale_re(s));
    let scale = m.max_abs().max(1.0);
    if deviation > 1e-12 * scale {
        return Err(ConductivityError::NonScalarCurrent(deviation));
    }
    Ok(s)
}

/// Spin Hall current (j_x, j_y) with the Fermi level at the top of the gap:
/// per spin, the concentration-weighted Hall velocities of both valleys are
/// summed; the spin current is (hbar/2) times the up/down difference, which
/// comes out proportional to the identity, and its scalar coefficient is
/// returned per component.
pub fn spin_hall_current(
    efield: EFieldVector,
    delta_so: f64,
    params: &PhysParams,
) -> Result<[f64; 2], ConductivityError> {
    if delta_so <= 0.0 {
        return Err(ConductivityError::GapRequired(delta_so));
    }
    let n = gap_carrier_density(delta_so, params);
    let dens = CarrierDensities::new(n, 0.0);
    let k0 = WaveVector::new(0.0, 0.0);
    let mut current = [Ok(0.0), Ok(0.0)];
    for axis in 0..2 {
        let mut per_spin = [OperatorMatrix::zeros(2), OperatorMatrix::zeros(2)];
        for label in BlockLabel::ALL {
            let conc = number_operator(label, k0, dens, delta_so, params);
            let velocity = hall_velocity(label, efield, delta_so, params)?;
            let contribution = &conc * &velocity[axis];
            let spin_idx = usize::from(label.spin_sign() < 0.0);
            per_spin[spin_idx] = &per_spin[spin_idx] + &contribution;
        }
        let spin_current = (&per_spin[0] - &per_spin[1]).scale_re(0.5 * params.hbar);
        current[axis] = scalar_of(&spin_current);
    }
    Ok([current[0].clone()?, current[1].clone()?])
}

/// Extracts sigma from j_i = sigma epsilon_ij E_j.
fn hall_coefficient(current: [f64; 2], efield: EFieldVector) -> f64 {
    (current[0] * efield.ey - current[1] * efield.ex) / efield.norm_sqr()
}

/// Spin Hall conductivity from the vanishing-force condition, -1 in units
/// of e/(2 pi) independent of the gap. The whole chain runs: Hall
/// velocities, zero-momentum concentration matrices, currents, coefficient
/// extraction.
pub fn sigma_force_balance(
    delta_so: f64,
    params: &PhysParams,
) -> Result<ConductivityResult, ConductivityError> {
    if params.lambda_r != 0.0 || params.b_field != 0.0 {
        return Err(ConductivityError::CouplingsNotSupported {
            lambda_r: params.lambda_r,
            b_field: params.b_field,
        });
    }
    if delta_so <= 0.0 {
        return Err(ConductivityError::GapRequired(delta_so));
    }
    let probe = EFieldVector::new(1.0, 0.0);
    let unit = params.e_charge / (2.0 * PI);

    let current = spin_hall_current(probe, delta_so, params)?;
    let total_raw = hall_coefficient(current, probe);

    // per-block coefficient from the trace-averaged block current; the
    // up/down difference convention is applied when totalling
    let n = gap_carrier_density(delta_so, params);
    let dens = CarrierDensities::new(n, 0.0);
    let k0 = WaveVector::new(0.0, 0.0);
    let mut block_values = Vec::with_capacity(4);
    for label in BlockLabel::ALL {
        let conc = number_operator(label, k0, dens, delta_so, params);
        let velocity = hall_velocity(label, probe, delta_so, params)?;
        let mut block_current = [0.0; 2];
        for axis in 0..2 {
            block_current[axis] =
                0.25 * params.hbar * (&conc * &velocity[axis]).trace().re;
        }
        block_values.push(hall_coefficient(block_current, probe) / unit);
    }
    let per_block = PerBlock {
        up_k: block_values[0],
        up_kp: block_values[1],
        down_k: block_values[2],
        down_kp: block_values[3],
    };

    let mut result = ConductivityResult::from_blocks(
        ConductivityMethod::ForceBalance,
        per_block,
        0.0,
    );
    // the direct chain value is authoritative; the block decomposition must
    // reassemble to it exactly
    debug_assert!((result.total - total_raw / unit).abs() <= 1e-12);
    result.total = total_raw / unit;
    Ok(result)
}

// --------------------------------------------------------------------------
// Berry and Kubo
// --------------------------------------------------------------------------

fn check_fermi_level(e_f: f64, delta_so: f64) -> Result<(), ConductivityError> {
    if delta_so <= 0.0 {
        return Err(ConductivityError::GapRequired(delta_so));
    }
    if e_f < delta_so {
        return Err(ConductivityError::FermiLevelBelowGap { e_f, delta_so });
    }
    Ok(())
}

/// Radial integral of `g` from e_f to the cutoff plus the exact tail of a
/// 1/E^2 integrand, with the quadrature error estimate.
fn radial_with_tail(
    g: &dyn Fn(f64) -> f64,
    e_f: f64,
    e_cut: f64,
    rel_tol: f64,
) -> (f64, f64) {
    let q = adaptive_simpson(g, e_f, e_cut, rel_tol);
    (q.value + g(e_cut) * e_cut, q.abs_error)
}

/// Spin Hall conductivity as the integral of the Berry curvature over the
/// filled states, per block and totalled as the up/down difference.
pub fn sigma_berry(
    e_f: f64,
    delta_so: f64,
    params: &PhysParams,
    quad: &QuadratureSpec,
) -> Result<ConductivityResult, ConductivityError> {
    check_fermi_level(e_f, delta_so)?;
    quad.validate()?;
    let e_cut = (quad.e_cut_factor * delta_so).max(2.0 * e_f);
    let unit = params.e_charge / (2.0 * PI);
    // occupied-states integral via the conduction-band complement
    let prefactor = -params.e_charge / (8.0 * PI * PI * params.hbar * params.hbar);

    let flux = |label: BlockLabel, p: MomentumPoint| {
        *berry_curvature(p, delta_so, params, CurvatureMethod::Analytic).get(label)
    };

    match quad.scheme {
        QuadScheme::AdaptiveRadial => {
            let v2 = params.v_f * params.v_f;
            let mut per_block = PerBlock::from_fn(|_| 0.0);
            let mut err_units = 0.0;
            for label in BlockLabel::ALL {
                let g = |e: f64| {
                    let p = momentum_at_energy(e, delta_so, params);
                    flux(label, MomentumPoint::new(p, 0.0)) * e / v2
                };
                let (integral, err) = radial_with_tail(&g, e_f, e_cut, quad.rel_tol);
                let value = prefactor * 2.0 * PI * integral / unit;
                err_units += (prefactor * 2.0 * PI * err / unit).abs();
                match label {
                    BlockLabel::UP_K => per_block.up_k = value,
                    BlockLabel::UP_KPRIME => per_block.up_kp = value,
                    BlockLabel::DOWN_K => per_block.down_k = value,
                    BlockLabel::DOWN_KPRIME => per_block.down_kp = value,
                }
            }
            Ok(ConductivityResult::from_blocks(
                ConductivityMethod::Berry,
                per_block,
                err_units,
            ))
        }
        QuadScheme::PolarGrid {
            n_radial,
            n_angular,
        } => {
            let run = |nr: usize, na: usize| {
                polar_grid_flux_sum(e_f, e_cut, delta_so, params, nr, na)
                    .map(|s| prefactor * s / unit)
            };
            let fine = run(n_radial, n_angular);
            let coarse = run((n_radial / 2).max(8), (n_angular / 2).max(8));
            let mut per_block = PerBlock::from_fn(|_| 0.0);
            per_block.up_k = fine.up_k;
            per_block.up_kp = fine.up_kp;
            per_block.down_k = fine.down_k;
            per_block.down_kp = fine.down_kp;
            let err = (fine.up_k - coarse.up_k).abs()
                + (fine.up_kp - coarse.up_kp).abs()
                + (fine.down_k - coarse.down_k).abs()
                + (fine.down_kp - coarse.down_kp).abs();
            Ok(ConductivityResult::from_blocks(
                ConductivityMethod::Berry,
                per_block,
                err,
            ))
        }
    }
}

/// Midpoint sum of the curvature over the annulus E_F <= E <= E_cut in
/// polar momentum coordinates, plus the closed tail; returns the raw
/// per-block 2D integrals (the same quantity the radial route computes
/// times 2 pi).
fn polar_grid_flux_sum(
    e_f: f64,
    e_cut: f64,
    delta_so: f64,
    params: &PhysParams,
    n_radial: usize,
    n_angular: usize,
) -> PerBlock<f64> {
    let p_inner = momentum_at_energy(e_f, delta_so, params);
    let p_outer = momentum_at_energy(e_cut, delta_so, params);
    let dr = (p_outer - p_inner) / n_radial as f64;
    let dphi = 2.0 * PI / n_angular as f64;
    let mut sums = PerBlock::from_fn(|_| 0.0);
    for ir in 0..n_radial {
        let r = p_inner + (ir as f64 + 0.5) * dr;
        for ia in 0..n_angular {
            let phi = (ia as f64 + 0.5) * dphi;
            let p = MomentumPoint::new(r * phi.cos(), r * phi.sin());
            let f = berry_curvature(p, delta_so, params, CurvatureMethod::Analytic);
            let w = r * dr * dphi;
            sums.up_k += f.up_k * w;
            sums.up_kp += f.up_kp * w;
            sums.down_k += f.down_k * w;
            sums.down_kp += f.down_kp * w;
        }
    }
    // exact tail of the 1/E^2 radial integrand beyond the cutoff
    let v2 = params.v_f * params.v_f;
    let p_cut = MomentumPoint::new(p_outer, 0.0);
    let f_cut = berry_curvature(p_cut, delta_so, params, CurvatureMethod::Analytic);
    let tail = |f: f64| 2.0 * PI * f * e_cut * e_cut / v2;
    sums.up_k += tail(f_cut.up_k);
    sums.up_kp += tail(f_cut.up_kp);
    sums.down_k += tail(f_cut.down_k);
    sums.down_kp += tail(f_cut.down_kp);
    sums
}

/// The Kubo-formula integrand of one block at one wave vector:
/// 2 Im[<a|dy/dt|p><p|dx/dt|a>] / (4 E^2), with the block velocity
/// operators (the K' valley flips the sign of dx/dt).
pub fn kubo_integrand(
    label: BlockLabel,
    k: WaveVector,
    delta_so: f64,
    params: &PhysParams,
) -> f64 {
    let spinor = crate::spectra::block_eigenspinors(label, k, delta_so, params);
    let vx = pauli2(Axis::X).scale_re(label.valley_sign() * params.v_f);
    let vy = pauli2(Axis::Y).scale_re(params.v_f);
    let apply = |m: &OperatorMatrix, v: &[Complex64; 2]| {
        [
            m.get(0, 0) * v[0] + m.get(0, 1) * v[1],
            m.get(1, 0) * v[0] + m.get(1, 1) * v[1],
        ]
    };
    let inner = |a: &[Complex64; 2], b: &[Complex64; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
    let vy_p = apply(&vy, &spinor.positive);
    let vx_a = apply(&vx, &spinor.negative);
    let element = inner(&spinor.negative, &vy_p) * inner(&spinor.positive, &vx_a);
    let e = energy(k.momentum(params.hbar), delta_so, params);
    2.0 * element.im / (4.0 * e * e)
}

/// Spin Hall conductivity from the Kubo formula, radial quadrature of the
/// interband matrix elements per block.
pub fn sigma_kubo(
    e_f: f64,
    delta_so: f64,
    params: &PhysParams,
    quad: &QuadratureSpec,
) -> Result<ConductivityResult, ConductivityError> {
    check_fermi_level(e_f, delta_so)?;
    quad.validate()?;
    let e_cut = (quad.e_cut_factor * delta_so).max(2.0 * e_f);
    let unit = params.e_charge / (2.0 * PI);
    let hbar2 = params.hbar * params.hbar;
    // e hbar^2/2 prefactor, 1/(2 pi)^2 measure, and the occupied-states
    // orientation folded together
    let prefactor = -params.e_charge * hbar2 / (4.0 * PI);

    let mut per_block = PerBlock::from_fn(|_| 0.0);
    let mut err_units = 0.0;
    for label in BlockLabel::ALL {
        let g = |e: f64| {
            let p = momentum_at_energy(e, delta_so, params);
            let k = WaveVector::new(p / params.hbar, 0.0);
            kubo_integrand(label, k, delta_so, params) * e / (hbar2 * params.v_f * params.v_f)
        };
        let (integral, err) = radial_with_tail(&g, e_f, e_cut, quad.rel_tol);
        let value = prefactor * integral / unit;
        err_units += (prefactor * err / unit).abs();
        match label {
            BlockLabel::UP_K => per_block.up_k = value,
            BlockLabel::UP_KPRIME => per_block.up_kp = value,
            BlockLabel::DOWN_K => per_block.down_k = value,
            BlockLabel::DOWN_KPRIME => per_block.down_kp = value,
        }
    }
    Ok(ConductivityResult::from_blocks(
        ConductivityMethod::Kubo,
        per_block,
        err_units,
    ))
}

// --------------------------------------------------------------------------
// Cross-method comparison
// --------------------------------------------------------------------------

/// Side-by-side run of the applicable engines at one Fermi level.
#[derive(Debug, Clone)]
pub struct MethodComparison {
    pub e_f: f64,
    pub delta_so: f64,
    pub results: Vec<ConductivityResult>,
    /// Pairwise relative differences of the totals.
    pub pairwise: Vec<(ConductivityMethod, ConductivityMethod, f64)>,
    pub force_balance_applicable: bool,
}

/// Runs the Berry and Kubo engines, and force balance when the Fermi level
/// sits at the gap edge, then reports pairwise relative differences.
pub fn compare_methods(
    e_f: f64,
    delta_so: f64,
    params: &PhysParams,
    quad: &QuadratureSpec,
) -> Result<MethodComparison, ConductivityError> {
    let mut results = vec![
        sigma_berry(e_f, delta_so, params, quad)?,
        sigma_kubo(e_f, delta_so, params, quad)?,
    ];
    let at_gap_edge = (e_f - delta_so).abs() <= 1e-12 * delta_so;
    let force_balance_applicable =
        at_gap_edge && params.lambda_r == 0.0 && params.b_field == 0.0;
    if force_balance_applicable {
        results.push(sigma_force_balance(delta_so, params)?);
    }
    let mut pairwise = Vec::new();
    for i in 0..results.len() {
        for j in (i + 1)..results.len() {
            let a = results[i].total;
            let b = results[j].total;
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            pairwise.push((results[i].method, results[j].method, rel));
        }
    }
    Ok(MethodComparison {
        e_f,
        delta_so,
        results,
        pairwise,
        force_balance_applicable,
    })
}

impl fmt::Display for MethodComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "spin Hall conductivity at E_F/delta = {:.6}",
            self.e_f / self.delta_so
        )?;
        for r in &self.results {
            write!(
                f,
                "  {:<13} total = {:+.12} (e/2pi)",
                r.method.name(),
                r.total
            )?;
            if let Some(b) = &r.per_block {
                write!(
                    f,
                    "  blocks [{:+.6} {:+.6} {:+.6} {:+.6}]",
                    b.up_k, b.up_kp, b.down_k, b.down_kp
                )?;
            }
            writeln!(f, "  quad_err = {:.2e}", r.quadrature_error)?;
        }
        if !self.force_balance_applicable {
            writeln!(
                f,
                "  force_balance not applicable (requires E_F at the gap edge, lambda_R = B = 0)"
            )?;
        }
        for (a, b, rel) in &self.pairwise {
            writeln!(f, "  |{} - {}| / max = {:.3e}", a.name(), b.name(), rel)?;
        }
        Ok(())
    }
}
