//! Position-affine kinematic gauge potential of the interaction Hamiltonian
//! and its commutator field strength.
//!
//! The potential components are A_i(r) = C_i + D_ix x + D_iy y with constant
//! matrix coefficients. Position operators commute, so the field strength
//! F_xy = dA_y/dx - dA_x/dy - (i/hbar)[A_x, A_y] is assembled symbolically
//! in the affine coefficients and must come out position-independent.
//!
//! Note the Delta-proportional coefficients are anti-Hermitian (they carry an
//! explicit i); only the full contraction v_F alpha.(p - A) is Hermitian.

use crate::hamiltonian::MomentumPoint;
use crate::matrix::{commutator, OperatorMatrix};
use crate::params::PhysParams;
use crate::pauli::{sigma_x, sigma_y, spin_x, spin_y, spin_z, tau_z};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaugeError {
    #[error("field strength is position-dependent (max varying coefficient {0:.3e}); the affine field is inconsistent")]
    PositionDependentFieldStrength(f64),
}

/// Matrix-valued gauge potential, affine in position:
/// A_i(r) = C_i + D[i][0] x + D[i][1] y.
#[derive(Debug, Clone)]
pub struct AffineGaugeField {
    /// Constant parts (C_x, C_y).
    pub constant: [OperatorMatrix; 2],
    /// Affine coefficients; `linear[i][j]` multiplies r_j in A_i.
    pub linear: [[OperatorMatrix; 2]; 2],
}

impl AffineGaugeField {
    /// Evaluates A_i at a position (x, y).
    pub fn at(&self, axis: usize, x: f64, y: f64) -> OperatorMatrix {
        let lin = &(&self.linear[axis][0].scale_re(x)) + &self.linear[axis][1].scale_re(y);
        &self.constant[axis] + &lin
    }
}

/// The gauge potential that turns the free Dirac Hamiltonian into the full
/// interaction Hamiltonian via v_F alpha.(p - A):
/// A_x = i(D/2v)sigma_y s_z - (l/v)s_y + (eB/2v)tau_z y,
/// A_y = -i(D/2v)sigma_x tau_z s_z + (l/v)s_x - (eB/2v)tau_z x.
pub fn km_gauge_field(params: &PhysParams) -> AffineGaugeField {
    let v = params.v_f;
    let i_half_gap = Complex64::new(0.0, params.delta_so / (2.0 * v));
    let c_x = &sigma_y() * &spin_z();
    let c_x = &c_x.scale(i_half_gap) - &spin_y().scale_re(params.lambda_r / v);
    let c_y = &(&sigma_x() * &tau_z()) * &spin_z();
    let c_y = &c_y.scale(-i_half_gap) + &spin_x().scale_re(params.lambda_r / v);

    let b_coeff = params.e_charge * params.b_field / (2.0 * v);
    let zero = OperatorMatrix::zeros(8);
    AffineGaugeField {
        constant: [c_x, c_y],
        linear: [
            [zero.clone(), tau_z().scale_re(b_coeff)],
            [tau_z().scale_re(-b_coeff), zero],
        ],
    }
}

/// v_F alpha.(p - A(r)): the kinematic-momentum contraction of the field.
/// For the field of `km_gauge_field` this reproduces the full interaction
/// Hamiltonian (including the magnetic position terms) term by term.
pub fn kinetic_contraction(
    field: &AffineGaugeField,
    params: &PhysParams,
    p: MomentumPoint,
    x: f64,
    y: f64,
) -> OperatorMatrix {
    let pi_x = &OperatorMatrix::identity(8).scale_re(p.px) - &field.at(0, x, y);
    let pi_y = &OperatorMatrix::identity(8).scale_re(p.py) - &field.at(1, x, y);
    let ax = &(&sigma_x() * &tau_z()) * &pi_x;
    let ay = &sigma_y() * &pi_y;
    (&ax + &ay).scale_re(params.v_f)
}

/// F_xy = dA_y/dx - dA_x/dy - (i/hbar)[A_x, A_y], with x and y treated as
/// commuting scalars. Every position-dependent coefficient of the commutator
/// must vanish; a nonvanishing one signals an inconsistent field.
pub fn field_strength(
    field: &AffineGaugeField,
    params: &PhysParams,
) -> Result<OperatorMatrix, GaugeError> {
    let [cx, cy] = &field.constant;
    let [[dxx, dxy], [dyx, dyy]] = &field.linear;

    // [A_x, A_y] sorted by powers of x and y
    let coeff_x = &commutator(cx, dyx) + &commutator(dxx, cy);
    let coeff_y = &commutator(cx, dyy) + &commutator(dxy, cy);
    let coeff_xx = commutator(dxx, dyx);
    let coeff_yy = commutator(dxy, dyy);
    let coeff_xy = &commutator(dxx, dyy) + &commutator(dxy, dyx);

    let scale = field.constant[0]
        .max_abs()
        .max(field.constant[1].max_abs())
        .max(1.0);
    let worst = [&coeff_x, &coeff_y, &coeff_xx, &coeff_yy, &coeff_xy]
        .iter()
        .map(|m| m.max_abs())
        .fold(0.0, f64::max);
    if worst > 1e-12 * scale * scale {
        return Err(GaugeError::PositionDependentFieldStrength(worst));
    }

    let curl = dyx - dxy;
    let comm = commutator(cx, cy).scale(Complex64::new(0.0, -1.0 / params.hbar));
    Ok(&curl + &comm)
}

/// Closed form of the field strength for the interaction gauge field,
/// assembled from the coupling constants. The B term carries the sign that
/// the definition produces for the symmetric-gauge components above.
pub fn km_field_strength_closed_form(params: &PhysParams) -> OperatorMatrix {
    let v = params.v_f;
    let hbar = params.hbar;
    let delta = params.delta_so;
    let lam = params.lambda_r;

    let b_term = tau_z().scale_re(-params.e_charge * params.b_field / v);
    let mass_term = (&sigma_z_tau_z()).scale_re(-delta * delta / (2.0 * hbar * v * v));
    let cross = &(&sigma_y() * &spin_y()) + &(&(&sigma_x() * &tau_z()) * &spin_x());
    let cross_term = cross.scale(Complex64::new(0.0, delta * lam / (hbar * v * v)));
    let rashba_term = spin_z().scale_re(2.0 * lam * lam / (hbar * v * v));
    &(&(&b_term + &mass_term) + &cross_term) + &rashba_term
}

fn sigma_z_tau_z() -> OperatorMatrix {
    &crate::pauli::sigma_z() * &tau_z()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_km_hamiltonian;
    use crate::matrix::DEFAULT_TOL;
    use crate::pauli::sigma_z;
    use rand::{Rng, SeedableRng};

    fn rng() -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(41)
    }

    #[test]
    fn spin_conserving_field_has_no_position_terms() {
        let mut params = PhysParams::natural();
        params.delta_so = 0.9;
        params.v_f = 1.3;
        let field = km_gauge_field(&params);
        let i = Complex64::new(0.0, 1.0);
        let cx_expect = (&sigma_y() * &spin_z()).scale(i * (params.delta_so / (2.0 * params.v_f)));
        let cy_expect = (&(&sigma_x() * &tau_z()) * &spin_z())
            .scale(-i * (params.delta_so / (2.0 * params.v_f)));
        assert!(field.constant[0].approx_eq(&cx_expect, 0.0));
        assert!(field.constant[1].approx_eq(&cy_expect, 0.0));
        for row in &field.linear {
            for m in row {
                assert!(m.is_zero(0.0));
            }
        }
    }

    #[test]
    fn pure_magnetic_field_is_symmetric_gauge() {
        let mut params = PhysParams::natural();
        params.delta_so = 0.0;
        params.b_field = 1.7;
        params.v_f = 0.8;
        let field = km_gauge_field(&params);
        let coeff = params.e_charge * params.b_field / (2.0 * params.v_f);
        assert!(field.constant[0].is_zero(0.0));
        assert!(field.constant[1].is_zero(0.0));
        assert!(field.linear[0][1].approx_eq(&tau_z().scale_re(coeff), 0.0));
        assert!(field.linear[1][0].approx_eq(&tau_z().scale_re(-coeff), 0.0));
    }

    #[test]
    fn contraction_reproduces_the_interaction_hamiltonian() {
        let mut r = rng();
        for _ in 0..5 {
            let mut params = PhysParams::natural();
            params.delta_so = r.gen_range(0.1..2.0);
            params.lambda_r = r.gen_range(0.0..2.0);
            params.b_field = r.gen_range(0.0..2.0);
            params.v_f = r.gen_range(0.5..2.0);
            let p = MomentumPoint::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
            let (x, y) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));

            let field = km_gauge_field(&params);
            let lhs = kinetic_contraction(&field, &params, p, x, y);

            // momentum-space part plus the explicit magnetic position term
            let momentum_part = build_km_hamiltonian(&params, p, true).unwrap();
            let b_term = &sigma_x().scale_re(y) - &(&sigma_y() * &tau_z()).scale_re(x);
            let b_term = b_term.scale_re(-params.e_charge * params.b_field / 2.0);
            let rhs = &momentum_part + &b_term;
            assert!(
                lhs.approx_eq(&rhs, 1e-12),
                "contraction mismatch {:.3e}",
                lhs.max_abs_diff(&rhs)
            );
        }
    }

    #[test]
    fn field_strength_matches_closed_form_for_random_couplings() {
        let mut r = rng();
        for _ in 0..20 {
            let mut params = PhysParams::natural();
            params.delta_so = r.gen_range(0.0..2.0);
            params.lambda_r = r.gen_range(0.0..2.0);
            params.b_field = r.gen_range(0.0..2.0);
            params.v_f = r.gen_range(0.5..2.0);
            params.hbar = r.gen_range(0.5..2.0);
            let f = field_strength(&km_gauge_field(&params), &params).unwrap();
            let closed = km_field_strength_closed_form(&params);
            assert!(f.approx_eq(&closed, DEFAULT_TOL));
        }
    }

    #[test]
    fn field_strength_special_cases() {
        // no Rashba, no B: pure mass-term curvature
        let mut params = PhysParams::natural();
        params.delta_so = 0.9;
        let f = field_strength(&km_gauge_field(&params), &params).unwrap();
        let expect = (&sigma_z() * &tau_z())
            .scale_re(-params.delta_so * params.delta_so / (2.0 * params.hbar * params.v_f * params.v_f));
        assert!(f.approx_eq(&expect, DEFAULT_TOL));
        assert!(f.is_hermitian(DEFAULT_TOL));

        // pure magnetic field: Abelian symmetric-gauge curl
        let mut params = PhysParams::natural();
        params.delta_so = 0.0;
        params.b_field = 1.3;
        let f = field_strength(&km_gauge_field(&params), &params).unwrap();
        let expect = tau_z().scale_re(-params.e_charge * params.b_field / params.v_f);
        assert!(f.approx_eq(&expect, DEFAULT_TOL));
        assert!(f.is_hermitian(DEFAULT_TOL));
    }

    #[test]
    fn field_strength_is_hermitian_when_cross_term_absent() {
        let mut r = rng();
        for _ in 0..10 {
            let mut params = PhysParams::natural();
            params.b_field = r.gen_range(0.0..2.0);
            params.v_f = r.gen_range(0.5..2.0);
            // either of the two couplings alone keeps F Hermitian
            if r.gen_bool(0.5) {
                params.delta_so = r.gen_range(0.0..2.0);
                params.lambda_r = 0.0;
            } else {
                params.delta_so = 0.0;
                params.lambda_r = r.gen_range(0.0..2.0);
            }
            let f = field_strength(&km_gauge_field(&params), &params).unwrap();
            assert!(f.is_hermitian(DEFAULT_TOL));
        }
    }

    #[test]
    fn inconsistent_affine_field_is_rejected() {
        // linear coefficient that fails to commute with the constant part
        let zero = OperatorMatrix::zeros(8);
        let field = AffineGaugeField {
            constant: [sigma_x(), zero.clone()],
            linear: [
                [zero.clone(), zero.clone()],
                [sigma_y(), zero],
            ],
        };
        let err = field_strength(&field, &PhysParams::natural()).unwrap_err();
        assert!(matches!(
            err,
            GaugeError::PositionDependentFieldStrength(_)
        ));
    }
}
