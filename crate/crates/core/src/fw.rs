//! Momentum-space pure gauge field from the block Foldy-Wouthuysen
//! transformation, its positive-energy projection, and the Abelian Berry
//! connection and curvature that fall out of the projection.
//!
//! Three independent routes to the curvature are kept side by side:
//! the closed form, a finite-difference curl of the connection, and a
//! plaquette (link-variable) evaluation on the block eigenspinors.

use crate::gauge::km_gauge_field;
use crate::hamiltonian::{
    block_hamiltonian, energy, BlockLabel, MomentumPoint, PerBlock,
};
use crate::matrix::{commutator, OperatorMatrix};
use crate::params::PhysParams;
use crate::pauli::{pauli2, sigma_x, sigma_y, sigma_z, spin_z, tau_z, Axis};
use crate::spectra::block_eigenspinors;
use num_complex::Complex64;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BerryError {
    #[error("plaquette grid too coarse: {0} cells per side (need at least 8)")]
    GridTooCoarse(usize),
}

/// Per-block Berry curvature values at one momentum point.
pub type CurvatureField = PerBlock<f64>;

/// How to evaluate the momentum-space gauge field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FwGaugeMethod {
    /// Closed-form matrix expression.
    Analytic,
    /// i hbar U dU+/dp by central differences with the given step.
    Differential { step: f64 },
}

/// Default finite-difference step, scaled to the larger of |p| and the
/// gap momentum delta/v_F so truncation and roundoff stay balanced.
pub fn default_fd_step(p: MomentumPoint, delta_so: f64, params: &PhysParams) -> f64 {
    1e-5 * p.norm().max(delta_so / params.v_f)
}

fn block_diag4(blocks: [OperatorMatrix; 4]) -> OperatorMatrix {
    let mut m = OperatorMatrix::zeros(8);
    for (b, block) in blocks.iter().enumerate() {
        debug_assert_eq!(block.dim(), 2);
        for i in 0..2 {
            for j in 0..2 {
                m.set(2 * b + i, 2 * b + j, block.get(i, j));
            }
        }
    }
    m
}

/// Block-diagonal unitary that rotates the spin-conserving Hamiltonian onto
/// E sigma_z tau_z s_z. Each block is (+- sigma_z H + E)/sqrt(2E(E+delta))
/// with the sign pattern of the mass term.
pub fn fw_unitary(p: MomentumPoint, delta_so: f64, params: &PhysParams) -> OperatorMatrix {
    let e = energy(p, delta_so, params);
    let norm = 1.0 / (2.0 * e * (e + delta_so)).sqrt();
    let sz = pauli2(Axis::Z);
    let blocks = BlockLabel::ALL.map(|label| {
        let h = block_hamiltonian(label, p, delta_so, params);
        let rotated = (&sz * &h).scale_re(label.mass_sign());
        (&rotated + &OperatorMatrix::identity(2).scale_re(e)).scale_re(norm)
    });
    block_diag4(blocks)
}

/// The pure gauge field i hbar U dU+/dp of the transformation above.
pub fn fw_gauge_field(
    p: MomentumPoint,
    delta_so: f64,
    params: &PhysParams,
    method: FwGaugeMethod,
) -> (OperatorMatrix, OperatorMatrix) {
    match method {
        FwGaugeMethod::Analytic => fw_gauge_analytic(p, delta_so, params),
        FwGaugeMethod::Differential { step } => fw_gauge_differential(p, delta_so, params, step),
    }
}

fn fw_gauge_analytic(
    p: MomentumPoint,
    delta_so: f64,
    params: &PhysParams,
) -> (OperatorMatrix, OperatorMatrix) {
    let v = params.v_f;
    let e = energy(p, delta_so, params);
    let den = params.hbar / (2.0 * e * e * (e + delta_so));

    let sy_sz = &sigma_y() * &spin_z();
    let sxtz_sz = &(&sigma_x() * &tau_z()) * &spin_z();
    let sztz = &sigma_z() * &tau_z();
    // (sigma_y p_x - sigma_x tau_z p_y) s_z, shared by both components
    let chiral = &(&sigma_y().scale_re(p.px) - &(&sigma_x() * &tau_z()).scale_re(p.py)) * &spin_z();

    let ax_terms = &(&sy_sz.scale_re(v * e * (e + delta_so)) - &chiral.scale_re(v * v * v * p.px))
        + &sztz.scale_re(v * v * e * p.py);
    let ay_terms = &(&sxtz_sz.scale_re(-v * e * (e + delta_so)) - &chiral.scale_re(v * v * v * p.py))
        - &sztz.scale_re(v * v * e * p.px);
    (ax_terms.scale_re(den), ay_terms.scale_re(den))
}

fn fw_gauge_differential(
    p: MomentumPoint,
    delta_so: f64,
    params: &PhysParams,
    step: f64,
) -> (OperatorMatrix, OperatorMatrix) {
    let u = fw_unitary(p, delta_so, params);
    let i_hbar = Complex64::new(0.0, params.hbar);
    let mut component = |dx: f64, dy: f64| {
        let plus = fw_unitary(MomentumPoint::new(p.px + dx, p.py + dy), delta_so, params).adjoint();
        let minus =
            fw_unitary(MomentumPoint::new(p.px - dx, p.py - dy), delta_so, params).adjoint();
        (&u * &(&plus - &minus).scale_re(1.0 / (2.0 * step))).scale(i_hbar)
    };
    (component(step, 0.0), component(0.0, step))
}

/// Fixed projector onto the positive-energy states of the rotated
/// Hamiltonian, diag(1,0,0,1,0,1,1,0).
pub fn positive_projector() -> OperatorMatrix {
    OperatorMatrix::diag(&[1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0])
}

/// P m P with the fixed positive-energy projector.
pub fn project_positive(m: &OperatorMatrix) -> OperatorMatrix {
    let p = positive_projector();
    &(&p * m) * &p
}

/// Matrix-valued gauge field over momentum space, evaluated on demand.
pub struct MomentumGaugeField {
    eval: Box<dyn Fn(MomentumPoint) -> (OperatorMatrix, OperatorMatrix) + Send + Sync>,
}

impl MomentumGaugeField {
    pub fn new(
        eval: impl Fn(MomentumPoint) -> (OperatorMatrix, OperatorMatrix) + Send + Sync + 'static,
    ) -> Self {
        Self {
            eval: Box::new(eval),
        }
    }

    /// The unprojected pure gauge field (analytic form).
    pub fn fw(delta_so: f64, params: PhysParams) -> Self {
        Self::new(move |p| fw_gauge_field(p, delta_so, &params, FwGaugeMethod::Analytic))
    }

    /// The positive-energy projection of the pure gauge field.
    pub fn fw_projected(delta_so: f64, params: PhysParams) -> Self {
        Self::new(move |p| {
            let (ax, ay) = fw_gauge_field(p, delta_so, &params, FwGaugeMethod::Analytic);
            (project_positive(&ax), project_positive(&ay))
        })
    }

    pub fn at(&self, p: MomentumPoint) -> (OperatorMatrix, OperatorMatrix) {
        (self.eval)(p)
    }
}

/// dA_y/dp_x - dA_x/dp_y - (i/hbar)[A_x, A_y] by central differences.
/// Vanishes to O(h^2) for a pure gauge field; reproduces the Abelian
/// curvature (divided by hbar) for the projected field.
pub fn momentum_curvature_residual(
    field: &MomentumGaugeField,
    p: MomentumPoint,
    h: f64,
    hbar: f64,
) -> OperatorMatrix {
    assert!(h > 0.0, "finite-difference step must be positive");
    let (ax, ay) = field.at(p);
    let (_, ay_xp) = field.at(MomentumPoint::new(p.px + h, p.py));
    let (_, ay_xm) = field.at(MomentumPoint::new(p.px - h, p.py));
    let (ax_yp, _) = field.at(MomentumPoint::new(p.px, p.py + h));
    let (ax_ym, _) = field.at(MomentumPoint::new(p.px, p.py - h));
    let curl = (&(&ay_xp - &ay_xm) - &(&ax_yp - &ax_ym)).scale_re(1.0 / (2.0 * h));
    let comm = commutator(&ax, &ay).scale(Complex64::new(0.0, -1.0 / hbar));
    &curl - &comm
}

/// Abelian Berry connection per block, (A_x, A_y) scalars:
/// spin_sign * hbar v^2/(2E(E+delta)) * (p_y, -p_x). Valley-independent.
pub fn berry_connection(
    p: MomentumPoint,
    delta_so: f64,
    params: &PhysParams,
) -> PerBlock<[f64; 2]> {
    let e = energy(p, delta_so, params);
    let g = params.hbar * params.v_f * params.v_f / (2.0 * e * (e + delta_so));
    PerBlock::from_fn(|label| {
        let s = label.spin_sign();
        [s * g * p.py, -s * g * p.px]
    })
}

/// How to evaluate the Berry curvature at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurvatureMethod {
    /// Closed form -spin_sign * hbar^2 v^2 delta / (2 E^3).
    Analytic,
    /// Central-difference curl of the Abelian connection.
    CurlFd { step: f64 },
    /// Link-variable loop of block eigenspinors around a square of the
    /// given side centred on the point.
    Plaquette { side: f64 },
}

/// Berry curvature per block at one momentum point.
pub fn berry_curvature(
    p: MomentumPoint,
    delta_so: f64,
    params: &PhysParams,
    method: CurvatureMethod,
) -> CurvatureField {
    match method {
        CurvatureMethod::Analytic => {
            let e = energy(p, delta_so, params);
            let magnitude = params.hbar * params.hbar * params.v_f * params.v_f * delta_so
                / (2.0 * e * e * e);
            PerBlock::from_fn(|label| -label.spin_sign() * magnitude)
        }
        CurvatureMethod::CurlFd { step } => {
            assert!(step > 0.0);
            let xp = berry_connection(MomentumPoint::new(p.px + step, p.py), delta_so, params);
            let xm = berry_connection(MomentumPoint::new(p.px - step, p.py), delta_so, params);
            let yp = berry_connection(MomentumPoint::new(p.px, p.py + step), delta_so, params);
            let ym = berry_connection(MomentumPoint::new(p.px, p.py - step), delta_so, params);
            PerBlock::from_fn(|label| {
                let day_dx = (xp.get(label)[1] - xm.get(label)[1]) / (2.0 * step);
                let dax_dy = (yp.get(label)[0] - ym.get(label)[0]) / (2.0 * step);
                params.hbar * (day_dx - dax_dy)
            })
        }
        CurvatureMethod::Plaquette { side } => {
            assert!(side > 0.0);
            PerBlock::from_fn(|label| plaquette_flux(label, p, side, delta_so, params) / (side * side))
        }
    }
}

/// Berry flux through the square of the given side centred on `p`,
/// from the loop of spinor link variables. Gauge invariant.
fn plaquette_flux(
    label: BlockLabel,
    p: MomentumPoint,
    side: f64,
    delta_so: f64,
    params: &PhysParams,
) -> f64 {
    let h = 0.5 * side;
    let corners = [
        MomentumPoint::new(p.px - h, p.py - h),
        MomentumPoint::new(p.px + h, p.py - h),
        MomentumPoint::new(p.px + h, p.py + h),
        MomentumPoint::new(p.px - h, p.py + h),
    ];
    let spinors: Vec<[Complex64; 2]> = corners
        .iter()
        .map(|&c| {
            block_eigenspinors(label, c.wave_vector(params.hbar), delta_so, params).positive
        })
        .collect();
    let mut product = Complex64::new(1.0, 0.0);
    for i in 0..4 {
        let a = &spinors[i];
        let b = &spinors[(i + 1) % 4];
        product *= a[0].conj() * b[0] + a[1].conj() * b[1];
    }
    // counterclockwise loop accumulates exp(-i flux / hbar^2-scaled units)
    -params.hbar * params.hbar * product.arg()
}

/// Square momentum grid for plaquette sums and CSV export, covering
/// |p_x|, |p_y| <= p_max with `cells` plaquettes per side.
#[derive(Debug, Clone, Copy)]
pub struct MomentumGrid {
    pub cells: usize,
    pub p_max: f64,
}

impl MomentumGrid {
    pub fn cell_side(&self) -> f64 {
        2.0 * self.p_max / self.cells as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = MomentumPoint> + '_ {
        let side = self.cell_side();
        (0..self.cells).flat_map(move |iy| {
            (0..self.cells).map(move |ix| {
                MomentumPoint::new(
                    -self.p_max + (ix as f64 + 0.5) * side,
                    -self.p_max + (iy as f64 + 0.5) * side,
                )
            })
        })
    }
}

/// Total Berry flux per block through the grid box via plaquette loops.
pub fn plaquette_total_flux(
    grid: MomentumGrid,
    delta_so: f64,
    params: &PhysParams,
) -> Result<CurvatureField, BerryError> {
    if grid.cells < 8 {
        return Err(BerryError::GridTooCoarse(grid.cells));
    }
    let side = grid.cell_side();
    let mut totals = PerBlock::from_fn(|_| 0.0);
    for center in grid.centers() {
        for label in BlockLabel::ALL {
            let flux = plaquette_flux(label, center, side, delta_so, params);
            match label {
                BlockLabel::UP_K => totals.up_k += flux,
                BlockLabel::UP_KPRIME => totals.up_kp += flux,
                BlockLabel::DOWN_K => totals.down_k += flux,
                BlockLabel::DOWN_KPRIME => totals.down_kp += flux,
            }
        }
    }
    Ok(totals)
}

/// Reference total flux from the closed-form curvature, midpoint rule on a
/// refinement of the same box.
pub fn analytic_total_flux(
    grid: MomentumGrid,
    delta_so: f64,
    params: &PhysParams,
    refinement: usize,
) -> CurvatureField {
    let fine = MomentumGrid {
        cells: grid.cells * refinement.max(1),
        p_max: grid.p_max,
    };
    let area = fine.cell_side() * fine.cell_side();
    let mut totals = PerBlock::from_fn(|_| 0.0);
    for center in fine.centers() {
        let f = berry_curvature(center, delta_so, params, CurvatureMethod::Analytic);
        totals.up_k += f.up_k * area;
        totals.up_kp += f.up_kp * area;
        totals.down_k += f.down_k * area;
        totals.down_kp += f.down_kp * area;
    }
    totals
}

/// Componentwise residual of the zero-momentum relation between the two
/// gauge structures: C_i - (i delta^2/(hbar v^2)) A_i(p = 0), for the
/// spin-conserving field (lambda_R = B = 0).
pub fn zero_momentum_limit_check(delta_so: f64, params: &PhysParams) -> [OperatorMatrix; 2] {
    let mut spin_conserving = *params;
    spin_conserving.delta_so = delta_so;
    spin_conserving.lambda_r = 0.0;
    spin_conserving.b_field = 0.0;
    let affine = km_gauge_field(&spin_conserving);

    let (ax0, ay0) = fw_gauge_field(
        MomentumPoint::ZERO,
        delta_so,
        params,
        FwGaugeMethod::Analytic,
    );
    let prefactor = Complex64::new(
        0.0,
        delta_so * delta_so / (params.hbar * params.v_f * params.v_f),
    );
    [
        &affine.constant[0] - &ax0.scale(prefactor),
        &affine.constant[1] - &ay0.scale(prefactor),
    ]
}

/// Writes the analytic curvature over a grid as CSV with columns
/// p_x, p_y, block, value.
pub fn write_curvature_csv<W: Write>(
    mut out: W,
    grid: MomentumGrid,
    delta_so: f64,
    params: &PhysParams,
) -> io::Result<()> {
    writeln!(out, "p_x,p_y,block,value")?;
    for center in grid.centers() {
        let f = berry_curvature(center, delta_so, params, CurvatureMethod::Analytic);
        for label in BlockLabel::ALL {
            writeln!(
                out,
                "{:.11e},{:.11e},{},{:.11e}",
                center.px,
                center.py,
                label.name(),
                f.get(label)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DEFAULT_TOL;
    use crate::pauli::sigma_z_tau_z_spin_z;
    use rand::{Rng, SeedableRng};

    fn rng() -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(57)
    }

    fn random_p(r: &mut impl Rng) -> MomentumPoint {
        MomentumPoint::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0))
    }

    fn test_params() -> (f64, PhysParams) {
        let mut params = PhysParams::natural();
        params.v_f = 1.3;
        params.hbar = 0.7;
        (0.9, params)
    }

    #[test]
    fn fw_unitary_is_identity_at_origin() {
        let (delta, params) = test_params();
        let u = fw_unitary(MomentumPoint::ZERO, delta, &params);
        assert!(u.approx_eq(&OperatorMatrix::identity(8), DEFAULT_TOL));
    }

    #[test]
    fn fw_unitary_is_unitary_and_diagonalizes() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..20 {
            let p = random_p(&mut r);
            let u = fw_unitary(p, delta, &params);
            assert!(u.is_unitary(DEFAULT_TOL));
            let h = crate::hamiltonian::build_km_hamiltonian(
                &PhysParams {
                    delta_so: delta,
                    lambda_r: 0.0,
                    b_field: 0.0,
                    ..params
                },
                p,
                false,
            )
            .unwrap();
            let rotated = &(&u * &h) * &u.adjoint();
            let expect = sigma_z_tau_z_spin_z().scale_re(energy(p, delta, &params));
            assert!(rotated.approx_eq(&expect, DEFAULT_TOL));
        }
    }

    #[test]
    fn analytic_gauge_field_matches_finite_differences() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..10 {
            let p = random_p(&mut r);
            let (ax, ay) = fw_gauge_field(p, delta, &params, FwGaugeMethod::Analytic);
            let h = 1e-4 * p.norm().max(delta / params.v_f);
            let (fx, fy) = fw_gauge_field(p, delta, &params, FwGaugeMethod::Differential { step: h });
            assert!(ax.max_abs_diff(&fx) <= 1e-6, "{}", ax.max_abs_diff(&fx));
            assert!(ay.max_abs_diff(&fy) <= 1e-6, "{}", ay.max_abs_diff(&fy));
        }
    }

    #[test]
    fn gauge_field_components_are_hermitian() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..10 {
            let p = random_p(&mut r);
            let (ax, ay) = fw_gauge_field(p, delta, &params, FwGaugeMethod::Analytic);
            assert!(ax.is_hermitian(DEFAULT_TOL));
            assert!(ay.is_hermitian(DEFAULT_TOL));
        }
    }

    #[test]
    fn gauge_field_at_origin() {
        let (delta, params) = test_params();
        let (ax, ay) = fw_gauge_field(MomentumPoint::ZERO, delta, &params, FwGaugeMethod::Analytic);
        let scale = params.hbar * params.v_f / (2.0 * delta);
        let expect_x = (&sigma_y() * &spin_z()).scale_re(scale);
        let expect_y = (&(&sigma_x() * &tau_z()) * &spin_z()).scale_re(-scale);
        assert!(ax.approx_eq(&expect_x, DEFAULT_TOL));
        assert!(ay.approx_eq(&expect_y, DEFAULT_TOL));
    }

    #[test]
    fn pure_gauge_curvature_residual_vanishes() {
        let (delta, params) = test_params();
        let field = MomentumGaugeField::fw(delta, params);
        let mut r = rng();
        for _ in 0..5 {
            let p = random_p(&mut r);
            let res = momentum_curvature_residual(&field, p, 1e-5, params.hbar);
            assert!(res.max_abs() <= 1e-8, "residual {}", res.max_abs());
        }
    }

    #[test]
    fn pure_gauge_residual_converges_at_second_order() {
        let (delta, params) = test_params();
        let field = MomentumGaugeField::fw(delta, params);
        let p = MomentumPoint::new(0.8, -0.45);
        let r3 = momentum_curvature_residual(&field, p, 1e-3, params.hbar).max_abs();
        let r5 = momentum_curvature_residual(&field, p, 1e-5, params.hbar).max_abs();
        let order = (r3 / r5).log10() / 2.0;
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn projected_field_residual_is_the_abelian_curvature() {
        let (delta, params) = test_params();
        let field = MomentumGaugeField::fw_projected(delta, params);
        let p = MomentumPoint::new(0.6, 0.35);
        let res = momentum_curvature_residual(&field, p, 1e-5, params.hbar);
        let f = berry_curvature(p, delta, &params, CurvatureMethod::Analytic);
        // the nonzero diagonal sits on the projected positions (0,3,5,6)
        let mut expect = OperatorMatrix::zeros(8);
        let per_pos = [
            (0, f.up_k),
            (3, f.up_kp),
            (5, f.down_k),
            (6, f.down_kp),
        ];
        for (pos, val) in per_pos {
            expect.set(pos, pos, Complex64::new(val / params.hbar, 0.0));
        }
        assert!(
            res.approx_eq(&expect, 1e-7),
            "diff {}",
            res.max_abs_diff(&expect)
        );
    }

    #[test]
    fn abelian_sanity_field_has_constant_curvature() {
        let g = 0.37;
        let field = MomentumGaugeField::new(move |p| {
            (
                OperatorMatrix::identity(8).scale_re(-0.5 * g * p.py),
                OperatorMatrix::identity(8).scale_re(0.5 * g * p.px),
            )
        });
        let res = momentum_curvature_residual(&field, MomentumPoint::new(1.1, -0.4), 1e-5, 1.0);
        assert!(res.approx_eq(&OperatorMatrix::identity(8).scale_re(g), 1e-9));
    }

    #[test]
    fn projector_is_idempotent_and_hermitian() {
        let p = positive_projector();
        assert!((&p * &p).approx_eq(&p, 0.0));
        assert!(p.approx_eq(&p.adjoint(), 0.0));
    }

    #[test]
    fn projected_rotated_hamiltonian_has_nonnegative_diagonal() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..5 {
            let p = random_p(&mut r);
            let u = fw_unitary(p, delta, &params);
            let h = crate::hamiltonian::build_km_hamiltonian(
                &PhysParams {
                    delta_so: delta,
                    lambda_r: 0.0,
                    b_field: 0.0,
                    ..params
                },
                p,
                false,
            )
            .unwrap();
            let projected = project_positive(&(&(&u * &h) * &u.adjoint()));
            let e = energy(p, delta, &params);
            for i in 0..8 {
                let d = projected.get(i, i).re;
                assert!(d >= -1e-12);
                assert!(d.abs() < 1e-12 || (d - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_keeps_only_the_band_diagonal_terms() {
        let (delta, params) = test_params();
        let p = MomentumPoint::new(0.6, -1.1);
        let (ax, ay) = fw_gauge_field(p, delta, &params, FwGaugeMethod::Analytic);
        let e = energy(p, delta, &params);
        let den = params.hbar / (2.0 * e * e * (e + delta));
        let sztz = &sigma_z() * &tau_z();
        let last_x = sztz.scale_re(params.v_f * params.v_f * e * p.py * den);
        let last_y = sztz.scale_re(-params.v_f * params.v_f * e * p.px * den);
        assert!(project_positive(&ax).approx_eq(&project_positive(&last_x), DEFAULT_TOL));
        assert!(project_positive(&ay).approx_eq(&project_positive(&last_y), DEFAULT_TOL));
    }

    #[test]
    fn berry_connection_vanishes_at_origin_and_is_spin_odd() {
        let (delta, params) = test_params();
        let conn0 = berry_connection(MomentumPoint::ZERO, delta, &params);
        for label in BlockLabel::ALL {
            assert_eq!(*conn0.get(label), [0.0, 0.0]);
        }
        let mut r = rng();
        for _ in 0..5 {
            let p = random_p(&mut r);
            let conn = berry_connection(p, delta, &params);
            for i in 0..2 {
                assert_eq!(conn.up_k[i], conn.up_kp[i]);
                assert_eq!(conn.down_k[i], conn.down_kp[i]);
                assert_eq!(conn.up_k[i], -conn.down_k[i]);
            }
        }
    }

    #[test]
    fn berry_connection_matches_projected_gauge_field() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..5 {
            let p = random_p(&mut r);
            let conn = berry_connection(p, delta, &params);
            let (ax, ay) = fw_gauge_field(p, delta, &params, FwGaugeMethod::Analytic);
            let proj = [project_positive(&ax), project_positive(&ay)];
            // projected positions carrying each block's positive-energy state
            let positions = [(BlockLabel::UP_K, 0), (BlockLabel::UP_KPRIME, 3),
                             (BlockLabel::DOWN_K, 5), (BlockLabel::DOWN_KPRIME, 6)];
            for (label, pos) in positions {
                for axis in 0..2 {
                    let entry = proj[axis].get(pos, pos);
                    assert!((entry.re - conn.get(label)[axis]).abs() < 1e-12);
                    assert!(entry.im.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn curvature_closed_form_at_gap_edge() {
        let (delta, params) = test_params();
        let f = berry_curvature(MomentumPoint::ZERO, delta, &params, CurvatureMethod::Analytic);
        let expect = -params.hbar * params.hbar * params.v_f * params.v_f / (2.0 * delta * delta);
        assert!((f.up_k - expect).abs() < 1e-15);
        assert!((f.down_k + expect).abs() < 1e-15);
    }

    #[test]
    fn curvature_fd_matches_analytic() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..10 {
            let p = random_p(&mut r);
            let analytic = berry_curvature(p, delta, &params, CurvatureMethod::Analytic);
            let fd = berry_curvature(p, delta, &params, CurvatureMethod::CurlFd { step: 1e-5 });
            for label in BlockLabel::ALL {
                let a = analytic.get(label);
                let f = fd.get(label);
                assert!((a - f).abs() / a.abs() <= 1e-6, "rel {}", (a - f).abs() / a.abs());
            }
        }
    }

    #[test]
    fn curvature_plaquette_matches_analytic_pointwise() {
        let (delta, params) = test_params();
        let p = MomentumPoint::new(0.42, -0.77);
        let analytic = berry_curvature(p, delta, &params, CurvatureMethod::Analytic);
        let plaq = berry_curvature(p, delta, &params, CurvatureMethod::Plaquette { side: 1e-3 });
        for label in BlockLabel::ALL {
            let a = analytic.get(label);
            let q = plaq.get(label);
            assert!((a - q).abs() / a.abs() <= 1e-5, "rel {}", (a - q).abs() / a.abs());
        }
    }

    #[test]
    fn curvature_block_symmetry_and_rotational_invariance() {
        let (delta, params) = test_params();
        let mut r = rng();
        for _ in 0..5 {
            let p = random_p(&mut r);
            let f = berry_curvature(p, delta, &params, CurvatureMethod::Analytic);
            assert_eq!(f.up_k, f.up_kp);
            assert_eq!(f.down_k, f.down_kp);
            assert_eq!(f.up_k, -f.down_k);
            // depends on p only through |p|
            let rotated = MomentumPoint::new(p.norm(), 0.0);
            let g = berry_curvature(rotated, delta, &params, CurvatureMethod::Analytic);
            assert!((f.up_k - g.up_k).abs() < 1e-14 * f.up_k.abs());
        }
    }

    #[test]
    fn plaquette_grid_total_matches_analytic_box_integral() {
        let (delta, params) = test_params();
        let grid = MomentumGrid {
            cells: 64,
            p_max: 5.0 * delta / params.v_f,
        };
        let plaq = plaquette_total_flux(grid, delta, &params).unwrap();
        let analytic = analytic_total_flux(grid, delta, &params, 4);
        for label in BlockLabel::ALL {
            let a = analytic.get(label);
            let q = plaq.get(label);
            assert!((a - q).abs() / a.abs() <= 1e-3, "rel {}", (a - q).abs() / a.abs());
        }
    }

    #[test]
    fn coarse_plaquette_grid_is_rejected() {
        let (delta, params) = test_params();
        let grid = MomentumGrid { cells: 7, p_max: 1.0 };
        assert_eq!(
            plaquette_total_flux(grid, delta, &params).unwrap_err(),
            BerryError::GridTooCoarse(7)
        );
    }

    #[test]
    fn zero_momentum_limit_identity_holds() {
        let (delta, params) = test_params();
        let [rx, ry] = zero_momentum_limit_check(delta, &params);
        assert!(rx.max_abs() <= 1e-12, "x residual {}", rx.max_abs());
        assert!(ry.max_abs() <= 1e-12, "y residual {}", ry.max_abs());
    }

    #[test]
    fn zero_momentum_limit_with_wrong_prefactor_fails() {
        // negative control: i delta/(hbar v^2) instead of i delta^2/(hbar v^2)
        let (delta, params) = test_params();
        let affine = km_gauge_field(&PhysParams {
            delta_so: delta,
            lambda_r: 0.0,
            b_field: 0.0,
            ..params
        });
        let (ax0, _) = fw_gauge_field(MomentumPoint::ZERO, delta, &params, FwGaugeMethod::Analytic);
        let wrong = Complex64::new(0.0, delta / (params.hbar * params.v_f * params.v_f));
        let residual = &affine.constant[0] - &ax0.scale(wrong);
        assert!(residual.max_abs() > 1e-3);
    }

    #[test]
    fn curvature_csv_has_expected_header_and_rows() {
        let (delta, params) = test_params();
        let grid = MomentumGrid { cells: 2, p_max: 1.0 };
        let mut buf = Vec::new();
        write_curvature_csv(&mut buf, grid, delta, &params).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p_x,p_y,block,value");
        assert_eq!(lines.len(), 1 + 4 * 4); // header + 4 cells x 4 blocks
        assert!(lines[1].contains("up_K"));
    }
}
