//! Adaptive Simpson quadrature with a running error estimate.

/// Integral value and an estimate of the absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
}

/// Integrates `f` over [a, b] to the requested relative tolerance.
/// The integrands here are smooth and monotone, so plain bisection with the
/// Richardson-corrected Simpson rule is adequate; recursion depth is capped
/// as a safety net.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_error: 0.0,
        };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(1e-300);
    let mut acc = QuadResult {
        value: 0.0,
        abs_error: 0.0,
    };
    recurse(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        rel_tol * scale,
        40,
        &mut acc,
    );
    acc
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut QuadResult,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        acc.value += left + right + delta / 15.0;
        acc.abs_error += delta.abs() / 15.0;
        return;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc);
    recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_square_integral() {
        let q = adaptive_simpson(&|e| 1.0 / (e * e), 1.0, 1e4, 1e-12);
        let exact = 1.0 - 1e-4;
        assert!((q.value - exact).abs() <= 1e-10);
        assert!(q.abs_error >= 0.0);
    }

    #[test]
    fn cubic_is_exact() {
        let q = adaptive_simpson(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((q.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        let q = adaptive_simpson(&f64::sin, 0.0, std::f64::consts::PI, 1e-10);
        let true_err = (q.value - 2.0).abs();
        assert!(true_err <= 1e-9);
        assert!(true_err <= q.abs_error.max(1e-12));
    }

    #[test]
    fn empty_interval() {
        let q = adaptive_simpson(&|x| x, 3.0, 3.0, 1e-10);
        assert_eq!(q.value, 0.0);
    }
}
