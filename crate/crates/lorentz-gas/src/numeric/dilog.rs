//! Real dilogarithm Li2(x) for x <= 1.
//!
//! Needed in closed-form cumulative distributions of the lattice transition
//! kernel, where integrals of the shape ∫ ln(1 ± t/c)/t dt appear.

use std::f64::consts::PI;

const PI2_6: f64 = PI * PI / 6.0;

/// Reciprocal squares 1/k² for the power series, division-free.
const INV_SQ: [f64; 64] = {
    let mut t = [0.0; 64];
    let mut k = 1usize;
    while k < 64 {
        t[k] = 1.0 / ((k * k) as f64);
        k += 1;
    }
    t
};

/// Power series Σ z^k / k², accurate for |z| <= 0.5.
fn series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut k = 2usize;
    while k < 64 {
        term *= z;
        let add = term * INV_SQ[k];
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1;
    }
    sum
}

/// Real dilogarithm `Li2(x)` for arguments `x <= 1`.
///
/// Uses the standard reflection and Landen identities to map every argument
/// into the fast-converging disc |z| <= 1/2.
pub fn dilog(x: f64) -> f64 {
    assert!(x <= 1.0, "dilog: argument {x} > 1 not supported");
    if x == 1.0 {
        return PI2_6;
    }
    if x < -1.0 {
        // Li2(x) + Li2(1/x) = -π²/6 - ln²(-x)/2 for x < 0.
        let l = (-x).ln();
        return -PI2_6 - 0.5 * l * l - dilog(1.0 / x);
    }
    if x < -0.5 {
        // Landen: Li2(x) = -Li2(x/(x-1)) - ln²(1-x)/2.
        let l = (1.0 - x).ln();
        return -series(x / (x - 1.0)) - 0.5 * l * l;
    }
    if x <= 0.5 {
        return series(x);
    }
    // x in (0.5, 1): Li2(x) = π²/6 - ln(x) ln(1-x) - Li2(1-x).
    PI2_6 - x.ln() * (1.0 - x).ln() - series(1.0 - x)
}

/// `-Li2(-y) = ∫_0^y ln(1+t)/t dt` for `y >= 0`; the form that appears in
/// kernel CDFs directly.
#[inline]
pub fn neg_dilog_neg(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    -dilog(-y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((dilog(1.0) - PI2_6).abs() < 1e-15);
        assert!((dilog(-1.0) + PI * PI / 12.0).abs() < 1e-15);
        let half = PI * PI / 12.0 - 0.5 * (2.0f64.ln()).powi(2);
        assert!((dilog(0.5) - half).abs() < 1e-15);
        assert!(dilog(0.0) == 0.0);
    }

    #[test]
    fn matches_quadrature() {
        // Li2(x) = -∫_0^x ln(1-t)/t dt.
        for &x in &[-37.5, -3.0, -0.75, -0.3, 0.2, 0.6, 0.93] {
            // The integrand -ln(1-t)/t extends continuously to 1 at t = 0,
            // and the oriented integral equals Li2(x) for either sign of x.
            let (q, _) = crate::numeric::quad::integrate(
                |t: f64| {
                    if t == 0.0 {
                        1.0
                    } else {
                        -(1.0 - t).ln() / t
                    }
                },
                0.0,
                x,
                1e-13,
            );
            let got = dilog(x);
            assert!((got - q).abs() < 1e-9, "x={x}: dilog={got}, quad={q}");
        }
    }
}
