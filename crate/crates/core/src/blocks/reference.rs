//! Closed-form reference blocks in d = 2 and d = 4.
//!
//! These are built from Gauss hypergeometric series, entirely independent of
//! the Casimir recursion in `casimir.rs`, and exist to cross-check it. The
//! normalization matches the engine convention: the coefficient of
//! z^{(Delta+ell)/2} zbar^{(Delta-ell)/2} is 1.

use crate::scalar::Real;

/// Gauss 2F1 by direct series; requires |z| < 1.
pub fn hyp2f1<T: Real>(a: T, b: T, c: T, z: T) -> T {
    let mut term = T::one();
    let mut sum = T::one();
    let tol = T::eps() * T::from_f64(0.5);
    for k in 0..4000 {
        let kf = T::from_usize(k);
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + T::one())) * z;
        sum += term;
        if term.abs() <= tol * sum.abs().maxv(T::one()) {
            return sum;
        }
    }
    sum
}

/// Collinear (SL2) block k_beta(z) = z^{beta/2} 2F1(beta/2 + ca, beta/2 + cb; beta; z)
/// with (ca, cb) = (-d12/2, d34/2).
pub fn sl2_block<T: Real>(beta: T, ca: T, cb: T, z: T) -> T {
    let h = beta * T::half();
    z.powf(h) * hyp2f1(h + ca, h + cb, beta, z)
}

/// d = 2 block in (z, zbar) coordinates.
pub fn block_d2<T: Real>(delta: T, spin: u32, ca: T, cb: T, z: T, zb: T) -> T {
    let l = T::from_usize(spin as usize);
    if spin == 0 {
        sl2_block(delta, ca, cb, z) * sl2_block(delta, ca, cb, zb)
    } else {
        sl2_block(delta + l, ca, cb, z) * sl2_block(delta - l, ca, cb, zb)
            + sl2_block(delta - l, ca, cb, z) * sl2_block(delta + l, ca, cb, zb)
    }
}

/// d = 4 block in (z, zbar) coordinates; requires z != zbar.
pub fn block_d4<T: Real>(delta: T, spin: u32, ca: T, cb: T, z: T, zb: T) -> T {
    let l = T::from_usize(spin as usize);
    let kp = |x: T| sl2_block(delta + l, ca, cb, x);
    let km = |x: T| sl2_block(delta - l - T::two(), ca, cb, x);
    z * zb / (z - zb) * (kp(z) * km(zb) - km(z) * kp(zb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyp2f1_geometric_series() {
        // 2F1(1, b; b; z) = 1/(1-z)
        let v = hyp2f1(1.0f64, 0.7, 0.7, 0.3);
        assert!((v - 1.0 / 0.7f64).abs() < 1e-14);
    }

    #[test]
    fn hyp2f1_log_case() {
        // 2F1(1, 1; 2; z) = -ln(1-z)/z
        let z = 0.41f64;
        let v = hyp2f1(1.0, 1.0, 2.0, z);
        assert!((v + (1.0 - z).ln() / z).abs() < 1e-13);
    }

    #[test]
    fn sl2_block_leading_power() {
        // k_beta ~ z^{beta/2} as z -> 0.
        let v = sl2_block(3.0f64, 0.0, 0.0, 1e-8);
        assert!((v / 1e-12 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn d2_block_symmetric_in_z_zbar() {
        let a = block_d2(1.7f64, 2, 0.0, 0.0, 0.3, 0.45);
        let b = block_d2(1.7f64, 2, 0.0, 0.0, 0.45, 0.3);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn d4_block_finite_near_diagonal() {
        // The (z - zbar) denominator cancels; values on both sides of the
        // diagonal should agree to first order.
        let f = |eps: f64| block_d4(2.3f64, 2, 0.0, 0.0, 0.5 + eps, 0.5 - eps);
        let a = f(1e-5);
        let b = f(1e-6);
        assert!((a - b).abs() < 1e-7 * a.abs());
    }
}
