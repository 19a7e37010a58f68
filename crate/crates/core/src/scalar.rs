//! Scalar abstraction for the numerical core.
//!
//! Everything numeric in this crate is generic over [`Real`], which extends
//! the `num-traits` arithmetic surface with the handful of transcendental
//! operations the engine needs. `f32`/`f64` implement it via `std`; [`Dd`]
//! is a double-double type (~31 significant digits) used for elevated
//! precision certificate verification and optionally for whole pipelines.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

/// Scalar type the numerical core is generic over.
pub trait Real:
    Copy
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
{
    /// Short name used in reports ("f64", "dd", ...).
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn is_finite(self) -> bool;
    /// Machine epsilon of the representation.
    fn eps() -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }

    fn powf(self, e: Self) -> Self {
        (e * self.ln()).exp()
    }

    /// Integer power by repeated squaring.
    fn powi(self, n: i64) -> Self {
        if n < 0 {
            return Self::one() / self.powi(-n);
        }
        let mut acc = Self::one();
        let mut base = self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    fn maxv(self, o: Self) -> Self {
        if self > o {
            self
        } else {
            o
        }
    }

    fn minv(self, o: Self) -> Self {
        if self < o {
            self
        } else {
            o
        }
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn half() -> Self {
        Self::from_f64(0.5)
    }

    fn two() -> Self {
        Self::from_f64(2.0)
    }
}

macro_rules! impl_real_float {
    ($t:ty, $name:literal) => {
        impl Real for $t {
            const NAME: &'static str = $name;

            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn abs(self) -> Self {
                <$t>::abs(self)
            }
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            fn ln(self) -> Self {
                <$t>::ln(self)
            }
            fn powf(self, e: Self) -> Self {
                <$t>::powf(self, e)
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            fn eps() -> Self {
                <$t>::EPSILON
            }
        }
    };
}

impl_real_float!(f64, "f64");
impl_real_float!(f32, "f32");

// ---------------------------------------------------------------------------
// Double-double arithmetic
// ---------------------------------------------------------------------------

/// Unevaluated sum of two `f64`, giving ~106 bits of mantissa.
///
/// The classic error-free transformations (two_sum / two_prod with FMA) keep
/// the pair normalized: `|lo| <= ulp(hi)/2`. Only the operations the engine
/// needs are implemented; in particular there is no trigonometry.
#[derive(Copy, Clone, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// ln 2 to double-double precision.
    const LN2: Dd = Dd::new(6.931471805599453e-1, 2.3190468138462996e-17);

    fn mul_pwr2(self, p: f64) -> Self {
        Dd {
            hi: self.hi * p,
            lo: self.lo * p,
        }
    }

    fn sqr(self) -> Self {
        let (p, mut e) = two_prod(self.hi, self.hi);
        e += 2.0 * self.hi * self.lo;
        e += self.lo * self.lo;
        let (s, err) = quick_two_sum(p, e);
        Dd { hi: s, lo: err }
    }

    fn exp_impl(self) -> Self {
        // exp(k ln2 + r) with |r| <= ln2/2, then r scaled down by 64 for a
        // short Taylor series and squared back up.
        const K: f64 = 64.0;
        if self.hi <= -709.0 {
            return Dd::from_f64(0.0);
        }
        if self.hi >= 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::from_f64(1.0);
        }
        let m = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2 * Dd::from_f64(m)).mul_pwr2(1.0 / K);
        // Taylor for exp(r) - 1.
        let mut p = r.sqr();
        let mut s = r + p.mul_pwr2(0.5);
        p = p * r;
        let mut fact = 6.0;
        let mut t = p / Dd::from_f64(fact);
        let thresh = 1e-37;
        let mut k = 4.0;
        loop {
            s += t;
            p = p * r;
            fact *= k;
            k += 1.0;
            t = p / Dd::from_f64(fact);
            if t.hi.abs() <= thresh {
                break;
            }
        }
        s += t;
        // Undo the 1/64 scaling: s <- (1+s)^2 - 1, six times.
        for _ in 0..6 {
            s = s.mul_pwr2(2.0) + s.sqr();
        }
        s += Dd::from_f64(1.0);
        // Scale by 2^m.
        let scale = f64::powi(2.0, m as i32);
        Dd {
            hi: s.hi * scale,
            lo: s.lo * scale,
        }
    }

    fn ln_impl(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        // Newton iterations on y -> y + x*exp(-y) - 1 from the f64 seed.
        let mut y = Dd::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp_impl() - Dd::from_f64(1.0);
        }
        y
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        Dd { hi: s1, lo: s2 }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, o.hi);
        e += self.hi * o.lo + self.lo * o.hi;
        let (s, err) = quick_two_sum(p, e);
        Dd { hi: s, lo: err }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let mut r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}
impl SubAssign for Dd {
    fn sub_assign(&mut self, o: Dd) {
        *self = *self - o;
    }
}
impl MulAssign for Dd {
    fn mul_assign(&mut self, o: Dd) {
        *self = *self * o;
    }
}
impl DivAssign for Dd {
    fn div_assign(&mut self, o: Dd) {
        *self = *self / o;
    }
}

impl PartialEq for Dd {
    fn eq(&self, o: &Dd) -> bool {
        self.hi == o.hi && self.lo == o.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, o: &Dd) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            other => other,
        }
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::from_f64(1.0)
    }
}

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::zero(), |a, b| a + b)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e}, {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Two components give ~31 digits; the hi part alone is what most
        // reports need.
        write!(f, "{:e}", self.hi)
    }
}

impl Real for Dd {
    const NAME: &'static str = "dd";

    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    fn sqrt(self) -> Self {
        if self.is_zero() {
            return self;
        }
        if self.hi < 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        // Karp's trick: one Newton step on the f64 seed.
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let axd = Dd::from_f64(ax);
        axd + Dd::from_f64((self - axd.sqr()).hi * (x * 0.5))
    }

    fn exp(self) -> Self {
        self.exp_impl()
    }

    fn ln(self) -> Self {
        self.ln_impl()
    }

    fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    fn eps() -> Self {
        Dd::from_f64(4.93038065763132e-32)
    }
}

/// Falling factorial x(x-1)...(x-k+1).
pub fn falling<T: Real>(x: T, k: u32) -> T {
    let mut acc = T::one();
    for i in 0..k {
        acc *= x - T::from_usize(i as usize);
    }
    acc
}

/// Generalized binomial coefficient C(alpha, k).
pub fn binom<T: Real>(alpha: T, k: u32) -> T {
    let mut acc = T::one();
    for i in 0..k {
        acc *= (alpha - T::from_usize(i as usize)) / T::from_usize(i as usize + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> Dd {
        Dd::from_f64(x)
    }

    #[test]
    fn dd_add_tracks_low_bits() {
        let a = dd(1.0) + dd(1e-25);
        let b = a - dd(1.0);
        assert!((b.to_f64() - 1e-25).abs() < 1e-40);
    }

    #[test]
    fn dd_mul_div_roundtrip() {
        let a = dd(3.1415926535) / dd(7.3);
        let b = a * dd(7.3);
        assert!((b - dd(3.1415926535)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn dd_sqrt_squares_back() {
        let r = dd(2.0).sqrt();
        assert!((r * r - dd(2.0)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn dd_exp_ln_inverse() {
        for &x in &[0.1, 1.0, 2.5, 10.0, 0.003] {
            let y = dd(x).ln().exp();
            assert!(
                (y - dd(x)).abs().to_f64() < 1e-28 * x.max(1.0),
                "x = {x}, got {y:?}"
            );
        }
    }

    #[test]
    fn dd_exp_matches_f64_leading() {
        for &x in &[-3.0, -0.5, 0.0, 0.7, 4.2] {
            let y = dd(x).exp().to_f64();
            assert!((y - x.exp()).abs() <= 4.0 * f64::EPSILON * x.exp());
        }
    }

    #[test]
    fn dd_powf_consistency() {
        let y = dd(0.25).powf(dd(-0.518));
        assert!((y.to_f64() - 0.25f64.powf(-0.518)).abs() < 1e-13);
        // High-precision self-check: (x^a)^(1/a) = x.
        let z = y.powf(dd(1.0) / dd(-0.518));
        assert!((z - dd(0.25)).abs().to_f64() < 1e-28);
    }

    #[test]
    fn dd_ln2_constant_is_accurate() {
        // exp(LN2) == 2 to dd accuracy.
        let two = Dd::LN2.exp();
        assert!((two - dd(2.0)).abs().to_f64() < 1e-30);
    }

    #[test]
    fn falling_and_binom_basic() {
        assert_eq!(falling(5.0f64, 3), 60.0);
        assert_eq!(binom(5.0f64, 2), 10.0);
        // C(1/2, 2) = (1/2)(-1/2)/2 = -1/8
        assert!((binom(0.5f64, 2) + 0.125).abs() < 1e-15);
    }

    #[test]
    fn powi_negative_exponent() {
        let x = 2.0f64.powi(-3);
        assert_eq!(Real::powi(2.0f64, -3), x);
    }
}
