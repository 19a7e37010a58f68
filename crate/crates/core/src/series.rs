//! Truncated bivariate Taylor series ("jets") with a weighted grading.
//!
//! A [`Jet`] holds coefficients of delta_x^p delta_y^q for all monomials with
//! `wx*p + wy*q <= cap`. The weighted grading lets the block pipeline carry
//! half-order variables exactly: the intermediate series in (da, dw) use
//! weights (2, 1) so that the final substitution db = dw^2 lands on a plain
//! total-degree jet in (da, db).

use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Jet<T> {
    pub wx: u32,
    pub wy: u32,
    pub cap: u32,
    /// Row starts: coefficient of x^p y^q sits at `row[p] + q`.
    row: Vec<u32>,
    /// Max q per p.
    qmax: Vec<u32>,
    pub c: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn new(wx: u32, wy: u32, cap: u32) -> Self {
        assert!(wx > 0 && wy > 0);
        let pmax = cap / wx;
        let mut row = Vec::with_capacity(pmax as usize + 1);
        let mut qmax = Vec::with_capacity(pmax as usize + 1);
        let mut off = 0u32;
        for p in 0..=pmax {
            row.push(off);
            let q = (cap - wx * p) / wy;
            qmax.push(q);
            off += q + 1;
        }
        Jet {
            wx,
            wy,
            cap,
            row,
            qmax,
            c: vec![T::zero(); off as usize],
        }
    }

    pub fn constant(wx: u32, wy: u32, cap: u32, v: T) -> Self {
        let mut j = Self::new(wx, wy, cap);
        j.c[0] = v;
        j
    }

    #[inline]
    pub fn pmax(&self) -> u32 {
        self.row.len() as u32 - 1
    }

    #[inline]
    pub fn qmax(&self, p: u32) -> u32 {
        self.qmax[p as usize]
    }

    #[inline]
    pub fn get(&self, p: u32, q: u32) -> T {
        if p <= self.pmax() && q <= self.qmax(p) {
            self.c[(self.row[p as usize] + q) as usize]
        } else {
            T::zero()
        }
    }

    #[inline]
    pub fn set(&mut self, p: u32, q: u32, v: T) {
        let idx = self.row[p as usize] + q;
        self.c[idx as usize] = v;
    }

    #[inline]
    pub fn add_at(&mut self, p: u32, q: u32, v: T) {
        if p <= self.pmax() && q <= self.qmax(p) {
            let idx = self.row[p as usize] + q;
            self.c[idx as usize] += v;
        }
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.c {
            *v *= s;
        }
    }

    pub fn add_assign_scaled(&mut self, o: &Jet<T>, s: T) {
        debug_assert_eq!(self.c.len(), o.c.len());
        for (a, b) in self.c.iter_mut().zip(o.c.iter()) {
            *a += *b * s;
        }
    }

    pub fn mul(&self, o: &Jet<T>) -> Jet<T> {
        debug_assert_eq!((self.wx, self.wy, self.cap), (o.wx, o.wy, o.cap));
        let mut out = Jet::new(self.wx, self.wy, self.cap);
        for p1 in 0..=self.pmax() {
            for q1 in 0..=self.qmax(p1) {
                let a = self.c[(self.row[p1 as usize] + q1) as usize];
                if a.is_zero() {
                    continue;
                }
                let gleft = self.wx * p1 + self.wy * q1;
                let budget = self.cap - gleft;
                let p2max = budget / self.wx;
                for p2 in 0..=p2max.min(o.pmax()) {
                    let q2max = ((budget - self.wx * p2) / self.wy).min(o.qmax(p2));
                    let orow = o.row[p2 as usize];
                    let trow = out.row[(p1 + p2) as usize] + q1;
                    for q2 in 0..=q2max {
                        out.c[(trow + q2) as usize] += a * o.c[(orow + q2) as usize];
                    }
                }
            }
        }
        out
    }

    /// Natural log of a series with positive constant term.
    pub fn ln_series(&self) -> Jet<T> {
        let c0 = self.c[0];
        assert!(c0 > T::zero(), "ln_series needs positive constant term");
        // self = c0 (1 + n), n nilpotent up to the cap.
        let mut n = self.clone();
        let inv = T::one() / c0;
        n.scale(inv);
        n.c[0] = T::zero();
        let mut out = Jet::constant(self.wx, self.wy, self.cap, c0.ln());
        let mut pw = n.clone();
        let mut k = 1i64;
        loop {
            let sign = if k % 2 == 1 { T::one() } else { -T::one() };
            out.add_assign_scaled(&pw, sign / T::from_i64(k));
            k += 1;
            if k as u32 > self.cap {
                break;
            }
            pw = pw.mul(&n);
            if pw.c.iter().all(|v| v.is_zero()) {
                break;
            }
        }
        out
    }

    /// exp of a series (constant term allowed).
    pub fn exp_series(&self) -> Jet<T> {
        let c0 = self.c[0];
        let mut n = self.clone();
        n.c[0] = T::zero();
        let mut out = Jet::constant(self.wx, self.wy, self.cap, T::one());
        let mut pw = Jet::constant(self.wx, self.wy, self.cap, T::one());
        let mut kfac = T::one();
        for k in 1..=self.cap as i64 {
            pw = pw.mul(&n);
            kfac *= T::from_i64(k);
            if pw.c.iter().all(|v| v.is_zero()) {
                break;
            }
            out.add_assign_scaled(&pw, T::one() / kfac);
        }
        out.scale(c0.exp());
        out
    }

    /// Real power of a series with positive constant term.
    pub fn powf_series(&self, alpha: T) -> Jet<T> {
        let mut l = self.ln_series();
        l.scale(alpha);
        l.exp_series()
    }
}

/// Univariate truncated Taylor series, used for the coordinate maps.
#[derive(Clone, Debug)]
pub struct USeries<T> {
    pub c: Vec<T>,
}

impl<T: Real> USeries<T> {
    pub fn zero(n: usize) -> Self {
        USeries {
            c: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn mul(&self, o: &USeries<T>) -> USeries<T> {
        let n = self.c.len();
        let mut out = USeries::zero(n);
        for i in 0..n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..n - i {
                out.c[i + j] += self.c[i] * o.c[j];
            }
        }
        out
    }

    /// (1 + t)^alpha where `t = self` must have zero constant term.
    pub fn one_plus_powf(&self, alpha: T) -> USeries<T> {
        assert!(self.c[0].is_zero());
        let n = self.c.len();
        let mut out = USeries::zero(n);
        out.c[0] = T::one();
        let mut pw = USeries::zero(n);
        pw.c[0] = T::one();
        let mut bin = T::one();
        for k in 1..n {
            pw = pw.mul(self);
            bin *= (alpha - T::from_usize(k - 1)) / T::from_usize(k);
            if pw.c.iter().all(|v| v.is_zero()) {
                break;
            }
            for i in 0..n {
                out.c[i] += bin * pw.c[i];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_mul_matches_polynomial_product() {
        // (1 + x + y)^2 with unit weights, cap 3.
        let mut a: Jet<f64> = Jet::new(1, 1, 3);
        a.set(0, 0, 1.0);
        a.set(1, 0, 1.0);
        a.set(0, 1, 1.0);
        let b = a.mul(&a);
        assert_eq!(b.get(0, 0), 1.0);
        assert_eq!(b.get(1, 0), 2.0);
        assert_eq!(b.get(0, 1), 2.0);
        assert_eq!(b.get(1, 1), 2.0);
        assert_eq!(b.get(2, 0), 1.0);
        assert_eq!(b.get(0, 2), 1.0);
    }

    #[test]
    fn weighted_grading_truncates() {
        // weights (2,1), cap 4: x^2 allowed, x^2*y not.
        let mut a: Jet<f64> = Jet::new(2, 1, 4);
        a.set(0, 0, 1.0);
        a.set(1, 0, 1.0); // grade 2
        a.set(0, 1, 1.0); // grade 1
        let b = a.mul(&a);
        assert_eq!(b.get(2, 0), 1.0); // grade 4 kept
        assert_eq!(b.get(1, 1), 2.0); // grade 3 kept
        assert_eq!(b.get(1, 2), 0.0); // grade 4 kept? 2+2=4 -> kept: x*y^2
                                      // x*y^2 has grade 2+2=4, product of x*y and y: present
    }

    #[test]
    fn jet_powf_matches_scalar() {
        // f = 2 + x + 3y, f^1.7 partials at 0 checked against finite differences.
        let mut f: Jet<f64> = Jet::new(1, 1, 2);
        f.set(0, 0, 2.0);
        f.set(1, 0, 1.0);
        f.set(0, 1, 3.0);
        let g = f.powf_series(1.7);
        let eval = |x: f64, y: f64| (2.0 + x + 3.0 * y).powf(1.7);
        let h = 1e-4;
        let dx = (eval(h, 0.0) - eval(-h, 0.0)) / (2.0 * h);
        let dy = (eval(0.0, h) - eval(0.0, -h)) / (2.0 * h);
        assert!((g.get(0, 0) - eval(0.0, 0.0)).abs() < 1e-14);
        assert!((g.get(1, 0) - dx).abs() < 1e-7);
        assert!((g.get(0, 1) - dy).abs() < 1e-7);
        let dxy = (eval(h, h) - eval(h, -h) - eval(-h, h) + eval(-h, -h)) / (4.0 * h * h);
        assert!((g.get(1, 1) - dxy).abs() < 1e-5);
    }

    #[test]
    fn jet_exp_ln_roundtrip() {
        let mut f: Jet<f64> = Jet::new(1, 1, 4);
        f.set(0, 0, 1.5);
        f.set(1, 0, 0.3);
        f.set(0, 1, -0.2);
        f.set(1, 1, 0.05);
        let g = f.ln_series().exp_series();
        for (a, b) in f.c.iter().zip(g.c.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn useries_binomial_power() {
        // (1 + t)^(1/2) with t = z: coefficients binom(1/2, k).
        let mut t: USeries<f64> = USeries::zero(5);
        t.c[1] = 1.0;
        let s = t.one_plus_powf(0.5);
        assert!((s.c[0] - 1.0).abs() < 1e-15);
        assert!((s.c[1] - 0.5).abs() < 1e-15);
        assert!((s.c[2] + 0.125).abs() < 1e-15);
        assert!((s.c[3] - 0.0625).abs() < 1e-15);
    }
}
