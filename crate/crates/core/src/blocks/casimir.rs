//! Quadratic-Casimir recursion for conformal block series coefficients.
//!
//! Blocks are represented as a double power series in the radial variables
//! (rho, rhobar), where `z = 4 rho / (1 + rho)^2` and `u = z zbar`,
//! `v = (1-z)(1-zbar)`:
//!
//! ```text
//!   G(rho, rhobar) = 4^Delta * sum_{i+j >= ell}  g_{ij} rho^{x+i} rhobar^{x+j},
//!   x = (Delta - ell)/2,   g_{ij} = g_{ji},
//! ```
//!
//! normalized so that the extreme coefficient of the leading level is 1
//! (equivalently: the coefficient of z^{(Delta+ell)/2} zbar^{(Delta-ell)/2}
//! in the z-variable expansion is 1). The level-`ell` coefficients are the
//! Gegenbauer harmonics of the exchanged spin; every higher level is fixed by
//! the quadratic Casimir equation, which in these variables has polynomial
//! coefficients once it is multiplied by the common denominator. The series
//! converges for |rho|, |rhobar| < 1, with ratio ~0.172 per order at the
//! symmetric point z = zbar = 1/2.

use crate::error::BlockError;
use crate::scalar::{falling, Real};

/// Sparse bivariate polynomial in (rho, rhobar).
#[derive(Clone, Debug)]
struct Poly<T>(Vec<(i32, i32, T)>);

impl<T: Real> Poly<T> {
    fn from_f64(terms: &[(i32, i32, f64)]) -> Self {
        Poly(
            terms
                .iter()
                .map(|&(p, q, c)| (p, q, T::from_f64(c)))
                .collect(),
        )
    }

    fn from_terms(terms: Vec<(i32, i32, T)>) -> Self {
        Poly(terms)
    }

    /// Swap rho <-> rhobar.
    fn bar(&self) -> Self {
        Poly(self.0.iter().map(|&(p, q, c)| (q, p, c)).collect())
    }

    fn mul(&self, o: &Poly<T>) -> Poly<T> {
        let mut acc: Vec<(i32, i32, T)> = Vec::new();
        for &(p1, q1, c1) in &self.0 {
            for &(p2, q2, c2) in &o.0 {
                let (p, q, c) = (p1 + p2, q1 + q2, c1 * c2);
                if let Some(e) = acc.iter_mut().find(|e| e.0 == p && e.1 == q) {
                    e.2 += c;
                } else {
                    acc.push((p, q, c));
                }
            }
        }
        acc.retain(|e| !e.2.is_zero());
        Poly(acc)
    }
}

/// One operator term: coeff * rho^dp rhobar^dq d_rho^r d_rhobar^s.
#[derive(Clone, Copy, Debug)]
pub struct OpTerm<T> {
    pub dp: i32,
    pub dq: i32,
    pub r: u32,
    pub s: u32,
    pub c: T,
}

/// Casimir equation multiplied by its common denominator
/// `(rho - rhobar)(1 - rho rhobar) A1(rho) A1(rhobar)` with
/// `A1(rho) = (1 - rho)(1 + rho)^2`.
pub struct CasimirOp<T> {
    /// Delta-independent part.
    pub base: Vec<OpTerm<T>>,
    /// Multiplies -c2(Delta, ell); the cleared-denominator identity term.
    pub eigen: Vec<OpTerm<T>>,
}

fn push_terms<T: Real>(out: &mut Vec<OpTerm<T>>, poly: &Poly<T>, r: u32, s: u32) {
    for &(dp, dq, c) in &poly.0 {
        out.push(OpTerm { dp, dq, r, s, c });
    }
}

/// Assemble the operator for spatial dimension `d` and external parameters
/// `(ca, cb) = (-d12/2, d34/2)`.
pub fn casimir_op<T: Real>(d: T, ca: T, cb: T) -> CasimirOp<T> {
    let s = ca + cb;
    // A1 = (1-rho)(1+rho)^2, A2 = rho^2 A1,
    // A3 = -4 s rho^2 - (2+4s) rho^3 - 2 rho^4, A4 = -4 ca cb rho (1-rho).
    let a1 = Poly::<T>::from_f64(&[(0, 0, 1.0), (1, 0, 1.0), (2, 0, -1.0), (3, 0, -1.0)]);
    let a2 = Poly::<T>::from_f64(&[(2, 0, 1.0), (3, 0, 1.0), (4, 0, -1.0), (5, 0, -1.0)]);
    let two = T::two();
    let four = T::from_f64(4.0);
    let a3 = Poly::from_terms(vec![
        (2, 0, -four * s),
        (3, 0, -(two + four * s)),
        (4, 0, -two),
    ]);
    let ab4 = four * ca * cb;
    let a4 = Poly::from_terms(vec![(1, 0, -ab4), (2, 0, ab4)]);

    // (rho - rhobar)(1 - rho rhobar)
    let front = Poly::<T>::from_f64(&[(1, 0, 1.0), (0, 1, -1.0)])
        .mul(&Poly::<T>::from_f64(&[(0, 0, 1.0), (1, 1, -1.0)]));

    let lead = front.mul(&a1.bar());
    let lead_bar = front.mul(&a1);

    let mut base = Vec::new();
    push_terms(&mut base, &lead.mul(&a2), 2, 0);
    push_terms(&mut base, &lead.mul(&a3), 1, 0);
    push_terms(&mut base, &lead.mul(&a4), 0, 0);
    push_terms(&mut base, &lead_bar.mul(&a2.bar()), 0, 2);
    push_terms(&mut base, &lead_bar.mul(&a3.bar()), 0, 1);
    push_terms(&mut base, &lead_bar.mul(&a4.bar()), 0, 0);

    // Mixing term (d-2) rho rhobar [(1-rho^2) d_rho - (1-rhobar^2) d_rhobar]
    // after the denominator (rho-rhobar)(1-rho rhobar) cancels.
    let a1a1 = a1.mul(&a1.bar());
    let mixc = d - T::two();
    let m1 = Poly::from_terms(vec![(1, 1, mixc), (3, 1, -mixc)]);
    let m2 = Poly::from_terms(vec![(1, 1, -mixc), (1, 3, mixc)]);
    push_terms(&mut base, &a1a1.mul(&m1), 1, 0);
    push_terms(&mut base, &a1a1.mul(&m2), 0, 1);

    let mut eigen = Vec::new();
    push_terms(&mut eigen, &front.mul(&a1a1), 0, 0);

    CasimirOp { base, eigen }
}

/// Casimir eigenvalue c2 = [Delta(Delta-d) + ell(ell+d-2)] / 2.
pub fn casimir_eigenvalue<T: Real>(d: T, delta: T, spin: u32) -> T {
    let l = T::from_usize(spin as usize);
    (delta * (delta - d) + l * (l + d - T::two())) * T::half()
}

/// Radial series coefficients of one block.
#[derive(Clone, Debug)]
pub struct BlockSeries<T> {
    /// Leading exponent (Delta - ell)/2.
    pub x: T,
    pub spin: u32,
    /// Levels run from `spin` to `spin + nmax`.
    pub nmax: u32,
    off: Vec<u32>,
    /// g_{i,j} stored for i >= j as coeff[off[t - spin] + j], t = i + j.
    pub g: Vec<T>,
    /// True when the recursion had to nudge Delta off a singular level system.
    pub regularized: bool,
}

impl<T: Real> BlockSeries<T> {
    #[inline]
    pub fn levels(&self) -> std::ops::RangeInclusive<u32> {
        self.spin..=self.spin + self.nmax
    }

    /// Coefficient g_{i,j} for i + j = t, jm = min(i, j).
    #[inline]
    pub fn coeff(&self, t: u32, jm: u32) -> T {
        self.g[(self.off[(t - self.spin) as usize] + jm) as usize]
    }
}

/// Gegenbauer harmonic ratios a_m / a_0 for C_ell^(nu)(cos theta) written as
/// sum_m a_m e^{i (ell - 2m) theta}; a_m = (nu)_m (nu)_{ell-m} / (m! (ell-m)!).
fn gegenbauer_ratios<T: Real>(nu: T, ell: u32) -> Vec<T> {
    let mut out = Vec::with_capacity((ell / 2 + 1) as usize);
    for m in 0..=ell / 2 {
        // ratio = (nu)_m * binom(ell, m) * (ell-m)! * ... collapsed:
        // (nu)_m (nu)_{ell-m} ell! / (m! (ell-m)! (nu)_ell)
        //   = poch(nu, m) * C(ell, m) / poch(nu + ell - m, m)
        let mut poch_num = T::one();
        let mut poch_den = T::one();
        let mut binc = T::one();
        for i in 0..m {
            poch_num *= nu + T::from_usize(i as usize);
            poch_den *= nu + T::from_usize((ell - m + i) as usize);
            binc *= T::from_usize((ell - i) as usize) / T::from_usize(i as usize + 1);
        }
        out.push(poch_num * binc / poch_den);
    }
    out
}

/// Solve the recursion for the series coefficients of one block.
pub fn solve_series<T: Real>(
    d: T,
    delta: T,
    spin: u32,
    ca: T,
    cb: T,
    nmax: u32,
) -> Result<BlockSeries<T>, BlockError> {
    if delta.is_zero() && spin == 0 {
        // Unit operator: G = 1. The recursion itself sits on a pole of the
        // generic coefficient functions at delta = 0, so short-circuit.
        let mut off = Vec::with_capacity(nmax as usize + 1);
        let mut total = 0u32;
        for t in 0..=nmax {
            off.push(total);
            total += t / 2 + 1;
        }
        let mut g = vec![T::zero(); total as usize];
        g[0] = T::one();
        return Ok(BlockSeries {
            x: T::zero(),
            spin: 0,
            nmax,
            off,
            g,
            regularized: false,
        });
    }
    let mut shift = T::zero();
    for attempt in 0..4 {
        match try_solve(d, delta + shift, spin, ca, cb, nmax) {
            Ok(mut s) => {
                s.regularized = attempt > 0;
                return Ok(s);
            }
            Err(_) if attempt < 3 => {
                // Nudge off a singular level system (null-state dimensions).
                let mag = T::from_f64(1e-9) * (T::one() + delta.abs());
                shift += mag;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

fn try_solve<T: Real>(
    d: T,
    delta: T,
    spin: u32,
    ca: T,
    cb: T,
    nmax: u32,
) -> Result<BlockSeries<T>, BlockError> {
    let ell = spin;
    let x = (delta - T::from_usize(ell as usize)) * T::half();
    let c2 = casimir_eigenvalue(d, delta, spin);
    let op = casimir_op(d, ca, cb);

    let mut terms = op.base.clone();
    for t in &op.eigen {
        terms.push(OpTerm {
            dp: t.dp,
            dq: t.dq,
            r: t.r,
            s: t.s,
            c: -c2 * t.c,
        });
    }

    let mut off = Vec::with_capacity(nmax as usize + 1);
    let mut total = 0u32;
    for t in ell..=ell + nmax {
        off.push(total);
        total += t / 2 + 1;
    }
    let mut g = vec![T::zero(); total as usize];

    // Level ell: Gegenbauer kernel, extreme coefficient normalized to 1.
    let nu = (d - T::two()) * T::half();
    let ratios = gegenbauer_ratios(nu, ell);
    for (m, r) in ratios.iter().enumerate() {
        g[(off[0] + m as u32) as usize] = *r;
    }

    let get = |g: &Vec<T>, i: i64, j: i64| -> T {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let t = hi + lo;
        if t < ell as i64 || lo < 0 {
            return T::zero();
        }
        g[(off[(t - ell as i64) as usize] + lo as u32) as usize]
    };

    for t in ell + 1..=ell + nmax {
        let n_unk = (t / 2 + 1) as usize;
        let mut mat = vec![T::zero(); n_unk * n_unk];
        let mut rhs = vec![T::zero(); n_unk];
        // Equations indexed by monomial (P, Q), P + Q = t + 1, P > Q.
        let mut eqi = 0usize;
        let mut q = 0i64;
        while eqi < n_unk {
            let p = (t + 1) as i64 - q;
            debug_assert!(p > q);
            for term in &terms {
                let i = p - term.dp as i64 + term.r as i64;
                let j = q - term.dq as i64 + term.s as i64;
                if i < 0 || j < 0 {
                    continue;
                }
                let lvl = i + j;
                if lvl < ell as i64 {
                    continue;
                }
                debug_assert!(lvl <= t as i64, "operator shift must be >= 1");
                let w = term.c
                    * falling(x + T::from_i64(i), term.r)
                    * falling(x + T::from_i64(j), term.s);
                if lvl == t as i64 {
                    let col = i.min(j) as usize;
                    mat[eqi * n_unk + col] += w;
                } else {
                    let v = get(&g, i, j);
                    if !v.is_zero() {
                        rhs[eqi] -= w * v;
                    }
                }
            }
            eqi += 1;
            q += 1;
        }

        let sol = solve_dense(&mut mat, &mut rhs, n_unk).ok_or(BlockError::SingularRecursion {
            delta: delta.to_f64(),
            spin,
            level: t,
        })?;
        for (jm, v) in sol.iter().enumerate() {
            g[(off[(t - ell) as usize] + jm as u32) as usize] = *v;
        }
    }

    Ok(BlockSeries {
        x,
        spin,
        nmax,
        off,
        g,
        regularized: false,
    })
}

/// Gaussian elimination with partial pivoting; None on (near-)singularity.
fn solve_dense<T: Real>(mat: &mut [T], rhs: &mut [T], n: usize) -> Option<Vec<T>> {
    let mut scale = T::zero();
    for v in mat.iter() {
        scale = scale.maxv(v.abs());
    }
    if scale.is_zero() {
        return None;
    }
    let tiny = scale * T::eps() * T::from_f64(1e4);
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (mut best, mut bestv) = (col, mat[perm[col] * n + col].abs());
        for row in col + 1..n {
            let v = mat[perm[row] * n + col].abs();
            if v > bestv {
                best = row;
                bestv = v;
            }
        }
        if bestv <= tiny {
            return None;
        }
        perm.swap(col, best);
        let prow = perm[col];
        let pivot = mat[prow * n + col];
        for row in col + 1..n {
            let r = perm[row];
            let f = mat[r * n + col] / pivot;
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let v = mat[prow * n + k] * f;
                mat[r * n + k] -= v;
            }
            rhs[r] -= rhs[prow] * f;
        }
    }
    let mut out = vec![T::zero(); n];
    for col in (0..n).rev() {
        let r = perm[col];
        let mut acc = rhs[r];
        for k in col + 1..n {
            acc -= mat[r * n + k] * out[k];
        }
        out[col] = acc / mat[r * n + col];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_series_is_one() {
        let s = solve_series(3.0f64, 0.0, 0, 0.0, 0.0, 8).unwrap();
        assert_eq!(s.coeff(0, 0), 1.0);
        for t in 1..=8u32 {
            for jm in 0..=t / 2 {
                assert!(
                    s.coeff(t, jm).abs() < 1e-13,
                    "level {t} harmonic {jm} should vanish for the unit block"
                );
            }
        }
    }

    #[test]
    fn gegenbauer_ratios_match_recurrence() {
        // Compare against C_ell^nu(cos t) evaluated through the three-term
        // recurrence, at a few angles.
        let nu = 0.5f64; // d = 3
        let ell = 4u32;
        let ratios = gegenbauer_ratios(nu, ell);
        let eval_harmonics = |theta: f64| -> f64 {
            // sum_m a_m cos((ell-2m) t) over full m range via symmetry a_m = a_{ell-m}
            let mut acc = 0.0;
            for m in 0..=ell {
                let mm = m.min(ell - m);
                let ratio = ratios[mm as usize];
                acc += ratio * ((ell as f64 - 2.0 * m as f64) * theta).cos();
            }
            acc
        };
        let gegen = |theta: f64| -> f64 {
            let xc = theta.cos();
            let mut c0 = 1.0;
            let mut c1 = 2.0 * nu * xc;
            for n in 2..=ell {
                let nf = n as f64;
                let c2 = (2.0 * (nf + nu - 1.0) * xc * c1 - (nf + 2.0 * nu - 2.0) * c0) / nf;
                c0 = c1;
                c1 = c2;
            }
            if ell == 0 {
                c0
            } else {
                c1
            }
        };
        // a_0 = (nu)_ell / ell!
        let mut a0 = 1.0;
        for i in 0..ell {
            a0 *= (nu + i as f64) / (i as f64 + 1.0);
        }
        for &t in &[0.3f64, 1.0, 2.2] {
            assert!(
                (a0 * eval_harmonics(t) - gegen(t)).abs() < 1e-12,
                "theta = {t}"
            );
        }
    }

    #[test]
    fn casimir_op_shifts_are_positive() {
        let op = casimir_op(3.0f64, 0.0, 0.0);
        for t in op.base.iter().chain(op.eigen.iter()) {
            let shift = (t.dp - t.r as i32) + (t.dq - t.s as i32);
            assert!(shift >= 1, "term {t:?} has total shift {shift}");
        }
    }
}

#[cfg(test)]
mod operator_check {
    use crate::blocks::reference::block_d2;

    #[test]
    fn zspace_operator_matches_d2_closed_form() {
        // D_z + D_zbar applied to the d=2 closed form equals
        // [Delta(Delta-d) + l(l+d-2)]/2 times the block (no mixing in d=2).
        let delta = 1.3f64;
        let spin = 2u32;
        let (z0, zb0) = (0.4, 0.25);
        let f = |z: f64, zb: f64| block_d2(delta, spin, 0.0, 0.0, z, zb);
        let h = 1e-5;
        let fz = (f(z0 + h, zb0) - f(z0 - h, zb0)) / (2.0 * h);
        let fzz = (f(z0 + h, zb0) - 2.0 * f(z0, zb0) + f(z0 - h, zb0)) / (h * h);
        let fb = (f(z0, zb0 + h) - f(z0, zb0 - h)) / (2.0 * h);
        let fbb = (f(z0, zb0 + h) - 2.0 * f(z0, zb0) + f(z0, zb0 - h)) / (h * h);
        let dz = z0 * z0 * (1.0 - z0) * fzz - z0 * z0 * fz;
        let dzb = zb0 * zb0 * (1.0 - zb0) * fbb - zb0 * zb0 * fb;
        let l = spin as f64;
        let c2 = (delta * (delta - 2.0) + l * l) / 2.0;
        let lhs = dz + dzb;
        let rhs = c2 * f(z0, zb0);
        assert!(
            ((lhs - rhs) / rhs).abs() < 1e-6,
            "operator residual: {lhs} vs {rhs}"
        );
    }
}
