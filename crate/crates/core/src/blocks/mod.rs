//! Scalar-external conformal blocks and their derivative tables.
//!
//! The block of an exchanged primary with dimension `delta` and spin `spin`
//! is evaluated from its radial double series (see [`casimir`]). Derivative
//! tables at a point are produced by exact chain rule: the series is expanded
//! as a truncated Taylor jet in the symmetric coordinates
//! `a = z + zbar = 1 + u - v`, `b = (z - zbar)^2 = a^2 - 4u`, which are
//! polynomial in (u, v), so no finite differences enter anywhere.

pub mod casimir;
pub mod reference;

use num_complex::Complex;

use crate::error::BlockError;
use crate::scalar::Real;
use crate::series::{Jet, USeries};

use casimir::{casimir_eigenvalue, solve_series, BlockSeries};

/// Series depth (levels above leading) that saturates f64 at the standard
/// crossing point.
pub const DEFAULT_SERIES_ORDER: u32 = 60;
/// Largest |rho| accepted before declaring the point non-convergent.
pub const RHO_MAX: f64 = 0.995;
/// Hard cap on derivative-table order unless overridden.
pub const MAX_TABLE_ORDER: u32 = 24;

/// Parameters of one conformal block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockParams<T> {
    /// Spatial dimension (>= 2).
    pub d: T,
    /// Exchanged scaling dimension.
    pub delta: T,
    /// Exchanged spin.
    pub spin: u32,
    /// External difference Delta_i - Delta_j.
    pub d12: T,
    /// External difference Delta_k - Delta_l.
    pub d34: T,
}

impl<T: Real> BlockParams<T> {
    pub fn new(d: T, delta: T, spin: u32, d12: T, d34: T) -> Self {
        BlockParams {
            d,
            delta,
            spin,
            d12,
            d34,
        }
    }

    /// Block with identical external scalars.
    pub fn identical(d: T, delta: T, spin: u32) -> Self {
        Self::new(d, delta, spin, T::zero(), T::zero())
    }

    /// Casimir parameters (ca, cb) = (-d12/2, d34/2).
    pub fn cas_ab(&self) -> (T, T) {
        (-self.d12 * T::half(), self.d34 * T::half())
    }

    /// True when delta sits below the unitarity minimum for this spin;
    /// evaluation is still permitted (scans need it) but flagged.
    pub fn below_unitarity(&self) -> bool {
        self.delta < unitarity_min(self.d, self.spin)
    }
}

/// Unitarity minimum: (d-2)/2 for scalars, ell + d - 2 for spin ell >= 1.
pub fn unitarity_min<T: Real>(d: T, spin: u32) -> T {
    if spin == 0 {
        (d - T::two()) * T::half()
    } else {
        T::from_usize(spin as usize) + d - T::two()
    }
}

/// Point (u0, v0) where crossing vectors and tables are evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingPoint<T> {
    pub u0: T,
    pub v0: T,
}

impl<T: Real> CrossingPoint<T> {
    pub fn new(u0: T, v0: T) -> Result<Self, BlockError> {
        if !(u0 > T::zero() && v0 > T::zero()) {
            return Err(BlockError::InvalidPoint(
                "cross-ratios must be positive".into(),
            ));
        }
        Ok(CrossingPoint { u0, v0 })
    }

    /// The u <-> v symmetric point z = zbar = 1/2, i.e. (1/4, 1/4).
    pub fn standard() -> Self {
        CrossingPoint {
            u0: T::from_f64(0.25),
            v0: T::from_f64(0.25),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (self.u0 - self.v0).abs() <= T::from_f64(1e-14) * (self.u0.abs() + T::one())
    }

    /// (a, b) = (z + zbar, (z - zbar)^2).
    pub fn ab(&self) -> (T, T) {
        let a = T::one() + self.u0 - self.v0;
        (a, a * a - T::from_f64(4.0) * self.u0)
    }
}

/// Derivative table of one block: entries(m, n) = d_u^m d_v^n G at the point.
#[derive(Clone, Debug)]
pub struct BlockTable<T> {
    pub params: BlockParams<T>,
    pub point: CrossingPoint<T>,
    pub order: u32,
    entries: Vec<T>,
    pub truncation_error: T,
    pub below_unitarity: bool,
    pub regularized: bool,
}

impl<T: Real> BlockTable<T> {
    #[inline]
    fn idx(order: u32, m: u32, n: u32) -> usize {
        // lex by m, n with m + n <= order; row m starts at
        // sum_{k<m} (order - k + 1).
        let m = m as usize;
        let o = order as usize;
        m * (o + 1) - m * m.saturating_sub(1) / 2 + n as usize
    }

    pub fn entry(&self, m: u32, n: u32) -> T {
        debug_assert!(m + n <= self.order);
        self.entries[Self::idx(self.order, m, n)]
    }

    /// Entry-wise linear combination of two tables (test support).
    #[cfg(test)]
    pub(crate) fn linear_combination(a: &Self, ca: T, b: &Self, cb: T) -> Self {
        debug_assert_eq!(a.order, b.order);
        let mut out = a.clone();
        for (o, (x, y)) in out
            .entries
            .iter_mut()
            .zip(a.entries.iter().zip(b.entries.iter()))
        {
            *o = ca * *x + cb * *y;
        }
        out
    }

    /// CSV dump (columns m, n, value) for debugging.
    pub fn dump_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "m,n,value")?;
        for m in 0..=self.order {
            for n in 0..=self.order - m {
                writeln!(w, "{},{},{:.11e}", m, n, self.entry(m, n).to_f64())?;
            }
        }
        Ok(())
    }
}

fn rho_of_z<T: Real>(z: T) -> Result<T, BlockError> {
    if z >= T::one() {
        return Err(BlockError::InvalidPoint(format!(
            "z = {} on or beyond the OPE cut",
            z.to_f64()
        )));
    }
    let s = (T::one() - z).sqrt();
    let q = T::one() + s;
    Ok(z / (q * q))
}

fn rho_of_z_c(z: Complex<f64>) -> Complex<f64> {
    let s = (Complex::new(1.0, 0.0) - z).sqrt();
    let q = Complex::new(1.0, 0.0) + s;
    z / (q * q)
}

fn check_rho<T: Real>(rho: T) -> Result<(), BlockError> {
    let r = rho.abs().to_f64();
    if r > RHO_MAX {
        return Err(BlockError::OutsideConvergence { rho_abs: r });
    }
    Ok(())
}

/// Real (z, zbar) from (u, v) when (z - zbar)^2 >= 0; otherwise None
/// (Euclidean points with complex conjugate z, zbar).
fn real_zzb<T: Real>(u: T, v: T) -> Option<(T, T)> {
    let a = T::one() + u - v;
    let four_u = T::from_f64(4.0) * u;
    let mut b = a * a - four_u;
    // a = 1 + u - v carries absolute rounding ~ eps * (1 + u + v), so b does
    // at the squared scale; clamp exactly-diagonal points to b = 0.
    let scale = (T::one() + u.abs() + v.abs()) * (T::one() + u.abs() + v.abs());
    if b < T::zero() {
        if b > -T::from_f64(1e-12) * scale {
            b = T::zero();
        } else {
            return None;
        }
    }
    let w = b.sqrt();
    Some(((a + w) * T::half(), (a - w) * T::half()))
}

/// Scalar series sum at real (rho, rhobar).
fn sum_series<T: Real>(s: &BlockSeries<T>, delta: T, spin: u32, rho: T, rhob: T) -> (T, T) {
    let maxlvl = spin + s.nmax;
    let mut rp = Vec::with_capacity(maxlvl as usize + 1);
    let mut rbp = Vec::with_capacity(maxlvl as usize + 1);
    let mut p = T::one();
    let mut q = T::one();
    for _ in 0..=maxlvl {
        rp.push(p);
        rbp.push(q);
        p *= rho;
        q *= rhob;
    }
    let mut acc = T::zero();
    let mut last_level_mag = T::zero();
    for t in s.levels() {
        let mut lvl = T::zero();
        let mut lvl_mag = T::zero();
        for jm in 0..=t / 2 {
            let i = (t - jm) as usize;
            let j = jm as usize;
            let g = s.coeff(t, jm);
            let term = if i == j {
                g * rp[i] * rbp[j]
            } else {
                g * (rp[i] * rbp[j] + rp[j] * rbp[i])
            };
            lvl += term;
            lvl_mag += term.abs();
        }
        acc += lvl;
        last_level_mag = lvl_mag;
    }
    let four = T::from_f64(4.0);
    let pref = four.powi(spin as i64)
        * (four * rho.abs()).powf(s.x)
        * (four * rhob.abs()).powf(s.x)
        * sign_fix(rho, rhob, s.x);
    let qmax = rho.abs().maxv(rhob.abs());
    let tail = last_level_mag * qmax / (T::one() - qmax);
    let _ = delta;
    (pref * acc, pref.abs() * tail)
}

/// rho^x for negative rho arises for z < 0; blocks are only evaluated at
/// u, v > 0 where rho, rhobar share sign, so (rho rhobar)^x is well defined.
fn sign_fix<T: Real>(rho: T, rhob: T, _x: T) -> T {
    debug_assert!(
        (rho > T::zero()) == (rhob > T::zero()) || rho.is_zero() || rhob.is_zero(),
        "rho and rhobar must share sign"
    );
    T::one()
}

/// Evaluate G at a point given as (u, v), real-z branch, generic scalar.
pub fn eval_block_at<T: Real>(
    params: &BlockParams<T>,
    u: T,
    v: T,
    series_order: u32,
) -> Result<T, BlockError> {
    if !(u > T::zero() && v > T::zero()) {
        return Err(BlockError::InvalidPoint(
            "cross-ratios must be positive".into(),
        ));
    }
    let (ca, cb) = params.cas_ab();
    match real_zzb(u, v) {
        Some((z, zb)) => {
            let rho = rho_of_z(z)?;
            let rhob = rho_of_z(zb)?;
            check_rho(rho)?;
            check_rho(rhob)?;
            if params.delta.is_zero() && params.spin == 0 {
                return Ok(T::one());
            }
            let s = solve_series(params.d, params.delta, params.spin, ca, cb, series_order)?;
            Ok(sum_series(&s, params.delta, params.spin, rho, rhob).0)
        }
        None => Err(BlockError::InvalidPoint(
            "complex z branch requires the f64 entry point".into(),
        )),
    }
}

/// Spec-named entry point: block value at a crossing point.
pub fn eval_block<T: Real>(
    params: &BlockParams<T>,
    point: &CrossingPoint<T>,
    series_order: u32,
) -> Result<T, BlockError> {
    eval_block_at(params, point.u0, point.v0, series_order)
}

/// f64 evaluation valid on the whole Euclidean overlap region, including
/// points where z and zbar are complex conjugates.
pub fn eval_block_uv(
    params: &BlockParams<f64>,
    u: f64,
    v: f64,
    series_order: u32,
) -> Result<f64, BlockError> {
    if !(u > 0.0 && v > 0.0) {
        return Err(BlockError::InvalidPoint(
            "cross-ratios must be positive".into(),
        ));
    }
    if let Some(_) = real_zzb(u, v) {
        return eval_block_at(params, u, v, series_order);
    }
    if params.delta == 0.0 && params.spin == 0 {
        return Ok(1.0);
    }
    let a = 1.0 + u - v;
    let b = a * a - 4.0 * u;
    let z = Complex::new(a * 0.5, (-b).sqrt() * 0.5);
    let rho = rho_of_z_c(z);
    let r = rho.norm();
    if r > RHO_MAX {
        return Err(BlockError::OutsideConvergence { rho_abs: r });
    }
    let (ca, cb) = params.cas_ab();
    let s = solve_series(params.d, params.delta, params.spin, ca, cb, series_order)?;
    let maxlvl = params.spin + s.nmax;
    let mut rp = Vec::with_capacity(maxlvl as usize + 1);
    let mut p = Complex::new(1.0, 0.0);
    for _ in 0..=maxlvl {
        rp.push(p);
        p *= rho;
    }
    // With rhobar = conj(rho), each (i, j) + (j, i) pair sums to 2 Re(.).
    let mut acc = Complex::new(0.0, 0.0);
    for t in s.levels() {
        for jm in 0..=t / 2 {
            let i = (t - jm) as usize;
            let j = jm as usize;
            let g = s.coeff(t, jm);
            let term = rp[i] * rp[j].conj();
            acc += if i == j {
                term * g
            } else {
                (term + rp[j] * rp[i].conj()) * g
            };
        }
    }
    let fourrho = rho * 4.0;
    let pref = 4.0f64.powi(params.spin as i32)
        * (fourrho.powf(s.x) * fourrho.conj().powf(s.x)).re;
    let val = pref * acc.re;
    Ok(val)
}

// ---------------------------------------------------------------------------
// Derivative tables
// ---------------------------------------------------------------------------

/// Taylor coefficients of rho(z) around z0, `len` terms.
fn rho_taylor<T: Real>(z0: T, len: usize) -> USeries<T> {
    let s0sq = T::one() - z0;
    let s0 = s0sq.sqrt();
    // s(z0 + dz) = s0 (1 + t)^{1/2}, t = -dz/s0^2
    let mut t = USeries::zero(len);
    if len > 1 {
        t.c[1] = -T::one() / s0sq;
    }
    let mut s = t.one_plus_powf(T::half());
    for c in &mut s.c {
        *c *= s0;
    }
    // q = 1 + s; rho = z q^{-2} = z q0^{-2} (1 + (s - s0)/q0)^{-2}
    let q0 = T::one() + s0;
    let mut t2 = s;
    t2.c[0] = T::zero();
    for c in &mut t2.c {
        *c /= q0;
    }
    let qm2 = t2.one_plus_powf(-T::two());
    let mut rho = USeries::zero(len);
    for k in 0..len {
        // multiply qm2 by (z0 + dz) and the constant q0^{-2}
        rho.c[k] = qm2.c[k] * z0;
        if k > 0 {
            rho.c[k] += qm2.c[k - 1];
        }
        rho.c[k] /= q0 * q0;
    }
    rho
}

/// Jet of rho(z(da, dw)) with z = z0 + (da ± dw)/2, weights (2, 1).
fn rho_jet<T: Real>(taylor: &USeries<T>, cap: u32, sign: T) -> Jet<T> {
    let mut lin: Jet<T> = Jet::new(2, 1, cap);
    lin.set(1, 0, T::half());
    lin.set(0, 1, sign * T::half());
    let mut acc = Jet::constant(2, 1, cap, taylor.c[0]);
    let mut pw = Jet::constant(2, 1, cap, T::one());
    for k in 1..taylor.len() {
        pw = pw.mul(&lin);
        if pw.c.iter().all(|v| v.is_zero()) {
            break;
        }
        acc.add_assign_scaled(&pw, taylor.c[k]);
    }
    acc
}

/// Jet of the block in (da, dw) around the point, cap = weighted grade.
fn block_aw_jet<T: Real>(
    series: &BlockSeries<T>,
    params: &BlockParams<T>,
    z0: T,
    zb0: T,
    cap: u32,
) -> Result<Jet<T>, BlockError> {
    let len = cap as usize + 2;
    let tz = rho_taylor(z0, len);
    let r0 = tz.c[0];
    check_rho(r0)?;
    let rjet = rho_jet(&tz, cap, T::one());
    let (rbjet, rb0) = if z0 == zb0 {
        let mut j = rho_jet(&tz, cap, -T::one());
        let rb0 = tz.c[0];
        j.c[0] = rb0;
        (j, rb0)
    } else {
        let tzb = rho_taylor(zb0, len);
        check_rho(tzb.c[0])?;
        (rho_jet(&tzb, cap, -T::one()), tzb.c[0])
    };
    let _ = rb0;

    let maxlvl = series.spin + series.nmax;
    // Power lists R^i, Rbar^i.
    let mut rp = Vec::with_capacity(maxlvl as usize + 1);
    let mut rbp = Vec::with_capacity(maxlvl as usize + 1);
    rp.push(Jet::constant(2, 1, cap, T::one()));
    rbp.push(Jet::constant(2, 1, cap, T::one()));
    for i in 1..=maxlvl as usize {
        rp.push(rp[i - 1].mul(&rjet));
        rbp.push(rbp[i - 1].mul(&rbjet));
    }

    // P = sum_j Rbar^j Q_j(R) + sum_j R^j Q'_j(Rbar), Q_j = sum_{i>=j} g R^i,
    // Q'_j excludes the diagonal.
    let jmx = maxlvl / 2;
    let mut p_acc = Jet::new(2, 1, cap);
    for j in 0..=jmx {
        let mut qj = Jet::new(2, 1, cap);
        let mut qpj = Jet::new(2, 1, cap);
        for t in series.levels() {
            if j > t / 2 {
                continue;
            }
            let i = t - j;
            if i < j {
                continue;
            }
            let g = series.coeff(t, j);
            if g.is_zero() {
                continue;
            }
            qj.add_assign_scaled(&rp[i as usize], g);
            if i > j {
                qpj.add_assign_scaled(&rbp[i as usize], g);
            }
        }
        p_acc.add_assign_scaled(&rbp[j as usize].mul(&qj), T::one());
        p_acc.add_assign_scaled(&rp[j as usize].mul(&qpj), T::one());
    }

    // Prefactor 4^ell (4 R)^x (4 Rbar)^x.
    let four = T::from_f64(4.0);
    let mut a = rjet.powf_series(series.x);
    a.scale(four.powf(series.x));
    let mut ab = rbjet.powf_series(series.x);
    ab.scale(four.powf(series.x));
    let mut g = a.mul(&ab).mul(&p_acc);
    g.scale(four.powi(params.spin as i64));
    Ok(g)
}

/// Collapse an (da, dw) jet to (da, db) with db = (w0 + dw)^2 - w0^2.
fn collapse_to_ab<T: Real>(jet: &Jet<T>, w0: T, order: u32) -> Jet<T> {
    let mut out: Jet<T> = Jet::new(1, 1, order);
    if w0.is_zero() {
        // db = dw^2: even powers only.
        for p in 0..=jet.pmax().min(order) {
            for k in 0..=((order - p).min(jet.qmax(p) / 2)) {
                out.set(p, k, jet.get(p, 2 * k));
            }
        }
        return out;
    }
    // dw = sqrt(w0^2 + db) - w0 = w0 [ (1 + db/w0^2)^{1/2} - 1 ].
    let len = order as usize + 2;
    let mut t = USeries::zero(len);
    t.c[1] = T::one() / (w0 * w0);
    let mut wser = t.one_plus_powf(T::half());
    wser.c[0] = T::zero();
    for c in &mut wser.c {
        *c *= w0;
    }
    // Powers of wser (min order w in db).
    let mut wpow: Vec<USeries<T>> = Vec::with_capacity(jet.qmax(0) as usize + 1);
    let mut one = USeries::zero(len);
    one.c[0] = T::one();
    wpow.push(one);
    for w in 1..=jet.qmax(0) as usize {
        let prev = &wpow[w - 1];
        wpow.push(prev.mul(&wser));
    }
    for p in 0..=jet.pmax().min(order) {
        for w in 0..=jet.qmax(p) {
            let cv = jet.get(p, w);
            if cv.is_zero() {
                continue;
            }
            let pw = &wpow[w as usize];
            for k in 0..=(order - p).min(pw.len() as u32 - 1) {
                out.add_at(p, k, cv * pw.c[k as usize]);
            }
        }
    }
    out
}

/// Compose an (da, db) jet with da = du - dv, db = 2 a0 da + da^2 - 4 du.
fn compose_to_uv<T: Real>(jet: &Jet<T>, a0: T, order: u32) -> Jet<T> {
    let mut ja: Jet<T> = Jet::new(1, 1, order);
    ja.set(1, 0, T::one());
    ja.set(0, 1, -T::one());
    let mut jb: Jet<T> = Jet::new(1, 1, order);
    jb.set(1, 0, T::two() * a0 - T::from_f64(4.0));
    jb.set(0, 1, -T::two() * a0);
    jb.add_assign_scaled(&ja.mul(&ja), T::one());

    // Horner over p (outer) and k (inner).
    let pmax = jet.pmax().min(order);
    let mut total = Jet::new(1, 1, order);
    for p in (0..=pmax).rev() {
        let kmax = jet.qmax(p).min(order);
        let mut row = Jet::new(1, 1, order);
        for k in (0..=kmax).rev() {
            row = row.mul(&jb);
            row.add_at(0, 0, jet.get(p, k));
        }
        total = total.mul(&ja);
        total.add_assign_scaled(&row, T::one());
    }
    total
}

/// Build the derivative table of a block at a point.
pub fn block_table<T: Real>(
    params: &BlockParams<T>,
    point: &CrossingPoint<T>,
    order: u32,
) -> Result<BlockTable<T>, BlockError> {
    block_table_with(params, point, order, DEFAULT_SERIES_ORDER, MAX_TABLE_ORDER)
}

pub fn block_table_with<T: Real>(
    params: &BlockParams<T>,
    point: &CrossingPoint<T>,
    order: u32,
    series_order: u32,
    max_order: u32,
) -> Result<BlockTable<T>, BlockError> {
    if order > max_order {
        return Err(BlockError::OrderTooLarge {
            requested: order,
            max: max_order,
        });
    }
    let (a0, b0) = point.ab();
    if b0 < -T::from_f64(1e-14) {
        return Err(BlockError::InvalidPoint(
            "derivative tables require real z, zbar (b = a^2 - 4u >= 0)".into(),
        ));
    }
    let b0 = b0.maxv(T::zero());
    let w0 = b0.sqrt();
    let z0 = (a0 + w0) * T::half();
    let zb0 = (a0 - w0) * T::half();
    if z0 >= T::one() {
        return Err(BlockError::InvalidPoint("z >= 1".into()));
    }

    let n_entries = ((order + 1) * (order + 2) / 2) as usize;
    let (ca, cb) = params.cas_ab();

    if params.delta.is_zero() && params.spin == 0 {
        let mut entries = vec![T::zero(); n_entries];
        entries[0] = T::one();
        return Ok(BlockTable {
            params: *params,
            point: *point,
            order,
            entries,
            truncation_error: T::zero(),
            below_unitarity: false,
            regularized: false,
        });
    }

    let series = solve_series(params.d, params.delta, params.spin, ca, cb, series_order)?;
    let aw = block_aw_jet(&series, params, z0, zb0, 2 * order)?;
    let ab = collapse_to_ab(&aw, w0, order);
    let uv = compose_to_uv(&ab, a0, order);

    let mut entries = vec![T::zero(); n_entries];
    let mut mfac = T::one();
    for m in 0..=order {
        if m > 0 {
            mfac *= T::from_usize(m as usize);
        }
        let mut nfac = T::one();
        for n in 0..=order - m {
            if n > 0 {
                nfac *= T::from_usize(n as usize);
            }
            entries[BlockTable::<T>::idx(order, m, n)] = uv.get(m, n) * mfac * nfac;
        }
    }

    // Tail estimate from the scalar sum at the point.
    let rho = rho_of_z(z0)?;
    let rhob = rho_of_z(zb0)?;
    let (_, tail) = sum_series(&series, params.delta, params.spin, rho, rhob);

    Ok(BlockTable {
        params: *params,
        point: *point,
        order,
        entries,
        truncation_error: tail,
        below_unitarity: params.below_unitarity(),
        regularized: series.regularized,
    })
}

/// Relative residual of the quadratic Casimir equation on the computed block.
///
/// All derivatives come from the exact jet pipeline; this is a self-test of
/// the whole series + chain-rule stack against the defining PDE.
pub fn casimir_residual<T: Real>(
    params: &BlockParams<T>,
    point: &CrossingPoint<T>,
) -> Result<T, BlockError> {
    let (a0, b0) = point.ab();
    if b0 < -T::from_f64(1e-14) {
        return Err(BlockError::InvalidPoint(
            "casimir_residual requires real z, zbar".into(),
        ));
    }
    let b0 = b0.maxv(T::zero());
    let w0 = b0.sqrt();
    let z0 = (a0 + w0) * T::half();
    let zb0 = (a0 - w0) * T::half();
    if params.delta.is_zero() && params.spin == 0 {
        return Ok(T::zero());
    }
    let (ca, cb) = params.cas_ab();
    let series = solve_series(params.d, params.delta, params.spin, ca, cb, DEFAULT_SERIES_ORDER)?;
    let jet = block_aw_jet(&series, params, z0, zb0, 4)?;

    let g = jet.get(0, 0);
    let ga = jet.get(1, 0);
    let gw = jet.get(0, 1);
    let gaa = jet.get(2, 0) * T::two();
    let gaw = jet.get(1, 1);
    let gww = jet.get(0, 2) * T::two();
    let c2 = casimir_eigenvalue(params.d, params.delta, params.spin);
    let sab = ca + cb + T::one();

    let sym_threshold = T::from_f64(1e-9);
    let value = if w0 <= sym_threshold {
        // z = zbar: the mixing term is a 0/0 limit. With w = z - zbar,
        // N(w) = (1-z)G_z - (1-zbar)G_zbar = (2-a)G_w - w G_a, and G_w = 0
        // for the even function, so the limit is (d-2) z^2 (2(1-z)G_ww - G_a).
        let z = z0;
        let dsum = z * z * (T::one() - z) * (gaa + gww) * T::two()
            - T::two() * sab * z * z * ga
            - T::two() * ca * cb * z * g;
        let mix = (params.d - T::two())
            * z
            * z
            * (T::two() * (T::one() - z) * gww - ga);
        dsum + mix - c2 * g
    } else {
        let gz = ga + gw;
        let gzb = ga - gw;
        let gzz = gaa + T::two() * gaw + gww;
        let gzbzb = gaa - T::two() * gaw + gww;
        let dz = z0 * z0 * (T::one() - z0) * gzz - sab * z0 * z0 * gz - ca * cb * z0 * g;
        let dzb =
            zb0 * zb0 * (T::one() - zb0) * gzbzb - sab * zb0 * zb0 * gzb - ca * cb * zb0 * g;
        let mix = (params.d - T::two()) * (z0 * zb0 / (z0 - zb0))
            * ((T::one() - z0) * gz - (T::one() - zb0) * gzb);
        dz + dzb + mix - c2 * g
    };
    Ok(value.abs() / g.abs().maxv(T::from_f64(1e-300)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const D3: f64 = 3.0;

    #[test]
    fn identity_block_is_one() {
        let p = BlockParams::identical(D3, 0.0, 0);
        let pt = CrossingPoint::standard();
        assert_eq!(eval_block(&p, &pt, 10).unwrap(), 1.0);
        let t = block_table(&p, &pt, 4).unwrap();
        assert_eq!(t.entry(0, 0), 1.0);
        for m in 0..=4u32 {
            for n in 0..=4 - m {
                if (m, n) != (0, 0) {
                    assert_eq!(t.entry(m, n), 0.0);
                }
            }
        }
    }

    #[test]
    fn leading_ope_power_is_half_delta() {
        // G ~ C u^{Delta/2} along z = zbar -> 0.
        let p = BlockParams::identical(D3, 1.0, 0);
        let eval_at_z = |z: f64| {
            let u = z * z;
            let v = (1.0 - z) * (1.0 - z);
            eval_block_at(&p, u, v, 40).unwrap()
        };
        let (z1, z2) = (1e-4, 1e-5);
        let g1 = eval_at_z(z1);
        let g2 = eval_at_z(z2);
        let slope = (g1 / g2).ln() / ((z1 * z1) / (z2 * z2)).ln();
        assert!(
            (slope - 0.5).abs() < 1e-3,
            "fitted leading exponent {slope}"
        );
    }

    #[test]
    fn matches_d2_closed_form() {
        let pts = [(0.3, 0.42), (0.5, 0.5), (0.2, 0.75)];
        for &(z, zb) in &pts {
            for &(delta, spin) in &[(0.8f64, 0u32), (2.3, 2), (4.1, 1), (5.5, 4)] {
                let p = BlockParams::identical(2.0, delta, spin);
                let u = z * zb;
                let v = (1.0 - z) * (1.0 - zb);
                let got = eval_block_at(&p, u, v, 80).unwrap();
                let want = reference::block_d2(delta, spin, 0.0, 0.0, z, zb);
                assert!(
                    (got - want).abs() < 1e-10 * want.abs().max(1.0),
                    "d=2 delta={delta} spin={spin} z={z} zb={zb}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn matches_d4_closed_form() {
        let pts = [(0.3, 0.42), (0.2, 0.55)];
        for &(z, zb) in &pts {
            for &(delta, spin) in &[(2.1f64, 0u32), (3.4, 2), (5.05, 3)] {
                let p = BlockParams::identical(4.0, delta, spin);
                let u = z * zb;
                let v = (1.0 - z) * (1.0 - zb);
                let got = eval_block_at(&p, u, v, 80).unwrap();
                let want = reference::block_d4(delta, spin, 0.0, 0.0, z, zb);
                assert!(
                    (got - want).abs() < 1e-10 * want.abs().max(1.0),
                    "d=4 delta={delta} spin={spin} z={z} zb={zb}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn matches_closed_forms_with_external_differences() {
        // Nonzero d12, d34 exercise the (ca, cb)-dependent operator pieces.
        let (z, zb) = (0.35, 0.52);
        let u = z * zb;
        let v = (1.0 - z) * (1.0 - zb);
        for &(d, delta, spin, d12, d34) in &[
            (2.0f64, 1.9f64, 0u32, 0.7f64, -0.3f64),
            (2.0, 2.6, 2, -0.4, 0.9),
            (4.0, 3.2, 1, 0.5, 0.5),
            (4.0, 2.8, 0, -0.6, 0.25),
        ] {
            let p = BlockParams::new(d, delta, spin, d12, d34);
            let (ca, cb) = p.cas_ab();
            let got = eval_block_at(&p, u, v, 80).unwrap();
            let want = if d == 2.0 {
                reference::block_d2(delta, spin, ca, cb, z, zb)
            } else {
                reference::block_d4(delta, spin, ca, cb, z, zb)
            };
            assert!(
                (got - want).abs() < 1e-10 * want.abs().max(1.0),
                "d={d} delta={delta} spin={spin}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn casimir_residual_small_generic() {
        let pt = CrossingPoint::new(0.1, 0.4).unwrap(); // z = 0.5, zbar = 0.2
        for &(delta, spin) in &[(1.5, 0u32), (4.0, 2), (2.2, 1), (6.3, 4)] {
            let p = BlockParams::identical(D3, delta, spin);
            let r = casimir_residual(&p, &pt).unwrap();
            assert!(r < 1e-8, "delta={delta} spin={spin}: residual {r}");
        }
    }

    #[test]
    fn casimir_residual_symmetric_point() {
        let pt = CrossingPoint::standard();
        for &(delta, spin) in &[(1.5, 0u32), (3.0, 2), (5.2, 3)] {
            let p = BlockParams::identical(D3, delta, spin);
            let r = casimir_residual(&p, &pt).unwrap();
            assert!(r < 1e-8, "delta={delta} spin={spin}: residual {r}");
        }
    }

    #[test]
    fn casimir_residual_identity_exact_zero() {
        let p = BlockParams::identical(D3, 0.0, 0);
        assert_eq!(casimir_residual(&p, &CrossingPoint::standard()).unwrap(), 0.0);
    }

    #[test]
    fn table_matches_finite_differences() {
        let p = BlockParams::identical(D3, 3.0, 0);
        let pt = CrossingPoint::standard();
        let t = block_table(&p, &pt, 2).unwrap();
        let h = 1e-5;
        let f = |u: f64, v: f64| eval_block_uv(&p, u, v, 60).unwrap();
        let du = (f(0.25 + h, 0.25) - f(0.25 - h, 0.25)) / (2.0 * h);
        let dv = (f(0.25, 0.25 + h) - f(0.25, 0.25 - h)) / (2.0 * h);
        let duv = (f(0.25 + h, 0.25 + h) - f(0.25 + h, 0.25 - h) - f(0.25 - h, 0.25 + h)
            + f(0.25 - h, 0.25 - h))
            / (4.0 * h * h);
        assert!((t.entry(0, 0) - f(0.25, 0.25)).abs() < 1e-12);
        assert!(((t.entry(1, 0) - du) / du).abs() < 1e-6, "du {du} vs {}", t.entry(1, 0));
        assert!(((t.entry(0, 1) - dv) / dv).abs() < 1e-6);
        assert!(((t.entry(1, 1) - duv) / duv).abs() < 1e-5);
    }

    #[test]
    fn table_is_deterministic() {
        let p = BlockParams::identical(D3, 2.7, 2);
        let pt = CrossingPoint::standard();
        let t1 = block_table(&p, &pt, 8).unwrap();
        let t2 = block_table(&p, &pt, 8).unwrap();
        for m in 0..=8u32 {
            for n in 0..=8 - m {
                assert_eq!(t1.entry(m, n).to_bits(), t2.entry(m, n).to_bits());
            }
        }
    }

    #[test]
    fn series_order_convergence_is_monotone() {
        let p = BlockParams::identical(D3, 1.2, 0);
        let pt = CrossingPoint::standard();
        let reference = eval_block(&p, &pt, 100).unwrap();
        let mut last = f64::INFINITY;
        for order in [10u32, 20, 30, 40, 50] {
            let v = eval_block(&p, &pt, order).unwrap();
            let err = (v - reference).abs();
            assert!(
                err <= last * 1.5 + 1e-15,
                "order {order}: err {err} vs last {last}"
            );
            last = err;
        }
        assert!(last < 1e-12);
    }

    #[test]
    fn complex_branch_agrees_with_real_branch_continuity() {
        // u = v slightly above 1/4 -> complex z; slightly below -> real.
        let p = BlockParams::identical(D3, 1.8, 0);
        let above = eval_block_uv(&p, 0.2501, 0.2501, 60).unwrap();
        let below = eval_block_uv(&p, 0.2499, 0.2499, 60).unwrap();
        let at = eval_block_uv(&p, 0.25, 0.25, 60).unwrap();
        assert!((above - at).abs() < 1e-3 * at.abs());
        assert!((below - at).abs() < 1e-3 * at.abs());
        assert!(above > at && at > below, "monotone in u = v");
    }

    #[test]
    fn below_unitarity_is_flagged_but_permitted() {
        let p = BlockParams::identical(D3, 0.2, 0);
        assert!(p.below_unitarity());
        let t = block_table(&p, &CrossingPoint::standard(), 2).unwrap();
        assert!(t.below_unitarity);
    }

    #[test]
    fn conserved_spin_two_block_is_stable() {
        // Delta = ell + d - 2 exactly (stress-tensor point in d = 3).
        let p = BlockParams::identical(D3, 3.0, 2);
        let pt = CrossingPoint::standard();
        let v = eval_block(&p, &pt, 60).unwrap();
        let nearby = BlockParams::identical(D3, 3.0 + 1e-7, 2);
        let vn = eval_block(&nearby, &pt, 60).unwrap();
        assert!(
            ((v - vn) / v).abs() < 1e-4,
            "block should be continuous at the conserved point: {v} vs {vn}"
        );
    }
}
