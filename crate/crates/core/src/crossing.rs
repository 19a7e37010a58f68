//! Crossing-equation vectors.
//!
//! Single correlator: the sum rule
//!
//! ```text
//!   h(u,v) = v^{-D1} - u^{-D1} = sum_m p_m F_{Dm}(u,v),
//!   F_D(u,v) = u^{-D1} G_D(u,v) - v^{-D1} G_D(v,u),   p_m >= 0,
//! ```
//!
//! Multi correlator: the seven equation blocks derived from the three
//! correlators of two scalars phi1, phi2 (see docs/crossing_system.md):
//! two single-type rules, the mixed-channel antisymmetric rule, and the
//! symmetric/antisymmetric parts of both mixed crossing relations. Even
//! exchanged operators carry the PSD 2x2 weight matrix
//! [[l11^2, l11 l22], [l11 l22, l22^2]]; odd exchanged operators carry the
//! nonnegative scalar l12^2.

use crate::blocks::{block_table, BlockParams, BlockTable, CrossingPoint};
use crate::error::BlockError;
use crate::scalar::{binom, falling, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorKind {
    FSingle,
    HSingle,
    MultiComponent,
}

/// Derivative table of one crossing function at the crossing point.
#[derive(Clone, Debug)]
pub struct CrossingVector<T> {
    pub kind: VectorKind,
    pub order: u32,
    pub delta1: T,
    entries: Vec<T>,
}

impl<T: Real> CrossingVector<T> {
    fn idx(order: u32, m: u32, n: u32) -> usize {
        let m = m as usize;
        let o = order as usize;
        m * (o + 1) - m * m.saturating_sub(1) / 2 + n as usize
    }

    pub fn zero(kind: VectorKind, order: u32, delta1: T) -> Self {
        let n = ((order + 1) * (order + 2) / 2) as usize;
        CrossingVector {
            kind,
            order,
            delta1,
            entries: vec![T::zero(); n],
        }
    }

    pub fn entry(&self, m: u32, n: u32) -> T {
        debug_assert!(m + n <= self.order);
        self.entries[Self::idx(self.order, m, n)]
    }

    pub fn set(&mut self, m: u32, n: u32, v: T) {
        let i = Self::idx(self.order, m, n);
        self.entries[i] = v;
    }

    /// Project on a component basis (fixed ordering).
    pub fn extract(&self, basis: &[(u32, u32)]) -> Vec<T> {
        basis.iter().map(|&(m, n)| self.entry(m, n)).collect()
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.entries {
            *v *= s;
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert_eq!(self.order, o.order);
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(o.entries.iter()) {
            *a += *b;
        }
        out
    }
}

/// Components with m > n (independent entries of a u<->v antisymmetric
/// function at the symmetric point), ordered by total order then m.
pub fn anti_basis(lambda: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for s in 1..=lambda {
        for m in s / 2 + 1..=s {
            out.push((m, s - m));
        }
    }
    out
}

/// Components with m >= n (independent entries of a symmetric function),
/// ordered by total order then m.
pub fn sym_basis(lambda: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for s in 0..=lambda {
        for m in (s + 1) / 2..=s {
            out.push((m, s - m));
        }
    }
    out
}

/// Derivatives of u^{-p}: entry (m, 0) only.
fn upow_vec<T: Real>(p: T, point: &CrossingPoint<T>, order: u32) -> CrossingVector<T> {
    let mut out = CrossingVector::zero(VectorKind::MultiComponent, order, p);
    for m in 0..=order {
        out.set(m, 0, falling(-p, m) * point.u0.powf(-p - T::from_usize(m as usize)));
    }
    out
}

fn vpow_vec<T: Real>(p: T, point: &CrossingPoint<T>, order: u32) -> CrossingVector<T> {
    let mut out = CrossingVector::zero(VectorKind::MultiComponent, order, p);
    for n in 0..=order {
        out.set(0, n, falling(-p, n) * point.v0.powf(-p - T::from_usize(n as usize)));
    }
    out
}

/// h(u,v) = v^{-delta1} - u^{-delta1}, exact analytic derivatives.
pub fn build_h<T: Real>(delta1: T, point: &CrossingPoint<T>, order: u32) -> CrossingVector<T> {
    let mut out = vpow_vec(delta1, point, order)
        .add(&upow_vec(delta1, point, order).scaled(-T::one()));
    out.kind = VectorKind::HSingle;
    out.delta1 = delta1;
    out
}

/// Identity-part of the symmetric mixed equations: u^{-p} + v^{-p}.
pub fn build_sym_power<T: Real>(p: T, point: &CrossingPoint<T>, order: u32) -> CrossingVector<T> {
    upow_vec(p, point, order).add(&vpow_vec(p, point, order))
}

/// Leibniz combination u^{-p} G(u,v) + sign * v^{-p} G(v,u).
///
/// For the swapped argument G(v, u) at a symmetric point the transposed
/// table entries are used; a general point needs the table of the block at
/// the mirrored point, computed on demand.
fn weighted_combo<T: Real>(
    p: T,
    block: &BlockTable<T>,
    sign: T,
    order: u32,
) -> Result<CrossingVector<T>, BlockError> {
    if block.order < order {
        return Err(BlockError::OrderTooLarge {
            requested: order,
            max: block.order,
        });
    }
    let point = block.point;
    let swapped: Option<BlockTable<T>> = if point.is_symmetric() {
        None
    } else {
        let mirrored = CrossingPoint::new(point.v0, point.u0)?;
        Some(block_table(&block.params, &mirrored, order)?)
    };
    let mirror_entry = |m: u32, n: u32| -> T {
        match &swapped {
            None => block.entry(n, m),
            Some(t) => t.entry(n, m),
        }
    };

    let mut out = CrossingVector::zero(VectorKind::MultiComponent, order, p);
    for m in 0..=order {
        for n in 0..=order - m {
            // d_u^m d_v^n [u^{-p} G(u,v)]
            let mut acc = T::zero();
            for k in 0..=m {
                acc += binom(T::from_usize(m as usize), k)
                    * falling(-p, k)
                    * point.u0.powf(-p - T::from_usize(k as usize))
                    * block.entry(m - k, n);
            }
            // d_u^m d_v^n [v^{-p} G(v,u)]
            let mut acc2 = T::zero();
            for k in 0..=n {
                acc2 += binom(T::from_usize(n as usize), k)
                    * falling(-p, k)
                    * point.v0.powf(-p - T::from_usize(k as usize))
                    * mirror_entry(m, n - k);
            }
            out.set(m, n, acc + sign * acc2);
        }
    }
    Ok(out)
}

/// F_D(u,v) = u^{-delta1} G(u,v) - v^{-delta1} G(v,u).
pub fn build_f<T: Real>(
    delta1: T,
    block: &BlockTable<T>,
) -> Result<CrossingVector<T>, BlockError> {
    let mut v = weighted_combo(delta1, block, -T::one(), block.order)?;
    v.kind = VectorKind::FSingle;
    v.delta1 = delta1;
    Ok(v)
}

/// Symmetric companion u^{-p} G(u,v) + v^{-p} G(v,u).
pub fn build_s<T: Real>(p: T, block: &BlockTable<T>) -> Result<CrossingVector<T>, BlockError> {
    weighted_combo(p, block, T::one(), block.order)
}

// ---------------------------------------------------------------------------
// Multi-correlator system
// ---------------------------------------------------------------------------

/// Equation blocks, in the fixed stacking order used everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EqId {
    /// <1111> crossing (antisymmetric components).
    F11,
    /// <2222> crossing.
    F22,
    /// <1212> mixed-channel crossing.
    F12,
    /// <1122> crossing, u<->v symmetrized (symmetric components).
    Mix1S,
    /// <1122> crossing, antisymmetrized.
    Mix1A,
    /// <2211> crossing, symmetrized.
    Mix2S,
    /// <2211> crossing, antisymmetrized.
    Mix2A,
}

pub const EQ_ORDER: [EqId; 7] = [
    EqId::F11,
    EqId::F22,
    EqId::F12,
    EqId::Mix1S,
    EqId::Mix1A,
    EqId::Mix2S,
    EqId::Mix2A,
];

impl EqId {
    pub fn name(self) -> &'static str {
        match self {
            EqId::F11 => "F11",
            EqId::F22 => "F22",
            EqId::F12 => "F12",
            EqId::Mix1S => "MIX1S",
            EqId::Mix1A => "MIX1A",
            EqId::Mix2S => "MIX2S",
            EqId::Mix2A => "MIX2A",
        }
    }

    /// Symmetric equations use the m >= n basis, the rest m > n.
    pub fn is_symmetric(self) -> bool {
        matches!(self, EqId::Mix1S | EqId::Mix2S)
    }
}

/// Z2 parity of an exchanged sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

/// Contribution of one Z2-even exchanged operator: the 2x2 weight matrix
/// [[l11^2, l11 l22], [., l22^2]] contracts a, b, c vectors per equation.
#[derive(Clone, Debug)]
pub struct EvenGen<T> {
    pub delta: T,
    pub spin: u32,
    /// E1 row block, weight l11^2.
    pub f11: Vec<T>,
    /// E2 row block, weight l22^2.
    pub f22: Vec<T>,
    /// Mixed row blocks, weight l11 l22.
    pub mix1s: Vec<T>,
    pub mix1a: Vec<T>,
    pub mix2s: Vec<T>,
    pub mix2a: Vec<T>,
}

/// Contribution of one Z2-odd exchanged operator, weight l12^2 >= 0.
#[derive(Clone, Debug)]
pub struct OddGen<T> {
    pub delta: T,
    pub spin: u32,
    pub f12: Vec<T>,
    pub mix1s: Vec<T>,
    pub mix1a: Vec<T>,
    pub mix2s: Vec<T>,
    pub mix2a: Vec<T>,
}

/// Assembly context for the three-correlator crossing system.
#[derive(Clone, Debug)]
pub struct MultiSystem<T> {
    pub d: T,
    pub delta1: T,
    pub delta2: T,
    pub point: CrossingPoint<T>,
    pub lambda: u32,
    pub anti: Vec<(u32, u32)>,
    pub sym: Vec<(u32, u32)>,
}

impl<T: Real> MultiSystem<T> {
    pub fn new(d: T, delta1: T, delta2: T, point: CrossingPoint<T>, lambda: u32) -> Self {
        MultiSystem {
            d,
            delta1,
            delta2,
            point,
            lambda,
            anti: anti_basis(lambda),
            sym: sym_basis(lambda),
        }
    }

    pub fn sigma_m(&self) -> T {
        (self.delta1 + self.delta2) * T::half()
    }

    fn basis(&self, eq: EqId) -> &[(u32, u32)] {
        if eq.is_symmetric() {
            &self.sym
        } else {
            &self.anti
        }
    }

    /// Total stacked dimension.
    pub fn n_rows(&self) -> usize {
        EQ_ORDER.iter().map(|&e| self.basis(e).len()).sum()
    }

    /// Offsets of each equation block in the stacked vector.
    pub fn block_offsets(&self) -> Vec<(EqId, usize, usize)> {
        let mut out = Vec::new();
        let mut off = 0;
        for &e in &EQ_ORDER {
            let len = self.basis(e).len();
            out.push((e, off, len));
            off += len;
        }
        out
    }

    /// Even-sector generator (even spin; Z2-even channel of both 11 and 22).
    pub fn even_generator(&self, delta: T, spin: u32) -> Result<EvenGen<T>, BlockError> {
        let params = BlockParams::identical(self.d, delta, spin);
        let table = block_table(&params, &self.point, self.lambda)?;
        let f11v = build_f(self.delta1, &table)?;
        let f22v = build_f(self.delta2, &table)?;
        let s1 = build_s(self.delta1, &table)?;
        let s2 = build_s(self.delta2, &table)?;
        Ok(EvenGen {
            delta,
            spin,
            f11: f11v.extract(&self.anti),
            f22: f22v.extract(&self.anti),
            mix1s: s1.extract(&self.sym),
            mix1a: f11v.extract(&self.anti),
            mix2s: s2.extract(&self.sym),
            mix2a: f22v.extract(&self.anti),
        })
    }

    /// Odd-sector generator (any spin; the 12 channel).
    ///
    /// Three block families enter: the <1212> channel blocks with
    /// (d12, d34) = (delta, delta), and the two mixed-crossing families
    /// with (d12, d34) = (-delta, delta) and (delta, -delta),
    /// delta = delta1 - delta2. Odd spins flip the sign of the mixed
    /// contributions (3pt antisymmetry under 1 <-> 2).
    pub fn odd_generator(&self, delta: T, spin: u32) -> Result<OddGen<T>, BlockError> {
        let dd = self.delta1 - self.delta2;
        let sm = self.sigma_m();
        let p_g = BlockParams::new(self.d, delta, spin, dd, dd);
        let p_m1 = BlockParams::new(self.d, delta, spin, -dd, dd);
        let p_m2 = BlockParams::new(self.d, delta, spin, dd, -dd);
        let t_g = block_table(&p_g, &self.point, self.lambda)?;
        let t_m1 = block_table(&p_m1, &self.point, self.lambda)?;
        let t_m2 = block_table(&p_m2, &self.point, self.lambda)?;

        let f12 = build_f(sm, &t_g)?;
        let s1t = build_s(sm, &t_m1)?;
        let t1t = build_f(sm, &t_m1)?;
        let s2t = build_s(sm, &t_m2)?;
        let t2t = build_f(sm, &t_m2)?;

        let sign = if spin % 2 == 0 { T::one() } else { -T::one() };
        Ok(OddGen {
            delta,
            spin,
            f12: f12.extract(&self.anti),
            // Equation: A(u,v) = B(v,u) with B carrying (-1)^spin l12^2;
            // symmetric part gets -(-1)^spin, antisymmetric part +(-1)^spin.
            mix1s: s1t.extract(&self.sym).iter().map(|&v| -sign * v).collect(),
            mix1a: t1t.extract(&self.anti).iter().map(|&v| sign * v).collect(),
            mix2s: s2t.extract(&self.sym).iter().map(|&v| -sign * v).collect(),
            mix2a: t2t.extract(&self.anti).iter().map(|&v| sign * v).collect(),
        })
    }

    /// Right-hand side: minus the unit-operator contribution, which carries
    /// the fixed weight matrix [[1,1],[1,1]] (l_110 = l_220 = 1).
    pub fn identity_rhs(&self) -> Vec<T> {
        let h1 = build_h(self.delta1, &self.point, self.lambda);
        let h2 = build_h(self.delta2, &self.point, self.lambda);
        let sp1 = build_sym_power(self.delta1, &self.point, self.lambda);
        let sp2 = build_sym_power(self.delta2, &self.point, self.lambda);
        let mut out = Vec::with_capacity(self.n_rows());
        out.extend(h1.extract(&self.anti));
        out.extend(h2.extract(&self.anti));
        out.extend(std::iter::repeat(T::zero()).take(self.anti.len()));
        out.extend(sp1.extract(&self.sym).iter().map(|&v| -v));
        out.extend(h1.extract(&self.anti));
        out.extend(sp2.extract(&self.sym).iter().map(|&v| -v));
        out.extend(h2.extract(&self.anti));
        out
    }

    /// Stack an even generator contracted with weights (w11, wmix, w22),
    /// i.e. tr(P V) for P = [[w11, wmix/2...]]; used by tests and the
    /// feasibility layer's PSD column construction.
    pub fn stack_even(&self, g: &EvenGen<T>, w11: T, wmix: T, w22: T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_rows());
        out.extend(g.f11.iter().map(|&v| v * w11));
        out.extend(g.f22.iter().map(|&v| v * w22));
        out.extend(std::iter::repeat(T::zero()).take(self.anti.len()));
        out.extend(g.mix1s.iter().map(|&v| v * wmix));
        out.extend(g.mix1a.iter().map(|&v| v * wmix));
        out.extend(g.mix2s.iter().map(|&v| v * wmix));
        out.extend(g.mix2a.iter().map(|&v| v * wmix));
        out
    }

    pub fn stack_odd(&self, g: &OddGen<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_rows());
        out.extend(std::iter::repeat(T::zero()).take(2 * self.anti.len()));
        out.extend(g.f12.iter().copied());
        out.extend(g.mix1s.iter().copied());
        out.extend(g.mix1a.iter().copied());
        out.extend(g.mix2s.iter().copied());
        out.extend(g.mix2a.iter().copied());
        out
    }
}
