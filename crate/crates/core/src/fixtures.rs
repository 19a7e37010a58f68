//! Generalized-free-field reference data, built by series matching.
//!
//! A GFF scalar sigma of dimension g has the exact four-point function
//! `1 + u^g + (u/v)^g`; with eps = :sigma^2:/sqrt(2) the mixed correlators
//! are also pure Wick algebra:
//!
//! ```text
//!   g_1122 = 1 + 2 u^g + 2 (u/v)^g
//!   g_2222 = 1 + u^{2g} + (u/v)^{2g} + 4 u^g + 4 (u/v)^g + 4 u^{2g} v^{-g}
//!   g_1212 = 2 u^{g/2} + u^{3g/2} + 2 u^{3g/2} v^{-g}
//! ```
//!
//! Matching these double series against the engine's block series level by
//! level produces squared OPE coefficients in the engine's normalization.
//! The overdetermined rows double as a cross-check of the block conventions,
//! reported in [`FamilyMatch::max_residual`]. This module is test support,
//! not part of the public engine surface.
#![doc(hidden)]

use crate::blocks::casimir::solve_series;
use crate::blocks::BlockParams;
use crate::scalar::binom;

/// One factorized target piece c * f(rho) f(rhobar) relative to the family
/// prefactor (4 rho)^e0 (4 rhobar)^e0.
struct Piece {
    scale: f64,
    f: Vec<f64>,
}

/// Series of u^gamma v^{-beta} relative to (16 rho rhobar)^gamma:
/// per-side factor (1+rho)^{2 beta - 2 gamma} (1-rho)^{-2 beta}.
fn uv_piece(gamma: f64, beta: f64, coeff: f64, base: f64, len: usize) -> Piece {
    let mut f = vec![0.0; len];
    for k in 0..len {
        let mut acc = 0.0;
        for i in 0..=k {
            acc += binom(2.0 * beta - 2.0 * gamma, i as u32)
                * binom(-2.0 * beta, (k - i) as u32)
                * (-1.0f64).powi((k - i) as i32);
        }
        f[k] = acc;
    }
    // Exponent offset between the piece and the family base: u^gamma sits at
    // rho-exponent gamma, the family at e0 = base; they must agree.
    debug_assert!((gamma - base).abs() < 1e-12);
    Piece {
        scale: coeff * 16.0f64.powf(gamma),
        f,
    }
}

/// Result of matching one twist family.
#[derive(Debug, Clone)]
pub struct FamilyMatch {
    /// (n, spin, delta, squared-or-product coefficient).
    pub ops: Vec<(u32, u32, f64, f64)>,
    /// Worst relative mismatch over all consistency rows.
    pub max_residual: f64,
}

/// Match `target` (coefficients relative to (4rho)^{e0}(4rhobar)^{e0} with
/// e0 = delta_base/2) against the family Delta(n, l) = delta_base + 2n + l.
fn match_family(
    d: f64,
    delta_base: f64,
    params_of: &dyn Fn(f64, u32) -> BlockParams<f64>,
    allowed: &dyn Fn(u32, u32) -> bool,
    pieces: &[Piece],
    lmax: u32,
) -> FamilyMatch {
    let coeff_target = |i: u32, j: u32| -> f64 {
        pieces
            .iter()
            .map(|p| p.scale * p.f[i as usize] * p.f[j as usize])
            .sum()
    };

    // Block series for each candidate operator, highest level lmax.
    struct Op {
        n: u32,
        spin: u32,
        delta: f64,
        series: crate::blocks::casimir::BlockSeries<f64>,
        pref: f64, // 4^Delta folded out of the stored coefficients
        coeff: f64,
    }
    let mut ops: Vec<Op> = Vec::new();
    let mut max_rel = 0.0f64;
    let mut global_scale = 0.0f64;

    for lvl in 0..=lmax {
        // New operators entering at this level.
        let mut new_ops: Vec<(u32, u32)> = Vec::new();
        let mut n = 0;
        while 2 * n <= lvl {
            let spin = lvl - 2 * n;
            if allowed(n, spin) {
                new_ops.push((n, spin));
            }
            n += 1;
        }
        for &(n, spin) in &new_ops {
            let delta = delta_base + (2 * n + spin) as f64;
            let p = params_of(delta, spin);
            let (ca, cb) = p.cas_ab();
            let series = solve_series(d, delta, spin, ca, cb, lmax.saturating_sub(2 * n))
                .expect("family block series");
            ops.push(Op {
                n,
                spin,
                delta,
                series,
                pref: 4.0f64.powf(delta),
                coeff: 0.0,
            });
        }
        let n_new = new_ops.len();

        // Rows (I, J) with I + J = lvl, I >= J; first n_new rows solve for
        // the new coefficients, the rest are consistency checks.
        let n_rows = (lvl / 2 + 1) as usize;
        let mut mat = vec![0.0f64; n_rows * n_new.max(1)];
        let mut rhs = vec![0.0f64; n_rows];
        let mut scale = 0.0f64;
        for (row, j) in (0..n_rows).enumerate() {
            let jj = j as u32;
            let ii = lvl - jj;
            let mut val = coeff_target(ii, jj);
            scale = scale.max(val.abs());
            let first_new = ops.len() - n_new;
            for op in &ops[..first_new] {
                if op.n > jj {
                    continue;
                }
                let (bi, bj) = (ii - op.n, jj - op.n);
                let t = bi + bj;
                if t < op.spin || t > op.spin + op.series.nmax {
                    continue;
                }
                let g = op.series.coeff(t, bi.min(bj));
                val -= op.coeff * op.pref * g;
                scale = scale.max((op.coeff * op.pref * g).abs());
            }
            rhs[row] = val;
            global_scale = global_scale.max(scale);
            for (col, op) in ops[first_new..].iter().enumerate() {
                if op.n > jj {
                    continue;
                }
                let (bi, bj) = (ii - op.n, jj - op.n);
                if bi + bj != op.spin {
                    continue;
                }
                mat[row * n_new + col] = op.pref * op.series.coeff(op.spin, bi.min(bj));
            }
        }

        if n_new > 0 {
            // Solve the leading square subsystem (rows ordered from the most
            // extreme harmonic, which is upper triangular in practice).
            let mut m = vec![0.0f64; n_new * n_new];
            let mut r = vec![0.0f64; n_new];
            for row in 0..n_new {
                r[row] = rhs[row];
                for col in 0..n_new {
                    m[row * n_new + col] = mat[row * n_new + col];
                }
            }
            let sol = solve_small(&mut m, &mut r, n_new);
            let first_new = ops.len() - n_new;
            for (col, op) in ops[first_new..].iter_mut().enumerate() {
                op.coeff = sol[col];
            }
            // Remaining rows: consistency, relative to the global scale.
            for row in n_new..n_rows {
                let mut resid = rhs[row];
                for (col, op) in ops[first_new..].iter().enumerate() {
                    resid -= mat[row * n_new + col] * op.coeff;
                }
                max_rel = max_rel.max(resid.abs() / global_scale.max(1e-30));
            }
        } else {
            for row in 0..n_rows {
                max_rel = max_rel.max(rhs[row].abs() / global_scale.max(1e-30));
            }
        }
    }

    FamilyMatch {
        ops: ops
            .iter()
            .map(|o| (o.n, o.spin, o.delta, o.coeff))
            .collect(),
        max_residual: max_rel,
    }
}

fn solve_small(mat: &mut [f64], rhs: &mut [f64], n: usize) -> Vec<f64> {
    for col in 0..n {
        let mut best = col;
        for row in col + 1..n {
            if mat[row * n + col].abs() > mat[best * n + col].abs() {
                best = row;
            }
        }
        if best != col {
            for k in 0..n {
                mat.swap(col * n + k, best * n + k);
            }
            rhs.swap(col, best);
        }
        let piv = mat[col * n + col];
        assert!(piv.abs() > 1e-300, "singular family matching system");
        for row in col + 1..n {
            let f = mat[row * n + col] / piv;
            for k in col..n {
                mat[row * n + k] -= f * mat[col * n + k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut out = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for k in col + 1..n {
            acc -= mat[col * n + k] * out[k];
        }
        out[col] = acc / mat[col * n + col];
    }
    out
}

/// sigma x sigma spectrum of the GFF: p_{n,l} = lambda_{11,[ss]}^2 from
/// matching 1 + u^g + (u/v)^g.
pub fn gff_sigma_family(d: f64, g: f64, lmax: u32) -> FamilyMatch {
    let len = lmax as usize + 1;
    let pieces = vec![
        uv_piece(g, 0.0, 1.0, g, len),
        uv_piece(g, g, 1.0, g, len),
    ];
    match_family(
        d,
        2.0 * g,
        &|delta, spin| BlockParams::identical(d, delta, spin),
        &|_, spin| spin % 2 == 0,
        &pieces,
        lmax,
    )
}

/// All matched tables of the mixed sigma/eps GFF system.
pub struct GffMixed {
    /// lambda_11^2 on the [ss] family (from g_1111).
    pub p11: FamilyMatch,
    /// lambda_11 lambda_22 on the [ss] family (from g_1122).
    pub pmix: FamilyMatch,
    /// lambda_22^2 on the [ss] family (from g_2222, u^g part).
    pub p22: FamilyMatch,
    /// lambda_22^2 on the [s^4] family (from g_2222, u^{2g} part).
    pub p22_quartic: FamilyMatch,
    /// lambda_12^2 for sigma itself in the 12 channel (single-operator family).
    pub p12_sigma: FamilyMatch,
    /// lambda_12^2 on the [s eps] family.
    pub p12_mixed: FamilyMatch,
}

pub fn gff_mixed(d: f64, g: f64, lmax: u32) -> GffMixed {
    let len = 2 * lmax as usize + 4;
    let ident = |delta: f64, spin: u32| BlockParams::identical(d, delta, spin);
    let even_only = |_: u32, spin: u32| spin % 2 == 0;

    let p11 = match_family(
        d,
        2.0 * g,
        &ident,
        &even_only,
        &[uv_piece(g, 0.0, 1.0, g, len), uv_piece(g, g, 1.0, g, len)],
        lmax,
    );
    let pmix = match_family(
        d,
        2.0 * g,
        &ident,
        &even_only,
        &[uv_piece(g, 0.0, 2.0, g, len), uv_piece(g, g, 2.0, g, len)],
        lmax,
    );
    let p22 = match_family(
        d,
        2.0 * g,
        &ident,
        &even_only,
        &[uv_piece(g, 0.0, 4.0, g, len), uv_piece(g, g, 4.0, g, len)],
        lmax,
    );
    let p22_quartic = match_family(
        d,
        4.0 * g,
        &ident,
        &even_only,
        &[
            uv_piece(2.0 * g, 0.0, 1.0, 2.0 * g, len),
            uv_piece(2.0 * g, 2.0 * g, 1.0, 2.0 * g, len),
            uv_piece(2.0 * g, g, 4.0, 2.0 * g, len),
        ],
        lmax,
    );
    // 12-channel blocks carry external differences d12 = d34 = -g
    // (<1212> ordering: Delta1 - Delta2 = -g).
    let mixed_params = |delta: f64, spin: u32| BlockParams::new(d, delta, spin, -g, -g);
    let p12_sigma = match_family(
        d,
        g,
        &mixed_params,
        &|n, spin| n == 0 && spin == 0,
        &[uv_piece(g / 2.0, 0.0, 2.0, g / 2.0, len)],
        lmax,
    );
    let p12_mixed = match_family(
        d,
        3.0 * g,
        &mixed_params,
        &|_, _| true,
        &[
            uv_piece(1.5 * g, 0.0, 1.0, 1.5 * g, len),
            uv_piece(1.5 * g, g, 2.0, 1.5 * g, len),
        ],
        lmax,
    );

    GffMixed {
        p11,
        pmix,
        p22,
        p22_quartic,
        p12_sigma,
        p12_mixed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uv_piece_reproduces_u_power_series() {
        // u^g = (16 r rb)^g [(1+r)(1+rb)]^{-2g}: check a few coefficients
        // against direct numerical expansion at rb -> matched product form.
        let g = 0.55;
        let p = uv_piece(g, 0.0, 1.0, g, 6);
        // f_k = binom(-2g, k)
        for k in 0..6 {
            let want = binom(-2.0 * g, k as u32);
            assert!((p.f[k] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn gff_sigma_matching_is_consistent_and_positive() {
        let fm = gff_sigma_family(3.0, 0.55, 10);
        assert!(
            fm.max_residual < 1e-9,
            "family residual {}",
            fm.max_residual
        );
        for &(n, spin, delta, c) in &fm.ops {
            assert!(
                c > 0.0,
                "GFF squared OPE coefficient must be positive: n={n} spin={spin} delta={delta} c={c}"
            );
        }
        // Leading coefficient: lambda^2 of eps = :s^2:/sqrt(2) exchange in
        // <ssss> is 2 in any normalization where the block leads with u^{D/2}:
        // g - 1 = u^g (1 + ...) + ... with both pieces contributing 2 u^g
        // at v = 1... the exact value is convention-dependent; positivity and
        // consistency are the oracle here, plus the known total: the
        // coefficient of u^g as v->1 is 2.
        let c00 = fm.ops.iter().find(|o| o.0 == 0 && o.1 == 0).unwrap().3;
        assert!(c00 > 0.0);
    }

    #[test]
    fn gff_mixed_rank_one_consistency() {
        // P_O = [[l11^2, l11 l22],[l11 l22, l22^2]] must be rank one:
        // p11 * p22 = pmix^2 operator by operator.
        let gm = gff_mixed(3.0, 0.55, 8);
        for ((a, b), c) in gm
            .p11
            .ops
            .iter()
            .zip(gm.p22.ops.iter())
            .zip(gm.pmix.ops.iter())
        {
            assert_eq!((a.0, a.1), (b.0, b.1));
            assert_eq!((a.0, a.1), (c.0, c.1));
            let (p11, p22, pmix) = (a.3, b.3, c.3);
            assert!(
                (p11 * p22 - pmix * pmix).abs() < 1e-8 * (p11 * p22).abs().max(1e-12),
                "rank-1 violation at n={} spin={}: {} * {} vs {}^2",
                a.0,
                a.1,
                p11,
                p22,
                pmix
            );
        }
        assert!(gm.p11.max_residual < 1e-9);
        assert!(gm.pmix.max_residual < 1e-9);
        assert!(gm.p22.max_residual < 1e-9);
        assert!(gm.p22_quartic.max_residual < 1e-8);
        assert!(gm.p12_sigma.max_residual < 1e-9, "sigma-exchange block must match u^{{g/2}} exactly: {}", gm.p12_sigma.max_residual);
        assert!(gm.p12_mixed.max_residual < 1e-8);
    }

    #[test]
    fn gff_sigma_exchange_coefficient_is_two() {
        // lambda_{1 2 sigma}^2 = 2 from the Wick computation of <s eps s eps>.
        let gm = gff_mixed(3.0, 0.6, 6);
        let c = gm.p12_sigma.ops[0].3;
        assert!((c - 2.0).abs() < 1e-9, "lambda_12s^2 = {c}");
    }
}
