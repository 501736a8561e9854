//! Point-scan engine: accumulates the residue-class tables behind every
//! member L-value of a family (the direct route), with fixed summation order
//! and compensated accumulation so results are bit-stable across thread
//! counts.
//!
//! For the group of members with true conductor exponents summing to l, the
//! table holds
//!   W[A][u] = sum over m (coprime to N, depleted per convention) and ideals
//!             of norm d in class A (depleted per convention), with
//!             m^2 d = u (mod p^beta), of omega(m) (a_f(d)/d) K(theta_l d)
//! where K is the shared cutoff kernel with a hard zero beyond the cut and
//! theta_l = 2 pi m^2 / (N |D| p^{2l}). Every member value is a finite
//! character-weighted combination of these entries.

use crate::analytic::{self, KernelTable};
use crate::arith;
use crate::error::Error;
use crate::heckechar::CharacterFamily;
use crate::kahan::KahanSum;
use crate::newform::NewformTable;
use crate::quadfield::{scan_form_values, OrderClassGroup, QuadForm};
use crate::Result;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

/// Canonical kernel argument scale: theta = 2 pi m^2 / (N |D| p^{2 l}).
/// Both computation routes call this one function so kernel arguments agree
/// bit for bit.
#[inline]
pub fn theta(nd: f64, p: u64, level_exp: u32, m: u64) -> f64 {
    2.0 * PI * (m * m) as f64 / (nd * (p as f64).powi(2 * level_exp as i32))
}

/// Shared scan context for one family cell.
pub struct ScanContext<'a> {
    pub f: &'a NewformTable,
    pub kernel: Arc<KernelTable>,
    pub t_cut: f64,
    pub nd: f64,
    pub p: u64,
    pub q: u64,
    pub level_n: u64,
    pub omega: Vec<i8>,
    pub m_depleted: bool,
    pub d_depleted: bool,
}

impl<'a> ScanContext<'a> {
    /// Largest m with a nonempty scan range at level exponent `lexp`.
    fn m_max(&self, lexp: u32) -> u64 {
        let level = self.nd * (self.p as f64).powi(2 * lexp as i32);
        let x_eff = self.t_cut * level / (2.0 * PI);
        (x_eff.sqrt() as u64) + 1
    }

    /// Admissible m values with their omega weights.
    fn m_list(&self, lexp: u32) -> Vec<(u64, f64)> {
        let abs_d = self.omega.len() as u64;
        (1..=self.m_max(lexp))
            .filter(|&m| arith::gcd(m, self.level_n) == 1)
            .filter(|&m| !(self.m_depleted && m % self.p == 0))
            .filter_map(|m| {
                let w = self.omega[(m % abs_d) as usize];
                if w == 0 {
                    None
                } else {
                    Some((m, w as f64))
                }
            })
            .collect()
    }

    /// Scan upper bound for the d variable at kernel-argument scale th:
    /// beyond it every kernel value underflows the hard cut.
    #[inline]
    fn dmax(&self, th: f64) -> u64 {
        (self.t_cut / th).ceil() as u64 + 1
    }
}

/// Residue-class tables for one combined level exponent l, over the classes
/// of the family's top-level class group.
pub struct LevelTable {
    pub level_exp: u32,
    /// row-major [class][residue mod q]
    pub table: Vec<f64>,
    /// certified tail bound for a single half-sum at this level
    pub half_cert: f64,
}

/// Accumulate the level table: deterministic over m-chunks merged in order.
pub fn scan_level_table(
    ctx: &ScanContext,
    group: &OrderClassGroup,
    level_exp: u32,
) -> Result<LevelTable> {
    let h = group.forms.len();
    let q = ctx.q as usize;
    let ms = ctx.m_list(level_exp);
    let needed = {
        let level = ctx.nd * (ctx.p as f64).powi(2 * level_exp as i32);
        (ctx.t_cut * level / (2.0 * PI)) as usize + 2
    };
    if ctx.f.n_max() < needed.min(4_000_000_000) {
        return Err(Error::TableDepth(format!(
            "scan needs coefficients to {needed}, table holds {}",
            ctx.f.n_max()
        )));
    }
    let chunk = (ms.len() / 64).max(1);
    let partials: Vec<Vec<KahanSum>> = ms
        .par_chunks(chunk)
        .map(|mchunk| {
            let mut acc = vec![KahanSum::new(); h * q];
            let af = ctx.f.af_slice();
            for &(m, w) in mchunk {
                let th = theta(ctx.nd, ctx.p, level_exp, m);
                let dmax = ctx.dmax(th);
                let m2q = ((m % ctx.q) * (m % ctx.q)) % ctx.q;
                for (cls, form) in group.forms.iter().enumerate() {
                    let base = cls * q;
                    scan_form_values(form, dmax, |d| {
                        if ctx.d_depleted && d % ctx.p == 0 {
                            return;
                        }
                        let a = af[d as usize];
                        if a == 0 {
                            return;
                        }
                        let t = th * d as f64;
                        let kv = ctx.kernel.eval(t);
                        if kv == 0.0 {
                            return;
                        }
                        let u = (m2q * (d % ctx.q)) % ctx.q;
                        let term = w * (a as f64 / d as f64) * kv / m as f64;
                        acc[base + u as usize].add(term);
                    });
                }
            }
            acc
        })
        .collect();
    let mut merged = vec![KahanSum::new(); h * q];
    for part in &partials {
        for (m, p) in merged.iter_mut().zip(part) {
            m.merge(p);
        }
    }
    let level = ctx.nd * (ctx.p as f64).powi(2 * level_exp as i32);
    let x_eff = (ctx.t_cut * level / (2.0 * PI)) as u64;
    let half_cert = analytic::tail_bound(ctx.kernel.order(), level, x_eff);
    Ok(LevelTable {
        level_exp,
        table: merged.into_iter().map(|k| k.value()).collect(),
        half_cert,
    })
}

/// Per-member central values assembled from the level tables.
pub struct DirectValues {
    /// value of each family member (index-aligned with family.members)
    pub values: Vec<Complex64>,
    /// truncation certificate per member (two half-sums)
    pub certs: Vec<f64>,
}

pub fn member_values(
    ctx: &ScanContext,
    family: &CharacterFamily,
    k: u32,
    tables: &[LevelTable],
) -> DirectValues {
    let h = family.class_group.forms.len();
    let q = ctx.q as usize;
    // cached complex character values
    let rho_vals: Vec<Vec<Complex64>> = (0..family.rhos.len())
        .map(|ri| (0..h as u32).map(|c| family.rho_value(ri, c).to_complex()).collect())
        .collect();
    let chi_vals: Vec<Vec<Complex64>> = (0..family.chi_group.len())
        .map(|ci| (0..ctx.q).map(|u| family.chi_value(ci, u).to_complex()).collect())
        .collect();
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut values = Vec::with_capacity(family.members.len());
    let mut certs = Vec::with_capacity(family.members.len());
    for w in &family.members {
        let lev = (w.x + w.y) as usize;
        let t = &tables[lev];
        let mut s = Complex64::new(0.0, 0.0);
        for cls in 0..h {
            let rv = rho_vals[w.rho_idx][cls];
            if rv.norm_sqr() == 0.0 {
                continue;
            }
            let row = &t.table[cls * q..(cls + 1) * q];
            let mut inner = Complex64::new(0.0, 0.0);
            for (u, &val) in row.iter().enumerate() {
                if val != 0.0 {
                    inner += chi_vals[w.chi_idx][u] * val;
                }
            }
            s += rv * inner;
        }
        // L^{(k)}(1/2)/k! = S + (-1)^k eps conj(S); k! = 1 for k <= 1.
        let value = s + sign * w.root_number * s.conj();
        values.push(value);
        certs.push(2.0 * t.half_cert);
    }
    DirectValues { values, certs }
}

/// Kernel shapes appearing in the corrected Abel decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelShape {
    /// K(theta_l d)
    Plain,
    /// K(theta_l d) - K(theta_{l+1} d): one p^2 level step
    DiffP2,
    /// K(theta_l d) - 2 K(theta_{l+1} d) + K(theta_{l+2} d)
    Mixed,
    /// K(theta_{l-2} d) - K(theta_l d): the p^4 tilde-kernel variant
    /// (levels shifted down by a combined step of two)
    TildeP4,
}

impl KernelShape {
    fn span(&self) -> u32 {
        match self {
            KernelShape::Plain => 0,
            KernelShape::DiffP2 => 1,
            KernelShape::Mixed => 2,
            KernelShape::TildeP4 => 0,
        }
    }
}

/// Counting function for the congruence sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counting {
    /// ideals principal in Pic(O_{p^x}) (what the orthogonality collapse
    /// produces)
    PrincipalClass,
    /// all ideals (the full count r_1)
    AllClasses,
}

/// One congruence sum
///   T = sum_m sum_d omega(m) (a_f(d)/d)/m [count] shape(theta d)
///       over m^2 d = u0 (mod p^y), with the cell's depletion conventions,
/// evaluated over the forms of the order of conductor p^x.
pub fn congruence_sum(
    ctx: &ScanContext,
    group_x: &OrderClassGroup,
    counting: Counting,
    x_exp: u32,
    y_exp: u32,
    shape: KernelShape,
    u0: u64,
) -> Result<(f64, f64)> {
    let lexp = x_exp + y_exp;
    let scan_exp = lexp + shape.span();
    {
        let level = ctx.nd * (ctx.p as f64).powi(2 * scan_exp as i32);
        let needed = (ctx.t_cut * level / (2.0 * PI)) as usize + 2;
        if ctx.f.n_max() < needed {
            return Err(Error::TableDepth(format!(
                "congruence sum needs coefficients to {needed}, table holds {}",
                ctx.f.n_max()
            )));
        }
    }
    let p4 = (ctx.p * ctx.p * ctx.p * ctx.p) as f64;
    // components as (coefficient, theta multiplier applied to theta(lexp),
    // canonical level exponent when one exists)
    let components: Vec<(f64, Option<u32>, f64)> = match shape {
        KernelShape::Plain => vec![(1.0, Some(lexp), 1.0)],
        KernelShape::DiffP2 => vec![(1.0, Some(lexp), 1.0), (-1.0, Some(lexp + 1), 1.0)],
        KernelShape::Mixed => vec![
            (1.0, Some(lexp), 1.0),
            (-2.0, Some(lexp + 1), 1.0),
            (1.0, Some(lexp + 2), 1.0),
        ],
        // tilde(y) = V(p^4 y) - V(y): the compressed argument has no
        // canonical level of its own
        KernelShape::TildeP4 => vec![(1.0, None, p4), (-1.0, Some(lexp), 1.0)],
    };
    let qy = ctx.p.pow(y_exp);
    let ms = ctx.m_list(scan_exp);
    let forms: Vec<QuadForm> = match counting {
        Counting::PrincipalClass => {
            vec![group_x.forms[group_x.identity_index() as usize]]
        }
        Counting::AllClasses => group_x.forms.clone(),
    };
    let chunk = (ms.len() / 64).max(1);
    let partials: Vec<KahanSum> = ms
        .par_chunks(chunk)
        .map(|mchunk| {
            let mut acc = KahanSum::new();
            let af = ctx.f.af_slice();
            for &(m, w) in mchunk {
                if y_exp > 0 && m % ctx.p == 0 {
                    continue;
                }
                let thetas: Vec<(f64, f64)> = components
                    .iter()
                    .map(|&(c, le, mult)| match le {
                        Some(e) => (c, theta(ctx.nd, ctx.p, e, m)),
                        None => (c, theta(ctx.nd, ctx.p, lexp, m) * mult),
                    })
                    .collect();
                let th_scan = theta(ctx.nd, ctx.p, scan_exp, m);
                let dmax = ctx.dmax(th_scan);
                let m2 = (m % qy.max(1)) * (m % qy.max(1)) % qy.max(1);
                for form in &forms {
                    scan_form_values(form, dmax, |d| {
                        if ctx.d_depleted && d % ctx.p == 0 {
                            return;
                        }
                        if qy > 1 && (m2 * (d % qy)) % qy != u0 % qy {
                            return;
                        }
                        let a = af[d as usize];
                        if a == 0 {
                            return;
                        }
                        let mut kv = 0.0;
                        for &(c, th) in &thetas {
                            kv += c * ctx.kernel.eval(th * d as f64);
                        }
                        if kv == 0.0 {
                            return;
                        }
                        acc.add(w * (a as f64 / d as f64) * kv / m as f64);
                    });
                }
            }
            acc
        })
        .collect();
    let mut total = KahanSum::new();
    for p in &partials {
        total.merge(p);
    }
    // certificate: every component truncates at the common effective range;
    // bound each tail at the component's own decay scale
    let x_common = {
        let level = ctx.nd * (ctx.p as f64).powi(2 * scan_exp as i32);
        (ctx.t_cut * level / (2.0 * PI)) as u64
    };
    let mut cert = 0.0;
    for &(c, le, mult) in &components {
        let level = match le {
            Some(e) => ctx.nd * (ctx.p as f64).powi(2 * e as i32),
            None => ctx.nd * (ctx.p as f64).powi(2 * lexp as i32) / mult,
        };
        cert += c.abs() * analytic::tail_bound(ctx.kernel.order(), level, x_common);
    }
    Ok((total.value(), cert))
}
