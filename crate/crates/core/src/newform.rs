//! Normalized Fourier coefficients lambda_f(n) of a weight-2 newform of
//! squarefree level N, built from a_p seeds by the Hecke recurrence.
//!
//! Seeds come either from a text file (`p,ap` lines) or from a rational
//! elliptic curve via point counting: a_p = p + 1 - #E(F_p). Small primes are
//! counted with a quadratic-character sum, large primes with a
//! baby-step/giant-step search for the group order in the Hasse interval
//! (Shanks-Mestre), falling back to the quadratic twist when the order is
//! not yet pinned down.

use crate::arith;
use crate::error::Error;
use crate::Result;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::Path;

/// Primes below this are counted naively; above, by BSGS.
const NAIVE_CUTOFF: u64 = 20_000;

// ---------------------------------------------------------------------------
// Prime-field arithmetic (p < 2^31) with Barrett reduction
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct ModP {
    p: u64,
    mu: u64, // floor(2^62 / p)
}

impl ModP {
    fn new(p: u64) -> ModP {
        debug_assert!(p < (1 << 31));
        ModP { p, mu: ((1u128 << 62) / p as u128) as u64 }
    }

    #[inline]
    fn reduce(&self, x: u64) -> u64 {
        // valid for x < 2^62
        let q = ((x as u128 * self.mu as u128) >> 62) as u64;
        let mut r = x - q * self.p;
        if r >= self.p {
            r -= self.p;
        }
        if r >= self.p {
            r -= self.p;
        }
        r
    }

    #[inline]
    fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce(a * b)
    }

    #[inline]
    fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }

    /// Legendre symbol via Euler's criterion.
    fn legendre(&self, a: u64) -> i8 {
        if a == 0 {
            return 0;
        }
        let t = self.pow(a, (self.p - 1) / 2);
        if t == 1 {
            1
        } else {
            -1
        }
    }

    /// Tonelli-Shanks square root for quadratic residues.
    fn sqrt(&self, a: u64) -> Option<u64> {
        let p = self.p;
        if a == 0 {
            return Some(0);
        }
        if self.legendre(a) != 1 {
            return None;
        }
        if p % 4 == 3 {
            return Some(self.pow(a, (p + 1) / 4));
        }
        let s = (p - 1).trailing_zeros();
        let q = (p - 1) >> s;
        let mut z = 2;
        while self.legendre(z) != -1 {
            z += 1;
        }
        let mut m = s;
        let mut c = self.pow(z, q);
        let mut t = self.pow(a, q);
        let mut r = self.pow(a, (q + 1) / 2);
        while t != 1 {
            let mut i = 0;
            let mut tt = t;
            while tt != 1 {
                tt = self.mul(tt, tt);
                i += 1;
            }
            let b = self.pow(c, 1 << (m - i - 1));
            m = i;
            c = self.mul(b, b);
            t = self.mul(t, c);
            r = self.mul(r, b);
        }
        Some(r)
    }
}

// ---------------------------------------------------------------------------
// Elliptic curves
// ---------------------------------------------------------------------------

/// Integral Weierstrass model y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EllipticCurve {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
}

/// Reduction behaviour at a prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Good(i64),
    /// Multiplicative, a_p is +1 (split) or -1 (nonsplit).
    Multiplicative(i64),
    Additive,
}

impl EllipticCurve {
    pub fn new(a1: i64, a2: i64, a3: i64, a4: i64, a6: i64) -> EllipticCurve {
        EllipticCurve { a1, a2, a3, a4, a6 }
    }

    pub fn b_invariants(&self) -> (i128, i128, i128, i128) {
        let (a1, a2, a3, a4, a6) =
            (self.a1 as i128, self.a2 as i128, self.a3 as i128, self.a4 as i128, self.a6 as i128);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        (b2, b4, b6, b8)
    }

    pub fn discriminant(&self) -> i128 {
        let (b2, b4, b6, b8) = self.b_invariants();
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    /// Level = product of the bad primes, provided every bad prime is
    /// multiplicative (squarefree conductor). Additive reduction is rejected.
    pub fn squarefree_level(&self) -> Result<u64> {
        let disc = self.discriminant();
        if disc == 0 {
            return Err(Error::invalid("singular curve"));
        }
        let mut n = 1u64;
        for (p, _) in factorize_i128(disc) {
            match self.reduction(p)? {
                Reduction::Multiplicative(_) => n *= p,
                Reduction::Additive => {
                    return Err(Error::invalid(format!(
                        "additive reduction at p = {p}: not a squarefree-level newform \
                         (is the model minimal?)"
                    )));
                }
                Reduction::Good(_) => unreachable!("bad prime with good reduction"),
            }
        }
        Ok(n)
    }

    /// Reduction type and a_p at any prime.
    pub fn reduction(&self, p: u64) -> Result<Reduction> {
        let disc = self.discriminant();
        if (disc % p as i128) != 0 {
            return Ok(Reduction::Good(self.ap_good(p)?));
        }
        if p > 100_000 {
            return Err(Error::invalid(format!(
                "bad reduction at suspiciously large prime {p}; non-minimal model?"
            )));
        }
        // Count smooth affine points; #E^ns = smooth + 1 and a_p = p - #E^ns.
        let smooth = self.count_affine(p) - self.singular_points(p).len() as u64;
        let ens = smooth + 1;
        let ap = p as i64 - ens as i64;
        match ap {
            0 => Ok(Reduction::Additive),
            1 | -1 => Ok(Reduction::Multiplicative(ap)),
            _ => Err(Error::internal(format!("impossible singular count at {p}: ap = {ap}"))),
        }
    }

    /// a_p = p + 1 - #E(F_p) at a good prime.
    pub fn ap_good(&self, p: u64) -> Result<i64> {
        if self.discriminant() % p as i128 == 0 {
            return Err(Error::invalid(format!("{p} is a bad prime")));
        }
        if p < NAIVE_CUTOFF {
            Ok(self.ap_naive(p))
        } else {
            self.ap_bsgs(p)
        }
    }

    /// Counts all affine points mod p, by brute force at p = 2 and with the
    /// quadratic-character sum over x for odd p.
    fn count_affine(&self, p: u64) -> u64 {
        if p == 2 {
            let mut count = 0u64;
            for x in 0..2i64 {
                for y in 0..2i64 {
                    let f = y * y + self.a1 * x * y + self.a3 * y
                        - (x * x * x + self.a2 * x * x + self.a4 * x + self.a6);
                    if f.rem_euclid(2) == 0 {
                        count += 1;
                    }
                }
            }
            return count;
        }
        let m = ModP::new(p);
        let (b2, b4, b6, _) = self.b_invariants();
        let b2 = (b2.rem_euclid(p as i128)) as u64;
        let b4 = (b4.rem_euclid(p as i128)) as u64;
        let b6 = (b6.rem_euclid(p as i128)) as u64;
        // squares table
        let mut chi = vec![-1i8; p as usize];
        chi[0] = 0;
        let mut x = 1u64;
        while x <= (p - 1) / 2 {
            chi[m.mul(x, x) as usize] = 1;
            x += 1;
        }
        // #affine = sum_x (1 + chi(4x^3 + b2 x^2 + 2 b4 x + b6))
        let mut total = 0i64;
        for x in 0..p {
            let x2 = m.mul(x, x);
            let g = m.add(
                m.add(m.mul(4, m.mul(x, x2)), m.mul(b2, x2)),
                m.add(m.mul(m.add(b4, b4), x), b6),
            );
            total += 1 + chi[g as usize] as i64;
        }
        total as u64
    }

    /// Singular points of the reduction mod p: solve dF/dy = 0 for y
    /// (p odd) and scan x, so this is O(p); brute force at p = 2.
    fn singular_points(&self, p: u64) -> Vec<(u64, u64)> {
        let pi = p as i64;
        let check = |x: i64, y: i64| -> bool {
            let f = y * y + self.a1 * x * y + self.a3 * y
                - (x * x * x + self.a2 * x * x + self.a4 * x + self.a6);
            if f.rem_euclid(pi) != 0 {
                return false;
            }
            let fx = self.a1 * y - (3 * x * x + 2 * self.a2 * x + self.a4);
            let fy = 2 * y + self.a1 * x + self.a3;
            fx.rem_euclid(pi) == 0 && fy.rem_euclid(pi) == 0
        };
        let mut out = Vec::new();
        if p == 2 {
            for x in 0..2 {
                for y in 0..2 {
                    if check(x, y) {
                        out.push((x as u64, y as u64));
                    }
                }
            }
            return out;
        }
        // dF/dy = 2y + a1 x + a3 = 0 pins y for each x.
        let inv2 = (pi + 1) / 2; // inverse of 2 mod odd p
        for x in 0..pi {
            let y = (-(self.a1 * x + self.a3) % pi * inv2).rem_euclid(pi);
            if check(x, y) {
                out.push((x as u64, y as u64));
            }
        }
        out
    }

    fn ap_naive(&self, p: u64) -> i64 {
        p as i64 - self.count_affine(p) as i64
    }

    /// Short-Weierstrass coefficients (A, B) mod p of the quadratic-twist-free
    /// model y^2 = x^3 + Ax + B, valid for p > 3.
    fn short_model(&self, m: &ModP) -> (u64, u64) {
        let p = m.p;
        let (b2, b4, b6, _) = self.b_invariants();
        let b2 = b2.rem_euclid(p as i128) as u64;
        let b4 = b4.rem_euclid(p as i128) as u64;
        let b6 = b6.rem_euclid(p as i128) as u64;
        // y^2 = x^3 + (b2/4) x^2 + (b4/2) x + b6/4, then depress the cubic:
        // standard A = -27(b2^2 - 24 b4), B = 54(-b2^3 + 36 b2 b4 - 216 b6)
        // for the model Y^2 = X^3 + A X + B after scaling (c4, c6).
        let c4 = m.sub(m.mul(b2, b2), m.mul(24 % p, b4));
        let c6 = {
            let t1 = m.mul(m.mul(b2, b2), b2);
            let t2 = m.mul(m.mul(36 % p, b2), b4);
            let t3 = m.mul(216 % p, b6);
            m.sub(m.add(t2, 0), m.add(t1, t3))
        };
        // Y^2 = X^3 - 27 c4 X - 54 c6
        let a = m.sub(0, m.mul(27 % p, c4));
        let b = m.sub(0, m.mul(54 % p, c6));
        (a, b)
    }

    /// Shanks-Mestre: find #E(F_p) via BSGS zeros of k -> kP on the Hasse
    /// interval, intersecting candidate sets over points of E and its twist.
    fn ap_bsgs(&self, p: u64) -> Result<i64> {
        let m = ModP::new(p);
        let (a, b) = self.short_model(&m);
        let half_width = isqrt(4 * p);
        let lo = p + 1 - half_width;
        let hi = p + 1 + half_width;
        // non-residue for the twist
        let mut g = 2;
        while m.legendre(g) != -1 {
            g += 1;
        }
        let g2 = m.mul(g, g);
        let ta = m.mul(a, g2);
        let tb = m.mul(b, m.mul(g2, g));
        let mut candidates: Option<Vec<u64>> = None;
        let mut x0 = 0u64;
        for attempt in 0..120 {
            let on_twist = attempt % 2 == 1 && attempt > 4;
            let (ca, cb) = if on_twist { (ta, tb) } else { (a, b) };
            // next point on the chosen model
            let (px, py) = loop {
                x0 += 1;
                if x0 >= p {
                    return Err(Error::internal("bsgs: ran out of x coordinates"));
                }
                let rhs = m.add(m.mul(m.add(m.mul(x0, x0), ca), x0), cb);
                if let Some(y) = m.sqrt(rhs) {
                    if y != 0 {
                        break (x0, y);
                    }
                }
            };
            let zeros = bsgs_zeros(&m, ca, (px, py), lo, hi);
            if zeros.is_empty() {
                return Err(Error::internal("bsgs: no annihilator in Hasse interval"));
            }
            let constraint: Vec<u64> = if on_twist {
                zeros.iter().map(|&k| 2 * p + 2 - k).collect()
            } else {
                zeros
            };
            let next = match candidates {
                None => constraint,
                Some(prev) => prev.into_iter().filter(|k| constraint.contains(k)).collect(),
            };
            if next.len() == 1 {
                let n = next[0];
                return Ok(p as i64 + 1 - n as i64);
            }
            if next.is_empty() {
                return Err(Error::internal("bsgs: contradictory constraints"));
            }
            candidates = Some(next);
        }
        Err(Error::internal(format!("bsgs: order ambiguous at p = {p}")))
    }
}

/// Integer square root.
fn isqrt(n: u64) -> u64 {
    let mut s = (n as f64).sqrt() as u64;
    while s > 0 && s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

fn factorize_i128(n: i128) -> Vec<(u64, u32)> {
    let mut n = n.unsigned_abs();
    let mut out = Vec::new();
    let mut d = 2u128;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d as u64, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n as u64, 1));
    }
    out
}

// --- Jacobian point arithmetic for y^2 = x^3 + ax + b -----------------------

#[derive(Clone, Copy, Debug)]
struct Jac {
    x: u64,
    y: u64,
    z: u64, // z = 0 marks infinity
}

const JAC_INF: Jac = Jac { x: 1, y: 1, z: 0 };

fn jac_double(m: &ModP, a: u64, pt: &Jac) -> Jac {
    if pt.z == 0 || pt.y == 0 {
        return JAC_INF;
    }
    let xx = m.mul(pt.x, pt.x);
    let yy = m.mul(pt.y, pt.y);
    let yyyy = m.mul(yy, yy);
    let zz = m.mul(pt.z, pt.z);
    let xyy = m.add(pt.x, yy);
    let s = m.mul(2, m.sub(m.mul(xyy, xyy), m.add(xx, yyyy)));
    let mm = m.add(m.mul(3, xx), m.mul(a, m.mul(zz, zz)));
    let t = m.sub(m.mul(mm, mm), m.add(s, s));
    let x3 = t;
    let y3 = m.sub(m.mul(mm, m.sub(s, t)), m.mul(8 % m.p, yyyy));
    let yz = m.add(pt.y, pt.z);
    let z3 = m.sub(m.mul(yz, yz), m.add(yy, zz));
    Jac { x: x3, y: y3, z: z3 }
}

/// Mixed addition: Jacobian + affine.
fn jac_add_affine(m: &ModP, a: u64, pt: &Jac, qx: u64, qy: u64) -> Jac {
    if pt.z == 0 {
        return Jac { x: qx, y: qy, z: 1 };
    }
    let z1z1 = m.mul(pt.z, pt.z);
    let u2 = m.mul(qx, z1z1);
    let s2 = m.mul(qy, m.mul(pt.z, z1z1));
    let h = m.sub(u2, pt.x);
    if h == 0 {
        if m.sub(s2, pt.y) == 0 {
            return jac_double(m, a, pt);
        }
        return JAC_INF;
    }
    let hh = m.mul(h, h);
    let i = m.mul(4 % m.p, hh);
    let j = m.mul(h, i);
    let r = m.mul(2, m.sub(s2, pt.y));
    let v = m.mul(pt.x, i);
    let x3 = m.sub(m.sub(m.mul(r, r), j), m.add(v, v));
    let y3 = m.sub(m.mul(r, m.sub(v, x3)), m.mul(2, m.mul(pt.y, j)));
    let zh = m.add(pt.z, h);
    let z3 = m.sub(m.mul(zh, zh), m.add(z1z1, hh));
    Jac { x: x3, y: y3, z: z3 }
}

fn jac_scalar_mul(m: &ModP, a: u64, qx: u64, qy: u64, k: u64) -> Jac {
    let mut acc = JAC_INF;
    let mut bit = 63 - k.leading_zeros() as i32;
    while bit >= 0 {
        acc = jac_double(m, a, &acc);
        if (k >> bit) & 1 == 1 {
            acc = jac_add_affine(m, a, &acc, qx, qy);
        }
        bit -= 1;
    }
    acc
}

/// Batch-normalize Jacobian points to affine (x, y); z = 0 entries map to None.
fn jac_normalize(m: &ModP, pts: &[Jac]) -> Vec<Option<(u64, u64)>> {
    let mut prefix = Vec::with_capacity(pts.len());
    let mut acc = 1u64;
    for pt in pts {
        if pt.z != 0 {
            acc = m.mul(acc, pt.z);
        }
        prefix.push(acc);
    }
    let mut inv_acc = m.inv(acc);
    let mut out = vec![None; pts.len()];
    for i in (0..pts.len()).rev() {
        if pts[i].z == 0 {
            continue;
        }
        let prev = if i == 0 { 1 } else { prefix[i - 1] };
        let zinv = m.mul(inv_acc, prev);
        inv_acc = m.mul(inv_acc, pts[i].z);
        let zi2 = m.mul(zinv, zinv);
        out[i] = Some((m.mul(pts[i].x, zi2), m.mul(pts[i].y, m.mul(zi2, zinv))));
    }
    out
}

/// All k in [lo, hi] with k P = O, for P = (px, py) on y^2 = x^3 + ax + b.
fn bsgs_zeros(m: &ModP, a: u64, pt: (u64, u64), lo: u64, hi: u64) -> Vec<u64> {
    let width = hi - lo + 1;
    let s = isqrt(width) + 1;
    let (px, py) = pt;
    // baby steps B_i = i*P, i = 1..s (B_0 = O handled implicitly)
    let mut babies = Vec::with_capacity(s as usize);
    let mut cur = Jac { x: px, y: py, z: 1 };
    let mut order_small = None;
    for i in 1..=s {
        if cur.z == 0 {
            order_small = Some(i);
            break;
        }
        babies.push(cur);
        cur = jac_add_affine(m, a, &cur, px, py);
    }
    if let Some(ord) = order_small {
        // ord(P) = ord exactly (first vanishing multiple)
        let mut out = Vec::new();
        let mut k = lo.div_ceil(ord) * ord;
        while k <= hi {
            out.push(k);
            k += ord;
        }
        return out;
    }
    let baby_aff = jac_normalize(m, &babies);
    let mut table: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    for (idx, aff) in baby_aff.iter().enumerate() {
        let (x, y) = aff.expect("baby steps are finite here");
        table.entry(x).or_default().push((idx as u64 + 1, y));
    }
    // S = s*P normalized affine
    let sp = jac_scalar_mul(m, a, px, py, s);
    let sp_aff = jac_normalize(m, &[sp])[0];
    let (sx, sy) = match sp_aff {
        Some(v) => v,
        None => {
            // ord(P) divides s; found via babies normally, but guard anyway
            let mut out = Vec::new();
            let mut k = lo.div_ceil(s) * s;
            while k <= hi {
                out.push(k);
                k += s;
            }
            return out;
        }
    };
    // giant steps G_t = lo*P + t*S for t = 0..ceil(width/s)
    let tmax = width / s + 1;
    let mut giants = Vec::with_capacity(tmax as usize + 1);
    let mut gt = jac_scalar_mul(m, a, px, py, lo);
    for _ in 0..=tmax {
        giants.push(gt);
        gt = jac_add_affine(m, a, &gt, sx, sy);
    }
    let giants_aff = jac_normalize(m, &giants);
    let mut zeros = Vec::new();
    for (t, aff) in giants_aff.iter().enumerate() {
        match aff {
            None => {
                let k = lo + t as u64 * s;
                if k <= hi {
                    zeros.push(k);
                }
            }
            Some((gx, gy)) => {
                if let Some(entries) = table.get(gx) {
                    for &(i, by) in entries {
                        // G_t = -B_i  <=>  (lo + t s + i) P = O
                        if *gy == m.sub(0, by) {
                            let k = lo + t as u64 * s + i;
                            if k <= hi {
                                zeros.push(k);
                            }
                        }
                    }
                }
            }
        }
    }
    zeros.sort_unstable();
    zeros.dedup();
    zeros
}

// ---------------------------------------------------------------------------
// Seeds and the coefficient table
// ---------------------------------------------------------------------------

/// Source of a_p seeds: a curve, or an explicit table from a seeds file.
#[derive(Debug, Clone)]
pub enum ApSource {
    Curve(EllipticCurve),
    Table { level: u64, seeds: BTreeMap<u64, i64> },
}

impl ApSource {
    pub fn level(&self) -> Result<u64> {
        match self {
            ApSource::Curve(e) => e.squarefree_level(),
            ApSource::Table { level, .. } => Ok(*level),
        }
    }

    fn ap(&self, p: u64, level: u64) -> Result<i64> {
        match self {
            ApSource::Curve(e) => {
                if level % p == 0 {
                    match e.reduction(p)? {
                        Reduction::Multiplicative(ap) => Ok(ap),
                        _ => Err(Error::internal("level prime is not multiplicative")),
                    }
                } else {
                    e.ap_good(p)
                }
            }
            ApSource::Table { seeds, .. } => seeds
                .get(&p)
                .copied()
                .ok_or_else(|| Error::invalid(format!("missing seed for prime {p}"))),
        }
    }
}

/// Parse a seeds file: header `N,<level>`, then `p,ap` per line.
/// `#` starts a comment; malformed lines are hard errors with line numbers.
pub fn parse_seeds(path: &Path) -> Result<ApSource> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut level: Option<u64> = None;
    let mut seeds = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key,value`", lineno + 1)))?;
        let (a, b) = (a.trim(), b.trim());
        if a == "N" {
            let n: u64 = b
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad level `{b}`", lineno + 1)))?;
            level = Some(n);
        } else {
            let p: u64 = a
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad prime `{a}`", lineno + 1)))?;
            let ap: i64 = b
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad a_p `{b}`", lineno + 1)))?;
            if !arith::is_prime(p) {
                return Err(Error::Parse(format!("line {}: {p} is not prime", lineno + 1)));
            }
            seeds.insert(p, ap);
        }
    }
    let level = level.ok_or_else(|| Error::Parse("missing `N,<level>` header".into()))?;
    Ok(ApSource::Table { level, seeds })
}

/// Coefficient table in the analytic normalization: stores the integer
/// weighted coefficients a_f(n) = sqrt(n) lambda_f(n) and derives
/// lambda_f(n) = a_f(n)/sqrt(n) on demand.
#[derive(Debug)]
pub struct NewformTable {
    pub level: u64,
    af: Vec<i32>,
}

impl NewformTable {
    /// Build coefficients for n <= n_max. Seeds must cover all primes in
    /// range; at p | N the seed must be +-1, elsewhere it must satisfy the
    /// Deligne bound a_p^2 <= 4p.
    pub fn build(source: &ApSource, n_max: usize) -> Result<NewformTable> {
        let level = source.level()?;
        let sq: Vec<(u64, u32)> = arith::factorize(level);
        if sq.iter().any(|&(_, e)| e > 1) {
            return Err(Error::invalid(format!("level {level} is not squarefree")));
        }
        let primes = sieve_primes(n_max);
        // a_p in parallel (point counting dominates), deterministic order out.
        let aps: Vec<Result<i64>> =
            primes.par_iter().map(|&p| source.ap(p, level)).collect();
        // af[n] accumulates the product of a(p^{v_p(n)}) over p | n.
        let mut af = vec![1i32; n_max + 1];
        if !af.is_empty() {
            af[0] = 0;
        }
        for (&p, ap) in primes.iter().zip(aps) {
            let ap = ap?;
            let bad = level % p == 0;
            if bad {
                if ap != 1 && ap != -1 {
                    return Err(Error::invalid(format!(
                        "a_{p} = {ap} at p | N must be +-1 (weight 2, squarefree level)"
                    )));
                }
            } else if (ap as i128) * (ap as i128) > 4 * p as i128 {
                return Err(Error::invalid(format!("a_{p} = {ap} violates the Deligne bound")));
            }
            // prime power values a(p^e)
            let mut powers: Vec<i64> = vec![1, ap];
            let mut pe = p as u128;
            while pe * p as u128 <= n_max as u128 {
                pe *= p as u128;
                let e = powers.len();
                let next = if bad {
                    ap * powers[e - 1]
                } else {
                    ap * powers[e - 1] - p as i64 * powers[e - 2]
                };
                powers.push(next);
            }
            // multiply a(p^e) into every n with p-valuation exactly e
            let mut pe = p as usize;
            let mut e = 1usize;
            while pe <= n_max {
                let val = powers[e];
                debug_assert!(val.unsigned_abs() < i32::MAX as u64);
                let val32 = val as i64;
                let mut j = pe;
                let mut cnt = 1u64;
                while j <= n_max {
                    if cnt != p {
                        af[j] = (af[j] as i64 * val32) as i32;
                    } else {
                        cnt = 0;
                    }
                    j += pe;
                    cnt += 1;
                }
                match pe.checked_mul(p as usize) {
                    Some(next) if next <= n_max => {
                        pe = next;
                        e += 1;
                    }
                    _ => break,
                }
            }
        }
        Ok(NewformTable { level, af })
    }

    pub fn n_max(&self) -> usize {
        self.af.len().saturating_sub(1)
    }

    /// Integer weighted coefficient a_f(n) = sqrt(n) lambda_f(n).
    #[inline]
    pub fn af(&self, n: usize) -> i64 {
        self.af[n] as i64
    }

    #[inline]
    pub fn af_slice(&self) -> &[i32] {
        &self.af
    }

    /// Normalized coefficient lambda_f(n).
    #[inline]
    pub fn lambda(&self, n: usize) -> f64 {
        self.af[n] as f64 / (n as f64).sqrt()
    }
}

/// Odd-even wheel sieve of Eratosthenes; returns primes <= n.
pub fn sieve_primes(n: usize) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let mut is_comp = vec![false; n + 1];
    let mut primes = vec![2u64];
    let mut p = 3usize;
    while p * p <= n {
        if !is_comp[p] {
            let mut j = p * p;
            while j <= n {
                is_comp[j] = true;
                j += 2 * p;
            }
        }
        p += 2;
    }
    let mut q = 3usize;
    while q <= n {
        if !is_comp[q] {
            primes.push(q as u64);
        }
        q += 2;
    }
    primes
}

/// Bundled rational newforms (curve coefficients and their levels), used by
/// tests and handy for CLI examples.
pub mod curves {
    use super::EllipticCurve;

    pub const E11A1: EllipticCurve = EllipticCurve { a1: 0, a2: -1, a3: 1, a4: -10, a6: -20 };
    pub const E14A1: EllipticCurve = EllipticCurve { a1: 1, a2: 0, a3: 1, a4: 4, a6: -6 };
    pub const E15A1: EllipticCurve = EllipticCurve { a1: 1, a2: 1, a3: 1, a4: -10, a6: -10 };
    pub const E17A1: EllipticCurve = EllipticCurve { a1: 1, a2: -1, a3: 1, a4: -1, a6: -14 };
    pub const E19A1: EllipticCurve = EllipticCurve { a1: 0, a2: 1, a3: 1, a4: -9, a6: -15 };
    pub const E37A1: EllipticCurve = EllipticCurve { a1: 0, a2: 0, a3: 1, a4: -1, a6: 0 };
}
