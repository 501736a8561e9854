//! Imaginary quadratic field K, orders O_c, class groups via binary quadratic
//! forms, and the ideal-counting functions behind the theta series.
//!
//! Classes of the order of conductor f are represented by primitive reduced
//! forms of discriminant f^2 D. Ideals of norm n map to classes through the
//! root parametrization b^2 = f^2 D (mod 4n) -> form (n, b, (b^2 - f^2 D)/4n);
//! the orientation (ideal -> form without inversion) is fixed globally.

use crate::arith::{self, gcd, gcd_i, invmod, kronecker};
use crate::error::Error;
use crate::Result;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Imaginary quadratic field of fundamental discriminant D < 0, |D| >= 7.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImagQuadField {
    d: i64,
}

impl ImagQuadField {
    pub fn new(d: i64) -> Result<ImagQuadField> {
        if d >= 0 {
            return Err(Error::invalid(format!("discriminant {d} must be negative")));
        }
        if d > -7 {
            return Err(Error::invalid(format!(
                "|D| = {} < 7 violates the standing hypothesis",
                -d
            )));
        }
        let dm = d.rem_euclid(4);
        let fundamental = match dm {
            1 => arith::factorize(d.unsigned_abs()).iter().all(|&(_, e)| e == 1),
            0 => {
                let m = d / 4;
                let mm = m.rem_euclid(4);
                (mm == 2 || mm == 3)
                    && arith::factorize(m.unsigned_abs()).iter().all(|&(_, e)| e == 1)
            }
            _ => false,
        };
        if !fundamental {
            return Err(Error::invalid(format!("{d} is not a fundamental discriminant")));
        }
        Ok(ImagQuadField { d })
    }

    pub fn discriminant(&self) -> i64 {
        self.d
    }

    pub fn abs_disc(&self) -> u64 {
        self.d.unsigned_abs()
    }

    /// The quadratic character omega = (D/.) evaluated at n >= 0.
    pub fn omega(&self, n: u64) -> i8 {
        kronecker(self.d, n).expect("fundamental discriminant is 0 or 1 mod 4")
    }

    /// omega(m) for m mod |D|; omega is |D|-periodic.
    pub fn omega_residue_table(&self) -> Vec<i8> {
        (0..self.abs_disc()).map(|r| self.omega(r)).collect()
    }
}

/// Primitive positive-definite binary quadratic form a x^2 + b xy + c y^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> QuadForm {
        QuadForm { a, b, c }
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd_i(self.a, self.b), self.c.unsigned_abs()) == 1
    }

    pub fn is_reduced(&self) -> bool {
        let ab = self.b.abs();
        if ab > self.a || self.a > self.c {
            return false;
        }
        if (ab == self.a || self.a == self.c) && self.b < 0 {
            return false;
        }
        true
    }

    /// Canonical reduced representative of the proper equivalence class.
    pub fn reduce(&self) -> QuadForm {
        let d = self.discriminant();
        debug_assert!(d < 0 && self.a > 0);
        let (mut a, mut b, mut c) = (self.a, self.b, self.c);
        loop {
            if c < a {
                std::mem::swap(&mut a, &mut c);
                b = -b;
            }
            if b.abs() > a {
                // shift b into [-a, a]
                let two_a = 2 * a;
                let mut k = b.div_euclid(two_a);
                if b - k * two_a > a {
                    k += 1;
                }
                b -= k * two_a;
                c = (b * b - d) / (4 * a);
                continue;
            }
            if b.abs() == a && b < 0 {
                b = -b;
                continue;
            }
            if a == c && b < 0 {
                b = -b;
                continue;
            }
            break;
        }
        QuadForm { a, b, c }
    }

    pub fn identity_form(disc: i64) -> QuadForm {
        if disc.rem_euclid(4) == 0 {
            QuadForm::new(1, 0, -disc / 4)
        } else {
            QuadForm::new(1, 1, (1 - disc) / 4)
        }
    }

    pub fn inverse(&self) -> QuadForm {
        QuadForm::new(self.a, -self.b, self.c).reduce()
    }

    pub fn eval(&self, u: i64, v: i64) -> i64 {
        self.a * u * u + self.b * u * v + self.c * v * v
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Gauss composition of primitive forms of equal discriminant.
pub fn compose(f1: &QuadForm, f2: &QuadForm) -> QuadForm {
    let d = f1.discriminant();
    debug_assert_eq!(d, f2.discriminant());
    let s = (f1.b + f2.b) / 2;
    let (g1, u1, v1) = ext_gcd(f1.a, f2.a);
    // g = gcd(a1, a2, s) = u*a1 + v*a2 + w*s
    let (g, x, w) = ext_gcd(g1, s);
    let (u, v) = (u1 * x, v1 * x);
    debug_assert_eq!(g, u * f1.a + v * f2.a + w * s);
    let a = (f1.a / g) * (f2.a / g);
    let half_diff = (f1.b - f2.b) / 2;
    let inner = v * half_diff - w * f2.c;
    let b_raw = f2.b + 2 * (f2.a / g) * inner;
    let two_a = 2 * a;
    let mut b = b_raw.rem_euclid(two_a);
    if b > a {
        b -= two_a;
    }
    let c = (b * b - d) / (4 * a);
    QuadForm::new(a, b, c).reduce()
}

/// All primitive reduced forms of a negative discriminant = 0, 1 mod 4.
pub fn reduced_forms(disc: i64) -> Result<Vec<QuadForm>> {
    if disc >= 0 {
        return Err(Error::invalid(format!("discriminant {disc} must be negative")));
    }
    let dm = disc.rem_euclid(4);
    if dm != 0 && dm != 1 {
        return Err(Error::invalid(format!("discriminant {disc} is not 0 or 1 mod 4")));
    }
    let mut out = Vec::new();
    let bmax = ((disc.unsigned_abs() as f64 / 3.0).sqrt() as i64) + 1;
    for b in 0..=bmax {
        if (b * b - disc) % 4 != 0 {
            continue;
        }
        let t = (b * b - disc) / 4; // = a*c
        let mut a = b.max(1);
        while a * a <= t {
            if t % a == 0 {
                let c = t / a;
                let f = QuadForm::new(a, b, c);
                if f.is_reduced() && f.is_primitive() {
                    out.push(f);
                    // negative-b companion unless on the boundary
                    if b > 0 && b < a && a < c {
                        out.push(QuadForm::new(a, -b, c));
                    }
                }
            }
            a += 1;
        }
    }
    out.sort();
    Ok(out)
}

/// Class number of the order of conductor f by the classical formula
/// h(O_f) = h(O_K) f prod_{q | f} (1 - (D/q)/q); the unit index is 1
/// because |D| >= 7.
pub fn class_number_formula(field: &ImagQuadField, h_k: u64, f: u64) -> u64 {
    let mut h = h_k;
    for (q, e) in arith::factorize(f) {
        let w = field.omega(q) as i64;
        h *= q.pow(e - 1) * ((q as i64 - w) as u64);
    }
    h
}

/// r1_dagger(n) = #{(a, b), b >= 1 : a^2 - b^2 D = 4n}, the off-diagonal
/// lattice count.
pub fn r1_dagger(field: &ImagQuadField, n: u64) -> u64 {
    let four_n = 4 * n as i64;
    let abs_d = field.abs_disc() as i64;
    let mut count = 0u64;
    let mut b = 1i64;
    while b * b * abs_d <= four_n {
        let rem = four_n - b * b * abs_d;
        let a = (rem as f64).sqrt().round() as i64;
        for cand in [a - 1, a, a + 1] {
            if cand >= 0 && cand * cand == rem {
                count += if cand == 0 { 1 } else { 2 };
                break;
            }
        }
        b += 1;
    }
    count
}

/// Classical divisor-sum identity r_1(n) = sum_{d | n} (D/d), used as an
/// oracle independent of the form machinery.
pub fn r1_divisor_sum(field: &ImagQuadField, n: u64) -> i64 {
    let mut s = 0i64;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            s += field.omega(d) as i64;
            if d != n / d {
                s += field.omega(n / d) as i64;
            }
        }
        d += 1;
    }
    s
}

/// Table of r_1(n) = sum_{d|n} (D/d) for 1 <= n <= x_max by sieve; the n = 0
/// slot is unused.
pub fn r1_divisor_sum_table(field: &ImagQuadField, x_max: usize) -> Vec<i32> {
    let omega = field.omega_residue_table();
    let q = omega.len();
    let mut r1 = vec![0i32; x_max + 1];
    for d in 1..=x_max {
        let w = omega[d % q] as i32;
        if w != 0 {
            let mut m = d;
            while m <= x_max {
                r1[m] += w;
                m += d;
            }
        }
    }
    r1
}

/// Enumerate the half-plane lattice points (u, v) (v > 0, or v = 0 and u > 0)
/// with form value in [1, x_max], invoking `visit(value)` once per point.
/// Each ideal of the class corresponds to exactly one visited point.
pub fn scan_form_values(form: &QuadForm, x_max: u64, mut visit: impl FnMut(u64)) {
    let (a, b, c) = (form.a, form.b, form.c);
    let disc = form.discriminant();
    debug_assert!(disc < 0);
    let x = x_max as i64;
    // v = 0 row: a u^2 <= X, u >= 1.
    let mut u = 1i64;
    let mut val = a;
    while val <= x {
        visit(val as u64);
        val += a * (2 * u + 1);
        u += 1;
    }
    // v >= 1 rows: u in a window from the quadratic formula.
    let mut v = 1i64;
    loop {
        let min_num = (-disc) * v * v;
        if min_num > 4 * a * x {
            break;
        }
        let disc_u = (b * v) * (b * v) - 4 * a * (c * v * v - x);
        let sq = (disc_u as f64).sqrt();
        let mut lo = ((-(b * v) as f64 - sq) / (2.0 * a as f64)).floor() as i64 - 2;
        let hi = ((-(b * v) as f64 + sq) / (2.0 * a as f64)).ceil() as i64 + 2;
        while lo <= hi && form.eval(lo, v) > x {
            lo += 1;
        }
        let mut u = lo;
        let mut val = form.eval(u, v);
        while u <= hi && val <= x {
            if val >= 1 {
                visit(val as u64);
            }
            val += a * (2 * u + 1) + b * v;
            u += 1;
        }
        v += 1;
    }
}

/// Class group of the order O_f presented on primitive reduced forms of
/// discriminant f^2 D, with composition table and a cyclic-factor basis.
#[derive(Debug)]
pub struct OrderClassGroup {
    pub field: ImagQuadField,
    pub conductor: u64,
    pub disc: i64,
    pub forms: Vec<QuadForm>,
    form_index: BTreeMap<QuadForm, u32>,
    mult: Vec<u32>,
    inv: Vec<u32>,
    identity: u32,
    /// Cyclic decomposition: (generator element index, order), grouped by
    /// Sylow factor.
    pub basis: Vec<(u32, u64)>,
    /// Exponent vector of each element over `basis`.
    pub elem_exps: Vec<Vec<u64>>,
}

impl OrderClassGroup {
    pub fn new(field: ImagQuadField, conductor: u64) -> Result<Arc<OrderClassGroup>> {
        assert!(conductor >= 1);
        let disc = (conductor * conductor) as i64 * field.discriminant();
        let forms = reduced_forms(disc)?;
        let h = forms.len();
        let form_index: BTreeMap<QuadForm, u32> =
            forms.iter().enumerate().map(|(i, f)| (*f, i as u32)).collect();
        let identity = form_index[&QuadForm::identity_form(disc).reduce()];
        let mut mult = vec![0u32; h * h];
        for i in 0..h {
            for j in i..h {
                let fij = compose(&forms[i], &forms[j]);
                let k = *form_index
                    .get(&fij)
                    .ok_or_else(|| Error::internal("composition left the reduced set"))?;
                mult[i * h + j] = k;
                mult[j * h + i] = k;
            }
        }
        let mut inv = vec![0u32; h];
        for i in 0..h {
            inv[i] = form_index[&forms[i].inverse()];
        }
        let mut group = OrderClassGroup {
            field,
            conductor,
            disc,
            forms,
            form_index,
            mult,
            inv,
            identity,
            basis: Vec::new(),
            elem_exps: Vec::new(),
        };
        group.build_basis()?;
        Ok(Arc::new(group))
    }

    pub fn h(&self) -> u64 {
        self.forms.len() as u64
    }

    pub fn identity_index(&self) -> u32 {
        self.identity
    }

    #[inline]
    pub fn mul(&self, i: u32, j: u32) -> u32 {
        self.mult[i as usize * self.forms.len() + j as usize]
    }

    pub fn inverse_of(&self, i: u32) -> u32 {
        self.inv[i as usize]
    }

    pub fn pow(&self, i: u32, mut e: u64) -> u32 {
        let mut acc = self.identity;
        let mut base = i;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn element_order(&self, i: u32) -> u64 {
        let mut x = i;
        let mut o = 1u64;
        while x != self.identity {
            x = self.mul(x, i);
            o += 1;
        }
        o
    }

    pub fn class_of_form(&self, f: &QuadForm) -> Option<u32> {
        self.form_index.get(&f.reduce()).copied()
    }

    /// Ideals of norm n as (class index, multiplicity) pairs via the root
    /// parametrization, including imprimitive ideals e * b with e^2 | n.
    pub fn ideals_of_norm(&self, n: u64) -> Result<Vec<(u32, u32)>> {
        if self.conductor > 1 && gcd(n, self.conductor) > 1 {
            return Err(Error::invalid(format!(
                "ideals_of_norm: n = {n} shares a factor with the conductor {}",
                self.conductor
            )));
        }
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        let mut e = 1u64;
        while e * e <= n {
            if n % (e * e) == 0 {
                let m = n / (e * e);
                for (cls, mult) in self.primitive_ideals_of_norm(m)? {
                    *counts.entry(cls).or_insert(0) += mult;
                }
            }
            e += 1;
        }
        Ok(counts.into_iter().collect())
    }

    fn primitive_ideals_of_norm(&self, m: u64) -> Result<Vec<(u32, u32)>> {
        let mut out: Vec<(u32, u32)> = Vec::new();
        for b in self.roots_of_norm(m) {
            let c = ((b as i128 * b as i128 - self.disc as i128) / (4 * m as i128)) as i64;
            let f = QuadForm::new(m as i64, b, c);
            let cls = self.class_of_form(&f).ok_or_else(|| {
                Error::internal(format!("root form {f:?} not in reduced set (disc {})", self.disc))
            })?;
            match out.iter_mut().find(|(k, _)| *k == cls) {
                Some((_, mult)) => *mult += 1,
                None => out.push((cls, 1)),
            }
        }
        Ok(out)
    }

    /// Solutions b in [0, 2m) of b^2 = disc (mod 4m).
    fn roots_of_norm(&self, m: u64) -> Vec<i64> {
        let mut roots = Vec::new();
        let four_m = 4 * m as i128;
        let disc = self.disc as i128;
        for b in 0..(2 * m) {
            let bb = b as i128;
            if (bb * bb - disc).rem_euclid(four_m) == 0 {
                roots.push(b as i64);
            }
        }
        roots
    }

    /// Projection map to the class group at conductor f' | f: vec[i] is the
    /// target class of source class i. Fails loudly if no representative of
    /// some class with norm coprime to the conductor is found below the scan
    /// bound (a bug, not a math case).
    pub fn project_to(&self, target: &OrderClassGroup) -> Result<Vec<u32>> {
        if self.conductor % target.conductor != 0 {
            return Err(Error::invalid(
                "project_to: target conductor must divide source conductor",
            ));
        }
        let ratio = self.conductor / target.conductor;
        let h = self.forms.len();
        let mut map: Vec<Option<u32>> = vec![None; h];
        map[self.identity as usize] = Some(target.identity);
        let mut found = 1usize;
        let bound = 50 * self.conductor * self.field.abs_disc();
        let mut n = 2u64;
        while found < h && n <= bound {
            if gcd(n, self.conductor) == 1 {
                for b in self.roots_of_norm(n) {
                    let c = ((b as i128 * b as i128 - self.disc as i128) / (4 * n as i128)) as i64;
                    let src = match self.class_of_form(&QuadForm::new(n as i64, b, c)) {
                        Some(s) => s,
                        None => continue,
                    };
                    if map[src as usize].is_some() {
                        continue;
                    }
                    // b' = b (f/f')^{-1} mod 2n carries the ideal downstairs.
                    let inv = invmod(ratio % (2 * n), 2 * n)?;
                    let bp = arith::mulmod(b.rem_euclid(2 * n as i64) as u64, inv, 2 * n) as i64;
                    debug_assert_eq!(
                        (bp as i128 * bp as i128 - target.disc as i128).rem_euclid(4 * n as i128),
                        0
                    );
                    let cp =
                        ((bp as i128 * bp as i128 - target.disc as i128) / (4 * n as i128)) as i64;
                    let dst = target
                        .class_of_form(&QuadForm::new(n as i64, bp, cp))
                        .ok_or_else(|| Error::internal("projected form not in target set"))?;
                    map[src as usize] = Some(dst);
                    found += 1;
                    if found == h {
                        break;
                    }
                }
            }
            n += 1;
        }
        if found < h {
            return Err(Error::internal(format!(
                "project_to: no coprime-norm representative below {bound} for some class"
            )));
        }
        Ok(map.into_iter().map(|x| x.unwrap()).collect())
    }

    /// Basis of the abelian group: concatenated bases of the Sylow
    /// subgroups, each computed by the maximal-order/quotient-lift argument.
    fn build_basis(&mut self) -> Result<()> {
        let h = self.h();
        let mut basis: Vec<(u32, u64)> = Vec::new();
        for (p, _) in arith::factorize(h) {
            let mut cof = h;
            while cof % p == 0 {
                cof /= p;
            }
            let mut sylow: Vec<u32> = (0..h as u32).map(|i| self.pow(i, cof)).collect();
            sylow.sort_unstable();
            sylow.dedup();
            let sub = self.p_group_basis(&sylow)?;
            basis.extend(sub);
        }
        // Exponent vectors for every element by enumerating all tuples;
        // bijectivity certifies that the basis is genuinely a basis.
        let r = basis.len();
        let mut exps = vec![Vec::new(); h as usize];
        let mut seen = vec![false; h as usize];
        let mut tuple = vec![0u64; r];
        loop {
            let mut x = self.identity;
            for (k, &(g, _)) in basis.iter().enumerate() {
                x = self.mul(x, self.pow(g, tuple[k]));
            }
            if seen[x as usize] {
                return Err(Error::internal("class group basis is not a direct decomposition"));
            }
            seen[x as usize] = true;
            exps[x as usize] = tuple.clone();
            let mut i = 0;
            loop {
                if i == r {
                    break;
                }
                tuple[i] += 1;
                if tuple[i] < basis[i].1 {
                    break;
                }
                tuple[i] = 0;
                i += 1;
            }
            if i == r {
                break;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::internal("class group basis does not span"));
        }
        self.basis = basis;
        self.elem_exps = exps;
        Ok(())
    }

    /// Basis of an abelian p-group given as an element list, via the
    /// standalone little-group algorithm.
    fn p_group_basis(&self, elements: &[u32]) -> Result<Vec<(u32, u64)>> {
        let index: BTreeMap<u32, u32> =
            elements.iter().enumerate().map(|(i, &e)| (e, i as u32)).collect();
        let n = elements.len();
        let mut mult = vec![0u32; n * n];
        for i in 0..n {
            for j in 0..n {
                let prod = self.mul(elements[i], elements[j]);
                mult[i * n + j] = *index
                    .get(&prod)
                    .ok_or_else(|| Error::internal("Sylow subgroup not closed"))?;
            }
        }
        let identity = *index
            .get(&self.identity)
            .ok_or_else(|| Error::internal("Sylow subgroup missing identity"))?;
        let little = LittleGroup { n, mult, identity };
        Ok(little.basis()?.into_iter().map(|(i, o)| (elements[i as usize], o)).collect())
    }
}

/// Tiny abelian group on labels 0..n with explicit multiplication table,
/// used to compute cyclic-factor bases of Sylow subgroups and quotients.
struct LittleGroup {
    n: usize,
    mult: Vec<u32>,
    identity: u32,
}

impl LittleGroup {
    #[inline]
    fn mul(&self, i: u32, j: u32) -> u32 {
        self.mult[i as usize * self.n + j as usize]
    }

    fn pow(&self, i: u32, mut e: u64) -> u32 {
        let mut acc = self.identity;
        let mut base = i;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    fn order(&self, i: u32) -> u64 {
        let mut x = i;
        let mut o = 1u64;
        while x != self.identity {
            x = self.mul(x, i);
            o += 1;
        }
        o
    }

    fn inverse(&self, i: u32) -> u32 {
        self.pow(i, self.order(i) - 1)
    }

    /// Cyclic-factor basis by the structure-theorem argument: an element of
    /// maximal order spans a direct summand; recurse on the quotient, then
    /// lift each quotient generator g with g^q = g0^c, q | c, to the true
    /// generator g * g0^{-c/q}.
    fn basis(&self) -> crate::Result<Vec<(u32, u64)>> {
        if self.n <= 1 {
            return Ok(Vec::new());
        }
        let (g0, g0ord) = (0..self.n as u32)
            .map(|e| (e, self.order(e)))
            .max_by_key(|&(e, o)| (o, std::cmp::Reverse(e)))
            .unwrap();
        // Cosets of <g0>, labeled by their minimal member.
        let mut gpow = Vec::with_capacity(g0ord as usize);
        let mut x = self.identity;
        loop {
            gpow.push(x);
            x = self.mul(x, g0);
            if x == self.identity {
                break;
            }
        }
        let rep_of = |x: u32| -> u32 { gpow.iter().map(|&gk| self.mul(x, gk)).min().unwrap() };
        let mut reps: Vec<u32> = (0..self.n as u32).map(rep_of).collect();
        reps.sort_unstable();
        reps.dedup();
        let mut out = vec![(g0, g0ord)];
        if reps.len() == 1 {
            return Ok(out);
        }
        let index: BTreeMap<u32, u32> =
            reps.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
        let m = reps.len();
        let mut mult = vec![0u32; m * m];
        for i in 0..m {
            for j in 0..m {
                mult[i * m + j] = index[&rep_of(self.mul(reps[i], reps[j]))];
            }
        }
        let quotient = LittleGroup { n: m, mult, identity: index[&rep_of(self.identity)] };
        for (qlabel, qord) in quotient.basis()? {
            let rep = reps[qlabel as usize];
            // rep^qord lies in <g0>; find the exponent c.
            let t = self.pow(rep, qord);
            let c = gpow
                .iter()
                .position(|&gk| gk == t)
                .ok_or_else(|| crate::Error::internal("quotient power escaped the summand"))?
                as u64;
            if c % qord != 0 {
                return Err(crate::Error::internal("basis lift adjustment failed"));
            }
            let lifted = self.mul(rep, self.pow(self.inverse(g0), c / qord));
            if self.order(lifted) != qord {
                return Err(crate::Error::internal("basis lift has wrong order"));
            }
            out.push((lifted, qord));
        }
        Ok(out)
    }
}
