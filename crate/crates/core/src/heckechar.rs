//! Hecke characters W = rho . (chi o N) of p-power conductor: family
//! enumeration, true conductors, tame parts, classification flags, root
//! numbers, and the Dirichlet coefficients of L(s, f x W).
//!
//! Families are indexed by pairs (rho, chi) following the unique
//! decomposition of finite-order Hecke characters unramified outside p; they
//! are never deduplicated by the resulting ideal character (a collision would
//! surface in the partition tests).

use crate::arith::{self, CharValue, DirichletCharacter, RootOfUnity};
use crate::error::Error;
use crate::newform::NewformTable;
use crate::quadfield::{ImagQuadField, OrderClassGroup};
use crate::Result;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Character of Pic(O_{p^alpha}) as exponents on the group basis, with its
/// true conductor exponent cached.
#[derive(Debug, Clone)]
pub struct RingClassCharacter {
    pub exps: Vec<u64>,
    pub conductor_exp: u32,
}

/// Identifier of the tamely ramified part: the tuple of W-values on a fixed
/// generating set of the prime-to-p subgroup of Pic(O_{p^alpha}) x (Z/p^beta)^x.
pub type TameId = Vec<RootOfUnity>;

/// One member of a character family.
#[derive(Debug, Clone)]
pub struct HeckeCharacterW {
    pub rho_idx: usize,
    pub chi_idx: usize,
    /// true conductor exponents: rho has conductor p^x, chi has conductor p^y
    pub x: u32,
    pub y: u32,
    pub tame: TameId,
    pub self_dual: bool,
    pub exceptional: bool,
    pub root_number: Complex64,
}

impl HeckeCharacterW {
    pub fn generic(&self) -> bool {
        !self.exceptional
    }

    /// Forced zero of the k = 0 central value: self-dual with the same
    /// L-function on both sides of the functional equation and eps = -1.
    pub fn forced_zero(&self) -> bool {
        self.self_dual && (self.root_number.re + 1.0).abs() < 1e-12
    }
}

/// The full orthogonal set X_{p^alpha, p^beta} with its classification data.
#[derive(Debug)]
pub struct CharacterFamily {
    pub field: ImagQuadField,
    pub level_n: u64,
    pub p: u64,
    pub alpha: u32,
    pub beta: u32,
    pub class_group: Arc<OrderClassGroup>,
    pub chi_group: Vec<DirichletCharacter>,
    pub rhos: Vec<RingClassCharacter>,
    pub members: Vec<HeckeCharacterW>,
    /// by-index lookup for conjugation
    conj_map: Vec<usize>,
}

impl CharacterFamily {
    pub fn h_total(&self) -> u64 {
        self.members.len() as u64
    }

    /// Exact value of rho at a class index.
    pub fn rho_value(&self, rho_idx: usize, class_idx: u32) -> RootOfUnity {
        rho_eval(&self.class_group, &self.rhos[rho_idx].exps, class_idx)
    }

    /// chi (as a character mod p^beta) at a residue.
    pub fn chi_value(&self, chi_idx: usize, a: u64) -> CharValue {
        self.chi_group[chi_idx].eval(a)
    }

    pub fn member(&self, rho_idx: usize, chi_idx: usize) -> &HeckeCharacterW {
        &self.members[rho_idx * self.chi_group.len() + chi_idx]
    }

    pub fn conjugate_of(&self, member_idx: usize) -> usize {
        self.conj_map[member_idx]
    }

    /// Primitive sets P_{p^x, p^y; W0}: members grouped by exact conductors
    /// and tame part, in a deterministic order.
    pub fn primitive_sets(&self) -> Vec<PrimitiveSet> {
        let mut map: BTreeMap<(u32, u32, TameId), Vec<usize>> = BTreeMap::new();
        for (i, w) in self.members.iter().enumerate() {
            map.entry((w.x, w.y, w.tame.clone())).or_default().push(i);
        }
        map.into_iter()
            .map(|((x, y, tame), members)| PrimitiveSet { x, y, tame, members })
            .collect()
    }
}

/// A set P_{p^x, p^y; W0} of family member indices.
#[derive(Debug, Clone)]
pub struct PrimitiveSet {
    pub x: u32,
    pub y: u32,
    pub tame: TameId,
    pub members: Vec<usize>,
}

impl PrimitiveSet {
    pub fn h_star(&self) -> u64 {
        self.members.len() as u64
    }
}

fn rho_eval(group: &OrderClassGroup, exps: &[u64], class_idx: u32) -> RootOfUnity {
    let elem = &group.elem_exps[class_idx as usize];
    let mut acc = RootOfUnity::one();
    for (k, (&e, &v)) in exps.iter().zip(elem).enumerate() {
        if e != 0 && v != 0 {
            let ord = group.basis[k].1;
            acc = acc.mul(&RootOfUnity::new(e * v % ord, ord));
        }
    }
    acc
}

/// Enumerate the family X_{p^alpha, p^beta} for the pair (f of level N, K).
pub fn enumerate_family(
    field: ImagQuadField,
    level_n: u64,
    p: u64,
    alpha: u32,
    beta: u32,
) -> Result<CharacterFamily> {
    if p < 3 || !arith::is_prime(p) {
        return Err(Error::invalid(format!("p = {p} must be an odd prime")));
    }
    if level_n % p == 0 || field.abs_disc() % p == 0 {
        return Err(Error::invalid(format!(
            "standing hypothesis (p, ND) = 1 violated: p = {p}, N = {level_n}, D = {}",
            field.discriminant()
        )));
    }
    if arith::gcd(level_n, field.abs_disc()) != 1 {
        return Err(Error::invalid(format!(
            "standing hypothesis (N, D) = 1 violated: N = {level_n}, D = {}",
            field.discriminant()
        )));
    }
    let h_k = OrderClassGroup::new(field, 1)?.h();
    if h_k % p == 0 {
        return Err(Error::invalid(format!(
            "p = {p} divides h(O_K) = {h_k}: the finite-level tame/wild splitting \
             used for Galois averages is not available for D = {}",
            field.discriminant()
        )));
    }
    let c = p.pow(alpha);
    let q = p.pow(beta);
    let class_group = OrderClassGroup::new(field, c)?;
    let chi_group = arith::dirichlet_group(q);

    // Kernels of the projections Pic(O_{p^alpha}) -> Pic(O_{p^x}).
    let mut kernels: Vec<Vec<u32>> = Vec::with_capacity(alpha as usize + 1);
    for x in 0..=alpha {
        let target = OrderClassGroup::new(field, p.pow(x))?;
        let proj = class_group.project_to(&target)?;
        let ker = (0..class_group.h() as u32)
            .filter(|&i| proj[i as usize] == target.identity_index())
            .collect();
        kernels.push(ker);
    }

    // All characters of Pic(O_{p^alpha}) with true conductor exponents.
    let mut rhos = Vec::with_capacity(class_group.h() as usize);
    let orders: Vec<u64> = class_group.basis.iter().map(|&(_, o)| o).collect();
    let mut exps = vec![0u64; orders.len()];
    loop {
        let cond = (0..=alpha)
            .find(|&x| {
                kernels[x as usize]
                    .iter()
                    .all(|&g| rho_eval(&class_group, &exps, g).is_one())
            })
            .expect("kernel at x = alpha is trivial");
        rhos.push(RingClassCharacter { exps: exps.clone(), conductor_exp: cond });
        let mut i = 0;
        loop {
            if i == orders.len() {
                break;
            }
            exps[i] += 1;
            if exps[i] < orders[i] {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        if i == orders.len() {
            break;
        }
    }

    // Tame generators: prime-to-p parts of the basis generators on the class
    // side, and of the unit-group generators on the cyclotomic side.
    let mut class_tame: Vec<u32> = Vec::new();
    for &(g, d) in &class_group.basis {
        let mut ppart = 1u64;
        let mut dd = d;
        while dd % p == 0 {
            dd /= p;
            ppart *= p;
        }
        if dd > 1 {
            class_tame.push(class_group.pow(g, ppart));
        }
    }
    let unit_group = chi_group
        .first()
        .map(|chi| chi.group.clone())
        .expect("dirichlet_group is nonempty");
    let mut unit_tame: Vec<u64> = Vec::new();
    for (gi, &di) in unit_group.gens.iter().zip(&unit_group.orders) {
        let mut ppart = 1u64;
        let mut dd = di;
        while dd % p == 0 {
            dd /= p;
            ppart *= p;
        }
        if dd > 1 {
            unit_tame.push(arith::powmod(*gi, ppart, q));
        }
    }

    let omega_n = field.omega(level_n);
    let mut members = Vec::with_capacity(rhos.len() * chi_group.len());
    for (ri, rho) in rhos.iter().enumerate() {
        for (ci, chi) in chi_group.iter().enumerate() {
            let y = match chi.conductor() {
                1 => 0,
                f => {
                    let mut y = 0;
                    let mut v = f;
                    while v % p == 0 {
                        v /= p;
                        y += 1;
                    }
                    debug_assert_eq!(v, 1);
                    y
                }
            };
            let chi2 = chi.square();
            let self_dual = chi2.is_principal();
            let exceptional = chi.is_principal() && omega_n == 1;
            // eps = -omega(N) chi^2(N), exact
            let chi2_n = chi2.eval(level_n % q.max(1));
            let root_number = match chi2_n {
                CharValue::Zero => unreachable!("(N, p) = 1"),
                CharValue::Root(r) => -(omega_n as f64) * r.to_complex(),
            };
            let mut tame: TameId = Vec::with_capacity(class_tame.len() + unit_tame.len());
            for &t in &class_tame {
                tame.push(rho_eval(&class_group, &rho.exps, t));
            }
            for &u in &unit_tame {
                match chi.eval(u) {
                    CharValue::Root(r) => tame.push(r),
                    CharValue::Zero => unreachable!("tame units are units"),
                }
            }
            members.push(HeckeCharacterW {
                rho_idx: ri,
                chi_idx: ci,
                x: rho.conductor_exp,
                y,
                tame,
                self_dual,
                exceptional,
                root_number,
            });
        }
    }

    // conjugation map: negate exponents on both components
    let rho_index: BTreeMap<Vec<u64>, usize> =
        rhos.iter().enumerate().map(|(i, r)| (r.exps.clone(), i)).collect();
    let chi_index: BTreeMap<Vec<u64>, usize> =
        chi_group.iter().enumerate().map(|(i, c)| (c.exps.clone(), i)).collect();
    let mut conj_map = Vec::with_capacity(members.len());
    for w in &members {
        let rconj: Vec<u64> = rhos[w.rho_idx]
            .exps
            .iter()
            .zip(&orders)
            .map(|(&e, &o)| if e == 0 { 0 } else { o - e })
            .collect();
        let cconj: Vec<u64> = chi_group[w.chi_idx]
            .exps
            .iter()
            .zip(&unit_group.orders)
            .map(|(&e, &o)| if e == 0 { 0 } else { o - e })
            .collect();
        let ri = rho_index[&rconj];
        let ci = chi_index[&cconj];
        conj_map.push(ri * chi_group.len() + ci);
    }

    Ok(CharacterFamily {
        field,
        level_n,
        p,
        alpha,
        beta,
        class_group,
        chi_group,
        rhos,
        members,
        conj_map,
    })
}

/// Locate the (rho, chi) pair of `src`'s member inside a family at the
/// member's own conductors: rho is matched through the class-group
/// projection, chi through its values on the smaller unit group.
pub fn project_member(
    src: &CharacterFamily,
    rho_idx: usize,
    chi_idx: usize,
    dst: &CharacterFamily,
) -> Result<(usize, usize)> {
    let w = src.member(rho_idx, chi_idx);
    if dst.alpha != w.x || dst.beta != w.y || dst.p != src.p {
        return Err(Error::invalid("target family must sit at the member's own conductors"));
    }
    // rho: exponents on the target basis via preimages under the projection
    let proj = src.class_group.project_to(&dst.class_group)?;
    let mut exps = vec![0u64; dst.class_group.basis.len()];
    for (kk, &(g, ord)) in dst.class_group.basis.iter().enumerate() {
        let pre = (0..src.class_group.h() as u32)
            .find(|&i| proj[i as usize] == g)
            .ok_or_else(|| Error::internal("projection not surjective"))?;
        let val = src.rho_value(rho_idx, pre);
        exps[kk] = if val.is_one() {
            0
        } else {
            if ord % val.order() != 0 {
                return Err(Error::internal("rho value incompatible with target level"));
            }
            val.numerator() * (ord / val.order())
        };
    }
    let ri = dst
        .rhos
        .iter()
        .position(|r| r.exps == exps)
        .ok_or_else(|| Error::internal("projected rho not found in target family"))?;
    // chi: the source character factors through mod p^y, so its values on
    // residues coprime to p determine the target exponents
    let chi = &src.chi_group[chi_idx];
    let dst_group = &dst.chi_group[0].group;
    let mut cexps = vec![0u64; dst_group.orders.len()];
    for (kk, (&g, &ord)) in dst_group.gens.iter().zip(&dst_group.orders).enumerate() {
        let val = match chi.eval(g) {
            CharValue::Root(r) => r,
            CharValue::Zero => return Err(Error::internal("unit generator hit a zero")),
        };
        cexps[kk] = if val.is_one() {
            0
        } else {
            if ord % val.order() != 0 {
                return Err(Error::internal("chi value incompatible with target level"));
            }
            val.numerator() * (ord / val.order())
        };
    }
    let ci = dst
        .chi_group
        .iter()
        .position(|c| c.exps == cexps)
        .ok_or_else(|| Error::internal("projected chi not found in target family"))?;
    Ok((ri, ci))
}

/// Series convention for the Dirichlet coefficients of a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depletion {
    /// The character's own conductor convention (true primitive L-series).
    Own,
    /// Uniform family convention: chi evaluated mod p^beta and ideal norms
    /// restricted coprime to p^{alpha+beta}.
    Top,
    /// Explicit modulus M: ideal norms restricted coprime to
    /// max(p^{x+y}, M); the chi-side stays in its own convention.
    Modulus(u64),
}

/// Dirichlet coefficients a_n of L(s, f x W) for n <= n_max:
/// a_n = sum_{m^2 d = n, (m, N) = 1} omega(m) chi^2(m) chi(d) lambda_f(d) R_rho(d),
/// with the d-sum restricted by the depletion convention.
pub fn dirichlet_coefficients(
    family: &CharacterFamily,
    member: &HeckeCharacterW,
    f: &NewformTable,
    n_max: usize,
    depl: Depletion,
) -> Result<Vec<Complex64>> {
    if f.n_max() < n_max {
        return Err(Error::TableDepth(format!(
            "coefficient table holds {} < requested {n_max}",
            f.n_max()
        )));
    }
    let p = family.p;
    let q = p.pow(family.beta);
    let chi = &family.chi_group[member.chi_idx];
    // chi value at an integer per convention, and the d-side depletion test
    let own_qy = p.pow(member.y);
    let chi_at = |a: u64| -> CharValue {
        match depl {
            Depletion::Top => chi.eval(a % q.max(1)),
            Depletion::Own | Depletion::Modulus(_) => {
                if member.y == 0 {
                    CharValue::one()
                } else if a % p == 0 {
                    CharValue::Zero
                } else {
                    chi.eval(a % q)
                }
            }
        }
    };
    let d_blocked = |d: u64| -> bool {
        match depl {
            Depletion::Top => family.alpha + family.beta > 0 && d % p == 0,
            Depletion::Own => member.x + member.y > 0 && d % p == 0,
            Depletion::Modulus(m) => {
                let c = m.max(own_qy * p.pow(member.x));
                c > 1 && arith::gcd(d, c) > 1
            }
        }
    };
    // Class data at the right level: the member's own conductor for Own
    // (undepleted d can meet p), the family level otherwise.
    let (group, rho_exps) = match depl {
        Depletion::Own if member.x < family.alpha => {
            let own = OrderClassGroup::new(family.field, p.pow(member.x))?;
            let proj = family.class_group.project_to(&own)?;
            // primitive rho on the smaller group: rho0(B) = rho(any preimage)
            let mut exps0 = vec![0u64; own.basis.len()];
            // solve by matching values on a generating set: evaluate rho on
            // preimages of the basis elements of the small group
            for (k, &(g, ord)) in own.basis.iter().enumerate() {
                // find preimage of g
                let pre = (0..family.class_group.h() as u32)
                    .find(|&i| proj[i as usize] == g)
                    .ok_or_else(|| Error::internal("projection not surjective"))?;
                let val = family.rho_value(member.rho_idx, pre);
                // val must be an ord-th root of unity; express as exponent
                let e = if val.is_one() {
                    0
                } else {
                    if ord % val.order() != 0 {
                        return Err(Error::internal("rho value incompatible with conductor"));
                    }
                    val.numerator() * (ord / val.order())
                };
                exps0[k] = e;
            }
            (own, exps0)
        }
        _ => (family.class_group.clone(), family.rhos[member.rho_idx].exps.clone()),
    };

    let mut a = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let omega = family.field.omega_residue_table();
    let abs_d = family.field.abs_disc();
    let mut m = 1u64;
    while (m * m) as usize <= n_max {
        if arith::gcd(m, family.level_n) == 1 {
            let w = omega[(m % abs_d) as usize];
            let chim2 = chi_at(m).mul(&chi_at(m));
            if w != 0 && !chim2.is_zero() {
                let pref = chim2.to_complex() * w as f64;
                let dmax = n_max as u64 / (m * m);
                for d in 1..=dmax {
                    if d_blocked(d) {
                        continue;
                    }
                    let chid = chi_at(d);
                    if chid.is_zero() {
                        continue;
                    }
                    // R_rho(d) = sum over ideals of norm d of rho(class)
                    let ideals = group.ideals_of_norm(d)?;
                    if ideals.is_empty() {
                        continue;
                    }
                    let mut r = Complex64::new(0.0, 0.0);
                    for (cls, mult) in ideals {
                        r += rho_eval(&group, &rho_exps, cls).to_complex() * mult as f64;
                    }
                    let lam = f.lambda(d as usize);
                    a[(m * m * d) as usize] += pref * chid.to_complex() * lam * r;
                }
            }
        }
        m += 1;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::newform::{curves, ApSource};

    fn field7() -> ImagQuadField {
        ImagQuadField::new(-7).unwrap()
    }

    fn table11(n_max: usize) -> NewformTable {
        NewformTable::build(&ApSource::Curve(curves::E11A1), n_max).unwrap()
    }

    #[test]
    fn family_sizes() {
        let f0 = enumerate_family(field7(), 11, 3, 0, 0).unwrap();
        assert_eq!(f0.h_total(), 1);
        let f1 = enumerate_family(field7(), 11, 3, 1, 0).unwrap();
        assert_eq!(f1.h_total(), 4); // h(O_3) = 4
        let f2 = enumerate_family(field7(), 11, 3, 1, 1).unwrap();
        assert_eq!(f2.h_total(), 8); // 4 * phi(3)
        // |X_{c,q}| = h(O_c) phi(q) across a grid
        for (alpha, beta) in [(2u32, 0u32), (2, 2), (0, 2)] {
            let fam = enumerate_family(field7(), 11, 3, alpha, beta).unwrap();
            let h = crate::quadfield::class_number_formula(&field7(), 1, 3u64.pow(alpha));
            assert_eq!(fam.h_total(), h * arith::euler_phi(3u64.pow(beta)));
        }
    }

    #[test]
    fn hypothesis_guards() {
        // p | N
        assert!(enumerate_family(field7(), 15, 3, 1, 0).is_err());
        // p | D
        assert!(enumerate_family(field7(), 11, 7, 1, 0).is_err());
        // gcd(N, D) > 1
        assert!(enumerate_family(field7(), 14, 3, 1, 0).is_err());
        // p | h(O_K): D = -23 has h = 3
        let k23 = ImagQuadField::new(-23).unwrap();
        let err = enumerate_family(k23, 11, 3, 1, 0).unwrap_err().to_string();
        assert!(err.contains("h(O_K)"), "{err}");
        // p even / composite
        assert!(enumerate_family(field7(), 11, 2, 1, 0).is_err());
        assert!(enumerate_family(field7(), 11, 9, 1, 0).is_err());
    }

    #[test]
    fn conductor_partition() {
        // Partition property: sum of h* over primitive sets = h_{c,q},
        // and per-level counts match phi-style formulas, for (alpha,beta)<=(3,3).
        for (alpha, beta) in [(3u32, 3u32), (2, 2), (3, 0), (0, 3)] {
            let fam = enumerate_family(field7(), 11, 3, alpha, beta).unwrap();
            let sets = fam.primitive_sets();
            let total: u64 = sets.iter().map(|s| s.h_star()).sum();
            assert_eq!(total, fam.h_total());
            // members with chi-conductor exponent y: phi(p^y) primitives
            for y in 0..=beta {
                let count = fam.members.iter().filter(|w| w.y == y).count() as u64;
                let prim_chi = if y == 0 {
                    1
                } else {
                    arith::euler_phi(3u64.pow(y)) - arith::euler_phi(3u64.pow(y - 1))
                };
                assert_eq!(count, prim_chi * fam.class_group.h(), "y={y}");
            }
            // rho-conductor counts: h(O_{p^x}) - h(O_{p^{x-1}}) primitives
            for x in 0..=alpha {
                let count =
                    fam.members.iter().filter(|w| w.x == x).count() as u64;
                let hx = crate::quadfield::class_number_formula(&field7(), 1, 3u64.pow(x));
                let hprev = if x == 0 {
                    0
                } else {
                    crate::quadfield::class_number_formula(&field7(), 1, 3u64.pow(x - 1))
                };
                assert_eq!(count, (hx - hprev) * arith::euler_phi(3u64.pow(beta)), "x={x}");
            }
        }
    }

    #[test]
    fn tame_parts_examples() {
        // trivial W has the all-ones tuple
        let fam = enumerate_family(field7(), 11, 3, 1, 1).unwrap();
        let trivial = fam
            .members
            .iter()
            .find(|w| fam.rhos[w.rho_idx].exps.iter().all(|&e| e == 0)
                && fam.chi_group[w.chi_idx].is_principal())
            .unwrap();
        assert!(trivial.tame.iter().all(|r| r.is_one()));
        // p = 3, D = -7, beta = 1: the two characters mod 3 have distinct
        // tame parts (the full mod-3 unit group is prime to 3)
        let f01 = enumerate_family(field7(), 11, 3, 0, 1).unwrap();
        let t0 = &f01.member(0, 0).tame;
        let t1 = &f01.member(0, 1).tame;
        assert_ne!(t0, t1);
    }

    #[test]
    fn flags_and_root_numbers() {
        // omega(11) = +1 for D = -7, so chi-trivial members are exceptional.
        let fam = enumerate_family(field7(), 11, 3, 1, 1).unwrap();
        for w in &fam.members {
            let chi = &fam.chi_group[w.chi_idx];
            assert_eq!(w.exceptional, chi.is_principal());
            assert_eq!(w.self_dual, chi.square().is_principal());
            // |eps| = 1
            assert!((w.root_number.norm() - 1.0).abs() < 1e-14);
            if w.self_dual {
                assert!(w.root_number.im.abs() < 1e-14);
            }
            if w.exceptional {
                assert!((w.root_number.re + 1.0).abs() < 1e-14);
                assert!(w.forced_zero());
            }
        }
        // omega(17) = -1 for D = -7: no exceptional members
        let fam17 = enumerate_family(field7(), 17, 3, 1, 0).unwrap();
        assert!(fam17.members.iter().all(|w| !w.exceptional));
        // but chi-trivial members are self-dual with eps = +1 (no forced zero)
        assert!(fam17.members.iter().all(|w| w.self_dual && w.root_number.re > 0.99));
    }

    #[test]
    fn coefficients_basic_values() {
        let fam = enumerate_family(field7(), 11, 3, 0, 0).unwrap();
        let f = table11(100);
        let w = &fam.members[0];
        let a = dirichlet_coefficients(&fam, w, &f, 50, Depletion::Own).unwrap();
        // a_1 = 1
        assert!((a[1].re - 1.0).abs() < 1e-15 && a[1].im.abs() < 1e-15);
        // a_2 = lambda_f(2) r_1(2) = 2 lambda_f(2)
        assert!((a[2].re - 2.0 * f.lambda(2)).abs() < 1e-13);
        // depletion kills d = 3 in a_3; n = 9 survives through the m = 3 term
        let fam1 = enumerate_family(field7(), 11, 3, 1, 0).unwrap();
        let triv = fam1
            .members
            .iter()
            .find(|w| fam1.rhos[w.rho_idx].exps.iter().all(|&e| e == 0))
            .unwrap();
        let a3 = dirichlet_coefficients(&fam1, triv, &f, 9, Depletion::Modulus(3)).unwrap();
        assert_eq!(a3[3], Complex64::new(0.0, 0.0));
        let m3_term = a3[9];
        // m = 3 contributes omega(3) chi^2(3) a_1-style term = omega(3) = -1
        assert!((m3_term.re + 1.0).abs() < 1e-13, "{m3_term}");
    }

    #[test]
    fn coefficients_conjugation_and_self_dual() {
        let fam = enumerate_family(field7(), 11, 3, 1, 1).unwrap();
        let f = table11(1000);
        for (i, w) in fam.members.iter().enumerate() {
            let a = dirichlet_coefficients(&fam, w, &f, 200, Depletion::Top).unwrap();
            let wbar = &fam.members[fam.conjugate_of(i)];
            let abar = dirichlet_coefficients(&fam, wbar, &f, 200, Depletion::Top).unwrap();
            for n in 1..=200 {
                assert!((a[n].conj() - abar[n]).norm() < 1e-12, "member {i} n={n}");
            }
            if w.self_dual {
                for n in 1..=200 {
                    assert!(a[n].im.abs() < 1e-14, "self-dual member {i} has complex a_{n}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_collapse_to_principal_class_count() {
        // Summing a_n over the whole family must equal
        // h(O_c) phi(q) sum_{m^2 d = n, congruence} omega(m) lambda_f(d) rP(d)
        // where rP counts ideals of norm d that are principal in Pic(O_c):
        // this is the counting function the formula route is built on.
        let f = table11(400);
        for (alpha, beta) in [(1u32, 1u32), (1, 0), (2, 1)] {
            let fam = enumerate_family(field7(), 11, 3, alpha, beta).unwrap();
            let n_max = 120usize;
            let mut total = vec![Complex64::new(0.0, 0.0); n_max + 1];
            for w in &fam.members {
                let a = dirichlet_coefficients(&fam, w, &f, n_max, Depletion::Top).unwrap();
                for n in 0..=n_max {
                    total[n] += a[n];
                }
            }
            let p = 3u64;
            let q = p.pow(beta);
            let omega = fam.field.omega_residue_table();
            let group = &fam.class_group;
            for n in 1..=n_max as u64 {
                let mut expect = 0.0;
                let mut m = 1u64;
                while m * m <= n {
                    if n % (m * m) == 0 && arith::gcd(m, 11) == 1 {
                        let d = n / (m * m);
                        // top-level depletion on the combined index
                        if alpha + beta > 0 && d % p == 0 {
                            m += 1;
                            continue;
                        }
                        if beta > 0 && m % p == 0 {
                            m += 1;
                            continue;
                        }
                        if beta > 0 && (m * m % q * (d % q)) % q != 1 {
                            m += 1;
                            continue;
                        }
                        let w = omega[(m % 7) as usize] as f64;
                        if w != 0.0 {
                            let rp: u32 = if alpha + beta > 0 && d % p == 0 {
                                0
                            } else {
                                group
                                    .ideals_of_norm(d)
                                    .unwrap()
                                    .iter()
                                    .filter(|&&(cls, _)| cls == group.identity_index())
                                    .map(|&(_, mult)| mult)
                                    .sum()
                            };
                            expect += w * f.lambda(d as usize) * rp as f64;
                        }
                    }
                    m += 1;
                }
                expect *= fam.h_total() as f64;
                assert!(
                    (total[n as usize].re - expect).abs() < 1e-10
                        && total[n as usize].im.abs() < 1e-10,
                    "alpha={alpha} beta={beta} n={n}: {} vs {expect}",
                    total[n as usize].re
                );
            }
        }
    }

    #[test]
    fn own_vs_top_depletion() {
        // For a top-primitive member the two conventions agree; for the
        // trivial member of a ramified family they differ exactly at p | n.
        let fam = enumerate_family(field7(), 11, 3, 1, 1).unwrap();
        let f = table11(400);
        for (i, w) in fam.members.iter().enumerate() {
            let top = dirichlet_coefficients(&fam, w, &f, 100, Depletion::Top).unwrap();
            let own = dirichlet_coefficients(&fam, w, &f, 100, Depletion::Own).unwrap();
            if w.x == fam.alpha && w.y == fam.beta {
                for n in 1..=100 {
                    assert!((top[n] - own[n]).norm() < 1e-13, "member {i} n={n}");
                }
            }
            if w.x == 0 && w.y == 0 {
                // own convention keeps p | n coefficients
                assert!((own[3].norm() - 0.0).abs() > 1e-3 || own[9].norm() > 1e-3);
                assert_eq!(top[3], Complex64::new(0.0, 0.0));
            }
            for n in 1..=100u64 {
                if n % 3 != 0 && w.y > 0 {
                    assert!((top[n as usize] - own[n as usize]).norm() < 1e-13);
                }
            }
        }
    }
}
