//! Bundled verification suites behind `rsavg verify <suite>`: each runs a
//! set of named checks, prints one line per check, and reports overall
//! success. The acceptance test suite runs the same properties at full
//! scale; these are the fast operational bundles.

use rsavg_core::analytic;
use rsavg_core::arith::Lcg;
use rsavg_core::averages::CellComputation;
use rsavg_core::newform::{curves, ApSource, NewformTable};
use rsavg_core::quadfield::{
    class_number_formula, r1_divisor_sum_table, reduced_forms, scan_form_values, ImagQuadField,
    OrderClassGroup,
};
use num_complex::Complex64;
use std::f64::consts::PI;

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.to_string(), pass, detail }
}

pub fn run_suite(suite: &str) -> Vec<Check> {
    match suite {
        "counting" => suite_counting(),
        "cutoff" => suite_cutoff(),
        "afe" => suite_afe(),
        "haf" => suite_haf(),
        "mobius" => suite_mobius(),
        other => vec![check("suite", false, format!("unknown suite {other}"))],
    }
}

fn suite_counting() -> Vec<Check> {
    let mut out = Vec::new();
    // r_1(n) = sum_{d|n} (D/d) against the form-scan count
    for d in [-7i64, -11, -23] {
        let field = ImagQuadField::new(d).unwrap();
        let x_max = 100_000usize;
        let oracle = r1_divisor_sum_table(&field, x_max);
        let group = OrderClassGroup::new(field, 1).unwrap();
        let mut scan = vec![0i32; x_max + 1];
        for form in &group.forms {
            scan_form_values(form, x_max as u64, |v| scan[v as usize] += 1);
        }
        let bad = (1..=x_max).find(|&n| scan[n] != oracle[n]);
        out.push(check(
            &format!("counting-oracle D={d}"),
            bad.is_none(),
            match bad {
                None => format!("r_1(n) matches divisor sums for n <= {x_max}"),
                Some(n) => format!("mismatch at n = {n}: {} vs {}", scan[n], oracle[n]),
            },
        ));
    }
    // Cox identity r_f(n) = r_1(n) for (n, f) = 1
    let field = ImagQuadField::new(-7).unwrap();
    let g1 = OrderClassGroup::new(field, 1).unwrap();
    let x_max = 10_000usize;
    let mut r1 = vec![0i32; x_max + 1];
    for form in &g1.forms {
        scan_form_values(form, x_max as u64, |v| r1[v as usize] += 1);
    }
    for f in [3u64, 9, 5] {
        let gf = OrderClassGroup::new(field, f).unwrap();
        let mut rf = vec![0i32; x_max + 1];
        for form in &gf.forms {
            scan_form_values(form, x_max as u64, |v| rf[v as usize] += 1);
        }
        let bad = (1..=x_max).find(|&n| n as u64 % f != 0 && rf[n] != r1[n]
            && rsavg_core::arith::gcd(n as u64, f) == 1);
        out.push(check(
            &format!("cox-identity f={f}"),
            bad.is_none(),
            match bad {
                None => format!("r_f = r_1 on coprime n <= {x_max}"),
                Some(n) => format!("mismatch at n = {n}"),
            },
        ));
    }
    // class number formula vs enumeration
    let mut all_ok = true;
    let mut detail = String::new();
    for d in [-7i64, -11, -19, -23, -43] {
        let field = ImagQuadField::new(d).unwrap();
        let h_k = reduced_forms(d).unwrap().len() as u64;
        for f in [1u64, 3, 9, 27, 5, 25] {
            let formula = class_number_formula(&field, h_k, f);
            let enumerated = reduced_forms((f * f) as i64 * d).unwrap().len() as u64;
            if formula != enumerated {
                all_ok = false;
                detail = format!("D={d} f={f}: {formula} vs {enumerated}");
            }
        }
    }
    out.push(check(
        "class-number-formula",
        all_ok,
        if all_ok { "matches enumeration on the grid".into() } else { detail },
    ));
    out
}

fn suite_cutoff() -> Vec<Check> {
    let mut out = Vec::new();
    // quadrature vs closed forms on the 60-point log grid
    let mut worst = (0.0f64, 0u32, 0.0f64);
    for m in [1u32, 2] {
        for i in 0..60 {
            let y = 1e-3 * (1e4f64).powf(i as f64 / 59.0);
            let q = analytic::v_quadrature(m, y, 1e-12);
            let c = analytic::v(m, y).unwrap();
            let err = (q - c).abs();
            if err > worst.0 {
                worst = (err, m, y);
            }
        }
    }
    out.push(check(
        "closed-form-vs-quadrature",
        worst.0 < 1e-10,
        format!("max |err| = {:.2e} at m={} y={:.3e}", worst.0, worst.1, worst.2),
    ));
    // duplication identity at 100 random s
    let mut rng = Lcg::new(17);
    let mut worst_dup = 0.0f64;
    for _ in 0..100 {
        let s = Complex64::new(-0.5 + 3.5 * rng.uniform(), -10.0 + 20.0 * rng.uniform());
        if s.norm() < 1e-3 {
            continue;
        }
        let a = analytic::v_hat(1, s).unwrap();
        let b = analytic::v_hat_gamma_r_product(1, s);
        worst_dup = worst_dup.max((a - b).norm() / (1.0 + a.norm()));
    }
    out.push(check(
        "duplication-identity",
        worst_dup < 1e-11,
        format!("max relative deviation {worst_dup:.2e}"),
    ));
    // small-y laws with the additive constant
    let y = 1e-6;
    let d1 = (analytic::v(1, y).unwrap() - 1.0).abs();
    let d2 = (analytic::v(2, y).unwrap() + (2.0 * PI * y).ln() + analytic::EULER_GAMMA).abs();
    out.push(check(
        "small-y-laws",
        d1 < 7.0 * y && d2 < 7.0 * y,
        format!("v1 defect {d1:.2e}, v2 defect {d2:.2e} at y = {y:.0e}"),
    ));
    // truncation certificate example
    let (n_max, bound) = analytic::truncation_length(1, 1e3, 1e-12).unwrap();
    out.push(check(
        "truncation-length",
        n_max <= 10_000 && bound <= 1e-12,
        format!("n_max = {n_max}, bound = {bound:.2e}"),
    ));
    out
}

fn table11(depth: usize) -> NewformTable {
    NewformTable::build(&ApSource::Curve(curves::E11A1), depth).unwrap()
}

fn suite_afe() -> Vec<Check> {
    let mut out = Vec::new();
    let field = ImagQuadField::new(-7).unwrap();
    let f = table11(80_000);
    // forced zeros: every exceptional member of the (alpha, 0) families
    for alpha in 0..=2u32 {
        let cell = CellComputation::compute(field, &f, 3, alpha, 0, 0, 1e-9).unwrap();
        let mut worst = 0.0f64;
        let mut all_exceptional = true;
        for (w, (v, c)) in
            cell.family.members.iter().zip(cell.values.iter().zip(&cell.certs))
        {
            all_exceptional &= w.exceptional;
            if v.norm() > *c {
                worst = worst.max(v.norm());
            }
        }
        out.push(check(
            &format!("afe-forced-zero alpha={alpha}"),
            all_exceptional && worst == 0.0,
            format!("{} members, worst excess {worst:.2e}", cell.family.members.len()),
        ));
    }
    // self-dual members have real values
    let cell = CellComputation::compute(field, &f, 3, 1, 1, 1, 1e-8).unwrap();
    let max_im = cell
        .family
        .members
        .iter()
        .zip(cell.values.iter())
        .filter(|(w, _)| w.self_dual)
        .map(|(_, v)| v.im.abs())
        .fold(0.0f64, f64::max);
    out.push(check(
        "afe-self-dual-real",
        max_im < 1e-12,
        format!("max |Im| over self-dual members = {max_im:.2e}"),
    ));
    out
}

fn haf_cells() -> Vec<(u32, u32, u32, f64, f64)> {
    // (alpha, beta, k, residual, cert) over the operational grid
    let field = ImagQuadField::new(-7).unwrap();
    let f = table11(2_700_000);
    let mut cells = Vec::new();
    for k in [0u32, 1] {
        for alpha in 0..=2u32 {
            for beta in 0..=2u32 {
                let cell =
                    CellComputation::compute(field, &f, 3, alpha, beta, k, 1e-6).unwrap();
                let (hd, cd) = cell.harmonic_direct();
                let fr = &cell.formula_exact;
                cells.push((alpha, beta, k, (hd - fr.value).abs(), cd + fr.cert));
            }
        }
    }
    cells
}

fn suite_haf() -> Vec<Check> {
    let mut out = Vec::new();
    for (alpha, beta, k, residual, cert) in haf_cells() {
        out.push(check(
            &format!("haf a={alpha} b={beta} k={k}"),
            residual <= cert,
            format!("residual {residual:.3e} vs certificates {cert:.3e}"),
        ));
    }
    out
}

fn suite_mobius() -> Vec<Check> {
    let field = ImagQuadField::new(-7).unwrap();
    let f = table11(2_700_000);
    let mut out = Vec::new();
    for k in [0u32, 1] {
        for (alpha, beta) in [(1u32, 1u32), (2, 1), (2, 2), (1, 0), (2, 0)] {
            let cell = CellComputation::compute(field, &f, 3, alpha, beta, k, 1e-6).unwrap();
            let r = cell.relation_residuals();
            let pass = r.r1 <= 2.0 * r.cert && r.r2 <= 2.0 * r.cert && r.r3 <= 2.0 * r.cert;
            out.push(check(
                &format!("mobius a={alpha} b={beta} k={k}"),
                pass,
                format!("R1 {:.2e} R2 {:.2e} R3 {:.2e} vs 2x cert {:.2e}", r.r1, r.r2, r.r3, 2.0 * r.cert),
            ));
        }
    }
    out
}
