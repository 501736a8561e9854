//! Acceptance suite: every criterion runs at its stated tolerance and prints
//! one pass/fail line. Criteria over the harmonic grid skip (p, D, N)
//! combinations that violate the standing hypotheses (p, ND) = (N, D) = 1
//! and say so; two valid substitute combinations keep the intended
//! discriminant coverage.

use rsavg_core::analytic;
use rsavg_core::arith;
use rsavg_core::averages::{CellComputation, EtermConvention};
use rsavg_core::newform::{curves, ApSource, EllipticCurve, NewformTable};
use rsavg_core::quadfield::{
    class_number_formula, r1_divisor_sum_table, reduced_forms, scan_form_values, ImagQuadField,
    OrderClassGroup,
};
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

fn line(ok: bool, name: &str, detail: &str) -> bool {
    println!("{} {}: {}", if ok { "PASS" } else { "FAIL" }, name, detail);
    ok
}

fn table11_small() -> &'static NewformTable {
    static T: OnceLock<NewformTable> = OnceLock::new();
    T.get_or_init(|| NewformTable::build(&ApSource::Curve(curves::E11A1), 2_800_000).unwrap())
}

#[test]
fn criterion_1_counting_oracle() {
    let t0 = Instant::now();
    let mut ok = true;
    for d in [-7i64, -11, -23] {
        let field = ImagQuadField::new(d).unwrap();
        let x_max = 100_000usize;
        let oracle = r1_divisor_sum_table(&field, x_max);
        let group = OrderClassGroup::new(field, 1).unwrap();
        let mut scan = vec![0i32; x_max + 1];
        for form in &group.forms {
            scan_form_values(form, x_max as u64, |v| scan[v as usize] += 1);
        }
        ok &= (1..=x_max).all(|n| scan[n] == oracle[n]);
    }
    assert!(line(
        ok,
        "criterion-1 counting oracle",
        &format!(
            "r_1(n) = sum_d|n (D/d) exactly, n <= 1e5, D in {{-7,-11,-23}} [{:.1?}]",
            t0.elapsed()
        ),
    ));
}

#[test]
fn criterion_2_cox_identity() {
    let t0 = Instant::now();
    let field = ImagQuadField::new(-7).unwrap();
    let x_max = 10_000usize;
    let g1 = OrderClassGroup::new(field, 1).unwrap();
    let mut r1 = vec![0i32; x_max + 1];
    for form in &g1.forms {
        scan_form_values(form, x_max as u64, |v| r1[v as usize] += 1);
    }
    let mut ok = true;
    for f in [3u64, 9, 5] {
        let gf = OrderClassGroup::new(field, f).unwrap();
        let mut rf = vec![0i32; x_max + 1];
        for form in &gf.forms {
            scan_form_values(form, x_max as u64, |v| rf[v as usize] += 1);
        }
        ok &= (1..=x_max)
            .filter(|&n| arith::gcd(n as u64, f) == 1)
            .all(|n| rf[n] == r1[n]);
    }
    assert!(line(
        ok,
        "criterion-2 cox identity",
        &format!("r_f(n) = r_1(n) exactly for (n, f) = 1, n <= 1e4, f in {{3,9,5}} [{:.1?}]", t0.elapsed()),
    ));
}

#[test]
fn criterion_3_class_number_formula() {
    let t0 = Instant::now();
    let mut ok = true;
    for d in [-7i64, -11, -19, -23, -43] {
        let field = ImagQuadField::new(d).unwrap();
        let h_k = reduced_forms(d).unwrap().len() as u64;
        for f in [1u64, 3, 9, 27, 5, 25] {
            let formula = class_number_formula(&field, h_k, f);
            let enumerated = reduced_forms((f * f) as i64 * d).unwrap().len() as u64;
            ok &= formula == enumerated;
        }
    }
    assert!(line(
        ok,
        "criterion-3 class number formula",
        &format!("formula = enumeration on the full D x f grid [{:.1?}]", t0.elapsed()),
    ));
}

#[test]
fn criterion_4_cutoff_kernels() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for m in [1u32, 2] {
        for i in 0..60 {
            let y = 1e-3 * (1e4f64).powf(i as f64 / 59.0);
            let q = analytic::v_quadrature(m, y, 1e-12);
            let c = analytic::v(m, y).unwrap();
            worst = worst.max((q - c).abs());
        }
    }
    let mut worst_dup = 0.0f64;
    let mut rng = arith::Lcg::new(2024);
    let mut tested = 0;
    while tested < 100 {
        let s = num_complex::Complex64::new(-0.5 + 3.5 * rng.uniform(), -10.0 + 20.0 * rng.uniform());
        if s.norm() < 1e-3 {
            continue;
        }
        tested += 1;
        let a = analytic::v_hat(1, s).unwrap();
        let b = analytic::v_hat_gamma_r_product(1, s);
        worst_dup = worst_dup.max((a - b).norm() / (1.0 + a.norm()));
    }
    let ok = worst < 1e-10 && worst_dup < 1e-11;
    assert!(line(
        ok,
        "criterion-4 cutoff kernels",
        &format!(
            "quadrature vs closed forms max err {worst:.2e} (< 1e-10), duplication {worst_dup:.2e} (< 1e-11) [{:.1?}]",
            t0.elapsed()
        ),
    ));
}

#[test]
fn criterion_5_afe_forced_zero() {
    let t0 = Instant::now();
    let field = ImagQuadField::new(-7).unwrap();
    let f = table11_small();
    let mut ok = true;
    let mut worst_cert = 0.0f64;
    let mut worst_val = 0.0f64;
    for alpha in 0..=2u32 {
        let cell = CellComputation::compute(field, f, 3, alpha, 0, 0, 9e-10).unwrap();
        for (w, (v, c)) in cell.family.members.iter().zip(cell.values.iter().zip(&cell.certs)) {
            ok &= w.exceptional; // omega(11) = +1: the whole family is exceptional
            ok &= v.norm() <= *c;
            ok &= *c < 1e-9;
            worst_cert = worst_cert.max(*c);
            worst_val = worst_val.max(v.norm());
        }
    }
    assert!(line(
        ok,
        "criterion-5 afe forced zero",
        &format!(
            "all exceptional members |L| <= cert (worst |L| {worst_val:.1e}, worst cert {worst_cert:.1e} < 1e-9) [{:.1?}]",
            t0.elapsed()
        ),
    ));
}

/// Criteria 6, 7 and 11 share the harmonic grid. The literal (p, D, N) grid
/// {3,5} x {-7,-11} x {11,15} contains combinations violating the standing
/// hypotheses (3 | 15, 5 | 15, 11 | 11); those are skipped with a notice and
/// the substitute combination (p = 3, D = -11, N = 17) keeps the second
/// discriminant in coverage.
#[test]
fn criteria_6_7_11_harmonic_grid() {
    let t0 = Instant::now();
    let combos: [(u64, i64, EllipticCurve, &str); 3] = [
        (3, -7, curves::E11A1, "p=3 D=-7 N=11"),
        (5, -7, curves::E11A1, "p=5 D=-7 N=11"),
        (3, -11, curves::E17A1, "p=3 D=-11 N=17 (substitute)"),
    ];
    for (p, d, n) in [
        (3u64, -7i64, 15u64),
        (3, -11, 11),
        (3, -11, 15),
        (5, -7, 15),
        (5, -11, 11),
        (5, -11, 15),
    ] {
        println!(
            "SKIP criterion-6 cell p={p} D={d} N={n}: violates (p, ND) = (N, D) = 1"
        );
    }
    let tol = 1.2e-7;
    let mut ok6 = true;
    let mut ok7 = true;
    let mut ok11 = true;
    let mut worst6 = 0.0f64;
    let mut worst_cert = 0.0f64;
    let mut mixed_only_residual_max = 0.0f64;
    for (p, d, curve, label) in combos {
        let field = ImagQuadField::new(d).unwrap();
        let nd = (curve.squarefree_level().unwrap() * field.abs_disc()) as f64;
        // table sized for the largest cell of this combo over both kernels
        let level_top = nd * (p as f64).powi(8);
        let mut depth = 0usize;
        for m_kernel in [1u32, 2] {
            let (x_top, _) =
                analytic::truncation_length(m_kernel, level_top, tol / 2.0).unwrap();
            let t_cut = (2.0 * PI * x_top as f64 / level_top).max(3.0);
            depth = depth.max((t_cut * level_top / (2.0 * PI)) as usize + 2);
        }
        let f = NewformTable::build(&ApSource::Curve(curve), depth).unwrap();
        for k in [0u32, 1] {
            for alpha in 0..=2u32 {
                for beta in 0..=2u32 {
                    let cell =
                        CellComputation::compute(field, &f, p, alpha, beta, k, tol).unwrap();
                    let (hd, cd) = cell.harmonic_direct();
                    let fe = &cell.formula_exact;
                    let resid = (hd - fe.value).abs();
                    let certs = cd + fe.cert;
                    ok6 &= resid <= certs && certs < 1e-6;
                    worst6 = worst6.max(resid);
                    worst_cert = worst_cert.max(certs);
                    mixed_only_residual_max =
                        mixed_only_residual_max.max(cell.residual(EtermConvention::MixedOnly));
                    // criterion 7: Moebius relation residuals
                    let r = cell.relation_residuals();
                    ok7 &= r.r1 <= 2.0 * r.cert && r.r2 <= 2.0 * r.cert && r.r3 <= 2.0 * r.cert;
                    // criterion 11: two difference-sum routes, alpha, beta >= 1
                    if alpha >= 1 && beta >= 1 {
                        let ds = cell.difference_sum(&field, 0.5, 0.5).unwrap();
                        // relative agreement with an absolute floor for the
                        // identically-zero families (p = 5, k = 0)
                        let scale = ds.direct.abs().max(ds.factored.abs());
                        ok11 &= (ds.direct - ds.factored).abs() <= 1e-10 * scale + 1e-12;
                        ok11 &= ds.j0 != 0.0;
                    }
                }
            }
        }
        println!("      harmonic grid {label} done [{:.1?}]", t0.elapsed());
    }
    assert!(line(
        ok6,
        "criterion-6 harmonic identity",
        &format!(
            "|H_direct - H_formula| <= certs on the grid; worst residual {worst6:.2e}, worst certs {worst_cert:.2e} (< 1e-6); mixed-only variant residual up to {mixed_only_residual_max:.2e} (exact-Abel selected) [{:.1?}]",
            t0.elapsed()
        ),
    ));
    assert!(line(
        ok7,
        "criterion-7 moebius relations",
        "R1/R2/R3 residuals <= 2x certificates on the same grid",
    ));
    assert!(line(
        ok11,
        "criterion-11 difference-sum identity",
        "direct vs exact-class-number factorization <= 1e-10 relative; J(0) != 0",
    ));
}

/// Criterion 8 as stated pins |H - MT| strictly decreasing over alpha = 1, 2, 3
/// and < 10% at alpha = 3 for some N with omega(N) = -1 at D = -7. The
/// off-diagonal error of the underlying estimate is O(Delta^{-eta+eps}) with
/// eta bounded by the short-sum exponents (delta in [3/16, 1/4]), which
/// leaves no guaranteed decay at these conductors; measured sequences
/// oscillate for every bundled newform with omega(N) = -1 (N = 17, 19, 26).
/// The criterion runs faithfully with N = 17 and reports honestly.
#[test]
fn criterion_8_generic_main_term() {
    let t0 = Instant::now();
    let field = ImagQuadField::new(-7).unwrap();
    let f = NewformTable::build(&ApSource::Curve(curves::E17A1), 4_300_000).unwrap();
    assert_eq!(field.omega(17), -1, "N = 17 is on the generic branch");
    let mt = analytic::main_term_generic(&f, &field, 3).unwrap();
    let mut gaps = Vec::new();
    for alpha in 1..=3u32 {
        let cell = CellComputation::compute(field, &f, 3, alpha, 0, 0, 2e-6).unwrap();
        let (hd, _) = cell.harmonic_direct();
        gaps.push((hd - mt).abs());
    }
    let decreasing = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    let rel3 = gaps[2] / mt.abs();
    let ok = decreasing && rel3 < 0.10;
    let detail = format!(
        "|H - MT| = {:.4}, {:.4}, {:.4} (strictly decreasing: {decreasing}), rel at alpha=3: {:.1}% (< 10%) [{:.1?}]",
        gaps[0],
        gaps[1],
        gaps[2],
        100.0 * rel3,
        t0.elapsed()
    );
    assert!(
        line(ok, "criterion-8 generic main term", &detail),
        "criterion 8 fails as stated: the b != 0 error term of the main-term \
         estimate has no guaranteed decay at desk-scale conductors \
         (Delta^(-1/4+delta) with delta up to 1/4); see the decisions ledger"
    );
}

/// Criterion 9 as stated pins the slope H(3^4) - H(3^3) within 15% of
/// 4 L^{(N)}(1,omega) L^{(c)}(1,Sym^2 f)/zeta^{(cN)}(2) log p. Measured, the
/// top-term slope converges (3.77 vs 3.84 predicted at alpha = 4..5) but the
/// below-top correction drifts at desk scale, leaving the alpha = 3 slope
/// ~33% off (it reaches 13% one step later). Runs faithfully and reports.
#[test]
fn criterion_9_exceptional_slope() {
    let t0 = Instant::now();
    let field = ImagQuadField::new(-7).unwrap();
    let f = table11_small();
    assert_eq!(field.omega(11), 1, "N = 11 is on the exceptional branch");
    let mut h = Vec::new();
    for alpha in 3..=4u32 {
        let cell = CellComputation::compute(field, f, 3, alpha, 0, 1, 2e-6).unwrap();
        h.push(cell.harmonic_direct().0);
    }
    let slope = h[1] - h[0];
    let l_omega = analytic::l1_omega_removed(&field, 11).unwrap();
    let sym2 = analytic::l1_sym2(f, 27, 4000.0).unwrap().value;
    let predicted = 4.0 * l_omega * sym2 / analytic::zeta2_removed(27 * 11) * 3.0f64.ln();
    let rel = (slope - predicted).abs() / predicted.abs();
    let ok = rel < 0.15;
    let detail = format!(
        "H(3^4) - H(3^3) = {slope:.4} vs 4C log p = {predicted:.4}, rel {:.1}% (< 15%) [{:.1?}]",
        100.0 * rel,
        t0.elapsed()
    );
    assert!(
        line(ok, "criterion-9 exceptional slope", &detail),
        "criterion 9 fails as stated at alpha = 3: the E-term drift at desk \
         scale exceeds the 15% window (the slope is within 13% at alpha = 4); \
         see the decisions ledger"
    );
}

#[test]
fn criterion_10_cyclotomic_main_term() {
    let t0 = Instant::now();
    let field = ImagQuadField::new(-7).unwrap();
    let f = table11_small();
    // part 1: |MT(p^beta) - 1| <= C/p^beta with one fitted C; C is fitted at
    // beta = 2 with a factor-3 allowance, a nonvacuous reading of "a single
    // fitted C" that asserts genuine 1/q-rate decay.
    let mut mts = Vec::new();
    for beta in 2..=5u32 {
        mts.push(analytic::main_term_cyclotomic(&field, 11, 3u64.pow(beta)).unwrap());
    }
    let c_fit = 3.0 * 9.0 * (mts[0] - 1.0).abs();
    let mut ok1 = true;
    for (i, beta) in (3..=5u32).enumerate() {
        ok1 &= (mts[i + 1] - 1.0).abs() <= c_fit / 3.0f64.powi(beta as i32);
    }
    // part 2: |H(0, beta) - MT| decreasing for beta = 2..4 at c = 1, k = 0.
    let mut gaps = Vec::new();
    for beta in 2..=4u32 {
        let cell = CellComputation::compute(field, f, 3, 0, beta, 0, 1e-6).unwrap();
        let (hd, _) = cell.harmonic_direct();
        gaps.push((hd - mts[(beta - 2) as usize]).abs());
    }
    let ok2 = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    assert!(line(
        ok1 && ok2,
        "criterion-10 cyclotomic main term",
        &format!(
            "q|MT-1| = {:.3}, {:.3}, {:.3}, {:.3} (C = {c_fit:.3}); |H - MT| = {:.3}, {:.3}, {:.3} decreasing [{:.1?}]",
            9.0 * (mts[0] - 1.0).abs(),
            27.0 * (mts[1] - 1.0).abs(),
            81.0 * (mts[2] - 1.0).abs(),
            243.0 * (mts[3] - 1.0).abs(),
            gaps[0],
            gaps[1],
            gaps[2],
            t0.elapsed()
        ),
    ));
}
