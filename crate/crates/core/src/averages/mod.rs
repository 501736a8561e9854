//! Central values via the approximate functional equation, harmonic averages
//! by two independent computation routes, Galois averages, Moebius relations,
//! difference sums, and nonvanishing reports.
//!
//! The direct route evaluates every member of the orthogonal family
//! X_{p^alpha, p^beta} and averages; the formula route assembles congruence
//! sums weighted by class numbers. Both run over the same kernel tables and
//! truncation plan, so the identity between them holds exactly at finite
//! truncation and the reported residuals isolate bookkeeping, not tails.
//!
//! Within a family average, every member's series follows the uniform
//! top-level convention: ideal norms are restricted coprime to p whenever
//! alpha + beta >= 1, and the cyclotomic character is evaluated as a
//! function mod p^beta (so the m-variable is p-depleted exactly when
//! beta >= 1). True primitive values (the character's own convention) are
//! computed on demand through the member's own family.

pub mod engine;

use crate::analytic::{self, KernelTable};
use crate::arith;
use crate::error::Error;
use crate::heckechar::{self, CharacterFamily, PrimitiveSet};
use crate::newform::NewformTable;
use crate::quadfield::{class_number_formula, ImagQuadField, OrderClassGroup};
use crate::Result;
use engine::{Counting, KernelShape, ScanContext};
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Which formula-route convention to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtermConvention {
    /// Complete two-variable Abel summation: top term, both boundary sums
    /// with the p^2 step kernel, and the mixed second difference, all with
    /// principal-class counting. This is the convention the
    /// direct-vs-formula test selects.
    ExactAbel,
    /// The literal mixed-only correction with the p^4 tilde kernel and full
    /// ideal counting, empty at beta = 0; kept behind this flag for the
    /// convention-selection report.
    MixedOnly,
}

/// Formula-route output.
#[derive(Debug, Clone)]
pub struct FormulaResult {
    pub value: f64,
    pub cert: f64,
    /// top congruence sum (the D-analogue at the family level)
    pub top_d: f64,
    /// top sum with the N^2 congruence class (the D-tilde analogue)
    pub top_d_tilde: f64,
    /// everything below the top level, weighted and normalized (E-analogue)
    pub correction: f64,
}

/// A single central value with its certificate.
#[derive(Debug, Clone)]
pub struct CentralValue {
    pub value: Complex64,
    pub cert: f64,
    pub n_eff: u64,
    pub x: u32,
    pub y: u32,
    pub self_dual: bool,
    pub exceptional: bool,
    pub forced_zero: bool,
    pub root_number: Complex64,
}

/// Galois-average entry for one primitive set.
#[derive(Debug, Clone)]
pub struct GaloisEntry {
    pub x: u32,
    pub y: u32,
    pub tame_label: String,
    pub h_star: u64,
    pub delta: Complex64,
    pub cert: f64,
}

/// Residuals of the regrouping and Moebius identities.
#[derive(Debug, Clone, Copy)]
pub struct RelationResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub cert: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Nonzero,
    Indeterminate,
}

#[derive(Debug, Clone, Copy)]
pub struct NonvanishingReport {
    pub value: f64,
    pub cert: f64,
    pub verdict: Verdict,
}

/// Two-route difference sum with its predicted leading terms.
#[derive(Debug, Clone)]
pub struct DifferenceSum {
    /// script-H 4-term difference assembled from the member sums
    pub direct: f64,
    /// the weighted-difference factorization with exact class numbers
    pub factored: f64,
    /// the constant-theta (convenient3) form, exact only for alpha >= 2
    pub convenient3_const_theta: f64,
    pub j0: f64,
    pub leading_chi: f64,
    pub leading_chi2: f64,
    pub cert: f64,
}

/// Full computation of one family cell (p, alpha, beta, k).
pub struct CellComputation {
    pub family: CharacterFamily,
    pub k: u32,
    pub tol: f64,
    pub t_cut: f64,
    /// per-member values and certificates, aligned with family.members
    pub values: Vec<Complex64>,
    pub certs: Vec<f64>,
    /// script-H matrix: [x][y] = sum of member values over conductors <= (x, y)
    pub h_script: Vec<Vec<Complex64>>,
    pub h_script_cert: Vec<Vec<f64>>,
    /// member counts per sublevel (= h(O_{p^x}) phi(p^y))
    pub h_counts: Vec<Vec<u64>>,
    pub formula_exact: FormulaResult,
    pub formula_mixed_only: FormulaResult,
    pub n_eff_top: u64,
}

impl CellComputation {
    pub fn compute(
        field: ImagQuadField,
        f: &NewformTable,
        p: u64,
        alpha: u32,
        beta: u32,
        k: u32,
        tol: f64,
    ) -> Result<CellComputation> {
        if k > 1 {
            return Err(Error::invalid("k is restricted to {0, 1}"));
        }
        let family = heckechar::enumerate_family(field, f.level, p, alpha, beta)?;
        let nd = (f.level * field.abs_disc()) as f64;
        let m_kernel = k + 1;
        let level_top = nd * (p as f64).powi(2 * (alpha + beta) as i32);
        let (x_top, _) = analytic::truncation_length(m_kernel, level_top, tol / 2.0)?;
        let t_cut = (2.0 * PI * x_top as f64 / level_top).max(3.0);
        let kernel = Arc::new(KernelTable::new(m_kernel, t_cut)?);
        let ctx = ScanContext {
            f,
            kernel,
            t_cut,
            nd,
            p,
            q: p.pow(beta),
            level_n: f.level,
            omega: field.omega_residue_table(),
            m_depleted: beta >= 1,
            d_depleted: alpha + beta >= 1,
        };
        // level tables for the direct route
        let mut tables = Vec::with_capacity((alpha + beta + 1) as usize);
        for lexp in 0..=(alpha + beta) {
            tables.push(engine::scan_level_table(&ctx, &family.class_group, lexp)?);
        }
        let direct = engine::member_values(&ctx, &family, k, &tables);
        // script-H matrix over sublevels
        let a = alpha as usize;
        let b = beta as usize;
        let mut h_script = vec![vec![Complex64::new(0.0, 0.0); b + 1]; a + 1];
        let mut h_script_cert = vec![vec![0.0f64; b + 1]; a + 1];
        let mut h_counts = vec![vec![0u64; b + 1]; a + 1];
        for (w, (val, cert)) in
            family.members.iter().zip(direct.values.iter().zip(&direct.certs))
        {
            for x in (w.x as usize)..=a {
                for y in (w.y as usize)..=b {
                    h_script[x][y] += val;
                    h_script_cert[x][y] += cert;
                    h_counts[x][y] += 1;
                }
            }
        }
        // cross-check the cardinality claim h_{c,q} = h(O_c) phi(q)
        let h_k = OrderClassGroup::new(field, 1)?.h();
        for x in 0..=a {
            for y in 0..=b {
                let expect = class_number_formula(&field, h_k, p.pow(x as u32))
                    * arith::euler_phi(p.pow(y as u32));
                if h_counts[x][y] != expect {
                    return Err(Error::internal(format!(
                        "sublevel cardinality mismatch at ({x},{y}): {} vs {expect}",
                        h_counts[x][y]
                    )));
                }
            }
        }
        // class groups at each conductor level for the formula route
        let mut groups_x: Vec<Arc<OrderClassGroup>> = Vec::with_capacity(a + 1);
        for x in 0..=alpha {
            groups_x.push(OrderClassGroup::new(field, p.pow(x))?);
        }
        let formula_exact =
            assemble_formula(&ctx, &field, &groups_x, alpha, beta, k, EtermConvention::ExactAbel)?;
        let formula_mixed_only = assemble_formula(
            &ctx,
            &field,
            &groups_x,
            alpha,
            beta,
            k,
            EtermConvention::MixedOnly,
        )?;
        let n_eff_top = (t_cut * level_top / (2.0 * PI)) as u64;
        Ok(CellComputation {
            family,
            k,
            tol,
            t_cut,
            values: direct.values,
            certs: direct.certs,
            h_script,
            h_script_cert,
            h_counts,
            formula_exact,
            formula_mixed_only,
            n_eff_top,
        })
    }

    pub fn h_total(&self) -> u64 {
        self.family.h_total()
    }

    /// Harmonic average by the direct route, with certificate.
    pub fn harmonic_direct(&self) -> (f64, f64) {
        let a = self.family.alpha as usize;
        let b = self.family.beta as usize;
        let h = self.h_counts[a][b] as f64;
        ((self.h_script[a][b] / h).re, self.h_script_cert[a][b] / h)
    }

    /// Imaginary part of the direct average (conjugation symmetry check).
    pub fn harmonic_direct_imag(&self) -> f64 {
        let a = self.family.alpha as usize;
        let b = self.family.beta as usize;
        (self.h_script[a][b] / self.h_counts[a][b] as f64).im
    }

    /// |H_direct - H_formula| for a convention.
    pub fn residual(&self, convention: EtermConvention) -> f64 {
        let (hd, _) = self.harmonic_direct();
        let hf = match convention {
            EtermConvention::ExactAbel => self.formula_exact.value,
            EtermConvention::MixedOnly => self.formula_mixed_only.value,
        };
        (hd - hf).abs()
    }

    /// Galois averages over the primitive sets at exact top conductors.
    pub fn galois_averages(&self) -> Vec<GaloisEntry> {
        self.galois_at(self.family.alpha, self.family.beta)
    }

    /// Galois averages over the primitive sets at exact conductors (x, y).
    pub fn galois_at(&self, x: u32, y: u32) -> Vec<GaloisEntry> {
        self.family
            .primitive_sets()
            .into_iter()
            .filter(|s| s.x == x && s.y == y)
            .map(|s| self.galois_entry(&s))
            .collect()
    }

    fn galois_entry(&self, s: &PrimitiveSet) -> GaloisEntry {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut cert = 0.0;
        for &i in &s.members {
            sum += self.values[i];
            cert += self.certs[i];
        }
        let hs = s.h_star();
        GaloisEntry {
            x: s.x,
            y: s.y,
            tame_label: tame_label(&s.tame),
            h_star: hs,
            delta: sum / hs as f64,
            cert: cert / hs as f64,
        }
    }

    /// Residuals of (R1), (R2), (R3) over the computed member values.
    pub fn relation_residuals(&self) -> RelationResiduals {
        let a = self.family.alpha as usize;
        let b = self.family.beta as usize;
        let p = self.family.p;
        let sets = self.family.primitive_sets();
        // R1: H = h^{-1} sum over W0, (x, y) of h* delta
        let mut rhs1 = Complex64::new(0.0, 0.0);
        for s in &sets {
            let e = self.galois_entry(s);
            rhs1 += e.delta * e.h_star as f64;
        }
        rhs1 /= self.h_counts[a][b] as f64;
        let (hd, _) = self.harmonic_direct();
        let r1 = (Complex64::new(hd, self.harmonic_direct_imag()) - rhs1).norm();
        // R2: sum over top-conductor sets of h* delta =
        //     sum_{x, y} mu(p^{a-x}) mu(p^{b-y}) script-H_{x,y}
        let mut lhs2 = Complex64::new(0.0, 0.0);
        for s in sets.iter().filter(|s| s.x == self.family.alpha && s.y == self.family.beta) {
            let e = self.galois_entry(s);
            lhs2 += e.delta * e.h_star as f64;
        }
        let mut rhs2 = Complex64::new(0.0, 0.0);
        for x in 0..=a {
            let mx = arith::moebius(p.pow((a - x) as u32));
            if mx == 0 {
                continue;
            }
            for y in 0..=b {
                let my = arith::moebius(p.pow((b - y) as u32));
                if my == 0 {
                    continue;
                }
                rhs2 += self.h_script[x][y] * (mx * my) as f64;
            }
        }
        let r2 = (lhs2 - rhs2).norm();
        // R3: the explicit 4-term form with the q = 1 convention
        let rhs3 = self.script_difference();
        let r3 = (lhs2 - rhs3).norm();
        let cert = self.h_script_cert[a][b];
        RelationResiduals { r1, r2, r3, cert }
    }

    /// script-H_{c,q} - script-H_{c/p,q} - (script-H_{c,q/p} - script-H_{c/p,q/p})
    /// with the convention that c/p and q/p terms vanish at c = 1 or q = 1.
    pub fn script_difference(&self) -> Complex64 {
        let a = self.family.alpha as usize;
        let b = self.family.beta as usize;
        let at = |x: i64, y: i64| -> Complex64 {
            if x < 0 || y < 0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.h_script[x as usize][y as usize]
            }
        };
        at(a as i64, b as i64) - at(a as i64 - 1, b as i64)
            - (at(a as i64, b as i64 - 1) - at(a as i64 - 1, b as i64 - 1))
    }

    fn script_difference_cert(&self) -> f64 {
        let a = self.family.alpha as usize;
        let b = self.family.beta as usize;
        let at = |x: i64, y: i64| -> f64 {
            if x < 0 || y < 0 {
                0.0
            } else {
                self.h_script_cert[x as usize][y as usize]
            }
        };
        at(a as i64, b as i64)
            + at(a as i64 - 1, b as i64)
            + at(a as i64, b as i64 - 1)
            + at(a as i64 - 1, b as i64 - 1)
    }

    /// Nonvanishing verdict for the sum of Galois averages at the top level,
    /// through the right side of (R3). Never reports "zero": values below
    /// the certificate are indeterminate.
    pub fn nonvanishing_report(&self) -> NonvanishingReport {
        let v = self.script_difference();
        let cert = self.script_difference_cert();
        let value = v.norm();
        NonvanishingReport {
            value,
            cert,
            verdict: if value > cert { Verdict::Nonzero } else { Verdict::Indeterminate },
        }
    }

    /// Difference sums by two routes plus predicted leading terms.
    pub fn difference_sum(
        &self,
        field: &ImagQuadField,
        eps_weight: f64,
        gamma_weight: f64,
    ) -> Result<DifferenceSum> {
        if !(0.0 < eps_weight && eps_weight < 1.0 && 0.0 < gamma_weight && gamma_weight < 1.0) {
            return Err(Error::invalid("difference-sum weights must lie in (0, 1)"));
        }
        let a = self.family.alpha as usize;
        let b = self.family.beta as usize;
        if a < 1 {
            return Err(Error::invalid("difference sums need alpha >= 1"));
        }
        let p = self.family.p;
        let pf = p as f64;
        let direct = self.script_difference().re;
        // exact-class-number factorization of the same quantity:
        // phi(q) [h_c H(a,b) - h_{c/p} H(a-1,b)]
        //   - phi(q/p) [h_c H(a,b-1) - h_{c/p} H(a-1,b-1)]
        let h_k = OrderClassGroup::new(*field, 1)?.h();
        let h_at = |x: usize| class_number_formula(field, h_k, p.pow(x as u32)) as f64;
        let h_avg = |x: usize, y: usize| -> f64 {
            (self.h_script[x][y] / self.h_counts[x][y] as f64).re
        };
        let phi_b = arith::euler_phi(p.pow(b as u32)) as f64;
        let mut factored = phi_b * (h_at(a) * h_avg(a, b) - h_at(a - 1) * h_avg(a - 1, b));
        if b >= 1 {
            let phi_bm = arith::euler_phi(p.pow((b - 1) as u32)) as f64;
            factored -=
                phi_bm * (h_at(a) * h_avg(a, b - 1) - h_at(a - 1) * h_avg(a - 1, b - 1));
        }
        // constant-theta (convenient3) form, exact only when
        // h(O_{p^{alpha-1}}) = theta p^{alpha-2}, i.e. alpha >= 2 (and beta >= 2
        // for the phi factors)
        let (eps, gam) = (eps_weight, gamma_weight);
        let theta_const = h_k as f64 * (pf - field.omega(p) as f64);
        let l_eps = |y: usize| -> f64 {
            pf.powf(1.0 - eps) * h_avg(a, y) - pf.powf(-eps) * h_avg(a - 1, y)
        };
        let convenient3 = if b >= 1 {
            theta_const
                * (pf - 1.0)
                * pf.powf(b as f64 + gam - 2.0)
                * pf.powf(a as f64 + eps - 2.0)
                * (pf.powf(1.0 - gam) * l_eps(b) - pf.powf(-gam) * l_eps(b - 1))
        } else {
            theta_const * (pf - 1.0) * pf.powf(a as f64 + eps - 2.0) * l_eps(0)
        };
        // J(0) = (p^{1-gamma} - p^{-gamma})(p^{1-eps} - p^{-eps}), nonzero for
        // p >= 2 since both factors are p^{-w}(p - 1) with p > 1.
        let j0 = (pf.powf(1.0 - gam) - pf.powf(-gam)) * (pf.powf(1.0 - eps) - pf.powf(-eps));
        assert!(p >= 2 && j0 != 0.0);
        let q = p.pow(b as u32);
        let (leading_chi, leading_chi2) = if b >= 1 && q >= 3 {
            (
                j0 * analytic::cyclotomic_l_average(field, self.family.level_n, q, 1)?,
                j0 * analytic::cyclotomic_l_average(field, self.family.level_n, q, 2)?,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(DifferenceSum {
            direct,
            factored,
            convenient3_const_theta: convenient3,
            j0,
            leading_chi,
            leading_chi2,
            cert: self.script_difference_cert(),
        })
    }

    /// Central value of one member under the family (top) convention.
    pub fn central_value_of(&self, rho_idx: usize, chi_idx: usize) -> CentralValue {
        let idx = rho_idx * self.family.chi_group.len() + chi_idx;
        let w = &self.family.members[idx];
        CentralValue {
            value: self.values[idx],
            cert: self.certs[idx],
            n_eff: self.n_eff_top,
            x: w.x,
            y: w.y,
            self_dual: w.self_dual,
            exceptional: w.exceptional,
            forced_zero: w.forced_zero(),
            root_number: w.root_number,
        }
    }
}

fn tame_label(tame: &[arith::RootOfUnity]) -> String {
    let parts: Vec<String> =
        tame.iter().map(|r| format!("{}/{}", r.numerator(), r.order())).collect();
    format!("[{}]", parts.join(" "))
}

/// Assemble the formula route for a cell.
fn assemble_formula(
    ctx: &ScanContext,
    field: &ImagQuadField,
    groups_x: &[Arc<OrderClassGroup>],
    alpha: u32,
    beta: u32,
    k: u32,
    convention: EtermConvention,
) -> Result<FormulaResult> {
    let p = ctx.p;
    let h_k = groups_x[0].h();
    let h_at = |x: u32, y: u32| -> f64 {
        (class_number_formula(field, h_k, p.pow(x)) * arith::euler_phi(p.pow(y))) as f64
    };
    let omega_n = field.omega(ctx.level_n) as f64;
    let sign = if k % 2 == 0 { -1.0 } else { 1.0 }; // (-1)^{k+1}
    // The chi-orthogonality collapse of the eps-weighted conjugate sum picks
    // the class of N^2 mod p^y: sum over chi of chi(N^2) conj(chi)(m^2 d) =
    // phi(q) [m^2 d = N^2 (q)].
    let n2_class = |y: u32| -> u64 {
        let qy = p.pow(y);
        if qy == 1 {
            0
        } else {
            (ctx.level_n % qy) * (ctx.level_n % qy) % qy
        }
    };
    let h_top = h_at(alpha, beta);
    let mut cert = 0.0;
    let term = |x: u32,
                y: u32,
                shape: KernelShape,
                counting: Counting,
                cert_acc: &mut f64,
                weight: f64|
     -> Result<(f64, f64)> {
        let g = &groups_x[x as usize];
        let (d, c1) = engine::congruence_sum(ctx, g, counting, x, y, shape, 1)?;
        let (dt, c2) = if p.pow(y) == 1 {
            // the two congruence classes coincide at q = 1
            (d, c1)
        } else {
            engine::congruence_sum(ctx, g, counting, x, y, shape, n2_class(y))?
        };
        *cert_acc += weight * (c1 + c2) / h_top;
        Ok((d, dt))
    };
    let (value, top_d, top_dt, correction) = match convention {
        EtermConvention::ExactAbel => {
            let mut acc = 0.0;
            let (d, dt) = term(
                alpha,
                beta,
                KernelShape::Plain,
                Counting::PrincipalClass,
                &mut cert,
                h_top,
            )?;
            acc += h_top * (d + sign * omega_n * dt);
            let mut corr = 0.0;
            for x in 0..alpha {
                let w = h_at(x, beta);
                let (d2, dt2) =
                    term(x, beta, KernelShape::DiffP2, Counting::PrincipalClass, &mut cert, w)?;
                corr += w * (d2 + sign * omega_n * dt2);
            }
            for y in 0..beta {
                let w = h_at(alpha, y);
                let (d2, dt2) =
                    term(alpha, y, KernelShape::DiffP2, Counting::PrincipalClass, &mut cert, w)?;
                corr += w * (d2 + sign * omega_n * dt2);
            }
            for x in 0..alpha {
                for y in 0..beta {
                    let w = h_at(x, y);
                    let (d2, dt2) =
                        term(x, y, KernelShape::Mixed, Counting::PrincipalClass, &mut cert, w)?;
                    corr += w * (d2 + sign * omega_n * dt2);
                }
            }
            acc += corr;
            (acc / h_top, d, dt, corr / h_top)
        }
        EtermConvention::MixedOnly => {
            let (d, dt) =
                term(alpha, beta, KernelShape::Plain, Counting::AllClasses, &mut cert, h_top)?;
            let mut acc = h_top * (d + sign * omega_n * dt);
            let mut corr = 0.0;
            for x in 0..alpha {
                for y in 0..beta {
                    let w = h_at(x, y);
                    let (d2, dt2) =
                        term(x, y, KernelShape::TildeP4, Counting::AllClasses, &mut cert, w)?;
                    corr += w * (d2 + sign * omega_n * dt2);
                }
            }
            acc += corr;
            (acc / h_top, d, dt, corr / h_top)
        }
    };
    Ok(FormulaResult { value, cert, top_d, top_d_tilde: top_dt, correction })
}

/// Free-function form of the direct harmonic average.
pub fn harmonic_direct(
    field: ImagQuadField,
    f: &NewformTable,
    p: u64,
    alpha: u32,
    beta: u32,
    k: u32,
    tol: f64,
) -> Result<(f64, f64)> {
    Ok(CellComputation::compute(field, f, p, alpha, beta, k, tol)?.harmonic_direct())
}

/// Free-function form of the formula-route harmonic average.
pub fn harmonic_formula(
    field: ImagQuadField,
    f: &NewformTable,
    p: u64,
    alpha: u32,
    beta: u32,
    k: u32,
    tol: f64,
    convention: EtermConvention,
) -> Result<FormulaResult> {
    let cell = CellComputation::compute(field, f, p, alpha, beta, k, tol)?;
    Ok(match convention {
        EtermConvention::ExactAbel => cell.formula_exact,
        EtermConvention::MixedOnly => cell.formula_mixed_only,
    })
}

/// Stand-alone congruence sum (the D/D-tilde/frak-D family), exposed for
/// diagnostics: variant selects the kernel and congruence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DSumVariant {
    D,
    DTilde,
    FrakD,
    FrakDTilde,
}

#[allow(clippy::too_many_arguments)]
pub fn d_sum(
    field: ImagQuadField,
    f: &NewformTable,
    p: u64,
    alpha: u32,
    beta: u32,
    k: u32,
    variant: DSumVariant,
    counting: Counting,
    tol: f64,
) -> Result<(f64, f64)> {
    let nd = (f.level * field.abs_disc()) as f64;
    let m_kernel = k + 1;
    let level_top = nd * (p as f64).powi(2 * (alpha + beta) as i32);
    let (x_top, _) = analytic::truncation_length(m_kernel, level_top, tol / 2.0)?;
    let t_cut = (2.0 * PI * x_top as f64 / level_top).max(3.0);
    let kernel = Arc::new(KernelTable::new(m_kernel, t_cut)?);
    let ctx = ScanContext {
        f,
        kernel,
        t_cut,
        nd,
        p,
        q: p.pow(beta),
        level_n: f.level,
        omega: field.omega_residue_table(),
        m_depleted: beta >= 1,
        d_depleted: alpha + beta >= 1,
    };
    let group = OrderClassGroup::new(field, p.pow(alpha))?;
    let qy = p.pow(beta);
    let u0 = match variant {
        DSumVariant::D | DSumVariant::FrakD => 1 % qy.max(1),
        // the collapse picks the class of N^2 mod q (the inverse-class
        // reading does not close the harmonic identity; see the ledgered
        // convention note)
        DSumVariant::DTilde | DSumVariant::FrakDTilde => {
            (f.level % qy.max(1)) * (f.level % qy.max(1)) % qy.max(1)
        }
    };
    let shape = match variant {
        DSumVariant::D | DSumVariant::DTilde => KernelShape::Plain,
        DSumVariant::FrakD | DSumVariant::FrakDTilde => KernelShape::TildeP4,
    };
    engine::congruence_sum(&ctx, &group, counting, alpha, beta, shape, u0)
}

/// True primitive central value of a member (its own conductor convention),
/// computed through the member's own family where it is top-primitive.
pub fn central_value_own(
    field: ImagQuadField,
    f: &NewformTable,
    cell: &CellComputation,
    rho_idx: usize,
    chi_idx: usize,
    tol: f64,
) -> Result<CentralValue> {
    let fam = &cell.family;
    let w = fam.member(rho_idx, chi_idx);
    if w.x == fam.alpha && w.y == fam.beta {
        return Ok(cell.central_value_of(rho_idx, chi_idx));
    }
    let own = CellComputation::compute(field, f, fam.p, w.x, w.y, cell.k, tol)?;
    let (ri, ci) = heckechar::project_member(fam, rho_idx, chi_idx, &own.family)?;
    Ok(own.central_value_of(ri, ci))
}

/// Short-sum diagnostic S_x = sum_{a <= x} lambda_f(a^2 - b^2 D) on a
/// geometric grid, with a least-squares growth exponent. Report only; no
/// bound is asserted.
pub fn short_sum_diag(
    f: &NewformTable,
    field: &ImagQuadField,
    b: u64,
    x_max: u64,
) -> Result<(Vec<(u64, f64)>, f64)> {
    if b < 1 {
        return Err(Error::invalid("short sums need b >= 1"));
    }
    let need = x_max * x_max + b * b * field.abs_disc();
    if (f.n_max() as u64) < need {
        return Err(Error::TableDepth(format!(
            "short-sum diagnostic needs coefficients to {need}, table holds {}",
            f.n_max()
        )));
    }
    let mut grid = Vec::new();
    let mut next = 1u64;
    let mut acc = crate::kahan::KahanSum::new();
    let mut a = 1u64;
    while a <= x_max {
        acc.add(f.lambda((a * a + b * b * field.abs_disc()) as usize));
        if a == next || a == x_max {
            grid.push((a, acc.value()));
            next = (next * 2).min(x_max);
            if a == x_max {
                break;
            }
        }
        a += 1;
    }
    // least-squares fit of ln |S_x| against ln x over nonzero entries
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .filter(|&&(_, s)| s.abs() > 1e-14)
        .map(|&(x, s)| ((x as f64).ln(), s.abs().ln()))
        .collect();
    let exponent = if pts.len() < 2 {
        f64::NAN
    } else {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    Ok((grid, exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heckechar::Depletion as Depl;
    use crate::newform::{curves, ApSource};
    use std::sync::OnceLock;

    fn field7() -> ImagQuadField {
        ImagQuadField::new(-7).unwrap()
    }

    fn table11() -> &'static NewformTable {
        static T: OnceLock<NewformTable> = OnceLock::new();
        T.get_or_init(|| NewformTable::build(&ApSource::Curve(curves::E11A1), 2_200_000).unwrap())
    }

    #[test]
    fn mutual_oracle_small_grid() {
        // The module's central test: the direct and formula routes agree to
        // the truncation certificates (and in fact to numerical noise, since
        // both run over identical kernel evaluations).
        let f = table11();
        for k in [0u32, 1] {
            for (alpha, beta) in [(0u32, 0u32), (1, 0), (0, 1), (1, 1), (2, 1)] {
                let cell =
                    CellComputation::compute(field7(), f, 3, alpha, beta, k, 1e-8).unwrap();
                let (hd, cd) = cell.harmonic_direct();
                let fe = &cell.formula_exact;
                let resid = (hd - fe.value).abs();
                assert!(
                    resid <= cd + fe.cert,
                    "k={k} a={alpha} b={beta}: direct {hd} vs formula {} (resid {resid:.3e}, certs {:.3e})",
                    fe.value,
                    cd + fe.cert
                );
                // the regrouping is exact, so the residual is pure noise
                assert!(
                    resid <= 1e-10 * (1.0 + hd.abs()),
                    "k={k} a={alpha} b={beta}: residual {resid:.3e} too large for exact regrouping"
                );
                assert!(cell.harmonic_direct_imag().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixed_only_convention_does_not_close() {
        // The mixed-only convention misses the boundary sums; the
        // direct-vs-formula test selects the complete Abel form instead.
        let f = table11();
        let cell = CellComputation::compute(field7(), f, 3, 1, 0, 1, 1e-8).unwrap();
        let exact = cell.residual(EtermConvention::ExactAbel);
        let mixed = cell.residual(EtermConvention::MixedOnly);
        assert!(exact < 1e-10, "exact convention residual {exact:.3e}");
        assert!(
            mixed > 100.0 * (exact + 1e-15),
            "mixed-only residual {mixed:.3e} unexpectedly closes"
        );
    }

    #[test]
    fn exceptional_family_forces_zero() {
        // omega(11) = +1 for D = -7: every chi-trivial member at k = 0 has
        // eps = -1 and the AFE value cancels to below its certificate.
        let f = table11();
        let cell = CellComputation::compute(field7(), f, 3, 2, 0, 0, 1e-9).unwrap();
        for (w, (v, c)) in cell
            .family
            .members
            .iter()
            .zip(cell.values.iter().zip(&cell.certs))
        {
            assert!(w.exceptional);
            assert!(v.norm() <= *c + 1e-12, "member ({}, {}): {v}", w.rho_idx, w.chi_idx);
        }
        let (hd, cert) = cell.harmonic_direct();
        assert!(hd.abs() <= cert + 1e-12);
        // formula side: (1 + (-1) omega(N)) D = 0 exactly
        assert!(cell.formula_exact.value.abs() <= cell.formula_exact.cert + 1e-12);
        // k = 1 on the same family is nonzero
        let cell1 = CellComputation::compute(field7(), f, 3, 2, 0, 1, 1e-9).unwrap();
        let (h1, c1) = cell1.harmonic_direct();
        assert!(h1.abs() > 10.0 * c1, "k=1 average {h1} vs cert {c1}");
    }

    #[test]
    fn member_values_match_convolution_route() {
        // Independent reimplementation: per-member coefficients by explicit
        // convolution, summed against exact kernels, agree with the engine.
        let f = table11();
        let cell = CellComputation::compute(field7(), f, 3, 1, 1, 1, 1e-6).unwrap();
        let fam = &cell.family;
        let nd = 77.0f64;
        for (i, w) in fam.members.iter().enumerate() {
            let lev = nd * 9.0f64.powi((w.x + w.y) as i32);
            let x_eff = (cell.t_cut * lev / (2.0 * PI)) as usize;
            let a = heckechar::dirichlet_coefficients(fam, w, f, x_eff, Depl::Top).unwrap();
            let mut s = Complex64::new(0.0, 0.0);
            for n in 1..=x_eff {
                if a[n].norm_sqr() == 0.0 {
                    continue;
                }
                let y = n as f64 / lev;
                let t = 2.0 * PI * y;
                if t >= cell.t_cut {
                    continue;
                }
                s += a[n] / (n as f64).sqrt() * analytic::v(2, y).unwrap();
            }
            let expect = s + (-1.0f64).powi(1) * w.root_number * s.conj();
            let got = cell.values[i];
            assert!(
                (got - expect).norm() < 1e-8,
                "member {i}: engine {got} vs convolution {expect}"
            );
        }
    }

    #[test]
    fn relations_and_galois_regrouping() {
        let f = table11();
        for (alpha, beta, k) in [(1u32, 1u32, 0u32), (2, 1, 1), (1, 0, 1)] {
            let cell = CellComputation::compute(field7(), f, 3, alpha, beta, k, 1e-7).unwrap();
            let r = cell.relation_residuals();
            assert!(r.r1 <= 2.0 * r.cert && r.r1 < 1e-10, "r1 = {}", r.r1);
            assert!(r.r2 <= 2.0 * r.cert && r.r2 < 1e-10, "r2 = {}", r.r2);
            assert!(r.r3 <= 2.0 * r.cert && r.r3 < 1e-10, "r3 = {}", r.r3);
            // detector sanity: perturbing one Galois average by 1e-3 moves
            // the R1 regrouping residual by h* 1e-3 / h
            let sets = cell.family.primitive_sets();
            let entries: Vec<GaloisEntry> =
                sets.iter().map(|s| cell.galois_entry(s)).collect();
            let h = cell.h_counts[alpha as usize][beta as usize] as f64;
            let mut rhs = Complex64::new(0.0, 0.0);
            for (j, e) in entries.iter().enumerate() {
                let delta = if j == 0 { e.delta + 1e-3 } else { e.delta };
                rhs += delta * e.h_star as f64;
            }
            rhs /= h;
            let (hd, _) = cell.harmonic_direct();
            let resid = (Complex64::new(hd, cell.harmonic_direct_imag()) - rhs).norm();
            let expect = entries[0].h_star as f64 * 1e-3 / h;
            assert!((resid - expect).abs() < 1e-10, "detector: {resid} vs {expect}");
        }
    }

    #[test]
    fn difference_sum_routes() {
        let f = table11();
        let cell = CellComputation::compute(field7(), f, 3, 1, 1, 0, 1e-7).unwrap();
        let ds = cell.difference_sum(&field7(), 0.5, 0.5).unwrap();
        // the exact-class-number factorization is the same number
        assert!(
            (ds.direct - ds.factored).abs() <= 1e-10 * ds.direct.abs().max(1.0),
            "direct {} vs factored {}",
            ds.direct,
            ds.factored
        );
        // J(0) = (p-1)^2 / p for eps = gamma = 1/2
        assert!((ds.j0 - 4.0 / 3.0).abs() < 1e-14);
        // alpha = beta = 2: the constant-theta form becomes exact
        let cell2 = CellComputation::compute(field7(), f, 3, 2, 2, 0, 1e-4).unwrap();
        let ds2 = cell2.difference_sum(&field7(), 0.5, 0.5).unwrap();
        assert!(
            (ds2.direct - ds2.convenient3_const_theta).abs()
                <= 1e-10 * ds2.direct.abs().max(1.0),
            "alpha,beta >= 2: constant-theta form should be exact: {} vs {}",
            ds2.direct,
            ds2.convenient3_const_theta
        );
    }

    #[test]
    fn own_vs_top_central_values() {
        let f = table11();
        let cell = CellComputation::compute(field7(), f, 3, 1, 1, 1, 1e-7).unwrap();
        let fam_len = cell.family.chi_group.len();
        for (i, w) in cell.family.members.iter().enumerate() {
            let own = central_value_own(field7(), f, &cell, w.rho_idx, w.chi_idx, 1e-7).unwrap();
            let top = cell.central_value_of(i / fam_len, i % fam_len);
            if w.x == 1 && w.y == 1 {
                assert!((own.value - top.value).norm() < 1e-12);
            } else {
                // depleted vs primitive values differ by p-Euler-factor
                // effects; both are finite and certified
                assert!(own.cert > 0.0 && top.cert > 0.0);
            }
        }
    }

    #[test]
    fn determinism_across_thread_counts() {
        let f = table11();
        let run = |threads: usize| -> Vec<u64> {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                let cell = CellComputation::compute(field7(), f, 3, 1, 1, 0, 1e-8).unwrap();
                cell.values
                    .iter()
                    .flat_map(|v| [v.re.to_bits(), v.im.to_bits()])
                    .chain([cell.formula_exact.value.to_bits()])
                    .collect()
            })
        };
        assert_eq!(run(1), run(2));
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn short_sum_diagnostic() {
        let f = table11();
        let (grid, _exp) = short_sum_diag(f, &field7(), 1, 500).unwrap();
        // S_1 is the single term lambda_f(1 + |D|)
        assert!((grid[0].1 - f.lambda(8)).abs() < 1e-15);
        // cancellation sanity: |S_x|/x small at the end of the grid
        let last = grid.last().unwrap();
        assert!(last.1.abs() / last.0 as f64 <= 0.2, "no cancellation: {:?}", last);
        assert!(short_sum_diag(f, &field7(), 1, 10_000).is_err(), "table depth guard");
    }

    #[test]
    fn d_sum_variant_identities() {
        let f = table11();
        // q = 1: D and D-tilde coincide
        let (d, _) = d_sum(field7(), f, 3, 1, 0, 0, DSumVariant::D, Counting::AllClasses, 1e-7)
            .unwrap();
        let (dt, _) =
            d_sum(field7(), f, 3, 1, 0, 0, DSumVariant::DTilde, Counting::AllClasses, 1e-7)
                .unwrap();
        assert_eq!(d, dt);
        // beta growing: the N^2-congruence sum shrinks against the plain
        // one (the q >> N |D| c^2 regime of the cyclotomic estimate; at desk
        // scale the decay is monotone but slow, and the quantitative form is
        // exercised through the cyclotomic main-term criterion)
        let ratio = |beta: u32| -> f64 {
            let (d2, _) =
                d_sum(field7(), f, 3, 0, beta, 0, DSumVariant::D, Counting::AllClasses, 1e-4)
                    .unwrap();
            let (dt2, _) = d_sum(
                field7(),
                f,
                3,
                0,
                beta,
                0,
                DSumVariant::DTilde,
                Counting::AllClasses,
                1e-4,
            )
            .unwrap();
            dt2.abs() / d2.abs()
        };
        let (r2, r3, r4) = (ratio(2), ratio(3), ratio(4));
        assert!(r3 < r2 && r4 < r3, "no decay: {r2} {r3} {r4}");
    }
}
