//! Subcommand drivers: computation fan-out happens in the averages module;
//! this layer builds tables, iterates grids, and writes files.

use crate::config::{echo_lines, DepletionMode, RunConfig};
use crate::output::{num, JsonRecord, Sink};
use rsavg_core::analytic;
use rsavg_core::averages::{
    central_value_own, short_sum_diag, CellComputation, EtermConvention, Verdict,
};
use rsavg_core::error::Error;
use rsavg_core::heckechar::{dirichlet_coefficients, Depletion};
use rsavg_core::newform::NewformTable;
use rsavg_core::quadfield::ImagQuadField;
use rsavg_core::Result;
use std::f64::consts::PI;

/// Coefficient depth for the largest requested cell (plus the depth the
/// smoothed symmetric-square sums need for main terms).
fn required_depth(
    field: &ImagQuadField,
    n: u64,
    cfg: &RunConfig,
    k_max: u32,
) -> Result<usize> {
    let nd = (n * field.abs_disc()) as f64;
    let mut depth = 400_000usize;
    for k in 0..=k_max {
        let level = nd * (cfg.prime as f64).powi(2 * (cfg.alpha.1 + cfg.beta.1) as i32);
        let (x_top, _) = analytic::truncation_length(k + 1, level, cfg.tol / 2.0)?;
        let t_cut = (2.0 * PI * x_top as f64 / level).max(3.0);
        depth = depth.max((t_cut * level / (2.0 * PI)) as usize + 2);
    }
    Ok(depth)
}

fn build_table(field: &ImagQuadField, n: u64, cfg: &RunConfig, k_max: u32) -> Result<NewformTable> {
    let depth = required_depth(field, n, cfg, k_max)?;
    NewformTable::build(&cfg.source, depth)
}

/// Main term applicable to a cell, when one exists.
fn main_term_for(
    field: &ImagQuadField,
    f: &NewformTable,
    p: u64,
    alpha: u32,
    beta: u32,
    k: u32,
) -> Option<f64> {
    let omega_n = field.omega(f.level);
    if beta == 0 {
        let c = p.pow(alpha);
        if k == 0 && omega_n == -1 {
            analytic::main_term_generic(f, field, c).ok()
        } else if k == 1 && omega_n == 1 {
            analytic::main_term_exceptional(f, field, c).ok()
        } else {
            None
        }
    } else if k == 0 && p.pow(beta) >= 3 {
        analytic::main_term_cyclotomic(field, f.level, p.pow(beta)).ok()
    } else {
        None
    }
}

pub fn cmd_lvalue(cfg: &RunConfig, field: ImagQuadField, _n: u64) -> Result<()> {
    let f = build_table(&field, _n, cfg, cfg.k)?;
    let cell =
        CellComputation::compute(field, &f, cfg.prime, cfg.alpha.0, cfg.beta.0, cfg.k, cfg.tol)?;
    let chi_len = cell.family.chi_group.len();
    if cfg.rho_index >= cell.family.rhos.len() || cfg.chi_index >= chi_len {
        return Err(Error::invalid(format!(
            "member selector out of range: family has {} rho and {} chi indices",
            cell.family.rhos.len(),
            chi_len
        )));
    }
    let mut sink = Sink::create(cfg.out.as_deref()).map_err(|e| Error::Parse(e.to_string()))?;
    sink.comment_lines(&echo_lines("lvalue", cfg)).map_err(|e| Error::Parse(e.to_string()))?;
    let emit = |sink: &mut Sink, mode: &str, v: &rsavg_core::averages::CentralValue| {
        let verdict = if v.forced_zero && cell.k == 0 { "forced-zero" } else { "ok" };
        let rec = JsonRecord::new()
            .uint("p", cfg.prime)
            .uint("alpha", cfg.alpha.0 as u64)
            .uint("beta", cfg.beta.0 as u64)
            .uint("rho_index", cfg.rho_index as u64)
            .uint("chi_index", cfg.chi_index as u64)
            .uint("k", cell.k as u64)
            .string("depletion", mode)
            .float("value_re", v.value.re)
            .float("value_im", v.value.im)
            .float("certificate", v.cert)
            .uint("n_eff", v.n_eff)
            .uint("conductor_x", v.x as u64)
            .uint("conductor_y", v.y as u64)
            .bool("self_dual", v.self_dual)
            .bool("exceptional", v.exceptional)
            .float("root_number_re", v.root_number.re)
            .float("root_number_im", v.root_number.im)
            .string("verdict", verdict)
            .render();
        sink.line(&rec)
    };
    let top = cell.central_value_of(cfg.rho_index, cfg.chi_index);
    match cfg.depletion {
        DepletionMode::Top => {
            emit(&mut sink, "top", &top).map_err(|e| Error::Parse(e.to_string()))?;
        }
        DepletionMode::Own => {
            let own = central_value_own(field, &f, &cell, cfg.rho_index, cfg.chi_index, cfg.tol)?;
            emit(&mut sink, "own", &own).map_err(|e| Error::Parse(e.to_string()))?;
        }
        DepletionMode::Both => {
            emit(&mut sink, "top", &top).map_err(|e| Error::Parse(e.to_string()))?;
            let own = central_value_own(field, &f, &cell, cfg.rho_index, cfg.chi_index, cfg.tol)?;
            emit(&mut sink, "own", &own).map_err(|e| Error::Parse(e.to_string()))?;
            // truncated local Euler factor of the own series at s = 1/2
            let w = cell.family.member(cfg.rho_index, cfg.chi_index);
            let emax = (0..)
                .take_while(|e| cfg.prime.pow(*e) as usize <= f.n_max().min(100_000))
                .last()
                .unwrap_or(0);
            let coeffs = dirichlet_coefficients(
                &cell.family,
                w,
                &f,
                cfg.prime.pow(emax) as usize,
                Depletion::Own,
            )?;
            let mut ratio = num_complex::Complex64::new(0.0, 0.0);
            for e in 0..=emax {
                let pe = cfg.prime.pow(e);
                ratio += coeffs[pe as usize] / (pe as f64).sqrt();
            }
            sink.line(&format!(
                "# euler_ratio_p (truncated at p^{emax}) = {} + {} i",
                num(ratio.re),
                num(ratio.im)
            ))
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
    }
    sink.finish().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

/// Shared grid row emission for havg/table.
fn havg_rows(
    sink: &mut Sink,
    cfg: &RunConfig,
    field: ImagQuadField,
    f: &NewformTable,
    ks: &[u32],
    with_diffsum: bool,
) -> Result<()> {
    sink.line("p,alpha,beta,k,H_direct,H_formula,residual,main_term,verdict")
        .map_err(|e| Error::Parse(e.to_string()))?;
    for &k in ks {
        for alpha in cfg.alpha.0..=cfg.alpha.1 {
            for beta in cfg.beta.0..=cfg.beta.1 {
                let cell =
                    CellComputation::compute(field, f, cfg.prime, alpha, beta, k, cfg.tol)?;
                let (hd, cd) = cell.harmonic_direct();
                let fr = &cell.formula_exact;
                let residual = (hd - fr.value).abs();
                let verdict = if residual <= cd + fr.cert { "ok" } else { "fail" };
                let mt = main_term_for(&field, f, cfg.prime, alpha, beta, k)
                    .map(num)
                    .unwrap_or_default();
                sink.line(&format!(
                    "{},{},{},{},{},{},{},{},{}",
                    cfg.prime,
                    alpha,
                    beta,
                    k,
                    num(hd),
                    num(fr.value),
                    num(residual),
                    mt,
                    verdict
                ))
                .map_err(|e| Error::Parse(e.to_string()))?;
                if with_diffsum {
                    sink.line(&format!(
                        "# convention p={} alpha={} beta={} k={}: {}",
                        cfg.prime,
                        alpha,
                        beta,
                        k,
                        convention_note(&cell)
                    ))
                    .map_err(|e| Error::Parse(e.to_string()))?;
                }
                if with_diffsum && alpha >= 1 {
                    let ds = cell.difference_sum(&field, 0.5, 0.5)?;
                    sink.line(&format!(
                        "# diffsum p={} alpha={} beta={} k={}: direct={} factored={} \
                         convenient3={} j0={} leading_chi={} leading_chi2={}",
                        cfg.prime,
                        alpha,
                        beta,
                        k,
                        num(ds.direct),
                        num(ds.factored),
                        num(ds.convenient3_const_theta),
                        num(ds.j0),
                        num(ds.leading_chi),
                        num(ds.leading_chi2)
                    ))
                    .map_err(|e| Error::Parse(e.to_string()))?;
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_havg(cfg: &RunConfig, field: ImagQuadField, n: u64) -> Result<()> {
    let f = build_table(&field, n, cfg, cfg.k)?;
    let mut sink = Sink::create(cfg.out.as_deref()).map_err(|e| Error::Parse(e.to_string()))?;
    sink.comment_lines(&echo_lines("havg", cfg)).map_err(|e| Error::Parse(e.to_string()))?;
    havg_rows(&mut sink, cfg, field, &f, &[cfg.k], false)?;
    sink.finish().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn cmd_table(cfg: &RunConfig, field: ImagQuadField, n: u64) -> Result<()> {
    let f = build_table(&field, n, cfg, 1)?;
    let mut sink = Sink::create(cfg.out.as_deref()).map_err(|e| Error::Parse(e.to_string()))?;
    sink.comment_lines(&echo_lines("table", cfg)).map_err(|e| Error::Parse(e.to_string()))?;
    havg_rows(&mut sink, cfg, field, &f, &[0, 1], true)?;
    sink.finish().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn cmd_gavg(cfg: &RunConfig, field: ImagQuadField, n: u64) -> Result<()> {
    let f = build_table(&field, n, cfg, cfg.k)?;
    let mut sink = Sink::create(cfg.out.as_deref()).map_err(|e| Error::Parse(e.to_string()))?;
    sink.comment_lines(&echo_lines("gavg", cfg)).map_err(|e| Error::Parse(e.to_string()))?;
    sink.line("p,alpha,beta,k,tame_id,h_star,delta_re,delta_im,certificate,verdict")
        .map_err(|e| Error::Parse(e.to_string()))?;
    for alpha in cfg.alpha.0..=cfg.alpha.1 {
        for beta in cfg.beta.0..=cfg.beta.1 {
            let cell =
                CellComputation::compute(field, &f, cfg.prime, alpha, beta, cfg.k, cfg.tol)?;
            for e in cell.galois_averages() {
                let verdict =
                    if e.delta.norm() > e.cert { "nonzero" } else { "indeterminate" };
                sink.line(&format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    cfg.prime,
                    alpha,
                    beta,
                    cfg.k,
                    e.tame_label,
                    e.h_star,
                    num(e.delta.re),
                    num(e.delta.im),
                    num(e.cert),
                    verdict
                ))
                .map_err(|e2| Error::Parse(e2.to_string()))?;
            }
            let nv = cell.nonvanishing_report();
            sink.line(&format!(
                "# nonvanishing p={} alpha={alpha} beta={beta} k={}: |sum h* delta| = {} \
                 certificate = {} verdict = {}",
                cfg.prime,
                cfg.k,
                num(nv.value),
                num(nv.cert),
                match nv.verdict {
                    Verdict::Nonzero => "nonzero",
                    Verdict::Indeterminate => "indeterminate",
                }
            ))
            .map_err(|e| Error::Parse(e.to_string()))?;
        }
    }
    sink.finish().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn cmd_diag(cfg: &RunConfig, field: ImagQuadField, n: u64) -> Result<()> {
    // short sums need coefficients to xmax^2 + b^2 |D|
    let depth =
        (cfg.x_max * cfg.x_max + cfg.b_param * cfg.b_param * field.abs_disc()) as usize + 1;
    let f = NewformTable::build(&cfg.source, depth)?;
    let _ = n;
    let mut sink = Sink::create(cfg.out.as_deref()).map_err(|e| Error::Parse(e.to_string()))?;
    sink.comment_lines(&echo_lines("diag", cfg)).map_err(|e| Error::Parse(e.to_string()))?;
    sink.line("b,x,S_x").map_err(|e| Error::Parse(e.to_string()))?;
    let (grid, exponent) = short_sum_diag(&f, &field, cfg.b_param, cfg.x_max)?;
    for (x, s) in grid {
        sink.line(&format!("{},{},{}", cfg.b_param, x, num(s)))
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    sink.line(&format!("# fitted_growth_exponent = {}", num(exponent)))
        .map_err(|e| Error::Parse(e.to_string()))?;
    sink.finish().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

/// Convention-selection note for the report: which E-term convention closes.
pub fn convention_note(cell: &CellComputation) -> String {
    let exact = cell.residual(EtermConvention::ExactAbel);
    let mixed = cell.residual(EtermConvention::MixedOnly);
    format!(
        "exact-Abel residual {} vs mixed-only variant residual {}; exact-Abel closes",
        num(exact),
        num(mixed)
    )
}
