//! Run configuration: command-line flags override an optional `key = value`
//! text file; one environment variable (RSAVG_THREADS) sets the worker count.
//! The merged configuration is echoed into every output file header so runs
//! are reproducible from their outputs alone.

use rsavg_core::arith;
use rsavg_core::newform::{parse_seeds, ApSource, EllipticCurve};
use rsavg_core::quadfield::ImagQuadField;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepletionMode {
    Top,
    Own,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: ApSource,
    pub source_desc: String,
    pub disc: i64,
    pub prime: u64,
    pub alpha: (u32, u32),
    pub beta: (u32, u32),
    pub k: u32,
    pub tol: f64,
    pub depletion: DepletionMode,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
    pub rho_index: usize,
    pub chi_index: usize,
    pub b_param: u64,
    pub x_max: u64,
}

pub struct ParsedArgs {
    pub command: String,
    pub config: RunConfig,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u32 = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
        let hi: u32 = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        Ok((lo, hi))
    } else {
        let v: u32 = s.trim().parse().map_err(|_| format!("bad value `{s}`"))?;
        Ok((v, v))
    }
}

/// Parse `a1,a2,a3,a4,a6`.
fn parse_curve(s: &str) -> Result<EllipticCurve, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 5 {
        return Err(format!("--curve expects a1,a2,a3,a4,a6; got `{s}`"));
    }
    let mut v = [0i64; 5];
    for (i, p) in parts.iter().enumerate() {
        v[i] = p.trim().parse().map_err(|_| format!("bad curve coefficient `{p}`"))?;
    }
    Ok(EllipticCurve::new(v[0], v[1], v[2], v[3], v[4]))
}

/// Read a `key = value` file with `#` comments.
fn read_config_file(path: &str) -> Result<BTreeMap<String, String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{path}:{}: expected `key = value`", lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn parse_args(args: &[String]) -> Result<ParsedArgs, String> {
    if args.is_empty() {
        return Err(usage());
    }
    let command = args[0].clone();
    // collect --key value pairs; `verify` takes one positional suite name
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    let mut positional: Vec<String> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if let Some(key) = a.strip_prefix("--") {
            let val = args.get(i + 1).ok_or_else(|| format!("--{key} needs a value"))?;
            kv.insert(key.to_string(), val.clone());
            i += 2;
        } else {
            positional.push(a.clone());
            i += 1;
        }
    }
    // config file first, flags override
    let mut merged = if let Some(path) = kv.get("config") {
        read_config_file(path)?
    } else {
        BTreeMap::new()
    };
    for (k, v) in &kv {
        if k != "config" {
            merged.insert(k.clone(), v.clone());
        }
    }
    if command == "verify" {
        if let Some(suite) = positional.first() {
            merged.insert("suite".into(), suite.clone());
        }
    }
    let get = |k: &str| merged.get(k).cloned();
    // newform source
    let (source, source_desc) = match (get("seeds"), get("curve")) {
        (Some(path), None) => {
            (parse_seeds(std::path::Path::new(&path)).map_err(|e| e.to_string())?,
             format!("seeds:{path}"))
        }
        (None, Some(c)) => {
            let e = parse_curve(&c)?;
            (ApSource::Curve(e), format!("curve:{c}"))
        }
        (Some(_), Some(_)) => return Err("--seeds and --curve are mutually exclusive".into()),
        (None, None) => {
            if command == "verify" {
                // verify suites use their own built-in configuration
                (ApSource::Curve(rsavg_core::newform::curves::E11A1), "curve:0,-1,1,-10,-20".into())
            } else {
                return Err("one of --seeds FILE or --curve a1,a2,a3,a4,a6 is required".into());
            }
        }
    };
    let disc: i64 = get("disc")
        .unwrap_or_else(|| "-7".into())
        .parse()
        .map_err(|_| "bad --disc".to_string())?;
    let prime: u64 = get("prime")
        .unwrap_or_else(|| "3".into())
        .parse()
        .map_err(|_| "bad --prime".to_string())?;
    let alpha = parse_range(&get("alpha").unwrap_or_else(|| "0".into()))?;
    let beta = parse_range(&get("beta").unwrap_or_else(|| "0".into()))?;
    let k: u32 = get("k").unwrap_or_else(|| "0".into()).parse().map_err(|_| "bad --k")?;
    if k > 1 {
        return Err("--k must be 0 or 1".into());
    }
    let tol: f64 = get("tol")
        .unwrap_or_else(|| "1e-8".into())
        .parse()
        .map_err(|_| "bad --tol".to_string())?;
    if !(tol > 0.0) {
        return Err("--tol must be positive".into());
    }
    let depletion = match get("depletion").unwrap_or_else(|| "top".into()).as_str() {
        "top" => DepletionMode::Top,
        "own" => DepletionMode::Own,
        "both" => DepletionMode::Both,
        other => return Err(format!("bad --depletion `{other}` (top|own|both)")),
    };
    let format = match get("format").unwrap_or_else(|| "csv".into()).as_str() {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return Err(format!("bad --format `{other}` (csv|json)")),
    };
    let out = get("out").map(PathBuf::from);
    let threads: usize = match get("threads") {
        Some(t) => t.parse().map_err(|_| "bad --threads".to_string())?,
        None => std::env::var("RSAVG_THREADS")
            .ok()
            .and_then(|t| t.parse().ok())
            .unwrap_or(0),
    };
    let rho_index: usize =
        get("rho-index").unwrap_or_else(|| "0".into()).parse().map_err(|_| "bad --rho-index")?;
    let chi_index: usize =
        get("chi-index").unwrap_or_else(|| "0".into()).parse().map_err(|_| "bad --chi-index")?;
    let b_param: u64 = get("b").unwrap_or_else(|| "1".into()).parse().map_err(|_| "bad --b")?;
    let x_max: u64 =
        get("xmax").unwrap_or_else(|| "1000".into()).parse().map_err(|_| "bad --xmax")?;
    if command == "verify" {
        if let Some(s) = merged.get("suite") {
            positional_check(s)?;
        }
    }
    let config = RunConfig {
        source,
        source_desc,
        disc,
        prime,
        alpha,
        beta,
        k,
        tol,
        depletion,
        out,
        format,
        threads,
        rho_index,
        chi_index,
        b_param,
        x_max,
    };
    let mut parsed = ParsedArgs { command, config };
    if let Some(suite) = merged.get("suite") {
        parsed.command = format!("verify:{suite}");
    }
    Ok(parsed)
}

fn positional_check(s: &str) -> Result<(), String> {
    match s {
        "afe" | "haf" | "mobius" | "cutoff" | "counting" => Ok(()),
        other => Err(format!("unknown verify suite `{other}` (afe|haf|mobius|cutoff|counting)")),
    }
}

/// Validate the standing hypotheses before any computation.
pub fn validate(config: &RunConfig) -> Result<(ImagQuadField, u64), String> {
    let field = ImagQuadField::new(config.disc).map_err(|e| e.to_string())?;
    let n = config.source.level().map_err(|e| e.to_string())?;
    if arith::factorize(n).iter().any(|&(_, e)| e > 1) {
        return Err(format!("level N = {n} is not squarefree"));
    }
    let p = config.prime;
    if p < 3 || !arith::is_prime(p) {
        return Err(format!("p = {p} must be an odd prime"));
    }
    if n % p == 0 || field.abs_disc() % p == 0 {
        return Err(format!("(p, ND) = 1 violated: p = {p}, N = {n}, D = {}", config.disc));
    }
    if arith::gcd(n, field.abs_disc()) != 1 {
        return Err(format!("(N, D) = 1 violated: N = {n}, D = {}", config.disc));
    }
    Ok((field, n))
}

/// Stable `key = value` echo of the configuration (execution details like
/// the worker count are excluded so outputs are byte-identical across
/// thread counts).
pub fn echo_lines(command: &str, config: &RunConfig) -> Vec<String> {
    let mut lines = vec![format!("command = {command}")];
    let mut push = |k: &str, v: String| lines.push(format!("{k} = {v}"));
    push("source", config.source_desc.clone());
    push("disc", config.disc.to_string());
    push("prime", config.prime.to_string());
    push("alpha", format!("{}..{}", config.alpha.0, config.alpha.1));
    push("beta", format!("{}..{}", config.beta.0, config.beta.1));
    push("k", config.k.to_string());
    push("tol", format!("{:e}", config.tol));
    push(
        "depletion",
        match config.depletion {
            DepletionMode::Top => "top",
            DepletionMode::Own => "own",
            DepletionMode::Both => "both",
        }
        .to_string(),
    );
    push(
        "format",
        match config.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
        .to_string(),
    );
    lines
}

pub fn usage() -> String {
    "usage: rsavg <lvalue|havg|gavg|table|diag|verify> [flags]\n\
     flags: --seeds FILE | --curve a1,a2,a3,a4,a6   newform source\n\
            --disc D          fundamental discriminant (< 0, |D| >= 7)\n\
            --prime p         odd prime coprime to N D\n\
            --alpha A|A..B    ring-class conductor exponent(s)\n\
            --beta B|A..B     cyclotomic conductor exponent(s)\n\
            --k {0,1}         derivative order\n\
            --tol FLOAT       per-member certificate target\n\
            --depletion {top,own,both}\n\
            --rho-index I --chi-index J   (lvalue member selector)\n\
            --b B --xmax X    (diag short-sum parameters)\n\
            --out PATH --format {csv,json} --threads N --config FILE\n\
     verify suites: afe haf mobius cutoff counting\n\
     exit codes: 0 ok, 1 verify failure, 2 invalid input, 3 tolerance unachievable"
        .to_string()
}
