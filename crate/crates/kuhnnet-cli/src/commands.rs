use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use kuhnnet::analysis::{self, bound_terms, empirical_lipschitz, sup_error_scan, verify_all, Domain, TargetFn, VerifyOptions};
use kuhnnet::baseline::build_sota_with;
use kuhnnet::builder::{
    build_approximator_shaped_with, build_approximator_with, build_global_with, encode_with, BuildKind, BuildOptions,
    BuildReport,
};
use kuhnnet::gadgets::{build_memorizer_deep, build_memorizer_sqrt, deep_capacity, Samples1D};
use kuhnnet::modulus::min_concave_from_grid;
use kuhnnet::targets::Target;
use kuhnnet::{Error, ReluNet, SampleGrid};

use crate::{BaselineArgs, BoundArgs, BuildArgs, CompareArgs, EvalArgs, MemorizeArgs, Source, Variant, VerifyArgs};

/// 2 for bad input, 3 for the lattice cap, 4 for I/O.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(k) = cause.downcast_ref::<Error>() {
            return match k {
                Error::Resource { .. } => 3,
                Error::Io(_) => 4,
                _ => 2,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 4;
        }
    }
    2
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write(p, text.as_bytes()),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing stdout")?;
            out.flush().context("writing stdout")
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn options() -> Result<BuildOptions> {
    Ok(BuildOptions::from_env()?)
}

fn parse_target(s: &str) -> Result<Target> {
    Ok(s.parse::<Target>()?)
}

fn load_source(src: &Source, opts: &BuildOptions) -> Result<(SampleGrid, Option<Target>)> {
    match (&src.target, &src.grid) {
        (Some(t), None) => {
            let target = parse_target(t)?;
            let (Some(d), Some(n)) = (src.d, src.n) else {
                bail!("--target needs --d and --n");
            };
            let grid = encode_with(|x| target.eval(x), d, n, opts)?;
            Ok((grid, Some(target)))
        }
        (None, Some(path)) => {
            let text = read(path)?;
            let grid = if is_csv(path) {
                SampleGrid::from_csv(&text, opts.max_lattice)?
            } else {
                SampleGrid::from_json(&text, opts.max_lattice)?
            };
            if src.d.is_some_and(|d| d != grid.d()) || src.n.is_some_and(|n| n != grid.n()) {
                bail!("--d/--n disagree with the grid file (d={}, n={})", grid.d(), grid.n());
            }
            Ok((grid, None))
        }
        _ => bail!("give exactly one of --target or --grid"),
    }
}

fn kind_of(v: &Variant) -> BuildKind {
    match (&v.shape, v.global) {
        (Some(m), _) => BuildKind::Shaped(m.clone()),
        (None, true) => BuildKind::Global,
        (None, false) => BuildKind::Flat,
    }
}

fn build_kind(grid: &SampleGrid, kind: &BuildKind, opts: &BuildOptions) -> Result<BuildReport> {
    Ok(match kind {
        BuildKind::Flat => build_approximator_with(grid, opts)?,
        BuildKind::Global => build_global_with(grid, opts)?,
        BuildKind::Shaped(m) => build_approximator_shaped_with(grid, m, opts)?,
        BuildKind::Baseline => bail!("baseline builds use the baseline subcommand"),
    })
}

fn load_net(path: &Path) -> Result<ReluNet> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    ReluNet::deserialize(&bytes).with_context(|| format!("decoding {}", path.display()))
}

pub fn build(a: BuildArgs) -> Result<u8> {
    let opts = options()?;
    let (grid, _) = load_source(&a.source, &opts)?;
    let rep = build_kind(&grid, &kind_of(&a.variant), &opts)?;
    if !rep.within_bounds() {
        eprintln!("warning: build exceeds its size budget");
    }
    write(&a.out, &rep.net.serialize())?;
    emit(a.report.as_deref(), &rep.to_json())?;
    Ok(0)
}

/// Rows of comma-separated numbers; a non-numeric first row is a header.
fn parse_points(text: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match row {
            Ok(r) if r.len() == d => pts.push(r),
            Ok(r) => bail!("row {}: expected {d} columns, got {}", i + 1, r.len()),
            Err(_) if i == 0 => continue,
            Err(e) => bail!("row {}: {e}", i + 1),
        }
    }
    Ok(pts)
}

pub fn eval(a: EvalArgs) -> Result<u8> {
    let net = load_net(&a.net)?;
    let text = match &a.input {
        Some(p) => read(p)?,
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            s
        }
    };
    let pts = parse_points(&text, net.input_dim())?;
    let mut ev = net.evaluator();
    let mut out = String::from("value\n");
    for p in &pts {
        let v = ev.eval(p);
        let row: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    emit(None, &out)?;
    Ok(0)
}

pub fn verify(a: VerifyArgs) -> Result<u8> {
    let opts = options()?;
    let net = load_net(&a.net)?;
    let (grid, target) = load_source(&a.source, &opts)?;
    let modulus = match target {
        Some(t) => t.modulus(grid.d() as f64)?,
        None => min_concave_from_grid(&grid),
    };
    let f = target.map(|t| move |x: &[f64]| t.eval(x));
    let vo = VerifyOptions {
        seed: a.scan.seed,
        scan_points: a.scan.scan_points,
        pairs: a.scan.pairs,
        kind: kind_of(&a.variant),
        target: f.as_ref().map(|g| g as TargetFn),
    };
    let rep = verify_all(&net, &grid, &modulus, &vo);
    if let Some(p) = &a.report {
        write(p, rep.to_json().as_bytes())?;
    }
    emit(None, &rep.to_table())?;
    if rep.all_pass() {
        Ok(0)
    } else {
        let names: Vec<&str> = rep.failed().map(|c| c.name.as_str()).collect();
        eprintln!("failed checks: {}", names.join(", "));
        Ok(1)
    }
}

pub fn compare(a: CompareArgs) -> Result<u8> {
    let opts = options()?;
    let target = parse_target(&a.target)?;
    let grid = encode_with(|x| target.eval(x), a.d, a.n, &opts)?;
    let kuhn = build_approximator_with(&grid, &opts)?;
    let base = build_sota_with(|x| target.eval(x), 1.0, 1.0, a.d, a.n, &opts)?;
    let unit = Domain::unit(a.d);
    let f = |x: &[f64]| target.eval(x);
    let mut out = String::from("method,sup_error,empirical_lipschitz,width,depth,nonzero_params\n");
    for (name, rep) in [("kuhn", &kuhn), ("baseline", &base)] {
        let err = sup_error_scan(&rep.net, f, &unit, a.scan.scan_points, a.scan.seed, Some(a.n));
        let lip = empirical_lipschitz(&rep.net, &unit, a.scan.pairs, a.scan.seed, Some(a.n));
        out.push_str(&format!(
            "{name},{err},{lip},{},{},{}\n",
            rep.width, rep.depth, rep.nonzero_params
        ));
    }
    emit(a.out.as_deref(), &out)?;
    Ok(0)
}

pub fn memorize(a: MemorizeArgs) -> Result<u8> {
    let text = read(&a.samples)?;
    let samples = if is_csv(&a.samples) { Samples1D::from_csv(&text)? } else { Samples1D::from_json(&text)? };
    let k = samples.len();
    let s = (1..).find(|s: &usize| s * s >= k).unwrap_or(1);
    let (net, doc) = match &a.widths {
        Some(w) => {
            let net = build_memorizer_deep(&samples, w)?;
            let sum: i64 = w.iter().map(|&v| v as i64).sum();
            let doc = serde_json::json!({
                "mode": "deep",
                "widths": w,
                "capacity": deep_capacity(w),
                "bound_params": 2 * k as i64 + 23 * sum - 121 * w.len() as i64,
            });
            (net, doc)
        }
        None => {
            let net = build_memorizer_sqrt(&samples)?;
            let doc = serde_json::json!({
                "mode": "sqrt",
                "bound_width": 2 * s,
                "bound_depth": 2,
                "bound_params": 2 * k + 8 * s,
            });
            (net, doc)
        }
    };
    let mut doc = doc;
    doc["format"] = "kuhnnet-memorize/1".into();
    doc["samples"] = k.into();
    doc["width"] = net.width().into();
    doc["depth"] = net.depth().into();
    doc["widthvec"] = net.widthvec().into();
    doc["nonzero_params"] = net.count_nonzero_params(0.0).into();
    write(&a.out, &net.serialize())?;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(a.report.as_deref(), &text)?;
    Ok(0)
}

pub fn bound(a: BoundArgs) -> Result<u8> {
    let base = analysis::BoundArgs {
        depth: a.depth,
        width: a.width,
        lip: a.lip,
        loss_lip: a.loss_lip,
        d: a.d,
        samples: a.samples,
        delta: a.delta,
        c: a.c,
        c_dx: a.c_dx,
    };
    eprintln!("note: C={} and C_dX={} are caller-supplied constants with no closed form", a.c, a.c_dx);
    let ns: Vec<u64> = if a.sweep { (10..=20).map(|e| 1u64 << e).collect() } else { vec![a.samples] };
    let mut out = String::from("N,confidence,parameter_term,function_term,bound\n");
    for n in ns {
        let t = bound_terms(&analysis::BoundArgs { samples: n, ..base })?;
        out.push_str(&format!(
            "{n},{},{},{},{}\n",
            t.confidence, t.parameter_term, t.function_term, t.total
        ));
    }
    emit(None, &out)?;
    Ok(0)
}

pub fn baseline(a: BaselineArgs) -> Result<u8> {
    let opts = options()?;
    let target = parse_target(&a.target)?;
    let rep = build_sota_with(|x| target.eval(x), a.nu, a.alpha, a.d, a.n, &opts)?;
    write(&a.out, &rep.net.serialize())?;
    emit(a.report.as_deref(), &rep.to_json())?;
    Ok(0)
}
