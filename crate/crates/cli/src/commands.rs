//! One function per subcommand.  Each returns its tables and whether every
//! asserted tolerance held.

use std::io::Write as _;

use anyhow::{anyhow, Result};
use hml_core::modforms::check_integrity;
use hml_core::moments::{moment_report, sharp_sum, MomentOptions};
use hml_core::petersson::{harmonic_average, HarmonicBasis};
use hml_core::voronoi::calibrate::{calibrate, frozen, CalibrationGrid};
use hml_core::voronoi::{smoothing_envelope, voronoi_transform, SmoothingParams, WTildeTable};
use hml_core::{in_order, Real};
use rayon::prelude::*;

use crate::accept::{self, AcceptConfig, Bases, Check, C1_TOL};
use crate::cache::get_or_build;
use crate::grid::{parse_delta_rule, parse_point, x_grid};
use crate::output::{render, write_atomic, Table};
use crate::{Command, Options};

pub struct Outcome {
    pub tables: Vec<Table>,
    pub pass: bool,
}

fn from_checks(checks: &[Check], t: Table) -> Outcome {
    let mut s = Table::new("checks", &["check", "value", "tolerance", "pass", "note"]);
    for c in checks {
        s.push(vec![c.name.into(), c.value.into(), c.tolerance.into(), c.pass.into(), c.note.clone().into()]);
    }
    Outcome { pass: checks.iter().all(|c| c.pass), tables: vec![s, t] }
}

fn weights(opts: &Options, what: &str) -> Result<Vec<u32>> {
    if opts.k.is_empty() {
        return Err(anyhow!("{what} needs at least one weight: --k 12,24,..."));
    }
    Ok(opts.k.clone())
}

/// Bases for each weight in parallel, each covering n ≤ need(k).
fn load_bases(opts: &Options, ks: &[u32], need: impl Fn(u32) -> usize + Sync) -> Result<Bases> {
    let prec = opts.prec()?;
    let v: Vec<Result<(u32, HarmonicBasis)>> = ks
        .par_iter()
        .map(|&k| Ok((k, get_or_build(&opts.cache_dir, k, need(k), prec, opts.cmax)?.0)))
        .collect();
    Ok(in_order(v)?.into_iter().collect())
}

pub fn dispatch(c: &Command, opts: &Options) -> Result<Outcome> {
    match c {
        Command::Eigen => eigen(opts),
        Command::Weights => weights_cmd(opts),
        Command::TraceCheck => trace_check(opts),
        Command::BesselCheck => bessel_check(opts),
        Command::VoronoiCheck => voronoi_check(opts),
        Command::Moments => moments(opts),
        Command::Discrepancy { points, n, r_max } => discrepancy(opts, points, *n, *r_max),
        Command::OffdiagCheck => offdiag_check(opts),
        Command::Calibrate => calibrate_cmd(),
        Command::Accept => Err(anyhow!("accept is handled separately")),
    }
}

fn eigen(opts: &Options) -> Result<Outcome> {
    let ks = weights(opts, "eigen")?;
    let n_max = opts.nmax.unwrap_or(100);
    let bases = load_bases(opts, &ks, |_| n_max)?;
    let mut t = Table::new("eigenvalues", &["k", "form", "n", "lambda"]);
    let mut it = Table::new("integrity", &["k", "form", "n_max", "deligne_excess", "mult_residual", "hecke_residual", "exact_match"]);
    let mut pass = true;
    for (k, b) in &bases {
        for f in &b.forms {
            let r = check_integrity(f)?;
            pass &= r.deligne_excess <= C1_TOL && r.mult_residual <= C1_TOL && r.hecke_residual <= C1_TOL && r.exact_match != Some(false);
            pass &= f.lambda(1)?.to_f64() == 1.0;
            let em = r.exact_match.map(|m| if m { "match" } else { "MISMATCH" }).unwrap_or("");
            it.push(vec![(*k).into(), f.index.into(), r.n_max.into(), r.deligne_excess.into(), r.mult_residual.into(), r.hecke_residual.into(), em.into()]);
            for n in 1..=n_max.min(f.n_max()) {
                t.push(vec![(*k).into(), f.index.into(), n.into(), f.lambda[n].to_f64().into()]);
            }
        }
    }
    Ok(Outcome { tables: vec![it, t], pass })
}

fn weights_cmd(opts: &Options) -> Result<Outcome> {
    let ks = weights(opts, "weights")?;
    let n_max = opts.nmax.unwrap_or(100);
    let bases = load_bases(opts, &ks, |_| n_max)?;
    let mut t = Table::new("harmonic_weights", &["k", "form", "weight", "lambda2", "tail_bound"]);
    let mut pass = true;
    for (k, b) in &bases {
        for (f, w) in b.forms.iter().zip(&b.weights) {
            let w = w.to_f64();
            pass &= w > 0.0;
            t.push(vec![(*k).into(), f.index.into(), w.into(), f.lambda(2)?.to_f64().into(), b.tail_bound.into()]);
        }
    }
    Ok(Outcome { tables: vec![t], pass })
}

fn trace_check(opts: &Options) -> Result<Outcome> {
    let ks = weights(opts, "trace-check")?;
    let n = opts.nmax.unwrap_or(accept::C2_PAIR_MAX * accept::C2_PAIR_MAX);
    let bases = load_bases(opts, &ks, |_| n)?;
    let (checks, t) = accept::criterion2(&bases, &ks, opts.cmax, opts.prec()?)?;
    Ok(from_checks(&checks, t))
}

fn bessel_check(opts: &Options) -> Result<Outcome> {
    let orders: Vec<u32> = if opts.k.is_empty() { accept::C3_ORDERS.to_vec() } else { opts.k.iter().map(|k| k - 1).collect() };
    let (checks, t) = accept::criterion3(&orders, opts.prec()?)?;
    Ok(from_checks(&checks, t))
}

fn voronoi_check(opts: &Options) -> Result<Outcome> {
    let ks = weights(opts, "voronoi-check")?;
    let rule = parse_delta_rule(&opts.delta_rule)?;
    let mut cells = Vec::new();
    for &k in &ks {
        for x in x_grid(k, opts.x_count) {
            cells.push(SmoothingParams::new(k, x, rule.delta(k, x, opts.epsilon))?);
        }
    }
    let need = |k: u32| {
        cells.iter().filter(|p| p.k == k).map(|p| (p.default_cutoff() as usize).max((2.0 * p.x).floor() as usize)).max().unwrap_or(2)
    };
    let bases = load_bases(opts, &ks, need)?;
    let rows: Vec<Result<_>> = cells
        .par_iter()
        .map(|p| {
            let b = &bases[&p.k];
            let table = WTildeTable::build(*p, p.default_cutoff())?;
            let mut res = Vec::new();
            let mut rows = Vec::new();
            for f in &b.forms {
                let s = sharp_sum(f, p.x)?.to_f64();
                let v = voronoi_transform(f, &table)?;
                res.push(s - v.value);
                rows.push((f.index, s, v.value, v.tail_estimate));
            }
            let avg = if res.is_empty() { 0.0 } else { harmonic_average(b, &res)? };
            Ok((*p, rows, avg))
        })
        .collect();
    let mut t = Table::new("voronoi_residual", &["k", "x", "delta", "form", "sharp", "transform", "residual", "envelope", "tail_estimate"]);
    let mut worst = 0f64;
    for (p, rows, avg) in in_order(rows)? {
        let env = smoothing_envelope(&p);
        for (i, s, v, tail) in rows {
            worst = worst.max((s - v).abs() / (accept::C4_SAFETY * env));
            t.push(vec![p.k.into(), p.x.into(), p.delta.into(), i.into(), s.into(), v.into(), (s - v).into(), env.into(), tail.into()]);
        }
        t.push(vec![p.k.into(), p.x.into(), p.delta.into(), "average".into(), f64::NAN.into(), f64::NAN.into(), avg.into(), env.into(), f64::NAN.into()]);
    }
    let checks = [Check { name: "envelope", value: worst, tolerance: 1.0, pass: worst <= 1.0, note: "max |S − transform| / (10 x log x/Δ)".into() }];
    Ok(from_checks(&checks, t))
}

fn moments(opts: &Options) -> Result<Outcome> {
    let ks = weights(opts, "moments")?;
    let rule = parse_delta_rule(&opts.delta_rule)?;
    let mopts = MomentOptions { series_cutoff: opts.series_cutoff, delta_rule: rule, epsilon: opts.epsilon, smoothed: false };
    let need = |k: u32| x_grid(k, opts.x_count).last().map(|x| (2.0 * x).floor() as usize).unwrap_or(2).max(opts.nmax.unwrap_or(0));
    let bases = load_bases(opts, &ks, need)?;
    let mut cells = Vec::new();
    for &k in &ks {
        for x in x_grid(k, opts.x_count) {
            cells.push((k, x));
        }
    }
    let reps: Vec<Result<_>> = cells.par_iter().map(|&(k, x)| Ok(moment_report(&bases[&k], x, &mopts)?)).collect();
    let mut t = Table::new(
        "moments",
        &["k", "x", "dim", "first", "first_main", "second", "second_main", "second_main_tail", "in_regime", "variance", "variance_main", "s_over_x13", "delta"],
    );
    let mut pass = true;
    for r in in_order(reps)? {
        pass &= r.s_over_x13 <= accept::C7_CONSTANT;
        t.push(vec![
            r.k.into(),
            r.x.into(),
            r.dim.into(),
            r.first.into(),
            r.first_main.into(),
            r.second.into(),
            r.second_main.into(),
            r.second_main_tail.into(),
            r.in_regime.into(),
            r.variance.into(),
            r.variance_main.into(),
            r.s_over_x13.into(),
            r.delta_used.into(),
        ]);
    }
    Ok(Outcome { tables: vec![t], pass })
}

fn discrepancy(opts: &Options, points: &[String], n: u64, r_max: u32) -> Result<Outcome> {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|s| parse_point(s)).collect::<Result<_>>()?;
    for &k in &opts.k {
        for x in x_grid(k, opts.x_count) {
            pts.push((x, (k - 1) as f64));
        }
    }
    if pts.is_empty() {
        pts = accept::C8_POINTS.to_vec();
    }
    let (checks, t) = accept::criterion8(&pts, n, r_max, opts.prec()?)?;
    Ok(from_checks(&checks, t))
}

fn offdiag_check(opts: &Options) -> Result<Outcome> {
    let ks = if opts.k.is_empty() { vec![accept::C9_K] } else { opts.k.clone() };
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    for k in ks {
        let (c, t) = accept::criterion9(k)?;
        checks.extend(c);
        tables.push(t);
    }
    let mut o = from_checks(&checks, tables.remove(0));
    o.tables.extend(tables);
    Ok(o)
}

fn calibrate_cmd() -> Result<Outcome> {
    let fresh = calibrate(&CalibrationGrid::default())?;
    let shipped = frozen()?;
    let mut t = Table::new("envelope_constants", &["bound", "constant", "shipped", "grid", "matches"]);
    let mut pass = fresh.grid == shipped.grid;
    for e in &fresh.entries {
        let s = shipped.entries.iter().find(|s| s.bound == e.bound);
        let ok = s.is_some_and(|s| s.constant_hex == e.constant_hex && s.grid == e.grid);
        pass &= ok;
        t.push(vec![e.bound.clone().into(), e.constant.into(), s.map_or(f64::NAN, |s| s.constant).into(), e.grid.clone().into(), ok.into()]);
    }
    Ok(Outcome { tables: vec![t], pass })
}

/// Write tables to --out, or standard output.
pub fn emit(tables: &[Table], opts: &Options) -> Result<()> {
    let s = render(tables, opts.format);
    match &opts.out {
        Some(p) => write_atomic(p, &s),
        None => {
            std::io::stdout().lock().write_all(s.as_bytes())?;
            Ok(())
        }
    }
}

pub fn accept_config(opts: &Options) -> Result<AcceptConfig> {
    Ok(AcceptConfig { cache_dir: opts.cache_dir.clone(), prec: opts.prec()?, epsilon: opts.epsilon, series_cutoff: opts.series_cutoff, jobs: opts.jobs })
}

/// Runs the suite, prints one line per criterion on stderr, writes the tables.
pub fn accept(opts: &Options) -> Result<bool> {
    let suite = accept::run_suite(&accept_config(opts)?, true)?;
    for c in &suite.criteria {
        eprintln!("{}", c.line());
    }
    emit(&suite.all_tables(), opts)?;
    if let Some(c) = suite.criteria.iter().find(|c| c.error.is_some()) {
        return Err(anyhow!("criterion {} did not run: {}", c.id, c.error.as_deref().unwrap_or("")));
    }
    Ok(suite.criteria.iter().all(|c| c.pass()))
}
