//! The acceptance suite.  Each criterion is a list of named checks with the
//! measured value and the tolerance it is held to.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use hml_core::bessel::{bessel_j_series, oscillatory_two_term};
use hml_core::equidist::{equidist_report, omega_floor};
use hml_core::modforms::{check_integrity, cusp_dim, Eigenform};
use hml_core::moments::{moment_report, regime_floor, sharp_sum, DeltaRule, MomentOptions};
use hml_core::offdiag::{dual_integral, integral_regime, oscillatory_bound, poisson_check, IntegralRegime, OffDiagParams};
use hml_core::petersson::{average_pair, default_c_max, harmonic_average, trace_rhs, HarmonicBasis};
use hml_core::voronoi::{smoothing_envelope, voronoi_transform, SmoothingParams, WTildeTable, TAIL_REL_TOL};
use hml_core::{in_order, Mpf, Precision, Real};
use rayon::prelude::*;
use rug::Float;

use crate::cache::get_or_build;
use crate::output::{fmt_f64, render, Format, Table};

pub const C1_WEIGHTS: [u32; 10] = [12, 16, 18, 20, 22, 24, 26, 36, 48, 60];
pub const C1_N: usize = 3000;
pub const C1_TOL: f64 = 8.673617379884035e-19; // 2^-60

pub const C2_WEIGHTS: [u32; 4] = [24, 36, 48, 60];
pub const C2_TOL: f64 = 1e-6;
/// held-out pairs for the trace identity: m ≤ n ≤ this, outside the solve set
pub const C2_PAIR_MAX: usize = 6;

pub const C3_ORDERS: [u32; 4] = [11, 49, 99, 199];
pub const C3_POINTS: usize = 30;
pub const C3_CPRIME: f64 = 2.0;

pub const C4_WEIGHTS: [u32; 3] = [40, 60, 100];
pub const C4_X_FACTORS: [f64; 2] = [1.0, 1.7];
pub const C4_DELTA_EXPONENTS: [f64; 2] = [0.55, 0.65];
pub const C4_SAFETY: f64 = 10.0;
pub const C4_SLOPE: (f64, f64) = (-1.4, -0.6);
/// the w̃ cutoff is doubled at most this often until the tail estimate is
/// below the relative tolerance
pub const C4_MAX_DOUBLINGS: u32 = 2;

pub const C5_WEIGHTS: [u32; 4] = [60, 100, 150, 200];
pub const C5_SAFETY: f64 = 5.0;
pub const C5_MIN_DECREASES: usize = 3;
pub const C6_TOL: f64 = 0.5;
pub const C7_CONSTANT: f64 = 20.0;
/// x = k²/(8π²)(1 + j/√2), j below this, joins x = k²/4 in the monitor grid
pub const C7_GRID_POINTS: usize = 5;

pub const C8_POINTS: [(f64, f64); 2] = [(500.0, 40.0), (2000.0, 99.0)];
pub const C8_N: u64 = 10_000;
pub const C8_R_MAX: u32 = 64;

pub const C9_K: u32 = 40;
pub const C9_POISSON_TOL: f64 = 1e-6;
/// (c, a, t) with m = 1
pub const C9_POISSON_POINTS: [(u64, u64, f64); 3] = [(2, 1, 1.0), (1, 1, 1.5), (3, 2, 2.0)];
pub const C9_WINDOW_TOL: f64 = 1e-3;
pub const C9_SMALL_TOL: f64 = 1e-6;
pub const C9_SPOT_SAFETY: f64 = 10.0;
pub const C9_SPOT_POINTS: [(u64, u64, i64); 5] = [(1, 1, 3), (1, 1, 4), (2, 1, 5), (3, 2, 5), (6, 3, 9)];

/// Checks that fail at desk scale for reasons recorded with the project notes:
/// the first-moment error is not monotone over the four weights, and the
/// stationary-phase window is only a few oscillation widths across when k^ε ≈ 1.
pub const EXPECTED_FAIL: [(u8, &str); 2] = [(5, "trend"), (9, "window")];

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

impl Check {
    fn le(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check { name, value, tolerance, pass: value <= tolerance, note: String::new() }
    }

    fn ge(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check { name, value, tolerance, pass: value >= tolerance, note: String::new() }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.note = s.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    /// every failing check is on the expected-fail list
    pub fn pass_modulo_expected(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass || EXPECTED_FAIL.contains(&(self.id, c.name)))
    }

    pub fn line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let mut s = format!("criterion {:>2} {:<28} {status}", self.id, self.name);
        if let Some(e) = &self.error {
            s.push_str(&format!("  error: {e}"));
        }
        for c in &self.checks {
            s.push_str(&format!("  [{} {} {} {}]", c.name, fmt_f64(c.value), if c.pass { "ok" } else { "FAIL" }, fmt_f64(c.tolerance)));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct AcceptConfig {
    pub cache_dir: PathBuf,
    pub prec: Precision,
    pub epsilon: f64,
    pub series_cutoff: u64,
    pub jobs: usize,
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub criteria: Vec<CriterionResult>,
    pub tables: Vec<Table>,
}

impl SuiteOutput {
    pub fn summary(&self) -> Table {
        let mut t = Table::new("acceptance", &["criterion", "name", "check", "value", "tolerance", "pass", "note"]);
        for c in &self.criteria {
            if let Some(e) = &c.error {
                t.push(vec![(c.id as u32).into(), c.name.into(), "error".into(), f64::NAN.into(), f64::NAN.into(), false.into(), e.clone().into()]);
            }
            for k in &c.checks {
                t.push(vec![(c.id as u32).into(), c.name.into(), k.name.into(), k.value.into(), k.tolerance.into(), k.pass.into(), k.note.clone().into()]);
            }
        }
        t
    }

    pub fn all_tables(&self) -> Vec<Table> {
        let mut v = vec![self.summary()];
        v.extend(self.tables.iter().cloned());
        v
    }

    pub fn render(&self, f: Format) -> String {
        render(&self.all_tables(), f)
    }
}

fn c4_cells() -> Vec<(u32, f64)> {
    let mut v = Vec::new();
    for k in C4_WEIGHTS {
        for f in C4_X_FACTORS {
            v.push((k, (k * k / 4) as f64 * f));
        }
    }
    v
}

/// Largest n each weight is needed to, over every criterion.
pub fn required_tables() -> Result<BTreeMap<u32, usize>> {
    let mut need: BTreeMap<u32, usize> = BTreeMap::new();
    let mut bump = |k: u32, n: usize| {
        let e = need.entry(k).or_insert(0);
        *e = (*e).max(n);
    };
    for k in C1_WEIGHTS {
        bump(k, C1_N);
    }
    for k in C2_WEIGHTS {
        bump(k, C2_PAIR_MAX * C2_PAIR_MAX);
    }
    for (k, x) in c4_cells() {
        for e in C4_DELTA_EXPONENTS {
            let p = SmoothingParams::new(k, x, x.powf(e))?;
            bump(k, (p.default_cutoff() as usize) << C4_MAX_DOUBLINGS);
        }
        bump(k, (2.0 * x).floor() as usize);
    }
    for k in C5_WEIGHTS {
        bump(k, (k * k / 2) as usize);
    }
    Ok(need)
}

pub type Bases = BTreeMap<u32, HarmonicBasis>;

/// Load or build every basis the suite needs, in parallel over weights.
pub fn prefetch(cfg: &AcceptConfig) -> Result<Bases> {
    let need: Vec<(u32, usize)> = required_tables()?.into_iter().collect();
    let built: Vec<Result<(u32, HarmonicBasis)>> = need
        .par_iter()
        .map(|&(k, n)| {
            let (b, _) = get_or_build(&cfg.cache_dir, k, n, cfg.prec, None)?;
            Ok((k, b))
        })
        .collect();
    Ok(in_order(built)?.into_iter().collect())
}

fn basis(bases: &Bases, k: u32) -> Result<&HarmonicBasis> {
    bases.get(&k).ok_or_else(|| anyhow!("no basis for k={k}"))
}

fn truncated(f: &Eigenform, n: usize) -> Eigenform {
    let n = n.min(f.n_max());
    Eigenform { k: f.k, index: f.index, lambda: f.lambda[..=n].to_vec(), exact: f.exact.as_ref().map(|a| a[..=n].to_vec()) }
}

pub fn criterion1(bases: &Bases) -> Result<(Vec<Check>, Table)> {
    let mut t = Table::new("eigenvalue_integrity", &["k", "form", "n_max", "deligne_excess", "mult_residual", "hecke_residual", "exact_match"]);
    let reports: Vec<Result<_>> = C1_WEIGHTS
        .par_iter()
        .map(|&k| {
            let b = basis(bases, k)?;
            b.forms.iter().map(|f| Ok(check_integrity(&truncated(f, C1_N))?)).collect::<Result<Vec<_>>>()
        })
        .collect();
    let (mut del, mut mult, mut hecke) = (f64::NEG_INFINITY, 0f64, 0f64);
    let mut exact_bad = 0usize;
    let mut exact_checked = 0usize;
    for r in in_order(reports)?.into_iter().flatten() {
        del = del.max(r.deligne_excess);
        mult = mult.max(r.mult_residual);
        hecke = hecke.max(r.hecke_residual);
        if cusp_dim(r.k) == 1 {
            exact_checked += 1;
            if r.exact_match != Some(true) {
                exact_bad += 1;
            }
        }
        let em = match r.exact_match {
            Some(true) => "match",
            Some(false) => "MISMATCH",
            None => "",
        };
        t.push(vec![r.k.into(), r.index.into(), r.n_max.into(), r.deligne_excess.into(), r.mult_residual.into(), r.hecke_residual.into(), em.into()]);
    }
    let checks = vec![
        Check::le("deligne", del, C1_TOL).note("max |λ(n)| − d(n)"),
        Check::le("multiplicativity", mult, C1_TOL),
        Check::le("hecke_recursion", hecke, C1_TOL),
        Check::le("exact_mismatches", exact_bad as f64, 0.0).note(format!("{exact_checked} one-dimensional spaces")),
    ];
    Ok((checks, t))
}

/// ⟨λ(m)λ(n)⟩ against δ_{mn} and against the trace formula, on held-out pairs.
pub fn criterion2(bases: &Bases, weights: &[u32], c_max: Option<u64>, prec: Precision) -> Result<(Vec<Check>, Table)> {
    let mut t = Table::new("trace_identity", &["k", "m", "n", "average", "trace_rhs", "residual", "delta_residual", "in_delta_set"]);
    let rows: Vec<Result<Vec<_>>> = weights
        .par_iter()
        .map(|&k| {
            let b = basis(bases, k)?;
            let dim = b.dim();
            let bound = (k as f64).powi(2) / 1e4;
            let mut out = Vec::new();
            for m in 1..=C2_PAIR_MAX {
                for n in m..=C2_PAIR_MAX {
                    if m == 1 && n <= dim {
                        continue;
                    }
                    let avg = average_pair(b, m, n)?;
                    let rhs = trace_rhs(m as u64, n as u64, k, c_max.unwrap_or_else(|| default_c_max(m as u64, n as u64, k)), prec)?.value;
                    let resid = (avg.clone() - rhs.clone()).abs().to_f64();
                    let delta = if m == n { 1.0 } else { 0.0 };
                    let in_set = (m * n) as f64 <= bound;
                    let avg = avg.to_f64();
                    out.push((k, m, n, avg, rhs.to_f64(), resid, (avg - delta).abs(), in_set));
                }
            }
            Ok(out)
        })
        .collect();
    let (mut worst_rhs, mut worst_delta, mut count) = (0f64, 0f64, 0usize);
    for (k, m, n, avg, rhs, r, d, in_set) in in_order(rows)?.into_iter().flatten() {
        worst_rhs = worst_rhs.max(r);
        if in_set {
            count += 1;
            worst_delta = worst_delta.max(d);
        }
        t.push(vec![k.into(), m.into(), n.into(), avg.into(), rhs.into(), r.into(), d.into(), in_set.into()]);
    }
    let checks = vec![
        Check::le("delta_form", worst_delta, C2_TOL).note(format!("{count} held-out pairs with mn <= k^2/10^4")),
        Check::le("trace_rhs", worst_rhs, C2_TOL).note(format!("held-out pairs m <= n <= {C2_PAIR_MAX}")),
    ];
    Ok((checks, t))
}

/// Series against the two-term oscillatory form on [ν+ν^{0.4}, 3ν].
pub fn criterion3(orders: &[u32], prec: Precision) -> Result<(Vec<Check>, Table)> {
    let mut t = Table::new("bessel_cross_regime", &["nu", "z", "series", "two_term", "difference", "envelope", "nu13_abs_j"]);
    let rows: Vec<Result<Vec<_>>> = orders
        .par_iter()
        .map(|&nu| {
            let nf = nu as f64;
            let (a, b) = (nf + nf.powf(0.4), 3.0 * nf);
            (0..C3_POINTS)
                .map(|j| {
                    let z = a + (b - a) * j as f64 / (C3_POINTS - 1) as f64;
                    let s = bessel_j_series(&Float::with_val(64, nu), &Float::with_val(64, z), prec)?.to_f64();
                    let (v, env) = oscillatory_two_term(&Mpf::new(prec.bits(), nf), &Mpf::new(prec.bits(), z));
                    let env = env.to_f64();
                    Ok((nu, z, s, v.to_f64(), env, s.abs() * nf.cbrt()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect();
    let (mut worst, mut cprime) = (0f64, 0f64);
    for (nu, z, s, v, env, c) in in_order(rows)?.into_iter().flatten() {
        worst = worst.max((s - v).abs() / env);
        cprime = cprime.max(c);
        t.push(vec![nu.into(), z.into(), s.into(), v.into(), (s - v).abs().into(), env.into(), c.into()]);
    }
    let checks = vec![
        Check::le("asymptotic_envelope", worst, 1.0).note("max |series − two-term| / (10 z^4/(z^2−ν^2)^{13/4})"),
        Check::le("uniform_bound", cprime, C3_CPRIME).note("fitted C' = max ν^{1/3}|J_ν(z)|"),
    ];
    Ok((checks, t))
}

fn pooled_slope(groups: &BTreeMap<(usize, usize), Vec<(f64, f64)>>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for pts in groups.values() {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        for (x, y) in pts {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
    }
    num / den
}

fn criterion4(bases: &Bases) -> Result<(Vec<Check>, Table)> {
    let mut t = Table::new("voronoi_residual", &["k", "x", "delta", "cutoff", "form", "sharp", "transform", "residual", "envelope", "tail_estimate"]);
    let mut jobs = Vec::new();
    for (ci, (k, x)) in c4_cells().into_iter().enumerate() {
        for e in C4_DELTA_EXPONENTS {
            jobs.push((ci, k, x, x.powf(e)));
        }
    }
    let cells: Vec<Result<_>> = jobs
        .par_iter()
        .map(|&(ci, k, x, delta)| {
            let b = basis(bases, k)?;
            let p = SmoothingParams::new(k, x, delta)?;
            let env = smoothing_envelope(&p);
            let mut cutoff = p.default_cutoff();
            let mut doublings = 0;
            let transforms = loop {
                let table = WTildeTable::build(p, cutoff)?;
                let v = b.forms.iter().map(|f| Ok(voronoi_transform(f, &table)?)).collect::<Result<Vec<_>>>()?;
                let tail = v.iter().map(|t| t.tail_estimate).fold(0.0, f64::max);
                if tail <= TAIL_REL_TOL * env {
                    break v;
                }
                if doublings == C4_MAX_DOUBLINGS {
                    return Err(anyhow!("k={k} x={x} Δ={delta}: tail estimate {tail:e} above {:e} at cutoff {cutoff}", TAIL_REL_TOL * env));
                }
                cutoff *= 2;
                doublings += 1;
            };
            let mut rows = Vec::new();
            let mut res = Vec::new();
            for (f, v) in b.forms.iter().zip(transforms) {
                let s = sharp_sum(f, x)?.to_f64();
                res.push(s - v.value);
                rows.push((f.index, s, v.value, s - v.value, v.tail_estimate));
            }
            let avg = harmonic_average(b, &res)?;
            Ok((ci, k, x, delta, env, rows, avg, cutoff))
        })
        .collect();
    let mut worst = 0f64;
    let mut per_form: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut averaged: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for (ci, k, x, delta, env, rows, avg, cutoff) in in_order(cells)? {
        for (i, s, tv, r, tail) in rows {
            worst = worst.max(r.abs() / (C4_SAFETY * env));
            per_form.entry((ci, i)).or_default().push((delta.ln(), r.abs().ln()));
            t.push(vec![k.into(), x.into(), delta.into(), cutoff.into(), i.into(), s.into(), tv.into(), r.into(), env.into(), tail.into()]);
        }
        averaged.entry((ci, 0)).or_default().push((delta.ln(), avg.abs().ln()));
        t.push(vec![k.into(), x.into(), delta.into(), cutoff.into(), "average".into(), f64::NAN.into(), f64::NAN.into(), avg.into(), env.into(), f64::NAN.into()]);
    }
    let slope = pooled_slope(&averaged);
    let form_slope = pooled_slope(&per_form);
    let checks = vec![
        Check::le("envelope", worst, 1.0).note("max |S − transform| / (10 x log x/Δ) over forms"),
        Check { name: "slope", value: slope, tolerance: C4_SLOPE.1, pass: (C4_SLOPE.0..=C4_SLOPE.1).contains(&slope), note: format!("harmonic-average residual, cell fixed effects; per-form slope {}", fmt_f64(form_slope)) },
    ];
    Ok((checks, t))
}

fn moments_criteria(bases: &Bases, cfg: &AcceptConfig) -> Result<[(Vec<Check>, Table); 3]> {
    let opts = MomentOptions { series_cutoff: cfg.series_cutoff, delta_rule: DeltaRule::X23K13, epsilon: cfg.epsilon, smoothed: false };
    let reps: Vec<Result<_>> = C5_WEIGHTS
        .par_iter()
        .map(|&k| {
            let b = basis(bases, k)?;
            let x = (k * k) as f64 / 4.0;
            let r = moment_report(b, x, &opts)?;
            let mut xs: Vec<f64> = (0..C7_GRID_POINTS).map(|j| regime_floor(k) * (1.0 + j as f64 / 2f64.sqrt())).collect();
            xs.push(x);
            let mon = hml_core::moments::uniform_bound_monitor(b, &xs)?;
            Ok((r, mon))
        })
        .collect();
    let reps = in_order(reps)?;

    let mut t5 = Table::new("first_moment", &["k", "x", "first", "main_term", "error", "envelope", "normalized_error"]);
    let mut worst = 0f64;
    let mut norm = Vec::new();
    for (r, _) in &reps {
        let env = C5_SAFETY * r.x.sqrt() / (r.k as f64).powf(0.9);
        let ne = r.first_err().abs() / r.x.powf(0.25);
        worst = worst.max(r.first_err().abs() / env);
        norm.push(ne);
        t5.push(vec![r.k.into(), r.x.into(), r.first.into(), r.first_main.into(), r.first_err().into(), env.into(), ne.into()]);
    }
    let decreases = norm.windows(2).filter(|w| w[1] < w[0]).count();
    let c5 = vec![
        Check::le("envelope", worst, 1.0).note("max |⟨S⟩ − main| / (5 x^{1/2}/k^{0.9})"),
        Check::ge("trend", decreases as f64, C5_MIN_DECREASES as f64).note(format!("decreases of |error|/x^{{1/4}} over {} steps", norm.len() - 1)),
    ];

    let mut t6 = Table::new("second_moment", &["k", "x", "second", "main_term", "relative_error", "lower", "upper"]);
    let (mut bracket_bad, mut rel_top) = (0usize, f64::NAN);
    for (r, _) in &reps {
        let rel = r.second_err().abs() / r.x.sqrt();
        let lx = r.x.ln();
        let (lo, hi) = (r.x.sqrt() * (-lx / lx.ln()).exp(), 2.0 * r.x.sqrt());
        if !(lo..=hi).contains(&r.second_main) {
            bracket_bad += 1;
        }
        if r.k == *C5_WEIGHTS.last().unwrap() {
            rel_top = rel;
        }
        t6.push(vec![r.k.into(), r.x.into(), r.second.into(), r.second_main.into(), rel.into(), lo.into(), hi.into()]);
    }
    let c6 = vec![
        Check::le("relative_error", rel_top, C6_TOL).note(format!("|⟨S²⟩ − main|/x^{{1/2}} at k={}", C5_WEIGHTS.last().unwrap())),
        Check::le("main_term_bracket", bracket_bad as f64, 0.0).note("grid points outside [x^{1/2}exp(−log x/log log x), 2x^{1/2}]"),
    ];

    let mut t7 = Table::new("uniform_bound_monitor", &["k", "x", "ratio", "form"]);
    let mut top = 0f64;
    for (r, mon) in &reps {
        for p in mon {
            top = top.max(p.ratio);
            t7.push(vec![r.k.into(), p.x.into(), p.ratio.into(), p.form.into()]);
        }
    }
    let c7 = vec![Check::le("max_ratio", top, C7_CONSTANT).note("max |S(x,f)|/x^{1/3}")];
    Ok([(c5, t5), (c6, t6), (c7, t7)])
}

pub fn criterion8(points: &[(f64, f64)], n: u64, r_max: u32, prec: Precision) -> Result<(Vec<Check>, Table)> {
    let mut t = Table::new("equidistribution", &["x", "kappa", "n", "d_lower", "d_upper", "et_bound", "et_r", "z_count", "z_expected", "omega_min", "omega_floor"]);
    let reps: Vec<Result<_>> = points.par_iter().map(|&(x, kappa)| Ok(equidist_report(x, kappa, n, r_max, prec)?)).collect();
    let floor = omega_floor();
    let (mut et, mut count, mut om) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for r in in_order(reps)? {
        let d = r.discrepancy;
        et = et.max(d.d_lower / r.et_bound);
        count = count.max((r.z_count as f64 - r.z_expected).abs() / d.d_upper);
        let o = r.omega_min_on_z.unwrap_or(f64::INFINITY);
        om = om.min(o);
        t.push(vec![r.x.into(), r.kappa.into(), r.n.into(), d.d_lower.into(), d.d_upper.into(), r.et_bound.into(), r.et_r.into(), r.z_count.into(), r.z_expected.into(), o.into(), floor.into()]);
    }
    let checks = vec![
        Check::le("erdos_turan", et, 1.0).note("max d_lower / ET bound (min over R <= 64)"),
        Check::le("z_count", count, 1.0).note("max |#Z(N) − (N−4)/20| / d_upper"),
        Check::ge("omega_on_z", om, floor).note("min Ω(n,x) over Z(N)"),
    ];
    Ok((checks, t))
}

/// Poisson identity, windowed integrals and the regime bounds at x = k²/4.
pub fn criterion9(k: u32) -> Result<(Vec<Check>, Table)> {
    let mut t = Table::new("offdiag_checks", &["check", "m", "c", "n", "a", "t", "i", "regime", "lhs", "rhs", "residual", "tolerance"]);
    let x = (k * k) as f64 / 4.0;
    let d6 = x.powf(0.6);

    let poisson: Vec<Result<_>> = C9_POISSON_POINTS
        .par_iter()
        .map(|&(c, a, tt)| {
            let p = OffDiagParams { t: tt, ..OffDiagParams::new(k, x, d6, 1, c, 1.0, 0) };
            Ok((c, a, tt, poisson_check(&p, 1, a)?))
        })
        .collect();
    let mut pw = 0f64;
    for (c, a, tt, r) in in_order(poisson)? {
        pw = pw.max(r.residual);
        t.push(vec!["poisson".into(), 1u32.into(), c.into(), 0i64.into(), a.into(), tt.into(), 1u32.into(), "".into(), r.lhs.0.hypot(r.lhs.1).into(), r.rhs.0.hypot(r.rhs.1).into(), r.residual.into(), C9_POISSON_TOL.into()]);
    }

    let (lo, hi) = OffDiagParams::new(k, x, d6, 1, 1, 1.0, 1).support();
    let mut grid = Vec::new();
    for m in [1u64, 2, 3] {
        for c in [1u64, 4, 8] {
            for j in 1..=3 {
                let y = lo * (hi / lo).powf(j as f64 / 4.0);
                let n = (4.0 * PI * ((m as f64) * x).sqrt() / y).round() as i64;
                grid.push(OffDiagParams::new(k, x, d6, m, c, 1.0, n));
            }
        }
    }
    let window: Vec<Result<_>> = grid
        .par_iter()
        .map(|p| {
            let (reg, _, _) = integral_regime(p)?;
            let f1 = dual_integral(p, 1, false)?.value;
            let w1 = dual_integral(p, 1, true)?.value;
            let f2 = if reg == IntegralRegime::BesselSmall { Some(dual_integral(p, 2, false)?.value.norm()) } else { None };
            Ok((*p, reg, f1, w1, f2))
        })
        .collect();
    let (mut ww, mut small, mut small_count, mut wbad, mut wtotal) = (0f64, 0f64, 0usize, 0usize, 0usize);
    for (p, reg, f1, w1, f2) in in_order(window)? {
        let rel = (f1 - w1).norm() / f1.norm();
        ww = ww.max(rel);
        wtotal += 1;
        wbad += usize::from(rel > C9_WINDOW_TOL);
        let rs = format!("{reg:?}");
        t.push(vec!["window".into(), p.m.into(), p.c.into(), p.n.into(), 0u32.into(), p.t.into(), 1u32.into(), rs.clone().into(), f1.norm().into(), w1.norm().into(), rel.into(), C9_WINDOW_TOL.into()]);
        if let Some(f2) = f2 {
            small_count += 1;
            small = small.max(f1.norm()).max(f2);
            for (i, v) in [(1u32, f1.norm()), (2, f2)] {
                t.push(vec!["small_regime".into(), p.m.into(), p.c.into(), p.n.into(), 0u32.into(), p.t.into(), i.into(), rs.clone().into(), v.into(), 0.0.into(), v.into(), C9_SMALL_TOL.into()]);
            }
        }
    }

    let d7 = x.powf(0.7);
    let spots: Vec<Result<_>> = C9_SPOT_POINTS
        .par_iter()
        .map(|&(m, c, n)| {
            let p = OffDiagParams::new(k, x, d7, m, c, 1.0, n);
            let (reg, _, _) = integral_regime(&p)?;
            let b = oscillatory_bound(&p)?;
            let v1 = dual_integral(&p, 1, false)?.value.norm();
            let v2 = dual_integral(&p, 2, false)?.value.norm();
            Ok((m, c, n, reg, b, [v1, v2]))
        })
        .collect();
    let mut sw = 0f64;
    for (m, c, n, reg, b, vs) in in_order(spots)? {
        for (i, v) in vs.iter().enumerate() {
            sw = sw.max(v / (C9_SPOT_SAFETY * b));
            t.push(vec!["oscillatory_bound".into(), m.into(), c.into(), n.into(), 0u32.into(), 1.0.into(), (i as u32 + 1).into(), format!("{reg:?}").into(), (*v).into(), b.into(), (v / b).into(), C9_SPOT_SAFETY.into()]);
        }
    }
    let checks = vec![
        Check::le("poisson", pw, C9_POISSON_TOL),
        Check::le("window", ww, C9_WINDOW_TOL).note(format!("max |full − windowed|/|full|; {wbad} of {wtotal} grid points above tolerance")),
        Check::le("small_regime", small, C9_SMALL_TOL).note(format!("{small_count} grid points entirely below the transition")),
        Check::le("oscillatory_bound", sw, 1.0).note("max |I| / (10 · bound)"),
    ];
    Ok((checks, t))
}

fn wrap(id: u8, name: &'static str, r: Result<(Vec<Check>, Table)>, tables: &mut Vec<Table>) -> CriterionResult {
    match r {
        Ok((checks, t)) => {
            tables.push(t);
            CriterionResult { id, name, checks, error: None }
        }
        Err(e) => CriterionResult { id, name, checks: Vec::new(), error: Some(format!("{e:#}")) },
    }
}

/// Criteria 1 to 9 on prefetched bases, inside whatever thread pool is current.
pub fn run_criteria(bases: &Bases, cfg: &AcceptConfig, progress: bool) -> SuiteOutput {
    let mut tables = Vec::new();
    let mut out = Vec::new();
    let say = |s: &str| {
        if progress {
            eprintln!("accept: {s}");
        }
    };
    say("eigenvalue integrity");
    out.push(wrap(1, "eigenvalue_integrity", criterion1(bases), &mut tables));
    say("trace identity");
    out.push(wrap(2, "trace_identity", criterion2(bases, &C2_WEIGHTS, None, cfg.prec), &mut tables));
    say("bessel cross-regime");
    out.push(wrap(3, "bessel_cross_regime", criterion3(&C3_ORDERS, cfg.prec), &mut tables));
    say("voronoi residual");
    out.push(wrap(4, "voronoi_residual", criterion4(bases), &mut tables));
    say("moments");
    match moments_criteria(bases, cfg) {
        Ok([a, b, c]) => {
            out.push(wrap(5, "first_moment", Ok(a), &mut tables));
            out.push(wrap(6, "second_moment", Ok(b), &mut tables));
            out.push(wrap(7, "uniform_bound_monitor", Ok(c), &mut tables));
        }
        Err(e) => {
            let msg = format!("{e:#}");
            for (id, name) in [(5, "first_moment"), (6, "second_moment"), (7, "uniform_bound_monitor")] {
                out.push(CriterionResult { id, name, checks: Vec::new(), error: Some(msg.clone()) });
            }
        }
    }
    say("equidistribution");
    out.push(wrap(8, "equidistribution", criterion8(&C8_POINTS, C8_N, C8_R_MAX, cfg.prec), &mut tables));
    say("poisson and stationary phase");
    out.push(wrap(9, "poisson_stationary_phase", criterion9(C9_K), &mut tables));
    SuiteOutput { criteria: out, tables }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// The whole suite: criteria 1 to 9 at `cfg.jobs`, repeated at the other of
/// jobs = 1 / jobs = 8 (both when `cfg.jobs` is neither), with criterion 10
/// comparing the rendered outputs byte for byte.
pub fn run_suite(cfg: &AcceptConfig, progress: bool) -> Result<SuiteOutput> {
    let bases = pool(cfg.jobs)?.install(|| prefetch(cfg))?;
    let main = pool(cfg.jobs)?.install(|| run_criteria(&bases, cfg, progress));
    let reference = [main.render(Format::Csv), main.render(Format::Json)];
    let reruns: Vec<usize> = match cfg.jobs {
        1 => vec![8],
        8 => vec![1],
        _ => vec![1, 8],
    };
    let mut mismatched = 0usize;
    let mut compared = 0usize;
    for j in &reruns {
        if progress {
            eprintln!("accept: rerun with jobs={j}");
        }
        let again = pool(*j)?.install(|| run_criteria(&bases, cfg, false));
        for (f, r) in [Format::Csv, Format::Json].into_iter().zip(&reference) {
            let s = again.render(f);
            compared += 1;
            if s.as_bytes() != r.as_bytes() {
                mismatched += 1;
            }
        }
    }
    let mut out = main;
    out.criteria.push(CriterionResult {
        id: 10,
        name: "determinism",
        checks: vec![Check::le("byte_mismatches", mismatched as f64, 0.0).note(format!("{compared} renders compared across jobs {} vs {:?}", cfg.jobs, reruns))],
        error: None,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let mut g = BTreeMap::new();
        for c in 0..3usize {
            let pts: Vec<(f64, f64)> = [2.0f64, 3.0].iter().map(|&d| (d, c as f64 - 1.0 * d)).collect();
            g.insert((c, 0), pts);
        }
        assert!((pooled_slope(&g) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn requirements_cover_moment_sums() {
        let need = required_tables().unwrap();
        assert_eq!(need[&200], 20000);
        assert!(need[&60] >= 3060);
        assert_eq!(need[&12], C1_N);
    }

    #[test]
    fn expected_failures_are_named_checks() {
        let r = CriterionResult { id: 5, name: "first_moment", checks: vec![Check::ge("trend", 1.0, 3.0), Check::le("envelope", 0.1, 1.0)], error: None };
        assert!(!r.pass());
        assert!(r.pass_modulo_expected());
    }
}
