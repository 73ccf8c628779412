//! Panel Gauss-Legendre quadrature (order 16, error from order 32) with
//! frequency-proportional initial panels and local bisection.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rug::Float;

use super::real::{Mpf, Precision, Real};
use crate::error::{Error, Result};

pub const BASE_ORDER: usize = 16;
pub const CHECK_ORDER: usize = 32;

#[derive(Clone, Debug)]
pub struct QuadratureResult<V> {
    pub value: V,
    pub error_estimate: f64,
    pub panels_used: usize,
}

#[derive(Clone, Debug)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl QuadOptions {
    pub fn for_precision(prec: Precision) -> Self {
        QuadOptions { rel_tol: 2f64.powi(-(prec.bits() as i32) + 8), abs_tol: 0.0, max_panels: 1 << 20 }
    }
}

/// Values a quadrature can accumulate.
pub trait QuadValue: Clone + Send + Sync {
    type R: Real;
    fn zero(like: &Self::R) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, w: &Self::R) -> Self;
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    type R = f64;
    fn zero(_: &f64) -> Self {
        0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, w: &f64) -> Self {
        self * w
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    type R = f64;
    fn zero(_: &f64) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn scale(&self, w: &f64) -> Self {
        self * w
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

impl QuadValue for Mpf {
    type R = Mpf;
    fn zero(like: &Mpf) -> Self {
        like.lift(0.0)
    }
    fn add(&self, o: &Self) -> Self {
        self.clone() + o.clone()
    }
    fn sub(&self, o: &Self) -> Self {
        self.clone() - o.clone()
    }
    fn scale(&self, w: &Mpf) -> Self {
        self.clone() * w.clone()
    }
    fn norm(&self) -> f64 {
        self.0.to_f64().abs()
    }
}

/// Nodes and weights on [-1,1].
pub struct GaussRule {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
}

fn rule_cache() -> &'static Mutex<HashMap<(usize, u32), Arc<GaussRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<GaussRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss-Legendre rule of the given order, Newton-refined at `bits` (+32 guard).
pub fn gauss_rule(order: usize, bits: u32) -> Arc<GaussRule> {
    let key = (order, bits.max(64));
    if let Some(r) = rule_cache().lock().unwrap().get(&key) {
        return r.clone();
    }
    let wp = key.1 + 32;
    let n = order;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let eps = Float::with_val(wp, Float::i_exp(1, -(wp as i32) + 4));
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(wp, guess);
        let mut dp = Float::with_val(wp, 0);
        for _ in 0..200 {
            let (p, d) = legendre_with_derivative(n, &x);
            dp = d;
            let dx = Float::with_val(wp, &p / &dp);
            x -= &dx;
            if dx.clone().abs() < eps {
                let (_, d) = legendre_with_derivative(n, &x);
                dp = d;
                break;
            }
        }
        let one_minus = Float::with_val(wp, 1) - Float::with_val(wp, x.clone().square());
        let w = Float::with_val(wp, 2) / (one_minus * Float::with_val(wp, dp.square_ref()));
        nodes.push(x);
        weights.push(w);
    }
    // ascending order of nodes
    nodes.reverse();
    weights.reverse();
    let rule = Arc::new(GaussRule { nodes, weights });
    rule_cache().lock().unwrap().insert(key, rule.clone());
    rule
}

fn legendre_with_derivative(n: usize, x: &Float) -> (Float, Float) {
    let wp = x.prec();
    let mut p0 = Float::with_val(wp, 1);
    let mut p1 = x.clone();
    for j in 2..=n {
        let jf = j as u32;
        let t = Float::with_val(wp, (2 * jf - 1) as f64) * x.clone() * p1.clone() - Float::with_val(wp, jf - 1) * p0;
        p0 = p1;
        p1 = t / jf;
    }
    let x2m1 = Float::with_val(wp, x.square_ref()) - 1u32;
    let d = Float::with_val(wp, n as u32) * (x.clone() * p1.clone() - p0) / x2m1;
    (p1, d)
}

struct Lifted<R> {
    n16: Vec<(R, R)>,
    n32: Vec<(R, R)>,
}

fn lifted<R: Real>(like: &R) -> Lifted<R> {
    let bits = like.prec_bits().max(64);
    let conv = |r: &GaussRule| r.nodes.iter().zip(&r.weights).map(|(x, w)| (like.lift_float(x), like.lift_float(w))).collect();
    Lifted { n16: conv(&gauss_rule(BASE_ORDER, bits)), n32: conv(&gauss_rule(CHECK_ORDER, bits)) }
}

struct Panel<R, V> {
    a: R,
    b: R,
    fine: V,
    err: f64,
    l1: f64,
}

fn eval_panel<V, F>(f: &F, a: R_of<V>, b: R_of<V>, rules: &Lifted<R_of<V>>) -> Panel<R_of<V>, V>
where
    V: QuadValue,
    F: Fn(&V::R) -> V,
{
    let half = (b.clone() - a.clone()) / a.lift(2.0);
    let mid = (a.clone() + b.clone()) / a.lift(2.0);
    let mut coarse = V::zero(&a);
    for (x, w) in &rules.n16 {
        let t = mid.clone() + half.clone() * x.clone();
        coarse = coarse.add(&f(&t).scale(w));
    }
    let mut fine = V::zero(&a);
    let mut l1 = 0.0;
    for (x, w) in &rules.n32 {
        let t = mid.clone() + half.clone() * x.clone();
        let v = f(&t);
        l1 += v.norm() * w.to_f64();
        fine = fine.add(&v.scale(w));
    }
    let coarse = coarse.scale(&half);
    let fine = fine.scale(&half);
    let hf = half.to_f64().abs();
    let err = fine.sub(&coarse).norm();
    Panel { a, b, fine, err, l1: l1 * hf }
}

#[allow(non_camel_case_types)]
type R_of<V> = <V as QuadValue>::R;

/// Integrate `f` over [a,b]. `freq_hint` bounds the phase derivative of the integrand.
pub fn oscillatory_integrate<V, F>(f: F, a: &V::R, b: &V::R, freq_hint: f64, prec: Precision) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(&V::R) -> V,
{
    integrate_with(&f, a, b, freq_hint, &QuadOptions::for_precision(prec))
}

pub fn integrate_with<V, F>(f: &F, a: &V::R, b: &V::R, freq_hint: f64, opts: &QuadOptions) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(&V::R) -> V,
{
    let len = (b.clone() - a.clone()).to_f64();
    if len.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Domain(format!("integration interval has length {len}")));
    }
    let rules = lifted(a);
    let n0 = ((2.0 * (len * freq_hint.max(0.0) / std::f64::consts::PI).ceil()) as usize).max(1);
    if n0 > opts.max_panels {
        return Err(Error::NonConvergence(format!("{n0} initial panels exceed cap {}", opts.max_panels)));
    }
    let step = (b.clone() - a.clone()) / a.lift_int(n0 as i64);
    let mut panels: Vec<Panel<V::R, V>> = (0..n0)
        .map(|i| {
            let lo = a.clone() + step.clone() * a.lift_int(i as i64);
            let hi = if i + 1 == n0 { b.clone() } else { a.clone() + step.clone() * a.lift_int(i as i64 + 1) };
            eval_panel(f, lo, hi, &rules)
        })
        .collect();
    let rel = opts.rel_tol.max(a.quad_rel_floor());
    let mut best = f64::INFINITY;
    let mut stale = 0;
    loop {
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let l1: f64 = panels.iter().map(|p| p.l1).sum();
        let tol = (rel * l1).max(opts.abs_tol);
        if err <= tol || err == 0.0 {
            break;
        }
        if err < 0.5 * best {
            best = err;
            stale = 0;
        } else {
            stale += 1;
            if stale >= 6 {
                return Err(Error::NonConvergence(format!("error {err:e} stagnates above {tol:e} with {} panels", panels.len())));
            }
        }
        if panels.len() * 2 > opts.max_panels {
            return Err(Error::NonConvergence(format!("panel cap {} reached, error {err:e} > {tol:e}", opts.max_panels)));
        }
        let worst = panels.iter().map(|p| p.err).fold(0.0, f64::max);
        let mut next = Vec::with_capacity(panels.len() + 16);
        for p in panels {
            let w = (p.b.clone() - p.a.clone()).to_f64().abs();
            let share = tol * w / len;
            if p.err > share || p.err >= worst {
                let mid = (p.a.clone() + p.b.clone()) / p.a.lift(2.0);
                next.push(eval_panel(f, p.a.clone(), mid.clone(), &rules));
                next.push(eval_panel(f, mid, p.b, &rules));
            } else {
                next.push(p);
            }
        }
        panels = next;
    }
    let mut value = V::zero(a);
    let mut error = 0.0;
    for p in &panels {
        value = value.add(&p.fine);
        error += p.err;
    }
    Ok(QuadratureResult { value, error_estimate: error, panels_used: panels.len() })
}

/// Integrate over consecutive pieces [p0,p1], [p1,p2], ... and add up.
pub fn integrate_pieces<V, F>(f: &F, points: &[V::R], freq_hint: f64, opts: &QuadOptions) -> Result<QuadratureResult<V>>
where
    V: QuadValue,
    F: Fn(&V::R) -> V,
{
    if points.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    let mut value = V::zero(&points[0]);
    let mut error = 0.0;
    let mut panels = 0;
    for w in points.windows(2) {
        if (w[1].clone() - w[0].clone()).to_f64() <= 0.0 {
            continue;
        }
        let r = integrate_with(f, &w[0], &w[1], freq_hint, opts)?;
        value = value.add(&r.value);
        error += r.error_estimate;
        panels += r.panels_used;
    }
    Ok(QuadratureResult { value, error_estimate: error, panels_used: panels.max(1) })
}

/// Fixed uniform panel grid for many transforms of one sampled function:
/// stores samples at order-16 and order-32 nodes once.
pub struct SampledPanels {
    pub a: f64,
    pub b: f64,
    pub panels: usize,
    /// (node, weight*half, sample) for the base rule
    pub coarse: Vec<(f64, f64, f64)>,
    pub fine: Vec<(f64, f64, f64)>,
}

impl SampledPanels {
    pub fn new<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> Self {
        let r16 = gauss_rule(BASE_ORDER, 64);
        let r32 = gauss_rule(CHECK_ORDER, 64);
        let h = (b - a) / panels as f64;
        let mut coarse = Vec::with_capacity(panels * BASE_ORDER);
        let mut fine = Vec::with_capacity(panels * CHECK_ORDER);
        for i in 0..panels {
            let lo = a + h * i as f64;
            let mid = lo + 0.5 * h;
            for (x, w) in r16.nodes.iter().zip(&r16.weights) {
                let t = mid + 0.5 * h * x.to_f64();
                coarse.push((t, 0.5 * h * w.to_f64(), f(t)));
            }
            for (x, w) in r32.nodes.iter().zip(&r32.weights) {
                let t = mid + 0.5 * h * x.to_f64();
                fine.push((t, 0.5 * h * w.to_f64(), f(t)));
            }
        }
        SampledPanels { a, b, panels, coarse, fine }
    }

    /// ∫ f(u) e^{-i xi u} du with |fine - coarse| as the error estimate.
    pub fn fourier(&self, xi: f64) -> (Complex64, f64) {
        let acc = |pts: &[(f64, f64, f64)]| {
            let mut s = Complex64::new(0.0, 0.0);
            for &(t, w, v) in pts {
                let (sn, cs) = (xi * t).sin_cos();
                s += Complex64::new(cs, -sn) * (w * v);
            }
            s
        };
        let fine = acc(&self.fine);
        let coarse = acc(&self.coarse);
        (fine, (fine - coarse).norm())
    }

    pub fn l1(&self) -> f64 {
        self.fine.iter().map(|&(_, w, v)| w * v.abs()).sum()
    }
}
