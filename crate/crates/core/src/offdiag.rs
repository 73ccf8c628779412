//! Off-diagonal apparatus: truncation window g, the sums S₁/S₂, their Poisson
//! duals, the phase F with its stationary point, the dyadic partition of unity
//! and the bound evaluators.
//!
//! Everything here runs in double precision; the oscillatory integrals carry a
//! quadrature error estimate instead.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{jn_f64, omega};
use crate::error::{Error, Result};
use crate::numeric::{integrate_pieces, smooth_step, QuadOptions, Real, SampledPanels};

use std::f64::consts::PI;

/// ε in every k^ε of this module.
pub const EPSILON: f64 = 0.001;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagParams {
    pub k: u32,
    pub x: f64,
    pub delta: f64,
    pub m: u64,
    pub c: u64,
    pub t: f64,
    pub n: i64,
    pub eps: f64,
}

impl OffDiagParams {
    pub fn new(k: u32, x: f64, delta: f64, m: u64, c: u64, t: f64, n: i64) -> Self {
        OffDiagParams { k, x, delta, m, c, t, n, eps: EPSILON }
    }

    pub fn kappa(&self) -> f64 {
        self.k as f64 - 1.0
    }

    pub fn k_eps(&self) -> f64 {
        (self.k as f64).powf(self.eps)
    }

    /// supp g = [k/10, 10Δ²k^ε/x]
    pub fn support(&self) -> (f64, f64) {
        let d = self.delta * self.delta * self.k_eps() / self.x;
        (self.k as f64 / 10.0, 10.0 * d)
    }

    pub fn m_max(&self) -> f64 {
        self.delta * self.delta * self.k_eps() / self.x
    }

    pub fn c_max(&self) -> f64 {
        100.0 * self.delta * self.delta / (self.x * (self.k as f64).powf(1.0 - self.eps))
    }

    /// L = k^ε·max{1, m/(cn)}
    pub fn window_scale(&self) -> f64 {
        let r = if self.n > 0 { self.m as f64 / (self.c as f64 * self.n as f64) } else { f64::INFINITY };
        self.k_eps() * r.max(1.0)
    }

    /// c²xt/m
    fn a2(&self) -> f64 {
        let c = self.c as f64;
        c * c * self.x * self.t / self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k as f64;
        if self.k < 2 || !self.k.is_multiple_of(2) {
            return Err(Error::Domain(format!("k must be even, got {}", self.k)));
        }
        if self.m == 0 || self.c == 0 {
            return Err(Error::Domain("m and c must be positive".into()));
        }
        if !(1.0..=2.0).contains(&self.t) {
            return Err(Error::Domain(format!("t must lie in [1,2], got {}", self.t)));
        }
        let slack = 1.0 + 1e-12;
        if self.x * slack < k * k / (8.0 * PI * PI) {
            return Err(Error::Range(format!("x={} below k²/(8π²)", self.x)));
        }
        if self.delta * slack < self.x.sqrt() {
            return Err(Error::Range(format!("Δ={} below x^(1/2)", self.delta)));
        }
        if self.m as f64 > self.m_max() * slack {
            return Err(Error::Range(format!("m={} above Δ²k^ε/x={}", self.m, self.m_max())));
        }
        Ok(())
    }
}

/// g with log-scale rise over [k/10, k/2] and fall over [2Δ²k^ε/x, 10Δ²k^ε/x].
/// Written as rise·fall so it stays smooth when the plateau is empty.
pub fn g_window(y: f64, p: &OffDiagParams) -> f64 {
    let (lo, hi) = p.support();
    if y <= lo || y >= hi {
        return 0.0;
    }
    let k = p.k as f64;
    let ly = y.ln();
    let rise = smooth_step(&((ly - lo.ln()) / (k / 2.0 / lo).ln()));
    let a = hi / 5.0;
    let fall = smooth_step(&(1.0 - (ly - a.ln()) / 5f64.ln()));
    rise * fall
}

/// (F, F′, F″) at y.
pub fn phase_f(y: f64, p: &OffDiagParams) -> Result<(f64, f64, f64)> {
    let kappa = p.kappa();
    let a2 = p.a2();
    let s = a2 - kappa * kappa / (y * y);
    if !(y > 0.0) || s <= 0.0 {
        return Err(Error::Domain(format!("phase needs c²xty²/m > κ², y={y}")));
    }
    let q = p.c as f64 * p.n as f64 / (4.0 * PI * p.m as f64);
    let f = 0.5 * q * y * y - omega(&kappa, &(a2.sqrt() * y));
    let sq = s.sqrt();
    let f1 = q * y - sq;
    let f2 = q - kappa * kappa / (y * y * y) / sq;
    Ok((f, f1, f2))
}

/// The leading approximation 4π√(mxt)/n and the envelope 10·k^{1+ε}Δ²/x².
pub fn y0_envelope(p: &OffDiagParams) -> (f64, f64) {
    let approx = 4.0 * PI * (p.m as f64 * p.x * p.t).sqrt() / p.n as f64;
    let k = p.k as f64;
    (approx, 10.0 * k.powf(1.0 + p.eps) * p.delta * p.delta / (p.x * p.x))
}

/// Root of F′ in supp g where F′ crosses from negative to positive.
pub fn stationary_point(p: &OffDiagParams) -> Result<f64> {
    if p.n <= 0 {
        return Err(Error::NoRoot(format!("n={} gives no stationary point", p.n)));
    }
    let (lo, hi) = p.support();
    let edge = p.kappa() / p.a2().sqrt();
    let start = lo.max(edge * (1.0 + 1e-9));
    if start >= hi {
        return Err(Error::NoRoot("phase domain misses the support".into()));
    }
    let steps = 256;
    let f1 = |y: f64| phase_f(y, p).map(|v| v.1);
    let mut a = start;
    let mut fa = f1(a)?;
    let mut bracket = None;
    for i in 1..=steps {
        let b = start + (hi - start) * i as f64 / steps as f64;
        let fb = f1(b)?;
        if fa < 0.0 && fb >= 0.0 {
            bracket = Some((a, b));
            break;
        }
        a = b;
        fa = fb;
    }
    let (mut a, mut b) = bracket.ok_or_else(|| Error::NoRoot(format!("F′ keeps one sign on [{start}, {hi}]")))?;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if f1(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-6 * b {
            break;
        }
    }
    let mut y = 0.5 * (a + b);
    for _ in 0..50 {
        let (_, d1, d2) = phase_f(y, p)?;
        let next = (y - d1 / d2).clamp(a, b);
        let done = (next - y).abs() <= 1e-15 * y;
        y = next;
        if done {
            break;
        }
    }
    Ok(y)
}

/// G₁ or G₂ at y.
pub fn g_function(i: u8, y: f64, p: &OffDiagParams) -> Result<f64> {
    let g = g_window(y, p);
    if g == 0.0 {
        return Ok(0.0);
    }
    let kappa = p.kappa();
    let base = p.a2() * y * y - kappa * kappa;
    if base <= 0.0 {
        return Err(Error::Domain(format!("c²xty²/m ≤ κ² at y={y}")));
    }
    let c = p.c as f64;
    let m = p.m as f64;
    let j = jn_f64(p.k - 1, y);
    match i {
        1 => Ok(c.powf(1.5) * m.powf(-0.75) * y * base.powf(-0.75) * g * j),
        2 => Ok(c.powf(3.5) * m.powf(-1.75) * p.x * y.powi(3) * base.powf(-1.75) * g * j),
        _ => Err(Error::Domain(format!("G index must be 1 or 2, got {i}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualValue {
    pub value: Complex64,
    pub error: f64,
}

fn quad_opts() -> QuadOptions {
    QuadOptions { rel_tol: 1e-11, abs_tol: 0.0, max_panels: 1 << 18 }
}

/// ∫ Gᵢ e^{iF} over supp g, or over [y₀−2L, y₀+2L] against b₀ when `windowed`.
pub fn dual_integral(p: &OffDiagParams, i: u8, windowed: bool) -> Result<DualValue> {
    p.validate()?;
    let (lo, hi) = p.support();
    let (a, b, y0) = if windowed {
        let y0 = stationary_point(p)?;
        let l = p.window_scale();
        (lo.max(y0 - 2.0 * l), hi.min(y0 + 2.0 * l), Some((y0, l)))
    } else {
        (lo, hi, stationary_point(p).ok().map(|y| (y, p.window_scale())))
    };
    if a >= b {
        return Ok(DualValue { value: Complex64::new(0.0, 0.0), error: 0.0 });
    }
    let f = |y: &f64| -> Complex64 {
        let y = *y;
        let w = if windowed {
            let (y0, l) = y0.expect("window centre");
            partition_bump(0, &y, &l, &y0)
        } else {
            1.0
        };
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let gi = g_function(i, y, p).unwrap_or(f64::NAN);
        if gi == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let ph = phase_f(y, p).map(|v| v.0).unwrap_or(f64::NAN);
        Complex64::from_polar(w * gi, ph)
    };
    let mut pts = vec![a, b];
    let k = p.k as f64;
    for q in [k / 2.0, hi / 5.0] {
        if q > a && q < b {
            pts.push(q);
        }
    }
    if let Some((y0, l)) = y0 {
        for q in [y0 - 2.0 * l, y0 - l, y0, y0 + l, y0 + 2.0 * l] {
            if q > a && q < b {
                pts.push(q);
            }
        }
    }
    pts.sort_by(|u, v| u.total_cmp(v));
    pts.dedup();
    let freq = [a, b].iter().filter_map(|&y| phase_f(y, p).ok()).map(|v| v.1.abs()).fold(1.0, f64::max);
    let r = integrate_pieces(&f, &pts, freq, &quad_opts())?;
    if !r.value.re.is_finite() || !r.value.im.is_finite() {
        return Err(Error::Domain("integrand left the phase domain".into()));
    }
    Ok(DualValue { value: r.value, error: r.error_estimate })
}

/// Support of b_l^{L,α}.
pub fn partition_support(l: i64, big_l: f64, alpha: f64) -> (f64, f64) {
    if l == 0 {
        return (alpha - 2.0 * big_l, alpha + 2.0 * big_l);
    }
    let j = l.unsigned_abs() as i32;
    let inner = 2f64.powi(j - 1) * big_l;
    let outer = 2f64.powi(j + 1) * big_l;
    if l > 0 {
        (alpha + inner, alpha + outer)
    } else {
        (alpha - outer, alpha - inner)
    }
}

/// b_l^{L,α}(ξ): smooth dyadic partition of unity around α.
pub fn partition_bump<R: Real>(l: i64, xi: &R, big_l: &R, alpha: &R) -> R {
    let zero = xi.lift(0.0);
    let one = xi.lift(1.0);
    // distance on the side that b_l lives on
    let d = if l >= 0 { xi.clone() - alpha.clone() } else { alpha.clone() - xi.clone() };
    if l == 0 {
        let s = d.abs();
        if s >= big_l.lift(2.0) * big_l.clone() {
            return zero;
        }
        if s <= *big_l {
            return one;
        }
        return smooth_step(&(xi.lift(2.0) - s / big_l.clone()));
    }
    let j = l.unsigned_abs() as i32;
    let lo = big_l.clone() * xi.lift(2f64.powi(j - 1));
    let mid = big_l.clone() * xi.lift(2f64.powi(j));
    if d <= lo || d >= mid.clone() * xi.lift(2.0) {
        return zero;
    }
    if d <= mid {
        smooth_step(&(d / lo - xi.lift(1.0)))
    } else {
        smooth_step(&(xi.lift(2.0) - d / mid))
    }
}

/// The summand of S₁ (i=1) or S₂ (i=2) at real u, without the additive character.
pub fn s_summand(i: u8, u: f64, p: &OffDiagParams) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    let c = p.c as f64;
    let arg = 4.0 * PI * (p.m as f64 * u).sqrt() / c;
    let g = g_window(arg, p);
    if g == 0.0 {
        return Ok(0.0);
    }
    let kappa = p.kappa();
    let z = 4.0 * PI * (u * p.x * p.t).sqrt();
    let base = z * z - kappa * kappa;
    if base <= 0.0 {
        return Err(Error::Domain(format!("16π²uxt ≤ κ² at u={u}")));
    }
    let core = omega(&kappa, &z).sin() * g * jn_f64(p.k - 1, arg);
    match i {
        1 => Ok(base.powf(-0.75) * core),
        2 => Ok(p.x * u * base.powf(-1.75) * core),
        _ => Err(Error::Domain(format!("S index must be 1 or 2, got {i}"))),
    }
}

/// Integers u with 4π√(mu)/c in supp g.
pub fn summand_range(p: &OffDiagParams) -> (u64, u64) {
    let (lo, hi) = p.support();
    let s = p.c as f64 / (4.0 * PI);
    let m = p.m as f64;
    let ulo = (lo * s).powi(2) / m;
    let uhi = (hi * s).powi(2) / m;
    (ulo.floor().max(1.0) as u64, uhi.ceil() as u64)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Σ_{(a,c)=1} |Σ_{n≥1} summand(n)·e(an/c)|.
pub fn s_sum_direct(p: &OffDiagParams, i: u8, n_cap: u64) -> Result<f64> {
    let (lo, hi) = summand_range(p);
    if hi > n_cap {
        return Err(Error::ResourceCap(format!("S sum needs n up to {hi}, cap {n_cap}")));
    }
    let terms: Vec<(u64, f64)> = (lo..=hi).map(|n| s_summand(i, n as f64, p).map(|v| (n, v))).collect::<Result<_>>()?;
    let c = p.c;
    let mut total = 0.0;
    for a in 1..=c {
        if gcd(a, c) != 1 {
            continue;
        }
        let mut s = Complex64::new(0.0, 0.0);
        for &(n, v) in &terms {
            let r = ((a * (n % c)) % c) as f64 / c as f64;
            s += Complex64::from_polar(v, 2.0 * PI * r);
        }
        total += s.norm();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub residual: f64,
    /// dual frequencies used on each side of zero
    pub dual_terms: (usize, usize),
    pub quad_error: f64,
}

/// Twisted sum Σ_n φ(n)e(an/c) against its Poisson dual Σ_{l̃≡−a (c)} φ̂(l̃/c),
/// where φ is the S-summand. Past the largest local frequency √(xt/u) of φ the
/// dual sum stops once 8 consecutive transforms fall below 2^{−60} (or below the
/// quadrature noise floor when that is larger).
pub fn poisson_check(p: &OffDiagParams, i: u8, a: u64) -> Result<PoissonCheck> {
    p.validate()?;
    if gcd(a, p.c) != 1 {
        return Err(Error::Domain(format!("a={a} not coprime to c={}", p.c)));
    }
    let c = p.c;
    let (lo, hi) = summand_range(p);
    let mut lhs = Complex64::new(0.0, 0.0);
    for n in lo..=hi {
        let v = s_summand(i, n as f64, p)?;
        let r = ((a * (n % c)) % c) as f64 / c as f64;
        lhs += Complex64::from_polar(v, 2.0 * PI * r);
    }
    // continuous support in u
    let (ylo, yhi) = p.support();
    let s = c as f64 / (4.0 * PI);
    let ulo = (ylo * s).powi(2) / p.m as f64;
    let uhi = (yhi * s).powi(2) / p.m as f64;
    let phi = |u: f64| s_summand(i, u, p).unwrap_or(f64::NAN);
    let local = 2.0 * PI * (p.x * p.t / ulo).sqrt();
    let shift = a as f64 / c as f64;
    let mut j_max: i64 = 64;
    loop {
        let xi_max = j_max as f64 + 1.0;
        let panels = (((uhi - ulo) * (local + 2.0 * PI * xi_max) / 4.0).ceil() as usize).max(8);
        if panels > 1 << 21 {
            return Err(Error::ResourceCap(format!("{panels} panels for the dual transforms")));
        }
        let sp = SampledPanels::new(phi, ulo, uhi, panels);
        if sp.fine.iter().any(|v| !v.2.is_finite()) {
            return Err(Error::Domain("summand left its domain on the support".into()));
        }
        let tol = 2f64.powi(-60).max(1e-12 * sp.l1());
        let j_min = (p.x * p.t / ulo).sqrt().ceil() as i64 + 1;
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut qerr = 0.0;
        let mut used = [0usize; 2];
        let mut done = [false; 2];
        for (side, sign) in [1i64, -1].into_iter().enumerate() {
            let mut quiet = 0;
            let start = if sign > 0 { 0 } else { 1 };
            for j in start..=j_max {
                let xi = (sign * j) as f64 - shift;
                let (v, e) = sp.fourier(2.0 * PI * xi);
                rhs += v;
                qerr += e;
                used[side] = j as usize + 1 - start as usize;
                if j > j_min && v.norm() < tol {
                    quiet += 1;
                    if quiet >= 8 {
                        done[side] = true;
                        break;
                    }
                } else {
                    quiet = 0;
                }
            }
        }
        if done[0] && done[1] {
            let residual = (lhs - rhs).norm() / (lhs.norm() + 2f64.powi(-40));
            return Ok(PoissonCheck { lhs: (lhs.re, lhs.im), rhs: (rhs.re, rhs.im), residual, dual_terms: (used[0], used[1]), quad_error: qerr });
        }
        if j_max >= 1 << 14 {
            return Err(Error::Truncation(format!("dual transforms still above 2^-60 at |l| = {j_max}")));
        }
        j_max *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralRegime {
    /// y₀+2L ≤ k − k^{1/3+ε}
    BesselSmall,
    Transition,
    /// y₀−10L ≥ k + k^{1/3+ε}
    Oscillatory,
}

pub fn integral_regime(p: &OffDiagParams) -> Result<(IntegralRegime, f64, f64)> {
    let y0 = stationary_point(p)?;
    let l = p.window_scale();
    let k = p.k as f64;
    let w = k.powf(1.0 / 3.0 + p.eps);
    let r = if y0 + 2.0 * l <= k - w {
        IntegralRegime::BesselSmall
    } else if y0 - 10.0 * l >= k + w {
        IntegralRegime::Oscillatory
    } else {
        IntegralRegime::Transition
    };
    Ok((r, y0, l))
}

/// x^{−3/4}k^{−5/6+ε} + x^{−5/4}k^{1/6+ε}c^{−1}m^{1/2}
pub fn transition_bound(p: &OffDiagParams) -> f64 {
    let (k, x, e) = (p.k as f64, p.x, p.eps);
    x.powf(-0.75) * k.powf(-5.0 / 6.0 + e) + x.powf(-1.25) * k.powf(1.0 / 6.0 + e) / p.c as f64 * (p.m as f64).sqrt()
}

/// x^{−9/8}k^{−1/4}c^{−1/2}m^{1/8}n^{1/2}D^{−1/4} + x^{−5/8}k^{−9/4}m^{1/8}n²D^{−9/4},
/// D = 4π√(mxt)/k − n.
pub fn oscillatory_bound(p: &OffDiagParams) -> Result<f64> {
    let (k, x) = (p.k as f64, p.x);
    let m = p.m as f64;
    let n = p.n as f64;
    let d = 4.0 * PI * (m * x * p.t).sqrt() / k - n;
    if d <= 0.0 {
        return Err(Error::Domain(format!("n={n} not below 4π√(mxt)/k")));
    }
    Ok(x.powf(-9.0 / 8.0) * k.powf(-0.25) * (p.c as f64).powf(-0.5) * m.powf(0.125) * n.sqrt() * d.powf(-0.25)
        + x.powf(-5.0 / 8.0) * k.powf(-9.0 / 4.0) * m.powf(0.125) * n * n * d.powf(-9.0 / 4.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagBound {
    pub k: u32,
    pub x: f64,
    pub delta: f64,
    /// k^{−8/3}Δ², k^{−3/2+ε}Δ^{3/2}, x^{−1/2}k^{1/6+2ε}Δ, x^{−3/2}k^{−5/6+4ε}Δ³
    pub terms: [f64; 4],
    pub total: f64,
}

pub fn offdiag_bound_report(k: u32, x: f64, delta: f64, eps: f64) -> Result<OffDiagBound> {
    let kf = k as f64;
    let lo = x.sqrt();
    let hi = x.powf(2.0 / 3.0) * kf.powf(1.0 / 3.0 - eps);
    if delta < lo * (1.0 - 1e-12) || delta > hi * (1.0 + 1e-12) {
        return Err(Error::Range(format!("Δ={delta} outside [{lo}, {hi}]")));
    }
    let terms = [
        kf.powf(-8.0 / 3.0) * delta.powi(2),
        kf.powf(-1.5 + eps) * delta.powf(1.5),
        x.powf(-0.5) * kf.powf(1.0 / 6.0 + 2.0 * eps) * delta,
        x.powf(-1.5) * kf.powf(-5.0 / 6.0 + 4.0 * eps) * delta.powi(3),
    ];
    Ok(OffDiagBound { k, x, delta, terms, total: terms.iter().sum() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub check: String,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationRecord {
    pub fn new(check: &str, params: serde_json::Value, lhs: f64, rhs: f64, residual: f64, tolerance: f64) -> Self {
        VerificationRecord { check: check.into(), params, lhs, rhs, residual, tolerance, pass: residual <= tolerance }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Mpf;
    use proptest::prelude::*;

    fn crit_params(m: u64, c: u64, n: i64) -> OffDiagParams {
        let x: f64 = 400.0;
        OffDiagParams::new(40, x, x.powf(0.6), m, c, 1.0, n)
    }

    #[test]
    fn window_examples() {
        // admissible plateau: k/2 ≤ k ≤ 2Δ²k^ε/x
        let x: f64 = 400.0;
        let p = OffDiagParams::new(40, x, x.powf(0.75), 1, 1, 1.0, 1);
        assert_eq!(g_window(40.0, &p), 1.0);
        assert_eq!(g_window(2.0, &p), 0.0);
        let mid = 40.0 / 20f64.sqrt();
        assert!((g_window(mid, &p) - 0.5).abs() < 1e-14);
        let (lo, hi) = p.support();
        assert_eq!(g_window(lo, &p), 0.0);
        assert_eq!(g_window(hi, &p), 0.0);
    }

    #[test]
    fn phase_derivatives_match_differences() {
        let p = crit_params(1, 2, 20);
        for y in [6.0, 12.0, 25.0] {
            let (_, f1, f2) = phase_f(y, &p).unwrap();
            let h = 1e-4;
            let fp = phase_f(y + h, &p).unwrap();
            let fm = phase_f(y - h, &p).unwrap();
            assert!(((fp.0 - fm.0) / (2.0 * h) - f1).abs() < 1e-6 * (1.0 + f1.abs()));
            assert!(((fp.1 - fm.1) / (2.0 * h) - f2).abs() < 1e-6 * (1.0 + f2.abs()));
        }
        // below the phase domain
        let q = crit_params(1, 1, 20);
        assert!(matches!(phase_f(1.0, &q), Err(Error::Domain(_))));
    }

    #[test]
    fn stationary_point_in_envelope() {
        for (m, c, n) in [(1, 1, 10), (1, 2, 20), (2, 3, 30), (3, 1, 40)] {
            let p = crit_params(m, c, n);
            let y0 = stationary_point(&p).unwrap();
            let (_, f1, f2) = phase_f(y0, &p).unwrap();
            assert!(f1.abs() < 1e-10, "F′(y0)={f1}");
            assert!(f2 > 0.0);
            let (approx, env) = y0_envelope(&p);
            assert!((y0 - approx).abs() <= env, "{y0} vs {approx} ± {env}");
        }
    }

    #[test]
    fn stationary_point_tracks_t() {
        let p1 = crit_params(1, 2, 20);
        let p2 = OffDiagParams { t: 2.0, ..p1 };
        let y1 = stationary_point(&p1).unwrap();
        let y2 = stationary_point(&p2).unwrap();
        let (a2, env) = y0_envelope(&p2);
        assert!((y0_envelope(&p1).0 * 2f64.sqrt() - a2).abs() < 1e-12);
        assert!((y2 - a2).abs() <= env);
        assert!(y2 > y1);
    }

    #[test]
    fn large_n_has_no_root() {
        let p = crit_params(1, 1, 1);
        let big = (1000.0 * (p.m as f64 * p.x).sqrt() / p.k as f64).ceil() as i64 + 1;
        let q = OffDiagParams { n: big, ..p };
        assert!(matches!(stationary_point(&q), Err(Error::NoRoot(_))));
    }

    #[test]
    fn f2_one_sign_on_window() {
        for (m, c, n) in [(1, 1, 12), (2, 2, 20), (3, 3, 30)] {
            let p = crit_params(m, c, n);
            let y0 = stationary_point(&p).unwrap();
            let l = p.window_scale();
            let (lo, hi) = p.support();
            for s in 0..=100 {
                let y = (y0 - 2.0 * l + 4.0 * l * s as f64 / 100.0).clamp(lo, hi);
                assert!(phase_f(y, &p).unwrap().2 > 0.0);
            }
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let bits = 128;
        for (l, a) in [(1.0, 0.0), (0.37, 12.5), (8.0, -3.0)] {
            let big_l = Mpf::new(bits, l);
            let alpha = Mpf::new(bits, a);
            for s in 0..1000 {
                let xi = Mpf::new(bits, a + l * (-40.0 + 80.0 * (s as f64 + 0.5) / 1000.0));
                let mut tot = Mpf::new(bits, 0.0);
                for j in -8..=8 {
                    let (u, v) = partition_support(j, l, a);
                    let b = partition_bump(j, &xi, &big_l, &alpha);
                    if xi.to_f64() < u || xi.to_f64() > v {
                        assert_eq!(b.to_f64(), 0.0);
                    }
                    tot = tot + b;
                }
                let err = (tot - Mpf::new(bits, 1.0)).abs().to_f64();
                assert!(err <= 2f64.powi(-(bits as i32) + 16), "{err}");
            }
        }
    }

    #[test]
    fn partition_derivatives_scale() {
        // fitted C_j for |b_l^{(j)}| ≤ C_j 2^{−j|l|}L^{−j}, j = 1, 2
        let mut cs = [0f64; 2];
        for big_l in [0.5, 1.0, 4.0] {
            for l in -5i64..=5 {
                let (u, v) = partition_support(l, big_l, 0.0);
                let scale = 2f64.powi(l.abs() as i32) * big_l;
                let h = 1e-4 * scale;
                for s in 1..400 {
                    let y = u + (v - u) * s as f64 / 400.0;
                    let b = |z: f64| partition_bump(l, &z, &big_l, &0.0);
                    let d1 = (b(y + h) - b(y - h)) / (2.0 * h);
                    let d2 = (b(y + h) - 2.0 * b(y) + b(y - h)) / (h * h);
                    cs[0] = cs[0].max(d1.abs() * scale);
                    cs[1] = cs[1].max(d2.abs() * scale * scale);
                }
            }
        }
        // the scaled derivatives of h are bounded by small absolute constants
        assert!(cs[0] < 5.0 && cs[1] < 50.0, "{cs:?}");
        assert!(cs[0] > 0.5);
    }

    #[test]
    fn s_sum_single_class() {
        let p = crit_params(1, 1, 0);
        let s1 = s_sum_direct(&p, 1, 1 << 20).unwrap();
        let (lo, hi) = summand_range(&p);
        let inner: f64 = (lo..=hi).map(|n| s_summand(1, n as f64, &p).unwrap()).sum();
        assert!((s1 - inner.abs()).abs() <= 1e-15 * inner.abs());
        assert!(s_sum_direct(&p, 2, 1 << 20).unwrap() >= 0.0);
        assert!(matches!(s_sum_direct(&p, 1, 3), Err(Error::ResourceCap(_))));
    }

    /// Independent route: Bessel by its power series at 128 bits, ω in Mpf,
    /// the window rebuilt from the piecewise definition.
    fn brute_s1(p: &OffDiagParams) -> f64 {
        use crate::bessel::bessel_j_series;
        use crate::numeric::Precision;
        use rug::Float;
        let bits = 128;
        let kappa = p.k as f64 - 1.0;
        let ke = (p.k as f64).powf(EPSILON);
        let (lo, hi) = (p.k as f64 / 10.0, 10.0 * p.delta * p.delta * ke / p.x);
        let h = |u: f64| {
            if u <= 0.0 {
                0.0
            } else if u >= 1.0 {
                1.0
            } else {
                let a = (-1.0 / u).exp();
                let b = (-1.0 / (1.0 - u)).exp();
                a / (a + b)
            }
        };
        let g = |y: f64| {
            if y <= lo || y >= hi {
                return 0.0;
            }
            h((y / lo).ln() / 5f64.ln()) * (1.0 - h((y / (hi / 5.0)).ln() / 5f64.ln()))
        };
        let mut tot = 0.0;
        let c = p.c;
        for a in 1..=c {
            if gcd(a, c) != 1 {
                continue;
            }
            let (mut re, mut im) = (0.0, 0.0);
            for n in 1..100_000u64 {
                let y = 4.0 * PI * ((p.m * n) as f64).sqrt() / c as f64;
                if y >= hi {
                    break;
                }
                let gv = g(y);
                if gv == 0.0 {
                    continue;
                }
                let z = Mpf::new(bits, 4.0 * PI * (n as f64 * p.x * p.t).sqrt());
                let nu = Mpf::new(bits, kappa);
                let w = omega(&nu, &z).sin().to_f64();
                let base = z.to_f64().powi(2) - kappa * kappa;
                let j = bessel_j_series(&Float::with_val(bits, kappa), &Float::with_val(bits, y), Precision::new(bits).unwrap()).unwrap().to_f64();
                let v = base.powf(-0.75) * w * gv * j;
                let ang = 2.0 * PI * (a * n) as f64 / c as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            tot += (re * re + im * im).sqrt();
        }
        tot
    }

    #[test]
    fn s_sum_matches_brute_force() {
        let x: f64 = 24.0 * 24.0 / 4.0;
        let p = OffDiagParams::new(24, x, x.powf(0.65), 1, 2, 1.3, 0);
        let fast = s_sum_direct(&p, 1, 1 << 20).unwrap();
        let slow = brute_s1(&p);
        assert!(fast > 0.0);
        assert!((fast - slow).abs() <= 1e-8 * slow, "{fast} vs {slow}");
    }

    #[test]
    fn poisson_identity_holds() {
        for (c, a, t) in [(2, 1, 1.0), (1, 1, 1.0), (2, 1, 1.5), (2, 1, 2.0), (3, 2, 1.0)] {
            let p = OffDiagParams { t, ..crit_params(1, c, 0) };
            let r = poisson_check(&p, 1, a).unwrap();
            assert!(r.residual <= 1e-6, "c={c} t={t}: {r:?}");
        }
        let p = crit_params(1, 2, 0);
        assert!(matches!(poisson_check(&p, 1, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn bound_report_examples() {
        let k = 60u32;
        let kf = k as f64;
        let x = kf.powf(2.2);
        let delta = x.sqrt() * kf.powf(0.6);
        let r = offdiag_bound_report(k, x, delta, EPSILON).unwrap();
        assert!(r.terms.iter().all(|&t| t > 0.0));
        let e = EPSILON;
        let special = [x * kf.powf(-22.0 / 15.0), x.powf(0.75) * kf.powf(-0.6 + e), kf.powf(23.0 / 30.0 + 2.0 * e), kf.powf(29.0 / 30.0 + 4.0 * e)];
        for (a, b) in r.terms.iter().zip(special) {
            assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
        }
        let x = kf.powf(2.4);
        let r = offdiag_bound_report(k, x, x.sqrt() * kf.powf(0.6), EPSILON).unwrap();
        assert!(r.terms[0] <= r.terms[1]);
        assert!(matches!(offdiag_bound_report(k, x, x.powf(0.4), EPSILON), Err(Error::Range(_))));
    }

    #[test]
    fn regime_spot_checks() {
        // whole support below the Bessel transition
        for (m, c, n) in [(1, 1, 13), (2, 4, 18), (3, 8, 22)] {
            let p = crit_params(m, c, n);
            assert_eq!(integral_regime(&p).unwrap().0, IntegralRegime::BesselSmall);
            for i in [1, 2] {
                assert!(dual_integral(&p, i, false).unwrap().value.norm() <= 1e-6);
            }
        }
        let x: f64 = 400.0;
        for (m, c, n) in [(1, 1, 4), (6, 3, 9)] {
            let p = OffDiagParams::new(40, x, x.powf(0.7), m, c, 1.0, n);
            assert_eq!(integral_regime(&p).unwrap().0, IntegralRegime::Oscillatory);
            let b = oscillatory_bound(&p).unwrap();
            assert!(dual_integral(&p, 1, false).unwrap().value.norm() <= 10.0 * b);
        }
    }

    #[test]
    fn window_tightens_with_curvature() {
        // larger cn/m narrows the stationary region relative to the window
        let x: f64 = 400.0;
        let rel = |c: u64, n: i64| {
            let p = OffDiagParams::new(40, x, x.powf(0.7), 1, c, 1.0, n);
            let f = dual_integral(&p, 1, false).unwrap().value;
            let w = dual_integral(&p, 1, true).unwrap().value;
            (f - w).norm() / f.norm()
        };
        assert!(rel(20, 4) < rel(1, 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn window_in_unit_interval(y in 0.0f64..200.0, e in 0.5f64..0.66) {
            let x: f64 = 400.0;
            let p = OffDiagParams::new(40, x, x.powf(e), 1, 1, 1.0, 1);
            let g = g_window(y, &p);
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn s_sums_nonnegative(c in 1u64..5, t in 1.0f64..2.0) {
            let p = OffDiagParams { t, ..crit_params(1, c, 0) };
            prop_assert!(s_sum_direct(&p, 1, 1 << 20).unwrap() >= 0.0);
            prop_assert!(s_sum_direct(&p, 2, 1 << 20).unwrap() >= 0.0);
        }
    }
}
