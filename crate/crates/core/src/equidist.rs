//! The phase h(n) = ω(4π√(2nx))/(2π) modulo 1: hitting counts, discrepancy,
//! Erdős–Turán and van der Corput bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::omega_phase;
use crate::error::{Error, Result};
use crate::numeric::{Mpf, Precision, Real};

use std::f64::consts::PI;

/// The target window [9/40, 11/40] for {h(n)}.
pub const Z_WINDOW: (f64, f64) = (9.0 / 40.0, 11.0 / 40.0);
/// c = 2^{1/2}(7/4)^{−3/4}·101/100.
pub fn sin_constant() -> f64 {
    2f64.sqrt() * 1.75f64.powf(-0.75) * 1.01
}
/// (8π²)^{−3/4}(7/4)^{−3/4}/100, the lower bound for Ω(n,x) on Z(N).
pub fn omega_floor() -> f64 {
    (8.0 * PI * PI).powf(-0.75) * 1.75f64.powf(-0.75) / 100.0
}

/// Samples of |h^{(p)}| used by `vdc_bound`.
pub const VDC_SAMPLES: usize = 10_000;

/// h(n) = ω_κ(4π√(2nx))/(2π); needs 32π²nx > κ².
pub fn h_value<R: Real>(n: u64, x: &R, kappa: &R) -> Result<R> {
    let nx = x.clone() * x.lift_int(n as i64);
    let pi = x.pi();
    let z = x.lift(4.0) * pi.clone() * (x.lift(2.0) * nx).sqrt();
    Ok(omega_phase(kappa, &z)? / (x.lift(2.0) * pi))
}

/// {h(n)} for n in `lo..=hi`, computed at `prec` and rounded.
pub fn h_fractions(lo: u64, hi: u64, x: f64, kappa: f64, prec: Precision) -> Result<Vec<f64>> {
    let bits = prec.bits();
    (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let h = h_value(n, &Mpf::new(bits, x), &Mpf::new(bits, kappa))?;
            Ok((h.clone() - h.floor()).to_f64())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

fn in_window(u: f64) -> bool {
    u >= Z_WINDOW.0 && u <= Z_WINDOW.1
}

/// Z(N) = {4 ≤ n ≤ N : {h(n)} ∈ [9/40, 11/40]}.
pub fn z_members(n: u64, x: f64, kappa: f64, prec: Precision) -> Result<Vec<u64>> {
    if n < 4 {
        return Err(Error::Domain(format!("N must be >= 4, got {n}")));
    }
    let fr = h_fractions(4, n, x, kappa, prec)?;
    Ok(fr.iter().zip(4..).filter(|(u, _)| in_window(**u)).map(|(_, m)| m).collect())
}

pub fn count_z(n: u64, x: f64, kappa: f64, prec: Precision) -> Result<usize> {
    Ok(z_members(n, x, kappa, prec)?.len())
}

/// Star discrepancy on the count scale: max_i max(i − M·u₍ᵢ₎, M·u₍ᵢ₎ − (i−1)).
pub fn star_discrepancy(points: &[f64]) -> f64 {
    let mut u = points.to_vec();
    u.sort_by(|a, b| a.total_cmp(b));
    let m = u.len() as f64;
    let mut d = 0f64;
    for (i, v) in u.iter().enumerate() {
        let i = i as f64;
        d = d.max(i + 1.0 - m * v).max(m * v - i);
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub d_star: f64,
    pub d_lower: f64,
    pub d_upper: f64,
}

impl Discrepancy {
    pub fn of(points: &[f64]) -> Self {
        let d = star_discrepancy(points);
        Discrepancy { d_star: d, d_lower: d, d_upper: 2.0 * d }
    }
}

/// Bracket [D*, 2D*] for the interval discrepancy of {h(n)}, 4 ≤ n ≤ N.
pub fn discrepancy(n: u64, x: f64, kappa: f64, prec: Precision) -> Result<Discrepancy> {
    if n < 5 {
        return Err(Error::Domain(format!("N must be >= 5, got {n}")));
    }
    Ok(Discrepancy::of(&h_fractions(4, n, x, kappa, prec)?))
}

/// |Σ_{n≤N} e(r·h(n))| for r = 1..=r_max.
pub fn exp_sums(n: u64, r_max: u32, x: f64, kappa: f64, prec: Precision) -> Result<Vec<f64>> {
    let fr = h_fractions(1, n, x, kappa, prec)?;
    Ok((1..=r_max)
        .into_par_iter()
        .map(|r| {
            let (mut c, mut s) = (0.0, 0.0);
            for u in &fr {
                // r·u reduced mod 1 before the trig call
                let t = (r as f64 * u).fract() * 2.0 * PI;
                c += t.cos();
                s += t.sin();
            }
            c.hypot(s)
        })
        .collect())
}

/// N/(R+1) + 3Σ_{r≤R} r^{−1}|Σ_{n≤N} e(r h(n))|.
pub fn erdos_turan_bound(n: u64, r: u32, x: f64, kappa: f64, prec: Precision) -> Result<f64> {
    if r < 1 {
        return Err(Error::Domain("R must be >= 1".into()));
    }
    Ok(erdos_turan_from_sums(n, &exp_sums(n, r, x, kappa, prec)?)[r as usize - 1])
}

/// The bound for every R ≤ sums.len(), from precomputed exponential sums.
pub fn erdos_turan_from_sums(n: u64, sums: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    sums.iter()
        .enumerate()
        .map(|(i, s)| {
            let r = (i + 1) as f64;
            acc += s / r;
            n as f64 / (r + 1.0) + 3.0 * acc
        })
        .collect()
}

/// min over R ≤ r_max of the Erdős–Turán bound, with the minimizing R.
pub fn erdos_turan_min(n: u64, r_max: u32, x: f64, kappa: f64, prec: Precision) -> Result<(f64, u32)> {
    let b = erdos_turan_from_sums(n, &exp_sums(n, r_max, x, kappa, prec)?);
    let mut best = (f64::INFINITY, 0);
    for (i, v) in b.iter().enumerate() {
        if *v < best.0 {
            best = (*v, i as u32 + 1);
        }
    }
    Ok(best)
}

/// h^{(p)}(ξ) for p ≥ 1, from Taylor coefficients of
/// h′(ξ) = (32π²xξ − κ²)^{1/2}/(4πξ).
pub fn h_derivative(p: u32, xi: f64, x: f64, kappa: f64) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("derivative order must be >= 1".into()));
    }
    let a = 32.0 * PI * PI * x;
    let u0 = a * xi - kappa * kappa;
    if u0 <= 0.0 || xi <= 0.0 {
        return Err(Error::Domain(format!("32π²xξ must exceed κ² (ξ = {xi})")));
    }
    let m = p as usize;
    // (u0 + a·t)^{1/2}
    let mut s = vec![0.0; m];
    s[0] = u0.sqrt();
    for j in 1..m {
        let uj = if j == 1 { a } else { 0.0 };
        let conv: f64 = (1..j).map(|i| s[i] * s[j - i]).sum();
        s[j] = (uj - conv) / (2.0 * s[0]);
    }
    // 1/(ξ + t)
    let q: Vec<f64> = (0..m).map(|j| (if j % 2 == 0 { 1.0 } else { -1.0 }) / xi.powi(j as i32 + 1)).collect();
    let g: f64 = (0..m).map(|i| s[i] * q[m - 1 - i]).sum();
    let fact: f64 = (1..m).map(|i| i as f64).product();
    Ok(fact * g / (4.0 * PI))
}

fn refine(f: &dyn Fn(f64) -> f64, xs: &[f64], i: usize, want_max: bool) -> f64 {
    let v = f(xs[i]);
    if i == 0 || i + 1 == xs.len() {
        return v;
    }
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (f0, f1, f2) = (f(x0), v, f(x2));
    let den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0);
    if den == 0.0 {
        return v;
    }
    let vx = x1 - 0.5 * ((x1 - x0).powi(2) * (f1 - f2) - (x1 - x2).powi(2) * (f1 - f0)) / den;
    if !(x0..=x2).contains(&vx) {
        return v;
    }
    let fv = f(vx);
    if want_max {
        v.max(fv)
    } else {
        v.min(fv)
    }
}

/// Extremes (λ, μλ) of |r·h^{(p)}| on [a, b], sampled and refined.
pub fn vdc_lambda_mu(a: f64, b: f64, r: u32, p: u32, x: f64, kappa: f64) -> Result<(f64, f64)> {
    let xs: Vec<f64> = (0..VDC_SAMPLES).map(|i| a + (b - a) * i as f64 / (VDC_SAMPLES - 1) as f64).collect();
    let vals: Result<Vec<f64>> = xs.iter().map(|&t| h_derivative(p, t, x, kappa).map(|d| r as f64 * d)).collect();
    let vals = vals?;
    let pos = vals.iter().all(|v| *v > 0.0);
    let neg = vals.iter().all(|v| *v < 0.0);
    if !pos && !neg {
        return Err(Error::Degenerate(format!("h^({p}) changes sign on [{a}, {b}]")));
    }
    let f = |t: f64| r as f64 * h_derivative(p, t, x, kappa).unwrap_or(f64::NAN).abs();
    let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    let (mut imin, mut imax) = (0, 0);
    for (i, v) in abs.iter().enumerate() {
        if *v < abs[imin] {
            imin = i;
        }
        if *v > abs[imax] {
            imax = i;
        }
    }
    Ok((refine(&f, &xs, imin, false), refine(&f, &xs, imax, true)))
}

/// (b−a)μ^{2/P}λ^{1/(2P−2)} + (b−a)^{1−2/P}λ^{−1/(2P−2)}, P = 2^{p−1}, implied constant 1.
pub fn vdc_bound(a: f64, b: f64, r: u32, p: u32, x: f64, kappa: f64) -> Result<f64> {
    if b - a < 1.0 {
        return Err(Error::Domain(format!("need b − a >= 1, got {}", b - a)));
    }
    if p < 2 {
        return Err(Error::Domain(format!("need p >= 2, got {p}")));
    }
    let (lam, top) = vdc_lambda_mu(a, b, r, p, x, kappa)?;
    let mu = top / lam;
    let pp = 2f64.powi(p as i32 - 1);
    let e = 1.0 / (2.0 * pp - 2.0);
    let len = b - a;
    Ok(len * mu.powf(2.0 / pp) * lam.powf(e) + len.powf(1.0 - 2.0 / pp) * lam.powf(-e))
}

/// |Σ_{a<n≤b} e(r h(n))| by direct summation.
pub fn exp_sum_range(a: f64, b: f64, r: u32, x: f64, kappa: f64, prec: Precision) -> Result<f64> {
    let lo = a.floor() as u64 + 1;
    let hi = b.floor() as u64;
    if lo > hi {
        return Ok(0.0);
    }
    let fr = h_fractions(lo, hi, x, kappa, prec)?;
    let (mut c, mut s) = (0.0, 0.0);
    for u in &fr {
        let t = (r as f64 * u).fract() * 2.0 * PI;
        c += t.cos();
        s += t.sin();
    }
    Ok(c.hypot(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VdcParameters {
    pub p: u32,
    pub n: u64,
    pub r: u64,
}

fn floor_nudged(v: f64) -> f64 {
    // exact integers computed through logs land a hair below
    (v + 1e-12 * v.abs().max(1.0)).floor()
}

/// p = ⌊(log log x + 3)/2⌋, N = ⌊x^{1/(2p−3)}⌋, R = ⌊x^{1/((2p−3)(2P−1))}⌋, P = 2^{p−1}.
pub fn vdc_schedule(x: f64) -> Result<VdcParameters> {
    if !(x >= std::f64::consts::E.exp()) {
        return Err(Error::Domain(format!("x = {x} below e^e")));
    }
    let p = floor_nudged(0.5 * (x.ln().ln() + 3.0)) as u32;
    let pp = 2f64.powi(p as i32 - 1);
    let q = (2 * p - 3) as f64;
    let n = floor_nudged(x.powf(1.0 / q)) as u64;
    let r = floor_nudged(x.powf(1.0 / (q * (2.0 * pp - 1.0)))) as u64;
    Ok(VdcParameters { p, n, r })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistReport {
    pub x: f64,
    pub kappa: f64,
    pub n: u64,
    pub z_count: usize,
    pub z_expected: f64,
    pub discrepancy: Discrepancy,
    pub et_bound: f64,
    pub et_r: u32,
    /// the parameter schedule at this x, when x ≥ e^e
    pub params: Option<VdcParameters>,
    /// min over Z(N) of Ω(n,x), when Z(N) is nonempty
    pub omega_min_on_z: Option<f64>,
}

/// Everything at one (x, κ, N), with the ET bound minimized over R ≤ r_max.
pub fn equidist_report(x: f64, kappa: f64, n: u64, r_max: u32, prec: Precision) -> Result<EquidistReport> {
    let fr = h_fractions(4, n, x, kappa, prec)?;
    let z: Vec<u64> = fr.iter().zip(4..).filter(|(u, _)| in_window(**u)).map(|(_, m)| m).collect();
    let (et_bound, et_r) = erdos_turan_min(n, r_max, x, kappa, prec)?;
    let mut omega_min: Option<f64> = None;
    for &m in &z {
        let o: f64 = crate::voronoi::big_omega(m, &x, &kappa)?;
        omega_min = Some(omega_min.map_or(o, |v| v.min(o)));
    }
    Ok(EquidistReport {
        x,
        kappa,
        n,
        z_count: z.len(),
        z_expected: (n as f64 - 4.0) / 20.0,
        discrepancy: Discrepancy::of(&fr),
        et_bound,
        et_r,
        params: vdc_schedule(x).ok(),
        omega_min_on_z: omega_min,
    })
}
