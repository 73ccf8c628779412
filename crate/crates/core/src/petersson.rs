//! Kloosterman sums, the Petersson trace formula and the harmonic weights ω(f).

use rug::float::Constant;
use rug::Float;

use crate::bessel::bessel_j_series;
use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::modforms::Eigenform;
use crate::numeric::{Mpf, Precision, Real};

fn inverse_mod(a: u64, c: u64) -> Option<u64> {
    let (mut r0, mut r1) = (c as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(c as i128) as u64)
}

/// Multiplicity of each residue r = a*m + a n (mod c) over invertible a.
fn kloosterman_histogram(m: i64, n: i64, c: u64) -> Vec<u64> {
    let mut hist = vec![0u64; c as usize];
    let cm = m.rem_euclid(c as i64) as u128;
    let cn = n.rem_euclid(c as i64) as u128;
    if c == 1 {
        hist[0] = 1;
        return hist;
    }
    for a in 1..c {
        if let Some(inv) = inverse_mod(a, c) {
            let r = (inv as u128 * cm + a as u128 * cn) % c as u128;
            hist[r as usize] += 1;
        }
    }
    hist
}

/// S(m,n;c) = Σ_{(a,c)=1} e((a*m + a n)/c).
pub fn kloosterman(m: i64, n: i64, c: u64, prec: Precision) -> Result<Mpf> {
    if c == 0 {
        return Err(Error::Domain("modulus must be >= 1".into()));
    }
    let bits = prec.bits() + 16;
    let hist = kloosterman_histogram(m, n, c);
    let two_pi_over_c = Float::with_val(bits, Constant::Pi) * 2u32 / c;
    let mut s = Float::with_val(bits, 0);
    for (r, &cnt) in hist.iter().enumerate() {
        if cnt == 0 {
            continue;
        }
        if r == 0 {
            s += cnt;
            continue;
        }
        let ang = Float::with_val(bits, &two_pi_over_c * r as u64);
        s += Float::with_val(bits, ang.cos() * cnt);
    }
    Ok(Mpf(Float::with_val(prec.bits(), s)))
}

/// Double-precision S(m,n;c).
pub fn kloosterman_f64(m: i64, n: i64, c: u64) -> f64 {
    let hist = kloosterman_histogram(m, n, c);
    let mut s = 0.0;
    for (r, &cnt) in hist.iter().enumerate() {
        if cnt != 0 {
            s += cnt as f64 * (2.0 * std::f64::consts::PI * r as f64 / c as f64).cos();
        }
    }
    s
}

#[derive(Clone, Debug)]
pub struct TraceEval {
    pub m: u64,
    pub n: u64,
    pub c_max: u64,
    pub value: Mpf,
    pub tail_bound: f64,
}

/// Smallest c with 4π√(mn)/c ≤ (k−1)/4, plus 20.
pub fn default_c_max(m: u64, n: u64, k: u32) -> u64 {
    let a = 4.0 * std::f64::consts::PI * ((m * n) as f64).sqrt();
    (4.0 * a / (k as f64 - 1.0)).ceil().max(1.0) as u64 + 20
}

/// Bound on Σ_{c>C} 2π·|J_ν(A/c)| from |S| ≤ c and |J_ν(z)| ≤ (z/2)^ν/Γ(ν+1).
fn trace_tail_bound(a: f64, nu: f64, c_max: u64) -> f64 {
    let lg = Float::with_val(64, nu + 1.0).ln_gamma().to_f64();
    let c = c_max as f64;
    let ln = (2.0 * std::f64::consts::PI).ln() + nu * (a / 2.0).ln() - lg + (1.0 - nu) * c.ln() - (nu - 1.0).ln();
    ln.exp()
}

/// δ_{mn} + 2π(−1)^{k/2} Σ_{c≤c_max} c^{−1} S(m,n;c) J_{k−1}(4π√(mn)/c).
pub fn trace_rhs(m: u64, n: u64, k: u32, c_max: u64, prec: Precision) -> Result<TraceEval> {
    if m == 0 || n == 0 {
        return Err(Error::Domain("m and n must be positive".into()));
    }
    if k < 12 || k % 2 == 1 {
        return Err(Error::Domain(format!("weight {k} must be even and >= 12")));
    }
    let wp = prec.bits() + 32;
    let wprec = Precision::new(wp)?;
    let nu = Float::with_val(wp, k - 1);
    let a = Float::with_val(wp, Constant::Pi) * 4u32 * Float::with_val(wp, m * n).sqrt();
    let mut s = Float::with_val(wp, 0);
    for c in 1..=c_max {
        let kl = kloosterman(m as i64, n as i64, c, wprec)?;
        if kl.0.is_zero() {
            continue;
        }
        let z = Float::with_val(wp, &a / c);
        let j = bessel_j_series(&nu, &z, wprec)?;
        s += Float::with_val(wp, kl.0 * j.0) / c;
    }
    s *= Float::with_val(wp, Constant::Pi) * 2u32;
    if (k / 2) % 2 == 1 {
        s = -s;
    }
    if m == n {
        s += 1u32;
    }
    let tail_bound = trace_tail_bound(a.to_f64(), (k - 1) as f64, c_max.max(1));
    Ok(TraceEval { m, n, c_max, value: Mpf(Float::with_val(prec.bits(), s)), tail_bound })
}

/// The eigenbasis of S_k with its harmonic weights.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    pub k: u32,
    pub forms: Vec<Eigenform>,
    pub weights: Vec<Mpf>,
    /// largest tail bound among the right-hand sides used in the solve
    pub tail_bound: f64,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    pub fn prec(&self) -> Precision {
        self.forms.first().and_then(|f| Precision::new(f.prec_bits()).ok()).unwrap_or_default()
    }

    pub fn n_max(&self) -> usize {
        self.forms.iter().map(|f| f.n_max()).min().unwrap_or(usize::MAX)
    }
}

/// Solve Σ_f ω(f) λ_f(n) = trace_rhs(1,n) for n = 1..dim.
/// `c_max = None` uses `default_c_max` per right-hand side.
pub fn solve_harmonic_weights(k: u32, forms: Vec<Eigenform>, c_max: Option<u64>, prec: Precision) -> Result<HarmonicBasis> {
    let d = forms.len();
    if d == 0 {
        return Ok(HarmonicBasis { k, forms, weights: Vec::new(), tail_bound: 0.0 });
    }
    let bits = prec.bits();
    let mut rhs = Vec::with_capacity(d);
    let mut tail = 0f64;
    for n in 1..=d as u64 {
        let cm = c_max.unwrap_or_else(|| default_c_max(1, n, k));
        let t = trace_rhs(1, n, k, cm, prec)?;
        tail = tail.max(t.tail_bound);
        rhs.push(t.value);
    }
    let mut a = Vec::with_capacity(d);
    for n in 1..=d {
        let row: Result<Vec<Mpf>> = forms.iter().map(|f| f.lambda(n).map(|v| v.with_prec(bits))).collect();
        a.push(row?);
    }
    let w = solve(&a, &rhs)?;
    let scale = rhs.iter().map(|b| b.to_f64().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut resid = 0f64;
    for (row, b) in a.iter().zip(&rhs) {
        let mut s = Mpf::new(bits, 0.0);
        for (aij, wj) in row.iter().zip(&w) {
            s = s + aij.clone() * wj.clone();
        }
        resid = resid.max((s - b.clone()).abs().to_f64());
    }
    if resid / scale > 1e-10 {
        return Err(Error::Singular(format!("weight system residual {:e}", resid / scale)));
    }
    Ok(HarmonicBasis { k, forms, weights: w, tail_bound: tail })
}

/// ⟨v⟩ = Σ_f ω(f)·v_f.
pub fn harmonic_average<R: Real>(basis: &HarmonicBasis, values: &[R]) -> Result<R> {
    if values.len() != basis.dim() {
        return Err(Error::LengthMismatch { expected: basis.dim(), got: values.len() });
    }
    let Some(first) = values.first() else {
        return Err(Error::Domain("average over an empty basis".into()));
    };
    let mut s = first.lift(0.0);
    for (w, v) in basis.weights.iter().zip(values) {
        s = s + v.lift_float(&w.0) * v.clone();
    }
    Ok(s)
}

/// ⟨λ_f(m)λ_f(n)⟩.
pub fn average_pair(basis: &HarmonicBasis, m: usize, n: usize) -> Result<Mpf> {
    if basis.dim() == 0 {
        return Ok(basis.prec().zero());
    }
    let vals: Result<Vec<Mpf>> = basis.forms.iter().map(|f| Ok(f.lambda(m)?.clone() * f.lambda(n)?.clone())).collect();
    harmonic_average(basis, &vals?)
}
