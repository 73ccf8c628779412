//! Sharp-cutoff sums S(x,f) = Σ_{x≤n≤2x} λ_f(n), their harmonic moments and
//! main terms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modforms::Eigenform;
use crate::numeric::{Mpf, Precision, Real};
use crate::petersson::{default_c_max, harmonic_average, trace_rhs, HarmonicBasis};
use crate::voronoi::{big_omega, omega_sq_series, voronoi_transform, SmoothingParams, WTildeTable};

use std::f64::consts::PI;

pub const DEFAULT_SERIES_CUTOFF: u64 = 100_000;
/// ε in every asserted envelope.
pub const EPSILON: f64 = 0.1;

/// Integers n with x ≤ n ≤ 2x, as an inclusive range (empty when lo > hi).
pub fn sharp_range(x: f64) -> (usize, usize) {
    let lo = x.ceil().max(1.0) as usize;
    let hi = (2.0 * x).floor().max(0.0) as usize;
    (lo, hi)
}

/// Σ_{x≤n≤2x} λ_f(n), both endpoints included when integral.
pub fn sharp_sum(f: &Eigenform, x: f64) -> Result<Mpf> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("x = {x}")));
    }
    let (lo, hi) = sharp_range(x);
    let mut s = Mpf::new(f.prec_bits(), 0.0);
    if lo > hi {
        return Ok(s);
    }
    if hi > f.n_max() {
        return Err(Error::TableTooShort { need: hi, have: f.n_max() });
    }
    for n in lo..=hi {
        s = s + f.lambda[n].clone();
    }
    Ok(s)
}

/// k²/(8π²), the lower end of the large-weight range.
pub fn regime_floor(k: u32) -> f64 {
    (k as f64).powi(2) / (8.0 * PI * PI)
}

fn check_regime(k: u32, x: f64, upper_exp: f64) -> Result<()> {
    let lo = regime_floor(k);
    // a few ulps of slack so the grid point x = k²/(8π²) itself is admitted
    if x < lo * (1.0 - 1e-12) {
        return Err(Error::Range(format!("x = {x} below k²/(8π²) = {lo}")));
    }
    let hi = (k as f64).powf(upper_exp);
    if x > hi {
        return Err(Error::Range(format!("x = {x} above k^{upper_exp} = {hi}")));
    }
    Ok(())
}

fn parity(k: u32) -> f64 {
    if (k / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// (−1)^{k/2}·4√(2π)·Ω(1,x)·x^{1/4}.
pub fn first_main_term(k: u32, x: f64) -> Result<f64> {
    let o: f64 = big_omega(1, &x, &((k - 1) as f64))?;
    Ok(parity(k) * 4.0 * (2.0 * PI).sqrt() * o * x.powf(0.25))
}

/// 32π·x^{1/2}·Σ_{n≤N}Ω(n,x)²/n^{3/2}, with its tail bound on the same scale.
pub fn second_main_term(k: u32, x: f64, series_cutoff: u64) -> Result<(f64, f64)> {
    let s = omega_sq_series(x, (k - 1) as f64, series_cutoff)?;
    let c = 32.0 * PI * x.sqrt();
    Ok((c * s.sum, c * s.tail_bound))
}

/// The n = 1 term 32π·x^{1/2}·Ω(1,x)².
pub fn second_main_first_term(k: u32, x: f64) -> Result<f64> {
    let o: f64 = big_omega(1, &x, &((k - 1) as f64))?;
    Ok(32.0 * PI * x.sqrt() * o * o)
}

fn sharp_sums(basis: &HarmonicBasis, x: f64) -> Result<Vec<Mpf>> {
    crate::error::in_order(basis.forms.par_iter().map(|f| sharp_sum(f, x)).collect())
}

fn average_or_zero(basis: &HarmonicBasis, v: &[Mpf]) -> Result<f64> {
    if basis.dim() == 0 {
        return Ok(0.0);
    }
    Ok(harmonic_average(basis, v)?.to_f64())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMoment {
    pub value: f64,
    pub main_term: f64,
}

/// ⟨S(x,f)⟩ and its main term, for k²/(8π²) ≤ x ≤ k⁴.
pub fn first_moment(basis: &HarmonicBasis, x: f64) -> Result<FirstMoment> {
    check_regime(basis.k, x, 4.0)?;
    let s = sharp_sums(basis, x)?;
    Ok(FirstMoment { value: average_or_zero(basis, &s)?, main_term: first_main_term(basis.k, x)? })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    pub value: f64,
    pub main_term: f64,
    /// bound on the part of the Ω-series beyond the cutoff, on the main-term scale
    pub main_tail: f64,
    /// false when x > k^{12/5}
    pub in_regime: bool,
}

/// ⟨S(x,f)²⟩ and 32πx^{1/2}ΣΩ(n,x)²/n^{3/2}; computed above k^{12/5} but flagged.
pub fn second_moment(basis: &HarmonicBasis, x: f64, series_cutoff: u64) -> Result<SecondMoment> {
    check_regime(basis.k, x, 4.0)?;
    let s = sharp_sums(basis, x)?;
    let sq: Vec<Mpf> = s.iter().map(|v| v.sqr()).collect();
    let (main_term, main_tail) = second_main_term(basis.k, x, series_cutoff)?;
    Ok(SecondMoment { value: average_or_zero(basis, &sq)?, main_term, main_tail, in_regime: x <= (basis.k as f64).powf(2.4) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variance {
    pub value: f64,
    pub main_term: f64,
}

/// ⟨S²⟩ − ⟨S⟩²(2 − ⟨1⟩), and the second-moment main term without n = 1.
pub fn variance(basis: &HarmonicBasis, x: f64, series_cutoff: u64) -> Result<Variance> {
    check_regime(basis.k, x, 4.0)?;
    let (main, _) = second_main_term(basis.k, x, series_cutoff)?;
    let main_term = main - second_main_first_term(basis.k, x)?;
    if basis.dim() == 0 {
        return Ok(Variance { value: 0.0, main_term });
    }
    let s = sharp_sums(basis, x)?;
    let sq: Vec<Mpf> = s.iter().map(|v| v.sqr()).collect();
    let ones: Vec<Mpf> = s.iter().map(|v| v.lift(1.0)).collect();
    let m1 = harmonic_average(basis, &s)?;
    let m2 = harmonic_average(basis, &sq)?;
    let one = harmonic_average(basis, &ones)?;
    let value = m2 - m1.sqr() * (one.lift(2.0) - one);
    Ok(Variance { value: value.to_f64(), main_term })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorPoint {
    pub x: f64,
    /// max_f |S(x,f)|/x^{1/3}
    pub ratio: f64,
    /// index of the maximizing form
    pub form: usize,
}

/// max_f |S(x,f)|/x^{1/3} at each grid point.
pub fn uniform_bound_monitor(basis: &HarmonicBasis, xs: &[f64]) -> Result<Vec<MonitorPoint>> {
    xs.iter()
        .map(|&x| {
            check_regime(basis.k, x, f64::INFINITY)?;
            let s = sharp_sums(basis, x)?;
            let mut best = MonitorPoint { x, ratio: 0.0, form: 0 };
            for (i, v) in s.iter().enumerate() {
                let r = v.to_f64().abs() / x.cbrt();
                if r > best.ratio {
                    best = MonitorPoint { x, ratio: r, form: i };
                }
            }
            Ok(best)
        })
        .collect()
}

/// 4π²x²·Σ_{n≤cutoff} w̃(n)², the diagonal part of the smoothed second moment.
pub fn diagonal_term(table: &WTildeTable) -> f64 {
    let x = table.params.x;
    let s: f64 = table.values.iter().rev().map(|w| w * w).sum();
    4.0 * PI * PI * x * x * s
}

/// σ² = ⟨(2πx Σ λ_f(n) w̃(n))²⟩ over the basis.
pub fn smoothed_second_moment(basis: &HarmonicBasis, table: &WTildeTable) -> Result<f64> {
    if basis.dim() == 0 {
        return Ok(0.0);
    }
    let bits = basis.prec().bits();
    let t: Result<Vec<Mpf>> = basis.forms.iter().map(|f| voronoi_transform(f, table).map(|v| Mpf::new(bits, v.value).sqr())).collect();
    Ok(harmonic_average(basis, &t?)?.to_f64())
}

/// ⟨S²⟩ expanded by the trace formula: Σ_{m,n∈[x,2x]} (δ_{mn} + Kloosterman terms).
/// Returns (diagonal count, off-diagonal sum, largest tail bound).
pub fn second_moment_trace_route(k: u32, x: f64, c_max: Option<u64>, prec: Precision) -> Result<(f64, f64, f64)> {
    let (lo, hi) = sharp_range(x);
    if lo > hi {
        return Ok((0.0, 0.0, 0.0));
    }
    let mut pairs = Vec::new();
    for m in lo..=hi {
        for n in m..=hi {
            pairs.push((m as u64, n as u64));
        }
    }
    let vals: Result<Vec<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(m, n)| {
            let cm = c_max.unwrap_or_else(|| default_c_max(m, n, k));
            let t = trace_rhs(m, n, k, cm, prec)?;
            let mut v = t.value.to_f64();
            if m == n {
                v -= 1.0;
            }
            let mult = if m == n { 1.0 } else { 2.0 };
            Ok((mult * v, mult * t.tail_bound))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let mut off = 0.0;
    let mut tail = 0f64;
    for (v, t) in vals? {
        off += v;
        tail += t;
    }
    Ok(((hi - lo + 1) as f64, off, tail))
}

/// How Δ is chosen for the smoothed quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DeltaRule {
    /// Δ = x^{2/3}k^{1/3−ε}
    X23K13,
    /// Δ = x^{1/2}k^{3/5}
    X12K35,
    Explicit(f64),
}

impl DeltaRule {
    pub fn delta(&self, k: u32, x: f64, eps: f64) -> f64 {
        let k = k as f64;
        let d = match *self {
            DeltaRule::X23K13 => x.powf(2.0 / 3.0) * k.powf(1.0 / 3.0 - eps),
            DeltaRule::X12K35 => x.sqrt() * k.powf(0.6),
            DeltaRule::Explicit(d) => d,
        };
        d.max(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub series_cutoff: u64,
    pub delta_rule: DeltaRule,
    pub epsilon: f64,
    /// build the w̃ table and report (D) and σ² − (D)
    pub smoothed: bool,
}

impl Default for MomentOptions {
    fn default() -> Self {
        MomentOptions { series_cutoff: DEFAULT_SERIES_CUTOFF, delta_rule: DeltaRule::X23K13, epsilon: EPSILON, smoothed: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub k: u32,
    pub x: f64,
    pub dim: usize,
    pub first: f64,
    pub first_main: f64,
    pub second: f64,
    pub second_main: f64,
    pub second_main_tail: f64,
    pub in_regime: bool,
    pub variance: f64,
    pub variance_main: f64,
    pub s_over_x13: f64,
    pub delta_used: f64,
    pub diag_term: Option<f64>,
    pub offdiag_estimate: Option<f64>,
    pub prec_bits: u32,
}

impl MomentReport {
    pub fn first_err(&self) -> f64 {
        self.first - self.first_main
    }

    pub fn second_err(&self) -> f64 {
        self.second - self.second_main
    }
}

/// All moment quantities at one (k, x).
pub fn moment_report(basis: &HarmonicBasis, x: f64, opts: &MomentOptions) -> Result<MomentReport> {
    let m1 = first_moment(basis, x)?;
    let m2 = second_moment(basis, x, opts.series_cutoff)?;
    let var = variance(basis, x, opts.series_cutoff)?;
    let mon = uniform_bound_monitor(basis, &[x])?;
    let delta_used = opts.delta_rule.delta(basis.k, x, opts.epsilon);
    let (diag_term, offdiag_estimate) = if opts.smoothed {
        let p = SmoothingParams::new(basis.k, x, delta_used)?;
        let table = WTildeTable::build(p, p.default_cutoff())?;
        let d = diagonal_term(&table);
        let s2 = smoothed_second_moment(basis, &table)?;
        (Some(d), Some(s2 - d))
    } else {
        (None, None)
    };
    Ok(MomentReport {
        k: basis.k,
        x,
        dim: basis.dim(),
        first: m1.value,
        first_main: m1.main_term,
        second: m2.value,
        second_main: m2.main_term,
        second_main_tail: m2.main_tail,
        in_regime: m2.in_regime,
        variance: var.value,
        variance_main: var.main_term,
        s_over_x13: mon[0].ratio,
        delta_used,
        diag_term,
        offdiag_estimate,
        prec_bits: basis.prec().bits(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::hecke_eigenforms;
    use crate::petersson::solve_harmonic_weights;
    use proptest::prelude::*;

    fn basis(k: u32, n_max: usize) -> HarmonicBasis {
        let p = Precision::default();
        solve_harmonic_weights(k, hecke_eigenforms(k, n_max, p).unwrap(), None, p).unwrap()
    }

    #[test]
    fn sharp_sum_examples() {
        let f = &hecke_eigenforms(12, 10, Precision::default()).unwrap()[0];
        // τ(2) = −24
        let want = 1.0 - 24.0 / 2f64.powf(5.5);
        assert!((sharp_sum(f, 1.0).unwrap().to_f64() - want).abs() < 1e-15);
        assert!((want - 0.4696699141100894).abs() < 1e-15);
        let l = |n: usize| f.lambda[n].clone();
        let s = sharp_sum(f, 2.5).unwrap();
        assert!((s - (l(3) + l(4) + l(5))).abs().to_f64() < 1e-35);
        assert_eq!(sharp_sum(f, 0.4).unwrap().to_f64(), 0.0);
        assert!(matches!(sharp_sum(f, 6.0), Err(Error::TableTooShort { need: 12, .. })));
    }

    #[test]
    fn single_form_moments() {
        let b = basis(12, 50);
        let w = b.weights[0].to_f64();
        let s = sharp_sum(&b.forms[0], 20.0).unwrap().to_f64();
        let m1 = first_moment(&b, 20.0).unwrap();
        assert!((m1.value - w * s).abs() < 1e-14);
        let m2 = second_moment(&b, 20.0, 1000).unwrap();
        assert!((m2.value - w * s * s).abs() < 1e-14);
        let v = variance(&b, 20.0, 1000).unwrap();
        assert!((v.value - w * s * s * (1.0 - w).powi(2)).abs() < 1e-14);
        let mon = uniform_bound_monitor(&b, &[regime_floor(12)]).unwrap();
        let s0 = sharp_sum(&b.forms[0], regime_floor(12)).unwrap().to_f64();
        assert_eq!(mon.len(), 1);
        assert!((mon[0].ratio - s0.abs() / regime_floor(12).cbrt()).abs() < 1e-15);
        assert!(uniform_bound_monitor(&b, &[]).unwrap().is_empty());
    }

    #[test]
    fn empty_space() {
        let b = basis(14, 50);
        assert_eq!(b.dim(), 0);
        let m1 = first_moment(&b, 20.0).unwrap();
        assert_eq!(m1.value, 0.0);
        assert!(m1.main_term.is_finite() && m1.main_term != 0.0);
        assert_eq!(second_moment(&b, 20.0, 100).unwrap().value, 0.0);
    }

    #[test]
    fn regime_errors() {
        let b = basis(24, 50);
        assert!(matches!(first_moment(&b, 5.0), Err(Error::Range(_))));
        assert!(matches!(second_moment(&b, 5.0, 10), Err(Error::Range(_))));
        assert!(matches!(uniform_bound_monitor(&b, &[5.0]), Err(Error::Range(_))));
        assert!(first_moment(&b, regime_floor(24)).is_ok());
    }

    #[test]
    fn series_cutoff_doubling() {
        for (k, x) in [(40u32, 400.0), (100, 2500.0)] {
            let (a, ta) = second_main_term(k, x, 5000).unwrap();
            let (b, _) = second_main_term(k, x, 10000).unwrap();
            assert!(b >= a && b - a <= ta);
        }
    }

    #[test]
    fn second_main_two_sided() {
        for k in [24u32, 40, 60, 100] {
            for j in 0..4 {
                let x = regime_floor(k) * (1.0 + j as f64 / 2f64.sqrt());
                let (m, tail) = second_main_term(k, x, 20000).unwrap();
                let lo = x.sqrt() * (-x.ln() / x.ln().ln()).exp();
                assert!(m >= lo && m + tail <= 2.0 * x.sqrt(), "k={k} x={x} m={m}");
                let v = variance(&basis(k, 2 * x as usize + 2), x, 20000).unwrap();
                let d = m - v.main_term - second_main_first_term(k, x).unwrap();
                assert!(d.abs() <= 1e-12 * m);
            }
        }
    }

    #[test]
    fn first_moment_within_envelope() {
        for k in [36u32, 48] {
            let x0 = regime_floor(k);
            let b = basis(k, (2.0 * x0 * 3.2) as usize + 2);
            for j in 0..4 {
                let x = x0 * (1.0 + j as f64 / 2f64.sqrt());
                let m = first_moment(&b, x).unwrap();
                assert!((m.value - m.main_term).abs() <= 5.0 * x.sqrt() / (k as f64).powf(0.9), "k={k} x={x} {m:?}");
                let v = variance(&b, x, 1000).unwrap();
                assert!(v.value >= -1e-10);
            }
        }
    }

    #[test]
    fn trace_route_matches_weights() {
        let k = 24;
        let x0 = regime_floor(k);
        let b = basis(k, 60);
        for j in 0..5 {
            let x = x0 * (1.0 + j as f64 / 2f64.sqrt());
            let direct = second_moment(&b, x, 10).unwrap().value;
            let (d, od, tail) = second_moment_trace_route(k, x, None, Precision::default()).unwrap();
            let (lo, hi) = sharp_range(x);
            assert_eq!(d, (hi - lo + 1) as f64);
            assert!((direct - d - od).abs() <= 1e-10 + tail + b.tail_bound, "x={x} {direct} {d} {od}");
        }
    }

    #[test]
    fn smoothed_split() {
        let b = basis(24, 400);
        let x: f64 = 40.0;
        let opts = MomentOptions { smoothed: true, delta_rule: DeltaRule::Explicit(x.powf(0.6)), ..Default::default() };
        let r = moment_report(&b, x, &opts).unwrap();
        let d = r.diag_term.unwrap();
        let od = r.offdiag_estimate.unwrap();
        assert!(d > 0.0);
        let p = SmoothingParams::new(24, x, x.powf(0.6)).unwrap();
        let table = WTildeTable::build(p, p.default_cutoff()).unwrap();
        assert_eq!(d, diagonal_term(&table));
        assert!((smoothed_second_moment(&b, &table).unwrap() - d - od).abs() < 1e-9 * d);
        assert_eq!(r.delta_used, x.powf(0.6));
    }

    #[test]
    fn delta_rules() {
        let d = DeltaRule::X23K13.delta(40, 400.0, 0.1);
        assert!((d - 400f64.powf(2.0 / 3.0) * 40f64.powf(1.0 / 3.0 - 0.1)).abs() < 1e-9);
        assert!((DeltaRule::X12K35.delta(40, 400.0, 0.1) - 20.0 * 40f64.powf(0.6)).abs() < 1e-9);
        assert_eq!(DeltaRule::Explicit(0.5).delta(40, 400.0, 0.1), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn main_sign_follows_parity(k in 6u32..60, j in 0.0f64..3.0) {
            let k = 2 * k;
            let x = regime_floor(k) * (1.0 + j);
            let o: f64 = big_omega(1, &x, &((k - 1) as f64)).unwrap();
            let m = first_main_term(k, x).unwrap();
            prop_assume!(o.abs() > 1e-12);
            let want = if k % 4 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!((m / o).signum(), want);
        }

        #[test]
        fn sharp_sum_table_extension(x in 0.0f64..40.0, extra in 0usize..30) {
            let p = Precision::default();
            let short = &hecke_eigenforms(12, (2.0 * x) as usize + 2, p).unwrap()[0];
            let long = &hecke_eigenforms(12, (2.0 * x) as usize + 2 + extra, p).unwrap()[0];
            prop_assert_eq!(sharp_sum(short, x).unwrap(), sharp_sum(long, x).unwrap());
            // splitting the range at an interior integer adds up
            let (lo, hi) = sharp_range(x);
            if lo < hi {
                let mid = (lo + hi) / 2;
                let a: Mpf = (lo..=mid).fold(p.zero(), |s, n| s + long.lambda[n].clone());
                let b: Mpf = (mid + 1..=hi).fold(p.zero(), |s, n| s + long.lambda[n].clone());
                prop_assert!(((a + b) - sharp_sum(long, x).unwrap()).abs().to_f64() < 1e-30);
            }
        }

        #[test]
        fn second_moment_nonnegative(j in 0.0f64..4.0) {
            let b = basis(36, 200);
            let x = regime_floor(36) * (1.0 + j);
            prop_assert!(second_moment(&b, x, 100).unwrap().value >= 0.0);
        }
    }
}
