use rug::Float;

use crate::error::{Error, Result};
use crate::numeric::{Mpf, Precision};

/// Default cap on the extra bits the series may ask for.
pub const BOOST_CAP_BITS: u64 = 1 << 16;

/// Guard bits the series adds for cancellation at argument z.
pub fn series_boost_bits(z: f64) -> u64 {
    (z * std::f64::consts::LOG2_E).ceil().max(0.0) as u64 + 64
}

/// Power series value with an absolute error bound.
#[derive(Clone, Debug)]
pub struct SeriesValue {
    pub value: Mpf,
    pub error_bound: f64,
    pub terms: usize,
    pub working_bits: u32,
}

/// J_ν(z) from Σ (-1)^l (z/2)^{ν+2l} / (l! Γ(ν+l+1)), summed at a boosted precision.
pub fn bessel_j_series(nu: &Float, z: &Float, prec: Precision) -> Result<Mpf> {
    Ok(bessel_j_series_full(nu, z, prec, BOOST_CAP_BITS)?.value)
}

pub fn bessel_j_series_full(nu: &Float, z: &Float, prec: Precision, cap: u64) -> Result<SeriesValue> {
    if nu.is_sign_negative() && !nu.is_zero() {
        return Err(Error::Domain("series needs nu >= 0".into()));
    }
    if z.is_sign_negative() && !z.is_zero() {
        return Err(Error::Domain("series needs z >= 0".into()));
    }
    let bits = prec.bits();
    if z.is_zero() {
        let v = if nu.is_zero() { 1.0 } else { 0.0 };
        return Ok(SeriesValue { value: Mpf::new(bits, v), error_bound: 0.0, terms: 1, working_bits: bits });
    }
    let boost = series_boost_bits(z.to_f64());
    if boost > cap {
        return Err(Error::PrecisionExhausted { needed: boost, cap });
    }
    let wp = bits + boost as u32;
    let half = Float::with_val(wp, z / 2u32);
    let q = Float::with_val(wp, half.square_ref());
    let nu_w = Float::with_val(wp, nu);
    // (z/2)^ν / Γ(ν+1), through logs to keep huge ν harmless
    let lg = Float::with_val(wp, &nu_w + 1u32).ln_gamma();
    let log_t0 = Float::with_val(wp, &nu_w * Float::with_val(wp, half.ln_ref())) - lg;
    let mut term = log_t0.exp();
    let mut sum = term.clone();
    let mut max_term = Float::with_val(64, term.abs_ref());
    // stop relative to the boosted precision: the boost already covers the
    // cancellation between the largest term and the result
    let stop_rel = Float::with_val(64, Float::i_exp(1, -(wp as i32)));
    let zf = z.to_f64();
    let mut l: u64 = 0;
    loop {
        l += 1;
        let denom = Float::with_val(wp, &nu_w + l) * l;
        term *= &q;
        term /= &denom;
        term = -term;
        sum += &term;
        let mag = Float::with_val(64, term.abs_ref());
        if mag > max_term {
            max_term = mag.clone();
        }
        // past the peak once (z/2)^2 < l(ν+l)
        let past = (l as f64) * (nu.to_f64() + l as f64) > 0.25 * zf * zf;
        if past && mag <= Float::with_val(64, &max_term * &stop_rel) {
            break;
        }
        if l > 10_000_000 {
            return Err(Error::ResourceCap("series exceeded 1e7 terms".into()));
        }
    }
    let terms = l as usize + 1;
    // rounding in wp bits on every term, plus the geometric tail after the last term
    let round = max_term.to_f64() * (terms as f64) * 2f64.powi(-(wp as i32) + 4);
    let tail = max_term.to_f64() * 2f64.powi(-(wp as i32) + 1);
    let value = Mpf(Float::with_val(bits, &sum));
    Ok(SeriesValue { value, error_bound: round + tail, terms, working_bits: wp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Real;

    fn f(bits: u32, v: f64) -> Float {
        Float::with_val(bits, v)
    }

    #[test]
    fn trivial_points() {
        let p = Precision::default();
        assert_eq!(bessel_j_series(&f(64, 0.0), &f(64, 0.0), p).unwrap().to_f64(), 1.0);
        assert_eq!(bessel_j_series(&f(64, 11.0), &f(64, 0.0), p).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn agrees_with_mpfr_jn() {
        let p = Precision::default();
        for &(n, z) in &[(0i32, 1.0), (1, 5.5), (11, 30.0), (40, 37.5), (99, 150.0), (199, 597.0)] {
            let s = bessel_j_series(&f(64, n as f64), &f(128, z), p).unwrap();
            let r = Float::with_val(256, Float::with_val(256, z).jn(n));
            let d = (Float::with_val(256, &s.0) - &r).abs().to_f64();
            assert!(d <= 1e-35 * r.to_f64().abs().max(1e-3), "n={n} z={z} d={d:e}");
        }
    }

    #[test]
    fn cap_enforced() {
        let r = bessel_j_series_full(&f(64, 3.0), &f(64, 1e5), Precision::default(), 4096);
        assert!(matches!(r, Err(Error::PrecisionExhausted { .. })));
    }
}
