//! Exact hex-float text: `[-]0x1.hhhp±e`, as C99 `%a` prints normalized doubles.

use rug::{Float, Integer};

use crate::error::{Error, Result};

fn format_parts(neg: bool, m: &Integer, e: i64) -> String {
    let sign = if neg { "-" } else { "" };
    if *m == 0 {
        return format!("{sign}0x0p+0");
    }
    let bl = m.significant_bits() as i64;
    let lead = Integer::from(1) << (bl - 1) as u32;
    let frac_bits = bl - 1;
    let pad = (4 - frac_bits % 4) % 4;
    let frac = Integer::from(m - &lead) << pad as u32;
    let digits = ((frac_bits + pad) / 4) as usize;
    let exp = e + bl - 1;
    let mut hex = if digits == 0 { String::new() } else { format!("{:0>width$}", frac.to_string_radix(16), width = digits) };
    while hex.ends_with('0') {
        hex.pop();
    }
    let es = if exp >= 0 { format!("+{exp}") } else { exp.to_string() };
    if hex.is_empty() {
        format!("{sign}0x1p{es}")
    } else {
        format!("{sign}0x1.{hex}p{es}")
    }
}

pub fn f64_to_hex(v: f64) -> String {
    assert!(v.is_finite(), "hex formatting of non-finite value");
    let f = Float::with_val(53, v);
    float_to_hex(&f)
}

pub fn float_to_hex(v: &Float) -> String {
    assert!(v.is_finite(), "hex formatting of non-finite value");
    if v.is_zero() {
        return if v.is_sign_negative() { "-0x0p+0".into() } else { "0x0p+0".into() };
    }
    let (m, e) = v.to_integer_exp().expect("finite");
    let neg = m < 0;
    format_parts(neg, &m.abs(), e as i64)
}

fn parse_parts(s: &str) -> Result<(bool, Integer, i64)> {
    let bad = || Error::Cache(format!("malformed hex float {s:?}"));
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let rest = rest.strip_prefix("0x").or_else(|| rest.strip_prefix("0X")).ok_or_else(bad)?;
    let (mant, exp) = rest.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac) = mant.split_once('.').unwrap_or((mant, ""));
    let digits = format!("{int_part}{frac}");
    let m = Integer::from_str_radix(&digits, 16).map_err(|_| bad())?;
    Ok((neg, m, exp - 4 * frac.len() as i64))
}

pub fn hex_to_f64(s: &str) -> Result<f64> {
    Ok(hex_to_float(s, 53)?.to_f64())
}

/// Parse at `bits`; exact when the mantissa fits.
pub fn hex_to_float(s: &str, bits: u32) -> Result<Float> {
    let (neg, m, e) = parse_parts(s)?;
    let mut f = Float::with_val(bits.max(m.significant_bits()), &m);
    if e >= 0 {
        f <<= e as u32;
    } else {
        f >>= (-e) as u32;
    }
    let f = Float::with_val(bits, f);
    Ok(if neg { -f } else { f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_doubles() {
        assert_eq!(f64_to_hex(1.0), "0x1p+0");
        assert_eq!(f64_to_hex(-2.5), "-0x1.4p+1");
        assert_eq!(f64_to_hex(std::f64::consts::PI), "0x1.921fb54442d18p+1");
        assert_eq!(f64_to_hex(0.0), "0x0p+0");
        assert_eq!(hex_to_f64("0x1.921fb54442d18p+1").unwrap(), std::f64::consts::PI);
        assert!(hex_to_f64("1.5").is_err());
    }

    #[test]
    fn float_round_trip_high_precision() {
        let v = Float::with_val(200, Float::with_val(200, 2).sqrt() / 7u32);
        let s = float_to_hex(&v);
        let back = hex_to_float(&s, 200).unwrap();
        assert_eq!(back, v);
        let tiny = Float::with_val(128, Float::i_exp(3, -400));
        assert_eq!(hex_to_float(&float_to_hex(&tiny), 128).unwrap(), tiny);
    }

    proptest! {
        #[test]
        fn f64_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back = hex_to_f64(&f64_to_hex(v)).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
