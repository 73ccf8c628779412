//! Bessel J_ν for large order: boosted power series (ground truth), the
//! two-term oscillatory asymptotic, a double-precision integer-order path,
//! the phase ω_ν and the regime split.

pub mod asymptotic;
pub mod fast;
pub mod series;

use rug::Float;
use serde::{Deserialize, Serialize};

pub use asymptotic::{bessel_j_oscillatory, omega, omega_d1, omega_d2, omega_phase, oscillatory_threshold, oscillatory_two_term, EPS0};
pub use fast::jn_f64;
pub use series::{bessel_j_series, bessel_j_series_full, series_boost_bits, SeriesValue, BOOST_CAP_BITS};

use crate::error::{Error, Result};
use crate::numeric::{Mpf, Precision};

/// Exponent δ in the sub-transition threshold z ≤ (ν+1) − (ν+1)^{1/3+δ}.
pub const DELTA: f64 = 0.3;
/// Series is used in the oscillatory range while its boost stays below this.
pub const AFFORDABLE_BOOST_BITS: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselRegime {
    Tiny,
    Subtransition,
    Transition,
    Oscillatory,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeThresholds {
    pub tiny_max: f64,
    pub sub_max: f64,
    pub osc_min: f64,
}

impl RegimeThresholds {
    pub fn for_order(nu: f64) -> Self {
        RegimeThresholds {
            tiny_max: (nu + 1.0) / 4.0,
            sub_max: (nu + 1.0) - (nu + 1.0).powf(1.0 / 3.0 + DELTA),
            osc_min: oscillatory_threshold(nu),
        }
    }
}

pub fn classify(nu: f64, z: f64) -> BesselRegime {
    let t = RegimeThresholds::for_order(nu);
    if z <= t.tiny_max {
        BesselRegime::Tiny
    } else if z <= t.sub_max {
        BesselRegime::Subtransition
    } else if z >= t.osc_min {
        BesselRegime::Oscillatory
    } else {
        BesselRegime::Transition
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselMethod {
    Series,
    Asymptotic,
}

#[derive(Clone, Debug)]
pub struct BesselValue {
    pub value: Mpf,
    pub error_bound: f64,
    pub regime: BesselRegime,
    pub method: BesselMethod,
}

/// Dispatcher: series wherever affordable or required, asymptotic otherwise.
pub fn bessel_j(nu: f64, z: f64, prec: Precision) -> Result<BesselValue> {
    if nu <= 0.0 || z < 0.0 {
        return Err(Error::Domain(format!("bessel_j needs nu > 0, z >= 0 (nu={nu}, z={z})")));
    }
    let regime = classify(nu, z);
    let boost = series_boost_bits(z);
    if regime != BesselRegime::Oscillatory || boost <= AFFORDABLE_BOOST_BITS {
        let s = bessel_j_series_full(&Float::with_val(64, nu), &Float::with_val(64, z), prec, BOOST_CAP_BITS)?;
        return Ok(BesselValue { value: s.value, error_bound: s.error_bound, regime, method: BesselMethod::Series });
    }
    let zm = Mpf::new(prec.bits(), z);
    let num = Mpf::new(prec.bits(), nu);
    let (v, b) = oscillatory_two_term(&num, &zm);
    Ok(BesselValue { value: v, error_bound: b.0.to_f64(), regime, method: BesselMethod::Asymptotic })
}
