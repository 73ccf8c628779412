//! Parameter grids and Δ rules.

use std::f64::consts::PI;

use anyhow::{anyhow, Result};
use hml_core::moments::DeltaRule;

/// x = k²/(8π²)·(1 + j/√2), j = 0..count.
pub fn x_grid(k: u32, count: usize) -> Vec<f64> {
    let base = (k as f64).powi(2) / (8.0 * PI * PI);
    (0..count).map(|j| base * (1.0 + j as f64 / 2f64.sqrt())).collect()
}

/// `x23k13`, `x12k35` or `explicit:<Δ>`.
pub fn parse_delta_rule(s: &str) -> Result<DeltaRule> {
    match s {
        "x23k13" => Ok(DeltaRule::X23K13),
        "x12k35" => Ok(DeltaRule::X12K35),
        _ => {
            let v = s.strip_prefix("explicit:").ok_or_else(|| anyhow!("unknown delta rule {s:?} (x23k13, x12k35, explicit:<value>)"))?;
            let d: f64 = v.parse().map_err(|_| anyhow!("bad explicit Δ {v:?}"))?;
            if !(d.is_finite() && d >= 1.0) {
                return Err(anyhow!("explicit Δ must be >= 1, got {d}"));
            }
            Ok(DeltaRule::Explicit(d))
        }
    }
}

/// `x,kappa`.
pub fn parse_point(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("point {s:?} is not x,kappa"))?;
    let x: f64 = a.trim().parse().map_err(|_| anyhow!("bad x in {s:?}"))?;
    let kappa: f64 = b.trim().parse().map_err(|_| anyhow!("bad kappa in {s:?}"))?;
    Ok((x, kappa))
}
