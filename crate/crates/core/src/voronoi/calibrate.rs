//! Envelope constants for the w̃ bounds, fitted once on a fixed grid and frozen
//! in `constants.json`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{w_tilde, w_tilde_ibp, w_tilde_main, SmoothingParams};
use crate::error::{Error, Result};
use crate::numeric::{f64_to_hex, hex_to_f64};

use std::f64::consts::PI;

/// Fitted constants are the observed maximum times this.
pub const SAFETY: f64 = 2.0;

/// |w̃| ≤ C·(nx)^{−3/4}
pub const W_BOUND: &str = "w_tilde_bound";
/// |w̃| ≤ C_A·ξ^{−3} for ξ ≥ 1
pub const DECAY_A3: &str = "w_tilde_decay_a3";
/// |w̃ − ibp form| ≤ C·(nx)^{−5/4}
pub const IBP_REMAINDER: &str = "ibp_remainder";
/// |w̃ − main form| ≤ C₁(nx)^{−5/4} + C₂(nx)^{−1/4}Δ^{−1}
pub const MAIN_C1: &str = "main_form_c1";
pub const MAIN_C2: &str = "main_form_c2";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub ks: Vec<u32>,
    /// x = k²/(8π²)·(1 + j/√2)
    pub x_steps: Vec<u32>,
    /// Δ = x^e
    pub delta_exps: Vec<f64>,
    pub n_max: u64,
    /// ξ values for the decay fit
    pub xis: Vec<f64>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid { ks: vec![24, 40], x_steps: vec![0, 1, 2, 3], delta_exps: vec![0.5, 0.6, 0.7], n_max: 12, xis: vec![1.0, 2.0, 4.0, 8.0, 16.0] }
    }
}

impl CalibrationGrid {
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("grid serializes");
        hex::encode(Sha256::digest(s.as_bytes()))
    }

    pub fn cells(&self) -> Vec<SmoothingParams> {
        let mut out = Vec::new();
        for &k in &self.ks {
            for &j in &self.x_steps {
                let x = (k as f64).powi(2) / (8.0 * PI * PI) * (1.0 + j as f64 / 2f64.sqrt());
                for &e in &self.delta_exps {
                    out.push(SmoothingParams { k, x, delta: x.powf(e).max(1.0) });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConstant {
    pub bound: String,
    pub grid: String,
    pub constant: f64,
    pub constant_hex: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeConstants {
    pub grid: CalibrationGrid,
    pub entries: Vec<EnvelopeConstant>,
}

impl EnvelopeConstants {
    pub fn get(&self, bound: &str) -> Result<f64> {
        let e = self.entries.iter().find(|e| e.bound == bound).ok_or_else(|| Error::Domain(format!("no constant for {bound}")))?;
        hex_to_f64(&e.constant_hex)
    }
}

#[derive(Default)]
struct Maxima {
    w_bound: f64,
    decay: f64,
    ibp: f64,
    c1: f64,
    c2: f64,
}

fn cell_maxima(p: &SmoothingParams, grid: &CalibrationGrid) -> Result<Maxima> {
    let mut m = Maxima::default();
    let kappa = p.kappa();
    for n in 1..=grid.n_max {
        let nx = n as f64 * p.x;
        let w = w_tilde(n, p)?.value;
        m.w_bound = m.w_bound.max(w.abs() * nx.powf(0.75));
        let ibp = w_tilde_ibp(n, p)?.value;
        m.ibp = m.ibp.max((w - ibp).abs() * nx.powf(1.25));
        let r = (w - w_tilde_main(n, p.x, kappa)?).abs();
        m.c1 = m.c1.max(r * nx.powf(1.25) / 2.0);
        m.c2 = m.c2.max(r * nx.powf(0.25) * p.delta / 2.0);
    }
    let scale = (p.k as f64).powi(2) + p.delta.powi(2);
    for &xi in &grid.xis {
        let n = (xi * scale / p.x).ceil() as u64;
        let w = w_tilde(n, p)?.value;
        m.decay = m.decay.max(w.abs() * p.xi(n).powi(3));
    }
    Ok(m)
}

/// Fit every constant on `grid`; deterministic.
pub fn calibrate(grid: &CalibrationGrid) -> Result<EnvelopeConstants> {
    let cells = grid.cells();
    let ms: Result<Vec<Maxima>> = crate::error::in_order(cells.par_iter().map(|p| cell_maxima(p, grid)).collect());
    let mut all = Maxima::default();
    for m in ms? {
        all.w_bound = all.w_bound.max(m.w_bound);
        all.decay = all.decay.max(m.decay);
        all.ibp = all.ibp.max(m.ibp);
        all.c1 = all.c1.max(m.c1);
        all.c2 = all.c2.max(m.c2);
    }
    let h = grid.hash();
    let entry = |bound: &str, v: f64| {
        let c = SAFETY * v;
        EnvelopeConstant { bound: bound.into(), grid: h.clone(), constant: c, constant_hex: f64_to_hex(c) }
    };
    Ok(EnvelopeConstants {
        grid: grid.clone(),
        entries: vec![
            entry(W_BOUND, all.w_bound),
            entry(DECAY_A3, all.decay),
            entry(IBP_REMAINDER, all.ibp),
            entry(MAIN_C1, all.c1),
            entry(MAIN_C2, all.c2),
        ],
    })
}

const FROZEN: &str = include_str!("constants.json");

/// The constants shipped with the crate.
pub fn frozen() -> Result<EnvelopeConstants> {
    Ok(serde_json::from_str(FROZEN)?)
}
