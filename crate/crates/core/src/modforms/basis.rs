use rug::Integer;
use serde::{Deserialize, Serialize};

use super::qseries::QSeries;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EisensteinId {
    E4,
    E6,
}

/// σ_r(n) for 1 ≤ n < len by sieve, as u128 (exact for r ≤ 5 and n ≤ ~10^6).
fn divisor_power_sums(r: u32, len: usize) -> Vec<u128> {
    let mut s = vec![0u128; len];
    for d in 1..len {
        let p = (d as u128).pow(r);
        let mut m = d;
        while m < len {
            s[m] += p;
            m += d;
        }
    }
    s
}

pub fn eisenstein(id: EisensteinId, n: usize) -> Result<QSeries> {
    if n == 0 {
        return Err(Error::Domain("series length must be >= 1".into()));
    }
    let (r, c, w): (u32, i64, u32) = match id {
        EisensteinId::E4 => (3, 240, 4),
        EisensteinId::E6 => (5, -504, 6),
    };
    let sig = divisor_power_sums(r, n);
    let mut coeffs = Vec::with_capacity(n);
    coeffs.push(Integer::from(1));
    for s in sig.iter().skip(1) {
        coeffs.push(Integer::from(*s) * c);
    }
    Ok(QSeries::new(w, coeffs))
}

/// Δ = (E4³ − E6²)/1728.
pub fn delta(n: usize) -> Result<QSeries> {
    let e4 = eisenstein(EisensteinId::E4, n)?;
    let e6 = eisenstein(EisensteinId::E6, n)?;
    let d = e4.pow(3)?.sub(&e6.mul(&e6)?)?.div_exact(&Integer::from(1728))?;
    Ok(QSeries::new(12, d.coeffs))
}

/// dim S_k(SL₂(ℤ)) for even k ≥ 0.
pub fn cusp_dim(k: u32) -> usize {
    if k % 2 == 1 || k < 12 {
        return 0;
    }
    let base = (k / 12) as usize;
    if k % 12 == 2 {
        base - 1
    } else {
        base
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub k: u32,
    pub dim: usize,
    pub n_max: usize,
}

/// Echelon basis of S_k: the i-th series has c(j) = δ_ij for 1 ≤ j ≤ dim.
pub fn miller_basis(k: u32, n: usize) -> Result<Vec<QSeries>> {
    if k % 2 == 1 || k < 12 {
        return Err(Error::Domain(format!("weight {k} must be even and >= 12")));
    }
    let d = cusp_dim(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    if n < d + 2 {
        return Err(Error::Precision(format!("need at least {} coefficients for weight {k}", d + 2)));
    }
    let e4 = eisenstein(EisensteinId::E4, n)?;
    let e6 = eisenstein(EisensteinId::E6, n)?;
    let dl = delta(n)?;
    let b = if k.is_multiple_of(4) { 0 } else { 1 };
    // a_i = (k − 12i − 6b)/4, i = 1..d; smallest at i = d
    let a_of = |i: usize| ((k as usize) - 12 * i - 6 * b) / 4;
    let e6b = if b == 1 { e6.clone() } else { QSeries::one(n) };
    let e4_cubed = e4.pow(3)?;
    let mut e4pow = e4.pow(a_of(d) as u32)?;
    let mut dpow = vec![dl.clone()];
    for _ in 1..d {
        let next = dpow.last().unwrap().mul(&dl)?;
        dpow.push(next);
    }
    let mut gens = vec![QSeries::one(0); d];
    for i in (1..=d).rev() {
        let g = dpow[i - 1].mul(&e4pow)?.mul(&e6b)?;
        gens[i - 1] = QSeries::new(k, g.coeffs);
        if i > 1 {
            e4pow = e4pow.mul(&e4_cubed)?;
        }
    }
    // g_i = q^i + O(q^{i+1}); clear entries above the diagonal bottom-up
    for i in (0..d).rev() {
        for j in (i + 1)..d {
            let c = gens[i].coeffs[j + 1].clone();
            if c != 0 {
                let t = gens[j].scale(&c);
                gens[i] = gens[i].sub(&t)?;
            }
        }
    }
    for (i, g) in gens.iter().enumerate() {
        debug_assert_eq!(g.coeffs[i + 1], 1);
    }
    Ok(gens)
}

/// Matrix of T_p on the echelon basis: column i holds (T_p b_i)(1..dim).
pub fn hecke_matrix(k: u32, p: u64, basis: &[QSeries]) -> Result<Vec<Vec<Integer>>> {
    let d = basis.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let need = p as usize * d + 1;
    if basis.iter().any(|b| b.len() < need) {
        return Err(Error::Precision(format!("T_{p} on dim {d} needs {need} coefficients")));
    }
    let pk = Integer::from(p).pow(k - 1);
    let mut m = vec![vec![Integer::new(); d]; d];
    for (i, b) in basis.iter().enumerate() {
        for (j, row) in m.iter_mut().enumerate() {
            let n = (j + 1) as u64;
            let mut v = b.coeffs[(p * n) as usize].clone();
            if n.is_multiple_of(p) {
                v += &pk * &b.coeffs[(n / p) as usize];
            }
            row[i] = v;
        }
    }
    Ok(m)
}

use rug::ops::Pow;
