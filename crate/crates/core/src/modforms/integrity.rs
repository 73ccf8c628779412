//! Consistency checks on an eigenvalue table.

use serde::{Deserialize, Serialize};

use super::eigen::Eigenform;
use super::oracle::one_dim_cusp_form;
use crate::error::Result;
use crate::numeric::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub k: u32,
    pub index: usize,
    pub n_max: usize,
    /// max over n of |λ(n)| − d(n); ≤ 0 when Deligne holds
    pub deligne_excess: f64,
    /// max |λ(m)λ(n) − λ(mn)| over coprime m,n ≥ 2, mn ≤ n_max
    pub mult_residual: f64,
    /// max |λ(p)λ(p^j) − λ(p^{j+1}) − λ(p^{j−1})|
    pub hecke_residual: f64,
    /// exact match against Δ·E_{k−12}, when the space is one-dimensional
    pub exact_match: Option<bool>,
}

fn divisor_counts(n: usize) -> Vec<u32> {
    let mut d = vec![0u32; n + 1];
    for i in 1..=n {
        for j in (i..=n).step_by(i) {
            d[j] += 1;
        }
    }
    d
}

fn primes_upto(n: usize) -> Vec<usize> {
    let mut sieve = vec![true; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if sieve[i] {
            out.push(i);
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn check_integrity(f: &Eigenform) -> Result<IntegrityReport> {
    let n_max = f.n_max();
    let l = &f.lambda;
    let d = divisor_counts(n_max);
    let mut deligne = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let e = l[n].abs() - l[n].lift(d[n] as f64);
        deligne = deligne.max(e.to_f64());
    }
    let mut mult = 0f64;
    for m in 2..=n_max {
        for n in (m + 1)..=(n_max / m) {
            if gcd(m, n) == 1 {
                let r = (l[m].clone() * l[n].clone() - l[m * n].clone()).abs().to_f64();
                mult = mult.max(r);
            }
        }
    }
    let mut hecke = 0f64;
    for p in primes_upto(n_max) {
        let mut prev = 1usize;
        let mut q = p;
        while q * p <= n_max {
            let r = (l[p].clone() * l[q].clone() - l[q * p].clone() - l[prev].clone()).abs().to_f64();
            hecke = hecke.max(r);
            prev = q;
            q *= p;
        }
    }
    let exact_match = match &f.exact {
        Some(a) => {
            let oracle = one_dim_cusp_form(f.k, n_max + 1)?;
            Some(oracle.coeffs[..=n_max] == a[..=n_max])
        }
        None => None,
    };
    Ok(IntegrityReport { k: f.k, index: f.index, n_max, deligne_excess: deligne, mult_residual: mult, hecke_residual: hecke, exact_match })
}
