//! On-disk eigenvalue cache: one JSON file per weight holding λ(n) and the
//! harmonic weights as hex-float strings.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use hml_core::modforms::{hecke_eigenforms, Eigenform};
use hml_core::numeric::{float_to_hex, hex_to_float};
use hml_core::petersson::{solve_harmonic_weights, HarmonicBasis};
use hml_core::{Mpf, Precision};
use rug::Integer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedForm {
    pub index: usize,
    /// λ(n) for n = 1..=n_max
    pub lambda_hex: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheFile {
    pub k: u32,
    pub n_max: usize,
    pub dim: usize,
    pub forms: Vec<CachedForm>,
    pub prec_bits: u32,
    pub weights_hex: Vec<String>,
    /// None when each right-hand side used its default truncation
    pub c_max: Option<u64>,
    pub tail_bound: f64,
    /// exact a(n) as decimal strings, dimension one only
    pub exact: Option<Vec<String>>,
    #[serde(default)]
    pub sha256: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Built,
    /// an unreadable or mismatched file was replaced
    Rebuilt,
}

impl CacheFile {
    fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.sha256 = String::new();
        let bytes = serde_json::to_vec(&c)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    pub fn from_basis(b: &HarmonicBasis, c_max: Option<u64>) -> Result<Self> {
        let n_max = b.n_max();
        let forms = b
            .forms
            .iter()
            .map(|f| CachedForm { index: f.index, lambda_hex: f.lambda[1..=n_max].iter().map(|v| float_to_hex(&v.0)).collect() })
            .collect();
        let exact = match b.forms.as_slice() {
            [f] => f.exact.as_ref().map(|a| a[..=n_max].iter().map(|v| v.to_string()).collect()),
            _ => None,
        };
        let mut c = CacheFile {
            k: b.k,
            n_max: if b.dim() == 0 { 0 } else { n_max },
            dim: b.dim(),
            forms,
            prec_bits: b.prec().bits(),
            weights_hex: b.weights.iter().map(|w| float_to_hex(&w.0)).collect(),
            c_max,
            tail_bound: b.tail_bound,
            exact,
            sha256: String::new(),
        };
        c.sha256 = c.digest()?;
        Ok(c)
    }

    pub fn to_basis(&self) -> Result<HarmonicBasis> {
        let bits = self.prec_bits;
        let parse = |s: &String| -> Result<Mpf> { Ok(Mpf(hex_to_float(s, bits)?)) };
        let exact: Option<Vec<Integer>> = match &self.exact {
            Some(v) => Some(v.iter().map(|s| s.parse::<Integer>().map_err(|e| anyhow!("exact coefficient {s:?}: {e}"))).collect::<Result<_>>()?),
            None => None,
        };
        let mut forms = Vec::with_capacity(self.forms.len());
        for f in &self.forms {
            if f.lambda_hex.len() != self.n_max {
                return Err(anyhow!("form {} has {} values, expected {}", f.index, f.lambda_hex.len(), self.n_max));
            }
            let mut lambda = vec![Mpf::new(bits, 0.0)];
            for s in &f.lambda_hex {
                lambda.push(parse(s)?);
            }
            forms.push(Eigenform { k: self.k, index: f.index, lambda, exact: exact.clone() });
        }
        let weights = self.weights_hex.iter().map(parse).collect::<Result<Vec<_>>>()?;
        if forms.len() != self.dim || weights.len() != self.dim {
            return Err(anyhow!("dimension mismatch in cache entry for k={}", self.k));
        }
        Ok(HarmonicBasis { k: self.k, forms, weights, tail_bound: self.tail_bound })
    }
}

pub fn cache_path(dir: &Path, k: u32) -> PathBuf {
    dir.join(format!("k{k}.json"))
}

fn load(path: &Path) -> Result<CacheFile> {
    let bytes = std::fs::read(path)?;
    let c: CacheFile = serde_json::from_slice(&bytes).context("parsing cache entry")?;
    if c.digest()? != c.sha256 {
        return Err(anyhow!("checksum mismatch"));
    }
    Ok(c)
}

/// Basis of weight k with λ(n) for n ≤ n_max.  A cached entry is used when
/// its n_max, precision and c_max cover the request.
pub fn get_or_build(dir: &Path, k: u32, n_max: usize, prec: Precision, c_max: Option<u64>) -> Result<(HarmonicBasis, CacheStatus)> {
    let path = cache_path(dir, k);
    let mut status = CacheStatus::Built;
    if path.exists() {
        match load(&path) {
            Ok(c) => {
                if c.c_max == c_max && c.prec_bits >= prec.bits() && (c.n_max >= n_max || c.dim == 0) {
                    return Ok((c.to_basis()?, CacheStatus::Hit));
                }
            }
            Err(e) => {
                eprintln!("warning: cache entry {} unusable ({e:#}); rebuilding", path.display());
                status = CacheStatus::Rebuilt;
            }
        }
    }
    let forms = hecke_eigenforms(k, n_max.max(2), prec)?;
    let basis = solve_harmonic_weights(k, forms, c_max, prec)?;
    let file = CacheFile::from_basis(&basis, c_max)?;
    crate::output::write_atomic(&path, &serde_json::to_string(&file)?)?;
    // hand back what a later hit would return
    Ok((file.to_basis()?, status))
}
