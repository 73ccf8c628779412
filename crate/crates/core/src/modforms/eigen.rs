use rayon::prelude::*;
use rug::{Float, Integer};

use super::basis::{cusp_dim, hecke_matrix, miller_basis};
use crate::error::{Error, Result};
use crate::linalg::{charpoly, eigenvector, real_roots};
use crate::numeric::{Mpf, Precision, Real};

/// A normalized Hecke eigenform with λ(n) for 1 ≤ n ≤ n_max.
#[derive(Clone, Debug)]
pub struct Eigenform {
    pub k: u32,
    /// position in the ascending-λ(2) order
    pub index: usize,
    /// lambda[n] = λ(n); lambda[0] is unused and zero
    pub lambda: Vec<Mpf>,
    /// a(n) exactly, kept when dim S_k = 1
    pub exact: Option<Vec<Integer>>,
}

impl Eigenform {
    pub fn n_max(&self) -> usize {
        self.lambda.len().saturating_sub(1)
    }

    pub fn lambda(&self, n: usize) -> Result<&Mpf> {
        self.lambda.get(n).filter(|_| n >= 1).ok_or(Error::TableTooShort { need: n, have: self.n_max() })
    }

    pub fn prec_bits(&self) -> u32 {
        self.lambda.get(1).map(|x| x.prec_bits()).unwrap_or(Precision::DEFAULT_BITS)
    }
}

/// n^{−(k−1)/2} for n ≤ n_max at `bits`.
fn normalizers(k: u32, n_max: usize, bits: u32) -> Vec<Float> {
    let e = Float::with_val(bits, k - 1) / 2u32;
    (0..=n_max)
        .map(|n| {
            if n == 0 {
                Float::with_val(bits, 0)
            } else {
                let ln = Float::with_val(bits, n as u32).ln();
                Float::with_val(bits, -Float::with_val(bits, &e * &ln)).exp()
            }
        })
        .collect()
}

/// All eigenforms of S_k with λ(n), n ≤ n_max, sorted ascending by λ(2).
pub fn hecke_eigenforms(k: u32, n_max: usize, prec: Precision) -> Result<Vec<Eigenform>> {
    if k % 2 == 1 || k < 12 {
        return Err(Error::Domain(format!("weight {k} must be even and >= 12")));
    }
    if n_max < 2 {
        return Err(Error::Domain("n_max must be >= 2".into()));
    }
    let d = cusp_dim(k);
    if d == 0 {
        return Ok(Vec::new());
    }
    let len = n_max.max(2 * d).max(d + 1) + 1;
    let basis = miller_basis(k, len)?;
    let bits = prec.bits();
    let nb = bits + 32;
    let norm = normalizers(k, n_max, nb);
    let finish = |a: &dyn Fn(usize) -> Float| -> Vec<Mpf> {
        (0..=n_max)
            .map(|n| if n == 0 { Mpf::new(bits, 0.0) } else { Mpf(Float::with_val(bits, Float::with_val(nb, a(n)) * &norm[n])) })
            .collect()
    };
    if d == 1 {
        let a = basis[0].coeffs[..=n_max].to_vec();
        let lambda = finish(&|n| Float::with_val(nb, &a[n]));
        return Ok(vec![Eigenform { k, index: 0, lambda, exact: Some(a) }]);
    }
    let t2 = hecke_matrix(k, 2, &basis)?;
    let cp = charpoly(&t2);
    let max_bits = basis.iter().map(|b| b.max_bits()).max().unwrap_or(0);
    let wp = bits + max_bits + 64;
    let roots = real_roots(&cp, wp)?;
    // distinct T2 eigenvalues on the λ scale
    let scale = Float::with_val(64, 2u32).pow(Float::with_val(64, k - 1) / 2u32);
    let threshold = 2f64.powi(-(bits as i32) / 2);
    let mut gap = f64::INFINITY;
    for w in roots.windows(2) {
        let g = Float::with_val(64, &w[1] - &w[0]) / &scale;
        gap = gap.min(g.to_f64().abs());
    }
    if gap < threshold {
        return Err(Error::Clustering { gap, threshold });
    }
    let forms: Result<Vec<Eigenform>> = roots
        .par_iter()
        .enumerate()
        .map(|(index, theta)| {
            let v = eigenvector(&t2, theta)?;
            let a = |n: usize| {
                let mut s = Float::with_val(wp, 0);
                for (vi, b) in v.iter().zip(&basis) {
                    let c = &b.coeffs[n];
                    if *c != 0 {
                        s += Float::with_val(wp, vi * c);
                    }
                }
                s
            };
            Ok(Eigenform { k, index, lambda: finish(&a), exact: None })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    forms
}

use rug::ops::Pow;

#[cfg(test)]
mod tests {
    use super::*;

    fn divisors(n: usize) -> usize {
        (1..=n).filter(|d| n.is_multiple_of(*d)).count()
    }

    #[test]
    fn delta_lambda_two() {
        let f = hecke_eigenforms(12, 3, Precision::default()).unwrap();
        assert_eq!(f.len(), 1);
        let want = -24.0 / 2f64.powf(5.5);
        assert!((f[0].lambda(2).unwrap().to_f64() - want).abs() < 1e-15);
        assert!((f[0].lambda(2).unwrap().to_f64() + 0.5303300858899106).abs() < 1e-15);
        assert_eq!(f[0].lambda(1).unwrap().to_f64(), 1.0);
        assert!(hecke_eigenforms(14, 5, Precision::default()).unwrap().is_empty());
    }

    #[test]
    fn weight_24_trace_and_determinant() {
        let prec = Precision::default();
        let f = hecke_eigenforms(24, 2, prec).unwrap();
        assert_eq!(f.len(), 2);
        let basis = miller_basis(24, 5).unwrap();
        let t2 = hecke_matrix(24, 2, &basis).unwrap();
        let tr = Integer::from(&t2[0][0] + &t2[1][1]);
        let det = Integer::from(&t2[0][0] * &t2[1][1]) - Integer::from(&t2[0][1] * &t2[1][0]);
        // a(2) = λ(2)·2^{23/2}
        let s = Float::with_val(256, 2u32).pow(Float::with_val(256, 23) / 2u32);
        let a: Vec<Float> = f.iter().map(|e| Float::with_val(256, &e.lambda[2].0) * &s).collect();
        let sum = Float::with_val(256, &a[0] + &a[1]);
        let prod = Float::with_val(256, &a[0] * &a[1]);
        assert!((sum - &tr).abs().to_f64() <= 1e-25 * tr.to_f64().abs());
        assert!((prod - &det).abs().to_f64() <= 1e-25 * det.to_f64().abs());
        // a(2) = 540 ± 12·√144169
        assert_eq!(tr, 1080);
        assert_eq!(det, -20468736i64);
        assert!(f[0].lambda[2] < f[1].lambda[2]);
        for e in &f {
            assert_eq!(e.lambda[1].to_f64(), 1.0);
        }
    }

    #[test]
    fn hecke_relations_weight_36() {
        let prec = Precision::default();
        let forms = hecke_eigenforms(36, 400, prec).unwrap();
        assert_eq!(forms.len(), 3);
        let tol = prec.half_tol();
        for f in &forms {
            let l = |n: usize| f.lambda[n].clone();
            for m in 1..=20usize {
                for n in 1..=20usize {
                    if gcd(m, n) == 1 && m * n <= 400 {
                        let r = (l(m) * l(n) - l(m * n)).abs().to_f64();
                        assert!(r <= tol, "m={m} n={n}");
                    }
                }
            }
            for p in [2usize, 3, 5, 7] {
                let mut q = p;
                while q * p <= 400 {
                    let r = (l(p) * l(q) - l(q * p) - l(q / p)).abs().to_f64();
                    assert!(r <= tol, "p={p} q={q}");
                    q *= p;
                }
            }
            for n in 1..=400 {
                assert!(f.lambda[n].to_f64().abs() <= divisors(n) as f64 + tol);
            }
        }
    }

    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
}
