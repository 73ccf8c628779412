use rug::Integer;

use crate::error::{Error, Result};

/// Length at and below which products use the schoolbook loop.
pub const SCHOOLBOOK_MAX: usize = 2048;

/// Exact q-expansion c(0..N-1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    pub weight: u32,
    pub coeffs: Vec<Integer>,
}

impl QSeries {
    pub fn new(weight: u32, coeffs: Vec<Integer>) -> Self {
        QSeries { weight, coeffs }
    }

    pub fn one(n: usize) -> Self {
        let mut c = vec![Integer::new(); n];
        if n > 0 {
            c[0] = Integer::from(1);
        }
        QSeries { weight: 0, coeffs: c }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n > self.len() {
            return Err(Error::Precision(format!("series has {} terms, {n} requested", self.len())));
        }
        Ok(QSeries { weight: self.weight, coeffs: self.coeffs[..n].to_vec() })
    }

    pub fn add(&self, o: &QSeries) -> Result<QSeries> {
        self.check_len(o)?;
        Ok(QSeries { weight: self.weight, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Integer::from(a + b)).collect() })
    }

    pub fn sub(&self, o: &QSeries) -> Result<QSeries> {
        self.check_len(o)?;
        Ok(QSeries { weight: self.weight, coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| Integer::from(a - b)).collect() })
    }

    pub fn scale(&self, s: &Integer) -> QSeries {
        QSeries { weight: self.weight, coeffs: self.coeffs.iter().map(|a| Integer::from(a * s)).collect() }
    }

    /// Exact division of every coefficient; errors if any is not divisible.
    pub fn div_exact(&self, d: &Integer) -> Result<QSeries> {
        let mut out = Vec::with_capacity(self.len());
        for a in &self.coeffs {
            if !a.is_divisible(d) {
                return Err(Error::Domain(format!("coefficient not divisible by {d}")));
            }
            out.push(Integer::from(a.div_exact_ref(d)));
        }
        Ok(QSeries { weight: self.weight, coeffs: out })
    }

    /// Truncated product, weight adds.
    pub fn mul(&self, o: &QSeries) -> Result<QSeries> {
        self.check_len(o)?;
        let c = mul_truncated(&self.coeffs, &o.coeffs, self.len());
        Ok(QSeries { weight: self.weight + o.weight, coeffs: c })
    }

    pub fn pow(&self, e: u32) -> Result<QSeries> {
        let mut acc = QSeries::one(self.len());
        acc.weight = 0;
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn max_bits(&self) -> u32 {
        self.coeffs.iter().map(|c| c.significant_bits()).max().unwrap_or(0)
    }

    fn check_len(&self, o: &QSeries) -> Result<()> {
        if self.len() != o.len() {
            return Err(Error::LengthMismatch { expected: self.len(), got: o.len() });
        }
        Ok(())
    }
}

/// First n coefficients of a·b.
pub fn mul_truncated(a: &[Integer], b: &[Integer], n: usize) -> Vec<Integer> {
    let la = a.len().min(n);
    let lb = b.len().min(n);
    if la == 0 || lb == 0 {
        return vec![Integer::new(); n];
    }
    if la.min(lb) <= SCHOOLBOOK_MAX {
        schoolbook(&a[..la], &b[..lb], n)
    } else {
        kronecker(&a[..la], &b[..lb], n)
    }
}

fn schoolbook(a: &[Integer], b: &[Integer], n: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); n];
    for (i, ai) in a.iter().enumerate().take(n) {
        if *ai == 0 {
            continue;
        }
        let top = (n - i).min(b.len());
        for (j, bj) in b[..top].iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Pack signed coefficients into one integer with `s`-bit slots.
fn pack(c: &[Integer], s: u32) -> Integer {
    if c.len() == 1 {
        return c[0].clone();
    }
    let mid = c.len() / 2;
    let lo = pack(&c[..mid], s);
    let hi = pack(&c[mid..], s);
    lo + (hi << (s * mid as u32))
}

/// Inverse of `pack` for `count` slots, each slot in (-2^{s-2}, 2^{s-2}).
fn unpack(v: Integer, s: u32, count: usize, out: &mut Vec<Integer>) {
    if count == 1 {
        out.push(v);
        return;
    }
    let mid = count / 2;
    let lo = v.clone().keep_signed_bits(s * mid as u32);
    let hi = (v - &lo) >> (s * mid as u32);
    unpack(lo, s, mid, out);
    unpack(hi, s, count - mid, out);
}

/// Kronecker substitution: one big-integer product replaces the convolution.
fn kronecker(a: &[Integer], b: &[Integer], n: usize) -> Vec<Integer> {
    let bits_a = a.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    let bits_b = b.iter().map(|x| x.significant_bits()).max().unwrap_or(0);
    let terms = a.len().min(b.len()).max(1);
    let log_terms = usize::BITS - terms.leading_zeros();
    let s = bits_a + bits_b + log_terms + 2;
    let pa = pack(a, s);
    let pb = pack(b, s);
    let prod = pa * pb;
    let low = prod.keep_signed_bits(s * n as u32);
    let mut out = Vec::with_capacity(n);
    unpack(low, s, n, &mut out);
    out
}
