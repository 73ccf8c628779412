//! Independent constructions used to cross-check the basis route:
//! Δ from Jacobi's triple-product identity and E_w from Bernoulli numbers.

use rug::{Integer, Rational};

use super::qseries::{mul_truncated, QSeries};
use crate::error::{Error, Result};

/// Δ = q·(Σ_m (−1)^m (2m+1) q^{m(m+1)/2})^8.
pub fn delta_jacobi(n: usize) -> QSeries {
    let mut j = vec![Integer::new(); n];
    let mut m = 0usize;
    while m * (m + 1) / 2 < n {
        let v = (2 * m + 1) as i64 * if m.is_multiple_of(2) { 1 } else { -1 };
        j[m * (m + 1) / 2] = Integer::from(v);
        m += 1;
    }
    let j2 = mul_truncated(&j, &j, n);
    let j4 = mul_truncated(&j2, &j2, n);
    let j8 = mul_truncated(&j4, &j4, n);
    let mut c = vec![Integer::new(); n];
    for i in 1..n {
        c[i] = j8[i - 1].clone();
    }
    QSeries::new(12, c)
}

/// Bernoulli numbers B_0..B_m (B_1 = −1/2).
pub fn bernoulli(m: usize) -> Vec<Rational> {
    let mut b = vec![Rational::new(); m + 1];
    b[0] = Rational::from(1);
    for n in 1..=m {
        // Σ_{j<n+1} C(n+1,j) B_j = 0
        let mut s = Rational::new();
        let mut binom = Integer::from(1);
        for (j, bj) in b.iter().enumerate().take(n) {
            s += Rational::from(bj * &binom);
            binom = binom * (n + 1 - j) as u32 / (j + 1) as u32;
        }
        b[n] = -s / Rational::from(n as u32 + 1);
    }
    b
}

/// E_w = 1 − (2w/B_w) Σ σ_{w−1}(n) q^n for even w ≥ 4, when the scale is integral.
pub fn eisenstein_general(w: u32, n: usize) -> Result<QSeries> {
    if w < 4 || w % 2 == 1 {
        return Err(Error::Domain(format!("E_{w} not defined here")));
    }
    let b = bernoulli(w as usize);
    let scale = Rational::from(-2 * w as i64) / &b[w as usize];
    if *scale.denom() != 1 {
        return Err(Error::Domain(format!("E_{w} has non-integral coefficients")));
    }
    let scale = scale.numer().clone();
    let mut sig = vec![Integer::new(); n];
    for d in 1..n {
        let p = Integer::from(d).pow(w - 1);
        let mut m = d;
        while m < n {
            sig[m] += &p;
            m += d;
        }
    }
    let mut c = Vec::with_capacity(n);
    if n > 0 {
        c.push(Integer::from(1));
    }
    for s in sig.into_iter().skip(1) {
        c.push(s * &scale);
    }
    Ok(QSeries::new(w, c))
}

/// The unique normalized cusp form Δ·E_{k−12} for one-dimensional S_k.
pub fn one_dim_cusp_form(k: u32, n: usize) -> Result<QSeries> {
    let d = delta_jacobi(n);
    if k == 12 {
        return Ok(d);
    }
    let e = eisenstein_general(k - 12, n)?;
    Ok(QSeries::new(k, mul_truncated(&d.coeffs, &e.coeffs, n)))
}

use rug::ops::Pow;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modforms::basis::{delta, eisenstein, EisensteinId};

    #[test]
    fn bernoulli_values() {
        let b = bernoulli(12);
        assert_eq!(b[2], Rational::from((1, 6)));
        assert_eq!(b[4], Rational::from((-1, 30)));
        assert_eq!(b[12], Rational::from((-691, 2730)));
    }

    #[test]
    fn routes_agree() {
        assert_eq!(delta_jacobi(200), delta(200).unwrap());
        assert_eq!(eisenstein_general(4, 50).unwrap(), eisenstein(EisensteinId::E4, 50).unwrap());
        assert_eq!(eisenstein_general(6, 50).unwrap(), eisenstein(EisensteinId::E6, 50).unwrap());
        // E8 = E4², E14 = E4²E6
        let e4 = eisenstein(EisensteinId::E4, 60).unwrap();
        let e6 = eisenstein(EisensteinId::E6, 60).unwrap();
        assert_eq!(eisenstein_general(8, 60).unwrap().coeffs, e4.mul(&e4).unwrap().coeffs);
        assert_eq!(eisenstein_general(14, 60).unwrap().coeffs, e4.mul(&e4).unwrap().mul(&e6).unwrap().coeffs);
    }
}
