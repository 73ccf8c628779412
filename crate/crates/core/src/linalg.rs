//! Exact characteristic polynomials, real-rooted polynomial roots and
//! small dense solves over `Real`.

use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::numeric::Real;

/// Coefficients c_0..c_d (c_d = 1) of det(xI − A) by Faddeev–LeVerrier; exact.
pub fn charpoly(a: &[Vec<Integer>]) -> Vec<Integer> {
    let d = a.len();
    let mut c = vec![Integer::new(); d + 1];
    c[d] = Integer::from(1);
    let mut m = vec![vec![Integer::new(); d]; d];
    for j in 1..=d {
        // M_j = A·M_{j−1} + c_{d−j+1} I
        let mut next = vec![vec![Integer::new(); d]; d];
        for (r, row) in next.iter_mut().enumerate() {
            for (col, cell) in row.iter_mut().enumerate() {
                let mut s = Integer::new();
                for (l, arl) in a[r].iter().enumerate() {
                    if *arl != 0 && m[l][col] != 0 {
                        s += arl * &m[l][col];
                    }
                }
                if r == col {
                    s += &c[d - j + 1];
                }
                *cell = s;
            }
        }
        m = next;
        // c_{d−j} = −tr(A·M_j)/j
        let mut tr = Integer::new();
        for r in 0..d {
            for l in 0..d {
                tr += &a[r][l] * &m[l][r];
            }
        }
        let jj = Integer::from(j as u32);
        debug_assert!(tr.is_divisible(&jj));
        c[d - j] = -(tr.div_exact(&jj));
    }
    c
}

fn horner(c: &[Float], x: &Float) -> (Float, Float) {
    let prec = x.prec();
    let mut p = Float::with_val(prec, 0);
    let mut dp = Float::with_val(prec, 0);
    for coef in c.iter().rev() {
        dp = Float::with_val(prec, &dp * x) + &p;
        p = Float::with_val(prec, &p * x) + coef;
    }
    (p, dp)
}

/// All roots of a monic integer polynomial known to have only real simple roots,
/// ascending, at `bits`.
pub fn real_roots(c: &[Integer], bits: u32) -> Result<Vec<Float>> {
    let d = c.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let orig: Vec<Float> = c.iter().map(|x| Float::with_val(bits, x)).collect();
    // Fujiwara bound on |root|
    // in log2 to stay clear of f64 overflow for large weights
    let mut log_bound = f64::NEG_INFINITY;
    for (i, coef) in c.iter().enumerate().take(d) {
        if *coef == 0 {
            continue;
        }
        let l = Float::with_val(64, coef).abs().log2().to_f64();
        let r = if i == 0 { (l - 1.0) / d as f64 } else { l / (d - i) as f64 };
        log_bound = log_bound.max(r);
    }
    let start = Float::with_val(bits, Float::with_val(64, log_bound + 1.0).exp2()) + 1u32;
    let tol = Float::with_val(bits, Float::i_exp(1, -(bits as i32) + 8));
    let loose = Float::with_val(bits, Float::i_exp(1, -(bits as i32) / 2));
    let mut work = orig.clone();
    let mut roots = Vec::with_capacity(d);
    for _ in 0..d {
        // Newton from above converges monotonically to the largest real root
        let mut x = start.clone();
        let mut converged = false;
        let mut prev: Option<Float> = None;
        for _ in 0..100_000 {
            let (p, dp) = horner(&work, &x);
            if dp.is_zero() {
                break;
            }
            let step = Float::with_val(bits, &p / &dp);
            x -= &step;
            let scale = Float::with_val(bits, x.clone().abs()) + 1u32;
            let rel = Float::with_val(bits, step.abs() / &scale);
            // stop at tolerance, or once steps stall at the rounding floor
            if rel <= tol || (rel <= loose && prev.as_ref().is_some_and(|q| rel >= *q)) {
                converged = true;
                break;
            }
            prev = Some(rel);
        }
        if !converged {
            return Err(Error::NonConvergence("polynomial root iteration".into()));
        }
        // polish on the undeflated polynomial
        for _ in 0..4 {
            let (p, dp) = horner(&orig, &x);
            if dp.is_zero() {
                break;
            }
            x -= Float::with_val(bits, &p / &dp);
        }
        // synthetic division by (t − x)
        let n = work.len() - 1;
        let mut q = vec![Float::with_val(bits, 0); n];
        let mut carry = Float::with_val(bits, 0);
        for i in (0..n).rev() {
            carry = Float::with_val(bits, &carry * &x) + &work[i + 1];
            q[i] = carry.clone();
        }
        work = q;
        roots.push(x);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(roots)
}

/// Null vector of (A − θI) with v_0 = 1, by elimination with pivoting on the
/// d×(d−1) system in the remaining unknowns.
pub fn eigenvector(a: &[Vec<Integer>], theta: &Float) -> Result<Vec<Float>> {
    let d = a.len();
    let bits = theta.prec();
    if d == 1 {
        return Ok(vec![Float::with_val(bits, 1)]);
    }
    // rows: [coeffs of v_1..v_{d−1} | rhs]
    let mut rows: Vec<Vec<Float>> = (0..d)
        .map(|r| {
            let mut row: Vec<Float> = (1..d)
                .map(|c| {
                    let mut v = Float::with_val(bits, &a[r][c]);
                    if r == c {
                        v -= theta;
                    }
                    v
                })
                .collect();
            let mut rhs = Float::with_val(bits, &a[r][0]);
            if r == 0 {
                rhs -= theta;
            }
            row.push(-rhs);
            row
        })
        .collect();
    let n = d - 1;
    let mut used = vec![false; d];
    let mut pivots = Vec::with_capacity(n);
    for col in 0..n {
        let mut best: Option<usize> = None;
        for r in 0..d {
            if used[r] {
                continue;
            }
            if best.is_none_or(|b| Float::with_val(bits, rows[r][col].abs_ref()) > Float::with_val(bits, rows[b][col].abs_ref())) {
                best = Some(r);
            }
        }
        let p = best.ok_or_else(|| Error::Singular("eigenvector system".into()))?;
        if rows[p][col].is_zero() {
            return Err(Error::Singular("zero pivot in eigenvector system".into()));
        }
        used[p] = true;
        pivots.push(p);
        let prow = rows[p].clone();
        for r in 0..d {
            if r == p || rows[r][col].is_zero() {
                continue;
            }
            let f = Float::with_val(bits, &rows[r][col] / &prow[col]);
            for c in col..=n {
                let t = Float::with_val(bits, &f * &prow[c]);
                rows[r][c] -= t;
            }
        }
    }
    let mut v = vec![Float::with_val(bits, 1)];
    for (col, &p) in pivots.iter().enumerate() {
        v.push(Float::with_val(bits, &rows[p][n] / &rows[p][col]));
    }
    Ok(v)
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
pub fn solve<R: Real>(a: &[Vec<R>], b: &[R]) -> Result<Vec<R>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::LengthMismatch { expected: n, got: b.len() });
    }
    let mut m: Vec<Vec<R>> = a.iter().zip(b).map(|(r, bi)| r.iter().cloned().chain(std::iter::once(bi.clone())).collect()).collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap();
        if m[p][col].abs() <= m[p][col].lift(0.0) {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        m.swap(col, p);
        for r in (col + 1)..n {
            let f = m[r][col].clone() / m[col][col].clone();
            for c in col..=n {
                let t = f.clone() * m[col][c].clone();
                m[r][c] = m[r][c].clone() - t;
            }
        }
    }
    let mut x: Vec<R> = vec![b[0].lift(0.0); n];
    for r in (0..n).rev() {
        let mut s = m[r][n].clone();
        for c in (r + 1)..n {
            s = s - m[r][c].clone() * x[c].clone();
        }
        x[r] = s / m[r][r].clone();
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Mpf;

    fn ints(v: &[i64]) -> Vec<Integer> {
        v.iter().map(|&x| Integer::from(x)).collect()
    }

    #[test]
    fn charpoly_small() {
        // [[2,1],[1,3]]: x² − 5x + 5
        let a = vec![ints(&[2, 1]), ints(&[1, 3])];
        assert_eq!(charpoly(&a), ints(&[5, -5, 1]));
        let a = vec![ints(&[1, 2, 3]), ints(&[0, 4, 5]), ints(&[0, 0, 6])];
        // (x−1)(x−4)(x−6) = x³ − 11x² + 34x − 24
        assert_eq!(charpoly(&a), ints(&[-24, 34, -11, 1]));
    }

    #[test]
    fn roots_of_product() {
        let c = ints(&[-24, 34, -11, 1]);
        let r = real_roots(&c, 128).unwrap();
        for (x, want) in r.iter().zip([1.0, 4.0, 6.0]) {
            assert!((x.to_f64() - want).abs() < 1e-30);
        }
    }

    #[test]
    fn eigenvector_small() {
        let a = vec![ints(&[2, 1]), ints(&[1, 3])];
        let r = real_roots(&charpoly(&a), 128).unwrap();
        for th in &r {
            let v = eigenvector(&a, th).unwrap();
            let r0 = Float::with_val(128, &a[0][0] * &v[0]) + Float::with_val(128, &a[0][1] * &v[1]) - Float::with_val(128, th * &v[0]);
            assert!(r0.abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn solve_generic() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        let am: Vec<Vec<Mpf>> = a.iter().map(|r| r.iter().map(|&v| Mpf::new(128, v)).collect()).collect();
        let xm = solve(&am, &[Mpf::new(128, 3.0), Mpf::new(128, 5.0)]).unwrap();
        assert!((xm[0].to_f64() - 0.8).abs() < 1e-15);
        assert!(solve(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]).is_err());
    }
}
