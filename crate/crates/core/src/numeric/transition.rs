use super::real::Real;
use crate::error::{Error, Result};

/// Smooth transition h(u) = s(u)/(s(u)+s(1-u)), s(u) = exp(-1/u).
pub fn transition_h<R: Real>(u: &R) -> Result<R> {
    let v = u.to_f64();
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("transition_h needs u in [0,1], got {v}")));
    }
    Ok(smooth_step(u))
}

/// Total version of `transition_h`: 0 below 0, 1 above 1.
pub fn smooth_step<R: Real>(u: &R) -> R {
    let one = u.lift(1.0);
    if *u <= u.lift(0.0) {
        return u.lift(0.0);
    }
    if *u >= one {
        return one;
    }
    // 1/(1+exp(1/u - 1/(1-u))), written to avoid 0/0 near the ends
    let a = u.recip() - (one.clone() - u.clone()).recip();
    one.clone() / (one + a.exp())
}

/// h'(u) = h(1-h)(1/u^2 + 1/(1-u)^2), zero outside (0,1).
pub fn smooth_step_d1<R: Real>(u: &R) -> R {
    let zero = u.lift(0.0);
    let one = u.lift(1.0);
    if *u <= zero || *u >= one {
        return zero;
    }
    let h = smooth_step(u);
    let v = one.clone() - u.clone();
    h.clone() * (one - h) * (u.sqr().recip() + v.sqr().recip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::real::Mpf;

    #[test]
    fn boundary_values() {
        assert_eq!(transition_h(&0.0).unwrap(), 0.0);
        assert_eq!(transition_h(&1.0).unwrap(), 1.0);
        assert_eq!(transition_h(&0.5).unwrap(), 0.5);
        let half = transition_h(&Mpf::new(128, 0.5)).unwrap();
        assert_eq!(half.to_f64(), 0.5);
        assert!(transition_h(&-0.1).is_err());
        assert!(transition_h(&1.1).is_err());
    }

    #[test]
    fn symmetric_on_grid() {
        let tol = 2f64.powi(-128 + 16);
        for i in 0..=1000 {
            let u = Mpf::new(128, i as f64 / 1000.0);
            let one = u.lift(1.0);
            let s = transition_h(&u).unwrap() + transition_h(&(one.clone() - u)).unwrap() - one;
            assert!(s.abs().to_f64() <= tol, "i={i}");
        }
    }

    #[test]
    fn monotone() {
        let mut last = Mpf::new(256, 0.0);
        for i in 10..=990 {
            let v = smooth_step(&Mpf::new(256, i as f64 / 1000.0));
            assert!(v > last, "i={i}");
            last = v;
        }
    }

    #[test]
    fn flat_at_ends() {
        // forward differences of orders 1..3 with step 1e-4 near both ends
        let hstep = 1e-4;
        for &u0 in &[1e-3, 1.0 - 1e-3] {
            let f = |u: f64| smooth_step(&Mpf::new(256, u)).to_f64();
            let d1 = (f(u0 + hstep) - f(u0 - hstep)) / (2.0 * hstep);
            let d2 = (f(u0 + hstep) - 2.0 * f(u0) + f(u0 - hstep)) / hstep.powi(2);
            let d3 = (f(u0 + 2.0 * hstep) - 2.0 * f(u0 + hstep) + 2.0 * f(u0 - hstep) - f(u0 - 2.0 * hstep))
                / (2.0 * hstep.powi(3));
            for d in [d1, d2, d3] {
                assert!(d.abs() < 1e-6, "u0={u0} d={d}");
            }
        }
    }

    #[test]
    fn derivative_matches_difference() {
        for &u in &[0.1, 0.3, 0.5, 0.77, 0.95] {
            let e = 1e-6;
            let fd = (smooth_step(&(u + e)) - smooth_step(&(u - e))) / (2.0 * e);
            assert!((fd - smooth_step_d1(&u)).abs() < 1e-7);
        }
    }
}
