use crate::error::{Error, Result};
use crate::numeric::Real;

/// Exponent ε₀ in the oscillatory threshold z ≥ ν + ν^{1/3+ε₀}.
pub const EPS0: f64 = 0.05;

/// ω_ν(z) = (z²−ν²)^{1/2} − ν·arctan((z²/ν²−1)^{1/2}) − π/4, unchecked.
pub fn omega<R: Real>(nu: &R, z: &R) -> R {
    let s = (z.sqr() - nu.sqr()).sqrt();
    let r = s.clone() / nu.clone();
    s - nu.clone() * r.atan() - nu.pi() / nu.lift(4.0)
}

pub fn omega_phase<R: Real>(nu: &R, z: &R) -> Result<R> {
    check_above(nu, z)?;
    Ok(omega(nu, z))
}

/// ω′(z) = (z²−ν²)^{1/2}/z.
pub fn omega_d1<R: Real>(nu: &R, z: &R) -> Result<R> {
    check_above(nu, z)?;
    Ok((z.sqr() - nu.sqr()).sqrt() / z.clone())
}

/// ω″(z) = ν²/(z²(z²−ν²)^{1/2}).
pub fn omega_d2<R: Real>(nu: &R, z: &R) -> Result<R> {
    check_above(nu, z)?;
    Ok(nu.sqr() / (z.sqr() * (z.sqr() - nu.sqr()).sqrt()))
}

fn check_above<R: Real>(nu: &R, z: &R) -> Result<()> {
    if z <= nu {
        return Err(Error::Domain(format!("phase needs z > nu, got nu={:?} z={:?}", nu, z)));
    }
    Ok(())
}

/// Two-term oscillatory form and its envelope 10·z⁴/(z²−ν²)^{13/4}, unchecked.
pub fn oscillatory_two_term<R: Real>(nu: &R, z: &R) -> (R, R) {
    let d = z.sqr() - nu.sqr();
    let w = omega(nu, z);
    let c = (nu.lift(2.0) / nu.pi()).sqrt();
    let q = d.clone().powf(&nu.lift(-0.25));
    let corr = nu.lift(0.125) + nu.lift(5.0 / 24.0) * nu.sqr() / d.clone();
    let value = c.clone() * q.clone() * w.cos() + c * q.clone() * q.clone() * q * corr * w.sin();
    let bound = nu.lift(10.0) * z.sqr().sqr() / d.powf(&nu.lift(3.25));
    (value, bound)
}

pub fn oscillatory_threshold(nu: f64) -> f64 {
    nu + nu.powf(1.0 / 3.0 + EPS0)
}

/// The asymptotic with its precondition z ≥ ν + ν^{1/3+ε₀}.
pub fn bessel_j_oscillatory<R: Real>(nu: &R, z: &R) -> Result<(R, R)> {
    let t = oscillatory_threshold(nu.to_f64());
    if z.to_f64() < t {
        return Err(Error::Regime(format!("oscillatory form needs z >= {t}, got {}", z.to_f64())));
    }
    Ok(oscillatory_two_term(nu, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Mpf;
    use rug::Float;

    #[test]
    fn omega_at_sqrt2_nu() {
        for &nu in &[11.0, 49.0, 199.0] {
            let z = 2f64.sqrt() * nu;
            let want = nu * (1.0 - std::f64::consts::FRAC_PI_4) - std::f64::consts::FRAC_PI_4;
            assert!((omega_phase(&nu, &z).unwrap() - want).abs() < 1e-11);
        }
        assert!(omega_phase(&10.0, &10.0).is_err());
        assert!(omega_d1(&10.0, &9.0).is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        let nu = 40.0f64;
        for &z in &[41.0, 55.0, 80.0, 300.0] {
            let h = 1e-4;
            let fd1 = (omega(&nu, &(z + h)) - omega(&nu, &(z - h))) / (2.0 * h);
            let d1 = omega_d1(&nu, &z).unwrap();
            assert!((fd1 - d1).abs() < 1e-7 * d1.abs().max(1.0), "z={z}");
            let fd2 = (omega_d1(&nu, &(z + h)).unwrap() - omega_d1(&nu, &(z - h)).unwrap()) / (2.0 * h);
            assert!((fd2 - omega_d2(&nu, &z).unwrap()).abs() < 1e-7, "z={z}");
        }
    }

    #[test]
    fn large_z_limit() {
        // at z = 1e6·ν the phase approaches z − νπ/2 − π/4; gap ≈ ν²/(2z)
        for &nu in &[11.0, 99.0] {
            let z = Mpf::new(256, 1e6 * nu);
            let nu_m = z.lift(nu);
            let lim = z.clone() - nu_m.clone() * z.pi() / z.lift(2.0) - z.pi() / z.lift(4.0);
            let gap = (omega(&nu_m, &z) - lim).to_f64();
            assert!(gap.abs() < nu / 1e6, "nu={nu} gap={gap:e}");
            assert!(gap > 0.0);
        }
    }

    #[test]
    fn oscillatory_agrees_with_jn() {
        for &(n, z) in &[(11i32, 30.0f64), (49, 80.0), (199, 260.0)] {
            let (v, b) = bessel_j_oscillatory(&(n as f64), &z).unwrap();
            let r = Float::with_val(128, z).jn(n).to_f64();
            assert!((v - r).abs() <= b, "n={n} z={z}");
            let env = (2.0 / std::f64::consts::PI).sqrt() * (z * z - (n * n) as f64).powf(-0.25);
            assert!(v.abs() <= env * 1.01 + b);
        }
        assert!(bessel_j_oscillatory(&199.0, &200.0).is_err());
    }
}
