//! Width laws: the GOE width distribution, the regular/chaotic mixture,
//! and the Wigner surmise for spacings.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// erf(c / sqrt(pi)): CDF of P(c) = (2/pi) exp(-c^2/pi) at unit mean.
pub fn goe_width_cdf(c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::invalid(format!("width must be >= 0, got {c}")));
    }
    Ok(libm::erf(c / PI.sqrt()))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("gamma must lie in (0, 1], got {gamma}")))
    }
}

/// 1 - gamma + gamma erf(gamma c / sqrt(pi)).
pub fn mixture_cdf(c: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(c >= 0.0) {
        return Err(Error::invalid(format!("width must be >= 0, got {c}")));
    }
    Ok(mixture_cdf_unchecked(c, gamma))
}

pub(crate) fn mixture_cdf_unchecked(c: f64, gamma: f64) -> f64 {
    1.0 - gamma + gamma * libm::erf(gamma * c / PI.sqrt())
}

/// Continuous part (2 gamma^2/(pi cbar)) exp(-gamma^2 c^2/(pi cbar^2)).
/// The atom of weight 1 - gamma at c = 0 has no density value.
pub fn mixture_pdf(c: f64, gamma: f64, c_bar: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(c_bar > 0.0) {
        return Err(Error::invalid(format!("c_bar must be > 0, got {c_bar}")));
    }
    if c == 0.0 {
        return Err(Error::AtomAtZero);
    }
    if !(c > 0.0) {
        return Err(Error::invalid(format!("width must be > 0, got {c}")));
    }
    let g2 = gamma * gamma;
    Ok(2.0 * g2 / (PI * c_bar) * (-g2 * c * c / (PI * c_bar * c_bar)).exp())
}

/// Wigner surmise P(s) = (pi/2) s exp(-pi s^2/4).
pub fn wigner_pdf(s: f64) -> f64 {
    0.5 * PI * s * (-0.25 * PI * s * s).exp()
}

pub fn wigner_cdf(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        -(-0.25 * PI * s * s).exp_m1()
    }
}

/// Draw from the unit-mean GOE width law: c = sqrt(pi/2) |Z|.
pub fn sample_goe_width<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    (0.5 * PI).sqrt() * z.abs()
}

/// Draw from the mixture. The atom is realized as widths below any
/// detection resolution, uniform in (0, 1e-6).
pub fn sample_mixture<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> f64 {
    if rng.gen::<f64>() < gamma {
        sample_goe_width(rng) / gamma
    } else {
        1e-6 * (1.0 - rng.gen::<f64>())
    }
}

/// Draw from the Wigner surmise by inversion.
pub fn sample_wigner<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    (4.0 * e / PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(goe_width_cdf(0.0).unwrap(), 0.0);
        assert_relative_eq!(goe_width_cdf(40.0).unwrap(), 1.0);
        assert!((goe_width_cdf(1.0).unwrap() - 0.57506).abs() < 1e-5);
        assert!(goe_width_cdf(-1.0).is_err());
        assert_relative_eq!(mixture_cdf(0.0, 0.94).unwrap(), 0.06, epsilon = 1e-15);
        assert_eq!(mixture_cdf(0.7, 1.0).unwrap(), goe_width_cdf(0.7).unwrap());
        assert!(mixture_cdf(1.0, 0.0).is_err());
        assert!(mixture_cdf(1.0, 1.1).is_err());
    }

    #[test]
    fn pdf_examples() {
        assert_relative_eq!(mixture_pdf(1e-12, 0.5, 1.0).unwrap(), 0.5 / PI, max_relative = 1e-12);
        assert_eq!(mixture_pdf(0.0, 0.5, 1.0).unwrap_err(), Error::AtomAtZero);
        let c = 1.3;
        assert_relative_eq!(
            mixture_pdf(c, 1.0, 1.0).unwrap(),
            2.0 / PI * (-c * c / PI).exp(),
            max_relative = 1e-15
        );
        for g in [0.3, 0.8, 1.0] {
            let m = simpson(|c| mixture_pdf(c.max(1e-300), g, 1.0).unwrap(), 0.0, 40.0, 20000);
            assert!((m - g).abs() < 1e-8, "gamma {g}: {m}");
        }
    }

    #[test]
    fn cdf_matches_quadrature_of_density() {
        for i in 1..=100 {
            let c = 0.05 * i as f64;
            let q = simpson(|x| 2.0 / PI * (-x * x / PI).exp(), 0.0, c, 2000);
            assert!((q - goe_width_cdf(c).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn wigner_is_normalized() {
        assert_relative_eq!(simpson(wigner_pdf, 0.0, 12.0, 4000), 1.0, epsilon = 1e-10);
        assert_relative_eq!(simpson(|s| s * wigner_pdf(s), 0.0, 12.0, 4000), 1.0, epsilon = 1e-10);
        assert_relative_eq!(wigner_cdf(1.0), simpson(wigner_pdf, 0.0, 1.0, 2000), epsilon = 1e-12);
    }
}
