//! Gamma-function constants shared by the potential and averaging code.

use std::f64::consts::PI;

use statrs::function::gamma::gamma as statrs_gamma;

use crate::error::{Error, Result};

/// `Gamma(x)`, rejecting the poles at nonpositive integers.
pub fn gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || (x <= 0.0 && x == x.round()) {
        return Err(Error::Domain(format!("gamma pole at {x}")));
    }
    Ok(statrs_gamma(x))
}

/// Riesz potential normalization `h_n(gamma)`, so that
/// `I^gamma f = h_n(gamma) |x|^{gamma-n} * f`.
pub fn riesz_constant(n: usize, g: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(gamma((nf - g) / 2.0)? / (2f64.powf(g) * PI.powf(nf / 2.0) * gamma(g / 2.0)?))
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / statrs_gamma(n as f64 / 2.0)
}

/// Constant `C` with `F(|x|^alpha) = C |y|^{-alpha-n}` as tempered distributions.
pub fn power_transform_constant(n: usize, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(2f64.powf(nf + alpha) * PI.powf(nf / 2.0) * gamma((nf + alpha) / 2.0)? / gamma(-alpha / 2.0)?)
}

/// `int_{S^{n-1}} xi^alpha dS` for a multi-index given by its exponents.
pub fn sphere_monomial_moment(exponents: &[usize]) -> f64 {
    if exponents.iter().any(|e| e % 2 == 1) {
        return 0.0;
    }
    // 2 prod Gamma((a_i+1)/2) / Gamma((|a|+n)/2)
    let total: usize = exponents.iter().sum();
    let num: f64 = exponents
        .iter()
        .map(|&e| statrs_gamma((e as f64 + 1.0) / 2.0))
        .product();
    2.0 * num / statrs_gamma((total + exponents.len()) as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values_and_poles() {
        assert!((gamma(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0).unwrap() - 24.0).abs() < 1e-11);
        assert!((gamma(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!(gamma(0.0).is_err());
        assert!(gamma(-3.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_monomial_moment(&[0, 0]) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_monomial_moment(&[2, 0]) - PI).abs() < 1e-14);
        assert!((sphere_monomial_moment(&[2, 0, 0]) - 4.0 * PI / 3.0).abs() < 1e-13);
        assert_eq!(sphere_monomial_moment(&[1, 1]), 0.0);
    }

    #[test]
    fn riesz_constant_matches_transform_constant() {
        // h_n(g) is the inverse-transform normalization of |y|^{-g}
        for &(n, g) in &[(2usize, 0.5), (2, 1.5), (3, 0.7)] {
            let c = power_transform_constant(n, g - n as f64).unwrap();
            let expected = 1.0 / c;
            assert!((riesz_constant(n, g).unwrap() - expected).abs() < 1e-13 * expected.abs());
        }
    }
}
