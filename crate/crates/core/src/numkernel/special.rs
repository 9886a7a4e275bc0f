// SPDX-License-Identifier: Apache-2.0

//! Log-gamma, digamma and trigamma for positive real arguments.
//!
//! All three shift the argument upward with the recurrence
//! `f(x) = f(x + 1) - Δ(x)` until it reaches the asymptotic regime, then
//! evaluate the Stirling/Bernoulli series.

use crate::error::{Error, Result};
use crate::Scalar;

/// Below this the asymptotic series is not used.
const ASYMPTOTIC_FROM: f64 = 6.0;
const LGAMMA_ASYMPTOTIC_FROM: f64 = 10.0;

fn check_domain<T: Scalar>(name: &str, x: T) -> Result<()> {
    if !x.is_finite() || x <= T::zero() {
        return Err(Error::domain(format!("{name} requires finite x > 0, got {x}")));
    }
    Ok(())
}

/// Natural log of the gamma function, `ln Γ(x)` for `x > 0`.
pub fn lgamma<T: Scalar>(x: T) -> Result<T> {
    check_domain("lgamma", x)?;
    if x == T::one() || x == T::lit(2.0) {
        return Ok(T::zero());
    }
    let threshold = T::lit(LGAMMA_ASYMPTOTIC_FROM);
    let mut z = x;
    // ln Γ(x) = ln Γ(x + n) - ln(x (x+1) ... (x+n-1)); the product is kept
    // as a running value and logged once.
    let mut shift_prod = T::one();
    while z < threshold {
        shift_prod = shift_prod * z;
        z = z + T::one();
    }
    let half = T::lit(0.5);
    let inv = z.recip();
    let inv2 = inv * inv;
    // Bernoulli terms B_{2k} / (2k (2k-1) z^{2k-1}), k = 1..7
    let series = inv
        * (T::lit(1.0 / 12.0)
            + inv2
                * (T::lit(-1.0 / 360.0)
                    + inv2
                        * (T::lit(1.0 / 1260.0)
                            + inv2
                                * (T::lit(-1.0 / 1680.0)
                                    + inv2
                                        * (T::lit(1.0 / 1188.0)
                                            + inv2 * (T::lit(-691.0 / 360360.0) + inv2 * T::lit(1.0 / 156.0)))))));
    let half_ln_two_pi = T::lit(0.918_938_533_204_672_7);
    let stirling = (z - half) * z.ln() - z + half_ln_two_pi + series;
    Ok(stirling - shift_prod.ln())
}

/// Digamma function `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma<T: Scalar>(x: T) -> Result<T> {
    check_domain("digamma", x)?;
    let threshold = T::lit(ASYMPTOTIC_FROM);
    let mut z = x;
    let mut acc = T::zero();
    while z < threshold {
        acc = acc - z.recip();
        z = z + T::one();
    }
    let inv = z.recip();
    let inv2 = inv * inv;
    // B_{2k} / (2k z^{2k}), k = 1..7
    let series = inv2
        * (T::lit(1.0 / 12.0)
            + inv2
                * (T::lit(-1.0 / 120.0)
                    + inv2
                        * (T::lit(1.0 / 252.0)
                            + inv2
                                * (T::lit(-1.0 / 240.0)
                                    + inv2
                                        * (T::lit(1.0 / 132.0)
                                            + inv2 * (T::lit(-691.0 / 32760.0) + inv2 * T::lit(1.0 / 12.0)))))));
    Ok(acc + z.ln() - T::lit(0.5) * inv - series)
}

/// Trigamma function `ψ'(x)` for `x > 0`.
pub fn trigamma<T: Scalar>(x: T) -> Result<T> {
    check_domain("trigamma", x)?;
    let threshold = T::lit(ASYMPTOTIC_FROM);
    let mut z = x;
    let mut acc = T::zero();
    while z < threshold {
        acc = acc + (z * z).recip();
        z = z + T::one();
    }
    let inv = z.recip();
    let inv2 = inv * inv;
    let series = inv
        + T::lit(0.5) * inv2
        + inv2
            * inv
            * (T::lit(1.0 / 6.0)
                + inv2
                    * (T::lit(-1.0 / 30.0)
                        + inv2
                            * (T::lit(1.0 / 42.0)
                                + inv2
                                    * (T::lit(-1.0 / 30.0)
                                        + inv2
                                            * (T::lit(5.0 / 66.0)
                                                + inv2 * (T::lit(-691.0 / 2730.0) + inv2 * T::lit(7.0 / 6.0)))))));
    Ok(acc + series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values from 40-digit mpmath evaluation.
    const REFERENCE: &[(f64, f64, f64, f64)] = &[
        // x, lgamma, digamma, trigamma
        (
            0.1,
            2.252712651734205959869702,
            -10.42375494041107679516822,
            101.4332991507927588172155,
        ),
        (
            0.5,
            0.5723649429247000870717137,
            -1.963510026021423479440976,
            4.934802200544679309417245,
        ),
        (1.0, 0.0, -0.5772156649015328606065121, 1.644934066848226436472415),
        (2.0, 0.0, 0.4227843350984671393934879, 0.6449340668482264364724152),
        (
            3.7,
            1.428072326665387921872381,
            1.167153539361511385873864,
            0.3100378576700383191038593,
        ),
        (
            10.25,
            13.36802367147604629543091,
            2.27770479068672396930147,
            0.1024745215179918667994624,
        ),
        (
            123.456,
            469.6055471299294687300692,
            4.811829323828985387322188,
            0.008132945834278198010144326,
        ),
        (
            1e6,
            12815504.56914761165997697,
            13.81551005796419077077462,
            0.000001000000500000166666666667,
        ),
    ];

    /// 1e-10 absolute, widened to a few ulps where the value itself is too
    /// large for f64 to resolve 1e-10.
    fn tol(reference: f64) -> f64 {
        1e-10_f64.max(4.0 * f64::EPSILON * reference.abs())
    }

    #[test]
    fn matches_high_precision_reference() {
        for &(x, lg, dg, tg) in REFERENCE {
            let got = lgamma(x).unwrap();
            assert!((got - lg).abs() <= tol(lg), "lgamma({x}) = {got}, want {lg}");
            let got = digamma(x).unwrap();
            assert!((got - dg).abs() <= tol(dg), "digamma({x}) = {got}, want {dg}");
            let got = trigamma(x).unwrap();
            assert!((got - tg).abs() <= 1e-10, "trigamma({x}) = {got}, want {tg}");
        }
    }

    #[test]
    fn named_values() {
        assert_eq!(lgamma(1.0).unwrap(), 0.0);
        assert!(lgamma(2.0_f64).unwrap().abs() < 1e-15);
        assert!((lgamma(0.5f64).unwrap() - 0.5723649429).abs() < 1e-10);
        assert!((digamma(1.0f64).unwrap() + 0.5772156649).abs() < 1e-10);
        assert!((digamma(2.0f64).unwrap() - 0.4227843351).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_positive_and_non_finite() {
        for bad in [0.0, -1.0, -0.5, f64::NAN, f64::INFINITY] {
            assert!(matches!(lgamma(bad), Err(Error::Domain(_))));
            assert!(matches!(digamma(bad), Err(Error::Domain(_))));
            assert!(matches!(trigamma(bad), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn single_precision_is_usable() {
        assert!((lgamma(0.5_f32).unwrap() - 0.572_364_9).abs() < 1e-5);
        assert!((digamma(1.0_f32).unwrap() + 0.577_215_7).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn lgamma_recurrence(x in 0.5f64..100.0) {
            let lhs = lgamma(x + 1.0).unwrap();
            let rhs = lgamma(x).unwrap() + x.ln();
            prop_assert!((lhs - rhs).abs() <= 1e-9, "x={x}: {lhs} vs {rhs}");
        }

        #[test]
        fn digamma_recurrence(x in 0.5f64..100.0) {
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }

        #[test]
        fn digamma_recurrence_on_wide_range(x in 1.0f64..100.0) {
            let step = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            prop_assert!((step - 1.0 / x).abs() <= 1e-12);
        }

        #[test]
        fn trigamma_is_derivative_of_digamma(x in 0.5f64..50.0) {
            let h = 1e-5;
            let fd = (digamma(x + h).unwrap() - digamma(x - h).unwrap()) / (2.0 * h);
            let exact = trigamma(x).unwrap();
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.max(1.0));
        }
    }
}
