//! Gaver–Stehfest inversion of real-axis Laplace transforms.
//!
//! The weights alternate in sign and grow quickly with the order, so they
//! are kept as exact rationals and the weighted sum is formed exactly before
//! a single rounding to f64.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{ensure, Error, Result};

const LN2_DIGITS: &str = "69314718055994530941723212145817656807550013436025";

/// ln 2 to 50 decimal places, as a rational.
pub fn ln2_rational() -> BigRational {
    let num: BigInt = LN2_DIGITS.parse().expect("valid digits");
    BigRational::new(num, BigInt::from(10u32).pow(LN2_DIGITS.len() as u32))
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Exact Stehfest weights of even order n.
#[derive(Debug, Clone)]
pub struct Stehfest {
    n: usize,
    weights: Vec<BigRational>,
    ln2: BigRational,
}

impl Stehfest {
    pub fn new(n: usize) -> Result<Self> {
        ensure(n >= 2 && n.is_multiple_of(2) && n <= 40, || format!("Stehfest order must be even in [2, 40], got {n}"))?;
        let half = n / 2;
        let mut weights = Vec::with_capacity(n);
        for k in 1..=n {
            let mut sum = BigRational::zero();
            for j in k.div_ceil(2)..=k.min(half) {
                let num = BigInt::from(j).pow(half as u32) * factorial(2 * j);
                let den = factorial(half - j)
                    * factorial(j)
                    * factorial(j - 1)
                    * factorial(k - j)
                    * factorial(2 * j - k);
                sum += BigRational::new(num, den);
            }
            if (k + half) % 2 == 1 {
                sum = -sum;
            }
            weights.push(sum);
        }
        Ok(Stehfest { n, weights, ln2: ln2_rational() })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    /// Sum of |V_k|, the amplification of errors in the transform values.
    pub fn amplification(&self) -> f64 {
        self.weights.iter().map(|w| w.abs().to_f64().unwrap_or(f64::INFINITY)).sum()
    }

    /// Transform arguments k·ln2/t, k = 1..n, rounded to f64.
    pub fn abscissae(&self, t: f64) -> Vec<f64> {
        let step = self.step(t);
        (1..=self.n)
            .map(|k| (&step * BigRational::from_integer(BigInt::from(k))).to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    fn step(&self, t: f64) -> BigRational {
        &self.ln2 / BigRational::from_float(t).expect("finite time")
    }

    /// Combines transform values taken at [`Stehfest::abscissae`] into f(t).
    ///
    /// Only the first n values are used, so lower orders can reuse the
    /// values computed for a higher one.
    pub fn combine(&self, values: &[f64], t: f64) -> Result<f64> {
        ensure(values.len() >= self.n, || format!("need {} transform values, got {}", self.n, values.len()))?;
        let mut acc = BigRational::zero();
        for (w, &v) in self.weights.iter().zip(values) {
            let v = BigRational::from_float(v).ok_or_else(|| Error::numerical("non-finite transform value"))?;
            acc += w * v;
        }
        Ok((acc * self.step(t)).to_f64().unwrap_or(f64::NAN))
    }

    /// Inverts a transform evaluated in f64.
    pub fn invert<F: FnMut(f64) -> f64>(&self, f: F, t: f64) -> Result<f64> {
        let values: Vec<f64> = self.abscissae(t).into_iter().map(f).collect();
        self.combine(&values, t)
    }

    /// Inverts a transform evaluated exactly on rational arguments.
    pub fn invert_exact<F: FnMut(&BigRational) -> BigRational>(&self, mut f: F, t: f64) -> f64 {
        let step = self.step(t);
        let mut acc = BigRational::zero();
        for (k, w) in self.weights.iter().enumerate() {
            let p = &step * BigRational::from_integer(BigInt::from(k + 1));
            acc += w * f(&p);
        }
        (acc * step).to_f64().unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_zero_exactly() {
        for n in [8, 14, 20] {
            let s = Stehfest::new(n).unwrap();
            let total: BigRational = s.weights().iter().cloned().sum();
            assert!(total.is_zero(), "order {n}");
        }
    }

    #[test]
    fn low_order_weights_match_known_values() {
        let s = Stehfest::new(4).unwrap();
        let w: Vec<f64> = s.weights().iter().map(|w| w.to_f64().unwrap()).collect();
        assert_eq!(w, vec![-2.0, 26.0, -48.0, 24.0]);
    }

    #[test]
    fn rejects_odd_order() {
        assert!(Stehfest::new(13).is_err());
    }

    #[test]
    fn inverts_unit_step() {
        let s = Stehfest::new(14).unwrap();
        let v = s.invert(|p| 1.0 / p, 2.0).unwrap();
        assert!((v - 1.0).abs() < 1e-8);
    }

    #[test]
    fn amplification_grows_with_order() {
        let a14 = Stehfest::new(14).unwrap().amplification();
        let a20 = Stehfest::new(20).unwrap().amplification();
        assert!(a14 > 1e8 && a20 > 1e3 * a14);
    }
}
