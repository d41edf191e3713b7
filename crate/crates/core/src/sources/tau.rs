//! Exact Ramanujan tau values from the eta product `Delta = q prod (1 - q^n)^24`.
//!
//! Jacobi's identity gives the cube of the Euler product as a sparse series,
//! `prod (1 - q^n)^3 = sum_k (-1)^k (2k + 1) q^(k(k+1)/2)`, so the 24th power
//! is three squarings away: `P3 -> P3^2 -> P3^4 -> P3^8`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default largest supported truncation for the built-in series.
pub const DEFAULT_TAU_CAP: usize = 1 << 16;

/// `tau(1..=N)`, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSeries {
    tau: Vec<BigInt>,
}

impl TauSeries {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// `tau(n)` for `1 <= n <= N`.
    pub fn get(&self, n: usize) -> Option<&BigInt> {
        n.checked_sub(1).and_then(|i| self.tau.get(i))
    }

    pub fn values(&self) -> &[BigInt] {
        &self.tau
    }
}

pub fn tau_qexpansion(n_terms: usize) -> Result<TauSeries> {
    tau_qexpansion_capped(n_terms, DEFAULT_TAU_CAP)
}

pub fn tau_qexpansion_capped(n_terms: usize, cap: usize) -> Result<TauSeries> {
    if n_terms == 0 {
        return Err(Error::Domain("tau series needs at least one term".into()));
    }
    if n_terms > cap {
        return Err(Error::Domain(format!(
            "tau series of {n_terms} terms exceeds the cap of {cap}; \
             the squaring cost grows quadratically, supply larger ranges as an eigenvalue file"
        )));
    }
    // tau(n) is the coefficient of q^(n-1) in P3^8.
    let p3 = euler_cube(n_terms);
    let p6 = square_truncated(&p3, n_terms);
    let p12 = square_truncated(&p6, n_terms);
    let p24 = square_truncated(&p12, n_terms);
    Ok(TauSeries { tau: p24 })
}

/// First `len` coefficients of `prod (1 - q^n)^3`.
fn euler_cube(len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    let mut k = 0usize;
    loop {
        let e = k * (k + 1) / 2;
        if e >= len {
            break;
        }
        let c = BigInt::from(2 * k as i64 + 1);
        out[e] = if k.is_multiple_of(2) { c } else { -c };
        k += 1;
    }
    out
}

/// `a^2 mod q^len`. Output coefficients are independent, so they are
/// computed in parallel; each one is accumulated in `i128` when every input
/// fits in `i64`, and in big integers otherwise.
fn square_truncated(a: &[BigInt], len: usize) -> Vec<BigInt> {
    let small: Option<Vec<i64>> = a.iter().map(|c| c.to_i64()).collect();
    (0..len)
        .into_par_iter()
        .map(|n| match &small {
            Some(s) => coefficient_small(s, n).unwrap_or_else(|| coefficient_big(a, n)),
            None => coefficient_big(a, n),
        })
        .collect()
}

/// Coefficient of `q^n` in `a^2` using the symmetric half of the convolution.
fn coefficient_small(a: &[i64], n: usize) -> Option<BigInt> {
    let mut acc: i128 = 0;
    let half = n / 2;
    for i in 0..n.div_ceil(2).min(a.len()) {
        let j = n - i;
        if j >= a.len() {
            continue;
        }
        let prod = a[i] as i128 * a[j] as i128;
        acc = acc.checked_add(prod.checked_mul(2)?)?;
    }
    if n.is_multiple_of(2) && half < a.len() {
        acc = acc.checked_add(a[half] as i128 * a[half] as i128)?;
    }
    Some(BigInt::from(acc))
}

fn coefficient_big(a: &[BigInt], n: usize) -> BigInt {
    let mut acc = BigInt::zero();
    let two = BigInt::from(2);
    let half = n / 2;
    for i in 0..n.div_ceil(2).min(a.len()) {
        let j = n - i;
        if j >= a.len() || a[i].is_zero() || a[j].is_zero() {
            continue;
        }
        acc += &a[i] * &a[j] * &two;
    }
    if n.is_multiple_of(2) && half < a.len() {
        acc += &a[half] * &a[half];
    }
    acc
}

/// Deligne: `|tau(p)| <= 2 p^(11/2)`, checked exactly as `tau(p)^2 <= 4 p^11`.
pub fn satisfies_deligne(tau_p: &BigInt, p: u64) -> bool {
    let lhs = tau_p * tau_p;
    let rhs = BigInt::from(4) * num_traits::pow(BigInt::from(p), 11);
    lhs <= rhs
}

/// Normalized eigenvalue `tau(p) / p^(11/2)`.
pub fn normalize(tau_p: &BigInt, p: u64) -> f64 {
    let t = tau_p.to_f64().expect("tau values are finite");
    t / (p as f64).powf(5.5)
}

impl TauSeries {
    pub fn tau_one_is_one(&self) -> bool {
        self.get(1).is_some_and(|t| t.is_one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{gcd, primes_up_to};

    /// Independent oracle: multiply out `q prod_{n<len} (1 - q^n)^24` one
    /// factor at a time.
    fn tau_direct(len: usize) -> Vec<i128> {
        let mut poly = vec![0i128; len];
        poly[0] = 1;
        for n in 1..len {
            for _ in 0..24 {
                for k in (n..len).rev() {
                    poly[k] -= poly[k - n];
                }
            }
        }
        poly
    }

    #[test]
    fn small_values() {
        let t = tau_qexpansion(6).unwrap();
        let v: Vec<i64> = t.values().iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(v, vec![1, -24, 252, -1472, 4830, -6048]);
        assert_eq!(v[5], v[1] * v[2]);
        assert!(t.tau_one_is_one());
    }

    #[test]
    fn matches_direct_product() {
        let len = 60;
        let t = tau_qexpansion(len).unwrap();
        let oracle = tau_direct(len);
        for n in 1..=len {
            assert_eq!(t.get(n).unwrap(), &BigInt::from(oracle[n - 1]), "n = {n}");
        }
    }

    #[test]
    fn hecke_multiplicativity_and_deligne() {
        let n = 2000;
        let t = tau_qexpansion(n).unwrap();
        for a in 2..=n {
            for b in 2..=(n / a) {
                if gcd(a as u64, b as u64) == 1 {
                    let lhs = t.get(a * b).unwrap();
                    let rhs = t.get(a).unwrap() * t.get(b).unwrap();
                    assert_eq!(lhs, &rhs, "a={a} b={b}");
                }
            }
        }
        for p in primes_up_to(n as u64) {
            assert!(satisfies_deligne(t.get(p as usize).unwrap(), p));
        }
        // Hecke relation at a prime square: tau(p^2) = tau(p)^2 - p^11.
        for p in [2u64, 3, 5, 7, 11, 13] {
            let tp = t.get(p as usize).unwrap();
            let expect = tp * tp - num_traits::pow(BigInt::from(p), 11);
            assert_eq!(t.get((p * p) as usize).unwrap(), &expect);
        }
    }

    #[test]
    fn big_path_agrees_with_small_path() {
        let a: Vec<BigInt> = (0..40).map(|k| BigInt::from((k * 7919 % 101) as i64 - 50)).collect();
        let small: Vec<i64> = a.iter().map(|c| c.to_i64().unwrap()).collect();
        for n in 0..40 {
            assert_eq!(coefficient_small(&small, n).unwrap(), coefficient_big(&a, n));
        }
    }

    #[test]
    fn cap_and_zero_length() {
        assert!(tau_qexpansion(0).is_err());
        assert!(tau_qexpansion_capped(100, 50).is_err());
    }

    #[test]
    fn normalized_values() {
        let t = tau_qexpansion(3).unwrap();
        assert!((normalize(t.get(2).unwrap(), 2) - (-0.5303300858899106)).abs() < 1e-10);
        assert!((normalize(t.get(3).unwrap(), 3) - 0.5987336124929452).abs() < 1e-12);
    }
}
