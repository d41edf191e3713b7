//! The main-term constant `C(F) = 1/2 prod_p (1 - gamma(p) / p^2)`.
//!
//! The truncated product over `p <= P` has relative error at most
//! `2^(d+1) / P` because `|gamma(p)| <= 2^d` and `sum_{p > P} p^-2 < 1 / P`.
//! That bound needs `P ~ 10^12` for twelve digits, so for the degree-one
//! products (`zeta` and Dirichlet `L`), where `gamma(p) = chi(p)` and the
//! product collapses to `1 / L(2, chi)`, tight tolerances are met by summing
//! `L(2, chi)` over residue classes with Euler-Maclaurin tails instead.

use num_complex::Complex64;

use super::{EulerProductSpec, ProductKind};
use crate::arith::{gcd, next_prime, primes_up_to};
use crate::error::{Error, Result};
use crate::sources::DirichletCharacter;
use crate::summation::{CompensatedSum, ComplexSum};

/// Largest prime cutoff the product route will sieve to.
pub const EULER_PRODUCT_LIMIT: u64 = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantMethod {
    /// Truncated Euler product over primes `<= cutoff`.
    EulerProduct,
    /// `1 / (2 L(2, chi))`, `cutoff` leading terms per residue class.
    LValue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantResult {
    pub value: Complex64,
    pub cutoff: u64,
    /// Rigorous bound on the relative truncation error of `value`.
    pub tail_bound: f64,
    pub method: ConstantMethod,
}

/// Smallest cutoff of the doubling schedule starting at `2^(d+4)` whose
/// tail bound `2^(d+1) / P` is at most `tol`.
pub fn schedule_cutoff(degree: u32, tol: f64) -> u64 {
    let num = f64::from(1u32 << (degree + 1));
    let mut p = 1u64 << (degree + 4);
    while num / p as f64 > tol {
        p = p.checked_mul(2).expect("cutoff overflow");
    }
    p
}

fn tail_bound(degree: u32, cutoff: u64) -> f64 {
    f64::from(1u32 << (degree + 1)) / cutoff as f64
}

/// `C(F)` to relative tolerance `tol`.
pub fn c_constant(spec: &EulerProductSpec, tol: f64) -> Result<ConstantResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let d = spec.degree();
    let cutoff = schedule_cutoff(d, tol);
    if cutoff <= EULER_PRODUCT_LIMIT {
        return euler_product(spec, cutoff);
    }
    match spec.kind() {
        ProductKind::Zeta => Ok(via_l_value(&DirichletCharacter::principal(1))),
        ProductKind::Dirichlet(chi) => Ok(via_l_value(chi)),
        ProductKind::Gl2Twisted { source, .. } => Err(Error::DataGap {
            prime: next_prime(source.coverage_bound().max(1)),
            coverage: source.coverage_bound(),
        }),
    }
}

/// Like [`c_constant`], but when the eigenvalue data cannot reach the
/// requested tolerance, falls back to the product over every covered prime
/// and reports the looser bound.
pub fn c_constant_within_coverage(spec: &EulerProductSpec, tol: f64) -> Result<ConstantResult> {
    match c_constant(spec, tol) {
        Err(Error::DataGap { .. }) => {
            let cov = spec.coverage_bound().unwrap_or(0);
            if cov < 2 {
                return Err(Error::DataGap {
                    prime: 2,
                    coverage: cov,
                });
            }
            euler_product(spec, cov)
        }
        other => other,
    }
}

/// `1/2 prod_{p <= cutoff} (1 - gamma(p) / p^2)`, as the exponential of a
/// compensated sum of logarithms.
pub fn euler_product(spec: &EulerProductSpec, cutoff: u64) -> Result<ConstantResult> {
    let eval = spec.local_evaluator(cutoff)?;
    let mut log_sum = ComplexSum::new();
    for p in primes_up_to(cutoff) {
        let pf = p as f64;
        let factor = Complex64::new(1.0, 0.0) - eval.gamma(p) / (pf * pf);
        log_sum.add(factor.ln());
    }
    Ok(ConstantResult {
        value: log_sum.value().exp() * 0.5,
        cutoff,
        tail_bound: tail_bound(spec.degree(), cutoff),
        method: ConstantMethod::EulerProduct,
    })
}

/// Terms summed directly per residue class before the Euler-Maclaurin tail.
const EM_TERMS: u64 = 32;
/// Bernoulli numbers `B_2, B_4, ..., B_22`.
const BERNOULLI: [f64; 11] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
];
/// `B_24`, for the remainder bound.
const BERNOULLI_NEXT: f64 = -236364091.0 / 2730.0;

/// `sum_{k >= 0} (k + a)^-2` for `a > 0`, with a bound on the truncation error.
fn hurwitz_zeta_2(a: f64) -> (f64, f64) {
    let mut acc: CompensatedSum = (0..EM_TERMS).map(|k| (k as f64 + a).powi(-2)).collect();
    let x = EM_TERMS as f64 + a;
    acc.add(1.0 / x);
    acc.add(0.5 / (x * x));
    // sum_j B_{2j} x^{-2j-1}
    let mut pow = 1.0 / (x * x * x);
    for b in BERNOULLI {
        acc.add(b * pow);
        pow /= x * x;
    }
    let remainder = 2.0 * BERNOULLI_NEXT.abs() * pow;
    (acc.value(), remainder)
}

/// `C = 1 / (2 L(2, chi))` with `L(2, chi) = q^-2 sum_a chi(a) zeta(2, a/q)`.
fn via_l_value(chi: &DirichletCharacter) -> ConstantResult {
    let q = chi.modulus();
    let qf = q as f64;
    let mut l = ComplexSum::new();
    let mut err = 0.0;
    let mut magnitude = 0.0;
    for a in 1..=q {
        if gcd(a, q) != 1 {
            continue;
        }
        let (h, r) = hurwitz_zeta_2(a as f64 / qf);
        let term = chi.eval_u64(a) * (h / (qf * qf));
        l.add(term);
        err += r / (qf * qf);
        magnitude += term.norm();
    }
    let l = l.value();
    // Truncation plus a generous allowance for rounding in the class sums.
    let abs_err = err + 64.0 * f64::EPSILON * magnitude;
    ConstantResult {
        value: 0.5 / l,
        cutoff: EM_TERMS,
        tail_bound: abs_err / l.norm(),
        method: ConstantMethod::LValue,
    }
}
