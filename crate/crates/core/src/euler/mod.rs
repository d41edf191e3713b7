//! Polynomial Euler products and their associated totient functions.
//!
//! A product is described by its local polynomials
//! `F_p(s)^{-1} = 1 + e_1(p) p^{-s} + e_2(p) p^{-2s}`; everything here is
//! evaluated from the coefficients `e_j(p)`, never from the Satake roots.

pub mod constant;
pub mod grammar;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::arith::factorize;
use crate::error::{Error, Result};
use crate::sources::{DirichletCharacter, EigenvalueSource};
use crate::summation::ComplexSum;

pub use constant::{c_constant, c_constant_within_coverage, ConstantMethod, ConstantResult};
pub use grammar::{BuildOptions, ProductDescriptor};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub enum ProductKind {
    Zeta,
    Dirichlet(DirichletCharacter),
    Gl2Twisted {
        source: Arc<EigenvalueSource>,
        chi: DirichletCharacter,
    },
}

/// Per-prime values at `s = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalData {
    pub p: u64,
    /// `1 / F_p(1)`.
    pub inv_local: Complex64,
    /// `p (1 - 1 / F_p(1))`.
    pub gamma: Complex64,
}

#[derive(Debug, Clone)]
pub struct EulerProductSpec {
    kind: ProductKind,
    cache: Arc<RwLock<HashMap<u64, LocalData>>>,
}

impl EulerProductSpec {
    fn with_kind(kind: ProductKind) -> Self {
        Self {
            kind,
            cache: Arc::default(),
        }
    }

    pub fn zeta() -> Self {
        Self::with_kind(ProductKind::Zeta)
    }

    pub fn dirichlet(chi: DirichletCharacter) -> Self {
        Self::with_kind(ProductKind::Dirichlet(chi))
    }

    /// `L(s, f x chi)`; the twisting character must be primitive.
    pub fn gl2_twisted(source: Arc<EigenvalueSource>, chi: DirichletCharacter) -> Result<Self> {
        if !chi.is_primitive() {
            return Err(Error::Domain(format!(
                "twisting character {chi} is not primitive (conductor {})",
                chi.conductor()
            )));
        }
        Ok(Self::with_kind(ProductKind::Gl2Twisted { source, chi }))
    }

    pub fn parse(spec: &str, opts: &BuildOptions) -> Result<Self> {
        spec.parse::<ProductDescriptor>()?.build(opts)
    }

    pub fn kind(&self) -> &ProductKind {
        &self.kind
    }

    /// Euler degree.
    pub fn degree(&self) -> u32 {
        match self.kind {
            ProductKind::Zeta | ProductKind::Dirichlet(_) => 1,
            ProductKind::Gl2Twisted { .. } => 2,
        }
    }

    /// Largest prime whose local factor is available; `None` when unbounded.
    pub fn coverage_bound(&self) -> Option<u64> {
        match &self.kind {
            ProductKind::Gl2Twisted { source, .. } => Some(source.coverage_bound()),
            _ => None,
        }
    }

    /// Fails with a data-gap error unless every prime `<= x` is covered.
    pub fn ensure_covers(&self, x: u64) -> Result<()> {
        match &self.kind {
            ProductKind::Gl2Twisted { source, .. } => source.ensure_covers(x),
            _ => Ok(()),
        }
    }

    /// `(e_1(p), e_2(p))`, the coefficients of the local polynomial in `p^{-s}`.
    pub fn local_coefficients(&self, p: u64) -> Result<(Complex64, Complex64)> {
        match &self.kind {
            ProductKind::Zeta => Ok((-ONE, ZERO)),
            ProductKind::Dirichlet(chi) => Ok((-chi.eval_u64(p), ZERO)),
            ProductKind::Gl2Twisted { source, chi } => {
                let lambda = source.normalized_lambda(p)?;
                let c = chi.eval_u64(p);
                Ok((-c * lambda, c * c))
            }
        }
    }

    /// `1 / F_p(1) = prod_j (1 - alpha_j(p) / p)`.
    pub fn local_inverse_at_one(&self, p: u64) -> Result<Complex64> {
        Ok(self.local_data(p)?.inv_local)
    }

    /// `gamma(p) = p (1 - 1 / F_p(1))`.
    pub fn gamma_at(&self, p: u64) -> Result<Complex64> {
        Ok(self.local_data(p)?.gamma)
    }

    /// Cached per-prime data.
    pub fn local_data(&self, p: u64) -> Result<LocalData> {
        if let Some(d) = self.cache.read().expect("cache lock").get(&p) {
            return Ok(*d);
        }
        let d = self.compute_local(p)?;
        self.cache.write().expect("cache lock").entry(p).or_insert(d);
        Ok(d)
    }

    fn compute_local(&self, p: u64) -> Result<LocalData> {
        let (e1, e2) = self.local_coefficients(p)?;
        let pf = p as f64;
        let inv_local = ONE + e1 / pf + e2 / (pf * pf);
        // gamma = p (1 - inv_local) = -(e1 + e2 / p), without the cancellation.
        let gamma = -(e1 + e2 / pf);
        debug_assert!(
            self.ramanujan_violations() > 0 || gamma.norm() <= f64::from(1u32 << self.degree()) + 1e-9,
            "|gamma({p})| = {} exceeds 2^d",
            gamma.norm()
        );
        Ok(LocalData { p, inv_local, gamma })
    }

    fn ramanujan_violations(&self) -> usize {
        match &self.kind {
            ProductKind::Gl2Twisted { source, .. } => source.violations().len(),
            _ => 0,
        }
    }

    /// `alpha(n) = mu(n) prod_{p | n} gamma(p)`.
    pub fn alpha(&self, n: u64) -> Result<Complex64> {
        assert!(n >= 1, "alpha is defined for n >= 1");
        let mut acc = ONE;
        for (p, k) in factorize(n) {
            if k > 1 {
                return Ok(ZERO);
            }
            acc *= -self.gamma_at(p)?;
        }
        Ok(acc)
    }

    /// `phi(n, F) = n prod_{p | n} 1 / F_p(1)`.
    pub fn phi(&self, n: u64) -> Result<Complex64> {
        Ok(self.phi_ratio(n)? * n as f64)
    }

    /// `phi(n, F) / n`, which depends only on the radical of `n`.
    pub fn phi_ratio(&self, n: u64) -> Result<Complex64> {
        assert!(n >= 1, "phi is defined for n >= 1");
        factorize(n)
            .into_iter()
            .try_fold(ONE, |acc, (p, _)| Ok(acc * self.local_inverse_at_one(p)?))
    }

    /// `phi(n, F) = n sum_{m | n} alpha(m) / m`, summed over every divisor.
    pub fn phi_via_divisors(&self, n: u64) -> Result<Complex64> {
        assert!(n >= 1, "phi is defined for n >= 1");
        let mut divisors = vec![1u64];
        for (p, k) in factorize(n) {
            let len = divisors.len();
            let mut pk = 1;
            for _ in 0..k {
                pk *= p;
                for i in 0..len {
                    divisors.push(divisors[i] * pk);
                }
            }
        }
        divisors.sort_unstable();
        let mut acc = ComplexSum::new();
        for m in divisors {
            acc.add(self.alpha(m)? / m as f64);
        }
        Ok(acc.value() * n as f64)
    }

    /// Dirichlet coefficient `a_F(p^k)` from the local recurrence
    /// `a(p^k) = -e_1 a(p^{k-1}) - e_2 a(p^{k-2})`.
    pub fn coeff_prime_power(&self, p: u64, k: u32) -> Result<Complex64> {
        let (e1, e2) = self.local_coefficients(p)?;
        Ok(prime_power_coefficients(e1, e2, k)[k as usize])
    }

    /// `a_F(n)`, multiplicative extension of the prime-power coefficients.
    pub fn coeff(&self, n: u64) -> Result<Complex64> {
        assert!(n >= 1, "coefficients are indexed from 1");
        factorize(n)
            .into_iter()
            .try_fold(ONE, |acc, (p, k)| Ok(acc * self.coeff_prime_power(p, k)?))
    }

    /// Evaluator for the bulk paths, valid for every prime `<= bound`.
    pub fn local_evaluator(&self, bound: u64) -> Result<LocalEvaluator<'_>> {
        self.ensure_covers(bound)?;
        Ok(LocalEvaluator { kind: &self.kind })
    }
}

/// `a(p^0..=p^k)` for a local polynomial with coefficients `e1`, `e2`.
pub(crate) fn prime_power_coefficients(e1: Complex64, e2: Complex64, k: u32) -> Vec<Complex64> {
    let mut a = Vec::with_capacity(k as usize + 1);
    a.push(ONE);
    for j in 1..=k as usize {
        let prev2 = if j >= 2 { a[j - 2] } else { ZERO };
        a.push(-(e1 * a[j - 1]) - e2 * prev2);
    }
    a
}

/// Uncached local-factor evaluation whose coverage was checked up front.
#[derive(Clone, Copy)]
pub struct LocalEvaluator<'a> {
    kind: &'a ProductKind,
}

impl LocalEvaluator<'_> {
    #[inline]
    pub fn coefficients(&self, p: u64) -> (Complex64, Complex64) {
        match self.kind {
            ProductKind::Zeta => (-ONE, ZERO),
            ProductKind::Dirichlet(chi) => (-chi.eval_u64(p), ZERO),
            ProductKind::Gl2Twisted { source, chi } => {
                let c = chi.eval_u64(p);
                (-c * source.lambda_unchecked(p), c * c)
            }
        }
    }

    #[inline]
    pub fn inv_local(&self, p: u64) -> Complex64 {
        let pf = p as f64;
        match self.kind {
            ProductKind::Zeta => Complex64::new(1.0 - 1.0 / pf, 0.0),
            _ => {
                let (e1, e2) = self.coefficients(p);
                ONE + e1 / pf + e2 / (pf * pf)
            }
        }
    }

    #[inline]
    pub fn gamma(&self, p: u64) -> Complex64 {
        let (e1, e2) = self.coefficients(p);
        -(e1 + e2 / p as f64)
    }
}

impl fmt::Display for EulerProductSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ProductKind::Zeta => f.write_str("zeta"),
            ProductKind::Dirichlet(chi) => write!(f, "dirichlet:{chi}"),
            ProductKind::Gl2Twisted { source, chi } => {
                match source.kind() {
                    crate::sources::SourceKind::DeltaBuiltin { .. } => f.write_str("gl2:source=delta")?,
                    crate::sources::SourceKind::Table { path } => write!(f, "gl2:source=file:{}", path.display())?,
                }
                if chi.modulus() != 1 {
                    write!(f, ",chi={chi}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{gcd, totient};
    use crate::sources::eigen::parse_eigenvalues;
    use std::path::Path;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn chi4() -> DirichletCharacter {
        "q=4,index=1".parse().unwrap()
    }

    fn delta_chi5() -> EulerProductSpec {
        let src = Arc::new(EigenvalueSource::delta(2000).unwrap());
        EulerProductSpec::gl2_twisted(src, "q=5,index=1".parse().unwrap()).unwrap()
    }

    fn delta_untwisted() -> EulerProductSpec {
        let src = Arc::new(EigenvalueSource::delta(2000).unwrap());
        EulerProductSpec::gl2_twisted(src, DirichletCharacter::principal(1)).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn local_inverse_examples() {
        assert_eq!(EulerProductSpec::zeta().local_inverse_at_one(2).unwrap(), c(0.5, 0.0));
        let d = EulerProductSpec::dirichlet(chi4());
        assert!(close(d.local_inverse_at_one(3).unwrap(), c(4.0 / 3.0, 0.0), 1e-15));
        assert_eq!(delta_chi5().local_inverse_at_one(5).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn gamma_examples() {
        let z = EulerProductSpec::zeta();
        for p in [2u64, 3, 5, 101] {
            assert!(close(z.gamma_at(p).unwrap(), c(1.0, 0.0), 1e-15));
        }
        assert_eq!(delta_chi5().gamma_at(5).unwrap(), c(0.0, 0.0));
        let d = EulerProductSpec::dirichlet(chi4());
        assert!(close(d.gamma_at(3).unwrap(), c(-1.0, 0.0), 1e-15));
    }

    #[test]
    fn gamma_matches_definition_and_bound() {
        let spec = delta_chi5();
        for p in crate::arith::primes_up_to(1000) {
            let d = spec.local_data(p).unwrap();
            assert!(close(d.gamma, (ONE - d.inv_local) * p as f64, 1e-12));
            assert!(d.gamma.norm() <= 4.0);
            let lo = (1.0 - 1.0 / p as f64).powi(2) - 1e-12;
            let hi = (1.0 + 1.0 / p as f64).powi(2) + 1e-12;
            assert!((lo..=hi).contains(&d.inv_local.norm()), "p = {p}");
        }
    }

    #[test]
    fn alpha_examples() {
        let z = EulerProductSpec::zeta();
        assert_eq!(z.alpha(1).unwrap(), ONE);
        assert_eq!(z.alpha(6).unwrap(), ONE);
        assert_eq!(z.alpha(4).unwrap(), ZERO);
        assert_eq!(delta_chi5().alpha(1).unwrap(), ONE);
        assert_eq!(delta_chi5().alpha(4).unwrap(), ZERO);
        assert_eq!(z.alpha(30).unwrap(), -ONE);
    }

    #[test]
    fn phi_examples() {
        let z = EulerProductSpec::zeta();
        assert!(close(z.phi(12).unwrap(), c(4.0, 0.0), 1e-12));
        assert_eq!(z.phi(1).unwrap(), ONE);
        let d = EulerProductSpec::dirichlet(chi4());
        assert!(close(d.phi(3).unwrap(), c(4.0, 0.0), 1e-12));
        assert!(close(z.phi_via_divisors(12).unwrap(), c(4.0, 0.0), 1e-12));
        assert_eq!(d.phi_via_divisors(1).unwrap(), ONE);
        let g = delta_chi5();
        assert!(close(g.phi_via_divisors(2).unwrap(), g.phi(2).unwrap(), 1e-12));
    }

    #[test]
    fn zeta_reduces_to_classical_functions() {
        let z = EulerProductSpec::zeta();
        for n in 1..=3000u64 {
            assert_eq!(z.phi(n).unwrap().re.round() as u64, totient(n));
            let mu =
                crate::arith::factorize(n)
                    .iter()
                    .try_fold(1.0, |acc, &(_, k)| if k > 1 { None } else { Some(-acc) });
            assert_eq!(z.alpha(n).unwrap(), c(mu.unwrap_or(0.0), 0.0));
        }
    }

    #[test]
    fn two_paths_agree() {
        let specs = [
            EulerProductSpec::zeta(),
            EulerProductSpec::dirichlet(chi4()),
            delta_chi5(),
        ];
        for spec in &specs {
            for n in 1..=2000u64 {
                let a = spec.phi(n).unwrap();
                let b = spec.phi_via_divisors(n).unwrap();
                assert!(close(a, b, 1e-9 * n as f64), "{spec} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn coefficient_examples() {
        let z = EulerProductSpec::zeta();
        assert_eq!(z.coeff_prime_power(2, 3).unwrap(), ONE);
        assert_eq!(z.coeff(360).unwrap(), ONE);
        let g = delta_chi5();
        assert_eq!(g.coeff(1).unwrap(), ONE);
        for p in [2u64, 3, 7, 11, 13] {
            let lam = match g.kind() {
                ProductKind::Gl2Twisted { source, .. } => source.normalized_lambda(p).unwrap(),
                _ => unreachable!(),
            };
            let chi = "q=5,index=1".parse::<DirichletCharacter>().unwrap().eval_u64(p);
            assert!(close(g.coeff_prime_power(p, 1).unwrap(), chi * lam, 1e-15));
            let expect = chi * chi * lam * lam - chi * chi;
            assert!(close(g.coeff_prime_power(p, 2).unwrap(), expect, 1e-14));
        }
    }

    #[test]
    fn untwisted_delta_coefficients_are_normalized_tau() {
        let g = delta_untwisted();
        let tau = crate::sources::tau_qexpansion(1000).unwrap();
        for n in 1..=1000u64 {
            let t = num_traits::ToPrimitive::to_f64(tau.get(n as usize).unwrap()).unwrap();
            let expect = t / (n as f64).powf(5.5);
            assert!(
                (g.coeff(n).unwrap().re - expect).abs() <= 1e-12 * (1.0 + expect.abs()),
                "n = {n}"
            );
        }
        let l2 = g.coeff(2).unwrap();
        let l3 = g.coeff(3).unwrap();
        assert!(close(g.coeff(6).unwrap(), l2 * l3, 1e-15));
    }

    #[test]
    fn multiplicativity_on_coprime_pairs() {
        let specs = [
            EulerProductSpec::zeta(),
            EulerProductSpec::dirichlet(chi4()),
            delta_chi5(),
        ];
        for spec in &specs {
            let alpha: Vec<Complex64> = (1..=1000).map(|n| spec.alpha(n).unwrap()).collect();
            let coeff: Vec<Complex64> = (1..=1000).map(|n| spec.coeff(n).unwrap()).collect();
            for m in 1..=1000u64 {
                for n in 1..=(1000 / m) {
                    if gcd(m, n) == 1 {
                        let mn = (m * n - 1) as usize;
                        let (i, j) = ((m - 1) as usize, (n - 1) as usize);
                        assert!(close(alpha[mn], alpha[i] * alpha[j], 1e-12));
                        assert!(close(coeff[mn], coeff[i] * coeff[j], 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn gl2_needs_primitive_twist_and_coverage() {
        let src = Arc::new(EigenvalueSource::delta(100).unwrap());
        let imprimitive = DirichletCharacter::principal(5);
        assert!(matches!(
            EulerProductSpec::gl2_twisted(src.clone(), imprimitive),
            Err(Error::Domain(_))
        ));
        let g = EulerProductSpec::gl2_twisted(src, DirichletCharacter::principal(1)).unwrap();
        assert!(matches!(
            g.phi(101 * 2),
            Err(Error::DataGap {
                prime: 101,
                coverage: 97
            })
        ));
        assert!(matches!(g.alpha(103), Err(Error::DataGap { prime: 103, .. })));
        assert!(g.local_evaluator(100).is_ok());
        assert!(g.local_evaluator(101).is_err());
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(EulerProductSpec::zeta().to_string(), "zeta");
        assert_eq!(EulerProductSpec::dirichlet(chi4()).to_string(), "dirichlet:q=4,index=1");
        assert_eq!(delta_chi5().to_string(), "gl2:source=delta,chi=q=5,index=1");
        let src = parse_eigenvalues(Path::new("m.txt"), "2,0.5\n", false).unwrap();
        let g = EulerProductSpec::gl2_twisted(Arc::new(src), DirichletCharacter::principal(1)).unwrap();
        assert_eq!(g.to_string(), "gl2:source=file:m.txt");
    }

    #[test]
    fn cache_is_shared_across_threads() {
        let spec = delta_chi5();
        std::thread::scope(|s| {
            for t in 0..4u64 {
                let spec = &spec;
                s.spawn(move || {
                    for n in 1..500u64 {
                        spec.phi(n + t).unwrap();
                    }
                });
            }
        });
        assert!(spec.cache.read().unwrap().len() > 50);
    }
}
