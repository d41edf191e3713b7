//! Hecke eigenvalue suppliers: the built-in discriminant form and external tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::tau::{self, TauSeries};
use crate::arith::{is_prime, next_prime};
use crate::error::{Error, Result};

/// Default number of tau coefficients for the built-in source.
pub const DEFAULT_DELTA_TERMS: usize = 10_000;

/// Entries with `|lambda| > 2 + RAMANUJAN_SLACK` are Ramanujan-bound violations.
pub const RAMANUJAN_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    DeltaBuiltin { terms: usize },
    Table { path: PathBuf },
}

#[derive(Debug, Clone)]
pub struct EigenvalueSource {
    kind: SourceKind,
    coverage_bound: u64,
    /// `lambda[p]` for primes `p <= coverage_bound`; other slots are zero.
    lambda: Vec<f64>,
    /// Table entries beyond the contiguous coverage, kept for reporting.
    extra: BTreeMap<u64, f64>,
    violations: Vec<(u64, f64)>,
}

impl EigenvalueSource {
    /// Normalized eigenvalues of the discriminant form from `terms` tau coefficients.
    pub fn delta(terms: usize) -> Result<Self> {
        let series = tau::tau_qexpansion(terms)?;
        Ok(Self::from_tau(&series))
    }

    pub fn from_tau(series: &TauSeries) -> Self {
        let n = series.len();
        let mut lambda = vec![0.0; n + 1];
        let mut coverage = 0;
        for (p, slot) in lambda.iter_mut().enumerate().skip(2) {
            if is_prime(p as u64) {
                let t = series.get(p).expect("index within series");
                debug_assert!(tau::satisfies_deligne(t, p as u64));
                *slot = tau::normalize(t, p as u64);
                coverage = p as u64;
            }
        }
        lambda.truncate(coverage as usize + 1);
        Self {
            kind: SourceKind::DeltaBuiltin { terms: n },
            coverage_bound: coverage,
            lambda,
            extra: BTreeMap::new(),
            violations: Vec::new(),
        }
    }

    /// Table from `(prime, lambda)` pairs; coverage is the largest `P` with every
    /// prime `<= P` present.
    pub fn from_entries(
        path: PathBuf,
        entries: impl IntoIterator<Item = (u64, f64)>,
        allow_violations: bool,
    ) -> Result<Self> {
        let map: BTreeMap<u64, f64> = entries.into_iter().collect();
        let violations: Vec<(u64, f64)> = map
            .iter()
            .filter(|(_, l)| l.abs() > 2.0 + RAMANUJAN_SLACK)
            .map(|(&p, &l)| (p, l))
            .collect();
        if !violations.is_empty() && !allow_violations {
            return Err(Error::RamanujanViolation {
                path,
                entries: violations,
            });
        }
        let mut coverage = 0u64;
        let mut p = 2u64;
        while map.contains_key(&p) {
            coverage = p;
            p = next_prime(p);
        }
        let mut lambda = vec![0.0; coverage as usize + 1];
        let mut extra = BTreeMap::new();
        for (&p, &l) in &map {
            if p <= coverage {
                lambda[p as usize] = l;
            } else {
                extra.insert(p, l);
            }
        }
        Ok(Self {
            kind: SourceKind::Table { path },
            coverage_bound: coverage,
            lambda,
            extra,
            violations,
        })
    }

    pub fn kind(&self) -> &SourceKind {
        &self.kind
    }

    /// Largest prime `P` such that every prime `<= P` is covered.
    pub fn coverage_bound(&self) -> u64 {
        self.coverage_bound
    }

    /// Ramanujan-bound violations that were admitted by the override flag.
    pub fn violations(&self) -> &[(u64, f64)] {
        &self.violations
    }

    /// Table entries present beyond the contiguous coverage.
    pub fn uncovered_entries(&self) -> usize {
        self.extra.len()
    }

    /// `lambda_f(p)`; errors for primes past the coverage bound.
    pub fn normalized_lambda(&self, p: u64) -> Result<f64> {
        if p > self.coverage_bound {
            return Err(Error::DataGap {
                prime: p,
                coverage: self.coverage_bound,
            });
        }
        Ok(self.lambda[p as usize])
    }

    /// Unchecked lookup for the bulk paths, which verify coverage up front.
    #[inline]
    pub(crate) fn lambda_unchecked(&self, p: u64) -> f64 {
        self.lambda[p as usize]
    }

    /// First prime past the coverage bound.
    pub fn first_uncovered_prime(&self) -> u64 {
        next_prime(self.coverage_bound.max(1))
    }

    /// Fails with a data-gap error if some prime `<= x` is not covered.
    pub fn ensure_covers(&self, x: u64) -> Result<()> {
        let first = self.first_uncovered_prime();
        if first <= x {
            return Err(Error::DataGap {
                prime: first,
                coverage: self.coverage_bound,
            });
        }
        Ok(())
    }
}

/// Reads `<prime>,<lambda>` records; `#` comments and blank lines are skipped.
pub fn load_eigenvalues(path: &Path, allow_violations: bool) -> Result<EigenvalueSource> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_eigenvalues(path, &text, allow_violations)
}

pub fn parse_eigenvalues(path: &Path, text: &str, allow_violations: bool) -> Result<EigenvalueSource> {
    let fail = |line: usize, reason: String| Error::FileFormat {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut entries: BTreeMap<u64, f64> = BTreeMap::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (p_str, l_str) = line
            .split_once(',')
            .ok_or_else(|| fail(line_no, format!("expected `<prime>,<lambda>`, got `{line}`")))?;
        let p: u64 = p_str
            .trim()
            .parse()
            .map_err(|_| fail(line_no, format!("`{}` is not a positive integer", p_str.trim())))?;
        if !is_prime(p) {
            return Err(fail(line_no, format!("{p} is not prime")));
        }
        let l: f64 = l_str
            .trim()
            .parse()
            .map_err(|_| fail(line_no, format!("`{}` is not a decimal number", l_str.trim())))?;
        if !l.is_finite() {
            return Err(fail(line_no, format!("lambda for p = {p} is not finite")));
        }
        if entries.insert(p, l).is_some() {
            return Err(fail(line_no, format!("duplicate entry for prime {p}")));
        }
    }
    EigenvalueSource::from_entries(path.to_path_buf(), entries, allow_violations)
}

/// Roots of `x^2 - lambda chi x + chi^2`, i.e. the Satake parameters of the
/// twisted local factor. Diagnostic only.
pub fn gl2_local_roots(lambda_p: f64, chi_p: Complex64) -> (Complex64, Complex64) {
    let b = chi_p * lambda_p;
    let c = chi_p * chi_p;
    let disc = (b * b - c * 4.0).sqrt();
    // Pick the larger root first to avoid cancellation, recover the other from the product.
    let r1 = if (b + disc).norm() >= (b - disc).norm() {
        (b + disc) / 2.0
    } else {
        (b - disc) / 2.0
    };
    if r1.norm() == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    (r1, c / r1)
}
