//! Embedded acceptance checks, runnable from the command line.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_complex::Complex64;

use crate::analysis::{alpha_series_partial, decay_trend, h_boundedness_report, h_values, ResidualReport};
use crate::arith::{factorize, primes_up_to, totient};
use crate::error::{Error, Result};
use crate::euler::{c_constant, c_constant_within_coverage, ConstantResult, EulerProductSpec};
use crate::sieve::{checkpoints_csv, geometric_checkpoints, scan, DEFAULT_MEMORY_CAP};
use crate::sources::{load_eigenvalues, satisfies_deligne, tau_qexpansion, EigenvalueSource};

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Skip the largest runs.
    pub quick: bool,
    /// Also run the twisted scan on this eigenvalue table.
    pub eigenvalue_file: Option<PathBuf>,
    pub allow_ramanujan_violations: bool,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: String,
    pub name: &'static str,
    /// `None` when skipped.
    pub passed: Option<bool>,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    pub fn status(&self) -> &'static str {
        match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        }
    }
}

struct Check {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: impl Into<String>) -> Result<Check> {
    Ok(Check {
        passed,
        detail: detail.into(),
    })
}

fn timed(id: &str, name: &'static str, limit: Option<Duration>, f: impl FnOnce() -> Result<Check>) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (passed, mut detail) = match result {
        Ok(c) => (c.passed, c.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let mut passed = passed;
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; took {:.2?}, limit {:.0?}", elapsed, limit));
        }
    }
    Outcome {
        id: id.to_string(),
        name,
        passed: Some(passed),
        detail,
        elapsed,
    }
}

fn skipped(id: &str, name: &'static str, why: &str) -> Outcome {
    Outcome {
        id: id.to_string(),
        name,
        passed: None,
        detail: why.to_string(),
        elapsed: Duration::ZERO,
    }
}

fn delta_chi5() -> Result<EulerProductSpec> {
    let src = Arc::new(EigenvalueSource::delta(10_000)?);
    EulerProductSpec::gl2_twisted(src, "q=5,index=1".parse()?)
}

fn mobius(n: u64) -> i64 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

struct ScanRun {
    report: ResidualReport,
}

fn run_scan(spec: &EulerProductSpec, x: u64, c: ConstantResult) -> Result<ScanRun> {
    let cps = geometric_checkpoints(x);
    let rows = scan(spec, x, &cps, &c)?;
    Ok(ScanRun {
        report: ResidualReport::new(spec.to_string(), c, &rows),
    })
}

/// Runs every check and returns one row per criterion.
pub fn run(opts: &SelftestOptions) -> Vec<Outcome> {
    let sec = Duration::from_secs;
    let mut out = Vec::new();
    let mut cross_checks: Vec<(String, f64)> = Vec::new();

    out.push(timed("1", "constant for zeta is 3/pi^2", Some(sec(1)), || {
        let c = c_constant(&EulerProductSpec::zeta(), 1e-12)?;
        let expect = 3.0 / (PI * PI);
        let err = (c.value.re - expect).abs() / expect;
        check(
            err <= 1e-11 && c.value.im == 0.0,
            format!("C = {:.17e}, relative error {err:.1e}", c.value.re),
        )
    }));

    out.push(timed(
        "2",
        "constant for chi mod 4 matches 1/(2 Catalan)",
        Some(sec(1)),
        || {
            let chi = "q=4,index=1".parse()?;
            let c = c_constant(&EulerProductSpec::dirichlet(chi), 1e-12)?;
            // Averaging neighbouring partial sums of an alternating series.
            let mut s = 0.0;
            let mut prev = 0.0;
            for k in 0..200_000u64 {
                prev = s;
                let t = 1.0 / ((2 * k + 1) as f64).powi(2);
                s += if k % 2 == 0 { t } else { -t };
            }
            let catalan = 0.5 * (s + prev);
            let err = (c.value - Complex64::new(0.5 / catalan, 0.0)).norm();
            check(err <= 1e-9, format!("C = {:.17e}, |diff| {err:.1e}", c.value.re))
        },
    ));

    out.push(timed(
        "3",
        "zeta gives the classical totient and Moebius",
        Some(sec(5)),
        || {
            let z = EulerProductSpec::zeta();
            let mut bad = Vec::new();
            for n in 1..=100_000u64 {
                let phi = z.phi(n)?;
                let alpha = z.alpha(n)?;
                if phi.re.round() as u64 != totient(n)
                    || phi.im != 0.0
                    || alpha != Complex64::new(mobius(n) as f64, 0.0)
                {
                    bad.push(n);
                }
            }
            check(
                bad.is_empty(),
                format!("{} mismatches up to 1e5{}", bad.len(), first(&bad)),
            )
        },
    ));

    out.push(timed(
        "4",
        "product and divisor-sum routes agree",
        Some(sec(30)),
        || {
            let specs = [
                EulerProductSpec::zeta(),
                EulerProductSpec::dirichlet("q=5,index=1".parse()?),
                delta_chi5()?,
            ];
            let mut worst: f64 = 0.0;
            for spec in &specs {
                for n in 1..=10_000u64 {
                    worst = worst.max(rel(spec.phi_via_divisors(n)?, spec.phi(n)?));
                }
            }
            check(worst <= 1e-9, format!("worst relative gap {worst:.1e}"))
        },
    ));

    out.push(timed("5", "sum alpha(n)/n^2 approaches 2C", Some(sec(10)), || {
        let z = EulerProductSpec::zeta();
        let cz = c_constant(&z, 1e-12)?;
        let s = alpha_series_partial(&z, 1_000_000, &cz)?;
        let gz = (s.partial.re - 6.0 / (PI * PI)).abs();
        let g = delta_chi5()?;
        let cg = c_constant_within_coverage(&g, 1e-12)?;
        let small = alpha_series_partial(&g, 1000, &cg)?.gap;
        let large = alpha_series_partial(&g, 10_000, &cg)?.gap;
        check(
            gz < 2e-6 && large < small,
            format!("zeta gap {gz:.2e}; twisted gap {small:.2e} -> {large:.2e}"),
        )
    }));

    out.push(timed(
        "6",
        "h is the unit for zeta and bounded when twisted",
        None,
        || {
            let hz = h_values(&EulerProductSpec::zeta(), 10_000)?;
            let unit = hz[0] == Complex64::new(1.0, 0.0) && hz[1..].iter().all(|v| *v == Complex64::new(0.0, 0.0));
            let hg = h_values(&delta_chi5()?, 10_000)?;
            let (max, at) = h_boundedness_report(&hg, 10_000)?;
            check(
                unit && max <= 1.0 + 1e-12,
                format!("zeta h = delta_1: {unit}; twisted max |h| = {max:.6} at n = {at}"),
            )
        },
    ));

    let zeta_x = if opts.quick { 1_000_000 } else { 10_000_000 };
    let c8 = timed("8", "zeta residual decays", Some(sec(120)), || {
        let z = EulerProductSpec::zeta();
        let run = run_scan(&z, zeta_x, c_constant(&z, 1e-12)?)?;
        cross_checks.push((run.report.spec.clone(), run.report.max_cross_check));
        let fit = run.report.fit.ok_or(Error::InsufficientPoints { needed: 3, have: 0 })?;
        let trend = decay_trend(&run.report.series(), 1000).ok_or(Error::InsufficientPoints { needed: 1, have: 0 })?;
        let peak_first = trend.argmax_x == trend.first_x && trend.monotonicity_violations <= 2;
        check(
            fit.slope < 0.0 && peak_first,
            format!(
                "X = {zeta_x}: slope {:.3}; max |R| over x >= 1e3 is {:.3e} at x = {} with {} rises",
                fit.slope, trend.max_abs_r, trend.argmax_x, trend.monotonicity_violations
            ),
        )
    });

    let c9 = timed("9", "twisted residual slope is negative", Some(sec(30)), || {
        let g = delta_chi5()?;
        let run = run_scan(&g, 10_000, c_constant_within_coverage(&g, 1e-12)?)?;
        cross_checks.push((run.report.spec.clone(), run.report.max_cross_check));
        let fit = run.report.fit.ok_or(Error::InsufficientPoints { needed: 3, have: 0 })?;
        let last = run.report.points.last().map(|p| p.r.norm()).unwrap_or(f64::NAN);
        check(fit.slope < 0.0, format!("slope {:.4}; |R(1e4)| = {last:.4}", fit.slope))
    });

    let c9b = opts.eigenvalue_file.as_ref().map(|path| {
        timed("9b", "twisted residual from an eigenvalue file", Some(sec(30)), || {
            let src = load_eigenvalues(path, opts.allow_ramanujan_violations)
                .map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
            let x = src.coverage_bound().min(10_000);
            let g = EulerProductSpec::gl2_twisted(Arc::new(src), "q=5,index=1".parse()?)?;
            let run = run_scan(&g, x, c_constant_within_coverage(&g, 1e-12)?)?;
            cross_checks.push((run.report.spec.clone(), run.report.max_cross_check));
            let fit = run.report.fit.ok_or(Error::InsufficientPoints { needed: 3, have: 0 })?;
            check(
                fit.slope < 0.0,
                format!("{}: X = {x}, slope {:.4}", path.display(), fit.slope),
            )
        })
    });

    let c7 = timed("7", "smoothed sum identity at every checkpoint", None, || {
        let d = EulerProductSpec::dirichlet("q=4,index=1".parse()?);
        let run = run_scan(&d, 100_000, c_constant(&d, 1e-12)?)?;
        cross_checks.push((run.report.spec.clone(), run.report.max_cross_check));
        let worst = cross_checks.iter().map(|c| c.1).fold(0.0, f64::max);
        check(
            worst <= 1e-9,
            format!("{} scans, worst scaled gap {worst:.1e}", cross_checks.len()),
        )
    });
    out.push(c7);
    out.push(c8);
    out.push(c9);
    if let Some(c) = c9b {
        out.push(c);
    }

    out.push(timed("10", "tau values and the Deligne bound", None, || {
        let t = tau_qexpansion(10_000)?;
        let tau = |n: usize| t.get(n).cloned().unwrap_or_default();
        let small = tau(2) == BigInt::from(-24)
            && tau(3) == BigInt::from(252)
            && tau(5) == BigInt::from(4830)
            && tau(6) == tau(2) * tau(3);
        let bad: Vec<u64> = primes_up_to(10_000)
            .into_iter()
            .filter(|&p| !satisfies_deligne(&tau(p as usize), p))
            .collect();
        check(
            small && bad.is_empty(),
            format!("small values ok: {small}; Deligne failures: {}", bad.len()),
        )
    }));

    out.push(timed("11", "scan output is independent of thread count", None, || {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12)?;
        let cps = geometric_checkpoints(1_000_000);
        let mut outputs = Vec::new();
        for threads in [1, 4, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Domain(e.to_string()))?;
            let rows = pool.install(|| scan(&z, 1_000_000, &cps, &c))?;
            outputs.push(checkpoints_csv(&rows));
        }
        let same = outputs.windows(2).all(|w| w[0] == w[1]);
        check(same, format!("threads 1/4/8 identical: {same}"))
    }));

    if opts.quick {
        out.push(skipped(
            "12",
            "scan to 1e8 within time and memory",
            "skipped in quick mode",
        ));
    } else {
        out.push(timed(
            "12",
            "scan to 1e8 within time and memory",
            Some(sec(120)),
            || {
                let x = 100_000_000;
                let cps = geometric_checkpoints(x);
                let threads = rayon::current_num_threads();
                let need = crate::sieve::check_scan_memory(x, cps.len(), threads, DEFAULT_MEMORY_CAP)?;
                let z = EulerProductSpec::zeta();
                let rows = scan(&z, x, &cps, &c_constant(&z, 1e-12)?)?;
                check(
                    rows.len() == cps.len(),
                    format!("{} checkpoints, estimated {} MiB", rows.len(), need >> 20),
                )
            },
        ));
    }
    out
}

fn first(v: &[u64]) -> String {
    v.first().map(|n| format!(", first at n = {n}")).unwrap_or_default()
}

/// Fixed-width table, one row per criterion.
pub fn format_table(rows: &[Outcome]) -> String {
    let mut s = String::new();
    for r in rows {
        s.push_str(&format!(
            "{:>3}  {}  {:<48} {:>8.2?}  {}\n",
            r.id,
            r.status(),
            r.name,
            r.elapsed,
            r.detail
        ));
    }
    s
}
