//! Numerical checks built on the scan and the bulk coefficient tables:
//! the residual `R(x) = E0(x) - E(x) / x` and its decay against
//! `sqrt(log x)`, the series `sum alpha(n) / n^2 = 2 C(F)`, the convolution
//! `h = a_F * alpha` and report serialization.

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map, Number, Value};

use crate::error::{Error, Result};
use crate::euler::{ConstantMethod, ConstantResult, EulerProductSpec};
use crate::sieve::{build_spf, bulk_alpha, bulk_coeff, fmt17, SpfTable, SummationCheckpoint, DEFAULT_MEMORY_CAP};
use crate::summation::ComplexSum;

/// Residuals at or below this magnitude are left out of the fit.
pub const FIT_FLOOR: f64 = 1e-14;

pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// `(x, R(x))` per checkpoint.
pub fn residual_series(checkpoints: &[SummationCheckpoint]) -> Vec<(u64, Complex64)> {
    checkpoints.iter().map(|c| (c.x, c.e0 - c.e / c.x as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Points that entered the fit.
    pub used: usize,
    /// Points dropped because `|R| <= FIT_FLOOR`.
    pub excluded: usize,
}

/// Least squares of `log|R|` against `sqrt(log x)`.
pub fn decay_fit(series: &[(u64, Complex64)]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = fit_points(series).collect();
    let excluded = series.len() - pts.len();
    if pts.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            have: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("decay fit needs at least two distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    Ok(DecayFit {
        slope,
        intercept: my - slope * mx,
        used: pts.len(),
        excluded,
    })
}

/// `(sqrt(log x), log|R|)` for the points that enter the fit.
pub fn fit_points(series: &[(u64, Complex64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    series
        .iter()
        .filter(|(_, r)| r.norm() > FIT_FLOOR)
        .map(|&(x, r)| ((x as f64).ln().sqrt(), r.norm().ln()))
}

/// Where `|R|` peaks over `x >= x_min` and how often it rises between
/// consecutive checkpoints there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayTrend {
    pub max_abs_r: f64,
    pub argmax_x: u64,
    /// Smallest checkpoint considered.
    pub first_x: u64,
    pub monotonicity_violations: usize,
}

pub fn decay_trend(series: &[(u64, Complex64)], x_min: u64) -> Option<DecayTrend> {
    let tail: Vec<(u64, f64)> = series
        .iter()
        .filter(|(x, _)| *x >= x_min)
        .map(|&(x, r)| (x, r.norm()))
        .collect();
    let first_x = tail.first()?.0;
    let (argmax_x, max_abs_r) =
        tail.iter().copied().fold(
            (first_x, f64::NEG_INFINITY),
            |best, (x, a)| if a > best.1 { (x, a) } else { best },
        );
    let monotonicity_violations = tail.windows(2).filter(|w| w[1].1 > w[0].1).count();
    Some(DecayTrend {
        max_abs_r,
        argmax_x,
        first_x,
        monotonicity_violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPoint {
    pub x: u64,
    pub r: Complex64,
    pub smoothed: Complex64,
    /// Contribution of the constant's tail bound to `R`: `tail_bound |C| x`.
    pub r_uncertainty: f64,
    /// Contribution of the constant's tail bound to `E`: `tail_bound |C| x^2`.
    pub e_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub spec: String,
    pub constant: ConstantResult,
    pub points: Vec<ResidualPoint>,
    pub fit: Option<DecayFit>,
    pub trend: Option<DecayTrend>,
    /// Largest `|R - (smoothed - C x)| / (1 + |smoothed|)` over all points.
    pub max_cross_check: f64,
}

impl ResidualReport {
    pub fn new(spec: impl Into<String>, constant: ConstantResult, checkpoints: &[SummationCheckpoint]) -> Self {
        let series = residual_series(checkpoints);
        let c = constant.value;
        let mut max_cross_check: f64 = 0.0;
        let points = checkpoints
            .iter()
            .zip(&series)
            .map(|(cp, &(x, r))| {
                let xf = x as f64;
                let alt = cp.smoothed - c * xf;
                max_cross_check = max_cross_check.max((r - alt).norm() / (1.0 + cp.smoothed.norm()));
                ResidualPoint {
                    x,
                    r,
                    smoothed: cp.smoothed,
                    r_uncertainty: constant.tail_bound * c.norm() * xf,
                    e_uncertainty: constant.tail_bound * c.norm() * xf * xf,
                }
            })
            .collect();
        Self {
            spec: spec.into(),
            constant,
            points,
            fit: decay_fit(&series).ok(),
            trend: decay_trend(&series, 0),
            max_cross_check,
        }
    }

    pub fn series(&self) -> Vec<(u64, Complex64)> {
        self.points.iter().map(|p| (p.x, p.r)).collect()
    }

    /// Whether every point satisfies `R = smoothed - C x` to `1e-9 (1 + |smoothed|)`.
    pub fn cross_check_ok(&self) -> bool {
        self.max_cross_check <= 1e-9
    }
}

fn spf_for(n: u64) -> Result<SpfTable> {
    build_spf(n.max(2), DEFAULT_MEMORY_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPartial {
    pub n: u64,
    pub partial: Complex64,
    pub target: Complex64,
    pub gap: f64,
}

/// `sum_{n <= N} alpha(n) / n^2` against `2 C(F)`.
pub fn alpha_series_partial(spec: &EulerProductSpec, n_max: u64, c: &ConstantResult) -> Result<SeriesPartial> {
    let table = spf_for(n_max)?;
    let alpha = bulk_alpha(spec, &table)?;
    Ok(alpha_series_from(&alpha, n_max, c))
}

fn alpha_series_from(alpha: &[Complex64], n_max: u64, c: &ConstantResult) -> SeriesPartial {
    let mut acc = ComplexSum::new();
    for (i, a) in alpha.iter().take(n_max as usize).enumerate() {
        if *a != Complex64::new(0.0, 0.0) {
            let n = (i + 1) as f64;
            acc.add(a / (n * n));
        }
    }
    let partial = acc.value();
    let target = c.value * 2.0;
    SeriesPartial {
        n: n_max,
        partial,
        target,
        gap: (partial - target).norm(),
    }
}

/// `h(n) = sum_{d | n} alpha(d) a_F(n / d)` for `n = 1..=N` (element `i` holds `n = i + 1`).
pub fn h_values(spec: &EulerProductSpec, n_max: u64) -> Result<Vec<Complex64>> {
    let table = spf_for(n_max)?;
    let alpha = bulk_alpha(spec, &table)?;
    let coeff = bulk_coeff(spec, &table)?;
    Ok(convolve(&alpha, &coeff, n_max as usize))
}

/// Output strips are independent; within a strip each `h(n)` accumulates in
/// increasing `d`, so the result is the same for any thread count.
fn convolve(alpha: &[Complex64], coeff: &[Complex64], n: usize) -> Vec<Complex64> {
    const STRIP: usize = 1 << 14;
    let zero = Complex64::new(0.0, 0.0);
    let mut h = vec![zero; n];
    h.par_chunks_mut(STRIP).enumerate().for_each(|(ci, chunk)| {
        let lo = ci * STRIP + 1;
        let hi = lo + chunk.len() - 1;
        for d in 1..=hi {
            let a = alpha[d - 1];
            if a == zero {
                continue;
            }
            let kmin = lo.div_ceil(d);
            for k in kmin..=hi / d {
                chunk[d * k - lo] += a * coeff[k - 1];
            }
        }
    });
    h
}

/// Largest `|h(n)|` over squarefree `n <= N`, and where it occurs.
pub fn h_boundedness_report(h: &[Complex64], n_max: u64) -> Result<(f64, u64)> {
    let n_max = n_max.min(h.len() as u64);
    if n_max == 0 {
        return Err(Error::Domain("h table is empty".into()));
    }
    let table = spf_for(n_max)?;
    let mut best = (f64::NEG_INFINITY, 1u64);
    for n in 1..=n_max {
        if n == 1 || table.is_squarefree(n) {
            let v = h[(n - 1) as usize].norm();
            if v > best.0 {
                best = (v, n);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantIdentity {
    pub n: u64,
    /// `sum_{n <= N} h(n) / n^2`.
    pub sum_h: Complex64,
    /// `sum_{n <= N} a_F(n) / n^2`.
    pub sum_coeff: Complex64,
    pub ratio: Complex64,
    /// `|ratio - 2 C|`.
    pub ratio_gap: f64,
    /// `|sum alpha(n) / n^2 - 2 C|`.
    pub alpha_gap: f64,
}

/// Compares `H(2) / F(2)` and `sum alpha(n) / n^2` (both truncated at `N`) with `2 C`.
pub fn verify_constant_identity(spec: &EulerProductSpec, n_max: u64, c: &ConstantResult) -> Result<ConstantIdentity> {
    let table = spf_for(n_max)?;
    let alpha = bulk_alpha(spec, &table)?;
    let coeff = bulk_coeff(spec, &table)?;
    let h = convolve(&alpha, &coeff, n_max as usize);
    constant_identity_from(&alpha, &coeff, &h, n_max, c)
}

fn constant_identity_from(
    alpha: &[Complex64],
    coeff: &[Complex64],
    h: &[Complex64],
    n_max: u64,
    c: &ConstantResult,
) -> Result<ConstantIdentity> {
    let weighted = |v: &[Complex64]| -> Complex64 {
        v.iter()
            .take(n_max as usize)
            .enumerate()
            .map(|(i, z)| {
                let n = (i + 1) as f64;
                z / (n * n)
            })
            .collect::<ComplexSum>()
            .value()
    };
    let sum_h = weighted(h);
    let sum_coeff = weighted(coeff);
    if sum_coeff.norm() < 1e-6 {
        return Err(Error::Domain(format!(
            "sum of a_F(n) / n^2 up to {n_max} is {sum_coeff}, too small to divide by"
        )));
    }
    let ratio = sum_h / sum_coeff;
    let target = c.value * 2.0;
    let alpha_gap = alpha_series_from(alpha, n_max, c).gap;
    Ok(ConstantIdentity {
        n: n_max,
        sum_h,
        sum_coeff,
        ratio,
        ratio_gap: (ratio - target).norm(),
        alpha_gap,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    pub spec: String,
    pub constant: ConstantResult,
    pub series: SeriesPartial,
    pub identity: ConstantIdentity,
    pub h_max_squarefree: f64,
    pub h_argmax: u64,
    /// `h(1..=min(N, 100))`.
    pub h_table: Vec<Complex64>,
}

pub fn series_report(spec: &EulerProductSpec, n_max: u64, c: &ConstantResult) -> Result<SeriesReport> {
    if n_max == 0 {
        return Err(Error::Domain("series truncation must be at least 1".into()));
    }
    let table = spf_for(n_max)?;
    let alpha = bulk_alpha(spec, &table)?;
    let coeff = bulk_coeff(spec, &table)?;
    let h = convolve(&alpha, &coeff, n_max as usize);
    let identity = constant_identity_from(&alpha, &coeff, &h, n_max, c)?;
    let (h_max_squarefree, h_argmax) = h_boundedness_report(&h, n_max)?;
    Ok(SeriesReport {
        spec: spec.to_string(),
        constant: *c,
        series: alpha_series_from(&alpha, n_max, c),
        identity,
        h_max_squarefree,
        h_argmax,
        h_table: h.iter().take(100).copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    PlotData,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plot-data" => Ok(Self::PlotData),
            _ => Err(Error::parse("report format", s, "expected csv, json or plot-data")),
        }
    }
}

pub enum Report<'a> {
    Residual(&'a ResidualReport),
    Series(&'a SeriesReport),
}

/// Deterministic serialization; every real number carries 17 significant digits.
pub fn emit_report(report: Report<'_>, format: ReportFormat) -> Vec<u8> {
    match (report, format) {
        (Report::Residual(r), ReportFormat::Csv) => residual_csv(r),
        (Report::Residual(r), ReportFormat::Json) => to_json_bytes(residual_json(r)),
        (Report::Residual(r), ReportFormat::PlotData) => residual_plot(r),
        (Report::Series(s), ReportFormat::Csv) => series_csv(s),
        (Report::Series(s), ReportFormat::Json) => to_json_bytes(series_json(s)),
        (Report::Series(s), ReportFormat::PlotData) => series_plot(s),
    }
    .into_bytes()
}

fn to_json_bytes(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::Number(fmt17(v).parse::<Number>().expect("formatted float is valid JSON"))
    } else {
        Value::Null
    }
}

fn constant_json(c: &ConstantResult) -> Value {
    json!({
        "value_re": num(c.value.re),
        "value_im": num(c.value.im),
        "cutoff": c.cutoff,
        "tail_bound": num(c.tail_bound),
        "method": match c.method {
            ConstantMethod::EulerProduct => "euler-product",
            ConstantMethod::LValue => "l-value",
        },
    })
}

pub const RESIDUAL_CSV_HEADER: &str = "x,R_re,R_im,abs_R,R_uncertainty";

fn residual_csv(r: &ResidualReport) -> String {
    let mut out = String::from(RESIDUAL_CSV_HEADER);
    out.push('\n');
    for p in &r.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.x,
            fmt17(p.r.re),
            fmt17(p.r.im),
            fmt17(p.r.norm()),
            fmt17(p.r_uncertainty)
        ));
    }
    out
}

fn residual_json(r: &ResidualReport) -> Value {
    let points: Vec<Value> = r
        .points
        .iter()
        .map(|p| {
            json!({
                "x": p.x,
                "R_re": num(p.r.re),
                "R_im": num(p.r.im),
                "abs_R": num(p.r.norm()),
                "smoothed_re": num(p.smoothed.re),
                "smoothed_im": num(p.smoothed.im),
                "R_uncertainty": num(p.r_uncertainty),
                "E_uncertainty": num(p.e_uncertainty),
            })
        })
        .collect();
    let fit = match r.fit {
        Some(f) => json!({
            "slope": num(f.slope),
            "intercept": num(f.intercept),
            "used": f.used,
            "excluded": f.excluded,
        }),
        None => Value::Null,
    };
    let trend = match r.trend {
        Some(t) => json!({
            "max_abs_R": num(t.max_abs_r),
            "argmax_x": t.argmax_x,
            "monotonicity_violations": t.monotonicity_violations,
        }),
        None => Value::Null,
    };
    let mut m = Map::new();
    m.insert("schema".into(), json!(REPORT_SCHEMA_VERSION));
    m.insert("report".into(), json!("residual"));
    m.insert("spec".into(), json!(r.spec));
    m.insert("constant".into(), constant_json(&r.constant));
    m.insert("checkpoints".into(), Value::Array(points));
    m.insert("fit".into(), fit);
    m.insert("trend".into(), trend);
    m.insert("max_cross_check".into(), num(r.max_cross_check));
    Value::Object(m)
}

fn residual_plot(r: &ResidualReport) -> String {
    let mut out = String::from("# sqrt_log_x log_abs_R\n");
    for (a, b) in fit_points(&r.series()) {
        out.push_str(&format!("{} {}\n", fmt17(a), fmt17(b)));
    }
    out
}

pub const SERIES_CSV_HEADER: &str = "n,h_re,h_im,abs_h";

fn series_csv(s: &SeriesReport) -> String {
    let mut out = String::from(SERIES_CSV_HEADER);
    out.push('\n');
    for (i, h) in s.h_table.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            fmt17(h.re),
            fmt17(h.im),
            fmt17(h.norm())
        ));
    }
    out
}

fn series_json(s: &SeriesReport) -> Value {
    let table: Vec<Value> = s
        .h_table
        .iter()
        .enumerate()
        .map(|(i, h)| json!({ "n": i + 1, "h_re": num(h.re), "h_im": num(h.im) }))
        .collect();
    let mut m = Map::new();
    m.insert("schema".into(), json!(REPORT_SCHEMA_VERSION));
    m.insert("report".into(), json!("series"));
    m.insert("spec".into(), json!(s.spec));
    m.insert("constant".into(), constant_json(&s.constant));
    m.insert("N".into(), json!(s.series.n));
    m.insert("partial_re".into(), num(s.series.partial.re));
    m.insert("partial_im".into(), num(s.series.partial.im));
    m.insert("target_re".into(), num(s.series.target.re));
    m.insert("target_im".into(), num(s.series.target.im));
    m.insert("gap".into(), num(s.series.gap));
    m.insert("ratio_re".into(), num(s.identity.ratio.re));
    m.insert("ratio_im".into(), num(s.identity.ratio.im));
    m.insert("ratio_gap".into(), num(s.identity.ratio_gap));
    m.insert("h_max_squarefree".into(), num(s.h_max_squarefree));
    m.insert("h_argmax".into(), json!(s.h_argmax));
    m.insert("h_table".into(), Value::Array(table));
    Value::Object(m)
}

fn series_plot(s: &SeriesReport) -> String {
    let mut out = String::from("# n abs_h\n");
    for (i, h) in s.h_table.iter().enumerate() {
        out.push_str(&format!("{} {}\n", i + 1, fmt17(h.norm())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{c_constant, c_constant_within_coverage};
    use crate::sieve::scan;
    use crate::sources::{DirichletCharacter, EigenvalueSource};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn cp(x: u64, e: f64, e0: f64) -> SummationCheckpoint {
        let z = Complex64::new(0.0, 0.0);
        SummationCheckpoint {
            x,
            s: z,
            s0: z,
            e: Complex64::new(e, 0.0),
            e0: Complex64::new(e0, 0.0),
            smoothed: z,
        }
    }

    fn delta_chi5() -> EulerProductSpec {
        let src = Arc::new(EigenvalueSource::delta(10_000).unwrap());
        EulerProductSpec::gl2_twisted(src, "q=5,index=1".parse().unwrap()).unwrap()
    }

    #[test]
    fn residual_examples() {
        assert_eq!(
            residual_series(&[cp(10, 5.0, 0.5)]),
            vec![(10, Complex64::new(0.0, 0.0))]
        );
        let r = residual_series(&[cp(10, 1.603_644_907_298_5, 0.144_538_6)]);
        assert_eq!(r.len(), 1);
        assert!((r[0].1.re + 0.015_825_9).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_planted_slope() {
        let series: Vec<(u64, Complex64)> = [10u64, 100, 1000, 10_000, 100_000]
            .iter()
            .map(|&x| (x, Complex64::new((-2.0 * (x as f64).ln().sqrt()).exp(), 0.0)))
            .collect();
        let f = decay_fit(&series).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-9);
        assert!(f.intercept.abs() < 1e-9);
        let flat: Vec<(u64, Complex64)> = [10u64, 100, 1000]
            .iter()
            .map(|&x| (x, Complex64::new(0.0, 0.3)))
            .collect();
        assert!(decay_fit(&flat).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn fit_excludes_tiny_residuals() {
        let mut series: Vec<(u64, Complex64)> = [10u64, 100, 1000]
            .iter()
            .map(|&x| (x, Complex64::new(1.0 / x as f64, 0.0)))
            .collect();
        series.push((5000, Complex64::new(1e-15, 0.0)));
        let f = decay_fit(&series).unwrap();
        assert_eq!((f.used, f.excluded), (3, 1));
        series.truncate(2);
        assert!(matches!(
            decay_fit(&series),
            Err(Error::InsufficientPoints { have: 2, .. })
        ));
    }

    #[test]
    fn trend_counts_rises() {
        let s: Vec<(u64, Complex64)> = [(10, 5.0), (100, 3.0), (1000, 4.0), (2000, 1.0), (3000, 2.0)]
            .iter()
            .map(|&(x, r)| (x, Complex64::new(r, 0.0)))
            .collect();
        let t = decay_trend(&s, 0).unwrap();
        assert_eq!((t.argmax_x, t.monotonicity_violations), (10, 2));
        let t = decay_trend(&s, 1000).unwrap();
        assert_eq!((t.argmax_x, t.first_x, t.monotonicity_violations), (1000, 1000, 1));
        assert!(decay_trend(&s, 10_000).is_none());
    }

    #[test]
    fn series_examples() {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12).unwrap();
        let one = alpha_series_partial(&z, 1, &c).unwrap();
        assert_eq!(one.partial, Complex64::new(1.0, 0.0));
        let two = alpha_series_partial(&z, 2, &c).unwrap();
        assert_eq!(two.partial, Complex64::new(0.75, 0.0));
        let g = delta_chi5();
        let cg = c_constant_within_coverage(&g, 1e-12).unwrap();
        assert_eq!(
            alpha_series_partial(&g, 1, &cg).unwrap().partial,
            Complex64::new(1.0, 0.0)
        );
    }

    #[test]
    fn zeta_series_converges_to_six_over_pi_squared() {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12).unwrap();
        let s = alpha_series_partial(&z, 1_000_000, &c).unwrap();
        assert!((s.partial.re - 6.0 / (PI * PI)).abs() < 2e-6);
        assert!(s.gap < 2e-6);
    }

    #[test]
    fn zeta_h_is_delta_at_one() {
        let h = h_values(&EulerProductSpec::zeta(), 10_000).unwrap();
        assert_eq!(h[0], Complex64::new(1.0, 0.0));
        assert!(h[1..].iter().all(|v| *v == Complex64::new(0.0, 0.0)));
        assert_eq!(h_boundedness_report(&h, 10_000).unwrap(), (1.0, 1));
        assert_eq!(h_boundedness_report(&h[..1], 1).unwrap(), (1.0, 1));
    }

    #[test]
    fn h_at_primes_matches_hand_convolution() {
        let g = delta_chi5();
        let h = h_values(&g, 2000).unwrap();
        assert_eq!(h[0], Complex64::new(1.0, 0.0));
        let chi: DirichletCharacter = "q=5,index=1".parse().unwrap();
        for p in crate::arith::primes_up_to(2000) {
            let c = chi.eval_u64(p);
            let expect = c * c / p as f64;
            assert!((h[(p - 1) as usize] - expect).norm() < 1e-14, "p = {p}");
        }
    }

    #[test]
    fn h_is_multiplicative() {
        let g = delta_chi5();
        let h = h_values(&g, 3000).unwrap();
        for m in 2..=54u64 {
            for n in 2..=(3000 / m) {
                if crate::arith::gcd(m, n) == 1 {
                    let lhs = h[(m * n - 1) as usize];
                    let rhs = h[(m - 1) as usize] * h[(n - 1) as usize];
                    assert!((lhs - rhs).norm() < 1e-12, "m={m} n={n}");
                }
            }
        }
    }

    #[test]
    fn convolution_is_thread_count_independent() {
        let src = Arc::new(EigenvalueSource::delta(40_000).unwrap());
        let g = EulerProductSpec::gl2_twisted(src, "q=5,index=1".parse().unwrap()).unwrap();
        let a = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| h_values(&g, 40_000).unwrap());
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(5)
            .build()
            .unwrap()
            .install(|| h_values(&g, 40_000).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn constant_identity_examples() {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12).unwrap();
        let id = verify_constant_identity(&z, 100_000, &c).unwrap();
        assert!(id.ratio_gap < 1e-4);
        let one = verify_constant_identity(&z, 1, &c).unwrap();
        assert_eq!(one.ratio, Complex64::new(1.0, 0.0));
        let g = delta_chi5();
        let cg = c_constant_within_coverage(&g, 1e-12).unwrap();
        let small = verify_constant_identity(&g, 1000, &cg).unwrap();
        let large = verify_constant_identity(&g, 10_000, &cg).unwrap();
        assert!(large.ratio_gap < small.ratio_gap);
        assert!(large.alpha_gap < small.alpha_gap);
    }

    #[test]
    fn residual_report_cross_checks() {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12).unwrap();
        let cps = crate::sieve::geometric_checkpoints(100_000);
        let rows = scan(&z, 100_000, &cps, &c).unwrap();
        let rep = ResidualReport::new("zeta", c, &rows);
        assert!(rep.cross_check_ok());
        assert_eq!(rep.points.len(), cps.len());
        assert!(rep.fit.is_some());
    }

    #[test]
    fn emission_formats() {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12).unwrap();
        let empty = ResidualReport::new("zeta", c, &[]);
        assert_eq!(
            String::from_utf8(emit_report(Report::Residual(&empty), ReportFormat::Csv)).unwrap(),
            format!("{RESIDUAL_CSV_HEADER}\n")
        );
        let rows = scan(&z, 10, &[10], &c).unwrap();
        let one = ResidualReport::new("zeta", c, &rows);
        let json = String::from_utf8(emit_report(Report::Residual(&one), ReportFormat::Json)).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], json!(1));
        assert_eq!(v["checkpoints"].as_array().unwrap().len(), 1);
        let r_re = v["checkpoints"][0]["R_re"].to_string();
        let digits: String = r_re
            .split('e')
            .next()
            .unwrap()
            .chars()
            .filter(|c| c.is_ascii_digit())
            .collect();
        assert_eq!(digits.len(), 17, "{r_re}");

        let cps = crate::sieve::geometric_checkpoints(1_000_000);
        let rows = scan(&z, 1_000_000, &cps, &c).unwrap();
        let rep = ResidualReport::new("zeta", c, &rows);
        let plot = String::from_utf8(emit_report(Report::Residual(&rep), ReportFormat::PlotData)).unwrap();
        let data_rows = plot.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_rows, rep.fit.unwrap().used);
    }

    #[test]
    fn series_report_emission() {
        let z = EulerProductSpec::zeta();
        let c = c_constant(&z, 1e-12).unwrap();
        let rep = series_report(&z, 1000, &c).unwrap();
        assert_eq!(rep.h_table.len(), 100);
        let csv = String::from_utf8(emit_report(Report::Series(&rep), ReportFormat::Csv)).unwrap();
        assert_eq!(csv.lines().count(), 101);
        let json = String::from_utf8(emit_report(Report::Series(&rep), ReportFormat::Json)).unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["report"], json!("series"));
        assert_eq!(v["h_argmax"], json!(1));
    }
}
