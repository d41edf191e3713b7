//! Bulk evaluation over `1..=X`: smallest-prime-factor tables, dense
//! `phi(n, F) / n`, and the streamed scan that produces the summatory
//! functions and error terms at checkpoints.
//!
//! The scan never materializes `phi(n, F) / n`. It walks fixed segments of
//! [`SEGMENT_LEN`] integers; inside a segment the sums are accumulated in
//! increasing `n`, and segment totals are merged in segment order. Segments
//! may be processed on any number of threads, the bits do not change.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::arith::{isqrt, primes_up_to};
use crate::error::{Error, Result};
use crate::euler::{ConstantResult, EulerProductSpec, LocalEvaluator};
use crate::summation::ComplexSum;

/// Default allocation cap for the materializing paths (2 GiB).
pub const DEFAULT_MEMORY_CAP: u64 = 2 << 30;

/// Integers per scan segment. Part of the determinism contract: changing it
/// changes the low-order bits of every scan output.
pub const SEGMENT_LEN: u64 = 1 << 16;

/// Segments handed to the thread pool per round.
const SEGMENTS_PER_ROUND: usize = 256;

#[derive(Debug, Clone)]
pub struct SpfTable {
    /// `spf[n]` for `0 <= n <= X`; zero at 0 and 1.
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl SpfTable {
    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Smallest prime factor of `n`, for `2 <= n <= X`.
    #[inline]
    pub fn spf(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Prime factorization of `n <= X` as `(p, k)` pairs.
    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        while n > 1 {
            let p = self.spf(n);
            let mut k = 0;
            while n.is_multiple_of(p) {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        out
    }

    pub fn is_squarefree(&self, mut n: u64) -> bool {
        while n > 1 {
            let p = self.spf(n);
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        true
    }
}

fn check_cap(required: u64, cap: u64) -> Result<()> {
    if required > cap {
        Err(Error::MemoryCap { required, cap })
    } else {
        Ok(())
    }
}

/// Linear sieve of smallest prime factors for `2..=x`.
pub fn build_spf(x: u64, memory_cap: u64) -> Result<SpfTable> {
    if x < 2 {
        return Err(Error::Domain(format!("SPF table needs X >= 2, got {x}")));
    }
    if x > u32::MAX as u64 {
        return Err(Error::Domain(format!("SPF table limit {x} exceeds 2^32 - 1")));
    }
    // spf array plus a prime list of at most ~1.26 x / ln x entries.
    let prime_estimate = (1.26 * x as f64 / (x as f64).ln()) as u64 + 16;
    check_cap(4 * (x + 1) + 4 * prime_estimate, memory_cap)?;
    let n = x as usize;
    let mut spf = vec![0u32; n + 1];
    let mut primes: Vec<u32> = Vec::with_capacity(prime_estimate as usize);
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let si = spf[i];
        for &p in &primes {
            if p > si || i * p as usize > n {
                break;
            }
            spf[i * p as usize] = p;
        }
    }
    Ok(SpfTable { spf, primes })
}

/// Dense `phi(n, F) / n` for `n = 1..=X`; element `i` holds `n = i + 1`.
pub fn bulk_phi_ratio(spec: &EulerProductSpec, table: &SpfTable, memory_cap: u64) -> Result<Vec<Complex64>> {
    let x = table.limit();
    check_cap(32 * (x + 1), memory_cap)?;
    let eval = spec.local_evaluator(x)?;
    // Prime-indexed cache of 1 / F_p(1).
    let mut inv = vec![Complex64::new(0.0, 0.0); x as usize + 1];
    for &p in table.primes() {
        inv[p as usize] = eval.inv_local(p as u64);
    }
    let mut ratio = vec![Complex64::new(0.0, 0.0); x as usize + 1];
    ratio[1] = Complex64::new(1.0, 0.0);
    for n in 2..=x as usize {
        let p = table.spf[n] as usize;
        let m = n / p;
        // Repeated primes contribute once: only the first occurrence multiplies.
        ratio[n] = if m.is_multiple_of(p) {
            ratio[m]
        } else {
            ratio[m] * inv[p]
        };
    }
    ratio.remove(0);
    Ok(ratio)
}

/// Dense `alpha(n)` for `n = 1..=X` (element `i` holds `n = i + 1`).
pub fn bulk_alpha(spec: &EulerProductSpec, table: &SpfTable) -> Result<Vec<Complex64>> {
    let x = table.limit();
    let eval = spec.local_evaluator(x)?;
    let mut alpha = vec![Complex64::new(0.0, 0.0); x as usize + 1];
    alpha[1] = Complex64::new(1.0, 0.0);
    for n in 2..=x as usize {
        let p = table.spf[n] as usize;
        let m = n / p;
        alpha[n] = if m.is_multiple_of(p) {
            Complex64::new(0.0, 0.0)
        } else {
            -alpha[m] * eval.gamma(p as u64)
        };
    }
    alpha.remove(0);
    Ok(alpha)
}

/// Dense Dirichlet coefficients `a_F(n)` for `n = 1..=X` (element `i` holds `n = i + 1`).
pub fn bulk_coeff(spec: &EulerProductSpec, table: &SpfTable) -> Result<Vec<Complex64>> {
    let x = table.limit();
    let eval = spec.local_evaluator(x)?;
    let mut a = vec![Complex64::new(0.0, 0.0); x as usize + 1];
    a[1] = Complex64::new(1.0, 0.0);
    for n in 2..=x as usize {
        let p = table.spf[n] as usize;
        let mut m = n;
        let mut k = 0u32;
        while m % p == 0 {
            m /= p;
            k += 1;
        }
        let (e1, e2) = eval.coefficients(p as u64);
        let apk = crate::euler::prime_power_coefficients(e1, e2, k)[k as usize];
        a[n] = apk * a[m];
    }
    a.remove(0);
    Ok(a)
}

/// One row of the scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummationCheckpoint {
    pub x: u64,
    /// `sum_{n <= x} phi(n, F)`.
    pub s: Complex64,
    /// `sum_{n <= x} phi(n, F) / n`.
    pub s0: Complex64,
    /// `S - C x^2`.
    pub e: Complex64,
    /// `S0 - 2 C x`.
    pub e0: Complex64,
    /// `sum_{n <= x} (1 - n / x) phi(n, F) / n = S0 - S / x`.
    pub smoothed: Complex64,
}

impl SummationCheckpoint {
    fn from_sums(x: u64, s: &ComplexSum, s0: &ComplexSum, c: Complex64) -> Self {
        let xf = x as f64;
        let smoothed = Complex64::new(smoothed_part(&s0.re, &s.re, xf), smoothed_part(&s0.im, &s.im, xf));
        Self {
            x,
            s: s.value(),
            s0: s0.value(),
            e: s.sub_scaled(c, xf * xf),
            e0: s0.sub_scaled(c, 2.0 * xf),
            smoothed,
        }
    }
}

fn smoothed_part(s0: &crate::summation::CompensatedSum, s: &crate::summation::CompensatedSum, x: f64) -> f64 {
    let (a, al) = s0.parts();
    let (b, bl) = s.parts();
    (a - b / x) + (al - bl / x)
}

/// Default checkpoints `round(10^(k/4))` for `k = 4..=floor(4 log10 X)`;
/// `[X]` when that list is empty.
pub fn geometric_checkpoints(x_max: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut k = 4u32;
    loop {
        let x = 10f64.powf(k as f64 / 4.0).round() as u64;
        if x > x_max {
            break;
        }
        if out.last() != Some(&x) {
            out.push(x);
        }
        k += 1;
    }
    if out.is_empty() && x_max >= 1 {
        out.push(x_max);
    }
    out
}

#[derive(Default)]
struct SegmentSums {
    s: ComplexSum,
    s0: ComplexSum,
    /// Prefix sums at the checkpoints falling inside the segment.
    snapshots: Vec<(u64, ComplexSum, ComplexSum)>,
}

struct SegmentScratch {
    rem: Vec<u64>,
    ratio: Vec<Complex64>,
}

/// Shared inputs for segment evaluation.
struct SegmentPlan<'a> {
    eval: LocalEvaluator<'a>,
    small_primes: Vec<u64>,
    small_inv: Vec<Complex64>,
    x_max: u64,
}

impl SegmentPlan<'_> {
    fn bounds(&self, seg: u64) -> (u64, u64) {
        let lo = seg * SEGMENT_LEN + 1;
        let hi = ((seg + 1) * SEGMENT_LEN).min(self.x_max);
        (lo, hi)
    }

    /// Fills `scratch.ratio[..len]` with `phi(n, F) / n` for `n = lo..=hi`.
    fn fill(&self, lo: u64, hi: u64, scratch: &mut SegmentScratch) {
        let len = (hi - lo + 1) as usize;
        let rem = &mut scratch.rem[..len];
        let ratio = &mut scratch.ratio[..len];
        for (i, r) in rem.iter_mut().enumerate() {
            *r = lo + i as u64;
        }
        ratio.fill(Complex64::new(1.0, 0.0));
        for (&p, &inv) in self.small_primes.iter().zip(&self.small_inv) {
            if p > hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            let mut m = first;
            let square_possible = p.saturating_mul(p) <= hi;
            while m <= hi {
                let i = (m - lo) as usize;
                ratio[i] *= inv;
                rem[i] /= p;
                if square_possible {
                    while rem[i].is_multiple_of(p) {
                        rem[i] /= p;
                    }
                }
                m += p;
            }
        }
        // What is left is 1 or a single prime above sqrt(X).
        for (r, q) in ratio.iter_mut().zip(rem.iter()) {
            if *q > 1 {
                *r *= self.eval.inv_local(*q);
            }
        }
    }

    fn run(&self, seg: u64, checkpoints: &[u64], scratch: &mut SegmentScratch) -> SegmentSums {
        let (lo, hi) = self.bounds(seg);
        self.fill(lo, hi, scratch);
        let mut out = SegmentSums::default();
        let start = checkpoints.partition_point(|&c| c < lo);
        let mut cps = checkpoints[start..].iter().copied().take_while(|&c| c <= hi).peekable();
        for (i, &r) in scratch.ratio[..(hi - lo + 1) as usize].iter().enumerate() {
            let n = lo + i as u64;
            out.s0.add(r);
            out.s.add(r * n as f64);
            if cps.peek() == Some(&n) {
                out.snapshots.push((n, out.s, out.s0));
                cps.next();
            }
        }
        out
    }
}

fn validate_checkpoints(x_max: u64, checkpoints: &[u64]) -> Result<()> {
    if x_max == 0 {
        return Err(Error::Domain("scan range must be at least 1".into()));
    }
    for w in checkpoints.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Domain(format!(
                "checkpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    if let Some(&first) = checkpoints.first() {
        if first == 0 {
            return Err(Error::Domain("checkpoints start at x = 1".into()));
        }
    }
    if let Some(&last) = checkpoints.last() {
        if last > x_max {
            return Err(Error::Domain(format!(
                "checkpoint {last} is beyond the scan range {x_max}"
            )));
        }
    }
    Ok(())
}

/// Upper estimate of the working memory of [`scan`] in bytes, for `threads`
/// workers: per-worker scratch, one round of segment sums, the small-prime
/// table and the output rows.
pub fn scan_memory_estimate(x_max: u64, checkpoints: usize, threads: usize) -> u64 {
    let seg = SEGMENT_LEN.min(x_max.max(1));
    let scratch = seg * (8 + 16) * threads.max(1) as u64;
    let sums = std::mem::size_of::<SegmentSums>() as u64 * SEGMENTS_PER_ROUND as u64;
    let snapshots = checkpoints as u64 * (std::mem::size_of::<SummationCheckpoint>() as u64 + 72);
    let primes = isqrt(x_max) * 24;
    scratch + sums + snapshots + primes
}

/// Fails with [`Error::MemoryCap`] when [`scan_memory_estimate`] exceeds `cap`.
pub fn check_scan_memory(x_max: u64, checkpoints: usize, threads: usize, cap: u64) -> Result<u64> {
    let need = scan_memory_estimate(x_max, checkpoints, threads);
    if need > cap {
        return Err(Error::MemoryCap { required: need, cap });
    }
    Ok(need)
}

/// Single pass over `n = 1..=x_max` emitting one [`SummationCheckpoint`] per
/// checkpoint, with `E` and `E0` taken against `c.value`.
pub fn scan(
    spec: &EulerProductSpec,
    x_max: u64,
    checkpoints: &[u64],
    c: &ConstantResult,
) -> Result<Vec<SummationCheckpoint>> {
    validate_checkpoints(x_max, checkpoints)?;
    let eval = spec.local_evaluator(x_max)?;
    let small_primes = primes_up_to(isqrt(x_max));
    let small_inv = small_primes.iter().map(|&p| eval.inv_local(p)).collect();
    let plan = SegmentPlan {
        eval,
        small_primes,
        small_inv,
        x_max,
    };
    let segments = x_max.div_ceil(SEGMENT_LEN);
    let scratch_len = SEGMENT_LEN.min(x_max) as usize;
    let new_scratch = || SegmentScratch {
        rem: vec![0; scratch_len],
        ratio: vec![Complex64::new(0.0, 0.0); scratch_len],
    };

    let mut total_s = ComplexSum::new();
    let mut total_s0 = ComplexSum::new();
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut seg = 0u64;
    while seg < segments {
        let round_end = (seg + SEGMENTS_PER_ROUND as u64).min(segments);
        let results: Vec<SegmentSums> = (seg..round_end)
            .into_par_iter()
            .map_init(new_scratch, |scratch, k| plan.run(k, checkpoints, scratch))
            .collect();
        for r in results {
            for (x, s, s0) in &r.snapshots {
                let mut cs = total_s;
                cs.merge(s);
                let mut cs0 = total_s0;
                cs0.merge(s0);
                out.push(SummationCheckpoint::from_sums(*x, &cs, &cs0, c.value));
            }
            total_s.merge(&r.s);
            total_s0.merge(&r.s0);
        }
        seg = round_end;
    }
    Ok(out)
}

/// `sum_{n <= x} (1 - n / x) phi(n, F) / n`, term by term through the
/// single-query factorization path.
pub fn smoothed_sum_direct(spec: &EulerProductSpec, x: u64) -> Result<Complex64> {
    if x == 0 {
        return Err(Error::Domain("smoothed sum needs x >= 1".into()));
    }
    spec.ensure_covers(x)?;
    let xf = x as f64;
    let mut acc = ComplexSum::new();
    for n in 1..=x {
        let w = 1.0 - n as f64 / xf;
        acc.add(spec.phi_ratio(n)? * w);
    }
    Ok(acc.value())
}

pub const CHECKPOINT_CSV_HEADER: &str = "x,S_re,S_im,S0_re,S0_im,E_re,E_im,E0_re,E0_im,smoothed_re,smoothed_im";

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn checkpoints_csv(rows: &[SummationCheckpoint]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 256);
    out.push_str(CHECKPOINT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [r.s, r.s0, r.e, r.e0, r.smoothed];
        out.push_str(&r.x.to_string());
        for z in fields {
            out.push(',');
            out.push_str(&fmt17(z.re));
            out.push(',');
            out.push_str(&fmt17(z.im));
        }
        out.push('\n');
    }
    out
}
