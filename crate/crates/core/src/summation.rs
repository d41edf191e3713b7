//! Compensated accumulation built on the error-free two-sum transformation.
//!
//! Every `add` splits `sum + v` into its rounded value and the exact rounding
//! error; the errors are collected in a separate compensation term. The value
//! of a sum therefore depends only on the order of the `add`/`merge` calls,
//! which is what the scan's determinism contract relies on.

use num_complex::Complex64;

/// Knuth's two-sum: `a + b == s + e` exactly, with `s = fl(a + b)`.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bp = s - a;
    let e = (a - (s - bp)) + (b - bp);
    (s, e)
}

/// `a * b == p + e` exactly (up to underflow), via fused multiply-add.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.sum, v);
        self.sum = s;
        self.comp += e;
    }

    /// Appends another accumulator's total; `self` stays the left operand.
    #[inline]
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Leading and trailing parts; `value() == hi + lo` after rounding.
    #[inline]
    pub fn parts(&self) -> (f64, f64) {
        (self.sum, self.comp)
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Componentwise compensated sum of complex values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSum {
    pub re: CompensatedSum,
    pub im: CompensatedSum,
}

impl ComplexSum {
    pub const fn new() -> Self {
        Self {
            re: CompensatedSum::new(),
            im: CompensatedSum::new(),
        }
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    #[inline]
    pub fn merge(&mut self, other: &ComplexSum) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    /// `self - c * w`, carrying the compensation terms and the rounding error
    /// of the product so large cancellations keep their low-order digits.
    pub fn sub_scaled(&self, c: Complex64, w: f64) -> Complex64 {
        Complex64::new(sub_scaled_part(&self.re, c.re, w), sub_scaled_part(&self.im, c.im, w))
    }
}

fn sub_scaled_part(acc: &CompensatedSum, c: f64, w: f64) -> f64 {
    let (hi, lo) = acc.parts();
    let (p, pe) = two_prod(c, w);
    let (d, de) = two_sum(hi, -p);
    d + (de + (lo - pe))
}

impl FromIterator<Complex64> for ComplexSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_low_bits() {
        let mut acc = CompensatedSum::new();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);

        let naive: f64 = std::iter::once(1e16)
            .chain(std::iter::repeat_n(1.0, 1000))
            .chain(std::iter::once(-1e16))
            .sum();
        assert_ne!(naive, 1000.0);
    }

    #[test]
    fn merge_matches_sequential_when_segments_align() {
        let xs: Vec<f64> = (1..=10_000).map(|k| 1.0 / k as f64).collect();
        let whole: CompensatedSum = xs.iter().copied().collect();
        let mut merged = CompensatedSum::new();
        for chunk in xs.chunks(1000) {
            let part: CompensatedSum = chunk.iter().copied().collect();
            merged.merge(&part);
        }
        assert!((whole.value() - merged.value()).abs() < 1e-14);
    }

    #[test]
    fn sub_scaled_keeps_small_differences() {
        let mut acc = ComplexSum::new();
        acc.add(Complex64::new(3e15, 0.0));
        acc.add(Complex64::new(0.25, 0.0));
        let c = Complex64::new(0.3, 0.0);
        let d = acc.sub_scaled(c, 1e16);
        assert!((d.re - 0.25).abs() < 1.0);
        assert_eq!(d.im, 0.0);
    }
}
