//! Compensated summation (Kahan with Neumaier's correction).
//!
//! WAFOM values of good nets sit many orders of magnitude below the
//! individual summands, so every accumulation in this crate goes through
//! [`KahanSum`]. Parallel evaluators combine per-chunk partial sums with
//! [`KahanSum::absorb`] in a fixed chunk order, which keeps results
//! bit-identical across thread counts.

/// Running compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    /// Accumulated low-order parts lost to rounding: `sum + c` approximates
    /// the true total.
    c: f64,
}

impl KahanSum {
    #[must_use]
    pub fn new() -> Self {
        KahanSum::default()
    }

    /// Adds one term.
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.c += (self.sum - t) + value;
        } else {
            self.c += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one, carrying its compensation
    /// along. Absorbing partials in a fixed order is deterministic.
    #[inline]
    pub fn absorb(&mut self, other: KahanSum) {
        self.add(other.sum);
        self.add(other.c);
    }

    /// Best available estimate of the total.
    #[inline]
    #[must_use]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}
