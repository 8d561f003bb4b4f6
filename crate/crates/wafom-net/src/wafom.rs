//! WAFOM evaluation: the direct per-bit formula and the table method.
//!
//! For a point `x` with bits `x_{j,T}` the figure of merit averages
//!
//! ```text
//! term(x) = prod_{T=1..S} prod_{j=1..n} (1 + (-1)^{x_{j,T}} 2^{-j})  -  1
//! ```
//!
//! over the net, which costs `O(nSN)` arithmetic for `N` points. Splitting
//! each coordinate's `n` bits into `q` segments of `l = n/q` bits and
//! precomputing the `2^l` possible per-segment products turns the inner
//! product into `q` table lookups, for `O(SN)` arithmetic with `q * 2^l`
//! doubles of table memory (24 KiB at `n = 30, q = 3`, comfortably in
//! cache).
//!
//! Both evaluators enumerate the net in Gray-code order, accumulate in
//! fixed-size chunks with compensated summation, and fold the chunk
//! partials in index order. The chunk layout is independent of the thread
//! count, so results are bit-identical whether a run is sequential or
//! parallel.

use crate::f2::{low_mask, walk_gray, GeneratingMatrixSet, NetPoint};
use crate::kahan::KahanSum;
use rayon::prelude::*;
use std::ops::Range;

/// Points per accumulation chunk (`2^CHUNK_BITS`).
pub(crate) const CHUNK_BITS: u32 = 14;

/// Errors from table construction.
#[derive(Debug, thiserror::Error)]
pub enum WafomError {
    #[error("segment count q = {q} must divide n = {n}")]
    NotDivisible { n: u32, q: u32 },
    #[error(
        "lookup tables for n = {n}, q = {q} need {required} bytes \
         ({available} available); pick a larger q"
    )]
    TableTooLarge {
        n: u32,
        q: u32,
        required: u128,
        available: u64,
    },
}

/// Precomputed per-segment products: `q` tables of `2^l` entries, where
/// `l = n / q`.
///
/// Entry `e` of table `i` (0-based) is the product of the `l` factors
/// `(1 + (-1)^{e_j} 2^{-(i*l + j)})` for `j = 1..=l`, with `e_j` the j-th
/// most significant of the `l` bits of `e`. Entries are strictly positive:
/// every factor lies in `[1 - 2^{-1}, 1 + 2^{-1}]` and only row 1 can reach
/// the bound.
#[derive(Clone, Debug)]
pub struct WafomTables {
    n: u32,
    q: u32,
    l: u32,
    /// Table `i` occupies `flat[i << l .. (i + 1) << l]`.
    flat: Vec<f64>,
}

impl WafomTables {
    /// Builds the tables for digit count `n` split into `q` segments.
    ///
    /// # Errors
    ///
    /// Fails if `q` does not divide `n`, or if the tables would not fit in
    /// memory (`q * 2^{n/q}` doubles; `q = 1` needs `2^n` entries, which for
    /// `n = 30` is already 8.6 GiB).
    pub fn new(n: u32, q: u32) -> Result<Self, WafomError> {
        assert!((1..=64).contains(&n), "n = {n} out of range");
        if q == 0 || !n.is_multiple_of(q) {
            return Err(WafomError::NotDivisible { n, q });
        }
        let l = n / q;
        let entries = (q as u128) << l;
        let required = entries * 8;
        // Refuse allocations that would push the machine into the OOM
        // killer; overcommit means a successful reserve is no guarantee.
        let headroom = 512u128 << 20;
        let available = available_memory_bytes().unwrap_or(u64::MAX);
        if required + headroom > available as u128 {
            return Err(WafomError::TableTooLarge {
                n,
                q,
                required,
                available,
            });
        }
        let mut flat = Vec::new();
        if flat.try_reserve_exact(entries as usize).is_err() {
            return Err(WafomError::TableTooLarge {
                n,
                q,
                required,
                available,
            });
        }
        flat.resize(entries as usize, 0.0);
        for i in 0..q {
            let slice = &mut flat[(i as usize) << l..((i as usize) + 1) << l];
            slice[0] = 1.0;
            // Extend one digit at a time: after round j the first 2^j
            // entries hold the products over the segment's first j digits.
            for j in 1..=l {
                let fac = 2f64.powi(-((i * l + j) as i32));
                for idx in (0..1usize << (j - 1)).rev() {
                    let v = slice[idx];
                    slice[2 * idx + 1] = v * (1.0 - fac);
                    slice[2 * idx] = v * (1.0 + fac);
                }
            }
        }
        Ok(WafomTables { n, q, l, flat })
    }

    /// Digit count the tables were built for.
    #[must_use]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Segment count.
    #[must_use]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Bits per segment.
    #[must_use]
    pub fn l(&self) -> u32 {
        self.l
    }

    /// Segment `i` (0-based) of a coordinate column: the `l`-bit integer
    /// formed by rows `i*l + 1 ..= (i+1)*l`, most significant row first.
    #[inline]
    #[must_use]
    pub fn segment(&self, col: u64, i: u32) -> u64 {
        (col >> (self.n - (i + 1) * self.l)) & low_mask(self.l)
    }

    /// Table entry `e` of segment `i` (0-based).
    #[must_use]
    pub fn entry(&self, i: u32, e: u64) -> f64 {
        self.flat[((i as usize) << self.l) + e as usize]
    }

    /// The full n-bit product for one coordinate column: `q` lookups.
    #[inline]
    #[must_use]
    pub fn column_product(&self, col: u64) -> f64 {
        let mut p = 1.0;
        for i in 0..self.q {
            p *= self.flat[((i as usize) << self.l) + self.segment(col, i) as usize];
        }
        p
    }
}

/// Per-bit factors `(1 +- 2^{-j})`, indexed `[bit][j]`.
struct BitFactors {
    f: [[f64; 65]; 2],
    n: u32,
}

impl BitFactors {
    fn new(n: u32) -> Self {
        let mut f = [[1.0; 65]; 2];
        for j in 1..=n {
            let fac = 2f64.powi(-(j as i32));
            f[0][j as usize] = 1.0 + fac;
            f[1][j as usize] = 1.0 - fac;
        }
        BitFactors { f, n }
    }

    /// Product over all `n` rows of one coordinate column.
    #[inline]
    fn column_product(&self, col: u64) -> f64 {
        let mut p = 1.0;
        for j in 1..=self.n {
            p *= self.f[((col >> (self.n - j)) & 1) as usize][j as usize];
        }
        p
    }
}

/// The signed product term of one point, minus one. Direct per-bit
/// evaluation; `O(nS)` multiplications.
#[must_use]
pub fn wafom_point_term(x: &NetPoint) -> f64 {
    let factors = BitFactors::new(x.digits());
    let mut p = 1.0;
    for &c in x.coords() {
        p *= factors.column_product(c);
    }
    p - 1.0
}

/// Compensated partial sums of `term` over the Gray-code walk, one
/// [`KahanSum`] per chunk of `2^CHUNK_BITS` consecutive indices. Chunks are
/// evaluated in parallel but identified by index, so the layout (and hence
/// the merged value) does not depend on the thread count.
pub(crate) fn chunk_partials<C, T>(
    s: usize,
    d: u32,
    col: &C,
    term: &T,
    chunks: Range<u64>,
) -> Vec<KahanSum>
where
    C: Fn(usize, u32) -> u64 + Sync,
    T: Fn(&[u64]) -> f64 + Sync,
{
    let count = 1u64 << d;
    chunks
        .into_par_iter()
        .map(|c| {
            let k0 = c << CHUNK_BITS;
            let k1 = ((c + 1) << CHUNK_BITS).min(count);
            let mut acc = KahanSum::new();
            walk_gray(s, d, col, k0..k1, |_, state| acc.add(term(state)));
            acc
        })
        .collect()
}

/// Number of chunks for a depth-`d` evaluation.
pub(crate) fn chunk_count(d: u32) -> u64 {
    if d <= CHUNK_BITS {
        1
    } else {
        1u64 << (d - CHUNK_BITS)
    }
}

/// Folds chunk partials in index order and divides by the point count.
pub(crate) fn merge_mean<'a>(partials: impl IntoIterator<Item = &'a KahanSum>, d: u32) -> f64 {
    let mut acc = KahanSum::new();
    for &p in partials {
        acc.absorb(p);
    }
    acc.value() / (1u64 << d) as f64
}

/// The table-method term of one point state. Shared by [`wafom_tabled`] and
/// the search's stage evaluator so both produce bit-identical sums.
#[inline]
pub(crate) fn tabled_term(tables: &WafomTables, state: &[u64]) -> f64 {
    let mut p = 1.0;
    for &c in state {
        p *= tables.column_product(c);
    }
    p - 1.0
}

fn eval_mean<C, T>(s: usize, d: u32, col: C, term: T) -> f64
where
    C: Fn(usize, u32) -> u64 + Sync,
    T: Fn(&[u64]) -> f64 + Sync,
{
    let partials = chunk_partials(s, d, &col, &term, 0..chunk_count(d));
    merge_mean(&partials, d)
}

/// WAFOM of the first `2^d` points, by the direct per-bit formula.
/// `O(nSN)` arithmetic.
///
/// # Panics
///
/// Panics if `d > m`.
#[must_use]
pub fn wafom_naive(g: &GeneratingMatrixSet, d: u32) -> f64 {
    assert!(d <= g.m(), "depth d = {d} exceeds m = {}", g.m());
    let factors = BitFactors::new(g.n());
    eval_mean(
        g.dim() as usize,
        d,
        |i, j| g.column(i, j as usize),
        |state| {
            let mut p = 1.0;
            for &c in state {
                p *= factors.column_product(c);
            }
            p - 1.0
        },
    )
}

/// WAFOM of the first `2^d` points, by segment-table lookups. `O(SN)`
/// arithmetic; same value as [`wafom_naive`] up to floating-point
/// reassociation (within `1e-12` relative in practice).
///
/// # Panics
///
/// Panics if `d > m` or if the tables were built for a different `n`.
#[must_use]
pub fn wafom_tabled(g: &GeneratingMatrixSet, d: u32, tables: &WafomTables) -> f64 {
    assert!(d <= g.m(), "depth d = {d} exceeds m = {}", g.m());
    assert_eq!(
        tables.n(),
        g.n(),
        "tables built for n = {} but the net has n = {}",
        tables.n(),
        g.n()
    );
    eval_mean(
        g.dim() as usize,
        d,
        |i, j| g.column(i, j as usize),
        |state| tabled_term(tables, state),
    )
}

/// Best-effort readout of memory this process may still allocate,
/// honoring cgroup limits when present.
fn available_memory_bytes() -> Option<u64> {
    let meminfo = std::fs::read_to_string("/proc/meminfo")
        .ok()
        .and_then(|text| {
            text.lines().find_map(|l| {
                let rest = l.strip_prefix("MemAvailable:")?;
                rest.trim().strip_suffix("kB")?.trim().parse::<u64>().ok()
            })
        });
    let cgroup = (|| {
        let max = std::fs::read_to_string("/sys/fs/cgroup/memory.max").ok()?;
        let max: u64 = max.trim().parse().ok()?;
        let current: u64 = std::fs::read_to_string("/sys/fs/cgroup/memory.current")
            .ok()?
            .trim()
            .parse()
            .ok()?;
        Some(max.saturating_sub(current))
    })();
    match (meminfo.map(|kb| kb * 1024), cgroup) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}
