//! Bit-exact F2 linear algebra for digital nets.
//!
//! A digital net in `[0,1)^S` is defined by S generating matrices
//! `C_1..C_S`, each with `n` rows and `m` columns of bits. The point with
//! index `k < 2^d` (for any `d <= m`) has coordinate `T` equal to
//! `C_T * k` over F2, where `k` is read as the column vector of its binary
//! digits, least significant digit first. The resulting n-bit column
//! `(x_1, .., x_n)` is identified with the real number `sum_j x_j 2^{-j}`.
//!
//! # Bit packing
//!
//! Columns are stored as `u64` words. Row `j` (1-based, `j = 1` is the most
//! significant digit of the coordinate) lives at word bit `n - j`, so the
//! whole column read as an integer equals the coordinate value scaled by
//! `2^n`. Every consumer of column words in this crate relies on this
//! convention: the top `d` rows of a column are `word >> (n - d)`, and the
//! coordinate value is `word as f64 / 2^n`.
//!
//! Supported sizes are `1 <= n <= 64`; coordinate conversion to `f64` is
//! exact for `n <= 52`.

use std::ops::Range;

/// A generating-matrix column: `n` row bits packed into a word, row `j`
/// at bit `n - j`.
pub type BitColumn = u64;

/// Mask with the lowest `bits` bits set. `bits` may be 0 or 64.
#[inline]
pub(crate) fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        !0
    } else {
        (1u64 << bits) - 1
    }
}

/// XOR of `cols[j]` over the set bits `j` of `k` (matrix times digit
/// vector, least significant digit selecting the first column).
#[inline]
pub(crate) fn matvec(cols: &[BitColumn], k: u64) -> u64 {
    let mut acc = 0u64;
    let mut rest = k;
    while rest != 0 {
        let j = rest.trailing_zeros();
        acc ^= cols[j as usize];
        rest &= rest - 1;
    }
    acc
}

/// Matrix times vector where the vector itself uses the column packing:
/// component `r` of a `dim`-long vector sits at bit `dim - r`. Used for
/// products of column-packed matrices.
#[inline]
pub(crate) fn matvec_msb(cols: &[BitColumn], v: u64, dim: u32) -> u64 {
    let mut acc = 0u64;
    let mut rest = v;
    while rest != 0 {
        let b = rest.trailing_zeros();
        acc ^= cols[(dim - 1 - b) as usize];
        rest &= rest - 1;
    }
    acc
}

/// Tests whether the `d x d` matrix formed by the top `d` rows of the given
/// `d` columns is invertible over F2.
///
/// This is the per-coordinate regularity condition that makes each
/// 1-dimensional projection of the first `2^d` points hit every dyadic
/// interval of length `2^-d` exactly once.
///
/// # Panics
///
/// Panics if `cols` is empty or has more than `n` entries, or if `n > 64`.
#[must_use]
pub fn is_upper_square_regular(cols: &[BitColumn], n: u32) -> bool {
    let d = cols.len() as u32;
    assert!(d >= 1, "need at least one column");
    assert!(
        d <= n && n <= 64,
        "d = {d} columns must satisfy d <= n <= 64"
    );
    // Column-space rank over the top d rows: reduce each column against the
    // pivots found so far; a column that reduces to zero breaks invertibility.
    let mut pivots = [0u64; 64];
    for &c in cols {
        let mut v = (c >> (n - d)) & low_mask(d);
        loop {
            if v == 0 {
                return false;
            }
            let h = 63 - v.leading_zeros();
            if pivots[h as usize] == 0 {
                pivots[h as usize] = v;
                break;
            }
            v ^= pivots[h as usize];
        }
    }
    true
}

/// One point of a digital net: the S coordinate columns of bits, before
/// conversion to reals.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetPoint {
    n: u32,
    coords: Vec<BitColumn>,
}

impl NetPoint {
    /// Builds a point from raw coordinate columns.
    ///
    /// # Panics
    ///
    /// Panics if `coords` is empty, `n` is not in `1..=64`, or any column
    /// has bits outside the low `n` positions.
    #[must_use]
    pub fn new(n: u32, coords: Vec<BitColumn>) -> Self {
        assert!((1..=64).contains(&n), "n = {n} out of range");
        assert!(!coords.is_empty(), "a point needs at least one coordinate");
        for &c in &coords {
            assert!(
                c & !low_mask(n) == 0,
                "column {c:#x} wider than n = {n} bits"
            );
        }
        NetPoint { n, coords }
    }

    /// Digit precision `n` of each coordinate.
    #[must_use]
    pub fn digits(&self) -> u32 {
        self.n
    }

    /// Number of coordinates.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The raw coordinate columns.
    #[must_use]
    pub fn coords(&self) -> &[BitColumn] {
        &self.coords
    }

    /// Bit `x_{j,T}` for row `j = 1..=n` and coordinate `t = 0..S`.
    #[must_use]
    pub fn bit(&self, j: u32, t: usize) -> bool {
        debug_assert!((1..=self.n).contains(&j));
        (self.coords[t] >> (self.n - j)) & 1 == 1
    }

    /// Coordinate-wise XOR with another point of the same shape.
    ///
    /// # Panics
    ///
    /// Panics on shape mismatch.
    #[must_use]
    pub fn xor(&self, other: &NetPoint) -> NetPoint {
        assert_eq!(self.n, other.n);
        assert_eq!(self.coords.len(), other.coords.len());
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a ^ b)
            .collect();
        NetPoint { n: self.n, coords }
    }

    /// Converts the point to S reals in `[0,1)`, adding `shift` to every
    /// coordinate. With `shift = 2^-(n+1)` the points sit at the centers of
    /// their dyadic cells instead of the lower corners.
    ///
    /// # Panics
    ///
    /// Panics unless `0 <= shift < 2^-n`.
    #[must_use]
    pub fn to_reals(&self, shift: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.coords.len()];
        self.write_reals(shift, &mut out);
        out
    }

    /// No-allocation variant of [`to_reals`](Self::to_reals); fills `out`.
    ///
    /// # Panics
    ///
    /// Panics on shift out of range or `out` length mismatch.
    pub fn write_reals(&self, shift: f64, out: &mut [f64]) {
        write_reals_raw(&self.coords, self.n, shift, out);
    }
}

/// Shared conversion used by both `NetPoint` and the streaming walkers.
#[inline]
pub(crate) fn write_reals_raw(coords: &[BitColumn], n: u32, shift: f64, out: &mut [f64]) {
    let scale = 2f64.powi(-(n as i32));
    assert!(
        shift >= 0.0 && shift < scale,
        "shift {shift} must lie in [0, 2^-{n})"
    );
    assert_eq!(coords.len(), out.len());
    for (o, &c) in out.iter_mut().zip(coords) {
        *o = c as f64 * scale + shift;
    }
}

/// S generating matrices over F2, each `n` rows by `m` columns.
///
/// The value type behind everything else in this crate: nets are evaluated,
/// searched for, serialized, and integrated against through this struct.
/// Immutable after construction and cheap to share across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingMatrixSet {
    n: u32,
    m: u32,
    s: u32,
    /// Matrix i occupies `cols[i*m .. (i+1)*m]`, one word per column.
    cols: Vec<BitColumn>,
}

impl GeneratingMatrixSet {
    /// Builds a matrix set from one column list per coordinate.
    ///
    /// # Panics
    ///
    /// Panics if `n` is outside `1..=64`, `matrices` is empty, the per-
    /// coordinate lists have unequal lengths, or any column has bits above
    /// row `n`.
    #[must_use]
    pub fn new(n: u32, matrices: Vec<Vec<BitColumn>>) -> Self {
        assert!((1..=64).contains(&n), "n = {n} out of range");
        assert!(!matrices.is_empty(), "need at least one coordinate");
        let m = matrices[0].len() as u32;
        let s = matrices.len() as u32;
        let mut cols = Vec::with_capacity((m * s) as usize);
        for (i, mat) in matrices.iter().enumerate() {
            assert_eq!(
                mat.len() as u32,
                m,
                "matrix {i} has {} columns, expected {m}",
                mat.len()
            );
            for &c in mat {
                assert!(
                    c & !low_mask(n) == 0,
                    "column {c:#x} wider than n = {n} bits"
                );
                cols.push(c);
            }
        }
        GeneratingMatrixSet { n, m, s, cols }
    }

    /// Digit precision (rows per matrix).
    #[must_use]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Column count per matrix; the net holds `2^m` points.
    #[must_use]
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Dimension S (number of matrices / coordinates).
    #[must_use]
    pub fn dim(&self) -> u32 {
        self.s
    }

    /// Column `j` (0-based) of matrix `i` (0-based).
    #[inline]
    #[must_use]
    pub fn column(&self, i: usize, j: usize) -> BitColumn {
        self.cols[i * self.m as usize + j]
    }

    /// All columns of matrix `i`.
    #[must_use]
    pub fn matrix(&self, i: usize) -> &[BitColumn] {
        &self.cols[i * self.m as usize..(i + 1) * self.m as usize]
    }

    /// Checks the regularity condition for every coordinate `i` and every
    /// depth `d = 1..=min(m, n)`: the upper `d x d` submatrix of the first
    /// `d` columns of `C_i` must be invertible. Nets produced by the greedy
    /// search satisfy this by construction; loaded ones may not.
    #[must_use]
    pub fn projection_regular(&self) -> bool {
        if self.m > self.n {
            return false;
        }
        for i in 0..self.s as usize {
            let mat = self.matrix(i);
            for d in 1..=self.m as usize {
                if !is_upper_square_regular(&mat[..d], self.n) {
                    return false;
                }
            }
        }
        true
    }

    /// The net point with index `k` at depth `d`: coordinate `T` is the
    /// first `d` columns of `C_T` times the digit vector of `k`.
    ///
    /// # Panics
    ///
    /// Panics if `d > m` or `k >= 2^d`.
    #[must_use]
    pub fn net_point(&self, k: u64, d: u32) -> NetPoint {
        assert!(d <= self.m, "depth d = {d} exceeds m = {}", self.m);
        assert!(
            d == 64 || k < (1u64 << d),
            "index k = {k} out of range for 2^{d} points"
        );
        let coords = (0..self.s as usize)
            .map(|i| matvec(&self.matrix(i)[..d as usize], k))
            .collect();
        NetPoint { n: self.n, coords }
    }

    /// Iterates over all `2^d` points in Gray-code order: consecutive
    /// points differ by XOR with exactly one column per coordinate, and the
    /// first point is the zero point. As a set the output equals
    /// `{ net_point(k, d) : 0 <= k < 2^d }`.
    ///
    /// # Panics
    ///
    /// Panics if `d > m`.
    #[must_use]
    pub fn points_gray(&self, d: u32) -> GrayPoints<'_> {
        assert!(d <= self.m, "depth d = {d} exceeds m = {}", self.m);
        GrayPoints {
            g: self,
            d,
            next_k: 0,
            state: vec![0; self.s as usize],
        }
    }
}

/// Iterator returned by [`GeneratingMatrixSet::points_gray`].
pub struct GrayPoints<'a> {
    g: &'a GeneratingMatrixSet,
    d: u32,
    next_k: u64,
    state: Vec<BitColumn>,
}

impl Iterator for GrayPoints<'_> {
    type Item = NetPoint;

    fn next(&mut self) -> Option<NetPoint> {
        let count = 1u64 << self.d;
        if self.next_k == count {
            return None;
        }
        if self.next_k > 0 {
            let flip = self.next_k.trailing_zeros();
            for (i, st) in self.state.iter_mut().enumerate() {
                *st ^= self.g.column(i, flip as usize);
            }
        }
        self.next_k += 1;
        Some(NetPoint {
            n: self.g.n,
            coords: self.state.clone(),
        })
    }
}

/// Streaming Gray-code walk over the index range `ks` of a depth-`d` net,
/// without allocating a point per step. `col(i, j)` supplies column `j` of
/// matrix `i`; `visit(k, state)` sees every index in order along with the
/// point of Gray code `g(k) = k ^ (k >> 1)`.
///
/// Chunked evaluators rely on the fact that a walk over `[a, b)` visits
/// exactly the same states as the corresponding slice of a walk over the
/// full range, so partial sums can be computed independently per chunk.
pub(crate) fn walk_gray<C, V>(s: usize, d: u32, col: C, ks: Range<u64>, mut visit: V)
where
    C: Fn(usize, u32) -> BitColumn,
    V: FnMut(u64, &[BitColumn]),
{
    debug_assert!(d < 64);
    debug_assert!(ks.end <= 1u64 << d);
    if ks.is_empty() {
        return;
    }
    let mut state = vec![0u64; s];
    // Jump directly to the starting point: Gray code of the first index.
    let mut gcode = ks.start ^ (ks.start >> 1);
    while gcode != 0 {
        let j = gcode.trailing_zeros();
        for (i, st) in state.iter_mut().enumerate() {
            *st ^= col(i, j);
        }
        gcode &= gcode - 1;
    }
    visit(ks.start, &state);
    for k in ks.start + 1..ks.end {
        let j = k.trailing_zeros();
        for (i, st) in state.iter_mut().enumerate() {
            *st ^= col(i, j);
        }
        visit(k, &state);
    }
}
