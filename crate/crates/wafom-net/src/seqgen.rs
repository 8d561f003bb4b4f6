//! Digital nets driven by linear recurring sequences.
//!
//! A primitive polynomial `p(t) = 1 + a_1 t + ... + a_d t^d` over F2 defines
//! the recursion `z_{j+d} = a_1 z_{j+d-1} + ... + a_d z_j`. Started from any
//! nonzero initial state the bit sequence has full period `2^d - 1`, and the
//! window states `(z_j, ..., z_{j+d-1})` sweep every nonzero vector exactly
//! once. Mapping each window through a fixed n-by-d matrix `U` with regular
//! upper d-by-d block, and reading `s` consecutive windows per point, yields
//! the point set
//!
//! ```text
//! { (U z_j, U z_{j+1}, ..., U z_{j+s-1}) : 0 <= j < 2^d - 1 }  union  { 0 }
//! ```
//!
//! which equals the digital net generated by `C_i = U A^{i-1}` where `A` is
//! the companion matrix of the recursion. The sequential form needs only the
//! `n x d` matrix `U` instead of `s` full generating matrices, and WAFOM can
//! be evaluated by sliding a window of `s` per-coordinate products along the
//! sequence instead of rebuilding every point from scratch.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::f2::{
    is_upper_square_regular, matvec, matvec_msb, BitColumn, GeneratingMatrixSet, NetPoint,
};
use crate::kahan::KahanSum;
use crate::rng::{derive_rng, DOMAIN_SEQGEN};
use crate::wafom::{WafomError, WafomTables};

/// Sliding-product WAFOM recomputes its running product from the stored
/// per-coordinate factors this often, so divide/multiply rounding drift
/// cannot accumulate over long periods.
const REANCHOR_INTERVAL: u64 = 1 << 12;

#[derive(Debug, Error)]
pub enum SeqGenError {
    #[error("polynomial {coeffs:#x} of degree {degree} is not primitive: {reason}")]
    NotPrimitive {
        degree: u32,
        coeffs: u64,
        reason: String,
    },
    #[error("polynomial degree {degree} is outside the supported range 2..=32")]
    BadDegree { degree: u32 },
    #[error("initial state must be a nonzero {degree}-bit value, got {state:#x}")]
    BadInitialState { degree: u32, state: u64 },
    #[error("matrix U must be {n} x {degree} with regular upper square block")]
    BadMatrix { n: u32, degree: u32 },
    #[error("precision n must be in 1..=64, got {n}")]
    BadPrecision { n: u32 },
    #[error(transparent)]
    Wafom(#[from] WafomError),
}

/// Lowest-value primitive polynomial per degree, indexed by `degree - 2`.
///
/// Encoding: bit `k` holds the coefficient of `t^k`, so every entry has bit 0
/// and bit `degree` set. Each value is the smallest such integer that passes
/// [`PrimitivePoly::new`]; the table is regenerated and checked by a test.
const PRIMITIVE_POLY_TABLE: [u64; 31] = [
    7, 11, 19, 37, 67, 131, 285, 529, 1033, 2053, 4179, 8219, 16427, 32771, 65581, 131081, 262183,
    524327, 1048585, 2097157, 4194307, 8388641, 16777243, 33554441, 67108935, 134217767, 268435465,
    536870917, 1073741907, 2147483657, 4294967471,
];

/// A polynomial over F2 that is primitive: irreducible, with `t` generating
/// the full multiplicative group of the degree-`d` extension field.
///
/// Primitivity is what guarantees the driven bit sequence attains the maximal
/// period `2^d - 1`; the constructor verifies it rather than trusting the
/// caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimitivePoly {
    degree: u32,
    coeffs: u64,
}

impl PrimitivePoly {
    /// Checks that `coeffs` (bit `k` = coefficient of `t^k`) is a primitive
    /// polynomial of the given degree and wraps it.
    ///
    /// Requires `2 <= degree <= 32`, a set constant term, and a set leading
    /// term; anything failing the primitivity test is rejected with the
    /// reason spelled out.
    pub fn new(degree: u32, coeffs: u64) -> Result<Self, SeqGenError> {
        if !(2..=32).contains(&degree) {
            return Err(SeqGenError::BadDegree { degree });
        }
        let not_primitive = |reason: &str| SeqGenError::NotPrimitive {
            degree,
            coeffs,
            reason: reason.to_string(),
        };
        if coeffs >> degree != 1 {
            return Err(not_primitive("leading coefficient is not t^degree"));
        }
        if coeffs & 1 == 0 {
            return Err(not_primitive("constant term is zero, so t divides it"));
        }
        if !is_irreducible(coeffs, degree) {
            return Err(not_primitive("it factors over F2"));
        }
        let group_order = (1u64 << degree) - 1;
        if polypow_mod(0b10, group_order, coeffs, degree) != 1 {
            return Err(not_primitive("t^(2^d - 1) is not 1"));
        }
        for prime in prime_factors(group_order) {
            if polypow_mod(0b10, group_order / prime, coeffs, degree) == 1 {
                return Err(not_primitive(
                    "the order of t divides a proper factor of 2^d - 1",
                ));
            }
        }
        Ok(Self { degree, coeffs })
    }

    /// The shipped lowest-value primitive polynomial of the given degree.
    pub fn for_degree(degree: u32) -> Result<Self, SeqGenError> {
        if !(2..=32).contains(&degree) {
            return Err(SeqGenError::BadDegree { degree });
        }
        Self::new(degree, PRIMITIVE_POLY_TABLE[(degree - 2) as usize])
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Raw coefficient bits, bit `k` holding the coefficient of `t^k`.
    pub fn coeffs(&self) -> u64 {
        self.coeffs
    }

    /// Coefficient `a_k` of `t^k` as a bool.
    pub fn coeff(&self, k: u32) -> bool {
        k <= self.degree && (self.coeffs >> k) & 1 == 1
    }

    /// Feedback mask for the shift-register step: bit `d - t` is `a_t`, so
    /// the next sequence bit is the parity of `state & mask`.
    fn feedback_mask(&self) -> u64 {
        let mut mask = 0u64;
        for t in 1..=self.degree {
            if self.coeff(t) {
                mask |= 1 << (self.degree - t);
            }
        }
        mask
    }

    /// Smallest valid coefficient value that is primitive at this degree.
    /// Source of the shipped table.
    #[cfg(test)]
    pub(crate) fn find_lowest(degree: u32) -> u64 {
        let lead = 1u64 << degree;
        (0..1u64 << (degree - 1))
            .map(|inner| lead | (inner << 1) | 1)
            .find(|&c| Self::new(degree, c).is_ok())
            .expect("every degree has a primitive polynomial")
    }
}

/// Degree of a polynomial in bit encoding, `-1` for the zero polynomial.
fn poly_degree(p: u64) -> i32 {
    63 - p.leading_zeros() as i32
}

/// Remainder of `a` modulo `b` over F2, `b` nonzero.
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = poly_degree(b);
    while poly_degree(a) >= db {
        a ^= b << (poly_degree(a) - db);
    }
    a
}

fn poly_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = poly_rem(a, b);
        a = b;
        b = r;
    }
    a
}

/// Product of two polynomials of degree below `d`, reduced modulo `p`
/// (degree exactly `d`).
fn polymul_mod(a: u64, b: u64, p: u64, d: u32) -> u64 {
    let mut acc = 0u64;
    let mut shifted = a;
    let mut rest = b;
    for _ in 0..d {
        if rest & 1 == 1 {
            acc ^= shifted;
        }
        rest >>= 1;
        shifted <<= 1;
        if (shifted >> d) & 1 == 1 {
            shifted ^= p;
        }
    }
    acc
}

fn polypow_mod(base: u64, mut exp: u64, p: u64, d: u32) -> u64 {
    let mut result = 1u64;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            result = polymul_mod(result, b, p, d);
        }
        b = polymul_mod(b, b, p, d);
        exp >>= 1;
    }
    result
}

/// `t^(2^k) mod p` by squaring `t` repeatedly, for the irreducibility test.
fn frobenius_power(k: u32, p: u64, d: u32) -> u64 {
    let mut x = 0b10u64;
    for _ in 0..k {
        x = polymul_mod(x, x, p, d);
    }
    x
}

/// Rabin's criterion: `p` of degree `d` is irreducible over F2 iff
/// `t^(2^d) == t (mod p)` and `gcd(t^(2^(d/r)) - t, p) = 1` for every prime
/// `r` dividing `d`.
fn is_irreducible(p: u64, d: u32) -> bool {
    if frobenius_power(d, p, d) != 0b10 {
        return false;
    }
    for r in prime_factors(d as u64) {
        let x = frobenius_power(d / r as u32, p, d);
        if poly_gcd(x ^ 0b10, p) != 1 {
            return false;
        }
    }
    true
}

/// Distinct prime factors by trial division; inputs stay below 2^32.
fn prime_factors(mut x: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2u64;
    while f * f <= x {
        if x.is_multiple_of(f) {
            out.push(f);
            while x.is_multiple_of(f) {
                x /= f;
            }
        }
        f += if f == 2 { 1 } else { 2 };
    }
    if x > 1 {
        out.push(x);
    }
    out
}

/// Bits `z_0, z_1, ...` of the recurring sequence driven by `poly` from the
/// initial state `init` (bit `k` of `init` is `z_k`, must be nonzero).
pub fn msequence(poly: &PrimitivePoly, init: u64, length: usize) -> Result<Vec<u8>, SeqGenError> {
    let d = poly.degree;
    if init == 0 || init >> d != 0 {
        return Err(SeqGenError::BadInitialState {
            degree: d,
            state: init,
        });
    }
    let mask = poly.feedback_mask();
    let mut state = init;
    let mut out = Vec::with_capacity(length);
    for _ in 0..length {
        out.push((state & 1) as u8);
        state = step_state(state, mask, d);
    }
    Ok(out)
}

/// One shift-register step: drop `z_j`, append `z_{j+d}` at the top.
#[inline]
fn step_state(state: u64, feedback_mask: u64, d: u32) -> u64 {
    let new_bit = (state & feedback_mask).count_ones() as u64 & 1;
    (state >> 1) | (new_bit << (d - 1))
}

/// Companion matrix of the recursion as `d` column words in the usual
/// packing (bit `d - r` of a column is row `r`).
///
/// Row `r < d` of column `r + 1` carries the shift, and the bottom row holds
/// the reversed coefficients `(a_d, ..., a_1)`, so that multiplying a window
/// state by this matrix advances it by one step.
pub fn companion_matrix(poly: &PrimitivePoly) -> Vec<BitColumn> {
    let d = poly.degree;
    (1..=d)
        .map(|c| {
            let mut col = 0u64;
            if c >= 2 {
                col |= 1 << (d - (c - 1));
            }
            if poly.coeff(d - c + 1) {
                col |= 1;
            }
            col
        })
        .collect()
}

/// A sequential generator: recursion, output precision, mixing matrix, and
/// starting state.
///
/// The point set it generates is determined by `poly`, `n`, and `u_cols`
/// alone; `init` only rotates the enumeration order of the nonzero windows,
/// so searches fix it to 1.
#[derive(Debug, Clone)]
pub struct SeqGenConfig {
    poly: PrimitivePoly,
    n: u32,
    u_cols: Vec<BitColumn>,
    init: u64,
}

impl SeqGenConfig {
    /// Validates and assembles a configuration.
    ///
    /// `u_cols` gives the n-by-d matrix `U` as one word per column with row 1
    /// at bit `n - 1`; its upper d-by-d block must be regular so that every
    /// one-dimensional projection of the resulting net is equidistributed.
    pub fn new(
        poly: PrimitivePoly,
        n: u32,
        u_cols: Vec<BitColumn>,
        init: u64,
    ) -> Result<Self, SeqGenError> {
        let d = poly.degree();
        if n == 0 || n > 64 {
            return Err(SeqGenError::BadPrecision { n });
        }
        if init == 0 || init >> d != 0 {
            return Err(SeqGenError::BadInitialState {
                degree: d,
                state: init,
            });
        }
        let cols_fit = u_cols.iter().all(|&c| n == 64 || c >> n == 0);
        if u_cols.len() != d as usize || d > n || !cols_fit || !is_upper_square_regular(&u_cols, n)
        {
            return Err(SeqGenError::BadMatrix { n, degree: d });
        }
        Ok(Self {
            poly,
            n,
            u_cols,
            init,
        })
    }

    pub fn poly(&self) -> &PrimitivePoly {
        &self.poly
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn u_cols(&self) -> &[BitColumn] {
        &self.u_cols
    }

    pub fn init(&self) -> u64 {
        self.init
    }

    /// Number of points the generator produces, `2^d - 1` windows plus zero.
    pub fn point_count(&self) -> u64 {
        1u64 << self.poly.degree()
    }
}

/// All points of the sequential generator in `s` dimensions: the zero point
/// first, then one point per window position along the sequence.
pub fn seqgen_points(cfg: &SeqGenConfig, s: u32) -> Vec<NetPoint> {
    let d = cfg.poly.degree();
    let mask = cfg.poly.feedback_mask();
    let period = (1u64 << d) - 1;
    let sd = s as usize;

    // Image of every window state along one period, extended by s - 1 wrapped
    // states so each point can read s consecutive images.
    let mut images = Vec::with_capacity(period as usize + sd - 1);
    let mut state = cfg.init;
    for _ in 0..period as usize + sd - 1 {
        images.push(matvec(&cfg.u_cols, state));
        state = step_state(state, mask, d);
    }

    let mut points = Vec::with_capacity(period as usize + 1);
    points.push(NetPoint::new(cfg.n, vec![0; sd]));
    for j in 0..period as usize {
        points.push(NetPoint::new(cfg.n, images[j..j + sd].to_vec()));
    }
    points
}

/// The same point set as [`seqgen_points`], expressed as an ordinary digital
/// net with generating matrices `C_i = U A^{i-1}`.
pub fn seqgen_as_digital_net(cfg: &SeqGenConfig, s: u32) -> GeneratingMatrixSet {
    let d = cfg.poly.degree();
    let a_cols = companion_matrix(&cfg.poly);

    // Columns of A^{i-1}, starting from the identity.
    let mut power: Vec<BitColumn> = (1..=d).map(|c| 1 << (d - c)).collect();
    let mut matrices = Vec::with_capacity(s as usize);
    for _ in 0..s {
        let ci: Vec<Vec<u64>> = power
            .iter()
            .map(|&col| vec![matvec_msb(&cfg.u_cols, col, d)])
            .collect();
        matrices.push(ci.into_iter().flatten().collect::<Vec<u64>>());
        power = power
            .iter()
            .map(|&col| matvec_msb(&a_cols, col, d))
            .collect();
    }
    GeneratingMatrixSet::new(cfg.n, matrices)
}

/// WAFOM of the sequential generator's point set in `s` dimensions, computed
/// in time linear in the point count.
///
/// A point's factor is the product of `s` per-coordinate table products, and
/// consecutive points share `s - 1` coordinates, so the running product is
/// updated by one divide and one multiply per step. The products are strictly
/// positive, and a periodic recomputation from the stored factors keeps
/// rounding drift bounded; agreement with the direct evaluation is at the
/// 1e-9 level rather than bitwise.
pub fn wafom_sequential(cfg: &SeqGenConfig, s: u32, tables: &WafomTables) -> f64 {
    assert_eq!(tables.n(), cfg.n, "tables built for a different precision");
    let d = cfg.poly.degree();
    let mask = cfg.poly.feedback_mask();
    let period = (1u64 << d) - 1;
    let sd = s as usize;

    let mut acc = KahanSum::new();

    // Zero point first, matching the enumeration order of seqgen_points.
    let zero_factor = tables.column_product(0);
    let mut zero_term = 1.0f64;
    for _ in 0..sd {
        zero_term *= zero_factor;
    }
    acc.add(zero_term - 1.0);

    // Ring of the s current per-coordinate factors; `window` is their product.
    let mut state = cfg.init;
    let mut ring = Vec::with_capacity(sd);
    let mut window = 1.0f64;
    for _ in 0..sd {
        let factor = tables.column_product(matvec(&cfg.u_cols, state));
        window *= factor;
        ring.push(factor);
        state = step_state(state, mask, d);
    }

    let mut oldest = 0usize;
    for j in 0..period {
        if j > 0 && j % REANCHOR_INTERVAL == 0 {
            window = ring.iter().product();
        }
        acc.add(window - 1.0);
        let fresh = tables.column_product(matvec(&cfg.u_cols, state));
        window = window / ring[oldest] * fresh;
        ring[oldest] = fresh;
        oldest = (oldest + 1) % sd;
        state = step_state(state, mask, d);
    }

    acc.value() / (1u64 << d) as f64
}

/// Search settings for [`search_seqgen`].
#[derive(Debug, Clone)]
pub struct SeqGenSearchConfig {
    /// Output precision in bits.
    pub n: u32,
    /// Dimension the WAFOM objective is evaluated in.
    pub s: u32,
    /// Recursion degree; the net has `2^degree` points.
    pub degree: u32,
    /// Total random candidates, split evenly between the two stages.
    pub trials: u32,
    /// Segment count for the WAFOM lookup tables.
    pub q: u32,
    /// Master seed; all candidate draws derive from it.
    pub seed: u64,
}

/// Outcome of a sequential-generator search.
#[derive(Debug, Clone)]
pub struct SeqGenSearchResult {
    pub config: SeqGenConfig,
    pub best_wafom: f64,
    /// Best WAFOM after the first stage, before the bottom rows were opened.
    pub stage_one_wafom: f64,
}

/// Random regular d-by-d block, drawn column by column with rejection
/// against the span of the previous columns.
fn random_regular_block<R: Rng>(d: u32, rng: &mut R) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::with_capacity(d as usize);
    let mut cols = Vec::with_capacity(d as usize);
    let value_mask = if d == 64 { u64::MAX } else { (1u64 << d) - 1 };
    while cols.len() < d as usize {
        let col = rng.gen::<u64>() & value_mask;
        let mut reduced = col;
        for &b in &basis {
            reduced = reduced.min(reduced ^ b);
        }
        if reduced != 0 {
            cols.push(col);
            basis.push(reduced);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    cols
}

/// Two-stage random search for a low-WAFOM sequential generator.
///
/// Stage one draws regular upper blocks with zero rows below and keeps the
/// best; stage two keeps that block and draws the rows below it uniformly.
/// The stage-one winner stays in the running, so opening the bottom rows can
/// only improve the result. Candidate RNG streams are derived from the seed,
/// the stage, and the trial index, making every draw reproducible on its own.
pub fn search_seqgen(cfg: &SeqGenSearchConfig) -> Result<SeqGenSearchResult, SeqGenError> {
    let poly = PrimitivePoly::for_degree(cfg.degree)?;
    let d = cfg.degree;
    if cfg.n == 0 || cfg.n > 64 {
        return Err(SeqGenError::BadPrecision { n: cfg.n });
    }
    if d > cfg.n {
        return Err(SeqGenError::BadMatrix {
            n: cfg.n,
            degree: d,
        });
    }
    let tables = WafomTables::new(cfg.n, cfg.q)?;
    let trials_top = (cfg.trials / 2).max(1);
    let trials_bottom = cfg.trials.saturating_sub(trials_top).max(1);

    let evaluate = |u_cols: Vec<u64>| -> (f64, Vec<u64>) {
        let candidate = SeqGenConfig {
            poly,
            n: cfg.n,
            u_cols,
            init: 1,
        };
        let w = wafom_sequential(&candidate, cfg.s, &tables);
        (w, candidate.u_cols)
    };

    let top_shift = cfg.n - d;
    let stage_one: Vec<(f64, Vec<u64>)> = (0..trials_top)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(cfg.seed, &[DOMAIN_SEQGEN, 0, t as u64]);
            let block = random_regular_block(d, &mut rng);
            evaluate(block.into_iter().map(|c| c << top_shift).collect())
        })
        .collect();
    let (mut best_wafom, mut best_cols) = pick_best(stage_one);
    let stage_one_wafom = best_wafom;

    if top_shift > 0 {
        let bottom_mask = (1u64 << top_shift) - 1;
        let top_cols = best_cols.clone();
        let stage_two: Vec<(f64, Vec<u64>)> = (0..trials_bottom)
            .into_par_iter()
            .map(|t| {
                let mut rng = derive_rng(cfg.seed, &[DOMAIN_SEQGEN, 1, t as u64]);
                let cols = top_cols
                    .iter()
                    .map(|&c| c | (rng.gen::<u64>() & bottom_mask))
                    .collect();
                evaluate(cols)
            })
            .collect();
        let (w, cols) = pick_best(stage_two);
        if w < best_wafom {
            best_wafom = w;
            best_cols = cols;
        }
    }

    Ok(SeqGenSearchResult {
        config: SeqGenConfig {
            poly,
            n: cfg.n,
            u_cols: best_cols,
            init: 1,
        },
        best_wafom,
        stage_one_wafom,
    })
}

/// Smallest WAFOM wins; ties go to the earliest trial.
fn pick_best(candidates: Vec<(f64, Vec<u64>)>) -> (f64, Vec<u64>) {
    candidates
        .into_iter()
        .reduce(|best, next| if next.0 < best.0 { next } else { best })
        .expect("at least one candidate per stage")
}
