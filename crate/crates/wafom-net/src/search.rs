//! Greedy column-by-column random search for extensible low-WAFOM nets.
//!
//! The search fixes the first `d - 1` columns of every matrix and draws the
//! d-th columns at random `trials` times, keeping the tuple whose extended
//! net has the smallest WAFOM. Candidates are constrained so that for every
//! coordinate the upper `d x d` submatrix of the first `d` columns stays
//! invertible: each 1-dimensional projection then hits every dyadic
//! interval of length `2^-d` exactly once. One draw per coordinate is
//! accepted with probability exactly 1/2 (the new column's top `d` bits
//! must avoid the span of the previous tops, a halving condition), so
//! rejection sampling terminates quickly; the trace reports how many
//! redraws happened.
//!
//! Because the stage-d winner becomes the fixed prefix of stage d+1, the
//! result is a single matrix set whose every column prefix is the stage
//! winner: the point sets `P_1 ⊂ P_2 ⊂ ... ⊂ P_m` are nested, and doubling
//! the sample size keeps all previously evaluated points.
//!
//! Every trial draws from a generator derived from `(seed, d, trial)`, so a
//! run is reproducible trial by trial: [`candidate_rng`] plus
//! [`random_candidate_columns`] re-simulates any single candidate, which
//! the test suite uses to verify that stage winners really beat their
//! competitors.

use crate::f2::{low_mask, GeneratingMatrixSet};
use crate::kahan::KahanSum;
use crate::rng::{derive_rng, DOMAIN_SEARCH};
use crate::wafom::{
    chunk_count, chunk_partials, merge_mean, tabled_term, WafomError, WafomTables, CHUNK_BITS,
};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Parameters of one search run.
#[derive(Clone, Copy, Debug)]
pub struct SearchConfig {
    /// Digit precision (rows per matrix), `1..=64`.
    pub n: u32,
    /// Columns to search for; the result holds `2^m` points. `m <= n`.
    pub m: u32,
    /// Dimension.
    pub s: u32,
    /// Candidate tuples drawn per column stage (accepted draws; regularity
    /// redraws are counted separately).
    pub trials: u32,
    /// WAFOM table segments; must divide `n`.
    pub q: u32,
    /// Master seed; every trial derives its own stream from it.
    pub seed: u64,
}

/// Outcome of one column stage.
#[derive(Clone, Copy, Debug)]
pub struct StageRecord {
    pub d: u32,
    /// WAFOM of the extended net under the winning candidate, computed by
    /// the same chunked table evaluation as [`crate::wafom::wafom_tabled`]
    /// (bit-identical to re-evaluating the returned matrices).
    pub best_wafom: f64,
    pub trials: u32,
    /// Total regularity redraws across all trials and coordinates.
    pub rejections: u64,
    /// Wall time of the stage.
    pub seconds: f64,
}

/// Per-stage history of a search run; one record per `d = 1..=m`.
#[derive(Clone, Debug, Default)]
pub struct SearchTrace {
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("invalid search configuration: {detail}")]
    BadConfig { detail: String },
    #[error(transparent)]
    Table(#[from] WafomError),
}

/// The generator feeding trial `trial` of stage `d`. Derivation depends
/// only on `(seed, d, trial)`, never on evaluation order.
#[must_use]
pub fn candidate_rng(seed: u64, d: u32, trial: u32) -> ChaCha12Rng {
    derive_rng(seed, &[DOMAIN_SEARCH, d as u64, trial as u64])
}

/// Draws one candidate column per coordinate such that the upper `d x d`
/// submatrix of `(prefix, candidate)` stays invertible for every
/// coordinate, where `d - 1` is the prefix length. Returns the columns and
/// the number of rejected draws.
///
/// # Panics
///
/// Panics if `prefix` is empty, prefix lengths differ, or `d > n`.
#[must_use]
pub fn random_candidate_columns(
    prefix: &[Vec<u64>],
    n: u32,
    rng: &mut impl Rng,
) -> (Vec<u64>, u64) {
    let s = prefix.len();
    assert!(s >= 1);
    let d = prefix[0].len() as u32 + 1;
    assert!(d <= n, "stage d = {d} needs d <= n = {n}");
    let mut cands = Vec::with_capacity(s);
    let mut rejections = 0;
    for cols in prefix {
        assert_eq!(cols.len() as u32, d - 1, "ragged prefix");
        // Echelon basis of the previous columns' top-d bits; the candidate
        // is acceptable iff its own top bits fall outside the span.
        let mut basis = [0u64; 64];
        for &c in cols {
            let mut v = c >> (n - d);
            loop {
                let h = 63 - v.leading_zeros();
                if basis[h as usize] == 0 {
                    basis[h as usize] = v;
                    break;
                }
                v ^= basis[h as usize];
            }
        }
        let cand = loop {
            let cand = rng.gen::<u64>() & low_mask(n);
            let mut v = cand >> (n - d);
            while v != 0 {
                let h = 63 - v.leading_zeros();
                if basis[h as usize] == 0 {
                    break;
                }
                v ^= basis[h as usize];
            }
            if v != 0 {
                break cand;
            }
            rejections += 1;
        };
        cands.push(cand);
    }
    (cands, rejections)
}

/// Evaluates stage candidates against a fixed prefix.
///
/// The first `2^{d-1}` points of the extended net do not depend on the
/// candidate (the Gray-code walk only reaches the new column in the second
/// half), so their chunk partials are computed once per stage and reused
/// for every trial. The merged value is bit-identical to running
/// [`crate::wafom::wafom_tabled`] on the extended matrices.
pub struct StageEvaluator<'a> {
    prefix: &'a [Vec<u64>],
    tables: &'a WafomTables,
    d: u32,
    first_half: Option<Vec<KahanSum>>,
}

impl<'a> StageEvaluator<'a> {
    /// Prepares the evaluator for stage `d = prefix[0].len() + 1`.
    #[must_use]
    pub fn new(prefix: &'a [Vec<u64>], tables: &'a WafomTables) -> Self {
        let s = prefix.len();
        let d = prefix[0].len() as u32 + 1;
        // Caching pays off once the first half spans whole chunks.
        let first_half = (d > CHUNK_BITS).then(|| {
            chunk_partials(
                s,
                d,
                &|i: usize, j: u32| prefix[i][j as usize],
                &|state: &[u64]| tabled_term(tables, state),
                0..1u64 << (d - 1 - CHUNK_BITS),
            )
        });
        StageEvaluator {
            prefix,
            tables,
            d,
            first_half,
        }
    }

    /// WAFOM of the net extended by `candidate`, one column per coordinate.
    #[must_use]
    pub fn wafom_with(&self, candidate: &[u64]) -> f64 {
        let s = self.prefix.len();
        let d = self.d;
        let col = |i: usize, j: u32| {
            if (j as usize) < self.prefix[i].len() {
                self.prefix[i][j as usize]
            } else {
                debug_assert_eq!(j, d - 1);
                candidate[i]
            }
        };
        let term = |state: &[u64]| tabled_term(self.tables, state);
        match &self.first_half {
            None => {
                let partials = chunk_partials(s, d, &col, &term, 0..chunk_count(d));
                merge_mean(&partials, d)
            }
            Some(first) => {
                let half = 1u64 << (d - 1 - CHUNK_BITS);
                let second = chunk_partials(s, d, &col, &term, half..2 * half);
                merge_mean(first.iter().chain(&second), d)
            }
        }
    }
}

/// WAFOM of the net formed by `prefix` columns plus one `candidate` column
/// per coordinate. Convenience wrapper over [`StageEvaluator`] for
/// one-shot use.
#[must_use]
pub fn evaluate_stage(prefix: &[Vec<u64>], candidate: &[u64], tables: &WafomTables) -> f64 {
    StageEvaluator::new(prefix, tables).wafom_with(candidate)
}

/// Runs the full greedy search. For each stage `d = 1..=m`, draws
/// `cfg.trials` regular candidate tuples, keeps the one with the smallest
/// WAFOM (earliest trial wins ties), and appends it to the matrices.
///
/// The returned net is projection-regular by construction, and the trace's
/// `best_wafom` at stage `d` equals the table evaluator run on the returned
/// matrices at depth `d`.
///
/// # Errors
///
/// Fails on invalid dimensions or if the WAFOM tables cannot be built.
pub fn search_extensible(
    cfg: &SearchConfig,
) -> Result<(GeneratingMatrixSet, SearchTrace), SearchError> {
    if !(1..=64).contains(&cfg.n) || cfg.m < 1 || cfg.m > cfg.n || cfg.s < 1 {
        return Err(SearchError::BadConfig {
            detail: format!(
                "need 1 <= m <= n <= 64 and S >= 1, got n = {}, m = {}, S = {}",
                cfg.n, cfg.m, cfg.s
            ),
        });
    }
    if cfg.trials < 1 {
        return Err(SearchError::BadConfig {
            detail: "need at least one trial per stage".into(),
        });
    }
    let tables = WafomTables::new(cfg.n, cfg.q)?;
    let mut cols: Vec<Vec<u64>> = vec![Vec::with_capacity(cfg.m as usize); cfg.s as usize];
    let mut trace = SearchTrace::default();
    for d in 1..=cfg.m {
        let start = Instant::now();
        let evaluator = StageEvaluator::new(&cols, &tables);
        let results: Vec<(f64, u64, Vec<u64>)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = candidate_rng(cfg.seed, d, t);
                let (cand, rejections) = random_candidate_columns(&cols, cfg.n, &mut rng);
                (evaluator.wafom_with(&cand), rejections, cand)
            })
            .collect();
        let mut best = 0;
        for t in 1..results.len() {
            if results[t].0 < results[best].0 {
                best = t;
            }
        }
        let rejections = results.iter().map(|r| r.1).sum();
        let (best_wafom, _, winner) = &results[best];
        let best_wafom = *best_wafom;
        for (mat, &c) in cols.iter_mut().zip(winner.iter()) {
            mat.push(c);
        }
        trace.stages.push(StageRecord {
            d,
            best_wafom,
            trials: cfg.trials,
            rejections,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((
        GeneratingMatrixSet::new(cfg.n, cols),
        SearchTrace {
            stages: trace.stages,
        },
    ))
}
