//! Quasi-Monte Carlo integration over a digital net, plus a plain Monte
//! Carlo baseline.
//!
//! The QMC estimate is the equal-weight average of the integrand over the
//! first `2^d` net points, optionally translated by `2^{-n-1}` in every
//! coordinate so that no point sits on the boundary of its dyadic cell.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::f2::{walk_gray, write_reals_raw, GeneratingMatrixSet};
use crate::kahan::KahanSum;
use crate::rng::{derive_rng, DOMAIN_MC};
use crate::wafom::{chunk_count, CHUNK_BITS};

/// Highest precision whose shifted coordinates are still exact in an `f64`:
/// `k + 1/2` needs `n + 1` significand bits.
pub const MAX_PRECISION: u32 = 52;

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("integrand returned {value} at point index {index}, x = {point:?}")]
    NonFinite {
        index: u64,
        point: Vec<f64>,
        value: f64,
    },
    #[error("depth d = {d} exceeds the matrices' column count m = {m}")]
    DepthTooLarge { d: u32, m: u32 },
    #[error("precision n = {n} exceeds {MAX_PRECISION}, coordinates would not be exact in f64")]
    PrecisionTooHigh { n: u32 },
}

/// One QMC integration job: which net, how many points, what to integrate,
/// and whether to apply the half-cell translation.
pub struct IntegrationRequest<'a, F> {
    pub matrices: &'a GeneratingMatrixSet,
    /// Use the first `2^d` points.
    pub d: u32,
    pub integrand: F,
    /// Add `2^{-n-1}` to every coordinate.
    pub shift: bool,
}

/// Equal-weight average of the integrand over the first `2^d` net points.
///
/// Points are enumerated in Gray-code order and summed with compensation in
/// fixed-size chunks that are merged in index order, so the result does not
/// depend on the number of threads. A non-finite integrand value aborts the
/// computation and reports the lowest offending point index.
pub fn qmc_integrate<F>(req: IntegrationRequest<'_, F>) -> Result<f64, IntegrateError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let g = req.matrices;
    let n = g.n();
    let s = g.dim() as usize;
    let d = req.d;
    if d > g.m() {
        return Err(IntegrateError::DepthTooLarge { d, m: g.m() });
    }
    if n > MAX_PRECISION {
        return Err(IntegrateError::PrecisionTooHigh { n });
    }
    let shift = if req.shift {
        2f64.powi(-(n as i32 + 1))
    } else {
        0.0
    };
    let col = |i: usize, j: u32| g.column(i, j as usize);
    let points = 1u64 << d;

    let partials: Vec<(KahanSum, Option<u64>)> = (0..chunk_count(d))
        .into_par_iter()
        .map(|c| {
            let lo = c << CHUNK_BITS;
            let hi = (lo + (1 << CHUNK_BITS)).min(points);
            let mut x = vec![0.0f64; s];
            let mut acc = KahanSum::new();
            let mut bad: Option<u64> = None;
            walk_gray(s, d, col, lo..hi, |k, state| {
                write_reals_raw(state, n, shift, &mut x);
                let v = (req.integrand)(&x);
                if !v.is_finite() && bad.is_none() {
                    bad = Some(k);
                }
                acc.add(v);
            });
            (acc, bad)
        })
        .collect();

    if let Some(index) = partials.iter().filter_map(|(_, bad)| *bad).min() {
        // `index` counts along the Gray-code enumeration.
        let point = g.net_point(index ^ (index >> 1), d).to_reals(shift);
        let value = (req.integrand)(&point);
        return Err(IntegrateError::NonFinite {
            index,
            point,
            value,
        });
    }

    let mut acc = KahanSum::new();
    for &(p, _) in &partials {
        acc.absorb(p);
    }
    Ok(acc.value() / points as f64)
}

/// Mean of `n_samples` i.i.d. uniform evaluations, deterministic per seed.
pub fn mc_integrate<F>(
    integrand: F,
    s: u32,
    n_samples: u64,
    seed: u64,
) -> Result<f64, IntegrateError>
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = derive_rng(seed, &[DOMAIN_MC]);
    let mut x = vec![0.0f64; s as usize];
    let mut acc = KahanSum::new();
    for index in 0..n_samples {
        for xi in x.iter_mut() {
            *xi = rng.gen::<f64>();
        }
        let v = integrand(&x);
        if !v.is_finite() {
            return Err(IntegrateError::NonFinite {
                index,
                point: x,
                value: v,
            });
        }
        acc.add(v);
    }
    Ok(acc.value() / n_samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng;
    use rand::Rng;

    /// Random matrices with regular upper squares.
    fn random_net(n: u32, m: u32, s: u32, tag: u64) -> GeneratingMatrixSet {
        let mut rng = derive_rng(0x77, &[tag]);
        let matrices = (0..s)
            .map(|_| loop {
                let cols: Vec<u64> = (0..m)
                    .map(|_| rng.gen::<u64>() & ((1u64 << n) - 1))
                    .collect();
                if crate::f2::is_upper_square_regular(&cols, n) {
                    return cols;
                }
            })
            .collect();
        GeneratingMatrixSet::new(n, matrices)
    }

    fn identity_net(n: u32, m: u32, s: u32) -> GeneratingMatrixSet {
        let matrices = (0..s)
            .map(|_| (0..m).map(|j| 1u64 << (n - 1 - j)).collect())
            .collect();
        GeneratingMatrixSet::new(n, matrices)
    }

    #[test]
    fn constant_function_is_integrated_exactly() {
        let g = random_net(20, 10, 3, 1);
        let v = qmc_integrate(IntegrationRequest {
            matrices: &g,
            d: 10,
            integrand: |_: &[f64]| 1.0,
            shift: true,
        })
        .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn first_coordinate_mean_on_the_identity_net() {
        let g = identity_net(30, 2, 2);
        let v = qmc_integrate(IntegrationRequest {
            matrices: &g,
            d: 2,
            integrand: |x: &[f64]| x[0],
            shift: true,
        })
        .unwrap();
        assert_eq!(v, 0.375 + 2f64.powi(-31));
    }

    #[test]
    fn shifted_coordinates_stay_strictly_inside_the_cube() {
        let g = random_net(12, 12, 4, 2);
        let lo = 2f64.powi(-13);
        let ok = qmc_integrate(IntegrationRequest {
            matrices: &g,
            d: 12,
            integrand: |x: &[f64]| {
                if x.iter().all(|&xi| (lo..1.0).contains(&xi)) {
                    1.0
                } else {
                    f64::NAN
                }
            },
            shift: true,
        });
        assert_eq!(ok.unwrap(), 1.0);
    }

    #[test]
    fn linear_in_the_integrand() {
        let g = random_net(24, 11, 3, 3);
        let run = |f: &(dyn Fn(&[f64]) -> f64 + Sync)| {
            qmc_integrate(IntegrationRequest {
                matrices: &g,
                d: 11,
                integrand: f,
                shift: true,
            })
            .unwrap()
        };
        let fa = |x: &[f64]| (7.0 * x[0]).sin();
        let fb = |x: &[f64]| x[1] * x[2];
        let combined = run(&|x: &[f64]| 3.0 * fa(x) - 0.5 * fb(x));
        let separate = 3.0 * run(&fa) - 0.5 * run(&fb);
        assert!((combined - separate).abs() < 1e-12);
    }

    #[test]
    fn step_functions_constant_on_dyadic_cells_are_averaged_exactly() {
        // With n = m = d = 8 and one dimension, the unshifted points are all
        // 256 dyadic rationals k/256, so a function constant on each cell
        // integrates to its exact mean.
        let g = identity_net(8, 8, 1);
        let f = |x: &[f64]| ((x[0] * 256.0) as u64 % 7) as f64;
        let v = qmc_integrate(IntegrationRequest {
            matrices: &g,
            d: 8,
            integrand: f,
            shift: true,
        })
        .unwrap();
        let exact: f64 = (0..256u64).map(|k| (k % 7) as f64).sum::<f64>() / 256.0;
        assert_eq!(v, exact);
    }

    #[test]
    fn non_finite_values_are_reported_with_the_lowest_index() {
        let g = identity_net(10, 10, 1);
        let err = qmc_integrate(IntegrationRequest {
            matrices: &g,
            d: 10,
            integrand: |x: &[f64]| if x[0] > 0.6 { f64::INFINITY } else { x[0] },
            shift: false,
        })
        .unwrap_err();
        match err {
            IntegrateError::NonFinite {
                index,
                point,
                value,
            } => {
                // The first position along the Gray-code walk whose point
                // exceeds the threshold.
                let expected = (0..1024u64)
                    .find(|&k| g.net_point(k ^ (k >> 1), 10).to_reals(0.0)[0] > 0.6)
                    .unwrap();
                assert_eq!(index, expected);
                assert!(point[0] > 0.6);
                assert!(value.is_infinite());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn depth_and_precision_are_validated() {
        let g = identity_net(10, 4, 1);
        assert!(matches!(
            qmc_integrate(IntegrationRequest {
                matrices: &g,
                d: 5,
                integrand: |_: &[f64]| 0.0,
                shift: false
            }),
            Err(IntegrateError::DepthTooLarge { d: 5, m: 4 })
        ));
        let deep = identity_net(60, 4, 1);
        assert!(matches!(
            qmc_integrate(IntegrationRequest {
                matrices: &deep,
                d: 4,
                integrand: |_: &[f64]| 0.0,
                shift: true
            }),
            Err(IntegrateError::PrecisionTooHigh { n: 60 })
        ));
    }

    #[test]
    fn result_does_not_depend_on_the_thread_count() {
        let g = random_net(26, 16, 4, 4);
        let f = |x: &[f64]| (x[0] + 2.0 * x[1]).cos() * x[2] + x[3].sqrt();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    qmc_integrate(IntegrationRequest {
                        matrices: &g,
                        d: 16,
                        integrand: f,
                        shift: true,
                    })
                    .unwrap()
                })
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }

    #[test]
    fn mc_mean_of_first_coordinate_approaches_one_half() {
        let n = 1u64 << 20;
        let v = mc_integrate(|x| x[0], 3, n, 42).unwrap();
        let sigma = (1.0f64 / 12.0).sqrt();
        assert!((v - 0.5).abs() < 3.0 * sigma / (n as f64).sqrt());
    }

    #[test]
    fn mc_is_deterministic_and_exact_on_constants() {
        let a = mc_integrate(|_| 2.5, 2, 1000, 7).unwrap();
        assert_eq!(a, 2.5);
        let b = mc_integrate(|x| x[0] * x[1], 2, 1000, 7).unwrap();
        let c = mc_integrate(|x| x[0] * x[1], 2, 1000, 7).unwrap();
        assert_eq!(b.to_bits(), c.to_bits());
        assert_ne!(
            mc_integrate(|x| x[0] * x[1], 2, 1000, 8).unwrap().to_bits(),
            b.to_bits()
        );
    }

    #[test]
    fn mc_reports_non_finite_samples() {
        let err = mc_integrate(|x| 1.0 / (x[0] - x[0]), 1, 10, 3).unwrap_err();
        assert!(matches!(err, IntegrateError::NonFinite { .. }));
    }
}
