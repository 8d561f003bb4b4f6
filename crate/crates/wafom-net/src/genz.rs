//! The six Genz test-function families with analytic integrals, randomized
//! instance generation, and the median-relative-error benchmark protocol.
//!
//! Each family is parameterized by a coefficient vector `a` and an offset
//! vector `u`. Difficulty is controlled by renormalizing a uniform draw of
//! `a` so its components sum to a prescribed value `h`; larger sums make the
//! integrand harder. The benchmark draws a fixed set of instances per
//! family, integrates each one over a range of net sizes, and reports the
//! median base-10 logarithm of the relative error per (family, size) cell,
//! optionally next to a plain Monte Carlo baseline at equal sample counts.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::f2::GeneratingMatrixSet;
use crate::integrate::{mc_integrate, qmc_integrate, IntegrateError, IntegrationRequest};
use crate::kahan::KahanSum;
use crate::rng::{derive_rng, derive_seed, DOMAIN_GENZ, DOMAIN_MC};

/// Relative errors of exactly zero would send the log to negative infinity;
/// they are reported as this floor instead, just below what double
/// precision can resolve.
pub const LOG10_RELERR_FLOOR: f64 = -17.0;

/// Instances whose exact integral is closer to zero than this are redrawn,
/// since the relative error is then meaningless.
pub const TINY_INTEGRAL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GenzError {
    #[error("unknown Genz family '{0}'")]
    UnknownFamily(String),
    #[error("dimension must be at least 1")]
    EmptyDimension,
    #[error("difficulty h must be positive, got {0}")]
    BadDifficulty(f64),
    #[error("coefficient vector must be positive and match u in length")]
    BadCoefficients,
    #[error("d range {lo}..{hi} does not fit the matrices (m = {m})")]
    BadDepthRange { lo: u32, hi: u32, m: u32 },
    #[error("family {family} sample {sample}: no instance with |integral| >= {TINY_INTEGRAL} after {attempts} draws")]
    RedrawLimit {
        family: GenzFamily,
        sample: u32,
        attempts: u32,
    },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// The six test integrand families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenzFamily {
    Oscillatory,
    ProductPeak,
    CornerPeak,
    Gaussian,
    Continuous,
    Discontinuous,
}

impl GenzFamily {
    pub const ALL: [GenzFamily; 6] = [
        GenzFamily::Oscillatory,
        GenzFamily::ProductPeak,
        GenzFamily::CornerPeak,
        GenzFamily::Gaussian,
        GenzFamily::Continuous,
        GenzFamily::Discontinuous,
    ];

    /// Conventional 1-based index, `f1` through `f6`.
    pub fn index(self) -> u32 {
        match self {
            GenzFamily::Oscillatory => 1,
            GenzFamily::ProductPeak => 2,
            GenzFamily::CornerPeak => 3,
            GenzFamily::Gaussian => 4,
            GenzFamily::Continuous => 5,
            GenzFamily::Discontinuous => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GenzFamily::Oscillatory => "oscillatory",
            GenzFamily::ProductPeak => "product_peak",
            GenzFamily::CornerPeak => "corner_peak",
            GenzFamily::Gaussian => "gaussian",
            GenzFamily::Continuous => "continuous",
            GenzFamily::Discontinuous => "discontinuous",
        }
    }
}

impl fmt::Display for GenzFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenzFamily {
    type Err = GenzError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "oscillatory" | "f1" => Ok(GenzFamily::Oscillatory),
            "product_peak" | "product-peak" | "f2" => Ok(GenzFamily::ProductPeak),
            "corner_peak" | "corner-peak" | "f3" => Ok(GenzFamily::CornerPeak),
            "gaussian" | "f4" => Ok(GenzFamily::Gaussian),
            "continuous" | "f5" => Ok(GenzFamily::Continuous),
            "discontinuous" | "f6" => Ok(GenzFamily::Discontinuous),
            other => Err(GenzError::UnknownFamily(other.to_string())),
        }
    }
}

/// Per-family difficulty values used for the 5-dimensional benchmark, in
/// family order f1..f6.
pub const H_PRESET_5: [f64; 6] = [4.5, 3.625, 0.925, 3.515, 1.02, 2.15];

/// Per-family difficulty values for the 10-dimensional benchmark, twice the
/// 5-dimensional ones.
pub const H_PRESET_10: [f64; 6] = [9.0, 7.25, 1.85, 7.03, 2.04, 4.3];

/// Difficulty for an arbitrary dimension, linear in `s` through the shipped
/// presets. Exact at `s` = 5 and 10; a plain extrapolation elsewhere.
pub fn default_h(family: GenzFamily, s: u32) -> f64 {
    H_PRESET_5[(family.index() - 1) as usize] * s as f64 / 5.0
}

/// One concrete integrand: a family with its parameter vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenzInstance {
    pub family: GenzFamily,
    /// Positive coefficients, summing to `h`.
    pub a: Vec<f64>,
    /// Offsets in `[0, 1]`.
    pub u: Vec<f64>,
    /// The coefficient sum the instance was normalized to.
    pub h: f64,
}

impl GenzInstance {
    /// Builds an instance from a raw positive coefficient draw by scaling it
    /// to sum to `h`. The scale of the draw itself is irrelevant.
    pub fn renormalized(
        family: GenzFamily,
        raw_a: &[f64],
        u: Vec<f64>,
        h: f64,
    ) -> Result<Self, GenzError> {
        if raw_a.is_empty() {
            return Err(GenzError::EmptyDimension);
        }
        if h <= 0.0 {
            return Err(GenzError::BadDifficulty(h));
        }
        if raw_a.len() != u.len()
            || raw_a.iter().any(|&x| x <= 0.0)
            || u.iter().any(|&x| !(0.0..=1.0).contains(&x))
        {
            return Err(GenzError::BadCoefficients);
        }
        let sum: f64 = raw_a.iter().sum();
        let a = raw_a.iter().map(|&x| x * h / sum).collect();
        Ok(Self { family, a, u, h })
    }

    pub fn dim(&self) -> u32 {
        self.a.len() as u32
    }

    /// Evaluates the integrand at a point of the unit cube.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.a.len());
        let a = &self.a;
        let u = &self.u;
        match self.family {
            GenzFamily::Oscillatory => {
                let t: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                (2.0 * std::f64::consts::PI * u[0] + t).cos()
            }
            GenzFamily::ProductPeak => a
                .iter()
                .zip(u)
                .zip(x)
                .map(|((ai, ui), xi)| {
                    let dxi = xi - ui;
                    1.0 / (ai.powi(-2) + dxi * dxi)
                })
                .product(),
            GenzFamily::CornerPeak => {
                let t: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                (1.0 + t).powi(-(a.len() as i32 + 1))
            }
            GenzFamily::Gaussian => {
                let t: f64 = a
                    .iter()
                    .zip(u)
                    .zip(x)
                    .map(|((ai, ui), xi)| {
                        let dxi = xi - ui;
                        ai * ai * dxi * dxi
                    })
                    .sum();
                (-t).exp()
            }
            GenzFamily::Continuous => {
                let t: f64 = a
                    .iter()
                    .zip(u)
                    .zip(x)
                    .map(|((ai, ui), xi)| ai * (xi - ui).abs())
                    .sum();
                (-t).exp()
            }
            GenzFamily::Discontinuous => {
                if x[0] > u[0] || (x.len() > 1 && x[1] > u[1]) {
                    return 0.0;
                }
                let t: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
                t.exp()
            }
        }
    }

    /// The closed-form integral over the unit cube.
    ///
    /// All factors are products of one-dimensional integrals except the
    /// corner peak, which uses inclusion-exclusion over the cube's vertices
    /// and therefore costs `2^S` terms.
    pub fn exact_integral(&self) -> f64 {
        let a = &self.a;
        let u = &self.u;
        let s = a.len();
        match self.family {
            GenzFamily::Oscillatory => {
                let half_sum: f64 = a.iter().sum::<f64>() / 2.0;
                let phase = 2.0 * std::f64::consts::PI * u[0] + half_sum;
                let factors: f64 = a.iter().map(|&ai| 2.0 * (ai / 2.0).sin() / ai).product();
                phase.cos() * factors
            }
            GenzFamily::ProductPeak => a
                .iter()
                .zip(u)
                .map(|(&ai, &ui)| ai * ((ai * (1.0 - ui)).atan() + (ai * ui).atan()))
                .product(),
            GenzFamily::CornerPeak => {
                // (1/(S! prod a)) * sum over vertex subsets v of
                // (-1)^|v| / (1 + sum_{i in v} a_i).
                let mut acc = KahanSum::new();
                for v in 0..1u64 << s {
                    let mut t = 0.0;
                    for (i, &ai) in a.iter().enumerate() {
                        if (v >> i) & 1 == 1 {
                            t += ai;
                        }
                    }
                    let sign = if v.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc.add(sign / (1.0 + t));
                }
                let factorial: f64 = (1..=s).map(|k| k as f64).product();
                let coeff_product: f64 = a.iter().product();
                acc.value() / (factorial * coeff_product)
            }
            GenzFamily::Gaussian => {
                let sqrt_pi = std::f64::consts::PI.sqrt();
                a.iter()
                    .zip(u)
                    .map(|(&ai, &ui)| {
                        sqrt_pi / (2.0 * ai) * (libm::erf(ai * (1.0 - ui)) + libm::erf(ai * ui))
                    })
                    .product()
            }
            GenzFamily::Continuous => a
                .iter()
                .zip(u)
                .map(|(&ai, &ui)| (-libm::expm1(-ai * ui) - libm::expm1(-ai * (1.0 - ui))) / ai)
                .product(),
            GenzFamily::Discontinuous => a
                .iter()
                .enumerate()
                .map(|(i, &ai)| {
                    let upper = if i < 2 { u[i].min(1.0) } else { 1.0 };
                    libm::expm1(ai * upper) / ai
                })
                .product(),
        }
    }
}

/// Draws a random instance: `a` and `u` uniform on the unit cube, with zero
/// coefficient components redrawn, then `a` scaled to sum to `h`.
pub fn make_instance<R: Rng>(
    family: GenzFamily,
    s: u32,
    h: f64,
    rng: &mut R,
) -> Result<GenzInstance, GenzError> {
    if s == 0 {
        return Err(GenzError::EmptyDimension);
    }
    if h <= 0.0 {
        return Err(GenzError::BadDifficulty(h));
    }
    let mut raw_a = vec![0.0f64; s as usize];
    for x in raw_a.iter_mut() {
        *x = rng.gen::<f64>();
        while *x == 0.0 {
            *x = rng.gen::<f64>();
        }
    }
    let u = (0..s).map(|_| rng.gen::<f64>()).collect();
    GenzInstance::renormalized(family, &raw_a, u, h)
}

/// One (family, net size) cell of a benchmark run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub family: GenzFamily,
    pub d: u32,
    pub median_log10_relerr: f64,
    pub samples: u32,
    /// Median for plain Monte Carlo at the same sample count, when requested.
    pub baseline_median_log10_relerr: Option<f64>,
}

/// Full benchmark output: one cell per (family, d), family-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub cells: Vec<BenchmarkCell>,
    /// Difficulty per benchmarked family, parallel to `families`.
    pub families: Vec<GenzFamily>,
    pub h: Vec<f64>,
    /// Instances rejected for a near-zero exact integral and redrawn.
    pub redraws: u32,
}

/// Benchmark settings; see [`run_benchmark`].
#[derive(Debug, Clone)]
pub struct BenchmarkConfig<'a> {
    pub matrices: &'a GeneratingMatrixSet,
    pub families: Vec<GenzFamily>,
    /// Difficulty per entry of `families`.
    pub h: Vec<f64>,
    /// Inclusive range of size exponents.
    pub d_range: (u32, u32),
    /// Instances per family.
    pub samples: u32,
    pub shift: bool,
    pub seed: u64,
    /// Also run plain Monte Carlo with matching sample counts.
    pub baseline: bool,
}

/// Median; for even counts the mean of the two middle order statistics.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("log errors are finite"));
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

fn log10_relerr(estimate: f64, exact: f64) -> f64 {
    let rel = ((estimate - exact) / exact).abs();
    rel.max(10f64.powi(LOG10_RELERR_FLOOR as i32)).log10()
}

/// Runs the median-relative-error protocol.
///
/// For each requested family, `samples` instances are drawn from streams
/// derived from (seed, family index, sample index); an instance whose exact
/// integral is below [`TINY_INTEGRAL`] in magnitude is redrawn from a fresh
/// stream tagged with the attempt number. The same instances are integrated
/// at every size `2^d` for `d` in the range, and each (family, d) cell holds
/// the median of `log10(|I - I_N| / |I|)` over the samples. With `baseline`
/// set, plain Monte Carlo runs with `2^d` samples per cell from independent
/// per-(family, sample, d) streams.
pub fn run_benchmark(cfg: &BenchmarkConfig<'_>) -> Result<BenchmarkResult, GenzError> {
    let (d_lo, d_hi) = cfg.d_range;
    let g = cfg.matrices;
    if d_lo > d_hi || d_hi > g.m() {
        return Err(GenzError::BadDepthRange {
            lo: d_lo,
            hi: d_hi,
            m: g.m(),
        });
    }
    assert_eq!(cfg.families.len(), cfg.h.len(), "one h per family");
    let s = g.dim();

    let mut redraws = 0u32;
    let mut cells = Vec::new();
    for (&family, &h) in cfg.families.iter().zip(&cfg.h) {
        let fam_tag = family.index() as u64;

        // Instances are fixed across d so every size integrates the same
        // functions.
        let mut instances = Vec::with_capacity(cfg.samples as usize);
        for sample in 0..cfg.samples {
            let mut instance = None;
            for attempt in 0..64u32 {
                let mut rng = if attempt == 0 {
                    derive_rng(cfg.seed, &[DOMAIN_GENZ, fam_tag, sample as u64])
                } else {
                    derive_rng(
                        cfg.seed,
                        &[DOMAIN_GENZ, fam_tag, sample as u64, attempt as u64],
                    )
                };
                let cand = make_instance(family, s, h, &mut rng)?;
                if cand.exact_integral().abs() >= TINY_INTEGRAL {
                    instance = Some(cand);
                    break;
                }
                redraws += 1;
            }
            let Some(inst) = instance else {
                return Err(GenzError::RedrawLimit {
                    family,
                    sample,
                    attempts: 64,
                });
            };
            instances.push(inst);
        }
        let exact: Vec<f64> = instances.iter().map(|inst| inst.exact_integral()).collect();

        for d in d_lo..=d_hi {
            let qmc: Result<Vec<f64>, GenzError> = instances
                .par_iter()
                .zip(&exact)
                .map(|(inst, &ex)| {
                    let estimate = qmc_integrate(IntegrationRequest {
                        matrices: g,
                        d,
                        integrand: |x: &[f64]| inst.eval(x),
                        shift: cfg.shift,
                    })?;
                    Ok(log10_relerr(estimate, ex))
                })
                .collect();
            let mut qmc = qmc?;

            let baseline = if cfg.baseline {
                let errs: Result<Vec<f64>, GenzError> = instances
                    .par_iter()
                    .zip(&exact)
                    .enumerate()
                    .map(|(sample, (inst, &ex))| {
                        let seed =
                            derive_seed(cfg.seed, &[DOMAIN_MC, fam_tag, sample as u64, d as u64]);
                        let estimate = mc_integrate(|x| inst.eval(x), s, 1u64 << d, seed)?;
                        Ok(log10_relerr(estimate, ex))
                    })
                    .collect();
                Some(median(&mut errs?))
            } else {
                None
            };

            cells.push(BenchmarkCell {
                family,
                d,
                median_log10_relerr: median(&mut qmc),
                samples: cfg.samples,
                baseline_median_log10_relerr: baseline,
            });
        }
    }

    Ok(BenchmarkResult {
        cells,
        families: cfg.families.clone(),
        h: cfg.h.clone(),
        redraws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::f2::GeneratingMatrixSet;
    use crate::rng::derive_rng;

    fn instance(family: GenzFamily, a: &[f64], u: &[f64]) -> GenzInstance {
        let h = a.iter().sum();
        GenzInstance::renormalized(family, a, u.to_vec(), h).unwrap()
    }

    #[test]
    fn family_names_parse_in_both_spellings() {
        for f in GenzFamily::ALL {
            assert_eq!(f.name().parse::<GenzFamily>().unwrap(), f);
            assert_eq!(format!("f{}", f.index()).parse::<GenzFamily>().unwrap(), f);
        }
        assert!("f7".parse::<GenzFamily>().is_err());
        assert!("peak".parse::<GenzFamily>().is_err());
    }

    #[test]
    fn renormalization_hits_the_target_sum() {
        let mut rng = derive_rng(1, &[0]);
        for (s, h) in [(1u32, 2.0), (5, 4.5), (10, 9.0), (23, 0.25)] {
            let inst = make_instance(GenzFamily::Gaussian, s, h, &mut rng).unwrap();
            let sum: f64 = inst.a.iter().sum();
            assert!(((sum - h) / h).abs() < 1e-12, "s={s}: sum {sum} vs h {h}");
            assert!(inst.a.iter().all(|&ai| ai > 0.0));
            assert!(inst.u.iter().all(|&ui| (0.0..=1.0).contains(&ui)));
            if s == 1 {
                assert_eq!(inst.a[0], h);
            }
        }
    }

    #[test]
    fn renormalization_is_scale_invariant() {
        let raw = [0.3, 1.1, 0.04, 0.77];
        let u = vec![0.2, 0.4, 0.6, 0.8];
        let one = GenzInstance::renormalized(GenzFamily::CornerPeak, &raw, u.clone(), 3.0).unwrap();
        let scaled_raw: Vec<f64> = raw.iter().map(|x| x * 193.7).collect();
        let two = GenzInstance::renormalized(GenzFamily::CornerPeak, &scaled_raw, u, 3.0).unwrap();
        for (x, y) in one.a.iter().zip(&two.a) {
            assert!((x - y).abs() < 1e-15 * x.abs());
        }
    }

    #[test]
    fn instances_are_deterministic_per_seed() {
        let a = make_instance(GenzFamily::Continuous, 6, 1.02, &mut derive_rng(9, &[4])).unwrap();
        let b = make_instance(GenzFamily::Continuous, 6, 1.02, &mut derive_rng(9, &[4])).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.u, b.u);
    }

    #[test]
    fn eval_special_points_match_hand_values() {
        let mut rng = derive_rng(2, &[1]);
        let osc = make_instance(GenzFamily::Oscillatory, 4, 3.0, &mut rng).unwrap();
        let zero = [0.0; 4];
        let expected = (2.0 * std::f64::consts::PI * osc.u[0]).cos();
        assert!((osc.eval(&zero) - expected).abs() < 1e-15);

        for family in [GenzFamily::Gaussian, GenzFamily::Continuous] {
            let inst = make_instance(family, 4, 2.0, &mut rng).unwrap();
            let at_u = inst.u.clone();
            assert!((inst.eval(&at_u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eval_respects_family_bounds() {
        let mut rng = derive_rng(3, &[2]);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen::<f64>()).collect();
            let pp = make_instance(GenzFamily::ProductPeak, 3, 3.6, &mut rng).unwrap();
            assert!(pp.eval(&x) > 0.0);
            for family in [GenzFamily::Gaussian, GenzFamily::Continuous] {
                let inst = make_instance(family, 3, 2.5, &mut rng).unwrap();
                let v = inst.eval(&x);
                assert!(v > 0.0 && v <= 1.0);
            }
        }
    }

    #[test]
    fn discontinuous_truncates_on_the_first_two_coordinates() {
        let inst = instance(
            GenzFamily::Discontinuous,
            &[1.0, 2.0, 0.5],
            &[0.5, 0.5, 0.5],
        );
        assert_eq!(inst.eval(&[0.6, 0.1, 0.1]), 0.0);
        assert_eq!(inst.eval(&[0.1, 0.6, 0.1]), 0.0);
        assert!(inst.eval(&[0.1, 0.1, 0.9]) > 0.0);
        // One dimension: only the first clause applies.
        let one = instance(GenzFamily::Discontinuous, &[1.0], &[0.5]);
        assert_eq!(one.eval(&[0.7]), 0.0);
        assert!(one.eval(&[0.3]) > 0.0);
    }

    #[test]
    fn exact_integrals_match_hand_derivations() {
        // Continuous, S=1, a=1, u=0: 1 - e^{-1}.
        let c = instance(GenzFamily::Continuous, &[1.0], &[0.0]);
        assert!((c.exact_integral() - (1.0 - (-1.0f64).exp())).abs() < 1e-15);

        // Corner peak, S=1, a=1: integral of (1+x)^{-2} is 1/2.
        let cp = instance(GenzFamily::CornerPeak, &[1.0], &[0.3]);
        assert!((cp.exact_integral() - 0.5).abs() < 1e-15);

        // Discontinuous with u = 1: no truncation.
        let dc = instance(
            GenzFamily::Discontinuous,
            &[0.7, 1.3, 2.0],
            &[1.0, 1.0, 0.2],
        );
        let expected: f64 = [0.7f64, 1.3, 2.0]
            .iter()
            .map(|&a| (a.exp() - 1.0) / a)
            .product();
        assert!(((dc.exact_integral() - expected) / expected).abs() < 1e-14);

        // Oscillatory, S=1, a=2pi, u=0: integral of cos(2 pi x) is 0.
        let z = instance(
            GenzFamily::Oscillatory,
            &[2.0 * std::f64::consts::PI],
            &[0.0],
        );
        assert!(z.exact_integral().abs() < 1e-15);
    }

    /// Composite Simpson in one or two dimensions, enough to catch a wrong
    /// closed form; the acceptance suite runs the high-order oracle.
    fn simpson_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut acc = f(lo) + f(hi);
        for i in 1..panels {
            let w = if i % 2 == 0 { 2.0 } else { 4.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    fn simpson_2d(f: &dyn Fn(f64, f64) -> f64, hi: (f64, f64), panels: usize) -> f64 {
        simpson_1d(
            &|x| simpson_1d(&|y| f(x, y), 0.0, hi.1, panels),
            0.0,
            hi.0,
            panels,
        )
    }

    #[test]
    fn exact_integrals_match_numerical_quadrature_in_two_dimensions() {
        let mut rng = derive_rng(4, &[3]);
        for family in GenzFamily::ALL {
            for _ in 0..3 {
                let inst = make_instance(family, 2, 1.8, &mut rng).unwrap();
                let expected = inst.exact_integral();
                let numeric = if family == GenzFamily::Discontinuous {
                    // Integrate the smooth part over the sub-box where the
                    // indicator passes.
                    simpson_2d(
                        &|x, y| (inst.a[0] * x + inst.a[1] * y).exp(),
                        (inst.u[0], inst.u[1]),
                        512,
                    )
                } else {
                    simpson_2d(&|x, y| inst.eval(&[x, y]), (1.0, 1.0), 512)
                };
                let tol = if family == GenzFamily::Continuous {
                    1e-5
                } else {
                    1e-7
                };
                assert!(
                    ((numeric - expected) / expected).abs() < tol,
                    "{family}: quadrature {numeric} vs closed form {expected}"
                );
            }
        }
    }

    fn identity_net(n: u32, m: u32, s: u32) -> GeneratingMatrixSet {
        let matrices = (0..s)
            .map(|_| (0..m).map(|j| 1u64 << (n - 1 - j)).collect())
            .collect();
        GeneratingMatrixSet::new(n, matrices)
    }

    #[test]
    fn benchmark_produces_the_expected_grid() {
        let g = identity_net(20, 10, 3);
        let result = run_benchmark(&BenchmarkConfig {
            matrices: &g,
            families: vec![GenzFamily::Gaussian, GenzFamily::Continuous],
            h: vec![2.0, 1.0],
            d_range: (4, 7),
            samples: 5,
            shift: true,
            seed: 11,
            baseline: true,
        })
        .unwrap();
        assert_eq!(result.cells.len(), 2 * 4);
        let mut expected_cells = Vec::new();
        for f in [GenzFamily::Gaussian, GenzFamily::Continuous] {
            for d in 4..=7 {
                expected_cells.push((f, d));
            }
        }
        let got: Vec<(GenzFamily, u32)> = result.cells.iter().map(|c| (c.family, c.d)).collect();
        assert_eq!(got, expected_cells);
        for cell in &result.cells {
            assert_eq!(cell.samples, 5);
            assert!(cell.median_log10_relerr.is_finite());
            assert!(cell.baseline_median_log10_relerr.unwrap().is_finite());
        }
    }

    #[test]
    fn benchmark_is_deterministic() {
        let g = identity_net(16, 8, 2);
        let cfg = BenchmarkConfig {
            matrices: &g,
            families: vec![GenzFamily::Oscillatory],
            h: vec![1.8],
            d_range: (5, 6),
            samples: 4,
            shift: true,
            seed: 21,
            baseline: true,
        };
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        for (x, y) in a.cells.iter().zip(&b.cells) {
            assert_eq!(
                x.median_log10_relerr.to_bits(),
                y.median_log10_relerr.to_bits()
            );
            assert_eq!(
                x.baseline_median_log10_relerr.unwrap().to_bits(),
                y.baseline_median_log10_relerr.unwrap().to_bits()
            );
        }
    }

    #[test]
    fn median_of_even_counts_averages_the_middle_pair() {
        let mut vals = vec![3.0, 1.0, 4.0, 2.0];
        assert_eq!(median(&mut vals), 2.5);
        let mut odd = vec![5.0, 1.0, 3.0];
        assert_eq!(median(&mut odd), 3.0);
        let mut single = vec![7.0];
        assert_eq!(median(&mut single), 7.0);
    }

    #[test]
    fn depth_range_is_validated() {
        let g = identity_net(16, 8, 2);
        let bad = run_benchmark(&BenchmarkConfig {
            matrices: &g,
            families: vec![GenzFamily::Gaussian],
            h: vec![1.0],
            d_range: (4, 12),
            samples: 2,
            shift: true,
            seed: 1,
            baseline: false,
        });
        assert!(matches!(bad, Err(GenzError::BadDepthRange { .. })));
    }
}
