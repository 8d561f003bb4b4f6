//! Shared helpers for the integration tests: an exact-rational figure of
//! merit, a tensor Gauss-Legendre quadrature oracle, random net builders,
//! and wrappers around the command-line binary.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use wafom_net::f2::is_upper_square_regular;
use wafom_net::genz::{GenzFamily, GenzInstance};
use wafom_net::kahan::KahanSum;
use wafom_net::GeneratingMatrixSet;

/// Exact evaluation of the figure of merit in arbitrary-precision rational
/// arithmetic: the mean over the first `2^d` points of
/// `prod_{t,j} (1 + (-1)^{x_{j,t}} 2^{-j}) - 1`.
///
/// Independent of every floating-point code path; used as the ground truth
/// for the double-precision evaluators.
pub fn rational_wafom(g: &GeneratingMatrixSet, d: u32) -> BigRational {
    let mut total = BigRational::zero();
    for k in 0..1u64 << d {
        let p = g.net_point(k, d);
        let mut term = BigRational::one();
        for t in 0..p.dim() {
            for j in 1..=p.digits() {
                let denom: BigInt = BigInt::one() << (j as usize);
                let numer = if p.bit(j, t) {
                    &denom - BigInt::one()
                } else {
                    &denom + BigInt::one()
                };
                term *= BigRational::new(numer, denom);
            }
        }
        total += term - BigRational::one();
    }
    total / BigRational::from_integer(BigInt::from(1u64 << d))
}

/// Relative difference against an exact rational reference, degrading to an
/// absolute difference when the reference is zero.
pub fn relerr_vs_rational(value: f64, exact: &BigRational) -> f64 {
    if exact.is_zero() {
        return value.abs();
    }
    let diff = BigRational::from_float(value).expect("finite") - exact;
    (diff / exact).abs().to_f64().expect("small ratio")
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(k >= 1);
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let legendre = |x: f64| {
        let (mut p0, mut p1) = (1.0, x);
        for j in 2..=k {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        // P_k and its derivative via P_{k-1}.
        let dp = if x * x == 1.0 {
            f64::INFINITY
        } else {
            k as f64 * (x * p1 - p0) / (x * x - 1.0)
        };
        (p1, dp)
    };
    for i in 0..k.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor-product Gauss-Legendre integral of `f` over a box decomposed into
/// per-axis panels; each panel gets `nodes_per_panel` points. Panels with
/// nonpositive length are skipped.
pub fn tensor_integral<F: Fn(&[f64]) -> f64>(
    f: F,
    axes: &[Vec<(f64, f64)>],
    nodes_per_panel: usize,
) -> f64 {
    let (xs, ws) = gauss_legendre(nodes_per_panel);
    let per_axis: Vec<(Vec<f64>, Vec<f64>)> = axes
        .iter()
        .map(|panels| {
            let mut n = Vec::new();
            let mut w = Vec::new();
            for &(a, b) in panels {
                if b <= a {
                    continue;
                }
                let half = (b - a) / 2.0;
                for i in 0..nodes_per_panel {
                    n.push(a + half * (xs[i] + 1.0));
                    w.push(ws[i] * half);
                }
            }
            (n, w)
        })
        .collect();
    if per_axis.iter().any(|(n, _)| n.is_empty()) {
        return 0.0;
    }

    let s = axes.len();
    let mut idx = vec![0usize; s];
    let mut x = vec![0.0; s];
    let mut acc = KahanSum::new();
    'outer: loop {
        let mut weight = 1.0;
        for t in 0..s {
            x[t] = per_axis[t].0[idx[t]];
            weight *= per_axis[t].1[idx[t]];
        }
        acc.add(weight * f(&x));
        for t in 0..s {
            idx[t] += 1;
            if idx[t] < per_axis[t].0.len() {
                continue 'outer;
            }
            idx[t] = 0;
        }
        break;
    }
    acc.value()
}

/// Numerical reference for a test instance's integral, choosing the panel
/// decomposition the family needs: the kink of the continuous family splits
/// every axis at `u_i`, the discontinuous family integrates its smooth part
/// over the sub-box where the indicator passes, everything else is smooth on
/// the whole cube.
pub fn quadrature_integral(inst: &GenzInstance, nodes_per_panel: usize) -> f64 {
    let s = inst.dim() as usize;
    let axes: Vec<Vec<(f64, f64)>> = match inst.family {
        GenzFamily::Continuous => inst.u.iter().map(|&u| vec![(0.0, u), (u, 1.0)]).collect(),
        GenzFamily::Discontinuous => (0..s)
            .map(|t| {
                if t < 2 {
                    vec![(0.0, inst.u[t])]
                } else {
                    vec![(0.0, 1.0)]
                }
            })
            .collect(),
        _ => vec![vec![(0.0, 1.0)]; s],
    };
    tensor_integral(|x| inst.eval(x), &axes, nodes_per_panel)
}

/// Matrices with uniformly random columns, no structure imposed.
pub fn random_net(n: u32, m: u32, s: u32, rng: &mut ChaCha12Rng) -> GeneratingMatrixSet {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let matrices = (0..s)
        .map(|_| (0..m).map(|_| rng.gen::<u64>() & mask).collect())
        .collect();
    GeneratingMatrixSet::new(n, matrices)
}

/// Matrices whose upper square blocks are regular, drawn by rejection.
pub fn random_regular_net(n: u32, m: u32, s: u32, rng: &mut ChaCha12Rng) -> GeneratingMatrixSet {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let matrices = (0..s)
        .map(|_| loop {
            let cols: Vec<u64> = (0..m).map(|_| rng.gen::<u64>() & mask).collect();
            if is_upper_square_regular(&cols, n) {
                return cols;
            }
        })
        .collect();
    GeneratingMatrixSet::new(n, matrices)
}

/// Identity-block matrices: coordinate `i` reads digit block `i`, so depth
/// `d = n * s` enumerates the whole discretized cube exactly once.
pub fn full_space_net(n: u32, s: u32) -> GeneratingMatrixSet {
    let d = n * s;
    let matrices = (0..s)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let block = j / n;
                    if block == i {
                        1u64 << (n - 1 - (j % n))
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    GeneratingMatrixSet::new(n, matrices)
}

/// Path of the compiled command-line binary.
pub fn cli_binary() -> &'static str {
    env!("CARGO_BIN_EXE_wafom-net")
}

/// Runs the binary and asserts a zero exit status.
pub fn run_cli(args: &[&str]) -> Output {
    let output = Command::new(cli_binary())
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "CLI {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// Parses a CSV produced by this crate: a header row and string cells.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).expect("csv exists");
    let mut lines = text.lines();
    let header = lines
        .next()
        .expect("nonempty csv")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

/// A CSV with the named column removed, for comparisons that should ignore
/// wall-clock timings.
pub fn csv_without_column(path: &Path, drop: &str) -> String {
    let text = std::fs::read_to_string(path).expect("csv exists");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("nonempty csv").split(',').collect();
    let keep: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, name)| **name != drop)
        .map(|(i, _)| i)
        .collect();
    assert!(keep.len() < header.len(), "column {drop} not present");
    let mut out = String::new();
    out.push_str(
        &keep
            .iter()
            .map(|&i| header[i])
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        out.push_str(&keep.iter().map(|&i| cells[i]).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Parameters of the shared reference search used by several criteria.
pub const SEARCH_N: u32 = 30;
pub const SEARCH_M: u32 = 16;
pub const SEARCH_S: u32 = 5;
pub const SEARCH_TRIALS: u32 = 200;
pub const SEARCH_Q: u32 = 3;
pub const SEARCH_SEED: u64 = 20250817;

/// Output of the shared reference search run.
pub struct SearchRun {
    pub dir: PathBuf,
    pub matrices_path: PathBuf,
    pub trace_path: PathBuf,
    pub net: GeneratingMatrixSet,
    pub trace: Vec<TraceRow>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub d: u32,
    pub best_wafom: f64,
    pub log10_wafom: f64,
    pub rejections: u64,
}

fn parse_trace(path: &Path) -> Vec<TraceRow> {
    let (header, rows) = read_csv(path);
    assert_eq!(
        header,
        ["d", "best_wafom", "log10_wafom", "rejections", "seconds"],
        "unexpected trace header"
    );
    rows.iter()
        .map(|r| TraceRow {
            d: r[0].parse().unwrap(),
            best_wafom: r[1].parse().unwrap(),
            log10_wafom: r[2].parse().unwrap(),
            rejections: r[3].parse().unwrap(),
        })
        .collect()
}

/// Runs the reference search through the CLI exactly once per test binary
/// and shares the artifacts.
pub fn reference_search() -> &'static SearchRun {
    static RUN: OnceLock<SearchRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("wafom-net-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&dir).expect("create temp dir");
        let matrices_path = dir.join("reference-net.txt");
        let trace_path = dir.join("reference-trace.csv");
        let started = std::time::Instant::now();
        run_cli(&[
            "search",
            "--n",
            &SEARCH_N.to_string(),
            "--m",
            &SEARCH_M.to_string(),
            "--s",
            &SEARCH_S.to_string(),
            "--trials",
            &SEARCH_TRIALS.to_string(),
            "--q",
            &SEARCH_Q.to_string(),
            "--seed",
            &SEARCH_SEED.to_string(),
            "--out",
            matrices_path.to_str().unwrap(),
            "--trace",
            trace_path.to_str().unwrap(),
        ]);
        let wall_seconds = started.elapsed().as_secs_f64();
        let net = wafom_net::matfile::read_matrices(&matrices_path).expect("search output parses");
        let trace = parse_trace(&trace_path);
        SearchRun {
            dir,
            matrices_path,
            trace_path,
            net,
            trace,
            wall_seconds,
        }
    })
}
