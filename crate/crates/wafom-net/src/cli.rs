//! Command-line interface: `search`, `seqgen-search`, `wafom`, `integrate`,
//! and `genz-bench` subcommands over the library, with CSV output and a
//! reproducibility manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::genz::{
    default_h, make_instance, run_benchmark, BenchmarkConfig, GenzFamily, GenzInstance,
    H_PRESET_10, H_PRESET_5,
};
use crate::integrate::{qmc_integrate, IntegrationRequest};
use crate::matfile;
use crate::rng::{derive_rng, DOMAIN_GENZ};
use crate::search::{search_extensible, SearchConfig};
use crate::seqgen::{search_seqgen, seqgen_as_digital_net, SeqGenSearchConfig};
use crate::wafom::{wafom_naive, wafom_tabled, WafomTables};

#[derive(Parser)]
#[command(
    name = "wafom-net",
    version,
    about = "Low-WAFOM digital net construction and benchmarking"
)]
struct Cli {
    /// Worker threads (default: all available cores). Results are identical
    /// for any thread count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Write a JSON manifest (subcommand, arguments, seed, version, wall
    /// time) to this path after the run.
    #[arg(long, global = true, value_name = "FILE")]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy stage-by-stage search for extensible low-WAFOM matrices.
    Search(SearchArgs),
    /// Two-stage random search for a sequential generator.
    SeqgenSearch(SeqgenSearchArgs),
    /// Evaluate the WAFOM of matrices from a file.
    Wafom(WafomArgs),
    /// Integrate a test function over a net by QMC.
    Integrate(IntegrateArgs),
    /// Median-relative-error benchmark on the Genz families.
    GenzBench(GenzBenchArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Matrix precision (rows).
    #[arg(long)]
    n: u32,
    /// Columns per matrix; the net extends up to 2^m points.
    #[arg(long)]
    m: u32,
    /// Dimension (number of matrices).
    #[arg(long)]
    s: u32,
    /// Random candidates per stage.
    #[arg(long)]
    trials: u32,
    /// Lookup-table segments per column.
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Master seed for candidate generation.
    #[arg(long)]
    seed: u64,
    /// Output matrix file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Per-stage trace CSV (d,best_wafom,log10_wafom,rejections,seconds).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct SeqgenSearchArgs {
    /// Matrix precision (rows of U).
    #[arg(long)]
    n: u32,
    /// Dimension the WAFOM objective is evaluated in.
    #[arg(long)]
    s: u32,
    /// Recursion degree; the net has 2^d points.
    #[arg(long)]
    d: u32,
    /// Total random candidates across both stages.
    #[arg(long)]
    trials: u32,
    /// Lookup-table segments per column.
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Master seed for candidate generation.
    #[arg(long)]
    seed: u64,
    /// Output file for the equivalent digital-net matrices.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
#[command(group = ArgGroup::new("depth").required(true).args(["d", "d_range"]))]
struct WafomArgs {
    /// Matrix file to evaluate.
    #[arg(long, value_name = "FILE")]
    matrices: PathBuf,
    /// Single size exponent.
    #[arg(long)]
    d: Option<u32>,
    /// Inclusive range of size exponents, e.g. 1..20.
    #[arg(long, value_name = "A..B", value_parser = parse_range)]
    d_range: Option<(u32, u32)>,
    /// Lookup-table segments per column (table method only).
    #[arg(long, default_value_t = 3)]
    q: u32,
    /// Evaluation method.
    #[arg(long, value_enum, default_value_t = Method::Table)]
    method: Method,
    /// Output CSV (d,wafom,log10_wafom,method,seconds); stdout if omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = ArgGroup::new("instance").required(true).args(["params", "seed"]))]
struct IntegrateArgs {
    /// Matrix file defining the net.
    #[arg(long, value_name = "FILE")]
    matrices: PathBuf,
    /// Size exponent; integrates over 2^d points.
    #[arg(long)]
    d: u32,
    /// Integrand, e.g. genz:oscillatory or genz:f4.
    #[arg(long, value_name = "genz:FAMILY", value_parser = parse_function)]
    function: GenzFamily,
    /// JSON file with instance parameters (family, a, u, h).
    #[arg(long, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Draw instance parameters from this seed instead.
    #[arg(long)]
    seed: Option<u64>,
    /// Half-cell translation of every point.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    shift: Toggle,
}

#[derive(Args)]
struct GenzBenchArgs {
    /// Matrix file defining the net.
    #[arg(long, value_name = "FILE")]
    matrices: PathBuf,
    /// Dimension; must match the matrix file.
    #[arg(long)]
    s: u32,
    /// Difficulty preset; omitted means the linear-in-s default.
    #[arg(long, value_enum)]
    h_preset: Option<HPreset>,
    /// Inclusive range of size exponents, e.g. 8..25.
    #[arg(long, value_name = "A..B", value_parser = parse_range)]
    d_range: (u32, u32),
    /// Instances per family.
    #[arg(long, default_value_t = 20)]
    samples: u32,
    /// Half-cell translation of every point.
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    shift: Toggle,
    /// Master seed for instance draws and the baseline.
    #[arg(long)]
    seed: u64,
    /// Plain Monte Carlo comparison at equal sample counts.
    #[arg(long, value_enum, default_value_t = Baseline::Mc)]
    baseline: Baseline,
    /// Output CSV; stdout if omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Naive,
    Table,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

impl Toggle {
    fn is_on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Baseline {
    Mc,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum HPreset {
    Paper5,
    Paper10,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("'{s}' is not of the form A..B"))?;
    let lo: u32 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound in '{s}'"))?;
    let hi: u32 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound in '{s}'"))?;
    if lo > hi {
        return Err(format!("empty range '{s}'"));
    }
    Ok((lo, hi))
}

fn parse_function(s: &str) -> Result<GenzFamily, String> {
    let name = s
        .strip_prefix("genz:")
        .ok_or_else(|| format!("'{s}' is not of the form genz:FAMILY"))?;
    name.parse().map_err(|e| format!("{e}"))
}

/// Reproducibility record written next to the outputs.
#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    argv: Vec<String>,
    seed: Option<u64>,
    version: String,
    wall_seconds: f64,
}

/// 17 significant digits, enough to reproduce any f64 exactly.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<(), String> {
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Entry point; returns the process exit code.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore a second initialization (e.g. under tests); the pool size
        // only affects speed, never results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let started = Instant::now();
    let (name, seed) = describe(&cli.command);
    let outcome = dispatch(cli.command);
    if let Err(message) = outcome {
        eprintln!("error: {message}");
        return ExitCode::FAILURE;
    }

    if let Some(path) = &cli.manifest {
        let manifest = RunManifest {
            subcommand: name,
            argv: std::env::args().collect(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds: started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        if let Err(message) = write_text(path, &(json + "\n")) {
            eprintln!("error: {message}");
            return ExitCode::FAILURE;
        }
    }
    ExitCode::SUCCESS
}

fn describe(command: &Command) -> (String, Option<u64>) {
    match command {
        Command::Search(a) => ("search".into(), Some(a.seed)),
        Command::SeqgenSearch(a) => ("seqgen-search".into(), Some(a.seed)),
        Command::Wafom(_) => ("wafom".into(), None),
        Command::Integrate(a) => ("integrate".into(), a.seed),
        Command::GenzBench(a) => ("genz-bench".into(), Some(a.seed)),
    }
}

fn dispatch(command: Command) -> Result<(), String> {
    match command {
        Command::Search(args) => cmd_search(args),
        Command::SeqgenSearch(args) => cmd_seqgen_search(args),
        Command::Wafom(args) => cmd_wafom(args),
        Command::Integrate(args) => cmd_integrate(args),
        Command::GenzBench(args) => cmd_genz_bench(args),
    }
}

fn cmd_search(args: SearchArgs) -> Result<(), String> {
    let cfg = SearchConfig {
        n: args.n,
        m: args.m,
        s: args.s,
        trials: args.trials,
        q: args.q,
        seed: args.seed,
    };
    let (matrices, trace) = search_extensible(&cfg).map_err(|e| e.to_string())?;
    for stage in &trace.stages {
        eprintln!(
            "d={:<3} wafom={} ({:.1}s)",
            stage.d,
            fmt17(stage.best_wafom),
            stage.seconds
        );
    }

    let comments = [
        "searched extensible low-WAFOM digital net".to_string(),
        format!(
            "n={} m={} s={} trials={} q={} seed={}",
            args.n, args.m, args.s, args.trials, args.q, args.seed
        ),
    ];
    let comment_refs: Vec<&str> = comments.iter().map(String::as_str).collect();
    matfile::write_matrices(&args.out, &matrices, &comment_refs).map_err(|e| e.to_string())?;

    if let Some(trace_path) = &args.trace {
        let mut csv = String::from("d,best_wafom,log10_wafom,rejections,seconds\n");
        for stage in &trace.stages {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                stage.d,
                fmt17(stage.best_wafom),
                fmt17(stage.best_wafom.log10()),
                stage.rejections,
                fmt17(stage.seconds)
            );
        }
        write_text(trace_path, &csv)?;
    }
    Ok(())
}

fn cmd_seqgen_search(args: SeqgenSearchArgs) -> Result<(), String> {
    let cfg = SeqGenSearchConfig {
        n: args.n,
        s: args.s,
        degree: args.d,
        trials: args.trials,
        q: args.q,
        seed: args.seed,
    };
    let result = search_seqgen(&cfg).map_err(|e| e.to_string())?;
    println!("stage1_wafom = {}", fmt17(result.stage_one_wafom));
    println!("best_wafom = {}", fmt17(result.best_wafom));

    let net = seqgen_as_digital_net(&result.config, args.s);
    let comments = [
        "digital net of a searched sequential generator".to_string(),
        format!(
            "n={} s={} degree={} polynomial={:#x} trials={} q={} seed={}",
            args.n,
            args.s,
            args.d,
            result.config.poly().coeffs(),
            args.trials,
            args.q,
            args.seed
        ),
    ];
    let comment_refs: Vec<&str> = comments.iter().map(String::as_str).collect();
    matfile::write_matrices(&args.out, &net, &comment_refs).map_err(|e| e.to_string())
}

fn cmd_wafom(args: WafomArgs) -> Result<(), String> {
    let g = matfile::read_matrices(&args.matrices).map_err(|e| e.to_string())?;
    let (lo, hi) = match (args.d, args.d_range) {
        (Some(d), None) => (d, d),
        (None, Some(range)) => range,
        _ => unreachable!("clap enforces exactly one"),
    };
    if hi > g.m() {
        return Err(format!(
            "d = {hi} exceeds the matrices' column count m = {}",
            g.m()
        ));
    }

    let tables = match args.method {
        Method::Table => Some(WafomTables::new(g.n(), args.q).map_err(|e| e.to_string())?),
        Method::Naive => None,
    };
    let mut csv = String::from("d,wafom,log10_wafom,method,seconds\n");
    for d in lo..=hi {
        let t0 = Instant::now();
        let (value, method) = match &tables {
            Some(tables) => (wafom_tabled(&g, d, tables), "table"),
            None => (wafom_naive(&g, d), "naive"),
        };
        let seconds = t0.elapsed().as_secs_f64();
        let _ = writeln!(
            csv,
            "{d},{},{},{method},{}",
            fmt17(value),
            fmt17(value.log10()),
            fmt17(seconds)
        );
    }
    match &args.out {
        Some(path) => write_text(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_integrate(args: IntegrateArgs) -> Result<(), String> {
    let g = matfile::read_matrices(&args.matrices).map_err(|e| e.to_string())?;
    let s = g.dim();

    let instance: GenzInstance = match (&args.params, args.seed) {
        (Some(path), None) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let inst: GenzInstance =
                serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            if inst.family != args.function {
                return Err(format!(
                    "--function names {} but the params file holds a {} instance",
                    args.function, inst.family
                ));
            }
            if inst.dim() != s {
                return Err(format!(
                    "params dimension {} does not match the {s}-dimensional net",
                    inst.dim()
                ));
            }
            inst
        }
        (None, Some(seed)) => {
            let mut rng = derive_rng(seed, &[DOMAIN_GENZ, args.function.index() as u64, 0]);
            make_instance(args.function, s, default_h(args.function, s), &mut rng)
                .map_err(|e| e.to_string())?
        }
        _ => unreachable!("clap enforces exactly one"),
    };

    let estimate = qmc_integrate(IntegrationRequest {
        matrices: &g,
        d: args.d,
        integrand: |x: &[f64]| instance.eval(x),
        shift: args.shift.is_on(),
    })
    .map_err(|e| e.to_string())?;
    let exact = instance.exact_integral();
    println!("estimate = {}", fmt17(estimate));
    println!("exact = {}", fmt17(exact));
    println!("rel_error = {}", fmt17(((estimate - exact) / exact).abs()));
    Ok(())
}

fn cmd_genz_bench(args: GenzBenchArgs) -> Result<(), String> {
    let g = matfile::read_matrices(&args.matrices).map_err(|e| e.to_string())?;
    if g.dim() != args.s {
        return Err(format!(
            "--s {} does not match the {}-dimensional matrix file",
            args.s,
            g.dim()
        ));
    }
    let h: Vec<f64> = match args.h_preset {
        Some(HPreset::Paper5) => H_PRESET_5.to_vec(),
        Some(HPreset::Paper10) => H_PRESET_10.to_vec(),
        None => GenzFamily::ALL
            .iter()
            .map(|&f| default_h(f, args.s))
            .collect(),
    };
    let result = run_benchmark(&BenchmarkConfig {
        matrices: &g,
        families: GenzFamily::ALL.to_vec(),
        h,
        d_range: args.d_range,
        samples: args.samples,
        shift: args.shift.is_on(),
        seed: args.seed,
        baseline: args.baseline == Baseline::Mc,
    })
    .map_err(|e| e.to_string())?;
    if result.redraws > 0 {
        eprintln!(
            "note: {} near-zero-integral instances were redrawn",
            result.redraws
        );
    }

    let mut csv =
        String::from("family,d,median_log10_relerr,samples,baseline_median_log10_relerr\n");
    for cell in &result.cells {
        let baseline = cell
            .baseline_median_log10_relerr
            .map(fmt17)
            .unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{baseline}",
            cell.family,
            cell.d,
            fmt17(cell.median_log10_relerr),
            cell.samples
        );
    }
    match &args.out {
        Some(path) => write_text(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
