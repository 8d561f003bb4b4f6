//! Convergence comparison: a low-WAFOM net against plain Monte Carlo at the
//! same sample counts, on one smooth and one oscillatory integrand.
//!
//! Run with: `cargo run --release --example qmc_vs_mc`

use wafom_net::genz::{default_h, make_instance, GenzFamily};
use wafom_net::integrate::{mc_integrate, qmc_integrate, IntegrationRequest};
use wafom_net::rng::{derive_rng, derive_seed};
use wafom_net::search::{search_extensible, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = 5u32;
    let cfg = SearchConfig {
        n: 28,
        m: 16,
        s,
        trials: 48,
        q: 4,
        seed: 12,
    };
    eprintln!(
        "searching a {s}-dimensional net up to 2^{} points...",
        cfg.m
    );
    let (net, _) = search_extensible(&cfg)?;

    for family in [GenzFamily::Oscillatory, GenzFamily::Gaussian] {
        let mut rng = derive_rng(55, &[family.index() as u64]);
        let inst = make_instance(family, s, default_h(family, s), &mut rng)?;
        let exact = inst.exact_integral();
        println!("\n{} (exact integral {exact:.10e})", family.name());
        println!("{:>4} {:>14} {:>14}", "d", "QMC log10 err", "MC log10 err");
        for d in (6..=16).step_by(2) {
            let qmc = qmc_integrate(IntegrationRequest {
                matrices: &net,
                d,
                integrand: |x: &[f64]| inst.eval(x),
                shift: true,
            })?;
            let mc = mc_integrate(
                |x| inst.eval(x),
                s,
                1u64 << d,
                derive_seed(55, &[family.index() as u64, d as u64]),
            )?;
            let log_err = |v: f64| ((v - exact) / exact).abs().max(1e-17).log10();
            println!("{d:>4} {:>14.2} {:>14.2}", log_err(qmc), log_err(mc));
        }
    }
    Ok(())
}
