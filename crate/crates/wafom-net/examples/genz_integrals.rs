//! Evaluate each test-function family's closed-form integral against a QMC
//! estimate on a searched net.
//!
//! Run with: `cargo run --release --example genz_integrals`

use wafom_net::genz::{default_h, make_instance, GenzFamily};
use wafom_net::integrate::{qmc_integrate, IntegrationRequest};
use wafom_net::rng::derive_rng;
use wafom_net::search::{search_extensible, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = 3u32;
    let d = 14u32;
    let cfg = SearchConfig {
        n: 24,
        m: d,
        s,
        trials: 32,
        q: 4,
        seed: 4,
    };
    let (net, _) = search_extensible(&cfg)?;
    println!("net: n={} s={s}, using 2^{d} points\n", cfg.n);

    println!(
        "{:<14} {:>24} {:>24} {:>12}",
        "family", "exact", "QMC estimate", "rel. error"
    );
    for family in GenzFamily::ALL {
        let mut rng = derive_rng(100, &[family.index() as u64]);
        let inst = make_instance(family, s, default_h(family, s), &mut rng)?;
        let exact = inst.exact_integral();
        let estimate = qmc_integrate(IntegrationRequest {
            matrices: &net,
            d,
            integrand: |x: &[f64]| inst.eval(x),
            shift: true,
        })?;
        println!(
            "{:<14} {:>24.16e} {:>24.16e} {:>12.2e}",
            family.name(),
            exact,
            estimate,
            ((estimate - exact) / exact).abs()
        );
    }
    Ok(())
}
