//! Time the direct WAFOM evaluation against the segmented-table method on
//! the same net.
//!
//! Run with: `cargo run --release --example wafom_speedup`

use std::time::Instant;

use rand::Rng;
use wafom_net::rng::derive_rng;
use wafom_net::{wafom_naive, wafom_tabled, GeneratingMatrixSet, WafomTables};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, q, s, d) = (30u32, 3u32, 5u32, 18u32);
    let mut rng = derive_rng(1, &[0]);
    let matrices = (0..s)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen::<u64>() & ((1u64 << n) - 1))
                .collect()
        })
        .collect();
    let g = GeneratingMatrixSet::new(n, matrices);

    println!("random net: n={n} s={s}, 2^{d} points\n");

    let t0 = Instant::now();
    let naive = wafom_naive(&g, d);
    let t_naive = t0.elapsed().as_secs_f64();

    let tables = WafomTables::new(n, q)?;
    let t1 = Instant::now();
    let tabled = wafom_tabled(&g, d, &tables);
    let t_tabled = t1.elapsed().as_secs_f64();

    println!("direct per-bit products: {naive:.16e}  in {t_naive:.3}s");
    println!("{q}-segment lookup:       {tabled:.16e}  in {t_tabled:.3}s");
    println!("\nspeedup: {:.1}x", t_naive / t_tabled);
    println!(
        "agreement: {:.2e} relative",
        ((naive - tabled) / naive).abs()
    );
    Ok(())
}
