//! A sequential generator and its equivalent digital net produce the same
//! points, and the sliding-product WAFOM agrees with the table evaluation.
//!
//! Run with: `cargo run --release --example seqgen_equivalence`

use std::collections::HashSet;

use rand::Rng;
use wafom_net::rng::derive_rng;
use wafom_net::seqgen::{
    companion_matrix, msequence, seqgen_as_digital_net, seqgen_points, wafom_sequential,
    SeqGenConfig,
};
use wafom_net::{wafom_tabled, PrimitivePoly, WafomTables};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (degree, n, s, q) = (8u32, 16u32, 3u32, 4u32);
    let poly = PrimitivePoly::for_degree(degree)?;
    println!(
        "recursion: degree {degree}, coefficient bits {:#b} (bit k = a_k)",
        poly.coeffs()
    );
    let bits = msequence(&poly, 1, 20)?;
    println!("first sequence bits: {bits:?}");
    println!("companion matrix columns: {:?}\n", companion_matrix(&poly));

    // Random n x d mixing matrix with a regular upper block.
    let mut rng = derive_rng(8, &[1]);
    let u_cols = loop {
        let cols: Vec<u64> = (0..degree)
            .map(|_| rng.gen::<u64>() & ((1u64 << n) - 1))
            .collect();
        if wafom_net::f2::is_upper_square_regular(&cols, n) {
            break cols;
        }
    };
    let cfg = SeqGenConfig::new(poly, n, u_cols, 1)?;

    // Same point set, two constructions.
    let direct: HashSet<Vec<u64>> = seqgen_points(&cfg, s)
        .iter()
        .map(|p| p.coords().to_vec())
        .collect();
    let net = seqgen_as_digital_net(&cfg, s);
    let via_net: HashSet<Vec<u64>> = (0..cfg.point_count())
        .map(|k| net.net_point(k, degree).coords().to_vec())
        .collect();
    assert_eq!(direct, via_net);
    println!(
        "point sets agree: {} points in {s} dimensions",
        direct.len()
    );

    let tables = WafomTables::new(n, q)?;
    let sliding = wafom_sequential(&cfg, s, &tables);
    let tabled = wafom_tabled(&net, degree, &tables);
    println!("sliding-product WAFOM: {sliding:.16e}");
    println!("table WAFOM:           {tabled:.16e}");
    println!(
        "difference: {:.2e} relative",
        ((sliding - tabled) / tabled).abs()
    );
    Ok(())
}
