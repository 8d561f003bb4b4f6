//! Digital nets over F2 with WAFOM-based quality evaluation.
//!
//! This crate builds, searches for, and evaluates *extensible* digital nets:
//! point sets in `[0,1)^S` generated by multiplying S bit matrices with the
//! base-2 digit vectors of the indices `0..2^d`. Quality is measured by the
//! Walsh figure of merit (WAFOM), which this crate evaluates both by the
//! direct per-bit product formula and by a segmented lookup-table method
//! that is roughly `n/q` times faster at the same precision.
//!
//! The main capabilities, each with a runnable program under `examples/`:
//!
//! * [`f2`] — bit-packed columns, generating matrices, Gray-code point
//!   enumeration, regularity tests.
//! * [`wafom`] — the direct and the table-based WAFOM evaluators.
//! * [`search`] — greedy column-by-column random search for extensible
//!   low-WAFOM generating matrices.
//! * [`seqgen`] — M-sequence "sequential generators", their digital-net
//!   equivalence, and an O(N) sliding-product WAFOM evaluation.
//! * [`genz`] — the six standard parameterized test-integrand families with
//!   analytic integrals, and a median-relative-error benchmark harness.
//! * [`integrate`] — deterministic QMC integration over a net plus a seeded
//!   Monte Carlo baseline.
//!
//! A thin command-line binary (`wafom-net`) exposes the same operations as
//! subcommands; see the crate README.
//!
//! # Quickstart
//!
//! Search for a small net, then check its figure of merit and integrate a
//! test function over it:
//!
//! ```
//! use wafom_net::genz::{make_instance, GenzFamily};
//! use wafom_net::integrate::{qmc_integrate, IntegrationRequest};
//! use wafom_net::rng::derive_rng;
//! use wafom_net::search::{search_extensible, SearchConfig};
//! use wafom_net::wafom::{wafom_tabled, WafomTables};
//!
//! let cfg = SearchConfig { n: 16, m: 10, s: 3, trials: 8, q: 4, seed: 1 };
//! let (net, trace) = search_extensible(&cfg)?;
//!
//! let tables = WafomTables::new(16, 4)?;
//! let w = wafom_tabled(&net, 10, &tables);
//! assert_eq!(w, trace.stages.last().unwrap().best_wafom);
//!
//! let f = make_instance(GenzFamily::Gaussian, 3, 1.5, &mut derive_rng(7, &[0]))?;
//! let estimate = qmc_integrate(IntegrationRequest {
//!     matrices: &net,
//!     d: 10,
//!     integrand: |x: &[f64]| f.eval(x),
//!     shift: true,
//! })?;
//! let rel = ((estimate - f.exact_integral()) / f.exact_integral()).abs();
//! assert!(rel < 1e-2);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod f2;
pub mod genz;
pub mod integrate;
pub mod kahan;
pub mod matfile;
pub mod rng;
pub mod search;
pub mod seqgen;
pub mod wafom;

pub use f2::{GeneratingMatrixSet, NetPoint};
pub use genz::{GenzFamily, GenzInstance};
pub use search::{SearchConfig, SearchTrace};
pub use seqgen::{PrimitivePoly, SeqGenConfig};
pub use wafom::{wafom_naive, wafom_tabled, WafomTables};
