//! Simulation laboratory for online class-fair bipartite matching.
//!
//! Agents are known up front and partitioned into classes; items arrive one
//! at a time and must be matched on arrival or dropped. The crate provides
//! instance generators, the RANDOM algorithm and baselines, exact metric
//! evaluation (class envy-freeness, proportionality, utilitarian and Nash
//! welfare), brute-force oracles for small instances, and seeded Monte Carlo
//! presets.
//!
//! ```
//! use fairmatch::{gen_cef_impossibility, run_random, cef_report};
//!
//! let inst = gen_cef_impossibility(50).unwrap();
//! let trace = run_random(&inst, 7);
//! let report = cef_report(&inst, &trace.matching);
//! assert!(report.cef_alpha >= 0.0 && report.cef_alpha <= 1.0);
//! ```

pub mod algorithms;
pub mod error;
pub mod experiments;
pub mod ids;
pub mod instance;
pub mod matching;
pub mod rng;
pub mod valuation;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use algorithms::*;
pub use error::{Error, Result};
pub use ids::{AgentId, ClassId, ItemId};
pub use instance::{
    gen_cef_impossibility, gen_cnsw_counterexample, gen_divisible_hardness,
    gen_price_of_fairness, gen_random_bipartite, gen_upper_triangular, make_instance, Instance,
    InstanceFile,
};
pub use matching::{class_loads, is_nonwasteful, FractionalMatching, Matching, LOAD_TOLERANCE};
pub use valuation::{
    cef1_check, cef_report, class_value, cmnw_bruteforce, cnsw, cnsw_product, metrics_report,
    optimistic_value, prop_share_oracle, usw_opt, Bundle, CefReport, MetricsReport, OracleCaps,
    PropShare,
};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/instances.md")]
    mod instances {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/algorithms.md")]
    mod algorithms {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
