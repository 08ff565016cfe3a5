//! Online algorithms: RANDOM, deterministic baselines and the divisible
//! split strategy.

mod divisible;
mod greedy;
mod random;

pub use divisible::{
    harmonic_stop_index, run_divisible_split, simulate_divisible_split,
    solve_divisible_fixed_point, ItemSplit, SplitOutcome, SplitParams,
};
pub use greedy::{run_envy_capped_greedy, run_greedy_lexico};
pub use random::{run_random, run_random_with, RunOptions, RunTrace, Step};
