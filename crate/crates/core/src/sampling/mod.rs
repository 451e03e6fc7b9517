//! Exact laws for small systems and Markov chain sampling for large ones.

pub mod chain;
pub mod exact;
pub mod export;
pub mod moments;

pub use chain::{
    chain_rng, heat_bath_sweep, run_chain, run_chains, Chain, ChainConfig, ChainSample, ChainState, InitialState,
};
pub use exact::{
    count_space_size, enumerate_configurations, exact_count_distribution, exact_count_moments, ExactDistribution,
    ExactMoments,
};
pub use moments::{default_batch_size, empirical_moments, MomentEstimate, DEFAULT_BATCH_COUNT};
