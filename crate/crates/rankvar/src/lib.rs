//! How far down a noisy ranking can you trust?
//!
//! Items are ranked by averaged noisy measurements of latent attributes.
//! This crate estimates the probability that the top of such a ranking is
//! correct, computes the closed-form critical depth rates implied by the
//! attribute distribution's tail, builds bootstrap prediction intervals for
//! ranks on real data, and fits tail diagnostics to decide which regime a
//! dataset is in.
//!
//! The `examples/` directory demonstrates each capability; the `rankvar`
//! binary exposes the same operations as CLI subcommands.

pub mod bootstrap;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod rates;
pub mod sim;
pub mod stream;
pub mod tail;

pub use bootstrap::{
    bootstrap_rank_intervals, exhaustive_rank_intervals, mann_whitney, rank_items,
    top_set_probability, BootstrapReport, ItemDataset, StatKind, TopSetReport,
};
pub use diagnostics::{fit_stretched_exp, hill_estimator, qq_points, HillFit, StretchedExpFit};
pub use error::{Error, Result};
pub use rates::{RegimeReport, TailFamily};
pub use sim::{
    calibrate_noise, prefix_correct_depth, required_sample_size, run_rank_experiment,
    set_correct_flags, two_item_order_probability, Direction, ExperimentConfig, Mode, NoiseMode,
    RankCorrectnessReport, RankRealization, SizeSpec,
};
pub use tail::{Side, TailModel};
