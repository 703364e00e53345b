//! Maximization over the box-constrained action space.

mod bounds;
mod inner;
mod local;
mod multistart;
mod oneshot;
pub mod subgradient;

pub use bounds::Bounds;
pub use inner::inner_value_maximize;
pub use local::{local_maximize, LocalConfig, LocalResult};
pub use multistart::{
    maximize_from_starts, multistart_maximize, OptimizerConfig, Optimum, StartDistribution,
};
pub use oneshot::{
    one_shot_maximize, OneShotObjective, OneShotResult, OneShotState, PREPASS_CANDIDATES,
};
pub use subgradient::{subgradient_probe, Dual};
