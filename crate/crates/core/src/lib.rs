//! Optimal time-varying actuator schedules for continuous-time LTI systems.
//!
//! Maximizes `Tr ∫_0^T e^{At} B V(t) V(t)ᵀ Bᵀ e^{Aᵀt} dt` over diagonal 0/1
//! schedules `V` with total on-time `α`, through the decreasing rearrangement
//! of the concatenated actuator profiles `f_i(t) = ‖e^{At} b_i‖²`.

pub mod error;
pub mod gramian;
pub mod linalg;
pub mod oracle;
pub mod random;
pub mod rearrange;
pub mod scheduler;

pub use error::{Error, Result};
pub use gramian::{
    budget, check_feasible, trace_cost, Interval, LtiSystem, SampledProfile, Schedule, SystemOptions, ZeroColumnPolicy,
};
pub use linalg::{mat_exp, Matrix};
pub use oracle::{compare, knapsack_solve, CellSelection, Comparison};
pub use rearrange::{check_propositions, rearrange, FlatInterval, LocalShape, PropositionReport, RearrangedProfile};
pub use scheduler::{classify, solve, Case, Classification, FlatDof, SolutionReport};
