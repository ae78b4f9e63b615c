//! Load-aware informative path planning.
//!
//! A robot that collects physical samples gets heavier with every sample, so
//! the energy of each later edge depends on where and how much it sampled
//! before. This crate plans routes, visitation order and per-vertex sample
//! counts that minimise Gaussian-process posterior variance at a set of test
//! locations under a load-dependent energy budget.
//!
//! * [`gp`]: kernel, posterior variance and the estimator (LLSE) form of it.
//! * [`world`]: graph, terrain costs, load profile and transport energy.
//! * [`solver`]: exact branch-and-bound and a brute-force reference.
//! * [`miqp`]: the mixed-integer quadratic model, LP export and assignment
//!   validation.
//! * [`baselines`]: distance-budget planning with uniform sampling, and a
//!   greedy heuristic.
//! * [`experiments`]: scenario generation and the parameter sweeps.

pub mod baselines;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod gp;
pub mod miqp;
pub mod scenario;
pub mod solver;
pub mod world;

pub use error::{LippError, Result};
pub use exec::Execution;
pub use gp::{FieldEval, FieldModel, Kernel, Point, SampleAllocation};
pub use scenario::Scenario;
pub use solver::{solve_exact, PlanQuery, SolveReport, SolveStatus, VisitPolicy};
pub use world::{EnergyParams, Plan, Step, World};
