//! Geometric programming: posynomial algebra, the log-space convex form, a
//! barrier-Newton solver and an exhaustive lattice oracle.

mod oracle;
mod posynomial;
mod problem;
mod solver;

pub use oracle::{grid_oracle, grid_oracle_with, GridPoint};
pub use posynomial::{evaluate, Monomial, Posynomial, VarId};
pub use problem::{log_sum_exp, to_convex, AffineForm, ConvexProgram, GpBuilder, GpProblem, LogSumExp, Variable};
pub use solver::{solve, solve_with, GpSolution, GpStatus, SolverOptions};
