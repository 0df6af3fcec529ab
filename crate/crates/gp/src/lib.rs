//! Geometric programming in log coordinates.
//!
//! Build a [`GpProblem`] from [`Monomial`], [`Posynomial`] and
//! [`GenPosynomial`] pieces, then call [`solve`]. The solver works on
//! `y = log x`, where every function becomes convex, using a log-barrier
//! interior-point method. Newton systems exploit block structure so that
//! problems with a few hundred variables solve in milliseconds.
//!
//! ```
//! use posy::{solve, GpProblem, GpStatus, Monomial, SolveOptions};
//!
//! // minimise x subject to 2/x <= 1
//! let mut gp = GpProblem::new(1, Monomial::var(0));
//! gp.add_constraint(Monomial::new(2.0, [(0, -1.0)]).unwrap());
//! let sol = solve(&gp, &SolveOptions::default()).unwrap();
//! assert_eq!(sol.status, GpStatus::Optimal);
//! assert!((sol.x[0] - 2.0).abs() < 1e-6);
//! ```

mod algebra;
mod barrier;
mod convex;
mod newton;
mod problem;

pub use algebra::{GenPosynomial, Monomial, Posynomial};
pub use convex::{to_log_convex, ConvexProgram, ExpPosy, Ineq, LogConvexFn, LseBlock, LseEval};
pub use problem::{solve, GpProblem, GpSolution, GpStatus, SolveOptions};

#[derive(Debug, thiserror::Error)]
pub enum GpError {
    #[error("coefficient {0} is not a positive finite number")]
    NonPositiveCoefficient(f64),
    #[error("malformed expression: {0}")]
    Malformed(String),
    #[error("variable x{0} is not declared")]
    UnknownVariable(usize),
    #[error("x{var} = {value} lies outside the positive orthant")]
    Domain { var: usize, value: f64 },
    #[error("bounds [{lo}, {hi}] on x{var} are invalid")]
    InvalidBounds { var: usize, lo: f64, hi: f64 },
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error("cannot parse problem text: {0}")]
    Parse(#[from] serde_json::Error),
}
