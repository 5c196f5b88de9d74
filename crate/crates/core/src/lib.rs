//! Soft-fusion covert communication as a zero-sum game.
//!
//! Alice transmits covertly to Bob with help from a cooperative Jammer while a
//! Fusion Center combines the energy readings of `W` Wardens. The crate covers
//! the special functions behind the detection errors, the outage model, the
//! payoff construction and equilibrium solvers, the geometric-deployment
//! baseline, the disjoint-interval robustness construction and Monte Carlo
//! cross-checks.

pub mod detection;
pub mod error;
pub mod game;
pub mod geometric;
pub mod lpsolve;
pub mod montecarlo;
pub mod robustness;
pub mod specfun;
pub mod system;

pub use detection::{FcAction, FcActionSpace};
pub use error::{Error, Result};
pub use game::{AliceJammerStrategy, FcStrategy, GameSolution, PayoffDecomposition, SolveOptions};
pub use system::{GridSpec, PowerGrid, PowerPair, SystemParams};
