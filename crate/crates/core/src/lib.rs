//! Sparse penalized log-contrast regression for compositional data, fit
//! on a single machine, by one-shot averaging, by master–worker consensus,
//! or over a decentralized chain of machines.
//!
//! Every estimator implements [`Solver`] and is looked up by name in a
//! [`SolverRegistry`]:
//!
//! ```
//! use logcontrast::{SolverRegistry, SolverConfig, PenaltySpec};
//! use logcontrast::bench::{generate_synthetic, SyntheticSpec};
//!
//! let data = generate_synthetic(&SyntheticSpec { n: 400, seed: 1, ..Default::default() }).unwrap();
//! let shards = logcontrast::partition(&data.design, 4).unwrap();
//! let solver = SolverRegistry::builtin().get("dsgcdmm").unwrap();
//! let config = SolverConfig { rho: 1.0, ..Default::default() };
//! let fit = solver.fit(&shards, &PenaltySpec::lasso(0.02, 25), &config).unwrap();
//! assert!(fit.estimate.zero_sum_residual().abs() < 1e-6);
//! ```

pub mod baseline;
pub mod bench;
pub mod central;
pub mod chain;
pub mod compositional;
pub mod error;
pub mod io;
pub mod penalty;
pub mod solver;
pub mod tuning;

pub use baseline::{fit_acdmm, fit_gcdmm, Acdmm, Gcdmm};
pub use central::{fit_dscdmm, CentralState, Dscdmm};
pub use chain::{fit_dsgcdmm, ChainTopology, Dsgcdmm, MachineState};
pub use compositional::{
    build_design, partition, Coefficients, CompositionMatrix, LogContrastDesign, ShardedDataset,
};
pub use error::{Error, Result};
pub use penalty::{PenaltyKind, PenaltySpec};
pub use solver::{FitResult, RoundRecord, Solver, SolverConfig, SolverRegistry};
