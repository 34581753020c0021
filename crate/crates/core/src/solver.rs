//! Common solver interface and the runtime registry of solver strategies.
//!
//! Every estimator (global, averaging, centralized consensus, decentralized
//! chain) implements [`Solver`] and is looked up by name through
//! [`SolverRegistry`]. SCAD is handled here once for all solvers: each LLA
//! step re-weights the penalty from the previous estimate and warm-starts
//! the solver from its previous state.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::central::CentralState;
use crate::chain::MachineState;
use crate::compositional::{Coefficients, ShardedDataset};
use crate::error::{Error, Result};
use crate::penalty::{penalty_weights, PenaltyKind, PenaltySpec};

/// Which chain machine's estimate a decentralized fit reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChainOutput {
    /// `ζ_K`, the last machine.
    #[default]
    Last,
    /// Mean of all machine estimates.
    Average,
}

impl FromStr for ChainOutput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last" => Ok(Self::Last),
            "average" | "mean" => Ok(Self::Average),
            other => Err(Error::Usage(format!("unknown chain output '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Augmented-Lagrangian penalty ρ.
    pub rho: f64,
    /// Maximum communication rounds L.
    pub rounds: usize,
    /// Maximum coordinate-descent sweeps B per round.
    pub sweeps: usize,
    /// Inner sweeps stop once the largest coordinate change is below this.
    pub cd_tol: f64,
    /// Outer loop stops once every primal and dual residual is below this.
    pub outer_tol: f64,
    pub seed: u64,
    pub chain_output: ChainOutput,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1e-3,
            rounds: 2000,
            sweeps: 20,
            cd_tol: 1e-8,
            outer_tol: 1e-7,
            seed: 0,
            chain_output: ChainOutput::Last,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Parameter(format!("rho = {} must be > 0", self.rho)));
        }
        if self.rounds == 0 || self.sweeps == 0 {
            return Err(Error::Parameter("rounds and sweeps must be >= 1".into()));
        }
        if !(self.cd_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// One outer round's residuals.
///
/// For the centralized solvers `consensus` holds `||ζ_k - ζ||₂` per machine,
/// `zero_sum` the single master `C'ζ` and `dual` the master's
/// `ρ||ζ^{l+1} - ζ^l||₂`. For the chain, `consensus` holds `||ζ_k - ζ_{k+1}||₂`
/// per edge, `zero_sum` holds `g_k` per machine and `dual` the head `||s_k||₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub objective: f64,
    pub max_consensus: f64,
    pub max_zero_sum: f64,
    pub max_dual: f64,
    pub sweeps: usize,
    pub messages: u64,
    pub scalars: u64,
    pub consensus: Vec<f64>,
    pub zero_sum: Vec<f64>,
    pub dual: Vec<f64>,
}

impl RoundRecord {
    /// Sup-norm test on all three residual families.
    pub fn within(&self, tol: f64) -> bool {
        self.max_consensus <= tol && self.max_zero_sum <= tol && self.max_dual <= tol
    }
}

/// Resumable solver state, fed back in as a warm start.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverState {
    Central(CentralState),
    Chain(Vec<MachineState>),
    Averaged(Vec<CentralState>),
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub method: &'static str,
    pub estimate: Coefficients,
    /// Per-machine estimates (a single entry for the global solver).
    pub machine_estimates: Vec<Array1<f64>>,
    pub trace: Vec<RoundRecord>,
    pub rounds: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub messages: u64,
    pub scalars: u64,
    /// Threshold under which an entry counts as zero (0 means exact zeros).
    pub zero_tolerance: f64,
    /// Weights used in the final weighted-L1 solve.
    pub weights: Array1<f64>,
    pub lla_steps: usize,
    pub state: SolverState,
}

impl FitResult {
    pub fn support(&self) -> Vec<usize> {
        self.estimate.support(self.zero_tolerance)
    }

    pub fn last_record(&self) -> Option<&RoundRecord> {
        self.trace.last()
    }
}

/// An interchangeable estimator for the weighted-L1 log-contrast problem.
pub trait Solver: Send + Sync {
    /// Registry key, e.g. `dsgcdmm`.
    fn name(&self) -> &'static str;

    /// Short label for result tables, e.g. `DSGC`.
    fn tag(&self) -> &'static str;

    fn description(&self) -> &'static str;

    /// Reject datasets the algorithm cannot run on.
    fn check(&self, _data: &ShardedDataset) -> Result<()> {
        Ok(())
    }

    /// One weighted-L1 solve with fixed weights `penalty.weights`.
    fn solve(
        &self,
        data: &ShardedDataset,
        penalty: &PenaltySpec,
        config: &SolverConfig,
        warm: Option<&SolverState>,
    ) -> Result<FitResult>;

    /// Full fit; SCAD runs `penalty.lla_rounds` LLA steps.
    fn fit(
        &self,
        data: &ShardedDataset,
        penalty: &PenaltySpec,
        config: &SolverConfig,
    ) -> Result<FitResult> {
        fit_with_warm_start(self, data, penalty, config, None)
    }
}

impl fmt::Debug for dyn Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Solver({})", self.name())
    }
}

/// [`Solver::fit`] with an optional warm start, used along tuning paths.
pub fn fit_with_warm_start<S: Solver + ?Sized>(
    solver: &S,
    data: &ShardedDataset,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    warm: Option<&SolverState>,
) -> Result<FitResult> {
    penalty.validate()?;
    config.validate()?;
    solver.check(data)?;
    if penalty.weights.len() != data.d() {
        return Err(Error::Shape(format!(
            "penalty has {} weights, design has {} columns",
            penalty.weights.len(),
            data.d()
        )));
    }
    if penalty.kind != PenaltyKind::Scad {
        return solver.solve(data, penalty, config, warm);
    }

    let mut current = penalty.clone();
    let mut result = solver.solve(data, &current, config, warm)?;
    let (mut rounds, mut sweeps, mut messages, mut scalars) =
        (result.rounds, result.sweeps, result.messages, result.scalars);
    for _ in 1..penalty.lla_rounds {
        let weights = penalty_weights(
            PenaltyKind::Scad,
            Some(&result.estimate),
            data.d(),
            data.n(),
            penalty.lambda,
            penalty.scad_a,
        )?;
        current = current.with_weights(weights);
        result = solver.solve(data, &current, config, Some(&result.state))?;
        rounds += result.rounds;
        sweeps += result.sweeps;
        messages += result.messages;
        scalars += result.scalars;
    }
    result.rounds = rounds;
    result.sweeps = sweeps;
    result.messages = messages;
    result.scalars = scalars;
    result.lla_steps = penalty.lla_rounds;
    Ok(result)
}

/// Solvers keyed by name, in registration order.
#[derive(Clone, Default)]
pub struct SolverRegistry {
    solvers: Vec<Arc<dyn Solver>>,
}

impl SolverRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The four estimators shipped with the crate.
    pub fn builtin() -> Self {
        let mut registry = Self::new();
        registry.register(crate::chain::Dsgcdmm);
        registry.register(crate::central::Dscdmm);
        registry.register(crate::baseline::Gcdmm);
        registry.register(crate::baseline::Acdmm);
        registry
    }

    /// Add a solver, replacing any previous entry with the same name.
    pub fn register<S: Solver + 'static>(&mut self, solver: S) {
        self.insert(Arc::new(solver));
    }

    pub fn insert(&mut self, solver: Arc<dyn Solver>) {
        match self.solvers.iter().position(|s| s.name() == solver.name()) {
            Some(i) => self.solvers[i] = solver,
            None => self.solvers.push(solver),
        }
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Solver>> {
        let key = name.to_ascii_lowercase();
        self.solvers
            .iter()
            .find(|s| s.name() == key || s.tag().eq_ignore_ascii_case(&key))
            .cloned()
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown method '{name}' (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.solvers.iter().map(|s| s.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Solver>> {
        self.solvers.iter()
    }

    /// Position in registration order; used to sort result tables.
    pub fn rank(&self, name: &str) -> Option<usize> {
        self.solvers.iter().position(|s| s.name() == name)
    }
}

impl fmt::Debug for SolverRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
