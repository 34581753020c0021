//! Master–worker consensus solver.
//!
//! Every round each worker solves a ridge problem against the current global
//! estimate, the master runs coordinate descent on the penalized consensus
//! subproblem under the zero-sum constraint, then the scalar zero-sum dual
//! `μ` and the per-worker consensus duals `γ_k` take an ascent step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use ndarray::{Array1, ArrayView1, Zip};
use rayon::prelude::*;

use crate::compositional::{Coefficients, Shard, ShardStats, ShardedDataset};
use crate::error::{Error, Result};
use crate::penalty::{soft_threshold, PenaltySpec};
use crate::solver::{FitResult, RoundRecord, Solver, SolverConfig, SolverState};

/// Factorized `(1/n_k)Π_k'Π_k + ρI`, reused every round.
#[derive(Debug, Clone)]
pub struct RidgeSystem {
    factor: Cholesky<f64, Dyn>,
    xty: Array1<f64>,
    rho: f64,
}

impl RidgeSystem {
    pub fn new(stats: &ShardStats, rho: f64) -> Result<Self> {
        let d = stats.xty.len();
        let matrix = DMatrix::from_fn(d, d, |i, j| {
            stats.gram[[i, j]] + if i == j { rho } else { 0.0 }
        });
        let factor = matrix.cholesky().ok_or_else(|| {
            Error::Numerical("ridge system is not positive definite".into())
        })?;
        Ok(Self {
            factor,
            xty: stats.xty.clone(),
            rho,
        })
    }

    /// `((1/n_k)Π'Π + ρI)^{-1}((1/n_k)Π'y + ρζ - γ_k)`.
    pub fn solve(&self, zeta_global: ArrayView1<'_, f64>, gamma: ArrayView1<'_, f64>) -> Array1<f64> {
        let rhs = DVector::from_iterator(
            self.xty.len(),
            self.xty
                .iter()
                .zip(zeta_global.iter())
                .zip(gamma.iter())
                .map(|((b, z), g)| b + self.rho * z - g),
        );
        Array1::from_iter(self.factor.solve(&rhs).iter().copied())
    }
}

/// Worker update for one shard (factorizes on every call; the engine caches
/// a [`RidgeSystem`] instead).
pub fn local_ridge_update(
    shard: &Shard,
    zeta_global: ArrayView1<'_, f64>,
    gamma: ArrayView1<'_, f64>,
    rho: f64,
) -> Result<Array1<f64>> {
    if !(rho > 0.0) {
        return Err(Error::Parameter(format!("rho = {rho} must be > 0")));
    }
    Ok(RidgeSystem::new(shard.stats(), rho)?.solve(zeta_global, gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalState {
    pub zeta: Array1<f64>,
    pub gamma: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralState {
    pub zeta: Array1<f64>,
    pub mu: f64,
    pub locals: Vec<LocalState>,
    pub round: usize,
}

impl CentralState {
    pub fn zeros(machines: usize, d: usize) -> Self {
        Self {
            zeta: Array1::zeros(d),
            mu: 0.0,
            locals: (0..machines)
                .map(|_| LocalState {
                    zeta: Array1::zeros(d),
                    gamma: Array1::zeros(d),
                })
                .collect(),
            round: 0,
        }
    }

    fn fits(&self, machines: usize, d: usize) -> bool {
        self.zeta.len() == d
            && self.locals.len() == machines
            && self
                .locals
                .iter()
                .all(|l| l.zeta.len() == d && l.gamma.len() == d)
    }
}

/// Master subproblem data: weights, threshold scale and constraint.
#[derive(Debug, Clone, Copy)]
pub struct MasterProblem<'a> {
    pub weights: ArrayView1<'a, f64>,
    /// Penalty level applied to the global `ζ`.
    pub lambda: f64,
    pub constraint: ArrayView1<'a, f64>,
    pub rho: f64,
}

/// Per-coordinate sums `Σ_k γ_k` and `Σ_k ζ_k` over workers.
#[derive(Debug, Clone)]
pub struct WorkerSums {
    pub gamma: Array1<f64>,
    pub zeta: Array1<f64>,
    pub machines: usize,
}

impl WorkerSums {
    pub fn from_locals(locals: &[LocalState]) -> Self {
        let d = locals.first().map_or(0, |l| l.zeta.len());
        let mut gamma = Array1::zeros(d);
        let mut zeta = Array1::zeros(d);
        for l in locals {
            gamma += &l.gamma;
            zeta += &l.zeta;
        }
        Self {
            gamma,
            zeta,
            machines: locals.len(),
        }
    }
}

/// Closed-form minimizer of the master subproblem in coordinate `j` with the
/// other coordinates of `zeta` held fixed.
pub fn master_coordinate(
    problem: &MasterProblem<'_>,
    sums: &WorkerSums,
    mu: f64,
    zeta: ArrayView1<'_, f64>,
    j: usize,
) -> f64 {
    let c = problem.constraint;
    let cj = c[j];
    let others = c.dot(&zeta) - cj * zeta[j];
    master_coordinate_with(problem, sums, mu, others, j)
}

#[inline]
fn master_coordinate_with(
    problem: &MasterProblem<'_>,
    sums: &WorkerSums,
    mu: f64,
    others: f64,
    j: usize,
) -> f64 {
    let rho = problem.rho;
    let cj = problem.constraint[j];
    let u = sums.gamma[j] / rho + sums.zeta[j] - mu * cj / rho - cj * others;
    let t = problem.lambda * problem.weights[j] / rho;
    soft_threshold(u, t) / (cj * cj + sums.machines as f64)
}

/// Gauss–Seidel sweeps over the master subproblem, warm-started from
/// `start`. Returns the new global estimate and the number of sweeps run.
pub fn master_cd_update(
    problem: &MasterProblem<'_>,
    sums: &WorkerSums,
    mu: f64,
    start: ArrayView1<'_, f64>,
    max_sweeps: usize,
    cd_tol: f64,
) -> (Array1<f64>, usize) {
    let mut zeta = start.to_owned();
    let c = problem.constraint;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut cz = c.dot(&zeta);
        let mut max_change: f64 = 0.0;
        for j in 0..zeta.len() {
            let old = zeta[j];
            let others = cz - c[j] * old;
            let new = master_coordinate_with(problem, sums, mu, others, j);
            if new != old {
                zeta[j] = new;
                cz = others + c[j] * new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change <= cd_tol {
            break;
        }
    }
    (zeta, sweeps)
}

/// `μ + ρ C'ζ`.
pub fn dual_update_mu(mu: f64, zeta: ArrayView1<'_, f64>, constraint: ArrayView1<'_, f64>, rho: f64) -> f64 {
    mu + rho * constraint.dot(&zeta)
}

/// `γ_k + ρ(ζ_k - ζ)`.
pub fn dual_update_gamma(
    gamma: ArrayView1<'_, f64>,
    zeta_local: ArrayView1<'_, f64>,
    zeta_global: ArrayView1<'_, f64>,
    rho: f64,
) -> Array1<f64> {
    let mut out = gamma.to_owned();
    Zip::from(&mut out)
        .and(&zeta_local)
        .and(&zeta_global)
        .for_each(|g, &zl, &zg| *g += rho * (zl - zg));
    out
}

/// Round-by-round driver for the consensus solver.
///
/// The global penalty is `K·λ` so that, for equal shard sizes, the consensus
/// objective `Σ_k (1/2n_k)||y_k - Π_kζ||² + Kλ||ω∘ζ||₁` is `K` times the pooled
/// objective at `λ`.
pub struct CentralEngine<'a> {
    data: &'a ShardedDataset,
    ridge: Vec<RidgeSystem>,
    penalty: &'a PenaltySpec,
    config: &'a SolverConfig,
    state: CentralState,
    sweeps: usize,
    messages: u64,
    scalars: u64,
}

impl<'a> CentralEngine<'a> {
    pub fn new(
        data: &'a ShardedDataset,
        penalty: &'a PenaltySpec,
        config: &'a SolverConfig,
        warm: Option<&CentralState>,
    ) -> Result<Self> {
        config.validate()?;
        let ridge = data
            .shards()
            .par_iter()
            .map(|s| RidgeSystem::new(s.stats(), config.rho))
            .collect::<Result<Vec<_>>>()?;
        let k = data.machine_count();
        let state = match warm {
            Some(w) if w.fits(k, data.d()) => CentralState { round: 0, ..w.clone() },
            _ => CentralState::zeros(k, data.d()),
        };
        Ok(Self {
            data,
            ridge,
            penalty,
            config,
            state,
            sweeps: 0,
            messages: 0,
            scalars: 0,
        })
    }

    pub fn state(&self) -> &CentralState {
        &self.state
    }

    pub fn global_lambda(&self) -> f64 {
        self.penalty.lambda * self.data.machine_count() as f64
    }

    /// `Σ_k (1/2n_k)||y_k - Π_kζ||² + Kλ||ω∘ζ||₁`.
    pub fn objective(&self, zeta: ArrayView1<'_, f64>) -> f64 {
        let loss: f64 = self.data.shards().iter().map(|s| s.stats().loss(zeta)).sum();
        loss + self.data.machine_count() as f64 * self.penalty.value(zeta)
    }

    pub fn step(&mut self) -> RoundRecord {
        let rho = self.config.rho;
        let k = self.data.machine_count();
        let d = self.data.d();
        let zeta_prev = self.state.zeta.clone();

        // workers
        let new_locals: Vec<Array1<f64>> = self
            .ridge
            .par_iter()
            .zip(self.state.locals.par_iter())
            .map(|(sys, local)| sys.solve(zeta_prev.view(), local.gamma.view()))
            .collect();
        for (local, z) in self.state.locals.iter_mut().zip(new_locals) {
            local.zeta = z;
        }

        // master
        let sums = WorkerSums::from_locals(&self.state.locals);
        let lambda = self.global_lambda();
        let problem = MasterProblem {
            weights: self.penalty.weights.view(),
            lambda,
            constraint: self.data.constraint(),
            rho,
        };
        let (zeta, sweeps) = master_cd_update(
            &problem,
            &sums,
            self.state.mu,
            zeta_prev.view(),
            self.config.sweeps,
            self.config.cd_tol,
        );
        self.sweeps += sweeps;

        // duals
        self.state.mu = dual_update_mu(self.state.mu, zeta.view(), self.data.constraint(), rho);
        for local in &mut self.state.locals {
            local.gamma = dual_update_gamma(local.gamma.view(), local.zeta.view(), zeta.view(), rho);
        }

        let consensus: Vec<f64> = self
            .state
            .locals
            .iter()
            .map(|l| (&l.zeta - &zeta).mapv(|v| v * v).sum().sqrt())
            .collect();
        let max_consensus = self
            .state
            .locals
            .iter()
            .flat_map(|l| l.zeta.iter().zip(zeta.iter()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let g = self.data.constraint().dot(&zeta);
        let dual_step = &zeta - &zeta_prev;
        let dual_inf = rho * dual_step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dual_l2 = rho * dual_step.dot(&dual_step).sqrt();

        self.state.zeta = zeta;
        self.state.round += 1;
        // K uploads of ζ_k and K broadcasts of ζ.
        self.messages += 2 * k as u64;
        self.scalars += 2 * (k * d) as u64;

        RoundRecord {
            round: self.state.round,
            objective: self.objective(self.state.zeta.view()),
            max_consensus,
            max_zero_sum: g.abs(),
            max_dual: dual_inf,
            sweeps,
            messages: self.messages,
            scalars: self.scalars,
            consensus,
            zero_sum: vec![g],
            dual: vec![dual_l2],
        }
    }

    pub fn run(mut self, method: &'static str) -> FitResult {
        let mut trace = Vec::with_capacity(self.config.rounds.min(4096));
        let mut converged = false;
        for _ in 0..self.config.rounds {
            let record = self.step();
            converged = record.within(self.config.outer_tol);
            trace.push(record);
            if converged {
                break;
            }
        }
        if !converged {
            log::debug!("{method}: outer tolerance not met after {} rounds", self.state.round);
        }
        FitResult {
            method,
            estimate: Coefficients::new(self.state.zeta.clone(), self.data.p()),
            machine_estimates: self.state.locals.iter().map(|l| l.zeta.clone()).collect(),
            rounds: self.state.round,
            sweeps: self.sweeps,
            converged,
            messages: self.messages,
            scalars: self.scalars,
            zero_tolerance: 0.0,
            weights: self.penalty.weights.clone(),
            lla_steps: 1,
            trace,
            state: SolverState::Central(self.state),
        }
    }
}

/// Run the consensus solver to completion.
pub fn fit_dscdmm(
    data: &ShardedDataset,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<FitResult> {
    Dscdmm.fit(data, penalty, config)
}

/// Distributed sparse coordinate descent method of multipliers.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dscdmm;

impl Solver for Dscdmm {
    fn name(&self) -> &'static str {
        "dscdmm"
    }

    fn tag(&self) -> &'static str {
        "DSC"
    }

    fn description(&self) -> &'static str {
        "centralized consensus ADMM with master coordinate descent"
    }

    fn solve(
        &self,
        data: &ShardedDataset,
        penalty: &PenaltySpec,
        config: &SolverConfig,
        warm: Option<&SolverState>,
    ) -> Result<FitResult> {
        let warm = match warm {
            Some(SolverState::Central(s)) => Some(s),
            _ => None,
        };
        Ok(CentralEngine::new(data, penalty, config, warm)?.run(self.name()))
    }
}
