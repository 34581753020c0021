//! Comparison baselines: the global solver on pooled data and one-shot
//! averaging of per-shard fits.

use ndarray::Array1;
use rayon::prelude::*;

use crate::central::{CentralEngine, CentralState};
use crate::compositional::{Coefficients, LogContrastDesign, ShardedDataset, ZERO_EPSILON};
use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;
use crate::solver::{FitResult, Solver, SolverConfig, SolverState};

/// Fit the pooled problem on a single machine.
pub fn fit_gcdmm(
    design: &LogContrastDesign,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<FitResult> {
    Gcdmm.fit(&ShardedDataset::single(design)?, penalty, config)
}

/// Average of independent per-shard fits.
pub fn fit_acdmm(
    data: &ShardedDataset,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<FitResult> {
    Acdmm.fit(data, penalty, config)
}

fn central_warm(warm: Option<&SolverState>) -> Option<&CentralState> {
    match warm {
        Some(SolverState::Central(s)) => Some(s),
        _ => None,
    }
}

/// Global coordinate descent method of multipliers: the consensus engine
/// with a single machine holding every row.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gcdmm;

impl Solver for Gcdmm {
    fn name(&self) -> &'static str {
        "gcdmm"
    }

    fn tag(&self) -> &'static str {
        "GC"
    }

    fn description(&self) -> &'static str {
        "single-machine solver on the pooled data"
    }

    fn solve(
        &self,
        data: &ShardedDataset,
        penalty: &PenaltySpec,
        config: &SolverConfig,
        warm: Option<&SolverState>,
    ) -> Result<FitResult> {
        let pooled;
        let data = if data.machine_count() == 1 {
            data
        } else {
            pooled = ShardedDataset::single(&data.reassemble())?;
            &pooled
        };
        Ok(CentralEngine::new(data, penalty, config, central_warm(warm))?.run(self.name()))
    }
}

/// One-shot averaging: every shard is fit alone and the estimates are averaged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Acdmm;

impl Solver for Acdmm {
    fn name(&self) -> &'static str {
        "acdmm"
    }

    fn tag(&self) -> &'static str {
        "AC"
    }

    fn description(&self) -> &'static str {
        "average of independent per-shard fits"
    }

    fn solve(
        &self,
        data: &ShardedDataset,
        penalty: &PenaltySpec,
        config: &SolverConfig,
        warm: Option<&SolverState>,
    ) -> Result<FitResult> {
        let k = data.machine_count();
        let warm_states = match warm {
            Some(SolverState::Averaged(s)) if s.len() == k => Some(s),
            _ => None,
        };
        let fits = (0..k)
            .into_par_iter()
            .map(|i| {
                let shard = data.only(i);
                let warm = warm_states.map(|s| &s[i]);
                CentralEngine::new(&shard, penalty, config, warm)
                    .map(|e| e.run("gcdmm"))
                    .map_err(|e| Error::Shard {
                        shard: i,
                        source: Box::new(e),
                    })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        let mut sum = Array1::zeros(data.d());
        for f in &fits {
            sum += &f.estimate.zeta();
        }
        let average = sum / k as f64;

        let rounds = fits.iter().map(|f| f.rounds).max().unwrap_or(0);
        let sweeps = fits.iter().map(|f| f.sweeps).sum();
        let converged = fits.iter().all(|f| f.converged);
        let d = data.d() as u64;
        let trace = fits.first().map(|f| f.trace.clone()).unwrap_or_default();
        let machine_estimates = fits.iter().map(|f| f.estimate.zeta().to_owned()).collect();
        let states = fits
            .into_iter()
            .map(|f| match f.state {
                SolverState::Central(s) => s,
                _ => unreachable!("central engine returns central state"),
            })
            .collect();

        Ok(FitResult {
            method: self.name(),
            estimate: Coefficients::new(average, data.p()),
            machine_estimates,
            trace,
            rounds,
            sweeps,
            converged,
            // One upload per shard.
            messages: k as u64,
            scalars: k as u64 * d,
            zero_tolerance: ZERO_EPSILON,
            weights: penalty.weights.clone(),
            lla_steps: 1,
            state: SolverState::Averaged(states),
        })
    }
}
