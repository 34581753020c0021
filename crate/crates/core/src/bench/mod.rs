//! Simulation studies: data generation, replications and summary tables.

mod cv;
mod metrics;
mod synthetic;

pub use cv::{cv_loss, CvReport, QNorm};
pub use metrics::{estimation_error, selection_metrics, MetricsRow, SelectionCounts, Summary};
pub use synthetic::{
    generate_synthetic, replication_seed, CovariateCase, SyntheticData, SyntheticSpec,
    DEFAULT_BETA, DEFAULT_THETA,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::central::CentralEngine;
use crate::chain::ChainEngine;
use crate::compositional::{partition, Coefficients, ShardedDataset};
use crate::error::{Error, Result};
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::solver::{SolverConfig, SolverRegistry};
use crate::tuning::{lambda_grid, penalty_template, select_lambda, DEFAULT_GRID_SIZE};

/// A grid of simulation cells: every σ × K × penalty × method combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub case: CovariateCase,
    pub noise_sd: f64,
    pub sigmas: Vec<f64>,
    pub machines: Vec<usize>,
    pub methods: Vec<String>,
    pub penalties: Vec<PenaltyKind>,
    pub reps: usize,
    pub seed: u64,
    pub grid_size: usize,
    pub solver: SolverConfig,
    /// Solver settings for the tuning path; defaults to `solver`.
    pub tuning: Option<SolverConfig>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            n: 20_000,
            p: 15,
            q: 10,
            case: CovariateCase::HeavyTailed,
            noise_sd: 0.2,
            sigmas: vec![0.2],
            machines: vec![10],
            methods: vec!["dsgcdmm".into(), "dscdmm".into(), "gcdmm".into(), "acdmm".into()],
            penalties: vec![PenaltyKind::AdaptiveLasso],
            reps: 20,
            seed: 2024,
            grid_size: DEFAULT_GRID_SIZE,
            solver: SolverConfig::default(),
            tuning: None,
        }
    }
}

/// Aggregated metrics for one (method, penalty, K, σ) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub label: String,
    pub penalty: PenaltyKind,
    pub machines: usize,
    pub sigma: f64,
    pub reps: usize,
    pub failures: Vec<String>,
    pub aee: Summary,
    pub fp: Summary,
    pub fn_: Summary,
    pub fp_c: Summary,
    pub fp_nc: Summary,
    pub fn_c: Summary,
    pub fn_nc: Summary,
    pub runtime_secs: Summary,
    pub rounds: Summary,
    /// Replications with any false positive or false negative.
    pub imperfect_reps: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<MetricsRow>,
    pub cells: Vec<CellSummary>,
}

impl BenchReport {
    pub fn cell(&self, method: &str, penalty: PenaltyKind, machines: usize, sigma: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.method == method && c.penalty == penalty && c.machines == machines && c.sigma == sigma
        })
    }
}

type RepOutcome = (usize, usize, PenaltyKind, String, std::result::Result<MetricsRow, String>);

/// Run every replication of every cell. Failures are recorded per cell.
pub fn run_replications(config: &BenchConfig, registry: &SolverRegistry) -> Result<BenchReport> {
    if config.reps == 0 {
        return Err(Error::Parameter("reps must be >= 1".into()));
    }
    let solvers = config
        .methods
        .iter()
        .map(|m| registry.get(m))
        .collect::<Result<Vec<_>>>()?;
    config.solver.validate()?;
    let tuning = config.tuning.clone().unwrap_or_else(|| config.solver.clone());

    let jobs: Vec<(usize, usize)> = (0..config.sigmas.len())
        .flat_map(|s| (0..config.reps).map(move |r| (s, r)))
        .collect();

    let outcomes: Vec<RepOutcome> = jobs
        .par_iter()
        .flat_map_iter(|&(si, rep)| {
            let sigma = config.sigmas[si];
            let spec = SyntheticSpec {
                n: config.n,
                p: config.p,
                q: config.q,
                sigma,
                case: config.case,
                noise_sd: config.noise_sd,
                seed: replication_seed(config.seed, rep as u64),
                center: true,
                true_zeta: None,
            };
            let mut out: Vec<RepOutcome> = Vec::new();
            let data = match generate_synthetic(&spec) {
                Ok(d) => d,
                Err(e) => {
                    for &k in &config.machines {
                        for &kind in &config.penalties {
                            for s in &solvers {
                                out.push((si, k, kind, s.name().to_string(), Err(format!("rep {rep}: {e}"))));
                            }
                        }
                    }
                    return out;
                }
            };
            for &k in &config.machines {
                let sharded = match partition(&data.design, k) {
                    Ok(s) => s,
                    Err(e) => {
                        for &kind in &config.penalties {
                            for s in &solvers {
                                out.push((si, k, kind, s.name().to_string(), Err(format!("rep {rep}: {e}"))));
                            }
                        }
                        continue;
                    }
                };
                for &kind in &config.penalties {
                    let tuned = tune_on_first_shard(&sharded, kind, &tuning, config.grid_size);
                    for s in &solvers {
                        let result = match &tuned {
                            Err(e) => Err(format!("rep {rep}: tuning: {e}")),
                            Ok(penalty) => {
                                let started = Instant::now();
                                s.fit(&sharded, penalty, &config.solver)
                                    .and_then(|fit| {
                                        let counts = selection_metrics(&fit.estimate, &data.truth, fit.zero_tolerance)?;
                                        Ok(MetricsRow {
                                            method: s.name().to_string(),
                                            penalty: kind.name().to_string(),
                                            machines: k,
                                            sigma,
                                            rep,
                                            lambda: penalty.lambda,
                                            aee: estimation_error(&fit.estimate, &data.truth),
                                            counts,
                                            runtime_secs: started.elapsed().as_secs_f64(),
                                            rounds: fit.rounds,
                                            converged: fit.converged,
                                        })
                                    })
                                    .map_err(|e| format!("rep {rep}: {e}"))
                            }
                        };
                        out.push((si, k, kind, s.name().to_string(), result));
                    }
                }
            }
            out
        })
        .collect();

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (si, &sigma) in config.sigmas.iter().enumerate() {
        for &k in &config.machines {
            for &kind in &config.penalties {
                let mut names: Vec<&'static str> = solvers.iter().map(|s| s.name()).collect();
                names.sort_by_key(|n| registry.rank(n));
                names.dedup();
                for name in names {
                    let mut ok: Vec<MetricsRow> = Vec::new();
                    let mut failures = Vec::new();
                    for (osi, ok_k, okind, oname, res) in &outcomes {
                        if *osi == si && *ok_k == k && *okind == kind && oname == name {
                            match res {
                                Ok(r) => ok.push(r.clone()),
                                Err(e) => failures.push(e.clone()),
                            }
                        }
                    }
                    ok.sort_by_key(|r| r.rep);
                    cells.push(summarize(name, registry, kind, k, sigma, &ok, failures));
                    rows.extend(ok);
                }
            }
        }
    }
    Ok(BenchReport { rows, cells })
}

fn summarize(
    name: &str,
    registry: &SolverRegistry,
    kind: PenaltyKind,
    machines: usize,
    sigma: f64,
    rows: &[MetricsRow],
    failures: Vec<String>,
) -> CellSummary {
    let col = |f: &dyn Fn(&MetricsRow) -> f64| Summary::of(&rows.iter().map(f).collect::<Vec<_>>());
    let tag = registry.get(name).map(|s| s.tag()).unwrap_or("?");
    CellSummary {
        method: name.to_string(),
        label: format!("{tag}-{}", kind.tag()),
        penalty: kind,
        machines,
        sigma,
        reps: rows.len(),
        failures,
        aee: col(&|r| r.aee),
        fp: col(&|r| r.counts.fp() as f64),
        fn_: col(&|r| r.counts.fn_() as f64),
        fp_c: col(&|r| r.counts.fp_c as f64),
        fp_nc: col(&|r| r.counts.fp_nc as f64),
        fn_c: col(&|r| r.counts.fn_c as f64),
        fn_nc: col(&|r| r.counts.fn_nc as f64),
        runtime_secs: col(&|r| r.runtime_secs),
        rounds: col(&|r| r.rounds as f64),
        imperfect_reps: rows.iter().filter(|r| !r.counts.is_perfect()).count(),
    }
}

/// GIC-tuned penalty for `kind` from the first shard, shared by all methods.
pub fn tune_on_first_shard(
    data: &ShardedDataset,
    kind: PenaltyKind,
    config: &SolverConfig,
    grid_size: usize,
) -> Result<PenaltySpec> {
    let first = data.only(0);
    let grid = lambda_grid(first.shard(0), data.p(), grid_size)?;
    let template = penalty_template(kind, &first, config, &grid, data.n())?;
    let selection = select_lambda(&first, &crate::baseline::Gcdmm, &template, config, &grid)?;
    Ok(template.with_lambda(selection.lambda))
}

/// Solvers whose intermediate iterates can be sampled round by round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMethod {
    Chain,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub rounds: usize,
    pub sweeps: usize,
    pub aee: f64,
    /// `||ζ^L - ζ_ref||_∞` when a reference estimate is given.
    pub distance: Option<f64>,
}

/// Estimation error after each requested number of rounds, for each sweep cap.
pub fn aee_curve(
    data: &ShardedDataset,
    truth: &Coefficients,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    method: CurveMethod,
    rounds: &[usize],
    sweeps: &[usize],
    reference: Option<&Coefficients>,
) -> Result<Vec<CurvePoint>> {
    let mut wanted = rounds.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let last = *wanted.last().ok_or_else(|| Error::Parameter("no rounds requested".into()))?;

    let mut points = Vec::new();
    for &b in sweeps {
        let cfg = SolverConfig {
            sweeps: b,
            rounds: last,
            ..config.clone()
        };
        let mut record = |l: usize, zeta: ndarray::Array1<f64>| {
            let est = Coefficients::new(zeta, data.p());
            let distance = reference.map(|r| {
                (&est.zeta() - &r.zeta()).iter().fold(0.0f64, |m, v| m.max(v.abs()))
            });
            points.push(CurvePoint {
                rounds: l,
                sweeps: b,
                aee: estimation_error(&est, truth),
                distance,
            });
        };
        match method {
            CurveMethod::Chain => {
                let mut engine = ChainEngine::new(data, penalty, &cfg, None)?;
                for l in 1..=last {
                    engine.step()?;
                    if wanted.binary_search(&l).is_ok() {
                        record(l, engine.output(cfg.chain_output));
                    }
                }
            }
            CurveMethod::Central => {
                let mut engine = CentralEngine::new(data, penalty, &cfg, None)?;
                for l in 1..=last {
                    engine.step();
                    if wanted.binary_search(&l).is_ok() {
                        record(l, engine.state().zeta.clone());
                    }
                }
            }
        }
    }
    Ok(points)
}
