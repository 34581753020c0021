//! Decentralized chain solver.
//!
//! Machines `0..K` sit on a line. Even indices form the head group and odd
//! indices the tail group. Each round the heads update from their
//! neighbours' previous values, the tails update from the fresh head values,
//! and every machine then takes a dual step on its own zero-sum multiplier
//! `μ_k` and on the multiplier `γ_k` of its right-hand edge.
//!
//! All updates work from the cached shard moments, so one sweep costs
//! `O(d²)` regardless of `n_k`.

use ndarray::{Array1, ArrayView1, Zip};
use rayon::prelude::*;

use crate::compositional::{Coefficients, ShardStats, ShardedDataset};
use crate::error::{Error, Result};
use crate::penalty::{soft_threshold, PenaltySpec};
use crate::solver::{ChainOutput, FitResult, RoundRecord, Solver, SolverConfig, SolverState};

/// Even-length chain with alternating head and tail machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainTopology {
    machines: usize,
}

impl ChainTopology {
    pub fn new(machines: usize) -> Result<Self> {
        if machines < 2 || machines % 2 == 1 {
            let hint = if machines % 2 == 1 && machines > 1 {
                format!("; merge the last two shards to run on {} machines", machines - 1)
            } else {
                String::new()
            };
            return Err(Error::Topology(format!(
                "the chain needs an even number of machines >= 2, got K = {machines}{hint}"
            )));
        }
        Ok(Self { machines })
    }

    pub fn machine_count(&self) -> usize {
        self.machines
    }

    pub fn edge_count(&self) -> usize {
        self.machines - 1
    }

    pub fn is_head(&self, k: usize) -> bool {
        k % 2 == 0
    }

    pub fn heads(&self) -> impl Iterator<Item = usize> {
        (0..self.machines).step_by(2)
    }

    pub fn tails(&self) -> impl Iterator<Item = usize> {
        (1..self.machines).step_by(2)
    }

    /// `(left, right)` neighbours of machine `k`.
    pub fn neighbors(&self, k: usize) -> (Option<usize>, Option<usize>) {
        let left = k.checked_sub(1);
        let right = (k + 1 < self.machines).then_some(k + 1);
        (left, right)
    }
}

/// One machine's primal and dual variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    pub zeta: Array1<f64>,
    pub mu: f64,
    /// Dual of the edge to the right neighbour; `None` on the last machine.
    pub gamma: Option<Array1<f64>>,
}

impl MachineState {
    pub fn zeros(d: usize, has_right_edge: bool) -> Self {
        Self {
            zeta: Array1::zeros(d),
            mu: 0.0,
            gamma: has_right_edge.then(|| Array1::zeros(d)),
        }
    }
}

fn chain_zeros(machines: usize, d: usize) -> Vec<MachineState> {
    (0..machines)
        .map(|k| MachineState::zeros(d, k + 1 < machines))
        .collect()
}

/// Everything a machine needs for one local solve.
#[derive(Debug, Clone, Copy)]
pub struct LocalProblem<'a> {
    pub stats: &'a ShardStats,
    pub constraint: ArrayView1<'a, f64>,
    pub weights: ArrayView1<'a, f64>,
    pub lambda: f64,
    pub rho: f64,
    pub mu: f64,
    /// `(ζ_{k-1}, γ_{k-1})` from the left neighbour.
    pub left: Option<(ArrayView1<'a, f64>, ArrayView1<'a, f64>)>,
    /// `(ζ_{k+1}, γ_k)`: the right neighbour's estimate and this machine's edge dual.
    pub right: Option<(ArrayView1<'a, f64>, ArrayView1<'a, f64>)>,
}

impl<'a> LocalProblem<'a> {
    fn neighbor_count(&self) -> f64 {
        (self.left.is_some() as usize + self.right.is_some() as usize) as f64
    }

    /// Linear coefficient the consensus terms add to coordinate `j`.
    #[inline]
    fn consensus_pull(&self, j: usize) -> f64 {
        let mut v = 0.0;
        if let Some((z, g)) = self.left {
            v += self.rho * z[j] + g[j];
        }
        if let Some((z, g)) = self.right {
            v += self.rho * z[j] - g[j];
        }
        v
    }

    /// The local objective: loss, penalty, zero-sum augmentation and the
    /// augmented consensus terms with both neighbours held fixed.
    pub fn objective(&self, zeta: ArrayView1<'_, f64>) -> f64 {
        let cz = self.constraint.dot(&zeta);
        let mut f = self.stats.loss(zeta)
            + self.lambda * weighted_l1(self.weights, zeta)
            + self.mu * cz
            + 0.5 * self.rho * cz * cz;
        if let Some((z, g)) = self.left {
            let diff = &z - &zeta;
            f += g.dot(&diff) + 0.5 * self.rho * diff.dot(&diff);
        }
        if let Some((z, g)) = self.right {
            let diff = &zeta - &z;
            f += g.dot(&diff) + 0.5 * self.rho * diff.dot(&diff);
        }
        f
    }
}

fn weighted_l1(weights: ArrayView1<'_, f64>, zeta: ArrayView1<'_, f64>) -> f64 {
    weights.iter().zip(zeta.iter()).map(|(w, z)| w * z.abs()).sum()
}

/// `(1/n_k)π_j'(y_k - Σ_{m≠j} ζ_m π_m) - μ_k c_j - ρ c_j Σ_{m≠j} c_m ζ_m`.
pub fn compute_a(
    stats: &ShardStats,
    constraint: ArrayView1<'_, f64>,
    mu: f64,
    rho: f64,
    zeta: ArrayView1<'_, f64>,
    j: usize,
) -> f64 {
    let gz = stats.gram.row(j).dot(&zeta) - stats.gram[[j, j]] * zeta[j];
    let cz = constraint.dot(&zeta) - constraint[j] * zeta[j];
    a_from_parts(stats, constraint, mu, rho, gz, cz, j)
}

#[inline]
fn a_from_parts(
    stats: &ShardStats,
    constraint: ArrayView1<'_, f64>,
    mu: f64,
    rho: f64,
    gram_others: f64,
    c_others: f64,
    j: usize,
) -> f64 {
    let cj = constraint[j];
    stats.xty[j] - gram_others - mu * cj - rho * cj * c_others
}

/// Exact minimizer of [`LocalProblem::objective`] over coordinate `j`.
pub fn coordinate_update(problem: &LocalProblem<'_>, zeta: ArrayView1<'_, f64>, j: usize) -> f64 {
    let a = compute_a(problem.stats, problem.constraint, problem.mu, problem.rho, zeta, j);
    finish_coordinate(problem, a, j)
}

#[inline]
fn finish_coordinate(problem: &LocalProblem<'_>, a: f64, j: usize) -> f64 {
    let cj = problem.constraint[j];
    let denom = problem.rho * (problem.neighbor_count() + cj * cj) + problem.stats.gram[[j, j]];
    if denom <= 0.0 {
        return 0.0;
    }
    soft_threshold(
        a + problem.consensus_pull(j),
        problem.lambda * problem.weights[j],
    ) / denom
}

/// Gauss–Seidel sweeps in ascending coordinate order from `start`.
pub fn machine_cd(
    problem: &LocalProblem<'_>,
    start: ArrayView1<'_, f64>,
    max_sweeps: usize,
    cd_tol: f64,
) -> (Array1<f64>, usize) {
    let stats = problem.stats;
    let c = problem.constraint;
    let mut zeta = start.to_owned();
    // Running G·ζ and C'ζ, patched after every coordinate change.
    let mut gz = stats.gram.dot(&zeta);
    let mut cz = c.dot(&zeta);
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..zeta.len() {
            let old = zeta[j];
            let gram_others = gz[j] - stats.gram[[j, j]] * old;
            let c_others = cz - c[j] * old;
            let a = a_from_parts(stats, c, problem.mu, problem.rho, gram_others, c_others, j);
            let new = finish_coordinate(problem, a, j);
            let delta = new - old;
            if delta != 0.0 {
                zeta[j] = new;
                Zip::from(&mut gz)
                    .and(stats.gram.column(j))
                    .for_each(|g, &col| *g += col * delta);
                cz = c_others + c[j] * new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change <= cd_tol {
            break;
        }
    }
    (zeta, sweeps)
}

/// Head-group update: neighbours passed in must be from the previous round.
pub fn head_cd_update(problem: &LocalProblem<'_>, current: ArrayView1<'_, f64>, config: &SolverConfig) -> (Array1<f64>, usize) {
    machine_cd(problem, current, config.sweeps, config.cd_tol)
}

/// Tail-group update: neighbours passed in must be the fresh head values.
pub fn tail_cd_update(problem: &LocalProblem<'_>, current: ArrayView1<'_, f64>, config: &SolverConfig) -> (Array1<f64>, usize) {
    machine_cd(problem, current, config.sweeps, config.cd_tol)
}

/// `μ_k += ρC'ζ_k` and, when the machine has a right edge, `γ_k += ρ(ζ_k - ζ_{k+1})`.
pub fn dual_update(
    state: &MachineState,
    right_zeta: Option<ArrayView1<'_, f64>>,
    constraint: ArrayView1<'_, f64>,
    rho: f64,
) -> MachineState {
    let mu = state.mu + rho * constraint.dot(&state.zeta);
    let gamma = match (&state.gamma, right_zeta) {
        (Some(g), Some(z)) => {
            let mut g = g.clone();
            Zip::from(&mut g)
                .and(&state.zeta)
                .and(z)
                .for_each(|g, &a, &b| *g += rho * (a - b));
            Some(g)
        }
        (g, _) => g.clone(),
    };
    MachineState {
        zeta: state.zeta.clone(),
        mu,
        gamma,
    }
}

/// Primal and dual residuals of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// `C'ζ_k` per machine.
    pub g: Vec<f64>,
    /// `ζ_k - ζ_{k+1}` per edge.
    pub r: Vec<Array1<f64>>,
    /// Dual residual per head machine, in head order.
    pub s: Vec<Array1<f64>>,
    pub objective_gap: Option<f64>,
}

fn norm2(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn norm_inf(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl ResidualReport {
    pub fn r_norms(&self) -> Vec<f64> {
        self.r.iter().map(norm2).collect()
    }

    pub fn s_norms(&self) -> Vec<f64> {
        self.s.iter().map(norm2).collect()
    }

    pub fn max_g(&self) -> f64 {
        self.g.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_r_inf(&self) -> f64 {
        self.r.iter().map(norm_inf).fold(0.0, f64::max)
    }

    pub fn max_s_inf(&self) -> f64 {
        self.s.iter().map(norm_inf).fold(0.0, f64::max)
    }
}

/// Residuals of `current` given the previous round's primal values.
pub fn residuals(
    previous: &[MachineState],
    current: &[MachineState],
    constraint: ArrayView1<'_, f64>,
    rho: f64,
) -> Result<ResidualReport> {
    if previous.len() != current.len() {
        return Err(Error::Shape("round snapshots differ in machine count".into()));
    }
    let topology = ChainTopology::new(current.len())?;
    let g = current.iter().map(|s| constraint.dot(&s.zeta)).collect();
    let r = current
        .windows(2)
        .map(|w| &w[0].zeta - &w[1].zeta)
        .collect();
    let s = topology
        .heads()
        .map(|k| {
            let (left, right) = topology.neighbors(k);
            let mut s = Array1::zeros(current[k].zeta.len());
            for m in [left, right].into_iter().flatten() {
                s += &((&current[m].zeta - &previous[m].zeta) * rho);
            }
            s
        })
        .collect();
    Ok(ResidualReport {
        g,
        r,
        s,
        objective_gap: None,
    })
}

/// `Σ_k [(1/2n_k)||y_k - Π_kζ_k||² + λ||ω_k∘ζ_k||₁]`.
pub fn chain_objective(
    data: &ShardedDataset,
    lambda: f64,
    weights: &[Array1<f64>],
    zetas: &[ArrayView1<'_, f64>],
) -> f64 {
    data.shards()
        .iter()
        .zip(weights)
        .zip(zetas)
        .map(|((shard, w), z)| shard.stats().loss(*z) + lambda * weighted_l1(w.view(), *z))
        .sum()
}

/// Optimality gap and the two bounds that sandwich it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapBounds {
    pub lower: f64,
    pub gap: f64,
    pub upper: f64,
}

impl GapBounds {
    pub fn holds(&self, slack: f64) -> bool {
        self.lower - slack <= self.gap && self.gap <= self.upper + slack
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Lower and upper bounds on `Σ_k Q_k(ζ_k) - Σ_k Q_k(ζ*)`, where the
/// reference is a converged saddle point with its duals.
pub fn lemma1_gap_bounds(
    data: &ShardedDataset,
    lambda: f64,
    weights: &[Array1<f64>],
    states: &[MachineState],
    report: &ResidualReport,
    reference: Option<&[MachineState]>,
) -> Result<GapBounds> {
    let reference = reference
        .ok_or_else(|| Error::Usage("gap bounds need a reference optimum".into()))?;
    if reference.len() != states.len() || weights.len() != states.len() {
        return Err(Error::Shape("reference and current chain differ in length".into()));
    }
    let topology = ChainTopology::new(states.len())?;
    let current: Vec<_> = states.iter().map(|s| s.zeta.view()).collect();
    let optimum: Vec<_> = reference.iter().map(|s| s.zeta.view()).collect();
    let gap = chain_objective(data, lambda, weights, &current)
        - chain_objective(data, lambda, weights, &optimum);

    let mut lower = 0.0;
    let mut upper = 0.0;
    for (k, g) in report.g.iter().enumerate() {
        lower -= reference[k].mu * g;
        upper -= states[k].mu * g;
    }
    for (k, r) in report.r.iter().enumerate() {
        let gamma_ref = reference[k].gamma.as_ref().expect("edge dual");
        let gamma = states[k].gamma.as_ref().expect("edge dual");
        lower -= gamma_ref.dot(r);
        upper -= gamma.dot(r);
    }
    for (s, k) in report.s.iter().zip(topology.heads()) {
        upper += s.dot(&(&reference[k].zeta - &states[k].zeta));
    }
    Ok(GapBounds { lower, gap, upper })
}

/// Largest violation of `0 ∈ ∇loss_k(ζ_k) + λω∘∂|ζ_k| + μ_kC - γ_{k-1} + γ_k + extra`
/// over coordinates. `extra` carries a head's dual residual.
pub fn subgradient_residual(
    stats: &ShardStats,
    constraint: ArrayView1<'_, f64>,
    lambda: f64,
    weights: ArrayView1<'_, f64>,
    state: &MachineState,
    left_gamma: Option<ArrayView1<'_, f64>>,
    extra: Option<ArrayView1<'_, f64>>,
) -> f64 {
    let mut v = stats.gradient(state.zeta.view());
    v.scaled_add(state.mu, &constraint);
    if let Some(g) = left_gamma {
        v -= &g;
    }
    if let Some(g) = &state.gamma {
        v += g;
    }
    if let Some(e) = extra {
        v += &e;
    }
    coordinate_violation(v.view(), state.zeta.view(), lambda, weights)
}

/// `max_j dist(-v_j, λω_j∂|ζ_j|)`.
pub fn coordinate_violation(
    v: ArrayView1<'_, f64>,
    zeta: ArrayView1<'_, f64>,
    lambda: f64,
    weights: ArrayView1<'_, f64>,
) -> f64 {
    v.iter()
        .zip(zeta.iter())
        .zip(weights.iter())
        .map(|((&vj, &zj), &w)| {
            let t = lambda * w;
            if zj > 0.0 {
                (vj + t).abs()
            } else if zj < 0.0 {
                (vj - t).abs()
            } else {
                (vj.abs() - t).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Round-by-round driver for the chain.
pub struct ChainEngine<'a> {
    data: &'a ShardedDataset,
    topology: ChainTopology,
    lambda: f64,
    weights: Vec<Array1<f64>>,
    config: &'a SolverConfig,
    states: Vec<MachineState>,
    previous: Vec<MachineState>,
    report: Option<ResidualReport>,
    round: usize,
    sweeps: usize,
    messages: u64,
    scalars: u64,
}

impl<'a> ChainEngine<'a> {
    pub fn new(
        data: &'a ShardedDataset,
        penalty: &PenaltySpec,
        config: &'a SolverConfig,
        warm: Option<&[MachineState]>,
    ) -> Result<Self> {
        config.validate()?;
        let topology = ChainTopology::new(data.machine_count())?;
        let k = topology.machine_count();
        let d = data.d();
        let states = match warm {
            Some(w)
                if w.len() == k
                    && w.iter().enumerate().all(|(i, s)| {
                        s.zeta.len() == d
                            && s.gamma.as_ref().map(|g| g.len()) == (i + 1 < k).then_some(d)
                    }) =>
            {
                w.to_vec()
            }
            _ => chain_zeros(k, d),
        };
        Ok(Self {
            data,
            topology,
            lambda: penalty.lambda,
            weights: vec![penalty.weights.clone(); k],
            config,
            previous: states.clone(),
            states,
            report: None,
            round: 0,
            sweeps: 0,
            messages: 0,
            scalars: 0,
        })
    }

    /// Give every machine its own weight vector instead of the broadcast one.
    pub fn with_machine_weights(mut self, weights: Vec<Array1<f64>>) -> Result<Self> {
        if weights.len() != self.topology.machine_count()
            || weights.iter().any(|w| w.len() != self.data.d())
        {
            return Err(Error::Shape("one weight vector of length d per machine is required".into()));
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn topology(&self) -> ChainTopology {
        self.topology
    }

    pub fn states(&self) -> &[MachineState] {
        &self.states
    }

    pub fn weights(&self) -> &[Array1<f64>] {
        &self.weights
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Residuals of the latest round.
    pub fn report(&self) -> Option<&ResidualReport> {
        self.report.as_ref()
    }

    pub fn objective(&self) -> f64 {
        let zetas: Vec<_> = self.states.iter().map(|s| s.zeta.view()).collect();
        chain_objective(self.data, self.lambda, &self.weights, &zetas)
    }

    fn problem<'s>(&'s self, k: usize, snapshot: &'s [MachineState]) -> LocalProblem<'s> {
        let (left, right) = self.topology.neighbors(k);
        LocalProblem {
            stats: self.data.shard(k).stats(),
            constraint: self.data.constraint(),
            weights: self.weights[k].view(),
            lambda: self.lambda,
            rho: self.config.rho,
            mu: snapshot[k].mu,
            left: left.map(|m| {
                (
                    snapshot[m].zeta.view(),
                    snapshot[m].gamma.as_ref().expect("left edge dual").view(),
                )
            }),
            right: right.map(|m| {
                (
                    snapshot[m].zeta.view(),
                    snapshot[k].gamma.as_ref().expect("right edge dual").view(),
                )
            }),
        }
    }

    fn update_group(&self, group: &[usize], snapshot: &[MachineState]) -> Vec<(Array1<f64>, usize)> {
        group
            .par_iter()
            .map(|&k| {
                let problem = self.problem(k, snapshot);
                machine_cd(&problem, snapshot[k].zeta.view(), self.config.sweeps, self.config.cd_tol)
            })
            .collect()
    }

    /// Violation of each tail machine's optimality condition at the current duals.
    pub fn tail_residuals(&self) -> Vec<f64> {
        self.topology
            .tails()
            .map(|k| {
                subgradient_residual(
                    self.data.shard(k).stats(),
                    self.data.constraint(),
                    self.lambda,
                    self.weights[k].view(),
                    &self.states[k],
                    self.states[k - 1].gamma.as_ref().map(|g| g.view()),
                    None,
                )
            })
            .collect()
    }

    /// Violation of each head machine's optimality condition once its dual
    /// residual `s_k` is added back in.
    pub fn head_residuals(&self) -> Vec<f64> {
        let Some(report) = &self.report else {
            return Vec::new();
        };
        self.topology
            .heads()
            .zip(&report.s)
            .map(|(k, s)| {
                subgradient_residual(
                    self.data.shard(k).stats(),
                    self.data.constraint(),
                    self.lambda,
                    self.weights[k].view(),
                    &self.states[k],
                    k.checked_sub(1).and_then(|m| self.states[m].gamma.as_ref()).map(|g| g.view()),
                    Some(s.view()),
                )
            })
            .collect()
    }

    pub fn gap_bounds(&self, reference: &[MachineState]) -> Result<GapBounds> {
        let report = self
            .report
            .as_ref()
            .ok_or_else(|| Error::Usage("no round has been run yet".into()))?;
        lemma1_gap_bounds(self.data, self.lambda, &self.weights, &self.states, report, Some(reference))
    }

    pub fn step(&mut self) -> Result<RoundRecord> {
        let k_total = self.topology.machine_count();
        let d = self.data.d();
        let rho = self.config.rho;
        let heads: Vec<usize> = self.topology.heads().collect();
        let tails: Vec<usize> = self.topology.tails().collect();
        let start = self.states.clone();

        // Heads read only the round-l snapshot.
        let mut sweeps = 0;
        let mut working = start.clone();
        for (&k, (z, b)) in heads.iter().zip(self.update_group(&heads, &start)) {
            working[k].zeta = z;
            sweeps += b;
        }
        // Tails read fresh head estimates; duals are still at round l.
        let after_heads = working.clone();
        for (&k, (z, b)) in tails.iter().zip(self.update_group(&tails, &after_heads)) {
            working[k].zeta = z;
            sweeps += b;
        }

        let constraint = self.data.constraint();
        let next: Vec<MachineState> = (0..k_total)
            .into_par_iter()
            .map(|k| {
                let right = (k + 1 < k_total).then(|| working[k + 1].zeta.view());
                dual_update(&working[k], right, constraint, rho)
            })
            .collect();

        for s in &next {
            if s.zeta.iter().any(|v| !v.is_finite()) || !s.mu.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite iterate at round {}",
                    self.round + 1
                )));
            }
        }

        let report = residuals(&start, &next, constraint, rho)?;
        self.previous = start;
        self.states = next;
        self.round += 1;
        self.sweeps += sweeps;
        let edges = self.topology.edge_count() as u64;
        self.messages += 2 * edges;
        self.scalars += 2 * edges * d as u64;

        let record = RoundRecord {
            round: self.round,
            objective: self.objective(),
            max_consensus: report.max_r_inf(),
            max_zero_sum: report.max_g(),
            max_dual: report.max_s_inf(),
            sweeps,
            messages: self.messages,
            scalars: self.scalars,
            consensus: report.r_norms(),
            zero_sum: report.g.clone(),
            dual: report.s_norms(),
        };
        self.report = Some(report);
        Ok(record)
    }

    /// The reported estimate.
    pub fn output(&self, which: ChainOutput) -> Array1<f64> {
        match which {
            ChainOutput::Last => self.states.last().expect("K >= 2").zeta.clone(),
            ChainOutput::Average => {
                let mut sum = Array1::zeros(self.data.d());
                for s in &self.states {
                    sum += &s.zeta;
                }
                sum / self.states.len() as f64
            }
        }
    }

    pub fn run(mut self, method: &'static str) -> Result<FitResult> {
        let mut trace = Vec::with_capacity(self.config.rounds.min(4096));
        let mut converged = false;
        for _ in 0..self.config.rounds {
            let record = self.step()?;
            converged = record.within(self.config.outer_tol);
            trace.push(record);
            if converged {
                break;
            }
        }
        if !converged {
            log::debug!("{method}: outer tolerance not met after {} rounds", self.round);
        }
        let estimate = Coefficients::new(self.output(self.config.chain_output), self.data.p());
        Ok(FitResult {
            method,
            estimate,
            machine_estimates: self.states.iter().map(|s| s.zeta.clone()).collect(),
            trace,
            rounds: self.round,
            sweeps: self.sweeps,
            converged,
            messages: self.messages,
            scalars: self.scalars,
            zero_tolerance: 0.0,
            weights: self.weights[0].clone(),
            lla_steps: 1,
            state: SolverState::Chain(self.states),
        })
    }
}

/// Run the chain solver to completion.
pub fn fit_dsgcdmm(
    data: &ShardedDataset,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<FitResult> {
    Dsgcdmm.fit(data, penalty, config)
}

/// A tightly converged chain solution with its duals, for use as the
/// reference point of the gap bounds.
pub fn reference_optimum(
    data: &ShardedDataset,
    penalty: &PenaltySpec,
    config: &SolverConfig,
) -> Result<Vec<MachineState>> {
    let tight = SolverConfig {
        rounds: config.rounds.max(10_000),
        outer_tol: 1e-12,
        cd_tol: config.cd_tol.min(1e-14),
        sweeps: config.sweeps.max(10_000),
        ..config.clone()
    };
    let mut engine = ChainEngine::new(data, penalty, &tight, None)?;
    for _ in 0..tight.rounds {
        if engine.step()?.within(tight.outer_tol) {
            break;
        }
    }
    Ok(engine.states)
}

/// Decentralized group coordinate descent method of multipliers on a chain.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dsgcdmm;

impl Solver for Dsgcdmm {
    fn name(&self) -> &'static str {
        "dsgcdmm"
    }

    fn tag(&self) -> &'static str {
        "DSGC"
    }

    fn description(&self) -> &'static str {
        "decentralized chain ADMM with head/tail groups"
    }

    fn check(&self, data: &ShardedDataset) -> Result<()> {
        ChainTopology::new(data.machine_count()).map(|_| ())
    }

    fn solve(
        &self,
        data: &ShardedDataset,
        penalty: &PenaltySpec,
        config: &SolverConfig,
        warm: Option<&SolverState>,
    ) -> Result<FitResult> {
        let warm = match warm {
            Some(SolverState::Chain(s)) => Some(s.as_slice()),
            _ => None,
        };
        ChainEngine::new(data, penalty, config, warm)?.run(self.name())
    }
}
