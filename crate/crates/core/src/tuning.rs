//! Regularization path on the first shard and GIC-based choice of λ.

use ndarray::Array1;

use crate::baseline::Gcdmm;
use crate::compositional::{Coefficients, Shard, ShardedDataset};
use crate::error::{Error, Result};
use crate::penalty::{penalty_weights, PenaltyKind, PenaltySpec, DEFAULT_SCAD_A};
use crate::solver::{fit_with_warm_start, Solver, SolverConfig, SolverState};

pub const DEFAULT_GRID_SIZE: usize = 50;

/// Increasing, geometrically spaced penalty levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    pub values: Vec<f64>,
    /// Log-step between neighbours (0 for a single value).
    pub delta: f64,
    /// Set when the data-driven upper end fell below the lower end.
    pub degenerate: bool,
}

impl LambdaGrid {
    pub fn geometric(min: f64, max: f64, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::Parameter(format!("grid size S = {size} must be >= 2")));
        }
        if !(min > 0.0) || !(max > min) || !max.is_finite() {
            return Err(Error::Parameter(format!(
                "grid needs 0 < lambda_min < lambda_max, got {min} and {max}"
            )));
        }
        let delta = (max.ln() - min.ln()) / (size - 1) as f64;
        let mut values: Vec<f64> = (0..size).map(|s| min * (delta * s as f64).exp()).collect();
        values[size - 1] = max;
        Ok(Self {
            values,
            delta,
            degenerate: false,
        })
    }

    /// An explicit list of levels, sorted ascending.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Parameter("grid values must be finite and >= 0".into()));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        let delta = match values.as_slice() {
            [a, b, ..] if *a > 0.0 => b.ln() - a.ln(),
            _ => 0.0,
        };
        Ok(Self {
            values,
            delta,
            degenerate: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("nonempty grid")
    }

    /// The middle grid point.
    pub fn mid(&self) -> f64 {
        self.values[self.values.len() / 2]
    }
}

/// Upper end of the grid from the compositional columns of the shard.
pub fn lambda_max(shard: &Shard, p: usize) -> f64 {
    let n = shard.n() as f64;
    let y = shard.y();
    let y_norm = y.dot(&y).sqrt();
    let pi = shard.pi();
    let mut plain: f64 = 0.0;
    let mut scaled: f64 = 0.0;
    for j in 0..p {
        let ip = pi.column(j).dot(&y);
        plain = plain.max((2.0 * ip / n).abs());
        if y_norm > 0.0 {
            scaled = scaled.max((2.0 * ip / (n.sqrt() * y_norm)).abs());
        }
    }
    plain.min(scaled)
}

/// `λ_min = 1/n_1` up to the data-driven `λ_max`, in `size` steps.
pub fn lambda_grid(shard: &Shard, p: usize, size: usize) -> Result<LambdaGrid> {
    let min = 1.0 / shard.n() as f64;
    let mut max = lambda_max(shard, p);
    let degenerate = !(max > min);
    if degenerate {
        log::warn!("lambda_max = {max:e} does not exceed lambda_min = {min:e}; using 2*lambda_min");
        max = 2.0 * min;
    }
    let mut grid = LambdaGrid::geometric(min, max, size)?;
    grid.degenerate = degenerate;
    Ok(grid)
}

/// Plain GIC arithmetic: `log(rss/n) + (df - 1)·(log log n / n)·log(max(d, n))`.
pub fn gic_value(rss: f64, n: usize, d: usize, df: usize) -> f64 {
    let nf = n as f64;
    let df = df.max(2) as f64;
    (rss / nf).ln() + (df - 1.0) * (nf.ln().ln() / nf) * (d.max(n) as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gic {
    pub value: f64,
    pub rss: f64,
    pub df: usize,
    /// RSS was zero, so `value` is `-∞`.
    pub degenerate: bool,
}

/// GIC of `estimate` on `shard`; entries with `|ζ_j| <= zero_tolerance`
/// count as zero.
pub fn gic(shard: &Shard, estimate: &Coefficients, zero_tolerance: f64) -> Result<Gic> {
    if estimate.len() != shard.d() {
        return Err(Error::Shape(format!(
            "estimate has {} entries, shard has {} columns",
            estimate.len(),
            shard.d()
        )));
    }
    let rss = shard.rss(estimate.zeta());
    let df = estimate.nonzero_count(zero_tolerance).max(2);
    let degenerate = rss <= 0.0;
    let value = if degenerate {
        f64::NEG_INFINITY
    } else {
        gic_value(rss, shard.n(), shard.d(), df)
    };
    Ok(Gic {
        value,
        rss,
        df,
        degenerate,
    })
}

#[derive(Debug, Clone)]
pub struct PathPoint {
    pub lambda: f64,
    pub gic: f64,
    pub df: usize,
    pub rss: f64,
    pub support: Vec<usize>,
    pub estimate: Coefficients,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub lambda: f64,
    pub index: usize,
    /// Fitted points in ascending λ order.
    pub path: Vec<PathPoint>,
    /// `(λ, error)` for grid points whose fit failed.
    pub failures: Vec<(f64, String)>,
    pub grid_degenerate: bool,
}

impl Selection {
    pub fn selected(&self) -> &PathPoint {
        &self.path[self.index]
    }
}

/// Fit `solver` along `grid` on the single-machine dataset `shard` (largest
/// λ first, warm-started) and return the GIC minimizer. Ties go to the
/// larger λ. A solver that cannot run on one machine is replaced by the
/// global solver.
pub fn select_lambda(
    shard: &ShardedDataset,
    solver: &dyn Solver,
    template: &PenaltySpec,
    config: &SolverConfig,
    grid: &LambdaGrid,
) -> Result<Selection> {
    if shard.machine_count() != 1 {
        return Err(Error::Usage("tuning runs on exactly one shard".into()));
    }
    let solver: &dyn Solver = match solver.check(shard) {
        Ok(()) => solver,
        Err(_) => &Gcdmm,
    };
    let data = shard.shard(0);

    let mut path = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    let mut warm: Option<SolverState> = None;
    for &lambda in grid.values.iter().rev() {
        let penalty = template.with_lambda(lambda);
        match fit_with_warm_start(solver, shard, &penalty, config, warm.as_ref()) {
            Ok(fit) => {
                let g = gic(data, &fit.estimate, fit.zero_tolerance)?;
                path.push(PathPoint {
                    lambda,
                    gic: g.value,
                    df: g.df,
                    rss: g.rss,
                    support: fit.support(),
                    estimate: fit.estimate,
                    degenerate: g.degenerate,
                });
                warm = Some(fit.state);
            }
            Err(e) => failures.push((lambda, e.to_string())),
        }
    }
    if path.is_empty() {
        let log: Vec<String> = failures.iter().map(|(l, e)| format!("{l:e}: {e}")).collect();
        return Err(Error::Tuning(format!("every fit failed: {}", log.join("; "))));
    }
    // Path is in descending λ; strict improvement keeps the larger λ on ties.
    let mut best = 0;
    for (i, point) in path.iter().enumerate() {
        if point.gic < path[best].gic {
            best = i;
        }
    }
    path.reverse();
    let index = path.len() - 1 - best;
    Ok(Selection {
        lambda: path[index].lambda,
        index,
        path,
        failures,
        grid_degenerate: grid.degenerate,
    })
}

/// Adaptive-LASSO weights from a GIC-tuned LASSO pilot on the first shard.
/// `n_total` is the full sample size used in the `1/n` floor.
pub fn pilot_weights(
    shard: &ShardedDataset,
    config: &SolverConfig,
    grid: &LambdaGrid,
    n_total: usize,
) -> Result<(Array1<f64>, Selection)> {
    let template = PenaltySpec::lasso(grid.max(), shard.d());
    let selection = select_lambda(shard, &Gcdmm, &template, config, grid)?;
    let weights = penalty_weights(
        PenaltyKind::AdaptiveLasso,
        Some(&selection.selected().estimate),
        shard.d(),
        n_total,
        selection.lambda,
        DEFAULT_SCAD_A,
    )?;
    Ok((weights, selection))
}

/// Penalty template for `kind`: unit weights for LASSO and SCAD, pilot-based
/// weights for adaptive LASSO.
pub fn penalty_template(
    kind: PenaltyKind,
    shard: &ShardedDataset,
    config: &SolverConfig,
    grid: &LambdaGrid,
    n_total: usize,
) -> Result<PenaltySpec> {
    let d = shard.d();
    Ok(match kind {
        PenaltyKind::Lasso => PenaltySpec::lasso(grid.max(), d),
        PenaltyKind::Scad => PenaltySpec::scad(grid.max(), d),
        PenaltyKind::AdaptiveLasso => {
            let (weights, _) = pilot_weights(shard, config, grid, n_total)?;
            PenaltySpec::new(PenaltyKind::AdaptiveLasso, grid.max(), weights)?
        }
    })
}

/// Support as a hex bitmask, bit `j` set when coordinate `j` is nonzero.
/// The most significant digit comes first.
pub fn support_hex(support: &[usize], d: usize) -> String {
    let digits = d.div_ceil(4).max(1);
    let mut nibbles = vec![0u8; digits];
    for &j in support {
        nibbles[j / 4] |= 1 << (j % 4);
    }
    nibbles
        .iter()
        .rev()
        .map(|n| char::from_digit(*n as u32, 16).expect("nibble"))
        .collect()
}

/// Inverse of [`support_hex`].
pub fn parse_support_hex(hex: &str) -> Result<Vec<usize>> {
    let mut support = Vec::new();
    for (i, ch) in hex.chars().rev().enumerate() {
        let nibble = ch
            .to_digit(16)
            .ok_or_else(|| Error::Format(format!("bad hex digit '{ch}' in support mask")))?;
        for b in 0..4 {
            if nibble & (1 << b) != 0 {
                support.push(4 * i + b);
            }
        }
    }
    Ok(support)
}
