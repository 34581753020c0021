//! Cross-validated prediction loss.

use std::fmt;
use std::str::FromStr;

use ndarray::Array1;

use crate::compositional::{partition, shard_sizes, LogContrastDesign};
use crate::error::{Error, Result};
use crate::penalty::PenaltySpec;
use crate::solver::{Solver, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QNorm {
    One,
    Two,
    Inf,
}

impl QNorm {
    pub fn norm(self, v: &Array1<f64>) -> f64 {
        match self {
            Self::One => v.iter().map(|x| x.abs()).sum(),
            Self::Two => v.dot(v).sqrt(),
            Self::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

impl fmt::Display for QNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::One => "1",
            Self::Two => "2",
            Self::Inf => "inf",
        })
    }
}

impl FromStr for QNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Self::One),
            "2" => Ok(Self::Two),
            "inf" | "Inf" | "infinity" => Ok(Self::Inf),
            other => Err(Error::Usage(format!("unknown norm '{other}' (expected 1, 2 or inf)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CvReport {
    /// Mean over folds of `||y_v - Π_vζ̂||_q / n_v`.
    pub loss: f64,
    pub fold_losses: Vec<f64>,
    /// Held-out residual vectors, one per fold.
    pub residuals: Vec<Array1<f64>>,
    pub warnings: Vec<String>,
}

/// `folds`-fold CV loss with contiguous folds. Each training set is split
/// over `machines` shards and fit with `solver`.
pub fn cv_loss(
    design: &LogContrastDesign,
    solver: &dyn Solver,
    machines: usize,
    penalty: &PenaltySpec,
    config: &SolverConfig,
    q: QNorm,
    folds: usize,
) -> Result<CvReport> {
    if folds < 2 {
        return Err(Error::Parameter(format!("folds = {folds} must be >= 2")));
    }
    let sizes = shard_sizes(design.n(), folds)?;
    let mut warnings = Vec::new();
    let mut fold_losses = Vec::with_capacity(folds);
    let mut residuals = Vec::with_capacity(folds);
    let mut start = 0;
    for (l, size) in sizes.into_iter().enumerate() {
        let end = start + size;
        if size < design.d() {
            let msg = format!("fold {l} has {size} rows, fewer than d = {}", design.d());
            log::warn!("{msg}");
            warnings.push(msg);
        }
        let train = partition(&design.without_rows(start, end), machines)?;
        let fit = solver.fit(&train, penalty, config)?;
        let test = design.rows(start, end);
        let resid = &test.y() - &test.pi().dot(&fit.estimate.zeta());
        fold_losses.push(q.norm(&resid) / size as f64);
        residuals.push(resid);
        start = end;
    }
    let loss = fold_losses.iter().sum::<f64>() / folds as f64;
    Ok(CvReport {
        loss,
        fold_losses,
        residuals,
        warnings,
    })
}
