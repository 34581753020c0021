//! Estimation error and selection counts.

use serde::{Deserialize, Serialize};

use crate::compositional::Coefficients;
use crate::error::{Error, Result};

/// False positive / negative counts, split into compositional (C) and
/// non-compositional (NC) blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub fp_c: usize,
    pub fp_nc: usize,
    pub fn_c: usize,
    pub fn_nc: usize,
}

impl SelectionCounts {
    pub fn fp(&self) -> usize {
        self.fp_c + self.fp_nc
    }

    pub fn fn_(&self) -> usize {
        self.fn_c + self.fn_nc
    }

    pub fn is_perfect(&self) -> bool {
        self.fp() == 0 && self.fn_() == 0
    }
}

/// Compare supports; `zero_tolerance` 0 means exact zeros.
pub fn selection_metrics(
    estimate: &Coefficients,
    truth: &Coefficients,
    zero_tolerance: f64,
) -> Result<SelectionCounts> {
    if estimate.len() != truth.len() || estimate.p() != truth.p() {
        return Err(Error::Shape(format!(
            "estimate ({}, p = {}) and truth ({}, p = {}) differ",
            estimate.len(),
            estimate.p(),
            truth.len(),
            truth.p()
        )));
    }
    let p = truth.p();
    let mut counts = SelectionCounts::default();
    for (j, (e, t)) in estimate.zeta().iter().zip(truth.zeta().iter()).enumerate() {
        let picked = e.abs() > zero_tolerance;
        let active = *t != 0.0;
        match (picked, active, j < p) {
            (true, false, true) => counts.fp_c += 1,
            (true, false, false) => counts.fp_nc += 1,
            (false, true, true) => counts.fn_c += 1,
            (false, true, false) => counts.fn_nc += 1,
            _ => {}
        }
    }
    Ok(counts)
}

/// `||ζ̂ - ζ0||₂`.
pub fn estimation_error(estimate: &Coefficients, truth: &Coefficients) -> f64 {
    let diff = &estimate.zeta() - &truth.zeta();
    diff.dot(&diff).sqrt()
}

/// One fit's contribution to a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub penalty: String,
    pub machines: usize,
    pub sigma: f64,
    pub rep: usize,
    pub lambda: f64,
    pub aee: f64,
    pub counts: SelectionCounts,
    pub runtime_secs: f64,
    pub rounds: usize,
    pub converged: bool,
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, stderr: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }
}
