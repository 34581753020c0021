//! Weighted L1 penalties: LASSO, adaptive LASSO and SCAD (through local
//! linear approximation).

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::compositional::Coefficients;
use crate::error::{Error, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_LLA_ROUNDS: usize = 3;

/// `sgn(u)·max(|u| - t, 0)`.
#[inline]
pub fn soft_threshold(u: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

/// Derivative of the SCAD penalty at `u >= 0`.
pub fn scad_derivative(u: f64, lambda: f64, a: f64) -> Result<f64> {
    if !(a > 2.0) {
        return Err(Error::Parameter(format!("SCAD shape a = {a} must exceed 2")));
    }
    if lambda < 0.0 {
        return Err(Error::Parameter(format!("lambda = {lambda} must be >= 0")));
    }
    let u = u.abs();
    Ok(if u <= lambda {
        lambda
    } else {
        (a * lambda - u).max(0.0) / (a - 1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PenaltyKind {
    Lasso,
    AdaptiveLasso,
    Scad,
}

impl PenaltyKind {
    pub const ALL: [PenaltyKind; 3] = [Self::Lasso, Self::AdaptiveLasso, Self::Scad];

    /// Suffix used in result tables, e.g. `DSGC-AL`.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Lasso => "L",
            Self::AdaptiveLasso => "AL",
            Self::Scad => "S",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Lasso => "lasso",
            Self::AdaptiveLasso => "alasso",
            Self::Scad => "scad",
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" | "l" => Ok(Self::Lasso),
            "alasso" | "adaptive-lasso" | "adaptive_lasso" | "al" => Ok(Self::AdaptiveLasso),
            "scad" | "s" => Ok(Self::Scad),
            other => Err(Error::Usage(format!(
                "unknown penalty '{other}' (expected lasso, alasso or scad)"
            ))),
        }
    }
}

/// Penalty `λ Σ_j ω_j |ζ_j|` plus the SCAD/LLA settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub weights: Array1<f64>,
    pub scad_a: f64,
    pub lla_rounds: usize,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, lambda: f64, weights: Array1<f64>) -> Result<Self> {
        let spec = Self {
            kind,
            lambda,
            weights,
            scad_a: DEFAULT_SCAD_A,
            lla_rounds: DEFAULT_LLA_ROUNDS,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Plain LASSO with unit weights.
    pub fn lasso(lambda: f64, d: usize) -> Self {
        Self {
            kind: PenaltyKind::Lasso,
            lambda,
            weights: Array1::ones(d),
            scad_a: DEFAULT_SCAD_A,
            lla_rounds: DEFAULT_LLA_ROUNDS,
        }
    }

    /// SCAD, solved by LLA starting from unit weights.
    pub fn scad(lambda: f64, d: usize) -> Self {
        Self {
            kind: PenaltyKind::Scad,
            ..Self::lasso(lambda, d)
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn with_weights(&self, weights: Array1<f64>) -> Self {
        Self {
            weights,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Parameter(format!(
                "lambda = {} must be finite and >= 0",
                self.lambda
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Parameter("penalty weights must be >= 0".into()));
        }
        if !(self.scad_a > 2.0) {
            return Err(Error::Parameter(format!(
                "SCAD shape a = {} must exceed 2",
                self.scad_a
            )));
        }
        if self.lla_rounds == 0 {
            return Err(Error::Parameter("lla_rounds must be >= 1".into()));
        }
        Ok(())
    }

    /// `λ Σ ω_j |ζ_j|`.
    pub fn value(&self, zeta: ArrayView1<'_, f64>) -> f64 {
        self.lambda
            * self
                .weights
                .iter()
                .zip(zeta.iter())
                .map(|(w, z)| w * z.abs())
                .sum::<f64>()
    }
}

/// Weight vector for `kind`.
///
/// LASSO ignores `reference`. Adaptive LASSO uses `(|ζ̃_j| + 1/n)^{-1}` from a
/// pilot estimate; SCAD uses `p'_λ(|ζ̄_j|)/λ` from the current LLA iterate.
pub fn penalty_weights(
    kind: PenaltyKind,
    reference: Option<&Coefficients>,
    d: usize,
    n: usize,
    lambda: f64,
    a: f64,
) -> Result<Array1<f64>> {
    match kind {
        PenaltyKind::Lasso => Ok(Array1::ones(d)),
        PenaltyKind::AdaptiveLasso => {
            let reference = reference.ok_or_else(|| {
                Error::Usage("adaptive LASSO weights need a pilot estimate".into())
            })?;
            check_len(reference, d)?;
            if n == 0 {
                return Err(Error::Parameter("sample size must be positive".into()));
            }
            let floor = 1.0 / n as f64;
            Ok(reference.zeta().mapv(|z| 1.0 / (z.abs() + floor)))
        }
        PenaltyKind::Scad => {
            let reference = reference
                .ok_or_else(|| Error::Usage("SCAD weights need a current iterate".into()))?;
            check_len(reference, d)?;
            if lambda == 0.0 {
                return Err(Error::Parameter(
                    "SCAD weights divide by lambda, which is zero".into(),
                ));
            }
            reference
                .zeta()
                .iter()
                .map(|z| scad_derivative(z.abs(), lambda, a).map(|v| v / lambda))
                .collect::<Result<Vec<_>>>()
                .map(Array1::from)
        }
    }
}

fn check_len(reference: &Coefficients, d: usize) -> Result<()> {
    if reference.len() != d {
        return Err(Error::Shape(format!(
            "reference has {} entries, expected {d}",
            reference.len()
        )));
    }
    Ok(())
}
