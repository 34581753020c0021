//! Simulated compositional designs.
//!
//! Log-compositions are drawn from `N_p(ν, Σ)` with `ν_j = log(0.2p)` for
//! the first five components and `Σ_ij = σ^|i-j|`, then mapped to the simplex
//! by a row softmax. The extra covariates are heavy-tailed (multivariate t
//! with 3 degrees of freedom) or right-skewed (multivariate lognormal).

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::compositional::{build_design, Coefficients, CompositionMatrix, LogContrastDesign};
use crate::error::{Error, Result};

pub const DEFAULT_BETA: [f64; 8] = [1.0, -0.8, 0.6, 0.0, 0.0, -1.5, -0.5, 1.2];
pub const DEFAULT_THETA: [f64; 8] = [0.7, -1.5, 1.0, 0.0, 0.0, 0.0, -0.8, 2.3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovariateCase {
    /// Multivariate t₃ with scale `Ξ_ij = 0.5^{I(i≠j)}`.
    #[default]
    HeavyTailed,
    /// `exp` of `N_q(0, Ξ)` with `Ξ_ij = 0.5^|i-j|`.
    RightSkewed,
}

impl CovariateCase {
    pub fn number(self) -> u8 {
        match self {
            Self::HeavyTailed => 1,
            Self::RightSkewed => 2,
        }
    }
}

impl fmt::Display for CovariateCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for CovariateCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "t3" | "heavy_tailed" => Ok(Self::HeavyTailed),
            "2" | "lognormal" | "right_skewed" => Ok(Self::RightSkewed),
            other => Err(Error::Usage(format!("unknown covariate case '{other}' (expected 1 or 2)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub sigma: f64,
    pub case: CovariateCase,
    pub noise_sd: f64,
    pub seed: u64,
    pub center: bool,
    /// Custom truth; `None` pads the default coefficients with zeros.
    pub true_zeta: Option<Vec<f64>>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            p: 15,
            q: 10,
            sigma: 0.2,
            case: CovariateCase::HeavyTailed,
            noise_sd: 0.2,
            seed: 0,
            center: true,
            true_zeta: None,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p < 2 {
            return Err(Error::Parameter(format!(
                "need n >= 1 and p >= 2, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma < 1.0) {
            return Err(Error::Parameter(format!("sigma = {} must lie in [0, 1)", self.sigma)));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Parameter("noise sd must be >= 0".into()));
        }
        match &self.true_zeta {
            None if self.p < DEFAULT_BETA.len() || self.q < DEFAULT_THETA.len() => {
                Err(Error::Parameter(format!(
                    "default coefficients need p >= 8 and q >= 8, got p = {}, q = {}",
                    self.p, self.q
                )))
            }
            Some(z) if z.len() != self.p + self.q => Err(Error::Parameter(format!(
                "true coefficients have {} entries, expected {}",
                z.len(),
                self.p + self.q
            ))),
            _ => Ok(()),
        }
    }

    pub fn truth(&self) -> Result<Coefficients> {
        self.validate()?;
        let zeta = match &self.true_zeta {
            Some(z) => Array1::from(z.clone()),
            None => {
                let mut z = Array1::zeros(self.p + self.q);
                for (j, b) in DEFAULT_BETA.iter().enumerate() {
                    z[j] = *b;
                }
                for (j, t) in DEFAULT_THETA.iter().enumerate() {
                    z[self.p + j] = *t;
                }
                z
            }
        };
        Ok(Coefficients::new(zeta, self.p))
    }

    /// Mean of the log-composition draw.
    pub fn nu(&self) -> Array1<f64> {
        let top = (0.2 * self.p as f64).ln();
        Array1::from_iter((0..self.p).map(|j| if j < 5 { top } else { 0.0 }))
    }
}

/// Everything drawn for one simulated dataset.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub x: CompositionMatrix,
    pub v: Array2<f64>,
    /// Response on the original scale.
    pub y: Array1<f64>,
    pub truth: Coefficients,
    pub design: LogContrastDesign,
}

fn cholesky_lower(dim: usize, entry: impl Fn(usize, usize) -> f64) -> Result<DMatrix<f64>> {
    DMatrix::from_fn(dim, dim, entry)
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))
}

fn correlated_row(rng: &mut ChaCha8Rng, lower: &DMatrix<f64>) -> Vec<f64> {
    let dim = lower.nrows();
    let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    (0..dim)
        .map(|i| (0..=i).map(|j| lower[(i, j)] * z[j]).sum())
        .collect()
}

/// Draw a dataset. Bitwise reproducible for a fixed spec.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let truth = spec.truth()?;
    let (n, p, q) = (spec.n, spec.p, spec.q);
    let sigma = spec.sigma;
    let comp_chol = cholesky_lower(p, |i, j| sigma.powi(i.abs_diff(j) as i32))?;
    let cov_chol = match spec.case {
        CovariateCase::HeavyTailed => cholesky_lower(q, |i, j| if i == j { 1.0 } else { 0.5 })?,
        CovariateCase::RightSkewed => cholesky_lower(q, |i, j| 0.5f64.powi(i.abs_diff(j) as i32))?,
    };
    let nu = spec.nu();
    let chi = ChiSquared::<f64>::new(3.0).expect("valid degrees of freedom");

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Array2::zeros((n, p));
    let mut v = Array2::zeros((n, q));
    let mut noise = Array1::zeros(n);
    for i in 0..n {
        let delta = correlated_row(&mut rng, &comp_chol);
        let logits: Vec<f64> = delta.iter().zip(nu.iter()).map(|(d, m)| d + m).collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expd: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
        let total: f64 = expd.iter().sum();
        for j in 0..p {
            x[[i, j]] = expd[j] / total;
        }

        let w = if q > 0 { correlated_row(&mut rng, &cov_chol) } else { Vec::new() };
        match spec.case {
            CovariateCase::HeavyTailed => {
                let scale = if q > 0 { (3.0 / chi.sample(&mut rng)).sqrt() } else { 1.0 };
                for j in 0..q {
                    v[[i, j]] = w[j] * scale;
                }
            }
            CovariateCase::RightSkewed => {
                for j in 0..q {
                    v[[i, j]] = w[j].exp();
                }
            }
        }
        let e: f64 = rng.sample(StandardNormal);
        noise[i] = spec.noise_sd * e;
    }

    let x = CompositionMatrix::new(x)?;
    let raw = build_design(&x, v.view(), Array1::zeros(n).view(), false)?;
    let y = raw.pi().dot(&truth.zeta()) + &noise;
    let design = build_design(&x, v.view(), y.view(), spec.center)?;
    Ok(SyntheticData {
        x,
        v,
        y,
        truth,
        design,
    })
}

/// Independent seed for replication `rep` of a run seeded with `master`.
pub fn replication_seed(master: u64, rep: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(rep))
}
