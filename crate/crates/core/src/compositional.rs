//! Data model for log-contrast regression with compositional and
//! non-compositional covariates.
//!
//! A design stacks the elementwise log of a composition matrix `X` (the
//! `p` compositional columns) next to `q` ordinary covariates `V`. The
//! coefficient vector is constrained by `C·ζ = 0`, where `C` has ones on the
//! compositional block and zeros elsewhere.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on `|row sum - 1|` for a composition row.
pub const SIMPLEX_TOLERANCE: f64 = 1e-8;

/// Post-hoc zero threshold for estimators that never produce exact zeros.
pub const ZERO_EPSILON: f64 = 1e-8;

/// Rows of strictly positive proportions, each summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionMatrix {
    values: Array2<f64>,
}

impl CompositionMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        Self::with_tolerance(values, SIMPLEX_TOLERANCE)
    }

    pub fn with_tolerance(values: Array2<f64>, tolerance: f64) -> Result<Self> {
        for (row, r) in values.outer_iter().enumerate() {
            for (col, &value) in r.iter().enumerate() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Error::Domain { row, col, value });
                }
            }
            let sum = r.sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::Simplex {
                    row,
                    sum,
                    tolerance,
                });
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }
}

/// Column means removed by centering, kept so predictions can be mapped back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centering {
    pub y_mean: f64,
    pub column_means: Vec<f64>,
}

/// Response plus the stacked design `Π = (log X, V)` and constraint vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LogContrastDesign {
    y: Array1<f64>,
    pi: Array2<f64>,
    p: usize,
    q: usize,
    constraint: Array1<f64>,
    centering: Option<Centering>,
}

impl LogContrastDesign {
    /// Assemble a design from an already log-transformed block. Used for
    /// subsets (folds, shards) of an existing design.
    pub fn from_parts(
        y: Array1<f64>,
        pi: Array2<f64>,
        p: usize,
        centering: Option<Centering>,
    ) -> Result<Self> {
        if y.len() != pi.nrows() {
            return Err(Error::Shape(format!(
                "response has {} rows but design has {}",
                y.len(),
                pi.nrows()
            )));
        }
        if p > pi.ncols() {
            return Err(Error::Shape(format!(
                "compositional block p = {p} exceeds design width {}",
                pi.ncols()
            )));
        }
        let q = pi.ncols() - p;
        Ok(Self {
            y,
            pi,
            p,
            q,
            constraint: constraint_vector(p, q),
            centering,
        })
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn pi(&self) -> ArrayView2<'_, f64> {
        self.pi.view()
    }

    /// The log-composition block `Z`.
    pub fn z(&self) -> ArrayView2<'_, f64> {
        self.pi.slice(s![.., ..self.p])
    }

    /// The non-compositional block `V`.
    pub fn v(&self) -> ArrayView2<'_, f64> {
        self.pi.slice(s![.., self.p..])
    }

    pub fn constraint(&self) -> ArrayView1<'_, f64> {
        self.constraint.view()
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.p + self.q
    }

    pub fn centering(&self) -> Option<&Centering> {
        self.centering.as_ref()
    }

    pub fn is_centered(&self) -> bool {
        self.centering.is_some()
    }

    /// Rows `[start, end)` as a standalone design.
    pub fn rows(&self, start: usize, end: usize) -> LogContrastDesign {
        LogContrastDesign {
            y: self.y.slice(s![start..end]).to_owned(),
            pi: self.pi.slice(s![start..end, ..]).to_owned(),
            p: self.p,
            q: self.q,
            constraint: self.constraint.clone(),
            centering: self.centering.clone(),
        }
    }

    /// All rows except `[start, end)`, order preserved.
    pub fn without_rows(&self, start: usize, end: usize) -> LogContrastDesign {
        let y = concatenate(
            Axis(0),
            &[self.y.slice(s![..start]), self.y.slice(s![end..])],
        )
        .expect("matching widths");
        let pi = concatenate(
            Axis(0),
            &[self.pi.slice(s![..start, ..]), self.pi.slice(s![end.., ..])],
        )
        .expect("matching widths");
        LogContrastDesign {
            y,
            pi,
            p: self.p,
            q: self.q,
            constraint: self.constraint.clone(),
            centering: self.centering.clone(),
        }
    }
}

/// `C = (1_p, 0_q)`.
pub fn constraint_vector(p: usize, q: usize) -> Array1<f64> {
    Array1::from_iter((0..p + q).map(|j| if j < p { 1.0 } else { 0.0 }))
}

/// Build `Π = (log X, V)` and `C`, optionally centering `y` and every column
/// of `Π` with means over all rows.
pub fn build_design(
    x: &CompositionMatrix,
    v: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    center: bool,
) -> Result<LogContrastDesign> {
    let n = x.nrows();
    if v.nrows() != n {
        return Err(Error::Shape(format!(
            "V has {} rows, X has {n}",
            v.nrows()
        )));
    }
    if y.len() != n {
        return Err(Error::Shape(format!("y has {} rows, X has {n}", y.len())));
    }
    let p = x.ncols();
    let z = x.values().mapv(f64::ln);
    let mut pi = concatenate(Axis(1), &[z.view(), v]).expect("row counts checked");
    let mut y = y.to_owned();

    let centering = if center && n > 0 {
        let y_mean = y.mean().unwrap_or(0.0);
        y -= y_mean;
        let means = pi.mean_axis(Axis(0)).expect("n > 0");
        pi -= &means;
        Some(Centering {
            y_mean,
            column_means: means.to_vec(),
        })
    } else {
        None
    };

    LogContrastDesign::from_parts(y, pi, p, centering)
}

/// Coefficient vector `ζ = (β, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    zeta: Array1<f64>,
    p: usize,
}

impl Coefficients {
    pub fn new(zeta: Array1<f64>, p: usize) -> Self {
        assert!(p <= zeta.len(), "compositional block longer than vector");
        Self { zeta, p }
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        Self::new(Array1::zeros(p + q), p)
    }

    pub fn zeta(&self) -> ArrayView1<'_, f64> {
        self.zeta.view()
    }

    pub fn into_inner(self) -> Array1<f64> {
        self.zeta
    }

    pub fn beta(&self) -> ArrayView1<'_, f64> {
        self.zeta.slice(s![..self.p])
    }

    pub fn theta(&self) -> ArrayView1<'_, f64> {
        self.zeta.slice(s![self.p..])
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    /// `C·ζ`, the sum of the compositional coefficients.
    pub fn zero_sum_residual(&self) -> f64 {
        self.beta().sum()
    }

    /// Indices with `|ζ_j| > tolerance` (use 0 for exact zeros).
    pub fn support(&self, tolerance: f64) -> Vec<usize> {
        self.zeta
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > tolerance)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn nonzero_count(&self, tolerance: f64) -> usize {
        self.zeta.iter().filter(|v| v.abs() > tolerance).count()
    }
}

/// Sufficient statistics of one shard: `Π'Π/n`, `Π'y/n` and `y'y/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardStats {
    pub gram: Array2<f64>,
    pub xty: Array1<f64>,
    pub yty: f64,
    pub n: usize,
}

impl ShardStats {
    pub fn from_rows(y: ArrayView1<'_, f64>, pi: ArrayView2<'_, f64>) -> Self {
        let n = y.len();
        let scale = 1.0 / n.max(1) as f64;
        let gram = pi.t().dot(&pi) * scale;
        let xty = pi.t().dot(&y) * scale;
        let yty = y.dot(&y) * scale;
        Self { gram, xty, yty, n }
    }

    /// `(1/2n)||y - Πζ||²` from the cached moments.
    pub fn loss(&self, zeta: ArrayView1<'_, f64>) -> f64 {
        let g_zeta = self.gram.dot(&zeta);
        0.5 * (self.yty - 2.0 * self.xty.dot(&zeta) + zeta.dot(&g_zeta))
    }

    /// Gradient `(1/n)Π'(Πζ - y)` of the loss.
    pub fn gradient(&self, zeta: ArrayView1<'_, f64>) -> Array1<f64> {
        self.gram.dot(&zeta) - &self.xty
    }
}

/// One machine's block of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    y: Array1<f64>,
    pi: Array2<f64>,
    stats: ShardStats,
}

impl Shard {
    pub fn new(y: Array1<f64>, pi: Array2<f64>) -> Result<Self> {
        if y.len() != pi.nrows() {
            return Err(Error::Shape(format!(
                "shard response has {} rows but design has {}",
                y.len(),
                pi.nrows()
            )));
        }
        if y.is_empty() {
            return Err(Error::Shape("empty shard".into()));
        }
        let stats = ShardStats::from_rows(y.view(), pi.view());
        Ok(Self { y, pi, stats })
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn pi(&self) -> ArrayView2<'_, f64> {
        self.pi.view()
    }

    pub fn stats(&self) -> &ShardStats {
        &self.stats
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.pi.ncols()
    }

    /// Residual sum of squares `||y - Πζ||²` from the raw rows.
    pub fn rss(&self, zeta: ArrayView1<'_, f64>) -> f64 {
        let r = &self.y - &self.pi.dot(&zeta);
        r.dot(&r)
    }
}

/// Contiguous row blocks of a design, one per machine.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardedDataset {
    shards: Vec<Shard>,
    p: usize,
    q: usize,
    constraint: Array1<f64>,
}

impl ShardedDataset {
    pub fn from_shards(shards: Vec<Shard>, p: usize) -> Result<Self> {
        let Some(first) = shards.first() else {
            return Err(Error::Parameter("at least one shard is required".into()));
        };
        let d = first.d();
        if shards.iter().any(|s| s.d() != d) {
            return Err(Error::Shape("shards disagree on column count".into()));
        }
        if p > d {
            return Err(Error::Shape(format!("p = {p} exceeds width {d}")));
        }
        Ok(Self {
            shards,
            p,
            q: d - p,
            constraint: constraint_vector(p, d - p),
        })
    }

    /// The whole design as a single shard.
    pub fn single(design: &LogContrastDesign) -> Result<Self> {
        partition(design, 1)
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn shard(&self, k: usize) -> &Shard {
        &self.shards[k]
    }

    pub fn machine_count(&self) -> usize {
        self.shards.len()
    }

    pub fn constraint(&self) -> ArrayView1<'_, f64> {
        self.constraint.view()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.p + self.q
    }

    pub fn n(&self) -> usize {
        self.shards.iter().map(Shard::n).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.shards.iter().map(Shard::n).collect()
    }

    /// Shard `k` alone, as a one-machine dataset.
    pub fn only(&self, k: usize) -> ShardedDataset {
        ShardedDataset {
            shards: vec![self.shards[k].clone()],
            p: self.p,
            q: self.q,
            constraint: self.constraint.clone(),
        }
    }

    /// Stack the shards back into one design (without centering metadata).
    pub fn reassemble(&self) -> LogContrastDesign {
        let ys: Vec<_> = self.shards.iter().map(|s| s.y.view()).collect();
        let pis: Vec<_> = self.shards.iter().map(|s| s.pi.view()).collect();
        let y = concatenate(Axis(0), &ys).expect("shards share width");
        let pi = concatenate(Axis(0), &pis).expect("shards share width");
        LogContrastDesign::from_parts(y, pi, self.p, None).expect("consistent shards")
    }
}

/// Row sizes for `n` rows over `k` machines: `⌊n/k⌋` each, remainder on the last.
pub fn shard_sizes(n: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "machine count K = {k} must satisfy 1 <= K <= n = {n}"
        )));
    }
    let base = n / k;
    let mut sizes = vec![base; k];
    sizes[k - 1] += n - base * k;
    Ok(sizes)
}

/// Split a design into `k` contiguous shards.
pub fn partition(design: &LogContrastDesign, k: usize) -> Result<ShardedDataset> {
    let sizes = shard_sizes(design.n(), k)?;
    let mut shards = Vec::with_capacity(k);
    let mut start = 0;
    for size in sizes {
        let end = start + size;
        shards.push(Shard::new(
            design.y.slice(s![start..end]).to_owned(),
            design.pi.slice(s![start..end, ..]).to_owned(),
        )?);
        start = end;
    }
    ShardedDataset::from_shards(shards, design.p)
}
