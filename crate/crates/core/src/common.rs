//! Domain types shared by both estimators and the loss-ranked subset selection
//! they are built on.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Products `α·n` within this distance of an integer are snapped to it before
/// taking the ceiling.
pub const SUBSET_SIZE_SNAP: f64 = 1e-9;

/// Lower edge of the trimming fraction for which the mean estimator carries
/// its full guarantee.
pub const MEAN_GUARANTEE_ALPHA: f64 = 4.0 / 5.0;
/// Fractions in `(2/3, 4/5)` are accepted for the mean estimator but flagged.
pub const MEAN_RELAXED_ALPHA: f64 = 2.0 / 3.0;

/// `n` samples in `d` dimensions, with generator metadata when available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    points: Matrix,
    truth_mean: Option<Vec<f64>>,
    noise_scale: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(points: Matrix) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::invalid("sample set needs n >= 1 and d >= 1"));
        }
        if !points.is_finite() {
            return Err(Error::invalid("sample set has non-finite entries"));
        }
        Ok(SampleSet {
            points,
            truth_mean: None,
            noise_scale: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        SampleSet::new(Matrix::from_rows(rows)?)
    }

    pub fn with_truth_mean(mut self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.dim() || mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("truth mean must be a finite d-vector"));
        }
        self.truth_mean = Some(mean);
        Ok(self)
    }

    /// Per-sample `√λ_max(Σ_i)`.
    pub fn with_noise_scale(mut self, scale: Vec<f64>) -> Result<Self> {
        if scale.len() != self.len() {
            return Err(Error::invalid(format!(
                "noise scale has length {}, expected {}",
                scale.len(),
                self.len()
            )));
        }
        if scale.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("noise scale entries must be finite and >= 0"));
        }
        self.noise_scale = Some(scale);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.rows() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i)
    }

    pub fn truth_mean(&self) -> Option<&[f64]> {
        self.truth_mean.as_deref()
    }

    pub fn noise_scale(&self) -> Option<&[f64]> {
        self.noise_scale.as_deref()
    }

    /// Applies `f` to every coordinate of every point, keeping metadata.
    pub fn map_points(&self, f: impl Fn(usize, f64) -> f64) -> Result<SampleSet> {
        let mut points = self.points.clone();
        for i in 0..points.rows() {
            for (j, v) in points.row_mut(i).iter_mut().enumerate() {
                *v = f(j, *v);
            }
        }
        let mut out = SampleSet::new(points)?;
        out.truth_mean = self.truth_mean.clone();
        out.noise_scale = self.noise_scale.clone();
        Ok(out)
    }

    pub fn mean_of(&self, indices: &[usize]) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        for &i in indices {
            crate::linalg::axpy(1.0, self.point(i), &mut acc);
        }
        let k = indices.len() as f64;
        acc.iter_mut().for_each(|v| *v /= k);
        acc
    }
}

/// Design `X`, response `y` and optional ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionData {
    design: Matrix,
    response: Vec<f64>,
    truth_beta: Option<Vec<f64>>,
    noise_sd: Option<Vec<f64>>,
}

impl RegressionData {
    pub fn new(design: Matrix, response: Vec<f64>) -> Result<Self> {
        if design.rows() != response.len() {
            return Err(Error::invalid(format!(
                "design has {} rows but response has {} entries",
                design.rows(),
                response.len()
            )));
        }
        if design.rows() == 0 || design.cols() == 0 {
            return Err(Error::invalid("regression data needs n >= 1 and d >= 1"));
        }
        if !design.is_finite() || response.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("regression data has non-finite entries"));
        }
        Ok(RegressionData {
            design,
            response,
            truth_beta: None,
            noise_sd: None,
        })
    }

    pub fn with_truth_beta(mut self, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != self.dim() || beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("truth beta must be a finite d-vector"));
        }
        self.truth_beta = Some(beta);
        Ok(self)
    }

    pub fn with_noise_sd(mut self, sd: Vec<f64>) -> Result<Self> {
        if sd.len() != self.len() {
            return Err(Error::invalid(format!(
                "noise sd has length {}, expected {}",
                sd.len(),
                self.len()
            )));
        }
        if sd.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("noise sd entries must be finite and >= 0"));
        }
        self.noise_sd = Some(sd);
        Ok(self)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.design.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.design.rows() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.design.cols()
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn truth_beta(&self) -> Option<&[f64]> {
        self.truth_beta.as_deref()
    }

    pub fn noise_sd(&self) -> Option<&[f64]> {
        self.noise_sd.as_deref()
    }

    /// Same design and metadata with a new response vector.
    pub fn with_response(&self, response: Vec<f64>) -> Result<RegressionData> {
        let mut out = RegressionData::new(self.design.clone(), response)?;
        out.truth_beta = self.truth_beta.clone();
        out.noise_sd = self.noise_sd.clone();
        Ok(out)
    }

    pub(crate) fn into_parts(self) -> (Matrix, Vec<f64>, Option<Vec<f64>>, Option<Vec<f64>>) {
        (self.design, self.response, self.truth_beta, self.noise_sd)
    }

    pub(crate) fn from_parts_unchecked(
        design: Matrix,
        response: Vec<f64>,
        truth_beta: Option<Vec<f64>>,
        noise_sd: Option<Vec<f64>>,
    ) -> Self {
        RegressionData {
            design,
            response,
            truth_beta,
            noise_sd,
        }
    }
}

/// How equal losses are ordered during selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Smaller original index wins.
    #[default]
    ByIndex,
}

/// Where a trimming fraction sits relative to the mean estimator's guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRegime {
    /// `α ≥ 4/5`.
    Guaranteed,
    /// `2/3 < α < 4/5`: accepted, flagged in output.
    Relaxed,
    /// `α ≤ 2/3`: runs, but no bound applies.
    Unsupported,
}

impl AlphaRegime {
    pub fn is_warning(self) -> bool {
        self != AlphaRegime::Guaranteed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimConfig {
    pub alpha: f64,
    pub iterations: usize,
    /// Movement below which a repeated subset counts as a fixed point.
    pub loss_tolerance: f64,
    pub tie_break: TieBreak,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig {
            alpha: 0.8,
            iterations: 20,
            loss_tolerance: 1e-12,
            tie_break: TieBreak::ByIndex,
        }
    }
}

impl TrimConfig {
    pub fn new(alpha: f64, iterations: usize) -> Result<Self> {
        let cfg = TrimConfig {
            alpha,
            iterations,
            ..TrimConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if !(self.loss_tolerance >= 0.0 && self.loss_tolerance.is_finite()) {
            return Err(Error::invalid("loss tolerance must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn mean_regime(&self) -> AlphaRegime {
        if self.alpha >= MEAN_GUARANTEE_ALPHA - 1e-12 {
            AlphaRegime::Guaranteed
        } else if self.alpha > MEAN_RELAXED_ALPHA {
            AlphaRegime::Relaxed
        } else {
            AlphaRegime::Unsupported
        }
    }

    /// Smallest fraction covered by the regression guarantee for a design
    /// with conditioning constant `c1`: `4c₁ / (1 + 4c₁)`.
    pub fn regression_alpha_threshold(c1: f64) -> f64 {
        4.0 * c1 / (1.0 + 4.0 * c1)
    }

    pub fn subset_size(&self, n: usize) -> usize {
        subset_size(n, self.alpha)
    }
}

/// `⌈α·n⌉`, with products within [`SUBSET_SIZE_SNAP`] of an integer snapped
/// first, clamped to `[1, n]`.
pub fn subset_size(n: usize, alpha: f64) -> usize {
    let product = alpha * n as f64;
    let nearest = product.round();
    let k = if (product - nearest).abs() <= SUBSET_SIZE_SNAP {
        nearest
    } else {
        product.ceil()
    };
    (k.max(1.0) as usize).min(n.max(1))
}

/// Sorted, duplicate-free sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Subset(Vec<usize>);

impl Subset {
    /// Sorts and validates `indices` against a universe of size `n`.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("subset has duplicate indices"));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::invalid(format!(
                    "subset index {last} out of range for n = {n}"
                )));
            }
        }
        Ok(Subset(indices))
    }

    pub(crate) fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Subset(indices)
    }

    pub fn first(k: usize) -> Self {
        Subset((0..k).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

/// Indices of the `k` smallest losses.
///
/// Ordering is by `(loss, index)`, so the result is deterministic and every
/// selected loss is `<=` every excluded one.
pub fn select_lowest_loss(losses: &[f64], k: usize, tie_break: TieBreak) -> Result<Subset> {
    let n = losses.len();
    if k > n {
        return Err(Error::invalid(format!("cannot select {k} of {n} samples")));
    }
    if losses.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("losses must be finite"));
    }
    let TieBreak::ByIndex = tie_break;
    let cmp = |a: &usize, b: &usize| -> Ordering {
        losses[*a].total_cmp(&losses[*b]).then(a.cmp(b))
    };
    let mut order: Vec<usize> = (0..n).collect();
    if k > 0 && k < n {
        order.select_nth_unstable_by(k - 1, cmp);
    }
    order.truncate(k);
    order.sort_unstable();
    Ok(Subset::from_sorted_unchecked(order))
}

/// One alternating step: the subset chosen at the incoming iterate and the
/// refit it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Iterate after the refit (`μ_{t+1}` / `β_{t+1}`).
    pub estimate: Vec<f64>,
    pub subset: Subset,
    /// Loss of `subset` at the incoming iterate, `L(θ_t, S_t)`.
    pub trimmed_loss: f64,
    /// Loss of `subset` at the refit, `L(θ_{t+1}, S_t)`.
    pub refit_loss: f64,
    pub error_to_truth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    /// Starting point `θ_0`.
    pub initial: Vec<f64>,
    pub initial_error: Option<f64>,
    pub records: Vec<IterationRecord>,
    /// First step at which the subset repeated and the iterate moved less
    /// than the configured tolerance.
    pub converged_at: Option<usize>,
}

impl IterateTrace {
    pub(crate) fn new(initial: Vec<f64>, initial_error: Option<f64>) -> Self {
        IterateTrace {
            initial,
            initial_error,
            records: Vec::new(),
            converged_at: None,
        }
    }

    /// Appends a step and updates the fixed-point annotation.
    pub(crate) fn push(&mut self, record: IterationRecord, tolerance: f64) {
        if self.converged_at.is_none() {
            if let Some(prev) = self.records.last() {
                let moved = crate::linalg::distance(&prev.estimate, &record.estimate);
                if prev.subset == record.subset && moved <= tolerance {
                    self.converged_at = Some(self.records.len());
                }
            }
        }
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Iterates `θ_0, θ_1, …, θ_T`.
    pub fn iterates(&self) -> impl Iterator<Item = &[f64]> + '_ {
        std::iter::once(self.initial.as_slice())
            .chain(self.records.iter().map(|r| r.estimate.as_slice()))
    }

    /// Objective at the output: `L(θ_T, S_{T-1})`.
    pub fn final_trimmed_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.refit_loss)
    }

    /// The chain `L(θ_0,S_0) ≥ L(θ_1,S_0) ≥ L(θ_1,S_1) ≥ …` in order.
    pub fn objective_chain(&self) -> Vec<f64> {
        self.records
            .iter()
            .flat_map(|r| [r.trimmed_loss, r.refit_loss])
            .collect()
    }

    /// Largest increase along [`objective_chain`](Self::objective_chain);
    /// zero or negative when the chain is non-increasing.
    pub fn max_objective_increase(&self) -> f64 {
        self.objective_chain()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
