//! Iterative trimmed squares minimization.
//!
//! Starts from the full-sample least-squares fit; each step keeps the `⌈αn⌉`
//! rows with the smallest squared residuals and refits least squares on them.

use serde::{Deserialize, Serialize};

use crate::common::{
    select_lowest_loss, subset_size, AlphaRegime, IterateTrace, IterationRecord, RegressionData,
    Subset, TieBreak, TrimConfig,
};
use crate::error::{Error, Result};
use crate::linalg::{distance, dot, least_squares, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub value: Vec<f64>,
    pub trace: IterateTrace,
    /// Regime of α judged against the mean-estimation thresholds; the
    /// regression threshold depends on the design (see
    /// [`TrimConfig::regression_alpha_threshold`]).
    pub alpha_regime: AlphaRegime,
    /// Number of refits that needed the ridge fallback.
    pub ridge_refits: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ItsmOptions {
    /// Rescale every `(x_i, y_i)` to a unit-norm row first.
    pub normalize: bool,
    /// When set, a rank-deficient subset is refit with this ridge penalty
    /// instead of failing. Changes the estimator; off by default.
    pub ridge_fallback: Option<f64>,
}

/// `(y_i − x_iᵀβ)²` for every row.
pub fn squared_residuals(data: &RegressionData, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != data.dim() {
        return Err(Error::invalid(format!(
            "coefficients have dimension {}, design has {} columns",
            beta.len(),
            data.dim()
        )));
    }
    Ok(data
        .design()
        .iter_rows()
        .zip(data.response())
        .map(|(x, y)| {
            let r = y - dot(x, beta);
            r * r
        })
        .collect())
}

/// `Σ_{i∈S} (y_i − x_iᵀβ)²`.
pub fn subset_residual_loss(data: &RegressionData, beta: &[f64], subset: &Subset) -> f64 {
    subset
        .indices()
        .iter()
        .map(|&i| {
            let r = data.response()[i] - dot(data.design().row(i), beta);
            r * r
        })
        .sum()
}

/// Divides each row and its response by the row norm. Coefficients are
/// unchanged; noise standard deviations shrink by the same factor.
pub fn normalize_rows(data: &RegressionData) -> Result<RegressionData> {
    let (mut design, mut response, truth, noise) = data.clone().into_parts();
    let mut norms = Vec::with_capacity(design.rows());
    for i in 0..design.rows() {
        let norm = crate::linalg::norm2(design.row(i));
        if norm == 0.0 {
            return Err(Error::invalid(format!("design row {i} is zero")));
        }
        design.row_mut(i).iter_mut().for_each(|v| *v /= norm);
        response[i] /= norm;
        norms.push(norm);
    }
    let noise = noise.map(|sd| sd.iter().zip(&norms).map(|(s, n)| s / n).collect());
    Ok(RegressionData::from_parts_unchecked(
        design, response, truth, noise,
    ))
}

/// Least squares on the given rows.
pub fn subset_least_squares(data: &RegressionData, indices: &[usize]) -> Result<Vec<f64>> {
    let x = data.design().select_rows(indices);
    let y: Vec<f64> = indices.iter().map(|&i| data.response()[i]).collect();
    least_squares(&x, &y)
}

fn ridge_least_squares(x: &Matrix, y: &[f64], penalty: f64) -> Result<Vec<f64>> {
    let d = x.cols();
    let scale = penalty.sqrt();
    let mut rows: Vec<Vec<f64>> = x.iter_rows().map(<[f64]>::to_vec).collect();
    for j in 0..d {
        let mut r = vec![0.0; d];
        r[j] = scale;
        rows.push(r);
    }
    let mut rhs = y.to_vec();
    rhs.extend(std::iter::repeat_n(0.0, d));
    least_squares(&Matrix::from_rows(&rows)?, &rhs)
}

fn fit_rows(
    data: &RegressionData,
    indices: &[usize],
    ridge: Option<f64>,
) -> Result<(Vec<f64>, bool)> {
    match subset_least_squares(data, indices) {
        Ok(beta) => Ok((beta, false)),
        Err(e @ Error::Singular { .. }) => match ridge {
            Some(penalty) if penalty > 0.0 => {
                let x = data.design().select_rows(indices);
                let y: Vec<f64> = indices.iter().map(|&i| data.response()[i]).collect();
                Ok((ridge_least_squares(&x, &y, penalty)?, true))
            }
            _ => Err(e),
        },
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItsmStep {
    pub beta_next: Vec<f64>,
    pub subset: Subset,
    /// `L(β_t, S_t)`.
    pub trimmed_loss: f64,
    /// `L(β_{t+1}, S_t)`.
    pub refit_loss: f64,
}

pub fn itsm_step(
    data: &RegressionData,
    beta_t: &[f64],
    k: usize,
    tie_break: TieBreak,
) -> Result<ItsmStep> {
    step_with(data, beta_t, k, tie_break, None).map(|(s, _)| s)
}

fn step_with(
    data: &RegressionData,
    beta_t: &[f64],
    k: usize,
    tie_break: TieBreak,
    ridge: Option<f64>,
) -> Result<(ItsmStep, bool)> {
    if k < data.dim() {
        return Err(Error::invalid(format!(
            "subset size {k} is below the dimension {}",
            data.dim()
        )));
    }
    let residuals = squared_residuals(data, beta_t)?;
    let subset = select_lowest_loss(&residuals, k, tie_break)?;
    let trimmed_loss = subset.indices().iter().map(|&i| residuals[i]).sum();
    let (beta_next, used_ridge) = fit_rows(data, subset.indices(), ridge)?;
    let refit_loss = subset_residual_loss(data, &beta_next, &subset);
    Ok((
        ItsmStep {
            beta_next,
            subset,
            trimmed_loss,
            refit_loss,
        },
        used_ridge,
    ))
}

/// Runs ITSM with default options plus the normalization flag.
pub fn itsm(data: &RegressionData, config: &TrimConfig, normalize: bool) -> Result<BetaEstimate> {
    itsm_with(
        data,
        config,
        &ItsmOptions {
            normalize,
            ..ItsmOptions::default()
        },
    )
}

pub fn itsm_with(
    data: &RegressionData,
    config: &TrimConfig,
    options: &ItsmOptions,
) -> Result<BetaEstimate> {
    config.validate()?;
    let n = data.len();
    let d = data.dim();
    if n <= d {
        return Err(Error::invalid(format!("need n > d, got n = {n}, d = {d}")));
    }
    let k = subset_size(n, config.alpha);
    if k < d {
        return Err(Error::invalid(format!(
            "subset size {k} = ceil(alpha * n) is below the dimension {d}"
        )));
    }

    let normalized;
    let data = if options.normalize {
        normalized = normalize_rows(data)?;
        &normalized
    } else {
        data
    };

    let all: Vec<usize> = (0..n).collect();
    let (beta0, mut ridge_refits) = match fit_rows(data, &all, options.ridge_fallback) {
        Ok((b, used)) => (b, usize::from(used)),
        Err(e) => return Err(e.at_iteration(0)),
    };
    let truth = data.truth_beta();
    let err = |b: &[f64]| truth.map(|t| distance(b, t));

    let mut trace = IterateTrace::new(beta0.clone(), err(&beta0));
    let mut beta = beta0;
    for t in 0..config.iterations {
        let (step, used) = step_with(data, &beta, k, config.tie_break, options.ridge_fallback)
            .map_err(|e| e.at_iteration(t + 1))?;
        ridge_refits += usize::from(used);
        let record = IterationRecord {
            error_to_truth: err(&step.beta_next),
            estimate: step.beta_next,
            subset: step.subset,
            trimmed_loss: step.trimmed_loss,
            refit_loss: step.refit_loss,
        };
        beta = record.estimate.clone();
        trace.push(record, config.loss_tolerance);
    }

    Ok(BetaEstimate {
        value: beta,
        trace,
        alpha_regime: config.mean_regime(),
        ridge_refits,
    })
}
