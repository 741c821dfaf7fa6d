//! Experiment runners and output formats behind the `entest` binary.
//!
//! Every trial draws its data from the stream `seed.trial_rng(n, r)`, runs the
//! iterative estimator and the oracle baseline on that same dataset, and
//! reports the distance to the truth. Trials run on the rayon pool; rows are
//! sorted by `(method, n, trial)` before they are written, so output bytes do
//! not depend on scheduling.
//!
//! CSV schema: `method,n,d,trial,final_error,runtime_ms,converged_at`.
//! Per-method means over the trials of each `n` are appended with
//! `trial = -1`. `runtime_ms` is only filled when timing is requested, since
//! wall-clock values would break byte-for-byte reproducibility.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{subset_size, AlphaRegime, RegressionData, SampleSet, TrimConfig};
use crate::datagen::{
    gen_mean_data_with, gen_regression_data_with, sample_gaussian, MeanSetting, RngSeed,
    SettingKind,
};
use crate::diagnostics::{
    itm_bound_monte_carlo, lambda_order_statistic, lemma1_monte_carlo, BoundCheckReport,
};
use crate::error::{Error, Result};
use crate::linalg::{distance, SymmetricMatrix};
use crate::oracle::{oracle_ls, oracle_mean, psi_minus_exact, psi_minus_sampled, PsiEstimate};
use crate::trimmed_mean::itm;
use crate::trimmed_regression::{itsm_with, normalize_rows, ItsmOptions};

pub const DEFAULT_N_LIST: [usize; 4] = [500, 1000, 2000, 4000];
pub const DEFAULT_REGRESSION_DIM: usize = 100;
pub const CSV_HEADER: [&str; 7] = [
    "method",
    "n",
    "d",
    "trial",
    "final_error",
    "runtime_ms",
    "converged_at",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "ITM")]
    Itm,
    #[serde(rename = "OM")]
    Om,
    #[serde(rename = "ITSM")]
    Itsm,
    #[serde(rename = "OLS")]
    Ols,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Itm => "ITM",
            Method::Om => "OM",
            Method::Itsm => "ITSM",
            Method::Ols => "OLS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub method: Method,
    pub n: usize,
    pub d: usize,
    /// Zero-based trial index; `-1` marks an aggregate row.
    pub trial: i64,
    pub final_error: f64,
    pub runtime_ms: Option<f64>,
    pub converged_at: Option<usize>,
}

impl TrialResult {
    pub fn is_aggregate(&self) -> bool {
        self.trial < 0
    }
}

/// Parameters shared by the experiment commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_list: Vec<usize>,
    pub alpha: f64,
    pub iterations: usize,
    pub trials: usize,
    pub seed: RngSeed,
    /// Fill `runtime_ms`.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::invalid("n list is empty"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n list must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be >= 1"));
        }
        self.trim_config().map(|_| ())
    }

    pub fn trim_config(&self) -> Result<TrimConfig> {
        TrimConfig::new(self.alpha, self.iterations)
    }

    fn grid(&self) -> Vec<(usize, usize)> {
        self.n_list
            .iter()
            .flat_map(|&n| (0..self.trials).map(move |r| (n, r)))
            .collect()
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn finish(mut rows: Vec<TrialResult>, timing: bool) -> Vec<TrialResult> {
    rows.sort_by(|a, b| (a.method, a.n, a.trial).cmp(&(b.method, b.n, b.trial)));
    let mut aggregates = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.method == b.method && a.n == b.n) {
        let count = chunk.len() as f64;
        let mean_error = chunk.iter().map(|r| r.final_error).sum::<f64>() / count;
        let mean_runtime = timing
            .then(|| chunk.iter().filter_map(|r| r.runtime_ms).sum::<f64>() / count);
        aggregates.push(TrialResult {
            method: chunk[0].method,
            n: chunk[0].n,
            d: chunk[0].d,
            trial: -1,
            final_error: mean_error,
            runtime_ms: mean_runtime,
            converged_at: None,
        });
    }
    rows.extend(aggregates);
    rows.sort_by(|a, b| (a.method, a.n, a.trial).cmp(&(b.method, b.n, b.trial)));
    rows
}

/// Paired ITM / Oracle Mean trials on one of the mean-estimation settings.
pub fn run_mean_experiment(
    kind: SettingKind,
    dim: Option<usize>,
    config: &ExperimentConfig,
) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let trim = config.trim_config()?;
    let settings = config
        .n_list
        .iter()
        .map(|&n| {
            let s = MeanSetting::new(kind, n, config.alpha, config.seed)?;
            match dim {
                Some(d) => s.with_dim(d),
                None => Ok(s),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = config
        .grid()
        .into_par_iter()
        .map(|(n, r)| {
            let setting = settings.iter().find(|s| s.n == n).expect("setting per n");
            let samples = gen_mean_data_with(setting, &mut config.seed.trial_rng(n, r))?;
            mean_trial(&samples, &trim, r, config.timing)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(rows.into_iter().flatten().collect(), config.timing))
}

fn mean_trial(
    samples: &SampleSet,
    trim: &TrimConfig,
    r: usize,
    timing: bool,
) -> Result<[TrialResult; 2]> {
    let truth = samples
        .truth_mean()
        .ok_or(Error::MissingMetadata("truth_mean"))?;
    let (n, d) = (samples.len(), samples.dim());
    let k = subset_size(n, trim.alpha);

    let start = Instant::now();
    let est = itm(samples, trim)?;
    let itm_ms = elapsed_ms(start);
    let start = Instant::now();
    let om = oracle_mean(samples, k)?;
    let om_ms = elapsed_ms(start);

    Ok([
        TrialResult {
            method: Method::Itm,
            n,
            d,
            trial: r as i64,
            final_error: distance(&est.value, truth),
            runtime_ms: timing.then_some(itm_ms),
            converged_at: est.trace.converged_at,
        },
        TrialResult {
            method: Method::Om,
            n,
            d,
            trial: r as i64,
            final_error: distance(&om, truth),
            runtime_ms: timing.then_some(om_ms),
            converged_at: None,
        },
    ])
}

/// Paired ITSM / Oracle Least Squares trials on Gaussian designs.
pub fn run_regression_experiment(
    dim: usize,
    normalize: bool,
    config: &ExperimentConfig,
) -> Result<Vec<TrialResult>> {
    config.validate()?;
    if let Some(&n) = config.n_list.iter().find(|&&n| n <= dim) {
        return Err(Error::invalid(format!("need n > d, got n = {n}, d = {dim}")));
    }
    let trim = config.trim_config()?;
    let options = ItsmOptions {
        normalize,
        ridge_fallback: None,
    };
    let rows = config
        .grid()
        .into_par_iter()
        .map(|(n, r)| {
            let data = gen_regression_data_with(
                n,
                dim,
                config.alpha,
                &mut config.seed.trial_rng(n, r),
            )?;
            regression_trial(&data, &trim, &options, r, config.timing)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(rows.into_iter().flatten().collect(), config.timing))
}

fn regression_trial(
    data: &RegressionData,
    trim: &TrimConfig,
    options: &ItsmOptions,
    r: usize,
    timing: bool,
) -> Result<[TrialResult; 2]> {
    let truth = data
        .truth_beta()
        .ok_or(Error::MissingMetadata("truth_beta"))?;
    let (n, d) = (data.len(), data.dim());
    let k = subset_size(n, trim.alpha);

    let start = Instant::now();
    let est = itsm_with(data, trim, options)?;
    let itsm_ms = elapsed_ms(start);
    let start = Instant::now();
    let ols = if options.normalize {
        oracle_ls(&normalize_rows(data)?, k)?
    } else {
        oracle_ls(data, k)?
    };
    let ols_ms = elapsed_ms(start);

    Ok([
        TrialResult {
            method: Method::Itsm,
            n,
            d,
            trial: r as i64,
            final_error: distance(&est.value, truth),
            runtime_ms: timing.then_some(itsm_ms),
            converged_at: est.trace.converged_at,
        },
        TrialResult {
            method: Method::Ols,
            n,
            d,
            trial: r as i64,
            final_error: distance(&ols, truth),
            runtime_ms: timing.then_some(ols_ms),
            converged_at: None,
        },
    ])
}

/// Mean final error per `(method, n)`, taken from the aggregate rows.
pub fn aggregate_error(rows: &[TrialResult], method: Method, n: usize) -> Option<f64> {
    rows.iter()
        .find(|r| r.is_aggregate() && r.method == method && r.n == n)
        .map(|r| r.final_error)
}

pub fn write_csv<W: Write>(rows: &[TrialResult], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.as_str().to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.trial.to_string(),
            r.final_error.to_string(),
            r.runtime_ms.map(|v| v.to_string()).unwrap_or_default(),
            r.converged_at.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
}

/// ψ⁻ diagnostic on a normalized Gaussian design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub exact: Option<PsiEstimate>,
    pub sampled: PsiEstimate,
    /// `k / ψ⁻(k)` from the sampled value.
    pub c1_estimate: f64,
    /// `4c₁ / (1 + 4c₁)`.
    pub alpha_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiConfig {
    pub n: usize,
    pub d: usize,
    pub trials: usize,
}

impl Default for PsiConfig {
    fn default() -> Self {
        PsiConfig {
            n: 10,
            d: 2,
            trials: 45,
        }
    }
}

pub fn run_psi_report(psi: &PsiConfig, alpha: f64, seed: RngSeed) -> Result<PsiReport> {
    if psi.d == 0 || psi.n <= psi.d {
        return Err(Error::invalid(format!(
            "psi design needs n > d >= 1, got n = {}, d = {}",
            psi.n, psi.d
        )));
    }
    let k = subset_size(psi.n, alpha);
    let design = sample_gaussian(
        &vec![0.0; psi.d],
        &SymmetricMatrix::identity(psi.d),
        psi.n,
        &mut seed.stream(u64::MAX),
    )?;
    let data = RegressionData::new(design, vec![0.0; psi.n])?;
    let unit = normalize_rows(&data)?;
    let exact = match psi_minus_exact(unit.design(), k) {
        Ok(p) => Some(p),
        Err(Error::ResourceLimit { .. }) => None,
        Err(e) => return Err(e),
    };
    let sampled = psi_minus_sampled(unit.design(), k, psi.trials, seed)?;
    let c1 = sampled.conditioning_constant();
    Ok(PsiReport {
        n: psi.n,
        d: psi.d,
        k,
        exact,
        sampled,
        c1_estimate: c1,
        alpha_threshold: TrimConfig::regression_alpha_threshold(c1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseAtN {
    pub n: usize,
    pub subset_size: usize,
    pub lambda_order_statistic: f64,
    /// Holding probability guaranteed for the sum-of-distances bound.
    pub lemma1_guarantee: f64,
    pub lemma1: BoundCheckReport,
    /// Per-iteration holding probability `1 − 5/(4n)`.
    pub contraction_guarantee: f64,
    pub contraction: BoundCheckReport,
    pub theorem: BoundCheckReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub setting: u8,
    pub d: usize,
    pub alpha: f64,
    pub alpha_regime: AlphaRegime,
    pub iterations: usize,
    pub trials: usize,
    pub seed: u64,
    pub envelope_constant: f64,
    pub per_n: Vec<DiagnoseAtN>,
    pub psi: PsiReport,
}

pub fn run_diagnose(
    kind: SettingKind,
    dim: Option<usize>,
    config: &ExperimentConfig,
    envelope: f64,
    psi: &PsiConfig,
) -> Result<DiagnoseReport> {
    config.validate()?;
    let trim = config.trim_config()?;
    let mut per_n = Vec::with_capacity(config.n_list.len());
    let mut d = kind.default_dim();
    for &n in &config.n_list {
        let mut setting = MeanSetting::new(kind, n, config.alpha, config.seed)?;
        if let Some(dd) = dim {
            setting = setting.with_dim(dd)?;
        }
        d = setting.d;
        let k = subset_size(n, config.alpha);
        let lemma1 = lemma1_monte_carlo(&setting, config.trials, config.seed)?;
        let bounds = itm_bound_monte_carlo(&setting, &trim, config.trials, config.seed, envelope)?;
        let first = gen_mean_data_with(&setting, &mut config.seed.trial_rng(n, 0))?;
        per_n.push(DiagnoseAtN {
            n,
            subset_size: k,
            lambda_order_statistic: lambda_order_statistic(&first, config.alpha)?,
            lemma1_guarantee: 1.0 - 1.0 / k as f64,
            lemma1,
            contraction_guarantee: 1.0 - 5.0 / (4.0 * n as f64),
            contraction: bounds.contraction,
            theorem: bounds.theorem,
        });
    }
    Ok(DiagnoseReport {
        setting: kind.index(),
        d,
        alpha: config.alpha,
        alpha_regime: trim.mean_regime(),
        iterations: config.iterations,
        trials: config.trials,
        seed: config.seed.0,
        envelope_constant: envelope,
        per_n,
        psi: run_psi_report(psi, config.alpha, config.seed)?,
    })
}

/// Dataset written by the export command.
#[derive(Debug, Clone, PartialEq)]
pub enum ExportedData {
    Mean(SampleSet),
    Regression(RegressionData),
}

/// Contents of the JSON sidecar written next to an exported dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: String,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_mean: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_beta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<Vec<f64>>,
}

/// What the export command generates: a mean setting or a regression design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportKind {
    Mean(SettingKind),
    Regression,
}

/// Generates the dataset of trial 0 for `n`, matching the experiment runners.
pub fn export_dataset(
    kind: ExportKind,
    n: usize,
    dim: Option<usize>,
    alpha: f64,
    seed: RngSeed,
) -> Result<(ExportedData, DatasetMeta)> {
    let mut rng = seed.trial_rng(n, 0);
    match kind {
        ExportKind::Mean(setting_kind) => {
            let mut setting = MeanSetting::new(setting_kind, n, alpha, seed)?;
            if let Some(d) = dim {
                setting = setting.with_dim(d)?;
            }
            let samples = gen_mean_data_with(&setting, &mut rng)?;
            let meta = DatasetMeta {
                kind: format!("setting{}", setting_kind.index()),
                n,
                d: samples.dim(),
                alpha,
                seed: seed.0,
                truth_mean: samples.truth_mean().map(<[f64]>::to_vec),
                noise_scale: samples.noise_scale().map(<[f64]>::to_vec),
                truth_beta: None,
                noise_sd: None,
            };
            Ok((ExportedData::Mean(samples), meta))
        }
        ExportKind::Regression => {
            let d = dim.unwrap_or(DEFAULT_REGRESSION_DIM);
            let data = gen_regression_data_with(n, d, alpha, &mut rng)?;
            let meta = DatasetMeta {
                kind: "regression".to_string(),
                n,
                d,
                alpha,
                seed: seed.0,
                truth_mean: None,
                noise_scale: None,
                truth_beta: data.truth_beta().map(<[f64]>::to_vec),
                noise_sd: data.noise_sd().map(<[f64]>::to_vec),
            };
            Ok((ExportedData::Regression(data), meta))
        }
    }
}

/// Header `x_0..x_{d-1}` (plus `y` for regression), one row per sample.
pub fn write_dataset_csv<W: Write>(data: &ExportedData, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (points, response) = match data {
        ExportedData::Mean(s) => (s.points(), None),
        ExportedData::Regression(r) => (r.design(), Some(r.response())),
    };
    let mut header: Vec<String> = (0..points.cols()).map(|j| format!("x_{j}")).collect();
    if response.is_some() {
        header.push("y".to_string());
    }
    w.write_record(&header)?;
    for (i, row) in points.iter_rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        if let Some(y) = response {
            rec.push(y[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()
}
