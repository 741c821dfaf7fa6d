//! Empirical checks of the per-iteration and final error bounds.
//!
//! Each check returns a margin, `bound − observed`; a negative margin is a
//! violation. The bounds are probabilistic, so single violations are reported
//! rather than treated as failures, and only aggregate rates are compared
//! against thresholds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::{subset_size, IterateTrace, RegressionData, SampleSet, Subset, TrimConfig};
use crate::datagen::{gen_mean_data_with, MeanSetting, RngSeed};
use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::trimmed_mean::itm;

/// Envelope constant for the final-error checks: 4 from the halving
/// recursion plus one unit of headroom for the initial term.
pub const DEFAULT_ENVELOPE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub bound_name: String,
    pub trials: usize,
    pub violations: usize,
    /// `1 − violations / trials`.
    pub empirical_rate: f64,
    pub details: Vec<f64>,
}

impl BoundCheckReport {
    pub fn from_margins(bound_name: impl Into<String>, margins: Vec<f64>) -> Self {
        let trials = margins.len();
        let violations = margins.iter().filter(|m| !(**m >= 0.0)).count();
        let empirical_rate = if trials == 0 {
            1.0
        } else {
            1.0 - violations as f64 / trials as f64
        };
        BoundCheckReport {
            bound_name: bound_name.into(),
            trials,
            violations,
            empirical_rate,
            details: margins,
        }
    }
}

/// The `k`-th smallest value (1-based).
pub fn order_statistic(values: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > values.len() {
        return Err(Error::invalid(format!(
            "order statistic {k} out of range for {} values",
            values.len()
        )));
    }
    let mut v = values.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// `λ_(⌈αn⌉)`: the `⌈αn⌉`-th smallest of the per-sample `λ_max(Σ_i)`.
pub fn lambda_order_statistic(samples: &SampleSet, alpha: f64) -> Result<f64> {
    let scale = samples
        .noise_scale()
        .ok_or(Error::MissingMetadata("noise_scale"))?;
    let lambdas: Vec<f64> = scale.iter().map(|s| s * s).collect();
    order_statistic(&lambdas, subset_size(samples.len(), alpha))
}

/// `σ_(⌈αn⌉)`: the `⌈αn⌉`-th smallest noise standard deviation.
pub fn sigma_order_statistic(data: &RegressionData, alpha: f64) -> Result<f64> {
    let sd = data.noise_sd().ok_or(Error::MissingMetadata("noise_sd"))?;
    order_statistic(sd, subset_size(data.len(), alpha))
}

fn truth_mean(samples: &SampleSet) -> Result<&[f64]> {
    samples
        .truth_mean()
        .ok_or(Error::MissingMetadata("truth_mean"))
}

/// `2|S|√(λ_S d) − Σ_{i∈S} ‖x_i − μ*‖`, with `λ_S` the largest `λ_max(Σ_i)`
/// in the subset.
pub fn lemma1_check(samples: &SampleSet, subset: &Subset) -> Result<f64> {
    let truth = truth_mean(samples)?;
    let scale = samples
        .noise_scale()
        .ok_or(Error::MissingMetadata("noise_scale"))?;
    if subset.is_empty() {
        return Err(Error::invalid("subset is empty"));
    }
    if subset.indices().iter().any(|&i| i >= samples.len()) {
        return Err(Error::invalid("subset index out of range"));
    }
    let lambda = subset
        .indices()
        .iter()
        .map(|&i| scale[i] * scale[i])
        .fold(0.0, f64::max);
    let size = subset.len() as f64;
    let bound = 2.0 * size * (lambda * samples.dim() as f64).sqrt();
    let observed: f64 = subset
        .indices()
        .iter()
        .map(|&i| distance(samples.point(i), truth))
        .sum();
    Ok(bound - observed)
}

/// Per-step residuals of `‖μ_{t+1} − μ*‖ ≤ ½‖μ_t − μ*‖ + 2√(dλ_(⌈αn⌉))`,
/// right side minus left side, one entry per recorded step.
pub fn contraction_trace(trace: &IterateTrace, samples: &SampleSet, alpha: f64) -> Result<Vec<f64>> {
    let truth = truth_mean(samples)?;
    let lambda = lambda_order_statistic(samples, alpha)?;
    let bias = 2.0 * (samples.dim() as f64 * lambda).sqrt();
    let errors: Vec<f64> = trace.iterates().map(|mu| distance(mu, truth)).collect();
    Ok(errors
        .windows(2)
        .map(|w| 0.5 * w[0] + bias - w[1])
        .collect())
}

/// `c√(dλ_(⌈αn⌉)) − ‖μ_T − μ*‖`. Meaningful once enough iterations have run
/// for the halved initial error to be negligible.
pub fn theorem_error_check(estimate: &[f64], samples: &SampleSet, alpha: f64, c: f64) -> Result<f64> {
    let truth = truth_mean(samples)?;
    if estimate.len() != truth.len() {
        return Err(Error::invalid("estimate dimension mismatch"));
    }
    let lambda = lambda_order_statistic(samples, alpha)?;
    Ok(c * (samples.dim() as f64 * lambda).sqrt() - distance(estimate, truth))
}

/// `c·c₁·σ_(⌈αn⌉) − ‖β_T − β*‖`, with `c₁` typically `k / ψ⁻(k)`.
pub fn regression_error_check(
    estimate: &[f64],
    data: &RegressionData,
    alpha: f64,
    c1: f64,
    c: f64,
) -> Result<f64> {
    let truth = data
        .truth_beta()
        .ok_or(Error::MissingMetadata("truth_beta"))?;
    if estimate.len() != truth.len() {
        return Err(Error::invalid("estimate dimension mismatch"));
    }
    let sigma = sigma_order_statistic(data, alpha)?;
    Ok(c * c1 * sigma - distance(estimate, truth))
}

/// Monte-Carlo frequency with which the low-noise block satisfies the
/// sum-of-distances bound. Trial `r` draws from `seed.trial_rng(n, r)`.
pub fn lemma1_monte_carlo(
    setting: &MeanSetting,
    trials: usize,
    seed: RngSeed,
) -> Result<BoundCheckReport> {
    let k = subset_size(setting.n, setting.alpha);
    let block = Subset::first(k);
    let margins = (0..trials)
        .into_par_iter()
        .map(|r| {
            let samples = gen_mean_data_with(setting, &mut seed.trial_rng(setting.n, r))?;
            lemma1_check(&samples, &block)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(BoundCheckReport::from_margins("lemma1_sum_of_distances", margins))
}

/// Contraction and final-error reports over repeated ITM runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItmBoundReports {
    pub contraction: BoundCheckReport,
    pub theorem: BoundCheckReport,
}

pub fn itm_bound_monte_carlo(
    setting: &MeanSetting,
    config: &TrimConfig,
    trials: usize,
    seed: RngSeed,
    c: f64,
) -> Result<ItmBoundReports> {
    let per_trial = (0..trials)
        .into_par_iter()
        .map(|r| {
            let samples = gen_mean_data_with(setting, &mut seed.trial_rng(setting.n, r))?;
            let est = itm(&samples, config)?;
            let residuals = contraction_trace(&est.trace, &samples, config.alpha)?;
            let margin = theorem_error_check(&est.value, &samples, config.alpha, c)?;
            Ok((residuals, margin))
        })
        .collect::<Result<Vec<_>>>()?;
    let (residuals, margins): (Vec<Vec<f64>>, Vec<f64>) = per_trial.into_iter().unzip();
    Ok(ItmBoundReports {
        contraction: BoundCheckReport::from_margins(
            "contraction_per_iteration",
            residuals.into_iter().flatten().collect(),
        ),
        theorem: BoundCheckReport::from_margins("final_error_envelope", margins),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::TrimConfig;
    use crate::datagen::{gen_mean_data, SettingKind};
    use proptest::prelude::*;

    fn at_truth(n: usize, d: usize) -> SampleSet {
        let rows = vec![vec![1.5; d]; n];
        SampleSet::from_rows(&rows)
            .unwrap()
            .with_truth_mean(vec![1.5; d])
            .unwrap()
            .with_noise_scale(vec![2.0; n])
            .unwrap()
    }

    #[test]
    fn lemma1_at_truth() {
        let s = at_truth(4, 3);
        let m = lemma1_check(&s, &Subset::first(4)).unwrap();
        assert!((m - 2.0 * 4.0 * (4.0f64 * 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lemma1_far_outlier() {
        // |S| = 2, λ_S = 1, d = 1: bound 4; put one point at distance 12
        let s = SampleSet::from_rows(&[[0.0], [12.0]])
            .unwrap()
            .with_truth_mean(vec![0.0])
            .unwrap()
            .with_noise_scale(vec![1.0, 1.0])
            .unwrap();
        let m = lemma1_check(&s, &Subset::first(2)).unwrap();
        assert_eq!(m, 4.0 - 12.0);
    }

    #[test]
    fn lemma1_missing_metadata() {
        let s = SampleSet::from_rows(&[[0.0]]).unwrap();
        assert_eq!(
            lemma1_check(&s, &Subset::first(1)),
            Err(Error::MissingMetadata("truth_mean"))
        );
    }

    #[test]
    fn contraction_at_truth() {
        let s = at_truth(10, 2);
        let est = itm(&s, &TrimConfig::new(0.8, 5).unwrap()).unwrap();
        let r = contraction_trace(&est.trace, &s, 0.8).unwrap();
        assert_eq!(r.len(), 5);
        let bias = 2.0 * (2.0f64 * 4.0).sqrt();
        assert!(r.iter().all(|v| (v - bias).abs() < 1e-12));
    }

    #[test]
    fn theorem_envelope_values() {
        let s = at_truth(10, 1);
        let m = theorem_error_check(&[1.5], &s, 0.8, 5.0).unwrap();
        assert!((m - 10.0).abs() < 1e-12);

        let st = MeanSetting::new(SettingKind::S3, 10, 0.8, 1).unwrap();
        let s = gen_mean_data(&st).unwrap();
        let m = theorem_error_check(&[0.0; 10], &s, 0.8, 5.0).unwrap();
        assert!((m - 5.0 * 10f64.sqrt()).abs() < 1e-12);

        let st = MeanSetting::new(SettingKind::S1, 1000, 0.8, 1).unwrap();
        let s = gen_mean_data(&st).unwrap();
        assert_eq!(lambda_order_statistic(&s, 0.8).unwrap(), 1.0);
        let est = itm(&s, &TrimConfig::default()).unwrap();
        let m = theorem_error_check(&est.value, &s, 0.8, 5.0).unwrap();
        assert!(m > 4.5, "margin {m}");
    }

    #[test]
    fn regression_envelope_values() {
        let x = crate::linalg::Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let beta = vec![1.0, -1.0];
        let y = x.mul_vec(&beta).unwrap();
        let data = RegressionData::new(x, y)
            .unwrap()
            .with_truth_beta(beta.clone())
            .unwrap()
            .with_noise_sd(vec![0.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(regression_error_check(&beta, &data, 0.8, 2.0, 5.0).unwrap(), 0.0);

        let data = data.with_noise_sd(vec![1.0, 1.0, 3.0]).unwrap();
        let m = regression_error_check(&beta, &data, 0.5, 2.0, 5.0).unwrap();
        assert_eq!(m, 10.0);
    }

    #[test]
    fn report_counts() {
        let r = BoundCheckReport::from_margins("x", vec![1.0, -0.5, 0.0, 2.0]);
        assert_eq!(r.trials, 4);
        assert_eq!(r.violations, 1);
        assert_eq!(r.empirical_rate, 0.75);
    }

    #[test]
    fn order_statistic_bounds() {
        assert!(order_statistic(&[1.0], 0).is_err());
        assert!(order_statistic(&[1.0], 2).is_err());
        assert_eq!(order_statistic(&[3.0, 1.0, 2.0], 2).unwrap(), 2.0);
    }

    #[test]
    fn setting_order_statistics() {
        for kind in [SettingKind::S1, SettingKind::S2, SettingKind::S3, SettingKind::S4] {
            let st = MeanSetting::new(kind, 50, 0.8, 7).unwrap();
            let s = gen_mean_data(&st).unwrap();
            let scale = s.noise_scale().unwrap();
            let k = 40;
            let expected = match kind {
                SettingKind::S1 | SettingKind::S3 => 1.0,
                SettingKind::S2 => (k as f64).ln(),
                SettingKind::S4 => scale[0],
            };
            assert_eq!(order_statistic(scale, k).unwrap(), expected);
            assert!(scale[k..].windows(2).all(|w| w[0] <= w[1]));
        }
    }

    proptest! {
        #[test]
        fn order_statistic_matches_sort(values in prop::collection::vec(-1e3f64..1e3, 1..80), pick in 0.0f64..1.0) {
            let k = 1 + ((pick * values.len() as f64) as usize).min(values.len() - 1);
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(order_statistic(&values, k).unwrap(), sorted[k - 1]);
        }
    }
}
