//! Iterative trimmed mean.
//!
//! Starting from the grand mean, each step keeps the `⌈αn⌉` points closest
//! (in squared Euclidean distance) to the current estimate and replaces the
//! estimate with their average. The subset mean is the exact minimizer of the
//! within-subset squared loss, so the trimmed objective never increases.

use serde::{Deserialize, Serialize};

use crate::common::{
    select_lowest_loss, subset_size, AlphaRegime, IterateTrace, IterationRecord, SampleSet,
    Subset, TieBreak, TrimConfig,
};
use crate::error::{Error, Result};
use crate::linalg::distance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub value: Vec<f64>,
    pub trace: IterateTrace,
    pub alpha_regime: AlphaRegime,
}

impl MeanEstimate {
    /// True when α is outside the `α ≥ 4/5` guarantee.
    pub fn alpha_warning(&self) -> bool {
        self.alpha_regime.is_warning()
    }
}

/// `‖x_i − μ‖²` for every sample.
pub fn mean_losses(samples: &SampleSet, mu: &[f64]) -> Result<Vec<f64>> {
    if mu.len() != samples.dim() {
        return Err(Error::invalid(format!(
            "estimate has dimension {}, samples have {}",
            mu.len(),
            samples.dim()
        )));
    }
    Ok(samples
        .points()
        .iter_rows()
        .map(|x| x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect())
}

/// `Σ_{i∈S} ‖x_i − μ‖²`.
pub fn subset_loss(samples: &SampleSet, mu: &[f64], subset: &Subset) -> f64 {
    subset
        .indices()
        .iter()
        .map(|&i| {
            samples
                .point(i)
                .iter()
                .zip(mu)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItmStep {
    pub mu_next: Vec<f64>,
    pub subset: Subset,
    /// `L(μ_t, S_t)`.
    pub trimmed_loss: f64,
    /// `L(μ_{t+1}, S_t)`.
    pub refit_loss: f64,
}

pub fn itm_step(
    samples: &SampleSet,
    mu_t: &[f64],
    k: usize,
    tie_break: TieBreak,
) -> Result<ItmStep> {
    let losses = mean_losses(samples, mu_t)?;
    if k == 0 {
        return Err(Error::invalid("subset size must be >= 1"));
    }
    let subset = select_lowest_loss(&losses, k, tie_break)?;
    let trimmed_loss = subset.indices().iter().map(|&i| losses[i]).sum();
    let mu_next = samples.mean_of(subset.indices());
    let refit_loss = subset_loss(samples, &mu_next, &subset);
    Ok(ItmStep {
        mu_next,
        subset,
        trimmed_loss,
        refit_loss,
    })
}

/// Runs exactly `config.iterations` trimming steps from the grand mean.
pub fn itm(samples: &SampleSet, config: &TrimConfig) -> Result<MeanEstimate> {
    config.validate()?;
    let n = samples.len();
    if n == 0 {
        return Err(Error::invalid("empty sample set"));
    }
    let k = subset_size(n, config.alpha);
    let all: Vec<usize> = (0..n).collect();
    let mu0 = samples.mean_of(&all);
    let truth = samples.truth_mean();
    let err = |mu: &[f64]| truth.map(|t| distance(mu, t));

    let mut trace = IterateTrace::new(mu0.clone(), err(&mu0));
    let mut mu = mu0;
    for _ in 0..config.iterations {
        let step = itm_step(samples, &mu, k, config.tie_break)?;
        let record = IterationRecord {
            error_to_truth: err(&step.mu_next),
            estimate: step.mu_next,
            subset: step.subset,
            trimmed_loss: step.trimmed_loss,
            refit_loss: step.refit_loss,
        };
        mu = record.estimate.clone();
        trace.push(record, config.loss_tolerance);
    }

    Ok(MeanEstimate {
        value: mu,
        trace,
        alpha_regime: config.mean_regime(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn samples(rows: &[&[f64]]) -> SampleSet {
        SampleSet::from_rows(rows).unwrap()
    }

    fn cfg(alpha: f64, iterations: usize) -> TrimConfig {
        TrimConfig::new(alpha, iterations).unwrap()
    }

    #[test]
    fn mean_losses_examples() {
        let s = samples(&[&[0.0], &[1.0], &[10.0]]);
        assert_eq!(mean_losses(&s, &[0.0]).unwrap(), vec![0.0, 1.0, 100.0]);
        let s = samples(&[&[2.0, 2.0], &[2.0, 2.0]]);
        assert_eq!(mean_losses(&s, &[2.0, 2.0]).unwrap(), vec![0.0, 0.0]);
        let s = samples(&[&[3.0, 4.0]]);
        assert_eq!(mean_losses(&s, &[0.0, 0.0]).unwrap(), vec![25.0]);
        assert!(mean_losses(&s, &[0.0]).is_err());
    }

    #[test]
    fn step_examples() {
        let s = samples(&[&[0.0], &[1.0], &[10.0]]);
        let step = itm_step(&s, &[0.0], 2, TieBreak::ByIndex).unwrap();
        assert_eq!(step.subset.indices(), &[0, 1]);
        assert_eq!(step.mu_next, vec![0.5]);
        assert_eq!(step.trimmed_loss, 1.0);
        assert_eq!(step.refit_loss, 0.5);

        let s = samples(&[&[-1.0], &[1.0], &[100.0]]);
        let step = itm_step(&s, &[0.0], 2, TieBreak::ByIndex).unwrap();
        assert_eq!(step.subset.indices(), &[0, 1]);
        assert_eq!(step.mu_next, vec![0.0]);

        let s = SampleSet::from_rows(&[[4.0, -2.0]; 5]).unwrap();
        for k in 1..=5 {
            let step = itm_step(&s, &[100.0, 3.0], k, TieBreak::ByIndex).unwrap();
            assert_eq!(step.mu_next, vec![4.0, -2.0]);
        }
        assert!(itm_step(&s, &[0.0, 0.0], 6, TieBreak::ByIndex).is_err());
    }

    #[test]
    fn two_hand_iterations() {
        let s = samples(&[&[0.0], &[1.0], &[10.0]]);
        // grand mean 11/3; distances² 13.4, 7.1, 40.1 keep {0, 1}
        let est = itm(&s, &cfg(2.0 / 3.0, 2)).unwrap();
        assert_eq!(est.value, vec![0.5]);
        assert_eq!(est.trace.records[0].subset.indices(), &[0, 1]);
        assert_eq!(est.trace.records[1].subset.indices(), &[0, 1]);
        assert_eq!(est.trace.converged_at, Some(1));
        assert!(est.alpha_warning());
    }

    #[test]
    fn alpha_one_is_grand_mean() {
        let s = samples(&[&[0.0, 1.0], &[1.0, 5.0], &[10.0, -3.0], &[2.0, 2.0]]);
        for t in 1..5 {
            let est = itm(&s, &cfg(1.0, t)).unwrap();
            assert_eq!(est.value, s.mean_of(&[0, 1, 2, 3]));
        }
    }

    #[test]
    fn single_point() {
        let s = samples(&[&[3.5, -1.0]]);
        for alpha in [0.1, 0.5, 1.0] {
            assert_eq!(itm(&s, &cfg(alpha, 3)).unwrap().value, vec![3.5, -1.0]);
        }
    }

    #[test]
    fn trace_records_truth_error() {
        let s = samples(&[&[0.0], &[1.0], &[10.0]])
            .with_truth_mean(vec![0.0])
            .unwrap();
        let est = itm(&s, &cfg(2.0 / 3.0, 3)).unwrap();
        assert_eq!(est.trace.len(), 3);
        assert!((est.trace.initial_error.unwrap() - 11.0 / 3.0).abs() < 1e-12);
        assert_eq!(est.trace.last().unwrap().error_to_truth, Some(0.5));
        assert_eq!(est.trace.last().unwrap().estimate, est.value);
    }

    fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..=4).prop_flat_map(|d| {
            prop::collection::vec(prop::collection::vec(-50.0f64..50.0, d), 2..40)
        })
    }

    proptest! {
        #[test]
        fn objective_chain_non_increasing(rows in rows_strategy(), alpha in 0.5f64..=1.0) {
            let s = SampleSet::from_rows(&rows).unwrap();
            let est = itm(&s, &cfg(alpha, 10)).unwrap();
            prop_assert!(est.trace.max_objective_increase() <= 1e-9);
            let k = subset_size(s.len(), alpha);
            prop_assert!(est.trace.records.iter().all(|r| r.subset.len() == k));
        }

        #[test]
        fn fixed_point_is_absorbing(rows in rows_strategy()) {
            let s = SampleSet::from_rows(&rows).unwrap();
            let est = itm(&s, &cfg(0.8, 15)).unwrap();
            if let Some(t) = est.trace.converged_at {
                let fixed = &est.trace.records[t];
                for later in &est.trace.records[t..] {
                    prop_assert_eq!(&later.subset, &fixed.subset);
                    prop_assert_eq!(&later.estimate, &fixed.estimate);
                }
            }
        }
    }
}
