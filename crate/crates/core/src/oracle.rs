//! Reference estimators.
//!
//! The oracle baselines use the generator's noise metadata to average (or fit)
//! over the truly low-noise samples. The brute-force routines enumerate every
//! size-`k` subset and are only meant for tiny instances; they are guarded by
//! [`BRUTE_FORCE_LIMIT`] and [`PSI_LIMIT`].

use itertools::Itertools;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::common::{select_lowest_loss, RegressionData, SampleSet, Subset, TieBreak};
use crate::datagen::RngSeed;
use crate::error::{Error, Result};
use crate::linalg::{sym_eig_extremes, Matrix};
use crate::trimmed_mean::subset_loss;
use crate::trimmed_regression::{subset_least_squares, subset_residual_loss};

/// Maximum number of subsets the trimmed-loss enumerations will visit.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;
/// Maximum number of subsets the exact ψ enumerations will visit.
pub const PSI_LIMIT: u128 = 100_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn guard(n: usize, k: usize, limit: u128) -> Result<u128> {
    let required = binomial(n, k);
    if required > limit {
        return Err(Error::ResourceLimit { required, limit });
    }
    Ok(required)
}

/// Mean of the `k` samples with the smallest noise scale (ties by index).
pub fn oracle_mean(samples: &SampleSet, k: usize) -> Result<Vec<f64>> {
    let scale = samples
        .noise_scale()
        .ok_or(Error::MissingMetadata("noise_scale"))?;
    if k == 0 {
        return Err(Error::invalid("oracle mean needs k >= 1"));
    }
    let subset = select_lowest_loss(scale, k, TieBreak::ByIndex)?;
    Ok(samples.mean_of(subset.indices()))
}

/// Least squares on the `k` rows with the smallest noise sd (ties by index).
pub fn oracle_ls(data: &RegressionData, k: usize) -> Result<Vec<f64>> {
    let sd = data.noise_sd().ok_or(Error::MissingMetadata("noise_sd"))?;
    if k < data.dim() {
        return Err(Error::invalid(format!(
            "oracle least squares needs k >= d = {}, got {k}",
            data.dim()
        )));
    }
    let subset = select_lowest_loss(sd, k, TieBreak::ByIndex)?;
    subset_least_squares(data, subset.indices())
}

/// Global minimizer of a trimmed loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimmedFit {
    pub estimate: Vec<f64>,
    pub subset: Subset,
    pub loss: f64,
    /// Subsets skipped because their least-squares problem was singular.
    pub skipped: usize,
}

/// Exhaustive minimum of `Σ_{i∈S} ‖x_i − μ‖²` over `μ` and `|S| = k`.
/// Ties resolve to the lexicographically smallest subset.
pub fn brute_force_trimmed_mean(samples: &SampleSet, k: usize) -> Result<TrimmedFit> {
    let n = samples.len();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("need 1 <= k <= n = {n}, got {k}")));
    }
    guard(n, k, BRUTE_FORCE_LIMIT)?;
    let mut best: Option<TrimmedFit> = None;
    for combo in (0..n).combinations(k) {
        let mu = samples.mean_of(&combo);
        let subset = Subset::from_sorted_unchecked(combo);
        let loss = subset_loss(samples, &mu, &subset);
        if best.as_ref().is_none_or(|b| loss < b.loss) {
            best = Some(TrimmedFit {
                estimate: mu,
                subset,
                loss,
                skipped: 0,
            });
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Exhaustive least trimmed squares. Rank-deficient subsets are skipped and
/// counted in [`TrimmedFit::skipped`].
pub fn brute_force_trimmed_ls(data: &RegressionData, k: usize) -> Result<TrimmedFit> {
    let n = data.len();
    let d = data.dim();
    if k < d || k > n {
        return Err(Error::invalid(format!("need d <= k <= n, got k = {k}")));
    }
    guard(n, k, BRUTE_FORCE_LIMIT)?;
    let mut best: Option<TrimmedFit> = None;
    let mut skipped = 0;
    for combo in (0..n).combinations(k) {
        let beta = match subset_least_squares(data, &combo) {
            Ok(b) => b,
            Err(Error::Singular { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let subset = Subset::from_sorted_unchecked(combo);
        let loss = subset_residual_loss(data, &beta, &subset);
        if best.as_ref().is_none_or(|b| loss < b.loss) {
            best = Some(TrimmedFit {
                estimate: beta,
                subset,
                loss,
                skipped: 0,
            });
        }
    }
    match best {
        Some(mut fit) => {
            fit.skipped = skipped;
            Ok(fit)
        }
        None => Err(Error::Singular {
            rank: 0,
            cols: d,
            iteration: None,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiMethod {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiBound {
    /// `min_S λ_min(X_SᵀX_S)`.
    Minus,
    /// `max_S λ_max(X_SᵀX_S)`.
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiEstimate {
    pub k: usize,
    pub value: f64,
    pub bound: PsiBound,
    pub method: PsiMethod,
    pub subsets_examined: u64,
}

impl PsiEstimate {
    /// `k / ψ⁻(k)`, the conditioning constant implied by this estimate.
    pub fn conditioning_constant(&self) -> f64 {
        if self.value > 0.0 {
            self.k as f64 / self.value
        } else {
            f64::INFINITY
        }
    }
}

fn row_gram_extremes(design: &Matrix, rows: &[usize]) -> (f64, f64) {
    sym_eig_extremes(&design.gram_of_rows(rows))
}

fn check_psi_args(design: &Matrix, k: usize) -> Result<()> {
    if k == 0 || k > design.rows() {
        return Err(Error::invalid(format!(
            "need 1 <= k <= n = {}, got {k}",
            design.rows()
        )));
    }
    Ok(())
}

fn psi_exact(design: &Matrix, k: usize, bound: PsiBound) -> Result<PsiEstimate> {
    check_psi_args(design, k)?;
    let count = guard(design.rows(), k, PSI_LIMIT)?;
    let value = (0..design.rows())
        .combinations(k)
        .map(|rows| {
            let (lo, hi) = row_gram_extremes(design, &rows);
            match bound {
                PsiBound::Minus => lo,
                PsiBound::Plus => hi,
            }
        })
        .fold(
            match bound {
                PsiBound::Minus => f64::INFINITY,
                PsiBound::Plus => f64::NEG_INFINITY,
            },
            |acc, v| match bound {
                PsiBound::Minus => acc.min(v),
                PsiBound::Plus => acc.max(v),
            },
        );
    Ok(PsiEstimate {
        k,
        value,
        bound,
        method: PsiMethod::Exact,
        subsets_examined: count as u64,
    })
}

pub fn psi_minus_exact(design: &Matrix, k: usize) -> Result<PsiEstimate> {
    psi_exact(design, k, PsiBound::Minus)
}

pub fn psi_plus_exact(design: &Matrix, k: usize) -> Result<PsiEstimate> {
    psi_exact(design, k, PsiBound::Plus)
}

/// Minimum of `λ_min(X_SᵀX_S)` over `trials` uniformly drawn size-`k` subsets.
///
/// When `trials` covers every subset (and the count is within [`PSI_LIMIT`])
/// the subsets are enumerated instead of drawn, which makes the result equal
/// to [`psi_minus_exact`]. Either way the value is never below the exact one.
pub fn psi_minus_sampled(
    design: &Matrix,
    k: usize,
    trials: usize,
    seed: RngSeed,
) -> Result<PsiEstimate> {
    check_psi_args(design, k)?;
    if trials == 0 {
        return Err(Error::invalid("psi sampling needs trials >= 1"));
    }
    let n = design.rows();
    let total = binomial(n, k);
    if trials as u128 >= total && total <= PSI_LIMIT {
        let exact = psi_minus_exact(design, k)?;
        return Ok(PsiEstimate {
            method: PsiMethod::Sampled,
            ..exact
        });
    }
    let mut rng = seed.rng();
    let mut value = f64::INFINITY;
    for _ in 0..trials {
        let mut rows = sample(&mut rng, n, k).into_vec();
        rows.sort_unstable();
        value = value.min(row_gram_extremes(design, &rows).0);
    }
    Ok(PsiEstimate {
        k,
        value,
        bound: PsiBound::Minus,
        method: PsiMethod::Sampled,
        subsets_examined: trials as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_mean_data, gen_regression_data, MeanSetting, SettingKind};

    fn samples(rows: &[&[f64]]) -> SampleSet {
        SampleSet::from_rows(rows).unwrap()
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(10, 8), 45);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(50, 25), 126_410_606_437_752);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    #[test]
    fn oracle_mean_examples() {
        let st = MeanSetting::new(SettingKind::S1, 20, 0.8, 4).unwrap();
        let s = gen_mean_data(&st).unwrap();
        let om = oracle_mean(&s, 16).unwrap();
        assert_eq!(om, s.mean_of(&(0..16).collect::<Vec<_>>()));

        let s = samples(&[&[1.0], &[2.0], &[3.0], &[10.0]])
            .with_noise_scale(vec![1.0; 4])
            .unwrap();
        assert_eq!(oracle_mean(&s, 2).unwrap(), vec![1.5]);
        assert_eq!(oracle_mean(&s, 4).unwrap(), vec![4.0]);

        let bare = samples(&[&[1.0]]);
        assert_eq!(
            oracle_mean(&bare, 1),
            Err(Error::MissingMetadata("noise_scale"))
        );
    }

    #[test]
    fn oracle_ls_examples() {
        let data = gen_regression_data(40, 3, 0.8, RngSeed(2)).unwrap();
        let ols = oracle_ls(&data, 32).unwrap();
        let first: Vec<usize> = (0..32).collect();
        assert_eq!(ols, subset_least_squares(&data, &first).unwrap());

        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]]).unwrap();
        let beta = [2.0, -3.0];
        let y = x.mul_vec(&beta).unwrap();
        let noiseless = RegressionData::new(x, y)
            .unwrap()
            .with_noise_sd(vec![0.5; 4])
            .unwrap();
        let b = oracle_ls(&noiseless, 3).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] + 3.0).abs() < 1e-12);
        let homo = oracle_ls(&noiseless, 2).unwrap();
        assert_eq!(homo, subset_least_squares(&noiseless, &[0, 1]).unwrap());
        assert!(oracle_ls(&noiseless, 1).is_err());
    }

    #[test]
    fn brute_force_mean_examples() {
        let fit = brute_force_trimmed_mean(&samples(&[&[0.0], &[1.0], &[10.0]]), 2).unwrap();
        assert_eq!(fit.subset.indices(), &[0, 1]);
        assert_eq!(fit.estimate, vec![0.5]);
        assert_eq!(fit.loss, 0.5);

        let fit = brute_force_trimmed_mean(&SampleSet::from_rows(&[[7.0, 7.0]; 5]).unwrap(), 3).unwrap();
        assert_eq!(fit.loss, 0.0);
        assert_eq!(fit.subset.indices(), &[0, 1, 2]);

        let fit = brute_force_trimmed_mean(&samples(&[&[-1.0], &[1.0], &[3.0]]), 2).unwrap();
        assert_eq!(fit.subset.indices(), &[0, 1]);
        assert_eq!(fit.loss, 2.0);
    }

    #[test]
    fn brute_force_guard() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [i as f64]).collect();
        let s = SampleSet::from_rows(&rows).unwrap();
        assert!(matches!(
            brute_force_trimmed_mean(&s, 20),
            Err(Error::ResourceLimit { .. })
        ));
        let x = Matrix::from_rows(&rows).unwrap();
        assert!(matches!(
            psi_minus_exact(&x, 20),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn brute_force_ls_examples() {
        let x = Matrix::from_rows(&[[1.0]; 5]).unwrap();
        let data = RegressionData::new(x, vec![1.0, 1.0, 1.0, 9.0, 9.0]).unwrap();
        let fit = brute_force_trimmed_ls(&data, 3).unwrap();
        assert_eq!(fit.subset.indices(), &[0, 1, 2]);
        assert!((fit.estimate[0] - 1.0).abs() < 1e-14);
        assert!(fit.loss.abs() < 1e-24);

        let x = Matrix::from_rows(&[[1.0, 0.5], [1.0, -1.0], [1.0, 2.0], [1.0, 3.0], [1.0, 0.0]])
            .unwrap();
        let y = x.mul_vec(&[0.3, 1.7]).unwrap();
        let data = RegressionData::new(x, y).unwrap();
        let fit = brute_force_trimmed_ls(&data, 4).unwrap();
        assert!(fit.loss < 1e-24);
        assert!((fit.estimate[0] - 0.3).abs() < 1e-12 && (fit.estimate[1] - 1.7).abs() < 1e-12);
    }

    #[test]
    fn brute_force_ls_skips_singular() {
        // rows 0..3 are collinear in the second coordinate
        let x = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [1.0, 1.0]]).unwrap();
        let data = RegressionData::new(x, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let fit = brute_force_trimmed_ls(&data, 2).unwrap();
        assert_eq!(fit.skipped, 3);
        assert!(fit.loss < 1e-24);
    }

    #[test]
    fn psi_examples() {
        let eye = Matrix::identity(3);
        let p = psi_minus_exact(&eye, 3).unwrap();
        assert!((p.value - 1.0).abs() < 1e-14);
        assert_eq!(p.subsets_examined, 1);
        assert_eq!(p.method, PsiMethod::Exact);

        let dup = Matrix::from_rows(&[[0.6, 0.8], [0.6, 0.8], [0.6, 0.8]]).unwrap();
        assert!(psi_minus_exact(&dup, 2).unwrap().value.abs() < 1e-14);
        assert!(psi_minus_exact(&dup, 2).unwrap().conditioning_constant() > 1e12);
    }

    #[test]
    fn psi_plus_bounded_by_k_for_unit_rows() {
        let data = gen_regression_data(9, 3, 0.8, RngSeed(12)).unwrap();
        let unit = crate::trimmed_regression::normalize_rows(&data).unwrap();
        for k in 1..=9 {
            let p = psi_plus_exact(unit.design(), k).unwrap();
            assert!(p.value <= k as f64 + 1e-12);
            assert!(psi_minus_exact(unit.design(), k).unwrap().value <= p.value);
        }
    }

    #[test]
    fn psi_full_subset_is_gram_min() {
        let data = gen_regression_data(12, 3, 0.8, RngSeed(4)).unwrap();
        let p = psi_minus_exact(data.design(), 12).unwrap();
        let (lo, _) = sym_eig_extremes(&data.design().gram());
        assert_eq!(p.value, lo);
    }

    #[test]
    fn psi_sampled_bounds() {
        let data = gen_regression_data(10, 2, 0.8, RngSeed(6)).unwrap();
        let unit = crate::trimmed_regression::normalize_rows(&data).unwrap();
        let exact = psi_minus_exact(unit.design(), 8).unwrap();
        let full = psi_minus_sampled(unit.design(), 8, 45, RngSeed(1)).unwrap();
        assert_eq!(full.value, exact.value);
        assert_eq!(full.subsets_examined, 45);
        for seed in 0..20 {
            let partial = psi_minus_sampled(unit.design(), 8, 5, RngSeed(seed)).unwrap();
            assert!(partial.value >= exact.value);
            assert_eq!(partial.method, PsiMethod::Sampled);
        }
        assert!(psi_minus_sampled(unit.design(), 8, 0, RngSeed(1)).is_err());
    }
}
