//! Seeded synthetic data for the benchmark settings.
//!
//! Every generator draws from a [`ChaCha8Rng`], a counter-based generator with
//! 2⁶⁴ independent streams per seed. Trials of an experiment use distinct
//! streams of the same seed ([`RngSeed::trial_rng`]), so they can run in any
//! order or in parallel and still reproduce bit for bit. Standard normals come
//! from the ziggurat transform in `rand_distr::StandardNormal` applied to the
//! generator's 64-bit output; uniform draws use `rand`'s `Uniform` sampler.
//!
//! Sample indices in the variance formulas are 1-based: point `i` (1-based) is
//! in the low-noise block when `i ≤ ⌈αn⌉`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::common::{subset_size, RegressionData, SampleSet};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, sym_eig_extremes, Matrix, SymmetricMatrix};

pub type TrialRng = ChaCha8Rng;

/// Smallest eigenvalue of the random covariance used by setting 4.
pub const SETTING4_MIN_EIGENVALUE: f64 = 0.2;
/// Variance multiplier applied to the high-noise block in settings 3 and 4.
pub const HIGH_NOISE_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> TrialRng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn stream(self, stream: u64) -> TrialRng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }

    /// Stream for trial `r` at sample size `n`.
    pub fn trial_rng(self, n: usize, r: usize) -> TrialRng {
        self.stream(((n as u64) << 32) ^ (r as u64 & 0xffff_ffff))
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingKind {
    /// d = 1; low block N(0, 1), tail N(0, i²).
    S1,
    /// d = 1; low block N(0, (ln i)²), tail N(0, i²).
    S2,
    /// Low block N(0, I), tail N(0, 100·I).
    S3,
    /// Low block N(0, Σ₀), tail N(0, 100·Σ₀) for a random Σ₀.
    S4,
}

impl SettingKind {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(SettingKind::S1),
            2 => Some(SettingKind::S2),
            3 => Some(SettingKind::S3),
            4 => Some(SettingKind::S4),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            SettingKind::S1 => 1,
            SettingKind::S2 => 2,
            SettingKind::S3 => 3,
            SettingKind::S4 => 4,
        }
    }

    pub fn default_dim(self) -> usize {
        match self {
            SettingKind::S1 | SettingKind::S2 => 1,
            SettingKind::S3 | SettingKind::S4 => 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSetting {
    pub kind: SettingKind,
    pub n: usize,
    pub alpha: f64,
    pub d: usize,
    pub seed: RngSeed,
}

impl MeanSetting {
    pub fn new(kind: SettingKind, n: usize, alpha: f64, seed: impl Into<RngSeed>) -> Result<Self> {
        let s = MeanSetting {
            kind,
            n,
            alpha,
            d: kind.default_dim(),
            seed: seed.into(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Overrides the dimension of settings 3 and 4.
    pub fn with_dim(mut self, d: usize) -> Result<Self> {
        self.d = d;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 5 {
            return Err(Error::invalid(format!("setting needs n >= 5, got {}", self.n)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        match self.kind {
            SettingKind::S1 | SettingKind::S2 if self.d != 1 => {
                Err(Error::invalid("settings 1 and 2 are univariate"))
            }
            SettingKind::S3 if self.d == 0 => Err(Error::invalid("dimension must be >= 1")),
            SettingKind::S4 if self.d < 2 => Err(Error::invalid("setting 4 needs d >= 2")),
            _ => Ok(()),
        }
    }
}

/// Standard deviation of point `i` (1-based) in settings 1 and 2.
fn univariate_sd(kind: SettingKind, i: usize, k: usize) -> f64 {
    if i > k {
        return i as f64;
    }
    match kind {
        SettingKind::S2 => (i.max(2) as f64).ln(),
        _ => 1.0,
    }
}

pub fn gen_mean_data(setting: &MeanSetting) -> Result<SampleSet> {
    gen_mean_data_with(setting, &mut setting.seed.rng())
}

/// Draws one dataset for `setting` from an explicit generator state.
pub fn gen_mean_data_with<R: Rng + ?Sized>(
    setting: &MeanSetting,
    rng: &mut R,
) -> Result<SampleSet> {
    setting.validate()?;
    let n = setting.n;
    let d = setting.d;
    let k = subset_size(n, setting.alpha);
    let high = HIGH_NOISE_FACTOR.sqrt();

    let (points, scale) = match setting.kind {
        SettingKind::S1 | SettingKind::S2 | SettingKind::S3 => {
            let mut points = Matrix::zeros(n, d);
            let mut scale = Vec::with_capacity(n);
            for i in 0..n {
                let sd = match setting.kind {
                    SettingKind::S3 => {
                        if i < k {
                            1.0
                        } else {
                            high
                        }
                    }
                    kind => univariate_sd(kind, i + 1, k),
                };
                for v in points.row_mut(i) {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = sd * z;
                }
                scale.push(sd);
            }
            (points, scale)
        }
        SettingKind::S4 => {
            let sigma0 = gen_psd_setting4_with(d, rng)?;
            let (_, lmax) = sym_eig_extremes(&sigma0);
            let l = cholesky(&sigma0)?;
            let mut points = Matrix::zeros(n, d);
            let mut scale = Vec::with_capacity(n);
            let mut z = vec![0.0; d];
            for i in 0..n {
                let s = if i < k { 1.0 } else { high };
                z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
                let lz = l.mul_vec(&z)?;
                for (p, v) in points.row_mut(i).iter_mut().zip(&lz) {
                    *p = s * v;
                }
                scale.push(s * lmax.sqrt());
            }
            (points, scale)
        }
    };

    SampleSet::new(points)?
        .with_truth_mean(vec![0.0; d])?
        .with_noise_scale(scale)
}

pub fn gen_psd_setting4(d: usize, seed: RngSeed) -> Result<SymmetricMatrix> {
    gen_psd_setting4_with(d, &mut seed.rng())
}

/// Random covariance with unit diagonal, sparse uniform off-diagonals, shifted
/// by `c·I` so that its smallest eigenvalue is exactly
/// [`SETTING4_MIN_EIGENVALUE`] (up to eigensolver accuracy).
///
/// Upper-triangle entries are visited row by row; each draws a fair coin and,
/// if it comes up nonzero, a value uniform on `(-0.5, 0.5)`.
pub fn gen_psd_setting4_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<SymmetricMatrix> {
    if d < 2 {
        return Err(Error::invalid("setting 4 covariance needs d >= 2"));
    }
    let uniform = Uniform::new(-0.5, 0.5).expect("valid range");
    let mut m = Matrix::identity(d);
    for i in 0..d {
        for j in i + 1..d {
            if rng.random::<bool>() {
                let v = loop {
                    let v: f64 = uniform.sample(rng);
                    // open interval
                    if v != -0.5 {
                        break v;
                    }
                };
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
    }
    let m = SymmetricMatrix::new(m)?;
    let (lmin, _) = sym_eig_extremes(&m);
    Ok(m.shifted(SETTING4_MIN_EIGENVALUE - lmin))
}

pub fn gen_regression_data(n: usize, d: usize, alpha: f64, seed: RngSeed) -> Result<RegressionData> {
    gen_regression_data_with(n, d, alpha, &mut seed.rng())
}

/// Gaussian design, unit-norm random coefficients, and noise sd 1 on the first
/// `⌈αn⌉` rows and 10 on the rest. Draw order: coefficients, design rows, noise.
pub fn gen_regression_data_with<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    alpha: f64,
    rng: &mut R,
) -> Result<RegressionData> {
    if d == 0 || n <= d {
        return Err(Error::invalid(format!("need n > d >= 1, got n = {n}, d = {d}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let k = subset_size(n, alpha);

    let beta = loop {
        let raw: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = crate::linalg::norm2(&raw);
        if norm > 0.0 {
            break raw.into_iter().map(|v| v / norm).collect::<Vec<f64>>();
        }
    };

    let design_data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
    let design = Matrix::new(n, d, design_data)?;
    let high = HIGH_NOISE_FACTOR.sqrt();
    let noise_sd: Vec<f64> = (0..n).map(|i| if i < k { 1.0 } else { high }).collect();
    let mut response = design.mul_vec(&beta)?;
    for (y, sd) in response.iter_mut().zip(&noise_sd) {
        let z: f64 = StandardNormal.sample(rng);
        *y += sd * z;
    }

    RegressionData::new(design, response)?
        .with_truth_beta(beta)?
        .with_noise_sd(noise_sd)
}

/// `count` rows of `mean + L·z`, `L` the Cholesky factor of `cov`.
pub fn sample_gaussian<R: Rng + ?Sized>(
    mean: &[f64],
    cov: &SymmetricMatrix,
    count: usize,
    rng: &mut R,
) -> Result<Matrix> {
    let d = mean.len();
    if cov.dim() != d {
        return Err(Error::invalid(format!(
            "mean has dimension {d}, covariance {}",
            cov.dim()
        )));
    }
    let l = cholesky(cov)?;
    let mut out = Matrix::zeros(count, d);
    let mut z = vec![0.0; d];
    for i in 0..count {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
        let lz = l.mul_vec(&z)?;
        for ((o, m), v) in out.row_mut(i).iter_mut().zip(mean).zip(&lz) {
            *o = m + v;
        }
    }
    Ok(out)
}
