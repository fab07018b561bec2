//! Seeded Monte Carlo experiments.
//!
//! Each trial draws its randomness from its own substream keyed by
//! `(master seed, purpose, beta index, trial index)`, and trial results are
//! collected in trial order, so a report is bit-identical for a given
//! configuration no matter how many threads run it.
//!
//! Two ways of sampling the learned-attack cost are available:
//!
//! * `direct`: draw `k` state vectors, form the sample covariance, build
//!   `H S H^T` and evaluate the KL cost on the `m x m` matrices;
//! * `equivalent`: draw the normalised Gaussian matrix `Z` and evaluate the
//!   spectral form on the (possibly replicated) eigenvalue profile.
//!
//! `k` is derived from `beta` as `k = round(beta * n) + 1`.

use nalgebra::DMatrix;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{self, CostParts, KlCost, SpectralProfile};
use crate::covariance::{self, StateCovariance};
use crate::grid_io::{self, CaseSource, GridCase, MeasurementConfig, MeasurementModel};
use crate::rmt::{self, AsymptoticReport, DiscreteAed, LogdetVariant};
use crate::{rng, stats, Error};

/// Above this many entries in `Z` (with `k - 1 >= n`) the equivalent form
/// draws `Z Z^T` from its Wishart law instead of drawing `Z`.
pub const LITERAL_Z_ENTRIES: usize = 1 << 20;

/// Above this many state samples the direct form draws `(k-1) S` from its
/// Wishart law instead of drawing the samples.
pub const LITERAL_STATE_SAMPLES: usize = 200_000;

/// Minimum trial count for the distribution and correlation checks.
pub const MIN_CHECK_TRIALS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key '{0}'")]
    UnknownKey(String),
    #[error("'{key}' out of range: {reason}")]
    OutOfRange { key: String, reason: String },
    #[error("cannot parse configuration: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn out_of_range(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::OutOfRange { key: key.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CostForm {
    /// KL cost on `H S H^T` from sampled states.
    #[default]
    Direct,
    /// Spectral form driven by `Z`.
    Equivalent,
}

impl CostForm {
    pub fn name(self) -> &'static str {
        match self {
            CostForm::Direct => "direct",
            CostForm::Equivalent => "equivalent",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(CostForm::Direct),
            "equivalent" => Some(CostForm::Equivalent),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `ieee30`, `ieee118` or a path to a MATPOWER file.
    pub case_source: String,
    pub decay_r: f64,
    pub snr_db: f64,
    pub beta_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub replication_l: usize,
    pub logdet_variant: LogdetVariant,
    pub cost_form: CostForm,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            case_source: "ieee30".to_string(),
            decay_r: 0.1,
            snr_db: 30.0,
            beta_grid: vec![2.0, 5.0, 10.0, 30.0],
            trials: 1000,
            master_seed: 42,
            replication_l: 1,
            logdet_variant: LogdetVariant::AsPrinted,
            cost_form: CostForm::Direct,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.case_source.trim().is_empty() {
            return Err(ConfigError::out_of_range("case_source", "empty case source"));
        }
        if !(0.0..=1.0).contains(&self.decay_r) {
            return Err(ConfigError::out_of_range("decay_r", format!("{} is outside [0, 1]", self.decay_r)));
        }
        if self.decay_r == 1.0 {
            return Err(ConfigError::out_of_range(
                "decay_r",
                "r = 1 makes the state covariance rank one; a full-rank covariance is required",
            ));
        }
        if !self.snr_db.is_finite() {
            return Err(ConfigError::out_of_range("snr_db", "must be finite"));
        }
        if self.trials < 2 {
            return Err(ConfigError::out_of_range("trials", format!("{} < 2", self.trials)));
        }
        if self.replication_l < 1 {
            return Err(ConfigError::out_of_range("replication_l", "must be at least 1"));
        }
        if self.cost_form == CostForm::Direct && self.replication_l != 1 {
            return Err(ConfigError::out_of_range(
                "replication_l",
                "replication only applies to the equivalent cost form",
            ));
        }
        if self.beta_grid.is_empty() {
            return Err(ConfigError::out_of_range("beta_grid", "empty"));
        }
        for &b in &self.beta_grid {
            let ok = match self.cost_form {
                CostForm::Direct => b >= 1.0 && b.is_finite(),
                CostForm::Equivalent => b > 0.0 && b.is_finite(),
            };
            if !ok {
                let need = match self.cost_form {
                    CostForm::Direct => ">= 1 for the direct form",
                    CostForm::Equivalent => "> 0",
                };
                return Err(ConfigError::out_of_range("beta_grid", format!("beta = {b} must be {need}")));
            }
        }
        Ok(())
    }
}

/// A grid (or explicit system) with its covariance, noise and profile.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: MeasurementModel,
    pub sigma_xx: StateCovariance,
    pub sigma2: f64,
    pub profile: SpectralProfile,
}

impl Scenario {
    /// Toeplitz covariance with decay `r`, noise calibrated to `snr_db`,
    /// default DC measurement set.
    pub fn from_case(case: &GridCase, r: f64, snr_db: f64) -> Result<Self, Error> {
        let model = grid_io::build_dc_jacobian(case, &MeasurementConfig::default())?;
        let sigma_xx = covariance::toeplitz_covariance(model.n(), r)?;
        let sigma2 = covariance::calibrate_noise(&model.h, &sigma_xx, snr_db)?;
        Self::from_parts(model, sigma_xx, sigma2)
    }

    pub fn from_parts(model: MeasurementModel, sigma_xx: StateCovariance, sigma2: f64) -> Result<Self, Error> {
        let profile = attack::spectral_profile(&model.h, &sigma_xx, sigma2)?;
        Ok(Scenario { model: model.with_sigma2(sigma2), sigma_xx, sigma2, profile })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self, Error> {
        let case = CaseSource::parse(&config.case_source).load()?;
        Self::from_case(&case, config.decay_r, config.snr_db)
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.model.h
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }
}

/// `k - 1 = round(beta * n)`.
pub fn degrees_of_freedom(beta: f64, n: usize) -> Result<usize, ConfigError> {
    let d = (beta * n as f64).round();
    if !(d >= 1.0) || !d.is_finite() {
        return Err(ConfigError::out_of_range("beta_grid", format!("beta = {beta} gives k - 1 = {d} for n = {n}")));
    }
    Ok(d as usize)
}

#[cfg(feature = "parallel")]
fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..trials).map(f).collect()
}

// Stream purposes.
const TAG_DIRECT: u64 = 1;
const TAG_EQUIVALENT: u64 = 2;
const TAG_TRACE: u64 = 3;

fn tag(purpose: u64, index: usize) -> u64 {
    (purpose << 32) | index as u64
}

/// One direct-form cost sample with `k` state samples.
fn direct_trial(sc: &Scenario, kl: &KlCost, k: usize, rng: &mut rng::TrialRng) -> Result<f64, Error> {
    let s = if k <= LITERAL_STATE_SAMPLES {
        let x = covariance::sample_state_matrix(&sc.sigma_xx, k, rng)?;
        covariance::sample_covariance_of_columns(&x)?
    } else {
        covariance::sample_covariance_wishart(&sc.sigma_xx, k, rng)?
    };
    let a = attack::optimal_attack_covariance(sc.h(), &s)?;
    Ok(kl.evaluate(&a.matrix)?)
}

/// One equivalent-form sample with `k - 1 = dof`.
fn equivalent_trial(lambdas: &[f64], dof: usize, rng: &mut rng::TrialRng) -> Result<CostParts, Error> {
    let n = lambdas.len();
    if dof < n || n * dof <= LITERAL_Z_ENTRIES {
        let z = covariance::sample_normalized_gaussian(n, dof, rng)?;
        Ok(attack::equivalent_cost_parts(&z, lambdas)?)
    } else {
        let w = covariance::sample_normalized_gram(n, dof, rng)?;
        Ok(attack::equivalent_cost_parts_from_gram(&w, lambdas)?)
    }
}

/// Direct-form costs `F` for `trials` trials at `beta`.
pub fn direct_cost_samples(
    sc: &Scenario,
    beta: f64,
    trials: usize,
    seed: u64,
    stream_index: usize,
) -> Result<Vec<f64>, Error> {
    let k = degrees_of_freedom(beta, sc.n())? + 1;
    let kl = KlCost::new(sc.h(), &sc.sigma_xx, sc.sigma2)?;
    map_trials(trials, |t| {
        let mut r = rng::substream(seed, tag(TAG_DIRECT, stream_index), t as u64);
        direct_trial(sc, &kl, k, &mut r)
    })
    .into_iter()
    .collect()
}

/// Equivalent-form cost pieces for `trials` trials at `beta`, with
/// `n = lambdas.len()`.
pub fn equivalent_cost_samples(
    lambdas: &[f64],
    beta: f64,
    trials: usize,
    seed: u64,
    stream_index: usize,
) -> Result<Vec<CostParts>, Error> {
    let dof = degrees_of_freedom(beta, lambdas.len())?;
    map_trials(trials, |t| {
        let mut r = rng::substream(seed, tag(TAG_EQUIVALENT, stream_index), t as u64);
        equivalent_trial(lambdas, dof, &mut r)
    })
    .into_iter()
    .collect()
}

/// Samples of `tr(Z^T (L+I)^-1 L Z)` alone. Rows of `Z` are independent,
/// so the statistic is `sum_i d_i chi2_{k-1} / (k-1)` with
/// `d_i = lambda_i / (1 + lambda_i)`.
pub fn trace_statistic_samples(lambdas: &[f64], beta: f64, trials: usize, seed: u64) -> Result<Vec<f64>, Error> {
    let dof = degrees_of_freedom(beta, lambdas.len())?;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::DegenerateSamples(e.to_string()))?;
    let weights: Vec<f64> = lambdas.iter().map(|l| l / (1.0 + l)).collect();
    Ok(map_trials(trials, |t| {
        let mut r = rng::substream(seed, tag(TAG_TRACE, 0), t as u64);
        weights.iter().map(|w| w * chi.sample(&mut r)).sum::<f64>() / dof as f64
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ergodic,
    Variance,
}

/// Bound check for one log-determinant variant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantCheck {
    pub variant: LogdetVariant,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// The variance CI meets `[lower, upper]`.
    pub ci_intersects: Option<bool>,
    /// `upper - lower <= gap_bound(beta)`.
    pub gap_within_bound: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceCheck {
    pub ci_level: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub variants: Vec<VariantCheck>,
    /// Variants whose bounds meet the CI and respect the gap bound.
    pub matching_variants: Vec<LogdetVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaResult {
    pub beta: f64,
    pub k: usize,
    /// Unnormalised cost `F` per trial, in trial order.
    pub cost_samples: Vec<f64>,
    /// Statistics of `F`.
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    /// Same, divided by the state dimension.
    pub per_state_mean: f64,
    pub per_state_std_error: f64,
    pub fa_fb_correlation: Option<f64>,
    pub asymptotic: AsymptoticReport,
    pub variance_check: Option<VarianceCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    /// State dimension the costs refer to (`l * n0` for the equivalent form).
    pub n: usize,
    pub n0: usize,
    pub m: usize,
    /// `n / m`, reported only.
    pub alpha: f64,
    pub perfect_cost_per_state: f64,
    pub per_beta: Vec<BetaResult>,
}

pub const CI_LEVEL: f64 = 0.95;

fn run(config: &ExperimentConfig, kind: ExperimentKind) -> Result<MonteCarloReport, Error> {
    config.validate()?;
    let sc = Scenario::from_config(config)?;
    run_on(&sc, config, kind)
}

/// Runs an experiment on an already-built scenario. `config.case_source`
/// is only echoed.
pub fn run_on(sc: &Scenario, config: &ExperimentConfig, kind: ExperimentKind) -> Result<MonteCarloReport, Error> {
    config.validate()?;
    if kind == ExperimentKind::Variance {
        for &beta in &config.beta_grid {
            rmt::gap_bound(beta)?;
        }
    }
    let l = config.replication_l;
    let n = sc.n() * l;
    let lambdas = sc.profile.replicated(l);
    let aed = sc.profile.aed();
    let perfect_cost_per_state = attack::perfect_knowledge_cost(&sc.profile, l) / n as f64;

    let mut per_beta = Vec::with_capacity(config.beta_grid.len());
    for (bi, &beta) in config.beta_grid.iter().enumerate() {
        let dof = degrees_of_freedom(beta, n)?;
        let (samples, correlation) = match config.cost_form {
            CostForm::Direct => (direct_cost_samples(sc, beta, config.trials, config.master_seed, bi)?, None),
            CostForm::Equivalent => {
                let parts = equivalent_cost_samples(&lambdas, beta, config.trials, config.master_seed, bi)?;
                let fa: Vec<f64> = parts.iter().map(|p| p.trace).collect();
                let fb: Vec<f64> = parts.iter().map(|p| p.logdet).collect();
                (parts.iter().map(CostParts::cost).collect(), stats::pearson(&fa, &fb))
            }
        };
        let mean = stats::mean(&samples);
        let variance = stats::variance(&samples);
        let std_error = (variance / samples.len() as f64).sqrt();
        let asymptotic = AsymptoticReport::compute(&aed, beta, config.logdet_variant)?;
        let variance_check = match kind {
            ExperimentKind::Variance => Some(check_variance(&aed, beta, variance, samples.len())?),
            ExperimentKind::Ergodic => None,
        };
        per_beta.push(BetaResult {
            beta,
            k: dof + 1,
            mean,
            variance,
            std_error,
            per_state_mean: mean / n as f64,
            per_state_std_error: std_error / n as f64,
            cost_samples: samples,
            fa_fb_correlation: correlation,
            asymptotic,
            variance_check,
        });
    }

    Ok(MonteCarloReport {
        kind,
        config: config.clone(),
        n,
        n0: sc.profile.n0(),
        m: sc.m(),
        alpha: sc.n() as f64 / sc.m() as f64,
        perfect_cost_per_state,
        per_beta,
    })
}

fn check_variance(aed: &DiscreteAed, beta: f64, sample_variance: f64, trials: usize) -> Result<VarianceCheck, Error> {
    let (ci_low, ci_high) = stats::variance_ci(sample_variance, trials, CI_LEVEL);
    let gap = Some(rmt::gap_bound(beta)?);
    let mut variants = Vec::new();
    for variant in LogdetVariant::ALL {
        let bounds = match rmt::variance_bounds(aed, beta, variant) {
            Ok(b) => Some(b),
            Err(rmt::RmtError::NonpositiveLogArgument { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let ci_intersects = bounds.map(|(lo, hi)| ci_low <= hi && ci_high >= lo);
        let gap_within_bound = match (bounds, gap) {
            (Some((lo, hi)), Some(g)) => Some(hi - lo <= g + 1e-12),
            _ => None,
        };
        variants.push(VariantCheck {
            variant,
            lower: bounds.map(|b| b.0),
            upper: bounds.map(|b| b.1),
            ci_intersects,
            gap_within_bound,
        });
    }
    let matching_variants = variants
        .iter()
        .filter(|v| v.ci_intersects == Some(true) && v.gap_within_bound != Some(false))
        .map(|v| v.variant)
        .collect();
    Ok(VarianceCheck { ci_level: CI_LEVEL, ci_low, ci_high, variants, matching_variants })
}

/// Monte Carlo mean of the per-state cost against the asymptotic ergodic
/// cost, for every beta in the grid.
pub fn run_ergodic_experiment(config: &ExperimentConfig) -> Result<MonteCarloReport, Error> {
    run(config, ExperimentKind::Ergodic)
}

/// Monte Carlo variance of the unnormalised cost against the variance
/// bounds, with a chi-square confidence interval per beta. Every beta must
/// exceed 1 so that the gap bound exists.
pub fn run_variance_experiment(config: &ExperimentConfig) -> Result<MonteCarloReport, Error> {
    run(config, ExperimentKind::Variance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub beta: f64,
    pub trials: usize,
    pub ks_statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test between two cost samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d = stats::ks_statistic(a, b);
    (d, stats::ks_p_value(d, a.len(), b.len()))
}

/// Compares the law of the direct-form cost with that of the spectral form
/// at the scenario's own dimension.
pub fn distribution_equivalence_check(sc: &Scenario, beta: f64, trials: usize, seed: u64) -> Result<KsResult, Error> {
    if trials < MIN_CHECK_TRIALS {
        return Err(Error::InsufficientTrials { required: MIN_CHECK_TRIALS, got: trials });
    }
    if beta < 1.0 {
        return Err(ConfigError::out_of_range("beta", "the direct form needs beta >= 1").into());
    }
    let direct = direct_cost_samples(sc, beta, trials, seed, 0)?;
    let equivalent: Vec<f64> =
        equivalent_cost_samples(sc.profile.lambdas(), beta, trials, seed, 0)?.iter().map(CostParts::cost).collect();
    let (d, p) = ks_two_sample(&direct, &equivalent);
    Ok(KsResult { beta, trials, ks_statistic: d, p_value: p })
}

/// Pearson correlation between the trace and log-determinant pieces of the
/// spectral-form cost. `aed` atoms are used as the diagonal directly.
pub fn correlation_check(aed: &DiscreteAed, beta: f64, trials: usize, seed: u64) -> Result<f64, Error> {
    if trials < MIN_CHECK_TRIALS {
        return Err(Error::InsufficientTrials { required: MIN_CHECK_TRIALS, got: trials });
    }
    let parts = equivalent_cost_samples(aed.atoms(), beta, trials, seed, 0)?;
    let fa: Vec<f64> = parts.iter().map(|p| p.trace).collect();
    let fb: Vec<f64> = parts.iter().map(|p| p.logdet).collect();
    stats::pearson(&fa, &fb)
        .ok_or_else(|| Error::DegenerateSamples("trace or log-determinant samples have zero spread".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig { trials: 2, beta_grid: vec![2.0, 5.0], ..Default::default() }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig { decay_r: 1.5, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ConfigError::OutOfRange { key, .. }) if key == "decay_r"));
        let bad = ExperimentConfig { trials: 1, ..Default::default() };
        assert!(matches!(bad.validate(), Err(ConfigError::OutOfRange { key, .. }) if key == "trials"));
        let bad = ExperimentConfig { beta_grid: vec![0.5], ..Default::default() };
        assert!(bad.validate().is_err());
        let ok = ExperimentConfig { beta_grid: vec![0.5], cost_form: CostForm::Equivalent, ..Default::default() };
        assert!(ok.validate().is_ok());
        let bad = ExperimentConfig { replication_l: 3, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn two_trial_report_is_deterministic() {
        let a = run_ergodic_experiment(&small_config()).unwrap();
        let b = run_ergodic_experiment(&small_config()).unwrap();
        assert_eq!(a, b);
        for r in &a.per_beta {
            assert_eq!(r.cost_samples.len(), 2);
        }
        assert_eq!(a.per_beta[0].k, 59);
        assert_eq!(a.n, 29);
    }

    #[test]
    fn report_statistics_recompute() {
        let cfg = ExperimentConfig { trials: 50, beta_grid: vec![3.0], ..Default::default() };
        let rep = run_ergodic_experiment(&cfg).unwrap();
        let r = &rep.per_beta[0];
        assert!((stats::mean(&r.cost_samples) - r.mean).abs() < 1e-12);
        assert!((stats::variance(&r.cost_samples) - r.variance).abs() < 1e-12);
        assert!((r.std_error - (r.variance / 50.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn self_comparison_has_zero_statistic() {
        let p = SpectralProfile::from_lambdas(vec![3.0, 40.0, 0.7]).unwrap();
        let a: Vec<f64> =
            equivalent_cost_samples(p.lambdas(), 4.0, 300, 11, 0).unwrap().iter().map(CostParts::cost).collect();
        let b: Vec<f64> =
            equivalent_cost_samples(p.lambdas(), 4.0, 300, 11, 0).unwrap().iter().map(CostParts::cost).collect();
        let (d, p) = ks_two_sample(&a, &b);
        assert_eq!(d, 0.0);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn degenerate_correlation() {
        let aed = DiscreteAed::new(vec![0.0; 5]).unwrap();
        assert!(matches!(correlation_check(&aed, 2.0, 200, 1), Err(Error::DegenerateSamples(_))));
    }

    #[test]
    fn checks_need_enough_trials() {
        let aed = DiscreteAed::new(vec![1.0; 3]).unwrap();
        assert!(matches!(correlation_check(&aed, 2.0, 10, 1), Err(Error::InsufficientTrials { .. })));
    }

    #[test]
    fn large_beta_uses_wishart_draws() {
        let lambdas = vec![5.0, 1.0, 0.5];
        let parts = equivalent_cost_samples(&lambdas, 1e7, 3, 9, 0).unwrap();
        assert!(parts.iter().all(|p| p.cost().is_finite()));
    }
}
