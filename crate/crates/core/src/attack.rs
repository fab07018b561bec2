//! Stealth attack construction and the KL data-integrity cost.
//!
//! The attacker injects `A ~ N(0, Sigma_AA)`. With perfect knowledge the
//! cost-minimising covariance is `H Sigma_XX H^T`; an attacker that only has
//! `k` state samples uses `H S_XX H^T` instead. The resulting cost is random
//! through `S_XX` and has an equivalent spectral form driven by a normalised
//! Gaussian matrix `Z` and the noise-normalised eigenvalues of
//! `H Sigma_XX H^T`. All logarithms are natural.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::covariance::{NormalizedGaussianMatrix, SampleCovariance, StateCovariance};
use crate::linalg;
use crate::rmt::DiscreteAed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("H Sigma H^T has {rank} eigenvalues above tolerance, expected {states}")]
    RankDeficient { rank: usize, states: usize },
    #[error("invalid spectral profile: {0}")]
    InvalidProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Perfect,
    Learned { samples: usize },
}

/// Covariance of the injected attack vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackCovariance {
    pub matrix: DMatrix<f64>,
    pub provenance: Provenance,
}

/// Anything the attacker can plug into `H Sigma H^T`.
pub trait CovarianceKnowledge {
    fn covariance(&self) -> &DMatrix<f64>;
    fn provenance(&self) -> Provenance;
}

impl CovarianceKnowledge for StateCovariance {
    fn covariance(&self) -> &DMatrix<f64> {
        self.matrix()
    }
    fn provenance(&self) -> Provenance {
        Provenance::Perfect
    }
}

impl CovarianceKnowledge for SampleCovariance {
    fn covariance(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    fn provenance(&self) -> Provenance {
        Provenance::Learned { samples: self.sample_count_k }
    }
}

/// `H Sigma H^T`, tagged perfect or learned by the kind of `sigma`.
pub fn optimal_attack_covariance<K: CovarianceKnowledge + ?Sized>(
    h: &DMatrix<f64>,
    sigma: &K,
) -> Result<AttackCovariance, AttackError> {
    let s = sigma.covariance();
    if h.ncols() != s.nrows() || !s.is_square() {
        return Err(AttackError::DimensionMismatch(format!(
            "H is {}x{}, covariance is {}x{}",
            h.nrows(),
            h.ncols(),
            s.nrows(),
            s.ncols()
        )));
    }
    let matrix = linalg::symmetrize(h * s * h.transpose());
    Ok(AttackCovariance { matrix, provenance: sigma.provenance() })
}

/// Precomputed pieces of the KL cost for a fixed system `(H, Sigma_XX, sigma2)`:
///
/// `F(Sigma_AA) = 1/2 ( tr(Sigma_YY^-1 Sigma_AA) - ln|Sigma_AA + sigma2 I| + ln|Sigma_YY| )`
/// with `Sigma_YY = H Sigma_XX H^T + sigma2 I`.
#[derive(Debug, Clone)]
pub struct KlCost {
    sigma_yy_inv: DMatrix<f64>,
    logdet_yy: f64,
    sigma2: f64,
}

impl KlCost {
    pub fn new(h: &DMatrix<f64>, sigma_xx: &StateCovariance, sigma2: f64) -> Result<Self, AttackError> {
        if h.ncols() != sigma_xx.dim() {
            return Err(AttackError::DimensionMismatch(format!(
                "H has {} columns, covariance is {}x{}",
                h.ncols(),
                sigma_xx.dim(),
                sigma_xx.dim()
            )));
        }
        if !(sigma2 > 0.0) {
            return Err(AttackError::SingularMatrix(format!("noise variance {sigma2} must be positive")));
        }
        let m = h.nrows();
        let sigma_yy = linalg::symmetrize(h * sigma_xx.matrix() * h.transpose()) + DMatrix::identity(m, m) * sigma2;
        let logdet_yy = linalg::logdet_spd(&sigma_yy)
            .ok_or_else(|| AttackError::SingularMatrix("Sigma_YY is not positive definite".into()))?;
        let sigma_yy_inv = linalg::inverse_spd(&sigma_yy)
            .ok_or_else(|| AttackError::SingularMatrix("Sigma_YY is not invertible".into()))?;
        Ok(KlCost { sigma_yy_inv, logdet_yy, sigma2 })
    }

    pub fn m(&self) -> usize {
        self.sigma_yy_inv.nrows()
    }

    /// Cost of an attack with covariance `attack` (nats).
    pub fn evaluate(&self, attack: &DMatrix<f64>) -> Result<f64, AttackError> {
        let m = self.m();
        if attack.shape() != (m, m) {
            return Err(AttackError::DimensionMismatch(format!(
                "attack is {}x{}, expected {m}x{m}",
                attack.nrows(),
                attack.ncols()
            )));
        }
        // tr(P A) for symmetric P, A is the elementwise inner product.
        let trace = self.sigma_yy_inv.dot(attack);
        let mut shifted = attack.clone();
        for i in 0..m {
            shifted[(i, i)] += self.sigma2;
        }
        let logdet_a = linalg::logdet_spd(&shifted)
            .ok_or_else(|| AttackError::SingularMatrix("Sigma_AA + sigma2 I is not positive definite".into()))?;
        Ok(0.5 * (trace - logdet_a + self.logdet_yy))
    }
}

/// One-shot KL cost, see [`KlCost`].
pub fn kl_cost(
    attack: &AttackCovariance,
    h: &DMatrix<f64>,
    sigma_xx: &StateCovariance,
    sigma2: f64,
) -> Result<f64, AttackError> {
    KlCost::new(h, sigma_xx, sigma2)?.evaluate(&attack.matrix)
}

/// Noise-normalised nonzero eigenvalues of `H Sigma_XX H^T`, sorted
/// descending, with the per-state constants
/// `delta_c = mean ln(1 + lambda)` and `theta = mean lambda / (1 + lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralProfile {
    lambdas: Vec<f64>,
    delta_c: f64,
    theta: f64,
}

impl SpectralProfile {
    /// Builds a profile from explicit eigenvalues; all must be positive
    /// and finite.
    pub fn from_lambdas(mut lambdas: Vec<f64>) -> Result<Self, AttackError> {
        if lambdas.is_empty() {
            return Err(AttackError::InvalidProfile("no eigenvalues".into()));
        }
        if let Some(bad) = lambdas.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(AttackError::InvalidProfile(format!("eigenvalue {bad} is not positive and finite")));
        }
        lambdas.sort_by(|a, b| b.total_cmp(a));
        let n0 = lambdas.len() as f64;
        let delta_c = lambdas.iter().map(|l| l.ln_1p()).sum::<f64>() / n0;
        let theta = lambdas.iter().map(|l| l / (1.0 + l)).sum::<f64>() / n0;
        Ok(SpectralProfile { lambdas, delta_c, theta })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n0(&self) -> usize {
        self.lambdas.len()
    }

    pub fn delta_c(&self) -> f64 {
        self.delta_c
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Diagonal of `Lambda_{n0} (x) I_l`: each eigenvalue repeated `l`
    /// times in place.
    pub fn replicated(&self, l: usize) -> Vec<f64> {
        self.lambdas.iter().flat_map(|&x| std::iter::repeat_n(x, l)).collect()
    }

    /// Empirical eigenvalue distribution (uniform over the atoms).
    pub fn aed(&self) -> DiscreteAed {
        DiscreteAed::new(self.lambdas.clone()).expect("profile eigenvalues are nonnegative")
    }

    /// Multiplies every eigenvalue by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self, AttackError> {
        Self::from_lambdas(self.lambdas.iter().map(|l| l * c).collect())
    }
}

/// Spectral profile of `(H, Sigma_XX, sigma2)`, from the `n x n` symmetric
/// problem `Sigma^{1/2} H^T H Sigma^{1/2} / sigma2`.
pub fn spectral_profile(
    h: &DMatrix<f64>,
    sigma_xx: &StateCovariance,
    sigma2: f64,
) -> Result<SpectralProfile, AttackError> {
    let n = h.ncols();
    if n != sigma_xx.dim() {
        return Err(AttackError::DimensionMismatch(format!(
            "H has {n} columns, covariance is {}x{}",
            sigma_xx.dim(),
            sigma_xx.dim()
        )));
    }
    if !(sigma2 > 0.0) {
        return Err(AttackError::InvalidProfile(format!("noise variance {sigma2} must be positive")));
    }
    let root = linalg::sym_sqrt(sigma_xx.matrix());
    let gram = &root * (h.transpose() * h) * &root;
    let eig = linalg::sym_eigenvalues_desc(&gram);
    let max = eig.first().copied().unwrap_or(0.0);
    let kept: Vec<f64> = eig.iter().copied().filter(|&v| max > 0.0 && v > linalg::RANK_TOL * max).collect();
    if kept.len() < n {
        return Err(AttackError::RankDeficient { rank: kept.len(), states: n });
    }
    SpectralProfile::from_lambdas(kept.into_iter().map(|v| v / sigma2).collect())
}

/// The two random pieces of the spectral-form cost plus its constant:
/// `F = 1/2 (trace - logdet + constant)` with
/// `trace = tr(Z^T (L+I)^-1 L Z)`, `logdet = ln|Z^T L Z + I|`,
/// `constant = ln|L + I|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParts {
    pub trace: f64,
    pub logdet: f64,
    pub constant: f64,
}

impl CostParts {
    pub fn cost(&self) -> f64 {
        0.5 * (self.trace - self.logdet + self.constant)
    }
}

fn check_lambdas(lambdas: &[f64]) -> Result<(), AttackError> {
    if let Some(bad) = lambdas.iter().find(|&&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(AttackError::InvalidProfile(format!("eigenvalue {bad} is negative or not finite")));
    }
    Ok(())
}

/// Spectral-form pieces for an explicit `Z` (`n x (k-1)`). The log-determinant
/// uses whichever Gram form is smaller, so it is finite for any `Z`.
pub fn equivalent_cost_parts(z: &NormalizedGaussianMatrix, lambdas: &[f64]) -> Result<CostParts, AttackError> {
    let z = &z.matrix;
    let (n, d) = z.shape();
    if n != lambdas.len() {
        return Err(AttackError::DimensionMismatch(format!(
            "Z has {n} rows but the profile has {} eigenvalues",
            lambdas.len()
        )));
    }
    check_lambdas(lambdas)?;
    let trace: f64 = lambdas.iter().enumerate().map(|(i, &l)| l / (1.0 + l) * z.row(i).norm_squared()).sum();
    let sqrt_l = DVector::from_iterator(n, lambdas.iter().map(|l| l.sqrt()));
    // rows scaled by sqrt(lambda)
    let mut scaled = z.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= sqrt_l[i];
    }
    let gram = if d < n {
        scaled.transpose() * &scaled + DMatrix::identity(d, d)
    } else {
        &scaled * scaled.transpose() + DMatrix::identity(n, n)
    };
    let logdet = linalg::logdet_spd(&linalg::symmetrize(gram))
        .ok_or_else(|| AttackError::SingularMatrix("Gram form is not positive definite".into()))?;
    Ok(CostParts { trace, logdet, constant: lambdas.iter().map(|l| l.ln_1p()).sum() })
}

/// Spectral-form pieces given `W = Z Z^T` (`n x n`) instead of `Z`.
pub fn equivalent_cost_parts_from_gram(w: &DMatrix<f64>, lambdas: &[f64]) -> Result<CostParts, AttackError> {
    let n = lambdas.len();
    if w.shape() != (n, n) {
        return Err(AttackError::DimensionMismatch(format!(
            "Gram matrix is {}x{}, profile has {n} eigenvalues",
            w.nrows(),
            w.ncols()
        )));
    }
    check_lambdas(lambdas)?;
    let trace: f64 = lambdas.iter().enumerate().map(|(i, &l)| l / (1.0 + l) * w[(i, i)]).sum();
    let sqrt_l: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let mut g = DMatrix::from_fn(n, n, |i, j| sqrt_l[i] * w[(i, j)] * sqrt_l[j]);
    for i in 0..n {
        g[(i, i)] += 1.0;
    }
    let logdet = linalg::logdet_spd(&g)
        .ok_or_else(|| AttackError::SingularMatrix("I + L^1/2 W L^1/2 is not positive definite".into()))?;
    Ok(CostParts { trace, logdet, constant: lambdas.iter().map(|l| l.ln_1p()).sum() })
}

/// Spectral-form cost
/// `1/2 [ tr(Z^T (L+I)^-1 L Z) - ln|Z^T L Z + I| + ln|L + I| ]`.
pub fn equivalent_cost(z: &NormalizedGaussianMatrix, lambdas: &[f64]) -> Result<f64, AttackError> {
    Ok(equivalent_cost_parts(z, lambdas)?.cost())
}

/// Cost of the perfect-knowledge attack, `1/2 sum lambda/(1+lambda)` over
/// the profile replicated `l` times.
pub fn perfect_knowledge_cost(profile: &SpectralProfile, l: usize) -> f64 {
    0.5 * l as f64 * profile.lambdas.iter().map(|x| x / (1.0 + x)).sum::<f64>()
}
