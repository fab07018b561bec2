//! State covariances, noise calibration and the Gaussian samplers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovarianceError {
    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),
    #[error("sample covariance needs at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Covariance of the state vector, `n x n`, symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCovariance {
    matrix: DMatrix<f64>,
    decay_r: Option<f64>,
}

impl StateCovariance {
    /// Validates symmetry (1e-12 absolute) and positive definiteness
    /// (smallest eigenvalue above 1e-12).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self, CovarianceError> {
        Self::checked(matrix, None)
    }

    fn checked(matrix: DMatrix<f64>, decay_r: Option<f64>) -> Result<Self, CovarianceError> {
        if !matrix.is_square() {
            return Err(CovarianceError::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = linalg::asymmetry(&matrix);
        if asym > 1e-12 {
            return Err(CovarianceError::DegenerateCovariance(format!("not symmetric (max asymmetry {asym:e})")));
        }
        if let Some(&min) = linalg::sym_eigenvalues_desc(&matrix).last() {
            if !(min > 1e-12) {
                return Err(CovarianceError::DegenerateCovariance(format!(
                    "not positive definite (smallest eigenvalue {min:e})"
                )));
            }
        }
        Ok(StateCovariance { matrix, decay_r })
    }

    pub fn identity(n: usize) -> Self {
        StateCovariance { matrix: DMatrix::identity(n, n), decay_r: Some(0.0) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn decay_r(&self) -> Option<f64> {
        self.decay_r
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cholesky_factor(&self) -> Result<DMatrix<f64>, CovarianceError> {
        if self.dim() == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        self.matrix
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| CovarianceError::DegenerateCovariance("Cholesky factorisation failed".into()))
    }

    /// `c * Sigma`.
    pub fn scaled(&self, c: f64) -> Result<Self, CovarianceError> {
        Self::checked(&self.matrix * c, None)
    }
}

/// Toeplitz covariance with entries `r^|i-j|`.
///
/// `r = 1` with `n > 1` is the all-ones matrix of rank one; the asymptotic
/// analysis requires a full-rank state covariance, so it is rejected.
pub fn toeplitz_covariance(n: usize, r: f64) -> Result<StateCovariance, CovarianceError> {
    if n == 0 {
        return Err(CovarianceError::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(CovarianceError::InvalidParameter(format!("decay r = {r} outside [0, 1]")));
    }
    if r == 1.0 && n > 1 {
        return Err(CovarianceError::DegenerateCovariance(
            "r = 1 gives a rank-one covariance; a full-rank state covariance is required".into(),
        ));
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| r.powi(i.abs_diff(j) as i32));
    StateCovariance::checked(matrix, Some(r))
}

/// `SNR = 10 log10( tr(H Sigma H^T) / (m sigma2) )`.
pub fn snr_db(h: &DMatrix<f64>, sigma_xx: &StateCovariance, sigma2: f64) -> f64 {
    let signal = (h * sigma_xx.matrix() * h.transpose()).trace();
    10.0 * (signal / (h.nrows() as f64 * sigma2)).log10()
}

/// Noise variance that puts the measurements at `snr_db`.
pub fn calibrate_noise(h: &DMatrix<f64>, sigma_xx: &StateCovariance, snr_db: f64) -> Result<f64, CovarianceError> {
    if h.ncols() != sigma_xx.dim() {
        return Err(CovarianceError::DimensionMismatch(format!(
            "H has {} columns but the covariance is {}x{}",
            h.ncols(),
            sigma_xx.dim(),
            sigma_xx.dim()
        )));
    }
    if h.nrows() == 0 || !snr_db.is_finite() {
        return Err(CovarianceError::InvalidParameter("empty H or non-finite SNR".into()));
    }
    let signal = (h * sigma_xx.matrix() * h.transpose()).trace();
    Ok(signal / (h.nrows() as f64 * 10f64.powf(snr_db / 10.0)))
}

fn standard_normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    // Column-major fill keeps the draw order stable.
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `k` i.i.d. draws from `N(0, Sigma)`, as the columns of an `n x k` matrix.
pub fn sample_state_matrix<R: Rng + ?Sized>(
    sigma_xx: &StateCovariance,
    k: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>, CovarianceError> {
    let l = sigma_xx.cholesky_factor()?;
    let g = standard_normal_matrix(sigma_xx.dim(), k, rng);
    Ok(l * g)
}

/// `k` i.i.d. state vectors from `N(0, Sigma)` by Cholesky colouring.
pub fn sample_states<R: Rng + ?Sized>(
    sigma_xx: &StateCovariance,
    k: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>, CovarianceError> {
    if k == 0 {
        return Err(CovarianceError::InvalidParameter("k must be at least 1".into()));
    }
    let x = sample_state_matrix(sigma_xx, k, rng)?;
    Ok(x.column_iter().map(|c| c.into_owned()).collect())
}

/// Unbiased sample covariance with its sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    pub matrix: DMatrix<f64>,
    pub sample_count_k: usize,
}

/// `(k-1) S = sum_i x_i x_i^T - k xbar xbar^T`, evaluated in centred form.
pub fn sample_covariance(samples: &[DVector<f64>]) -> Result<SampleCovariance, CovarianceError> {
    let k = samples.len();
    if k < 2 {
        return Err(CovarianceError::InsufficientSamples(k));
    }
    let n = samples[0].len();
    if samples.iter().any(|s| s.len() != n) {
        return Err(CovarianceError::DimensionMismatch("samples differ in length".into()));
    }
    let x = DMatrix::from_fn(n, k, |i, j| samples[j][i]);
    sample_covariance_of_columns(&x)
}

/// Same as [`sample_covariance`] for samples stored as matrix columns.
pub fn sample_covariance_of_columns(x: &DMatrix<f64>) -> Result<SampleCovariance, CovarianceError> {
    let (n, k) = x.shape();
    if k < 2 {
        return Err(CovarianceError::InsufficientSamples(k));
    }
    let mean = x.column_mean();
    let mut centred = x.clone();
    for mut col in centred.column_iter_mut() {
        col -= &mean;
    }
    let s = (&centred * centred.transpose()) / (k as f64 - 1.0);
    debug_assert_eq!(s.nrows(), n);
    Ok(SampleCovariance { matrix: linalg::symmetrize(s), sample_count_k: k })
}

/// `n x (k-1)` matrix of i.i.d. `N(0, 1/(k-1))` entries, so that
/// `E[Z Z^T] = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedGaussianMatrix {
    pub matrix: DMatrix<f64>,
}

impl NormalizedGaussianMatrix {
    pub fn entry_variance(&self) -> f64 {
        1.0 / self.matrix.ncols() as f64
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn sample_normalized_gaussian<R: Rng + ?Sized>(
    n: usize,
    k_minus_1: usize,
    rng: &mut R,
) -> Result<NormalizedGaussianMatrix, CovarianceError> {
    if n == 0 || k_minus_1 == 0 {
        return Err(CovarianceError::InvalidParameter("n and k-1 must be at least 1".into()));
    }
    let scale = (1.0 / k_minus_1 as f64).sqrt();
    let mut z = standard_normal_matrix(n, k_minus_1, rng);
    z *= scale;
    Ok(NormalizedGaussianMatrix { matrix: z })
}

/// Draws `W = Z Z^T` directly, where `Z` is `n x dof` with i.i.d.
/// `N(0, 1/dof)` entries, via the Bartlett decomposition of `W_n(dof, I)`.
/// Requires `dof >= n`.
pub fn sample_normalized_gram<R: Rng + ?Sized>(
    n: usize,
    dof: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>, CovarianceError> {
    let a = bartlett_factor(n, dof, rng)?;
    Ok(linalg::symmetrize((&a * a.transpose()) / dof as f64))
}

/// Lower-triangular Bartlett factor `A` with `A A^T ~ W_n(dof, I)`.
pub fn bartlett_factor<R: Rng + ?Sized>(n: usize, dof: usize, rng: &mut R) -> Result<DMatrix<f64>, CovarianceError> {
    if dof < n {
        return Err(CovarianceError::InvalidParameter(format!(
            "Bartlett sampling needs dof >= n (dof = {dof}, n = {n})"
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let chi = ChiSquared::new((dof - i) as f64).map_err(|e| CovarianceError::InvalidParameter(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    Ok(a)
}

/// Sample covariance drawn directly from its law `(k-1) S ~ W_n(k-1, Sigma)`.
pub fn sample_covariance_wishart<R: Rng + ?Sized>(
    sigma_xx: &StateCovariance,
    k: usize,
    rng: &mut R,
) -> Result<SampleCovariance, CovarianceError> {
    if k < 2 {
        return Err(CovarianceError::InsufficientSamples(k));
    }
    let l = sigma_xx.cholesky_factor()?;
    let w = sample_normalized_gram(sigma_xx.dim(), k - 1, rng)?;
    let s = &l * w * l.transpose();
    Ok(SampleCovariance { matrix: linalg::symmetrize(s), sample_count_k: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn toeplitz_examples() {
        let c = toeplitz_covariance(3, 0.5).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0]);
        assert_eq!(c.matrix(), &expected);
        assert_eq!(toeplitz_covariance(4, 0.0).unwrap().matrix(), &DMatrix::identity(4, 4));
        assert!(matches!(toeplitz_covariance(2, 1.0), Err(CovarianceError::DegenerateCovariance(_))));
        assert!(toeplitz_covariance(1, 1.0).is_ok());
        assert!(toeplitz_covariance(3, 1.5).is_err());
    }

    #[test]
    fn calibrate_noise_scalar_cases() {
        // tr(H Sigma H^T) = m for H = I
        let h = DMatrix::identity(3, 3);
        let s = StateCovariance::identity(3);
        assert!((calibrate_noise(&h, &s, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((calibrate_noise(&h, &s, 30.0).unwrap() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn calibrate_noise_ring() {
        let h = DMatrix::from_row_slice(5, 2, &[2.0, -1.0, -1.0, 2.0, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0]);
        // tr(H H^T) = sum of squares = 4+1+1+4+1+1+1+1 = 14
        let sigma2 = calibrate_noise(&h, &StateCovariance::identity(2), 10.0).unwrap();
        assert!((sigma2 - 14.0 / 50.0).abs() < 1e-15);
        assert!((snr_db(&h, &StateCovariance::identity(2), sigma2) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_dimensional_states() {
        let s = StateCovariance::new(DMatrix::zeros(0, 0)).unwrap();
        let xs = sample_states(&s, 3, &mut rng::stream(1)).unwrap();
        assert_eq!(xs.len(), 3);
        assert!(xs.iter().all(|x| x.is_empty()));
    }

    #[test]
    fn identical_samples_have_zero_scatter() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let s = sample_covariance(&vec![v.clone(); 5]).unwrap();
        assert!(s.matrix.abs().max() < 1e-15);
    }

    #[test]
    fn antipodal_pair() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let s = sample_covariance(&[v.clone(), -v.clone()]).unwrap();
        let expected = 2.0 * &v * v.transpose();
        assert!((s.matrix - expected).abs().max() < 1e-14);
    }

    #[test]
    fn sample_covariance_needs_two() {
        let v = DVector::from_vec(vec![1.0]);
        assert_eq!(sample_covariance(&[v]), Err(CovarianceError::InsufficientSamples(1)));
    }

    #[test]
    fn states_are_deterministic_under_seed() {
        let s = toeplitz_covariance(4, 0.3).unwrap();
        let a = sample_states(&s, 10, &mut rng::stream(99)).unwrap();
        let b = sample_states(&s, 10, &mut rng::stream(99)).unwrap();
        assert_eq!(a, b);
        let z1 = sample_normalized_gaussian(3, 4, &mut rng::stream(5)).unwrap();
        let z2 = sample_normalized_gaussian(3, 4, &mut rng::stream(5)).unwrap();
        assert_eq!(z1, z2);
    }

    #[test]
    fn unit_variance_states() {
        let k = 100_000;
        let xs = sample_state_matrix(&StateCovariance::identity(2), k, &mut rng::stream(3)).unwrap();
        for row in xs.row_iter() {
            let var = row.iter().map(|v| v * v).sum::<f64>() / k as f64;
            assert!((0.98..=1.02).contains(&var), "variance {var}");
        }
    }

    #[test]
    fn single_normalized_entry() {
        let z = sample_normalized_gaussian(1, 1, &mut rng::stream(2)).unwrap();
        assert_eq!(z.matrix.shape(), (1, 1));
        assert_eq!(z.entry_variance(), 1.0);
    }

    #[test]
    fn bartlett_requires_enough_dof() {
        assert!(sample_normalized_gram(5, 4, &mut rng::stream(1)).is_err());
        let w = sample_normalized_gram(5, 5, &mut rng::stream(1)).unwrap();
        assert!(linalg::asymmetry(&w) == 0.0);
    }
}
