//! Asymptotic random-matrix machinery over discrete eigenvalue distributions.
//!
//! For `Z` an `n x (k-1)` matrix of i.i.d. `N(0, 1/(k-1))` entries and a
//! nonnegative diagonal `T` whose eigenvalue distribution is a finite set
//! of atoms, the eta-transform `eta` of `Z^T T Z` at `gamma` is the unique
//! root in `(0, 1]` of
//!
//! ```text
//! beta * eta - E[ 1 / (1 + gamma * eta * T) ] = beta - 1,     beta = (k-1)/n.
//! ```
//!
//! Everything here is an exact finite average over the atoms; there is no
//! quadrature and no sampling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::SpectralProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RmtError {
    #[error("fixed-point bisection failed to bracket a root (beta = {beta}, gamma = {gamma})")]
    NoConvergence { beta: f64, gamma: f64 },
    #[error("log-determinant variance leaves its domain: log argument {argument} <= 0")]
    NonpositiveLogArgument { argument: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("invalid eigenvalue distribution: {0}")]
    InvalidAed(String),
}

/// Uniform distribution over a finite multiset of nonnegative atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteAed {
    atoms: Vec<f64>,
}

impl DiscreteAed {
    pub fn new(atoms: Vec<f64>) -> Result<Self, RmtError> {
        if atoms.is_empty() {
            return Err(RmtError::InvalidAed("no atoms".into()));
        }
        if let Some(bad) = atoms.iter().find(|&&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(RmtError::InvalidAed(format!("atom {bad} is negative or not finite")));
        }
        Ok(DiscreteAed { atoms })
    }

    pub fn point_mass(at: f64) -> Result<Self, RmtError> {
        Self::new(vec![at])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Each atom repeated `l` times; the distribution is unchanged.
    pub fn replicated(&self, l: usize) -> Self {
        DiscreteAed { atoms: self.atoms.iter().flat_map(|&a| std::iter::repeat_n(a, l)).collect() }
    }

    /// `E[f(T)]`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&a| f(a)).sum::<f64>() / self.atoms.len() as f64
    }

    /// `E[T / (1 + T)]`.
    pub fn theta(&self) -> f64 {
        self.expect(|t| t / (1.0 + t))
    }

    /// `E[ln(1 + T)]`.
    pub fn delta_c(&self) -> f64 {
        shannon_transform(self, 1.0)
    }
}

impl From<&SpectralProfile> for DiscreteAed {
    fn from(p: &SpectralProfile) -> Self {
        p.aed()
    }
}

/// `E[1 / (1 + gamma T)]`, in `(0, 1]`.
pub fn eta_transform(aed: &DiscreteAed, gamma: f64) -> f64 {
    aed.expect(|t| 1.0 / (1.0 + gamma * t))
}

/// `E[ln(1 + gamma T)]` in nats.
pub fn shannon_transform(aed: &DiscreteAed, gamma: f64) -> f64 {
    aed.expect(|t| (gamma * t).ln_1p())
}

/// `beta (eta - 1) + E[gamma eta T / (1 + gamma eta T)]`, which is the
/// fixed-point equation moved to one side and rearranged so that it stays
/// accurate for `eta` near one. Strictly increasing in `eta`.
pub fn fixed_point_residual(aed: &DiscreteAed, beta: f64, gamma: f64, eta: f64) -> f64 {
    beta * (eta - 1.0)
        + aed.expect(|t| {
            let x = gamma * eta * t;
            x / (1.0 + x)
        })
}

const MAX_BISECTIONS: usize = 200;

/// Solves for the eta-transform of `Z^T T Z` by bisection on `(0, 1]`.
/// Bisection runs until the bracket cannot shrink in double precision.
pub fn solve_eta_fixed_point(aed: &DiscreteAed, beta: f64, gamma: f64) -> Result<f64, RmtError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(RmtError::DomainError(format!("beta must be positive, got {beta}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(RmtError::DomainError(format!("gamma must be nonnegative, got {gamma}")));
    }
    let g = |eta: f64| fixed_point_residual(aed, beta, gamma, eta);
    let at_one = g(1.0);
    if !at_one.is_finite() || at_one < 0.0 {
        return Err(RmtError::NoConvergence { beta, gamma });
    }
    if at_one == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let (mut g_lo, mut g_hi) = (-beta, at_one);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm < 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    let eta = if g_lo.abs() < g_hi.abs() && lo > 0.0 { lo } else { hi };
    if !(eta > 0.0) {
        return Err(RmtError::NoConvergence { beta, gamma });
    }
    Ok(eta)
}

/// Shannon transform of `Z^T T Z` at `gamma`:
/// `V_T(gamma eta) / beta + ln(1/eta) + (eta - 1)`.
pub fn product_shannon_transform(aed: &DiscreteAed, beta: f64, gamma: f64) -> Result<f64, RmtError> {
    let eta = solve_eta_fixed_point(aed, beta, gamma)?;
    Ok(product_shannon_at(aed, beta, gamma, eta))
}

fn product_shannon_at(aed: &DiscreteAed, beta: f64, gamma: f64, eta: f64) -> f64 {
    shannon_transform(aed, gamma * eta) / beta - (eta - 1.0).ln_1p() + (eta - 1.0)
}

/// Asymptotic ergodic cost per state,
/// `1/2 (Theta + Delta_c) - 1/2 ( V(eta) - beta ln eta + beta (eta - 1) )`
/// with `eta` solved at `gamma = 1`.
pub fn ergodic_performance(aed: &DiscreteAed, beta: f64) -> Result<f64, RmtError> {
    let eta = solve_eta_fixed_point(aed, beta, 1.0)?;
    Ok(ergodic_at(aed, beta, eta))
}

fn ergodic_at(aed: &DiscreteAed, beta: f64, eta: f64) -> f64 {
    let d = eta - 1.0;
    // beta * (eta - 1 - ln eta), accurate when eta is close to one
    let penalty = beta * (d - d.ln_1p());
    0.5 * (aed.theta() + aed.delta_c()) - 0.5 * (shannon_transform(aed, eta) + penalty)
}

/// Asymptotic variance of `tr(Z^T (L+I)^-1 L Z)`: `(2/beta) E[(L/(1+L))^2]`.
pub fn var_trace(aed: &DiscreteAed, beta: f64) -> Result<f64, RmtError> {
    if !(beta > 0.0) {
        return Err(RmtError::DomainError(format!("beta must be positive, got {beta}")));
    }
    Ok(2.0 / beta * aed.expect(|t| (t / (1.0 + t)).powi(2)))
}

/// Which closed form to use for the variance of `ln|Z^T L Z + I|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LogdetVariant {
    /// `-ln(1 - E[x]/beta)`, `x = L eta / (1 + L eta)`.
    #[default]
    AsPrinted,
    /// `-ln(1 - E[x^2]/beta)`.
    Squared,
    /// `-2 ln(1 - E[x^2]/beta)`, the real-Gaussian form.
    Real,
}

impl LogdetVariant {
    pub const ALL: [LogdetVariant; 3] = [LogdetVariant::AsPrinted, LogdetVariant::Squared, LogdetVariant::Real];

    pub fn name(self) -> &'static str {
        match self {
            LogdetVariant::AsPrinted => "as-printed",
            LogdetVariant::Squared => "squared",
            LogdetVariant::Real => "real",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl std::fmt::Display for LogdetVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Asymptotic variance of `ln|Z^T L Z + I|` under `variant`.
pub fn var_logdet(aed: &DiscreteAed, beta: f64, variant: LogdetVariant) -> Result<f64, RmtError> {
    let eta = solve_eta_fixed_point(aed, beta, 1.0)?;
    var_logdet_at(aed, beta, eta, variant)
}

fn var_logdet_at(aed: &DiscreteAed, beta: f64, eta: f64, variant: LogdetVariant) -> Result<f64, RmtError> {
    let frac = |t: f64| t * eta / (1.0 + t * eta);
    let e = match variant {
        LogdetVariant::AsPrinted => aed.expect(frac),
        LogdetVariant::Squared | LogdetVariant::Real => aed.expect(|t| frac(t).powi(2)),
    };
    let argument = 1.0 - e / beta;
    if !(argument > 0.0) {
        return Err(RmtError::NonpositiveLogArgument { argument });
    }
    let v = -(-e / beta).ln_1p();
    Ok(match variant {
        LogdetVariant::Real => 2.0 * v,
        _ => v,
    })
}

/// Bounds on the variance of the unnormalised cost,
/// `1/4 (sqrt(va) - sqrt(vb))^2 <= var F <= 1/4 (va + vb)`.
pub fn variance_bounds(aed: &DiscreteAed, beta: f64, variant: LogdetVariant) -> Result<(f64, f64), RmtError> {
    let va = var_trace(aed, beta)?;
    let vb = var_logdet(aed, beta, variant)?;
    Ok(bounds_from(va, vb))
}

fn bounds_from(va: f64, vb: f64) -> (f64, f64) {
    let lower = 0.25 * (va.sqrt() - vb.sqrt()).powi(2);
    let upper = 0.25 * (va + vb);
    (lower, upper)
}

/// Distribution-free cap on `upper - lower`:
/// `1/2 sqrt(2/beta) sqrt(-ln(1 - 1/beta))`, defined for `beta > 1`.
pub fn gap_bound(beta: f64) -> Result<f64, RmtError> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(RmtError::DomainError(format!("gap bound needs beta > 1, got {beta}")));
    }
    Ok(0.5 * (2.0 / beta).sqrt() * (-(-1.0 / beta).ln_1p()).sqrt())
}

/// Everything the asymptotic analysis says about one `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    /// Shannon transform of `Z^T L Z` at `gamma`.
    pub shannon_v: f64,
    pub theta: f64,
    pub delta_c: f64,
    /// Per-state ergodic cost.
    pub ergodic_mean: f64,
    pub var_fa: f64,
    /// `None` when the variant's log argument is nonpositive.
    pub var_fb: Option<f64>,
    pub var_lower: Option<f64>,
    pub var_upper: Option<f64>,
    /// `None` for `beta <= 1`.
    pub gap_bound: Option<f64>,
    pub logdet_variant: LogdetVariant,
}

impl AsymptoticReport {
    pub fn compute(aed: &DiscreteAed, beta: f64, variant: LogdetVariant) -> Result<Self, RmtError> {
        let gamma = 1.0;
        let eta = solve_eta_fixed_point(aed, beta, gamma)?;
        let var_fa = var_trace(aed, beta)?;
        let var_fb = var_logdet_at(aed, beta, eta, variant).ok();
        let (var_lower, var_upper) = match var_fb {
            Some(vb) => {
                let (lo, hi) = bounds_from(var_fa, vb);
                (Some(lo), Some(hi))
            }
            None => (None, None),
        };
        Ok(AsymptoticReport {
            beta,
            gamma,
            eta,
            shannon_v: product_shannon_at(aed, beta, gamma, eta),
            theta: aed.theta(),
            delta_c: aed.delta_c(),
            ergodic_mean: ergodic_at(aed, beta, eta),
            var_fa,
            var_fb,
            var_lower,
            var_upper,
            gap_bound: gap_bound(beta).ok(),
            logdet_variant: variant,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Point mass at c: beta c eta^2 + (beta - (beta - 1) c) eta - beta = 0
    // (with gamma folded into c).
    fn point_mass_eta(c: f64, beta: f64) -> f64 {
        let a = beta * c;
        let b = beta - (beta - 1.0) * c;
        (-b + (b * b + 4.0 * a * beta).sqrt()) / (2.0 * a)
    }

    fn pm(c: f64) -> DiscreteAed {
        DiscreteAed::point_mass(c).unwrap()
    }

    #[test]
    fn transform_examples() {
        let aed = DiscreteAed::new(vec![0.3, 4.0, 9.0]).unwrap();
        assert_eq!(eta_transform(&aed, 0.0), 1.0);
        assert_eq!(eta_transform(&pm(0.0), 17.0), 1.0);
        assert!((eta_transform(&pm(3.0), 1.0) - 0.25).abs() < 1e-15);
        assert_eq!(shannon_transform(&aed, 0.0), 0.0);
        assert!((shannon_transform(&pm(3.0), 1.0) - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn delta_c_is_shannon_at_one() {
        let p = SpectralProfile::from_lambdas(vec![0.5, 3.0, 12.0]).unwrap();
        assert!((p.delta_c() - shannon_transform(&p.aed(), 1.0)).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(solve_eta_fixed_point(&pm(0.0), 3.0, 1.0).unwrap(), 1.0);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        assert!((solve_eta_fixed_point(&pm(1.0), 1.0, 1.0).unwrap() - golden).abs() < 1e-12);
        let e10 = (-1.0 + 401f64.sqrt()) / 20.0;
        assert!((solve_eta_fixed_point(&pm(1.0), 10.0, 1.0).unwrap() - e10).abs() < 1e-12);
        assert!((point_mass_eta(1.0, 10.0) - e10).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_domain() {
        assert!(matches!(solve_eta_fixed_point(&pm(1.0), 0.0, 1.0), Err(RmtError::DomainError(_))));
        assert!(matches!(solve_eta_fixed_point(&pm(1.0), 1.0, -1.0), Err(RmtError::DomainError(_))));
    }

    #[test]
    fn product_shannon_examples() {
        assert_eq!(product_shannon_transform(&pm(0.0), 2.0, 1.0).unwrap(), 0.0);
        let v = product_shannon_transform(&pm(1.0), 1.0, 1.0).unwrap();
        assert!((v - 0.580458).abs() < 5e-7, "{v}");
        let small = product_shannon_transform(&pm(2.0), 3.0, 1e-12).unwrap();
        assert!(small.abs() < 1e-11);
    }

    #[test]
    fn ergodic_examples() {
        assert_eq!(ergodic_performance(&pm(0.0), 4.0).unwrap(), 0.0);
        let e = ergodic_performance(&pm(1.0), 1.0).unwrap();
        assert!((e - 0.306344).abs() < 1e-6, "{e}");
        let aed = DiscreteAed::new(vec![0.1, 2.0, 50.0, 900.0]).unwrap();
        let far = ergodic_performance(&aed, 1e6).unwrap();
        assert!((far - 0.5 * aed.theta()).abs() < 1e-3);
        assert!(far >= 0.5 * aed.theta() - 1e-12);
    }

    #[test]
    fn trace_variance_examples() {
        assert_eq!(var_trace(&pm(0.0), 3.0).unwrap(), 0.0);
        assert!((var_trace(&pm(1.0), 2.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn logdet_variance_examples() {
        for v in LogdetVariant::ALL {
            assert_eq!(var_logdet(&pm(0.0), 2.0, v).unwrap(), 0.0);
        }
        let eta = (-1.0 + 17f64.sqrt()) / 4.0;
        assert!((solve_eta_fixed_point(&pm(1.0), 2.0, 1.0).unwrap() - eta).abs() < 1e-12);
        let vb = var_logdet(&pm(1.0), 2.0, LogdetVariant::AsPrinted).unwrap();
        assert!((vb - 0.247466).abs() < 5e-7, "{vb}");
        let x = eta / (1.0 + eta);
        let sq = var_logdet(&pm(1.0), 2.0, LogdetVariant::Squared).unwrap();
        assert!((sq + (1.0 - x * x / 2.0).ln()).abs() < 1e-12);
        let real = var_logdet(&pm(1.0), 2.0, LogdetVariant::Real).unwrap();
        assert!((real - 2.0 * sq).abs() < 1e-15);
    }

    #[test]
    fn logdet_variance_large_signal_limit() {
        // L -> infinity: the inner fraction tends to one for every variant.
        let beta = 4.0;
        let v = var_logdet(&pm(1e12), beta, LogdetVariant::AsPrinted).unwrap();
        assert!((v + (1.0 - 1.0 / beta).ln()).abs() < 1e-6);
    }

    #[test]
    fn as_printed_logdet_variance_is_minus_log_eta() {
        // the fixed point gives E[x] = beta (1 - eta)
        let aed = DiscreteAed::new(vec![0.3, 7.0, 1e6]).unwrap();
        for beta in [0.5, 1.0, 3.0, 40.0] {
            let eta = solve_eta_fixed_point(&aed, beta, 1.0).unwrap();
            let v = var_logdet(&aed, beta, LogdetVariant::AsPrinted).unwrap();
            assert!((v + eta.ln()).abs() < 1e-9 * (1.0 + v), "{beta}: {v} vs {}", -eta.ln());
        }
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(variance_bounds(&pm(0.0), 2.0, LogdetVariant::AsPrinted).unwrap(), (0.0, 0.0));
        let (lo, hi) = variance_bounds(&pm(1.0), 2.0, LogdetVariant::AsPrinted).unwrap();
        let vb = var_logdet(&pm(1.0), 2.0, LogdetVariant::AsPrinted).unwrap();
        assert!((lo - 0.25 * (0.5 - vb.sqrt()).powi(2)).abs() < 1e-15);
        assert!(lo > 1.0e-6 && lo < 2.0e-6, "{lo}");
        assert!((hi - 0.124366).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn gap_bound_values() {
        assert_eq!(format!("{:.4}", gap_bound(10.0).unwrap()), "0.0726");
        assert_eq!(format!("{:.4}", gap_bound(100.0).unwrap()), "0.0071");
        assert!(matches!(gap_bound(1.0), Err(RmtError::DomainError(_))));
    }

    #[test]
    fn report_fields_are_consistent() {
        let aed = DiscreteAed::new(vec![0.5, 8.0, 120.0]).unwrap();
        let r = AsymptoticReport::compute(&aed, 10.0, LogdetVariant::AsPrinted).unwrap();
        assert!(r.eta > 0.0 && r.eta <= 1.0);
        let (lo, hi) = (r.var_lower.unwrap(), r.var_upper.unwrap());
        assert!(lo <= hi);
        assert!(hi - lo <= r.gap_bound.unwrap() + 1e-12);
        assert_eq!(r.ergodic_mean, ergodic_performance(&aed, 10.0).unwrap());
        let below_one = AsymptoticReport::compute(&aed, 0.5, LogdetVariant::AsPrinted).unwrap();
        assert!(below_one.gap_bound.is_none());
    }
}
