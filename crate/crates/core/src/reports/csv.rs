//! CSV emission.
//!
//! `mc_mean`, `mc_std_err`, `asymptotic_mean` and `perfect_cost` are per
//! state (cost divided by `n`); `mc_variance` and the bounds refer to the
//! unnormalised cost.

use std::fmt::Write as _;

use crate::harness::{KsResult, MonteCarloReport};

pub const HEADER: &str =
    "beta,k,trials,mc_mean,mc_std_err,asymptotic_mean,perfect_cost,mc_variance,var_lower,var_upper,gap_bound,variant";
pub const KS_HEADER: &str = "beta,trials,ks_statistic,p_value";
pub const CORRELATION_HEADER: &str = "beta,trials,correlation";

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `v` rounded to 12 significant digits, printed in its shortest form.
/// Missing values print as `NaN`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v).parse().expect("formatted float parses");
    let a = rounded.abs();
    if rounded == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    format_float(v.unwrap_or(f64::NAN))
}

pub fn report_csv(report: &MonteCarloReport) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for r in &report.per_beta {
        let a = &r.asymptotic;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            format_float(r.beta),
            r.k,
            r.cost_samples.len(),
            format_float(r.per_state_mean),
            format_float(r.per_state_std_error),
            format_float(a.ergodic_mean),
            format_float(report.perfect_cost_per_state),
            format_float(r.variance),
            opt(a.var_lower),
            opt(a.var_upper),
            opt(a.gap_bound),
            a.logdet_variant,
        );
    }
    out
}

pub fn ks_csv(results: &[KsResult]) -> String {
    let mut out = format!("{KS_HEADER}\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_float(r.beta),
            r.trials,
            format_float(r.ks_statistic),
            format_float(r.p_value)
        );
    }
    out
}

pub fn correlation_csv(rows: &[(f64, usize, f64)]) -> String {
    let mut out = format!("{CORRELATION_HEADER}\n");
    for &(beta, trials, rho) in rows {
        let _ = writeln!(out, "{},{},{}", format_float(beta), trials, format_float(rho));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(2.0), "2");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(123456.78901234567), "123456.789012");
        assert_eq!(format_float(1.5e-7), "1.5e-7");
        assert_eq!(format_float(f64::NAN), "NaN");
        assert_eq!(format_float(-0.0), "-0");
    }
}
