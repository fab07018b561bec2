//! Browser bindings: asymptotic cost curve, variance bounds and a small
//! Monte Carlo estimate for a bundled grid.

use stealthrmt_core::grid_io::CaseSource;
use stealthrmt_core::harness::{self, Scenario};
use stealthrmt_core::rmt::{self, LogdetVariant};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Grid {
    scenario: Scenario,
}

fn build(case: &str, r: f64, snr_db: f64) -> Result<Scenario, String> {
    if !(0.0..1.0).contains(&r) {
        return Err(format!("r must lie in [0, 1), got {r}"));
    }
    let grid = CaseSource::Builtin(case.to_string()).load().map_err(|e| e.to_string())?;
    Scenario::from_case(&grid, r, snr_db).map_err(|e| e.to_string())
}

fn ergodic_curve(sc: &Scenario, betas: &[f64]) -> Result<Vec<f64>, String> {
    let aed = sc.profile.aed();
    betas.iter().map(|&b| rmt::ergodic_performance(&aed, b).map_err(|e| e.to_string())).collect()
}

// [lower, upper, gap cap] per beta; NaN where undefined.
fn bounds_curve(sc: &Scenario, betas: &[f64], variant: &str) -> Result<Vec<f64>, String> {
    let variant = LogdetVariant::from_name(variant).ok_or_else(|| format!("unknown variant '{variant}'"))?;
    let aed = sc.profile.aed();
    let mut out = Vec::with_capacity(3 * betas.len());
    for &b in betas {
        let (lo, hi) = rmt::variance_bounds(&aed, b, variant).unwrap_or((f64::NAN, f64::NAN));
        out.extend([lo, hi, rmt::gap_bound(b).unwrap_or(f64::NAN)]);
    }
    Ok(out)
}

// [mean, std error] of the per-state cost, spectral form.
fn monte_carlo(sc: &Scenario, beta: f64, trials: usize, seed: u64) -> Result<Vec<f64>, String> {
    if trials < 2 {
        return Err("need at least two trials".into());
    }
    let n = sc.n() as f64;
    let costs: Vec<f64> = harness::equivalent_cost_samples(sc.profile.lambdas(), beta, trials, seed, 0)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|p| p.cost() / n)
        .collect();
    let mean = stealthrmt_core::stats::mean(&costs);
    let se = (stealthrmt_core::stats::variance(&costs) / trials as f64).sqrt();
    Ok(vec![mean, se])
}

#[wasm_bindgen]
impl Grid {
    /// `case` is `ieee30` or `ieee118`.
    #[wasm_bindgen(constructor)]
    pub fn new(case: &str, r: f64, snr_db: f64) -> Result<Grid, JsError> {
        build(case, r, snr_db).map(|scenario| Grid { scenario }).map_err(|e| JsError::new(&e))
    }

    pub fn states(&self) -> usize {
        self.scenario.n()
    }

    pub fn measurements(&self) -> usize {
        self.scenario.m()
    }

    /// Perfect-knowledge cost per state.
    #[wasm_bindgen(js_name = perfectCost)]
    pub fn perfect_cost(&self) -> f64 {
        0.5 * self.scenario.profile.theta()
    }

    #[wasm_bindgen(js_name = ergodicCurve)]
    pub fn ergodic_curve(&self, betas: &[f64]) -> Result<Vec<f64>, JsError> {
        ergodic_curve(&self.scenario, betas).map_err(|e| JsError::new(&e))
    }

    /// Flattened `[lower, upper, gap cap]` triples.
    #[wasm_bindgen(js_name = varianceBounds)]
    pub fn variance_bounds(&self, betas: &[f64], variant: &str) -> Result<Vec<f64>, JsError> {
        bounds_curve(&self.scenario, betas, variant).map_err(|e| JsError::new(&e))
    }

    /// `[mean, std error]` of the per-state cost over `trials` draws.
    #[wasm_bindgen(js_name = monteCarlo)]
    pub fn monte_carlo(&self, beta: f64, trials: usize, seed: u64) -> Result<Vec<f64>, JsError> {
        monte_carlo(&self.scenario, beta, trials, seed).map_err(|e| JsError::new(&e))
    }
}
