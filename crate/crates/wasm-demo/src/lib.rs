//! Browser bindings for the demo page. Every export returns a JSON string.

use mfhj_core::bipartite::{coupled_fixed_point, linearized_critical_beta, BipartiteParams};
use mfhj_core::shock::{default_x_grid, shock_row};
use mfhj_core::single_party::{critical_time, hopf_lax, thermo_state, ModelPoint};
use mfhj_core::SpinMeasure;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn measure(name: &str) -> Result<SpinMeasure, String> {
    let m = match name {
        "dichotomic" => SpinMeasure::dichotomic(),
        "uniform" => SpinMeasure::uniform(2.0).map_err(|e| e.to_string())?,
        "three_atoms" => SpinMeasure::equally_spaced_atoms(3, 2.0).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown measure '{other}'")),
    };
    Ok(m)
}

fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Magnetization and free energy along a `β` range at fixed `h`.
pub fn magnetization_curve_json(
    name: &str,
    beta_min: f64,
    beta_max: f64,
    points: usize,
    h: f64,
) -> Result<String, String> {
    let m = measure(name)?;
    if !(beta_min > 0.0 && beta_max > beta_min) {
        return Err("need 0 < beta_min < beta_max".into());
    }
    let betas = grid(beta_min, beta_max, points);
    let mut mags = Vec::with_capacity(betas.len());
    let mut free = Vec::with_capacity(betas.len());
    for &b in &betas {
        let s = thermo_state(&m, b, h).map_err(|e| e.to_string())?;
        mags.push(s.magnetization);
        free.push(s.free_energy);
    }
    Ok(json!({
        "beta": betas,
        "magnetization": mags,
        "free_energy": free,
        "beta_c": critical_time(&m).t_c,
    })
    .to_string())
}

/// Profile `M(x)` at time `t` with the one-sided limits at the origin.
pub fn shock_profile_json(name: &str, t: f64, points: usize) -> Result<String, String> {
    let m = measure(name)?;
    if !t.is_finite() || t <= 0.0 {
        return Err("need t > 0".into());
    }
    let xs = default_x_grid(&m, t, points.max(3));
    let mut mags = Vec::with_capacity(xs.len());
    for &x in &xs {
        let p = ModelPoint::new(x, t).map_err(|e| e.to_string())?;
        mags.push(hopf_lax(&m, p).map_err(|e| e.to_string())?.magnetization_m);
    }
    let row = shock_row(&m, t).map_err(|e| e.to_string())?;
    Ok(json!({
        "x": xs,
        "magnetization": mags,
        "m_plus": row.m_plus,
        "m_minus": row.m_minus,
        "t_c": critical_time(&m).t_c,
    })
    .to_string())
}

pub fn bipartite_json(
    sigma: &str,
    tau: &str,
    beta: f64,
    alpha: f64,
    h1: f64,
    h2: f64,
) -> Result<String, String> {
    let (s, t) = (measure(sigma)?, measure(tau)?);
    let beta_c = linearized_critical_beta(&s, &t, alpha);
    let p = BipartiteParams::new(beta, alpha, h1, h2, s, t).map_err(|e| e.to_string())?;
    let sol = coupled_fixed_point(&p, (0.0, 0.0)).map_err(|e| e.to_string())?;
    Ok(json!({
        "m_tilde": sol.m_tilde,
        "n_tilde": sol.n_tilde,
        "d": sol.d,
        "pressure": sol.pressure_a,
        "free_energy": sol.free_energy_f,
        "branch_count": sol.branch_count,
        "beta_c": if beta_c.is_finite() { json!(beta_c) } else { json!(null) },
    })
    .to_string())
}

#[wasm_bindgen]
pub fn magnetization_curve(
    name: &str,
    beta_min: f64,
    beta_max: f64,
    points: usize,
    h: f64,
) -> Result<String, JsError> {
    magnetization_curve_json(name, beta_min, beta_max, points, h).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn shock_profile(name: &str, t: f64, points: usize) -> Result<String, JsError> {
    shock_profile_json(name, t, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bipartite(
    sigma: &str,
    tau: &str,
    beta: f64,
    alpha: f64,
    h1: f64,
    h2: f64,
) -> Result<String, JsError> {
    bipartite_json(sigma, tau, beta, alpha, h1, h2).map_err(|e| JsError::new(&e))
}
