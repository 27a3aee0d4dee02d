//! Self-contained invariant suite run by `mfhj check`.

use serde::Serialize;

use crate::bipartite::{coupled_fixed_point, minmax_solve, trial_curvature, BipartiteParams};
use crate::error::Result;
use crate::finite_n::{lemma1_check, phi_n_exact, phi_n_quadrature};
use crate::measure::SpinMeasure;
use crate::shock::{entropy_scan, shock_row};
use crate::single_party::{critical_time, hopf_lax, self_consistent_m, ModelPoint};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub quick: bool,
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

pub fn builtin_measures() -> Vec<(&'static str, SpinMeasure)> {
    vec![
        ("dichotomic", SpinMeasure::dichotomic()),
        ("uniform", SpinMeasure::uniform(2.0).expect("valid width")),
        (
            "three_atoms",
            SpinMeasure::equally_spaced_atoms(3, 2.0).expect("valid atoms"),
        ),
    ]
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn record(name: &'static str, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

pub fn run_checks(quick: bool) -> Result<CheckReport> {
    let n = if quick { 11 } else { 41 };
    let measures = builtin_measures();
    let mut results = Vec::new();

    // measure symmetry and monotonicity
    let mut worst: f64 = 0.0;
    for (_, m) in &measures {
        let hw = m.half_width();
        worst = worst.max(m.log_mgf(0.0)?.abs());
        let xs = linspace(-6.0, 6.0, 4 * n + 1);
        let mut prev = f64::NEG_INFINITY;
        for &x in &xs {
            let s = m.tilted(x)?;
            let r = m.tilted(-x)?;
            worst = worst
                .max((s.log_mgf - r.log_mgf).abs())
                .max((s.mean + r.mean).abs())
                .max((prev - s.mean).max(0.0))
                .max((-s.variance).max(0.0))
                .max((s.mean.abs() - hw).max(0.0));
            prev = s.mean;
        }
    }
    results.push(record("measure_symmetry", worst, 1e-10));

    // dichotomic self-consistency is the hyperbolic tangent
    let d = SpinMeasure::dichotomic();
    let mut worst: f64 = 0.0;
    for &x in &linspace(-1.0, 1.0, n) {
        for &t in &linspace(0.05, 3.0, n) {
            let p = ModelPoint::new(x, t)?;
            let seed = if x >= 0.0 { 1.0 } else { -1.0 };
            let m = self_consistent_m(&d, p, seed)?;
            worst = worst.max((m - (x + t * m).tanh()).abs());
        }
    }
    results.push(record("dichotomic_tanh", worst, 1e-12));

    // critical times
    let expected = [1.0, 3.0, 1.5];
    let worst = measures
        .iter()
        .zip(expected)
        .map(|((_, m), e)| (critical_time(m).t_c - e).abs())
        .fold(0.0, f64::max);
    results.push(record("critical_time", worst, 1e-4));

    // derivative of the action is minus the magnetization
    let mut worst: f64 = 0.0;
    for (_, m) in &measures {
        for &x in &[-0.7, 0.2, 0.9] {
            for &t in &[0.5, 2.0] {
                let e = 1e-5;
                let at =
                    |x: f64| -> Result<f64> { Ok(hopf_lax(m, ModelPoint::new(x, t)?)?.action_phi) };
                let fd = (at(x + e)? - at(x - e)?) / (2.0 * e);
                let mag = hopf_lax(m, ModelPoint::new(x, t)?)?.magnetization_m;
                worst = worst.max((fd + mag).abs() / mag.abs().max(1e-3));
            }
        }
    }
    results.push(record("action_gradient", worst, 1e-5));

    // shock symmetry above the critical time, no jump below
    let mut worst: f64 = 0.0;
    for (_, m) in &measures {
        let tc = critical_time(m).t_c;
        for &k in &[0.5, 0.9, 1.5, 3.0] {
            let row = shock_row(m, k * tc)?;
            let bad = if k < 1.0 {
                row.jump().abs() * 10.0
            } else {
                row.rh_residual
            };
            worst = worst.max(bad);
        }
    }
    results.push(record("shock_symmetry", worst, 1e-7));

    // entropy condition
    let mut violations = 0usize;
    for (_, m) in &measures {
        for &t in &linspace(0.2, 4.0, if quick { 4 } else { 20 }) {
            violations += entropy_scan(m, t, &linspace(-2.0, 2.0, if quick { 101 } else { 401 }))?;
        }
    }
    results.push(record("entropy_condition", violations as f64, 0.0));

    // finite-size bounds
    let mut worst: f64 = 0.0;
    let three = &measures[2].1;
    for m in [&d, three] {
        for &size in &[2usize, 4, 8] {
            for &x in &[-0.5, 0.0, 0.8] {
                for &t in &[0.3, 1.0, 2.5] {
                    let c = lemma1_check(m, ModelPoint::new(x, t)?, size)?;
                    worst = worst.max(-c.margin());
                }
            }
        }
    }
    results.push(record("finite_size_bound", worst, 0.0));

    let mut worst: f64 = 0.0;
    for &size in &[3usize, 7, 10] {
        for &(x, t) in &[(0.0, 0.5), (0.3, 1.5), (-0.6, 2.5)] {
            let p = ModelPoint::new(x, t)?;
            worst = worst.max((phi_n_quadrature(&d, p, size)? - phi_n_exact(&d, p, size)?).abs());
        }
    }
    results.push(record("gaussian_linearization", worst, 1e-9));

    // bipartite: reduction at zero coupling ratio and two-method agreement
    let mut worst: f64 = 0.0;
    for &beta in &[0.3, 1.0, 2.5] {
        for &h1 in &[-0.5, 0.0, 0.7] {
            let p = BipartiteParams::dichotomic(beta, 0.0, h1, 0.2)?;
            let a = coupled_fixed_point(&p, (0.0, 0.0))?
                .with_counting(&p)
                .pressure_a;
            worst = worst.max((a - 2f64.ln() - (beta * h1).cosh().ln()).abs());
        }
    }
    results.push(record("bipartite_zero_alpha", worst, 1e-10));

    let mut worst: f64 = 0.0;
    let mut grad: f64 = 0.0;
    let draws: &[(f64, f64, f64, f64)] = if quick {
        &[(0.7, 0.5, 0.3, -0.2), (2.0, 1.0, 0.1, 0.4)]
    } else {
        &[
            (0.7, 0.5, 0.3, -0.2),
            (2.0, 1.0, 0.1, 0.4),
            (2.8, 1.7, -0.9, 0.05),
            (1.2, 0.3, 0.0, -0.6),
            (0.2, 2.0, 0.5, 0.5),
        ]
    };
    for &(beta, alpha, h1, h2) in draws {
        for (_, sigma) in &measures {
            let p = BipartiteParams::new(beta, alpha, h1, h2, sigma.clone(), d.clone())?;
            let a = coupled_fixed_point(&p, (0.0, 0.0))?;
            let b = minmax_solve(&p)?;
            worst = worst
                .max((a.m_tilde - b.m_tilde).abs())
                .max((a.n_tilde - b.n_tilde).abs())
                .max((a.free_energy_f - b.free_energy_f).abs());
            grad = grad.max(trial_curvature(&p, a.m_tilde, a.n_tilde).gradient_norm());
        }
    }
    results.push(record("bipartite_minmax_agreement", worst, 1e-8));
    results.push(record("bipartite_stationarity", grad, 1e-6));

    Ok(CheckReport { quick, results })
}
