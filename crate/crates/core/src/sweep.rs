//! Rectangular parameter grids evaluated point by point in parallel. Results
//! come back in input order, so output does not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::bipartite::{coupled_fixed_point, BipartiteParams};
use crate::error::{Error, Result};
use crate::io::{csv_line, fmt17};
use crate::measure::SpinMeasure;
use crate::single_party::{thermo_state, ThermoState};

/// Row-major grid: the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid<R> {
    pub rows: Vec<R>,
}

impl<R> SweepGrid<R> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn check_axis(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Precondition(format!("{name} grid is empty")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("{name} grid contains {v}")));
    }
    Ok(())
}

pub const SINGLE_PARTY_HEADER: &str = "beta,h,M,A,f,branch_count,residual";

/// Single-party thermodynamics over `betas × hs`.
pub fn single_party_sweep(
    m: &SpinMeasure,
    betas: &[f64],
    hs: &[f64],
    counting: bool,
) -> Result<SweepGrid<ThermoState>> {
    check_axis("beta", betas)?;
    check_axis("h", hs)?;
    let points: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| hs.iter().map(move |&h| (b, h)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(beta, h)| {
            let s = thermo_state(m, beta, h)?;
            Ok(if counting { s.with_counting(m) } else { s })
        })
        .collect::<Result<_>>()?;
    Ok(SweepGrid { rows })
}

impl SweepGrid<ThermoState> {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SINGLE_PARTY_HEADER}\n");
        for s in &self.rows {
            out.push_str(&csv_line([
                fmt17(s.beta),
                fmt17(s.h),
                fmt17(s.magnetization),
                fmt17(s.pressure),
                fmt17(s.free_energy),
                s.branch_count.to_string(),
                fmt17(s.residual),
            ]));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BipartiteRow {
    pub beta: f64,
    pub alpha: f64,
    pub m_tilde: f64,
    pub n_tilde: f64,
    pub d: f64,
    pub pressure: f64,
    pub free_energy: f64,
    pub branch_count: u8,
}

pub const BIPARTITE_HEADER: &str = "beta,alpha,m_tilde,n_tilde,d,A,f,branch_count";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BipartiteSweepSpec<'a> {
    pub sigma: &'a SpinMeasure,
    pub tau: &'a SpinMeasure,
    pub h1: f64,
    pub h2: f64,
    pub counting: bool,
}

/// Coupled solutions over `betas × alphas` at fixed fields.
pub fn bipartite_sweep(
    spec: BipartiteSweepSpec<'_>,
    betas: &[f64],
    alphas: &[f64],
) -> Result<SweepGrid<BipartiteRow>> {
    check_axis("beta", betas)?;
    check_axis("alpha", alphas)?;
    let points: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| alphas.iter().map(move |&a| (b, a)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(beta, alpha)| {
            let p = BipartiteParams::new(
                beta,
                alpha,
                spec.h1,
                spec.h2,
                spec.sigma.clone(),
                spec.tau.clone(),
            )?;
            let mut s = coupled_fixed_point(&p, (0.0, 0.0))?;
            if spec.counting {
                s = s.with_counting(&p);
            }
            Ok(BipartiteRow {
                beta,
                alpha,
                m_tilde: s.m_tilde,
                n_tilde: s.n_tilde,
                d: s.d,
                pressure: s.pressure_a,
                free_energy: s.free_energy_f,
                branch_count: s.branch_count,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepGrid { rows })
}

impl SweepGrid<BipartiteRow> {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{BIPARTITE_HEADER}\n");
        for r in &self.rows {
            out.push_str(&csv_line([
                fmt17(r.beta),
                fmt17(r.alpha),
                fmt17(r.m_tilde),
                fmt17(r.n_tilde),
                fmt17(r.d),
                fmt17(r.pressure),
                fmt17(r.free_energy),
                r.branch_count.to_string(),
            ]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_beta_major() {
        let d = SpinMeasure::dichotomic();
        let g = single_party_sweep(&d, &[0.5, 2.0], &[-0.1, 0.0, 0.1], false).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!((g.rows[3].beta, g.rows[3].h), (2.0, -0.1));
        let csv = g.to_csv();
        assert!(csv.starts_with("beta,h,M,A,f,branch_count,residual\n"));
        assert_eq!(csv.lines().count(), 7);
        assert_eq!(
            csv,
            single_party_sweep(&d, &[0.5, 2.0], &[-0.1, 0.0, 0.1], false)
                .unwrap()
                .to_csv()
        );
    }

    #[test]
    fn magnetization_switches_on_at_critical_temperature() {
        let d = SpinMeasure::dichotomic();
        let betas: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
        let g = single_party_sweep(&d, &betas, &[0.0], false).unwrap();
        for s in &g.rows {
            if s.beta < 0.99 {
                assert!(s.magnetization.abs() < 1e-9);
            } else if s.beta > 1.01 {
                assert!(s.magnetization > 0.1);
            }
        }
    }

    #[test]
    fn bipartite_rows() {
        let d = SpinMeasure::dichotomic();
        let spec = BipartiteSweepSpec {
            sigma: &d,
            tau: &d,
            h1: 0.0,
            h2: 0.0,
            counting: false,
        };
        let g = bipartite_sweep(spec, &[0.5, 3.0], &[0.25, 1.0]).unwrap();
        assert_eq!(g.len(), 4);
        // β_c = 1/√α: 2 for α = 1/4, 1 for α = 1
        assert!(g.rows[0].m_tilde.abs() < 1e-9 && g.rows[1].m_tilde.abs() < 1e-9);
        assert!(g.rows[2].m_tilde > 0.5 && g.rows[3].m_tilde > 0.5);
        assert!(g.to_csv().starts_with(BIPARTITE_HEADER));
        assert!(bipartite_sweep(spec, &[], &[1.0]).is_err());
    }
}
