//! Characteristics of the free problem and the shock on the `t` axis.
//!
//! Along a characteristic the velocity keeps its boundary value, so the line
//! from `x0` is `x = x0 - s Λ'(x0)` and reaches the axis at `s = x0/Λ'(x0)`.
//! Above the first crossing the magnetization jumps across `x = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{csv_line, fmt17};
use crate::measure::SpinMeasure;
use crate::single_party::{critical_time, hopf_lax, ModelPoint};

/// Offset used for the one-sided limits at the shock line.
pub const LIMIT_STEP: f64 = 1e-6;
/// Decrease of `M` between neighbouring grid points that counts as a
/// violation of `∂ₓM >= 0`.
pub const ENTROPY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Characteristic {
    pub x0: f64,
    pub slope: f64,
    /// Time at which the line reaches `x = 0`; infinite when it never does.
    pub crossing_time: f64,
}

pub fn characteristic(m: &SpinMeasure, x0: f64) -> Result<Characteristic> {
    let mean = m.tilted(x0)?.mean;
    let crossing_time = if x0 == 0.0 || mean == 0.0 {
        f64::INFINITY
    } else {
        x0 / mean
    };
    Ok(Characteristic {
        x0,
        slope: -mean,
        crossing_time,
    })
}

pub fn characteristics(m: &SpinMeasure, x0_grid: &[f64]) -> Result<Vec<Characteristic>> {
    x0_grid.iter().map(|&x0| characteristic(m, x0)).collect()
}

/// Gnuplot-ready table: a comment header and whitespace-separated columns.
pub fn characteristics_table(lines: &[Characteristic]) -> String {
    let mut out = String::from("# x0 slope crossing_time\n");
    for c in lines {
        out.push_str(&format!(
            "{} {} {}\n",
            fmt17(c.x0),
            fmt17(c.slope),
            fmt17(c.crossing_time)
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShockRow {
    pub t: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    /// `|M⁺ + M⁻|`.
    pub rh_residual: f64,
}

impl ShockRow {
    pub fn jump(&self) -> f64 {
        self.m_plus - self.m_minus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockReport {
    pub t_c: f64,
    /// Every requested time, in input order.
    pub rows: Vec<ShockRow>,
    /// Monotonicity violations summed over an `x` scan at every time.
    pub entropy_violations: usize,
}

impl ShockReport {
    pub const CSV_HEADER: &'static str = "t,m_plus,m_minus,rh_residual";

    pub fn supercritical(&self) -> impl Iterator<Item = &ShockRow> {
        self.rows.iter().filter(move |r| r.t > self.t_c)
    }

    pub fn subcritical(&self) -> impl Iterator<Item = &ShockRow> {
        self.rows.iter().filter(move |r| r.t <= self.t_c)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&csv_line([
                fmt17(r.t),
                fmt17(r.m_plus),
                fmt17(r.m_minus),
                fmt17(r.rh_residual),
            ]));
        }
        out
    }
}

/// `lim M(x, t)` as `x → 0` from the side of `sign`, by Richardson
/// extrapolation of `M(±δ)` and `M(±2δ)`: the linear term in `δ` cancels,
/// so the slope `∂ₓM` near the origin (large close to `t_c`) does not leak
/// into the limit.
pub fn one_sided_limit(m: &SpinMeasure, t: f64, sign: f64) -> Result<f64> {
    let at = |x: f64| -> Result<f64> { Ok(hopf_lax(m, ModelPoint::new(x, t)?)?.magnetization_m) };
    let d = sign.signum() * LIMIT_STEP;
    Ok(2.0 * at(d)? - at(2.0 * d)?)
}

pub fn shock_row(m: &SpinMeasure, t: f64) -> Result<ShockRow> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let m_plus = one_sided_limit(m, t, 1.0)?;
    let m_minus = one_sided_limit(m, t, -1.0)?;
    Ok(ShockRow {
        t,
        m_plus,
        m_minus,
        rh_residual: (m_plus + m_minus).abs(),
    })
}

/// Symmetric scan grid used by [`detect_shock`]: `n` points on `[-tL, tL]`.
pub fn default_x_grid(m: &SpinMeasure, t: f64, n: usize) -> Vec<f64> {
    let reach = (t * m.support_width()).max(1.0);
    (0..n)
        .map(|i| -reach + 2.0 * reach * i as f64 / (n - 1) as f64)
        .collect()
}

pub fn detect_shock(m: &SpinMeasure, t_grid: &[f64]) -> Result<ShockReport> {
    let t_c = critical_time(m).t_c;
    let per_t: Vec<(ShockRow, usize)> = t_grid
        .par_iter()
        .map(|&t| -> Result<_> {
            let row = shock_row(m, t)?;
            let v = entropy_scan(m, t, &default_x_grid(m, t, 401))?;
            Ok((row, v))
        })
        .collect::<Result<_>>()?;
    Ok(ShockReport {
        t_c,
        entropy_violations: per_t.iter().map(|r| r.1).sum(),
        rows: per_t.into_iter().map(|r| r.0).collect(),
    })
}

/// Number of adjacent pairs with `M(x_{i+1}) - M(x_i) < -1e-9`.
pub fn count_violations(magnetizations: &[f64]) -> usize {
    magnetizations
        .windows(2)
        .filter(|w| w[1] - w[0] < -ENTROPY_TOL)
        .count()
}

pub fn entropy_scan(m: &SpinMeasure, t: f64, x_grid: &[f64]) -> Result<usize> {
    if x_grid
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
    {
        return Err(Error::Precondition(
            "x grid must be strictly increasing".into(),
        ));
    }
    let ms: Vec<f64> = x_grid
        .iter()
        .map(|&x| Ok(hopf_lax(m, ModelPoint::new(x, t)?)?.magnetization_m))
        .collect::<Result<_>>()?;
    Ok(count_violations(&ms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn characteristic_examples() {
        let d = SpinMeasure::dichotomic();
        let c = characteristic(&d, 0.0).unwrap();
        assert_eq!(c.slope, 0.0);
        assert!(c.crossing_time.is_infinite());
        let c = characteristic(&d, 1.0).unwrap();
        assert_abs_diff_eq!(c.slope, -1f64.tanh(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.crossing_time, 1.313_035_285_499_331, epsilon = 1e-12);
        let u = SpinMeasure::uniform(2.0).unwrap();
        let small = characteristic(&u, 1e-4).unwrap().crossing_time;
        assert_abs_diff_eq!(small, 3.0, epsilon = 1e-7);
        assert!(characteristic(&d, -0.5).unwrap().crossing_time > 0.0);
    }

    #[test]
    fn limits_match_branches_at_origin() {
        let d = SpinMeasure::dichotomic();
        let row = shock_row(&d, 2.0).unwrap();
        let at0 = hopf_lax(&d, ModelPoint::new(0.0, 2.0).unwrap()).unwrap();
        assert_abs_diff_eq!(row.m_plus, at0.magnetization_m, epsilon = 1e-10);
        assert_abs_diff_eq!(row.m_minus, at0.other_branch.unwrap(), epsilon = 1e-10);
        assert_abs_diff_eq!(row.m_plus, 0.957_504_024_195_1, epsilon = 1e-9);
        assert!(row.rh_residual <= 1e-7);
    }

    #[test]
    fn no_jump_below_critical_time() {
        let d = SpinMeasure::dichotomic();
        for t in [0.5, 0.9, 0.99] {
            let row = shock_row(&d, t).unwrap();
            assert!(row.jump().abs() <= 1e-8, "t = {t}: {}", row.jump());
        }
    }

    #[test]
    fn uniform_shock() {
        let u = SpinMeasure::uniform(2.0).unwrap();
        let r = detect_shock(&u, &[2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.t_c, 3.0, epsilon = 1e-6);
        let above: Vec<_> = r.supercritical().collect();
        assert_eq!(above.len(), 1);
        assert!(above[0].m_plus > 0.1 && above[0].rh_residual <= 1e-7);
        assert_eq!(r.entropy_violations, 0);
        assert!(r.to_csv().starts_with("t,m_plus,m_minus,rh_residual\n"));
    }

    #[test]
    fn corrupted_branch_is_flagged() {
        let d = SpinMeasure::dichotomic();
        let grid: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
        let mut ms: Vec<f64> = grid
            .iter()
            .map(|&x| {
                hopf_lax(&d, ModelPoint::new(x, 2.0).unwrap())
                    .unwrap()
                    .magnetization_m
            })
            .collect();
        assert_eq!(count_violations(&ms), 0);
        ms[30] = -ms[30];
        assert!(count_violations(&ms) >= 1);
        assert_eq!(entropy_scan(&d, 0.1, &grid).unwrap(), 0);
        assert!(entropy_scan(&d, 0.1, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn crossing_infimum_is_critical_time() {
        let three = SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap();
        let grid: Vec<f64> = (0..2000).map(|i| 1e-6 * 1.01f64.powi(i)).collect();
        let inf = characteristics(&three, &grid)
            .unwrap()
            .iter()
            .map(|c| c.crossing_time)
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(inf, critical_time(&three).t_c, epsilon = 1e-6);
        let table = characteristics_table(&characteristics(&three, &grid[..3]).unwrap());
        assert_eq!(table.lines().count(), 4);
    }
}
