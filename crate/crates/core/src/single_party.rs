//! Thermodynamic limit of the one-party model.
//!
//! In mechanical coordinates the negative pressure is the action
//! `φ(x, t) = min_y { (x - y)² / 2t - Λ(y) }`. The minimizer is
//! `y = x + t M`, where the magnetization `M` solves `M = Λ'(x + t M)`.
//! Physical parameters map to `x = β h`, `t = β`.

use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};
use crate::measure::SpinMeasure;
use crate::optimize::{bisect, bracket_minima, golden_section_min, polish_minimum};

/// Samples of the coarse scan that brackets local minima of the Hopf-Lax objective.
pub const SCAN_POINTS: usize = 257;
/// Target absolute residual of the self-consistency equation.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Damping of the plain fixed-point iteration.
pub const DAMPING: f64 = 0.5;

const SHOCK_LINE_TOL: f64 = 1e-14;
const MAX_DAMPED_STEPS: usize = 400;

/// Mechanical coordinates: `x` plays the external field, `t` the inverse temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub x: f64,
    pub t: f64,
}

impl ModelPoint {
    pub fn new(x: f64, t: f64) -> Result<Self> {
        finite("x", x)?;
        finite("t", t)?;
        if t < 0.0 {
            return Err(Error::Domain {
                what: "t",
                value: t,
            });
        }
        Ok(ModelPoint { x, t })
    }

    /// `(β, h) -> (x, t) = (β h, β)`.
    pub fn thermodynamic(beta: f64, h: f64) -> Result<Self> {
        finite("h", h)?;
        Self::new(beta * h, beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinglePartySolution {
    pub point: ModelPoint,
    pub minimizer_y: f64,
    pub action_phi: f64,
    pub pressure_a: f64,
    pub magnetization_m: f64,
    /// `φ / t`.
    pub free_energy_f: f64,
    pub branch_count: u8,
    pub residual: f64,
    /// Magnetization of the second global minimizer on the shock line.
    pub other_branch: Option<f64>,
}

/// Variational (Hopf-Lax) solution at `p`, `p.t > 0`.
///
/// All local minima of the objective are bracketed by a coarse scan of the
/// confinement interval `|y - x| <= t L/2`, refined by golden-section search
/// and polished on the stationarity condition. The global minimum wins; on
/// the shock line (`x = 0`, two symmetric minima) the nonnegative branch is
/// reported and `branch_count = 2`.
pub fn hopf_lax(m: &SpinMeasure, p: ModelPoint) -> Result<SinglePartySolution> {
    let ModelPoint { x, t } = p;
    finite("x", x)?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    let hw = m.half_width();
    let reach = t * hw;
    let slack = 0.01 * reach + 1e-9;
    let (lo, hi) = (x - reach - slack, x + reach + slack);
    let objective = |y: f64| (x - y) * (x - y) / (2.0 * t) - m.lambda(y);
    let stationarity = |mag: f64| mag - m.mean(x + t * mag);
    let edge = 1e-12 * (hi - lo);

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for (a, b) in bracket_minima(objective, lo, hi, SCAN_POINTS) {
        let tol = 1e-12 * (1.0 + (b - a));
        let (y, _) = golden_section_min(objective, a, b, tol);
        if y - lo <= edge || hi - y <= edge {
            return Err(Error::Confinement(y));
        }
        let guess = (y - x) / t;
        let mag =
            polish_minimum(stationarity, guess, -hw - slack / t, hw + slack / t).unwrap_or(guess);
        let value = 0.5 * t * mag * mag - m.lambda(x + t * mag);
        if !candidates.iter().any(|c| (c.0 - mag).abs() < 1e-9) {
            candidates.push((mag, value));
        }
    }
    let best = candidates
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::Confinement(x))?;
    let tie = 1e-13 * (1.0 + best.1.abs());
    let mut branches: Vec<f64> = candidates
        .iter()
        .filter(|c| c.1 - best.1 <= tie)
        .map(|c| c.0)
        .collect();
    branches.sort_by(|a, b| b.total_cmp(a));

    let (mag, other) = if x.abs() <= SHOCK_LINE_TOL && best.0.abs() > 1e-9 {
        (best.0.abs(), Some(-best.0.abs()))
    } else if branches.len() > 1 && (branches[0] - branches[branches.len() - 1]).abs() > 1e-8 {
        (branches[0], Some(branches[branches.len() - 1]))
    } else {
        (best.0, None)
    };
    let phi = 0.5 * t * mag * mag - m.lambda(x + t * mag);
    Ok(SinglePartySolution {
        point: p,
        minimizer_y: x + t * mag,
        action_phi: phi,
        pressure_a: -phi,
        magnetization_m: mag,
        free_energy_f: phi / t,
        branch_count: if other.is_some() { 2 } else { 1 },
        residual: stationarity(mag).abs(),
        other_branch: other,
    })
}

/// `φ(x, 0) = -Λ(x)`.
pub fn boundary_action(m: &SpinMeasure, x: f64) -> Result<f64> {
    Ok(-m.log_mgf(x)?)
}

/// Solve `M = Λ'(x + t M)` starting from `seed`.
///
/// Damped iteration `M <- (1 - ω) M + ω Λ'(x + t M)`; when it stalls or
/// oscillates the nearest sign change of `M - Λ'(x + t M)` in the direction
/// of travel is bisected instead.
pub fn self_consistent_m(m: &SpinMeasure, p: ModelPoint, seed: f64) -> Result<f64> {
    let ModelPoint { x, t } = p;
    finite("x", x)?;
    finite("seed", seed)?;
    if t < 0.0 || !t.is_finite() {
        return Err(Error::Domain {
            what: "t",
            value: t,
        });
    }
    let hw = m.half_width();
    if seed.abs() > hw * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::Domain {
            what: "seed",
            value: seed,
        });
    }
    let g = |mag: f64| mag - m.mean(x + t * mag);

    let mut mag = seed;
    let mut last_residual = f64::INFINITY;
    let mut stalled = 0;
    let mut prev_sign = 0.0;
    let mut flips = 0;
    for _ in 0..MAX_DAMPED_STEPS {
        let r = g(mag);
        if r.abs() <= FIXED_POINT_TOL {
            return Ok(newton_polish(m, p, mag));
        }
        if r.signum() == -prev_sign {
            flips += 1;
        }
        prev_sign = r.signum();
        if r.abs() > 0.999 * last_residual {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if stalled > 20 || flips > 8 {
            break;
        }
        last_residual = r.abs();
        mag -= DAMPING * r;
    }

    // bracket the nearest root in the direction the iteration was moving
    let r = g(mag);
    let direction = if r < 0.0 { 1.0 } else { -1.0 };
    let limit = direction * hw;
    let mut step = 1e-6 * hw.max(1e-300);
    let mut near = mag;
    let root = loop {
        let far = if direction > 0.0 {
            (mag + step).min(limit)
        } else {
            (mag - step).max(limit)
        };
        let gf = g(far);
        if gf == 0.0 || gf.signum() != r.signum() {
            break bisect(g, near, far);
        }
        if far == limit {
            break far;
        }
        near = far;
        step *= 2.0;
    };
    let residual = g(root).abs();
    if residual <= FIXED_POINT_TOL {
        Ok(newton_polish(m, p, root))
    } else {
        Err(Error::NonConvergence {
            solver: "self-consistency",
            last: root,
            residual,
        })
    }
}

/// A few Newton steps on an accepted root, kept only while the residual drops.
fn newton_polish(m: &SpinMeasure, p: ModelPoint, mut mag: f64) -> f64 {
    let hw = m.half_width();
    let mut best = (mag - m.mean(p.x + p.t * mag)).abs();
    for _ in 0..3 {
        let Ok(s) = m.tilted(p.x + p.t * mag) else {
            break;
        };
        let slope = 1.0 - p.t * s.variance;
        if best == 0.0 || slope.abs() < 1e-8 {
            break;
        }
        let next = (mag - (mag - s.mean) / slope).clamp(-hw, hw);
        let r = (next - m.mean(p.x + p.t * next)).abs();
        if r >= best {
            break;
        }
        mag = next;
        best = r;
    }
    mag
}

/// Equilibrium quantities at physical `(β, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoState {
    pub beta: f64,
    pub h: f64,
    pub magnetization: f64,
    /// `A = log E e^{-βH} / N` in the limit, normalized expectation convention.
    pub pressure: f64,
    /// `f = -A / β`.
    pub free_energy: f64,
    pub branch_count: u8,
    pub residual: f64,
}

impl ThermoState {
    /// Shift to the counting convention (`E` replaced by an unnormalized sum
    /// over atoms): `A + log K`, `f - log K / β`.
    pub fn with_counting(mut self, m: &SpinMeasure) -> Self {
        let c = m.counting_constant();
        self.pressure += c;
        self.free_energy -= c / self.beta;
        self
    }
}

pub fn thermo_state(m: &SpinMeasure, beta: f64, h: f64) -> Result<ThermoState> {
    finite("beta", beta)?;
    if beta <= 0.0 {
        return Err(Error::Domain {
            what: "beta",
            value: beta,
        });
    }
    let sol = hopf_lax(m, ModelPoint::thermodynamic(beta, h)?)?;
    Ok(ThermoState {
        beta,
        h,
        magnetization: sol.magnetization_m,
        pressure: sol.pressure_a,
        free_energy: sol.free_energy_f,
        branch_count: sol.branch_count,
        residual: sol.residual,
    })
}

/// `f(β, h) = M²/2 - Λ(β h + β M) / β` on the global branch.
pub fn free_energy(m: &SpinMeasure, beta: f64, h: f64) -> Result<f64> {
    Ok(thermo_state(m, beta, h)?.free_energy)
}

/// Onset of the shock at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalTime {
    /// First crossing of characteristics: `inf_{x0 > 0} x0 / Λ'(x0)`.
    pub t_c: f64,
    /// `1 / Λ''(0)`; equals `t_c` whenever `Λ'` is concave on `x > 0`.
    pub curvature_t_c: f64,
    /// `sup_{x0} Λ'(x0) / x0`, the reciprocal quantity.
    pub sup_slope: f64,
    /// `t_c` and `1 / Λ''(0)` disagree: the minimum crossing time is reached
    /// away from the origin.
    pub first_order_candidate: bool,
}

pub fn critical_time(m: &SpinMeasure) -> CriticalTime {
    let var = m.variance();
    if var <= 0.0 {
        return CriticalTime {
            t_c: f64::INFINITY,
            curvature_t_c: f64::INFINITY,
            sup_slope: 0.0,
            first_order_candidate: false,
        };
    }
    let crossing = |u: f64| {
        let x0 = u.exp();
        x0 / m.mean(x0)
    };
    let lo = 1e-8_f64.ln();
    let hi = (10.0 * m.support_width()).ln();
    let n = 400;
    let us: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let (imin, _) = us
        .iter()
        .map(|&u| crossing(u))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let t_c = if imin == 0 {
        crossing(us[0])
    } else {
        let b = us[(imin + 1).min(n - 1)];
        golden_section_min(crossing, us[imin - 1], b, 1e-10).1
    };
    let curvature_t_c = 1.0 / var;
    let t_c = t_c.min(curvature_t_c);
    CriticalTime {
        t_c,
        curvature_t_c,
        sup_slope: 1.0 / t_c,
        first_order_candidate: (curvature_t_c - t_c) > 1e-9 * curvature_t_c,
    }
}
