//! Two interacting parties: `N₁` spins σ coupled only to `N₂ = α N₁` spins τ.
//!
//! With mechanical fields `βh₁`, `βh₂` the order parameters solve
//! `M̃ = Λσ'(βh₁ + αβÑ)`, `Ñ = Λτ'(βh₂ + βM̃)` and the pressure per σ-spin is
//! `A = -αβM̃Ñ + Λσ(βh₁ + αβÑ) + αΛτ(βh₂ + βM̃)`. The same point is a
//! stationary point of the trial functional
//! `f(M, N) = αMN - Λσ(βh₁ + αβN)/β - αΛτ(βh₂ + βM)/β`, selected as
//! `min over N of max over M`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::finite_n::{occupation_count, occupation_terms, Enumeration, ENUMERATION_BUDGET};
use crate::io::{csv_line, fmt17};
use crate::measure::SpinMeasure;
use crate::optimize::{bisect, bracket_minima, golden_section_min, polish_minimum};
use crate::quadrature::{log_sum_exp, PanelQuadrature};
use crate::single_party::{hopf_lax, ModelPoint, DAMPING, FIXED_POINT_TOL, SCAN_POINTS};

const MAX_DAMPED_STEPS: usize = 300;
const MAX_NEWTON_STEPS: usize = 100;
/// Two stationary points closer than this are the same point.
const SAME_POINT: f64 = 1e-9;
/// Relative difference of trial values below which two branches tie.
const TIE_TOL: f64 = 1e-12;
/// `|M̃|` above which the zero-field state counts as ordered.
pub const ORDER_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteParams {
    pub beta: f64,
    pub alpha: f64,
    pub h1: f64,
    pub h2: f64,
    pub sigma: SpinMeasure,
    pub tau: SpinMeasure,
}

impl BipartiteParams {
    pub fn new(
        beta: f64,
        alpha: f64,
        h1: f64,
        h2: f64,
        sigma: SpinMeasure,
        tau: SpinMeasure,
    ) -> Result<Self> {
        finite("beta", beta)?;
        finite("alpha", alpha)?;
        finite("h1", h1)?;
        finite("h2", h2)?;
        if beta <= 0.0 {
            return Err(Error::Domain {
                what: "beta",
                value: beta,
            });
        }
        if alpha < 0.0 {
            return Err(Error::Domain {
                what: "alpha",
                value: alpha,
            });
        }
        Ok(BipartiteParams {
            beta,
            alpha,
            h1,
            h2,
            sigma,
            tau,
        })
    }

    pub fn dichotomic(beta: f64, alpha: f64, h1: f64, h2: f64) -> Result<Self> {
        Self::new(
            beta,
            alpha,
            h1,
            h2,
            SpinMeasure::dichotomic(),
            SpinMeasure::dichotomic(),
        )
    }

    fn tilt_sigma(&self, n: f64) -> f64 {
        self.beta * self.h1 + self.alpha * self.beta * n
    }

    fn tilt_tau(&self, m: f64) -> f64 {
        self.beta * self.h2 + self.beta * m
    }

    /// `log K_σ + α log K_τ`, the per-σ-spin counting constant.
    pub fn counting_constant(&self) -> f64 {
        let tau = if self.alpha == 0.0 {
            0.0
        } else {
            self.alpha * self.tau.counting_constant()
        };
        self.sigma.counting_constant() + tau
    }

    /// Unchecked trial functional.
    fn trial(&self, m: f64, n: f64) -> f64 {
        if self.alpha == 0.0 {
            return -self.sigma.lambda(self.beta * self.h1) / self.beta;
        }
        self.alpha * m * n
            - self.sigma.lambda(self.tilt_sigma(n)) / self.beta
            - self.alpha * self.tau.lambda(self.tilt_tau(m)) / self.beta
    }

    fn residuals(&self, m: f64, n: f64) -> (f64, f64) {
        (
            (m - self.sigma.mean(self.tilt_sigma(n))).abs(),
            (n - self.tau.mean(self.tilt_tau(m))).abs(),
        )
    }

    fn solution(&self, m: f64, n: f64) -> BipartiteSolution {
        let f = self.trial(m, n);
        BipartiteSolution {
            m_tilde: m,
            n_tilde: n,
            d: m - self.alpha * n,
            pressure_a: -self.beta * f,
            free_energy_f: f,
            residuals: self.residuals(m, n),
            branch_count: 1,
            other_branch: None,
            cross_order_gap: None,
        }
    }

    /// Closed-form solution when one party cannot respond: `α = 0` or a
    /// point mass on either side.
    fn degenerate(&self) -> Option<BipartiteSolution> {
        let (m, n) = if self.alpha == 0.0 || self.tau.half_width() == 0.0 {
            let m = self.sigma.mean(self.beta * self.h1);
            (m, self.tau.mean(self.tilt_tau(m)))
        } else if self.sigma.half_width() == 0.0 {
            (0.0, self.tau.mean(self.beta * self.h2))
        } else {
            return None;
        };
        let mut s = self.solution(m, n);
        s.cross_order_gap = Some(0.0);
        Some(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipartiteSolution {
    pub m_tilde: f64,
    pub n_tilde: f64,
    /// `M̃ - αÑ`.
    pub d: f64,
    pub pressure_a: f64,
    pub free_energy_f: f64,
    pub residuals: (f64, f64),
    pub branch_count: u8,
    /// The mirror branch `(M̃, Ñ)` when two branches tie.
    pub other_branch: Option<(f64, f64)>,
    /// `|min_N max_M f - min_M max_N f|`, set by [`minmax_solve`].
    pub cross_order_gap: Option<f64>,
}

impl BipartiteSolution {
    /// Same state reported in the counting convention.
    pub fn with_counting(mut self, p: &BipartiteParams) -> Self {
        self.pressure_a += p.counting_constant();
        self.free_energy_f = -self.pressure_a / p.beta;
        self
    }
}

/// Trial functional on `[-L_σ/2, L_σ/2] × [-L_τ/2, L_τ/2]`.
pub fn minmax_trial(p: &BipartiteParams, m: f64, n: f64) -> Result<f64> {
    finite("m", m)?;
    finite("n", n)?;
    let slack = |hw: f64| hw * (1.0 + 1e-12) + 1e-15;
    if m.abs() > slack(p.sigma.half_width()) {
        return Err(Error::Domain {
            what: "m",
            value: m,
        });
    }
    if n.abs() > slack(p.tau.half_width()) {
        return Err(Error::Domain {
            what: "n",
            value: n,
        });
    }
    Ok(p.trial(m, n))
}

/// Pressure of the selected state, `-β f`.
pub fn pressure(p: &BipartiteParams) -> Result<f64> {
    Ok(coupled_fixed_point(p, (0.0, 0.0))?.pressure_a)
}

/// Pressure in the counting convention (`+ log K_σ + α log K_τ`).
pub fn counted_pressure(p: &BipartiteParams) -> Result<f64> {
    Ok(pressure(p)? + p.counting_constant())
}

fn worst_residual(p: &BipartiteParams, m: f64, n: f64) -> f64 {
    let r = p.residuals(m, n);
    r.0.max(r.1)
}

/// One damped Newton step on the residual map with the analytic Jacobian
/// `[[1, -αβ Var_σ], [-β Var_τ, 1]]`. Returns `None` when no step reduces
/// the residual.
fn newton_step(p: &BipartiteParams, m: f64, n: f64) -> Option<(f64, f64, f64)> {
    let (hs, ht) = (p.sigma.half_width(), p.tau.half_width());
    let (_, mean_s, var_s) = p.sigma.moments(p.tilt_sigma(n));
    let (_, mean_t, var_t) = p.tau.moments(p.tilt_tau(m));
    let f1 = m - mean_s;
    let f2 = n - mean_t;
    let a = -p.alpha * p.beta * var_s;
    let b = -p.beta * var_t;
    let det = 1.0 - a * b;
    if det.abs() < 1e-300 {
        return None;
    }
    let dm = (-f1 + a * f2) / det;
    let dn = (-f2 + b * f1) / det;
    let r = worst_residual(p, m, n);
    let mut lambda = 1.0;
    while lambda >= 1e-6 {
        let mt = (m + lambda * dm).clamp(-hs, hs);
        let nt = (n + lambda * dn).clamp(-ht, ht);
        let rt = worst_residual(p, mt, nt);
        if rt < r {
            return Some((mt, nt, rt));
        }
        lambda *= 0.5;
    }
    None
}

fn solve_from(p: &BipartiteParams, seed: (f64, f64)) -> Result<(f64, f64)> {
    let (mut m, mut n) = seed;
    let mut converged = false;
    for _ in 0..MAX_DAMPED_STEPS {
        m = (1.0 - DAMPING) * m + DAMPING * p.sigma.mean(p.tilt_sigma(n));
        n = (1.0 - DAMPING) * n + DAMPING * p.tau.mean(p.tilt_tau(m));
        if worst_residual(p, m, n) <= FIXED_POINT_TOL {
            converged = true;
            break;
        }
    }
    // near the transition the alternating map has unit spectral radius;
    // after convergence a few more steps reach rounding level
    let mut iterations = MAX_DAMPED_STEPS;
    let mut extra = 0;
    for _ in 0..MAX_NEWTON_STEPS {
        iterations += 1;
        match newton_step(p, m, n) {
            Some((mt, nt, r)) => {
                m = mt;
                n = nt;
                if r <= FIXED_POINT_TOL {
                    converged = true;
                }
            }
            None => break,
        }
        if converged {
            extra += 1;
            if extra >= 3 {
                break;
            }
        }
    }
    if converged || worst_residual(p, m, n) <= FIXED_POINT_TOL {
        return Ok((m, n));
    }
    let (residual_m, residual_n) = p.residuals(m, n);
    Err(Error::CoupledNonConvergence {
        m,
        n,
        residual_m,
        residual_n,
        iterations,
    })
}

/// Candidate points sorted by trial value, reduced to the reported state.
fn select(p: &BipartiteParams, mut cands: Vec<(f64, f64, f64)>) -> BipartiteSolution {
    cands.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut distinct: Vec<(f64, f64, f64)> = Vec::new();
    for c in cands {
        if !distinct
            .iter()
            .any(|d| (d.0 - c.0).abs() <= SAME_POINT && (d.1 - c.1).abs() <= SAME_POINT)
        {
            distinct.push(c);
        }
    }
    let best = distinct[0];
    let tie = distinct[1..]
        .iter()
        .find(|c| (c.2 - best.2).abs() <= TIE_TOL * (1.0 + best.2.abs()));
    match tie {
        Some(&other) => {
            let (primary, mirror) = if best.0 >= 0.0 {
                (best, other)
            } else {
                (other, best)
            };
            let mut s = p.solution(primary.0, primary.1);
            s.branch_count = 2;
            s.other_branch = Some((mirror.0, mirror.1));
            s
        }
        None => p.solution(best.0, best.1),
    }
}

/// Coupled self-consistency by damped alternating updates, with a Newton
/// fallback, started from `seed` and from the corners and centre of the
/// box. Among the fixed points found the one of least trial value wins.
pub fn coupled_fixed_point(p: &BipartiteParams, seed: (f64, f64)) -> Result<BipartiteSolution> {
    finite("seed m", seed.0)?;
    finite("seed n", seed.1)?;
    let (hs, ht) = (p.sigma.half_width(), p.tau.half_width());
    if seed.0.abs() > hs || seed.1.abs() > ht {
        return Err(Error::Precondition(format!(
            "seed ({}, {}) outside [-{hs}, {hs}] x [-{ht}, {ht}]",
            seed.0, seed.1
        )));
    }
    if let Some(s) = p.degenerate() {
        return Ok(s);
    }
    let seeds = [seed, (hs, ht), (-hs, -ht), (hs, -ht), (-hs, ht), (0.0, 0.0)];
    let mut found = Vec::new();
    let mut last_err = None;
    for s in seeds {
        match solve_from(p, s) {
            Ok((m, n)) => found.push((m, n, p.trial(m, n))),
            Err(e) => last_err = Some(e),
        }
    }
    if found.is_empty() {
        return Err(last_err.expect("at least one seed was tried"));
    }
    Ok(select(p, found))
}

/// Maximizer over `M` of the trial functional at fixed `N`. The functional
/// is concave in `M`, so the maximizer is the root of its decreasing
/// derivative `α(N - Λτ'(βh₂ + βM))`, or an endpoint.
fn argmax_m(p: &BipartiteParams, n: f64) -> f64 {
    let hs = p.sigma.half_width();
    let d = |m: f64| n - p.tau.mean(p.tilt_tau(m));
    if d(hs) >= 0.0 {
        hs
    } else if d(-hs) <= 0.0 {
        -hs
    } else {
        bisect(d, -hs, hs)
    }
}

/// Maximizer over `N` at fixed `M`; concave in `N` as well.
fn argmax_n(p: &BipartiteParams, m: f64) -> f64 {
    let ht = p.tau.half_width();
    let d = |n: f64| m - p.sigma.mean(p.tilt_sigma(n));
    if d(ht) >= 0.0 {
        ht
    } else if d(-ht) <= 0.0 {
        -ht
    } else {
        bisect(d, -ht, ht)
    }
}

#[derive(Clone, Copy)]
enum Order {
    /// `min over N of max over M`.
    NThenM,
    /// `min over M of max over N`.
    MThenN,
}

/// Local minima `(M, N, value)` of the outer envelope.
fn envelope_minima(p: &BipartiteParams, order: Order) -> Vec<(f64, f64, f64)> {
    let hw = match order {
        Order::NThenM => p.tau.half_width(),
        Order::MThenN => p.sigma.half_width(),
    };
    let point = |x: f64| match order {
        Order::NThenM => (argmax_m(p, x), x),
        Order::MThenN => (x, argmax_n(p, x)),
    };
    let value = |x: f64| {
        let (m, n) = point(x);
        p.trial(m, n)
    };
    // envelope derivative divided by α
    let slope = |x: f64| match order {
        Order::NThenM => argmax_m(p, x) - p.sigma.mean(p.tilt_sigma(x)),
        Order::MThenN => argmax_n(p, x) - p.tau.mean(p.tilt_tau(x)),
    };
    bracket_minima(value, -hw, hw, SCAN_POINTS)
        .into_iter()
        .map(|(lo, hi)| {
            let (xg, _) = golden_section_min(value, lo, hi, 1e-11);
            // values are flat to rounding near the minimum; the stationarity
            // root is sharper than any comparison of values
            let width = hi - lo;
            let x = polish_minimum(slope, xg, -hw, hw)
                .filter(|x| *x >= lo - width && *x <= hi + width)
                .unwrap_or(xg);
            let (m, n) = point(x);
            (m, n, p.trial(m, n))
        })
        .collect()
}

/// `f = min over N of max over M` of the trial functional by nested 1-D
/// optimization, with the opposite order evaluated as a consistency check.
pub fn minmax_solve(p: &BipartiteParams) -> Result<BipartiteSolution> {
    if let Some(s) = p.degenerate() {
        return Ok(s);
    }
    let primary = envelope_minima(p, Order::NThenM);
    let cross = envelope_minima(p, Order::MThenN);
    if primary.is_empty() || cross.is_empty() {
        return Err(Error::NonConvergence {
            solver: "minmax envelope",
            last: f64::NAN,
            residual: f64::NAN,
        });
    }
    let cross_min = cross.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let mut s = select(p, primary);
    s.cross_order_gap = Some((s.free_energy_f - cross_min).abs());
    Ok(s)
}

/// Finite-difference derivatives of the trial functional at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialCurvature {
    pub grad_m: f64,
    pub grad_n: f64,
    pub d2_mm: f64,
    pub d2_nn: f64,
    pub d2_mn: f64,
}

impl TrialCurvature {
    pub fn gradient_norm(&self) -> f64 {
        self.grad_m.abs().max(self.grad_n.abs())
    }

    /// Second differences along the `M` and `N` axes of opposite sign.
    pub fn axis_signs_opposite(&self) -> bool {
        self.d2_mm * self.d2_nn < 0.0
    }

    pub fn hessian_determinant(&self) -> f64 {
        self.d2_mm * self.d2_nn - self.d2_mn * self.d2_mn
    }

    /// Principal curvatures of opposite sign.
    pub fn is_indefinite(&self) -> bool {
        self.hessian_determinant() < 0.0
    }
}

pub fn trial_curvature(p: &BipartiteParams, m: f64, n: f64) -> TrialCurvature {
    let g = 1e-6;
    let h = 1e-4;
    let f = |a: f64, b: f64| p.trial(a, b);
    let c = f(m, n);
    TrialCurvature {
        grad_m: (f(m + g, n) - f(m - g, n)) / (2.0 * g),
        grad_n: (f(m, n + g) - f(m, n - g)) / (2.0 * g),
        d2_mm: (f(m + h, n) - 2.0 * c + f(m - h, n)) / (h * h),
        d2_nn: (f(m, n + h) - 2.0 * c + f(m, n - h)) / (h * h),
        d2_mn: (f(m + h, n + h) - f(m + h, n - h) - f(m - h, n + h) + f(m - h, n - h))
            / (4.0 * h * h),
    }
}

/// `β` at which the zero-field linearization `M = αβ² Var_σ Var_τ M` becomes
/// unstable.
pub fn linearized_critical_beta(sigma: &SpinMeasure, tau: &SpinMeasure, alpha: f64) -> f64 {
    let k = alpha * sigma.variance() * tau.variance();
    if k > 0.0 {
        1.0 / k.sqrt()
    } else {
        f64::INFINITY
    }
}

/// Locate the zero-field ordering transition in `[lo, hi]` by bisection on
/// whether the selected state has `|M̃| > ORDER_THRESHOLD`.
pub fn detect_bifurcation_beta(
    sigma: &SpinMeasure,
    tau: &SpinMeasure,
    alpha: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let ordered = |beta: f64| -> Result<bool> {
        let p = BipartiteParams::new(beta, alpha, 0.0, 0.0, sigma.clone(), tau.clone())?;
        Ok(coupled_fixed_point(&p, (0.0, 0.0))?.m_tilde.abs() > ORDER_THRESHOLD)
    };
    if ordered(lo)? || !ordered(hi)? {
        return Err(Error::Precondition(format!(
            "no ordering transition bracketed by beta in [{lo}, {hi}]"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > 1e-7 {
        let mid = 0.5 * (a + b);
        if ordered(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// `(1/n₁) log E exp(β S_σ S_τ / n₁ + βh₁ S_σ + βh₂ S_τ)`. The τ sum factorizes
/// given `S_σ`, so only the σ occupations are enumerated.
pub fn exact_bipartite_pressure(n1: usize, n2: usize, p: &BipartiteParams) -> Result<f64> {
    if n1 == 0 {
        return Err(Error::Precondition("n1 must be >= 1".into()));
    }
    let n1f = n1 as f64;
    let exps: Vec<f64> = occupation_terms(&p.sigma, n1)?
        .iter()
        .map(|o| {
            o.log_weight
                + p.beta * p.h1 * o.sum
                + n2 as f64 * p.tau.lambda(p.beta * p.h2 + p.beta * o.sum / n1f)
        })
        .collect();
    Ok(log_sum_exp(&exps) / n1f)
}

/// `n₂ = α n₁` when it is an integer.
pub fn partner_size(alpha: f64, n1: usize) -> Result<usize> {
    let n2 = alpha * n1 as f64;
    if (n2 - n2.round()).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "alpha * n1 = {n2} is not an integer"
        )));
    }
    Ok(n2.round() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteSizeRow {
    pub n1: usize,
    pub n2: usize,
    pub a_exact: f64,
    pub a_limit: f64,
    pub gap: f64,
    pub n1_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSizeStudy {
    pub rows: Vec<FiniteSizeRow>,
    /// `max(n₁ gap) / min(n₁ gap)`.
    pub spread: f64,
}

impl FiniteSizeStudy {
    pub const CSV_HEADER: &'static str = "n1,n2,a_exact,a_limit,gap,n1_gap";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&csv_line([
                r.n1.to_string(),
                r.n2.to_string(),
                fmt17(r.a_exact),
                fmt17(r.a_limit),
                fmt17(r.gap),
                fmt17(r.n1_gap),
            ]));
        }
        out
    }
}

fn spread(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::MIN, f64::max);
    let min = values.fold(f64::MAX, f64::min);
    max / min
}

/// Exact pressures against the limit at the sizes `(n₁, n₂)`.
pub fn finite_size_study(p: &BipartiteParams, sizes: &[(usize, usize)]) -> Result<FiniteSizeStudy> {
    if sizes.is_empty() {
        return Err(Error::Precondition("no sizes given".into()));
    }
    let a_limit = pressure(p)?;
    let rows: Vec<FiniteSizeRow> = sizes
        .par_iter()
        .map(|&(n1, n2)| {
            let a_exact = exact_bipartite_pressure(n1, n2, p)?;
            let gap = (a_exact - a_limit).abs();
            Ok(FiniteSizeRow {
                n1,
                n2,
                a_exact,
                a_limit,
                gap,
                n1_gap: n1 as f64 * gap,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FiniteSizeStudy {
        spread: spread(rows.iter().map(|r| r.n1_gap)),
        rows,
    })
}

/// `(1/n₁) log E exp n₁[(β+t)/2 (m² + α²n²) - tαmn + x(m - αn) + βh₁m + βh₂αn]`
/// with `m = S_σ/n₁`, `αn = S_τ/n₁`, by enumerating both parties. At
/// `t = -β`, `x = 0` this is the bipartite pressure.
pub fn interpolating_action_exact(
    p: &BipartiteParams,
    n1: usize,
    n2: usize,
    x: f64,
    t: f64,
) -> Result<f64> {
    finite("x", x)?;
    finite("t", t)?;
    if n1 == 0 {
        return Err(Error::Precondition("n1 must be >= 1".into()));
    }
    let ks = p.sigma.atoms().ok_or(Error::NotDiscrete)?.len();
    let kt = p.tau.atoms().ok_or(Error::NotDiscrete)?.len();
    let needed = occupation_count(n1, ks) * occupation_count(n2, kt);
    if needed > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    let n1f = n1 as f64;
    let sig = occupation_terms(&p.sigma, n1)?;
    let tau = if n2 == 0 {
        vec![crate::finite_n::OccupationTerm {
            sum: 0.0,
            sum_sq: 0.0,
            log_weight: 0.0,
        }]
    } else {
        occupation_terms(&p.tau, n2)?
    };
    let c = (p.beta + t) / (2.0 * n1f);
    let mut exps = Vec::with_capacity(sig.len() * tau.len());
    for s in &sig {
        for u in &tau {
            exps.push(
                s.log_weight + u.log_weight + c * (s.sum * s.sum + u.sum * u.sum)
                    - t * s.sum * u.sum / n1f
                    + x * (s.sum - u.sum)
                    + p.beta * p.h1 * s.sum
                    + p.beta * p.h2 * u.sum,
            );
        }
    }
    Ok(log_sum_exp(&exps) / n1f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryRow {
    pub n1: usize,
    pub n2: usize,
    /// Action evolved from the finite-size boundary.
    pub phi_finite: f64,
    /// Action evolved from the limiting boundary.
    pub phi_limit: f64,
    pub gap: f64,
    pub n1_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryEquivalence {
    pub x: f64,
    pub t: f64,
    pub rows: Vec<BoundaryRow>,
    /// `max(n₁ gap) / min(n₁ gap)`.
    pub spread: f64,
}

/// Finite-size boundary datum
/// `h_N(y) = -φ^σ_{n₁}(βh₁ + y, β) - α φ^τ_{n₂}(βh₂ - y, αβ)`.
struct FiniteBoundary {
    sigma: Enumeration,
    tau: Option<Enumeration>,
}

impl FiniteBoundary {
    fn new(p: &BipartiteParams, n1: usize, n2: usize) -> Result<Self> {
        let tau = if p.alpha == 0.0 {
            None
        } else {
            Some(Enumeration::new(&p.tau, n2)?)
        };
        Ok(FiniteBoundary {
            sigma: Enumeration::new(&p.sigma, n1)?,
            tau,
        })
    }

    fn eval(&self, p: &BipartiteParams, y: f64) -> f64 {
        let s = self.sigma.log_average(p.beta * p.h1 + y, p.beta, false);
        let t = self.tau.as_ref().map_or(0.0, |e| {
            p.alpha * e.log_average(p.beta * p.h2 - y, p.alpha * p.beta, false)
        });
        s + t
    }
}

/// Limiting boundary datum, the same expression with Hopf-Lax actions.
fn limit_boundary(p: &BipartiteParams, y: f64) -> Result<f64> {
    let s = -hopf_lax(&p.sigma, ModelPoint::new(p.beta * p.h1 + y, p.beta)?)?.action_phi;
    let t = if p.alpha == 0.0 {
        0.0
    } else {
        -p.alpha
            * hopf_lax(
                &p.tau,
                ModelPoint::new(p.beta * p.h2 - y, p.alpha * p.beta)?,
            )?
            .action_phi
    };
    Ok(s + t)
}

/// `(1/n₁) log ∫ sqrt(n₁/2πt) exp(-n₁[(x - y)²/2t - h(y)]) dy`, the forward
/// heat-kernel evolution of a boundary datum `h`. Applied to the finite-size
/// boundary it reproduces [`interpolating_action_exact`] at the same `(x, t)`.
/// The window is split at `kinks` so each piece has a smooth integrand.
fn evolve<H: Fn(f64) -> f64>(
    h: H,
    reach: f64,
    kinks: &[f64],
    n1: usize,
    x: f64,
    t: f64,
) -> Result<f64> {
    let nf = n1 as f64;
    let width = (t / nf).sqrt();
    let window = t * reach + 12.0 * width;
    let (lo, hi) = (x - window, x + window);
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|k| *k > lo && *k < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(hi);
    let quad = PanelQuadrature::default();
    let mut pieces = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        if w[1] - w[0] <= 0.0 {
            continue;
        }
        let r = quad.integrate(
            |y| -nf * ((x - y) * (x - y) / (2.0 * t) - h(y)),
            |_| 0.0,
            w[0],
            w[1],
            0.5 * width,
            1e-12,
        )?;
        pieces.push(r.log_mass);
    }
    Ok((0.5 * (nf / (2.0 * std::f64::consts::PI * t)).ln() + log_sum_exp(&pieces)) / nf)
}

/// Action evolved from the finite-size boundary, by quadrature.
pub fn evolved_finite_boundary(
    p: &BipartiteParams,
    n1: usize,
    n2: usize,
    x: f64,
    t: f64,
) -> Result<f64> {
    let fb = FiniteBoundary::new(p, n1, n2)?;
    if t == 0.0 {
        return Ok(fb.eval(p, x));
    }
    evolve(|y| fb.eval(p, y), boundary_reach(p), &[], n1, x, t)
}

fn boundary_reach(p: &BipartiteParams) -> f64 {
    p.sigma.half_width() + p.alpha * p.tau.half_width()
}

/// Gap between the actions evolved from the finite-size and the limiting
/// boundary data, at every `n₁` of `n_list` (with `n₂ = α n₁`).
pub fn boundary_equivalence_check(
    p: &BipartiteParams,
    x: f64,
    t: f64,
    n_list: &[usize],
) -> Result<BoundaryEquivalence> {
    finite("x", x)?;
    finite("t", t)?;
    if t < 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    if n_list.is_empty() {
        return Err(Error::Precondition("no sizes given".into()));
    }
    let rows: Vec<BoundaryRow> = n_list
        .par_iter()
        .map(|&n1| -> Result<BoundaryRow> {
            let n2 = partner_size(p.alpha, n1)?;
            let fb = FiniteBoundary::new(p, n1, n2)?;
            let (phi_finite, phi_limit) = if t == 0.0 {
                (fb.eval(p, x), limit_boundary(p, x)?)
            } else {
                let reach = boundary_reach(p);
                let fin = evolve(|y| fb.eval(p, y), reach, &[], n1, x, t)?;
                // quadrature nodes never see an error: arguments are finite
                // shock lines of the two limiting actions
                let kinks = [-p.beta * p.h1, p.beta * p.h2];
                let lim = evolve(
                    |y| limit_boundary(p, y).unwrap_or(f64::NAN),
                    reach,
                    &kinks,
                    n1,
                    x,
                    t,
                )?;
                if !lim.is_finite() {
                    return Err(Error::Quadrature(f64::NAN));
                }
                (fin, lim)
            };
            let gap = (phi_finite - phi_limit).abs();
            Ok(BoundaryRow {
                n1,
                n2,
                phi_finite,
                phi_limit,
                gap,
                n1_gap: n1 as f64 * gap,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundaryEquivalence {
        x,
        t,
        spread: spread(rows.iter().map(|r| r.n1_gap)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tanh_root(t: f64) -> f64 {
        let (mut a, mut b) = (0.1, 1.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if (a - (t * a).tanh()).signum() == (c - (t * c).tanh()).signum() {
                a = c;
            } else {
                b = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn subcritical_zero_field_is_disordered() {
        let p = BipartiteParams::dichotomic(0.5, 1.0, 0.0, 0.0).unwrap();
        let s = coupled_fixed_point(&p, (0.3, 0.3)).unwrap();
        assert_eq!(s.branch_count, 1);
        assert!(s.m_tilde.abs() < 1e-12 && s.n_tilde.abs() < 1e-12);
        assert_abs_diff_eq!(s.pressure_a, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            s.with_counting(&p).pressure_a,
            2.0 * 2f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn symmetric_case_collapses_to_single_party() {
        let p = BipartiteParams::dichotomic(2.0, 1.0, 0.0, 0.0).unwrap();
        let s = coupled_fixed_point(&p, (0.0, 0.0)).unwrap();
        let m = tanh_root(2.0);
        assert_eq!(s.branch_count, 2);
        assert_abs_diff_eq!(s.m_tilde, m, epsilon = 1e-12);
        assert_abs_diff_eq!(s.n_tilde, m, epsilon = 1e-12);
        assert_eq!(s.other_branch.map(|b| b.0 < 0.0), Some(true));
        let a = -2.0 * m * m + 2.0 * (2.0 * m).cosh().ln();
        assert_abs_diff_eq!(s.pressure_a, a, epsilon = 1e-12);
        let mm = minmax_solve(&p).unwrap();
        assert_abs_diff_eq!(mm.m_tilde, s.m_tilde, epsilon = 1e-10);
        assert_abs_diff_eq!(mm.free_energy_f, s.free_energy_f, epsilon = 1e-12);
        assert!(mm.cross_order_gap.unwrap() < 1e-10);
        assert_abs_diff_eq!(
            minmax_trial(&p, s.m_tilde, s.n_tilde).unwrap(),
            s.free_energy_f,
            epsilon = 1e-15
        );
    }

    #[test]
    fn fields_break_the_tie() {
        let p = BipartiteParams::dichotomic(0.5, 1.0, 0.3, -0.2).unwrap();
        let a = coupled_fixed_point(&p, (0.0, 0.0)).unwrap();
        let b = minmax_solve(&p).unwrap();
        assert_eq!(a.branch_count, 1);
        assert_abs_diff_eq!(a.m_tilde, b.m_tilde, epsilon = 1e-10);
        assert_abs_diff_eq!(a.n_tilde, b.n_tilde, epsilon = 1e-10);
        assert!(a.residuals.0 <= 1e-12 && a.residuals.1 <= 1e-12);
        let c = trial_curvature(&p, a.m_tilde, a.n_tilde);
        assert!(c.gradient_norm() < 1e-8);
        assert!(c.is_indefinite());
        // the literal trial functional is concave along both axes
        assert!(c.d2_mm < 0.0 && c.d2_nn < 0.0);
    }

    #[test]
    fn zero_alpha_reduces_to_free_spins() {
        for (beta, h1) in [(0.4, 0.7), (2.5, -0.3)] {
            let p = BipartiteParams::dichotomic(beta, 0.0, h1, 0.5).unwrap();
            let s = coupled_fixed_point(&p, (0.0, 0.0))
                .unwrap()
                .with_counting(&p);
            assert_abs_diff_eq!(
                s.pressure_a,
                2f64.ln() + (beta * h1).cosh().ln(),
                epsilon = 1e-14
            );
            assert_eq!(minmax_solve(&p).unwrap().with_counting(&p), s);
        }
    }

    #[test]
    fn point_mass_party_only_shifts_the_field() {
        let zero = SpinMeasure::custom_atoms(&[(0.0, 1.0)], crate::Symmetry::Strict).unwrap();
        let p = BipartiteParams::new(1.5, 1.0, 0.2, 0.4, SpinMeasure::dichotomic(), zero).unwrap();
        let s = coupled_fixed_point(&p, (0.0, 0.0)).unwrap();
        assert_eq!(s.n_tilde, 0.0);
        assert_abs_diff_eq!(s.m_tilde, 0.3f64.tanh(), epsilon = 1e-15);
        assert_eq!(minmax_solve(&p).unwrap(), s);
    }

    #[test]
    fn seed_outside_box_is_rejected() {
        let p = BipartiteParams::dichotomic(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(coupled_fixed_point(&p, (1.5, 0.0)).is_err());
        assert!(minmax_trial(&p, 0.0, -1.1).is_err());
        assert!(BipartiteParams::dichotomic(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(BipartiteParams::dichotomic(1.0, -0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn critical_beta() {
        let d = SpinMeasure::dichotomic();
        assert_abs_diff_eq!(linearized_critical_beta(&d, &d, 0.25), 2.0, epsilon = 1e-15);
        let b = detect_bifurcation_beta(&d, &d, 0.25, 1.0, 3.0).unwrap();
        assert!((b - 2.0).abs() < 1e-3, "{b}");
        assert!(linearized_critical_beta(&d, &d, 0.0).is_infinite());
    }

    #[test]
    fn exact_pressure_single_pair() {
        let (beta, h1, h2) = (0.8, 0.3, -0.5);
        let p = BipartiteParams::dichotomic(beta, 1.0, h1, h2).unwrap();
        let mut z = 0.0;
        for s in [-1.0, 1.0] {
            for t in [-1.0, 1.0] {
                z += (beta * (s * t + h1 * s + h2 * t)).exp() / 4.0;
            }
        }
        assert_abs_diff_eq!(
            exact_bipartite_pressure(1, 1, &p).unwrap(),
            f64::ln(z),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            interpolating_action_exact(&p, 1, 1, 0.0, -beta).unwrap(),
            f64::ln(z),
            epsilon = 1e-15
        );
    }

    #[test]
    fn exact_pressure_approaches_limit() {
        let p = BipartiteParams::dichotomic(0.5, 1.0, 0.2, 0.1).unwrap();
        let limit = pressure(&p).unwrap();
        let gap = |n: usize| (exact_bipartite_pressure(n, n, &p).unwrap() - limit).abs();
        assert!(gap(64) < gap(16));
        assert!(gap(64) < 0.05);
    }

    #[test]
    fn interpolating_action_matches_pressure_at_negative_time() {
        let three = SpinMeasure::equally_spaced_atoms(3, 2.0).unwrap();
        let p =
            BipartiteParams::new(1.3, 0.5, 0.1, -0.4, three, SpinMeasure::dichotomic()).unwrap();
        let a = exact_bipartite_pressure(8, 4, &p).unwrap();
        let b = interpolating_action_exact(&p, 8, 4, 0.0, -1.3).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
    }

    #[test]
    fn heat_kernel_reproduces_enumeration() {
        let p = BipartiteParams::dichotomic(1.2, 1.0, 0.1, 0.0).unwrap();
        for (x, t) in [(0.2, 0.5), (-0.4, 1.5)] {
            let quad = evolved_finite_boundary(&p, 6, 6, x, t).unwrap();
            let exact = interpolating_action_exact(&p, 6, 6, x, t).unwrap();
            assert_abs_diff_eq!(quad, exact, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_gap_at_zero_time() {
        let p = BipartiteParams::dichotomic(0.7, 1.0, 0.0, 0.0).unwrap();
        let r = boundary_equivalence_check(&p, 0.2, 0.0, &[4, 8]).unwrap();
        let d = SpinMeasure::dichotomic();
        for row in &r.rows {
            let direct = |m: &SpinMeasure, x: f64, t: f64, n: usize| {
                let fin =
                    crate::finite_n::phi_n_exact(m, ModelPoint::new(x, t).unwrap(), n).unwrap();
                let lim = hopf_lax(m, ModelPoint::new(x, t).unwrap())
                    .unwrap()
                    .action_phi;
                fin - lim
            };
            let expected = (direct(&d, 0.2, 0.7, row.n1) + direct(&d, -0.2, 0.7, row.n2)).abs();
            assert_abs_diff_eq!(row.gap, expected, epsilon = 1e-14);
        }
    }
}
