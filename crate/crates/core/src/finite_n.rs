//! Finite-size ground truth.
//!
//! Exact pressures come from enumerating atom-occupation vectors of a
//! discrete measure: the Hamiltonian depends on a configuration only
//! through `S = Σσ_i` and `Q = Σσ_i²`, so `N` spins over `K` atoms cost
//! `C(N + K - 1, K - 1)` terms instead of `K^N`. The Cole-Hopf integrals of
//! the viscous problems are evaluated by panel quadrature.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{finite, Error, Result};
use crate::measure::SpinMeasure;
use crate::optimize::fitted_slope;
use crate::quadrature::{log_sum_exp, PanelQuadrature};
use crate::single_party::{hopf_lax, ModelPoint};

/// Largest number of occupation vectors an exact enumeration may visit.
pub const ENUMERATION_BUDGET: f64 = 2e6;
const QUADRATURE_TOL: f64 = 1e-13;
/// Half-width of the quadrature window beyond the confinement interval, in
/// units of the heat-kernel width `sqrt(t / N)`.
const WINDOW_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy)]
pub struct FiniteSystem<'a> {
    pub n: usize,
    pub measure: &'a SpinMeasure,
}

impl<'a> FiniteSystem<'a> {
    pub fn new(n: usize, measure: &'a SpinMeasure) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("system size must be >= 1".into()));
        }
        Ok(FiniteSystem { n, measure })
    }
}

/// One aggregated class of configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationTerm {
    /// `Σ σ_i`.
    pub sum: f64,
    /// `Σ σ_i²`.
    pub sum_sq: f64,
    /// Log of the probability of the class under the product measure.
    pub log_weight: f64,
}

/// Number of occupation vectors of `n` spins over `k` atoms.
pub fn occupation_count(n: usize, k: usize) -> f64 {
    (1..k).fold(1.0, |acc, j| acc * (n + j) as f64 / j as f64)
}

/// All occupation classes of `n` spins drawn from a discrete measure.
pub fn occupation_terms(m: &SpinMeasure, n: usize) -> Result<Vec<OccupationTerm>> {
    let atoms = m.atoms().ok_or(Error::NotDiscrete)?;
    let k = atoms.len();
    let needed = occupation_count(n, k);
    if needed > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_w: Vec<f64> = atoms.iter().map(|a| a.1.ln()).collect();

    let mut out = Vec::with_capacity(needed as usize);
    let mut counts = vec![0usize; k];
    fill(atoms, &ln_w, &ln_fact, n, 0, n, &mut counts, &mut out);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    atoms: &[(f64, f64)],
    ln_w: &[f64],
    ln_fact: &[f64],
    n: usize,
    idx: usize,
    remaining: usize,
    counts: &mut [usize],
    out: &mut Vec<OccupationTerm>,
) {
    if idx == atoms.len() - 1 {
        counts[idx] = remaining;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut lw = ln_fact[n];
        for (j, &c) in counts.iter().enumerate() {
            let v = atoms[j].0;
            sum += c as f64 * v;
            sum_sq += c as f64 * v * v;
            lw += c as f64 * ln_w[j] - ln_fact[c];
        }
        out.push(OccupationTerm {
            sum,
            sum_sq,
            log_weight: lw,
        });
        return;
    }
    for c in 0..=remaining {
        counts[idx] = c;
        fill(atoms, ln_w, ln_fact, n, idx + 1, remaining - c, counts, out);
    }
}

/// Occupation classes of one system size, reusable across fields and times.
#[derive(Debug, Clone)]
pub struct Enumeration {
    n: usize,
    terms: Vec<OccupationTerm>,
}

impl Enumeration {
    pub fn new(m: &SpinMeasure, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("system size must be >= 1".into()));
        }
        Ok(Enumeration {
            n,
            terms: occupation_terms(m, n)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[OccupationTerm] {
        &self.terms
    }

    /// `(1/N) log E exp(t S²/2N + x S - [self_term] t Q/2N)`.
    pub fn log_average(&self, x: f64, t: f64, self_term: bool) -> f64 {
        let nf = self.n as f64;
        let diag = if self_term { 0.5 * t / nf } else { 0.0 };
        let exps: Vec<f64> = self
            .terms
            .iter()
            .map(|o| o.log_weight + t * o.sum * o.sum / (2.0 * nf) + x * o.sum - diag * o.sum_sq)
            .collect();
        log_sum_exp(&exps) / nf
    }
}

/// `(1/N) log E exp(t S²/2N + x S - [self_term] t Q/2N)` by exact enumeration.
pub fn log_boltzmann_average(
    m: &SpinMeasure,
    n: usize,
    x: f64,
    t: f64,
    self_term: bool,
) -> Result<f64> {
    finite("x", x)?;
    finite("t", t)?;
    Ok(Enumeration::new(m, n)?.log_average(x, t, self_term))
}

/// `A_N(β, h) = (1/N) log E e^{-β H_N}` with
/// `H_N = -N m²/2 + a_N/2 - N h m` (pairs counted once, no self-coupling).
pub fn exact_pressure(sys: FiniteSystem<'_>, beta: f64, h: f64) -> Result<f64> {
    log_boltzmann_average(sys.measure, sys.n, beta * h, beta, true)
}

/// `A_N` at mechanical coordinates: the pressure of the Hamiltonian model
/// with `t = β` and `x = β h`.
pub fn mechanical_pressure(m: &SpinMeasure, p: ModelPoint, n: usize) -> Result<f64> {
    log_boltzmann_average(m, n, p.x, p.t, true)
}

/// `φ_N(x, t) = -(1/N) log E exp(t N m²/2 + x N m)` by direct enumeration.
pub fn phi_n_exact(m: &SpinMeasure, p: ModelPoint, n: usize) -> Result<f64> {
    Ok(-log_boltzmann_average(m, n, p.x, p.t, false)?)
}

struct ColeHopf {
    log_mass: f64,
    mean_y: f64,
}

fn cole_hopf(m: &SpinMeasure, p: ModelPoint, n: usize) -> Result<ColeHopf> {
    let ModelPoint { x, t } = p;
    finite("x", x)?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::NonPositiveTime(t));
    }
    if n == 0 {
        return Err(Error::Precondition("system size must be >= 1".into()));
    }
    let nf = n as f64;
    let width = (t / nf).sqrt();
    let reach = t * m.half_width() + WINDOW_SIGMAS * width;
    let exponent = |y: f64| -nf * ((x - y) * (x - y) / (2.0 * t) - m.lambda(y));
    let r = PanelQuadrature::default().integrate(
        exponent,
        |y| y,
        x - reach,
        x + reach,
        0.5 * width,
        QUADRATURE_TOL,
    )?;
    Ok(ColeHopf {
        log_mass: r.log_mass,
        mean_y: r.weighted_mean,
    })
}

/// Viscous action by the Cole-Hopf representation,
/// `φ_N = -(1/N) log sqrt(N / 2πt) ∫ dy exp(-N[(x - y)²/2t - Λ(y)])`.
pub fn phi_n_quadrature(m: &SpinMeasure, p: ModelPoint, n: usize) -> Result<f64> {
    let ch = cole_hopf(m, p, n)?;
    let nf = n as f64;
    let norm = 0.5 * (nf / (2.0 * std::f64::consts::PI * p.t)).ln();
    Ok(-(norm + ch.log_mass) / nf)
}

/// Viscous velocity `u_N = ∂_x φ_N = <(x - y)/t>` under the Cole-Hopf weight.
pub fn u_n_quadrature(m: &SpinMeasure, p: ModelPoint, n: usize) -> Result<f64> {
    if p.x == 0.0 && p.t > 0.0 && n > 0 {
        // odd integrand under y -> -y
        return Ok(0.0);
    }
    let ch = cole_hopf(m, p, n)?;
    Ok((p.x - ch.mean_y) / p.t)
}

/// Both sides of the `|φ_N + A_N| <= L² t / 2N` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Check {
    pub n: usize,
    /// `|φ_N + A_N|`.
    pub gap: f64,
    /// `L² t / 2N` with `L` the full support width.
    pub bound: f64,
    /// `(L/2)² t / 2N`, the estimate with the support half-width.
    pub tight_bound: f64,
}

impl Lemma1Check {
    pub fn margin(&self) -> f64 {
        self.bound - self.gap
    }

    pub fn tight_margin(&self) -> f64 {
        self.tight_bound - self.gap
    }
}

pub fn lemma1_check(m: &SpinMeasure, p: ModelPoint, n: usize) -> Result<Lemma1Check> {
    let phi = phi_n_exact(m, p, n)?;
    let a = mechanical_pressure(m, p, n)?;
    let nf = n as f64;
    let l = m.support_width();
    Ok(Lemma1Check {
        n,
        gap: (phi + a).abs(),
        bound: l * l * p.t / (2.0 * nf),
        tight_bound: 0.25 * l * l * p.t / (2.0 * nf),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub point: ModelPoint,
    pub phi_limit: f64,
    pub m_limit: f64,
    pub n_values: Vec<usize>,
    pub phi_n: Vec<f64>,
    pub u_n: Vec<f64>,
    pub errors_phi: Vec<f64>,
    pub errors_u: Vec<f64>,
    pub fitted_slope_phi: f64,
    pub fitted_slope_u: f64,
    /// `None` when exact enumeration is not available (continuous measure or
    /// budget exceeded).
    pub lemma1_margins: Vec<Option<f64>>,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "n,phi_n,u_n,err_phi,err_u,lemma1_margin";

    pub fn to_csv(&self) -> String {
        use crate::io::fmt17;
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.n_values.len() {
            let margin = self.lemma1_margins[i].map_or_else(String::new, fmt17);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.n_values[i],
                fmt17(self.phi_n[i]),
                fmt17(self.u_n[i]),
                fmt17(self.errors_phi[i]),
                fmt17(self.errors_u[i]),
                margin
            ));
        }
        out
    }

    /// `max(scale(n) * err) / min(scale(n) * err)`; a bounded ratio is the
    /// finite-range form of an `O(1/scale)` rate.
    pub fn scaled_spread(errors: &[f64], ns: &[usize], power: f64) -> f64 {
        let scaled: Vec<f64> = errors
            .iter()
            .zip(ns)
            .map(|(e, &n)| e * (n as f64).powf(power))
            .collect();
        let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }
}

pub fn convergence_study(
    m: &SpinMeasure,
    p: ModelPoint,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    if n_list.len() < 4 {
        return Err(Error::Precondition(format!(
            "convergence study needs at least 4 sizes, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Precondition(
            "sizes must be positive and strictly ascending".into(),
        ));
    }
    let limit = hopf_lax(m, p)?;
    let rows: Vec<(f64, f64, Option<f64>)> = n_list
        .par_iter()
        .map(|&n| -> Result<_> {
            let phi = phi_n_quadrature(m, p, n)?;
            let u = u_n_quadrature(m, p, n)?;
            let margin = match lemma1_check(m, p, n) {
                Ok(c) => Some(c.margin()),
                Err(Error::NotDiscrete | Error::BudgetExceeded { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok((phi, u, margin))
        })
        .collect::<Result<_>>()?;
    let phi_n: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let u_n: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let errors_phi: Vec<f64> = phi_n.iter().map(|v| (v - limit.action_phi).abs()).collect();
    let errors_u: Vec<f64> = u_n
        .iter()
        .map(|v| (v + limit.magnetization_m).abs())
        .collect();
    let log_n: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
    let log_of = |v: &[f64]| v.iter().map(|e| e.max(1e-300).ln()).collect::<Vec<_>>();
    Ok(ConvergenceReport {
        point: p,
        phi_limit: limit.action_phi,
        m_limit: limit.magnetization_m,
        n_values: n_list.to_vec(),
        fitted_slope_phi: fitted_slope(&log_n, &log_of(&errors_phi)),
        fitted_slope_u: fitted_slope(&log_n, &log_of(&errors_u)),
        phi_n,
        u_n,
        errors_phi,
        errors_u,
        lemma1_margins: rows.iter().map(|r| r.2).collect(),
    })
}
