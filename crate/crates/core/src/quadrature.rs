//! Composite Gauss-Legendre quadrature of sharply peaked, log-space integrands.

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

const PANEL_ORDER: usize = 16;
const MAX_PANELS: usize = 1 << 15;

/// Result of integrating `e^{l(y)}` together with a weighted moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegral {
    /// `ln ∫ e^{l(y)} dy`.
    pub log_mass: f64,
    /// `∫ w(y) e^{l(y)} dy / ∫ e^{l(y)} dy`.
    pub weighted_mean: f64,
}

pub struct PanelQuadrature {
    rule: Vec<(f64, f64)>,
}

impl Default for PanelQuadrature {
    fn default() -> Self {
        Self::new(PANEL_ORDER)
    }
}

impl PanelQuadrature {
    pub fn new(order: usize) -> Self {
        let rule = GaussLegendre::new(order.max(2))
            .expect("order >= 2")
            .as_node_weight_pairs()
            .to_vec();
        PanelQuadrature { rule }
    }

    fn fixed<L, W>(&self, log_f: &L, weight: &W, a: f64, b: f64, panels: usize) -> LogIntegral
    where
        L: Fn(f64) -> f64,
        W: Fn(f64) -> f64,
    {
        let h = (b - a) / panels as f64;
        let mut pts = Vec::with_capacity(panels * self.rule.len());
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for &(node, w) in &self.rule {
                let y = mid + 0.5 * h * node;
                pts.push((y, 0.5 * h * w, log_f(y)));
            }
        }
        let peak = pts.iter().fold(f64::NEG_INFINITY, |acc, p| acc.max(p.2));
        let mut mass = 0.0;
        let mut moment = 0.0;
        for &(y, w, l) in &pts {
            let e = w * (l - peak).exp();
            mass += e;
            moment += e * weight(y);
        }
        LogIntegral {
            log_mass: peak + mass.ln(),
            weighted_mean: moment / mass,
        }
    }

    /// Integrate over `[a, b]` starting from panels of width at most
    /// `scale`, doubling the panel count until both the log-mass and the
    /// weighted mean change by less than `tol`.
    pub fn integrate<L, W>(
        &self,
        log_f: L,
        weight: W,
        a: f64,
        b: f64,
        scale: f64,
        tol: f64,
    ) -> Result<LogIntegral>
    where
        L: Fn(f64) -> f64,
        W: Fn(f64) -> f64,
    {
        let mut panels = (((b - a) / scale).ceil() as usize).clamp(4, MAX_PANELS);
        let mut prev = self.fixed(&log_f, &weight, a, b, panels);
        loop {
            panels *= 2;
            let next = self.fixed(&log_f, &weight, a, b, panels);
            let d_mass = (next.log_mass - prev.log_mass).abs();
            let d_mean =
                (next.weighted_mean - prev.weighted_mean).abs() / (1.0 + next.weighted_mean.abs());
            if d_mass <= tol * (1.0 + next.log_mass.abs()) && d_mean <= tol {
                return Ok(next);
            }
            if panels >= MAX_PANELS {
                return Err(Error::Quadrature(d_mass.max(d_mean)));
            }
            prev = next;
        }
    }
}

/// `ln Σ e^{v_i}` with a running-max shift.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let peak = values.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v));
    if peak == f64::NEG_INFINITY {
        return peak;
    }
    peak + values.iter().map(|v| (v - peak).exp()).sum::<f64>().ln()
}
