//! Symmetric, compactly supported single-spin measures.
//!
//! Every measure is stored in folded form: the weight sitting at the origin
//! plus a list of `(value, weight)` pairs with `value > 0`, where `weight` is
//! the combined mass of `+value` and `-value`. Discrete measures fold their
//! atoms directly; tabulated densities are folded onto Gauss-Legendre nodes of
//! the half support `[0, L/2]`. Tilted expectations then reduce to sums of
//! `cosh`/`sinh` terms, which keeps `E[σ] = 0` and the odd/even symmetries of
//! the tilted moments exact in floating point.

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{finite, Error, Result};

pub const DEFAULT_QUADRATURE_NODES: usize = 128;

const SYMMETRY_TOL: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-12;

/// How builders treat inputs that are not invariant under `σ -> -σ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Reject asymmetric input.
    #[default]
    Strict,
    /// Replace μ(σ) by (μ(σ) + μ(-σ)) / 2.
    Symmetrize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureKind {
    /// Normalized atoms sorted by value.
    Discrete { atoms: Vec<(f64, f64)> },
    /// Density samples (linearly interpolated, zero outside the table) and
    /// the total number of quadrature nodes used on `[-L/2, L/2]`.
    Tabulated {
        table: Vec<(f64, f64)>,
        quadrature_nodes: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinMeasure {
    kind: MeasureKind,
    half_width: f64,
    zero_weight: f64,
    pairs: Vec<(f64, f64)>,
}

/// Moments of the exponentially tilted measure `μ_x(dσ) ∝ e^{xσ} μ(dσ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedState {
    pub tilt: f64,
    pub mean: f64,
    pub variance: f64,
    pub log_mgf: f64,
}

impl SpinMeasure {
    /// The ±1 spin with equal weights.
    pub fn dichotomic() -> Self {
        Self::symmetric_pair(1.0)
    }

    /// Two atoms at ±`value`.
    pub fn symmetric_pair(value: f64) -> Self {
        SpinMeasure {
            kind: MeasureKind::Discrete {
                atoms: vec![(-value, 0.5), (value, 0.5)],
            },
            half_width: value,
            zero_weight: 0.0,
            pairs: vec![(value, 1.0)],
        }
    }

    /// Uniform density on `[-L/2, L/2]`.
    pub fn uniform(l: f64) -> Result<Self> {
        check_width(l)?;
        let hw = 0.5 * l;
        Self::custom_density(
            &[(-hw, 1.0 / l), (hw, 1.0 / l)],
            l,
            DEFAULT_QUADRATURE_NODES,
            Symmetry::Strict,
        )
    }

    /// `k` equally weighted atoms evenly spaced on `[-L/2, L/2]`.
    pub fn equally_spaced_atoms(k: usize, l: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidMeasure(format!(
                "equally spaced atoms need k >= 2, got {k}"
            )));
        }
        check_width(l)?;
        let hw = 0.5 * l;
        let step = l / (k - 1) as f64;
        let atoms: Vec<(f64, f64)> = (0..k)
            .map(|i| {
                // mirror the upper half so that ±v are bitwise negatives
                let v = if 2 * i < k - 1 {
                    -hw + i as f64 * step
                } else {
                    hw - (k - 1 - i) as f64 * step
                };
                (if 2 * i == k - 1 { 0.0 } else { v }, 1.0 / k as f64)
            })
            .collect();
        Self::custom_atoms_in(&atoms, Some(hw), Symmetry::Strict)
    }

    /// Arbitrary atoms; the support half-width is the largest `|value|`.
    pub fn custom_atoms(atoms: &[(f64, f64)], symmetry: Symmetry) -> Result<Self> {
        Self::custom_atoms_in(atoms, None, symmetry)
    }

    /// Arbitrary atoms checked against a declared support half-width.
    pub fn custom_atoms_in(
        atoms: &[(f64, f64)],
        half_width: Option<f64>,
        symmetry: Symmetry,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms given".into()));
        }
        let mut list = Vec::with_capacity(atoms.len());
        for &(v, w) in atoms {
            if !v.is_finite() || !w.is_finite() {
                return Err(Error::InvalidMeasure(format!("non-finite atom ({v}, {w})")));
            }
            if w < 0.0 {
                return Err(Error::InvalidMeasure(format!("negative weight {w} at {v}")));
            }
            if w > 0.0 {
                list.push((v, w));
            }
        }
        let total: f64 = list.iter().map(|a| a.1).sum();
        if list.is_empty() || total <= 0.0 {
            return Err(Error::InvalidMeasure("total weight is zero".into()));
        }
        let extent = list.iter().fold(0.0_f64, |acc, a| acc.max(a.0.abs()));
        let hw = match half_width {
            Some(hw) => {
                if !(hw.is_finite() && hw >= 0.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "bad support half-width {hw}"
                    )));
                }
                if extent > hw * (1.0 + SUPPORT_TOL) + SUPPORT_TOL {
                    return Err(Error::InvalidMeasure(format!(
                        "atom at {extent} lies outside the declared support [-{hw}, {hw}]"
                    )));
                }
                hw
            }
            None => extent,
        };
        for a in &mut list {
            a.1 /= total;
        }
        let merged = merge_atoms(list);

        // weight of -v for every v, zero when absent
        let mirror = |v: f64| -> f64 {
            merged
                .iter()
                .find(|a| same_value(a.0, -v))
                .map_or(0.0, |a| a.1)
        };
        let asymmetric = merged
            .iter()
            .any(|&(v, w)| (mirror(v) - w).abs() > SYMMETRY_TOL);
        let atoms = if asymmetric {
            match symmetry {
                Symmetry::Strict => {
                    return Err(Error::InvalidMeasure(
                        "atoms are not symmetric under σ -> -σ".into(),
                    ))
                }
                Symmetry::Symmetrize => {
                    let mut both: Vec<(f64, f64)> = merged
                        .iter()
                        .flat_map(|&(v, w)| [(v, 0.5 * w), (-v, 0.5 * w)])
                        .collect();
                    both.sort_by(|a, b| a.0.total_cmp(&b.0));
                    merge_atoms(both)
                }
            }
        } else {
            merged
        };

        let mut zero_weight = 0.0;
        let mut pairs = Vec::new();
        for &(v, w) in &atoms {
            if v == 0.0 {
                zero_weight += w;
            } else if v > 0.0 {
                pairs.push((v, w + mirror_in(&atoms, v)));
            }
        }
        Ok(SpinMeasure {
            kind: MeasureKind::Discrete { atoms },
            half_width: hw,
            zero_weight,
            pairs,
        })
    }

    /// Tabulated density on `[-L/2, L/2]`, given as `(σ, density)` samples.
    /// The density is interpolated linearly between samples, vanishes outside
    /// the table, and is renormalized to unit mass.
    pub fn custom_density(
        table: &[(f64, f64)],
        l: f64,
        quadrature_nodes: usize,
        symmetry: Symmetry,
    ) -> Result<Self> {
        check_width(l)?;
        if quadrature_nodes < 2 {
            return Err(Error::InvalidMeasure(
                "need at least 2 quadrature nodes".into(),
            ));
        }
        if table.len() < 2 {
            return Err(Error::InvalidMeasure(
                "density table needs >= 2 samples".into(),
            ));
        }
        let hw = 0.5 * l;
        let mut tab: Vec<(f64, f64)> = table.to_vec();
        for &(s, d) in &tab {
            if !s.is_finite() || !d.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "non-finite sample ({s}, {d})"
                )));
            }
            if d < 0.0 {
                return Err(Error::InvalidMeasure(format!(
                    "negative density {d} at {s}"
                )));
            }
            if d > 0.0 && s.abs() > hw * (1.0 + SUPPORT_TOL) + SUPPORT_TOL {
                return Err(Error::InvalidMeasure(format!(
                    "density sample at {s} lies outside [-{hw}, {hw}]"
                )));
            }
        }
        tab.sort_by(|a, b| a.0.total_cmp(&b.0));
        if tab.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidMeasure("duplicate density abscissa".into()));
        }
        let scale = tab.iter().fold(1.0_f64, |acc, s| acc.max(s.1));
        let asymmetric = tab
            .iter()
            .any(|&(s, d)| (interpolate(&tab, -s) - d).abs() > SYMMETRY_TOL * scale);
        if asymmetric {
            match symmetry {
                Symmetry::Strict => {
                    return Err(Error::InvalidMeasure(
                        "density is not symmetric under σ -> -σ".into(),
                    ))
                }
                Symmetry::Symmetrize => {
                    let mut xs: Vec<f64> = tab.iter().flat_map(|s| [s.0, -s.0]).collect();
                    xs.sort_by(f64::total_cmp);
                    xs.dedup();
                    tab = xs
                        .into_iter()
                        .map(|s| (s, 0.5 * (interpolate(&tab, s) + interpolate(&tab, -s))))
                        .collect();
                }
            }
        }

        // breakpoints of the interpolant on the half support
        let mut breaks: Vec<f64> = vec![0.0, hw];
        breaks.extend(tab.iter().map(|s| s.0).filter(|&s| s > 0.0 && s < hw));
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let segments = breaks.len() - 1;
        let per_segment = (quadrature_nodes.div_ceil(2 * segments)).max(4);
        let rule = GaussLegendre::new(per_segment)
            .map_err(|e| Error::InvalidMeasure(format!("quadrature rule: {e}")))?;

        let mut pairs = Vec::with_capacity(segments * per_segment);
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (b + a);
            for &(node, weight) in rule.as_node_weight_pairs() {
                let s = mid + half * node;
                let w = 2.0 * half * weight * interpolate(&tab, s);
                if w > 0.0 {
                    pairs.push((s, w));
                }
            }
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidMeasure("density integrates to zero".into()));
        }
        for p in &mut pairs {
            p.1 /= total;
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(SpinMeasure {
            kind: MeasureKind::Tabulated {
                table: tab,
                quadrature_nodes,
            },
            half_width: hw,
            zero_weight: 0.0,
            pairs,
        })
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// `L/2`.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `L`, the full length of the support interval.
    pub fn support_width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.kind, MeasureKind::Discrete { .. })
    }

    /// Atoms of a discrete measure, `None` for tabulated densities.
    pub fn atoms(&self) -> Option<&[(f64, f64)]> {
        match &self.kind {
            MeasureKind::Discrete { atoms } => Some(atoms),
            MeasureKind::Tabulated { .. } => None,
        }
    }

    /// Folded representation: `(weight at 0, [(v > 0, mass of ±v)])`.
    pub fn folded(&self) -> (f64, &[(f64, f64)]) {
        (self.zero_weight, &self.pairs)
    }

    /// Additive constant of the counting (unnormalized) convention:
    /// `log K` for `K` atoms, `log L` for a density on an interval of length `L`.
    pub fn counting_constant(&self) -> f64 {
        match &self.kind {
            MeasureKind::Discrete { atoms } => (atoms.len() as f64).ln(),
            MeasureKind::Tabulated { .. } => self.support_width().ln(),
        }
    }

    /// Untilted second moment, `Λ''(0)`.
    pub fn variance(&self) -> f64 {
        self.pairs.iter().map(|&(v, w)| w * v * v).sum()
    }

    /// `Λ(x) = log E[e^{xσ}]`.
    pub fn log_mgf(&self, x: f64) -> Result<f64> {
        finite("log_mgf argument", x)?;
        Ok(self.lambda(x))
    }

    /// Tilted mean `Λ'(tilt)`, variance `Λ''(tilt)` and `Λ(tilt)`.
    pub fn tilted(&self, tilt: f64) -> Result<TiltedState> {
        finite("tilt", tilt)?;
        let (log_mgf, mean, variance) = self.moments(tilt);
        Ok(TiltedState {
            tilt,
            mean,
            variance,
            log_mgf,
        })
    }

    /// Unchecked `Λ(x)`; the caller guarantees `x` is finite.
    pub(crate) fn lambda(&self, x: f64) -> f64 {
        let a = x.abs();
        let shift = a * self.half_width;
        let mut z = self.zero_weight * (-shift).exp();
        for &(v, w) in &self.pairs {
            z += w * even_part(a, v, self.half_width, shift);
        }
        shift + z.ln()
    }

    /// Unchecked `Λ'(x)`.
    pub(crate) fn mean(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let a = x.abs();
        let shift = a * self.half_width;
        let mut z = self.zero_weight * (-shift).exp();
        let mut s1 = 0.0;
        for &(v, w) in &self.pairs {
            z += w * even_part(a, v, self.half_width, shift);
            s1 += w * v * odd_part(a, v, self.half_width, shift);
        }
        (s1 / z).copysign(x)
    }

    /// Unchecked `(Λ, Λ', Λ'')` at `x`.
    pub(crate) fn moments(&self, x: f64) -> (f64, f64, f64) {
        let a = x.abs();
        let hw = self.half_width;
        let shift = a * hw;
        let e0 = (-shift).exp();
        let mut z = self.zero_weight * e0;
        let mut s1 = 0.0;
        for &(v, w) in &self.pairs {
            z += w * even_part(a, v, hw, shift);
            s1 += w * v * odd_part(a, v, hw, shift);
        }
        let m = s1 / z;
        // variance as a sum of nonnegative terms, no cancellation near saturation
        let mut var = self.zero_weight * e0 * m * m;
        for &(v, w) in &self.pairs {
            let up = (a * (v - hw)).exp();
            let down = (-a * (v + hw)).exp();
            var += 0.5 * w * (up * (v - m) * (v - m) + down * (v + m) * (v + m));
        }
        let mean = if x == 0.0 { 0.0 } else { m.copysign(x) };
        (shift + z.ln(), mean, (var / z).max(0.0))
    }
}

/// `e^{-shift} cosh(a v)` without overflow.
#[inline]
fn even_part(a: f64, v: f64, hw: f64, shift: f64) -> f64 {
    let av = a * v;
    if av < 0.5 {
        (-shift).exp() * av.cosh()
    } else {
        0.5 * ((a * (v - hw)).exp() + (-a * (v + hw)).exp())
    }
}

/// `e^{-shift} sinh(a v)` without overflow or cancellation.
#[inline]
fn odd_part(a: f64, v: f64, hw: f64, shift: f64) -> f64 {
    let av = a * v;
    if av < 0.5 {
        (-shift).exp() * av.sinh()
    } else {
        0.5 * ((a * (v - hw)).exp() - (-a * (v + hw)).exp())
    }
}

fn check_width(l: f64) -> Result<()> {
    if l.is_finite() && l > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMeasure(format!(
            "support width L must be positive, got {l}"
        )))
    }
}

fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1.0)
}

fn mirror_in(atoms: &[(f64, f64)], v: f64) -> f64 {
    atoms
        .iter()
        .find(|a| same_value(a.0, -v))
        .map_or(0.0, |a| a.1)
}

/// Sort and merge atoms with numerically identical values; a value within
/// rounding of the origin is snapped to exactly 0.
fn merge_atoms(mut list: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    list.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(list.len());
    for (mut v, w) in list {
        if v.abs() <= 1e-15 {
            v = 0.0;
        }
        match out.last_mut() {
            Some(last) if same_value(last.0, v) => last.1 += w,
            _ => out.push((v, w)),
        }
    }
    // exact mirror images for the symmetric part
    let n = out.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        if same_value(out[i].0, -out[j].0) {
            out[i].0 = -out[j].0;
        }
    }
    out
}

/// Linear interpolation of a sorted table, zero outside its range.
pub(crate) fn interpolate(table: &[(f64, f64)], s: f64) -> f64 {
    let first = table[0];
    let last = table[table.len() - 1];
    if s < first.0 || s > last.0 {
        return 0.0;
    }
    let idx = table.partition_point(|p| p.0 <= s);
    if idx == 0 {
        return first.1;
    }
    if idx >= table.len() {
        return last.1;
    }
    let (x0, y0) = table[idx - 1];
    let (x1, y1) = table[idx];
    y0 + (y1 - y0) * (s - x0) / (x1 - x0)
}

/// Measure description as it appears in run-config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasureSpec {
    Dichotomic {
        #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
        l: Option<f64>,
    },
    Uniform {
        #[serde(rename = "L", default = "default_width")]
        l: f64,
    },
    EquallySpaced {
        k: usize,
        #[serde(rename = "L", default = "default_width")]
        l: f64,
    },
    Atoms {
        atoms: Vec<[f64; 2]>,
    },
    Density {
        #[serde(rename = "L")]
        l: f64,
        table: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        quadrature_nodes: Option<usize>,
    },
}

fn default_width() -> f64 {
    2.0
}

/// Top-level wrapper of a measure config file: `{"measure": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub measure: MeasureSpec,
}

impl MeasureSpec {
    pub fn build(&self, symmetry: Symmetry) -> Result<SpinMeasure> {
        match self {
            MeasureSpec::Dichotomic { l: None } => Ok(SpinMeasure::dichotomic()),
            MeasureSpec::Dichotomic { l: Some(l) } => {
                check_width(*l)?;
                Ok(SpinMeasure::symmetric_pair(0.5 * l))
            }
            MeasureSpec::Uniform { l } => SpinMeasure::uniform(*l),
            MeasureSpec::EquallySpaced { k, l } => SpinMeasure::equally_spaced_atoms(*k, *l),
            MeasureSpec::Atoms { atoms } => {
                let list: Vec<(f64, f64)> = atoms.iter().map(|a| (a[0], a[1])).collect();
                SpinMeasure::custom_atoms(&list, symmetry)
            }
            MeasureSpec::Density {
                l,
                table,
                quadrature_nodes,
            } => {
                let tab: Vec<(f64, f64)> = table.iter().map(|a| (a[0], a[1])).collect();
                SpinMeasure::custom_density(
                    &tab,
                    *l,
                    quadrature_nodes.unwrap_or(DEFAULT_QUADRATURE_NODES),
                    symmetry,
                )
            }
        }
    }
}
