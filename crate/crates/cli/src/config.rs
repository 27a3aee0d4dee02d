//! Run-config files and their merge with command-line flags.

use std::path::{Path, PathBuf};

use mfhj_core::{MeasureSpec, SpinMeasure, Symmetry};
use serde::Deserialize;
use serde_json::Value;

use crate::range::{parse_range, parse_sizes, parse_value};

/// A measure given by builtin name, by path to a JSON file, or inline.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MeasureArg {
    Spec(MeasureSpec),
    Name(String),
}

/// A grid given as range text, a single number or a list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridArg {
    Number(f64),
    List(Vec<f64>),
    Text(String),
}

impl GridArg {
    fn text(&self) -> String {
        match self {
            GridArg::Number(v) => format!("{v}"),
            GridArg::List(vs) => vs
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(","),
            GridArg::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub measure: Option<MeasureArg>,
    pub measure_sigma: Option<MeasureArg>,
    pub measure_tau: Option<MeasureArg>,
    pub beta: Option<GridArg>,
    pub h: Option<GridArg>,
    pub h1: Option<GridArg>,
    pub h2: Option<GridArg>,
    pub alpha: Option<GridArg>,
    pub x: Option<GridArg>,
    pub t: Option<GridArg>,
    pub x0: Option<GridArg>,
    pub n: Option<GridArg>,
    pub n1: Option<GridArg>,
    pub method: Option<String>,
    pub counting: Option<bool>,
    pub symmetrize: Option<bool>,
    pub quick: Option<bool>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub characteristics: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }
}

pub fn builtin_measure(name: &str) -> Option<MeasureSpec> {
    match name {
        "dichotomic" => Some(MeasureSpec::Dichotomic { l: None }),
        "uniform" => Some(MeasureSpec::Uniform { l: 2.0 }),
        "three_atoms" | "three-atoms" => Some(MeasureSpec::EquallySpaced { k: 3, l: 2.0 }),
        _ => None,
    }
}

/// Resolve a builtin name or a JSON file (either a run config with a
/// `measure` key or a bare measure object).
fn spec_from_name(name: &str) -> Result<MeasureSpec, String> {
    if let Some(spec) = builtin_measure(name) {
        return Ok(spec);
    }
    let text = std::fs::read_to_string(name)
        .map_err(|e| format!("'{name}' is neither a builtin measure (dichotomic, uniform, three_atoms) nor a readable file: {e}"))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| format!("measure file {name}: {e}"))?;
    let inner = value.get("measure").cloned().unwrap_or(value);
    match serde_json::from_value::<MeasureArg>(inner)
        .map_err(|e| format!("measure file {name}: {e}"))?
    {
        MeasureArg::Spec(s) => Ok(s),
        MeasureArg::Name(n) => {
            builtin_measure(&n).ok_or_else(|| format!("unknown builtin measure '{n}' in {name}"))
        }
    }
}

pub struct ResolvedMeasure {
    pub spec: MeasureSpec,
    pub measure: SpinMeasure,
}

/// Merges flags over a config file, collecting every problem instead of
/// stopping at the first.
#[derive(Default)]
pub struct Resolver {
    pub problems: Vec<String>,
    pub warnings: Vec<String>,
}

impl Resolver {
    fn pick<T>(&mut self, flag_name: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
        match (flag, file) {
            (Some(f), Some(_)) => {
                self.warnings.push(format!(
                    "--{flag_name} overrides the value from the config file"
                ));
                Some(f)
            }
            (Some(f), None) => Some(f),
            (None, file) => file,
        }
    }

    fn grid_text(
        &mut self,
        name: &str,
        flag: Option<String>,
        file: Option<GridArg>,
    ) -> Option<String> {
        self.pick(name, flag, file.map(|g| g.text()))
    }

    /// A grid; `default` applies when neither flag nor file sets it.
    pub fn grid(
        &mut self,
        name: &str,
        flag: Option<String>,
        file: Option<GridArg>,
        default: Option<&str>,
    ) -> Vec<f64> {
        let text = self
            .grid_text(name, flag, file)
            .or(default.map(String::from));
        match text {
            None => {
                self.problems.push(format!("missing required --{name}"));
                Vec::new()
            }
            Some(t) => parse_range(&t).unwrap_or_else(|e| {
                self.problems.push(format!("--{name}: {e}"));
                Vec::new()
            }),
        }
    }

    pub fn value(
        &mut self,
        name: &str,
        flag: Option<String>,
        file: Option<GridArg>,
        default: Option<f64>,
    ) -> f64 {
        let text = self.grid_text(name, flag, file);
        match (text, default) {
            (None, Some(d)) => d,
            (None, None) => {
                self.problems.push(format!("missing required --{name}"));
                f64::NAN
            }
            (Some(t), _) => parse_value(&t).unwrap_or_else(|e| {
                self.problems.push(format!("--{name}: {e}"));
                f64::NAN
            }),
        }
    }

    pub fn sizes(
        &mut self,
        name: &str,
        flag: Option<String>,
        file: Option<GridArg>,
        default: Option<&str>,
    ) -> Vec<usize> {
        let text = self
            .grid_text(name, flag, file)
            .or(default.map(String::from));
        match text {
            None => {
                self.problems.push(format!("missing required --{name}"));
                Vec::new()
            }
            Some(t) => parse_sizes(&t).unwrap_or_else(|e| {
                self.problems.push(format!("--{name}: {e}"));
                Vec::new()
            }),
        }
    }

    pub fn flag(&mut self, name: &str, flag: bool, file: Option<bool>) -> bool {
        if flag && file == Some(false) {
            self.warnings
                .push(format!("--{name} overrides the value from the config file"));
        }
        flag || file.unwrap_or(false)
    }

    pub fn path(
        &mut self,
        name: &str,
        flag: Option<PathBuf>,
        file: Option<PathBuf>,
    ) -> Option<PathBuf> {
        self.pick(name, flag, file)
    }

    pub fn measure(
        &mut self,
        name: &str,
        flag: Option<String>,
        file: Option<MeasureArg>,
        default: Option<&str>,
        symmetry: Symmetry,
    ) -> Option<ResolvedMeasure> {
        let file = file.map(|m| match m {
            MeasureArg::Spec(s) => Ok(s),
            MeasureArg::Name(n) => spec_from_name(&n),
        });
        let flag = flag.map(|n| spec_from_name(&n));
        let chosen = self
            .pick(name, flag, file)
            .or_else(|| default.map(spec_from_name));
        let spec = match chosen {
            None => {
                self.problems.push(format!("missing required --{name}"));
                return None;
            }
            Some(Err(e)) => {
                self.problems.push(format!("--{name}: {e}"));
                return None;
            }
            Some(Ok(s)) => s,
        };
        match spec.build(symmetry) {
            Ok(measure) => Some(ResolvedMeasure { spec, measure }),
            Err(e) => {
                self.problems.push(format!("--{name}: {e}"));
                None
            }
        }
    }

    pub fn require(&mut self, ok: bool, problem: impl Into<String>) {
        if !ok {
            self.problems.push(problem.into());
        }
    }
}
