//! Flat `key = value` experiment configuration with `[tensor]`, `[solver]`,
//! and `[output]` sections, merged with command-line overrides.
//!
//! Grammar: one statement per line; `#` starts a comment; blank lines are
//! skipped; a line of the form `[name]` opens a section; every other
//! non-empty line must read `key = value` inside a section. Numeric values
//! accept integers, decimals, scientific notation, and exact rationals
//! `p/q`. Unknown sections or keys are line-numbered errors, never ignored.

use nullwave::algebra::{
    parse_rational, parse_tensor, preset_tensor, rational_to_f64, synthesize, CoefficientTensor,
    Decomposition,
};
use nullwave::profiles::Profile;
use nullwave::SolverConfig;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no tensor given: set preset, file, or decomposition under [tensor], or pass --preset/--tensor")]
    MissingTensor,
    #[error("tensor: {0}")]
    Tensor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Where the coefficient tensor comes from; the last assignment wins when a
/// config file and command-line flags both name one.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorSource {
    Preset(String),
    File(PathBuf),
    Decomposition(String),
}

impl TensorSource {
    pub fn resolve(&self) -> Result<CoefficientTensor, ConfigError> {
        match self {
            TensorSource::Preset(name) => {
                preset_tensor(name).map_err(|e| ConfigError::Tensor(e.to_string()))
            }
            TensorSource::File(path) => {
                let text = fs::read_to_string(path)?;
                parse_tensor(&text).map_err(|e| ConfigError::Tensor(e.to_string()))
            }
            TensorSource::Decomposition(text) => {
                let d = parse_decomposition(text).map_err(ConfigError::Tensor)?;
                Ok(synthesize(&d))
            }
        }
    }
}

/// A basis combination in the classifier's own print format, e.g.
/// `C1[1]=1/2, C2[1]=-1, C4[2]=-1`.
pub fn parse_decomposition(text: &str) -> Result<Decomposition, String> {
    let mut d = Decomposition::zero();
    for term in text.split(',') {
        let term = term.trim();
        if term.is_empty() {
            continue;
        }
        let (label, value) = term
            .split_once('=')
            .ok_or_else(|| format!("term `{term}` is not label=value"))?;
        let value = parse_rational(value.trim())?;
        let label = label.trim();
        let inner = label
            .strip_suffix(']')
            .and_then(|s| s.split_once('['))
            .ok_or_else(|| format!("label `{label}` is not C1[l]..C4[l]"))?;
        let (family, index) = inner;
        let l: usize = index
            .parse()
            .map_err(|_| format!("index `{index}` in `{label}` is not a small integer"))?;
        let slot = match (family, l) {
            ("C1", 0..=2) => &mut d.c_a[l],
            ("C2", 0..=2) => &mut d.c_b[l],
            ("C3", 1..=2) => &mut d.c_c[l - 1],
            ("C4", 1..=3) => &mut d.c_d[l - 1],
            _ => return Err(format!("no basis form named `{label}`")),
        };
        *slot = value;
    }
    Ok(d)
}

/// Everything a run needs, before the tensor source is resolved.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub tensor: Option<TensorSource>,
    pub epsilon: f64,
    pub f1: Profile,
    pub f2: Profile,
    pub h: f64,
    pub half_extent: f64,
    pub t_final: f64,
    pub cfl_safety: f64,
    pub fixed_point_tol: f64,
    pub m_diag: usize,
    /// Time between diagnostic samples, converted to a step stride.
    pub sample_interval: f64,
    pub workers: usize,
    pub csv: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let d = SolverConfig::defaults(CoefficientTensor::zero());
        ExperimentConfig {
            tensor: None,
            epsilon: d.epsilon,
            f1: d.f1,
            f2: d.f2,
            h: d.h,
            half_extent: d.half_extent,
            t_final: d.t_final,
            cfl_safety: d.cfl_safety,
            fixed_point_tol: d.fixed_point_tol,
            m_diag: d.m_diag,
            sample_interval: d.sample_stride as f64 * d.dt,
            workers: 1,
            csv: None,
        }
    }
}

/// Command-line flags that override the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub preset: Option<String>,
    pub tensor_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Tensor,
    Solver,
    Output,
}

impl ExperimentConfig {
    /// Defaults, then the config file when given, then flag overrides.
    pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        if let Some(p) = path {
            cfg.apply_text(&fs::read_to_string(p)?)?;
        }
        if let Some(name) = &ov.preset {
            cfg.tensor = Some(TensorSource::Preset(name.clone()));
        }
        if let Some(file) = &ov.tensor_file {
            cfg.tensor = Some(TensorSource::File(file.clone()));
        }
        if let Some(out) = &ov.out {
            cfg.csv = Some(out.clone());
        }
        if let Some(w) = ov.workers {
            cfg.workers = w.max(1);
        }
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut section: Option<Section> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = Some(match name.trim() {
                    "tensor" => Section::Tensor,
                    "solver" => Section::Solver,
                    "output" => Section::Output,
                    other => return Err(at(line_no, format!("unknown section [{other}]"))),
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            let section =
                section.ok_or_else(|| at(line_no, format!("key `{key}` before any section")))?;
            self.apply_key(section, key, value, line_no)?;
        }
        Ok(())
    }

    fn apply_key(
        &mut self,
        section: Section,
        key: &str,
        value: &str,
        line: usize,
    ) -> Result<(), ConfigError> {
        match section {
            Section::Tensor => match key {
                "preset" => self.tensor = Some(TensorSource::Preset(value.to_string())),
                "file" => self.tensor = Some(TensorSource::File(PathBuf::from(value))),
                "decomposition" => {
                    parse_decomposition(value).map_err(|e| at(line, e))?;
                    self.tensor = Some(TensorSource::Decomposition(value.to_string()));
                }
                other => {
                    return Err(at(
                        line,
                        format!("unknown [tensor] key `{other}` (preset, file, decomposition)"),
                    ))
                }
            },
            Section::Solver => match key {
                "epsilon" => self.epsilon = number(value, line)?,
                "h" => self.h = number(value, line)?,
                "half_extent" => self.half_extent = number(value, line)?,
                "t_final" => self.t_final = number(value, line)?,
                "cfl_safety" => self.cfl_safety = number(value, line)?,
                "fixed_point_tol" => self.fixed_point_tol = number(value, line)?,
                "sample_interval" => self.sample_interval = number(value, line)?,
                "m_diag" => self.m_diag = integer(value, line)?,
                "workers" => self.workers = integer(value, line)?.max(1),
                "f1" => self.f1 = Profile::parse(value).map_err(|e| at(line, e.to_string()))?,
                "f2" => self.f2 = Profile::parse(value).map_err(|e| at(line, e.to_string()))?,
                other => {
                    return Err(at(
                        line,
                        format!(
                            "unknown [solver] key `{other}` (epsilon, h, half_extent, t_final, \
                             cfl_safety, fixed_point_tol, sample_interval, m_diag, workers, f1, f2)"
                        ),
                    ))
                }
            },
            Section::Output => match key {
                "csv" => self.csv = Some(PathBuf::from(value)),
                other => return Err(at(line, format!("unknown [output] key `{other}` (csv)"))),
            },
        }
        Ok(())
    }

    pub fn resolve_tensor(&self) -> Result<CoefficientTensor, ConfigError> {
        self.tensor
            .as_ref()
            .ok_or(ConfigError::MissingTensor)?
            .resolve()
    }

    /// The solver-facing view; Δt follows the CFL fraction and the sample
    /// stride is the nearest whole number of steps per sample interval.
    pub fn solver_config(&self, tensor: CoefficientTensor) -> SolverConfig {
        let mut cfg = SolverConfig::defaults(tensor);
        cfg.epsilon = self.epsilon;
        cfg.f1 = self.f1.clone();
        cfg.f2 = self.f2.clone();
        cfg.h = self.h;
        cfg.dt = self.h * self.cfl_safety;
        cfg.half_extent = self.half_extent;
        cfg.t_final = self.t_final;
        cfg.cfl_safety = self.cfl_safety;
        cfg.fixed_point_tol = self.fixed_point_tol;
        cfg.m_diag = self.m_diag;
        cfg.sample_stride = ((self.sample_interval / cfg.dt).round() as usize).max(1);
        cfg
    }
}

/// Integer, decimal, scientific, or exact `p/q`.
fn number(value: &str, line: usize) -> Result<f64, ConfigError> {
    if value.contains('/') {
        let r = parse_rational(value).map_err(|e| at(line, e))?;
        return Ok(rational_to_f64(&r));
    }
    value
        .parse::<f64>()
        .map_err(|_| at(line, format!("`{value}` is not a number")))
}

fn integer(value: &str, line: usize) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| at(line, format!("`{value}` is not a nonnegative integer")))
}
