//! Run configuration: plain `key = value` files with `#` comments, merged
//! with command-line overrides (overrides win).

use crate::conductivity::{QuadScheme, QuadratureSpec};
use crate::params::PhysParams;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config file {0} not found or unreadable: {1}")]
    Unreadable(PathBuf, String),
    #[error("{file}:{line}: malformed line (expected `key = value`): {text:?}")]
    MalformedLine {
        file: PathBuf,
        line: usize,
        text: String,
    },
    #[error("{file}:{line}: unknown key {key:?}")]
    UnknownKey {
        file: PathBuf,
        line: usize,
        key: String,
    },
    #[error("{file}:{line}: value for {key:?} is not numeric: {value:?}")]
    NonNumericValue {
        file: PathBuf,
        line: usize,
        key: String,
        value: String,
    },
    #[error("key {key:?} expects a non-negative integer, got {value:?}")]
    NonIntegerValue { key: String, value: String },
}

pub const CONFIG_KEYS: [&str; 13] = [
    "v_f",
    "delta_so",
    "lambda_r",
    "b_field",
    "hbar",
    "e_charge",
    "mass",
    "c_light",
    "e_cut_factor",
    "rel_tol",
    "grid_n",
    "fd_step",
    "seed",
];

/// Everything a run needs: physics parameters, quadrature defaults, grid
/// and finite-difference settings, and the seed for randomized checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PhysParams,
    pub quad: QuadratureSpec,
    pub grid_n: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PhysParams::natural(),
            quad: QuadratureSpec::default(),
            grid_n: 256,
            fd_step: 1e-5,
            seed: 1,
            output_path: None,
        }
    }
}

/// Optional values layered on top of a config; unset fields keep the
/// underlying value. CLI flags produce one of these.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub v_f: Option<f64>,
    pub delta_so: Option<f64>,
    pub lambda_r: Option<f64>,
    pub b_field: Option<f64>,
    pub hbar: Option<f64>,
    pub e_charge: Option<f64>,
    pub mass: Option<f64>,
    pub c_light: Option<f64>,
    pub e_cut_factor: Option<f64>,
    pub rel_tol: Option<f64>,
    pub grid_n: Option<usize>,
    pub fd_step: Option<f64>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn apply(&mut self, overrides: &ConfigOverrides) {
        let o = overrides;
        set(&mut self.params.v_f, o.v_f);
        set(&mut self.params.delta_so, o.delta_so);
        set(&mut self.params.lambda_r, o.lambda_r);
        set(&mut self.params.b_field, o.b_field);
        set(&mut self.params.hbar, o.hbar);
        set(&mut self.params.e_charge, o.e_charge);
        set(&mut self.params.mass, o.mass);
        set(&mut self.params.c_light, o.c_light);
        set(&mut self.quad.e_cut_factor, o.e_cut_factor);
        set(&mut self.quad.rel_tol, o.rel_tol);
        set(&mut self.grid_n, o.grid_n);
        set(&mut self.fd_step, o.fd_step);
        set(&mut self.seed, o.seed);
    }

    /// Quadrature spec with the configured grid size when the polar scheme
    /// is requested.
    pub fn polar_quad(&self) -> QuadratureSpec {
        QuadratureSpec {
            scheme: QuadScheme::PolarGrid {
                n_radial: self.grid_n,
                n_angular: self.grid_n,
            },
            ..self.quad
        }
    }
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Loads a config file and applies the overrides on top of it. Every key
/// must be one of [`CONFIG_KEYS`]; diagnostics carry the file, line and key.
pub fn load_config(
    path: &Path,
    overrides: &ConfigOverrides,
) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Unreadable(path.to_path_buf(), e.to_string()))?;
    let mut config = parse_config(&text, path)?;
    config.apply(overrides);
    Ok(config)
}

/// Parses the `key = value` body; `path` is used only for diagnostics.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ConfigError::MalformedLine {
                file: path.to_path_buf(),
                line: line_no,
                text: raw_line.to_string(),
            }
        })?;
        let key = key.trim();
        let value = value.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                file: path.to_path_buf(),
                line: line_no,
                key: key.to_string(),
            });
        }
        let numeric: f64 = value.parse().map_err(|_| ConfigError::NonNumericValue {
            file: path.to_path_buf(),
            line: line_no,
            key: key.to_string(),
            value: value.to_string(),
        })?;
        let integer = |key: &str| -> Result<u64, ConfigError> {
            if numeric < 0.0 || numeric.fract() != 0.0 {
                return Err(ConfigError::NonIntegerValue {
                    key: key.to_string(),
                    value: value.to_string(),
                });
            }
            Ok(numeric as u64)
        };
        match key {
            "v_f" => config.params.v_f = numeric,
            "delta_so" => config.params.delta_so = numeric,
            "lambda_r" => config.params.lambda_r = numeric,
            "b_field" => config.params.b_field = numeric,
            "hbar" => config.params.hbar = numeric,
            "e_charge" => config.params.e_charge = numeric,
            "mass" => config.params.mass = numeric,
            "c_light" => config.params.c_light = numeric,
            "e_cut_factor" => config.quad.e_cut_factor = numeric,
            "rel_tol" => config.quad.rel_tol = numeric,
            "grid_n" => config.grid_n = integer(key)? as usize,
            "fd_step" => config.fd_step = numeric,
            "seed" => config.seed = integer(key)?,
            _ => unreachable!("key list checked above"),
        }
    }
    Ok(config)
}
