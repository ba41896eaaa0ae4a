//! Parameter sweeps over the conductivity engines with CSV output.
//!
//! Sweep points are evaluated concurrently; rows are emitted in input order
//! (point-major, berry before kubo) so identical configs produce identical
//! bytes.

use crate::conductivity::{
    csv_header, sigma_berry, sigma_kubo, ConductivityError, ConductivityResult, QuadratureSpec,
};
use crate::params::PhysParams;
use rayon::prelude::*;
use std::io::{self, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("sweep start {start} must be below stop {stop}")]
    EmptyRange { start: f64, stop: f64 },
    #[error(transparent)]
    Conductivity(#[from] ConductivityError),
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Which quantity the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// Fermi level, absolute units; delta_so comes from the config.
    FermiLevel,
    /// Spin-orbit gap; the Fermi level tracks it as ef_over_delta * delta.
    DeltaSo,
    /// Rashba coupling. The spin engines act on the spin-conserving sector,
    /// so the conductivity columns are flat in this variable by design.
    LambdaR,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FermiLevel => "E_F",
            Self::DeltaSo => "delta_so",
            Self::LambdaR => "lambda_R",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    /// Fermi level in units of the gap, for sweeps that do not fix E_F
    /// directly.
    pub ef_over_delta: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.steps < 2 {
            return Err(SweepError::TooFewSteps(self.steps));
        }
        if !(self.start < self.stop) {
            return Err(SweepError::EmptyRange {
                start: self.start,
                stop: self.stop,
            });
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| self.start + i as f64 * step)
            .collect()
    }
}

/// One CSV row: the conductivity columns plus the swept variable value.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub result: ConductivityResult,
    pub ef_over_delta: f64,
    pub sweep_value: f64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.11e}",
            self.result.csv_row(self.ef_over_delta),
            self.sweep_value
        )
    }
}

pub fn sweep_csv_header() -> String {
    format!("{},sweep_value", csv_header())
}

/// Runs the Berry and Kubo engines at every sweep point. Points run in
/// parallel; the returned rows are ordered by input point.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &PhysParams,
    quad: &QuadratureSpec,
) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let points = spec.values();
    let rows: Result<Vec<Vec<SweepRow>>, ConductivityError> = points
        .par_iter()
        .map(|&value| {
            let mut params = *base;
            let (e_f, delta) = match spec.variable {
                SweepVariable::FermiLevel => (value, params.delta_so),
                SweepVariable::DeltaSo => {
                    params.delta_so = value;
                    (spec.ef_over_delta * value, value)
                }
                SweepVariable::LambdaR => {
                    params.lambda_r = value;
                    (spec.ef_over_delta * params.delta_so, params.delta_so)
                }
            };
            let ef_over_delta = e_f / delta;
            let berry = sigma_berry(e_f, delta, &params, quad)?;
            let kubo = sigma_kubo(e_f, delta, &params, quad)?;
            Ok([berry, kubo]
                .into_iter()
                .map(|result| SweepRow {
                    result,
                    ef_over_delta,
                    sweep_value: value,
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Writes the header and one line per row, 12 significant digits,
/// newline-terminated.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<(), SweepError> {
    let wrap = |source: io::Error| SweepError::Unwritable {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(wrap)?;
    let mut text = String::with_capacity(rows.len() * 128);
    text.push_str(&sweep_csv_header());
    text.push('\n');
    for row in rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    file.write_all(text.as_bytes()).map_err(wrap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            variable: SweepVariable::FermiLevel,
            start: 1.0,
            stop: 5.0,
            steps: 9,
            ef_over_delta: 1.0,
        }
    }

    #[test]
    fn fermi_sweep_matches_the_closed_form() {
        let params = PhysParams::natural();
        let rows = run_sweep(&spec(), &params, &QuadratureSpec::default()).unwrap();
        assert_eq!(rows.len(), 18); // 9 points x 2 methods
        for row in &rows {
            let expect = -params.delta_so / row.sweep_value;
            assert!(
                (row.result.total - expect).abs() <= 1e-8,
                "{} at E_F = {}",
                row.result.total,
                row.sweep_value
            );
        }
    }

    #[test]
    fn delta_sweep_holds_the_ratio() {
        let params = PhysParams::natural();
        let spec = SweepSpec {
            variable: SweepVariable::DeltaSo,
            start: 0.5,
            stop: 2.0,
            steps: 4,
            ef_over_delta: 2.0,
        };
        let rows = run_sweep(&spec, &params, &QuadratureSpec::default()).unwrap();
        for row in &rows {
            assert!((row.ef_over_delta - 2.0).abs() < 1e-14);
            assert!((row.result.total + 0.5).abs() <= 1e-8);
        }
    }

    #[test]
    fn sweep_validation() {
        let mut s = spec();
        s.steps = 1;
        assert!(matches!(s.validate(), Err(SweepError::TooFewSteps(1))));
        let mut s = spec();
        s.stop = s.start;
        assert!(matches!(s.validate(), Err(SweepError::EmptyRange { .. })));
    }

    #[test]
    fn csv_file_shape_and_roundtrip() {
        let params = PhysParams::natural();
        let mut one = spec();
        one.steps = 2;
        one.stop = 2.0;
        let rows = run_sweep(&one, &params, &QuadratureSpec::default()).unwrap();

        let dir = std::env::temp_dir().join(format!("sweep_test_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("out.csv");
        write_sweep_csv(&rows[..1], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n'));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], sweep_csv_header());

        // parse back and recover the numbers
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[0], "berry");
        let total: f64 = fields[2].parse().unwrap();
        assert!((total - rows[0].result.total).abs() <= 1e-11);
        let sweep_value: f64 = fields[8].parse().unwrap();
        assert!((sweep_value - rows[0].sweep_value).abs() <= 1e-11);

        // identical input, identical bytes
        write_sweep_csv(&rows[..1], &dir.join("again.csv")).unwrap();
        let again = std::fs::read_to_string(dir.join("again.csv")).unwrap();
        assert_eq!(text, again);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unwritable_path_is_reported() {
        let err = write_sweep_csv(&[], Path::new("/no/such/dir/out.csv")).unwrap_err();
        assert!(matches!(err, SweepError::Unwritable { .. }));
    }
}
