//! Run configuration: a TOML file describing the domain, grid, carrier,
//! solver, schedule, forcing, diagnostics and output directory.
//!
//! Lengths are in channel-width units and the viscosity is 1.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::carrier::{build_carrier, calibrate_epsilon, Calibration, CarrierField, CarrierMode};
use crate::error::{Error, Result};
use crate::field::FaceForce;
use crate::geometry::{validate_domain, DomainSpec, Rect, ValidatedDomain};
use crate::grid::MacGrid;
use crate::invading::{parse_schedule, Schedule};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    /// Cell size.
    pub delta: f64,
    pub domain: DomainSpec,
    #[serde(default)]
    pub carrier: CarrierOptions,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub force: ForceSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierOptions {
    pub mode: CarrierMode,
    /// Cut-off parameter; calibrated from the samples when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Random test fields per outlet for the Leray–Hopf check (0 disables it).
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Outlet slab `[a, b]` on which the check is made.
    pub slab: [f64; 2],
    /// Bound the sampled ratio has to stay under after calibration.
    pub target: f64,
}

impl Default for CarrierOptions {
    fn default() -> Self {
        CarrierOptions { mode: CarrierMode::Hopf, eps: None, samples: 0, seed: None, slab: [2.0, 10.0], target: 0.0625 }
    }
}

/// Truncation lengths; `2+4k,K=6` when neither key is given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl ScheduleSpec {
    pub fn times(&self) -> Result<Vec<f64>> {
        match (&self.formula, &self.times) {
            (Some(_), Some(_)) => Err(Error::ValidationError {
                key: "schedule".into(),
                reason: "give either `formula` or `times`, not both".into(),
            }),
            (Some(f), None) => parse_schedule(f),
            (None, Some(t)) => Ok(t.clone()),
            (None, None) => parse_schedule("2+4k,K=6"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceSpec {
    /// Constant body force.
    pub value: [f64; 2],
    /// Support of the force; everywhere when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Rect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSpec {
    pub energy: bool,
    /// Fraction of the truncation at which the energy balance is evaluated.
    pub energy_at: f64,
    pub energy_tolerance: f64,
    pub asymptotics: bool,
    /// Carrier used for the asymptotics run. With `cp` the cap data are the
    /// limit profile itself, so nothing but the core disturbs the tail.
    pub asymptotics_mode: CarrierMode,
    /// Truncation used for the asymptotics run.
    pub asymptotics_length: f64,
    /// Final-slab deviation allowed, relative to `max |CP|`.
    pub asymptotics_threshold: f64,
    pub uniqueness: bool,
    /// Largest data amplitude accepted as small.
    pub small_data: f64,
    /// Dirichlet norm of the second initialization.
    pub perturbation: f64,
    pub uniqueness_tolerance: f64,
    /// Flux amplitudes for the uniqueness sweep.
    pub sweep: Vec<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            energy: true,
            energy_at: 0.5,
            energy_tolerance: 1e-6,
            asymptotics: false,
            asymptotics_mode: CarrierMode::Cp,
            asymptotics_length: 16.0,
            asymptotics_threshold: 0.01,
            uniqueness: false,
            small_data: 0.1,
            perturbation: 0.1,
            uniqueness_tolerance: 1e-8,
            sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("out") }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parse without validating. Errors carry the line and the key path.
pub fn parse_str(text: &str) -> Result<RunSpec> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::ParseError {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        key: String::new(),
        message: e.message().to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        Error::ParseError {
            line: inner.span().map_or(0, |s| line_of(text, s.start)),
            key: if key == "." { String::new() } else { key },
            message: inner.message().to_string(),
        }
    })
}

impl RunSpec {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run spec serializes")
    }

    /// Every problem with the spec, each tagged with its key.
    pub fn validation_errors(&self) -> Vec<Error> {
        let mut errs = Vec::new();
        let bad = |key: &str, reason: String| Error::ValidationError { key: key.into(), reason };
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            errs.push(bad("delta", format!("{} is not a positive cell size", self.delta)));
        } else if let Err(e) = self.domain.check_commensurate(self.delta) {
            errs.push(e);
        }
        if let Err(e) = validate_domain(self.domain.clone()) {
            errs.push(bad("domain", e.to_string()));
        }
        let c = &self.carrier;
        if let Some(eps) = c.eps {
            if !(eps > 0.0 && eps <= 1.0) {
                errs.push(bad("carrier.eps", format!("{eps} is outside (0, 1]")));
            }
        }
        if c.samples > 0 && c.seed.is_none() {
            errs.push(bad("carrier.seed", "a seed is required when samples > 0".into()));
        }
        if c.samples > 0 && c.mode != CarrierMode::Hopf {
            errs.push(bad("carrier.samples", "sampling needs mode = \"hopf\"".into()));
        }
        if !(c.slab[0] >= 2.0 && c.slab[1] > c.slab[0]) {
            errs.push(bad("carrier.slab", format!("{:?} must satisfy 2 <= a < b", c.slab)));
        }
        if !(c.target > 0.0) {
            errs.push(bad("carrier.target", format!("{} is not positive", c.target)));
        }
        let s = &self.solver;
        if !(s.tolerance > 0.0) {
            errs.push(bad("solver.tolerance", format!("{} is not positive", s.tolerance)));
        }
        if s.max_newton == 0 && s.max_picard == 0 {
            errs.push(bad("solver", "no iterations allowed".into()));
        }
        match self.schedule.times() {
            Ok(t) => {
                if self.delta > 0.0 {
                    if let Err(e) = Schedule::new(t, self.delta, c.mode) {
                        errs.push(e);
                    }
                }
            }
            Err(e) => errs.push(e),
        }
        let d = &self.diagnostics;
        if !(d.energy_at > 0.0 && d.energy_at < 1.0) {
            errs.push(bad("diagnostics.energy_at", format!("{} is outside (0, 1)", d.energy_at)));
        }
        if d.asymptotics && d.asymptotics_length < 12.0 {
            errs.push(bad("diagnostics.asymptotics_length", format!("{} is shorter than 12", d.asymptotics_length)));
        }
        if d.uniqueness && self.data_amplitude() > d.small_data {
            errs.push(bad(
                "diagnostics.small_data",
                format!("data amplitude {} exceeds the small-data bound {}", self.data_amplitude(), d.small_data),
            ));
        }
        errs
    }

    /// Largest flux, slip, wall datum or force component.
    pub fn data_amplitude(&self) -> f64 {
        let mut m = self.force.value[0].abs().max(self.force.value[1].abs());
        for o in &self.domain.outlets {
            m = m.max(o.flux.abs()).max(o.slip[0].abs()).max(o.slip[1].abs());
        }
        for o in &self.domain.obstacles {
            for s in [o.left, o.right, o.bottom, o.top] {
                m = m.max(s.normal.abs()).max(s.tangential.abs());
            }
        }
        for w in &self.domain.core_walls {
            m = m.max(w.data.normal.abs()).max(w.data.tangential.abs());
        }
        m
    }

    pub fn validated_domain(&self) -> Result<ValidatedDomain> {
        validate_domain(self.domain.clone())
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.schedule.times()?, self.delta, self.carrier.mode)
    }

    /// Body force on `grid`.
    pub fn force_on(&self, grid: &MacGrid) -> FaceForce {
        let window = self.force.window.map(|r| [r.x0, r.y0, r.x1, r.y1]);
        FaceForce::uniform(grid, self.force.value, window)
    }

    /// Carrier of the spec. Without an explicit `eps`, a hopf carrier with
    /// samples is calibrated first; otherwise `DEFAULT_EPS` is used.
    pub fn carrier(&self, domain: &Arc<ValidatedDomain>) -> Result<(CarrierField, Option<Calibration>)> {
        let c = &self.carrier;
        let calibration = match (c.eps, c.mode, c.samples, c.seed) {
            (None, CarrierMode::Hopf, n, Some(seed)) if n > 0 => {
                Some(calibrate_epsilon(domain, c.slab[0], c.slab[1], n, seed, c.target)?)
            }
            _ => None,
        };
        let eps = c.eps.or(calibration.as_ref().map(|k| k.eps)).unwrap_or(DEFAULT_EPS);
        Ok((build_carrier(domain, self.delta, eps, c.mode)?, calibration))
    }
}

/// Cut-off parameter used when neither the config nor a calibration gives one.
pub const DEFAULT_EPS: f64 = 0.125;

/// Parse and validate; on failure the first error is returned. Use
/// [`RunSpec::validation_errors`] for the full list.
pub fn parse_config(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let spec = parse_str(&text)?;
    match spec.validation_errors().into_iter().next() {
        Some(e) => Err(e),
        None => Ok(spec),
    }
}

/// SHA-256 of the configuration text, hex encoded.
pub fn config_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "strip"
delta = 0.25
[domain]
core = [[0.0, 0.0, 1.0, 1.0]]
[[domain.outlets]]
direction = "+x"
attach = [1.0, 0.0]
width = 1.0
flux = 1.0
[[domain.outlets]]
direction = "-x"
attach = [0.0, 1.0]
width = 1.0
flux = -1.0
"#;

    #[test]
    fn minimal_config_is_valid() {
        let s = parse_str(MINIMAL).unwrap();
        assert!(s.validation_errors().is_empty(), "{:?}", s.validation_errors());
        assert_eq!(s.schedule().unwrap().times[6], 26.0);
    }

    #[test]
    fn bad_key_reports_path_and_line() {
        let text = MINIMAL.replace("width = 1.0\nflux = 1.0", "width = \"wide\"\nflux = 1.0");
        match parse_str(&text) {
            Err(Error::ParseError { line, key, .. }) => {
                assert_eq!(key, "domain.outlets[0].width");
                assert_eq!(line, 9);
            }
            other => panic!("{other:?}"),
        }
    }
}
