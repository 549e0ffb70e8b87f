//! Run configuration: one TOML file per run.
//!
//! ```toml
//! seed = 7                       # required whenever snapshots are sampled
//! output_dir = "out"
//!
//! [lattice]
//! rows = 3
//! cols = 2
//! boundary = "torus"             # "open" | "torus"
//! # hole = { kind = "central" }
//! # holed_disc_radius = 9.5      # replaces rows/cols with a disc around a hole
//!
//! [model]
//! kind = "pxp"                   # "pxp" | "vdw" (then r_trunc_over_a)
//! rb_over_a = 2.4
//!
//! [schedule]
//! preset = "ed"                  # "ed" | "lab"; explicit fields override
//! omega_t = 60.0
//! endpoints = [5.0]              # Δ/Ω at which the sweep stops
//! dt = 0.05
//! snapshots = 1000
//!
//! [quench]
//! omega_q = 10.0
//!
//! [[observables]]
//! kind = "z_loop"
//! template = "z_hexagon"
//! estimator = "exact"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ruby_qsl::dynamics::{QuenchSpec, SweepOptions};
use ruby_qsl::hamiltonian::{HamiltonianSpec, Model, SweepSchedule};
use ruby_qsl::hilbert::{CoverageRule, DEFAULT_DIMENSION_CAP};
use ruby_qsl::lattice::{
    bffm_catalogue, template_catalogue, Boundary, HoleSpec, RubyLattice, DEFAULT_BULK_DEPTH,
};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub quench: Option<QuenchSpec>,
    #[serde(default)]
    pub observables: Vec<ObservableConfig>,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
    #[serde(default)]
    pub dimer: DimerConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default = "one")]
    pub rows: usize,
    #[serde(default = "one")]
    pub cols: usize,
    #[serde(default = "open")]
    pub boundary: Boundary,
    #[serde(default)]
    pub hole: Option<HoleSpec>,
    #[serde(default)]
    pub bulk_depth: Option<usize>,
    #[serde(default)]
    pub holed_disc_radius: Option<f64>,
}

fn one() -> usize {
    1
}

fn open() -> Boundary {
    Boundary::Open
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Pxp,
    Vdw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "pxp")]
    pub kind: ModelKind,
    #[serde(default = "default_rb")]
    pub rb_over_a: f64,
    #[serde(default)]
    pub r_trunc_over_a: Option<f64>,
    #[serde(default = "default_phase")]
    pub phase: f64,
    #[serde(default)]
    pub dimension_cap: Option<usize>,
}

fn pxp() -> ModelKind {
    ModelKind::Pxp
}

fn default_rb() -> f64 {
    2.4
}

fn default_phase() -> f64 {
    0.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Pxp,
            rb_over_a: default_rb(),
            r_trunc_over_a: None,
            phase: default_phase(),
            dimension_cap: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Ed,
    Lab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default = "ed")]
    pub preset: Preset,
    /// Total duration for the `ed` preset, in units of 1/Ω₀.
    #[serde(default)]
    pub omega_t: Option<f64>,
    #[serde(default)]
    pub omega_max: Option<f64>,
    #[serde(default)]
    pub t_ramp_on: Option<f64>,
    #[serde(default)]
    pub t_sweep: Option<f64>,
    #[serde(default)]
    pub delta_min: Option<f64>,
    #[serde(default)]
    pub delta_max: Option<f64>,
    #[serde(default)]
    pub t_ramp_down: Option<f64>,
    #[serde(default = "default_endpoints")]
    pub endpoints: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Snapshots sampled per endpoint (0: none).
    #[serde(default)]
    pub snapshots: usize,
}

fn ed() -> Preset {
    Preset::Ed
}

fn default_endpoints() -> Vec<f64> {
    vec![5.0]
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Ed,
            omega_t: None,
            omega_max: None,
            t_ramp_on: None,
            t_sweep: None,
            delta_min: None,
            delta_max: None,
            t_ramp_down: None,
            endpoints: default_endpoints(),
            dt: None,
            snapshots: 0,
        }
    }
}

pub const DEFAULT_OMEGA_T: f64 = 60.0;

impl ScheduleConfig {
    pub fn schedule(&self) -> Result<SweepSchedule, CliError> {
        let mut s = match self.preset {
            Preset::Ed => SweepSchedule::ed_default(self.omega_t.unwrap_or(DEFAULT_OMEGA_T)),
            Preset::Lab => {
                if self.omega_t.is_some() {
                    return Err(CliError::Config("schedule.omega_t only applies to the `ed` preset".into()));
                }
                SweepSchedule::lab_default()
            }
        };
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut s.omega_max, self.omega_max);
        set(&mut s.t_ramp_on, self.t_ramp_on);
        set(&mut s.t_sweep, self.t_sweep);
        set(&mut s.delta_min, self.delta_min);
        set(&mut s.delta_max, self.delta_max);
        set(&mut s.t_ramp_down, self.t_ramp_down);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    ZLoop,
    XLoop,
    Bffm,
    Scaling,
    G2,
    G3,
    VertexStats,
    Density,
    Logical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Exact,
    Snapshots,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub kind: ObservableKind,
    /// Loop template (loop, scaling and correlator kinds) or BFFM pairing.
    #[serde(default)]
    pub template: Option<String>,
    #[serde(default)]
    pub estimator: Option<EstimatorKind>,
    /// Snapshots drawn from a state input for the snapshot estimator.
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default = "default_calibration_template")]
    pub template: String,
    /// Scan end in units of the ideal quench time.
    #[serde(default = "two")]
    pub tau_max_factor: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_calibration_template() -> String {
    "x_hexagon".into()
}

fn two() -> f64 {
    2.0
}

fn default_steps() -> usize {
    100
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            template: default_calibration_template(),
            tau_max_factor: two(),
            steps: default_steps(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleConfig {
    #[default]
    ExemptBoundary,
    Strict,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimerConfig {
    #[serde(default)]
    pub rule: RuleConfig,
    #[serde(default)]
    pub cap: Option<usize>,
}

impl DimerConfig {
    pub fn rule(&self) -> CoverageRule {
        match self.rule {
            RuleConfig::ExemptBoundary => CoverageRule::ExemptBoundary,
            RuleConfig::Strict => CoverageRule::Strict,
        }
    }
}

/// Scalar overrides given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub omega_t: Option<f64>,
    pub dt: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir.clone();
        }
        if o.omega_t.is_some() {
            self.schedule.omega_t = o.omega_t;
        }
        if o.dt.is_some() {
            self.schedule.dt = o.dt;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for o in &self.observables {
            let Some(t) = &o.template else {
                if matches!(
                    o.kind,
                    ObservableKind::ZLoop | ObservableKind::XLoop | ObservableKind::Bffm | ObservableKind::Scaling | ObservableKind::G2 | ObservableKind::G3
                ) {
                    return Err(CliError::Config(format!("observable {:?} needs a template", o.kind)));
                }
                continue;
            };
            let known = if o.kind == ObservableKind::Bffm {
                bffm_catalogue().iter().any(|p| &p.name == t)
            } else {
                template_catalogue().iter().any(|p| &p.name == t)
            };
            if !known {
                return Err(CliError::Config(format!("unknown template `{t}` in observable {:?}", o.kind)));
            }
        }
        if !template_catalogue().iter().any(|t| t.name == self.calibrate.template) {
            return Err(CliError::Config(format!(
                "unknown calibration template `{}`",
                self.calibrate.template
            )));
        }
        if self.schedule.endpoints.is_empty() {
            return Err(CliError::Config("schedule.endpoints is empty".into()));
        }
        if let Some(dt) = self.schedule.dt {
            if !(dt > 0.0) {
                return Err(CliError::Config("schedule.dt must be positive".into()));
            }
        }
        if self.model.kind == ModelKind::Vdw && self.model.r_trunc_over_a.is_none() {
            return Err(CliError::Config("model.kind = \"vdw\" needs r_trunc_over_a".into()));
        }
        self.schedule.schedule()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the (overridden) configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Seed for sampling runs; its absence is a configuration error.
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("`seed` is required for runs that sample snapshots".into()))
    }

    pub fn build_lattice(&self) -> Result<RubyLattice, CliError> {
        let l = &self.lattice;
        let lat = match l.holed_disc_radius {
            Some(r) => RubyLattice::holed_disc(r)?,
            None => RubyLattice::build(l.rows, l.cols, l.boundary, l.hole)?,
        };
        Ok(lat.with_bulk_depth(l.bulk_depth.unwrap_or(DEFAULT_BULK_DEPTH)))
    }

    pub fn hamiltonian(&self) -> HamiltonianSpec {
        let model = match self.model.kind {
            ModelKind::Pxp => Model::Pxp,
            ModelKind::Vdw => Model::Vdw {
                r_trunc_over_a: self.model.r_trunc_over_a.unwrap_or(0.0),
            },
        };
        HamiltonianSpec {
            model,
            rb_over_a: self.model.rb_over_a,
            omega: 1.0,
            delta: 0.0,
            phase: self.model.phase,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        let d = SweepOptions::default();
        SweepOptions {
            dt: self.schedule.dt.unwrap_or(d.dt),
            dimension_cap: self.model.dimension_cap.unwrap_or(DEFAULT_DIMENSION_CAP),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os("RUBY_QSL_OUTPUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
