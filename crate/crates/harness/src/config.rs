//! TOML experiment configuration.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use mer_core::control::{Controller, OpenLoop, Siso, StopAndWait, TableMimo};
use mer_core::morphology::{FootGeometry, GaitProgram, RobotMorphology};
use mer_core::simulator::{ContactMode, REACH_FACTOR, STEPS_PER_CYCLE};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub n_pairs: usize,
    pub leg_length: f64,
    pub module_spacing: f64,
    pub shoulder_amplitude: f64,
    pub foot: FootGeometry,
}

impl Default for RobotConfig {
    fn default() -> Self {
        let m = RobotMorphology::default();
        RobotConfig {
            n_pairs: m.n_pairs,
            leg_length: m.leg_length,
            module_spacing: m.module_spacing,
            shoulder_amplitude: m.shoulder_amplitude,
            foot: m.foot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitConfig {
    pub spatial_period: f64,
    /// Body amplitude; the collision-limited stride optimum when absent.
    pub body_amplitude: Option<f64>,
    pub vertical_amplitude: f64,
    /// Hip clearance (cm); derived from the morphology when absent.
    pub clearance: Option<f64>,
}

impl Default for GaitConfig {
    fn default() -> Self {
        GaitConfig {
            spatial_period: 1.0,
            body_amplitude: None,
            vertical_amplitude: 0.0,
            clearance: None,
        }
    }
}

/// Stepfield generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    pub mean: f64,
    pub std: f64,
    pub increment: f64,
    /// Blocks along the direction of travel.
    pub cols: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerrainConfig {
    /// Moderate rugosity field (about 0.17).
    pub low: FieldParams,
    /// High rugosity field (about 0.32).
    pub high: FieldParams,
    /// Trials run on fields of `trial_cols × trial_rows` blocks drawn with
    /// the same parameters, large enough that a veering robot stays on them.
    pub trial_cols: usize,
    pub trial_rows: usize,
    /// Random start offset along and across the field (cm).
    pub start_jitter: f64,
}

impl Default for TerrainConfig {
    fn default() -> Self {
        TerrainConfig {
            low: FieldParams {
                mean: 6.0,
                std: 2.0,
                increment: 1.0,
                cols: 16,
                rows: 8,
            },
            high: FieldParams {
                mean: 6.25,
                std: 4.0,
                increment: 2.5,
                cols: 30,
                rows: 5,
            },
            trial_cols: 60,
            trial_rows: 40,
            start_jitter: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    #[default]
    Geometric,
    Channel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    pub mode: ContactKind,
    /// Reach window (cm); a fixed fraction of leg length when absent.
    pub reach: Option<f64>,
    /// Fields per rugosity level when calibrating the channel.
    pub calibration_seeds: usize,
}

impl Default for ContactConfig {
    fn default() -> Self {
        ContactConfig {
            mode: ContactKind::Geometric,
            reach: None,
            calibration_seeds: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    #[default]
    OpenLoop,
    Siso,
    StopAndWait,
    TableMimo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SisoConfig {
    pub gain: f64,
    pub desired_duty: f64,
}

impl Default for SisoConfig {
    fn default() -> Self {
        let s = Siso::default();
        SisoConfig {
            gain: s.gain,
            desired_duty: s.desired_duty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TableMimoConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Trials per ensemble cell.
    pub seeds: usize,
    /// Cycles per speed trial.
    pub cycles: usize,
    /// Cycles per displacement profile.
    pub profile_cycles: usize,
    pub steps_per_cycle: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            seeds: 30,
            cycles: 3,
            profile_cycles: 10,
            steps_per_cycle: STEPS_PER_CYCLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub amplitudes: Vec<f64>,
    pub pairs: Vec<usize>,
    pub vertical_amplitudes: Vec<f64>,
    pub spatial_periods: Vec<f64>,
    /// Seeds per cell in the speed/robustness trade-off.
    pub tradeoff_seeds: usize,
    /// Distance for the time-to-distance statistic (cm).
    pub distance: f64,
    /// Cycle budget when timing the distance.
    pub distance_cycles: usize,
    pub bound_gaits: usize,
    pub arc_length: f64,
    pub arc_width: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            amplitudes: (0..=16).map(|k| 0.1 * k as f64).collect(),
            pairs: (3..=10).collect(),
            vertical_amplitudes: vec![0.0, PI / 18.0, PI / 9.0, 2.0 * PI / 9.0],
            spatial_periods: vec![0.5, 0.75, 1.0, 1.25, 1.5],
            tradeoff_seeds: 10,
            distance: 60.0,
            distance_cycles: 8,
            bound_gaits: 50,
            arc_length: 12.0,
            arc_width: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub robot: RobotConfig,
    pub gait: GaitConfig,
    pub terrain: TerrainConfig,
    pub contact: ContactConfig,
    pub controller: ControllerKind,
    pub siso: SisoConfig,
    pub table_mimo: TableMimoConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Config::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.morphology()?;
        let s = &self.sweep;
        let r = &self.run;
        if r.seeds == 0 || s.tradeoff_seeds == 0 {
            return Err(HarnessError::config("seed counts must be at least 1"));
        }
        if r.cycles == 0 || r.profile_cycles == 0 || s.distance_cycles == 0 {
            return Err(HarnessError::config("cycle counts must be at least 1"));
        }
        if r.steps_per_cycle < 64 {
            return Err(HarnessError::config("steps_per_cycle must be at least 64"));
        }
        if s.amplitudes.is_empty() || s.pairs.is_empty() || s.vertical_amplitudes.is_empty() || s.spatial_periods.is_empty() {
            return Err(HarnessError::config("sweep axes must be nonempty"));
        }
        if s.pairs.iter().any(|&n| !(3..=10).contains(&n)) {
            return Err(HarnessError::config("sweep.pairs must lie in 3..=10"));
        }
        if s.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(HarnessError::config("sweep.amplitudes must be non-negative"));
        }
        if s.bound_gaits == 0 || !(s.distance > 0.0) || !(s.arc_length > 0.0) {
            return Err(HarnessError::config("bound_gaits, distance and arc_length must be positive"));
        }
        if matches!(self.contact.reach, Some(d) if !(d > 0.0)) {
            return Err(HarnessError::config("contact.reach must be positive"));
        }
        if self.controller == ControllerKind::TableMimo && self.table_mimo.path.is_none() {
            return Err(HarnessError::config("controller = table_mimo needs table_mimo.path"));
        }
        let d = self.siso.desired_duty;
        if !(0.0..=0.5).contains(&d) || !self.siso.gain.is_finite() {
            return Err(HarnessError::config("siso.desired_duty must lie in [0, 0.5] and gain be finite"));
        }
        Ok(())
    }

    pub fn morphology(&self) -> Result<RobotMorphology> {
        let r = &self.robot;
        let m = RobotMorphology::new(r.n_pairs, r.leg_length, r.module_spacing, r.shoulder_amplitude)
            .map_err(|e| HarnessError::config(e.to_string()))?
            .with_foot(r.foot);
        m.validate().map_err(|e| HarnessError::config(e.to_string()))?;
        Ok(m)
    }

    /// Gait for a morphology with the given body amplitude.
    pub fn gait(&self, morph: &RobotMorphology, body_amplitude: f64) -> Result<GaitProgram> {
        let mut g = GaitProgram::for_morphology(morph)
            .with_spatial_period(self.gait.spatial_period)
            .with_vertical_amplitude(self.gait.vertical_amplitude)
            .with_body_amplitude(body_amplitude);
        if let Some(c) = self.gait.clearance {
            g.clearance = c;
        }
        g.validate().map_err(|e| HarnessError::config(e.to_string()))?;
        Ok(g)
    }

    pub fn reach(&self, morph: &RobotMorphology) -> f64 {
        self.contact.reach.unwrap_or(REACH_FACTOR * morph.leg_length)
    }

    pub fn geometric_mode(&self, morph: &RobotMorphology) -> ContactMode {
        ContactMode::Geometric {
            reach: self.reach(morph),
        }
    }

    pub fn controller(&self) -> Result<Box<dyn Controller>> {
        Ok(match self.controller {
            ControllerKind::OpenLoop => Box::new(OpenLoop),
            ControllerKind::Siso => Box::new(self.siso_controller()),
            ControllerKind::StopAndWait => Box::new(StopAndWait),
            ControllerKind::TableMimo => {
                let path = self
                    .table_mimo
                    .path
                    .as_ref()
                    .ok_or_else(|| HarnessError::config("table_mimo.path missing"))?;
                Box::new(TableMimo::load(path).map_err(|e| HarnessError::config(e.to_string()))?)
            }
        })
    }

    pub fn siso_controller(&self) -> Siso {
        Siso {
            gain: self.siso.gain,
            desired_duty: self.siso.desired_duty,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn keys_parse() {
        let cfg = Config::from_toml(
            r#"
controller = "siso"
[siso]
gain = 2.0
desired_duty = 0.45
[robot]
n_pairs = 7
foot = { variant = "c_arc", arc_length = 12.0, width = 2.0 }
[contact]
reach = 3.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.controller, ControllerKind::Siso);
        assert_eq!(cfg.siso.gain, 2.0);
        assert_eq!(cfg.robot.n_pairs, 7);
        assert_eq!(cfg.reach(&cfg.morphology().unwrap()), 3.0);
        assert!(matches!(cfg.robot.foot, FootGeometry::CArc { .. }));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml("bogus = 1").is_err());
        assert!(Config::from_toml("[siso]\ngian = 3.2").is_err());
        assert!(Config::from_toml("controller = \"pid\"").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(Config::from_toml("[run]\nseeds = 0").is_err());
        assert!(Config::from_toml("[sweep]\npairs = [2, 3]").is_err());
        assert!(Config::from_toml("[sweep]\namplitudes = []").is_err());
        assert!(Config::from_toml("[robot]\nleg_length = -1.0").is_err());
        assert!(Config::from_toml("controller = \"table_mimo\"").is_err());
        assert!(Config::from_toml("[siso]\ndesired_duty = 0.7").is_err());
    }

    #[test]
    fn builtin_controllers() {
        let mut cfg = Config::default();
        for (kind, name) in [
            (ControllerKind::OpenLoop, "open_loop"),
            (ControllerKind::Siso, "siso"),
            (ControllerKind::StopAndWait, "stop_and_wait"),
        ] {
            cfg.controller = kind;
            assert_eq!(cfg.controller().unwrap().name(), name);
        }
    }
}
