//! Pipeline configuration: one structured document for every tunable.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::SessionError;
use crate::cue::CueConfig;
use crate::director::DirectorConfig;
use crate::planner::PlannerConfig;
use crate::scene::PolarBounds;
use crate::servo::ServoConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub planner: PlannerConfig<f64>,
    pub servo: ServoConfig<f64>,
    pub cue: CueConfig,
    pub director: DirectorConfig,
    /// Record one telemetry sample every this many servo steps.
    pub telemetry_every: usize,
    /// Extra inset of the planning box beyond the limit-monitor band, meters
    /// and radians.
    pub plan_margin: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            servo: ServoConfig::default(),
            cue: CueConfig::default(),
            director: DirectorConfig::default(),
            telemetry_every: 5,
            plan_margin: 0.005,
        }
    }
}

impl PipelineConfig {
    /// Servo steps per planner tick.
    pub fn substeps(&self) -> usize {
        (1.0 / (self.planner.tick_hz * self.servo.dt)).round().max(1.0) as usize
    }

    pub fn tick_period(&self) -> f64 {
        self.substeps() as f64 * self.servo.dt
    }

    /// Workspace box the planner and orbit use: the servo box shrunk past
    /// the limit-monitor band so planned poses never trigger recovery.
    pub fn planning_bounds(&self) -> PolarBounds<f64> {
        self.planner.bounds.inset(
            self.servo.limit_epsilon_linear + self.plan_margin,
            self.servo.limit_epsilon_angular + self.plan_margin,
        )
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |e: String| SessionError::InvalidConfig(e);
        self.planner.validate().map_err(|e| bad(e.to_string()))?;
        self.servo.validate().map_err(bad)?;
        self.cue.validate().map_err(bad)?;
        self.director.validate().map_err(bad)?;
        if self.telemetry_every == 0 {
            return Err(bad("telemetry_every must be at least 1".into()));
        }
        if !(self.plan_margin >= 0.0) || !self.planning_bounds().is_valid() {
            return Err(bad("plan_margin leaves no workspace".into()));
        }
        let ratio = 1.0 / (self.planner.tick_hz * self.servo.dt);
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(bad("servo dt must divide the planner period".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SessionError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Returns a copy with a JSON merge patch applied, validated.
    pub fn patched(&self, patch: &Value) -> Result<Self, SessionError> {
        if patch.is_null() {
            return Ok(self.clone());
        }
        let mut doc = serde_json::to_value(self).expect("config serializes");
        merge_patch(&mut doc, patch);
        let cfg: Self = serde_json::from_value(doc).map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// JSON merge patch: objects merge recursively, `null` deletes, anything
/// else replaces.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    let Value::Object(p) = patch else {
        *target = patch.clone();
        return;
    };
    if !target.is_object() {
        *target = Value::Object(Default::default());
    }
    let t = target.as_object_mut().expect("just made an object");
    for (k, v) in p {
        if v.is_null() {
            t.remove(k);
        } else {
            merge_patch(t.entry(k.clone()).or_insert(Value::Null), v);
        }
    }
}
