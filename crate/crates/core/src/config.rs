//! Run configuration as a TOML document.
//!
//! Every section and key is optional; missing values take the defaults
//! below. Unknown keys are rejected.
//!
//! ```toml
//! [system]
//! f0 = 50.0                # Hz
//! s_base = 1000.0          # MW
//! p_load = 1.0             # pu
//! d_eq_pct_per_hz = 2.0
//! horizon = 30.0           # s
//! dt = 0.005               # s
//!
//! [event]
//! t_event = 1.0            # s
//! t_add_lag = 0.0          # s, 0 = ideal step
//!
//! [grid]
//! res_levels = [0.05, 0.15, 0.3, 0.45, 0.6]
//! hydro_share = 0.15
//! imbalances = [0.025, 0.05, ..., 0.4]
//! h_thermal = [2.0, 6.0, 10.0]
//! h_hydro = [1.75, 3.25, 4.75]
//!
//! [plants.thermal]         # droop_r, t_gov, t_ch, t_rh, f_hp
//! [plants.hydro]           # droop_r, t_servo, r_temp, t_reset, t_water
//!
//! [sizing]
//! dp_inc = 0.01            # pu
//! h_res_cap = 15.0         # s
//! # nadir_floor = 49.2     # Hz, default f0 - 0.8
//!
//! [output]
//! dir = "out"
//! workers = 8
//!
//! [[rocof_limits]]
//! window = 0.5
//! limit = 2.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{PlantDynamics, SystemConstants};
use crate::error::{Error, Result};
use crate::metrics::RocofLimits;
use crate::sizing::SizingSettings;
use crate::sweep::{
    default_h_hydro, default_h_thermal, default_imbalances, default_res_levels, GridSpec,
    SweepSettings,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventConfig {
    pub t_event: f64,
    pub t_add_lag: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            t_event: 1.0,
            t_add_lag: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridAxes {
    pub res_levels: Vec<f64>,
    pub hydro_share: f64,
    pub imbalances: Vec<f64>,
    pub h_thermal: Vec<f64>,
    pub h_hydro: Vec<f64>,
}

impl Default for GridAxes {
    fn default() -> Self {
        Self {
            res_levels: default_res_levels(),
            hydro_share: 0.15,
            imbalances: default_imbalances(),
            h_thermal: default_h_thermal(),
            h_hydro: default_h_hydro(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConstants,
    pub event: EventConfig,
    pub grid: GridAxes,
    pub plants: PlantDynamics,
    pub sizing: SizingSettings,
    pub output: OutputConfig,
    pub rocof_limits: RocofLimits,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidParameter(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.plants.validate()?;
        self.sizing.validate()?;
        if !(self.event.t_event >= 0.0 && self.event.t_event < self.system.horizon) {
            return Err(Error::InvalidParameter(format!(
                "t_event {} outside [0, horizon)",
                self.event.t_event
            )));
        }
        if !(self.event.t_add_lag >= 0.0) {
            return Err(Error::InvalidParameter(
                "t_add_lag must be non-negative".into(),
            ));
        }
        let last_window = self.rocof_limits.windows().last().unwrap_or(0.0);
        if self.event.t_event + last_window > self.system.horizon {
            return Err(Error::InvalidParameter(format!(
                "longest ROCOF window {last_window} s does not fit after the event"
            )));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            res_levels: self.grid.res_levels.clone(),
            hydro_share: self.grid.hydro_share,
            imbalances: self.grid.imbalances.clone(),
            h_thermal_set: self.grid.h_thermal.clone(),
            h_hydro_set: self.grid.h_hydro.clone(),
            constants: self.system.clone(),
            plants: self.plants.clone(),
            t_event: self.event.t_event,
            t_add_lag: self.event.t_add_lag,
        }
    }

    pub fn sweep_settings(&self, verify: bool) -> SweepSettings {
        SweepSettings {
            limits: self.rocof_limits.clone(),
            sizing: self.sizing.clone(),
            verify,
        }
    }
}
