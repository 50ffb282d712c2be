//! Aggregated single-bus frequency model.
//!
//! The system is reduced to one equivalent rotating mass driven by the swing
//! equation in per unit on the system base:
//!
//! ```text
//! 2 H_eq d(Δf)/dt = ΔP_T + ΔP_H + ΔP_add − ΔP_load − D Δf
//! ```
//!
//! Thermal units are a droop-fed governor lag feeding a single-reheat
//! turbine; hydro units are a droop-fed servo with transient-droop
//! compensation feeding a rigid water column. Converter-interfaced renewables
//! provide no governor response and enter only through the inertia constant
//! they emulate.
//!
//! Internally frequency is in pu of `f0`; traces are reported in Hz.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::rk4_step;

const SHARE_TOL: f64 = 1e-9;

/// System-wide constants and integration settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConstants {
    /// Nominal frequency (Hz).
    pub f0: f64,
    /// System rated power (MW).
    pub s_base: f64,
    /// Pre-event load (pu of `s_base`).
    pub p_load: f64,
    /// Load damping (% load change per Hz).
    pub d_eq_pct_per_hz: f64,
    /// Simulated time span (s).
    pub horizon: f64,
    /// Integration step (s).
    pub dt: f64,
}

impl Default for SystemConstants {
    fn default() -> Self {
        Self {
            f0: 50.0,
            s_base: 1000.0,
            p_load: 1.0,
            d_eq_pct_per_hz: 2.0,
            horizon: 30.0,
            dt: 0.005,
        }
    }
}

impl SystemConstants {
    pub fn validate(&self) -> Result<()> {
        let ok = self.f0 > 0.0
            && self.s_base > 0.0
            && self.p_load > 0.0
            && self.p_load <= 1.0
            && self.d_eq_pct_per_hz >= 0.0
            && self.dt > 0.0
            && self.dt <= 0.01
            && self.horizon >= 30.0 * self.dt
            && [
                self.f0,
                self.s_base,
                self.p_load,
                self.d_eq_pct_per_hz,
                self.horizon,
                self.dt,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "system constants out of range: {self:?}"
            )))
        }
    }

    /// Number of samples in a trace over the horizon.
    pub fn sample_count(&self) -> usize {
        (self.horizon / self.dt + 1e-9).floor() as usize + 1
    }
}

/// Load damping expressed as pu load change per pu frequency deviation,
/// taken on the operating load.
pub fn damping_pu(constants: &SystemConstants) -> f64 {
    constants.d_eq_pct_per_hz / 100.0 * constants.f0 * constants.p_load
}

/// Supply-side portfolio: rated-power shares and inertia constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationMix {
    pub share_thermal: f64,
    pub share_hydro: f64,
    pub share_res: f64,
    pub h_thermal: f64,
    pub h_hydro: f64,
    /// Emulated inertia constant of the renewable fleet (s).
    #[serde(default)]
    pub h_res_virtual: f64,
}

impl GenerationMix {
    /// Mix with thermal taking whatever hydro and renewables leave.
    pub fn from_res_level(share_res: f64, share_hydro: f64, h_thermal: f64, h_hydro: f64) -> Self {
        Self {
            share_thermal: 1.0 - share_hydro - share_res,
            share_hydro,
            share_res,
            h_thermal,
            h_hydro,
            h_res_virtual: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let shares = [self.share_thermal, self.share_hydro, self.share_res];
        if shares.iter().any(|s| !s.is_finite() || *s < -SHARE_TOL) {
            return Err(Error::InvalidParameter(format!(
                "generation shares must be non-negative: thermal {}, hydro {}, res {}",
                self.share_thermal, self.share_hydro, self.share_res
            )));
        }
        let sum: f64 = shares.iter().sum();
        if (sum - 1.0).abs() > SHARE_TOL {
            return Err(Error::InvalidParameter(format!(
                "generation shares sum to {sum}, expected 1"
            )));
        }
        if [self.h_thermal, self.h_hydro, self.h_res_virtual]
            .iter()
            .any(|h| !h.is_finite() || *h < 0.0)
        {
            return Err(Error::InvalidParameter(
                "inertia constants must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Inertia of the machines physically coupled to the grid (s).
    pub fn h_synchronous(&self) -> f64 {
        self.h_thermal * self.share_thermal + self.h_hydro * self.share_hydro
    }
}

/// Capacity-weighted equivalent inertia on the system base, synchronous
/// plus emulated.
pub fn compute_h_eq(mix: &GenerationMix) -> f64 {
    mix.h_synchronous() + mix.h_res_virtual * mix.share_res
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalGovernor {
    /// Permanent droop (pu frequency / pu power).
    pub droop_r: f64,
    /// Governor time constant (s).
    pub t_gov: f64,
    /// Steam chest time constant (s).
    pub t_ch: f64,
    /// Reheater time constant (s).
    pub t_rh: f64,
    /// High-pressure turbine power fraction.
    pub f_hp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HydroGovernor {
    /// Permanent droop (pu).
    pub droop_r: f64,
    /// Servo (gate) time constant (s).
    pub t_servo: f64,
    /// Transient droop (pu).
    pub r_temp: f64,
    /// Transient-droop reset time (s).
    pub t_reset: f64,
    /// Water starting time (s).
    pub t_water: f64,
}

/// Governor and turbine parameters for the conventional fleet.
///
/// The defaults are fitted so that the frequency nadirs of the reference
/// scenarios (5 % RES with a 2.5 % step, 60 % RES with a 40 % step) land near
/// the published values while the sweep keeps a strong linear dependence on
/// RES share and imbalance. They sit inside typical ranges except the hydro
/// transient droop, which is on the high side.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantDynamics {
    pub thermal: ThermalGovernor,
    pub hydro: HydroGovernor,
}

impl Default for ThermalGovernor {
    fn default() -> Self {
        Self {
            droop_r: 0.0715,
            t_gov: 0.06,
            t_ch: 0.1,
            t_rh: 10.5,
            f_hp: 0.46,
        }
    }
}

impl Default for HydroGovernor {
    fn default() -> Self {
        Self {
            droop_r: 0.032,
            t_servo: 0.58,
            r_temp: 0.845,
            t_reset: 2.75,
            t_water: 2.93,
        }
    }
}

impl PlantDynamics {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thermal;
        let h = &self.hydro;
        let positive = [t.t_gov, t.t_ch, t.t_rh, h.t_servo, h.t_reset, h.t_water]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        let droops = [t.droop_r, h.droop_r]
            .iter()
            .all(|r| r.is_finite() && *r > 0.0 && *r <= 1.0);
        let ok = positive
            && droops
            && (0.0..=1.0).contains(&t.f_hp)
            && h.r_temp.is_finite()
            && h.r_temp > h.droop_r;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "plant dynamics out of range: {self:?}"
            )))
        }
    }
}

/// One simulation case.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub constants: SystemConstants,
    pub mix: GenerationMix,
    pub plants: PlantDynamics,
    /// Load step (pu of `s_base`); positive is a generation deficit.
    pub dp_imbalance: f64,
    /// Time at which the step is applied (s).
    pub t_event: f64,
    /// Fast additional power delivered from `t_event` (pu).
    pub dp_add: f64,
    /// First-order delivery lag of `dp_add` (s); zero is an ideal step.
    pub t_add_lag: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        self.mix.validate()?;
        self.plants.validate()?;
        let ok = (0.0..=1.0).contains(&self.dp_imbalance)
            && self.t_event >= 0.0
            && self.t_event < self.constants.horizon
            && self.dp_add >= 0.0
            && self.dp_add.is_finite()
            && self.t_add_lag >= 0.0
            && self.t_add_lag.is_finite();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "scenario {}: imbalance {}, event {} s, dp_add {}, lag {} out of range",
                self.id, self.dp_imbalance, self.t_event, self.dp_add, self.t_add_lag
            )));
        }
        if compute_h_eq(&self.mix) <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "scenario {}: equivalent inertia must be positive",
                self.id
            )));
        }
        Ok(())
    }

    /// Index of the first sample at or after the event.
    pub fn event_index(&self) -> usize {
        (self.t_event / self.constants.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Uniformly sampled response of one simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTrace {
    pub dt: f64,
    /// Event time snapped to the sample grid (s).
    pub t_event: f64,
    pub event_index: usize,
    pub f0: f64,
    /// Frequency deviation from `f0` (Hz).
    pub delta_f: Vec<f64>,
    /// Thermal fleet output deviation (pu of system base).
    pub p_thermal: Vec<f64>,
    /// Hydro fleet output deviation (pu of system base).
    pub p_hydro: Vec<f64>,
}

impl FrequencyTrace {
    pub fn len(&self) -> usize {
        self.delta_f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_f.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    /// Trace built from a frequency-deviation series alone; plant outputs are zero.
    pub fn from_deviation(dt: f64, t_event: f64, f0: f64, delta_f: Vec<f64>) -> Self {
        let event_index = (t_event / dt - 1e-9).ceil().max(0.0) as usize;
        let n = delta_f.len();
        Self {
            dt,
            t_event: event_index as f64 * dt,
            event_index,
            f0,
            delta_f,
            p_thermal: vec![0.0; n],
            p_hydro: vec![0.0; n],
        }
    }
}

// State layout.
const W: usize = 0; // frequency deviation (pu)
const GOV: usize = 1; // thermal governor output
const CHEST: usize = 2; // steam chest output
const REHEAT: usize = 3; // reheater lag output
const DROOP: usize = 4; // hydro transient-droop compensator lag
const SERVO: usize = 5; // hydro gate position
const WATER: usize = 6; // water column lag
const ADD: usize = 7; // delivered additional power
const STATES: usize = 8;

struct Model {
    two_h: f64,
    damping: f64,
    share_thermal: f64,
    share_hydro: f64,
    th: ThermalGovernor,
    hy: HydroGovernor,
    droop_ratio: f64,
    add_lag: f64,
}

impl Model {
    fn thermal_output(&self, x: &[f64; STATES]) -> f64 {
        self.th.f_hp * x[CHEST] + (1.0 - self.th.f_hp) * x[REHEAT]
    }

    // (1 − Tw s)/(1 + Tw s / 2) = −2 + 3/(1 + Tw s / 2)
    fn hydro_output(&self, x: &[f64; STATES]) -> f64 {
        -2.0 * x[SERVO] + 3.0 * x[WATER]
    }

    fn rhs(&self, x: &[f64; STATES], load_step: f64, add_target: f64) -> [f64; STATES] {
        let w = x[W];
        let p_add = if self.add_lag > 0.0 {
            x[ADD]
        } else {
            add_target
        };
        let p_gen = self.share_thermal * self.thermal_output(x)
            + self.share_hydro * self.hydro_output(x)
            + p_add;

        let mut dx = [0.0; STATES];
        dx[W] = (p_gen - load_step - self.damping * w) / self.two_h;

        let th = &self.th;
        dx[GOV] = (-w / th.droop_r - x[GOV]) / th.t_gov;
        dx[CHEST] = (x[GOV] - x[CHEST]) / th.t_ch;
        dx[REHEAT] = (x[CHEST] - x[REHEAT]) / th.t_rh;

        // (1 + Tr s)/(1 + a Tr s) = 1/a + (1 − 1/a)/(1 + a Tr s), a = r_temp / droop
        let hy = &self.hy;
        let a = self.droop_ratio;
        let u = -w / hy.droop_r;
        dx[DROOP] = (u - x[DROOP]) / (a * hy.t_reset);
        let compensated = u / a + (1.0 - 1.0 / a) * x[DROOP];
        dx[SERVO] = (compensated - x[SERVO]) / hy.t_servo;
        dx[WATER] = (x[SERVO] - x[WATER]) / (0.5 * hy.t_water);

        if self.add_lag > 0.0 {
            dx[ADD] = (add_target - x[ADD]) / self.add_lag;
        }
        dx
    }
}

/// Integrates the scenario over its horizon with a fixed-step RK4 scheme.
///
/// The load step and the additional-power setpoint are held constant over
/// each step and switch on at the first sample at or after `t_event`.
pub fn simulate(scenario: &Scenario) -> Result<FrequencyTrace> {
    scenario.validate()?;
    let c = &scenario.constants;
    let dt = c.dt;
    let n = c.sample_count();
    let event_index = scenario.event_index();

    let model = Model {
        two_h: 2.0 * compute_h_eq(&scenario.mix),
        damping: damping_pu(c),
        share_thermal: scenario.mix.share_thermal,
        share_hydro: scenario.mix.share_hydro,
        th: scenario.plants.thermal.clone(),
        hy: scenario.plants.hydro.clone(),
        droop_ratio: scenario.plants.hydro.r_temp / scenario.plants.hydro.droop_r,
        add_lag: scenario.t_add_lag,
    };

    let mut delta_f = Vec::with_capacity(n);
    let mut p_thermal = Vec::with_capacity(n);
    let mut p_hydro = Vec::with_capacity(n);
    let mut x = [0.0; STATES];
    let record = |x: &[f64; STATES], df: &mut Vec<f64>, pt: &mut Vec<f64>, ph: &mut Vec<f64>| {
        df.push(x[W] * c.f0);
        pt.push(model.share_thermal * model.thermal_output(x));
        ph.push(model.share_hydro * model.hydro_output(x));
    };
    record(&x, &mut delta_f, &mut p_thermal, &mut p_hydro);

    for k in 0..n - 1 {
        let (load, add) = if k >= event_index {
            (scenario.dp_imbalance, scenario.dp_add)
        } else {
            (0.0, 0.0)
        };
        x = rk4_step(|s| model.rhs(s, load, add), &x, dt);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                id: scenario.id.clone(),
                step: k + 1,
                time: (k + 1) as f64 * dt,
            });
        }
        record(&x, &mut delta_f, &mut p_thermal, &mut p_hydro);
    }

    Ok(FrequencyTrace {
        dt,
        t_event: event_index as f64 * dt,
        event_index,
        f0: c.f0,
        delta_f,
        p_thermal,
        p_hydro,
    })
}
