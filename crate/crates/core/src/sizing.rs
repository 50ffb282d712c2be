//! Minimum virtual inertia for ROCOF compliance and minimum fast additional
//! power for nadir compliance.
//!
//! Both quantities are sized independently on the base scenario (no virtual
//! inertia, no additional power). A joint re-simulation then checks that the
//! two together bring the system within limits.

use serde::{Deserialize, Serialize};

use crate::dynamics::{compute_h_eq, simulate, GenerationMix, Scenario};
use crate::error::{Error, Result};
use crate::metrics::{
    check_compliance, extract_metrics, ComplianceReport, FrequencyMetrics, RocofLimits,
    DYNAMIC_BAND_HZ,
};

/// Sizing settings shared by every scenario of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SizingSettings {
    /// Increment of the additional-power scan (pu).
    pub dp_inc: f64,
    /// Largest virtual inertia constant considered realistic (s).
    pub h_res_cap: f64,
    /// Lowest acceptable nadir (Hz); `None` means `f0 − 0.8 Hz`.
    pub nadir_floor: Option<f64>,
}

impl Default for SizingSettings {
    fn default() -> Self {
        Self {
            dp_inc: 0.01,
            h_res_cap: 15.0,
            nadir_floor: None,
        }
    }
}

impl SizingSettings {
    pub fn validate(&self) -> Result<()> {
        let floor_ok = self.nadir_floor.is_none_or(|f| f.is_finite() && f > 0.0);
        if self.dp_inc > 0.0 && self.dp_inc.is_finite() && self.h_res_cap >= 0.0 && floor_ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "sizing settings out of range: {self:?}"
            )))
        }
    }

    pub fn floor_for(&self, f0: f64) -> f64 {
        self.nadir_floor.unwrap_or(f0 - DYNAMIC_BAND_HZ)
    }
}

/// Minimum equivalent inertia that keeps a step of `dp_imbalance` within
/// `rocof_lim`, evaluated as `(ΔP / P_load) · (f0 / ROCOF_lim)`.
///
/// This deliberately omits the factor ½ of the instantaneous swing-equation
/// relation, so it sizes for roughly half the limit at the first instant.
pub fn h_eq_min(dp_imbalance: f64, p_load: f64, f0: f64, rocof_lim: f64) -> f64 {
    dp_imbalance / p_load * f0 / rocof_lim
}

/// Virtual inertia constant the renewable fleet must emulate to lift the
/// equivalent inertia to `h_min`; floored at zero.
pub fn h_res_from_h_min(h_min: f64, mix: &GenerationMix) -> Result<f64> {
    let deficit = h_min - mix.h_synchronous();
    if deficit <= 0.0 {
        return Ok(0.0);
    }
    if mix.share_res <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no RES capacity to host virtual inertia (need {deficit:.4} s on the system base)"
        )));
    }
    Ok(deficit / mix.share_res)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InertiaSizing {
    /// Window whose limit drove the sizing; `None` when already compliant.
    pub worst_window: Option<f64>,
    /// 0 when compliant.
    pub h_eq_min: f64,
    pub h_res_required: f64,
    pub h_res_capped: f64,
    pub h_res_feasible: bool,
}

impl InertiaSizing {
    fn compliant() -> Self {
        Self {
            worst_window: None,
            h_eq_min: 0.0,
            h_res_required: 0.0,
            h_res_capped: 0.0,
            h_res_feasible: true,
        }
    }
}

fn base_scenario(scenario: &Scenario) -> Scenario {
    let mut base = scenario.clone();
    base.mix.h_res_virtual = 0.0;
    base.dp_add = 0.0;
    base
}

fn base_run(
    scenario: &Scenario,
    limits: &RocofLimits,
) -> Result<(FrequencyMetrics, ComplianceReport)> {
    let trace = simulate(&base_scenario(scenario))?;
    let metrics = extract_metrics(&trace, limits)?;
    let report = check_compliance(&metrics, limits, scenario.constants.f0)?;
    Ok((metrics, report))
}

fn inertia_from_report(
    scenario: &Scenario,
    report: &ComplianceReport,
    limits: &RocofLimits,
    cap: f64,
) -> Result<InertiaSizing> {
    let Some(window) = report.worst_rocof_window else {
        return Ok(InertiaSizing::compliant());
    };
    let limit = limits
        .limit_for(window)
        .ok_or_else(|| Error::WindowMismatch(format!("no limit for window {window} s")))?;
    let c = &scenario.constants;
    let h_min = h_eq_min(scenario.dp_imbalance, c.p_load, c.f0, limit);
    let required = h_res_from_h_min(h_min, &scenario.mix)?;
    Ok(InertiaSizing {
        worst_window: Some(window),
        h_eq_min: h_min,
        h_res_required: required,
        h_res_capped: required.min(cap),
        h_res_feasible: required <= cap,
    })
}

/// Virtual inertia needed to bring every windowed ROCOF within its limit.
///
/// Simulates the scenario without virtual inertia; if a window is violated,
/// the one with the largest relative exceedance sets the limit used for the
/// minimum equivalent inertia, which is then mapped onto the renewable share.
pub fn size_h_res(scenario: &Scenario, limits: &RocofLimits, cap: f64) -> Result<InertiaSizing> {
    let (_, report) = base_run(scenario, limits)?;
    inertia_from_report(scenario, &report, limits, cap)
}

/// Smallest multiple of `dp_inc` of fast additional power that keeps the
/// nadir at or above `nadir_floor`, found by a forward scan.
pub fn size_p_add(scenario: &Scenario, dp_inc: f64, nadir_floor: f64) -> Result<f64> {
    if !(dp_inc > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dp_inc must be positive, got {dp_inc}"
        )));
    }
    let base = base_scenario(scenario);
    let limit = base.dp_imbalance + 1e-9;
    let mut k = 0u32;
    loop {
        let dp_add = k as f64 * dp_inc;
        if dp_add > limit {
            return Err(Error::Infeasible(format!(
                "scenario {}: nadir floor {nadir_floor} Hz not met with additional power up to the imbalance {}",
                scenario.id, scenario.dp_imbalance
            )));
        }
        let mut trial = base.clone();
        trial.dp_add = dp_add;
        if nadir_of(&trial)? >= nadir_floor {
            return Ok(dp_add);
        }
        k += 1;
    }
}

fn nadir_of(scenario: &Scenario) -> Result<f64> {
    let trace = simulate(scenario)?;
    let min = trace.delta_f.iter().cloned().fold(0.0, f64::min);
    Ok(trace.f0 + min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub metrics: FrequencyMetrics,
    pub report: ComplianceReport,
}

/// Re-simulates the scenario with the sized virtual inertia and additional
/// power applied together.
pub fn verify(
    scenario: &Scenario,
    h_res: f64,
    dp_add: f64,
    limits: &RocofLimits,
) -> Result<Verification> {
    if !(h_res >= 0.0 && dp_add >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sized values must be non-negative: h_res {h_res}, dp_add {dp_add}"
        )));
    }
    let mut combined = scenario.clone();
    combined.mix.h_res_virtual = h_res;
    combined.dp_add = dp_add;
    let trace = simulate(&combined)?;
    let metrics = extract_metrics(&trace, limits)?;
    let report = check_compliance(&metrics, limits, scenario.constants.f0)?;
    Ok(Verification { metrics, report })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub scenario_id: String,
    pub base_metrics: FrequencyMetrics,
    pub base_report: ComplianceReport,
    pub h_eq_sync: f64,
    pub inertia: InertiaSizing,
    pub dp_add_required: f64,
    /// Joint re-simulation with the uncapped inertia and the sized power.
    pub verified: Option<Verification>,
}

/// Runs both sizing algorithms on one scenario and, when `with_verification`
/// is set, the joint re-simulation.
pub fn size_scenario(
    scenario: &Scenario,
    limits: &RocofLimits,
    settings: &SizingSettings,
    with_verification: bool,
) -> Result<SizingResult> {
    settings.validate()?;
    let (base_metrics, base_report) = base_run(scenario, limits)?;
    let inertia = inertia_from_report(scenario, &base_report, limits, settings.h_res_cap)?;
    let floor = settings.floor_for(scenario.constants.f0);
    let dp_add_required = if base_metrics.nadir >= floor {
        0.0
    } else {
        size_p_add(scenario, settings.dp_inc, floor)?
    };
    let verified = if with_verification {
        Some(verify(
            scenario,
            inertia.h_res_required,
            dp_add_required,
            limits,
        )?)
    } else {
        None
    };
    Ok(SizingResult {
        scenario_id: scenario.id.clone(),
        h_eq_sync: compute_h_eq(&base_scenario(scenario).mix),
        base_metrics,
        base_report,
        inertia,
        dp_add_required,
        verified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PlantDynamics, SystemConstants};
    use approx::assert_abs_diff_eq;

    fn scenario(res: f64, dp: f64, ht: f64, hh: f64) -> Scenario {
        Scenario {
            id: format!("res{res}-dp{dp}-ht{ht}-hh{hh}"),
            constants: SystemConstants::default(),
            mix: GenerationMix::from_res_level(res, 0.15, ht, hh),
            plants: PlantDynamics::default(),
            dp_imbalance: dp,
            t_event: 1.0,
            dp_add: 0.0,
            t_add_lag: 0.0,
        }
    }

    #[test]
    fn minimum_inertia_direct_evaluation() {
        assert_abs_diff_eq!(h_eq_min(0.4, 1.0, 50.0, 2.0), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h_eq_min(0.4, 1.0, 50.0, 1.25), 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h_eq_min(0.025, 1.0, 50.0, 2.0), 0.625, epsilon = 1e-12);
    }

    #[test]
    fn virtual_inertia_hand_evaluation() {
        let mix = GenerationMix::from_res_level(0.60, 0.15, 2.0, 1.75);
        // (10 − 0.5 − 0.2625) / 0.6
        assert_abs_diff_eq!(
            h_res_from_h_min(10.0, &mix).unwrap(),
            9.2375 / 0.6,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            h_res_from_h_min(10.0, &mix).unwrap(),
            15.396,
            epsilon = 5e-4
        );
        assert_abs_diff_eq!(
            h_res_from_h_min(16.0, &mix).unwrap(),
            25.396,
            epsilon = 5e-4
        );
        assert_eq!(h_res_from_h_min(0.5, &mix).unwrap(), 0.0);
    }

    #[test]
    fn virtual_inertia_without_res_share() {
        let mix = GenerationMix::from_res_level(0.0, 0.15, 2.0, 1.75);
        assert!(matches!(
            h_res_from_h_min(10.0, &mix),
            Err(Error::Infeasible(_))
        ));
        assert_eq!(h_res_from_h_min(1.0, &mix).unwrap(), 0.0);
    }

    #[test]
    fn substituting_back_reproduces_h_min() {
        let mut mix = GenerationMix::from_res_level(0.45, 0.15, 6.0, 3.25);
        let h_min = 12.5;
        mix.h_res_virtual = h_res_from_h_min(h_min, &mix).unwrap();
        assert_abs_diff_eq!(compute_h_eq(&mix), h_min, epsilon = 1e-12);
    }

    #[test]
    fn low_severity_corner_needs_nothing() {
        let s = scenario(0.05, 0.025, 10.0, 4.75);
        let r = size_scenario(
            &s,
            &RocofLimits::default(),
            &SizingSettings::default(),
            true,
        )
        .unwrap();
        assert!(r.base_report.passes());
        assert_eq!(r.inertia, InertiaSizing::compliant());
        assert_eq!(r.dp_add_required, 0.0);
        assert_eq!(&r.verified.unwrap().report, &r.base_report);
    }

    #[test]
    fn cap_semantics() {
        let s = scenario(0.6, 0.4, 2.0, 1.75);
        let r = size_h_res(&s, &RocofLimits::default(), 15.0).unwrap();
        assert!(r.h_res_required > 15.0);
        assert_eq!(r.h_res_capped, 15.0);
        assert!(!r.h_res_feasible);
    }

    #[test]
    fn additional_power_is_minimal() {
        let s = scenario(0.3, 0.2, 6.0, 3.25);
        let floor = 49.2;
        let dp = size_p_add(&s, 0.01, floor).unwrap();
        assert!(dp > 0.0);
        let k = (dp / 0.01).round();
        assert_abs_diff_eq!(dp, k * 0.01, epsilon = 1e-12);
        let mut at = s.clone();
        at.dp_add = dp;
        assert!(nadir_of(&at).unwrap() >= floor);
        at.dp_add = dp - 0.01;
        assert!(nadir_of(&at).unwrap() < floor);
    }

    #[test]
    fn unreachable_floor_is_infeasible() {
        let s = scenario(0.3, 0.1, 6.0, 3.25);
        assert!(matches!(
            size_p_add(&s, 0.01, 50.5),
            Err(Error::Infeasible(_))
        ));
        assert!(size_p_add(&s, 0.0, 49.2).is_err());
    }

    #[test]
    fn sizing_ignores_preset_virtual_inertia() {
        let mut s = scenario(0.45, 0.3, 6.0, 3.25);
        let clean = size_scenario(
            &s,
            &RocofLimits::default(),
            &SizingSettings::default(),
            false,
        )
        .unwrap();
        s.mix.h_res_virtual = 7.0;
        s.dp_add = 0.05;
        let preset = size_scenario(
            &s,
            &RocofLimits::default(),
            &SizingSettings::default(),
            false,
        )
        .unwrap();
        assert_eq!(clean, preset);
    }
}
