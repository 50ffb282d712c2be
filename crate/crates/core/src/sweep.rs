//! Scenario grid enumeration, the parallel sweep driver and aggregation of
//! sweep rows into summaries, regressions and heatmap surfaces.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::dynamics::{GenerationMix, PlantDynamics, Scenario, SystemConstants};
use crate::error::{Error, Result};
use crate::metrics::RocofLimits;
use crate::sizing::{size_scenario, verify, SizingResult, SizingSettings};
use crate::stats::{least_squares_2, BoxStats, LinearFit2};

/// Axes of the scenario grid plus the settings shared by every scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub res_levels: Vec<f64>,
    pub hydro_share: f64,
    pub imbalances: Vec<f64>,
    pub h_thermal_set: Vec<f64>,
    pub h_hydro_set: Vec<f64>,
    pub constants: SystemConstants,
    pub plants: PlantDynamics,
    pub t_event: f64,
    pub t_add_lag: f64,
}

pub fn default_res_levels() -> Vec<f64> {
    vec![0.05, 0.15, 0.30, 0.45, 0.60]
}

/// 2.5 % to 40 % in 2.5 % steps.
pub fn default_imbalances() -> Vec<f64> {
    (1..=16).map(|i| i as f64 * 25.0 / 1000.0).collect()
}

pub fn default_h_thermal() -> Vec<f64> {
    vec![2.0, 6.0, 10.0]
}

pub fn default_h_hydro() -> Vec<f64> {
    vec![1.75, 3.25, 4.75]
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            res_levels: default_res_levels(),
            hydro_share: 0.15,
            imbalances: default_imbalances(),
            h_thermal_set: default_h_thermal(),
            h_hydro_set: default_h_hydro(),
            constants: SystemConstants::default(),
            plants: PlantDynamics::default(),
            t_event: 1.0,
            t_add_lag: 0.0,
        }
    }
}

impl GridSpec {
    pub fn cardinality(&self) -> usize {
        self.res_levels.len()
            * self.imbalances.len()
            * self.h_thermal_set.len()
            * self.h_hydro_set.len()
    }
}

pub fn scenario_id(res: f64, imbalance: f64, h_thermal: f64, h_hydro: f64) -> String {
    format!("res{res}-dp{imbalance}-ht{h_thermal}-hh{h_hydro}")
}

/// Every scenario of the grid, ordered lexicographically by
/// (RES level, imbalance, H_T, H_H).
pub fn generate_grid(spec: &GridSpec) -> Result<Vec<Scenario>> {
    if !(0.0..=1.0).contains(&spec.hydro_share) {
        return Err(Error::Grid(format!(
            "hydro share {} outside [0, 1]",
            spec.hydro_share
        )));
    }
    for &res in &spec.res_levels {
        let thermal = 1.0 - spec.hydro_share - res;
        if !(0.0..=1.0).contains(&res) || thermal < -1e-9 {
            return Err(Error::Grid(format!(
                "RES level {res} with hydro share {} leaves thermal share {thermal:.4}",
                spec.hydro_share
            )));
        }
    }
    let mut out = Vec::with_capacity(spec.cardinality());
    for &res in &spec.res_levels {
        for &dp in &spec.imbalances {
            for &ht in &spec.h_thermal_set {
                for &hh in &spec.h_hydro_set {
                    let mut mix = GenerationMix::from_res_level(res, spec.hydro_share, ht, hh);
                    mix.share_thermal = mix.share_thermal.max(0.0);
                    let scenario = Scenario {
                        id: scenario_id(res, dp, ht, hh),
                        constants: spec.constants.clone(),
                        mix,
                        plants: spec.plants.clone(),
                        dp_imbalance: dp,
                        t_event: spec.t_event,
                        dp_add: 0.0,
                        t_add_lag: spec.t_add_lag,
                    };
                    scenario
                        .validate()
                        .map_err(|e| Error::Grid(e.to_string()))?;
                    out.push(scenario);
                }
            }
        }
    }
    Ok(out)
}

/// Settings applied to every scenario of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub limits: RocofLimits,
    pub sizing: SizingSettings,
    /// Run the joint re-simulation with the sized values.
    pub verify: bool,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            limits: RocofLimits::default(),
            sizing: SizingSettings::default(),
            verify: true,
        }
    }
}

/// Post-sizing compliance of the joint re-simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifiedColumns {
    pub nadir: f64,
    pub rocof: Vec<f64>,
    pub nadir_ok: bool,
    pub rocof_ok: bool,
}

impl VerifiedColumns {
    pub fn passes(&self) -> bool {
        self.nadir_ok && self.rocof_ok
    }
}

/// One scenario flattened for tabular output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: String,
    pub res_share: f64,
    pub imbalance: f64,
    pub h_thermal: f64,
    pub h_hydro: f64,
    pub h_eq_sync: f64,
    pub nadir: f64,
    pub t_nadir: f64,
    /// Signed ROCOF per configured window, in window order.
    pub rocof: Vec<f64>,
    pub steady_state_dev: f64,
    pub nadir_ok: bool,
    pub blackout_risk: bool,
    pub rocof_ok: bool,
    pub worst_window: Option<f64>,
    pub worst_exceedance_pct: f64,
    pub h_eq_min: f64,
    pub h_res_required: f64,
    pub h_res_capped: f64,
    pub h_res_feasible: bool,
    pub dp_add_required: f64,
    pub verified: Option<VerifiedColumns>,
    /// `ok`, or the diagnostic of a failed scenario.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn from_result(scenario: &Scenario, r: SizingResult) -> Self {
        let m = &r.base_metrics;
        Self {
            id: scenario.id.clone(),
            res_share: scenario.mix.share_res,
            imbalance: scenario.dp_imbalance,
            h_thermal: scenario.mix.h_thermal,
            h_hydro: scenario.mix.h_hydro,
            h_eq_sync: r.h_eq_sync,
            nadir: m.nadir,
            t_nadir: m.t_nadir,
            rocof: m.rocof.iter().map(|w| w.rocof).collect(),
            steady_state_dev: m.steady_state_dev,
            nadir_ok: r.base_report.nadir_ok,
            blackout_risk: r.base_report.blackout_risk,
            rocof_ok: r.base_report.all_rocof_ok(),
            worst_window: r.base_report.worst_rocof_window,
            worst_exceedance_pct: r.base_report.worst_exceedance_pct,
            h_eq_min: r.inertia.h_eq_min,
            h_res_required: r.inertia.h_res_required,
            h_res_capped: r.inertia.h_res_capped,
            h_res_feasible: r.inertia.h_res_feasible,
            dp_add_required: r.dp_add_required,
            verified: r.verified.map(|v| VerifiedColumns {
                nadir: v.metrics.nadir,
                rocof: v.metrics.rocof.iter().map(|w| w.rocof).collect(),
                nadir_ok: v.report.nadir_ok,
                rocof_ok: v.report.all_rocof_ok(),
            }),
            status: "ok".into(),
        }
    }

    fn failed(scenario: &Scenario, windows: usize, err: &Error) -> Self {
        Self {
            id: scenario.id.clone(),
            res_share: scenario.mix.share_res,
            imbalance: scenario.dp_imbalance,
            h_thermal: scenario.mix.h_thermal,
            h_hydro: scenario.mix.h_hydro,
            h_eq_sync: scenario.mix.h_synchronous(),
            nadir: f64::NAN,
            t_nadir: f64::NAN,
            rocof: vec![f64::NAN; windows],
            steady_state_dev: f64::NAN,
            nadir_ok: false,
            blackout_risk: false,
            rocof_ok: false,
            worst_window: None,
            worst_exceedance_pct: f64::NAN,
            h_eq_min: f64::NAN,
            h_res_required: f64::NAN,
            h_res_capped: f64::NAN,
            h_res_feasible: false,
            dp_add_required: f64::NAN,
            verified: None,
            status: format!("error: {err}"),
        }
    }
}

/// Sizes one scenario, converting failures into a diagnostic row.
pub fn evaluate_scenario(scenario: &Scenario, settings: &SweepSettings) -> SweepRow {
    match size_scenario(
        scenario,
        &settings.limits,
        &settings.sizing,
        settings.verify,
    ) {
        Ok(r) => SweepRow::from_result(scenario, r),
        Err(e) => {
            log::warn!("scenario {} failed: {e}", scenario.id);
            SweepRow::failed(scenario, settings.limits.len(), &e)
        }
    }
}

fn guarded<'a, T, R>(
    f: impl Fn(&T) -> R + Sync + 'a,
    cancel: &'a AtomicBool,
) -> impl Fn(&T) -> Option<R> + Sync + 'a {
    move |item| {
        if cancel.load(Ordering::Relaxed) {
            None
        } else {
            Some(f(item))
        }
    }
}

/// Order-preserving map on the calling thread.
pub fn map_sequential<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> R + Sync,
    cancel: &AtomicBool,
) -> Vec<Option<R>> {
    items.iter().map(guarded(f, cancel)).collect()
}

/// Order-preserving map on a dedicated pool of `workers` threads.
#[cfg(feature = "parallel")]
pub fn map_parallel<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> R + Sync,
    workers: usize,
    cancel: &AtomicBool,
) -> Vec<Option<R>> {
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| items.par_iter().map(guarded(&f, cancel)).collect()),
        Err(e) => {
            log::warn!("thread pool unavailable ({e}); running sequentially");
            map_sequential(items, f, cancel)
        }
    }
}

/// Dispatches to the parallel map when built with it and `workers > 1`.
/// Items not started before `cancel` is raised come back as `None`.
pub fn map_ordered<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> R + Sync,
    workers: usize,
    cancel: &AtomicBool,
) -> Vec<Option<R>> {
    #[cfg(feature = "parallel")]
    if workers > 1 {
        return map_parallel(items, f, workers, cancel);
    }
    #[cfg(not(feature = "parallel"))]
    if workers > 1 {
        log::debug!("built without the parallel feature; ignoring workers = {workers}");
    }
    map_sequential(items, f, cancel)
}

/// Runs the sweep, stopping early once `cancel` is raised.
pub fn run_sweep_until(
    scenarios: &[Scenario],
    settings: &SweepSettings,
    workers: usize,
    cancel: &AtomicBool,
) -> Vec<Option<SweepRow>> {
    map_ordered(
        scenarios,
        |s| evaluate_scenario(s, settings),
        workers,
        cancel,
    )
}

/// One row per scenario, in input order, for any worker count.
pub fn run_sweep(
    scenarios: &[Scenario],
    settings: &SweepSettings,
    workers: usize,
) -> Vec<SweepRow> {
    let never = AtomicBool::new(false);
    run_sweep_until(scenarios, settings, workers, &never)
        .into_iter()
        .map(|r| r.expect("uncancelled sweep yields every row"))
        .collect()
}

/// Re-simulates each row's scenario with its sized (uncapped) virtual
/// inertia and additional power and fills the verification columns.
/// `scenarios[i]` must correspond to `rows[i]`.
pub fn verify_rows(
    rows: &[SweepRow],
    scenarios: &[Scenario],
    limits: &RocofLimits,
    workers: usize,
) -> Vec<SweepRow> {
    let pairs: Vec<(&SweepRow, &Scenario)> = rows.iter().zip(scenarios).collect();
    let never = AtomicBool::new(false);
    let check = |(row, scenario): &(&SweepRow, &Scenario)| {
        let mut out = (*row).clone();
        out.verified = None;
        if !row.is_ok() {
            return out;
        }
        match verify(scenario, row.h_res_required, row.dp_add_required, limits) {
            Ok(v) => {
                out.verified = Some(VerifiedColumns {
                    nadir: v.metrics.nadir,
                    rocof: v.metrics.rocof.iter().map(|w| w.rocof).collect(),
                    nadir_ok: v.report.nadir_ok,
                    rocof_ok: v.report.all_rocof_ok(),
                })
            }
            Err(e) => log::warn!("verification of {} failed: {e}", row.id),
        }
        out
    };
    map_ordered(&pairs, check, workers, &never)
        .into_iter()
        .map(|r| r.expect("uncancelled map yields every item"))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    ResLevel,
    Imbalance,
    /// Imbalance bands (0, 20] % and (20, 40] %.
    ImbalanceBand,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub count: usize,
    pub h_res_required: BoxStats,
    pub h_res_capped: BoxStats,
    pub dp_add_required: BoxStats,
}

const IMBALANCE_BANDS: [(f64, f64, &str); 2] = [(0.0, 0.20, "(0,20]"), (0.20, 0.40, "(20,40]")];

fn band_of(imbalance: f64) -> Option<&'static str> {
    IMBALANCE_BANDS
        .iter()
        .find(|(lo, hi, _)| imbalance > lo + 1e-12 && imbalance <= hi + 1e-12)
        .map(|(_, _, name)| *name)
}

/// Box-whisker statistics of the sizing results per group, in first-seen
/// group order (bands in band order). Failed rows are skipped.
pub fn summarize(rows: &[SweepRow], group_by: GroupBy) -> Vec<GroupSummary> {
    let mut keys: Vec<String> = match group_by {
        GroupBy::ImbalanceBand => IMBALANCE_BANDS.iter().map(|b| b.2.to_string()).collect(),
        _ => Vec::new(),
    };
    let key_of = |r: &SweepRow| -> Option<String> {
        match group_by {
            GroupBy::ResLevel => Some(r.res_share.to_string()),
            GroupBy::Imbalance => Some(r.imbalance.to_string()),
            GroupBy::ImbalanceBand => band_of(r.imbalance).map(str::to_string),
        }
    };
    let ok_rows: Vec<(&SweepRow, String)> = rows
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| key_of(r).map(|k| (r, k)))
        .collect();
    for (_, k) in &ok_rows {
        if !keys.contains(k) {
            keys.push(k.clone());
        }
    }
    let mut out = Vec::new();
    for key in keys {
        let members: Vec<&SweepRow> = ok_rows
            .iter()
            .filter(|(_, k)| *k == key)
            .map(|(r, _)| *r)
            .collect();
        let stats = (
            BoxStats::from_values(members.iter().map(|r| r.h_res_required)),
            BoxStats::from_values(members.iter().map(|r| r.h_res_capped)),
            BoxStats::from_values(members.iter().map(|r| r.dp_add_required)),
        );
        match stats {
            (Some(h), Some(hc), Some(p)) => out.push(GroupSummary {
                group: key,
                count: members.len(),
                h_res_required: h,
                h_res_capped: hc,
                dp_add_required: p,
            }),
            _ => log::warn!("group {key} is empty; omitted from summary"),
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub coef_res_share: f64,
    pub coef_imbalance: f64,
    pub r_squared: f64,
}

impl From<LinearFit2> for RegressionFit {
    fn from(f: LinearFit2) -> Self {
        Self {
            intercept: f.intercept,
            coef_res_share: f.b1,
            coef_imbalance: f.b2,
            r_squared: f.r_squared,
        }
    }
}

/// Least-squares plane of the required additional power over RES share and
/// imbalance.
pub fn fit_regression(rows: &[SweepRow]) -> Result<RegressionFit> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let x1: Vec<f64> = ok.iter().map(|r| r.res_share).collect();
    let x2: Vec<f64> = ok.iter().map(|r| r.imbalance).collect();
    let y: Vec<f64> = ok.iter().map(|r| r.dp_add_required).collect();
    least_squares_2(&x1, &x2, &y).map(Into::into)
}

/// Quantities available as heatmap surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Nadir,
    /// ROCOF of the configured window at this index.
    Rocof(usize),
    HRes,
    HResCapped,
    DpAdd,
}

impl Surface {
    fn value(&self, row: &SweepRow) -> f64 {
        match self {
            Surface::Nadir => row.nadir,
            Surface::Rocof(i) => row.rocof.get(*i).copied().unwrap_or(f64::NAN),
            Surface::HRes => row.h_res_required,
            Surface::HResCapped => row.h_res_capped,
            Surface::DpAdd => row.dp_add_required,
        }
    }
}

/// Imbalance rows by RES-level columns for one (H_T, H_H) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub h_thermal: f64,
    pub h_hydro: f64,
    pub res_levels: Vec<f64>,
    pub imbalances: Vec<f64>,
    /// `values[i][j]` at `imbalances[i]`, `res_levels[j]`; NaN where missing.
    pub values: Vec<Vec<f64>>,
}

pub fn heatmap(
    rows: &[SweepRow],
    spec: &GridSpec,
    h_thermal: f64,
    h_hydro: f64,
    surface: Surface,
) -> Heatmap {
    let values = spec
        .imbalances
        .iter()
        .map(|&dp| {
            spec.res_levels
                .iter()
                .map(|&res| {
                    rows.iter()
                        .find(|r| {
                            r.res_share == res
                                && r.imbalance == dp
                                && r.h_thermal == h_thermal
                                && r.h_hydro == h_hydro
                        })
                        .map_or(f64::NAN, |r| surface.value(r))
                })
                .collect()
        })
        .collect();
    Heatmap {
        h_thermal,
        h_hydro,
        res_levels: spec.res_levels.clone(),
        imbalances: spec.imbalances.clone(),
        values,
    }
}
