//! Windowed ROCOF, nadir and compliance against frequency limits.

use serde::{Deserialize, Serialize};

use crate::dynamics::FrequencyTrace;
use crate::error::{Error, Result};

/// Allowed dynamic frequency deviation (Hz).
pub const DYNAMIC_BAND_HZ: f64 = 0.8;
/// Deviation below nominal at which generators may trip and a blackout is
/// likely (Hz); 47.5 Hz on a 50 Hz system.
pub const BLACKOUT_DEVIATION_HZ: f64 = 2.5;

const GRID_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocofLimit {
    /// Sliding window length (s).
    pub window: f64,
    /// Maximum magnitude of the windowed ROCOF (Hz/s).
    pub limit: f64,
}

/// Ordered set of windowed ROCOF limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RocofLimit>", into = "Vec<RocofLimit>")]
pub struct RocofLimits(Vec<RocofLimit>);

impl Default for RocofLimits {
    fn default() -> Self {
        Self(vec![
            RocofLimit {
                window: 0.5,
                limit: 2.0,
            },
            RocofLimit {
                window: 1.0,
                limit: 1.5,
            },
            RocofLimit {
                window: 2.0,
                limit: 1.25,
            },
        ])
    }
}

impl RocofLimits {
    pub fn new(limits: Vec<RocofLimit>) -> Result<Self> {
        if limits.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one ROCOF window required".into(),
            ));
        }
        if limits.iter().any(|l| {
            !(l.window > 0.0 && l.limit > 0.0 && l.window.is_finite() && l.limit.is_finite())
        }) {
            return Err(Error::InvalidParameter(
                "ROCOF windows and limits must be positive".into(),
            ));
        }
        for pair in limits.windows(2) {
            if pair[1].window <= pair[0].window || pair[1].limit >= pair[0].limit {
                return Err(Error::InvalidParameter(
                    "ROCOF windows must increase and limits must decrease".into(),
                ));
            }
        }
        Ok(Self(limits))
    }

    pub fn iter(&self) -> impl Iterator<Item = &RocofLimit> {
        self.0.iter()
    }

    pub fn windows(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|l| l.window)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn limit_for(&self, window: f64) -> Option<f64> {
        self.0
            .iter()
            .find(|l| same_window(l.window, window))
            .map(|l| l.limit)
    }
}

impl TryFrom<Vec<RocofLimit>> for RocofLimits {
    type Error = Error;

    fn try_from(v: Vec<RocofLimit>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RocofLimits> for Vec<RocofLimit> {
    fn from(l: RocofLimits) -> Self {
        l.0
    }
}

fn same_window(a: f64, b: f64) -> bool {
    (a - b).abs() <= GRID_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowRocof {
    pub window: f64,
    /// Signed ROCOF (Hz/s); negative for under-frequency.
    pub rocof: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMetrics {
    /// Minimum absolute frequency (Hz).
    pub nadir: f64,
    /// Time of the minimum (s); earliest sample on ties.
    pub t_nadir: f64,
    /// One entry per configured window, in window order.
    pub rocof: Vec<WindowRocof>,
    /// Mean deviation over the final 5% of the trace (Hz).
    pub steady_state_dev: f64,
}

impl FrequencyMetrics {
    pub fn rocof_for(&self, window: f64) -> Option<f64> {
        self.rocof
            .iter()
            .find(|r| same_window(r.window, window))
            .map(|r| r.rocof)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCheck {
    pub window: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    /// Nadir within the dynamic band below nominal.
    pub nadir_ok: bool,
    /// Nadir below the generator-tripping floor.
    pub blackout_risk: bool,
    pub rocof_ok: Vec<WindowCheck>,
    /// Violating window with the largest relative exceedance.
    pub worst_rocof_window: Option<f64>,
    /// Relative exceedance of the worst window (%); 0 when compliant.
    pub worst_exceedance_pct: f64,
}

impl ComplianceReport {
    pub fn all_rocof_ok(&self) -> bool {
        self.rocof_ok.iter().all(|c| c.ok)
    }

    pub fn passes(&self) -> bool {
        self.nadir_ok && self.all_rocof_ok()
    }
}

/// Two-point ROCOF over `window` seconds starting at the event sample.
pub fn rocof_window(trace: &FrequencyTrace, window: f64) -> Result<f64> {
    let steps = window / trace.dt;
    let rounded = steps.round();
    if !(window > 0.0) || (steps - rounded).abs() > GRID_TOL * rounded.max(1.0) {
        return Err(Error::WindowNotOnGrid {
            window,
            dt: trace.dt,
        });
    }
    let end = trace.event_index + rounded as usize;
    if end >= trace.len() {
        return Err(Error::WindowOutOfRange {
            window,
            t_event: trace.t_event,
            horizon: trace.horizon(),
        });
    }
    Ok((trace.delta_f[end] - trace.delta_f[trace.event_index]) / window)
}

pub fn extract_metrics(trace: &FrequencyTrace, limits: &RocofLimits) -> Result<FrequencyMetrics> {
    let (min_index, min_dev) =
        trace
            .delta_f
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) },
            );
    let tail = ((trace.len() as f64 * 0.05).ceil() as usize).clamp(1, trace.len().max(1));
    let steady_state_dev = if trace.is_empty() {
        0.0
    } else {
        trace.delta_f[trace.len() - tail..].iter().sum::<f64>() / tail as f64
    };
    let rocof = limits
        .windows()
        .map(|w| {
            rocof_window(trace, w).map(|r| WindowRocof {
                window: w,
                rocof: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyMetrics {
        nadir: if trace.is_empty() {
            trace.f0
        } else {
            trace.f0 + min_dev
        },
        t_nadir: trace.time(min_index),
        rocof,
        steady_state_dev,
    })
}

pub fn check_compliance(
    metrics: &FrequencyMetrics,
    limits: &RocofLimits,
    f0: f64,
) -> Result<ComplianceReport> {
    if metrics.rocof.len() != limits.len() {
        return Err(Error::WindowMismatch(format!(
            "{} measured windows, {} limits",
            metrics.rocof.len(),
            limits.len()
        )));
    }
    let mut rocof_ok = Vec::with_capacity(limits.len());
    let mut worst: Option<(f64, f64)> = None;
    for (measured, lim) in metrics.rocof.iter().zip(limits.iter()) {
        if !same_window(measured.window, lim.window) {
            return Err(Error::WindowMismatch(format!(
                "measured window {} s against limit window {} s",
                measured.window, lim.window
            )));
        }
        let magnitude = measured.rocof.abs();
        let ok = magnitude <= lim.limit;
        rocof_ok.push(WindowCheck {
            window: lim.window,
            ok,
        });
        if !ok {
            let exceedance = (magnitude - lim.limit) / lim.limit * 100.0;
            if worst.is_none_or(|(_, e)| exceedance > e) {
                worst = Some((lim.window, exceedance));
            }
        }
    }
    Ok(ComplianceReport {
        nadir_ok: metrics.nadir >= f0 - DYNAMIC_BAND_HZ,
        blackout_risk: metrics.nadir < f0 - BLACKOUT_DEVIATION_HZ,
        rocof_ok,
        worst_rocof_window: worst.map(|(w, _)| w),
        worst_exceedance_pct: worst.map_or(0.0, |(_, e)| e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn trace_from<F: Fn(f64) -> f64>(f: F, t_event: f64) -> FrequencyTrace {
        let dt = 0.005;
        let n = 6001;
        let df = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                if t < t_event {
                    0.0
                } else {
                    f(t - t_event)
                }
            })
            .collect();
        FrequencyTrace::from_deviation(dt, t_event, 50.0, df)
    }

    fn metrics_with(rocofs: [f64; 3], nadir: f64) -> FrequencyMetrics {
        FrequencyMetrics {
            nadir,
            t_nadir: 3.0,
            rocof: [0.5, 1.0, 2.0]
                .iter()
                .zip(rocofs)
                .map(|(&window, rocof)| WindowRocof { window, rocof })
                .collect(),
            steady_state_dev: 0.0,
        }
    }

    #[test]
    fn flat_trace() {
        let t = trace_from(|_| 0.0, 1.0);
        for w in [0.5, 1.0, 2.0] {
            assert_eq!(rocof_window(&t, w).unwrap(), 0.0);
        }
        let m = extract_metrics(&t, &RocofLimits::default()).unwrap();
        assert_eq!(m.nadir, 50.0);
        assert_eq!(m.t_nadir, 0.0);
        assert!(m.rocof.iter().all(|r| r.rocof == 0.0));
    }

    #[test]
    fn ramp_has_exact_slope() {
        let t = trace_from(|tau| -0.5 * tau, 1.0);
        for w in [0.5, 1.0, 2.0, 5.0] {
            assert_abs_diff_eq!(rocof_window(&t, w).unwrap(), -0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn exponential_window_matches_closed_form() {
        // H = 5, D = 1, ΔP = 0.2 on 50 Hz
        let t = trace_from(|tau| -50.0 * 0.2 * (1.0 - (-tau / 10.0).exp()), 1.0);
        let expected = 50.0 * (-0.2) * (1.0 - (-0.1f64).exp());
        assert_abs_diff_eq!(rocof_window(&t, 1.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn window_errors() {
        let t = trace_from(|_| 0.0, 29.0);
        assert!(matches!(
            rocof_window(&t, 2.0),
            Err(Error::WindowOutOfRange { .. })
        ));
        assert!(matches!(
            rocof_window(&t, 0.0123),
            Err(Error::WindowNotOnGrid { .. })
        ));
    }

    #[test]
    fn v_shaped_nadir() {
        let t = trace_from(|tau| -1.2 * (1.0 - (tau - 3.0).abs() / 3.0).max(0.0), 0.0);
        let m = extract_metrics(&t, &RocofLimits::default()).unwrap();
        assert_abs_diff_eq!(m.nadir, 48.8, epsilon = 1e-12);
        assert_abs_diff_eq!(m.t_nadir, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn nadir_tie_takes_earliest() {
        let mut df = vec![0.0; 100];
        df[10] = -1.0;
        df[40] = -1.0;
        let t = FrequencyTrace::from_deviation(0.1, 0.0, 50.0, df);
        let limits = RocofLimits::new(vec![RocofLimit {
            window: 0.5,
            limit: 2.0,
        }])
        .unwrap();
        let m = extract_metrics(&t, &limits).unwrap();
        assert_abs_diff_eq!(m.t_nadir, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn compliant_metrics() {
        let r = check_compliance(
            &metrics_with([-1.0, -0.9, -0.8], 49.5),
            &RocofLimits::default(),
            50.0,
        )
        .unwrap();
        assert!(r.nadir_ok && !r.blackout_risk && r.all_rocof_ok());
        assert_eq!(r.worst_rocof_window, None);
        assert_eq!(r.worst_exceedance_pct, 0.0);
    }

    #[test]
    fn worst_window_by_relative_exceedance() {
        let r = check_compliance(
            &metrics_with([-3.0, -1.8, -1.3], 49.5),
            &RocofLimits::default(),
            50.0,
        )
        .unwrap();
        assert!(r.rocof_ok.iter().all(|c| !c.ok));
        assert_eq!(r.worst_rocof_window, Some(0.5));
        assert_abs_diff_eq!(r.worst_exceedance_pct, 50.0, epsilon = 1e-9);
    }

    #[test]
    fn below_blackout_floor() {
        let r =
            check_compliance(&metrics_with([0.0; 3], 47.2), &RocofLimits::default(), 50.0).unwrap();
        assert!(!r.nadir_ok);
        assert!(r.blackout_risk);
    }

    #[test]
    fn window_mismatch_is_a_contract_error() {
        let m = metrics_with([0.0; 3], 50.0);
        let limits = RocofLimits::new(vec![
            RocofLimit {
                window: 0.5,
                limit: 2.0,
            },
            RocofLimit {
                window: 1.0,
                limit: 1.5,
            },
        ])
        .unwrap();
        assert!(matches!(
            check_compliance(&m, &limits, 50.0),
            Err(Error::WindowMismatch(_))
        ));
        let shifted = RocofLimits::new(vec![
            RocofLimit {
                window: 0.5,
                limit: 2.0,
            },
            RocofLimit {
                window: 1.0,
                limit: 1.5,
            },
            RocofLimit {
                window: 3.0,
                limit: 1.0,
            },
        ])
        .unwrap();
        assert!(check_compliance(&m, &shifted, 50.0).is_err());
    }

    #[test]
    fn limits_must_be_ordered() {
        assert!(RocofLimits::new(vec![
            RocofLimit {
                window: 1.0,
                limit: 1.5
            },
            RocofLimit {
                window: 0.5,
                limit: 2.0
            },
        ])
        .is_err());
        assert!(RocofLimits::new(vec![]).is_err());
    }
}
