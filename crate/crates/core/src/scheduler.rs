//! Frame-level decisions and Lyapunov bookkeeping.
//!
//! A UE is scheduled for a whole frame when its access backlog is positive
//! and strictly exceeds its processing backlog; an ScBS with no scheduled UE
//! sleeps for the frame.

use thiserror::Error;

use crate::model::{DriftConstants, Layout};
use crate::queues::{frame_totals, QueueState};

#[derive(Debug, Error, PartialEq)]
pub enum SchedulerError {
    #[error("incomplete frame: {0}")]
    IncompleteFrame(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    pub frame_index: u64,
    /// Scheduled indicator per UE (global index).
    pub indicator: Vec<bool>,
    /// Global indices of the scheduled UEs of each ScBS.
    pub active_sets: Vec<Vec<usize>>,
    pub asleep: Vec<bool>,
}

impl ScheduleDecision {
    pub fn from_indicator(layout: &Layout, frame_index: u64, indicator: Vec<bool>) -> Self {
        assert_eq!(indicator.len(), layout.num_ues());
        let active_sets: Vec<Vec<usize>> = (0..layout.num_scbs())
            .map(|m| layout.ues_of(m).filter(|&u| indicator[u]).collect())
            .collect();
        let asleep = active_sets.iter().map(Vec::is_empty).collect();
        Self {
            frame_index,
            indicator,
            active_sets,
            asleep,
        }
    }

    pub fn num_scheduled(&self) -> usize {
        self.indicator.iter().filter(|&&a| a).count()
    }

    pub fn scheduled(&self) -> impl Iterator<Item = usize> + '_ {
        self.indicator
            .iter()
            .enumerate()
            .filter_map(|(u, &a)| a.then_some(u))
    }
}

/// Indicator rule: 0 when `q_proc − q_access ≥ 0` or `q_access = 0`, else 1.
pub fn schedule_indicator(q_access: f64, q_proc: f64) -> bool {
    !(q_proc - q_access >= 0.0 || q_access == 0.0)
}

pub fn schedule_frame(layout: &Layout, frame_start: &QueueState, frame_index: u64) -> ScheduleDecision {
    let indicator = frame_start
        .q_access
        .iter()
        .zip(&frame_start.q_proc)
        .map(|(&qa, &qu)| schedule_indicator(qa, qu))
        .collect();
    ScheduleDecision::from_indicator(layout, frame_index, indicator)
}

/// `½ Σ (q_A² + q_U²)`.
pub fn lyapunov_value(queues: &QueueState) -> f64 {
    0.5 * queues
        .q_access
        .iter()
        .chain(&queues.q_proc)
        .map(|q| q * q)
        .sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovRecord {
    pub lyapunov_value: f64,
    /// `L[k+1] − L[k]`.
    pub drift: f64,
    /// `V·G[k]`.
    pub penalty: f64,
    /// Right-hand side of the drift-plus-penalty bound with realized values.
    pub bound_rhs: f64,
}

/// Everything observed over one frame.
#[derive(Debug, Clone)]
pub struct FrameObservation<'a> {
    pub start: &'a QueueState,
    pub end: &'a QueueState,
    /// `rates[t][u]` for each slot of the frame.
    pub rates: &'a [Vec<f64>],
    /// Processing-queue service `served[t][u]`.
    pub served: &'a [Vec<f64>],
    pub arrivals: &'a [f64],
    pub expenditure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCheck {
    pub access_slack: Vec<f64>,
    pub proc_slack: Vec<f64>,
    pub aggregate_slack: f64,
    pub record: LyapunovRecord,
}

impl DriftCheck {
    pub fn min_slack(&self) -> f64 {
        self.access_slack
            .iter()
            .chain(&self.proc_slack)
            .copied()
            .fold(self.aggregate_slack, f64::min)
    }

    pub fn holds(&self, tolerance: f64) -> bool {
        self.min_slack() >= -tolerance
    }
}

/// Evaluate the per-queue one-frame drift bounds and the aggregate
/// drift-plus-penalty bound on realized values. Slack is `rhs − lhs`.
pub fn drift_bound_check(
    obs: &FrameObservation<'_>,
    slots_per_frame: usize,
    constants: &DriftConstants,
    control_v: f64,
) -> Result<DriftCheck, SchedulerError> {
    let n = obs.start.q_access.len();
    if obs.rates.len() != slots_per_frame || obs.served.len() != slots_per_frame {
        return Err(SchedulerError::IncompleteFrame(format!(
            "expected {slots_per_frame} slot records, got {} rates and {} services",
            obs.rates.len(),
            obs.served.len()
        )));
    }
    if obs.end.q_access.len() != n
        || obs.arrivals.len() != n
        || constants.c_access.len() != n
        || obs.rates.iter().chain(obs.served).any(|row| row.len() != n)
    {
        return Err(SchedulerError::IncompleteFrame(
            "per-UE record lengths disagree".into(),
        ));
    }

    let mut access_slack = Vec::with_capacity(n);
    let mut proc_slack = Vec::with_capacity(n);
    let mut weighted = 0.0;
    for u in 0..n {
        let rates: Vec<f64> = obs.rates.iter().map(|row| row[u]).collect();
        let served: Vec<f64> = obs.served.iter().map(|row| row[u]).collect();
        let delta = frame_totals(&rates, &served, obs.arrivals[u]);

        let (qa0, qa1) = (obs.start.q_access[u], obs.end.q_access[u]);
        let lhs = 0.5 * (qa1 * qa1 - qa0 * qa0);
        let rhs = constants.c_access[u] + qa0 * delta.access;
        access_slack.push(rhs - lhs);

        let (qu0, qu1) = (obs.start.q_proc[u], obs.end.q_proc[u]);
        let lhs = 0.5 * (qu1 * qu1 - qu0 * qu0);
        let rhs = constants.c_proc[u] + qu0 * delta.processing;
        proc_slack.push(rhs - lhs);

        weighted += qa0 * delta.access + qu0 * delta.processing;
    }

    let l0 = lyapunov_value(obs.start);
    let l1 = lyapunov_value(obs.end);
    let penalty = control_v * obs.expenditure;
    let bound_rhs = constants.psi_total + penalty + weighted;
    let aggregate_slack = bound_rhs - (l1 - l0 + penalty);
    Ok(DriftCheck {
        access_slack,
        proc_slack,
        aggregate_slack,
        record: LyapunovRecord {
            lyapunov_value: l0,
            drift: l1 - l0,
            penalty,
            bound_rhs,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{access_drift_constant, processing_drift_constant};

    fn state(qa: Vec<f64>, qu: Vec<f64>) -> QueueState {
        QueueState {
            q_access: qa,
            q_proc: qu,
            slot_index: 0,
        }
    }

    #[test]
    fn indicator_cases() {
        assert!(!schedule_indicator(0.0, 7.0));
        assert!(!schedule_indicator(0.0, 0.0));
        assert!(!schedule_indicator(5.0, 7.0));
        assert!(!schedule_indicator(5.0, 5.0));
        assert!(schedule_indicator(10.0, 2.0));
    }

    #[test]
    fn indicator_monotone_in_access_backlog() {
        for qu in [0.0, 0.5, 3.0] {
            let mut prev = false;
            for i in 0..200 {
                let a = schedule_indicator(i as f64 * 0.05, qu);
                assert!(a || !prev, "flipped 1 -> 0 at qa={} qu={qu}", i as f64 * 0.05);
                prev = a;
            }
        }
    }

    #[test]
    fn sleeping_follows_active_sets() {
        let layout = Layout::new(&[2, 1, 2]);
        let q = state(vec![3.0, 0.0, 1.0, 2.0, 2.0], vec![4.0, 0.0, 2.0, 1.0, 0.0]);
        let d = schedule_frame(&layout, &q, 4);
        assert_eq!(d.indicator, vec![false, false, false, true, true]);
        assert_eq!(d.active_sets, vec![vec![], vec![], vec![3, 4]]);
        assert_eq!(d.asleep, vec![true, true, false]);
        assert_eq!(d.frame_index, 4);
        assert_eq!(d.scheduled().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(&state(vec![0.0; 3], vec![0.0; 3])), 0.0);
        assert_eq!(lyapunov_value(&state(vec![2.0], vec![0.0])), 2.0);
        assert_eq!(lyapunov_value(&state(vec![3.0, 0.0], vec![4.0, 0.0])), 12.5);
    }

    fn constants(lambda: &[f64], service: &[f64], t: usize, r_max: f64) -> DriftConstants {
        let c_access: Vec<f64> = lambda.iter().map(|&l| access_drift_constant(l, t, r_max)).collect();
        let c_proc: Vec<f64> = service.iter().map(|&s| processing_drift_constant(s, t, r_max)).collect();
        let psi_total = c_access.iter().chain(&c_proc).sum();
        DriftConstants { c_access, c_proc, psi_total }
    }

    #[test]
    fn static_queues_have_slack_equal_to_constant() {
        let c = constants(&[0.0], &[1.0], 1, 1.0);
        let s = state(vec![0.0], vec![0.0]);
        let obs = FrameObservation {
            start: &s,
            end: &s,
            rates: &[vec![0.0]],
            served: &[vec![0.0]],
            arrivals: &[0.0],
            expenditure: 0.0,
        };
        let chk = drift_bound_check(&obs, 1, &c, 1.0).unwrap();
        assert_eq!(chk.access_slack[0], c.c_access[0]);
        assert_eq!(chk.proc_slack[0], c.c_proc[0]);
        assert_eq!(chk.record.drift, 0.0);
        assert!(chk.holds(0.0));
    }

    #[test]
    fn hand_built_access_frame() {
        // q_A 5 -> 4 with λ = 1, Σr = 2, T = 1, r_max = 2.
        let c = constants(&[1.0], &[1.0], 1, 2.0);
        assert_eq!(c.c_access[0], 2.5);
        let start = state(vec![5.0], vec![0.0]);
        let end = state(vec![4.0], vec![2.0]);
        let obs = FrameObservation {
            start: &start,
            end: &end,
            rates: &[vec![2.0]],
            served: &[vec![0.0]],
            arrivals: &[1.0],
            expenditure: 3.0,
        };
        let chk = drift_bound_check(&obs, 1, &c, 0.5).unwrap();
        // lhs = ½(16 − 25) = −4.5, rhs = 2.5 + 5·(−1) = −2.5.
        assert!((chk.access_slack[0] - 2.0).abs() < 1e-12);
        assert!(chk.holds(1e-9));
        assert_eq!(chk.record.penalty, 1.5);
    }

    #[test]
    fn incomplete_frame_rejected() {
        let c = constants(&[1.0], &[1.0], 2, 1.0);
        let s = state(vec![1.0], vec![0.0]);
        let obs = FrameObservation {
            start: &s,
            end: &s,
            rates: &[vec![0.0]],
            served: &[vec![0.0]],
            arrivals: &[0.0],
            expenditure: 0.0,
        };
        assert!(matches!(
            drift_bound_check(&obs, 2, &c, 1.0),
            Err(SchedulerError::IncompleteFrame(_))
        ));
    }
}
