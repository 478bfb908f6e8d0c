//! Access queues (at the ScBS) and processing queues (at the UE).

use thiserror::Error;

/// Absolute slack allowed when a solver-produced rate slightly exceeds the
/// access backlog.
pub const RATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum QueueError {
    #[error("rate {rate} exceeds access backlog {backlog}")]
    RateExceedsBacklog { rate: f64, backlog: f64 },
}

/// Backlogs of every UE at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub q_access: Vec<f64>,
    pub q_proc: Vec<f64>,
    pub slot_index: u64,
}

/// Exogenous arrival into an access queue: the whole frame's traffic lands
/// in the frame's first slot.
pub fn arrival(lambda: f64, slot_index: u64, frame_index: u64, slots_per_frame: usize) -> f64 {
    let t = slots_per_frame as u64;
    debug_assert!(
        slot_index >= frame_index * t && slot_index < (frame_index + 1) * t,
        "slot {slot_index} outside frame {frame_index}"
    );
    if slot_index == frame_index * t {
        lambda
    } else {
        0.0
    }
}

/// `q − r + ν`, rejecting rates that would drain more than the backlog.
pub fn step_access(q: f64, r: f64, nu: f64) -> Result<f64, QueueError> {
    if r > q + RATE_TOLERANCE {
        return Err(QueueError::RateExceedsBacklog { rate: r, backlog: q });
    }
    Ok((q - r).max(0.0) + nu)
}

/// Serve `min(s̄, q)` from the pre-arrival backlog, then add the incoming
/// rate. Returns `(new backlog, served)`.
pub fn step_processing(q: f64, r: f64, s_bar: f64) -> (f64, f64) {
    let served = s_bar.min(q);
    (q - served + r, served)
}

/// Net change of one UE's backlogs across a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameDelta {
    /// `λ − Σ r`.
    pub access: f64,
    /// `Σ (r − s)`.
    pub processing: f64,
}

/// Frame-level backlog changes from per-slot rates and services.
pub fn frame_totals(rates: &[f64], served: &[f64], lambda: f64) -> FrameDelta {
    assert_eq!(rates.len(), served.len(), "one service record per slot");
    let sum_r: f64 = rates.iter().sum();
    let sum_s: f64 = served.iter().sum();
    FrameDelta {
        access: lambda - sum_r,
        processing: sum_r - sum_s,
    }
}

/// Per-UE outcome of one slot update.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotTransition {
    pub served: Vec<f64>,
    pub arrivals: Vec<f64>,
}

impl QueueState {
    pub fn empty(num_ues: usize) -> Self {
        Self {
            q_access: vec![0.0; num_ues],
            q_proc: vec![0.0; num_ues],
            slot_index: 0,
        }
    }

    pub fn total_backlog(&self) -> f64 {
        self.q_access.iter().chain(&self.q_proc).sum()
    }

    /// Advance by one slot: serve the processing queues, move `rates` from
    /// access to processing, then inject `arrivals`.
    pub fn step(
        &mut self,
        rates: &[f64],
        arrivals: &[f64],
        service: &[f64],
    ) -> Result<SlotTransition, QueueError> {
        let n = self.q_access.len();
        assert!(rates.len() == n && arrivals.len() == n && service.len() == n);
        let mut served = Vec::with_capacity(n);
        let mut next_access = Vec::with_capacity(n);
        for u in 0..n {
            next_access.push(step_access(self.q_access[u], rates[u], arrivals[u])?);
        }
        for (u, q) in self.q_proc.iter_mut().enumerate() {
            let (next, s) = step_processing(*q, rates[u], service[u]);
            *q = next;
            served.push(s);
        }
        self.q_access = next_access;
        self.slot_index += 1;
        Ok(SlotTransition {
            served,
            arrivals: arrivals.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arrivals_land_at_frame_start() {
        assert_eq!(arrival(1.5, 30, 3, 10), 1.5);
        assert_eq!(arrival(1.5, 31, 3, 10), 0.0);
        assert_eq!(arrival(0.0, 30, 3, 10), 0.0);
        assert_eq!(arrival(0.0, 37, 3, 10), 0.0);
    }

    #[test]
    fn access_step_examples() {
        assert_eq!(step_access(5.0, 2.0, 0.0), Ok(3.0));
        assert_eq!(step_access(5.0, 5.0, 1.5), Ok(1.5));
        assert_eq!(
            step_access(1.0, 2.0, 0.0),
            Err(QueueError::RateExceedsBacklog {
                rate: 2.0,
                backlog: 1.0
            })
        );
        assert_eq!(step_access(1.0, 1.0 + 1e-10, 0.0), Ok(0.0));
    }

    #[test]
    fn processing_step_examples() {
        assert_eq!(step_processing(1.0, 0.0, 3.5), (0.0, 1.0));
        assert_eq!(step_processing(10.0, 2.0, 3.5), (8.5, 3.5));
        assert_eq!(step_processing(0.0, 0.0, 3.5), (0.0, 0.0));
    }

    #[test]
    fn frame_totals_examples() {
        let d = frame_totals(&[1.0, 1.0], &[0.0, 0.0], 1.5);
        assert_eq!(d.access, -0.5);
        let d = frame_totals(&[0.0; 5], &[0.0; 5], 0.0);
        assert_eq!(d, FrameDelta { access: 0.0, processing: 0.0 });
    }

    #[test]
    fn state_step_orders_service_before_transfer() {
        let mut q = QueueState {
            q_access: vec![4.0],
            q_proc: vec![1.0],
            slot_index: 0,
        };
        let tr = q.step(&[3.0], &[1.5], &[3.5]).unwrap();
        // Served from the pre-transfer backlog only.
        assert_eq!(tr.served, vec![1.0]);
        assert_eq!(q.q_proc, vec![3.0]);
        assert_eq!(q.q_access, vec![2.5]);
        assert_eq!(q.slot_index, 1);
    }

    proptest! {
        // Composing T slot updates reproduces the frame-level change.
        #[test]
        fn telescoping_matches_slot_stepping(
            q0 in 0.0f64..20.0,
            u0 in 0.0f64..20.0,
            lambda in 0.0f64..5.0,
            s_bar in 0.1f64..5.0,
            fractions in prop::collection::vec(0.0f64..1.0, 1..16),
        ) {
            let t = fractions.len();
            let mut qa = q0;
            let mut qu = u0;
            let mut rates = Vec::new();
            let mut served = Vec::new();
            for (i, f) in fractions.iter().enumerate() {
                let r = f * qa;
                let nu = if i == 0 { lambda } else { 0.0 };
                qa = step_access(qa, r, nu).unwrap();
                let (next, s) = step_processing(qu, r, s_bar);
                qu = next;
                prop_assert!(qa >= 0.0 && qu >= 0.0);
                rates.push(r);
                served.push(s);
            }
            let d = frame_totals(&rates, &served, lambda);
            let scale = 1.0 + q0.abs() + lambda + t as f64 * s_bar + u0;
            prop_assert!((q0 + d.access - qa).abs() <= 1e-12 * scale);
            prop_assert!((u0 + d.processing - qu).abs() <= 1e-12 * scale);
        }

        #[test]
        fn served_never_exceeds_inflow(
            u0 in 0.0f64..5.0,
            s_bar in 0.1f64..5.0,
            rates in prop::collection::vec(0.0f64..4.0, 1..64),
        ) {
            let mut qu = u0;
            let mut cum_in = u0;
            let mut cum_served = 0.0;
            for r in rates {
                let (next, s) = step_processing(qu, r, s_bar);
                qu = next;
                cum_in += r;
                cum_served += s;
                prop_assert!(cum_served <= cum_in + 1e-12);
                prop_assert!(qu >= 0.0);
            }
        }
    }
}
