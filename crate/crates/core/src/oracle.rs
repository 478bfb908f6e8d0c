//! Brute-force reference for one single-antenna ScBS serving one UE.
//!
//! With one antenna and no interference the power reaching SINR `γ` is
//! `γσ²/|h|²`, so each slot reduces to a scalar minimisation over φ that can
//! be done by exhaustive grid evaluation.

use thiserror::Error;

use crate::channel::sample_channels;
use crate::energy::NreTrace;
use crate::model::{RateWeights, SystemConfig};
use crate::simulator::{run, RunReport, SimError};

pub const ORACLE_GRID_POINTS: usize = 10_000;
/// Largest accepted objective shortfall relative to `1 + |oracle|`.
pub const ORACLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("the oracle needs one ScBS with one antenna and one UE (got M={scbs}, N_T={antennas}, UEs={ues})")]
    Unsupported {
        scbs: usize,
        antennas: usize,
        ues: usize,
    },
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Everything a single-link slot decision depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSlot {
    pub gain: f64,
    pub noise_mw: f64,
    pub p_max_mw: f64,
    pub circuit_mw: f64,
    pub pa_efficiency: f64,
    pub control_v: f64,
    pub price_buy: f64,
    pub price_sell: f64,
    pub psi: f64,
    pub frame_q_access: f64,
    pub frame_q_proc: f64,
    pub q_access: f64,
    pub harvest_per_slot_mw: f64,
    pub scheduled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarOptimum {
    pub phi: f64,
    pub objective: f64,
    pub tx_power_mw: f64,
}

impl ScalarSlot {
    fn cost(&self, consumed_mw: f64) -> f64 {
        let net = consumed_mw - self.harvest_per_slot_mw;
        let price = if net > 0.0 { self.price_buy } else { self.price_sell };
        self.control_v * price * net
    }

    /// Objective at `phi`, or `None` when the power budget cannot carry it.
    pub fn objective_at(&self, phi: f64) -> Option<(f64, f64)> {
        let p = (self.psi * phi).exp_m1() * self.noise_mw / self.gain;
        (p <= self.p_max_mw).then(|| {
            let consumed = p / self.pa_efficiency + self.circuit_mw;
            let queue = (self.frame_q_proc - self.frame_q_access) * self.psi * phi;
            (self.cost(consumed) + queue, p)
        })
    }

    pub fn solve(&self, grid_points: usize) -> ScalarOptimum {
        if !self.scheduled {
            return ScalarOptimum {
                phi: 0.0,
                objective: self.cost(0.0),
                tx_power_mw: 0.0,
            };
        }
        let phi_max = if self.psi > 0.0 { self.q_access / self.psi } else { 0.0 };
        let mut best = ScalarOptimum {
            phi: f64::NAN,
            objective: f64::INFINITY,
            tx_power_mw: f64::NAN,
        };
        for i in 0..=grid_points {
            let phi = phi_max * i as f64 / grid_points as f64;
            if let Some((value, p)) = self.objective_at(phi) {
                if value < best.objective {
                    best = ScalarOptimum {
                        phi,
                        objective: value,
                        tx_power_mw: p,
                    };
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub slots: usize,
    /// `max(0, ours − oracle) / (1 + |oracle|)` over all slots.
    pub max_objective_deviation: f64,
    /// Largest `|φ_ours − φ_oracle|` over all slots.
    pub max_phi_deviation: f64,
    pub worst_slot: usize,
}

impl OracleReport {
    pub fn passes(&self) -> bool {
        self.max_objective_deviation <= ORACLE_TOLERANCE
    }
}

/// Run the simulator and compare every slot decision with the scalar oracle.
pub fn check_against_oracle(cfg: &SystemConfig, trace: &NreTrace) -> Result<(OracleReport, RunReport), OracleError> {
    if cfg.num_scbs != 1 || cfg.num_tx_antennas != 1 || cfg.num_ues() != 1 {
        return Err(OracleError::Unsupported {
            scbs: cfg.num_scbs,
            antennas: cfg.num_tx_antennas,
            ues: cfg.num_ues(),
        });
    }
    let report = run(cfg, trace)?;
    let t_len = cfg.slots_per_frame;
    let mut out = OracleReport {
        slots: report.slots.len(),
        max_objective_deviation: 0.0,
        max_phi_deviation: 0.0,
        worst_slot: 0,
    };
    for rec in &report.slots {
        let frame_start = &report.slots[rec.frame * t_len];
        let gain = sample_channels(cfg.rng_seed, cfg, rec.slot as u64).link(0, 0)[0].norm_sqr();
        let psi = match &cfg.rate_weights {
            RateWeights::Static(w) => w[0],
            RateWeights::DynamicBacklog => 1.0,
        };
        let slot = ScalarSlot {
            gain,
            noise_mw: cfg.noise_mw[0],
            p_max_mw: cfg.p_max_mw[0],
            circuit_mw: cfg.circuit_power_mw(0),
            pa_efficiency: cfg.pa_efficiency,
            control_v: cfg.control_v,
            price_buy: cfg.price_buy,
            price_sell: cfg.price_sell,
            psi,
            frame_q_access: frame_start.q_access[0],
            frame_q_proc: frame_start.q_proc[0],
            q_access: rec.q_access[0],
            harvest_per_slot_mw: rec.harvest_per_slot_mw,
            scheduled: frame_start.q_access[0] > frame_start.q_proc[0],
        };
        let best = slot.solve(ORACLE_GRID_POINTS);
        let dev = (rec.objective - best.objective).max(0.0) / (1.0 + best.objective.abs());
        if dev > out.max_objective_deviation {
            out.max_objective_deviation = dev;
            out.worst_slot = rec.slot;
        }
        if best.phi.is_finite() {
            out.max_phi_deviation = out.max_phi_deviation.max((rec.phi - best.phi).abs());
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot() -> ScalarSlot {
        ScalarSlot {
            gain: 1.0,
            noise_mw: 1.0,
            p_max_mw: 100.0,
            circuit_mw: 0.0,
            pa_efficiency: 1.0,
            control_v: 1.0,
            price_buy: 1.0,
            price_sell: 0.5,
            psi: 1.0,
            frame_q_access: 3.0,
            frame_q_proc: 1.0,
            q_access: 3.0,
            harvest_per_slot_mw: 0.0,
            scheduled: true,
        }
    }

    #[test]
    fn interior_optimum_matches_stationary_point() {
        // V·α_b·(e^φ − 1) − 2φ is stationary at e^φ = 2.
        let best = slot().solve(100_000);
        assert!((best.phi - 2f64.ln()).abs() < 1e-4, "{}", best.phi);
    }

    #[test]
    fn unscheduled_slot_sells_harvest() {
        let s = ScalarSlot {
            scheduled: false,
            harvest_per_slot_mw: 4.0,
            ..slot()
        };
        assert_eq!(s.solve(10).objective, -2.0);
    }

    #[test]
    fn budget_limits_the_grid() {
        let s = ScalarSlot { p_max_mw: 0.5, control_v: 0.0, ..slot() };
        let best = s.solve(10_000);
        assert!((best.phi - 1.5f64.ln()).abs() < 3.0 / 10_000.0);
        assert!(best.tx_power_mw <= 0.5);
    }

    #[test]
    fn rejects_multi_antenna_configs() {
        let cfg = crate::scenarios::two_cell(1, 1.0).validate().unwrap();
        let trace = NreTrace::constant(0.0, 100.0, 0.0).unwrap();
        assert!(matches!(check_against_oracle(&cfg, &trace), Err(OracleError::Unsupported { .. })));
    }
}
