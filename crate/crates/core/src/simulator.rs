//! Frame-by-frame execution of the joint scheduling, sleeping and
//! beamforming algorithm, with metrics and CSV reports.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::beamform::socp::{ClarabelSolver, ConicSolver};
use crate::beamform::{optimize_slot, BeamformError, SlotContext, SlotStatus};
use crate::channel::{sample_channels, write_channel_rows, CHANNEL_CSV_HEADER};
use crate::energy::{harvest_power, interpolate_trace, EnergyLedger, NreTrace, TraceError};
use crate::model::{drift_constants, SystemConfig};
use crate::queues::{arrival, QueueError, QueueState, RATE_TOLERANCE};
use crate::scheduler::{
    drift_bound_check, schedule_frame, DriftCheck, FrameObservation, ScheduleDecision, SchedulerError,
};

pub const SECONDS_PER_YEAR: f64 = 31_536_000.0;
/// Number of ScBSs in the city the annualized figure is scaled to.
pub const CITY_SCBS: f64 = 1e5;
/// Fraction of frames discarded from averaged metrics.
pub const WARM_UP_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("frame {frame}, slot {slot}: {source}")]
    Solver {
        frame: usize,
        slot: usize,
        #[source]
        source: BeamformError,
    },
    #[error("slot {slot}: {source}")]
    Queue {
        slot: usize,
        #[source]
        source: QueueError,
    },
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelayError {
    #[error("total arrival rate is zero; delay is undefined")]
    ZeroArrivals,
}

/// Per-slot outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: usize,
    pub frame: usize,
    /// Backlogs at the start of the slot.
    pub q_access: Vec<f64>,
    pub q_proc: Vec<f64>,
    pub phi: f64,
    pub phi_max: f64,
    pub psi: Vec<f64>,
    pub rates: Vec<f64>,
    pub sinrs: Vec<f64>,
    pub targets: Vec<f64>,
    pub served: Vec<f64>,
    pub scbs_power: Vec<f64>,
    pub harvest_per_slot_mw: f64,
    pub grid_exchange: f64,
    pub objective: f64,
    pub status: SlotStatus,
    pub max_gap_rel: f64,
    pub multimodal: bool,
    pub solver_failures: usize,
}

impl SlotRecord {
    /// `|P_SG − (ΣP_SC − ΣE/T)|`, mW.
    pub fn power_balance_residual(&self) -> f64 {
        let total: f64 = self.scbs_power.iter().sum();
        (self.grid_exchange - (total - self.harvest_per_slot_mw)).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: usize,
    pub schedule: ScheduleDecision,
    /// `E_m[k]` per ScBS, mW·slot.
    pub harvest: Vec<f64>,
    pub expenditure: f64,
    pub cumulative_expenditure: f64,
    /// Total backlog at the start of the frame.
    pub backlog_start: f64,
    pub drift: DriftCheck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub control_v: f64,
    pub seed: u64,
    pub avg_expenditure_per_frame: f64,
    pub annualized_expenditure: f64,
    pub avg_delay_slots: f64,
    /// Total backlog at the start of every frame, warm-up included.
    pub backlog_trace: Vec<f64>,
    /// Mean realized rate per UE over the slots in which it transmitted.
    pub empirical_avg_rate: Vec<f64>,
    /// `λ/T < empirical rate < s̄` per UE.
    pub stability_flag: Vec<bool>,
    pub drift_slack_min: f64,
    pub max_power_residual_mw: f64,
    /// Slots on which some UE's rate exceeded its access backlog.
    pub rate_limit_violations: usize,
    pub max_duality_gap: f64,
    /// Fraction of post-warm-up frames each ScBS spent asleep.
    pub asleep_fraction: Vec<f64>,
    pub infeasible_slots: usize,
    pub multimodal_slots: usize,
    /// φ evaluations excluded from the search after conic solver failures.
    pub excluded_evaluations: usize,
    pub warm_up_frames: usize,
}

impl RunMetrics {
    pub fn stability_ok(&self) -> bool {
        self.stability_flag.iter().all(|&f| f)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub metrics: RunMetrics,
    pub frames: Vec<FrameRecord>,
    pub slots: Vec<SlotRecord>,
    pub ledger: EnergyLedger,
}

/// Little's-law delay: mean total backlog over `backlog_per_slot` divided by
/// the total arrival rate per slot.
pub fn measure_delay(backlog_per_slot: &[f64], arrivals_per_frame: &[f64], slots_per_frame: usize) -> Result<f64, DelayError> {
    let rate: f64 = arrivals_per_frame.iter().sum::<f64>() / slots_per_frame as f64;
    if !(rate > 0.0) {
        return Err(DelayError::ZeroArrivals);
    }
    if backlog_per_slot.is_empty() {
        return Ok(0.0);
    }
    let mean = backlog_per_slot.iter().sum::<f64>() / backlog_per_slot.len() as f64;
    Ok(mean / rate)
}

/// Scale a per-network frame expenditure to a year and a city of
/// [`CITY_SCBS`] ScBSs.
pub fn annualize(avg_expenditure_per_frame: f64, cfg: &SystemConfig) -> f64 {
    avg_expenditure_per_frame * (SECONDS_PER_YEAR / cfg.frame_duration_s()) * (CITY_SCBS / cfg.num_scbs as f64)
}

pub fn warm_up_frames(num_frames: usize) -> usize {
    (num_frames as f64 * WARM_UP_FRACTION).floor() as usize
}

pub fn run(cfg: &SystemConfig, trace: &NreTrace) -> Result<RunReport, SimError> {
    run_with_solver(cfg, trace, &ClarabelSolver::default())
}

pub fn run_with_solver(cfg: &SystemConfig, trace: &NreTrace, solver: &dyn ConicSolver) -> Result<RunReport, SimError> {
    let n = cfg.num_ues();
    let t_len = cfg.slots_per_frame;
    let start = cfg.trace_start_s.unwrap_or(trace.start());
    let irradiance = interpolate_trace(trace, start, cfg.slot_duration_s, cfg.total_slots())?;
    let constants = drift_constants(cfg);

    let mut queues = QueueState::empty(n);
    let mut ledger = EnergyLedger::default();
    let mut frames = Vec::with_capacity(cfg.num_frames);
    let mut slots = Vec::with_capacity(cfg.total_slots());

    for k in 0..cfg.num_frames {
        let frame_start = queues.clone();
        let per_scbs = harvest_power(irradiance[k * t_len], cfg.harvester_area_m2, cfg.harvester_efficiency)
            * t_len as f64;
        let harvest = vec![per_scbs; cfg.num_scbs];
        let harvest_per_slot = harvest.iter().sum::<f64>() / t_len as f64;
        ledger.open_frame(harvest.clone());
        let schedule = schedule_frame(cfg.layout(), &frame_start, k as u64);

        let mut rates = Vec::with_capacity(t_len);
        let mut served = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let slot = k * t_len + t;
            let channels = sample_channels(cfg.rng_seed, cfg, slot as u64);
            let ctx = SlotContext {
                cfg,
                channels: &channels,
                schedule: &schedule,
                frame_start: &frame_start,
                current: &queues,
                harvest_per_slot_mw: harvest_per_slot,
            };
            let sol = optimize_slot(&ctx, solver).map_err(|source| SimError::Solver { frame: k, slot, source })?;
            if sol.multimodal {
                log::warn!("slot {slot}: several local minima over phi; grid incumbent kept");
            }
            let nu: Vec<f64> = cfg
                .arrival_nats
                .iter()
                .map(|&l| arrival(l, slot as u64, k as u64, t_len))
                .collect();
            let before = queues.clone();
            let step = queues
                .step(&sol.rates, &nu, &cfg.service_nats)
                .map_err(|source| SimError::Queue { slot, source })?;
            ledger.record_slot(sol.grid_exchange);
            rates.push(sol.rates.clone());
            served.push(step.served.clone());
            slots.push(SlotRecord {
                slot,
                frame: k,
                q_access: before.q_access,
                q_proc: before.q_proc,
                phi: sol.phi,
                phi_max: sol.phi_max,
                psi: sol.psi,
                rates: sol.rates,
                sinrs: sol.sinrs,
                targets: sol.targets,
                served: step.served,
                scbs_power: sol.scbs_power,
                harvest_per_slot_mw: harvest_per_slot,
                grid_exchange: sol.grid_exchange,
                objective: sol.objective,
                status: sol.status,
                max_gap_rel: sol.max_gap_rel,
                multimodal: sol.multimodal,
                solver_failures: sol.solver_failures,
            });
        }

        let expenditure = ledger.close_frame(t_len, cfg.price_buy, cfg.price_sell);
        let drift = drift_bound_check(
            &FrameObservation {
                start: &frame_start,
                end: &queues,
                rates: &rates,
                served: &served,
                arrivals: &cfg.arrival_nats,
                expenditure,
            },
            t_len,
            &constants,
            cfg.control_v,
        )?;
        if !drift.holds(1e-9) {
            log::warn!("frame {k}: drift bound violated, slack {}", drift.min_slack());
        }
        frames.push(FrameRecord {
            frame: k,
            schedule,
            harvest,
            expenditure,
            cumulative_expenditure: ledger.cumulative_expenditure,
            backlog_start: frame_start.total_backlog(),
            drift,
        });
    }

    let metrics = summarize(cfg, &frames, &slots);
    Ok(RunReport {
        metrics,
        frames,
        slots,
        ledger,
    })
}

fn summarize(cfg: &SystemConfig, frames: &[FrameRecord], slots: &[SlotRecord]) -> RunMetrics {
    let n = cfg.num_ues();
    let warm = warm_up_frames(cfg.num_frames);
    let kept_frames = &frames[warm..];
    let kept_slots = &slots[warm * cfg.slots_per_frame..];

    let avg_expenditure = mean(kept_frames.iter().map(|f| f.expenditure));
    let backlog: Vec<f64> = kept_slots
        .iter()
        .map(|s| s.q_access.iter().chain(&s.q_proc).sum())
        .collect();
    let avg_delay = measure_delay(&backlog, &cfg.arrival_nats, cfg.slots_per_frame).unwrap_or(0.0);

    let empirical: Vec<f64> = (0..n)
        .map(|u| mean(kept_slots.iter().map(|s| s.rates[u]).filter(|&r| r > 0.0)))
        .collect();
    let t = cfg.slots_per_frame as f64;
    let stability: Vec<bool> = (0..n)
        .map(|u| cfg.arrival_nats[u] / t < empirical[u] && empirical[u] < cfg.service_nats[u])
        .collect();
    for (u, ok) in stability.iter().enumerate() {
        if !ok {
            log::warn!(
                "UE {u}: empirical rate {} outside ({}, {})",
                empirical[u],
                cfg.arrival_nats[u] / t,
                cfg.service_nats[u]
            );
        }
    }

    let asleep_fraction = (0..cfg.num_scbs)
        .map(|m| mean(kept_frames.iter().map(|f| if f.schedule.asleep[m] { 1.0 } else { 0.0 })))
        .collect();

    RunMetrics {
        control_v: cfg.control_v,
        seed: cfg.rng_seed,
        avg_expenditure_per_frame: avg_expenditure,
        annualized_expenditure: annualize(avg_expenditure, cfg),
        avg_delay_slots: avg_delay,
        backlog_trace: frames.iter().map(|f| f.backlog_start).collect(),
        empirical_avg_rate: empirical,
        stability_flag: stability,
        drift_slack_min: frames.iter().map(|f| f.drift.min_slack()).fold(f64::INFINITY, f64::min),
        max_power_residual_mw: slots.iter().map(SlotRecord::power_balance_residual).fold(0.0, f64::max),
        rate_limit_violations: slots
            .iter()
            .filter(|s| s.rates.iter().zip(&s.q_access).any(|(&r, &q)| r > q + RATE_TOLERANCE))
            .count(),
        max_duality_gap: slots.iter().map(|s| s.max_gap_rel).fold(0.0, f64::max),
        asleep_fraction,
        infeasible_slots: slots.iter().filter(|s| s.status == SlotStatus::Infeasible).count(),
        multimodal_slots: slots.iter().filter(|s| s.multimodal).count(),
        excluded_evaluations: slots.iter().map(|s| s.solver_failures).sum(),
        warm_up_frames: warm,
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Run several configurations, up to `jobs` at a time (0 lets rayon pick).
/// Results keep the input order.
pub fn run_many(configs: &[SystemConfig], trace: &NreTrace, jobs: usize) -> Result<Vec<RunReport>, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))?;
    pool.install(|| configs.par_iter().map(|cfg| run(cfg, trace)).collect())
}

/// One run per control parameter, all sharing the configured seed.
pub fn sweep_v(cfg: &SystemConfig, v_values: &[f64], trace: &NreTrace, jobs: usize) -> Result<Vec<RunMetrics>, SimError> {
    let configs = v_values
        .iter()
        .map(|&v| {
            let mut c = cfg.clone();
            c.control_v = v;
            c
        })
        .collect::<Vec<_>>();
    Ok(run_many(&configs, trace, jobs)?
        .into_iter()
        .map(|r| r.metrics)
        .collect())
}

pub const METRICS_HEADER: [&str; 7] = [
    "V",
    "seed",
    "avg_delay_slots",
    "avg_expenditure_cents_per_frame",
    "annualized_cents",
    "stability_ok",
    "drift_slack_min",
];

pub fn write_metrics_csv<'a, W: Write>(out: W, rows: impl IntoIterator<Item = &'a RunMetrics>) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for m in rows {
        w.write_record([
            m.control_v.to_string(),
            m.seed.to_string(),
            m.avg_delay_slots.to_string(),
            m.avg_expenditure_per_frame.to_string(),
            m.annualized_expenditure.to_string(),
            m.stability_ok().to_string(),
            m.drift_slack_min.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ledger_csv<W: Write>(out: W, report: &RunReport) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "E_hav_total", "G_k", "cumulative"])?;
    for f in &report.frames {
        w.write_record([
            f.frame.to_string(),
            f.harvest.iter().sum::<f64>().to_string(),
            f.expenditure.to_string(),
            f.cumulative_expenditure.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_decisions_csv<W: Write>(out: W, cfg: &SystemConfig, report: &RunReport) -> Result<(), SimError> {
    let layout = cfg.layout();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "m", "n", "a", "asleep_m"])?;
    for f in &report.frames {
        for u in 0..cfg.num_ues() {
            let m = layout.owner(u);
            w.write_record([
                f.frame.to_string(),
                m.to_string(),
                layout.local_index(u).to_string(),
                u8::from(f.schedule.indicator[u]).to_string(),
                u8::from(f.schedule.asleep[m]).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_backlog_csv<W: Write>(out: W, cfg: &SystemConfig, report: &RunReport) -> Result<(), SimError> {
    let layout = cfg.layout();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["slot", "m", "n", "q_access", "q_proc"])?;
    for s in &report.slots {
        for u in 0..cfg.num_ues() {
            w.write_record([
                s.slot.to_string(),
                layout.owner(u).to_string(),
                layout.local_index(u).to_string(),
                s.q_access[u].to_string(),
                s.q_proc[u].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_slots_csv<W: Write>(out: W, cfg: &SystemConfig, report: &RunReport) -> Result<(), SimError> {
    let layout = cfg.layout();
    let mut header = vec!["slot".to_string(), "phi".to_string()];
    header.extend((0..cfg.num_ues()).map(|u| format!("rate_{}_{}", layout.owner(u), layout.local_index(u))));
    header.extend((0..cfg.num_scbs).map(|m| format!("power_{m}")));
    header.extend(["p_sg", "objective", "status"].map(String::from));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for s in &report.slots {
        let mut row = vec![s.slot.to_string(), s.phi.to_string()];
        row.extend(s.rates.iter().map(f64::to_string));
        row.extend(s.scbs_power.iter().map(f64::to_string));
        row.push(s.grid_exchange.to_string());
        row.push(s.objective.to_string());
        row.push(s.status.as_str().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Channel realizations of every slot of the run.
pub fn write_channels_csv<W: Write>(mut out: W, cfg: &SystemConfig) -> Result<(), SimError> {
    writeln!(out, "{CHANNEL_CSV_HEADER}")?;
    for slot in 0..cfg.total_slots() {
        let ch = sample_channels(cfg.rng_seed, cfg, slot as u64);
        write_channel_rows(&mut out, cfg.layout(), &ch)?;
    }
    Ok(())
}
