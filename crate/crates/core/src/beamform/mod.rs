//! Slot-level optimisation: SINR and rate evaluation, minimum-power
//! beamforming at fixed rate targets, and the search over the common rate
//! scale φ.
//!
//! Scheduled UEs receive rates `ψ_u·φ`. For a fixed φ the slot objective is
//! increasing in total transmit power (both trading prices are positive and
//! circuit power is fixed by the frame schedule), so the inner problem is a
//! minimum-power beamforming SOCP with SINR targets `exp(ψ_u φ) − 1`.

pub mod search;
pub mod socp;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::channel::ChannelRealization;
use crate::energy::{exchange_cost, grid_exchange};
use crate::model::{Layout, RateWeights, SystemConfig};
use crate::queues::QueueState;
use crate::scheduler::ScheduleDecision;
use socp::{AffineExpr, ConeKind, ConicProblem, ConicSolver, ConicStatus};

/// Slack on per-ScBS power budgets, mW.
pub const POWER_TOLERANCE: f64 = 1e-6;

/// Largest relative duality gap of an accepted conic solve.
pub const GAP_TOLERANCE: f64 = 1e-7;

/// Targets this far above the single-user bound are rejected without a solve.
const CLEARLY_INFEASIBLE_FACTOR: f64 = 1.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformError {
    #[error("SINR targets are unattainable under the power budgets")]
    Infeasible,
    #[error("conic solver failure: {0}")]
    SolverFailure(String),
    #[error("no scheduled UEs")]
    NoScheduledUes,
}

/// One beamforming vector per UE; unscheduled UEs carry zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Beams {
    pub w: Vec<Vec<Complex64>>,
}

impl Beams {
    pub fn zeros(num_ues: usize, n_t: usize) -> Self {
        Self {
            w: vec![vec![Complex64::new(0.0, 0.0); n_t]; num_ues],
        }
    }

    pub fn power(&self, u: usize) -> f64 {
        self.w[u].iter().map(Complex64::norm_sqr).sum()
    }

    pub fn total_power(&self) -> f64 {
        (0..self.w.len()).map(|u| self.power(u)).sum()
    }

    /// Radiated power of ScBS `m`.
    pub fn scbs_tx_power(&self, layout: &Layout, m: usize) -> f64 {
        layout.ues_of(m).map(|u| self.power(u)).sum()
    }
}

/// `hᴴw`.
pub fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// Intra-cell and inter-cell interference received by UE `u`.
pub fn interference(
    layout: &Layout,
    channels: &ChannelRealization,
    beams: &Beams,
    indicator: &[bool],
    u: usize,
) -> (f64, f64) {
    let m = layout.owner(u);
    let mut intra = 0.0;
    let mut inter = 0.0;
    for (i, &on) in indicator.iter().enumerate() {
        if !on || i == u {
            continue;
        }
        let j = layout.owner(i);
        let p = inner(channels.link(j, u), &beams.w[i]).norm_sqr();
        if j == m {
            intra += p;
        } else {
            inter += p;
        }
    }
    (intra, inter)
}

pub fn sinr(
    layout: &Layout,
    channels: &ChannelRealization,
    beams: &Beams,
    indicator: &[bool],
    u: usize,
    noise_mw: f64,
) -> f64 {
    if !indicator[u] {
        return 0.0;
    }
    let signal = inner(channels.link(layout.owner(u), u), &beams.w[u]).norm_sqr();
    let (intra, inter) = interference(layout, channels, beams, indicator, u);
    signal / (intra + inter + noise_mw)
}

/// Achievable rate in nats per slot.
pub fn rate(sinr: f64) -> f64 {
    sinr.ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrTarget {
    /// SINR giving rate `ψφ`.
    pub gamma: f64,
    /// `√γ`.
    pub f: f64,
}

pub fn sinr_target(psi: f64, phi: f64) -> SinrTarget {
    let gamma = (psi * phi).exp_m1();
    SinrTarget {
        gamma,
        f: gamma.sqrt(),
    }
}

/// Largest φ keeping every scheduled UE's rate within its access backlog.
/// UEs with zero weight receive no rate and do not constrain φ.
pub fn phi_upper_bound(q_access: &[f64], psi: &[f64]) -> Result<f64, BeamformError> {
    if q_access.is_empty() {
        return Err(BeamformError::NoScheduledUes);
    }
    let bound = q_access
        .iter()
        .zip(psi)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&q, &w)| q / w)
        .fold(f64::INFINITY, f64::min);
    Ok(if bound.is_finite() { bound.max(0.0) } else { 0.0 })
}

/// Rate weights for the current slot. Unscheduled UEs get zero.
pub fn rate_weights(cfg: &SystemConfig, schedule: &ScheduleDecision, q_access: &[f64]) -> Vec<f64> {
    match &cfg.rate_weights {
        RateWeights::Static(w) => w
            .iter()
            .zip(&schedule.indicator)
            .map(|(&w, &on)| if on { w } else { 0.0 })
            .collect(),
        RateWeights::DynamicBacklog => {
            let total: f64 = schedule.scheduled().map(|u| q_access[u]).sum();
            q_access
                .iter()
                .zip(&schedule.indicator)
                .map(|(&q, &on)| if on && total > 0.0 { q / total } else { 0.0 })
                .collect()
        }
    }
}

/// Inputs of a minimum-power beamforming problem.
#[derive(Debug, Clone, Copy)]
pub struct BeamformingProblem<'a> {
    pub layout: &'a Layout,
    pub channels: &'a ChannelRealization,
    /// SINR target per UE; zero for UEs that need no rate.
    pub targets: &'a [f64],
    pub noise_mw: &'a [f64],
    pub p_max_mw: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    pub beams: Beams,
    pub total_power: f64,
    /// Relative duality gap of the conic solve; zero when no solve was needed.
    pub gap_rel: f64,
    /// Powers were re-solved along the conic solution's directions.
    pub polished: bool,
}

/// Variable layout: `x[0]` is the norm epigraph, then the real and imaginary
/// parts of each active UE's beam.
struct VarMap {
    active: Vec<usize>,
    n_t: usize,
}

impl VarMap {
    fn re(&self, k: usize, a: usize) -> usize {
        1 + 2 * self.n_t * k + a
    }

    fn im(&self, k: usize, a: usize) -> usize {
        1 + 2 * self.n_t * k + self.n_t + a
    }

    fn num_vars(&self) -> usize {
        1 + 2 * self.n_t * self.active.len()
    }
}

/// Coefficients of `Re(hᴴw)` and `Im(hᴴw)` over the beam variables of slot `k`.
fn inner_rows(vars: &VarMap, k: usize, h: &[Complex64], scale: f64) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let mut re = Vec::with_capacity(2 * h.len());
    let mut im = Vec::with_capacity(2 * h.len());
    for (a, z) in h.iter().enumerate() {
        re.push((vars.re(k, a), scale * z.re));
        re.push((vars.im(k, a), scale * z.im));
        im.push((vars.re(k, a), -scale * z.im));
        im.push((vars.im(k, a), scale * z.re));
    }
    (re, im)
}

fn build_socp(problem: &BeamformingProblem<'_>, vars: &VarMap) -> ConicProblem {
    let layout = problem.layout;
    let ch = problem.channels;
    let mut cp = ConicProblem::new(vars.num_vars());
    cp.objective[0] = 1.0;

    // ‖w‖ ≤ τ.
    let mut rows = vec![AffineExpr::var(0, 1.0)];
    for k in 0..vars.active.len() {
        for a in 0..vars.n_t {
            rows.push(AffineExpr::var(vars.re(k, a), 1.0));
            rows.push(AffineExpr::var(vars.im(k, a), 1.0));
        }
    }
    cp.push(ConeKind::SecondOrder, rows);

    for (k, &u) in vars.active.iter().enumerate() {
        // Channels are scaled by 1/σ so that the noise entry is 1.
        let scale = 1.0 / problem.noise_mw[u].sqrt();
        let f = problem.targets[u].sqrt();
        let (re, im) = inner_rows(vars, k, ch.link(layout.owner(u), u), scale);
        cp.push(ConeKind::Zero, vec![AffineExpr::linear(im)]);

        let mut rows = vec![AffineExpr::linear(re)];
        for (l, &i) in vars.active.iter().enumerate() {
            if i == u {
                continue;
            }
            let (re, im) = inner_rows(vars, l, ch.link(layout.owner(i), u), scale * f);
            rows.push(AffineExpr::linear(re));
            rows.push(AffineExpr::linear(im));
        }
        rows.push(AffineExpr::constant(f));
        cp.push(ConeKind::SecondOrder, rows);
    }

    for m in 0..layout.num_scbs() {
        let members: Vec<usize> = (0..vars.active.len())
            .filter(|&k| layout.owner(vars.active[k]) == m)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut rows = vec![AffineExpr::constant(problem.p_max_mw[m].sqrt())];
        for k in members {
            for a in 0..vars.n_t {
                rows.push(AffineExpr::var(vars.re(k, a), 1.0));
                rows.push(AffineExpr::var(vars.im(k, a), 1.0));
            }
        }
        cp.push(ConeKind::SecondOrder, rows);
    }
    cp
}

/// Rotate `w` so that `hᴴw` is real and nonnegative.
fn align_phase(h: &[Complex64], w: &mut [Complex64]) {
    let z = inner(h, w);
    let mag = z.norm();
    if mag > 0.0 {
        let rot = z.conj() / mag;
        for x in w.iter_mut() {
            *x *= rot;
        }
    }
}

/// Fixed-direction power control: solve for the powers meeting every target
/// with equality. Powers that satisfy the targets with slack dominate the
/// fixed point componentwise, so the result never uses more power per UE.
fn polish_powers(problem: &BeamformingProblem<'_>, active: &[usize], beams: &Beams) -> Option<Beams> {
    let layout = problem.layout;
    let ch = problem.channels;
    let k = active.len();
    let dirs: Vec<Vec<Complex64>> = active
        .iter()
        .map(|&u| {
            let norm = beams.power(u).sqrt();
            beams.w[u].iter().map(|x| x / norm).collect()
        })
        .collect();
    if dirs.iter().flatten().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return None;
    }
    let mut a = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for (r, &u) in active.iter().enumerate() {
        let sigma2 = problem.noise_mw[u];
        let gamma = problem.targets[u];
        for (c, &i) in active.iter().enumerate() {
            let g = inner(ch.link(layout.owner(i), u), &dirs[c]).norm_sqr() / sigma2;
            a[(r, c)] = if r == c { g } else { -gamma * g };
        }
        rhs[r] = gamma;
    }
    let p = a.lu().solve(&rhs)?;
    if p.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return None;
    }
    let mut out = Beams::zeros(beams.w.len(), ch.num_antennas());
    for (c, &u) in active.iter().enumerate() {
        if p[c] > beams.power(u) * (1.0 + 1e-9) + 1e-300 {
            return None;
        }
        let s = p[c].sqrt();
        out.w[u] = dirs[c].iter().map(|x| x * s).collect();
        align_phase(ch.link(layout.owner(u), u), &mut out.w[u]);
    }
    Some(out)
}

fn worst_target_shortfall(problem: &BeamformingProblem<'_>, beams: &Beams, indicator: &[bool]) -> f64 {
    indicator
        .iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(u, _)| {
            let g = problem.targets[u];
            let s = sinr(problem.layout, problem.channels, beams, indicator, u, problem.noise_mw[u]);
            (g - s) / (1.0 + g)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn worst_budget_excess(problem: &BeamformingProblem<'_>, beams: &Beams) -> f64 {
    (0..problem.layout.num_scbs())
        .map(|m| beams.scbs_tx_power(problem.layout, m) - problem.p_max_mw[m])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimise total transmit power subject to every UE reaching its SINR target
/// and every ScBS staying within its budget.
pub fn min_power_beamforming(
    problem: &BeamformingProblem<'_>,
    solver: &dyn ConicSolver,
) -> Result<BeamformingSolution, BeamformError> {
    solve_beamforming(problem, solver, true)
}

/// As [`min_power_beamforming`] but returns the conic solution as solved,
/// without the fixed-direction power refinement.
pub fn min_power_beamforming_unpolished(
    problem: &BeamformingProblem<'_>,
    solver: &dyn ConicSolver,
) -> Result<BeamformingSolution, BeamformError> {
    solve_beamforming(problem, solver, false)
}

fn solve_beamforming(
    problem: &BeamformingProblem<'_>,
    solver: &dyn ConicSolver,
    polish: bool,
) -> Result<BeamformingSolution, BeamformError> {
    let layout = problem.layout;
    let ch = problem.channels;
    let n_t = ch.num_antennas();
    let active: Vec<usize> = (0..layout.num_ues())
        .filter(|&u| problem.targets[u] > 0.0)
        .collect();
    if active.is_empty() {
        return Ok(BeamformingSolution {
            beams: Beams::zeros(layout.num_ues(), n_t),
            total_power: 0.0,
            gap_rel: 0.0,
            polished: false,
        });
    }
    for &u in &active {
        let m = layout.owner(u);
        let gain: f64 = ch.link(m, u).iter().map(Complex64::norm_sqr).sum();
        let single_user = problem.p_max_mw[m] * gain / problem.noise_mw[u];
        if !problem.targets[u].is_finite() || problem.targets[u] > CLEARLY_INFEASIBLE_FACTOR * single_user {
            return Err(BeamformError::Infeasible);
        }
    }

    let vars = VarMap { active, n_t };
    let cp = build_socp(problem, &vars);
    let sol = solver.solve(&cp);
    match &sol.status {
        ConicStatus::Infeasible => return Err(BeamformError::Infeasible),
        ConicStatus::Failed(reason) => return Err(BeamformError::SolverFailure(reason.clone())),
        _ if !(sol.gap_rel <= GAP_TOLERANCE) => {
            return Err(BeamformError::SolverFailure(format!(
                "relative duality gap {:e} above {GAP_TOLERANCE:e}",
                sol.gap_rel
            )))
        }
        _ => {}
    }

    let mut beams = Beams::zeros(layout.num_ues(), n_t);
    for (k, &u) in vars.active.iter().enumerate() {
        beams.w[u] = (0..n_t)
            .map(|a| Complex64::new(sol.x[vars.re(k, a)], sol.x[vars.im(k, a)]))
            .collect();
        align_phase(ch.link(layout.owner(u), u), &mut beams.w[u]);
    }

    let indicator: Vec<bool> = problem.targets.iter().map(|&g| g > 0.0).collect();
    let refined = if polish { polish_powers(problem, &vars.active, &beams) } else { None };
    let (beams, polished) = match refined {
        Some(p) if worst_budget_excess(problem, &p) <= POWER_TOLERANCE => (p, true),
        _ => (beams, false),
    };

    let shortfall = worst_target_shortfall(problem, &beams, &indicator);
    let excess = worst_budget_excess(problem, &beams);
    if shortfall > 1e-6 || excess > POWER_TOLERANCE {
        return Err(BeamformError::SolverFailure(format!(
            "solution misses targets (relative shortfall {shortfall:e}, budget excess {excess:e} mW, status {:?})",
            sol.status
        )));
    }
    Ok(BeamformingSolution {
        total_power: beams.total_power(),
        beams,
        gap_rel: sol.gap_rel,
        polished,
    })
}

/// Consumed power of every ScBS: `(1/η)Σ‖w‖² + P_cir` when awake, else zero.
pub fn scbs_power(cfg: &SystemConfig, beams: &Beams, schedule: &ScheduleDecision) -> Vec<f64> {
    let layout = cfg.layout();
    (0..cfg.num_scbs)
        .map(|m| {
            if schedule.asleep[m] {
                0.0
            } else {
                let tx: f64 = schedule.active_sets[m].iter().map(|&u| beams.power(u)).sum();
                debug_assert!(layout.ues_of(m).all(|u| schedule.indicator[u] || beams.power(u) == 0.0));
                tx / cfg.pa_efficiency + cfg.circuit_power_mw(m)
            }
        })
        .collect()
}

/// `Σ_{scheduled} (q_U[k] − q_A[k]) ψ`, the coefficient of φ in the slot
/// objective.
pub fn queue_coefficient(schedule: &ScheduleDecision, frame_start: &QueueState, psi: &[f64]) -> f64 {
    schedule
        .scheduled()
        .map(|u| (frame_start.q_proc[u] - frame_start.q_access[u]) * psi[u])
        .sum()
}

/// Slot objective from its ingredients: trading cost of the net grid draw,
/// scaled by V, plus the queue-weighted rate term.
pub fn objective_value(
    cfg: &SystemConfig,
    total_scbs_power: f64,
    harvest_per_slot_mw: f64,
    queue_coefficient: f64,
    phi: f64,
) -> f64 {
    let p_sg = grid_exchange(total_scbs_power, harvest_per_slot_mw);
    cfg.control_v * exchange_cost(p_sg, cfg.price_buy, cfg.price_sell) + queue_coefficient * phi
}

#[allow(clippy::too_many_arguments)]
pub fn slot_objective(
    cfg: &SystemConfig,
    schedule: &ScheduleDecision,
    beams: &Beams,
    phi: f64,
    psi: &[f64],
    frame_start: &QueueState,
    harvest_per_slot_mw: f64,
) -> f64 {
    let total: f64 = scbs_power(cfg, beams, schedule).iter().sum();
    objective_value(
        cfg,
        total,
        harvest_per_slot_mw,
        queue_coefficient(schedule, frame_start, psi),
        phi,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotStatus {
    Optimal,
    Infeasible,
    AllAsleep,
}

impl SlotStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SlotStatus::Optimal => "optimal",
            SlotStatus::Infeasible => "infeasible",
            SlotStatus::AllAsleep => "all_asleep",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotSolution {
    pub beams: Beams,
    pub phi: f64,
    pub phi_max: f64,
    pub psi: Vec<f64>,
    /// Delivered rate per UE (nats/slot).
    pub rates: Vec<f64>,
    /// Achieved SINR per UE.
    pub sinrs: Vec<f64>,
    /// SINR target per UE at the chosen φ.
    pub targets: Vec<f64>,
    pub scbs_power: Vec<f64>,
    pub grid_exchange: f64,
    pub objective: f64,
    pub status: SlotStatus,
    pub max_gap_rel: f64,
    pub evaluations: usize,
    pub multimodal: bool,
    /// φ values excluded because the conic solver failed on them.
    pub solver_failures: usize,
}

/// Everything the slot optimiser needs to know about the current slot.
#[derive(Debug, Clone, Copy)]
pub struct SlotContext<'a> {
    pub cfg: &'a SystemConfig,
    pub channels: &'a ChannelRealization,
    pub schedule: &'a ScheduleDecision,
    /// Backlogs at the start of the frame (objective weights).
    pub frame_start: &'a QueueState,
    /// Backlogs at the start of this slot (rate limits).
    pub current: &'a QueueState,
    /// `Σ_m E_m[k] / T`, mW.
    pub harvest_per_slot_mw: f64,
}

struct Candidate {
    beams: Beams,
    targets: Vec<f64>,
    scbs_power: Vec<f64>,
    gap_rel: f64,
}

fn evaluate_phi(
    ctx: &SlotContext<'_>,
    psi: &[f64],
    coefficient: f64,
    phi: f64,
    solver: &dyn ConicSolver,
) -> Result<Option<(f64, Candidate)>, BeamformError> {
    let cfg = ctx.cfg;
    let targets: Vec<f64> = psi.iter().map(|&w| sinr_target(w, phi).gamma).collect();
    let problem = BeamformingProblem {
        layout: cfg.layout(),
        channels: ctx.channels,
        targets: &targets,
        noise_mw: &cfg.noise_mw,
        p_max_mw: &cfg.p_max_mw,
    };
    match min_power_beamforming(&problem, solver) {
        Ok(sol) => {
            let scbs_power = scbs_power(cfg, &sol.beams, ctx.schedule);
            let total: f64 = scbs_power.iter().sum();
            let value = objective_value(cfg, total, ctx.harvest_per_slot_mw, coefficient, phi);
            Ok(Some((
                value,
                Candidate {
                    beams: sol.beams,
                    targets,
                    scbs_power,
                    gap_rel: sol.gap_rel,
                },
            )))
        }
        Err(BeamformError::Infeasible) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Search bookkeeping shared across evaluations of one slot.
#[derive(Default)]
struct SearchStats {
    max_gap: f64,
    certified: usize,
    failures: usize,
    last_failure: Option<BeamformError>,
}

/// Choose φ and the beams for one slot.
pub fn optimize_slot(ctx: &SlotContext<'_>, solver: &dyn ConicSolver) -> Result<SlotSolution, BeamformError> {
    let cfg = ctx.cfg;
    let layout = cfg.layout();
    let n_ues = cfg.num_ues();
    let n_t = cfg.num_tx_antennas;
    let harvest = ctx.harvest_per_slot_mw;

    if ctx.schedule.num_scheduled() == 0 {
        let scbs_power = vec![0.0; cfg.num_scbs];
        return Ok(SlotSolution {
            beams: Beams::zeros(n_ues, n_t),
            phi: 0.0,
            phi_max: 0.0,
            psi: vec![0.0; n_ues],
            rates: vec![0.0; n_ues],
            sinrs: vec![0.0; n_ues],
            targets: vec![0.0; n_ues],
            scbs_power,
            grid_exchange: grid_exchange(0.0, harvest),
            objective: objective_value(cfg, 0.0, harvest, 0.0, 0.0),
            status: SlotStatus::AllAsleep,
            max_gap_rel: 0.0,
            evaluations: 0,
            multimodal: false,
            solver_failures: 0,
        });
    }

    let psi = rate_weights(cfg, ctx.schedule, &ctx.current.q_access);
    let scheduled: Vec<usize> = ctx.schedule.scheduled().collect();
    let q_sched: Vec<f64> = scheduled.iter().map(|&u| ctx.current.q_access[u]).collect();
    let psi_sched: Vec<f64> = scheduled.iter().map(|&u| psi[u]).collect();
    let phi_max = phi_upper_bound(&q_sched, &psi_sched)?;
    let coefficient = queue_coefficient(ctx.schedule, ctx.frame_start, &psi);

    let mut stats = SearchStats::default();
    let outcome = search::search_phi(phi_max, &cfg.phi_search, |phi| {
        match evaluate_phi(ctx, &psi, coefficient, phi, solver) {
            Ok(r) => {
                if let Some((_, c)) = &r {
                    stats.max_gap = stats.max_gap.max(c.gap_rel);
                    if phi > 0.0 {
                        stats.certified += 1;
                    }
                }
                Ok(r)
            }
            // A point the solver can neither certify nor refute is excluded
            // from the search; the incumbent stays verified.
            Err(e @ BeamformError::SolverFailure(_)) => {
                stats.failures += 1;
                stats.last_failure = Some(e);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    })?;
    if stats.failures > 0 {
        if stats.certified == 0 {
            return Err(stats.last_failure.expect("failure recorded"));
        }
        log::debug!("{} phi evaluations excluded after solver failures", stats.failures);
    }
    let max_gap = stats.max_gap;
    let solver_failures = stats.failures;

    let Some(best) = outcome else {
        // Zero targets need no solve, so this is reached only if the
        // objective itself is not finite.
        let beams = Beams::zeros(n_ues, n_t);
        let scbs_power = scbs_power(cfg, &beams, ctx.schedule);
        let total: f64 = scbs_power.iter().sum();
        return Ok(SlotSolution {
            beams,
            phi: 0.0,
            phi_max,
            psi,
            rates: vec![0.0; n_ues],
            sinrs: vec![0.0; n_ues],
            targets: vec![0.0; n_ues],
            grid_exchange: grid_exchange(total, harvest),
            objective: objective_value(cfg, total, harvest, coefficient, 0.0),
            scbs_power,
            status: SlotStatus::Infeasible,
            max_gap_rel: max_gap,
            evaluations: 0,
            multimodal: false,
            solver_failures,
        });
    };
    let cand = best.payload;
    let sinrs: Vec<f64> = (0..n_ues)
        .map(|u| sinr(layout, ctx.channels, &cand.beams, &ctx.schedule.indicator, u, cfg.noise_mw[u]))
        .collect();
    let rates: Vec<f64> = (0..n_ues)
        .map(|u| {
            if ctx.schedule.indicator[u] {
                (psi[u] * best.phi).min(ctx.current.q_access[u])
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = cand.scbs_power.iter().sum();
    Ok(SlotSolution {
        beams: cand.beams,
        phi: best.phi,
        phi_max,
        psi,
        rates,
        sinrs,
        targets: cand.targets,
        grid_exchange: grid_exchange(total, harvest),
        scbs_power: cand.scbs_power,
        objective: best.value,
        status: SlotStatus::Optimal,
        max_gap_rel: max_gap,
        evaluations: best.evaluations,
        multimodal: best.multimodal,
        solver_failures,
    })
}
