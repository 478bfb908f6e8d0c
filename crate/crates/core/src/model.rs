//! Network configuration, unit conventions and static derived quantities.
//!
//! Units used throughout the crate:
//!
//! * rates and backlogs in nats (natural logarithm), per slot or per frame;
//! * powers in milliwatts, harvested energy in mW·slot;
//! * money in cents.
//!
//! A configuration is read from a single JSON document. Unknown keys are
//! rejected so that a misspelt field name fails loudly instead of silently
//! falling back to a default.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper-tail probability used for the fading factor in the default rate cap.
const RATE_CAP_TAIL_PROBABILITY: f64 = 1e-3;

/// Reference defaults for fields that may be omitted from a document.
pub mod defaults {
    pub const SLOT_DURATION_S: f64 = 0.1;
    pub const PRICE_BUY: f64 = 1.2e-9;
    pub const PRICE_SELL: f64 = 1.0e-9;
    /// -90 dBm.
    pub const NOISE_DBM: f64 = -90.0;
    /// 26 dBm.
    pub const P_MAX_DBM: f64 = 26.0;
    /// 23 dBm.
    pub const P_SP_DBM: f64 = 23.0;
    pub const SERVICE_NATS: f64 = 3.5;
    /// 5 cm².
    pub const HARVESTER_AREA_M2: f64 = 5e-4;
    pub const HARVESTER_EFFICIENCY: f64 = 0.3;
    pub const PHI_GRID_POINTS: usize = 32;
    pub const PHI_REFINE_POINTS: usize = 8;
    pub const PHI_REFINE_ROUNDS: usize = 2;
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("price_buy ({buy:e}) must exceed price_sell ({sell:e})")]
    PriceOrder { buy: f64, sell: f64 },
    #[error("{field}: expected {expected}, found {found}")]
    Dimension {
        field: &'static str,
        expected: String,
        found: String,
    },
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: String, value: f64 },
    #[error("{field} out of range: {reason}")]
    OutOfRange { field: &'static str, reason: String },
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// A scalar applied to every entry, or one value per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerEntry {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerEntry {
    fn expand(&self, field: &'static str, len: usize) -> Result<Vec<f64>, ConfigError> {
        match self {
            PerEntry::Uniform(v) => Ok(vec![*v; len]),
            PerEntry::Each(values) if values.len() == len => Ok(values.clone()),
            PerEntry::Each(values) => Err(ConfigError::Dimension {
                field,
                expected: format!("{len} entries"),
                found: format!("{} entries", values.len()),
            }),
        }
    }
}

/// How the proportional-rate weights ψ are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateWeightsDoc {
    Mode(String),
    Static(PerEntry),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateWeights {
    /// Fixed ψ per UE.
    Static(Vec<f64>),
    /// ψ proportional to the current access backlog, normalised to sum to one
    /// over the scheduled UEs.
    DynamicBacklog,
}

pub const DYNAMIC_BACKLOG: &str = "dynamic-backlog";

/// Resolution knobs for the one-dimensional search over the common rate scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSearch {
    #[serde(default = "PhiSearch::default_grid")]
    pub grid_points: usize,
    #[serde(default = "PhiSearch::default_refine_points")]
    pub refine_points: usize,
    #[serde(default = "PhiSearch::default_refine_rounds")]
    pub refine_rounds: usize,
}

impl PhiSearch {
    fn default_grid() -> usize {
        defaults::PHI_GRID_POINTS
    }
    fn default_refine_points() -> usize {
        defaults::PHI_REFINE_POINTS
    }
    fn default_refine_rounds() -> usize {
        defaults::PHI_REFINE_ROUNDS
    }
}

impl Default for PhiSearch {
    fn default() -> Self {
        Self {
            grid_points: defaults::PHI_GRID_POINTS,
            refine_points: defaults::PHI_REFINE_POINTS,
            refine_rounds: defaults::PHI_REFINE_ROUNDS,
        }
    }
}

/// The configuration document exactly as it appears on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub num_scbs: usize,
    pub ues_per_scbs: Vec<usize>,
    pub num_tx_antennas: usize,
    pub slots_per_frame: usize,
    pub num_frames: usize,
    #[serde(default)]
    pub slot_duration_s: Option<f64>,
    pub pa_efficiency: f64,
    #[serde(default)]
    pub p_max_mw: Option<PerEntry>,
    #[serde(default)]
    pub p_sp_mw: Option<PerEntry>,
    #[serde(default)]
    pub noise_mw: Option<PerEntry>,
    pub pathloss_exponent: f64,
    pub distance_matrix_m: Vec<Vec<f64>>,
    pub arrival_nats: PerEntry,
    #[serde(default)]
    pub service_nats: Option<PerEntry>,
    #[serde(default)]
    pub rate_weights: Option<RateWeightsDoc>,
    pub control_v: f64,
    #[serde(default)]
    pub price_buy: Option<f64>,
    #[serde(default)]
    pub price_sell: Option<f64>,
    #[serde(default)]
    pub harvester_area_m2: Option<f64>,
    #[serde(default)]
    pub harvester_efficiency: Option<f64>,
    #[serde(default)]
    pub rng_seed: Option<u64>,
    #[serde(default)]
    pub r_max_cap: Option<f64>,
    #[serde(default)]
    pub phi_search: Option<PhiSearch>,
    /// Trace time (seconds) aligned with slot 0; defaults to the first sample.
    #[serde(default)]
    pub trace_start_s: Option<f64>,
}

/// Validated, fully expanded network description.
///
/// UEs are indexed globally in ScBS-major order: UE `u` belongs to the ScBS
/// whose range in [`Layout::ues_of`] contains `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_scbs: usize,
    pub ues_per_scbs: Vec<usize>,
    pub num_tx_antennas: usize,
    pub slots_per_frame: usize,
    pub num_frames: usize,
    pub slot_duration_s: f64,
    pub pa_efficiency: f64,
    pub p_max_mw: Vec<f64>,
    pub p_sp_mw: Vec<f64>,
    pub noise_mw: Vec<f64>,
    pub pathloss_exponent: f64,
    /// `distance_matrix_m[j][u]`: ScBS `j` to UE `u`.
    pub distance_matrix_m: Vec<Vec<f64>>,
    pub arrival_nats: Vec<f64>,
    pub service_nats: Vec<f64>,
    pub rate_weights: RateWeights,
    pub control_v: f64,
    pub price_buy: f64,
    pub price_sell: f64,
    pub harvester_area_m2: f64,
    pub harvester_efficiency: f64,
    pub rng_seed: u64,
    pub r_max_cap: f64,
    pub phi_search: PhiSearch,
    pub trace_start_s: Option<f64>,
    layout: Layout,
}

/// Mapping between global UE indices and (ScBS, local UE) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    offsets: Vec<usize>,
    owner: Vec<usize>,
}

impl Layout {
    pub fn new(ues_per_scbs: &[usize]) -> Self {
        let mut offsets = Vec::with_capacity(ues_per_scbs.len() + 1);
        let mut owner = Vec::new();
        offsets.push(0);
        for (m, &n) in ues_per_scbs.iter().enumerate() {
            owner.extend(std::iter::repeat_n(m, n));
            offsets.push(offsets[m] + n);
        }
        Self { offsets, owner }
    }

    pub fn num_scbs(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_ues(&self) -> usize {
        self.owner.len()
    }

    /// ScBS serving UE `u`.
    pub fn owner(&self, u: usize) -> usize {
        self.owner[u]
    }

    /// Position of UE `u` within its cell.
    pub fn local_index(&self, u: usize) -> usize {
        u - self.offsets[self.owner[u]]
    }

    pub fn ues_of(&self, m: usize) -> Range<usize> {
        self.offsets[m]..self.offsets[m + 1]
    }

    pub fn global_index(&self, m: usize, n: usize) -> usize {
        self.offsets[m] + n
    }
}

/// Circuit power of an active ScBS (mW) for `n_t` transmit antennas.
pub fn circuit_power(p_sp_mw: f64, n_t: usize) -> f64 {
    let n = n_t as f64;
    p_sp_mw * (0.87 + 0.1 * n + 0.03 * n * n)
}

/// Constants of the per-queue one-frame drift bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftConstants {
    pub c_access: Vec<f64>,
    pub c_proc: Vec<f64>,
    pub psi_total: f64,
}

/// `C^A = (λ² + T² r²)/2`.
pub fn access_drift_constant(lambda: f64, slots_per_frame: usize, r_max: f64) -> f64 {
    let t = slots_per_frame as f64;
    0.5 * (lambda * lambda + t * t * r_max * r_max)
}

/// `C^U = T² (s̄² + r²)/2`.
pub fn processing_drift_constant(service: f64, slots_per_frame: usize, r_max: f64) -> f64 {
    let t = slots_per_frame as f64;
    0.5 * t * t * (service * service + r_max * r_max)
}

pub fn drift_constants(cfg: &SystemConfig) -> DriftConstants {
    let t = cfg.slots_per_frame;
    let c_access: Vec<f64> = cfg
        .arrival_nats
        .iter()
        .map(|&l| access_drift_constant(l, t, cfg.r_max_cap))
        .collect();
    let c_proc: Vec<f64> = cfg
        .service_nats
        .iter()
        .map(|&s| processing_drift_constant(s, t, cfg.r_max_cap))
        .collect();
    let psi_total = c_access.iter().chain(&c_proc).sum();
    DriftConstants {
        c_access,
        c_proc,
        psi_total,
    }
}

/// Default per-slot rate cap: `ln(1 + P·N_T·g·F/σ²)` with the strongest
/// pathloss gain `g`, the largest budget, the smallest noise power, and `F`
/// the 99.9th percentile of a unit-mean exponential (one antenna's fading
/// power).
pub fn default_rate_cap(
    p_max_mw: &[f64],
    noise_mw: &[f64],
    n_t: usize,
    distance_matrix_m: &[Vec<f64>],
    pathloss_exponent: f64,
) -> f64 {
    let p = p_max_mw.iter().copied().fold(0.0, f64::max);
    let sigma2 = noise_mw.iter().copied().fold(f64::INFINITY, f64::min);
    let max_gain = distance_matrix_m
        .iter()
        .flatten()
        .map(|d| d.powf(-pathloss_exponent))
        .fold(0.0, f64::max);
    let fading = -RATE_CAP_TAIL_PROBABILITY.ln();
    (p * n_t as f64 * max_gain * fading / sigma2).ln_1p()
}

fn positive(field: impl Into<String>, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::NonPositive {
            field: field.into(),
            value,
        })
    }
}

fn all_positive(field: &str, values: &[f64]) -> Result<(), ConfigError> {
    values
        .iter()
        .enumerate()
        .try_for_each(|(i, &v)| positive(format!("{field}[{i}]"), v))
}

fn count_positive(field: &'static str, value: usize) -> Result<(), ConfigError> {
    if value == 0 {
        Err(ConfigError::NonPositive {
            field: field.into(),
            value: 0.0,
        })
    } else {
        Ok(())
    }
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<SystemConfig, ConfigError> {
        count_positive("num_scbs", self.num_scbs)?;
        count_positive("num_tx_antennas", self.num_tx_antennas)?;
        count_positive("slots_per_frame", self.slots_per_frame)?;
        count_positive("num_frames", self.num_frames)?;
        if self.ues_per_scbs.len() != self.num_scbs {
            return Err(ConfigError::Dimension {
                field: "ues_per_scbs",
                expected: format!("{} entries", self.num_scbs),
                found: format!("{} entries", self.ues_per_scbs.len()),
            });
        }
        for (m, &n) in self.ues_per_scbs.iter().enumerate() {
            if n == 0 {
                return Err(ConfigError::NonPositive {
                    field: format!("ues_per_scbs[{m}]"),
                    value: 0.0,
                });
            }
        }
        let layout = Layout::new(&self.ues_per_scbs);
        let m = self.num_scbs;
        let u = layout.num_ues();

        let slot_duration_s = self.slot_duration_s.unwrap_or(defaults::SLOT_DURATION_S);
        positive("slot_duration_s", slot_duration_s)?;
        positive("pa_efficiency", self.pa_efficiency)?;
        if self.pa_efficiency > 1.0 {
            return Err(ConfigError::OutOfRange {
                field: "pa_efficiency",
                reason: format!("{} exceeds 1", self.pa_efficiency),
            });
        }

        let p_max_mw = self
            .p_max_mw
            .clone()
            .unwrap_or(PerEntry::Uniform(dbm_to_mw(defaults::P_MAX_DBM)))
            .expand("p_max_mw", m)?;
        all_positive("p_max_mw", &p_max_mw)?;
        let p_sp_mw = self
            .p_sp_mw
            .clone()
            .unwrap_or(PerEntry::Uniform(dbm_to_mw(defaults::P_SP_DBM)))
            .expand("p_sp_mw", m)?;
        all_positive("p_sp_mw", &p_sp_mw)?;
        let noise_mw = self
            .noise_mw
            .clone()
            .unwrap_or(PerEntry::Uniform(dbm_to_mw(defaults::NOISE_DBM)))
            .expand("noise_mw", u)?;
        all_positive("noise_mw", &noise_mw)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;

        if self.distance_matrix_m.len() != m
            || self.distance_matrix_m.iter().any(|row| row.len() != u)
        {
            let shape = self
                .distance_matrix_m
                .iter()
                .map(|r| r.len().to_string())
                .collect::<Vec<_>>()
                .join(",");
            return Err(ConfigError::Dimension {
                field: "distance_matrix_m",
                expected: format!("{m} rows of {u} entries"),
                found: format!("{} rows of [{shape}] entries", self.distance_matrix_m.len()),
            });
        }
        for (j, row) in self.distance_matrix_m.iter().enumerate() {
            all_positive(&format!("distance_matrix_m[{j}]"), row)?;
        }

        let arrival_nats = self.arrival_nats.expand("arrival_nats", u)?;
        for (i, &a) in arrival_nats.iter().enumerate() {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(ConfigError::OutOfRange {
                    field: "arrival_nats",
                    reason: format!("entry {i} is {a}, must be finite and nonnegative"),
                });
            }
        }
        let service_nats = self
            .service_nats
            .clone()
            .unwrap_or(PerEntry::Uniform(defaults::SERVICE_NATS))
            .expand("service_nats", u)?;
        all_positive("service_nats", &service_nats)?;

        let rate_weights = match &self.rate_weights {
            None => RateWeights::DynamicBacklog,
            Some(RateWeightsDoc::Mode(mode)) if mode == DYNAMIC_BACKLOG => {
                RateWeights::DynamicBacklog
            }
            Some(RateWeightsDoc::Mode(mode)) => {
                return Err(ConfigError::OutOfRange {
                    field: "rate_weights",
                    reason: format!("unknown mode {mode:?}, expected {DYNAMIC_BACKLOG:?}"),
                })
            }
            Some(RateWeightsDoc::Static(values)) => {
                let w = values.expand("rate_weights", u)?;
                all_positive("rate_weights", &w)?;
                RateWeights::Static(w)
            }
        };

        positive("control_v", self.control_v)?;
        let price_buy = self.price_buy.unwrap_or(defaults::PRICE_BUY);
        let price_sell = self.price_sell.unwrap_or(defaults::PRICE_SELL);
        positive("price_buy", price_buy)?;
        positive("price_sell", price_sell)?;
        if price_buy <= price_sell {
            return Err(ConfigError::PriceOrder {
                buy: price_buy,
                sell: price_sell,
            });
        }

        let harvester_area_m2 = self
            .harvester_area_m2
            .unwrap_or(defaults::HARVESTER_AREA_M2);
        positive("harvester_area_m2", harvester_area_m2)?;
        let harvester_efficiency = self
            .harvester_efficiency
            .unwrap_or(defaults::HARVESTER_EFFICIENCY);
        positive("harvester_efficiency", harvester_efficiency)?;

        let r_max_cap = match self.r_max_cap {
            Some(cap) => cap,
            None => default_rate_cap(
                &p_max_mw,
                &noise_mw,
                self.num_tx_antennas,
                &self.distance_matrix_m,
                self.pathloss_exponent,
            ),
        };
        positive("r_max_cap", r_max_cap)?;

        let phi_search = self.phi_search.unwrap_or_default();
        if phi_search.grid_points < 2 {
            return Err(ConfigError::OutOfRange {
                field: "phi_search.grid_points",
                reason: format!("{} < 2", phi_search.grid_points),
            });
        }
        if let Some(start) = self.trace_start_s {
            if !start.is_finite() {
                return Err(ConfigError::OutOfRange {
                    field: "trace_start_s",
                    reason: "must be finite".into(),
                });
            }
        }

        Ok(SystemConfig {
            num_scbs: m,
            ues_per_scbs: self.ues_per_scbs.clone(),
            num_tx_antennas: self.num_tx_antennas,
            slots_per_frame: self.slots_per_frame,
            num_frames: self.num_frames,
            slot_duration_s,
            pa_efficiency: self.pa_efficiency,
            p_max_mw,
            p_sp_mw,
            noise_mw,
            pathloss_exponent: self.pathloss_exponent,
            distance_matrix_m: self.distance_matrix_m.clone(),
            arrival_nats,
            service_nats,
            rate_weights,
            control_v: self.control_v,
            price_buy,
            price_sell,
            harvester_area_m2,
            harvester_efficiency,
            rng_seed: self.rng_seed.unwrap_or(0),
            r_max_cap,
            phi_search,
            trace_start_s: self.trace_start_s,
            layout,
        })
    }
}

/// Parse and validate a JSON configuration document.
pub fn validate_config(raw: &str) -> Result<SystemConfig, ConfigError> {
    ConfigDocument::from_json(raw)?.validate()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig, ConfigError> {
    validate_config(&std::fs::read_to_string(path)?)
}

impl SystemConfig {
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn num_ues(&self) -> usize {
        self.layout.num_ues()
    }

    pub fn circuit_power_mw(&self, m: usize) -> f64 {
        circuit_power(self.p_sp_mw[m], self.num_tx_antennas)
    }

    /// Variance of each antenna's channel coefficient from ScBS `j` to UE `u`.
    pub fn pathloss_gain(&self, j: usize, u: usize) -> f64 {
        self.distance_matrix_m[j][u].powf(-self.pathloss_exponent)
    }

    pub fn total_slots(&self) -> usize {
        self.slots_per_frame * self.num_frames
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.slots_per_frame as f64 * self.slot_duration_s
    }

    /// Rebuild a document from this configuration.
    pub fn to_document(&self) -> ConfigDocument {
        ConfigDocument {
            num_scbs: self.num_scbs,
            ues_per_scbs: self.ues_per_scbs.clone(),
            num_tx_antennas: self.num_tx_antennas,
            slots_per_frame: self.slots_per_frame,
            num_frames: self.num_frames,
            slot_duration_s: Some(self.slot_duration_s),
            pa_efficiency: self.pa_efficiency,
            p_max_mw: Some(PerEntry::Each(self.p_max_mw.clone())),
            p_sp_mw: Some(PerEntry::Each(self.p_sp_mw.clone())),
            noise_mw: Some(PerEntry::Each(self.noise_mw.clone())),
            pathloss_exponent: self.pathloss_exponent,
            distance_matrix_m: self.distance_matrix_m.clone(),
            arrival_nats: PerEntry::Each(self.arrival_nats.clone()),
            service_nats: Some(PerEntry::Each(self.service_nats.clone())),
            rate_weights: Some(match &self.rate_weights {
                RateWeights::Static(w) => RateWeightsDoc::Static(PerEntry::Each(w.clone())),
                RateWeights::DynamicBacklog => RateWeightsDoc::Mode(DYNAMIC_BACKLOG.into()),
            }),
            control_v: self.control_v,
            price_buy: Some(self.price_buy),
            price_sell: Some(self.price_sell),
            harvester_area_m2: Some(self.harvester_area_m2),
            harvester_efficiency: Some(self.harvester_efficiency),
            rng_seed: Some(self.rng_seed),
            r_max_cap: Some(self.r_max_cap),
            phi_search: Some(self.phi_search),
            trace_start_s: self.trace_start_s,
        }
    }

    /// Copy with a different control parameter.
    pub fn with_control_v(&self, v: f64) -> Result<Self, ConfigError> {
        let mut doc = self.to_document();
        doc.control_v = v;
        doc.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_cell_doc() -> serde_json::Value {
        serde_json::json!({
            "num_scbs": 2,
            "ues_per_scbs": [2, 2],
            "num_tx_antennas": 2,
            "slots_per_frame": 10,
            "num_frames": 20,
            "pa_efficiency": 0.5,
            "pathloss_exponent": 3.0,
            "distance_matrix_m": [[30.0, 40.0, 90.0, 110.0], [100.0, 85.0, 35.0, 25.0]],
            "arrival_nats": 1.5,
            "control_v": 1.0
        })
    }

    fn validate_value(v: &serde_json::Value) -> Result<SystemConfig, ConfigError> {
        validate_config(&v.to_string())
    }

    #[test]
    fn defaults_are_filled() {
        let cfg = validate_value(&two_cell_doc()).unwrap();
        assert_eq!(cfg.price_buy, 1.2e-9);
        assert_eq!(cfg.price_sell, 1e-9);
        assert_eq!(cfg.slot_duration_s, 0.1);
        assert_eq!(cfg.service_nats, vec![3.5; 4]);
        assert!((cfg.p_max_mw[1] - 398.107_170_553_497).abs() < 1e-9);
        assert!((cfg.noise_mw[3] - 1e-9).abs() < 1e-24);
        assert_eq!(cfg.rate_weights, RateWeights::DynamicBacklog);
        assert!(cfg.r_max_cap > 0.0);
    }

    #[test]
    fn inverted_prices_rejected() {
        let mut doc = two_cell_doc();
        doc["price_buy"] = 1.0e-9.into();
        doc["price_sell"] = 1.2e-9.into();
        assert!(matches!(
            validate_value(&doc),
            Err(ConfigError::PriceOrder { .. })
        ));
        doc["price_buy"] = 1.0e-9.into();
        doc["price_sell"] = 1.0e-9.into();
        assert!(matches!(
            validate_value(&doc),
            Err(ConfigError::PriceOrder { .. })
        ));
    }

    #[test]
    fn zero_distance_rejected() {
        let mut doc = two_cell_doc();
        doc["distance_matrix_m"][1][2] = 0.0.into();
        match validate_value(&doc) {
            Err(ConfigError::NonPositive { field, .. }) => {
                assert_eq!(field, "distance_matrix_m[1][2]")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distance_shape_checked() {
        let mut doc = two_cell_doc();
        doc["distance_matrix_m"] = serde_json::json!([[30.0, 40.0, 90.0], [100.0, 85.0, 35.0]]);
        assert!(matches!(
            validate_value(&doc),
            Err(ConfigError::Dimension { field: "distance_matrix_m", .. })
        ));
        let mut doc = two_cell_doc();
        doc["distance_matrix_m"] = serde_json::json!([[30.0, 40.0, 90.0, 110.0]]);
        assert!(matches!(validate_value(&doc), Err(ConfigError::Dimension { .. })));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut doc = two_cell_doc();
        doc["control_vv"] = 1.0.into();
        assert!(matches!(validate_value(&doc), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn nonpositive_parameters_rejected() {
        for (key, value) in [
            ("pa_efficiency", serde_json::json!(0.0)),
            ("noise_mw", serde_json::json!(-1.0)),
            ("control_v", serde_json::json!(0.0)),
            ("rate_weights", serde_json::json!([1.0, 0.0, 1.0, 1.0])),
            ("service_nats", serde_json::json!(0.0)),
        ] {
            let mut doc = two_cell_doc();
            doc[key] = value;
            assert!(
                matches!(validate_value(&doc), Err(ConfigError::NonPositive { .. })),
                "{key}"
            );
        }
    }

    #[test]
    fn rate_weight_modes() {
        let mut doc = two_cell_doc();
        doc["rate_weights"] = "dynamic-backlog".into();
        assert_eq!(
            validate_value(&doc).unwrap().rate_weights,
            RateWeights::DynamicBacklog
        );
        doc["rate_weights"] = serde_json::json!([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            validate_value(&doc).unwrap().rate_weights,
            RateWeights::Static(vec![1.0, 2.0, 3.0, 4.0])
        );
        doc["rate_weights"] = "bogus".into();
        assert!(matches!(validate_value(&doc), Err(ConfigError::OutOfRange { .. })));
    }

    #[test]
    fn document_round_trip() {
        let cfg = validate_value(&two_cell_doc()).unwrap();
        let again = cfg.to_document().validate().unwrap();
        assert_eq!(cfg, again);
        let text = serde_json::to_string(&cfg.to_document()).unwrap();
        assert_eq!(validate_config(&text).unwrap(), cfg);
    }

    #[test]
    fn layout_indexing() {
        let layout = Layout::new(&[2, 3, 1]);
        assert_eq!(layout.num_ues(), 6);
        assert_eq!(layout.ues_of(1), 2..5);
        assert_eq!(layout.owner(4), 1);
        assert_eq!(layout.local_index(4), 2);
        assert_eq!(layout.global_index(2, 0), 5);
    }

    #[test]
    fn circuit_power_polynomial() {
        let p = 7.0;
        assert!((circuit_power(p, 1) - 1.00 * p).abs() < 1e-12);
        assert!((circuit_power(p, 2) - 1.19 * p).abs() < 1e-12);
        assert!((circuit_power(p, 4) - 1.75 * p).abs() < 1e-12);
        for n in 1..64 {
            assert!(circuit_power(p, n + 1) > circuit_power(p, n));
        }
    }

    #[test]
    fn drift_constant_values() {
        assert_eq!(access_drift_constant(1.0, 2, 1.0), 2.5);
        assert_eq!(processing_drift_constant(1.0, 2, 1.0), 4.0);
        assert_eq!(access_drift_constant(0.0, 1, 0.0), 0.0);
        assert_eq!(processing_drift_constant(0.0, 1, 0.0), 0.0);
    }

    #[test]
    fn drift_constants_reference_scale() {
        let mut doc = two_cell_doc();
        doc["r_max_cap"] = 12.25.into();
        let cfg = validate_value(&doc).unwrap();
        let dc = drift_constants(&cfg);
        // Independent evaluation: (1.5² + 10²·12.25²)/2 and 10²(3.5² + 12.25²)/2.
        let ca = (2.25 + 100.0 * 150.0625) / 2.0;
        let cu = 100.0 * (12.25 + 150.0625) / 2.0;
        for u in 0..4 {
            assert!((dc.c_access[u] - ca).abs() < 1e-9);
            assert!((dc.c_proc[u] - cu).abs() < 1e-9);
        }
        assert!((dc.psi_total - 4.0 * (ca + cu)).abs() < 1e-7);
    }

    #[test]
    fn drift_constants_permutation_invariant() {
        let mut doc = two_cell_doc();
        doc["arrival_nats"] = serde_json::json!([0.5, 1.0, 2.0, 3.0]);
        doc["service_nats"] = serde_json::json!([3.0, 3.5, 4.0, 2.0]);
        let a = drift_constants(&validate_value(&doc).unwrap());
        doc["arrival_nats"] = serde_json::json!([3.0, 2.0, 1.0, 0.5]);
        doc["service_nats"] = serde_json::json!([2.0, 4.0, 3.5, 3.0]);
        let b = drift_constants(&validate_value(&doc).unwrap());
        assert!((a.psi_total - b.psi_total).abs() <= 1e-12 * a.psi_total);
    }
}
