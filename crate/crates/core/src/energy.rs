//! Solar trace ingestion, harvesting and grid-energy accounting.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("trace parse error: {0}")]
    Parse(String),
    #[error("timestamps not strictly increasing at row {row} ({prev} then {next})")]
    NonMonotoneTimestamps { row: usize, prev: f64, next: f64 },
    #[error("negative irradiance {value} at row {row}")]
    NegativeIrradiance { row: usize, value: f64 },
    #[error("requested time {requested} s outside trace span [{start}, {end}] s")]
    OutOfRange { requested: f64, start: f64, end: f64 },
}

impl From<csv::Error> for TraceError {
    fn from(e: csv::Error) -> Self {
        TraceError::Parse(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TraceSample {
    pub timestamp_s: f64,
    pub irradiance_w_per_m2: f64,
}

/// Irradiance samples with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct NreTrace {
    samples: Vec<TraceSample>,
}

impl NreTrace {
    pub fn new(samples: Vec<TraceSample>) -> Result<Self, TraceError> {
        if samples.len() < 2 {
            return Err(TraceError::Parse(format!(
                "need at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (row, s) in samples.iter().enumerate() {
            if !s.timestamp_s.is_finite() || !s.irradiance_w_per_m2.is_finite() {
                return Err(TraceError::Parse(format!("non-finite value at row {row}")));
            }
            if s.irradiance_w_per_m2 < 0.0 {
                return Err(TraceError::NegativeIrradiance {
                    row,
                    value: s.irradiance_w_per_m2,
                });
            }
        }
        if let Some(row) = samples
            .windows(2)
            .position(|w| w[1].timestamp_s <= w[0].timestamp_s)
        {
            return Err(TraceError::NonMonotoneTimestamps {
                row: row + 1,
                prev: samples[row].timestamp_s,
                next: samples[row + 1].timestamp_s,
            });
        }
        Ok(Self { samples })
    }

    /// Constant irradiance over `[start, end]`.
    pub fn constant(start: f64, end: f64, irradiance: f64) -> Result<Self, TraceError> {
        Self::new(vec![
            TraceSample {
                timestamp_s: start,
                irradiance_w_per_m2: irradiance,
            },
            TraceSample {
                timestamp_s: end,
                irradiance_w_per_m2: irradiance,
            },
        ])
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self, TraceError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let samples = rdr
            .deserialize::<TraceSample>()
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(samples)
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].timestamp_s
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].timestamp_s
    }

    /// Linear interpolation at time `t` (seconds).
    pub fn irradiance_at(&self, t: f64) -> Result<f64, TraceError> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(TraceError::OutOfRange {
                requested: t,
                start: self.start(),
                end: self.end(),
            });
        }
        let i = self
            .samples
            .partition_point(|s| s.timestamp_s <= t)
            .clamp(1, self.samples.len() - 1);
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        let w = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
        Ok(a.irradiance_w_per_m2 + w * (b.irradiance_w_per_m2 - a.irradiance_w_per_m2))
    }
}

/// Bundled clear-sky diurnal profile: one day at 5-minute resolution,
/// sunrise 06:00, sunset 18:00, peak 1000 W/m² at noon.
pub const SYNTHETIC_DIURNAL_CSV: &str = include_str!("../data/solar_synthetic.csv");

pub fn synthetic_diurnal_trace() -> NreTrace {
    NreTrace::from_reader(SYNTHETIC_DIURNAL_CSV.as_bytes()).expect("bundled trace is valid")
}

pub fn load_nre_trace(path: impl AsRef<Path>) -> Result<NreTrace, TraceError> {
    NreTrace::from_reader(std::fs::File::open(path)?)
}

/// Irradiance at the midpoint of each slot, slot 0 starting at `start_s`.
pub fn interpolate_trace(
    trace: &NreTrace,
    start_s: f64,
    slot_duration_s: f64,
    horizon_slots: usize,
) -> Result<Vec<f64>, TraceError> {
    (0..horizon_slots)
        .map(|i| trace.irradiance_at(start_s + (i as f64 + 0.5) * slot_duration_s))
        .collect()
}

/// Harvested power (mW) from irradiance (W/m²).
pub fn harvest_power(irradiance: f64, area_m2: f64, efficiency: f64) -> f64 {
    irradiance * area_m2 * efficiency * 1000.0
}

/// Signed grid exchange (mW): positive buys from the grid, negative sells.
pub fn grid_exchange(total_scbs_power_mw: f64, total_harvest_rate_mw: f64) -> f64 {
    total_scbs_power_mw - total_harvest_rate_mw
}

/// Per-slot cost of a grid exchange, `(α_b − α_s)(P)⁺ + α_s P`.
pub fn exchange_cost(p_sg: f64, price_buy: f64, price_sell: f64) -> f64 {
    (price_buy - price_sell) * p_sg.max(0.0) + price_sell * p_sg
}

/// Frame expenditure (cents) from the per-slot exchanges.
pub fn frame_expenditure(exchanges: &[f64], price_buy: f64, price_sell: f64) -> f64 {
    exchanges
        .iter()
        .map(|&p| exchange_cost(p, price_buy, price_sell))
        .sum()
}

/// Same quantity written as buying at `α_b` minus selling at `α_s`.
pub fn frame_expenditure_buy_sell(exchanges: &[f64], price_buy: f64, price_sell: f64) -> f64 {
    exchanges
        .iter()
        .map(|&p| price_buy * p.max(0.0) - price_sell * (-p).max(0.0))
        .sum()
}

/// Harvest, exchange and expenditure history of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    /// `harvested_per_frame[k][m]` in mW·slot.
    pub harvested_per_frame: Vec<Vec<f64>>,
    pub grid_exchange_per_slot: Vec<f64>,
    pub expenditure_per_frame: Vec<f64>,
    pub cumulative_expenditure: f64,
}

impl EnergyLedger {
    pub fn open_frame(&mut self, harvested: Vec<f64>) {
        self.harvested_per_frame.push(harvested);
    }

    pub fn record_slot(&mut self, p_sg: f64) {
        self.grid_exchange_per_slot.push(p_sg);
    }

    /// Close the current frame over its last `slots_per_frame` exchanges.
    pub fn close_frame(&mut self, slots_per_frame: usize, price_buy: f64, price_sell: f64) -> f64 {
        let n = self.grid_exchange_per_slot.len();
        assert!(n >= slots_per_frame);
        let g = frame_expenditure(
            &self.grid_exchange_per_slot[n - slots_per_frame..],
            price_buy,
            price_sell,
        );
        self.expenditure_per_frame.push(g);
        self.cumulative_expenditure += g;
        g
    }

    pub fn harvest_total(&self, frame: usize) -> f64 {
        self.harvested_per_frame[frame].iter().sum()
    }

    /// Recompute every frame's expenditure from the raw exchanges.
    pub fn recompute(&self, slots_per_frame: usize, price_buy: f64, price_sell: f64) -> Vec<f64> {
        self.grid_exchange_per_slot
            .chunks(slots_per_frame)
            .map(|c| frame_expenditure(c, price_buy, price_sell))
            .collect()
    }
}
