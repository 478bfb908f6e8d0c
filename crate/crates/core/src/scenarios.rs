//! Ready-made network configurations.

use crate::model::{ConfigDocument, PerEntry, RateWeightsDoc, DYNAMIC_BACKLOG};

/// Two ScBSs with two UEs each and two antennas, ten slots per frame, using
/// the default prices, powers, noise and harvester. Serving links are 30–40 m
/// long and cross links 85–110 m.
pub fn two_cell(num_frames: usize, control_v: f64) -> ConfigDocument {
    ConfigDocument {
        num_scbs: 2,
        ues_per_scbs: vec![2, 2],
        num_tx_antennas: 2,
        slots_per_frame: 10,
        num_frames,
        slot_duration_s: None,
        pa_efficiency: 0.5,
        p_max_mw: None,
        p_sp_mw: None,
        noise_mw: None,
        pathloss_exponent: 3.0,
        distance_matrix_m: vec![
            vec![30.0, 40.0, 90.0, 110.0],
            vec![100.0, 85.0, 35.0, 32.0],
        ],
        arrival_nats: PerEntry::Uniform(1.5),
        service_nats: None,
        rate_weights: Some(RateWeightsDoc::Mode(DYNAMIC_BACKLOG.into())),
        control_v,
        price_buy: None,
        price_sell: None,
        harvester_area_m2: None,
        harvester_efficiency: None,
        rng_seed: Some(1),
        r_max_cap: None,
        phi_search: None,
        trace_start_s: None,
    }
}

/// One single-antenna ScBS serving one UE at `distance_m`.
pub fn single_link(num_frames: usize, control_v: f64, distance_m: f64) -> ConfigDocument {
    ConfigDocument {
        num_scbs: 1,
        ues_per_scbs: vec![1],
        num_tx_antennas: 1,
        slots_per_frame: 10,
        num_frames,
        slot_duration_s: None,
        pa_efficiency: 0.5,
        p_max_mw: None,
        p_sp_mw: None,
        noise_mw: None,
        pathloss_exponent: 3.0,
        distance_matrix_m: vec![vec![distance_m]],
        arrival_nats: PerEntry::Uniform(1.5),
        service_nats: None,
        rate_weights: Some(RateWeightsDoc::Static(PerEntry::Uniform(1.0))),
        control_v,
        price_buy: None,
        price_sell: None,
        harvester_area_m2: None,
        harvester_efficiency: None,
        rng_seed: Some(1),
        r_max_cap: None,
        phi_search: None,
        trace_start_s: None,
    }
}
