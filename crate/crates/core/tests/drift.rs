use proptest::prelude::*;

use sgcell_core::model::{access_drift_constant, processing_drift_constant, DriftConstants};
use sgcell_core::queues::{arrival, QueueState};
use sgcell_core::scheduler::{drift_bound_check, FrameObservation};

const T: usize = 10;

fn constants(lambda: &[f64], service: &[f64], r_max: f64) -> DriftConstants {
    let c_access: Vec<f64> = lambda.iter().map(|&l| access_drift_constant(l, T, r_max)).collect();
    let c_proc: Vec<f64> = service.iter().map(|&s| processing_drift_constant(s, T, r_max)).collect();
    DriftConstants { psi_total: c_access.iter().chain(&c_proc).sum(), c_access, c_proc }
}

prop_compose! {
    fn frame_case()(n in 1usize..5)(
        qa in prop::collection::vec(0.0f64..20.0, n),
        qu in prop::collection::vec(0.0f64..20.0, n),
        lambda in prop::collection::vec(0.0f64..5.0, n),
        service in prop::collection::vec(0.1f64..5.0, n),
        fractions in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), T),
        r_max in 0.5f64..6.0,
        v in 0.0f64..1e3,
        expenditure in -1.0f64..1.0,
        frame in 0u64..50,
    ) -> (QueueState, Vec<f64>, Vec<f64>, Vec<Vec<f64>>, f64, f64, f64, u64) {
        let start = QueueState { q_access: qa, q_proc: qu, slot_index: frame * T as u64 };
        (start, lambda, service, fractions, r_max, v, expenditure, frame)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // Any admissible rate sequence (bounded by the cap and the current access
    // backlog) keeps every drift inequality.
    #[test]
    fn admissible_frames_satisfy_the_drift_bounds(case in frame_case()) {
        let (start, lambda, service, fractions, r_max, v, expenditure, frame) = case;
        let mut q = start.clone();
        let mut rates = Vec::new();
        let mut served = Vec::new();
        for (t, frac) in fractions.iter().enumerate() {
            let slot = frame * T as u64 + t as u64;
            let r: Vec<f64> = frac.iter().zip(&q.q_access).map(|(f, &a)| f * a.min(r_max)).collect();
            let nu: Vec<f64> = lambda.iter().map(|&l| arrival(l, slot, frame, T)).collect();
            let step = q.step(&r, &nu, &service).unwrap();
            rates.push(r);
            served.push(step.served);
        }
        let check = drift_bound_check(
            &FrameObservation { start: &start, end: &q, rates: &rates, served: &served, arrivals: &lambda, expenditure },
            T,
            &constants(&lambda, &service, r_max),
            v,
        ).unwrap();
        prop_assert!(check.holds(1e-9), "min slack {}", check.min_slack());
    }
}
