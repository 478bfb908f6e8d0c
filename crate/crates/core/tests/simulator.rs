use sgcell_core::energy::{synthetic_diurnal_trace, NreTrace};
use sgcell_core::oracle::check_against_oracle;
use sgcell_core::scenarios;
use sgcell_core::simulator::run;

#[test]
fn single_link_run_matches_scalar_oracle() {
    for v in [1.0, 1e10] {
        let mut doc = scenarios::single_link(10, v, 100.0);
        doc.trace_start_s = Some(36_000.0);
        let cfg = doc.validate().unwrap();
        let (report, _) = check_against_oracle(&cfg, &synthetic_diurnal_trace()).unwrap();
        assert_eq!(report.slots, 100);
        assert!(report.passes(), "V = {v}: {report:?}");
    }
}

#[test]
fn idle_network_sells_its_whole_harvest() {
    let mut doc = scenarios::two_cell(5, 1.0);
    doc.trace_start_s = Some(0.0);
    doc.arrival_nats = sgcell_core::model::PerEntry::Uniform(0.0);
    let cfg = doc.validate().unwrap();
    let trace = NreTrace::constant(0.0, 3600.0, 800.0).unwrap();
    let report = run(&cfg, &trace).unwrap();
    for s in &report.slots {
        assert!(s.rates.iter().all(|&r| r == 0.0));
        assert!(s.scbs_power.iter().all(|&p| p == 0.0));
        assert!(s.grid_exchange < 0.0);
        assert_eq!(s.grid_exchange, -s.harvest_per_slot_mw);
    }
    assert!(report.metrics.avg_expenditure_per_frame < 0.0);
    assert!(report.metrics.asleep_fraction.iter().all(|&f| f == 1.0));
}

#[test]
fn grid_exchange_closes_the_power_balance() {
    let mut doc = scenarios::two_cell(8, 1.0);
    doc.trace_start_s = Some(36_000.0);
    let cfg = doc.validate().unwrap();
    let report = run(&cfg, &synthetic_diurnal_trace()).unwrap();
    for s in &report.slots {
        let consumed: f64 = s.scbs_power.iter().sum();
        assert!((s.grid_exchange - (consumed - s.harvest_per_slot_mw)).abs() <= 1e-9);
        assert!(s.rates.iter().zip(&s.q_access).all(|(r, q)| r <= q));
    }
    let total: f64 = report.frames.iter().map(|f| f.expenditure).sum();
    assert!((total - report.ledger.cumulative_expenditure).abs() <= 1e-12 * total.abs().max(1e-30));
}
