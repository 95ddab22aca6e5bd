use proptest::prelude::*;
use vesonet::audit;
use vesonet::road_net::GridSpec;
use vesonet::sim::*;

fn small(consumers: u32, providers: u32, seed: u64) -> Scenario {
    let mut sc = Scenario {
        network: NetworkSource::Grid(GridSpec {
            rows: 3,
            cols: 3,
            ..Default::default()
        }),
        vehicles: VehicleCounts { consumers, providers },
        run_length: 150,
        request_rate: 0.05,
        rng_seed: seed,
        ..Default::default()
    };
    let net = sc.build_network().unwrap();
    sc.rsus = Scenario::spread_rsus(&net, 1);
    sc
}

fn text(events: &[Event]) -> String {
    let mut buf = Vec::new();
    write_events(events, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn audited(out: &RunOutput) -> audit::AuditReport {
    let report = audit::audit_rows(&audit::parse_log(&text(&out.events)).unwrap());
    let runner = audit::parse_metrics_csv(&out.metrics.to_csv()).unwrap();
    assert_eq!(audit::compare(&report.metrics, &runner), Vec::<String>::new());
    report
}

#[test]
fn same_seed_same_log() {
    let sc = small(10, 5, 3);
    let a = run_scenario(&sc).unwrap();
    let b = run_scenario(&sc).unwrap();
    assert_eq!(text(&a.events), text(&b.events));
    let mut other = sc.clone();
    other.rng_seed = 4;
    assert_ne!(text(&a.events), text(&run_scenario(&other).unwrap().events));
}

#[test]
fn zero_consumers_has_no_delivery_data() {
    let out = run_scenario(&small(0, 5, 1)).unwrap();
    let m = &out.metrics;
    assert_eq!((m.requests, m.delivered), (0, 0));
    assert_eq!(m.mean_delay_s, None);
    assert_eq!(m.delivery_rate, None);
    assert_eq!((m.cost_index, m.cost_similarity), (0, 0));
    assert!(m.to_csv().contains("delivery_rate,NA\n"));
    assert!(audited(&out).ok());
}

#[test]
fn no_requests_no_lookups() {
    let mut sc = small(8, 4, 2);
    sc.request_rate = 0.0;
    let out = run_scenario(&sc).unwrap();
    assert_eq!(out.metrics.requests, 0);
    assert_eq!(out.metrics.cost_index, 0);
    assert!(out.metrics.trips > 0);
}

#[test]
fn validation_names_every_bad_field() {
    let mut sc = small(5, 5, 1);
    sc.epsilon_s = -1.0;
    sc.rsus.push(RsuPlacement {
        segment: 9999,
        offset_m: 0.0,
    });
    sc.tick_duration_s = 0.0;
    let errs = sc.validate();
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(errs[0].starts_with("epsilon_s"));
    assert!(errs.iter().any(|e| e.starts_with("rsus[1].segment")));
    assert!(matches!(run_scenario(&sc), Err(SimError::Invalid(v)) if v.len() == 3));
}

#[test]
fn scenario_json_round_trips_and_reports_position() {
    let sc = small(5, 5, 1);
    assert_eq!(Scenario::from_json(&sc.to_json()).unwrap(), sc);
    let err = Scenario::from_json("{\n  \"epsilon_s\": 1,\n  \"bogus\": 2\n}").unwrap_err();
    assert_eq!(err.line, 3);
    assert!(err.message.contains("bogus"));
}

#[test]
fn sweep_emits_one_row_per_value_policy_metric() {
    let sc = small(6, 3, 1);
    let spec = SweepSpec {
        axis: SweepAxis::Velocity,
        values: vec![5.0, 15.0],
        policies: vec![Policy::Vesonet, Policy::BaselineNoReroute],
        replicates: 1,
        jobs: 1,
        keep_events: false,
    };
    let (rows, runs) = run_sweep(&sc, &spec).unwrap();
    assert_eq!(runs.len(), 4);
    let metrics = MetricsReport::default().rows().len();
    assert_eq!(rows.len(), 4 * metrics);
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv.starts_with("axis,value,policy,metric,metric_value\n"));
    assert!(csv.contains("velocity,15,baseline_no_reroute,delivery_rate,"));
}

#[test]
fn accidents_halt_segment_and_vesonet_stays_in_budget() {
    let mut sc = small(12, 6, 5);
    let net = sc.build_network().unwrap();
    sc.accidents = sc.random_accidents(&net, 3);
    let out = run_scenario(&sc).unwrap();
    let report = audited(&out);
    assert!(report.ok(), "{:?}", report.violations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn audit_agrees_with_runner(seed in 0u64..1000, consumers in 0u32..12, providers in 0u32..6, baseline: bool) {
        let mut sc = small(consumers, providers, seed);
        if baseline {
            sc.policy = Policy::BaselineNoReroute;
        }
        let out = run_scenario(&sc).unwrap();
        let report = audited(&out);
        prop_assert!(report.ok(), "{:?}", report.violations);
        let m = &out.metrics;
        prop_assert_eq!(m.requests, m.delivered + m.failed);
        prop_assert_eq!(m.delivered, m.delivered_v2v + m.delivered_rsu);
        if let Some(r) = m.delivery_rate {
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert_eq!(r, m.delivered as f64 / m.requests as f64);
        }
    }
}
