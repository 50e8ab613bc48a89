mod common;

use ami_core::feeder::{build_feeder, FeederConfig, LoadModel};
use ami_core::privacy::reconstruction_ambiguity;
use ami_core::scenario::{Assignment, FeederSpec};
use ami_core::{canonical_scenarios, GridSimulation, OperatingStateReport, Scenario};

fn flat_neighborhood(houses: usize) -> Scenario {
    let mut sc = canonical_scenarios()["fig3_flat"].clone();
    let base = sc.feeders[0].clone();
    sc.feeders = vec![FeederSpec {
        config: FeederConfig {
            house_count: houses,
            ..base.config
        },
        load: LoadModel::Fixed { watts: 10_000.0 },
        assignments: vec![Assignment {
            aggregator: "A1".into(),
            first_house: 1,
            last_house: houses,
        }],
        ..base
    }];
    sc
}

fn last_report(sc: &Scenario) -> OperatingStateReport {
    let mut sim = GridSimulation::new(sc).unwrap();
    sim.run().unwrap();
    sim.reports().pop().unwrap()
}

#[test]
fn golden_flat_count() {
    let golden = common::golden(include_str!("golden/ambiguity.txt"));
    let sc = canonical_scenarios()["fig3_flat"].clone();
    let report = last_report(&sc);
    let topo = sc.feeders[0].topology();
    let trials: usize = golden["trials"].parse().unwrap();
    let r = reconstruction_ambiguity(&report, &topo, trials, 1).unwrap();
    assert_eq!(r.indistinguishable_count.to_string(), golden["observed"]);
    assert!(!r.low_dimension);
}

#[test]
fn ambiguity_grows_with_group_size() {
    let mut counts = Vec::new();
    for n in [3, 10, 100] {
        let sc = flat_neighborhood(n);
        let topo = build_feeder(sc.feeders[0].config).unwrap();
        let r = reconstruction_ambiguity(&last_report(&sc), &topo, 300, 9).unwrap();
        assert_eq!(r.low_dimension, n <= 4);
        counts.push(r.indistinguishable_count);
    }
    assert_eq!(counts[0], 0);
    assert!(counts[0] <= counts[1] && counts[1] <= counts[2], "{counts:?}");
}

#[test]
fn random_loads_are_ambiguous_too() {
    let sc = canonical_scenarios()["fig3_random"].clone();
    let r = reconstruction_ambiguity(&last_report(&sc), &sc.feeders[0].topology(), 500, 3).unwrap();
    assert!(r.indistinguishable_count >= 450, "{}", r.indistinguishable_count);
}

#[test]
fn seeds_replay() {
    let sc = canonical_scenarios()["fig3_random"].clone();
    let report = last_report(&sc);
    let topo = sc.feeders[0].topology();
    let a = reconstruction_ambiguity(&report, &topo, 100, 4).unwrap();
    let b = reconstruction_ambiguity(&report, &topo, 100, 4).unwrap();
    assert_eq!(a, b);
}
