use twinrelay::multihop::*;
use twinrelay::rates::{db_to_linear, rate_lattice};
use twinrelay::sim::{run_trials, TrialPlan};
use twinrelay::{ChannelParams, LinearCode, NestedLatticePair};

#[test]
fn table_reproduced_cell_for_cell() {
    let s = build_schedule(3, 6).unwrap();
    let table = s.table(6);
    assert_eq!(table, golden_table1());
    assert_eq!(table.iter().map(Vec::len).sum::<usize>(), 30);
}

#[test]
fn one_packet_per_two_slots_for_all_lengths() {
    for l in 1..=6 {
        let t = throughput(&build_schedule(l, 12).unwrap());
        assert_eq!(t.steady_period, Some(2), "L={l}");
        assert!(t.decodes_in_order);
        // Derived from symbolic execution: the first packet reaches the far
        // end after L+1 slots; A only listens in even slots.
        assert_eq!(t.first_decode_b, Some(l + 1));
        assert_eq!(t.first_decode_a, Some(l + 1 + (l + 1) % 2));
    }
}

#[test]
fn coefficients_grow_but_stay_finite() {
    let s = build_schedule(3, 6).unwrap();
    let first_six = s.slots[..6]
        .iter()
        .flat_map(|r| r.relay_states.iter())
        .map(|c| c.max_abs_coefficient())
        .max();
    assert_eq!(first_six, Some(4));
    assert!(s.max_coefficient() > 4);
    let big = build_schedule(6, 30).unwrap();
    assert!(big.max_coefficient() > 1000);
}

#[test]
fn schedule_json_has_ledgers() {
    let s = build_schedule(2, 2).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
    assert_eq!(v["relays"], 2);
    assert_eq!(v["slots"][0]["transmitters"], serde_json::json!([0, 2]));
    assert_eq!(v["slots"][0]["relay_states"][0]["x1,1"], "1");
}

#[test]
fn two_relays_noiseless_numeric() {
    let pair = NestedLatticePair::new(LinearCode::identity(8, 2).unwrap(), 1.0).unwrap();
    let s = build_schedule(2, 10).unwrap();
    let r = run_multihop(
        &s,
        MultihopMode::NumericNoiseless,
        Some(&pair),
        &ChannelParams::noiseless(1.0).unwrap(),
        3,
    )
    .unwrap();
    assert_eq!((r.end_errors, r.end_decodes), (0, 20));
}

#[test]
fn longer_chains_do_not_reduce_errors() {
    let pair = NestedLatticePair::new(LinearCode::identity(4, 1).unwrap(), 1.0).unwrap();
    let params = ChannelParams::from_snr_db(14.0, 1.0).unwrap();
    let rate = |l| {
        let exp = MultihopExperiment {
            schedule: build_schedule(l, 4).unwrap(),
            pair: pair.clone(),
            params,
        };
        run_trials(&exp, &TrialPlan::fixed(4000, 12, 4)).unwrap()
    };
    let (one, three) = (rate(1), rate(3));
    let (e1, e3) = (one.class("end").unwrap(), three.class("end").unwrap());
    assert!(e3.ci_high >= e1.ci_low);
    assert!(e3.estimate > e1.estimate);
}

#[test]
fn lattice_beats_cascaded_amplify_forward() {
    let snr = db_to_linear(20.0);
    let mut prev_gap = 0.0;
    for l in 1..=6 {
        let gap = lattice_multihop_rate(snr).unwrap() - anc_multihop_baseline(l, snr).unwrap();
        assert!(gap > prev_gap, "L={l}");
        prev_gap = gap;
    }
    assert_eq!(
        lattice_multihop_rate(snr).unwrap(),
        rate_lattice(snr).unwrap()
    );
}
