//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

mod common;

use std::time::Instant;

use common::reference as r;
use twinrelay::bsc::{bsc_relay_roundtrip, BinaryLinearCode, BscExperiment, BscParams};
use twinrelay::minangle::{concentration_experiment, min_angle_error_rate, MinAngleConfig};
use twinrelay::multihop::{build_schedule, table1_mismatches, throughput};
use twinrelay::rates::*;
use twinrelay::sim::{run_trials, TrialPlan};
use twinrelay::twoway::{run_session, BroadcastMode, ChannelParams, SessionExperiment};
use twinrelay::{LinearCode, NestedLatticePair};

struct Check {
    pass: bool,
    detail: String,
    /// Serialized reports, compared across worker counts.
    json: String,
}

fn report(id: u32, name: &str, start: Instant, c: &Check) -> bool {
    println!(
        "criterion {id:>2} {name:<34} {}  {} [{:.1}s]",
        if c.pass { "PASS" } else { "FAIL" },
        c.detail,
        start.elapsed().as_secs_f64()
    );
    c.pass
}

fn c1() -> Check {
    let cases = [
        ("upper", rate_upper(10.0).unwrap(), r::UPPER_10),
        ("lattice", rate_lattice(10.0).unwrap(), r::LATTICE_10),
        ("jd", rate_joint_decoding(10.0).unwrap(), r::JD_10),
        ("anc", rate_anc(10.0).unwrap(), r::ANC_10),
    ];
    let worst = cases.iter().map(|c| (c.1 - c.2).abs()).fold(0.0, f64::max);
    Check {
        pass: worst < 1e-9,
        detail: format!(
            "{} max |err| {worst:.1e}",
            cases
                .iter()
                .map(|c| format!("{}={:.9}", c.0, c.1))
                .collect::<Vec<_>>()
                .join(" ")
        ),
        json: String::new(),
    }
}

fn c2() -> Check {
    let (lo, hi) = crossover_window().unwrap();
    Check {
        pass: (lo + 0.659).abs() <= 0.01 && (hi - 3.46).abs() <= 0.01,
        detail: format!("window ({lo:.4}, {hi:.4}) dB"),
        json: String::new(),
    }
}

fn c3() -> Check {
    let grid = GridSpec::new(-20.0, 40.0, 0.05).unwrap();
    let mut worst = f64::INFINITY;
    for db in grid.points() {
        let p = RatePoint::at_db(db).unwrap();
        worst = worst.min(p.envelope - p.anc);
    }
    Check {
        pass: worst >= 0.0,
        detail: format!("{} points, min(envelope - anc) = {worst:.3e}", grid.len()),
        json: String::new(),
    }
}

fn c4() -> Check {
    let mut cases = 0;
    let mut bad = Vec::new();
    for q in [2u32, 3, 5, 7] {
        for k in 1..=2usize {
            for n in 1..=3usize {
                if k > n || (q as u64).pow(k as u32) > 1 << 10 {
                    continue;
                }
                cases += 1;
                let p =
                    NestedLatticePair::new(LinearCode::systematic(q, k, n).unwrap(), 1.0).unwrap();
                let size = p.size();
                let mut counts = vec![0u64; size as usize];
                for a in 0..size {
                    let ta = p.encode(a).unwrap();
                    for b in 0..size {
                        let s = p.modulo_sum(&ta, &p.encode(b).unwrap()).unwrap();
                        counts[s.index.unwrap() as usize] += 1;
                    }
                }
                if counts.iter().any(|&c| c != size) {
                    bad.push((q, k, n));
                }
            }
        }
    }
    Check {
        pass: bad.is_empty(),
        detail: format!("{cases} (q,k,n) cases, non-uniform: {bad:?}"),
        json: String::new(),
    }
}

fn c5(workers: usize) -> Check {
    let params = ChannelParams::noiseless(1.0).unwrap();
    let mut exhaustive = Vec::new();
    for k in [1, 2] {
        let p = NestedLatticePair::new(LinearCode::systematic(5, k, 2).unwrap(), 1.0).unwrap();
        let mut errors = 0;
        for a in 0..p.size() {
            for b in 0..p.size() {
                let t = run_session(
                    a,
                    b,
                    &params,
                    &p,
                    BroadcastMode::DirectLatticeRelay,
                    a * 1000 + b,
                )
                .unwrap();
                errors += u64::from(t.any_error());
            }
        }
        exhaustive.push((p.size() * p.size(), errors));
    }
    let exp = SessionExperiment {
        pair: NestedLatticePair::new(LinearCode::systematic(16, 2, 4).unwrap(), 1.0).unwrap(),
        params,
        mode: BroadcastMode::DirectLatticeRelay,
    };
    let rep = run_trials(&exp, &TrialPlan::fixed(1000, 5, workers)).unwrap();
    let random_errors = rep.class("union").unwrap().errors;
    Check {
        pass: exhaustive.iter().all(|e| e.1 == 0) && random_errors == 0,
        detail: format!(
            "q=5 n=2: k=1 {} pairs, k=2 {} pairs, errors {:?}; q=16 k=2 n=4: 1000 random pairs, {random_errors} errors",
            exhaustive[0].0,
            exhaustive[1].0,
            exhaustive.iter().map(|e| e.1).collect::<Vec<_>>()
        ),
        json: format!("{:?}{}", exhaustive, serde_json::to_string(&rep).unwrap()),
    }
}

fn c6(workers: usize) -> Check {
    let pair = NestedLatticePair::new(LinearCode::identity(4, 1).unwrap(), 1.0).unwrap();
    let n = 100_000;
    let mut pass = true;
    let mut parts = Vec::new();
    let mut json = String::new();
    for (i, db) in [12.0, 16.0, 20.0].into_iter().enumerate() {
        let params = ChannelParams::from_snr_db(db, 1.0).unwrap();
        let exp = SessionExperiment {
            pair: pair.clone(),
            params,
            mode: BroadcastMode::DirectLatticeRelay,
        };
        let rep = run_trials(&exp, &TrialPlan::fixed(n, 600 + i as u64, workers)).unwrap();
        let got = rep.class("relay").unwrap().estimate;
        let oracle = common::wrapped_relay_ser(4, 1.0, params.noise_var());
        let band = common::sigma_band(oracle, n, 3.0);
        pass &= (got - oracle).abs() <= band;
        parts.push(format!("{db}dB {got:.3e}/{oracle:.3e}±{band:.1e}"));
        json += &serde_json::to_string(&rep).unwrap();
    }
    Check {
        pass,
        detail: format!("MC/oracle: {}", parts.join(", ")),
        json,
    }
}

fn extended_hamming() -> LinearCode {
    let g = vec![
        vec![1, 0, 0, 0, 0, 1, 1, 1],
        vec![0, 1, 0, 0, 1, 0, 1, 1],
        vec![0, 0, 1, 0, 1, 1, 0, 1],
        vec![0, 0, 0, 1, 1, 1, 1, 0],
    ];
    LinearCode::new(2, 8, g).unwrap()
}

fn c7(workers: usize) -> Check {
    let params = ChannelParams::from_snr_db(10.0, 1.0).unwrap();
    let low = [
        (2, LinearCode::new(2, 2, vec![vec![1, 1]]).unwrap()),
        (4, LinearCode::new(4, 4, vec![vec![1, 1, 2, 2]]).unwrap()),
        (8, extended_hamming()),
    ];
    let run = |code: LinearCode, trials: u64, seed: u64| {
        let pair = NestedLatticePair::new(code, 1.0).unwrap();
        let exp = SessionExperiment {
            pair,
            params,
            mode: BroadcastMode::DirectLatticeRelay,
        };
        run_trials(&exp, &TrialPlan::fixed(trials, seed, workers)).unwrap()
    };
    let mut json = String::new();
    let mut low_stats = Vec::new();
    for (n, code) in low {
        assert!((NestedLatticePair::new(code.clone(), 1.0).unwrap().rate() - 0.5).abs() < 1e-12);
        let rep = run(code, 2_000_000, 700 + n as u64);
        low_stats.push((n, rep.class("relay").unwrap().clone()));
        json += &serde_json::to_string(&rep).unwrap();
    }
    let decreasing = low_stats.windows(2).all(|w| w[1].1.ci_high < w[0].1.ci_low);
    let mut high_stats = Vec::new();
    for n in [2usize, 4, 8] {
        let rep = run(LinearCode::identity(4, n).unwrap(), 20_000, 720 + n as u64);
        high_stats.push((n, rep.class("relay").unwrap().clone()));
        json += &serde_json::to_string(&rep).unwrap();
    }
    let bounded = high_stats.iter().all(|s| s.1.ci_low > 0.10);
    let fmt = |v: &[(usize, twinrelay::sim::ClassStats)]| {
        v.iter()
            .map(|(n, c)| {
                format!(
                    "n={n} {:.2e} [{:.2e},{:.2e}]",
                    c.estimate, c.ci_low, c.ci_high
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    };
    Check {
        pass: decreasing && bounded,
        detail: format!(
            "rate 0.5: {} (decreasing: {decreasing}); rate 2.0: {} (>10%: {bounded})",
            fmt(&low_stats),
            fmt(&high_stats)
        ),
        json,
    }
}

fn c8(workers: usize) -> Check {
    let code = BinaryLinearCode::hamming74();
    let exp = BscExperiment {
        code: code.clone(),
        params: BscParams::new(0.01).unwrap(),
    };
    let n = 100_000;
    let rep = run_trials(&exp, &TrialPlan::fixed(n, 8, workers)).unwrap();
    let got = rep.class("relay").unwrap().estimate;
    let oracle = common::hamming74_block_error(0.01);
    let band = common::sigma_band(oracle, n, 3.0);
    let p0 = BscParams::new(0.0).unwrap();
    let mut exact = true;
    for a in 0..16 {
        for b in 0..16 {
            let o = bsc_relay_roundtrip(a, b, &code, &p0, a * 16 + b).unwrap();
            exact &= o.relay_ok && o.end_ok();
        }
    }
    Check {
        pass: (got - oracle).abs() <= band && exact,
        detail: format!("block error {got:.3e} vs oracle {oracle:.3e} ± {band:.1e}; p=0 exhaustive exact: {exact}"),
        json: serde_json::to_string(&rep).unwrap(),
    }
}

fn c9() -> Check {
    let s = build_schedule(3, 6).unwrap();
    let bad = table1_mismatches(&s);
    Check {
        pass: bad.is_empty(),
        detail: format!("30 cells, {} mismatches {:?}", bad.len(), bad.first()),
        json: String::new(),
    }
}

fn c10() -> Check {
    let mut parts = Vec::new();
    let mut pass = true;
    for l in 1..=6 {
        let t = throughput(&build_schedule(l, 12).unwrap());
        pass &= t.steady_period == Some(2) && t.decodes_in_order;
        parts.push(format!(
            "L={l} first {:?}/{:?} period {:?}",
            t.first_decode_a.unwrap_or(0),
            t.first_decode_b.unwrap_or(0),
            t.steady_period
        ));
    }
    Check {
        pass,
        detail: parts.join("; "),
        json: String::new(),
    }
}

fn c11(workers: usize) -> Check {
    let a = concentration_experiment(8, 1.0, 0.1, 1_000_000, 11, workers).unwrap();
    let b = concentration_experiment(64, 1.0, 0.1, 1_000_000, 11, workers).unwrap();
    Check {
        pass: b.ci_high < a.ci_low,
        detail: format!(
            "n=8 {:.4} [{:.4},{:.4}], n=64 {:.4} [{:.4},{:.4}]",
            a.fraction, a.ci_low, a.ci_high, b.fraction, b.ci_low, b.ci_high
        ),
        json: serde_json::to_string(&(a, b)).unwrap(),
    }
}

fn c12(workers: usize) -> Check {
    let snr = db_to_linear(15.0);
    let cfg = MinAngleConfig::new(3, 2.0, 2.0 / snr);
    let rep = min_angle_error_rate(&cfg, &TrialPlan::fixed(20_000, 12, workers)).unwrap();
    let ml = rep.ml_error_rate;
    let band = common::sigma_band(ml.max(1.0 / rep.trials as f64), rep.trials, 3.0);
    let quiet = min_angle_error_rate(
        &MinAngleConfig::new(3, 2.0, 0.0),
        &TrialPlan::fixed(10_000, 13, workers),
    )
    .unwrap();
    let noiseless_ok = quiet.on_shell_errors == 0 && quiet.ml_errors == 0;
    Check {
        pass: rep.error_rate >= ml - band && noiseless_ok,
        detail: format!(
            "min-angle {:.4} vs ML {:.4} (-3σ {:.4}); noiseless on-shell errors {} of {} on-shell trials",
            rep.error_rate,
            ml,
            ml - band,
            quiet.on_shell_errors,
            quiet.trials - quiet.off_shell_trials
        ),
        json: serde_json::to_string(&(rep, quiet)).unwrap(),
    }
}

fn main() {
    let mut all = true;
    let mut stochastic: Vec<(u32, String)> = Vec::new();
    macro_rules! run {
        ($id:expr, $name:expr, $f:expr) => {{
            let t = Instant::now();
            let c = $f;
            all &= report($id, $name, t, &c);
            c
        }};
    }
    run!(1, "closed-form rates", c1());
    run!(2, "crossover window", c2());
    run!(3, "envelope dominates ANC", c3());
    run!(4, "modulo-sum uniformity", c4());
    stochastic.push((5, run!(5, "noiseless end-to-end", c5(8)).json));
    stochastic.push((6, run!(6, "relay error vs oracle", c6(8)).json));
    stochastic.push((7, run!(7, "threshold direction", c7(8)).json));
    stochastic.push((8, run!(8, "BSC XOR relay", c8(8)).json));
    run!(9, "three-relay schedule table", c9());
    run!(10, "multihop throughput", c10());
    stochastic.push((11, run!(11, "shell concentration", c11(8)).json));
    stochastic.push((12, run!(12, "min-angle vs ML", c12(8)).json));

    let t = Instant::now();
    let mut differ = Vec::new();
    for (id, eight) in &stochastic {
        let one = match id {
            5 => c5(1),
            6 => c6(1),
            7 => c7(1),
            8 => c8(1),
            11 => c11(1),
            _ => c12(1),
        }
        .json;
        if &one != eight {
            differ.push(*id);
        }
    }
    let c13 = Check {
        pass: differ.is_empty(),
        detail: format!("criteria 5-8, 11-12 rerun on 1 vs 8 workers; differing: {differ:?}"),
        json: String::new(),
    };
    all &= report(13, "determinism across workers", t, &c13);

    println!("acceptance: {}", if all { "ALL PASS" } else { "FAILURES" });
    if !all {
        std::process::exit(1);
    }
}
