//! Two-way exchange over a line of `L` half-duplex relays.
//!
//! Nodes are numbered `0 = A`, `1..=L` relays, `L+1 = B`. Node `i` transmits
//! in slot `s` (1-based) iff `i + s` is odd and listens otherwise, so
//! neighbours always alternate. A listening relay replaces its state with
//! the modulo sum of what its transmitting neighbours send; an endpoint
//! sends a fresh packet each time it transmits and, when listening, decodes
//! the single unknown packet in what it hears.
//!
//! Packet `xs,k` is the `k`-th packet of side `s` (1 = A, 2 = B).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::lattice::{Dither, NestedLatticePair};
use crate::rates::rate_lattice;
use crate::sim::{derive_seed, tag, AwgnChannel, Experiment, Outcome, SimRng};
use crate::twoway::{encode_node, relay_decode_sum_with_gain, ChannelParams};

const TABLE1: &str = include_str!("../fixtures/table1.json");

pub const MAX_RELAYS: usize = 64;
pub const MAX_PACKETS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PacketId {
    pub seq: u32,
    pub side: u8,
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{},{}", self.side, self.seq)
    }
}

/// Integer combination of packets, ordered by sequence number then side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Combination(BTreeMap<PacketId, i128>);

impl Combination {
    pub fn single(p: PacketId) -> Self {
        Combination(BTreeMap::from([(p, 1)]))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (PacketId, i128)> + '_ {
        self.0.iter().map(|(&p, &c)| (p, c))
    }

    pub fn coefficient(&self, p: PacketId) -> i128 {
        self.0.get(&p).copied().unwrap_or(0)
    }

    pub fn max_abs_coefficient(&self) -> u128 {
        self.0.values().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    fn add_assign(&mut self, other: &Combination) -> Result<()> {
        for (&p, &c) in &other.0 {
            let e = self.0.entry(p).or_insert(0);
            *e = e.checked_add(c).ok_or(Error::GuardExceeded {
                what: "coefficient",
                value: u128::MAX,
                limit: i128::MAX as u128,
            })?;
            if *e == 0 {
                self.0.remove(&p);
            }
        }
        Ok(())
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        for (i, (p, c)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match c {
                1 => write!(f, "{p}")?,
                c => write!(f, "{c}{p}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Combination {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(p, c)| (p.to_string(), c.to_string())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeEvent {
    pub slot: usize,
    pub node: Endpoint,
    pub packet: PacketId,
    /// Coefficient of the unknown packet in the received combination.
    pub coefficient: i128,
    /// Known part subtracted before solving.
    pub known: Combination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub transmitters: Vec<usize>,
    pub listeners: Vec<usize>,
    /// Packet sent by A and B this slot, if any.
    pub endpoint_sent: [Option<PacketId>; 2],
    /// Relay states after the slot, index `i` is relay `i+1`.
    pub relay_states: Vec<Combination>,
    pub decodes: Vec<DecodeEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HopSchedule {
    pub relays: usize,
    pub packets: usize,
    pub slots: Vec<SlotRecord>,
}

fn transmits(node: usize, slot: usize) -> bool {
    (node + slot) % 2 == 1
}

/// Symbolic execution until both endpoints hold all `packets` packets of
/// the other side.
pub fn build_schedule(relays: usize, packets: usize) -> Result<HopSchedule> {
    if !(1..=MAX_RELAYS).contains(&relays) {
        return Err(invalid("L", format!("{relays} not in 1..={MAX_RELAYS}")));
    }
    if !(1..=MAX_PACKETS).contains(&packets) {
        return Err(invalid(
            "packets",
            format!("{packets} not in 1..={MAX_PACKETS}"),
        ));
    }
    let last = relays + 1;
    let mut states = vec![Combination::default(); relays + 2];
    let mut known: [BTreeSet<PacketId>; 2] = Default::default();
    let mut sent_count = [0usize; 2];
    let mut decoded = [0usize; 2];
    let mut slots = Vec::new();
    let cap = 4 * (packets + relays) + 8;

    for slot in 1..=cap {
        if decoded == [packets, packets] {
            break;
        }
        let transmitters: Vec<usize> = (0..=last).filter(|&i| transmits(i, slot)).collect();
        let listeners: Vec<usize> = (0..=last).filter(|&i| !transmits(i, slot)).collect();
        let mut endpoint_sent = [None, None];
        for (e, node) in [(0, 0), (1, last)] {
            if transmits(node, slot) {
                states[node] = Combination::default();
                if sent_count[e] < packets {
                    sent_count[e] += 1;
                    let p = PacketId {
                        seq: sent_count[e] as u32,
                        side: e as u8 + 1,
                    };
                    known[e].insert(p);
                    states[node] = Combination::single(p);
                    endpoint_sent[e] = Some(p);
                }
            }
        }
        let sent = states.clone();
        let mut decodes = Vec::new();
        for &i in &listeners {
            let mut heard = Combination::default();
            for j in [i.wrapping_sub(1), i + 1] {
                if j <= last && transmits(j, slot) {
                    heard.add_assign(&sent[j])?;
                }
            }
            if i == 0 || i == last {
                let (e, node) = if i == 0 {
                    (0, Endpoint::A)
                } else {
                    (1, Endpoint::B)
                };
                let unknown: Vec<PacketId> = heard
                    .0
                    .keys()
                    .filter(|p| !known[e].contains(p))
                    .copied()
                    .collect();
                match unknown.as_slice() {
                    [] => {}
                    [p] => {
                        let mut k = heard.clone();
                        let coefficient = k.0.remove(p).expect("present");
                        known[e].insert(*p);
                        decoded[e] += 1;
                        decodes.push(DecodeEvent {
                            slot,
                            node,
                            packet: *p,
                            coefficient,
                            known: k,
                        });
                    }
                    _ => {
                        return Err(Error::UnsolvableDecode {
                            slot,
                            node: i,
                            reason: format!("{} unknowns in {heard}", unknown.len()),
                        })
                    }
                }
            } else {
                states[i] = heard;
            }
        }
        slots.push(SlotRecord {
            slot,
            transmitters,
            listeners,
            endpoint_sent,
            relay_states: states[1..=relays].to_vec(),
            decodes,
        });
    }
    if decoded != [packets, packets] {
        return Err(Error::NoConvergence(format!(
            "decoded {decoded:?} of {packets} packets in {cap} slots"
        )));
    }
    Ok(HopSchedule {
        relays,
        packets,
        slots,
    })
}

impl HopSchedule {
    pub fn events(&self) -> impl Iterator<Item = &DecodeEvent> {
        self.slots.iter().flat_map(|s| s.decodes.iter())
    }

    /// Largest coefficient magnitude in any relay state.
    pub fn max_coefficient(&self) -> u128 {
        self.slots
            .iter()
            .flat_map(|s| s.relay_states.iter())
            .map(Combination::max_abs_coefficient)
            .max()
            .unwrap_or(0)
    }

    /// Table cells for the first `slots` slots, one row per slot and one
    /// column per node from A to B.
    pub fn table(&self, slots: usize) -> Vec<Vec<String>> {
        let last = self.relays + 1;
        self.slots
            .iter()
            .take(slots)
            .map(|rec| {
                (0..=last)
                    .map(|i| {
                        let tx = transmits(i, rec.slot);
                        if i == 0 || i == last {
                            let e = usize::from(i != 0);
                            if tx {
                                match rec.endpoint_sent[e] {
                                    Some(p) => format!("Transmits {p}"),
                                    None => "Remains Silent".into(),
                                }
                            } else {
                                let node = if e == 0 { Endpoint::A } else { Endpoint::B };
                                match rec.decodes.iter().find(|d| d.node == node) {
                                    Some(d) => format!("Decodes {}", d.packet),
                                    None => "Remains Silent".into(),
                                }
                            }
                        } else if tx {
                            "Transmits".into()
                        } else {
                            rec.relay_states[i - 1].to_string()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

#[derive(Debug, Clone, Deserialize)]
struct GoldenTable {
    nodes: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// The 3-relay, 6-slot reference table.
pub fn golden_table1() -> Vec<Vec<String>> {
    let t: GoldenTable = serde_json::from_str(TABLE1).expect("embedded fixture parses");
    debug_assert_eq!(t.nodes.len(), 5);
    t.rows
}

/// Cells of the 3-relay schedule that differ from the reference table, as
/// `(slot, node, got, want)`.
pub fn table1_mismatches(schedule: &HopSchedule) -> Vec<(usize, usize, String, String)> {
    let want = golden_table1();
    let got = schedule.table(want.len());
    let mut out = Vec::new();
    for (s, row) in want.iter().enumerate() {
        for (n, cell) in row.iter().enumerate() {
            let g = got
                .get(s)
                .and_then(|r| r.get(n))
                .cloned()
                .unwrap_or_default();
            if &g != cell {
                out.push((s + 1, n, g, cell.clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputStats {
    pub relays: usize,
    pub first_decode_a: Option<usize>,
    pub first_decode_b: Option<usize>,
    /// Common gap between consecutive decodes at both endpoints, if every
    /// gap is the same.
    pub steady_period: Option<usize>,
    pub decodes_in_order: bool,
    pub max_coefficient: String,
}

pub fn throughput(schedule: &HopSchedule) -> ThroughputStats {
    let slots_of = |node: Endpoint| -> Vec<usize> {
        schedule
            .events()
            .filter(|e| e.node == node)
            .map(|e| e.slot)
            .collect()
    };
    let (a, b) = (slots_of(Endpoint::A), slots_of(Endpoint::B));
    let gaps: BTreeSet<usize> = a
        .windows(2)
        .chain(b.windows(2))
        .map(|w| w[1] - w[0])
        .collect();
    let in_order = [Endpoint::A, Endpoint::B].iter().all(|&n| {
        schedule
            .events()
            .filter(|e| e.node == n)
            .map(|e| e.packet.seq as usize)
            .eq(1..=schedule.packets)
    });
    ThroughputStats {
        relays: schedule.relays,
        first_decode_a: a.first().copied(),
        first_decode_b: b.first().copied(),
        steady_period: (gaps.len() == 1).then(|| *gaps.first().expect("one gap")),
        decodes_in_order: in_order,
        max_coefficient: schedule.max_coefficient().to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultihopMode {
    Symbolic,
    NumericNoiseless,
    NumericAwgn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub slot: usize,
    pub node: Endpoint,
    pub packet: PacketId,
    pub sent_index: u64,
    pub decoded_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultihopRun {
    pub mode: MultihopMode,
    pub events: Vec<DecodeEvent>,
    pub recoveries: Vec<Recovery>,
    pub hop_receptions: u64,
    pub hop_errors: u64,
    pub end_decodes: u64,
    pub end_errors: u64,
}

/// Codebook index of packet `p` in a run seeded by `seed`.
pub fn packet_index(seed: u64, p: PacketId, size: u64) -> u64 {
    SimRng::derived(seed, &[tag::MESSAGE, p.side as u64, p.seq as u64]).below(size)
}

fn reduce_coeff(c: i128, q: u32) -> i64 {
    c.rem_euclid(q as i128) as i64
}

fn combo_index(c: &Combination, seed: u64, pair: &NestedLatticePair) -> Result<u64> {
    let terms: Vec<(i64, u64)> = c
        .terms()
        .map(|(p, k)| {
            (
                reduce_coeff(k, pair.modulus()),
                packet_index(seed, p, pair.size()),
            )
        })
        .collect();
    pair.combine(&terms)
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn inverse_mod(c: i128, q: u32) -> Option<i64> {
    let q = q as i128;
    let c = c.rem_euclid(q);
    (gcd(c, q) == 1).then(|| (1..q).find(|k| (k * c) % q == 1).unwrap_or(1) as i64)
}

/// Executes a schedule. Symbolic mode only replays the decode events;
/// numeric modes send dithered lattice codewords over each hop, where every
/// listener decodes the modulo sum of its transmitting neighbours with the
/// MMSE gain `mP/(mP+σ²)` for `m` transmitters heard.
pub fn run_multihop(
    schedule: &HopSchedule,
    mode: MultihopMode,
    pair: Option<&NestedLatticePair>,
    params: &ChannelParams,
    seed: u64,
) -> Result<MultihopRun> {
    let events: Vec<DecodeEvent> = schedule.events().cloned().collect();
    let mut run = MultihopRun {
        mode,
        events,
        recoveries: Vec::new(),
        hop_receptions: 0,
        hop_errors: 0,
        end_decodes: 0,
        end_errors: 0,
    };
    if mode == MultihopMode::Symbolic {
        return Ok(run);
    }
    let pair = pair.ok_or_else(|| invalid("pair", "numeric modes need a lattice pair"))?;
    let noise_var = match mode {
        MultihopMode::NumericNoiseless => 0.0,
        _ => params.noise_var(),
    };
    let power = params.power();
    let coarse = pair.coarse();
    let last = schedule.relays + 1;
    // Current codebook index held by each node (endpoints: last packet sent).
    let mut value = vec![0u64; last + 1];

    for rec in &schedule.slots {
        let s = rec.slot as u64;
        for (e, node) in [(0usize, 0usize), (1, last)] {
            if transmits(node, rec.slot) {
                value[node] = match rec.endpoint_sent[e] {
                    Some(p) => packet_index(seed, p, pair.size()),
                    None => 0,
                };
            }
        }
        let mut dithers = vec![None; last + 1];
        let mut signals = vec![None; last + 1];
        for &j in &rec.transmitters {
            let d = Dither::sample(derive_seed(seed, &[tag::DITHER, s, j as u64]), coarse);
            signals[j] = Some(encode_node(value[j], &d, pair)?);
            dithers[j] = Some(d);
        }
        let mut next = value.clone();
        for &i in &rec.listeners {
            let nbrs: Vec<usize> = [i.wrapping_sub(1), i + 1]
                .into_iter()
                .filter(|&j| j <= last && signals[j].is_some())
                .collect();
            if nbrs.is_empty() {
                continue;
            }
            let mut y = vec![0.0; pair.dim()];
            for &j in &nbrs {
                for (a, b) in y.iter_mut().zip(signals[j].as_ref().expect("transmitter")) {
                    *a += b;
                }
            }
            let y = AwgnChannel::new(noise_var, derive_seed(seed, &[tag::NOISE, s, i as u64]))?
                .transmit(&y);
            let m = nbrs.len() as f64 * power;
            let gain = m / (m + noise_var);
            let ds: Vec<&Dither> = nbrs
                .iter()
                .map(|&j| dithers[j].as_ref().expect("dither"))
                .collect();
            let got = relay_decode_sum_with_gain(&y, &ds, gain, pair)?
                .index
                .expect("quantizer returns a codeword");
            if i == 0 || i == last {
                let node = if i == 0 { Endpoint::A } else { Endpoint::B };
                if let Some(ev) = rec.decodes.iter().find(|d| d.node == node) {
                    let inv = inverse_mod(ev.coefficient, pair.modulus()).ok_or_else(|| {
                        Error::UnsolvableDecode {
                            slot: rec.slot,
                            node: i,
                            reason: format!(
                                "coefficient {} not invertible mod {}",
                                ev.coefficient,
                                pair.modulus()
                            ),
                        }
                    })?;
                    let known = combo_index(&ev.known, seed, pair)?;
                    let decoded = pair.combine(&[(inv, got), (-inv, known)])?;
                    let sent_index = packet_index(seed, ev.packet, pair.size());
                    run.end_decodes += 1;
                    run.end_errors += u64::from(decoded != sent_index);
                    run.recoveries.push(Recovery {
                        slot: rec.slot,
                        node,
                        packet: ev.packet,
                        sent_index,
                        decoded_index: decoded,
                    });
                }
            } else {
                let expected = combo_index(&rec.relay_states[i - 1], seed, pair)?;
                run.hop_receptions += 1;
                run.hop_errors += u64::from(got != expected);
                next[i] = got;
            }
        }
        value = next;
    }
    Ok(run)
}

/// Chain replicas under AWGN. Classes: `hop` (any hop error), `end` (any
/// wrongly recovered packet). Observables: per-reception hop error rate
/// and per-packet end error rate.
pub struct MultihopExperiment {
    pub schedule: HopSchedule,
    pub pair: NestedLatticePair,
    pub params: ChannelParams,
}

impl Experiment for MultihopExperiment {
    fn error_classes(&self) -> Vec<&'static str> {
        vec!["hop", "end"]
    }

    fn observables(&self) -> Vec<&'static str> {
        vec!["hop_error_rate", "end_error_rate"]
    }

    fn trial(&self, seed: u64) -> Outcome {
        let r = run_multihop(
            &self.schedule,
            MultihopMode::NumericAwgn,
            Some(&self.pair),
            &self.params,
            seed,
        )
        .expect("validated run");
        let mut o = Outcome::flags(&[r.hop_errors > 0, r.end_errors > 0]);
        o.values = vec![
            r.hop_errors as f64 / r.hop_receptions.max(1) as f64,
            r.end_errors as f64 / r.end_decodes.max(1) as f64,
        ];
        o
    }
}

/// End-to-end SNR of `L` cascaded amplify-and-forward relays, each scaling
/// its input by `g = √(P/(2P+σ²))`: after `L` stages the signal power is
/// `g^{2L}P` and the accumulated noise `σ²·Σᵢ g^{2i}`, plus fresh noise at
/// the receiver. Uses `P = 1`.
pub fn anc_multihop_snr(relays: usize, snr: f64) -> Result<f64> {
    if relays == 0 {
        return Err(invalid("L", "must be >= 1"));
    }
    if snr.is_nan() || snr < 0.0 {
        return Err(invalid("snr", format!("{snr} must be >= 0")));
    }
    if snr == 0.0 {
        return Ok(0.0);
    }
    let sigma2 = 1.0 / snr;
    let g2 = 1.0 / (2.0 + sigma2);
    let signal = g2.powi(relays as i32);
    let noise: f64 = (1..=relays as i32).map(|i| g2.powi(i)).sum::<f64>() * sigma2;
    Ok(signal / (noise + sigma2))
}

/// `½log₂(1 + snr_eff)` for the cascaded amplify-and-forward chain.
pub fn anc_multihop_baseline(relays: usize, snr: f64) -> Result<f64> {
    Ok(0.5 * anc_multihop_snr(relays, snr)?.log2_1p())
}

/// Lattice multihop rate, independent of the number of relays.
pub fn lattice_multihop_rate(snr: f64) -> Result<f64> {
    rate_lattice(snr)
}

trait Log2P1 {
    fn log2_1p(self) -> f64;
}

impl Log2P1 for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}
