//! XOR relaying over binary symmetric channels with a shared linear code.
//!
//! Both nodes use the same binary linear code, so `x₁ ⊕ x₂` is itself a
//! codeword and the relay can decode it directly from `x₁ ⊕ x₂ ⊕ e`. Each
//! end node decodes the relayed codeword and XORs out its own message.
//! Words are stored as bitmasks, bit `i` = position `i`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::{derive_seed, tag, BscChannel, Experiment, Outcome, SimRng};

/// Largest message length for brute-force ML decoding.
pub const MAX_K: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryLinearCode {
    n: usize,
    generator: Vec<u64>,
    parity_check: Option<Vec<u64>>,
    #[serde(skip)]
    codewords: Vec<u64>,
}

fn gf2_rank(rows: &[u64]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in 0..64 {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i] >> bit & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank];
        for (i, r) in rows.iter_mut().enumerate() {
            if i != rank && *r >> bit & 1 == 1 {
                *r ^= pivot;
            }
        }
        rank += 1;
    }
    rank
}

impl BinaryLinearCode {
    pub fn new(n: usize, generator: Vec<u64>) -> Result<Self> {
        if n == 0 || n > 64 {
            return Err(invalid("n", format!("{n} not in 1..=64")));
        }
        let k = generator.len();
        if k > MAX_K {
            return Err(Error::GuardExceeded {
                what: "k",
                value: k as u128,
                limit: MAX_K as u128,
            });
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        if generator.iter().any(|&r| r & !mask != 0) {
            return Err(invalid("generator", format!("row wider than n = {n}")));
        }
        let rank = gf2_rank(&generator);
        if rank != k {
            return Err(Error::RankDeficient {
                expected: k,
                found: 1u64 << rank,
            });
        }
        let codewords = (0..1u64 << k).map(|m| encode_rows(&generator, m)).collect();
        Ok(BinaryLinearCode {
            n,
            generator,
            parity_check: None,
            codewords,
        })
    }

    /// The [7,4] Hamming code, `G = [I₄ | P]`.
    pub fn hamming74() -> Self {
        let g = [
            [1, 0, 0, 0, 1, 1, 0],
            [0, 1, 0, 0, 0, 1, 1],
            [0, 0, 1, 0, 1, 1, 1],
            [0, 0, 0, 1, 1, 0, 1],
        ];
        let h = [
            [1, 0, 1, 1, 1, 0, 0],
            [1, 1, 1, 0, 0, 1, 0],
            [0, 1, 1, 1, 0, 0, 1],
        ];
        let pack = |row: &[u8; 7]| {
            row.iter()
                .enumerate()
                .fold(0u64, |m, (i, &b)| m | (b as u64) << i)
        };
        let mut code =
            Self::new(7, g.iter().map(pack).collect()).expect("Hamming generator has rank 4");
        code.parity_check = Some(h.iter().map(pack).collect());
        code
    }

    /// Uniformly random full-rank `k × n` generator.
    pub fn random(k: usize, n: usize, rng: &mut SimRng) -> Result<Self> {
        if k > n {
            return Err(invalid("k", format!("{k} > n = {n}")));
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        loop {
            let rows: Vec<u64> = (0..k).map(|_| rng.next_u64_masked(mask)).collect();
            if gf2_rank(&rows) == k {
                return Self::new(n, rows);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.generator.len()
    }

    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    pub fn parity_check(&self) -> Option<&[u64]> {
        self.parity_check.as_deref()
    }

    pub fn codewords(&self) -> &[u64] {
        &self.codewords
    }

    pub fn encode(&self, message: u64) -> Result<u64> {
        self.check_message(message)?;
        Ok(self.codewords[message as usize])
    }

    fn check_message(&self, message: u64) -> Result<()> {
        if message >> self.k() != 0 {
            return Err(Error::IndexOutOfRange {
                index: message,
                size: 1 << self.k(),
            });
        }
        Ok(())
    }

    /// Minimum-Hamming-distance (ML for p < ½) decoding by exhaustive search;
    /// ties go to the lowest message. Returns `(message, codeword)`.
    pub fn ml_decode(&self, word: u64) -> (u64, u64) {
        let mut best = (u32::MAX, 0u64);
        for (m, &c) in self.codewords.iter().enumerate() {
            let d = (c ^ word).count_ones();
            if d < best.0 {
                best = (d, m as u64);
            }
        }
        (best.1, self.codewords[best.1 as usize])
    }
}

fn encode_rows(rows: &[u64], message: u64) -> u64 {
    rows.iter()
        .enumerate()
        .filter(|(i, _)| message >> i & 1 == 1)
        .fold(0, |acc, (_, &r)| acc ^ r)
}

impl SimRng {
    fn next_u64_masked(&mut self, mask: u64) -> u64 {
        rand::RngCore::next_u64(self) & mask
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscParams {
    crossover: f64,
}

impl BscParams {
    pub fn new(crossover: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&crossover) {
            return Err(invalid("crossover", format!("{crossover} not in [0, 1/2)")));
        }
        Ok(BscParams { crossover })
    }

    pub fn crossover(&self) -> f64 {
        self.crossover
    }
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// `1 − H₂(p)`.
pub fn bsc_exchange_rate_bound(params: &BscParams) -> f64 {
    1.0 - binary_entropy(params.crossover)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BscOutcome {
    pub relay_decoded: u64,
    pub relay_ok: bool,
    pub u_b_at_a: u64,
    pub u_a_at_b: u64,
    pub a_ok: bool,
    pub b_ok: bool,
}

impl BscOutcome {
    pub fn end_ok(&self) -> bool {
        self.a_ok && self.b_ok
    }
}

/// One XOR-relay exchange. Noise seeds: relay uplink `[NOISE, 0]`, downlink
/// to A `[NOISE, 1]`, downlink to B `[NOISE, 2]`.
pub fn bsc_relay_roundtrip(
    u_a: u64,
    u_b: u64,
    code: &BinaryLinearCode,
    params: &BscParams,
    seed: u64,
) -> Result<BscOutcome> {
    let x1 = code.encode(u_a)?;
    let x2 = code.encode(u_b)?;
    let n = code.n();
    let p = params.crossover();
    let y_r = BscChannel::new(p, derive_seed(seed, &[tag::NOISE, 0]))?.transmit(x1 ^ x2, n);
    let (_, relay_word) = code.ml_decode(y_r);
    let down = |node: u64| -> Result<u64> {
        let y = BscChannel::new(p, derive_seed(seed, &[tag::NOISE, node]))?.transmit(relay_word, n);
        Ok(code.ml_decode(y).0)
    };
    let u_b_at_a = down(1)? ^ u_a;
    let u_a_at_b = down(2)? ^ u_b;
    Ok(BscOutcome {
        relay_decoded: relay_word,
        relay_ok: relay_word == x1 ^ x2,
        u_b_at_a,
        u_a_at_b,
        a_ok: u_b_at_a == u_b,
        b_ok: u_a_at_b == u_a,
    })
}

/// Classes: `relay`, `end`, `union`.
#[derive(Debug, Clone)]
pub struct BscExperiment {
    pub code: BinaryLinearCode,
    pub params: BscParams,
}

impl Experiment for BscExperiment {
    fn error_classes(&self) -> Vec<&'static str> {
        vec!["relay", "end", "union"]
    }

    fn trial(&self, seed: u64) -> Outcome {
        let mut rng = SimRng::derived(seed, &[tag::MESSAGE]);
        let m = 1u64 << self.code.k();
        let (u_a, u_b) = (rng.below(m), rng.below(m));
        let o = bsc_relay_roundtrip(u_a, u_b, &self.code, &self.params, seed)
            .expect("messages drawn in range");
        Outcome::flags(&[!o.relay_ok, !o.end_ok(), !o.relay_ok || !o.end_ok()])
    }
}

/// Number of distinct `c₁ ⊕ c₂` over all pairs of words in `book`.
pub fn xor_sum_set_size(book: &[u64]) -> usize {
    let mut set = HashSet::new();
    for &a in book {
        for &b in book {
            set.insert(a ^ b);
        }
    }
    set.len()
}
