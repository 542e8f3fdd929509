//! Two-way relaying with nested lattice codes.
//!
//! MAC phase: node A sends `x₁ = (t₁ − d₁) mod Λc`, node B sends
//! `x₂ = (t₂ − d₂) mod Λc`, and the relay hears `y = x₁ + x₂ + z`. The relay
//! forms `(α·y + d₁ + d₂) mod Λc` with the MMSE gain `α = 2P/(2P + σ²)` and
//! quantizes it to the fine lattice, which yields `(t₁ + t₂) mod Λc` without
//! learning either message. Broadcast phase: each end node obtains the sum
//! and subtracts its own codeword.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{Dither, LatticePoint, NestedLatticePair};
use crate::sim::{derive_seed, tag, AwgnChannel, Experiment, Outcome, SimRng, TrialReport};

/// Transmit power and noise variance, both per dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    power: f64,
    noise_var: f64,
}

impl ChannelParams {
    /// `noise_var = 0` is accepted and models a noiseless channel, where the
    /// MMSE gain is exactly 1.
    pub fn new(power: f64, noise_var: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(invalid("power", format!("{power} must be positive")));
        }
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(invalid("noise_var", format!("{noise_var} must be >= 0")));
        }
        Ok(ChannelParams { power, noise_var })
    }

    /// `σ² = P / 10^(snr_db/10)`.
    pub fn from_snr_db(snr_db: f64, power: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(invalid("snr_db", "must be finite"));
        }
        Self::new(power, power / 10f64.powf(snr_db / 10.0))
    }

    pub fn noiseless(power: f64) -> Result<Self> {
        Self::new(power, 0.0)
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn snr(&self) -> f64 {
        self.power / self.noise_var
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * self.snr().log10()
    }

    /// MMSE gain for the two-user sum, `2P/(2P + σ²)`.
    pub fn alpha_opt(&self) -> f64 {
        2.0 * self.power / (2.0 * self.power + self.noise_var)
    }

    /// Equivalent noise variance at `alpha_opt`, `2Pσ²/(2P + σ²)`.
    pub fn sigma2_eq(&self) -> f64 {
        2.0 * self.power * self.noise_var / (2.0 * self.power + self.noise_var)
    }

    /// Equivalent noise variance `α²σ² + (1 − α)²·2P` for an arbitrary gain.
    pub fn sigma2_eq_at(&self, alpha: f64) -> f64 {
        alpha * alpha * self.noise_var + (1.0 - alpha).powi(2) * 2.0 * self.power
    }

    /// Point-to-point AWGN capacity `½·log₂(1 + snr)`.
    pub fn awgn_capacity(&self) -> f64 {
        0.5 * (1.0 + self.snr()).log2()
    }
}

/// How the relay delivers the decoded sum to the end nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BroadcastMode {
    /// The relay re-transmits the dithered sum through AWGN; each end node
    /// lattice-decodes it.
    DirectLatticeRelay,
    /// The relay forwards the index with an ideal capacity-achieving code:
    /// error-free when the coding rate is below `½·log₂(1 + snr)`, certain
    /// failure otherwise.
    IndexForwardIdeal,
}

/// Everything that happened in one MAC + broadcast round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExchangeTranscript {
    pub seed: u64,
    pub mode: BroadcastMode,
    pub u_a: u64,
    pub u_b: u64,
    pub t1: LatticePoint,
    pub t2: LatticePoint,
    pub d1: Dither,
    pub d2: Dither,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub y_r: Vec<f64>,
    /// Relay's estimate of `(t₁ + t₂) mod Λc`.
    pub relay_sum: LatticePoint,
    /// Node A's estimate of `t₂` (None when the broadcast failed).
    pub t2_at_a: Option<LatticePoint>,
    pub t1_at_b: Option<LatticePoint>,
    pub u_b_at_a: Option<u64>,
    pub u_a_at_b: Option<u64>,
    pub relay_error: bool,
    pub end_error: bool,
}

impl ExchangeTranscript {
    pub fn any_error(&self) -> bool {
        self.relay_error || self.end_error
    }
}

/// `x = (t − d) mod Λc` for message `u`.
pub fn encode_node(u: u64, d: &Dither, pair: &NestedLatticePair) -> Result<Vec<f64>> {
    let t = pair.encode(u)?;
    pair.coarse().check_dim(d.values.len())?;
    let diff: Vec<f64> = t.coords.iter().zip(&d.values).map(|(a, b)| a - b).collect();
    pair.coarse().reduce(&diff)
}

/// Relay decoding with an explicit receiver gain.
pub fn relay_decode_sum_with_gain(
    y_r: &[f64],
    dithers: &[&Dither],
    gain: f64,
    pair: &NestedLatticePair,
) -> Result<LatticePoint> {
    let coarse = pair.coarse();
    coarse.check_dim(y_r.len())?;
    let mut v: Vec<f64> = y_r.iter().map(|y| gain * y).collect();
    for d in dithers {
        coarse.check_dim(d.values.len())?;
        for (a, b) in v.iter_mut().zip(&d.values) {
            *a += b;
        }
    }
    pair.quantize(&coarse.reduce(&v)?)
}

/// `Q_Λf((α_opt·y + d₁ + d₂) mod Λc)`.
pub fn relay_decode_sum(
    y_r: &[f64],
    d1: &Dither,
    d2: &Dither,
    params: &ChannelParams,
    pair: &NestedLatticePair,
) -> Result<LatticePoint> {
    relay_decode_sum_with_gain(y_r, &[d1, d2], params.alpha_opt(), pair)
}

/// `(t̂ − own) mod Λc`: the other node's codeword.
pub fn recover_at_node(
    t_hat: &LatticePoint,
    own: &LatticePoint,
    pair: &NestedLatticePair,
) -> Result<LatticePoint> {
    pair.modulo_diff(t_hat, own)
}

/// Runs one full exchange. Dithers and noise are derived from `seed`
/// (node ids: relay 0, A 1, B 2), and every node is assumed to know every
/// dither.
pub fn run_session(
    u_a: u64,
    u_b: u64,
    params: &ChannelParams,
    pair: &NestedLatticePair,
    mode: BroadcastMode,
    seed: u64,
) -> Result<ExchangeTranscript> {
    let coarse = pair.coarse();
    let t1 = pair.encode(u_a)?;
    let t2 = pair.encode(u_b)?;
    let d1 = Dither::sample(derive_seed(seed, &[tag::DITHER, 1]), coarse);
    let d2 = Dither::sample(derive_seed(seed, &[tag::DITHER, 2]), coarse);
    let x1 = encode_node(u_a, &d1, pair)?;
    let x2 = encode_node(u_b, &d2, pair)?;

    let mut mac = AwgnChannel::new(params.noise_var(), derive_seed(seed, &[tag::NOISE, 0]))?;
    let superposed: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
    let y_r = mac.transmit(&superposed);
    let relay_sum = relay_decode_sum(&y_r, &d1, &d2, params, pair)?;
    let true_sum = pair.modulo_sum(&t1, &t2)?;
    let relay_error = relay_sum.index != true_sum.index;

    let (sum_at_a, sum_at_b) = match mode {
        BroadcastMode::IndexForwardIdeal => {
            if pair.rate() < params.awgn_capacity() {
                (Some(relay_sum.clone()), Some(relay_sum.clone()))
            } else {
                (None, None)
            }
        }
        BroadcastMode::DirectLatticeRelay => {
            let d_r = Dither::sample(derive_seed(seed, &[tag::DITHER, 0]), coarse);
            let x_r = encode_node(relay_sum.index.unwrap_or(0), &d_r, pair)?;
            // Single-user MMSE gain for the downlink.
            let gain = params.power() / (params.power() + params.noise_var());
            let at = |node: u64| -> Result<LatticePoint> {
                let mut ch =
                    AwgnChannel::new(params.noise_var(), derive_seed(seed, &[tag::NOISE, node]))?;
                relay_decode_sum_with_gain(&ch.transmit(&x_r), &[&d_r], gain, pair)
            };
            (Some(at(1)?), Some(at(2)?))
        }
    };

    let t2_at_a = sum_at_a
        .map(|s| recover_at_node(&s, &t1, pair))
        .transpose()?;
    let t1_at_b = sum_at_b
        .map(|s| recover_at_node(&s, &t2, pair))
        .transpose()?;
    let u_b_at_a = t2_at_a.as_ref().and_then(|p| p.index);
    let u_a_at_b = t1_at_b.as_ref().and_then(|p| p.index);
    let end_error = u_b_at_a != Some(u_b) || u_a_at_b != Some(u_a);

    Ok(ExchangeTranscript {
        seed,
        mode,
        u_a,
        u_b,
        t1,
        t2,
        d1,
        d2,
        x1,
        x2,
        y_r,
        relay_sum,
        t2_at_a,
        t1_at_b,
        u_b_at_a,
        u_a_at_b,
        relay_error,
        end_error,
    })
}

/// Monte Carlo over uniformly random message pairs.
/// Error classes: `relay`, `end`, `union`.
#[derive(Debug, Clone)]
pub struct SessionExperiment {
    pub pair: NestedLatticePair,
    pub params: ChannelParams,
    pub mode: BroadcastMode,
}

impl Experiment for SessionExperiment {
    fn error_classes(&self) -> Vec<&'static str> {
        vec!["relay", "end", "union"]
    }

    fn trial(&self, seed: u64) -> Outcome {
        let mut rng = SimRng::derived(seed, &[tag::MESSAGE]);
        let size = self.pair.size();
        let (u_a, u_b) = (rng.below(size), rng.below(size));
        let t = run_session(u_a, u_b, &self.params, &self.pair, self.mode, seed)
            .expect("messages drawn in range");
        Outcome::flags(&[t.relay_error, t.end_error, t.any_error()])
    }
}

/// One JSON-lines record summarizing a batch of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionBatchRecord {
    pub seed: u64,
    pub snr_db: f64,
    pub n: usize,
    pub q: u32,
    pub k: usize,
    pub relay_errors: u64,
    pub end_errors: u64,
    pub trials: u64,
}

impl SessionBatchRecord {
    pub fn from_report(
        report: &TrialReport,
        params: &ChannelParams,
        pair: &NestedLatticePair,
    ) -> Self {
        let count = |name| report.class(name).map_or(0, |c| c.errors);
        SessionBatchRecord {
            seed: report.master_seed,
            snr_db: params.snr_db(),
            n: pair.dim(),
            q: pair.modulus(),
            k: pair.code().rank(),
            relay_errors: count("relay"),
            end_errors: count("end"),
            trials: report.trials,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain record serializes")
    }
}
