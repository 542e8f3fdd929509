//! Monte Carlo harness: seed derivation, the simulation RNG, channel models,
//! and a trial runner whose results do not depend on the number of workers.
//!
//! Every random quantity in the crate is drawn from a [`SimRng`], which is
//! ChaCha20 keyed by a SplitMix64 expansion of a 64-bit seed. Seeds for
//! sub-experiments are derived with [`derive_seed`] from a master seed and a
//! path of integers (trial index, node id, ...), so any consumer can rebuild
//! the exact stream it needs without coordination.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::twoway::ChannelParams;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Trials per work unit. Fixed so aggregation order never depends on the
/// worker count.
const CHUNK: u64 = 2048;

/// One SplitMix64 output step applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `master` and a path of integers into a child seed.
///
/// `derive_seed(m, &[a, b])` is a pure function; siblings with different
/// paths get unrelated seeds.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master ^ 0x7477_696E_7265_6C61); // "twinrela"
    for &p in path {
        h = splitmix64(h ^ splitmix64(p));
    }
    h
}

/// Seed-path tags, so streams for different purposes never collide.
pub mod tag {
    pub const TRIAL: u64 = 1;
    pub const DITHER: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const MESSAGE: u64 = 4;
    pub const SAMPLE: u64 = 5;
}

/// The simulation RNG: ChaCha20 with a key expanded from a 64-bit seed.
///
/// Uniform doubles take the top 53 bits of `next_u64`; Gaussians use the
/// Box-Muller transform and cache the second variate. Both are simple enough
/// to reproduce bit-for-bit in other languages.
#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl SimRng {
    pub fn from_seed(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        SimRng {
            inner: ChaCha20Rng::from_seed(key),
            spare: None,
        }
    }

    /// Stream for `derive_seed(master, path)`.
    pub fn derived(master: u64, path: &[u64]) -> Self {
        Self::from_seed(derive_seed(master, path))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer on `0..n` by rejection (no modulo bias).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let limit = (u64::MAX / n) * n;
        loop {
            let x = self.inner.next_u64();
            if x < limit {
                return x % n;
            }
        }
    }

    /// Standard normal variate.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Additive white Gaussian noise with variance `noise_var` per component.
#[derive(Debug, Clone)]
pub struct AwgnChannel {
    noise_var: f64,
    stream: SimRng,
}

impl AwgnChannel {
    pub fn new(noise_var: f64, seed: u64) -> Result<Self> {
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(invalid(
                "noise_var",
                format!("{noise_var} must be finite and >= 0"),
            ));
        }
        Ok(AwgnChannel {
            noise_var,
            stream: SimRng::from_seed(seed),
        })
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Returns `x + z`. With zero variance the input is returned unchanged
    /// and no randomness is consumed.
    pub fn transmit(&mut self, x: &[f64]) -> Vec<f64> {
        if self.noise_var == 0.0 {
            return x.to_vec();
        }
        let sd = self.noise_var.sqrt();
        x.iter().map(|&v| v + sd * self.stream.gaussian()).collect()
    }
}

/// Binary symmetric channel on up to 64-bit words.
#[derive(Debug, Clone)]
pub struct BscChannel {
    crossover: f64,
    stream: SimRng,
}

impl BscChannel {
    pub fn new(crossover: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(invalid("crossover", format!("{crossover} not in [0, 1]")));
        }
        Ok(BscChannel {
            crossover,
            stream: SimRng::from_seed(seed),
        })
    }

    /// Error pattern for an `n`-bit word; bit `i` flips with probability
    /// `crossover`, independently.
    pub fn error_pattern(&mut self, n: usize) -> u64 {
        let mut e = 0u64;
        for i in 0..n {
            if self.stream.bernoulli(self.crossover) {
                e |= 1 << i;
            }
        }
        e
    }

    pub fn transmit(&mut self, word: u64, n: usize) -> u64 {
        word ^ self.error_pattern(n)
    }
}

/// Amplify-and-forward gain that renormalizes the relay's received signal
/// (power `2P + sigma^2`) back to `P`.
pub fn anc_gain(params: &ChannelParams) -> f64 {
    (params.power() / (2.0 * params.power() + params.noise_var())).sqrt()
}

/// Analog network coding relay: scales `y_r` by [`anc_gain`].
pub fn anc_relay(y_r: &[f64], params: &ChannelParams) -> Vec<f64> {
    let g = anc_gain(params);
    y_r.iter().map(|v| g * v).collect()
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Result of a single trial: a bitmask over the experiment's error classes
/// plus optional real-valued observables (averaged by the runner).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub errors: u64,
    pub values: Vec<f64>,
}

impl Outcome {
    pub fn flags(flags: &[bool]) -> Self {
        let errors = flags
            .iter()
            .enumerate()
            .fold(0u64, |m, (i, &f)| if f { m | (1 << i) } else { m });
        Outcome {
            errors,
            values: Vec::new(),
        }
    }
}

/// A Monte Carlo experiment. `trial` must be a pure function of its seed.
pub trait Experiment: Sync {
    /// Names of the error classes; bit `i` of [`Outcome::errors`] is class `i`.
    /// Class 0 drives CI-targeted stopping.
    fn error_classes(&self) -> Vec<&'static str>;

    fn observables(&self) -> Vec<&'static str> {
        Vec::new()
    }

    fn trial(&self, seed: u64) -> Outcome;
}

/// How many trials to run and on how many threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub trials: u64,
    pub master_seed: u64,
    pub workers: usize,
    /// Stop once the 95% half-width of class 0 falls to this value.
    pub target_ci: Option<f64>,
    /// Cap for CI-targeted runs.
    pub max_trials: u64,
}

impl TrialPlan {
    pub fn fixed(trials: u64, master_seed: u64, workers: usize) -> Self {
        TrialPlan {
            trials,
            master_seed,
            workers,
            target_ci: None,
            max_trials: trials,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        match self.target_ci {
            None if self.trials == 0 => Err(invalid("trials", "must be at least 1")),
            Some(t) if !(t > 0.0 && t < 1.0) => {
                Err(invalid("target_ci", format!("{t} not in (0, 1)")))
            }
            Some(_) if self.max_trials == 0 => Err(invalid("max_trials", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub name: String,
    pub errors: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableMean {
    pub name: String,
    pub mean: f64,
}

/// Aggregated Monte Carlo result.
///
/// Wall time is kept out of the serialized form so that reports from
/// identical runs compare byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub master_seed: u64,
    pub trials: u64,
    pub classes: Vec<ClassStats>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableMean>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl TrialReport {
    pub fn class(&self, name: &str) -> Option<&ClassStats> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn observable(&self, name: &str) -> Option<f64> {
        self.observables
            .iter()
            .find(|o| o.name == name)
            .map(|o| o.mean)
    }
}

#[derive(Debug, Clone)]
struct Tally {
    trials: u64,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl Tally {
    fn new(classes: usize, observables: usize) -> Self {
        Tally {
            trials: 0,
            counts: vec![0; classes],
            sums: vec![0.0; observables],
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.trials += other.trials;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }
}

fn run_chunk<E: Experiment + ?Sized>(
    exp: &E,
    master: u64,
    range: std::ops::Range<u64>,
    nc: usize,
    no: usize,
) -> Tally {
    let mut t = Tally::new(nc, no);
    for i in range {
        let o = exp.trial(derive_seed(master, &[tag::TRIAL, i]));
        t.trials += 1;
        for (c, count) in t.counts.iter_mut().enumerate() {
            if o.errors & (1 << c) != 0 {
                *count += 1;
            }
        }
        for (s, v) in t.sums.iter_mut().zip(&o.values) {
            *s += v;
        }
    }
    t
}

fn run_range<E: Experiment + ?Sized>(
    exp: &E,
    master: u64,
    start: u64,
    end: u64,
    pool: &rayon::ThreadPool,
    nc: usize,
    no: usize,
) -> Tally {
    let starts: Vec<u64> = (start..end).step_by(CHUNK as usize).collect();
    let parts: Vec<Tally> = pool.install(|| {
        starts
            .par_iter()
            .map(|&s| run_chunk(exp, master, s..(s + CHUNK).min(end), nc, no))
            .collect()
    });
    // Sequential merge in chunk order keeps float sums bit-reproducible.
    let mut total = Tally::new(nc, no);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Runs an experiment according to `plan`.
///
/// Trial `i` uses seed `derive_seed(master, [TRIAL, i])`, so the report is
/// identical for any worker count.
pub fn run_trials<E: Experiment + ?Sized>(exp: &E, plan: &TrialPlan) -> Result<TrialReport> {
    plan.validate()?;
    let classes = exp.error_classes();
    let observables = exp.observables();
    if classes.is_empty() || classes.len() > 64 {
        return Err(invalid("error_classes", "need between 1 and 64 classes"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let started = Instant::now();
    let (nc, no) = (classes.len(), observables.len());

    let tally = match plan.target_ci {
        None => run_range(exp, plan.master_seed, 0, plan.trials, &pool, nc, no),
        Some(target) => {
            let batch = 16 * CHUNK;
            let mut total = Tally::new(nc, no);
            while total.trials < plan.max_trials {
                let end = (total.trials + batch).min(plan.max_trials);
                let part = run_range(exp, plan.master_seed, total.trials, end, &pool, nc, no);
                total.merge(&part);
                let (lo, hi) = wilson_interval(total.counts[0], total.trials, Z95);
                if (hi - lo) / 2.0 <= target {
                    break;
                }
            }
            total
        }
    };

    Ok(TrialReport {
        master_seed: plan.master_seed,
        trials: tally.trials,
        classes: classes
            .iter()
            .zip(&tally.counts)
            .map(|(name, &errors)| {
                let (ci_low, ci_high) = wilson_interval(errors, tally.trials, Z95);
                ClassStats {
                    name: name.to_string(),
                    errors,
                    estimate: errors as f64 / tally.trials as f64,
                    ci_low,
                    ci_high,
                }
            })
            .collect(),
        observables: observables
            .iter()
            .zip(&tally.sums)
            .map(|(name, &s)| ObservableMean {
                name: name.to_string(),
                mean: s / tally.trials as f64,
            })
            .collect(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Amplify-and-forward power check: Gaussian codewords of power `P` from
/// both ends, AWGN at the relay, relay output scaled by [`anc_gain`].
/// Observable `relay_power` is the per-dimension output power.
#[derive(Debug, Clone)]
pub struct AncPowerExperiment {
    pub params: ChannelParams,
    pub dim: usize,
}

impl Experiment for AncPowerExperiment {
    fn error_classes(&self) -> Vec<&'static str> {
        vec!["none"]
    }

    fn observables(&self) -> Vec<&'static str> {
        vec!["relay_power", "input_power"]
    }

    fn trial(&self, seed: u64) -> Outcome {
        let mut rng = SimRng::from_seed(seed);
        let sp = self.params.power().sqrt();
        let sn = self.params.noise_var().sqrt();
        let y: Vec<f64> = (0..self.dim)
            .map(|_| sp * rng.gaussian() + sp * rng.gaussian() + sn * rng.gaussian())
            .collect();
        let out = anc_relay(&y, &self.params);
        let n = self.dim as f64;
        Outcome {
            errors: 0,
            values: vec![
                out.iter().map(|v| v * v).sum::<f64>() / n,
                y.iter().map(|v| v * v).sum::<f64>() / n,
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Coin(f64);

    impl Experiment for Coin {
        fn error_classes(&self) -> Vec<&'static str> {
            vec!["heads"]
        }
        fn trial(&self, seed: u64) -> Outcome {
            Outcome::flags(&[SimRng::from_seed(seed).bernoulli(self.0)])
        }
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = SimRng::from_seed(11);
        let n = 1_000_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = rng.gaussian();
            s1 += z;
            s2 += z * z;
            s4 += z * z * z * z;
        }
        let nf = n as f64;
        let (m, v, k) = (s1 / nf, s2 / nf, s4 / nf);
        // Standard errors: 1/sqrt(n), sqrt(2/n), sqrt(96/n); 5 sigma.
        assert!(m.abs() < 5.0 / nf.sqrt(), "mean {m}");
        assert!((v - 1.0).abs() < 5.0 * (2.0 / nf).sqrt(), "var {v}");
        assert!((k - 3.0).abs() < 5.0 * (96.0 / nf).sqrt(), "kurtosis {k}");
    }

    #[test]
    fn awgn_identity_when_noiseless() {
        let mut ch = AwgnChannel::new(0.0, 3).unwrap();
        let x = vec![0.25, -1.5, 3.0];
        assert_eq!(ch.transmit(&x), x);
    }

    #[test]
    fn awgn_variance_and_determinism() {
        let x = vec![0.0; 1_000_000];
        let y = AwgnChannel::new(0.7, 99).unwrap().transmit(&x);
        let var = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        assert!((var - 0.7).abs() < 0.007, "variance {var}");
        let again = AwgnChannel::new(0.7, 99).unwrap().transmit(&x[..100]);
        assert_eq!(&y[..100], &again[..]);
    }

    #[test]
    fn anc_gain_at_unit_snr() {
        let p = ChannelParams::new(1.0, 1.0).unwrap();
        assert!((anc_gain(&p) - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(anc_relay(&[0.0, 0.0], &p), vec![0.0, 0.0]);
    }

    #[test]
    fn anc_output_power_is_p() {
        let exp = AncPowerExperiment {
            params: ChannelParams::new(1.0, 0.5).unwrap(),
            dim: 16,
        };
        let r = run_trials(&exp, &TrialPlan::fixed(100_000, 5, 4)).unwrap();
        let p = r.observable("relay_power").unwrap();
        assert!((p - 1.0).abs() < 0.01, "relay power {p}");
    }

    #[test]
    fn worker_count_does_not_change_counts() {
        let exp = Coin(0.3);
        let a = run_trials(&exp, &TrialPlan::fixed(50_000, 17, 1)).unwrap();
        let b = run_trials(&exp, &TrialPlan::fixed(50_000, 17, 8)).unwrap();
        assert_eq!(
            a,
            TrialReport {
                wall_time_s: a.wall_time_s,
                ..b.clone()
            }
        );
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn wilson_covers_true_rate() {
        let exp = Coin(0.1);
        let covered = (0..1000u64)
            .filter(|&rep| {
                let r = run_trials(&exp, &TrialPlan::fixed(10_000, 1000 + rep, 4)).unwrap();
                let c = &r.classes[0];
                c.ci_low <= 0.1 && 0.1 <= c.ci_high
            })
            .count();
        assert!(covered >= 930, "coverage {covered}/1000");
    }

    #[test]
    fn zero_errors_gives_rule_of_three_bound() {
        let r = run_trials(&Coin(0.0), &TrialPlan::fixed(1000, 1, 2)).unwrap();
        let c = &r.classes[0];
        assert_eq!(c.estimate, 0.0);
        assert_eq!(c.ci_low, 0.0);
        let z2 = Z95 * Z95;
        assert!((c.ci_high - z2 / (1000.0 + z2)).abs() < 1e-15);
        // Close to the rule of three (3/n) for the same n.
        assert!(c.ci_high < 3.0 / 1000.0 * 1.4);
    }

    #[test]
    fn target_ci_stops_early() {
        let plan = TrialPlan {
            trials: 0,
            master_seed: 4,
            workers: 4,
            target_ci: Some(0.01),
            max_trials: 10_000_000,
        };
        let r = run_trials(&Coin(0.5), &plan).unwrap();
        let c = &r.classes[0];
        assert!((c.ci_high - c.ci_low) / 2.0 <= 0.01);
        assert!(r.trials < 100_000);
    }

    #[test]
    fn invalid_plans_rejected() {
        assert!(run_trials(&Coin(0.5), &TrialPlan::fixed(10, 1, 0)).is_err());
        assert!(run_trials(&Coin(0.5), &TrialPlan::fixed(0, 1, 1)).is_err());
    }

    #[test]
    fn below_is_in_range() {
        let mut rng = SimRng::from_seed(8);
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            seen[rng.below(7) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }
}
