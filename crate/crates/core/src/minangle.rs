//! Ball-intersection codebooks on a translated scaled integer lattice and
//! the minimum-angle decoder for sums of two codewords.
//!
//! Codebook `i` is `{γm + sᵢ : m ∈ Zⁿ, ‖γm + sᵢ‖² ≤ nP}`. Sums of one point
//! from each book concentrate near the sphere of radius `√(2nP)`; the
//! decoder only considers sums inside the thin shell
//! `n(2P−δ) ≤ ‖x‖² ≤ n(2P+δ)` and picks the one at the smallest angle to
//! the received vector.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::{
    derive_seed, run_trials, tag, AwgnChannel, Experiment, Outcome, SimRng, TrialPlan, TrialReport,
};

pub const MAX_BOOK: usize = 100_000;
pub const MAX_PAIRS: u64 = 10_000_000;
const MAX_BOX: u64 = 10_000_000;
const KEY_SCALE: f64 = 1e9;

/// Volume of the `n`-ball of radius `r`, via `Vₙ = Vₙ₋₂·2πr²/n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    let (mut v, mut k) = if n.is_multiple_of(2) {
        (1.0, 0)
    } else {
        (2.0 * r, 1)
    };
    while k < n {
        k += 2;
        v *= 2.0 * std::f64::consts::PI * r * r / k as f64;
    }
    v
}

/// Radius of the `n`-ball with the given volume.
pub fn ball_radius_for_volume(n: usize, volume: f64) -> f64 {
    (volume / ball_volume(n, 1.0)).powf(1.0 / n as f64)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * KEY_SCALE).round() as i64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCodebook {
    dim: usize,
    gamma: f64,
    power: f64,
    shift: Vec<f64>,
    /// Integer lattice coordinates `m` of each point, in enumeration order.
    lattice_coords: Vec<Vec<i64>>,
    points: Vec<Vec<f64>>,
}

impl BallCodebook {
    /// All points of `γZⁿ + s` in the closed ball of radius `√(nP)`,
    /// enumerated by sweeping the bounding box in lexicographic order.
    pub fn enumerate(dim: usize, gamma: f64, power: f64, shift: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("{gamma} must be positive")));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(invalid("P", format!("{power} must be positive")));
        }
        if shift.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: shift.len(),
            });
        }
        if shift.iter().any(|&s| !(0.0..gamma).contains(&s)) {
            return Err(invalid("shift", "must lie in [0, gamma)^n"));
        }
        let r2 = dim as f64 * power;
        let r = r2.sqrt();
        let ranges: Vec<(i64, i64)> = shift
            .iter()
            .map(|&s| {
                (
                    ((-r - s) / gamma).ceil() as i64,
                    ((r - s) / gamma).floor() as i64,
                )
            })
            .collect();
        let box_size = ranges
            .iter()
            .try_fold(1u64, |acc, &(lo, hi)| {
                acc.checked_mul((hi - lo + 1).max(0) as u64)
            })
            .unwrap_or(u64::MAX);
        if box_size > MAX_BOX {
            return Err(Error::GuardExceeded {
                what: "bounding box",
                value: box_size as u128,
                limit: MAX_BOX as u128,
            });
        }
        let tol = r2 * 1e-12;
        let mut lattice_coords = Vec::new();
        let mut points = Vec::new();
        let mut m: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if box_size > 0 {
            loop {
                let x: Vec<f64> = m
                    .iter()
                    .zip(&shift)
                    .map(|(&mi, s)| gamma * mi as f64 + s)
                    .collect();
                if norm2(&x) <= r2 + tol {
                    if points.len() == MAX_BOOK {
                        return Err(Error::GuardExceeded {
                            what: "codebook size",
                            value: MAX_BOOK as u128 + 1,
                            limit: MAX_BOOK as u128,
                        });
                    }
                    lattice_coords.push(m.clone());
                    points.push(x);
                }
                // Odometer step over the bounding box.
                let Some(d) = (0..dim).rev().find(|&d| m[d] < ranges[d].1) else {
                    break;
                };
                m[d] += 1;
                for (mi, r) in m[d + 1..].iter_mut().zip(&ranges[d + 1..]) {
                    *mi = r.0;
                }
            }
        }
        Ok(BallCodebook {
            dim,
            gamma,
            power,
            shift,
            lattice_coords,
            points,
        })
    }

    /// Translation at the centre of the cell, `(γ/2, …, γ/2)`.
    pub fn half_cell(dim: usize, gamma: f64, power: f64) -> Result<Self> {
        Self::enumerate(dim, gamma, power, vec![gamma / 2.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn lattice_coords(&self) -> &[Vec<i64>] {
        &self.lattice_coords
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    dim: usize,
    power: f64,
    delta: f64,
    theta: f64,
}

impl ShellSpec {
    /// Shell around radius `√(2nP)` with half-width `δ` (energy per
    /// dimension) and half-angle `θ` from `sinθ = √(σ²/(2P−δ+σ²))`.
    pub fn new(dim: usize, power: f64, delta: f64, noise_var: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(invalid("P", format!("{power} must be positive")));
        }
        if !(0.0..2.0 * power).contains(&delta) {
            return Err(invalid("delta", format!("{delta} not in [0, 2P)")));
        }
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(invalid("sigma2", format!("{noise_var} must be >= 0")));
        }
        let theta = (noise_var / (2.0 * power - delta + noise_var))
            .sqrt()
            .asin();
        Ok(ShellSpec {
            dim,
            power,
            delta,
            theta,
        })
    }

    /// `δ = 0.1·P`.
    pub fn with_default_delta(dim: usize, power: f64, noise_var: f64) -> Result<Self> {
        Self::new(dim, power, 0.1 * power, noise_var)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sin_theta(&self) -> f64 {
        self.theta.sin()
    }

    pub fn inner_radius(&self) -> f64 {
        (self.dim as f64 * (2.0 * self.power - self.delta)).sqrt()
    }

    pub fn outer_radius(&self) -> f64 {
        (self.dim as f64 * (2.0 * self.power + self.delta)).sqrt()
    }

    pub fn contains_norm2(&self, r2: f64) -> bool {
        let n = self.dim as f64;
        let tol = 1e-12 * n * 2.0 * self.power;
        r2 >= n * (2.0 * self.power - self.delta) - tol
            && r2 <= n * (2.0 * self.power + self.delta) + tol
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_norm2(norm2(x))
    }
}

/// Radial projection onto the inner shell sphere, `√(n(2P−δ))·x/‖x‖`.
pub fn project_to_shell(x: &[f64], spec: &ShellSpec) -> Result<Vec<f64>> {
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch {
            expected: spec.dim,
            got: x.len(),
        });
    }
    let norm = norm2(x).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let s = spec.inner_radius() / norm;
    Ok(x.iter().map(|v| v * s).collect())
}

/// Index of the candidate at the smallest angle to `y`; ties go to the
/// lowest index.
pub fn min_angle_decode(y: &[f64], candidates: &[Vec<f64>]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if norm2(y) == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, c) in candidates.iter().enumerate() {
        if c.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: c.len(),
            });
        }
        let cos = dot(y, c) / norm2(c).sqrt();
        if cos > best.0 {
            best = (cos, i);
        }
    }
    Ok(best.1)
}

/// Index of the nearest candidate in Euclidean distance; ties go to the
/// lowest index.
pub fn min_distance_decode(y: &[f64], candidates: &[Vec<f64>]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut best = (f64::INFINITY, 0);
    for (i, c) in candidates.iter().enumerate() {
        let d: f64 = y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best.1)
}

/// Fails if two distinct candidates point in the same direction, which
/// would make the angle decoder unable to separate them.
pub fn check_directions(candidates: &[Vec<f64>]) -> Result<()> {
    let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
    for (i, c) in candidates.iter().enumerate() {
        let n = norm2(c).sqrt();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let unit: Vec<f64> = c.iter().map(|v| v / n).collect();
        if let Some(&first) = seen.get(&key(&unit)) {
            return Err(Error::DirectionCollision { first, second: i });
        }
        seen.insert(key(&unit), i);
    }
    Ok(())
}

/// All pairwise sums of two codebooks, deduplicated, with shell membership.
#[derive(Debug, Clone)]
pub struct SumCodebook {
    m2: usize,
    sums: Vec<Vec<f64>>,
    on_shell: Vec<bool>,
    pair_to_sum: Vec<u32>,
    candidates: Vec<usize>,
    m_sum: u64,
    m_on_shell: u64,
}

impl SumCodebook {
    pub fn build(c1: &BallCodebook, c2: &BallCodebook, shell: &ShellSpec) -> Result<Self> {
        if c1.dim() != c2.dim() || c1.dim() != shell.dim() {
            return Err(Error::DimensionMismatch {
                expected: c1.dim(),
                got: c2.dim().max(shell.dim()),
            });
        }
        let m_sum = c1.len() as u64 * c2.len() as u64;
        if m_sum > MAX_PAIRS {
            return Err(Error::GuardExceeded {
                what: "pair count",
                value: m_sum as u128,
                limit: MAX_PAIRS as u128,
            });
        }
        let mut lookup: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut sums = Vec::new();
        let mut on_shell = Vec::new();
        let mut pair_to_sum = Vec::with_capacity(m_sum as usize);
        let mut m_on_shell = 0;
        for a in c1.points() {
            for b in c2.points() {
                let s: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let id = *lookup.entry(key(&s)).or_insert_with(|| {
                    on_shell.push(shell.contains(&s));
                    sums.push(s);
                    (sums.len() - 1) as u32
                });
                if on_shell[id as usize] {
                    m_on_shell += 1;
                }
                pair_to_sum.push(id);
            }
        }
        let candidates = (0..sums.len()).filter(|&i| on_shell[i]).collect();
        Ok(SumCodebook {
            m2: c2.len(),
            sums,
            on_shell,
            pair_to_sum,
            candidates,
            m_sum,
            m_on_shell,
        })
    }

    /// Pair count `M₁·M₂`.
    pub fn m_sum(&self) -> u64 {
        self.m_sum
    }

    /// Pairs whose sum lies in the shell.
    pub fn m_on_shell(&self) -> u64 {
        self.m_on_shell
    }

    pub fn m_off_shell(&self) -> u64 {
        self.m_sum - self.m_on_shell
    }

    /// Distinct sum points, in order of first appearance.
    pub fn distinct(&self) -> &[Vec<f64>] {
        &self.sums
    }

    pub fn is_on_shell(&self, sum: usize) -> bool {
        self.on_shell[sum]
    }

    /// Indices (into `distinct`) of the on-shell sums.
    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }

    pub fn candidate_points(&self) -> Vec<Vec<f64>> {
        self.candidates
            .iter()
            .map(|&i| self.sums[i].clone())
            .collect()
    }

    pub fn sum_of(&self, i1: usize, i2: usize) -> usize {
        self.pair_to_sum[i1 * self.m2 + i2] as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinAngleConfig {
    pub dim: usize,
    pub gamma: f64,
    pub power: f64,
    pub noise_var: f64,
    pub delta: f64,
}

impl MinAngleConfig {
    /// Unit cell, `δ = 0.1P`.
    pub fn new(dim: usize, power: f64, noise_var: f64) -> Self {
        MinAngleConfig {
            dim,
            gamma: 1.0,
            power,
            noise_var,
            delta: 0.1 * power,
        }
    }
}

/// Classes: `minangle` (decoded sum differs from the true sum), `ml`
/// (minimum-distance decoding over every distinct sum), `off_shell` (true
/// sum outside the shell) and `minangle_on_shell` (angle error with an
/// on-shell true sum).
pub struct MinAngleExperiment {
    pub c1: BallCodebook,
    pub c2: BallCodebook,
    pub shell: ShellSpec,
    pub sums: SumCodebook,
    pub noise_var: f64,
    candidate_points: Vec<Vec<f64>>,
}

impl MinAngleExperiment {
    /// Enumerates both half-cell codebooks and the sum table, and rejects
    /// instances whose on-shell sums share a direction.
    pub fn new(cfg: &MinAngleConfig) -> Result<Self> {
        let shell = ShellSpec::new(cfg.dim, cfg.power, cfg.delta, cfg.noise_var)?;
        let c1 = BallCodebook::half_cell(cfg.dim, cfg.gamma, cfg.power)?;
        let c2 = c1.clone();
        let sums = SumCodebook::build(&c1, &c2, &shell)?;
        let candidate_points = sums.candidate_points();
        if candidate_points.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        check_directions(&candidate_points)?;
        Ok(MinAngleExperiment {
            c1,
            c2,
            shell,
            sums,
            noise_var: cfg.noise_var,
            candidate_points,
        })
    }
}

impl Experiment for MinAngleExperiment {
    fn error_classes(&self) -> Vec<&'static str> {
        vec!["minangle", "ml", "off_shell", "minangle_on_shell"]
    }

    fn trial(&self, seed: u64) -> Outcome {
        let mut rng = SimRng::derived(seed, &[tag::MESSAGE]);
        let i1 = rng.below(self.c1.len() as u64) as usize;
        let i2 = rng.below(self.c2.len() as u64) as usize;
        let truth = self.sums.sum_of(i1, i2);
        let x = &self.sums.distinct()[truth];
        let y = AwgnChannel::new(self.noise_var, derive_seed(seed, &[tag::NOISE, 0]))
            .expect("validated variance")
            .transmit(x);
        let angle = min_angle_decode(&y, &self.candidate_points)
            .ok()
            .map(|i| self.sums.candidates()[i]);
        let ml = min_distance_decode(&y, self.sums.distinct()).expect("non-empty");
        let on = self.sums.is_on_shell(truth);
        let angle_err = angle != Some(truth);
        Outcome::flags(&[angle_err, ml != truth, !on, on && angle_err])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinAngleReport {
    pub n: usize,
    pub gamma: f64,
    #[serde(rename = "P")]
    pub power: f64,
    pub sigma2: f64,
    pub delta: f64,
    pub theta: f64,
    pub trials: u64,
    pub errors: u64,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    #[serde(rename = "Msum_on_shell")]
    pub msum_on_shell: u64,
    pub shell_points: usize,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ml_errors: u64,
    pub ml_error_rate: f64,
    pub off_shell_trials: u64,
    pub on_shell_errors: u64,
    pub master_seed: u64,
}

/// Monte Carlo of the min-angle sum decoder on the half-cell instance.
pub fn min_angle_error_rate(cfg: &MinAngleConfig, plan: &TrialPlan) -> Result<MinAngleReport> {
    let exp = MinAngleExperiment::new(cfg)?;
    let report = run_trials(&exp, plan)?;
    Ok(min_angle_report(&exp, cfg, &report))
}

fn min_angle_report(
    exp: &MinAngleExperiment,
    cfg: &MinAngleConfig,
    r: &TrialReport,
) -> MinAngleReport {
    let c = |name| r.class(name).expect("declared class");
    let angle = c("minangle");
    let ml = c("ml");
    MinAngleReport {
        n: cfg.dim,
        gamma: cfg.gamma,
        power: cfg.power,
        sigma2: cfg.noise_var,
        delta: cfg.delta,
        theta: exp.shell.theta(),
        trials: r.trials,
        errors: angle.errors,
        m1: exp.c1.len(),
        m2: exp.c2.len(),
        msum_on_shell: exp.sums.m_on_shell(),
        shell_points: exp.sums.candidates().len(),
        error_rate: angle.estimate,
        ci_low: angle.ci_low,
        ci_high: angle.ci_high,
        ml_errors: ml.errors,
        ml_error_rate: ml.estimate,
        off_shell_trials: c("off_shell").errors,
        on_shell_errors: c("minangle_on_shell").errors,
        master_seed: r.master_seed,
    }
}

/// Uniform point in the ball of radius `r`: Gaussian direction, radius
/// `r·U^{1/n}`.
pub fn sample_ball(rng: &mut SimRng, dim: usize, r: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        let n = norm2(&g).sqrt();
        if n > 0.0 {
            let rad = r * rng.uniform().powf(1.0 / dim as f64);
            return g.iter().map(|v| v * rad / n).collect();
        }
    }
}

/// Class `off_shell`: `u + v` outside the shell for `u, v` uniform in the
/// ball of radius `√(nP)`.
pub struct ConcentrationExperiment {
    pub shell: ShellSpec,
}

impl Experiment for ConcentrationExperiment {
    fn error_classes(&self) -> Vec<&'static str> {
        vec!["off_shell"]
    }

    fn trial(&self, seed: u64) -> Outcome {
        let mut rng = SimRng::derived(seed, &[tag::SAMPLE]);
        let n = self.shell.dim();
        let r = (n as f64 * self.shell.power()).sqrt();
        let u = sample_ball(&mut rng, n, r);
        let v = sample_ball(&mut rng, n, r);
        let s: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        Outcome::flags(&[!self.shell.contains(&s)])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub n: usize,
    #[serde(rename = "P")]
    pub power: f64,
    pub delta: f64,
    pub samples: u64,
    pub off_shell: u64,
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

pub const MIN_CONCENTRATION_SAMPLES: u64 = 10_000;

/// Fraction of uniform ball pairs whose sum falls outside the shell.
pub fn concentration_experiment(
    n: usize,
    power: f64,
    delta: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<ConcentrationReport> {
    if samples < MIN_CONCENTRATION_SAMPLES {
        return Err(invalid(
            "samples",
            format!("{samples} < {MIN_CONCENTRATION_SAMPLES}"),
        ));
    }
    let shell = ShellSpec::new(n, power, delta, 0.0)?;
    let r = run_trials(
        &ConcentrationExperiment { shell },
        &TrialPlan::fixed(samples, seed, workers),
    )?;
    let c = r.class("off_shell").expect("declared class");
    Ok(ConcentrationReport {
        n,
        power,
        delta,
        samples: r.trials,
        off_shell: c.errors,
        fraction: c.estimate,
        ci_low: c.ci_low,
        ci_high: c.ci_high,
        master_seed: seed,
    })
}

/// Exact off-shell pair fraction `M⊕′/M⊕` of an enumerated instance.
pub fn exact_off_shell_fraction(sums: &SumCodebook) -> f64 {
    sums.m_off_shell() as f64 / sums.m_sum() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((ball_volume(1, 2.0) - 4.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0) - pi).abs() < 1e-12);
        assert!((ball_volume(3, 1.0) - 4.0 * pi / 3.0).abs() < 1e-12);
        assert!((ball_volume(4, 1.0) - pi * pi / 2.0).abs() < 1e-12);
        assert!((ball_radius_for_volume(3, ball_volume(3, 1.7)) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let shift = vec![0.3, 0.8, 0.1];
        let b = BallCodebook::enumerate(3, 1.0, 2.0, shift.clone()).unwrap();
        let mut count = 0;
        for i in -5i64..=5 {
            for j in -5i64..=5 {
                for k in -5i64..=5 {
                    let x = [
                        i as f64 + shift[0],
                        j as f64 + shift[1],
                        k as f64 + shift[2],
                    ];
                    if norm2(&x) <= 6.0 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(b.len(), count);
        assert!(b.points().iter().all(|p| norm2(p) <= 6.0 + 1e-9));
    }

    #[test]
    fn half_cell_instance() {
        let b = BallCodebook::half_cell(3, 1.0, 2.0).unwrap();
        assert_eq!(b.len(), 56);
        let shell = ShellSpec::with_default_delta(3, 2.0, 0.0).unwrap();
        let s = SumCodebook::build(&b, &b, &shell).unwrap();
        assert_eq!(s.m_sum(), 56 * 56);
        assert_eq!(s.m_on_shell() + s.m_off_shell(), s.m_sum());
        assert_eq!(s.candidates().len(), 8);
        check_directions(&s.candidate_points()).unwrap();
    }

    #[test]
    fn sin_theta_example() {
        let s = ShellSpec::new(4, 1.0, 0.0, 1.0).unwrap();
        assert!((s.sin_theta() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(ShellSpec::new(4, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let s = ShellSpec::new(2, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(project_to_shell(&[2.0, 0.0], &s).unwrap(), vec![2.0, 0.0]);
        assert_eq!(project_to_shell(&[4.0, 0.0], &s).unwrap(), vec![2.0, 0.0]);
        assert_eq!(project_to_shell(&[0.0, 0.0], &s), Err(Error::ZeroVector));
    }

    #[test]
    fn decoder_basics() {
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        assert_eq!(min_angle_decode(&[0.0, 1.0], &c).unwrap(), 1);
        assert_eq!(min_angle_decode(&[0.0, 7.0], &c).unwrap(), 1);
        assert_eq!(min_angle_decode(&[1.0, 1.0], &c).unwrap(), 0);
        assert_eq!(
            min_angle_decode(&[1.0, 1.0], &[]),
            Err(Error::EmptyCandidates)
        );
        assert_eq!(
            check_directions(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(Error::DirectionCollision {
                first: 0,
                second: 1
            })
        );
    }

    #[test]
    fn noiseless_on_shell_trials_are_exact() {
        let cfg = MinAngleConfig::new(3, 2.0, 0.0);
        let r = min_angle_error_rate(&cfg, &TrialPlan::fixed(10_000, 4, 2)).unwrap();
        assert_eq!(r.on_shell_errors, 0);
        assert_eq!(r.ml_errors, 0);
        assert_eq!(r.errors, r.off_shell_trials);
    }

    #[test]
    fn concentration_needs_samples() {
        assert!(concentration_experiment(8, 1.0, 0.1, 100, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn projection_norm_and_idempotence(x in proptest::collection::vec(-10.0f64..10.0, 4), delta in 0.0f64..1.9) {
            prop_assume!(norm2(&x) > 1e-6);
            let s = ShellSpec::new(4, 1.0, delta, 0.5).unwrap();
            let p = project_to_shell(&x, &s).unwrap();
            prop_assert!((norm2(&p) - 4.0 * (2.0 - delta)).abs() < 1e-12);
            let pp = project_to_shell(&p, &s).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn angle_decoder_scale_invariant(y in proptest::collection::vec(-5.0f64..5.0, 3), c in 0.01f64..100.0) {
            prop_assume!(norm2(&y) > 1e-6);
            let b = BallCodebook::half_cell(3, 1.0, 2.0).unwrap();
            let shell = ShellSpec::with_default_delta(3, 2.0, 0.0).unwrap();
            let cands = SumCodebook::build(&b, &b, &shell).unwrap().candidate_points();
            let scaled: Vec<f64> = y.iter().map(|v| v * c).collect();
            prop_assert_eq!(min_angle_decode(&y, &cands).unwrap(), min_angle_decode(&scaled, &cands).unwrap());
        }

        #[test]
        fn pair_accounting(p in 0.5f64..3.0, s in 0.0f64..1.0, n in 1usize..4) {
            let b1 = BallCodebook::enumerate(n, 1.0, p, vec![s; n]).unwrap();
            let b2 = BallCodebook::half_cell(n, 1.0, p).unwrap();
            let shell = ShellSpec::with_default_delta(n, p, 0.1).unwrap();
            let sums = SumCodebook::build(&b1, &b2, &shell).unwrap();
            prop_assert_eq!(sums.m_sum(), (b1.len() * b2.len()) as u64);
            prop_assert_eq!(sums.m_on_shell() + sums.m_off_shell(), sums.m_sum());
        }
    }
}
