//! Independent reference values shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use statrs::function::erf::erfc;

/// `P(N(0,1) ≤ x)`.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Reference rates from 40-digit arithmetic, rounded to 20 digits.
pub mod reference {
    pub const UPPER_10: f64 = 1.729_715_809_318_648_628_10;
    pub const LATTICE_10: f64 = 1.696_158_711_389_380_144_45;
    pub const JD_10: f64 = 1.098_079_355_694_690_072_22;
    pub const ANC_10: f64 = 1.039_613_345_575_287_535_11;
    pub const ANC_1: f64 = 0.160_964_047_443_681_174;
    pub const PURE_NC_10: f64 = 1.153_143_872_879_099_085_40;
    pub const JD_001: f64 = 0.007_142_288_049_192_723_49;
    pub const UPPER_001: f64 = 0.007_177_646_488_535_020_72;
    pub const CROSSOVER_LOW_DB: f64 = -0.659_355_983_885_108_048_97;
    pub const CROSSOVER_HIGH_DB: f64 = 3.460_167_216_008_572_327_67;
    pub const BSC_BOUND_011: f64 = 0.500_084_041_835_472_004;
}

/// Symbol error of the relay's modulo-sum decision for the uncoded
/// one-dimensional lattice with `q` points, unit power and MMSE gain.
///
/// The effective noise is `−(1−α)(x₁+x₂) + αz`: a triangular self-noise
/// term (sum of two uniforms on the coarse cell) plus Gaussian noise. The
/// decision is right when that noise, wrapped modulo `qγ`, lands within
/// `γ/2` of zero. The density of `x₁+x₂` is integrated with Simpson's rule.
pub fn wrapped_relay_ser(q: u32, power: f64, noise_var: f64) -> f64 {
    let gamma = (12.0 * power).sqrt() / q as f64;
    let side = gamma * q as f64;
    let alpha = 2.0 * power / (2.0 * power + noise_var);
    let sd = alpha * noise_var.sqrt();
    let correct_given = |s: f64| -> f64 {
        let shift = (1.0 - alpha) * s;
        (-4i32..=4)
            .map(|k| {
                let c = k as f64 * side + shift;
                phi((c + gamma / 2.0) / sd) - phi((c - gamma / 2.0) / sd)
            })
            .sum()
    };
    let density = |s: f64| (side - s.abs()).max(0.0) / (side * side);
    let m = 20_000;
    let h = 2.0 * side / m as f64;
    let mut acc = 0.0;
    for i in 0..=m {
        let s = -side + i as f64 * h;
        let w = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * density(s) * correct_given(s);
    }
    1.0 - acc * h / 3.0
}

/// Block error of the [7,4] Hamming code on a BSC, by summing the
/// probability of every error pattern that a syndrome decoder cannot fix.
pub fn hamming74_block_error(p: f64) -> f64 {
    let h: [u8; 3] = [0b0011101, 0b0100111, 0b1001110];
    let syndrome = |e: u8| -> u8 {
        h.iter().enumerate().fold(0, |s, (i, &row)| {
            s | (((row & e).count_ones() % 2) as u8) << i
        })
    };
    // Every weight-one pattern has its own syndrome, so the correctable set
    // is exactly the patterns of weight at most one.
    let mut seen = std::collections::HashSet::new();
    for b in 0..7 {
        assert!(seen.insert(syndrome(1 << b)));
    }
    (0u8..128)
        .filter(|e| e.count_ones() > 1)
        .map(|e| {
            let w = e.count_ones() as i32;
            p.powi(w) * (1.0 - p).powi(7 - w)
        })
        .sum()
}

/// Probability that `u + v`, with `u, v` uniform on `[−√P, √P]`, lands
/// outside `P(2 − δ/P) ≤ (u+v)² ≤ P(2 + δ/P)`, by midpoint integration of
/// the triangular density.
pub fn one_dim_off_shell(power: f64, delta: f64) -> f64 {
    let a = power.sqrt();
    let (lo, hi) = ((2.0 * power - delta).sqrt(), (2.0 * power + delta).sqrt());
    let m = 200_000;
    let h = 4.0 * a / m as f64;
    let mut on = 0.0;
    for i in 0..m {
        let s: f64 = -2.0 * a + (i as f64 + 0.5) * h;
        if s.abs() >= lo && s.abs() <= hi {
            on += (2.0 * a - s.abs()) / (4.0 * a * a) * h;
        }
    }
    1.0 - on
}

/// Half-width of the binomial `k`-sigma band around `p` for `n` trials.
pub fn sigma_band(p: f64, n: u64, k: f64) -> f64 {
    k * (p * (1.0 - p) / n as f64).sqrt()
}
