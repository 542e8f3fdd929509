//! Closed-form exchange rates, the time-sharing envelope and rate curves.
//!
//! Rates are in bits per channel use per transmitter per phase; `snr` is
//! linear (`P/σ²`) unless a name says `_db`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::io::{format_sig, write_atomic};

pub const CSV_HEADER: &str = "snr_db,upper,lattice,jd,envelope,anc,purenc,beta_star";

const MAX_GRID_POINTS: usize = 10_000_000;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(snr: f64) -> f64 {
    10.0 * snr.log10()
}

fn check_snr(snr: f64) -> Result<()> {
    if snr.is_nan() || snr < 0.0 {
        return Err(invalid("snr", format!("{snr} must be >= 0")));
    }
    Ok(())
}

fn upper(snr: f64) -> f64 {
    0.5 * snr.ln_1p() / std::f64::consts::LN_2
}

fn lattice(snr: f64) -> f64 {
    (0.5 * (0.5 + snr).log2()).max(0.0)
}

fn jd(snr: f64) -> f64 {
    0.25 * (2.0 * snr).ln_1p() / std::f64::consts::LN_2
}

/// Cut-set bound `½log₂(1+snr)`.
pub fn rate_upper(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(upper(snr))
}

/// `max(0, ½log₂(½+snr))`.
pub fn rate_lattice(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(lattice(snr))
}

/// `¼log₂(1+2snr)`.
pub fn rate_joint_decoding(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(jd(snr))
}

/// Amplify-and-forward: `½log₂(1 + snr²/(3snr+1))`.
pub fn rate_anc(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(0.5 * (snr * snr / (3.0 * snr + 1.0)).ln_1p() / std::f64::consts::LN_2)
}

/// Three-slot routing with XOR at the relay. Each slot gets `2n/3` uses, so
/// a packet of `k` bits needs `(2n/3)·½log₂(1+snr) ≥ k`, i.e.
/// `k/n = ⅓log₂(1+snr)`.
pub fn rate_pure_nc(snr: f64) -> Result<f64> {
    check_snr(snr)?;
    Ok(upper(snr) * 2.0 / 3.0)
}

/// Tangency points `(a, b)` (linear snr) of the common tangent to the joint
/// decoding and lattice curves. Above the line joining them time sharing
/// with power reallocation beats both schemes.
pub fn tangent_points() -> Result<(f64, f64)> {
    // Equal slopes force 1 + 2a = ½ + b. What remains is that the line
    // through (a, jd(a)) with that slope passes through (b, lattice(b)).
    let b_of = |a: f64| 2.0 * a + 0.5;
    let slope = |a: f64| 1.0 / (2.0 * (1.0 + 2.0 * a) * std::f64::consts::LN_2);
    let f = |a: f64| lattice(b_of(a)) - jd(a) - slope(a) * (b_of(a) - a);
    // Both curves have slope `slope(a)` at the tangency pair, which makes
    // f'(a) = slope(a).
    let df = slope;
    let (mut lo, mut hi) = (0.25, 10.0);
    if f(lo) >= 0.0 || f(hi) <= 0.0 {
        return Err(Error::NoConvergence("tangency not bracketed".into()));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..8 {
        let step = f(a) / df(a);
        a -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let residual = f(a);
    if residual.is_nan() || residual.abs() >= 1e-10 {
        return Err(Error::NoConvergence(format!("residual {residual}")));
    }
    Ok((a, b_of(a)))
}

/// The crossover window in dB.
pub fn crossover_window() -> Result<(f64, f64)> {
    let (a, b) = tangent_points()?;
    Ok((linear_to_db(a), linear_to_db(b)))
}

fn window() -> (f64, f64) {
    // The solver converges for these fixed curves; the closed form is
    // a = (e − 1)/2, b = e − ½.
    static W: std::sync::OnceLock<(f64, f64)> = std::sync::OnceLock::new();
    *W.get_or_init(|| tangent_points().expect("tangency of fixed curves"))
}

/// Upper concave envelope of the two achievable curves, with the fraction
/// `β*` of time given to joint decoding.
pub fn envelope(snr: f64) -> Result<(f64, f64)> {
    check_snr(snr)?;
    let (a, b) = window();
    Ok(if snr <= a {
        (jd(snr).max(lattice(snr)), 1.0)
    } else if snr >= b {
        (lattice(snr).max(jd(snr)), 0.0)
    } else {
        let beta = (b - snr) / (b - a);
        (beta * jd(a) + (1.0 - beta) * lattice(b), beta)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub snr: f64,
    pub snr_db: f64,
    pub upper: f64,
    pub lattice: f64,
    pub jd: f64,
    pub anc: f64,
    pub pure_nc: f64,
    pub envelope: f64,
    pub beta_star: f64,
}

impl RatePoint {
    pub fn at_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(invalid("snr_db", format!("{snr_db} is not finite")));
        }
        let snr = db_to_linear(snr_db);
        let (envelope, beta_star) = envelope(snr)?;
        Ok(RatePoint {
            snr,
            snr_db,
            upper: upper(snr),
            lattice: lattice(snr),
            jd: jd(snr),
            anc: rate_anc(snr)?,
            pure_nc: rate_pure_nc(snr)?,
            envelope,
            beta_star,
        })
    }

    pub fn csv_row(&self) -> String {
        [
            self.snr_db,
            self.upper,
            self.lattice,
            self.jd,
            self.envelope,
            self.anc,
            self.pure_nc,
            self.beta_star,
        ]
        .iter()
        .map(|&v| format_sig(v, 12))
        .collect::<Vec<_>>()
        .join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_db: f64,
    pub max_db: f64,
    pub step_db: f64,
}

impl GridSpec {
    pub fn new(min_db: f64, max_db: f64, step_db: f64) -> Result<Self> {
        let g = GridSpec {
            min_db,
            max_db,
            step_db,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_db.is_finite() && self.max_db.is_finite() && self.step_db.is_finite()) {
            return Err(invalid("grid", "bounds and step must be finite"));
        }
        if self.step_db <= 0.0 {
            return Err(invalid("step", format!("{} must be > 0", self.step_db)));
        }
        if self.max_db < self.min_db {
            return Err(invalid(
                "grid",
                format!("max {} < min {}", self.max_db, self.min_db),
            ));
        }
        let n = (self.max_db - self.min_db) / self.step_db;
        if n >= MAX_GRID_POINTS as f64 {
            return Err(Error::GuardExceeded {
                what: "grid points",
                value: n as u128,
                limit: MAX_GRID_POINTS as u128,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max_db - self.min_db) / self.step_db + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.min_db + i as f64 * self.step_db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub grid: GridSpec,
    pub points: Vec<RatePoint>,
}

impl RateCurve {
    pub fn evaluate(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let points = grid.points().map(RatePoint::at_db).collect::<Result<_>>()?;
        Ok(RateCurve { grid, points })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            s.push_str(&p.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Evaluates the grid and writes it as CSV.
pub fn emit_curve(grid: GridSpec, out: &Path) -> Result<RateCurve> {
    let curve = RateCurve::evaluate(grid)?;
    write_atomic(out, curve.to_csv().as_bytes())?;
    Ok(curve)
}
