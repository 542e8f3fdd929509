//! Exact modulo-lattice arithmetic on scaled integers.
//!
//! A vector is stored as integer numerators over a common denominator, in
//! units of the fine spacing γ: coordinate `i` is `γ·num[i]/den`. Since γ
//! never has to be evaluated, identities such as
//! `(x₁ + x₂ + d₁ + d₂) mod Λc = (t₁ + t₂) mod Λc` hold with zero tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{fold_residue, CoarseLattice, NestedLatticePair};
use crate::sim::SimRng;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScaledVector {
    pub num: Vec<i128>,
    pub den: i128,
}

impl ScaledVector {
    pub fn zero(dim: usize, den: i128) -> Self {
        ScaledVector {
            num: vec![0; dim],
            den,
        }
    }

    /// Exact coordinates of codebook point `index`.
    pub fn from_codeword(pair: &NestedLatticePair, index: u64, den: i128) -> Result<Self> {
        let q = pair.modulus();
        Ok(ScaledVector {
            num: pair
                .residues(index)?
                .iter()
                .map(|&r| fold_residue(r, q) as i128 * den)
                .collect(),
            den,
        })
    }

    /// Uniform sample from the grid `(1/den)·Zⁿ` restricted to the half-open
    /// coarse cell. `q·den` must be even so the cell is symmetric.
    pub fn dither(seed: u64, coarse: &CoarseLattice, den: i128) -> Result<Self> {
        let span = coarse.modulus() as i128 * den;
        if den <= 0 || span % 2 != 0 {
            return Err(invalid(
                "den",
                format!("q*den = {span} must be positive and even"),
            ));
        }
        let mut rng = SimRng::from_seed(seed);
        Ok(ScaledVector {
            num: (0..coarse.dim())
                .map(|_| rng.below(span as u64) as i128 - span / 2)
                .collect(),
            den,
        })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.num.len() != other.num.len() {
            return Err(Error::DimensionMismatch {
                expected: self.num.len(),
                got: other.num.len(),
            });
        }
        if self.den != other.den {
            return Err(invalid("den", format!("{} vs {}", self.den, other.den)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(ScaledVector {
            num: self
                .num
                .iter()
                .zip(&other.num)
                .map(|(a, b)| a + b)
                .collect(),
            den: self.den,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(ScaledVector {
            num: self
                .num
                .iter()
                .zip(&other.num)
                .map(|(a, b)| a - b)
                .collect(),
            den: self.den,
        })
    }

    /// Reduction modulo `γq·Zⁿ` onto `[−q/2, q/2)` (in units of γ).
    pub fn reduce(&self, modulus: u32) -> Self {
        let span = modulus as i128 * self.den;
        ScaledVector {
            num: self
                .num
                .iter()
                .map(|&v| {
                    let r = v.rem_euclid(span);
                    if 2 * r >= span {
                        r - span
                    } else {
                        r
                    }
                })
                .collect(),
            den: self.den,
        }
    }

    /// Codebook index if this vector is a fine-lattice point.
    pub fn codeword_index(&self, pair: &NestedLatticePair) -> Option<u64> {
        let q = pair.modulus() as i128;
        let res: Option<Vec<u32>> = self
            .num
            .iter()
            .map(|&v| (v % self.den == 0).then(|| (v / self.den).rem_euclid(q) as u32))
            .collect();
        pair.index_of_residues(&res?)
    }

    pub fn to_f64(&self, scale: f64) -> Vec<f64> {
        self.num
            .iter()
            .map(|&v| scale * v as f64 / self.den as f64)
            .collect()
    }
}
