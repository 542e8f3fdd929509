//! Self-similar Construction-A nested lattices.
//!
//! The coarse lattice is the scaled cube lattice `γq·Zⁿ`; the fine lattice is
//! `γ·(C + qZⁿ)` for a linear code `C ⊆ Z_qⁿ` given by a `k × n` generator.
//! Reduction modulo the coarse lattice is componentwise onto the half-open
//! cube `[−γq/2, γq/2)ⁿ`, and the codebook is the fine lattice folded into
//! that cube, i.e. the codewords of `C` with each residue mapped to its
//! representative in `[−q/2, q/2)`.
//!
//! Messages are numbered in base q: index `i` has digits
//! `u_j = ⌊i / q^j⌋ mod q` for `j = 0..k`, and maps to the codeword
//! `Σ_j u_j·G_j mod q`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::{derive_seed, tag, SimRng};

/// Largest codebook that will be enumerated.
pub const MAX_CODEBOOK: u64 = 1 << 20;

/// Folds a residue `0 <= r < q` into `[−q/2, q/2)`.
#[inline]
pub fn fold_residue(r: u32, q: u32) -> i64 {
    if 2 * r as u64 >= q as u64 {
        r as i64 - q as i64
    } else {
        r as i64
    }
}

/// `x mod side` onto `[−side/2, side/2)`.
#[inline]
pub fn reduce_scalar(x: f64, side: f64) -> f64 {
    let mut r = x - side * (x / side + 0.5).floor();
    // Rounding in the line above can land exactly on the open end.
    if r >= side / 2.0 {
        r -= side;
    } else if r < -side / 2.0 {
        r += side;
    }
    r
}

/// The shaping lattice `γq·Zⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseLattice {
    dim: usize,
    modulus: u32,
    scale: f64,
}

impl CoarseLattice {
    /// Coarse lattice whose second moment equals `power`: `γ = √(12P)/q`.
    pub fn new(dim: usize, modulus: u32, power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(invalid("power", format!("{power} must be positive")));
        }
        Self::with_scale(dim, modulus, (12.0 * power).sqrt() / modulus as f64)
    }

    pub fn with_scale(dim: usize, modulus: u32, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if modulus < 2 {
            return Err(invalid("modulus", format!("{modulus} < 2")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("scale", format!("{scale} must be positive")));
        }
        Ok(CoarseLattice {
            dim,
            modulus,
            scale,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// γ, the fine-lattice spacing.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Edge length `γq` of the Voronoi cube.
    pub fn side(&self) -> f64 {
        self.scale * self.modulus as f64
    }

    /// Per-dimension second moment `(γq)²/12`.
    pub fn second_moment(&self) -> f64 {
        let s = self.side();
        s * s / 12.0
    }

    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    /// `σ² / V^(2/n)`; exactly 1/12 for a cube.
    pub fn normalized_second_moment(&self) -> f64 {
        self.second_moment() / self.volume().powf(2.0 / self.dim as f64)
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// `x mod Λc`.
    pub fn reduce(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let side = self.side();
        Ok(x.iter().map(|&v| reduce_scalar(v, side)).collect())
    }
}

/// `x mod Λc` onto the half-open cube.
pub fn mod_coarse(x: &[f64], coarse: &CoarseLattice) -> Result<Vec<f64>> {
    coarse.reduce(x)
}

/// A linear code over `Z_q` given by its generator rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearCode {
    modulus: u32,
    generator: Vec<Vec<u32>>,
    dim: usize,
}

impl LinearCode {
    pub fn new(modulus: u32, dim: usize, generator: Vec<Vec<u32>>) -> Result<Self> {
        if modulus < 2 {
            return Err(invalid("modulus", format!("{modulus} < 2")));
        }
        if dim == 0 {
            return Err(invalid("dim", "must be at least 1"));
        }
        if generator.len() > dim {
            return Err(invalid(
                "generator",
                format!("{} rows exceed length {dim}", generator.len()),
            ));
        }
        for row in &generator {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if let Some(&v) = row.iter().find(|&&v| v >= modulus) {
                return Err(invalid(
                    "generator",
                    format!("entry {v} not reduced mod {modulus}"),
                ));
            }
        }
        Ok(LinearCode {
            modulus,
            generator,
            dim,
        })
    }

    /// The whole space `Z_qⁿ` (uncoded cube constellation).
    pub fn identity(modulus: u32, dim: usize) -> Result<Self> {
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| u32::from(i == j)).collect())
            .collect();
        Self::new(modulus, dim, rows)
    }

    /// Systematic generator `[I_k | A]` with `A[i][j] = (i + j + 1) mod q`.
    ///
    /// This is a convenient full-rank default, not an optimized code.
    pub fn systematic(modulus: u32, rank: usize, dim: usize) -> Result<Self> {
        if rank > dim {
            return Err(invalid("rank", format!("{rank} > length {dim}")));
        }
        let rows = (0..rank)
            .map(|i| {
                (0..dim)
                    .map(|j| {
                        if j < rank {
                            u32::from(i == j)
                        } else {
                            ((i + (j - rank) + 1) as u64 % modulus as u64) as u32
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(modulus, dim, rows)
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn rank(&self) -> usize {
        self.generator.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &[Vec<u32>] {
        &self.generator
    }

    /// `(k/n)·log₂ q` bits per dimension.
    pub fn rate(&self) -> f64 {
        self.rank() as f64 / self.dim as f64 * (self.modulus as f64).log2()
    }

    fn is_identity(&self) -> bool {
        self.rank() == self.dim
            && self
                .generator
                .iter()
                .enumerate()
                .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == u32::from(i == j)))
    }

    /// Codeword residues for message `index` (digits are not range-checked).
    fn codeword(&self, index: u64) -> Vec<u32> {
        let q = self.modulus as u64;
        let mut acc = vec![0u64; self.dim];
        let mut rest = index;
        for row in &self.generator {
            let digit = rest % q;
            rest /= q;
            if digit == 0 {
                continue;
            }
            for (a, &g) in acc.iter_mut().zip(row) {
                *a = (*a + digit * g as u64) % q;
            }
        }
        acc.into_iter().map(|v| v as u32).collect()
    }
}

/// JSON descriptor sufficient to rebuild a codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookDescriptor {
    pub n: usize,
    pub q: u32,
    pub k: usize,
    #[serde(rename = "G")]
    pub generator: Vec<Vec<u32>>,
    #[serde(rename = "P")]
    pub power: f64,
}

/// A point of the codebook `Λf ∩ V(Λc)` (or an arbitrary vector when
/// `index` is `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coords: Vec<f64>,
    pub index: Option<u64>,
}

/// A dither vector uniform over `V(Λc)`, reproducible from its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dither {
    pub values: Vec<f64>,
    pub seed: u64,
}

impl Dither {
    pub fn sample(seed: u64, coarse: &CoarseLattice) -> Self {
        let mut rng = SimRng::from_seed(seed);
        let side = coarse.side();
        let values = (0..coarse.dim())
            .map(|_| reduce_scalar((rng.uniform() - 0.5) * side, side))
            .collect();
        Dither { values, seed }
    }

    /// Dither of `node` in `session`, derived from a shared master seed so
    /// the relay and both end nodes can regenerate it.
    pub fn for_node(master: u64, session: u64, node: u64, coarse: &CoarseLattice) -> Self {
        Self::sample(derive_seed(master, &[tag::DITHER, session, node]), coarse)
    }

    pub fn zero(dim: usize) -> Self {
        Dither {
            values: vec![0.0; dim],
            seed: 0,
        }
    }
}

/// Free-function form of [`Dither::sample`].
pub fn dither_sample(seed: u64, coarse: &CoarseLattice) -> Dither {
    Dither::sample(seed, coarse)
}

/// Second moments, volumes and radii of a nested pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDiagnostics {
    pub coarse_second_moment: f64,
    pub coarse_volume: f64,
    pub coarse_normalized_second_moment: f64,
    pub fine_volume: f64,
    pub nesting_ratio: f64,
    /// Largest distance to the fine lattice seen over the sampled points;
    /// a lower estimate of the covering radius.
    pub fine_covering_radius_estimate: f64,
    /// Radius of the ball with the fine cell's volume.
    pub fine_effective_radius: f64,
}

/// Fine/coarse pair with its enumerated codebook.
#[derive(Debug, Clone)]
pub struct NestedLatticePair {
    coarse: CoarseLattice,
    code: LinearCode,
    power: f64,
    codebook: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, u64>,
    identity: bool,
}

impl NestedLatticePair {
    /// Pair whose coarse lattice has second moment `power`.
    pub fn new(code: LinearCode, power: f64) -> Result<Self> {
        let coarse = CoarseLattice::new(code.dim(), code.modulus(), power)?;
        Self::build(code, coarse)
    }

    /// Pair with an explicit fine spacing γ.
    pub fn with_scale(code: LinearCode, scale: f64) -> Result<Self> {
        let coarse = CoarseLattice::with_scale(code.dim(), code.modulus(), scale)?;
        Self::build(code, coarse)
    }

    pub fn from_descriptor(d: &CodebookDescriptor) -> Result<Self> {
        let code = LinearCode::new(d.q, d.n, d.generator.clone())?;
        if code.rank() != d.k {
            return Err(invalid(
                "k",
                format!("{} but generator has {} rows", d.k, code.rank()),
            ));
        }
        Self::new(code, d.power)
    }

    fn build(code: LinearCode, coarse: CoarseLattice) -> Result<Self> {
        let size = (code.modulus() as u128).pow(code.rank() as u32);
        if size > MAX_CODEBOOK as u128 {
            return Err(Error::GuardExceeded {
                what: "q^k",
                value: size,
                limit: MAX_CODEBOOK as u128,
            });
        }
        let size = size as u64;
        let mut codebook = Vec::with_capacity(size as usize);
        let mut lookup = HashMap::with_capacity(size as usize);
        for i in 0..size {
            let c = code.codeword(i);
            if lookup.insert(c.clone(), i).is_some() {
                return Err(Error::RankDeficient {
                    expected: code.rank(),
                    found: lookup.len() as u64,
                });
            }
            codebook.push(c);
        }
        let identity = code.is_identity();
        Ok(NestedLatticePair {
            power: coarse.second_moment(),
            coarse,
            code,
            codebook,
            lookup,
            identity,
        })
    }

    pub fn coarse(&self) -> &CoarseLattice {
        &self.coarse
    }

    pub fn code(&self) -> &LinearCode {
        &self.code
    }

    pub fn dim(&self) -> usize {
        self.coarse.dim()
    }

    pub fn modulus(&self) -> u32 {
        self.coarse.modulus()
    }

    /// Transmit power (second moment of the coarse lattice).
    pub fn power(&self) -> f64 {
        self.power
    }

    /// Number of codebook points, `q^k`.
    pub fn size(&self) -> u64 {
        self.codebook.len() as u64
    }

    /// Coding rate in bits per dimension.
    pub fn rate(&self) -> f64 {
        (self.size() as f64).log2() / self.dim() as f64
    }

    pub fn descriptor(&self) -> CodebookDescriptor {
        CodebookDescriptor {
            n: self.dim(),
            q: self.modulus(),
            k: self.code.rank(),
            generator: self.code.generator().to_vec(),
            power: self.power,
        }
    }

    fn check_index(&self, index: u64) -> Result<()> {
        if index >= self.size() {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.size(),
            });
        }
        Ok(())
    }

    /// Codeword residues (in `0..q`) of message `index`.
    pub fn residues(&self, index: u64) -> Result<&[u32]> {
        self.check_index(index)?;
        Ok(&self.codebook[index as usize])
    }

    pub fn index_of_residues(&self, residues: &[u32]) -> Option<u64> {
        self.lookup.get(residues).copied()
    }

    fn point_from_residues(&self, index: u64) -> LatticePoint {
        let q = self.modulus();
        let g = self.coarse.scale();
        LatticePoint {
            coords: self.codebook[index as usize]
                .iter()
                .map(|&r| g * fold_residue(r, q) as f64)
                .collect(),
            index: Some(index),
        }
    }

    /// Message index → codebook point.
    pub fn encode(&self, index: u64) -> Result<LatticePoint> {
        self.check_index(index)?;
        Ok(self.point_from_residues(index))
    }

    /// Codebook index of a point, if it lies on the fine lattice.
    pub fn index_of(&self, point: &LatticePoint) -> Option<u64> {
        if let Some(i) = point.index {
            return (i < self.size()).then_some(i);
        }
        if point.coords.len() != self.dim() {
            return None;
        }
        let q = self.modulus() as i64;
        let g = self.coarse.scale();
        let mut res = Vec::with_capacity(self.dim());
        for &c in &point.coords {
            let m = (c / g).round();
            if (c - m * g).abs() > 1e-9 * g.max(1.0) {
                return None;
            }
            res.push((m as i64).rem_euclid(q) as u32);
        }
        self.index_of_residues(&res)
    }

    fn require_index(&self, p: &LatticePoint) -> Result<u64> {
        self.index_of(p)
            .ok_or_else(|| invalid("point", "not a codebook point"))
    }

    /// Nearest fine-lattice point to `x`, folded into `V(Λc)`.
    ///
    /// Distances are taken modulo the coarse lattice (the true fine-lattice
    /// quantizer), so points near the cube faces may snap to a codeword on
    /// the opposite face. Ties go to the lowest message index.
    pub fn quantize(&self, x: &[f64]) -> Result<LatticePoint> {
        self.coarse.check_dim(x.len())?;
        let index = if self.identity {
            self.quantize_cube(x)
        } else {
            self.quantize_search(x)
        };
        Ok(self.point_from_residues(index))
    }

    fn quantize_cube(&self, x: &[f64]) -> u64 {
        let q = self.modulus() as i64;
        let g = self.coarse.scale();
        let side = self.coarse.side();
        let mut index = 0u64;
        let mut place = 1u64;
        for &v in x {
            let t = reduce_scalar(v, side) / g;
            let lo = t.floor();
            let (d_lo, d_hi) = (t - lo, lo + 1.0 - t);
            let r_lo = (lo as i64).rem_euclid(q);
            let r_hi = (lo as i64 + 1).rem_euclid(q);
            let r = if d_lo < d_hi {
                r_lo
            } else if d_hi < d_lo {
                r_hi
            } else {
                r_lo.min(r_hi)
            };
            index += r as u64 * place;
            place *= q as u64;
        }
        index
    }

    fn quantize_search(&self, x: &[f64]) -> u64 {
        let q = self.modulus();
        let g = self.coarse.scale();
        let side = self.coarse.side();
        let mut best = (f64::INFINITY, 0u64);
        for (i, cw) in self.codebook.iter().enumerate() {
            let mut d = 0.0;
            for (&v, &r) in x.iter().zip(cw) {
                let e = reduce_scalar(v - g * fold_residue(r, q) as f64, side);
                d += e * e;
                if d >= best.0 {
                    break;
                }
            }
            if d < best.0 {
                best = (d, i as u64);
            }
        }
        best.1
    }

    /// Index of `(Σ coeffᵢ·tᵢ) mod Λc` for codebook indices `tᵢ`.
    pub fn combine(&self, terms: &[(i64, u64)]) -> Result<u64> {
        let q = self.modulus() as i64;
        let mut acc = vec![0i64; self.dim()];
        for &(c, idx) in terms {
            let cw = self.residues(idx)?;
            let c = c.rem_euclid(q);
            for (a, &r) in acc.iter_mut().zip(cw) {
                *a = (*a + c * r as i64) % q;
            }
        }
        let res: Vec<u32> = acc.into_iter().map(|v| v as u32).collect();
        // Closure under addition: always a codeword.
        Ok(self.lookup[&res])
    }

    /// `(a + b) mod Λc`.
    pub fn modulo_sum(&self, a: &LatticePoint, b: &LatticePoint) -> Result<LatticePoint> {
        let i = self.combine(&[(1, self.require_index(a)?), (1, self.require_index(b)?)])?;
        Ok(self.point_from_residues(i))
    }

    /// `(a − b) mod Λc`.
    pub fn modulo_diff(&self, a: &LatticePoint, b: &LatticePoint) -> Result<LatticePoint> {
        let i = self.combine(&[(1, self.require_index(a)?), (-1, self.require_index(b)?)])?;
        Ok(self.point_from_residues(i))
    }

    /// Second moments, volumes and radius estimates. The covering radius is
    /// estimated from `samples` uniform points in `V(Λc)`.
    pub fn diagnostics(&self, samples: usize, seed: u64) -> Result<LatticeDiagnostics> {
        let n = self.dim();
        let coarse_volume = self.coarse.volume();
        let fine_volume = coarse_volume / self.size() as f64;
        let mut rng = SimRng::from_seed(seed);
        let side = self.coarse.side();
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| (rng.uniform() - 0.5) * side).collect();
            let p = self.quantize(&x)?;
            let d2: f64 = x
                .iter()
                .zip(&p.coords)
                .map(|(a, b)| {
                    let e = reduce_scalar(a - b, side);
                    e * e
                })
                .sum();
            worst = worst.max(d2.sqrt());
        }
        Ok(LatticeDiagnostics {
            coarse_second_moment: self.coarse.second_moment(),
            coarse_volume,
            coarse_normalized_second_moment: self.coarse.normalized_second_moment(),
            fine_volume,
            nesting_ratio: self.size() as f64,
            fine_covering_radius_estimate: worst,
            fine_effective_radius: crate::minangle::ball_radius_for_volume(n, fine_volume),
        })
    }
}

/// Free-function form of [`NestedLatticePair::quantize`].
pub fn quantize_fine(x: &[f64], pair: &NestedLatticePair) -> Result<LatticePoint> {
    pair.quantize(x)
}

pub fn encode_message(index: u64, pair: &NestedLatticePair) -> Result<LatticePoint> {
    pair.encode(index)
}

pub fn modulo_sum(
    a: &LatticePoint,
    b: &LatticePoint,
    pair: &NestedLatticePair,
) -> Result<LatticePoint> {
    pair.modulo_sum(a, b)
}
