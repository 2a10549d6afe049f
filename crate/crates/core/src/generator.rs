//! Seeded random generation of the seven confusion-matrix families used
//! by the simulation harness. Each replicate draws a fresh probability
//! template for its family, then places exactly N cases by categorical
//! sampling, so structural zeros hold exactly and totals are exact.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::matrix::ConfusionMatrix;

/// Errors from family specification.
#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("family {family} needs at least {min} classes, got {k}")]
    TooFewClasses {
        family: &'static str,
        min: usize,
        k: usize,
    },
    #[error("total count {n} is below the class count {k}")]
    TotalTooSmall { n: u64, k: usize },
    #[error("unknown family name: {0}")]
    UnknownFamily(String),
}

/// The seven structural families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Diagonal,
    DiagonallyDominant,
    Hollow,
    OffDiagonallyDominant,
    NearlyUniform,
    Imbalanced32,
    Imbalanced14,
}

/// Every family, in stream-code order.
pub const ALL_FAMILIES: [Family; 7] = [
    Family::Diagonal,
    Family::DiagonallyDominant,
    Family::Hollow,
    Family::OffDiagonallyDominant,
    Family::NearlyUniform,
    Family::Imbalanced32,
    Family::Imbalanced14,
];

impl Family {
    /// Stable name used on the CLI and in emitted files.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Diagonal => "diagonal",
            Family::DiagonallyDominant => "diagonally-dominant",
            Family::Hollow => "hollow",
            Family::OffDiagonallyDominant => "off-diagonally-dominant",
            Family::NearlyUniform => "nearly-uniform",
            Family::Imbalanced32 => "imbalanced-32",
            Family::Imbalanced14 => "imbalanced-14",
        }
    }

    /// Stable RNG stream code; never reordered.
    pub fn code(&self) -> u64 {
        match self {
            Family::Diagonal => 1,
            Family::DiagonallyDominant => 2,
            Family::Hollow => 3,
            Family::OffDiagonallyDominant => 4,
            Family::NearlyUniform => 5,
            Family::Imbalanced32 => 6,
            Family::Imbalanced14 => 7,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_FAMILIES
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| GeneratorError::UnknownFamily(s.to_string()))
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A family together with its class count and total count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySpec {
    family: Family,
    k: usize,
    n: u64,
}

impl FamilySpec {
    /// Validates K >= 2 (>= 3 for the three-large-class family) and N >= K.
    pub fn new(family: Family, k: usize, n: u64) -> Result<Self, GeneratorError> {
        let min = if family == Family::Imbalanced32 { 3 } else { 2 };
        if k < min {
            return Err(GeneratorError::TooFewClasses {
                family: family.name(),
                min,
                k,
            });
        }
        if n < k as u64 {
            return Err(GeneratorError::TotalTooSmall { n, k });
        }
        Ok(Self { family, k, n })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Master seed plus the stream derivation rule. Generation is ChaCha8
/// (rand_chacha 0.3): the master seed keys the cipher and each
/// (family, replicate) pair selects stream (code << 48) | replicate,
/// so replicates are independent of execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    master_seed: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Dedicated generator for one replicate; replicate must stay below 2^48.
    pub fn replicate_rng(&self, family: Family, replicate: u64) -> ChaCha8Rng {
        debug_assert!(replicate < 1 << 48);
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream((family.code() << 48) | replicate);
        rng
    }
}

// Uniform double in [0, 1) from the top 53 bits of one generator word.
fn u01(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    (rng.next_u64() >> 11) as f64 * SCALE
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * u01(rng)
}

// Unit exponential by inversion; u < 1 keeps the log argument positive.
fn exp1(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - u01(rng)).ln()
}

// Flat simplex point as normalized unit exponentials.
fn simplex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..m).map(|_| exp1(rng)).collect();
    let sum: f64 = w.iter().sum();
    if sum == 0.0 {
        // Measure-zero draw; keep the template valid.
        return vec![1.0 / m as f64; m];
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

// Cells drawn Uniform(0.8, 1.2) in the given order, normalized to `mass`.
fn banded(rng: &mut ChaCha8Rng, cells: &[usize], mass: f64, w: &mut [f64]) {
    let draws: Vec<f64> = (0..cells.len()).map(|_| uniform(rng, 0.8, 1.2)).collect();
    let sum: f64 = draws.iter().sum();
    for (&cell, d) in cells.iter().zip(&draws) {
        w[cell] = mass * d / sum;
    }
}

fn diagonal_cells(k: usize) -> Vec<usize> {
    (0..k).map(|i| i * k + i).collect()
}

fn off_diagonal_cells(k: usize) -> Vec<usize> {
    (0..k * k).filter(|i| i / k != i % k).collect()
}

// Mass delta on the diagonal and 1-delta off it, each split by a flat
// simplex; the delta draw precedes the splits so fixtures stay stable.
fn split_template(rng: &mut ChaCha8Rng, k: usize, delta: f64, w: &mut [f64]) {
    let diag = simplex(rng, k);
    for (i, cell) in diagonal_cells(k).into_iter().enumerate() {
        w[cell] = delta * diag[i];
    }
    let off = simplex(rng, k * k - k);
    for (i, cell) in off_diagonal_cells(k).into_iter().enumerate() {
        w[cell] = (1.0 - delta) * off[i];
    }
}

/// Draws one probability template for the family: non-negative K*K
/// weights, row-major, summing to 1, with the family's structural zeros
/// holding exactly.
pub fn family_template(spec: &FamilySpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let k = spec.k;
    let mut w = vec![0.0; k * k];
    match spec.family {
        Family::Diagonal => {
            let diag = simplex(rng, k);
            for (i, cell) in diagonal_cells(k).into_iter().enumerate() {
                w[cell] = diag[i];
            }
        }
        Family::DiagonallyDominant => {
            let delta = uniform(rng, 0.7, 0.95);
            split_template(rng, k, delta, &mut w);
        }
        Family::Hollow => {
            let off = simplex(rng, k * k - k);
            for (i, cell) in off_diagonal_cells(k).into_iter().enumerate() {
                w[cell] = off[i];
            }
        }
        Family::OffDiagonallyDominant => {
            let delta = uniform(rng, 0.02, 0.2);
            split_template(rng, k, delta, &mut w);
        }
        Family::NearlyUniform => {
            let cells: Vec<usize> = (0..k * k).collect();
            banded(rng, &cells, 1.0, &mut w);
        }
        Family::Imbalanced32 => {
            let large = simplex(rng, 3);
            for i in 0..3 {
                w[i * k + i] = 0.5 * large[i];
            }
            let rest: Vec<usize> = (0..k * k)
                .filter(|&c| c != 0 && c != k + 1 && c != 2 * k + 2)
                .collect();
            banded(rng, &rest, 0.5, &mut w);
        }
        Family::Imbalanced14 => {
            w[0] = 0.9;
            banded(rng, &off_diagonal_cells(k), 0.1, &mut w);
        }
    }
    w
}

// Places n cases over the positive-weight cells; zero-weight cells are
// excluded from the cumulative table, so they can never be selected.
fn sample_counts(template: &[f64], n: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut cells = Vec::new();
    let mut cums = Vec::new();
    let mut acc = 0.0;
    for (cell, &w) in template.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            cells.push(cell);
            cums.push(acc);
        }
    }
    let total = acc;
    let mut counts = vec![0u64; template.len()];
    for _ in 0..n {
        let u = u01(rng) * total;
        // u < total except for a rounding edge, which the clamp covers.
        let idx = cums.partition_point(|&c| c <= u).min(cells.len() - 1);
        counts[cells[idx]] += 1;
    }
    counts
}

/// Generates one replicate: template redraw, then N categorical draws.
/// A pure function of (spec, replicate, master seed).
pub fn generate(spec: &FamilySpec, replicate: u64, seed: &SeededRng) -> ConfusionMatrix {
    let mut rng = seed.replicate_rng(spec.family, replicate);
    let template = family_template(spec, &mut rng);
    let counts = sample_counts(&template, spec.n, &mut rng);
    ConfusionMatrix::from_flat(counts, spec.k).expect("sampled counts form a valid matrix")
}
