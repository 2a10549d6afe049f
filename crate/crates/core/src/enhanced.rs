//! Metrics on dimension-reduced indicator sequences: the shared zeros of the
//! per-class sequences are discarded so hollow matrices score -1, not just
//! "somewhere above -1". Includes the extended MCC product form and the
//! rho-parameterized family with per-class reduced length
//! N_k = alpha_k + beta_k - rho*C_kk.

use thiserror::Error;

use crate::matrix::ConfusionMatrix;
use crate::multiclass::WeightVector;
use crate::score::Score;

/// Errors from constructing a reduction parameter.
#[derive(Debug, Error, PartialEq)]
pub enum RhoError {
    #[error("rho must be a finite real < 1, got {0}")]
    OutOfRange(f64),
}

/// Reduction parameter rho < 1. At rho = 0 the family reproduces the plain
/// enhanced metrics; rho -> 1 removes as many shared zeros as possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoParameter(f64);

impl RhoParameter {
    /// Accepts any finite rho < 1; rho = 1 would make the per-class terms
    /// 0/0 on perfectly classified classes.
    pub fn new(rho: f64) -> Result<Self, RhoError> {
        if !rho.is_finite() || rho >= 1.0 {
            return Err(RhoError::OutOfRange(rho));
        }
        Ok(Self(rho))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for RhoParameter {
    fn default() -> Self {
        Self(0.9)
    }
}

/// One class's contribution to the rho-reduced mean: the Pearson coefficient
/// of the reduced pair, plus the reduced length it was computed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerClassTerm {
    pub class: usize,
    pub delta: Score,
    pub n_k: f64,
}

// True when some class with cases violates the reduced-dimension assumption
// alpha_k + beta_k < N.
fn dimension_assumption_violated(cm: &ConfusionMatrix) -> bool {
    let m = cm.marginals();
    (0..cm.k()).any(|k| {
        let ab = m.alpha[k] + m.beta[k];
        ab > 0 && ab >= m.total
    })
}

/// R_K over the reduced per-class sequences, in [-1, 1]: equals
/// [sum_k C_kk/(alpha_k+beta_k)] / [sum_k alpha_k*beta_k/(alpha_k+beta_k)^2] - 1.
///
/// Absent classes (alpha_k = beta_k = 0) carry no information and are
/// removed. Diagonal matrices score exactly 1, hollow matrices exactly -1.
pub fn er_k(cm: &ConfusionMatrix) -> Score {
    let m = cm.marginals();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut retained = 0usize;
    for k in 0..cm.k() {
        let (a, b) = (m.alpha[k], m.beta[k]);
        let ab = a + b;
        if ab == 0 {
            continue;
        }
        retained += 1;
        let ab = ab as f64;
        num += cm.count(k, k) as f64 / ab;
        den += (a as f64 * b as f64) / (ab * ab);
    }
    if retained == 0 || den == 0.0 {
        return Score::undefined();
    }
    Score::new(num / den - 1.0)
}

/// Mean of the per-class reduced-sequence coefficients, in [-1, 1]:
/// (1/K') * sum_k (alpha_k+beta_k)*C_kk/(alpha_k*beta_k) - 1 over the K'
/// classes with alpha_k*beta_k > 0; dropping a class flags the result.
///
/// With explicit weights the given w_k replace 1/K' and are not
/// renormalized when classes are dropped.
pub fn empc1(cm: &ConfusionMatrix, weights: Option<&WeightVector>) -> Score {
    if let Some(w) = weights {
        assert_eq!(w.len(), cm.k(), "weight count must equal K");
    }
    let m = cm.marginals();
    let mut terms = Vec::with_capacity(cm.k());
    let mut dropped = false;
    for k in 0..cm.k() {
        let (a, b) = (m.alpha[k], m.beta[k]);
        if a == 0 || b == 0 {
            dropped = true;
            continue;
        }
        let term = (a + b) as f64 * cm.count(k, k) as f64 / (a as f64 * b as f64);
        terms.push((k, term));
    }
    if terms.is_empty() {
        return Score::undefined();
    }
    let value = match weights {
        Some(w) => terms.iter().map(|&(k, t)| w.get(k) * t).sum::<f64>() - 1.0,
        None => terms.iter().map(|&(_, t)| t).sum::<f64>() / terms.len() as f64 - 1.0,
    };
    let score = if dropped {
        Score::flagged(value)
    } else {
        Score::new(value)
    };
    score.warn_if(dimension_assumption_violated(cm))
}

/// MPC2 over the reduced sequences; identical to [`er_k`] and tested as an
/// identity.
pub fn empc2(cm: &ConfusionMatrix) -> Score {
    er_k(cm)
}

/// Extended MCC, in [-1, 1]:
/// prod_k C_kk/sqrt(alpha_k*beta_k) - prod_k sqrt((alpha_k-C_kk)(beta_k-C_kk)/(alpha_k*beta_k)).
///
/// Every per-class factor lies in [0, 1], so the products cannot overflow at
/// any K or N. Absent classes are removed; a class with exactly one zero
/// marginal has C_kk = 0 and contributes factor 0 to the first product and
/// factor 1 to the second (the zero-marginal limit, with sqrt(alpha_k*beta_k)
/// cancelled analytically). Reduces to MCC for K = 2.
pub fn emcc(cm: &ConfusionMatrix) -> Score {
    let m = cm.marginals();
    let mut t1 = 1.0;
    let mut t2 = 1.0;
    let mut retained = 0usize;
    for k in 0..cm.k() {
        let (a, b) = (m.alpha[k], m.beta[k]);
        if a == 0 && b == 0 {
            continue;
        }
        retained += 1;
        if a == 0 || b == 0 {
            t1 = 0.0;
            continue;
        }
        let c = cm.count(k, k);
        let ab = a as f64 * b as f64;
        t1 *= c as f64 / ab.sqrt();
        t2 *= (((a - c) as f64 * (b - c) as f64) / ab).sqrt();
    }
    if retained == 0 {
        return Score::undefined();
    }
    Score::new(t1 - t2)
}

/// Pearson coefficient of class k's pair after reducing its length to
/// N_k = alpha_k + beta_k - rho*C_kk:
/// Delta_k = (N_k*C_kk - alpha_k*beta_k) / sqrt(alpha_k*beta_k*(alpha_k-rho*C_kk)*(beta_k-rho*C_kk)).
///
/// A class with alpha_k*beta_k = 0 is degenerate and yields a flagged delta.
pub fn delta_k(cm: &ConfusionMatrix, k: usize, rho: RhoParameter) -> PerClassTerm {
    assert!(k < cm.k(), "class index out of range");
    let m = cm.marginals();
    let (a, b) = (m.alpha[k] as f64, m.beta[k] as f64);
    let c = cm.count(k, k) as f64;
    let rc = rho.value() * c;
    let n_k = a + b - rc;
    if a == 0.0 || b == 0.0 {
        return PerClassTerm {
            class: k,
            delta: Score::undefined(),
            n_k,
        };
    }
    let num = n_k * c - a * b;
    let den = (a * b * (a - rc) * (b - rc)).sqrt();
    PerClassTerm {
        class: k,
        delta: Score::new(num / den),
        n_k,
    }
}

/// Mean of the per-class Delta_k over the classes with alpha_k*beta_k > 0;
/// dropping a class flags the result. Weights behave as in [`empc1`].
pub fn empc1_rho(
    cm: &ConfusionMatrix,
    rho: RhoParameter,
    weights: Option<&WeightVector>,
) -> Score {
    if let Some(w) = weights {
        assert_eq!(w.len(), cm.k(), "weight count must equal K");
    }
    let mut terms = Vec::with_capacity(cm.k());
    let mut dropped = false;
    for k in 0..cm.k() {
        let term = delta_k(cm, k, rho);
        if term.delta.defined {
            terms.push((k, term.delta.value));
        } else {
            dropped = true;
        }
    }
    if terms.is_empty() {
        return Score::undefined();
    }
    let value = match weights {
        Some(w) => terms.iter().map(|&(k, d)| w.get(k) * d).sum(),
        None => terms.iter().map(|&(_, d)| d).sum::<f64>() / terms.len() as f64,
    };
    let score = if dropped {
        Score::flagged(value)
    } else {
        Score::new(value)
    };
    score.warn_if(dimension_assumption_violated(cm))
}

/// R_K form at the rho-reduced dimension, with per-class terms carrying
/// their own 1/N_k^2 normalization. At rho = 0 this equals [`er_k`].
pub fn er_k_rho(cm: &ConfusionMatrix, rho: RhoParameter) -> Score {
    let m = cm.marginals();
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    let mut retained = 0usize;
    for k in 0..cm.k() {
        let (a, b) = (m.alpha[k] as f64, m.beta[k] as f64);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        retained += 1;
        let c = cm.count(k, k) as f64;
        let rc = rho.value() * c;
        let n_k = a + b - rc;
        let nk2 = n_k * n_k;
        num += (n_k * c - a * b) / nk2;
        da += a * (b - rc) / nk2;
        db += b * (a - rc) / nk2;
    }
    if retained == 0 || da <= 0.0 || db <= 0.0 {
        return Score::undefined();
    }
    Score::new(num / (da.sqrt() * db.sqrt()))
}

/// MPC2 form at the rho-reduced dimension. At rho = 0 this equals [`er_k`].
pub fn empc2_rho(cm: &ConfusionMatrix, rho: RhoParameter) -> Score {
    let m = cm.marginals();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut retained = 0usize;
    for k in 0..cm.k() {
        let (a, b) = (m.alpha[k] as f64, m.beta[k] as f64);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        retained += 1;
        let c = cm.count(k, k) as f64;
        let rc = rho.value() * c;
        let n_k = a + b - rc;
        let nk2 = n_k * n_k;
        num += (n_k * c - a * b) / nk2;
        den += (a * b * (a - rc) * (b - rc)).sqrt() / nk2;
    }
    if retained == 0 || den == 0.0 {
        return Score::undefined();
    }
    Score::new(num / den)
}
