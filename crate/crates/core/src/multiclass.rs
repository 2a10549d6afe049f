//! Trace-form R_K, the per-class Pearson matrix with its MPC1/MPC2 scalar
//! summaries, and the rescaled accuracy.
//!
//! All formulas reduce the indicator-sequence correlations to closed forms
//! over the counts: N^2 * cov(t_k, c_l) = N*C_kl - alpha_k*beta_l and
//! N^2 * var(t_k) = alpha_k*(N - alpha_k). The common 1/N^2 factors cancel,
//! so everything here works on the integer numerators directly.

use thiserror::Error;

use crate::matrix::ConfusionMatrix;
use crate::score::Score;

/// Errors from building a weight vector.
#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("weight {index} is negative: {value}")]
    Negative { index: usize, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    Sum { sum: f64 },
}

/// Non-negative per-class weights summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    /// Validates non-negativity and a unit sum (within 1e-12).
    pub fn new(w: Vec<f64>) -> Result<Self, WeightError> {
        for (index, &value) in w.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(WeightError::Negative { index, value });
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(WeightError::Sum { sum });
        }
        Ok(Self { w })
    }

    /// The uniform vector 1/K.
    pub fn uniform(k: usize) -> Self {
        Self {
            w: vec![1.0 / k as f64; k],
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.w[k]
    }
}

/// Per-class-pair Pearson coefficients with an undefined-entry mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcMatrix {
    k: usize,
    values: Vec<f64>,
    defined: Vec<bool>,
}

impl MpcMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Entry (k, l), or None where a zero denominator made it undefined.
    pub fn entry(&self, k: usize, l: usize) -> Option<f64> {
        let i = k * self.k + l;
        self.defined[i].then_some(self.values[i])
    }

    /// The per-class coefficients along the diagonal.
    pub fn diagonal(&self) -> Vec<Option<f64>> {
        (0..self.k).map(|k| self.entry(k, k)).collect()
    }
}

// N*C_kl - alpha_k*beta_l, exact in integers.
fn cov_num(n: u64, c: u64, a: u64, b: u64) -> i128 {
    n as i128 * c as i128 - a as i128 * b as i128
}

// alpha_k*(N - alpha_k), exact in integers.
fn var_num(n: u64, a: u64) -> u128 {
    a as u128 * (n - a) as u128
}

/// Trace-form multiclass correlation, in [-1, 1]:
/// sum_k (N*C_kk - alpha_k*beta_k) over the geometric mean of the summed
/// per-class variances. Flagged 0 when every case shares one actual class
/// or one predicted class.
pub fn r_k(cm: &ConfusionMatrix) -> Score {
    let m = cm.marginals();
    let n = m.total;
    let mut num: i128 = 0;
    let mut dt: u128 = 0;
    let mut dc: u128 = 0;
    for k in 0..cm.k() {
        num += cov_num(n, cm.count(k, k), m.alpha[k], m.beta[k]);
        dt += var_num(n, m.alpha[k]);
        dc += var_num(n, m.beta[k]);
    }
    if dt == 0 || dc == 0 {
        return Score::undefined();
    }
    Score::new(num as f64 / ((dt as f64).sqrt() * (dc as f64).sqrt()))
}

/// The full K x K matrix of Pearson coefficients between actual-class and
/// predicted-class indicators. Entries with a zero denominator are masked,
/// not absorbed as sentinel numbers.
pub fn mpc_matrix(cm: &ConfusionMatrix) -> MpcMatrix {
    let m = cm.marginals();
    let n = m.total;
    let kk = cm.k();
    let mut values = vec![0.0; kk * kk];
    let mut defined = vec![false; kk * kk];
    for k in 0..kk {
        let dt = var_num(n, m.alpha[k]);
        for l in 0..kk {
            let dc = var_num(n, m.beta[l]);
            if dt == 0 || dc == 0 {
                continue;
            }
            let num = cov_num(n, cm.count(k, l), m.alpha[k], m.beta[l]);
            values[k * kk + l] = num as f64 / ((dt as f64).sqrt() * (dc as f64).sqrt());
            defined[k * kk + l] = true;
        }
    }
    MpcMatrix {
        k: kk,
        values,
        defined,
    }
}

/// Weighted mean of the per-class Pearson coefficients (uniform 1/K by
/// default). Classes with a zero denominator contribute 0 and flag the
/// result.
pub fn mpc1(cm: &ConfusionMatrix, weights: Option<&WeightVector>) -> Score {
    if let Some(w) = weights {
        assert_eq!(w.len(), cm.k(), "weight count must equal K");
    }
    let m = cm.marginals();
    let n = m.total;
    let uniform = 1.0 / cm.k() as f64;
    let mut sum = 0.0;
    let mut degenerate = false;
    for k in 0..cm.k() {
        let dt = var_num(n, m.alpha[k]);
        let dc = var_num(n, m.beta[k]);
        if dt == 0 || dc == 0 {
            degenerate = true;
            continue;
        }
        let term = cov_num(n, cm.count(k, k), m.alpha[k], m.beta[k]) as f64
            / ((dt as f64).sqrt() * (dc as f64).sqrt());
        sum += weights.map_or(uniform, |w| w.get(k)) * term;
    }
    if degenerate {
        Score::flagged(sum)
    } else {
        Score::new(sum)
    }
}

/// Summed per-class covariances over summed per-class normalizers, in
/// [-1, 1]. Flagged 0 when the denominator vanishes.
pub fn mpc2(cm: &ConfusionMatrix) -> Score {
    let m = cm.marginals();
    let n = m.total;
    let mut num: i128 = 0;
    let mut den = 0.0;
    for k in 0..cm.k() {
        num += cov_num(n, cm.count(k, k), m.alpha[k], m.beta[k]);
        den += (var_num(n, m.alpha[k]) as f64 * var_num(n, m.beta[k]) as f64).sqrt();
    }
    if den == 0.0 {
        return Score::undefined();
    }
    Score::new(num as f64 / den)
}

/// Accuracy rescaled onto [-1, 1]: 2*trace/N - 1.
pub fn accuracy_rescaled(cm: &ConfusionMatrix) -> Score {
    let trace: u64 = (0..cm.k()).map(|k| cm.count(k, k)).sum();
    Score::new(2.0 * trace as f64 / cm.n() as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::mcc;
    use approx::assert_abs_diff_eq;

    fn m(rows: &[Vec<u64>]) -> ConfusionMatrix {
        ConfusionMatrix::from_rows(rows).unwrap()
    }

    fn hollow3() -> ConfusionMatrix {
        m(&[vec![0, 5, 5], vec![5, 0, 5], vec![5, 5, 0]])
    }

    fn diag3() -> ConfusionMatrix {
        m(&[vec![10, 0, 0], vec![0, 20, 0], vec![0, 0, 30]])
    }

    #[test]
    fn r_k_hollow_fixture() {
        // numerator 3*(0 - 100) = -300, denominator sqrt(600*600) = 600.
        assert_abs_diff_eq!(r_k(&hollow3()).value, -0.5, epsilon = 1e-15);
    }

    #[test]
    fn r_k_diagonal_is_one() {
        assert_abs_diff_eq!(r_k(&diag3()).value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn r_k_reduces_to_mcc_for_two_classes() {
        let cm = m(&[vec![50, 10], vec![5, 35]]);
        let want = mcc(&cm.binary_counts().unwrap()).value;
        assert_abs_diff_eq!(r_k(&cm).value, want, epsilon = 1e-12);
        assert_abs_diff_eq!(r_k(&cm).value, 0.6975184488828855, epsilon = 1e-12);
    }

    #[test]
    fn r_k_single_class_is_flagged() {
        let s = r_k(&m(&[vec![7, 3], vec![0, 0]]));
        assert_eq!((s.value, s.defined), (0.0, false));
    }

    #[test]
    fn mpc_matrix_diagonal_entries() {
        let d = mpc_matrix(&diag3());
        for k in 0..3 {
            assert_abs_diff_eq!(d.entry(k, k).unwrap(), 1.0, epsilon = 1e-15);
        }
        let h = mpc_matrix(&hollow3());
        for k in 0..3 {
            assert_abs_diff_eq!(h.entry(k, k).unwrap(), -0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn mpc_matrix_binary_symmetry() {
        // For K = 2 the two diagonal covariances coincide.
        let p = mpc_matrix(&m(&[vec![50, 10], vec![5, 35]]));
        assert_abs_diff_eq!(
            p.entry(0, 0).unwrap(),
            p.entry(1, 1).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(p.entry(0, 0).unwrap(), 0.6975184488828855, epsilon = 1e-12);
    }

    #[test]
    fn mpc_matrix_masks_degenerate_rows() {
        let p = mpc_matrix(&m(&[vec![0, 0], vec![3, 1]]));
        assert_eq!(p.entry(0, 0), None);
        assert_eq!(p.entry(0, 1), None);
    }

    #[test]
    fn mpc1_fixtures() {
        assert_abs_diff_eq!(
            mpc1(&m(&[vec![993, 3], vec![3, 1]]), None).value,
            0.2469879518072289,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(mpc1(&hollow3(), None).value, -0.5, epsilon = 1e-15);
        let eye5 = m(&(0..5)
            .map(|i| (0..5).map(|j| u64::from(i == j)).collect())
            .collect::<Vec<_>>());
        assert_abs_diff_eq!(mpc1(&eye5, None).value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mpc1_degenerate_class_contributes_zero_and_flags() {
        let cm = m(&[vec![0, 0, 0], vec![0, 20, 0], vec![0, 0, 30]]);
        let s = mpc1(&cm, None);
        assert!(!s.defined);
        assert_abs_diff_eq!(s.value, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn mpc1_weights_replace_uniform() {
        let cm = hollow3();
        let w = WeightVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert_abs_diff_eq!(mpc1(&cm, Some(&w)).value, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::new(vec![0.5, 0.5]).is_ok());
        assert_eq!(
            WeightVector::new(vec![0.5, 0.6]),
            Err(WeightError::Sum { sum: 1.1 })
        );
        assert!(matches!(
            WeightVector::new(vec![-0.1, 1.1]),
            Err(WeightError::Negative { index: 0, .. })
        ));
    }

    #[test]
    fn mpc2_fixtures() {
        // -300 / (3 * 200).
        assert_abs_diff_eq!(mpc2(&hollow3()).value, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mpc2(&diag3()).value, 1.0, epsilon = 1e-15);
        let cm = m(&[vec![50, 10], vec![5, 35]]);
        assert_abs_diff_eq!(mpc2(&cm).value, 0.6975184488828855, epsilon = 1e-12);
    }

    #[test]
    fn accuracy_rescaled_fixtures() {
        assert_abs_diff_eq!(
            accuracy_rescaled(&m(&[vec![993, 3], vec![3, 1]])).value,
            0.988,
            epsilon = 1e-12
        );
        assert_eq!(accuracy_rescaled(&hollow3()).value, -1.0);
        assert_eq!(accuracy_rescaled(&diag3()).value, 1.0);
    }
}
