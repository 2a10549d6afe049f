//! Binary (K = 2) metrics computed from the TP/FN/FP/TN counts.

use crate::matrix::BinaryCounts;
use crate::score::Score;

/// F1 = 2TP / (2TP + FP + FN), in [0, 1].
///
/// When TP = FP = FN = 0 (all mass in TN) the ratio is 0/0; returns a
/// flagged 0.
pub fn f1(c: &BinaryCounts) -> Score {
    let tp = c.true_positive as f64;
    let den = 2.0 * tp + c.false_positive as f64 + c.false_negative as f64;
    if den == 0.0 {
        return Score::undefined();
    }
    Score::new(2.0 * tp / den)
}

/// Fraction of correctly classified cases, (TP + TN) / N, in [0, 1].
pub fn accuracy(c: &BinaryCounts) -> Score {
    let n = c.n();
    if n == 0 {
        return Score::undefined();
    }
    Score::new((c.true_positive + c.true_negative) as f64 / n as f64)
}

/// Matthews correlation coefficient, in [-1, 1]:
/// (TP*TN - FP*FN) / sqrt((TP+FN)(TP+FP)(TN+FP)(TN+FN)).
///
/// When any marginal is empty the denominator is 0; returns a flagged 0.
pub fn mcc(c: &BinaryCounts) -> Score {
    let (tp, fn_, fp, tn) = (
        c.true_positive as i128,
        c.false_negative as i128,
        c.false_positive as i128,
        c.true_negative as i128,
    );
    let factors = [(tp + fn_), (tp + fp), (tn + fp), (tn + fn_)];
    if factors.contains(&0) {
        return Score::undefined();
    }
    let num = (tp * tn - fp * fn_) as f64;
    let den = factors.iter().map(|&f| f as f64).product::<f64>().sqrt();
    Score::new(num / den)
}
