//! First-principles verification path: expands a confusion matrix into
//! explicit per-class 0/1 indicator sequences and recomputes every
//! correlation-based metric directly from them. Nothing here reuses the
//! closed forms; agreement between the two routes is what the test suite
//! and the `oracle` CLI subcommand check.

use thiserror::Error;

use crate::enhanced::{delta_k, emcc, empc1, er_k, RhoParameter};
use crate::matrix::ConfusionMatrix;
use crate::multiclass::{mpc1, mpc2, r_k};
use crate::score::Score;

/// Default cap on the expanded sequence length.
pub const DEFAULT_SEQUENCE_CAP: u64 = 1_000_000;

/// Errors from the sequence-level computations.
#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("sequence length {n} exceeds the cap {cap}")]
    CapExceeded { n: u64, cap: u64 },
    #[error("sequences have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("class index {class} out of range for K = {k}")]
    ClassOutOfRange { class: usize, k: usize },
    #[error("rho*C_kk = {value} is not an integer; use the analytic delta_k instead")]
    NonIntegerReduction { value: f64 },
    #[error("sequence realization needs rho <= 1, got {0}")]
    RhoAboveOne(f64),
    #[error("scale factor must be > 0, got {0}")]
    NonPositiveScale(f64),
}

/// Per-class 0/1 sequences: t[k][n] marks the n-th case's actual class,
/// c[k][n] its predicted class. Each case has exactly one 1 per column.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSequences {
    t: Vec<Vec<u8>>,
    c: Vec<Vec<u8>>,
    n: usize,
}

impl IndicatorSequences {
    pub fn k(&self) -> usize {
        self.t.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Actual-class indicator sequence for class k.
    pub fn t_row(&self, k: usize) -> &[u8] {
        &self.t[k]
    }

    /// Predicted-class indicator sequence for class k.
    pub fn c_row(&self, k: usize) -> &[u8] {
        &self.c[k]
    }

    /// Actual-class row as doubles, for [`pcc`] and affine relabeling.
    pub fn t_f64(&self, k: usize) -> Vec<f64> {
        self.t[k].iter().map(|&v| v as f64).collect()
    }

    /// Predicted-class row as doubles.
    pub fn c_f64(&self, k: usize) -> Vec<f64> {
        self.c[k].iter().map(|&v| v as f64).collect()
    }
}

/// Diagonal covariance terms and the full cross-covariance matrix of the
/// indicator sequences, with the 1/N sample normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSummary {
    pub rtc_diag: Vec<f64>,
    pub rtt_diag: Vec<f64>,
    pub rcc_diag: Vec<f64>,
    /// Full K x K cross covariance, row-major: entry (k, l) pairs t_k with c_l.
    pub rtc: Vec<f64>,
    pub t_mean: Vec<f64>,
    pub c_mean: Vec<f64>,
}

/// A class's pair of 0/1 sequences after removing shared zeros down to
/// length n_k = alpha_k + beta_k - rho*C_kk.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPair {
    pub t_red: Vec<u8>,
    pub c_red: Vec<u8>,
    pub n_k: usize,
}

/// Expands the matrix into indicator sequences under the canonical case
/// ordering: blocks laid out by (actual, predicted) lexicographically,
/// C_kl cases per block. Correlations are permutation-invariant, so the
/// ordering only pins fixtures.
pub fn build_sequences(cm: &ConfusionMatrix) -> Result<IndicatorSequences, OracleError> {
    build_sequences_with_cap(cm, DEFAULT_SEQUENCE_CAP)
}

/// [`build_sequences`] with an explicit length cap.
pub fn build_sequences_with_cap(
    cm: &ConfusionMatrix,
    cap: u64,
) -> Result<IndicatorSequences, OracleError> {
    let total = cm.n();
    if total > cap {
        return Err(OracleError::CapExceeded { n: total, cap });
    }
    let k = cm.k();
    let n = total as usize;
    let mut t = vec![vec![0u8; n]; k];
    let mut c = vec![vec![0u8; n]; k];
    let mut pos = 0usize;
    for actual in 0..k {
        for predicted in 0..k {
            for _ in 0..cm.count(actual, predicted) {
                t[actual][pos] = 1;
                c[predicted][pos] = 1;
                pos += 1;
            }
        }
    }
    Ok(IndicatorSequences { t, c, n })
}

/// Pearson correlation coefficient of two equal-length sequences, in
/// [-1, 1], computed by the centered two-pass formula with 1/N
/// normalization. Zero variance (including length < 2) yields a flagged 0.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<Score, OracleError> {
    if x.len() != y.len() {
        return Err(OracleError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Ok(Score::undefined());
    }
    // A constant sequence has zero variance exactly; deciding it by
    // comparison keeps the flag stable under affine relabeling, where
    // the summed mean of equal values can pick up rounding dust.
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Ok(Score::undefined());
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Score::undefined());
    }
    Ok(Score::new((sxy / nf) / ((sxx / nf).sqrt() * (syy / nf).sqrt())))
}

/// Elementwise a + b*x with b > 0; correlations are invariant under it.
pub fn affine_relabel(x: &[f64], a: f64, b: f64) -> Result<Vec<f64>, OracleError> {
    if !(b > 0.0) {
        return Err(OracleError::NonPositiveScale(b));
    }
    Ok(x.iter().map(|&v| a + b * v).collect())
}

/// Sample covariances of the indicator sequences, computed from integer
/// dot products so the closed-form identities hold exactly:
/// N^2*[R_tc]_kl = N*S_tc - S_t*S_c with every S summed over the sequences.
pub fn covariance_summary(seqs: &IndicatorSequences) -> CovarianceSummary {
    let k = seqs.k();
    let n = seqs.n() as i128;
    let n2 = (seqs.n() as f64) * (seqs.n() as f64);
    let s_t: Vec<i128> = (0..k)
        .map(|i| seqs.t[i].iter().map(|&v| v as i128).sum())
        .collect();
    let s_c: Vec<i128> = (0..k)
        .map(|i| seqs.c[i].iter().map(|&v| v as i128).sum())
        .collect();
    let mut rtc = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let s_tc: i128 = seqs.t[a]
                .iter()
                .zip(&seqs.c[b])
                .map(|(&x, &y)| (x * y) as i128)
                .sum();
            rtc[a * k + b] = (n * s_tc - s_t[a] * s_c[b]) as f64 / n2;
        }
    }
    let var = |s: &[i128], row: &dyn Fn(usize) -> u128| -> Vec<f64> {
        (0..k)
            .map(|i| ((n as u128 * row(i)) as i128 - s[i] * s[i]) as f64 / n2)
            .collect()
    };
    // For 0/1 values the sum of squares equals the sum.
    let rtt_diag = var(&s_t, &|i| s_t[i] as u128);
    let rcc_diag = var(&s_c, &|i| s_c[i] as u128);
    let rtc_diag = (0..k).map(|i| rtc[i * k + i]).collect();
    CovarianceSummary {
        rtc_diag,
        rtt_diag,
        rcc_diag,
        rtc,
        t_mean: s_t.iter().map(|&s| s as f64 / seqs.n() as f64).collect(),
        c_mean: s_c.iter().map(|&s| s as f64 / seqs.n() as f64).collect(),
    }
}

/// Trace-form correlation assembled from sequence-level covariances.
pub fn r_k_from_sequences(seqs: &IndicatorSequences) -> Score {
    let cov = covariance_summary(seqs);
    let num: f64 = cov.rtc_diag.iter().sum();
    let dt: f64 = cov.rtt_diag.iter().sum();
    let dc: f64 = cov.rcc_diag.iter().sum();
    if dt == 0.0 || dc == 0.0 {
        return Score::undefined();
    }
    Score::new(num / (dt.sqrt() * dc.sqrt()))
}

/// Mean per-class Pearson coefficient from sequence-level covariances;
/// same contribute-0-and-flag convention as the closed form.
pub fn mpc1_from_sequences(seqs: &IndicatorSequences) -> Score {
    let cov = covariance_summary(seqs);
    let k = seqs.k();
    let mut sum = 0.0;
    let mut degenerate = false;
    for i in 0..k {
        let den = cov.rtt_diag[i] * cov.rcc_diag[i];
        if den == 0.0 {
            degenerate = true;
            continue;
        }
        sum += cov.rtc_diag[i] / (cov.rtt_diag[i].sqrt() * cov.rcc_diag[i].sqrt());
    }
    let value = sum / k as f64;
    if degenerate {
        Score::flagged(value)
    } else {
        Score::new(value)
    }
}

/// Covariance-ratio form from sequence-level covariances.
pub fn mpc2_from_sequences(seqs: &IndicatorSequences) -> Score {
    let cov = covariance_summary(seqs);
    let num: f64 = cov.rtc_diag.iter().sum();
    let den: f64 = (0..seqs.k())
        .map(|i| (cov.rtt_diag[i] * cov.rcc_diag[i]).sqrt())
        .sum();
    if den == 0.0 {
        return Score::undefined();
    }
    Score::new(num / den)
}

/// Builds class k's reduced pair: alpha_k ones in t, beta_k ones in c,
/// overlapping in exactly C_kk positions, padded with shared zeros to
/// length alpha_k + beta_k - rho*C_kk. Requires rho <= 1 and integer
/// rho*C_kk so the length is realizable.
pub fn reduce_dimension(
    cm: &ConfusionMatrix,
    class: usize,
    rho: f64,
) -> Result<ReducedPair, OracleError> {
    if class >= cm.k() {
        return Err(OracleError::ClassOutOfRange {
            class,
            k: cm.k(),
        });
    }
    if rho > 1.0 {
        return Err(OracleError::RhoAboveOne(rho));
    }
    let m = cm.marginals();
    let (a, b) = (m.alpha[class] as usize, m.beta[class] as usize);
    let c = cm.count(class, class) as usize;
    let rc_real = rho * c as f64;
    let rc_round = rc_real.round();
    if (rc_real - rc_round).abs() > 1e-9 {
        return Err(OracleError::NonIntegerReduction { value: rc_real });
    }
    // rho <= 1 keeps rc <= C, so the length fits all ones: the layout is
    // C overlapping ones, then the remaining ones of each side, then zeros.
    let n_k = (a + b) as i64 - rc_round as i64;
    let n_k = n_k as usize;
    let mut t_red = vec![0u8; n_k];
    let mut c_red = vec![0u8; n_k];
    for i in 0..c {
        t_red[i] = 1;
        c_red[i] = 1;
    }
    for i in c..a {
        t_red[i] = 1;
    }
    for i in a..(a + b - c) {
        c_red[i] = 1;
    }
    Ok(ReducedPair { t_red, c_red, n_k })
}

// Covariance pieces of one reduced pair from integer dot products.
fn reduced_moments(pair: &ReducedPair) -> (f64, f64, f64) {
    let n = pair.n_k as i128;
    let n2 = (pair.n_k as f64) * (pair.n_k as f64);
    let st: i128 = pair.t_red.iter().map(|&v| v as i128).sum();
    let sc: i128 = pair.c_red.iter().map(|&v| v as i128).sum();
    let stc: i128 = pair
        .t_red
        .iter()
        .zip(&pair.c_red)
        .map(|(&x, &y)| (x * y) as i128)
        .sum();
    let cov = (n * stc - st * sc) as f64 / n2;
    let var_t = (n * st - st * st) as f64 / n2;
    let var_c = (n * sc - sc * sc) as f64 / n2;
    (cov, var_t, var_c)
}

/// The three enhanced metrics (er, empc1, empc2) assembled from reduced
/// sequences at the given rho; rho*C_kk must be an integer for every class.
/// Mirrors the closed-form degeneracy conventions.
pub fn enhanced_from_reduced(
    cm: &ConfusionMatrix,
    rho: f64,
) -> Result<(Score, Score, Score), OracleError> {
    let m = cm.marginals();
    let mut num = 0.0;
    let mut dt = 0.0;
    let mut dc = 0.0;
    let mut empc1_terms = 0usize;
    let mut empc1_sum = 0.0;
    let mut empc1_dropped = false;
    let mut den2 = 0.0;
    let mut retained = 0usize;
    for k in 0..cm.k() {
        if m.alpha[k] == 0 || m.beta[k] == 0 {
            // Same convention as the closed forms: the mean-style metric
            // flags every dropped class, absent-pair classes vanish.
            empc1_dropped = true;
            if m.alpha[k] == 0 && m.beta[k] == 0 {
                continue;
            }
        }
        retained += 1;
        let pair = reduce_dimension(cm, k, rho)?;
        let (cov, var_t, var_c) = reduced_moments(&pair);
        num += cov;
        dt += var_t;
        dc += var_c;
        den2 += (var_t * var_c).sqrt();
        if m.alpha[k] > 0 && m.beta[k] > 0 {
            empc1_sum += cov / (var_t.sqrt() * var_c.sqrt());
            empc1_terms += 1;
        }
    }
    let er = if retained == 0 || dt <= 0.0 || dc <= 0.0 {
        Score::undefined()
    } else {
        Score::new(num / (dt.sqrt() * dc.sqrt()))
    };
    let e1 = if empc1_terms == 0 {
        Score::undefined()
    } else {
        let value = empc1_sum / empc1_terms as f64;
        if empc1_dropped {
            Score::flagged(value)
        } else {
            Score::new(value)
        }
    };
    let e2 = if retained == 0 || den2 == 0.0 {
        Score::undefined()
    } else {
        Score::new(num / den2)
    };
    Ok((er, e1, e2))
}

/// Extended MCC assembled from per-class sequence dot products: the
/// per-class factors are S_tc/sqrt(S_tt*S_cc) for the first product and
/// sqrt(S_t(t-c)*S_c(c-t)/(S_tt*S_cc)) for the second, with the same
/// degenerate-class conventions as the closed form.
pub fn emcc_correlation_form(cm: &ConfusionMatrix) -> Result<Score, OracleError> {
    let seqs = build_sequences(cm)?;
    let k = seqs.k();
    let mut t1 = 1.0;
    let mut t2 = 1.0;
    let mut retained = 0usize;
    for i in 0..k {
        let (t, c) = (seqs.t_row(i), seqs.c_row(i));
        let s_tt: i128 = t.iter().map(|&v| (v * v) as i128).sum();
        let s_cc: i128 = c.iter().map(|&v| (v * v) as i128).sum();
        let s_tc: i128 = t.iter().zip(c).map(|(&x, &y)| (x * y) as i128).sum();
        if s_tt == 0 && s_cc == 0 {
            continue;
        }
        retained += 1;
        if s_tt == 0 || s_cc == 0 {
            t1 = 0.0;
            continue;
        }
        let norm = (s_tt as f64 * s_cc as f64).sqrt();
        t1 *= s_tc as f64 / norm;
        t2 *= (((s_tt - s_tc) as f64 * (s_cc - s_tc) as f64) / (s_tt as f64 * s_cc as f64))
            .sqrt();
    }
    if retained == 0 {
        return Ok(Score::undefined());
    }
    Ok(Score::new(t1 - t2))
}

/// One quantity computed by both routes.
#[derive(Debug, Clone)]
pub struct Deviation {
    pub quantity: &'static str,
    pub closed: Score,
    pub oracle: Score,
}

impl Deviation {
    /// Absolute difference; zero when both routes agree the quantity is
    /// undefined, infinite when the defined flags disagree.
    pub fn abs_diff(&self) -> f64 {
        match (self.closed.defined, self.oracle.defined) {
            (true, true) => (self.closed.value - self.oracle.value).abs(),
            (false, false) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

/// Computes every metric through both routes on one matrix. The caller
/// applies its tolerances to the returned deviations.
pub fn cross_check(cm: &ConfusionMatrix) -> Result<Vec<Deviation>, OracleError> {
    let seqs = build_sequences(cm)?;
    let mut out = vec![
        Deviation {
            quantity: "r_k",
            closed: r_k(cm),
            oracle: r_k_from_sequences(&seqs),
        },
        Deviation {
            quantity: "mpc1",
            closed: mpc1(cm, None),
            oracle: mpc1_from_sequences(&seqs),
        },
        Deviation {
            quantity: "mpc2",
            closed: mpc2(cm),
            oracle: mpc2_from_sequences(&seqs),
        },
        Deviation {
            quantity: "emcc",
            closed: emcc(cm),
            oracle: emcc_correlation_form(cm)?,
        },
    ];
    let (er_o, e1_o, e2_o) = enhanced_from_reduced(cm, 0.0)?;
    out.push(Deviation {
        quantity: "er_k",
        closed: er_k(cm),
        oracle: er_o,
    });
    // The closed empc1 carries the dimension warning; the comparison only
    // looks at value and defined flag.
    out.push(Deviation {
        quantity: "empc1",
        closed: empc1(cm, None),
        oracle: e1_o,
    });
    out.push(Deviation {
        quantity: "empc2",
        closed: er_k(cm),
        oracle: e2_o,
    });
    if cm.k() == 2 {
        let counts = cm.binary_counts().expect("checked k == 2");
        out.push(Deviation {
            quantity: "mcc_vs_pcc",
            closed: crate::binary::mcc(&counts),
            oracle: pcc(&seqs.t_f64(0), &seqs.c_f64(0))?,
        });
    }
    // Analytic delta against the reduced pair wherever rho*C_kk stays
    // integral; rho = 1 may degenerate to constant sequences, which both
    // routes flag.
    for k in 0..cm.k() {
        for rho in [0.0, 1.0] {
            let pair = reduce_dimension(cm, k, rho)?;
            let seq_delta = pcc(
                &pair.t_red.iter().map(|&v| v as f64).collect::<Vec<_>>(),
                &pair.c_red.iter().map(|&v| v as f64).collect::<Vec<_>>(),
            )?;
            let analytic = if rho < 1.0 {
                delta_k(cm, k, RhoParameter::new(rho).expect("rho < 1")).delta
            } else {
                // At rho = 1 evaluate the same expression directly; guarded
                // against the 0/0 case the flag convention covers.
                let m = cm.marginals();
                let (a, b) = (m.alpha[k] as f64, m.beta[k] as f64);
                let c = cm.count(k, k) as f64;
                let den = a * b * (a - c) * (b - c);
                if den <= 0.0 {
                    Score::undefined()
                } else {
                    Score::new(((a + b - c) * c - a * b) / den.sqrt())
                }
            };
            out.push(Deviation {
                quantity: if rho == 0.0 {
                    "delta_rho0"
                } else {
                    "delta_rho1"
                },
                closed: analytic,
                oracle: seq_delta,
            });
        }
    }
    Ok(out)
}
