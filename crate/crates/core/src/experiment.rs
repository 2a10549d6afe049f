//! Monte-Carlo driver: generates replicate matrices per family, scores
//! the requested metrics, and aggregates schedule-invariant histograms.
//! Also hosts the single-matrix panel and the byte-stable CSV/JSON
//! emitters the command-line front end uses.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::binary::{accuracy, f1, mcc};
use crate::enhanced::{empc1, empc1_rho, empc2, empc2_rho, er_k, er_k_rho, RhoParameter};
use crate::generator::{generate, Family, FamilySpec, SeededRng};
use crate::matrix::{ConfusionMatrix, MatrixError};
use crate::multiclass::{accuracy_rescaled, mpc1, mpc2, r_k, WeightVector};
use crate::score::{Metric, Score};

/// Errors from experiment configuration.
#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("replicate count must be at least 1")]
    ZeroReplicates,
    #[error("histogram needs at least 2 bins, got {bins}")]
    TooFewBins { bins: usize },
    #[error("family {name} appears twice; histogram keys must be unique")]
    DuplicateFamily { name: &'static str },
}

/// Errors from scoring a matrix file.
#[derive(Debug, Error)]
pub enum ScoreFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: MatrixError,
    },
}

/// A validated experiment plan.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    families: Vec<FamilySpec>,
    replicates: u64,
    metrics: Vec<Metric>,
    rho: RhoParameter,
    master_seed: u64,
    histogram_bins: usize,
}

impl ExperimentConfig {
    /// Validates replicates >= 1, bins >= 2, and unique family names.
    pub fn new(
        families: Vec<FamilySpec>,
        replicates: u64,
        metrics: Vec<Metric>,
        rho: RhoParameter,
        master_seed: u64,
        histogram_bins: usize,
    ) -> Result<Self, ExperimentError> {
        if replicates == 0 {
            return Err(ExperimentError::ZeroReplicates);
        }
        if histogram_bins < 2 {
            return Err(ExperimentError::TooFewBins {
                bins: histogram_bins,
            });
        }
        for (i, spec) in families.iter().enumerate() {
            if families[..i].iter().any(|s| s.family() == spec.family()) {
                return Err(ExperimentError::DuplicateFamily {
                    name: spec.family().name(),
                });
            }
        }
        Ok(Self {
            families,
            replicates,
            metrics,
            rho,
            master_seed,
            histogram_bins,
        })
    }

    /// The standard panel of eleven multiclass metrics.
    pub fn default_metrics() -> Vec<Metric> {
        Metric::EXPERIMENT_DEFAULT.to_vec()
    }

    pub fn families(&self) -> &[FamilySpec] {
        &self.families
    }

    pub fn replicates(&self) -> u64 {
        self.replicates
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }

    pub fn rho(&self) -> RhoParameter {
        self.rho
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn histogram_bins(&self) -> usize {
        self.histogram_bins
    }
}

/// Order statistics over the defined scores of one (family, metric) cell;
/// all None when every replicate was flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

impl SummaryStats {
    /// Values must arrive in replicate order so the mean is schedule-free.
    fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                min: None,
                max: None,
                mean: None,
                median: None,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("scores are never NaN"));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        Self {
            min: Some(sorted[0]),
            max: Some(sorted[n - 1]),
            mean: Some(values.iter().sum::<f64>() / n as f64),
            median: Some(median),
        }
    }
}

/// Binned scores for one metric on one family. Flagged scores are kept
/// out of the bins and tallied separately, so counts + undefined_count
/// always equals the replicate count.
#[derive(Debug, Clone)]
pub struct MetricHistogram {
    pub family: Family,
    pub metric: Metric,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub summary: SummaryStats,
    pub undefined_count: u64,
}

impl MetricHistogram {
    pub fn replicates(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.undefined_count
    }
}

/// Strictly increasing edges from -1 to 1; the endpoints are exact.
pub fn bin_edges(bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|i| (2 * i) as f64 / bins as f64 - 1.0)
        .collect()
}

/// Bin of a score: scores on an edge go to the higher bin, 1.0 to the
/// last; out-of-range values clamp to the boundary bins.
pub fn bin_index(edges: &[f64], x: f64) -> usize {
    let bins = edges.len() - 1;
    edges
        .partition_point(|&e| e <= x)
        .saturating_sub(1)
        .min(bins - 1)
}

/// One metric on one matrix at the given reduction parameter.
pub fn evaluate_metric(cm: &ConfusionMatrix, metric: Metric, rho: RhoParameter) -> Score {
    match metric {
        Metric::RawAccuracy => cm
            .binary_counts()
            .map(|c| accuracy(&c))
            .unwrap_or_else(|_| Score::undefined()),
        Metric::F1 => cm
            .binary_counts()
            .map(|c| f1(&c))
            .unwrap_or_else(|_| Score::undefined()),
        Metric::Mcc => cm
            .binary_counts()
            .map(|c| mcc(&c))
            .unwrap_or_else(|_| Score::undefined()),
        Metric::A => accuracy_rescaled(cm),
        Metric::RK => r_k(cm),
        Metric::Mpc1 => mpc1(cm, None),
        Metric::Mpc2 => mpc2(cm),
        Metric::ErK => er_k(cm),
        Metric::Empc1 => empc1(cm, None),
        Metric::Empc2 => empc2(cm),
        Metric::Emcc => crate::enhanced::emcc(cm),
        Metric::ErKRho => er_k_rho(cm, rho),
        Metric::Empc1Rho => empc1_rho(cm, rho, None),
        Metric::Empc2Rho => empc2_rho(cm, rho),
    }
}

/// Runs the full grid. Replicates are generated and scored in parallel,
/// but scores are folded into histograms in replicate order, so the
/// result is identical for any worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Vec<MetricHistogram> {
    let edges = bin_edges(config.histogram_bins);
    let seed = SeededRng::new(config.master_seed);
    let mut out = Vec::new();
    for spec in &config.families {
        let rows: Vec<Vec<Score>> = (0..config.replicates)
            .into_par_iter()
            .map(|rep| {
                let cm = generate(spec, rep, &seed);
                config
                    .metrics
                    .iter()
                    .map(|&m| evaluate_metric(&cm, m, config.rho))
                    .collect()
            })
            .collect();
        for (mi, &metric) in config.metrics.iter().enumerate() {
            let mut counts = vec![0u64; config.histogram_bins];
            let mut undefined = 0u64;
            let mut defined = Vec::with_capacity(rows.len());
            for row in &rows {
                let score = row[mi];
                if score.defined {
                    counts[bin_index(&edges, score.value)] += 1;
                    defined.push(score.value);
                } else {
                    undefined += 1;
                }
            }
            out.push(MetricHistogram {
                family: spec.family(),
                metric,
                bin_edges: edges.clone(),
                counts,
                summary: SummaryStats::from_values(&defined),
                undefined_count: undefined,
            });
        }
    }
    out
}

/// Every applicable metric on one matrix; binary inputs get the three
/// two-class scores in addition to the eleven multiclass ones.
#[derive(Debug, Clone)]
pub struct MetricPanel {
    pub k: usize,
    pub n: u64,
    pub rho: f64,
    pub entries: Vec<(Metric, Score)>,
}

/// Scores one parsed matrix at the given reduction parameter, with
/// optional per-class weights for the mean-style metrics.
pub fn score_matrix(
    cm: &ConfusionMatrix,
    rho: RhoParameter,
    weights: Option<&WeightVector>,
) -> MetricPanel {
    let mut entries = Vec::new();
    if cm.k() == 2 {
        for metric in Metric::BINARY_EXTRAS {
            entries.push((metric, evaluate_metric(cm, metric, rho)));
        }
    }
    for metric in Metric::EXPERIMENT_DEFAULT {
        let score = match metric {
            Metric::Mpc1 => mpc1(cm, weights),
            Metric::Empc1 => empc1(cm, weights),
            Metric::Empc1Rho => empc1_rho(cm, rho, weights),
            _ => evaluate_metric(cm, metric, rho),
        };
        entries.push((metric, score));
    }
    MetricPanel {
        k: cm.k(),
        n: cm.n(),
        rho: rho.value(),
        entries,
    }
}

/// Reads, parses, and scores a matrix file, attaching the path to errors.
pub fn score_file(
    path: &Path,
    rho: RhoParameter,
    weights: Option<&WeightVector>,
) -> Result<MetricPanel, ScoreFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScoreFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cm = ConfusionMatrix::parse(&text).map_err(|source| ScoreFileError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(score_matrix(&cm, rho, weights))
}

/// Output encodings for histograms and panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Json,
}

impl std::str::FromStr for EmitFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            other => Err(format!("unknown format: {other} (expected csv or json)")),
        }
    }
}

/// Rounds to 12 significant digits; emitted numbers print the shortest
/// decimal that round-trips, so output is byte-stable.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific notation parses")
}

fn json_number(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig12(x)).map_or(Value::Null, Value::Number)
}

fn json_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json_number)
}

/// Writes histograms as CSV (one row per bin) or JSON (family -> metric,
/// with a summary block). Keys are sorted and numbers carry 12
/// significant digits, so repeated runs emit identical bytes.
pub fn emit_histograms(
    histograms: &[MetricHistogram],
    format: EmitFormat,
    out: &mut dyn Write,
) -> io::Result<()> {
    match format {
        EmitFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["family", "metric", "bin_lo", "bin_hi", "count"])?;
            for h in histograms {
                for (i, &count) in h.counts.iter().enumerate() {
                    w.write_record([
                        h.family.name(),
                        h.metric.name(),
                        &round_sig12(h.bin_edges[i]).to_string(),
                        &round_sig12(h.bin_edges[i + 1]).to_string(),
                        &count.to_string(),
                    ])?;
                }
            }
            w.flush()
        }
        EmitFormat::Json => {
            let mut families = Map::new();
            for h in histograms {
                let metric_block = json!({
                    "bin_edges": h.bin_edges.iter().map(|&e| json_number(e)).collect::<Vec<_>>(),
                    "counts": h.counts,
                    "summary": {
                        "min": json_opt(h.summary.min),
                        "max": json_opt(h.summary.max),
                        "mean": json_opt(h.summary.mean),
                        "median": json_opt(h.summary.median),
                    },
                    "undefined_count": h.undefined_count,
                });
                families
                    .entry(h.family.name().to_string())
                    .or_insert_with(|| Value::Object(Map::new()))
                    .as_object_mut()
                    .expect("family block is an object")
                    .insert(h.metric.name().to_string(), metric_block);
            }
            serde_json::to_writer_pretty(&mut *out, &Value::Object(families))?;
            writeln!(out)
        }
    }
}

/// Writes a panel as CSV rows (metric, value, defined, warning) or a JSON
/// object with the metric values and their flags.
pub fn emit_panel(panel: &MetricPanel, format: EmitFormat, out: &mut dyn Write) -> io::Result<()> {
    match format {
        EmitFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["metric", "value", "defined", "warning"])?;
            for (metric, score) in &panel.entries {
                w.write_record([
                    metric.name(),
                    &round_sig12(score.value).to_string(),
                    &score.defined.to_string(),
                    &score.assumption_warning.to_string(),
                ])?;
            }
            w.flush()
        }
        EmitFormat::Json => {
            let mut metrics = Map::new();
            let mut defined = Map::new();
            let mut warnings = Map::new();
            for (metric, score) in &panel.entries {
                metrics.insert(metric.name().to_string(), json_number(score.value));
                defined.insert(metric.name().to_string(), Value::Bool(score.defined));
                warnings.insert(
                    metric.name().to_string(),
                    Value::Bool(score.assumption_warning),
                );
            }
            let doc = json!({
                "k": panel.k,
                "n": panel.n,
                "rho": json_number(panel.rho),
                "metrics": metrics,
                "defined": defined,
                "warnings": warnings,
            });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn edges_are_exact_at_the_anchors() {
        let edges = bin_edges(40);
        assert_eq!(edges.len(), 41);
        assert_eq!(edges[0], -1.0);
        assert_eq!(edges[20], 0.0);
        assert_eq!(edges[40], 1.0);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn edge_scores_go_to_the_higher_bin() {
        let edges = bin_edges(4);
        assert_eq!(edges, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(bin_index(&edges, -1.0), 0);
        assert_eq!(bin_index(&edges, -0.5), 1);
        assert_eq!(bin_index(&edges, 0.0), 2);
        assert_eq!(bin_index(&edges, 0.25), 2);
        assert_eq!(bin_index(&edges, 0.5), 3);
        assert_eq!(bin_index(&edges, 1.0), 3);
        assert_eq!(bin_index(&edges, -1.5), 0);
        assert_eq!(bin_index(&edges, 1.5), 3);
    }

    #[test]
    fn config_validation_errors() {
        let fam = |f| FamilySpec::new(f, 5, 100).unwrap();
        let rho = RhoParameter::default();
        assert_eq!(
            ExperimentConfig::new(vec![], 0, vec![], rho, 1, 40).unwrap_err(),
            ExperimentError::ZeroReplicates
        );
        assert_eq!(
            ExperimentConfig::new(vec![], 10, vec![], rho, 1, 1).unwrap_err(),
            ExperimentError::TooFewBins { bins: 1 }
        );
        assert_eq!(
            ExperimentConfig::new(
                vec![fam(Family::Hollow), fam(Family::Hollow)],
                10,
                vec![],
                rho,
                1,
                40
            )
            .unwrap_err(),
            ExperimentError::DuplicateFamily { name: "hollow" }
        );
    }

    #[test]
    fn histogram_mass_is_conserved() {
        let config = ExperimentConfig::new(
            vec![
                FamilySpec::new(Family::Diagonal, 5, 200).unwrap(),
                FamilySpec::new(Family::Hollow, 5, 200).unwrap(),
            ],
            50,
            ExperimentConfig::default_metrics(),
            RhoParameter::default(),
            99,
            40,
        )
        .unwrap();
        let histograms = run_experiment(&config);
        assert_eq!(histograms.len(), 2 * 11);
        for h in &histograms {
            assert_eq!(h.replicates(), 50, "{} {}", h.family, h.metric.name());
        }
    }

    #[test]
    fn summary_stats_handle_odd_even_and_empty() {
        let s = SummaryStats::from_values(&[0.5, -1.0, 0.0]);
        assert_eq!(s.min, Some(-1.0));
        assert_eq!(s.max, Some(0.5));
        assert_eq!(s.median, Some(0.0));
        assert_abs_diff_eq!(s.mean.unwrap(), -1.0 / 6.0, epsilon = 1e-15);
        let s = SummaryStats::from_values(&[1.0, 0.0]);
        assert_eq!(s.median, Some(0.5));
        let s = SummaryStats::from_values(&[]);
        assert_eq!(s.mean, None);
        assert_eq!(s.median, None);
    }

    #[test]
    fn panel_covers_binary_extras_only_for_two_classes() {
        let cm = ConfusionMatrix::from_rows(&[vec![50, 10], vec![5, 35]]).unwrap();
        let panel = score_matrix(&cm, RhoParameter::default(), None);
        assert_eq!(panel.entries.len(), 14);
        assert_eq!(panel.entries[0].0, Metric::RawAccuracy);
        let cm3 = ConfusionMatrix::from_rows(&[
            vec![5, 1, 0],
            vec![0, 6, 1],
            vec![1, 0, 7],
        ])
        .unwrap();
        let panel = score_matrix(&cm3, RhoParameter::default(), None);
        assert_eq!(panel.entries.len(), 11);
    }

    #[test]
    fn round_sig12_fixtures() {
        assert_eq!(round_sig12(0.2469879518072289), 0.246987951807);
        assert_eq!(round_sig12(-0.95), -0.95);
        assert_eq!(round_sig12(1.0), 1.0);
        assert_eq!(round_sig12(0.0), 0.0);
        assert_eq!(round_sig12(2.0f64 / 3.0), 0.666666666667);
    }

    #[test]
    fn empty_metric_list_gives_header_only_csv() {
        let config = ExperimentConfig::new(
            vec![FamilySpec::new(Family::Diagonal, 5, 100).unwrap()],
            5,
            vec![],
            RhoParameter::default(),
            7,
            40,
        )
        .unwrap();
        let histograms = run_experiment(&config);
        let mut buf = Vec::new();
        emit_histograms(&histograms, EmitFormat::Csv, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "family,metric,bin_lo,bin_hi,count\n"
        );
    }

    #[test]
    fn csv_rows_carry_pretty_edges() {
        let config = ExperimentConfig::new(
            vec![FamilySpec::new(Family::Diagonal, 5, 100).unwrap()],
            5,
            vec![Metric::A],
            RhoParameter::default(),
            7,
            4,
        )
        .unwrap();
        let histograms = run_experiment(&config);
        let mut buf = Vec::new();
        emit_histograms(&histograms, EmitFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4);
        assert_eq!(lines[1], "diagonal,a,-1,-0.5,0");
        assert_eq!(lines[4], "diagonal,a,0.5,1,5");
    }

    #[test]
    fn json_panel_prints_twelve_significant_digits() {
        let cm = ConfusionMatrix::from_rows(&[vec![993, 3], vec![3, 1]]).unwrap();
        let panel = score_matrix(&cm, RhoParameter::new(0.9999).unwrap(), None);
        let mut buf = Vec::new();
        emit_panel(&panel, EmitFormat::Json, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"mcc\": 0.246987951807"), "{text}");
        assert!(text.contains("\"a\": 0.988"), "{text}");
    }

    #[test]
    fn emission_is_byte_stable_across_runs() {
        let config = ExperimentConfig::new(
            vec![FamilySpec::new(Family::NearlyUniform, 5, 1000).unwrap()],
            100,
            ExperimentConfig::default_metrics(),
            RhoParameter::default(),
            42,
            40,
        )
        .unwrap();
        let mut first = Vec::new();
        emit_histograms(&run_experiment(&config), EmitFormat::Json, &mut first).unwrap();
        let mut second = Vec::new();
        emit_histograms(&run_experiment(&config), EmitFormat::Json, &mut second).unwrap();
        assert_eq!(first, second);
        assert!(!first.is_empty());
    }

    #[test]
    fn score_file_reports_path_on_errors() {
        let err = score_file(
            Path::new("/nonexistent/matrix.txt"),
            RhoParameter::default(),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/matrix.txt"));
    }
}
