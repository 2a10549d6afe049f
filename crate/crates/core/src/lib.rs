//! Correlation-style quality metrics for K-class confusion matrices.
//!
//! The crate computes the classical binary scores (accuracy, F1, MCC),
//! their multiclass correlation extensions, and an enhanced family that
//! rebuilds each per-class correlation on shortened indicator sequences
//! so that complete misclassification scores -1 for every K. A
//! sequence-level oracle recomputes everything from first principles,
//! a seeded generator produces the structural matrix families used in
//! simulation, and the experiment harness aggregates schedule-invariant
//! histograms behind the `mpc-metrics` command-line tool.

pub mod binary;
pub mod enhanced;
pub mod experiment;
pub mod generator;
pub mod matrix;
pub mod multiclass;
pub mod oracle;
pub mod score;

pub use matrix::{BinaryCounts, ConfusionMatrix, Marginals, MatrixError, StructureFlags};
pub use score::{Metric, Score};

// Compiles every fenced Rust block in the guide as a doc-test, so the
// book cannot drift from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $path))]
            mod $name {}
        };
    }

    chapter!(overview, "overview.md");
    chapter!(confusion_matrices, "confusion-matrices.md");
    chapter!(binary_metrics, "binary-metrics.md");
    chapter!(correlation_view, "correlation-view.md");
    chapter!(multiclass_metrics, "multiclass-metrics.md");
    chapter!(enhanced_metrics, "enhanced-metrics.md");
    chapter!(reduction_parameter, "reduction-parameter.md");
    chapter!(random_families, "random-families.md");
    chapter!(simulation_cli, "simulation-cli.md");
}
