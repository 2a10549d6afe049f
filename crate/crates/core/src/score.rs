//! Score values and metric names shared by all metric modules.

/// A metric value plus the bookkeeping the degeneracy conventions require.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// The metric value; 0.0 when a zero-denominator convention was applied.
    pub value: f64,
    /// False when the value involved a degenerate-input convention.
    pub defined: bool,
    /// True when the value is fine but a stated modeling assumption was
    /// violated (currently only: some class has alpha_k + beta_k >= N).
    pub assumption_warning: bool,
}

impl Score {
    /// A well-defined value.
    pub fn new(value: f64) -> Self {
        Self {
            value,
            defined: true,
            assumption_warning: false,
        }
    }

    /// The flagged-zero convention for a fully degenerate input.
    pub fn undefined() -> Self {
        Self {
            value: 0.0,
            defined: false,
            assumption_warning: false,
        }
    }

    /// A value computed under a per-class degeneracy convention.
    pub fn flagged(value: f64) -> Self {
        Self {
            value,
            defined: false,
            assumption_warning: false,
        }
    }

    /// Attaches the assumption warning without touching the value.
    pub fn warn_if(mut self, warning: bool) -> Self {
        self.assumption_warning |= warning;
        self
    }
}

/// Identifiers for every score the library computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    /// Rescaled accuracy 2*trace/N - 1, in [-1, 1].
    A,
    /// Plain binary accuracy (TP+TN)/N, in [0, 1]. K = 2 only.
    RawAccuracy,
    /// Binary F1. K = 2 only.
    F1,
    /// Matthews correlation coefficient. K = 2 only.
    Mcc,
    /// Trace-form multiclass correlation.
    RK,
    /// Mean of the per-class Pearson coefficients.
    Mpc1,
    /// Summed covariances over summed per-class normalizers.
    Mpc2,
    /// R_K on per-class sequences with shared zeros removed.
    ErK,
    /// MPC1 on per-class sequences with shared zeros removed.
    Empc1,
    /// MPC2 on reduced sequences; identical to ErK.
    Empc2,
    /// Extended MCC, the product-form metric.
    Emcc,
    /// ErK at reduced dimension alpha_k + beta_k - rho*C_kk.
    ErKRho,
    /// Mean per-class Delta_k at the rho-reduced dimension.
    Empc1Rho,
    /// MPC2 form at the rho-reduced dimension.
    Empc2Rho,
}

impl Metric {
    /// The metrics every experiment computes by default, in output order.
    pub const EXPERIMENT_DEFAULT: [Metric; 11] = [
        Metric::A,
        Metric::RK,
        Metric::Mpc1,
        Metric::Mpc2,
        Metric::ErK,
        Metric::Empc1,
        Metric::Empc2,
        Metric::Emcc,
        Metric::ErKRho,
        Metric::Empc1Rho,
        Metric::Empc2Rho,
    ];

    /// Extra metrics reported on 2x2 panels.
    pub const BINARY_EXTRAS: [Metric; 3] = [Metric::RawAccuracy, Metric::F1, Metric::Mcc];

    /// Stable lowercase name used in files and CLI flags.
    pub fn name(self) -> &'static str {
        match self {
            Metric::A => "a",
            Metric::RawAccuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::Mcc => "mcc",
            Metric::RK => "r_k",
            Metric::Mpc1 => "mpc1",
            Metric::Mpc2 => "mpc2",
            Metric::ErK => "er_k",
            Metric::Empc1 => "empc1",
            Metric::Empc2 => "empc2",
            Metric::Emcc => "emcc",
            Metric::ErKRho => "er_k_rho",
            Metric::Empc1Rho => "empc1_rho",
            Metric::Empc2Rho => "empc2_rho",
        }
    }

    /// True for the metrics that only apply to 2x2 matrices.
    pub fn binary_only(self) -> bool {
        matches!(self, Metric::RawAccuracy | Metric::F1 | Metric::Mcc)
    }

    /// Inverse of [`Metric::name`].
    pub fn parse(name: &str) -> Option<Metric> {
        let all = [
            Metric::A,
            Metric::RawAccuracy,
            Metric::F1,
            Metric::Mcc,
            Metric::RK,
            Metric::Mpc1,
            Metric::Mpc2,
            Metric::ErK,
            Metric::Empc1,
            Metric::Empc2,
            Metric::Emcc,
            Metric::ErKRho,
            Metric::Empc1Rho,
            Metric::Empc2Rho,
        ];
        all.into_iter().find(|m| m.name() == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in Metric::EXPERIMENT_DEFAULT
            .into_iter()
            .chain(Metric::BINARY_EXTRAS)
        {
            assert_eq!(Metric::parse(m.name()), Some(m));
        }
        assert_eq!(Metric::parse("nope"), None);
    }

    #[test]
    fn score_constructors_set_flags() {
        assert!(Score::new(0.5).defined);
        assert!(!Score::undefined().defined);
        assert_eq!(Score::flagged(0.25).value, 0.25);
        assert!(Score::new(1.0).warn_if(true).assumption_warning);
        assert!(!Score::new(1.0).warn_if(false).assumption_warning);
    }
}
