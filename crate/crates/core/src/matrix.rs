//! Confusion-matrix type, validation, marginal statistics, structural
//! predicates, and the canonical text format.

use thiserror::Error;

/// Default cap on the total count; keeps downstream integer products exact.
const MAX_TOTAL: u64 = i64::MAX as u64;

/// Errors from constructing or parsing a confusion matrix.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatrixError {
    #[error("empty input: expected a square grid of counts")]
    Empty,
    #[error("non-square grid: row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-square grid: {rows} rows but {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("row {row}, column {col}: {token:?} is not a non-negative integer")]
    BadEntry {
        row: usize,
        col: usize,
        token: String,
    },
    #[error("matrix is all zeros; at least one count must be positive")]
    AllZero,
    #[error("{k} class(es) given, need at least 2")]
    TooFewClasses { k: usize },
    #[error("label line names {found} classes, grid has {expected}")]
    LabelCount { expected: usize, found: usize },
    #[error("total count exceeds {MAX_TOTAL}")]
    TotalTooLarge,
    #[error("matrix is {k}x{k}, expected 2x2")]
    NotBinary { k: usize },
}

/// K x K matrix of classification counts. Entry (k, l) is the number of
/// class-k cases predicted as class l: rows are actual, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    k: usize,
    labels: Option<Vec<String>>,
}

/// Row sums alpha, column sums beta, and the shared total N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marginals {
    pub alpha: Vec<u64>,
    pub beta: Vec<u64>,
    pub total: u64,
}

/// Structural predicates of a matrix: diagonal, hollow, absent classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureFlags {
    pub is_diagonal: bool,
    pub is_hollow: bool,
    /// Classes with no actual cases (row sum zero), ascending.
    pub zero_rows: Vec<usize>,
    /// Classes never predicted (column sum zero), ascending.
    pub zero_cols: Vec<usize>,
}

/// The 2x2 layout: counts[(0,0)] = TP, (0,1) = FN, (1,0) = FP, (1,1) = TN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryCounts {
    pub true_positive: u64,
    pub false_negative: u64,
    pub false_positive: u64,
    pub true_negative: u64,
}

impl ConfusionMatrix {
    /// Builds a matrix from whole rows, validating squareness and positivity.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, MatrixError> {
        let k = rows.len();
        if k == 0 {
            return Err(MatrixError::Empty);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(MatrixError::RaggedRow {
                    row: i + 1,
                    expected: k,
                    found: row.len(),
                });
            }
        }
        let counts: Vec<u64> = rows.iter().flatten().copied().collect();
        Self::from_flat(counts, k)
    }

    /// Builds a matrix from a row-major slab of k*k counts.
    pub fn from_flat(counts: Vec<u64>, k: usize) -> Result<Self, MatrixError> {
        if k < 2 {
            return Err(MatrixError::TooFewClasses { k });
        }
        assert_eq!(counts.len(), k * k, "flat count buffer must be k*k");
        let mut total: u64 = 0;
        for &c in &counts {
            total = total.checked_add(c).ok_or(MatrixError::TotalTooLarge)?;
        }
        if total == 0 {
            return Err(MatrixError::AllZero);
        }
        if total > MAX_TOTAL {
            return Err(MatrixError::TotalTooLarge);
        }
        Ok(Self {
            counts,
            k,
            labels: None,
        })
    }

    /// Attaches class labels; the list length must match K.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MatrixError> {
        if labels.len() != self.k {
            return Err(MatrixError::LabelCount {
                expected: self.k,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Parses the canonical text format: K lines of K comma- or
    /// whitespace-separated non-negative integers, optional `#` comment lines,
    /// optional leading `labels: a,b,c` line.
    pub fn parse(text: &str) -> Result<Self, MatrixError> {
        let mut labels: Option<Vec<String>> = None;
        let mut rows: Vec<Vec<u64>> = Vec::new();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if rows.is_empty() && labels.is_none() {
                if let Some(rest) = line.strip_prefix("labels:") {
                    labels = Some(rest.split(',').map(|s| s.trim().to_string()).collect());
                    continue;
                }
            }
            let row_no = rows.len() + 1;
            let tokens: Vec<&str> = if line.contains(',') {
                line.split(',').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            let mut row = Vec::with_capacity(tokens.len());
            for (col, token) in tokens.iter().enumerate() {
                let value: u64 = token.parse().map_err(|_| MatrixError::BadEntry {
                    row: row_no,
                    col: col + 1,
                    token: token.to_string(),
                })?;
                row.push(value);
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(MatrixError::Empty);
        }
        let width = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(MatrixError::RaggedRow {
                    row: i + 1,
                    expected: width,
                    found: row.len(),
                });
            }
        }
        if rows.len() != width {
            return Err(MatrixError::NotSquare {
                rows: rows.len(),
                cols: width,
            });
        }
        let cm = Self::from_rows(&rows)?;
        match labels {
            Some(l) => cm.with_labels(l),
            None => Ok(cm),
        }
    }

    /// Renders the canonical text format; `parse(render(cm)) == cm`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(labels) = &self.labels {
            out.push_str("labels: ");
            out.push_str(&labels.join(","));
            out.push('\n');
        }
        for row in 0..self.k {
            let cells: Vec<String> = (0..self.k)
                .map(|col| self.count(row, col).to_string())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Number of classes K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Total number of cases N.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Count of class-k cases predicted as class l.
    pub fn count(&self, k: usize, l: usize) -> u64 {
        self.counts[k * self.k + l]
    }

    /// Row-major view of all counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Class labels, when the source carried them.
    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Row sums, column sums, and total.
    pub fn marginals(&self) -> Marginals {
        let mut alpha = vec![0u64; self.k];
        let mut beta = vec![0u64; self.k];
        for row in 0..self.k {
            for col in 0..self.k {
                let c = self.count(row, col);
                alpha[row] += c;
                beta[col] += c;
            }
        }
        let total = alpha.iter().sum();
        Marginals { alpha, beta, total }
    }

    /// Structural flags, computed exactly from the counts.
    pub fn structure(&self) -> StructureFlags {
        let m = self.marginals();
        let mut is_diagonal = true;
        let mut is_hollow = true;
        for row in 0..self.k {
            for col in 0..self.k {
                let c = self.count(row, col);
                if row == col {
                    if c != 0 {
                        is_hollow = false;
                    }
                } else if c != 0 {
                    is_diagonal = false;
                }
            }
        }
        let zero_rows = (0..self.k).filter(|&k| m.alpha[k] == 0).collect();
        let zero_cols = (0..self.k).filter(|&k| m.beta[k] == 0).collect();
        StructureFlags {
            is_diagonal,
            is_hollow,
            zero_rows,
            zero_cols,
        }
    }

    /// TP/FN/FP/TN view of a 2x2 matrix.
    pub fn binary_counts(&self) -> Result<BinaryCounts, MatrixError> {
        if self.k != 2 {
            return Err(MatrixError::NotBinary { k: self.k });
        }
        Ok(BinaryCounts {
            true_positive: self.count(0, 0),
            false_negative: self.count(0, 1),
            false_positive: self.count(1, 0),
            true_negative: self.count(1, 1),
        })
    }

    /// Matrix with rows and columns exchanged (actual and predicted swapped).
    pub fn transpose(&self) -> Self {
        let mut counts = vec![0u64; self.k * self.k];
        for row in 0..self.k {
            for col in 0..self.k {
                counts[col * self.k + row] = self.count(row, col);
            }
        }
        Self {
            counts,
            k: self.k,
            labels: self.labels.clone(),
        }
    }

    /// Matrix with every count multiplied by m >= 1.
    pub fn scaled(&self, m: u64) -> Result<Self, MatrixError> {
        let mut counts = Vec::with_capacity(self.counts.len());
        for &c in &self.counts {
            counts.push(c.checked_mul(m).ok_or(MatrixError::TotalTooLarge)?);
        }
        let scaled = Self::from_flat(counts, self.k)?;
        match &self.labels {
            Some(l) => scaled.with_labels(l.clone()),
            None => Ok(scaled),
        }
    }
}

impl BinaryCounts {
    /// Total number of cases.
    pub fn n(&self) -> u64 {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }
}
