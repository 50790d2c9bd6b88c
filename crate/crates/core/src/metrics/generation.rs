use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MetricError;

/// `n × d` feature samples with optional per-row group labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self, MetricError> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(MetricError::Empty);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(Self { data, labels: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(MetricError::DimensionMismatch { left: d.to_string(), right: r.len().to_string() });
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, MetricError> {
        if labels.len() != self.rows() {
            return Err(MetricError::LabelCount { expected: self.rows(), found: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row_distance(&self, i: usize, other: &FeatureMatrix, j: usize) -> f64 {
        (0..self.cols()).map(|c| (self.data[(i, c)] - other.data[(j, c)]).powi(2)).sum::<f64>().sqrt()
    }

    fn mean_and_covariance(&self) -> Result<(DVector<f64>, DMatrix<f64>), MetricError> {
        let n = self.rows();
        if n < 2 {
            return Err(MetricError::DegenerateSample(n));
        }
        let mean = self.data.row_mean().transpose();
        let mut centered = self.data.clone();
        for mut row in centered.row_iter_mut() {
            row -= mean.transpose();
        }
        let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
        Ok((mean, cov))
    }
}

fn same_width(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<(), MetricError> {
    if a.cols() != b.cols() {
        return Err(MetricError::DimensionMismatch { left: a.cols().to_string(), right: b.cols().to_string() });
    }
    Ok(())
}

fn symmetric(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Principal square root of a symmetric PSD matrix; negative eigenvalues
/// (round-off) are clamped to zero.
fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetric(m));
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidReport {
    pub value: f64,
    /// Set when either sample has no more rows than columns, so its
    /// covariance is singular.
    pub rank_deficient: bool,
}

/// Fréchet distance between Gaussian fits of two samples:
/// `‖μa − μb‖² + Tr(Σa + Σb − 2 (Σa Σb)^½)`.
///
/// The trace of `(Σa Σb)^½` is taken as `Σ √λ` over the eigenvalues of the
/// symmetric `Σa^½ Σb Σa^½`, with negative eigenvalues clamped to zero.
/// Covariances use the `1/(n − 1)` normalization.
pub fn fid(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<f64, MetricError> {
    fid_report(a, b).map(|r| r.value)
}

pub fn fid_report(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FidReport, MetricError> {
    same_width(a, b)?;
    let (mu_a, cov_a) = a.mean_and_covariance()?;
    let (mu_b, cov_b) = b.mean_and_covariance()?;
    let root_a = sqrt_psd(&cov_a);
    let inner = SymmetricEigen::new(symmetric(&(&root_a * &cov_b * &root_a)));
    let cross: f64 = inner.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let value = (mu_a - mu_b).norm_squared() + cov_a.trace() + cov_b.trace() - 2.0 * cross;
    Ok(FidReport { value: value.max(0.0), rank_deficient: a.rows() <= a.cols() || b.rows() <= b.cols() })
}

/// Mean distance over the given row pairs.
pub fn diversity_with_pairs(a: &FeatureMatrix, pairs: &[(usize, usize)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut total = 0.0;
    for &(i, j) in pairs {
        if i >= a.rows() || j >= a.rows() {
            return Err(MetricError::BadPair(i, j));
        }
        total += a.row_distance(i, a, j);
    }
    Ok(total / pairs.len() as f64)
}

/// `count` disjoint pairs from a seeded shuffle of `0..n`:
/// `(p[0], p[1]), (p[2], p[3]), …`.
pub fn disjoint_pairs(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, MetricError> {
    if count == 0 {
        return Err(MetricError::Empty);
    }
    if n < 2 * count {
        return Err(MetricError::TooFewSamples { needed: 2 * count, found: n });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    Ok((0..count).map(|i| (perm[2 * i], perm[2 * i + 1])).collect())
}

/// Mean Euclidean distance over `pairs` disjoint random row pairs.
pub fn diversity(a: &FeatureMatrix, pairs: usize, seed: u64) -> Result<f64, MetricError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    diversity_with_pairs(a, &disjoint_pairs(a.rows(), pairs, &mut rng)?)
}

/// Row indices per label, labels in sorted order.
pub fn groups(a: &FeatureMatrix) -> Result<BTreeMap<&str, Vec<usize>>, MetricError> {
    let labels = a.labels().ok_or(MetricError::MissingLabels)?;
    let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        out.entry(l.as_str()).or_default().push(i);
    }
    Ok(out)
}

/// Mean over groups (sorted by label) of the mean within-group distance over
/// `pairs` disjoint random pairs. One generator, seeded once, draws every
/// group's pairing in label order.
pub fn multimodality(a: &FeatureMatrix, pairs: usize, seed: u64) -> Result<f64, MetricError> {
    let groups = groups(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for (label, rows) in &groups {
        if rows.len() < 2 * pairs {
            return Err(MetricError::GroupTooSmall { group: label.to_string(), needed: 2 * pairs, found: rows.len() });
        }
        let local = disjoint_pairs(rows.len(), pairs, &mut rng)?;
        let mapped: Vec<_> = local.iter().map(|&(i, j)| (rows[i], rows[j])).collect();
        total += diversity_with_pairs(a, &mapped)?;
    }
    Ok(total / groups.len() as f64)
}

/// Mean distance between matched text and motion rows.
pub fn mm_dist(text: &FeatureMatrix, motion: &FeatureMatrix) -> Result<f64, MetricError> {
    same_width(text, motion)?;
    if text.rows() != motion.rows() {
        return Err(MetricError::DimensionMismatch { left: text.rows().to_string(), right: motion.rows().to_string() });
    }
    Ok((0..text.rows()).map(|i| text.row_distance(i, motion, i)).sum::<f64>() / text.rows() as f64)
}

/// Zero-based rank of `motion[truth]` among `pool` by distance to
/// `text[anchor]`: the number of pool members strictly closer. Ties go to the
/// true match.
pub fn retrieval_rank(text: &FeatureMatrix, anchor: usize, motion: &FeatureMatrix, truth: usize, pool: &[usize]) -> usize {
    let d_true = text.row_distance(anchor, motion, truth);
    pool.iter().filter(|&&j| j != truth && text.row_distance(anchor, motion, j) < d_true).count()
}

/// R-precision at `k = 1..=top_k`. Each text is scored against its own
/// motion plus `pool − 1` distractors drawn without replacement from the
/// other rows; a hit is a rank below `k`.
pub fn r_precision(
    text: &FeatureMatrix,
    motion: &FeatureMatrix,
    pool: usize,
    top_k: usize,
    seed: u64,
) -> Result<Vec<f64>, MetricError> {
    same_width(text, motion)?;
    let n = text.rows();
    if motion.rows() != n {
        return Err(MetricError::DimensionMismatch { left: n.to_string(), right: motion.rows().to_string() });
    }
    if pool < 2 || pool > n {
        return Err(MetricError::PoolTooLarge { pool, n });
    }
    if top_k == 0 || top_k >= pool {
        return Err(MetricError::BadTopK { k: top_k, pool });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; top_k];
    for i in 0..n {
        let distractors: Vec<usize> =
            index::sample(&mut rng, n - 1, pool - 1).into_iter().map(|j| if j >= i { j + 1 } else { j }).collect();
        let rank = retrieval_rank(text, i, motion, i, &distractors);
        for (k, h) in hits.iter_mut().enumerate() {
            if rank <= k {
                *h += 1;
            }
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / n as f64).collect())
}
