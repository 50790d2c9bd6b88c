//! Codebook vector quantization: nearest-entry assignment, EMA updates and
//! dead-code reset.
//!
//! Matrices are row-major in meaning: a codebook is `K × d` (one entry per
//! row) and a latent batch is `L × d`.

use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VqError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),
    #[error("token {index} is out of range for a codebook of {size} entries")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("latent batch is empty")]
    EmptyBatch,
}

pub const DEFAULT_DECAY: f64 = 0.99;
pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_USAGE_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    entries: DMatrix<f64>,
    ema_counts: Vec<f64>,
    ema_sums: DMatrix<f64>,
    decay: f64,
    epsilon: f64,
    usage: Vec<f64>,
}

impl Codebook {
    /// Fresh codebook: each EMA count starts at 1 with its sum equal to the entry.
    pub fn new(entries: DMatrix<f64>) -> Result<Self, VqError> {
        let k = entries.nrows();
        Self::from_state(entries.clone(), vec![1.0; k], entries, DEFAULT_DECAY, DEFAULT_EPSILON, vec![0.0; k])
    }

    pub fn from_state(
        entries: DMatrix<f64>,
        ema_counts: Vec<f64>,
        ema_sums: DMatrix<f64>,
        decay: f64,
        epsilon: f64,
        usage: Vec<f64>,
    ) -> Result<Self, VqError> {
        let (k, d) = entries.shape();
        if k == 0 || d == 0 {
            return Err(VqError::InvalidCodebook(format!("shape {k}x{d} must be at least 1x1")));
        }
        if ema_sums.shape() != (k, d) {
            return Err(VqError::InvalidCodebook(format!(
                "ema sums are {}x{}, entries are {k}x{d}",
                ema_sums.nrows(),
                ema_sums.ncols()
            )));
        }
        if ema_counts.len() != k || usage.len() != k {
            return Err(VqError::InvalidCodebook("counts and usage need one value per entry".into()));
        }
        if entries.iter().chain(ema_sums.iter()).any(|v| !v.is_finite()) {
            return Err(VqError::InvalidCodebook("entries and sums must be finite".into()));
        }
        if ema_counts.iter().chain(&usage).any(|c| !c.is_finite() || *c < 0.0) {
            return Err(VqError::InvalidCodebook("counts and usage must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&decay) {
            return Err(VqError::InvalidCodebook(format!("decay {decay} is outside [0, 1]")));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(VqError::InvalidCodebook(format!("epsilon {epsilon} must be >= 0")));
        }
        Ok(Self { entries, ema_counts, ema_sums, decay, epsilon, usage })
    }

    pub fn with_decay(mut self, decay: f64) -> Result<Self, VqError> {
        if !(0.0..=1.0).contains(&decay) {
            return Err(VqError::InvalidCodebook(format!("decay {decay} is outside [0, 1]")));
        }
        self.decay = decay;
        Ok(self)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self, VqError> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(VqError::InvalidCodebook(format!("epsilon {epsilon} must be >= 0")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dim(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn ema_counts(&self) -> &[f64] {
        &self.ema_counts
    }

    pub fn ema_sums(&self) -> &DMatrix<f64> {
        &self.ema_sums
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Assignments counted by `ema_update` since the last reset.
    pub fn usage(&self) -> &[f64] {
        &self.usage
    }

    fn check_dim(&self, latents: &DMatrix<f64>) -> Result<(), VqError> {
        if latents.ncols() != self.dim() {
            return Err(VqError::DimensionMismatch { expected: self.dim(), found: latents.ncols() });
        }
        Ok(())
    }

    fn sq_dist(&self, k: usize, latents: &DMatrix<f64>, i: usize) -> f64 {
        (0..self.dim()).map(|c| (latents[(i, c)] - self.entries[(k, c)]).powi(2)).sum()
    }

    fn nearest(&self, latents: &DMatrix<f64>, i: usize) -> (usize, f64) {
        let mut best = (0, self.sq_dist(0, latents, i));
        for k in 1..self.size() {
            let d = self.sq_dist(k, latents, i);
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }

    /// Index of the nearest entry for every latent row; ties go to the lowest index.
    pub fn assign(&self, latents: &DMatrix<f64>) -> Result<TokenSequence, VqError> {
        self.check_dim(latents)?;
        let indices = (0..latents.nrows()).map(|i| self.nearest(latents, i).0).collect();
        Ok(TokenSequence { indices, codebook_size: self.size(), frames: None, downsample: None })
    }

    /// `Σ ‖z − entry(assign(z))‖²` over the batch.
    pub fn quantization_error(&self, latents: &DMatrix<f64>) -> Result<f64, VqError> {
        self.check_dim(latents)?;
        Ok((0..latents.nrows()).map(|i| self.nearest(latents, i).1).sum())
    }

    /// Entry rows for each token.
    pub fn decode(&self, tokens: &TokenSequence) -> Result<DMatrix<f64>, VqError> {
        tokens.check(self.size())?;
        Ok(DMatrix::from_fn(tokens.indices.len(), self.dim(), |r, c| self.entries[(tokens.indices[r], c)]))
    }

    /// One EMA step:
    ///
    /// ```text
    /// N_k ← γ N_k + (1 − γ) n_k
    /// m_k ← γ m_k + (1 − γ) Σ_{z → k} z
    /// e_k ← m_k / ((N_k + ε) / (Σ N + K ε) · Σ N)
    /// ```
    ///
    /// With `γ = 1` the state is a fixed point and the entries are left as they are.
    pub fn ema_update(&mut self, latents: &DMatrix<f64>, assignments: &TokenSequence) -> Result<(), VqError> {
        self.check_dim(latents)?;
        if assignments.indices.len() != latents.nrows() {
            return Err(VqError::DimensionMismatch { expected: latents.nrows(), found: assignments.indices.len() });
        }
        assignments.check(self.size())?;
        let (k, d) = self.entries.shape();
        let mut counts = vec![0.0; k];
        let mut sums = DMatrix::<f64>::zeros(k, d);
        for (i, &a) in assignments.indices.iter().enumerate() {
            counts[a] += 1.0;
            for c in 0..d {
                sums[(a, c)] += latents[(i, c)];
            }
        }
        for (u, n) in self.usage.iter_mut().zip(&counts) {
            *u += n;
        }
        if self.decay == 1.0 {
            return Ok(());
        }
        let g = self.decay;
        for j in 0..k {
            self.ema_counts[j] = g * self.ema_counts[j] + (1.0 - g) * counts[j];
            for c in 0..d {
                self.ema_sums[(j, c)] = g * self.ema_sums[(j, c)] + (1.0 - g) * sums[(j, c)];
            }
        }
        let total: f64 = self.ema_counts.iter().sum();
        let eps = self.epsilon;
        for j in 0..k {
            let smoothed = (self.ema_counts[j] + eps) / (total + k as f64 * eps) * total;
            if smoothed > 0.0 {
                for c in 0..d {
                    self.entries[(j, c)] = self.ema_sums[(j, c)] / smoothed;
                }
            }
        }
        Ok(())
    }

    /// Replaces every entry whose usage is below `threshold` with a batch
    /// latent, taking latents in descending order of quantization error (ties
    /// by row order) and cycling if there are more dead codes than latents.
    /// Replaced entries restart with count 1 and sum equal to the latent; all
    /// usage counters are zeroed. Returns the number of entries replaced.
    pub fn reset_dead_codes(&mut self, latents: &DMatrix<f64>, threshold: f64) -> Result<usize, VqError> {
        self.check_dim(latents)?;
        if latents.nrows() == 0 {
            return Err(VqError::EmptyBatch);
        }
        let dead: Vec<usize> = (0..self.size()).filter(|&k| self.usage[k] < threshold).collect();
        if !dead.is_empty() {
            let errors: Vec<f64> = (0..latents.nrows()).map(|i| self.nearest(latents, i).1).collect();
            let mut order: Vec<usize> = (0..latents.nrows()).collect();
            order.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));
            for (n, &k) in dead.iter().enumerate() {
                let src = order[n % order.len()];
                for c in 0..self.dim() {
                    self.entries[(k, c)] = latents[(src, c)];
                    self.ema_sums[(k, c)] = latents[(src, c)];
                }
                self.ema_counts[k] = 1.0;
            }
        }
        self.usage.iter_mut().for_each(|u| *u = 0.0);
        Ok(dead.len())
    }
}

/// Codebook indices for a (downsampled) motion: `L = ⌊T / l⌋` tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub indices: Vec<usize>,
    pub codebook_size: usize,
    /// Source frame count `T`, when known.
    pub frames: Option<usize>,
    /// Temporal downsampling factor `l`, when known.
    pub downsample: Option<usize>,
}

impl TokenSequence {
    pub fn check(&self, codebook_size: usize) -> Result<(), VqError> {
        if let Some(&index) = self.indices.iter().find(|&&i| i >= codebook_size) {
            return Err(VqError::IndexOutOfRange { index, size: codebook_size });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Token count for `frames` frames at downsampling factor `factor`.
pub fn token_count(frames: usize, factor: usize) -> usize {
    frames / factor.max(1)
}
