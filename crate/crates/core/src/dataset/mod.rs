//! Labeled sample matrices, class bookkeeping, splitting and noise.
//!
//! Samples are stored column-major: `x` is `D × n`, one column per sample,
//! one row per feature (spectral band). Labels are contiguous `1..=C`;
//! the values found in the source file are kept in `class_names`.

mod io;
mod synth;

pub use io::{load_dataset, read_csv, read_rawf64, save_dataset, write_csv, write_rawf64, Format};
pub use synth::{synth_gmm, ClassSpec, Component, MixtureSpec};

use ndarray::{Array2, Axis};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    x: Array2<f64>,
    labels: Vec<u32>,
    n_classes: usize,
    class_names: Vec<i64>,
}

impl LabeledDataset {
    /// Builds a dataset from labels already in `1..=C` (C = max label).
    pub fn new(x: Array2<f64>, labels: Vec<u32>) -> Result<Self> {
        let n_classes = labels.iter().copied().max().unwrap_or(0) as usize;
        let class_names = (1..=n_classes as i64).collect();
        Self::with_names(x, labels, n_classes, class_names)
    }

    /// Builds a dataset from arbitrary integer labels, renumbering them
    /// `1..=C` in order of first appearance.
    pub fn from_raw_labels(x: Array2<f64>, raw: &[i64]) -> Result<Self> {
        let mut names: Vec<i64> = Vec::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let k = match names.iter().position(|&n| n == r) {
                Some(k) => k,
                None => {
                    names.push(r);
                    names.len() - 1
                }
            };
            labels.push(k as u32 + 1);
        }
        let c = names.len();
        Self::with_names(x, labels, c, names)
    }

    fn with_names(x: Array2<f64>, labels: Vec<u32>, n_classes: usize, class_names: Vec<i64>) -> Result<Self> {
        if labels.len() != x.ncols() {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {} samples",
                labels.len(),
                x.ncols()
            )));
        }
        if n_classes < 2 {
            return Err(Error::InvalidDataset("at least two classes are required".into()));
        }
        if x.nrows() == 0 {
            return Err(Error::InvalidDataset("zero features".into()));
        }
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            if l == 0 || l as usize > n_classes {
                return Err(Error::LabelOutOfRange { label: l, n_classes });
            }
            counts[l as usize - 1] += 1;
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidDataset(format!("class {} has no samples", k + 1)));
        }
        if let Some(((r, c), _)) = x.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite value at feature {r}, sample {c}")));
        }
        Ok(Self {
            x,
            labels,
            n_classes,
            class_names,
        })
    }

    /// Same labels, new feature matrix (e.g. after projection).
    pub fn with_features(&self, x: Array2<f64>) -> Result<Self> {
        Self::with_names(x, self.labels.clone(), self.n_classes, self.class_names.clone())
    }

    /// Columns `indices`, in that order. Every class must stay represented.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let x = self.x.select(Axis(1), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::with_names(x, labels, self.n_classes, self.class_names.clone())
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n_features(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Original label value of each class, indexed by `class - 1`.
    pub fn class_names(&self) -> &[i64] {
        &self.class_names
    }

    pub fn partition(&self) -> ClassPartition {
        ClassPartition::new(self)
    }
}

/// Per-class member lists `U_k` with their sizes `n_k`; the complement
/// `Ū_k` is every other sample, of size `n − n_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    members: Vec<Vec<usize>>,
    n: usize,
}

impl ClassPartition {
    pub fn new(ds: &LabeledDataset) -> Self {
        let mut members = vec![Vec::new(); ds.n_classes()];
        for (i, &l) in ds.labels().iter().enumerate() {
            members[l as usize - 1].push(i);
        }
        Self {
            members,
            n: ds.n_samples(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.members.len()
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    /// Sample indices of class `k` (0-based class index), ascending.
    pub fn members(&self, k: usize) -> &[usize] {
        &self.members[k]
    }

    pub fn count(&self, k: usize) -> usize {
        self.members[k].len()
    }

    pub fn complement_count(&self, k: usize) -> usize {
        self.n - self.members[k].len()
    }

    pub fn min_count(&self) -> usize {
        self.members.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// Parameters of one stratified train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub seed: u64,
    pub repetition: u64,
}

/// Draws `train_per_class` samples of every class uniformly without
/// replacement for training; everything else is the test set. Both parts
/// keep the original sample order.
pub fn stratified_split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = stratified_split_indices(ds, spec)?;
    Ok((ds.select(&train)?, ds.select(&test)?))
}

/// Column indices of the split made by [`stratified_split`].
pub fn stratified_split_indices(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if spec.train_per_class == 0 {
        return Err(Error::InvalidArgument("train_per_class must be positive".into()));
    }
    let part = ds.partition();
    for k in 0..part.n_classes() {
        if spec.train_per_class >= part.count(k) {
            return Err(Error::InsufficientClassSize {
                class: k + 1,
                size: part.count(k),
                requested: spec.train_per_class,
            });
        }
    }
    let mut rng = rng_from_seed(derive_seed(spec.seed, spec.repetition));
    let mut in_train = vec![false; ds.n_samples()];
    for k in 0..part.n_classes() {
        let members = part.members(k);
        for pick in index::sample(&mut rng, members.len(), spec.train_per_class) {
            in_train[members[pick]] = true;
        }
    }
    Ok((0..ds.n_samples()).partition(|&i| in_train[i]))
}

/// Adds zero-mean Gaussian noise to every entry. Row `i` receives noise of
/// variance `percent / 100 · var(row i)`, where `var` is the population
/// variance of that band over all samples.
pub fn inject_noise(ds: &LabeledDataset, percent: f64, seed: u64) -> Result<LabeledDataset> {
    if !(0.0..=100.0).contains(&percent) {
        return Err(Error::InvalidArgument(format!("noise percent {percent} outside [0, 100]")));
    }
    if percent == 0.0 {
        return Ok(ds.clone());
    }
    let mut x = ds.x().clone();
    let n = x.ncols() as f64;
    let mut rng = rng_from_seed(seed);
    for mut row in x.rows_mut() {
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = (percent / 100.0 * var).sqrt();
        for v in row.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sd * z;
        }
    }
    ds.with_features(x)
}
