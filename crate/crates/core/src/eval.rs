//! Classification back-ends, metrics and the repeated train/test protocol.
//!
//! One repetition: derive a seed, optionally add noise to the whole dataset,
//! draw a stratified split, fit the reduction on the training part only,
//! project both parts, train the classifier on the projected training part
//! and score the projected test part.

use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_l2sc, fit_lda, RIDGE_NOTE};
use crate::dataset::{inject_noise, stratified_split, LabeledDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::l1sc::{self, SolverConfig};
use crate::projection::{Method, Projection};
use crate::rng::{derive_seed, rng_from_seed};

const NOISE_STREAM: u64 = 1;
const SOLVER_STREAM: u64 = 2;
const SVM_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// z-score every feature with training statistics before fitting.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 100,
            standardize: true,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVMs. Row `c` of `weights` scores class `c + 1`; the
/// last column is the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    weights: Array2<f64>,
    center: Array1<f64>,
    scale: Array1<f64>,
}

impl LinearSvm {
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    fn augmented(&self, x: &Array2<f64>) -> Array2<f64> {
        let d = x.nrows();
        let mut out = Array2::<f64>::ones((d + 1, x.ncols()));
        for (i, mut row) in out.rows_mut().into_iter().take(d).enumerate() {
            let (c, s) = (self.center[i], self.scale[i]);
            row.assign(&x.row(i).mapv(|v| (v - c) / s));
        }
        out
    }

    /// Margins, `C × n`.
    pub fn decision(&self, x: &Array2<f64>) -> Array2<f64> {
        self.weights.dot(&self.augmented(x))
    }

    /// Argmax margin per column; ties go to the smaller class.
    pub fn predict(&self, x: &Array2<f64>) -> Vec<u32> {
        let margins = self.decision(x);
        margins
            .columns()
            .into_iter()
            .map(|col| {
                let mut best = 0;
                for (c, &m) in col.iter().enumerate() {
                    if m > col[best] {
                        best = c;
                    }
                }
                best as u32 + 1
            })
            .collect()
    }
}

/// Pegasos-style stochastic subgradient descent on the L2-regularized hinge
/// loss, one binary problem per class. Step `t` uses `η = 1/(λ t)`; every
/// epoch visits the samples in a seeded permutation shared by all classes.
pub fn train_linear_svm(train: &LabeledDataset, cfg: &SvmConfig) -> Result<LinearSvm> {
    if !(cfg.lambda > 0.0) || cfg.epochs == 0 {
        return Err(Error::InvalidArgument("svm needs lambda > 0 and epochs ≥ 1".into()));
    }
    let mut seen = vec![false; train.n_classes()];
    for &l in train.labels() {
        seen[l as usize - 1] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::SingleClass);
    }
    let d = train.n_features();
    let n = train.n_samples();
    let (center, scale) = if cfg.standardize {
        let mean = train.x().mean_axis(Axis(1)).expect("non-empty");
        let sd = train.x().std_axis(Axis(1), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
        (mean, sd)
    } else {
        (Array1::zeros(d), Array1::ones(d))
    };
    let mut model = LinearSvm {
        weights: Array2::zeros((train.n_classes(), d + 1)),
        center,
        scale,
    };
    let xa = model.augmented(train.x());
    let radius = 1.0 / cfg.lambda.sqrt();

    let mut order: Vec<usize> = (0..n).collect();
    let mut orders = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = rng_from_seed(derive_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        orders.push(order.clone());
    }

    for (c, mut w) in model.weights.rows_mut().into_iter().enumerate() {
        let class = c as u32 + 1;
        let mut t = 0usize;
        for order in &orders {
            for &i in order {
                t += 1;
                let eta = 1.0 / (cfg.lambda * t as f64);
                let y = if train.labels()[i] == class { 1.0 } else { -1.0 };
                let xi = xa.column(i);
                let margin = y * w.dot(&xi);
                w *= 1.0 - eta * cfg.lambda;
                if margin < 1.0 {
                    w.scaled_add(eta * y, &xi);
                }
                let norm = w.dot(&w).sqrt();
                if norm > radius {
                    w *= radius / norm;
                }
            }
        }
    }
    Ok(model)
}

/// Euclidean k-NN majority vote. Distance ties go to the smaller training
/// index, vote ties to the smaller label.
pub fn knn_classify(train: &LabeledDataset, test: &Array2<f64>, k: usize) -> Result<Vec<u32>> {
    let n = train.n_samples();
    if n == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
    }
    if test.nrows() != train.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            found: test.nrows(),
        });
    }
    let predictions = test
        .columns()
        .into_iter()
        .map(|q| {
            let mut dist: Vec<(f64, usize)> = train
                .x()
                .columns()
                .into_iter()
                .enumerate()
                .map(|(i, x)| (x.iter().zip(q.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
                .collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; train.n_classes()];
            for &(_, i) in &dist[..k] {
                votes[train.labels()[i] as usize - 1] += 1;
            }
            let mut best = 0;
            for (c, &v) in votes.iter().enumerate() {
                if v > votes[best] {
                    best = c;
                }
            }
            best as u32 + 1
        })
        .collect();
    Ok(predictions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Overall accuracy.
    pub oa: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

/// Overall accuracy and one-vs-rest F1 per class; `F1 = 0` when `P + R = 0`.
pub fn metrics(predicted: &[u32], truth: &[u32], n_classes: usize) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no predictions to score".into()));
    }
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    let mut correct = 0;
    for (&p, &t) in predicted.iter().zip(truth) {
        for label in [p, t] {
            if label == 0 || label as usize > n_classes {
                return Err(Error::LabelOutOfRange { label, n_classes });
            }
        }
        if p == t {
            correct += 1;
            tp[p as usize - 1] += 1;
        } else {
            fp[p as usize - 1] += 1;
            fn_[t as usize - 1] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    let per_class_f1: Vec<f64> = (0..n_classes)
        .map(|c| {
            let precision = ratio(tp[c], fp[c]);
            let recall = ratio(tp[c], fn_[c]);
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        })
        .collect();
    Ok(Metrics {
        oa: correct as f64 / truth.len() as f64,
        macro_f1: per_class_f1.iter().sum::<f64>() / n_classes as f64,
        per_class_f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    Svm(SvmConfig),
    Knn { k: usize },
}

impl Classifier {
    fn classify(&self, train: &LabeledDataset, test: &Array2<f64>, seed: u64) -> Result<Vec<u32>> {
        match self {
            Classifier::Svm(cfg) => {
                let cfg = SvmConfig { seed, ..*cfg };
                Ok(train_linear_svm(train, &cfg)?.predict(test))
            }
            Classifier::Knn { k } => knn_classify(train, test, *k),
        }
    }
}

/// Everything one protocol run depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub method: Method,
    pub d: usize,
    pub train_per_class: usize,
    pub repetitions: usize,
    pub noise_percent: f64,
    pub seed: u64,
    pub solver: SolverConfig,
    pub classifier: Classifier,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            method: Method::L1sc,
            d: 10,
            train_per_class: 10,
            repetitions: 5,
            noise_percent: 0.0,
            seed: 0,
            solver: SolverConfig::default(),
            classifier: Classifier::Svm(SvmConfig::default()),
        }
    }
}

/// Fits `method` on `train`. `Method::None` gives the identity.
pub fn fit_method(method: Method, train: &LabeledDataset, d: usize, solver: &SolverConfig) -> Result<Projection> {
    match method {
        Method::L1sc => l1sc::fit(train, solver, d),
        Method::L2sc => fit_l2sc(train, d),
        Method::Lda => fit_lda(train, d),
        Method::None => {
            let dim = train.n_features();
            Ok(Projection::new(
                Array2::eye(dim),
                Method::None,
                vec![Default::default(); dim],
            ))
        }
    }
}

/// Split, fitted projection and seed of one repetition.
#[derive(Debug, Clone)]
pub struct RepetitionFit {
    pub seed: u64,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub projection: Projection,
}

/// Data preparation and fitting of repetition `r`, with `V` fitted for
/// dimension `d`. Only the training part reaches the fitting routine.
pub fn fit_repetition(ds: &LabeledDataset, cfg: &ProtocolConfig, r: usize, d: usize) -> Result<RepetitionFit> {
    let seed = derive_seed(cfg.seed, r as u64);
    let data = if cfg.noise_percent > 0.0 {
        inject_noise(ds, cfg.noise_percent, derive_seed(seed, NOISE_STREAM))?
    } else if cfg.noise_percent == 0.0 {
        ds.clone()
    } else {
        return Err(Error::InvalidArgument("noise percent must not be negative".into()));
    };
    let spec = SplitSpec {
        train_per_class: cfg.train_per_class,
        seed,
        repetition: r as u64,
    };
    let (train, test) = stratified_split(&data, &spec)?;
    let solver = SolverConfig {
        seed: derive_seed(seed, SOLVER_STREAM),
        ..cfg.solver
    };
    let projection = fit_method(cfg.method, &train, d, &solver)?;
    Ok(RepetitionFit {
        seed,
        train,
        test,
        projection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub index: usize,
    pub seed: u64,
    pub oa: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub d: usize,
    pub train_per_class: usize,
    pub noise_percent: f64,
    pub repetitions: Vec<RepetitionResult>,
    pub mean_oa: f64,
    /// Sample standard deviation over repetitions (0 for a single one).
    pub std_oa: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub config: ProtocolConfig,
    pub notes: Vec<String>,
}

pub const CSV_HEADER: &str = "method,d,train_per_class,noise_percent,row,seed,oa,std_oa,macro_f1";

impl EvalReport {
    fn aggregate(cfg: &ProtocolConfig, d: usize, repetitions: Vec<RepetitionResult>, seconds: f64) -> Self {
        let n = repetitions.len() as f64;
        let mean_oa = repetitions.iter().map(|r| r.oa).sum::<f64>() / n;
        let std_oa = if repetitions.len() > 1 {
            (repetitions.iter().map(|r| (r.oa - mean_oa).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let macro_f1 = repetitions.iter().map(|r| r.macro_f1).sum::<f64>() / n;
        let classes = repetitions.first().map_or(0, |r| r.per_class_f1.len());
        let per_class_f1 = (0..classes)
            .map(|c| repetitions.iter().map(|r| r.per_class_f1[c]).sum::<f64>() / n)
            .collect();
        let mut notes = vec![format!(
            "noise injected into the full dataset before splitting ({}%)",
            cfg.noise_percent
        )];
        if matches!(cfg.method, Method::L2sc | Method::Lda) {
            notes.push(RIDGE_NOTE.to_string());
            notes.push("no PCA preprocessing".to_string());
        }
        Self {
            method: cfg.method,
            d,
            train_per_class: cfg.train_per_class,
            noise_percent: cfg.noise_percent,
            repetitions,
            mean_oa,
            std_oa,
            macro_f1,
            per_class_f1,
            seed: cfg.seed,
            wall_time_secs: seconds,
            config: ProtocolConfig { d, ..*cfg },
            notes,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// One row per repetition, then the aggregate row (`row = mean`).
    pub fn csv_rows(&self) -> Vec<String> {
        let prefix = format!(
            "{},{},{},{}",
            self.method, self.d, self.train_per_class, self.noise_percent
        );
        let mut rows: Vec<String> = self
            .repetitions
            .iter()
            .map(|r| format!("{prefix},{},{},{},,{}", r.index, r.seed, r.oa, r.macro_f1))
            .collect();
        rows.push(format!(
            "{prefix},mean,{},{},{},{}",
            self.seed, self.mean_oa, self.std_oa, self.macro_f1
        ));
        rows
    }
}

/// Runs the protocol once for every dimension in `dims`.
///
/// Each repetition fits a single projection of the largest requested
/// dimension and evaluates its leading columns, which is what separate fits
/// would produce since all methods build `V` column by column.
pub fn run_protocol_dims(ds: &LabeledDataset, cfg: &ProtocolConfig, dims: &[usize]) -> Result<Vec<EvalReport>> {
    if cfg.repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let start = Instant::now();
    let dims: Vec<usize> = if cfg.method == Method::None {
        vec![ds.n_features()]
    } else {
        if dims.is_empty() {
            return Err(Error::InvalidArgument("no dimensions requested".into()));
        }
        dims.to_vec()
    };
    let d_max = *dims.iter().max().expect("non-empty");
    if cfg.method != Method::None {
        if let Some(&d) = dims.iter().find(|&&d| d == 0 || d >= ds.n_features()) {
            return Err(Error::DimensionOutOfRange {
                d,
                max: ds.n_features(),
            });
        }
    }

    let per_rep: Vec<Vec<RepetitionResult>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| -> Result<Vec<RepetitionResult>> {
            let fit = fit_repetition(ds, cfg, r, d_max)?;
            dims.iter()
                .map(|&d| {
                    let projection = if cfg.method == Method::None {
                        fit.projection.clone()
                    } else {
                        fit.projection.truncated(d)?
                    };
                    let train = projection.transform(&fit.train)?;
                    let test = projection.transform(&fit.test)?;
                    let predicted = cfg
                        .classifier
                        .classify(&train, test.x(), derive_seed(fit.seed, SVM_STREAM))?;
                    let m = metrics(&predicted, test.labels(), test.n_classes())?;
                    Ok(RepetitionResult {
                        index: r,
                        seed: fit.seed,
                        oa: m.oa,
                        macro_f1: m.macro_f1,
                        per_class_f1: m.per_class_f1,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let seconds = start.elapsed().as_secs_f64();
    Ok(dims
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let reps = per_rep.iter().map(|r| r[i].clone()).collect();
            EvalReport::aggregate(cfg, d, reps, seconds)
        })
        .collect())
}

pub fn run_protocol(ds: &LabeledDataset, cfg: &ProtocolConfig) -> Result<EvalReport> {
    Ok(run_protocol_dims(ds, cfg, &[cfg.d])?.remove(0))
}

/// Best-accuracy row of one method over a dimension grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestDimension {
    pub method: Method,
    pub best: EvalReport,
    /// `(d, mean OA)` for every grid point.
    pub curve: Vec<(usize, f64)>,
}

/// Highest mean OA; equal accuracies resolve to the smallest `d`.
pub fn best_by_accuracy(reports: &[EvalReport]) -> Option<&EvalReport> {
    reports
        .iter()
        .fold(None, |best: Option<&EvalReport>, r| match best {
            Some(b) if b.mean_oa > r.mean_oa || (b.mean_oa == r.mean_oa && b.d <= r.d) => Some(b),
            _ => Some(r),
        })
}

/// Runs every method over `grid` (points with `d ≥ D` are dropped) and keeps
/// each method's best dimension.
pub fn best_dimension_table(
    ds: &LabeledDataset,
    base: &ProtocolConfig,
    methods: &[Method],
    grid: &[usize],
) -> Result<Vec<BestDimension>> {
    let grid: Vec<usize> = grid.iter().copied().filter(|&d| d >= 1 && d < ds.n_features()).collect();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("dimension grid has no valid entry".into()));
    }
    methods
        .iter()
        .map(|&method| {
            let cfg = ProtocolConfig { method, ..*base };
            let reports = run_protocol_dims(ds, &cfg, &grid)?;
            let best = best_by_accuracy(&reports).expect("non-empty").clone();
            Ok(BestDimension {
                method,
                best,
                curve: reports.iter().map(|r| (r.d, r.mean_oa)).collect(),
            })
        })
        .collect()
}
