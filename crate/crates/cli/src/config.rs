//! Experiment settings and their plain-text `key = value` file form.

use std::fmt::Write as _;
use std::path::PathBuf;

use l1sc_core::dataset::{synth_gmm, ClassSpec, Component, Format, LabeledDataset, MixtureSpec};
use l1sc_core::eval::{Classifier, ProtocolConfig, SvmConfig};
use l1sc_core::l1sc::SolverConfig;
use l1sc_core::projection::Method;
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Gaussian classes with means `separation · (1 + k/D) · e_(k mod D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub separation: f64,
    pub sigma: f64,
    pub outliers: f64,
    pub outlier_scale: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        Self {
            classes: 3,
            dim: 10,
            per_class: 60,
            separation: 3.0,
            sigma: 1.0,
            outliers: 0.0,
            outlier_scale: 20.0,
        }
    }
}

impl SynthSettings {
    pub fn spec(&self) -> MixtureSpec {
        let classes = (0..self.classes)
            .map(|k| {
                let mut mean = Array1::zeros(self.dim);
                mean[k % self.dim] = self.separation * (1.0 + (k / self.dim) as f64);
                ClassSpec {
                    components: vec![Component::new(mean, Array2::eye(self.dim) * (self.sigma * self.sigma), 1.0)],
                    count: self.per_class,
                }
            })
            .collect();
        MixtureSpec {
            classes,
            outlier_fraction: self.outliers,
            outlier_scale: self.outlier_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Input file; synthetic data from `synth` when absent.
    pub dataset: Option<PathBuf>,
    pub format: Option<Format>,
    pub synth: SynthSettings,
    pub methods: Vec<Method>,
    pub d: usize,
    pub train_per_class: usize,
    pub repetitions: usize,
    pub noise_percents: Vec<f64>,
    pub sizes: Vec<usize>,
    pub dims: Vec<usize>,
    pub solver: SolverConfig,
    pub classifier: String,
    pub k: usize,
    pub svm: SvmConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            format: None,
            synth: SynthSettings::default(),
            methods: vec![Method::L1sc],
            d: 10,
            train_per_class: 10,
            repetitions: 5,
            noise_percents: vec![2.0, 4.0, 6.0, 8.0, 10.0],
            sizes: vec![10, 20, 30, 40, 50],
            dims: (5..=50).step_by(5).collect(),
            solver: SolverConfig::default(),
            classifier: "svm".into(),
            k: 1,
            svm: SvmConfig::default(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| usage(format!("{key}: cannot parse {v:?}"))))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| usage(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentConfig {
    /// Canonical text form; `from_text(to_text())` gives the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("dataset", self.dataset.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put(
            "format",
            match self.format {
                Some(Format::Csv) => "csv".into(),
                Some(Format::RawF64) => "rawf64".into(),
                None => String::new(),
            },
        );
        put("synth_classes", self.synth.classes.to_string());
        put("synth_dim", self.synth.dim.to_string());
        put("synth_per_class", self.synth.per_class.to_string());
        put("synth_separation", format!("{:?}", self.synth.separation));
        put("synth_sigma", format!("{:?}", self.synth.sigma));
        put("synth_outliers", format!("{:?}", self.synth.outliers));
        put("synth_outlier_scale", format!("{:?}", self.synth.outlier_scale));
        put("methods", join(&self.methods));
        put("d", self.d.to_string());
        put("train_per_class", self.train_per_class.to_string());
        put("repetitions", self.repetitions.to_string());
        put(
            "noise_percents",
            self.noise_percents.iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(","),
        );
        put("sizes", join(&self.sizes));
        put("dims", join(&self.dims));
        put("gamma", format!("{:?}", self.solver.gamma));
        put("epsilon", format!("{:?}", self.solver.epsilon));
        put("itmax", self.solver.itmax.to_string());
        put("perturb_scale", format!("{:?}", self.solver.perturb_scale));
        put("restarts", self.solver.restarts.to_string());
        put("classifier", self.classifier.clone());
        put("k", self.k.to_string());
        put("svm_lambda", format!("{:?}", self.svm.lambda));
        put("svm_epochs", self.svm.epochs.to_string());
        put("standardize", self.svm.standardize.to_string());
        put("out", self.out.display().to_string());
        put("seed", self.seed.to_string());
        s
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    #[cfg(test)]
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "dataset" => self.dataset = (!value.is_empty()).then(|| PathBuf::from(value)),
            "format" => {
                self.format = if value.is_empty() {
                    None
                } else {
                    Some(value.parse().map_err(|_| usage(format!("format: unknown {value:?}")))?)
                }
            }
            "synth_classes" => self.synth.classes = parse_one(key, value)?,
            "synth_dim" => self.synth.dim = parse_one(key, value)?,
            "synth_per_class" => self.synth.per_class = parse_one(key, value)?,
            "synth_separation" => self.synth.separation = parse_one(key, value)?,
            "synth_sigma" => self.synth.sigma = parse_one(key, value)?,
            "synth_outliers" => self.synth.outliers = parse_one(key, value)?,
            "synth_outlier_scale" => self.synth.outlier_scale = parse_one(key, value)?,
            "methods" | "method" => {
                self.methods = parse_list::<String>(key, value)?
                    .iter()
                    .map(|m| m.parse().map_err(|_| usage(format!("unknown method {m:?}"))))
                    .collect::<Result<_, _>>()?
            }
            "d" => self.d = parse_one(key, value)?,
            "train_per_class" => self.train_per_class = parse_one(key, value)?,
            "repetitions" => self.repetitions = parse_one(key, value)?,
            "noise_percents" | "noise_percent" => self.noise_percents = parse_list(key, value)?,
            "sizes" => self.sizes = parse_list(key, value)?,
            "dims" => self.dims = parse_list(key, value)?,
            "gamma" => self.solver.gamma = parse_one(key, value)?,
            "epsilon" => self.solver.epsilon = parse_one(key, value)?,
            "itmax" => self.solver.itmax = parse_one(key, value)?,
            "perturb_scale" => self.solver.perturb_scale = parse_one(key, value)?,
            "restarts" => self.solver.restarts = parse_one(key, value)?,
            "classifier" => self.classifier = value.to_string(),
            "k" => self.k = parse_one(key, value)?,
            "svm_lambda" => self.svm.lambda = parse_one(key, value)?,
            "svm_epochs" => self.svm.epochs = parse_one(key, value)?,
            "standardize" => self.svm.standardize = parse_one(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse_one(key, value)?,
            _ => return Err(usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Range checks shared by every command.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(usage("at least one method is required"));
        }
        if self.d == 0 {
            return Err(usage("d must be at least 1"));
        }
        if self.train_per_class == 0 {
            return Err(usage("train_per_class must be at least 1"));
        }
        if self.repetitions == 0 {
            return Err(usage("repetitions must be at least 1"));
        }
        if let Some(p) = self.noise_percents.iter().find(|p| !(0.0..=100.0).contains(*p)) {
            return Err(usage(format!("noise percent {p} outside [0, 100]")));
        }
        if self.sizes.contains(&0) || self.dims.contains(&0) {
            return Err(usage("sizes and dims must be positive"));
        }
        if !matches!(self.classifier.as_str(), "svm" | "knn") {
            return Err(usage(format!("classifier must be svm or knn, got {:?}", self.classifier)));
        }
        if self.k == 0 {
            return Err(usage("k must be at least 1"));
        }
        self.solver.validate().map_err(|e| usage(e.to_string()))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical text form.
    /// Identifies the experiment; the output directory is not part of it.
    pub fn hash(&self) -> String {
        let text = Self { out: PathBuf::new(), ..self.clone() }.to_text();
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn classifier(&self) -> Classifier {
        match self.classifier.as_str() {
            "knn" => Classifier::Knn { k: self.k },
            _ => Classifier::Svm(self.svm),
        }
    }

    pub fn protocol(&self, method: Method) -> ProtocolConfig {
        ProtocolConfig {
            method,
            d: self.d,
            train_per_class: self.train_per_class,
            repetitions: self.repetitions,
            noise_percent: 0.0,
            seed: self.seed,
            solver: SolverConfig {
                seed: self.seed,
                ..self.solver
            },
            classifier: self.classifier(),
        }
    }

    pub fn load(&self) -> Result<LabeledDataset, CliError> {
        match &self.dataset {
            Some(path) => {
                let format = self.format.unwrap_or_else(|| Format::from_path(path));
                Ok(l1sc_core::dataset::load_dataset(path, format)?)
            }
            None => Ok(synth_gmm(&self.synth.spec(), self.seed)?),
        }
    }
}
