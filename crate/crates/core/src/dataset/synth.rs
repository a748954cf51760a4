//! Seeded Gaussian-mixture generator with optional outlier contamination.

use ndarray::{Array1, Array2};
use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, sym_eigen};
use crate::rng::{derive_seed, rng_from_seed, DetRng};

#[derive(Debug, Clone)]
pub struct Component {
    pub mean: Array1<f64>,
    pub covariance: Array2<f64>,
    /// Relative share of the class's samples drawn from this component.
    pub weight: f64,
}

impl Component {
    pub fn new(mean: Array1<f64>, covariance: Array2<f64>, weight: f64) -> Self {
        Self {
            mean,
            covariance,
            weight,
        }
    }

    /// Isotropic component `N(mean, σ² I)` with unit weight.
    pub fn isotropic(mean: Array1<f64>, sigma: f64) -> Self {
        let d = mean.len();
        Self::new(mean, Array2::eye(d) * (sigma * sigma), 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct ClassSpec {
    pub components: Vec<Component>,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub classes: Vec<ClassSpec>,
    /// Share of every class replaced by outliers, in `[0, 1)`.
    pub outlier_fraction: f64,
    /// Outliers are drawn from `N(class mean, outlier_scale · class covariance)`.
    pub outlier_scale: f64,
}

/// `F` with `F Fᵀ = Σ` for a symmetric PSD `Σ`.
fn psd_factor(cov: &Array2<f64>) -> Option<Array2<f64>> {
    if !is_symmetric(&cov.view(), 1e-12) {
        return None;
    }
    let eig = sym_eigen(&cov.view()).ok()?;
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale.max(f64::MIN_POSITIVE)) {
        return None;
    }
    let mut f = eig.eigenvectors;
    for (j, l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        f.column_mut(j).mapv_inplace(|v| v * s);
    }
    Some(f)
}

fn draw(rng: &mut DetRng, mean: &Array1<f64>, factor: &Array2<f64>) -> Array1<f64> {
    let z: Array1<f64> = Array1::from_iter((0..factor.ncols()).map(|_| StandardNormal.sample(rng)));
    mean + &factor.dot(&z)
}

/// Splits `count` over the weights by the largest-remainder rule.
fn allocate(count: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * count as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut rest = count - alloc.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        alloc[i] += 1;
        rest -= 1;
    }
    alloc
}

/// Draws a labeled sample from the mixture. Class `k` (1-based, in spec
/// order) gets exactly `classes[k-1].count` samples, ordered class by class.
pub fn synth_gmm(spec: &MixtureSpec, seed: u64) -> Result<LabeledDataset> {
    if spec.classes.len() < 2 {
        return Err(Error::InvalidArgument("mixture needs at least two classes".into()));
    }
    if !(0.0..1.0).contains(&spec.outlier_fraction) {
        return Err(Error::InvalidArgument("outlier_fraction must lie in [0, 1)".into()));
    }
    if !(spec.outlier_scale > 0.0) {
        return Err(Error::InvalidArgument("outlier_scale must be positive".into()));
    }
    let dim = spec
        .classes
        .first()
        .and_then(|c| c.components.first())
        .map(|c| c.mean.len())
        .ok_or_else(|| Error::InvalidArgument("class without components".into()))?;

    let total: usize = spec.classes.iter().map(|c| c.count).sum();
    let mut x = Array2::<f64>::zeros((dim, total));
    let mut labels = Vec::with_capacity(total);
    let mut col = 0;
    for (k, class) in spec.classes.iter().enumerate() {
        if class.count == 0 || class.components.is_empty() {
            return Err(Error::InvalidArgument(format!("class {} is empty", k + 1)));
        }
        let mut factors = Vec::with_capacity(class.components.len());
        for (c, comp) in class.components.iter().enumerate() {
            if comp.mean.len() != dim || comp.covariance.dim() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: comp.mean.len(),
                });
            }
            if !(comp.weight > 0.0) {
                return Err(Error::InvalidArgument("component weights must be positive".into()));
            }
            factors.push(psd_factor(&comp.covariance).ok_or(Error::NonPsdCovariance {
                class: k + 1,
                component: c + 1,
            })?);
        }

        let mut rng = rng_from_seed(derive_seed(seed, k as u64));
        let weights: Vec<f64> = class.components.iter().map(|c| c.weight).collect();
        let start = col;
        for (c, n_c) in allocate(class.count, &weights).into_iter().enumerate() {
            for _ in 0..n_c {
                let s = draw(&mut rng, &class.components[c].mean, &factors[c]);
                x.column_mut(col).assign(&s);
                labels.push(k as u32 + 1);
                col += 1;
            }
        }

        let n_out = (spec.outlier_fraction * class.count as f64).round() as usize;
        if n_out > 0 {
            let (mean, cov) = class_moments(class);
            let factor = psd_factor(&(cov * spec.outlier_scale)).ok_or(Error::NonPsdCovariance {
                class: k + 1,
                component: 0,
            })?;
            let mut picks = index::sample(&mut rng, class.count, n_out).into_vec();
            picks.sort_unstable();
            for p in picks {
                let s = draw(&mut rng, &mean, &factor);
                x.column_mut(start + p).assign(&s);
            }
        }
    }
    LabeledDataset::new(x, labels)
}

/// Mean and covariance of the class-level mixture.
fn class_moments(class: &ClassSpec) -> (Array1<f64>, Array2<f64>) {
    let total: f64 = class.components.iter().map(|c| c.weight).sum();
    let dim = class.components[0].mean.len();
    let mut mean = Array1::<f64>::zeros(dim);
    let mut second = Array2::<f64>::zeros((dim, dim));
    for c in &class.components {
        let w = c.weight / total;
        mean.scaled_add(w, &c.mean);
        let m = c.mean.view().insert_axis(ndarray::Axis(1));
        second = second + (&c.covariance + &m.dot(&m.t())) * w;
    }
    let mm = mean.view().insert_axis(ndarray::Axis(1));
    let cov = second - mm.dot(&mm.t());
    let mut cov = cov;
    crate::linalg::symmetrize(&mut cov);
    (mean, cov)
}
