#![allow(dead_code)]

use l1sc_core::dataset::{synth_gmm, ClassSpec, Component, LabeledDataset, MixtureSpec};
use l1sc_core::rng::rng_from_seed;
use ndarray::{array, Array1, Array2, ArrayView1};
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(&mut rng))
}

pub fn unit_vector(dim: usize, seed: u64) -> Array1<f64> {
    let mut rng = rng_from_seed(seed);
    let v: Array1<f64> = Array1::from_shape_simple_fn(dim, || StandardNormal.sample(&mut rng));
    let n = v.dot(&v).sqrt();
    v / n
}

/// Random labelled data with shifted class means; every class has at least
/// `min_per_class` members.
pub fn random_dataset(dim: usize, classes: usize, min_per_class: usize, max_per_class: usize, seed: u64) -> LabeledDataset {
    let mut rng = rng_from_seed(seed);
    let mut columns = Vec::new();
    let mut labels = Vec::new();
    for k in 0..classes {
        let count = rng.random_range(min_per_class..=max_per_class);
        let shift: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        for _ in 0..count {
            for s in &shift {
                let z: f64 = StandardNormal.sample(&mut rng);
                columns.push(s + z);
            }
            labels.push(k as u32 + 1);
        }
    }
    let n = labels.len();
    let x = Array2::from_shape_vec((n, dim), columns).unwrap().reversed_axes();
    LabeledDataset::new(x.as_standard_layout().to_owned(), labels).unwrap()
}

/// The 2-D benchmark family: 2–3 classes, 30–100 samples each, random
/// anisotropic covariances.
pub fn planar_dataset(seed: u64) -> LabeledDataset {
    let mut rng = rng_from_seed(1000 + seed);
    let nc = 2 + (seed % 2) as usize;
    let classes = (0..nc)
        .map(|_| {
            let mean = array![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let a: f64 = rng.random_range(0.2..2.0);
            let b: f64 = rng.random_range(0.2..2.0);
            let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let r = array![[t.cos(), -t.sin()], [t.sin(), t.cos()]];
            let cov = r.dot(&Array2::from_diag(&array![a * a, b * b])).dot(&r.t());
            ClassSpec {
                components: vec![Component::new(mean, cov, 1.0)],
                count: rng.random_range(30..=100),
            }
        })
        .collect();
    synth_gmm(
        &MixtureSpec {
            classes,
            outlier_fraction: 0.0,
            outlier_scale: 1.0,
        },
        seed,
    )
    .unwrap()
}

fn members(ds: &LabeledDataset, k: u32) -> Vec<usize> {
    (0..ds.n_samples()).filter(|&i| ds.labels()[i] == k).collect()
}

/// Literal pairwise double loops for `(S_B, S_W)`.
pub fn brute_scatter(ds: &LabeledDataset) -> (Array2<f64>, Array2<f64>) {
    let dim = ds.n_features();
    let n = ds.n_samples();
    let mut sb = Array2::<f64>::zeros((dim, dim));
    let mut sw = Array2::<f64>::zeros((dim, dim));
    for k in 1..=ds.n_classes() as u32 {
        let inside = members(ds, k);
        let nk = inside.len() as f64;
        let nbar = (n - inside.len()) as f64;
        for i in 0..n {
            if ds.labels()[i] != k {
                continue;
            }
            for j in 0..n {
                let diff = &ds.x().column(i) - &ds.x().column(j);
                let outer = diff.view().insert_axis(ndarray::Axis(1)).dot(&diff.view().insert_axis(ndarray::Axis(0)));
                if ds.labels()[j] == k {
                    sw.scaled_add(1.0 / (nk * nk), &outer);
                } else {
                    sb.scaled_add(1.0 / (nk * nbar), &outer);
                }
            }
        }
    }
    (sb, sw)
}

/// Literal triple sums of the L1 between and within dispersions along `v`.
pub fn brute_l1(v: &ArrayView1<f64>, ds: &LabeledDataset) -> (f64, f64) {
    let z = ds.x().t().dot(v);
    let n = ds.n_samples();
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..=ds.n_classes() as u32 {
        let nk = members(ds, k).len() as f64;
        let nbar = n as f64 - nk;
        for i in 0..n {
            if ds.labels()[i] != k {
                continue;
            }
            for j in 0..n {
                let d = (z[i] - z[j]).abs();
                if ds.labels()[j] == k {
                    den += d / (nk * nk);
                } else {
                    num += d / (nk * nbar);
                }
            }
        }
    }
    (num, den)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Largest entrywise difference relative to the largest entry.
pub fn matrix_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let scale = a.iter().chain(b.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn angle(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    let c = a.dot(b).abs() / (a.dot(a).sqrt() * b.dot(b).sqrt());
    c.min(1.0).acos()
}

/// Random orthonormal `dim × d` matrix.
pub fn random_orthonormal(dim: usize, d: usize, seed: u64) -> Array2<f64> {
    l1sc_core::linalg::orthonormalize_columns(&gaussian_matrix(dim, d, seed).view()).unwrap()
}
