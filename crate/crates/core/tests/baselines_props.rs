mod common;

use common::*;
use l1sc_core::baselines::*;
use l1sc_core::dataset::{synth_gmm, ClassSpec, Component, LabeledDataset, MixtureSpec};
use l1sc_core::linalg::{frobenius, orthonormalize_columns, sym_eigen};
use l1sc_core::scatter::{scatter_pair, trace_ratio, Denominator};
use ndarray::{array, s, Array1, Array2, ArrayView2, Axis};

/// Symmetric `A` and symmetric positive definite `B`.
fn pencil(dim: usize, seed: u64) -> (Array2<f64>, Array2<f64>) {
    let m = gaussian_matrix(dim, dim, seed);
    let a = &m + &m.t();
    let n = gaussian_matrix(dim, dim + 2, seed ^ 0xdead);
    let b = n.dot(&n.t()) + Array2::<f64>::eye(dim) * 0.1;
    (a, b)
}

#[test]
fn pencil_residuals_and_b_orthonormality() {
    for seed in 0..50 {
        let dim = 1 + (seed as usize * 7) % 20;
        let (a, b) = pencil(dim, seed);
        let eig = sym_geig(&a.view(), &b.view()).unwrap();
        let w = &eig.eigenvectors;
        let lhs = a.dot(w);
        let rhs = b.dot(w) * &eig.eigenvalues.view().insert_axis(Axis(0));
        assert!(frobenius(&(&lhs - &rhs).view()) <= 1e-8 * frobenius(&a.view()), "seed {seed}");
        let gram = w.t().dot(&b).dot(w) - Array2::<f64>::eye(dim);
        assert!(gram.iter().all(|g| g.abs() <= 1e-8), "seed {seed}");
        assert!(eig.eigenvalues.windows(2).into_iter().all(|p| p[0] >= p[1]));
    }
}

fn det3(m: &Array2<f64>) -> f64 {
    match m.nrows() {
        1 => m[[0, 0]],
        2 => m[[0, 0]] * m[[1, 1]] - m[[0, 1]] * m[[1, 0]],
        _ => {
            m[[0, 0]] * (m[[1, 1]] * m[[2, 2]] - m[[1, 2]] * m[[2, 1]])
                - m[[0, 1]] * (m[[1, 0]] * m[[2, 2]] - m[[1, 2]] * m[[2, 0]])
                + m[[0, 2]] * (m[[1, 0]] * m[[2, 1]] - m[[1, 1]] * m[[2, 0]])
        }
    }
}

/// Roots of `det(A − λB)` by scanning for sign changes and bisecting.
fn characteristic_roots(a: &Array2<f64>, b: &Array2<f64>) -> Vec<f64> {
    let p = |l: f64| det3(&(a - &(b * l)));
    let bound = 1e3;
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut prev = -bound;
    for k in 1..=steps {
        let x = -bound + 2.0 * bound * k as f64 / steps as f64;
        if p(prev).signum() != p(x).signum() {
            let (mut lo, mut hi) = (prev, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(lo).signum() == p(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = x;
    }
    roots.sort_by(|a, b| b.total_cmp(a));
    roots
}

#[test]
fn small_pencils_match_characteristic_polynomial() {
    for seed in 0..30 {
        let dim = 1 + seed as usize % 3;
        let (a, b) = pencil(dim, 100 + seed);
        let eig = sym_geig(&a.view(), &b.view()).unwrap();
        let roots = characteristic_roots(&a, &b);
        assert_eq!(roots.len(), dim, "seed {seed}");
        for (l, r) in eig.eigenvalues.iter().zip(&roots) {
            assert!((l - r).abs() <= 1e-8 * (1.0 + r.abs()), "seed {seed}: {l} vs {r}");
        }
    }
}

#[test]
fn six_by_six_pencil() {
    let (a, b) = pencil(6, 6);
    let eig = sym_geig(&a.view(), &b.view()).unwrap();
    let residual = a.dot(&eig.eigenvectors) - b.dot(&eig.eigenvectors) * &eig.eigenvalues.view().insert_axis(Axis(0));
    assert!(frobenius(&residual.view()) <= 1e-8 * frobenius(&a.view()));
}

#[test]
fn diagonal_and_identity_pencils() {
    let eig = sym_geig(&array![[3.0, 0.0], [0.0, 1.0]].view(), &Array2::<f64>::eye(2).view()).unwrap();
    assert_eq!(eig.eigenvalues, array![3.0, 1.0]);
    assert!((eig.eigenvectors[[0, 0]].abs() - 1.0).abs() < 1e-15);
    assert!((eig.eigenvectors[[1, 1]].abs() - 1.0).abs() < 1e-15);

    let (_, b) = pencil(4, 9);
    let eig = sym_geig(&b.view(), &b.view()).unwrap();
    assert!(eig.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-10));
}

fn two_gaussians(mean_gap: Array1<f64>, cov: Array2<f64>, count: usize, seed: u64) -> LabeledDataset {
    let half = &mean_gap / 2.0;
    let spec = MixtureSpec {
        classes: vec![
            ClassSpec {
                components: vec![Component::new(half.clone(), cov.clone(), 1.0)],
                count,
            },
            ClassSpec {
                components: vec![Component::new(-&half, cov, 1.0)],
                count,
            },
        ],
        outlier_fraction: 0.0,
        outlier_scale: 1.0,
    };
    synth_gmm(&spec, seed).unwrap()
}

#[test]
fn l2sc_follows_mean_difference_for_spherical_classes() {
    // the fitted direction is Ĉ⁻¹(m̂₁ − m̂₂) for the sample moments; its
    // deviation from the population direction shrinks like n^(-1/2), and
    // 2·10⁵ samples per class keep it an order of magnitude below 1e-2
    for seed in 0..5 {
        let gap = array![4.0, -3.0, 2.0];
        let ds = two_gaussians(gap.clone(), Array2::eye(3), 200_000, seed);
        let p = fit_l2sc(&ds, 1).unwrap();
        let a = angle(&p.basis().column(0), &gap.view());
        assert!(a <= 1e-2, "seed {seed}: angle {a}");
    }
}

#[test]
fn full_minus_one_dimension_is_valid() {
    let ds = random_dataset(4, 3, 6, 10, 1);
    for p in [fit_l2sc(&ds, 3).unwrap(), fit_lda(&ds, 3).unwrap()] {
        assert_eq!(p.output_dim(), 3);
        assert!(l1sc_core::linalg::orthonormality_error(&p.basis().view()) <= 1e-10);
    }
}

#[test]
fn l2sc_beats_random_projections() {
    let ds = random_dataset(6, 3, 10, 20, 33);
    let sp = scatter_pair(&ds, &ds.partition()).unwrap();
    for d in [1, 2] {
        let v = fit_l2sc(&ds, d).unwrap();
        let best = trace_ratio(v.basis(), &sp, Denominator::Total).unwrap();
        for seed in 0..100 {
            let r = random_orthonormal(6, d, seed);
            assert!(best >= trace_ratio(&r, &sp, Denominator::Total).unwrap(), "d {d} seed {seed}");
        }
    }
}

/// `sin` of the largest principal angle between two column spaces.
fn subspace_gap(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    let qa = orthonormalize_columns(a).unwrap();
    let qb = orthonormalize_columns(b).unwrap();
    let residual = &qb - &qa.dot(&qa.t().dot(&qb));
    let m = residual.t().dot(&residual);
    sym_eigen(&m.view()).unwrap().eigenvalues[0].max(0.0).sqrt()
}

#[test]
fn ridge_barely_moves_the_eigenspace() {
    for seed in 0..10 {
        let ds = random_dataset(5, 4, 40, 60, 400 + seed);
        let sp = scatter_pair(&ds, &ds.partition()).unwrap();
        let plain = sym_geig(&sp.between().view(), &sp.total().view()).unwrap();
        let ridged = sym_geig(&sp.between().view(), &regularized(&sp.total()).view()).unwrap();
        for d in 1..=3 {
            let gap = subspace_gap(
                &plain.eigenvectors.slice(s![.., ..d]),
                &ridged.eigenvectors.slice(s![.., ..d]),
            );
            assert!(gap.asin() <= 1e-4, "seed {seed} d {d}: {gap}");
        }
    }
}

#[test]
fn l2sc_invariant_to_sample_order_and_translation() {
    let ds = random_dataset(4, 3, 8, 15, 21);
    let sp = scatter_pair(&ds, &ds.partition()).unwrap();
    let base = trace_ratio(fit_l2sc(&ds, 2).unwrap().basis(), &sp, Denominator::Total).unwrap();

    let order: Vec<usize> = (0..ds.n_samples()).rev().collect();
    let shuffled = ds.select(&order).unwrap();
    let moved = ds.with_features(ds.x() + 17.0).unwrap();
    for other in [shuffled, moved] {
        let v = fit_l2sc(&other, 2).unwrap();
        assert!(rel_err(trace_ratio(v.basis(), &sp, Denominator::Total).unwrap(), base) <= 1e-10);
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = b.len();
    let mut m = a.clone();
    let mut x = b.clone();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[[i, c]].abs().total_cmp(&m[[j, c]].abs())).unwrap();
        for k in 0..n {
            m.swap([c, k], [p, k]);
        }
        x.swap(c, p);
        for r in c + 1..n {
            let f = m[[r, c]] / m[[c, c]];
            for k in c..n {
                m[[r, k]] -= f * m[[c, k]];
            }
            x[r] -= f * x[c];
        }
    }
    for c in (0..n).rev() {
        let tail: f64 = (c + 1..n).map(|k| m[[c, k]] * x[k]).sum();
        x[c] = (x[c] - tail) / m[[c, c]];
    }
    x
}

/// Correlated shared covariance.
fn shared_covariance() -> Array2<f64> {
    array![[2.0, 0.6, 0.0], [0.6, 1.0, -0.3], [0.0, -0.3, 0.5]]
}

#[test]
fn lda_matches_fisher_direction() {
    for seed in 0..5 {
        let ds = two_gaussians(array![1.0, 0.5, -0.5], shared_covariance(), 2000, seed);
        let (_, within) = class_scatters(&ds);
        let mean = |k: u32| {
            let idx: Vec<usize> = (0..ds.n_samples()).filter(|&i| ds.labels()[i] == k).collect();
            ds.x().select(Axis(1), &idx).mean_axis(Axis(1)).unwrap()
        };
        let fisher = solve(&within, &(mean(1) - mean(2)));
        let p = fit_lda(&ds, 1).unwrap();
        let a = angle(&p.basis().column(0), &fisher.view());
        assert!(a <= 1e-3, "seed {seed}: angle {a}");
    }
}

#[test]
fn two_class_lda_has_one_informative_direction() {
    let ds = two_gaussians(array![3.0, 0.0, 1.0], shared_covariance(), 300, 2);
    let p = fit_lda(&ds, 2).unwrap();
    let l = p.columns();
    assert!(l[1].objective.abs() <= 1e-8 * l[0].objective);
}

#[test]
fn lda_notes_the_ridge() {
    let ds = random_dataset(3, 2, 5, 5, 0);
    assert!(fit_lda(&ds, 1).unwrap().notes().iter().any(|n| n == RIDGE_NOTE));
}
