mod common;

use common::*;
use l1sc_core::dataset::LabeledDataset;
use l1sc_core::linalg::{sym_eigen, trace};
use l1sc_core::scatter::{scatter_pair, scut_ratio, trace_ratio, Denominator};
use ndarray::{array, Array1, Array2, Axis};
use proptest::prelude::*;

fn scatter(ds: &LabeledDataset) -> l1sc_core::scatter::ScatterPair {
    scatter_pair(ds, &ds.partition()).unwrap()
}

#[test]
fn fast_path_matches_double_loop() {
    for seed in 0..50 {
        let dim = 1 + (seed as usize % 6);
        let ds = random_dataset(dim, 2 + seed as usize % 3, 1, 10, seed);
        let sp = scatter(&ds);
        let (sb, sw) = brute_scatter(&ds);
        assert!(matrix_rel_err(sp.between(), &sb) <= 1e-10, "seed {seed}");
        assert!(matrix_rel_err(sp.within(), &sw) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn small_three_class_case() {
    let ds = random_dataset(3, 3, 4, 4, 77);
    assert_eq!(ds.n_samples(), 12);
    let sp = scatter(&ds);
    let (sb, sw) = brute_scatter(&ds);
    assert!(matrix_rel_err(sp.between(), &sb) <= 1e-10);
    assert!(matrix_rel_err(sp.within(), &sw) <= 1e-10);
}

#[test]
fn identical_samples_give_zero() {
    let x = Array2::from_elem((3, 6), 2.5);
    let ds = LabeledDataset::new(x, vec![1, 2, 1, 2, 3, 3]).unwrap();
    let sp = scatter(&ds);
    assert!(sp.between().iter().chain(sp.within().iter()).all(|v| v.abs() < 1e-12));
}

#[test]
fn identity_projection_gives_determinant_ratio() {
    let ds = random_dataset(3, 3, 5, 8, 5);
    let sp = scatter(&ds);
    let eye = Array2::<f64>::eye(3);
    let det = |m: &Array2<f64>| sym_eigen(&m.view()).unwrap().eigenvalues.product();
    let expected = det(sp.between()) / det(&sp.total());
    assert!(rel_err(scut_ratio(&eye, &sp).unwrap(), expected) < 1e-10);
}

#[test]
fn no_within_spread_gives_unit_ratio() {
    // two singleton classes: S_W = 0, so S_T = S_B
    let ds = LabeledDataset::new(array![[0.0, 3.0], [1.0, -1.0]], vec![1, 2]).unwrap();
    let sp = scatter(&ds);
    let v = array![[3.0 / 13f64.sqrt()], [-2.0 / 13f64.sqrt()]];
    assert!((scut_ratio(&v, &sp).unwrap() - 1.0).abs() < 1e-12);
    assert!((trace_ratio(&v, &sp, Denominator::Total).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn common_eigenvector_gives_eigenvalue_ratio() {
    // class spread along x only, means separated along x and y
    let x = array![[0.0, 2.0, 5.0, 7.0], [0.0, 0.0, 1.0, 1.0]];
    let ds = LabeledDataset::new(x, vec![1, 1, 2, 2]).unwrap();
    let sp = scatter(&ds);
    let v = array![[1.0], [0.0]];
    let ratio = trace_ratio(&v, &sp, Denominator::Within).unwrap();
    assert!(rel_err(ratio, sp.between()[[0, 0]] / sp.within()[[0, 0]]) < 1e-12);
}

#[test]
fn total_and_within_ratios_are_related() {
    for seed in 0..20 {
        let ds = random_dataset(4, 3, 3, 9, 100 + seed);
        let sp = scatter(&ds);
        let v = unit_vector(4, seed).insert_axis(Axis(1));
        let rw = trace_ratio(&v, &sp, Denominator::Within).unwrap();
        let rt = trace_ratio(&v, &sp, Denominator::Total).unwrap();
        assert!(rel_err(rt, rw / (1.0 + rw)) < 1e-12);
    }
}

#[test]
fn trace_ratio_matches_pairwise_frobenius_sums() {
    for seed in 0..10 {
        let ds = random_dataset(4, 2 + seed as usize % 2, 2, 7, 200 + seed);
        let v = random_orthonormal(4, 2, seed);
        let y = v.t().dot(ds.x());
        let n = ds.n_samples();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 1..=ds.n_classes() as u32 {
            let nk = ds.labels().iter().filter(|&&l| l == k).count() as f64;
            for i in (0..n).filter(|&i| ds.labels()[i] == k) {
                for j in 0..n {
                    let diff = &y.column(i) - &y.column(j);
                    let sq = diff.dot(&diff);
                    if ds.labels()[j] == k {
                        den += sq / (nk * nk);
                    } else {
                        num += sq / (nk * (n as f64 - nk));
                    }
                }
            }
        }
        let sp = scatter(&ds);
        assert!(rel_err(trace_ratio(&v, &sp, Denominator::Within).unwrap(), num / den) < 1e-10);
    }
}

#[test]
fn non_orthonormal_projection_rejected() {
    let ds = random_dataset(3, 2, 3, 3, 1);
    let sp = scatter(&ds);
    let v = array![[1.0], [1.0], [0.0]];
    assert!(trace_ratio(&v, &sp, Denominator::Total).is_err());
}

fn dataset_strategy() -> impl Strategy<Value = LabeledDataset> {
    (1usize..=5, 2usize..=4, 1usize..=8, any::<u64>())
        .prop_map(|(dim, classes, max, seed)| random_dataset(dim, classes, 1, max, seed))
}

fn sorted_eigenvalues(m: &Array2<f64>) -> Array1<f64> {
    sym_eigen(&m.view()).unwrap().eigenvalues
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symmetric_and_psd(ds in dataset_strategy()) {
        let sp = scatter(&ds);
        for m in [sp.between(), sp.within()] {
            let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            prop_assert!(matrix_rel_err(m, &m.t().to_owned()) <= 1e-12);
            let floor = -1e-10 * trace(&m.view()).max(scale);
            prop_assert!(sorted_eigenvalues(m).iter().all(|&l| l >= floor));
        }
    }

    #[test]
    fn permutation_invariant(ds in dataset_strategy(), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..ds.n_samples()).collect();
        let mut rng = l1sc_core::rng::rng_from_seed(seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let shuffled = ds.select(&order).unwrap();
        let (a, b) = (scatter(&ds), scatter(&shuffled));
        prop_assert!(matrix_rel_err(a.between(), b.between()) <= 1e-12);
        prop_assert!(matrix_rel_err(a.within(), b.within()) <= 1e-12);
    }

    #[test]
    fn translation_invariant(ds in dataset_strategy(), shift in -50.0f64..50.0) {
        let moved = ds.with_features(ds.x() + shift).unwrap();
        let (a, b) = (scatter(&ds), scatter(&moved));
        prop_assert!(matrix_rel_err(a.between(), b.between()) <= 1e-10);
        prop_assert!(matrix_rel_err(a.within(), b.within()) <= 1e-10);
    }

    #[test]
    fn class_sums_add_up(ds in dataset_strategy()) {
        // S_B + S_W is the sum over every class of all its ordered pairs
        let sp = scatter(&ds);
        let (sb, sw) = brute_scatter(&ds);
        prop_assert!(matrix_rel_err(&sp.total(), &(&sb + &sw)) <= 1e-10);
    }

    #[test]
    fn trace_ratio_rotation_invariant(seed in any::<u64>(), angle in 0.0f64..6.3) {
        let ds = random_dataset(5, 3, 3, 8, seed);
        let sp = scatter(&ds);
        let v = random_orthonormal(5, 2, seed ^ 1);
        let rot = array![[angle.cos(), -angle.sin()], [angle.sin(), angle.cos()]];
        let vr = v.dot(&rot);
        for denom in [Denominator::Total, Denominator::Within] {
            let a = trace_ratio(&v, &sp, denom).unwrap();
            let b = trace_ratio(&vr, &sp, denom).unwrap();
            prop_assert!(rel_err(a, b) <= 1e-10);
        }
    }
}
