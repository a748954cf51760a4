//! L2-norm reference methods solved as generalized eigenproblems.
//!
//! Both methods take the top-`d` eigenvectors of a pencil `(A, B + δI)` with
//! `δ = 1e-8 · Tr(B) / D`, then orthonormalize them in order. The ridge term
//! stands in for the PCA preprocessing these methods usually get.

use ndarray::{s, Array1, Array2, Axis};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_columns, trace};
pub use crate::linalg::{sym_geig, EigenResult};
use crate::projection::{ColumnDiagnostics, Method, Projection};
use crate::scatter::scatter_pair;

pub const RIDGE: f64 = 1e-8;
pub const RIDGE_NOTE: &str = "baseline pencils use ridge regularization 1e-8*Tr/D instead of PCA preprocessing";

fn check_dim(ds: &LabeledDataset, d: usize) -> Result<()> {
    if d == 0 || d >= ds.n_features() {
        return Err(Error::DimensionOutOfRange {
            d,
            max: ds.n_features(),
        });
    }
    Ok(())
}

/// `B + δ I` with `δ = 1e-8 · Tr(B) / D`.
pub fn regularized(b: &Array2<f64>) -> Array2<f64> {
    let dim = b.nrows();
    let delta = RIDGE * trace(&b.view()) / dim as f64;
    b + &(Array2::<f64>::eye(dim) * delta)
}

fn top_projection(a: &Array2<f64>, b: &Array2<f64>, d: usize, method: Method) -> Result<Projection> {
    let eig = sym_geig(&a.view(), &regularized(b).view())?;
    let basis = orthonormalize_columns(&eig.eigenvectors.slice(s![.., ..d]))?;
    let columns = eig
        .eigenvalues
        .iter()
        .take(d)
        .map(|&l| ColumnDiagnostics {
            objective: l,
            converged: true,
            ..Default::default()
        })
        .collect();
    Ok(Projection::new(basis, method, columns).with_note(RIDGE_NOTE))
}

/// Scaling cut: top generalized eigenvectors of `(S_B, S_T + δI)`.
pub fn fit_l2sc(ds: &LabeledDataset, d: usize) -> Result<Projection> {
    check_dim(ds, d)?;
    let sp = scatter_pair(ds, &ds.partition())?;
    top_projection(sp.between(), &sp.total(), d, Method::L2sc)
}

/// Classical mean-based scatters.
///
/// `S_b = Σ_k n_k (μ_k − μ)(μ_k − μ)ᵀ`, `S_w = Σ_k Σ_{i∈U_k} (x_i − μ_k)(x_i − μ_k)ᵀ`.
/// The pairwise within-class matrix of the scaling cut relates to the
/// per-class term as `S_Wk = (2 / n_k) · Σ_{i∈U_k} (x_i − μ_k)(x_i − μ_k)ᵀ`.
pub fn class_scatters(ds: &LabeledDataset) -> (Array2<f64>, Array2<f64>) {
    let part = ds.partition();
    let dim = ds.n_features();
    let mean: Array1<f64> = ds.x().mean_axis(Axis(1)).expect("non-empty");
    let mut between = Array2::<f64>::zeros((dim, dim));
    let mut within = Array2::<f64>::zeros((dim, dim));
    for k in 0..part.n_classes() {
        let xk = ds.x().select(Axis(1), part.members(k));
        let mk = xk.mean_axis(Axis(1)).expect("non-empty class");
        let centered = &xk - &mk.view().insert_axis(Axis(1));
        within += &centered.dot(&centered.t());
        let diff = (&mk - &mean).insert_axis(Axis(1));
        between.scaled_add(part.count(k) as f64, &diff.dot(&diff.t()));
    }
    crate::linalg::symmetrize(&mut between);
    crate::linalg::symmetrize(&mut within);
    (between, within)
}

/// Fisher LDA: top generalized eigenvectors of `(S_b, S_w + δI)`.
/// Only `C − 1` eigenvalues can be nonzero; larger `d` is allowed but the
/// extra columns carry no between-class information.
pub fn fit_lda(ds: &LabeledDataset, d: usize) -> Result<Projection> {
    check_dim(ds, d)?;
    let (between, within) = class_scatters(ds);
    top_projection(&between, &within, d, Method::Lda)
}
