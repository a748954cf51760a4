//! Pairwise dissimilarity matrices of the scaling cut and its two ratio
//! objectives.
//!
//! For class `k` with members `U_k` and complement `Ū_k`
//!
//! ```text
//! S_Bk = 1/(n_k n_k̄) Σ_{i∈U_k} Σ_{j∈Ū_k} (x_i − x_j)(x_i − x_j)ᵀ
//! S_Wk = 1/(n_k n_k) Σ_{i∈U_k} Σ_{j∈U_k} (x_i − x_j)(x_i − x_j)ᵀ
//! ```
//!
//! and `S_B = Σ_k S_Bk`, `S_W = Σ_k S_Wk`, `S_T = S_B + S_W`.
//!
//! The double sums are never enumerated. For index sets `A`, `B` with sums
//! `s(·)` and second moments `M(·) = Σ x xᵀ`,
//!
//! ```text
//! Σ_{i∈A} Σ_{j∈B} (x_i − x_j)(x_i − x_j)ᵀ = |B| M(A) + |A| M(B) − s(A) s(B)ᵀ − s(B) s(A)ᵀ
//! ```
//!
//! which costs `O(n D²)` overall. Data are centered on the global mean first;
//! the matrices are translation invariant and centering keeps the moment
//! differences well conditioned.

use std::io::Write;

use ndarray::{Array1, Array2, Axis};

use crate::dataset::{ClassPartition, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg::{congruence, orthonormality_error, sym_eigen, symmetrize, trace};
use crate::matrix_io::write_matrix_block;

const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPair {
    between: Array2<f64>,
    within: Array2<f64>,
}

/// Which matrix divides the between-class term of [`trace_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Denominator {
    /// `S_T = S_B + S_W`
    Total,
    /// `S_W`
    Within,
}

impl ScatterPair {
    pub fn between(&self) -> &Array2<f64> {
        &self.between
    }

    pub fn within(&self) -> &Array2<f64> {
        &self.within
    }

    pub fn total(&self) -> Array2<f64> {
        &self.between + &self.within
    }

    /// Debug dump: `S_B` block then `S_W` block.
    pub fn write_rawf64<W: Write>(&self, w: &mut W) -> Result<()> {
        write_matrix_block(&self.between, w)?;
        write_matrix_block(&self.within, w)
    }
}

fn pair_sum(
    size_a: f64,
    sum_a: &Array1<f64>,
    moment_a: &Array2<f64>,
    size_b: f64,
    sum_b: &Array1<f64>,
    moment_b: &Array2<f64>,
) -> Array2<f64> {
    let sa = sum_a.view().insert_axis(Axis(1));
    let sb = sum_b.view().insert_axis(Axis(1));
    let cross = sa.dot(&sb.t());
    moment_a * size_b + moment_b * size_a - &cross - &cross.t()
}

pub fn scatter_pair(ds: &LabeledDataset, part: &ClassPartition) -> Result<ScatterPair> {
    if part.n_samples() != ds.n_samples() || part.n_classes() != ds.n_classes() {
        return Err(Error::InvalidArgument("partition does not belong to dataset".into()));
    }
    if ds.n_samples() < 2 {
        return Err(Error::InvalidDataset("need at least two samples".into()));
    }
    let dim = ds.n_features();
    let mean = ds.x().mean_axis(Axis(1)).expect("non-empty");
    let centered = ds.x() - &mean.view().insert_axis(Axis(1));

    // per-class sums and second moments, in class order
    let mut sums = Vec::with_capacity(part.n_classes());
    let mut moments = Vec::with_capacity(part.n_classes());
    for k in 0..part.n_classes() {
        if part.count(k) == 0 {
            return Err(Error::InvalidDataset(format!("class {} is empty", k + 1)));
        }
        let xk = centered.select(Axis(1), part.members(k));
        sums.push(xk.sum_axis(Axis(1)));
        moments.push(xk.dot(&xk.t()));
    }
    let mut sum_all = Array1::<f64>::zeros(dim);
    let mut moment_all = Array2::<f64>::zeros((dim, dim));
    for k in 0..part.n_classes() {
        sum_all += &sums[k];
        moment_all += &moments[k];
    }

    let mut between = Array2::<f64>::zeros((dim, dim));
    let mut within = Array2::<f64>::zeros((dim, dim));
    for k in 0..part.n_classes() {
        let nk = part.count(k) as f64;
        let nbar = part.complement_count(k) as f64;
        if nbar > 0.0 {
            let sum_bar = &sum_all - &sums[k];
            let moment_bar = &moment_all - &moments[k];
            let b = pair_sum(nk, &sums[k], &moments[k], nbar, &sum_bar, &moment_bar);
            between.scaled_add(1.0 / (nk * nbar), &b);
        }
        let w = pair_sum(nk, &sums[k], &moments[k], nk, &sums[k], &moments[k]);
        within.scaled_add(1.0 / (nk * nk), &w);
    }
    symmetrize(&mut between);
    symmetrize(&mut within);
    Ok(ScatterPair { between, within })
}

fn check_projection(v: &Array2<f64>, sp: &ScatterPair) -> Result<()> {
    if v.nrows() != sp.between.nrows() {
        return Err(Error::DimensionMismatch {
            expected: sp.between.nrows(),
            found: v.nrows(),
        });
    }
    let deviation = orthonormality_error(&v.view());
    if !(deviation <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// `det(Vᵀ S_B V) / det(Vᵀ S_T V)`.
pub fn scut_ratio(v: &Array2<f64>, sp: &ScatterPair) -> Result<f64> {
    check_projection(v, sp)?;
    let denom = sym_eigen(&congruence(&v.view(), &sp.total().view()).view())?;
    let top = denom.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(*x));
    let bottom = denom.eigenvalues.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if !(top > 0.0) || bottom <= 1e-12 * top {
        return Err(Error::SingularDenominator);
    }
    let numer = sym_eigen(&congruence(&v.view(), &sp.between.view()).view())?;
    if numer.eigenvalues.iter().any(|&x| x == 0.0) {
        return Ok(0.0);
    }
    // product of ratios in log space: determinants of 15×15 blocks overflow easily
    let mut log = 0.0;
    let mut sign = 1.0;
    for (a, b) in numer.eigenvalues.iter().zip(denom.eigenvalues.iter()) {
        log += a.abs().ln() - b.ln();
        if *a < 0.0 {
            sign = -sign;
        }
    }
    Ok(sign * log.exp())
}

/// `Tr(Vᵀ S_B V) / Tr(Vᵀ S_X V)` with `S_X` chosen by `denom`.
pub fn trace_ratio(v: &Array2<f64>, sp: &ScatterPair, denom: Denominator) -> Result<f64> {
    check_projection(v, sp)?;
    let numer = trace(&congruence(&v.view(), &sp.between.view()).view());
    let bottom = match denom {
        Denominator::Total => trace(&congruence(&v.view(), &sp.total().view()).view()),
        Denominator::Within => trace(&congruence(&v.view(), &sp.within.view()).view()),
    };
    let scale = trace(&sp.total().view()).abs().max(f64::MIN_POSITIVE);
    if !(bottom > 1e-300 * scale) || bottom <= 0.0 {
        return Err(Error::ZeroTrace);
    }
    Ok(numer / bottom)
}
