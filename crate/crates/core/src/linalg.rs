//! Dense symmetric linear algebra used by the scatter diagnostics and the L2
//! baselines: cyclic Jacobi eigensolver, Cholesky factorization, and the
//! symmetric-definite generalized eigenproblem `A w = λ B w`.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric (or symmetric-definite generalized) problem,
/// sorted by descending eigenvalue. Column `j` of `eigenvectors` belongs to
/// `eigenvalues[j]`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

pub fn frobenius(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn max_abs(a: &ArrayView2<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn is_symmetric(a: &ArrayView2<f64>, rel_tol: f64) -> bool {
    let (r, c) = a.dim();
    if r != c {
        return false;
    }
    let scale = max_abs(a).max(f64::MIN_POSITIVE);
    for i in 0..r {
        for j in (i + 1)..r {
            if (a[[i, j]] - a[[j, i]]).abs() > rel_tol * scale {
                return false;
            }
        }
    }
    true
}

/// `(A + Aᵀ) / 2`
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-12 · ‖A‖_F`.
pub fn sym_eigen(a: &ArrayView2<f64>) -> Result<EigenResult> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("eigen-decomposition of a non-square matrix".into()));
    }
    if !is_symmetric(a, 1e-10) {
        return Err(Error::NotSymmetric);
    }
    // row-major working copies
    let mut m: Vec<f64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            m.push(0.5 * (a[[i, j]] + a[[j, i]]));
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * norm;
    let mut converged = norm == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += m[p * n + q] * m[p * n + q];
                }
            }
        }
        if off.sqrt() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // columns: A ← A J
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                // rows: A ← Jᵀ A
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[i * n + i]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[[k, col]] = v[k * n + src];
        }
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Lower-triangular `L` with `A = L Lᵀ`.
pub fn cholesky(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("cholesky of a non-square matrix".into()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L` by forward substitution.
pub fn solve_lower(l: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[[i, col]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, col]];
            }
            x[[i, col]] = s / l[[i, i]];
        }
    }
    x
}

/// Solves `Lᵀ X = B` for lower-triangular `L` by back substitution.
pub fn solve_lower_transpose(l: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.to_owned();
    for col in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[[i, col]];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[[k, col]];
            }
            x[[i, col]] = s / l[[i, i]];
        }
    }
    x
}

/// Symmetric-definite generalized eigenproblem `A w = λ B w`.
///
/// `B = L Lᵀ` reduces the pencil to the standard problem
/// `C = L⁻¹ A L⁻ᵀ`, `C u = λ u`, and `w = L⁻ᵀ u`. The returned eigenvectors
/// are B-orthonormal (`Wᵀ B W = I`).
pub fn sym_geig(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<EigenResult> {
    let n = a.nrows();
    if a.dim() != (n, n) || b.dim() != (n, n) {
        return Err(Error::InvalidArgument("pencil matrices must be square and equally sized".into()));
    }
    if !is_symmetric(a, 1e-10) || !is_symmetric(b, 1e-10) {
        return Err(Error::NotSymmetric);
    }
    let l = cholesky(b)?;
    let y = solve_lower(&l.view(), a); // L⁻¹ A
    let mut c = solve_lower(&l.view(), &y.t()); // L⁻¹ (L⁻¹ A)ᵀ = L⁻¹ A L⁻ᵀ
    symmetrize(&mut c);
    let standard = sym_eigen(&c.view())?;
    let w = solve_lower_transpose(&l.view(), &standard.eigenvectors.view());
    Ok(EigenResult {
        eigenvalues: standard.eigenvalues,
        eigenvectors: w,
    })
}

/// Orthonormalizes the columns of `m` in order by modified Gram–Schmidt with
/// one reorthogonalization pass. Fails if a column is (numerically) in the
/// span of its predecessors.
pub fn orthonormalize_columns(m: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut q = m.to_owned();
    for j in 0..q.ncols() {
        let original = q.column(j).dot(&q.column(j)).sqrt();
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).to_owned();
                q.column_mut(j).scaled_add(-proj, &qk);
            }
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        if !(norm > 1e-12 * original.max(f64::MIN_POSITIVE)) {
            return Err(Error::InvalidArgument(format!(
                "column {j} is linearly dependent on its predecessors"
            )));
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}

/// Largest absolute entry of `VᵀV − I`.
pub fn orthonormality_error(v: &ArrayView2<f64>) -> f64 {
    let g = v.t().dot(v);
    let mut worst = 0.0_f64;
    for ((i, j), x) in g.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((x - target).abs());
    }
    worst
}

/// `Vᵀ S V`
pub fn congruence(v: &ArrayView2<f64>, s: &ArrayView2<f64>) -> Array2<f64> {
    let mut out = v.t().dot(&s.dot(v));
    symmetrize(&mut out);
    out
}

pub fn trace(a: &ArrayView2<f64>) -> f64 {
    a.diag().sum()
}

/// Euclidean norm of every column.
pub fn column_norms(a: &ArrayView2<f64>) -> Array1<f64> {
    a.map_axis(Axis(0), |c| c.dot(&c).sqrt())
}
