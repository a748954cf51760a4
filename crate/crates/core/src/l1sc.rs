//! L1-norm scaling cut.
//!
//! For a unit vector `v` with projections `z_i = vᵀx_i` the objective is
//!
//! ```text
//!          Σ_k 1/(n_k n_k̄) Σ_{i∈U_k} Σ_{j∈Ū_k} |z_i − z_j|
//! J(v) = ---------------------------------------------------
//!          Σ_k 1/(n_k n_k)  Σ_{i∈U_k} Σ_{j∈U_k} |z_i − z_j|
//! ```
//!
//! It is maximized one direction at a time by a fixed-sign ascent: with the
//! signs `q_ij = sgn(z_i − z_j)` (zero maps to −1) frozen, numerator and
//! denominator are linear in `v`, `vᵀp` and `vᵀb`, and
//! `g = p/(vᵀp) − b/(vᵀb)` is the gradient of `log J`. The iterate moves by
//! `v ← normalize(v + γ g)`. After each accepted direction the data are
//! deflated, `X ← X − v vᵀ X`, and the next direction is solved on the
//! residual.
//!
//! Pair sums are evaluated on sorted per-class projections with prefix sums,
//! `O(n C log n)` per evaluation instead of `O(n²)`. The literal pair
//! enumeration is kept in [`sign_state`] and [`accumulators`].

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassPartition, LabeledDataset};
use crate::error::{Error, Result};
use crate::projection::{ColumnDiagnostics, Method, Projection};
use crate::rng::{derive_seed, rng_from_seed, DetRng};

const UNIT_TOL: f64 = 1e-8;
/// Backtracking depth of the step-size safeguard.
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Learning rate of `v ← v + γ g`.
    pub gamma: f64,
    /// Stop once `‖v(t+1) − v(t)‖ ≤ epsilon`.
    pub epsilon: f64,
    pub itmax: usize,
    /// Norm of the random kick applied when a denominator vanishes.
    pub perturb_scale: f64,
    pub seed: u64,
    /// Independent random initializations per direction.
    pub restarts: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            epsilon: 1e-6,
            itmax: 200,
            perturb_scale: 1e-6,
            seed: 0,
            restarts: 5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("solver: {what}")));
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad("gamma must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.itmax == 0 {
            return bad("itmax must be at least 1");
        }
        if !(self.perturb_scale > 0.0) {
            return bad("perturb_scale must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        Ok(())
    }
}

/// Frozen signs of every ordered pair.
///
/// `between` enumerates, for each class `k` in order, each `i ∈ U_k`
/// (ascending) against each `j ∉ U_k` (ascending); `within` enumerates
/// `i, j ∈ U_k` the same way, including `i = j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignState {
    pub between: Vec<i8>,
    pub within: Vec<i8>,
}

/// `+1` if `u > 0`, else `−1`.
#[inline]
pub fn pair_sign(u: f64) -> i8 {
    if u > 0.0 {
        1
    } else {
        -1
    }
}

/// Visits ordered between-class pairs `(k, i, j)` in [`SignState`] order.
pub fn for_each_between_pair(part: &ClassPartition, labels: &[u32], mut f: impl FnMut(usize, usize, usize)) {
    for k in 0..part.n_classes() {
        for &i in part.members(k) {
            for (j, &l) in labels.iter().enumerate() {
                if l as usize - 1 != k {
                    f(k, i, j);
                }
            }
        }
    }
}

/// Visits ordered within-class pairs `(k, i, j)` in [`SignState`] order.
pub fn for_each_within_pair(part: &ClassPartition, mut f: impl FnMut(usize, usize, usize)) {
    for k in 0..part.n_classes() {
        for &i in part.members(k) {
            for &j in part.members(k) {
                f(k, i, j);
            }
        }
    }
}

fn between_weight(part: &ClassPartition, k: usize) -> f64 {
    1.0 / (part.count(k) as f64 * part.complement_count(k) as f64)
}

fn within_weight(part: &ClassPartition, k: usize) -> f64 {
    let nk = part.count(k) as f64;
    1.0 / (nk * nk)
}

fn check_shapes(v: &ArrayView1<f64>, ds: &LabeledDataset, part: &ClassPartition) -> Result<()> {
    if v.len() != ds.n_features() {
        return Err(Error::DimensionMismatch {
            expected: ds.n_features(),
            found: v.len(),
        });
    }
    if part.n_samples() != ds.n_samples() || part.n_classes() != ds.n_classes() {
        return Err(Error::InvalidArgument("partition does not belong to dataset".into()));
    }
    Ok(())
}

pub fn sign_state(v: &ArrayView1<f64>, ds: &LabeledDataset, part: &ClassPartition) -> Result<SignState> {
    check_shapes(v, ds, part)?;
    let z = ds.x().t().dot(v);
    let mut between = Vec::new();
    for_each_between_pair(part, ds.labels(), |_, i, j| between.push(pair_sign(z[i] - z[j])));
    let mut within = Vec::new();
    for_each_within_pair(part, |_, i, j| within.push(pair_sign(z[i] - z[j])));
    Ok(SignState { between, within })
}

/// `p = Σ_k 1/(n_k n_k̄) Σ q_ij (x_i − x_j)` over between pairs and
/// `b = Σ_k 1/(n_k n_k) Σ r_ij (x_i − x_j)` over within pairs.
///
/// Signed weights are first collected per sample, then `p = X c_p` and
/// `b = X c_b`.
pub fn accumulators(
    ds: &LabeledDataset,
    part: &ClassPartition,
    signs: &SignState,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let n = ds.n_samples();
    let mut cp = Array1::<f64>::zeros(n);
    let mut cb = Array1::<f64>::zeros(n);
    let mut idx = 0;
    let mut mismatch = false;
    for_each_between_pair(part, ds.labels(), |k, i, j| {
        match signs.between.get(idx) {
            Some(&q) => {
                let w = between_weight(part, k) * q as f64;
                cp[i] += w;
                cp[j] -= w;
            }
            None => mismatch = true,
        }
        idx += 1;
    });
    if mismatch || idx != signs.between.len() {
        return Err(Error::LengthMismatch {
            left: idx,
            right: signs.between.len(),
        });
    }
    idx = 0;
    for_each_within_pair(part, |k, i, j| {
        match signs.within.get(idx) {
            Some(&r) => {
                let w = within_weight(part, k) * r as f64;
                cb[i] += w;
                cb[j] -= w;
            }
            None => mismatch = true,
        }
        idx += 1;
    });
    if mismatch || idx != signs.within.len() {
        return Err(Error::LengthMismatch {
            left: idx,
            right: signs.within.len(),
        });
    }
    Ok((ds.x().dot(&cp), ds.x().dot(&cb)))
}

/// `g = p/(vᵀp) − b/(vᵀb)`: the gradient of `log J` while the signs stay fixed.
pub fn ascent_direction(v: &ArrayView1<f64>, p: &ArrayView1<f64>, b: &ArrayView1<f64>) -> Result<Array1<f64>> {
    let vp = v.dot(p);
    if vp == 0.0 || !vp.is_finite() {
        return Err(Error::ZeroDenominator { which: "v·p" });
    }
    let vb = v.dot(b);
    if vb == 0.0 || !vb.is_finite() {
        return Err(Error::ZeroDenominator { which: "v·b" });
    }
    Ok(p.mapv(|x| x / vp) - b.mapv(|x| x / vb))
}

/// Sorted projections of one class with prefix sums.
struct SortedClass {
    values: Vec<f64>,
    prefix: Vec<f64>,
}

impl SortedClass {
    fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for v in &values {
            acc += v;
            prefix.push(acc);
        }
        Self { values, prefix }
    }

    fn len(&self) -> usize {
        self.values.len()
    }

    /// `(#{< z}, #{> z}, Σ_{|·−z|})` against every member.
    fn against(&self, z: f64) -> (usize, usize, f64) {
        let lo = self.values.partition_point(|&v| v < z);
        let hi = self.values.partition_point(|&v| v <= z);
        let n = self.values.len();
        let total = self.prefix[n];
        let abs_sum = (lo as f64 * z - self.prefix[lo]) + ((total - self.prefix[hi]) - (n - hi) as f64 * z);
        (lo, n - hi, abs_sum)
    }
}

/// Dispersions along one direction, with the per-sample signed weights whose
/// products with `X` give `p` and `b`.
struct Evaluation {
    between: f64,
    within: f64,
    coef_between: Array1<f64>,
    coef_within: Array1<f64>,
}

impl Evaluation {
    fn objective(&self) -> Option<f64> {
        (self.within > 0.0 && self.within.is_finite()).then(|| self.between / self.within)
    }
}

fn evaluate(z: &Array1<f64>, labels: &[u32], part: &ClassPartition) -> Evaluation {
    let n = z.len();
    // pair differences are translation invariant; centering limits cancellation
    let mean = z.sum() / n as f64;
    let sorted: Vec<SortedClass> = (0..part.n_classes())
        .map(|k| SortedClass::new(part.members(k).iter().map(|&i| z[i] - mean).collect()))
        .collect();
    let wb: Vec<f64> = (0..part.n_classes()).map(|k| between_weight(part, k)).collect();
    let ww: Vec<f64> = (0..part.n_classes()).map(|k| within_weight(part, k)).collect();

    let mut between = 0.0;
    let mut within = 0.0;
    let mut coef_between = Array1::<f64>::zeros(n);
    let mut coef_within = Array1::<f64>::zeros(n);
    for i in 0..n {
        let k = labels[i] as usize - 1;
        let zi = z[i] - mean;
        let mut less_outside = 0usize;
        let mut as_partner = 0.0;
        for (l, class) in sorted.iter().enumerate() {
            let (less, greater, abs_sum) = class.against(zi);
            if l == k {
                within += ww[k] * abs_sum;
                coef_within[i] = ww[k] * 2.0 * (less as f64 - greater as f64);
            } else {
                between += wb[k] * abs_sum;
                less_outside += less;
                // i is the j-partner of every member m of class l: −w_l Σ_m sgn(z_m − z_i)
                as_partner -= wb[l] * (2.0 * greater as f64 - class.len() as f64);
            }
        }
        let nbar = part.complement_count(k) as f64;
        coef_between[i] = wb[k] * (2.0 * less_outside as f64 - nbar) + as_partner;
    }
    Evaluation {
        between,
        within,
        coef_between,
        coef_within,
    }
}

/// Numerator and denominator of `J(v)`. No normalization is required: both
/// are positively homogeneous of degree one in `v`.
pub fn l1_dispersions(v: &ArrayView1<f64>, ds: &LabeledDataset, part: &ClassPartition) -> Result<(f64, f64)> {
    check_shapes(v, ds, part)?;
    // J(v) = J(−v) must hold bit for bit; negation is exact, summation order is not
    let flip = v.iter().find(|x| **x != 0.0).is_some_and(|x| *x < 0.0);
    let z = if flip { ds.x().t().dot(&v.mapv(|x| -x)) } else { ds.x().t().dot(v) };
    let e = evaluate(&z, ds.labels(), part);
    Ok((e.between, e.within))
}

pub fn l1_objective(v: &ArrayView1<f64>, ds: &LabeledDataset, part: &ClassPartition) -> Result<f64> {
    let norm = v.dot(v).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!("projection vector has norm {norm}, expected 1")));
    }
    let (between, within) = l1_dispersions(v, ds, part)?;
    if !(within > 0.0) {
        return Err(Error::ZeroWithinDispersion);
    }
    Ok(between / within)
}

/// Per-restart record of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub seed: u64,
    /// `None` when the start point had zero within-class dispersion.
    pub initial_objective: Option<f64>,
    pub final_objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub perturbations: usize,
    pub halvings: usize,
    /// Objective after every iteration, starting with the initial value.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSolution {
    pub v: Array1<f64>,
    pub objective: f64,
    /// Index of the winning restart.
    pub restart: usize,
    pub restarts: Vec<RestartTrace>,
}

impl DirectionSolution {
    fn diagnostics(&self) -> ColumnDiagnostics {
        let t = &self.restarts[self.restart];
        ColumnDiagnostics {
            objective: self.objective,
            iterations: t.iterations,
            converged: t.converged,
            restart: self.restart,
            perturbations: t.perturbations,
            halvings: t.halvings,
        }
    }
}

fn normalized(v: Array1<f64>) -> Array1<f64> {
    let n = v.dot(&v).sqrt();
    v / n
}

fn random_unit(rng: &mut DetRng, dim: usize) -> Array1<f64> {
    loop {
        let v: Array1<f64> = Array1::from_iter((0..dim).map(|_| StandardNormal.sample(rng)));
        if v.dot(&v) > 0.0 {
            return normalized(v);
        }
    }
}

/// Largest-magnitude entry made positive, so `±v` print the same.
fn canonical_sign(mut v: Array1<f64>) -> Array1<f64> {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.mapv_inplace(|x| -x);
    }
    v
}

struct Solver<'a> {
    x: &'a Array2<f64>,
    labels: &'a [u32],
    part: &'a ClassPartition,
    cfg: &'a SolverConfig,
}

impl Solver<'_> {
    fn evaluate(&self, v: &Array1<f64>) -> Evaluation {
        evaluate(&self.x.t().dot(v), self.labels, self.part)
    }

    fn run(&self, restart: usize) -> (Array1<f64>, RestartTrace) {
        let cfg = self.cfg;
        let seed = cfg.seed ^ restart as u64;
        let mut rng = rng_from_seed(seed);
        let mut v = random_unit(&mut rng, self.x.nrows());
        let mut eval = self.evaluate(&v);
        let initial_objective = eval.objective();
        let mut trace = RestartTrace {
            seed,
            initial_objective,
            final_objective: None,
            iterations: 0,
            converged: false,
            perturbations: 0,
            halvings: 0,
            history: initial_objective.into_iter().collect(),
        };

        while trace.iterations < cfg.itmax {
            trace.iterations += 1;
            let p = self.x.dot(&eval.coef_between);
            let b = self.x.dot(&eval.coef_within);
            let current = eval.objective();
            let (current, g) = match (current, ascent_direction(&v.view(), &p.view(), &b.view())) {
                (Some(j), Ok(g)) => (j, g),
                _ => {
                    // v(t) ← (v(t) + Δv) / ‖v(t) + Δv‖
                    let kick = random_unit(&mut rng, v.len()) * cfg.perturb_scale;
                    v = normalized(v + kick);
                    eval = self.evaluate(&v);
                    trace.perturbations += 1;
                    continue;
                }
            };
            let g_norm = g.dot(&g).sqrt();

            let mut step = cfg.gamma;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let candidate = normalized(&v + &(&g * step));
                let e = self.evaluate(&candidate);
                if matches!(e.objective(), Some(j) if j >= current) {
                    accepted = Some((candidate, e));
                    break;
                }
                step *= 0.5;
                trace.halvings += 1;
                if step * g_norm <= cfg.epsilon {
                    break;
                }
            }
            match accepted {
                Some((candidate, e)) => {
                    let moved = (&candidate - &v).dot(&(&candidate - &v)).sqrt();
                    v = candidate;
                    eval = e;
                    trace.history.push(eval.objective().unwrap_or(current));
                    if moved <= cfg.epsilon {
                        trace.converged = true;
                        break;
                    }
                }
                None => {
                    // no improving step longer than epsilon: v(t+1) = v(t)
                    trace.history.push(current);
                    trace.converged = true;
                    break;
                }
            }
        }
        trace.final_objective = eval.objective();
        (v, trace)
    }
}

fn solve_matrix(
    x: &Array2<f64>,
    labels: &[u32],
    part: &ClassPartition,
    cfg: &SolverConfig,
) -> Result<DirectionSolution> {
    cfg.validate()?;
    let solver = Solver { x, labels, part, cfg };
    let runs: Vec<(Array1<f64>, RestartTrace)> = (0..cfg.restarts).into_par_iter().map(|r| solver.run(r)).collect();

    let mut best: Option<(usize, f64)> = None;
    for (r, (_, trace)) in runs.iter().enumerate() {
        if let Some(j) = trace.final_objective {
            if best.is_none_or(|(_, b)| j > b) {
                best = Some((r, j));
            }
        }
    }
    let (restart, objective) = best.ok_or(Error::ZeroWithinDispersion)?;
    let v = canonical_sign(runs[restart].0.clone());
    Ok(DirectionSolution {
        v,
        objective,
        restart,
        restarts: runs.into_iter().map(|(_, t)| t).collect(),
    })
}

/// Single projection direction maximizing `J` (best of `cfg.restarts`
/// seeded runs; restart `r` is seeded with `cfg.seed ^ r`).
pub fn solve_direction(ds: &LabeledDataset, part: &ClassPartition, cfg: &SolverConfig) -> Result<DirectionSolution> {
    if part.n_samples() != ds.n_samples() || part.n_classes() != ds.n_classes() {
        return Err(Error::InvalidArgument("partition does not belong to dataset".into()));
    }
    solve_matrix(ds.x(), ds.labels(), part, cfg)
}

/// `X ← X − v vᵀ X`
pub fn deflate(x: &mut Array2<f64>, v: &ArrayView1<f64>) {
    let coeffs = x.t().dot(v);
    let outer = v.view().insert_axis(Axis(1)).dot(&coeffs.view().insert_axis(Axis(0)));
    *x -= &outer;
}

/// Seed used for direction `j` (0-based) of a fit.
pub fn direction_seed(seed: u64, j: usize) -> u64 {
    if j == 0 {
        seed
    } else {
        derive_seed(seed, j as u64)
    }
}

/// Projection with `d` orthonormal columns, built by solving one direction,
/// orthogonalizing it against the accepted ones, deflating the data along it
/// and repeating.
pub fn fit(ds: &LabeledDataset, cfg: &SolverConfig, d: usize) -> Result<Projection> {
    let dim = ds.n_features();
    if d == 0 || d >= dim {
        return Err(Error::DimensionOutOfRange { d, max: dim });
    }
    cfg.validate()?;
    let part = ds.partition();
    let scale = ds.x().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut x = ds.x().clone();
    let mut basis = Array2::<f64>::zeros((dim, d));
    let mut columns = Vec::with_capacity(d);

    for j in 0..d {
        let mean = x.mean_axis(Axis(1)).expect("non-empty");
        let spread = x
            .columns()
            .into_iter()
            .flat_map(|c| c.iter().zip(mean.iter()).map(|(a, m)| (a - m).abs()).collect::<Vec<_>>())
            .fold(0.0_f64, f64::max);
        if j > 0 && spread <= 1e-12 * scale {
            return Err(Error::DimensionExhausted { index: j + 1 });
        }

        let dir_cfg = SolverConfig {
            seed: direction_seed(cfg.seed, j),
            ..*cfg
        };
        let solution = match solve_matrix(&x, ds.labels(), &part, &dir_cfg) {
            Err(Error::ZeroWithinDispersion) if j > 0 => return Err(Error::DimensionExhausted { index: j + 1 }),
            other => other?,
        };

        // components along accepted directions do not change J on deflated data
        let mut v = solution.v.clone();
        for _ in 0..2 {
            for k in 0..j {
                let col = basis.column(k);
                let c = col.dot(&v);
                v.scaled_add(-c, &col);
            }
        }
        let norm = v.dot(&v).sqrt();
        if !(norm > 1e-8) {
            return Err(Error::DimensionExhausted { index: j + 1 });
        }
        v /= norm;

        deflate(&mut x, &v.view());
        basis.column_mut(j).assign(&v);
        columns.push(solution.diagnostics());
    }
    Ok(Projection::new(basis, Method::L1sc, columns).with_solver(*cfg))
}

/// `Y = Vᵀ X`.
pub fn transform(projection: &Projection, ds: &LabeledDataset) -> Result<LabeledDataset> {
    projection.transform(ds)
}
