//! The assignment flow: distances are lifted to likelihoods at the current
//! assignment, averaged geometrically over spatial windows into similarities,
//! and fed back through a multiplicative replicator update.
//!
//! Every iteration is a pure function of the previous assignment. Rows are
//! processed in parallel, but each row is computed by the same sequential code
//! from the same snapshot, so results do not depend on the number of workers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::grid::GridGraph;
use crate::mean::{geometric_mean_logs_into, karcher_mean, MeanConfig};
use crate::simplex::{lift_into, ProbabilityVector};

/// Row-major `m x n` matrix whose rows lie in the open simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl AssignmentMatrix {
    /// Validates every row as a probability vector.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(Vec::len).ok_or(Error::Empty("assignment matrix"))?;
        let mut data = Vec::with_capacity(m * n);
        for row in rows {
            check_len(n, row.len())?;
            data.extend_from_slice(ProbabilityVector::new(row)?.as_slice());
        }
        Ok(Self { rows: m, cols: n, data })
    }

    pub(crate) fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Checks positivity (at least `min_entry`) and unit row sums within `tol`.
    pub fn check_invariants(&self, min_entry: f64, tol: f64) -> Result<()> {
        for (i, row) in self.iter_rows().enumerate() {
            if let Some((j, &v)) = row.iter().enumerate().find(|(_, &v)| !(v >= min_entry)) {
                return Err(Error::NotOnSimplex(format!(
                    "row {i} entry {j} is {v}, below {min_entry}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotOnSimplex(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// Row-major `m x n` matrix of scaled feature distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("distance matrix"));
        }
        check_len(rows * cols, data.len())?;
        if data.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter("distances must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map(Vec::len).ok_or(Error::Empty("distance matrix"))?;
        let mut data = Vec::with_capacity(m * n);
        for row in rows {
            check_len(n, row.len())?;
            data.extend(row);
        }
        Self::new(m, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|d| d * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeanMode {
    /// Normalized geometric mean (production path).
    #[default]
    Approx,
    /// Iterative Riemannian mean.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Selectivity: raw distances are divided by `rho`.
    pub rho: f64,
    /// Stop once the average row entropy is at most this value.
    pub entropy_tol: f64,
    pub max_iterations: usize,
    /// Rows with an entry below this floor are shifted and renormalized.
    pub epsilon_floor: f64,
    pub mean_mode: MeanMode,
    /// Use the likelihood matrix directly as similarity (no spatial coupling).
    pub bypass_averaging: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            entropy_tol: 1e-3,
            max_iterations: 1000,
            epsilon_floor: 1e-10,
            mean_mode: MeanMode::Approx,
            bypass_averaging: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("entropy_tol", self.entropy_tol),
            ("epsilon_floor", self.epsilon_floor),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Supplies the raw (unscaled) distance matrix for the current assignment.
///
/// Fixed data ignore the assignment; adaptive models recompute from it.
pub trait DistanceSource: Sync {
    fn label_count(&self) -> usize;
    fn raw_distances(&self, w: &AssignmentMatrix) -> Result<DistanceMatrix>;
}

/// Distances that do not depend on the assignment.
#[derive(Debug, Clone)]
pub struct FixedDistances(pub DistanceMatrix);

impl DistanceSource for FixedDistances {
    fn label_count(&self) -> usize {
        self.0.cols()
    }

    fn raw_distances(&self, w: &AssignmentMatrix) -> Result<DistanceMatrix> {
        check_len(self.0.rows(), w.rows())?;
        check_len(self.0.cols(), w.cols())?;
        Ok(self.0.clone())
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub entropy: f64,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub assignment: AssignmentMatrix,
    /// One record per evaluated iterate, starting with the initialization.
    pub trace: Vec<TraceRecord>,
    /// Number of replicator updates performed.
    pub iterations: usize,
    pub converged: bool,
}

/// Every row `1/n`.
pub fn init_uniform(m: usize, n: usize) -> Result<AssignmentMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::Empty("assignment matrix"));
    }
    Ok(AssignmentMatrix::from_flat(m, n, vec![1.0 / n as f64; m * n]))
}

fn check_shape(w: &AssignmentMatrix, rows: usize, cols: usize) -> Result<()> {
    check_len(w.rows(), rows)?;
    check_len(w.cols(), cols)
}

/// Likelihood rows `L_i = lift(W_i, -(D_i - mean(D_i)))`.
pub fn likelihood(w: &AssignmentMatrix, d: &DistanceMatrix) -> Result<AssignmentMatrix> {
    check_shape(w, d.rows(), d.cols())?;
    let n = w.cols();
    let mut out = vec![0.0; w.rows() * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let di = d.row(i);
        let mean = di.iter().sum::<f64>() / n as f64;
        let u: Vec<f64> = di.iter().map(|x| mean - x).collect();
        lift_into(w.row(i), &u, row);
    });
    Ok(AssignmentMatrix::from_flat(w.rows(), n, out))
}

/// Similarity rows: the mean of the likelihood rows over each window.
pub fn similarity(l: &AssignmentMatrix, grid: &GridGraph, mode: MeanMode) -> Result<AssignmentMatrix> {
    check_len(grid.node_count(), l.rows())?;
    let n = l.cols();
    let mut out = vec![0.0; l.rows() * n];
    match mode {
        MeanMode::Approx => {
            let logs: Vec<f64> = l.as_slice().par_iter().map(|x| x.ln()).collect();
            out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                let mut idx = Vec::with_capacity(grid.neighborhood_size(i));
                grid.for_each_neighbor(i, |j| idx.push(j));
                let log_rows = idx.iter().map(|&j| &logs[j * n..(j + 1) * n]);
                geometric_mean_logs_into(log_rows, idx.len(), l.row(idx[0]), row);
            });
        }
        MeanMode::Exact => {
            let cfg = MeanConfig::default();
            out.par_chunks_mut(n)
                .enumerate()
                .try_for_each(|(i, row)| -> Result<()> {
                    let mut pts = Vec::with_capacity(grid.neighborhood_size(i));
                    grid.for_each_neighbor(i, |j| {
                        pts.push(ProbabilityVector::from_vec_unchecked(l.row(j).to_vec()))
                    });
                    row.copy_from_slice(&karcher_mean(&pts, &cfg)?);
                    Ok(())
                })?;
        }
    }
    Ok(AssignmentMatrix::from_flat(l.rows(), n, out))
}

/// Replicator update `W_i * S_i / <W_i, S_i>` followed by [`normalize_rows`].
pub fn replicator_step(
    w: &AssignmentMatrix,
    s: &AssignmentMatrix,
    epsilon_floor: f64,
) -> Result<AssignmentMatrix> {
    check_shape(w, s.rows(), s.cols())?;
    let n = w.cols();
    let mut out = vec![0.0; w.rows() * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let (wi, si) = (w.row(i), s.row(i));
        let fitness: f64 = wi.iter().zip(si).map(|(a, b)| a * b).sum();
        if fitness > 0.0 && fitness.is_finite() {
            for ((o, a), b) in row.iter_mut().zip(wi).zip(si) {
                *o = a * b / fitness;
            }
        } else {
            row.copy_from_slice(wi);
        }
        renormalize(row);
        floor_row(row, epsilon_floor);
    });
    Ok(AssignmentMatrix::from_flat(w.rows(), n, out))
}

fn renormalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= sum);
}

fn floor_row(row: &mut [f64], epsilon: f64) {
    let min = row.iter().copied().fold(f64::INFINITY, f64::min);
    if min < epsilon {
        row.iter_mut().for_each(|x| *x = *x - min + epsilon);
        renormalize(row);
    }
}

/// Shifts rows whose smallest entry is below `epsilon_floor` so that it
/// becomes `epsilon_floor`, then renormalizes those rows.
pub fn normalize_rows(w: &AssignmentMatrix, epsilon_floor: f64) -> AssignmentMatrix {
    let mut out = w.clone();
    out.data
        .par_chunks_mut(w.cols())
        .for_each(|row| floor_row(row, epsilon_floor));
    out
}

fn row_entropy(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|&&x| x > 0.0)
        .map(|x| x * x.ln())
        .sum::<f64>()
}

/// Mean row entropy (natural log).
pub fn average_entropy(w: &AssignmentMatrix) -> f64 {
    let total: f64 = w.iter_rows().map(row_entropy).sum();
    total / w.rows() as f64
}

/// Objective `J = <S, W>` (Frobenius inner product).
pub fn objective(w: &AssignmentMatrix, s: &AssignmentMatrix) -> Result<f64> {
    check_shape(w, s.rows(), s.cols())?;
    Ok(w.as_slice().iter().zip(s.as_slice()).map(|(a, b)| a * b).sum())
}

/// Per-row argmax; ties go to the smallest index.
pub fn labels(w: &AssignmentMatrix) -> Vec<usize> {
    w.iter_rows()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Similarity matrix at `w`: distances, likelihoods, then spatial averaging
/// unless bypassed.
pub fn similarity_at(
    source: &dyn DistanceSource,
    grid: &GridGraph,
    cfg: &FlowConfig,
    w: &AssignmentMatrix,
) -> Result<AssignmentMatrix> {
    let d = source.raw_distances(w)?.scaled(1.0 / cfg.rho);
    let l = likelihood(w, &d)?;
    if cfg.bypass_averaging {
        Ok(l)
    } else {
        similarity(&l, grid, cfg.mean_mode)
    }
}

/// Runs the flow from the uniform assignment until the average entropy drops
/// to `entropy_tol` or `max_iterations` updates have been made.
pub fn run_flow(
    source: &dyn DistanceSource,
    grid: &GridGraph,
    cfg: &FlowConfig,
) -> Result<FlowResult> {
    run_flow_observed(source, grid, cfg, |_, _| {})
}

/// [`run_flow`] calling `observer(k, &W_k)` on every iterate, including the
/// initialization and the returned matrix.
pub fn run_flow_observed(
    source: &dyn DistanceSource,
    grid: &GridGraph,
    cfg: &FlowConfig,
    mut observer: impl FnMut(usize, &AssignmentMatrix),
) -> Result<FlowResult> {
    cfg.validate()?;
    let w = init_uniform(grid.node_count(), source.label_count())?;
    run_flow_from(source, grid, cfg, w, &mut observer)
}

fn run_flow_from(
    source: &dyn DistanceSource,
    grid: &GridGraph,
    cfg: &FlowConfig,
    mut w: AssignmentMatrix,
    observer: &mut dyn FnMut(usize, &AssignmentMatrix),
) -> Result<FlowResult> {
    let mut trace = Vec::new();
    let mut k = 0;
    loop {
        let s = similarity_at(source, grid, cfg, &w)?;
        let entropy = average_entropy(&w);
        trace.push(TraceRecord {
            iteration: k,
            entropy,
            objective: objective(&w, &s)?,
        });
        observer(k, &w);
        if entropy <= cfg.entropy_tol {
            return Ok(FlowResult {
                assignment: w,
                trace,
                iterations: k,
                converged: true,
            });
        }
        if k == cfg.max_iterations {
            return Ok(FlowResult {
                assignment: w,
                trace,
                iterations: k,
                converged: false,
            });
        }
        w = replicator_step(&w, &s, cfg.epsilon_floor)?;
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn am(rows: &[&[f64]]) -> AssignmentMatrix {
        AssignmentMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn uniform_init() {
        let w = init_uniform(2, 3).unwrap();
        assert!(w.as_slice().iter().all(|&x| x == 1.0 / 3.0));
        assert_abs_diff_eq!(average_entropy(&w), 3f64.ln(), epsilon = 1e-15);
        assert!(init_uniform(0, 3).is_err());
    }

    #[test]
    fn likelihood_examples() {
        let w = am(&[&[0.2, 0.3, 0.5]]);
        let constant = DistanceMatrix::from_rows(vec![vec![4.0; 3]]).unwrap();
        let l = likelihood(&w, &constant).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(l.row(0)[k], w.row(0)[k], epsilon = 1e-15);
        }
        let u = init_uniform(1, 3).unwrap();
        let sharp = DistanceMatrix::from_rows(vec![vec![0.0, 50.0, 50.0]]).unwrap();
        let l = likelihood(&u, &sharp).unwrap();
        assert!(l.row(0)[1] < 1e-20 && l.row(0)[2] < 1e-20);
        assert_abs_diff_eq!(l.row(0).iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(likelihood(&u, &constant.scaled(1.0)).is_ok());
        let wrong = DistanceMatrix::from_rows(vec![vec![0.0; 2]]).unwrap();
        assert!(likelihood(&u, &wrong).is_err());
    }

    #[test]
    fn similarity_examples() {
        let l = am(&[&[0.7, 0.3], &[0.4, 0.6], &[0.1, 0.9]]);
        let line0 = GridGraph::new(1, 3, 0).unwrap();
        assert_eq!(similarity(&l, &line0, MeanMode::Approx).unwrap(), l);

        let same = am(&[&[0.7, 0.3], &[0.7, 0.3], &[0.7, 0.3]]);
        let line1 = GridGraph::new(1, 3, 1).unwrap();
        let s = similarity(&same, &line1, MeanMode::Approx).unwrap();
        for (a, b) in s.as_slice().iter().zip(same.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }

        // middle pixel: normalized cube root of the componentwise product
        let s = similarity(&l, &line1, MeanMode::Approx).unwrap();
        let a = (0.7f64 * 0.4 * 0.1).cbrt();
        let b = (0.3f64 * 0.6 * 0.9).cbrt();
        assert_abs_diff_eq!(s.row(1)[0], a / (a + b), epsilon = 1e-15);
        assert_abs_diff_eq!(s.row(1)[1], b / (a + b), epsilon = 1e-15);

        let exact = similarity(&l, &line1, MeanMode::Exact).unwrap();
        for (x, y) in exact.as_slice().iter().zip(s.as_slice()) {
            assert!((x - y).abs() < 0.05);
        }
    }

    #[test]
    fn replicator_examples() {
        let w = am(&[&[0.5, 0.5], &[0.2, 0.8]]);
        let s = am(&[&[0.8, 0.2], &[0.5, 0.5]]);
        let next = replicator_step(&w, &s, 1e-10).unwrap();
        assert_abs_diff_eq!(next.row(0)[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(next.row(0)[1], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(next.row(1)[0], 0.2, epsilon = 1e-15);

        let corner = am(&[&[1.0 - 2e-9, 1e-9, 1e-9]]);
        let next = replicator_step(&corner, &am(&[&[0.2, 0.5, 0.3]]), 1e-10).unwrap();
        for (a, b) in next.row(0).iter().zip(corner.row(0)) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn normalize_examples() {
        let w = am(&[&[0.5, 0.5]]);
        assert_eq!(normalize_rows(&w, 1e-10), w);

        let tiny = AssignmentMatrix::from_flat(1, 2, vec![1.0 - 1e-12, 1e-12]);
        let out = normalize_rows(&tiny, 1e-10);
        // (1 - 1e-12 - 1e-12 + 1e-10, 1e-10) / (1 - 2e-12 + 2e-10)
        let expected_min = 1e-10 / (1.0 - 2e-12 + 2e-10);
        assert_abs_diff_eq!(out.row(0)[1], expected_min, epsilon = 1e-22);
        assert!(out.row(0)[1] >= 0.99e-10);
        assert_abs_diff_eq!(out.row(0).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(average_entropy(&am(&[&[0.5, 0.5]])), 2f64.ln(), epsilon = 1e-15);
        let nearly = am(&[&[1.0 - 2e-10, 1e-10, 1e-10], &[1e-10, 1.0 - 2e-10, 1e-10]]);
        assert!(average_entropy(&nearly) < 1e-8);
    }

    #[test]
    fn objective_examples() {
        let w = init_uniform(4, 5).unwrap();
        assert_abs_diff_eq!(objective(&w, &w).unwrap(), 4.0 / 5.0, epsilon = 1e-14);
        let e = 1e-9;
        let v = am(&[&[1.0 - e, e], &[e, 1.0 - e]]);
        let j = objective(&v, &v).unwrap();
        assert!(j < 2.0 && j > 2.0 - 1e-8);
    }

    #[test]
    fn label_examples() {
        let w = am(&[&[0.1, 0.8, 0.1], &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], &[0.2, 0.2, 0.6]]);
        assert_eq!(labels(&w), vec![1, 0, 2]);
    }

    #[test]
    fn single_label_converges_immediately() {
        let d = FixedDistances(DistanceMatrix::new(4, 1, vec![0.3; 4]).unwrap());
        let g = GridGraph::new(2, 2, 1).unwrap();
        let res = run_flow(&d, &g, &FlowConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.trace.len(), 1);
        assert!(res.assignment.as_slice().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn two_pixel_instance_matches_closed_form() {
        // With a radius-0 window S = L, and each row evolves independently:
        // W_k(1) / W_k(2) = exp(-(2^k - 1) t) for pixel 2, so the dynamics are
        // known in closed form until the floor is reached.
        let t = 0.5;
        let d = FixedDistances(DistanceMatrix::from_rows(vec![vec![0.0, t], vec![t, 0.0]]).unwrap());
        let g = GridGraph::new(1, 2, 0).unwrap();
        let cfg = FlowConfig::default();
        let mut iterates = Vec::new();
        let res = run_flow_observed(&d, &g, &cfg, |_, w| iterates.push(w.clone())).unwrap();
        assert!(res.converged);
        assert_eq!(labels(&res.assignment), vec![0, 1]);
        for (k, w) in iterates.iter().enumerate().take(4) {
            let ratio = (-(f64::from(1u32 << k) - 1.0) * t).exp();
            let expected = 1.0 / (1.0 + ratio);
            assert_abs_diff_eq!(w.row(0)[0], expected, epsilon = 1e-12);
            assert_abs_diff_eq!(w.row(1)[1], expected, epsilon = 1e-12);
        }
        assert_eq!(res.trace.len(), res.iterations + 1);
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let d = FixedDistances(DistanceMatrix::from_rows(vec![vec![0.0, 0.001]]).unwrap());
        let g = GridGraph::new(1, 1, 0).unwrap();
        let cfg = FlowConfig {
            max_iterations: 3,
            ..FlowConfig::default()
        };
        let res = run_flow(&d, &g, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        assert_eq!(res.trace.len(), 4);
    }

    #[test]
    fn config_validation() {
        let bad = FlowConfig {
            rho: 0.0,
            ..FlowConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = FlowConfig {
            max_iterations: 0,
            ..FlowConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
