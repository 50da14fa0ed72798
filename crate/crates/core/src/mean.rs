//! Riemannian means on the open simplex.
//!
//! [`karcher_mean`] runs the fixed-point iteration `p <- Exp_p(sum_i w_i
//! Exp_p^{-1}(p_i))` from the barycenter. [`geometric_mean_approx`] is the
//! closed form obtained by replacing `Exp` with the lifting map: the weighted
//! componentwise geometric mean, renormalized.

use crate::error::{Error, Result};
use crate::simplex::{exp_map, inverse_exp_map_into, ProbabilityVector, TangentVector};

#[derive(Debug, Clone, PartialEq)]
pub struct MeanConfig {
    /// Stop once the averaged tangent vector has sup norm at most this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Optional weights in the closed simplex; uniform when absent.
    pub weights: Option<Vec<f64>>,
}

impl Default for MeanConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 100,
            weights: None,
        }
    }
}

fn resolve_weights(count: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0 / count as f64; count]),
        Some(w) => {
            if w.len() != count {
                return Err(Error::DimensionMismatch {
                    expected: count,
                    found: w.len(),
                });
            }
            if w.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::InvalidParameter("mean weights must be nonnegative".into()));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "mean weights must sum to 1, found {sum}"
                )));
            }
            Ok(w.to_vec())
        }
    }
}

fn check_points(points: &[ProbabilityVector]) -> Result<usize> {
    let first = points.first().ok_or(Error::Empty("mean of no points"))?;
    let n = first.len();
    for p in points {
        crate::error::check_len(n, p.len())?;
    }
    Ok(n)
}

/// Riemannian (Karcher) mean, iterated from the barycenter.
pub fn karcher_mean(points: &[ProbabilityVector], cfg: &MeanConfig) -> Result<ProbabilityVector> {
    let n = check_points(points)?;
    karcher_mean_from(points, cfg, ProbabilityVector::barycenter(n))
}

/// Riemannian mean iterated from a caller-supplied starting point.
pub fn karcher_mean_from(
    points: &[ProbabilityVector],
    cfg: &MeanConfig,
    start: ProbabilityVector,
) -> Result<ProbabilityVector> {
    let n = check_points(points)?;
    crate::error::check_len(n, start.len())?;
    if !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParameter("mean tolerance must be positive".into()));
    }
    let weights = resolve_weights(points.len(), cfg.weights.as_deref())?;

    let mut current = start;
    let mut step = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        step.iter_mut().for_each(|s| *s = 0.0);
        for (point, &w) in points.iter().zip(&weights) {
            if w == 0.0 {
                continue;
            }
            inverse_exp_map_into(&current, point, &mut scratch)?;
            for (s, v) in step.iter_mut().zip(&scratch) {
                *s += w * v;
            }
        }
        let v = TangentVector::from_vec_unchecked(step.clone());
        residual = v.max_abs();
        let next = exp_map(&current, &v)?;
        if residual <= cfg.tolerance {
            return Ok(next);
        }
        current = next;
    }
    Err(Error::MeanNotConverged {
        iterations: cfg.max_iterations,
        residual,
        last: current.into_vec(),
    })
}

/// Normalized weighted geometric mean `prod_i p_i^{w_i} / <1, prod_i p_i^{w_i}>`.
///
/// Evaluated in the log domain with a fixed summation order.
pub fn geometric_mean_approx(
    points: &[ProbabilityVector],
    weights: Option<&[f64]>,
) -> Result<ProbabilityVector> {
    let n = check_points(points)?;
    let weights = resolve_weights(points.len(), weights)?;
    let mut out = vec![0.0; n];
    let rows = points.iter().map(|p| p.as_slice());
    geometric_mean_into(rows, &weights, &mut out);
    Ok(ProbabilityVector::from_vec_unchecked(out))
}

/// Uniform-weight geometric mean of rows given by their componentwise logs,
/// written into `out`. A single row is copied from `first` exactly.
pub(crate) fn geometric_mean_logs_into<'a, I>(log_rows: I, count: usize, first: &[f64], out: &mut [f64])
where
    I: Iterator<Item = &'a [f64]>,
{
    if count == 1 {
        out.copy_from_slice(first);
        return;
    }
    let w = 1.0 / count as f64;
    out.iter_mut().for_each(|o| *o = 0.0);
    for row in log_rows {
        for (o, x) in out.iter_mut().zip(row) {
            *o += w * x;
        }
    }
    exp_normalize(out);
}

fn geometric_mean_into<'a, I>(rows: I, weights: &[f64], out: &mut [f64])
where
    I: Iterator<Item = &'a [f64]>,
{
    out.iter_mut().for_each(|o| *o = 0.0);
    for (row, &w) in rows.zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(row) {
            *o += w * x.ln();
        }
    }
    exp_normalize(out);
}

fn exp_normalize(logs: &mut [f64]) {
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logs.iter_mut() {
        *l = (*l - shift).exp();
        total += *l;
    }
    for l in logs.iter_mut() {
        *l /= total;
    }
}
