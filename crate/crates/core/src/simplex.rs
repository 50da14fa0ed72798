//! Fisher-Rao geometry of the open probability simplex.
//!
//! Points of the open simplex are strictly positive vectors with unit sum.
//! The map `p -> 2 sqrt(p)` sends them isometrically onto the positive orthant
//! of the sphere of radius 2, which gives closed forms for distances, geodesics
//! and the logarithm. The lifting map `p * exp(u) / <p, exp(u)>` is the
//! first-order replacement for the exponential map used by the labeling flow.

use std::f64::consts::PI;
use std::ops::Deref;

use crate::error::{check_len, Error, Result};

/// Relative tolerance for accepting a vector as unit-sum.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Below this value of `1 - <sqrt p, sqrt q>` the logarithm switches to its
/// Taylor expansion.
pub const LOG_TAYLOR_THRESHOLD: f64 = 1e-3;

/// A point of the open probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Validates strict positivity and unit sum.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        check_positive(&entries)?;
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotOnSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self(entries))
    }

    /// Divides positive weights by their sum.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        check_positive(&weights)?;
        let sum: f64 = weights.iter().sum();
        Ok(Self(weights.into_iter().map(|w| w / sum).collect()))
    }

    /// The uniform distribution `(1/n, ..., 1/n)`.
    pub fn barycenter(n: usize) -> Self {
        assert!(n > 0, "barycenter of an empty simplex");
        Self(vec![1.0 / n as f64; n])
    }

    /// Wraps entries produced by an operation that preserves the simplex.
    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ProbabilityVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ProbabilityVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A tangent vector of the simplex: entries sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(Vec<f64>);

impl TangentVector {
    /// Accepts vectors whose entries sum to zero up to `1e-9 * (1 + ||v||_1)`.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let sum: f64 = entries.iter().sum();
        let scale: f64 = 1.0 + entries.iter().map(|v| v.abs()).sum::<f64>();
        if sum.abs() > SUM_TOLERANCE * scale {
            return Err(Error::NotOnSimplex(format!(
                "tangent entries sum to {sum}, expected 0"
            )));
        }
        Ok(Self(entries))
    }

    /// Projects an arbitrary vector onto the tangent space by removing its mean.
    pub fn project(entries: Vec<f64>) -> Self {
        let mean = entries.iter().sum::<f64>() / entries.len().max(1) as f64;
        Self(entries.into_iter().map(|v| v - mean).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Sup norm, the stopping measure of the Karcher iteration.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Deref for TangentVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for TangentVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A point on the radius-2 sphere with nonnegative coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        let norm = entries.iter().map(|s| s * s).sum::<f64>().sqrt();
        if (norm - 2.0).abs() > 2.0 * SUM_TOLERANCE {
            return Err(Error::NotOnSimplex(format!(
                "sphere point has norm {norm}, expected 2"
            )));
        }
        Ok(Self(entries))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for SpherePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn check_positive(entries: &[f64]) -> Result<()> {
    match entries
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v > 0.0) || !v.is_finite())
    {
        Some((index, &value)) => Err(Error::NonPositive { index, value }),
        None => Ok(()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fisher-Rao inner product `sum u_i v_i / p_i` at `p`.
pub fn fisher_rao_inner(p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(p.len(), u.len())?;
    check_len(p.len(), v.len())?;
    check_positive(p)?;
    Ok(p.iter()
        .zip(u.iter().zip(v))
        .map(|(pi, (ui, vi))| ui * vi / pi)
        .sum())
}

/// The isometry `p -> 2 sqrt(p)` onto the radius-2 sphere.
pub fn sphere_map(p: &ProbabilityVector) -> SpherePoint {
    SpherePoint(p.iter().map(|v| 2.0 * v.sqrt()).collect())
}

/// Inverse of [`sphere_map`]: `s -> s^2 / 4`.
pub fn sphere_map_inv(s: &SpherePoint) -> Result<ProbabilityVector> {
    check_positive(s)?;
    Ok(ProbabilityVector(s.iter().map(|v| v * v / 4.0).collect()))
}

/// Bhattacharyya coefficient `<sqrt p, sqrt q>`, clamped to `[-1, 1]`.
fn affinity(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a * b).sqrt())
        .sum::<f64>()
        .clamp(-1.0, 1.0)
}

/// Geodesic distance `2 arccos(sum sqrt(p_i q_i))`.
///
/// Accepts points of the closed simplex; vertices with disjoint supports are
/// at distance `pi`.
pub fn riemannian_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_len(p.len(), q.len())?;
    Ok((2.0 * affinity(p, q).acos()).clamp(0.0, PI))
}

/// Riemannian gradient `p * (g - <p, g>)` of a function with Euclidean
/// gradient `g`.
pub fn riemannian_gradient(p: &ProbabilityVector, euclid_grad: &[f64]) -> Result<TangentVector> {
    check_len(p.len(), euclid_grad.len())?;
    let mean = dot(p, euclid_grad);
    Ok(TangentVector(
        p.iter()
            .zip(euclid_grad)
            .map(|(pi, gi)| pi * (gi - mean))
            .collect(),
    ))
}

/// Evaluates the geodesic through `p` with initial velocity `v` at time `t`.
///
/// The curve is computed on the sphere, `s(t) = sqrt(p) cos(a t) + (v_p / |v_p|)
/// sin(a t)` with `v_p = v / sqrt(p)`, `a = |v_p| / 2`, and mapped back by
/// squaring. The result is out of domain when a sphere coordinate reaches zero
/// or when the curve is longer than `pi`, the diameter of the simplex.
pub fn geodesic(p: &ProbabilityVector, v: &TangentVector, t: f64) -> Result<ProbabilityVector> {
    check_len(p.len(), v.len())?;
    let vp: Vec<f64> = v.iter().zip(p.iter()).map(|(vi, pi)| vi / pi.sqrt()).collect();
    let speed = vp.iter().map(|x| x * x).sum::<f64>().sqrt();
    if speed == 0.0 || t == 0.0 {
        return Ok(p.clone());
    }
    let length = speed * t.abs();
    if length > PI {
        return Err(Error::OutOfDomain);
    }
    let half = 0.5 * speed * t;
    let (sin, cos) = half.sin_cos();
    let mut out = Vec::with_capacity(p.len());
    for (pi, vpi) in p.iter().zip(&vp) {
        let s = pi.sqrt() * cos + vpi / speed * sin;
        if !(s > 0.0) {
            return Err(Error::OutOfDomain);
        }
        out.push(s * s);
    }
    Ok(ProbabilityVector(out))
}

/// Exponential map, the geodesic evaluated at `t = 1`.
pub fn exp_map(p: &ProbabilityVector, v: &TangentVector) -> Result<ProbabilityVector> {
    geodesic(p, v, 1.0)
}

/// Logarithm at `p`: the tangent vector whose geodesic reaches `q` at `t = 1`.
///
/// Near `q = p` the closed form degenerates to `0/0`; there a Taylor expansion
/// of the scale factor in `eps = 1 - <sqrt p, sqrt q>` is used instead.
pub fn inverse_exp_map(p: &[f64], q: &[f64]) -> Result<TangentVector> {
    check_len(p.len(), q.len())?;
    let mut out = vec![0.0; p.len()];
    inverse_exp_map_into(p, q, &mut out)?;
    Ok(TangentVector(out))
}

pub(crate) fn inverse_exp_map_into(p: &[f64], q: &[f64], out: &mut [f64]) -> Result<()> {
    let c = affinity(p, q);
    if c <= 0.0 {
        return Err(Error::Antipodal);
    }
    let eps = 1.0 - c;
    let scale = if eps < LOG_TAYLOR_THRESHOLD {
        (9.0 * eps * eps + 40.0 * eps + 480.0) / (240.0 * (1.0 - 0.5 * eps).sqrt())
    } else {
        2.0 * c.acos() / (1.0 - c * c).sqrt()
    };
    for ((o, pi), qi) in out.iter_mut().zip(p).zip(q) {
        *o = scale * ((pi * qi).sqrt() - c * pi);
    }
    Ok(())
}

/// Lifting map `p * exp(u) / <p, exp(u)>`.
///
/// `u` is shifted by its maximum before exponentiation; the value does not
/// depend on constant offsets of `u`.
pub fn lifting_map(p: &ProbabilityVector, u: &[f64]) -> Result<ProbabilityVector> {
    check_len(p.len(), u.len())?;
    let mut out = vec![0.0; p.len()];
    lift_into(p, u, &mut out);
    Ok(ProbabilityVector(out))
}

/// Slice form of [`lifting_map`] writing into `out`.
pub(crate) fn lift_into(p: &[f64], u: &[f64], out: &mut [f64]) {
    let shift = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for ((o, pi), ui) in out.iter_mut().zip(p).zip(u) {
        *o = pi * (ui - shift).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Inverse of the lifting map: the mean-free `u` with `lifting_map(p, u) = q`.
pub fn inverse_lifting_map(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<Vec<f64>> {
    check_len(p.len(), q.len())?;
    let diff: Vec<f64> = q.iter().zip(p.iter()).map(|(a, b)| a.ln() - b.ln()).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    Ok(diff.into_iter().map(|d| d - mean).collect())
}

/// Velocity `(Diag(p) - p p^T) u` of the lifted curve `t -> lifting_map(p, t u)`
/// at `t = 0`.
pub fn lift_velocity(p: &ProbabilityVector, u: &[f64]) -> Result<TangentVector> {
    check_len(p.len(), u.len())?;
    let mean = dot(p, u);
    Ok(TangentVector(
        p.iter().zip(u).map(|(pi, ui)| pi * (ui - mean)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    fn tv(v: &[f64]) -> TangentVector {
        TangentVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn fisher_rao_examples() {
        let p = [0.5, 0.5];
        assert_abs_diff_eq!(fisher_rao_inner(&p, &[1.0, -1.0], &[1.0, -1.0]).unwrap(), 4.0);
        assert_abs_diff_eq!(fisher_rao_inner(&p, &[1.0, -1.0], &[-1.0, 1.0]).unwrap(), -4.0);
        assert_eq!(fisher_rao_inner(&p, &[0.0, 0.0], &[3.0, -3.0]).unwrap(), 0.0);
    }

    #[test]
    fn fisher_rao_errors() {
        assert!(matches!(
            fisher_rao_inner(&[0.5, 0.5], &[1.0], &[1.0, -1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            fisher_rao_inner(&[1.0, 0.0], &[1.0, -1.0], &[1.0, -1.0]),
            Err(Error::NonPositive { index: 1, .. })
        ));
    }

    #[test]
    fn sphere_map_examples() {
        let s = sphere_map(&pv(&[0.25, 0.75]));
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 3f64.sqrt(), epsilon = 1e-15);
        let b = sphere_map(&ProbabilityVector::barycenter(4));
        assert!(b.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(sphere_map_inv(&SpherePoint(vec![2.0, 0.0])).is_err());
    }

    #[test]
    fn distance_examples() {
        let p = pv(&[0.3, 0.7]);
        assert_eq!(riemannian_distance(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(riemannian_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), PI);
        // 2 * acos(sqrt(0.09) + sqrt(0.09)) = 2 * acos(0.6)
        let d = riemannian_distance(&[0.9, 0.1], &[0.1, 0.9]).unwrap();
        assert_abs_diff_eq!(d, 1.854_590_436_003_609_6, epsilon = 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let p = pv(&[0.5, 0.5]);
        let g = riemannian_gradient(&p, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(g[0], 0.25);
        assert_abs_diff_eq!(g[1], -0.25);
        let z = riemannian_gradient(&pv(&[0.2, 0.3, 0.5]), &[7.0, 7.0, 7.0]).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn geodesic_starts_at_p_with_velocity_v() {
        let p = pv(&[0.2, 0.3, 0.5]);
        let v = tv(&[0.05, -0.02, -0.03]);
        assert_eq!(geodesic(&p, &v, 0.0).unwrap(), p);
        // central finite difference of the curve at t = 0
        let h = 1e-5;
        let fwd = geodesic(&p, &v, h).unwrap();
        let bwd = geodesic(&p, &v, -h).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!((fwd[k] - bwd[k]) / (2.0 * h), v[k], epsilon = 1e-8);
        }
    }

    #[test]
    fn geodesic_out_of_domain() {
        let p = pv(&[0.5, 0.5]);
        assert_eq!(geodesic(&p, &tv(&[0.5, -0.5]), 10.0), Err(Error::OutOfDomain));
        // Euclidean straight line would leave at t = 1; the geodesic is still inside
        assert!(geodesic(&p, &tv(&[0.5, -0.5]), 1.0).is_ok());
        assert_eq!(geodesic(&p, &tv(&[0.5, -0.5]), 2.0), Err(Error::OutOfDomain));
    }

    #[test]
    fn exp_map_matches_great_circle() {
        // Oracle: rotate 2 sqrt(b) on the circle of radius 2 by the arc length
        // |v|_b / 2 in the plane, then map back.
        let b = ProbabilityVector::barycenter(2);
        let v = tv(&[0.1, -0.1]);
        let len = fisher_rao_inner(&b, &v, &v).unwrap().sqrt();
        let start = (0.5f64).sqrt().atan2((0.5f64).sqrt());
        let angle = start - len / 2.0;
        let expected = [(2.0 * angle.cos()).powi(2) / 4.0, (2.0 * angle.sin()).powi(2) / 4.0];
        let q = exp_map(&b, &v).unwrap();
        assert_abs_diff_eq!(q[0], expected[0], epsilon = 1e-14);
        assert_abs_diff_eq!(q[1], expected[1], epsilon = 1e-14);
        assert_eq!(exp_map(&b, &TangentVector::zeros(2)).unwrap(), b);
    }

    #[test]
    fn log_map_examples() {
        let p = pv(&[0.2, 0.3, 0.5]);
        let zero = inverse_exp_map(&p, &p).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-15));
        let q = pv(&[0.6, 0.1, 0.3]);
        let v = inverse_exp_map(&p, &q).unwrap();
        assert!(v.iter().sum::<f64>().abs() < 1e-15);
        let norm = fisher_rao_inner(&p, &v, &v).unwrap().sqrt();
        assert_abs_diff_eq!(norm, riemannian_distance(&p, &q).unwrap(), epsilon = 1e-12);
        let back = exp_map(&p, &v).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(back[k], q[k], epsilon = 1e-12);
        }
        assert_eq!(inverse_exp_map(&[1.0, 0.0], &[0.0, 1.0]), Err(Error::Antipodal));
    }

    #[test]
    fn log_map_taylor_branch_is_continuous() {
        // Points straddling eps = 1e-3 give nearly the same scale factor.
        let p = pv(&[0.5, 0.5]);
        for delta in [0.0446, 0.0448] {
            let q = pv(&[0.5 + delta, 0.5 - delta]);
            let v = inverse_exp_map(&p, &q).unwrap();
            let norm = fisher_rao_inner(&p, &v, &v).unwrap().sqrt();
            let d = riemannian_distance(&p, &q).unwrap();
            assert_abs_diff_eq!(norm, d, epsilon = 1e-9);
        }
    }

    #[test]
    fn lifting_examples() {
        let p = pv(&[0.2, 0.3, 0.5]);
        assert_eq!(lifting_map(&p, &[0.0; 3]).unwrap().as_slice(), p.as_slice());
        let q = lifting_map(&pv(&[0.5, 0.5]), &[2f64.ln(), 0.0]).unwrap();
        assert_abs_diff_eq!(q[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 1.0 / 3.0, epsilon = 1e-15);
        // overflow-safe
        let big = lifting_map(&p, &[1e4, 0.0, -1e4]).unwrap();
        assert_eq!(big[0], 1.0);
    }

    #[test]
    fn inverse_lifting_examples() {
        let p = pv(&[0.2, 0.3, 0.5]);
        assert!(inverse_lifting_map(&p, &p).unwrap().iter().all(|v| v.abs() < 1e-15));
        let q = pv(&[0.7, 0.1, 0.2]);
        let u = inverse_lifting_map(&p, &q).unwrap();
        assert!(u.iter().sum::<f64>().abs() < 1e-14);
        let back = lifting_map(&p, &u).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(back[k], q[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn lift_velocity_examples() {
        let p = pv(&[0.5, 0.5]);
        let v = lift_velocity(&p, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v[0], 0.25);
        assert_abs_diff_eq!(v[1], -0.25);
        let z = lift_velocity(&pv(&[0.2, 0.3, 0.5]), &[3.0; 3]).unwrap();
        assert!(z.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn lifted_curve_is_second_order_close_to_geodesic() {
        let p = pv(&[0.2, 0.3, 0.5]);
        let u = [0.7, -0.4, 0.1];
        let v = lift_velocity(&p, &u).unwrap();
        let gap = |t: f64| {
            let g = geodesic(&p, &v, t).unwrap();
            let scaled: Vec<f64> = u.iter().map(|x| x * t).collect();
            let l = lifting_map(&p, &scaled).unwrap();
            g.iter().zip(l.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let mut prev = gap(0.1);
        for k in 1..5 {
            let t = 0.1 / f64::from(1 << k);
            let cur = gap(t);
            let ratio = prev / cur;
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio} at t={t}");
            prev = cur;
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.0]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(TangentVector::new(vec![1.0, -0.5]).is_err());
        let n = ProbabilityVector::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(n.as_slice(), &[0.25, 0.75]);
    }
}
