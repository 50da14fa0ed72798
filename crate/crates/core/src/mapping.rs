//! Synthesis of an output image from an assignment.

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::features::{FeatureImage, ImagePatch, PatchDistances, PriorKind, PriorSet};
use crate::flow::AssignmentMatrix;
use crate::grid::{GridGraph, PatchSupport};

/// `u_i = sum_j W_ij f*_j`, flattened `m x d`.
pub fn vector_assignment(w: &AssignmentMatrix, priors: &PriorSet) -> Result<Vec<f64>> {
    let PriorKind::Vectors { dim } = priors.kind() else {
        return Err(Error::InvalidParameter("vector assignment needs vector priors".into()));
    };
    check_len(priors.len(), w.cols())?;
    let mut out = vec![0.0; w.rows() * dim];
    out.par_chunks_mut(dim).enumerate().for_each(|(i, ui)| {
        for (wij, item) in w.row(i).iter().zip(priors.items()) {
            for (u, f) in ui.iter_mut().zip(item) {
                *u += wij * f;
            }
        }
    });
    Ok(out)
}

/// Fuses patch predictions: every patch centered at `j` whose support covers
/// `i` contributes its expected value at `i`, weighted by the Gaussian weight
/// of the offset. Weights are renormalized over the contributing patches,
/// which only matters near the border.
///
/// `realize(j, k)` returns the full-support prior patch for label `k` as
/// fitted at location `j`.
fn fuse_patches<F>(
    w: &AssignmentMatrix,
    grid: &GridGraph,
    support: &PatchSupport,
    channels: usize,
    realize: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, usize) -> Vec<f64> + Sync,
{
    check_len(grid.node_count(), w.rows())?;
    let offsets = support.offsets();
    let len = offsets.len() * channels;
    let n = w.cols();

    let mut expected = vec![0.0; w.rows() * len];
    expected.par_chunks_mut(len).enumerate().for_each(|(j, ej)| {
        for (k, &wjk) in w.row(j).iter().enumerate().take(n) {
            let patch = realize(j, k);
            for (e, p) in ej.iter_mut().zip(&patch) {
                *e += wjk * p;
            }
        }
    });

    let side = support.side() as isize;
    let r = support.radius() as isize;
    let mut out = vec![0.0; w.rows() * channels];
    out.par_chunks_mut(channels).enumerate().for_each(|(i, ui)| {
        let mut total = 0.0;
        for &(dy, dx) in &offsets {
            // patch centered at j = i - offset sees i at local offset (dy, dx)
            let Some(j) = grid.offset(i, -dy, -dx) else {
                continue;
            };
            let weight = support.weight(dy, dx);
            let k = ((dy + r) * side + dx + r) as usize;
            let ej = &expected[j * len + k * channels..j * len + (k + 1) * channels];
            for (u, e) in ui.iter_mut().zip(ej) {
                *u += weight * e;
            }
            total += weight;
        }
        ui.iter_mut().for_each(|u| *u /= total);
    });
    Ok(out)
}

fn patch_shape(priors: &PriorSet, support: &PatchSupport) -> Result<usize> {
    let PriorKind::Patches { radius, channels } = priors.kind() else {
        return Err(Error::InvalidParameter("patch assignment needs patch priors".into()));
    };
    if radius != support.radius() {
        return Err(Error::InvalidParameter(format!(
            "patch radius {radius} does not match support radius {}",
            support.radius()
        )));
    }
    Ok(channels)
}

/// Patch assignment for a dictionary whose items are the labels.
pub fn patch_assignment(
    w: &AssignmentMatrix,
    priors: &PriorSet,
    grid: &GridGraph,
    support: &PatchSupport,
) -> Result<Vec<f64>> {
    let channels = patch_shape(priors, support)?;
    check_len(priors.len(), w.cols())?;
    fuse_patches(w, grid, support, channels, |_, k| priors.items()[k].clone())
}

/// Patch assignment for adapted or class-grouped dictionaries: each label is
/// realized by its best-matching member, adapted to the data patch at the
/// patch center.
pub fn patch_assignment_adapted(
    w: &AssignmentMatrix,
    img: &FeatureImage,
    priors: &PriorSet,
    distances: &PatchDistances,
    support: &PatchSupport,
) -> Result<Vec<f64>> {
    let channels = patch_shape(priors, support)?;
    check_len(priors.label_count(), w.cols())?;
    check_len(img.pixel_count(), w.rows())?;
    let n = w.cols();
    let radius = support.radius();
    let grid = img.grid(0);
    fuse_patches(w, &grid, support, channels, |j, k| {
        let item = &priors.items()[distances.best_member[j * n + k]];
        if img.is_missing(j) {
            return item.clone();
        }
        let patch = ImagePatch::extract(img, j, radius);
        distances.metric.realize(&patch, item)
    })
}

/// Residual `v = f - u`; zero at missing pixels.
pub fn decompose(f: &FeatureImage, u: &[f64]) -> Result<Vec<f64>> {
    check_len(f.as_slice().len(), u.len())?;
    let c = f.channels();
    Ok(f.as_slice()
        .iter()
        .zip(u)
        .enumerate()
        .map(|(k, (a, b))| if f.is_missing(k / c) { 0.0 } else { a - b })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::init_uniform;
    use crate::grid::gaussian_patch_weights;
    use approx::assert_abs_diff_eq;

    fn one_hot(m: usize, n: usize, labels: &[usize]) -> AssignmentMatrix {
        let eps = 1e-12;
        AssignmentMatrix::from_rows(
            (0..m)
                .map(|i| {
                    let mut row = vec![eps; n];
                    row[labels[i]] = 1.0 - eps * (n - 1) as f64;
                    row
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn vector_assignment_examples() {
        let priors = PriorSet::vectors(vec![vec![0.0], vec![1.0]]).unwrap();
        let w = AssignmentMatrix::from_rows(vec![vec![0.25, 0.75]]).unwrap();
        assert_eq!(vector_assignment(&w, &priors).unwrap(), vec![0.75]);
        let u = vector_assignment(&init_uniform(1, 2).unwrap(), &priors).unwrap();
        assert_eq!(u, vec![0.5]);
        let rgb = PriorSet::vectors(vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let u = vector_assignment(&one_hot(1, 2, &[1]), &rgb).unwrap();
        assert!((u[2] - 1.0).abs() < 1e-11 && u[0].abs() < 1e-11);
    }

    #[test]
    fn radius_zero_patches_reduce_to_vectors() {
        let items = vec![vec![0.2], vec![0.9]];
        let patches = PriorSet::patches(0, 1, items.clone()).unwrap();
        let vectors = PriorSet::vectors(items).unwrap();
        let w = AssignmentMatrix::from_rows(vec![vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let grid = GridGraph::new(1, 2, 0).unwrap();
        let a = patch_assignment(&w, &patches, &grid, &gaussian_patch_weights(0)).unwrap();
        let b = vector_assignment(&w, &vectors).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_patches_give_constant_output() {
        let patches = PriorSet::patches(1, 1, vec![vec![0.3; 9], vec![0.8; 9]]).unwrap();
        let grid = GridGraph::new(4, 5, 0).unwrap();
        let w = one_hot(20, 2, &[1; 20]);
        let u = patch_assignment(&w, &patches, &grid, &gaussian_patch_weights(1)).unwrap();
        assert!(u.iter().all(|v| (v - 0.8).abs() < 1e-10));
    }

    #[test]
    fn interior_pixel_matches_double_sum() {
        // Oracle: literal evaluation of the normalized double sum over all
        // patches j covering i and all prior patches k.
        let a: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
        let b: Vec<f64> = (0..9).map(|k| ((k * 5) % 9) as f64 / 8.0).collect();
        let priors = PriorSet::patches(1, 1, vec![a.clone(), b.clone()]).unwrap();
        let grid = GridGraph::new(3, 3, 0).unwrap();
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|j| {
                let t = 0.1 + 0.08 * j as f64;
                vec![t, 1.0 - t]
            })
            .collect();
        let w = AssignmentMatrix::from_rows(rows).unwrap();
        let support = gaussian_patch_weights(1);
        let u = patch_assignment(&w, &priors, &grid, &support).unwrap();

        let i = 4;
        let (ri, ci) = (1isize, 1isize);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..9 {
            let (rj, cj) = ((j / 3) as isize, (j % 3) as isize);
            let (dy, dx) = (ri - rj, ci - cj);
            let local = ((dy + 1) * 3 + dx + 1) as usize;
            let wt = support.weight(dy, dx);
            let pred = w.row(j)[0] * a[local] + w.row(j)[1] * b[local];
            num += wt * pred;
            den += wt;
        }
        assert_abs_diff_eq!(den, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u[i], num / den, epsilon = 1e-14);
    }

    #[test]
    fn output_stays_in_convex_hull() {
        let patches = PriorSet::patches(
            1,
            1,
            vec![(0..9).map(|k| 0.2 + 0.05 * k as f64).collect(), vec![0.6; 9]],
        )
        .unwrap();
        let grid = GridGraph::new(5, 5, 0).unwrap();
        let rows = (0..25).map(|i| vec![0.04 * i as f64 + 0.01, 0.99 - 0.04 * i as f64]).collect();
        let w = AssignmentMatrix::from_rows(rows).unwrap();
        let u = patch_assignment(&w, &patches, &grid, &gaussian_patch_weights(1)).unwrap();
        assert!(u.iter().all(|v| (0.2 - 1e-12..=0.6 + 1e-12).contains(v)));
    }

    #[test]
    fn decompose_examples() {
        let f = FeatureImage::new(1, 3, 1, vec![0.5, 0.25, 1.0]).unwrap();
        assert_eq!(decompose(&f, f.as_slice()).unwrap(), vec![0.0; 3]);
        let u = vec![0.4, 0.15, 0.9];
        let v = decompose(&f, &u).unwrap();
        for (k, vi) in v.iter().enumerate() {
            assert_abs_diff_eq!(*vi, 0.1, epsilon = 1e-15);
            assert_eq!(u[k] + vi, f.as_slice()[k]);
        }
        let masked = f.clone().with_mask(vec![false, true, false]).unwrap();
        assert_eq!(decompose(&masked, &u).unwrap()[1], 0.0);
    }
}
