//! Seeded synthetic instances for the bundled experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureImage, PriorSet};

/// A labeling instance with known ground truth.
#[derive(Debug, Clone)]
pub struct LabelingInstance {
    pub image: FeatureImage,
    pub priors: PriorSet,
    pub ground_truth: Vec<usize>,
}

/// Piecewise-constant label map: Voronoi cells of `labels` distinct random
/// seed pixels, so every label occurs.
pub fn voronoi_labels(height: usize, width: usize, labels: usize, seed: u64) -> Result<Vec<usize>> {
    if labels == 0 || labels > height * width {
        return Err(Error::InvalidParameter(format!(
            "cannot place {labels} regions in a {height}x{width} image"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<usize> = rand::seq::index::sample(&mut rng, height * width, labels).into_vec();
    let coords: Vec<(f64, f64)> = sites
        .iter()
        .map(|&s| ((s / width) as f64, (s % width) as f64))
        .collect();
    Ok((0..height * width)
        .map(|i| {
            let (r, c) = ((i / width) as f64, (i % width) as f64);
            (0..labels)
                .min_by(|&a, &b| {
                    let da = (coords[a].0 - r).powi(2) + (coords[a].1 - c).powi(2);
                    let db = (coords[b].0 - r).powi(2) + (coords[b].1 - c).powi(2);
                    da.total_cmp(&db)
                })
                .expect("at least one label")
        })
        .collect())
}

/// `n` unit vectors of dimension `n`.
pub fn vertex_priors(n: usize) -> Result<PriorSet> {
    PriorSet::vectors(
        (0..n)
            .map(|k| (0..n).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect(),
    )
}

/// Noisy piecewise-constant image whose labels are encoded as simplex
/// vertices; a fraction `noise` of the pixels is replaced by uniformly random
/// labels.
pub fn noisy_vertex_instance(
    height: usize,
    width: usize,
    labels: usize,
    noise: f64,
    seed: u64,
) -> Result<LabelingInstance> {
    let truth = voronoi_labels(height, width, labels, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let observed: Vec<usize> = truth
        .iter()
        .map(|&t| if rng.gen::<f64>() < noise { rng.gen_range(0..labels) } else { t })
        .collect();
    let mut data = vec![0.0; height * width * labels];
    for (i, &l) in observed.iter().enumerate() {
        data[i * labels + l] = 1.0;
    }
    Ok(LabelingInstance {
        image: FeatureImage::new(height, width, labels, data)?,
        priors: vertex_priors(labels)?,
        ground_truth: truth,
    })
}

/// Three 120-degree wedges of pure red, green and blue meeting at the image
/// center, with a centered disk of radius `hole_radius` marked missing.
pub fn triple_point(size: usize, hole_radius: f64) -> Result<LabelingInstance> {
    if size == 0 {
        return Err(Error::Empty("triple point image"));
    }
    let colors = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
    let center = (size as f64 - 1.0) / 2.0;
    let mut data = Vec::with_capacity(size * size * 3);
    let mut truth = Vec::with_capacity(size * size);
    let mut mask = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            let (y, x) = (r as f64 - center, c as f64 - center);
            // angle measured from "up", wedges start at -60 degrees
            let angle = x.atan2(-y).rem_euclid(std::f64::consts::TAU);
            let shifted = (angle + std::f64::consts::FRAC_PI_3).rem_euclid(std::f64::consts::TAU);
            let label = ((shifted / (std::f64::consts::TAU / 3.0)) as usize).min(2);
            truth.push(label);
            data.extend_from_slice(&colors[label]);
            mask.push(x.hypot(y) <= hole_radius);
        }
    }
    Ok(LabelingInstance {
        image: FeatureImage::new(size, size, 3, data)?.with_mask(mask)?,
        priors: PriorSet::vectors(colors)?,
        ground_truth: truth,
    })
}

/// Uniform RGB noise in `[0, 1]^3`.
pub fn uniform_noise(height: usize, width: usize, seed: u64) -> Result<FeatureImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..height * width * 3).map(|_| rng.gen::<f64>()).collect();
    FeatureImage::new(height, width, 3, data)
}

/// Binary roof-tile pattern: `tile x tile` cells with a `gap`-pixel dark
/// border, every other row staggered by half a tile. Period is
/// `2 tile` rows by `tile` columns.
fn roof_pattern(y: usize, x: usize, tile: usize, gap: usize) -> bool {
    let row = y / tile;
    let shift = (row % 2) * tile / 2;
    y % tile < tile - gap && (x + shift) % tile < tile - gap
}

/// A single-channel image with a patch dictionary.
#[derive(Debug, Clone)]
pub struct PatchInstance {
    pub image: FeatureImage,
    pub priors: PriorSet,
}

/// Noisy roof-tile image with varying tile brightness, and the dictionary of
/// all distinct translations of the binary tile template.
pub fn roof(size: usize, patch_radius: usize, seed: u64) -> Result<PatchInstance> {
    let (tile, gap) = (8usize, 2usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiles_per_side = size / tile + 2;
    let bright: Vec<f64> = (0..tiles_per_side * tiles_per_side)
        .map(|_| rng.gen_range(0.6..0.9))
        .collect();
    let mut data = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let shift = ((y / tile) % 2) * tile / 2;
            let tile_id = (y / tile) * tiles_per_side + (x + shift) / tile;
            let base = if roof_pattern(y, x, tile, gap) { bright[tile_id] } else { 0.2 };
            let noise = rng.gen_range(-0.08..0.08);
            data.push((base + noise).clamp(0.0, 1.0));
        }
    }
    let side = 2 * patch_radius + 1;
    let r = patch_radius as isize;
    let mut items = Vec::new();
    for sy in 0..2 * tile {
        for sx in 0..tile {
            let patch: Vec<f64> = (0..side * side)
                .map(|k| {
                    let dy = (k / side) as isize - r;
                    let dx = (k % side) as isize - r;
                    let y = (sy as isize + dy).rem_euclid(2 * tile as isize) as usize;
                    let x = (sx as isize + dx).rem_euclid(tile as isize) as usize;
                    if roof_pattern(y, x, tile, gap) { 1.0 } else { 0.0 }
                })
                .collect();
            // the stagger makes some translations coincide
            if !items.contains(&patch) {
                items.push(patch);
            }
        }
    }
    Ok(PatchInstance {
        image: FeatureImage::new(size, size, 1, data)?,
        priors: PriorSet::patches(patch_radius, 1, items)?,
    })
}

const SUPERSAMPLE: usize = 4;

/// Twelve classes of oriented bright-to-dark edges (every 30 degrees), each
/// holding all sub-pixel translations of the edge within the patch, plus a
/// constant patch as class 12. Pixels cut by the edge take the covered
/// fraction, which keeps the classes distinct even for 3x3 patches.
pub fn fingerprint_dictionary(patch_radius: usize, dark: f64, bright: f64) -> Result<PriorSet> {
    let side = 2 * patch_radius + 1;
    let r = patch_radius as f64;
    let mut items = Vec::new();
    let mut classes = Vec::new();
    for class in 0..12 {
        let theta = (class as f64 * 30.0).to_radians();
        let (s, c) = theta.sin_cos();
        let shifts = (2 * patch_radius).max(1);
        for t in 0..shifts {
            let offset = t as f64 - r + 0.5;
            let patch = (0..side * side)
                .map(|k| {
                    let dy = (k / side) as f64 - r;
                    let dx = (k % side) as f64 - r;
                    let covered = (0..SUPERSAMPLE * SUPERSAMPLE)
                        .filter(|q| {
                            let sy = dy + ((q / SUPERSAMPLE) as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
                            let sx = dx + ((q % SUPERSAMPLE) as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
                            sx * c + sy * s < offset
                        })
                        .count() as f64
                        / (SUPERSAMPLE * SUPERSAMPLE) as f64;
                    dark + (bright - dark) * covered
                })
                .collect();
            items.push(patch);
            classes.push(class);
        }
    }
    items.push(vec![0.5 * (dark + bright); side * side]);
    classes.push(12);
    PriorSet::patches(patch_radius, 1, items)?.with_classes(classes)
}

/// Fingerprint-like image: concentric ridges thresholded to two grey levels,
/// on a smooth illumination gradient, with mild noise.
pub fn fingerprint_image(size: usize, seed: u64) -> Result<FeatureImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = (size as f64 * 0.45, size as f64 * 0.55);
    let period = 7.0;
    let mut data = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (dy, dx) = (y as f64 - center.0, (x as f64 - center.1) * 0.8);
            let ridge = (std::f64::consts::TAU * dy.hypot(dx) / period).cos();
            let level = if ridge > 0.0 { 0.7 } else { 0.3 };
            let illumination = 0.15 * (x as f64 / size as f64) - 0.05 * (y as f64 / size as f64);
            data.push((level + illumination + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0));
        }
    }
    FeatureImage::new(size, size, 1, data)
}
