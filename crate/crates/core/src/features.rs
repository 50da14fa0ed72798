//! Feature images, prior sets and the distance functions between them.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::flow::DistanceMatrix;
use crate::grid::{patch_offsets, GridGraph};

/// Per-pixel feature vectors with an optional missing-data mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
    /// `true` marks a pixel without data.
    mask: Option<Vec<bool>>,
}

impl FeatureImage {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Empty("feature image"));
        }
        check_len(height * width * channels, data.len())?;
        Ok(Self {
            height,
            width,
            channels,
            data,
            mask: None,
        })
    }

    pub fn with_mask(mut self, missing: Vec<bool>) -> Result<Self> {
        check_len(self.pixel_count(), missing.len())?;
        self.mask = Some(missing);
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.mask.as_ref().is_some_and(|m| m[i])
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Grid over this image's pixels with the given window radius.
    pub fn grid(&self, window_radius: usize) -> GridGraph {
        GridGraph::new(self.height, self.width, window_radius).expect("non-empty image")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorKind {
    /// Plain feature vectors of dimension `dim`.
    Vectors { dim: usize },
    /// Square patches of side `2 radius + 1`, `channels` values per offset,
    /// stored row-major over offsets.
    Patches { radius: usize, channels: usize },
}

/// Ordered prior features, optionally grouped into classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSet {
    kind: PriorKind,
    items: Vec<Vec<f64>>,
    class_of: Option<Vec<usize>>,
}

impl PriorSet {
    pub fn vectors(items: Vec<Vec<f64>>) -> Result<Self> {
        let dim = items.first().map(Vec::len).ok_or(Error::Empty("prior set"))?;
        if dim == 0 {
            return Err(Error::Empty("prior feature"));
        }
        for item in &items {
            check_len(dim, item.len())?;
        }
        Ok(Self {
            kind: PriorKind::Vectors { dim },
            items,
            class_of: None,
        })
    }

    pub fn patches(radius: usize, channels: usize, items: Vec<Vec<f64>>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::Empty("prior set"));
        }
        let side = 2 * radius + 1;
        for item in &items {
            check_len(side * side * channels, item.len())?;
        }
        Ok(Self {
            kind: PriorKind::Patches { radius, channels },
            items,
            class_of: None,
        })
    }

    /// Groups items into classes; class ids must cover `0..k` without gaps.
    pub fn with_classes(mut self, class_of: Vec<usize>) -> Result<Self> {
        check_len(self.items.len(), class_of.len())?;
        let k = class_of.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        class_of.iter().for_each(|&c| seen[c] = true);
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("class indices must be contiguous from 0".into()));
        }
        self.class_of = Some(class_of);
        Ok(self)
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn items(&self) -> &[Vec<f64>] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn class_of(&self) -> Option<&[usize]> {
        self.class_of.as_deref()
    }

    /// Number of labels: classes when grouped, items otherwise.
    pub fn label_count(&self) -> usize {
        match &self.class_of {
            Some(c) => c.iter().max().map_or(0, |m| m + 1),
            None => self.items.len(),
        }
    }

    /// Item indices belonging to class `class_id`.
    pub fn class_members(&self, class_id: usize) -> Vec<usize> {
        match &self.class_of {
            Some(c) => (0..c.len()).filter(|&j| c[j] == class_id).collect(),
            None if class_id < self.items.len() => vec![class_id],
            None => Vec::new(),
        }
    }
}

/// Distances between plain feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VectorMetric {
    /// `||f - f*||_1 / d`
    #[default]
    ScaledL1,
    /// `||f - f*||_1`
    L1,
}

impl VectorMetric {
    pub fn distance(self, f: &[f64], f_star: &[f64]) -> Result<f64> {
        match self {
            VectorMetric::ScaledL1 => scaled_l1_distance(f, f_star),
            VectorMetric::L1 => {
                check_len(f.len(), f_star.len())?;
                Ok(l1(f, f_star))
            }
        }
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// `||f - f*||_1 / d`.
pub fn scaled_l1_distance(f: &[f64], f_star: &[f64]) -> Result<f64> {
    check_len(f.len(), f_star.len())?;
    if f.is_empty() {
        return Err(Error::Empty("feature vector"));
    }
    Ok(l1(f, f_star) / f.len() as f64)
}

/// `D_ij = d(f_i, f*_j) / rho`; missing pixels get an all-zero row.
pub fn build_distance_matrix(
    img: &FeatureImage,
    priors: &PriorSet,
    metric: VectorMetric,
    rho: f64,
) -> Result<DistanceMatrix> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let PriorKind::Vectors { dim } = priors.kind() else {
        return Err(Error::InvalidParameter("vector distances need vector priors".into()));
    };
    check_len(dim, img.channels())?;
    let n = priors.len();
    let mut data = Vec::with_capacity(img.pixel_count() * n);
    for i in 0..img.pixel_count() {
        if img.is_missing(i) {
            data.extend(std::iter::repeat_n(0.0, n));
            continue;
        }
        for item in priors.items() {
            data.push(metric.distance(img.pixel(i), item)? / rho);
        }
    }
    DistanceMatrix::new(img.pixel_count(), n, data)
}

/// Image values around one pixel, restricted to offsets inside the image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePatch {
    /// Indices into the row-major offset list of the full patch.
    pub offsets: Vec<usize>,
    /// `channels` values per kept offset.
    pub values: Vec<f64>,
    pub channels: usize,
}

impl ImagePatch {
    pub fn extract(img: &FeatureImage, i: usize, radius: usize) -> Self {
        let grid = img.grid(0);
        let c = img.channels();
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        for (k, (dy, dx)) in patch_offsets(radius).into_iter().enumerate() {
            if let Some(j) = grid.offset(i, dy, dx) {
                offsets.push(k);
                values.extend_from_slice(img.pixel(j));
            }
        }
        Self {
            offsets,
            values,
            channels: c,
        }
    }

    /// Full-support patch without clipping.
    pub fn full(values: Vec<f64>, channels: usize) -> Self {
        let count = values.len() / channels;
        Self {
            offsets: (0..count).collect(),
            values,
            channels,
        }
    }

    pub fn support_size(&self) -> usize {
        self.offsets.len()
    }

    fn prior_values<'a>(&'a self, prior: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let c = self.channels;
        self.offsets
            .iter()
            .flat_map(move |&k| prior[k * c..(k + 1) * c].iter().copied())
    }
}

/// Mean absolute deviation `||f^i - f*^j||_1 / |support|` over the kept offsets.
pub fn patch_l1_distance(patch: &ImagePatch, prior: &[f64]) -> f64 {
    let total: f64 = patch
        .values
        .iter()
        .zip(patch.prior_values(prior))
        .map(|(a, b)| (a - b).abs())
        .sum();
    total / patch.support_size() as f64
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Low and high grey values of a patch: medians of the values below and at or
/// above the patch median. Both equal the common value of a constant patch.
pub fn two_value_levels(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let split = sorted.partition_point(|&v| v < med);
    let (low, high) = sorted.split_at(split);
    let f_high = median(high);
    let f_low = if low.is_empty() { f_high } else { median(low) };
    (f_low, f_high)
}

/// Replaces the two levels of a binary template (entries `< 0.5` are the low
/// slot) by the data levels of `patch`.
pub fn adapt_template(patch: &ImagePatch, template: &[f64]) -> Vec<f64> {
    let (low, high) = two_value_levels(&patch.values);
    template
        .iter()
        .map(|&t| if t < 0.5 { low } else { high })
        .collect()
}

/// Distance to a binary template after adapting its two levels to the patch.
pub fn two_value_adapted_distance(patch: &ImagePatch, template: &[f64]) -> f64 {
    patch_l1_distance(patch, &adapt_template(patch, template))
}

/// Dark or bright level, whichever side of the midpoint the patch median is on.
pub fn fingerprint_level(patch: &ImagePatch, f_dark: f64, f_bright: f64) -> f64 {
    let mut sorted = patch.values.clone();
    sorted.sort_by(f64::total_cmp);
    if median(&sorted) <= 0.5 * (f_dark + f_bright) {
        f_dark
    } else {
        f_bright
    }
}

/// Distance to the constant patch at the dark or bright level.
pub fn fingerprint_constant_distance(patch: &ImagePatch, f_dark: f64, f_bright: f64) -> f64 {
    let level = fingerprint_level(patch, f_dark, f_bright);
    let total: f64 = patch.values.iter().map(|v| (v - level).abs()).sum();
    total / patch.support_size() as f64
}

/// How prior patches are compared with image patches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum PatchMetric {
    #[default]
    Plain,
    /// Binary templates whose two levels adapt to each image patch.
    TwoValue,
    /// Constant prior patches snap to the dark or bright level; all other
    /// priors are compared as they are.
    Fingerprint { dark: f64, bright: f64 },
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

impl PatchMetric {
    pub fn distance(self, patch: &ImagePatch, prior: &[f64]) -> f64 {
        match self {
            PatchMetric::Plain => patch_l1_distance(patch, prior),
            PatchMetric::TwoValue => two_value_adapted_distance(patch, prior),
            PatchMetric::Fingerprint { dark, bright } if is_constant(prior) => {
                fingerprint_constant_distance(patch, dark, bright)
            }
            PatchMetric::Fingerprint { .. } => patch_l1_distance(patch, prior),
        }
    }

    /// The prior patch as it is compared with `patch` (after any adaptation).
    pub fn realize(self, patch: &ImagePatch, prior: &[f64]) -> Vec<f64> {
        match self {
            PatchMetric::Plain => prior.to_vec(),
            PatchMetric::TwoValue => adapt_template(patch, prior),
            PatchMetric::Fingerprint { dark, bright } if is_constant(prior) => {
                vec![fingerprint_level(patch, dark, bright); prior.len()]
            }
            PatchMetric::Fingerprint { .. } => prior.to_vec(),
        }
    }

    fn validate(self, channels: usize) -> Result<()> {
        match self {
            PatchMetric::Plain => Ok(()),
            _ if channels != 1 => Err(Error::InvalidParameter(
                "adapted patch distances need single-channel patches".into(),
            )),
            PatchMetric::Fingerprint { dark, bright } if !(dark < bright) => Err(
                Error::InvalidParameter(format!("need dark < bright, got {dark} >= {bright}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Minimum distance over the members of a class, with the minimizing item.
pub fn class_distance(
    patch: &ImagePatch,
    priors: &PriorSet,
    class_id: usize,
    metric: PatchMetric,
) -> Result<(f64, usize)> {
    priors
        .class_members(class_id)
        .into_iter()
        .map(|j| (metric.distance(patch, &priors.items()[j]), j))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::Empty("prior class"))
}

/// Patch distances between an image and a prior dictionary, one column per
/// label (class), together with the best-matching member for each entry.
#[derive(Debug, Clone)]
pub struct PatchDistances {
    pub distances: DistanceMatrix,
    /// Row-major `m x labels`: the prior item attaining each class distance.
    pub best_member: Vec<usize>,
    pub metric: PatchMetric,
}

/// Computes raw patch distances; missing pixels get all-zero rows.
pub fn patch_distance_matrix(
    img: &FeatureImage,
    priors: &PriorSet,
    metric: PatchMetric,
) -> Result<PatchDistances> {
    let PriorKind::Patches { radius, channels } = priors.kind() else {
        return Err(Error::InvalidParameter("patch distances need patch priors".into()));
    };
    check_len(channels, img.channels())?;
    metric.validate(channels)?;
    let labels = priors.label_count();
    let m = img.pixel_count();
    let mut data = Vec::with_capacity(m * labels);
    let mut best = Vec::with_capacity(m * labels);
    for i in 0..m {
        if img.is_missing(i) {
            data.extend(std::iter::repeat_n(0.0, labels));
            best.extend((0..labels).map(|c| priors.class_members(c)[0]));
            continue;
        }
        let patch = ImagePatch::extract(img, i, radius);
        for c in 0..labels {
            let (d, j) = class_distance(&patch, priors, c, metric)?;
            data.push(d);
            best.push(j);
        }
    }
    Ok(PatchDistances {
        distances: DistanceMatrix::new(m, labels, data)?,
        best_member: best,
        metric,
    })
}

/// `steps^3` colors on the uniform grid of `[0, 1]^3`, red varying slowest.
pub fn color_cube_priors(steps: usize) -> Result<PriorSet> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 steps, got {steps}")));
    }
    let level = |k: usize| k as f64 / (steps - 1) as f64;
    let mut items = Vec::with_capacity(steps.pow(3));
    for r in 0..steps {
        for g in 0..steps {
            for b in 0..steps {
                items.push(vec![level(r), level(g), level(b)]);
            }
        }
    }
    PriorSet::vectors(items)
}

/// Smooth background of a single-channel image: medians over a coarse
/// `cells x cells` partition, bilinearly interpolated between cell centers.
pub fn coarse_median_background(img: &FeatureImage, cells: usize) -> Result<Vec<f64>> {
    if img.channels() != 1 {
        return Err(Error::InvalidParameter("background needs a single channel".into()));
    }
    if cells == 0 {
        return Err(Error::InvalidParameter("need at least one cell".into()));
    }
    let (h, w) = (img.height(), img.width());
    let cy = cells.min(h);
    let cx = cells.min(w);
    let bounds = |len: usize, parts: usize, k: usize| (k * len / parts, (k + 1) * len / parts);
    let mut medians = vec![0.0; cy * cx];
    for by in 0..cy {
        let (r0, r1) = bounds(h, cy, by);
        for bx in 0..cx {
            let (c0, c1) = bounds(w, cx, bx);
            let mut vals: Vec<f64> = (r0..r1)
                .flat_map(|r| (c0..c1).map(move |c| (r, c)))
                .map(|(r, c)| img.pixel(r * w + c)[0])
                .collect();
            vals.sort_by(f64::total_cmp);
            medians[by * cx + bx] = median(&vals);
        }
    }
    // cell center in pixel units, then fractional cell coordinate
    let coord = |pos: usize, len: usize, parts: usize| {
        let t = (pos as f64 + 0.5) * parts as f64 / len as f64 - 0.5;
        let t = t.clamp(0.0, (parts - 1) as f64);
        let k0 = t.floor() as usize;
        let k1 = (k0 + 1).min(parts - 1);
        (k0, k1, t - k0 as f64)
    };
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        let (y0, y1, fy) = coord(r, h, cy);
        for c in 0..w {
            let (x0, x1, fx) = coord(c, w, cx);
            let top = medians[y0 * cx + x0] * (1.0 - fx) + medians[y0 * cx + x1] * fx;
            let bottom = medians[y1 * cx + x0] * (1.0 - fx) + medians[y1 * cx + x1] * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Ok(out)
}

/// Reads vector priors from CSV text, one comma-separated vector per line.
///
/// Blank lines and lines starting with `#` are skipped.
pub fn priors_from_csv(text: &str) -> Result<PriorSet> {
    let mut items = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: {:?}: {e}", lineno + 1, tok.trim()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        items.push(row);
    }
    PriorSet::vectors(items)
}

pub fn priors_to_csv(priors: &PriorSet) -> String {
    let mut out = String::new();
    for item in priors.items() {
        let row: Vec<String> = item.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// JSON form of a patch dictionary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchDictionary {
    /// Odd side length of every patch.
    pub patch_size: usize,
    #[serde(default = "one")]
    pub channels: usize,
    pub patches: Vec<DictionaryPatch>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryPatch {
    /// Row-major over offsets `(dy, dx)` from `(-r, -r)` to `(r, r)`,
    /// `channels` values per offset.
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<usize>,
}

impl PatchDictionary {
    pub fn into_priors(self) -> Result<PriorSet> {
        if self.patch_size % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "patch size must be odd, got {}",
                self.patch_size
            )));
        }
        let classes: Vec<Option<usize>> = self.patches.iter().map(|p| p.class).collect();
        let items = self.patches.into_iter().map(|p| p.values).collect();
        let set = PriorSet::patches(self.patch_size / 2, self.channels, items)?;
        if classes.iter().all(Option::is_none) {
            return Ok(set);
        }
        let class_of = classes
            .into_iter()
            .map(|c| c.ok_or_else(|| Error::Parse("either all patches or none carry a class".into())))
            .collect::<Result<Vec<_>>>()?;
        set.with_classes(class_of)
    }

    pub fn from_priors(priors: &PriorSet) -> Result<Self> {
        let PriorKind::Patches { radius, channels } = priors.kind() else {
            return Err(Error::InvalidParameter("not a patch prior set".into()));
        };
        Ok(Self {
            patch_size: 2 * radius + 1,
            channels,
            patches: priors
                .items()
                .iter()
                .enumerate()
                .map(|(j, v)| DictionaryPatch {
                    values: v.clone(),
                    class: priors.class_of().map(|c| c[j]),
                })
                .collect(),
        })
    }
}

pub fn priors_from_json(text: &str) -> Result<PriorSet> {
    let dict: PatchDictionary =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    dict.into_priors()
}

pub fn priors_to_json(priors: &PriorSet) -> Result<String> {
    let dict = PatchDictionary::from_priors(priors)?;
    serde_json::to_string_pretty(&dict).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_image(h: usize, w: usize, vals: &[f64]) -> FeatureImage {
        FeatureImage::new(h, w, 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn scaled_l1_examples() {
        assert_eq!(scaled_l1_distance(&[0.3, 0.2], &[0.3, 0.2]).unwrap(), 0.0);
        let d = scaled_l1_distance(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(d, 2.0 / 3.0, epsilon = 1e-15);
        let a = [0.1, 0.9, 0.4];
        let b = [0.5, 0.2, 0.3];
        assert_eq!(scaled_l1_distance(&a, &b).unwrap(), scaled_l1_distance(&b, &a).unwrap());
        assert!(scaled_l1_distance(&a, &[0.0]).is_err());
        assert_eq!(VectorMetric::L1.distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn distance_matrix_examples() {
        let priors = PriorSet::vectors(vec![vec![0.0], vec![1.0]]).unwrap();
        let img = scalar_image(1, 3, &[0.0, 0.25, 1.0])
            .with_mask(vec![false, true, false])
            .unwrap();
        let d = build_distance_matrix(&img, &priors, VectorMetric::ScaledL1, 1.0).unwrap();
        assert_eq!(d.row(0), &[0.0, 1.0]);
        assert_eq!(d.row(1), &[0.0, 0.0]);
        assert_eq!(d.row(2), &[1.0, 0.0]);
        let half = build_distance_matrix(&img, &priors, VectorMetric::ScaledL1, 2.0).unwrap();
        for (a, b) in half.as_slice().iter().zip(d.as_slice()) {
            assert_eq!(*a, b / 2.0);
        }
        let one = PriorSet::vectors(vec![vec![0.4]]).unwrap();
        let single = build_distance_matrix(&scalar_image(1, 1, &[0.4]), &one, VectorMetric::ScaledL1, 1.0)
            .unwrap();
        assert_eq!(single.as_slice(), &[0.0]);
        assert!(build_distance_matrix(&img, &priors, VectorMetric::ScaledL1, 0.0).is_err());
    }

    #[test]
    fn patch_l1_examples() {
        let p = ImagePatch::full(vec![0.1, 0.2, 0.3, 0.4], 1);
        assert_eq!(patch_l1_distance(&p, &[0.1, 0.2, 0.3, 0.4]), 0.0);
        let q = ImagePatch::full(vec![1.0; 4], 1);
        assert_eq!(patch_l1_distance(&q, &[0.0; 4]), 1.0);

        // corner of a 3x3 image with a radius-1 patch keeps 4 offsets
        let img = scalar_image(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let corner = ImagePatch::extract(&img, 0, 1);
        assert_eq!(corner.offsets, vec![4, 5, 7, 8]);
        let prior = [9.0, 9.0, 9.0, 9.0, 0.0, 0.0, 9.0, 0.0, 0.0];
        assert_eq!(patch_l1_distance(&corner, &prior), 1.0);
    }

    #[test]
    fn two_value_levels_examples() {
        assert_eq!(two_value_levels(&[0.0, 0.0, 1.0, 1.0]), (0.0, 1.0));
        assert_eq!(two_value_levels(&[0.7; 5]), (0.7, 0.7));
        let (lo, hi) = two_value_levels(&[0.1, 0.2, 0.9, 0.8, 0.85]);
        assert_abs_diff_eq!(lo, 0.15, epsilon = 1e-15);
        assert_eq!(hi, 0.85);
    }

    #[test]
    fn two_value_distance_examples() {
        let template = [0.0, 0.0, 1.0, 1.0];
        let p = ImagePatch::full(vec![0.2, 0.2, 0.6, 0.6], 1);
        assert_eq!(two_value_adapted_distance(&p, &template), 0.0);
        let flat = ImagePatch::full(vec![0.4; 4], 1);
        assert_eq!(two_value_adapted_distance(&flat, &template), 0.0);
        let swapped = ImagePatch::full(vec![0.6, 0.6, 0.2, 0.2], 1);
        assert_abs_diff_eq!(two_value_adapted_distance(&swapped, &template), 0.4, epsilon = 1e-15);
    }

    #[test]
    fn fingerprint_examples() {
        let dark = ImagePatch::full(vec![0.2; 9], 1);
        assert_eq!(fingerprint_constant_distance(&dark, 0.2, 0.8), 0.0);
        let above = ImagePatch::full(vec![0.51; 9], 1);
        assert_abs_diff_eq!(fingerprint_constant_distance(&above, 0.2, 0.8), 0.29, epsilon = 1e-12);
        let bright = ImagePatch::full(vec![0.8; 9], 1);
        assert_eq!(fingerprint_constant_distance(&bright, -5.0, 0.8), 0.0);

        let metric = PatchMetric::Fingerprint { dark: 0.2, bright: 0.8 };
        assert_eq!(metric.distance(&dark, &[0.5; 9]), 0.0);
        assert_eq!(metric.realize(&bright, &[0.5; 9]), vec![0.8; 9]);
        let edge = [0.8, 0.8, 0.8, 0.8, 0.8, 0.8, 0.2, 0.2, 0.2];
        assert_abs_diff_eq!(metric.distance(&bright, &edge), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn class_distance_examples() {
        let a = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let b = vec![1.0; 9];
        let c = vec![0.5; 9];
        let priors = PriorSet::patches(1, 1, vec![a.clone(), b.clone(), c.clone()])
            .unwrap()
            .with_classes(vec![0, 0, 1])
            .unwrap();
        let patch = ImagePatch::full(b.clone(), 1);
        let (d, j) = class_distance(&patch, &priors, 0, PatchMetric::Plain).unwrap();
        assert_eq!((d, j), (0.0, 1));
        let (d1, _) = class_distance(&patch, &priors, 1, PatchMetric::Plain).unwrap();
        assert_eq!(d1, patch_l1_distance(&patch, &c));
        for member in [&a, &b] {
            assert!(d <= patch_l1_distance(&patch, member));
        }
        assert!(class_distance(&patch, &priors, 2, PatchMetric::Plain).is_err());
        assert!(PriorSet::patches(1, 1, vec![a, b]).unwrap().with_classes(vec![0, 2]).is_err());
    }

    #[test]
    fn color_cube() {
        assert_eq!(color_cube_priors(2).unwrap().len(), 8);
        let cube = color_cube_priors(6).unwrap();
        assert_eq!(cube.len(), 216);
        let levels = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        for item in cube.items() {
            assert!(item.iter().all(|v| levels.iter().any(|l| (v - l).abs() < 1e-15)));
            assert!(item.iter().any(|&v| (v - 0.5).abs() > 1e-9));
        }
        assert!(color_cube_priors(1).is_err());
    }

    #[test]
    fn csv_and_json_round_trip() {
        let text = "# colors\n0,0.5,1\n\n0.25, 0.75 ,0\n";
        let priors = priors_from_csv(text).unwrap();
        assert_eq!(priors.items(), &[vec![0.0, 0.5, 1.0], vec![0.25, 0.75, 0.0]]);
        assert_eq!(priors_from_csv(&priors_to_csv(&priors)).unwrap(), priors);
        assert!(matches!(priors_from_csv("0,x\n"), Err(Error::Parse(_))));
        assert!(priors_from_csv("0,1\n0\n").is_err());

        let patches = PriorSet::patches(1, 1, vec![vec![0.0; 9], vec![1.0; 9]])
            .unwrap()
            .with_classes(vec![0, 1])
            .unwrap();
        let json = priors_to_json(&patches).unwrap();
        assert_eq!(priors_from_json(&json).unwrap(), patches);
        assert!(priors_from_json(r#"{"patch_size": 2, "patches": [{"values": [0,0,0,0]}]}"#).is_err());
        assert!(priors_from_json(r#"{"patch_size": 3, "patches": [{"values": [0,0,0,0]}]}"#).is_err());
    }

    #[test]
    fn background_of_constant_image_is_constant() {
        let img = scalar_image(8, 8, &[0.3; 64]);
        let bg = coarse_median_background(&img, 4).unwrap();
        assert!(bg.iter().all(|&v| (v - 0.3).abs() < 1e-15));
        let ramp: Vec<f64> = (0..64).map(|k| (k % 8) as f64 / 7.0).collect();
        let bg = coarse_median_background(&scalar_image(8, 8, &ramp), 4).unwrap();
        for r in 0..8 {
            for c in 1..8 {
                assert!(bg[r * 8 + c] >= bg[r * 8 + c - 1]);
            }
        }
    }
}
