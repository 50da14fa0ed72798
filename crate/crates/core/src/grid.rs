//! Pixel grids, square averaging windows and Gaussian patch supports.

use crate::error::{Error, Result};

/// A `height x width` pixel grid with square windows of radius `window_radius`.
///
/// Nodes are numbered row-major. Windows are clipped at the image border.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGraph {
    height: usize,
    width: usize,
    window_radius: usize,
}

impl GridGraph {
    pub fn new(height: usize, width: usize, window_radius: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidParameter("grid must have at least one pixel".into()));
        }
        Ok(Self {
            height,
            width,
            window_radius,
        })
    }

    /// Builds a grid from an odd window side length (`3` for a 3x3 window).
    pub fn with_window_side(height: usize, width: usize, side: usize) -> Result<Self> {
        Self::new(height, width, side_to_radius(side)?)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    pub fn node_count(&self) -> usize {
        self.height * self.width
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i / self.width, i % self.width)
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    /// Node at `(row + dy, col + dx)`, if inside the grid.
    pub fn offset(&self, i: usize, dy: isize, dx: isize) -> Option<usize> {
        let (r, c) = self.coords(i);
        let r = r.checked_add_signed(dy)?;
        let c = c.checked_add_signed(dx)?;
        (r < self.height && c < self.width).then(|| self.index(r, c))
    }

    /// The window around `i`, including `i`, in row-major order.
    pub fn neighborhood(&self, i: usize) -> Result<Vec<usize>> {
        let len = self.node_count();
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        let mut out = Vec::new();
        self.for_each_neighbor(i, |j| out.push(j));
        Ok(out)
    }

    /// Visits the clipped window around `i` in row-major order.
    pub(crate) fn for_each_neighbor(&self, i: usize, mut f: impl FnMut(usize)) {
        let (r, c) = self.coords(i);
        let rad = self.window_radius;
        let r0 = r.saturating_sub(rad);
        let r1 = (r + rad).min(self.height - 1);
        let c0 = c.saturating_sub(rad);
        let c1 = (c + rad).min(self.width - 1);
        for rr in r0..=r1 {
            for cc in c0..=c1 {
                f(self.index(rr, cc));
            }
        }
    }

    pub(crate) fn neighborhood_size(&self, i: usize) -> usize {
        let (r, c) = self.coords(i);
        let rad = self.window_radius;
        let rows = (r + rad).min(self.height - 1) - r.saturating_sub(rad) + 1;
        let cols = (c + rad).min(self.width - 1) - c.saturating_sub(rad) + 1;
        rows * cols
    }
}

/// Converts an odd window side length to a radius.
pub fn side_to_radius(side: usize) -> Result<usize> {
    if side % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "window side length must be odd, got {side}"
        )));
    }
    Ok(side / 2)
}

/// Offsets `(dy, dx)` of a square patch in row-major order.
pub fn patch_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dy, dx))).collect()
}

/// Gaussian weights over the offsets of a square patch.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSupport {
    radius: usize,
    weights: Vec<f64>,
}

impl PatchSupport {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Weights in row-major offset order, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn offsets(&self) -> Vec<(isize, isize)> {
        patch_offsets(self.radius)
    }

    /// Weight of offset `(dy, dx)`; zero outside the patch.
    pub fn weight(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius as isize;
        if dy.abs() > r || dx.abs() > r {
            return 0.0;
        }
        let side = self.side() as isize;
        self.weights[((dy + r) * side + dx + r) as usize]
    }

    /// Drops offsets that leave the grid around node `i` and renormalizes.
    ///
    /// Returns `(offset index, weight)` pairs in row-major order.
    pub fn boundary_renormalize(&self, i: usize, grid: &GridGraph) -> Vec<(usize, f64)> {
        let kept: Vec<(usize, f64)> = self
            .offsets()
            .into_iter()
            .enumerate()
            .filter(|(_, (dy, dx))| grid.offset(i, *dy, *dx).is_some())
            .map(|(k, _)| (k, self.weights[k]))
            .collect();
        let total: f64 = kept.iter().map(|(_, w)| w).sum();
        kept.into_iter().map(|(k, w)| (k, w / total)).collect()
    }
}

/// Discrete Gaussian over a `(2r+1)^2` patch, `sigma = (r + 0.5) / 2`.
pub fn gaussian_patch_weights(patch_radius: usize) -> PatchSupport {
    let sigma = (patch_radius as f64 + 0.5) / 2.0;
    let raw: Vec<f64> = patch_offsets(patch_radius)
        .into_iter()
        .map(|(dy, dx)| {
            let d2 = (dy * dy + dx * dx) as f64;
            (-d2 / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    PatchSupport {
        radius: patch_radius,
        weights: raw.into_iter().map(|w| w / total).collect(),
    }
}
