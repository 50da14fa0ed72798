//! Selecting non-intersecting rectangles from a point pattern.
//!
//! Candidate rectangles sit at the nodes of a square lattice, one per
//! orientation. Each location carries one label per orientation plus a "none"
//! label. Unary costs are the negated point coverage of each candidate; a
//! penalty proportional to the assignment mass of intersecting candidates at
//! the eight neighboring locations makes the distance depend on the assignment.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::flow::{AssignmentMatrix, DistanceMatrix, DistanceSource};

/// An oriented rectangle given by center, half extents and angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub cx: f64,
    pub cy: f64,
    pub half_length: f64,
    pub half_width: f64,
    /// Angle of the long axis, radians.
    pub angle: f64,
}

impl Rect {
    fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.angle.sin_cos();
        [(c, s), (-s, c)]
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        let [(ux, uy), (vx, vy)] = self.axes();
        let (a, b) = (self.half_length, self.half_width);
        [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
            .map(|(su, sv)| (self.cx + su * a * ux + sv * b * vx, self.cy + su * a * uy + sv * b * vy))
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_length * self.half_width
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let [(ux, uy), (vx, vy)] = self.axes();
        let (dx, dy) = (x - self.cx, y - self.cy);
        (dx * ux + dy * uy).abs() <= self.half_length && (dx * vx + dy * vy).abs() <= self.half_width
    }

    /// Separating-axis test; touching boundaries do not count.
    pub fn intersects(&self, other: &Rect) -> bool {
        let (ca, cb) = (self.corners(), other.corners());
        self.axes().into_iter().chain(other.axes()).all(|(ax, ay)| {
            let proj = |pts: &[(f64, f64); 4]| {
                pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, y)| {
                    let d = x * ax + y * ay;
                    (lo.min(d), hi.max(d))
                })
            };
            let (a0, a1) = proj(&ca);
            let (b0, b1) = proj(&cb);
            a0 < b1 - 1e-12 && b0 < a1 - 1e-12
        })
    }

    /// Uniform point inside the rectangle.
    fn sample(&self, rng: &mut impl Rng) -> (f64, f64) {
        let [(ux, uy), (vx, vy)] = self.axes();
        let s = rng.gen_range(-self.half_length..=self.half_length);
        let t = rng.gen_range(-self.half_width..=self.half_width);
        (self.cx + s * ux + t * vx, self.cy + s * uy + t * vy)
    }
}

/// Geometry and sampling parameters of a generated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleParams {
    pub grid_height: usize,
    pub grid_width: usize,
    pub orientations: usize,
    pub half_length: f64,
    pub half_width: f64,
    pub foreground_count: usize,
    pub background_count: usize,
    /// Points per unit area sampled inside each foreground rectangle.
    pub foreground_density: f64,
    /// Points per unit area sampled inside each background rectangle.
    pub background_density: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub rho: f64,
}

impl Default for RectangleParams {
    fn default() -> Self {
        Self {
            grid_height: 12,
            grid_width: 12,
            orientations: 18,
            half_length: 0.6,
            half_width: 0.15,
            foreground_count: 20,
            background_count: 30,
            foreground_density: 40.0,
            background_density: 25.0,
            lambda: 10.0,
            sigma: 0.1,
            rho: 0.1,
        }
    }
}

/// Candidate `(location, orientation)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub location: usize,
    pub orientation: usize,
}

/// Intersection pattern between the candidates of two neighboring locations.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborBlock {
    pub neighbor: usize,
    /// Row-major `K x K`: entry `(k, l)` is set when candidate `k` here
    /// intersects candidate `l` at `neighbor`.
    pub hits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectangleScenario {
    pub params: RectangleParams,
    /// Coverage fractions, row-major `locations x orientations`.
    pub coverage: Vec<f64>,
    pub neighbors: Vec<Vec<NeighborBlock>>,
    pub foreground: Vec<Candidate>,
    pub background: Vec<Candidate>,
    pub points: Vec<(f64, f64)>,
}

impl RectangleScenario {
    pub fn location_count(&self) -> usize {
        self.params.grid_height * self.params.grid_width
    }

    pub fn orientations(&self) -> usize {
        self.params.orientations
    }

    /// The rectangle of a candidate, on a lattice of unit spacing.
    pub fn rect(&self, c: Candidate) -> Rect {
        candidate_rect(&self.params, c)
    }

    /// Intersection indicator `(R_ij)_{kl}`; `false` for non-neighbors.
    pub fn intersect(&self, i: usize, k: usize, j: usize, l: usize) -> bool {
        let kk = self.orientations();
        self.neighbors[i]
            .iter()
            .find(|b| b.neighbor == j)
            .is_some_and(|b| b.hits[k * kk + l])
    }

    /// Distances without the `1/rho` factor.
    pub fn raw_distance_matrix(&self, w: &AssignmentMatrix) -> Result<DistanceMatrix> {
        let kk = self.orientations();
        check_len(self.location_count(), w.rows())?;
        check_len(kk + 1, w.cols())?;
        let lambda = self.params.lambda;
        let mut data = Vec::with_capacity(w.rows() * (kk + 1));
        for (i, blocks) in self.neighbors.iter().enumerate() {
            let mut penalty = vec![0.0; kk];
            for block in blocks {
                let wj = w.row(block.neighbor);
                for (k, pk) in penalty.iter_mut().enumerate() {
                    let hits = &block.hits[k * kk..(k + 1) * kk];
                    *pk += hits
                        .iter()
                        .zip(wj)
                        .filter(|(h, _)| **h)
                        .map(|(_, x)| x)
                        .sum::<f64>();
                }
            }
            let scale = if blocks.is_empty() { 0.0 } else { lambda / blocks.len() as f64 };
            let cov = &self.coverage[i * kk..(i + 1) * kk];
            data.extend(cov.iter().zip(&penalty).map(|(p, pen)| -p + scale * pen));
            data.push(self.params.sigma);
        }
        DistanceMatrix::new(w.rows(), kk + 1, data)
    }

    /// Pairs of neighboring locations whose selected (non-none) labels
    /// intersect. Each unordered pair is reported once.
    pub fn intersecting_pairs(&self, labels: &[usize]) -> Vec<(Candidate, Candidate)> {
        let kk = self.orientations();
        let mut out = Vec::new();
        for (i, blocks) in self.neighbors.iter().enumerate() {
            let k = labels[i];
            if k >= kk {
                continue;
            }
            for b in blocks.iter().filter(|b| b.neighbor > i) {
                let l = labels[b.neighbor];
                if l < kk && b.hits[k * kk + l] {
                    out.push((
                        Candidate { location: i, orientation: k },
                        Candidate { location: b.neighbor, orientation: l },
                    ));
                }
            }
        }
        out
    }
}

/// `D_i = (1/rho) (-p_i + lambda/|N(i)| sum_j R_ij W_j ; sigma)`.
pub fn rectangle_adaptive_distance(
    scn: &RectangleScenario,
    w: &AssignmentMatrix,
) -> Result<DistanceMatrix> {
    Ok(scn.raw_distance_matrix(w)?.scaled(1.0 / scn.params.rho))
}

impl DistanceSource for RectangleScenario {
    fn label_count(&self) -> usize {
        self.orientations() + 1
    }

    fn raw_distances(&self, w: &AssignmentMatrix) -> Result<DistanceMatrix> {
        self.raw_distance_matrix(w)
    }
}

fn candidate_rect(p: &RectangleParams, c: Candidate) -> Rect {
    let row = c.location / p.grid_width;
    let col = c.location % p.grid_width;
    Rect {
        cx: col as f64,
        cy: row as f64,
        half_length: p.half_length,
        half_width: p.half_width,
        angle: std::f64::consts::PI * c.orientation as f64 / p.orientations as f64,
    }
}

fn validate(p: &RectangleParams) -> Result<()> {
    if p.grid_height == 0 || p.grid_width == 0 || p.orientations == 0 {
        return Err(Error::InvalidParameter("rectangle grid must be non-empty".into()));
    }
    let half_diag = p.half_length.hypot(p.half_width);
    if !(half_diag < 1.0) || !(p.half_width > 0.0) {
        return Err(Error::InvalidParameter(
            "rectangles must fit in a unit-radius disk so that only 8-neighbors intersect".into(),
        ));
    }
    if !(p.foreground_density > 0.0) || p.background_density < 0.0 {
        return Err(Error::InvalidParameter("sampling densities must be positive".into()));
    }
    if p.lambda < 0.0 || !(p.sigma > 0.0) || !(p.rho > 0.0) {
        return Err(Error::InvalidParameter("need lambda >= 0, sigma > 0, rho > 0".into()));
    }
    Ok(())
}

/// Samples a scenario: non-intersecting foreground rectangles, freely
/// overlapping background rectangles, uniform points inside both, and the
/// resulting coverage fractions and 8-neighbor intersection matrices.
pub fn generate_rectangle_scenario(seed: u64, params: &RectangleParams) -> Result<RectangleScenario> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, kk) = (params.grid_height, params.grid_width, params.orientations);
    let m = h * w;

    let mut all: Vec<Candidate> = (0..m)
        .flat_map(|location| (0..kk).map(move |orientation| Candidate { location, orientation }))
        .collect();
    all.shuffle(&mut rng);

    let mut foreground: Vec<Candidate> = Vec::new();
    let mut used = vec![false; m];
    for &c in &all {
        if foreground.len() == params.foreground_count {
            break;
        }
        if used[c.location] {
            continue;
        }
        let r = candidate_rect(params, c);
        if foreground.iter().all(|f| !candidate_rect(params, *f).intersects(&r)) {
            used[c.location] = true;
            foreground.push(c);
        }
    }
    let background: Vec<Candidate> = (0..params.background_count)
        .map(|_| Candidate {
            location: rng.gen_range(0..m),
            orientation: rng.gen_range(0..kk),
        })
        .collect();

    let mut points = Vec::new();
    for (set, density) in [
        (&foreground, params.foreground_density),
        (&background, params.background_density),
    ] {
        for c in set.iter() {
            let r = candidate_rect(params, *c);
            let count = (r.area() * density).round() as usize;
            points.extend((0..count).map(|_| r.sample(&mut rng)));
        }
    }

    let expected = |r: &Rect| r.area() * params.foreground_density;
    let mut coverage = vec![0.0; m * kk];
    for location in 0..m {
        for orientation in 0..kk {
            let r = candidate_rect(params, Candidate { location, orientation });
            let inside = points.iter().filter(|(x, y)| r.contains(*x, *y)).count();
            coverage[location * kk + orientation] = (inside as f64 / expected(&r)).min(1.0);
        }
    }

    let mut neighbors = vec![Vec::new(); m];
    for (i, blocks) in neighbors.iter_mut().enumerate() {
        let (row, col) = (i / w, i % w);
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dy == 0 && dx == 0 {
                    continue;
                }
                let (Some(r2), Some(c2)) = (row.checked_add_signed(dy), col.checked_add_signed(dx))
                else {
                    continue;
                };
                if r2 >= h || c2 >= w {
                    continue;
                }
                let j = r2 * w + c2;
                let mut hits = vec![false; kk * kk];
                for k in 0..kk {
                    let a = candidate_rect(params, Candidate { location: i, orientation: k });
                    for l in 0..kk {
                        let b = candidate_rect(params, Candidate { location: j, orientation: l });
                        hits[k * kk + l] = a.intersects(&b);
                    }
                }
                blocks.push(NeighborBlock { neighbor: j, hits });
            }
        }
    }

    Ok(RectangleScenario {
        params: params.clone(),
        coverage,
        neighbors,
        foreground,
        background,
        points,
    })
}
