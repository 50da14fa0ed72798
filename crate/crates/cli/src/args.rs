//! Command-line arguments shared by the subcommands.

use std::path::PathBuf;

use anyhow::Result;
use assignflow::features::{PatchMetric, VectorMetric};
use assignflow::rectangles::RectangleParams;
use assignflow::{FlowConfig, GridGraph, MeanMode};
use clap::{Args, ValueEnum};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanArg {
    Approx,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    /// `||f - f*||_1 / d`
    ScaledL1,
    /// `||f - f*||_1`
    L1,
}

impl From<MetricArg> for VectorMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::ScaledL1 => VectorMetric::ScaledL1,
            MetricArg::L1 => VectorMetric::L1,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowArgs {
    /// Selectivity: distances are divided by rho.
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    /// Odd side length of the averaging window; 1 disables averaging.
    #[arg(long, default_value_t = 3)]
    pub window: usize,
    /// Stop once the average row entropy is at most this value.
    #[arg(long, default_value_t = 1e-3)]
    pub entropy_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Spatial mean used for the similarity matrix.
    #[arg(long, value_enum, default_value_t = MeanArg::Approx)]
    pub mean: MeanArg,
}

impl FlowArgs {
    pub fn config(&self) -> FlowConfig {
        FlowConfig {
            rho: self.rho,
            entropy_tol: self.entropy_tol,
            max_iterations: self.max_iter,
            mean_mode: match self.mean {
                MeanArg::Approx => MeanMode::Approx,
                MeanArg::Exact => MeanMode::Exact,
            },
            ..FlowConfig::default()
        }
    }

    pub fn grid(&self, height: usize, width: usize) -> Result<GridGraph> {
        Ok(GridGraph::with_window_side(height, width, self.window)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelPreset {
    /// Noisy piecewise-constant image over colors encoded as simplex vertices.
    VertexColors,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LabelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
    /// Input image (binary PPM or PGM).
    #[arg(long, requires = "priors", required_unless_present = "preset")]
    pub image: Option<PathBuf>,
    /// Prior vectors, one comma-separated row per label, values in [0, 1].
    #[arg(long)]
    pub priors: Option<PathBuf>,
    /// Generate the input instead of reading it.
    #[arg(long, value_enum, conflicts_with_all = ["image", "priors"])]
    pub preset: Option<LabelPreset>,
    /// Feature distance; defaults to l1 for the preset and scaled-l1 otherwise.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Preset image side length.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Preset label count.
    #[arg(long, default_value_t = 31)]
    pub labels: usize,
    /// Preset fraction of pixels replaced by random labels.
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InpaintPreset {
    /// Three color wedges meeting at the center, with a masked disk.
    TriplePoint,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InpaintArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
    #[arg(long, requires_all = ["priors", "mask"], required_unless_present = "preset")]
    pub image: Option<PathBuf>,
    /// PGM of the same size as the image; 0 marks missing pixels.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub priors: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with_all = ["image", "priors", "mask"])]
    pub preset: Option<InpaintPreset>,
    #[arg(long, value_enum, default_value_t = MetricArg::ScaledL1)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 33)]
    pub size: usize,
    /// Preset radius of the masked disk, in pixels.
    #[arg(long, default_value_t = 6.0)]
    pub hole_radius: f64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfAssignPreset {
    /// Uniform RGB noise.
    Noise,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelfAssignArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
    /// Input image (binary PPM).
    #[arg(long, required_unless_present = "preset")]
    pub image: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "image")]
    pub preset: Option<SelfAssignPreset>,
    /// Grid levels per axis of the RGB cube.
    #[arg(long, default_value_t = 6)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::ScaledL1)]
    pub metric: MetricArg,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatchPreset {
    /// Staggered roof tiles with a dictionary of template translations.
    Roof,
    /// Concentric ridges with a 13-class oriented-edge dictionary.
    Fingerprint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdaptArg {
    None,
    /// Fit the two levels of binary templates to each image patch.
    TwoValue,
    /// Flatten the image and snap constant priors to a dark or bright level.
    Fingerprint,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PatchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
    /// Input image (binary PGM).
    #[arg(long, requires = "dictionary", required_unless_present = "preset")]
    pub image: Option<PathBuf>,
    /// Patch dictionary JSON.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with_all = ["image", "dictionary"])]
    pub preset: Option<PatchPreset>,
    /// Distance adaptation; defaults to the preset's own, or none.
    #[arg(long, value_enum)]
    pub adapt: Option<AdaptArg>,
    /// Odd patch side length; presets default to 7, dictionaries define it.
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cells per axis of the coarse median grid removed before fingerprint
    /// matching.
    #[arg(long, default_value_t = 4)]
    pub background_cells: usize,
    /// Dark level; defaults to the lower quartile of the flattened image.
    #[arg(long)]
    pub dark: Option<f64>,
    /// Bright level; defaults to the upper quartile of the flattened image.
    #[arg(long)]
    pub bright: Option<f64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl AdaptArg {
    pub fn metric(self, dark: f64, bright: f64) -> PatchMetric {
        match self {
            AdaptArg::None => PatchMetric::Plain,
            AdaptArg::TwoValue => PatchMetric::TwoValue,
            AdaptArg::Fingerprint => PatchMetric::Fingerprint { dark, bright },
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RectangleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight of the intersection penalty.
    #[arg(long, default_value_t = RectangleParams::default().lambda)]
    pub lambda: f64,
    /// Cost of the "no rectangle" label.
    #[arg(long, default_value_t = RectangleParams::default().sigma)]
    pub sigma: f64,
    #[arg(long, default_value_t = RectangleParams::default().rho)]
    pub rho: f64,
    #[arg(long, default_value_t = RectangleParams::default().grid_height)]
    pub grid_height: usize,
    #[arg(long, default_value_t = RectangleParams::default().grid_width)]
    pub grid_width: usize,
    #[arg(long, default_value_t = RectangleParams::default().orientations)]
    pub orientations: usize,
    #[arg(long, default_value_t = RectangleParams::default().half_length)]
    pub half_length: f64,
    #[arg(long, default_value_t = RectangleParams::default().half_width)]
    pub half_width: f64,
    #[arg(long, default_value_t = RectangleParams::default().foreground_count)]
    pub foreground: usize,
    #[arg(long, default_value_t = RectangleParams::default().background_count)]
    pub background: usize,
    #[arg(long, default_value_t = RectangleParams::default().foreground_density)]
    pub foreground_density: f64,
    #[arg(long, default_value_t = RectangleParams::default().background_density)]
    pub background_density: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub entropy_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

impl RectangleArgs {
    pub fn params(&self) -> RectangleParams {
        RectangleParams {
            grid_height: self.grid_height,
            grid_width: self.grid_width,
            orientations: self.orientations,
            half_length: self.half_length,
            half_width: self.half_width,
            foreground_count: self.foreground,
            background_count: self.background,
            foreground_density: self.foreground_density,
            background_density: self.background_density,
            lambda: self.lambda,
            sigma: self.sigma,
            rho: self.rho,
        }
    }
}
