//! Commands on vector-valued features: `label`, `inpaint`, `selfassign`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use assignflow::features::{
    build_distance_matrix, color_cube_priors, priors_from_csv, FeatureImage, PriorKind, PriorSet,
    VectorMetric,
};
use assignflow::mapping::vector_assignment;
use assignflow::presets::{noisy_vertex_instance, triple_point, uniform_noise};
use assignflow::{labels, run_flow, FixedDistances, FlowResult};

use crate::args::{FlowArgs, InpaintArgs, LabelArgs, MetricArg, SelfAssignArgs};
use crate::output::{accuracy, label_map, OutDir, RunManifest, Summary};
use crate::pnm::Pnm;

/// A vector labeling problem as read or generated.
struct Problem {
    features: FeatureImage,
    priors: PriorSet,
    /// RGB or grey rendering of each prior; the priors themselves when absent.
    palette: Option<Vec<Vec<f64>>>,
    truth: Option<Vec<usize>>,
    inputs: Vec<String>,
    /// Rendering of the input written next to the results.
    preview: Option<Pnm>,
}

fn read_image(path: &Path) -> Result<FeatureImage> {
    let img = Pnm::read(path)?;
    Ok(FeatureImage::new(img.height, img.width, img.channels, img.to_unit())?)
}

fn read_priors(path: &Path) -> Result<PriorSet> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    priors_from_csv(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_mask(path: &Path, img: &FeatureImage) -> Result<Vec<bool>> {
    let mask = Pnm::read(path)?;
    if mask.channels != 1 {
        bail!("mask {} must be a PGM", path.display());
    }
    if (mask.height, mask.width) != (img.height(), img.width()) {
        bail!(
            "mask is {}x{} but the image is {}x{}",
            mask.height,
            mask.width,
            img.height(),
            img.width()
        );
    }
    Ok(mask.data.iter().map(|&b| b == 0).collect())
}

/// `n` well-separated display colors around the hue circle.
pub fn palette(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let hue = 6.0 * k as f64 / n as f64;
            let value = if k % 2 == 0 { 0.95 } else { 0.7 };
            let sector = hue.floor();
            let f = hue - sector;
            let (p, q, t) = (0.2 * value, value * (1.0 - 0.8 * f), value * (0.2 + 0.8 * f));
            match sector as u32 {
                0 => vec![value, t, p],
                1 => vec![q, value, p],
                2 => vec![p, value, t],
                3 => vec![p, q, value],
                4 => vec![t, p, value],
                _ => vec![value, p, q],
            }
        })
        .collect()
}

fn render(values: &[f64], img: &FeatureImage, channels: usize) -> Pnm {
    Pnm::from_unit(img.width(), img.height(), channels, values)
}

fn render_labels(labels: &[usize], palette: &[Vec<f64>], img: &FeatureImage) -> Pnm {
    let values: Vec<f64> = labels.iter().flat_map(|&l| palette[l].iter().copied()).collect();
    render(&values, img, palette[0].len())
}

/// Runs the flow and writes the common artifacts; `extra` may add more files
/// before the manifest is written.
fn solve(
    problem: Problem,
    flow: &FlowArgs,
    metric: VectorMetric,
    out_dir: &Path,
    command: &'static str,
    parameters: serde_json::Value,
    extra: impl FnOnce(&mut OutDir, &FlowResult, &PriorSet) -> Result<()>,
) -> Result<RunManifest> {
    let Problem { features, priors, palette, truth, inputs, preview } = problem;
    let PriorKind::Vectors { dim } = priors.kind() else {
        unreachable!("vector commands only build vector priors")
    };
    if dim != features.channels() {
        bail!(
            "priors have dimension {dim} but the image has {} channels",
            features.channels()
        );
    }
    let grid = flow.grid(features.height(), features.width())?;
    let distances = build_distance_matrix(&features, &priors, metric, 1.0)?;
    let result = run_flow(&FixedDistances(distances), &grid, &flow.config())?;
    let hard = labels(&result.assignment);

    let mut out = OutDir::create(out_dir)?;
    if let Some(p) = &preview {
        out.image(if p.channels == 1 { "input.pgm" } else { "input.ppm" }, p)?;
    }
    let colors = match &palette {
        Some(p) => p.clone(),
        None => priors.items().to_vec(),
    };
    let channels = colors[0].len();
    if channels == 1 || channels == 3 {
        let colors_set = PriorSet::vectors(colors.clone())?;
        let u = vector_assignment(&result.assignment, &colors_set)?;
        let name = if channels == 1 { "assigned.pgm" } else { "assigned.ppm" };
        out.image(name, &render(&u, &features, channels))?;
    }
    out.image("labels.pgm", &label_map(features.width(), features.height(), &hard, priors.len()))?;
    out.trace(&result.trace)?;
    extra(&mut out, &result, &priors)?;
    out.finish(Summary {
        command,
        parameters,
        inputs,
        result: &result,
        accuracy: truth.as_deref().map(|t| accuracy(&hard, t)),
    })
}

pub fn cmd_label(args: &LabelArgs) -> Result<RunManifest> {
    let problem = match (&args.preset, &args.image, &args.priors) {
        (Some(_), _, _) => {
            let inst = noisy_vertex_instance(args.size, args.size, args.labels, args.noise, args.seed)?;
            let colors = palette(args.labels);
            let observed: Vec<usize> = (0..inst.image.pixel_count())
                .map(|i| inst.image.pixel(i).iter().position(|&v| v == 1.0).unwrap_or(0))
                .collect();
            let preview = render_labels(&observed, &colors, &inst.image);
            Problem {
                features: inst.image,
                priors: inst.priors,
                palette: Some(colors),
                truth: Some(inst.ground_truth),
                inputs: Vec::new(),
                preview: Some(preview),
            }
        }
        (None, Some(image), Some(priors)) => Problem {
            features: read_image(image)?,
            priors: read_priors(priors)?,
            palette: None,
            truth: None,
            inputs: vec![image.display().to_string(), priors.display().to_string()],
            preview: None,
        },
        _ => bail!("either --preset or both --image and --priors are required"),
    };
    let metric = match (args.metric, args.preset) {
        (Some(m), _) => m,
        (None, Some(_)) => MetricArg::L1,
        (None, None) => MetricArg::ScaledL1,
    };
    let params = serde_json::to_value(args)?;
    solve(problem, &args.flow, metric.into(), &args.out_dir, "label", params, |_, _, _| Ok(()))
}

pub fn cmd_inpaint(args: &InpaintArgs) -> Result<RunManifest> {
    let problem = match (&args.preset, &args.image, &args.priors, &args.mask) {
        (Some(_), _, _, _) => {
            let inst = triple_point(args.size, args.hole_radius)?;
            // missing pixels shown in grey
            let grey: Vec<f64> = (0..inst.image.pixel_count())
                .flat_map(|i| {
                    let px = inst.image.pixel(i).to_vec();
                    if inst.image.is_missing(i) { vec![0.5; 3] } else { px }
                })
                .collect();
            let preview = render(&grey, &inst.image, 3);
            Problem {
                features: inst.image,
                priors: inst.priors,
                palette: None,
                truth: Some(inst.ground_truth),
                inputs: Vec::new(),
                preview: Some(preview),
            }
        }
        (None, Some(image), Some(priors), Some(mask)) => {
            let img = read_image(image)?;
            let missing = read_mask(mask, &img)?;
            Problem {
                features: img.with_mask(missing)?,
                priors: read_priors(priors)?,
                palette: None,
                truth: None,
                inputs: [image, mask, priors].iter().map(|p| p.display().to_string()).collect(),
                preview: None,
            }
        }
        _ => bail!("either --preset or all of --image, --mask and --priors are required"),
    };
    let params = serde_json::to_value(args)?;
    solve(problem, &args.flow, args.metric.into(), &args.out_dir, "inpaint", params, |_, _, _| Ok(()))
}

pub fn cmd_selfassign(args: &SelfAssignArgs) -> Result<RunManifest> {
    let (features, inputs, preview) = match (&args.preset, &args.image) {
        (Some(_), _) => {
            let img = uniform_noise(args.size, args.size, args.seed)?;
            let preview = render(img.as_slice(), &img, 3);
            (img, Vec::new(), Some(preview))
        }
        (None, Some(path)) => (read_image(path)?, vec![path.display().to_string()], None),
        (None, None) => bail!("either --preset or --image is required"),
    };
    if features.channels() != 3 {
        bail!("self-assignment needs an RGB image");
    }
    let problem = Problem {
        features,
        priors: color_cube_priors(args.steps)?,
        palette: None,
        truth: None,
        inputs,
        preview,
    };
    let params = serde_json::to_value(args)?;
    solve(problem, &args.flow, args.metric.into(), &args.out_dir, "selfassign", params, |out, result, priors| {
        out.write("histogram.csv", histogram_csv(&labels(&result.assignment), priors))
    })
}

/// Relative assignment frequency of every prior.
pub fn histogram_csv(labels: &[usize], priors: &PriorSet) -> String {
    let mut counts = vec![0usize; priors.len()];
    for &l in labels {
        counts[l] += 1;
    }
    let mut out = String::from("prior,r,g,b,frequency\n");
    for (k, (item, c)) in priors.items().iter().zip(&counts).enumerate() {
        let freq = *c as f64 / labels.len() as f64;
        let _ = writeln!(out, "{k},{},{},{},{freq}", item[0], item[1], item[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_is_distinct_and_in_range() {
        let p = palette(31);
        for (a, c) in p.iter().enumerate() {
            assert!(c.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(!p[..a].contains(c));
        }
    }

    #[test]
    fn histogram_sums_to_one() {
        let priors = color_cube_priors(2).unwrap();
        let csv = histogram_csv(&[0, 0, 7, 3], &priors);
        let total: f64 = csv
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(csv.contains("\n7,1,1,1,0.25\n"));
    }
}
