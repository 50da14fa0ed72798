//! `patch-label`: assignment of patch dictionaries.

use std::fs;

use anyhow::{bail, Context, Result};
use assignflow::features::{
    coarse_median_background, patch_distance_matrix, priors_from_json, priors_to_json,
    FeatureImage, PriorKind, PriorSet,
};
use assignflow::mapping::{decompose, patch_assignment_adapted};
use assignflow::presets::{fingerprint_dictionary, fingerprint_image, roof};
use assignflow::{gaussian_patch_weights, labels, run_flow, FixedDistances};

use crate::args::{AdaptArg, PatchArgs, PatchPreset};
use crate::output::{label_map, OutDir, RunManifest, Summary};
use crate::pnm::Pnm;

const DEFAULT_PRESET_PATCH: usize = 7;

/// Nearest-rank quantile of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

/// Removes the smooth coarse-median background, keeping the global median.
pub fn flatten(img: &FeatureImage, cells: usize) -> Result<FeatureImage> {
    let background = coarse_median_background(img, cells)?;
    let median = quantile(img.as_slice(), 0.5);
    let data = img
        .as_slice()
        .iter()
        .zip(&background)
        .map(|(f, b)| f - b + median)
        .collect();
    Ok(FeatureImage::new(img.height(), img.width(), 1, data)?)
}

fn patch_radius(side: usize) -> Result<usize> {
    if side % 2 == 0 {
        bail!("patch side length must be odd, got {side}");
    }
    Ok(side / 2)
}

fn grey(img: &FeatureImage, values: &[f64]) -> Pnm {
    Pnm::from_unit(img.width(), img.height(), 1, values)
}

pub fn cmd_patch_label(args: &PatchArgs) -> Result<RunManifest> {
    let side = args.patch.unwrap_or(DEFAULT_PRESET_PATCH);
    let mut inputs = Vec::new();
    let (image, dictionary, adapt): (FeatureImage, Option<PriorSet>, AdaptArg) =
        match (args.preset, &args.image, &args.dictionary) {
            (Some(PatchPreset::Roof), _, _) => {
                let inst = roof(args.size, patch_radius(side)?, args.seed)?;
                (inst.image, Some(inst.priors), args.adapt.unwrap_or(AdaptArg::TwoValue))
            }
            (Some(PatchPreset::Fingerprint), _, _) => (
                fingerprint_image(args.size, args.seed)?,
                None,
                args.adapt.unwrap_or(AdaptArg::Fingerprint),
            ),
            (None, Some(image), Some(dict)) => {
                let img = Pnm::read(image)?;
                if img.channels != 1 {
                    bail!("patch labeling needs a PGM image");
                }
                let text = fs::read_to_string(dict)
                    .with_context(|| format!("reading {}", dict.display()))?;
                let priors =
                    priors_from_json(&text).with_context(|| format!("parsing {}", dict.display()))?;
                inputs = vec![image.display().to_string(), dict.display().to_string()];
                let img = FeatureImage::new(img.height, img.width, 1, img.to_unit())?;
                (img, Some(priors), args.adapt.unwrap_or(AdaptArg::None))
            }
            _ => bail!("either --preset or both --image and --dictionary are required"),
        };

    let mut out = OutDir::create(&args.out_dir)?;
    if args.preset.is_some() {
        out.image("input.pgm", &grey(&image, image.as_slice()))?;
    }
    let (image, dark, bright) = if adapt == AdaptArg::Fingerprint {
        let flat = flatten(&image, args.background_cells)?;
        let dark = args.dark.unwrap_or_else(|| quantile(flat.as_slice(), 0.25));
        let bright = args.bright.unwrap_or_else(|| quantile(flat.as_slice(), 0.75));
        out.image("flattened.pgm", &grey(&flat, flat.as_slice()))?;
        (flat, dark, bright)
    } else {
        (image, 0.0, 1.0)
    };
    let priors = match dictionary {
        Some(p) => p,
        None => fingerprint_dictionary(patch_radius(side)?, dark, bright)?,
    };
    let PriorKind::Patches { radius, channels } = priors.kind() else {
        bail!("the dictionary does not hold patches");
    };
    if channels != 1 {
        bail!("patch labeling supports single-channel dictionaries only");
    }
    if args.patch.is_some_and(|s| s != 2 * radius + 1) {
        bail!(
            "--patch {} does not match the dictionary patch size {}",
            side,
            2 * radius + 1
        );
    }
    if args.preset.is_some() {
        out.write("dictionary.json", priors_to_json(&priors)? + "\n")?;
    }

    let pd = patch_distance_matrix(&image, &priors, adapt.metric(dark, bright))?;
    let grid = args.flow.grid(image.height(), image.width())?;
    let result = run_flow(&FixedDistances(pd.distances.clone()), &grid, &args.flow.config())?;
    let support = gaussian_patch_weights(radius);
    let u = patch_assignment_adapted(&result.assignment, &image, &priors, &pd, &support)?;
    let v = decompose(&image, &u)?;
    let hard = labels(&result.assignment);

    out.image("assigned.pgm", &grey(&image, &u))?;
    let shifted: Vec<f64> = v.iter().map(|x| x + 0.5).collect();
    out.image("residual.pgm", &grey(&image, &shifted))?;
    out.image(
        "labels.pgm",
        &label_map(image.width(), image.height(), &hard, priors.label_count()),
    )?;
    out.trace(&result.trace)?;
    out.finish(Summary {
        command: "patch-label",
        parameters: serde_json::to_value(args)?,
        inputs,
        result: &result,
        accuracy: None,
    })
}
