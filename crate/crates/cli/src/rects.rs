//! `rectangles`: selection of non-intersecting rectangles.

use std::fmt::Write as _;

use anyhow::Result;
use assignflow::rectangles::{generate_rectangle_scenario, Candidate, Rect, RectangleScenario};
use assignflow::{labels, run_flow, FlowConfig, GridGraph};
use serde::Serialize;

use crate::args::RectangleArgs;
use crate::output::{OutDir, RunManifest, Summary};

#[derive(Debug, Clone, Serialize)]
pub struct SelectedRect {
    pub location: usize,
    pub row: usize,
    pub col: usize,
    pub orientation: usize,
    pub angle_degrees: f64,
    pub foreground: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Selection {
    pub selected: Vec<SelectedRect>,
    pub intersecting_pairs: usize,
    pub foreground_total: usize,
    pub foreground_recovered: usize,
}

pub fn selection(scn: &RectangleScenario, labels: &[usize]) -> Selection {
    let kk = scn.orientations();
    let width = scn.params.grid_width;
    let selected: Vec<SelectedRect> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l < kk)
        .map(|(location, &orientation)| SelectedRect {
            location,
            row: location / width,
            col: location % width,
            orientation,
            angle_degrees: 180.0 * orientation as f64 / kk as f64,
            foreground: scn.foreground.contains(&Candidate { location, orientation }),
        })
        .collect();
    Selection {
        foreground_recovered: selected.iter().filter(|s| s.foreground).count(),
        foreground_total: scn.foreground.len(),
        intersecting_pairs: scn.intersecting_pairs(labels).len(),
        selected,
    }
}

fn polygon(svg: &mut String, r: &Rect, style: &str) {
    let pts: Vec<String> = r.corners().iter().map(|(x, y)| format!("{x:.4},{y:.4}")).collect();
    let _ = writeln!(svg, r#"<polygon points="{}" {style}/>"#, pts.join(" "));
}

/// Points, true foreground (dashed) and selected rectangles (solid, green
/// when correct and red otherwise), in grid units.
pub fn svg(scn: &RectangleScenario, labels: &[usize]) -> String {
    let (h, w) = (scn.params.grid_height as f64, scn.params.grid_width as f64);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1 -1 {} {}\" width=\"{}\" height=\"{}\">\n",
        w + 1.0,
        h + 1.0,
        40.0 * (w + 1.0),
        40.0 * (h + 1.0)
    );
    svg.push_str("<rect x=\"-1\" y=\"-1\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (x, y) in &scn.points {
        let _ = writeln!(svg, r##"<circle cx="{x:.4}" cy="{y:.4}" r="0.02" fill="#888"/>"##);
    }
    for c in &scn.foreground {
        polygon(
            &mut svg,
            &scn.rect(*c),
            r#"fill="none" stroke="black" stroke-width="0.03" stroke-dasharray="0.08 0.06""#,
        );
    }
    for s in selection(scn, labels).selected {
        let color = if s.foreground { "green" } else { "red" };
        let c = Candidate { location: s.location, orientation: s.orientation };
        polygon(
            &mut svg,
            &scn.rect(c),
            &format!(r#"fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="0.04""#),
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn cmd_rectangles(args: &RectangleArgs) -> Result<RunManifest> {
    let params = args.params();
    let scn = generate_rectangle_scenario(args.seed, &params)?;
    let grid = GridGraph::new(params.grid_height, params.grid_width, 0)?;
    let cfg = FlowConfig {
        rho: params.rho,
        entropy_tol: args.entropy_tol,
        max_iterations: args.max_iter,
        bypass_averaging: true,
        ..FlowConfig::default()
    };
    let result = run_flow(&scn, &grid, &cfg)?;
    let hard = labels(&result.assignment);
    let sel = selection(&scn, &hard);
    println!(
        "selected {} rectangles, {} of {} foreground, {} intersecting pairs",
        sel.selected.len(),
        sel.foreground_recovered,
        sel.foreground_total,
        sel.intersecting_pairs
    );

    let mut out = OutDir::create(&args.out_dir)?;
    out.write("rectangles.json", serde_json::to_string_pretty(&sel)? + "\n")?;
    out.write("scenario.svg", svg(&scn, &hard))?;
    out.trace(&result.trace)?;
    out.finish(Summary {
        command: "rectangles",
        parameters: serde_json::to_value(args)?,
        inputs: Vec::new(),
        result: &result,
        accuracy: None,
    })
}
