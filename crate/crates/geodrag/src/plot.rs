//! Trajectory plots: per-point polylines from source to final position as a
//! standalone SVG document with deterministic bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::drag::{LogEvent, TrajectoryLog};
use crate::error::{Error, Result};

const CELL: f64 = 10.0;
const MARGIN: f64 = 20.0;
const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct PointTrack {
    positions: Vec<(f64, f64)>,
    target: Option<(f64, f64)>,
    fixation_marks: Vec<(f64, f64, bool)>, // position + entered?
}

/// Renders a trajectory log as SVG. Positions come from the per-iteration
/// records; targets from the initial records; fixation events are marked at
/// the point's position at that iteration.
pub fn render_trajectory_svg(log: &TrajectoryLog) -> Result<String> {
    let mut tracks: BTreeMap<usize, PointTrack> = BTreeMap::new();
    let mut last_position: BTreeMap<usize, (f64, f64)> = BTreeMap::new();

    for record in &log.records {
        let Some(id) = record.point_id else { continue };
        match record.event {
            None => {
                let (Some(x), Some(y)) = (record.x, record.y) else {
                    return Err(Error::parse("trajectory record without coordinates"));
                };
                let track = tracks.entry(id).or_insert_with(|| PointTrack {
                    positions: Vec::new(),
                    target: None,
                    fixation_marks: Vec::new(),
                });
                track.positions.push((x, y));
                last_position.insert(id, (x, y));
                if let (Some(gx), Some(gy)) = (record.gx, record.gy) {
                    track.target = Some((gx, gy));
                }
            }
            Some(LogEvent::EnterFixation) | Some(LogEvent::ExitFixation) => {
                if let Some(&pos) = last_position.get(&id) {
                    let entered = matches!(record.event, Some(LogEvent::EnterFixation));
                    tracks
                        .entry(id)
                        .or_insert_with(|| PointTrack {
                            positions: Vec::new(),
                            target: None,
                            fixation_marks: Vec::new(),
                        })
                        .fixation_marks
                        .push((pos.0, pos.1, entered));
                }
            }
            _ => {}
        }
    }

    if tracks.is_empty() {
        return Err(Error::invalid("trajectory log holds no point records"));
    }

    let mut max_x: f64 = 1.0;
    let mut max_y: f64 = 1.0;
    for track in tracks.values() {
        for &(x, y) in &track.positions {
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
        if let Some((x, y)) = track.target {
            max_x = max_x.max(x);
            max_y = max_y.max(y);
        }
    }
    let width = max_x * CELL + 2.0 * MARGIN;
    let height = max_y * CELL + 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x * CELL;
    let sy = |y: f64| MARGIN + y * CELL;

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    )
    .unwrap();
    writeln!(
        svg,
        "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\" stroke=\"#cccccc\"/>"
    )
    .unwrap();

    for (id, track) in &tracks {
        let color = PALETTE[id % PALETTE.len()];
        if !track.positions.is_empty() {
            let mut points = String::new();
            for &(x, y) in &track.positions {
                write!(points, "{:.2},{:.2} ", sx(x), sy(y)).unwrap();
            }
            writeln!(
                svg,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                points.trim_end()
            )
            .unwrap();
            let (x0, y0) = track.positions[0];
            writeln!(
                svg,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"><title>point {id} source</title></circle>",
                sx(x0),
                sy(y0)
            )
            .unwrap();
        }
        if let Some((gx, gy)) = track.target {
            let (cx, cy) = (sx(gx), sy(gy));
            writeln!(
                svg,
                "  <path d=\"M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}\" stroke=\"{color}\" stroke-width=\"2\"><title>point {id} target</title></path>",
                cx - 5.0, cy - 5.0, cx + 5.0, cy + 5.0, cx - 5.0, cy + 5.0, cx + 5.0, cy - 5.0
            )
            .unwrap();
        }
        for &(x, y, entered) in &track.fixation_marks {
            let label = if entered { "enter" } else { "exit" };
            writeln!(
                svg,
                "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"5\" height=\"5\" fill=\"none\" stroke=\"{color}\"><title>point {id} fixation {label}</title></rect>",
                sx(x) - 2.5,
                sy(y) - 2.5
            )
            .unwrap();
        }
    }
    writeln!(svg, "</svg>").unwrap();
    Ok(svg)
}
