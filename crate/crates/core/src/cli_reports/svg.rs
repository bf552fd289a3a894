//! SVG dump of a sampled contour: one closed path, axes through the origin and unit ticks.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::contour_geometry::SampledContour;
use crate::scalar::Real;

/// Ticks are drawn at integers only while there are at most this many per axis.
const MAX_TICKS: i64 = 40;

/// SVG text for the contour. The y axis is flipped so the picture has the usual orientation.
pub fn svg_string<T: Real>(contour: &SampledContour<T>) -> String {
    let pts: Vec<(f64, f64)> = contour.z().iter().map(|z| (z.re.to_f64().unwrap(), -z.im.to_f64().unwrap())).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (w, h) = (x1 - x0, y1 - y0);
    let (vx, vy, vw, vh) = (x0 - 0.1 * w, y0 - 0.1 * h, 1.2 * w, 1.2 * h);
    let stroke = 0.004 * vw.max(vh);

    let mut out = String::new();
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx} {vy} {vw} {vh}">"#).unwrap();
    writeln!(out, r#"<g stroke="gray" stroke-width="{}" font-size="{}">"#, stroke / 2.0, 8.0 * stroke).unwrap();
    if (vy..vy + vh).contains(&0.0) {
        writeln!(out, r#"<line x1="{vx}" y1="0" x2="{}" y2="0"/>"#, vx + vw).unwrap();
    }
    if (vx..vx + vw).contains(&0.0) {
        writeln!(out, r#"<line x1="0" y1="{vy}" x2="0" y2="{}"/>"#, vy + vh).unwrap();
    }
    let tick = 2.0 * stroke;
    let (kx0, kx1) = (vx.ceil() as i64, (vx + vw).floor() as i64);
    if kx1 - kx0 <= MAX_TICKS && (vy..vy + vh).contains(&0.0) {
        for k in (kx0..=kx1).filter(|&k| k != 0) {
            writeln!(out, r#"<line x1="{k}" y1="{}" x2="{k}" y2="{tick}"/>"#, -tick).unwrap();
            writeln!(out, r#"<text x="{k}" y="{}" stroke="none">{k}</text>"#, 5.0 * tick).unwrap();
        }
    }
    let (ky0, ky1) = (vy.ceil() as i64, (vy + vh).floor() as i64);
    if ky1 - ky0 <= MAX_TICKS && (vx..vx + vw).contains(&0.0) {
        for k in (ky0..=ky1).filter(|&k| k != 0) {
            writeln!(out, r#"<line x1="{}" y1="{k}" x2="{tick}" y2="{k}"/>"#, -tick).unwrap();
            writeln!(out, r#"<text x="{}" y="{k}" stroke="none">{}</text>"#, 2.0 * tick, -k).unwrap();
        }
    }
    writeln!(out, "</g>").unwrap();
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        write!(d, "{}{x} {y}", if i == 0 { "M" } else { " L" }).unwrap();
    }
    d.push_str(" Z");
    writeln!(out, r#"<path d="{d}" fill="none" stroke="black" stroke-width="{stroke}"/>"#).unwrap();
    writeln!(out, "</svg>").unwrap();
    out
}

/// Write [`svg_string`] to `path`; IO errors are returned unchanged.
pub fn emit_svg<T: Real>(contour: &SampledContour<T>, path: &Path) -> io::Result<()> {
    fs::write(path, svg_string(contour))
}
