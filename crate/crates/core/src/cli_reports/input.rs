//! Input files: contour maps, moment sets and period-matrix data.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::RunError;
use crate::contour_geometry::{check_univalent, ExteriorMap, GUARD_SAMPLES};
use crate::moments::MomentSet;
use crate::scalar::c;
use crate::theta_core::{Characteristics, PeriodMatrix};
use crate::Complex64;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContourFile {
    r: f64,
    b0: [f64; 2],
    #[serde(default)]
    coeffs: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentFile {
    t0: f64,
    t: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenusFile {
    #[serde(rename = "Omega")]
    omega: Vec<Vec<[f64; 2]>>,
    xi_a: Vec<f64>,
    xi_b: Vec<f64>,
    #[serde(rename = "Z", default)]
    z: Option<Vec<[f64; 2]>>,
}

/// Period matrix, characteristics and an optional evaluation point Z.
#[derive(Clone, Debug, PartialEq)]
pub struct GenusInput {
    pub omega: PeriodMatrix<f64>,
    pub xi: Characteristics<f64>,
    pub z: Option<Vec<Complex64>>,
}

fn pair(p: [f64; 2]) -> Complex64 {
    c(p[0], p[1])
}

fn read<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Input(format!("{}: {e}", path.display())))
}

/// Parse {"r", "b0": [re, im], "coeffs": [[re, im], …]} and require a univalent map with 0 inside.
pub fn parse_contour(text: &str) -> Result<ExteriorMap<f64>, RunError> {
    let f: ContourFile = serde_json::from_str(text).map_err(|e| RunError::Input(e.to_string()))?;
    contour_from(f)
}

fn contour_from(f: ContourFile) -> Result<ExteriorMap<f64>, RunError> {
    let map = ExteriorMap::new(f.r, pair(f.b0), f.coeffs.into_iter().map(pair).collect())?;
    if let Some((crit, detail)) = check_univalent(&map, GUARD_SAMPLES).failure {
        return Err(RunError::Input(format!("map is not univalent ({crit:?}): {detail}")));
    }
    Ok(map)
}

pub fn load_contour(path: &Path) -> Result<ExteriorMap<f64>, RunError> {
    contour_from(read(path)?).map_err(|e| match e {
        RunError::Input(msg) => RunError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parse {"t0", "t": [[re, im], …]}.
pub fn load_moments(path: &Path) -> Result<MomentSet<f64>, RunError> {
    let f: MomentFile = read(path)?;
    if f.t.is_empty() {
        return Err(RunError::Input(format!("{}: t must hold at least one moment", path.display())));
    }
    Ok(MomentSet::new(f.t0, f.t.into_iter().map(pair).collect())?)
}

/// Parse {"Omega": [[[re, im], …], …], "xi_a": […], "xi_b": […], "Z": [[re, im], …]?}.
pub fn parse_genus(text: &str) -> Result<GenusInput, RunError> {
    let f: GenusFile = serde_json::from_str(text).map_err(|e| RunError::Input(e.to_string()))?;
    genus_from(f)
}

fn genus_from(f: GenusFile) -> Result<GenusInput, RunError> {
    let rows: Vec<Vec<Complex64>> = f.omega.into_iter().map(|r| r.into_iter().map(pair).collect()).collect();
    let g = rows.len();
    if g == 0 || rows.iter().any(|r| r.len() != g) {
        return Err(RunError::Input("Omega must be a non-empty square matrix".into()));
    }
    let omega = PeriodMatrix::from_rows(&rows)?;
    if f.xi_a.len() != g || f.xi_b.len() != g {
        return Err(RunError::Input(format!("xi_a and xi_b must have length g = {g}")));
    }
    let xi = Characteristics::new(f.xi_a, f.xi_b)?;
    let z = match f.z {
        Some(v) if v.len() != g => return Err(RunError::Input(format!("Z must have length g = {g}"))),
        Some(v) => Some(v.into_iter().map(pair).collect()),
        None => None,
    };
    Ok(GenusInput { omega, xi, z })
}

pub fn load_genus(path: &Path) -> Result<GenusInput, RunError> {
    genus_from(read(path)?).map_err(|e| match e {
        RunError::Input(msg) => RunError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}
