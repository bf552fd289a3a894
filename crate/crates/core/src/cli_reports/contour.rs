//! Contour suites: geometry, moments, tau and the Ward identities.

use std::cell::OnceCell;

use serde_json::json;

use super::{cjson, cmat, cvec, CheckEntry, Command, RunConfig, RunError, Section, QUAD_NODES};
use crate::contour_geometry::{duality_matrix, faber, ExteriorMap};
use crate::error::Error;
use crate::linalg::Mat;
use crate::moments::{exterior_moments, interior_moments, map_from_moments_with, MomentSet};
use crate::scalar::c;
use crate::tau_energy::{log_tau_boundary, log_tau_grid, TauReport};
use crate::ward_suite::{
    bergman_matrix, bergman_rho_spread, equilibrium_moments, hessian_block, integrated_identities, metric_gram,
    reconstruct_log_g, schiffer_matrix, ward_chain_rule, ward_first_order, FdSettings, HessianBlock, RICHARDSON_GATE,
    SERIES_TAIL_TOL,
};
use crate::Complex64;

/// Contour suites run by `verify-all`, in report order.
pub(crate) const SUITE: [Command; 10] = [
    Command::Info,
    Command::Moments,
    Command::InvertMoments,
    Command::Faber,
    Command::Tau,
    Command::Ward1,
    Command::Hessian,
    Command::ReconstructG,
    Command::Metric,
    Command::Identities,
];

const DISK_TOL: f64 = 1e-8;
const ORACLE_REL_TOL: f64 = 1e-3;
const ROUNDTRIP_TOL: f64 = 1e-8;
const DUALITY_TOL: f64 = 1e-10;
/// Duality is checked for m, n up to at least this order.
const DUALITY_ORDER: usize = 6;
const WARD_FIRST_TOL: f64 = 1e-4;
const CHAIN_TOL: f64 = 1e-6;
const HESSIAN_TOL: f64 = 1e-4;
const SYMMETRY_TOL: f64 = 1e-10;
const RHO_TOL: f64 = 1e-8;
const RECONSTRUCT_TOL: f64 = 1e-4;
const IDENTITY_TOL: f64 = 1e-5;

pub(crate) struct Context<'a> {
    config: &'a RunConfig,
    map: ExteriorMap<f64>,
    fd: FdSettings<f64>,
    /// Shared by `hessian` and `metric` within one run.
    block: OnceCell<Result<HessianBlock<f64>, Error>>,
}

/// Largest entrywise gap between two matrices, with the entries that attain it.
fn worst_entry(a: &Mat<Complex64>, b: &Mat<Complex64>) -> (f64, Complex64, Complex64) {
    let mut worst = (0.0, a.data[0], b.data[0]);
    for (&x, &y) in a.data.iter().zip(&b.data) {
        let r = (x - y).norm();
        if r > worst.0 {
            worst = (r, x, y);
        }
    }
    worst
}

fn tau_json(r: &TauReport<f64>) -> serde_json::Value {
    let mut v = json!({
        "log_tau": r.log_tau,
        "method": r.method,
        "energy_E": r.energy_e,
        "log_term_L": r.log_term_l,
        "area": r.area,
    });
    if let Some(m) = r.samples {
        v["M"] = json!(m);
    }
    if let Some(n) = r.grid_n {
        v["grid_n"] = json!(n);
    }
    v
}

fn map_json(map: &ExteriorMap<f64>) -> serde_json::Value {
    json!({ "r": map.r(), "b0": cjson(map.b0()), "coeffs": cvec(map.coeffs()) })
}

/// Disk seed with the target's area and the coefficient count the target determines.
fn disk_seed(target: &MomentSet<f64>) -> ExteriorMap<f64> {
    ExteriorMap::disk(target.t0.sqrt()).padded(target.t.len() - 1)
}

/// Moment inversion for an input moment set.
pub(crate) fn invert(config: &RunConfig, target: &MomentSet<f64>) -> Result<Section, RunError> {
    let map = map_from_moments_with(target, &disk_seed(target), config.tol, config.samples)?;
    let back = exterior_moments(&map, target.t.len(), config.samples)?;
    let residual = back.to_real().iter().zip(target.to_real()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let mut s = Section::default();
    s.put("map", map_json(&map));
    s.check(CheckEntry::new("invert_moments.residual", back.t0, target.t0, residual, config.tol));
    Ok(s)
}

impl<'a> Context<'a> {
    pub(crate) fn new(config: &'a RunConfig, map: ExteriorMap<f64>) -> Self {
        let fd = FdSettings { step: config.contour_fd(), samples: config.samples };
        Self { config, map, fd, block: OnceCell::new() }
    }

    pub(crate) fn run_command(&self, cmd: Command) -> Result<Section, RunError> {
        match cmd {
            Command::Info => self.info(),
            Command::Moments => self.moments(),
            Command::InvertMoments => self.roundtrip(),
            Command::Faber => self.faber(),
            Command::Tau => self.tau(),
            Command::Ward1 => self.ward1(),
            Command::Hessian => self.hessian(),
            Command::ReconstructG => self.reconstruct(),
            Command::Metric => self.metric(),
            Command::Identities => self.identities(),
            other => unreachable!("{other} is not a contour command"),
        }
    }

    fn n(&self) -> usize {
        self.config.order
    }

    fn block(&self) -> Result<&HessianBlock<f64>, RunError> {
        self.block
            .get_or_init(|| hessian_block(&self.map, self.n(), &self.fd))
            .as_ref()
            .map_err(|e| RunError::from(e.clone()))
    }

    fn info(&self) -> Result<Section, RunError> {
        let t = exterior_moments(&self.map, self.n(), self.config.samples)?;
        let mut s = Section::default();
        s.put("area", t.t0 * std::f64::consts::PI);
        s.put("t0", t.t0);
        s.put("t", cvec(&t.t));
        s.put("b_minus1", self.map.b_minus1());
        Ok(s)
    }

    fn moments(&self) -> Result<Section, RunError> {
        let t = exterior_moments(&self.map, self.n(), self.config.samples)?;
        let v = interior_moments(&self.map, self.n(), self.config.samples)?;
        let mut s = Section::default();
        s.put("exterior", json!({ "t0": t.t0, "t": cvec(&t.t) }));
        s.put("interior", json!({ "v0": v.v0, "v": cvec(&v.v) }));
        Ok(s)
    }

    /// Moments of the input map, inverted again from a disk seed.
    fn roundtrip(&self) -> Result<Section, RunError> {
        let count = self.map.coeffs().len() + 1;
        let target = exterior_moments(&self.map, count, self.config.samples)?;
        let map = map_from_moments_with(&target, &disk_seed(&target), 1e-13, self.config.samples)?;
        let original = self.map.padded(count - 1);
        let mut worst = ((map.r() - original.r()).abs(), c(map.r(), 0.0), c(original.r(), 0.0));
        let pairs = std::iter::once((map.b0(), original.b0()))
            .chain(map.coeffs().iter().copied().zip(original.coeffs().iter().copied()));
        for (a, b) in pairs {
            if (a - b).norm() > worst.0 {
                worst = ((a - b).norm(), a, b);
            }
        }
        let mut s = Section::default();
        s.put("map", map_json(&map));
        s.check(CheckEntry::new("moments.inversion_roundtrip", worst.1, worst.2, worst.0, ROUNDTRIP_TOL));
        Ok(s)
    }

    fn faber(&self) -> Result<Section, RunError> {
        let mut s = Section::default();
        let polys: Vec<Vec<[f64; 2]>> = (1..=self.n()).map(|k| cvec(&faber(&self.map, k).coeffs)).collect();
        s.put("faber", polys);
        let order = self.n().max(DUALITY_ORDER);
        let d = duality_matrix(&self.map, order, self.config.samples)?;
        let target = Mat::from_fn(order, order + 1, |m, n| c(if n == m + 1 { 1.0 } else { 0.0 }, 0.0));
        let (worst, lhs, rhs) = worst_entry(&d, &target);
        s.check(CheckEntry::new("faber.duality", lhs, rhs, worst, DUALITY_TOL));
        Ok(s)
    }

    fn tau(&self) -> Result<Section, RunError> {
        let boundary = log_tau_boundary(&self.map, self.config.samples)?;
        let mut s = Section::default();
        s.put("boundary", tau_json(&boundary));
        let centred_disk = self.map.coeffs().iter().all(|b| *b == c(0.0, 0.0)) && self.map.b0() == c(0.0, 0.0);
        if centred_disk {
            let t0 = self.map.r() * self.map.r();
            let exact = 0.5 * t0 * t0 * t0.ln() - 0.75 * t0 * t0;
            s.check(CheckEntry::new(
                "tau.disk_closed_form",
                boundary.log_tau,
                exact,
                (boundary.log_tau - exact).abs(),
                DISK_TOL,
            ));
        }
        if self.config.oracle || self.config.command == Command::VerifyAll {
            let grid = log_tau_grid(&self.map, self.config.grid_n)?;
            s.put("grid", tau_json(&grid));
            let rel = (boundary.log_tau - grid.log_tau).abs() / grid.log_tau.abs();
            s.check(CheckEntry::new("tau.grid_oracle", boundary.log_tau, grid.log_tau, rel, ORACLE_REL_TOL));
        }
        Ok(s)
    }

    fn ward1(&self) -> Result<Section, RunError> {
        let report = ward_first_order(&self.map, self.n(), &self.fd)?;
        let mut s = Section::default();
        for e in &report.entries {
            s.check(CheckEntry::new(format!("ward1.first_order[{}]", e.n), e.fd, e.moment, e.residual, WARD_FIRST_TOL));
        }
        // Family moving the first coefficient: g_s = g + s/w.
        let base = self.map.padded(self.map.coeffs().len().max(1));
        let family = |s: f64| {
            let mut coeffs = base.coeffs().to_vec();
            coeffs[0] += s;
            ExteriorMap::new(base.r(), base.b0(), coeffs)
        };
        let chain = ward_chain_rule(family, 0.0, &self.fd)?;
        s.put("chain_rule", json!({ "direct": chain.direct, "predicted": chain.predicted }));
        s.check(CheckEntry::new("ward1.chain_rule", chain.direct, chain.predicted, chain.residual, CHAIN_TOL));
        Ok(s)
    }

    fn hessian(&self) -> Result<Section, RunError> {
        let n = self.n();
        let block = self.block()?;
        let schiffer = schiffer_matrix(&self.map, n, QUAD_NODES)?;
        let bergman = bergman_matrix(&self.map, n, self.config.rho, QUAD_NODES)?;
        let spread = bergman_rho_spread(&self.map, n, QUAD_NODES)?;
        let m = equilibrium_moments(&self.map, n, QUAD_NODES)?;

        let mut s = Section::default();
        s.put("t0t0", block.t0t0);
        s.put("t0_row", cvec(&block.t0_row));
        s.put("holomorphic", cmat(&block.holo));
        s.put("mixed", cmat(&block.mixed));
        s.put("schiffer", cmat(&schiffer));
        s.put("bergman", cmat(&bergman));
        s.put("equilibrium_moments", cvec(&m));
        s.put("richardson_gap", block.richardson_gap);

        let two_log_r = 2.0 * self.map.r().ln();
        s.check(CheckEntry::new("hessian.t0t0", block.t0t0, two_log_r, (block.t0t0 - two_log_r).abs(), HESSIAN_TOL));
        s.check(CheckEntry::new(
            "hessian.richardson",
            block.richardson_gap,
            0.0,
            block.richardson_gap,
            RICHARDSON_GATE,
        ));
        let (r, a, b) = worst_entry(&block.holo, &schiffer);
        s.check(CheckEntry::new("hessian.schiffer", a, b, r, HESSIAN_TOL));
        let (r, a, b) = worst_entry(&schiffer, &schiffer.transpose());
        s.check(CheckEntry::new("hessian.schiffer_symmetry", a, b, r, SYMMETRY_TOL));
        let (r, a, b) = worst_entry(&block.mixed, &bergman);
        s.check(CheckEntry::new("hessian.bergman", a, b, r, HESSIAN_TOL));
        s.check(CheckEntry::new("hessian.bergman_rho_independence", spread, 0.0, spread, RHO_TOL));
        let row = Mat::from_fn(1, n, |_, k| block.t0_row[k]);
        let eq = Mat::from_fn(1, n, |_, k| m[k + 1]);
        let (r, a, b) = worst_entry(&row, &eq);
        s.check(CheckEntry::new("hessian.equilibrium_moments", a, b, r, HESSIAN_TOL));
        Ok(s)
    }

    fn metric(&self) -> Result<Section, RunError> {
        let n = self.n();
        let gram = metric_gram(&self.map, n, self.config.rho, QUAD_NODES)?;
        let block = self.block()?;
        let mut s = Section::default();
        s.put("h", cmat(&gram.h));
        s.put("eigenvalues", &gram.eigenvalues);
        let adjoint = Mat::from_fn(n, n, |i, j| gram.h[(j, i)].conj());
        let (r, a, b) = worst_entry(&gram.h, &adjoint);
        s.check(CheckEntry::new("metric.hermitian", a, b, r, SYMMETRY_TOL));
        s.check(CheckEntry::positive("metric.min_eigenvalue", gram.min_eigenvalue()));
        let scaled = gram.h.map(|z| z * std::f64::consts::PI);
        let (r, a, b) = worst_entry(&scaled, &block.mixed);
        s.check(CheckEntry::new("metric.kahler_potential", a, b, r, HESSIAN_TOL));
        Ok(s)
    }

    fn reconstruct(&self) -> Result<Section, RunError> {
        let k = self.config.terms.unwrap_or(8);
        let z = self.config.point.unwrap_or(c(5.0, 0.0));
        let rep = reconstruct_log_g(&self.map, k, z, &self.fd, SERIES_TAIL_TOL)?;
        let mut s = Section::default();
        s.put("z", cjson(z));
        s.put("terms", k);
        s.put("last_term", rep.last_term);
        s.check(CheckEntry::new("reconstruct_g.log_g", rep.reconstructed, rep.direct, rep.residual, RECONSTRUCT_TOL));
        Ok(s)
    }

    fn identities(&self) -> Result<Section, RunError> {
        let k = self.config.terms.unwrap_or(10);
        let z = self.config.point.unwrap_or(c(6.0, 0.0));
        let rep = integrated_identities(&self.map, z, z, k, self.config.rho, QUAD_NODES, SERIES_TAIL_TOL)?;
        let mut s = Section::default();
        s.put("z", cjson(z));
        s.put("w", cjson(z));
        s.put("terms", k);
        s.check(CheckEntry::new("identities.holomorphic", rep.lhs_holo, rep.rhs_holo, rep.residual_holo, IDENTITY_TOL));
        s.check(CheckEntry::new("identities.mixed", rep.lhs_mixed, rep.rhs_mixed, rep.residual_mixed, IDENTITY_TOL));
        Ok(s)
    }
}
