//! Consistency sweep of an A-CB model against the atomistic energy.

use std::f64::consts::PI;

use bondvol::energies::{acb_cell_model, acb_tetra_model, atomistic_model};
use bondvol::lattice::{make_deformation, sample_field, LatticeConfig, Vec3};
use bondvol::ModelKind;

use crate::config::RunConfig;
use crate::report::{Check, SuiteReport, Table};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub energy_atomistic: f64,
    pub energy_acb: f64,
    /// `|Phi_a - Phi_acb| / |Omega|`.
    pub gap: f64,
    /// Max-norm of the difference of the two gradients.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log gap` against `log eps`; `None` when every
    /// gap is at rounding level (the models agree exactly).
    pub slope: Option<f64>,
}

/// Relative gaps below this are rounding.
pub const ROUNDING: f64 = 1e-14;

impl SweepRow {
    /// Gap relative to the energies (`|Omega| = 1` on the unit torus).
    pub fn relative_gap(&self) -> f64 {
        let scale = self.energy_atomistic.abs().max(self.energy_acb.abs());
        if scale > 0.0 {
            self.gap / scale
        } else {
            self.gap
        }
    }

    pub fn is_exact(&self) -> bool {
        self.relative_gap() <= ROUNDING
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Samples `v(x) = amp (sin 2 pi x_1, sin 2 pi x_2, sin 2 pi x_3)` on the
/// unit torus with `N^3` sites for each size and compares the energies.
pub fn consistency_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    let sw = &cfg.sweep;
    let mode = cfg.reduction();
    let mut rows = Vec::with_capacity(sw.sizes.len());
    for &n in &sw.sizes {
        let lat = LatticeConfig::unit_cube(n)?;
        let v = sample_field(lat, |x| sw.amplitude * x.map(|t| (2.0 * PI * t).sin()));
        let y = make_deformation(cfg.f, v)?;
        let a = atomistic_model(&lat, &sw.laws)?.evaluate(&y, &sw.laws, mode)?;
        let c = match sw.model {
            ModelKind::AcbTetra => acb_tetra_model(&lat, &sw.laws)?,
            _ => acb_cell_model(&lat, &sw.laws)?,
        }
        .evaluate(&y, &sw.laws, mode)?;
        let residual = a
            .gradient
            .values()
            .iter()
            .zip(c.gradient.values())
            .map(|(p, q): (&Vec3, &Vec3)| (p - q).amax())
            .fold(0.0, f64::max);
        rows.push(SweepRow {
            epsilon: lat.spacing(),
            energy_atomistic: a.energy,
            energy_acb: c.energy,
            gap: (a.energy - c.energy).abs() / lat.volume(),
            residual,
        });
    }
    let slope = if rows.iter().all(SweepRow::is_exact) {
        None
    } else {
        let (x, y): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .map(|r| (r.epsilon.ln(), r.gap.max(f64::MIN_POSITIVE).ln()))
            .unzip();
        Some(fit_slope(&x, &y))
    };
    Ok(SweepResult { rows, slope })
}

pub fn sweep(cfg: &RunConfig) -> Result<SuiteReport> {
    let res = consistency_sweep(cfg)?;
    let mut report = SuiteReport::new("sweep consistency", cfg.seed);
    let model = cfg.sweep.model;
    match res.slope {
        None => {
            let worst = res.rows.iter().map(SweepRow::relative_gap).fold(0.0, f64::max);
            report.push(Check::at_most(format!("{model} gap relative to the energy, all sizes"), worst, ROUNDING));
            report.notes.push("gaps vanish to rounding at every size, slope: exact".into());
        }
        Some(s) if model == ModelKind::AcbCell => {
            report.push(Check::at_least(format!("{model} gap, log-log slope"), s, cfg.tolerances.slope))
        }
        Some(s) => report.notes.push(format!("{model} gap, log-log slope = {s:.4} (measured)")),
    }
    report.tables.push(Table {
        name: "sweep_consistency".into(),
        header: ["epsilon", "energy_atomistic", "energy_acb", "gap", "residual"].map(String::from).to_vec(),
        rows: res
            .rows
            .iter()
            .map(|r| {
                [r.epsilon, r.energy_atomistic, r.energy_acb, r.gap, r.residual]
                    .iter()
                    .map(|x| format!("{x:e}"))
                    .collect()
            })
            .collect(),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let x: Vec<f64> = [0.25f64, 0.125, 0.0625].iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = [0.25f64, 0.125, 0.0625].iter().map(|e| (3.0 * e * e).ln()).collect();
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
