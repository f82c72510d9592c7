//! One handle for every energy model the harness can select.

use bondvol::assembly::{DofSpace, DofVec};
use bondvol::coupling::{conforming_model, dg_model, high_order_model, naive_model, CoupledModel};
use bondvol::energies::{acb_cell_model, acb_tetra_model, atomistic_model, site_dofs, Breakdown, TermModel};
use bondvol::lattice::{Deformation, Mat3};
use bondvol::{EnergyReport, Error, ModelKind, Reduction, Result};

use crate::config::RunConfig;

#[derive(Debug, Clone)]
pub enum Model {
    Pure(TermModel),
    Coupled(CoupledModel),
}

impl Model {
    pub fn build(cfg: &RunConfig, kind: ModelKind) -> Result<Self> {
        let c = &cfg.lattice;
        let laws = &cfg.laws;
        let part = || {
            cfg.partition
                .as_ref()
                .ok_or_else(|| Error::InvalidPartition(format!("model {kind} needs an atomistic region")))
        };
        Ok(match kind {
            ModelKind::Atomistic => Model::Pure(atomistic_model(c, laws)?),
            ModelKind::AcbTetra => Model::Pure(acb_tetra_model(c, laws)?),
            ModelKind::AcbCell => Model::Pure(acb_cell_model(c, laws)?),
            ModelKind::Coupled => Model::Coupled(conforming_model(part()?, laws, cfg.options)?),
            ModelKind::CoupledDg => Model::Coupled(dg_model(part()?, laws, cfg.options)?),
            ModelKind::CoupledHo(k) => Model::Coupled(high_order_model(part()?, laws, k, cfg.options)?),
            ModelKind::Naive => Model::Coupled(naive_model(part()?, laws)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Pure(m) => m.kind,
            Model::Coupled(m) => m.kind(),
        }
    }

    pub fn space(&self) -> &DofSpace {
        match self {
            Model::Pure(m) => &m.space,
            Model::Coupled(m) => m.space(),
        }
    }

    /// Dof vector of a lattice deformation (continuous traces, linear
    /// interpolant at additional nodes).
    pub fn embed(&self, y: &Deformation) -> DofVec {
        match self {
            Model::Pure(_) => site_dofs(y),
            Model::Coupled(m) => m.embed(y),
        }
    }

    /// Energy, breakdown and raw derivative with respect to the dofs.
    pub fn evaluate_dofs(
        &self,
        laws: &bondvol::potentials::InteractionSet,
        f: &Mat3,
        x: &DofVec,
        mode: Reduction,
    ) -> Result<(f64, Breakdown, DofVec)> {
        match self {
            Model::Pure(m) => m.evaluate_dofs(laws, f, x, mode),
            Model::Coupled(m) => m.evaluate_dofs(laws, f, x, mode),
        }
    }

    pub fn evaluate_state(
        &self,
        laws: &bondvol::potentials::InteractionSet,
        f: &Mat3,
        x: &DofVec,
        mode: Reduction,
    ) -> Result<EnergyReport> {
        match self {
            Model::Pure(m) => m.evaluate_state(laws, f, x, mode),
            Model::Coupled(m) => m.evaluate_state(laws, f, x, mode),
        }
    }

    pub fn evaluate(&self, y: &Deformation, laws: &bondvol::potentials::InteractionSet, mode: Reduction) -> Result<EnergyReport> {
        self.evaluate_state(laws, y.gradient(), &self.embed(y), mode)
    }
}
