//! Atomistic-to-continuum coupled energies built from bond volumes.
//!
//! The torus is split into an atomistic box `Omega_a` and its complement
//! `Omega_*`. For each interaction vector, bonds whose bond volume lies in
//! `Omega_a` are summed exactly, `Omega_*` is treated by the tetrahedral
//! A-CB rule, and bond volumes that meet the interface contribute the
//! integral of `phi_eta(grad y eta)` over their atomistic piece, weighted by
//! `1 / |eta_1 eta_2 eta_3|`. All three constructions (conforming,
//! discontinuous, high order) are free of ghost forces.

pub mod conforming;
pub mod covering_interp;
pub mod dg;
pub mod high_order;
pub mod interface;
pub mod naive;
pub mod partition;
pub mod quadrature;

pub use conforming::{conforming_model, coupled_energy_conforming, CouplingOptions};
pub use covering_interp::{covering_bookkeeping, covering_interpolant, CoveringBookkeeping, CoveringInterpolant, PieceRegion};
pub use dg::{coupled_energy_dg, dg_model, jump_average};
pub use high_order::{high_order_energy, high_order_model};
pub use interface::{interface_cells, InterfaceCell, InterfaceScheme};
pub use naive::{naive_coupling_energy, naive_model};
pub use partition::{BondClass, DegeneratePolicy, GammaFace, RegionPartition};

use crate::assembly::{DofSpace, DofVec, EvalContext, Reduction};
use crate::energies::{site_dofs, Breakdown, EnergyReport, ModelKind, Region, TermModel};
use crate::error::Result;
use crate::lattice::{Deformation, Mat3, Vec3};
use crate::potentials::InteractionSet;

/// A coupled energy: stored terms plus the parts evaluated on the fly.
#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub(crate) partition: RegionPartition,
    pub(crate) options: CouplingOptions,
    pub(crate) terms: TermModel,
    pub(crate) jumps: Option<dg::JumpTerms>,
    pub(crate) elements: Option<high_order::Elements>,
}

impl CoupledModel {
    pub fn kind(&self) -> ModelKind {
        self.terms.kind
    }

    pub fn partition(&self) -> &RegionPartition {
        &self.partition
    }

    pub fn options(&self) -> CouplingOptions {
        self.options
    }

    pub fn space(&self) -> &DofSpace {
        &self.terms.space
    }

    /// The stored term sets by region.
    pub fn terms(&self) -> &TermModel {
        &self.terms
    }

    /// Dof vector representing a lattice deformation: trace offsets are zero
    /// and additional finite element nodes take the linear interpolant.
    pub fn embed(&self, y: &Deformation) -> DofVec {
        let mut x = site_dofs(y);
        x.traces = vec![Vec3::zeros(); self.space().trace_sites.len()];
        x.extras = match &self.elements {
            Some(el) => el.interpolate(&x.sites),
            None => Vec::new(),
        };
        x
    }

    /// Energy, breakdown and raw gradient (not scaled by `1/eps^3`).
    pub fn evaluate_dofs(
        &self,
        laws: &InteractionSet,
        f: &Mat3,
        x: &DofVec,
        mode: Reduction,
    ) -> Result<(f64, Breakdown, DofVec)> {
        let (mut energy, mut bd, mut grad) = self.terms.evaluate_dofs(laws, f, x, mode)?;
        let ctx = EvalContext::new(laws, f, self.terms.config.spacing(), &self.terms.space);
        if let Some(el) = &self.elements {
            let e = el.evaluate(&ctx, x, &mut grad, mode)?;
            bd.add(Region::Continuum, e);
            energy += e;
        }
        if let Some(j) = &self.jumps {
            let e = j.evaluate(&ctx, x, &mut grad, mode)?;
            bd.add(Region::Interface, e);
            energy += e;
        }
        Ok((energy, bd, grad))
    }

    /// Energy report for a dof vector.
    pub fn evaluate_state(
        &self,
        laws: &InteractionSet,
        f: &Mat3,
        x: &DofVec,
        mode: Reduction,
    ) -> Result<EnergyReport> {
        let (e, bd, g) = self.evaluate_dofs(laws, f, x, mode)?;
        EnergyReport::from_dofs(self.kind(), &self.terms.config, e, bd, g)
    }

    pub fn evaluate(&self, y: &Deformation, laws: &InteractionSet, mode: Reduction) -> Result<EnergyReport> {
        self.evaluate_state(laws, y.gradient(), &self.embed(y), mode)
    }
}
