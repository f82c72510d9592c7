//! Inconsistent reference coupling, kept as a negative control.
//!
//! Bonds whose midpoint lies in the half-open atomistic box are summed
//! exactly, and every cell of `Omega_*` gets the tetrahedral A-CB energy.
//! There is no interface correction, so homogeneous states carry ghost
//! forces near `Gamma` whenever some bond reaches across it.

use crate::assembly::Reduction;
use crate::energies::{check_laws, push_bond, push_cell_tets, EnergyReport, ModelKind, Region, TermModel};
use crate::error::{Error, Result};
use crate::lattice::Deformation;
use crate::potentials::InteractionSet;

use super::conforming::CouplingOptions;
use super::partition::RegionPartition;
use super::CoupledModel;

pub fn naive_model(part: &RegionPartition, laws: &InteractionSet) -> Result<CoupledModel> {
    let cfg = part.config();
    check_laws(cfg, laws)?;
    part.check_clearance(laws.max_reach())?;
    let (lo, hi) = (part.lo(), part.hi());
    let mut terms = TermModel::new(ModelKind::Naive, *cfg);
    let atom = terms.set_mut(Region::Atomistic);
    for s in cfg.sites() {
        let l = s.triple();
        for (k, law) in laws.laws().iter().enumerate() {
            let eta = law.eta();
            // doubled midpoint, to stay in integers
            let inside = (0..3).all(|i| {
                let m = 2 * l[i] + eta[i];
                2 * lo[i] <= m && m < 2 * hi[i]
            });
            if inside {
                push_bond(atom, cfg, k, l, eta);
            }
        }
    }
    let cont = terms.set_mut(Region::Continuum);
    for s in cfg.sites() {
        if !part.cell_in_atomistic(s.triple()) {
            push_cell_tets(cont, cfg, laws, s.triple());
        }
    }
    Ok(CoupledModel {
        partition: *part,
        options: CouplingOptions::default(),
        terms,
        jumps: None,
        elements: None,
    })
}

pub fn naive_coupling_energy(
    y: &Deformation,
    laws: &InteractionSet,
    part: &RegionPartition,
    mode: Reduction,
) -> Result<EnergyReport> {
    if y.config() != part.config() {
        return Err(Error::ConfigMismatch);
    }
    naive_model(part, laws)?.evaluate(y, laws, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeConfig, Mat3};
    use crate::potentials::{max_abs_entry, piola_stress, InteractionLaw};

    #[test]
    fn ghost_forces_localize_at_the_interface() {
        let cfg = LatticeConfig::new([12, 12, 12], 1.0 / 12.0).unwrap();
        let p = RegionPartition::new(cfg, [4, 4, 4], [4, 4, 4]).unwrap();
        let r = InteractionSet::uniform(&[[1, 1, 1], [2, 1, 3]], InteractionLaw::anisotropic_toy).unwrap();
        let f = Mat3::new(1.03, 0.02, -0.01, 0.01, 0.98, 0.04, 0.0, -0.02, 1.01);
        let y = Deformation::homogeneous(cfg, f).unwrap();
        let rep = naive_coupling_energy(&y, &r, &p, Reduction::Ordered).unwrap();
        let scale = (max_abs_entry(&piola_stress(&r, &f).unwrap()) / cfg.spacing()).max(1.0);
        assert!(rep.gradient_max_norm() / scale >= 1e-3);
        let reach = r.max_reach();
        for s in cfg.sites() {
            if p.distance_to_gamma(s.triple()) > reach {
                assert!(rep.gradient.at(s).amax() <= 1e-12 * scale, "{:?}", s);
            }
        }
    }
}
