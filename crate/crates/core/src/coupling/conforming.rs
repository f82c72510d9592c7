//! The conforming bond-volume coupled energy.

use crate::assembly::{Dof, Reduction, TermSet};
use crate::energies::{check_laws, kuhn_stencil, push_bond, EnergyReport, ModelKind, Region, TermModel};
use crate::error::{Error, Result};
use crate::geometry::kuhn_paths;
use crate::lattice::{Deformation, LatticeConfig, Triple};
use crate::potentials::InteractionSet;

use super::interface::{interface_cells, simplex_site_stencil, InterfaceCell, InterfaceScheme};
use super::partition::{BondClass, DegeneratePolicy, RegionPartition};
use super::CoupledModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CouplingOptions {
    pub policy: DegeneratePolicy,
    pub scheme: InterfaceScheme,
}

pub(crate) fn is_degenerate(eta: Triple) -> bool {
    eta.contains(&0)
}

pub(crate) fn active_axes(eta: Triple) -> Vec<usize> {
    (0..3).filter(|&i| eta[i] != 0).collect()
}

/// Preconditions shared by every coupled model.
pub(crate) fn validate(part: &RegionPartition, laws: &InteractionSet, opts: CouplingOptions) -> Result<()> {
    let cfg = part.config();
    check_laws(cfg, laws)?;
    for law in laws.laws() {
        let eta = law.eta();
        if is_degenerate(eta) && opts.policy == DegeneratePolicy::Reject {
            return Err(Error::DegenerateEta(eta));
        }
        cfg.check_divisibility(eta)?;
    }
    part.check_clearance(laws.max_reach())
}

/// Bonds whose bond volume closure lies inside `Omega_a`.
pub(crate) fn atomistic_terms(part: &RegionPartition, laws: &InteractionSet) -> Result<TermSet> {
    let cfg = part.config();
    let mut ts = TermSet::new();
    for s in cfg.sites() {
        let l = s.triple();
        for (k, law) in laws.laws().iter().enumerate() {
            let eta = law.eta();
            if part.classify_bond_volume(l, eta, DegeneratePolicy::Reduce)? == BondClass::Atomistic {
                push_bond(&mut ts, cfg, k, l, eta);
            }
        }
    }
    Ok(ts)
}

/// Whether the unit cell (or, for a degenerate `eta`, the unit cell of the
/// slab through `l`) is atomistic.
fn unit_cell_atomistic(part: &RegionPartition, l: Triple, eta: Triple) -> bool {
    if !is_degenerate(eta) {
        return part.cell_in_atomistic(l);
    }
    let c = part.config().canonicalize(l).triple();
    let (lo, hi) = (part.lo(), part.hi());
    part.slab_has_atomistic(c, eta) && active_axes(eta).iter().all(|&i| lo[i] <= c[i] && c[i] < hi[i])
}

/// Tetrahedral A-CB over `Omega_*`. Degenerate interaction vectors use the
/// positive Kuhn split of each unit cell of the coordinate plane or line
/// through every site.
pub(crate) fn continuum_terms(part: &RegionPartition, laws: &InteractionSet) -> TermSet {
    let cfg = part.config();
    let e3 = cfg.spacing().powi(3);
    let mut ts = TermSet::new();
    for s in cfg.sites() {
        let l = s.triple();
        if !part.cell_in_atomistic(l) {
            for path in kuhn_paths(l, [1, 1, 1], &[0, 1, 2]) {
                for (k, law) in laws.laws().iter().enumerate() {
                    if !is_degenerate(law.eta()) {
                        ts.push(k, e3 / 6.0, kuhn_stencil(cfg, &path, law.eta()));
                    }
                }
            }
        }
        for (k, law) in laws.laws().iter().enumerate() {
            let eta = law.eta();
            if !is_degenerate(eta) || unit_cell_atomistic(part, l, eta) {
                continue;
            }
            let axes = active_axes(eta);
            let fact: f64 = (1..=axes.len()).map(|i| i as f64).product();
            for path in kuhn_paths(l, [1, 1, 1], &axes) {
                ts.push(k, e3 / fact, kuhn_stencil(cfg, &path, eta));
            }
        }
    }
    ts
}

/// Interface cells of every law, in law order.
pub(crate) fn all_interface_cells(
    part: &RegionPartition,
    laws: &InteractionSet,
    scheme: InterfaceScheme,
) -> Result<Vec<Vec<InterfaceCell>>> {
    laws.laws()
        .iter()
        .enumerate()
        .map(|(k, law)| interface_cells(part, k, law.eta(), scheme))
        .collect()
}

/// `(eps^3 |T| / |eta_1 eta_2 eta_3|) phi_eta(grad y^{l,eta} eta)` for every
/// simplex of every interface piece. `map` turns a site index into the dof
/// that carries its value on the atomistic side.
pub(crate) fn interface_terms(
    cfg: &LatticeConfig,
    cells: &[Vec<InterfaceCell>],
    map: &dyn Fn(usize) -> Dof,
) -> Result<TermSet> {
    let e3 = cfg.spacing().powi(3);
    let mut ts = TermSet::new();
    let mut dofs = Vec::new();
    let mut coefs = Vec::new();
    for cell in cells.iter().flatten() {
        let scale = e3 / cell.eta_measure();
        for s in &cell.simplices {
            dofs.clear();
            coefs.clear();
            for (site, c) in simplex_site_stencil(cfg, s, cell.eta)? {
                dofs.push(map(site));
                coefs.push(c);
            }
            ts.push_raw(cell.law, scale * s.measure(), &dofs, &coefs);
        }
    }
    Ok(ts)
}

/// Atomistic, continuum and interface sets of the conforming model.
pub(crate) fn base_terms(
    kind: ModelKind,
    part: &RegionPartition,
    laws: &InteractionSet,
    cells: &[Vec<InterfaceCell>],
    map: &dyn Fn(usize) -> Dof,
) -> Result<TermModel> {
    let cfg = part.config();
    let mut m = TermModel::new(kind, *cfg);
    m.sets.push((Region::Atomistic, atomistic_terms(part, laws)?));
    m.sets.push((Region::Continuum, continuum_terms(part, laws)));
    m.sets.push((Region::Interface, interface_terms(cfg, cells, map)?));
    Ok(m)
}

pub fn conforming_model(
    part: &RegionPartition,
    laws: &InteractionSet,
    opts: CouplingOptions,
) -> Result<CoupledModel> {
    validate(part, laws, opts)?;
    let cells = all_interface_cells(part, laws, opts.scheme)?;
    let terms = base_terms(ModelKind::Coupled, part, laws, &cells, &Dof::Site)?;
    Ok(CoupledModel {
        partition: *part,
        options: opts,
        terms,
        jumps: None,
        elements: None,
    })
}

/// `E_bv(y) = sum_eta [E^a_{Omega_a} + E^{a,cb}_{Omega_*} + E_Gamma]`.
pub fn coupled_energy_conforming(
    y: &Deformation,
    laws: &InteractionSet,
    part: &RegionPartition,
    opts: CouplingOptions,
    mode: Reduction,
) -> Result<EnergyReport> {
    if y.config() != part.config() {
        return Err(Error::ConfigMismatch);
    }
    conforming_model(part, laws, opts)?.evaluate(y, laws, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::{acb_tetra_energy, atomistic_energy};
    use crate::lattice::{make_deformation, LatticeField, Mat3, Vec3};
    use crate::potentials::{cb_energy_density, max_abs_entry, piola_stress, InteractionLaw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn part(n: usize, corner: i64, ext: usize) -> RegionPartition {
        let cfg = LatticeConfig::new([n; 3], 1.0 / n as f64).unwrap();
        RegionPartition::new(cfg, [corner; 3], [ext; 3]).unwrap()
    }

    fn toy(etas: &[Triple]) -> InteractionSet {
        InteractionSet::uniform(etas, InteractionLaw::anisotropic_toy).unwrap()
    }

    fn f_random(rng: &mut ChaCha8Rng) -> Mat3 {
        Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.1..0.1))
    }

    #[test]
    fn homogeneous_weights_count_the_volume() {
        // Counting oracle: every per-law weight total equals |Omega|.
        let p = part(12, 4, 4);
        let laws = toy(&[[1, 1, 1], [2, 1, 3], [1, -1, 2]]);
        let m = conforming_model(&p, &laws, CouplingOptions::default()).unwrap();
        let mut w = vec![0.0; laws.len()];
        for (_, ts) in &m.terms().sets {
            for (a, b) in w.iter_mut().zip(ts.weight_per_law(laws.len())) {
                *a += b;
            }
        }
        for x in w {
            assert!((x - 1.0).abs() < 1e-13, "{x}");
        }
    }

    #[test]
    fn no_ghost_forces() {
        let p = part(12, 4, 4);
        let laws = toy(&[[1, 1, 1], [2, 1, 3], [1, -1, 2]]);
        let m = conforming_model(&p, &laws, CouplingOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3 {
            let f = f_random(&mut rng);
            let y = Deformation::homogeneous(*p.config(), f).unwrap();
            let rep = m.evaluate(&y, &laws, Reduction::Ordered).unwrap();
            let scale = (max_abs_entry(&piola_stress(&laws, &f).unwrap()) / p.config().spacing()).max(1.0);
            assert!(rep.gradient_max_norm() / scale <= 1e-12, "{}", rep.gradient_max_norm() / scale);
            let expect = cb_energy_density(&laws, &f).unwrap();
            assert!((rep.energy - expect).abs() <= 1e-13 * expect.abs(), "{} {}", rep.energy, expect);
        }
    }

    #[test]
    fn cell_template_interface_has_ghost_forces() {
        let p = part(12, 4, 4);
        let laws = toy(&[[1, -1, 2]]);
        let opts = CouplingOptions {
            scheme: InterfaceScheme::CellTemplate,
            ..Default::default()
        };
        let m = conforming_model(&p, &laws, opts).unwrap();
        let f = Mat3::new(1.03, 0.02, -0.01, 0.01, 0.98, 0.04, 0.0, -0.02, 1.01);
        let y = Deformation::homogeneous(*p.config(), f).unwrap();
        let rep = m.evaluate(&y, &laws, Reduction::Ordered).unwrap();
        let scale = (max_abs_entry(&piola_stress(&laws, &f).unwrap()) / p.config().spacing()).max(1.0);
        assert!(rep.gradient_max_norm() / scale > 1e-3);
    }

    #[test]
    fn reduced_degenerate_bonds_have_no_ghost_forces() {
        let p = part(12, 4, 4);
        let laws = toy(&[[2, 1, 3], [1, 0, 2], [0, 3, 0], [-1, 1, 0]]);
        assert!(matches!(
            conforming_model(&p, &laws, CouplingOptions::default()),
            Err(Error::DegenerateEta(_))
        ));
        let opts = CouplingOptions {
            policy: DegeneratePolicy::Reduce,
            ..Default::default()
        };
        let m = conforming_model(&p, &laws, opts).unwrap();
        let f = Mat3::new(1.03, 0.02, -0.01, 0.01, 0.98, 0.04, 0.0, -0.02, 1.01);
        let y = Deformation::homogeneous(*p.config(), f).unwrap();
        let rep = m.evaluate(&y, &laws, Reduction::Ordered).unwrap();
        let scale = (max_abs_entry(&piola_stress(&laws, &f).unwrap()) / p.config().spacing()).max(1.0);
        assert!(rep.gradient_max_norm() / scale <= 1e-12);
        let expect = cb_energy_density(&laws, &f).unwrap();
        assert!((rep.energy - expect).abs() <= 1e-13 * expect.abs(), "{} {}", rep.energy, expect);
    }

    #[test]
    fn deep_sites_see_the_pure_models() {
        let p = part(20, 6, 8);
        let laws = toy(&[[1, 1, 1], [2, 1, 1]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = f_random(&mut rng);
        let v = LatticeField::from_fn(*p.config(), |_| {
            Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 0.01
        });
        let y = make_deformation(f, v).unwrap();
        let c = coupled_energy_conforming(&y, &laws, &p, CouplingOptions::default(), Reduction::Ordered).unwrap();
        let a = atomistic_energy(&y, &laws, Reduction::Ordered).unwrap();
        let t = acb_tetra_energy(&y, &laws, Reduction::Ordered).unwrap();
        let reach = 2 * laws.max_reach();
        let mut checked = [0, 0];
        for s in p.config().sites() {
            let l = s.triple();
            if p.distance_to_gamma(l) < reach {
                continue;
            }
            let inside = (0..3).all(|i| p.lo()[i] < l[i] && l[i] < p.hi()[i]);
            let pure = if inside { &a } else { &t };
            let d = (c.gradient.at(s) - pure.gradient.at(s)).amax();
            assert!(d <= 1e-13 * pure.gradient.max_norm().max(1.0), "{l:?} {d}");
            checked[inside as usize] += 1;
        }
        assert!(checked[0] > 0 && checked[1] > 0);
    }

    #[test]
    fn validation_errors() {
        let p = part(12, 4, 4);
        let laws = toy(&[[5, 1, 1]]);
        assert!(matches!(
            conforming_model(&p, &laws, CouplingOptions::default()),
            Err(Error::CoveringMismatch { .. })
        ));
        let close = part(12, 1, 4);
        let laws = toy(&[[2, 1, 3]]);
        assert!(matches!(
            conforming_model(&close, &laws, CouplingOptions::default()),
            Err(Error::InvalidPartition(_))
        ));
    }
}
