//! The covering interpolants `v^[m]` used to regroup the coupled first
//! variation covering by covering.
//!
//! For one covering `m` of one interaction vector, `v^[m]` is piecewise
//! linear on: the type-A tetrahedra of the covering's atomistic bond
//! volumes, the interface pieces of its interface bond volumes, and the cell
//! tetrahedra of `Omega_*`. Each piece records its constant gradient.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::covering::{covering_index, offset_class};
use crate::geometry::simplex::signed_kuhn;
use crate::geometry::{p1_stencil, GridBox, Node, Simplex};
use crate::lattice::{triple_to_vec, LatticeConfig, LatticeField, Mat3, Triple, Vec3};

use crate::assembly::{DofVec, EvalContext};
use crate::energies::Region;
use crate::potentials::{InteractionLaw, InteractionSet};

use super::conforming::{conforming_model, CouplingOptions};
use super::interface::{interface_cells, InterfaceScheme};
use super::partition::{BondClass, DegeneratePolicy, RegionPartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceRegion {
    /// Type-A tets of an atomistic bond volume of the covering.
    Atomistic,
    /// Simplices of the atomistic piece of an interface bond volume.
    Interface,
    /// Cell tets of `Omega_*`.
    Continuum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub simplex: Simplex,
    pub region: PieceRegion,
    /// Physical gradient of `v^[m]` on the piece.
    pub gradient: Mat3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringInterpolant {
    pub eta: Triple,
    pub offset: Triple,
    pub pieces: Vec<Piece>,
    config: LatticeConfig,
}

fn node_values(u: &LatticeField, s: &Simplex) -> Vec<Vec3> {
    s.nodes()
        .iter()
        .map(|n| n.expand().into_iter().map(|(p, w)| u.get(p) * w).sum())
        .collect()
}

fn gradient(cfg: &LatticeConfig, u: &LatticeField, s: &Simplex) -> Result<Mat3> {
    let pts = s.points();
    let vals = node_values(u, s);
    let mut g = Mat3::zeros();
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = 1.0;
        let c = p1_stencil(&pts, &e)?;
        let col: Vec3 = vals.iter().zip(&c).map(|(v, c)| v * *c).sum();
        g.set_column(a, &(col / cfg.spacing()));
    }
    Ok(g)
}

fn offset_of(index: usize, eta: Triple) -> Triple {
    let w = eta.map(|e| e.abs());
    let i = index as i64;
    [i / (w[1] * w[2]), (i / w[2]) % w[1], i % w[2]]
}

/// `v^[m]` for the covering with lexicographic index `m`.
pub fn covering_interpolant(
    part: &RegionPartition,
    eta: Triple,
    m: usize,
    u: &LatticeField,
    scheme: InterfaceScheme,
) -> Result<CoveringInterpolant> {
    let cfg = *part.config();
    if u.config() != &cfg {
        return Err(Error::ConfigMismatch);
    }
    if eta.contains(&0) {
        return Err(Error::DegenerateEta(eta));
    }
    cfg.check_divisibility(eta)?;
    cfg.check_bond(eta)?;
    part.check_clearance(eta.iter().map(|e| e.abs()).max().unwrap())?;
    let count = eta.iter().map(|e| e.unsigned_abs() as usize).product::<usize>();
    if m >= count {
        return Err(Error::InvalidInteractions(format!("covering index {m} out of range for {count} coverings")));
    }
    let offset = offset_of(m, eta);
    debug_assert_eq!(covering_index(offset, eta), m);

    let mut raw: Vec<(Simplex, PieceRegion)> = Vec::new();
    for s in cfg.sites() {
        let l = s.triple();
        if !part.cell_in_atomistic(l) {
            let cell = GridBox::new(l, [l[0] + 1, l[1] + 1, l[2] + 1]);
            raw.extend(signed_kuhn(&cell, [1, 1, 1]).into_iter().map(|t| (t, PieceRegion::Continuum)));
        }
        if offset_class(l, eta) == offset
            && part.classify_bond_volume(l, eta, DegeneratePolicy::Reject)? == BondClass::Atomistic
        {
            let signs = eta.map(|e| e.signum());
            raw.extend(
                signed_kuhn(&part.bond_box(l, eta), signs)
                    .into_iter()
                    .map(|t| (t, PieceRegion::Atomistic)),
            );
        }
    }
    for cell in interface_cells(part, 0, eta, scheme)? {
        if offset_class(cell.base, eta) == offset {
            raw.extend(cell.simplices.into_iter().map(|t| (t, PieceRegion::Interface)));
        }
    }
    let pieces = raw
        .into_iter()
        .map(|(simplex, region)| {
            let gradient = gradient(&cfg, u, &simplex)?;
            Ok(Piece {
                simplex,
                region,
                gradient,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CoveringInterpolant {
        eta,
        offset,
        pieces,
        config: cfg,
    })
}

impl CoveringInterpolant {
    fn contributions<'a>(&'a self, regions: &'a [PieceRegion]) -> impl Iterator<Item = Vec3> + 'a {
        let e3 = self.config.spacing().powi(3);
        let eta = triple_to_vec(self.eta);
        self.pieces
            .iter()
            .filter(move |p| regions.is_empty() || regions.contains(&p.region))
            .map(move |p| p.gradient * eta * (e3 * p.simplex.measure()))
    }

    /// `int grad v^[m] eta dx` over the pieces of the given regions (all of
    /// them if `regions` is empty).
    pub fn integral(&self, regions: &[PieceRegion]) -> Vec3 {
        self.contributions(regions).sum()
    }

    /// Same sum with every contribution replaced by its absolute value; the
    /// natural scale for relative comparisons of [`Self::integral`].
    pub fn abs_integral(&self, regions: &[PieceRegion]) -> Vec3 {
        self.contributions(regions).map(|v| v.abs()).sum()
    }

    /// Total volume of the pieces in lattice units.
    pub fn lattice_volume(&self) -> f64 {
        self.pieces.iter().map(|p| p.simplex.measure()).sum()
    }

    /// Checks that the pieces form a conforming mesh of the torus: every
    /// triangle is shared by exactly two tetrahedra.
    pub fn check_conformity(&self) -> Result<()> {
        let cfg = &self.config;
        let canon = |n: &Node| match n {
            Node::Lattice(p) => Node::Lattice(cfg.canonicalize(*p).triple()),
            Node::Center(b) => {
                let c = cfg.canonicalize(b.lo).triple();
                let d: Triple = std::array::from_fn(|i| c[i] - b.lo[i]);
                Node::Center(GridBox::new(c, std::array::from_fn(|i| b.hi[i] + d[i])))
            }
        };
        let mut faces: HashMap<Vec<Node>, usize> = HashMap::new();
        for p in &self.pieces {
            let nodes: Vec<Node> = p.simplex.nodes().iter().map(canon).collect();
            for skip in 0..nodes.len() {
                let mut f: Vec<Node> = nodes.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, n)| *n).collect();
                f.sort();
                *faces.entry(f).or_default() += 1;
            }
        }
        match faces.iter().find(|(_, &c)| c != 2) {
            None => Ok(()),
            Some((f, c)) => Err(Error::InvalidPartition(format!("face {f:?} shared by {c} pieces"))),
        }
    }
}

/// One side-by-side comparison of the coupled linear functional with its
/// covering regrouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Assembled from the coupled energy's term sets.
    pub coupled: Vec3,
    /// Assembled from the covering interpolants.
    pub regrouped: Vec3,
    /// Sum of absolute contributions to both sides.
    pub scale: Vec3,
}

impl Comparison {
    /// `max_i |coupled_i - regrouped_i| / scale_i`.
    pub fn relative_error(&self) -> f64 {
        (0..3)
            .map(|i| {
                let d = (self.coupled[i] - self.regrouped[i]).abs();
                if self.scale[i] > 0.0 {
                    d / self.scale[i]
                } else {
                    d
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Both sides of the covering regrouping of the first variation at a
/// homogeneous state, for one interaction vector and a test field `u`.
///
/// The coupled side is `sum weight * (grad u eta)` over each region's terms;
/// the regrouped side is `(1/|eta_1 eta_2 eta_3|) sum_m int grad v^[m] eta`
/// over the matching pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringBookkeeping {
    pub atomistic: Comparison,
    pub interface: Comparison,
    pub continuum: Comparison,
    pub total: Comparison,
    /// `int_Omega grad v^[m] eta` and its absolute scale, per covering.
    pub gauss_green: Vec<(Vec3, Vec3)>,
}

impl CoveringBookkeeping {
    pub fn max_relative_error(&self) -> f64 {
        [self.atomistic, self.interface, self.continuum, self.total]
            .iter()
            .map(Comparison::relative_error)
            .fold(0.0, f64::max)
    }

    /// Largest `|int grad v^[m] eta| / scale` over the coverings.
    pub fn max_gauss_green(&self) -> f64 {
        self.gauss_green
            .iter()
            .map(|(v, s)| (0..3).map(|i| if s[i] > 0.0 { v[i].abs() / s[i] } else { v[i].abs() }).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

pub fn covering_bookkeeping(
    part: &RegionPartition,
    eta: Triple,
    u: &LatticeField,
    scheme: InterfaceScheme,
) -> Result<CoveringBookkeeping> {
    let cfg = *part.config();
    if u.config() != &cfg {
        return Err(Error::ConfigMismatch);
    }
    // The law is irrelevant: only the linear stencils are used.
    let laws = InteractionSet::new(vec![InteractionLaw::harmonic(eta)?])?;
    let opts = CouplingOptions {
        scheme,
        ..Default::default()
    };
    let model = conforming_model(part, &laws, opts)?;
    let x = DofVec {
        sites: u.values().to_vec(),
        traces: Vec::new(),
        extras: Vec::new(),
    };
    let space = model.space();
    // F = 0 so that the functional carries no homogeneous part to cancel.
    let ctx = EvalContext::new(&laws, &Mat3::zeros(), cfg.spacing(), space);
    let side = |region: Region| -> (Vec3, Vec3) {
        let mut sum = Vec3::zeros();
        let mut abs = Vec3::zeros();
        for (r, ts) in &model.terms().sets {
            if *r == region {
                for t in ts.iter() {
                    let z = ctx.zeta(t.law, t.dofs, t.coefs, &x) * t.weight;
                    sum += z;
                    abs += z.abs();
                }
            }
        }
        (sum, abs)
    };
    let count = eta.iter().map(|e| e.unsigned_abs() as usize).product::<usize>();
    let norm = 1.0 / count as f64;
    let mut regrouped = [Vec3::zeros(); 3];
    let mut regrouped_abs = [Vec3::zeros(); 3];
    let mut gauss_green = Vec::with_capacity(count);
    let regions = [PieceRegion::Atomistic, PieceRegion::Interface, PieceRegion::Continuum];
    for m in 0..count {
        let v = covering_interpolant(part, eta, m, u, scheme)?;
        for (k, r) in regions.iter().enumerate() {
            regrouped[k] += v.integral(&[*r]) * norm;
            regrouped_abs[k] += v.abs_integral(&[*r]) * norm;
        }
        gauss_green.push((v.integral(&[]), v.abs_integral(&[])));
    }
    let make = |k: usize, (coupled, abs): (Vec3, Vec3)| Comparison {
        coupled,
        regrouped: regrouped[k],
        scale: abs + regrouped_abs[k],
    };
    let atomistic = make(0, side(Region::Atomistic));
    let interface = make(1, side(Region::Interface));
    let continuum = make(2, side(Region::Continuum));
    let total = Comparison {
        coupled: atomistic.coupled + interface.coupled + continuum.coupled,
        regrouped: atomistic.regrouped + interface.regrouped + continuum.regrouped,
        scale: atomistic.scale + interface.scale + continuum.scale,
    };
    Ok(CoveringBookkeeping {
        atomistic,
        interface,
        continuum,
        total,
        gauss_green,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn part() -> RegionPartition {
        let cfg = LatticeConfig::new([12, 12, 12], 1.0 / 12.0).unwrap();
        RegionPartition::new(cfg, [4, 4, 4], [4, 4, 4]).unwrap()
    }

    fn random_field(cfg: LatticeConfig, seed: u64) -> LatticeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LatticeField::from_fn(cfg, |_| {
            Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn every_covering_interpolant_is_conforming_and_fills_the_torus() {
        let p = part();
        let u = random_field(*p.config(), 1);
        for eta in [[2, 1, 3], [1, -1, 2]] {
            let count = (eta[0] * eta[1] * eta[2] as i64).unsigned_abs() as usize;
            for m in 0..count {
                let v = covering_interpolant(&p, eta, m, &u, InterfaceScheme::Matched).unwrap();
                v.check_conformity().unwrap();
                assert!((v.lattice_volume() - 1728.0).abs() < 1e-9);
                // Gauss–Green on the torus
                let total = v.integral(&[]);
                assert!(total.amax() < 1e-12, "{total:?}");
            }
        }
    }

    #[test]
    fn regrouping_matches_the_coupled_functional() {
        let p = part();
        let u = random_field(*p.config(), 4);
        for eta in [[2, 1, 3], [1, -1, 2], [-1, -1, 1]] {
            let b = covering_bookkeeping(&p, eta, &u, InterfaceScheme::Matched).unwrap();
            assert!(b.max_relative_error() <= 1e-12, "{eta:?} {b:?}");
            assert!(b.max_gauss_green() <= 1e-12);
            // the known zero: no ghost forces for any law
            assert!((b.total.coupled.amax() / b.total.scale.amax()) <= 1e-12);
        }
    }

    #[test]
    fn cell_template_breaks_conformity() {
        let p = part();
        let u = random_field(*p.config(), 2);
        let v = covering_interpolant(&p, [1, -1, 2], 1, &u, InterfaceScheme::CellTemplate).unwrap();
        assert!(v.check_conformity().is_err());
    }

    #[test]
    fn affine_fields_have_constant_gradient_away_from_the_wrap() {
        let p = part();
        let a = Mat3::new(0.3, -0.1, 0.2, 0.05, 0.4, -0.3, 0.1, 0.0, -0.2);
        let cfg = *p.config();
        let u = LatticeField::from_fn(cfg, |s| {
            let x = s.triple();
            a * Vec3::new(x[0] as f64, x[1] as f64, x[2] as f64) * cfg.spacing()
        });
        let v = covering_interpolant(&p, [2, 1, 3], 3, &u, InterfaceScheme::Matched).unwrap();
        let mut seen = 0;
        for piece in &v.pieces {
            let unwrapped = piece.simplex.points().iter().all(|x| x.iter().all(|&c| (0.0..12.0).contains(&c)));
            if unwrapped {
                assert!((piece.gradient - a).amax() < 1e-12);
                seen += 1;
            }
        }
        assert!(seen > 1000);
    }
}
