//! Piecewise linear interpolants on bond volumes that meet the interface.
//!
//! For an interface bond volume `B` only the piece `S = B ∩ closure(Omega_a)`
//! enters the energy. `S` is a box, so it is triangulated face by face with a
//! rule that depends on the face alone (see [`triangulate`]):
//!
//! - A face lying in the closure of an atomistic bond volume of the same
//!   covering carries that bond volume's signed type-A triangulation, so the
//!   covering interpolant stays continuous across the shared face.
//! - Faces on `Gamma`, and faces assembled only from such faces, carry the
//!   trace of the global cell template, matching the continuum side.
//! - Any other face is coned from its centre over the triangulations of its
//!   facets. The centre carries the mean of the face's corner values, which
//!   keeps affine data affine.
//!
//! Faces are cells of the product grid formed by the covering planes and
//! the planes of `Gamma`; two bond-volume pieces that touch share whole
//! faces of that grid, which is what makes the per-face rule consistent.
//! Degenerate interaction vectors are handled in the plane or line spanned
//! by their nonzero components.

use crate::error::Result;
use crate::geometry::covering::offset_class;
use crate::geometry::simplex::{triangulate, FaceRule};
use crate::geometry::{p1_stencil, GridBox, Simplex};
use crate::lattice::{triple_to_vec, LatticeConfig, Triple};

use super::partition::{BondClass, DegeneratePolicy, RegionPartition};

/// How interface bond volumes are triangulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterfaceScheme {
    /// Face rule described in the module documentation. Ghost-force free.
    #[default]
    Matched,
    /// The global cell template on every piece. Simple, but discontinuous
    /// against atomistic bond volumes whose faces are not unit squares with
    /// positive diagonals, so it generally has ghost forces. Kept as a
    /// control.
    CellTemplate,
}

/// Face rule for one covering class of one interaction vector.
pub(crate) struct CoveringFaceRule {
    lo: Triple,
    hi: Triple,
    eta: Triple,
    /// Residues of the covering planes modulo `|eta_i|`.
    residue: Triple,
}

impl CoveringFaceRule {
    pub(crate) fn new(part: &RegionPartition, eta: Triple, bond: &GridBox) -> Self {
        Self {
            lo: part.lo(),
            hi: part.hi(),
            eta,
            residue: offset_class(bond.lo, eta),
        }
    }

    /// Whether `[a, b]` lies inside the closure of some covering interval
    /// that sits strictly inside `(lo, hi)` on `axis`.
    fn axis_ok(&self, axis: usize, a: i64, b: i64) -> bool {
        let w = self.eta[axis].abs();
        let r = self.residue[axis];
        let start = a - (a - r).rem_euclid(w);
        let mut candidates = vec![start];
        if a == b && start == a {
            candidates.push(a - w);
        }
        candidates
            .into_iter()
            .any(|s| s <= a && b <= s + w && self.lo[axis] < s && s + w < self.hi[axis])
    }
}

impl FaceRule for CoveringFaceRule {
    fn coarse_signs(&self, f: &GridBox) -> Option<Triple> {
        let ok = (0..3).all(|i| self.eta[i] == 0 || self.axis_ok(i, f.lo[i], f.hi[i]));
        ok.then(|| self.eta.map(|e| if e < 0 { -1 } else { 1 }))
    }
}

struct NeverCoarse;

impl FaceRule for NeverCoarse {
    fn coarse_signs(&self, _: &GridBox) -> Option<Triple> {
        None
    }
}

/// One interface bond volume and the triangulation of its atomistic piece.
#[derive(Debug, Clone)]
pub struct InterfaceCell {
    /// Canonical base site `l`.
    pub base: Triple,
    pub law: usize,
    pub eta: Triple,
    /// The whole bond volume (unwrapped, min corner first).
    pub bond: GridBox,
    /// `B ∩ closure(Omega_a)`.
    pub piece: GridBox,
    pub simplices: Vec<Simplex>,
}

impl InterfaceCell {
    /// `prod |eta_i|` over the nonzero components.
    pub fn eta_measure(&self) -> f64 {
        active_measure(self.eta)
    }
}

pub(crate) fn active_measure(eta: Triple) -> f64 {
    eta.iter().filter(|&&e| e != 0).map(|e| e.abs()).product::<i64>() as f64
}

fn triangulate_piece(
    part: &RegionPartition,
    eta: Triple,
    bond: &GridBox,
    piece: &GridBox,
    scheme: InterfaceScheme,
) -> Vec<Simplex> {
    match scheme {
        InterfaceScheme::Matched => triangulate(piece, &CoveringFaceRule::new(part, eta, bond)),
        InterfaceScheme::CellTemplate => triangulate(piece, &NeverCoarse),
    }
}

/// Triangulation of an arbitrary face of an interface piece, consistent
/// with [`interface_cells`].
pub(crate) fn triangulate_face(
    part: &RegionPartition,
    cell: &InterfaceCell,
    face: &GridBox,
    scheme: InterfaceScheme,
) -> Vec<Simplex> {
    triangulate_piece(part, cell.eta, &cell.bond, face, scheme)
}

/// All interface bond volumes of one interaction vector, in base-site order.
pub fn interface_cells(
    part: &RegionPartition,
    law: usize,
    eta: Triple,
    scheme: InterfaceScheme,
) -> Result<Vec<InterfaceCell>> {
    let cfg = part.config();
    let (lo, hi) = (part.lo(), part.hi());
    let mut out = Vec::new();
    for s in cfg.sites() {
        let l = s.triple();
        if part.classify_bond_volume(l, eta, DegeneratePolicy::Reduce)? != BondClass::Interface {
            continue;
        }
        let bond = part.bond_box(l, eta);
        let mut piece = bond;
        for i in 0..3 {
            if eta[i] != 0 {
                piece.lo[i] = bond.lo[i].max(lo[i]);
                piece.hi[i] = bond.hi[i].min(hi[i]);
            }
        }
        let simplices = triangulate_piece(part, eta, &bond, &piece, scheme);
        out.push(InterfaceCell {
            base: l,
            law,
            eta,
            bond,
            piece,
            simplices,
        });
    }
    Ok(out)
}

/// `grad(u) eta` on a simplex as a combination of lattice-site values,
/// merged per site and sorted by linear site index.
pub(crate) fn simplex_site_stencil(
    cfg: &LatticeConfig,
    simplex: &Simplex,
    eta: Triple,
) -> Result<Vec<(usize, f64)>> {
    let c = p1_stencil(&simplex.points(), &triple_to_vec(eta))?;
    let mut raw = Vec::with_capacity(8 * c.len());
    for (node, cj) in simplex.nodes().iter().zip(c) {
        for (p, w) in node.expand() {
            raw.push((cfg.index_of(p), cj * w));
        }
    }
    Ok(merge_sites(raw))
}

pub(crate) fn merge_sites(mut raw: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    raw.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for (s, c) in raw {
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 += c,
            _ => out.push((s, c)),
        }
    }
    out
}
