//! Coverings of the torus by pairwise disjoint bond volumes of one direction.

use crate::error::{Error, Result};
use crate::lattice::{LatticeConfig, SiteIndex, Triple};

use super::simplex::GridBox;

/// The bond volumes `B_{l,eta}` with `l_i = c_i (mod |eta_i|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Covering {
    pub eta: Triple,
    pub offset: Triple,
    pub members: Vec<SiteIndex>,
}

impl Covering {
    /// Boxes of the members, as unwrapped lattice boxes starting at the
    /// componentwise minimum corner.
    pub fn boxes(&self) -> impl Iterator<Item = GridBox> + '_ {
        self.members.iter().map(move |s| bond_box(s.triple(), self.eta))
    }
}

/// Box of `B_{l,eta}` with min corner `l + min(eta, 0)`.
pub fn bond_box(l: Triple, eta: Triple) -> GridBox {
    let lo: Triple = std::array::from_fn(|i| l[i] + eta[i].min(0));
    GridBox::new(lo, std::array::from_fn(|i| lo[i] + eta[i].abs()))
}

/// Offset class of a base site; degenerate axes always map to 0.
pub fn offset_class(l: Triple, eta: Triple) -> Triple {
    std::array::from_fn(|i| if eta[i] == 0 { 0 } else { l[i].rem_euclid(eta[i].abs()) })
}

/// Lexicographic index of an offset class.
pub fn covering_index(offset: Triple, eta: Triple) -> usize {
    let w: [i64; 3] = std::array::from_fn(|i| eta[i].abs().max(1));
    ((offset[0] * w[1] + offset[1]) * w[2] + offset[2]) as usize
}

/// All `|eta1 eta2 eta3|` coverings, offset classes in lexicographic order.
pub fn enumerate_coverings(eta: Triple, cfg: &LatticeConfig) -> Result<Vec<Covering>> {
    if eta.contains(&0) {
        return Err(Error::DegenerateEta(eta));
    }
    cfg.check_divisibility(eta)?;
    let w = eta.map(|e| e.abs());
    let mut out = Vec::with_capacity((w[0] * w[1] * w[2]) as usize);
    for c0 in 0..w[0] {
        for c1 in 0..w[1] {
            for c2 in 0..w[2] {
                let offset = [c0, c1, c2];
                let members = cfg
                    .sites()
                    .filter(|s| offset_class(s.triple(), eta) == offset)
                    .collect();
                out.push(Covering {
                    eta,
                    offset,
                    members,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let cfg = LatticeConfig::new([6, 6, 6], 1.0).unwrap();
        assert_eq!(enumerate_coverings([1, 1, 1], &cfg).unwrap().len(), 1);
        let c = enumerate_coverings([2, 1, 3], &cfg).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c[1].offset, [0, 0, 1]);
        assert_eq!(covering_index([1, 0, 2], [2, 1, 3]), 5);
        assert!(matches!(
            enumerate_coverings([4, 1, 1], &cfg),
            Err(Error::CoveringMismatch { .. })
        ));
        assert!(matches!(
            enumerate_coverings([1, 0, 1], &cfg),
            Err(Error::DegenerateEta(_))
        ));
    }

    #[test]
    fn every_cell_lies_in_exactly_one_member_per_covering() {
        // Exhaustive oracle on a 6^3 torus: count, for every cell, the members
        // whose (periodically wrapped) box contains it.
        let cfg = LatticeConfig::new([6, 6, 6], 0.5).unwrap();
        for eta in [[2, 1, 3], [-2, 3, 1], [1, -1, -2], [3, 3, 3]] {
            let coverings = enumerate_coverings(eta, &cfg).unwrap();
            let mut per_cell = vec![0usize; cfg.num_sites()];
            for cov in &coverings {
                let mut hits = vec![0usize; cfg.num_sites()];
                for b in cov.boxes() {
                    for c in b.unit_cells() {
                        hits[cfg.index_of(c.lo)] += 1;
                    }
                }
                assert!(hits.iter().all(|&h| h == 1), "eta {eta:?} offset {:?}", cov.offset);
                let vol: f64 = cov.boxes().map(|b| b.measure() as f64 * 0.125).sum();
                assert!((vol - cfg.volume()).abs() < 1e-12);
                for (a, h) in per_cell.iter_mut().zip(&hits) {
                    *a += h;
                }
            }
            let n = (eta[0] * eta[1] * eta[2]).unsigned_abs() as usize;
            assert!(per_cell.iter().all(|&c| c == n));
        }
    }
}
