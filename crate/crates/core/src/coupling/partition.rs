//! Atomistic / continuum split of the torus and bond-volume classification.

use crate::error::{Error, Result};
use crate::geometry::covering::bond_box;
use crate::geometry::GridBox;
use crate::lattice::{LatticeConfig, Triple, Vec3};

/// What to do with interaction vectors that have a zero component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    #[default]
    Reject,
    /// Treat the bond in the plane or line spanned by its nonzero
    /// components, slab by slab.
    Reduce,
}

/// `Omega_a` is the open box of cells `(lo, hi)`; `Omega_*` is the rest of
/// the torus and `Gamma` the boundary of the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPartition {
    config: LatticeConfig,
    lo: Triple,
    hi: Triple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondClass {
    /// Closure inside `Omega_a`.
    Atomistic,
    /// Inside `Omega_*`.
    Continuum,
    /// Everything else: the bond volume meets `Omega_a` and its closure
    /// meets `Gamma`.
    Interface,
}

/// Unit lattice face of `Gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFace {
    pub face: GridBox,
    pub axis: usize,
    /// Outward normal of `Omega_a`: `-e_axis` on the low side, `+e_axis` on
    /// the high side. The continuum side has the opposite normal.
    pub normal_a: Vec3,
}

impl RegionPartition {
    /// Atomistic box with corner cell `corner` and `extents` cells per axis,
    /// inside the fundamental domain `[0, N)`.
    pub fn new(config: LatticeConfig, corner: Triple, extents: [usize; 3]) -> Result<Self> {
        let n = config.extents();
        let mut problems = Vec::new();
        for i in 0..3 {
            if extents[i] == 0 {
                problems.push(format!("extent {} is zero", i + 1));
            }
            if corner[i] < 0 || corner[i] + extents[i] as i64 > n[i] as i64 {
                problems.push(format!(
                    "axis {}: cells [{}, {}) leave the domain [0, {})",
                    i + 1,
                    corner[i],
                    corner[i] + extents[i] as i64,
                    n[i]
                ));
            }
        }
        if !problems.is_empty() {
            return Err(Error::InvalidPartition(problems.join("; ")));
        }
        let hi = std::array::from_fn(|i| corner[i] + extents[i] as i64);
        Ok(Self {
            config,
            lo: corner,
            hi,
        })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn lo(&self) -> Triple {
        self.lo
    }

    pub fn hi(&self) -> Triple {
        self.hi
    }

    pub fn atomistic_box(&self) -> GridBox {
        GridBox::new(self.lo, self.hi)
    }

    /// `Omega_a` must keep at least `reach` cells from the domain boundary
    /// on every side.
    pub fn check_clearance(&self, reach: i64) -> Result<()> {
        let n = self.config.extents();
        for i in 0..3 {
            if self.lo[i] < reach || n[i] as i64 - self.hi[i] < reach {
                return Err(Error::InvalidPartition(format!(
                    "atomistic region needs {reach} cells of clearance from the domain boundary on axis {}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Whether the cell with min corner `l` lies in `Omega_a`.
    pub fn cell_in_atomistic(&self, l: Triple) -> bool {
        let c = self.config.canonicalize(l).triple();
        (0..3).all(|i| self.lo[i] <= c[i] && c[i] < self.hi[i])
    }

    /// Whether the site lies on `Gamma = boundary of the closed box`.
    pub fn site_on_gamma(&self, l: Triple) -> bool {
        let c = self.config.canonicalize(l).triple();
        let inside = (0..3).all(|i| self.lo[i] <= c[i] && c[i] <= self.hi[i]);
        inside && (0..3).any(|i| c[i] == self.lo[i] || c[i] == self.hi[i])
    }

    /// Chebyshev distance in cells from a site to `Gamma`, over all
    /// periodic images.
    pub fn distance_to_gamma(&self, l: Triple) -> i64 {
        let n = self.config.extents();
        let c = self.config.canonicalize(l).triple();
        let mut best = i64::MAX;
        for s0 in -1..=1 {
            for s1 in -1..=1 {
                for s2 in -1..=1 {
                    let p = [c[0] + s0 * n[0] as i64, c[1] + s1 * n[1] as i64, c[2] + s2 * n[2] as i64];
                    best = best.min(self.box_surface_distance(p));
                }
            }
        }
        best
    }

    fn box_surface_distance(&self, p: Triple) -> i64 {
        let inside = (0..3).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i]);
        if inside {
            (0..3)
                .map(|i| (p[i] - self.lo[i]).min(self.hi[i] - p[i]))
                .min()
                .unwrap()
        } else {
            (0..3)
                .map(|i| (self.lo[i] - p[i]).max(p[i] - self.hi[i]).max(0))
                .max()
                .unwrap()
        }
    }

    /// Unit faces of `Gamma` with their normals.
    pub fn gamma_faces(&self) -> Vec<GammaFace> {
        let mut out = Vec::new();
        let b = self.atomistic_box();
        for (k, f) in b.facets().into_iter().enumerate() {
            let axis = f.dim_complement_axis();
            let mut normal_a = Vec3::zeros();
            normal_a[axis] = if k % 2 == 0 { -1.0 } else { 1.0 };
            for face in f.unit_cells() {
                out.push(GammaFace {
                    face,
                    axis,
                    normal_a,
                });
            }
        }
        out
    }

    /// Open-box test of a (possibly degenerate) bond volume against
    /// `Omega_a`, on the given axes only.
    fn classify_box(&self, b: &GridBox, axes: &[usize]) -> BondClass {
        if axes.iter().any(|&i| b.hi[i] <= self.lo[i] || b.lo[i] >= self.hi[i]) {
            BondClass::Continuum
        } else if axes.iter().all(|&i| self.lo[i] < b.lo[i] && b.hi[i] < self.hi[i]) {
            BondClass::Atomistic
        } else {
            BondClass::Interface
        }
    }

    /// Whether the slab through `l` along the zero components of `eta`
    /// cuts the interior of `Omega_a`.
    pub fn slab_has_atomistic(&self, l: Triple, eta: Triple) -> bool {
        let c = self.config.canonicalize(l).triple();
        (0..3).all(|i| eta[i] != 0 || (self.lo[i] < c[i] && c[i] < self.hi[i]))
    }

    /// Bond volume box of a canonical base site.
    pub fn bond_box(&self, l: Triple, eta: Triple) -> GridBox {
        bond_box(self.config.canonicalize(l).triple(), eta)
    }

    /// Classifies `B_{l,eta}`. Requires the clearance of [`check_clearance`]
    /// for `eta`, which guarantees that bond volumes touching `Omega_a`
    /// never wrap around the torus.
    ///
    /// [`check_clearance`]: Self::check_clearance
    pub fn classify_bond_volume(
        &self,
        l: Triple,
        eta: Triple,
        policy: DegeneratePolicy,
    ) -> Result<BondClass> {
        if eta == [0, 0, 0] {
            return Err(Error::ZeroBond);
        }
        let axes: Vec<usize> = (0..3).filter(|&i| eta[i] != 0).collect();
        if axes.len() < 3 {
            if policy == DegeneratePolicy::Reject {
                return Err(Error::DegenerateEta(eta));
            }
            if !self.slab_has_atomistic(l, eta) {
                return Ok(BondClass::Continuum);
            }
        }
        Ok(self.classify_box(&self.bond_box(l, eta), &axes))
    }
}

impl GridBox {
    /// The collapsed axis of a facet of a 3D box.
    fn dim_complement_axis(&self) -> usize {
        (0..3).find(|&i| self.lo[i] == self.hi[i]).expect("facet has a collapsed axis")
    }
}
