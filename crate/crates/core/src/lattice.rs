//! Periodic lattice domain, lattice fields and difference quotients.
//!
//! The torus has `N = (N1, N2, N3)` sites per direction and spacing `eps`;
//! site `l` sits at `x_l = eps * l`. Fields are stored densely in row-major
//! order of `l` (`l3` fastest), which fixes the summation order of every
//! reduction over sites.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
/// Integer lattice vector, unwrapped (not reduced modulo the torus).
pub type Triple = [i64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    extents: [usize; 3],
    spacing: f64,
}

impl LatticeConfig {
    pub fn new(extents: [usize; 3], spacing: f64) -> Result<Self> {
        if let Some(n) = extents.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidLattice(format!(
                "every extent must be >= 2 (got {n})"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidLattice(format!(
                "spacing must be positive (got {spacing})"
            )));
        }
        Ok(Self { extents, spacing })
    }

    /// Cubic torus `n^3` with `eps = 1/n`, so that `|Omega| = 1`.
    pub fn unit_cube(n: usize) -> Result<Self> {
        Self::new([n; 3], 1.0 / n as f64)
    }

    pub fn extents(&self) -> [usize; 3] {
        self.extents
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    /// `|Omega| = N1 N2 N3 eps^3`.
    pub fn volume(&self) -> f64 {
        self.num_sites() as f64 * self.spacing.powi(3)
    }

    pub fn canonicalize(&self, l: Triple) -> SiteIndex {
        let mut out = [0usize; 3];
        for i in 0..3 {
            out[i] = l[i].rem_euclid(self.extents[i] as i64) as usize;
        }
        SiteIndex(out)
    }

    pub fn linear_index(&self, s: SiteIndex) -> usize {
        let [_, n2, n3] = self.extents;
        (s.0[0] * n2 + s.0[1]) * n3 + s.0[2]
    }

    /// Linear index of an arbitrary (unwrapped) lattice vector.
    pub fn index_of(&self, l: Triple) -> usize {
        self.linear_index(self.canonicalize(l))
    }

    pub fn site(&self, index: usize) -> SiteIndex {
        let [_, n2, n3] = self.extents;
        SiteIndex([index / (n2 * n3), (index / n3) % n2, index % n3])
    }

    pub fn sites(&self) -> impl Iterator<Item = SiteIndex> + '_ {
        (0..self.num_sites()).map(move |i| self.site(i))
    }

    /// Reference position `eps * l` of an unwrapped lattice vector.
    pub fn position(&self, l: Triple) -> Vec3 {
        Vec3::new(l[0] as f64, l[1] as f64, l[2] as f64) * self.spacing
    }

    /// No bond may wrap around the torus more than once: `2 max|eta_i| < N_i`.
    pub fn check_bond(&self, eta: Triple) -> Result<()> {
        for i in 0..3 {
            if 2 * eta[i].unsigned_abs() as usize >= self.extents[i] {
                return Err(Error::InvalidLattice(format!(
                    "bond {eta:?} wraps the torus: need 2|eta_{}| < N_{} = {}",
                    i + 1,
                    i + 1,
                    self.extents[i]
                )));
            }
        }
        Ok(())
    }

    /// `N_i mod |eta_i| = 0` for every nonzero component.
    pub fn check_divisibility(&self, eta: Triple) -> Result<()> {
        for i in 0..3 {
            let w = eta[i].unsigned_abs() as usize;
            if w != 0 && self.extents[i] % w != 0 {
                return Err(Error::CoveringMismatch {
                    eta,
                    extents: self.extents,
                });
            }
        }
        Ok(())
    }
}

/// Canonical site on the torus: `0 <= l_i < N_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SiteIndex(pub [usize; 3]);

impl SiteIndex {
    pub fn triple(&self) -> Triple {
        [self.0[0] as i64, self.0[1] as i64, self.0[2] as i64]
    }
}

pub fn canonicalize(l: Triple, cfg: &LatticeConfig) -> SiteIndex {
    cfg.canonicalize(l)
}

pub fn add(a: Triple, b: Triple) -> Triple {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn triple_to_vec(l: Triple) -> Vec3 {
    Vec3::new(l[0] as f64, l[1] as f64, l[2] as f64)
}

/// Periodic vector-valued function on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    config: LatticeConfig,
    values: Vec<Vec3>,
}

impl LatticeField {
    pub fn zeros(config: LatticeConfig) -> Self {
        Self::constant(config, Vec3::zeros())
    }

    pub fn constant(config: LatticeConfig, c: Vec3) -> Self {
        Self {
            config,
            values: vec![c; config.num_sites()],
        }
    }

    pub fn from_fn(config: LatticeConfig, mut f: impl FnMut(SiteIndex) -> Vec3) -> Self {
        let values = config.sites().map(&mut f).collect();
        Self { config, values }
    }

    pub fn from_values(config: LatticeConfig, values: Vec<Vec3>) -> Result<Self> {
        if values.len() != config.num_sites() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} sites",
                values.len(),
                config.num_sites()
            )));
        }
        Ok(Self { config, values })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    /// Value at an arbitrary integer triple (canonicalized first).
    pub fn get(&self, l: Triple) -> Vec3 {
        self.values[self.config.index_of(l)]
    }

    pub fn at(&self, s: SiteIndex) -> Vec3 {
        self.values[self.config.linear_index(s)]
    }

    pub fn mean(&self) -> Vec3 {
        let sum = self.values.iter().fold(Vec3::zeros(), |acc, v| acc + v);
        sum / self.values.len() as f64
    }

    pub fn max_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> Self {
        Self {
            config: self.config,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &LatticeField) -> Result<Self> {
        if self.config != other.config {
            return Err(Error::ConfigMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b * alpha)
            .collect();
        Ok(Self {
            config: self.config,
            values,
        })
    }

    pub(crate) fn without_mean(mut self) -> Self {
        let m = self.mean();
        for v in &mut self.values {
            *v -= m;
        }
        self
    }
}

/// `(u_{l+eta} - u_l) / eps` with torus wraparound.
pub fn diff_quotient(u: &LatticeField, l: Triple, eta: Triple) -> Result<Vec3> {
    if eta == [0, 0, 0] {
        return Err(Error::ZeroBond);
    }
    Ok((u.get(add(l, eta)) - u.get(l)) / u.config.spacing)
}

/// `<u, w>_eps = eps^3 sum_l u_l . w_l`.
pub fn discrete_inner_product(u: &LatticeField, w: &LatticeField) -> Result<f64> {
    if u.config != w.config {
        return Err(Error::ConfigMismatch);
    }
    let sum: f64 = u.values.iter().zip(&w.values).map(|(a, b)| a.dot(b)).sum();
    Ok(sum * u.config.spacing.powi(3))
}

/// `y_l = F x_l + v_l` with a zero-average periodic displacement `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    gradient: Mat3,
    displacement: LatticeField,
}

impl Deformation {
    pub fn homogeneous(config: LatticeConfig, gradient: Mat3) -> Result<Self> {
        make_deformation(gradient, LatticeField::zeros(config))
    }

    pub fn gradient(&self) -> &Mat3 {
        &self.gradient
    }

    pub fn displacement(&self) -> &LatticeField {
        &self.displacement
    }

    pub fn config(&self) -> &LatticeConfig {
        self.displacement.config()
    }

    /// Deformed position of an unwrapped lattice vector.
    pub fn position(&self, l: Triple) -> Vec3 {
        self.gradient * self.config().position(l) + self.displacement.get(l)
    }

    /// `F eta + (v_{l+eta} - v_l) / eps`.
    pub fn diff_quotient(&self, l: Triple, eta: Triple) -> Result<Vec3> {
        Ok(self.gradient * triple_to_vec(eta) + diff_quotient(&self.displacement, l, eta)?)
    }

    /// Same gradient, displacement replaced (and re-centred).
    pub fn with_displacement(&self, v_raw: LatticeField) -> Result<Self> {
        make_deformation(self.gradient, v_raw)
    }
}

pub fn make_deformation(gradient: Mat3, v_raw: LatticeField) -> Result<Deformation> {
    let det = gradient.determinant();
    if !(det > 0.0) {
        return Err(Error::NonPositiveDeterminant(det));
    }
    Ok(Deformation {
        gradient,
        displacement: v_raw.without_mean(),
    })
}

pub fn sample_field(config: LatticeConfig, f: impl Fn(Vec3) -> Vec3) -> LatticeField {
    LatticeField::from_fn(config, |s| f(config.position(s.triple())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg8() -> LatticeConfig {
        LatticeConfig::new([8, 8, 8], 0.25).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        let c = cfg8();
        assert_eq!(c.canonicalize([0, 0, 0]), SiteIndex([0, 0, 0]));
        assert_eq!(c.canonicalize([-1, 9, 8]), SiteIndex([7, 1, 0]));
        assert_eq!(c.canonicalize([16, -16, 5]), SiteIndex([0, 0, 5]));
        assert_eq!(canonicalize([3, 4, 5], &c), canonicalize([11, -4, 13], &c));
    }

    #[test]
    fn linear_index_roundtrip() {
        let c = LatticeConfig::new([3, 4, 5], 1.0).unwrap();
        for i in 0..c.num_sites() {
            assert_eq!(c.linear_index(c.site(i)), i);
        }
        assert_eq!(c.linear_index(SiteIndex([0, 0, 1])), 1);
        assert_eq!(c.linear_index(SiteIndex([1, 0, 0])), 20);
    }

    #[test]
    fn rejects_bad_lattices() {
        assert!(LatticeConfig::new([1, 4, 4], 1.0).is_err());
        assert!(LatticeConfig::new([4, 4, 4], 0.0).is_err());
        assert!(LatticeConfig::new([4, 4, 4], f64::NAN).is_err());
        let c = LatticeConfig::new([6, 6, 6], 1.0).unwrap();
        assert!(c.check_bond([3, 0, 0]).is_err());
        assert!(c.check_bond([2, -2, 1]).is_ok());
        assert!(matches!(
            c.check_divisibility([4, 1, 1]),
            Err(Error::CoveringMismatch { .. })
        ));
        assert!(c.check_divisibility([3, -2, 0]).is_ok());
    }

    #[test]
    fn homogeneous_difference_is_f_eta() {
        let y = Deformation::homogeneous(cfg8(), Mat3::identity()).unwrap();
        let d = y.diff_quotient([3, 5, 7], [1, 2, 1]).unwrap();
        assert_eq!(d, Vec3::new(1.0, 2.0, 1.0));
    }

    #[test]
    fn constant_field_has_zero_differences() {
        let u = LatticeField::constant(cfg8(), Vec3::new(1.0, -2.0, 3.0));
        assert_eq!(diff_quotient(&u, [2, 2, 2], [1, -1, 3]).unwrap(), Vec3::zeros());
        assert_eq!(diff_quotient(&u, [2, 2, 2], [0, 0, 0]), Err(Error::ZeroBond));
    }

    #[test]
    fn sine_difference_matches_direct_formula() {
        let c = cfg8();
        let u = LatticeField::from_fn(c, |s| {
            Vec3::new((2.0 * PI * s.0[0] as f64 / 8.0).sin(), 0.0, 0.0)
        });
        let d = diff_quotient(&u, [0, 0, 0], [1, 0, 0]).unwrap();
        // (sin(2 pi / 8) - sin 0) / 0.25
        let expected = (PI / 4.0).sin() / 0.25;
        assert!((d.x - expected).abs() < 1e-15);
        assert_eq!(d.y, 0.0);
        // wraparound: site 7 + 1 -> site 0
        let w = diff_quotient(&u, [7, 0, 0], [1, 0, 0]).unwrap();
        assert!((w.x - (0.0 - (2.0 * PI * 7.0 / 8.0).sin()) / 0.25).abs() < 1e-15);
    }

    #[test]
    fn inner_product_examples() {
        let c = LatticeConfig::new([4, 4, 4], 0.25).unwrap();
        let ones = LatticeField::constant(c, Vec3::new(1.0, 0.0, 0.0));
        assert!((discrete_inner_product(&ones, &ones).unwrap() - 1.0).abs() < 1e-15);
        let zero = LatticeField::zeros(c);
        assert_eq!(discrete_inner_product(&zero, &ones).unwrap(), 0.0);
        let other = LatticeField::zeros(cfg8());
        assert_eq!(
            discrete_inner_product(&other, &ones),
            Err(Error::ConfigMismatch)
        );
    }

    #[test]
    fn fourier_modes_are_orthogonal() {
        let c = cfg8();
        let mode = |k: [f64; 3]| {
            LatticeField::from_fn(c, move |s| {
                let phase: f64 = (0..3)
                    .map(|i| 2.0 * PI * k[i] * s.0[i] as f64 / 8.0)
                    .sum();
                Vec3::new(phase.cos(), phase.sin(), 0.0)
            })
        };
        let a = mode([1.0, 0.0, 2.0]);
        let b = mode([0.0, 3.0, 1.0]);
        assert!(discrete_inner_product(&a, &b).unwrap().abs() < 1e-13);
    }

    #[test]
    fn deformation_removes_mean() {
        let c = cfg8();
        let y = make_deformation(
            Mat3::identity(),
            LatticeField::constant(c, Vec3::new(1.0, 2.0, 3.0)),
        )
        .unwrap();
        assert!(y.displacement().max_norm() < 1e-15);

        let singular = Mat3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            make_deformation(singular, LatticeField::zeros(c)),
            Err(Error::NonPositiveDeterminant(_))
        ));
        let reflection = Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, 1.0));
        assert!(make_deformation(reflection, LatticeField::zeros(c)).is_err());
    }

    #[test]
    fn sample_field_evaluates_pointwise() {
        let c = cfg8();
        assert_eq!(sample_field(c, |_| Vec3::zeros()).max_norm(), 0.0);
        let k = Vec3::new(0.5, -1.0, 2.0);
        assert!(sample_field(c, |_| k).values().iter().all(|v| *v == k));
        let f = sample_field(c, |x| Vec3::new((2.0 * PI * x.x / 2.0).sin(), 0.0, 0.0));
        // x_1 = 0.25 * 3
        assert!((f.get([3, 1, 1]).x - (2.0 * PI * 0.75 / 2.0).sin()).abs() < 1e-15);
    }
}
