//! Pair potentials `phi_eta` and the Cauchy–Born stored energy built from them.

use crate::error::{Error, Result};
use crate::lattice::{triple_to_vec, Mat3, Triple, Vec3};

/// Value, gradient and Hessian of a potential at one bond configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEval {
    pub value: f64,
    pub grad: Vec3,
    pub hess: Mat3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LawKind {
    /// `phi(z) = |z|^2 / 2`.
    Harmonic,
    /// `D (1 - exp(-a (r - r0)))^2` in `r = |z|`.
    Morse { depth: f64, alpha: f64, r0: f64 },
    /// `4 e ((s/r)^12 - (s/r)^6)` in `r = |z|`.
    LennardJones { epsilon: f64, sigma: f64 },
    /// `exp(a . z) + z^T M z / 2`; deliberately without any reflection symmetry.
    AnisotropicToy { a: Vec3, m: Mat3 },
}

impl LawKind {
    pub fn name(&self) -> &'static str {
        match self {
            LawKind::Harmonic => "harmonic",
            LawKind::Morse { .. } => "morse",
            LawKind::LennardJones { .. } => "lennard-jones",
            LawKind::AnisotropicToy { .. } => "anisotropic-toy",
        }
    }

    fn is_radial(&self) -> bool {
        matches!(self, LawKind::Morse { .. } | LawKind::LennardJones { .. })
    }
}

/// A bond direction together with its potential.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionLaw {
    eta: Triple,
    kind: LawKind,
}

/// Default coefficients of the anisotropic toy law. Generic on purpose: no
/// symmetry of the potential can hide an inconsistent coupling.
pub fn default_toy_parameters() -> (Vec3, Mat3) {
    let a = Vec3::new(0.31, -0.17, 0.23);
    let m = Mat3::new(1.0, 0.21, -0.13, 0.21, 0.83, 0.17, -0.13, 0.17, 1.19);
    (a, m)
}

impl InteractionLaw {
    pub fn new(eta: Triple, kind: LawKind) -> Result<Self> {
        if eta == [0, 0, 0] {
            return Err(Error::ZeroBond);
        }
        let bad = |what: &str| Err(Error::InvalidInteractions(format!("{what} for eta = {eta:?}")));
        match &kind {
            LawKind::Morse { depth, alpha, r0 } => {
                if !(depth.is_finite() && alpha.is_finite() && *r0 > 0.0 && r0.is_finite()) {
                    return bad("invalid Morse parameters");
                }
            }
            LawKind::LennardJones { epsilon, sigma } => {
                if !(epsilon.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                    return bad("invalid Lennard-Jones parameters");
                }
            }
            LawKind::AnisotropicToy { a, m } => {
                if a.iter().chain(m.iter()).any(|x| !x.is_finite()) {
                    return bad("non-finite toy parameters");
                }
            }
            LawKind::Harmonic => {}
        }
        Ok(Self { eta, kind })
    }

    pub fn harmonic(eta: Triple) -> Result<Self> {
        Self::new(eta, LawKind::Harmonic)
    }

    /// Morse law with its minimum at the undeformed bond length `|eta|`.
    pub fn morse(eta: Triple, depth: f64, alpha: f64) -> Result<Self> {
        let r0 = triple_to_vec(eta).norm();
        Self::new(eta, LawKind::Morse { depth, alpha, r0 })
    }

    /// Lennard-Jones law with its minimum at the undeformed bond length `|eta|`.
    pub fn lennard_jones(eta: Triple, epsilon: f64) -> Result<Self> {
        let sigma = triple_to_vec(eta).norm() / 2f64.powf(1.0 / 6.0);
        Self::new(eta, LawKind::LennardJones { epsilon, sigma })
    }

    pub fn anisotropic_toy(eta: Triple) -> Result<Self> {
        let (a, m) = default_toy_parameters();
        Self::new(eta, LawKind::AnisotropicToy { a, m })
    }

    pub fn eta(&self) -> Triple {
        self.eta
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn eval(&self, zeta: &Vec3) -> Result<PhiEval> {
        match &self.kind {
            LawKind::Harmonic => Ok(PhiEval {
                value: 0.5 * zeta.norm_squared(),
                grad: *zeta,
                hess: Mat3::identity(),
            }),
            LawKind::AnisotropicToy { a, m } => {
                let e = a.dot(zeta).exp();
                let mz = m * zeta;
                Ok(PhiEval {
                    value: e + 0.5 * zeta.dot(&mz),
                    grad: a * e + mz,
                    hess: a * a.transpose() * e + m,
                })
            }
            kind => {
                debug_assert!(kind.is_radial());
                let r = zeta.norm();
                if !(r > 0.0) {
                    return Err(Error::SingularConfiguration {
                        eta: self.eta,
                        zeta: [zeta.x, zeta.y, zeta.z],
                    });
                }
                let (f, df, ddf) = match *kind {
                    LawKind::Morse { depth, alpha, r0 } => morse_radial(depth, alpha, r0, r),
                    LawKind::LennardJones { epsilon, sigma } => lj_radial(epsilon, sigma, r),
                    _ => unreachable!(),
                };
                let n = zeta / r;
                let nn = n * n.transpose();
                Ok(PhiEval {
                    value: f,
                    grad: n * df,
                    hess: nn * ddf + (Mat3::identity() - nn) * (df / r),
                })
            }
        }
    }
}

fn morse_radial(d: f64, a: f64, r0: f64, r: f64) -> (f64, f64, f64) {
    let e = (-a * (r - r0)).exp();
    let one_minus = 1.0 - e;
    (
        d * one_minus * one_minus,
        2.0 * d * a * e * one_minus,
        2.0 * d * a * a * e * (2.0 * e - 1.0),
    )
}

fn lj_radial(eps: f64, sigma: f64, r: f64) -> (f64, f64, f64) {
    let s6 = (sigma / r).powi(6);
    let s12 = s6 * s6;
    (
        4.0 * eps * (s12 - s6),
        4.0 * eps * (-12.0 * s12 + 6.0 * s6) / r,
        4.0 * eps * (156.0 * s12 - 42.0 * s6) / (r * r),
    )
}

/// Finite set `R` of distinct, nonzero interaction vectors with their laws.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSet {
    laws: Vec<InteractionLaw>,
}

impl InteractionSet {
    pub fn new(laws: Vec<InteractionLaw>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::InvalidInteractions("empty interaction set".into()));
        }
        for (i, a) in laws.iter().enumerate() {
            if let Some(b) = laws[..i].iter().find(|b| b.eta == a.eta) {
                return Err(Error::InvalidInteractions(format!(
                    "duplicate interaction vector {:?}",
                    b.eta
                )));
            }
        }
        Ok(Self { laws })
    }

    /// Same potential kind for every vector in `etas`.
    pub fn uniform(
        etas: &[Triple],
        make: impl Fn(Triple) -> Result<InteractionLaw>,
    ) -> Result<Self> {
        Self::new(etas.iter().map(|&e| make(e)).collect::<Result<_>>()?)
    }

    pub fn laws(&self) -> &[InteractionLaw] {
        &self.laws
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    /// `max_eta max_i |eta_i|`.
    pub fn max_reach(&self) -> i64 {
        self.laws
            .iter()
            .flat_map(|l| l.eta.iter().map(|c| c.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// `phi_eval` as a free function.
pub fn phi_eval(law: &InteractionLaw, zeta: &Vec3) -> Result<PhiEval> {
    law.eval(zeta)
}

/// `W_CB(F) = sum_eta phi_eta(F eta)`.
pub fn cb_energy_density(r: &InteractionSet, f: &Mat3) -> Result<f64> {
    let mut w = 0.0;
    for law in r.laws() {
        w += law.eval(&(f * triple_to_vec(law.eta)))?.value;
    }
    Ok(w)
}

/// First Piola stress `S_{i a} = sum_eta d_i phi_eta(F eta) eta_a`.
pub fn piola_stress(r: &InteractionSet, f: &Mat3) -> Result<Mat3> {
    let mut s = Mat3::zeros();
    for law in r.laws() {
        let eta = triple_to_vec(law.eta);
        s += law.eval(&(f * eta))?.grad * eta.transpose();
    }
    Ok(s)
}

/// Largest absolute entry of a matrix.
pub fn max_abs_entry(m: &Mat3) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_laws(eta: Triple) -> Vec<InteractionLaw> {
        vec![
            InteractionLaw::harmonic(eta).unwrap(),
            InteractionLaw::morse(eta, 0.7, 1.3).unwrap(),
            InteractionLaw::lennard_jones(eta, 0.4).unwrap(),
            InteractionLaw::anisotropic_toy(eta).unwrap(),
        ]
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn harmonic_examples() {
        let law = InteractionLaw::harmonic([1, 0, 0]).unwrap();
        let e = law.eval(&Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(e.value, 0.5);
        assert_eq!(e.grad, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(e.hess, Mat3::identity());
        let z = law.eval(&Vec3::zeros()).unwrap();
        assert_eq!((z.value, z.grad), (0.0, Vec3::zeros()));
    }

    #[test]
    fn morse_is_stationary_at_equilibrium() {
        // phi'(r) = 2 D a e (1 - e) with e = exp(-a (r - r0)) vanishes at r = r0.
        let eta = [2, 1, 3];
        let law = InteractionLaw::morse(eta, 0.9, 1.7).unwrap();
        let r0 = 14f64.sqrt();
        let zeta = Vec3::new(1.0, -2.0, 0.5).normalize() * r0;
        assert!(law.eval(&zeta).unwrap().grad.norm() < 1e-12);
        let lj = InteractionLaw::lennard_jones(eta, 1.0).unwrap();
        assert!(lj.eval(&zeta).unwrap().grad.norm() < 1e-12);
    }

    #[test]
    fn radial_laws_reject_zero_length() {
        let law = InteractionLaw::lennard_jones([1, 1, 1], 1.0).unwrap();
        assert!(matches!(
            law.eval(&Vec3::zeros()),
            Err(Error::SingularConfiguration { .. })
        ));
    }

    #[test]
    fn interaction_set_validation() {
        let h = |e| InteractionLaw::harmonic(e).unwrap();
        assert!(InteractionSet::new(vec![h([1, 1, 1]), h([1, 1, 1])]).is_err());
        assert!(InteractionSet::new(vec![]).is_err());
        assert_eq!(InteractionLaw::harmonic([0, 0, 0]), Err(Error::ZeroBond));
        let r = InteractionSet::new(vec![h([1, 1, 1]), h([2, -1, 3])]).unwrap();
        assert_eq!(r.max_reach(), 3);
    }

    #[test]
    fn cb_density_examples() {
        let h = |e| InteractionLaw::harmonic(e).unwrap();
        let r1 = InteractionSet::new(vec![h([1, 1, 1])]).unwrap();
        assert_eq!(cb_energy_density(&r1, &Mat3::identity()).unwrap(), 1.5);
        assert_eq!(cb_energy_density(&r1, &Mat3::zeros()).unwrap(), 0.0);
        let r2 = InteractionSet::new(vec![h([1, 1, 1]), h([2, 1, 1])]).unwrap();
        let f = Mat3::from_diagonal(&Vec3::new(1.0, 2.0, 1.0));
        assert_eq!(cb_energy_density(&r2, &f).unwrap(), 7.5);
    }

    #[test]
    fn stress_of_single_harmonic_bond() {
        let eta = [2, -1, 1];
        let r = InteractionSet::new(vec![InteractionLaw::harmonic(eta).unwrap()]).unwrap();
        let f = Mat3::new(1.1, 0.2, 0.0, -0.1, 0.9, 0.3, 0.05, 0.0, 1.2);
        let e = triple_to_vec(eta);
        let expected = (f * e) * e.transpose();
        assert!((piola_stress(&r, &f).unwrap() - expected).norm() < 1e-14);
        // critical point of W_CB (F = 0 for harmonic)
        assert_eq!(piola_stress(&r, &Mat3::zeros()).unwrap(), Mat3::zeros());
    }

    #[test]
    fn toy_law_has_no_reflection_symmetry() {
        let law = InteractionLaw::anisotropic_toy([1, 1, 1]).unwrap();
        let z = Vec3::new(0.7, -0.4, 1.1);
        let a = law.eval(&z).unwrap().value;
        let b = law.eval(&-z).unwrap().value;
        assert!((a - b).abs() > 1e-3);
    }

    fn arb_vec(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
        (lo..hi, lo..hi, lo..hi).prop_map(|(a, b, c)| Vec3::new(a, b, c))
    }

    fn arb_f() -> impl Strategy<Value = Mat3> {
        proptest::collection::vec(-0.15f64..0.15, 9)
            .prop_map(|v| Mat3::identity() + Mat3::from_row_slice(&v))
    }

    fn arb_eta() -> impl Strategy<Value = Triple> {
        [-2i64..=2, -2i64..=2, -2i64..=2].prop_filter("nonzero", |e| *e != [0, 0, 0])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn derivatives_match_finite_differences(eta in arb_eta(), dir in arb_vec(-1.0, 1.0)) {
            let scale = triple_to_vec(eta).norm();
            // Probe near the bond length so radial laws stay well away from r = 0.
            let zeta = triple_to_vec(eta) + dir * (0.2 * scale);
            let h = 1e-5;
            for law in all_laws(eta) {
                let e = law.eval(&zeta).unwrap();
                for i in 0..3 {
                    let mut d = Vec3::zeros();
                    d[i] = h;
                    let p = law.eval(&(zeta + d)).unwrap();
                    let m = law.eval(&(zeta - d)).unwrap();
                    let fd = (p.value - m.value) / (2.0 * h);
                    prop_assert!(rel(e.grad[i], fd) <= 1e-6, "{} grad {}", law.kind().name(), i);
                    let fdh = (p.grad - m.grad) / (2.0 * h);
                    for j in 0..3 {
                        prop_assert!(rel(e.hess[(j, i)], fdh[j]) <= 1e-6 || (e.hess[(j, i)] - fdh[j]).abs() < 1e-9,
                            "{} hess {} {}", law.kind().name(), j, i);
                    }
                }
                prop_assert!((e.hess - e.hess.transpose()).norm() < 1e-12);
            }
        }

        #[test]
        fn stress_is_derivative_of_cb_density(f in arb_f(), e1 in arb_eta(), e2 in arb_eta()) {
            prop_assume!(e1 != e2);
            for make in [
                InteractionLaw::harmonic as fn(Triple) -> Result<InteractionLaw>,
                |e| InteractionLaw::morse(e, 0.7, 1.3),
                |e| InteractionLaw::lennard_jones(e, 0.4),
                InteractionLaw::anisotropic_toy,
            ] {
                let r = InteractionSet::uniform(&[e1, e2], make).unwrap();
                let s = piola_stress(&r, &f).unwrap();
                // fourth-order stencil: LJ is stiff enough that the
                // central difference truncation error shows at 1e-9
                let h = 1e-4;
                let w = |g: &Mat3| cb_energy_density(&r, &(f + g)).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        let mut d = Mat3::zeros();
                        d[(i, j)] = h;
                        let fd = (8.0 * (w(&d) - w(&-d)) - (w(&(2.0 * d)) - w(&(-2.0 * d)))) / (12.0 * h);
                        prop_assert!(rel(s[(i, j)], fd) <= 1e-6 || (s[(i, j)] - fd).abs() < 1e-9, "{} {} {}", r.laws()[0].kind().name(), s[(i, j)], fd);
                    }
                }
            }
        }
    }
}
