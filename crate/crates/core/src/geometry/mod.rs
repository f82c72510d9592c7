//! Type-A decompositions, P1 gradients on tetrahedra and the discrete
//! gradients of the A-CB models.
//!
//! All constructions work in integer lattice units; the spacing only enters
//! when gradients or physical volumes are requested.
//!
//! The type-A template is the Kuhn (path) subdivision: for every ordering
//! `s` of the axes, the tetrahedron with vertices
//! `l, l + m_s1 e_s1, l + m_s1 e_s1 + m_s2 e_s2, l + m`.
//! All face diagonals of a cell then run from `x_l` or into `x_{l+e1+e2+e3}`,
//! which is exactly the type-A condition, and the template is invariant
//! under lattice translations, so applying it to every cell gives a
//! conforming mesh. For a bond volume `m = eta` (signed), i.e. the image of
//! the unit template under `diag(eta)`.

pub mod covering;
pub mod simplex;

use crate::error::{Error, Result};
use crate::lattice::{add, diff_quotient, triple_to_vec, LatticeField, Mat3, Triple, Vec3};

pub use covering::{enumerate_coverings, Covering};
pub use simplex::{kuhn_paths, GridBox, Node, Simplex};

/// All orderings of `axes`, in lexicographic order.
pub fn permutations(axes: &[usize]) -> Vec<Vec<usize>> {
    if axes.len() <= 1 {
        return vec![axes.to_vec()];
    }
    let mut out = Vec::new();
    for (i, &a) in axes.iter().enumerate() {
        let mut rest = axes.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, a);
            out.push(p);
        }
    }
    out
}

/// Tetrahedron with lattice-point vertices (unwrapped integer coordinates),
/// stored with positive orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tetrahedron {
    vertices: [Triple; 4],
}

fn sub(a: Triple, b: Triple) -> Triple {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn det3(a: Triple, b: Triple, c: Triple) -> i64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

impl Tetrahedron {
    /// Reorders the last two vertices if needed so the orientation is positive.
    pub fn new(mut vertices: [Triple; 4]) -> Result<Self> {
        let d = Self::signed_six_volume(&vertices);
        if d == 0 {
            return Err(Error::DegenerateSimplex);
        }
        if d < 0 {
            vertices.swap(2, 3);
        }
        Ok(Self { vertices })
    }

    fn signed_six_volume(v: &[Triple; 4]) -> i64 {
        det3(sub(v[1], v[0]), sub(v[2], v[0]), sub(v[3], v[0]))
    }

    pub fn vertices(&self) -> &[Triple; 4] {
        &self.vertices
    }

    /// Six times the volume in lattice units (an integer).
    pub fn six_volume(&self) -> i64 {
        Self::signed_six_volume(&self.vertices)
    }

    /// Physical volume `eps^3 |T|`.
    pub fn volume(&self, eps: f64) -> f64 {
        self.six_volume() as f64 / 6.0 * eps.powi(3)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Triple, Triple)> + '_ {
        (0..4).flat_map(move |i| (i + 1..4).map(move |j| (self.vertices[i], self.vertices[j])))
    }

    /// Whether the tet contains `x` (lattice units), boundary included up to `tol`.
    pub fn contains(&self, x: &Vec3, tol: f64) -> bool {
        barycentric(&self.vertices.map(triple_to_vec), x)
            .is_some_and(|b| b.iter().all(|&l| l >= -tol))
    }
}

/// Barycentric coordinates of `x` in the tetrahedron `v`.
pub fn barycentric(v: &[Vec3; 4], x: &Vec3) -> Option<[f64; 4]> {
    let e = Mat3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let l = e.lu().solve(&(x - v[0]))?;
    Some([1.0 - l.x - l.y - l.z, l.x, l.y, l.z])
}

/// Axis-aligned box `corner + [0, m]` (componentwise, `m` may be negative)
/// split into six tetrahedra by the type-A template.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeADecomposition {
    pub corner: Triple,
    pub extents: Triple,
    pub tets: Vec<Tetrahedron>,
}

impl TypeADecomposition {
    fn build(corner: Triple, extents: Triple) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::DegenerateEta(extents));
        }
        let tets = kuhn_paths(corner, extents, &[0, 1, 2])
            .into_iter()
            .map(|p| Tetrahedron::new([p[0], p[1], p[2], p[3]]))
            .collect::<Result<_>>()?;
        Ok(Self {
            corner,
            extents,
            tets,
        })
    }

    /// `|m1 m2 m3|`, the box volume in lattice units.
    pub fn lattice_volume(&self) -> i64 {
        self.extents.iter().product::<i64>().abs()
    }

    pub fn has_edge(&self, a: Triple, b: Triple) -> bool {
        self.tets
            .iter()
            .any(|t| t.edges().any(|(p, q)| (p, q) == (a, b) || (p, q) == (b, a)))
    }
}

/// Type-A decomposition of the cell `K_l`.
pub fn decompose_cell_type_a(l: Triple) -> TypeADecomposition {
    TypeADecomposition::build(l, [1, 1, 1]).expect("unit cell is non-degenerate")
}

/// Bond volume `B_{l,eta}`: the open box with main diagonal `(x_l, x_{l+eta})`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondVolume {
    pub base: Triple,
    pub eta: Triple,
    pub decomposition: TypeADecomposition,
}

impl BondVolume {
    /// Componentwise minimum corner.
    pub fn min_corner(&self) -> Triple {
        std::array::from_fn(|i| self.base[i] + self.eta[i].min(0))
    }

    pub fn grid_box(&self) -> GridBox {
        let lo = self.min_corner();
        GridBox::new(lo, std::array::from_fn(|i| lo[i] + self.eta[i].abs()))
    }
}

pub fn decompose_bond_volume_type_a(l: Triple, eta: Triple) -> Result<BondVolume> {
    if eta.contains(&0) {
        return Err(Error::DegenerateEta(eta));
    }
    Ok(BondVolume {
        base: l,
        eta,
        decomposition: TypeADecomposition::build(l, eta)?,
    })
}

/// Constant gradient of the affine interpolant of `nodal` on `tet`.
/// Rows are components of the field, columns spatial directions.
pub fn p1_gradient(tet: &Tetrahedron, eps: f64, nodal: &[Vec3; 4]) -> Result<Mat3> {
    let v = tet.vertices.map(|x| triple_to_vec(x) * eps);
    let e = Mat3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let einv = e.try_inverse().ok_or(Error::DegenerateSimplex)?;
    let d = Mat3::from_columns(&[nodal[1] - nodal[0], nodal[2] - nodal[0], nodal[3] - nodal[0]]);
    Ok(d * einv)
}

/// Coefficients `c_j` with `grad(u) eta = (1/eps) sum_j c_j u_j` for the
/// affine interpolant on the simplex with the given vertices (lattice
/// units). Works in any dimension `k = points.len() - 1 <= 3`, provided
/// `eta` lies in the span of the edges. The coefficients sum to zero.
pub fn p1_stencil(points: &[Vec3], eta: &Vec3) -> Result<Vec<f64>> {
    let k = points.len() - 1;
    let edges: Vec<Vec3> = points[1..].iter().map(|p| p - points[0]).collect();
    // Solve the k x k normal equations E^T E c = E^T eta.
    let mut g = nalgebra::DMatrix::<f64>::zeros(k, k);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    for i in 0..k {
        rhs[i] = edges[i].dot(eta);
        for j in 0..k {
            g[(i, j)] = edges[i].dot(&edges[j]);
        }
    }
    let c = g.lu().solve(&rhs).ok_or(Error::DegenerateSimplex)?;
    let mut out = Vec::with_capacity(k + 1);
    out.push(-c.iter().sum::<f64>());
    out.extend(c.iter());
    Ok(out)
}

/// `grad~ u` on a tet of a cell decomposition: column `a` is the difference
/// quotient of `u` along the tet edge parallel to `e_a`.
pub fn tilde_gradient(tet: &Tetrahedron, u: &LatticeField) -> Result<Mat3> {
    let mut out = Mat3::zeros();
    for a in 0..3 {
        let mut e = [0i64; 3];
        e[a] = 1;
        let base = tet
            .edges()
            .find_map(|(p, q)| {
                if sub(q, p) == e {
                    Some(p)
                } else if sub(p, q) == e {
                    Some(q)
                } else {
                    None
                }
            })
            .ok_or_else(|| {
                Error::Unsupported(format!("tetrahedron has no edge parallel to e_{}", a + 1))
            })?;
        out.set_column(a, &diff_quotient(u, base, e)?);
    }
    Ok(out)
}

/// Averaged discrete gradient of the cell `K_l`: column `a` is the mean of
/// the four difference quotients along the cell edges parallel to `e_a`.
pub fn averaged_gradient(l: Triple, u: &LatticeField) -> Mat3 {
    let mut out = Mat3::zeros();
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let mut e = [0i64; 3];
        e[a] = 1;
        let mut s = Vec3::zeros();
        for (db, dc) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let mut p = l;
            p[b] += db;
            p[c] += dc;
            s += diff_quotient(u, p, e).expect("unit step is nonzero");
        }
        out.set_column(a, &(s * 0.25));
    }
    out
}

/// Lemma identity `eps^3 D_eta u_l = (1/|eta1 eta2 eta3|) int_B grad(u) eta`
/// on the bond volume's own type-A tets. Returns the max-norm of the
/// difference divided by `eps^3 |eta| max|u| / eps`.
///
/// Both sides carry the factor `eps^2`, so they are compared in lattice
/// units. On a tet with edge matrix `E`, `6|T| grad(u) eta = D c` with the
/// nodal differences `D` and the integer vector `c = adj(E) eta`,
/// so no division happens: an affine field with dyadic coefficients gives an
/// exact zero on any lattice.
pub fn bond_volume_lemma_residual(u: &LatticeField, l: Triple, eta: Triple) -> Result<f64> {
    let bv = decompose_bond_volume_type_a(l, eta)?;
    // eps D_eta u_l, without dividing and multiplying by eps
    let lhs = u.get(add(l, eta)) - u.get(l);
    let mut rhs = Vec3::zeros();
    let mut six = 0;
    for t in &bv.decomposition.tets {
        let v = t.vertices;
        let e: [Triple; 3] = std::array::from_fn(|j| sub(v[j + 1], v[0]));
        // tets are positively oriented, so det E = 6|T| > 0
        let c = adjugate_times(&e, eta);
        for j in 0..3 {
            rhs += (u.get(v[j + 1]) - u.get(v[0])) * c[j] as f64;
        }
        six += t.six_volume();
    }
    let lhs = lhs * six as f64;
    let scale = triple_to_vec(eta).norm() * u.max_norm() * six as f64;
    let diff = (lhs - rhs).amax();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// `adj(E) x` for the matrix `E` with columns `e`; rows of the adjugate are
/// the cross products of pairs of columns.
fn adjugate_times(e: &[Triple; 3], x: Triple) -> Triple {
    let cross = |p: Triple, q: Triple| [p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
    let dot = |p: Triple, q: Triple| p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    [dot(cross(e[1], e[2]), x), dot(cross(e[2], e[0]), x), dot(cross(e[0], e[1]), x)]
}

/// `l + eta` for the far corner of a bond.
pub fn bond_end(l: Triple, eta: Triple) -> Triple {
    add(l, eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeConfig, SiteIndex};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(cfg: LatticeConfig, rng: &mut ChaCha8Rng) -> LatticeField {
        LatticeField::from_fn(cfg, |_| {
            Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn permutations_are_lexicographic() {
        assert_eq!(
            permutations(&[0, 1, 2]),
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
    }

    #[test]
    fn cell_decomposition_properties() {
        let d = decompose_cell_type_a([3, -1, 2]);
        assert_eq!(d.tets.len(), 6);
        assert!(d.tets.iter().all(|t| t.six_volume() == 1));
        let l = [3, -1, 2];
        assert!(d.has_edge(l, add(l, [1, 0, 1])));
        assert!(d.has_edge(add(l, [0, 1, 0]), add(l, [1, 1, 1])));
        // every tet has exactly three cell edges (unit steps)
        for t in &d.tets {
            let n = t
                .edges()
                .filter(|(p, q)| sub(*q, *p).iter().map(|c| c.abs()).sum::<i64>() == 1)
                .count();
            assert_eq!(n, 3);
        }
    }

    #[test]
    fn cell_decomposition_partitions_the_cell() {
        let d = decompose_cell_type_a([0, 0, 0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let x = Vec3::new(rng.gen(), rng.gen(), rng.gen());
            let n = d.tets.iter().filter(|t| t.contains(&x, 0.0)).count();
            assert_eq!(n, 1, "point {x:?}");
        }
    }

    #[test]
    fn bond_volume_examples() {
        let one = decompose_bond_volume_type_a([2, 2, 2], [1, 1, 1]).unwrap();
        assert_eq!(one.decomposition, decompose_cell_type_a([2, 2, 2]));
        let bv = decompose_bond_volume_type_a([0, 0, 0], [2, 1, 3]).unwrap();
        let total: i64 = bv.decomposition.tets.iter().map(|t| t.six_volume()).sum();
        assert_eq!(total, 36);
        assert!((bv.decomposition.tets.iter().map(|t| t.volume(1.0)).sum::<f64>() - 6.0).abs() < 1e-14);
        assert!(bv.decomposition.has_edge([0, 0, 0], [2, 0, 3]));
        assert!(bv.decomposition.has_edge([0, 1, 0], [2, 1, 3]));
        assert!(matches!(
            decompose_bond_volume_type_a([0, 0, 0], [1, 0, 2]),
            Err(Error::DegenerateEta(_))
        ));
    }

    #[test]
    fn negative_bond_volume_is_reflected_box() {
        let bv = decompose_bond_volume_type_a([5, 5, 5], [1, -1, 2]).unwrap();
        assert_eq!(bv.min_corner(), [5, 4, 5]);
        assert!(bv.decomposition.tets.iter().all(|t| t.six_volume() == 2));
        // main diagonal is the bond
        assert!(bv.decomposition.has_edge([5, 5, 5], [6, 4, 7]));
    }

    #[test]
    fn p1_gradient_examples() {
        let t = Tetrahedron::new([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]).unwrap();
        let a = Mat3::new(1.0, 2.0, 3.0, -1.0, 0.5, 0.0, 0.25, 0.0, 2.0);
        let eps = 0.5;
        let nodal = t.vertices.map(|x| a * triple_to_vec(x) * eps);
        assert!((p1_gradient(&t, eps, &nodal).unwrap() - a).norm() < 1e-14);
        let c = [Vec3::new(1.0, 1.0, 1.0); 4];
        assert_eq!(p1_gradient(&t, eps, &c).unwrap(), Mat3::zeros());
        assert!(Tetrahedron::new([[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 0, 1]]).is_err());
    }

    #[test]
    fn p1_gradient_of_indicator_matches_linear_solve() {
        // Oracle: solve [1 x y z] coefficients of the shape function with a 4x4 system.
        let t = Tetrahedron::new([[0, 0, 0], [2, 1, 0], [0, 1, 1], [1, 0, 3]]).unwrap();
        let pts = t.vertices.map(triple_to_vec);
        for k in 0..4 {
            let m = nalgebra::Matrix4::from_fn(|i, j| if j == 0 { 1.0 } else { pts[i][j - 1] });
            let mut rhs = nalgebra::Vector4::zeros();
            rhs[k] = 1.0;
            let coef = m.lu().solve(&rhs).unwrap();
            let mut nodal = [Vec3::zeros(); 4];
            nodal[k] = Vec3::new(1.0, 0.0, 0.0);
            let g = p1_gradient(&t, 1.0, &nodal).unwrap();
            for a in 0..3 {
                assert!((g[(0, a)] - coef[a + 1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn p1_stencil_reproduces_gradient_projection() {
        let t = Tetrahedron::new([[0, 0, 0], [2, 1, 0], [0, 1, 1], [1, 0, 3]]).unwrap();
        let eta = Vec3::new(1.0, -2.0, 0.5);
        let pts: Vec<Vec3> = t.vertices.iter().map(|&x| triple_to_vec(x)).collect();
        let c = p1_stencil(&pts, &eta).unwrap();
        let nodal = [
            Vec3::new(0.3, 0.1, -0.2),
            Vec3::new(-0.5, 0.4, 0.0),
            Vec3::new(0.9, -0.3, 0.2),
            Vec3::new(0.1, 0.7, 0.6),
        ];
        let expected = p1_gradient(&t, 1.0, &nodal).unwrap() * eta;
        let got: Vec3 = (0..4).map(|j| nodal[j] * c[j]).sum();
        assert!((expected - got).norm() < 1e-14);
        // planar case: a triangle and an in-plane direction
        let tri = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 3.0)];
        let c = p1_stencil(&tri, &Vec3::new(2.0, 0.0, 3.0)).unwrap();
        assert!((c[0] + 2.0).abs() < 1e-14 && (c[1] - 1.0).abs() < 1e-14 && (c[2] - 1.0).abs() < 1e-14, "{c:?}");
    }

    #[test]
    fn tilde_gradient_examples() {
        let cfg = LatticeConfig::new([6, 6, 6], 0.25).unwrap();
        let l = [1, 2, 3];
        // Kuhn path e3, e1, e2
        let t = Tetrahedron::new([l, add(l, [0, 0, 1]), add(l, [1, 0, 1]), add(l, [1, 1, 1])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_field(cfg, &mut rng);
        let g = tilde_gradient(&t, &u).unwrap();
        let col3: Vec3 = g.column(2).into();
        let col2: Vec3 = g.column(1).into();
        assert_eq!(col3, diff_quotient(&u, l, [0, 0, 1]).unwrap());
        assert_eq!(col2, diff_quotient(&u, add(l, [1, 0, 1]), [0, 1, 0]).unwrap());
        // equals the P1 gradient of the interpolant on every cell tet
        for s in [[0, 0, 0], [5, 5, 5], [2, 0, 4]] {
            for t in decompose_cell_type_a(s).tets {
                let nodal = t.vertices.map(|x| u.get(x));
                let p1 = p1_gradient(&t, 0.25, &nodal).unwrap();
                let tg = tilde_gradient(&t, &u).unwrap();
                assert!((p1 - tg).amax() <= 1e-13 * tg.amax().max(1.0));
            }
        }
        // homogeneous deformation
        let f = Mat3::new(1.0, 0.1, 0.0, 0.2, 1.1, -0.3, 0.0, 0.05, 0.9);
        let uf = LatticeField::from_fn(cfg, |s| f * cfg.position(s.triple()));
        let t0 = decompose_cell_type_a([1, 1, 1]).tets[3];
        assert!((tilde_gradient(&t0, &uf).unwrap() - f).amax() < 1e-13);
    }

    #[test]
    fn averaged_gradient_examples() {
        let cfg = LatticeConfig::new([6, 6, 6], 0.5).unwrap();
        let l = [2, 2, 2];
        let c = Vec3::new(1.0, -2.0, 0.5);
        let u = LatticeField::from_fn(cfg, |s| if s == SiteIndex([3, 2, 2]) { c } else { Vec3::zeros() });
        let g = averaged_gradient(l, &u);
        let col1: Vec3 = g.column(0).into();
        assert!((col1 - c / (4.0 * 0.5)).norm() < 1e-15);
        // u_{l+e1} appears as the tail of the e2 and e3 edges at l+e1: -c/(4 eps)
        let col2: Vec3 = g.column(1).into();
        assert!((col2 + c / 2.0).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_field(cfg, &mut rng);
        let get = |d: [i64; 3]| u.get(add(l, d));
        let e = 0.5;
        let lit1 = ((get([1, 0, 0]) - get([0, 0, 0]))
            + (get([1, 1, 0]) - get([0, 1, 0]))
            + (get([1, 0, 1]) - get([0, 0, 1]))
            + (get([1, 1, 1]) - get([0, 1, 1])))
            / (4.0 * e);
        let lit3 = ((get([0, 0, 1]) - get([0, 0, 0]))
            + (get([1, 0, 1]) - get([1, 0, 0]))
            + (get([0, 1, 1]) - get([0, 1, 0]))
            + (get([1, 1, 1]) - get([1, 1, 0])))
            / (4.0 * e);
        let g = averaged_gradient(l, &u);
        assert!((Vec3::from(g.column(0)) - lit1).amax() < 1e-14);
        assert!((Vec3::from(g.column(2)) - lit3).amax() < 1e-14);
    }

    #[test]
    fn lemma_holds_for_affine_and_random_fields() {
        let cfg = LatticeConfig::new([8, 8, 8], 0.1).unwrap();
        // dyadic entries on integer positions keep every operation exact
        let a = Mat3::new(0.375, -1.0, 2.0, 0.0, 1.25, 0.5, -0.25, 0.125, 0.75);
        let affine = LatticeField::from_fn(cfg, |s| a * triple_to_vec(s.triple()));
        // interior base so no wraparound breaks affinity
        for eta in [[2, 1, 3], [-3, 2, -1], [3, -3, 2]] {
            assert_eq!(bond_volume_lemma_residual(&affine, [3, 3, 3], eta).unwrap(), 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_field(cfg, &mut rng);
        for eta in [[2, 1, 3], [-1, 2, -3], [1, 1, 1], [3, -3, 1]] {
            assert!(bond_volume_lemma_residual(&u, [7, 0, 3], eta).unwrap() <= 1e-13);
        }
    }

    #[test]
    fn lemma_right_side_matches_subdivision_quadrature() {
        // Oracle: midpoint rule on a 24^3 subgrid of the box, locating each
        // sample point in its tet by barycentric coordinates.
        let cfg = LatticeConfig::new([8, 8, 8], 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(cfg, &mut rng);
        let (l, eta) = ([1, 2, 0], [2, -1, 3]);
        let bv = decompose_bond_volume_type_a(l, eta).unwrap();
        let lo = bv.min_corner();
        let n = 24;
        let mut acc = Vec3::zeros();
        let grads: Vec<Vec3> = bv
            .decomposition
            .tets
            .iter()
            .map(|t| p1_gradient(t, 1.0, &t.vertices.map(|x| u.get(x))).unwrap() * triple_to_vec(eta))
            .collect();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = Vec3::new(
                        lo[0] as f64 + 2.0 * (i as f64 + 0.5) / n as f64,
                        lo[1] as f64 + (j as f64 + 0.5) / n as f64,
                        lo[2] as f64 + 3.0 * (k as f64 + 0.5) / n as f64,
                    );
                    let t = bv.decomposition.tets.iter().position(|t| t.contains(&x, 1e-12)).unwrap();
                    acc += grads[t];
                }
            }
        }
        // box volume 6, divided by |eta1 eta2 eta3| = 6: the quadrature mean.
        let quad = acc / (n * n * n) as f64;
        let exact = diff_quotient(&u, l, eta).unwrap();
        assert!((quad - exact).amax() < 0.05 * exact.amax().max(1.0));
    }
}
