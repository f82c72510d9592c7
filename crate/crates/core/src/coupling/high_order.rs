//! High-order finite element coupling.
//!
//! `Omega_*` is meshed by the cell Kuhn tetrahedra. Elements with a vertex
//! on the closed atomistic box carry P1, all others P_k. P_k nodes on an
//! edge or face shared with a P1 element are tied to the linear
//! interpolant of that entity's vertices, which keeps the space conforming;
//! every other non-vertex node is an independent dof. The atomistic and
//! interface parts are those of the conforming model.

use std::collections::{HashMap, HashSet};

use crate::assembly::{reduce_indexed, Dof, DofVec, EvalContext, Reduction, TermSet};
use crate::energies::{kuhn_stencil, EnergyReport, ModelKind, Region, TermModel};
use crate::error::{Error, Result};
use crate::geometry::permutations;
use crate::lattice::{Deformation, LatticeConfig, Triple, Vec3};
use crate::potentials::InteractionSet;

use super::conforming::{
    all_interface_cells, atomistic_terms, continuum_terms, interface_terms, is_degenerate, validate, CouplingOptions,
};
use super::partition::RegionPartition;
use super::quadrature::TetRule;
use super::CoupledModel;

/// Multi-indices `alpha` with `|alpha| = k` over four barycentric
/// coordinates, in lexicographic order.
pub(crate) fn multi_indices(k: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in (0..=k).rev() {
        for b in (0..=k - a).rev() {
            for c in (0..=k - a - b).rev() {
                out.push([a, b, c, k - a - b - c]);
            }
        }
    }
    out
}

/// `P_a(t) = prod_{j<a} (k t - j) / (j + 1)` and its derivative.
fn lagrange_factor(k: usize, a: usize, t: f64) -> (f64, f64) {
    let kf = k as f64;
    let mut p = 1.0;
    let mut dp = 0.0;
    for j in 0..a {
        let jf = j as f64;
        let f = (kf * t - jf) / (jf + 1.0);
        let df = kf / (jf + 1.0);
        dp = dp * f + p * df;
        p *= f;
    }
    (p, dp)
}

/// Value and barycentric partial derivatives of the Lagrange basis function
/// `N_alpha = prod_i P_{alpha_i}(lambda_i)`.
pub(crate) fn lagrange_basis(k: usize, alpha: &[usize; 4], lambda: &[f64; 4]) -> (f64, [f64; 4]) {
    let f: Vec<(f64, f64)> = (0..4).map(|i| lagrange_factor(k, alpha[i], lambda[i])).collect();
    let value = f.iter().map(|x| x.0).product();
    let mut d = [0.0; 4];
    for (i, di) in d.iter_mut().enumerate() {
        *di = (0..4).map(|j| if j == i { f[j].1 } else { f[j].0 }).product();
    }
    (value, d)
}

/// Vertices of the Kuhn tet of the unit cell at `l` for the axis order `perm`.
fn kuhn_vertices(l: Triple, perm: &[usize]) -> [Triple; 4] {
    let mut v = [l; 4];
    for (i, &a) in perm.iter().enumerate() {
        v[i + 1] = v[i];
        v[i + 1][a] += 1;
    }
    v
}

/// Lattice-unit gradients of the barycentric coordinates of a Kuhn tet.
fn kuhn_lambda_gradients(perm: &[usize]) -> [Vec3; 4] {
    let e = |a: usize| {
        let mut v = Vec3::zeros();
        v[a] = 1.0;
        v
    };
    [-e(perm[0]), e(perm[0]) - e(perm[1]), e(perm[1]) - e(perm[2]), e(perm[2])]
}

/// Degree-k elements, evaluated on the fly.
#[derive(Debug, Clone)]
pub(crate) struct Elements {
    weight: f64,
    quad: Vec<f64>,
    /// `coef[shape][law][q * nodes + n] = grad N_n(x_q) . eta` (lattice units).
    coef: Vec<Vec<Vec<f64>>>,
    nodes: usize,
    shape: Vec<u8>,
    /// Node `n` of element `e` is `sum w_j u(dof_j)` over
    /// `node_dofs[node_off[e * nodes + n]..node_off[e * nodes + n + 1]]`.
    node_off: Vec<usize>,
    node_dofs: Vec<(Dof, f64)>,
    /// Linear interpolation stencil of each extra dof.
    extra_interp: Vec<Vec<(usize, f64)>>,
}

impl Elements {
    pub(crate) fn len(&self) -> usize {
        self.shape.len()
    }

    pub(crate) fn num_extras(&self) -> usize {
        self.extra_interp.len()
    }

    pub(crate) fn interpolate(&self, sites: &[Vec3]) -> Vec<Vec3> {
        self.extra_interp
            .iter()
            .map(|st| st.iter().map(|&(s, w)| sites[s] * w).sum())
            .collect()
    }

    fn node_stencil(&self, e: usize, n: usize) -> &[(Dof, f64)] {
        let i = e * self.nodes + n;
        &self.node_dofs[self.node_off[i]..self.node_off[i + 1]]
    }

    pub(crate) fn evaluate(
        &self,
        ctx: &EvalContext<'_>,
        x: &DofVec,
        grad: &mut DofVec,
        mode: Reduction,
    ) -> Result<f64> {
        let nn = self.nodes;
        reduce_indexed(self.len(), ctx.space, grad, mode, |e, g| {
            let mut u = vec![Vec3::zeros(); nn];
            for (n, un) in u.iter_mut().enumerate() {
                for &(d, w) in self.node_stencil(e, n) {
                    *un += x.value(ctx.space, d) * w;
                }
            }
            let mut gn = vec![Vec3::zeros(); nn];
            let mut energy = 0.0;
            let shape = &self.coef[self.shape[e] as usize];
            for (law, c) in shape.iter().enumerate() {
                for (q, wq) in self.quad.iter().enumerate() {
                    let cq = &c[q * nn..(q + 1) * nn];
                    let mut s = Vec3::zeros();
                    for (un, &cn) in u.iter().zip(cq) {
                        s += un * cn;
                    }
                    let zeta = ctx.f_eta[law] + s * ctx.inv_eps;
                    let phi = ctx.phi(law, &zeta)?;
                    let w = self.weight * wq;
                    energy += w * phi.value;
                    let gq = phi.grad * (w * ctx.inv_eps);
                    for (gv, &cn) in gn.iter_mut().zip(cq) {
                        *gv += gq * cn;
                    }
                }
            }
            for (n, gv) in gn.iter().enumerate() {
                for &(d, w) in self.node_stencil(e, n) {
                    g.scatter(ctx.space, d, gv * w);
                }
            }
            Ok(energy)
        })
    }
}

fn canonical_entity(cfg: &LatticeConfig, verts: impl Iterator<Item = Triple>) -> Vec<Triple> {
    let mut v: Vec<Triple> = verts.map(|p| cfg.canonicalize(p).triple()).collect();
    v.sort();
    v
}

/// Every sub-simplex with at least two vertices.
fn sub_entities(cfg: &LatticeConfig, verts: &[Triple; 4]) -> Vec<Vec<Triple>> {
    (1u32..16)
        .filter(|m| m.count_ones() >= 2)
        .map(|m| canonical_entity(cfg, (0..4).filter(|i| m >> i & 1 == 1).map(|i| verts[i])))
        .collect()
}

/// Continuum part of the high-order model: stored P1 terms and P_k elements.
fn continuum_parts(part: &RegionPartition, laws: &InteractionSet, k: usize) -> (TermSet, Elements) {
    let cfg = part.config();
    let (lo, hi) = (part.lo(), part.hi());
    let n = cfg.extents();
    let touches = |p: Triple| {
        let c = cfg.canonicalize(p).triple();
        (0..3).all(|i| lo[i] <= c[i] && c[i] <= hi[i])
    };
    let perms = permutations(&[0, 1, 2]);
    let mut cells = Vec::new();
    for s in cfg.sites() {
        let l = s.triple();
        if part.cell_in_atomistic(l) {
            continue;
        }
        for (pi, perm) in perms.iter().enumerate() {
            let v = kuhn_vertices(l, perm);
            cells.push((l, pi, v, v.iter().any(|&p| touches(p))));
        }
    }
    let mut p1_entities = HashSet::new();
    for (_, _, v, p1) in &cells {
        if *p1 {
            p1_entities.extend(sub_entities(cfg, v));
        }
    }

    let e3 = cfg.spacing().powi(3);
    let mut p1_terms = TermSet::new();
    let mut el = Elements {
        weight: e3 / 6.0,
        quad: Vec::new(),
        coef: Vec::new(),
        nodes: 0,
        shape: Vec::new(),
        node_off: vec![0],
        node_dofs: Vec::new(),
        extra_interp: Vec::new(),
    };
    let alphas = multi_indices(k);
    el.nodes = alphas.len();
    let rule = TetRule::with_exactness(2 * k + 1);
    el.quad = rule.weights.clone();
    for perm in &perms {
        let gl = kuhn_lambda_gradients(perm);
        let mut per_law = Vec::new();
        for law in laws.laws() {
            let eta = law.eta();
            let ev = Vec3::new(eta[0] as f64, eta[1] as f64, eta[2] as f64);
            let mut c = Vec::with_capacity(rule.len() * alphas.len());
            for lam in &rule.points {
                for a in &alphas {
                    let (_, d) = lagrange_basis(k, a, lam);
                    let gr: Vec3 = (0..4).map(|i| gl[i] * d[i]).sum();
                    c.push(gr.dot(&ev));
                }
            }
            per_law.push(c);
        }
        el.coef.push(per_law);
    }

    let kk = k as i64;
    let fine: [i64; 3] = std::array::from_fn(|i| kk * n[i] as i64);
    let mut extra_of: HashMap<Triple, usize> = HashMap::new();
    for (_, pi, v, p1) in &cells {
        if *p1 {
            for (law_idx, law) in laws.laws().iter().enumerate() {
                p1_terms.push(law_idx, e3 / 6.0, kuhn_stencil(cfg, v, law.eta()));
            }
            continue;
        }
        el.shape.push(*pi as u8);
        for a in &alphas {
            let support: Vec<usize> = (0..4).filter(|&i| a[i] > 0).collect();
            if support.len() == 1 {
                el.node_dofs.push((Dof::Site(cfg.index_of(v[support[0]])), 1.0));
            } else {
                let interp: Vec<(usize, f64)> = support
                    .iter()
                    .map(|&i| (cfg.index_of(v[i]), a[i] as f64 / k as f64))
                    .collect();
                let entity = canonical_entity(cfg, support.iter().map(|&i| v[i]));
                if p1_entities.contains(&entity) {
                    el.node_dofs.extend(interp.iter().map(|&(s, w)| (Dof::Site(s), w)));
                } else {
                    let fc: Triple = std::array::from_fn(|d| {
                        (0..4).map(|i| a[i] as i64 * v[i][d]).sum::<i64>().rem_euclid(fine[d])
                    });
                    let next = extra_of.len();
                    let id = *extra_of.entry(fc).or_insert(next);
                    if id == el.extra_interp.len() {
                        el.extra_interp.push(interp);
                    }
                    el.node_dofs.push((Dof::Extra(id), 1.0));
                }
            }
            el.node_off.push(el.node_dofs.len());
        }
    }
    (p1_terms, el)
}

pub fn high_order_model(
    part: &RegionPartition,
    laws: &InteractionSet,
    k: usize,
    opts: CouplingOptions,
) -> Result<CoupledModel> {
    if k == 0 {
        return Err(Error::Unsupported("polynomial degree must be at least 1".into()));
    }
    if let Some(law) = laws.laws().iter().find(|l| is_degenerate(l.eta())) {
        return Err(Error::Unsupported(format!(
            "high-order coupling needs eta_1 eta_2 eta_3 != 0 (got {:?})",
            law.eta()
        )));
    }
    validate(part, laws, opts)?;
    let cfg = part.config();
    let kind = ModelKind::CoupledHo(k);
    let cells = all_interface_cells(part, laws, opts.scheme)?;
    let mut terms = TermModel::new(kind, *cfg);
    terms.sets.push((Region::Atomistic, atomistic_terms(part, laws)?));
    let elements = if k == 1 {
        terms.sets.push((Region::Continuum, continuum_terms(part, laws)));
        None
    } else {
        let (p1, el) = continuum_parts(part, laws, k);
        terms.sets.push((Region::Continuum, p1));
        terms.space.num_extras = el.num_extras();
        Some(el)
    };
    terms.sets.push((Region::Interface, interface_terms(cfg, &cells, &Dof::Site)?));
    Ok(CoupledModel {
        partition: *part,
        options: opts,
        terms,
        jumps: None,
        elements,
    })
}

/// `E_h` for site displacements and finite element coefficients. `extras`
/// defaults to the linear interpolant of the site values.
pub fn high_order_energy(
    y: &Deformation,
    extras: Option<&[Vec3]>,
    laws: &InteractionSet,
    part: &RegionPartition,
    k: usize,
    opts: CouplingOptions,
    mode: Reduction,
) -> Result<EnergyReport> {
    if y.config() != part.config() {
        return Err(Error::ConfigMismatch);
    }
    let m = high_order_model(part, laws, k, opts)?;
    let mut x = m.embed(y);
    if let Some(e) = extras {
        if e.len() != x.extras.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} additional nodes",
                e.len(),
                x.extras.len()
            )));
        }
        x.extras = e.to_vec();
    }
    m.evaluate_state(laws, y.gradient(), &x, mode)
}
