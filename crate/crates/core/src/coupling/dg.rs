//! Discontinuous variant of the bond-volume coupling.
//!
//! The atomistic-side interpolant of every interface bond volume reads the
//! site values on `Gamma` through independent trace dofs, so it may jump
//! across `Gamma`. The energy subtracts, per interface bond volume,
//! `(1/|eta_1 eta_2 eta_3|) int phi'_eta(<grad y eta>) . [[y eta]] dS` over
//! the part of the piece boundary that lies on `Gamma`.
//!
//! Both traces are piecewise linear on their own face triangulations. The
//! integral runs over the common refinement with the centroid rule, which is
//! exact because the integrand is affine on every sub-triangle.

use crate::assembly::{reduce_indexed, Dof, DofVec, EvalContext, Reduction, TermSet};
use crate::energies::{EnergyReport, ModelKind};
use crate::error::{Error, Result};
use crate::geometry::simplex::{fine_triangulation, signed_kuhn};
use crate::geometry::{GridBox, Simplex};
use crate::lattice::{Deformation, LatticeConfig, Vec3};
use crate::potentials::InteractionSet;

use super::conforming::{all_interface_cells, base_terms, validate, CouplingOptions};
use super::interface::{active_measure, merge_sites, simplex_site_stencil, triangulate_face, InterfaceCell};
use super::partition::RegionPartition;
use super::CoupledModel;

/// `([[w eta]], <w>)` for traces `minus` (from `Omega_a`) and `plus` (from
/// `Omega_*`) on a face with outward normal `normal_a` of `Omega_a`:
/// `[[w eta]] = (nu_a . eta) w^- + (nu_* . eta) w^+` with `nu_* = -nu_a`.
pub fn jump_average(normal_a: &Vec3, eta: &Vec3, minus: Vec3, plus: Vec3) -> (Vec3, Vec3) {
    let n = normal_a.dot(eta);
    (minus * n - plus * n, (minus + plus) * 0.5)
}

/// Interface jump terms `-w phi'(<zeta>) . J`, stored as three parallel
/// term sets sharing law and weight: the two one-sided gradient stencils
/// and the jump stencil (no `1/eps`, no homogeneous part).
#[derive(Debug, Clone, Default)]
pub(crate) struct JumpTerms {
    minus: TermSet,
    plus: TermSet,
    jump: TermSet,
}

impl JumpTerms {
    pub(crate) fn len(&self) -> usize {
        self.minus.len()
    }

    pub(crate) fn evaluate(
        &self,
        ctx: &EvalContext<'_>,
        x: &DofVec,
        grad: &mut DofVec,
        mode: Reduction,
    ) -> Result<f64> {
        reduce_indexed(self.len(), ctx.space, grad, mode, |i, g| {
            let (m, p, j) = (self.minus.term(i), self.plus.term(i), self.jump.term(i));
            let zm = ctx.zeta(m.law, m.dofs, m.coefs, x);
            let zp = ctx.zeta(p.law, p.dofs, p.coefs, x);
            let phi = ctx.phi(m.law, &((zm + zp) * 0.5))?;
            let mut jump = Vec3::zeros();
            for (&d, &c) in j.dofs.iter().zip(j.coefs) {
                jump += x.value(ctx.space, d) * c;
            }
            let w = m.weight;
            let gz = phi.hess * jump * (-0.5 * w * ctx.inv_eps);
            for t in [m, p] {
                for (&d, &c) in t.dofs.iter().zip(t.coefs) {
                    g.scatter(ctx.space, d, gz * c);
                }
            }
            let gj = phi.grad * -w;
            for (&d, &c) in j.dofs.iter().zip(j.coefs) {
                g.scatter(ctx.space, d, gj * c);
            }
            Ok(-w * phi.grad.dot(&jump))
        })
    }
}

/// Barycentric coordinates of `q` in the simplex spanned by `p`.
fn barycentric(p: &[Vec3], q: &Vec3) -> Result<Vec<f64>> {
    let k = p.len() - 1;
    if k == 0 {
        return Ok(vec![1.0]);
    }
    let mut g = nalgebra::DMatrix::<f64>::zeros(k, k);
    let mut rhs = nalgebra::DVector::<f64>::zeros(k);
    for i in 0..k {
        let ei = p[i + 1] - p[0];
        rhs[i] = ei.dot(&(q - p[0]));
        for j in 0..k {
            g[(i, j)] = ei.dot(&(p[j + 1] - p[0]));
        }
    }
    let c = g.lu().solve(&rhs).ok_or(Error::DegenerateSimplex)?;
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0 - c.iter().sum::<f64>());
    out.extend(c.iter());
    Ok(out)
}

/// Sutherland–Hodgman clip of a convex polygon against a convex one, in 2D.
fn clip(subject: Vec<[f64; 2]>, clipper: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let area2: f64 = (0..clipper.len())
        .map(|i| {
            let (a, b) = (clipper[i], clipper[(i + 1) % clipper.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    let orient = area2.signum();
    let mut out = subject;
    for i in 0..clipper.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clipper[i], clipper[(i + 1) % clipper.len()]);
        let side = |p: &[f64; 2]| orient * ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]));
        let input = std::mem::take(&mut out);
        for j in 0..input.len() {
            let (cur, prev) = (input[j], input[(j + input.len() - 1) % input.len()]);
            let (sc, sp) = (side(&cur), side(&prev));
            if sc >= 0.0 {
                if sp < 0.0 {
                    out.push(lerp(prev, cur, sp / (sp - sc)));
                }
                out.push(cur);
            } else if sp >= 0.0 {
                out.push(lerp(prev, cur, sp / (sp - sc)));
            }
        }
    }
    out
}

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Common refinement of two face simplices as `(centroid, measure)` pairs,
/// in lattice units. `axes` are the active axes of the face.
fn overlap(a: &Simplex, b: &Simplex, axes: &[usize], plane: &Vec3) -> Vec<(Vec3, f64)> {
    let lift = |p: [f64; 2]| {
        let mut x = *plane;
        x[axes[0]] = p[0];
        x[axes[1]] = p[1];
        x
    };
    if a == b {
        let pts = a.points();
        let c = pts.iter().sum::<Vec3>() / pts.len() as f64;
        return vec![(c, a.measure())];
    }
    match axes.len() {
        0 => Vec::new(),
        1 => {
            let i = axes[0];
            let ra = a.points().iter().map(|p| p[i]).fold((f64::MAX, f64::MIN), |r, x| (r.0.min(x), r.1.max(x)));
            let rb = b.points().iter().map(|p| p[i]).fold((f64::MAX, f64::MIN), |r, x| (r.0.min(x), r.1.max(x)));
            let (lo, hi) = (ra.0.max(rb.0), ra.1.min(rb.1));
            if hi - lo <= 1e-12 {
                return Vec::new();
            }
            let mut c = a.points()[0];
            c[i] = 0.5 * (lo + hi);
            vec![(c, hi - lo)]
        }
        _ => {
            let flat = |s: &Simplex| -> Vec<[f64; 2]> { s.points().iter().map(|p| [p[axes[0]], p[axes[1]]]).collect() };
            let poly = clip(flat(a), &flat(b));
            let mut out = Vec::new();
            for k in 1..poly.len().saturating_sub(1) {
                let (p0, p1, p2) = (poly[0], poly[k], poly[k + 1]);
                let area = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])).abs();
                if area > 1e-12 {
                    let c = [(p0[0] + p1[0] + p2[0]) / 3.0, (p0[1] + p1[1] + p2[1]) / 3.0];
                    out.push((lift(c), area));
                }
            }
            out
        }
    }
}

fn owner<'a>(simplices: &'a [Simplex], face: &Simplex) -> Result<&'a Simplex> {
    simplices
        .iter()
        .find(|s| s.contains_nodes(face))
        .ok_or_else(|| Error::InvalidPartition("interface face without an owning simplex".into()))
}

/// Continuum-side d-cells across a facet of a piece.
fn plus_cells(facet: &GridBox, axis: usize, low_side: bool) -> Vec<GridBox> {
    facet
        .unit_cells()
        .into_iter()
        .map(|mut c| {
            if low_side {
                c.lo[axis] -= 1;
            } else {
                c.hi[axis] += 1;
            }
            c
        })
        .collect()
}

fn push_stencil(ts: &mut TermSet, law: usize, w: f64, st: &[(Dof, f64)]) {
    let (d, c): (Vec<Dof>, Vec<f64>) = st.iter().copied().unzip();
    ts.push_raw(law, w, &d, &c);
}

fn build_jumps(
    part: &RegionPartition,
    cells: &[Vec<InterfaceCell>],
    scheme: super::InterfaceScheme,
    map: &dyn Fn(usize) -> Dof,
    trace_of: &[Option<usize>],
) -> Result<JumpTerms> {
    let cfg: &LatticeConfig = part.config();
    let e2 = cfg.spacing().powi(2);
    let (lo, hi) = (part.lo(), part.hi());
    let mut out = JumpTerms::default();
    for cell in cells.iter().flatten() {
        let eta = cell.eta;
        let etav = Vec3::new(eta[0] as f64, eta[1] as f64, eta[2] as f64);
        let piece_axes = cell.piece.active_axes();
        let scale = e2 / active_measure(eta);
        for facet in cell.piece.facets() {
            let axis = piece_axes
                .iter()
                .copied()
                .find(|&i| facet.lo[i] == facet.hi[i])
                .expect("facet collapses one axis");
            let c = facet.lo[axis];
            let low_side = c == lo[axis];
            if c != lo[axis] && c != hi[axis] {
                continue;
            }
            let n_eta = if low_side { -etav[axis] } else { etav[axis] };
            let face_axes = facet.active_axes();
            let plane = facet.center();
            let minus_faces = triangulate_face(part, cell, &facet, scheme);
            for mf in &minus_faces {
                let ms = owner(&cell.simplices, mf)?;
                let minus_st: Vec<(Dof, f64)> = simplex_site_stencil(cfg, ms, eta)?
                    .into_iter()
                    .map(|(s, k)| (map(s), k))
                    .collect();
                for pc in plus_cells(&facet, axis, low_side) {
                    let plus_simplices = signed_kuhn(&pc, [1, 1, 1]);
                    let mut pface = pc;
                    if low_side {
                        pface.lo[axis] = c;
                    } else {
                        pface.hi[axis] = c;
                    }
                    for pf in fine_triangulation(&pface) {
                        let pieces = overlap(mf, &pf, &face_axes, &plane);
                        if pieces.is_empty() {
                            continue;
                        }
                        let ps = owner(&plus_simplices, &pf)?;
                        let plus_st: Vec<(Dof, f64)> = simplex_site_stencil(cfg, ps, eta)?
                            .into_iter()
                            .map(|(s, k)| (Dof::Site(s), k))
                            .collect();
                        for (q, area) in pieces {
                            let bm = barycentric(&mf.points(), &q)?;
                            let bp = barycentric(&pf.points(), &q)?;
                            let mut raw_m = Vec::new();
                            for (node, b) in mf.nodes().iter().zip(&bm) {
                                for (p, w) in node.expand() {
                                    raw_m.push((cfg.index_of(p), b * w));
                                }
                            }
                            let mut raw_p = Vec::new();
                            for (node, b) in pf.nodes().iter().zip(&bp) {
                                for (p, w) in node.expand() {
                                    raw_p.push((cfg.index_of(p), b * w));
                                }
                            }
                            let jump_st = jump_stencil(merge_sites(raw_m), merge_sites(raw_p), n_eta, trace_of)?;
                            let w = scale * area;
                            push_stencil(&mut out.minus, cell.law, w, &minus_st);
                            push_stencil(&mut out.plus, cell.law, w, &plus_st);
                            push_stencil(&mut out.jump, cell.law, w, &jump_st);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `J = n [sum_s bm_s (v_s + d_s) - sum_s bp_s v_s]`, with the site parts
/// merged so that matching traces cancel exactly.
fn jump_stencil(
    minus: Vec<(usize, f64)>,
    plus: Vec<(usize, f64)>,
    n: f64,
    trace_of: &[Option<usize>],
) -> Result<Vec<(Dof, f64)>> {
    let mut sites_only = Vec::new();
    {
        let mut all: Vec<(usize, f64, f64)> = minus.iter().map(|&(s, b)| (s, b, 0.0)).collect();
        all.extend(plus.iter().map(|&(s, b)| (s, 0.0, b)));
        all.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64, f64)> = Vec::new();
        for (s, bm, bp) in all {
            match merged.last_mut() {
                Some(l) if l.0 == s => {
                    l.1 += bm;
                    l.2 += bp;
                }
                _ => merged.push((s, bm, bp)),
            }
        }
        for (s, bm, bp) in merged {
            let c = n * (bm - bp);
            if c != 0.0 {
                sites_only.push((Dof::Site(s), c));
            }
        }
    }
    let mut out = sites_only;
    for (s, b) in minus {
        let t = trace_of[s].ok_or_else(|| Error::InvalidPartition("atomistic face node off Gamma".into()))?;
        out.push((Dof::Offset(t), n * b));
    }
    Ok(out)
}

pub fn dg_model(part: &RegionPartition, laws: &InteractionSet, opts: CouplingOptions) -> Result<CoupledModel> {
    validate(part, laws, opts)?;
    let cfg = part.config();
    let mut trace_of = vec![None; cfg.num_sites()];
    let mut trace_sites = Vec::new();
    for s in cfg.sites() {
        if part.site_on_gamma(s.triple()) {
            trace_of[cfg.linear_index(s)] = Some(trace_sites.len());
            trace_sites.push(cfg.linear_index(s));
        }
    }
    let map = |s: usize| match trace_of[s] {
        Some(t) => Dof::Trace(t),
        None => Dof::Site(s),
    };
    let cells = all_interface_cells(part, laws, opts.scheme)?;
    let mut terms = base_terms(ModelKind::CoupledDg, part, laws, &cells, &map)?;
    terms.space.trace_sites = trace_sites;
    let jumps = build_jumps(part, &cells, opts.scheme, &map, &trace_of)?;
    Ok(CoupledModel {
        partition: *part,
        options: opts,
        terms,
        jumps: Some(jumps),
        elements: None,
    })
}

/// `E^D_bv` for site displacements plus atomistic-side trace offsets on
/// `Gamma` (in the order of the model's trace sites; `None` means zero).
pub fn coupled_energy_dg(
    y: &Deformation,
    traces: Option<&[Vec3]>,
    laws: &InteractionSet,
    part: &RegionPartition,
    opts: CouplingOptions,
    mode: Reduction,
) -> Result<EnergyReport> {
    if y.config() != part.config() {
        return Err(Error::ConfigMismatch);
    }
    let m = dg_model(part, laws, opts)?;
    let mut x = m.embed(y);
    if let Some(t) = traces {
        if t.len() != x.traces.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} trace offsets for {} trace sites",
                t.len(),
                x.traces.len()
            )));
        }
        x.traces = t.to_vec();
    }
    m.evaluate_state(laws, y.gradient(), &x, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::conforming::conforming_model;
    use crate::coupling::partition::DegeneratePolicy;
    use crate::lattice::{make_deformation, LatticeField, Mat3};
    use crate::potentials::{cb_energy_density, max_abs_entry, piola_stress, InteractionLaw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn part() -> RegionPartition {
        let cfg = LatticeConfig::new([12, 12, 12], 1.0 / 12.0).unwrap();
        RegionPartition::new(cfg, [4, 4, 4], [4, 4, 4]).unwrap()
    }

    fn laws() -> InteractionSet {
        InteractionSet::uniform(&[[1, 1, 1], [2, 1, 3], [1, -1, 2]], InteractionLaw::anisotropic_toy).unwrap()
    }

    fn rvec(rng: &mut ChaCha8Rng, amp: f64) -> Vec3 {
        Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp
    }

    #[test]
    fn jump_and_average() {
        let n = Vec3::new(0.0, -1.0, 0.0);
        let eta = Vec3::new(2.0, 3.0, 1.0);
        let a = Vec3::new(1.0, 2.0, -1.0);
        let (j, avg) = jump_average(&n, &eta, a, Vec3::zeros());
        assert_eq!(j, a * -3.0);
        assert_eq!(avg, a * 0.5);
        assert_eq!(jump_average(&n, &eta, a, a).0, Vec3::zeros());
        let b = Vec3::new(0.5, 0.0, 4.0);
        let (j1, a1) = jump_average(&n, &eta, a, b);
        let (j2, a2) = jump_average(&n, &eta, b, a);
        assert_eq!(j2, -j1);
        assert_eq!(a1, a2);
        let (j3, _) = jump_average(&-n, &eta, a, b);
        assert_eq!(j3, -j1);
    }

    #[test]
    fn clipping_matches_hand_areas() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let tri = vec![[0.5, -1.0], [2.0, 0.5], [0.5, 0.5]];
        let poly = clip(tri, &sq);
        let area: f64 = (1..poly.len() - 1)
            .map(|k| {
                let (p0, p1, p2) = (poly[0], poly[k], poly[k + 1]);
                0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])).abs()
            })
            .sum();
        // triangle part inside the square: {0.5<=x<=1, 0<=y<=0.5, y >= x - 1.5 ... } = 0.5 * 0.5
        assert!((area - 0.25).abs() < 1e-14, "{area}");
    }

    #[test]
    fn continuous_data_matches_conforming_bitwise() {
        let p = part();
        let r = laws();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.05..0.05));
        let v = LatticeField::from_fn(*p.config(), |_| rvec(&mut rng, 0.01));
        let y = make_deformation(f, v).unwrap();
        let c = conforming_model(&p, &r, CouplingOptions::default()).unwrap();
        let d = dg_model(&p, &r, CouplingOptions::default()).unwrap();
        let a = c.evaluate(&y, &r, Reduction::Ordered).unwrap();
        let b = d.evaluate(&y, &r, Reduction::Ordered).unwrap();
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        assert_eq!(a.gradient, b.gradient);
    }

    #[test]
    fn no_ghost_forces_including_traces() {
        let p = part();
        let r = laws();
        let d = dg_model(&p, &r, CouplingOptions::default()).unwrap();
        let f = Mat3::new(1.03, 0.02, -0.01, 0.01, 0.98, 0.04, 0.0, -0.02, 1.01);
        let y = Deformation::homogeneous(*p.config(), f).unwrap();
        let rep = d.evaluate(&y, &r, Reduction::Ordered).unwrap();
        let scale = (max_abs_entry(&piola_stress(&r, &f).unwrap()) / p.config().spacing()).max(1.0);
        assert!(!rep.trace_gradient.is_empty());
        assert!(rep.gradient_max_norm() / scale <= 1e-12, "{}", rep.gradient_max_norm() / scale);
        let e = cb_energy_density(&r, &f).unwrap();
        assert!((rep.energy - e).abs() <= 1e-13 * e.abs());
    }

    #[test]
    fn reduced_degenerate_bonds_have_no_ghost_forces() {
        let p = part();
        let r = InteractionSet::uniform(&[[2, 1, 3], [1, 0, 2], [0, 3, 0]], InteractionLaw::anisotropic_toy).unwrap();
        let opts = CouplingOptions {
            policy: DegeneratePolicy::Reduce,
            ..Default::default()
        };
        let d = dg_model(&p, &r, opts).unwrap();
        let f = Mat3::new(1.03, 0.02, -0.01, 0.01, 0.98, 0.04, 0.0, -0.02, 1.01);
        let y = Deformation::homogeneous(*p.config(), f).unwrap();
        let rep = d.evaluate(&y, &r, Reduction::Ordered).unwrap();
        let scale = (max_abs_entry(&piola_stress(&r, &f).unwrap()) / p.config().spacing()).max(1.0);
        assert!(rep.gradient_max_norm() / scale <= 1e-12, "{}", rep.gradient_max_norm() / scale);
    }

    #[test]
    fn gradient_matches_finite_differences_with_jumps() {
        let cfg = LatticeConfig::new([10, 10, 10], 0.1).unwrap();
        let p = RegionPartition::new(cfg, [3, 3, 3], [4, 4, 4]).unwrap();
        let r = InteractionSet::new(vec![
            InteractionLaw::anisotropic_toy([1, 1, 1]).unwrap(),
            InteractionLaw::morse([2, -1, 1], 0.6, 1.1).unwrap(),
        ])
        .unwrap();
        let d = dg_model(&p, &r, CouplingOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = Mat3::identity() + Mat3::from_fn(|_, _| rng.gen_range(-0.05..0.05));
        let y = make_deformation(f, LatticeField::from_fn(cfg, |_| rvec(&mut rng, 0.01))).unwrap();
        let mut x = d.embed(&y);
        for t in &mut x.traces {
            *t = rvec(&mut rng, 0.01);
        }
        let mut dir = DofVec::zeros(d.space());
        for v in dir.sites.iter_mut().chain(dir.traces.iter_mut()) {
            *v = rvec(&mut rng, 1.0);
        }
        let (_, _, g) = d.evaluate_dofs(&r, &f, &x, Reduction::Ordered).unwrap();
        let analytic = g.dot(&dir);
        let h = 1e-6;
        let ep = d.evaluate_dofs(&r, &f, &x.axpy(h, &dir), Reduction::Ordered).unwrap().0;
        let em = d.evaluate_dofs(&r, &f, &x.axpy(-h, &dir), Reduction::Ordered).unwrap().0;
        let fd = (ep - em) / (2.0 * h);
        assert!((analytic - fd).abs() <= 1e-6 * analytic.abs().max(fd.abs()), "{analytic} {fd}");
    }
}
