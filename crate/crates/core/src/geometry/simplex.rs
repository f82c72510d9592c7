//! Lattice boxes, simplices over lattice and face-centre nodes, and the
//! recursive face-by-face triangulation used at the coupling interface.
//!
//! A box triangulation is built from the triangulations of its facets, so
//! two boxes sharing a face agree on it as long as the per-face rule only
//! looks at the face itself. That is what makes interpolants on neighbouring
//! boxes continuous.

use std::collections::BTreeSet;

use crate::lattice::{Triple, Vec3};

/// Closed axis-aligned box of lattice points, `lo <= hi` componentwise.
/// Axes with `lo == hi` are collapsed, so faces of any dimension are boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridBox {
    pub lo: Triple,
    pub hi: Triple,
}

impl GridBox {
    pub fn new(lo: Triple, hi: Triple) -> Self {
        debug_assert!((0..3).all(|i| lo[i] <= hi[i]), "{lo:?} {hi:?}");
        Self { lo, hi }
    }

    pub fn extent(&self, axis: usize) -> i64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn active_axes(&self) -> Vec<usize> {
        (0..3).filter(|&i| self.lo[i] < self.hi[i]).collect()
    }

    pub fn dim(&self) -> usize {
        (0..3).filter(|&i| self.lo[i] < self.hi[i]).count()
    }

    /// Product of the active extents (box measure in lattice units).
    pub fn measure(&self) -> i64 {
        (0..3).map(|i| self.extent(i).max(1)).product::<i64>()
    }

    pub fn corners(&self) -> Vec<Triple> {
        let axes = self.active_axes();
        (0..1usize << axes.len())
            .map(|mask| {
                let mut p = self.lo;
                for (b, &a) in axes.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        p[a] = self.hi[a];
                    }
                }
                p
            })
            .collect()
    }

    /// Facets in axis order, low side before high side.
    pub fn facets(&self) -> Vec<GridBox> {
        let mut out = Vec::new();
        for a in self.active_axes() {
            let mut lo_face = *self;
            lo_face.hi[a] = self.lo[a];
            let mut hi_face = *self;
            hi_face.lo[a] = self.hi[a];
            out.push(lo_face);
            out.push(hi_face);
        }
        out
    }

    /// Unit sub-boxes along the active axes.
    pub fn unit_cells(&self) -> Vec<GridBox> {
        let axes = self.active_axes();
        let mut out = vec![*self];
        for &a in &axes {
            out = out
                .into_iter()
                .flat_map(|b| {
                    (self.lo[a]..self.hi[a]).map(move |x| {
                        let mut c = b;
                        c.lo[a] = x;
                        c.hi[a] = x + 1;
                        c
                    })
                })
                .collect();
        }
        out
    }

    pub fn contains_point(&self, p: Triple) -> bool {
        (0..3).all(|i| self.lo[i] <= p[i] && p[i] <= self.hi[i])
    }

    pub fn contains_box(&self, other: &GridBox) -> bool {
        self.contains_point(other.lo) && self.contains_point(other.hi)
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from_fn(|i, _| 0.5 * (self.lo[i] + self.hi[i]) as f64)
    }
}

/// Vertex of an interface simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    /// Lattice point (unwrapped coordinates).
    Lattice(Triple),
    /// Centre of a box face, carrying the mean of the face's corner values.
    Center(GridBox),
}

impl Node {
    /// Position in lattice units.
    pub fn point(&self) -> Vec3 {
        match self {
            Node::Lattice(l) => Vec3::new(l[0] as f64, l[1] as f64, l[2] as f64),
            Node::Center(b) => b.center(),
        }
    }

    /// The node value as a combination of lattice-site values.
    pub fn expand(&self) -> Vec<(Triple, f64)> {
        match self {
            Node::Lattice(l) => vec![(*l, 1.0)],
            Node::Center(b) => {
                let c = b.corners();
                let w = 1.0 / c.len() as f64;
                c.into_iter().map(|p| (p, w)).collect()
            }
        }
    }
}

/// Simplex with nodes in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(pub Vec<Node>);

impl Simplex {
    pub fn new(mut nodes: Vec<Node>) -> Self {
        nodes.sort();
        Self(nodes)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.0
    }

    pub fn points(&self) -> Vec<Vec3> {
        self.0.iter().map(Node::point).collect()
    }

    /// k-dimensional measure (lattice units) of a k-simplex.
    pub fn measure(&self) -> f64 {
        let p = self.points();
        let k = p.len() - 1;
        let mut g = nalgebra::DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                g[(i, j)] = (p[i + 1] - p[0]).dot(&(p[j + 1] - p[0]));
            }
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        g.determinant().max(0.0).sqrt() / fact
    }

    pub fn contains_nodes(&self, other: &Simplex) -> bool {
        other.0.iter().all(|n| self.0.contains(n))
    }
}

/// Kuhn paths from `start` with signed steps `steps` over the given axes,
/// one per ordering of `axes` (lexicographic).
pub fn kuhn_paths(start: Triple, steps: Triple, axes: &[usize]) -> Vec<Vec<Triple>> {
    super::permutations(axes)
        .into_iter()
        .map(|perm| {
            let mut p = start;
            let mut path = vec![p];
            for a in perm {
                p[a] += steps[a];
                path.push(p);
            }
            path
        })
        .collect()
}

/// Kuhn triangulation of the whole box, walking from the corner selected by
/// `signs` (`+1` starts at `lo`, `-1` at `hi`) with full-extent steps.
pub fn signed_kuhn(b: &GridBox, signs: Triple) -> Vec<Simplex> {
    let axes = b.active_axes();
    let start: Triple = std::array::from_fn(|i| if signs[i] < 0 { b.hi[i] } else { b.lo[i] });
    let steps: Triple = std::array::from_fn(|i| if signs[i] < 0 { -b.extent(i) } else { b.extent(i) });
    kuhn_paths(start, steps, &axes)
        .into_iter()
        .map(|p| Simplex::new(p.into_iter().map(Node::Lattice).collect()))
        .collect()
}

/// Positive Kuhn triangulation of every unit cell of the box. On a full cell
/// this is the global cell template; on faces it is that template's trace.
pub fn fine_triangulation(b: &GridBox) -> Vec<Simplex> {
    let axes = b.active_axes();
    if axes.is_empty() {
        return vec![Simplex::new(vec![Node::Lattice(b.lo)])];
    }
    b.unit_cells()
        .iter()
        .flat_map(|c| signed_kuhn(c, [1, 1, 1]))
        .collect()
}

/// Per-face decision of the interface triangulation.
pub trait FaceRule {
    /// `Some(signs)` if the face must carry the coarse signed-Kuhn
    /// triangulation of a neighbouring bond volume.
    fn coarse_signs(&self, face: &GridBox) -> Option<Triple>;
}

fn canonical(s: &[Simplex]) -> BTreeSet<Simplex> {
    s.iter().cloned().collect()
}

/// Triangulates `b` face by face:
/// - coarse faces get the signed Kuhn triangulation;
/// - other edges are split into unit segments;
/// - other faces use the fine template when every facet does, and are
///   otherwise coned from a centre node over their facet triangulations.
pub fn triangulate(b: &GridBox, rule: &dyn FaceRule) -> Vec<Simplex> {
    let dim = b.dim();
    if dim == 0 {
        return vec![Simplex::new(vec![Node::Lattice(b.lo)])];
    }
    if let Some(signs) = rule.coarse_signs(b) {
        return signed_kuhn(b, signs);
    }
    if dim == 1 {
        return fine_triangulation(b);
    }
    let facets: Vec<(GridBox, Vec<Simplex>)> = b
        .facets()
        .into_iter()
        .map(|f| {
            let t = triangulate(&f, rule);
            (f, t)
        })
        .collect();
    if facets
        .iter()
        .all(|(f, t)| canonical(t) == canonical(&fine_triangulation(f)))
    {
        return fine_triangulation(b);
    }
    let apex = Node::Center(*b);
    facets
        .into_iter()
        .flat_map(|(_, t)| t)
        .map(|s| {
            let mut nodes = s.0;
            nodes.push(apex);
            Simplex::new(nodes)
        })
        .collect()
}
