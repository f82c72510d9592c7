//! Uncoupled energy models: exact atomistic, tetrahedral A-CB and cell A-CB.
//!
//! First variations are reported as Riesz representers in `<., .>_eps`:
//! `DE(y) v = eps^3 sum_l gradient_l . v_l`.

use std::fmt;

use crate::assembly::{Dof, DofSpace, DofVec, EvalContext, Reduction, TermSet};
use crate::error::Result;
use crate::geometry::kuhn_paths;
use crate::lattice::{add, Deformation, LatticeConfig, LatticeField, Mat3, Triple, Vec3};
use crate::potentials::InteractionSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Atomistic,
    AcbTetra,
    AcbCell,
    Coupled,
    CoupledDg,
    CoupledHo(usize),
    Naive,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Atomistic => write!(f, "atomistic"),
            ModelKind::AcbTetra => write!(f, "acb-tetra"),
            ModelKind::AcbCell => write!(f, "acb-cell"),
            ModelKind::Coupled => write!(f, "coupled"),
            ModelKind::CoupledDg => write!(f, "coupled-dg"),
            ModelKind::CoupledHo(k) => write!(f, "coupled-ho({k})"),
            ModelKind::Naive => write!(f, "naive"),
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    /// Inverse of `Display`; the high-order model is `coupled-ho(k)`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "atomistic" => ModelKind::Atomistic,
            "acb-tetra" => ModelKind::AcbTetra,
            "acb-cell" => ModelKind::AcbCell,
            "coupled" => ModelKind::Coupled,
            "coupled-dg" => ModelKind::CoupledDg,
            "naive" => ModelKind::Naive,
            _ => {
                let k = s
                    .strip_prefix("coupled-ho(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| format!("unknown model '{s}'"))?;
                let k = k
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("invalid polynomial degree in '{s}'"))?;
                ModelKind::CoupledHo(k)
            }
        })
    }
}

impl ModelKind {
    /// Whether the model needs a region partition.
    pub fn is_coupled(&self) -> bool {
        matches!(
            self,
            ModelKind::Coupled | ModelKind::CoupledDg | ModelKind::CoupledHo(_) | ModelKind::Naive
        )
    }
}

/// Where a term lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Atomistic,
    Interface,
    Continuum,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Breakdown {
    pub atomistic: f64,
    pub interface: f64,
    pub continuum: f64,
}

impl Breakdown {
    pub fn add(&mut self, region: Region, e: f64) {
        match region {
            Region::Atomistic => self.atomistic += e,
            Region::Interface => self.interface += e,
            Region::Continuum => self.continuum += e,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub model: ModelKind,
    pub energy: f64,
    /// Representer with respect to the site displacements.
    pub gradient: LatticeField,
    pub breakdown: Breakdown,
    /// Representers with respect to interface trace offsets (discontinuous
    /// coupling) and additional finite element nodes (high-order coupling),
    /// scaled by `1/eps^3` like `gradient`.
    pub trace_gradient: Vec<Vec3>,
    pub extra_gradient: Vec<Vec3>,
}

impl EnergyReport {
    /// Max-norm over every dof of the representer.
    pub fn gradient_max_norm(&self) -> f64 {
        self.trace_gradient
            .iter()
            .chain(&self.extra_gradient)
            .flat_map(|v| v.iter())
            .fold(self.gradient.max_norm(), |m, x| m.max(x.abs()))
    }

    pub(crate) fn from_dofs(
        model: ModelKind,
        cfg: &LatticeConfig,
        energy: f64,
        breakdown: Breakdown,
        mut grad: DofVec,
    ) -> Result<Self> {
        grad.scale(cfg.spacing().powi(-3));
        Ok(Self {
            model,
            energy,
            gradient: LatticeField::from_values(*cfg, grad.sites)?,
            breakdown,
            trace_gradient: grad.traces,
            extra_gradient: grad.extras,
        })
    }
}

/// A model that is a plain sum of stored terms.
#[derive(Debug, Clone)]
pub struct TermModel {
    pub kind: ModelKind,
    pub config: LatticeConfig,
    pub space: DofSpace,
    pub sets: Vec<(Region, TermSet)>,
}

impl TermModel {
    pub fn new(kind: ModelKind, config: LatticeConfig) -> Self {
        Self {
            kind,
            config,
            space: DofSpace::sites_only(config.num_sites()),
            sets: Vec::new(),
        }
    }

    pub fn set_mut(&mut self, region: Region) -> &mut TermSet {
        if let Some(i) = self.sets.iter().position(|(r, _)| *r == region) {
            return &mut self.sets[i].1;
        }
        self.sets.push((region, TermSet::new()));
        &mut self.sets.last_mut().unwrap().1
    }

    /// Energy, per-region breakdown and raw (unscaled) gradient.
    pub fn evaluate_dofs(
        &self,
        laws: &InteractionSet,
        f: &Mat3,
        x: &DofVec,
        mode: Reduction,
    ) -> Result<(f64, Breakdown, DofVec)> {
        x.check(&self.space)?;
        let ctx = EvalContext::new(laws, f, self.config.spacing(), &self.space);
        let mut grad = DofVec::zeros(&self.space);
        let mut bd = Breakdown::default();
        let mut energy = 0.0;
        for (region, set) in &self.sets {
            let e = set.evaluate(&ctx, x, &mut grad, mode)?;
            bd.add(*region, e);
            energy += e;
        }
        Ok((energy, bd, grad))
    }

    pub fn evaluate_state(
        &self,
        laws: &InteractionSet,
        f: &Mat3,
        x: &DofVec,
        mode: Reduction,
    ) -> Result<EnergyReport> {
        let (e, bd, g) = self.evaluate_dofs(laws, f, x, mode)?;
        EnergyReport::from_dofs(self.kind, &self.config, e, bd, g)
    }

    pub fn evaluate(&self, y: &Deformation, laws: &InteractionSet, mode: Reduction) -> Result<EnergyReport> {
        self.evaluate_state(laws, y.gradient(), &site_dofs(y), mode)
    }
}

/// Dof vector of a lattice deformation for a sites-only space.
pub fn site_dofs(y: &Deformation) -> DofVec {
    DofVec {
        sites: y.displacement().values().to_vec(),
        traces: Vec::new(),
        extras: Vec::new(),
    }
}

pub(crate) fn check_laws(cfg: &LatticeConfig, laws: &InteractionSet) -> Result<()> {
    for law in laws.laws() {
        cfg.check_bond(law.eta())?;
    }
    Ok(())
}

fn site(cfg: &LatticeConfig, l: Triple) -> Dof {
    Dof::Site(cfg.index_of(l))
}

/// `eps^3 phi_eta(D_eta y_l)` for one bond.
pub(crate) fn push_bond(ts: &mut TermSet, cfg: &LatticeConfig, law: usize, l: Triple, eta: Triple) {
    ts.push(
        law,
        cfg.spacing().powi(3),
        [(site(cfg, add(l, eta)), 1.0), (site(cfg, l), -1.0)],
    );
}

/// Stencil of `grad~ u eta` on the Kuhn tet given by `path`.
pub(crate) fn kuhn_stencil(cfg: &LatticeConfig, path: &[Triple], eta: Triple) -> Vec<(Dof, f64)> {
    let mut st = Vec::with_capacity(2 * (path.len() - 1));
    for k in 1..path.len() {
        let a = (0..3).find(|&a| path[k][a] != path[k - 1][a]).unwrap();
        let c = eta[a] as f64 / (path[k][a] - path[k - 1][a]) as f64;
        st.push((site(cfg, path[k]), c));
        st.push((site(cfg, path[k - 1]), -c));
    }
    st
}

/// `(eps^3 / 6) phi_eta(grad~ y eta)` for the six cell tets of `K_l`.
pub(crate) fn push_cell_tets(ts: &mut TermSet, cfg: &LatticeConfig, laws: &InteractionSet, l: Triple) {
    let w = cfg.spacing().powi(3) / 6.0;
    for path in kuhn_paths(l, [1, 1, 1], &[0, 1, 2]) {
        for (k, law) in laws.laws().iter().enumerate() {
            ts.push(k, w, kuhn_stencil(cfg, &path, law.eta()));
        }
    }
}

pub fn atomistic_model(cfg: &LatticeConfig, laws: &InteractionSet) -> Result<TermModel> {
    check_laws(cfg, laws)?;
    let mut m = TermModel::new(ModelKind::Atomistic, *cfg);
    let ts = m.set_mut(Region::Atomistic);
    for s in cfg.sites() {
        for (k, law) in laws.laws().iter().enumerate() {
            push_bond(ts, cfg, k, s.triple(), law.eta());
        }
    }
    Ok(m)
}

pub fn acb_tetra_model(cfg: &LatticeConfig, laws: &InteractionSet) -> Result<TermModel> {
    check_laws(cfg, laws)?;
    let mut m = TermModel::new(ModelKind::AcbTetra, *cfg);
    let ts = m.set_mut(Region::Continuum);
    for s in cfg.sites() {
        push_cell_tets(ts, cfg, laws, s.triple());
    }
    Ok(m)
}

pub fn acb_cell_model(cfg: &LatticeConfig, laws: &InteractionSet) -> Result<TermModel> {
    check_laws(cfg, laws)?;
    let mut m = TermModel::new(ModelKind::AcbCell, *cfg);
    let w = cfg.spacing().powi(3);
    let ts = m.set_mut(Region::Continuum);
    for s in cfg.sites() {
        let l = s.triple();
        for (k, law) in laws.laws().iter().enumerate() {
            let eta = law.eta();
            let mut st = Vec::with_capacity(24);
            for a in 0..3 {
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                for (db, dc) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let mut p = l;
                    p[b] += db;
                    p[c] += dc;
                    let mut q = p;
                    q[a] += 1;
                    let coef = 0.25 * eta[a] as f64;
                    st.push((site(cfg, q), coef));
                    st.push((site(cfg, p), -coef));
                }
            }
            ts.push(k, w, st);
        }
    }
    Ok(m)
}

/// `eps^3 sum_l sum_eta phi_eta(D_eta y_l)`.
pub fn atomistic_energy(y: &Deformation, laws: &InteractionSet, mode: Reduction) -> Result<EnergyReport> {
    atomistic_model(y.config(), laws)?.evaluate(y, laws, mode)
}

/// `(eps^3/6) sum_l sum_{T in K_l} W_CB(grad~ y)`.
pub fn acb_tetra_energy(y: &Deformation, laws: &InteractionSet, mode: Reduction) -> Result<EnergyReport> {
    acb_tetra_model(y.config(), laws)?.evaluate(y, laws, mode)
}

/// `eps^3 sum_l W_CB(averaged gradient on K_l)`.
pub fn acb_cell_energy(y: &Deformation, laws: &InteractionSet, mode: Reduction) -> Result<EnergyReport> {
    acb_cell_model(y.config(), laws)?.evaluate(y, laws, mode)
}
