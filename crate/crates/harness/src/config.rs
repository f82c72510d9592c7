//! JSON run configuration and its validation.
//!
//! Every field has a default, so `{}` is a valid config: the 12^3 torus with
//! a 4^3 atomistic box at cell (4, 4, 4) and the anisotropic toy law on
//! `(1,1,1), (2,1,3), (1,-1,2)`. Unknown keys are rejected at every level.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bondvol::coupling::{CouplingOptions, DegeneratePolicy, InterfaceScheme, RegionPartition};
use bondvol::lattice::{LatticeConfig, Mat3, Triple};
use bondvol::potentials::{InteractionLaw, InteractionSet, LawKind};
use bondvol::ModelKind;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub n: [usize; 3],
    /// Defaults to `1 / n[0]`.
    #[serde(default)]
    pub spacing: Option<f64>,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            n: [12, 12, 12],
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionSpec {
    pub eta: Triple,
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl InteractionSpec {
    fn toy(eta: Triple) -> Self {
        Self {
            eta,
            kind: "anisotropic-toy".into(),
            params: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub corner: Triple,
    pub extents: [usize; 3],
}

/// `"none"` or a box of cells.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Keyword(String),
    Box(BoxSpec),
}

impl Default for RegionSpec {
    fn default() -> Self {
        RegionSpec::Box(BoxSpec {
            corner: [4, 4, 4],
            extents: [4, 4, 4],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub lemma: f64,
    pub ghost_force: f64,
    /// Discontinuous and high-order couplings (quadrature rounding).
    pub ghost_force_dg_ho: f64,
    /// Lower bound for the naive control's residual.
    pub naive_min: f64,
    pub homogeneous_energy: f64,
    pub locality: f64,
    pub gradient: f64,
    pub gradient_harmonic: f64,
    pub coverings: f64,
    pub slope: f64,
    /// Agreement of the minimizer with the linear-solve oracle.
    pub solve_oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lemma: 1e-13,
            ghost_force: 1e-12,
            ghost_force_dg_ho: 1e-11,
            naive_min: 1e-3,
            homogeneous_energy: 1e-13,
            locality: 1e-13,
            gradient: 1e-6,
            gradient_harmonic: 1e-9,
            coverings: 1e-12,
            slope: 1.9,
            solve_oracle: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Trials {
    pub lemma: usize,
    pub ghost_forces: usize,
    pub gradient: usize,
}

impl Default for Trials {
    fn default() -> Self {
        Self {
            lemma: 100,
            ghost_forces: 10,
            gradient: 20,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    /// Sites per axis; `eps = 1/N` on the unit torus.
    pub sizes: Vec<usize>,
    pub amplitude: f64,
    /// `acb-cell` or `acb-tetra`.
    pub model: String,
    /// Interaction set of the sweep. Defaults to the nearest neighbours and
    /// `(1,1,1)`, which fit the smallest torus.
    pub interactions: Option<Vec<InteractionSpec>>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            sizes: vec![4, 8, 16, 32],
            amplitude: 0.05,
            model: "acb-cell".into(),
            interactions: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSpec {
    /// Amplitude of the smooth zero-mean external force.
    pub force_amplitude: f64,
    pub max_iters: usize,
    pub g_tol: f64,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for SolveSpec {
    fn default() -> Self {
        Self {
            force_amplitude: 0.01,
            max_iters: 500,
            g_tol: 1e-9,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

/// The config file as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RawConfig {
    pub lattice: LatticeSpec,
    pub interactions: Vec<InteractionSpec>,
    /// Row-major deformation gradient.
    pub f: [[f64; 3]; 3],
    pub region: RegionSpec,
    pub model: String,
    pub degenerate_eta: String,
    pub interface: String,
    pub seed: u64,
    pub deterministic: bool,
    pub tolerances: Tolerances,
    pub trials: Trials,
    pub fd_step: f64,
    pub sweep: SweepSpec,
    pub solve: SolveSpec,
    pub output: OutputSpec,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::default(),
            interactions: [[1, 1, 1], [2, 1, 3], [1, -1, 2]].map(InteractionSpec::toy).to_vec(),
            f: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            region: RegionSpec::default(),
            model: "coupled".into(),
            degenerate_eta: "reject".into(),
            interface: "matched".into(),
            seed: 0,
            deterministic: false,
            tolerances: Tolerances::default(),
            trials: Trials::default(),
            fd_step: 1e-5,
            sweep: SweepSpec::default(),
            solve: SolveSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub deterministic: bool,
    pub out: Option<PathBuf>,
    pub model: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub sizes: Vec<usize>,
    pub amplitude: f64,
    pub model: ModelKind,
    pub laws: InteractionSet,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lattice: LatticeConfig,
    pub laws: InteractionSet,
    pub f: Mat3,
    pub partition: Option<RegionPartition>,
    pub model: ModelKind,
    pub options: CouplingOptions,
    pub seed: u64,
    pub deterministic: bool,
    pub tolerances: Tolerances,
    pub trials: Trials,
    pub fd_step: f64,
    pub sweep: Sweep,
    pub solve: SolveSpec,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, overrides)
    }

    pub fn from_json(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        Self::from_raw(raw, overrides)
    }

    pub fn from_raw(mut raw: RawConfig, overrides: &Overrides) -> Result<Self, ConfigError> {
        if let Some(s) = overrides.seed {
            raw.seed = s;
        }
        raw.deterministic |= overrides.deterministic;
        if let Some(o) = &overrides.out {
            raw.output.dir = Some(o.clone());
        }
        if let Some(m) = &overrides.model {
            raw.model = m.clone();
        }
        validate(raw)
    }

    /// Copy with another model selected, revalidated.
    pub fn with_model(&self, model: ModelKind) -> Result<Self, ConfigError> {
        let mut problems = Vec::new();
        check_model(self, model, &mut problems);
        if !problems.is_empty() {
            return Err(ConfigError::Invalid(problems));
        }
        Ok(Self { model, ..self.clone() })
    }

    pub fn reduction(&self) -> bondvol::Reduction {
        if self.deterministic {
            bondvol::Reduction::Ordered
        } else {
            bondvol::Reduction::Parallel
        }
    }
}

fn param(spec: &InteractionSpec, name: &str, problems: &mut Vec<String>) -> Option<f64> {
    let v = spec.params.get(name).copied();
    if v.is_none() {
        problems.push(format!("interaction {:?} ({}): missing parameter '{name}'", spec.eta, spec.kind));
    }
    v
}

fn build_law(spec: &InteractionSpec, problems: &mut Vec<String>) -> Option<InteractionLaw> {
    let allowed: &[&str] = match spec.kind.as_str() {
        "harmonic" | "anisotropic-toy" => &[],
        "morse" => &["depth", "alpha", "r0"],
        "lennard-jones" => &["epsilon", "sigma"],
        other => {
            problems.push(format!(
                "interaction {:?}: unknown kind '{other}' (expected harmonic, morse, lennard-jones or anisotropic-toy)",
                spec.eta
            ));
            return None;
        }
    };
    let before = problems.len();
    for k in spec.params.keys() {
        if !allowed.contains(&k.as_str()) {
            problems.push(format!("interaction {:?} ({}): unknown parameter '{k}'", spec.eta, spec.kind));
        }
    }
    let length = spec.eta.iter().map(|&e| (e * e) as f64).sum::<f64>().sqrt();
    let law = match spec.kind.as_str() {
        "harmonic" => InteractionLaw::harmonic(spec.eta),
        "anisotropic-toy" => InteractionLaw::anisotropic_toy(spec.eta),
        "morse" => {
            let depth = param(spec, "depth", problems);
            let alpha = param(spec, "alpha", problems);
            let r0 = spec.params.get("r0").copied().unwrap_or(length);
            match (depth, alpha) {
                (Some(depth), Some(alpha)) => InteractionLaw::new(spec.eta, LawKind::Morse { depth, alpha, r0 }),
                _ => return None,
            }
        }
        _ => {
            let epsilon = param(spec, "epsilon", problems)?;
            let sigma = spec.params.get("sigma").copied().unwrap_or(length / 2f64.powf(1.0 / 6.0));
            InteractionLaw::new(spec.eta, LawKind::LennardJones { epsilon, sigma })
        }
    };
    match law {
        Ok(l) if problems.len() == before => Some(l),
        Ok(_) => None,
        Err(e) => {
            problems.push(e.to_string());
            None
        }
    }
}

fn build_laws(specs: &[InteractionSpec], what: &str, problems: &mut Vec<String>) -> Option<InteractionSet> {
    let laws: Vec<Option<InteractionLaw>> = specs.iter().map(|s| build_law(s, problems)).collect();
    if laws.iter().any(Option::is_none) {
        return None;
    }
    match InteractionSet::new(laws.into_iter().flatten().collect()) {
        Ok(set) => Some(set),
        Err(e) => {
            problems.push(format!("{what}: {e}"));
            None
        }
    }
}

/// Preconditions of `model` on an otherwise validated config.
fn check_model(cfg: &RunConfig, model: ModelKind, problems: &mut Vec<String>) {
    let lattice = &cfg.lattice;
    if !model.is_coupled() {
        return;
    }
    let Some(part) = &cfg.partition else {
        problems.push(format!("model {model} needs a region (got \"none\")"));
        return;
    };
    for law in cfg.laws.laws() {
        let eta = law.eta();
        if eta.contains(&0) {
            let rejected = cfg.options.policy == DegeneratePolicy::Reject;
            if rejected || matches!(model, ModelKind::CoupledHo(_) | ModelKind::Naive) {
                let why = if rejected {
                    "degenerate_eta is \"reject\"".to_string()
                } else {
                    format!("{model} does not support it")
                };
                problems.push(format!("interaction vector {eta:?} has a zero component and {why}"));
            }
        }
        if let Err(e) = lattice.check_divisibility(eta) {
            problems.push(format!("{e}: N = {:?} is not divisible by |eta_i| for eta = {eta:?}", lattice.extents()));
        }
    }
    if let Err(e) = part.check_clearance(cfg.laws.max_reach()) {
        problems.push(e.to_string());
    }
    if model == ModelKind::CoupledHo(0) {
        problems.push("coupled-ho needs a polynomial degree k >= 1".into());
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let mut problems = Vec::new();

    let spacing = raw.lattice.spacing.unwrap_or(1.0 / raw.lattice.n[0].max(1) as f64);
    let lattice = LatticeConfig::new(raw.lattice.n, spacing).map_err(|e| problems.push(e.to_string())).ok();

    let laws = build_laws(&raw.interactions, "interactions", &mut problems);
    if let (Some(c), Some(set)) = (&lattice, &laws) {
        for law in set.laws() {
            if let Err(e) = c.check_bond(law.eta()) {
                problems.push(e.to_string());
            }
        }
    }

    let f = Mat3::from_fn(|i, j| raw.f[i][j]);
    if !(f.determinant() > 0.0) {
        problems.push(format!("f must have det F > 0 (got {:e})", f.determinant()));
    }

    let model = raw.model.parse::<ModelKind>().map_err(|e| problems.push(e)).ok();

    let policy = match raw.degenerate_eta.as_str() {
        "reject" => Some(DegeneratePolicy::Reject),
        "reduce" => Some(DegeneratePolicy::Reduce),
        other => {
            problems.push(format!("degenerate_eta must be \"reject\" or \"reduce\" (got \"{other}\")"));
            None
        }
    };
    let scheme = match raw.interface.as_str() {
        "matched" => Some(InterfaceScheme::Matched),
        "cell-template" => Some(InterfaceScheme::CellTemplate),
        other => {
            problems.push(format!("interface must be \"matched\" or \"cell-template\" (got \"{other}\")"));
            None
        }
    };

    let partition = match (&raw.region, &lattice) {
        (RegionSpec::Keyword(k), _) if k == "none" => Some(None),
        (RegionSpec::Keyword(k), _) => {
            problems.push(format!("region must be \"none\" or {{corner, extents}} (got \"{k}\")"));
            None
        }
        (RegionSpec::Box(b), Some(c)) => match RegionPartition::new(*c, b.corner, b.extents) {
            Ok(p) => Some(Some(p)),
            Err(e) => {
                problems.push(e.to_string());
                None
            }
        },
        (RegionSpec::Box(_), None) => None,
    };

    let tol = raw.tolerances;
    for (name, v) in [
        ("lemma", tol.lemma),
        ("ghost_force", tol.ghost_force),
        ("ghost_force_dg_ho", tol.ghost_force_dg_ho),
        ("naive_min", tol.naive_min),
        ("homogeneous_energy", tol.homogeneous_energy),
        ("locality", tol.locality),
        ("gradient", tol.gradient),
        ("gradient_harmonic", tol.gradient_harmonic),
        ("coverings", tol.coverings),
        ("solve_oracle", tol.solve_oracle),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            problems.push(format!("tolerances.{name} must be positive (got {v})"));
        }
    }
    if !(raw.fd_step > 0.0 && raw.fd_step.is_finite()) {
        problems.push(format!("fd_step must be positive (got {})", raw.fd_step));
    }

    let sweep_model = raw.sweep.model.parse::<ModelKind>().map_err(|e| problems.push(format!("sweep.model: {e}"))).ok();
    if let Some(m) = sweep_model {
        if !matches!(m, ModelKind::AcbCell | ModelKind::AcbTetra) {
            problems.push(format!("sweep.model must be acb-cell or acb-tetra (got {m})"));
        }
    }
    if raw.sweep.sizes.len() < 3 {
        problems.push(format!("sweep.sizes needs at least 3 entries for a slope fit (got {})", raw.sweep.sizes.len()));
    }
    let sweep_specs = raw.sweep.interactions.clone().unwrap_or_else(|| {
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]].map(InteractionSpec::toy).to_vec()
    });
    let sweep_laws = build_laws(&sweep_specs, "sweep.interactions", &mut problems);
    if let Some(set) = &sweep_laws {
        for &n in &raw.sweep.sizes {
            match LatticeConfig::new([n; 3], 1.0 / n.max(1) as f64) {
                Ok(c) => {
                    for law in set.laws() {
                        if let Err(e) = c.check_bond(law.eta()) {
                            problems.push(format!("sweep size {n}: {e}"));
                        }
                    }
                }
                Err(e) => problems.push(format!("sweep size {n}: {e}")),
            }
        }
    }

    let solve = raw.solve;
    if !(solve.g_tol > 0.0) || solve.max_iters == 0 || solve.memory == 0 {
        problems.push("solve needs g_tol > 0, max_iters >= 1 and memory >= 1".into());
    }

    let (Some(lattice), Some(laws), Some(model), Some(policy), Some(scheme), Some(partition), Some(sweep_model), Some(sweep_laws)) =
        (lattice, laws, model, policy, scheme, partition, sweep_model, sweep_laws)
    else {
        return Err(ConfigError::Invalid(problems));
    };
    let cfg = RunConfig {
        lattice,
        laws,
        f,
        partition,
        model,
        options: CouplingOptions { policy, scheme },
        seed: raw.seed,
        deterministic: raw.deterministic,
        tolerances: tol,
        trials: raw.trials,
        fd_step: raw.fd_step,
        sweep: Sweep {
            sizes: raw.sweep.sizes,
            amplitude: raw.sweep.amplitude,
            model: sweep_model,
            laws: sweep_laws,
        },
        solve,
        out_dir: raw.output.dir,
    };
    check_model(&cfg, model, &mut problems);
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(problems))
    }
}
