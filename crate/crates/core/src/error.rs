use crate::lattice::Triple;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice fields live on different lattices")]
    ConfigMismatch,

    #[error("degenerate bond: interaction vector must be nonzero")]
    ZeroBond,

    #[error("deformation gradient must satisfy det F > 0 (got {0:e})")]
    NonPositiveDeterminant(f64),

    #[error("invalid interaction set: {0}")]
    InvalidInteractions(String),

    #[error("potential for eta = {eta:?} is singular at zeta = {zeta:?}")]
    SingularConfiguration { eta: Triple, zeta: [f64; 3] },

    #[error("interaction vector {0:?} has a zero component; bond volumes need eta_1 eta_2 eta_3 != 0")]
    DegenerateEta(Triple),

    #[error("coverings for eta = {eta:?} do not close on a torus with extents {extents:?}")]
    CoveringMismatch { eta: Triple, extents: [usize; 3] },

    #[error("degenerate simplex")]
    DegenerateSimplex,

    #[error("invalid region partition: {0}")]
    InvalidPartition(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}
