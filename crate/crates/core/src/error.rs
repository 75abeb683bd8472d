use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("hopping matrix is not symmetric at ({row}, {col}): {forward} vs {backward}")]
    Asymmetric {
        row: usize,
        col: usize,
        forward: f64,
        backward: f64,
    },

    #[error("hopping matrix has nonzero diagonal entry {value} at site {site}")]
    NonzeroDiagonal { site: usize, value: f64 },

    #[error("non-finite hopping entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("sector dimension {dim} exceeds the configured cap {cap}")]
    Capacity { dim: usize, cap: usize },

    #[error("site index {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("sector mismatch: expected (M={expected_sites}, N={expected_particles}), got (M={sites}, N={particles})")]
    SectorMismatch {
        expected_sites: usize,
        expected_particles: usize,
        sites: usize,
        particles: usize,
    },

    #[error("truncation n_max={n_max} leaves Poisson tail {tail:e} at site {site}")]
    Truncation { site: usize, n_max: usize, tail: f64 },

    #[error("non-finite state encountered after t={last_good_time} (try a smaller dt)")]
    NonFiniteState { last_good_time: f64 },

    #[error("coordinate pole: {0}")]
    Pole(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
