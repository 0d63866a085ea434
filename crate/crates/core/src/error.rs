//! Error type shared by all toolkit modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The spectral filter passes no bin on the discrete grid.
    #[error("empty passband")]
    EmptyPassband,

    /// Non-finite values appeared during an iterative solve.
    #[error("diverged at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The supersampled transform would exceed the configured size cap.
    #[error("emulation too large: transform side {side} exceeds limit {limit}")]
    EmulationTooLarge { side: usize, limit: usize },

    #[error("degenerate measurements")]
    DegenerateMeasurements,

    #[error("empty spectrum")]
    EmptySpectrum,

    /// Entropy block size does not tile the mask.
    #[error("block mismatch: block {block} does not divide side {n}")]
    BlockMismatch { block: usize, n: usize },

    /// Wraps a failure with the index of the mask being designed or measured.
    #[error("mask {mask_index}: {source}")]
    Mask {
        mask_index: u32,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed OMSK/OMSI container or sidecar.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Annotate an error with the 1-based index of the mask it concerns.
    pub fn for_mask(self, mask_index: u32) -> Error {
        Error::Mask {
            mask_index,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Diverged { .. } | Error::DegenerateMeasurements => true,
            Error::Mask { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
