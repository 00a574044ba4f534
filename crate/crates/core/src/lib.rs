//! Discrepancy of boxes and polytopes: set systems, exact oracles, the γ₂
//! factorization norm, Fourier spectra of polytope indicators, and the
//! range-searching, privacy and quasi-Monte Carlo applications built on them.

pub mod coloring;
pub mod decomposition;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod gamma2;
pub mod geodisc;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod privacy;
pub mod rangestruct;
pub mod setsystems;

pub use error::{Error, Result};
