//! Computational tools for the analysis of branched conformal immersions:
//! Lorentz-space norms of sampled fields, harmonic Laurent fields on annuli
//! and their capacity-type estimates, a spectral Wente solver on disks, the
//! Weierstrass representation of complete minimal surfaces with finite total
//! curvature, conformal neck decomposition, and distributional residue
//! pairings at branch points.

pub mod classifier;
pub mod distrib;
pub mod error;
pub mod grid;
pub mod laurent;
pub mod lorentz;
pub mod neck;
pub mod weierstrass;
pub mod wente;

pub use error::{Error, Result};
