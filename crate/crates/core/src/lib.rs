//! Random combinatorial assemblies with weakly logarithmic component rates:
//! exact counting and conditional laws, Poisson independent-process
//! approximation in total variation, exact samplers, Ruzsa-type
//! conditional-probability bounds, and functional iterated-logarithm /
//! upper-lower-class experiments for additive functions.
//!
//! Layout:
//! - [`model`] — assembly families, Poisson rates, exact weighted laws
//! - [`series`] — power-series coefficient engine behind every probability
//! - [`dist`] — conditional laws and total-variation distances
//! - [`sampler`] — rejection, sequential-DP and Ewens samplers
//! - [`additive`] — additive functions, polygonal processes, Strassen
//!   distance, LIL and upper/lower-class experiments
//! - [`verify`] — enumeration oracles and the Ruzsa-type bound machinery

pub mod backend;
pub mod error;

pub mod additive;
pub mod dist;
pub mod model;
pub mod sampler;
pub mod series;
pub mod verify;

pub use backend::{Backend, Rat};
pub use error::{Error, Result};
pub use model::{AssemblySpec, ComponentVector, RateSequence};
