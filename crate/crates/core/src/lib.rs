//! Depth-based two-sample testing for ensembles of gridded spatial fields.
//!
//! The library compares two ensembles of fields on a common grid by reducing
//! each field to its integrated Tukey depth and testing whether the two
//! depth-rank distributions coincide (the KD statistic), alongside a
//! quality-index baseline, false-discovery-rate adjustment for families of
//! tests, and seeded Matérn process samplers for calibration studies.
//!
//! Everything is deterministic given its inputs and a 64-bit seed; parallel
//! work items derive independent substreams, so results do not depend on
//! thread count.

pub mod depth;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod io;
pub mod rng;
pub mod sim;
pub mod stat;

pub use ensemble::{subset_region, validate_pair, Ensemble, RegionMask};
pub use error::{Error, Result};
pub use grid::{Grid, WeightMode};
