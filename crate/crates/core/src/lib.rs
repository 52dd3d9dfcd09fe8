//! Footprint accounting and effort-sharing allocation of planetary
//! boundaries.
//!
//! The crate walks the full chain from raw input-output data to report
//! tables:
//!
//! 1. [`mrio`] turns a multi-regional input-output table plus environmental
//!    extensions into production- and consumption-based footprint accounts;
//! 2. [`budgets`] derives global yearly budgets for climate, freshwater and
//!    biodiversity boundaries;
//! 3. [`allocation`] splits those budgets over countries, sectors or cities
//!    under five effort-sharing rules;
//! 4. [`local`] evaluates watershed and ecoregion safe operating spaces and
//!    the transgression of each country's allocated slice;
//! 5. [`report`] computes the derived statistics shown in result tables;
//! 6. [`io`] reads and writes the on-disk dataset format (CSV files behind a
//!    checksummed JSON manifest) and generates synthetic fixtures;
//! 7. [`scenario`] orchestrates a whole run from a JSON scenario
//!    configuration to a directory of CSV/JSON reports.

pub mod allocation;
pub mod budgets;
pub mod error;
pub mod io;
pub mod local;
pub mod mrio;
pub mod numeric;
pub mod report;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};

// Linear-algebra types appear in this crate's public API; re-exporting the
// crate keeps callers on the same version.
pub use nalgebra;
