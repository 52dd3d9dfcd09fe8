//! Dataset persistence: a checksummed JSON manifest pointing at CSV files.
//!
//! A dataset on disk is one `manifest.json` plus the files it references,
//! all relative to the manifest's directory:
//!
//! * `Z`, `Y` — matrices as CSV with a two-row header (regions, then
//!   sectors) and two leading label columns (region, sector of each row);
//! * `x` — long CSV `region,sector,output`;
//! * one long CSV per extension, `region,sector,value`, where the pseudo
//!   sector `households` carries direct household pressure;
//! * optional entity statistics (wide CSV with dynamic `pressure:` columns),
//!   watershed and ecoregion records (long `unit_id,field,value` CSVs), and
//!   per-household footprints.
//!
//! The manifest stores a SHA-256 digest per file; loading verifies every
//! digest before parsing, so a silently edited or truncated file cannot
//! produce plausible-looking results.

mod fixture;
mod read;
mod write;

pub use fixture::{generate_fixture, FixtureSpec, PressureProfile};
pub use read::{load_dataset, load_manifest, verify_checksums, LoadedDataset};
pub use write::save_dataset;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocation::EntityStats;
use crate::error::{Error, Result};
use crate::local::{EcoregionRecord, WatershedRecord};
use crate::mrio::{ExtensionAccount, MrioTable};

/// Pseudo sector label of direct household pressure rows in extension files.
pub const HOUSEHOLD_SECTOR: &str = "households";

/// A file referenced from the manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    /// Path relative to the manifest's directory.
    pub path: String,
    /// Lowercase hex SHA-256 of the file's bytes.
    pub sha256: String,
}

/// File table of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub z: FileRef,
    pub y: FileRef,
    pub x: FileRef,
    pub extensions: BTreeMap<String, FileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_stats: Option<FileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watersheds: Option<FileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecoregions: Option<FileRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub households: Option<FileRef>,
    /// `sector,group` CSV assigning every sector to a reporting group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector_groups: Option<FileRef>,
}

/// The manifest of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    /// Year the table and extensions describe.
    pub base_year: i32,
    pub regions: Vec<String>,
    pub sectors: Vec<String>,
    /// Unit string per extension name.
    pub units: BTreeMap<String, String>,
    pub files: ManifestFiles,
}

impl DatasetManifest {
    /// Structural checks that need no file access: every extension has a
    /// unit, every unit is known to the registry.
    pub fn validate(&self) -> Result<()> {
        if self.regions.is_empty() || self.sectors.is_empty() {
            return Err(Error::Config(
                "manifest must list at least one region and one sector".into(),
            ));
        }
        for name in self.files.extensions.keys() {
            let unit = self.units.get(name).ok_or_else(|| {
                Error::Config(format!("extension '{name}' has no entry in the units registry"))
            })?;
            if crate::units::unit_info(unit).is_none() {
                return Err(Error::Config(format!(
                    "extension '{name}' uses unknown unit '{unit}'"
                )));
            }
        }
        Ok(())
    }
}

/// One household's yearly footprint, used for within-city inequality
/// statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdFootprint {
    pub city: String,
    pub household_id: String,
    pub footprint: f64,
}

/// A complete in-memory dataset: the table, its extensions, and any
/// entity-level and local-unit data that accompanies them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub base_year: i32,
    pub table: MrioTable,
    pub extensions: Vec<ExtensionAccount>,
    pub entity_stats: Vec<EntityStats>,
    pub watersheds: Vec<WatershedRecord>,
    pub ecoregions: Vec<EcoregionRecord>,
    pub households: Vec<HouseholdFootprint>,
    /// Optional sector -> group map for aggregated sector reporting. When
    /// present it covers every sector of the table exactly once.
    pub sector_groups: Option<BTreeMap<String, String>>,
}

impl Dataset {
    /// Extension account by name.
    pub fn extension(&self, name: &str) -> Option<&ExtensionAccount> {
        self.extensions.iter().find(|e| e.name == name)
    }
}

/// Lowercase hex SHA-256 of a byte slice.
pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}
