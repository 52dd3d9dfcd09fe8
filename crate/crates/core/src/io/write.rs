//! Saving a dataset to disk in the manifest-plus-CSV layout.
//!
//! Output is deterministic: rows follow the canonical region-major order
//! (or sorted unit/entity ids), floats are printed in Rust's shortest
//! round-trip form, and the manifest checksums are computed from the exact
//! bytes written. Saving, loading, and saving again reproduces identical
//! files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::{sha256_hex, Dataset, DatasetManifest, FileRef, ManifestFiles, HOUSEHOLD_SECTOR};

/// Writes every file of the dataset into `dir` (created if missing) plus a
/// `manifest.json` with fresh checksums, and returns the manifest's path.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;

    let table = &dataset.table;
    let regions: Vec<String> = table.regions().to_vec();
    let sectors: Vec<String> = table.sectors().to_vec();
    let mut row_pairs = Vec::with_capacity(table.dim());
    for r in &regions {
        for s in &sectors {
            row_pairs.push((r.clone(), s.clone()));
        }
    }
    let y_cols: Vec<(String, String)> =
        regions.iter().map(|r| (r.clone(), "final_demand".to_string())).collect();

    let z = write_file(dir, "z.csv", matrix_csv(&row_pairs, &row_pairs, table.z())?)?;
    let y = write_file(dir, "y.csv", matrix_csv(&row_pairs, &y_cols, table.y())?)?;
    let x = write_file(dir, "x.csv", output_csv(&row_pairs, table.x().as_slice())?)?;

    let mut extensions = BTreeMap::new();
    let mut units = BTreeMap::new();
    for ext in &dataset.extensions {
        let name = format!("ext_{}.csv", ext.name);
        let body = extension_csv(&row_pairs, &regions, ext)?;
        extensions.insert(ext.name.clone(), write_file(dir, &name, body)?);
        units.insert(ext.name.clone(), ext.unit.clone());
    }

    let entity_stats = if dataset.entity_stats.is_empty() {
        None
    } else {
        Some(write_file(dir, "entity_stats.csv", entity_stats_csv(&dataset.entity_stats)?)?)
    };
    let watersheds = if dataset.watersheds.is_empty() {
        None
    } else {
        Some(write_file(dir, "watersheds.csv", watersheds_csv(&dataset.watersheds)?)?)
    };
    let ecoregions = if dataset.ecoregions.is_empty() {
        None
    } else {
        Some(write_file(dir, "ecoregions.csv", ecoregions_csv(&dataset.ecoregions)?)?)
    };
    let households = if dataset.households.is_empty() {
        None
    } else {
        Some(write_file(dir, "households.csv", households_csv(&dataset.households)?)?)
    };
    let sector_groups = match &dataset.sector_groups {
        Some(groups) => {
            Some(write_file(dir, "sector_groups.csv", sector_groups_csv(&sectors, groups)?)?)
        }
        None => None,
    };

    let manifest = DatasetManifest {
        name: dataset.name.clone(),
        base_year: dataset.base_year,
        regions,
        sectors,
        units,
        files: ManifestFiles {
            z,
            y,
            x,
            extensions,
            entity_stats,
            watersheds,
            ecoregions,
            households,
            sector_groups,
        },
    };
    manifest.validate()?;

    let manifest_path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Json { file: "manifest.json".into(), source: e })?;
    text.push('\n');
    std::fs::write(&manifest_path, text)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    Ok(manifest_path)
}

/// Writes `body` to `dir/name` and returns its manifest entry.
fn write_file(dir: &Path, name: &str, body: Vec<u8>) -> Result<FileRef> {
    let path = dir.join(name);
    std::fs::write(&path, &body).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(FileRef { path: name.to_string(), sha256: sha256_hex(&body) })
}

/// Shortest round-trip decimal form of `value`.
fn fmt(value: f64) -> String {
    format!("{value}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(writer: csv::Writer<Vec<u8>>, name: &str) -> Result<Vec<u8>> {
    writer.into_inner().map_err(|e| Error::parse(name, 0, e.to_string()))
}

/// Matrix CSV with a two-row header and two leading label columns.
fn matrix_csv(
    row_pairs: &[(String, String)],
    col_pairs: &[(String, String)],
    matrix: &DMatrix<f64>,
) -> Result<Vec<u8>> {
    let mut writer = csv_writer();
    let mut first = vec!["region".to_string(), "sector".to_string()];
    first.extend(col_pairs.iter().map(|(a, _)| a.clone()));
    writer.write_record(&first).map_err(|e| Error::parse("matrix", 0, e.to_string()))?;
    let mut second = vec![String::new(), String::new()];
    second.extend(col_pairs.iter().map(|(_, b)| b.clone()));
    writer.write_record(&second).map_err(|e| Error::parse("matrix", 0, e.to_string()))?;
    for (i, (r, s)) in row_pairs.iter().enumerate() {
        let mut row = vec![r.clone(), s.clone()];
        row.extend((0..col_pairs.len()).map(|j| fmt(matrix[(i, j)])));
        writer.write_record(&row).map_err(|e| Error::parse("matrix", 0, e.to_string()))?;
    }
    finish(writer, "matrix")
}

/// Long `region,sector,output` CSV.
fn output_csv(row_pairs: &[(String, String)], x: &[f64]) -> Result<Vec<u8>> {
    let mut writer = csv_writer();
    writer
        .write_record(["region", "sector", "output"])
        .map_err(|e| Error::parse("x", 0, e.to_string()))?;
    for ((r, s), value) in row_pairs.iter().zip(x) {
        writer
            .write_record([r.as_str(), s.as_str(), &fmt(*value)])
            .map_err(|e| Error::parse("x", 0, e.to_string()))?;
    }
    finish(writer, "x")
}

/// Long `region,sector,value` CSV: industry rows in table order, then one
/// `households` row per region.
fn extension_csv(
    row_pairs: &[(String, String)],
    regions: &[String],
    ext: &crate::mrio::ExtensionAccount,
) -> Result<Vec<u8>> {
    let mut writer = csv_writer();
    writer
        .write_record(["region", "sector", "value"])
        .map_err(|e| Error::parse(&ext.name, 0, e.to_string()))?;
    for (i, (r, s)) in row_pairs.iter().enumerate() {
        writer
            .write_record([r.as_str(), s.as_str(), &fmt(ext.industry[i])])
            .map_err(|e| Error::parse(&ext.name, 0, e.to_string()))?;
    }
    for (r, region) in regions.iter().enumerate() {
        writer
            .write_record([region.as_str(), HOUSEHOLD_SECTOR, &fmt(ext.household[r])])
            .map_err(|e| Error::parse(&ext.name, 0, e.to_string()))?;
    }
    finish(writer, &ext.name)
}

/// Wide entity-statistics CSV; pressure columns are the sorted union of all
/// pressure keys that appear.
fn entity_stats_csv(stats: &[crate::allocation::EntityStats]) -> Result<Vec<u8>> {
    let mut pressure_keys: Vec<String> = stats
        .iter()
        .flat_map(|s| s.pressures.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    pressure_keys.dedup();

    let mut writer = csv_writer();
    let mut header =
        vec!["entity_id".to_string(), "parent".to_string(), "population".to_string(),
             "value_added".to_string(), "employment".to_string()];
    header.extend(pressure_keys.iter().map(|k| format!("pressure:{k}")));
    writer.write_record(&header).map_err(|e| Error::parse("entity_stats", 0, e.to_string()))?;

    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    for entry in stats {
        let mut row = vec![
            entry.entity_id.clone(),
            entry.parent.clone().unwrap_or_default(),
            opt(entry.population),
            opt(entry.value_added),
            opt(entry.employment),
        ];
        for key in &pressure_keys {
            row.push(entry.pressures.get(key).copied().map(fmt).unwrap_or_default());
        }
        writer.write_record(&row).map_err(|e| Error::parse("entity_stats", 0, e.to_string()))?;
    }
    finish(writer, "entity_stats")
}

/// Long `unit_id,field,value` CSV for watersheds.
fn watersheds_csv(records: &[crate::local::WatershedRecord]) -> Result<Vec<u8>> {
    let mut writer = csv_writer();
    writer
        .write_record(["unit_id", "field", "value"])
        .map_err(|e| Error::parse("watersheds", 0, e.to_string()))?;
    let mut sorted: Vec<_> = records.iter().collect();
    sorted.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    for rec in sorted {
        for (name, value) in
            [("maf", rec.maf), ("hwc", rec.hwc), ("ewr", rec.ewr)]
        {
            writer
                .write_record([rec.unit_id.as_str(), name, &fmt(value)])
                .map_err(|e| Error::parse("watersheds", 0, e.to_string()))?;
        }
        for (country, value) in &rec.country_consumption {
            writer
                .write_record([
                    rec.unit_id.as_str(),
                    &format!("consumption:{country}"),
                    &fmt(*value),
                ])
                .map_err(|e| Error::parse("watersheds", 0, e.to_string()))?;
        }
    }
    finish(writer, "watersheds")
}

/// Long `unit_id,field,value` CSV for ecoregions.
fn ecoregions_csv(records: &[crate::local::EcoregionRecord]) -> Result<Vec<u8>> {
    let mut writer = csv_writer();
    writer
        .write_record(["unit_id", "field", "value"])
        .map_err(|e| Error::parse("ecoregions", 0, e.to_string()))?;
    let mut sorted: Vec<_> = records.iter().collect();
    sorted.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    for rec in sorted {
        for (name, value) in [
            ("protected_fraction", rec.protected_fraction),
            ("habitat_fraction", rec.habitat_fraction),
        ] {
            writer
                .write_record([rec.unit_id.as_str(), name, &fmt(value)])
                .map_err(|e| Error::parse("ecoregions", 0, e.to_string()))?;
        }
        if let Some(status) = rec.status {
            writer
                .write_record([rec.unit_id.as_str(), "status", status.code()])
                .map_err(|e| Error::parse("ecoregions", 0, e.to_string()))?;
        }
        for (country, value) in &rec.country_loss {
            writer
                .write_record([rec.unit_id.as_str(), &format!("loss:{country}"), &fmt(*value)])
                .map_err(|e| Error::parse("ecoregions", 0, e.to_string()))?;
        }
    }
    finish(writer, "ecoregions")
}

/// `sector,group` CSV in the table's sector order. Every table sector must
/// have a group; extra map entries are unknown sectors and rejected.
fn sector_groups_csv(sectors: &[String], groups: &BTreeMap<String, String>) -> Result<Vec<u8>> {
    for sector in groups.keys() {
        if !sectors.contains(sector) {
            return Err(Error::Config(format!(
                "sector group map names unknown sector '{sector}'"
            )));
        }
    }
    let mut writer = csv_writer();
    writer
        .write_record(["sector", "group"])
        .map_err(|e| Error::parse("sector_groups", 0, e.to_string()))?;
    for sector in sectors {
        let group = groups.get(sector).ok_or_else(|| {
            Error::Config(format!("sector group map misses sector '{sector}'"))
        })?;
        writer
            .write_record([sector.as_str(), group.as_str()])
            .map_err(|e| Error::parse("sector_groups", 0, e.to_string()))?;
    }
    finish(writer, "sector_groups")
}

/// `city,household_id,footprint` CSV in input order.
fn households_csv(households: &[super::HouseholdFootprint]) -> Result<Vec<u8>> {
    let mut writer = csv_writer();
    writer
        .write_record(["city", "household_id", "footprint"])
        .map_err(|e| Error::parse("households", 0, e.to_string()))?;
    for hh in households {
        writer
            .write_record([hh.city.as_str(), hh.household_id.as_str(), &fmt(hh.footprint)])
            .map_err(|e| Error::parse("households", 0, e.to_string()))?;
    }
    finish(writer, "households")
}
