//! Loading a dataset from disk: manifest, checksums, CSV parsing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::allocation::EntityStats;
use crate::error::{Error, Result};
use crate::local::{EcoregionRecord, EcoregionStatus, WatershedRecord};
use crate::mrio::{ExtensionAccount, MrioTable};

use super::{sha256_hex, Dataset, DatasetManifest, FileRef, HouseholdFootprint, HOUSEHOLD_SECTOR};

/// A dataset loaded from disk, together with where it came from and any
/// non-fatal oddities found along the way.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub manifest: DatasetManifest,
    /// Directory the manifest lives in; file paths are relative to it.
    pub root: PathBuf,
    /// Human-readable notes about recoverable inconsistencies (for example
    /// a stored ecoregion status that disagrees with its fractions).
    pub warnings: Vec<String>,
}

/// Reads and structurally validates a manifest, without touching the files
/// it references.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::Json { file: display, source: e })?;
    manifest.validate()?;
    Ok(manifest)
}

/// Verifies the SHA-256 digest of every file the manifest references.
pub fn verify_checksums(manifest: &DatasetManifest, root: &Path) -> Result<()> {
    for file_ref in referenced_files(&manifest.files) {
        let path = root.join(&file_ref.path);
        let bytes =
            std::fs::read(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let actual = sha256_hex(&bytes);
        if !actual.eq_ignore_ascii_case(&file_ref.sha256) {
            return Err(Error::Checksum {
                file: file_ref.path.clone(),
                expected: file_ref.sha256.to_ascii_lowercase(),
                actual,
            });
        }
    }
    Ok(())
}

fn referenced_files(files: &super::ManifestFiles) -> Vec<&FileRef> {
    let mut refs = vec![&files.z, &files.y, &files.x];
    refs.extend(files.extensions.values());
    refs.extend(files.entity_stats.iter());
    refs.extend(files.watersheds.iter());
    refs.extend(files.ecoregions.iter());
    refs.extend(files.households.iter());
    refs.extend(files.sector_groups.iter());
    refs
}

/// Loads a complete dataset: parses the manifest, verifies every checksum,
/// reads all files, and validates the table (balance, shapes, labels).
pub fn load_dataset(manifest_path: &Path) -> Result<LoadedDataset> {
    let manifest = load_manifest(manifest_path)?;
    let root = manifest_path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    verify_checksums(&manifest, &root)?;

    let regions = &manifest.regions;
    let sectors = &manifest.sectors;
    let row_pairs = region_sector_pairs(regions, sectors);
    let y_cols: Vec<(String, String)> =
        regions.iter().map(|r| (r.clone(), "final_demand".to_string())).collect();

    let z = read_matrix(&root, &manifest.files.z, &row_pairs, &row_pairs)?;
    let y = read_matrix(&root, &manifest.files.y, &row_pairs, &y_cols)?;
    let x = read_output_vector(&root, &manifest.files.x, &row_pairs)?;

    let table =
        MrioTable::new(regions.clone(), sectors.clone(), z, y, x)?;

    let mut extensions = Vec::new();
    for (name, file_ref) in &manifest.files.extensions {
        let unit = manifest.units[name].clone(); // validated present
        let (industry, household) = read_extension(&root, file_ref, regions, &row_pairs)?;
        let ext = ExtensionAccount { name: name.clone(), unit, industry, household };
        ext.validate_for(&table)?;
        extensions.push(ext);
    }

    let mut warnings = Vec::new();
    let entity_stats = match &manifest.files.entity_stats {
        Some(file_ref) => read_entity_stats(&root, file_ref)?,
        None => Vec::new(),
    };
    let watersheds = match &manifest.files.watersheds {
        Some(file_ref) => read_watersheds(&root, file_ref, regions)?,
        None => Vec::new(),
    };
    let ecoregions = match &manifest.files.ecoregions {
        Some(file_ref) => read_ecoregions(&root, file_ref, regions, &mut warnings)?,
        None => Vec::new(),
    };
    let households = match &manifest.files.households {
        Some(file_ref) => read_households(&root, file_ref)?,
        None => Vec::new(),
    };
    let sector_groups = match &manifest.files.sector_groups {
        Some(file_ref) => Some(read_sector_groups(&root, file_ref, sectors)?),
        None => None,
    };

    let dataset = Dataset {
        name: manifest.name.clone(),
        base_year: manifest.base_year,
        table,
        extensions,
        entity_stats,
        watersheds,
        ecoregions,
        households,
        sector_groups,
    };
    Ok(LoadedDataset { dataset, manifest, root, warnings })
}

/// Region-major `(region, sector)` row labels, matching the table's row
/// indexing.
fn region_sector_pairs(regions: &[String], sectors: &[String]) -> Vec<(String, String)> {
    let mut pairs = Vec::with_capacity(regions.len() * sectors.len());
    for r in regions {
        for s in sectors {
            pairs.push((r.clone(), s.clone()));
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// CSV plumbing
// ---------------------------------------------------------------------------

fn read_records(root: &Path, file_ref: &FileRef) -> Result<Vec<csv::StringRecord>> {
    let path = root.join(&file_ref.path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(&path)
        .map_err(|e| Error::parse(&file_ref.path, 0, e.to_string()))?;
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(&file_ref.path, 0, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn field<'a>(
    file: &str,
    record: &'a csv::StringRecord,
    idx: usize,
    what: &str,
) -> Result<&'a str> {
    record.get(idx).ok_or_else(|| {
        Error::parse(file, line_of(record), format!("missing {what} column"))
    })
}

fn field_f64(file: &str, record: &csv::StringRecord, idx: usize, what: &str) -> Result<f64> {
    let raw = field(file, record, idx, what)?;
    let value: f64 = raw.trim().parse().map_err(|_| {
        Error::parse(file, line_of(record), format!("{what} '{raw}' is not a number"))
    })?;
    if !value.is_finite() {
        return Err(Error::parse(
            file,
            line_of(record),
            format!("{what} must be finite, got {value}"),
        ));
    }
    Ok(value)
}

/// Reads a matrix CSV with a two-row header and two leading label columns.
///
/// Row 1: `region,sector` then the first header label of each column.
/// Row 2: two empty cells then the second header label of each column.
/// Data rows carry the exact `(region, sector)` pair of each table row, in
/// region-major order.
fn read_matrix(
    root: &Path,
    file_ref: &FileRef,
    row_pairs: &[(String, String)],
    col_pairs: &[(String, String)],
) -> Result<DMatrix<f64>> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    if records.len() != row_pairs.len() + 2 {
        return Err(Error::parse(
            file,
            0,
            format!(
                "expected 2 header rows + {} data rows, found {} rows",
                row_pairs.len(),
                records.len()
            ),
        ));
    }

    let width = col_pairs.len() + 2;
    for (header_idx, corner) in [("region", 0usize), ("sector", 1usize)] {
        let got = field(file, &records[0], corner, "header corner")?;
        if got != header_idx {
            return Err(Error::parse(
                file,
                line_of(&records[0]),
                format!("header corner should read '{header_idx}', found '{got}'"),
            ));
        }
    }
    for (record, second_row) in [(&records[0], false), (&records[1], true)] {
        if record.len() != width {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("expected {} columns, found {}", width, record.len()),
            ));
        }
        if second_row {
            for corner in 0..2 {
                let got = record.get(corner).unwrap_or("");
                if !got.is_empty() {
                    return Err(Error::parse(
                        file,
                        line_of(record),
                        format!("second header row should start with two empty cells, found '{got}'"),
                    ));
                }
            }
        }
        for (j, pair) in col_pairs.iter().enumerate() {
            let expect = if second_row { &pair.1 } else { &pair.0 };
            let got = record.get(j + 2).unwrap_or("");
            if got != expect {
                return Err(Error::parse(
                    file,
                    line_of(record),
                    format!("column {} header should be '{expect}', found '{got}'", j + 1),
                ));
            }
        }
    }

    let mut matrix = DMatrix::zeros(row_pairs.len(), col_pairs.len());
    for (i, record) in records[2..].iter().enumerate() {
        if record.len() != width {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("expected {} columns, found {}", width, record.len()),
            ));
        }
        let (want_region, want_sector) = &row_pairs[i];
        let got_region = field(file, record, 0, "region label")?;
        let got_sector = field(file, record, 1, "sector label")?;
        if got_region != want_region || got_sector != want_sector {
            return Err(Error::parse(
                file,
                line_of(record),
                format!(
                    "row {} should be labelled ({want_region}, {want_sector}), \
                     found ({got_region}, {got_sector})",
                    i + 1
                ),
            ));
        }
        for j in 0..col_pairs.len() {
            matrix[(i, j)] = field_f64(file, record, j + 2, "matrix entry")?;
        }
    }
    Ok(matrix)
}

/// Reads the gross-output vector from a long `region,sector,output` CSV.
fn read_output_vector(
    root: &Path,
    file_ref: &FileRef,
    row_pairs: &[(String, String)],
) -> Result<DVector<f64>> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    expect_header(file, &records, &["region", "sector", "output"])?;

    let index: BTreeMap<(&str, &str), usize> = row_pairs
        .iter()
        .enumerate()
        .map(|(i, (r, s))| ((r.as_str(), s.as_str()), i))
        .collect();
    let mut x = DVector::zeros(row_pairs.len());
    let mut seen = vec![false; row_pairs.len()];
    for record in &records[1..] {
        let region = field(file, record, 0, "region")?;
        let sector = field(file, record, 1, "sector")?;
        let i = *index.get(&(region, sector)).ok_or_else(|| {
            Error::parse(
                file,
                line_of(record),
                format!("unknown (region, sector) pair ({region}, {sector})"),
            )
        })?;
        if seen[i] {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("duplicate entry for ({region}, {sector})"),
            ));
        }
        seen[i] = true;
        x[i] = field_f64(file, record, 2, "output")?;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let (r, s) = &row_pairs[i];
        return Err(Error::parse(file, 0, format!("no output entry for ({r}, {s})")));
    }
    Ok(x)
}

/// Reads one extension from a long `region,sector,value` CSV. Rows with the
/// pseudo sector `households` fill the household vector; every industry cell
/// must appear exactly once, household rows are optional (default 0).
fn read_extension(
    root: &Path,
    file_ref: &FileRef,
    regions: &[String],
    row_pairs: &[(String, String)],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    expect_header(file, &records, &["region", "sector", "value"])?;

    let row_index: BTreeMap<(&str, &str), usize> = row_pairs
        .iter()
        .enumerate()
        .map(|(i, (r, s))| ((r.as_str(), s.as_str()), i))
        .collect();
    let region_index: BTreeMap<&str, usize> =
        regions.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();

    let mut industry = DVector::zeros(row_pairs.len());
    let mut household = DVector::zeros(regions.len());
    let mut seen_industry = vec![false; row_pairs.len()];
    let mut seen_household = vec![false; regions.len()];
    for record in &records[1..] {
        let region = field(file, record, 0, "region")?;
        let sector = field(file, record, 1, "sector")?;
        let value = field_f64(file, record, 2, "value")?;
        if sector == HOUSEHOLD_SECTOR {
            let r = *region_index.get(region).ok_or_else(|| {
                Error::parse(file, line_of(record), format!("unknown region '{region}'"))
            })?;
            if seen_household[r] {
                return Err(Error::parse(
                    file,
                    line_of(record),
                    format!("duplicate household entry for region '{region}'"),
                ));
            }
            seen_household[r] = true;
            household[r] = value;
        } else {
            let i = *row_index.get(&(region, sector)).ok_or_else(|| {
                Error::parse(
                    file,
                    line_of(record),
                    format!("unknown (region, sector) pair ({region}, {sector})"),
                )
            })?;
            if seen_industry[i] {
                return Err(Error::parse(
                    file,
                    line_of(record),
                    format!("duplicate entry for ({region}, {sector})"),
                ));
            }
            seen_industry[i] = true;
            industry[i] = value;
        }
    }
    if let Some(i) = seen_industry.iter().position(|s| !s) {
        let (r, s) = &row_pairs[i];
        return Err(Error::parse(file, 0, format!("no value for ({r}, {s})")));
    }
    Ok((industry, household))
}

/// Reads entity statistics from a wide CSV. The first five columns are
/// fixed (`entity_id,parent,population,value_added,employment`); any further
/// column must be named `pressure:<key>` and fills the pressures map. Empty
/// cells mean "not available".
fn read_entity_stats(root: &Path, file_ref: &FileRef) -> Result<Vec<EntityStats>> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    if records.is_empty() {
        return Err(Error::parse(file, 0, "missing header row".to_string()));
    }
    let header = &records[0];
    let fixed = ["entity_id", "parent", "population", "value_added", "employment"];
    for (idx, want) in fixed.iter().enumerate() {
        let got = header.get(idx).unwrap_or("");
        if got != *want {
            return Err(Error::parse(
                file,
                line_of(header),
                format!("column {} should be '{want}', found '{got}'", idx + 1),
            ));
        }
    }
    let mut pressure_keys = Vec::new();
    for idx in fixed.len()..header.len() {
        let name = header.get(idx).unwrap_or("");
        match name.strip_prefix("pressure:") {
            Some(key) if !key.is_empty() => pressure_keys.push(key.to_string()),
            _ => {
                return Err(Error::parse(
                    file,
                    line_of(header),
                    format!("unexpected column '{name}' (expected 'pressure:<key>')"),
                ))
            }
        }
    }

    let mut stats = Vec::new();
    let mut seen_ids = std::collections::BTreeSet::new();
    for record in &records[1..] {
        if record.len() != header.len() {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("expected {} columns, found {}", header.len(), record.len()),
            ));
        }
        let entity_id = field(file, record, 0, "entity_id")?.to_string();
        if entity_id.is_empty() {
            return Err(Error::parse(file, line_of(record), "empty entity_id".to_string()));
        }
        if !seen_ids.insert(entity_id.clone()) {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("duplicate entity_id '{entity_id}'"),
            ));
        }
        let mut entry = EntityStats::new(entity_id);
        let parent = field(file, record, 1, "parent")?;
        if !parent.is_empty() {
            entry.parent = Some(parent.to_string());
        }
        entry.population = optional_f64(file, record, 2, "population")?;
        entry.value_added = optional_f64(file, record, 3, "value_added")?;
        entry.employment = optional_f64(file, record, 4, "employment")?;
        for (offset, key) in pressure_keys.iter().enumerate() {
            if let Some(value) = optional_f64(file, record, fixed.len() + offset, key)? {
                entry.pressures.insert(key.clone(), value);
            }
        }
        stats.push(entry);
    }
    Ok(stats)
}

fn optional_f64(
    file: &str,
    record: &csv::StringRecord,
    idx: usize,
    what: &str,
) -> Result<Option<f64>> {
    match record.get(idx) {
        None => Ok(None),
        Some(raw) if raw.trim().is_empty() => Ok(None),
        Some(_) => field_f64(file, record, idx, what).map(Some),
    }
}

/// Parsed long-format rows of one local unit, keyed by field name.
type UnitFields = BTreeMap<String, (u64, String)>;

/// Reads a long `unit_id,field,value` CSV into per-unit field maps, in
/// sorted unit order. Duplicate fields of a unit are rejected.
fn read_unit_fields(root: &Path, file_ref: &FileRef) -> Result<BTreeMap<String, UnitFields>> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    expect_header(file, &records, &["unit_id", "field", "value"])?;
    let mut units: BTreeMap<String, UnitFields> = BTreeMap::new();
    for record in &records[1..] {
        let unit_id = field(file, record, 0, "unit_id")?.to_string();
        let field_name = field(file, record, 1, "field")?.to_string();
        let value = field(file, record, 2, "value")?.to_string();
        if unit_id.is_empty() || field_name.is_empty() {
            return Err(Error::parse(
                file,
                line_of(record),
                "unit_id and field must be non-empty".to_string(),
            ));
        }
        let fields = units.entry(unit_id.clone()).or_default();
        if fields.insert(field_name.clone(), (line_of(record), value)).is_some() {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("duplicate field '{field_name}' for unit '{unit_id}'"),
            ));
        }
    }
    Ok(units)
}

fn parse_unit_f64(file: &str, line: u64, what: &str, raw: &str) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|_| {
        Error::parse(file, line, format!("{what} '{raw}' is not a number"))
    })?;
    if !value.is_finite() {
        return Err(Error::parse(file, line, format!("{what} must be finite, got {value}")));
    }
    Ok(value)
}

/// Reads watershed records. Required fields per unit: `maf`, `hwc`, `ewr`;
/// any number of `consumption:<country>` fields attribute consumption to a
/// country's final demand, and each country must be a region of the table.
fn read_watersheds(
    root: &Path,
    file_ref: &FileRef,
    regions: &[String],
) -> Result<Vec<WatershedRecord>> {
    let file = &file_ref.path;
    let units = read_unit_fields(root, file_ref)?;
    let mut records = Vec::new();
    for (unit_id, fields) in units {
        let mut rec = WatershedRecord {
            unit_id: unit_id.clone(),
            maf: 0.0,
            hwc: 0.0,
            ewr: 0.0,
            country_consumption: BTreeMap::new(),
        };
        for required in ["maf", "hwc", "ewr"] {
            let (line, raw) = fields.get(required).ok_or_else(|| {
                Error::parse(file, 0, format!("watershed '{unit_id}' is missing '{required}'"))
            })?;
            let value = parse_unit_f64(file, *line, required, raw)?;
            match required {
                "maf" => rec.maf = value,
                "hwc" => rec.hwc = value,
                _ => rec.ewr = value,
            }
        }
        for (name, (line, raw)) in &fields {
            if matches!(name.as_str(), "maf" | "hwc" | "ewr") {
                continue;
            }
            let country = name.strip_prefix("consumption:").ok_or_else(|| {
                Error::parse(file, *line, format!("unknown watershed field '{name}'"))
            })?;
            if !regions.iter().any(|r| r == country) {
                return Err(Error::parse(
                    file,
                    *line,
                    format!("watershed '{unit_id}' attributes consumption to unknown country '{country}'"),
                ));
            }
            let value = parse_unit_f64(file, *line, name, raw)?;
            rec.country_consumption.insert(country.to_string(), value);
        }
        records.push(rec);
    }
    Ok(records)
}

/// Reads ecoregion records. Required fields: `protected_fraction` and
/// `habitat_fraction`; optional `status` (cross-checked against the
/// classification the fractions imply, mismatch is a warning); any number of
/// `loss:<country>` fields, each country a region of the table.
fn read_ecoregions(
    root: &Path,
    file_ref: &FileRef,
    regions: &[String],
    warnings: &mut Vec<String>,
) -> Result<Vec<EcoregionRecord>> {
    let file = &file_ref.path;
    let units = read_unit_fields(root, file_ref)?;
    let mut records = Vec::new();
    for (unit_id, fields) in units {
        let mut rec = EcoregionRecord {
            unit_id: unit_id.clone(),
            protected_fraction: 0.0,
            habitat_fraction: 0.0,
            status: None,
            country_loss: BTreeMap::new(),
        };
        for required in ["protected_fraction", "habitat_fraction"] {
            let (line, raw) = fields.get(required).ok_or_else(|| {
                Error::parse(file, 0, format!("ecoregion '{unit_id}' is missing '{required}'"))
            })?;
            let value = parse_unit_f64(file, *line, required, raw)?;
            if required == "protected_fraction" {
                rec.protected_fraction = value;
            } else {
                rec.habitat_fraction = value;
            }
        }
        for (name, (line, raw)) in &fields {
            match name.as_str() {
                "protected_fraction" | "habitat_fraction" => {}
                "status" => {
                    let status = EcoregionStatus::from_code(raw.trim()).map_err(|_| {
                        Error::parse(file, *line, format!("unknown ecoregion status '{raw}'"))
                    })?;
                    rec.status = Some(status);
                }
                other => {
                    let country = other.strip_prefix("loss:").ok_or_else(|| {
                        Error::parse(file, *line, format!("unknown ecoregion field '{other}'"))
                    })?;
                    if !regions.iter().any(|r| r == country) {
                        return Err(Error::parse(
                            file,
                            *line,
                            format!("ecoregion '{unit_id}' attributes loss to unknown country '{country}'"),
                        ));
                    }
                    let value = parse_unit_f64(file, *line, other, raw)?;
                    rec.country_loss.insert(country.to_string(), value);
                }
            }
        }
        if let (Some(stored), Ok(derived)) = (rec.status, rec.derived_status()) {
            if stored != derived {
                warnings.push(format!(
                    "{file}: ecoregion '{unit_id}' lists status '{}' but its fractions imply '{}'",
                    stored.code(),
                    derived.code()
                ));
            }
        }
        records.push(rec);
    }
    Ok(records)
}

/// Reads per-household footprints from a `city,household_id,footprint` CSV.
fn read_households(root: &Path, file_ref: &FileRef) -> Result<Vec<HouseholdFootprint>> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    expect_header(file, &records, &["city", "household_id", "footprint"])?;
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in &records[1..] {
        let city = field(file, record, 0, "city")?.to_string();
        let household_id = field(file, record, 1, "household_id")?.to_string();
        let footprint = field_f64(file, record, 2, "footprint")?;
        if footprint < 0.0 {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("footprint must be non-negative, got {footprint}"),
            ));
        }
        if !seen.insert((city.clone(), household_id.clone())) {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("duplicate household '{household_id}' in city '{city}'"),
            ));
        }
        out.push(HouseholdFootprint { city, household_id, footprint });
    }
    Ok(out)
}

/// `sector,group` CSV. The map must cover every sector of the table exactly
/// once and may not name sectors the table does not have.
fn read_sector_groups(
    root: &Path,
    file_ref: &FileRef,
    sectors: &[String],
) -> Result<BTreeMap<String, String>> {
    let file = &file_ref.path;
    let records = read_records(root, file_ref)?;
    expect_header(file, &records, &["sector", "group"])?;
    let mut out = BTreeMap::new();
    for record in &records[1..] {
        let sector = field(file, record, 0, "sector")?.to_string();
        let group = field(file, record, 1, "group")?.to_string();
        if !sectors.contains(&sector) {
            return Err(Error::LabelMismatch(format!(
                "{file}: sector group map names unknown sector '{sector}'"
            )));
        }
        if group.is_empty() {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("sector '{sector}' has an empty group label"),
            ));
        }
        if out.insert(sector.clone(), group).is_some() {
            return Err(Error::parse(
                file,
                line_of(record),
                format!("sector '{sector}' is grouped twice"),
            ));
        }
    }
    for sector in sectors {
        if !out.contains_key(sector) {
            return Err(Error::LabelMismatch(format!(
                "{file}: sector group map misses sector '{sector}'"
            )));
        }
    }
    Ok(out)
}

fn expect_header(file: &str, records: &[csv::StringRecord], want: &[&str]) -> Result<()> {
    let header = records
        .first()
        .ok_or_else(|| Error::parse(file, 0, "missing header row".to_string()))?;
    let got: Vec<&str> = header.iter().collect();
    if got != want {
        return Err(Error::parse(
            file,
            line_of(header),
            format!("header should be '{}', found '{}'", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}
