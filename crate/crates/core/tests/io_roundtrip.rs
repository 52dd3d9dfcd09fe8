//! End-to-end checks of the dataset format: a hand-written golden dataset
//! pins the on-disk layout, and generated fixtures must survive a
//! save/load/save cycle byte for byte.

use std::path::{Path, PathBuf};

use approx::assert_relative_eq;
use sha2::{Digest, Sha256};

use pb_core::io::{
    generate_fixture, load_dataset, save_dataset, FixtureSpec, PressureProfile,
};
use pb_core::local::{watershed_lb, EcoregionStatus};
use pb_core::mrio::compute_accounts;

fn golden_manifest() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden/manifest.json")
}

fn sample_spec() -> FixtureSpec {
    FixtureSpec {
        name: "sample".into(),
        seed: 42,
        regions: 3,
        sectors: 2,
        trade_intensity: 0.25,
        extensions: vec![
            PressureProfile {
                name: "co2".into(),
                unit: "Mt CO2".into(),
                industry_range: (1.0, 8.0),
                household_range: (0.2, 1.5),
            },
            PressureProfile {
                name: "water".into(),
                unit: "Mm3".into(),
                industry_range: (10.0, 60.0),
                household_range: (2.0, 9.0),
            },
        ],
        watersheds: 3,
        ecoregions: 3,
        cities: 2,
        households_per_city: 5,
        base_year: 2016,
        sector_groups: 0,
    }
}

/// The committed golden dataset loads, and the accounts computed from it
/// match values worked out by hand:
/// `Z = [[10,40],[30,20]]`, `Y = [[40,10],[30,120]]`, `x = [100,200]`,
/// `f = [20,30]`, `f_hh = [1,2]` give `PBA = [21,32]`, `CBA = [20,33]`.
#[test]
fn golden_dataset_loads_and_matches_hand_accounts() {
    let loaded = load_dataset(&golden_manifest()).unwrap();
    assert!(loaded.warnings.is_empty(), "unexpected warnings: {:?}", loaded.warnings);

    let dataset = &loaded.dataset;
    let table = &dataset.table;
    assert_eq!(table.regions(), ["AA".to_string(), "BB".to_string()]);
    assert_eq!(table.sectors(), ["ind".to_string()]);
    assert_eq!(table.z()[(0, 1)], 40.0);
    assert_eq!(table.y()[(1, 1)], 120.0);
    assert_eq!(table.x()[1], 200.0);

    let accounts = compute_accounts(table, &dataset.extensions).unwrap();
    assert_eq!(accounts.len(), 1);
    let co2 = &accounts[0];
    assert_eq!(co2.unit, "Mt CO2");
    assert_relative_eq!(co2.pba[0], 21.0, max_relative = 1e-9);
    assert_relative_eq!(co2.pba[1], 32.0, max_relative = 1e-9);
    assert_relative_eq!(co2.cba[0], 20.0, max_relative = 1e-9);
    assert_relative_eq!(co2.cba[1], 33.0, max_relative = 1e-9);

    // Local units: LB = 100 - (10 + 40 + 0.15 * 100) = 35.
    assert_eq!(dataset.watersheds.len(), 1);
    let w1 = &dataset.watersheds[0];
    assert_relative_eq!(watershed_lb(w1).unwrap(), 35.0, max_relative = 1e-12);
    assert_eq!(w1.country_consumption["AA"], 6.0);

    assert_eq!(dataset.ecoregions.len(), 1);
    let e1 = &dataset.ecoregions[0];
    assert_eq!(e1.status, Some(EcoregionStatus::HalfProtected));
    assert_eq!(e1.derived_status().unwrap(), EcoregionStatus::HalfProtected);
    assert_eq!(e1.country_loss["BB"], 3.0);

    // Entity statistics, including an empty optional cell.
    let aa = dataset.entity_stats.iter().find(|s| s.entity_id == "AA").unwrap();
    assert_eq!(aa.population, Some(1.0e6));
    assert_eq!(aa.pressures["co2:cba"], 20.0);
    let aa_ind = dataset.entity_stats.iter().find(|s| s.entity_id == "AA:ind").unwrap();
    assert_eq!(aa_ind.parent.as_deref(), Some("AA"));
    assert_eq!(aa_ind.population, None);
    assert!(aa_ind.pressures.is_empty());

    assert_eq!(dataset.households.len(), 2);
    assert_eq!(dataset.households[1].footprint, 3.0);
}

/// Saving a generated dataset and loading it back reproduces it exactly:
/// floats are written in shortest round-trip form.
#[test]
fn save_load_round_trip_preserves_dataset() {
    let dataset = generate_fixture(&sample_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
    let loaded = load_dataset(&manifest_path).unwrap();
    assert!(loaded.warnings.is_empty(), "unexpected warnings: {:?}", loaded.warnings);
    assert_eq!(loaded.dataset, dataset);
}

/// Saving the same dataset twice, or saving what was just loaded, produces
/// byte-identical files — the writer has no hidden nondeterminism.
#[test]
fn saving_is_byte_stable() {
    let dataset = generate_fixture(&sample_spec()).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    save_dataset(&dataset, dir_a.path()).unwrap();
    let manifest_b = save_dataset(&dataset, dir_b.path()).unwrap();

    let reloaded = load_dataset(&manifest_b).unwrap().dataset;
    let dir_c = tempfile::tempdir().unwrap();
    save_dataset(&reloaded, dir_c.path()).unwrap();

    for dir in [dir_b.path(), dir_c.path()] {
        let mut names: Vec<String> = std::fs::read_dir(dir_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for name in names {
            let a = std::fs::read(dir_a.path().join(&name)).unwrap();
            let b = std::fs::read(dir.join(&name)).unwrap();
            assert_eq!(a, b, "file {name} differs between saves");
        }
    }
}

/// A file whose bytes no longer match the manifest digest is rejected
/// before any parsing happens.
#[test]
fn checksum_mismatch_is_detected() {
    let dataset = generate_fixture(&sample_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();

    let z_path = dir.path().join("z.csv");
    let mut bytes = std::fs::read(&z_path).unwrap();
    bytes.push(b'#');
    std::fs::write(&z_path, bytes).unwrap();

    let err = load_dataset(&manifest_path).unwrap_err();
    assert!(
        matches!(err, pb_core::Error::Checksum { ref file, .. } if file == "z.csv"),
        "expected checksum error for z.csv, got: {err}"
    );
}

/// Replaces a file's content and patches its manifest digest so only the
/// parser can complain.
fn tamper(manifest_path: &Path, file: &str, edit: impl Fn(String) -> String) {
    let dir = manifest_path.parent().unwrap();
    let path = dir.join(file);
    let text = std::fs::read_to_string(&path).unwrap();
    let text = edit(text);
    std::fs::write(&path, &text).unwrap();
    let digest = format!("{:x}", Sha256::digest(text.as_bytes()));

    let manifest_text = std::fs::read_to_string(manifest_path).unwrap();
    let mut manifest: serde_json::Value = serde_json::from_str(&manifest_text).unwrap();
    let files = manifest["files"].as_object_mut().unwrap();
    let mut patched = false;
    for (_, value) in files.iter_mut() {
        if value.get("path").and_then(|p| p.as_str()) == Some(file) {
            value["sha256"] = serde_json::Value::String(digest.clone());
            patched = true;
        } else if let Some(map) = value.as_object_mut() {
            for (_, inner) in map.iter_mut() {
                if inner.get("path").and_then(|p| p.as_str()) == Some(file) {
                    inner["sha256"] = serde_json::Value::String(digest.clone());
                    patched = true;
                }
            }
        }
    }
    assert!(patched, "no manifest entry for {file}");
    std::fs::write(manifest_path, serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
}

/// A mangled row label is reported as a parse error naming the file.
#[test]
fn bad_row_label_is_reported_with_file_context() {
    let dataset = generate_fixture(&sample_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();

    tamper(&manifest_path, "x.csv", |text| text.replace("R01,S01", "R01,S99"));
    let err = load_dataset(&manifest_path).unwrap_err();
    let msg = err.to_string();
    assert!(
        matches!(err, pb_core::Error::Parse { ref file, .. } if file == "x.csv"),
        "expected parse error for x.csv, got: {msg}"
    );
    assert!(msg.contains("S99"), "message should name the offending label: {msg}");
}

/// A stored ecoregion status that contradicts its fractions is a warning,
/// not an error.
#[test]
fn contradictory_ecoregion_status_warns() {
    let dataset = generate_fixture(&sample_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();

    // Rewrite every stored status to a classification that cannot match
    // every unit (fractions in the generator never imply all four codes at
    // once); at least one unit must then disagree.
    tamper(&manifest_path, "ecoregions.csv", |text| {
        text.lines()
            .map(|line| {
                if let Some((prefix, _)) = line.split_once(",status,") {
                    format!("{prefix},status,imperilled")
                } else {
                    line.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    });
    let loaded = load_dataset(&manifest_path).unwrap();
    let mismatched: Vec<_> = loaded
        .dataset
        .ecoregions
        .iter()
        .filter(|e| e.derived_status().unwrap() != EcoregionStatus::Imperilled)
        .collect();
    assert!(!mismatched.is_empty(), "fixture should have a non-imperilled unit");
    assert_eq!(loaded.warnings.len(), mismatched.len());
    assert!(loaded.warnings[0].contains("fractions imply"));
}

/// Optional sections that are absent from the manifest load as empty.
#[test]
fn optional_sections_default_to_empty() {
    let mut spec = sample_spec();
    spec.watersheds = 0;
    spec.ecoregions = 0;
    spec.cities = 0;
    let dataset = generate_fixture(&spec).unwrap();
    assert!(dataset.households.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
    let manifest_text = std::fs::read_to_string(&manifest_path).unwrap();
    assert!(!manifest_text.contains("watersheds"));
    assert!(!manifest_text.contains("households"));

    let loaded = load_dataset(&manifest_path).unwrap();
    assert!(loaded.dataset.watersheds.is_empty());
    assert!(loaded.dataset.ecoregions.is_empty());
    assert!(loaded.dataset.households.is_empty());
    assert_eq!(loaded.dataset, dataset);
}

/// A sector-group map survives the round trip, and the loader rejects maps
/// that miss a sector or name an unknown one.
#[test]
fn sector_groups_round_trip_and_validate() {
    let mut spec = sample_spec();
    spec.sector_groups = 2;
    let dataset = generate_fixture(&spec).unwrap();
    let groups = dataset.sector_groups.as_ref().unwrap();
    assert_eq!(groups.len(), 2);
    assert_eq!(groups["S01"], "G01");
    assert_eq!(groups["S02"], "G02");

    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
    assert!(dir.path().join("sector_groups.csv").exists());
    let loaded = load_dataset(&manifest_path).unwrap();
    assert!(loaded.warnings.is_empty());
    assert_eq!(loaded.dataset, dataset);

    // A sector mapped to no group is rejected with the file named.
    tamper(&manifest_path, "sector_groups.csv", |text| text.replace("S02,G02\n", ""));
    let err = load_dataset(&manifest_path).unwrap_err();
    assert!(
        matches!(err, pb_core::Error::LabelMismatch(ref msg) if msg.contains("S02")),
        "expected a label mismatch naming S02, got: {err}"
    );

    // As is a group row for a sector the table does not have.
    tamper(&manifest_path, "sector_groups.csv", |text| {
        text + "S02,G02\nS99,G01\n"
    });
    let err = load_dataset(&manifest_path).unwrap_err();
    assert!(
        matches!(err, pb_core::Error::LabelMismatch(ref msg) if msg.contains("S99")),
        "expected a label mismatch naming S99, got: {err}"
    );
}

/// The two pressure extensions of the sample fixture round-trip with their
/// units, and household rows survive.
#[test]
fn extensions_round_trip_with_units() {
    let dataset = generate_fixture(&sample_spec()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = save_dataset(&dataset, dir.path()).unwrap();
    let loaded = load_dataset(&manifest_path).unwrap().dataset;

    let co2 = loaded.extension("co2").unwrap();
    assert_eq!(co2.unit, "Mt CO2");
    assert_eq!(co2.industry, dataset.extension("co2").unwrap().industry);
    assert_eq!(co2.household, dataset.extension("co2").unwrap().household);
    let water = loaded.extension("water").unwrap();
    assert_eq!(water.unit, "Mm3");
}
