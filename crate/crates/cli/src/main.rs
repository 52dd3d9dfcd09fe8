//! `pb-alloc`: batch front-end for the planetary-boundary allocation library.
//!
//! Three subcommands cover the whole workflow:
//!
//! * `fixture`  — generate a synthetic, internally consistent dataset from a
//!   small JSON specification (useful for demos and tests);
//! * `validate` — verify a dataset on disk (checksums, file formats, table
//!   balance) and print what it contains;
//! * `run`      — execute a scenario against a dataset and write the report
//!   files.
//!
//! Exit codes: 0 on success, 2 for configuration and data errors (bad files,
//! failed checksums, invalid scenario), 3 for computation errors (non-
//! productive tables, degenerate inputs).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pb_core::allocation::Approach;
use pb_core::error::Error;
use pb_core::io::{generate_fixture, load_dataset, save_dataset, FixtureSpec};
use pb_core::scenario::{
    load_scenario, resolve_manifest, run_scenario, Perspective, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "pb-alloc",
    version,
    about = "Allocate planetary-boundary budgets to countries, sectors and cities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report files.
    Run {
        /// Scenario configuration (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Dataset manifest; overrides the scenario's `manifest` entry and
        /// the `PB_DATA_DIR` environment variable.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output directory, created if missing.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Accounting perspective, overriding the scenario.
        #[arg(long)]
        perspective: Option<PerspectiveArg>,
        /// Approaches to run (comma-separated codes: epc,gf,ap,va,ba),
        /// overriding the scenario.
        #[arg(long, value_delimiter = ',')]
        approach: Option<Vec<String>>,
        /// Boundaries to keep (comma-separated: climate, water,
        /// biodiversity); the rest of the scenario's boundaries are skipped.
        #[arg(long, value_delimiter = ',')]
        boundary: Option<Vec<String>>,
    },
    /// Verify a dataset on disk and print what it contains.
    Validate {
        /// Dataset manifest (JSON).
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Generate a synthetic dataset from a fixture specification.
    Fixture {
        /// Fixture specification (JSON).
        #[arg(long)]
        spec: PathBuf,
        /// Directory to write the dataset into, created if missing.
        #[arg(long, default_value = "dataset")]
        out: PathBuf,
    },
}

/// `--perspective` values; `both` runs production- and consumption-based
/// accounts.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum PerspectiveArg {
    Pba,
    Cba,
    Both,
}

impl From<PerspectiveArg> for Perspective {
    fn from(arg: PerspectiveArg) -> Self {
        match arg {
            PerspectiveArg::Pba => Perspective::Pba,
            PerspectiveArg::Cba => Perspective::Cba,
            PerspectiveArg::Both => Perspective::Both,
        }
    }
}

/// Applies `--perspective`, `--approach` and `--boundary` on top of the
/// scenario file. Requesting a boundary the scenario does not configure is
/// an error; the flags narrow a run, they cannot invent one.
fn apply_overrides(
    config: &mut ScenarioConfig,
    perspective: Option<PerspectiveArg>,
    approach: Option<Vec<String>>,
    boundary: Option<Vec<String>>,
) -> Result<(), Error> {
    if let Some(p) = perspective {
        config.allocation.perspective = p.into();
    }
    if let Some(codes) = approach {
        let mut approaches = Vec::new();
        for code in &codes {
            approaches.push(Approach::from_code(code.trim())?);
        }
        config.allocation.approaches = approaches;
    }
    if let Some(kinds) = boundary {
        let (mut climate, mut water, mut biodiversity) = (false, false, false);
        for kind in &kinds {
            match kind.trim() {
                "climate" => climate = true,
                "water" | "freshwater" => water = true,
                "biodiversity" => biodiversity = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown boundary '{other}' (expected climate, water or biodiversity)"
                    )))
                }
            }
        }
        for (requested, configured, name) in [
            (climate, config.boundaries.climate.is_some(), "climate"),
            (water, config.boundaries.freshwater.is_some(), "water"),
            (biodiversity, config.boundaries.biodiversity.is_some(), "biodiversity"),
        ] {
            if requested && !configured {
                return Err(Error::Config(format!(
                    "boundary '{name}' requested on the command line but not configured \
                     in the scenario"
                )));
            }
        }
        if !climate {
            config.boundaries.climate = None;
        }
        if !water {
            config.boundaries.freshwater = None;
        }
        if !biodiversity {
            config.boundaries.biodiversity = None;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for anything the user can fix in their files or flags, 3 for genuine
/// computation failures.
fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Dimension(_)
        | Error::Balance(_)
        | Error::LabelMismatch(_)
        | Error::Config(_)
        | Error::IncompleteUnit { .. }
        | Error::Parse { .. }
        | Error::Checksum { .. }
        | Error::Io { .. }
        | Error::Json { .. } => 2,
        Error::NonProductive(_)
        | Error::DegenerateEntity { .. }
        | Error::DegenerateInput(_)
        | Error::InvalidPressure { .. }
        | Error::InvalidInput(_) => 3,
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { scenario, manifest, out, perspective, approach, boundary } => {
            let mut config = load_scenario(&scenario)?;
            apply_overrides(&mut config, perspective, approach, boundary)?;
            let manifest_path = resolve_manifest(&scenario, &config, manifest.as_deref())?;
            let outcome = run_scenario(&config, &manifest_path, &out)?;
            for warning in &outcome.report.warnings {
                eprintln!("warning: {warning}");
            }
            for br in &outcome.report.boundaries {
                println!(
                    "{} ({}): global budget {} {}",
                    br.boundary,
                    br.perspective,
                    br.global_budget.global_annual,
                    br.global_budget.unit
                );
            }
            let report = &outcome.report;
            println!(
                "evaluated {} watershed(s), {} ecoregion(s), {} city inequality row(s)",
                report.watersheds.len(),
                report.ecoregions.len(),
                report.inequality.len()
            );
            println!("wrote {} file(s) to {}", outcome.files.len(), outcome.out_dir.display());
            Ok(())
        }
        Command::Validate { manifest } => {
            let loaded = load_dataset(&manifest)?;
            for warning in &loaded.warnings {
                eprintln!("warning: {warning}");
            }
            let d = &loaded.dataset;
            println!("dataset '{}' (base year {}) is valid", d.name, d.base_year);
            println!(
                "  {} regions x {} sectors",
                d.table.n_regions(),
                d.table.n_sectors()
            );
            let extensions: Vec<String> =
                d.extensions.iter().map(|e| format!("{} [{}]", e.name, e.unit)).collect();
            println!("  extensions: {}", extensions.join(", "));
            println!(
                "  entity stats: {}, watersheds: {}, ecoregions: {}, households: {}",
                d.entity_stats.len(),
                d.watersheds.len(),
                d.ecoregions.len(),
                d.households.len()
            );
            if let Some(groups) = &d.sector_groups {
                let distinct: std::collections::BTreeSet<&String> = groups.values().collect();
                println!("  sector groups: {}", distinct.len());
            }
            Ok(())
        }
        Command::Fixture { spec, out } => {
            let display = spec.display().to_string();
            let text = std::fs::read_to_string(&spec).map_err(|e| Error::io(&display, e))?;
            let spec: FixtureSpec =
                serde_json::from_str(&text).map_err(|e| Error::Json { file: display, source: e })?;
            let dataset = generate_fixture(&spec)?;
            let manifest = save_dataset(&dataset, &out)?;
            println!("wrote dataset '{}' to {}", dataset.name, manifest.display());
            Ok(())
        }
    }
}
