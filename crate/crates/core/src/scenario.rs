//! Scenario orchestration: one JSON configuration in, one directory of
//! deterministic report files out.
//!
//! A scenario names a dataset, selects which boundaries to evaluate (each
//! bound to one extension of the dataset), which effort-sharing approaches
//! and accounting perspectives to run, and whether to break country budgets
//! further down to sectors and cities. Running it:
//!
//! 1. loads and verifies the dataset;
//! 2. computes footprint accounts for every extension;
//! 3. derives the global budget of each configured boundary and converts it
//!    into the bound extension's unit;
//! 4. allocates budgets to countries (and optionally sectors and cities)
//!    under every requested approach and perspective;
//! 5. evaluates watershed and ecoregion safe operating spaces;
//! 6. computes per-capita comparisons and within-city inequality statistics;
//! 7. writes CSV report tables plus a full-precision `run.json`.
//!
//! Output is deterministic: the same configuration and dataset produce
//! byte-identical files on every run.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::allocation::{
    allocate_budget, ap_shares, ap_weight, blended_shares, epc_shares, gf_shares,
    two_stage_allocate, va_shares, AllocationShares, Approach, EntityStats, MissingData,
    DEFAULT_AP_ALPHA,
};
use crate::budgets::{
    biodiversity_budget, climate_yearly_budget, freshwater_budget_km3, ghg_from_co2, BudgetSpec,
    ClimateBudgetSpec, ClimateTarget, Probability, DEFAULT_BIODIVERSITY_PICO_PDF_YR,
    DEFAULT_FRESHWATER_KM3, DEFAULT_GHG_FACTOR, DEFAULT_HORIZON_END,
};
use crate::error::{Error, Result};
use crate::io::{load_dataset, Dataset};
use crate::local::{
    consumption_gf_shares, ecoregion_gf_shares, ecoregion_reduction_target, ecoregion_unit_sos,
    evaluate_local_unit, watershed_gf_shares, watershed_lb, watershed_usable_water, LocalSosResult,
};
use crate::mrio::{
    compute_accounts, normalized_comparison, per_capita, ComparisonMode, FootprintAccounts,
};
use crate::numeric::{compensated_sum, round_half_even};
use crate::report::{change_pct, lorenz_gini, over_under, reduction_rate};
use crate::units::{convert, per_capita_unit, unit_info, Dimension};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Climate boundary section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClimateConfig {
    /// Extension carrying the emission accounts. Its unit decides whether
    /// the CO2 budget is used directly (a `CO2` unit) or scaled into a
    /// greenhouse-gas budget first (a `CO2eq` unit).
    pub extension: String,
    #[serde(default = "default_climate_target")]
    pub target: ClimateTarget,
    #[serde(default = "default_climate_probability")]
    pub probability: Probability,
    /// Emissions between the dataset's base year and 2020, Gt CO2. Defaults
    /// to the built-in value for a 2016 base year.
    #[serde(default)]
    pub backcast_gt: Option<f64>,
    /// CO2 -> CO2eq multiplier, applied only for a CO2eq extension.
    #[serde(default = "default_ghg_factor")]
    pub ghg_factor: f64,
    #[serde(default = "default_horizon_end")]
    pub horizon_end: i32,
}

fn default_climate_target() -> ClimateTarget {
    ClimateTarget::C15
}

fn default_climate_probability() -> Probability {
    Probability::P50
}

fn default_ghg_factor() -> f64 {
    DEFAULT_GHG_FACTOR
}

fn default_horizon_end() -> i32 {
    DEFAULT_HORIZON_END
}

/// Freshwater boundary section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreshwaterConfig {
    pub extension: String,
    /// Global yearly consumption limit, km3.
    #[serde(default = "default_freshwater_km3")]
    pub global_km3: f64,
}

fn default_freshwater_km3() -> f64 {
    DEFAULT_FRESHWATER_KM3
}

/// Biodiversity boundary section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiodiversityConfig {
    pub extension: String,
    /// Per-person yearly loss allowance, pico PDF.yr. The global budget is
    /// this allowance times the summed population of all countries.
    #[serde(default = "default_biodiversity_pico")]
    pub epc_pico_pdf_yr: f64,
    /// When false, country/sector/city rows carry budgets only — no actual
    /// footprints and none of the columns derived from them — for datasets
    /// whose loss extension is too uncertain to report against. Shares (and
    /// so the budgets themselves) are still computed from the full data.
    #[serde(default = "default_true")]
    pub report_actuals: bool,
}

fn default_biodiversity_pico() -> f64 {
    DEFAULT_BIODIVERSITY_PICO_PDF_YR
}

fn default_true() -> bool {
    true
}

/// Which boundaries a scenario evaluates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundariesConfig {
    pub climate: Option<ClimateConfig>,
    pub freshwater: Option<FreshwaterConfig>,
    pub biodiversity: Option<BiodiversityConfig>,
}

/// Accounting perspective(s) to allocate under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    Pba,
    Cba,
    Both,
}

impl Perspective {
    /// The perspective codes this setting expands to.
    pub fn sides(self) -> &'static [&'static str] {
        match self {
            Perspective::Pba => &["pba"],
            Perspective::Cba => &["cba"],
            Perspective::Both => &["pba", "cba"],
        }
    }
}

/// Allocation section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationConfig {
    /// Approaches to run, in output order.
    pub approaches: Vec<Approach>,
    pub perspective: Perspective,
    /// Ability-to-pay exponent.
    pub alpha: f64,
    /// How ability-to-pay treats entities with unknown value added or
    /// employment.
    pub ap_missing: MissingData,
    /// Component weights of the blended approach, keyed by approach code.
    /// Must sum to one. `null` blends all requested pure approaches with
    /// equal weights.
    pub ba_weights: Option<BTreeMap<String, f64>>,
    /// Break country budgets down to sectors (two-stage allocation).
    pub include_sectors: bool,
    /// Scale country budgets down to cities.
    pub include_cities: bool,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        AllocationConfig {
            approaches: vec![Approach::Epc, Approach::Gf, Approach::Ap, Approach::Va, Approach::Ba],
            perspective: Perspective::Both,
            alpha: DEFAULT_AP_ALPHA,
            ap_missing: MissingData::Error,
            ba_weights: None,
            include_sectors: false,
            include_cities: false,
        }
    }
}

/// Report section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// Year by which the budget should be reached; used for the implied
    /// yearly reduction rate.
    pub target_year: i32,
    /// Region labels whose unweighted mean serves as an extra comparison
    /// reference in the normalised tables.
    pub comparison_subset: Option<Vec<String>>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { target_year: 2050, comparison_subset: None }
    }
}

/// Scope of the grandfathering shares used for watershed safe operating
/// spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GfScope {
    /// Each watershed is divided by the consumption drawn from that
    /// watershed alone (the default).
    WithinUnit,
    /// Every watershed is divided by one share vector: each country's
    /// consumption summed across all watersheds.
    Global,
}

/// Local-boundary section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalConfig {
    pub watersheds: bool,
    pub ecoregions: bool,
    pub watershed_gf: GfScope,
}

impl Default for LocalConfig {
    fn default() -> Self {
        LocalConfig { watersheds: true, ecoregions: true, watershed_gf: GfScope::WithinUnit }
    }
}

/// A complete scenario configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    /// Dataset manifest path, relative to the scenario file. May instead be
    /// supplied on the command line or through `PB_DATA_DIR`.
    pub manifest: Option<String>,
    pub boundaries: BoundariesConfig,
    pub allocation: AllocationConfig,
    pub report: ReportConfig,
    pub local: LocalConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".to_string(),
            manifest: None,
            boundaries: BoundariesConfig::default(),
            allocation: AllocationConfig::default(),
            report: ReportConfig::default(),
            local: LocalConfig::default(),
        }
    }
}

impl ScenarioConfig {
    /// Checks everything that can be checked without the dataset.
    pub fn validate(&self) -> Result<()> {
        let alloc = &self.allocation;
        if alloc.approaches.is_empty() {
            return Err(Error::Config("scenario requests no allocation approaches".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &alloc.approaches {
            if !seen.insert(*a) {
                return Err(Error::Config(format!("approach '{}' listed twice", a.code())));
            }
        }
        if !(0.0..=1.0).contains(&alloc.alpha) || !alloc.alpha.is_finite() {
            return Err(Error::Config(format!(
                "ability-to-pay alpha must lie in [0, 1], got {}",
                alloc.alpha
            )));
        }
        if alloc.approaches.contains(&Approach::Ba) {
            ba_component_weights(alloc)?;
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let config: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| Error::Json { file: display, source: e })?;
    config.validate()?;
    Ok(config)
}

/// Environment variable naming a directory that contains `manifest.json`.
pub const DATA_DIR_ENV: &str = "PB_DATA_DIR";

/// Decides which dataset manifest a run should use: an explicit override
/// wins, then the scenario's own `manifest` entry (relative to the scenario
/// file), then `$PB_DATA_DIR/manifest.json`.
pub fn resolve_manifest(
    scenario_path: &Path,
    config: &ScenarioConfig,
    override_path: Option<&Path>,
) -> Result<PathBuf> {
    if let Some(path) = override_path {
        return Ok(path.to_path_buf());
    }
    if let Some(rel) = &config.manifest {
        let base = scenario_path.parent().unwrap_or_else(|| Path::new("."));
        return Ok(base.join(rel));
    }
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        return Ok(PathBuf::from(dir).join("manifest.json"));
    }
    Err(Error::Config(format!(
        "no dataset manifest: set 'manifest' in the scenario, pass one on the command line, \
         or set {DATA_DIR_ENV}"
    )))
}

// ---------------------------------------------------------------------------
// Run report (the machine-readable result)
// ---------------------------------------------------------------------------

/// Where the run's data came from.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub name: String,
    pub base_year: i32,
    /// SHA-256 of the manifest file, tying the run to exact inputs.
    pub manifest_sha256: String,
}

/// One country's allocation under one approach.
#[derive(Debug, Clone, Serialize)]
pub struct CountryResult {
    pub entity: String,
    pub approach: Approach,
    pub share: f64,
    /// The country's footprint; absent on budget-only rows (a boundary run
    /// whose actuals are not reported).
    pub actual: Option<f64>,
    pub budget: f64,
    pub unit: String,
    /// `actual / budget`; absent when the budget is not positive.
    pub over_under: Option<f64>,
    /// Percent change from actual to budget; absent when actual is zero.
    pub change_pct: Option<f64>,
    /// Yearly reduction rate (percent) that reaches the budget by the
    /// target year; absent when actual or budget is not positive.
    pub reduction_rate_pct_yr: Option<f64>,
}

/// A sector's or city's slice of its country's budget.
#[derive(Debug, Clone, Serialize)]
pub struct SubEntityResult {
    pub entity: String,
    pub parent: String,
    pub approach: Approach,
    /// The entity's own pressure, when known.
    pub actual: Option<f64>,
    pub budget: f64,
    pub unit: String,
}

/// Per-capita comparison of one country.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizedResult {
    pub entity: String,
    pub per_capita: f64,
    pub unit: String,
    /// Ratio to the population-weighted global average.
    pub vs_population_weighted: f64,
    /// Ratio to the unweighted mean over countries.
    pub vs_country_mean: f64,
    /// Ratio to the unweighted mean over the configured subset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vs_subset_mean: Option<f64>,
}

/// Everything computed for one boundary under one perspective.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRun {
    /// Boundary code (`climate_co2`, `climate_ghg`, `freshwater`,
    /// `biodiversity`).
    pub boundary: String,
    pub extension: String,
    pub perspective: String,
    /// Global budget in the extension's unit, as allocated.
    pub global_budget: BudgetSpec,
    /// The same budget in its native derivation unit.
    pub global_budget_native: BudgetSpec,
    pub countries: Vec<CountryResult>,
    pub sectors: Vec<SubEntityResult>,
    /// Sector rows summed into the dataset's sector groups, when the dataset
    /// carries a grouping map.
    pub sector_groups: Vec<SubEntityResult>,
    pub cities: Vec<SubEntityResult>,
    pub normalized: Vec<NormalizedResult>,
}

/// Watershed evaluation: the unit's hydrology plus one result per country.
#[derive(Debug, Clone, Serialize)]
pub struct WatershedReport {
    pub unit_id: String,
    pub maf: f64,
    pub hwc: f64,
    pub ewr: f64,
    pub lb: f64,
    pub usable_water: f64,
    pub results: Vec<LocalSosResult>,
}

/// Ecoregion evaluation: classification plus one result per country.
#[derive(Debug, Clone, Serialize)]
pub struct EcoregionReport {
    pub unit_id: String,
    pub status: String,
    pub reduction_target: f64,
    pub unit_sos: f64,
    pub total_loss: f64,
    pub results: Vec<LocalSosResult>,
}

/// Within-city household inequality statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CityInequality {
    pub city: String,
    pub households: usize,
    pub gini: f64,
    /// Smallest population fraction of households that holds at least half
    /// of the total footprint.
    pub top_holders_for_half: f64,
}

/// The complete machine-readable result of a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub dataset: DatasetInfo,
    pub target_year: i32,
    pub boundaries: Vec<BoundaryRun>,
    pub watersheds: Vec<WatershedReport>,
    pub ecoregions: Vec<EcoregionReport>,
    pub inequality: Vec<CityInequality>,
    pub warnings: Vec<String>,
}

/// What `run_scenario` hands back: the report plus where it was written.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    /// File names written into `out_dir`, sorted.
    pub files: Vec<String>,
    pub report: RunReport,
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

/// A boundary ready for allocation: which extension it reads and its global
/// budget in that extension's unit.
struct ActiveBoundary {
    extension: String,
    budget: BudgetSpec,
    native: BudgetSpec,
    /// When false the run emits budget-only rows: footprints still drive the
    /// grandfathering shares, but no actuals or derived columns are reported.
    report_actuals: bool,
}

/// Runs a scenario against a dataset and writes all outputs into `out_dir`
/// (created if missing).
pub fn run_scenario(
    config: &ScenarioConfig,
    manifest_path: &Path,
    out_dir: &Path,
) -> Result<RunOutcome> {
    config.validate()?;
    let loaded = load_dataset(manifest_path)?;
    let mut warnings = loaded.warnings.clone();
    let dataset = &loaded.dataset;
    let manifest_bytes = std::fs::read(manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;

    if config.report.target_year <= dataset.base_year {
        return Err(Error::Config(format!(
            "target year {} must lie after the dataset's base year {}",
            config.report.target_year, dataset.base_year
        )));
    }

    let boundaries_requested = config.boundaries.climate.is_some()
        || config.boundaries.freshwater.is_some()
        || config.boundaries.biodiversity.is_some();

    let countries = if boundaries_requested { country_stats_for(dataset)? } else { Vec::new() };
    let sector_stats = if boundaries_requested && config.allocation.include_sectors {
        Some(sector_stats_for(dataset)?)
    } else {
        None
    };
    let city_stats = if boundaries_requested && config.allocation.include_cities {
        Some(city_stats_for(dataset))
    } else {
        None
    };

    let active = resolve_boundaries(config, dataset, &countries)?;
    let accounts = compute_accounts(&dataset.table, &dataset.extensions)?;
    let accounts_by_name: BTreeMap<&str, &FootprintAccounts> =
        accounts.iter().map(|a| (a.extension.as_str(), a)).collect();

    let ba_components = if config.allocation.approaches.contains(&Approach::Ba) {
        Some(ba_component_weights(&config.allocation)?)
    } else {
        None
    };

    let mut boundary_runs = Vec::new();
    for ab in &active {
        let acct = accounts_by_name[ab.extension.as_str()];
        for &side in config.allocation.perspective.sides() {
            boundary_runs.push(run_boundary_side(
                config,
                dataset,
                ab,
                acct,
                side,
                &countries,
                sector_stats.as_deref(),
                city_stats.as_deref(),
                ba_components.as_deref(),
                &mut warnings,
            )?);
        }
    }

    let watersheds = if config.local.watersheds {
        eval_watersheds(dataset, config.local.watershed_gf, &mut warnings)?
    } else {
        Vec::new()
    };
    let ecoregions = if config.local.ecoregions {
        eval_ecoregions(dataset, &mut warnings)?
    } else {
        Vec::new()
    };
    let inequality = eval_inequality(dataset, &mut warnings)?;

    let report = RunReport {
        name: config.name.clone(),
        dataset: DatasetInfo {
            name: dataset.name.clone(),
            base_year: dataset.base_year,
            manifest_sha256: crate::io::sha256_hex(&manifest_bytes),
        },
        target_year: config.report.target_year,
        boundaries: boundary_runs,
        watersheds,
        ecoregions,
        inequality,
        warnings,
    };
    let files = write_outputs(&report, out_dir)?;
    Ok(RunOutcome { out_dir: out_dir.to_path_buf(), files, report })
}

/// Component weights of the blended approach: the configured map, or equal
/// weights over the requested pure approaches.
fn ba_component_weights(alloc: &AllocationConfig) -> Result<Vec<(Approach, f64)>> {
    match &alloc.ba_weights {
        Some(map) => {
            let mut components = Vec::new();
            let mut sum = 0.0;
            for (code, &weight) in map {
                let approach = Approach::from_code(code)?;
                if approach == Approach::Ba {
                    return Err(Error::Config("the blend cannot include itself".into()));
                }
                if !(weight > 0.0) || !weight.is_finite() {
                    return Err(Error::Config(format!(
                        "blend weight for '{code}' must be positive and finite, got {weight}"
                    )));
                }
                components.push((approach, weight));
                sum += weight;
            }
            if components.is_empty() {
                return Err(Error::Config("ba_weights is empty".into()));
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("blend weights must sum to 1, got {sum}")));
            }
            Ok(components)
        }
        None => {
            let pure: Vec<Approach> = alloc
                .approaches
                .iter()
                .copied()
                .filter(|a| *a != Approach::Ba)
                .collect();
            if pure.is_empty() {
                return Err(Error::Config(
                    "the blended approach needs ba_weights or at least one pure approach".into(),
                ));
            }
            let weight = 1.0 / pure.len() as f64;
            Ok(pure.into_iter().map(|a| (a, weight)).collect())
        }
    }
}

/// Stats row of every region, in region order.
fn country_stats_for(dataset: &Dataset) -> Result<Vec<EntityStats>> {
    if dataset.entity_stats.is_empty() {
        return Err(Error::Config(
            "dataset has no entity statistics; allocation needs population, value added \
             and employment per country"
                .into(),
        ));
    }
    dataset
        .table
        .regions()
        .iter()
        .map(|region| {
            dataset
                .entity_stats
                .iter()
                .find(|s| &s.entity_id == region)
                .cloned()
                .ok_or_else(|| Error::Config(format!("no entity statistics for region '{region}'")))
        })
        .collect()
}

/// Stats rows of every `region:sector` entity, grouped by region.
fn sector_stats_for(dataset: &Dataset) -> Result<Vec<Vec<EntityStats>>> {
    dataset
        .table
        .regions()
        .iter()
        .map(|region| {
            dataset
                .table
                .sectors()
                .iter()
                .map(|sector| {
                    let id = format!("{region}:{sector}");
                    dataset
                        .entity_stats
                        .iter()
                        .find(|s| s.entity_id == id)
                        .cloned()
                        .ok_or_else(|| {
                            Error::Config(format!("no entity statistics for sector '{id}'"))
                        })
                })
                .collect()
        })
        .collect()
}

/// City stats (entities whose parent is a region and that are not sectors),
/// grouped by region, in dataset order.
fn city_stats_for(dataset: &Dataset) -> Vec<Vec<EntityStats>> {
    let sector_ids: BTreeSet<String> = dataset
        .table
        .regions()
        .iter()
        .flat_map(|r| dataset.table.sectors().iter().map(move |s| format!("{r}:{s}")))
        .collect();
    dataset
        .table
        .regions()
        .iter()
        .map(|region| {
            dataset
                .entity_stats
                .iter()
                .filter(|s| {
                    s.parent.as_deref() == Some(region.as_str())
                        && !sector_ids.contains(&s.entity_id)
                })
                .cloned()
                .collect()
        })
        .collect()
}

/// Derives the global budget of every configured boundary and converts it
/// into the bound extension's unit.
fn resolve_boundaries(
    config: &ScenarioConfig,
    dataset: &Dataset,
    countries: &[EntityStats],
) -> Result<Vec<ActiveBoundary>> {
    let mut active = Vec::new();

    if let Some(c) = &config.boundaries.climate {
        let ext = dataset.extension(&c.extension).ok_or_else(|| {
            Error::Config(format!("climate boundary bound to unknown extension '{}'", c.extension))
        })?;
        let (dim, _) = unit_info(&ext.unit)
            .ok_or_else(|| Error::Config(format!("unknown unit '{}'", ext.unit)))?;
        let mut spec = ClimateBudgetSpec::new(c.target, c.probability)
            .with_analysis_year(dataset.base_year)
            .with_horizon_end(c.horizon_end);
        if let Some(backcast) = c.backcast_gt {
            spec = spec.with_backcast_gt(backcast);
        }
        let co2 = climate_yearly_budget(&spec)?;
        let native = match dim {
            Dimension::MassCo2 => co2,
            Dimension::MassCo2Eq => ghg_from_co2(&co2, c.ghg_factor)?,
            _ => {
                return Err(Error::Config(format!(
                    "climate extension '{}' must carry a CO2 or CO2eq unit, has '{}'",
                    c.extension, ext.unit
                )))
            }
        };
        active.push(converted_boundary(&c.extension, native, &ext.unit)?);
    }

    if let Some(f) = &config.boundaries.freshwater {
        let ext = dataset.extension(&f.extension).ok_or_else(|| {
            Error::Config(format!(
                "freshwater boundary bound to unknown extension '{}'",
                f.extension
            ))
        })?;
        let native = freshwater_budget_km3(f.global_km3)?;
        active.push(converted_boundary(&f.extension, native, &ext.unit)?);
    }

    if let Some(b) = &config.boundaries.biodiversity {
        let ext = dataset.extension(&b.extension).ok_or_else(|| {
            Error::Config(format!(
                "biodiversity boundary bound to unknown extension '{}'",
                b.extension
            ))
        })?;
        let mut pops = Vec::with_capacity(countries.len());
        for stat in countries {
            pops.push(stat.population.ok_or_else(|| {
                Error::Config(format!(
                    "biodiversity budget needs the population of every country; \
                     '{}' has none",
                    stat.entity_id
                ))
            })?);
        }
        let global_population = compensated_sum(pops.iter().copied());
        let native = biodiversity_budget(b.epc_pico_pdf_yr, global_population)?;
        let mut boundary = converted_boundary(&b.extension, native, &ext.unit)?;
        boundary.report_actuals = b.report_actuals;
        active.push(boundary);
    }

    Ok(active)
}

/// Converts a native budget into the extension's unit.
fn converted_boundary(extension: &str, native: BudgetSpec, ext_unit: &str) -> Result<ActiveBoundary> {
    let budget = BudgetSpec {
        boundary: native.boundary,
        global_annual: convert(native.global_annual, &native.unit, ext_unit)?,
        unit: ext_unit.to_string(),
        basis: native.basis,
    };
    Ok(ActiveBoundary { extension: extension.to_string(), budget, native, report_actuals: true })
}

/// Country shares under one pure approach.
fn build_pure_shares(
    approach: Approach,
    stats: &[EntityStats],
    pressure_key: &str,
    alloc: &AllocationConfig,
) -> Result<AllocationShares> {
    match approach {
        Approach::Epc => epc_shares(stats),
        Approach::Gf => gf_shares(stats, pressure_key),
        Approach::Ap => ap_shares(stats, alloc.alpha, alloc.ap_missing),
        Approach::Va => va_shares(stats),
        Approach::Ba => Err(Error::Config("the blend is not a pure approach".into())),
    }
}

/// Everything for one boundary under one perspective.
#[allow(clippy::too_many_arguments)]
fn run_boundary_side(
    config: &ScenarioConfig,
    dataset: &Dataset,
    ab: &ActiveBoundary,
    acct: &FootprintAccounts,
    side: &'static str,
    countries: &[EntityStats],
    sector_stats: Option<&[Vec<EntityStats>]>,
    city_stats: Option<&[Vec<EntityStats>]>,
    ba_components: Option<&[(Approach, f64)]>,
    warnings: &mut Vec<String>,
) -> Result<BoundaryRun> {
    let regions = dataset.table.regions();
    let boundary_code = ab.budget.boundary.code();
    let actual: Vec<f64> = match side {
        "pba" => acct.pba.iter().copied().collect(),
        _ => acct.cba.iter().copied().collect(),
    };
    let pressure_key = format!("{}:{}", ab.extension, side);

    // Inject this boundary's footprints as the grandfathering pressure
    // series (and the reference for city scaling).
    let mut stats = countries.to_vec();
    for (stat, &value) in stats.iter_mut().zip(&actual) {
        stat.pressures.insert(pressure_key.clone(), value);
    }

    // Pure share vectors: every requested pure approach plus everything the
    // blend needs.
    let mut needed: BTreeSet<Approach> = config
        .allocation
        .approaches
        .iter()
        .copied()
        .filter(|a| *a != Approach::Ba)
        .collect();
    if let Some(components) = ba_components {
        needed.extend(components.iter().map(|(a, _)| *a));
    }
    let mut pure_shares: BTreeMap<Approach, AllocationShares> = BTreeMap::new();
    for &approach in &needed {
        pure_shares.insert(
            approach,
            build_pure_shares(approach, &stats, &pressure_key, &config.allocation)?,
        );
    }
    let ba_shares = match ba_components {
        Some(components) => {
            let parts: Vec<(&AllocationShares, f64)> =
                components.iter().map(|(a, w)| (&pure_shares[a], *w)).collect();
            Some(blended_shares(&parts)?)
        }
        None => None,
    };
    let shares_for = |approach: Approach| -> &AllocationShares {
        if approach == Approach::Ba {
            ba_shares.as_ref().expect("ba shares exist when ba is requested")
        } else {
            &pure_shares[&approach]
        }
    };

    // Country rows, approach-major.
    let mut country_rows = Vec::new();
    for &approach in &config.allocation.approaches {
        let shares = shares_for(approach);
        for (i, allocated) in allocate_budget(shares, &ab.budget).into_iter().enumerate() {
            let row = if ab.report_actuals {
                CountryResult {
                    entity: allocated.entity_id,
                    approach,
                    share: shares.shares[i],
                    actual: Some(actual[i]),
                    budget: allocated.budget,
                    unit: allocated.unit,
                    over_under: over_under(actual[i], allocated.budget).ok(),
                    change_pct: change_pct(actual[i], allocated.budget),
                    reduction_rate_pct_yr: reduction_rate(
                        actual[i],
                        allocated.budget,
                        dataset.base_year,
                        config.report.target_year,
                    )
                    .ok(),
                }
            } else {
                CountryResult {
                    entity: allocated.entity_id,
                    approach,
                    share: shares.shares[i],
                    actual: None,
                    budget: allocated.budget,
                    unit: allocated.unit,
                    over_under: None,
                    change_pct: None,
                    reduction_rate_pct_yr: None,
                }
            };
            country_rows.push(row);
        }
    }

    // Sector rows: two-stage allocation, per approach, all countries or none.
    let mut sector_rows = Vec::new();
    if let Some(sector_stats) = sector_stats {
        let sectoral_actual = match side {
            "pba" => &acct.sectoral_pba,
            _ => &acct.sectoral_cba,
        };
        for &approach in &config.allocation.approaches {
            let within = build_within_shares(
                approach,
                sector_stats,
                regions,
                dataset.table.n_sectors(),
                &pressure_key,
                sectoral_actual.as_slice(),
                &config.allocation,
                ba_components,
            );
            match within {
                Ok(within) => {
                    let rows = two_stage_allocate(shares_for(approach), &within, &ab.budget)?;
                    for (idx, row) in rows.into_iter().enumerate() {
                        sector_rows.push(SubEntityResult {
                            entity: row.entity_id,
                            parent: row.parent.expect("two-stage rows carry their country"),
                            approach,
                            actual: ab.report_actuals.then(|| sectoral_actual[idx]),
                            budget: row.budget,
                            unit: row.unit,
                        });
                    }
                }
                Err(e) => warnings.push(format!(
                    "{boundary_code}/{side}: sector breakdown skipped for '{}': {e}",
                    approach.code()
                )),
            }
        }
    }

    // City rows: country budget scaled by the city/country ratio of the
    // approach's own yardstick.
    let mut city_rows = Vec::new();
    if let Some(city_stats) = city_stats {
        for (r, region) in regions.iter().enumerate() {
            for city in &city_stats[r] {
                for &approach in &config.allocation.approaches {
                    match city_ratio(
                        approach,
                        city,
                        &stats[r],
                        &pressure_key,
                        &config.allocation,
                        ba_components,
                    ) {
                        Ok(ratio) => {
                            let country_budget =
                                shares_for(approach).shares[r] * ab.budget.global_annual;
                            let city_actual = if ab.report_actuals {
                                city.pressures.get(&pressure_key).copied()
                            } else {
                                None
                            };
                            city_rows.push(SubEntityResult {
                                entity: city.entity_id.clone(),
                                parent: region.clone(),
                                approach,
                                actual: city_actual,
                                budget: ratio * country_budget,
                                unit: ab.budget.unit.clone(),
                            });
                        }
                        Err(e) => warnings.push(format!(
                            "{boundary_code}/{side}: city '{}' skipped for '{}': {e}",
                            city.entity_id,
                            approach.code()
                        )),
                    }
                }
            }
        }
    }

    // Per-capita comparisons normalise the actuals, so a budget-only run
    // has no such table. Otherwise a bad configuration fails the run;
    // missing data only drops the table.
    let normalized = if !ab.report_actuals {
        Vec::new()
    } else {
        match build_normalized(&stats, &actual, config, regions, &ab.budget.unit) {
            Ok(rows) => rows,
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                warnings.push(format!(
                    "{boundary_code}/{side}: per-capita comparison skipped: {e}"
                ));
                Vec::new()
            }
        }
    };

    let sector_group_rows = match &dataset.sector_groups {
        Some(groups) => group_sector_rows(&sector_rows, groups),
        None => Vec::new(),
    };

    Ok(BoundaryRun {
        boundary: boundary_code.to_string(),
        extension: ab.extension.clone(),
        perspective: side.to_string(),
        global_budget: ab.budget.clone(),
        global_budget_native: ab.native.clone(),
        countries: country_rows,
        sectors: sector_rows,
        sector_groups: sector_group_rows,
        cities: city_rows,
        normalized,
    })
}

/// Sums sector rows into their dataset-defined groups, preserving the
/// rows' (approach, country) order and the groups' first appearance within
/// each country. Entity ids keep the `country:label` shape.
fn group_sector_rows(
    sector_rows: &[SubEntityResult],
    groups: &BTreeMap<String, String>,
) -> Vec<SubEntityResult> {
    let mut rows: Vec<SubEntityResult> = Vec::new();
    let mut index: BTreeMap<(Approach, String), usize> = BTreeMap::new();
    for row in sector_rows {
        let sector = row
            .entity
            .strip_prefix(&format!("{}:", row.parent))
            .unwrap_or(&row.entity);
        let group = match groups.get(sector) {
            Some(g) => g,
            None => continue, // loader guarantees coverage; be safe anyway
        };
        let entity = format!("{}:{group}", row.parent);
        match index.get(&(row.approach, entity.clone())) {
            Some(&i) => {
                rows[i].budget += row.budget;
                rows[i].actual = match (rows[i].actual, row.actual) {
                    (Some(a), Some(b)) => Some(a + b),
                    (a, None) => a,
                    (None, b) => b,
                };
            }
            None => {
                index.insert((row.approach, entity.clone()), rows.len());
                rows.push(SubEntityResult {
                    entity,
                    parent: row.parent.clone(),
                    approach: row.approach,
                    actual: row.actual,
                    budget: row.budget,
                    unit: row.unit.clone(),
                });
            }
        }
    }
    rows
}

/// Within-country sector shares for one approach, for every country.
#[allow(clippy::too_many_arguments)]
fn build_within_shares(
    approach: Approach,
    sector_stats: &[Vec<EntityStats>],
    regions: &[String],
    n_sectors: usize,
    pressure_key: &str,
    sectoral_actual: &[f64],
    alloc: &AllocationConfig,
    ba_components: Option<&[(Approach, f64)]>,
) -> Result<BTreeMap<String, AllocationShares>> {
    if approach == Approach::Ba {
        let components = ba_components
            .ok_or_else(|| Error::Config("blend weights missing for sector breakdown".into()))?;
        let mut per_component = Vec::new();
        for (component, weight) in components {
            let within = build_within_shares(
                *component,
                sector_stats,
                regions,
                n_sectors,
                pressure_key,
                sectoral_actual,
                alloc,
                None,
            )?;
            per_component.push((within, *weight));
        }
        let mut blended = BTreeMap::new();
        for region in regions {
            let parts: Vec<(&AllocationShares, f64)> =
                per_component.iter().map(|(m, w)| (&m[region], *w)).collect();
            blended.insert(region.clone(), blended_shares(&parts)?);
        }
        return Ok(blended);
    }

    let mut within = BTreeMap::new();
    for (r, region) in regions.iter().enumerate() {
        let mut stats = sector_stats[r].clone();
        for (s, stat) in stats.iter_mut().enumerate() {
            stat.pressures.insert(pressure_key.to_string(), sectoral_actual[r * n_sectors + s]);
        }
        within.insert(region.clone(), build_pure_shares(approach, &stats, pressure_key, alloc)?);
    }
    Ok(within)
}

/// `city value / country value` under the approach's own yardstick. This is
/// a scaling, not a partition: cities need not cover their country.
fn city_ratio(
    approach: Approach,
    city: &EntityStats,
    country: &EntityStats,
    pressure_key: &str,
    alloc: &AllocationConfig,
    ba_components: Option<&[(Approach, f64)]>,
) -> Result<f64> {
    fn need(entity: &str, what: &str, value: Option<f64>) -> Result<f64> {
        value.ok_or_else(|| Error::DegenerateEntity {
            entity: entity.to_string(),
            detail: format!("{what} unknown"),
        })
    }
    fn ratio_of(entity: &str, numerator: f64, denominator: f64) -> Result<f64> {
        if !(denominator > 0.0) || !denominator.is_finite() {
            return Err(Error::DegenerateEntity {
                entity: entity.to_string(),
                detail: format!("country reference value is {denominator}"),
            });
        }
        if !numerator.is_finite() || numerator < 0.0 {
            return Err(Error::InvalidInput(format!(
                "value of {entity} is {numerator}; must be finite and >= 0"
            )));
        }
        Ok(numerator / denominator)
    }

    let id = city.entity_id.as_str();
    match approach {
        Approach::Epc => ratio_of(
            id,
            need(id, "population", city.population)?,
            need(&country.entity_id, "population", country.population)?,
        ),
        Approach::Gf => {
            let city_pressure = need(id, &format!("pressure '{pressure_key}'"), city.pressures.get(pressure_key).copied())?;
            let country_pressure = country.pressures[pressure_key];
            ratio_of(id, city_pressure, country_pressure)
        }
        Approach::Ap => ratio_of(id, ap_weight(city, alloc.alpha)?, ap_weight(country, alloc.alpha)?),
        Approach::Va => ratio_of(
            id,
            need(id, "value added", city.value_added)?,
            need(&country.entity_id, "value added", country.value_added)?,
        ),
        Approach::Ba => {
            let components = ba_components
                .ok_or_else(|| Error::Config("blend weights missing for city scaling".into()))?;
            let mut total = 0.0;
            for (component, weight) in components {
                total += weight * city_ratio(*component, city, country, pressure_key, alloc, None)?;
            }
            Ok(total)
        }
    }
}

/// Per-capita footprints and their comparison ratios.
fn build_normalized(
    stats: &[EntityStats],
    actual: &[f64],
    config: &ScenarioConfig,
    regions: &[String],
    unit: &str,
) -> Result<Vec<NormalizedResult>> {
    let mut populations = Vec::with_capacity(stats.len());
    for stat in stats {
        populations.push(stat.population.ok_or_else(|| Error::DegenerateEntity {
            entity: stat.entity_id.clone(),
            detail: "population unknown".into(),
        })?);
    }
    let pc = per_capita(actual, &populations)?;
    let weighted =
        normalized_comparison(&pc, &populations, &ComparisonMode::GlobalPopulationWeighted)?;
    let mean = normalized_comparison(&pc, &populations, &ComparisonMode::CountryMean)?;
    let subset = match &config.report.comparison_subset {
        Some(labels) => {
            let mut indices = Vec::with_capacity(labels.len());
            for label in labels {
                let idx = regions.iter().position(|r| r == label).ok_or_else(|| {
                    Error::Config(format!("comparison subset names unknown region '{label}'"))
                })?;
                indices.push(idx);
            }
            Some(normalized_comparison(&pc, &populations, &ComparisonMode::SubsetMean(indices))?)
        }
        None => None,
    };
    Ok(regions
        .iter()
        .enumerate()
        .map(|(i, region)| NormalizedResult {
            entity: region.clone(),
            per_capita: pc[i],
            unit: per_capita_unit(unit),
            vs_population_weighted: weighted[i],
            vs_country_mean: mean[i],
            vs_subset_mean: subset.as_ref().map(|s| s[i]),
        })
        .collect())
}

/// Evaluates every watershed: local boundary, grandfathered slices, and
/// per-country transgression.
fn eval_watersheds(
    dataset: &Dataset,
    scope: GfScope,
    warnings: &mut Vec<String>,
) -> Result<Vec<WatershedReport>> {
    let mut records: Vec<_> = dataset.watersheds.iter().collect();
    records.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));

    // Under the global scope every watershed is split by the same vector:
    // each country's consumption pooled across all watersheds.
    let pooled = match scope {
        GfScope::WithinUnit => None,
        GfScope::Global => {
            let mut totals: BTreeMap<String, f64> = BTreeMap::new();
            for rec in &records {
                for (country, &consumption) in &rec.country_consumption {
                    *totals.entry(country.clone()).or_insert(0.0) += consumption;
                }
            }
            match consumption_gf_shares("pool", &totals) {
                Ok(shares) => Some(shares),
                Err(e) => {
                    warnings.push(format!("watersheds skipped: {e}"));
                    return Ok(Vec::new());
                }
            }
        }
    };

    let mut reports = Vec::new();
    for rec in records {
        let lb = watershed_lb(rec)?;
        let usable = watershed_usable_water(rec)?;
        let within;
        let shares = match &pooled {
            Some(shares) => shares,
            None => match watershed_gf_shares(rec) {
                Ok(shares) => {
                    within = shares;
                    &within
                }
                Err(e) => {
                    warnings.push(format!("watershed '{}' skipped: {e}", rec.unit_id));
                    continue;
                }
            },
        };
        let mut results = Vec::new();
        for country in &shares.entities {
            let consumption = rec.country_consumption.get(country).copied().unwrap_or(0.0);
            results.push(evaluate_local_unit(
                &rec.unit_id,
                country,
                shares,
                lb,
                rec.hwc,
                usable,
                consumption,
            )?);
        }
        reports.push(WatershedReport {
            unit_id: rec.unit_id.clone(),
            maf: rec.maf,
            hwc: rec.hwc,
            ewr: rec.ewr,
            lb,
            usable_water: usable,
            results,
        });
    }
    Ok(reports)
}

/// Evaluates every ecoregion: classification, unit safe operating space,
/// grandfathered slices, and per-country transgression.
fn eval_ecoregions(dataset: &Dataset, warnings: &mut Vec<String>) -> Result<Vec<EcoregionReport>> {
    let mut records: Vec<_> = dataset.ecoregions.iter().collect();
    records.sort_by(|a, b| a.unit_id.cmp(&b.unit_id));
    let mut reports = Vec::new();
    for rec in records {
        let status = rec.derived_status()?;
        let unit_sos = match ecoregion_unit_sos(rec) {
            Ok(sos) => sos,
            Err(e) => {
                warnings.push(format!("ecoregion '{}' skipped: {e}", rec.unit_id));
                continue;
            }
        };
        let shares = match ecoregion_gf_shares(rec) {
            Ok(shares) => shares,
            Err(e) => {
                warnings.push(format!("ecoregion '{}' skipped: {e}", rec.unit_id));
                continue;
            }
        };
        let total_loss = rec.total_loss();
        let mut results = Vec::new();
        for (country, &loss) in &rec.country_loss {
            results.push(evaluate_local_unit(
                &rec.unit_id,
                country,
                &shares,
                unit_sos,
                total_loss,
                unit_sos,
                loss,
            )?);
        }
        reports.push(EcoregionReport {
            unit_id: rec.unit_id.clone(),
            status: status.code().to_string(),
            reduction_target: ecoregion_reduction_target(status),
            unit_sos,
            total_loss,
            results,
        });
    }
    Ok(reports)
}

/// Gini and top-holder statistics of each city's household footprints.
fn eval_inequality(dataset: &Dataset, warnings: &mut Vec<String>) -> Result<Vec<CityInequality>> {
    let mut by_city: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for hh in &dataset.households {
        by_city.entry(hh.city.as_str()).or_default().push(hh.footprint);
    }
    let mut rows = Vec::new();
    for (city, values) in by_city {
        let curve = match lorenz_gini(&values) {
            Ok(curve) => curve,
            Err(e) => {
                warnings.push(format!("city '{city}' inequality skipped: {e}"));
                continue;
            }
        };
        rows.push(CityInequality {
            city: city.to_string(),
            households: values.len(),
            gini: curve.gini,
            top_holders_for_half: curve.top_holders_for(0.5)?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form.
fn fmt_full(value: f64) -> String {
    format!("{value}")
}

/// Fixed decimals, rounding halves to even.
fn fmt_dp(value: f64, decimals: u32) -> String {
    format!("{:.*}", decimals as usize, round_half_even(value, decimals))
}

/// Fixed decimals or an empty cell.
fn fmt_opt(value: Option<f64>, decimals: u32) -> String {
    value.map(|v| fmt_dp(v, decimals)).unwrap_or_default()
}

/// Relative transgression cell: a ratio, or the marker for a country with
/// no footprint in the unit (where a ratio would divide by zero).
fn fmt_rel(value: Option<f64>) -> String {
    value.map(|v| fmt_dp(v, 4)).unwrap_or_else(|| "no_footprint".to_string())
}

fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
    files: &mut Vec<String>,
) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(header).map_err(|e| Error::parse(name, 0, e.to_string()))?;
    for row in rows {
        writer.write_record(row).map_err(|e| Error::parse(name, 0, e.to_string()))?;
    }
    let body = writer.into_inner().map_err(|e| Error::parse(name, 0, e.to_string()))?;
    let path = dir.join(name);
    if let Err(e) = std::fs::write(&path, body) {
        let _ = std::fs::remove_file(&path); // don't leave a truncated file
        return Err(Error::io(path.display().to_string(), e));
    }
    files.push(name.to_string());
    Ok(())
}

/// Writes every report file and returns the sorted list of file names. A
/// failure part-way through removes everything already written, so an output
/// directory never holds a partial run.
fn write_outputs(report: &RunReport, out_dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut files = Vec::new();
    match write_output_files(report, out_dir, &mut files) {
        Ok(()) => {
            files.sort();
            Ok(files)
        }
        Err(e) => {
            for name in &files {
                let _ = std::fs::remove_file(out_dir.join(name));
            }
            Err(e)
        }
    }
}

fn write_output_files(report: &RunReport, out_dir: &Path, files: &mut Vec<String>) -> Result<()> {
    for br in &report.boundaries {
        let base = format!("{}_{}", br.boundary, br.perspective);

        let rows: Vec<Vec<String>> = br
            .countries
            .iter()
            .map(|r| {
                vec![
                    r.entity.clone(),
                    r.approach.code().to_string(),
                    r.actual.map(fmt_full).unwrap_or_default(),
                    fmt_full(r.budget),
                    r.unit.clone(),
                    fmt_dp(r.share, 6),
                    fmt_opt(r.over_under, 2),
                    fmt_opt(r.change_pct, 1),
                    fmt_opt(r.reduction_rate_pct_yr, 1),
                ]
            })
            .collect();
        write_csv(
            out_dir,
            &format!("report_{base}.csv"),
            &[
                "entity",
                "approach",
                "actual",
                "budget",
                "unit",
                "share",
                "over_under",
                "change_pct",
                "reduction_rate_pct_yr",
            ],
            &rows,
            files,
        )?;

        // Summary across the pure approaches that were run. The mean budget
        // repeats the equal-weight blend's arithmetic — mean share times
        // global budget — so with equal weights it equals the blended row's
        // budget to the last bit, instead of a nearby float.
        struct SummaryEntry {
            actual: Option<f64>,
            unit: String,
            shares: Vec<f64>,
            budgets: Vec<f64>,
        }
        let mut order: Vec<&str> = Vec::new();
        let mut per_entity: BTreeMap<&str, SummaryEntry> = BTreeMap::new();
        for r in &br.countries {
            if r.approach == Approach::Ba {
                continue;
            }
            let entry = per_entity.entry(r.entity.as_str()).or_insert_with(|| {
                order.push(r.entity.as_str());
                SummaryEntry {
                    actual: r.actual,
                    unit: r.unit.clone(),
                    shares: Vec::new(),
                    budgets: Vec::new(),
                }
            });
            entry.shares.push(r.share);
            entry.budgets.push(r.budget);
        }
        if !order.is_empty() {
            let rows: Vec<Vec<String>> = order
                .iter()
                .map(|entity| {
                    let e = &per_entity[entity];
                    let min = e.budgets.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = e.budgets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mean = compensated_sum(e.shares.iter().copied()) / e.shares.len() as f64
                        * br.global_budget.global_annual;
                    vec![
                        entity.to_string(),
                        e.actual.map(fmt_full).unwrap_or_default(),
                        e.unit.clone(),
                        fmt_full(min),
                        fmt_full(mean),
                        fmt_full(max),
                    ]
                })
                .collect();
            write_csv(
                out_dir,
                &format!("summary_{base}.csv"),
                &["entity", "actual", "unit", "min_budget", "mean_budget", "max_budget"],
                &rows,
                files,
            )?;
        }

        for (rows, name) in [
            (&br.sectors, "sectors"),
            (&br.sector_groups, "sector_groups"),
            (&br.cities, "cities"),
        ] {
            if rows.is_empty() {
                continue;
            }
            let csv_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.entity.clone(),
                        r.parent.clone(),
                        r.approach.code().to_string(),
                        r.actual.map(fmt_full).unwrap_or_default(),
                        fmt_full(r.budget),
                        r.unit.clone(),
                    ]
                })
                .collect();
            write_csv(
                out_dir,
                &format!("{name}_{base}.csv"),
                &["entity", "parent", "approach", "actual", "budget", "unit"],
                &csv_rows,
                files,
            )?;
        }

        if !br.normalized.is_empty() {
            let with_subset = br.normalized.iter().any(|r| r.vs_subset_mean.is_some());
            let mut header =
                vec!["entity", "per_capita", "unit", "vs_population_weighted", "vs_country_mean"];
            if with_subset {
                header.push("vs_subset_mean");
            }
            let rows: Vec<Vec<String>> = br
                .normalized
                .iter()
                .map(|r| {
                    let mut row = vec![
                        r.entity.clone(),
                        fmt_full(r.per_capita),
                        r.unit.clone(),
                        fmt_dp(r.vs_population_weighted, 4),
                        fmt_dp(r.vs_country_mean, 4),
                    ];
                    if with_subset {
                        row.push(fmt_opt(r.vs_subset_mean, 4));
                    }
                    row
                })
                .collect();
            write_csv(out_dir, &format!("normalized_{base}.csv"), &header, &rows, files)?;
        }
    }

    if !report.watersheds.is_empty() {
        let mut rows = Vec::new();
        for w in &report.watersheds {
            for r in &w.results {
                rows.push(vec![
                    w.unit_id.clone(),
                    r.country.clone(),
                    fmt_full(w.maf),
                    fmt_full(w.hwc),
                    fmt_full(w.ewr),
                    fmt_full(w.lb),
                    fmt_full(w.usable_water),
                    fmt_full(r.a_sos),
                    fmt_full(r.actual),
                    fmt_full(r.abs_transgression),
                    fmt_rel(r.rel_transgression),
                    r.band.code().to_string(),
                ]);
            }
        }
        write_csv(
            out_dir,
            "local_watersheds.csv",
            &[
                "unit",
                "country",
                "maf",
                "hwc",
                "ewr",
                "lb",
                "usable_water",
                "a_sos",
                "actual",
                "abs_transgression",
                "rel_transgression",
                "band",
            ],
            &rows,
            files,
        )?;
    }

    if !report.ecoregions.is_empty() {
        let mut rows = Vec::new();
        for e in &report.ecoregions {
            for r in &e.results {
                rows.push(vec![
                    e.unit_id.clone(),
                    r.country.clone(),
                    e.status.clone(),
                    fmt_dp(e.reduction_target, 2),
                    fmt_full(e.unit_sos),
                    fmt_full(e.total_loss),
                    fmt_full(r.a_sos),
                    fmt_full(r.actual),
                    fmt_full(r.abs_transgression),
                    fmt_rel(r.rel_transgression),
                    r.band.code().to_string(),
                ]);
            }
        }
        write_csv(
            out_dir,
            "local_ecoregions.csv",
            &[
                "unit",
                "country",
                "status",
                "reduction_target",
                "unit_sos",
                "total_loss",
                "a_sos",
                "actual",
                "abs_transgression",
                "rel_transgression",
                "band",
            ],
            &rows,
            files,
        )?;
    }

    if !report.inequality.is_empty() {
        let rows: Vec<Vec<String>> = report
            .inequality
            .iter()
            .map(|c| {
                vec![
                    c.city.clone(),
                    c.households.to_string(),
                    fmt_dp(c.gini, 4),
                    fmt_dp(c.top_holders_for_half, 4),
                ]
            })
            .collect();
        write_csv(
            out_dir,
            "inequality.csv",
            &["city", "households", "gini", "top_holders_for_half"],
            &rows,
            files,
        )?;
    }

    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Json { file: "run.json".into(), source: e })?;
    json.push('\n');
    let path = out_dir.join("run.json");
    if let Err(e) = std::fs::write(&path, json) {
        let _ = std::fs::remove_file(&path);
        return Err(Error::io(path.display().to_string(), e));
    }
    files.push("run.json".to_string());
    Ok(())
}
