//! Global planetary-boundary budgets.
//!
//! Three boundaries are supported: climate (a remaining emission budget
//! spread over the years left until the end of the century), freshwater (a
//! fixed yearly global consumption limit), and biodiversity (a yearly loss
//! limit anchored on an equal-per-capita allowance). Each derivation returns
//! a [`BudgetSpec`] that downstream allocation treats uniformly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Temperature target of a climate budget scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClimateTarget {
    /// Limit warming to 1.5 degrees C.
    #[serde(rename = "1.5C")]
    C15,
    /// Limit warming to 2.0 degrees C.
    #[serde(rename = "2.0C")]
    C20,
}

/// Probability of staying below the temperature target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Probability {
    /// 50% chance.
    #[serde(rename = "50%")]
    P50,
    /// 66% chance.
    #[serde(rename = "66%")]
    P66,
}

/// Remaining global CO2 budget in Gt from the start of 2020 for the four
/// supported scenarios.
pub fn remaining_budget_gt(target: ClimateTarget, probability: Probability) -> f64 {
    match (target, probability) {
        (ClimateTarget::C15, Probability::P66) => 235.0,
        (ClimateTarget::C15, Probability::P50) => 395.0,
        (ClimateTarget::C20, Probability::P66) => 985.0,
        (ClimateTarget::C20, Probability::P50) => 1315.0,
    }
}

/// Gt of CO2 emitted globally between the start of the default 2016 analysis
/// year and the start of 2020; added back when the analysis year predates the
/// budget's reference year.
pub const DEFAULT_BACKCAST_2016_GT: f64 = 168.0;

/// Default multiplier turning a CO2 budget into a CO2-equivalent budget for
/// all greenhouse gases.
pub const DEFAULT_GHG_FACTOR: f64 = 1.25;

/// Default analysis year.
pub const DEFAULT_ANALYSIS_YEAR: i32 = 2016;

/// Default end of the budget horizon.
pub const DEFAULT_HORIZON_END: i32 = 2100;

/// Fully specified climate budget scenario.
///
/// `budget_from_2020_gt` is the cumulative CO2 budget from the start of 2020.
/// When the analysis year lies before 2020 the emissions of the intervening
/// years (`backcast_gt`) are added back, and the total is spread evenly over
/// the years from the analysis year to `horizon_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimateBudgetSpec {
    pub target: ClimateTarget,
    pub probability: Probability,
    /// Remaining cumulative budget from the start of 2020, Gt CO2.
    pub budget_from_2020_gt: f64,
    /// First year of the allocation horizon.
    pub analysis_year: i32,
    /// Last year of the budget horizon (exclusive start, inclusive end:
    /// the divisor is `horizon_end - analysis_year`).
    pub horizon_end: i32,
    /// Emissions between the analysis year and 2020, Gt CO2. `None` falls
    /// back to [`DEFAULT_BACKCAST_2016_GT`] for the 2016 analysis year and is
    /// a configuration error for any other year.
    pub backcast_gt: Option<f64>,
}

impl ClimateBudgetSpec {
    /// Scenario for one of the four supported target/probability pairs with
    /// the default 2016 analysis year and 2100 horizon.
    pub fn new(target: ClimateTarget, probability: Probability) -> Self {
        ClimateBudgetSpec {
            target,
            probability,
            budget_from_2020_gt: remaining_budget_gt(target, probability),
            analysis_year: DEFAULT_ANALYSIS_YEAR,
            horizon_end: DEFAULT_HORIZON_END,
            backcast_gt: None,
        }
    }

    /// Replaces the analysis year.
    pub fn with_analysis_year(mut self, year: i32) -> Self {
        self.analysis_year = year;
        self
    }

    /// Replaces the backcast emissions explicitly.
    pub fn with_backcast_gt(mut self, gt: f64) -> Self {
        self.backcast_gt = Some(gt);
        self
    }

    /// Replaces the end of the horizon.
    pub fn with_horizon_end(mut self, year: i32) -> Self {
        self.horizon_end = year;
        self
    }

    fn resolved_backcast_gt(&self) -> Result<f64> {
        match self.backcast_gt {
            Some(gt) if gt >= 0.0 && gt.is_finite() => Ok(gt),
            Some(gt) => Err(Error::Config(format!("backcast must be finite and >= 0, got {gt}"))),
            None if self.analysis_year == 2016 => Ok(DEFAULT_BACKCAST_2016_GT),
            None => Err(Error::Config(format!(
                "no default backcast for analysis year {}; set backcast_gt explicitly",
                self.analysis_year
            ))),
        }
    }
}

/// Which boundary a budget belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    ClimateCo2,
    ClimateGhg,
    Freshwater,
    Biodiversity,
}

impl Boundary {
    /// Short lowercase name used in file names and report rows.
    pub fn code(self) -> &'static str {
        match self {
            Boundary::ClimateCo2 => "climate_co2",
            Boundary::ClimateGhg => "climate_ghg",
            Boundary::Freshwater => "freshwater",
            Boundary::Biodiversity => "biodiversity",
        }
    }
}

/// Whether a budget is a yearly flow or a cumulative stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    YearlyFlow,
    CumulativeStock,
}

/// A global budget ready for allocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSpec {
    pub boundary: Boundary,
    /// Global budget in `unit` per year (for [`Basis::YearlyFlow`]).
    pub global_annual: f64,
    pub unit: String,
    pub basis: Basis,
}

impl BudgetSpec {
    fn checked(self) -> Result<Self> {
        if !(self.global_annual > 0.0) || !self.global_annual.is_finite() {
            return Err(Error::Config(format!(
                "global budget for {} must be positive and finite, got {}",
                self.boundary.code(),
                self.global_annual
            )));
        }
        Ok(self)
    }
}

/// Yearly global CO2 budget for a climate scenario:
/// `(budget_from_2020 + backcast) / (horizon_end - analysis_year)` in Gt/yr.
pub fn climate_yearly_budget(spec: &ClimateBudgetSpec) -> Result<BudgetSpec> {
    if spec.analysis_year > 2020 {
        return Err(Error::Config(format!(
            "analysis year {} lies after the 2020 budget reference year",
            spec.analysis_year
        )));
    }
    if spec.horizon_end <= spec.analysis_year {
        return Err(Error::Config(format!(
            "horizon end {} must lie after analysis year {}",
            spec.horizon_end, spec.analysis_year
        )));
    }
    if !(spec.budget_from_2020_gt > 0.0) {
        return Err(Error::Config(format!(
            "cumulative budget must be positive, got {}",
            spec.budget_from_2020_gt
        )));
    }
    let backcast = spec.resolved_backcast_gt()?;
    let years = f64::from(spec.horizon_end - spec.analysis_year);
    BudgetSpec {
        boundary: Boundary::ClimateCo2,
        global_annual: (spec.budget_from_2020_gt + backcast) / years,
        unit: "Gt CO2".to_owned(),
        basis: Basis::YearlyFlow,
    }
    .checked()
}

/// Scales a CO2 budget into a CO2-equivalent budget for all greenhouse
/// gases. Only accepts a [`Boundary::ClimateCo2`] input so the factor can
/// never be applied twice.
pub fn ghg_from_co2(co2: &BudgetSpec, factor: f64) -> Result<BudgetSpec> {
    if co2.boundary != Boundary::ClimateCo2 {
        return Err(Error::Config(format!(
            "GHG factor applies to a CO2 budget, got {}",
            co2.boundary.code()
        )));
    }
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::Config(format!("GHG factor must be positive and finite, got {factor}")));
    }
    let unit = co2.unit.replace("CO2", "CO2eq");
    BudgetSpec {
        boundary: Boundary::ClimateGhg,
        global_annual: co2.global_annual * factor,
        unit,
        basis: co2.basis,
    }
    .checked()
}

/// Default global freshwater consumption limit, km3 per year.
pub const DEFAULT_FRESHWATER_KM3: f64 = 4000.0;

/// Global freshwater budget at the default 4000 km3/yr.
pub fn freshwater_budget() -> BudgetSpec {
    freshwater_budget_km3(DEFAULT_FRESHWATER_KM3).expect("default freshwater budget is valid")
}

/// Global freshwater budget at a custom yearly limit.
pub fn freshwater_budget_km3(km3: f64) -> Result<BudgetSpec> {
    BudgetSpec {
        boundary: Boundary::Freshwater,
        global_annual: km3,
        unit: "km3".to_owned(),
        basis: Basis::YearlyFlow,
    }
    .checked()
}

/// Default equal-per-capita biodiversity-loss allowance, pico PDF.yr per
/// person per year.
pub const DEFAULT_BIODIVERSITY_PICO_PDF_YR: f64 = 2.0;

/// Global biodiversity-loss budget derived from a per-capita allowance.
///
/// There is no agreed global limit for biodiversity loss, so the global
/// budget is anchored the other way around: a per-person yearly allowance
/// (in pico PDF.yr) times the global population. Allocating the result with
/// equal-per-capita shares returns exactly the allowance for every entity.
pub fn biodiversity_budget(per_capita_pico_pdf_yr: f64, global_population: f64) -> Result<BudgetSpec> {
    if !(per_capita_pico_pdf_yr > 0.0) || !per_capita_pico_pdf_yr.is_finite() {
        return Err(Error::Config(format!(
            "per-capita biodiversity allowance must be positive, got {per_capita_pico_pdf_yr}"
        )));
    }
    if !(global_population > 0.0) || !global_population.is_finite() {
        return Err(Error::Config(format!(
            "global population must be positive, got {global_population}"
        )));
    }
    BudgetSpec {
        boundary: Boundary::Biodiversity,
        global_annual: per_capita_pico_pdf_yr * 1e-12 * global_population,
        unit: "PDF.yr".to_owned(),
        basis: Basis::YearlyFlow,
    }
    .checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn four_scenarios_are_ordered() {
        let budgets = [
            remaining_budget_gt(ClimateTarget::C15, Probability::P66),
            remaining_budget_gt(ClimateTarget::C15, Probability::P50),
            remaining_budget_gt(ClimateTarget::C20, Probability::P66),
            remaining_budget_gt(ClimateTarget::C20, Probability::P50),
        ];
        assert_eq!(budgets, [235.0, 395.0, 985.0, 1315.0]);
        // Looser targets and lower certainty always leave more room.
        assert!(budgets.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn yearly_budget_default_2016() {
        // (395 + 168) / (2100 - 2016)
        let spec = ClimateBudgetSpec::new(ClimateTarget::C15, Probability::P50);
        let budget = climate_yearly_budget(&spec).unwrap();
        assert_relative_eq!(budget.global_annual, 563.0 / 84.0, max_relative = 1e-15);
        assert!((budget.global_annual - 6.70).abs() < 0.01);
        assert_eq!(budget.unit, "Gt CO2");
        assert_eq!(budget.boundary, Boundary::ClimateCo2);
    }

    #[test]
    fn yearly_budget_2020_without_backcast() {
        // 985 Gt spread over 2020..2100 with no backcast to add back.
        let spec = ClimateBudgetSpec::new(ClimateTarget::C20, Probability::P66)
            .with_analysis_year(2020)
            .with_backcast_gt(0.0);
        let budget = climate_yearly_budget(&spec).unwrap();
        assert_relative_eq!(budget.global_annual, 985.0 / 80.0, max_relative = 1e-15);
        assert!((budget.global_annual - 12.31).abs() < 0.01);
    }

    #[test]
    fn non_default_year_requires_explicit_backcast() {
        let spec = ClimateBudgetSpec::new(ClimateTarget::C15, Probability::P50)
            .with_analysis_year(2018);
        assert!(matches!(climate_yearly_budget(&spec), Err(Error::Config(_))));
        let fixed = spec.with_backcast_gt(80.0);
        let budget = climate_yearly_budget(&fixed).unwrap();
        assert_relative_eq!(budget.global_annual, 475.0 / 82.0, max_relative = 1e-15);
    }

    #[test]
    fn analysis_year_after_2020_is_rejected() {
        let spec = ClimateBudgetSpec::new(ClimateTarget::C15, Probability::P50)
            .with_analysis_year(2025)
            .with_backcast_gt(0.0);
        assert!(matches!(climate_yearly_budget(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn scenario_ordering_survives_the_yearly_pipeline() {
        let mut previous = 0.0;
        for (target, probability) in [
            (ClimateTarget::C15, Probability::P66),
            (ClimateTarget::C15, Probability::P50),
            (ClimateTarget::C20, Probability::P66),
            (ClimateTarget::C20, Probability::P50),
        ] {
            let spec = ClimateBudgetSpec::new(target, probability);
            let yearly = climate_yearly_budget(&spec).unwrap().global_annual;
            assert!(yearly > previous);
            previous = yearly;
        }
    }

    #[test]
    fn ghg_factor_scales_and_relabels() {
        let co2 = climate_yearly_budget(&ClimateBudgetSpec::new(
            ClimateTarget::C15,
            Probability::P50,
        ))
        .unwrap();
        let ghg = ghg_from_co2(&co2, DEFAULT_GHG_FACTOR).unwrap();
        assert_relative_eq!(ghg.global_annual, co2.global_annual * 1.25, max_relative = 1e-15);
        assert!((ghg.global_annual - 8.38).abs() < 0.005);
        assert_eq!(ghg.unit, "Gt CO2eq");
        assert_eq!(ghg.boundary, Boundary::ClimateGhg);
        // Applying the factor to an already-converted budget must fail.
        assert!(ghg_from_co2(&ghg, 1.25).is_err());
    }

    #[test]
    fn ghg_linearity() {
        let co2 = climate_yearly_budget(&ClimateBudgetSpec::new(
            ClimateTarget::C20,
            Probability::P50,
        ))
        .unwrap();
        let doubled = ghg_from_co2(&co2, 2.5).unwrap().global_annual;
        let single = ghg_from_co2(&co2, 1.25).unwrap().global_annual;
        assert_relative_eq!(doubled, 2.0 * single, max_relative = 1e-15);
    }

    #[test]
    fn freshwater_default() {
        let budget = freshwater_budget();
        assert_eq!(budget.global_annual, 4000.0);
        assert_eq!(budget.unit, "km3");
        assert!(freshwater_budget_km3(0.0).is_err());
        assert!(freshwater_budget_km3(-1.0).is_err());
    }

    #[test]
    fn biodiversity_budget_from_allowance() {
        let budget = biodiversity_budget(2.0, 7.4e9).unwrap();
        assert_relative_eq!(budget.global_annual, 1.48e-2, max_relative = 1e-12);
        assert_eq!(budget.unit, "PDF.yr");
        // Round trip: allowance * population / population = allowance.
        let per_capita = budget.global_annual / 7.4e9;
        assert_relative_eq!(per_capita * 1e12, 2.0, max_relative = 1e-12);
        assert!(biodiversity_budget(0.0, 7.4e9).is_err());
        assert!(biodiversity_budget(2.0, 0.0).is_err());
    }
}
