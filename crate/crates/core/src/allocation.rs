//! Effort-sharing rules that split a global budget across entities.
//!
//! Five approaches are implemented:
//!
//! * **EPC** — equal per capita: `s_i = pop_i / POP`.
//! * **GF** — grandfathering: `s_i = ep_i / EP`, proportional to current
//!   pressure, so the result depends on whether production- or
//!   consumption-based pressure is selected.
//! * **AP** — ability to pay: `s_i = emp_i * (va_i/emp_i)^(-alpha)` over the
//!   sum of the same term, discounting entities with a high value added per
//!   worker.
//! * **VA** — value added: `s_i = va_i / VA`.
//! * **BA** — blended: a weighted mean of other approaches' shares.
//!
//! Every rule produces an [`AllocationShares`] whose entries are
//! non-negative and sum to one within [`SHARE_SUM_TOL`]; budgets are then a
//! plain scalar multiple, and a two-stage variant splits an entity's budget
//! further (e.g. country first, sectors within the country second).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::budgets::{Boundary, BudgetSpec};
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Tolerance on `sum(shares) == 1`.
pub const SHARE_SUM_TOL: f64 = 1e-12;

/// Default exponent of the ability-to-pay rule.
pub const DEFAULT_AP_ALPHA: f64 = 0.5;

/// Identifier of an effort-sharing approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Equal per capita.
    Epc,
    /// Grandfathering (proportional to current pressure).
    Gf,
    /// Ability to pay.
    Ap,
    /// Value added.
    Va,
    /// Blended (weighted mean of other approaches).
    Ba,
}

impl Approach {
    /// Short lowercase code used in CLI flags, file names and report rows.
    pub fn code(self) -> &'static str {
        match self {
            Approach::Epc => "epc",
            Approach::Gf => "gf",
            Approach::Ap => "ap",
            Approach::Va => "va",
            Approach::Ba => "ba",
        }
    }

    /// Parses a code such as `epc`; unknown names are configuration errors.
    pub fn from_code(code: &str) -> Result<Self> {
        match code {
            "epc" => Ok(Approach::Epc),
            "gf" => Ok(Approach::Gf),
            "ap" => Ok(Approach::Ap),
            "va" => Ok(Approach::Va),
            "ba" => Ok(Approach::Ba),
            other => Err(Error::Config(format!("unknown allocation approach '{other}'"))),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Per-entity inputs of the allocation rules.
///
/// Fields that a given rule does not use may be absent; a rule that needs an
/// absent field fails with [`Error::DegenerateEntity`] instead of guessing.
/// `pressures` holds one value per named pressure series (for example
/// `water:cba` and `water:pba`), so grandfathering can be computed for both
/// accounting perspectives from the same stats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityStats {
    pub entity_id: String,
    /// Enclosing entity for second-stage allocation (country of a sector or
    /// city), `None` for top-level entities.
    pub parent: Option<String>,
    pub population: Option<f64>,
    pub value_added: Option<f64>,
    pub employment: Option<f64>,
    pub pressures: BTreeMap<String, f64>,
}

impl EntityStats {
    /// A stats record with nothing but the id; fill fields as needed.
    pub fn new(entity_id: impl Into<String>) -> Self {
        EntityStats {
            entity_id: entity_id.into(),
            parent: None,
            population: None,
            value_added: None,
            employment: None,
            pressures: BTreeMap::new(),
        }
    }
}

/// How to treat entities that lack the data an approach needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingData {
    /// Fail with [`Error::DegenerateEntity`] (default).
    Error,
    /// Give the entity a zero share and renormalise over the rest.
    Exclude,
}

/// A complete set of shares over a fixed entity list.
///
/// Invariants (checked on construction): entries are finite and
/// non-negative, and sum to one within [`SHARE_SUM_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationShares {
    pub approach: Approach,
    pub entities: Vec<String>,
    pub shares: Vec<f64>,
}

impl AllocationShares {
    /// Validates and wraps a share vector.
    pub fn new(approach: Approach, entities: Vec<String>, shares: Vec<f64>) -> Result<Self> {
        if entities.is_empty() {
            return Err(Error::DegenerateInput("no entities to allocate over".into()));
        }
        if entities.len() != shares.len() {
            return Err(Error::Dimension(format!(
                "{} entities but {} shares",
                entities.len(),
                shares.len()
            )));
        }
        for (entity, &share) in entities.iter().zip(&shares) {
            if !share.is_finite() || share < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "share for {entity} is {share}; shares must be finite and >= 0"
                )));
            }
        }
        let total = compensated_sum(shares.iter().copied());
        if (total - 1.0).abs() > SHARE_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "shares sum to {total}, deviating from 1 by more than {SHARE_SUM_TOL}"
            )));
        }
        Ok(AllocationShares { approach, entities, shares })
    }

    /// Share of a single entity, if present.
    pub fn share_of(&self, entity_id: &str) -> Option<f64> {
        self.entities.iter().position(|e| e == entity_id).map(|i| self.shares[i])
    }
}

/// Divides every weight by their compensated sum, turning non-negative
/// weights into shares.
fn shares_from_weights(
    approach: Approach,
    entities: Vec<String>,
    weights: Vec<f64>,
    what: &str,
) -> Result<AllocationShares> {
    let total = compensated_sum(weights.iter().copied());
    if !(total > 0.0) {
        return Err(Error::DegenerateInput(format!("total {what} is {total}; cannot form shares")));
    }
    let shares = weights.iter().map(|w| w / total).collect();
    AllocationShares::new(approach, entities, shares)
}

fn entity_ids(stats: &[EntityStats]) -> Vec<String> {
    stats.iter().map(|s| s.entity_id.clone()).collect()
}

fn ensure_entities(stats: &[EntityStats]) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::DegenerateInput("empty entity stats".into()));
    }
    Ok(())
}

/// Equal-per-capita shares: `s_i = pop_i / POP`.
pub fn epc_shares(stats: &[EntityStats]) -> Result<AllocationShares> {
    ensure_entities(stats)?;
    let mut weights = Vec::with_capacity(stats.len());
    for s in stats {
        let pop = s.population.ok_or_else(|| Error::DegenerateEntity {
            entity: s.entity_id.clone(),
            detail: "population unknown".into(),
        })?;
        if !pop.is_finite() || pop < 0.0 {
            return Err(Error::InvalidInput(format!(
                "population of {} is {pop}; must be finite and >= 0",
                s.entity_id
            )));
        }
        weights.push(pop);
    }
    shares_from_weights(Approach::Epc, entity_ids(stats), weights, "population")
}

/// Grandfathering shares: `s_i = ep_i / EP` for the pressure series named by
/// `pressure_key`. Selecting a production- vs consumption-based series is
/// what makes grandfathering differ between accounting perspectives.
pub fn gf_shares(stats: &[EntityStats], pressure_key: &str) -> Result<AllocationShares> {
    ensure_entities(stats)?;
    let mut weights = Vec::with_capacity(stats.len());
    for s in stats {
        let ep = *s.pressures.get(pressure_key).ok_or_else(|| Error::DegenerateEntity {
            entity: s.entity_id.clone(),
            detail: format!("no pressure series '{pressure_key}'"),
        })?;
        if !ep.is_finite() || ep < 0.0 {
            return Err(Error::InvalidPressure { entity: s.entity_id.clone(), value: ep });
        }
        weights.push(ep);
    }
    shares_from_weights(Approach::Gf, entity_ids(stats), weights, &format!("'{pressure_key}' pressure"))
}

/// Raw ability-to-pay weight of a single entity:
/// `emp * (va/emp)^(-alpha)`. `alpha` must lie in `[0, 1]`; at 0 the weight
/// degrades to employment, at 1 to `emp^2 / va`.
///
/// Unknown (or zero) value added or employment is a
/// [`Error::DegenerateEntity`]; the caller decides what to do with it.
pub fn ap_weight(stat: &EntityStats, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::Config(format!("ability-to-pay alpha must lie in [0, 1], got {alpha}")));
    }
    match (stat.value_added, stat.employment) {
        (Some(va), Some(emp)) if va > 0.0 && emp > 0.0 => {
            if !va.is_finite() || !emp.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "value added or employment of {} is not finite",
                    stat.entity_id
                )));
            }
            Ok(emp * (va / emp).powf(-alpha))
        }
        (Some(va), _) if va < 0.0 => Err(Error::InvalidInput(format!(
            "value added of {} is negative ({va})",
            stat.entity_id
        ))),
        (_, Some(emp)) if emp < 0.0 => Err(Error::InvalidInput(format!(
            "employment of {} is negative ({emp})",
            stat.entity_id
        ))),
        _ => Err(Error::DegenerateEntity {
            entity: stat.entity_id.clone(),
            detail: "value added and employment must both be known and positive \
                     for ability-to-pay shares"
                .into(),
        }),
    }
}

/// Ability-to-pay shares: `s_i = emp_i (va_i/emp_i)^(-alpha)` normalised
/// over all entities. `alpha` must lie in `[0, 1]`; at 0 the rule degrades
/// to employment shares, at 1 to `emp_i^2 / va_i` weights.
///
/// Entities with unknown (or zero) value added or employment cannot carry an
/// ability weight; `missing` decides between failing and excluding them.
pub fn ap_shares(stats: &[EntityStats], alpha: f64, missing: MissingData) -> Result<AllocationShares> {
    ensure_entities(stats)?;
    let mut weights = Vec::with_capacity(stats.len());
    for s in stats {
        let weight = match ap_weight(s, alpha) {
            Ok(w) => w,
            Err(Error::DegenerateEntity { .. }) if missing == MissingData::Exclude => 0.0,
            Err(e) => return Err(e),
        };
        weights.push(weight);
    }
    shares_from_weights(Approach::Ap, entity_ids(stats), weights, "ability weight")
}

/// Value-added shares: `s_i = va_i / VA`.
pub fn va_shares(stats: &[EntityStats]) -> Result<AllocationShares> {
    ensure_entities(stats)?;
    let mut weights = Vec::with_capacity(stats.len());
    for s in stats {
        let va = s.value_added.ok_or_else(|| Error::DegenerateEntity {
            entity: s.entity_id.clone(),
            detail: "value added unknown".into(),
        })?;
        if !va.is_finite() || va < 0.0 {
            return Err(Error::InvalidInput(format!(
                "value added of {} is {va}; must be finite and >= 0",
                s.entity_id
            )));
        }
        weights.push(va);
    }
    shares_from_weights(Approach::Va, entity_ids(stats), weights, "value added")
}

/// Blended shares: the weighted mean of the component share vectors.
///
/// Weights must be non-negative and sum to one within [`SHARE_SUM_TOL`];
/// components must cover the same entities in the same order. When all
/// weights are equal the blend is computed as `sum(shares) / k`, so an
/// equal-weight blend is *exactly* the arithmetic mean of its components.
pub fn blended_shares(components: &[(&AllocationShares, f64)]) -> Result<AllocationShares> {
    if components.is_empty() {
        return Err(Error::Config("blended shares need at least one component".into()));
    }
    for (_, w) in components {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::Config(format!("blend weight {w} must be finite and >= 0")));
        }
    }
    let weight_total = compensated_sum(components.iter().map(|(_, w)| *w));
    if (weight_total - 1.0).abs() > SHARE_SUM_TOL {
        return Err(Error::Config(format!(
            "blend weights sum to {weight_total}, deviating from 1 by more than {SHARE_SUM_TOL}"
        )));
    }
    let entities = components[0].0.entities.clone();
    for (component, _) in &components[1..] {
        if component.entities != entities {
            return Err(Error::Config(
                "blend components cover different entity lists".into(),
            ));
        }
    }
    let equal_weights = components.windows(2).all(|w| w[0].1 == w[1].1);
    let k = components.len() as f64;
    let shares: Vec<f64> = (0..entities.len())
        .map(|i| {
            if equal_weights {
                compensated_sum(components.iter().map(|(c, _)| c.shares[i])) / k
            } else {
                compensated_sum(components.iter().map(|(c, w)| w * c.shares[i]))
            }
        })
        .collect();
    AllocationShares::new(Approach::Ba, entities, shares)
}

/// One entity's slice of a global budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocatedBudget {
    pub entity_id: String,
    /// Country of a second-stage entity, `None` for first-stage results.
    pub parent: Option<String>,
    pub boundary: Boundary,
    pub approach: Approach,
    /// Budget in `unit` (per year for yearly-flow budgets).
    pub budget: f64,
    pub unit: String,
}

/// Multiplies the global budget into per-entity budgets: `pb_i = s_i * PB`.
pub fn allocate_budget(shares: &AllocationShares, budget: &BudgetSpec) -> Vec<AllocatedBudget> {
    shares
        .entities
        .iter()
        .zip(&shares.shares)
        .map(|(entity, &share)| AllocatedBudget {
            entity_id: entity.clone(),
            parent: None,
            boundary: budget.boundary,
            approach: shares.approach,
            budget: share * budget.global_annual,
            unit: budget.unit.clone(),
        })
        .collect()
}

/// Two-stage allocation: the global budget is split over first-stage
/// entities (countries), and each country's slice is split again with the
/// country's own within-country shares (over sectors or cities).
///
/// Because within-country shares sum to one, the second-stage budgets add
/// back up to the country budget, and running the same rule in both stages
/// is consistent with applying it directly to the second-stage entities.
pub fn two_stage_allocate(
    country_shares: &AllocationShares,
    within_country: &BTreeMap<String, AllocationShares>,
    budget: &BudgetSpec,
) -> Result<Vec<AllocatedBudget>> {
    for country in within_country.keys() {
        if !country_shares.entities.iter().any(|e| e == country) {
            return Err(Error::Config(format!(
                "within-country shares given for '{country}', which has no first-stage share"
            )));
        }
    }
    let mut result = Vec::new();
    for (country, &country_share) in country_shares.entities.iter().zip(&country_shares.shares) {
        let within = within_country.get(country).ok_or_else(|| {
            Error::Config(format!("no within-country shares for '{country}'"))
        })?;
        let country_budget = country_share * budget.global_annual;
        for (entity, &within_share) in within.entities.iter().zip(&within.shares) {
            result.push(AllocatedBudget {
                entity_id: entity.clone(),
                parent: Some(country.clone()),
                boundary: budget.boundary,
                approach: within.approach,
                budget: within_share * country_budget,
                unit: budget.unit.clone(),
            });
        }
    }
    Ok(result)
}
