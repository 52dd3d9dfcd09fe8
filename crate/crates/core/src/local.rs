//! Local safe operating spaces: watersheds and ecoregions.
//!
//! Two kinds of sub-global units carry their own boundary:
//!
//! * a **watershed**'s local boundary is the water left once human
//!   consumption, environmental flow requirements, and a precautionary
//!   reserve are subtracted from mean annual flow — which may be negative in
//!   water-scarce basins;
//! * an **ecoregion**'s safe operating space is its current total
//!   biodiversity loss shrunk by a reduction target that depends on how much
//!   of the region is protected or still in a natural state.
//!
//! A unit's boundary is split over countries with the same share logic as
//! the global budgets, and each country's actual pressure in the unit is
//! compared against its allocated slice.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocation::{AllocationShares, Approach};
use crate::error::{Error, Result};

/// Fraction of mean annual flow set aside as a precautionary reserve.
pub const PRECAUTIONARY_MAF_FRACTION: f64 = 0.15;

/// Hydrological record of one watershed. Volumes share one unit (Mm3/yr in
/// the bundled data); the math only needs them to be consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatershedRecord {
    pub unit_id: String,
    /// Mean annual flow.
    pub maf: f64,
    /// Total human water consumption in the watershed.
    pub hwc: f64,
    /// Environmental flow requirement.
    pub ewr: f64,
    /// Water consumption attributed to each country's final demand.
    pub country_consumption: BTreeMap<String, f64>,
}

/// Local boundary of a watershed:
/// `LB = MAF - (HWC + EWR + 0.15 * MAF)`.
///
/// A negative result is meaningful — the basin is already water-scarce —
/// so it is returned as-is, not clamped.
pub fn watershed_lb(rec: &WatershedRecord) -> Result<f64> {
    if !(rec.maf > 0.0) || !rec.maf.is_finite() {
        return Err(Error::InvalidInput(format!(
            "watershed {}: mean annual flow must be positive, got {}",
            rec.unit_id, rec.maf
        )));
    }
    for (name, value) in [("human water consumption", rec.hwc), ("environmental flow", rec.ewr)] {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidInput(format!(
                "watershed {}: {name} must be finite and >= 0, got {value}",
                rec.unit_id
            )));
        }
    }
    Ok(rec.maf - (rec.hwc + rec.ewr + PRECAUTIONARY_MAF_FRACTION * rec.maf))
}

/// Water available for human use before consumption is subtracted:
/// `MAF - EWR - 0.15 * MAF`. Comparing total consumption against this is
/// equivalent to asking whether the local boundary is non-negative.
pub fn watershed_usable_water(rec: &WatershedRecord) -> Result<f64> {
    Ok(watershed_lb(rec)? + rec.hwc)
}

/// Grandfathering shares *within* a watershed: each country's share of the
/// consumption that occurs in this watershed (the default grandfathering
/// scope for local water boundaries).
pub fn watershed_gf_shares(rec: &WatershedRecord) -> Result<AllocationShares> {
    consumption_gf_shares(&rec.unit_id, &rec.country_consumption)
}

/// Grandfathering shares from any country -> consumption map; the basis of
/// both the per-watershed and the all-watersheds share vectors.
pub fn consumption_gf_shares(
    scope: &str,
    consumption: &BTreeMap<String, f64>,
) -> Result<AllocationShares> {
    let mut entities = Vec::with_capacity(consumption.len());
    let mut weights = Vec::with_capacity(consumption.len());
    let mut total = 0.0;
    for (country, &value) in consumption {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidPressure { entity: country.clone(), value });
        }
        entities.push(country.clone());
        weights.push(value);
        total += value;
    }
    if entities.is_empty() || !(total > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "watershed {scope} has no positive country consumption to grandfather"
        )));
    }
    let shares = weights.into_iter().map(|w| w / total).collect();
    AllocationShares::new(Approach::Gf, entities, shares)
}

/// One country's allocated slice of a local boundary: `A_SOS = s_i * LB`.
///
/// The sign of `lb` is preserved: allocating a negative boundary hands the
/// country its proportional slice of the deficit.
pub fn allocate_local_sos(lb: f64, shares: &AllocationShares, country: &str) -> Result<f64> {
    let share = shares.share_of(country).ok_or_else(|| Error::DegenerateEntity {
        entity: country.to_owned(),
        detail: "country has no share in this allocation".into(),
    })?;
    Ok(share * lb)
}

/// Absolute transgression: `ACTUAL - A_SOS` (positive means over budget).
pub fn transgression_abs(actual: f64, a_sos: f64) -> f64 {
    actual - a_sos
}

/// Severity band of a relative transgression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransgressionBand {
    /// The country stays inside its allocated share.
    Within,
    /// The country is over its share, but the unit as a whole is still
    /// inside its own boundary.
    OverWithinUnit,
    /// The country is over its share and the unit's total pressure exceeds
    /// the unit's boundary (always the case when the boundary is negative).
    OverUnitExceeded,
}

impl TransgressionBand {
    /// Stable lowercase label used in report files.
    pub fn code(self) -> &'static str {
        match self {
            TransgressionBand::Within => "within",
            TransgressionBand::OverWithinUnit => "over_within_unit",
            TransgressionBand::OverUnitExceeded => "over_unit_exceeded",
        }
    }
}

/// Relative transgression of a country in one local unit.
///
/// The ratio is `(ACTUAL - A_SOS) / ACTUAL`: 0 means exactly at the
/// boundary, 1 means the entire footprint lies beyond it (possible when the
/// allocated space is zero or negative). A country with no footprint in the
/// unit has no meaningful ratio and is reported as `None`, band `Within`.
///
/// Banding also looks at the unit as a whole: `unit_total` is the unit's
/// total pressure and `unit_lb` the unit's own boundary for that pressure.
pub fn transgression_rel(
    actual: f64,
    a_sos: f64,
    unit_total: f64,
    unit_lb: f64,
) -> (Option<f64>, TransgressionBand) {
    if actual == 0.0 {
        return (None, TransgressionBand::Within);
    }
    let ratio = (actual - a_sos) / actual;
    let band = if ratio < 0.0 {
        TransgressionBand::Within
    } else if ratio <= 1.0 && unit_total <= unit_lb {
        TransgressionBand::OverWithinUnit
    } else {
        TransgressionBand::OverUnitExceeded
    };
    (Some(ratio), band)
}

/// Conservation status of an ecoregion, ordered from best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcoregionStatus {
    /// More than half the region is protected.
    HalfProtected,
    /// Protected plus natural habitat could reach half.
    CouldReachHalf,
    /// Protected plus natural habitat exceeds one fifth.
    CouldRecover,
    /// One fifth or less remains.
    Imperilled,
}

impl EcoregionStatus {
    /// Stable snake_case label used in data files and reports.
    pub fn code(self) -> &'static str {
        match self {
            EcoregionStatus::HalfProtected => "half_protected",
            EcoregionStatus::CouldReachHalf => "could_reach_half",
            EcoregionStatus::CouldRecover => "could_recover",
            EcoregionStatus::Imperilled => "imperilled",
        }
    }

    /// Parses a label produced by [`EcoregionStatus::code`].
    pub fn from_code(code: &str) -> Result<Self> {
        match code {
            "half_protected" => Ok(EcoregionStatus::HalfProtected),
            "could_reach_half" => Ok(EcoregionStatus::CouldReachHalf),
            "could_recover" => Ok(EcoregionStatus::CouldRecover),
            "imperilled" => Ok(EcoregionStatus::Imperilled),
            other => Err(Error::InvalidInput(format!("unknown ecoregion status '{other}'"))),
        }
    }
}

/// Classifies an ecoregion from its protected fraction and the additional
/// fraction still in a (semi-)natural state.
///
/// * protected > 0.5 — already half protected;
/// * protected + habitat > 0.5 — could reach half protection;
/// * protected + habitat > 0.2 — could recover;
/// * otherwise (sum at or below 0.2) — imperilled.
pub fn classify_ecoregion(protected: f64, habitat: f64) -> Result<EcoregionStatus> {
    for (name, value) in [("protected fraction", protected), ("habitat fraction", habitat)] {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidInput(format!(
                "{name} must lie in [0, 1], got {value}"
            )));
        }
    }
    let status = if protected > 0.5 {
        EcoregionStatus::HalfProtected
    } else if protected + habitat > 0.5 {
        EcoregionStatus::CouldReachHalf
    } else if protected + habitat > 0.2 {
        EcoregionStatus::CouldRecover
    } else {
        EcoregionStatus::Imperilled
    };
    Ok(status)
}

/// Fraction by which current biodiversity loss in an ecoregion must fall.
pub fn ecoregion_reduction_target(status: EcoregionStatus) -> f64 {
    match status {
        EcoregionStatus::HalfProtected => 0.0,
        EcoregionStatus::CouldReachHalf => 0.10,
        EcoregionStatus::CouldRecover => 0.30,
        EcoregionStatus::Imperilled => 0.50,
    }
}

/// Biodiversity record of one ecoregion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcoregionRecord {
    pub unit_id: String,
    pub protected_fraction: f64,
    pub habitat_fraction: f64,
    /// Status as recorded in the source data, if any; cross-checked against
    /// the classification derived from the fractions.
    pub status: Option<EcoregionStatus>,
    /// Current biodiversity loss attributed to each country's final demand.
    pub country_loss: BTreeMap<String, f64>,
}

impl EcoregionRecord {
    /// Status derived from the stored fractions.
    pub fn derived_status(&self) -> Result<EcoregionStatus> {
        classify_ecoregion(self.protected_fraction, self.habitat_fraction)
    }

    /// Total current loss over all countries.
    pub fn total_loss(&self) -> f64 {
        self.country_loss.values().sum()
    }
}

/// Safe operating space of a whole ecoregion:
/// `(1 - reduction_target) * current total loss`.
pub fn ecoregion_unit_sos(rec: &EcoregionRecord) -> Result<f64> {
    if rec.country_loss.is_empty() {
        return Err(Error::IncompleteUnit {
            unit: rec.unit_id.clone(),
            detail: "no country loss data, cannot derive the unit total".into(),
        });
    }
    for (country, &loss) in &rec.country_loss {
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::InvalidPressure { entity: country.clone(), value: loss });
        }
    }
    let status = rec.derived_status()?;
    let target = ecoregion_reduction_target(status);
    Ok((1.0 - target) * rec.total_loss())
}

/// Per-country slices of an ecoregion's safe operating space, for every
/// entity covered by `shares`.
pub fn ecoregion_sos(
    rec: &EcoregionRecord,
    shares: &AllocationShares,
) -> Result<Vec<(String, f64)>> {
    let unit_sos = ecoregion_unit_sos(rec)?;
    Ok(shares
        .entities
        .iter()
        .zip(&shares.shares)
        .map(|(country, &share)| (country.clone(), share * unit_sos))
        .collect())
}

/// Grandfathering shares within an ecoregion: each country's share of the
/// current loss in this unit.
pub fn ecoregion_gf_shares(rec: &EcoregionRecord) -> Result<AllocationShares> {
    let mut entities = Vec::new();
    let mut weights = Vec::new();
    let mut total = 0.0;
    for (country, &loss) in &rec.country_loss {
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::InvalidPressure { entity: country.clone(), value: loss });
        }
        entities.push(country.clone());
        weights.push(loss);
        total += loss;
    }
    if entities.is_empty() || !(total > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "ecoregion {} has no positive country loss to grandfather",
            rec.unit_id
        )));
    }
    let shares = weights.into_iter().map(|w| w / total).collect();
    AllocationShares::new(Approach::Gf, entities, shares)
}

/// Evaluation of one country against one local unit under one approach.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSosResult {
    pub unit_id: String,
    pub country: String,
    pub approach: Approach,
    /// The country's allocated share of the unit's boundary.
    pub a_sos: f64,
    /// The country's actual pressure in the unit.
    pub actual: f64,
    pub abs_transgression: f64,
    /// `None` when the country has no footprint in the unit.
    pub rel_transgression: Option<f64>,
    pub band: TransgressionBand,
}

/// Combines allocation and transgression into one result row.
///
/// `unit_total` and `unit_lb` describe the unit as a whole (total pressure
/// and total boundary) and only influence the band.
pub fn evaluate_local_unit(
    unit_id: &str,
    country: &str,
    shares: &AllocationShares,
    lb: f64,
    unit_total: f64,
    unit_lb: f64,
    actual: f64,
) -> Result<LocalSosResult> {
    let a_sos = allocate_local_sos(lb, shares, country)?;
    let (rel, band) = transgression_rel(actual, a_sos, unit_total, unit_lb);
    Ok(LocalSosResult {
        unit_id: unit_id.to_owned(),
        country: country.to_owned(),
        approach: shares.approach,
        a_sos,
        actual,
        abs_transgression: transgression_abs(actual, a_sos),
        rel_transgression: rel,
        band,
    })
}
