//! Unit registry and explicit conversions.
//!
//! Extensions, budgets, and report tables use different magnitudes of the
//! same physical quantity (kt vs Gt of CO2, Mm3 vs km3 of water, pico vs
//! whole PDF.yr of biodiversity loss). All conversions go through
//! [`convert`], which refuses to cross dimensions, so a water number can
//! never silently become a carbon number and a CO2 number can never silently
//! become a CO2-equivalent number.

use crate::error::{Error, Result};

/// Physical dimension of a unit string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Water volumes.
    Volume,
    /// Carbon dioxide mass. Kept apart from [`Dimension::MassCo2Eq`] on
    /// purpose: converting between them requires an explicit GHG factor.
    MassCo2,
    /// Greenhouse-gas mass in CO2 equivalents.
    MassCo2Eq,
    /// Biodiversity loss as potentially disappeared fraction of species
    /// integrated over a year.
    BiodiversityLoss,
}

/// Returns the dimension and the factor to that dimension's base unit
/// (m3, t CO2, t CO2eq, PDF.yr), or `None` for an unknown unit string.
pub fn unit_info(unit: &str) -> Option<(Dimension, f64)> {
    let info = match unit {
        "m3" => (Dimension::Volume, 1.0),
        "Mm3" => (Dimension::Volume, 1e6),
        "km3" => (Dimension::Volume, 1e9),
        "t CO2" => (Dimension::MassCo2, 1.0),
        "kt CO2" => (Dimension::MassCo2, 1e3),
        "Mt CO2" => (Dimension::MassCo2, 1e6),
        "Gt CO2" => (Dimension::MassCo2, 1e9),
        "t CO2eq" => (Dimension::MassCo2Eq, 1.0),
        "kt CO2eq" => (Dimension::MassCo2Eq, 1e3),
        "Mt CO2eq" => (Dimension::MassCo2Eq, 1e6),
        "Gt CO2eq" => (Dimension::MassCo2Eq, 1e9),
        "PDF.yr" => (Dimension::BiodiversityLoss, 1.0),
        "pico PDF.yr" => (Dimension::BiodiversityLoss, 1e-12),
        _ => return None,
    };
    Some(info)
}

/// Converts `value` from one unit string to another within the same
/// dimension.
///
/// Unknown units and cross-dimension requests are configuration errors; the
/// caller is expected to have wired the units registry correctly.
pub fn convert(value: f64, from: &str, to: &str) -> Result<f64> {
    let (dim_from, factor_from) =
        unit_info(from).ok_or_else(|| Error::Config(format!("unknown unit '{from}'")))?;
    let (dim_to, factor_to) =
        unit_info(to).ok_or_else(|| Error::Config(format!("unknown unit '{to}'")))?;
    if dim_from != dim_to {
        return Err(Error::Config(format!(
            "cannot convert '{from}' to '{to}': different dimensions"
        )));
    }
    // Multiply before dividing: for the decimal factors in the registry this
    // keeps power-of-ten round trips (km3 -> m3 -> km3) exact.
    Ok(value * factor_from / factor_to)
}

/// Unit string for a per-capita quantity, e.g. `m3` becomes `m3/capita`.
pub fn per_capita_unit(unit: &str) -> String {
    format!("{unit}/capita")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_round_trip() {
        assert_eq!(convert(4000.0, "km3", "m3").unwrap(), 4e12);
        assert_eq!(convert(4e12, "m3", "km3").unwrap(), 4000.0);
        assert_eq!(convert(1.0, "km3", "Mm3").unwrap(), 1000.0);
    }

    #[test]
    fn mass_scaling() {
        assert_eq!(convert(6.7, "Gt CO2", "t CO2").unwrap(), 6.7e9);
        assert_eq!(convert(500.0, "kt CO2eq", "Mt CO2eq").unwrap(), 0.5);
    }

    #[test]
    fn pico_pdf() {
        use approx::assert_relative_eq;
        assert_relative_eq!(
            convert(2.0, "pico PDF.yr", "PDF.yr").unwrap(),
            2e-12,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            convert(1.48e-2, "PDF.yr", "pico PDF.yr").unwrap(),
            1.48e10,
            max_relative = 1e-15
        );
    }

    #[test]
    fn cross_dimension_is_rejected() {
        assert!(convert(1.0, "km3", "Gt CO2").is_err());
        // CO2 and CO2eq are deliberately incompatible without a GHG factor.
        assert!(convert(1.0, "Gt CO2", "Gt CO2eq").is_err());
        assert!(convert(1.0, "bogus", "m3").is_err());
    }
}
