//! Environmentally extended multi-regional input-output accounting.
//!
//! A table couples `n` regions with `m` sectors each (`nm = n * m` industry
//! rows, region-major order). From the transaction matrix `Z`, final demand
//! `Y`, and gross output `x` the module derives:
//!
//! * technical coefficients `A = Z * diag(x)^-1`;
//! * the Leontief inverse `L = (I - A)^-1`, solved through one LU
//!   factorisation and verified against an explicit residual bound;
//! * per-unit-output pressure intensities `q = f * diag(x)^-1` for each
//!   environmental extension;
//! * country-to-country embodied flows `E = Q L Y`, where row `r` of `Q`
//!   holds country `r`'s intensities and zeros elsewhere, and from `E` the
//!   production-based (`PBA`, row sums) and consumption-based (`CBA`, column
//!   sums) accounts, both including direct household pressure.
//!
//! Everything is dense; the table sizes this crate targets (up to a few
//! thousand industry rows) fit comfortably in memory.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Default relative tolerance on the row balance
/// `x_i = sum_j Z_ij + sum_r Y_ir`.
pub const DEFAULT_BALANCE_TOL: f64 = 1e-6;

/// Bound on `max |(I - A) L - I|` accepted from the linear solver.
pub const LEONTIEF_RESIDUAL_TOL: f64 = 1e-9;

/// Relative tolerance on conservation identities between accounts.
pub const CONSERVATION_TOL: f64 = 1e-9;

/// A validated multi-regional input-output table.
///
/// Industry rows are indexed region-major: row `r * m + s` is sector `s` of
/// region `r`. `Z` and `x` must be non-negative; `Y` may contain negative
/// entries (inventory drawdowns) as long as every row still balances.
#[derive(Debug, Clone, PartialEq)]
pub struct MrioTable {
    regions: Vec<String>,
    sectors: Vec<String>,
    z: DMatrix<f64>,
    y: DMatrix<f64>,
    x: DVector<f64>,
}

impl MrioTable {
    /// Validates and assembles a table with the default balance tolerance.
    pub fn new(
        regions: Vec<String>,
        sectors: Vec<String>,
        z: DMatrix<f64>,
        y: DMatrix<f64>,
        x: DVector<f64>,
    ) -> Result<Self> {
        Self::with_balance_tol(regions, sectors, z, y, x, DEFAULT_BALANCE_TOL)
    }

    /// Validates and assembles a table, balancing rows within `balance_tol`
    /// relative to `max(1, |x_i|)`.
    pub fn with_balance_tol(
        regions: Vec<String>,
        sectors: Vec<String>,
        z: DMatrix<f64>,
        y: DMatrix<f64>,
        x: DVector<f64>,
        balance_tol: f64,
    ) -> Result<Self> {
        if regions.is_empty() || sectors.is_empty() {
            return Err(Error::Dimension("need at least one region and one sector".into()));
        }
        for (kind, labels) in [("region", &regions), ("sector", &sectors)] {
            for (i, label) in labels.iter().enumerate() {
                if labels[..i].contains(label) {
                    return Err(Error::LabelMismatch(format!("duplicate {kind} label '{label}'")));
                }
            }
        }
        let n = regions.len();
        let nm = n * sectors.len();
        if z.nrows() != nm || z.ncols() != nm {
            return Err(Error::Dimension(format!(
                "Z is {}x{}, expected {nm}x{nm}",
                z.nrows(),
                z.ncols()
            )));
        }
        if y.nrows() != nm || y.ncols() != n {
            return Err(Error::Dimension(format!(
                "Y is {}x{}, expected {nm}x{n}",
                y.nrows(),
                y.ncols()
            )));
        }
        if x.len() != nm {
            return Err(Error::Dimension(format!("x has {} entries, expected {nm}", x.len())));
        }
        for &v in z.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "Z entries must be finite and >= 0, found {v}"
                )));
            }
        }
        for &v in x.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "x entries must be finite and >= 0, found {v}"
                )));
            }
        }
        for &v in y.iter() {
            if !v.is_finite() {
                return Err(Error::InvalidInput("Y entries must be finite".into()));
            }
        }

        let table = MrioTable { regions, sectors, z, y, x };
        table.check_balance(balance_tol)?;
        Ok(table)
    }

    fn check_balance(&self, tol: f64) -> Result<()> {
        let mut worst: Option<(usize, f64, f64)> = None;
        for i in 0..self.dim() {
            let supply = compensated_sum(self.z.row(i).iter().copied())
                + compensated_sum(self.y.row(i).iter().copied());
            let deviation = (self.x[i] - supply).abs();
            let allowed = tol * self.x[i].abs().max(1.0);
            if deviation > allowed {
                let relative = deviation / self.x[i].abs().max(1.0);
                if worst.map_or(true, |(_, _, w)| relative > w) {
                    worst = Some((i, deviation, relative));
                }
            }
        }
        if let Some((i, deviation, _)) = worst {
            return Err(Error::Balance(format!(
                "row {} ({}) is off by {deviation:.6e} (x = {}, tolerance {tol:e} relative)",
                i,
                self.row_label(i),
                self.x[i]
            )));
        }
        Ok(())
    }

    /// Number of regions `n`.
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// Number of sectors per region `m`.
    pub fn n_sectors(&self) -> usize {
        self.sectors.len()
    }

    /// Number of industry rows `nm`.
    pub fn dim(&self) -> usize {
        self.regions.len() * self.sectors.len()
    }

    /// Row index of a (region, sector) pair.
    pub fn index_of(&self, region: usize, sector: usize) -> usize {
        region * self.sectors.len() + sector
    }

    /// Region index owning an industry row.
    pub fn region_of(&self, index: usize) -> usize {
        index / self.sectors.len()
    }

    /// Human-readable `region:sector` label of an industry row.
    pub fn row_label(&self, index: usize) -> String {
        format!(
            "{}:{}",
            self.regions[self.region_of(index)],
            self.sectors[index % self.sectors.len()]
        )
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn sectors(&self) -> &[String] {
        &self.sectors
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }
}

/// One environmental extension of a table: direct pressure per industry row
/// plus direct household pressure per region.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionAccount {
    pub name: String,
    pub unit: String,
    /// Pressure of each industry row (`f`, length `nm`).
    pub industry: DVector<f64>,
    /// Direct pressure of each region's households (`f_hh`, length `n`).
    pub household: DVector<f64>,
}

impl ExtensionAccount {
    /// Checks that the extension fits the table and every entry is finite.
    pub fn validate_for(&self, table: &MrioTable) -> Result<()> {
        if self.industry.len() != table.dim() {
            return Err(Error::Dimension(format!(
                "extension '{}' has {} industry entries, table has {} rows",
                self.name,
                self.industry.len(),
                table.dim()
            )));
        }
        if self.household.len() != table.n_regions() {
            return Err(Error::Dimension(format!(
                "extension '{}' has {} household entries, table has {} regions",
                self.name,
                self.household.len(),
                table.n_regions()
            )));
        }
        for &v in self.industry.iter().chain(self.household.iter()) {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "extension '{}' contains a non-finite entry",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Technical coefficients `A_ij = Z_ij / x_j`.
///
/// Columns of sectors with zero gross output are set to zero: such a sector
/// produces nothing, so no meaningful input recipe exists for it.
pub fn technical_coefficients(table: &MrioTable) -> DMatrix<f64> {
    let nm = table.dim();
    let mut a = DMatrix::zeros(nm, nm);
    for j in 0..nm {
        let xj = table.x[j];
        if xj > 0.0 {
            for i in 0..nm {
                a[(i, j)] = table.z[(i, j)] / xj;
            }
        }
    }
    a
}

/// Leontief inverse `L = (I - A)^-1` through one LU factorisation.
///
/// The result is verified two ways before it is returned: the residual
/// `max |(I - A) L - I|` must stay below [`LEONTIEF_RESIDUAL_TOL`], and `L`
/// must be (numerically) non-negative — for a non-negative `A` a negative
/// entry in the inverse is exactly the signature of a non-productive
/// economy, i.e. a spectral radius at or above one.
pub fn leontief_inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "technology matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    for &v in a.iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "technical coefficients must be finite and >= 0, found {v}"
            )));
        }
    }
    let nm = a.nrows();
    let identity = DMatrix::<f64>::identity(nm, nm);
    let i_minus_a = &identity - a;
    let lu = i_minus_a.clone().lu();
    let l = lu
        .solve(&identity)
        .ok_or_else(|| Error::NonProductive(heavy_columns_note(a, "the system is singular")))?;

    let residual = (&i_minus_a * &l - &identity).amax();
    if residual > LEONTIEF_RESIDUAL_TOL {
        return Err(Error::NonProductive(heavy_columns_note(
            a,
            &format!("solver residual {residual:.3e} exceeds {LEONTIEF_RESIDUAL_TOL:e}"),
        )));
    }
    let min_entry = l.min();
    if min_entry < -LEONTIEF_RESIDUAL_TOL {
        return Err(Error::NonProductive(heavy_columns_note(
            a,
            &format!("inverse contains negative entries (min {min_entry:.3e})"),
        )));
    }
    Ok(l)
}

/// Diagnostic listing the columns whose input coefficients sum to >= 1.
fn heavy_columns_note(a: &DMatrix<f64>, cause: &str) -> String {
    let heavy: Vec<String> = (0..a.ncols())
        .filter_map(|j| {
            let sum: f64 = a.column(j).iter().sum();
            (sum >= 1.0).then(|| format!("column {j} sums to {sum:.6}"))
        })
        .collect();
    if heavy.is_empty() {
        format!("{cause}; no single column sum reaches 1")
    } else {
        format!("{cause}; {}", heavy.join(", "))
    }
}

/// Direct pressure intensities `q_j = f_j / x_j` (zero where `x_j` is zero).
pub fn direct_intensities(table: &MrioTable, ext: &ExtensionAccount) -> Result<DVector<f64>> {
    ext.validate_for(table)?;
    let mut q = DVector::zeros(table.dim());
    for j in 0..table.dim() {
        if table.x[j] > 0.0 {
            q[j] = ext.industry[j] / table.x[j];
        }
    }
    Ok(q)
}

/// Footprint accounts of one extension on one table.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintAccounts {
    pub extension: String,
    pub unit: String,
    pub regions: Vec<String>,
    /// Country-to-country embodied flows `E = Q L Y`: pressure exerted in
    /// the row country to satisfy final demand of the column country.
    pub e: DMatrix<f64>,
    /// Production-based account per region: row sums of `E` plus households.
    pub pba: DVector<f64>,
    /// Consumption-based account per region: column sums of `E` plus
    /// households.
    pub cba: DVector<f64>,
    /// Direct pressure per industry row (production view).
    pub sectoral_pba: DVector<f64>,
    /// Embodied pressure per final product: `(q L) ∘ (Y i)`.
    pub sectoral_cba: DVector<f64>,
}

/// Computes the full set of accounts for one extension, reusing an already
/// verified Leontief inverse.
pub fn footprint_accounts(
    table: &MrioTable,
    leontief: &DMatrix<f64>,
    ext: &ExtensionAccount,
) -> Result<FootprintAccounts> {
    let nm = table.dim();
    let n = table.n_regions();
    if leontief.nrows() != nm || leontief.ncols() != nm {
        return Err(Error::Dimension(format!(
            "Leontief inverse is {}x{}, table has {nm} rows",
            leontief.nrows(),
            leontief.ncols()
        )));
    }
    let q = direct_intensities(table, ext)?;

    // Stacked intensity rows: row r of Q carries country r's intensities.
    let q_stacked = DMatrix::from_fn(n, nm, |r, i| if table.region_of(i) == r { q[i] } else { 0.0 });
    let ly = leontief * &table.y;
    let e = &q_stacked * &ly;

    let mut pba = DVector::zeros(n);
    let mut cba = DVector::zeros(n);
    for r in 0..n {
        pba[r] = compensated_sum(e.row(r).iter().copied()) + ext.household[r];
        cba[r] = compensated_sum(e.column(r).iter().copied()) + ext.household[r];
    }

    // Per final product: supply-chain multipliers times total final demand.
    let multipliers = leontief.transpose() * &q;
    let mut sectoral_cba = DVector::zeros(nm);
    for j in 0..nm {
        let y_total = compensated_sum(table.y.row(j).iter().copied());
        sectoral_cba[j] = multipliers[j] * y_total;
    }

    let accounts = FootprintAccounts {
        extension: ext.name.clone(),
        unit: ext.unit.clone(),
        regions: table.regions.clone(),
        e,
        pba,
        cba,
        sectoral_pba: ext.industry.clone(),
        sectoral_cba,
    };

    // Both totals equal sum(E) + sum(f_hh) by construction; a deviation
    // would be a bug, not a data problem.
    let total_pba = compensated_sum(accounts.pba.iter().copied());
    let total_cba = compensated_sum(accounts.cba.iter().copied());
    let scale = total_pba.abs().max(total_cba.abs()).max(1.0);
    if (total_pba - total_cba).abs() > CONSERVATION_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "internal conservation failure for extension '{}': PBA total {total_pba} vs CBA \
             total {total_cba}",
            ext.name
        )));
    }
    Ok(accounts)
}

/// Builds `A` and `L` once and derives the accounts of every extension from
/// the same factorisation.
pub fn compute_accounts(
    table: &MrioTable,
    extensions: &[ExtensionAccount],
) -> Result<Vec<FootprintAccounts>> {
    let a = technical_coefficients(table);
    let l = leontief_inverse(&a)?;
    extensions.iter().map(|ext| footprint_accounts(table, &l, ext)).collect()
}

/// Divides totals by populations. Zero population with a zero value yields
/// zero; zero population with a nonzero value is a degenerate entity.
pub fn per_capita(values: &[f64], population: &[f64]) -> Result<Vec<f64>> {
    if values.len() != population.len() {
        return Err(Error::Dimension(format!(
            "{} values but {} populations",
            values.len(),
            population.len()
        )));
    }
    values
        .iter()
        .zip(population)
        .enumerate()
        .map(|(i, (&v, &pop))| {
            if !pop.is_finite() || pop < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "population at index {i} is {pop}; must be finite and >= 0"
                )));
            }
            if pop == 0.0 {
                if v == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::DegenerateEntity {
                        entity: format!("index {i}"),
                        detail: format!("nonzero value {v} with zero population"),
                    })
                }
            } else {
                Ok(v / pop)
            }
        })
        .collect()
}

/// Which average a normalised comparison divides by.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonMode {
    /// Global per-capita average: total value over total population.
    GlobalPopulationWeighted,
    /// Unweighted mean of the per-capita values (each country counts once).
    CountryMean,
    /// Unweighted mean over a subset of entities (e.g. one continent).
    SubsetMean(Vec<usize>),
}

/// Divides per-capita values by the average selected by `mode`, yielding
/// "times the average" ratios.
pub fn normalized_comparison(
    per_capita: &[f64],
    population: &[f64],
    mode: &ComparisonMode,
) -> Result<Vec<f64>> {
    if per_capita.len() != population.len() {
        return Err(Error::Dimension(format!(
            "{} per-capita values but {} populations",
            per_capita.len(),
            population.len()
        )));
    }
    if per_capita.is_empty() {
        return Err(Error::DegenerateInput("no entities to compare".into()));
    }
    let average = match mode {
        ComparisonMode::GlobalPopulationWeighted => {
            let total_pop = compensated_sum(population.iter().copied());
            if !(total_pop > 0.0) {
                return Err(Error::DegenerateInput("total population is zero".into()));
            }
            compensated_sum(per_capita.iter().zip(population).map(|(&v, &p)| v * p)) / total_pop
        }
        ComparisonMode::CountryMean => {
            compensated_sum(per_capita.iter().copied()) / per_capita.len() as f64
        }
        ComparisonMode::SubsetMean(indices) => {
            if indices.is_empty() {
                return Err(Error::Config("subset for a normalised comparison is empty".into()));
            }
            for &i in indices {
                if i >= per_capita.len() {
                    return Err(Error::Config(format!(
                        "subset index {i} out of range ({} entities)",
                        per_capita.len()
                    )));
                }
            }
            compensated_sum(indices.iter().map(|&i| per_capita[i])) / indices.len() as f64
        }
    };
    if average == 0.0 {
        return Err(Error::DegenerateInput(
            "average per-capita value is zero; ratios are undefined".into(),
        ));
    }
    Ok(per_capita.iter().map(|&v| v / average).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// 2 regions x 1 sector table with round numbers throughout:
    /// A = [[0.1, 0.2], [0.3, 0.1]], x = [100, 200].
    fn two_region_table() -> MrioTable {
        let z = DMatrix::from_row_slice(2, 2, &[10.0, 40.0, 30.0, 20.0]);
        let y = DMatrix::from_row_slice(2, 2, &[40.0, 10.0, 30.0, 120.0]);
        let x = DVector::from_vec(vec![100.0, 200.0]);
        MrioTable::new(vec!["AA".into(), "BB".into()], vec!["ind".into()], z, y, x).unwrap()
    }

    fn two_region_extension() -> ExtensionAccount {
        ExtensionAccount {
            name: "press".into(),
            unit: "kt CO2".into(),
            industry: DVector::from_vec(vec![20.0, 30.0]),
            household: DVector::from_vec(vec![1.0, 2.0]),
        }
    }

    #[test]
    fn technical_coefficients_hand_example() {
        // Z = [[10, 20], [30, 0]], x = [100, 200] => A = [[0.1, 0.1], [0.3, 0]].
        let z = DMatrix::from_row_slice(2, 2, &[10.0, 20.0, 30.0, 0.0]);
        let y = DMatrix::from_row_slice(2, 2, &[30.0, 40.0, 100.0, 70.0]);
        let x = DVector::from_vec(vec![100.0, 200.0]);
        let table =
            MrioTable::new(vec!["A".into(), "B".into()], vec!["s".into()], z, y, x).unwrap();
        let a = technical_coefficients(&table);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.1, 0.1, 0.3, 0.0]));
    }

    #[test]
    fn zero_output_sector_gets_zero_column_and_intensity() {
        // Sector B:s buys 20 of inputs but produces nothing and sells
        // nothing; its coefficient column and intensity are zeroed.
        let z = DMatrix::from_row_slice(2, 2, &[10.0, 20.0, 0.0, 0.0]);
        let y = DMatrix::from_row_slice(2, 2, &[40.0, 30.0, 0.0, 0.0]);
        let x = DVector::from_vec(vec![100.0, 0.0]);
        let table =
            MrioTable::new(vec!["A".into(), "B".into()], vec!["s".into()], z, y, x).unwrap();
        let a = technical_coefficients(&table);
        assert_eq!(a.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        assert_eq!(a[(0, 0)], 0.1);
        let ext = ExtensionAccount {
            name: "p".into(),
            unit: "m3".into(),
            industry: DVector::from_vec(vec![5.0, 3.0]),
            household: DVector::from_vec(vec![0.0, 0.0]),
        };
        let q = direct_intensities(&table, &ext).unwrap();
        assert_eq!(q[1], 0.0);
        assert_eq!(q[0], 0.05);
    }

    #[test]
    fn single_sector_leontief_closed_form() {
        // a = 0.4 => L = 1 / 0.6.
        let a = DMatrix::from_row_slice(1, 1, &[0.4]);
        let l = leontief_inverse(&a).unwrap();
        assert_relative_eq!(l[(0, 0)], 1.0 / 0.6, max_relative = 1e-14);
    }

    #[test]
    fn leontief_matches_truncated_power_series() {
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.3, 0.1]);
        let l = leontief_inverse(&a).unwrap();
        // sum_k A^k until terms vanish.
        let mut series = DMatrix::<f64>::identity(2, 2);
        let mut term = DMatrix::<f64>::identity(2, 2);
        for _ in 0..200 {
            term = &term * &a;
            series += &term;
            if term.amax() < 1e-16 {
                break;
            }
        }
        assert_relative_eq!(l[(0, 0)], series[(0, 0)], max_relative = 1e-12);
        assert_relative_eq!(l[(0, 1)], series[(0, 1)], max_relative = 1e-12);
        assert_relative_eq!(l[(1, 0)], series[(1, 0)], max_relative = 1e-12);
        assert_relative_eq!(l[(1, 1)], series[(1, 1)], max_relative = 1e-12);
    }

    #[test]
    fn leontief_residual_is_tiny() {
        let table = two_region_table();
        let a = technical_coefficients(&table);
        let l = leontief_inverse(&a).unwrap();
        let identity = DMatrix::<f64>::identity(2, 2);
        let residual = ((identity.clone() - &a) * &l - identity).amax();
        assert!(residual <= LEONTIEF_RESIDUAL_TOL);
    }

    #[test]
    fn non_productive_economy_is_rejected_with_column_diagnostic() {
        // Column sums 1.2: the series diverges.
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.6, 0.6, 0.6]);
        match leontief_inverse(&a) {
            Err(Error::NonProductive(msg)) => {
                assert!(msg.contains("column 0"), "diagnostic should name columns: {msg}");
            }
            other => panic!("expected NonProductive, got {other:?}"),
        }
    }

    #[test]
    fn footprint_accounts_hand_example() {
        // L = [[1.2, 4/15], [0.4, 1.2]], q = [0.2, 0.15];
        // E = [[11.2, 8.8], [7.8, 22.2]] worked out by hand.
        let table = two_region_table();
        let accounts = compute_accounts(&table, &[two_region_extension()]).unwrap();
        let acc = &accounts[0];
        assert_relative_eq!(acc.e[(0, 0)], 11.2, max_relative = 1e-12);
        assert_relative_eq!(acc.e[(0, 1)], 8.8, max_relative = 1e-12);
        assert_relative_eq!(acc.e[(1, 0)], 7.8, max_relative = 1e-12);
        assert_relative_eq!(acc.e[(1, 1)], 22.2, max_relative = 1e-12);
        assert_relative_eq!(acc.pba[0], 21.0, max_relative = 1e-12);
        assert_relative_eq!(acc.pba[1], 32.0, max_relative = 1e-12);
        assert_relative_eq!(acc.cba[0], 20.0, max_relative = 1e-12);
        assert_relative_eq!(acc.cba[1], 33.0, max_relative = 1e-12);
        // Sectoral views: direct pressure and embodied-in-final-products.
        assert_eq!(acc.sectoral_pba.as_slice(), &[20.0, 30.0]);
        assert_relative_eq!(acc.sectoral_cba[0], 15.0, max_relative = 1e-12);
        assert_relative_eq!(acc.sectoral_cba[1], 35.0, max_relative = 1e-12);
    }

    #[test]
    fn conservation_on_a_balanced_table() {
        let table = two_region_table();
        let ext = two_region_extension();
        let acc = &compute_accounts(&table, &[ext.clone()]).unwrap()[0];
        let total_direct = ext.industry.sum() + ext.household.sum();
        assert_relative_eq!(acc.pba.sum(), total_direct, max_relative = CONSERVATION_TOL);
        assert_relative_eq!(acc.cba.sum(), total_direct, max_relative = CONSERVATION_TOL);
        assert_relative_eq!(
            acc.sectoral_cba.sum() + ext.household.sum(),
            total_direct,
            max_relative = CONSERVATION_TOL
        );
    }

    #[test]
    fn autarky_makes_pba_equal_cba() {
        // No trade: Z block-diagonal, Y diagonal.
        let z = DMatrix::from_row_slice(2, 2, &[20.0, 0.0, 0.0, 50.0]);
        let y = DMatrix::from_row_slice(2, 2, &[80.0, 0.0, 0.0, 150.0]);
        let x = DVector::from_vec(vec![100.0, 200.0]);
        let table =
            MrioTable::new(vec!["A".into(), "B".into()], vec!["s".into()], z, y, x).unwrap();
        let acc = &compute_accounts(&table, &[two_region_extension()]).unwrap()[0];
        assert_relative_eq!(acc.pba[0], acc.cba[0], max_relative = 1e-12);
        assert_relative_eq!(acc.pba[1], acc.cba[1], max_relative = 1e-12);
        assert_eq!(acc.e[(0, 1)], 0.0);
        assert_eq!(acc.e[(1, 0)], 0.0);
    }

    #[test]
    fn accounts_scale_linearly_with_pressure() {
        let table = two_region_table();
        let ext = two_region_extension();
        let mut scaled = ext.clone();
        scaled.industry *= 3.0;
        scaled.household *= 3.0;
        let accounts = compute_accounts(&table, &[ext, scaled]).unwrap();
        for r in 0..2 {
            assert_relative_eq!(
                accounts[1].pba[r],
                3.0 * accounts[0].pba[r],
                max_relative = 1e-12
            );
            assert_relative_eq!(
                accounts[1].cba[r],
                3.0 * accounts[0].cba[r],
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn table_validation_rejects_bad_shapes_and_values() {
        let z = DMatrix::from_row_slice(2, 2, &[10.0, 40.0, 30.0, 20.0]);
        let y = DMatrix::from_row_slice(2, 2, &[40.0, 10.0, 30.0, 120.0]);
        let x = DVector::from_vec(vec![100.0, 200.0]);
        // Wrong Y shape.
        assert!(matches!(
            MrioTable::new(
                vec!["A".into(), "B".into()],
                vec!["s".into()],
                z.clone(),
                DMatrix::zeros(3, 2),
                x.clone()
            ),
            Err(Error::Dimension(_))
        ));
        // Negative Z.
        let mut z_neg = z.clone();
        z_neg[(0, 0)] = -1.0;
        assert!(matches!(
            MrioTable::new(
                vec!["A".into(), "B".into()],
                vec!["s".into()],
                z_neg,
                y.clone(),
                x.clone()
            ),
            Err(Error::InvalidInput(_))
        ));
        // Imbalanced row.
        let mut y_bad = y.clone();
        y_bad[(0, 0)] = 45.0;
        assert!(matches!(
            MrioTable::new(vec!["A".into(), "B".into()], vec!["s".into()], z.clone(), y_bad, x.clone()),
            Err(Error::Balance(_))
        ));
        // Duplicate labels.
        assert!(matches!(
            MrioTable::new(vec!["A".into(), "A".into()], vec!["s".into()], z, y, x),
            Err(Error::LabelMismatch(_))
        ));
    }

    #[test]
    fn negative_final_demand_is_accepted_when_balanced() {
        // Inventory drawdown in Y, rows still balance.
        let z = DMatrix::from_row_slice(2, 2, &[10.0, 40.0, 30.0, 20.0]);
        let y = DMatrix::from_row_slice(2, 2, &[60.0, -10.0, 30.0, 120.0]);
        let x = DVector::from_vec(vec![100.0, 200.0]);
        assert!(MrioTable::new(vec!["A".into(), "B".into()], vec!["s".into()], z, y, x).is_ok());
    }

    #[test]
    fn per_capita_example() {
        // 43 Gt over 7.7 billion people is about 5.58 t per person.
        let result = per_capita(&[43e9], &[7.7e9]).unwrap();
        assert!((result[0] - 5.58).abs() < 0.005);
        assert_eq!(per_capita(&[0.0], &[0.0]).unwrap(), vec![0.0]);
        assert!(matches!(
            per_capita(&[1.0], &[0.0]),
            Err(Error::DegenerateEntity { .. })
        ));
        assert!(per_capita(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn normalized_comparison_modes() {
        let pc = [2.0, 4.0];
        // Unweighted mean is 3.
        let country = normalized_comparison(&pc, &[1.0, 1.0], &ComparisonMode::CountryMean).unwrap();
        assert_relative_eq!(country[0], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(country[1], 4.0 / 3.0, max_relative = 1e-14);
        // Population-weighted mean with populations {1, 3} is 3.5.
        let weighted =
            normalized_comparison(&pc, &[1.0, 3.0], &ComparisonMode::GlobalPopulationWeighted)
                .unwrap();
        assert_relative_eq!(weighted[0], 2.0 / 3.5, max_relative = 1e-14);
        assert_relative_eq!(weighted[1], 4.0 / 3.5, max_relative = 1e-14);
        // Subset containing only the first entity.
        let subset =
            normalized_comparison(&pc, &[1.0, 3.0], &ComparisonMode::SubsetMean(vec![0])).unwrap();
        assert_relative_eq!(subset[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(subset[1], 2.0, max_relative = 1e-14);
        // Errors.
        assert!(normalized_comparison(&pc, &[1.0, 3.0], &ComparisonMode::SubsetMean(vec![])).is_err());
        assert!(normalized_comparison(&pc, &[1.0, 3.0], &ComparisonMode::SubsetMean(vec![7])).is_err());
        assert!(normalized_comparison(&[0.0], &[0.0], &ComparisonMode::GlobalPopulationWeighted)
            .is_err());
    }
}
