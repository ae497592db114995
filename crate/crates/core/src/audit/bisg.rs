//! BISG race proxies: naive-Bayes combination of surname- and
//! geography-conditioned race distributions over prior base rates.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Key used when a queried entry is missing from a table.
const FALLBACK_KEY: &str = "unknown";

/// A lookup table of per-key race distributions, e.g. P(race | surname).
#[derive(Debug, Clone, PartialEq)]
pub struct RaceTable {
    /// Table label used in error messages ("surname", "geography", ...).
    pub name: String,
    /// Race category names, in header order.
    pub races: Vec<String>,
    rows: BTreeMap<String, Vec<f64>>,
}

impl RaceTable {
    /// Build a table, validating that every row is a distribution.
    pub fn new(
        name: impl Into<String>,
        races: Vec<String>,
        rows: BTreeMap<String, Vec<f64>>,
    ) -> Result<RaceTable> {
        let name = name.into();
        if races.is_empty() {
            return Err(Error::Schema(format!("{name} table lists no races")));
        }
        for (key, dist) in &rows {
            if dist.len() != races.len() {
                return Err(Error::Schema(format!(
                    "{name} table row '{key}' has {} values, expected {}",
                    dist.len(),
                    races.len()
                )));
            }
            if dist.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(Error::Schema(format!(
                    "{name} table row '{key}' has negative or non-finite entries"
                )));
            }
            let sum: f64 = dist.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Schema(format!(
                    "{name} table row '{key}' sums to {sum}, expected 1 within 1e-9"
                )));
            }
        }
        Ok(RaceTable { name, races, rows })
    }

    /// Parse from CSV text with header `key,race_1,...,race_k`.
    pub fn from_csv_str(name: impl Into<String>, text: &str) -> Result<RaceTable> {
        let name = name.into();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.len() < 2 || header.get(0) != Some("key") {
            return Err(Error::Schema(format!(
                "{name} table header must be key,race_1,...,race_k"
            )));
        }
        let races: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = BTreeMap::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != header.len() {
                return Err(Error::Schema(format!(
                    "{name} table row {idx} has {} fields, expected {}",
                    record.len(),
                    header.len()
                )));
            }
            let key = record.get(0).unwrap_or_default().to_string();
            let dist: Vec<f64> = record
                .iter()
                .skip(1)
                .enumerate()
                .map(|(col, tok)| {
                    tok.parse::<f64>().map_err(|_| Error::Parse {
                        row: idx,
                        column: races[col].clone(),
                        token: tok.to_string(),
                    })
                })
                .collect::<Result<_>>()?;
            if rows.insert(key.clone(), dist).is_some() {
                return Err(Error::Schema(format!(
                    "{name} table has duplicate key '{key}'"
                )));
            }
        }
        RaceTable::new(name, races, rows)
    }

    /// Load from a CSV file.
    pub fn from_file(name: impl Into<String>, path: &Path) -> Result<RaceTable> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        RaceTable::from_csv_str(name, &text)
    }

    /// The distribution for a key, falling back to the "unknown" row.
    pub fn lookup(&self, key: &str) -> Result<&Vec<f64>> {
        self.rows
            .get(key)
            .or_else(|| self.rows.get(FALLBACK_KEY))
            .ok_or_else(|| Error::Lookup {
                table: self.name.clone(),
                key: key.to_string(),
            })
    }
}

/// Posterior race distribution for one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceProxyPosterior {
    pub probabilities: BTreeMap<String, f64>,
}

/// Naive-Bayes posterior: P(r | surname, geo) proportional to
/// P(r | surname) * P(r | geo) / P(r), normalized over races.
pub fn bisg_proxy(
    surname_table: &RaceTable,
    geo_table: &RaceTable,
    base_rates: &BTreeMap<String, f64>,
    surname: &str,
    geography: &str,
) -> Result<RaceProxyPosterior> {
    if surname_table.races != geo_table.races {
        return Err(Error::Argument(
            "surname and geography tables list different races".into(),
        ));
    }
    let races = &surname_table.races;
    let base: Vec<f64> = races
        .iter()
        .map(|r| {
            base_rates
                .get(r)
                .copied()
                .filter(|p| *p > 0.0 && p.is_finite())
                .ok_or_else(|| {
                    Error::Argument(format!(
                        "base rates must include a positive entry for race '{r}'"
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let s = surname_table.lookup(surname)?;
    let g = geo_table.lookup(geography)?;
    let unnormalized: Vec<f64> = (0..races.len())
        .map(|k| s[k] * g[k] / base[k])
        .collect();
    let total: f64 = unnormalized.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::DegenerateEvidence);
    }
    let probabilities = races
        .iter()
        .cloned()
        .zip(unnormalized.into_iter().map(|p| p / total))
        .collect();
    Ok(RaceProxyPosterior { probabilities })
}
