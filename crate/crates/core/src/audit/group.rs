//! Group-fairness metrics: per-group rates with RMS and max gap
//! aggregation against a reference group.

use crate::data::Dataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Row-aligned group labels for one protected attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupVector {
    /// Attribute name echoed into reports.
    pub name: String,
    /// One group label per row.
    pub members: Vec<String>,
}

impl GroupVector {
    pub fn new(name: impl Into<String>, members: Vec<String>) -> Self {
        GroupVector {
            name: name.into(),
            members,
        }
    }

    /// Decode a protected column of a dataset into group labels.
    pub fn from_dataset(data: &Dataset, protected: &str) -> Result<GroupVector> {
        let codes = data.group_codes(protected)?;
        let members = codes
            .iter()
            .map(|&c| data.group_category(protected, c).map(str::to_string))
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupVector {
            name: protected.to_string(),
            members,
        })
    }
}

/// Per-group metric values with gaps aggregated against the largest group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupReport {
    pub metric_name: String,
    /// Component names; rate metrics have one, equal odds has TPR and FPR.
    pub components: Vec<String>,
    /// One value per component for each observed group.
    pub per_group_values: BTreeMap<String, Vec<f64>>,
    /// Reference group: largest support, ties to the first in sorted order.
    pub reference: String,
    /// Root mean square of all (group, component) deltas vs the reference.
    pub gap_rms: f64,
    /// Largest absolute delta vs the reference.
    pub gap_max: f64,
    pub support: BTreeMap<String, usize>,
}

/// Observed groups in sorted order with row indices and supports.
fn partition(groups: &GroupVector) -> BTreeMap<String, Vec<usize>> {
    let mut map: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.members.iter().enumerate() {
        map.entry(g.clone()).or_default().push(i);
    }
    map
}

fn check_binary(values: &[u8], what: &str) -> Result<()> {
    if values.iter().any(|&v| v > 1) {
        return Err(Error::Argument(format!("{what} must be 0/1 valued")));
    }
    Ok(())
}

/// Fraction of `rows` where `flags` is 1; None when no rows qualify.
fn rate(flags: &[u8], rows: &[usize]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let hits = rows.iter().filter(|&&i| flags[i] == 1).count();
    Some(hits as f64 / rows.len() as f64)
}

/// Assemble a report from per-group component values.
fn aggregate(
    metric_name: &str,
    components: Vec<String>,
    values: BTreeMap<String, Vec<f64>>,
    support: BTreeMap<String, usize>,
) -> Result<GroupReport> {
    if values.len() < 2 {
        return Err(Error::Metric(format!(
            "{metric_name} needs at least two groups, found {}",
            values.len()
        )));
    }
    let reference = support
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(g, _)| g.clone())
        .expect("non-empty support");
    let ref_values = values[&reference].clone();
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut gap_max = 0.0f64;
    for (group, vals) in &values {
        if group == &reference {
            continue;
        }
        for (v, r) in vals.iter().zip(&ref_values) {
            let delta = v - r;
            sum_sq += delta * delta;
            count += 1;
            gap_max = gap_max.max(delta.abs());
        }
    }
    Ok(GroupReport {
        metric_name: metric_name.to_string(),
        components,
        per_group_values: values,
        reference,
        gap_rms: (sum_sq / count as f64).sqrt(),
        gap_max,
        support,
    })
}

/// Per-group positive-decision rates and their gaps.
pub fn demographic_parity(decisions: &[u8], groups: &GroupVector) -> Result<GroupReport> {
    check_lengths(decisions.len(), groups)?;
    check_binary(decisions, "decisions")?;
    let parts = partition(groups);
    let mut values = BTreeMap::new();
    let mut support = BTreeMap::new();
    for (g, rows) in &parts {
        let r = rate(decisions, rows).expect("partition rows are non-empty");
        values.insert(g.clone(), vec![r]);
        support.insert(g.clone(), rows.len());
    }
    aggregate(
        "demographic-parity",
        vec!["acceptance-rate".into()],
        values,
        support,
    )
}

/// Per-group true- and false-positive rates and their gaps.
pub fn equal_odds(decisions: &[u8], labels: &[u8], groups: &GroupVector) -> Result<GroupReport> {
    check_lengths(decisions.len(), groups)?;
    check_lengths(labels.len(), groups)?;
    check_binary(decisions, "decisions")?;
    check_binary(labels, "labels")?;
    let parts = partition(groups);
    let mut values = BTreeMap::new();
    let mut support = BTreeMap::new();
    for (g, rows) in &parts {
        let pos: Vec<usize> = rows.iter().cloned().filter(|&i| labels[i] == 1).collect();
        let neg: Vec<usize> = rows.iter().cloned().filter(|&i| labels[i] == 0).collect();
        let tpr = rate(decisions, &pos).ok_or_else(|| {
            Error::Metric(format!("empty cell (label=1, {}={g})", groups.name))
        })?;
        let fpr = rate(decisions, &neg).ok_or_else(|| {
            Error::Metric(format!("empty cell (label=0, {}={g})", groups.name))
        })?;
        values.insert(g.clone(), vec![tpr, fpr]);
        support.insert(g.clone(), rows.len());
    }
    aggregate("equal-odds", vec!["TPR".into(), "FPR".into()], values, support)
}

/// Per-group true-positive rates (recall among the qualified) and gaps.
pub fn equal_opportunity(
    decisions: &[u8],
    labels: &[u8],
    groups: &GroupVector,
) -> Result<GroupReport> {
    check_lengths(decisions.len(), groups)?;
    check_lengths(labels.len(), groups)?;
    check_binary(decisions, "decisions")?;
    check_binary(labels, "labels")?;
    let parts = partition(groups);
    let mut values = BTreeMap::new();
    let mut support = BTreeMap::new();
    for (g, rows) in &parts {
        let pos: Vec<usize> = rows.iter().cloned().filter(|&i| labels[i] == 1).collect();
        let tpr = rate(decisions, &pos).ok_or_else(|| {
            Error::Metric(format!("no positives in group {}={g}", groups.name))
        })?;
        values.insert(g.clone(), vec![tpr]);
        support.insert(g.clone(), rows.len());
    }
    aggregate("equal-opportunity", vec!["TPR".into()], values, support)
}

/// Per-group positive and negative predictive values and their gaps.
pub fn prediction_rate_parity(
    decisions: &[u8],
    labels: &[u8],
    groups: &GroupVector,
) -> Result<GroupReport> {
    check_lengths(decisions.len(), groups)?;
    check_lengths(labels.len(), groups)?;
    check_binary(decisions, "decisions")?;
    check_binary(labels, "labels")?;
    let parts = partition(groups);
    let mut values = BTreeMap::new();
    let mut support = BTreeMap::new();
    for (g, rows) in &parts {
        let pred_pos: Vec<usize> = rows.iter().cloned().filter(|&i| decisions[i] == 1).collect();
        let pred_neg: Vec<usize> = rows.iter().cloned().filter(|&i| decisions[i] == 0).collect();
        let ppv = rate(labels, &pred_pos).ok_or_else(|| {
            Error::Metric(format!(
                "no positive predictions in group {}={g}",
                groups.name
            ))
        })?;
        // NPV: fraction of predicted negatives whose label is 0
        let npv = pred_neg
            .iter()
            .filter(|&&i| labels[i] == 0)
            .count() as f64;
        if pred_neg.is_empty() {
            return Err(Error::Metric(format!(
                "no negative predictions in group {}={g}",
                groups.name
            )));
        }
        let npv = npv / pred_neg.len() as f64;
        values.insert(g.clone(), vec![ppv, npv]);
        support.insert(g.clone(), rows.len());
    }
    aggregate(
        "prediction-rate-parity",
        vec!["PPV".into(), "NPV".into()],
        values,
        support,
    )
}

fn check_lengths(len: usize, groups: &GroupVector) -> Result<()> {
    if len != groups.members.len() {
        return Err(Error::Argument(format!(
            "vector length {len} does not match group vector length {}",
            groups.members.len()
        )));
    }
    Ok(())
}
