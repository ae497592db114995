//! Exhaustive subgroup-discrimination scan over conjunctions of column
//! predicates, with a standard-error guard against small-sample noise.

use crate::data::{ColumnKind, ColumnRole, Dataset};
use crate::error::{Error, Result};
use crate::stats::quantile;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One (column, value) clause of a subgroup predicate; numeric columns use
/// quartile-bucket labels Q1..Q4.
pub type Clause = (String, String);

/// A subgroup where the chosen metric differs across the protected attribute.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupFinding {
    /// Conjunction of clauses defining the subgroup.
    pub predicate: Vec<Clause>,
    pub protected: String,
    /// Protected groups on either side of the largest gap.
    pub sides: (String, String),
    /// Metric values for the two sides.
    pub values: (f64, f64),
    pub gap: f64,
    /// Metric denominators for the two sides.
    pub support_per_side: (usize, usize),
    pub metric: String,
}

/// Scan metrics; all are proportions, so the two-proportion standard error
/// applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScanMetric {
    AcceptanceRate,
    Tpr,
    Fpr,
    Ppv,
}

impl ScanMetric {
    fn parse(name: &str) -> Result<ScanMetric> {
        match name {
            "acceptance-rate" => Ok(ScanMetric::AcceptanceRate),
            "TPR" => Ok(ScanMetric::Tpr),
            "FPR" => Ok(ScanMetric::Fpr),
            "PPV" => Ok(ScanMetric::Ppv),
            other => Err(Error::Argument(format!(
                "unknown scan metric '{other}'; expected acceptance-rate, TPR, FPR, or PPV"
            ))),
        }
    }

    /// (numerator, denominator) of the proportion over the given rows.
    fn count(self, rows: &[usize], decisions: &[u8], labels: &[u8]) -> (usize, usize) {
        let mut num = 0;
        let mut den = 0;
        for &i in rows {
            match self {
                ScanMetric::AcceptanceRate => {
                    den += 1;
                    num += usize::from(decisions[i] == 1);
                }
                ScanMetric::Tpr => {
                    if labels[i] == 1 {
                        den += 1;
                        num += usize::from(decisions[i] == 1);
                    }
                }
                ScanMetric::Fpr => {
                    if labels[i] == 0 {
                        den += 1;
                        num += usize::from(decisions[i] == 1);
                    }
                }
                ScanMetric::Ppv => {
                    if decisions[i] == 1 {
                        den += 1;
                        num += usize::from(labels[i] == 1);
                    }
                }
            }
        }
        (num, den)
    }
}

/// All candidate clauses over non-protected, non-label feature columns:
/// one per category for categorical columns, one per quartile bucket for
/// numeric columns. Returns clauses with their matching row sets.
fn candidate_clauses(data: &Dataset) -> Vec<(Clause, Vec<usize>)> {
    let n = data.n();
    let mut out = Vec::new();
    for block in data.schema.layout() {
        let (_, spec) = data.schema.column(&block.name).expect("layout column");
        if spec.is_protected() || spec.role != ColumnRole::Feature {
            continue;
        }
        match block.kind {
            ColumnKind::Categorical => {
                for (k, cat) in spec.categories.iter().enumerate() {
                    let rows: Vec<usize> = (0..n)
                        .filter(|&i| data.x[[i, block.offset + k]] == 1.0)
                        .collect();
                    out.push(((block.name.clone(), cat.clone()), rows));
                }
            }
            ColumnKind::Numeric => {
                let values: Vec<f64> = (0..n).map(|i| data.x[[i, block.offset]]).collect();
                let cuts = [
                    quantile(&values, 0.25),
                    quantile(&values, 0.50),
                    quantile(&values, 0.75),
                ];
                let bucket = |v: f64| -> usize {
                    if v < cuts[0] {
                        0
                    } else if v < cuts[1] {
                        1
                    } else if v < cuts[2] {
                        2
                    } else {
                        3
                    }
                };
                let mut rows_per: [Vec<usize>; 4] = Default::default();
                for (i, &v) in values.iter().enumerate() {
                    rows_per[bucket(v)].push(i);
                }
                for (k, rows) in rows_per.into_iter().enumerate() {
                    out.push(((block.name.clone(), format!("Q{}", k + 1)), rows));
                }
            }
        }
    }
    out
}

/// Every subgroup predicate the scan will visit: all single clauses, plus
/// (at depth 2) all pairs of clauses from different columns.
pub fn enumerate_subgroups(data: &Dataset, max_depth: usize) -> Result<Vec<Vec<Clause>>> {
    if !(1..=2).contains(&max_depth) {
        return Err(Error::Argument(format!(
            "max depth must be 1 or 2, got {max_depth}"
        )));
    }
    let clauses = candidate_clauses(data);
    let mut out: Vec<Vec<Clause>> = clauses.iter().map(|(c, _)| vec![c.clone()]).collect();
    if max_depth == 2 {
        for (i, (a, _)) in clauses.iter().enumerate() {
            for (b, _) in clauses.iter().skip(i + 1) {
                if a.0 != b.0 {
                    out.push(vec![a.clone(), b.clone()]);
                }
            }
        }
    }
    Ok(out)
}

/// Exhaustive scan for subgroups whose protected-attribute gap on the given
/// metric clears `threshold` after subtracting a two-proportion standard
/// error at z = 2. Findings sort by gap descending, ties by larger support.
#[allow(clippy::too_many_arguments)]
pub fn subgroup_scan(
    decisions: &[u8],
    labels: Option<&[u8]>,
    data: &Dataset,
    protected: &str,
    max_depth: usize,
    min_support: usize,
    threshold: f64,
    metric_name: &str,
) -> Result<Vec<SubgroupFinding>> {
    let metric = ScanMetric::parse(metric_name)?;
    if !(1..=2).contains(&max_depth) {
        return Err(Error::Argument(format!(
            "max depth must be 1 or 2, got {max_depth}"
        )));
    }
    if min_support == 0 {
        return Err(Error::Argument("min support must be positive".into()));
    }
    if decisions.len() != data.n() {
        return Err(Error::Argument(format!(
            "decision vector length {} does not match dataset rows {}",
            decisions.len(),
            data.n()
        )));
    }
    let labels: &[u8] = match labels {
        Some(l) => {
            if l.len() != data.n() {
                return Err(Error::Argument(
                    "label vector length does not match dataset rows".into(),
                ));
            }
            l
        }
        // dataset labels serve when no explicit vector is given
        None => &data.y,
    };
    let codes = data.group_codes(protected)?;
    let group_names: BTreeMap<u32, String> = {
        let mut distinct: Vec<u32> = codes.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct
            .into_iter()
            .map(|c| {
                data.group_category(protected, c)
                    .map(|s| (c, s.to_string()))
            })
            .collect::<Result<_>>()?
    };

    let clauses = candidate_clauses(data);
    let mut findings = Vec::new();
    let mut visit = |predicate: &[Clause], rows: &[usize]| {
        // per protected group: metric numerator and denominator
        let mut per_group: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &i in rows {
            per_group.entry(codes[i]).or_default().push(i);
        }
        let sides: Vec<(String, f64, usize)> = per_group
            .iter()
            .filter_map(|(code, members)| {
                let (num, den) = metric.count(members, decisions, labels);
                if den >= min_support {
                    Some((group_names[code].clone(), num as f64 / den as f64, den))
                } else {
                    None
                }
            })
            .collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..sides.len() {
            for j in (i + 1)..sides.len() {
                let gap = (sides[i].1 - sides[j].1).abs();
                if best.is_none_or(|(g, _, _)| gap > g) {
                    best = Some((gap, i, j));
                }
            }
        }
        if let Some((gap, i, j)) = best {
            let (ref ga, va, na) = sides[i];
            let (ref gb, vb, nb) = sides[j];
            let se = (va * (1.0 - va) / na as f64 + vb * (1.0 - vb) / nb as f64).sqrt();
            if gap - 2.0 * se >= threshold {
                findings.push(SubgroupFinding {
                    predicate: predicate.to_vec(),
                    protected: protected.to_string(),
                    sides: (ga.clone(), gb.clone()),
                    values: (va, vb),
                    gap,
                    support_per_side: (na, nb),
                    metric: metric_name.to_string(),
                });
            }
        }
    };

    for (clause, rows) in &clauses {
        visit(std::slice::from_ref(clause), rows);
    }
    if max_depth == 2 {
        let marks: Vec<Vec<bool>> = clauses
            .iter()
            .map(|(_, rows)| {
                let mut m = vec![false; data.n()];
                for &i in rows {
                    m[i] = true;
                }
                m
            })
            .collect();
        for (i, (a, rows_a)) in clauses.iter().enumerate() {
            for (j, (b, _)) in clauses.iter().enumerate().skip(i + 1) {
                if a.0 == b.0 {
                    continue;
                }
                let rows: Vec<usize> =
                    rows_a.iter().cloned().filter(|&r| marks[j][r]).collect();
                visit(&[a.clone(), b.clone()], &rows);
            }
        }
    }

    findings.sort_by(|x, y| {
        let sx = x.support_per_side.0 + x.support_per_side.1;
        let sy = y.support_per_side.0 + y.support_per_side.1;
        y.gap
            .partial_cmp(&x.gap)
            .expect("finite gaps")
            .then(sy.cmp(&sx))
            .then(x.predicate.cmp(&y.predicate))
    });
    Ok(findings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_table1;
    use crate::data::{ColumnSpec, FeatureSchema};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RATES: [f64; 4] = [0.80, 0.20, 0.60, 0.40];

    #[test]
    fn table1_scan_recovers_both_type_findings() {
        let data = synth_table1(2000, 9, RATES).unwrap();
        let decisions = data.y.clone();
        let findings = subgroup_scan(
            &decisions,
            None,
            &data,
            "race",
            1,
            100,
            0.1,
            "acceptance-rate",
        )
        .unwrap();
        let type_findings: Vec<&SubgroupFinding> = findings
            .iter()
            .filter(|f| f.predicate[0].0 == "type")
            .collect();
        assert_eq!(type_findings.len(), 2, "findings: {findings:?}");
        for f in &type_findings {
            assert!(
                (f.gap - 0.2).abs() <= 0.05,
                "gap {} for {:?}",
                f.gap,
                f.predicate
            );
        }
        // top findings are the two type subgroups
        assert_eq!(findings[0].predicate[0].0, "type");
    }

    #[test]
    fn depth1_min_support_all_recovers_exact_signature() {
        // decisions equal to outcomes; with threshold 0 and min_support 1
        // the type subgroups dominate the ranking
        let data = synth_table1(2500, 21, RATES).unwrap();
        let decisions = data.y.clone();
        let findings =
            subgroup_scan(&decisions, None, &data, "race", 1, 1, 0.0, "acceptance-rate").unwrap();
        assert_eq!(findings[0].predicate[0].0, "type");
        assert_eq!(findings[1].predicate[0].0, "type");
    }

    #[test]
    fn null_decisions_yield_no_findings() {
        let data = synth_table1(2500, 33, RATES).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let decisions: Vec<u8> = (0..data.n())
            .map(|_| u8::from(rng.random::<f64>() < 0.5))
            .collect();
        let findings = subgroup_scan(
            &decisions,
            None,
            &data,
            "race",
            2,
            50,
            0.1,
            "acceptance-rate",
        )
        .unwrap();
        assert!(findings.is_empty(), "noise findings: {findings:?}");
    }

    fn three_cat_dataset() -> Dataset {
        // categorical columns of sizes 2, 3, 4 plus a label
        let cols = vec![
            ColumnSpec {
                name: "a".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["a0".into(), "a1".into()],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "b".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["b0".into(), "b1".into(), "b2".into()],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "c".into(),
                kind: ColumnKind::Categorical,
                categories: (0..4).map(|i| format!("c{i}")).collect(),
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "y".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["0".into(), "1".into()],
                protected: false,
                role: ColumnRole::Label,
            },
        ];
        let schema = FeatureSchema::new(cols).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 60;
        let mut x = ndarray::Array2::<f64>::zeros((n, 9));
        let mut y = Vec::new();
        for i in 0..n {
            x[[i, rng.random_range(0..2usize)]] = 1.0;
            x[[i, 2 + rng.random_range(0..3usize)]] = 1.0;
            x[[i, 5 + rng.random_range(0..4usize)]] = 1.0;
            y.push(u8::from(rng.random::<f64>() < 0.5));
        }
        Dataset {
            x,
            y,
            groups: std::collections::BTreeMap::new(),
            schema,
            ids: (0..n).map(|i| i.to_string()).collect(),
            standardization: None,
        }
    }

    #[test]
    fn depth2_enumeration_counts_35_subgroups() {
        let data = three_cat_dataset();
        let subgroups = enumerate_subgroups(&data, 2).unwrap();
        // 2+3+4 single clauses + 2*3 + 2*4 + 3*4 pairs
        assert_eq!(subgroups.len(), 35);
        let depth1 = subgroups.iter().filter(|s| s.len() == 1).count();
        assert_eq!(depth1, 9);
    }

    #[test]
    fn depth_validation_and_metric_names() {
        let data = three_cat_dataset();
        assert!(enumerate_subgroups(&data, 3).is_err());
        let decisions = vec![0u8; data.n()];
        let err = subgroup_scan(&decisions, None, &data, "race", 1, 1, 0.0, "acceptance-rate")
            .unwrap_err();
        // no protected column named race in this dataset
        assert!(matches!(err, Error::Argument(_)), "{err}");
        let data2 = synth_table1(10, 1, RATES).unwrap();
        let d2 = vec![0u8; data2.n()];
        assert!(matches!(
            subgroup_scan(&d2, None, &data2, "race", 1, 1, 0.0, "nope").unwrap_err(),
            Error::Argument(_)
        ));
        // label-based metric without labels falls back to dataset labels
        let ok = subgroup_scan(&d2, None, &data2, "race", 1, 1, 2.0, "TPR");
        assert!(ok.unwrap().is_empty());
    }

    #[test]
    fn tpr_scan_uses_positive_support() {
        let data = synth_table1(1000, 5, RATES).unwrap();
        let decisions = data.y.clone();
        let labels = data.y.clone();
        // decisions equal labels: TPR = 1 everywhere, no gaps anywhere
        let findings = subgroup_scan(
            &decisions,
            Some(&labels),
            &data,
            "race",
            1,
            10,
            0.05,
            "TPR",
        )
        .unwrap();
        assert!(findings.is_empty());
    }

    #[test]
    fn findings_sorted_by_gap_then_support() {
        let data = synth_table1(1500, 13, RATES).unwrap();
        let decisions = data.y.clone();
        let findings =
            subgroup_scan(&decisions, None, &data, "race", 1, 1, 0.0, "acceptance-rate").unwrap();
        for pair in findings.windows(2) {
            let s0 = pair[0].support_per_side.0 + pair[0].support_per_side.1;
            let s1 = pair[1].support_per_side.0 + pair[1].support_per_side.1;
            assert!(
                pair[0].gap > pair[1].gap || (pair[0].gap == pair[1].gap && s0 >= s1),
                "ordering violated"
            );
        }
    }
}
