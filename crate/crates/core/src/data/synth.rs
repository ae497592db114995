//! Synthetic scenario generators: the four-cell subgroup-discrimination
//! world and a census-style benchmark in the Adult column layout.

use crate::data::dataset::Dataset;
use crate::data::schema::{ColumnKind, ColumnRole, ColumnSpec, FeatureSchema};
use crate::error::{Error, Result};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::collections::BTreeMap;

/// A raw cell value fed to the synthetic row assembler.
enum Cell<'a> {
    Num(f64),
    Cat(&'a str),
}

/// Assembles encoded rows directly against a schema, mirroring what
/// CSV ingestion would produce.
struct RowSink {
    schema: FeatureSchema,
    x_flat: Vec<f64>,
    y: Vec<u8>,
    groups: BTreeMap<String, Vec<u32>>,
    n: usize,
}

impl RowSink {
    fn new(schema: FeatureSchema) -> Self {
        let groups = schema
            .protected_names()
            .into_iter()
            .map(|n| (n, Vec::new()))
            .collect();
        RowSink {
            schema,
            x_flat: Vec::new(),
            y: Vec::new(),
            groups,
            n: 0,
        }
    }

    fn push(&mut self, cells: &[Cell<'_>]) -> Result<()> {
        assert_eq!(cells.len(), self.schema.columns.len());
        let d = self.schema.encoded_width();
        let layout = self.schema.layout();
        let mut row = vec![0.0; d];
        for (ci, (spec, cell)) in self.schema.columns.iter().zip(cells).enumerate() {
            match (spec.kind, cell) {
                (ColumnKind::Numeric, Cell::Num(v)) => {
                    if let Some(b) = layout.iter().find(|b| b.column == ci) {
                        row[b.offset] = *v;
                    }
                }
                (ColumnKind::Categorical, Cell::Cat(name)) => {
                    let code = spec
                        .categories
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| {
                            Error::Encoding(format!(
                                "generator emitted unknown category '{name}' for '{}'",
                                spec.name
                            ))
                        })?;
                    if spec.role == ColumnRole::Label {
                        self.y.push(code as u8);
                    }
                    if spec.is_protected() {
                        self.groups
                            .get_mut(&spec.name)
                            .expect("registered")
                            .push(code as u32);
                    }
                    if let Some(b) = layout.iter().find(|b| b.column == ci) {
                        row[b.offset + code] = 1.0;
                    }
                }
                _ => {
                    return Err(Error::Encoding(format!(
                        "generator cell type mismatch for '{}'",
                        spec.name
                    )))
                }
            }
        }
        self.x_flat.extend_from_slice(&row);
        self.n += 1;
        Ok(())
    }

    fn finish(self) -> Result<Dataset> {
        let d = self.schema.encoded_width();
        let x = Array2::from_shape_vec((self.n, d), self.x_flat)
            .map_err(|e| Error::Encoding(format!("shape error: {e}")))?;
        Ok(Dataset {
            x,
            y: self.y,
            groups: self.groups,
            ids: (0..self.n).map(|i| i.to_string()).collect(),
            schema: self.schema,
            standardization: None,
        })
    }
}

fn cat(name: &str, categories: &[&str], protected: bool, role: ColumnRole) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind: ColumnKind::Categorical,
        categories: categories.iter().map(|s| s.to_string()).collect(),
        protected,
        role,
    }
}

fn num(name: &str) -> ColumnSpec {
    ColumnSpec {
        name: name.into(),
        kind: ColumnKind::Numeric,
        categories: vec![],
        protected: false,
        role: ColumnRole::Feature,
    }
}

/// Schema for the four-cell subgroup-discrimination scenario: a protected
/// race column kept out of the features, a coarse "type" proxy (standing in
/// for geography), and two financial covariates.
pub fn table1_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        cat(
            "race",
            &["Black", "White"],
            true,
            ColumnRole::ProtectedOnly,
        ),
        cat("type", &["1", "2"], false, ColumnRole::Feature),
        num("balance"),
        num("utilization"),
        cat(
            "decision",
            &["deny", "approve"],
            false,
            ColumnRole::Label,
        ),
    ])
    .unwrap()
}

/// Default acceptance probabilities for (Black type 1, Black type 2,
/// White type 1, White type 2).
pub const TABLE1_DEFAULT_RATES: [f64; 4] = [0.80, 0.20, 0.60, 0.40];

/// Generate the four-cell world: equal cell sizes, financial covariates
/// drawn identically across race within type, and acceptance sampled at the
/// configured per-cell rates. With the default rates both races accept at
/// 50% overall while each type shows a 20-point race gap.
pub fn synth_table1(n_per_cell: usize, seed: u64, rates: [f64; 4]) -> Result<Dataset> {
    if n_per_cell < 1 {
        return Err(Error::Argument("n_per_cell must be at least 1".into()));
    }
    if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Argument(format!(
            "acceptance rates must lie in [0, 1], got {rates:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut sink = RowSink::new(table1_schema());
    let cells = [("Black", "1"), ("Black", "2"), ("White", "1"), ("White", "2")];
    for (k, (race, ty)) in cells.iter().enumerate() {
        for _ in 0..n_per_cell {
            let balance = normal.sample(&mut rng);
            let utilization = normal.sample(&mut rng);
            let accept = rng.random::<f64>() < rates[k];
            sink.push(&[
                Cell::Cat(race),
                Cell::Cat(ty),
                Cell::Num(balance),
                Cell::Num(utilization),
                Cell::Cat(if accept { "approve" } else { "deny" }),
            ])?;
        }
    }
    sink.finish()
}

const WORKCLASS: [&str; 9] = [
    "Private",
    "Self-emp-not-inc",
    "Self-emp-inc",
    "Federal-gov",
    "Local-gov",
    "State-gov",
    "Without-pay",
    "Never-worked",
    "?",
];

/// Education category for each education-num 1..=16.
const EDUCATION_BY_NUM: [&str; 16] = [
    "Preschool",
    "1st-4th",
    "5th-6th",
    "7th-8th",
    "9th",
    "10th",
    "11th",
    "12th",
    "HS-grad",
    "Some-college",
    "Assoc-voc",
    "Assoc-acdm",
    "Bachelors",
    "Masters",
    "Prof-school",
    "Doctorate",
];

const EDUCATION: [&str; 16] = [
    "Bachelors",
    "Some-college",
    "11th",
    "HS-grad",
    "Prof-school",
    "Assoc-acdm",
    "Assoc-voc",
    "9th",
    "7th-8th",
    "12th",
    "Masters",
    "1st-4th",
    "10th",
    "Doctorate",
    "5th-6th",
    "Preschool",
];

const MARITAL: [&str; 7] = [
    "Married-civ-spouse",
    "Divorced",
    "Never-married",
    "Separated",
    "Widowed",
    "Married-spouse-absent",
    "Married-AF-spouse",
];

const OCCUPATION: [&str; 15] = [
    "Tech-support",
    "Craft-repair",
    "Other-service",
    "Sales",
    "Exec-managerial",
    "Prof-specialty",
    "Handlers-cleaners",
    "Machine-op-inspct",
    "Adm-clerical",
    "Farming-fishing",
    "Transport-moving",
    "Priv-house-serv",
    "Protective-serv",
    "Armed-Forces",
    "?",
];

const RELATIONSHIP: [&str; 6] = [
    "Wife",
    "Own-child",
    "Husband",
    "Not-in-family",
    "Other-relative",
    "Unmarried",
];

const RACE: [&str; 5] = [
    "White",
    "Asian-Pac-Islander",
    "Amer-Indian-Eskimo",
    "Other",
    "Black",
];

const COUNTRY: [&str; 42] = [
    "United-States",
    "Cambodia",
    "England",
    "Puerto-Rico",
    "Canada",
    "Germany",
    "Outlying-US(Guam-USVI-etc)",
    "India",
    "Japan",
    "Greece",
    "South",
    "China",
    "Cuba",
    "Iran",
    "Honduras",
    "Philippines",
    "Italy",
    "Poland",
    "Jamaica",
    "Vietnam",
    "Mexico",
    "Portugal",
    "Ireland",
    "France",
    "Dominican-Republic",
    "Laos",
    "Ecuador",
    "Taiwan",
    "Haiti",
    "Columbia",
    "Hungary",
    "Guatemala",
    "Nicaragua",
    "Scotland",
    "Thailand",
    "Yugoslavia",
    "El-Salvador",
    "Trinadad&Tobago",
    "Peru",
    "Hong",
    "Holand-Netherlands",
    "?",
];

/// Schema matching the UCI Adult column layout (14 features plus the income
/// label), with sex and race marked protected while remaining features.
pub fn adult_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        num("age"),
        cat("workclass", &WORKCLASS, false, ColumnRole::Feature),
        num("fnlwgt"),
        cat("education", &EDUCATION, false, ColumnRole::Feature),
        num("education-num"),
        cat("marital-status", &MARITAL, false, ColumnRole::Feature),
        cat("occupation", &OCCUPATION, false, ColumnRole::Feature),
        cat("relationship", &RELATIONSHIP, false, ColumnRole::Feature),
        cat("race", &RACE, true, ColumnRole::Feature),
        cat("sex", &["Female", "Male"], true, ColumnRole::Feature),
        num("capital-gain"),
        num("capital-loss"),
        num("hours-per-week"),
        cat("native-country", &COUNTRY, false, ColumnRole::Feature),
        cat("income", &["<=50K", ">50K"], false, ColumnRole::Label),
    ])
    .unwrap()
}

/// 1.0 when the condition holds, else 0.0.
fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Weighted category pick; weights need not be normalized.
fn pick<'a>(rng: &mut ChaCha8Rng, items: &[(&'a str, f64)]) -> &'a str {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for (name, w) in items {
        u -= w;
        if u <= 0.0 {
            return name;
        }
    }
    items.last().expect("non-empty").0
}

/// Generate census-style data in the Adult layout. The outcome depends on a
/// latent skill factor (visible only through education, hours, and capital
/// gains) plus direct sex, race, age, and marriage effects, so an
/// unconstrained linear model earns its accuracy partly through protected
/// attributes and their proxies such as the spouse relationship.
pub fn synth_adult(n: usize, seed: u64) -> Result<Dataset> {
    if n < 10 {
        return Err(Error::Argument("adult generator needs n >= 10".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut sink = RowSink::new(adult_schema());

    let male_occ: [(&str, f64); 15] = [
        ("Craft-repair", 0.20),
        ("Exec-managerial", 0.14),
        ("Prof-specialty", 0.12),
        ("Sales", 0.11),
        ("Transport-moving", 0.09),
        ("Machine-op-inspct", 0.08),
        ("Handlers-cleaners", 0.06),
        ("Farming-fishing", 0.05),
        ("Protective-serv", 0.04),
        ("Tech-support", 0.04),
        ("Adm-clerical", 0.04),
        ("Other-service", 0.05),
        ("Priv-house-serv", 0.001),
        ("Armed-Forces", 0.004),
        ("?", 0.025),
    ];
    let female_occ: [(&str, f64); 15] = [
        ("Adm-clerical", 0.26),
        ("Other-service", 0.17),
        ("Prof-specialty", 0.14),
        ("Sales", 0.12),
        ("Exec-managerial", 0.08),
        ("Tech-support", 0.06),
        ("Machine-op-inspct", 0.05),
        ("Priv-house-serv", 0.035),
        ("Craft-repair", 0.02),
        ("Handlers-cleaners", 0.02),
        ("Farming-fishing", 0.01),
        ("Transport-moving", 0.01),
        ("Protective-serv", 0.01),
        ("Armed-Forces", 0.0005),
        ("?", 0.025),
    ];
    let workclass_w: [(&str, f64); 9] = [
        ("Private", 0.72),
        ("Self-emp-not-inc", 0.08),
        ("Self-emp-inc", 0.04),
        ("Federal-gov", 0.03),
        ("Local-gov", 0.06),
        ("State-gov", 0.04),
        ("Without-pay", 0.005),
        ("Never-worked", 0.005),
        ("?", 0.02),
    ];
    let unmarried_status: [(&str, f64); 4] = [
        ("Never-married", 0.60),
        ("Divorced", 0.25),
        ("Separated", 0.08),
        ("Widowed", 0.07),
    ];
    let unmarried_rel: [(&str, f64); 4] = [
        ("Not-in-family", 0.55),
        ("Own-child", 0.20),
        ("Unmarried", 0.18),
        ("Other-relative", 0.07),
    ];

    for _ in 0..n {
        let male = rng.random::<f64>() < 0.52;
        let white = rng.random::<f64>() < 0.70;
        let race = if white { "White" } else { "Black" };
        // latent skill is shifted by race, so race carries signal about it
        // beyond what the noisy proxies reveal; hours and capital gains
        // track only the race-independent part
        let base_skill = std_normal.sample(&mut rng);
        let skill = base_skill + 0.35 * ind(white) - 0.245;
        // marriage composition is asymmetric by sex, as in census samples
        let married = rng.random::<f64>() < if male { 0.68 } else { 0.35 };

        let (marital, relationship) = if married {
            (
                "Married-civ-spouse",
                if male { "Husband" } else { "Wife" },
            )
        } else {
            (
                pick(&mut rng, &unmarried_status),
                pick(&mut rng, &unmarried_rel),
            )
        };
        let occupation = if male {
            pick(&mut rng, &male_occ)
        } else {
            pick(&mut rng, &female_occ)
        };
        let workclass = pick(&mut rng, &workclass_w);
        let country = {
            let u = rng.random::<f64>();
            if u < 0.90 {
                "United-States"
            } else if u < 0.92 {
                "Mexico"
            } else if u < 0.938 {
                "?"
            } else {
                // remaining mass spread over the other countries
                let rest: Vec<&str> = COUNTRY
                    .iter()
                    .copied()
                    .filter(|c| !matches!(*c, "United-States" | "Mexico" | "?"))
                    .collect();
                rest[rng.random_range(0..rest.len())]
            }
        };

        let edu_noise: f64 = std_normal.sample(&mut rng) * 1.0;
        let edu_num = (9.0 + 1.8 * skill + edu_noise).round().clamp(1.0, 16.0);
        let education = EDUCATION_BY_NUM[(edu_num as usize) - 1];

        let hours = (40.0
            + 2.0 * ind(male)
            + 4.0 * base_skill
            + std_normal.sample(&mut rng) * 6.0)
            .round()
            .clamp(5.0, 80.0);
        let age = (38.0 + std_normal.sample(&mut rng) * 12.0).round().clamp(17.0, 80.0);
        let fnlwgt = (190_000.0 + std_normal.sample(&mut rng) * 90_000.0)
            .round()
            .clamp(20_000.0, 1_000_000.0);
        let gain_p = if base_skill > 0.8 { 0.35 } else { 0.02 };
        let capital_gain = if rng.random::<f64>() < gain_p {
            (7_000.0 + std_normal.sample(&mut rng) * 2_500.0)
                .round()
                .clamp(500.0, 30_000.0)
        } else {
            0.0
        };
        let capital_loss = if rng.random::<f64>() < 0.95 {
            0.0
        } else {
            (1_900.0 + std_normal.sample(&mut rng) * 250.0)
                .round()
                .clamp(100.0, 4_000.0)
        };

        let score = -3.35
            + 2.2 * skill
            + 1.5 * ind(male)
            + 0.35 * ind(white)
            + 1.0 * ind(married)
            + 1.5 * ind(!male && married)
            + 0.025 * (age - 38.0);
        let p = 1.0 / (1.0 + (-score).exp());
        let high = rng.random::<f64>() < p;

        sink.push(&[
            Cell::Num(age),
            Cell::Cat(workclass),
            Cell::Num(fnlwgt),
            Cell::Cat(education),
            Cell::Num(edu_num),
            Cell::Cat(marital),
            Cell::Cat(occupation),
            Cell::Cat(relationship),
            Cell::Cat(race),
            Cell::Cat(if male { "Male" } else { "Female" }),
            Cell::Num(capital_gain),
            Cell::Num(capital_loss),
            Cell::Num(hours),
            Cell::Cat(country),
            Cell::Cat(if high { ">50K" } else { "<=50K" }),
        ])?;
    }
    sink.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_cells_are_equal_and_rates_converge() {
        let ds = synth_table1(50_000, 11, TABLE1_DEFAULT_RATES).unwrap();
        assert_eq!(ds.n(), 200_000);
        let race = &ds.groups["race"];
        // block layout: cells in order B1, B2, W1, W2
        for (k, expected) in TABLE1_DEFAULT_RATES.iter().enumerate() {
            let lo = k * 50_000;
            let hi = lo + 50_000;
            let rate = ds.y[lo..hi].iter().map(|&v| v as f64).sum::<f64>() / 50_000.0;
            assert!(
                (rate - expected).abs() < 0.01,
                "cell {k}: rate {rate} vs {expected}"
            );
        }
        // group rates average to parity under equal cells
        let mut rates = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for (i, &g) in race.iter().enumerate() {
            rates[g as usize] += ds.y[i] as f64;
            counts[g as usize] += 1;
        }
        for g in 0..2 {
            rates[g] /= counts[g] as f64;
            assert!((rates[g] - 0.50).abs() < 0.01, "group {g}: {}", rates[g]);
        }
    }

    #[test]
    fn table1_symmetric_rates_have_no_gap() {
        let ds = synth_table1(5_000, 3, [0.5; 4]).unwrap();
        let race = &ds.groups["race"];
        let mut by_cell = std::collections::BTreeMap::new();
        for i in 0..ds.n() {
            let ty = if ds.x[[i, 0]] > 0.5 { 1 } else { 2 };
            let entry = by_cell.entry((race[i], ty)).or_insert((0.0, 0));
            entry.0 += ds.y[i] as f64;
            entry.1 += 1;
        }
        for ((_, _), (sum, n)) in by_cell {
            assert!((sum / n as f64 - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn table1_is_deterministic() {
        let a = synth_table1(200, 9, TABLE1_DEFAULT_RATES).unwrap();
        let b = synth_table1(200, 9, TABLE1_DEFAULT_RATES).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn table1_rejects_bad_rates() {
        assert!(synth_table1(10, 0, [1.2, 0.2, 0.3, 0.4]).is_err());
        assert!(synth_table1(0, 0, TABLE1_DEFAULT_RATES).is_err());
    }

    #[test]
    fn adult_layout_and_links() {
        let ds = synth_adult(2_000, 5).unwrap();
        assert_eq!(ds.d(), 108);
        assert_eq!(ds.schema.protected_names(), vec!["race", "sex"]);
        // married rows carry the deterministic spouse relationship
        let sex = &ds.groups["sex"];
        let rel_block = ds.schema.block_of("relationship").unwrap();
        let wife = rel_block.offset; // "Wife" is first category
        let husband = rel_block.offset + 2;
        for i in 0..ds.n() {
            if ds.x[[i, husband]] > 0.5 {
                assert_eq!(sex[i], 1, "husband row must be male");
            }
            if ds.x[[i, wife]] > 0.5 {
                assert_eq!(sex[i], 0, "wife row must be female");
            }
        }
        // label base rate in a sane band
        let rate = ds.y.iter().map(|&v| v as f64).sum::<f64>() / ds.n() as f64;
        assert!((0.15..=0.55).contains(&rate), "base rate {rate}");
    }

    #[test]
    fn adult_round_trips_through_csv() {
        let ds = synth_adult(200, 1).unwrap();
        let text = ds.to_csv_string().unwrap();
        let back = Dataset::from_csv_str(&text, &ds.schema).unwrap();
        assert_eq!(ds.fingerprint(), back.fingerprint());
    }
}
