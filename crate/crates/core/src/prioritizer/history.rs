//! Execution history and the training set built from it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::PrioritizeError;
use crate::classifier::{Classification, TestClass};

/// One execution of a test against a product version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Execution {
    pub product_id: String,
    pub version_id: String,
    pub test_id: String,
    pub fails: bool,
}

/// Executions in chronological order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub executions: Vec<Execution>,
}

#[derive(Deserialize)]
struct HistoryRow {
    product_id: String,
    version_id: String,
    test_id: String,
    verdict: String,
    #[serde(default)]
    timestamp: Option<String>,
}

fn parse_time(s: &str) -> Option<chrono::NaiveDateTime> {
    chrono::DateTime::parse_from_rfc3339(s)
        .map(|d| d.naive_utc())
        .ok()
        .or_else(|| chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok())
        .or_else(|| {
            chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

impl History {
    /// Reads `product_id,version_id,test_id,verdict[,timestamp]`. Rows must
    /// already be in chronological order; when timestamps are present they
    /// must not decrease.
    pub fn from_csv(text: &str) -> Result<Self, PrioritizeError> {
        let schema = |line: usize, msg: String| PrioritizeError::HistorySchema { line, msg };
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut executions = Vec::new();
        let mut last_time = None;
        let mut seen = BTreeSet::new();
        for (i, row) in r.deserialize::<HistoryRow>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| schema(line, e.to_string()))?;
            let fails = match row.verdict.to_ascii_lowercase().as_str() {
                "fail" => true,
                "pass" => false,
                v => return Err(schema(line, format!("verdict `{v}` is neither pass nor fail"))),
            };
            if let Some(ts) = row.timestamp.as_deref().filter(|s| !s.is_empty()) {
                let t = parse_time(ts).ok_or_else(|| schema(line, format!("bad timestamp `{ts}`")))?;
                if last_time.is_some_and(|l| t < l) {
                    return Err(schema(line, format!("timestamp `{ts}` is earlier than the previous row")));
                }
                last_time = Some(t);
            }
            if !seen.insert((row.product_id.clone(), row.version_id.clone(), row.test_id.clone())) {
                return Err(schema(
                    line,
                    format!("{} ran twice on {} {}", row.test_id, row.product_id, row.version_id),
                ));
            }
            executions.push(Execution {
                product_id: row.product_id,
                version_id: row.version_id,
                test_id: row.test_id,
                fails,
            });
        }
        Ok(History { executions })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["product_id", "version_id", "test_id", "verdict"]).expect("in-memory write");
        for e in &self.executions {
            let v = if e.fails { "fail" } else { "pass" };
            w.write_record([e.product_id.as_str(), &e.version_id, &e.test_id, v])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Products in order of first appearance.
    pub fn products(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.executions {
            if !out.contains(&e.product_id.as_str()) {
                out.push(&e.product_id);
            }
        }
        out
    }

    /// Tests that failed on any version of `product`.
    pub fn failing_tests(&self, product: &str) -> BTreeSet<String> {
        self.executions
            .iter()
            .filter(|e| e.fails && e.product_id == product)
            .map(|e| e.test_id.clone())
            .collect()
    }

    /// History restricted to the given products, order kept.
    pub fn restricted_to(&self, products: &[&str]) -> History {
        History {
            executions: self
                .executions
                .iter()
                .filter(|e| products.contains(&e.product_id.as_str()))
                .cloned()
                .collect(),
        }
    }
}

/// Scenario-derived features of a test on one product.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFeatures {
    pub product_id: String,
    pub test_id: String,
    pub retestable: bool,
    pub size: u32,
    pub variability: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureTable {
    map: BTreeMap<(String, String), TestFeatures>,
}

#[derive(Deserialize, Serialize)]
struct FeatureRow {
    product_id: String,
    test_id: String,
    retestable: u8,
    size: u32,
    variability: u32,
}

impl FeatureTable {
    pub fn insert(&mut self, f: TestFeatures) {
        self.map.insert((f.product_id.clone(), f.test_id.clone()), f);
    }

    pub fn get(&self, product: &str, test: &str) -> Option<&TestFeatures> {
        self.map.get(&(product.to_string(), test.to_string()))
    }

    pub fn of_product<'a>(&'a self, product: &'a str) -> impl Iterator<Item = &'a TestFeatures> + 'a {
        self.map.values().filter(move |f| f.product_id == product)
    }

    /// Reads `product_id,test_id,retestable,size,variability`.
    pub fn from_csv(text: &str) -> Result<Self, PrioritizeError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut t = FeatureTable::default();
        for (i, row) in r.deserialize::<FeatureRow>().enumerate() {
            let row = row.map_err(|e| PrioritizeError::FeatureSchema { line: i + 2, msg: e.to_string() })?;
            if row.retestable > 1 {
                return Err(PrioritizeError::FeatureSchema {
                    line: i + 2,
                    msg: "retestable must be 0 or 1".into(),
                });
            }
            t.insert(TestFeatures {
                product_id: row.product_id,
                test_id: row.test_id,
                retestable: row.retestable == 1,
                size: row.size,
                variability: row.variability,
            });
        }
        Ok(t)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for f in self.map.values() {
            w.serialize(FeatureRow {
                product_id: f.product_id.clone(),
                test_id: f.test_id.clone(),
                retestable: f.retestable as u8,
                size: f.size,
                variability: f.variability,
            })
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Features of the non-obsolete tests of a classification, on the new product.
    pub fn from_classification(c: &Classification) -> Self {
        let mut t = FeatureTable::default();
        for v in c.verdicts.iter().filter(|v| v.class != TestClass::Obsolete) {
            t.insert(TestFeatures {
                product_id: c.product.clone(),
                test_id: v.test_id.clone(),
                retestable: v.class == TestClass::Retestable,
                size: v.size as u32,
                variability: v.variability as u32,
            });
        }
        t
    }

    pub fn extend(&mut self, other: FeatureTable) {
        self.map.extend(other.map);
    }
}

/// One training row: a test executed against a product version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub product_id: String,
    pub version_id: String,
    pub test_id: String,
    pub fails: bool,
    pub retestable: bool,
    pub size: u32,
    pub variability: u32,
    pub failing_products: u32,
    pub failing_versions: u32,
}

#[derive(Default)]
struct Tally {
    versions: u32,
    products: BTreeSet<String>,
}

impl Tally {
    fn failing_products(&self, current: &str) -> u32 {
        self.products.iter().filter(|p| *p != current).count() as u32
    }
}

/// Training rows in history order. FV and FP count the failures of the same
/// test in strictly earlier rows, across the whole line; FP leaves out the
/// current product. With `suite`, only rows of those tests are kept.
pub fn build_training_set(
    history: &History,
    features: &FeatureTable,
    suite: Option<&BTreeSet<String>>,
) -> Result<Vec<TrainingRow>, PrioritizeError> {
    let mut tallies: HashMap<&str, Tally> = HashMap::new();
    let mut rows = Vec::new();
    for e in &history.executions {
        let f = features
            .get(&e.product_id, &e.test_id)
            .ok_or_else(|| PrioritizeError::UnknownTest {
                product: e.product_id.clone(),
                test: e.test_id.clone(),
            })?;
        let t = tallies.entry(&e.test_id).or_default();
        if suite.is_none_or(|s| s.contains(&e.test_id)) {
            rows.push(TrainingRow {
                product_id: e.product_id.clone(),
                version_id: e.version_id.clone(),
                test_id: e.test_id.clone(),
                fails: e.fails,
                retestable: f.retestable,
                size: f.size,
                variability: f.variability,
                failing_products: t.failing_products(&e.product_id),
                failing_versions: t.versions,
            });
        }
        if e.fails {
            t.versions += 1;
            t.products.insert(e.product_id.clone());
        }
    }
    Ok(rows)
}

/// Feature rows for the tests of a new product, with FP and FV counted over
/// the whole history.
pub fn suite_rows(history: &History, product: &str, features: &FeatureTable) -> Vec<TrainingRow> {
    let mut tallies: HashMap<&str, Tally> = HashMap::new();
    for e in history.executions.iter().filter(|e| e.fails) {
        let t = tallies.entry(&e.test_id).or_default();
        t.versions += 1;
        t.products.insert(e.product_id.clone());
    }
    features
        .of_product(product)
        .map(|f| {
            let t = tallies.get(f.test_id.as_str());
            TrainingRow {
                product_id: product.to_string(),
                version_id: String::new(),
                test_id: f.test_id.clone(),
                fails: false,
                retestable: f.retestable,
                size: f.size,
                variability: f.variability,
                failing_products: t.map_or(0, |t| t.failing_products(product)),
                failing_versions: t.map_or(0, |t| t.versions),
            }
        })
        .collect()
}
