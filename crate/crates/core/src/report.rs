//! Machine-readable outcome of a lemma run, shared by the partition and
//! section lemmas. JSON is the primary format; CSV carries the same columns
//! flattened to one row.

use std::collections::BTreeMap;
use std::fmt::Display;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Serialize, Serializer};

pub(crate) fn ser_display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub(crate) fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(&fraction_string(v))
}

/// Always `p/q`, also for integers, so the field has a single shape.
pub fn fraction_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    Comb,
    Tree,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "Mprime", skip_serializing_if = "Option::is_none")]
    pub mprime: Option<usize>,
}

impl Params {
    pub fn compact(&self) -> String {
        let fields = [
            ("k", self.k),
            ("m", self.m),
            ("N", self.n),
            ("Mprime", self.mprime),
        ];
        fields
            .iter()
            .filter_map(|(name, v)| v.map(|v| format!("{name}={v}")))
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub lemma: Lemma,
    pub params: Params,
    pub strategy: String,
    pub seed: Option<u64>,
    /// Witness in text form (rgs for partitions, `{a,b,..}` for sections).
    pub witness: Option<String>,
    #[serde(serialize_with = "ser_display")]
    pub bad_pair_count: BigUint,
    #[serde(serialize_with = "ser_display")]
    pub candidate_count: BigUint,
    #[serde(serialize_with = "ser_rational")]
    pub ratio: BigRational,
    pub elapsed_ms: u64,
    pub tested_maps: u64,
    pub failing_maps: u64,
    /// First failing map found, as `arg -> value` lines.
    pub counterexample: Option<String>,
    /// Per-candidate failure counts, in candidate enumeration order.
    pub census: Vec<u64>,
    pub extra: BTreeMap<String, serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl WitnessReport {
    pub fn new(
        lemma: Lemma,
        params: Params,
        strategy: impl Into<String>,
        seed: Option<u64>,
    ) -> Self {
        WitnessReport {
            lemma,
            params,
            strategy: strategy.into(),
            seed,
            witness: None,
            bad_pair_count: BigUint::zero(),
            candidate_count: BigUint::zero(),
            ratio: BigRational::zero(),
            elapsed_ms: 0,
            tested_maps: 0,
            failing_maps: 0,
            counterexample: None,
            census: Vec::new(),
            extra: BTreeMap::new(),
            config: None,
        }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.extra.insert(key.to_owned(), v);
    }

    pub fn passed(&self) -> bool {
        self.failing_maps == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub const CSV_HEADER: [&'static str; 10] = [
        "lemma",
        "params",
        "strategy",
        "seed",
        "witness",
        "bad_pair_count",
        "candidate_count",
        "ratio",
        "elapsed_ms",
        "failing_maps",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            match self.lemma {
                Lemma::Comb => "comb".into(),
                Lemma::Tree => "tree".into(),
            },
            self.params.compact(),
            self.strategy.clone(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.witness.clone().unwrap_or_default(),
            self.bad_pair_count.to_string(),
            self.candidate_count.to_string(),
            fraction_string(&self.ratio),
            self.elapsed_ms.to_string(),
            self.failing_maps.to_string(),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER).expect("in-memory write");
        w.write_record(self.csv_record()).expect("in-memory write");
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let mut r = WitnessReport::new(
            Lemma::Comb,
            Params {
                k: Some(2),
                m: Some(2),
                n: Some(1),
                mprime: None,
            },
            "exhaustive",
            None,
        );
        r.ratio = BigRational::new(2.into(), 4.into());
        r.bad_pair_count = BigUint::from(12u32);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["lemma"], "comb");
        assert_eq!(v["params"]["N"], 1);
        assert_eq!(v["ratio"], "1/2");
        assert_eq!(v["bad_pair_count"], "12");
        assert_eq!(v["witness"], serde_json::Value::Null);
        assert!(v.get("config").is_none());
    }

    #[test]
    fn csv_mirrors_json() {
        let r = WitnessReport::new(
            Lemma::Tree,
            Params {
                k: Some(2),
                n: Some(3),
                ..Default::default()
            },
            "sampled",
            Some(7),
        );
        let text = r.to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), WitnessReport::CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "tree,k=2;N=3,sampled,7,,0,0,0/1,0,0");
    }
}
