use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use cslab::report::fraction_string;
use cslab::WitnessReport;

use crate::args::Format;

/// Exit status of a completed run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass = 0,
    Counterexample = 1,
    Threshold = 3,
}

/// A result ready to print in any of the three formats.
pub struct Rendered {
    json: Value,
    csv: Vec<Vec<String>>,
    rows: Vec<(String, String)>,
    pub verdict: Verdict,
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

impl Rendered {
    pub fn from_fields(fields: Vec<(&str, Value)>, verdict: Verdict) -> Self {
        let rows = fields
            .iter()
            .map(|(k, v)| (k.to_string(), plain(v)))
            .collect();
        let csv = vec![
            fields.iter().map(|(k, _)| k.to_string()).collect(),
            fields.iter().map(|(_, v)| plain(v)).collect(),
        ];
        let json = Value::Object(
            fields
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v))
                .collect::<Map<_, _>>(),
        );
        Rendered {
            json,
            csv,
            rows,
            verdict,
        }
    }

    pub fn from_report(report: &WitnessReport) -> Self {
        let mut rows = vec![
            ("lemma".into(), format!("{:?}", report.lemma).to_lowercase()),
            ("params".into(), report.params.compact()),
            ("strategy".into(), report.strategy.clone()),
            (
                "seed".into(),
                report
                    .seed
                    .map(|s| s.to_string())
                    .unwrap_or_else(|| "-".into()),
            ),
            ("tested maps".into(), report.tested_maps.to_string()),
            ("failing maps".into(), report.failing_maps.to_string()),
            (
                "witness".into(),
                report.witness.clone().unwrap_or_else(|| "-".into()),
            ),
            ("bad pairs".into(), report.bad_pair_count.to_string()),
            ("candidates".into(), report.candidate_count.to_string()),
            ("ratio".into(), fraction_string(&report.ratio)),
            ("elapsed ms".into(), report.elapsed_ms.to_string()),
        ];
        for (k, v) in &report.extra {
            rows.push((k.replace('_', " "), plain(v)));
        }
        if let Some(c) = &report.counterexample {
            rows.push(("counterexample".into(), c.trim_end().to_owned()));
        }
        let verdict = if report.passed() {
            Verdict::Pass
        } else {
            Verdict::Counterexample
        };
        Rendered {
            json: serde_json::to_value(report).expect("report serializes"),
            csv: vec![
                WitnessReport::CSV_HEADER
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                report.csv_record(),
            ],
            rows,
            verdict,
        }
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json)?;
                writeln!(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                for row in &self.csv {
                    w.write_record(row)?;
                }
                w.flush()
            }
            Format::Table => {
                let width = self.rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &self.rows {
                    let mut lines = v.lines();
                    writeln!(out, "{k:<width$}  {}", lines.next().unwrap_or(""))?;
                    for line in lines {
                        writeln!(out, "{:width$}  {line}", "")?;
                    }
                }
                Ok(())
            }
        }
    }
}

pub fn open(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}
