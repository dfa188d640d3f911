//! Check records, summaries and their JSON/CSV forms.

use std::io::Write;

use serde::{Serialize, Serializer};

use super::{CheckCase, CheckId, CheckSelector};
use crate::error::Result;
use crate::seed::label_hash;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordVerdict {
    Pass,
    Fail,
    Skip,
    Error,
}

impl RecordVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordVerdict::Pass => "pass",
            RecordVerdict::Fail => "fail",
            RecordVerdict::Skip => "skip",
            RecordVerdict::Error => "error",
        }
    }
}

/// How strongly a record supports its identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Both sides computed in closed form and compared.
    EqualityProved,
    /// Exact sets on both sides of an inclusion.
    InclusionExact,
    /// Grid certificates used where no closed form is available.
    InclusionEvidenced,
    /// A numeric inequality or identity checked on every relevant grid point.
    Property,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::EqualityProved => "equality-proved",
            Mode::InclusionExact => "inclusion-exact",
            Mode::InclusionEvidenced => "inclusion-evidenced",
            Mode::Property => "property",
        }
    }
}

fn opt_num<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        None => s.serialize_none(),
        Some(x) if x.is_finite() => s.serialize_f64(*x),
        Some(x) if *x > 0.0 => s.serialize_str("inf"),
        Some(x) if *x < 0.0 => s.serialize_str("-inf"),
        Some(_) => s.serialize_str("nan"),
    }
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(|x| {
        if x.is_finite() {
            format!("{x:e}")
        } else {
            format!("{x}")
        }
    })
    .unwrap_or_default()
}

/// One check outcome. Every field needed to reproduce it is included.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: CheckId,
    pub anchor: String,
    pub case: String,
    pub point: Option<Vec<f64>>,
    pub verdict: RecordVerdict,
    pub mode: Mode,
    #[serde(serialize_with = "opt_num")]
    pub measured: Option<f64>,
    #[serde(serialize_with = "opt_num")]
    pub tolerance: Option<f64>,
    /// `tolerance − measured` for upper bounds; positive means room to spare.
    #[serde(serialize_with = "opt_num")]
    pub margin: Option<f64>,
    pub note: String,
}

impl CheckRecord {
    pub fn new(check: CheckId, case: &str, point: Option<Vec<f64>>, mode: Mode) -> Self {
        CheckRecord {
            check,
            anchor: check.anchor().to_string(),
            case: case.to_string(),
            point,
            verdict: RecordVerdict::Skip,
            mode,
            measured: None,
            tolerance: None,
            margin: None,
            note: String::new(),
        }
    }

    /// Pass iff `measured ≤ tolerance`.
    pub fn bound(mut self, measured: f64, tolerance: f64) -> Self {
        self.measured = Some(measured);
        self.tolerance = Some(tolerance);
        self.margin = Some(tolerance - measured);
        self.verdict = if measured <= tolerance {
            RecordVerdict::Pass
        } else {
            RecordVerdict::Fail
        };
        self
    }

    pub fn skip(mut self, why: impl Into<String>) -> Self {
        self.verdict = RecordVerdict::Skip;
        self.note = why.into();
        self
    }

    pub fn error(mut self, why: impl Into<String>) -> Self {
        self.verdict = RecordVerdict::Error;
        self.note = why.into();
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else if !note.is_empty() {
            self.note = format!("{}; {note}", self.note);
        }
        self
    }

    pub fn fail_if(mut self, failed: bool, why: impl Into<String>) -> Self {
        if failed && self.verdict == RecordVerdict::Pass {
            self.verdict = RecordVerdict::Fail;
            self = self.note(why);
        }
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub skip: usize,
    pub error: usize,
}

/// Identifies the inputs of a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fingerprint {
    pub seed: u64,
    pub checks: Vec<CheckId>,
    pub cases: Vec<CaseStamp>,
    /// Hash of the serialized corpus.
    pub corpus_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseStamp {
    pub id: String,
    pub grid: String,
}

impl Fingerprint {
    pub fn new(corpus: &[CheckCase], selector: &CheckSelector, seed: u64) -> Self {
        let text = serde_json::to_string(corpus).unwrap_or_default();
        Fingerprint {
            seed,
            checks: selector.ids().to_vec(),
            cases: corpus
                .iter()
                .map(|c| CaseStamp {
                    id: c.id.clone(),
                    grid: c.grid.to_string(),
                })
                .collect(),
            corpus_hash: format!("{:016x}", label_hash(&text)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub summary: Summary,
    pub fingerprint: Fingerprint,
    pub records: Vec<CheckRecord>,
}

impl CheckReport {
    pub fn new(fingerprint: Fingerprint, records: Vec<CheckRecord>) -> Self {
        let mut summary = Summary {
            total: records.len(),
            ..Summary::default()
        };
        for r in &records {
            match r.verdict {
                RecordVerdict::Pass => summary.pass += 1,
                RecordVerdict::Fail => summary.fail += 1,
                RecordVerdict::Skip => summary.skip += 1,
                RecordVerdict::Error => summary.error += 1,
            }
        }
        CheckReport {
            summary,
            fingerprint,
            records,
        }
    }

    /// True when nothing failed or errored.
    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0 && self.summary.error == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn records_for(&self, check: CheckId) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(move |r| r.check == check)
    }

    /// One CSV row per record.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "check",
            "case",
            "point",
            "verdict",
            "mode",
            "measured",
            "tolerance",
            "margin",
            "anchor",
            "note",
        ])?;
        for r in &self.records {
            let point = r
                .point
                .as_ref()
                .map(|p| {
                    p.iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .unwrap_or_default();
            w.write_record([
                r.check.as_str(),
                &r.case,
                &point,
                r.verdict.as_str(),
                r.mode.as_str(),
                &fmt_num(r.measured),
                &fmt_num(r.tolerance),
                &fmt_num(r.margin),
                &r.anchor,
                &r.note,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_helpers_and_serialization() {
        let r = CheckRecord::new(CheckId::DomInS0, "c", Some(vec![1.0]), Mode::Property)
            .bound(0.5, 1.0);
        assert_eq!(r.verdict, RecordVerdict::Pass);
        assert_eq!(r.margin, Some(0.5));
        let r = r.fail_if(true, "extra");
        assert_eq!(r.verdict, RecordVerdict::Fail);
        let inf =
            CheckRecord::new(CheckId::DomInS0, "c", None, Mode::Property).bound(f64::INFINITY, 1.0);
        let v = serde_json::to_value(&inf).unwrap();
        assert_eq!(v["measured"], "inf");
        assert_eq!(v["margin"], "-inf");
        assert_eq!(v["verdict"], "fail");
        assert_eq!(v["check"], "dom_in_s0");
        let report = CheckReport::new(
            Fingerprint {
                seed: 0,
                checks: vec![],
                cases: vec![],
                corpus_hash: String::new(),
            },
            vec![
                inf,
                CheckRecord::new(CheckId::DomInS0, "c", None, Mode::Property).skip("why"),
            ],
        );
        assert_eq!(
            report.summary,
            Summary {
                total: 2,
                pass: 0,
                fail: 1,
                skip: 1,
                error: 0
            }
        );
        let csv = report.to_csv_string();
        assert!(csv.starts_with("check,case,point,verdict"));
        assert_eq!(csv.lines().count(), 3);
    }
}
