//! Verdict types shared by every criterion.
//!
//! A verdict separates what is known in closed form (`*_ANALYTIC`) from what
//! was only observed on a finite window of log-radii (`*_NUMERIC_WINDOW`).

use std::collections::BTreeMap;
use std::fmt;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    HoldsAnalytic,
    FailsAnalytic,
    HoldsNumericWindow,
    FailsNumericWindow,
    Inconclusive,
}

impl Status {
    pub fn holds(self) -> bool {
        matches!(self, Status::HoldsAnalytic | Status::HoldsNumericWindow)
    }

    pub fn fails(self) -> bool {
        matches!(self, Status::FailsAnalytic | Status::FailsNumericWindow)
    }

    pub fn is_analytic(self) -> bool {
        matches!(self, Status::HoldsAnalytic | Status::FailsAnalytic)
    }

    pub fn holding(analytic: bool) -> Status {
        if analytic {
            Status::HoldsAnalytic
        } else {
            Status::HoldsNumericWindow
        }
    }

    pub fn failing(analytic: bool) -> Status {
        if analytic {
            Status::FailsAnalytic
        } else {
            Status::FailsNumericWindow
        }
    }

    /// Analytic truth value: `HOLDS_ANALYTIC` or `FAILS_ANALYTIC`.
    pub fn analytic(holds: bool) -> Status {
        if holds {
            Status::HoldsAnalytic
        } else {
            Status::FailsAnalytic
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::HoldsAnalytic => "HOLDS_ANALYTIC",
            Status::FailsAnalytic => "FAILS_ANALYTIC",
            Status::HoldsNumericWindow => "HOLDS_NUMERIC_WINDOW",
            Status::FailsNumericWindow => "FAILS_NUMERIC_WINDOW",
            Status::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Rounds to 12 significant digits so that serialized reports are stable.
pub fn round_sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Scalar evidence keyed by name; serialized with 12 significant digits and
/// non-finite values as strings (`"inf"`, `"-inf"`, `"nan"`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence(BTreeMap<String, f64>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.0.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn extend(&mut self, other: &Evidence) {
        for (k, v) in other.iter() {
            self.insert(k, v);
        }
    }
}

impl Serialize for Evidence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, &Num(*v))?;
        }
        map.end()
    }
}

/// f64 wrapper with the report's fixed float formatting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_nan() {
            serializer.serialize_str("nan")
        } else if x == f64::INFINITY {
            serializer.serialize_str("inf")
        } else if x == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_f64(round_sig12(x))
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Verdict {
    pub status: Status,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn new(status: Status) -> Self {
        Verdict {
            status,
            evidence: Evidence::new(),
        }
    }

    pub fn inconclusive() -> Self {
        Verdict::new(Status::Inconclusive)
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.evidence.insert(key, value);
        self
    }

    pub fn holds(&self) -> bool {
        self.status.holds()
    }

    pub fn fails(&self) -> bool {
        self.status.fails()
    }
}

/// Which result a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, Deserialize)]
pub enum PaperTag {
    Prop1,
    #[serde(rename = "Prop1-Corollary")]
    Prop1Corollary,
    Prop2,
    Prop3,
    Thm2,
    Appendix,
}

impl PaperTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PaperTag::Prop1 => "Prop1",
            PaperTag::Prop1Corollary => "Prop1-Corollary",
            PaperTag::Prop2 => "Prop2",
            PaperTag::Prop3 => "Prop3",
            PaperTag::Thm2 => "Thm2",
            PaperTag::Appendix => "Appendix",
        }
    }
}

impl fmt::Display for PaperTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A named verdict together with the result it was derived from. This is the
/// unit of the JSON report: `{criterion, status, evidence, paper_tag}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Finding {
    pub criterion: String,
    pub status: Status,
    pub evidence: Evidence,
    pub paper_tag: PaperTag,
}

impl Finding {
    pub fn new(criterion: &str, verdict: Verdict, tag: PaperTag) -> Self {
        Finding {
            criterion: criterion.to_string(),
            status: verdict.status,
            evidence: verdict.evidence,
            paper_tag: tag,
        }
    }

    pub fn holds(&self) -> bool {
        self.status.holds()
    }

    pub fn fails(&self) -> bool {
        self.status.fails()
    }
}
