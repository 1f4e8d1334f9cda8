use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "PASS-vacuous")]
    PassVacuous,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "FLAGGED")]
    Flagged,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassVacuous)
    }

    /// Combine verdicts: any failure fails, any flag flags, all vacuous stays vacuous.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Flagged, _) | (_, Flagged) => Flagged,
            (PassVacuous, PassVacuous) => PassVacuous,
            _ => Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::PassVacuous => "PASS-vacuous",
            Verdict::Fail => "FAIL",
            Verdict::Flagged => "FLAGGED",
        })
    }
}
