//! Certificates: criterion, comparison, castle audit and the non-almost-
//! finiteness report. Every certificate serializes to JSON with a `kind`
//! tag and `"v": 1`, and re-verifies from that JSON alone.

mod atoms;
mod castle;
mod comparison;
mod criterion;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use atoms::{boolean_atoms, Atoms};
pub use castle::{
    audit_castle, random_castle, transversal_castle, Castle, CastleAudit, CastleLevel, TowerAudit,
};
pub use comparison::{comparison_certificate, ComparisonCertificate, Piece};
pub use criterion::{certify, verify_criterion, CriterionCertificate, GammaRecord};
pub use report::{non_af_report, ChainStep, NonAfReport, ReportRow};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Criterion,
    Comparison,
    CastleAudit,
    NonAfReport,
}

/// Any certificate, dispatched on its `kind` tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyCertificate {
    Criterion(Box<CriterionCertificate>),
    Comparison(Box<ComparisonCertificate>),
    CastleAudit(Box<CastleAudit>),
    NonAfReport(Box<NonAfReport>),
}

#[derive(Deserialize)]
struct Header {
    kind: Kind,
    v: u32,
}

impl AnyCertificate {
    pub fn from_json(text: &str) -> Result<AnyCertificate> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let header: Header = serde_json::from_value(value.clone())?;
        if header.v != VERSION {
            return Err(Error::InvalidCertificate(format!(
                "unsupported version {}",
                header.v
            )));
        }
        Ok(match header.kind {
            Kind::Criterion => AnyCertificate::Criterion(serde_json::from_value(value)?),
            Kind::Comparison => AnyCertificate::Comparison(serde_json::from_value(value)?),
            Kind::CastleAudit => AnyCertificate::CastleAudit(serde_json::from_value(value)?),
            Kind::NonAfReport => AnyCertificate::NonAfReport(serde_json::from_value(value)?),
        })
    }

    pub fn kind(&self) -> Kind {
        match self {
            AnyCertificate::Criterion(_) => Kind::Criterion,
            AnyCertificate::Comparison(_) => Kind::Comparison,
            AnyCertificate::CastleAudit(_) => Kind::CastleAudit,
            AnyCertificate::NonAfReport(_) => Kind::NonAfReport,
        }
    }

    /// The recorded verdict, after checking that recomputation agrees with it.
    pub fn reverify(&self, budget: u64) -> Result<bool> {
        match self {
            AnyCertificate::Criterion(c) => c.reverify(),
            AnyCertificate::Comparison(c) => c.reverify(),
            AnyCertificate::CastleAudit(c) => c.reverify(budget),
            AnyCertificate::NonAfReport(c) => c.reverify(),
        }
    }
}
