use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One of the eleven non-functional requirement categories of the PROMISE
/// taxonomy. Variant order follows the canonical code order and drives the
/// order of NFR subsections in rendered documents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NfrSubtype {
    Availability,
    FaultTolerance,
    Legal,
    LookAndFeel,
    Maintainability,
    Operational,
    Performance,
    Portability,
    Scalability,
    Security,
    Usability,
}

impl NfrSubtype {
    pub const ALL: [NfrSubtype; 11] = [
        NfrSubtype::Availability,
        NfrSubtype::FaultTolerance,
        NfrSubtype::Legal,
        NfrSubtype::LookAndFeel,
        NfrSubtype::Maintainability,
        NfrSubtype::Operational,
        NfrSubtype::Performance,
        NfrSubtype::Portability,
        NfrSubtype::Scalability,
        NfrSubtype::Security,
        NfrSubtype::Usability,
    ];

    pub fn code(self) -> &'static str {
        match self {
            NfrSubtype::Availability => "A",
            NfrSubtype::FaultTolerance => "FT",
            NfrSubtype::Legal => "L",
            NfrSubtype::LookAndFeel => "LF",
            NfrSubtype::Maintainability => "MN",
            NfrSubtype::Operational => "O",
            NfrSubtype::Performance => "PE",
            NfrSubtype::Portability => "PO",
            NfrSubtype::Scalability => "SC",
            NfrSubtype::Security => "SE",
            NfrSubtype::Usability => "US",
        }
    }

    /// Human-readable subsection title.
    pub fn name(self) -> &'static str {
        match self {
            NfrSubtype::Availability => "Availability",
            NfrSubtype::FaultTolerance => "Fault Tolerance",
            NfrSubtype::Legal => "Legal",
            NfrSubtype::LookAndFeel => "Look & Feel",
            NfrSubtype::Maintainability => "Maintainability",
            NfrSubtype::Operational => "Operational",
            NfrSubtype::Performance => "Performance",
            NfrSubtype::Portability => "Portability",
            NfrSubtype::Scalability => "Scalability",
            NfrSubtype::Security => "Security",
            NfrSubtype::Usability => "Usability",
        }
    }

    pub fn from_code(code: &str) -> Option<NfrSubtype> {
        let code = code.trim();
        NfrSubtype::ALL
            .into_iter()
            .find(|s| s.code().eq_ignore_ascii_case(code))
    }
}

impl fmt::Display for NfrSubtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for NfrSubtype {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for NfrSubtype {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        NfrSubtype::from_code(&code)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown NFR subtype `{code}`")))
    }
}

/// Functional, or non-functional with exactly one subtype.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RequirementLabel {
    Functional,
    NonFunctional(NfrSubtype),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown requirement label `{0}`")]
pub struct UnknownLabel(pub String);

impl RequirementLabel {
    /// All twelve canonical labels, `F` first.
    pub fn all() -> impl Iterator<Item = RequirementLabel> {
        std::iter::once(RequirementLabel::Functional)
            .chain(NfrSubtype::ALL.into_iter().map(RequirementLabel::NonFunctional))
    }

    pub fn is_functional(self) -> bool {
        matches!(self, RequirementLabel::Functional)
    }

    pub fn subtype(self) -> Option<NfrSubtype> {
        match self {
            RequirementLabel::Functional => None,
            RequirementLabel::NonFunctional(s) => Some(s),
        }
    }
}

/// Case-insensitive; surrounding whitespace is ignored.
pub fn parse_label(code: &str) -> Result<RequirementLabel, UnknownLabel> {
    let trimmed = code.trim();
    if trimmed.eq_ignore_ascii_case("F") {
        return Ok(RequirementLabel::Functional);
    }
    NfrSubtype::from_code(trimmed)
        .map(RequirementLabel::NonFunctional)
        .ok_or_else(|| UnknownLabel(code.to_string()))
}

pub fn format_label(label: RequirementLabel) -> &'static str {
    match label {
        RequirementLabel::Functional => "F",
        RequirementLabel::NonFunctional(s) => s.code(),
    }
}

impl fmt::Display for RequirementLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(format_label(*self))
    }
}

impl FromStr for RequirementLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_label(s)
    }
}

impl Serialize for RequirementLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(format_label(*self))
    }
}

impl<'de> Deserialize<'de> for RequirementLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        parse_label(&code).map_err(serde::de::Error::custom)
    }
}

/// Marker used for requirements the classifier could not label.
pub const UNCLASSIFIED: &str = "UNCLASSIFIED";

/// The label a generation run actually attached to a requirement.
///
/// Evaluation only ever sees `Canonical`; `Custom` exists for user-declared
/// subtypes and `Unclassified` for items the model never labeled parsably.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AssignedLabel {
    Canonical(RequirementLabel),
    Custom(String),
    Unclassified,
}

impl AssignedLabel {
    pub fn canonical(&self) -> Option<RequirementLabel> {
        match self {
            AssignedLabel::Canonical(l) => Some(*l),
            _ => None,
        }
    }

    pub fn code(&self) -> &str {
        match self {
            AssignedLabel::Canonical(l) => format_label(*l),
            AssignedLabel::Custom(code) => code,
            AssignedLabel::Unclassified => UNCLASSIFIED,
        }
    }

    /// Inverse of [`AssignedLabel::code`]. Canonical codes win; anything else
    /// that is not the unclassified marker is treated as a custom code.
    pub fn from_code(code: &str) -> AssignedLabel {
        let code = code.trim();
        if let Ok(label) = parse_label(code) {
            AssignedLabel::Canonical(label)
        } else if code == UNCLASSIFIED {
            AssignedLabel::Unclassified
        } else {
            AssignedLabel::Custom(code.to_string())
        }
    }
}

impl From<RequirementLabel> for AssignedLabel {
    fn from(label: RequirementLabel) -> Self {
        AssignedLabel::Canonical(label)
    }
}

impl Serialize for AssignedLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for AssignedLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        if code.trim().is_empty() {
            return Err(serde::de::Error::custom("empty label code"));
        }
        Ok(AssignedLabel::from_code(&code))
    }
}
