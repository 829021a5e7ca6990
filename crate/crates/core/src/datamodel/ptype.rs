use std::fmt;

use serde::{Deserialize, Serialize};

use super::DataError;

/// Number of procedure categories.
pub const PROCEDURE_TYPES: usize = 5;

const LABELS: [&str; PROCEDURE_TYPES] = [
    "Colorectal",
    "Upper Gastrointestinal and Bariatric",
    "Hepato-Pancreatico-Biliary",
    "General Laparoscopic",
    "Singular case",
];

/// Reference average length in minutes for each category, as observed on the
/// clinical multi-type collection. Used as the default synthetic scale.
pub const REFERENCE_MINUTES: [f64; PROCEDURE_TYPES] = [156.0, 107.0, 102.0, 41.0, 91.0];

/// Reference case counts for each category (80 procedures in total).
pub const REFERENCE_COUNTS: [u32; PROCEDURE_TYPES] = [39, 11, 4, 21, 5];

/// Laparoscopic procedure category, identified by 1..=5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ProcedureType(u8);

impl ProcedureType {
    pub fn new(id: u8) -> Result<Self, DataError> {
        if (1..=PROCEDURE_TYPES as u8).contains(&id) {
            Ok(Self(id))
        } else {
            Err(DataError::InvalidProcedureType(id as i64))
        }
    }

    pub fn all() -> impl Iterator<Item = ProcedureType> {
        (1..=PROCEDURE_TYPES as u8).map(ProcedureType)
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Zero-based position, for table lookups.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn label(self) -> &'static str {
        LABELS[self.index()]
    }

    pub fn one_hot(self) -> [f64; PROCEDURE_TYPES] {
        let mut out = [0.0; PROCEDURE_TYPES];
        out[self.index()] = 1.0;
        out
    }
}

impl TryFrom<u8> for ProcedureType {
    type Error = DataError;

    fn try_from(id: u8) -> Result<Self, Self::Error> {
        Self::new(id)
    }
}

impl From<ProcedureType> for u8 {
    fn from(t: ProcedureType) -> u8 {
        t.0
    }
}

impl fmt::Display for ProcedureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.0, self.label())
    }
}
