use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Character tags: person Begin/Inside/End, location Begin/Inside/End,
/// other. The declaration order is the decoding tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tag {
    NB,
    NI,
    NE,
    AB,
    AI,
    AE,
    O,
}

pub const NUM_TAGS: usize = 7;

impl Tag {
    pub const ALL: [Tag; NUM_TAGS] = [Tag::NB, Tag::NI, Tag::NE, Tag::AB, Tag::AI, Tag::AE, Tag::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Tag {
        Tag::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::NB => "NB",
            Tag::NI => "NI",
            Tag::NE => "NE",
            Tag::AB => "AB",
            Tag::AI => "AI",
            Tag::AE => "AE",
            Tag::O => "O",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| Error::Invalid(format!("unknown tag `{s}`")))
    }
}
