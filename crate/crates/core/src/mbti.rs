//! The MBTI type system: four binary trait dimensions and the sixteen types
//! they combine into.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// One of the four binary trait axes, in canonical order EI, NS, TF, JP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    EI,
    NS,
    TF,
    JP,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [Dimension::EI, Dimension::NS, Dimension::TF, Dimension::JP];

    /// Position of this dimension inside a type code.
    pub fn index(self) -> usize {
        self as usize
    }

    /// `(first, second)` pole letters. The first pole is the positive class
    /// everywhere scores or confusion matrices are computed.
    pub fn poles(self) -> (char, char) {
        match self {
            Dimension::EI => ('E', 'I'),
            Dimension::NS => ('N', 'S'),
            Dimension::TF => ('T', 'F'),
            Dimension::JP => ('J', 'P'),
        }
    }

    pub fn letter(self, pole: Pole) -> char {
        let (first, second) = self.poles();
        match pole {
            Pole::First => first,
            Pole::Second => second,
        }
    }

    /// Resolves a letter (case-insensitive) to a pole of this dimension.
    pub fn pole_of(self, letter: char) -> Option<Pole> {
        let (first, second) = self.poles();
        let upper = letter.to_ascii_uppercase();
        if upper == first {
            Some(Pole::First)
        } else if upper == second {
            Some(Pole::Second)
        } else {
            None
        }
    }

    /// Column label as printed in report tables, e.g. `E/I`.
    pub fn label(self) -> &'static str {
        match self {
            Dimension::EI => "E/I",
            Dimension::NS => "N/S",
            Dimension::TF => "T/F",
            Dimension::JP => "J/P",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which side of a dimension a trait falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pole {
    First,
    Second,
}

impl Pole {
    pub fn is_first(self) -> bool {
        self == Pole::First
    }

    pub fn flipped(self) -> Pole {
        match self {
            Pole::First => Pole::Second,
            Pole::Second => Pole::First,
        }
    }
}

/// One pole choice per dimension, ordered EI, NS, TF, JP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraitVector(pub [Pole; 4]);

impl TraitVector {
    pub fn pole(&self, dim: Dimension) -> Pole {
        self.0[dim.index()]
    }

    pub fn with_pole(mut self, dim: Dimension, pole: Pole) -> Self {
        self.0[dim.index()] = pole;
        self
    }

    /// Builds a vector from four letters, e.g. `['I', 'N', 'F', 'J']`.
    pub fn from_letters(letters: [char; 4]) -> Result<Self, InvalidLabel> {
        let mut poles = [Pole::First; 4];
        for (dim, letter) in Dimension::ALL.into_iter().zip(letters) {
            poles[dim.index()] = dim
                .pole_of(letter)
                .ok_or_else(|| InvalidLabel(letters.iter().collect()))?;
        }
        Ok(TraitVector(poles))
    }

    pub fn letters(&self) -> [char; 4] {
        Dimension::ALL.map(|d| d.letter(self.pole(d)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid MBTI label {0:?}")]
pub struct InvalidLabel(pub String);

/// One of the sixteen personality types.
///
/// Internally a 4-bit index: bit `i` is set when dimension `i` takes its
/// second pole, so index 0 is ENTJ and index 15 is ISFP. Ordering and
/// tie-breaking use the alphabetical order of the four-letter code.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MbtiType(u8);

impl MbtiType {
    pub const COUNT: usize = 16;

    /// All sixteen types in index order.
    pub const ALL: [MbtiType; 16] = {
        let mut all = [MbtiType(0); 16];
        let mut i = 0;
        while i < 16 {
            all[i] = MbtiType(i as u8);
            i += 1;
        }
        all
    };

    pub fn from_index(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(MbtiType(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_traits(traits: TraitVector) -> Self {
        let bits = Dimension::ALL
            .into_iter()
            .filter(|d| !traits.pole(*d).is_first())
            .fold(0u8, |acc, d| acc | (1 << d.index()));
        MbtiType(bits)
    }

    pub fn traits(self) -> TraitVector {
        TraitVector(Dimension::ALL.map(|d| {
            if self.0 & (1 << d.index()) == 0 {
                Pole::First
            } else {
                Pole::Second
            }
        }))
    }

    pub fn pole(self, dim: Dimension) -> Pole {
        self.traits().pole(dim)
    }

    pub fn code(self) -> String {
        self.traits().letters().iter().collect()
    }

    /// Case-insensitive parse with surrounding whitespace trimmed.
    pub fn parse(s: &str) -> Result<Self, InvalidLabel> {
        let trimmed = s.trim();
        let letters: Vec<char> = trimmed.chars().collect();
        let letters: [char; 4] = letters.try_into().map_err(|_| InvalidLabel(s.to_string()))?;
        TraitVector::from_letters(letters)
            .map(MbtiType::from_traits)
            .map_err(|_| InvalidLabel(s.to_string()))
    }
}

/// Concatenates the four chosen pole letters into a type.
pub fn type_from_traits(traits: TraitVector) -> MbtiType {
    MbtiType::from_traits(traits)
}

pub fn traits_from_type(t: MbtiType) -> TraitVector {
    t.traits()
}

pub fn parse_type_label(s: &str) -> Result<MbtiType, InvalidLabel> {
    MbtiType::parse(s)
}

impl Ord for MbtiType {
    fn cmp(&self, other: &Self) -> Ordering {
        self.traits().letters().cmp(&other.traits().letters())
    }
}

impl PartialOrd for MbtiType {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MbtiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl fmt::Debug for MbtiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MbtiType({})", self.code())
    }
}

impl FromStr for MbtiType {
    type Err = InvalidLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MbtiType::parse(s)
    }
}

impl Serialize for MbtiType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for MbtiType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        MbtiType::parse(&s).map_err(serde::de::Error::custom)
    }
}
