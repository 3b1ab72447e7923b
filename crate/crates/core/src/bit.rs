use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A classical key bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub const BOTH: [Bit; 2] = [Bit::Zero, Bit::One];

    /// All four `(alice, bob)` combinations in row-major order.
    pub const PAIRS: [(Bit, Bit); 4] = [
        (Bit::Zero, Bit::Zero),
        (Bit::Zero, Bit::One),
        (Bit::One, Bit::Zero),
        (Bit::One, Bit::One),
    ];

    pub fn flip(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn is_one(self) -> bool {
        self == Bit::One
    }

    pub fn try_from_u8(v: u8) -> Option<Bit> {
        match v {
            0 => Some(Bit::Zero),
            1 => Some(Bit::One),
            _ => None,
        }
    }
}

impl From<bool> for Bit {
    fn from(b: bool) -> Self {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl Serialize for Bit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Bit::try_from_u8(v)
            .ok_or_else(|| serde::de::Error::custom(format!("bit must be 0 or 1, got {v}")))
    }
}
