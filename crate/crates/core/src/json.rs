//! JSON schemas shared by the CLI and the caches.
//!
//! Integers below 2^53 are written as JSON numbers and larger ones as
//! decimal strings; both forms are accepted on input.

use crate::composition::Composition;
use crate::error::CoreError;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use std::str::FromStr;

const SAFE: u64 = 1 << 53;

/// A big integer with the number-or-string JSON encoding.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.abs().to_u64() {
            Some(m) if m < SAFE => s.serialize_i64(self.0.to_i64().expect("small")),
            _ => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => n
                .as_i64()
                .map(BigInt::from)
                .or_else(|| n.as_u64().map(BigInt::from))
                .map(JsonInt)
                .ok_or_else(|| D::Error::custom(format!("{n} is not an exact integer"))),
            Value::String(t) => BigInt::from_str(t.trim())
                .map(JsonInt)
                .map_err(|_| D::Error::custom(format!("{t:?} is not an integer"))),
            other => Err(D::Error::custom(format!("expected an integer, got {other}"))),
        }
    }
}

impl From<BigInt> for JsonInt {
    fn from(x: BigInt) -> Self {
        JsonInt(x)
    }
}

impl From<&BigInt> for JsonInt {
    fn from(x: &BigInt) -> Self {
        JsonInt(x.clone())
    }
}

/// A big integer always written as a decimal string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecInt(pub BigInt);

impl Serialize for DecInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for DecInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        JsonInt::deserialize(d).map(|j| DecInt(j.0))
    }
}

impl From<BigInt> for DecInt {
    fn from(x: BigInt) -> Self {
        DecInt(x)
    }
}

/// Serde adapter writing a `BigInt` as a decimal string.
pub mod dec_string {
    use super::*;

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        JsonInt::deserialize(d).map(|j| j.0)
    }
}

/// Canonical instance record `{"n","k","parts"}`; `"blocks"` is accepted
/// instead of `"parts"` on input and used on output when the composition is
/// too long to list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: JsonInt,
    pub k: JsonInt,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<Vec<JsonInt>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<(JsonInt, JsonInt)>>,
}

/// Part lists longer than this are written in block form.
pub const LIST_LIMIT: u64 = 10_000;

impl InstanceJson {
    pub fn new(n: &BigInt, k: &BigInt, comp: &Composition) -> Self {
        let listable = comp.len().to_u64().is_some_and(|l| l <= LIST_LIMIT);
        let (parts, blocks) = if listable {
            let parts = comp.parts().expect("short").into_iter().map(|p| JsonInt(BigInt::from(p))).collect();
            (Some(parts), None)
        } else {
            let blocks = comp
                .blocks()
                .iter()
                .map(|b| (JsonInt(BigInt::from(b.size)), JsonInt(b.mult.clone())))
                .collect();
            (None, Some(blocks))
        };
        Self { n: JsonInt(n.clone()), k: JsonInt(k.clone()), parts, blocks }
    }

    /// Decodes the composition, insisting on exactly one of the two forms.
    pub fn composition(&self) -> Result<Composition, CoreError> {
        let size = |x: &JsonInt| {
            x.0.to_u64().ok_or_else(|| CoreError::TooLarge(format!("part size {}", x.0)))
        };
        match (&self.parts, &self.blocks) {
            (Some(parts), None) => {
                let mut raw = Vec::with_capacity(parts.len());
                for (i, p) in parts.iter().enumerate() {
                    if !p.0.is_positive() {
                        return Err(CoreError::NonPositivePart { index: i + 1 });
                    }
                    raw.push(size(p)?);
                }
                Composition::from_parts(&raw)
            }
            (None, Some(blocks)) => {
                let mut out = Vec::with_capacity(blocks.len());
                for (q, e) in blocks {
                    if !q.0.is_positive() {
                        return Err(CoreError::NonPositivePart { index: 0 });
                    }
                    out.push((size(q)?, e.0.clone()));
                }
                Composition::from_blocks(out)
            }
            _ => Err(CoreError::Schema("an instance needs exactly one of \"parts\" or \"blocks\"".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_or_string() {
        let small: JsonInt = serde_json::from_str("42").unwrap();
        let big: JsonInt = serde_json::from_str("\"123456789012345678901234567890\"").unwrap();
        assert_eq!(serde_json::to_string(&small).unwrap(), "42");
        assert_eq!(serde_json::to_string(&big).unwrap(), "\"123456789012345678901234567890\"");
        let edge = JsonInt(BigInt::from(SAFE));
        assert_eq!(serde_json::to_string(&edge).unwrap(), format!("\"{SAFE}\""));
        assert!(serde_json::from_str::<JsonInt>("1.5").is_err());
    }

    #[test]
    fn instance_round_trip() {
        let j: InstanceJson = serde_json::from_str(r#"{"n":39,"k":13,"blocks":[[2,9],[3,2]]}"#).unwrap();
        let comp = j.composition().unwrap();
        assert_eq!(comp.to_string(), "[2^9, 3^2]");
        let out = InstanceJson::new(&BigInt::from(39), &BigInt::from(13), &comp);
        let text = serde_json::to_string(&out).unwrap();
        assert_eq!(text, r#"{"n":39,"k":13,"parts":[2,2,2,2,2,2,2,2,2,3,3]}"#);
        let back: InstanceJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.composition().unwrap(), comp);
    }
}
