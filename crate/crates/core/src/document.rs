//! On-disk JSON layouts: instances, constraints, coresets.

use serde::{Deserialize, Serialize};

use crate::geometry::PointId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub dim: usize,
    pub points: Vec<PointRecord>,
    pub constraint: ConstraintDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: PointId,
    pub group: Option<usize>,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ConstraintDocument {
    Cardinality { k: usize },
    /// Group membership comes from the point labels; `caps[g]` bounds group `g`.
    Partition { caps: Vec<usize> },
    Laminar { sets: Vec<LaminarSetDocument> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaminarSetDocument {
    pub ids: Vec<PointId>,
    pub cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoresetDocument {
    pub regime: String,
    pub ids: Vec<PointId>,
    pub layers: Vec<Vec<PointId>>,
    pub declared_bound: u64,
    pub zeta: f64,
    pub ell: usize,
    /// Ids the coreset was built from; needed to validate composition.
    pub source: Vec<PointId>,
}

/// Serde adapter for log-domain values, which may be infinite.
///
/// Finite values are plain JSON numbers; infinities are the strings
/// `"-inf"` / `"inf"`.
pub mod log_value {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("bad log value {other:?}"))),
            },
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) => super::serialize(x, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap(#[serde(with = "super")] f64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}
