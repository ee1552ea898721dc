//! Group descriptors and their JSON wire format.
//!
//! ψ and its normalizations only consume order statistics, so a group is
//! described by one of:
//!
//! * `cyclic` — the order in factored form,
//! * `abelian` — a primary decomposition, one exponent partition per prime,
//! * `spectrum` — an explicit order spectrum plus the group order
//!   (the escape hatch for non-abelian groups such as E(27)).
//!
//! The serialized form, used by the CLI and the test corpus:
//!
//! ```json
//! {"cyclic": [["2","1"],["3","1"]]}
//! {"abelian": [["3",["1","1","1"]]]}
//! {"spectrum": {"1":"1","3":"26"}, "size":"27"}
//! ```
//!
//! All exact integers are decimal strings.

use std::collections::BTreeMap;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::factored::FactoredNatural;
use crate::ratio::parse_natural_str;
use crate::spectrum::{validate_components, OrderSpectrum};
use crate::Natural;

/// Which descriptor class a group was given in. Cyclic ⊂ abelian ⊂ all,
/// so the tag names the strongest class the descriptor certifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorKind {
    Cyclic,
    Abelian,
    Spectrum,
}

impl DescriptorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DescriptorKind::Cyclic => "cyclic",
            DescriptorKind::Abelian => "abelian",
            DescriptorKind::Spectrum => "spectrum",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupDescriptor {
    /// Cyclic group of the given factored order.
    Cyclic(FactoredNatural),
    /// Abelian group `⨉_p ⨉_i C_{p^{λ_i}}`, one `(p, λ)` per prime.
    Abelian(Vec<(u64, Vec<u32>)>),
    /// Arbitrary group known only through its order spectrum.
    Spectrum {
        spectrum: OrderSpectrum,
        order: Natural,
    },
}

impl GroupDescriptor {
    pub fn cyclic(order: FactoredNatural) -> Self {
        GroupDescriptor::Cyclic(order)
    }

    pub fn cyclic_of_u64(n: u64) -> Result<Self> {
        Ok(GroupDescriptor::Cyclic(crate::factored::factorize_u64(n, None)?))
    }

    pub fn abelian(components: Vec<(u64, Vec<u32>)>) -> Result<Self> {
        validate_components(&components)?;
        Ok(GroupDescriptor::Abelian(components))
    }

    pub fn spectrum(spectrum: OrderSpectrum, order: Natural) -> Result<Self> {
        spectrum.validate_for_order(&order)?;
        Ok(GroupDescriptor::Spectrum { spectrum, order })
    }

    /// The non-abelian group of order 27 and exponent 3: one identity,
    /// twenty-six elements of order 3.
    pub fn e27() -> Self {
        let spectrum = OrderSpectrum::from_counts(&[(1, 1), (3, 26)]).unwrap();
        GroupDescriptor::Spectrum {
            spectrum,
            order: Natural::from(27u32),
        }
    }

    /// Built-in groups addressable by name from the CLI.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "e27" | "E27" | "e(27)" | "E(27)" => Some(Self::e27()),
            _ => None,
        }
    }

    pub fn kind(&self) -> DescriptorKind {
        match self {
            GroupDescriptor::Cyclic(_) => DescriptorKind::Cyclic,
            GroupDescriptor::Abelian(_) => DescriptorKind::Abelian,
            GroupDescriptor::Spectrum { .. } => DescriptorKind::Spectrum,
        }
    }

    /// |G| as an expanded integer. For cyclic descriptors this can be
    /// astronomically large; prefer [`Self::order_factored`] when possible.
    pub fn order(&self) -> Natural {
        match self {
            GroupDescriptor::Cyclic(n) => n.value(),
            GroupDescriptor::Abelian(components) => components
                .iter()
                .map(|(p, partition)| {
                    let total: u64 = partition.iter().map(|&l| l as u64).sum();
                    // Total exponent is bounded by validation practice;
                    // saturate defensively rather than wrap.
                    Natural::from(*p).pow(u32::try_from(total).unwrap_or(u32::MAX))
                })
                .product(),
            GroupDescriptor::Spectrum { order, .. } => order.clone(),
        }
    }

    /// |G| in factored form. For the spectrum variant this factors the
    /// stated order, which must fit in 64 bits.
    pub fn order_factored(&self) -> Result<FactoredNatural> {
        match self {
            GroupDescriptor::Cyclic(n) => Ok(n.clone()),
            GroupDescriptor::Abelian(components) => {
                let factors = components
                    .iter()
                    .map(|(p, partition)| {
                        let total: u64 = partition.iter().map(|&l| l as u64).sum();
                        u32::try_from(total)
                            .map(|e| (*p, e))
                            .map_err(|_| Error::resource("abelian exponent sum exceeds u32"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                FactoredNatural::new(factors)
            }
            GroupDescriptor::Spectrum { order, .. } => crate::factored::factorize(order, None),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            GroupDescriptor::Cyclic(n) => {
                let factors: Vec<Value> = n
                    .factors()
                    .iter()
                    .map(|(p, e)| json!([p.to_string(), e.to_string()]))
                    .collect();
                json!({ "cyclic": factors })
            }
            GroupDescriptor::Abelian(components) => {
                let comps: Vec<Value> = components
                    .iter()
                    .map(|(p, partition)| {
                        let lambdas: Vec<Value> =
                            partition.iter().map(|l| Value::String(l.to_string())).collect();
                        json!([p.to_string(), lambdas])
                    })
                    .collect();
                json!({ "abelian": comps })
            }
            GroupDescriptor::Spectrum { spectrum, order } => {
                let mut map = Map::new();
                for (o, c) in spectrum.iter() {
                    map.insert(o.to_string(), Value::String(c.to_string()));
                }
                json!({ "spectrum": map, "size": order.to_string() })
            }
        }
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::parse("descriptor must be a JSON object"))?;
        if let Some(v) = obj.get("cyclic") {
            if obj.len() != 1 {
                return Err(Error::parse("unexpected keys next to \"cyclic\""));
            }
            let factors = parse_factor_pairs(v)?;
            return Ok(GroupDescriptor::Cyclic(FactoredNatural::new(factors)?));
        }
        if let Some(v) = obj.get("abelian") {
            if obj.len() != 1 {
                return Err(Error::parse("unexpected keys next to \"abelian\""));
            }
            let arr = v
                .as_array()
                .ok_or_else(|| Error::parse("\"abelian\" must be an array"))?;
            let mut components = Vec::with_capacity(arr.len());
            for item in arr {
                let pair = item
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::parse("abelian component must be [prime, [parts...]]"))?;
                let p = parse_u64_str(&pair[0])?;
                let parts = pair[1]
                    .as_array()
                    .ok_or_else(|| Error::parse("partition must be an array"))?
                    .iter()
                    .map(parse_u32_str)
                    .collect::<Result<Vec<u32>>>()?;
                components.push((p, parts));
            }
            return Self::abelian(components);
        }
        if let Some(v) = obj.get("spectrum") {
            if obj.len() != 2 || !obj.contains_key("size") {
                return Err(Error::parse(
                    "spectrum descriptor must have exactly the keys \"spectrum\" and \"size\"",
                ));
            }
            let map = v
                .as_object()
                .ok_or_else(|| Error::parse("\"spectrum\" must be an object"))?;
            let mut entries = BTreeMap::new();
            for (order_str, count) in map {
                let order = parse_natural_str(order_str)?;
                let count_str = count
                    .as_str()
                    .ok_or_else(|| Error::parse("spectrum counts must be decimal strings"))?;
                if entries.insert(order, parse_natural_str(count_str)?).is_some() {
                    return Err(Error::parse(format!("duplicate spectrum order {order_str}")));
                }
            }
            let size_str = obj["size"]
                .as_str()
                .ok_or_else(|| Error::parse("\"size\" must be a decimal string"))?;
            let order = parse_natural_str(size_str)?;
            return Self::spectrum(OrderSpectrum::new(entries)?, order);
        }
        Err(Error::parse(
            "descriptor must have one of the keys \"cyclic\", \"abelian\", \"spectrum\"",
        ))
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self> {
        let value: Value =
            serde_json::from_slice(bytes).map_err(|e| Error::parse(format!("invalid JSON: {e}")))?;
        Self::from_json(&value)
    }
}

fn parse_factor_pairs(v: &Value) -> Result<Vec<(u64, u32)>> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::parse("factored order must be an array of [prime, exponent] pairs"))?;
    arr.iter()
        .map(|item| {
            let pair = item
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::parse("factor must be a [prime, exponent] pair"))?;
            Ok((parse_u64_str(&pair[0])?, parse_u32_str(&pair[1])?))
        })
        .collect()
}

fn parse_u64_str(v: &Value) -> Result<u64> {
    let s = v
        .as_str()
        .ok_or_else(|| Error::parse("expected a decimal string"))?;
    let n = parse_natural_str(s)?;
    (&n).try_into()
        .map_err(|_| Error::parse(format!("{s} does not fit in 64 bits")))
}

fn parse_u32_str(v: &Value) -> Result<u32> {
    let s = v
        .as_str()
        .ok_or_else(|| Error::parse("expected a decimal string"))?;
    let n = parse_natural_str(s)?;
    (&n).try_into()
        .map_err(|_| Error::parse(format!("{s} does not fit in 32 bits")))
}

impl Serialize for GroupDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        GroupDescriptor::from_json(&value).map_err(de::Error::custom)
    }
}
