//! Serde helper for floats that may be infinite. JSON has no infinity literal, so
//! `±inf` is written as the strings `"inf"` / `"-inf"`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::Scalar;

pub fn serialize<T, S>(value: &T, serializer: S) -> Result<S::Ok, S::Error>
where
    T: Scalar + Serialize,
    S: Serializer,
{
    if value.is_infinite() {
        serializer.serialize_str(if value.is_sign_positive() { "inf" } else { "-inf" })
    } else {
        value.serialize(serializer)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr<T> {
    Number(T),
    Text(String),
}

pub fn deserialize<'de, T, D>(deserializer: D) -> Result<T, D::Error>
where
    T: Scalar + Deserialize<'de>,
    D: Deserializer<'de>,
{
    match Repr::<T>::deserialize(deserializer)? {
        Repr::Number(v) => Ok(v),
        Repr::Text(s) => match s.as_str() {
            "inf" => Ok(T::infinity()),
            "-inf" => Ok(T::neg_infinity()),
            other => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {other:?}"
            ))),
        },
    }
}
