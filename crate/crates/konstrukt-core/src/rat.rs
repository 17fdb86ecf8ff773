//! Exact rational scalars and their serialized `"p/q"` form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The scalar type used everywhere: arbitrary-precision rationals.
pub type Q = BigRational;

/// Shorthand for an integer rational.
pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Shorthand for the fraction `n/d`.
pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Renders a rational as `"p"` or `"p/q"` with positive denominator.
pub fn q_to_string(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parses `"p"` or `"p/q"`.
pub fn q_from_str(s: &str) -> Result<Q, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = num.parse().map_err(|e| format!("bad numerator {s:?}: {e}"))?;
    let d: BigInt = den.parse().map_err(|e| format!("bad denominator {s:?}: {e}"))?;
    if d.is_zero() {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Q::new(n, d))
}

/// True if `x` is a nonnegative integer.
pub fn is_nonneg_int(x: &Q) -> bool {
    x.denom().is_one() && !x.numer().is_negative()
}

/// Serde adapter: `Vec<Q>` as a list of `"p/q"` strings.
pub mod serde_qvec {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(q_to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Q>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(de)?;
        raw.iter().map(|s| q_from_str(s).map_err(D::Error::custom)).collect()
    }
}

/// Serde adapter: rank-3 nested `Vec<Q>` (structure-constant tables).
pub mod serde_qvec3 {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Vec<Q>>], ser: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<Vec<Vec<String>>> = v
            .iter()
            .map(|a| a.iter().map(|b| b.iter().map(q_to_string).collect()).collect())
            .collect();
        ser.collect_seq(raw)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<Vec<Q>>>, D::Error> {
        let raw: Vec<Vec<Vec<String>>> = Vec::deserialize(de)?;
        raw.iter()
            .map(|a| {
                a.iter()
                    .map(|b| {
                        b.iter()
                            .map(|s| q_from_str(s).map_err(D::Error::custom))
                            .collect::<Result<Vec<Q>, D::Error>>()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Serde adapter: optional rank-3 table.
pub mod serde_opt_qvec3 {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        v: &Option<Vec<Vec<Vec<Q>>>>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let raw: Option<Vec<Vec<Vec<String>>>> = v.as_ref().map(|t| {
            t.iter()
                .map(|a| a.iter().map(|b| b.iter().map(q_to_string).collect()).collect())
                .collect()
        });
        raw.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> Result<Option<Vec<Vec<Vec<Q>>>>, D::Error> {
        use serde::de::Error as _;
        let raw: Option<Vec<Vec<Vec<String>>>> = Option::deserialize(de)?;
        raw.map(|t| {
            t.iter()
                .map(|a| {
                    a.iter()
                        .map(|b| {
                            b.iter()
                                .map(|s| q_from_str(s).map_err(D::Error::custom))
                                .collect::<Result<Vec<Q>, D::Error>>()
                        })
                        .collect()
                })
                .collect()
        })
        .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_strings() {
        for s in ["0", "5", "-3", "7/2", "-9/4"] {
            let v = q_from_str(s).unwrap();
            assert_eq!(q_to_string(&v), s);
        }
        assert_eq!(q_from_str("4/2").unwrap(), qi(2));
        assert!(q_from_str("1/0").is_err());
        assert!(q_from_str("x").is_err());
    }
}
