//! Bit-exact text encoding of `f64` as C99 hexadecimal floating point.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// `x` as `[-]0x1.<hex>p<exp>`, subnormals as `0x0.<hex>p-1022`, plus `inf`, `-inf`, `nan`.
pub fn to_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let digits = format!("{mant:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid hex float {0:?}")]
pub struct HexParseError(pub String);

/// Inverse of [`to_hex`]. Decimal literals are accepted as well.
pub fn from_hex(s: &str) -> Result<f64, HexParseError> {
    let t = s.trim();
    match t {
        "nan" | "NaN" => return Ok(f64::NAN),
        "inf" | "+inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let body = t.trim_start_matches(['-', '+']);
    if body.starts_with("0x") || body.starts_with("0X") {
        hexf_parse::parse_hexf64(t, false).map_err(|_| HexParseError(s.into()))
    } else {
        t.parse().map_err(|_| HexParseError(s.into()))
    }
}

/// An `f64` that serializes as a hex-float string.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hf(pub f64);

impl Serialize for Hf {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_hex(self.0))
    }
}

impl<'de> Deserialize<'de> for Hf {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Hf;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a hex-float string or a number")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Hf, E> {
                from_hex(v).map(Hf).map_err(E::custom)
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Hf, E> {
                Ok(Hf(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Hf, E> {
                Ok(Hf(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Hf, E> {
                Ok(Hf(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_encodings() {
        assert_eq!(to_hex(1.0), "0x1p+0");
        assert_eq!(to_hex(-0.5), "-0x1p-1");
        assert_eq!(to_hex(3.0), "0x1.8p+1");
        assert_eq!(to_hex(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
        assert_eq!(to_hex(-0.0), "-0x0p+0");
    }

    #[test]
    fn specials_round_trip() {
        for x in [0.0, -0.0, f64::INFINITY, f64::NEG_INFINITY, f64::MAX, f64::MIN_POSITIVE, 5e-324] {
            let y = from_hex(&to_hex(x)).unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{x}");
        }
        assert!(from_hex("nan").unwrap().is_nan());
        assert!(from_hex("0xzz").is_err());
    }
}
