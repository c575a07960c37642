//! Exact rationals in their `"num/den"` text form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub fn rational_text(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = |col: usize| Error::parse(1, col, format!("expected rational, got '{text}'"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad(1))?;
    let den: BigInt = den.parse().map_err(|_| bad(text.find('/').unwrap_or(0) + 2))?;
    if den.is_zero() {
        return Err(bad(text.len()));
    }
    Ok(BigRational::new(num, den))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn product<'a>(items: impl IntoIterator<Item = &'a BigRational>) -> BigRational {
    items
        .into_iter()
        .fold(BigRational::one(), |acc, x| acc * x)
}

/// Serde adapter for `BigRational` as `"num/den"`.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational_text(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Option<BigRational>`.
pub mod serde_rational_opt {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        r: &Option<BigRational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&rational_text(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<BigRational>, D::Error> {
        let text = Option::<String>::deserialize(d)?;
        text.map(|t| parse_rational(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// Serde adapter for big integers as decimal strings.
pub mod serde_bigint {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_forms() {
        assert_eq!(rational_text(&ratio(6, 8)), "3/4");
        assert_eq!(rational_text(&ratio(2, 1)), "2/1");
        assert_eq!(parse_rational("3/4").unwrap(), ratio(3, 4));
        assert_eq!(parse_rational(" 5 ").unwrap(), ratio(5, 1));
        assert_eq!(parse_rational("-2/6").unwrap(), ratio(-1, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x/2").is_err());
    }

    #[test]
    fn empty_product_is_one() {
        assert_eq!(product([]), BigRational::one());
        assert_eq!(product(&[ratio(1, 2), ratio(2, 3)]), ratio(1, 3));
    }
}
