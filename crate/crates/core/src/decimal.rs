//! Exact decimal prices stored as integer micro-units.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional digits carried exactly.
pub const PRICE_SCALE_DIGITS: u32 = 6;
const SCALE: i64 = 1_000_000;

/// A currency amount held as a scaled integer (1 unit = 10⁻⁶ euro).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Price(i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PriceParseError {
    #[error("empty price")]
    Empty,
    #[error("invalid price literal {0:?}")]
    Invalid(String),
    #[error("price {0:?} has more than 6 decimal places")]
    TooPrecise(String),
    #[error("price {0:?} out of range")]
    Overflow(String),
}

impl Price {
    pub const ZERO: Price = Price(0);

    pub const fn from_micros(micros: i64) -> Self {
        Price(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    /// Nearest representable price to `value`, rounding half away from zero.
    pub fn from_f64_rounded(value: f64) -> Option<Self> {
        let scaled = (value * SCALE as f64).round();
        if scaled.is_finite() && scaled.abs() < i64::MAX as f64 {
            Some(Price(scaled as i64))
        } else {
            None
        }
    }
}

impl FromStr for Price {
    type Err = PriceParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(PriceParseError::Empty);
        }
        let (negative, body) = match s.as_bytes()[0] {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty())
            || !digits_ok(int_part)
            || !digits_ok(frac_part)
        {
            return Err(PriceParseError::Invalid(s.to_string()));
        }
        if frac_part.len() > PRICE_SCALE_DIGITS as usize {
            return Err(PriceParseError::TooPrecise(s.to_string()));
        }
        let overflow = || PriceParseError::Overflow(s.to_string());
        let int_value: i64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| overflow())?
        };
        let mut frac_value: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| overflow())?
        };
        frac_value *= 10_i64.pow(PRICE_SCALE_DIGITS - frac_part.len() as u32);
        let magnitude = int_value
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac_value))
            .ok_or_else(overflow)?;
        Ok(Price(if negative { -magnitude } else { magnitude }))
    }
}

impl fmt::Display for Price {
    /// Shortest decimal form with at least two fractional digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / SCALE as u64;
        let mut frac = format!("{:06}", abs % SCALE as u64);
        while frac.len() > 2 && frac.ends_with('0') {
            frac.pop();
        }
        write!(f, "{sign}{int}.{frac}")
    }
}

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Price {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s,
            Raw::Number(n) => n.to_string(),
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Exact arithmetic mean of a set of prices, kept as a (sum, count) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MeanPrice {
    pub sum_micros: i128,
    pub count: u64,
}

impl MeanPrice {
    pub fn push(&mut self, price: Price) {
        self.sum_micros += price.micros() as i128;
        self.count += 1;
    }

    pub fn is_zero(&self) -> bool {
        self.sum_micros == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.sum_micros as f64 / (self.count as f64 * SCALE as f64)
    }

    /// `100 · self / base`, formed from exact integer products before the
    /// single floating-point division. `None` when `base` is zero.
    pub fn index_against(&self, base: &MeanPrice) -> Option<f64> {
        if base.sum_micros == 0 || self.count == 0 || base.count == 0 {
            return None;
        }
        let num = self
            .sum_micros
            .checked_mul(base.count as i128)?
            .checked_mul(100)?;
        let den = base.sum_micros.checked_mul(self.count as i128)?;
        if num % den == 0 {
            return Some((num / den) as f64);
        }
        Some(num as f64 / den as f64)
    }
}

impl fmt::Display for MeanPrice {
    /// Mean rounded to six decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count == 0 {
            return write!(f, "");
        }
        let den = self.count as i128;
        let q = self.sum_micros.div_euclid(den);
        let r = self.sum_micros.rem_euclid(den);
        let rounded = if 2 * r >= den { q + 1 } else { q };
        write!(f, "{}", Price(rounded as i64))
    }
}
