//! Exact rational no-alarm levels.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of fractional digits accepted in a decimal level; `10^18`
/// is the largest power of ten that fits in a `u64`.
const MAX_DECIMAL_DIGITS: usize = 18;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("level must satisfy 0 < n1 < n2, got {n1}/{n2}")]
    OutOfRange { n1: u64, n2: u64 },
    #[error("malformed level {0:?}: expected a decimal like 0.95 or a fraction like 19/20")]
    Malformed(String),
    #[error("level {0:?} has more than {MAX_DECIMAL_DIGITS} fractional digits")]
    TooPrecise(String),
}

/// The target no-alarm probability `gamma = n1 / n2` as an irreducible fraction.
///
/// Never built from a binary float: every sample-size rule relies on `n2`
/// exactly, and `floor(N * gamma)` is evaluated in integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RationalLevel {
    n1: u64,
    n2: u64,
}

impl RationalLevel {
    /// Builds `n1 / n2`, reducing by the gcd.
    pub fn new(n1: u64, n2: u64) -> Result<Self, LevelError> {
        if n1 == 0 || n1 >= n2 {
            return Err(LevelError::OutOfRange { n1, n2 });
        }
        let g = n1.gcd(&n2);
        Ok(Self {
            n1: n1 / g,
            n2: n2 / g,
        })
    }

    /// Parses `"0.95"`, `".95"` or `"19/20"`.
    pub fn parse(text: &str) -> Result<Self, LevelError> {
        let s = text.trim();
        if let Some((num, den)) = s.split_once('/') {
            let parse = |part: &str| {
                let part = part.trim();
                if part.is_empty() || !part.bytes().all(|c| c.is_ascii_digit()) {
                    return Err(LevelError::Malformed(text.to_owned()));
                }
                part.parse::<u64>()
                    .map_err(|_| LevelError::Malformed(text.to_owned()))
            };
            return Self::new(parse(num)?, parse(den)?);
        }

        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        let digits_ok = |p: &str| p.bytes().all(|c| c.is_ascii_digit());
        if (int_part.is_empty() && frac_part.is_empty()) || !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(LevelError::Malformed(text.to_owned()));
        }
        if !int_part.trim_start_matches('0').is_empty() {
            // Anything >= 1 is out of range; report it as such when it is a clean number.
            return match s.parse::<f64>() {
                Ok(_) => Err(LevelError::OutOfRange { n1: 1, n2: 1 }),
                Err(_) => Err(LevelError::Malformed(text.to_owned())),
            };
        }
        let frac = frac_part.trim_end_matches('0');
        if frac.len() > MAX_DECIMAL_DIGITS {
            return Err(LevelError::TooPrecise(text.to_owned()));
        }
        if frac.is_empty() {
            return Err(LevelError::OutOfRange { n1: 0, n2: 1 });
        }
        let n1: u64 = frac
            .parse()
            .map_err(|_| LevelError::Malformed(text.to_owned()))?;
        Self::new(n1, 10u64.pow(frac.len() as u32))
    }

    pub fn numer(&self) -> u64 {
        self.n1
    }

    pub fn denom(&self) -> u64 {
        self.n2
    }

    pub fn as_f64(&self) -> f64 {
        self.n1 as f64 / self.n2 as f64
    }

    /// `1 - gamma`, the acceptable false alarm rate.
    pub fn complement(&self) -> Self {
        Self {
            n1: self.n2 - self.n1,
            n2: self.n2,
        }
    }

    /// `gamma >= 1/2`, compared exactly.
    pub fn is_upper_half(&self) -> bool {
        2 * self.n1 >= self.n2
    }

    /// `floor(n * gamma)` in exact integer arithmetic.
    pub fn floor_mul(&self, n: u64) -> u64 {
        ((n as u128 * self.n1 as u128) / self.n2 as u128) as u64
    }

    /// `n * gamma` when it is an integer.
    pub fn exact_mul(&self, n: u64) -> Option<u64> {
        let prod = n as u128 * self.n1 as u128;
        prod.is_multiple_of(self.n2 as u128).then(|| (prod / self.n2 as u128) as u64)
    }
}

impl fmt::Display for RationalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.n1, self.n2)
    }
}

impl FromStr for RationalLevel {
    type Err = LevelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl TryFrom<String> for RationalLevel {
    type Error = LevelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::parse(&value)
    }
}

impl From<RationalLevel> for String {
    fn from(level: RationalLevel) -> Self {
        level.to_string()
    }
}
