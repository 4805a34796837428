//! Exact non-negative rationals for percentile levels and ratio gates.
//!
//! Percentile membership and the linked-reference gate compare counts
//! against configured levels. Doing that in floating point makes boundary
//! cases platform- and parser-sensitive, so levels are kept as reduced
//! rationals and every comparison stays in integer arithmetic.

use std::fmt;
use std::str::FromStr;

/// A non-negative rational number, always stored in reduced form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    /// Build `num/den`, reducing by the greatest common divisor.
    ///
    /// Panics if `den` is zero.
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0, "fraction denominator must be non-zero");
        let g = gcd(num, den);
        if g == 0 {
            // num == 0: canonical zero
            return Fraction { num: 0, den: 1 };
        }
        Fraction {
            num: num / g,
            den: den / g,
        }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// True when the value lies strictly between 0 and 1.
    pub fn is_proper(&self) -> bool {
        self.num > 0 && self.num < self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `floor(self * n)`, exactly.
    pub fn scaled_floor(&self, n: u64) -> u64 {
        ((n as u128 * self.num as u128) / self.den as u128) as u64
    }

    /// `self <= a/b`, exactly. Panics if `b` is zero.
    pub fn le_frac(&self, a: u64, b: u64) -> bool {
        assert!(b != 0, "ratio denominator must be non-zero");
        self.num as u128 * b as u128 <= a as u128 * self.den as u128
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Parse error for [`Fraction`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFractionError(String);

impl fmt::Display for ParseFractionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid fraction: {}", self.0)
    }
}

impl std::error::Error for ParseFractionError {}

impl FromStr for Fraction {
    type Err = ParseFractionError;

    /// Accepts `a/b`, plain integers, and decimal strings such as `0.001`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseFractionError("empty string".into()));
        }
        if let Some((a, b)) = s.split_once('/') {
            let num: u64 = a
                .trim()
                .parse()
                .map_err(|_| ParseFractionError(s.into()))?;
            let den: u64 = b
                .trim()
                .parse()
                .map_err(|_| ParseFractionError(s.into()))?;
            if den == 0 {
                return Err(ParseFractionError(format!("{s}: zero denominator")));
            }
            return Ok(Fraction::new(num, den));
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(ParseFractionError(s.into()));
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(ParseFractionError(s.into()));
        }
        if frac_part.len() > 18 {
            return Err(ParseFractionError(format!("{s}: too many decimal digits")));
        }
        let int: u128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| ParseFractionError(s.into()))?
        };
        let den: u128 = 10u128.pow(frac_part.len() as u32);
        let frac: u128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| ParseFractionError(s.into()))?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| ParseFractionError(format!("{s}: out of range")))?;
        if num > u64::MAX as u128 {
            return Err(ParseFractionError(format!("{s}: out of range")));
        }
        Ok(Fraction::new(num as u64, den as u64))
    }
}

impl fmt::Display for Fraction {
    /// Renders as a decimal when the reduced denominator is of the form
    /// `2^a * 5^b`, otherwise as `num/den`. Round-trips through `FromStr`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            return write!(f, "{}", self.num);
        }
        let mut d = self.den;
        let mut twos = 0u32;
        let mut fives = 0u32;
        while d.is_multiple_of(2) {
            d /= 2;
            twos += 1;
        }
        while d.is_multiple_of(5) {
            d /= 5;
            fives += 1;
        }
        if d != 1 {
            return write!(f, "{}/{}", self.num, self.den);
        }
        let k = twos.max(fives);
        let scale = 10u128.pow(k) / self.den as u128;
        let scaled = self.num as u128 * scale;
        let int = scaled / 10u128.pow(k);
        let mut frac = format!("{:0width$}", scaled % 10u128.pow(k), width = k as usize);
        while frac.ends_with('0') {
            frac.pop();
        }
        write!(f, "{int}.{frac}")
    }
}
