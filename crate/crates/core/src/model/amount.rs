use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::Add;
use std::str::FromStr;

/// Fractional digits carried by an [`Amount`].
pub const DECIMALS: u32 = 6;
const SCALE: u64 = 10u64.pow(DECIMALS);

/// Non-negative fixed-point quantity: hardware units, milliseconds or Mbps.
///
/// Values are stored as an integer number of millionths, so sums and
/// differences of decimal literals are exact and comparisons need no epsilon.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_units(units: u64) -> Self {
        Amount(units * SCALE)
    }

    pub const fn from_micros(micros: u64) -> Self {
        Amount(micros)
    }

    pub const fn micros(self) -> u64 {
        self.0
    }

    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }
}

impl Add for Amount {
    type Output = Amount;

    fn add(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_add(rhs.0))
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, Add::add)
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / SCALE;
        let frac = self.0 % SCALE;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        let digits = format!("{frac:0width$}", width = DECIMALS as usize);
        write!(f, "{whole}.{}", digits.trim_end_matches('0'))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AmountParseError {
    #[error("expected an unsigned decimal number")]
    NotANumber,
    #[error("more than {DECIMALS} fractional digits")]
    TooPrecise,
    #[error("number out of range")]
    Overflow,
}

impl FromStr for Amount {
    type Err = AmountParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if whole.is_empty() || !all_digits(whole) || !all_digits(frac) {
            return Err(AmountParseError::NotANumber);
        }
        if s.contains('.') && frac.is_empty() {
            return Err(AmountParseError::NotANumber);
        }
        if frac.len() > DECIMALS as usize {
            return Err(AmountParseError::TooPrecise);
        }
        let whole: u64 = whole.parse().map_err(|_| AmountParseError::Overflow)?;
        let mut micros = 0u64;
        for (i, b) in frac.bytes().enumerate() {
            micros += u64::from(b - b'0') * 10u64.pow(DECIMALS - 1 - i as u32);
        }
        whole.checked_mul(SCALE).and_then(|w| w.checked_add(micros)).map(Amount).ok_or(AmountParseError::Overflow)
    }
}

/// Hardware capability of a node: a finite amount or `inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Capacity {
    Finite(Amount),
    Infinite,
}

impl Capacity {
    /// Whether this capacity can hold `demand`.
    pub fn covers(self, demand: Amount) -> bool {
        match self {
            Capacity::Infinite => true,
            Capacity::Finite(cap) => cap >= demand,
        }
    }

    /// Strict comparison against a finite amount (`inf` exceeds everything).
    pub fn exceeds(self, amount: Amount) -> bool {
        match self {
            Capacity::Infinite => true,
            Capacity::Finite(cap) => cap > amount,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Capacity::Infinite)
    }
}

impl From<Amount> for Capacity {
    fn from(a: Amount) -> Self {
        Capacity::Finite(a)
    }
}

impl Add<Amount> for Capacity {
    type Output = Capacity;

    fn add(self, rhs: Amount) -> Capacity {
        match self {
            Capacity::Infinite => Capacity::Infinite,
            Capacity::Finite(a) => Capacity::Finite(a + rhs),
        }
    }
}

impl PartialOrd for Capacity {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Capacity {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Capacity::Infinite, Capacity::Infinite) => Ordering::Equal,
            (Capacity::Infinite, _) => Ordering::Greater,
            (_, Capacity::Infinite) => Ordering::Less,
            (Capacity::Finite(a), Capacity::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Infinite => f.write_str("inf"),
            Capacity::Finite(a) => a.fmt(f),
        }
    }
}
