use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// A p-adic valuation in (1/2)Z ∪ {+∞}, stored as twice its value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Valuation {
    halves: i64,
}

impl Valuation {
    pub const INFINITY: Valuation = Valuation { halves: i64::MAX };
    pub const ZERO: Valuation = Valuation { halves: 0 };

    pub fn int(v: i64) -> Self {
        Valuation { halves: 2 * v }
    }

    pub fn from_halves(h: i64) -> Self {
        Valuation { halves: h }
    }

    pub fn is_infinite(&self) -> bool {
        self.halves == i64::MAX
    }

    pub fn halves(&self) -> Option<i64> {
        (!self.is_infinite()).then_some(self.halves)
    }

    /// Reduced numerator and denominator; None for +∞.
    pub fn ratio(&self) -> Option<(i64, i64)> {
        let h = self.halves()?;
        Some(if h % 2 == 0 { (h / 2, 1) } else { (h, 2) })
    }

    pub fn floor(&self) -> Option<i64> {
        self.halves().map(|h| h.div_euclid(2))
    }

    pub fn ceil(&self) -> Option<i64> {
        self.halves().map(|h| (h + 1).div_euclid(2))
    }

    pub fn as_f64(&self) -> f64 {
        match self.halves() {
            Some(h) => h as f64 / 2.0,
            None => f64::INFINITY,
        }
    }

    pub fn is_integral(&self) -> bool {
        self.halves().is_none_or(|h| h % 2 == 0)
    }

    /// Halve the value (valuation of a square root or a norm-derived value).
    pub(crate) fn half_of_int(v: i64) -> Self {
        Valuation { halves: v }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.halves.cmp(&other.halves)
    }
}

impl Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Valuation) -> Valuation {
        if self.is_infinite() || rhs.is_infinite() {
            Valuation::INFINITY
        } else {
            Valuation { halves: self.halves + rhs.halves }
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio() {
            None => write!(f, "inf"),
            Some((n, 1)) => write!(f, "{n}"),
            Some((n, d)) => write!(f, "{n}/{d}"),
        }
    }
}

impl serde::Serialize for Valuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_sum() {
        let a = Valuation::from_halves(1);
        let b = Valuation::int(1);
        assert!(a < b && b < Valuation::INFINITY);
        assert_eq!((a + a), b);
        assert_eq!((a + Valuation::INFINITY), Valuation::INFINITY);
        assert_eq!(a.to_string(), "1/2");
        assert_eq!(Valuation::from_halves(-3).floor(), Some(-2));
        assert_eq!(Valuation::from_halves(-3).ceil(), Some(-1));
    }
}
