//! Bounded-precision arithmetic in Q_p and in quadratic extensions of it.
//!
//! An element is `p^val * unit` where the unit is known modulo `p^rel`.
//! Absolute precision is `val + rel`; an element with `rel == 0` is a zero
//! known only modulo `p^val`. Exact zero is a separate state.

mod local;
pub(crate) mod modint;
mod quad;
mod scalar;
mod valuation;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use modint::{invmod, mulmod, ppow, reduce_i64, split_p};

pub use local::{hensel_roots, log_u, log_u_bruteforce, sqrt, teichmuller, Roots};
pub use modint::max_digits;
pub use quad::{Quad, QuadExt};
pub use scalar::Scalar;
pub use valuation::Valuation;

const EXACT: i32 = i32::MAX;

/// Prime, topological generator of 1 + pZ_p, and working relative precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeCtx {
    p: u32,
    u: u64,
    prec: u32,
}

impl PrimeCtx {
    pub fn new(p: u32, prec: u32) -> Result<Self> {
        Self::with_generator(p, 1 + p as u64, prec)
    }

    pub fn with_generator(p: u32, u: u64, prec: u32) -> Result<Self> {
        if p < 3 || !modint::is_prime(p as u64) {
            return Err(Error::Validation(format!("p = {p} must be an odd prime")));
        }
        let pp = p as u64;
        if u % pp != 1 || u % (pp * pp) == 1 {
            return Err(Error::Validation(format!(
                "u = {u} must be 1 mod p and not 1 mod p^2"
            )));
        }
        if prec == 0 || prec > max_digits(p) {
            return Err(Error::Validation(format!(
                "precision {prec} outside 1..={} for p = {p}",
                max_digits(p)
            )));
        }
        Ok(PrimeCtx { p, u, prec })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn u(&self) -> u64 {
        self.u
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Result<Self> {
        Self::with_generator(self.p, self.u, prec)
    }

    pub fn zero(&self) -> Padic {
        Padic::exact_zero(self.p)
    }

    pub fn one(&self) -> Padic {
        self.int(1)
    }

    pub fn int(&self, n: i64) -> Padic {
        Padic::from_i64(self.p, n, self.prec)
    }

    pub fn rational(&self, num: i64, den: i64) -> Result<Padic> {
        self.int(num).checked_div(&self.int(den))
    }

    /// p^e, with relative precision `prec` (the unit part is exactly 1).
    pub fn p_power(&self, e: i32) -> Padic {
        Padic { p: self.p, val: e, rel: self.prec, unit: 1 }
    }

    pub fn generator(&self) -> Padic {
        self.int(self.u as i64)
    }

    /// u^e for any integer e.
    pub fn u_pow(&self, e: i64) -> Padic {
        let m = ppow(self.p, self.prec);
        let base = if e >= 0 {
            self.u % m
        } else {
            invmod(self.u % m, m).expect("u is a unit")
        };
        let unit = modint::powmod(base, e.unsigned_abs(), m);
        Padic { p: self.p, val: 0, rel: self.prec, unit }
    }

    /// Parse a serialized element or a plain rational such as "-3" or "1/2".
    pub fn parse(&self, s: &str) -> Result<Padic> {
        let t = s.trim();
        if t.contains('[') || t.contains("inf") {
            let x = Padic::parse(t)?;
            if x.p != self.p {
                return Err(Error::ContextMismatch { left: self.p, right: x.p });
            }
            return Ok(x);
        }
        let bad = || Error::Parse(format!("cannot read {t:?} as a p-adic number"));
        match t.split_once('/') {
            Some((n, d)) => {
                let n: i64 = n.trim().parse().map_err(|_| bad())?;
                let d: i64 = d.trim().parse().map_err(|_| bad())?;
                self.rational(n, d)
            }
            None => Ok(self.int(t.parse().map_err(|_| bad())?)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Padic {
    p: u32,
    val: i32,
    rel: u32,
    unit: u64,
}

impl Padic {
    pub fn exact_zero(p: u32) -> Self {
        Padic { p, val: EXACT, rel: 0, unit: 0 }
    }

    /// The zero known modulo p^abs.
    pub fn zero_to(p: u32, abs: i32) -> Self {
        Padic { p, val: abs, rel: 0, unit: 0 }
    }

    pub fn from_i64(p: u32, n: i64, rel: u32) -> Self {
        if n == 0 {
            return Self::exact_zero(p);
        }
        let (v, u) = split_p(n.unsigned_abs(), p);
        let m = ppow(p, rel);
        let mut unit = u % m;
        if n < 0 {
            unit = (m - unit) % m;
        }
        Padic { p, val: v as i32, rel, unit }
    }

    /// p^val times a residue known modulo p^width; strips any extra p factors.
    pub fn from_residue(p: u32, val: i32, residue: u64, width: u32) -> Self {
        let m = ppow(p, width);
        let s = residue % m;
        if s == 0 {
            return Self::zero_to(p, val.saturating_add(width as i32));
        }
        let (v, unit) = split_p(s, p);
        Padic { p, val: val + v as i32, rel: width - v, unit }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn is_exact_zero(&self) -> bool {
        self.val == EXACT
    }

    /// Zero to the stated precision (no significant digits).
    pub fn is_zero(&self) -> bool {
        self.rel == 0
    }

    /// Relative precision: number of known unit digits.
    pub fn rel_prec(&self) -> u32 {
        self.rel
    }

    /// Absolute precision; `i32::MAX` for exact zero.
    pub fn abs_prec(&self) -> i32 {
        if self.is_exact_zero() {
            EXACT
        } else {
            self.val + self.rel as i32
        }
    }

    pub fn valuation(&self) -> Valuation {
        if self.rel == 0 {
            Valuation::INFINITY
        } else {
            Valuation::int(self.val as i64)
        }
    }

    /// Integer valuation of a nonzero element.
    pub fn val(&self) -> Option<i32> {
        (self.rel > 0).then_some(self.val)
    }

    /// Lower bound on the valuation: the valuation itself, or the known
    /// precision for a zero.
    pub fn val_floor(&self) -> i32 {
        self.val
    }

    pub fn unit_residue(&self) -> u64 {
        self.unit
    }

    pub fn is_unit(&self) -> bool {
        self.rel > 0 && self.val == 0
    }

    /// Little-endian base-p digits of the unit part.
    pub fn digits(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.rel as usize);
        let mut u = self.unit;
        for _ in 0..self.rel {
            out.push((u % self.p as u64) as u32);
            u /= self.p as u64;
        }
        out
    }

    /// The value modulo p^e as an integer in [0, p^e); needs val ≥ 0 and
    /// at least e known digits.
    pub fn residue(&self, e: u32) -> Result<u64> {
        if self.abs_prec() < e as i32 {
            return Err(Error::PrecisionExhausted(format!(
                "need {e} digits, have {}",
                self.abs_prec()
            )));
        }
        if self.val < 0 && self.rel > 0 {
            return Err(Error::NonUnit(format!("{self} is not integral")));
        }
        if self.rel == 0 || self.val as u32 >= e {
            return Ok(0);
        }
        let m = ppow(self.p, e);
        Ok(mulmod(self.unit % m, ppow(self.p, self.val as u32), m))
    }

    /// Signed representative of the residue mod p^e (in (-p^e/2, p^e/2]).
    pub fn to_i64_mod(&self, e: u32) -> Result<i64> {
        let r = self.residue(e)?;
        let m = ppow(self.p, e);
        Ok(if r > m / 2 { r as i64 - m as i64 } else { r as i64 })
    }

    /// Lower the absolute precision to at most `abs`.
    pub fn cap_abs(&self, abs: i32) -> Self {
        if abs >= self.abs_prec() {
            return *self;
        }
        if self.rel == 0 || abs <= self.val {
            return Self::zero_to(self.p, abs.min(self.val));
        }
        let rel = (abs - self.val) as u32;
        Padic { p: self.p, val: self.val, rel, unit: self.unit % ppow(self.p, rel) }
    }

    pub fn cap_rel(&self, rel: u32) -> Self {
        if self.rel <= rel {
            return *self;
        }
        Padic { p: self.p, val: self.val, rel, unit: self.unit % ppow(self.p, rel) }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.p != other.p {
            Err(Error::ContextMismatch { left: self.p, right: other.p })
        } else {
            Ok(())
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    fn add_unchecked(&self, y: &Self) -> Self {
        let x = self;
        if x.is_exact_zero() {
            return *y;
        }
        if y.is_exact_zero() {
            return *x;
        }
        let abs = x.abs_prec().min(y.abs_prec());
        let m = x.val.min(y.val);
        if abs <= m {
            return Self::zero_to(x.p, abs);
        }
        let width = (abs - m) as u32;
        let modulus = ppow(x.p, width);
        let term = |z: &Padic| -> u64 {
            if z.rel == 0 {
                return 0;
            }
            let shift = (z.val - m) as u32;
            if shift >= width {
                0
            } else {
                (z.unit % ppow(z.p, width - shift)) * ppow(z.p, shift)
            }
        };
        let s = (term(x) as u128 + term(y) as u128) % modulus as u128;
        Self::from_residue(x.p, m, s as u64, width)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.neg())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, y: &Self) -> Self {
        let x = self;
        if x.is_exact_zero() || y.is_exact_zero() {
            return Self::exact_zero(x.p);
        }
        if x.rel == 0 || y.rel == 0 {
            return Self::zero_to(x.p, x.val.saturating_add(y.val));
        }
        let rel = x.rel.min(y.rel);
        let m = ppow(x.p, rel);
        Padic { p: x.p, val: x.val + y.val, rel, unit: mulmod(x.unit % m, y.unit % m, m) }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_exact_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.rel == 0 {
            return Err(Error::PrecisionExhausted(format!(
                "inverting {self}, which has no significant digits"
            )));
        }
        let m = ppow(self.p, self.rel);
        let unit = invmod(self.unit, m).expect("unit part is a unit");
        Ok(Padic { p: self.p, val: -self.val, rel: self.rel, unit })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut acc = Padic::from_i64(self.p, 1, self.rel.max(1));
        if e == 0 {
            return acc;
        }
        let mut b = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul_unchecked(&b);
            }
        }
        acc
    }

    pub fn pow_i64(&self, e: i64) -> Result<Self> {
        if e >= 0 {
            Ok(self.pow(e as u64))
        } else {
            Ok(self.inv()?.pow(e.unsigned_abs()))
        }
    }

    /// Multiply by p^e (exact shift).
    pub fn shift(&self, e: i32) -> Self {
        if self.is_exact_zero() {
            return *self;
        }
        Padic { val: self.val + e, ..*self }
    }

    /// Agreement to the precision of both operands.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.p == other.p && self.sub_unchecked(other).is_zero()
    }

    fn sub_unchecked(&self, other: &Self) -> Self {
        self.add_unchecked(&other.neg())
    }

    pub fn neg(&self) -> Self {
        if self.rel == 0 {
            return *self;
        }
        let m = ppow(self.p, self.rel);
        Padic { unit: (m - self.unit) % m, ..*self }
    }

    /// Parse the "p^d*[d0,d1,...]" form; "p^inf*[]" is exact zero.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed p-adic string {s:?}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (head, rest) = compact.split_once('*').ok_or_else(bad)?;
        let (p, d) = head.split_once('^').ok_or_else(bad)?;
        let p: u32 = p.parse().map_err(|_| bad())?;
        if p < 3 || !modint::is_prime(p as u64) {
            return Err(bad());
        }
        let body = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        if d == "inf" {
            return Ok(Self::exact_zero(p));
        }
        let val: i32 = d.parse().map_err(|_| bad())?;
        let digits: Vec<u64> = if body.is_empty() {
            Vec::new()
        } else {
            body.split(',').map(|x| x.parse::<u64>().map_err(|_| bad())).collect::<Result<_>>()?
        };
        if digits.len() as u32 > max_digits(p) || digits.iter().any(|&x| x >= p as u64) {
            return Err(bad());
        }
        let mut residue = 0u64;
        for &dg in digits.iter().rev() {
            residue = residue * p as u64 + dg;
        }
        Ok(Self::from_residue(p, val, residue, digits.len() as u32))
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            return write!(f, "{}^inf*[]", self.p);
        }
        let ds: Vec<String> = self.digits().iter().map(|d| d.to_string()).collect();
        write!(f, "{}^{}*[{}]", self.p, self.val, ds.join(","))
    }
}

impl serde::Serialize for Padic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Padic {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Padic::parse(&s).map_err(serde::de::Error::custom)
    }
}

fn same_p(a: &Padic, b: &Padic) {
    assert_eq!(a.p, b.p, "p-adic context mismatch");
}

impl Add for Padic {
    type Output = Padic;
    fn add(self, rhs: Padic) -> Padic {
        same_p(&self, &rhs);
        self.add_unchecked(&rhs)
    }
}

impl Sub for Padic {
    type Output = Padic;
    fn sub(self, rhs: Padic) -> Padic {
        same_p(&self, &rhs);
        self.sub_unchecked(&rhs)
    }
}

impl Mul for Padic {
    type Output = Padic;
    fn mul(self, rhs: Padic) -> Padic {
        same_p(&self, &rhs);
        self.mul_unchecked(&rhs)
    }
}

/// Panics on division by a zero; use `checked_div` when that can happen.
impl Div for Padic {
    type Output = Padic;
    fn div(self, rhs: Padic) -> Padic {
        self.checked_div(&rhs).expect("p-adic division")
    }
}

impl Neg for Padic {
    type Output = Padic;
    fn neg(self) -> Padic {
        Padic::neg(&self)
    }
}

impl<'a> Add<&'a Padic> for &'a Padic {
    type Output = Padic;
    fn add(self, rhs: &Padic) -> Padic {
        *self + *rhs
    }
}

impl<'a> Mul<&'a Padic> for &'a Padic {
    type Output = Padic;
    fn mul(self, rhs: &Padic) -> Padic {
        *self * *rhs
    }
}

/// Integer residue helper shared by callers that work modulo p^e directly.
pub fn residue_of_i64(p: u32, n: i64, e: u32) -> u64 {
    reduce_i64(n, ppow(p, e))
}
