use std::fmt::{Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use super::{Padic, Quad, Valuation};
use crate::error::Result;

/// Coefficient rings used by the series and cyclotomic layers: Q_p itself
/// and the quadratic eigenvalue extensions.
pub trait Scalar:
    Clone
    + Copy
    + Debug
    + Display
    + Send
    + Sync
    + serde::Serialize
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn p(&self) -> u32;
    /// Exact zero of the same ring.
    fn zero_like(&self) -> Self;
    fn one_like(&self, rel: u32) -> Self;
    fn embed(&self, x: Padic) -> Self;
    fn is_zero(&self) -> bool;
    fn valuation(&self) -> Valuation;
    /// Lower bound on the absolute precision over all coordinates.
    fn abs_prec(&self) -> i32;
    fn inv(&self) -> Result<Self>;
    fn scale(&self, x: &Padic) -> Self;
    fn cap_abs(&self, abs: i32) -> Self;
    /// Lower bound for the valuation of this element, counting a zero as
    /// its known precision.
    fn val_floor(&self) -> Valuation {
        let v = self.valuation();
        if v.is_infinite() {
            let a = self.abs_prec();
            if a == i32::MAX {
                Valuation::INFINITY
            } else {
                Valuation::int(a as i64)
            }
        } else {
            v
        }
    }
}

impl Scalar for Padic {
    fn p(&self) -> u32 {
        Padic::p(self)
    }
    fn zero_like(&self) -> Self {
        Padic::exact_zero(Padic::p(self))
    }
    fn one_like(&self, rel: u32) -> Self {
        Padic::from_i64(Padic::p(self), 1, rel)
    }
    fn embed(&self, x: Padic) -> Self {
        x
    }
    fn is_zero(&self) -> bool {
        Padic::is_zero(self)
    }
    fn valuation(&self) -> Valuation {
        Padic::valuation(self)
    }
    fn abs_prec(&self) -> i32 {
        Padic::abs_prec(self)
    }
    fn inv(&self) -> Result<Self> {
        Padic::inv(self)
    }
    fn scale(&self, x: &Padic) -> Self {
        *self * *x
    }
    fn cap_abs(&self, abs: i32) -> Self {
        Padic::cap_abs(self, abs)
    }
}

impl Scalar for Quad {
    fn p(&self) -> u32 {
        self.ext().p()
    }
    fn zero_like(&self) -> Self {
        self.ext().embed(Padic::exact_zero(self.ext().p()))
    }
    fn one_like(&self, rel: u32) -> Self {
        self.ext().embed(Padic::from_i64(self.ext().p(), 1, rel))
    }
    fn embed(&self, x: Padic) -> Self {
        self.ext().embed(x)
    }
    fn is_zero(&self) -> bool {
        Quad::is_zero(self)
    }
    fn valuation(&self) -> Valuation {
        Quad::valuation(self)
    }
    fn abs_prec(&self) -> i32 {
        let (a, b) = self.coords();
        a.abs_prec().min(b.abs_prec())
    }
    fn inv(&self) -> Result<Self> {
        Quad::inv(self)
    }
    fn scale(&self, x: &Padic) -> Self {
        Quad::scale(self, x)
    }
    fn cap_abs(&self, abs: i32) -> Self {
        Quad::cap_abs(self, abs)
    }
}
