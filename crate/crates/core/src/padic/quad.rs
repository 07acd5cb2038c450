use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::{Padic, Valuation};
use crate::error::{Error, Result};

/// The ring Q_p[X]/(X^2 - aX + c); α denotes the class of X.
#[derive(Clone, Copy, Debug)]
pub struct QuadExt {
    pub a: Padic,
    pub c: Padic,
}

impl QuadExt {
    pub fn new(a: Padic, c: Padic) -> Self {
        QuadExt { a, c }
    }

    pub fn p(&self) -> u32 {
        self.a.p()
    }

    pub fn same(&self, other: &QuadExt) -> bool {
        self.a.approx_eq(&other.a) && self.c.approx_eq(&other.c)
    }

    pub fn discriminant(&self) -> Padic {
        self.a * self.a - Padic::from_i64(self.p(), 4, self.a.rel_prec().max(1)) * self.c
    }

    /// The generator α.
    pub fn alpha(&self) -> Quad {
        Quad::new(*self, Padic::exact_zero(self.p()), Padic::from_i64(self.p(), 1, self.c.rel_prec().max(self.a.rel_prec())))
    }

    /// The conjugate root β = a - α.
    pub fn beta(&self) -> Quad {
        self.alpha().conj()
    }

    pub fn embed(&self, x: Padic) -> Quad {
        Quad::new(*self, x, Padic::exact_zero(self.p()))
    }
}

/// c0 + c1·α.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    ext: QuadExt,
    c0: Padic,
    c1: Padic,
}

impl Quad {
    pub fn new(ext: QuadExt, c0: Padic, c1: Padic) -> Self {
        Quad { ext, c0, c1 }
    }

    pub fn ext(&self) -> &QuadExt {
        &self.ext
    }

    pub fn coords(&self) -> (Padic, Padic) {
        (self.c0, self.c1)
    }

    pub fn conj(&self) -> Quad {
        Quad { ext: self.ext, c0: self.c0 + self.ext.a * self.c1, c1: -self.c1 }
    }

    pub fn norm(&self) -> Padic {
        let (x, y) = (self.c0, self.c1);
        x * x + self.ext.a * x * y + self.ext.c * y * y
    }

    pub fn trace(&self) -> Padic {
        self.c0 + self.c0 + self.ext.a * self.c1
    }

    /// Half the valuation of the norm; exact when the defining polynomial is
    /// irreducible over Q_p.
    pub fn valuation(&self) -> Valuation {
        if self.c0.is_exact_zero() && self.c1.is_exact_zero() {
            return Valuation::INFINITY;
        }
        match self.norm().val() {
            Some(v) => Valuation::half_of_int(v as i64),
            None => Valuation::INFINITY,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero() && self.c1.is_zero()
    }

    pub fn inv(&self) -> Result<Quad> {
        let n = self.norm();
        if n.is_exact_zero() {
            return Err(Error::DivisionByZero);
        }
        let ni = n.inv()?;
        let cj = self.conj();
        Ok(Quad { ext: self.ext, c0: cj.c0 * ni, c1: cj.c1 * ni })
    }

    pub fn scale(&self, x: &Padic) -> Quad {
        Quad { ext: self.ext, c0: self.c0 * *x, c1: self.c1 * *x }
    }

    pub fn cap_abs(&self, abs: i32) -> Quad {
        Quad { ext: self.ext, c0: self.c0.cap_abs(abs), c1: self.c1.cap_abs(abs) }
    }

    pub fn approx_eq(&self, other: &Quad) -> bool {
        (*self - *other).is_zero()
    }

    fn check(&self, other: &Quad) {
        assert!(self.ext.same(&other.ext), "quadratic extension mismatch");
    }
}

impl Add for Quad {
    type Output = Quad;
    fn add(self, rhs: Quad) -> Quad {
        self.check(&rhs);
        Quad { ext: self.ext, c0: self.c0 + rhs.c0, c1: self.c1 + rhs.c1 }
    }
}

impl Sub for Quad {
    type Output = Quad;
    fn sub(self, rhs: Quad) -> Quad {
        self.check(&rhs);
        Quad { ext: self.ext, c0: self.c0 - rhs.c0, c1: self.c1 - rhs.c1 }
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad { ext: self.ext, c0: -self.c0, c1: -self.c1 }
    }
}

impl Mul for Quad {
    type Output = Quad;
    fn mul(self, rhs: Quad) -> Quad {
        self.check(&rhs);
        // α^2 = aα - c
        let t = self.c1 * rhs.c1;
        Quad {
            ext: self.ext,
            c0: self.c0 * rhs.c0 - self.ext.c * t,
            c1: self.c0 * rhs.c1 + self.c1 * rhs.c0 + self.ext.a * t,
        }
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) + ({})*alpha", self.c0, self.c1)
    }
}

impl serde::Serialize for Quad {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Quad", 3)?;
        st.serialize_field("a", &self.ext.a)?;
        st.serialize_field("c", &self.ext.c)?;
        st.serialize_field("coords", &[self.c0, self.c1])?;
        st.end()
    }
}

impl<'de> serde::Deserialize<'de> for Quad {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        struct Raw {
            a: Padic,
            c: Padic,
            coords: [Padic; 2],
        }
        let r = Raw::deserialize(d)?;
        Ok(Quad::new(QuadExt::new(r.a, r.c), r.coords[0], r.coords[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrimeCtx;

    #[test]
    fn ramified_valuations() {
        let c = PrimeCtx::new(3, 12).unwrap();
        let ext = QuadExt::new(c.int(3), c.int(9));
        let a = ext.alpha();
        let b = ext.beta();
        assert_eq!(a.valuation(), Valuation::int(1));
        assert!((a + b).approx_eq(&ext.embed(c.int(3))));
        assert!((a * b).approx_eq(&ext.embed(c.int(9))));
        let x = a * a - a.scale(&c.int(3)) + ext.embed(c.int(9));
        assert!(x.is_zero());
        let half = QuadExt::new(c.int(3), c.int(3));
        assert_eq!(half.alpha().valuation(), Valuation::from_halves(1));
    }

    #[test]
    fn inverse() {
        let c = PrimeCtx::new(5, 10).unwrap();
        let ext = QuadExt::new(c.int(5), c.int(25 * 2));
        let x = ext.alpha() + ext.embed(c.int(3));
        let y = x.inv().unwrap();
        assert!((x * y).approx_eq(&ext.embed(c.one())));
    }
}
