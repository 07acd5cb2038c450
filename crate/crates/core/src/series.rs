//! Truncated power series over a p-adic coefficient ring.
//!
//! A series stores coefficients of T^0..=T^dmax. It is either an exact
//! polynomial (every unstored coefficient is zero) or a truncation, in which
//! case `tail` optionally bounds the valuations of the dropped coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{Padic, Scalar, Valuation};

#[derive(Clone, Debug)]
pub struct TruncSeries<S: Scalar> {
    zero: S,
    coeffs: Vec<S>,
    dmax: usize,
    exact: bool,
    tail: Option<Valuation>,
}

impl<S: Scalar> TruncSeries<S> {
    /// Exact polynomial with the given coefficients; dmax is raised to the
    /// degree if needed.
    pub fn poly(proto: &S, coeffs: Vec<S>, dmax: usize) -> Self {
        let dmax = dmax.max(coeffs.len().saturating_sub(1));
        let mut s = TruncSeries { zero: proto.zero_like(), coeffs, dmax, exact: true, tail: None };
        s.trim();
        s
    }

    /// Truncation of a series whose omitted coefficients have valuation at
    /// least `tail` (None: unknown).
    pub fn truncated(proto: &S, mut coeffs: Vec<S>, dmax: usize, tail: Option<Valuation>) -> Self {
        coeffs.truncate(dmax + 1);
        TruncSeries { zero: proto.zero_like(), coeffs, dmax, exact: false, tail }
    }

    pub fn zero(proto: &S, dmax: usize) -> Self {
        Self::poly(proto, Vec::new(), dmax)
    }

    pub fn constant(c: S, dmax: usize) -> Self {
        Self::poly(&c, vec![c], dmax)
    }

    /// The exact polynomial T.
    pub fn t(proto: &S, rel: u32, dmax: usize) -> Self {
        Self::poly(proto, vec![proto.zero_like(), proto.one_like(rel)], dmax)
    }

    fn trim(&mut self) {
        if self.exact {
            while self.coeffs.last().is_some_and(|c| c.abs_prec() == i32::MAX) {
                self.coeffs.pop();
            }
        }
    }

    pub fn proto(&self) -> &S {
        &self.zero
    }

    pub fn dmax(&self) -> usize {
        self.dmax
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn tail(&self) -> Option<Valuation> {
        self.tail
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> S {
        self.coeffs.get(n).copied().unwrap_or(self.zero)
    }

    /// Highest index whose coefficient is nonzero to precision.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// Minimum valuation floor over stored coefficients.
    pub fn min_valuation(&self) -> Valuation {
        self.coeffs.iter().map(|c| c.val_floor()).min().unwrap_or(Valuation::INFINITY)
    }

    /// Lower bound for every coefficient including the dropped ones; None
    /// when a truncation has no tail bound.
    pub fn total_floor(&self) -> Option<Valuation> {
        let m = self.min_valuation();
        if self.exact {
            Some(m)
        } else {
            self.tail.map(|t| t.min(m))
        }
    }

    /// Minimum absolute precision over stored coefficients.
    pub fn precision(&self) -> i32 {
        self.coeffs.iter().map(|c| c.abs_prec()).min().unwrap_or(i32::MAX)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn with_dmax(&self, dmax: usize) -> Self {
        let mut out = self.clone();
        if dmax < self.dmax {
            let dropped = out.coeffs.len() > dmax + 1;
            let floor_dropped = out.coeffs[dmax + 1..].iter().map(|c| c.val_floor()).min();
            out.coeffs.truncate(dmax + 1);
            out.dmax = dmax;
            if dropped || !self.exact {
                let tail = if self.exact { Some(Valuation::INFINITY) } else { self.tail };
                out.tail = match (tail, floor_dropped) {
                    (Some(t), Some(f)) => Some(t.min(f)),
                    (t, None) => t,
                    (None, _) => None,
                };
                out.exact = false;
            }
        } else if self.exact {
            out.dmax = dmax;
        }
        out
    }

    pub fn map(&self, f: impl Fn(&S) -> S) -> Self {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(f).collect();
        out.trim();
        out
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -*c)
    }

    pub fn scale(&self, x: &Padic) -> Self {
        let mut out = self.map(|c| c.scale(x));
        out.tail = self.tail.map(|t| t + x.valuation());
        out
    }

    pub fn scale_s(&self, x: &S) -> Self {
        let mut out = self.map(|c| *c * *x);
        out.tail = self.tail.map(|t| t + x.valuation());
        out
    }

    fn combine_meta(&self, other: &Self) -> (usize, bool, Option<Valuation>) {
        let dmax = self.dmax.min(other.dmax);
        let exact = self.exact && other.exact && self.len().max(other.len()) <= dmax + 1;
        let tail = if exact {
            None
        } else {
            let t = |s: &Self| -> Option<Valuation> {
                if s.exact {
                    let f = s.coeffs.get(dmax + 1..).map(|r| r.iter().map(|c| c.val_floor()).min());
                    Some(f.flatten().unwrap_or(Valuation::INFINITY))
                } else {
                    let beyond = s.coeffs.get(dmax + 1..).and_then(|r| r.iter().map(|c| c.val_floor()).min());
                    s.tail.map(|t| beyond.map_or(t, |b| b.min(t)))
                }
            };
            match (t(self), t(other)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            }
        };
        (dmax, exact, tail)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (dmax, exact, tail) = self.combine_meta(other);
        let n = self.len().max(other.len()).min(dmax + 1);
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        let mut out = TruncSeries { zero: self.zero, coeffs, dmax, exact, tail };
        out.trim();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let dmax = self.dmax.min(other.dmax);
        if self.is_empty() && self.exact || other.is_empty() && other.exact {
            return Self::zero(&self.zero, dmax);
        }
        let full = self.len() + other.len() - 1;
        let n = full.min(dmax + 1);
        let mut coeffs = vec![self.zero; n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.abs_prec() == i32::MAX {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n - i) {
                coeffs[i + j] = coeffs[i + j] + *a * *b;
            }
        }
        let exact = self.exact && other.exact && full <= dmax + 1;
        let tail = if exact {
            None
        } else {
            match (self.total_floor(), other.total_floor()) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            }
        };
        let mut out = TruncSeries { zero: self.zero, coeffs, dmax, exact, tail };
        out.trim();
        out
    }

    /// Multiplicative inverse of a series with unit constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.valuation() != Valuation::ZERO {
            return Err(Error::NonUnit(format!("constant term {c0}")));
        }
        let g0 = c0.inv()?;
        let n = self.dmax + 1;
        let mut g = vec![g0];
        for m in 1..n {
            let mut acc = self.zero;
            for i in 1..=m.min(self.len().saturating_sub(1)) {
                acc = acc + self.coeffs[i] * g[m - i];
            }
            g.push(-(g0 * acc));
        }
        let integral = self.total_floor().is_some_and(|f| f >= Valuation::ZERO);
        if self.exact && self.len() <= 1 {
            return Ok(Self::poly(&self.zero, vec![g0], self.dmax));
        }
        Ok(Self::truncated(&self.zero, g, self.dmax, integral.then_some(Valuation::ZERO)))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inverse()?))
    }

    /// Polynomial long division by `m`; the remainder has degree < deg m.
    /// Truncations are accepted when `m` is distinguished and the tail is
    /// bounded, with the remainder's precision capped accordingly.
    pub fn rem(&self, m: &Self) -> Result<Self> {
        Ok(self.divrem(m)?.1)
    }

    pub fn divrem(&self, m: &Self) -> Result<(Self, Self)> {
        if !m.exact {
            return Err(Error::InsufficientTruncation);
        }
        let d = m.degree().ok_or(Error::DivisionByZero)?;
        let lead_inv = m.coeffs[d].inv()?;
        let mut r: Vec<S> = self.coeffs.clone();
        let cap = if self.exact {
            None
        } else {
            let tail = self.tail.ok_or(Error::InsufficientTruncation)?;
            // T^n mod m gains m's lower-coefficient valuation every d steps.
            let lower = m.coeffs[..d].iter().map(|c| (*c * lead_inv).val_floor()).min();
            let step = lower.unwrap_or(Valuation::INFINITY);
            if step <= Valuation::ZERO {
                return Err(Error::InsufficientTruncation);
            }
            let blocks = ((self.dmax + 1) / d) as i64;
            let gain = step.halves().map_or(i64::MAX / 4, |h| h * blocks / 2);
            Some(tail.floor().unwrap_or(i64::MAX / 4).saturating_add(gain))
        };
        let mut q = vec![self.zero; r.len().saturating_sub(d)];
        for i in (d..r.len()).rev() {
            let f = r[i] * lead_inv;
            if f.abs_prec() == i32::MAX {
                continue;
            }
            q[i - d] = f;
            for k in 0..=d {
                r[i - d + k] = r[i - d + k] - f * m.coeffs[k];
            }
        }
        r.truncate(d);
        if let Some(c) = cap {
            let c = c.clamp(i32::MIN as i64, (i32::MAX - 1) as i64) as i32;
            r = r.into_iter().map(|x| x.cap_abs(c)).collect();
        }
        let rem = Self::poly(&self.zero, r, self.dmax);
        let quo = TruncSeries { zero: self.zero, coeffs: q, dmax: self.dmax, exact: self.exact, tail: None };
        Ok((quo, rem))
    }

    /// Coefficientwise agreement to the precision of both sides.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let n = self.len().max(other.len());
        (0..n).all(|i| (self.coeff(i) - other.coeff(i)).is_zero())
    }

    /// Minimum valuation of the coefficientwise difference (∞ when equal to
    /// precision).
    pub fn diff_valuation(&self, other: &Self) -> Valuation {
        let n = self.len().max(other.len());
        (0..n).map(|i| (self.coeff(i) - other.coeff(i)).valuation()).min().unwrap_or(Valuation::INFINITY)
    }

    /// Cap the absolute precision of every coefficient.
    pub fn cap_abs(&self, abs: i32) -> Self {
        let mut out = self.clone();
        out.coeffs = self.coeffs.iter().map(|c| c.cap_abs(abs)).collect();
        out
    }

    /// f(X - 1): coefficients in the basis X^s with X = 1 + T. Exact only.
    pub fn to_x_basis(&self) -> Result<Vec<S>> {
        if !self.exact {
            return Err(Error::InsufficientTruncation);
        }
        Ok(shift_poly(&self.coeffs, &self.zero, false))
    }

    /// The polynomial g(1 + T) for g given in the X basis.
    pub fn from_x_basis(proto: &S, g: &[S], dmax: usize) -> Self {
        Self::poly(proto, shift_poly(g, proto, true), dmax)
    }

    /// f(c + d·T) for scalars c (with v(c) ≥ 1 when f is a truncation) and d.
    pub fn substitute_affine(&self, c: &S, d: &S) -> Result<Self> {
        let lin = Self::poly(&self.zero, vec![*c, *d], self.dmax);
        let mut acc = Self::zero(&self.zero, self.dmax);
        for a in self.coeffs.iter().rev() {
            acc = acc.mul(&lin).add(&Self::constant(*a, self.dmax));
        }
        if self.exact {
            return Ok(Self::poly(&self.zero, acc.coeffs, self.dmax));
        }
        let tail = self.tail.ok_or(Error::InsufficientTruncation)?;
        let vc = c.valuation();
        if vc < Valuation::int(1) && !vc.is_infinite() {
            return Err(Error::InsufficientTruncation);
        }
        let t = tail.floor().unwrap_or(i32::MAX as i64 / 4);
        let vcf = vc.floor().unwrap_or(i32::MAX as i64 / 4);
        let coeffs = acc
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, x)| {
                let cap = t + (self.dmax + 1 - m) as i64 * vcf;
                x.cap_abs(cap.min((i32::MAX - 1) as i64) as i32)
            })
            .collect();
        Ok(Self::truncated(&self.zero, coeffs, self.dmax, Some(tail)))
    }
}

/// Taylor shift by ±1: forward maps f(T) to f(X - 1) (inverse = false) or
/// g(X) to g(1 + T) (inverse = true), via Horner in the shifted variable.
fn shift_poly<S: Scalar>(f: &[S], zero: &S, inverse: bool) -> Vec<S> {
    let mut acc: Vec<S> = Vec::with_capacity(f.len());
    for a in f.iter().rev() {
        // acc <- acc * (Y + s) + a with s = -1 forward, +1 inverse
        let mut next = vec![*zero; acc.len() + 1];
        for (i, c) in acc.iter().enumerate() {
            next[i + 1] = next[i + 1] + *c;
            next[i] = if inverse { next[i] + *c } else { next[i] - *c };
        }
        next[0] = next[0] + *a;
        acc = next;
    }
    acc
}

/// JSON shape of a series of p-adic numbers.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct SeriesWire {
    #[serde(rename = "Dmax")]
    pub dmax: usize,
    pub coeffs: Vec<Padic>,
    #[serde(default = "default_true")]
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_floor: Option<i64>,
}

fn default_true() -> bool {
    true
}

impl TruncSeries<Padic> {
    pub fn to_wire(&self) -> SeriesWire {
        SeriesWire {
            dmax: self.dmax,
            coeffs: self.coeffs.clone(),
            exact: self.exact,
            tail_floor: self.tail.and_then(|t| t.floor()),
        }
    }

    pub fn from_wire(p: u32, w: &SeriesWire) -> Result<Self> {
        if let Some(c) = w.coeffs.iter().find(|c| c.p() != p) {
            return Err(Error::ContextMismatch { left: p, right: c.p() });
        }
        let proto = Padic::exact_zero(p);
        if w.coeffs.len() > w.dmax + 1 {
            return Err(Error::TruncationOverflow { degree: w.coeffs.len() - 1, dmax: w.dmax });
        }
        Ok(if w.exact {
            Self::poly(&proto, w.coeffs.clone(), w.dmax)
        } else {
            Self::truncated(&proto, w.coeffs.clone(), w.dmax, w.tail_floor.map(Valuation::int))
        })
    }
}
