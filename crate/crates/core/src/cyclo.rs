//! Cyclotomic quotient rings and evaluation of series at twisted
//! finite-order characters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iwasawa::UnitTable;
use crate::padic::modint::ppow;
use crate::padic::{Padic, PrimeCtx, Scalar};
use crate::series::TruncSeries;

/// S[X]/Φ_{p^m}(X); ζ is the class of X. Level 0 is S itself (ζ = 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CycloRing {
    p: u32,
    m: u32,
}

impl CycloRing {
    pub fn new(p: u32, m: u32) -> Self {
        CycloRing { p, m }
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    /// Order of ζ.
    pub fn order(&self) -> usize {
        ppow(self.p, self.m) as usize
    }

    pub fn dim(&self) -> usize {
        if self.m == 0 {
            1
        } else {
            (self.p as usize - 1) * ppow(self.p, self.m - 1) as usize
        }
    }

    pub fn zero<S: Scalar>(&self, proto: &S) -> CycloElt<S> {
        CycloElt { ring: *self, coeffs: vec![proto.zero_like(); self.dim()] }
    }

    pub fn constant<S: Scalar>(&self, c: S) -> CycloElt<S> {
        let mut z = self.zero(&c);
        z.coeffs[0] = c;
        z
    }

    /// c·ζ^e.
    pub fn monomial<S: Scalar>(&self, c: S, e: u64) -> CycloElt<S> {
        let mut full = vec![c.zero_like(); self.order()];
        full[(e % self.order() as u64) as usize] = c;
        self.fold(full)
    }

    /// Reduce a vector indexed by exponents mod p^m into the power basis,
    /// using Φ_{p^m}(X) = Σ_{i<p} X^(i p^(m-1)).
    fn fold<S: Scalar>(&self, mut full: Vec<S>) -> CycloElt<S> {
        let dim = self.dim();
        if self.m == 0 {
            let mut acc = full[0].zero_like();
            for c in full {
                acc = acc + c;
            }
            return CycloElt { ring: *self, coeffs: vec![acc] };
        }
        let step = ppow(self.p, self.m - 1) as usize;
        for b in 0..step {
            let c = full[dim + b];
            if c.abs_prec() == i32::MAX && c.is_zero() {
                continue;
            }
            for i in 0..self.p as usize - 1 {
                full[i * step + b] = full[i * step + b] - c;
            }
        }
        full.truncate(dim);
        CycloElt { ring: *self, coeffs: full }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CycloElt<S: Scalar> {
    ring: CycloRing,
    coeffs: Vec<S>,
}

impl<S: Scalar> CycloElt<S> {
    pub fn ring(&self) -> CycloRing {
        self.ring
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.ring, other.ring, "cyclotomic ring mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a + *b).collect();
        CycloElt { ring: self.ring, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a - *b).collect();
        CycloElt { ring: self.ring, coeffs }
    }

    pub fn scale(&self, x: &Padic) -> Self {
        CycloElt { ring: self.ring, coeffs: self.coeffs.iter().map(|c| c.scale(x)).collect() }
    }

    pub fn scale_s(&self, x: &S) -> Self {
        CycloElt { ring: self.ring, coeffs: self.coeffs.iter().map(|c| *c * *x).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        let n = self.ring.order();
        let mut full = vec![self.coeffs[0].zero_like(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                let k = (i + j) % n;
                full[k] = full[k] + *a * *b;
            }
        }
        self.ring.fold(full)
    }

    /// Multiply by ζ^e.
    pub fn mul_zeta(&self, e: u64) -> Self {
        let n = self.ring.order();
        let e = (e % n as u64) as usize;
        if e == 0 {
            return self.clone();
        }
        let mut full = vec![self.coeffs[0].zero_like(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            full[(i + e) % n] = *c;
        }
        self.ring.fold(full)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// Minimum coordinate valuation.
    pub fn min_valuation(&self) -> crate::padic::Valuation {
        self.coeffs.iter().map(|c| c.valuation()).min().unwrap()
    }

    /// Minimum coordinate absolute precision.
    pub fn precision(&self) -> i32 {
        self.coeffs.iter().map(|c| c.abs_prec()).min().unwrap()
    }

    pub fn cap_abs(&self, abs: i32) -> Self {
        CycloElt { ring: self.ring, coeffs: self.coeffs.iter().map(|c| c.cap_abs(abs)).collect() }
    }
}

/// θ(t) = ε(t)^delta_power · ζ_{p^(r-1)}^(wild_exp · log_u t) on units mod p^r.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirichletChar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    pub r: u32,
    pub delta_power: u32,
    pub wild_exp: u64,
}

impl DirichletChar {
    pub fn new(p: u32, r: u32, delta_power: u32, wild_exp: u64) -> Result<Self> {
        let c = DirichletChar { p: Some(p), r, delta_power, wild_exp };
        c.validate(p)?;
        Ok(c.normalized(p))
    }

    pub fn trivial(p: u32) -> Self {
        DirichletChar { p: Some(p), r: 1, delta_power: 0, wild_exp: 0 }
    }

    pub fn validate(&self, p: u32) -> Result<()> {
        if let Some(q) = self.p {
            if q != p {
                return Err(Error::ContextMismatch { left: p, right: q });
            }
        }
        if self.r == 0 {
            return Err(Error::Validation("character level r must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Reduce exponents into range and fill in p.
    pub fn normalized(&self, p: u32) -> Self {
        let q = ppow(p, self.r - 1);
        DirichletChar {
            p: Some(p),
            r: self.r,
            delta_power: self.delta_power % (p - 1),
            wild_exp: self.wild_exp % q,
        }
    }

    /// The ring holding the wild part: level r - 1.
    pub fn ring(&self, p: u32) -> CycloRing {
        CycloRing::new(p, self.r - 1)
    }

    /// Exponent of the conductor: 0 for the trivial character, 1 for a
    /// nontrivial tame character, 1 + (order exponent of the wild part)
    /// otherwise.
    pub fn conductor_exp(&self, p: u32) -> u32 {
        let wild = self.wild_order_exp(p);
        if wild > 0 {
            wild + 1
        } else if !self.delta_power.is_multiple_of(p - 1) {
            1
        } else {
            0
        }
    }

    /// m with ζ^(wild_exp) a primitive p^m-th root of unity.
    pub fn wild_order_exp(&self, p: u32) -> u32 {
        let q = ppow(p, self.r - 1);
        let mut w = self.wild_exp % q;
        if w == 0 {
            return 0;
        }
        let mut m = self.r - 1;
        while w.is_multiple_of(p as u64) {
            w /= p as u64;
            m -= 1;
        }
        m
    }

    /// θ·ε^j.
    pub fn times_teich(&self, p: u32, j: u32) -> Self {
        DirichletChar { delta_power: (self.delta_power + j) % (p - 1), ..self.normalized(p) }
    }

    pub fn value(&self, table: &UnitTable, t: u64) -> CycloElt<Padic> {
        let p = table.p();
        let ring = self.ring(p);
        ring.monomial(table.teich_pow(t, self.delta_power), self.wild_exp.wrapping_mul(table.log(t)))
    }
}

/// Evaluate f at T = u^j ζ^w - 1, with ζ = ζ_{p^(r-1)} and w the wild
/// exponent of θ. Only the wild part of θ enters; picking the component is
/// the caller's job.
pub fn eval_series_at<S: Scalar>(
    ctx: &PrimeCtx,
    f: &TruncSeries<S>,
    j: i64,
    theta: &DirichletChar,
) -> Result<CycloElt<S>> {
    theta.validate(ctx.p())?;
    let th = theta.normalized(ctx.p());
    let ring = th.ring(ctx.p());
    let proto = *f.proto();
    let uj = ctx.u_pow(j);
    let mut acc = ring.zero(&proto);
    for c in f.coeffs().iter().rev() {
        let shifted = acc.mul_zeta(th.wild_exp).scale(&uj);
        acc = shifted.sub(&acc);
        acc.coeffs[0] = acc.coeffs[0] + *c;
    }
    if f.is_exact() {
        return Ok(acc);
    }
    let tail = f.tail().ok_or(Error::InsufficientTruncation)?;
    let m = th.wild_order_exp(ctx.p());
    let d1 = f.dmax() as i64 + 1;
    let gain = if m > 0 {
        d1 / CycloRing::new(ctx.p(), m).dim() as i64
    } else if j == 0 {
        return Ok(acc);
    } else {
        let mut vj = 0;
        let mut jj = j.unsigned_abs();
        while jj.is_multiple_of(ctx.p() as u64) {
            jj /= ctx.p() as u64;
            vj += 1;
        }
        d1 * (1 + vj)
    };
    let cap = tail.floor().unwrap_or(i32::MAX as i64 / 2).saturating_add(gain);
    Ok(acc.cap_abs(cap.min(i32::MAX as i64 - 1) as i32))
}

/// Σ_t values[t] θ(t) over units t mod p^r; `values` is indexed by residues.
pub fn char_sum<S: Scalar>(table: &UnitTable, values: &[S], theta: &DirichletChar) -> Result<CycloElt<S>> {
    let p = table.p();
    theta.validate(p)?;
    let th = theta.normalized(p);
    if th.r != table.level() || values.len() != table.modulus() as usize {
        return Err(Error::Validation("character level does not match the value table".into()));
    }
    let ring = th.ring(p);
    let proto = values[0].zero_like();
    let n = ring.order();
    let mut full = vec![proto; n];
    for t in table.units() {
        let e = (th.wild_exp * table.log(t)) as usize % n;
        full[e] = full[e] + values[t as usize].scale(&table.teich_pow(t, th.delta_power));
    }
    Ok(ring.fold(full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iwasawa::omega;

    #[test]
    fn omega_at_roots_of_unity() {
        let c = PrimeCtx::new(3, 12).unwrap();
        let w1 = omega(&c, 1, 40).unwrap();
        let z9 = DirichletChar::new(3, 3, 0, 1).unwrap();
        let v = eval_series_at(&c, &w1, 0, &z9).unwrap();
        // ζ9^3 - 1
        let want = CycloRing::new(3, 2).monomial(c.one(), 3).sub(&CycloRing::new(3, 2).constant(c.one()));
        assert!(v.approx_eq(&want) && !v.is_zero());
        let z3 = DirichletChar::new(3, 2, 0, 1).unwrap();
        assert!(eval_series_at(&c, &w1, 0, &z3).unwrap().is_zero());
    }

    #[test]
    fn monomial_law() {
        let c = PrimeCtx::new(5, 10).unwrap();
        let one_t = TruncSeries::poly(&c.zero(), vec![c.one(), c.one()], 20);
        let f = one_t.mul(&one_t).mul(&one_t);
        let th = DirichletChar::new(5, 2, 3, 2).unwrap();
        let v = eval_series_at(&c, &f, 2, &th).unwrap();
        let want = CycloRing::new(5, 1).monomial(c.u_pow(6), 6);
        assert!(v.approx_eq(&want));
    }

    #[test]
    fn orthogonality_and_dirac() {
        let c = PrimeCtx::new(5, 10).unwrap();
        let table = UnitTable::new(&c, 2).unwrap();
        let ones = vec![c.one(); 25];
        let th = DirichletChar::new(5, 2, 1, 3).unwrap();
        assert!(char_sum(&table, &ones, &th).unwrap().is_zero());
        let mut dirac = vec![c.zero(); 25];
        dirac[7] = c.one();
        assert!(char_sum(&table, &dirac, &th).unwrap().approx_eq(&th.value(&table, 7)));
    }

    #[test]
    fn tame_sum() {
        let c = PrimeCtx::new(5, 10).unwrap();
        let table = UnitTable::new(&c, 1).unwrap();
        let vals: Vec<Padic> = (0..5).map(|t| c.int(t)).collect();
        let th = DirichletChar::new(5, 1, 2, 0).unwrap();
        let s = char_sum(&table, &vals, &th).unwrap();
        let mut want = c.zero();
        for t in 1..5i64 {
            let e = crate::padic::teichmuller(&c, t, 10).unwrap();
            want = want + c.int(t) * e * e;
        }
        assert!(s.coeffs()[0].approx_eq(&want));
    }

    #[test]
    fn conductor() {
        assert_eq!(DirichletChar::new(5, 3, 0, 5).unwrap().conductor_exp(5), 2);
        assert_eq!(DirichletChar::new(5, 3, 0, 0).unwrap().conductor_exp(5), 0);
        assert_eq!(DirichletChar::new(5, 3, 2, 0).unwrap().conductor_exp(5), 1);
        assert_eq!(DirichletChar::new(5, 3, 0, 7).unwrap().conductor_exp(5), 3);
    }
}
