use super::modint::{self, ppow};
use super::{max_digits, Padic, PrimeCtx, QuadExt};
use crate::error::{Error, Result};

fn unit_residue(ctx: &PrimeCtx, t: i64, r: u32) -> Result<u64> {
    let p = ctx.p() as i64;
    if t.rem_euclid(p) == 0 {
        return Err(Error::NonUnit(format!("{t} mod {p}")));
    }
    if r == 0 || r > max_digits(ctx.p()) {
        return Err(Error::Validation(format!("level {r} out of range")));
    }
    Ok(modint::reduce_i64(t, ppow(ctx.p(), r)))
}

/// ε(t) mod p^r.
pub fn teichmuller(ctx: &PrimeCtx, t: i64, r: u32) -> Result<Padic> {
    let x = unit_residue(ctx, t, r)?;
    Ok(Padic::from_residue(ctx.p(), 0, modint::teich_mod(ctx.p(), x, r), r))
}

/// The exponent 0 ≤ m < p^(r-1) with u^m ≡ t/ε(t) mod p^r.
pub fn log_u(ctx: &PrimeCtx, t: i64, r: u32) -> Result<u64> {
    let x = unit_residue(ctx, t, r)?;
    let m = ppow(ctx.p(), r);
    let e = modint::teich_mod(ctx.p(), x, r);
    let y = modint::mulmod(x, modint::invmod(e, m).expect("unit"), m);
    Ok(modint::log1_mod(ctx.p(), ctx.u(), y, r))
}

/// Same contract as [`log_u`], by enumerating powers of u.
pub fn log_u_bruteforce(ctx: &PrimeCtx, t: i64, r: u32) -> Result<u64> {
    let x = unit_residue(ctx, t, r)?;
    let m = ppow(ctx.p(), r);
    let target = modint::mulmod(x, modint::invmod(modint::teich_mod(ctx.p(), x, r), m).unwrap(), m);
    let mut acc = 1 % m;
    for k in 0..ppow(ctx.p(), r - 1) {
        if acc == target {
            return Ok(k);
        }
        acc = modint::mulmod(acc, ctx.u() % m, m);
    }
    unreachable!("u generates 1 + pZ/p^r")
}

/// Square root of a square in Q_p; None when x is not a square.
pub fn sqrt(x: &Padic) -> Result<Option<Padic>> {
    let p = x.p();
    let v = match x.val() {
        Some(v) => v,
        None => return Err(Error::PrecisionExhausted("square root of an unresolved zero".into())),
    };
    if v % 2 != 0 {
        return Ok(None);
    }
    let w = x.shift(-v);
    let w0 = w.unit_residue() % p as u64;
    let Some(y0) = (1..p as u64).find(|y| y * y % p as u64 == w0) else {
        return Ok(None);
    };
    let rel = w.rel_prec();
    let two_inv = Padic::from_i64(p, 2, rel).inv()?;
    let mut y = Padic::from_i64(p, y0 as i64, rel);
    for _ in 0..8 {
        y = (y + w.checked_div(&y)?) * two_inv;
    }
    Ok(Some(y.shift(v / 2)))
}

/// Roots of X^2 - aX + c.
#[derive(Clone, Copy, Debug)]
pub enum Roots {
    /// Both roots lie in Q_p; v(alpha) ≤ v(beta).
    Split { alpha: Padic, beta: Padic },
    /// Irreducible over Q_p: the roots are α and its conjugate in the
    /// quadratic ring.
    Quadratic(QuadExt),
}

impl Roots {
    pub fn is_split(&self) -> bool {
        matches!(self, Roots::Split { .. })
    }
}

pub fn hensel_roots(a: &Padic, c: &Padic) -> Result<Roots> {
    if a.p() != c.p() {
        return Err(Error::ContextMismatch { left: a.p(), right: c.p() });
    }
    let vc = c.val().ok_or_else(|| Error::Validation("constant term must be nonzero".into()))?;
    if let Some(va) = a.val() {
        if 2 * va < vc {
            // the root of valuation v(a) is the attracting fixed point of x -> a - c/x
            let budget = a.abs_prec().max(c.abs_prec()).saturating_sub(va).max(0) as usize
                + va.unsigned_abs() as usize
                + 4;
            let mut x = *a;
            for _ in 0..budget {
                x = *a - c.checked_div(&x)?;
            }
            let y = c.checked_div(&x)?;
            return Ok(Roots::Split { alpha: x, beta: y });
        }
    }
    let ext = QuadExt::new(*a, *c);
    let d = ext.discriminant();
    if d.is_zero() {
        return Err(Error::RepeatedRoot);
    }
    match sqrt(&d)? {
        Some(s) => {
            let half = Padic::from_i64(a.p(), 2, s.rel_prec().max(1)).inv()?;
            let r1 = (*a + s) * half;
            let r2 = (*a - s) * half;
            let (alpha, beta) = if r2.valuation() < r1.valuation() { (r2, r1) } else { (r1, r2) };
            Ok(Roots::Split { alpha, beta })
        }
        None => Ok(Roots::Quadratic(ext)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn teichmuller_examples() {
        let c5 = PrimeCtx::new(5, 8).unwrap();
        assert_eq!(teichmuller(&c5, 11, 2).unwrap().residue(2).unwrap(), 1);
        assert_eq!(teichmuller(&c5, 1, 6).unwrap().residue(6).unwrap(), 1);
        let c3 = PrimeCtx::new(3, 8).unwrap();
        assert_eq!(teichmuller(&c3, 2, 2).unwrap().residue(2).unwrap(), 8);
        assert!(teichmuller(&c3, 6, 2).is_err());
    }

    #[test]
    fn log_examples() {
        let c5 = PrimeCtx::new(5, 8).unwrap();
        assert_eq!(log_u(&c5, 11, 2).unwrap(), 2);
        assert_eq!(log_u(&c5, 26, 2).unwrap(), 0);
        let c3 = PrimeCtx::new(3, 8).unwrap();
        assert_eq!(log_u(&c3, 7, 2).unwrap(), 2);
    }

    #[test]
    fn split_roots() {
        let c = PrimeCtx::new(5, 12).unwrap();
        match hensel_roots(&c.int(6), &c.int(5)).unwrap() {
            Roots::Split { alpha, beta } => {
                assert!(alpha.approx_eq(&c.int(1)));
                assert!(beta.approx_eq(&c.int(5)));
            }
            _ => panic!("expected split"),
        }
        match hensel_roots(&c.int(10), &c.int(125)).unwrap() {
            Roots::Split { alpha, beta } => {
                assert_eq!(alpha.val(), Some(1));
                assert_eq!(beta.val(), Some(2));
                assert!((alpha + beta).approx_eq(&c.int(10)));
                assert!((alpha * beta).approx_eq(&c.int(125)));
            }
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn quadratic_marker() {
        let c = PrimeCtx::new(3, 12).unwrap();
        match hensel_roots(&c.int(3), &c.int(9)).unwrap() {
            Roots::Quadratic(ext) => assert_eq!(ext.alpha().valuation().as_f64(), 1.0),
            _ => panic!("expected quadratic"),
        }
        assert_eq!(hensel_roots(&c.int(6), &c.int(9)).unwrap_err(), Error::RepeatedRoot);
        // equal slopes but reducible: (X-3)(X-6)
        assert!(hensel_roots(&c.int(9), &c.int(18)).unwrap().is_split());
    }

    #[test]
    fn square_roots() {
        let c = PrimeCtx::new(7, 10).unwrap();
        let s = sqrt(&c.int(2 * 49)).unwrap().unwrap();
        assert!((s * s).approx_eq(&c.int(98)));
        assert!(sqrt(&c.int(3)).unwrap().is_none());
        assert!(sqrt(&c.int(7)).unwrap().is_none());
    }
}
