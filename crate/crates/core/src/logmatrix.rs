//! Finite-level logarithmic matrices for X^2 - aX + v p^(k+1).
//!
//! With A = [[a, 1], [-v p^(k+1), 0]] and
//! C_m = [[a, 1], [-v ∏_i Φ_m(u^(-i)(1+T) - 1), 0]], the level-N matrix is
//! M^(N) = A^(-(N+1)) C_N ⋯ C_1 A, so that det M^(N) is exactly the
//! finite log product and the second row of A^n M^(N) approaches the
//! second row of C_{n-1} ⋯ C_1 A, which the level-(n-1) factor divides.

use serde::Serialize;

use crate::distribution::growth_estimate;
use crate::error::{Error, Result};
use crate::iwasawa::{log_product, phi_product, DEGREE_BUDGET};
use crate::padic::modint::ppow;
use crate::padic::{hensel_roots, Padic, PrimeCtx, Quad, Roots, Scalar, Valuation};
use crate::patch::floor_valuation;
use crate::series::TruncSeries;

pub type ConstMat = [[Padic; 2]; 2];
pub type Mat2<S> = [[TruncSeries<S>; 2]; 2];

/// v(a) > ⌊k/(p-1)⌋ and v a unit.
pub fn check_slope(ctx: &PrimeCtx, a: &Padic, v: &Padic, k: u32) -> Result<()> {
    let bound = (k / (ctx.p() - 1)) as i32;
    match a.val() {
        Some(va) if va <= bound => {
            return Err(Error::SlopeViolation(format!("v(a) = {va} must exceed ⌊k/(p-1)⌋ = {bound}")))
        }
        None if a.abs_prec() <= bound => {
            return Err(Error::PrecisionExhausted("a is zero to a precision below the slope bound".into()))
        }
        _ => {}
    }
    if !v.is_unit() {
        return Err(Error::NonUnit(format!("v = {v}")));
    }
    Ok(())
}

pub fn build_a(ctx: &PrimeCtx, a: &Padic, v: &Padic, k: u32) -> Result<ConstMat> {
    check_slope(ctx, a, v, k)?;
    Ok([[*a, ctx.one()], [-(*v * ctx.p_power(k as i32 + 1)), ctx.zero()]])
}

pub fn const_det(m: &ConstMat) -> Padic {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn const_inv(m: &ConstMat) -> Result<ConstMat> {
    let d = const_det(m);
    if d.is_zero() {
        return Err(Error::Singular("constant matrix".into()));
    }
    let di = d.inv()?;
    Ok([[m[1][1] * di, -m[0][1] * di], [-m[1][0] * di, m[0][0] * di]])
}

pub fn const_mul(x: &ConstMat, y: &ConstMat) -> ConstMat {
    let e = |i: usize, j: usize| x[i][0] * y[0][j] + x[i][1] * y[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn const_pow(x: &ConstMat, e: u32, one: Padic) -> ConstMat {
    let zero = Padic::exact_zero(one.p());
    let mut acc = [[one, zero], [zero, one]];
    for _ in 0..e {
        acc = const_mul(&acc, x);
    }
    acc
}

pub fn build_c(ctx: &PrimeCtx, m: u32, a: &Padic, v: &Padic, k: u32, dmax: usize) -> Result<Mat2<Padic>> {
    let prod = phi_product(ctx, m, k, dmax)?;
    let z = ctx.zero();
    Ok([
        [TruncSeries::constant(*a, dmax), TruncSeries::constant(ctx.one(), dmax)],
        [prod.scale(v).neg(), TruncSeries::zero(&z, dmax)],
    ])
}

pub fn mat_mul<S: Scalar>(x: &Mat2<S>, y: &Mat2<S>) -> Mat2<S> {
    let e = |i: usize, j: usize| x[i][0].mul(&y[0][j]).add(&x[i][1].mul(&y[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// c·x for a constant matrix c.
pub fn const_left(c: &ConstMat, x: &Mat2<Padic>) -> Mat2<Padic> {
    let e = |i: usize, j: usize| x[0][j].scale(&c[i][0]).add(&x[1][j].scale(&c[i][1]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// x·c for a constant matrix c.
pub fn const_right(x: &Mat2<Padic>, c: &ConstMat) -> Mat2<Padic> {
    let e = |i: usize, j: usize| x[i][0].scale(&c[0][j]).add(&x[i][1].scale(&c[1][j]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

pub fn det<S: Scalar>(m: &Mat2<S>) -> TruncSeries<S> {
    m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0]))
}

pub fn adjugate<S: Scalar>(m: &Mat2<S>) -> Mat2<S> {
    [[m[1][1].clone(), m[0][1].neg()], [m[1][0].neg(), m[0][0].clone()]]
}

pub fn mat_truncate<S: Scalar>(m: &Mat2<S>, dmax: usize) -> Mat2<S> {
    let t = |f: &TruncSeries<S>| f.with_dmax(dmax);
    [[t(&m[0][0]), t(&m[0][1])], [t(&m[1][0]), t(&m[1][1])]]
}

fn mat_floor(m: &Mat2<Padic>) -> Valuation {
    m.iter().flatten().map(floor_valuation).min().unwrap_or(Valuation::INFINITY)
}

/// Partial products of the logarithmic matrix up to a level, kept as exact
/// polynomials.
#[derive(Clone, Debug)]
pub struct LogMatrix {
    pub ctx: PrimeCtx,
    pub a: Padic,
    pub v: Padic,
    pub k: u32,
    pub a_mat: ConstMat,
    dmax: usize,
    /// M^(n) for n = 0..=levels
    partials: Vec<Mat2<Padic>>,
}

impl LogMatrix {
    pub fn new(ctx: &PrimeCtx, a: &Padic, v: &Padic, k: u32, levels: u32) -> Result<Self> {
        let a_mat = build_a(ctx, a, v, k)?;
        let p = ctx.p();
        let deg = (k as usize + 1) * (ppow(p, levels) as usize - 1);
        if levels as usize * ppow(p, levels) as usize > DEGREE_BUDGET {
            return Err(Error::TruncationOverflow { degree: deg, dmax: DEGREE_BUDGET });
        }
        let dmax = deg.max(1);
        let a_inv = const_inv(&a_mat)?;
        let one = ctx.one();
        let z = ctx.zero();
        let ident = [
            [TruncSeries::constant(one, dmax), TruncSeries::zero(&z, dmax)],
            [TruncSeries::zero(&z, dmax), TruncSeries::constant(one, dmax)],
        ];
        let mut chain = ident.clone();
        let mut partials = vec![ident];
        let mut left = a_inv;
        for m in 1..=levels {
            chain = mat_mul(&build_c(ctx, m, a, v, k, dmax)?, &chain);
            left = const_mul(&left, &a_inv);
            partials.push(const_right(&const_left(&left, &chain), &a_mat));
        }
        Ok(LogMatrix { ctx: *ctx, a: *a, v: *v, k, a_mat, dmax, partials })
    }

    pub fn levels(&self) -> u32 {
        self.partials.len() as u32 - 1
    }

    pub fn dmax(&self) -> usize {
        self.dmax
    }

    /// M^(n).
    pub fn m(&self, n: u32) -> &Mat2<Padic> {
        &self.partials[n as usize]
    }

    /// c = v p^(k+1).
    pub fn c(&self) -> Padic {
        self.v * self.ctx.p_power(self.k as i32 + 1)
    }

    pub fn roots(&self) -> Result<Roots> {
        hensel_roots(&self.a, &self.c())
    }

    /// Second row of A^n M^(level) reduced modulo ∏_i Φ_{n-1}(u^(-i)(1+T) - 1);
    /// returns the smallest coefficient valuation of the remainder (∞ for the
    /// empty modulus at n = 1).
    pub fn divisibility(&self, n: u32, level: u32) -> Result<Valuation> {
        if n <= 1 {
            return Ok(Valuation::INFINITY);
        }
        let an = const_pow(&self.a_mat, n, self.ctx.one());
        let row = const_left(&an, self.m(level));
        let modulus = phi_product(&self.ctx, n - 1, self.k, self.dmax)?;
        let mut worst = Valuation::INFINITY;
        for f in &row[1] {
            let r = f.rem(&modulus)?;
            if !r.coeffs().iter().all(|c| c.is_zero()) {
                worst = worst.min(r.min_valuation());
            }
        }
        Ok(worst)
    }

    /// Rows of Q^(-1) M^(level) with Q = [[α, -β], [-c, c]], over the ring
    /// holding the roots.
    pub fn eigen_rows(&self, level: u32) -> Result<EigenRows> {
        let m = self.m(level);
        let c = self.c();
        match self.roots()? {
            Roots::Split { alpha, beta } => {
                let s = (c * (alpha - beta)).inv()?;
                let row = |x: Padic| -> [TruncSeries<Padic>; 2] {
                    [0, 1].map(|j| m[0][j].scale(&(c * s)).add(&m[1][j].scale(&(x * s))))
                };
                Ok(EigenRows::Split { rows: [row(beta), row(alpha)], vals: [alpha.valuation(), beta.valuation()] })
            }
            Roots::Quadratic(ext) => {
                let (alpha, beta) = (ext.alpha(), ext.beta());
                let s = (ext.embed(c) * (alpha - beta)).inv()?;
                let lift = |f: &TruncSeries<Padic>| -> TruncSeries<Quad> {
                    let cs = f.coeffs().iter().map(|x| ext.embed(*x)).collect();
                    if f.is_exact() {
                        TruncSeries::poly(&ext.embed(self.ctx.zero()), cs, f.dmax())
                    } else {
                        TruncSeries::truncated(&ext.embed(self.ctx.zero()), cs, f.dmax(), f.tail())
                    }
                };
                let row = |x: Quad| -> [TruncSeries<Quad>; 2] {
                    [0, 1].map(|j| lift(&m[0][j]).scale_s(&(ext.embed(c) * s)).add(&lift(&m[1][j]).scale_s(&(x * s))))
                };
                Ok(EigenRows::Quadratic { rows: [row(beta), row(alpha)], vals: [alpha.valuation(), beta.valuation()] })
            }
        }
    }

    pub fn check_properties(&self, level: u32) -> Result<LogMatrixReport> {
        if level == 0 || level > self.levels() {
            return Err(Error::Validation(format!("level {level} outside 1..={}", self.levels())));
        }
        let d = det(self.m(level));
        let lp = log_product(&self.ctx, self.k, level, self.dmax)?;
        let det_matches_log_product = d.approx_eq(&lp);
        let det_constant_unit = d.coeff(0).valuation() == Valuation::ZERO;
        let divisibility =
            (1..=level).map(|n| Ok((n, level - n, self.divisibility(n, level)?))).collect::<Result<Vec<_>>>()?;
        let cauchy = (1..=level)
            .map(|n| {
                let diff: Vec<TruncSeries<Padic>> = self.m(n).iter().flatten().zip(self.m(n - 1).iter().flatten())
                    .map(|(x, y)| x.sub(y))
                    .collect();
                (n, diff.iter().map(floor_valuation).min().unwrap_or(Valuation::INFINITY))
            })
            .collect();
        let rows = self.eigen_rows(level)?;
        let (targets, growth) = rows.growth();
        Ok(LogMatrixReport {
            level,
            det_matches_log_product,
            det_constant_unit,
            divisibility,
            cauchy,
            growth_targets: targets.map(|v| v.as_f64()),
            row_growth: growth,
            min_valuation: mat_floor(self.m(level)),
        })
    }
}

/// Rows of Q^(-1) M; `vals` holds (v(α), v(β)).
#[allow(clippy::large_enum_variant)]
pub enum EigenRows {
    Split { rows: [[TruncSeries<Padic>; 2]; 2], vals: [Valuation; 2] },
    Quadratic { rows: [[TruncSeries<Quad>; 2]; 2], vals: [Valuation; 2] },
}

impl EigenRows {
    /// Per row, the larger growth estimate of its two entries.
    pub fn growth(&self) -> ([Valuation; 2], [Option<f64>; 2]) {
        fn est<S: Scalar>(row: &[TruncSeries<S>; 2]) -> Option<f64> {
            row.iter().filter_map(growth_estimate).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |y| y.max(x))))
        }
        match self {
            EigenRows::Split { rows, vals } => (*vals, [est(&rows[0]), est(&rows[1])]),
            EigenRows::Quadratic { rows, vals } => (*vals, [est(&rows[0]), est(&rows[1])]),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LogMatrixReport {
    pub level: u32,
    pub det_matches_log_product: bool,
    pub det_constant_unit: bool,
    /// (n, n' - n, smallest remainder valuation)
    pub divisibility: Vec<(u32, u32, Valuation)>,
    /// (n, valuation of M^(n) - M^(n-1))
    pub cauchy: Vec<(u32, Valuation)>,
    pub growth_targets: [f64; 2],
    pub row_growth: [Option<f64>; 2],
    pub min_valuation: Valuation,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_matrix() {
        let ctx = PrimeCtx::new(3, 20).unwrap();
        let a = build_a(&ctx, &ctx.int(3), &ctx.one(), 0).unwrap();
        assert!(const_det(&a).approx_eq(&ctx.int(3)));
        assert!((a[0][0] + a[1][1]).approx_eq(&ctx.int(3)));
        assert!(a[1][0].approx_eq(&ctx.int(-3)));
        assert!(build_a(&ctx, &ctx.int(2), &ctx.one(), 0).is_err());
    }

    #[test]
    fn level_matrix_example() {
        let ctx = PrimeCtx::new(3, 20).unwrap();
        let c = build_c(&ctx, 1, &ctx.int(3), &ctx.one(), 0, 10).unwrap();
        let want = TruncSeries::poly(&ctx.zero(), vec![ctx.int(-3), ctx.int(-3), ctx.int(-1)], 10);
        assert!(c[1][0].approx_eq(&want));
    }

    #[test]
    fn det_is_log_product() {
        let ctx = PrimeCtx::new(3, 30).unwrap();
        let lm = LogMatrix::new(&ctx, &ctx.int(3), &ctx.one(), 0, 3).unwrap();
        assert!(is_identity(lm.m(0)));
        let m1 = lm.m(1);
        let want = TruncSeries::poly(&ctx.zero(), vec![ctx.int(3), ctx.int(3), ctx.one()], 1).scale(&ctx.p_power(-1));
        assert!(det(m1).approx_eq(&want));
        for n in 1..=3 {
            let r = lm.check_properties(n).unwrap();
            assert!(r.det_matches_log_product && r.det_constant_unit);
            assert!(r.divisibility.iter().all(|x| x.2.is_infinite()));
        }
    }

    fn is_identity(m: &Mat2<Padic>) -> bool {
        let ctx = PrimeCtx::new(m[0][0].proto().p(), 10).unwrap();
        let one = TruncSeries::constant(ctx.one(), 1);
        let zero = TruncSeries::zero(&ctx.zero(), 1);
        m[0][0].approx_eq(&one) && m[1][1].approx_eq(&one) && m[0][1].approx_eq(&zero) && m[1][0].approx_eq(&zero)
    }

    #[test]
    fn cauchy_when_beta_slope_small() {
        let ctx = PrimeCtx::new(3, 30).unwrap();
        let lm = LogMatrix::new(&ctx, &ctx.int(3), &ctx.one(), 1, 4).unwrap();
        let at = |n: u32, d: usize| {
            lm.m(n).iter().flatten().zip(lm.m(n - 1).iter().flatten())
                .map(|(x, y)| (x.coeff(d) - y.coeff(d)).valuation())
                .min()
                .unwrap()
        };
        assert!(at(4, 0) > at(2, 0));
        assert!(at(4, 1) > at(2, 1));
    }

    #[test]
    fn growth_split_distinct_slopes() {
        let ctx = PrimeCtx::new(5, 27).unwrap();
        let lm = LogMatrix::new(&ctx, &ctx.int(5), &ctx.one(), 2, 3).unwrap();
        let r = lm.check_properties(3).unwrap();
        assert_eq!(r.growth_targets, [1.0, 2.0]);
        for (g, t) in r.row_growth.iter().zip(r.growth_targets) {
            assert!((g.unwrap() - t).abs() <= 0.25);
        }
    }
}
