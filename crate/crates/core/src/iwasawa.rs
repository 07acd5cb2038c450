//! ω and Φ polynomials, twisted substitutions, the group-ring-to-polynomial
//! map and the CRT patching kernel.
//!
//! Much of the work happens in the variable X = 1 + T, where the twist
//! T ↦ u^(-j)(1+T) - 1 is the diagonal scaling X^s ↦ u^(-js) X^s and
//! ω_r(u^(-j)(1+T) - 1) is a unit multiple of X^(p^r) - u^(j p^r).

use crate::error::{Error, Result};
use crate::padic::modint::{self, ppow};
use crate::padic::{Padic, PrimeCtx, Scalar, Valuation};
use crate::series::TruncSeries;

/// Hard ceiling on polynomial degrees built here.
pub const DEGREE_BUDGET: usize = 200_000;

/// Teichmüller values and u-logarithms of all units modulo p^r.
#[derive(Clone, Debug)]
pub struct UnitTable {
    p: u32,
    r: u32,
    /// indexed by t in [0, p^r); None for non-units
    entries: Vec<Option<(u64, u64)>>,
    prec: u32,
}

impl UnitTable {
    pub fn new(ctx: &PrimeCtx, r: u32) -> Result<Self> {
        if r == 0 || r > ctx.prec() {
            return Err(Error::Validation(format!("level {r} outside 1..={}", ctx.prec())));
        }
        let p = ctx.p();
        let n = ppow(p, r);
        let mut teich_by_residue = vec![0u64; p as usize];
        for a in 1..p as u64 {
            teich_by_residue[a as usize] = modint::teich_mod(p, a, ctx.prec());
        }
        let entries = (0..n)
            .map(|t| {
                if t % p as u64 == 0 {
                    return None;
                }
                let e = teich_by_residue[(t % p as u64) as usize];
                let m = ppow(p, r);
                let em = e % m;
                let y = modint::mulmod(t, modint::invmod(em, m).expect("unit"), m);
                Some((e, modint::log1_mod(p, ctx.u(), y, r)))
            })
            .collect();
        Ok(UnitTable { p, r, entries, prec: ctx.prec() })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.r
    }

    pub fn modulus(&self) -> u64 {
        ppow(self.p, self.r)
    }

    pub fn is_unit(&self, t: u64) -> bool {
        self.entries[t as usize].is_some()
    }

    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.modulus()).filter(|&t| self.is_unit(t))
    }

    pub fn log(&self, t: u64) -> u64 {
        self.entries[t as usize].expect("unit").1
    }

    /// ε(t)^a at full working precision.
    pub fn teich_pow(&self, t: u64, a: u32) -> Padic {
        let e = self.entries[t as usize].expect("unit").0;
        let m = ppow(self.p, self.prec);
        Padic::from_residue(self.p, 0, modint::powmod(e, a as u64, m), self.prec)
    }
}

fn check_budget(degree: usize) -> Result<()> {
    if degree > DEGREE_BUDGET {
        Err(Error::TruncationOverflow { degree, dmax: DEGREE_BUDGET })
    } else {
        Ok(())
    }
}

/// A polynomial given in the X basis as sparse (exponent, coefficient)
/// pairs, converted to the T basis.
fn sparse_x_to_t(ctx: &PrimeCtx, terms: &[(usize, Padic)], dmax: usize) -> TruncSeries<Padic> {
    let deg = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let mut g = vec![ctx.zero(); deg + 1];
    for (e, c) in terms {
        g[*e] = g[*e] + *c;
    }
    TruncSeries::from_x_basis(&ctx.zero(), &g, dmax)
}

/// ω_r(T) = (1+T)^(p^r) - 1.
pub fn omega(ctx: &PrimeCtx, r: u32, dmax: usize) -> Result<TruncSeries<Padic>> {
    twisted_omega(ctx, r, 0, dmax)
}

/// ω_r(u^(-i)(1+T) - 1).
pub fn twisted_omega(ctx: &PrimeCtx, r: u32, i: i64, dmax: usize) -> Result<TruncSeries<Padic>> {
    let q = ppow(ctx.p(), r) as usize;
    if q > dmax {
        return Err(Error::TruncationOverflow { degree: q, dmax });
    }
    let lead = ctx.u_pow(-i * q as i64);
    Ok(sparse_x_to_t(ctx, &[(0, -ctx.one()), (q, lead)], dmax))
}

/// Φ_n(T) = ω_n(T)/ω_{n-1}(T), n ≥ 1.
pub fn phi_n(ctx: &PrimeCtx, n: u32, dmax: usize) -> Result<TruncSeries<Padic>> {
    twisted_phi(ctx, n, 0, dmax)
}

/// Φ_n(u^(-i)(1+T) - 1) = Σ_{s<p} (u^(-i) X)^(s p^(n-1)).
pub fn twisted_phi(ctx: &PrimeCtx, n: u32, i: i64, dmax: usize) -> Result<TruncSeries<Padic>> {
    if n == 0 {
        return Err(Error::Validation("Φ_n needs n ≥ 1".into()));
    }
    let step = ppow(ctx.p(), n - 1) as usize;
    let deg = step * (ctx.p() as usize - 1);
    check_budget(deg)?;
    if deg > dmax {
        return Err(Error::TruncationOverflow { degree: deg, dmax });
    }
    let terms: Vec<(usize, Padic)> =
        (0..ctx.p() as usize).map(|s| (s * step, ctx.u_pow(-i * (s * step) as i64))).collect();
    Ok(sparse_x_to_t(ctx, &terms, dmax))
}

/// f(u^(-j)(1+T) - 1).
pub fn twist_sub<S: Scalar>(ctx: &PrimeCtx, f: &TruncSeries<S>, j: i64) -> Result<TruncSeries<S>> {
    if j == 0 {
        return Ok(f.clone());
    }
    let w = ctx.u_pow(-j);
    if f.is_exact() {
        let mut g = f.to_x_basis()?;
        let mut pw = ctx.one();
        for c in g.iter_mut() {
            *c = c.scale(&pw);
            pw = pw * w;
        }
        return Ok(TruncSeries::from_x_basis(f.proto(), &g, f.dmax()));
    }
    let proto = *f.proto();
    f.substitute_affine(&proto.embed(w - ctx.one()), &proto.embed(w))
}

/// Σ_t values[t] δ(t) (1+T)^(log_u t) over units t mod p^r, δ = ε^delta.
/// `values` is indexed by residues 0..p^r; entries at non-units are ignored.
pub fn group_ring_to_poly<S: Scalar>(
    table: &UnitTable,
    values: &[S],
    delta_power: u32,
    dmax: usize,
) -> Result<TruncSeries<S>> {
    let n = table.modulus() as usize;
    if values.len() != n {
        return Err(Error::Validation(format!("expected {n} values, got {}", values.len())));
    }
    let proto = values[0].zero_like();
    let q = n / table.p as usize;
    let mut g = vec![proto; q];
    for t in table.units() {
        let v = values[t as usize];
        if v.abs_prec() == i32::MAX && v.is_zero() {
            continue;
        }
        let l = table.log(t) as usize;
        g[l] = g[l] + v.scale(&table.teich_pow(t, delta_power));
    }
    Ok(TruncSeries::from_x_basis(&proto, &g, dmax.max(q.saturating_sub(1))))
}

/// Result of a CRT patch: the polynomial and the largest power of p in a
/// denominator of its coefficients (0 when integral).
#[derive(Clone, Debug)]
pub struct Patched<S: Scalar> {
    pub poly: TruncSeries<S>,
    pub denominator_exp: i64,
}

/// The unique Q of degree < h p^(r-1) with Q ≡ residues[j] modulo
/// ω_{r-1}(u^(-j)(1+T) - 1) for j < h.
///
/// In the X basis the moduli are X^q - c_j with c_j = u^(jq), so writing
/// Q = Σ_s X^s G_s(X^q) reduces the problem to interpolating each G_s at
/// the nodes c_j.
pub fn crt_patch<S: Scalar>(ctx: &PrimeCtx, residues: &[TruncSeries<S>], r: u32) -> Result<Patched<S>> {
    let h = residues.len();
    if h == 0 || r == 0 {
        return Err(Error::Validation("crt_patch needs h ≥ 1 and r ≥ 1".into()));
    }
    let p = ctx.p();
    let q = ppow(p, r - 1) as usize;
    check_budget(h * q)?;
    let proto = *residues[0].proto();
    let nodes: Vec<Padic> = (0..h).map(|j| ctx.u_pow((j * q) as i64)).collect();
    // folded[j][s]: residue j reduced mod X^q - c_j
    let mut folded: Vec<Vec<S>> = Vec::with_capacity(h);
    for (j, res) in residues.iter().enumerate() {
        let g = res.to_x_basis()?;
        let mut f = vec![proto; q];
        let mut cpow = ctx.one();
        for (blk, chunk) in g.chunks(q).enumerate() {
            if blk > 0 {
                cpow = cpow * nodes[j];
            }
            for (s, c) in chunk.iter().enumerate() {
                f[s] = f[s] + c.scale(&cpow);
            }
        }
        folded.push(f);
    }
    let mut gx = vec![proto; h * q];
    for s in 0..q {
        let vals: Vec<S> = folded.iter().map(|f| f[s]).collect();
        let coeffs = interpolate(&nodes, &vals)?;
        for (l, c) in coeffs.into_iter().enumerate() {
            gx[s + q * l] = c;
        }
    }
    let dmax = residues.iter().map(|r| r.dmax()).max().unwrap_or(0).max(h * q - 1);
    let poly = TruncSeries::from_x_basis(&proto, &gx, dmax);
    let denominator_exp = poly.min_valuation().floor().map_or(0, |v| (-v).max(0));
    Ok(Patched { poly, denominator_exp })
}

/// Newton interpolation: monomial coefficients of the polynomial of degree
/// < n through (nodes[i], vals[i]).
pub fn interpolate<S: Scalar>(nodes: &[Padic], vals: &[S]) -> Result<Vec<S>> {
    let n = nodes.len();
    let mut d = vals.to_vec();
    for lvl in 1..n {
        for i in (lvl..n).rev() {
            let gap = nodes[i] - nodes[i - lvl];
            d[i] = (d[i] - d[i - 1]).scale(&gap.inv()?);
        }
    }
    let mut poly = vec![d[n - 1]];
    for i in (0..n - 1).rev() {
        // poly <- poly * (Y - c_i) + d_i
        let mut next = vec![d[i].zero_like(); poly.len() + 1];
        for (e, c) in poly.iter().enumerate() {
            next[e + 1] = next[e + 1] + *c;
            next[e] = next[e] - c.scale(&nodes[i]);
        }
        next[0] = next[0] + d[i];
        poly = next;
    }
    Ok(poly)
}

fn strip<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    v
}

fn pmul<S: Scalar>(a: &[S], b: &[S], zero: &S) -> Vec<S> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![*zero; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + *x * *y;
        }
    }
    out
}

fn padd<S: Scalar>(a: &[S], b: &[S], zero: &S) -> Vec<S> {
    let n = a.len().max(b.len());
    (0..n).map(|i| *a.get(i).unwrap_or(zero) + *b.get(i).unwrap_or(zero)).collect()
}

fn psub<S: Scalar>(a: &[S], b: &[S], zero: &S) -> Vec<S> {
    let n = a.len().max(b.len());
    (0..n).map(|i| *a.get(i).unwrap_or(zero) - *b.get(i).unwrap_or(zero)).collect()
}

fn pdivrem<S: Scalar>(a: &[S], b: &[S], zero: &S) -> Result<(Vec<S>, Vec<S>)> {
    let b = strip(b.to_vec());
    let d = b.len().checked_sub(1).ok_or(Error::DivisionByZero)?;
    let li = b[d].inv()?;
    let mut r = a.to_vec();
    let mut q = vec![*zero; r.len().saturating_sub(d)];
    for i in (d..r.len()).rev() {
        let f = r[i] * li;
        q[i - d] = f;
        for k in 0..=d {
            r[i - d + k] = r[i - d + k] - f * b[k];
        }
    }
    r.truncate(d);
    Ok((q, strip(r)))
}

/// s with s·a ≡ 1 mod m, by the extended Euclidean algorithm.
fn inverse_mod<S: Scalar>(a: &[S], m: &[S], zero: &S, rel: u32) -> Result<Vec<S>> {
    let one = zero.one_like(rel);
    let (mut r0, mut r1) = (strip(m.to_vec()), strip(pdivrem(a, m, zero)?.1));
    let (mut s0, mut s1) = (Vec::<S>::new(), vec![one]);
    while r1.len() > 1 {
        let (q, r2) = pdivrem(&r0, &r1, zero)?;
        let s2 = psub(&s0, &pmul(&q, &s1, zero), zero);
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    if r1.is_empty() {
        return Err(Error::ModuliNotCoprime);
    }
    let g = r1[0].inv()?;
    Ok(s1.into_iter().map(|c| c * g).collect())
}

/// CRT for arbitrary pairwise coprime moduli over the fraction field,
/// by the extended Euclidean algorithm.
pub fn crt_general<S: Scalar>(residues: &[TruncSeries<S>], moduli: &[TruncSeries<S>]) -> Result<TruncSeries<S>> {
    if residues.len() != moduli.len() || residues.is_empty() {
        return Err(Error::Validation("need one modulus per residue".into()));
    }
    let zero = *residues[0].proto();
    let rel = residues.iter().map(|r| r.precision()).filter(|&a| a < i32::MAX).min().unwrap_or(20).max(1) as u32;
    let ms: Vec<Vec<S>> = moduli.iter().map(|m| strip(m.coeffs().to_vec())).collect();
    let mut big = vec![zero.one_like(rel)];
    for m in &ms {
        big = pmul(&big, m, &zero);
    }
    let mut acc: Vec<S> = Vec::new();
    for (j, res) in residues.iter().enumerate() {
        if !res.is_exact() {
            return Err(Error::InsufficientTruncation);
        }
        let mut others = vec![zero.one_like(rel)];
        for (i, m) in ms.iter().enumerate() {
            if i != j {
                others = pmul(&others, m, &zero);
            }
        }
        let inv = inverse_mod(&others, &ms[j], &zero, rel)?;
        let e = pmul(&others, &inv, &zero);
        let term = pmul(res.coeffs(), &e, &zero);
        acc = padd(&acc, &term, &zero);
    }
    let (_, r) = pdivrem(&acc, &big, &zero)?;
    let dmax = residues.iter().map(|r| r.dmax()).max().unwrap_or(0);
    Ok(TruncSeries::poly(&zero, r, dmax))
}

/// ∏_{i<h} ω_{r-1}(u^(-i)(1+T) - 1), the patching modulus at level r.
pub fn patch_modulus(ctx: &PrimeCtx, r: u32, h: usize, dmax: usize) -> Result<TruncSeries<Padic>> {
    let q = ppow(ctx.p(), r - 1) as usize;
    check_budget(h * q)?;
    let mut acc = TruncSeries::constant(ctx.one(), dmax.max(h * q));
    for i in 0..h {
        acc = acc.mul(&twisted_omega(ctx, r - 1, i as i64, dmax.max(h * q))?);
    }
    Ok(acc)
}

/// ∏_{i=0}^{k} Φ_m(u^(-i)(1+T) - 1).
pub fn phi_product(ctx: &PrimeCtx, m: u32, k: u32, dmax: usize) -> Result<TruncSeries<Padic>> {
    let deg = (k as usize + 1) * (ctx.p() as usize - 1) * ppow(ctx.p(), m - 1) as usize;
    check_budget(deg)?;
    let big = dmax.max(deg);
    let mut acc = TruncSeries::constant(ctx.one(), big);
    for i in 0..=k {
        acc = acc.mul(&twisted_phi(ctx, m, i as i64, big)?);
    }
    Ok(acc.with_dmax(dmax))
}

/// ∏_{i=0}^{k} ∏_{m=1}^{levels} Φ_m(u^(-i)(1+T) - 1)/p, truncated at dmax.
pub fn log_product(ctx: &PrimeCtx, k: u32, levels: u32, dmax: usize) -> Result<TruncSeries<Padic>> {
    let full = (k as usize + 1) * (ppow(ctx.p(), levels) as usize - 1);
    check_budget(levels as usize * ppow(ctx.p(), levels) as usize)?;
    let pinv = ctx.p_power(-1);
    let mut acc = TruncSeries::constant(ctx.one(), dmax);
    for m in 1..=levels {
        for i in 0..=k {
            let deg = (ctx.p() as usize - 1) * ppow(ctx.p(), m - 1) as usize;
            let f = twisted_phi(ctx, m, i as i64, deg.max(dmax))?.scale(&pinv);
            acc = acc.mul(&f.with_dmax(dmax));
        }
    }
    debug_assert!(acc.is_exact() == (full <= dmax));
    Ok(acc)
}

/// Lowest valuation among coefficients, as a convenience for reports.
pub fn min_coeff_valuation<S: Scalar>(f: &TruncSeries<S>) -> Valuation {
    f.min_valuation()
}
