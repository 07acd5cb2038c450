//! Δ-indexed distributions on Z_p^×, growth diagnostics, and the Amice
//! transform of finite Dirac combs.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cyclo::{eval_series_at, CycloElt, DirichletChar};
use crate::error::{Error, Result};
use crate::iwasawa::UnitTable;
use crate::padic::modint::{self, ppow};
use crate::padic::{max_digits, Padic, PrimeCtx, Scalar, Valuation};
use crate::series::{SeriesWire, TruncSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Patched,
    Oracle,
    Decomposed,
    Synthesized,
    Input,
}

/// One series per power of the Teichmüller character, δ = ε^i for
/// i = 0..p-2.
#[derive(Clone, Debug)]
pub struct Distribution<S: Scalar> {
    pub p: u32,
    pub components: Vec<TruncSeries<S>>,
    pub growth_w: f64,
    pub provenance: Provenance,
}

impl<S: Scalar> Distribution<S> {
    pub fn new(p: u32, components: Vec<TruncSeries<S>>, growth_w: f64, provenance: Provenance) -> Result<Self> {
        if components.len() != p as usize - 1 {
            return Err(Error::Validation(format!(
                "expected {} components, got {}",
                p - 1,
                components.len()
            )));
        }
        Ok(Distribution { p, components, growth_w, provenance })
    }

    pub fn component(&self, delta: u32) -> &TruncSeries<S> {
        &self.components[(delta % (self.p - 1)) as usize]
    }

    pub fn admissibility(&self, w: f64) -> AdmissibilityReport {
        let per_component: Vec<GrowthReport> =
            self.components.iter().map(|c| admissibility_report(c, w)).collect();
        let h_inf = per_component.iter().filter_map(|r| r.h_inf).fold(None, |acc: Option<f64>, h| {
            Some(acc.map_or(h, |a| a.min(h)))
        });
        let violated = per_component.iter().any(|r| r.violated);
        AdmissibilityReport { w, h_inf, violated, per_component }
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.p == other.p && self.components.iter().zip(&other.components).all(|(a, b)| a.approx_eq(b))
    }
}

/// Growth diagnostics for one series against a target exponent w.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub w: f64,
    /// inf over n ≥ 1 of v(c_n) + w log_p n, over coefficients known to be
    /// nonzero.
    pub h_inf: Option<f64>,
    pub violated: bool,
    /// Fitted exponent: minus the slope of block minima of v(c_n) over
    /// [p^s, p^(s+1)) against s.
    pub estimated_w: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub w: f64,
    pub h_inf: Option<f64>,
    pub violated: bool,
    pub per_component: Vec<GrowthReport>,
}

pub fn admissibility_report<S: Scalar>(f: &TruncSeries<S>, w: f64) -> GrowthReport {
    let p = f.proto().p() as f64;
    let lp = p.ln();
    let h: Vec<Option<f64>> = (1..f.len())
        .map(|n| {
            let v = f.coeff(n).valuation();
            (!v.is_infinite()).then(|| v.as_f64() + w * (n as f64).ln() / lp)
        })
        .collect();
    let h_inf = h.iter().flatten().fold(None, |acc: Option<f64>, &x| Some(acc.map_or(x, |a| a.min(x))));
    // last half in four blocks: strictly falling block minima with a total
    // drop of more than one digit
    let n = h.len();
    let mut violated = false;
    if n >= 8 {
        let half = &h[n / 2..];
        let bs = half.len().div_ceil(4);
        let mins: Vec<f64> = half
            .chunks(bs)
            .filter_map(|c| c.iter().flatten().fold(None, |a: Option<f64>, &x| Some(a.map_or(x, |y| y.min(x)))))
            .collect();
        if mins.len() >= 3 {
            let falling = mins.windows(2).all(|w| w[1] < w[0]);
            violated = falling && mins[0] - mins[mins.len() - 1] > 1.0;
        }
    }
    GrowthReport { w, h_inf, violated, estimated_w: growth_estimate(f) }
}

/// Least-squares slope of block minima of v(c_n), n in [p^s, p^(s+1)),
/// against s; returns minus the slope (an estimate of the log-growth
/// exponent). Needs at least two blocks with data.
pub fn growth_estimate<S: Scalar>(f: &TruncSeries<S>) -> Option<f64> {
    let p = f.proto().p() as usize;
    let mut pts = Vec::new();
    let mut lo = 1usize;
    let mut s = 0;
    while lo < f.len() {
        let hi = (lo * p).min(f.len());
        let m = (lo..hi).map(|n| f.coeff(n).valuation()).filter(|v| !v.is_infinite()).min();
        if let Some(m) = m {
            pts.push((s as f64, m.as_f64()));
        }
        lo *= p;
        s += 1;
    }
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|x| x.0).sum::<f64>() / k;
    let my = pts.iter().map(|x| x.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|x| (x.0 - mx) * (x.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|x| (x.0 - mx) * (x.0 - mx)).sum();
    Some(-sxy / sxx)
}

/// A finite combination of Dirac masses at p-adic units (given by integer
/// representatives).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteMeasure {
    pub masses: Vec<(i64, Padic)>,
}

impl FiniteMeasure {
    pub fn new(ctx: &PrimeCtx, masses: Vec<(i64, Padic)>) -> Result<Self> {
        for (z, w) in &masses {
            if z.rem_euclid(ctx.p() as i64) == 0 {
                return Err(Error::NonUnit(format!("support point {z}")));
            }
            if w.p() != ctx.p() {
                return Err(Error::ContextMismatch { left: ctx.p(), right: w.p() });
            }
        }
        Ok(FiniteMeasure { masses })
    }

    pub fn dirac(ctx: &PrimeCtx, z: i64) -> Result<Self> {
        Self::new(ctx, vec![(z, ctx.one())])
    }

    /// Random comb: support points are units below p^(level+2), weights are
    /// random integers mod p^prec (possibly with positive valuation).
    pub fn random<R: Rng>(ctx: &PrimeCtx, rng: &mut R, n_masses: usize, level: u32) -> Self {
        let p = ctx.p() as i64;
        let bound = ppow(ctx.p(), (level + 2).min(max_digits(ctx.p()) - 1)) as i64;
        let wmod = ppow(ctx.p(), ctx.prec()) as i64;
        let masses = (0..n_masses)
            .map(|_| {
                let z = loop {
                    let z = rng.gen_range(1..bound);
                    if z % p != 0 {
                        break z;
                    }
                };
                let w = rng.gen_range(1..wmod);
                (z, ctx.int(w))
            })
            .collect();
        FiniteMeasure { masses }
    }

    pub fn add(&self, other: &Self) -> Self {
        FiniteMeasure { masses: self.masses.iter().chain(&other.masses).cloned().collect() }
    }

    /// ∫ z^j θ(z) dμ in the ring of θ.
    pub fn integrate(&self, ctx: &PrimeCtx, j: u32, theta: &DirichletChar) -> Result<CycloElt<Padic>> {
        let th = theta.normalized(ctx.p());
        let table = UnitTable::new(ctx, th.r)?;
        let ring = th.ring(ctx.p());
        let mut acc = ring.zero(&ctx.zero());
        for (z, w) in &self.masses {
            let t = modint::reduce_i64(*z, table.modulus());
            let zj = ctx.int(*z).pow(j as u64);
            acc = acc.add(&th.value(&table, t).scale(&(*w * zj)));
        }
        Ok(acc)
    }
}

/// λ = log_u(z/ε(z)) ∈ Z_p as an integer representative, with the number of
/// correct digits.
pub fn unit_log(ctx: &PrimeCtx, z: i64) -> (u64, u32) {
    let p = ctx.p();
    let e = max_digits(p);
    let m = ppow(p, e);
    let zr = modint::reduce_i64(z, m);
    let t = modint::teich_mod(p, zr % p as u64, e);
    let y = modint::mulmod(zr, modint::invmod(t, m).expect("unit"), m);
    (modint::log1_mod(p, ctx.u(), y, e), e - 1)
}

/// C(λ, n) for n = 0..=dmax with honest precision: λ is known to `digits`
/// digits and C(·, n) is constant on cosets of p^(digits) up to
/// p^(digits - ⌊log_p n⌋).
pub fn binomial_series(ctx: &PrimeCtx, lambda: u64, digits: u32, dmax: usize) -> Vec<Padic> {
    let p = ctx.p();
    let rel = max_digits(p);
    let mut out = Vec::with_capacity(dmax + 1);
    let mut c = Padic::from_i64(p, 1, rel);
    out.push(ctx.one());
    let mut logn = 0i32;
    let mut next_pow = p as usize;
    for n in 1..=dmax {
        if n == next_pow {
            logn += 1;
            next_pow = next_pow.saturating_mul(p as usize);
        }
        let num = Padic::from_i64(p, lambda as i64 - (n as i64 - 1), rel);
        let den = Padic::from_i64(p, n as i64, rel);
        c = c * num / den;
        let cap = digits as i32 - logn;
        let v = if c.is_exact_zero() { Padic::zero_to(p, cap) } else { c.cap_abs(cap) };
        out.push(v.cap_rel(ctx.prec()));
    }
    out
}

/// Amice transform of z^j dμ: the component at ε^a is
/// Σ_i w_i z_i^j ε(z_i)^a (1+T)^(λ_i), truncated at dmax.
pub fn amice_transform(ctx: &PrimeCtx, mu: &FiniteMeasure, j: u32, dmax: usize) -> Result<Distribution<Padic>> {
    let p = ctx.p();
    let n_comp = p as usize - 1;
    let mut comps = vec![vec![ctx.zero(); dmax + 1]; n_comp];
    let mut tail = Valuation::INFINITY;
    for (z, w) in &mu.masses {
        let (lambda, digits) = unit_log(ctx, *z);
        let bin = binomial_series(ctx, lambda, digits, dmax);
        let zr = modint::reduce_i64(*z, p as u64);
        let base = *w * ctx.int(*z).pow(j as u64);
        tail = tail.min(Scalar::val_floor(&base));
        let eps = crate::padic::teichmuller(ctx, zr as i64, ctx.prec())?;
        let mut coef = base;
        for comp in comps.iter_mut() {
            for (slot, b) in comp.iter_mut().zip(&bin) {
                *slot = *slot + coef * *b;
            }
            coef = coef * eps;
        }
    }
    let components = comps
        .into_iter()
        .map(|c| TruncSeries::truncated(&ctx.zero(), c, dmax, Some(tail)))
        .collect();
    Distribution::new(p, components, 0.0, Provenance::Oracle)
}

/// The oracle's residue modulo ∏_{i<h} ω_{R-1}(u^(-i)(1+T) - 1), one series
/// per component, computed independently of any truncation: with q =
/// p^(R-1) and λ = s + qμ, (1+T)^λ = X^s Y^μ for Y = X^q, and Y^μ is expanded
/// binomially in (Y - 1), which is topologically nilpotent modulo
/// H(Y) = ∏(Y - u^(iq)) because (Y - 1)^h ∈ p^R.
pub fn amice_residue(
    ctx: &PrimeCtx,
    mu: &FiniteMeasure,
    j: u32,
    level: u32,
    h: usize,
) -> Result<Vec<TruncSeries<Padic>>> {
    if level == 0 || h == 0 {
        return Err(Error::Validation("level and height must be positive".into()));
    }
    let p = ctx.p();
    let q = ppow(p, level - 1);
    let target = ctx.prec() as usize + 2;
    let blocks = target.div_ceil(level as usize) + 1;
    let nmax = h * blocks;
    let trunc_gain = (level as usize * ((nmax + 1) / h)) as i32;
    // H(Y) = ∏ (Y - c_i), monic of degree h
    let mut hpoly = vec![ctx.one()];
    for i in 0..h {
        let c = ctx.u_pow(i as i64 * q as i64);
        let mut next = vec![ctx.zero(); hpoly.len() + 1];
        for (e, a) in hpoly.iter().enumerate() {
            next[e + 1] = next[e + 1] + *a;
            next[e] = next[e] - *a * c;
        }
        hpoly = next;
    }
    let reduce = |v: &mut Vec<Padic>| {
        while v.len() > h {
            let top = v.pop().unwrap();
            let d = v.len() - h;
            for (e, a) in hpoly.iter().take(h).enumerate() {
                v[d + e] = v[d + e] - top * *a;
            }
        }
    };
    let n_comp = p as usize - 1;
    let mut acc = vec![vec![ctx.zero(); h * q as usize]; n_comp];
    for (z, w) in &mu.masses {
        let (lambda, digits) = unit_log(ctx, *z);
        let s = lambda % q;
        let mu_int = (lambda - s) / q;
        let mu_digits = digits - (level - 1);
        let bin = binomial_series(ctx, mu_int, mu_digits, nmax);
        // Y^μ mod H = Σ C(μ, n) (Y - 1)^n
        let mut power = vec![ctx.one()];
        let mut ymu = vec![ctx.zero(); h];
        for b in bin.iter() {
            for (e, c) in power.iter().enumerate() {
                ymu[e] = ymu[e] + *b * *c;
            }
            let mut next = vec![ctx.zero(); power.len() + 1];
            for (e, c) in power.iter().enumerate() {
                next[e + 1] = next[e + 1] + *c;
                next[e] = next[e] - *c;
            }
            reduce(&mut next);
            power = next;
        }
        let zr = modint::reduce_i64(*z, p as u64);
        let eps = crate::padic::teichmuller(ctx, zr as i64, ctx.prec())?;
        let mut coef = *w * ctx.int(*z).pow(j as u64);
        for comp in acc.iter_mut() {
            for (l, y) in ymu.iter().enumerate() {
                let idx = s as usize + q as usize * l;
                comp[idx] = comp[idx] + coef * *y;
            }
            coef = coef * eps;
        }
    }
    Ok(acc
        .into_iter()
        .map(|g| {
            let g: Vec<Padic> = g.into_iter().map(|c| c.cap_abs(trunc_gain)).collect();
            TruncSeries::from_x_basis(&ctx.zero(), &g, h * q as usize)
        })
        .collect())
}

/// Evaluate d at u^j θ: the component ε^(δ+j) at T = u^j ζ - 1, where
/// δ is the tame part of θ (z ↦ z^j θ(z) has tame part ε^j δ).
pub fn eval_at<S: Scalar>(ctx: &PrimeCtx, d: &Distribution<S>, j: u32, theta: &DirichletChar) -> Result<CycloElt<S>> {
    theta.validate(ctx.p())?;
    let th = theta.normalized(ctx.p());
    let comp = d.component(th.delta_power + j);
    eval_series_at(ctx, comp, j as i64, &th)
}

#[derive(Serialize, Deserialize)]
struct DistributionWire {
    p: u32,
    w: f64,
    #[serde(default = "default_prov")]
    provenance: Provenance,
    components: BTreeMap<String, SeriesWire>,
}

fn default_prov() -> Provenance {
    Provenance::Input
}

impl Distribution<Padic> {
    pub fn to_json(&self) -> serde_json::Value {
        let components =
            self.components.iter().enumerate().map(|(i, c)| (i.to_string(), c.to_wire())).collect();
        serde_json::to_value(DistributionWire { p: self.p, w: self.growth_w, provenance: self.provenance, components })
            .expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let w: DistributionWire = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut comps = Vec::new();
        for i in 0..w.p.saturating_sub(1) {
            let s = w
                .components
                .get(&i.to_string())
                .ok_or_else(|| Error::Parse(format!("missing component {i}")))?;
            comps.push(TruncSeries::from_wire(w.p, s)?);
        }
        Distribution::new(w.p, comps, w.w, w.provenance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility_examples() {
        let c = PrimeCtx::new(3, 10).unwrap();
        let bounded = TruncSeries::poly(&c.zero(), (0..60).map(|n| c.int(n + 1)).collect(), 60);
        let r = admissibility_report(&bounded, 0.0);
        assert!(r.h_inf.unwrap() >= 0.0 && !r.violated);
        let logish: Vec<Padic> = (0..200)
            .map(|n: u32| if n == 0 { c.one() } else { c.p_power(-(n.ilog(3) as i32)) })
            .collect();
        let r = admissibility_report(&TruncSeries::poly(&c.zero(), logish.clone(), 200), 1.0);
        assert!(r.h_inf.unwrap() >= -1.0 && !r.violated);
        assert!((r.estimated_w.unwrap() - 1.0).abs() < 1e-9);
        let wild: Vec<Padic> = (0..60).map(|n| c.p_power(-n)).collect();
        assert!(admissibility_report(&TruncSeries::poly(&c.zero(), wild, 60), 1.0).violated);
    }

    #[test]
    fn dirac_at_one_is_constant() {
        let c = PrimeCtx::new(5, 10).unwrap();
        let z = 1 + 5i64.pow(9);
        let mu = FiniteMeasure::dirac(&c, z).unwrap();
        let d = amice_transform(&c, &mu, 0, 30).unwrap();
        let f = d.component(0);
        assert!(f.coeff(0).approx_eq(&c.one()));
        for n in 1..8 {
            assert!(f.coeff(n).val_floor() >= 7, "n={n}");
        }
    }

    #[test]
    fn dirac_eleven() {
        let c = PrimeCtx::new(5, 10).unwrap();
        let mu = FiniteMeasure::dirac(&c, 11).unwrap();
        let d = amice_transform(&c, &mu, 0, 12).unwrap();
        let f = d.component(0);
        let want = [1i64, 2, 1, 0, 0];
        for (n, w) in want.iter().enumerate() {
            assert!((f.coeff(n) - c.int(*w)).val_floor() >= 1, "n={n}");
        }
    }

    #[test]
    fn binomials_match_integers() {
        let c = PrimeCtx::new(7, 12).unwrap();
        let b = binomial_series(&c, 10, 20, 12);
        let want = [1i64, 10, 45, 120, 210, 252, 210, 120, 45, 10, 1, 0, 0];
        for (x, w) in b.iter().zip(want) {
            assert!(x.approx_eq(&c.int(w)));
        }
    }
}
