//! Patching a tower into a Δ-indexed distribution: the level polynomials
//! P^δ_{r,j}, their CRT patch across twists, interpolation checks and the
//! removal of the auxiliary c.

use rayon::prelude::*;
use serde::Serialize;

use crate::cyclo::{char_sum, CycloElt, DirichletChar};
use crate::distribution::{
    admissibility_report, amice_residue, binomial_series, eval_at, unit_log, AdmissibilityReport, Distribution,
    FiniteMeasure, Provenance,
};
use crate::error::{Error, Result};
use crate::iwasawa::{crt_patch, group_ring_to_poly, omega, patch_modulus, twist_sub, Patched, UnitTable};
use crate::padic::modint::ppow;
use crate::padic::{Padic, PrimeCtx, Scalar, Valuation};
use crate::series::TruncSeries;
use crate::tower::{binom, EigenData, Tower};

/// Smallest coefficient valuation, counting zeros at their known precision.
pub fn floor_valuation<S: Scalar>(f: &TruncSeries<S>) -> Valuation {
    f.coeffs().iter().map(|c| c.val_floor()).min().unwrap_or(Valuation::INFINITY)
}

/// Digits consumed by the Newton interpolation at level R with k + 1
/// nodes: the node gaps u^(iq) - u^(jq) have valuation R + v(i - j).
pub fn required_digits(p: u32, k: u32, levels: u32) -> u32 {
    let mut vfact = 0;
    for i in 1..=k {
        let mut x = i;
        while x % p == 0 {
            x /= p;
            vfact += 1;
        }
    }
    k * levels + vfact + 1
}

/// All level polynomials of a tower.
#[derive(Clone, Debug)]
pub struct PatchRun {
    pub tower: Tower,
    dmax: usize,
    /// [δ][r - 1][j]
    polys: Vec<Vec<Vec<TruncSeries<Padic>>>>,
}

/// a_p^(-r) m_j^(-1) Σ_t x[j][r][t] δ(t) (1+T)^(log_u t).
pub fn build_p(tower: &Tower, table: &UnitTable, delta: u32, j: u32, dmax: usize) -> Result<TruncSeries<Padic>> {
    let r = table.level();
    let s = tower.eigen.normalizer(j, r)?;
    let vals: Vec<Padic> = tower.row(j, r).iter().map(|x| if x.is_exact_zero() { *x } else { *x * s }).collect();
    group_ring_to_poly(table, &vals, delta, dmax)
}

impl PatchRun {
    pub fn new(tower: &Tower) -> Result<Self> {
        let ctx = tower.eigen.ctx;
        let (p, k, levels) = (tower.p(), tower.k(), tower.levels());
        let need = required_digits(p, k, levels);
        if ctx.prec() < need {
            return Err(Error::PrecisionExhausted(format!(
                "patching at level {levels} with k = {k} needs {need} digits, have {}",
                ctx.prec()
            )));
        }
        let dmax = (k as usize + 1) * ppow(p, levels - 1) as usize - 1;
        let tables: Vec<UnitTable> = (1..=levels).map(|r| UnitTable::new(&ctx, r)).collect::<Result<_>>()?;
        let polys = (0..p - 1)
            .into_par_iter()
            .map(|delta| {
                tables
                    .iter()
                    .map(|tab| (0..=k).map(|j| build_p(tower, tab, delta, j, dmax)).collect::<Result<Vec<_>>>())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PatchRun { tower: tower.clone(), dmax, polys })
    }

    pub fn ctx(&self) -> PrimeCtx {
        self.tower.eigen.ctx
    }

    pub fn dmax(&self) -> usize {
        self.dmax
    }

    fn n_delta(&self) -> u32 {
        self.tower.p() - 1
    }

    pub fn p_poly(&self, delta: u32, r: u32, j: u32) -> &TruncSeries<Padic> {
        &self.polys[(delta % self.n_delta()) as usize][r as usize - 1][j as usize]
    }

    /// The residue fed to the patch of component δ at twist j:
    /// P^(δε^(-j))_{r,j}(u^(-j)(1+T) - 1).
    pub fn residue(&self, delta: u32, r: u32, j: u32) -> Result<TruncSeries<Padic>> {
        let nd = self.n_delta();
        let src = (delta + nd - j % nd) % nd;
        twist_sub(&self.ctx(), self.p_poly(src, r, j), j as i64)
    }

    /// P^δ_r: the CRT patch of the residues over j = 0..=k.
    pub fn patch_level(&self, delta: u32, r: u32) -> Result<Patched<Padic>> {
        let residues: Vec<TruncSeries<Padic>> =
            (0..=self.tower.k()).map(|j| self.residue(delta, r, j)).collect::<Result<_>>()?;
        let out = crt_patch(&self.ctx(), &residues, r)?;
        let bound = (self.tower.k() as usize + 1) * ppow(self.tower.p(), r - 1) as usize;
        if out.poly.degree().is_some_and(|d| d >= bound) {
            return Err(Error::TruncationOverflow { degree: out.poly.degree().unwrap(), dmax: bound - 1 });
        }
        Ok(out)
    }

    /// Run every level for the given components (others stay zero).
    pub fn run_components(&self, deltas: &[u32]) -> Result<PatchOutcome> {
        let ctx = self.ctx();
        let (k, levels) = (self.tower.k(), self.tower.levels());
        let per_delta: Vec<(Vec<Patched<Padic>>, Vec<CoherenceEntry>)> = deltas
            .par_iter()
            .map(|&delta| {
                let lv: Vec<Patched<Padic>> =
                    (1..=levels).map(|r| self.patch_level(delta, r)).collect::<Result<_>>()?;
                let mut coh = Vec::new();
                for r in 1..levels {
                    let m = patch_modulus(&ctx, r, k as usize + 1, self.dmax)?;
                    let upper = lv[r as usize].poly.rem(&m)?;
                    let dev = upper.sub(&lv[r as usize - 1].poly);
                    let deviation = if dev.coeffs().iter().all(|c| c.is_zero()) {
                        Valuation::INFINITY
                    } else {
                        dev.min_valuation()
                    };
                    coh.push(CoherenceEntry { delta, r, deviation });
                }
                Ok((lv, coh))
            })
            .collect::<Result<_>>()?;
        let mut components = vec![TruncSeries::zero(&ctx.zero(), self.dmax); self.n_delta() as usize];
        let mut levels_out = Vec::new();
        let mut coherence = Vec::new();
        let mut den = 0;
        for (&delta, (lv, coh)) in deltas.iter().zip(per_delta) {
            components[delta as usize] = lv.last().expect("R ≥ 1").poly.clone();
            den = lv.iter().map(|x| x.denominator_exp).fold(den, i64::max);
            levels_out.push((delta, lv));
            coherence.extend(coh);
        }
        let n = self.tower.eigen.slope() as f64;
        let distribution = Distribution::new(ctx.p(), components, n, Provenance::Patched)?;
        let admissibility = distribution.admissibility(n);
        Ok(PatchOutcome {
            coherent: coherence.iter().all(|c| c.deviation.is_infinite()),
            distribution,
            levels: levels_out,
            coherence,
            max_denominator_exp: den,
            admissibility,
        })
    }

    pub fn run(&self) -> Result<PatchOutcome> {
        self.run_components(&(0..self.n_delta()).collect::<Vec<_>>())
    }

    /// The three conditions on the level polynomials: (1) bounded
    /// p^(nr) P, (2) P_{r+1,j} ≡ P_{r,j} mod ω_{r-1}, (3) bounded
    /// p^((n-j)r) Σ_i (-1)^i C(j,i) P^(δε^(-i))_{r,i}(u^(-i)(1+T) - 1).
    pub fn check_polylem(&self, floor: i64) -> Result<PolylemReport> {
        let ctx = self.ctx();
        let n = self.tower.eigen.slope() as i64;
        let (k, levels) = (self.tower.k(), self.tower.levels());
        let mut cond1 = Valuation::INFINITY;
        let mut cond3 = Valuation::INFINITY;
        let mut cond2_fail = Vec::new();
        for delta in 0..self.n_delta() {
            for r in 1..=levels {
                for j in 0..=k {
                    let shift = Valuation::int(n * r as i64);
                    cond1 = cond1.min(self.p_poly(delta, r, j).min_valuation() + shift);
                    let mut s = TruncSeries::zero(&ctx.zero(), self.dmax);
                    for i in 0..=j {
                        let term = self.residue(delta, r, i)?.scale(&ctx.int(binom(j as u64, i as u64)));
                        s = if i % 2 == 0 { s.add(&term) } else { s.sub(&term) };
                    }
                    cond3 = cond3.min(floor_valuation(&s) + Valuation::int((n - j as i64) * r as i64));
                    if r < levels {
                        let w = omega(&ctx, r - 1, self.dmax)?;
                        let d = self.p_poly(delta, r + 1, j).sub(self.p_poly(delta, r, j)).rem(&w)?;
                        if !d.coeffs().iter().all(|c| c.is_zero()) {
                            cond2_fail.push((delta, r, j, d.min_valuation()));
                        }
                    }
                }
            }
        }
        let fl = Valuation::int(floor);
        Ok(PolylemReport {
            pass: cond1 >= fl && cond3 >= fl && cond2_fail.is_empty(),
            cond1,
            cond2_failures: cond2_fail,
            cond3,
            floor,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoherenceEntry {
    pub delta: u32,
    pub r: u32,
    /// Valuation of P_{r+1} - P_r modulo the level-r modulus.
    pub deviation: Valuation,
}

#[derive(Clone, Debug)]
pub struct PatchOutcome {
    pub distribution: Distribution<Padic>,
    /// (δ, [P^δ_r for r = 1..=R])
    pub levels: Vec<(u32, Vec<Patched<Padic>>)>,
    pub coherence: Vec<CoherenceEntry>,
    pub coherent: bool,
    pub max_denominator_exp: i64,
    pub admissibility: AdmissibilityReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolylemReport {
    pub pass: bool,
    pub cond1: Valuation,
    /// (δ, r, j, valuation of the failing remainder)
    pub cond2_failures: Vec<(u32, u32, u32, Valuation)>,
    pub cond3: Valuation,
    pub floor: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub equal: bool,
    /// Valuation of the worst coefficient mismatch (∞ when equal).
    pub worst: Valuation,
    /// Fewest digits compared on any coefficient.
    pub compared_digits: i32,
}

/// Compare a patched distribution with the measure's transform modulo
/// ∏_{i≤k} ω_{R-1}(u^(-i)(1+T) - 1).
pub fn compare_with_oracle(
    ctx: &PrimeCtx,
    d: &Distribution<Padic>,
    mu: &FiniteMeasure,
    k: u32,
    levels: u32,
) -> Result<OracleReport> {
    let oracle = amice_residue(ctx, mu, 0, levels, k as usize + 1)?;
    let mut worst = Valuation::INFINITY;
    let mut digits = i32::MAX;
    for (a, b) in d.components.iter().zip(&oracle) {
        for i in 0..a.len().max(b.len()) {
            let diff = a.coeff(i) - b.coeff(i);
            digits = digits.min(diff.abs_prec());
            if !diff.is_zero() {
                worst = worst.min(diff.valuation());
            }
        }
    }
    Ok(OracleReport { equal: worst.is_infinite() && digits > 0, worst, compared_digits: digits })
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpReport {
    pub pass: bool,
    pub lhs: CycloElt<Padic>,
    pub rhs: CycloElt<Padic>,
    /// Level-0 branch against x0, for the trivial character.
    pub level0: Option<bool>,
}

/// eval(d, u^j θ) against a_p^(-r) m_j^(-1) Σ_t x[j][r][t] θ(t); for the
/// trivial character with x0 present, also against
/// m_j^(-1) (1 - p^j/a_p) x0[j].
pub fn interpolation_check(d: &Distribution<Padic>, tower: &Tower, theta: &DirichletChar, j: u32) -> Result<InterpReport> {
    let ctx = tower.eigen.ctx;
    let th = theta.normalized(ctx.p());
    th.validate(ctx.p())?;
    if th.r > tower.levels() || j > tower.k() {
        return Err(Error::Validation(format!("θ level {} or twist {j} outside the tower", th.r)));
    }
    let lhs = eval_at(&ctx, d, j, &th)?;
    let table = UnitTable::new(&ctx, th.r)?;
    let rhs = char_sum(&table, tower.row(j, th.r), &th)?.scale(&tower.eigen.normalizer(j, th.r)?);
    let level0 = match (&tower.x0, th.r == 1 && th.delta_power == 0) {
        (Some(x0), true) => {
            let e = &tower.eigen;
            let f = ctx.one() - ctx.p_power(j as i32).checked_div(&e.a_p)?;
            let want = f * x0[j as usize] * e.m(j).inv()?;
            Some(lhs.approx_eq(&th.ring(ctx.p()).constant(want)))
        }
        _ => None,
    };
    Ok(InterpReport { pass: lhs.approx_eq(&rhs) && level0 != Some(false), lhs, rhs, level0 })
}

/// c^2 - c^(-2k) ε_Ψ(c^(-1)) δ(c)^2 (1+T)^(2λ_c) at component δ = ε^delta.
pub fn c_factor(eigen: &EigenData, delta: u32, dmax: usize) -> Result<TruncSeries<Padic>> {
    let ctx = eigen.ctx;
    let p = ctx.p();
    let c = eigen.c;
    let (lambda, digits) = unit_log(&ctx, c);
    let two_lambda = (2 * lambda as u128 % ppow(p, digits) as u128) as u64;
    let bin = binomial_series(&ctx, two_lambda, digits, dmax);
    let table = UnitTable::new(&ctx, 1)?;
    let eps = table.teich_pow(c.rem_euclid(p as i64) as u64, 2 * delta);
    let coef = ctx.int(c).pow_i64(-2 * eigen.k as i64)? * eigen.eps_c * eps;
    let mut coeffs: Vec<Padic> = bin.iter().map(|b| -(coef * *b)).collect();
    coeffs[0] = coeffs[0] + ctx.int(c * c);
    Ok(TruncSeries::truncated(&ctx.zero(), coeffs, dmax, Some(Valuation::ZERO)))
}

/// Divide one component by its c-factor.
pub fn remove_c_component(eigen: &EigenData, f: &TruncSeries<Padic>, delta: u32) -> Result<TruncSeries<Padic>> {
    let factor = c_factor(eigen, delta, f.dmax())?;
    if factor.coeff(0).valuation() != Valuation::ZERO {
        return Err(Error::MeromorphicComponent { delta });
    }
    f.div(&factor)
}

/// Per-component c-removal; components with a non-unit factor come back as
/// errors.
pub fn remove_c_partial(d: &Distribution<Padic>, eigen: &EigenData) -> Vec<Result<TruncSeries<Padic>>> {
    d.components.iter().enumerate().map(|(i, f)| remove_c_component(eigen, f, i as u32)).collect()
}

pub fn remove_c(d: &Distribution<Padic>, eigen: &EigenData) -> Result<Distribution<Padic>> {
    let comps = remove_c_partial(d, eigen).into_iter().collect::<Result<Vec<_>>>()?;
    Distribution::new(d.p, comps, d.growth_w, d.provenance)
}

/// Admissibility of one patched component.
pub fn component_report(d: &Distribution<Padic>, delta: u32) -> crate::distribution::GrowthReport {
    admissibility_report(d.component(delta), d.growth_w)
}
