//! Signed decomposition of a pair of stabilized distributions through
//! Q̃^(-1) M^(n), with the inverse synthesis used for round trips.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyclo::{CycloElt, DirichletChar};
use crate::distribution::{eval_at, growth_estimate, Distribution, Provenance};
use crate::error::{Error, Result};
use crate::logmatrix::{adjugate, check_slope, det, mat_truncate, LogMatrix, Mat2};
use crate::padic::{hensel_roots, Padic, PrimeCtx, Quad, QuadExt, Roots, Scalar, Valuation};
use crate::series::TruncSeries;

/// Eigenvalues at the ordinary prime p̄ and the non-ordinary prime p over
/// a split p; α_q β_q = ε_q p^(k+1). The roots at p either lie in Q_p or in
/// the quadratic ring they generate.
#[derive(Clone, Debug)]
pub struct SplitEigenData {
    pub ctx: PrimeCtx,
    pub k: u32,
    pub a_pbar: Padic,
    pub eps_pbar: Padic,
    pub alpha_pbar: Padic,
    pub beta_pbar: Padic,
    pub a_p: Padic,
    pub eps_p: Padic,
    pub roots_p: Roots,
}

impl SplitEigenData {
    pub fn new(ctx: PrimeCtx, k: u32, a_pbar: Padic, eps_pbar: Padic, a_p: Padic, eps_p: Padic) -> Result<Self> {
        for x in [&a_pbar, &eps_pbar, &a_p, &eps_p] {
            if x.p() != ctx.p() {
                return Err(Error::ContextMismatch { left: ctx.p(), right: x.p() });
            }
        }
        if !a_pbar.is_unit() {
            return Err(Error::Validation(format!("a at the ordinary prime must be a unit, got {a_pbar}")));
        }
        if !eps_pbar.is_unit() {
            return Err(Error::NonUnit(format!("ε at the ordinary prime: {eps_pbar}")));
        }
        check_slope(&ctx, &a_p, &eps_p, k)?;
        let pk = ctx.p_power(k as i32 + 1);
        let (alpha_pbar, beta_pbar) = match hensel_roots(&a_pbar, &(eps_pbar * pk))? {
            Roots::Split { alpha, beta } => (alpha, beta),
            Roots::Quadratic(_) => unreachable!("a unit trace always splits"),
        };
        let roots_p = hensel_roots(&a_p, &(eps_p * pk))?;
        Ok(SplitEigenData { ctx, k, a_pbar, eps_pbar, alpha_pbar, beta_pbar, a_p, eps_p, roots_p })
    }

    /// ε = 1 at both primes.
    pub fn from_ints(p: u32, prec: u32, k: u32, a_pbar: i64, a_p: i64) -> Result<Self> {
        let ctx = PrimeCtx::new(p, prec)?;
        Self::new(ctx, k, ctx.int(a_pbar), ctx.one(), ctx.int(a_p), ctx.one())
    }

    pub fn p(&self) -> u32 {
        self.ctx.p()
    }

    pub fn is_split(&self) -> bool {
        matches!(self.roots_p, Roots::Split { .. })
    }

    /// Trace of the product eigendata, α̃ + β̃ = α_p̄ a_p.
    pub fn a_tilde(&self) -> Padic {
        self.alpha_pbar * self.a_p
    }

    /// The unit ṽ with α̃ β̃ = ṽ p^(k+1).
    pub fn v_tilde(&self) -> Padic {
        self.alpha_pbar * self.alpha_pbar * self.eps_p
    }

    /// (v(α̃), v(β̃)).
    pub fn tilde_valuations(&self) -> [Valuation; 2] {
        match &self.roots_p {
            Roots::Split { alpha, beta } => [alpha.valuation(), beta.valuation()],
            Roots::Quadratic(ext) => [ext.alpha().valuation(), ext.beta().valuation()],
        }
    }

    pub fn log_matrix(&self, levels: u32) -> Result<LogMatrix> {
        LogMatrix::new(&self.ctx, &self.a_tilde(), &self.v_tilde(), self.k, levels)
    }

    pub fn to_wire(&self) -> SplitWire {
        SplitWire {
            p: self.p(),
            prec: Some(self.ctx.prec()),
            k: self.k,
            a_pbar: self.a_pbar.to_string(),
            eps_pbar: Some(self.eps_pbar.to_string()),
            a_p: self.a_p.to_string(),
            eps_p: Some(self.eps_p.to_string()),
        }
    }

    pub fn from_wire(w: &SplitWire, default_prec: u32) -> Result<Self> {
        let prec = w.prec.unwrap_or(default_prec.min(crate::padic::max_digits(w.p)));
        let ctx = PrimeCtx::new(w.p, prec)?;
        let unit = |s: &Option<String>| s.as_deref().map(|s| ctx.parse(s)).unwrap_or(Ok(ctx.one()));
        Self::new(ctx, w.k, ctx.parse(&w.a_pbar)?, unit(&w.eps_pbar)?, ctx.parse(&w.a_p)?, unit(&w.eps_p)?)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitWire {
    pub p: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prec: Option<u32>,
    pub k: u32,
    pub a_pbar: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_pbar: Option<String>,
    pub a_p: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_p: Option<String>,
}

/// Layout of Q̃. `Standard` has second row ṽ p^(k+1) (-1, 1); `Alternate` has
/// ṽ p^(k-1) (-1, -1).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QtildeVariant {
    #[default]
    Standard,
    Alternate,
}

pub type SMat<S> = [[S; 2]; 2];

fn smat_inv<S: Scalar>(m: &SMat<S>) -> Result<SMat<S>> {
    let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if d.is_zero() {
        return Err(Error::Singular("Q̃".into()));
    }
    let di = d.inv()?;
    Ok([[m[1][1] * di, -m[0][1] * di], [-m[1][0] * di, m[0][0] * di]])
}

/// Q̃ and its inverse from α̃, β̃ in the ring S.
pub fn build_qtilde<S: Scalar>(data: &SplitEigenData, alpha: S, beta: S, variant: QtildeVariant) -> Result<(SMat<S>, SMat<S>)> {
    if (alpha - beta).is_zero() {
        return Err(Error::Singular("α̃ = β̃".into()));
    }
    let e = data.k as i32 + if variant == QtildeVariant::Standard { 1 } else { -1 };
    let c = alpha.embed(data.v_tilde() * data.ctx.p_power(e));
    let q = match variant {
        QtildeVariant::Standard => [[alpha, -beta], [-c, c]],
        QtildeVariant::Alternate => [[alpha, -beta], [-c, -c]],
    };
    let qi = smat_inv(&q)?;
    Ok((q, qi))
}

fn lift<S: Scalar>(proto: &S, f: &TruncSeries<Padic>) -> TruncSeries<S> {
    let cs = f.coeffs().iter().map(|x| proto.embed(*x)).collect();
    if f.is_exact() {
        TruncSeries::poly(&proto.zero_like(), cs, f.dmax())
    } else {
        TruncSeries::truncated(&proto.zero_like(), cs, f.dmax(), f.tail())
    }
}

fn lift_mat<S: Scalar>(proto: &S, m: &Mat2<Padic>) -> Mat2<S> {
    [0, 1].map(|i| [0, 1].map(|j| lift(proto, &m[i][j])))
}

/// Embed a Q_p-valued distribution into the ring of `proto`.
pub fn lift_distribution<S: Scalar>(proto: &S, d: &Distribution<Padic>) -> Distribution<S> {
    Distribution {
        p: d.p,
        components: d.components.iter().map(|c| lift(proto, c)).collect(),
        growth_w: d.growth_w,
        provenance: d.provenance,
    }
}

fn apply<S: Scalar>(m: &Mat2<S>, x: &TruncSeries<S>, y: &TruncSeries<S>) -> [TruncSeries<S>; 2] {
    [0, 1].map(|i| m[i][0].mul(x).add(&m[i][1].mul(y)))
}

fn apply_const<S: Scalar>(c: &SMat<S>, x: &TruncSeries<S>, y: &TruncSeries<S>) -> [TruncSeries<S>; 2] {
    [0, 1].map(|i| x.scale_s(&c[i][0]).add(&y.scale_s(&c[i][1])))
}

/// The level-n data of the decomposition over the ring S holding α̃, β̃:
/// Q̃, its inverse and M^(n), M^(n-1).
#[derive(Clone, Debug)]
pub struct SignedSetup<S: Scalar> {
    pub data: SplitEigenData,
    pub n: u32,
    pub variant: QtildeVariant,
    pub alpha: S,
    pub beta: S,
    pub q: SMat<S>,
    pub q_inv: SMat<S>,
    m: Mat2<S>,
    m_prev: Mat2<S>,
    degree: usize,
}

impl SignedSetup<Padic> {
    /// Roots at p in Q_p.
    pub fn split(data: &SplitEigenData, n: u32, variant: QtildeVariant) -> Result<Self> {
        match data.roots_p {
            Roots::Split { alpha, beta } => {
                Self::build(data, n, variant, data.alpha_pbar * alpha, data.alpha_pbar * beta)
            }
            Roots::Quadratic(_) => Err(Error::Validation("the roots at p are not in Q_p".into())),
        }
    }
}

impl SignedSetup<Quad> {
    /// Roots at p conjugate in a quadratic ring.
    pub fn quadratic(data: &SplitEigenData, n: u32, variant: QtildeVariant) -> Result<Self> {
        match &data.roots_p {
            Roots::Quadratic(ext) => {
                let s = &data.alpha_pbar;
                Self::build(data, n, variant, ext.alpha().scale(s), ext.beta().scale(s))
            }
            Roots::Split { .. } => Err(Error::Validation("the roots at p lie in Q_p".into())),
        }
    }
}

impl<S: Scalar> SignedSetup<S> {
    fn build(data: &SplitEigenData, n: u32, variant: QtildeVariant, alpha: S, beta: S) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("level n must be ≥ 1".into()));
        }
        let (q, q_inv) = build_qtilde(data, alpha, beta, variant)?;
        let lm = data.log_matrix(n)?;
        let m = lift_mat(&alpha, lm.m(n));
        let m_prev = lift_mat(&alpha, lm.m(n - 1));
        Ok(SignedSetup { data: data.clone(), n, variant, alpha, beta, q, q_inv, m, m_prev, degree: lm.dmax() })
    }

    pub fn proto(&self) -> S {
        self.alpha.zero_like()
    }

    /// M^(n) over S.
    pub fn m(&self) -> &Mat2<S> {
        &self.m
    }

    /// Degree bound of M^(n).
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Smallest window the decomposition accepts: the degree of
    /// ∏_i Φ_n(u^(-i)(1+T) - 1).
    pub fn min_window(&self) -> usize {
        let p = self.data.p() as usize;
        (self.data.k as usize + 1) * (p - 1) * p.pow(self.n - 1)
    }

    pub fn det_constant(&self) -> S {
        det(&self.m).coeff(0)
    }

    pub fn det_unit(&self) -> bool {
        self.det_constant().valuation() == Valuation::ZERO
    }

    /// (L_α, L_β) = Q̃^(-1) M^(n) (L♯, L♭) per component. Exact polynomial
    /// inputs give exact outputs.
    pub fn synthesize(&self, sharp: &Distribution<S>, flat: &Distribution<S>) -> Result<SynthPair<S>> {
        self.check_pair(sharp, flat)?;
        let mut la = Vec::new();
        let mut lb = Vec::new();
        for (s, f) in sharp.components.iter().zip(&flat.components) {
            let win = s.dmax().max(f.dmax()) + self.degree;
            let m = mat_truncate(&self.m, win);
            let y = apply(&m, &s.with_dmax(win), &f.with_dmax(win));
            let [a, b] = apply_const(&self.q_inv, &y[0], &y[1]);
            la.push(a);
            lb.push(b);
        }
        let [va, vb] = self.data.tilde_valuations();
        let p = self.data.p();
        Ok(SynthPair {
            alpha: Distribution::new(p, la, va.as_f64(), Provenance::Synthesized)?,
            beta: Distribution::new(p, lb, vb.as_f64(), Provenance::Synthesized)?,
        })
    }

    /// (L♯, L♭) = M^(n)^(-1) Q̃ (L_α, L_β) modulo T^(D+1), D the smallest
    /// input window.
    pub fn decompose(&self, la: &Distribution<S>, lb: &Distribution<S>) -> Result<SignedPair<S>> {
        self.check_pair(la, lb)?;
        let window = la.components.iter().chain(&lb.components).map(|s| s.dmax()).min().unwrap_or(0);
        if window < self.min_window() {
            return Err(Error::TruncationOverflow { degree: self.min_window(), dmax: window });
        }
        let (sharp, flat) = invert(&self.m, &self.q, la, lb, window)?;
        let prev = invert(&self.m_prev, &self.q, la, lb, window)?;
        let report = SignedReport::new(self.n, &sharp, &flat, &prev);
        if report.precision <= 0 {
            return Err(Error::PrecisionExhausted(format!(
                "decomposition at level {} keeps no digits (absolute precision {})",
                self.n, report.precision
            )));
        }
        let p = self.data.p();
        Ok(SignedPair {
            sharp: Distribution::new(p, sharp, 0.0, Provenance::Decomposed)?,
            flat: Distribution::new(p, flat, 0.0, Provenance::Decomposed)?,
            report,
        })
    }

    fn check_pair(&self, x: &Distribution<S>, y: &Distribution<S>) -> Result<()> {
        let p = self.data.p();
        for d in [x, y] {
            if d.p != p {
                return Err(Error::ContextMismatch { left: p, right: d.p });
            }
        }
        Ok(())
    }
}

type Components<S> = Vec<TruncSeries<S>>;

fn invert<S: Scalar>(
    m: &Mat2<S>,
    q: &SMat<S>,
    la: &Distribution<S>,
    lb: &Distribution<S>,
    window: usize,
) -> Result<(Components<S>, Components<S>)> {
    let m = mat_truncate(m, window);
    let d = det(&m);
    if d.coeff(0).valuation() != Valuation::ZERO {
        return Err(Error::NonUnit(format!("det M(0) = {}", d.coeff(0))));
    }
    let dinv = d.inverse()?;
    let adj = adjugate(&m);
    let mut sharp = Vec::new();
    let mut flat = Vec::new();
    for (a, b) in la.components.iter().zip(&lb.components) {
        let y = apply_const(q, &a.with_dmax(window), &b.with_dmax(window));
        let [s, f] = apply(&adj, &y[0], &y[1]);
        sharp.push(s.mul(&dinv));
        flat.push(f.mul(&dinv));
    }
    Ok((sharp, flat))
}

#[derive(Clone, Debug)]
pub struct SynthPair<S: Scalar> {
    pub alpha: Distribution<S>,
    pub beta: Distribution<S>,
}

#[derive(Clone, Debug)]
pub struct SignedPair<S: Scalar> {
    pub sharp: Distribution<S>,
    pub flat: Distribution<S>,
    pub report: SignedReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignedReport {
    pub n: u32,
    pub window: usize,
    /// Smallest absolute precision among output coefficients.
    pub precision: i32,
    pub det_unit: bool,
    /// Smallest coefficient valuation of the output.
    pub floor: Valuation,
    /// Smallest valuation over the first and the last third of the window.
    pub low_floor: Valuation,
    pub high_floor: Valuation,
    /// Decrease across the window of the least-squares line through the
    /// per-degree minimal valuations; bounded outputs stay near 0.
    pub drop: f64,
    pub growth: Vec<Option<f64>>,
    /// Valuation of the difference between the outputs through M^(n) and
    /// M^(n-1).
    pub stabilization: Valuation,
    /// Output not bounded: `drop` exceeds one digit or the last third of
    /// the window sinks below the first.
    pub flagged: bool,
}

impl SignedReport {
    fn new<S: Scalar>(n: u32, sharp: &Components<S>, flat: &Components<S>, prev: &(Components<S>, Components<S>)) -> Self {
        let all: Vec<&TruncSeries<S>> = sharp.iter().chain(flat).collect();
        let window = all.iter().map(|s| s.dmax()).min().unwrap_or(0);
        let per_degree: Vec<Valuation> = (0..=window)
            .map(|i| all.iter().map(|s| s.coeff(i).valuation()).min().unwrap_or(Valuation::INFINITY))
            .collect();
        let floor_in = |lo: usize, hi: usize| per_degree[lo..hi].iter().copied().min().unwrap_or(Valuation::INFINITY);
        let third = (window + 1).div_ceil(3);
        let low_floor = floor_in(0, third);
        let high_floor = floor_in(window + 1 - third, window + 1);
        let floor = floor_in(0, window + 1);
        let pts: Vec<(f64, f64)> = per_degree
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_infinite())
            .map(|(i, v)| (i as f64, v.as_f64()))
            .collect();
        let drop = if pts.len() >= 2 {
            let k = pts.len() as f64;
            let mx = pts.iter().map(|x| x.0).sum::<f64>() / k;
            let my = pts.iter().map(|x| x.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|x| (x.0 - mx) * (x.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|x| (x.0 - mx) * (x.0 - mx)).sum();
            -sxy / sxx * (pts[pts.len() - 1].0 - pts[0].0)
        } else {
            0.0
        };
        let stabilization = all
            .iter()
            .zip(prev.0.iter().chain(&prev.1))
            .map(|(x, y)| x.diff_valuation(y))
            .min()
            .unwrap_or(Valuation::INFINITY);
        let precision = all.iter().map(|s| s.precision()).min().unwrap_or(i32::MAX);
        let growth = all.iter().map(|s| growth_estimate(*s)).collect();
        SignedReport {
            n,
            window,
            precision,
            det_unit: true,
            floor,
            low_floor,
            high_floor,
            drop,
            growth,
            stabilization,
            flagged: drop > 1.0 || high_floor < low_floor,
        }
    }
}

/// α̃^r L_α(u^j θ) against β̃^r L_β(u^j θ) at one wild θ of conductor p^r.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyPoint<S: Scalar> {
    pub theta: DirichletChar,
    pub j: u32,
    pub r: u32,
    pub pass: bool,
    /// Valuation of the difference (∞ when equal to precision).
    pub defect: Valuation,
    pub lhs: CycloElt<S>,
    pub rhs: CycloElt<S>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport<S: Scalar> {
    pub pass: bool,
    pub points: Vec<ConsistencyPoint<S>>,
}

pub fn interpolation_consistency<S: Scalar>(
    setup: &SignedSetup<S>,
    la: &Distribution<S>,
    lb: &Distribution<S>,
    points: &[(DirichletChar, u32)],
) -> Result<ConsistencyReport<S>> {
    let ctx = &setup.data.ctx;
    let p = ctx.p();
    let mut out = Vec::new();
    for (theta, j) in points {
        let th = theta.normalized(p);
        if th.wild_order_exp(p) == 0 {
            return Err(Error::Validation(format!("θ = {th:?} is not wild")));
        }
        let r = th.conductor_exp(p);
        let lhs = eval_at(ctx, la, *j, &th)?.scale_s(&pow(setup.alpha, r));
        let rhs = eval_at(ctx, lb, *j, &th)?.scale_s(&pow(setup.beta, r));
        let diff = lhs.sub(&rhs);
        let pass = diff.is_zero();
        let defect = if pass { Valuation::INFINITY } else { diff.min_valuation() };
        out.push(ConsistencyPoint { theta: th, j: *j, r, pass, defect, lhs, rhs });
    }
    Ok(ConsistencyReport { pass: out.iter().all(|x| x.pass), points: out })
}

fn pow<S: Scalar>(x: S, e: u32) -> S {
    (1..e.max(1)).fold(x, |acc, _| acc * x)
}

/// Every wild θ of conductor ≤ p^levels with tame part ε^delta, paired with
/// the twist j.
pub fn wild_points(p: u32, levels: u32, delta: u32, j: u32) -> Result<Vec<(DirichletChar, u32)>> {
    let mut out = Vec::new();
    for r in 2..=levels {
        let q = crate::padic::modint::ppow(p, r - 1);
        for w in (1..q).filter(|w| w % p as u64 != 0) {
            out.push((DirichletChar::new(p, r, delta, w)?, j));
        }
    }
    Ok(out)
}

fn coord_series(f: &TruncSeries<Quad>, which: usize) -> TruncSeries<Padic> {
    let zero = Padic::exact_zero(f.proto().p());
    let cs = f.coeffs().iter().map(|c| if which == 0 { c.coords().0 } else { c.coords().1 }).collect();
    if f.is_exact() {
        TruncSeries::poly(&zero, cs, f.dmax())
    } else {
        TruncSeries::truncated(&zero, cs, f.dmax(), f.tail())
    }
}

/// JSON for a distribution over Q_p[X]/(X^2 - aX + c): the extension and
/// the two coordinate distributions in the basis 1, α.
pub fn quad_to_json(d: &Distribution<Quad>) -> serde_json::Value {
    let ext = d.components.first().map(|c| *c.proto().ext());
    let coord = |w: usize| Distribution {
        p: d.p,
        components: d.components.iter().map(|c| coord_series(c, w)).collect(),
        growth_w: d.growth_w,
        provenance: d.provenance,
    };
    serde_json::json!({
        "ext": ext.map(|e| serde_json::json!({ "a": e.a, "c": e.c })),
        "c0": coord(0).to_json(),
        "c1": coord(1).to_json(),
    })
}

pub fn quad_from_json(v: &serde_json::Value, ext: &QuadExt) -> Result<Distribution<Quad>> {
    let part = |k: &str| -> Result<Distribution<Padic>> {
        Distribution::from_json(v.get(k).ok_or_else(|| Error::Parse(format!("missing {k}")))?)
    };
    let (c0, c1) = (part("c0")?, part("c1")?);
    if c0.p != c1.p || c0.components.len() != c1.components.len() {
        return Err(Error::Parse("coordinate distributions disagree".into()));
    }
    let proto = ext.embed(Padic::exact_zero(ext.p()));
    let mut comps = Vec::new();
    for (x, y) in c0.components.iter().zip(&c1.components) {
        let n = x.len().max(y.len());
        let cs = (0..n).map(|i| Quad::new(*ext, x.coeff(i), y.coeff(i))).collect();
        let dmax = x.dmax().min(y.dmax());
        comps.push(if x.is_exact() && y.is_exact() {
            TruncSeries::poly(&proto, cs, dmax)
        } else {
            let tail = match (x.total_floor(), y.total_floor()) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            };
            TruncSeries::truncated(&proto, cs, dmax, tail)
        });
    }
    Distribution::new(c0.p, comps, c0.growth_w, c0.provenance)
}

/// A seeded pair of bounded measures: every component a polynomial of
/// degree `deg` with integer coefficients in (-1000, 1000).
pub fn random_bounded_pair<S: Scalar>(ctx: &PrimeCtx, proto: &S, deg: usize, seed: u64) -> (Distribution<S>, Distribution<S>) {
    let p = ctx.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comp = || {
        let c = (0..=deg).map(|_| proto.embed(ctx.int(rng.gen_range(-1000..1000)))).collect();
        TruncSeries::poly(&proto.zero_like(), c, deg)
    };
    let s = (0..p - 1).map(|_| comp()).collect();
    let f = (0..p - 1).map(|_| comp()).collect();
    (
        Distribution::new(p, s, 0.0, Provenance::Input).expect("p - 1 components"),
        Distribution::new(p, f, 0.0, Provenance::Input).expect("p - 1 components"),
    )
}

/// Componentwise agreement to the precision both sides carry.
pub fn same_distribution<S: Scalar>(x: &Distribution<S>, y: &Distribution<S>) -> bool {
    x.components.len() == y.components.len()
        && x.components.iter().zip(&y.components).all(|(a, b)| a.with_dmax(b.dmax()).approx_eq(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(p: u32, k: u32, ap: i64) -> SplitEigenData {
        SplitEigenData::from_ints(p, crate::padic::max_digits(p), k, 1, ap).unwrap()
    }

    fn round_trip<S: Scalar>(setup: &SignedSetup<S>, seeds: u64) {
        let proto = setup.proto();
        for seed in 0..seeds {
            let (s, f) = random_bounded_pair(&setup.data.ctx, &proto, setup.min_window(), seed);
            let syn = setup.synthesize(&s, &f).unwrap();
            let back = setup.decompose(&syn.alpha, &syn.beta).unwrap();
            assert!(back.report.precision > 0 && back.report.det_unit);
            assert!(same_distribution(&s, &back.sharp) && same_distribution(&f, &back.flat), "seed {seed}");
            assert!(!back.report.flagged, "seed {seed}: drop {}", back.report.drop);
        }
    }

    #[test]
    fn qtilde_layouts() {
        let d = data(5, 2, 5);
        let setup = SignedSetup::split(&d, 1, QtildeVariant::Standard).unwrap();
        let (alpha, beta) = (setup.alpha, setup.beta);
        assert!((alpha * beta).approx_eq(&(d.v_tilde() * d.ctx.p_power(3))));
        assert!((alpha + beta).approx_eq(&d.a_tilde()));
        let ctx = d.ctx;
        let (q, qi) = build_qtilde(&d, alpha, beta, QtildeVariant::Standard).unwrap();
        let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
        assert!(det.approx_eq(&(d.v_tilde() * ctx.p_power(3) * (alpha - beta))));
        let id = |i: usize, j: usize| q[i][0] * qi[0][j] + q[i][1] * qi[1][j];
        assert!(id(0, 0).approx_eq(&ctx.one()) && id(0, 1).is_zero() && id(1, 0).is_zero());
        let (q, _) = build_qtilde(&d, alpha, beta, QtildeVariant::Alternate).unwrap();
        let c = d.v_tilde() * ctx.int(5);
        assert!(q[1][0].approx_eq(&-c) && q[1][1].approx_eq(&-c));
        assert!(build_qtilde(&d, alpha, alpha, QtildeVariant::Standard).is_err());
    }

    #[test]
    fn eigen_validation() {
        let d = data(5, 2, 5);
        assert!(d.is_split());
        let [va, vb] = d.tilde_valuations();
        assert_eq!((va, vb), (Valuation::int(1), Valuation::int(2)));
        assert!(!data(3, 0, 3).is_split());
        assert!(SplitEigenData::from_ints(5, 20, 2, 5, 5).is_err());
        assert!(SplitEigenData::from_ints(5, 20, 4, 1, 5).is_err());
        let w = d.to_wire();
        let back = SplitEigenData::from_wire(&w, 20).unwrap();
        assert!(back.a_tilde().approx_eq(&d.a_tilde()));
    }

    #[test]
    fn basis_and_zero() {
        let d = data(5, 2, 5);
        let setup = SignedSetup::split(&d, 1, QtildeVariant::Standard).unwrap();
        let ctx = d.ctx;
        let dm = setup.min_window();
        let one = TruncSeries::constant(ctx.one(), dm);
        let zero = TruncSeries::zero(&ctx.zero(), dm);
        let dist = |f: &TruncSeries<Padic>| Distribution::new(5, vec![f.clone(); 4], 0.0, Provenance::Input).unwrap();
        let syn = setup.synthesize(&dist(&one), &dist(&zero)).unwrap();
        let m = setup.m();
        let want_a = m[0][0].scale(&setup.q_inv[0][0]).add(&m[1][0].scale(&setup.q_inv[0][1]));
        let want_b = m[0][0].scale(&setup.q_inv[1][0]).add(&m[1][0].scale(&setup.q_inv[1][1]));
        assert!(syn.alpha.components[2].approx_eq(&want_a) && syn.beta.components[2].approx_eq(&want_b));
        let back = setup.decompose(&syn.alpha, &syn.beta).unwrap();
        assert!(back.sharp.components.iter().all(|c| c.approx_eq(&one)));
        assert!(back.flat.components.iter().all(|c| c.is_zero()));
        let z = setup.synthesize(&dist(&zero), &dist(&zero)).unwrap();
        assert!(z.alpha.components.iter().chain(&z.beta.components).all(|c| c.is_zero()));
    }

    #[test]
    fn round_trip_split() {
        for (p, k, ap, n) in [(5, 2, 5, 1), (7, 2, 7, 1), (7, 3, 7, 1)] {
            let d = data(p, k, ap);
            round_trip(&SignedSetup::split(&d, n, QtildeVariant::Standard).unwrap(), 5);
        }
    }

    #[test]
    fn round_trip_quadratic() {
        for (p, k, ap, n) in [(3, 0, 3, 1), (3, 0, 3, 2), (3, 0, 3, 3), (5, 0, 5, 1), (3, 1, 3, 2), (5, 1, 5, 1)] {
            let d = data(p, k, ap);
            round_trip(&SignedSetup::quadratic(&d, n, QtildeVariant::Standard).unwrap(), 5);
        }
    }

    #[test]
    fn quad_json_round_trip() {
        let d = data(3, 0, 3);
        let setup = SignedSetup::quadratic(&d, 2, QtildeVariant::Standard).unwrap();
        let (s, f) = random_bounded_pair(&setup.data.ctx, &setup.proto(), setup.min_window(), 4);
        let syn = setup.synthesize(&s, &f).unwrap();
        let Roots::Quadratic(ext) = d.roots_p else { panic!("quadratic expected") };
        let back = quad_from_json(&quad_to_json(&syn.alpha), &ext).unwrap();
        assert!(same_distribution(&syn.alpha, &back));
    }

    #[test]
    fn alternate_layout_round_trip() {
        let d = data(7, 2, 7);
        round_trip(&SignedSetup::split(&d, 1, QtildeVariant::Alternate).unwrap(), 3);
    }

    #[test]
    fn precision_guard() {
        let d = data(5, 2, 5);
        let setup = SignedSetup::split(&d, 2, QtildeVariant::Standard).unwrap();
        let (s, f) = random_bounded_pair(&setup.data.ctx, &d.ctx.zero(), setup.min_window(), 0);
        let syn = setup.synthesize(&s, &f).unwrap();
        assert!(matches!(setup.decompose(&syn.alpha, &syn.beta), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn mismatched_pairs_flagged() {
        let d = data(3, 0, 3);
        for n in 1..=3 {
            let setup = SignedSetup::quadratic(&d, n, QtildeVariant::Standard).unwrap();
            let proto = setup.proto();
            for seed in 0..5 {
                let (s, f) = random_bounded_pair(&setup.data.ctx, &proto, setup.min_window(), seed);
                let (s2, f2) = random_bounded_pair(&setup.data.ctx, &proto, setup.min_window(), seed + 50);
                let a = setup.synthesize(&s, &f).unwrap();
                let b = setup.synthesize(&s2, &f2).unwrap();
                let r = setup.decompose(&a.alpha, &b.beta).unwrap().report;
                assert!(r.flagged && r.floor < Valuation::ZERO, "n {n} seed {seed}: {r:?}");
            }
        }
    }

    #[test]
    fn consistency_on_synthesized_pairs() {
        let d = data(3, 0, 3);
        for n in 1..=2 {
            let setup = SignedSetup::quadratic(&d, n, QtildeVariant::Standard).unwrap();
            let proto = setup.proto();
            let (s, f) = random_bounded_pair(&setup.data.ctx, &proto, setup.min_window(), 7);
            let syn = setup.synthesize(&s, &f).unwrap();
            let pts = wild_points(3, n + 1, 1, 0).unwrap();
            let rep = interpolation_consistency(&setup, &syn.alpha, &syn.beta, &pts).unwrap();
            assert!(rep.pass && !rep.points.is_empty());
            let zero = Distribution::new(3, vec![TruncSeries::zero(&proto, 4); 2], 0.0, Provenance::Input).unwrap();
            let z = setup.synthesize(&zero, &zero).unwrap();
            assert!(interpolation_consistency(&setup, &z.alpha, &z.beta, &pts).unwrap().pass);
            let mut bad = syn.beta.clone();
            let c = &mut bad.components[1];
            *c = c.add(&TruncSeries::constant(proto.embed(d.ctx.one()), c.dmax()));
            let rep = interpolation_consistency(&setup, &syn.alpha, &bad, &pts).unwrap();
            assert!(rep.points.iter().all(|x| !x.pass));
        }
    }

    #[test]
    fn consistency_split_level_one() {
        let d = data(5, 2, 5);
        let setup = SignedSetup::split(&d, 1, QtildeVariant::Standard).unwrap();
        let (s, f) = random_bounded_pair(&setup.data.ctx, &d.ctx.zero(), setup.min_window(), 3);
        let syn = setup.synthesize(&s, &f).unwrap();
        let pts: Vec<_> = (0..=2).flat_map(|j| wild_points(5, 2, 0, j).unwrap()).collect();
        assert!(interpolation_consistency(&setup, &syn.alpha, &syn.beta, &pts).unwrap().pass);
    }
}
