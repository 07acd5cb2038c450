//! Synthetic norm-compatible towers of pairing scalars x[j][r][t] and the
//! validity predicates they must satisfy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::FiniteMeasure;
use crate::error::{Error, Result};
use crate::padic::modint::{self, ppow};
use crate::padic::{Padic, PrimeCtx, Scalar, Valuation};

/// Eigen-data of the form behind a tower.
#[derive(Clone, Debug)]
pub struct EigenData {
    pub ctx: PrimeCtx,
    pub k: u32,
    pub a_p: Padic,
    /// The scalar a - a^σ.
    pub sqrt_d: Padic,
    /// ε_Ψ(c^(-1)).
    pub eps_c: Padic,
    pub c: i64,
}

impl EigenData {
    /// Validates 0 ≤ v(a_p) < k + 1 (v(a_p) = 0 is the ordinary case, kept
    /// for testing), sqrtD ≠ 0 and gcd(c, 6p) = 1.
    pub fn new(ctx: PrimeCtx, k: u32, a_p: Padic, sqrt_d: Padic, eps_c: Padic, c: i64) -> Result<Self> {
        for x in [&a_p, &sqrt_d, &eps_c] {
            if x.p() != ctx.p() {
                return Err(Error::ContextMismatch { left: ctx.p(), right: x.p() });
            }
        }
        let n = a_p.val().ok_or_else(|| Error::Validation("a_p must be nonzero".into()))?;
        if n < 0 || n > k as i32 {
            return Err(Error::SlopeViolation(format!("v(a_p) = {n} outside [0, {}]", k)));
        }
        if sqrt_d.val().is_none() {
            return Err(Error::Validation("a - a^σ must be nonzero".into()));
        }
        if !eps_c.is_unit() {
            return Err(Error::NonUnit("ε_Ψ(c^-1)".into()));
        }
        if c <= 1 || modint::gcd(c as u64, 6 * ctx.p() as u64) != 1 {
            return Err(Error::Validation(format!("c = {c} must exceed 1 and be prime to 6p")));
        }
        Ok(EigenData { ctx, k, a_p, sqrt_d, eps_c, c })
    }

    /// a_p = 2p^n, a - a^σ = 1, ε_Ψ = 1 and the smallest admissible c.
    pub fn simple(ctx: PrimeCtx, k: u32, slope: u32) -> Result<Self> {
        let c = default_c(ctx.p());
        Self::new(ctx, k, ctx.p_power(slope as i32) * ctx.int(2), ctx.one(), ctx.one(), c)
    }

    pub fn p(&self) -> u32 {
        self.ctx.p()
    }

    /// n = v(a_p).
    pub fn slope(&self) -> i32 {
        self.a_p.val().expect("validated")
    }

    /// m_j = (a^σ - a)^j · j! · C(k, j)^2.
    pub fn m(&self, j: u32) -> Padic {
        let ctx = &self.ctx;
        let mut fact = ctx.one();
        for i in 2..=j as i64 {
            fact = fact * ctx.int(i);
        }
        let b = ctx.int(binom(self.k as u64, j as u64));
        (-self.sqrt_d).pow(j as u64) * fact * b * b
    }

    /// (a_p^r m_j)^(-1).
    pub fn normalizer(&self, j: u32, r: u32) -> Result<Padic> {
        (self.a_p.pow(r as u64) * self.m(j)).inv()
    }

    pub fn to_wire(&self) -> EigenWire {
        EigenWire {
            p: self.ctx.p(),
            u: Some(self.ctx.u()),
            prec: Some(self.ctx.prec()),
            k: self.k,
            a_p: self.a_p.to_string(),
            sqrt_d: Some(self.sqrt_d.to_string()),
            eps_c: Some(self.eps_c.to_string()),
            c: Some(self.c),
        }
    }

    pub fn from_wire(w: &EigenWire, default_prec: u32) -> Result<Self> {
        let prec = w.prec.unwrap_or(default_prec.min(crate::padic::max_digits(w.p)));
        let ctx = PrimeCtx::with_generator(w.p, w.u.unwrap_or(1 + w.p as u64), prec)?;
        let parse = |s: &Option<String>| s.as_deref().map(|s| ctx.parse(s)).unwrap_or(Ok(ctx.one()));
        EigenData::new(
            ctx,
            w.k,
            ctx.parse(&w.a_p)?,
            parse(&w.sqrt_d)?,
            parse(&w.eps_c)?,
            w.c.unwrap_or_else(|| default_c(w.p)),
        )
    }
}

/// Smallest c > 1 prime to 6p.
pub fn default_c(p: u32) -> i64 {
    (2..).find(|&c| modint::gcd(c as u64, 6 * p as u64) == 1).unwrap()
}

pub(crate) fn binom(n: u64, k: u64) -> i64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EigenWire {
    pub p: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prec: Option<u32>,
    pub k: u32,
    pub a_p: String,
    #[serde(default, rename = "sqrtD", skip_serializing_if = "Option::is_none")]
    pub sqrt_d: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_c: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<i64>,
}

/// x[j][r][t] for 0 ≤ j ≤ k, 1 ≤ r ≤ R and t mod p^r (zero off units),
/// with optional level-0 scalars x0[j].
#[derive(Clone, Debug)]
pub struct Tower {
    pub eigen: EigenData,
    levels: u32,
    values: Vec<Vec<Vec<Padic>>>,
    pub x0: Option<Vec<Padic>>,
    pub seed: Option<u64>,
}

impl Tower {
    pub fn zero(eigen: EigenData, levels: u32) -> Result<Self> {
        let p = eigen.p();
        if levels == 0 || levels >= eigen.ctx.prec() {
            return Err(Error::Validation(format!("tower height {levels} outside 1..{}", eigen.ctx.prec())));
        }
        if ppow(p, levels) > 1 << 20 {
            return Err(Error::Validation(format!("p^R = {p}^{levels} too large")));
        }
        let values = (0..=eigen.k)
            .map(|_| (1..=levels).map(|r| vec![eigen.ctx.zero(); ppow(p, r) as usize]).collect())
            .collect();
        Ok(Tower { eigen, levels, values, x0: None, seed: None })
    }

    /// x[j][r][t] := a_p^r m_j Σ_{z ≡ t mod p^r} w z^j.
    pub fn from_measure(mu: &FiniteMeasure, eigen: &EigenData, levels: u32) -> Result<Self> {
        let ctx = eigen.ctx;
        let mu = FiniteMeasure::new(&ctx, mu.masses.clone())?;
        let mut tower = Tower::zero(eigen.clone(), levels)?;
        for j in 0..=eigen.k {
            let moments: Vec<(i64, Padic)> =
                mu.masses.iter().map(|(z, w)| (*z, *w * ctx.int(*z).pow(j as u64))).collect();
            for r in 1..=levels {
                let scale = eigen.a_p.pow(r as u64) * eigen.m(j);
                let m = ppow(ctx.p(), r);
                let row = &mut tower.values[j as usize][r as usize - 1];
                for (z, wz) in &moments {
                    let t = modint::reduce_i64(*z, m) as usize;
                    row[t] = row[t] + *wz;
                }
                for x in row.iter_mut() {
                    if !x.is_exact_zero() {
                        *x = *x * scale;
                    }
                }
            }
        }
        Ok(tower)
    }

    /// Tower of a seeded random Dirac comb.
    pub fn random(eigen: &EigenData, levels: u32, seed: u64, n_masses: usize) -> Result<(Self, FiniteMeasure)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = FiniteMeasure::random(&eigen.ctx, &mut rng, n_masses, levels);
        let mut t = Tower::from_measure(&mu, eigen, levels)?;
        t.seed = Some(seed);
        Ok((t, mu))
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn p(&self) -> u32 {
        self.eigen.p()
    }

    pub fn k(&self) -> u32 {
        self.eigen.k
    }

    /// All x[j][r][t] for t mod p^r, indexed by t.
    pub fn row(&self, j: u32, r: u32) -> &[Padic] {
        &self.values[j as usize][r as usize - 1]
    }

    pub fn x(&self, j: u32, r: u32, t: u64) -> Padic {
        self.row(j, r)[(t % ppow(self.p(), r)) as usize]
    }

    pub fn set(&mut self, j: u32, r: u32, t: u64, v: Padic) -> Result<()> {
        let m = ppow(self.p(), r);
        if j > self.k() || r == 0 || r > self.levels || t.is_multiple_of(self.p() as u64) {
            return Err(Error::Validation(format!("no slot x[{j}][{r}][{t}]")));
        }
        self.values[j as usize][r as usize - 1][(t % m) as usize] = v;
        Ok(())
    }

    /// Add p^m to x[j][r][t].
    pub fn perturb(&mut self, j: u32, r: u32, t: u64, m: i32) -> Result<()> {
        let v = self.x(j, r, t) + self.eigen.ctx.p_power(m);
        self.set(j, r, t, v)
    }

    /// Level-0 scalars from the relation Σ_t x[j][1][t] = (a_p - p^j) x0[j].
    pub fn with_level0(mut self) -> Result<Self> {
        let ctx = self.eigen.ctx;
        let x0 = (0..=self.k())
            .map(|j| {
                let s = self.row(j, 1).iter().fold(ctx.zero(), |a, b| a + *b);
                let f = self.eigen.a_p - ctx.p_power(j as i32);
                if f.is_zero() {
                    return Err(Error::Singular(format!("a_p = p^{j}")));
                }
                s.checked_div(&f)
            })
            .collect::<Result<Vec<_>>>()?;
        self.x0 = Some(x0);
        Ok(self)
    }

    /// Tower sum: both towers must share eigen-data and height.
    pub fn add(&self, other: &Tower) -> Result<Tower> {
        if self.levels != other.levels || self.k() != other.k() || self.p() != other.p() {
            return Err(Error::Validation("towers have different shapes".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().flatten().zip(other.values.iter().flatten()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = *x + *y;
            }
        }
        out.x0 = match (&self.x0, &other.x0) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| *x + *y).collect()),
            _ => None,
        };
        Ok(out)
    }

    fn scale_component(&mut self, j: u32, s: &Padic) {
        for row in self.values[j as usize].iter_mut() {
            for x in row.iter_mut() {
                *x = *x * *s;
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut values = Vec::new();
        for j in 0..=self.k() {
            for r in 1..=self.levels {
                for (t, v) in self.row(j, r).iter().enumerate() {
                    if t % self.p() as usize != 0 {
                        values.push(ValueWire { j, r, t: t as u64, v: v.to_string() });
                    }
                }
            }
        }
        let wire = TowerWire {
            eigen: self.eigen.to_wire(),
            r: self.levels,
            values,
            x0: self.x0.as_ref().map(|x| x.iter().map(|v| v.to_string()).collect()),
            seed: self.seed,
        };
        serde_json::to_value(wire).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value, default_prec: u32) -> Result<Self> {
        let w: TowerWire = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let eigen = EigenData::from_wire(&w.eigen, default_prec)?;
        let ctx = eigen.ctx;
        let mut tower = Tower::zero(eigen, w.r)?;
        for e in &w.values {
            tower.set(e.j, e.r, e.t, ctx.parse(&e.v)?)?;
        }
        if let Some(x0) = &w.x0 {
            if x0.len() != tower.k() as usize + 1 {
                return Err(Error::Parse("x0 needs one entry per twist".into()));
            }
            tower.x0 = Some(x0.iter().map(|s| ctx.parse(s)).collect::<Result<_>>()?);
        }
        tower.seed = w.seed;
        Ok(tower)
    }
}

#[derive(Serialize, Deserialize)]
struct ValueWire {
    j: u32,
    r: u32,
    t: u64,
    v: String,
}

#[derive(Serialize, Deserialize)]
struct TowerWire {
    eigen: EigenWire,
    #[serde(rename = "R")]
    r: u32,
    values: Vec<ValueWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub pass: bool,
    /// Valuation of the worst deviation (∞ when every relation holds).
    pub worst: Valuation,
    pub worst_at: Option<(u32, u32, u64)>,
    /// Level-0 relation, when x0 is present.
    pub level0_pass: Option<bool>,
}

/// Σ_{s ≡ t mod p^r} x[j][r+1][s] = a_p x[j][r][t], and at level 0
/// Σ_t x[j][1][t] = (a_p - p^j) x0[j].
pub fn check_norm(tower: &Tower) -> NormReport {
    let p = tower.p() as u64;
    let a = tower.eigen.a_p;
    let mut worst = Valuation::INFINITY;
    let mut worst_at = None;
    for j in 0..=tower.k() {
        for r in 1..tower.levels {
            let m = ppow(tower.p(), r);
            let mut sums = vec![tower.eigen.ctx.zero(); m as usize];
            for (s, x) in tower.row(j, r + 1).iter().enumerate() {
                sums[s % m as usize] = sums[s % m as usize] + *x;
            }
            for t in (0..m).filter(|t| t % p != 0) {
                let d = sums[t as usize] - a * tower.x(j, r, t);
                if !d.is_zero() && d.valuation() < worst {
                    worst = d.valuation();
                    worst_at = Some((j, r, t));
                }
            }
        }
    }
    let level0_pass = tower.x0.as_ref().map(|x0| {
        (0..=tower.k()).all(|j| {
            let s = tower.row(j, 1).iter().fold(tower.eigen.ctx.zero(), |acc, x| acc + *x);
            let f = a - tower.eigen.ctx.p_power(j as i32);
            (s - f * x0[j as usize]).is_zero()
        })
    });
    NormReport { pass: worst.is_infinite() && level0_pass != Some(false), worst, worst_at, level0_pass }
}

#[derive(Clone, Debug, Serialize)]
pub struct CongruenceReport {
    /// inf over (j, r, t) of the margin; the reported constant.
    pub constant: Valuation,
    /// (j, r, margin) with the margin minimised over t.
    pub margins: Vec<(u32, u32, Valuation)>,
    pub floor: i64,
    pub valid: bool,
}

/// Margin v(Σ_i (-1)^i C(j,i) t^(-i) y_i) - jr with y_i = x[i][r][t] /
/// (m_i a_p^r); zeros count at their known precision and j = 0 is empty.
pub fn check_congruences(tower: &Tower, floor: i64) -> Result<CongruenceReport> {
    let ctx = tower.eigen.ctx;
    let p = tower.p() as u64;
    let mut margins = Vec::new();
    let mut constant = Valuation::INFINITY;
    for r in 1..=tower.levels {
        let norms: Vec<Padic> = (0..=tower.k()).map(|i| tower.eigen.normalizer(i, r)).collect::<Result<_>>()?;
        let m = ppow(tower.p(), r);
        for j in 1..=tower.k() {
            let mut worst = Valuation::INFINITY;
            for t in (0..m).filter(|t| t % p != 0) {
                let tinv = ctx.int(t as i64).inv()?;
                let mut acc = ctx.zero();
                for i in 0..=j {
                    let y = tower.x(i, r, t) * norms[i as usize];
                    let term = ctx.int(binom(j as u64, i as u64)) * tinv.pow(i as u64) * y;
                    acc = if i % 2 == 0 { acc + term } else { acc - term };
                }
                let v = Scalar::val_floor(&acc);
                worst = worst.min(v + Valuation::int(-((j * r) as i64)));
            }
            constant = constant.min(worst);
            margins.push((j, r, worst));
        }
    }
    Ok(CongruenceReport { constant, margins, floor, valid: constant >= Valuation::int(floor) })
}

/// Add p^s times the tower of ν to the j0 component (s = None is a no-op).
pub fn inject_noise(tower: &Tower, nu: &FiniteMeasure, j0: u32, scale_val: Option<i32>) -> Result<Tower> {
    let Some(s) = scale_val else {
        return Ok(tower.clone());
    };
    if j0 > tower.k() {
        return Err(Error::Validation(format!("twist {j0} exceeds k = {}", tower.k())));
    }
    let mut noise = Tower::from_measure(nu, &tower.eigen, tower.levels)?;
    let ctx = tower.eigen.ctx;
    for j in 0..=tower.k() {
        let f = if j == j0 { ctx.p_power(s) } else { ctx.zero() };
        noise.scale_component(j, &f);
    }
    let mut out = tower.clone();
    out.x0 = None;
    out = out.add(&noise)?;
    out.x0 = None;
    out.seed = tower.seed;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigen5() -> EigenData {
        let ctx = PrimeCtx::new(5, 16).unwrap();
        EigenData::new(ctx, 2, ctx.int(10), ctx.int(3), ctx.one(), 7).unwrap()
    }

    #[test]
    fn single_dirac_level_one() {
        let e = eigen5();
        let mu = FiniteMeasure::dirac(&e.ctx, 7).unwrap();
        let t = Tower::from_measure(&mu, &e, 1).unwrap();
        for r in 1..5 {
            let want = if r == 2 { e.a_p * e.m(0) } else { e.ctx.zero() };
            assert!(t.x(0, 1, r).approx_eq(&want));
        }
    }

    #[test]
    fn two_diracs_level_two() {
        let e = eigen5();
        let ctx = e.ctx;
        let mu = FiniteMeasure::new(&ctx, vec![(7, ctx.one()), (11, ctx.one())]).unwrap();
        let t = Tower::from_measure(&mu, &e, 2).unwrap();
        let want = e.a_p.pow(2) * e.m(1) * ctx.int(7);
        assert!(t.x(1, 2, 7).approx_eq(&want));
    }

    #[test]
    fn m_j_values() {
        let e = eigen5();
        // (a^σ - a)^2 · 2! · C(2,2)^2 = 9 · 2
        assert!(e.m(2).approx_eq(&e.ctx.int(18)));
        assert!(e.m(1).approx_eq(&e.ctx.int(-12)));
    }

    #[test]
    fn norm_passes_and_detects_faults() {
        let e = eigen5();
        let (t, _) = Tower::random(&e, 3, 4, 6).unwrap();
        assert!(check_norm(&t).pass);
        let mut bad = t.clone();
        bad.perturb(1, 3, 7, 6).unwrap();
        let rep = check_norm(&bad);
        assert!(!rep.pass);
        assert_eq!(rep.worst, Valuation::int(6));
        assert!(check_norm(&Tower::zero(e, 3).unwrap()).pass);
    }

    #[test]
    fn level_zero_relation() {
        let e = eigen5();
        let (t, _) = Tower::random(&e, 2, 1, 3).unwrap();
        let t = t.with_level0().unwrap();
        assert_eq!(check_norm(&t).level0_pass, Some(true));
    }

    #[test]
    fn congruence_margins() {
        let e = eigen5();
        let (t, _) = Tower::random(&e, 3, 9, 5).unwrap();
        let rep = check_congruences(&t, 0).unwrap();
        assert!(rep.valid, "{:?}", rep.constant);
        let nu = FiniteMeasure::dirac(&e.ctx, 2).unwrap();
        let noisy = inject_noise(&t, &nu, 1, Some(1)).unwrap();
        assert!(check_norm(&noisy).pass);
        let rep = check_congruences(&noisy, 0).unwrap();
        for (j, r, m) in rep.margins {
            if j == 1 {
                assert!(m >= Valuation::int(r.min(1) as i64 - r as i64));
            }
        }
        assert!(inject_noise(&t, &nu, 1, None).unwrap().row(1, 2).iter().zip(t.row(1, 2)).all(|(a, b)| a.approx_eq(b)));
    }

    #[test]
    fn json_round_trip() {
        let e = eigen5();
        let (t, _) = Tower::random(&e, 2, 3, 4).unwrap();
        let t = t.with_level0().unwrap();
        let back = Tower::from_json(&t.to_json(), 16).unwrap();
        assert_eq!(back.seed, Some(3));
        for j in 0..=2 {
            for (a, b) in back.row(j, 2).iter().zip(t.row(j, 2)) {
                assert!(a.approx_eq(b));
            }
        }
        assert!(back.x0.is_some());
    }
}
