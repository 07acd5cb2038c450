//! Exact Asai local factors, truncated formal Dirichlet series and the
//! p-stabilization identity, all over Q.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn parse_rat(s: &str) -> Result<Rat> {
    Rat::from_str(s.trim()).map_err(|e| Error::Parse(format!("{s}: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

/// Hecke roots at the primes above p. For a split prime all four are used;
/// inert and ramified factors read only (α_p, β_p).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRoots {
    pub alpha_p: Rat,
    pub beta_p: Rat,
    pub alpha_pbar: Rat,
    pub beta_pbar: Rat,
}

impl LocalRoots {
    pub fn zero() -> Self {
        LocalRoots { alpha_p: Rat::zero(), beta_p: Rat::zero(), alpha_pbar: Rat::zero(), beta_pbar: Rat::zero() }
    }

    pub fn ints(ap: i64, bp: i64, apb: i64, bpb: i64) -> Self {
        LocalRoots { alpha_p: rat(ap), beta_p: rat(bp), alpha_pbar: rat(apb), beta_pbar: rat(bpb) }
    }

    /// Swap the roles of the two primes above p.
    pub fn swapped(&self) -> Self {
        LocalRoots {
            alpha_p: self.alpha_pbar.clone(),
            beta_p: self.beta_pbar.clone(),
            alpha_pbar: self.alpha_p.clone(),
            beta_pbar: self.beta_p.clone(),
        }
    }
}

/// A polynomial in X = p^(-s) with constant term 1 and degree ≤ 4.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFactor {
    pub p: u64,
    pub tag: SplitType,
    /// Coefficients of X^0..; coeffs[0] = 1.
    pub coeffs: Vec<Rat>,
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn linear(root: &Rat) -> Vec<Rat> {
    vec![Rat::one(), -root.clone()]
}

/// Expands the Asai factor at p:
/// split: ∏ (1 - a b X) over a ∈ {α_p, β_p}, b ∈ {α_p̄, β_p̄};
/// inert: (1 - α_p X)(1 - p^2 X^2)(1 - β_p X);
/// ramified: (1 - α_p^2 X)(1 - p X)(1 - β_p^2 X).
/// With `k` given, the root products are checked against p^(k+1) (split) or
/// α_p β_p = p^(k+1) (inert, ramified).
pub fn asai_local_factor(p: u64, tag: SplitType, roots: &LocalRoots, k: Option<u32>) -> Result<LocalFactor> {
    if p < 2 {
        return Err(Error::Validation(format!("p = {p} is not a prime")));
    }
    if let Some(k) = k {
        let pk = Rat::from_integer(BigInt::from(p).pow(k + 1));
        let mut pairs = vec![(&roots.alpha_p, &roots.beta_p)];
        if tag == SplitType::Split {
            pairs.push((&roots.alpha_pbar, &roots.beta_pbar));
        }
        for (a, b) in pairs {
            if a * b != pk {
                return Err(Error::Validation(format!("inconsistent roots: {a}·{b} ≠ {p}^{}", k + 1)));
            }
        }
    }
    let pr = rat(p as i64);
    let coeffs = match tag {
        SplitType::Split => {
            let mut acc = vec![Rat::one()];
            for a in [&roots.alpha_p, &roots.beta_p] {
                for b in [&roots.alpha_pbar, &roots.beta_pbar] {
                    acc = poly_mul(&acc, &linear(&(a * b)));
                }
            }
            acc
        }
        SplitType::Inert => {
            let mid = vec![Rat::one(), Rat::zero(), -(&pr * &pr)];
            poly_mul(&poly_mul(&linear(&roots.alpha_p), &mid), &linear(&roots.beta_p))
        }
        SplitType::Ramified => {
            let a2 = &roots.alpha_p * &roots.alpha_p;
            let b2 = &roots.beta_p * &roots.beta_p;
            poly_mul(&poly_mul(&linear(&a2), &linear(&pr)), &linear(&b2))
        }
    };
    Ok(LocalFactor { p, tag, coeffs: trim(coeffs) })
}

fn trim(mut c: Vec<Rat>) -> Vec<Rat> {
    while c.len() > 1 && c.last().is_some_and(|x| x.is_zero()) {
        c.pop();
    }
    c
}

impl LocalFactor {
    pub fn from_coeffs(p: u64, tag: SplitType, coeffs: Vec<Rat>) -> Result<Self> {
        let coeffs = trim(coeffs);
        if coeffs.first() != Some(&Rat::one()) {
            return Err(Error::Validation("local factor must have constant term 1".into()));
        }
        if coeffs.len() > 5 {
            return Err(Error::Validation(format!("local factor of degree {} > 4", coeffs.len() - 1)));
        }
        Ok(LocalFactor { p, tag, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Power series of 1/F(X) to X^n.
    pub fn inverse_series(&self, n: usize) -> Vec<Rat> {
        let mut g = vec![Rat::one()];
        for m in 1..=n {
            let mut acc = Rat::zero();
            for i in 1..=m.min(self.degree()) {
                acc += &self.coeffs[i] * &g[m - i];
            }
            g.push(-acc);
        }
        g
    }

    /// The polynomial as a Dirichlet series supported on powers of p.
    pub fn as_dirichlet(&self, xmax: usize) -> DirichletSeries {
        DirichletSeries::from_p_powers(self.p, &self.coeffs, xmax)
    }

    /// 1/F(p^(-s)) as a Dirichlet series supported on powers of p.
    pub fn inverse_dirichlet(&self, xmax: usize) -> DirichletSeries {
        let e = max_exp(self.p, xmax);
        DirichletSeries::from_p_powers(self.p, &self.inverse_series(e), xmax)
    }
}

fn max_exp(p: u64, xmax: usize) -> usize {
    let mut e = 0;
    let mut q = 1u64;
    while q * p <= xmax as u64 {
        q *= p;
        e += 1;
    }
    e
}

/// Coefficients c(1..=xmax) of Σ c(n) n^(-s).
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSeries {
    /// Index 0 is unused and kept at 0.
    pub coeffs: Vec<Rat>,
}

impl DirichletSeries {
    pub fn zero(xmax: usize) -> Self {
        DirichletSeries { coeffs: vec![Rat::zero(); xmax + 1] }
    }

    pub fn one(xmax: usize) -> Self {
        let mut s = Self::zero(xmax);
        if xmax >= 1 {
            s.coeffs[1] = Rat::one();
        }
        s
    }

    /// Σ_m c_m p^(-ms).
    pub fn from_p_powers(p: u64, c: &[Rat], xmax: usize) -> Self {
        let mut s = Self::zero(xmax);
        let mut q = 1u64;
        for x in c {
            if q > xmax as u64 {
                break;
            }
            s.coeffs[q as usize] = x.clone();
            q *= p;
        }
        s
    }

    pub fn xmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &Rat {
        &self.coeffs[n]
    }

    /// Dirichlet convolution truncated at the smaller xmax.
    pub fn mul(&self, other: &Self) -> Self {
        let x = self.xmax().min(other.xmax());
        let mut out = Self::zero(x);
        for a in 1..=x {
            if self.coeffs[a].is_zero() {
                continue;
            }
            for b in 1..=x / a {
                if !other.coeffs[b].is_zero() {
                    out.coeffs[a * b] += &self.coeffs[a] * &other.coeffs[b];
                }
            }
        }
        out
    }

    /// Drop every c(n) with p | n.
    pub fn deprive(&self, p: u64) -> Self {
        let mut out = self.clone();
        for n in (p as usize..=self.xmax()).step_by(p as usize) {
            out.coeffs[n] = Rat::zero();
        }
        out
    }

    /// c(n) χ(n).
    pub fn twist(&self, chi: impl Fn(u64) -> Rat) -> Self {
        let mut out = self.clone();
        for n in 1..=self.xmax() {
            out.coeffs[n] = &self.coeffs[n] * chi(n as u64);
        }
        out
    }

    /// Smallest n with differing coefficients.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        (1..=self.xmax().min(other.xmax())).find(|&n| self.coeffs[n] != other.coeffs[n])
    }

    pub fn is_multiplicative(&self) -> bool {
        let x = self.xmax();
        if x >= 1 && !self.coeffs[1].is_one() {
            return false;
        }
        (2..=x).all(|n| {
            let (q, _) = prime_power_part(n as u64);
            let m = n / q as usize;
            m == 1 || self.coeffs[n] == &self.coeffs[q as usize] * &self.coeffs[m]
        })
    }
}

/// (p^e, p) for the smallest prime p dividing n > 1.
fn prime_power_part(n: u64) -> (u64, u64) {
    let p = (2..).find(|d| n.is_multiple_of(*d)).expect("n > 1");
    let mut q = 1;
    let mut m = n;
    while m.is_multiple_of(p) {
        m /= p;
        q *= p;
    }
    (q, p)
}

pub fn primes_up_to(n: usize) -> Vec<u64> {
    let mut sieve = vec![true; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if sieve[i] {
            out.push(i as u64);
            for j in (i * i..=n).step_by(i) {
                sieve[j] = false;
            }
        }
    }
    out
}

/// Local factors at finitely many primes; every other prime contributes 1.
#[derive(Clone, Debug)]
pub struct EulerModel {
    pub factors: Vec<LocalFactor>,
}

impl EulerModel {
    pub fn new(factors: Vec<LocalFactor>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for f in &factors {
            if !seen.insert(f.p) {
                return Err(Error::Validation(format!("two factors at p = {}", f.p)));
            }
        }
        Ok(EulerModel { factors })
    }

    pub fn factor(&self, p: u64) -> Option<&LocalFactor> {
        self.factors.iter().find(|f| f.p == p)
    }

    /// The model with the factor at p replaced (or added).
    pub fn with_factor(&self, f: LocalFactor) -> Self {
        let mut factors: Vec<LocalFactor> = self.factors.iter().filter(|g| g.p != f.p).cloned().collect();
        factors.push(f);
        EulerModel { factors }
    }

    /// c(n) = ∏ over p^e ∥ n of the X^e coefficient of 1/F_p.
    pub fn multiplicative_table(&self, xmax: usize) -> DirichletSeries {
        let locals: Vec<(u64, Vec<Rat>)> =
            self.factors.iter().map(|f| (f.p, f.inverse_series(max_exp(f.p, xmax)))).collect();
        let mut s = DirichletSeries::zero(xmax);
        for n in 1..=xmax {
            let mut m = n as u64;
            let mut c = Rat::one();
            while m > 1 {
                let (q, p) = prime_power_part(m);
                m /= q;
                match locals.iter().find(|(l, _)| *l == p) {
                    Some((_, g)) => c *= &g[q.ilog(p) as usize],
                    None => {
                        c = Rat::zero();
                        break;
                    }
                }
            }
            s.coeffs[n] = c;
        }
        s
    }

    /// The Dirichlet-series product of the local inverse series.
    pub fn euler_product(&self, xmax: usize) -> DirichletSeries {
        self.factors.iter().fold(DirichletSeries::one(xmax), |acc, f| acc.mul(&f.inverse_dirichlet(xmax)))
    }

    /// ∏ F_p(p^(-s)) as a Dirichlet polynomial.
    pub fn factor_product(&self, xmax: usize) -> DirichletSeries {
        self.factors.iter().fold(DirichletSeries::one(xmax), |acc, f| acc.mul(&f.as_dirichlet(xmax)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerReport {
    pub xmax: usize,
    /// Convolution of the local series matches the multiplicative table.
    pub product_matches_table: bool,
    /// Multiplying back by every local factor gives 1.
    pub inverse_ok: bool,
    pub multiplicative: bool,
    pub first_mismatch: Option<usize>,
}

pub fn euler_check(model: &EulerModel, xmax: usize) -> EulerReport {
    let table = model.multiplicative_table(xmax);
    let prod = model.euler_product(xmax);
    let back = prod.mul(&model.factor_product(xmax));
    let first_mismatch = table.first_difference(&prod);
    EulerReport {
        xmax,
        product_matches_table: first_mismatch.is_none(),
        inverse_ok: back.first_difference(&DirichletSeries::one(xmax)).is_none(),
        multiplicative: table.is_multiplicative(),
        first_mismatch,
    }
}

/// Legendre symbol (n/p) for odd p, as a twist vanishing on multiples of p.
pub fn legendre(p: u64) -> impl Fn(u64) -> Rat {
    move |n| {
        let r = n % p;
        if r == 0 {
            return Rat::zero();
        }
        let mut acc = 1u64;
        let mut base = r;
        let mut e = (p - 1) / 2;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        if acc == 1 { rat(1) } else { rat(-1) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilizationReport {
    pub p: u64,
    pub xmax: usize,
    /// L(Ψ') = (1 - α p^(-s))^(-1) L^(p)(Ψ) coefficientwise.
    pub geometric_ok: bool,
    pub first_mismatch: Option<usize>,
    /// Twisting by a character of p-power conductor gives the same series
    /// for Ψ and Ψ'.
    pub twist_ok: bool,
    pub pass: bool,
}

/// `model` holds the unstabilized factors (including one at p, if any);
/// the stabilized series has the factor 1 - α X at p.
pub fn stabilization_identity_check(model: &EulerModel, p: u64, alpha: &Rat, xmax: usize) -> Result<StabilizationReport> {
    if p < 2 {
        return Err(Error::Validation(format!("p = {p} is not a prime")));
    }
    let base = model.multiplicative_table(xmax);
    let stab_factor = LocalFactor::from_coeffs(p, SplitType::Split, vec![Rat::one(), -alpha.clone()])?;
    let stabilized = model.with_factor(stab_factor.clone()).multiplicative_table(xmax);
    let rhs = stab_factor.inverse_dirichlet(xmax).mul(&base.deprive(p));
    let first_mismatch = stabilized.first_difference(&rhs);
    let twist_ok = if p == 2 {
        let chi = |n: u64| match n % 4 {
            1 => rat(1),
            3 => rat(-1),
            _ => rat(0),
        };
        base.twist(chi).first_difference(&stabilized.twist(chi)).is_none()
    } else {
        let chi = legendre(p);
        base.twist(&chi).first_difference(&stabilized.twist(&chi)).is_none()
    };
    let geometric_ok = first_mismatch.is_none();
    Ok(StabilizationReport { p, xmax, geometric_ok, first_mismatch, twist_ok, pass: geometric_ok && twist_ok })
}

/// A deterministic model: at each prime ℓ ≤ xmax a factor of the given
/// tag pattern with integral roots of product ℓ^(k+1).
pub fn sample_model(xmax: usize, k: u32, primes: &[u64]) -> Result<EulerModel> {
    let mut factors = Vec::new();
    for (idx, &l) in primes.iter().enumerate() {
        if l as usize > xmax {
            continue;
        }
        let tag = [SplitType::Split, SplitType::Inert, SplitType::Ramified][idx % 3];
        let i = (idx as u32) % (k + 2);
        let j = (idx as u32 + 1) % (k + 2);
        let pw = |e: u32| BigInt::from(l).pow(e);
        let sgn = if idx % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let roots = LocalRoots {
            alpha_p: Rat::from_integer(&sgn * pw(i)),
            beta_p: Rat::from_integer(&sgn * pw(k + 1 - i)),
            alpha_pbar: Rat::from_integer(pw(j)),
            beta_pbar: Rat::from_integer(pw(k + 1 - j)),
        };
        factors.push(asai_local_factor(l, tag, &roots, Some(k))?);
    }
    EulerModel::new(factors)
}

pub fn rat_to_string(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}
