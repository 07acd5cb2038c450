use std::path::{Path, PathBuf};

use asai_core::classical::{
    asai_local_factor, euler_check, parse_rat, primes_up_to, rat_to_string, sample_model,
    stabilization_identity_check, LocalRoots, SplitType,
};
use asai_core::cyclo::DirichletChar;
use asai_core::decompose::{
    lift_distribution, quad_from_json, quad_to_json, random_bounded_pair, same_distribution, QtildeVariant,
    SignedSetup, SplitEigenData, SplitWire,
};
use asai_core::distribution::Distribution;
use asai_core::logmatrix::LogMatrix;
use asai_core::padic::{Padic, PrimeCtx, Quad, Roots, Scalar};
use asai_core::patch::{c_factor, interpolation_check, remove_c_component, PatchRun};
use asai_core::tower::{check_norm, EigenData, EigenWire, Tower};
use asai_core::Error;
use clap::Args;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::io::{parse_json, precision, read_json, write_json, CliError, CliResult, Outcome};

/// Eigen-data from a file, or the simple form a_p = 2p^slope.
#[derive(Args, Debug, Clone)]
pub struct EigenArgs {
    /// eigen.json (p, k, a_p and optional sqrtD, eps_c, c, u, prec)
    #[arg(long)]
    pub eigen: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub k: Option<u32>,
    /// v(a_p); defaults to 0 for k = 0 and 1 otherwise
    #[arg(long)]
    pub slope: Option<u32>,
}

impl EigenArgs {
    pub fn load(&self, prec: Option<u32>) -> CliResult<EigenData> {
        if let Some(path) = &self.eigen {
            let w: EigenWire = parse_json(path)?;
            return Ok(EigenData::from_wire(&w, precision(w.p, prec))?);
        }
        let (Some(p), Some(k)) = (self.p, self.k) else {
            return Err(CliError::Usage("give --eigen or both --p and --k".into()));
        };
        let slope = self.slope.unwrap_or(if k == 0 { 0 } else { 1 });
        let ctx = PrimeCtx::new(p, precision(p, prec))?;
        Ok(EigenData::simple(ctx, k, slope)?)
    }
}

fn load_tower(path: &Path, prec: Option<u32>) -> CliResult<Tower> {
    let v = read_json(path)?;
    let p = v["eigen"]["p"].as_u64().unwrap_or(3) as u32;
    Ok(Tower::from_json(&v, precision(p, prec))?)
}

fn load_dist(path: &Path) -> CliResult<Distribution<Padic>> {
    Ok(Distribution::from_json(&read_json(path)?)?)
}

fn emit(out: &Option<PathBuf>, doc: Value, summary: Value, pass: bool) -> CliResult<Outcome> {
    match out {
        Some(path) => {
            write_json(path, &doc)?;
            Ok(Outcome::new(summary, pass))
        }
        None => Ok(Outcome::new(doc, pass)),
    }
}

#[derive(Args, Debug)]
pub struct GenTower {
    #[command(flatten)]
    pub eigen: EigenArgs,
    #[arg(long = "levels", short = 'R', default_value_t = 3)]
    pub levels: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub masses: usize,
    /// Also record the level-0 scalars
    #[arg(long)]
    pub level0: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the generating Dirac comb
    #[arg(long)]
    pub measure_out: Option<PathBuf>,
}

impl GenTower {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let eigen = self.eigen.load(prec)?;
        let (mut tower, mu) = Tower::random(&eigen, self.levels, self.seed, self.masses)?;
        if self.level0 {
            tower = tower.with_level0()?;
        }
        if let Some(path) = &self.measure_out {
            write_json(path, &serde_json::to_value(&mu).expect("serializable"))?;
        }
        let norm = check_norm(&tower);
        let summary = json!({
            "p": eigen.p(),
            "k": eigen.k,
            "R": self.levels,
            "seed": self.seed,
            "support": mu.masses.iter().map(|(z, _)| *z).collect::<Vec<_>>(),
            "norm": norm,
        });
        emit(&self.out, tower.to_json(), summary, norm.pass)
    }
}

#[derive(Args, Debug)]
pub struct Patch {
    #[arg(long)]
    pub tower: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// "all" or one Teichmüller exponent
    #[arg(long, default_value = "all")]
    pub delta: String,
    /// Also check the three level-polynomial conditions
    #[arg(long)]
    pub check: bool,
}

impl Patch {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let tower = load_tower(&self.tower, prec)?;
        let run = PatchRun::new(&tower)?;
        let deltas: Vec<u32> = match self.delta.as_str() {
            "all" => (0..tower.p() - 1).collect(),
            s => {
                let d: u32 = s.parse().map_err(|_| CliError::Usage(format!("bad --delta {s}")))?;
                if d >= tower.p() - 1 {
                    return Err(CliError::Usage(format!("--delta {d} must be below p - 1")));
                }
                vec![d]
            }
        };
        let outcome = run.run_components(&deltas)?;
        let degrees = degree_report(&outcome.levels, tower.k(), tower.p());
        let mut pass = outcome.coherent && degrees.1;
        let mut summary = json!({
            "coherent": outcome.coherent,
            "coherence": outcome.coherence,
            "degree_bound": degrees.1,
            "degrees": degrees.0,
            "max_denominator_exp": outcome.max_denominator_exp,
            "admissibility": outcome.admissibility,
        });
        if self.check {
            let pl = run.check_polylem(0)?;
            pass &= pl.pass;
            summary["conditions"] = serde_json::to_value(&pl).expect("serializable");
        }
        summary["pass"] = json!(pass);
        match &self.out {
            Some(path) => {
                write_json(path, &outcome.distribution.to_json())?;
                Ok(Outcome::new(summary, pass))
            }
            None => {
                summary["distribution"] = outcome.distribution.to_json();
                Ok(Outcome::new(summary, pass))
            }
        }
    }
}

/// Per (δ, r): the patched degree and its bound (k+1)p^(r-1); the flag is
/// whether every level stays below its bound.
pub fn degree_report(
    levels: &[(u32, Vec<asai_core::iwasawa::Patched<Padic>>)],
    k: u32,
    p: u32,
) -> (Vec<Value>, bool) {
    let mut ok = true;
    let mut rows = Vec::new();
    for (delta, polys) in levels {
        for (i, pr) in polys.iter().enumerate() {
            let bound = (k as usize + 1) * (p as usize).pow(i as u32);
            let deg = pr.poly.degree();
            ok &= deg.is_none_or(|d| d < bound);
            rows.push(json!({"delta": delta, "r": i + 1, "degree": deg, "bound": bound}));
        }
    }
    (rows, ok)
}

#[derive(Args, Debug)]
pub struct Interp {
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub tower: PathBuf,
    /// JSON character, e.g. {"r":2,"delta_power":0,"wild_exp":1}
    #[arg(long)]
    pub theta: String,
    #[arg(long, default_value_t = 0)]
    pub j: u32,
}

impl Interp {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let tower = load_tower(&self.tower, prec)?;
        let d = load_dist(&self.dist)?;
        let theta: DirichletChar = serde_json::from_str(&self.theta).map_err(|e| Error::Parse(e.to_string()))?;
        let rep = interpolation_check(&d, &tower, &theta, self.j)?;
        Ok(Outcome::new(serde_json::to_value(&rep).expect("serializable"), rep.pass))
    }
}

#[derive(Args, Debug)]
pub struct RemoveC {
    #[arg(long)]
    pub dist: PathBuf,
    #[arg(long)]
    pub eigen: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RemoveC {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let w: EigenWire = parse_json(&self.eigen)?;
        let eigen = EigenData::from_wire(&w, precision(w.p, prec))?;
        let d = load_dist(&self.dist)?;
        let mut rows = Vec::new();
        let mut removed = Vec::new();
        let mut pass = true;
        for (i, f) in d.components.iter().enumerate() {
            let delta = i as u32;
            match remove_c_component(&eigen, f, delta) {
                Ok(g) => {
                    let back = g.mul(&c_factor(&eigen, delta, f.dmax())?);
                    let ok = back.approx_eq(f);
                    pass &= ok;
                    rows.push(json!({"delta": delta, "status": "removed", "round_trip": ok}));
                    removed.push(Some(g));
                }
                Err(Error::MeromorphicComponent { .. }) => {
                    rows.push(json!({"delta": delta, "status": "meromorphic"}));
                    removed.push(None);
                }
                Err(e) => return Err(e.into()),
            }
        }
        let complete: Option<Vec<_>> = removed.into_iter().collect();
        let mut report = json!({"components": rows, "pass": pass});
        if let Some(comps) = complete {
            let out = Distribution::new(d.p, comps, d.growth_w, d.provenance)?;
            match &self.out {
                Some(path) => write_json(path, &out.to_json())?,
                None => report["distribution"] = out.to_json(),
            }
        } else if self.out.is_some() {
            report["note"] = json!("some component is meromorphic; nothing written");
        }
        Ok(Outcome::new(report, pass))
    }
}

#[derive(Args, Debug)]
pub struct LogMatrixCmd {
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub k: u32,
    /// Trace of the companion matrix, e.g. "3^1*[1]"
    #[arg(long)]
    pub a: String,
    /// Unit with det A = v p^(k+1)
    #[arg(long, default_value = "1")]
    pub v: String,
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Exit non-zero unless every level passes
    #[arg(long)]
    pub check: bool,
}

impl LogMatrixCmd {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let ctx = PrimeCtx::new(self.p, precision(self.p, prec))?;
        let a = ctx.parse(&self.a)?;
        let v = ctx.parse(&self.v)?;
        let lm = LogMatrix::new(&ctx, &a, &v, self.k, self.levels)?;
        let mut reports = Vec::new();
        let mut pass = true;
        for level in 1..=self.levels {
            let rep = lm.check_properties(level)?;
            pass &= rep.det_matches_log_product && rep.det_constant_unit;
            reports.push(serde_json::to_value(&rep).expect("serializable"));
        }
        let top = lm.m(self.levels);
        let matrix: Vec<Vec<Value>> = top
            .iter()
            .map(|row| row.iter().map(|s| serde_json::to_value(s.to_wire()).expect("serializable")).collect())
            .collect();
        let report = json!({
            "p": self.p,
            "k": self.k,
            "c": lm.c(),
            "Dmax": lm.dmax(),
            "levels": reports,
            "matrix": matrix,
            "pass": pass,
        });
        Ok(Outcome::new(report, pass || !self.check))
    }
}

/// Split eigen-data from a file, or the shipped example (p, k, a_p) =
/// (5, 2, 5) with α_p̄ = 1.
#[derive(Args, Debug, Clone)]
pub struct SplitArgs {
    #[arg(long)]
    pub eigen: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Use the alternative layout of Q̃
    #[arg(long)]
    pub alt_qtilde: bool,
}

impl SplitArgs {
    fn load(&self, prec: Option<u32>) -> CliResult<SplitEigenData> {
        match &self.eigen {
            Some(path) => {
                let w: SplitWire = parse_json(path)?;
                Ok(SplitEigenData::from_wire(&w, precision(w.p, prec))?)
            }
            None => Ok(SplitEigenData::from_ints(5, precision(5, prec), 2, 1, 5)?),
        }
    }

    fn variant(&self) -> QtildeVariant {
        if self.alt_qtilde {
            QtildeVariant::Alternate
        } else {
            QtildeVariant::Standard
        }
    }
}

/// Both kinds of setup behind one interface.
#[allow(clippy::large_enum_variant)]
enum Setup {
    Split(SignedSetup<Padic>),
    Quadratic(SignedSetup<Quad>),
}

impl Setup {
    fn new(data: &SplitEigenData, args: &SplitArgs) -> CliResult<Self> {
        Ok(if data.is_split() {
            Setup::Split(SignedSetup::split(data, args.n, args.variant())?)
        } else {
            Setup::Quadratic(SignedSetup::quadratic(data, args.n, args.variant())?)
        })
    }
}

fn read_quad(path: &Path, setup: &SignedSetup<Quad>) -> CliResult<Distribution<Quad>> {
    let v = read_json(path)?;
    let Roots::Quadratic(ext) = &setup.data.roots_p else {
        unreachable!("quadratic setups carry a quadratic extension")
    };
    if v.get("ext").is_some() {
        Ok(quad_from_json(&v, ext)?)
    } else {
        Ok(lift_distribution(&setup.proto(), &Distribution::from_json(&v)?))
    }
}

fn setup_summary<S: Scalar>(s: &SignedSetup<S>) -> Value {
    json!({
        "p": s.data.p(),
        "k": s.data.k,
        "n": s.n,
        "split": s.data.is_split(),
        "variant": s.variant,
        "det_unit": s.det_unit(),
        "min_window": s.min_window(),
        "tilde_valuations": s.data.tilde_valuations(),
    })
}

#[derive(Args, Debug)]
pub struct Synthesize {
    #[arg(long)]
    pub sharp: PathBuf,
    #[arg(long)]
    pub flat: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub la: PathBuf,
    #[arg(long)]
    pub lb: PathBuf,
}

impl Synthesize {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let data = self.split.load(prec)?;
        let summary = match Setup::new(&data, &self.split)? {
            Setup::Split(s) => {
                let pair = s.synthesize(&load_dist(&self.sharp)?, &load_dist(&self.flat)?)?;
                write_json(&self.la, &pair.alpha.to_json())?;
                write_json(&self.lb, &pair.beta.to_json())?;
                setup_summary(&s)
            }
            Setup::Quadratic(s) => {
                let pair = s.synthesize(&read_quad(&self.sharp, &s)?, &read_quad(&self.flat, &s)?)?;
                write_json(&self.la, &quad_to_json(&pair.alpha))?;
                write_json(&self.lb, &quad_to_json(&pair.beta))?;
                setup_summary(&s)
            }
        };
        Ok(Outcome::new(summary, true))
    }
}

#[derive(Args, Debug)]
pub struct Decompose {
    #[arg(long)]
    pub la: PathBuf,
    #[arg(long)]
    pub lb: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Decompose {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let data = self.split.load(prec)?;
        let (doc, report) = match Setup::new(&data, &self.split)? {
            Setup::Split(s) => {
                let pair = s.decompose(&load_dist(&self.la)?, &load_dist(&self.lb)?)?;
                (json!({"sharp": pair.sharp.to_json(), "flat": pair.flat.to_json()}), pair.report)
            }
            Setup::Quadratic(s) => {
                let pair = s.decompose(&read_quad(&self.la, &s)?, &read_quad(&self.lb, &s)?)?;
                (json!({"sharp": quad_to_json(&pair.sharp), "flat": quad_to_json(&pair.flat)}), pair.report)
            }
        };
        let pass = report.det_unit && !report.flagged;
        let report = serde_json::to_value(&report).expect("serializable");
        let mut doc = doc;
        doc["report"] = report.clone();
        emit(&self.out, doc, report, pass)
    }
}

#[derive(Args, Debug)]
pub struct RoundTrip {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[command(flatten)]
    pub split: SplitArgs,
}

impl RoundTrip {
    pub fn run(&self, prec: Option<u32>) -> CliResult<Outcome> {
        let data = self.split.load(prec)?;
        let (summary, results) = match Setup::new(&data, &self.split)? {
            Setup::Split(s) => (setup_summary(&s), self.trials(&s)?),
            Setup::Quadratic(s) => (setup_summary(&s), self.trials(&s)?),
        };
        let pass = results.iter().all(|r| r["pass"] == json!(true));
        Ok(Outcome::new(json!({"setup": summary, "trials": results, "pass": pass}), pass))
    }

    fn trials<S: Scalar>(&self, setup: &SignedSetup<S>) -> CliResult<Vec<Value>> {
        let proto = setup.proto();
        (self.seed..self.seed + self.count)
            .map(|seed| {
                let (sharp, flat) = random_bounded_pair(&setup.data.ctx, &proto, setup.min_window(), seed);
                let syn = setup.synthesize(&sharp, &flat)?;
                let back = setup.decompose(&syn.alpha, &syn.beta)?;
                let ok = same_distribution(&sharp, &back.sharp) && same_distribution(&flat, &back.flat);
                Ok(json!({
                    "seed": seed,
                    "pass": ok && back.report.det_unit,
                    "precision": back.report.precision,
                    "flagged": back.report.flagged,
                }))
            })
            .collect()
    }
}

/// Roots at p as rational strings; the p̄ pair is only read for split
/// factors.
#[derive(Debug, Deserialize)]
pub struct RootsFile {
    pub p: u64,
    #[serde(default)]
    pub k: Option<u32>,
    pub alpha_p: String,
    pub beta_p: String,
    #[serde(default)]
    pub alpha_pbar: Option<String>,
    #[serde(default)]
    pub beta_pbar: Option<String>,
}

impl RootsFile {
    fn roots(&self) -> CliResult<LocalRoots> {
        let opt = |s: &Option<String>| s.as_deref().map(parse_rat).unwrap_or_else(|| parse_rat("0"));
        Ok(LocalRoots {
            alpha_p: parse_rat(&self.alpha_p)?,
            beta_p: parse_rat(&self.beta_p)?,
            alpha_pbar: opt(&self.alpha_pbar)?,
            beta_pbar: opt(&self.beta_pbar)?,
        })
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum TagArg {
    Split,
    Inert,
    Ramified,
}

impl From<TagArg> for SplitType {
    fn from(t: TagArg) -> Self {
        match t {
            TagArg::Split => SplitType::Split,
            TagArg::Inert => SplitType::Inert,
            TagArg::Ramified => SplitType::Ramified,
        }
    }
}

#[derive(Args, Debug)]
pub struct Euler {
    #[arg(long, value_enum)]
    pub tag: TagArg,
    #[arg(long)]
    pub roots: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub xmax: usize,
}

impl Euler {
    pub fn run(&self) -> CliResult<Outcome> {
        let rf: RootsFile = parse_json(&self.roots)?;
        let factor = asai_local_factor(rf.p, self.tag.into(), &rf.roots()?, rf.k)?;
        let others: Vec<u64> = primes_up_to(self.xmax).into_iter().filter(|&l| l != rf.p).collect();
        let model = sample_model(self.xmax, rf.k.unwrap_or(1), &others)?.with_factor(factor.clone());
        let rep = euler_check(&model, self.xmax);
        let pass = rep.product_matches_table && rep.inverse_ok && rep.multiplicative;
        let report = json!({
            "p": rf.p,
            "tag": factor.tag,
            "coeffs": factor.coeffs.iter().map(rat_to_string).collect::<Vec<_>>(),
            "check": rep,
            "pass": pass,
        });
        Ok(Outcome::new(report, pass))
    }
}

#[derive(Args, Debug)]
pub struct StabCheck {
    #[arg(long)]
    pub p: u64,
    /// The stabilizing root, a rational
    #[arg(long)]
    pub alpha: String,
    #[arg(long, default_value_t = 200)]
    pub xmax: usize,
    /// The second prime of the model
    #[arg(long)]
    pub aux: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
}

impl StabCheck {
    pub fn run(&self) -> CliResult<Outcome> {
        let alpha = parse_rat(&self.alpha)?;
        let aux = self.aux.unwrap_or(if self.p == 2 { 3 } else { 2 });
        if aux == self.p {
            return Err(CliError::Usage("--aux must differ from --p".into()));
        }
        let model = sample_model(self.xmax, self.k, &[aux, self.p])?;
        let rep = stabilization_identity_check(&model, self.p, &alpha, self.xmax)?;
        let pass = rep.pass;
        Ok(Outcome::new(serde_json::to_value(&rep).expect("serializable"), pass))
    }
}
