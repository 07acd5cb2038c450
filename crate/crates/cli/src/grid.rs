use asai_core::cyclo::DirichletChar;
use asai_core::distribution::{Distribution, FiniteMeasure};
use asai_core::padic::{Padic, PrimeCtx};
use asai_core::patch::{compare_with_oracle, interpolation_check, required_digits, PatchRun};
use asai_core::tower::{check_congruences, check_norm, inject_noise, EigenData, Tower};
use asai_core::Error;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::degree_report;
use crate::io::{is_precision, CliError, CliResult};

/// Which stage a deliberate fault should trip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Fault {
    /// Add p^M to one top-level scalar
    Norm,
    /// Add p^M times a Dirac tower to the k-th moments
    Congruence,
    /// Compare against the measure plus p^M δ_1
    Oracle,
    /// Check interpolation against a tower with one top-level scalar moved by p^M
    Interp,
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub eigen: EigenData,
    pub levels: u32,
    pub seed: u64,
    pub masses: usize,
    pub fault: Option<Fault>,
    /// Valuation M of the injected fault.
    pub fault_val: i32,
    /// Run on the zero measure instead of a random comb.
    pub zero: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub stage: &'static str,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub config: Value,
    pub stages: Vec<Stage>,
    pub pass: bool,
    pub failed_stage: Option<&'static str>,
}

/// Digits the pipeline needs before it starts: the patch budget, and one
/// more than the tower height.
pub fn check_budget(eigen: &EigenData, levels: u32) -> CliResult<()> {
    let p = eigen.p();
    let need = required_digits(p, eigen.k, levels).max(levels + 1);
    if eigen.ctx.prec() < need {
        return Err(Error::PrecisionExhausted(format!(
            "p = {p}, k = {}, R = {levels} needs {need} digits, have {}",
            eigen.k,
            eigen.ctx.prec()
        ))
        .into());
    }
    if levels == 0 || ppow(p, levels) > 1 << 20 {
        return Err(CliError::Usage(format!("tower height {levels} unsupported for p = {p}")));
    }
    Ok(())
}

fn stage(stage: &'static str, pass: bool, detail: Value) -> Stage {
    Stage { stage, pass, detail }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// gen → norm → congruence → patch → assemble → oracle → interp. Every
/// stage runs; the first failing one is named.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<PipelineReport> {
    let e = &cfg.eigen;
    let ctx = e.ctx;
    let (p, k, levels) = (e.p(), e.k, cfg.levels);
    check_budget(e, levels)?;
    if cfg.fault == Some(Fault::Norm) && levels < 2 {
        return Err(CliError::Usage("a norm fault needs R ≥ 2".into()));
    }
    if cfg.fault == Some(Fault::Congruence) && k == 0 {
        return Err(CliError::Usage("k = 0 has no congruence conditions to violate".into()));
    }
    let config = json!({
        "p": p, "k": k, "R": levels, "slope": e.slope(), "prec": ctx.prec(),
        "seed": cfg.seed, "masses": cfg.masses, "zero": cfg.zero,
        "fault": cfg.fault, "fault_val": cfg.fault.map(|_| cfg.fault_val),
    });
    let mut stages = Vec::new();

    let (tower, mu) = if cfg.zero {
        (Tower::zero(e.clone(), levels)?, FiniteMeasure::new(&ctx, Vec::new())?)
    } else {
        Tower::random(e, levels, cfg.seed, cfg.masses)?
    };
    let mut tower = match cfg.fault {
        Some(Fault::Congruence) => inject_noise(&tower, &FiniteMeasure::dirac(&ctx, 1)?, k, Some(cfg.fault_val))?,
        _ => tower,
    };
    tower = match tower.clone().with_level0() {
        Ok(t) => t,
        Err(Error::Singular(_)) => tower,
        Err(err) => return Err(err.into()),
    };
    if cfg.fault == Some(Fault::Norm) {
        tower.perturb(0, levels, 1, cfg.fault_val)?;
    }
    stages.push(stage(
        "gen",
        true,
        json!({"support": mu.masses.iter().map(|(z, _)| *z).collect::<Vec<_>>(), "level0": tower.x0.is_some()}),
    ));

    let norm = check_norm(&tower);
    stages.push(stage("norm", norm.pass, to_value(&norm)));

    let cong = check_congruences(&tower, 0)?;
    stages.push(stage("congruence", cong.valid, to_value(&cong)));

    let run = PatchRun::new(&tower)?;
    let outcome = match run.run() {
        Ok(o) => Some(o),
        Err(err @ Error::TruncationOverflow { .. }) => {
            stages.push(stage("patch", false, json!({"error": err.to_string()})));
            None
        }
        Err(err) => return Err(err.into()),
    };
    if let Some(outcome) = outcome {
        let (degrees, degree_ok) = degree_report(&outcome.levels, k, p);
        let conditions = run.check_polylem(0)?;
        stages.push(stage(
            "patch",
            outcome.coherent && degree_ok && conditions.pass,
            json!({
                "coherent": outcome.coherent,
                "degree_bound": degree_ok,
                "degrees": degrees,
                "conditions": conditions,
            }),
        ));

        let d = &outcome.distribution;
        let dmax = run.dmax();
        let shape_ok = d.components.len() == p as usize - 1 && d.components.iter().all(|c| c.dmax() == dmax);
        let zero_ok = !cfg.zero || d.components.iter().all(|c| c.coeffs().iter().all(|x| x.is_zero()));
        stages.push(stage(
            "assemble",
            shape_ok && zero_ok,
            json!({
                "components": d.components.len(),
                "Dmax": dmax,
                "max_denominator_exp": outcome.max_denominator_exp,
                "all_zero": cfg.zero.then_some(zero_ok),
                "admissibility": outcome.admissibility,
            }),
        ));

        let oracle_mu = match cfg.fault {
            Some(Fault::Oracle) => mu.add(&FiniteMeasure::new(&ctx, vec![(1, ctx.p_power(cfg.fault_val))])?),
            _ => mu.clone(),
        };
        let oracle = compare_with_oracle(&ctx, d, &oracle_mu, k, levels)?;
        stages.push(stage("oracle", oracle.equal, to_value(&oracle)));

        let mut check_tower = tower.clone();
        if cfg.fault == Some(Fault::Interp) {
            check_tower.perturb(0, levels, 1, cfg.fault_val)?;
        }
        stages.push(interp_stage(d, &check_tower)?);
    }

    let failed_stage = stages.iter().find(|s| !s.pass).map(|s| s.stage);
    Ok(PipelineReport { config, pass: failed_stage.is_none(), stages, failed_stage })
}

/// Every character mod p^r for r ≤ R and every twist j ≤ k.
pub fn all_points(p: u32, levels: u32, k: u32) -> Vec<(DirichletChar, u32)> {
    let mut out = Vec::new();
    for r in 1..=levels {
        for delta in 0..p - 1 {
            for wild in 0..ppow(p, r - 1) {
                for j in 0..=k {
                    out.push((DirichletChar { p: Some(p), r, delta_power: delta, wild_exp: wild }, j));
                }
            }
        }
    }
    out
}

fn interp_stage(d: &Distribution<Padic>, tower: &Tower) -> CliResult<Stage> {
    let points = all_points(tower.p(), tower.levels(), tower.k());
    let results: Vec<(bool, Option<bool>)> = points
        .par_iter()
        .map(|(theta, j)| interpolation_check(d, tower, theta, *j).map(|r| (r.pass, r.level0)))
        .collect::<Result<_, Error>>()?;
    let failures: Vec<Value> = points
        .iter()
        .zip(&results)
        .filter(|(_, (ok, _))| !ok)
        .take(10)
        .map(|((theta, j), _)| json!({"theta": theta, "j": j}))
        .collect();
    let level0: Vec<bool> = results.iter().filter_map(|(_, l0)| *l0).collect();
    let pass = results.iter().all(|(ok, _)| *ok);
    Ok(stage(
        "interp",
        pass,
        json!({
            "points": points.len(),
            "failed": results.iter().filter(|(ok, _)| !ok).count(),
            "first_failures": failures,
            "level0_checked": level0.len(),
            "level0_pass": level0.iter().all(|x| *x),
        }),
    ))
}

/// One cell of the invariant grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub p: u32,
    pub k: u32,
    pub levels: u32,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("p={} k={} R={}", self.p, self.k, self.levels)
    }
}

pub fn full_grid() -> Vec<Cell> {
    let mut out = Vec::new();
    for p in [3, 5, 7] {
        for k in 0..=4 {
            for levels in 1..=3 {
                out.push(Cell { p, k, levels });
            }
        }
    }
    out
}

/// "p=5,k=2,R=3": every key optional.
pub fn parse_filter(s: &str) -> CliResult<impl Fn(&Cell) -> bool> {
    let (mut p, mut k, mut r) = (None, None, None);
    for part in s.split(',').filter(|x| !x.trim().is_empty()) {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("filter term {part} is not key=value")))?;
        let val: u32 = val.trim().parse().map_err(|_| CliError::Usage(format!("bad value in {part}")))?;
        match key.trim() {
            "p" => p = Some(val),
            "k" => k = Some(val),
            "R" | "r" => r = Some(val),
            other => return Err(CliError::Usage(format!("unknown filter key {other}"))),
        }
    }
    Ok(move |c: &Cell| p.is_none_or(|x| x == c.p) && k.is_none_or(|x| x == c.k) && r.is_none_or(|x| x == c.levels))
}

#[derive(Clone, Debug)]
pub enum CellResult {
    Pass,
    Fail(&'static str),
    Exhausted(String),
    Invalid(String),
}

/// Run the clean pipeline on one cell; `prec` None uses the largest budget.
pub fn run_cell(cell: Cell, prec: Option<u32>, seed: u64) -> CellResult {
    let build = || -> CliResult<PipelineReport> {
        let ctx = PrimeCtx::new(cell.p, crate::io::precision(cell.p, prec))?;
        let eigen = EigenData::simple(ctx, cell.k, if cell.k == 0 { 0 } else { 1 })?;
        run_pipeline(&PipelineConfig {
            eigen,
            levels: cell.levels,
            seed,
            masses: 4,
            fault: None,
            fault_val: 0,
            zero: false,
        })
    };
    match build() {
        Ok(rep) => match rep.failed_stage {
            None => CellResult::Pass,
            Some(s) => CellResult::Fail(s),
        },
        Err(CliError::Core(e)) if is_precision(&e) => CellResult::Exhausted(e.to_string()),
        Err(e) => CellResult::Invalid(e.to_string()),
    }
}

/// TAP lines for the selected cells, computed in parallel and printed in
/// grid order; the exit code is 0 when all pass, 1 on any property
/// failure, otherwise 2 or 3.
pub fn run_invariants(cells: &[Cell], prec: Option<u32>, seed: u64) -> (String, i32) {
    let results: Vec<CellResult> = cells.par_iter().map(|c| run_cell(*c, prec, seed)).collect();
    let mut out = format!("TAP version 13\n1..{}\n", cells.len());
    let mut code = 0;
    for (i, (cell, res)) in cells.iter().zip(&results).enumerate() {
        let n = i + 1;
        let label = cell.label();
        let line = match res {
            CellResult::Pass => format!("ok {n} - {label}"),
            CellResult::Fail(s) => {
                code = 1;
                format!("not ok {n} - {label} # failed at {s}")
            }
            CellResult::Exhausted(msg) => {
                if code != 1 {
                    code = 3;
                }
                format!("not ok {n} - {label} # {msg}")
            }
            CellResult::Invalid(msg) => {
                if code == 0 {
                    code = 2;
                }
                format!("not ok {n} - {label} # invalid: {msg}")
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    (out, code)
}

fn ppow(p: u32, e: u32) -> u64 {
    (p as u64).pow(e)
}
