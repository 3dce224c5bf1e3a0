//! Worked examples bundled as run configurations with expected outcomes,
//! and the runner that checks a bundle against them.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Expectation, Real, RunConfig};
use crate::contraction::{check_pair, sweep_grid, sweep_points, MapTriple};
use crate::dsl::PiecewiseFn;
use crate::error::{Error, Result};
use crate::family::{check_pointwise_convergence, check_limit_equivalence, fixed_points_of_family, MapFamily};
use crate::hypotheses::{
    check_compatible, check_compatible_type_a, check_reciprocal_continuity, check_weakly_commuting, Word,
};
use crate::orbit::{solve_common_fixed_point, verify_decay};
use crate::phi::{check_decay, validate_phi};
use crate::report::{CheckReport, Fields, Value};

const BUNDLES: [(&str, &str); 7] = [
    ("ex_1_6", include_str!("../corpus/ex_1_6.toml")),
    ("remark_3_2", include_str!("../corpus/remark_3_2.toml")),
    ("ex_3_3", include_str!("../corpus/ex_3_3.toml")),
    ("ex_3_4", include_str!("../corpus/ex_3_4.toml")),
    ("ex_3_5", include_str!("../corpus/ex_3_5.toml")),
    ("ex_3_6", include_str!("../corpus/ex_3_6.toml")),
    ("ex_3_7", include_str!("../corpus/ex_3_7.toml")),
];

/// Default tolerance when comparing a report value with an expected one.
pub const MATCH_TOL: f64 = 1e-9;

/// Sweep grid size when a bundle does not set one.
pub const DEFAULT_GRID_POINTS: usize = 200;

pub fn list_examples() -> Vec<&'static str> {
    BUNDLES.iter().map(|(n, _)| *n).collect()
}

/// Source text of a bundle, which is itself a valid run configuration.
pub fn example_source(name: &str) -> Result<&'static str> {
    BUNDLES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            Error::NotFound(format!(
                "no example named {name:?}; try one of {}",
                list_examples().join(", ")
            ))
        })
}

pub fn load_example(name: &str) -> Result<RunConfig> {
    RunConfig::from_toml(example_source(name)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: String,
    pub check: String,
    pub expected: String,
    pub verdict: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleReport {
    pub name: String,
    pub ok: bool,
    pub expectations: usize,
    pub matched: usize,
    /// Discrepancy ids whose expectations all matched.
    pub reproduced: Vec<String>,
    pub outcome: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub ok: bool,
    pub bundle: Vec<BundleReport>,
}

impl CorpusReport {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Runs every expectation of `cfg`. Bundles without a name are reported
/// as `"config"`.
pub fn verify_bundle(cfg: &RunConfig) -> Result<BundleReport> {
    let outcome: Vec<Outcome> = cfg
        .expect
        .iter()
        .map(|e| run_expectation(cfg, e))
        .collect::<Result<_>>()?;
    let matched = outcome.iter().filter(|o| o.ok).count();
    let reproduced = cfg
        .discrepancy
        .iter()
        .filter(|d| {
            let tied: Vec<_> = outcome
                .iter()
                .filter(|o| o.discrepancy.as_deref() == Some(&d.id))
                .collect();
            !tied.is_empty() && tied.iter().all(|o| o.ok)
        })
        .map(|d| d.id.clone())
        .collect();
    Ok(BundleReport {
        name: cfg.name.clone().unwrap_or_else(|| "config".into()),
        ok: matched == outcome.len(),
        expectations: outcome.len(),
        matched,
        reproduced,
        outcome,
    })
}

/// Verifies the named bundles, or all of them when `names` is empty.
/// Bundles run concurrently; the report keeps the requested order.
pub fn verify_corpus(names: &[String]) -> Result<CorpusReport> {
    let names: Vec<String> = if names.is_empty() {
        list_examples().into_iter().map(String::from).collect()
    } else {
        names.to_vec()
    };
    let bundle = names
        .par_iter()
        .map(|n| verify_bundle(&load_example(n)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorpusReport {
        ok: bundle.iter().all(|b| b.ok),
        bundle,
    })
}

fn run_expectation(cfg: &RunConfig, e: &Expectation) -> Result<Outcome> {
    let mut out = Outcome {
        id: e.id.clone(),
        check: e.check.clone(),
        expected: e.verdict.clone(),
        verdict: String::new(),
        ok: false,
        mismatches: Vec::new(),
        discrepancy: e.discrepancy.clone(),
        error: None,
        report: None,
    };
    match evaluate(cfg, e) {
        Ok(report) => {
            out.verdict = report.verdict.to_string();
            if out.verdict != e.verdict {
                out.mismatches.push(format!("verdict {} != {}", out.verdict, e.verdict));
            }
            compare(&report, e, &mut out.mismatches)?;
            out.report = Some(report);
        }
        // configuration mistakes in a bundle are not outcomes
        Err(err @ (Error::Config(_) | Error::Argument(_))) => return Err(err),
        Err(err) => {
            out.verdict = "error".into();
            if e.verdict != "error" {
                out.mismatches.push(format!("verdict error != {}", e.verdict));
            }
            out.error = Some(err.to_string());
        }
    }
    out.ok = out.mismatches.is_empty();
    Ok(out)
}

fn lookup<'a>(report: &'a CheckReport, key: &str) -> Option<&'a Value> {
    report
        .witness
        .as_ref()
        .and_then(|w| w.get(key))
        .or_else(|| report.details.get(key))
}

fn compare(report: &CheckReport, e: &Expectation, mismatches: &mut Vec<String>) -> Result<()> {
    let tol = e.match_tol.unwrap_or(MATCH_TOL);
    for (key, want) in &e.values {
        let want = want.value()?;
        match report.value(key) {
            Some(got) if (got - want).abs() <= tol => {}
            Some(got) => mismatches.push(format!("{key} = {got}, expected {want}")),
            None => mismatches.push(format!("{key} missing")),
        }
    }
    for (key, bound) in &e.at_most {
        let bound = bound.value()?;
        match report.value(key) {
            Some(got) if got <= bound + tol => {}
            Some(got) => mismatches.push(format!("{key} = {got}, expected at most {bound}")),
            None => mismatches.push(format!("{key} missing")),
        }
    }
    for (key, want) in &e.text {
        let got = match lookup(report, key) {
            Some(Value::Text(s)) => Some(s.clone()),
            Some(Value::Bool(b)) => Some(b.to_string()),
            _ => None,
        };
        if got.as_deref() != Some(want.as_str()) {
            mismatches.push(format!("{key} = {got:?}, expected {want:?}"));
        }
    }
    for (key, want) in &e.lists {
        let want = want.iter().map(Real::value).collect::<Result<Vec<_>>>()?;
        match lookup(report, key) {
            Some(Value::List(got))
                if got.len() == want.len() && got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= tol) => {}
            other => mismatches.push(format!("{key} = {other:?}, expected {want:?}")),
        }
    }
    Ok(())
}

fn need<T>(v: Option<T>, what: &str, e: &Expectation) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("expectation {} ({}) needs {what}", e.id, e.check)))
}

fn partner<'a>(triple: &'a MapTriple, e: &Expectation) -> Result<&'a PiecewiseFn> {
    match e.pair.as_deref() {
        None | Some("S") => Ok(&triple.s),
        Some("T") => Ok(&triple.t),
        Some(other) => Err(Error::Config(format!(
            "expectation {}: pair must be S or T, got {other:?}",
            e.id
        ))),
    }
}

fn family_of(cfg: &RunConfig, e: &Expectation) -> Result<MapFamily> {
    need(cfg.family()?, "a [family] section", e)
}

/// Runs the check named by `e.check` against `cfg`.
pub fn evaluate(cfg: &RunConfig, e: &Expectation) -> Result<CheckReport> {
    let triple = cfg.triple()?;
    let space = &triple.space;
    let x0 = || need(e.x0.as_ref(), "x0", e)?.value();
    let tol_fix = e.tol_fix.unwrap_or_else(|| cfg.tol_fix());
    let max_n = e.max_n.unwrap_or_else(|| cfg.max_n());
    let phi = cfg.phi()?;
    let witness = || -> Result<_> {
        let name = need(e.witness.as_ref(), "witness", e)?;
        Ok(cfg.witnesses()?[name])
    };
    let points = || -> Result<Vec<f64>> {
        let range = if e.full_domain == Some(true) {
            None
        } else {
            cfg.sweep_range()?
        };
        Ok(sweep_points(
            &triple,
            cfg.run.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            range.as_ref(),
        ))
    };
    let lim = cfg.limit_options();

    match e.check.as_str() {
        "solve" => Ok(solve_common_fixed_point(&triple, x0()?, tol_fix, max_n, phi.as_ref())?.to_check()),
        "decay" => {
            let phi = need(phi.as_ref(), "a [phi] section", e)?;
            let solved = solve_common_fixed_point(&triple, x0()?, tol_fix, max_n, Some(phi))?;
            verify_decay(&solved.trace, phi, e.tol.unwrap_or(tol_fix))
        }
        "sweep" | "pair" => {
            let form = need(cfg.form(e.inequality.as_ref())?, "an inequality", e)?;
            let mode = e.zero_mode.unwrap_or_else(|| cfg.zero_mode(e.inequality.as_ref()));
            let opts = cfg.check_options(mode);
            if e.check == "sweep" {
                return sweep_grid(&form, &triple, &points()?, &opts);
            }
            let (x, y) = (
                need(e.x.as_ref(), "x", e)?.value()?,
                need(e.y.as_ref(), "y", e)?.value()?,
            );
            let v = check_pair(&form, &triple, x, y, &opts)?;
            let fields = Fields::new()
                .with("x", x)
                .with("y", y)
                .with("status", v.status.as_str())
                .with("lhs", v.lhs)
                .with("rhs", v.rhs);
            Ok(if v.status.is_violation() {
                CheckReport::fail(format!("pair {}", form.name()), fields)
            } else {
                let mut r = CheckReport::pass(format!("pair {}", form.name()));
                r.details = fields;
                r
            })
        }
        "weakly-commuting" => check_weakly_commuting(space, &triple.a, partner(&triple, e)?, &points()?, lim.tol),
        "compatible" => check_compatible(space, &triple.a, partner(&triple, e)?, &witness()?.0, &lim),
        "compatible-type-a" => check_compatible_type_a(space, &triple.a, partner(&triple, e)?, &witness()?.0, &lim),
        "reciprocal-continuity" => {
            let (w, t) = witness()?;
            check_reciprocal_continuity(space, &triple.a, partner(&triple, e)?, &w, t, &lim)
        }
        "witness-term" => {
            let (w, _) = witness()?;
            let n = need(e.n, "n", e)?;
            let word = Word::new(need(e.word.as_deref(), "word", e)?)?;
            let x = w.at(n);
            space.ensure_contains(&format!("witness x_{n}"), x)?;
            let v = word.apply(space, &triple.a, partner(&triple, e)?, x)?;
            Ok(CheckReport::pass("witness_term")
                .with("n", n)
                .with("x_n", x)
                .with("word", word.pretty())
                .with("value", v))
        }
        "phi-class" => {
            let phi = need(phi.as_ref(), "a [phi] section", e)?;
            validate_phi(phi.body(), phi.validation_grid(), e.tol.unwrap_or(0.0))
        }
        "phi-decay" => {
            let phi = need(phi.as_ref(), "a [phi] section", e)?;
            check_decay(phi, need(e.t0, "t0", e)?, e.tol.unwrap_or(1e-9))
        }
        "pointwise" => {
            let fam = family_of(cfg, e)?;
            let f = cfg.family.as_ref().expect("family section present");
            let n_max = e.n_max.or(f.n_max).unwrap_or(16);
            check_pointwise_convergence(&fam, &cfg.family_grid()?, e.tol.or(f.tol).unwrap_or(1e-3), n_max)
        }
        "family-fixed-points" | "limit-equivalence" => {
            let fam = family_of(cfg, e)?;
            let f = cfg.family.as_ref().expect("family section present");
            let points = fixed_points_of_family(&fam, f.x0.value()?, &f.n_list, tol_fix, max_n);
            if e.check == "limit-equivalence" {
                let solved: Vec<(u32, f64)> = points.iter().filter_map(|p| p.u.map(|u| (p.n, u))).collect();
                let declared = f.u.as_ref().map(Real::value).transpose()?;
                return check_limit_equivalence(&fam, &solved, declared, e.tol.unwrap_or(1e-6));
            }
            Ok(family_report(&points))
        }
        other => Err(Error::Config(format!("expectation {}: unknown check {other:?}", e.id))),
    }
}

/// Pass iff every member has a fixed point that the probe start reproduces.
pub fn family_report(points: &[crate::family::FamilyPoint]) -> CheckReport {
    let us: Vec<f64> = points.iter().filter_map(|p| p.u).collect();
    let bad = points.iter().find(|p| p.u.is_none() || p.unique != Some(true));
    let mut r = match bad {
        Some(p) => CheckReport::fail(
            "family_fixed_points",
            Fields::new().with("n", p.n).with("note", p.note.clone()),
        ),
        None => CheckReport::pass("family_fixed_points"),
    };
    r = r
        .with("n", points.iter().map(|p| p.n as f64).collect::<Vec<_>>())
        .with("u_n", us.clone());
    if !us.is_empty() {
        r = r
            .with("u_min", us.iter().copied().fold(f64::INFINITY, f64::min))
            .with("u_max", us.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    r
}
