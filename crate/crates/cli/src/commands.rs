use std::fs;
use std::path::Path;

use orbitlab_core::config::{InequalityConfig, Real, RunConfig};
use orbitlab_core::contraction::{sweep_grid, sweep_points};
use orbitlab_core::corpus::{self, family_report, CorpusReport, DEFAULT_GRID_POINTS};
use orbitlab_core::family::{check_pointwise_convergence, check_limit_equivalence, fixed_points_of_family};
use orbitlab_core::hypotheses::{
    auto_witnesses, check_compatible, check_compatible_type_a, check_reciprocal_continuity, check_weakly_commuting,
};
use orbitlab_core::orbit::{solve_common_fixed_point, verify_decay};
use orbitlab_core::phi::{check_decay, validate_phi};
use orbitlab_core::{Error, Result};

use crate::output::{write_atomic, Reports};
use crate::{Command, FormArgs, RunArgs};

/// Runs one subcommand. `Ok(true)` when every requested check passed.
pub fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Solve(args) => run(&args, solve),
        Command::Sweep { run: args, form } => run(&args, |cfg, a| sweep(cfg, a, &form)),
        Command::Hypotheses(args) => run(&args, hypotheses),
        Command::PhiCheck(args) => run(&args, phi_check),
        Command::Seq(args) => run(&args, seq),
        Command::CorpusVerify {
            examples,
            config,
            out,
            jobs,
        } => {
            set_jobs(jobs)?;
            let report = match config {
                Some(path) => CorpusReport {
                    ok: false,
                    bundle: vec![corpus::verify_bundle(&load_config(&path)?)?],
                },
                None => corpus::verify_corpus(&examples)?,
            };
            let report = CorpusReport {
                ok: report.bundle.iter().all(|b| b.ok),
                ..report
            };
            print!("{}", report.to_toml()?);
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                for b in &report.bundle {
                    let text = toml::to_string(b).map_err(|e| Error::Io(e.to_string()))?;
                    write_atomic(&dir.join(format!("corpus_{}.toml", b.name)), text.as_bytes())?;
                }
            }
            Ok(report.ok)
        }
        Command::List => {
            for name in corpus::list_examples() {
                let cfg = corpus::load_example(name)?;
                println!("{name}\t{}", cfg.description.unwrap_or_default());
            }
            Ok(true)
        }
        Command::Export { example, out } => {
            let text = corpus::example_source(&example)?;
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    write_atomic(&dir.join(format!("{example}.toml")), text.as_bytes())?;
                }
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Argument(format!("--jobs {n}: {e}")))?;
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn run(args: &RunArgs, body: impl FnOnce(&RunConfig, &RunArgs) -> Result<Reports>) -> Result<bool> {
    set_jobs(args.jobs)?;
    let cfg = match (&args.config, &args.example) {
        (Some(path), _) => load_config(path)?,
        (None, Some(name)) => corpus::load_example(name)?,
        (None, None) => return Err(Error::Config("give --config or --example".into())),
    };
    let reports = body(&cfg, args)?;
    reports.emit(args.out.as_deref())?;
    Ok(reports.all_pass())
}

fn x0s(cfg: &RunConfig, args: &RunArgs) -> Result<Vec<f64>> {
    let xs = match &args.x0 {
        Some(x) => vec![Real::Text(x.clone()).value()?],
        None => cfg.x0s()?,
    };
    if xs.is_empty() {
        return Err(Error::Config("no start point: set [run] x0 or pass --x0".into()));
    }
    Ok(xs)
}

fn grid(cfg: &RunConfig, args: &RunArgs) -> Result<Vec<f64>> {
    let triple = cfg.triple()?;
    let n = args.grid.or(cfg.run.grid_points).unwrap_or(DEFAULT_GRID_POINTS);
    Ok(sweep_points(&triple, n, cfg.sweep_range()?.as_ref()))
}

fn solve(cfg: &RunConfig, args: &RunArgs) -> Result<Reports> {
    let triple = cfg.triple()?;
    let phi = cfg.phi()?;
    let tol_fix = args.tol.unwrap_or_else(|| cfg.tol_fix());
    let max_n = args.max_n.unwrap_or_else(|| cfg.max_n());
    let mut out = Reports::default();
    for (i, x0) in x0s(cfg, args)?.into_iter().enumerate() {
        let solved = solve_common_fixed_point(&triple, x0, tol_fix, max_n, phi.as_ref())?;
        out.push(format!("solve_{i}"), solved.to_check());
        let mut csv = Vec::new();
        solved.trace.write_csv(&mut csv)?;
        out.tables.push((format!("orbit_{i}.csv"), csv));
        if let (Some(p), Some(_)) = (&phi, solved.candidate) {
            if solved.trace.steps.len() >= 3 {
                out.push(format!("decay_{i}"), verify_decay(&solved.trace, p, tol_fix)?);
            }
        }
    }
    Ok(out)
}

fn sweep(cfg: &RunConfig, args: &RunArgs, form: &FormArgs) -> Result<Reports> {
    let over = form.form.as_ref().map(|name| InequalityConfig {
        form: name.clone(),
        alpha: form.alpha.map(Real::Num),
        beta: form.beta.map(Real::Num),
        gamma: form.gamma.map(Real::Num),
        lambda: form.lambda.map(Real::Num),
        zero_mode: None,
    });
    let ineq = cfg
        .form(over.as_ref())?
        .ok_or_else(|| Error::Config("no inequality: add an [inequality] section or pass --form".into()))?;
    let mode = args.zero_mode.unwrap_or_else(|| cfg.zero_mode(over.as_ref()));
    let mut opts = cfg.check_options(mode);
    if let Some(t) = args.tol {
        opts.tol = t;
    }
    let triple = cfg.triple()?;
    let mut out = Reports::default();
    out.push("sweep", sweep_grid(&ineq, &triple, &grid(cfg, args)?, &opts)?);
    Ok(out)
}

fn hypotheses(cfg: &RunConfig, args: &RunArgs) -> Result<Reports> {
    let triple = cfg.triple()?;
    let space = &triple.space;
    let mut lim = cfg.limit_options();
    if let Some(t) = args.tol {
        lim.tol = t;
    }
    let mut pairs = vec![("S", &triple.s)];
    if cfg.maps.t.is_some() {
        pairs.push(("T", &triple.t));
    }
    let declared = cfg.witnesses()?;
    let points = grid(cfg, args)?;
    let mut out = Reports::default();
    for (p, s) in pairs {
        out.push(
            format!("weakly_commuting_{p}"),
            check_weakly_commuting(space, &triple.a, s, &points, lim.tol)?,
        );
        let witnesses: Vec<_> = if declared.is_empty() {
            auto_witnesses(space, &triple.a, s)
                .into_iter()
                .enumerate()
                .map(|(i, w)| (format!("auto{i}"), (w, w.limit)))
                .collect()
        } else {
            declared.iter().map(|(k, v)| (k.clone(), *v)).collect()
        };
        for (name, (w, t)) in witnesses {
            out.push(
                format!("compatible_{p}_{name}"),
                check_compatible(space, &triple.a, s, &w, &lim)?,
            );
            out.push(
                format!("compatible_type_a_{p}_{name}"),
                check_compatible_type_a(space, &triple.a, s, &w, &lim)?,
            );
            out.push(
                format!("reciprocal_continuity_{p}_{name}"),
                check_reciprocal_continuity(space, &triple.a, s, &w, t, &lim)?,
            );
        }
    }
    Ok(out)
}

fn phi_check(cfg: &RunConfig, args: &RunArgs) -> Result<Reports> {
    let phi = cfg.phi()?.ok_or_else(|| Error::Config("no [phi] section".into()))?;
    let tol = args.tol.or(cfg.run.decay_tol).unwrap_or(1e-9);
    let t0s = if cfg.run.decay_t0.is_empty() {
        vec![1.0]
    } else {
        cfg.run.decay_t0.clone()
    };
    let mut out = Reports::default();
    out.push("phi_class", validate_phi(phi.body(), phi.validation_grid(), 0.0)?);
    let mut table = csv::Writer::from_writer(Vec::new());
    table
        .write_record(["t0", "tol", "verdict", "iterations", "final", "budget"])
        .map_err(csv_err)?;
    for (i, t0) in t0s.into_iter().enumerate() {
        let r = check_decay(&phi, t0, tol)?;
        let field = |k: &str| r.value(k).map(|v| v.to_string()).unwrap_or_default();
        table
            .write_record([
                t0.to_string(),
                tol.to_string(),
                r.verdict.to_string(),
                field("iterations"),
                field("final"),
                field("budget"),
            ])
            .map_err(csv_err)?;
        out.push(format!("phi_decay_{i}"), r);
    }
    out.tables.push((
        "phi_decay.csv".into(),
        table.into_inner().map_err(|e| Error::Io(e.to_string()))?,
    ));
    Ok(out)
}

fn seq(cfg: &RunConfig, args: &RunArgs) -> Result<Reports> {
    let fam = cfg
        .family()?
        .ok_or_else(|| Error::Config("no [family] section".into()))?;
    let f = cfg.family.as_ref().expect("family section present");
    let x0 = match &args.x0 {
        Some(x) => Real::Text(x.clone()).value()?,
        None => f.x0.value()?,
    };
    let max_n = args.max_n.unwrap_or_else(|| cfg.max_n());
    let points = fixed_points_of_family(&fam, x0, &f.n_list, cfg.tol_fix(), max_n);
    let mut table = csv::Writer::from_writer(Vec::new());
    table
        .write_record(["n", "u_n", "max_residual", "unique", "note"])
        .map_err(csv_err)?;
    for p in &points {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        table
            .write_record([
                p.n.to_string(),
                opt(p.u),
                opt(p.max_residual),
                p.unique.map(|b| b.to_string()).unwrap_or_default(),
                p.note.clone(),
            ])
            .map_err(csv_err)?;
    }
    let mut out = Reports::default();
    out.tables.push((
        "family_fixed_points.csv".into(),
        table.into_inner().map_err(|e| Error::Io(e.to_string()))?,
    ));
    out.push("family_fixed_points", family_report(&points));
    let tol = args.tol.or(f.tol).unwrap_or(1e-3);
    out.push(
        "pointwise_convergence",
        check_pointwise_convergence(&fam, &cfg.family_grid()?, tol, f.n_max.unwrap_or(16))?,
    );
    let solved: Vec<(u32, f64)> = points.iter().filter_map(|p| p.u.map(|u| (p.n, u))).collect();
    if !solved.is_empty() {
        let declared = f.u.as_ref().map(Real::value).transpose()?;
        out.push(
            "limit_equivalence",
            check_limit_equivalence(&fam, &solved, declared, 1e-6)?,
        );
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
