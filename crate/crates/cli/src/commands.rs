//! Subcommand implementations.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sdg_core::bench::{run_convergence, Method, Reference, RungeKutta};
use sdg_core::multilevel::{build_hierarchy, halving_schedule, ml_error_history};
use sdg_core::prelude::*;
use sdg_core::problems::VanDerPolSplit;
use sdg_core::stability::{
    a_stability_probe, default_probe_samples, region_scan, DEFAULT_IM_RANGE, DEFAULT_RE_RANGE, DEFAULT_RESOLUTION,
};

use crate::config::FileConfig;
use crate::{ConvergeArgs, MlrunArgs, ProblemArgs, SchemeArgs, SolveArgs, StabilityArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Newton(_) | Error::Singular(_) => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        usage(format!("i/o: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

const SCHEME_KEYS: &[&str] = &["scheme", "p", "K", "theta", "init", "newton-tol", "newton-iter"];
const PROBLEM_KEYS: &[&str] = &["problem", "lambda", "eps", "implicit", "cells", "tend"];

/// Command-line value if given, else the config file's, else `None`.
struct Settings {
    file: FileConfig,
}

impl Settings {
    fn new(path: Option<&Path>, groups: &[&[&str]]) -> CliResult<Self> {
        let allowed: Vec<&str> = groups.iter().flat_map(|g| g.iter().copied()).collect();
        let file = match path {
            Some(p) => FileConfig::load(p, &allowed).map_err(usage)?,
            None => FileConfig::default(),
        };
        Ok(Self { file })
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.file.get(key).map_err(usage),
        }
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> CliResult<Option<PathBuf>> {
        self.pick(flag, key)
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip an `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_list<T: FromStr>(text: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| usage(format!("{what}: invalid entry '{}': {e}", s.trim()))))
        .collect()
}

fn parse_range(text: &str, what: &str) -> CliResult<(f64, f64)> {
    match parse_list::<f64>(text, what)?.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        _ => Err(usage(format!("{what}: expected 'min,max' with min < max, got '{text}'"))),
    }
}

fn writer(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| usage(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn build_problem(args: &ProblemArgs, s: &Settings, default_lambda: f64) -> CliResult<(IvpProblem<f64>, String)> {
    let name = s.pick(args.problem.clone(), "problem")?.unwrap_or_else(|| "dahlquist".into());
    let (problem, desc) = match name.as_str() {
        "dahlquist" => {
            let lambda = s.pick(args.lambda, "lambda")?.unwrap_or(default_lambda);
            (problems::dahlquist(lambda), format!("dahlquist lambda={lambda}"))
        }
        "vanderpol" => {
            let eps = s.pick(args.eps, "eps")?.unwrap_or(0.1);
            let implicit = s.pick(args.implicit.clone(), "implicit")?.unwrap_or_else(|| "first".into());
            let split = match implicit.as_str() {
                "first" => VanDerPolSplit::FirstImplicit,
                "second" => VanDerPolSplit::SecondImplicit,
                other => return Err(usage(format!("--implicit: expected first or second, got '{other}'"))),
            };
            (
                problems::vanderpol_split(eps, split)?,
                format!("vanderpol eps={eps} implicit={implicit}"),
            )
        }
        "bad" => (problems::bad_example(), "bad".to_string()),
        "advection" => {
            let cells = s.pick(args.cells, "cells")?.unwrap_or(64);
            (problems::advection(cells)?, format!("advection cells={cells}"))
        }
        other => {
            return Err(usage(format!(
                "--problem: expected dahlquist, vanderpol, bad or advection, got '{other}'"
            )))
        }
    };
    match s.pick(args.tend, "tend")? {
        Some(t) => Ok((problem.with_t_end(t)?, format!("{desc} tend={t}"))),
        None => Ok((problem, desc)),
    }
}

struct ResolvedScheme {
    method: Method,
    desc: String,
}

fn resolve_scheme(args: &SchemeArgs, s: &Settings, allow_rk: bool, default_p: usize) -> CliResult<ResolvedScheme> {
    let name = s.pick(args.scheme.clone(), "scheme")?.unwrap_or_else(|| "imsdg".into());
    let rk = match name.as_str() {
        "rk4" => Some(RungeKutta::Rk4),
        "ssprk3" => Some(RungeKutta::SspRk3),
        _ => None,
    };
    if let Some(rk) = rk {
        if !allow_rk {
            return Err(usage(format!("--scheme {name} is not available for this command")));
        }
        return Ok(ResolvedScheme {
            method: Method::RungeKutta(rk),
            desc: format!("scheme={name}"),
        });
    }
    let variant: Variant = name.parse().map_err(|e: Error| usage(format!("--scheme: {e}")))?;
    let p = s.pick(args.p, "p")?.unwrap_or(default_p);
    let k = s.pick(args.k, "K")?.unwrap_or(2 * p);
    let mut config = SchemeConfig::new(variant, p, k);
    if let Some(theta) = s.pick(args.theta, "theta")? {
        config = config.with_theta(theta);
    }
    if let Some(init) = s.pick(args.init.clone(), "init")? {
        config = config.with_init(init.parse().map_err(|e: Error| usage(format!("--init: {e}")))?);
    }
    let mut newton = NewtonOptions::default();
    if let Some(tol) = s.pick(args.newton_tol, "newton-tol")? {
        newton.tol = tol;
    }
    if let Some(it) = s.pick(args.newton_iter, "newton-iter")? {
        newton.max_iter = it;
    }
    config = config.with_newton(newton);
    let init = match config.init {
        Init::EulerMarch => "euler-march",
        Init::Constant => "constant",
    };
    Ok(ResolvedScheme {
        desc: format!("scheme={variant} p={p} K={k} theta={} init={init}", config.theta),
        method: Method::Sdg(config),
    })
}

fn sdg_config(scheme: &ResolvedScheme) -> &SchemeConfig {
    match &scheme.method {
        Method::Sdg(c) => c,
        Method::RungeKutta(_) => unreachable!("runge-kutta rejected for this command"),
    }
}

pub fn solve(args: SolveArgs) -> CliResult<()> {
    let s = Settings::new(args.config.as_deref(), &[PROBLEM_KEYS, SCHEME_KEYS, &["steps", "out"]])?;
    let (problem, pdesc) = build_problem(&args.problem, &s, -1.0)?;
    let scheme = resolve_scheme(&args.scheme, &s, true, 3)?;
    let steps = s.pick(args.steps, "steps")?.unwrap_or(10);
    if steps == 0 {
        return Err(usage("--steps must be at least 1"));
    }
    let out = s.path(args.out, "out")?;
    eprintln!("# sdg solve problem={pdesc} {} steps={steps} dt={}", scheme.desc, problem.t_end() / steps as f64);
    let traj = scheme.method.integrate(&problem, steps)?;
    let mut w = writer(out.as_deref())?;
    let header: Vec<String> = (0..problem.dim()).map(|i| format!("comp{i}")).collect();
    writeln!(w, "t,{}", header.join(","))?;
    for (t, u) in traj.times.iter().zip(&traj.states).skip(1) {
        let row: Vec<String> = u.iter().map(|v| num(*v)).collect();
        writeln!(w, "{},{}", num(*t), row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn converge(args: ConvergeArgs) -> CliResult<()> {
    let s = Settings::new(
        args.config.as_deref(),
        &[PROBLEM_KEYS, SCHEME_KEYS, &["dt", "reference", "ref-steps", "out"]],
    )?;
    let (problem, pdesc) = build_problem(&args.problem, &s, -1.0)?;
    let scheme = resolve_scheme(&args.scheme, &s, true, 3)?;
    let dts: Vec<f64> = parse_list(&s.pick(args.dt, "dt")?.unwrap_or_else(|| "0.5,0.25,0.125".into()), "--dt")?;
    let kind = s
        .pick(args.reference, "reference")?
        .unwrap_or_else(|| if problem.has_exact() { "analytic" } else { "numeric" }.into());
    let reference = match kind.as_str() {
        "analytic" => Reference::Analytic,
        "numeric" => {
            let finest = dts.iter().copied().fold(f64::INFINITY, f64::min);
            let default_steps = (10.0 * problem.t_end() / finest).round().max(1.0) as usize;
            let n = s.pick(args.ref_steps, "ref-steps")?.unwrap_or(default_steps);
            Reference::fine_grid(&problem, n)
        }
        other => return Err(usage(format!("--reference: expected analytic or numeric, got '{other}'"))),
    };
    let out = s.path(args.out, "out")?;
    let table = run_convergence(&problem, &scheme.method, &dts, &reference)?;
    eprintln!("# sdg converge problem={pdesc} {} reference={}", scheme.desc, table.reference);
    let mut w = writer(out.as_deref())?;
    let header: Vec<String> = (0..problem.dim()).map(|i| format!("err_comp{i},order_comp{i}")).collect();
    writeln!(w, "dt,{}", header.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row
            .errors
            .iter()
            .zip(&row.orders)
            .map(|(e, o)| format!("{},{}", num(*e), o.map(num).unwrap_or_default()))
            .collect();
        writeln!(w, "{},{}", num(row.dt), cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn stability(args: StabilityArgs) -> CliResult<()> {
    let s = Settings::new(args.config.as_deref(), &[SCHEME_KEYS, &["re", "im", "nx", "ny", "csv", "pgm"]])?;
    let scheme = resolve_scheme(&args.scheme, &s, false, 4)?;
    let config = sdg_config(&scheme);
    let re = match s.pick(args.re, "re")? {
        Some(t) => parse_range(&t, "--re")?,
        None => DEFAULT_RE_RANGE,
    };
    let im = match s.pick(args.im, "im")? {
        Some(t) => parse_range(&t, "--im")?,
        None => DEFAULT_IM_RANGE,
    };
    let nx = s.pick(args.nx, "nx")?.unwrap_or(DEFAULT_RESOLUTION.0);
    let ny = s.pick(args.ny, "ny")?.unwrap_or(DEFAULT_RESOLUTION.1);
    let csv = s.path(args.csv, "csv")?;
    let pgm = s.path(args.pgm, "pgm")?;
    eprintln!(
        "# sdg stability {} re={},{} im={},{} nx={nx} ny={ny} dt=1",
        scheme.desc, re.0, re.1, im.0, im.1
    );
    let scan = region_scan(config, re, im, (nx, ny))?;
    let probe = a_stability_probe(config, &default_probe_samples())?;

    let mut w = writer(csv.as_deref())?;
    writeln!(w, "re,im,abs_am")?;
    for iy in 0..ny {
        for ix in 0..nx {
            writeln!(w, "{},{},{}", num(scan.re_at(ix)), num(scan.im_at(iy)), num(scan.value(ix, iy)))?;
        }
    }
    w.flush()?;

    if let Some(path) = pgm.as_deref() {
        let mut g = writer(Some(path))?;
        writeln!(g, "P2\n{nx} {ny}\n255")?;
        for iy in (0..ny).rev() {
            let row: Vec<&str> = (0..nx).map(|ix| if scan.is_stable(ix, iy) { "0" } else { "255" }).collect();
            writeln!(g, "{}", row.join(" "))?;
        }
        g.flush()?;
    }

    let summary = format!(
        "stable_cells={} total_cells={} probe={} probe_max_abs={} probe_worst_re={} probe_worst_im={}",
        scan.stable_count(),
        nx * ny,
        if probe.pass { "PASS" } else { "FAIL" },
        num(probe.max_abs),
        num(probe.worst.re),
        num(probe.worst.im)
    );
    if csv.is_some() {
        println!("{summary}");
    } else {
        eprintln!("# {summary}");
    }
    Ok(())
}

pub fn mlrun(args: MlrunArgs) -> CliResult<()> {
    let s = Settings::new(args.config.as_deref(), &[PROBLEM_KEYS, SCHEME_KEYS, &["dt", "levels", "iters", "out"]])?;
    let (problem, pdesc) = build_problem(&args.problem, &s, -10.0)?;
    let levels: Option<Vec<usize>> = match s.pick(args.levels, "levels")? {
        Some(t) => Some(parse_list(&t, "--levels")?),
        None => None,
    };
    let mut scheme_args = args.scheme.clone();
    if let (Some(levels), None) = (&levels, scheme_args.p) {
        scheme_args.p = levels.first().copied();
    }
    let scheme = resolve_scheme(&scheme_args, &s, false, 6)?;
    let config = sdg_config(&scheme);
    let degrees = match levels {
        Some(l) if l.first() != Some(&config.degree) => {
            return Err(usage(format!("--levels must start at the degree p={}, got {l:?}", config.degree)))
        }
        Some(l) => l,
        None => halving_schedule(config.degree, 2)?,
    };
    let dt = s.pick(args.dt, "dt")?.unwrap_or(0.2);
    let iters = s.pick(args.iters, "iters")?.unwrap_or(20);
    let out = s.path(args.out, "out")?;
    eprintln!("# sdg mlrun problem={pdesc} {} levels={degrees:?} dt={dt} iters={iters}", scheme.desc);
    let single = build_hierarchy(&degrees[..1])?;
    let multi = build_hierarchy(&degrees)?;
    let u0 = problem.initial().to_vec();
    let one = ml_error_history(&single, &problem, config, &u0, 0.0, dt, iters)?;
    let many = ml_error_history(&multi, &problem, config, &u0, 0.0, dt, iters)?;
    let mut w = writer(out.as_deref())?;
    writeln!(w, "iter,err_1level,err_mlevel")?;
    for (k, (a, b)) in one.iter().zip(&many).enumerate() {
        writeln!(w, "{k},{},{}", num(*a), num(*b))?;
    }
    w.flush()?;
    Ok(())
}
