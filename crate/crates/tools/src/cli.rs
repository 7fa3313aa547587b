//! Argument parsing and subcommand dispatch for the `bs5` binary.
//!
//! Every flag can also be set through an environment variable named `BS5_` followed
//! by the flag in upper snake case, e.g. `BS5_SEED`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bs5_core::coeffs;
use bs5_core::hypergeom::{self, FnmSpec, Hypergeom, SeriesConfig};
use bs5_core::ode5::{self, SolverConfig, DEFAULT_BC};
use bs5_core::quadrature::QuadConfig;
use bs5_core::sim::{self, SimConfig};
use bs5_core::steady::{MarginalForm, SteadyModel};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Result, ToolError};
use crate::figures::{self, Figure};
use crate::manifest::{self, Manifest};
use crate::validate::{self, Fault, Level, ValidateOptions};
use crate::{replicas, table_io};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bs5", version, about = "Exact and asymptotic fitness laws of the five-species Bak-Sneppen model")]
pub struct Cli {
    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "BS5_OUT")]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv, env = "BS5_FORMAT")]
    pub format: Format,
    /// Manifest file; defaults to `<out>.manifest.json`, or standard error without `--out`.
    #[arg(long, global = true, env = "BS5_MANIFEST")]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact coefficient table alpha(i, j, k) of the k-step density.
    Coeffs {
        #[arg(long, env = "BS5_K")]
        k: u32,
        /// Largest admissible k.
        #[arg(long, default_value_t = 15, env = "BS5_KMAX")]
        kmax: u32,
    },
    /// Runs the cross-validation suite; exits 1 if any check fails.
    Validate(ValidateArgs),
    /// Curve data for the marginal-density or CDF-comparison figure.
    FigureData {
        #[arg(value_enum)]
        which: FigureKind,
        #[arg(long, default_value_t = 201, env = "BS5_POINTS")]
        points: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Solves the fifth-order ODE and tabulates B, B' and B''.
    Solve {
        #[arg(long, default_value_t = 101, env = "BS5_POINTS")]
        points: usize,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Marginal density of one fitness value, in the limit or after `--k` steps.
    Marginal(CurveArgs),
    /// Marginal CDF of one fitness value, in the limit or after `--k` steps.
    Cdf(CurveArgs),
    /// Monte Carlo samples of the site-0 fitness.
    Simulate(SimulateArgs),
    /// Hypergeometric evaluations.
    Hyperg {
        #[command(subcommand)]
        op: HypergOp,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    Margdens,
    Cdfcompare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Integrated,
    Literal,
    Renormalized,
}

impl From<FormArg> for MarginalForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Integrated => MarginalForm::Integrated,
            FormArg::Literal => MarginalForm::Literal,
            FormArg::Renormalized => MarginalForm::LiteralRenormalized,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Lower end of the ODE integration interval.
    #[arg(long, default_value_t = 1e-3, env = "BS5_YMIN")]
    pub ymin: f64,
    /// Relative tolerance of the ODE solver; the absolute tolerance is 1% of it.
    #[arg(long, default_value_t = 1e-10, env = "BS5_TOL")]
    pub tol: f64,
}

impl ModelArgs {
    fn solver(&self) -> SolverConfig {
        SolverConfig { y_min: self.ymin, rel_tol: self.tol, abs_tol: self.tol / 100.0, ..SolverConfig::default() }
    }

    fn build(&self) -> Result<SteadyModel> {
        Ok(SteadyModel::new(SeriesConfig::default(), self.solver(), DEFAULT_BC, QuadConfig::default())?)
    }

    fn to_json(&self) -> serde_json::Value {
        json!({ "ymin": self.ymin, "rel_tol": self.tol, "abs_tol": self.tol / 100.0 })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = LevelArg::Quick, env = "BS5_LEVEL")]
    pub level: LevelArg,
    #[arg(long, default_value_t = ValidateOptions::default().seed, env = "BS5_SEED")]
    pub seed: u64,
    /// Samples per k in the k-step check.
    #[arg(long, default_value_t = 1_000_000, env = "BS5_SAMPLES")]
    pub samples: usize,
    /// Samples in the stationary check.
    #[arg(long, default_value_t = 10_000_000, env = "BS5_STEADY_SAMPLES")]
    pub steady_samples: usize,
    #[arg(long, default_value_t = 100_000, env = "BS5_BURN_IN")]
    pub burn_in: u64,
    #[arg(long, default_value_t = 10, env = "BS5_THIN")]
    pub thin: u64,
    #[arg(long, default_value_t = replicas::DEFAULT_REPLICAS, env = "BS5_REPLICAS")]
    pub replicas: usize,
    /// Perturbs alpha(2,0,2) to exercise the failure path.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Evaluation points; an equally spaced grid on [0, 1] when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 101, env = "BS5_POINTS")]
    pub points: usize,
    /// Use the exact k-step polynomial instead of the limit.
    #[arg(long, env = "BS5_K")]
    pub k: Option<u32>,
    #[arg(long, default_value_t = 15, env = "BS5_KMAX")]
    pub kmax: u32,
    #[arg(long, value_enum, default_value_t = FormArg::Integrated, env = "BS5_FORM")]
    pub form: FormArg,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 5, env = "BS5_N_SPECIES")]
    pub n_species: usize,
    #[arg(long, default_value_t = 0, env = "BS5_SEED")]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000, env = "BS5_SAMPLES")]
    pub samples: usize,
    #[arg(long, default_value_t = 100_000, env = "BS5_BURN_IN")]
    pub burn_in: u64,
    #[arg(long, default_value_t = 10, env = "BS5_THIN")]
    pub thin: u64,
    #[arg(long, default_value_t = replicas::DEFAULT_REPLICAS, env = "BS5_REPLICAS")]
    pub replicas: usize,
    /// Record all sites at each sampling time.
    #[arg(long, env = "BS5_POOL_SITES")]
    pub pool_sites: bool,
    /// Sample after exactly this many steps from uniforms instead of the stationary law.
    #[arg(long, env = "BS5_KSTEP")]
    pub kstep: Option<u64>,
    /// Emit a histogram with this many bins instead of raw samples.
    #[arg(long, env = "BS5_BINS")]
    pub bins: Option<usize>,
    #[arg(long, default_value_t = 15, env = "BS5_KMAX")]
    pub kmax: u32,
}

#[derive(Debug, Subcommand)]
pub enum HypergOp {
    /// F_{n,m}(x) = 2F1((n + i sqrt2)/3, (n - i sqrt2)/3; m/3; x).
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        n: i32,
        #[arg(long, allow_hyphen_values = true)]
        m: i32,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        /// Derivative order.
        #[arg(long, default_value_t = 0)]
        order: u32,
    },
}

/// Primary output plus manifest of one command.
struct Output {
    body: String,
    manifest: Manifest,
    exit: i32,
}

fn check_k(k: u32, kmax: u32) -> Result<()> {
    if k < 1 || k > kmax {
        return Err(ToolError::Usage(format!("k must be in 1..={kmax}, got {k}")));
    }
    Ok(())
}

fn grid_or(xs: &[f64], points: usize) -> Vec<f64> {
    if !xs.is_empty() {
        return xs.to_vec();
    }
    let n = points.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn rows_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ToolError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| ToolError::Parse(e.to_string()))
}

fn rows_json(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
        .iter()
        .map(|r| {
            header
                .iter()
                .zip(r)
                .map(|(h, v)| {
                    let val = v.parse::<f64>().map(|f| json!(f)).unwrap_or_else(|_| json!(v));
                    (h.to_string(), val)
                })
                .collect()
        })
        .collect();
    Ok(serde_json::to_string_pretty(&objs)?)
}

fn emit_rows(format: Format, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    match format {
        Format::Csv => rows_csv(header, rows),
        Format::Json => rows_json(header, rows),
    }
}

fn cmd_coeffs(k: u32, kmax: u32, format: Format) -> Result<Output> {
    check_k(k, kmax)?;
    let table = coeffs::tables_up_to(k)?.pop().expect("k >= 1");
    let body = match format {
        Format::Csv => table_io::to_csv(&table)?,
        Format::Json => table_io::to_json(&table)? + "\n",
    };
    let mut m = Manifest::new("coeffs", json!({ "k": k, "kmax": kmax }));
    m.results = json!({ "nonzero_entries": table.nonzero_count() });
    Ok(Output { body, manifest: m, exit: EXIT_OK })
}

fn cmd_validate(a: &ValidateArgs, format: Format) -> Result<Output> {
    let opts = ValidateOptions {
        level: match a.level {
            LevelArg::Quick => Level::Quick,
            LevelArg::Full => Level::Full,
        },
        seed: a.seed,
        kstep_samples: a.samples,
        steady_samples: a.steady_samples,
        burn_in: a.burn_in,
        thinning: a.thin,
        replicas: a.replicas,
        fault: a.inject_fault.then_some(Fault::PerturbAlpha202),
    };
    let report = validate::run(&opts);
    let body = match format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => {
            let mut s = String::new();
            for c in &report.checks {
                s.push_str(&c.summary_line());
                s.push('\n');
                for d in &c.details {
                    s.push_str(&format!("    {} = {:e}", d.name, d.value));
                    if let Some(t) = d.tolerance {
                        s.push_str(&format!(" (tolerance {t:e})"));
                    }
                    if d.pass == Some(false) {
                        s.push_str(" FAIL");
                    }
                    s.push('\n');
                }
            }
            s.push_str("diagnostics:\n");
            for d in &report.notes {
                s.push_str(&format!(
                    "    {} = {:e}{}\n",
                    d.name,
                    d.value,
                    if d.pass == Some(false) { " FAIL" } else { "" }
                ));
            }
            s.push_str(if report.passed() { "result: PASS\n" } else { "result: FAIL\n" });
            s
        }
    };
    let mut m = Manifest::new("validate", serde_json::to_value(&opts)?);
    m.seeds.push(opts.seed);
    m.results = json!({
        "passed": report.passed(),
        "checks": report.checks.iter().map(|c| json!({"criterion": c.criterion, "status": c.status})).collect::<Vec<_>>(),
    });
    let exit = if report.passed() { EXIT_OK } else { EXIT_FAILURE };
    Ok(Output { body, manifest: m, exit })
}

fn cmd_figure(which: FigureKind, points: usize, model: &ModelArgs, format: Format) -> Result<Output> {
    let fig = match which {
        FigureKind::Margdens => Figure::MargDens,
        FigureKind::Cdfcompare => Figure::CdfCompare,
    };
    let curves = figures::figure_data(&model.build()?, fig, points)?;
    let header: Vec<&str> = curves.header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = curves.rows.iter().map(|r| r.iter().map(f64::to_string).collect()).collect();
    let body = emit_rows(format, &header, &rows)?;
    let m = Manifest::new(
        "figure-data",
        json!({ "which": format!("{which:?}").to_lowercase(), "points": points, "model": model.to_json() }),
    );
    Ok(Output { body, manifest: m, exit: EXIT_OK })
}

fn cmd_solve(points: usize, model: &ModelArgs, format: Format) -> Result<Output> {
    let h = Hypergeom::new(SeriesConfig::default())?;
    let sol = ode5::solve(&h, &model.solver(), DEFAULT_BC)?;
    let n = points.max(2);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let y = model.ymin + (1.0 - model.ymin) * i as f64 / (n - 1) as f64;
        let u = sol.state(y)?;
        rows.push(vec![y.to_string(), u[0].to_string(), u[1].to_string(), u[2].to_string()]);
    }
    let body = emit_rows(format, &["y", "B", "dB", "d2B"], &rows)?;
    let d = sol.diagnostics();
    let mut m =
        Manifest::new("solve", json!({ "points": points, "model": model.to_json(), "boundary_values": DEFAULT_BC }));
    m.results = json!({
        "accepted_steps": d.accepted_steps,
        "rejected_steps": d.rejected_steps,
        "rhs_evaluations": d.rhs_evaluations,
        "min_abs_c5": d.min_abs_c5,
        "min_abs_c5_at": d.min_abs_c5_at,
        "min_relative_c5": d.min_relative_c5,
        "c5_sign": d.c5_sign,
    });
    Ok(Output { body, manifest: m, exit: EXIT_OK })
}

fn cmd_curve(a: &CurveArgs, cdf: bool, format: Format) -> Result<Output> {
    let xs = grid_or(&a.x, a.points);
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(ToolError::Usage(format!("x must lie in [0, 1], got {x}")));
    }
    let name = if cdf { "cdf" } else { "marginal" };
    let col = if cdf { "cdf" } else { "pdf" };
    let mut rows = Vec::with_capacity(xs.len());
    let config;
    if let Some(k) = a.k {
        check_k(k, a.kmax)?;
        let table = coeffs::tables_up_to(k)?.pop().expect("k >= 1");
        let p = if cdf { coeffs::marginal_cdf_poly_k(&table) } else { coeffs::marginal_poly_k(&table) };
        for x in xs {
            rows.push(vec![x.to_string(), p.eval(x).to_string(), "false".into()]);
        }
        config = json!({ "k": k, "kmax": a.kmax });
    } else {
        let model = a.model.build()?;
        let form = a.form.into();
        for x in xs {
            let v = if cdf { model.marginal_cdf(x, form)? } else { model.marginal_pdf(x, form)? };
            rows.push(vec![x.to_string(), v.value.to_string(), v.extrapolated.to_string()]);
        }
        config = json!({ "form": format!("{:?}", a.form).to_lowercase(), "model": a.model.to_json() });
    }
    let body = emit_rows(format, &["x", col, "extrapolated"], &rows)?;
    Ok(Output { body, manifest: Manifest::new(name, config), exit: EXIT_OK })
}

fn cmd_simulate(a: &SimulateArgs, format: Format) -> Result<Output> {
    let cfg = SimConfig {
        n_species: a.n_species,
        seed: a.seed,
        burn_in: a.burn_in,
        n_samples: a.samples,
        thinning: a.thin,
        n_replicas: a.replicas,
        pool_sites: a.pool_sites,
    };
    let e = match a.kstep {
        Some(k) => replicas::run_kstep(&cfg, k)?,
        None => replicas::run_steady(&cfg)?,
    };
    let mut results = json!({ "n": e.len(), "mean": e.mean(), "variance": e.variance() });
    if a.n_species == 5 {
        match a.kstep {
            Some(0) => results["ks_uniform"] = json!(sim::ks_distance(&e, |x| x)),
            Some(k) if k <= u64::from(a.kmax) => {
                let t = coeffs::tables_up_to(k as u32)?.pop().expect("k >= 1");
                let p = coeffs::marginal_cdf_poly_k(&t).to_f64();
                results["ks_exact_kstep"] = json!(sim::ks_distance(&e, |x| p.eval(x)));
            }
            Some(_) => {}
            None => {
                let model = SteadyModel::default_model()?;
                let ks = sim::ks_distance(&e, |x| {
                    model.marginal_cdf(x, MarginalForm::Integrated).map(|f| f.value).unwrap_or(f64::NAN)
                });
                results["ks_steady"] = json!(ks);
            }
        }
        results["ks_threshold_99"] = json!(validate::ks_threshold(e.len()));
    }
    let body = match a.bins {
        Some(0) => return Err(ToolError::Usage("--bins must be positive".into())),
        Some(bins) => {
            let mut counts = vec![0usize; bins];
            for &s in e.samples() {
                counts[((s * bins as f64) as usize).min(bins - 1)] += 1;
            }
            let w = 1.0 / bins as f64;
            let rows: Vec<Vec<String>> = counts
                .iter()
                .enumerate()
                .map(|(i, &c)| {
                    let lo = i as f64 * w;
                    vec![
                        lo.to_string(),
                        (lo + w).to_string(),
                        c.to_string(),
                        (c as f64 / (e.len() as f64 * w)).to_string(),
                    ]
                })
                .collect();
            emit_rows(format, &["bin_lo", "bin_hi", "count", "density"], &rows)?
        }
        None => {
            let rows: Vec<Vec<String>> = e.samples().iter().map(|s| vec![s.to_string()]).collect();
            emit_rows(format, &["x"], &rows)?
        }
    };
    let mut m = Manifest::new(
        "simulate",
        json!({
            "n_species": cfg.n_species, "seed": cfg.seed, "burn_in": cfg.burn_in, "n_samples": cfg.n_samples,
            "thinning": cfg.thinning, "n_replicas": cfg.n_replicas, "pool_sites": cfg.pool_sites,
            "kstep": a.kstep, "bins": a.bins,
        }),
    );
    m.seeds.push(cfg.seed);
    m.results = results;
    Ok(Output { body, manifest: m, exit: EXIT_OK })
}

fn cmd_hyperg(op: &HypergOp, format: Format) -> Result<Output> {
    let HypergOp::Eval { n, m, x, order } = *op;
    let spec = FnmSpec::new(n, m)?;
    let v = hypergeom::f_nm_deriv(spec, x, order, &SeriesConfig::default())?;
    let body = match format {
        Format::Csv => format!("n,m,x,order,value\n{n},{m},{x},{order},{v}\n"),
        Format::Json => {
            serde_json::to_string_pretty(&json!({"n": n, "m": m, "x": x, "order": order, "value": v}))? + "\n"
        }
    };
    Ok(Output {
        body,
        manifest: Manifest::new("hyperg-eval", json!({"n": n, "m": m, "x": x, "order": order})),
        exit: EXIT_OK,
    })
}

fn dispatch(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Coeffs { k, kmax } => cmd_coeffs(*k, *kmax, cli.format),
        Command::Validate(a) => cmd_validate(a, cli.format),
        Command::FigureData { which, points, model } => cmd_figure(*which, *points, model, cli.format),
        Command::Solve { points, model } => cmd_solve(*points, model, cli.format),
        Command::Marginal(a) => cmd_curve(a, false, cli.format),
        Command::Cdf(a) => cmd_curve(a, true, cli.format),
        Command::Simulate(a) => cmd_simulate(a, cli.format),
        Command::Hyperg { op } => cmd_hyperg(op, cli.format),
    }
}

fn write_outputs(cli: &Cli, out: &Output, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, &out.body)?,
        None => stdout.write_all(out.body.as_bytes())?,
    }
    let path: Option<PathBuf> = cli.manifest.clone().or_else(|| cli.out.as_deref().map(manifest::manifest_path));
    match path {
        Some(p) => out.manifest.write(Path::new(&p))?,
        None => writeln!(stderr, "{}", out.manifest.to_json()?)?,
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = dispatch(&cli).and_then(|out| {
        write_outputs(&cli, &out, stdout, stderr)?;
        Ok(out.exit)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                ToolError::Usage(_)
                | ToolError::Core(bs5_core::Error::InvalidParameter(_))
                | ToolError::Core(bs5_core::Error::OutOfDomain { .. }) => EXIT_USAGE,
                _ => EXIT_FAILURE,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("bs5").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn coeffs_k1_has_three_rows() {
        let (code, out, err) = run_capture(&["coeffs", "--k", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 4);
        let m: serde_json::Value = serde_json::from_str(&err).unwrap();
        assert_eq!(m["command"], "coeffs");
    }

    #[test]
    fn coeffs_k3_contains_known_row() {
        let (code, out, _) = run_capture(&["coeffs", "--k", "3"]);
        assert_eq!(code, 0);
        assert!(out.lines().any(|l| l == "9,0,487/1260"));
    }

    #[test]
    fn coeffs_json_round_trips() {
        let (code, out, _) = run_capture(&["--format", "json", "coeffs", "--k", "2"]);
        assert_eq!(code, 0);
        let t = table_io::from_json(&out).unwrap();
        assert_eq!(t, coeffs::tables_up_to(2).unwrap()[1]);
    }

    #[test]
    fn invalid_k_is_usage_error() {
        assert_eq!(run_capture(&["coeffs", "--k", "0"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["coeffs", "--k", "16"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["coeffs", "--k", "16", "--kmax", "16"]).0, EXIT_OK);
        assert_eq!(run_capture(&["coeffs"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["no-such-command"]).0, EXIT_USAGE);
    }

    #[test]
    fn writes_output_and_manifest_files() {
        let dir = std::env::temp_dir().join(format!("bs5-cli-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("k2.csv");
        let (code, stdout, _) = run_capture(&["coeffs", "--k", "2", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(stdout.is_empty());
        assert!(std::fs::read_to_string(&out).unwrap().contains("-19/3"));
        let m: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(manifest::manifest_path(&out)).unwrap()).unwrap();
        assert_eq!(m["config"]["k"], 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn marginal_and_cdf_at_points() {
        let (code, out, _) = run_capture(&["marginal", "--x", "0,0.5"]);
        assert_eq!(code, 0);
        let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
        assert!((row[1].parse::<f64>().unwrap() - 0.6).abs() < 1e-10);
        let (code, out, _) = run_capture(&["cdf", "--k", "1", "--x", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().nth(1).unwrap(), "1,1,false");
        assert_eq!(run_capture(&["cdf", "--x", "1.5"]).0, EXIT_USAGE);
    }

    #[test]
    fn hyperg_eval_at_zero() {
        let (code, out, _) = run_capture(&["hyperg", "eval", "--n", "2", "--m", "1", "--x", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().nth(1).unwrap(), "2,1,0,0,1");
        let (code, out, _) = run_capture(&["hyperg", "eval", "--n", "2", "--m", "1", "--x", "-0.5"]);
        assert_eq!(code, 0);
        let v: f64 = out.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 0.3679481056816759).abs() < 1e-14);
        assert_eq!(run_capture(&["hyperg", "eval", "--n", "2", "--m", "0", "--x", "0"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["hyperg", "eval", "--n", "2", "--m", "1", "--x", "1.5"]).0, EXIT_USAGE);
    }

    #[test]
    fn simulate_is_seed_deterministic() {
        let args = ["simulate", "--samples", "200", "--burn-in", "100", "--seed", "9", "--replicas", "2"];
        let (c1, a, ma) = run_capture(&args);
        let (c2, b, mb) = run_capture(&args);
        assert_eq!((c1, c2), (0, 0));
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 201);
        let ma: serde_json::Value = serde_json::from_str(&ma).unwrap();
        let mb: serde_json::Value = serde_json::from_str(&mb).unwrap();
        assert_eq!(ma["results"], mb["results"]);
        assert!(ma["results"]["ks_steady"].as_f64().unwrap() < 0.2);
    }

    #[test]
    fn simulate_histogram() {
        let (code, out, _) = run_capture(&["simulate", "--samples", "1000", "--kstep", "0", "--bins", "4"]);
        assert_eq!(code, 0);
        let total: usize = out.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn solve_emits_boundary_row() {
        let (code, out, err) = run_capture(&["solve", "--points", "3"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().last().unwrap(), "1,0.2,0,-0.2");
        let m: serde_json::Value = serde_json::from_str(&err).unwrap();
        assert!(m["results"]["accepted_steps"].as_u64().unwrap() > 0);
    }

    #[test]
    fn figure_data_margdens_header() {
        let (code, out, _) = run_capture(&["figure-data", "margdens", "--points", "3"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().next().unwrap(), "x,k0,k1,k2,k3,k4,k5,k6,limit");
    }

    #[test]
    fn fault_injection_fails_table_check() {
        let (code, out, _) = run_capture(&["validate", "--inject-fault"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(out.lines().any(|l| l.starts_with("criterion 1 table_reproduction: FAIL")));
    }
}
