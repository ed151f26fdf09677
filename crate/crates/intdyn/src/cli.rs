//! Command-line interface: scenario loading, the five subcommands, and the
//! trace/metrics file formats.
//!
//! All numeric output is written with 17 significant digits so every value
//! round-trips exactly through the text form. Exit codes: 0 on success, 2 for
//! configuration and validation problems, 3 for numerical failures.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use nalgebra::Complex;

use crate::analysis::NormReport;
use crate::config::{GainsBlock, Scenario};
use crate::error::{Error, Result};
use crate::generator::{build_a_s, build_augmented, AugmentedGenerator};
use crate::model::{GainSet, ValidationReport};
use crate::oracle::{certify_trace_multi, solve_sylvester, SylvesterSolution};
use crate::sim::{simulate, SimTrace};
use crate::synthesis::{choose_l1, synthesize_l23};

/// Scenarios compiled into the binary, addressable by name.
const BUNDLED: &[(&str, &str)] = &[
    ("example1", include_str!("../scenarios/example1.toml")),
    (
        "example1_noise",
        include_str!("../scenarios/example1_noise.toml"),
    ),
    ("example2", include_str!("../scenarios/example2.toml")),
];

#[derive(Parser)]
#[command(
    name = "intdyn",
    version,
    about = "Generator toolkit for bounded internal dynamics of unstable linear systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the closed-loop generator; write trace.csv and metrics.txt
    Simulate {
        /// Scenario file path, or a bundled name (example1, example1_noise, example2)
        scenario: String,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the scenario's time step
        #[arg(long)]
        dt: Option<f64>,
        /// Override the scenario's horizon
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Search for row gains meeting the scenario's budgets; write a gains fragment
    Synthesize {
        /// Scenario file path, or a bundled name
        scenario: String,
        /// Output TOML file for the [gains] fragment
        #[arg(long, default_value = "gains.toml")]
        out: PathBuf,
        /// Override the scenario's search seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's evaluation budget
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Check the configured gains against the synthesis budgets and region
    VerifyGains {
        /// Scenario file path, or a bundled name
        scenario: String,
        /// Output directory for metrics.txt
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Report closed-loop norms and poles for the configured gains
    Norms {
        /// Scenario file path, or a bundled name
        scenario: String,
        /// Output directory for metrics.txt
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Solve the forced-equilibrium equation exactly; optionally certify a trace
    Oracle {
        /// Scenario file path, or a bundled name
        scenario: String,
        /// Output directory for metrics.txt
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Trace CSV (from `simulate`) to certify against the exact solution
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Fraction of the horizon to skip before comparing
        #[arg(long, default_value_t = 0.5)]
        settle: f64,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            scenario,
            out,
            dt,
            horizon,
        } => cmd_simulate(&scenario, &out, dt, horizon),
        Command::Synthesize {
            scenario,
            out,
            seed,
            budget,
        } => cmd_synthesize(&scenario, &out, seed, budget),
        Command::VerifyGains { scenario, out } => cmd_verify_gains(&scenario, &out),
        Command::Norms { scenario, out } => cmd_norms(&scenario, &out),
        Command::Oracle {
            scenario,
            out,
            trace,
            settle,
        } => cmd_oracle(&scenario, &out, trace.as_deref(), settle),
    }
}

/// Load a scenario from a path, falling back to the bundled set by name.
fn load_scenario(source: &str) -> Result<Scenario> {
    let path = Path::new(source);
    if path.exists() {
        return Scenario::load(path);
    }
    if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == source) {
        return Scenario::parse(text);
    }
    let names: Vec<&str> = BUNDLED.iter().map(|(name, _)| *name).collect();
    Err(Error::Config(format!(
        "scenario \"{source}\" is neither a file nor a bundled name (bundled: {})",
        names.join(", ")
    )))
}

/// Run structural validation; warnings go to stderr, errors abort.
fn validate(scenario: &Scenario) -> Result<()> {
    let report: ValidationReport = crate::model::validate_scenario(
        &scenario.exosystems,
        &scenario.plant,
        scenario.gains.as_ref(),
    );
    if !report.is_well_formed() {
        return Err(Error::Validation(report.to_string().trim_end().to_string()));
    }
    if !report.is_clean() {
        eprint!("{report}");
    }
    Ok(())
}

fn require_gains(scenario: &Scenario) -> Result<&GainSet> {
    scenario.gains.as_ref().ok_or_else(|| {
        Error::Config("this command needs a [gains] block in the scenario".to_string())
    })
}

fn build_generator(scenario: &Scenario, gains: &GainSet) -> Result<AugmentedGenerator> {
    build_augmented(
        &scenario.exosystems[0].s,
        &scenario.plant.frozen_a,
        gains,
        &scenario.plant.n_list,
    )
}

// ---------------------------------------------------------------------------
// Metrics and trace files
// ---------------------------------------------------------------------------

/// Full-precision float form: 17 significant digits, round-trip exact.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Default)]
struct Metrics {
    lines: Vec<(String, String)>,
}

impl Metrics {
    fn f64(&mut self, key: &str, v: f64) {
        self.lines.push((key.to_string(), fmt_f64(v)));
    }
    fn usize(&mut self, key: &str, v: usize) {
        self.lines.push((key.to_string(), v.to_string()));
    }
    fn bool(&mut self, key: &str, v: bool) {
        self.lines.push((key.to_string(), v.to_string()));
    }
    fn poles(&mut self, poles: &[Complex<f64>]) {
        for (k, z) in poles.iter().enumerate() {
            self.f64(&format!("pole_{k}_re"), z.re);
            self.f64(&format!("pole_{k}_im"), z.im);
        }
    }
    fn norm_report(&mut self, report: &NormReport) {
        self.f64("h2", report.h2);
        self.f64("hinf", report.hinf);
        self.f64("hinf_lo", report.hinf_bracket.0);
        self.f64("hinf_hi", report.hinf_bracket.1);
        self.bool("stable", report.is_stable());
        self.bool("region_ok", report.region_ok);
        self.poles(&report.poles);
    }
    fn render(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.lines {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
    /// Print to stdout and write metrics.txt under `dir`.
    fn emit(&self, dir: &Path) -> Result<()> {
        let text = self.render();
        print!("{text}");
        fs::create_dir_all(dir)?;
        fs::write(dir.join("metrics.txt"), text)?;
        Ok(())
    }
}

/// Column layout of a trace CSV: time, exosystem states stacked across
/// channels, internal-model state, tracked dynamics, coupling state,
/// residual, applied forcing.
fn trace_header(trace: &SimTrace) -> String {
    let mut cols = vec!["t".to_string()];
    let total_w: usize = trace.w.iter().map(|ch| ch[0].len()).sum();
    for i in 1..=total_w {
        cols.push(format!("w{i}"));
    }
    for i in 1..=trace.m {
        cols.push(format!("v{i}"));
    }
    for i in 1..=trace.n {
        cols.push(format!("eta_hat{i}"));
    }
    cols.push("e".to_string());
    for i in 1..=trace.n {
        cols.push(format!("y{i}"));
    }
    for i in 1..=trace.xi[0].len() {
        cols.push(format!("xi{i}"));
    }
    cols.join(",")
}

fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "{}", trace_header(trace))?;
    let order = trace.m + trace.n + 1;
    for step in 0..trace.times.len() {
        let mut row = String::new();
        row.push_str(&fmt_f64(trace.times[step]));
        for ch in &trace.w {
            for &value in ch[step].iter() {
                row.push(',');
                row.push_str(&fmt_f64(value));
            }
        }
        let x = &trace.x[step];
        debug_assert_eq!(x.len(), order);
        for &value in x.iter() {
            row.push(',');
            row.push_str(&fmt_f64(value));
        }
        for &value in trace.y[step].iter() {
            row.push(',');
            row.push_str(&fmt_f64(value));
        }
        for &value in &trace.xi[step] {
            row.push(',');
            row.push_str(&fmt_f64(value));
        }
        writeln!(out, "{row}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read back the columns the oracle needs (t, eta_hat*) from a trace CSV.
fn read_trace_csv(path: &Path, m: usize, n: usize) -> Result<SimTrace> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| {
        Error::Validation(format!("trace file {} is empty", path.display()))
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let col_index = |name: &str| -> Result<usize> {
        columns
            .iter()
            .position(|&c| c == name)
            .ok_or_else(|| Error::Validation(format!("trace file lacks a `{name}` column")))
    };
    let t_col = col_index("t")?;
    let eta_cols: Vec<usize> = (1..=n)
        .map(|i| col_index(&format!("eta_hat{i}")))
        .collect::<Result<_>>()?;

    let mut times = Vec::new();
    let mut eta_hat = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |col: usize| -> Result<f64> {
            fields
                .get(col)
                .and_then(|f| f.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Validation(format!(
                        "trace line {}: column {} is not a number",
                        lineno + 2,
                        col + 1
                    ))
                })
        };
        times.push(parse(t_col)?);
        let mut eta = nalgebra::DVector::zeros(n);
        for (i, &col) in eta_cols.iter().enumerate() {
            eta[i] = parse(col)?;
        }
        eta_hat.push(eta);
    }
    if times.len() < 2 {
        return Err(Error::InsufficientWindow(
            "trace has fewer than two samples".to_string(),
        ));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::Validation(
            "trace time column is not strictly increasing".to_string(),
        ));
    }
    for (i, pair) in times.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Validation(format!(
                "trace time steps are not uniform near line {}",
                i + 2
            )));
        }
    }
    Ok(SimTrace {
        times,
        w: Vec::new(),
        x: Vec::new(),
        eta_hat,
        y: Vec::new(),
        xi: Vec::new(),
        dt,
        tail_bound: 0.0,
        max_state: 0.0,
        m,
        n,
    })
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_simulate(
    source: &str,
    out: &Path,
    dt_flag: Option<f64>,
    horizon_flag: Option<f64>,
) -> Result<()> {
    let scenario = load_scenario(source)?;
    validate(&scenario)?;
    let gains = require_gains(&scenario)?;
    let dt = dt_flag
        .or(scenario.sim.as_ref().map(|s| s.dt))
        .ok_or_else(|| {
            Error::Config("no time step: add a [sim] block or pass --dt".to_string())
        })?;
    let horizon = horizon_flag
        .or(scenario.sim.as_ref().map(|s| s.horizon))
        .ok_or_else(|| {
            Error::Config("no horizon: add a [sim] block or pass --horizon".to_string())
    })?;
    let noise = scenario.noise_spec()?;
    let gen = build_generator(&scenario, gains)?;
    let trace = simulate(
        &gen,
        &scenario.exosystems,
        &scenario.plant,
        horizon,
        dt,
        &noise,
    )?;

    fs::create_dir_all(out)?;
    write_trace_csv(&out.join("trace.csv"), &trace)?;
    let mut metrics = Metrics::default();
    metrics.f64("dt", trace.dt);
    metrics.f64("horizon", horizon);
    metrics.usize("samples", trace.times.len());
    metrics.f64("tail_bound", trace.tail_bound);
    metrics.f64("max_state", trace.max_state);
    metrics.emit(out)
}

fn cmd_synthesize(
    source: &str,
    out: &Path,
    seed: Option<u64>,
    budget: Option<usize>,
) -> Result<()> {
    let scenario = load_scenario(source)?;
    validate(&scenario)?;
    let mut spec = scenario.synthesis_spec()?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(budget) = budget {
        spec.budget = budget;
        spec.validate()?;
    }
    let exo0 = &scenario.exosystems[0];
    let a_s = build_a_s(&exo0.s, &scenario.plant.frozen_a);
    let l1 = choose_l1(&a_s)?;
    // A zero-gain assembly provides the augmented forcing/read-out blocks.
    let (m, n) = (exo0.dim(), scenario.plant.n());
    let zero = GainSet {
        l11: nalgebra::DVector::zeros(m),
        l12: nalgebra::DVector::zeros(n),
        l21: nalgebra::DVector::zeros(m),
        l22: nalgebra::DVector::zeros(n),
        l3: 0.0,
    };
    let skeleton = build_generator(&scenario, &zero)?;
    let result = synthesize_l23(&a_s, &l1, &skeleton.n_cl_list, &skeleton.c_cl, &spec)?;

    let fragment = GainsFragment {
        gains: GainsBlock {
            l11: result.gains.l11.iter().cloned().collect(),
            l12: result.gains.l12.iter().cloned().collect(),
            l21: result.gains.l21.iter().cloned().collect(),
            l22: result.gains.l22.iter().cloned().collect(),
            l3: result.gains.l3,
        },
    };
    let text = toml::to_string(&fragment).map_err(|e| Error::Config(e.to_string()))?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, text)?;

    let mut metrics = Metrics::default();
    metrics.bool("feasible", result.feasible);
    metrics.f64("objective", result.objective);
    metrics.usize("iterations", result.iterations);
    metrics.norm_report(&result.achieved);
    print!("{}", metrics.render());
    Ok(())
}

#[derive(serde::Serialize)]
struct GainsFragment {
    gains: GainsBlock,
}

fn cmd_verify_gains(source: &str, out: &Path) -> Result<()> {
    let scenario = load_scenario(source)?;
    validate(&scenario)?;
    let gains = require_gains(&scenario)?;
    let spec = scenario.synthesis_spec()?;
    let report =
        crate::synthesis::verify_gains(&scenario.exosystems, &scenario.plant, gains, &spec)?;
    let within_hinf = report.hinf <= spec.gamma0;
    let within_h2 = report.h2 <= spec.nu0;
    let mut metrics = Metrics::default();
    metrics.norm_report(&report);
    metrics.f64("gamma0", spec.gamma0);
    metrics.f64("nu0", spec.nu0);
    metrics.bool("within_hinf_budget", within_hinf);
    metrics.bool("within_h2_budget", within_h2);
    metrics.bool(
        "feasible",
        report.is_stable() && report.region_ok && within_hinf && within_h2,
    );
    metrics.emit(out)
}

fn cmd_norms(source: &str, out: &Path) -> Result<()> {
    let scenario = load_scenario(source)?;
    validate(&scenario)?;
    let gains = require_gains(&scenario)?;
    let gen = build_generator(&scenario, gains)?;
    let systems = crate::generator::error_systems(&gen);
    let report = crate::analysis::norm_report(&systems, scenario.region.as_ref(), 1e-6)?;
    let mut metrics = Metrics::default();
    metrics.norm_report(&report);
    metrics.emit(out)
}

fn cmd_oracle(source: &str, out: &Path, trace: Option<&Path>, settle: f64) -> Result<()> {
    let scenario = load_scenario(source)?;
    validate(&scenario)?;
    let frozen = &scenario.plant.frozen_a;
    let mut sols: Vec<SylvesterSolution> = Vec::new();
    let mut metrics = Metrics::default();
    for (k, exo) in scenario.exosystems.iter().enumerate() {
        let sol = solve_sylvester(&exo.s, frozen, &scenario.plant.n_list[k], &exo.e)?;
        let tag = k + 1;
        metrics.f64(&format!("condition_{tag}"), sol.condition_estimate);
        metrics.f64(&format!("residual_{tag}"), sol.residual);
        for i in 0..sol.pi.nrows() {
            for j in 0..sol.pi.ncols() {
                metrics.f64(&format!("pi_{tag}_{}_{}", i + 1, j + 1), sol.pi[(i, j)]);
            }
        }
        sols.push(sol);
    }
    if let Some(trace_path) = trace {
        let trace = read_trace_csv(
            trace_path,
            scenario.exosystems[0].dim(),
            scenario.plant.n(),
        )?;
        let sup = certify_trace_multi(&trace, &sols, &scenario.exosystems, settle)?;
        metrics.f64("sup_iid_error", sup);
        metrics.f64("settle_fraction", settle);
    }
    metrics.emit(out)
}
