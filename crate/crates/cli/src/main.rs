use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dirac_search::clifford::RepKind;
use dirac_search::critical::{Branch, CriticalSolver, ScanRange, Source};
use dirac_search::dynamics::{EvolveOptions, Method};
use dirac_search::experiment::{
    run_experiment, run_prediction, scaling_study, ExperimentConfig, Observable, OmegaChoice,
};
use dirac_search::hamiltonian::SignConvention;
use dirac_search::lattice::LatticeConfig;
use dirac_search::quadrature::QmcConfig;
use dirac_search::validate::{self, Level, ValidateOptions};

mod output;

use output::{num, CliError, Sink, Table};

/// Environment variable overriding the worker-thread count.
const THREADS_ENV: &str = "DIRAC_SEARCH_THREADS";

#[derive(Parser, Debug)]
#[command(name = "dirac-search", version, about = "Quantum-walk search with a lattice Dirac Hamiltonian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the critical curve (ω, γ) = (r u(r), u(r)).
    Critical(CriticalArgs),
    /// Solve criticality and predict E±, R, T and the amplitude.
    Predict(PredictArgs),
    /// Run the search dynamics and compare with the prediction.
    Evolve(EvolveArgs),
    /// Fit an observable's power law in N over several sides.
    Scaling(ScalingArgs),
    /// Run the self-check suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SourceArg {
    Lattice,
    Continuum,
}

#[derive(Args, Debug, Clone, Serialize)]
struct OutputArgs {
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CriticalArgs {
    /// Dimensions, comma separated; several dimensions write one file each.
    #[arg(long, value_delimiter = ',', required = true)]
    dim: Vec<usize>,
    #[arg(long, value_enum, default_value = "continuum")]
    source: SourceArg,
    /// Side length for `--source lattice`.
    #[arg(long)]
    side: Option<usize>,
    #[arg(long, default_value_t = 1e-3)]
    r_min: f64,
    #[arg(long, default_value_t = 1e2)]
    r_max: f64,
    #[arg(long, default_value_t = 121)]
    points: usize,
    /// Seed of the quasi-Monte Carlo shift (d >= 4).
    #[arg(long, default_value_t = QmcConfig::default().seed)]
    seed: u64,
    /// Quasi-Monte Carlo sample count (d >= 4).
    #[arg(long, default_value_t = QmcConfig::default().points)]
    qmc_points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct CriticalityArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    side: usize,
    /// Absolute ω; overrides `--fraction`.
    #[arg(long)]
    omega: Option<f64>,
    /// ω as a fraction of the lattice's ω*.
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    #[arg(long, default_value = "upper", value_parser = parse_branch)]
    branch: Branch,
}

#[derive(Args, Debug, Clone, Serialize)]
struct PredictArgs {
    #[command(flatten)]
    crit: CriticalityArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DynamicsArgs {
    #[arg(long, default_value = "reduced", value_parser = parse_rep)]
    rep: RepKind,
    /// Propagation tolerance (2-norm).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value = "auto", value_parser = parse_method)]
    method: Method,
    /// Number of grid points over [0, span · T].
    #[arg(long, default_value_t = 64)]
    grid_points: usize,
    #[arg(long, default_value_t = 2.0)]
    grid_span: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct EvolveArgs {
    #[command(flatten)]
    crit: CriticalityArgs,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    /// Output prefix: writes `<out>.csv` (series) and `<out>.json` (summary).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// What to print on stdout when `--out` is omitted.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScalingArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    sides: Vec<usize>,
    #[arg(long, default_value = "t_star", value_parser = parse_observable)]
    observable: Observable,
    /// Absolute ω; overrides `--fraction`.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    #[arg(long, default_value = "upper", value_parser = parse_branch)]
    branch: Branch,
    #[command(flatten)]
    dynamics: DynamicsArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SignArg {
    Standard,
    Literal,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ValidateArgs {
    #[arg(long, default_value = "fast", value_parser = parse_level)]
    level: Level,
    /// Replace every upper-bound tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Sign of the β L term in the densely checked Hamiltonians.
    #[arg(long, value_enum, default_value = "standard")]
    sign: SignArg,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    s.parse().map_err(|e: dirac_search::Error| e.to_string())
}

fn parse_rep(s: &str) -> Result<RepKind, String> {
    s.parse().map_err(|e: dirac_search::Error| e.to_string())
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse().map_err(|e: dirac_search::Error| e.to_string())
}

fn parse_observable(s: &str) -> Result<Observable, String> {
    s.parse().map_err(|e: dirac_search::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "auto" => Ok(Method::Auto),
        "dense" => Ok(Method::Dense),
        "chebyshev" => Ok(Method::Chebyshev),
        other => Err(format!("unknown method '{other}'")),
    }
}

/// Metadata stamped into every output.
#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    result: R,
}

fn envelope<'a, C: Serialize, R: Serialize>(command: &'a str, config: &'a C, result: R) -> Envelope<'a, C, R> {
    Envelope {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        result,
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

impl CriticalityArgs {
    fn validate(&self) -> Result<(), CliError> {
        LatticeConfig::new(self.dim, self.side)?;
        match self.omega {
            Some(w) => check_positive("omega", w),
            None if self.fraction > 0.0 && self.fraction < 1.0 => Ok(()),
            None => Err(usage(format!("--fraction must lie in (0, 1), got {}", self.fraction))),
        }
    }

    fn omega_choice(&self) -> OmegaChoice {
        match self.omega {
            Some(omega) => OmegaChoice::Fixed {
                omega,
                branch: self.branch,
            },
            None => OmegaChoice::Fraction {
                fraction: self.fraction,
                branch: self.branch,
            },
        }
    }
}

impl DynamicsArgs {
    fn validate(&self) -> Result<(), CliError> {
        let (lo, hi) = dirac_search::dynamics::TOL_RANGE;
        if !(self.tol >= lo && self.tol <= hi) {
            return Err(usage(format!("--tol must lie in [{lo:e}, {hi:e}], got {:e}", self.tol)));
        }
        if self.grid_points == 0 {
            return Err(usage("--grid-points must be at least 1"));
        }
        check_positive("grid-span", self.grid_span)
    }

    fn evolve_options(&self) -> EvolveOptions {
        EvolveOptions {
            tol: self.tol,
            method: self.method,
            ..Default::default()
        }
    }
}

fn cmd_critical(args: &CriticalArgs) -> Result<(), CliError> {
    if !(args.r_min > 0.0 && args.r_max > args.r_min && args.r_max.is_finite()) {
        return Err(usage(format!(
            "empty or invalid ratio range [{}, {}]",
            args.r_min, args.r_max
        )));
    }
    if args.points < 3 {
        return Err(usage("--points must be at least 3"));
    }
    let source = match (args.source, args.side) {
        (SourceArg::Lattice, Some(side)) => Source::Lattice { side },
        (SourceArg::Lattice, None) => return Err(usage("--source lattice needs --side")),
        (SourceArg::Continuum, _) => Source::Continuum,
    };
    for &d in &args.dim {
        if !(1..=dirac_search::lattice::MAX_DIM).contains(&d) {
            return Err(dirac_search::Error::Dimension(d).into());
        }
        if let Source::Lattice { side } = source {
            LatticeConfig::new(d, side)?;
        }
    }
    if args.qmc_points == 0 {
        return Err(usage("--qmc-points must be positive"));
    }
    let format = args.output.format.unwrap_or(Format::Csv);
    let range = ScanRange {
        r_min: args.r_min,
        r_max: args.r_max,
        points: args.points,
    };
    let qmc = QmcConfig {
        points: args.qmc_points,
        seed: args.seed,
    };
    for &d in &args.dim {
        let solver = CriticalSolver::with_options(d, source, range, qmc)?;
        let curve = solver.curve(&range.ratios())?;
        let ext = if format == Format::Csv { "csv" } else { "json" };
        let sink = Sink::for_dim(&args.output.out, d, args.dim.len() > 1, ext);
        #[derive(Serialize)]
        struct CurveSummary {
            d: usize,
            omega_star: f64,
            fold_ratio: f64,
            fold_gamma: f64,
            interior_maxima: usize,
            r: Vec<f64>,
            omega: Vec<f64>,
            gamma: Vec<f64>,
        }
        match format {
            Format::Csv => {
                let mut t = Table::new(&["r", "omega", "gamma", "u"]);
                for p in &curve {
                    t.row(vec![num(p.ratio), num(p.omega), num(p.gamma), num(p.gamma)]);
                }
                let meta = serde_json::json!({
                    "d": d,
                    "omega_star": solver.omega_star(),
                    "fold_ratio": solver.fold().ratio,
                });
                sink.write(&t.render(&envelope("critical", args, meta))?)?;
            }
            Format::Json => {
                let summary = CurveSummary {
                    d,
                    omega_star: solver.omega_star(),
                    fold_ratio: solver.fold().ratio,
                    fold_gamma: solver.fold().gamma,
                    interior_maxima: solver.interior_maxima(),
                    r: curve.iter().map(|p| p.ratio).collect(),
                    omega: curve.iter().map(|p| p.omega).collect(),
                    gamma: curve.iter().map(|p| p.gamma).collect(),
                };
                sink.write(&output::json(&envelope("critical", args, summary))?)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionOut {
    omega: f64,
    gamma: f64,
    omega_star: f64,
    n_sites: usize,
    #[serde(rename = "E_plus")]
    e_plus: f64,
    #[serde(rename = "E_minus")]
    e_minus: f64,
    #[serde(rename = "V0")]
    v0: f64,
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "R_minus")]
    r_minus: f64,
    #[serde(rename = "T")]
    t: f64,
    amplitude: f64,
    boosted_time: f64,
    eigenvalue_ratio: f64,
    weight_ratio: f64,
}

impl From<&dirac_search::experiment::PredictionRecord> for PredictionOut {
    fn from(r: &dirac_search::experiment::PredictionRecord) -> Self {
        let p = &r.prediction;
        Self {
            omega: r.critical.omega,
            gamma: r.critical.gamma,
            omega_star: r.omega_star,
            n_sites: r.n_sites,
            e_plus: p.e_plus,
            e_minus: p.e_minus,
            v0: p.v0,
            r: p.r,
            r_minus: p.r_minus,
            t: p.t,
            amplitude: p.amplitude,
            boosted_time: p.boosted_time,
            eigenvalue_ratio: r.eigenvalue_ratio,
            weight_ratio: r.weight_ratio,
        }
    }
}

const PREDICTION_COLUMNS: [&str; 14] = [
    "omega",
    "gamma",
    "omega_star",
    "n_sites",
    "E_plus",
    "E_minus",
    "V0",
    "R",
    "R_minus",
    "T",
    "amplitude",
    "boosted_time",
    "eigenvalue_ratio",
    "weight_ratio",
];

fn prediction_row(p: &PredictionOut) -> Vec<String> {
    vec![
        num(p.omega),
        num(p.gamma),
        num(p.omega_star),
        p.n_sites.to_string(),
        num(p.e_plus),
        num(p.e_minus),
        num(p.v0),
        num(p.r),
        num(p.r_minus),
        num(p.t),
        num(p.amplitude),
        num(p.boosted_time),
        num(p.eigenvalue_ratio),
        num(p.weight_ratio),
    ]
}

fn cmd_predict(args: &PredictArgs) -> Result<(), CliError> {
    args.crit.validate()?;
    let cfg = ExperimentConfig::new(args.crit.dim, args.crit.side).with_omega(args.crit.omega_choice());
    let rec = run_prediction(&cfg)?;
    let out = PredictionOut::from(&rec);
    let sink = Sink::path(args.output.out.clone());
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => sink.write(&output::json(&envelope("predict", args, &out))?),
        Format::Csv => {
            let mut t = Table::new(&PREDICTION_COLUMNS);
            t.row(prediction_row(&out));
            sink.write(&t.render(&envelope("predict", args, ()))?)
        }
    }
}

fn cmd_evolve(args: &EvolveArgs) -> Result<(), CliError> {
    args.crit.validate()?;
    args.dynamics.validate()?;
    let mut cfg = ExperimentConfig::new(args.crit.dim, args.crit.side)
        .with_rep(args.dynamics.rep)
        .with_omega(args.crit.omega_choice())
        .with_evolve(args.dynamics.evolve_options());
    cfg.grid_points = args.dynamics.grid_points;
    cfg.grid_span = args.dynamics.grid_span;
    let outcome = run_experiment(&cfg)?;
    let evo = &outcome.evolution;
    let mut series = Table::new(&["t", "p_marked", "p_eta_marked"]);
    for i in 0..evo.times.len() {
        series.row(vec![num(evo.times[i]), num(evo.p_marked[i]), num(evo.p_eta_marked[i])]);
    }
    #[derive(Serialize)]
    struct Summary {
        t_star: f64,
        p_star: f64,
        norm_drift: f64,
        dense: bool,
        prediction: PredictionOut,
        p_star_over_2r: f64,
        t_star_over_t: f64,
    }
    let summary = Summary {
        t_star: evo.t_star,
        p_star: evo.p_star,
        norm_drift: evo.norm_drift,
        dense: evo.dense,
        prediction: PredictionOut::from(&outcome.record),
        p_star_over_2r: outcome.p_ratio,
        t_star_over_t: outcome.t_ratio,
    };
    let series_text = series.render(&envelope("evolve", args, ()))?;
    let summary_text = output::json(&envelope("evolve", args, &summary))?;
    match &args.out {
        Some(prefix) => {
            Sink::path(Some(output::with_suffix(prefix, "csv"))).write(&series_text)?;
            Sink::path(Some(output::with_suffix(prefix, "json"))).write(&summary_text)
        }
        None => Sink::path(None).write(match args.format {
            Format::Csv => &series_text,
            Format::Json => &summary_text,
        }),
    }
}

fn cmd_scaling(args: &ScalingArgs) -> Result<(), CliError> {
    if args.sides.len() < 3 {
        return Err(usage("--sides needs at least three values"));
    }
    for &side in &args.sides {
        LatticeConfig::new(args.dim, side)?;
    }
    args.dynamics.validate()?;
    let omega = match args.omega {
        Some(omega) => {
            check_positive("omega", omega)?;
            OmegaChoice::Fixed {
                omega,
                branch: args.branch,
            }
        }
        None if args.fraction > 0.0 && args.fraction < 1.0 => OmegaChoice::Fraction {
            fraction: args.fraction,
            branch: args.branch,
        },
        None => return Err(usage(format!("--fraction must lie in (0, 1), got {}", args.fraction))),
    };
    let mut base = ExperimentConfig::new(args.dim, args.sides[0])
        .with_rep(args.dynamics.rep)
        .with_omega(omega)
        .with_evolve(args.dynamics.evolve_options());
    base.grid_points = args.dynamics.grid_points;
    base.grid_span = args.dynamics.grid_span;
    let study = scaling_study(&base, &args.sides, args.observable)?;
    let sink = Sink::path(args.output.out.clone());
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                side: usize,
                n_sites: usize,
                value: f64,
                prediction: PredictionOut,
                t_star: Option<f64>,
                p_star: Option<f64>,
            }
            #[derive(Serialize)]
            struct Out {
                exponent: f64,
                intercept: f64,
                r2: f64,
                semilog_slope: f64,
                rows: Vec<Row>,
            }
            let semi = study.semilog_fit()?;
            let out = Out {
                exponent: study.fit.slope,
                intercept: study.fit.intercept,
                r2: study.fit.r2,
                semilog_slope: semi.slope,
                rows: study
                    .rows
                    .iter()
                    .map(|r| Row {
                        side: r.side,
                        n_sites: r.n_sites,
                        value: r.value,
                        prediction: PredictionOut::from(&r.record),
                        t_star: r.evolution.as_ref().map(|e| e.t_star),
                        p_star: r.evolution.as_ref().map(|e| e.p_star),
                    })
                    .collect(),
            };
            sink.write(&output::json(&envelope("scaling", args, out))?)
        }
        Format::Csv => {
            let mut t = Table::new(&["side", "n_sites", "value"]);
            for r in &study.rows {
                t.row(vec![r.side.to_string(), r.n_sites.to_string(), num(r.value)]);
            }
            let fit = serde_json::json!({
                "exponent": study.fit.slope,
                "intercept": study.fit.intercept,
                "r2": study.fit.r2,
            });
            sink.write(&t.render(&envelope("scaling", args, fit))?)
        }
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), CliError> {
    if let Some(t) = args.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
    }
    let opts = ValidateOptions {
        level: args.level,
        tol: args.tol,
        sign: match args.sign {
            SignArg::Standard => SignConvention::PaperF,
            SignArg::Literal => SignConvention::Literal,
        },
    };
    let report = validate::run(&opts);
    let text = match args.output.format.unwrap_or(Format::Csv) {
        Format::Json => output::json(&envelope("validate", args, &report))?,
        Format::Csv => {
            let mut s = String::new();
            for c in &report.checks {
                s.push_str(&c.to_string());
                s.push('\n');
            }
            let failed = report.failures().count();
            s.push_str(&format!(
                "{} of {} checks passed\n",
                report.checks.len() - failed,
                report.checks.len()
            ));
            s
        }
    };
    Sink::path(args.output.out.clone()).write(&text)?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} validation checks failed",
            report.failures().count()
        )))
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(usage(format!("{THREADS_ENV} must be a positive integer")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Critical(a) => cmd_critical(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Validate(a) => cmd_validate(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
