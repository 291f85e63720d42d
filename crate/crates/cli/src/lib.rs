//! Command-line front end. Every command writes a table (CSV) or a single
//! JSON document; JSON documents carry `units: "welfare"` and parse back
//! into the output types defined here.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fracrule_core::figure::{figure1_panel, rule_pair, FigureRow, KValue, DEFAULT_K_LIST, FIGURE_CSV_HEADER};
use fracrule_core::numerics::linspace;
use fracrule_core::regret::{
    regret_distribution, regret_surface, risk_report, worst_case_msr, worst_case_msr_grid, GridSearchConfig, RiskReport,
    SearchMethod, StatePoint, SurfaceGrid, SurfaceRow, WorstCaseResult, SURFACE_CSV_HEADER,
};
use fracrule_core::rules::{mean_regret_rule, msr_optimal_rule, point_id_rule, TreatmentRule};
use fracrule_core::verification::{run_suite, SuiteReport};
use fracrule_core::{solve_a_star, tau_star, Error, OptimizerConfig, ProblemSpec};
use serde::{Deserialize, Serialize};

pub const UNITS: &str = "welfare";

#[derive(Debug, Parser)]
#[command(name = "fracrule", version, about = "Minimax mean square regret treatment rules under partial identification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal logistic coefficient.
    Calibrate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Treatment fraction of a rule at one observation.
    Rule {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Observed estimate of the experimental welfare difference.
        #[arg(long, allow_hyphen_values = true)]
        obs: f64,
        #[arg(long, value_enum, default_value_t = RuleName::Msr)]
        rule: RuleName,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Mean square and mean regret on a square grid of states.
    Surface {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = RuleName::Msr)]
        rule: RuleName,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Both minimax rules side by side for a list of k values.
    Figure1 {
        /// Comma-separated k values; "inf" allowed.
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<KValue>>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
        grid_min: f64,
        #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
        grid_max: f64,
        #[arg(long, default_value_t = 401)]
        grid_points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Worst-case mean square regret of a rule over the parameter space.
    WorstCase {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = RuleName::Msr)]
        rule: RuleName,
        #[arg(long, value_enum, default_value_t = SearchName::Boundary)]
        method: SearchName,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo regret moments at one state, next to the quadrature values.
    McRegret {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, value_enum, default_value_t = RuleName::Msr)]
        rule: RuleName,
        #[arg(long, allow_hyphen_values = true)]
        theta_e: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta_t: f64,
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the verification suite; exits 1 if any check fails.
    Verify {
        /// Comma-separated k values for the per-problem checks.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 1.0, 10.0])]
        k_list: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Half-width of the identified set; "inf" where the constant rule applies.
    #[arg(long, allow_hyphen_values = true)]
    pub k: KValue,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub grid_max: f64,
    #[arg(long, default_value_t = 61)]
    pub grid_points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleName {
    Msr,
    MeanRegret,
    PointId,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchName {
    Boundary,
    Grid,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    CheckFailed,
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::CheckFailed => f.write_str("one or more checks failed"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Config(_) => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Shortest representation that parses back to the same `f64`, with
/// exponent notation for very small or large magnitudes and no trailing `.0`.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

/// `v` rounded to 12 significant digits, printed as by [`fmt_num`].
pub fn fmt_sig12(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    fmt_num(rounded)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn finite_k(k: KValue, command: &str) -> CliResult<f64> {
    match k {
        KValue::Finite(v) => Ok(v),
        KValue::Infinite => Err(CliError::Usage(format!("k = inf is not supported by {command}"))),
    }
}

fn build_rule(name: RuleName, k: KValue, sigma: f64) -> CliResult<TreatmentRule> {
    match (name, k) {
        (RuleName::PointId, _) => {
            if let KValue::Finite(k) = k {
                ProblemSpec::new(k, sigma)?;
            }
            Ok(point_id_rule(sigma)?)
        }
        (RuleName::Half, _) | (_, KValue::Infinite) => {
            ProblemSpec::new(0.0, sigma)?;
            Ok(TreatmentRule::ConstantHalf)
        }
        (RuleName::Msr, KValue::Finite(k)) => Ok(msr_optimal_rule(&ProblemSpec::new(k, sigma)?)?),
        (RuleName::MeanRegret, KValue::Finite(k)) => Ok(mean_regret_rule(&ProblemSpec::new(k, sigma)?)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateOutput {
    pub units: String,
    pub k: KValue,
    pub sigma: f64,
    pub rule: TreatmentRule,
    pub tau_star: f64,
    pub tau_star_value: f64,
    pub a_star: f64,
    /// Absent when `k` is unbounded: every rule then has unbounded worst case.
    pub worst_case_msr: Option<f64>,
    pub foc_residual: Option<f64>,
    pub soc_value: Option<f64>,
    pub warnings: Vec<String>,
}

pub const CALIBRATE_CSV_HEADER: &str = "k,sigma,rule,tau_star,a_star,worst_case_msr,foc_residual,soc_value";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutput {
    pub units: String,
    pub k: KValue,
    pub sigma: f64,
    pub rule_name: RuleName,
    pub rule: TreatmentRule,
    pub observation: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceOutput {
    pub units: String,
    pub k: f64,
    pub sigma: f64,
    pub rule: TreatmentRule,
    pub grid: SurfaceGrid,
    pub rows: Vec<SurfaceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePanel {
    pub k: KValue,
    pub msr_rule: TreatmentRule,
    pub mean_regret_rule: TreatmentRule,
    pub rows: Vec<FigureRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOutput {
    pub units: String,
    pub sigma: f64,
    /// False for the built-in k list, which is a choice rather than a
    /// reproduction of any published panel set.
    pub k_list_canonical: bool,
    pub k_list_source: String,
    pub panels: Vec<FigurePanel>,
}

pub const FIGURE_LONG_CSV_HEADER: &str = "k,z,msr_rule,mean_regret_rule";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseOutput {
    pub units: String,
    pub k: f64,
    pub sigma: f64,
    pub rule: TreatmentRule,
    pub result: WorstCaseResult,
}

pub const WORST_CASE_CSV_HEADER: &str =
    "rule,value,theta_e,theta_t,method,theta_e_min,theta_e_max,theta_e_points,theta_t_points,expansions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McOutput {
    pub units: String,
    pub k: f64,
    pub sigma: f64,
    pub rule: TreatmentRule,
    pub state: StatePoint,
    pub seed: u64,
    pub monte_carlo: RiskReport,
    pub quadrature: RiskReport,
}

pub const MC_CSV_HEADER: &str = "method,mean_regret,mean_square_regret,regret_variance,se_mean_regret,se_mean_square_regret,draws";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub units: String,
    pub sigma: f64,
    pub k_list: Vec<f64>,
    pub report: SuiteReport,
}

fn open_output(out: &OutputArgs) -> CliResult<Box<dyn Write>> {
    Ok(match &out.out {
        Some(path) => Box::new(io::BufWriter::new(File::create(path)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn csv_writer<'a>(w: &'a mut dyn Write, header: &str) -> CliResult<csv::Writer<&'a mut dyn Write>> {
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(header.split(','))?;
    Ok(cw)
}

/// Runs one parsed invocation, writing its output. `Err(CheckFailed)` is
/// returned after the report has been written.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Calibrate { problem, output } => calibrate(problem, output),
        Command::Rule {
            problem,
            obs,
            rule,
            output,
        } => rule_cmd(problem, *obs, *rule, output),
        Command::Surface {
            problem,
            rule,
            grid,
            output,
        } => surface(problem, *rule, grid, output),
        Command::Figure1 {
            k_list,
            sigma,
            grid_min,
            grid_max,
            grid_points,
            output,
        } => figure1(k_list.as_deref(), *sigma, (*grid_min, *grid_max, *grid_points), output),
        Command::WorstCase {
            problem,
            rule,
            method,
            output,
        } => worst_case(problem, *rule, *method, output),
        Command::McRegret {
            problem,
            rule,
            theta_e,
            theta_t,
            draws,
            seed,
            output,
        } => mc_regret(problem, *rule, StatePoint::new(*theta_e, *theta_t)?, *draws, *seed, output),
        Command::Verify { k_list, sigma, output } => verify(k_list, *sigma, output),
    }
}

fn calibrate(problem: &ProblemArgs, output: &OutputArgs) -> CliResult<()> {
    let tau = tau_star()?;
    let out = match problem.k {
        KValue::Infinite => {
            ProblemSpec::new(0.0, problem.sigma)?;
            CalibrateOutput {
                units: UNITS.into(),
                k: problem.k,
                sigma: problem.sigma,
                rule: TreatmentRule::ConstantHalf,
                tau_star: tau.tau_star,
                tau_star_value: tau.value,
                a_star: 0.0,
                worst_case_msr: None,
                foc_residual: None,
                soc_value: None,
                warnings: Vec::new(),
            }
        }
        KValue::Finite(k) => {
            let spec = ProblemSpec::new(k, problem.sigma)?;
            let cal = solve_a_star(&spec, &OptimizerConfig::default())?;
            CalibrateOutput {
                units: UNITS.into(),
                k: problem.k,
                sigma: problem.sigma,
                rule: TreatmentRule::MsrOptimal {
                    a_coeff: cal.a_star,
                    sigma: problem.sigma,
                },
                tau_star: cal.tau_star,
                tau_star_value: tau.value,
                a_star: cal.a_star,
                worst_case_msr: Some(cal.worst_case_msr),
                foc_residual: Some(cal.foc_residual),
                soc_value: Some(cal.soc_value),
                warnings: cal.warnings,
            }
        }
    };
    let mut w = open_output(output)?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(&mut *w, &out)?,
        Format::Csv => {
            let mut cw = csv_writer(&mut *w, CALIBRATE_CSV_HEADER)?;
            cw.write_record([
                match out.k {
                    KValue::Finite(k) => fmt_num(k),
                    KValue::Infinite => "inf".into(),
                },
                fmt_num(out.sigma),
                out.rule.name().to_string(),
                fmt_num(out.tau_star),
                fmt_num(out.a_star),
                fmt_opt(out.worst_case_msr),
                fmt_opt(out.foc_residual),
                fmt_opt(out.soc_value),
            ])?;
            cw.flush()?;
        }
    }
    for warning in &out.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(w.flush()?)
}

fn rule_cmd(problem: &ProblemArgs, obs: f64, name: RuleName, output: &OutputArgs) -> CliResult<()> {
    let rule = build_rule(name, problem.k, problem.sigma)?;
    let fraction = rule.evaluate(obs)?;
    let mut w = open_output(output)?;
    match output.format {
        None => writeln!(w, "{}", fmt_sig12(fraction))?,
        Some(Format::Csv) => {
            let mut cw = csv_writer(&mut *w, "rule,observation,fraction")?;
            cw.write_record([rule.name().to_string(), fmt_num(obs), fmt_sig12(fraction)])?;
            cw.flush()?;
        }
        Some(Format::Json) => write_json(
            &mut *w,
            &RuleOutput {
                units: UNITS.into(),
                k: problem.k,
                sigma: problem.sigma,
                rule_name: name,
                rule,
                observation: obs,
                fraction,
            },
        )?,
    }
    Ok(w.flush()?)
}

fn surface(problem: &ProblemArgs, name: RuleName, grid: &GridArgs, output: &OutputArgs) -> CliResult<()> {
    let k = finite_k(problem.k, "surface")?;
    let spec = ProblemSpec::new(k, problem.sigma)?;
    let rule = build_rule(name, problem.k, problem.sigma)?;
    let g = SurfaceGrid {
        min: grid.grid_min,
        max: grid.grid_max,
        points: grid.grid_points,
    };
    let rows = regret_surface(&rule, &spec, &g)?;
    let mut w = open_output(output)?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(
            &mut *w,
            &SurfaceOutput {
                units: UNITS.into(),
                k,
                sigma: problem.sigma,
                rule,
                grid: g,
                rows,
            },
        )?,
        Format::Csv => {
            let mut cw = csv_writer(&mut *w, SURFACE_CSV_HEADER)?;
            for r in &rows {
                cw.write_record([fmt_num(r.theta_e), fmt_num(r.theta_t), fmt_num(r.msr), fmt_num(r.mean_regret)])?;
            }
            cw.flush()?;
        }
    }
    Ok(w.flush()?)
}

fn figure1(k_list: Option<&[KValue]>, sigma: f64, z_range: (f64, f64, usize), output: &OutputArgs) -> CliResult<()> {
    let (lo, hi, n) = z_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi && n >= 2) {
        return Err(CliError::Usage(format!("z grid [{lo}, {hi}] with {n} points is invalid")));
    }
    let (ks, canonical, source) = match k_list {
        Some(ks) if !ks.is_empty() => (ks.to_vec(), false, "user"),
        Some(_) => return Err(CliError::Usage("--k-list is empty".into())),
        None => (DEFAULT_K_LIST.to_vec(), false, "default (non-canonical: chosen to straddle the mean-regret switch)"),
    };
    let z = linspace(lo, hi, n);
    let panels = ks
        .iter()
        .map(|&k| {
            let (msr, mr) = rule_pair(k, sigma)?;
            Ok(FigurePanel {
                k,
                msr_rule: msr,
                mean_regret_rule: mr,
                rows: figure1_panel(k, sigma, &z)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut w = open_output(output)?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(
            &mut *w,
            &FigureOutput {
                units: UNITS.into(),
                sigma,
                k_list_canonical: canonical,
                k_list_source: source.into(),
                panels,
            },
        )?,
        Format::Csv => {
            debug_assert!(FIGURE_LONG_CSV_HEADER.ends_with(FIGURE_CSV_HEADER));
            let mut cw = csv_writer(&mut *w, FIGURE_LONG_CSV_HEADER)?;
            for p in &panels {
                for r in &p.rows {
                    let k = match p.k {
                        KValue::Finite(k) => fmt_num(k),
                        KValue::Infinite => "inf".into(),
                    };
                    cw.write_record([k, fmt_num(r.z), fmt_num(r.msr_rule), fmt_num(r.mean_regret_rule)])?;
                }
            }
            cw.flush()?;
        }
    }
    Ok(w.flush()?)
}

fn worst_case(problem: &ProblemArgs, name: RuleName, method: SearchName, output: &OutputArgs) -> CliResult<()> {
    let k = finite_k(problem.k, "worst-case")?;
    let spec = ProblemSpec::new(k, problem.sigma)?;
    let rule = build_rule(name, problem.k, problem.sigma)?;
    let result = match method {
        SearchName::Boundary => worst_case_msr(&rule, &spec),
        SearchName::Grid => worst_case_msr_grid(&rule, &spec, &GridSearchConfig::default()),
    }
    .map_err(|e| match e {
        Error::DivergingWorstCase { bound, incumbent } => CliError::Numerical(format!(
            "worst-case mean square regret of {} is unbounded (risk {incumbent} and still growing at theta_e = {bound})",
            rule.name()
        )),
        other => other.into(),
    })?;
    let mut w = open_output(output)?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(
            &mut *w,
            &WorstCaseOutput {
                units: UNITS.into(),
                k,
                sigma: problem.sigma,
                rule,
                result,
            },
        )?,
        Format::Csv => {
            let g = &result.search_grid;
            let method = match g.method {
                SearchMethod::Boundary => "boundary",
                SearchMethod::Grid2d => "grid2d",
            };
            let mut cw = csv_writer(&mut *w, WORST_CASE_CSV_HEADER)?;
            cw.write_record([
                rule.name().to_string(),
                fmt_num(result.value),
                fmt_num(result.argmax.theta_e),
                fmt_num(result.argmax.theta_t),
                method.to_string(),
                fmt_num(g.theta_e_min),
                fmt_num(g.theta_e_max),
                g.theta_e_points.to_string(),
                g.theta_t_points.to_string(),
                g.expansions.to_string(),
            ])?;
            cw.flush()?;
        }
    }
    Ok(w.flush()?)
}

fn mc_regret(problem: &ProblemArgs, name: RuleName, state: StatePoint, draws: u64, seed: u64, output: &OutputArgs) -> CliResult<()> {
    let k = finite_k(problem.k, "mc-regret")?;
    let spec = ProblemSpec::new(k, problem.sigma)?;
    state.check_within(&spec)?;
    let rule = build_rule(name, problem.k, problem.sigma)?;
    let mc = regret_distribution(&rule, &state, spec.sigma(), draws, seed)?;
    let quad = risk_report(&rule, &state, spec.sigma())?;
    let mut w = open_output(output)?;
    match output.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(
            &mut *w,
            &McOutput {
                units: UNITS.into(),
                k,
                sigma: problem.sigma,
                rule,
                state,
                seed,
                monte_carlo: mc,
                quadrature: quad,
            },
        )?,
        Format::Csv => {
            let mut cw = csv_writer(&mut *w, MC_CSV_HEADER)?;
            for (label, r) in [("monte-carlo", &mc), ("quadrature", &quad)] {
                cw.write_record([
                    label.to_string(),
                    fmt_num(r.mean_regret),
                    fmt_num(r.mean_square_regret),
                    fmt_num(r.regret_variance),
                    fmt_opt(r.mc_std_error.map(|s| s.mean_regret)),
                    fmt_opt(r.mc_std_error.map(|s| s.mean_square_regret)),
                    r.mc_draws.map(|d| d.to_string()).unwrap_or_default(),
                ])?;
            }
            cw.flush()?;
        }
    }
    Ok(w.flush()?)
}

fn verify(k_list: &[f64], sigma: f64, output: &OutputArgs) -> CliResult<()> {
    let specs = k_list
        .iter()
        .map(|&k| ProblemSpec::new(k, sigma))
        .collect::<Result<Vec<_>, Error>>()?;
    let report = run_suite(&specs)?;
    let passed = report.passed;
    let mut w = open_output(output)?;
    match output.format {
        Some(Format::Json) => write_json(
            &mut *w,
            &VerifyOutput {
                units: UNITS.into(),
                sigma,
                k_list: k_list.to_vec(),
                report,
            },
        )?,
        Some(Format::Csv) => {
            let mut cw = csv_writer(&mut *w, "check,passed,worst_violation,tolerance,error")?;
            for o in &report.outcomes {
                cw.write_record([
                    o.name.clone(),
                    o.passed.to_string(),
                    fmt_num(o.worst_violation),
                    fmt_num(o.tolerance),
                    o.error.clone().unwrap_or_default(),
                ])?;
            }
            cw.flush()?;
        }
        None => write!(w, "{}", report.table())?,
    }
    w.flush()?;
    if passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig12(0.5), "0.5");
        assert_eq!(fmt_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig12(0.0), "0");
        assert_eq!(fmt_sig12(2.0 / 3.0 * 1e-5), "6.66666666667e-6");
        assert_eq!(fmt_num(3.0), "3");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn shortest_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 123456.789, -0.0] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(Error::InvalidBracket { lo: 1.0, hi: 0.0 }).exit_code(), 3);
        assert_eq!(CliError::CheckFailed.exit_code(), 1);
    }

    #[test]
    fn infinite_k_maps_to_constant_rule() {
        for name in [RuleName::Msr, RuleName::MeanRegret, RuleName::Half] {
            assert_eq!(build_rule(name, KValue::Infinite, 1.0).unwrap(), TreatmentRule::ConstantHalf);
        }
        assert!(matches!(finite_k(KValue::Infinite, "surface"), Err(CliError::Usage(_))));
    }

    #[test]
    fn parser_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
