//! Regret functionals of a treatment rule and worst-case searches over the
//! parameter space `{(theta_e, theta_t) : |theta_t - theta_e| <= k}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{tau_star, ProblemSpec};
use crate::error::{Error, Result};
use crate::numerics::{gauss_expectation_with_breaks, linspace, maximize_fallible, OptimizerConfig, QuadratureConfig};
use crate::rho::rho_shifted_with;
use crate::rules::{subproblem_rule, SubproblemSpec, TreatmentRule};

/// One parameter vector `(theta_e, theta_t)`, welfare units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub theta_e: f64,
    pub theta_t: f64,
}

impl StatePoint {
    pub fn new(theta_e: f64, theta_t: f64) -> Result<Self> {
        if !theta_e.is_finite() || !theta_t.is_finite() {
            return Err(Error::domain(format!("state ({theta_e}, {theta_t}) is not finite")));
        }
        Ok(Self { theta_e, theta_t })
    }

    pub fn neg(&self) -> Self {
        Self {
            theta_e: -self.theta_e,
            theta_t: -self.theta_t,
        }
    }

    pub fn is_within(&self, spec: &ProblemSpec) -> bool {
        (self.theta_t - self.theta_e).abs() <= spec.k() * (1.0 + 1e-12) + 1e-12
    }

    pub fn check_within(&self, spec: &ProblemSpec) -> Result<()> {
        if self.is_within(spec) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "state ({}, {}) lies outside the parameter space for k = {}",
                self.theta_e,
                self.theta_t,
                spec.k()
            )))
        }
    }
}

fn check_inputs(rule: &TreatmentRule, state: &StatePoint, sigma: f64) -> Result<()> {
    rule.validate()?;
    StatePoint::new(state.theta_e, state.theta_t)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be finite and positive, got {sigma}")));
    }
    Ok(())
}

/// `E[(1 - d)^2]` when `treat`, else `E[d^2]`, under `theta_e_hat ~ N(theta_e, sigma^2)`.
fn squared_gap(rule: &TreatmentRule, theta_e: f64, sigma: f64, treat: bool, cfg: &QuadratureConfig) -> Result<f64> {
    let center = theta_e / sigma;
    if let Some(slope) = rule.logistic_slope() {
        // 1 - d(sigma y) is the decreasing weight with slope |slope| sigma;
        // a negative slope or the untreated side mirrors the center.
        let mirrored = (slope < 0.0) != !treat;
        let c = if mirrored { -center } else { center };
        return rho_shifted_with(slope.abs() * sigma, c, cfg);
    }
    let breaks: Vec<f64> = rule.discontinuities().iter().map(|b| b / sigma).collect();
    let target = if treat { 1.0 } else { 0.0 };
    gauss_expectation_with_breaks(
        |y| {
            let gap = target - rule.fraction(sigma * y);
            gap * gap
        },
        center,
        &breaks,
        cfg,
    )
}

fn mean_fraction(rule: &TreatmentRule, theta_e: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if let TreatmentRule::ConstantHalf = rule {
        return Ok(0.5);
    }
    let breaks: Vec<f64> = rule.discontinuities().iter().map(|b| b / sigma).collect();
    gauss_expectation_with_breaks(|y| rule.fraction(sigma * y), theta_e / sigma, &breaks, cfg)
}

/// `theta_t^2 E[(1{theta_t >= 0} - d(theta_e_hat))^2]`.
pub fn mean_square_regret(rule: &TreatmentRule, state: &StatePoint, sigma: f64) -> Result<f64> {
    mean_square_regret_with(rule, state, sigma, &QuadratureConfig::default())
}

pub fn mean_square_regret_with(rule: &TreatmentRule, state: &StatePoint, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_inputs(rule, state, sigma)?;
    if state.theta_t == 0.0 {
        return Ok(0.0);
    }
    let gap = squared_gap(rule, state.theta_e, sigma, state.theta_t >= 0.0, cfg)?;
    Ok(state.theta_t * state.theta_t * gap)
}

/// Mean square regret by direct quadrature of the rule itself, bypassing
/// the `rho_shifted` shortcut for logistic rules.
pub fn mean_square_regret_by_quadrature(rule: &TreatmentRule, state: &StatePoint, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_inputs(rule, state, sigma)?;
    let target = if state.theta_t >= 0.0 { 1.0 } else { 0.0 };
    let breaks: Vec<f64> = rule.discontinuities().iter().map(|b| b / sigma).collect();
    let gap = gauss_expectation_with_breaks(
        |y| (target - rule.fraction(sigma * y)).powi(2),
        state.theta_e / sigma,
        &breaks,
        cfg,
    )?;
    Ok(state.theta_t * state.theta_t * gap)
}

/// `theta_t E[1{theta_t >= 0} - d(theta_e_hat)]`, never negative.
pub fn mean_regret(rule: &TreatmentRule, state: &StatePoint, sigma: f64) -> Result<f64> {
    mean_regret_with(rule, state, sigma, &QuadratureConfig::default())
}

pub fn mean_regret_with(rule: &TreatmentRule, state: &StatePoint, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_inputs(rule, state, sigma)?;
    if state.theta_t == 0.0 {
        return Ok(0.0);
    }
    let m = mean_fraction(rule, state.theta_e, sigma, cfg)?;
    Ok(if state.theta_t >= 0.0 {
        state.theta_t * (1.0 - m)
    } else {
        -state.theta_t * m
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStdErrors {
    pub mean_regret: f64,
    pub mean_square_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub mean_regret: f64,
    pub mean_square_regret: f64,
    pub regret_variance: f64,
    pub method: RiskMethod,
    pub mc_draws: Option<u64>,
    /// `None` for quadrature, and for a single draw.
    pub mc_std_error: Option<McStdErrors>,
}

/// Mean regret, mean square regret and regret variance by quadrature.
pub fn risk_report(rule: &TreatmentRule, state: &StatePoint, sigma: f64) -> Result<RiskReport> {
    let mean = mean_regret(rule, state, sigma)?;
    let msr = mean_square_regret(rule, state, sigma)?;
    Ok(RiskReport {
        mean_regret: mean,
        mean_square_regret: msr,
        regret_variance: (msr - mean * mean).max(0.0),
        method: RiskMethod::Quadrature,
        mc_draws: None,
        mc_std_error: None,
    })
}

const MC_CHUNK: u64 = 1 << 16;

// Running moments of regret and squared regret (Welford, merged with Chan's rule).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    mean_sq: f64,
    m2_sq: f64,
}

impl Moments {
    fn push(&mut self, r: f64) {
        self.n += 1.0;
        let d = r - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (r - self.mean);
        let r2 = r * r;
        let d2 = r2 - self.mean_sq;
        self.mean_sq += d2 / self.n;
        self.m2_sq += d2 * (r2 - self.mean_sq);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let d2 = other.mean_sq - self.mean_sq;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
            mean_sq: self.mean_sq + d2 * other.n / n,
            m2_sq: self.m2_sq + other.m2_sq + d2 * d2 * self.n * other.n / n,
        }
    }
}

/// Monte Carlo regret moments. Draws are generated in fixed chunks, chunk
/// `i` from stream `i` of a ChaCha generator keyed by `seed`, so results do
/// not depend on the thread count.
pub fn regret_distribution(rule: &TreatmentRule, state: &StatePoint, sigma: f64, draws: u64, seed: u64) -> Result<RiskReport> {
    check_inputs(rule, state, sigma)?;
    if draws == 0 {
        return Err(Error::domain("Monte Carlo needs at least one draw"));
    }
    let target = if state.theta_t >= 0.0 { 1.0 } else { 0.0 };
    let chunks = draws.div_ceil(MC_CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = MC_CHUNK.min(draws - c * MC_CHUNK);
            let mut m = Moments::default();
            for _ in 0..len {
                let z: f64 = StandardNormal.sample(&mut rng);
                let obs = state.theta_e + sigma * z;
                m.push(state.theta_t * (target - rule.fraction(obs)));
            }
            m
        })
        .collect();
    let m = parts.into_iter().fold(Moments::default(), Moments::merge);

    let n = m.n;
    let std_error = (draws > 1).then(|| McStdErrors {
        mean_regret: (m.m2 / (n - 1.0) / n).sqrt(),
        mean_square_regret: (m.m2_sq / (n - 1.0) / n).sqrt(),
    });
    Ok(RiskReport {
        mean_regret: m.mean,
        mean_square_regret: m.mean_sq,
        regret_variance: m.m2 / n,
        method: RiskMethod::MonteCarlo,
        mc_draws: Some(draws),
        mc_std_error: std_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    /// One-dimensional profile along `theta_t = theta_e + k` (and its mirror).
    Boundary,
    /// Full grid over `theta_e` and `theta_t`.
    Grid2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub method: SearchMethod,
    pub theta_e_min: f64,
    pub theta_e_max: f64,
    pub theta_e_points: usize,
    pub theta_t_points: usize,
    pub expansions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseResult {
    pub value: f64,
    pub argmax: StatePoint,
    pub search_grid: SearchRecord,
    pub refined: bool,
}

const TAIL_RATIO: f64 = 1e-6;
const QUIET_STEPS: usize = 3;
const DIVERGENCE_FACTOR: f64 = 1e3;
const SEGMENT_POINTS: usize = 401;

fn refine_cfg() -> OptimizerConfig {
    OptimizerConfig::default().with_grid_points(21)
}

/// A one-dimensional profile `f(u)` on `[-ratio, T]`, evaluated on a grid
/// whose right end `T` doubles until three consecutive new segments stay
/// below 1e-6 of the running maximum.
#[derive(Debug, Clone)]
pub(crate) struct Profile {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub argmax: usize,
    pub expansions: usize,
}

pub(crate) fn adaptive_profile<F: Fn(f64) -> Result<f64> + Sync>(f: &F, ratio: f64) -> Result<Profile> {
    let limit = DIVERGENCE_FACTOR * ratio.max(1.0);
    let first_end = 4.0_f64.max(ratio);
    let first_points = (((first_end + ratio) / 0.01).ceil() as usize + 1).clamp(SEGMENT_POINTS, 20_001);

    let mut xs = linspace(-ratio, first_end, first_points);
    let mut values = xs.par_iter().map(|&u| f(u)).collect::<Result<Vec<f64>>>()?;
    let mut incumbent = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut end = first_end;
    let mut quiet = 0;
    let mut expansions = 0;
    while quiet < QUIET_STEPS {
        if end >= limit {
            return Err(Error::DivergingWorstCase { bound: end, incumbent });
        }
        let seg: Vec<f64> = linspace(end, 2.0 * end, SEGMENT_POINTS).into_iter().skip(1).collect();
        let seg_values = seg.par_iter().map(|&u| f(u)).collect::<Result<Vec<f64>>>()?;
        let seg_max = seg_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if seg_max < TAIL_RATIO * incumbent {
            quiet += 1;
        } else {
            quiet = 0;
        }
        incumbent = incumbent.max(seg_max);
        xs.extend(seg);
        values.extend(seg_values);
        end *= 2.0;
        expansions += 1;
    }
    let argmax = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
        .0;
    Ok(Profile {
        xs,
        values,
        argmax,
        expansions,
    })
}

/// Worst-case mean square regret over the parameter space, for rules that
/// are symmetric under `theta -> -theta`.
///
/// For fixed `theta_e` the risk grows with `|theta_t|` on each sign of
/// `theta_t`, so the supremum is on the edge `theta_t = theta_e + k`; with
/// `u = theta_e / sigma` this is `sigma^2 sup_{u >= -k/sigma} (u + k/sigma)^2 E_u[(1 - d)^2]`,
/// which for the logistic rules is `(u + k/sigma)^2 rho_shifted(a, u)`. The
/// right end of the search grows until the profile stays below 1e-6 of the
/// incumbent for three consecutive doublings.
pub fn worst_case_msr(rule: &TreatmentRule, spec: &ProblemSpec) -> Result<WorstCaseResult> {
    rule.validate()?;
    let sigma = spec.sigma();
    let ratio = spec.ratio();
    let cfg = QuadratureConfig::default();
    let mut sides = vec![true];
    if !rule.is_symmetric() {
        sides.push(false);
    }

    let mut best: Option<WorstCaseResult> = None;
    for treat in sides {
        // Profile in u; the untreated side uses theta_e = -sigma u.
        let profile = |u: f64| -> Result<f64> {
            let theta_e = if treat { sigma * u } else { -sigma * u };
            Ok((u + ratio).powi(2) * squared_gap(rule, theta_e, sigma, treat, &cfg)?)
        };

        let prof = adaptive_profile(&profile, ratio)?;
        let i = prof.argmax;
        let lo = prof.xs[i.saturating_sub(1)];
        let hi = prof.xs[(i + 1).min(prof.xs.len() - 1)];
        let refined = maximize_fallible(profile, lo, hi, &refine_cfg())?;
        let (u, v) = if refined.value >= prof.values[i] {
            (refined.argmax, refined.value)
        } else {
            (prof.xs[i], prof.values[i])
        };
        let theta_e = if treat { sigma * u } else { -sigma * u };
        let theta_t = if treat { theta_e + spec.k() } else { theta_e - spec.k() };
        let candidate = WorstCaseResult {
            value: sigma * sigma * v,
            argmax: StatePoint { theta_e, theta_t },
            search_grid: SearchRecord {
                method: SearchMethod::Boundary,
                theta_e_min: -spec.k(),
                theta_e_max: sigma * prof.xs.last().copied().unwrap_or(0.0),
                theta_e_points: prof.xs.len(),
                theta_t_points: 1,
                expansions: prof.expansions,
            },
            refined: true,
        };
        if best.as_ref().is_none_or(|b| candidate.value > b.value) {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one side searched"))
}

// Squared-gap moments of one theta_e column.
#[derive(Debug, Clone, Copy)]
struct Column {
    theta_e: f64,
    treated: f64,
    untreated: f64,
}

impl Column {
    fn risk(&self, theta_t: f64) -> f64 {
        theta_t * theta_t * if theta_t >= 0.0 { self.treated } else { self.untreated }
    }
}

fn column(rule: &TreatmentRule, theta_e: f64, sigma: f64, cfg: &QuadratureConfig) -> Result<Column> {
    Ok(Column {
        theta_e,
        treated: squared_gap(rule, theta_e, sigma, true, cfg)?,
        untreated: squared_gap(rule, theta_e, sigma, false, cfg)?,
    })
}

/// Settings for [`worst_case_msr_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSearchConfig {
    /// `theta_e` spacing in units of sigma.
    pub theta_e_step: f64,
    pub theta_t_points: usize,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        Self {
            theta_e_step: 0.02,
            theta_t_points: 41,
        }
    }
}

/// Worst-case mean square regret by a direct grid over the parameter space,
/// without assuming where the supremum lies.
///
/// `theta_e` covers `[-B, B]`, doubling `B` until the risk on the edge
/// columns is below 1e-6 of the incumbent; each column spans
/// `theta_t in [theta_e - k, theta_e + k]`. The best grid point is then
/// refined by nested scalar maximization. Columns are evaluated in parallel
/// and reduced in grid order, ties going to the smallest `(theta_e, theta_t)`.
pub fn worst_case_msr_grid(rule: &TreatmentRule, spec: &ProblemSpec, grid: &GridSearchConfig) -> Result<WorstCaseResult> {
    rule.validate()?;
    if !(grid.theta_e_step > 0.0) || grid.theta_t_points < 2 {
        return Err(Error::Config("grid search needs a positive step and at least two theta_t points".into()));
    }
    let sigma = spec.sigma();
    let k = spec.k();
    let cfg = QuadratureConfig::default();
    let h = grid.theta_e_step * sigma;
    let limit = DIVERGENCE_FACTOR * sigma.max(k);
    let theta_t_grid = |theta_e: f64| -> Vec<f64> {
        if k == 0.0 {
            vec![theta_e]
        } else {
            linspace(theta_e - k, theta_e + k, grid.theta_t_points)
        }
    };
    let column_max = |c: &Column| -> (f64, f64) {
        theta_t_grid(c.theta_e)
            .into_iter()
            .map(|t| (c.risk(t), t))
            .fold((f64::NEG_INFINITY, 0.0), |acc, p| if p.0 > acc.0 { p } else { acc })
    };

    let mut half_width = (4.0 * sigma + 2.0 * k).max(h);
    let mut columns: Vec<Column> = Vec::new();
    let mut covered = 0usize; // columns computed on each side, excluding zero
    let mut expansions = 0;
    loop {
        let n_side = (half_width / h).round() as usize;
        let new_idx: Vec<usize> = (covered + 1..=n_side).collect();
        let mut fresh: Vec<Column> = new_idx
            .par_iter()
            .flat_map_iter(|&i| [-(i as f64) * h, i as f64 * h])
            .map(|te| column(rule, te, sigma, &cfg))
            .collect::<Result<Vec<Column>>>()?;
        if covered == 0 {
            fresh.push(column(rule, 0.0, sigma, &cfg)?);
        }
        columns.append(&mut fresh);
        covered = n_side;
        columns.sort_by(|a, b| a.theta_e.total_cmp(&b.theta_e));

        let incumbent = columns.iter().map(|c| column_max(c).0).fold(f64::NEG_INFINITY, f64::max);
        let edge = column_max(columns.first().unwrap()).0.max(column_max(columns.last().unwrap()).0);
        if edge < TAIL_RATIO * incumbent {
            break;
        }
        if half_width >= limit {
            return Err(Error::DivergingWorstCase {
                bound: half_width,
                incumbent,
            });
        }
        half_width = (2.0 * half_width).min(limit);
        expansions += 1;
    }

    // Deterministic reduction: strict improvement only, scanning in grid order.
    let mut best = (f64::NEG_INFINITY, 0usize, 0.0);
    for (i, c) in columns.iter().enumerate() {
        let (v, t) = column_max(c);
        if v > best.0 {
            best = (v, i, t);
        }
    }
    let (grid_value, i_best, t_best) = best;

    let inner = |col: &Column| -> Result<(f64, f64)> {
        if k == 0.0 {
            return Ok((col.risk(col.theta_e), col.theta_e));
        }
        let m = maximize_fallible(|t| Ok(col.risk(t)), col.theta_e - k, col.theta_e + k, &OptimizerConfig::default())?;
        Ok((m.value, m.argmax))
    };
    let lo = columns[i_best.saturating_sub(1)].theta_e;
    let hi = columns[(i_best + 1).min(columns.len() - 1)].theta_e;
    let outer = maximize_fallible(|te| inner(&column(rule, te, sigma, &cfg)?).map(|p| p.0), lo, hi, &refine_cfg())?;
    let (value, argmax) = if outer.value >= grid_value {
        let col = column(rule, outer.argmax, sigma, &cfg)?;
        let (v, t) = inner(&col)?;
        (v, StatePoint { theta_e: outer.argmax, theta_t: t })
    } else {
        (
            grid_value,
            StatePoint {
                theta_e: columns[i_best].theta_e,
                theta_t: t_best,
            },
        )
    };

    Ok(WorstCaseResult {
        value,
        argmax,
        search_grid: SearchRecord {
            method: SearchMethod::Grid2d,
            theta_e_min: columns.first().unwrap().theta_e,
            theta_e_max: columns.last().unwrap().theta_e,
            theta_e_points: columns.len(),
            theta_t_points: if k == 0.0 { 1 } else { grid.theta_t_points },
            expansions,
        },
        refined: true,
    })
}

/// Bayes mean square regret under the symmetric two-point prior on
/// `+-support_point`.
pub fn bayes_msr_two_point(rule: &TreatmentRule, spec: &ProblemSpec, support_point: &StatePoint) -> Result<f64> {
    support_point.check_within(spec)?;
    let sigma = spec.sigma();
    Ok(0.5 * mean_square_regret(rule, support_point, sigma)? + 0.5 * mean_square_regret(rule, &support_point.neg(), sigma)?)
}

/// Closed-form worst-case mean square regret of the subproblem's minimax rule.
pub fn subproblem_worst_case(sub: &SubproblemSpec, spec: &ProblemSpec) -> Result<f64> {
    sub.check_within(spec)?;
    let sigma = spec.sigma();
    let tau = tau_star()?;
    let t = sub.a_e / sigma;
    Ok(if t >= tau.tau_star {
        sub.a_t * sub.a_t / (t * t) * tau.value
    } else {
        sub.a_t * sub.a_t * rho_shifted_with(t, t, &QuadratureConfig::default())?
    })
}

/// Direct supremum of the subproblem rule's risk over `s in [-1, 1]`, by a
/// grid of `points` values of `s` followed by golden-section refinement.
pub fn subproblem_worst_case_direct(sub: &SubproblemSpec, spec: &ProblemSpec, points: usize) -> Result<f64> {
    let rule = subproblem_rule(sub, spec)?.rule;
    let sigma = spec.sigma();
    let risk = |s: f64| {
        let state = StatePoint {
            theta_e: s * sub.a_e,
            theta_t: s * sub.a_t,
        };
        mean_square_regret(&rule, &state, sigma)
    };
    maximize_fallible(risk, -1.0, 1.0, &OptimizerConfig::default().with_grid_points(points.max(3))).map(|m| m.value)
}

/// Grid extent and resolution shared by both axes of a regret surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub theta_e: f64,
    pub theta_t: f64,
    pub msr: f64,
    pub mean_regret: f64,
}

pub const SURFACE_CSV_HEADER: &str = "theta_e,theta_t,msr,mean_regret";

/// Mean square and mean regret on a square grid, keeping only points inside
/// the parameter space.
pub fn regret_surface(rule: &TreatmentRule, spec: &ProblemSpec, grid: &SurfaceGrid) -> Result<Vec<SurfaceRow>> {
    rule.validate()?;
    if !(grid.min < grid.max) || grid.points < 2 || !grid.min.is_finite() || !grid.max.is_finite() {
        return Err(Error::Config(format!(
            "surface grid [{}, {}] with {} points is invalid",
            grid.min, grid.max, grid.points
        )));
    }
    let sigma = spec.sigma();
    let cfg = QuadratureConfig::default();
    let axis = linspace(grid.min, grid.max, grid.points);
    let rows: Vec<Vec<SurfaceRow>> = axis
        .par_iter()
        .map(|&theta_e| -> Result<Vec<SurfaceRow>> {
            let col = column(rule, theta_e, sigma, &cfg)?;
            let m = mean_fraction(rule, theta_e, sigma, &cfg)?;
            Ok(axis
                .iter()
                .map(|&theta_t| StatePoint { theta_e, theta_t })
                .filter(|s| s.is_within(spec))
                .map(|s| SurfaceRow {
                    theta_e: s.theta_e,
                    theta_t: s.theta_t,
                    msr: if s.theta_t == 0.0 { 0.0 } else { col.risk(s.theta_t) },
                    mean_regret: if s.theta_t >= 0.0 {
                        s.theta_t * (1.0 - m)
                    } else {
                        -s.theta_t * m
                    },
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}
