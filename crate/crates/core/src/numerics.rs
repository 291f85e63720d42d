//! Numerical primitives shared by every other module: Gaussian expectations by
//! adaptive Gauss-Kronrod quadrature, bracketed scalar maximization, root
//! bracketing and sign-change detection on grids.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_94;

/// Tolerances and truncation for [`gauss_expectation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Half-width of the integration window, in standard deviations.
    pub truncation_radius: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            truncation_radius: 12.0,
            max_subdivisions: 60,
        }
    }
}

impl QuadratureConfig {
    /// Tight settings used by the verification checks, where differences of
    /// nearly equal integrals are compared.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            truncation_radius: 12.0,
            max_subdivisions: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        if !(self.truncation_radius >= 6.0) || !self.truncation_radius.is_finite() {
            return Err(Error::Config("truncation radius must be finite and at least 6".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::Config("max_subdivisions must be positive".into()));
        }
        Ok(())
    }
}

/// Settings for [`maximize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub x_tol: f64,
    pub grid_points: usize,
    pub max_iter: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            x_tol: 1e-10,
            grid_points: 2001,
            max_iter: 200,
        }
    }
}

impl OptimizerConfig {
    pub fn with_grid_points(self, grid_points: usize) -> Self {
        Self { grid_points, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_tol > 0.0) {
            return Err(Error::Config("x_tol must be positive".into()));
        }
        if self.grid_points < 3 {
            return Err(Error::Config("grid_points must be at least 3".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function, accurate to a few ulps in both tails.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_931_175_269,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties broken by position so the split order is
    // fully deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::IntegrationFailure { abscissa: x, value: v })
        }
    };

    let f_center = eval(center)?;
    let mut kronrod = f_center * WGK[10];
    let mut gauss = 0.0;
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = kronrod * half;
    res_abs *= scale;
    res_asc *= scale;

    // QUADPACK error rescaling.
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel { lo, hi, value, error })
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[lo, hi]`.
///
/// Interior `breakpoints` become initial panel edges, which keeps jump
/// discontinuities off quadrature nodes.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Integral> {
    cfg.validate()?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let mut edges: Vec<f64> = vec![lo, hi];
    edges.extend(breakpoints.iter().copied().filter(|b| *b > lo && *b < hi));
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(gauss_kronrod_21(&f, w[0], w[1])?);
    }

    let mut subdivisions = 0;
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if error <= cfg.abs_tol + cfg.rel_tol * value.abs() {
            return Ok(Integral {
                value: sum_in_order(&heap),
                error_estimate: error,
                subdivisions,
            });
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::ToleranceNotMet {
                estimate: value,
                error_estimate: error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.lo + worst.hi);
        heap.push(gauss_kronrod_21(&f, worst.lo, mid)?);
        heap.push(gauss_kronrod_21(&f, mid, worst.hi)?);
        subdivisions += 1;
    }
}

// Summation order independent of heap layout.
fn sum_in_order(heap: &BinaryHeap<Panel>) -> f64 {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    panels.iter().map(|p| p.value).sum()
}

/// `E[f(Y)]` for `Y ~ N(mean, 1)`, integrated over `mean ± truncation_radius`.
pub fn gauss_expectation<F: Fn(f64) -> f64>(f: F, mean: f64, cfg: &QuadratureConfig) -> Result<f64> {
    gauss_expectation_with_breaks(f, mean, &[], cfg)
}

/// As [`gauss_expectation`], with known discontinuities of `f` supplied as
/// panel edges.
pub fn gauss_expectation_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    mean: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !mean.is_finite() {
        return Err(Error::domain(format!("Gaussian mean must be finite, got {mean}")));
    }
    let r = cfg.truncation_radius;
    // Unit-width panels over the bulk of the density.
    let mut edges: Vec<f64> = (-3..=3).map(|i| mean + i as f64).collect();
    edges.extend_from_slice(breakpoints);
    let integrand = |y: f64| f(y) * std_normal_pdf(y - mean);
    integrate(integrand, mean - r, mean + r, &edges, cfg).map(|i| i.value)
}

/// Maximizer returned by [`maximize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMax {
    pub argmax: f64,
    pub value: f64,
    /// Number of grid abscissae whose value tied the grid maximum within 1e-12.
    pub grid_ties: usize,
}

const TIE_TOL: f64 = 1e-12;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Grid scan over `[lo, hi]` followed by golden-section refinement inside
/// the cell around the best grid point.
///
/// Ties on the grid resolve to the smallest abscissa.
pub fn maximize_scalar<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, cfg: &OptimizerConfig) -> Result<ScalarMax> {
    cfg.validate()?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let eval = |x: f64| -> Result<f64> {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { abscissa: x, value: v })
        }
    };

    let n = cfg.grid_points;
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect();
    let mut values = Vec::with_capacity(n);
    for &x in &xs {
        values.push(eval(x)?);
    }
    let best_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = values
        .iter()
        .position(|v| *v >= best_value - TIE_TOL)
        .expect("non-empty grid");
    let grid_ties = values.iter().filter(|v| **v >= best_value - TIE_TOL).count();

    let left = best.saturating_sub(1);
    let right = (best + 1).min(n - 1);
    let flat = (values[left] - values[best]).abs() <= TIE_TOL && (values[right] - values[best]).abs() <= TIE_TOL;
    if flat {
        return Ok(ScalarMax {
            argmax: xs[best],
            value: values[best],
            grid_ties,
        });
    }

    let (x, fx) = golden_section(&eval, xs[left], xs[right], cfg)?;
    let (argmax, value) = if fx >= values[best] { (x, fx) } else { (xs[best], values[best]) };
    Ok(ScalarMax {
        argmax,
        value,
        grid_ties,
    })
}

/// [`maximize_scalar`] for objectives that can fail; the first failure is
/// returned unchanged.
pub fn maximize_fallible<G: Fn(f64) -> Result<f64>>(g: G, lo: f64, hi: f64, cfg: &OptimizerConfig) -> Result<ScalarMax> {
    let failure = std::cell::RefCell::new(None);
    let out = maximize_scalar(
        |x| match g(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        cfg,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => out,
    }
}

fn golden_section<E: Fn(f64) -> Result<f64>>(eval: &E, mut a: f64, mut b: f64, cfg: &OptimizerConfig) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..cfg.max_iter {
        if (b - a).abs() <= cfg.x_tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    let fa = eval(a)?;
    let fb = eval(b)?;
    // Best of the final four points; endpoint maxima are reached exactly.
    let candidates = [(a, fa), (c, fc), (d, fd), (b, fb)];
    Ok(candidates
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |acc, p| if p.1 > acc.1 { p } else { acc }))
}

/// Bisection for a sign change of `f` on `[lo, hi]`, down to `x_tol` or an
/// exact zero.
pub fn find_root<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    PlusToMinus,
    MinusToPlus,
}

/// A strict sign transition between `values[from]` and `values[to]`; any
/// entries strictly between them are zero within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignChange {
    pub from: usize,
    pub to: usize,
    pub direction: Direction,
}

/// Sign transitions along `values`, with `|v| <= zero_tol` counted as zero.
pub fn sign_changes(values: &[f64], zero_tol: f64) -> Vec<SignChange> {
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.abs() <= zero_tol {
            continue;
        }
        let positive = v > 0.0;
        if let Some((j, was_positive)) = last {
            if was_positive != positive {
                out.push(SignChange {
                    from: j,
                    to: i,
                    direction: if was_positive {
                        Direction::PlusToMinus
                    } else {
                        Direction::MinusToPlus
                    },
                });
            }
        }
        last = Some((i, positive));
    }
    out
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
                .collect()
        }
    }
}
