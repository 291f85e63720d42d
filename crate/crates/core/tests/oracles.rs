//! Agreement with independent oracles: a plain trapezoid rule for Gaussian
//! expectations, dense brute-force scans, Monte Carlo with its own sampler,
//! and reference values computed offline with an unrelated toolchain.

use fracrule_core::calibration::hardest_objective;
use fracrule_core::numerics::{linspace, QuadratureConfig};
use fracrule_core::regret::{
    bayes_msr_two_point, mean_regret, mean_square_regret, regret_distribution, regret_surface, subproblem_worst_case,
    worst_case_msr, StatePoint, SurfaceGrid,
};
use fracrule_core::rho::{rho, rho_prime, rho_shifted, rho_shifted_with};
use fracrule_core::rules::{mean_regret_rule, msr_optimal_rule, point_id_rule, SubproblemSpec, TreatmentRule};
use fracrule_core::{solve_a_star, tau_star, OptimizerConfig, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// Trapezoid rule for E[f(Y)], Y ~ N(mean, 1), on mean +- half_width. For
// integrands analytic in a strip this converges geometrically in 1/step.
fn trapezoid_expectation<F: Fn(f64) -> f64>(f: F, mean: f64, step: f64, half_width: f64) -> f64 {
    let n = (half_width / step).round() as i64;
    let mut s = 0.0;
    for i in -n..=n {
        let z = i as f64 * step;
        let w = if i.abs() == n { 0.5 } else { 1.0 };
        s += w * f(mean + z) * (-0.5 * z * z).exp();
    }
    s * step * INV_SQRT_2PI
}

fn weight_sq(slope: f64, y: f64) -> f64 {
    let w = 1.0 / (1.0 + (2.0 * slope * y).exp());
    w * w
}

fn oracle_rho_shifted(slope: f64, center: f64) -> f64 {
    trapezoid_expectation(|y| weight_sq(slope, y), center, 0.02, 12.0)
}

#[test]
fn rho_matches_trapezoid_oracle() {
    for slope in [0.05, 0.3, 0.8, 1.23, 2.0, 4.0] {
        for center in [-3.0, -0.5, 0.0, 0.4, 1.23, 5.0] {
            let q = rho_shifted(slope, center).unwrap();
            let o = oracle_rho_shifted(slope, center);
            assert!((q - o).abs() < 1e-11, "slope {slope}, center {center}: {q} vs {o}");
        }
    }
}

#[test]
fn rho_matches_monte_carlo_at_half() {
    let a = 0.5;
    let n = 10_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let v = weight_sq(a, a + z);
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    let q = rho(a).unwrap();
    assert!((q - mean).abs() < 3.0 * se, "{q} vs {mean} +- {se}");
}

#[test]
fn tau_star_reference_values() {
    let t = tau_star().unwrap();
    assert!((t.tau_star - 1.228_141_128).abs() < 1e-7, "{t:?}");
    assert!((t.value - 0.119_878_993).abs() < 1e-9, "{t:?}");
    assert!((rho(t.tau_star).unwrap() - 0.079_477_9).abs() < 1e-7);
}

#[test]
fn tau_star_matches_dense_scan() {
    let n = 100_000;
    let ts = linspace(0.0, 3.0, n);
    let (arg, val) = ts
        .par_iter()
        .map(|&t| (t, t * t * trapezoid_expectation(|y| weight_sq(t, y), t, 0.1, 10.0)))
        .reduce(|| (0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let t = tau_star().unwrap();
    assert!((t.tau_star - arg).abs() < 1e-4, "{} vs {arg}", t.tau_star);
    assert!((t.value - val).abs() < 1e-9, "{} vs {val}", t.value);
}

#[test]
fn derivative_at_tau_star() {
    let t = tau_star().unwrap().tau_star;
    let lhs = rho_prime(t).unwrap();
    let rhs = -2.0 * rho(t).unwrap() / t;
    assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
}

#[test]
fn a_star_reference_table() {
    let table = [
        (0.1, 1.170_716_9, 0.140_694_59),
        (0.25, 1.088_188_8, 0.177_095_53),
        (1.0, 0.746_565_98, 0.474_131_23),
        (4.0, 0.248_404_63, 4.249_456_96),
        (10.0, 0.099_980_66, 25.249_983_8),
    ];
    for (ratio, a_ref, v_ref) in table {
        let spec = ProblemSpec::new(ratio, 1.0).unwrap();
        let r = solve_a_star(&spec, &OptimizerConfig::default()).unwrap();
        assert!((r.a_star - a_ref).abs() < 1e-7, "ratio {ratio}: {} vs {a_ref}", r.a_star);
        assert!((r.worst_case_msr - v_ref).abs() < 1e-7 * v_ref.max(1.0), "ratio {ratio}: {}", r.worst_case_msr);
    }
    for (ratio, a_ref) in [(20.0, 0.049_999_39), (100.0, 0.010_000_004_05)] {
        let spec = ProblemSpec::new(ratio, 1.0).unwrap();
        let r = solve_a_star(&spec, &OptimizerConfig::default()).unwrap();
        assert!((r.a_star - a_ref).abs() < 1e-8, "ratio {ratio}: {} vs {a_ref}", r.a_star);
    }
}

#[test]
fn a_star_matches_million_point_scan() {
    let t = tau_star().unwrap().tau_star;
    let n = 1_000_000;
    let step = t / (n - 1) as f64;
    let (arg, _) = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 * step;
            (a, (a + 1.0).powi(2) * trapezoid_expectation(|y| weight_sq(a, y), a, 0.1, 10.0))
        })
        .reduce(|| (0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let spec = ProblemSpec::new(1.0, 1.0).unwrap();
    let r = solve_a_star(&spec, &OptimizerConfig::default()).unwrap();
    assert!((r.a_star - arg).abs() < 1e-5, "{} vs {arg}", r.a_star);
    assert!(r.a_star < t);
    assert!(r.foc_residual.abs() < 1e-6);
}

#[test]
fn gaussian_mean_regret_rule_value() {
    // Phi(1 / sqrt(8/pi - 1)) by trapezoid integration of the density.
    let z = 1.0 / (8.0 / std::f64::consts::PI - 1.0).sqrt();
    let n = 200_000;
    let xs = linspace(-12.0, z, n);
    let h = xs[1] - xs[0];
    let phi = |x: f64| INV_SQRT_2PI * (-0.5 * x * x).exp();
    let oracle = h * (xs.iter().map(|&x| phi(x)).sum::<f64>() - 0.5 * (phi(xs[0]) + phi(z)));
    let rule = mean_regret_rule(&ProblemSpec::new(2.0, 1.0).unwrap());
    assert!((rule.evaluate(1.0).unwrap() - oracle).abs() < 1e-9);
}

#[test]
fn least_favorable_point_monte_carlo() {
    let spec = ProblemSpec::new(1.0, 1.0).unwrap();
    let rule = msr_optimal_rule(&spec).unwrap();
    let a = solve_a_star(&spec, &OptimizerConfig::default()).unwrap().a_star;
    let state = StatePoint::new(a, a + 1.0).unwrap();
    let quad = mean_square_regret(&rule, &state, 1.0).unwrap();
    let mc = regret_distribution(&rule, &state, 1.0, 1_000_000, 11).unwrap();
    let se = mc.mc_std_error.unwrap().mean_square_regret;
    assert!((mc.mean_square_regret - quad).abs() < 3.0 * se, "{} vs {quad} +- {se}", mc.mean_square_regret);
}

fn sample_rules(spec: &ProblemSpec) -> Vec<TreatmentRule> {
    vec![
        msr_optimal_rule(spec).unwrap(),
        point_id_rule(spec.sigma()).unwrap(),
        TreatmentRule::MeanRegretStep,
        TreatmentRule::MeanRegretGaussian { scale: 0.7 },
        TreatmentRule::ConstantHalf,
        TreatmentRule::CustomLogistic { slope_over_sigma: -0.4 },
    ]
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let spec = ProblemSpec::new(1.5, 0.8).unwrap();
    let rules = sample_rules(&spec);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..20 {
        let rule = rules[i % rules.len()];
        let theta_e = rng.random_range(-3.0..3.0);
        let state = StatePoint::new(theta_e, theta_e + spec.k() * rng.random_range(-1.0..=1.0)).unwrap();
        let mc = regret_distribution(&rule, &state, spec.sigma(), 200_000, 100 + i as u64).unwrap();
        let se = mc.mc_std_error.unwrap();
        let msr = mean_square_regret(&rule, &state, spec.sigma()).unwrap();
        let mr = mean_regret(&rule, &state, spec.sigma()).unwrap();
        // Four standard errors keeps the family of forty comparisons from
        // failing by chance; exact-zero variance cases compare directly.
        assert!((mc.mean_square_regret - msr).abs() <= 4.0 * se.mean_square_regret + 1e-12, "{rule:?} {state:?}");
        assert!((mc.mean_regret - mr).abs() <= 4.0 * se.mean_regret + 1e-12, "{rule:?} {state:?}");
        let identity = mc.mean_regret.powi(2) + mc.regret_variance;
        assert!((mc.mean_square_regret - identity).abs() <= 3.0 * se.mean_square_regret + 1e-12);
    }
}

#[test]
fn hardest_subproblem_dominates_grid() {
    for (k, sigma) in [(1.0, 1.0), (0.5, 2.0)] {
        let spec = ProblemSpec::new(k, sigma).unwrap();
        let a = solve_a_star(&spec, &OptimizerConfig::default()).unwrap().a_star;
        let hardest = sigma * sigma * hardest_objective(a, spec.ratio()).unwrap();
        let a_es = linspace(0.0, 3.0 * sigma, 50);
        let offsets = linspace(-1.0, 1.0, 50);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for &a_e in &a_es {
            for &s in &offsets {
                let sub = SubproblemSpec::new(a_e, a_e + k * s).unwrap();
                let v = subproblem_worst_case(&sub, &spec).unwrap();
                assert!(v <= hardest + 1e-12, "({a_e}, {s}): {v} > {hardest}");
                if v > best.0 {
                    best = (v, a_e, s);
                }
            }
        }
        let step = a_es[1] - a_es[0];
        assert_eq!(best.2, 1.0);
        assert!((best.1 - a * sigma).abs() <= step, "{best:?} vs a* sigma = {}", a * sigma);
        let at = subproblem_worst_case(&SubproblemSpec::new(a * sigma, a * sigma + k).unwrap(), &spec).unwrap();
        assert!((at - hardest).abs() < 1e-6);
    }
}

#[test]
fn informative_subproblem_closed_form() {
    // a_e / sigma = 2 exceeds tau*, so the slope is capped and the value is
    // (a_t sigma / a_e)^2 tau*^2 rho(tau*).
    let t = tau_star().unwrap();
    for sigma in [1.0, 0.5, 3.0] {
        let spec = ProblemSpec::new(2.0 * sigma, sigma).unwrap();
        let sub = SubproblemSpec::new(2.0 * sigma, 1.0).unwrap();
        let v = subproblem_worst_case(&sub, &spec).unwrap();
        assert!((v - t.value / 4.0).abs() < 1e-12, "sigma {sigma}: {v}");
    }
    let spec = ProblemSpec::new(1.0, 1.0).unwrap();
    let v = subproblem_worst_case(&SubproblemSpec::new(0.0, 1.0).unwrap(), &spec).unwrap();
    assert_eq!(v, 0.25);
}

#[test]
fn point_identified_worst_case() {
    let spec = ProblemSpec::new(0.0, 1.0).unwrap();
    let rule = point_id_rule(1.0).unwrap();
    let w = worst_case_msr(&rule, &spec).unwrap();
    let t = tau_star().unwrap();
    assert!(((w.value - t.value) / t.value).abs() < 1e-4, "{w:?}");
    assert!((w.value - 0.12).abs() < 0.005);
}

#[test]
fn two_point_bayes_examples() {
    let spec = ProblemSpec::new(1.0, 1.0).unwrap();
    let half = bayes_msr_two_point(&TreatmentRule::ConstantHalf, &spec, &StatePoint::new(0.0, 1.0).unwrap()).unwrap();
    assert_eq!(half, 0.25);
    let rule = msr_optimal_rule(&spec).unwrap();
    let theta = StatePoint::new(0.3, -0.4).unwrap();
    let b = bayes_msr_two_point(&rule, &spec, &theta).unwrap();
    assert!((b - mean_square_regret(&rule, &theta, 1.0).unwrap()).abs() < 1e-14);

    let a = solve_a_star(&spec, &OptimizerConfig::default()).unwrap().a_star;
    let lfp = bayes_msr_two_point(&rule, &spec, &StatePoint::new(a, a + 1.0).unwrap()).unwrap();
    let w = worst_case_msr(&rule, &spec).unwrap();
    assert!((lfp - w.value).abs() < 1e-8, "{lfp} vs {}", w.value);
    assert!((w.argmax.theta_e - a).abs() < 1e-3 && (w.argmax.theta_t - a - 1.0).abs() < 1e-3, "{w:?}");
}

#[test]
fn surface_stays_below_worst_case() {
    let spec = ProblemSpec::new(1.0, 1.0).unwrap();
    let rule = msr_optimal_rule(&spec).unwrap();
    let rows = regret_surface(&rule, &spec, &SurfaceGrid { min: -3.0, max: 3.0, points: 61 }).unwrap();
    let w = worst_case_msr(&rule, &spec).unwrap().value;
    let top = rows.iter().map(|r| r.msr).fold(0.0, f64::max);
    assert!(top <= w + 1e-10, "{top} vs {w}");
    assert!(top > 0.95 * w);
    let origin = rows.iter().find(|r| r.theta_e == 0.0 && r.theta_t == 0.0).unwrap();
    assert_eq!(origin.msr, 0.0);
    assert_eq!(origin.mean_regret, 0.0);
}

#[test]
fn tight_and_default_quadrature_agree() {
    let tight = QuadratureConfig::tight();
    for (s, c) in [(0.2, -1.0), (1.1, 0.3), (3.0, 2.0)] {
        let a = rho_shifted(s, c).unwrap();
        let b = rho_shifted_with(s, c, &tight).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
