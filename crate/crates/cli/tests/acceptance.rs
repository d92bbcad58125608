//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines always
//! print.

use std::time::{Duration, Instant};

use optmatch::commands::lemma;
use optmatch::commands::scaling;
use optmatch::config::{ExperimentConfig, Subcommand};
use optmatch::parallel::{ensemble, map_trials};
use optmatch_core::assignment::{cost_matrix, match_bruteforce, match_lp, match_solver};
use optmatch_core::binomial::{binomial_fourth_central_moment, moment_bounds};
use optmatch_core::dual::{dual_lower_bound, lower_bound_functional, DualPotential};
use optmatch_core::dyadic::{
    block_map_defect, block_map_symmetrized_defect, build_tree, couple_two_clouds, HierarchicalMap,
};
use optmatch_core::geometry::{rng_from_seed, sample_pair, sample_uniform};
use optmatch_core::stats::{linear_regression, Moments};
use rand::Rng;

const CLOSED_FORM_SE: f64 = 3.0;
const BIRKHOFF_TOL: f64 = 1e-9;
const SANDWICH_PROBES: usize = 100_000;
const SHAPE_RATIO_MAX: f64 = 4.0;
const SLOPE_FRACTION: f64 = 0.1;
const PUSHFORWARD_TOL: f64 = 1e-12;
const MOMENT_SE: f64 = 4.0;
const FOURTH_MOMENT_TOL: f64 = 1e-9;
const GAIN_SE: f64 = 4.0;
const QUADRATIC_CONSTANT: f64 = 4.0;
const QUARTIC_EXPONENT: (f64, f64) = (3.5, 4.5);
const GRADIENT_TOL: f64 = 1e-4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn solver_cost(n: usize, dim: usize, seed: u64) -> optmatch_core::Result<f64> {
    let (x, y) = sample_pair(n, 1.0, dim, seed)?;
    Ok(match_solver(&cost_matrix(&x, &y)?)?.cost)
}

fn closed_form_1d() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1usize, 2, 10, 100] {
        let e = ensemble(1_000 + n as u64, 10_000, |_, s| solver_cost(n, 1, s)).unwrap();
        let exact = 1.0 / (3.0 * (n as f64 + 1.0));
        let z = (e.mean() - exact) / e.stderr();
        pass &= z.abs() <= CLOSED_FORM_SE;
        parts.push(format!("N={n} z={z:+.2}"));
    }
    outcome(pass, parts.join(", "))
}

fn birkhoff() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let n = 1 + (i % 6) as usize;
        let dim = 1 + (i % 3) as usize;
        let (x, y) = sample_pair(n, 1.0, dim, 2_000 + i).unwrap();
        let c = cost_matrix(&x, &y).unwrap();
        let s = match_solver(&c).unwrap().cost;
        let lp = match_lp(&c).unwrap().cost;
        let bf = match_bruteforce(&c).unwrap().cost;
        worst = worst.max((lp - s).abs()).max((bf - s).abs());
    }
    outcome(worst <= BIRKHOFF_TOL, format!("200 instances, max |difference| = {worst:.2e}"))
}

fn sandwich() -> Outcome {
    let rows = map_trials(3_000, 100, |_, seed| {
        let (x, y) = sample_pair(64, 1.0, 2, seed)?;
        let p = DualPotential::full(build_tree(&x)?);
        lower_bound_functional(&x, &p, SANDWICH_PROBES, seed)?;
        let lower = dual_lower_bound(&x, &y, &p)?.bound;
        let tx = HierarchicalMap::new(build_tree(&x)?);
        let ty = HierarchicalMap::new(build_tree(&y)?);
        let upper = couple_two_clouds(&tx, &ty)?.cost;
        let opt = match_solver(&cost_matrix(&x, &y)?)?.cost;
        Ok((lower, opt, upper))
    })
    .unwrap();
    let violations = rows.iter().filter(|(l, o, u)| !(l <= o && o <= u)).count();
    let mean = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    outcome(
        violations == 0,
        format!(
            "{violations} violations in 100; mean lower {:.3e} <= optimal {:.3e} <= coupling {:.3e}",
            mean(|r| r.0),
            mean(|r| r.1),
            mean(|r| r.2)
        ),
    )
}

fn scaling_config(dim: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        subcommand: Subcommand::Scaling,
        n: vec![1 << 6, 1 << 8, 1 << 10, 1 << 12],
        dim,
        side: 1.0,
        trials: vec![200, 200, 100, 30],
        seed,
        probes: None,
        method: None,
        cloud: None,
        x_file: None,
        y_file: None,
        theta: None,
        constant: None,
        output: None,
        summary: None,
    }
}

fn per_point(r: &scaling::ScalingResult) -> String {
    r.points
        .iter()
        .map(|p| format!("{:.4}", p.constant))
        .collect::<Vec<_>>()
        .join(", ")
}

fn scaling_2d() -> Outcome {
    let r = scaling::compute(&scaling_config(2, 4_000)).unwrap();
    let fit = r.fit.as_ref().unwrap();
    outcome(
        fit.ratio <= SHAPE_RATIO_MAX,
        format!("c(N) = [{}], max/min = {:.3}", per_point(&r), fit.ratio),
    )
}

fn scaling_3d() -> Outcome {
    let r = scaling::compute(&scaling_config(3, 5_000)).unwrap();
    let fit = r.fit.as_ref().unwrap();
    let limit = SLOPE_FRACTION * fit.mean_constant;
    outcome(
        fit.slope_vs_ln_n.abs() <= limit,
        format!(
            "c(N) = [{}], slope vs ln N = {:+.4}, allowed +-{:.4}",
            per_point(&r),
            fit.slope_vs_ln_n,
            limit
        ),
    )
}

fn pushforward() -> Outcome {
    let mut rng = rng_from_seed(6_000);
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let dim = 1 + (t % 3) as usize;
        let n = rng.random_range(1..=256usize);
        let side = 0.5 + 2.0 * rng.random::<f64>();
        let x = sample_uniform(n, side, dim, 6_100 + t).unwrap();
        let map = HierarchicalMap::new(build_tree(&x).unwrap());
        let target = side.powi(dim as i32) / n as f64;
        for i in 0..n {
            worst = worst.max((map.preimage_volume_product(i) - target).abs() / target);
        }
    }
    outcome(worst <= PUSHFORWARD_TOL, format!("50 trees, max relative error = {worst:.2e}"))
}

fn lemma_moments() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, theta) in [(1_000usize, 0.125), (10_000, 0.5)] {
        let cfg = ExperimentConfig {
            subcommand: Subcommand::LemmaCheck,
            n: vec![n],
            dim: 2,
            trials: vec![1_000],
            seed: 7_000,
            ..scaling_config(2, 0)
        };
        let samples = lemma::counts(n, theta, &cfg, 1_000).unwrap();
        let e = lemma::entry(&samples, 10.0).unwrap();
        let zm = (e.mean - e.expected_mean) / e.mean_stderr;
        let zv = (e.variance - e.expected_variance) / e.variance_stderr;
        pass &= zm.abs() <= MOMENT_SE && zv.abs() <= MOMENT_SE;
        parts.push(format!("(N={n}, theta={theta}) z_mean={zm:+.2} z_var={zv:+.2}"));
    }
    let mut fourth_ok = true;
    for n in 1..=1_000usize {
        for theta in [0.125, 0.25, 0.5] {
            let bound = moment_bounds(n, theta).unwrap().2;
            fourth_ok &= binomial_fourth_central_moment(n, theta) <= bound * (1.0 + FOURTH_MOMENT_TOL);
        }
    }
    parts.push(format!("fourth-moment bound for N <= 1000: {}", if fourth_ok { "holds" } else { "violated" }));
    outcome(pass && fourth_ok, parts.join(", "))
}

fn level_gain() -> Outcome {
    let n = 256;
    let gains = map_trials(8_000, 200, |_, seed| {
        let p = DualPotential::full(build_tree(&sample_uniform(n, 1.0, 2, seed)?)?);
        Ok(p.level_gains())
    })
    .unwrap();
    let tree = build_tree(&sample_uniform(n, 1.0, 2, 0).unwrap()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..=tree.k_star() {
        let m: Moments = gains.iter().map(|g| g[k - 1]).collect();
        let lk = tree.l_k(k);
        let claimed = 2.0 * lk * lk * (1usize << (k - 1)) as f64 / n as f64;
        let z = (m.mean() - claimed) / m.stderr();
        pass &= z.abs() <= GAIN_SE;
        parts.push(format!("k={k} ratio={:.3}", m.mean() / claimed));
    }
    outcome(pass, format!("observed / claimed: {}", parts.join(", ")))
}

fn block_laws() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..=20 {
        let rho = i as f64 / 10.0;
        let dev = (rho - 1.0) * (rho - 1.0);
        if dev > 0.0 {
            worst = worst.max(block_map_defect(rho).unwrap() / dev);
        }
    }
    let eps = [0.05f64, 0.1, 0.2];
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = eps
        .iter()
        .map(|e| block_map_symmetrized_defect(1.0 + e).unwrap().ln())
        .collect();
    let (exponent, _) = linear_regression(&lx, &ly).unwrap();
    let pass = worst <= QUADRATIC_CONSTANT && (QUARTIC_EXPONENT.0..=QUARTIC_EXPONENT.1).contains(&exponent);
    outcome(pass, format!("max defect / (rho-1)^2 = {worst:.4}, quartic exponent = {exponent:.3}"))
}

/// Largest gradient error over 100 random points, normalized by
/// `max(|grad Phi(x)|, 1e-3 sup |grad Phi|)`, with central differences of
/// step `h`.
fn gradient_error(p: &DualPotential, h: f64, seed: u64) -> f64 {
    let dim = p.tree().dim();
    let floor = 1e-3 * p.sup_grad();
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = (0..dim).map(|_| h + (1.0 - 2.0 * h) * rng.random::<f64>()).collect();
        let (_, g) = p.eval(&x);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(floor);
        let mut diff = 0.0;
        for i in 0..dim {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (p.eval(&a).0 - p.eval(&b).0) / (2.0 * h);
            diff += (fd - g[i]) * (fd - g[i]);
        }
        worst = worst.max(diff.sqrt() / norm);
    }
    worst
}

fn gradient_check() -> Outcome {
    let configs = [(1usize, 40usize), (1, 256), (2, 64), (2, 256), (3, 64), (3, 256)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (c, &(dim, n)) in configs.iter().enumerate() {
        let seed = 9_000 + c as u64;
        let p = DualPotential::full(build_tree(&sample_uniform(n, 1.0, dim, seed).unwrap()).unwrap());
        let h = 1e-5 * p.tree().side();
        let e = gradient_error(&p, h, seed);
        // a tenth of the step separates truncation error, which drops 100x,
        // from a wrong gradient, which does not
        let e10 = gradient_error(&p, h / 10.0, seed);
        pass &= e <= GRADIENT_TOL;
        parts.push(format!("d={dim} N={n}: {e:.2e} ({e10:.2e} at step/10)"));
    }
    outcome(pass, parts.join(", "))
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("d=1 closed form", Duration::from_secs(120), closed_form_1d),
        ("Birkhoff equivalence", Duration::from_secs(30), birkhoff),
        ("sandwich", Duration::from_secs(300), sandwich),
        ("d=2 scaling shape", Duration::from_secs(1800), scaling_2d),
        ("d=3 boundedness", Duration::from_secs(1800), scaling_3d),
        ("pushforward exactness", Duration::from_secs(10), pushforward),
        ("box-count moments", Duration::from_secs(60), lemma_moments),
        ("per-level dual gain", Duration::from_secs(300), level_gain),
        ("block-map laws", Duration::from_secs(10), block_laws),
        ("gradient check", Duration::from_secs(10), gradient_check),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!(
            "criterion {id:>2} {verdict} {name}: {} [{secs:.1}s of {}s]",
            o.detail,
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
