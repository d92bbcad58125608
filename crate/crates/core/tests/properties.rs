use optmatch_core::assignment::{cost_matrix, match_bruteforce, match_solver};
use optmatch_core::binomial::count_in_box;
use optmatch_core::dyadic::{build_tree, HierarchicalMap};
use optmatch_core::geometry::{rng_from_seed, sample_pair, sample_uniform, DyadicBox};
use optmatch_core::stats::run_ensemble;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

#[test]
fn box_counts_follow_the_binomial_law() {
    let n = 12;
    let q = DyadicBox::new(vec![1, 1], vec![0, 1]).unwrap();
    let theta = q.volume_fraction();
    assert_eq!(theta, 0.25);
    let seeds = 100_000u64;
    let mut observed = vec![0u64; n + 1];
    for s in 0..seeds {
        let x = sample_uniform(n, 1.0, 2, 1_000_000 + s).unwrap();
        observed[count_in_box(&x, &q).unwrap().n_q] += 1;
    }
    // pool the upper tail so every bin expects at least 5 counts
    let law = Binomial::new(theta, n as u64).unwrap();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for k in 0..=n {
        acc.0 += observed[k] as f64;
        acc.1 += law.pmf(k as u64) * seeds as f64;
        if acc.1 >= 5.0 && tail(&law, k + 1, n) * seeds as f64 >= 5.0 {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    let last = bins.last_mut().unwrap();
    last.0 += acc.0;
    last.1 += acc.1;
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    assert!(p > 1e-3, "chi2 = {stat} on {df} dof, p = {p}");
}

fn tail(law: &Binomial, from: usize, n: usize) -> f64 {
    (from as u64..=n as u64).map(|k| law.pmf(k)).sum()
}

#[test]
fn one_dimensional_closed_form() {
    for (n, t) in [(1usize, 10_000usize), (2, 10_000), (10, 10_000), (100, 10_000)] {
        let e = run_ensemble(5 + n as u64, t, |_, seed| {
            let (x, y) = sample_pair(n, 1.0, 1, seed)?;
            match_solver(&cost_matrix(&x, &y)?).map(|p| p.cost)
        })
        .unwrap();
        let exact = 1.0 / (3.0 * (n as f64 + 1.0));
        assert!((e.mean() - exact).abs() <= 3.0 * e.stderr(), "N={n}: {} vs {exact}", e.mean());
    }
}

#[test]
fn costs_scale_with_the_square_of_the_side() {
    for seed in 0..20u64 {
        let (x, y) = sample_pair(40, 1.0, 2, seed).unwrap();
        let base = match_solver(&cost_matrix(&x, &y).unwrap()).unwrap().cost;
        let map = HierarchicalMap::new(build_tree(&x).unwrap()).cost();
        for lambda in [0.5, 3.0] {
            let (xs, ys) = (x.scaled(lambda).unwrap(), y.scaled(lambda).unwrap());
            let scaled = match_solver(&cost_matrix(&xs, &ys).unwrap()).unwrap().cost;
            assert!((scaled - lambda * lambda * base).abs() <= 1e-12 * scaled);
            let m = HierarchicalMap::new(build_tree(&xs).unwrap()).cost();
            assert!((m - lambda * lambda * map).abs() <= 1e-12 * m);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabelling_does_not_change_the_cost(n in 1usize..=7, dim in 1usize..=3, seed: u64) {
        let (x, y) = sample_pair(n, 1.0, dim, seed).unwrap();
        let base = match_bruteforce(&cost_matrix(&x, &y).unwrap()).unwrap().cost;
        let mut rng = rng_from_seed(seed ^ 0x5555);
        let mut a: Vec<usize> = (0..n).collect();
        let mut b = a.clone();
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let c = cost_matrix(&x.permuted(&a), &y.permuted(&b)).unwrap();
        prop_assert!((match_bruteforce(&c).unwrap().cost - base).abs() <= 1e-12);
        prop_assert!((match_solver(&c).unwrap().cost - base).abs() <= 1e-12);
    }
}
