//! Checks against independently computed reference values.

use gffperc::greens::potential::mc_hitting_probability;
use gffperc::greens::{equilibrium_and_capacity, highdim_scalars, kappa, GreenTable};
use gffperc::lattice::ball;
use gffperc::renorm::{
    descendant_counts, p0_upper_bound, slab_condition, slab_pipeline, tree_counts, vtilde, ConstantsLedger,
    RenormConfig,
};
use gffperc::rng::StreamKey;
use gffperc::field::{FieldSampler, SpectralSampler};
use gffperc::{LatticeBox, Point, PointSet};

fn set(pts: Vec<Point>) -> PointSet {
    pts.into_iter().collect()
}

// slab condition recomputed from κ alone
fn slab_lhs(d: usize, h0: f64, big_l0: u64) -> f64 {
    let k = kappa(d).unwrap();
    let rho = 2.0 * (1.0 - k) / (2.0 - k) / k;
    (2.0 * big_l0 as f64).powi(3) * vtilde(h0 * h0 / (2.0 * rho)).powf(0.25)
}

#[test]
fn d0_matches_a_linear_scan() {
    let r = slab_pipeline(0.25, 2, 0.3116).unwrap();
    assert_eq!(r.d0, 7617);
    for d in r.d0 - 15..r.d0 + 15 {
        let ok = slab_lhs(d, 0.25, 2) <= 1.0 / 40.0;
        assert_eq!(ok, d >= r.d0, "d = {d}");
        let from_lib = slab_condition(d, 0.25, 2).unwrap().unwrap();
        assert!((from_lib.exp() - slab_lhs(d, 0.25, 2)).abs() < 1e-12);
    }
    // far below d0 the condition fails everywhere on a coarse scan
    for d in (6..r.d0).step_by(500) {
        assert!(slab_lhs(d, 0.25, 2) > 1.0 / 40.0, "d = {d}");
    }
}

#[test]
fn e_max_bounds_the_sampled_maximum() {
    let cfg = RenormConfig::with_defaults(3, 10, 100, 16.0).unwrap();
    let b = p0_upper_bound(&cfg).unwrap();
    assert!((b.e_max - 5.8354).abs() < 1e-3, "{}", b.e_max);
    let k = LatticeBox::attached(&Point::new(vec![-10; 3]), 30);
    let sampler = SpectralSampler::new(k.enlarge(15));
    let key = StreamKey::new(3, 99);
    let maxima: Vec<f64> = (0..30)
        .map(|i| {
            let f = sampler.sample(&key, i).restrict(&k).unwrap();
            f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mean = maxima.iter().sum::<f64>() / maxima.len() as f64;
    assert!(mean < b.e_max, "mean max {mean} vs {}", b.e_max);
    assert!(maxima.iter().all(|&m| m < 16.0));
}

#[test]
fn tree_counts_stay_within_the_bound() {
    for l0 in 3..=6u64 {
        let c0 = ConstantsLedger::defaults(3, 1, l0).unwrap().get("c0").unwrap();
        for n in 0..=2 {
            let t = tree_counts(3, 1, l0, n, c0, 2, 1 << 22).unwrap();
            assert_eq!(t.within_bound, Some(true), "l0 = {l0}, n = {n}");
            assert!(t.log_exact.unwrap() <= t.log_bound + 1e-9);
        }
        let c = descendant_counts(3, 1, l0, 1).unwrap();
        assert_eq!(c.h1, (l0.pow(3) - (l0 - 2).pow(3)).into());
    }
}

#[test]
fn box_capacity_grows_like_l_to_the_d_minus_2() {
    let t = GreenTable::new(3, 1e-11).unwrap();
    let sizes = [2u64, 4, 8, 16];
    let caps: Vec<f64> = sizes
        .iter()
        .map(|&l| {
            let e = equilibrium_and_capacity(&set(ball(&Point::origin(3), l)), &t, 0.5 * l as f64).unwrap();
            assert!(e.error <= 0.05 * e.capacity, "L = {l}: {} ± {}", e.capacity, e.error);
            e.capacity
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&l| (l as f64).ln()).collect();
    let ys: Vec<f64> = caps.iter().map(|c| c.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 1.0).abs() <= 0.2, "exponent {slope}, caps {caps:?}");
    for w in caps.windows(2) {
        assert!(w[0] < w[1]);
    }
    // fitted constant cap / L
    for (c, l) in caps.iter().zip(sizes) {
        assert!(c / (l as f64) < 4.0, "cap {c} at L = {l}");
    }
}

#[test]
fn capacity_is_subadditive_and_monotone() {
    let t = GreenTable::new(3, 1e-11).unwrap();
    let a = set(ball(&Point::origin(3), 1));
    let b = set(ball(&Point::new(vec![3, 1, 0]), 1));
    let ab: PointSet = a.union(&b).cloned().collect();
    let cap = |k: &PointSet| equilibrium_and_capacity(k, &t, 1e-6).unwrap().capacity;
    assert!(cap(&ab) <= cap(&a) + cap(&b) + 1e-9);
    assert!(cap(&ab) >= cap(&a).max(cap(&b)) - 1e-9);
}

#[test]
fn hitting_probability_agrees_with_walks() {
    let t = GreenTable::new(3, 1e-11).unwrap();
    let k = set(ball(&Point::origin(3), 1));
    let e = equilibrium_and_capacity(&k, &t, 1e-6).unwrap();
    for x in [Point::new(vec![3, 0, 0]), Point::new(vec![2, 2, 1])] {
        let exact = e.hitting_probability(&x, &t).unwrap();
        let mc = mc_hitting_probability(&k, &x, 4000, 25.0, e.capacity, 17).unwrap();
        assert!((mc.value - exact).abs() <= 3.0 * mc.se + 0.01, "{x:?}: {} ± {} vs {exact}", mc.value, mc.se);
    }
}

#[test]
fn kappa_table() {
    let ks: Vec<f64> = (6..=30).map(|d| kappa(d).unwrap()).collect();
    for w in ks.windows(2) {
        assert!(w[0] < w[1]);
    }
    // d²(κ - 1 + 7/(2d)) tends to -1/2 from below
    let mut prev = f64::NEG_INFINITY;
    for d in [20usize, 50, 100, 200] {
        let df = d as f64;
        let c = (kappa(d).unwrap() - (1.0 - 3.5 / df)) * df * df;
        assert!(c < -0.5 && c > -0.5 - 3.5 / df, "d = {d}: {c}");
        assert!(c > prev);
        prev = c;
    }
    let s = highdim_scalars(100).unwrap();
    let dr = 100.0 * s.rho_bound;
    assert!((6.0..=8.0).contains(&dr), "{dr}");
}
