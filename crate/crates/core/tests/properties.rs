use std::collections::VecDeque;
use std::sync::OnceLock;

use proptest::prelude::*;

use gffperc::field::ScalarField;
use gffperc::greens::highdim::{eigen_range, gprime, gprime_matrix};
use gffperc::greens::{highdim_scalars, GreenTable, KilledGreen};
use gffperc::harness::csvio::{read_rows, write_rows, CurveRow};
use gffperc::harness::ExperimentSpec;
use gffperc::lattice::{block_anchor, boundaries, neighbors};
use gffperc::perc::{crossing, excursion_set, label_clusters, BinaryConfig};
use gffperc::renorm::{
    certify_from_seed, generic_recursion, p0_upper_bound, Monotonicity, RenormConfig, SeedSource,
};
use gffperc::{LatticeBox, Point, PointSet, Window};

fn point3() -> impl Strategy<Value = Point> {
    prop::array::uniform3(-3i64..=3).prop_map(|c| Point::new(c.to_vec()))
}

fn small_set() -> impl Strategy<Value = PointSet> {
    prop::collection::hash_set(point3(), 1..30)
}

fn table3() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| GreenTable::new(3, 1e-11).unwrap())
}

fn table10() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| GreenTable::new(10, 1e-11).unwrap())
}

fn cube(side: u64) -> Window {
    Window::new(LatticeBox::attached(&Point::origin(3), side))
}

// plain breadth-first search, nearest-neighbour adjacency
fn bfs_components(w: &Window, bits: &[bool]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; w.len()];
    let mut next = 0;
    for s in 0..w.len() {
        if !bits[s] || comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        let mut q = VecDeque::from([s]);
        while let Some(i) = q.pop_front() {
            for nb in neighbors(&w.point(i), false) {
                if let Some(j) = w.index(&nb) {
                    if bits[j] && comp[j] == usize::MAX {
                        comp[j] = next;
                        q.push_back(j);
                    }
                }
            }
        }
        next += 1;
    }
    comp
}

proptest! {
    #[test]
    fn boundaries_sit_on_either_side(k in small_set()) {
        let (inner, outer) = boundaries(&k);
        for x in &inner {
            prop_assert!(k.contains(x));
            prop_assert!(neighbors(x, false).iter().any(|y| !k.contains(y)));
        }
        for y in &outer {
            prop_assert!(!k.contains(y));
            prop_assert!(neighbors(y, false).iter().any(|x| inner.contains(x)));
        }
        for x in &k {
            if !inner.contains(x) {
                prop_assert!(neighbors(x, false).iter().all(|y| k.contains(y)));
            }
        }
    }

    #[test]
    fn attached_boxes_partition_a_window(side in 1u64..5, lo in prop::array::uniform3(-6i64..=6), ext in prop::array::uniform3(1i64..=7)) {
        let hi: Vec<i64> = lo.iter().zip(&ext).map(|(l, e)| l + e - 1).collect();
        let bx = LatticeBox::new(Point::new(lo.to_vec()), Point::new(hi)).unwrap();
        for p in bx.points() {
            let a = block_anchor(&p, side);
            let b = LatticeBox::attached(&a, side);
            prop_assert!(b.contains(&p));
            prop_assert!(a.coords().iter().all(|c| c.rem_euclid(side as i64) == 0));
            // no other anchor within reach claims p
            for q in neighbors(&a, true) {
                let other = LatticeBox::attached(&Point::new(
                    a.coords().iter().zip(q.coords().iter().zip(a.coords())).map(|(ac, (qc, _))| ac + (qc - ac) * side as i64).collect()
                ), side);
                prop_assert!(!other.contains(&p));
            }
        }
    }

    #[test]
    fn monotone_coupling(values in prop::collection::vec(-3.0f64..3.0, 125), h1 in -2.0f64..2.0, dh in 0.0f64..2.0) {
        let w = cube(5);
        let f = ScalarField::new(w.clone(), values);
        let lo = excursion_set(&f, h1);
        let hi = excursion_set(&f, h1 + dh);
        prop_assert!(hi.dominated_by(&lo));
        let inner = LatticeBox::new(Point::new(vec![2; 3]), Point::new(vec![2; 3])).unwrap();
        if crossing(&hi, &inner, w.bounds()).unwrap() {
            prop_assert!(crossing(&lo, &inner, w.bounds()).unwrap());
        }
    }

    #[test]
    fn clusters_match_bfs(bits in prop::collection::vec(any::<bool>(), 216)) {
        let w = cube(6);
        let cfg = BinaryConfig { window: w.clone(), bits: bits.clone(), level: 0.0 };
        let lab = label_clusters(&cfg, false);
        let comp = bfs_components(&w, &bits);
        let n_comp = comp.iter().filter(|&&c| c != usize::MAX).max().map_or(0, |m| m + 1);
        prop_assert_eq!(lab.len(), n_comp);
        for i in 0..w.len() {
            prop_assert_eq!(lab.labels[i].is_some(), bits[i]);
            for j in (i + 1..w.len()).step_by(7) {
                if bits[i] && bits[j] {
                    prop_assert_eq!(lab.same_cluster(i, j), comp[i] == comp[j]);
                }
            }
        }
        let total: usize = lab.clusters.iter().map(|c| c.1).sum();
        prop_assert_eq!(total, cfg.open_count());
    }

    #[test]
    fn csv_round_trip(rows in prop::collection::vec((3usize..8, 1u64..200, -5.0f64..5.0, 1u64..10_000, any::<u64>(), 0.0f64..1.0, 0.0f64..0.5), 0..12)) {
        let rows: Vec<CurveRow> = rows
            .into_iter()
            .map(|(d, l, h, n, seed, estimate, se)| CurveRow { d, l, h, n, seed, estimate, se })
            .collect();
        let text = write_rows(&rows).unwrap();
        prop_assert_eq!(read_rows(&text).unwrap(), rows);
    }

    #[test]
    fn spec_round_trip(seed in any::<u64>(), workers in 0usize..16, params in prop::collection::btree_map("[a-z][a-z0-9-]{0,8}", "[A-Za-z0-9.,:;-]{1,12}", 0..8)) {
        let mut s = ExperimentSpec::new("exp", "estimate", seed);
        s.workers = workers;
        for (k, v) in &params {
            if !ExperimentSpec::is_reserved(k) {
                s.set(k, v).unwrap();
            }
        }
        let back = ExperimentSpec::parse(&s.to_text()).unwrap();
        prop_assert_eq!(back.hash(), s.hash());
        prop_assert_eq!(back, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strong_markov_identity(u in prop::collection::hash_set(prop::array::uniform3(0i64..=4).prop_map(|c| Point::new(c.to_vec())), 2..40), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let kg = KilledGreen::from_set(&u).unwrap();
        let pts: Vec<Point> = { let mut v: Vec<Point> = u.iter().cloned().collect(); v.sort(); v };
        let x = i.get(&pts);
        let y = j.get(&pts);
        let t = table3();
        let lhs = t.between(x, y).unwrap() - kg.value(x, y).unwrap();
        let mut rhs = 0.0;
        let mut mass = 0.0;
        for (z, p) in kg.exit_distribution(x).unwrap() {
            prop_assert!(!u.contains(&z));
            rhs += p * t.between(&z, y).unwrap();
            mass += p;
        }
        prop_assert!((mass - 1.0).abs() < 1e-6, "exit mass {}", mass);
        prop_assert!((lhs - rhs).abs() < 1e-6, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn gprime_is_psd_and_bounded(a in prop::collection::hash_set(prop::array::uniform3(0i64..=3).prop_map(|c| Point::new(c.to_vec())), 1..=64)) {
        let s = highdim_scalars(10).unwrap();
        let pts: Vec<Point> = a.into_iter().collect();
        let m = gprime_matrix(table10(), &s, &pts).unwrap();
        let (lo, hi) = eigen_range(&m);
        prop_assert!(lo >= -1e-8, "min eigenvalue {}", lo);
        prop_assert!(hi <= s.rho_bound + 1e-9, "spectral radius {} > {}", hi, s.rho_bound);
    }

    #[test]
    fn large_seeds_certify(h0 in 16.0f64..60.0) {
        let cfg = RenormConfig::with_defaults(3, 10, 100, h0).unwrap();
        let p0 = p0_upper_bound(&cfg).unwrap().bound;
        let tr = certify_from_seed(&cfg, p0, SeedSource::Analytic, 20).unwrap();
        prop_assert!(tr.valid);
        prop_assert!(tr.flags.seed_condition && tr.flags.k_at_least_k0_minus_b);
        prop_assert!(tr.flags.h_increasing && tr.h_n.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(tr.h_infinity >= h0);
    }

    #[test]
    fn generic_first_step(q0 in 0.0f64..1.0, h0 in 0.0f64..20.0, dec in any::<bool>()) {
        let cfg = RenormConfig::with_defaults(3, 10, 100, h0).unwrap();
        let dir = if dec { Monotonicity::Decreasing } else { Monotonicity::Increasing };
        let tr = generic_recursion(&cfg, q0, dir, 3).unwrap();
        let gap = cfg.beta(0).unwrap() - cfg.m_term(0).unwrap();
        let q1 = q0 * q0 + 3.0 * (-gap * gap).exp();
        prop_assert!((tr.q[1] - q1).abs() <= 1e-12 * q1.max(1e-300), "{} vs {}", tr.q[1], q1);
        if dec {
            prop_assert!(tr.levels.windows(2).all(|w| w[0] >= w[1]));
        } else {
            prop_assert!(tr.levels.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

#[test]
fn gprime_diagonal_is_nonnegative() {
    for d in 6..=40 {
        let s = highdim_scalars(d).unwrap();
        let t = GreenTable::new(d, 1e-11).unwrap();
        assert!(gprime(&t, &s, &Point::origin(3)).unwrap() >= 0.0, "d = {d}");
    }
}
