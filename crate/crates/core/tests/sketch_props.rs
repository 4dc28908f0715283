use approx::assert_abs_diff_eq;
use unipolar::codec::AdaptVariant;
use unipolar::measures::{entropy_a, eta, make_spike, sparse_extreme, Dist};
use unipolar::polar_core::{polar_transform, SymbolBlock};
use unipolar::sketch::*;
use unipolar::storage::{is_nested, sample_iid, storage_set_exact, substream, StorageMethod, StorageSet};

fn spec(a: usize, eps: f64, n: usize, delta: f64, method: SketchMethod) -> SketchSpec {
    build_sketch_spec(a, eps, n, delta, method, StorageMethod::Exact, BrutParams::default()).unwrap()
}

#[test]
fn binary_known_and_pcp_agree() {
    let k = spec(2, 0.05, 16, 0.01, SketchMethod::KnownDist);
    let p = spec(2, 0.05, 16, 0.01, SketchMethod::Pcp);
    assert_eq!(k.storage.indices(), p.storage.indices());
    assert_abs_diff_eq!(k.eta, p.eta, epsilon = 1e-12);
}

#[test]
fn pcp_uses_eta() {
    let s = spec(3, 0.1, 8, 0.05, SketchMethod::Pcp);
    assert_abs_diff_eq!(s.eta, eta(3, 0.1).unwrap(), epsilon = 1e-12);
    assert_eq!(s.decode_dist, make_spike(3, 0, s.eta).unwrap());
    assert_eq!(s.m(), s.storage.len());
}

#[test]
fn sketch_examples() {
    let mut s = spec(2, 0.05, 2, 0.5, SketchMethod::KnownDist);
    s.storage = StorageSet::new(2, 2, 0.5, vec![0], s.storage.provenance()).unwrap();
    assert_eq!(sketch(&s, &SymbolBlock::new(2, vec![1, 0]).unwrap()).unwrap(), vec![1]);

    let mut s = spec(3, 0.1, 8, 0.05, SketchMethod::Pcp);
    let zero = SymbolBlock::zeros(3, 8).unwrap();
    assert!(sketch(&s, &zero).unwrap().iter().all(|&v| v == 0));
    assert_eq!(recover(&s, &vec![0; s.m()]).unwrap(), zero);
    s.storage = StorageSet::full(3, 8, 0.05).unwrap();
    let x = SymbolBlock::new(3, vec![2, 0, 1, 0, 0, 2, 1, 1]).unwrap();
    assert_eq!(sketch(&s, &x).unwrap(), polar_transform(&x).symbols());
    assert_eq!(recover(&s, &sketch(&s, &x).unwrap()).unwrap(), x);
    assert!(sketch(&s, &SymbolBlock::zeros(3, 4).unwrap()).is_err());
    assert!(recover(&s, &[0; 3]).is_err());
}

#[test]
fn binary_recovery_is_mostly_exact() {
    let s = spec(2, 0.05, 16, 0.01, SketchMethod::Pcp);
    let src = Dist::bernoulli(0.05).unwrap();
    let mut ok = 0;
    for t in 0..200 {
        let x = SymbolBlock::new(2, sample_iid(&src, 16, &mut substream(3, t))).unwrap();
        let y = sketch(&s, &x).unwrap();
        let xh = recover(&s, &y).unwrap();
        assert_eq!(sketch(&s, &xh).unwrap(), y);
        ok += usize::from(xh == x);
    }
    assert!(ok >= 190, "{ok}/200");
}

#[test]
fn measurement_formula_values() {
    assert_abs_diff_eq!(measurement_count_formula(2, 0.05, 1000).unwrap(), 286.397, epsilon = 1e-3);
    assert_abs_diff_eq!(
        measurement_count_formula(3, 0.1, 64).unwrap(),
        64.0 * entropy_a(&make_spike(3, 0, 0.1).unwrap()),
        epsilon = 1e-12
    );
}

#[test]
fn measurement_formula_per_sparse_entry_decreases_in_a() {
    // k = n eps held fixed while a grows.
    let (n, k) = (1usize << 20, 64.0);
    let ratios: Vec<f64> = [3usize, 101, 10007, 1000003]
        .iter()
        .map(|&a| measurement_count_formula(a, k / n as f64, n).unwrap() / k)
        .collect();
    for w in ratios.windows(2) {
        assert!(w[1] < w[0]);
    }
    // Exact evaluation tends to k, below the 2k of the leading-order estimate.
    let last = *ratios.last().unwrap();
    assert!(last > 1.0 && last < 2.0, "{ratios:?}");
}

#[test]
fn asymptotic_constant() {
    for a in [3usize, 5] {
        let c = |eps: f64| {
            let spike = make_spike(a, 0, (a - 1) as f64 * eps).unwrap();
            entropy_a(&spike) * (a as f64).ln() / (eps * (1.0 / eps).ln())
        };
        let target = (a - 1) as f64;
        // The correction decays like 1/ln(1/eps).
        assert!((c(1e-10) / target - 1.0).abs() < 0.05);
        assert!(c(1e-10) < c(1e-4) && c(1e-4) < c(1e-2));
        let rel = c(1e-4) / target - 1.0;
        assert_abs_diff_eq!(rel, 1.0 / (1e4f64).ln(), epsilon = 0.01);
        let pcp = make_spike(a, 0, eta(a, 1e-10).unwrap()).unwrap();
        let cp = entropy_a(&pcp) * (a as f64).ln() / (1e-10 * (1e10f64).ln());
        assert!((cp / target - 1.0).abs() < 0.05);
    }
}

#[test]
fn brut_binary_stops_at_epsilon() {
    let r = brut_univ_sketching(2, 0.05, 16, 0.01, BrutVariant::B, BrutParams::default(), StorageMethod::Exact).unwrap();
    assert_abs_diff_eq!(r.eta_star, 0.05, epsilon = 1e-12);
}

#[test]
fn brut_universality_nesting() {
    for eps in [0.05, 0.1, 0.2] {
        for n in [4, 8] {
            let a = brut_univ_sketching(3, eps, n, 0.05, BrutVariant::A, BrutParams::default(), StorageMethod::Exact).unwrap();
            let b = brut_univ_sketching(3, eps, n, 0.05, BrutVariant::B, BrutParams::default(), StorageMethod::Exact).unwrap();
            assert!(a.eta_star >= b.eta_star - 1e-12);
            assert!(a.eta_star <= a.eta_cp + 1e-12);
            for q in spa_hull_grid(3, eps, 4, false).unwrap() {
                let sq = storage_set_exact(&q, n, 0.05).unwrap();
                assert!(is_nested(&sq, &a.storage).unwrap(), "eps={eps} n={n} q={:?}", q.probs());
            }
        }
    }
}

#[test]
fn eta_star_shrinks_as_delta_shrinks() {
    for eps in [0.05, 0.1] {
        let mut prev = f64::INFINITY;
        for delta in [0.3, 0.1, 0.03, 0.01] {
            let r = brut_univ_sketching(3, eps, 8, delta, BrutVariant::B, BrutParams::default(), StorageMethod::Exact).unwrap();
            assert!(r.eta_star <= prev + 1e-12, "eps={eps} delta={delta}");
            prev = r.eta_star;
        }
    }
}

#[test]
fn dichotomic_search_agrees_with_scan() {
    let scan = brut_univ_sketching(3, 0.1, 8, 0.05, BrutVariant::B, BrutParams::default(), StorageMethod::Exact).unwrap();
    let params = BrutParams { dichotomic: true, ..BrutParams::default() };
    let bis = brut_univ_sketching(3, 0.1, 8, 0.05, BrutVariant::B, params, StorageMethod::Exact).unwrap();
    assert_eq!(scan.storage.indices(), bis.storage.indices());
    assert!(bis.eta_star >= scan.eta_star - 1e-12);
}

#[test]
fn hull_grid_dedup_keeps_orbit_representatives() {
    let all = spa_hull_grid(5, 0.1, 3, false).unwrap();
    let reps = spa_hull_grid(5, 0.1, 3, true).unwrap();
    assert!(reps.len() < all.len());
    let extreme = sparse_extreme(5, 0.1).unwrap();
    assert!(all.iter().any(|q| q.sup_distance(&extreme) < 1e-12));
    for q in &all {
        assert_abs_diff_eq!(q[0], 0.9, epsilon = 1e-12);
    }
}

#[test]
fn spec_persistence_round_trip() {
    let s = build_sketch_spec(
        3,
        0.1,
        64,
        0.01,
        SketchMethod::Pcp,
        StorageMethod::MonteCarlo { samples: 200, seed: 11, guard: 2.0 },
        BrutParams::default(),
    )
    .unwrap();
    let (pset, json) = save_spec(&s).unwrap();
    let back = load_spec(&pset, &json).unwrap();
    assert_eq!(back.storage.indices(), s.storage.indices());
    assert_eq!(back.eta, s.eta);
    assert_eq!(back.seed, Some(11));
    assert_eq!(back.decode_dist, s.decode_dist);
    assert!(load_spec(&pset, "{").is_err());
    assert!(load_spec(&pset[..10], &json).is_err());
}

#[test]
fn patched_recovery_identifies_the_source() {
    let base = spec(3, 0.05, 8, 0.1, SketchMethod::Pcp);
    let free = 8 - base.m();
    let patched = build_patched_spec(base, 0.05, 2, None).unwrap();
    assert_eq!(patched.checkers.len(), free.min(3));
    assert!(patched.checkers.iter().all(|&i| !patched.base.storage.contains(i)));
    let src = sparse_extreme(3, 0.05).unwrap();
    let mut ok = 0;
    for t in 0..50 {
        let x = SymbolBlock::new(3, sample_iid(&src, 8, &mut substream(8, t))).unwrap();
        let (y, yt) = patched_sketch(&patched, &x).unwrap();
        let out = patched_recover(&patched, &y, &yt, t, AdaptVariant::WithCheckers).unwrap();
        ok += usize::from(out.x == x);
    }
    assert!(ok >= 40, "{ok}/50");
}
