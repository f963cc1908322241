mod common;

use std::collections::BTreeSet;

use common::{assert_input_sparse_bound, random_mat, schoolbook};
use osmm_core::algebra::{BinaryField, Integers, PrimeField, Ring};
use osmm_core::expander::PvParams;
use osmm_core::instance::{gen_instance, InstanceSpec, Planting};
use osmm_core::osmm::{
    osmm_deterministic, osmm_deterministic_traced, osmm_randomized, osmm_randomized_traced,
    rect_multiply, strategy_dispatch, Multiplier, OsmmConfig, OsmmError, Strategy,
};
use osmm_core::sketch::SketchMode;
use osmm_core::sparse::{sparse_mm, SparseMat};
use osmm_core::verify::VerifierConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn planted<R: Ring>(
    ring: &R,
    n: usize,
    seed: u64,
) -> (SparseMat<R::Elem>, SparseMat<R::Elem>, SparseMat<R::Elem>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plantings = [
        Planting::RandomSupport,
        Planting::RankStructured,
        Planting::Boundary,
    ];
    let delta_in = rng.gen_range(0.5..=1.5);
    let spec = InstanceSpec {
        n,
        delta_in,
        delta_out: rng.gen_range(0.0..=delta_in.min(1.2)),
        seed,
        planting: plantings[rng.gen_range(0..3)],
    };
    let inst = gen_instance(ring, &spec).unwrap();
    (inst.a, inst.b, inst.c)
}

/// Smallest `t` with `nnz <= t^2`.
fn budget_for(nnz: usize) -> usize {
    (1..).find(|t| t * t >= nnz).unwrap()
}

fn det_config(t: usize, sketch: SketchMode) -> OsmmConfig {
    OsmmConfig {
        t: Some(t),
        sketch,
        ..OsmmConfig::default()
    }
}

fn check_deterministic<R: Ring>(
    ring: &R,
    n: usize,
    seed: u64,
    sketch: SketchMode,
) -> Result<(), TestCaseError> {
    let (a, b, c) = planted(ring, n, seed);
    let t = budget_for(c.nnz());
    let (out, trace) = osmm_deterministic_traced(ring, &a, &b, &det_config(t, sketch)).unwrap();
    assert_input_sparse_bound(&a, &b, &out);
    prop_assert_eq!(&out, &c);
    // after pass 1 fewer than t columns are wrong
    let wrong = (0..n)
        .filter(|&j| trace.first_pass.col(j) != c.col(j))
        .count();
    prop_assert!(wrong < t, "{wrong} wrong columns after pass 1 with t={t}");
    Ok(())
}

fn check_randomized<R: Ring>(
    ring: &R,
    a: &SparseMat<R::Elem>,
    b: &SparseMat<R::Elem>,
    seed: u64,
    sketch: SketchMode,
) -> Result<(), TestCaseError> {
    let c = sparse_mm(ring, a, b).unwrap();
    let cfg = OsmmConfig {
        sketch,
        verifier: VerifierConfig::new(2, seed),
        ..OsmmConfig::default()
    };
    let (out, rounds) = osmm_randomized_traced(ring, a, b, &cfg).unwrap();
    assert_input_sparse_bound(a, b, &out);
    prop_assert_eq!(&out, &c);
    let mut committed = BTreeSet::new();
    for (i, round) in rounds.iter().enumerate() {
        prop_assert_eq!(round.t, (1usize << i).min(a.rows()));
        for &j in &round.committed {
            prop_assert!(committed.insert(j), "column {j} committed twice");
        }
        if let Some(next) = rounds.get(i + 1) {
            let left: Vec<usize> = round
                .active
                .iter()
                .copied()
                .filter(|j| !round.committed.contains(j))
                .collect();
            prop_assert_eq!(&next.active, &left);
        }
        if i >= 1 {
            // every open column failed at budget t/2, so it has more than t/2 nonzeros
            prop_assert!(round.t / 2 * round.active.len() <= c.nnz());
            for &j in &round.active {
                prop_assert!(
                    2 * c.col(j).nnz() > round.t,
                    "column {j} open at t={}",
                    round.t
                );
            }
        }
    }
    prop_assert_eq!(committed.len(), a.rows());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn deterministic_matches_oracle_f101(seed in any::<u64>(), n in 1usize..=64) {
        check_deterministic(&PrimeField::new(101).unwrap(), n, seed, SketchMode::Auto)?;
    }

    #[test]
    fn deterministic_matches_oracle_z_certified(seed in any::<u64>(), n in 1usize..=64) {
        check_deterministic(&Integers, n, seed, SketchMode::Certified)?;
    }

    #[test]
    fn deterministic_matches_oracle_gf256(seed in any::<u64>(), n in 1usize..=64) {
        check_deterministic(&BinaryField::with_degree(8).unwrap(), n, seed, SketchMode::Certified)?;
    }

    #[test]
    fn deterministic_matches_oracle_gf2(seed in any::<u64>(), n in 1usize..=64) {
        check_deterministic(&BinaryField::gf2(), n, seed, SketchMode::Identity)?;
    }

    #[test]
    fn randomized_matches_oracle_planted(seed in any::<u64>(), n in 1usize..=64) {
        let gf = BinaryField::with_degree(8).unwrap();
        let (a, b, _) = planted(&gf, n, seed);
        check_randomized(&gf, &a, &b, seed, SketchMode::Certified)?;
        let (a, b, _) = planted(&Integers, n, seed);
        check_randomized(&Integers, &a, &b, seed, SketchMode::Auto)?;
    }

    #[test]
    fn randomized_matches_oracle_random(seed in any::<u64>(), n in 1usize..=64, density in 0.0f64..0.3) {
        let f = PrimeField::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mat(&f, &mut rng, n, n, density);
        let b = random_mat(&f, &mut rng, n, n, density);
        check_randomized(&f, &a, &b, seed, SketchMode::Auto)?;
    }

    #[test]
    fn rect_multiply_matches_oracle(seed in any::<u64>(), n in 1usize..=40, m_frac in 0.0f64..=1.0, p_frac in 0.0f64..=1.0) {
        let f = PrimeField::new(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = ((n as f64 * m_frac) as usize).max(1);
        let p = ((n as f64 * p_frac) as usize).max(1);
        let a = random_mat(&f, &mut rng, m, n, 0.15);
        let b = random_mat(&f, &mut rng, n, p, 0.15);
        let c = rect_multiply(&f, &a, &b, &OsmmConfig::default()).unwrap();
        assert_input_sparse_bound(&a, &b, &c);
        prop_assert_eq!(c, schoolbook(&f, &a, &b));
    }
}

#[test]
fn zero_and_identity() {
    let f = PrimeField::new(101).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_mat(&f, &mut rng, 31, 31, 0.2);
    let zero = SparseMat::zeros(31, 31);
    assert_eq!(
        osmm_deterministic(&f, &a, &zero, &det_config(1, SketchMode::Auto)).unwrap(),
        zero
    );
    assert_eq!(
        osmm_randomized(&f, &a, &zero, &OsmmConfig::default()).unwrap(),
        zero
    );
    let id = SparseMat::identity(&f, 31);
    let (c, rounds) = osmm_randomized_traced(&f, &id, &id, &OsmmConfig::default()).unwrap();
    assert_eq!(c, id);
    assert_eq!(rounds.len(), 1);
    assert_eq!(rounds[0].committed, (0..31).collect::<Vec<_>>());
    let empty = SparseMat::<u64>::zeros(0, 0);
    assert_eq!(
        osmm_deterministic(&f, &empty, &empty, &det_config(1, SketchMode::Auto)).unwrap(),
        empty
    );
    assert_eq!(
        osmm_randomized(&f, &empty, &empty, &OsmmConfig::default()).unwrap(),
        empty
    );
}

#[test]
fn boundary_instances_are_exact() {
    let gf = BinaryField::with_degree(8).unwrap();
    for n in [15, 31, 63] {
        for seed in 0..20 {
            let spec = InstanceSpec {
                n,
                delta_in: 1.0,
                delta_out: 1.0,
                seed,
                planting: Planting::Boundary,
            };
            let inst = gen_instance(&gf, &spec).unwrap();
            let t = spec.output_budget().isqrt();
            assert_eq!(inst.c.nnz(), t * t);
            assert_eq!(inst.c.max_col_nnz(), t);
            for sketch in [SketchMode::Certified, SketchMode::Auto] {
                let c = osmm_deterministic(&gf, &inst.a, &inst.b, &det_config(t, sketch)).unwrap();
                assert_eq!(c, inst.c);
            }
        }
    }
}

#[test]
fn dense_products_via_randomized() {
    let f = PrimeField::new(101).unwrap();
    for (n, seed) in [(15, 1), (31, 2), (63, 3)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mat(&f, &mut rng, n, n, 0.9);
        let b = random_mat(&f, &mut rng, n, n, 0.9);
        let c = osmm_randomized(&f, &a, &b, &OsmmConfig::default()).unwrap();
        assert_eq!(c, schoolbook(&f, &a, &b));
        assert!(c.nnz() > n * n / 2);
    }
}

#[test]
fn manual_tiny_expander_drives_the_deterministic_algorithm() {
    let f = PrimeField::new(101).unwrap();
    let manual = SketchMode::Manual(PvParams {
        left: 0,
        q: 8,
        poly_len: 2,
        m: 1,
        h: 2,
    });
    let mut checked = 0;
    for seed in 0..200 {
        let (a, b, c) = planted(&f, 63, seed);
        if c.nnz() > 4 {
            continue;
        }
        checked += 1;
        assert_eq!(
            osmm_deterministic(&f, &a, &b, &det_config(2, manual.clone())).unwrap(),
            c
        );
    }
    assert!(checked >= 20, "only {checked} instances with nnz(AB) <= 4");
}

#[test]
fn strategies_agree() {
    let f = PrimeField::new(101).unwrap();
    for seed in 0..20 {
        let (a, b, c) = planted(&f, 31, seed);
        let t = budget_for(c.nnz());
        for strategy in [Strategy::Dense, Strategy::Sparse, Strategy::Auto] {
            let cfg = OsmmConfig {
                strategy,
                ..det_config(t, SketchMode::Certified)
            };
            assert_eq!(osmm_deterministic(&f, &a, &b, &cfg).unwrap(), c);
            assert_eq!(osmm_randomized(&f, &a, &b, &cfg).unwrap(), c);
        }
    }
    let id = SparseMat::identity(&f, 8);
    assert_eq!(strategy_dispatch(&id, &id), Multiplier::Sparse);
    let full = SparseMat::from_dense(&f, &vec![vec![3u64; 8]; 8]);
    assert_eq!(strategy_dispatch(&full, &full), Multiplier::Dense);
    // estimated sparse work (1 + 1) * 1 + 1 equals dense 1 * 3 * 1
    let row = SparseMat::from_dense(&f, &[vec![3u64; 3]]);
    let b = SparseMat::from_triplets(&f, 3, 1, vec![(1, 0, 5)]).unwrap();
    assert_eq!(strategy_dispatch(&row, &b), Multiplier::Sparse);
}

#[test]
fn reproducible() {
    let gf = BinaryField::with_degree(8).unwrap();
    let (a, b, c) = planted(&gf, 63, 5);
    let cfg = OsmmConfig {
        nnz_bound: Some(c.nnz().max(1)),
        verifier: VerifierConfig::new(2, 99),
        ..OsmmConfig::default()
    };
    let first = osmm_deterministic_traced(&gf, &a, &b, &cfg).unwrap();
    assert_eq!(first, osmm_deterministic_traced(&gf, &a, &b, &cfg).unwrap());
    let first = osmm_randomized_traced(&gf, &a, &b, &cfg).unwrap();
    assert_eq!(first, osmm_randomized_traced(&gf, &a, &b, &cfg).unwrap());
}

#[test]
fn broken_promise_is_reported_under_post_verification() {
    let f = PrimeField::new(101).unwrap();
    let mut flagged = 0;
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_mat(&f, &mut rng, 31, 31, 0.3);
        let b = random_mat(&f, &mut rng, 31, 31, 0.3);
        let c = sparse_mm(&f, &a, &b).unwrap();
        let cfg = OsmmConfig {
            t: Some(2),
            post_verify: true,
            verifier: VerifierConfig::new(2, seed),
            ..OsmmConfig::default()
        };
        match osmm_deterministic(&f, &a, &b, &cfg) {
            Ok(out) => assert_eq!(out, c),
            Err(OsmmError::PromiseViolated(_)) => flagged += 1,
            Err(e) => panic!("unexpected error {e}"),
        }
    }
    assert!(flagged > 0);
}

#[test]
fn budget_handling() {
    let f = PrimeField::new(101).unwrap();
    let (a, b, c) = planted(&f, 31, 8);
    assert_eq!(
        osmm_deterministic(&f, &a, &b, &OsmmConfig::default()),
        Err(OsmmError::MissingBudget)
    );
    // no budget but post-verification: randomized fallback
    let cfg = OsmmConfig {
        post_verify: true,
        ..OsmmConfig::default()
    };
    assert_eq!(osmm_deterministic(&f, &a, &b, &cfg).unwrap(), c);
    let cfg = OsmmConfig {
        nnz_bound: Some(c.nnz().max(1)),
        post_verify: true,
        ..OsmmConfig::default()
    };
    assert_eq!(osmm_deterministic(&f, &a, &b, &cfg).unwrap(), c);
}

#[test]
fn shape_errors() {
    let f = PrimeField::new(101).unwrap();
    let a = SparseMat::<u64>::zeros(3, 4);
    let b = SparseMat::<u64>::zeros(4, 4);
    assert!(matches!(
        osmm_deterministic(&f, &a, &b, &det_config(1, SketchMode::Auto)),
        Err(OsmmError::NotSquare { .. })
    ));
    assert!(matches!(
        osmm_randomized(&f, &b, &a, &OsmmConfig::default()),
        Err(OsmmError::NotSquare { .. })
    ));
    // rectangular: m, p <= n only
    assert!(rect_multiply(
        &f,
        &SparseMat::<u64>::zeros(5, 4),
        &b,
        &OsmmConfig::default()
    )
    .is_err());
    assert!(rect_multiply(
        &f,
        &a,
        &SparseMat::<u64>::zeros(4, 2),
        &OsmmConfig::default()
    )
    .is_ok());
}
