mod common;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use splitsdp_core::algebra::{OrbitProfile, SplitShape};
use splitsdp_core::bounds::BoundTable;
use splitsdp_core::combinatorics::binom;
use splitsdp_core::form::ratio_to_f64;
use splitsdp_core::oracle::{
    averaged_r_matrices, best_known_code, build_r_matrices, code_x, delsarte_lp_value, exact_A, exact_A_cw,
    lambda_counts, lexicode, CodeSample,
};

fn min_eigen(m: nalgebra::DMatrix<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.min()
}

#[test]
fn size_from_the_first_row() {
    for c in common::corpus() {
        for shape in common::corpus_shapes(c.code.n) {
            let x = code_x(&c.code, &shape).unwrap();
            let mut total = BigRational::zero();
            for (p, v) in &x {
                if p.j.iter().all(|&j| j == 0) {
                    let w: num_bigint::BigInt =
                        shape.parts().iter().zip(&p.i).map(|(&n, &i)| binom(n as i64, i as i64)).product();
                    total += v * BigRational::from_integer(w);
                }
            }
            assert_eq!(total, BigRational::from_integer(c.code.len().into()), "{} at {shape}", c.name);
            assert_eq!(x[&OrbitProfile::zero(shape.m())], BigRational::one());
        }
    }
}

#[test]
fn r_matrices_two_ways() {
    for c in common::corpus().iter().filter(|c| c.code.n <= 6) {
        for shape in [SplitShape::single(c.code.n), SplitShape::new(vec![2, c.code.n - 2]).unwrap()] {
            let (r, rp) = build_r_matrices(&c.code, &shape).unwrap();
            let (ar, arp) = averaged_r_matrices(&c.code, &shape).unwrap();
            assert_eq!(r, ar, "{} at {shape}", c.name);
            assert_eq!(rp, arp, "{} at {shape}", c.name);
        }
    }
}

#[test]
fn r_matrices_are_psd_and_match_the_unknowns() {
    for c in common::corpus().iter().filter(|c| c.code.n <= 8).take(12) {
        let shape = SplitShape::new(vec![2, c.code.n - 2]).unwrap();
        let (r, rp) = build_r_matrices(&c.code, &shape).unwrap();
        assert!(min_eigen(r.to_f64()) >= -1e-9, "{}", c.name);
        assert!(min_eigen(rp.to_f64()) >= -1e-9, "{}", c.name);
        let x = code_x(&c.code, &shape).unwrap();
        let dense = splitsdp_core::oracle::dense_element(&shape, &|p| ratio_to_f64(&x[p])).unwrap();
        assert!((dense - r.to_f64()).abs().max() < 1e-12);
    }
}

#[test]
fn counts_are_symmetric() {
    for c in common::corpus().iter().take(10) {
        let shape = SplitShape::new(vec![2, c.code.n - 2]).unwrap();
        let l = lambda_counts(&c.code, &shape).unwrap();
        assert_eq!(l.total(), (c.code.len() as u64).pow(3));
        for (p, &v) in &l.counts {
            let swapped = OrbitProfile::new(p.j.clone(), p.i.clone(), p.t.clone());
            assert_eq!(l.counts.get(&swapped).copied().unwrap_or(0), v, "{p}");
        }
    }
}

#[test]
fn exact_values_at_the_extremes() {
    for n in 1..=8 {
        assert_eq!(exact_A(n, 1).unwrap(), 1 << n);
        assert_eq!(exact_A(n, n + 1).unwrap(), 1);
        assert_eq!(delsarte_lp_value(n, n + 1), BigRational::one());
        assert_eq!(delsarte_lp_value(n, 1), BigRational::from_integer((1u64 << n).into()));
    }
    assert_eq!(exact_A(8, 4).unwrap(), 16);
    assert!(exact_A(12, 4).is_err());
}

#[test]
fn odd_distance_propagates() {
    for n in 2..=7 {
        for d in (1..=n).step_by(2) {
            assert_eq!(exact_A(n, d).unwrap(), exact_A(n + 1, d + 1).unwrap(), "A({n},{d})");
        }
    }
}

#[test]
fn linear_program_dominates_search() {
    for n in 1..=8 {
        for d in 1..=n + 1 {
            let lp = delsarte_lp_value(n, d);
            let a = exact_A(n, d).unwrap();
            assert!(lp >= BigRational::from_integer(a.into()), "A({n},{d}) = {a} > {lp}");
            let best = best_known_code(n, d);
            assert!(best.len() as u64 <= a);
            assert!(best.len() < 2 || best.min_distance().unwrap() >= d);
        }
    }
}

#[test]
fn table_bounds_are_sound() {
    let table = BoundTable::builtin();
    for n in 1..=8 {
        for d in 1..=n + 1 {
            assert!(table.a(n, d) >= exact_A(n, d).unwrap(), "A({n},{d})");
            for w in 0..=n {
                let exact = exact_A_cw(n, d, w).unwrap();
                assert!(table.cw(n, d, w) >= exact, "A({n},{d},{w}) = {exact}");
            }
        }
    }
}

/// `T(w1, t1, w2, t2, d)` by exhaustive search.
fn doubly_constant(w1: usize, t1: usize, w2: usize, t2: usize, d: usize) -> usize {
    let words: Vec<u64> = (0..1u64 << (t1 + t2))
        .filter(|&x| (x >> t2).count_ones() as usize == w1 && (x & ((1 << t2) - 1)).count_ones() as usize == w2)
        .collect();
    fn grow(words: &[u64], chosen: &mut Vec<u64>, from: usize, d: usize, best: &mut usize) {
        *best = (*best).max(chosen.len());
        for k in from..words.len() {
            if chosen.len() + words.len() - k <= *best {
                return;
            }
            if chosen.iter().all(|&c| (c ^ words[k]).count_ones() as usize >= d) {
                chosen.push(words[k]);
                grow(words, chosen, k + 1, d, best);
                chosen.pop();
            }
        }
    }
    let mut best = 0;
    grow(&words, &mut Vec::new(), 0, d, &mut best);
    best
}

#[test]
fn doubly_constant_bounds_are_sound() {
    let table = BoundTable::builtin();
    for t1 in 1..=3 {
        for t2 in 1..=4 {
            for w1 in 0..=t1 {
                for w2 in 0..=t2 {
                    for d in [2, 4] {
                        let exact = doubly_constant(w1, t1, w2, t2, d) as u64;
                        assert!(table.dcw(w1, t1, w2, t2, d) >= exact, "T({w1},{t1},{w2},{t2},{d}) = {exact}");
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_codes_have_consistent_counts(words in prop::collection::btree_set(0u64..64, 1..10)) {
        let code = CodeSample::new(6, words.into_iter().collect()).unwrap();
        let shape = SplitShape::new(vec![2, 4]).unwrap();
        let l = lambda_counts(&code, &shape).unwrap();
        prop_assert_eq!(l.total(), (code.len() as u64).pow(3));
        prop_assert_eq!(l.aggregate(&SplitShape::single(6)).unwrap(), lambda_counts(&code, &SplitShape::single(6)).unwrap());
        for (_, v) in common::krawtchouk_transform(&code, &shape) {
            prop_assert!(v >= BigRational::zero());
        }
    }

    #[test]
    fn lexicodes_keep_their_distance(n in 2usize..=9, d in 1usize..=6) {
        let c = lexicode(n, d);
        prop_assert!(c.len() < 2 || c.min_distance().unwrap() >= d);
    }
}
