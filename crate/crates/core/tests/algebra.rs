mod common;

use num_bigint::BigInt;
use proptest::prelude::*;
use splitsdp_core::algebra::{block_indices, block_rows, valid_profiles, OrbitProfile, SplitShape};
use splitsdp_core::combinatorics::binom;
use splitsdp_core::model::{canonical_class, is_forced_zero};

#[test]
fn products_map_to_products() {
    let mut rng = common::rng(11);
    for shape in common::shapes(5, 3) {
        common::check_homomorphism(&shape, 5, &mut rng).unwrap();
    }
}

#[test]
fn positivity_is_blockwise() {
    common::check_psd_equivalence(6, &mut common::rng(12)).unwrap();
}

#[test]
fn split_generators_are_tensor_products() {
    assert!(common::check_tensor_identity(6).unwrap() > 0);
}

#[test]
fn block_sizes_account_for_the_dimension() {
    common::check_dimensions(16, 3).unwrap();
}

#[test]
fn flagship_shape_has_9690_profiles() {
    let shape = SplitShape::new(vec![2, 16]).unwrap();
    assert_eq!(valid_profiles(&shape).len(), 10 * 969);
}

fn shape_strategy() -> impl Strategy<Value = SplitShape> {
    prop::collection::vec(1usize..=7, 1..=3).prop_map(|p| SplitShape::new(p).unwrap())
}

fn profile_strategy() -> impl Strategy<Value = (SplitShape, OrbitProfile)> {
    shape_strategy().prop_flat_map(|shape| {
        let profiles = valid_profiles(&shape);
        (Just(shape), prop::sample::select(profiles))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_count_is_a_product(shape in shape_strategy()) {
        let expect: BigInt = shape.parts().iter().map(|&n| binom(n as i64 + 3, 3)).product();
        prop_assert_eq!(BigInt::from(valid_profiles(&shape).len()), expect);
    }

    #[test]
    fn valid_profiles_respect_their_bounds((shape, p) in profile_strategy()) {
        prop_assert!(p.is_valid(&shape));
        for q in 0..shape.m() {
            prop_assert!(p.t[q] <= p.i[q].min(p.j[q]));
            prop_assert!(p.i[q] + p.j[q] - p.t[q] <= shape.parts()[q]);
        }
    }

    #[test]
    fn canonical_class_is_idempotent((shape, p) in profile_strategy()) {
        let c = canonical_class(&p);
        prop_assert!(c <= p);
        prop_assert!(c.is_valid(&shape));
        prop_assert_eq!(canonical_class(&c), c.clone());
        prop_assert_eq!(p.distance().iter().sum::<usize>() + p.total_i() + p.total_j(),
            c.distance().iter().sum::<usize>() + c.total_i() + c.total_j());
        for d in [2usize, 4, 6] {
            prop_assert_eq!(is_forced_zero(&p, d), is_forced_zero(&c, d));
        }
    }

    #[test]
    fn block_rows_have_the_block_size(shape in shape_strategy()) {
        for k in block_indices(&shape) {
            let rows = block_rows(&shape, &k);
            prop_assert_eq!(rows.len(), k.size(&shape));
            let mut sorted = rows.clone();
            sorted.sort();
            prop_assert_eq!(sorted, rows);
        }
    }
}
