mod common;

use common::props;

#[test]
fn multiplication_is_a_commutative_ring_law() {
    props::multiplication_is_a_commutative_ring_law().unwrap();
}

#[test]
fn reciprocal_inverts_units() {
    props::reciprocal_inverts_units().unwrap();
}

#[test]
fn exponential_turns_sums_into_products() {
    props::exponential_turns_sums_into_products().unwrap();
}

#[test]
fn polya_exponential_is_multiplicative_and_integral() {
    props::polya_exponential_is_multiplicative_and_integral().unwrap();
}

#[test]
fn set_and_sequence_constructions_match_closed_forms() {
    props::set_and_sequence_constructions_match_closed_forms().unwrap();
}

#[test]
fn orbit_sizes_follow_from_automorphism_counts() {
    props::orbit_sizes_follow_from_automorphism_counts().unwrap();
}
