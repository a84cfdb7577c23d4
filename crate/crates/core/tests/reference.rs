mod common;

use common::{compare_with_reference, random_program};

#[test]
fn random_programs_match_the_reference_interpreter() {
    for seed in 0..20 {
        let program = random_program(seed, 2_000);
        if let Err(e) = compare_with_reference(&program) {
            panic!("seed {seed}: {e}");
        }
    }
}

#[test]
fn long_random_program_matches() {
    let program = random_program(1234, 10_000);
    let retired = compare_with_reference(&program).unwrap();
    assert!(retired > 1_000);
}
