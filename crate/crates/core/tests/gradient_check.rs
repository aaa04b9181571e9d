mod common;

#[test]
fn gradient_matches_central_differences() {
    for (batch, seed) in [(1, 11), (7, 12), (64, 13)] {
        let err = common::gradient_check(batch, seed, 1e-5);
        assert!(err <= 1e-4, "batch {batch}: relative error {err:e}");
    }
}
