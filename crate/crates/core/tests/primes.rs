use arclab_core::primetools::PrimeTable;

fn table() -> PrimeTable {
    PrimeTable::build(1_000_000).unwrap()
}

#[test]
fn chebyshev_ratio_at_one_million() {
    let r = table().chebyshev_psi(1_000_000).unwrap() / 1e6;
    assert!((0.8..=1.2).contains(&r), "ψ(10^6)/10^6 = {r}");
}

#[test]
fn shifted_primes_match_trial_division() {
    let t = table();
    let members = t.lambda_membership(1, 1, 10_000).unwrap();
    let want: Vec<u64> = (1..=10_000u64)
        .filter(|&x| {
            let p = x + 1;
            (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
        })
        .collect();
    assert_eq!(members, want);
}

// Doubling y from 10^4 shows local upticks near 3·10^5 for b = 2 mod 3 and
// b = 3 mod 4, so the check is the endpoint decrease plus a uniform envelope.
#[test]
fn progression_discrepancy_shrinks() {
    let t = table();
    for (q, b) in [(3u64, 1i64), (3, 2), (4, 1), (4, 3)] {
        let rel = |y: u64| (t.sw_discrepancy(q, b, y).unwrap() / y as f64).abs();
        let first = rel(10_000);
        let last = rel(1_000_000);
        assert!(last < first, "q = {q}, b = {b}: {first} then {last}");
        let mut y = 10_000;
        while y <= 1_000_000 {
            assert!(rel(y) < 1e-2, "q = {q}, b = {b}, y = {y}");
            y *= 2;
        }
    }
}
