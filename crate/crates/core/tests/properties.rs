use std::collections::BTreeSet;

use arclab_core::arcs::{moment_cross_checked, ArcKind, ArcScheme};
use arclab_core::expsum::{weyl_sum, weyl_sum_blocked, Phase, Weight};
use arclab_core::polycore::{IntPolynomial, Ratio, RationalPolynomial};
use arclab_core::primetools::PrimeTable;
use arclab_core::spectral::{bohr_set, large_spectrum, smooth, Signal};
use arclab_core::witness::{increment_step, StepOutcome};
use arclab_core::Complex64;
use proptest::prelude::*;

fn int_poly() -> impl Strategy<Value = IntPolynomial> {
    prop::collection::vec(-9i128..=9, 1..=4).prop_filter_map("zero polynomial", |c| IntPolynomial::new(c).ok())
}

fn increasing_poly() -> impl Strategy<Value = IntPolynomial> {
    prop::collection::vec(0i128..=5, 1..=4)
        .prop_map(|mut c| {
            c[0] = c[0].max(1);
            c
        })
        .prop_map(|c| IntPolynomial::new(c).unwrap())
}

fn small_table() -> &'static PrimeTable {
    use std::sync::OnceLock;
    static T: OnceLock<PrimeTable> = OnceLock::new();
    T.get_or_init(|| PrimeTable::build(200_000).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn delta_is_forward_difference(p in int_poly(), x in 0i128..=1000) {
        let d = p.delta().unwrap();
        prop_assert_eq!(d.eval(x).unwrap(), p.eval(x + 1).unwrap() - p.eval(x).unwrap());
    }

    #[test]
    fn rescale_scales_the_argument(p in int_poly(), q in 1u64..=20, x in -1000i128..=1000) {
        let r = p.rescale(q).unwrap();
        let qt = (q as i128).pow(p.lowtrim() as u32);
        prop_assert_eq!(qt * r.eval(x).unwrap(), p.eval(q as i128 * x).unwrap());
    }

    #[test]
    fn cleared_polynomial_matches_rational_value(
        nums in prop::collection::vec(-6i128..=6, 1..=3),
        dens in prop::collection::vec(1i128..=6, 3),
        x in -200i128..=200,
    ) {
        prop_assume!(nums.iter().any(|&c| c != 0));
        let coeffs: Vec<Ratio> = nums.iter().zip(&dens).map(|(&n, &d)| Ratio::new(n, d).unwrap()).collect();
        let rp = RationalPolynomial::new(coeffs).unwrap();
        let (w, star) = rp.clear_denominators().unwrap();
        let at = rp.eval(w as i128 * x).unwrap();
        prop_assert_eq!(at.den, 1);
        prop_assert_eq!(star.eval(x).unwrap(), at.num);
    }

    #[test]
    fn inverse_max_brackets(p in increasing_poly(), n in 1i128..=1_000_000) {
        let m = p.inverse_max(n).unwrap();
        if m >= 1 {
            prop_assert!(p.eval(m as i128).unwrap() <= n);
        }
        prop_assert!(p.eval(m as i128 + 1).unwrap() > n);
    }

    #[test]
    fn conjugate_phases_give_conjugate_sums(
        p in int_poly(),
        q in 1u64..=60,
        a in 0i64..60,
        theta in -1e-3f64..1e-3,
        n in 1u64..=400,
        unit in any::<bool>(),
    ) {
        let ph = Phase::new(a, q, theta).unwrap();
        let weight = if unit { Weight::Unit } else { Weight::Poly(p.delta().unwrap()) };
        let s = weyl_sum(&p, &ph, n, &weight, None).unwrap();
        let t = weyl_sum(&p, &ph.negate(), n, &weight, None).unwrap();
        let scale = (n as f64) * (1.0 + s.norm());
        prop_assert!((s - t.conj()).norm() <= 1e-9 * scale);
    }

    #[test]
    fn rational_sums_ignore_block_size(p in int_poly(), q in 1u64..=97, a in 0i64..97, block in 1usize..5000) {
        let ph = Phase::rational(a, q).unwrap();
        let s = weyl_sum_blocked(&p, &ph, 3000, &Weight::Unit, None, block).unwrap();
        let t = weyl_sum(&p, &ph, 3000, &Weight::Unit, None).unwrap();
        prop_assert_eq!(s.re.to_bits(), t.re.to_bits());
        prop_assert_eq!(s.im.to_bits(), t.im.to_bits());
    }

    #[test]
    fn delta_weighted_sum_tracks_linear_sum(p in increasing_poly(), n in 1u64..=40, frac in 0.0f64..1.0) {
        let psi_n = p.eval(n as i128).unwrap() as f64;
        let dn = p.delta().unwrap().eval(n as i128).unwrap() as f64;
        let theta = frac * 1e3 / (psi_n * dn);
        prop_assume!(theta < 0.5);
        let ph = Phase::new(0, 1, theta).unwrap();
        let h = p.delta().unwrap().shift(-1).unwrap();
        let lhs = weyl_sum(&p, &ph, n, &Weight::Poly(h), None).unwrap();
        let lin = IntPolynomial::new(vec![1]).unwrap();
        let rhs = weyl_sum(&lin, &ph, psi_n as u64, &Weight::Unit, None).unwrap();
        prop_assert!((lhs - rhs).norm() <= 40.0 * theta * psi_n * dn + 1e-9);
    }

    #[test]
    fn classification_is_stable(alpha in 0.0f64..1.0, q_max in 2u64..30) {
        let psi = IntPolynomial::new(vec![1, 0]).unwrap();
        let s = ArcScheme::new(ArcKind::Fixed { q_max, halfwidth: 0.2 / (q_max * q_max) as f64 }, &psi, 1000).unwrap();
        let here = s.classify(alpha).unwrap().is_major();
        let eps = 1e-15;
        let near_boundary = (1..=q_max).any(|q| {
            (0..=q).any(|a| ((alpha - a as f64 / q as f64).abs() - s.halfwidth(q)).abs() <= 2.0 * eps)
        });
        for d in [-eps / 2.0, eps / 2.0] {
            let nudged = (alpha + d).rem_euclid(1.0);
            if !near_boundary {
                prop_assert_eq!(s.classify(nudged).unwrap().is_major(), here);
            }
        }
    }

    #[test]
    fn even_moments_match_solution_counts(p in increasing_poly(), n in 1u64..=30, l in 1u32..=2, prime in any::<bool>()) {
        prop_assume!(p.eval(n as i128).unwrap() <= 20_000);
        let weight = if prime { Weight::PrimeWeight { b: 1, w: 2 } } else { Weight::Unit };
        let top = p.eval(n as i128).unwrap() as usize;
        let grid = 2 * l as usize * top + 1;
        let m = moment_cross_checked(&p, &weight, n, 2 * l, grid, Some(small_table())).unwrap();
        prop_assert!(m.relative_error() <= 1e-6);
    }

    #[test]
    fn smoothing_conserves_mass(vals in prop::collection::vec(0.0f64..1.0, 31..=257), eta in 0.05f64..0.5, eps in 0.01f64..0.2) {
        let n = vals.len();
        let total: f64 = vals.iter().sum();
        let a = Signal::from_real(&vals.iter().map(|v| v / total.max(1e-12)).collect::<Vec<_>>()).unwrap();
        let spec = large_spectrum(&a, eta);
        let b = bohr_set(&spec, eps, n).unwrap();
        let s = smooth(&a, &b).unwrap();
        prop_assert!((s.mass() - a.mass()).norm() <= 1e-12);
    }

    #[test]
    fn spectrum_and_bohr_sets_nest(
        vals in prop::collection::vec(0.0f64..1.0, 31..=200),
        e1 in 0.02f64..0.6,
        e2 in 0.02f64..0.6,
        r1 in 0.01f64..0.45,
        r2 in 0.01f64..0.45,
    ) {
        let n = vals.len();
        let total: f64 = vals.iter().sum();
        let a = Signal::new(vals.iter().map(|v| Complex64::new(v / total, 0.0)).collect()).unwrap();
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let big: BTreeSet<usize> = large_spectrum(&a, lo).into_iter().collect();
        let small: BTreeSet<usize> = large_spectrum(&a, hi).into_iter().collect();
        prop_assert!(small.is_subset(&big));
        let (rlo, rhi) = (r1.min(r2), r1.max(r2));
        let big_v: Vec<usize> = big.iter().copied().collect();
        let small_v: Vec<usize> = small.iter().copied().collect();
        let narrow: BTreeSet<usize> = bohr_set(&big_v, rlo, n).unwrap().into_iter().collect();
        let wide: BTreeSet<usize> = bohr_set(&big_v, rhi, n).unwrap().into_iter().collect();
        prop_assert!(narrow.is_subset(&wide));
        let fewer: BTreeSet<usize> = bohr_set(&small_v, rlo, n).unwrap().into_iter().collect();
        prop_assert!(narrow.is_subset(&fewer));
        prop_assert!(narrow.contains(&0));
    }

    #[test]
    fn increments_raise_density(
        bits in prop::collection::vec(any::<bool>(), 200..=2000),
        eps in 0.01f64..0.2,
        q in 1u64..=5,
        m in 5u64..=40,
        t in 1u32..=2,
    ) {
        let n = bits.len() as u64;
        let a: Vec<u64> = (1..=n).filter(|&x| bits[x as usize - 1]).collect();
        prop_assume!(!a.is_empty());
        let delta = a.len() as f64 / n as f64;
        if let StepOutcome::Increment(inc) = increment_step(&a, n, t, eps, q, Some(m)).unwrap() {
            prop_assert!(inc.delta_after >= delta + eps - 1e-12);
            prop_assert_eq!(inc.set.len() as f64 / inc.m as f64, inc.delta_after);
            prop_assert!(inc.set.iter().all(|&x| x >= 1 && x <= inc.m));
        }
    }
}
