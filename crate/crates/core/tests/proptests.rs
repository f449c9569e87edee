use proptest::prelude::*;

use quantprec::cli::ExperimentSpec;
use quantprec::model::{ConstellationKind, make_constellation};
use quantprec::randmat::{norm, reflector};
use quantprec::stats::wilson_interval;
use quantprec::{Complex64, Quantizer, SystemConfig, asymptotic_sep, asymptotic_sinr, moments};

fn cvec(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64).prop_map(|(r, i)| Complex64::new(r, i)), 2..max)
}

fn quantizer() -> impl Strategy<Value = Quantizer> {
    prop_oneof![
        prop::sample::select(vec![4usize, 8, 16, 32, 64]).prop_map(|l| Quantizer::constant_envelope(l).unwrap()),
        (prop::sample::select(vec![4usize, 16, 64, 256]), 0.05..5.0f64)
            .prop_map(|(l, d)| Quantizer::independent(l, d).unwrap()),
    ]
}

proptest! {
    #[test]
    fn reflector_is_unitary_and_maps_anchor(v in cvec(40), seed in 0.0..1.0f64) {
        prop_assume!(norm(&v) > 1e-3);
        let r = reflector(&v).unwrap();
        let x: Vec<Complex64> = v.iter().enumerate().map(|(i, z)| z * (i as f64 + seed).cos()).collect();
        let y = r.apply(&x);
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12 * norm(&x).max(1.0));
        let e = r.apply_adjoint(&v);
        prop_assert!((e[0] - norm(&v)).norm() <= 1e-12 * norm(&v));
        prop_assert!(e[1..].iter().all(|z| z.norm() <= 1e-12 * norm(&v)));
    }

    #[test]
    fn quantizer_output_is_in_alphabet(q in quantizer(), re in -50.0..50.0f64, im in -50.0..50.0f64) {
        let out = q.quantize(Complex64::new(re, im));
        prop_assert!(q.alphabet().iter().any(|a| (a - out).norm() < 1e-12));
    }

    #[test]
    fn ce_quantizer_ignores_scale(l in prop::sample::select(vec![4usize, 8, 16, 32]), re in -5.0..5.0f64, im in -5.0..5.0f64, c in 1e-3..1e3f64) {
        let q = Quantizer::constant_envelope(l).unwrap();
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() > 1e-9);
        prop_assert_eq!(q.quantize(z * c), q.quantize(z));
    }

    #[test]
    fn independent_moments_scale_with_interval(l in prop::sample::select(vec![4usize, 16, 64]), d in 0.1..3.0f64, a in 0.1..5.0f64, c in 0.2..5.0f64) {
        let m1 = moments(&Quantizer::independent(l, d).unwrap(), a).unwrap();
        let m2 = moments(&Quantizer::independent(l, c * d).unwrap(), c * a).unwrap();
        prop_assert!((m2.cross - m1.cross * c).norm() <= 1e-9 * c);
        prop_assert!((m2.out_power - m1.out_power * c * c).abs() <= 1e-9 * c * c);
        prop_assert!((m2.gain - m1.gain).norm() <= 1e-9);
    }

    #[test]
    fn sep_decreases_with_sinr(a in 0.0..200.0f64, b in 0.0..200.0f64, which in 0usize..5) {
        let (kind, m) = [(ConstellationKind::Psk, 2), (ConstellationKind::Psk, 4), (ConstellationKind::Psk, 8),
            (ConstellationKind::Qam, 16), (ConstellationKind::Qam, 64)][which];
        let c = make_constellation(kind, m, 1.0).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(asymptotic_sep(hi, &c) <= asymptotic_sep(lo, &c));
    }

    #[test]
    fn sinr_decreases_with_noise(q in quantizer(), gamma in 1.2..10.0f64, n1 in 0.0..2.0f64, n2 in 0.0..2.0f64) {
        let (lo, hi) = if n1 < n2 { (n1, n2) } else { (n2, n1) };
        let f = quantprec::ShapingFunction::ZeroForcing;
        let s = |nv| {
            let cfg = SystemConfig::asymptotic(gamma).unwrap().with_noise_var(nv).unwrap();
            asymptotic_sinr(&cfg, &f, &q, 1.0).unwrap().sinr
        };
        prop_assert!(s(hi) <= s(lo) * (1.0 + 1e-12));
    }

    #[test]
    fn wilson_interval_contains_estimate(trials in 1u64..1_000_000, frac in 0.0..1.0f64) {
        let errors = (trials as f64 * frac) as u64;
        let (lo, hi) = wilson_interval(errors, trials);
        let p = errors as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn experiment_spec_round_trips(
        cmd in prop::sample::select(vec!["asym", "optimize", "simulate"]),
        q in quantizer(),
        gamma in 1.1..8.0f64,
        users in 3usize..64,
        snr in -10.0..30.0f64,
        precoder in prop::sample::select(vec!["mf", "zf", "rzf:0.3", "opt"]),
        trials in 1usize..100_000,
        seed in any::<u64>(),
    ) {
        let s = format!("{cmd} --quantizer {q} --gamma {gamma} --users {users} --snr-db {snr} --precoder {precoder} --trials {trials} --seed {seed}");
        let spec: ExperimentSpec = s.parse().unwrap();
        let again: ExperimentSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(spec.to_string(), again.to_string());
        prop_assert_eq!(spec, again);
    }
}
