use ams_anomaly::inject::{anomaly_count, inject_multipoint, inject_point_periodic, inject_point_random, AnomalyKind, AnomalySpec, Location};
use ams_anomaly::waveforms::{simulate_vref, SignalKind, VrefConfig, Waveform};
use proptest::prelude::*;

fn sine(n: usize, amp: f64) -> Waveform {
    let s = (0..n).map(|i| amp * (i as f64 * 0.05).sin()).collect();
    Waveform::new("w", s, 1e-8).unwrap()
}

#[test]
fn half_percent_of_1500_is_eight() {
    assert_eq!(anomaly_count(0.5, 1500), 8);
    let w = sine(1500, 1.0);
    let (out, rec) = inject_point_random(&w, 0.5, 2.0, 5.0, 9).unwrap();
    assert_eq!(rec.len(), 8);
    let changed = w.samples().iter().zip(out.samples()).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    assert_eq!(changed, 8);
}

#[test]
fn periodic_touches_only_samples_at_threshold() {
    let w = sine(400, 2.0);
    let (out, rec) = inject_point_periodic(&w, 0.9, 0.1).unwrap();
    let max = w.max();
    for (i, (a, b)) in w.samples().iter().zip(out.samples()).enumerate() {
        if *a >= 0.9 * max {
            assert!(rec.positions.contains(&i));
            assert_eq!(*b, a + 0.1 * max);
        } else {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn input_injection_only_touches_the_input_block() {
    let cfg = VrefConfig::default();
    let clean = simulate_vref(&cfg, 1500, 20e-6, 3).unwrap();
    let spec = AnomalySpec {
        kind: AnomalyKind::PointRandom {
            rate_pct: 0.5,
            amp_mult_low: 2.0,
            amp_mult_high: 5.0,
        },
        location: Location::InputA,
        seed: 1,
    };
    let (out, records) = inject_multipoint(&cfg, &clean, &[spec]).unwrap();
    let input = clean.signal(SignalKind::Input).samples();
    let injected = out.signal(SignalKind::Input).samples();
    for (i, (a, b)) in input.iter().zip(injected).enumerate() {
        assert_eq!(a != b, records[0].positions.contains(&i));
    }
    // The disturbance reaches the PLL through the chain.
    assert_ne!(clean.signal(SignalKind::PllIntensity), out.signal(SignalKind::PllIntensity));
}

proptest! {
    #[test]
    fn random_injection_contract(
        n in 50usize..3000,
        rate in 0.1f64..5.0,
        amp in 0.1f64..10.0,
        seed in any::<u64>(),
    ) {
        let w = sine(n, amp);
        let want = anomaly_count(rate, n);
        prop_assume!(want < n);
        let (out, rec) = inject_point_random(&w, rate, 2.0, 5.0, seed).unwrap();
        prop_assert_eq!(rec.len(), want);
        let max = w.max_abs();
        for v in &rec.injected_values {
            prop_assert!(v.abs() >= 2.0 * max && v.abs() <= 5.0 * max);
        }
        for (i, (a, b)) in w.samples().iter().zip(out.samples()).enumerate() {
            if !rec.positions.contains(&i) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        prop_assert!(rec.positions.windows(2).all(|p| p[0] < p[1]));
    }
}
