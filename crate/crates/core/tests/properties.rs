use apd_noise::cascade::{
    bangera_stage_factor, bangera_stage_factor_split, bangera_stage_factors, bangera_total,
    friis_total, CascadeNetwork, CascadeStage,
};
use apd_noise::monte_carlo::{partition_rng, GainSampler};
use apd_noise::oracle::{distribution_moments, enumerate_distribution};
use apd_noise::*;
use proptest::prelude::*;

fn spectrum_strategy(max_m: usize) -> impl Strategy<Value = IonizationSpectrum> {
    prop::collection::vec(0.0f64..=1.0, 1..=max_m).prop_map(|mut probs| {
        let total: f64 = probs.iter().sum();
        if total > 1.0 {
            let norm = total + 1e-9;
            probs.iter_mut().for_each(|p| *p /= norm);
        }
        IonizationSpectrum::new(probs).unwrap()
    })
}

fn device_strategy() -> impl Strategy<Value = DeviceSpec> {
    (
        prop::collection::vec(spectrum_strategy(4), 1..=5),
        0.1f64..5.0,
    )
        .prop_map(|(layers, m0)| DeviceSpec::with_m0(layers, m0).unwrap())
}

fn staircase_strategy() -> impl Strategy<Value = StaircaseSpec> {
    prop::collection::vec(0.0f64..=1.0, 1..=8).prop_map(|p| StaircaseSpec::new(p).unwrap())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn layer_enf_is_at_least_one(s in spectrum_strategy(6)) {
        let m = layer_moments(&s);
        prop_assert!(layer_enf(&s) >= 1.0 - 1e-15);
        prop_assert!(m.mean >= 1.0);
        prop_assert!(m.mean_square >= m.mean * m.mean * (1.0 - 1e-15));
    }

    #[test]
    fn device_enf_is_product_of_layer_factors(d in device_strategy()) {
        let report = device_enf(&d);
        let product: f64 = d.layers().iter().map(layer_enf).product();
        prop_assert!(rel_close(report.total_enf, product, 1e-12));
        prop_assert!(report.per_layer_enf.iter().all(|&f| f >= 1.0 - 1e-15));
        prop_assert!(rel_close(report.moments.enf(), report.total_enf, 1e-12));
        let m = report.moments;
        prop_assert!((m.variance - (m.mean_square - m.mean * m.mean)).abs() <= 1e-12 * m.mean_square);
    }

    #[test]
    fn layer_order_does_not_matter(d in device_strategy(), shift in 0usize..5) {
        let mut layers = d.layers().to_vec();
        let k = shift % layers.len();
        layers.rotate_left(k);
        layers.reverse();
        let permuted = DeviceSpec::with_m0(layers, d.m0()).unwrap();
        prop_assert!(rel_close(device_enf(&permuted).total_enf, device_enf(&d).total_enf, 1e-12));
        prop_assert!(rel_close(device_mean_gain(&permuted), device_mean_gain(&d), 1e-12));
    }

    #[test]
    fn staircase_matches_generalized_device(spec in staircase_strategy()) {
        let a = staircase_enf(&spec);
        let b = device_enf(&spec.to_device());
        prop_assert!((a.total_enf - b.total_enf).abs() <= 1e-12);
        for (x, y) in a.per_layer_enf.iter().zip(&b.per_layer_enf) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        prop_assert!((a.moments.mean - b.moments.mean).abs() <= 1e-12 * a.moments.mean);
        prop_assert!((a.moments.mean_square - b.moments.mean_square).abs() <= 1e-12 * a.moments.mean_square);
        let product: f64 = spec.step_probs().iter().map(|p| 1.0 + p).product();
        prop_assert!((staircase_mean_gain(&spec) - product).abs() <= 1e-12 * product);
    }

    #[test]
    fn staircase_gain_increases_with_each_step(spec in staircase_strategy(), idx in 0usize..8, bump in 1e-6f64..0.5) {
        let i = idx % spec.steps();
        let mut probs = spec.step_probs().to_vec();
        prop_assume!(probs[i] + bump <= 1.0);
        let before = staircase_mean_gain(&spec);
        probs[i] += bump;
        let after = staircase_mean_gain(&StaircaseSpec::new(probs).unwrap());
        prop_assert!(after > before);
    }

    #[test]
    fn exact_distribution_is_normalized_and_bounded(d in device_strategy()) {
        let dist = enumerate_distribution(&d).unwrap();
        prop_assert!((dist.total_probability() - 1.0).abs() <= 1e-12);
        let max_factor: f64 = d.layers().iter().map(|l| (l.max_secondaries() + 1) as f64).product();
        // every slot and the no-ionization mass are positive here, so the full support is reached
        prop_assert!(rel_close(dist.min_gain(), d.m0(), 1e-15));
        prop_assert!(rel_close(dist.max_gain(), d.m0() * max_factor, 1e-15));
        let oracle = distribution_moments(&dist);
        let closed = device_moments(&d);
        prop_assert!(rel_close(oracle.mean, closed.mean, 1e-12));
        prop_assert!(rel_close(oracle.mean_square, closed.mean_square, 1e-12));
    }

    #[test]
    fn sampled_gains_stay_on_the_lattice(d in device_strategy(), seed in any::<u64>()) {
        let sampler = GainSampler::new(&d);
        let max_factor: u64 = d.layers().iter().map(|l| l.max_secondaries() as u64 + 1).product();
        let mut rng = partition_rng(seed, 0);
        for _ in 0..200 {
            let factor = sampler.sample_factor(&mut rng);
            prop_assert!((1..=max_factor).contains(&factor));
        }
    }

    #[test]
    fn device_json_round_trip_is_exact(d in device_strategy()) {
        let json = serde_json::to_string(&d).unwrap();
        let back: DeviceSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(device_enf(&back).total_enf.to_bits(), device_enf(&d).total_enf.to_bits());
    }

    #[test]
    fn cascade_stage_factors(
        input_noise in 1e-3f64..10.0,
        stages in prop::collection::vec((1e-2f64..100.0, 0.0f64..5.0, 0.0f64..5.0), 1..=6),
    ) {
        let stages = stages
            .into_iter()
            .map(|(g, ni, ne)| CascadeStage { power_gain: g, internal_noise: ni, external_noise: ne })
            .collect();
        let net = CascadeNetwork::new(input_noise, stages).unwrap();
        for x in 1..=net.stages().len() {
            let a = bangera_stage_factor(&net, x).unwrap();
            let b = bangera_stage_factor_split(&net, x).unwrap();
            prop_assert!(a >= 1.0);
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
        let product: f64 = bangera_stage_factors(&net).iter().product();
        prop_assert_eq!(bangera_total(&net), product);
    }

    #[test]
    fn single_stage_bangera_equals_friis(g in 1e-2f64..100.0, ni in 0.0f64..5.0, ne in 0.0f64..5.0, n_in in 1e-3f64..10.0) {
        let net = CascadeNetwork::new(n_in, vec![CascadeStage { power_gain: g, internal_noise: ni, external_noise: ne }]).unwrap();
        let f = bangera_total(&net);
        prop_assert_eq!(friis_total(&[f], &[g]).unwrap(), f);
    }
}

#[test]
fn enf_equals_one_exactly_for_deterministic_layers() {
    for m in 1..=5 {
        for i in 0..m {
            let mut probs = vec![0.0; m];
            probs[i] = 1.0;
            let s = IonizationSpectrum::new(probs).unwrap();
            assert_eq!(layer_enf(&s), 1.0);
            assert_eq!(layer_moments(&s).variance, 0.0);
        }
        assert_eq!(
            layer_enf(&IonizationSpectrum::new(vec![0.0; m]).unwrap()),
            1.0
        );
    }
}
