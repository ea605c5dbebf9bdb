use icl_core::bayes::GaussianPrior;
use icl_core::rng::seeded;
use icl_core::tasks::{
    generate_prompt_set, sample_prompt, CurriculumAttr, CurriculumSchedule, FamilyKind, FunctionFamilySpec,
    FunctionInstance, InputDistribution, MixtureSpec, PromptSetConfig,
};
use proptest::prelude::*;

const DRAWS: usize = 100_000;

/// Mean and variance of `f(x)` over joint draws of `f` and `x`.
fn joint_moments(spec: &FunctionFamilySpec, input: &InputDistribution, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = seeded(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for i in 0..n {
        let f = spec.sample_function(seed.wrapping_mul(1_000_003).wrapping_add(i as u64)).unwrap();
        let v = f.eval(&input.sample(&mut rng));
        sum += v;
        sq += v * v;
    }
    let mean = sum / n as f64;
    (mean, sq / n as f64 - mean * mean)
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn normalized_families_have_unit_output_variance() {
    let cases = [
        (FamilyKind::DenseLinear { prior: GaussianPrior::standard(20) }, 20),
        (FamilyKind::SparseLinear { d: 20, s: 3 }, 20),
        (FamilyKind::SignVector { d: 10 }, 10),
        (FamilyKind::DecisionTree { depth: 4, d: 5 }, 5),
        (FamilyKind::TwoLayerNn { hidden: 100, d: 20 }, 20),
        (FamilyKind::MonomialSubset { d: 6, pairs: vec![(1, 2), (3, 5), (2, 6)] }, 6),
    ];
    for (i, (kind, d)) in cases.into_iter().enumerate() {
        let name = format!("{kind:?}");
        let spec = FunctionFamilySpec::normalized(kind);
        let (_, var) = joint_moments(&spec, &InputDistribution::standard_normal(d), DRAWS, 10 + i as u64);
        assert!((0.95..=1.05).contains(&var), "{name}: variance {var}");
    }
}

#[test]
fn sparse_family_has_s_nonzeros_and_variance_s() {
    let spec = FunctionFamilySpec::new(FamilyKind::SparseLinear { d: 20, s: 3 });
    for seed in 0..200 {
        let f = spec.sample_function(seed).unwrap();
        let nonzero = f.weights().unwrap().iter().filter(|w| **w != 0.0).count();
        assert_eq!(nonzero, 3);
    }
    let (_, var) = joint_moments(&spec, &InputDistribution::standard_normal(20), DRAWS, 3);
    assert!((var - 3.0).abs() <= 0.15, "variance {var}");
}

#[test]
fn normalization_constants_match_closed_forms() {
    let dense = FunctionFamilySpec::normalized(FamilyKind::DenseLinear { prior: GaussianPrior::standard(20) });
    assert!((dense.normalization_constant().unwrap() - 20f64.sqrt()).abs() <= 1e-12);
    let tree = FunctionFamilySpec::normalized(FamilyKind::DecisionTree { depth: 4, d: 20 });
    assert_eq!(tree.normalization_constant().unwrap(), 1.0);
    let low_rank = FunctionFamilySpec::normalized(FamilyKind::LowRank { q: 5, r: 1 });
    assert!(low_rank.normalization_constant().is_err());
}

#[test]
fn basis_families_evaluate_through_their_feature_maps() {
    let kinds = [
        (FamilyKind::FourierSeries { max_freq: 6, half_width: 5.0 }, InputDistribution::symmetric(5.0)),
        (
            FamilyKind::FourierSubset { freqs: vec![1, 4], max_freq: 6, half_width: 5.0 },
            InputDistribution::symmetric(5.0),
        ),
        (FamilyKind::random_fourier_features(3, 16, 9), InputDistribution::standard_normal(3)),
        (FamilyKind::MonomialSubset { d: 4, pairs: vec![(1, 1), (2, 4)] }, InputDistribution::standard_normal(4)),
        (FamilyKind::HaarWavelet { max_level: 3 }, InputDistribution::Uniform { low: 0.0, high: 1.0 }),
    ];
    for (i, (kind, input)) in kinds.into_iter().enumerate() {
        let spec = FunctionFamilySpec::new(kind);
        let prompt = sample_prompt(&MixtureSpec::single(spec), &input, 12, 1, 40 + i as u64).unwrap();
        let FunctionInstance::Basis { map, w } = &prompt.function_params else {
            panic!("family {i} is not a basis family");
        };
        for (x, y) in prompt.xs.iter().zip(&prompt.ys) {
            let direct: f64 = map.apply(x).iter().zip(w).map(|(a, b)| a * b).sum();
            assert!((direct - y).abs() <= 1e-12 * (1.0 + y.abs()), "family {i}");
        }
    }
}

#[test]
fn mixture_weights_set_family_frequencies() {
    let d = 4;
    let dense = FunctionFamilySpec::new(FamilyKind::DenseLinear { prior: GaussianPrior::standard(d) });
    let sign = FunctionFamilySpec::new(FamilyKind::SignVector { d });
    let mixture = MixtureSpec {
        families: vec![dense, sign],
        alpha: vec![2.0 / 3.0, 1.0 / 3.0],
    };
    let input = InputDistribution::standard_normal(d);
    let first = (0..DRAWS as u64)
        .filter(|&s| sample_prompt(&mixture, &input, 1, 1, s).unwrap().family_id == 0)
        .count();
    let freq = first as f64 / DRAWS as f64;
    assert!((freq - 2.0 / 3.0).abs() <= 0.01, "frequency {freq}");
}

#[test]
fn gmm_draws_sit_at_plus_or_minus_three() {
    let kind = FamilyKind::gmm_pm3(10, vec![0.5, 0.5]).unwrap();
    let spec = FunctionFamilySpec::new(kind);
    let mut seen = [false; 2];
    for seed in 0..100 {
        let FunctionInstance::Linear { w, component } = spec.sample_function(seed).unwrap() else {
            panic!("gmm draws are linear");
        };
        let c = component.expect("gmm draws carry their component");
        assert_eq!(w[0], if c == 0 { 3.0 } else { -3.0 });
        seen[c] = true;
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn invalid_sparsity_is_rejected() {
    let spec = FunctionFamilySpec::new(FamilyKind::SparseLinear { d: 5, s: 6 });
    let err = spec.validate().unwrap_err().to_string();
    assert!(err.contains('5') && err.contains('6'), "{err}");
}

#[test]
fn curriculum_grows_then_caps() {
    let dims = CurriculumAttr::new(5, 20, 1, 2000);
    let points = CurriculumAttr::new(10, 40, 2, 2000);
    let schedule = CurriculumSchedule { dims, points, extra: None };
    let start = schedule.value(0);
    assert_eq!((start.d, start.p), (5, 10));
    let later = schedule.value(4000);
    assert_eq!((later.d, later.p), (7, 14));
    let end = schedule.value(30_000);
    assert_eq!((end.d, end.p), (20, 40));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prompts_are_determined_by_their_seed(seed in any::<u64>(), which in 0usize..4) {
        let (kind, input) = match which {
            0 => (FamilyKind::DenseLinear { prior: GaussianPrior::standard(5) }, InputDistribution::standard_normal(5)),
            1 => (FamilyKind::SparseLinear { d: 5, s: 2 }, InputDistribution::standard_normal(5)),
            2 => (FamilyKind::TwoLayerNn { hidden: 8, d: 5 }, InputDistribution::standard_normal(5)),
            _ => (FamilyKind::FourierSeries { max_freq: 3, half_width: 2.0 }, InputDistribution::symmetric(2.0)),
        };
        let mixture = MixtureSpec::single(FunctionFamilySpec::new(kind));
        let a = sample_prompt(&mixture, &input, 6, 2, seed).unwrap();
        let b = sample_prompt(&mixture, &input, 6, 2, seed).unwrap();
        prop_assert_eq!(bits(&a.ys), bits(&b.ys));
        prop_assert_eq!(&a, &b);
        let c = sample_prompt(&mixture, &input, 6, 2, seed.wrapping_add(1)).unwrap();
        prop_assert_ne!(bits(&a.ys), bits(&c.ys));
    }

    #[test]
    fn prompt_sets_are_reproducible(seed in any::<u64>(), n in 1usize..8) {
        let config = PromptSetConfig {
            mixture: MixtureSpec::single(FunctionFamilySpec::new(FamilyKind::SignVector { d: 4 })),
            input: InputDistribution::standard_normal(4),
            p: 5,
            n_queries: 1,
        };
        let a = generate_prompt_set(&config, seed, n).unwrap();
        let b = generate_prompt_set(&config, seed, n).unwrap();
        prop_assert_eq!(a.prompts, b.prompts);
    }

    #[test]
    fn curriculum_is_monotone_and_capped(
        start in 0u64..50,
        span in 0u64..50,
        increment in 0u64..5,
        interval in 1u64..500,
        s1 in 0u64..100_000,
        s2 in 0u64..100_000,
    ) {
        let attr = CurriculumAttr::new(start, start + span, increment, interval);
        let (lo, hi) = (s1.min(s2), s1.max(s2));
        prop_assert!(attr.value(lo) <= attr.value(hi));
        prop_assert!(attr.value(hi) <= start + span);
        prop_assert!(attr.value(lo) >= start);
    }
}
