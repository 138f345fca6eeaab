mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn imputers_preserve_observed_values(
        raw in raw_cohort(), strategy in 0usize..4, indicators in any::<bool>(), seed in any::<u64>()
    ) {
        observed_values_preserved(&raw, strategy, indicators, seed)?;
    }
}

proptest! {
    #[test]
    fn auc_ignores_increasing_transforms(
        data in prop::collection::vec((-2.0f64..2.0, any::<bool>()), 2..80),
        shift in -5.0f64..5.0,
        scale in 0.1f64..3.0,
    ) {
        let (s, y): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
        auc_invariant_under_increasing_transform(&s, &y, shift, scale)?;
    }

    #[test]
    fn fnr_never_rises_with_capacity(
        data in prop::collection::vec((0u8..10, any::<bool>(), any::<bool>()), 1..80),
        c1 in 0.01f64..1.0,
        c2 in 0.01f64..1.0,
    ) {
        let s: Vec<f64> = data.iter().map(|d| d.0 as f64).collect();
        let y: Vec<bool> = data.iter().map(|d| d.1).collect();
        let g: Vec<bool> = data.iter().map(|d| d.2).collect();
        fnr_monotone_in_capacity(&s, &y, &g, c1, c2)?;
    }

    #[test]
    fn logistic_gradient_matches_finite_differences(
        rows in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0, any::<bool>()), 3..30),
        params in prop::array::uniform4(-1.5f64..1.5),
        penalty in 0.01f64..10.0,
    ) {
        gradient_matches_finite_differences(&rows, params, penalty)?;
    }

    #[test]
    fn constant_fill_error_decomposes(
        data in prop::collection::vec((-4.0f64..4.0, any::<bool>()), 1..100),
        c in -5.0f64..5.0,
    ) {
        let (v, o): (Vec<f64>, Vec<bool>) = data.into_iter().unzip();
        constant_fill_decomposes(&v, &o, c)?;
    }

    #[test]
    fn population_bias_expansion_is_consistent(seed in any::<u64>()) {
        population_bias_forms_agree(seed)?;
    }
}
