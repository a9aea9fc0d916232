mod common;

use aglbp::patterns::{Descriptor, DescriptorKind, ExtractConfig, Extractor, MappingKind, Normalization};
use aglbp::raster::NeighborhoodSpec;
use aglbp::selection::{
    apply_mask, intraclass_variance, learn_mask, mask_from_csv, mask_to_csv, mean_frequency, select_by_variance,
    select_top_n, sweep, sweep_to_csv, FeatureMask, SelectionConfig, SelectionMethod, TrainingSet,
};
use aglbp::synth::{two_class_fixture, Split};
use common::Lcg;
use proptest::prelude::*;

fn spec() -> NeighborhoodSpec {
    NeighborhoodSpec::new(1.0, 8).unwrap()
}

/// Random percent-normalized riu2 LBP descriptors with some empty bins.
fn random_set(seed: u64, classes: usize, per_class: usize) -> Vec<(Descriptor, usize)> {
    let mut rng = Lcg(seed);
    let mut out = Vec::new();
    for label in 0..classes {
        for _ in 0..per_class {
            let mut bins: Vec<f64> = (0..10)
                .map(|i| {
                    if i == 3 {
                        0.0
                    } else {
                        rng.next_f64() * (1.0 + label as f64)
                    }
                })
                .collect();
            Normalization::Percent.apply(&mut bins);
            let d = Descriptor::from_blocks(
                DescriptorKind::Lbp,
                &spec(),
                MappingKind::Riu2,
                Normalization::Percent,
                vec![bins],
            )
            .unwrap();
            out.push((d, label));
        }
    }
    out
}

fn fixture_descriptors(split: Split) -> Vec<(Descriptor, usize)> {
    let ex = Extractor::new(ExtractConfig::new(DescriptorKind::Aglbp, spec())).unwrap();
    two_class_fixture(3)
        .into_iter()
        .filter(|f| f.split == split)
        .map(|f| (ex.extract(&f.image).unwrap(), f.label))
        .collect()
}

/// Two-pass mean and unbiased variance per class, averaged over classes.
fn naive_variance(items: &[(Descriptor, usize)], bin: usize) -> f64 {
    let labels: std::collections::BTreeSet<usize> = items.iter().map(|(_, l)| *l).collect();
    let mut total = 0.0;
    for &label in &labels {
        let vals: Vec<f64> = items
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(d, _)| d.blocks[0].bins[bin])
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        total += vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    }
    total / labels.len() as f64
}

#[test]
fn statistics_match_two_pass_oracle() {
    let items = random_set(5, 3, 6);
    let training = TrainingSet::new(items.clone()).unwrap();
    let config = SelectionConfig::default();
    let var = intraclass_variance(&training, &config);
    let freq = mean_frequency(&training, &config);
    for bin in 0..10 {
        let v = naive_variance(&items, bin);
        assert!(
            (var[0][bin] - v).abs() <= 1e-9 * v.max(1.0),
            "bin {bin}: {} vs {v}",
            var[0][bin]
        );
        let f = items.iter().map(|(d, _)| d.blocks[0].bins[bin]).sum::<f64>() / items.len() as f64;
        assert!((freq[0][bin] - f).abs() <= 1e-9);
    }
    assert_eq!(freq[0][3], 0.0);
}

#[test]
fn variance_mask_is_the_thresholded_set() {
    let items = random_set(8, 2, 5);
    let training = TrainingSet::new(items.clone()).unwrap();
    let config = SelectionConfig::default();
    let var = intraclass_variance(&training, &config);
    for phi in [0.5, 2.0, 10.0, 50.0] {
        let mask = select_by_variance(&training, phi, &config).unwrap();
        let expected: Vec<usize> = (0..10).filter(|&i| i != 3 && var[0][i] < phi).collect();
        if expected.is_empty() {
            assert_eq!(mask.blocks[0].len(), 1);
        } else {
            assert_eq!(mask.blocks[0], expected, "phi {phi}");
        }
    }
}

#[test]
fn mask_dimension_grows_with_threshold() {
    let training = TrainingSet::new(fixture_descriptors(Split::Train)).unwrap();
    let config = SelectionConfig::default();
    let mut last = 0;
    let mut previous: Option<FeatureMask> = None;
    for phi in [0.5, 1.0, 1.6, 2.0, 8.0] {
        let mask = select_by_variance(&training, phi, &config).unwrap();
        assert!(mask.dimension() >= last, "phi {phi}");
        if let Some(prev) = &previous {
            for (small, large) in prev.blocks.iter().zip(&mask.blocks) {
                if small.len() > 1 {
                    assert!(small.iter().all(|i| large.contains(i)));
                }
            }
        }
        last = mask.dimension();
        previous = Some(mask);
    }
    let all = select_by_variance(&training, f64::INFINITY, &config).unwrap();
    let freq = mean_frequency(&training, &config);
    let occupied: usize = freq.iter().map(|b| b.iter().filter(|&&f| f > 0.0).count()).sum();
    assert_eq!(all.dimension(), occupied);
}

#[test]
fn top_n_matches_sorted_ranking() {
    let items = random_set(11, 3, 4);
    let training = TrainingSet::new(items.clone()).unwrap();
    let config = SelectionConfig::default();
    let freq = mean_frequency(&training, &config);
    for n in 1..=10 {
        let mask = select_top_n(&training, n, &config).unwrap();
        let mut ranked: Vec<(f64, usize)> = freq[0].iter().copied().zip(0..).collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let mut expected: Vec<usize> = ranked[..n].iter().map(|r| r.1).collect();
        expected.sort();
        assert_eq!(mask.blocks[0], expected);
    }
    assert!(select_top_n(&training, 0, &config).is_err());
    assert!(select_top_n(&training, 11, &config).is_err());
}

#[test]
fn masks_are_reproducible_byte_for_byte() {
    let items = fixture_descriptors(Split::Train);
    let config = SelectionConfig::default();
    let reference = mask_to_csv(&select_by_variance(&TrainingSet::new(items.clone()).unwrap(), 2.0, &config).unwrap());
    let mut rng = Lcg(99);
    for _ in 0..5 {
        let mut shuffled = items.clone();
        for i in (1..shuffled.len()).rev() {
            let j = (rng.next_f64() * (i + 1) as f64) as usize;
            shuffled.swap(i, j);
        }
        let again = select_by_variance(&TrainingSet::new(shuffled).unwrap(), 2.0, &config).unwrap();
        assert_eq!(mask_to_csv(&again), reference);
    }
    let parsed = mask_from_csv(&reference).unwrap();
    assert_eq!(mask_to_csv(&parsed), reference);
}

#[test]
fn masking_is_gather_then_normalize() {
    let items = random_set(21, 2, 4);
    let training = TrainingSet::new(items.clone()).unwrap();
    let mask = select_top_n(&training, 4, &SelectionConfig::default()).unwrap();
    for (d, _) in &items {
        let masked = apply_mask(d, &mask).unwrap();
        let gathered: Vec<f64> = mask.blocks[0].iter().map(|&i| d.blocks[0].bins[i]).collect();
        let total: f64 = gathered.iter().sum();
        for (m, g) in masked.blocks[0].bins.iter().zip(&gathered) {
            assert!((m - 100.0 * g / total).abs() < 1e-9);
        }
    }
    assert_eq!(
        apply_mask(&items[0].0, &FeatureMask::identity(&items[0].0)).unwrap(),
        items[0].0
    );
}

#[test]
fn masks_reject_other_layouts() {
    let items = random_set(2, 2, 3);
    let mask = select_top_n(&TrainingSet::new(items).unwrap(), 3, &SelectionConfig::default()).unwrap();
    let other = Descriptor::from_blocks(
        DescriptorKind::Lbp,
        &NeighborhoodSpec::new(2.0, 8).unwrap(),
        MappingKind::Riu2,
        Normalization::Percent,
        vec![vec![10.0; 10]],
    )
    .unwrap();
    assert!(apply_mask(&other, &mask).is_err());
}

#[test]
fn training_set_validation() {
    let mut items = random_set(4, 2, 3);
    items.pop();
    items.pop();
    assert!(TrainingSet::new(items).is_err());
    assert!(TrainingSet::new(Vec::new()).is_err());
    let training = TrainingSet::new(random_set(4, 2, 3)).unwrap();
    assert!(select_by_variance(&training, 0.0, &SelectionConfig::default()).is_err());
    assert!(select_by_variance(&training, f64::NAN, &SelectionConfig::default()).is_err());
    assert!(learn_mask(&training, SelectionMethod::TopN, 2.5, &SelectionConfig::default()).is_err());
}

#[test]
fn sweep_is_deterministic_and_matches_single_runs() {
    let training = TrainingSet::new(fixture_descriptors(Split::Train)).unwrap();
    let validation = fixture_descriptors(Split::Test);
    let config = SelectionConfig::default();
    let grid = [0.5, 1.0, 2.0, 4.0];
    let a = sweep(&training, &validation, SelectionMethod::VarThreshold, &grid, &config).unwrap();
    let b = sweep(&training, &validation, SelectionMethod::VarThreshold, &grid, &config).unwrap();
    assert_eq!(sweep_to_csv(&a), sweep_to_csv(&b));
    assert!(sweep_to_csv(&a).starts_with("parameter,accuracy,dimension\n"));
    for w in a.windows(2) {
        assert!(w[0].dimension <= w[1].dimension);
    }
    for (row, &phi) in a.iter().zip(&grid) {
        let single = sweep(&training, &validation, SelectionMethod::VarThreshold, &[phi], &config).unwrap();
        assert_eq!(single[0], *row);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn class_order_does_not_matter(seed in any::<u64>(), phi in 0.1f64..100.0) {
        let items = random_set(seed, 3, 4);
        // relabel classes in reverse and reverse item order
        let relabeled: Vec<_> = items.iter().rev().map(|(d, l)| (d.clone(), 2 - l)).collect();
        let config = SelectionConfig::default();
        let a = select_by_variance(&TrainingSet::new(items).unwrap(), phi, &config).unwrap();
        let b = select_by_variance(&TrainingSet::new(relabeled).unwrap(), phi, &config).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn masked_blocks_keep_their_normalization(seed in any::<u64>(), n in 1usize..10) {
        let items = random_set(seed, 2, 3);
        let mask = select_top_n(&TrainingSet::new(items.clone()).unwrap(), n, &SelectionConfig::default()).unwrap();
        for (d, _) in &items {
            let m = apply_mask(d, &mask).unwrap();
            prop_assert_eq!(m.dimension(), n);
            prop_assert!((m.blocks[0].bins.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
    }
}
