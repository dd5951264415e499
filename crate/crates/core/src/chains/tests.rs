use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::*;
use crate::dataset::{LabelSet, MlcExample};
use crate::forest::{ForestConfig, RandomForest};
use crate::seeds;

fn dataset(n: usize, d: usize, c: usize, seed: u64) -> MlcDataset {
    let mut rng = seeds::rng(seed);
    let vocab = LabelVocabulary::new((0..c).map(|j| format!("l{j}"))).unwrap();
    let examples = (0..n)
        .map(|i| {
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let mut bits: Vec<bool> = (0..c).map(|j| x[j % d] + 0.4 * rng.random::<f64>() > 0.7).collect();
            if c > 1 && rng.random_bool(0.5) {
                bits[1] = bits[0];
            }
            MlcExample {
                id: format!("e{i}"),
                x,
                y: LabelSet::from_bits(bits),
            }
        })
        .collect();
    MlcDataset::new(vocab, examples, d).unwrap()
}

fn small_forest(trees: usize, seed: u64) -> ForestConfig {
    ForestConfig {
        seed,
        ..ForestConfig::with_trees(trees)
    }
}

/// Exhaustive oracle: OOB 0/1 error count at grid index `k` (threshold k/1000).
fn errors_at(scores: &[f64], labels: &[bool], k: usize) -> usize {
    let t = k as f64 / 1000.0;
    scores
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s > t) as u8 != y as u8)
        .count()
}

#[test]
fn chain_order_must_be_a_permutation() {
    assert!(ChainOrder::new(vec![2, 0, 1]).is_ok());
    assert!(ChainOrder::new(vec![0, 0, 1]).is_err());
    assert!(ChainOrder::new(vec![0, 3]).is_err());
}

#[test]
fn br_default_tree_count() {
    assert_eq!(BrConfig::default().forest.tree_count, 625);
    assert_eq!(BrConfig::default().forest.max_depth, 15);
    let ecc = EccConfig::default();
    assert_eq!((ecc.chain_count, ecc.forest.tree_count), (25, 25));
}

#[test]
fn single_class_br_and_ecc_equal_plain_forest() {
    let ds = dataset(40, 3, 1, 1);
    let seed = 17;
    let plain = RandomForest::train(
        &ds.features(),
        &ds.label_column(0),
        &small_forest(9, seeds::member_seed(seed, 0, 0)),
    )
    .unwrap();
    let br = BrModel::train(&ds, &BrConfig { forest: small_forest(9, seed) }).unwrap();
    let ecc = EccModel::train(
        &ds,
        &EccConfig {
            chain_count: 1,
            forest: small_forest(9, seed),
        },
    )
    .unwrap();
    for e in ds.examples() {
        let p = plain.predict_proba(&e.x).unwrap();
        assert_eq!(br.scores(&e.x).unwrap().0, vec![p]);
        assert_eq!(ecc.scores(&e.x).unwrap().0, vec![p]);
    }
}

#[test]
fn single_class_ecc_is_mean_of_chain_forests() {
    let ds = dataset(30, 2, 1, 2);
    let seed = 5;
    let ecc = EccModel::train(
        &ds,
        &EccConfig {
            chain_count: 3,
            forest: small_forest(4, seed),
        },
    )
    .unwrap();
    let forests: Vec<RandomForest> = (0..3)
        .map(|l| {
            RandomForest::train(
                &ds.features(),
                &ds.label_column(0),
                &small_forest(4, seeds::member_seed(seed, l, 0)),
            )
            .unwrap()
        })
        .collect();
    for e in ds.examples() {
        let mean = (forests[0].predict_proba(&e.x).unwrap()
            + forests[1].predict_proba(&e.x).unwrap()
            + forests[2].predict_proba(&e.x).unwrap())
            / 3.0;
        assert_eq!(ecc.scores(&e.x).unwrap().0[0], mean);
    }
}

#[test]
fn absent_class_scores_zero() {
    let mut ds = dataset(40, 3, 3, 3);
    let vocab = ds.vocabulary().clone();
    let examples = ds
        .examples()
        .iter()
        .cloned()
        .map(|mut e| {
            e.y.set(2, false);
            e
        })
        .collect();
    ds = MlcDataset::new(vocab, examples, 3).unwrap();
    let br = BrModel::train(&ds, &BrConfig { forest: small_forest(20, 1) }).unwrap();
    let probe = dataset(20, 3, 3, 99);
    for e in probe.examples() {
        assert_eq!(br.scores(&e.x).unwrap().0[2], 0.0);
    }
}

#[test]
fn chain_positions_widen_by_one() {
    let ds = dataset(30, 10, 4, 4);
    let ecc = EccModel::train(
        &ds,
        &EccConfig {
            chain_count: 3,
            forest: small_forest(2, 0),
        },
    )
    .unwrap();
    ecc.validate().unwrap();
    for chain in ecc.chains() {
        // Third position (j = 3 counting from one) sees d + 2 = 12 inputs.
        assert_eq!(chain.forests[2].input_dim(), 12);
        for (j, f) in chain.forests.iter().enumerate() {
            assert_eq!(f.input_dim(), 10 + j);
        }
    }
}

#[test]
fn ecc_training_is_deterministic() {
    let ds = dataset(30, 3, 3, 5);
    let cfg = EccConfig {
        chain_count: 4,
        forest: small_forest(3, 8),
    };
    let a = EccModel::train(&ds, &cfg).unwrap();
    let b = EccModel::train(&ds, &cfg).unwrap();
    assert_eq!(a, b);
    let orders: Vec<&ChainOrder> = a.chains().iter().map(|ch| &ch.order).collect();
    assert!(orders.iter().any(|o| o.as_slice() != [0, 1, 2]) || orders.len() < 2);
}

#[test]
fn ecc_scores_average_chain_outputs() {
    let ds = dataset(40, 4, 3, 6);
    let ecc = EccModel::train(
        &ds,
        &EccConfig {
            chain_count: 5,
            forest: small_forest(5, 1),
        },
    )
    .unwrap();
    for e in ds.examples().iter().take(10) {
        let per_chain = ecc.chain_probabilities(&e.x).unwrap();
        let scores = ecc.scores(&e.x).unwrap();
        for j in 0..3 {
            let mean = per_chain.iter().map(|p| p[j]).sum::<f64>() / 5.0;
            assert!((scores.0[j] - mean).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&scores.0[j]));
        }
        // Replay the first chain by hand: position j consumes x plus the
        // j probabilities produced before it.
        let chain = &ecc.chains()[0];
        let mut input = e.x.clone();
        for (j, &class) in chain.order.as_slice().iter().enumerate() {
            let p = chain.forests[j].predict_proba(&input).unwrap();
            assert_eq!(p, per_chain[0][class]);
            input.push(p);
        }
    }
}

#[test]
fn dimension_and_vocabulary_mismatches() {
    let ds = dataset(20, 3, 2, 7);
    let br = BrModel::train(&ds, &BrConfig { forest: small_forest(2, 0) }).unwrap();
    assert!(matches!(br.scores(&[1.0]), Err(Error::DimensionMismatch { .. })));
    let ecc = EccModel::train(
        &ds,
        &EccConfig {
            chain_count: 2,
            forest: small_forest(2, 0),
        },
    )
    .unwrap();
    assert!(ecc.scores(&[1.0, 2.0]).is_err());
    let other = dataset(20, 3, 3, 7);
    assert!(matches!(calibrate_thresholds(&br, &other), Err(Error::Mismatch(_))));
    let wrong_n = dataset(21, 3, 2, 7);
    assert!(calibrate_thresholds(&ecc, &wrong_n).is_err());
}

#[test]
fn grid_has_999_steps_of_a_thousandth() {
    let grid: Vec<f64> = threshold_grid().collect();
    assert_eq!(grid.len(), GRID_STEPS);
    assert_eq!(grid.len(), 999);
    assert_eq!(grid[0], 0.001);
    assert_eq!(grid[998], 0.999);
    for w in grid.windows(2) {
        assert!((w[1] - w[0] - 0.001).abs() < 1e-12);
    }
}

#[test]
fn threshold_examples_match_exhaustive_scan() {
    let scores = [0.2, 0.6, 0.9];
    let labels = [false, true, true];
    // Oracle: smallest k with the minimum error count.
    let best_k = (1..=999).min_by_key(|&k| (errors_at(&scores, &labels, k), k)).unwrap();
    assert_eq!(errors_at(&scores, &labels, best_k), 0);
    assert_eq!(best_k, 200);
    assert_eq!(select_threshold(&scores, &labels), 0.2);

    let scores = [0.3, 0.55, 0.7];
    let labels = [false; 3];
    let best_k = (1..=999).min_by_key(|&k| (errors_at(&scores, &labels, k), k)).unwrap();
    assert_eq!(best_k, 700);
    assert_eq!(select_threshold(&scores, &labels), 0.7);
}

#[test]
fn calibrated_thresholds_are_optimal_on_oob_scores() {
    let ds = dataset(60, 4, 3, 8);
    let ecc = EccModel::train(
        &ds,
        &EccConfig {
            chain_count: 4,
            forest: small_forest(10, 2),
        },
    )
    .unwrap();
    let cal = calibrate_thresholds(&ecc, &ds).unwrap();
    for j in 0..3 {
        let labels = ds.label_column(j);
        let s = &cal.oob.scores[j];
        let t = cal.thresholds.as_slice()[j];
        let chosen = s.iter().zip(&labels).filter(|(&p, &y)| (p > t) != y).count();
        for k in 1..=999 {
            assert!(errors_at(s, &labels, k) >= chosen);
        }
    }
}

#[test]
fn predict_set_is_strict() {
    let t = ThresholdVector::uniform(2, 0.5).unwrap();
    let set = predict_set(&ScoreVector(vec![0.9, 0.1]), &t).unwrap();
    assert_eq!(set.bits(), &[true, false]);
    let set = predict_set(&ScoreVector(vec![0.2, 0.3]), &t).unwrap();
    assert_eq!(set.count(), 0);
    let set = predict_set(&ScoreVector(vec![0.5, 0.5]), &t).unwrap();
    assert_eq!(set.count(), 0);
    assert!(predict_set(&ScoreVector(vec![0.5]), &t).is_err());
    assert!(ThresholdVector::uniform(2, 1.0).is_err());
}
