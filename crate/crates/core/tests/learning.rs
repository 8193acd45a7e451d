use std::sync::Arc;

use rayon::prelude::*;

use beliefdrive::active::{run_experiment, ALConfig, ALData, Experiment};
use beliefdrive::beliefs::{ClassFrame, ClassId, SetBudget};
use beliefdrive::eval::{direction_confusion, evaluate, EvalInput};
use beliefdrive::net::{accuracy, train, train_with_validation, FeatureVector, ModelKind, TrainConfig};
use beliefdrive::track::{build_dataset, DatasetConfig, RasterSpec, Split};
use beliefdrive::Error;

fn separable() -> (Vec<FeatureVector>, Vec<ClassId>) {
    (0..10)
        .map(|i| {
            let c = i % 7;
            let mut v = vec![0.0; 7];
            v[c] = 1.0 + 0.1 * (i / 7) as f64;
            (FeatureVector::new(v).unwrap(), ClassId(c))
        })
        .unzip()
}

#[test]
fn separable_fixture_is_learned_by_both_heads() {
    let (x, y) = separable();
    let data: Vec<_> = x.iter().zip(y.iter().copied()).collect();
    let frame = ClassFrame::seven();
    let budget = Arc::new(SetBudget::default_seven());
    for kind in [ModelKind::Softmax, ModelKind::Rsnn] {
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 4,
            hidden: vec![8],
            ..TrainConfig::default()
        };
        let t = train_with_validation(kind, &frame, &budget, &data, &data, &cfg).unwrap();
        assert_eq!(accuracy(&t.model, &data).unwrap(), 1.0, "{kind}");
    }
}

#[test]
fn training_is_deterministic_and_checks_inputs() {
    let (x, y) = separable();
    let data: Vec<_> = x.iter().zip(y.iter().copied()).collect();
    let frame = ClassFrame::seven();
    let budget = Arc::new(SetBudget::default_seven());
    let cfg = TrainConfig {
        epochs: 5,
        hidden: vec![4],
        ..TrainConfig::default()
    };
    let a = train_with_validation(ModelKind::Rsnn, &frame, &budget, &data, &data, &cfg).unwrap();
    let b = train_with_validation(ModelKind::Rsnn, &frame, &budget, &data, &data, &cfg).unwrap();
    assert_eq!(a.log.to_csv(), b.log.to_csv());
    assert_eq!(a.model, b.model);
    assert!(matches!(
        train_with_validation(ModelKind::Softmax, &frame, &budget, &data, &[], &cfg),
        Err(Error::EmptyValidation)
    ));
    let no_six: Vec<_> = data.iter().copied().filter(|d| d.1 != ClassId(6)).collect();
    let t = train(ModelKind::Softmax, &frame, &budget, &no_six, &cfg).unwrap();
    assert_eq!(t.log.warnings.len(), 1, "{:?}", t.log.warnings);
}

#[test]
fn perfect_classifier_gives_diagonal_matrices() {
    let (x, y) = separable();
    let data: Vec<_> = x.iter().zip(y.iter().copied()).collect();
    let frame = ClassFrame::seven();
    let budget = Arc::new(SetBudget::default_seven());
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 4,
        hidden: vec![8],
        ..TrainConfig::default()
    };
    let model = train_with_validation(ModelKind::Rsnn, &frame, &budget, &data, &data, &cfg).unwrap().model;
    let ids: Vec<String> = (0..x.len()).map(|i| format!("s{i}")).collect();
    let input = EvalInput {
        test_ids: &ids,
        test_x: &x,
        test_y: &y,
        uncertain_x: &[],
    };
    let r = evaluate(&model, &input, 0, "h").unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert!(r.misclassifications.is_empty());
    for i in 0..7 {
        for j in 0..7 {
            assert_eq!(r.confusion_counts[i][j] > 0, i == j);
            assert_eq!(r.confusion_entropy[i][j].is_some(), i == j);
        }
        assert_eq!(r.confusion_counts[i].iter().sum::<usize>(), r.class_counts[i]);
    }
    assert_eq!(r.histogram_regular.total(), 10);
    assert_eq!(r.mean_entropy_uncertain, None);
}

#[test]
fn rsnn_confuses_within_a_direction_more_than_across() {
    let ds = build_dataset(&DatasetConfig::default()).unwrap();
    let raster = RasterSpec::default();
    let budget = Arc::new(SetBudget::default_for(&ds.frame));
    let (trx, try_) = ds.labeled(Split::Train, &raster);
    let (vax, vay) = ds.labeled(Split::Val, &raster);
    let (tex, tey) = ds.labeled(Split::Test, &raster);
    let ids: Vec<String> = ds.split(Split::Test).map(|s| s.id.clone()).collect();
    let unc = ds.uncertain_features(&raster);
    let tr: Vec<_> = trx.iter().zip(try_.iter().copied()).collect();
    let va: Vec<_> = vax.iter().zip(vay.iter().copied()).collect();
    let dirs: Vec<_> = ds.frame.ids().map(|c| ds.frame.direction(c)).collect();
    let totals: Vec<(usize, usize)> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let m = train_with_validation(ModelKind::Rsnn, &ds.frame, &budget, &tr, &va, &cfg).unwrap().model;
            let input = EvalInput {
                test_ids: &ids,
                test_x: &tex,
                test_y: &tey,
                uncertain_x: &unc,
            };
            direction_confusion(&evaluate(&m, &input, seed, "").unwrap(), &dirs)
        })
        .collect();
    let within: usize = totals.iter().map(|t| t.0).sum();
    let across: usize = totals.iter().map(|t| t.1).sum();
    println!("within-direction {within}, across-direction {across}");
    assert!(within > across);
}

#[test]
fn active_learning_improves_on_its_seed_model() {
    let ds = build_dataset(&DatasetConfig::default()).unwrap();
    let raster = RasterSpec::default();
    let data = ALData::from_dataset(&ds, Arc::new(SetBudget::default_for(&ds.frame)), &raster);
    let logs: Vec<_> = (0..5u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ALConfig {
                experiment: Experiment::One,
                seed,
                ..ALConfig::default()
            };
            run_experiment(&data, &cfg).unwrap()
        })
        .collect();
    let mean = |r: usize| logs.iter().map(|l| l.rounds[r].test_acc.unwrap()).sum::<f64>() / logs.len() as f64;
    let last = logs[0].rounds.len() - 1;
    for l in &logs {
        assert!(l.rounds.windows(2).all(|w| w[1].labeled_total >= w[0].labeled_total));
        assert_eq!(l.rounds[0].labeled_total, 59);
    }
    assert!(mean(last) >= mean(0), "{} < {}", mean(last), mean(0));
}
