mod common;

use ambiview_core::ambiguity::split_by_threshold;
use ambiview_core::classify::{evaluate, threshold_sweep, train, EvalView, SweepConfig, SweepMember, SweepResult, TrainMember};
use ambiview_core::Error;

fn members(a: f64) -> Vec<ambiview_core::ambiguity::ThresholdSplit> {
    common::fixture().world.tables.iter().map(|t| split_by_threshold(t, a).unwrap()).collect()
}

fn train_at(a: f64, sigma: f64, seed: u64) -> ambiview_core::Result<ambiview_core::classify::CentroidClassifier> {
    let w = &common::fixture().world;
    let splits = members(a);
    let m: Vec<TrainMember<'_>> = w.objects.iter().zip(&splits).map(|(object, split)| TrainMember { object, split }).collect();
    train(&m, 2, sigma, seed)
}

fn sweep_members() -> Vec<SweepMember<'static>> {
    let w = &common::fixture().world;
    w.objects.iter().zip(&w.tables).map(|(object, table)| SweepMember { object, table }).collect()
}

#[test]
fn centroids_are_unit_and_deterministic() {
    let f = common::fixture();
    let c = train_at(0.6, f.sigma(0.1), 4).unwrap();
    for v in &c.centroids {
        assert!((v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);
    }
    assert_eq!(c, train_at(0.6, f.sigma(0.1), 4).unwrap());
    assert_ne!(c, train_at(0.6, f.sigma(0.1), 5).unwrap());
}

#[test]
fn empty_train_set_is_reported() {
    match train_at(0.0, 0.0, 0) {
        Err(Error::EmptyTrainSet { threshold, .. }) => assert_eq!(threshold, 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn noise_free_unambiguous_views_classify_well() {
    let f = common::fixture();
    let c = train_at(0.5, 0.0, 0).unwrap();
    let views: Vec<EvalView<'_>> = f
        .world
        .objects
        .iter()
        .zip(&f.world.tables)
        .flat_map(|(object, t)| {
            t.pairs.iter().zip(&t.ambiguity).filter(|(_, a)| **a < 0.25).map(move |(p, _)| EvalView { object, rotation: p.r_a })
        })
        .collect();
    let acc = evaluate(&c, &views, 300, 0.0, 1).unwrap();
    assert!(acc >= 0.95, "{acc}");
}

#[test]
fn sweep_covers_grid_and_round_trips() {
    let f = common::fixture();
    let cfg = SweepConfig {
        thresholds: vec![0.0, 0.5, 1.0],
        caps: vec![0.5, 1.0],
        trials: 2,
        samples_per_rotation: 1,
        eval_samples: 50,
        noise_sigma: f.sigma(0.1),
        seed: 3,
    };
    let r = threshold_sweep(&sweep_members(), &cfg).unwrap();
    assert_eq!(r.rows.len(), 6);
    for t in &cfg.thresholds {
        for c in &cfg.caps {
            let row = r.get(*t, *c).unwrap();
            assert_eq!(row.empty_train, *t == 0.0);
            match row.accuracy {
                Some(a) => assert!((0.0..=1.0).contains(&a)),
                None => assert!(row.empty_train),
            }
        }
    }
    assert_eq!(r, threshold_sweep(&sweep_members(), &cfg).unwrap());
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("s.csv");
    r.write_csv(&p).unwrap();
    assert_eq!(SweepResult::read_csv(&p).unwrap(), r);
}

#[test]
fn sweep_is_thread_count_independent() {
    let f = common::fixture();
    let cfg = SweepConfig {
        thresholds: vec![0.3, 1.0],
        caps: vec![1.0],
        trials: 2,
        samples_per_rotation: 1,
        eval_samples: 30,
        noise_sigma: f.sigma(0.1),
        seed: 9,
    };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| threshold_sweep(&sweep_members(), &cfg).unwrap());
    let b = four.install(|| threshold_sweep(&sweep_members(), &cfg).unwrap());
    assert_eq!(a, b);
}

#[test]
fn invalid_sweep_config_rejected() {
    let base = SweepConfig {
        thresholds: vec![0.5],
        caps: vec![1.0],
        trials: 1,
        samples_per_rotation: 1,
        eval_samples: 1,
        noise_sigma: 0.0,
        seed: 0,
    };
    assert!(base.validate().is_ok());
    for bad in [
        SweepConfig { thresholds: vec![1.5], ..base.clone() },
        SweepConfig { caps: vec![0.0], ..base.clone() },
        SweepConfig { trials: 0, ..base.clone() },
        SweepConfig { noise_sigma: -1.0, ..base.clone() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}
