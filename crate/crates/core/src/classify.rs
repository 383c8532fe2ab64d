//! In-group nearest-centroid classifier trained on ambiguity-filtered views,
//! and the training-threshold sweep.
//!
//! Noise levels are absolute per-component standard deviations; use
//! [`relative_noise_sigma`] to express them as a fraction of the typical
//! embedding norm.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{split_by_threshold, AmbiguityTable, ThresholdSplit};
use crate::codebook::cossim;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::so3::Rotation;
use crate::synthworld::{mean_embedding_norm, render_embedding, SynthObject};
use crate::ClassId;

/// Per-component sigma equal to `relative` times the mean noise-free
/// embedding norm of `obj` over `views`.
pub fn relative_noise_sigma(relative: f64, obj: &SynthObject, views: &[Rotation]) -> f64 {
    relative * mean_embedding_norm(obj, views)
}

/// Default relative noise level for training and evaluation.
pub const DEFAULT_RELATIVE_NOISE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidClassifier {
    pub classes: Vec<ClassId>,
    /// Unit-norm, parallel to `classes`.
    pub centroids: Vec<Vec<f64>>,
    pub threshold: f64,
    pub noise_sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_id: ClassId,
    /// Best minus second-best centroid similarity (best + 1 with one class).
    pub margin: f64,
}

impl CentroidClassifier {
    /// Class of the most similar centroid; ties go to the earlier class.
    pub fn predict(&self, z: &[f64]) -> Result<Prediction> {
        let mut best = (f64::NEG_INFINITY, 0usize);
        let mut second = -1.0f64;
        for (i, c) in self.centroids.iter().enumerate() {
            let s = cossim(z, c)?;
            if s > best.0 {
                if best.0 > f64::NEG_INFINITY {
                    second = second.max(best.0);
                }
                best = (s, i);
            } else {
                second = second.max(s);
            }
        }
        let class_id = *self
            .classes
            .get(best.1)
            .ok_or_else(|| Error::invalid("classifier", "no classes"))?;
        Ok(Prediction {
            class_id,
            margin: best.0 - second,
        })
    }
}

/// One class's object and its threshold split.
#[derive(Clone, Copy)]
pub struct TrainMember<'a> {
    pub object: &'a SynthObject,
    pub split: &'a ThresholdSplit,
}

/// Trains one centroid per member: the normalised mean of
/// `samples_per_rotation` noisy renders of every training rotation.
///
/// Fails with [`Error::EmptyTrainSet`] naming the first class without
/// training views.
pub fn train(
    members: &[TrainMember<'_>],
    samples_per_rotation: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<CentroidClassifier> {
    if members.is_empty() {
        return Err(Error::invalid("members", "need at least one class"));
    }
    if samples_per_rotation == 0 {
        return Err(Error::invalid("samples_per_rotation", "must be at least 1"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
    }
    let threshold = members[0].split.threshold;
    let mut classes = Vec::with_capacity(members.len());
    let mut centroids = Vec::with_capacity(members.len());
    for (ci, m) in members.iter().enumerate() {
        let class = m.object.class_id;
        if m.split.train.is_empty() {
            return Err(Error::EmptyTrainSet {
                class,
                threshold: m.split.threshold,
            });
        }
        let mut rng = stream(seed, "train-noise", ci as u64);
        let mut acc = vec![0.0; m.object.descriptor_dim()];
        for r in &m.split.train {
            for _ in 0..samples_per_rotation {
                let z = render_embedding(m.object, r, noise_sigma, rng.random());
                for (a, v) in acc.iter_mut().zip(z.as_slice()) {
                    *a += v;
                }
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroNorm("classify::train centroid"));
        }
        classes.push(class);
        centroids.push(acc.into_iter().map(|v| v / norm).collect());
    }
    Ok(CentroidClassifier {
        classes,
        centroids,
        threshold,
        noise_sigma,
    })
}

/// A labelled view to classify.
#[derive(Clone, Copy)]
pub struct EvalView<'a> {
    pub object: &'a SynthObject,
    pub rotation: Rotation,
}

/// Fraction of `n_samples` views drawn uniformly (with replacement) from
/// `views`, rendered with noise and classified correctly.
pub fn evaluate(
    clf: &CentroidClassifier,
    views: &[EvalView<'_>],
    n_samples: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<f64> {
    if views.is_empty() {
        return Err(Error::invalid("views", "evaluation set is empty"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut rng = stream(seed, "eval-sample", 0);
    let mut correct = 0usize;
    for _ in 0..n_samples {
        let v = &views[rng.random_range(0..views.len())];
        let z = render_embedding(v.object, &v.rotation, noise_sigma, rng.random());
        if clf.predict(z.as_slice())?.class_id == v.object.class_id {
            correct += 1;
        }
    }
    Ok(correct as f64 / n_samples as f64)
}

/// One class of the sweep: its object and ambiguity table.
#[derive(Clone, Copy)]
pub struct SweepMember<'a> {
    pub object: &'a SynthObject,
    pub table: &'a AmbiguityTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Training thresholds, each in `[0, 1]`; 0 yields marker rows.
    pub thresholds: Vec<f64>,
    /// Evaluation caps in `(0, 1]`: views with ambiguity `< cap` are scored.
    pub caps: Vec<f64>,
    pub trials: usize,
    pub samples_per_rotation: usize,
    /// Evaluation samples per trial and cell.
    pub eval_samples: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SweepConfig {
    /// `0.0, 0.1, ..., 1.0`; the 0 row documents the empty-train boundary.
    pub fn default_thresholds() -> Vec<f64> {
        (0..=10).map(|i| i as f64 / 10.0).collect()
    }

    pub fn default_caps() -> Vec<f64> {
        vec![0.25, 0.5, 0.75, 1.0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() || self.caps.is_empty() {
            return Err(Error::invalid("thresholds/caps", "must be nonempty"));
        }
        if let Some(t) = self.thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::invalid("thresholds", format!("{t} outside [0, 1]")));
        }
        if let Some(c) = self.caps.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
            return Err(Error::invalid("caps", format!("{c} outside (0, 1]")));
        }
        if self.trials == 0 || self.samples_per_rotation == 0 || self.eval_samples == 0 {
            return Err(Error::invalid(
                "trials/samples_per_rotation/eval_samples",
                "must be at least 1",
            ));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// One `(threshold, cap)` cell averaged over trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub cap: f64,
    /// `None` when training was impossible or nothing lies below the cap.
    pub accuracy: Option<f64>,
    /// Evaluated views summed over trials.
    pub n_samples: usize,
    pub empty_train: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn get(&self, threshold: f64, cap: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.threshold == threshold && r.cap == cap)
    }

    /// Writes `threshold,cap,accuracy,n_samples,empty_train`; marker rows
    /// leave `accuracy` empty.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(csv_err)?;
        w.write_record(["threshold", "cap", "accuracy", "n_samples", "empty_train"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.serialize((
                r.threshold,
                r.cap,
                r.accuracy,
                r.n_samples,
                r.empty_train,
            ))
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let rows = r
            .deserialize::<(f64, f64, Option<f64>, usize, bool)>()
            .map(|row| {
                row.map(|(threshold, cap, accuracy, n_samples, empty_train)| SweepRow {
                    threshold,
                    cap,
                    accuracy,
                    n_samples,
                    empty_train,
                })
                .map_err(|source| Error::Csv {
                    path: path.to_path_buf(),
                    source,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }
}

/// Views of every member whose ambiguity is below `cap`.
pub fn views_below<'a>(members: &[SweepMember<'a>], cap: f64) -> Vec<EvalView<'a>> {
    members
        .iter()
        .flat_map(|m| {
            m.table
                .pairs
                .iter()
                .zip(&m.table.ambiguity)
                .filter(move |(_, a)| **a < cap)
                .map(move |(p, _)| EvalView {
                    object: m.object,
                    rotation: p.r_a,
                })
        })
        .collect()
}

/// Trains at every threshold and scores on noisy views below every cap.
///
/// Trial `t` at threshold index `i` trains with seed `(seed, "sweep-train",
/// i * trials + t)`; evaluation at cap index `j` uses `(seed, "sweep-eval",
/// j * trials + t)` for every threshold, so thresholds are compared on the
/// same evaluation draws.
pub fn threshold_sweep(members: &[SweepMember<'_>], cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if members.is_empty() {
        return Err(Error::invalid("members", "need at least one class"));
    }
    let eval_sets: Vec<Vec<EvalView<'_>>> =
        cfg.caps.iter().map(|&c| views_below(members, c)).collect();
    let cells: Vec<(usize, usize)> = (0..cfg.thresholds.len())
        .flat_map(|i| (0..cfg.caps.len()).map(move |j| (i, j)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, j)| {
            let threshold = cfg.thresholds[i];
            let cap = cfg.caps[j];
            let splits: Vec<ThresholdSplit> = members
                .iter()
                .map(|m| split_by_threshold(m.table, threshold))
                .collect::<Result<_>>()?;
            let train_members: Vec<TrainMember<'_>> = members
                .iter()
                .zip(&splits)
                .map(|(m, split)| TrainMember {
                    object: m.object,
                    split,
                })
                .collect();
            let mut correct_sum = 0.0;
            let mut n_samples = 0;
            for t in 0..cfg.trials {
                let train_seed = derive_seed(cfg.seed, "sweep-train", (i * cfg.trials + t) as u64);
                let clf = match train(&train_members, cfg.samples_per_rotation, cfg.noise_sigma, train_seed) {
                    Ok(c) => c,
                    Err(Error::EmptyTrainSet { .. }) => {
                        return Ok(SweepRow {
                            threshold,
                            cap,
                            accuracy: None,
                            n_samples: 0,
                            empty_train: true,
                        })
                    }
                    Err(e) => return Err(e),
                };
                if eval_sets[j].is_empty() {
                    break;
                }
                let eval_seed = derive_seed(cfg.seed, "sweep-eval", (j * cfg.trials + t) as u64);
                let acc = evaluate(&clf, &eval_sets[j], cfg.eval_samples, cfg.noise_sigma, eval_seed)?;
                correct_sum += acc * cfg.eval_samples as f64;
                n_samples += cfg.eval_samples;
            }
            Ok(SweepRow {
                threshold,
                cap,
                accuracy: (n_samples > 0).then(|| correct_sum / n_samples as f64),
                n_samples,
                empty_train: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::MatchedPair;
    use crate::synthworld::{make_ambiguous_pair, render_clean, PairParams};

    fn small_pair() -> (SynthObject, SynthObject) {
        make_ambiguous_pair(&PairParams {
            n_blobs: 64,
            descriptor_dim: 8,
            ..PairParams::default()
        })
        .unwrap()
    }

    fn split_of(rots: Vec<Rotation>, threshold: f64) -> ThresholdSplit {
        ThresholdSplit {
            threshold,
            train: rots,
            ambiguous: Vec::new(),
        }
    }

    #[test]
    fn single_view_centroid_is_normalized_embedding() {
        let (a, b) = small_pair();
        let r = Rotation::look_at([1.0, 0.2, 0.1], 0.0).unwrap();
        let (sa, sb) = (split_of(vec![r], 0.5), split_of(vec![r], 0.5));
        let clf = train(
            &[
                TrainMember { object: &a, split: &sa },
                TrainMember { object: &b, split: &sb },
            ],
            1,
            0.0,
            3,
        )
        .unwrap();
        let z = render_clean(&a, &r).normalized().unwrap();
        for (c, want) in clf.centroids[0].iter().zip(z.as_slice()) {
            assert!((c - want).abs() < 1e-15);
        }
        let p = clf.predict(z.as_slice()).unwrap();
        assert_eq!(p.class_id, a.class_id);
        assert!(p.margin >= 0.0);
        let scaled = clf.predict(z.scaled(7.5).as_slice()).unwrap();
        assert_eq!(scaled.class_id, p.class_id);
        assert!((scaled.margin - p.margin).abs() < 1e-12);
    }

    #[test]
    fn empty_train_names_class_and_threshold() {
        let (a, _) = small_pair();
        let s = split_of(Vec::new(), 0.0);
        let err = train(&[TrainMember { object: &a, split: &s }], 1, 0.0, 0).unwrap_err();
        match err {
            Error::EmptyTrainSet { class, threshold } => {
                assert_eq!(class, a.class_id);
                assert_eq!(threshold, 0.0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (a, b) = small_pair();
        let rots: Vec<Rotation> = (0..5).map(|i| Rotation::about_y(0.4 * i as f64)).collect();
        let (sa, sb) = (split_of(rots.clone(), 1.0), split_of(rots, 1.0));
        let members = [
            TrainMember { object: &a, split: &sa },
            TrainMember { object: &b, split: &sb },
        ];
        assert_eq!(train(&members, 3, 0.2, 11).unwrap(), train(&members, 3, 0.2, 11).unwrap());
        assert_ne!(train(&members, 3, 0.2, 11).unwrap(), train(&members, 3, 0.2, 12).unwrap());
    }

    #[test]
    fn single_class_margin_uses_minus_one() {
        let clf = CentroidClassifier {
            classes: vec![ClassId(4)],
            centroids: vec![vec![1.0, 0.0]],
            threshold: 0.5,
            noise_sigma: 0.0,
        };
        let p = clf.predict(&[1.0, 0.0]).unwrap();
        assert_eq!(p.class_id, ClassId(4));
        assert_eq!(p.margin, 2.0);
    }

    fn toy_table(class: u32, rots: &[Rotation]) -> AmbiguityTable {
        let pairs = rots
            .iter()
            .enumerate()
            .map(|(i, r)| MatchedPair {
                similarity: 1.0 - 0.01 * i as f64,
                r_a: *r,
                r_b: *r,
                matched_class: ClassId(1 - class),
            })
            .collect();
        AmbiguityTable::from_pairs(ClassId(class), pairs)
    }

    #[test]
    fn sweep_marks_empty_train_and_is_deterministic() {
        let (a, b) = small_pair();
        let rots: Vec<Rotation> = (0..8)
            .map(|i| Rotation::look_at([(i as f64).cos(), (i as f64).sin(), 0.3], 0.0).unwrap())
            .collect();
        let (ta, tb) = (toy_table(0, &rots), toy_table(1, &rots));
        let members = [
            SweepMember { object: &a, table: &ta },
            SweepMember { object: &b, table: &tb },
        ];
        let cfg = SweepConfig {
            thresholds: vec![0.0, 0.5, 1.0],
            caps: vec![0.5, 1.0],
            trials: 2,
            samples_per_rotation: 1,
            eval_samples: 20,
            noise_sigma: 0.1,
            seed: 5,
        };
        let r1 = threshold_sweep(&members, &cfg).unwrap();
        assert_eq!(r1.rows.len(), 6);
        assert!(r1.rows[..2].iter().all(|r| r.empty_train && r.accuracy.is_none()));
        assert!(r1.rows[2..].iter().all(|r| !r.empty_train && r.n_samples == 40));
        assert_eq!(r1, threshold_sweep(&members, &cfg).unwrap());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        r1.write_csv(&path).unwrap();
        assert_eq!(SweepResult::read_csv(&path).unwrap(), r1);
    }

    #[test]
    fn sweep_rejects_bad_config() {
        let cfg = SweepConfig {
            thresholds: vec![1.5],
            caps: vec![0.5],
            trials: 1,
            samples_per_rotation: 1,
            eval_samples: 1,
            noise_sigma: 0.0,
            seed: 0,
        };
        assert!(cfg.validate().is_err());
    }
}
