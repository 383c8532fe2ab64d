//! Next-best-view selection and the closed-loop active classification
//! simulator.
//!
//! Frames: a camera pose `R_cam` and an object pose `R_obj` are both
//! expressed in the world frame. The view the camera sees is the
//! camera-to-object rotation `R_obj^T * R_cam`. A pose hypothesis from the
//! codebooks is such a view; combined with the current camera pose it yields
//! an object pose estimate `R_cam * R_view^T`, from which the view at any
//! other camera pose can be predicted.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{nearest_direction, AmbiguityTable};
use crate::classify::CentroidClassifier;
use crate::codebook::{hypotheses_for_group, Codebook, PoseHypothesis};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::so3::{fibonacci_directions, Rotation, SphericalDirection, Vec3};
use crate::synthworld::{apply_roll, render_embedding, SynthObject};
use crate::ClassId;

/// Parallel circles of constant polar angle around the object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryGrid {
    /// Polar angles in `(0, pi)`.
    pub thetas: Vec<f64>,
    /// Azimuth samples per circle.
    pub steps: usize,
    /// Camera distance in metres; metadata only.
    pub radius: f64,
}

impl TrajectoryGrid {
    /// `n_circles` circles at `theta_i = pi (i + 1) / (n_circles + 1)`.
    pub fn evenly_spaced(n_circles: usize, steps: usize) -> Self {
        Self {
            thetas: (0..n_circles)
                .map(|i| PI * (i + 1) as f64 / (n_circles + 1) as f64)
                .collect(),
            steps,
            radius: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::invalid("thetas", "need at least one circle"));
        }
        if let Some(t) = self.thetas.iter().find(|t| !(**t > 0.0 && **t < PI)) {
            return Err(Error::invalid("thetas", format!("{t} outside (0, pi)")));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "need at least one step per circle"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReachableMeta {
    Trajectory(TrajectoryGrid),
    FullSphere { n_dirs: usize },
    Explicit,
}

/// Camera orientations (world frame) the platform may assume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachableSet {
    pub rotations: Vec<Rotation>,
    pub meta: ReachableMeta,
}

impl ReachableSet {
    pub fn explicit(rotations: Vec<Rotation>) -> Result<Self> {
        if rotations.is_empty() {
            return Err(Error::invalid("reachable", "must be nonempty"));
        }
        Ok(Self {
            rotations,
            meta: ReachableMeta::Explicit,
        })
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }
}

/// Cameras on each circle of `grid` at azimuths `2 pi j / steps`, looking at
/// the origin with roll 0. Circle-major order.
pub fn build_trajectory_reachable(grid: &TrajectoryGrid) -> Result<ReachableSet> {
    grid.validate()?;
    let mut rotations = Vec::with_capacity(grid.thetas.len() * grid.steps);
    for &theta in &grid.thetas {
        for j in 0..grid.steps {
            let d = SphericalDirection {
                theta,
                phi: TAU * j as f64 / grid.steps as f64,
            };
            rotations.push(Rotation::look_at(d.to_vector(), 0.0)?);
        }
    }
    Ok(ReachableSet {
        rotations,
        meta: ReachableMeta::Trajectory(grid.clone()),
    })
}

/// Cameras at `n_dirs` Fibonacci directions with roll 0.
pub fn full_sphere_reachable(n_dirs: usize) -> Result<ReachableSet> {
    let rotations = fibonacci_directions(n_dirs)?
        .iter()
        .map(|d| Rotation::look_at(d.to_vector(), 0.0))
        .collect::<Result<_>>()?;
    Ok(ReachableSet {
        rotations,
        meta: ReachableMeta::FullSphere { n_dirs },
    })
}

/// Ambiguity table prepared for nearest-direction lookups.
#[derive(Clone, Debug)]
pub struct TableLookup {
    pub class_id: ClassId,
    directions: Vec<Vec3>,
    ambiguity: Vec<f64>,
}

impl TableLookup {
    pub fn new(table: &AmbiguityTable) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::invalid("table", "ambiguity table is empty"));
        }
        Ok(Self {
            class_id: table.object_class,
            directions: table.directions(),
            ambiguity: table.ambiguity.clone(),
        })
    }

    /// Ambiguity of the ranked orientation nearest to `view` modulo roll.
    pub fn lookup(&self, view: &Rotation) -> f64 {
        let i = nearest_direction(&self.directions, &view.view_direction()).expect("nonempty");
        self.ambiguity[i]
    }
}

fn lookup_for(tables: &[TableLookup], class: ClassId) -> Result<&TableLookup> {
    tables
        .iter()
        .find(|t| t.class_id == class)
        .ok_or(Error::UnknownClass(class))
}

/// Object pose implied by seeing `hypothesis` from camera pose `camera`.
pub fn object_pose(camera: &Rotation, hypothesis: &PoseHypothesis) -> Rotation {
    *camera * hypothesis.rotation.inverse()
}

/// Mean table ambiguity of the views the hypotheses predict for a camera at
/// `next`. With `weighted`, hypotheses are weighted by their non-negative
/// scores (falling back to the plain mean if all weights vanish).
pub fn expected_ambiguity(
    next: &Rotation,
    camera: &Rotation,
    hypotheses: &[PoseHypothesis],
    tables: &[TableLookup],
    weighted: bool,
) -> Result<f64> {
    if hypotheses.is_empty() {
        return Err(Error::invalid("hypotheses", "need at least one hypothesis"));
    }
    let mut sum = 0.0;
    let mut wsum = 0.0;
    let mut plain = 0.0;
    for h in hypotheses {
        let view = object_pose(camera, h).inverse() * *next;
        let a = lookup_for(tables, h.class_id)?.lookup(&view);
        let w = h.score.max(0.0);
        sum += w * a;
        wsum += w;
        plain += a;
    }
    if weighted && wsum > 0.0 {
        Ok(sum / wsum)
    } else {
        Ok(plain / hypotheses.len() as f64)
    }
}

/// Reachable index minimising [`expected_ambiguity`]. Ties go to `current`
/// when it is among the minimisers, otherwise to the lowest index.
pub fn next_best_view(
    camera: &Rotation,
    hypotheses: &[PoseHypothesis],
    tables: &[TableLookup],
    reachable: &ReachableSet,
    current: Option<usize>,
    weighted: bool,
) -> Result<usize> {
    if reachable.is_empty() {
        return Err(Error::invalid("reachable", "must be nonempty"));
    }
    let scores = reachable
        .rotations
        .iter()
        .map(|r| expected_ambiguity(r, camera, hypotheses, tables, weighted))
        .collect::<Result<Vec<_>>>()?;
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if let Some(c) = current {
        if scores.get(c) == Some(&min) {
            return Ok(c);
        }
    }
    Ok(scores.iter().position(|s| *s == min).expect("nonempty"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    NextBest,
    Random,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::NextBest => "next_best",
            Policy::Random => "random",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BelowThreshold,
    LocalOptimum,
    MoveBudget,
}

/// Everything an episode needs to know about the world.
#[derive(Clone, Copy)]
pub struct ActiveWorld<'a> {
    pub objects: &'a [SynthObject],
    pub codebooks: &'a [Codebook],
    pub tables: &'a [TableLookup],
    pub classifier: &'a CentroidClassifier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeParams {
    pub threshold: f64,
    pub max_moves: usize,
    /// Per-component observation noise.
    pub noise_sigma: f64,
    /// Pose hypotheses per class.
    pub hypotheses_per_class: usize,
    pub weighted: bool,
}

impl EpisodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid("threshold", "must lie in (0, 1]"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
        }
        if self.hypotheses_per_class == 0 {
            return Err(Error::invalid("hypotheses_per_class", "must be at least 1"));
        }
        Ok(())
    }
}

/// Initial conditions of one episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStart {
    pub true_class: ClassId,
    /// Object orientation in the world frame.
    pub object_pose: Rotation,
    /// Index of the starting camera pose in the reachable set.
    pub camera_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub policy: Policy,
    /// True object orientation in the world frame.
    pub object_pose: Rotation,
    pub start: Rotation,
    /// Camera poses, starting with `start`.
    pub visited: Vec<Rotation>,
    /// Reachable-set indices of `visited`.
    pub visited_indices: Vec<usize>,
    /// Estimated mean ambiguity at every visited pose.
    pub ambiguities: Vec<f64>,
    /// Observation noise seed used at every visited pose.
    pub noise_seeds: Vec<u64>,
    pub moves_used: usize,
    pub terminated_reason: Termination,
    pub predicted_class: ClassId,
    pub true_class: ClassId,
    pub correct: bool,
}

/// Noise seed of the observation at step `t` of an episode.
pub fn observation_seed(episode_seed: u64, t: usize) -> u64 {
    derive_seed(episode_seed, "obs", t as u64)
}

/// Runs one episode. Observation noise depends only on `(seed, step)`, so
/// both policies see identical noise at equal steps.
pub fn run_episode(
    world: &ActiveWorld<'_>,
    reachable: &ReachableSet,
    start: &EpisodeStart,
    params: &EpisodeParams,
    policy: Policy,
    seed: u64,
) -> Result<EpisodeResult> {
    params.validate()?;
    if start.camera_index >= reachable.len() {
        return Err(Error::invalid("camera_index", "outside the reachable set"));
    }
    let obj = world
        .objects
        .iter()
        .find(|o| o.class_id == start.true_class)
        .ok_or(Error::UnknownClass(start.true_class))?;
    let mut policy_rng = stream(seed, "random-policy", 0);
    let mut cur = start.camera_index;
    let mut visited_indices = vec![cur];
    let mut ambiguities = Vec::new();
    let mut noise_seeds = Vec::new();
    let obj_inv = start.object_pose.inverse();
    loop {
        let t = visited_indices.len() - 1;
        let camera = reachable.rotations[cur];
        let noise_seed = observation_seed(seed, t);
        noise_seeds.push(noise_seed);
        let view = obj_inv * camera;
        let z = render_embedding(obj, &view, params.noise_sigma, noise_seed);
        let hyps = hypotheses_for_group(world.codebooks, z.as_slice(), params.hypotheses_per_class)?;
        let amb = expected_ambiguity(&camera, &camera, &hyps, world.tables, params.weighted)?;
        ambiguities.push(amb);
        let moves = visited_indices.len() - 1;
        let reason = if amb < params.threshold {
            Some(Termination::BelowThreshold)
        } else {
            let next = match policy {
                Policy::NextBest => Some(next_best_view(
                    &camera,
                    &hyps,
                    world.tables,
                    reachable,
                    Some(cur),
                    params.weighted,
                )?),
                Policy::Random if reachable.len() > 1 => {
                    let others: Vec<usize> = (0..reachable.len()).filter(|i| *i != cur).collect();
                    Some(*others.choose(&mut policy_rng).expect("nonempty"))
                }
                Policy::Random => None,
            };
            match next {
                Some(n) if n == cur => Some(Termination::LocalOptimum),
                None => Some(Termination::LocalOptimum),
                Some(_) if moves >= params.max_moves => Some(Termination::MoveBudget),
                Some(n) => {
                    cur = n;
                    visited_indices.push(cur);
                    None
                }
            }
        };
        if let Some(reason) = reason {
            // classify in the roll-free frame of the best hypothesis
            let mut derolled = z.0.clone();
            apply_roll(&mut derolled, -hyps[0].rotation.roll());
            let predicted = world.classifier.predict(&derolled)?.class_id;
            return Ok(EpisodeResult {
                policy,
                object_pose: start.object_pose,
                start: reachable.rotations[start.camera_index],
                visited: visited_indices.iter().map(|&i| reachable.rotations[i]).collect(),
                moves_used: visited_indices.len() - 1,
                visited_indices,
                ambiguities,
                noise_seeds,
                terminated_reason: reason,
                predicted_class: predicted,
                true_class: start.true_class,
                correct: predicted == start.true_class,
            });
        }
    }
}

/// Uniformly distributed rotation.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(r) = Rotation::from_quaternion(q[0], q[1], q[2], q[3]) {
            return r;
        }
    }
}

/// Episode `i` of an experiment: class, object pose and starting camera
/// drawn from `(seed, "episode", i)`.
pub fn episode_start(classes: &[ClassId], reachable: &ReachableSet, seed: u64, i: usize) -> EpisodeStart {
    let mut rng = stream(seed, "episode", i as u64);
    EpisodeStart {
        true_class: classes[rng.random_range(0..classes.len())],
        object_pose: random_rotation(&mut rng),
        camera_index: rng.random_range(0..reachable.len()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentStats {
    pub policy: Policy,
    pub n_episodes: usize,
    /// Entry `k`: fraction of episodes classified correctly using at most
    /// `k` moves, for `k = 0..=max_moves`.
    pub success_by_budget: Vec<f64>,
    pub accuracy: f64,
    pub mean_moves: f64,
    pub episodes: Vec<EpisodeResult>,
}

/// Runs `n_episodes` episodes of `policy`. Episode `i` uses starting
/// conditions and noise derived from `(seed, i)` only, so experiments with
/// different policies are paired and results do not depend on scheduling.
pub fn run_experiment(
    world: &ActiveWorld<'_>,
    reachable: &ReachableSet,
    params: &EpisodeParams,
    policy: Policy,
    n_episodes: usize,
    seed: u64,
) -> Result<ExperimentStats> {
    if n_episodes == 0 {
        return Err(Error::invalid("n_episodes", "must be at least 1"));
    }
    params.validate()?;
    let classes: Vec<ClassId> = world.objects.iter().map(|o| o.class_id).collect();
    let episodes = (0..n_episodes)
        .into_par_iter()
        .map(|i| {
            let start = episode_start(&classes, reachable, seed, i);
            run_episode(world, reachable, &start, params, policy, derive_seed(seed, "episode-run", i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(policy, params.max_moves, episodes))
}

pub fn summarize(policy: Policy, max_moves: usize, episodes: Vec<EpisodeResult>) -> ExperimentStats {
    let n = episodes.len().max(1) as f64;
    let success_by_budget = (0..=max_moves)
        .map(|k| {
            episodes
                .iter()
                .filter(|e| e.correct && e.moves_used <= k)
                .count() as f64
                / n
        })
        .collect();
    ExperimentStats {
        policy,
        n_episodes: episodes.len(),
        success_by_budget,
        accuracy: episodes.iter().filter(|e| e.correct).count() as f64 / n,
        mean_moves: episodes.iter().map(|e| e.moves_used as f64).sum::<f64>() / n,
        episodes,
    }
}

/// One JSON object per episode, in episode order.
pub fn write_episodes_jsonl(episodes: &[EpisodeResult], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for e in episodes {
        serde_json::to_writer(&mut out, e).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_episodes_jsonl(path: &Path) -> Result<Vec<EpisodeResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// Long-format success curve: `policy,k,success_fraction`.
pub fn write_success_csv(stats: &[ExperimentStats], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(["policy", "k", "success_fraction"])
        .map_err(csv_err)?;
    for s in stats {
        for (k, f) in s.success_by_budget.iter().enumerate() {
            w.serialize((s.policy.name(), k, f)).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambiguity::MatchedPair;
    use crate::so3::geodesic_distance;

    #[test]
    fn trajectory_counts() {
        let one = build_trajectory_reachable(&TrajectoryGrid::evenly_spaced(1, 1)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(build_trajectory_reachable(&TrajectoryGrid::evenly_spaced(5, 32)).unwrap().len(), 160);
        assert_eq!(build_trajectory_reachable(&TrajectoryGrid::evenly_spaced(3, 128)).unwrap().len(), 384);
        assert!(build_trajectory_reachable(&TrajectoryGrid::evenly_spaced(0, 3)).is_err());
        let bad = TrajectoryGrid {
            thetas: vec![0.0],
            steps: 3,
            radius: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trajectory_views_lie_on_circles() {
        let g = TrajectoryGrid::evenly_spaced(3, 8);
        let set = build_trajectory_reachable(&g).unwrap();
        for (k, r) in set.rotations.iter().enumerate() {
            let theta = g.thetas[k / 8];
            assert!((r.view_direction()[2] - theta.cos()).abs() < 1e-12);
            assert!(r.roll().min(TAU - r.roll()) < 1e-9);
        }
    }

    fn lookup_with(class: u32, dirs: &[Vec3], amb: &[f64]) -> TableLookup {
        TableLookup {
            class_id: ClassId(class),
            directions: dirs.to_vec(),
            ambiguity: amb.to_vec(),
        }
    }

    fn hyp(class: u32, rotation: Rotation) -> PoseHypothesis {
        PoseHypothesis {
            class_id: ClassId(class),
            rotation,
            score: 0.9,
            entry: 0,
        }
    }

    #[test]
    fn expected_ambiguity_is_mean_of_lookups() {
        let dirs = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        let tables = [lookup_with(0, &dirs, &[0.2, 0.9]), lookup_with(1, &dirs, &[0.6, 0.1])];
        let hyps = [hyp(0, Rotation::IDENTITY), hyp(1, Rotation::IDENTITY)];
        let e = expected_ambiguity(&Rotation::IDENTITY, &Rotation::IDENTITY, &hyps, &tables, false).unwrap();
        assert!((e - 0.4).abs() < 1e-15);
        assert!(expected_ambiguity(&Rotation::IDENTITY, &Rotation::IDENTITY, &[], &tables, false).is_err());
    }

    #[test]
    fn singleton_reachable_returns_current() {
        let dirs = [[0.0, 0.0, 1.0]];
        let tables = [lookup_with(0, &dirs, &[0.5])];
        let hyps = [hyp(0, Rotation::IDENTITY)];
        let set = ReachableSet::explicit(vec![Rotation::about_x(0.3)]).unwrap();
        assert_eq!(next_best_view(&set.rotations[0], &hyps, &tables, &set, Some(0), false).unwrap(), 0);
    }

    #[test]
    fn next_best_moves_to_less_ambiguous_side() {
        let dirs = [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]];
        let tables = [lookup_with(0, &dirs, &[1.0, 0.0])];
        // the object is seen from +z at the identity camera
        let hyps = [hyp(0, Rotation::IDENTITY)];
        let set = ReachableSet::explicit(vec![Rotation::IDENTITY, Rotation::about_x(PI)]).unwrap();
        assert_eq!(next_best_view(&Rotation::IDENTITY, &hyps, &tables, &set, Some(0), false).unwrap(), 1);
        // ties keep the current pose
        let flat = [lookup_with(0, &dirs, &[0.3, 0.3])];
        assert_eq!(next_best_view(&Rotation::IDENTITY, &hyps, &flat, &set, Some(1), false).unwrap(), 1);
        assert_eq!(next_best_view(&Rotation::IDENTITY, &hyps, &flat, &set, None, false).unwrap(), 0);
    }

    #[test]
    fn object_pose_round_trip() {
        let obj = Rotation::from_euler(0.3, -1.0, 2.0);
        let cam = Rotation::from_euler(-0.7, 0.2, 0.4);
        let view = obj.inverse() * cam;
        let h = hyp(0, view);
        assert!(geodesic_distance(&object_pose(&cam, &h), &obj) < 1e-12);
    }

    #[test]
    fn table_lookup_uses_nearest_direction() {
        let pairs: Vec<MatchedPair> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&a| MatchedPair {
                similarity: 1.0 - 0.1 * a,
                r_a: Rotation::look_at([a.cos(), a.sin(), 0.0], 0.0).unwrap(),
                r_b: Rotation::IDENTITY,
                matched_class: ClassId(1),
            })
            .collect();
        let table = AmbiguityTable::from_pairs(ClassId(0), pairs);
        let lk = TableLookup::new(&table).unwrap();
        let q = Rotation::look_at([1.0f64.cos(), 1.0f64.sin(), 0.1], 2.5).unwrap();
        assert_eq!(lk.lookup(&q), table.ambiguity[1]);
        assert_eq!(table.lookup(&q), Some(table.ambiguity[1]));
    }

    #[test]
    fn success_curve_is_monotone() {
        let mk = |moves: usize, correct: bool| EpisodeResult {
            policy: Policy::Random,
            object_pose: Rotation::IDENTITY,
            start: Rotation::IDENTITY,
            visited: vec![Rotation::IDENTITY; moves + 1],
            visited_indices: vec![0; moves + 1],
            ambiguities: vec![0.5; moves + 1],
            noise_seeds: vec![0; moves + 1],
            moves_used: moves,
            terminated_reason: Termination::MoveBudget,
            predicted_class: ClassId(0),
            true_class: ClassId(0),
            correct,
        };
        let s = summarize(Policy::Random, 3, vec![mk(0, true), mk(2, true), mk(1, false), mk(3, true)]);
        assert_eq!(s.success_by_budget, vec![0.25, 0.25, 0.5, 0.75]);
        assert_eq!(s.accuracy, 0.75);
    }
}
