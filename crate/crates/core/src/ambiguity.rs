//! Viewpoint ambiguity ranking.
//!
//! For every orientation of an object on a coarse, roll-free grid, the most
//! similar view of each other object in the group is found by seeding from
//! that object's codebook and refining with a derivative-free coordinate
//! descent. The worst case over the other objects is the raw ambiguity; raw
//! values are sorted and mapped affinely onto `[0, 1]` per ranked object.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::{cossim_unchecked, estimate_pose, Codebook};
use crate::error::{Error, Result};
use crate::so3::{cross3, dot3, normalize3, uniform_spacing, Rotation, Vec3, ViewGrid, AXIS_X};
use crate::synthworld::{render_clean, SynthObject};
use crate::ClassId;

/// Coordinate-descent schedule for the most-similar-view search.
///
/// The search moves along the three intrinsic Z-Y-X Euler increments applied
/// in the current camera frame. Sweep `s` uses the step `initial_step / 2^s`:
/// it polls all three axes at `+-step` (doubling the step along an axis while
/// that keeps improving) and repeats the poll until no axis improves; after
/// each successful poll its net displacement is tried again as a pattern
/// move, and each sweep ends with steps to the stationary point of a
/// central-difference quadratic model in view coordinates. Only
/// strict improvements are accepted, so the result of `n` sweeps is a prefix
/// of the result of `n + 1` sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    pub steps: usize,
    pub initial_step: f64,
}

impl DescentConfig {
    /// Starts at twice the expected spacing of a coarse grid of `n_dirs`
    /// directions.
    pub fn for_coarse_grid(steps: usize, n_dirs: usize) -> Self {
        Self {
            steps,
            initial_step: 2.0 * uniform_spacing(n_dirs.max(1)),
        }
    }
}

/// Doubling expansions allowed along one axis within a probe.
const MAX_EXPANSIONS: usize = 24;
/// Polls of all three axes at one step size before it is halved.
const MAX_POLLS: usize = 64;
/// Quadratic-model steps tried at the end of a sweep.
const MAX_NEWTON: usize = 4;
/// Floors on central-difference spacings; below them the differences of a
/// similarity close to 1 drown in rounding error.
const MIN_GRAD_SPACING: f64 = 1e-6;
const MIN_HESS_SPACING: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewMatch {
    pub rotation: Rotation,
    pub similarity: f64,
}

struct Objective<'a> {
    z: &'a [f64],
    target: &'a SynthObject,
}

impl Objective<'_> {
    fn eval(&self, r: &Rotation) -> f64 {
        let s = cossim_unchecked(self.z, render_clean(self.target, r).as_slice());
        // an all-invisible target view has no direction
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    }
}

fn axis_step(axis: usize, angle: f64) -> Rotation {
    match axis {
        0 => Rotation::about_z(angle),
        1 => Rotation::about_y(angle),
        _ => Rotation::about_x(angle),
    }
}

/// Probes `+-h` along one axis and, on success, keeps doubling the step
/// while the similarity strictly improves.
fn line_probe(obj: &Objective<'_>, cur: &mut Rotation, best: &mut f64, axis: usize, h: f64) -> bool {
    let plus = *cur * axis_step(axis, h);
    let minus = *cur * axis_step(axis, -h);
    let (fp, fm) = (obj.eval(&plus), obj.eval(&minus));
    let (cand, fc, sign) = if fp >= fm { (plus, fp, 1.0) } else { (minus, fm, -1.0) };
    if fc <= *best {
        return false;
    }
    *cur = cand;
    *best = fc;
    let mut step = h;
    for _ in 0..MAX_EXPANSIONS {
        step *= 2.0;
        let next = *cur * axis_step(axis, sign * step);
        let fnext = obj.eval(&next);
        if fnext > *best {
            *cur = next;
            *best = fnext;
        } else {
            break;
        }
    }
    true
}

/// Re-applies the net displacement of the last poll, doubling it while the
/// similarity strictly improves.
fn pattern_move(obj: &Objective<'_>, cur: &mut Rotation, best: &mut f64, delta: Rotation) {
    let mut step = delta;
    for _ in 0..MAX_EXPANSIONS {
        let next = *cur * step;
        let fnext = obj.eval(&next);
        if fnext > *best {
            *cur = next;
            *best = fnext;
            step = step * step;
        } else {
            break;
        }
    }
}

/// Local chart around a rotation in view coordinates: two tilts of the view
/// direction along a fixed tangent basis and a change of in-plane roll.
struct ViewChart {
    dir: Vec3,
    e1: Vec3,
    e2: Vec3,
    roll: f64,
}

impl ViewChart {
    fn at(r: &Rotation) -> Self {
        let d = r.view_direction();
        // tangent basis from the coordinate axis least aligned with d
        let k = (0..3)
            .min_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()))
            .unwrap_or(0);
        let mut a = [0.0; 3];
        a[k] = 1.0;
        let e1 = normalize3(&cross3(&d, &a)).unwrap_or(AXIS_X);
        let e2 = cross3(&d, &e1);
        Self {
            dir: d,
            e1,
            e2,
            roll: r.roll(),
        }
    }

    fn rotation(&self, u: &[f64; 3]) -> Rotation {
        let v = [
            self.dir[0] + u[0] * self.e1[0] + u[1] * self.e2[0],
            self.dir[1] + u[0] * self.e1[1] + u[1] * self.e2[1],
            self.dir[2] + u[0] * self.e1[2] + u[1] * self.e2[2],
        ];
        Rotation::look_at(v, self.roll + u[2]).unwrap_or(Rotation::IDENTITY)
    }
}

/// Fits a quadratic model of the similarity in view coordinates around the
/// current rotation by central differences and tries its stationary point
/// (then half and quarter of it). The gradient uses spacing
/// `max(h, MIN_GRAD_SPACING)`, the curvature `max(h, MIN_HESS_SPACING)`.
/// Skipped unless the model is concave. Returns whether the similarity
/// improved.
///
/// View coordinates keep the model well conditioned near the antipode of
/// the canonical view axis, where roll and tilt increments of the camera
/// frame become strongly coupled.
fn newton_move(obj: &Objective<'_>, cur: &mut Rotation, best: &mut f64, h: f64) -> bool {
    let chart = ViewChart::at(cur);
    let at = |u: [f64; 3]| obj.eval(&chart.rotation(&u));
    let f0 = at([0.0; 3]);
    let unit = |i: usize, s: f64| {
        let mut u = [0.0; 3];
        u[i] = s;
        u
    };
    let hh = h.max(MIN_HESS_SPACING);
    let hg = h.max(MIN_GRAD_SPACING);
    let mut fp = [0.0; 3];
    let mut fm = [0.0; 3];
    for i in 0..3 {
        fp[i] = at(unit(i, hh));
        fm[i] = at(unit(i, -hh));
    }
    let mut g = [0.0; 3];
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        g[i] = if hg == hh {
            (fp[i] - fm[i]) / (2.0 * hh)
        } else {
            (at(unit(i, hg)) - at(unit(i, -hg))) / (2.0 * hg)
        };
        hess[i][i] = (fp[i] + fm[i] - 2.0 * f0) / (hh * hh);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let mut u = [0.0; 3];
            u[i] = hh;
            u[j] = hh;
            let hij = (at(u) - fp[i] - fp[j] + f0) / (hh * hh);
            hess[i][j] = hij;
            hess[j][i] = hij;
        }
    }
    if !g.iter().chain(hess.iter().flatten()).all(|v| v.is_finite()) {
        return false;
    }
    // maximising: step = -H^-1 g, requires H negative definite
    let neg = hess.map(|row| row.map(|v| -v));
    let Some(step) = solve_spd3(&neg, &g) else {
        return false;
    };
    let mut scale = 1.0;
    for _ in 0..3 {
        let u = step.map(|v| scale * v);
        let cand = chart.rotation(&u);
        let fc = obj.eval(&cand);
        if fc > *best {
            *cur = cand;
            *best = fc;
            return true;
        }
        scale *= 0.5;
    }
    false
}

/// Solves `a x = b` for a symmetric positive definite 3x3 `a` by Cholesky.
fn solve_spd3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut sum = y[i];
        for k in (i + 1)..3 {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

/// Runs the descent from `start`, returning the final match and the
/// similarity after every sweep (`history[0]` is the start value).
fn descend(obj: &Objective<'_>, start: Rotation, cfg: &DescentConfig) -> (ViewMatch, Vec<f64>) {
    let mut cur = start;
    let mut best = obj.eval(&cur);
    let mut history = Vec::with_capacity(cfg.steps + 1);
    history.push(best);
    for sweep in 0..cfg.steps {
        let h = cfg.initial_step * 0.5f64.powi(sweep as i32);
        for _ in 0..MAX_POLLS {
            let before = cur;
            let mut improved = false;
            for axis in 0..3 {
                improved |= line_probe(obj, &mut cur, &mut best, axis, h);
            }
            if !improved {
                break;
            }
            let delta = before.inverse() * cur;
            pattern_move(obj, &mut cur, &mut best, delta);
        }
        for _ in 0..MAX_NEWTON {
            if !newton_move(obj, &mut cur, &mut best, h) {
                break;
            }
        }
        history.push(best);
    }
    (
        ViewMatch {
            rotation: cur,
            similarity: best,
        },
        history,
    )
}

/// Most similar view of `target` to the embedding `z_a`.
///
/// Seeds from the best entry of the target's codebook and refines with
/// `cfg.steps` descent sweeps. The similarity is always recomputed from an
/// unnormalised render of the target, so identical views score exactly 1.
pub fn most_similar_view(
    z_a: &[f64],
    target: &SynthObject,
    codebook: &Codebook,
    cfg: &DescentConfig,
) -> Result<ViewMatch> {
    most_similar_view_trace(z_a, target, codebook, cfg).map(|(m, _)| m)
}

/// Like [`most_similar_view`], also returning the similarity after each sweep.
pub fn most_similar_view_trace(
    z_a: &[f64],
    target: &SynthObject,
    codebook: &Codebook,
    cfg: &DescentConfig,
) -> Result<(ViewMatch, Vec<f64>)> {
    if z_a.len() != target.descriptor_dim() {
        return Err(Error::DimensionMismatch {
            left: z_a.len(),
            right: target.descriptor_dim(),
        });
    }
    let seed = estimate_pose(codebook, z_a)?;
    let obj = Objective { z: z_a, target };
    Ok(descend(&obj, seed.rotation, cfg))
}

/// One ranked orientation: the view of the ranked object at `r_a` and its
/// best match `r_b` on object `matched_class`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub similarity: f64,
    pub r_a: Rotation,
    pub r_b: Rotation,
    pub matched_class: ClassId,
}

/// Sorted matched pairs with their normalised ambiguity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityTable {
    pub object_class: ClassId,
    /// Sorted by similarity, non-increasing.
    pub pairs: Vec<MatchedPair>,
    /// Parallel to `pairs`, in `[0, 1]`.
    pub ambiguity: Vec<f64>,
}

impl AmbiguityTable {
    /// Sorts raw pairs (ties keep their input order) and normalises them.
    pub fn from_pairs(object_class: ClassId, mut pairs: Vec<MatchedPair>) -> Self {
        pairs.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
        let raw: Vec<f64> = pairs.iter().map(|p| p.similarity).collect();
        let ambiguity = if raw.is_empty() {
            Vec::new()
        } else {
            normalize_ambiguity(&raw).expect("nonempty")
        };
        Self {
            object_class,
            pairs,
            ambiguity,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// View directions of the ranked orientations, in table order.
    pub fn directions(&self) -> Vec<Vec3> {
        self.pairs.iter().map(|p| p.r_a.view_direction()).collect()
    }

    /// Index of the entry whose orientation is nearest to `view` modulo
    /// in-plane roll (largest view-direction cosine, lowest index on ties).
    pub fn nearest_entry(&self, view: &Rotation) -> Option<usize> {
        nearest_direction(&self.directions(), &view.view_direction())
    }

    /// Ambiguity of the nearest ranked orientation.
    pub fn lookup(&self, view: &Rotation) -> Option<f64> {
        self.nearest_entry(view).map(|i| self.ambiguity[i])
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub(crate) fn nearest_direction(directions: &[Vec3], v: &Vec3) -> Option<usize> {
    let mut best = None;
    let mut best_dot = f64::NEG_INFINITY;
    for (i, d) in directions.iter().enumerate() {
        let c = dot3(d, v);
        if c > best_dot {
            best_dot = c;
            best = Some(i);
        }
    }
    best
}

/// Another object of the group together with its codebook.
#[derive(Clone, Copy)]
pub struct RankTarget<'a> {
    pub object: &'a SynthObject,
    pub codebook: &'a Codebook,
}

/// Ranks every orientation of `grid` for `object` against the other objects
/// of its group.
///
/// The raw value of an orientation is the maximum over the other objects of
/// the most-similar-view similarity (ties keep the first object). Views are
/// rendered noise-free.
pub fn rank_object(
    object: &SynthObject,
    others: &[RankTarget<'_>],
    grid: &ViewGrid,
    cfg: &DescentConfig,
) -> Result<AmbiguityTable> {
    if others.is_empty() {
        return Err(Error::invalid("others", "need at least one other object"));
    }
    let pairs: Vec<MatchedPair> = grid
        .rotations
        .par_iter()
        .map(|r_a| {
            let z = render_clean(object, r_a);
            let mut best: Option<MatchedPair> = None;
            for t in others {
                let m = most_similar_view(z.as_slice(), t.object, t.codebook, cfg)?;
                if best.is_none_or(|b| m.similarity > b.similarity) {
                    best = Some(MatchedPair {
                        similarity: m.similarity,
                        r_a: *r_a,
                        r_b: m.rotation,
                        matched_class: t.object.class_id,
                    });
                }
            }
            Ok(best.expect("others is nonempty"))
        })
        .collect::<Result<_>>()?;
    Ok(AmbiguityTable::from_pairs(object.class_id, pairs))
}

/// Affine map of raw values onto `[0, 1]`: `(v - min) / (max - min)`.
/// All-equal input maps to all zeros.
pub fn normalize_ambiguity(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::invalid("raw", "need at least one value"));
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if !(span > 0.0) {
        return Ok(vec![0.0; raw.len()]);
    }
    Ok(raw.iter().map(|v| ((v - min) / span).clamp(0.0, 1.0)).collect())
}

/// Partition of ranked orientations by an ambiguity threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSplit {
    pub threshold: f64,
    /// Orientations with ambiguity strictly below the threshold.
    pub train: Vec<Rotation>,
    pub ambiguous: Vec<Rotation>,
}

/// Orientations with ambiguity `< a` go to training, the rest are ambiguous.
pub fn split_by_threshold(table: &AmbiguityTable, a: f64) -> Result<ThresholdSplit> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::invalid("threshold", format!("must lie in [0, 1], got {a}")));
    }
    let mut train = Vec::new();
    let mut ambiguous = Vec::new();
    for (p, amb) in table.pairs.iter().zip(&table.ambiguity) {
        if *amb < a {
            train.push(p.r_a);
        } else {
            ambiguous.push(p.r_a);
        }
    }
    Ok(ThresholdSplit {
        threshold: a,
        train,
        ambiguous,
    })
}

/// Orientation with minimal ambiguity. Among ties the earliest-ranked one
/// (lowest grid index) wins.
pub fn best_orientation(table: &AmbiguityTable) -> Result<Rotation> {
    let min = table
        .ambiguity
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    table
        .ambiguity
        .iter()
        .position(|a| *a == min)
        .map(|i| table.pairs[i].r_a)
        .ok_or_else(|| Error::invalid("table", "ambiguity table is empty"))
}

/// One row of the sorted-pairs CSV.
///
/// Columns: `rank, similarity, ambiguity, r_a_w, r_a_x, r_a_y, r_a_z,
/// r_b_w, r_b_x, r_b_y, r_b_z, matched_class`. Rank starts at 0 for the most
/// ambiguous pair; rotations are `w >= 0` unit quaternions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub rank: usize,
    pub similarity: f64,
    pub ambiguity: f64,
    pub r_a_w: f64,
    pub r_a_x: f64,
    pub r_a_y: f64,
    pub r_a_z: f64,
    pub r_b_w: f64,
    pub r_b_x: f64,
    pub r_b_y: f64,
    pub r_b_z: f64,
    pub matched_class: u32,
}

pub const PAIR_CSV_HEADER: &str = "rank,similarity,ambiguity,r_a_w,r_a_x,r_a_y,r_a_z,r_b_w,r_b_x,r_b_y,r_b_z,matched_class";

impl PairRow {
    pub fn matched_pair(&self) -> Result<(MatchedPair, f64)> {
        Ok((
            MatchedPair {
                similarity: self.similarity,
                r_a: Rotation::try_from([self.r_a_w, self.r_a_x, self.r_a_y, self.r_a_z])?,
                r_b: Rotation::try_from([self.r_b_w, self.r_b_x, self.r_b_y, self.r_b_z])?,
                matched_class: ClassId(self.matched_class),
            },
            self.ambiguity,
        ))
    }
}

/// Writes the sorted pairs as CSV (header always present, LF endings).
pub fn export_sorted_pairs(table: &AmbiguityTable, path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    if table.is_empty() {
        writeln!(out, "{PAIR_CSV_HEADER}").map_err(|e| Error::io(path, e))?;
        return out.flush().map_err(|e| Error::io(path, e));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for (rank, (p, amb)) in table.pairs.iter().zip(&table.ambiguity).enumerate() {
        let a = p.r_a.quaternion();
        let b = p.r_b.quaternion();
        w.serialize(PairRow {
            rank,
            similarity: p.similarity,
            ambiguity: *amb,
            r_a_w: a[0],
            r_a_x: a[1],
            r_a_y: a[2],
            r_a_z: a[3],
            r_b_w: b[0],
            r_b_x: b[1],
            r_b_y: b[2],
            r_b_z: b[3],
            matched_class: p.matched_class.0,
        })
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`export_sorted_pairs`].
pub fn read_sorted_pairs(path: &Path) -> Result<Vec<PairRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}
