//! Per-object embedding codebooks and nearest-entry queries.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::so3::{Rotation, ViewGrid};
use crate::synthworld::{render_clean, SynthObject};
use crate::{ClassId, GroupId};

/// Cosine similarity `a.b / (|a| |b|)`, clamped to `[-1, 1]`.
///
/// Computed as `a.b / sqrt(|a|^2 |b|^2)` so that bit-identical inputs give
/// exactly 1.
pub fn cossim(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (dot, aa, bb) = dots(a, b);
    if !(aa > 0.0) || !(bb > 0.0) {
        return Err(Error::ZeroNorm("cossim"));
    }
    Ok(ratio(dot, aa, bb))
}

/// [`cossim`] without checks; callers guarantee equal, nonzero inputs.
#[inline]
pub(crate) fn cossim_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let (dot, aa, bb) = dots(a, b);
    ratio(dot, aa, bb)
}

#[inline]
fn dots(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let mut dot = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    (dot, aa, bb)
}

#[inline]
fn ratio(dot: f64, aa: f64, bb: f64) -> f64 {
    (dot / (aa * bb).sqrt()).clamp(-1.0, 1.0)
}

fn check_nonzero(z: &[f64]) -> Result<()> {
    let n2: f64 = z.iter().map(|v| v * v).sum();
    if n2 > 0.0 && n2.is_finite() {
        Ok(())
    } else {
        Err(Error::ZeroNorm("query embedding"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRef {
    pub class_id: ClassId,
    pub group_id: GroupId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_dirs: usize,
    pub n_inplane: usize,
}

/// Rotations and unit-norm embeddings for one object, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CodebookFile", try_from = "CodebookFile")]
pub struct Codebook {
    object: ObjectRef,
    grid_meta: GridMeta,
    dim: usize,
    rotations: Vec<Rotation>,
    embeddings: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookFile {
    object: ObjectRef,
    grid_meta: GridMeta,
    dim: usize,
    entries: Vec<CodebookEntry>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookEntry {
    rotation: Rotation,
    embedding: Vec<f64>,
}

impl From<Codebook> for CodebookFile {
    fn from(cb: Codebook) -> Self {
        let entries = cb
            .rotations
            .iter()
            .zip(cb.embeddings.chunks_exact(cb.dim))
            .map(|(r, e)| CodebookEntry {
                rotation: *r,
                embedding: e.to_vec(),
            })
            .collect();
        CodebookFile {
            object: cb.object,
            grid_meta: cb.grid_meta,
            dim: cb.dim,
            entries,
        }
    }
}

impl TryFrom<CodebookFile> for Codebook {
    type Error = Error;

    fn try_from(f: CodebookFile) -> Result<Self> {
        if f.entries.is_empty() {
            return Err(Error::invalid("entries", "codebook is empty"));
        }
        let mut rotations = Vec::with_capacity(f.entries.len());
        let mut embeddings = Vec::with_capacity(f.entries.len() * f.dim);
        for e in f.entries {
            if e.embedding.len() != f.dim {
                return Err(Error::DimensionMismatch {
                    left: f.dim,
                    right: e.embedding.len(),
                });
            }
            let n: f64 = e.embedding.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("embedding", format!("entry norm {n} is not 1")));
            }
            rotations.push(e.rotation);
            embeddings.extend(e.embedding);
        }
        Ok(Codebook {
            object: f.object,
            grid_meta: f.grid_meta,
            dim: f.dim,
            rotations,
            embeddings,
        })
    }
}

/// Best codebook entry of one class for a query embedding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseHypothesis {
    pub class_id: ClassId,
    pub rotation: Rotation,
    pub score: f64,
    pub entry: usize,
}

impl Codebook {
    pub fn class_id(&self) -> ClassId {
        self.object.class_id
    }

    pub fn group_id(&self) -> GroupId {
        self.object.group_id
    }

    pub fn object_ref(&self) -> ObjectRef {
        self.object
    }

    pub fn grid_meta(&self) -> GridMeta {
        self.grid_meta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn rotation(&self, k: usize) -> &Rotation {
        &self.rotations[k]
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn embedding(&self, k: usize) -> &[f64] {
        &self.embeddings[k * self.dim..(k + 1) * self.dim]
    }

    /// Cosine similarity of `z` against every entry, in entry order.
    pub fn scores(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_query(z)?;
        Ok(self
            .embeddings
            .chunks_exact(self.dim)
            .map(|e| cossim_unchecked(z, e))
            .collect())
    }

    fn check_query(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: z.len(),
            });
        }
        check_nonzero(z)
    }

    /// SHA-256 of the JSON encoding, hex.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("codebook serializes");
        hex_digest(&bytes)
    }

    /// Writes the codebook as JSON and returns the file's SHA-256.
    pub fn save_json(&self, path: &Path) -> Result<String> {
        let bytes = serde_json::to_vec(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
        Ok(hex_digest(&bytes))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Renders every grid rotation of `obj` (noise-free) and stores the
/// unit-normalised embeddings.
pub fn build_codebook(obj: &SynthObject, grid: &ViewGrid) -> Result<Codebook> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "codebook grid is empty"));
    }
    let dim = obj.descriptor_dim();
    let rows: Vec<Vec<f64>> = grid
        .rotations
        .par_iter()
        .map(|r| render_clean(obj, r).normalized().map(|z| z.0))
        .collect::<Result<_>>()?;
    let mut embeddings = Vec::with_capacity(rows.len() * dim);
    for row in rows {
        embeddings.extend(row);
    }
    Ok(Codebook {
        object: ObjectRef {
            class_id: obj.class_id,
            group_id: obj.group_id,
        },
        grid_meta: GridMeta {
            n_dirs: grid.n_dirs,
            n_inplane: grid.n_inplane,
        },
        dim,
        rotations: grid.rotations.clone(),
        embeddings,
    })
}

/// Entry maximising cosine similarity with `z`; ties go to the lowest index.
pub fn estimate_pose(cb: &Codebook, z: &[f64]) -> Result<PoseHypothesis> {
    cb.check_query(z)?;
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, e) in cb.embeddings.chunks_exact(cb.dim).enumerate() {
        let s = cossim_unchecked(z, e);
        if s > best_score {
            best_score = s;
            best = k;
        }
    }
    Ok(PoseHypothesis {
        class_id: cb.class_id(),
        rotation: cb.rotations[best],
        score: best_score,
        entry: best,
    })
}

/// Top `k` entries per in-group class, merged and sorted by descending score
/// (ties: codebook order, then entry index).
pub fn hypotheses_for_group(
    codebooks: &[Codebook],
    z: &[f64],
    k: usize,
) -> Result<Vec<PoseHypothesis>> {
    if codebooks.is_empty() {
        return Err(Error::invalid("codebooks", "need at least one codebook"));
    }
    if k == 0 {
        return Err(Error::invalid("k", "need at least one hypothesis per class"));
    }
    let mut all = Vec::with_capacity(codebooks.len() * k);
    for (ci, cb) in codebooks.iter().enumerate() {
        let scores = cb.scores(z)?;
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        let order = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
        let k = k.min(idx.len());
        if k < idx.len() {
            idx.select_nth_unstable_by(k, order);
        }
        idx[..k].sort_by(order);
        for &e in &idx[..k] {
            all.push((
                ci,
                PoseHypothesis {
                    class_id: cb.class_id(),
                    rotation: cb.rotations[e],
                    score: scores[e],
                    entry: e,
                },
            ));
        }
    }
    all.sort_by(|(ca, a), (cb, b)| {
        b.score
            .total_cmp(&a.score)
            .then(ca.cmp(cb))
            .then(a.entry.cmp(&b.entry))
    });
    Ok(all.into_iter().map(|(_, h)| h).collect())
}

/// Group of the codebook holding the globally best entry; ties go to the
/// lowest group id.
pub fn identify_group(codebooks: &[Codebook], z: &[f64]) -> Result<GroupId> {
    let mut best: Option<(f64, GroupId)> = None;
    for cb in codebooks {
        let h = estimate_pose(cb, z)?;
        best = match best {
            Some((s, g)) if s > h.score || (s == h.score && g <= cb.group_id()) => Some((s, g)),
            _ => Some((h.score, cb.group_id())),
        };
    }
    best.map(|(_, g)| g)
        .ok_or_else(|| Error::invalid("codebooks", "need at least one group"))
}
