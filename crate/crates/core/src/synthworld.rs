//! Synthetic objects and their analytic view embeddings.
//!
//! An object is a cloud of textured blobs on the unit sphere. Viewing it from
//! direction `v` with in-plane roll `psi` yields
//!
//! ```text
//! z = M(psi) * sum_m w(v . p_m) * descriptor_m + noise,   w(t) = max(0, t)^2
//! ```
//!
//! where `M(psi)` rotates every consecutive descriptor pair by `psi`. The
//! embedding is therefore exactly equivariant under roll, and two objects that
//! differ only in blobs facing away from the camera produce bit-identical
//! embeddings.

use rand::Rng;
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::so3::{angle_between, dot3, normalize3, Rotation, Vec3};
use crate::{ClassId, GroupId};

/// Visibility of a surface point whose normal makes cosine `t` with the view
/// direction.
#[inline]
pub fn visibility_weight(t: f64) -> f64 {
    let t = t.max(0.0);
    t * t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub position: Vec3,
    pub descriptor: Vec<f64>,
}

/// Parameters of a twin pair that differs only inside a spherical cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    pub seed: u64,
    pub n_blobs: usize,
    pub descriptor_dim: usize,
    pub patch_center: Vec3,
    /// Angular radius of the cap, radians, in `(0, pi/2)`.
    pub patch_radius: f64,
    pub group_id: GroupId,
    pub class_ids: [ClassId; 2],
}

impl Default for PairParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n_blobs: 512,
            descriptor_dim: 32,
            patch_center: [1.0, 0.0, 0.0],
            patch_radius: std::f64::consts::FRAC_PI_3,
            group_id: GroupId(0),
            class_ids: [ClassId(0), ClassId(1)],
        }
    }
}

impl PairParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_blobs < 4 {
            return Err(Error::invalid("n_blobs", format!("need at least 4, got {}", self.n_blobs)));
        }
        if self.descriptor_dim < 2 || !self.descriptor_dim.is_multiple_of(2) {
            return Err(Error::invalid(
                "descriptor_dim",
                format!("must be even and >= 2, got {}", self.descriptor_dim),
            ));
        }
        if !(self.patch_radius > 0.0 && self.patch_radius < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(
                "patch_radius",
                format!("must lie in (0, pi/2), got {}", self.patch_radius),
            ));
        }
        normalize3(&self.patch_center)
            .map_err(|_| Error::invalid("patch_center", "must be a nonzero vector"))?;
        if self.class_ids[0] == self.class_ids[1] {
            return Err(Error::invalid("class_ids", "twins need distinct class ids"));
        }
        Ok(())
    }
}

/// How an object was generated, so experiments can be replayed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub params: PairParams,
    /// 0 for the reference object, 1 for the patched twin.
    pub twin: u8,
    pub placement_attempts: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthObject {
    pub blobs: Vec<Blob>,
    pub class_id: ClassId,
    pub group_id: GroupId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl SynthObject {
    /// Validates the blob invariants and builds an object.
    pub fn new(blobs: Vec<Blob>, class_id: ClassId, group_id: GroupId) -> Result<Self> {
        let Some(first) = blobs.first() else {
            return Err(Error::invalid("blobs", "an object needs at least one blob"));
        };
        let dim = first.descriptor.len();
        if dim < 2 || dim % 2 != 0 {
            return Err(Error::invalid("descriptor", format!("dimension {dim} is not even")));
        }
        for b in &blobs {
            if b.descriptor.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: b.descriptor.len(),
                });
            }
            let n = dot3(&b.position, &b.position).sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("position", format!("blob position norm {n} is not 1")));
            }
        }
        Ok(Self {
            blobs,
            class_id,
            group_id,
            provenance: None,
        })
    }

    pub fn descriptor_dim(&self) -> usize {
        self.blobs[0].descriptor.len()
    }
}

/// A view embedding vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ViewEmbedding(pub Vec<f64>);

impl ViewEmbedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<ViewEmbedding> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroNorm("ViewEmbedding::normalized"));
        }
        Ok(ViewEmbedding(self.0.iter().map(|v| v / n).collect()))
    }

    pub fn scaled(&self, s: f64) -> ViewEmbedding {
        ViewEmbedding(self.0.iter().map(|v| v * s).collect())
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Ok(u) = normalize3(&v) {
            return u;
        }
    }
}

fn random_descriptor(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

const MAX_PLACEMENT_ATTEMPTS: u64 = 100_000;

/// Builds two objects with identical blob positions whose descriptors agree
/// everywhere except inside the cap of `patch_radius` around `patch_center`.
///
/// Blob placement is redrawn until at least one blob lies inside the cap.
pub fn make_ambiguous_pair(params: &PairParams) -> Result<(SynthObject, SynthObject)> {
    params.validate()?;
    let center = normalize3(&params.patch_center)?;
    let mut attempt = 0u64;
    let positions = loop {
        if attempt >= MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::invalid(
                "patch_radius",
                "no blob placement put a blob inside the patch",
            ));
        }
        let mut rng = seed::stream(params.seed, "blob-placement", attempt);
        let positions: Vec<Vec3> = (0..params.n_blobs).map(|_| random_unit(&mut rng)).collect();
        attempt += 1;
        if positions
            .iter()
            .any(|p| angle_between(p, &center) <= params.patch_radius)
        {
            break positions;
        }
    };

    let mut desc_rng = seed::stream(params.seed, "blob-descriptors", 0);
    let mut patch_rng = seed::stream(params.seed, "patch-descriptors", 0);
    let mut blobs_a = Vec::with_capacity(params.n_blobs);
    let mut blobs_b = Vec::with_capacity(params.n_blobs);
    for p in positions {
        let descriptor = random_descriptor(&mut desc_rng, params.descriptor_dim);
        let twin_descriptor = if angle_between(&p, &center) <= params.patch_radius {
            random_descriptor(&mut patch_rng, params.descriptor_dim)
        } else {
            descriptor.clone()
        };
        blobs_a.push(Blob {
            position: p,
            descriptor,
        });
        blobs_b.push(Blob {
            position: p,
            descriptor: twin_descriptor,
        });
    }

    let provenance = |twin| Provenance {
        params: params.clone(),
        twin,
        placement_attempts: attempt as u32,
    };
    let a = SynthObject {
        blobs: blobs_a,
        class_id: params.class_ids[0],
        group_id: params.group_id,
        provenance: Some(provenance(0)),
    };
    let b = SynthObject {
        blobs: blobs_b,
        class_id: params.class_ids[1],
        group_id: params.group_id,
        provenance: Some(provenance(1)),
    };
    Ok((a, b))
}

/// Rotates each consecutive pair `(z[2i], z[2i+1])` by `angle`.
pub fn apply_roll(z: &mut [f64], angle: f64) {
    let (s, c) = angle.sin_cos();
    for pair in z.chunks_exact_mut(2) {
        let (a, b) = (pair[0], pair[1]);
        pair[0] = c * a - s * b;
        pair[1] = s * a + c * b;
    }
}

/// Noise-free embedding of `obj` seen at `r`.
pub fn render_clean(obj: &SynthObject, r: &Rotation) -> ViewEmbedding {
    let v = r.view_direction();
    let mut acc = vec![0.0; obj.descriptor_dim()];
    for blob in &obj.blobs {
        let w = visibility_weight(dot3(&v, &blob.position));
        // skipping invisible blobs keeps twins bit-identical when only
        // hidden descriptors differ
        if w > 0.0 {
            for (a, d) in acc.iter_mut().zip(&blob.descriptor) {
                *a += w * d;
            }
        }
    }
    apply_roll(&mut acc, r.roll());
    ViewEmbedding(acc)
}

/// Embedding of `obj` at `r` with additive isotropic Gaussian noise of
/// standard deviation `noise_sigma` per component, drawn from `noise_seed`.
pub fn render_embedding(
    obj: &SynthObject,
    r: &Rotation,
    noise_sigma: f64,
    noise_seed: u64,
) -> ViewEmbedding {
    let mut z = render_clean(obj, r);
    add_noise(&mut z, noise_sigma, noise_seed);
    z
}

pub fn add_noise(z: &mut ViewEmbedding, noise_sigma: f64, noise_seed: u64) {
    if noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
        for c in z.0.iter_mut() {
            let e: f64 = rng.sample(StandardNormal);
            *c += noise_sigma * e;
        }
    }
}

/// Indices of blobs whose descriptors differ between `a` and `b`.
pub fn differing_blobs(a: &SynthObject, b: &SynthObject) -> Vec<usize> {
    a.blobs
        .iter()
        .zip(&b.blobs)
        .enumerate()
        .filter(|(_, (x, y))| x.descriptor != y.descriptor)
        .map(|(i, _)| i)
        .collect()
}

/// True iff some blob with differing descriptors has positive visibility
/// from `r`.
pub fn patch_visible(a: &SynthObject, b: &SynthObject, r: &Rotation) -> bool {
    let v = r.view_direction();
    a.blobs
        .iter()
        .zip(&b.blobs)
        .any(|(x, y)| x.descriptor != y.descriptor && visibility_weight(dot3(&v, &x.position)) > 0.0)
}

/// Mean noise-free embedding norm over a set of views.
pub fn mean_embedding_norm(obj: &SynthObject, rotations: &[Rotation]) -> f64 {
    if rotations.is_empty() {
        return 0.0;
    }
    rotations
        .iter()
        .map(|r| render_clean(obj, r).norm())
        .sum::<f64>()
        / rotations.len() as f64
}
