//! Viewpoint ambiguity ranking and next-best-view planning for classifying
//! visually ambiguous objects.
//!
//! The crate is organised bottom-up:
//!
//! * [`so3`]: rotations, Fibonacci view grids, geodesic distance, Euler angles.
//! * [`synthworld`]: deterministic synthetic objects and their view embeddings.
//! * [`codebook`]: per-object embedding codebooks, pose and class hypotheses.
//! * [`ambiguity`]: most-similar-view search, ambiguity tables, threshold splits.
//! * [`classify`]: nearest-centroid classifier and the threshold sweep.
//! * [`policy`]: reachable sets, next-best-view selection, episode simulation.
//! * [`baselines`]: alternative similarity metrics and correlation reports.
//! * [`world`]: assembles a full experiment world from a handful of parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod ambiguity;
pub mod baselines;
pub mod classify;
pub mod codebook;
pub mod error;
pub mod policy;
pub mod seed;
pub mod so3;
pub mod stats;
pub mod synthworld;
pub mod world;

pub use error::{Error, Result};
pub use so3::{geodesic_distance, Rotation, ViewGrid};
pub use synthworld::{SynthObject, ViewEmbedding};

/// In-group object class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

/// Label of an ambiguous group (a set of mutually confusable objects).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub u32);

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
