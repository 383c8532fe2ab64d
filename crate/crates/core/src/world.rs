//! A complete experiment world: one ambiguous twin pair, a codebook per
//! object and an ambiguity table per object.

use log::info;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{rank_object, AmbiguityTable, DescentConfig, RankTarget};
use crate::codebook::{build_codebook, Codebook};
use crate::error::{Error, Result};
use crate::so3::{build_view_grid, ViewGrid};
use crate::synthworld::{make_ambiguous_pair, PairParams, SynthObject};
use crate::ClassId;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldParams {
    pub pair: PairParams,
    pub codebook_dirs: usize,
    pub codebook_inplane: usize,
    /// Roll-free ranking grid.
    pub coarse_dirs: usize,
    pub descent_steps: usize,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            pair: PairParams::default(),
            codebook_dirs: 4096,
            codebook_inplane: 36,
            coarse_dirs: 2048,
            descent_steps: 32,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        self.pair.validate()?;
        for (name, v) in [
            ("codebook_dirs", self.codebook_dirs),
            ("codebook_inplane", self.codebook_inplane),
            ("coarse_dirs", self.coarse_dirs),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        Ok(())
    }

    pub fn descent(&self) -> DescentConfig {
        DescentConfig::for_coarse_grid(self.descent_steps, self.coarse_dirs)
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub params: WorldParams,
    /// Parallel: one object, codebook and table per class.
    pub objects: Vec<SynthObject>,
    pub codebooks: Vec<Codebook>,
    pub tables: Vec<AmbiguityTable>,
    pub coarse: ViewGrid,
}

impl World {
    /// Builds the twin pair, both codebooks, and ranks each object against
    /// the other.
    pub fn build(params: &WorldParams) -> Result<Self> {
        params.validate()?;
        let (a, b) = make_ambiguous_pair(&params.pair)?;
        let objects = vec![a, b];
        let cb_grid = build_view_grid(params.codebook_dirs, params.codebook_inplane)?;
        let codebooks = objects
            .iter()
            .map(|o| build_codebook(o, &cb_grid))
            .collect::<Result<Vec<_>>>()?;
        info!("built {} codebooks of {} entries", codebooks.len(), cb_grid.len());
        let coarse = build_view_grid(params.coarse_dirs, 1)?;
        let cfg = params.descent();
        let mut tables = Vec::with_capacity(objects.len());
        for (i, obj) in objects.iter().enumerate() {
            let others: Vec<RankTarget<'_>> = objects
                .iter()
                .zip(&codebooks)
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (object, codebook))| RankTarget { object, codebook })
                .collect();
            tables.push(rank_object(obj, &others, &coarse, &cfg)?);
            info!("ranked class {} over {} orientations", obj.class_id, coarse.len());
        }
        Ok(Self {
            params: params.clone(),
            objects,
            codebooks,
            tables,
            coarse,
        })
    }

    pub fn classes(&self) -> Vec<ClassId> {
        self.objects.iter().map(|o| o.class_id).collect()
    }

    pub fn index_of(&self, class: ClassId) -> Result<usize> {
        self.objects
            .iter()
            .position(|o| o.class_id == class)
            .ok_or(Error::UnknownClass(class))
    }

    pub fn object(&self, class: ClassId) -> Result<&SynthObject> {
        Ok(&self.objects[self.index_of(class)?])
    }

    pub fn table(&self, class: ClassId) -> Result<&AmbiguityTable> {
        Ok(&self.tables[self.index_of(class)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_world_builds() {
        let params = WorldParams {
            pair: PairParams {
                n_blobs: 64,
                descriptor_dim: 8,
                ..PairParams::default()
            },
            codebook_dirs: 64,
            codebook_inplane: 4,
            coarse_dirs: 32,
            descent_steps: 4,
        };
        let w = World::build(&params).unwrap();
        assert_eq!(w.tables.len(), 2);
        assert!(w.tables.iter().all(|t| t.len() == 32));
        assert_eq!(w.table(ClassId(1)).unwrap().object_class, ClassId(1));
        assert!(w.object(ClassId(9)).is_err());
    }

    #[test]
    fn rejects_zero_sizes() {
        let params = WorldParams {
            coarse_dirs: 0,
            ..WorldParams::default()
        };
        assert!(World::build(&params).is_err());
    }
}
