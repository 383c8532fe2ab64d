#![allow(dead_code)]

use std::sync::OnceLock;

use ambiview_core::ambiguity::split_by_threshold;
use ambiview_core::classify::{relative_noise_sigma, train, CentroidClassifier, TrainMember};
use ambiview_core::policy::{ActiveWorld, TableLookup};
use ambiview_core::synthworld::PairParams;
use ambiview_core::world::{World, WorldParams};

pub fn small_params() -> WorldParams {
    WorldParams {
        pair: PairParams {
            n_blobs: 192,
            descriptor_dim: 16,
            ..PairParams::default()
        },
        codebook_dirs: 512,
        codebook_inplane: 12,
        coarse_dirs: 256,
        descent_steps: 16,
    }
}

pub struct Fixture {
    pub world: World,
    pub classifier: CentroidClassifier,
    pub lookups: Vec<TableLookup>,
}

impl Fixture {
    pub fn active(&self) -> ActiveWorld<'_> {
        ActiveWorld {
            objects: &self.world.objects,
            codebooks: &self.world.codebooks,
            tables: &self.lookups,
            classifier: &self.classifier,
        }
    }

    /// Noise sigma at `relative` times the mean embedding norm.
    pub fn sigma(&self, relative: f64) -> f64 {
        relative_noise_sigma(relative, &self.world.objects[0], &self.world.coarse.rotations)
    }
}

pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let world = World::build(&small_params()).unwrap();
        let splits: Vec<_> = world
            .tables
            .iter()
            .map(|t| split_by_threshold(t, 0.5).unwrap())
            .collect();
        let members: Vec<TrainMember<'_>> = world
            .objects
            .iter()
            .zip(&splits)
            .map(|(object, split)| TrainMember { object, split })
            .collect();
        let sigma = relative_noise_sigma(0.1, &world.objects[0], &world.coarse.rotations);
        let classifier = train(&members, 1, sigma, 0).unwrap();
        let lookups = world.tables.iter().map(|t| TableLookup::new(t).unwrap()).collect();
        Fixture {
            world,
            classifier,
            lookups,
        }
    })
}
