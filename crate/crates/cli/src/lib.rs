//! Manifest-driven experiment commands behind the `ambiview` binary.
//!
//! A manifest is a TOML file with a `schema_version` and optional sections
//! `[world]`, `[sweep]`, `[simulate]`, `[compare]` and `[output]`. Every
//! omitted field takes its documented default, and every command writes the
//! fully materialised manifest to `manifest.resolved.toml` next to its
//! outputs. Running a command again from that file reproduces every output
//! byte for byte, whatever the thread count.
//!
//! All randomness derives from the single root `seed`.

use std::fs;
use std::path::{Path, PathBuf};

use ambiview_core::ambiguity::split_by_threshold;
use ambiview_core::baselines::{metric_comparison, noise_robustness_sweep, write_robustness_csv, Metric};
use ambiview_core::classify::{
    relative_noise_sigma, threshold_sweep, train, SweepConfig, SweepMember, TrainMember,
    DEFAULT_RELATIVE_NOISE,
};
use ambiview_core::policy::{
    build_trajectory_reachable, full_sphere_reachable, run_experiment, write_episodes_jsonl,
    write_success_csv, ActiveWorld, EpisodeParams, Policy, ReachableSet, TableLookup, TrajectoryGrid,
};
use ambiview_core::synthworld::PairParams;
use ambiview_core::world::{World, WorldParams};
use ambiview_core::Rotation;
use log::info;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const RESOLVED_MANIFEST: &str = "manifest.resolved.toml";

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or manifest; nothing has been written.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<ambiview_core::Error> for CliError {
    fn from(e: ambiview_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn config(section: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("[{section}] {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub world: WorldSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub compare: CompareSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            world: WorldSection::default(),
            sweep: SweepSection::default(),
            simulate: SimulateSection::default(),
            compare: CompareSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSection {
    pub n_blobs: usize,
    pub descriptor_dim: usize,
    pub patch_center: [f64; 3],
    /// Radians.
    pub patch_radius: f64,
    pub codebook_dirs: usize,
    pub codebook_inplane: usize,
    pub coarse_dirs: usize,
    pub descent_steps: usize,
}

impl Default for WorldSection {
    fn default() -> Self {
        let w = WorldParams::default();
        Self {
            n_blobs: w.pair.n_blobs,
            descriptor_dim: w.pair.descriptor_dim,
            patch_center: w.pair.patch_center,
            patch_radius: w.pair.patch_radius,
            codebook_dirs: w.codebook_dirs,
            codebook_inplane: w.codebook_inplane,
            coarse_dirs: w.coarse_dirs,
            descent_steps: w.descent_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub thresholds: Vec<f64>,
    pub caps: Vec<f64>,
    pub trials: usize,
    pub samples_per_rotation: usize,
    pub eval_samples: usize,
    /// Noise sigma as a multiple of the mean embedding norm.
    pub relative_noise: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            thresholds: SweepConfig::default_thresholds(),
            caps: SweepConfig::default_caps(),
            trials: 10,
            samples_per_rotation: 1,
            eval_samples: 400,
            relative_noise: DEFAULT_RELATIVE_NOISE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReachableSpec {
    Trajectory { circles: usize, steps: usize },
    FullSphere { n_dirs: usize },
}

impl ReachableSpec {
    pub fn build(&self) -> ambiview_core::Result<ReachableSet> {
        match self {
            ReachableSpec::Trajectory { circles, steps } => {
                build_trajectory_reachable(&TrajectoryGrid::evenly_spaced(*circles, *steps))
            }
            ReachableSpec::FullSphere { n_dirs } => full_sphere_reachable(*n_dirs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub episodes: usize,
    pub threshold: f64,
    pub max_moves: usize,
    /// Observation noise as a multiple of the mean embedding norm.
    pub relative_noise: f64,
    pub hypotheses_per_class: usize,
    pub weighted: bool,
    /// Training threshold of the episode classifier.
    pub train_threshold: f64,
    pub train_relative_noise: f64,
    pub reachable: ReachableSpec,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            episodes: 200,
            threshold: 0.4,
            max_moves: 3,
            relative_noise: 0.05,
            hypotheses_per_class: 1,
            weighted: false,
            train_threshold: 0.5,
            train_relative_noise: DEFAULT_RELATIVE_NOISE,
            reachable: ReachableSpec::Trajectory { circles: 5, steps: 32 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub metrics: Vec<Metric>,
    /// Noise levels as multiples of the mean embedding norm.
    pub robustness_noise: Vec<f64>,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            metrics: Metric::defaults(),
            robustness_noise: vec![0.0, 0.05, 0.1, 0.5, 1.0, 10.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Also write each codebook as JSON, with SHA-256 digests in
    /// `codebooks.sha256`.
    pub write_codebooks: bool,
}

fn nonneg(section: &str, name: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config(section, format!("`{name}` must be finite and non-negative, got {v}")))
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let m: Manifest = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn world_params(&self) -> WorldParams {
        let w = &self.world;
        WorldParams {
            pair: PairParams {
                seed: self.seed,
                n_blobs: w.n_blobs,
                descriptor_dim: w.descriptor_dim,
                patch_center: w.patch_center,
                patch_radius: w.patch_radius,
                ..PairParams::default()
            },
            codebook_dirs: w.codebook_dirs,
            codebook_inplane: w.codebook_inplane,
            coarse_dirs: w.coarse_dirs,
            descent_steps: w.descent_steps,
        }
    }

    /// Checks every section, naming the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "`schema_version` must be {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        self.world_params().validate().map_err(|e| config("world", e))?;

        let s = &self.sweep;
        self.sweep_config(0.0).validate().map_err(|e| config("sweep", e))?;
        nonneg("sweep", "relative_noise", s.relative_noise)?;

        let p = &self.simulate;
        if p.episodes == 0 {
            return Err(config("simulate", "`episodes` must be at least 1"));
        }
        self.episode_params(0.0).validate().map_err(|e| config("simulate", e))?;
        if !(p.train_threshold > 0.0 && p.train_threshold <= 1.0) {
            return Err(config("simulate", "`train_threshold` must lie in (0, 1]"));
        }
        nonneg("simulate", "relative_noise", p.relative_noise)?;
        nonneg("simulate", "train_relative_noise", p.train_relative_noise)?;
        p.reachable.build().map_err(|e| config("simulate.reachable", e))?;

        let c = &self.compare;
        if c.metrics.is_empty() {
            return Err(config("compare", "`metrics` must be nonempty"));
        }
        for m in &c.metrics {
            m.validate().map_err(|e| config("compare.metrics", e))?;
        }
        if c.robustness_noise.is_empty() {
            return Err(config("compare", "`robustness_noise` must be nonempty"));
        }
        for v in &c.robustness_noise {
            nonneg("compare", "robustness_noise", *v)?;
        }
        Ok(())
    }

    fn sweep_config(&self, noise_sigma: f64) -> SweepConfig {
        let s = &self.sweep;
        SweepConfig {
            thresholds: s.thresholds.clone(),
            caps: s.caps.clone(),
            trials: s.trials,
            samples_per_rotation: s.samples_per_rotation,
            eval_samples: s.eval_samples,
            noise_sigma,
            seed: self.seed,
        }
    }

    fn episode_params(&self, noise_sigma: f64) -> EpisodeParams {
        let p = &self.simulate;
        EpisodeParams {
            threshold: p.threshold,
            max_moves: p.max_moves,
            noise_sigma,
            hypotheses_per_class: p.hypotheses_per_class,
            weighted: p.weighted,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Rank,
    Sweep,
    Simulate,
    Compare,
}

/// Resolved invocation: manifest with overrides applied plus the output
/// directory.
#[derive(Clone, Debug)]
pub struct Run {
    pub command: Command,
    pub manifest: Manifest,
    pub out: PathBuf,
}

impl Run {
    /// Loads `manifest` (or defaults) and applies `seed`. Fails with a
    /// configuration error before anything is written.
    pub fn resolve(
        command: Command,
        manifest: Option<&Path>,
        out: &Path,
        seed: Option<u64>,
    ) -> Result<Self, CliError> {
        let mut m = match manifest {
            Some(p) => Manifest::load(p)?,
            None => Manifest::default(),
        };
        if let Some(s) = seed {
            m.seed = s;
        }
        m.validate()?;
        if out.exists() && !out.is_dir() {
            return Err(CliError::Config(format!("--out {} is not a directory", out.display())));
        }
        Ok(Self {
            command,
            manifest: m,
            out: out.to_path_buf(),
        })
    }

    /// Executes the command and returns the names of the files written.
    pub fn execute(&self) -> Result<Vec<String>, CliError> {
        fs::create_dir_all(&self.out)
            .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", self.out.display()))?;
        let mut files = match self.command {
            Command::Rank => cmd_rank(&self.manifest, &self.out)?,
            Command::Sweep => cmd_sweep(&self.manifest, &self.out)?,
            Command::Simulate => cmd_simulate(&self.manifest, &self.out)?,
            Command::Compare => cmd_compare(&self.manifest, &self.out)?,
        };
        let resolved = self.out.join(RESOLVED_MANIFEST);
        fs::write(&resolved, self.manifest.to_toml())
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", resolved.display()))?;
        files.push(RESOLVED_MANIFEST.to_string());
        Ok(files)
    }
}

fn build_world(m: &Manifest) -> Result<World, CliError> {
    info!("building world");
    Ok(World::build(&m.world_params())?)
}

fn coarse_rotations(world: &World) -> Vec<Rotation> {
    world.coarse.rotations.clone()
}

/// Writes `ambiguity_class<c>.json` and `pairs_class<c>.csv` per class and,
/// if requested, the codebooks and their digests.
pub fn cmd_rank(m: &Manifest, out: &Path) -> Result<Vec<String>, CliError> {
    let world = build_world(m)?;
    let mut files = Vec::new();
    for t in &world.tables {
        let json = format!("ambiguity_class{}.json", t.object_class);
        t.save_json(&out.join(&json))?;
        let csv = format!("pairs_class{}.csv", t.object_class);
        ambiview_core::ambiguity::export_sorted_pairs(t, &out.join(&csv))?;
        files.extend([json, csv]);
    }
    if m.output.write_codebooks {
        let mut digests = String::new();
        for cb in &world.codebooks {
            let name = format!("codebook_class{}.json", cb.class_id());
            let digest = cb.save_json(&out.join(&name))?;
            digests.push_str(&format!("{digest}  {name}\n"));
            files.push(name);
        }
        let path = out.join("codebooks.sha256");
        fs::write(&path, digests).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
        files.push("codebooks.sha256".into());
    }
    Ok(files)
}

/// Writes `sweep.csv`.
pub fn cmd_sweep(m: &Manifest, out: &Path) -> Result<Vec<String>, CliError> {
    let world = build_world(m)?;
    let sigma = relative_noise_sigma(m.sweep.relative_noise, &world.objects[0], &coarse_rotations(&world));
    let members: Vec<SweepMember<'_>> = world
        .objects
        .iter()
        .zip(&world.tables)
        .map(|(object, table)| SweepMember { object, table })
        .collect();
    info!("sweeping with noise sigma {sigma}");
    let result = threshold_sweep(&members, &m.sweep_config(sigma))?;
    result.write_csv(&out.join("sweep.csv"))?;
    Ok(vec!["sweep.csv".into()])
}

/// Runs both policies on the same episode seeds. Writes
/// `episodes_<policy>.jsonl` and `success.csv`.
pub fn cmd_simulate(m: &Manifest, out: &Path) -> Result<Vec<String>, CliError> {
    let world = build_world(m)?;
    let p = &m.simulate;
    let views = coarse_rotations(&world);
    let train_sigma = relative_noise_sigma(p.train_relative_noise, &world.objects[0], &views);
    let splits = world
        .tables
        .iter()
        .map(|t| split_by_threshold(t, p.train_threshold))
        .collect::<ambiview_core::Result<Vec<_>>>()?;
    let members: Vec<TrainMember<'_>> = world
        .objects
        .iter()
        .zip(&splits)
        .map(|(object, split)| TrainMember { object, split })
        .collect();
    let classifier = train(&members, 1, train_sigma, m.seed)?;
    let lookups = world
        .tables
        .iter()
        .map(TableLookup::new)
        .collect::<ambiview_core::Result<Vec<_>>>()?;
    let active = ActiveWorld {
        objects: &world.objects,
        codebooks: &world.codebooks,
        tables: &lookups,
        classifier: &classifier,
    };
    let reachable = p.reachable.build()?;
    let params = m.episode_params(relative_noise_sigma(p.relative_noise, &world.objects[0], &views));
    let mut stats = Vec::new();
    let mut files = Vec::new();
    for policy in [Policy::NextBest, Policy::Random] {
        info!("simulating {} episodes of {}", p.episodes, policy.name());
        let s = run_experiment(&active, &reachable, &params, policy, p.episodes, m.seed)?;
        let name = format!("episodes_{}.jsonl", policy.name());
        write_episodes_jsonl(&s.episodes, &out.join(&name))?;
        files.push(name);
        stats.push(s);
    }
    write_success_csv(&stats, &out.join("success.csv"))?;
    files.push("success.csv".into());
    Ok(files)
}

/// Compares the metrics on the first object's table. Writes
/// `metric_<name>.csv`, `metric_summary.csv` and `robustness.csv`.
pub fn cmd_compare(m: &Manifest, out: &Path) -> Result<Vec<String>, CliError> {
    let world = build_world(m)?;
    let table = &world.tables[0];
    let report = metric_comparison(table, &world.objects, &m.compare.metrics)?;
    let mut files = report.write_csv(out)?;
    let norm = relative_noise_sigma(1.0, &world.objects[0], &coarse_rotations(&world));
    let sigmas: Vec<f64> = m.compare.robustness_noise.iter().map(|r| r * norm).collect();
    let rows = noise_robustness_sweep(table, &world.objects, &sigmas, m.seed)?;
    write_robustness_csv(&rows, &out.join("robustness.csv"))?;
    files.push("robustness.csv".into());
    Ok(files)
}
