//! Alternative view-similarity metrics and a harness that correlates them
//! with the embedding similarity over the matched pairs of an ambiguity
//! table.
//!
//! The alternatives are structural stand-ins: a squared-error metric on raw
//! embeddings, a blob-descriptor matching count, and cosine similarity after
//! a fixed random ReLU feature map.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{AmbiguityTable, MatchedPair};
use crate::codebook::cossim;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, stream};
use crate::so3::{dot3, Rotation};
use crate::stats::{min_max_scale, pearson, spearman};
use crate::synthworld::{render_clean, render_embedding, visibility_weight, SynthObject};

/// Default descriptor match tolerance for [`blob_match_similarity`].
pub const DEFAULT_MATCH_TOLERANCE: f64 = 1e-6;

/// Negated mean squared difference; larger means more similar.
pub fn mse_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::invalid("view", "empty embedding"));
    }
    Ok(-a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

/// Fraction of blobs visible in either view that are visible in both and
/// whose descriptors agree within `tau` (Euclidean). Blob `m` of one object
/// is compared with blob `m` of the other. Two views with no visible blobs
/// count as identical.
pub fn blob_match_similarity(
    obj_a: &SynthObject,
    r_a: &Rotation,
    obj_b: &SynthObject,
    r_b: &Rotation,
    tau: f64,
) -> Result<f64> {
    if obj_a.descriptor_dim() != obj_b.descriptor_dim() {
        return Err(Error::DimensionMismatch {
            left: obj_a.descriptor_dim(),
            right: obj_b.descriptor_dim(),
        });
    }
    if obj_a.blobs.len() != obj_b.blobs.len() {
        return Err(Error::DimensionMismatch {
            left: obj_a.blobs.len(),
            right: obj_b.blobs.len(),
        });
    }
    let (va, vb) = (r_a.view_direction(), r_b.view_direction());
    let mut either = 0usize;
    let mut matched = 0usize;
    for (x, y) in obj_a.blobs.iter().zip(&obj_b.blobs) {
        let seen_a = visibility_weight(dot3(&va, &x.position)) > 0.0;
        let seen_b = visibility_weight(dot3(&vb, &y.position)) > 0.0;
        if seen_a || seen_b {
            either += 1;
        }
        if seen_a && seen_b {
            let d2: f64 = x
                .descriptor
                .iter()
                .zip(&y.descriptor)
                .map(|(p, q)| (p - q).powi(2))
                .sum();
            if d2.sqrt() < tau {
                matched += 1;
            }
        }
    }
    if either == 0 {
        return Ok(1.0);
    }
    Ok(matched as f64 / either as f64)
}

/// A fixed random feature map `relu(W z)` with Gaussian `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomFeatures {
    dim: usize,
    weights: Vec<f64>,
}

impl RandomFeatures {
    pub fn new(dim: usize, width: usize, seed: u64) -> Result<Self> {
        if dim == 0 || width == 0 {
            return Err(Error::invalid("random_features", "dimension and width must be positive"));
        }
        let mut rng = stream(seed, "random-features", 0);
        let scale = 1.0 / (dim as f64).sqrt();
        let weights = (0..dim * width)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Self { dim, weights })
    }

    pub fn features(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: z.len(),
            });
        }
        Ok(self
            .weights
            .chunks_exact(self.dim)
            .map(|row| dot(row, z).max(0.0))
            .collect())
    }

    /// Cosine similarity of the two feature vectors; 0 if either vanishes.
    pub fn similarity(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let (fa, fb) = (self.features(a)?, self.features(b)?);
        Ok(cossim(&fa, &fb).unwrap_or(0.0))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity after a seeded random ReLU feature map of `width`
/// features.
pub fn random_feature_similarity(a: &[f64], b: &[f64], width: usize, seed: u64) -> Result<f64> {
    RandomFeatures::new(a.len(), width, seed)?.similarity(a, b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Metric {
    /// The stored embedding similarity of each pair.
    Primary,
    Mse,
    BlobMatch { tau: f64 },
    RandomFeatures { width: usize, seed: u64 },
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Primary => "primary",
            Metric::Mse => "mse",
            Metric::BlobMatch { .. } => "blob_match",
            Metric::RandomFeatures { .. } => "random_features",
        }
    }

    pub fn defaults() -> Vec<Metric> {
        vec![
            Metric::Primary,
            Metric::Mse,
            Metric::BlobMatch {
                tau: DEFAULT_MATCH_TOLERANCE,
            },
            Metric::RandomFeatures { width: 256, seed: 0 },
        ]
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Metric::BlobMatch { tau } if !(*tau > 0.0) || !tau.is_finite() => {
                Err(Error::invalid("tau", "must be positive and finite"))
            }
            Metric::RandomFeatures { width: 0, .. } => Err(Error::invalid("width", "must be positive")),
            _ => Ok(()),
        }
    }
}

/// One metric evaluated over all pairs, in table order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub metric: Metric,
    pub values: Vec<f64>,
    /// `values` min-max scaled onto `[0, 1]`.
    pub scaled: Vec<f64>,
    pub spearman: f64,
    pub pearson: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Stored similarity of every pair, in table (descending) order.
    pub primary: Vec<f64>,
    pub series: Vec<MetricSeries>,
}

fn object_for(objects: &[SynthObject], class: crate::ClassId) -> Result<&SynthObject> {
    objects
        .iter()
        .find(|o| o.class_id == class)
        .ok_or(Error::UnknownClass(class))
}

fn evaluate_metric(
    metric: &Metric,
    pairs: &[MatchedPair],
    obj_a: &SynthObject,
    objects: &[SynthObject],
) -> Result<Vec<f64>> {
    let features = match metric {
        Metric::RandomFeatures { width, seed } => Some(RandomFeatures::new(obj_a.descriptor_dim(), *width, *seed)?),
        _ => None,
    };
    pairs
        .par_iter()
        .map(|p| {
            let obj_b = object_for(objects, p.matched_class)?;
            match metric {
                Metric::Primary => Ok(p.similarity),
                Metric::Mse => mse_similarity(
                    render_clean(obj_a, &p.r_a).as_slice(),
                    render_clean(obj_b, &p.r_b).as_slice(),
                ),
                Metric::BlobMatch { tau } => blob_match_similarity(obj_a, &p.r_a, obj_b, &p.r_b, *tau),
                Metric::RandomFeatures { .. } => features.as_ref().expect("built above").similarity(
                    render_clean(obj_a, &p.r_a).as_slice(),
                    render_clean(obj_b, &p.r_b).as_slice(),
                ),
            }
        })
        .collect()
}

/// Evaluates every metric on every matched pair of `table` (whose object
/// and matched objects must be in `objects`) and correlates each with the
/// stored similarity.
pub fn metric_comparison(
    table: &AmbiguityTable,
    objects: &[SynthObject],
    metrics: &[Metric],
) -> Result<MetricReport> {
    if table.is_empty() {
        return Err(Error::invalid("table", "ambiguity table is empty"));
    }
    let obj_a = object_for(objects, table.object_class)?;
    let primary: Vec<f64> = table.pairs.iter().map(|p| p.similarity).collect();
    let series = metrics
        .iter()
        .map(|m| {
            m.validate()?;
            let values = evaluate_metric(m, &table.pairs, obj_a, objects)?;
            let (rho, r) = if values.len() >= 2 {
                (spearman(&primary, &values)?, pearson(&primary, &values)?)
            } else {
                (0.0, 0.0)
            };
            Ok(MetricSeries {
                metric: m.clone(),
                scaled: min_max_scale(&values),
                values,
                spearman: rho,
                pearson: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport { primary, series })
}

pub const PLOT_CSV_HEADER: [&str; 3] = ["pair_index", "value", "scaled_value"];
pub const SUMMARY_CSV_HEADER: [&str; 4] = ["metric", "n_pairs", "spearman", "pearson"];

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}

impl MetricReport {
    pub fn series(&self, name: &str) -> Option<&MetricSeries> {
        self.series.iter().find(|s| s.metric.name() == name)
    }

    /// Writes `metric_<name>.csv` per metric (pairs in descending primary
    /// similarity order) and `metric_summary.csv`. Returns the file names.
    pub fn write_csv(&self, dir: &Path) -> Result<Vec<String>> {
        let mut names = Vec::new();
        for s in &self.series {
            let name = format!("metric_{}.csv", s.metric.name());
            let path = dir.join(&name);
            let err = |source| Error::Csv {
                path: path.clone(),
                source,
            };
            let mut w = csv_writer(&path)?;
            w.write_record(PLOT_CSV_HEADER).map_err(err)?;
            for (i, (v, sv)) in s.values.iter().zip(&s.scaled).enumerate() {
                w.serialize((i, v, sv)).map_err(err)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            names.push(name);
        }
        let name = "metric_summary.csv".to_string();
        let path = dir.join(&name);
        let err = |source| Error::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv_writer(&path)?;
        w.write_record(SUMMARY_CSV_HEADER).map_err(err)?;
        for s in &self.series {
            w.serialize((s.metric.name(), s.values.len(), s.spearman, s.pearson))
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        names.push(name);
        Ok(names)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub n_pairs: usize,
    pub spearman: f64,
    pub pearson: f64,
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().map(|row| row.map_err(err)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub sigma: f64,
    pub spearman: f64,
}

/// For each sigma, recomputes every pair's similarity from noisy
/// embeddings of both views and reports its Spearman correlation with the
/// stored noise-free similarities. Noise for pair `p` at sigma index `s`
/// is seeded from `(seed, s, p)`.
pub fn noise_robustness_sweep(
    table: &AmbiguityTable,
    objects: &[SynthObject],
    sigmas: &[f64],
    seed: u64,
) -> Result<Vec<RobustnessRow>> {
    if sigmas.is_empty() {
        return Err(Error::invalid("sigmas", "must be nonempty"));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid("sigmas", format!("{s} is not a valid noise level")));
    }
    if table.len() < 2 {
        return Err(Error::invalid("table", "need at least two pairs"));
    }
    let obj_a = object_for(objects, table.object_class)?;
    let baseline: Vec<f64> = table.pairs.iter().map(|p| p.similarity).collect();
    let n = table.len() as u64;
    sigmas
        .iter()
        .enumerate()
        .map(|(si, &sigma)| {
            let noisy = table
                .pairs
                .par_iter()
                .enumerate()
                .map(|(pi, p)| {
                    let obj_b = object_for(objects, p.matched_class)?;
                    let k = si as u64 * n + pi as u64;
                    let za = render_embedding(obj_a, &p.r_a, sigma, derive_seed(seed, "robustness-a", k));
                    let zb = render_embedding(obj_b, &p.r_b, sigma, derive_seed(seed, "robustness-b", k));
                    Ok(cossim(za.as_slice(), zb.as_slice()).unwrap_or(0.0))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(RobustnessRow {
                sigma,
                spearman: spearman(&baseline, &noisy)?,
            })
        })
        .collect()
}

pub fn write_robustness_csv(rows: &[RobustnessRow], path: &Path) -> Result<()> {
    let err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(["sigma", "spearman"]).map_err(err)?;
    for r in rows {
        w.serialize((r.sigma, r.spearman)).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
