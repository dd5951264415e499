//! k-means++ codebooks over segment features and the histogram-of-segments
//! reduction from MIML bags to fixed-length MLC examples.

use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{MimlBag, MimlDataset, MlcDataset, MlcExample};
use crate::{seeds, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookConfig {
    pub k: usize,
    pub max_iterations: usize,
    /// Lloyd stops once no center moves by this much or more.
    pub tolerance: f64,
    /// Scale features to zero mean and unit variance before clustering.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self {
            k: 50,
            max_iterations: 100,
            tolerance: 1e-6,
            standardize: false,
            seed: 0,
        }
    }
}

/// Per-feature affine map applied before distance computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    fn fit(points: &[Vec<f64>]) -> Self {
        let d = points[0].len();
        let n = points.len() as f64;
        let mut means = alloc::vec![0.0; d];
        for p in points {
            for (m, v) in means.iter_mut().zip(p) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut scales = alloc::vec![0.0; d];
        for p in points {
            for ((s, v), m) in scales.iter_mut().zip(p).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scales {
            let sd = libm::sqrt(*s / n);
            *s = if sd > 0.0 { sd } else { 1.0 };
        }
        Self { means, scales }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.means)
            .zip(&self.scales)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Cluster centers plus the fit's final inertia.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    centers: Vec<Vec<f64>>,
    dim: usize,
    inertia: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    standardization: Option<Standardization>,
}

/// Diagnostics recorded while fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// Point indices chosen by k-means++ seeding, in order.
    pub seeds: Vec<usize>,
    /// Inertia after seeding, then after every Lloyd iteration.
    pub inertia: Vec<f64>,
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the lowest index.
fn nearest(centers: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(center, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn inertia(centers: &[Vec<f64>], points: &[Vec<f64>]) -> f64 {
    points.iter().map(|p| nearest(centers, p).1).sum()
}

fn distinct_count(points: &[Vec<f64>]) -> usize {
    let mut keys: Vec<Vec<u64>> = points
        .iter()
        .map(|p| p.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// k-means++ seeding: the first center is uniform over the points, every
/// later one is drawn with probability proportional to the squared distance
/// to the nearest center chosen so far. Returns point indices.
pub fn kmeans_plus_plus<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::InsufficientData("no segments to cluster".into()));
    }
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..points.len()));
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let sampler = WeightedIndex::new(&d2).map_err(|_| {
            Error::InsufficientData(alloc::format!(
                "only {} distinct segments for k = {k}; use a smaller k",
                chosen.len()
            ))
        })?;
        let next = sampler.sample(rng);
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            let nd = squared_distance(p, &points[next]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(chosen)
}

impl Codebook {
    /// A codebook from explicit centers; inertia is unknown and set to 0.
    pub fn from_centers(centers: Vec<Vec<f64>>) -> Result<Self> {
        let dim = centers.first().map(Vec::len).ok_or_else(|| {
            Error::InvalidConfig("a codebook needs at least one center".into())
        })?;
        if let Some(c) = centers.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "codebook center",
                expected: dim,
                found: c.len(),
            });
        }
        if centers.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook center".into()));
        }
        Ok(Self {
            centers,
            dim,
            inertia: 0.0,
            standardization: None,
        })
    }

    /// k-means++ seeding followed by Lloyd iterations.
    pub fn fit(segments: &[Vec<f64>], config: &CodebookConfig) -> Result<Self> {
        Self::fit_traced(segments, config).map(|(cb, _)| cb)
    }

    pub fn fit_traced(segments: &[Vec<f64>], config: &CodebookConfig) -> Result<(Self, FitTrace)> {
        if config.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if segments.is_empty() {
            return Err(Error::InsufficientData("no segments to cluster".into()));
        }
        let dim = segments[0].len();
        if let Some(s) = segments.iter().find(|s| s.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "segment features",
                expected: dim,
                found: s.len(),
            });
        }
        crate::dataset::check_finite(&segments.concat(), "segment features")?;
        let distinct = distinct_count(segments);
        if config.k > distinct {
            return Err(Error::InsufficientData(alloc::format!(
                "k = {} exceeds the {distinct} distinct segments; use a smaller k",
                config.k
            )));
        }

        let standardization = config.standardize.then(|| Standardization::fit(segments));
        let scaled: Vec<Vec<f64>>;
        let points: &[Vec<f64>] = match &standardization {
            Some(s) => {
                scaled = segments.iter().map(|p| s.apply(p)).collect();
                &scaled
            }
            None => segments,
        };

        let mut rng = seeds::rng(config.seed);
        let seed_idx = kmeans_plus_plus(points, config.k, &mut rng)?;
        let mut centers: Vec<Vec<f64>> = seed_idx.iter().map(|&i| points[i].clone()).collect();
        let mut trace = FitTrace {
            seeds: seed_idx,
            inertia: alloc::vec![inertia(&centers, points)],
        };

        let mut assignment = alloc::vec![0usize; points.len()];
        for _ in 0..config.max_iterations {
            for (a, p) in assignment.iter_mut().zip(points) {
                *a = nearest(&centers, p).0;
            }
            let mut sums = alloc::vec![alloc::vec![0.0; dim]; config.k];
            let mut counts = alloc::vec![0usize; config.k];
            for (&a, p) in assignment.iter().zip(points) {
                counts[a] += 1;
                for (s, v) in sums[a].iter_mut().zip(p) {
                    *s += v;
                }
            }
            let mut updated: Vec<Vec<f64>> = sums
                .into_iter()
                .zip(&counts)
                .zip(&centers)
                .map(|((s, &n), old)| {
                    if n == 0 {
                        old.clone()
                    } else {
                        s.into_iter().map(|v| v / n as f64).collect()
                    }
                })
                .collect();
            // An empty cluster takes over the point farthest from its center.
            for c in (0..config.k).filter(|&c| counts[c] == 0) {
                let mut far = (0, -1.0);
                for (i, p) in points.iter().enumerate() {
                    let d = nearest(&updated, p).1;
                    if d > far.1 {
                        far = (i, d);
                    }
                }
                updated[c] = points[far.0].clone();
            }
            let movement = centers
                .iter()
                .zip(&updated)
                .map(|(a, b)| libm::sqrt(squared_distance(a, b)))
                .fold(0.0, f64::max);
            centers = updated;
            trace.inertia.push(inertia(&centers, points));
            if movement < config.tolerance {
                break;
            }
        }

        let inertia = *trace.inertia.last().expect("seeding inertia recorded");
        Ok((
            Self {
                centers,
                dim,
                inertia,
                standardization,
            },
            trace,
        ))
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Centers in clustering space (standardized when enabled).
    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Nearest center by Euclidean distance, lowest index on ties.
    pub fn assign(&self, segment: &[f64]) -> Result<usize> {
        if segment.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "segment features",
                expected: self.dim,
                found: segment.len(),
            });
        }
        Ok(match &self.standardization {
            Some(s) => nearest(&self.centers, &s.apply(segment)).0,
            None => nearest(&self.centers, segment).0,
        })
    }

    /// Fraction of the bag's segments assigned to each center. An empty bag
    /// maps to the zero vector.
    pub fn histogram(&self, bag: &MimlBag) -> Result<Vec<f64>> {
        let mut h = alloc::vec![0.0; self.k()];
        for segment in &bag.instances {
            h[self.assign(segment)?] += 1.0;
        }
        if !bag.instances.is_empty() {
            let n = bag.instances.len() as f64;
            h.iter_mut().for_each(|v| *v /= n);
        }
        Ok(h)
    }

    /// One MLC example per bag, with `d = k` histogram features.
    pub fn reduce(&self, miml: &MimlDataset) -> Result<MlcDataset> {
        if miml.instance_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "codebook input",
                expected: self.dim,
                found: miml.instance_dim(),
            });
        }
        let examples = miml
            .bags()
            .iter()
            .map(|bag| {
                Ok(MlcExample {
                    id: bag.id.clone(),
                    x: self.histogram(bag)?,
                    y: bag.y.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        MlcDataset::new(miml.vocabulary().clone(), examples, self.k())
    }
}
