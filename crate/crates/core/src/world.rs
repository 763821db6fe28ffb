//! Class-conditional Gaussian data model with exact oracles.
//!
//! Class `k` generates `x_0 ~ Normal(μ_k, s² I)`. Under the forward process
//! the Bayes-optimal denoiser for class `k` has a closed form, and the
//! Bayes classifier under a uniform prior is nearest-mean.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diffusion::{sq_dist, Condition, NoiseSchedule, NoisedObservation, Observation, ScoreModel};
use crate::error::{check_dim, contract, Error, Result};
use crate::rng::{stream_rng, Stream};

/// Analytic class-conditional Gaussian world with a uniform class prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianWorld {
    pub dim: usize,
    pub std: f64,
    pub means: Vec<Vec<f64>>,
    pub seed: u64,
}

impl GaussianWorld {
    pub fn new(std: f64, means: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let world = Self {
            dim: means.first().map_or(0, Vec::len),
            std,
            means,
            seed,
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<()> {
        if self.means.len() < 2 {
            return Err(contract("a world needs at least two classes"));
        }
        if self.dim == 0 {
            return Err(contract("world dimension must be >= 1"));
        }
        if !(self.std.is_finite() && self.std > 0.0) {
            return Err(contract(format!("within-class std must be > 0, got {}", self.std)));
        }
        for mean in &self.means {
            check_dim(self.dim, mean.len())?;
            if mean.iter().any(|v| !v.is_finite()) {
                return Err(contract("class means must be finite"));
            }
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.means.len()
    }

    fn mean(&self, class_id: usize) -> Result<&[f64]> {
        self.means
            .get(class_id)
            .map(Vec::as_slice)
            .ok_or_else(|| contract(format!("class {class_id} not in world of {} classes", self.num_classes())))
    }

    /// Draws `x_0 = μ_k + s ε`.
    pub fn sample<R: Rng + ?Sized>(&self, class_id: usize, rng: &mut R) -> Result<Observation> {
        let mean = self.mean(class_id)?;
        let data = mean
            .iter()
            .map(|m| m + self.std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Ok(Observation { data })
    }

    /// Nearest class mean; ties go to the lowest class id.
    pub fn bayes_classify(&self, x0: &[f64]) -> Result<usize> {
        check_dim(self.dim, x0.len())?;
        Ok(argmin_by_key(self.means.iter().map(|m| sq_dist(x0, m))))
    }

    /// The exact posterior mean `E[x_0 | x_t, class k]`:
    /// `(alpha s² x_t + sigma² μ_k) / (alpha² s² + sigma²)`.
    pub fn posterior_mean(
        &self,
        schedule: NoiseSchedule,
        class_id: usize,
        x_t: &NoisedObservation,
    ) -> Result<Vec<f64>> {
        check_dim(self.dim, x_t.data.len())?;
        crate::diffusion::check_time(x_t.time)?;
        let mean = self.mean(class_id)?;
        let mut out = vec![0.0; self.dim];
        posterior_mean_into(schedule, self.std, mean, &x_t.data, x_t.time, &mut out);
        Ok(out)
    }

    /// Denoiser for this world under `schedule`.
    pub fn denoiser(&self, schedule: NoiseSchedule) -> WorldDenoiser<'_> {
        WorldDenoiser { world: self, schedule }
    }

    /// Labeled dataset: `n` examples with classes assigned round-robin, drawn
    /// from the dataset stream of `seed`.
    pub fn sample_dataset(&self, n: usize, seed: u64) -> Result<Vec<(usize, Observation)>> {
        let mut rng = stream_rng(seed, Stream::Dataset, 0);
        (0..n)
            .map(|i| {
                let label = i % self.num_classes();
                Ok((label, self.sample(label, &mut rng)?))
            })
            .collect()
    }
}

fn posterior_mean_into(
    schedule: NoiseSchedule,
    std: f64,
    mean: &[f64],
    x_t: &[f64],
    t: f64,
    out: &mut [f64],
) {
    let (alpha, sigma) = schedule.alpha_sigma(t);
    let s2 = std * std;
    let sig2 = sigma * sigma;
    let denom = alpha * alpha * s2 + sig2;
    if denom == 0.0 {
        out.copy_from_slice(x_t);
        return;
    }
    let a = alpha * s2 / denom;
    let b = sig2 / denom;
    for ((o, x), m) in out.iter_mut().zip(x_t).zip(mean) {
        *o = a * x + b * m;
    }
}

/// Index of the smallest value; ties resolve to the lowest index.
pub(crate) fn argmin_by_key(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 || i == 0 {
            best = (i, v);
        }
    }
    best.0
}

/// The posterior-mean denoiser of a [`GaussianWorld`], conditioned on class id.
#[derive(Debug, Clone, Copy)]
pub struct WorldDenoiser<'a> {
    pub world: &'a GaussianWorld,
    pub schedule: NoiseSchedule,
}

impl ScoreModel for WorldDenoiser<'_> {
    fn dim(&self) -> usize {
        self.world.dim
    }

    fn denoise_into(&self, x_t: &[f64], t: f64, condition: &Condition, out: &mut [f64]) {
        let mean = &self.world.means[condition.class_id];
        posterior_mean_into(self.schedule, self.world.std, mean, x_t, t, out);
    }
}

/// Options for generating a world with well-separated means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorldSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub std: f64,
    /// Minimum pairwise mean distance, in units of `std`.
    pub separation: f64,
    /// Per-coordinate spread of candidate means, in units of `separation * std`.
    pub spread: f64,
    pub seed: u64,
}

impl WorldSpec {
    pub fn new(num_classes: usize, dim: usize, std: f64, separation: f64, seed: u64) -> Self {
        Self {
            num_classes,
            dim,
            std,
            separation,
            spread: 1.0,
            seed,
        }
    }

    /// Rejection-samples means until every pair is at least
    /// `separation * std` apart.
    pub fn generate(&self) -> Result<GaussianWorld> {
        const MAX_TRIES_PER_MEAN: usize = 20_000;
        if self.num_classes < 2 || self.dim == 0 {
            return Err(contract("need K >= 2 classes and d >= 1"));
        }
        if !(self.separation >= 0.0 && self.spread > 0.0 && self.std > 0.0) {
            return Err(contract("std and spread must be > 0, separation >= 0"));
        }
        let min_dist = self.separation * self.std;
        let scale = self.spread * min_dist.max(self.std);
        let mut rng = stream_rng(self.seed, Stream::World, 0);
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(self.num_classes);
        for k in 0..self.num_classes {
            let mut placed = false;
            for _ in 0..MAX_TRIES_PER_MEAN {
                let cand: Vec<f64> = (0..self.dim)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                if means.iter().all(|m| sq_dist(m, &cand) >= min_dist * min_dist) {
                    means.push(cand);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Contract(format!(
                    "could not place mean {k} of {} at pairwise distance >= {min_dist} after \
                     {MAX_TRIES_PER_MEAN} tries (d={}, spread={}); lower --separation or raise --spread",
                    self.num_classes, self.dim, self.spread
                )));
            }
        }
        GaussianWorld::new(self.std, means, self.seed)
    }
}

/// Options for a world whose means come in tight groups: cluster centers are
/// drawn with per-coordinate scale `between * std`, and each cluster's
/// members scatter around it with scale `within * std`. Classes in the same
/// cluster are hard to tell apart while the rest are easy to rule out.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusteredSpec {
    pub num_classes: usize,
    pub clusters: usize,
    pub dim: usize,
    pub std: f64,
    pub within: f64,
    pub between: f64,
    pub seed: u64,
}

impl ClusteredSpec {
    /// The K = 100 world used for efficiency comparisons.
    pub fn benchmark() -> Self {
        Self {
            num_classes: 100,
            clusters: 10,
            dim: 32,
            std: 4.0,
            within: 0.35,
            between: 7.0,
            seed: 1,
        }
    }

    /// Classes fill clusters in order, `ceil(K / clusters)` per cluster.
    pub fn generate(&self) -> Result<GaussianWorld> {
        if self.num_classes < 2 || self.dim == 0 || self.clusters == 0 {
            return Err(contract("need K >= 2 classes, d >= 1 and at least one cluster"));
        }
        if !(self.std > 0.0 && self.within > 0.0 && self.between >= 0.0) {
            return Err(contract("std and within must be > 0, between >= 0"));
        }
        let per_cluster = self.num_classes.div_ceil(self.clusters);
        let mut rng = stream_rng(self.seed, Stream::World, 0);
        let mut normal = |scale: f64| scale * self.std * rng.sample::<f64, _>(StandardNormal);
        let mut means = Vec::with_capacity(self.num_classes);
        while means.len() < self.num_classes {
            let center: Vec<f64> = (0..self.dim).map(|_| normal(self.between)).collect();
            for _ in 0..per_cluster.min(self.num_classes - means.len()) {
                means.push(center.iter().map(|c| c + normal(self.within)).collect());
            }
        }
        GaussianWorld::new(self.std, means, self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn two_class() -> GaussianWorld {
        GaussianWorld::new(1.0, vec![vec![2.0, 0.0], vec![-2.0, 0.0]], 0).unwrap()
    }

    #[test]
    fn posterior_mean_general_case() {
        // alpha = 0.8, sigma = 0.6 at cos(πt/2) = 0.8
        let t = (0.8f64).acos() / std::f64::consts::FRAC_PI_2;
        let world = two_class();
        let xt = NoisedObservation { data: vec![1.0, 1.0], time: t, noise_draw: vec![0.0; 2] };
        let out = world.posterior_mean(NoiseSchedule::Cosine, 0, &xt).unwrap();
        assert_abs_diff_eq!(out[0], 1.52, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn posterior_mean_matches_quadrature() {
        // 1-D: posterior over x0 ∝ N(x0; μ, s²) N(x_t; α x0, σ²)
        let (alpha, sigma, s, mu, xt): (f64, f64, f64, f64, f64) = (0.8, 0.6, 1.0, 2.0, 1.0);
        let density = |x: f64| {
            (-(x - mu).powi(2) / (2.0 * s * s)).exp() * (-(xt - alpha * x).powi(2) / (2.0 * sigma * sigma)).exp()
        };
        let (lo, hi, n) = (-15.0, 15.0, 200_000);
        let h = (hi - lo) / n as f64;
        let (mut z, mut m) = (0.0, 0.0);
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
            z += wgt * density(x);
            m += wgt * x * density(x);
        }
        assert_abs_diff_eq!(m / z, 1.52, epsilon = 1e-9);
    }

    #[test]
    fn posterior_mean_limits() {
        let world = two_class();
        let xt = NoisedObservation { data: vec![0.3, -0.4], time: 0.0, noise_draw: vec![0.0; 2] };
        assert_eq!(world.posterior_mean(NoiseSchedule::Cosine, 1, &xt).unwrap(), vec![0.3, -0.4]);

        let tight = GaussianWorld::new(1e-12, vec![vec![2.0, 0.0], vec![-2.0, 0.0]], 0).unwrap();
        let xt = NoisedObservation { data: vec![0.3, -0.4], time: 0.5, noise_draw: vec![0.0; 2] };
        let out = tight.posterior_mean(NoiseSchedule::Cosine, 1, &xt).unwrap();
        assert_abs_diff_eq!(out[0], -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bayes_classify_examples() {
        let world = GaussianWorld::new(
            1.0,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 5.0], vec![3.0, 3.0]],
            0,
        )
        .unwrap();
        assert_eq!(world.bayes_classify(&[3.0, 3.0]).unwrap(), 3);
        assert_eq!(world.bayes_classify(&[0.5, 0.0]).unwrap(), 0);
        assert!(world.bayes_classify(&[0.5]).is_err());
    }

    #[test]
    fn sampling_with_zero_spread_returns_mean() {
        let mut world = two_class();
        world.std = 0.0;
        let mut rng = stream_rng(1, Stream::Dataset, 0);
        assert_eq!(world.sample(1, &mut rng).unwrap().data, vec![-2.0, 0.0]);
        assert!(world.sample(2, &mut rng).is_err());
    }

    #[test]
    fn validation() {
        assert!(GaussianWorld::new(1.0, vec![vec![0.0]], 0).is_err());
        assert!(GaussianWorld::new(0.0, vec![vec![0.0], vec![1.0]], 0).is_err());
        assert!(GaussianWorld::new(1.0, vec![vec![0.0], vec![1.0, 2.0]], 0).is_err());
        assert!(GaussianWorld::new(1.0, vec![vec![f64::NAN], vec![1.0]], 0).is_err());
    }

    #[test]
    fn generated_worlds_respect_separation() {
        let world = WorldSpec::new(2, 1, 1.0, 10.0, 4).generate().unwrap();
        assert!((world.means[0][0] - world.means[1][0]).abs() >= 10.0);

        let spec = WorldSpec::new(20, 8, 0.5, 6.0, 9);
        let world = spec.generate().unwrap();
        for i in 0..20 {
            for j in 0..i {
                assert!(sq_dist(&world.means[i], &world.means[j]).sqrt() >= 3.0);
            }
        }
        assert_eq!(world, spec.generate().unwrap());
    }

    #[test]
    fn clustered_worlds_group_means() {
        let spec = ClusteredSpec { num_classes: 12, clusters: 3, dim: 8, std: 1.0, within: 0.1, between: 10.0, seed: 2 };
        let world = spec.generate().unwrap();
        assert_eq!(world.num_classes(), 12);
        assert_eq!(world, spec.generate().unwrap());
        let d = |i: usize, j: usize| sq_dist(&world.means[i], &world.means[j]).sqrt();
        for i in 0..12 {
            for j in 0..i {
                if i / 4 == j / 4 {
                    assert!(d(i, j) < 2.0);
                } else {
                    assert!(d(i, j) > 5.0);
                }
            }
        }
        assert!(ClusteredSpec { clusters: 0, ..spec.clone() }.generate().is_err());
        assert!(ClusteredSpec { within: 0.0, ..spec }.generate().is_err());
    }

    #[test]
    fn infeasible_separation_reports_diagnostic() {
        let mut spec = WorldSpec::new(50, 1, 1.0, 10.0, 0);
        spec.spread = 0.5;
        let err = spec.generate().unwrap_err().to_string();
        assert!(err.contains("could not place"), "{err}");
    }
}
