//! Deterministic synthetic data generator.
//!
//! Gaussian mixtures with seeded class means on a scaled unit sphere stand
//! in for web-scale image collections; noisy single tags stand in for
//! hashtag annotations. All outputs are pure functions of
//! (spec, count, seed). The RNG is ChaCha8 throughout: portable, seedable,
//! documented.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{
    ExampleId, LabeledDataset, LabeledExample, ManifestEntry, PoolExample, UnlabeledPool,
};
use crate::error::{Error, Result};

/// Class prior over the mixture components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassPrior {
    Uniform,
    /// Weight of class l proportional to 1/(l+1)^exponent.
    Zipfian { exponent: f64 },
}

/// A Gaussian mixture specification: seeded class means on the unit sphere
/// scaled by `separation`, isotropic noise, a class prior, and a tag
/// corruption rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    num_classes: usize,
    dim: usize,
    separation: f64,
    noise_sigma: f64,
    tag_noise_rate: f64,
    class_means: Vec<Vec<f64>>,
    prior_weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(
        num_classes: usize,
        dim: usize,
        separation: f64,
        noise_sigma: f64,
        prior: ClassPrior,
        tag_noise_rate: f64,
        mean_seed: u64,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::config("mixture: num_classes must be positive"));
        }
        if dim == 0 {
            return Err(Error::config("mixture: dim must be positive"));
        }
        if !(separation > 0.0) || !separation.is_finite() {
            return Err(Error::config("mixture: separation must be positive"));
        }
        if !(noise_sigma > 0.0) || !noise_sigma.is_finite() {
            return Err(Error::config("mixture: noise_sigma must be positive"));
        }
        if !(0.0..=1.0).contains(&tag_noise_rate) {
            return Err(Error::config("mixture: tag_noise_rate must be in [0,1]"));
        }

        let raw: Vec<f64> = match prior {
            ClassPrior::Uniform => vec![1.0; num_classes],
            ClassPrior::Zipfian { exponent } => {
                if !exponent.is_finite() || exponent < 0.0 {
                    return Err(Error::config(
                        "mixture: Zipfian exponent must be finite and non-negative",
                    ));
                }
                (0..num_classes)
                    .map(|l| 1.0 / ((l + 1) as f64).powf(exponent))
                    .collect()
            }
        };
        let total: f64 = raw.iter().sum();
        let prior_weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        debug_assert!((prior_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut cumulative = Vec::with_capacity(num_classes);
        let mut acc = 0.0;
        for w in &prior_weights {
            acc += w;
            cumulative.push(acc);
        }
        // Guard against rounding leaving the last bucket short.
        *cumulative.last_mut().unwrap() = 1.0;

        let mut rng = ChaCha8Rng::seed_from_u64(mean_seed);
        let mut class_means = Vec::with_capacity(num_classes);
        for _ in 0..num_classes {
            let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::numeric("mixture: degenerate zero mean vector"));
            }
            for x in &mut v {
                *x = *x / norm * separation;
            }
            class_means.push(v);
        }

        Ok(Self {
            num_classes,
            dim,
            separation,
            noise_sigma,
            tag_noise_rate,
            class_means,
            prior_weights,
            cumulative,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_means(&self) -> &[Vec<f64>] {
        &self.class_means
    }

    pub fn prior_weights(&self) -> &[f64] {
        &self.prior_weights
    }

    pub fn tag_noise_rate(&self) -> f64 {
        self.tag_noise_rate
    }

    fn sample_class(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.random();
        self.cumulative.partition_point(|&c| c <= u)
    }

    fn sample_features(&self, class: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
        let mean = &self.class_means[class];
        (0..self.dim)
            .map(|j| {
                let noise: f64 = StandardNormal.sample(rng);
                (mean[j] + self.noise_sigma * noise) as f32
            })
            .collect()
    }
}

/// Draw `n` labeled examples: class from the prior, features from the
/// class Gaussian. Ids are 0..n.
pub fn generate_labeled(spec: &MixtureSpec, n: usize, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|i| {
            let class = spec.sample_class(&mut rng);
            let features = spec.sample_features(class, &mut rng);
            LabeledExample {
                id: ExampleId(i as u64),
                features,
                label: class as u32,
            }
        })
        .collect();
    LabeledDataset::new(spec.dim, spec.num_classes, examples).expect("generated data is valid")
}

/// Draw `m` pool examples. Each carries one tag: the generating class with
/// probability 1 - tag_noise_rate, otherwise a uniformly random wrong
/// class. The generating classes are returned separately as a hidden
/// oracle manifest for evaluation harnesses; they never enter the pool.
pub fn generate_pool(spec: &MixtureSpec, m: usize, seed: u64) -> (UnlabeledPool, Vec<ManifestEntry>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::with_capacity(m);
    let mut oracle = Vec::with_capacity(m);
    for i in 0..m {
        let class = spec.sample_class(&mut rng);
        let features = spec.sample_features(class, &mut rng);
        let corrupt: f64 = rng.random();
        let tag = if corrupt < spec.tag_noise_rate && spec.num_classes > 1 {
            // Uniform over the L-1 wrong classes.
            let k = rng.random_range(0..spec.num_classes - 1);
            if k >= class {
                (k + 1) as u32
            } else {
                k as u32
            }
        } else {
            class as u32
        };
        examples.push(PoolExample {
            id: ExampleId(i as u64),
            features,
            tags: vec![tag],
        });
        oracle.push(ManifestEntry {
            id: ExampleId(i as u64),
            label: class as u32,
            score: None,
        });
    }
    let pool = UnlabeledPool::new(spec.dim, examples).expect("generated pool is valid");
    (pool, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(l: usize, d: usize, rho: f64) -> MixtureSpec {
        MixtureSpec::new(l, d, 5.0, 1.0, ClassPrior::Uniform, rho, 0).unwrap()
    }

    #[test]
    fn empty_dataset() {
        let s = spec(3, 4, 0.0);
        let d = generate_labeled(&s, 0, 1);
        assert!(d.is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(5, 8, 0.2);
        assert_eq!(generate_labeled(&s, 200, 7), generate_labeled(&s, 200, 7));
        let (p1, o1) = generate_pool(&s, 200, 9);
        let (p2, o2) = generate_pool(&s, 200, 9);
        assert_eq!(p1, p2);
        assert_eq!(o1, o2);
    }

    #[test]
    fn smaller_draw_is_a_prefix() {
        let s = spec(4, 6, 0.1);
        let big = generate_labeled(&s, 100, 3);
        let small = generate_labeled(&s, 40, 3);
        assert_eq!(&big.examples()[..40], small.examples());
    }

    #[test]
    fn uniform_prior_counts_concentrate() {
        // Multinomial concentration: each class count within 4 sigma of
        // n/L, sigma = sqrt(n p (1-p)) = 30 for n=10000, L=10.
        let s = spec(10, 4, 0.0);
        let d = generate_labeled(&s, 10_000, 11);
        let mut counts = [0usize; 10];
        for ex in d.examples() {
            counts[ex.label as usize] += 1;
        }
        for (l, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - 1000.0).abs() <= 120.0,
                "class {l} count {c} outside 4 sigma of 1000"
            );
        }
    }

    #[test]
    fn zero_tag_noise_gives_true_tags() {
        let s = spec(6, 3, 0.0);
        let (pool, oracle) = generate_pool(&s, 500, 5);
        for (ex, truth) in pool.examples().iter().zip(&oracle) {
            assert_eq!(ex.tags, vec![truth.label]);
        }
    }

    #[test]
    fn full_tag_noise_gives_no_true_tags() {
        let s = spec(6, 3, 1.0);
        let (pool, oracle) = generate_pool(&s, 500, 5);
        for (ex, truth) in pool.examples().iter().zip(&oracle) {
            assert_ne!(ex.tags, vec![truth.label]);
        }
    }

    #[test]
    fn tag_noise_rate_concentrates() {
        // Binomial concentration: correct-tag fraction within 4 sigma of
        // 0.7, sigma = sqrt(0.3*0.7/10000) ~ 0.00458.
        let s = spec(10, 3, 0.3);
        let (pool, oracle) = generate_pool(&s, 10_000, 13);
        let correct = pool
            .examples()
            .iter()
            .zip(&oracle)
            .filter(|(ex, truth)| ex.tags == vec![truth.label])
            .count();
        let frac = correct as f64 / 10_000.0;
        assert!((frac - 0.7).abs() <= 4.0 * 0.00458, "fraction {frac}");
    }

    #[test]
    fn zipfian_prior_is_normalized_and_decreasing() {
        let s = MixtureSpec::new(8, 4, 5.0, 1.0, ClassPrior::Zipfian { exponent: 1.0 }, 0.0, 0)
            .unwrap();
        let w = s.prior_weights();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        // w[0]/w[3] = 4 for exponent 1.
        assert!((w[0] / w[3] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn well_separated_spec_passes_nearest_mean_sanity() {
        // Separation 10 sigma: a brute-force nearest-mean classifier must
        // exceed 99% on fresh data, guarding against degenerate specs.
        let s = MixtureSpec::new(10, 16, 10.0, 1.0, ClassPrior::Uniform, 0.0, 2).unwrap();
        let d = generate_labeled(&s, 2000, 77);
        let mut hits = 0usize;
        for ex in d.examples() {
            let mut best = (f64::INFINITY, 0usize);
            for (l, mean) in s.class_means().iter().enumerate() {
                let dist: f64 = mean
                    .iter()
                    .zip(&ex.features)
                    .map(|(m, &x)| (m - x as f64).powi(2))
                    .sum();
                if dist < best.0 {
                    best = (dist, l);
                }
            }
            if best.1 == ex.label as usize {
                hits += 1;
            }
        }
        assert!(hits as f64 / 2000.0 > 0.99, "nearest-mean hit {hits}/2000");
    }
}
