//! One-dimensional Gaussian mixtures: EM fitting with deterministic
//! k-means++-style seeding, BIC model-order selection and closed-form
//! interval masses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lower bound on component variances. Identical samples must not collapse a
/// component to zero variance.
pub const VARIANCE_FLOOR: f64 = 1e-4;
/// Largest model order tried by [`fit_best`].
pub const MAX_COMPONENTS: usize = 10;
/// Default convergence tolerance on the log-likelihood gain.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Default EM iteration cap.
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixtureError {
    #[error("cannot fit a mixture to an empty sample set")]
    EmptySamples,
    #[error("invalid component count {requested} for {samples} samples (must be 1..={max})")]
    InvalidOrder {
        requested: usize,
        samples: usize,
        max: usize,
    },
}

/// One weighted normal component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    #[serde(rename = "w")]
    pub weight: f64,
    #[serde(rename = "mu")]
    pub mean: f64,
    #[serde(rename = "var")]
    pub variance: f64,
}

impl GaussianComponent {
    fn log_density(&self, x: f64) -> f64 {
        let z = x - self.mean;
        -0.5 * (2.0 * std::f64::consts::PI * self.variance).ln()
            - z * z / (2.0 * self.variance)
    }
}

/// A mixture of weighted normal components over temporal differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
    #[serde(rename = "n")]
    pub sample_count: usize,
}

impl GaussianMixture {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Mixture density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * c.log_density(x).exp())
            .sum()
    }

    /// Log-likelihood of `samples` under this mixture.
    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        let mut terms = [f64::NEG_INFINITY; MAX_COMPONENTS];
        let k = self.components.len();
        samples
            .iter()
            .map(|&x| {
                let mut max = f64::NEG_INFINITY;
                for (j, c) in self.components.iter().enumerate() {
                    let t = c.weight.ln() + c.log_density(x);
                    terms[j] = t;
                    if t > max {
                        max = t;
                    }
                }
                if !max.is_finite() {
                    return max;
                }
                let mut sum = 0.0;
                for &t in &terms[..k] {
                    let d = t - max;
                    if d > EXP_UNDERFLOW {
                        sum += d.exp();
                    }
                }
                max + sum.ln()
            })
            .sum()
    }
}

// Differences below this threshold contribute less than 1e-20 relative mass
// and are dropped from softmax sums.
const EXP_UNDERFLOW: f64 = -46.0;

/// Standard normal cumulative distribution function.
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Deterministic k-means++-style choice of initial centers.
fn seed_means(samples: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut means = Vec::with_capacity(n);
    means.push(samples[rng.gen_range(0..samples.len())]);
    while means.len() < n {
        let d2: Vec<f64> = samples
            .iter()
            .map(|&x| {
                means
                    .iter()
                    .map(|&m| (x - m) * (x - m))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = samples.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            samples[chosen]
        } else {
            samples[rng.gen_range(0..samples.len())]
        };
        means.push(next);
    }
    means
}

/// Deterministic k-means initialization: k-means++ seeds refined by Lloyd
/// iterations, then per-cluster moments. Starting EM from a settled
/// partition instead of raw seeds saves most of its iterations.
fn kmeans_init(
    samples: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut centers = seed_means(samples, k, rng);
    let mut assignment = vec![0usize; n];
    for _ in 0..50 {
        for (i, &x) in samples.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, &c) in centers.iter().enumerate() {
                let d = (x - c) * (x - c);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            assignment[i] = best;
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (i, &x) in samples.iter().enumerate() {
            sums[assignment[i]] += x;
            counts[assignment[i]] += 1;
        }
        let mut moved = false;
        for j in 0..k {
            if counts[j] > 0 {
                let c = sums[j] / counts[j] as f64;
                if c != centers[j] {
                    centers[j] = c;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
    }

    let mean_all = samples.iter().sum::<f64>() / n as f64;
    let var_all = (samples.iter().map(|&x| (x - mean_all).powi(2)).sum::<f64>() / n as f64)
        .max(VARIANCE_FLOOR);
    let mut weights = vec![0.0; k];
    let mut variances = vec![0.0; k];
    for j in 0..k {
        let members: Vec<f64> = samples
            .iter()
            .enumerate()
            .filter(|(i, _)| assignment[*i] == j)
            .map(|(_, &x)| x)
            .collect();
        if members.is_empty() {
            // cluster starved by duplicate seeds; EM keeps it negligible
            weights[j] = 1e-12;
            variances[j] = var_all;
        } else {
            weights[j] = members.len() as f64 / n as f64;
            variances[j] = (members
                .iter()
                .map(|&x| (x - centers[j]) * (x - centers[j]))
                .sum::<f64>()
                / members.len() as f64)
                .max(VARIANCE_FLOOR);
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    (centers, variances, weights)
}

/// Fit an `n_components` mixture to `samples` by expectation maximization.
///
/// Deterministic for a fixed sample order and seed. Component variances are
/// clamped to [`VARIANCE_FLOOR`]; the returned components are sorted by mean.
pub fn fit_em(
    samples: &[f64],
    n_components: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<GaussianMixture, MixtureError> {
    fit_em_with_trace(samples, n_components, seed, tol, max_iter).map(|(m, _)| m)
}

/// Like [`fit_em`], additionally returning the per-iteration log-likelihood
/// trace.
pub fn fit_em_with_trace(
    samples: &[f64],
    n_components: usize,
    seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<(GaussianMixture, Vec<f64>), MixtureError> {
    if samples.is_empty() {
        return Err(MixtureError::EmptySamples);
    }
    let n = samples.len();
    let k = n_components;
    if k < 1 || k > n || k > MAX_COMPONENTS {
        return Err(MixtureError::InvalidOrder {
            requested: k,
            samples: n,
            max: MAX_COMPONENTS.min(n),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut means, mut variances, mut weights) = kmeans_init(samples, k, &mut rng);

    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;

    // per-iteration component constants and sufficient statistics
    // (responsibility mass, weighted deviation, weighted squared deviation)
    let mut log_norm = vec![0.0; k];
    let mut inv_two_var = vec![0.0; k];
    let mut terms = vec![0.0; k];
    let mut acc_r = vec![0.0; k];
    let mut acc_dx = vec![0.0; k];
    let mut acc_dx2 = vec![0.0; k];

    for _ in 0..max_iter {
        for j in 0..k {
            log_norm[j] =
                weights[j].ln() - 0.5 * (std::f64::consts::TAU * variances[j]).ln();
            inv_two_var[j] = 0.5 / variances[j];
            acc_r[j] = 0.0;
            acc_dx[j] = 0.0;
            acc_dx2[j] = 0.0;
        }

        // E-step, fused with the accumulation of the responsibility-weighted
        // moments around the current means. The per-sample log of the
        // normalizer is batched into chunked products to keep `ln` off the
        // inner path; components that underflow the softmax contribute exact
        // zeros, so the accumulation needs no branches.
        let mut ll = 0.0;
        let mut log_prod = 1.0;
        let mut pending = 0;
        for &x in samples {
            let mut max_term = f64::NEG_INFINITY;
            for j in 0..k {
                let d = x - means[j];
                let t = log_norm[j] - d * d * inv_two_var[j];
                terms[j] = t;
                if t > max_term {
                    max_term = t;
                }
            }
            let mut sum = 0.0;
            for t in terms.iter_mut() {
                let d = *t - max_term;
                *t = if d > EXP_UNDERFLOW { d.exp() } else { 0.0 };
                sum += *t;
            }
            ll += max_term;
            log_prod *= sum;
            pending += 1;
            if pending == 16 {
                ll += log_prod.ln();
                log_prod = 1.0;
                pending = 0;
            }
            let inv_sum = 1.0 / sum;
            for j in 0..k {
                let r = terms[j] * inv_sum;
                let d = x - means[j];
                acc_r[j] += r;
                acc_dx[j] += r * d;
                acc_dx2[j] += r * d * d;
            }
        }
        if pending > 0 {
            ll += log_prod.ln();
        }
        trace.push(ll);

        // M-step from the accumulated statistics; shifting by the previous
        // mean keeps the variance update cancellation-free.
        for j in 0..k {
            let nk = acc_r[j];
            if nk > 1e-300 {
                let shift = acc_dx[j] / nk;
                means[j] += shift;
                variances[j] = (acc_dx2[j] / nk - shift * shift).max(VARIANCE_FLOOR);
            }
            weights[j] = (nk / n as f64).max(1e-12);
        }
        let w_total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= w_total;
        }

        if ll - prev_ll < tol && prev_ll.is_finite() {
            break;
        }
        prev_ll = ll;
    }

    let mut components: Vec<GaussianComponent> = (0..k)
        .map(|j| GaussianComponent {
            weight: weights[j],
            mean: means[j],
            variance: variances[j],
        })
        .collect();
    components.sort_by(|a, b| a.mean.total_cmp(&b.mean));

    Ok((
        GaussianMixture {
            components,
            sample_count: n,
        },
        trace,
    ))
}

/// Bayesian Information Criterion of `model` on `samples`:
/// `k * ln(n) - 2 * ln(L)` with `k = 3N - 1` free parameters for `N`
/// components.
pub fn bic(model: &GaussianMixture, samples: &[f64]) -> f64 {
    let k = 3.0 * model.len() as f64 - 1.0;
    let n = samples.len() as f64;
    k * n.ln() - 2.0 * model.log_likelihood(samples)
}

/// Fit mixtures with `N = 1..=min(10, samples.len())` components and return
/// the one minimizing the BIC. Ties break toward fewer components.
pub fn fit_best(samples: &[f64], seed: u64) -> Result<GaussianMixture, MixtureError> {
    if samples.is_empty() {
        return Err(MixtureError::EmptySamples);
    }
    let max_n = MAX_COMPONENTS.min(samples.len());
    let mut best: Option<(f64, GaussianMixture)> = None;
    for n in 1..=max_n {
        let model = fit_em(
            samples,
            n,
            seed.wrapping_add(n as u64),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )?;
        let score = bic(&model, samples);
        let better = match &best {
            None => true,
            Some((best_score, _)) => score < *best_score,
        };
        if better {
            best = Some((score, model));
        }
    }
    Ok(best.expect("at least one order is fit").1)
}

/// Probability mass of the mixture on `[lo, hi]`, restricted to the
/// components in `subset` (all components if `None`). Bounds may be
/// infinite.
pub fn mass(model: &GaussianMixture, lo: f64, hi: f64, subset: Option<&[usize]>) -> f64 {
    debug_assert!(lo <= hi);
    let component_mass = |c: &GaussianComponent| {
        let sigma = c.variance.sqrt();
        let upper = if hi == f64::INFINITY {
            1.0
        } else {
            normal_cdf((hi - c.mean) / sigma)
        };
        let lower = if lo == f64::NEG_INFINITY {
            0.0
        } else {
            normal_cdf((lo - c.mean) / sigma)
        };
        c.weight * (upper - lower)
    };
    match subset {
        None => model.components.iter().map(component_mass).sum(),
        Some(indices) => indices
            .iter()
            .map(|&i| component_mass(&model.components[i]))
            .sum(),
    }
}

/// Trapezoid quadrature of the mixture density, used as an independent
/// oracle for the closed-form masses in tests.
#[cfg(test)]
pub(crate) fn quadrature(model: &GaussianMixture, lo: f64, hi: f64) -> f64 {
    let step = 1e-4;
    let n = ((hi - lo) / step).round() as usize;
    let mut acc = 0.0;
    let mut prev = model.density(lo);
    for i in 1..=n {
        let x = lo + step * i as f64;
        let cur = model.density(x);
        acc += 0.5 * (prev + cur) * step;
        prev = cur;
    }
    acc
}
