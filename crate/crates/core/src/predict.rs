//! Predictive continuations of an observed partition, the squared size error
//! against a held-out truth, and credible bands for size proportions.

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::generative::{extend_two_param_crp, CrpParams, Simulator};
use crate::inference::ParticleSystem;
use crate::partition::Partition;

pub const DEFAULT_SAMPLES: usize = 100;

/// One draw of `Π_{n+m}` given the first `n` items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveSample {
    pub continuation: Partition,
    /// Particle the continuation was grown from; `None` for the CRP baseline.
    pub source_particle: Option<usize>,
    pub observed: usize,
}

impl PredictiveSample {
    /// Number of predicted items `m`.
    pub fn horizon(&self) -> usize {
        self.continuation.len() - self.observed
    }

    /// Size of cluster `j` after each step `k = n+1..n+m`.
    pub fn trajectory(&self, j: usize) -> Vec<u64> {
        let mut m = 0;
        let mut out = Vec::with_capacity(self.horizon());
        for i in 0..self.continuation.len() {
            if self.continuation.cluster(i) == j {
                m += 1;
            }
            if i >= self.observed {
                out.push(m);
            }
        }
        out
    }

    /// Trajectories of every cluster; clusters born after `n` start at zero.
    pub fn trajectories(&self) -> Vec<Vec<u64>> {
        let k = self.continuation.k();
        let mut current = vec![0u64; k];
        let mut out = vec![Vec::with_capacity(self.horizon()); k];
        for i in 0..self.continuation.len() {
            current[self.continuation.cluster(i)] += 1;
            if i >= self.observed {
                for (traj, &m) in out.iter_mut().zip(&current) {
                    traj.push(m);
                }
            }
        }
        out
    }
}

/// Continues the observed partition `m` steps, once per sample, each time from
/// a particle drawn in proportion to its weight.
///
/// The system must have been run with history tracking so that full latent
/// states can be recovered.
pub fn predict_continuation<R: Rng + ?Sized>(
    system: &ParticleSystem,
    m: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<PredictiveSample>> {
    let n = system.partition().len();
    if n == 0 {
        return Err(domain("the particle system has not absorbed any items"));
    }
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let idx = system.draw_index(rng);
        let mut sim = Simulator::resume(system.particle(idx)?, *system.params())?;
        for _ in 0..m {
            sim.step(rng)?;
        }
        out.push(PredictiveSample {
            continuation: sim.into_state().partition().clone(),
            source_particle: Some(idx),
            observed: n,
        });
    }
    Ok(out)
}

/// Continuations under the two-parameter CRP, whose predictive depends on the
/// observed partition only.
pub fn predict_crp_continuation<R: Rng + ?Sized>(
    observed: &Partition,
    m: usize,
    crp: &CrpParams,
    samples: usize,
    rng: &mut R,
) -> Vec<PredictiveSample> {
    (0..samples)
        .map(|_| {
            let mut p = observed.clone();
            extend_two_param_crp(&mut p, m, crp, rng);
            PredictiveSample {
                continuation: p,
                source_particle: None,
                observed: observed.len(),
            }
        })
        .collect()
}

/// `E = (1/K_n) Σ_j (1/m) Σ_k (m_{k,j} - m^{true}_{k,j})²` for each sample,
/// summing over the clusters of the training prefix only.
pub fn l2_error(samples: &[PredictiveSample], truth: &Partition, n_train: usize) -> Result<Vec<f64>> {
    if n_train < 1 || n_train >= truth.len() {
        return Err(domain(format!("training length {n_train} must lie in 1..{}", truth.len())));
    }
    let prefix = truth.restrict(n_train)?;
    let k = prefix.k();
    let horizon = truth.len() - n_train;
    samples
        .iter()
        .map(|s| {
            let c = &s.continuation;
            if s.observed != n_train || c.len() != truth.len() {
                return Err(domain("sample does not cover the same horizon as the truth"));
            }
            if (0..n_train).any(|i| c.cluster(i) != truth.cluster(i)) {
                return Err(domain("sample and truth disagree on the training prefix"));
            }
            let mut pred = prefix.sizes().to_vec();
            let mut real = pred.clone();
            let mut sq = 0.0;
            for i in n_train..truth.len() {
                if let Some(m) = pred.get_mut(c.cluster(i)) {
                    *m += 1;
                }
                if let Some(m) = real.get_mut(truth.cluster(i)) {
                    *m += 1;
                }
                sq += pred.iter().zip(&real).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum::<f64>();
            }
            Ok(sq / (k as f64 * horizon as f64))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProportionBand {
    pub r: u64,
    pub lower: f64,
    pub median: f64,
    pub upper: f64,
    pub mean: f64,
}

/// `K_{n+m,r}/K_{n+m}` for `r = 1..=r_max`.
pub fn size_proportions(p: &Partition, r_max: u64) -> Vec<f64> {
    let mut counts = vec![0usize; r_max as usize];
    for &m in p.sizes() {
        if m <= r_max {
            counts[m as usize - 1] += 1;
        }
    }
    let k = p.k() as f64;
    counts.into_iter().map(|c| c as f64 / k).collect()
}

/// Equal-tailed predictive intervals for the proportion of clusters of each
/// size up to `r_max`.
pub fn size_proportion_bands(samples: &[PredictiveSample], r_max: u64, level: f64) -> Result<Vec<ProportionBand>> {
    if samples.len() < 20 {
        return Err(domain(format!("{} samples; at least 20 are needed", samples.len())));
    }
    if !(level > 0.0 && level < 1.0) || r_max < 1 {
        return Err(domain("level must lie in (0,1) and r_max be positive"));
    }
    let props: Vec<Vec<f64>> = samples.iter().map(|s| size_proportions(&s.continuation, r_max)).collect();
    let tail = (1.0 - level) / 2.0;
    Ok((0..r_max as usize)
        .map(|r| {
            let mut col: Vec<f64> = props.iter().map(|p| p[r]).collect();
            col.sort_by(f64::total_cmp);
            ProportionBand {
                r: r as u64 + 1,
                lower: quantile(&col, tail),
                median: quantile(&col, 0.5),
                upper: quantile(&col, 1.0 - tail),
                mean: col.iter().sum::<f64>() / col.len() as f64,
            }
        })
        .collect())
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(labels: &[u32], observed: usize) -> PredictiveSample {
        PredictiveSample {
            continuation: Partition::from_labels(labels).unwrap(),
            source_particle: None,
            observed,
        }
    }

    #[test]
    fn perfect_prediction_has_zero_error() {
        let truth = Partition::from_labels(&[1, 2, 1, 3, 2, 1]).unwrap();
        let s = sample(&[1, 2, 1, 3, 2, 1], 3);
        assert_eq!(l2_error(&[s], &truth, 3).unwrap(), vec![0.0]);
    }

    #[test]
    fn constant_offset_gives_unit_error() {
        let truth = Partition::from_labels(&[1, 1, 2, 2, 2]).unwrap();
        let s = sample(&[1, 1, 1, 2, 2], 2);
        assert_eq!(l2_error(&[s], &truth, 2).unwrap(), vec![1.0]);
    }

    #[test]
    fn error_averages_over_clusters_and_steps() {
        let truth = Partition::from_labels(&[1, 2, 1, 3, 3, 3]).unwrap();
        let s = sample(&[1, 2, 1, 2, 1, 2], 3);
        // squared gaps per step: 0+1, 1+1, 1+4
        let e = l2_error(&[s], &truth, 3).unwrap()[0];
        assert!((e - 8.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn test_only_clusters_do_not_count() {
        let truth = Partition::from_labels(&[1, 1, 2, 3]).unwrap();
        let a = sample(&[1, 1, 2, 2], 2);
        let b = sample(&[1, 1, 2, 3], 2);
        assert_eq!(l2_error(&[a, b], &truth, 2).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn prefix_mismatch_is_rejected() {
        let truth = Partition::from_labels(&[1, 2, 1]).unwrap();
        assert!(l2_error(&[sample(&[1, 1, 1], 2)], &truth, 2).is_err());
        assert!(l2_error(&[sample(&[1, 2, 1, 1], 2)], &truth, 2).is_err());
    }

    #[test]
    fn trajectories_cover_the_horizon() {
        let s = sample(&[1, 2, 1, 3, 1], 2);
        assert_eq!(s.trajectories(), vec![vec![2, 2, 3], vec![1, 1, 1], vec![0, 1, 1]]);
        assert_eq!(s.trajectory(0), vec![2, 2, 3]);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-15);
    }
}
