//! Local differential privacy machinery.
//!
//! A silo trains with DP-SGD: every sentence gradient is L2-clipped to
//! `clip_bound`, the clipped gradients of a Poisson-sampled lot are summed,
//! Gaussian noise of scale `sigma * clip_bound` is added per component, and
//! the result divided by the nominal lot size becomes the step. The
//! accountant in [`accountant`] converts `(q, sigma, steps)` into an
//! `(epsilon, delta)` guarantee; [`PrivacySpec::calibrate`] inverts that to a
//! per-silo noise multiplier.

mod accountant;

pub use accountant::{
    calibrate_sigma, calibrate_sigma_orders, epsilon_for, epsilon_for_orders, log_moment,
    log_moment_grid, LogMomentTable, LAMBDA_MAX, SIGMA_BRACKET,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterVector;
use crate::tagger::{loss_and_gradient, Sentence, TaggerModel};

/// Per-silo privacy budget and the noise calibrated to meet it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySpec {
    /// Target budget for the whole training run.
    pub epsilon: f64,
    pub delta: f64,
    /// L2 bound applied to every per-sentence gradient.
    pub clip_bound: f64,
    /// Poisson sampling rate `min(1, lot_size / n_train)`.
    pub sampling_rate: f64,
    /// Nominal lot size; also the divisor of the noisy update.
    pub lot_size: usize,
    /// Total mechanism invocations budgeted over the run.
    pub steps: u64,
    /// Calibrated noise multiplier satisfying the budget.
    pub sigma: f64,
}

impl PrivacySpec {
    /// Calibrate sigma for a silo with `n_train` training sentences.
    ///
    /// The budget is spent over the whole run: `steps = rounds * local_epochs
    /// * ceil(n_train / lot_size)`.
    pub fn calibrate(
        epsilon: f64,
        delta: f64,
        clip_bound: f64,
        n_train: usize,
        lot_size: usize,
        rounds: u64,
        local_epochs: u64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::config("epsilon must be > 0"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("delta must lie in (0, 1)"));
        }
        if !(clip_bound > 0.0) {
            return Err(Error::config("clip bound must be > 0"));
        }
        if lot_size == 0 {
            return Err(Error::config("lot size must be >= 1"));
        }
        if n_train == 0 {
            return Err(Error::config("cannot calibrate privacy for an empty silo"));
        }
        let sampling_rate = (lot_size as f64 / n_train as f64).min(1.0);
        let steps_per_epoch = n_train.div_ceil(lot_size) as u64;
        let steps = rounds * local_epochs * steps_per_epoch;
        let sigma = calibrate_sigma(epsilon, sampling_rate, steps, delta)?;
        Ok(PrivacySpec {
            epsilon,
            delta,
            clip_bound,
            sampling_rate,
            lot_size,
            steps,
            sigma,
        })
    }

    /// Epsilon actually achieved by the calibrated sigma.
    pub fn achieved_epsilon(&self) -> Result<f64> {
        epsilon_for(self.sigma, self.sampling_rate, self.steps, self.delta)
    }
}

/// Scale `grad` to L2 norm at most `clip_bound`.
///
/// Inside the ball the vector is returned unchanged (bit for bit); outside it
/// is scaled by `clip_bound / norm`, preserving direction.
pub fn clip(grad: &ParameterVector, clip_bound: f64) -> Result<ParameterVector> {
    if !(clip_bound > 0.0) {
        return Err(Error::invalid_input("clip bound must be > 0"));
    }
    if grad.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input("gradient contains non-finite components"));
    }
    let norm = grad.l2_norm();
    if norm <= clip_bound {
        return Ok(grad.clone());
    }
    let mut clipped = grad.clone();
    clipped.scale(clip_bound / norm);
    Ok(clipped)
}

/// Poisson-style lot sampling: each sentence joins independently with
/// probability `q`, in input order.
pub fn poisson_sample<'a>(
    sentences: &'a [Sentence],
    q: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a Sentence> {
    sentences
        .iter()
        .filter(|_| rng.random::<f64>() < q)
        .collect()
}

/// One DP-SGD step over an already-sampled lot.
///
/// `update = (sum of clipped per-sentence gradients + N(0, sigma^2 C^2 I)) / lot_size`,
/// applied with the learning rate. With `sigma == 0` no noise is drawn and the
/// step equals clipped averaged SGD exactly. An empty lot yields a pure-noise
/// update.
pub fn dp_sgd_step(
    model: &mut TaggerModel,
    lot: &[&Sentence],
    clip_bound: f64,
    sigma: f64,
    lot_size: usize,
    learning_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if lot_size == 0 {
        return Err(Error::config("lot size must be >= 1"));
    }
    if sigma < 0.0 {
        return Err(Error::config("sigma must be >= 0"));
    }
    let mut summed = ParameterVector::zeros(model.layout_id());
    let mut loss_sum = 0.0;
    for sentence in lot {
        let (loss, grad) = loss_and_gradient(model, sentence)?;
        loss_sum += loss;
        let clipped = clip(&grad, clip_bound)?;
        summed.add_assign(&clipped)?;
    }
    if sigma > 0.0 {
        let noise = Normal::new(0.0, sigma * clip_bound)
            .map_err(|e| Error::Numeric(format!("bad noise scale: {e}")))?;
        for v in summed.values_mut() {
            *v += noise.sample(rng);
        }
    }
    let divisor = lot_size as f64;
    if learning_rate != 0.0 {
        for (p, s) in model.values_mut().iter_mut().zip(summed.values()) {
            *p -= learning_rate * (s / divisor);
        }
    }
    Ok(if lot.is_empty() { 0.0 } else { loss_sum / lot.len() as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelShape;
    use crate::rng::seeded;
    use crate::tagger::{sgd_step, BioTag};

    fn tiny_shape() -> ModelShape {
        // Smallest legal layout: 9 parameters.
        ModelShape::new(1, 1, 1, 0).unwrap()
    }

    fn vector(head: &[f64]) -> ParameterVector {
        let mut pv = ParameterVector::zeros(tiny_shape().layout_id());
        pv.values_mut()[..head.len()].copy_from_slice(head);
        pv
    }

    fn train_shape() -> ModelShape {
        ModelShape::new(8, 3, 4, 1).unwrap()
    }

    fn sentences() -> Vec<Sentence> {
        vec![
            Sentence::new(vec![2, 3, 4], vec![BioTag::B, BioTag::I, BioTag::O]).unwrap(),
            Sentence::new(vec![5, 6], vec![BioTag::O, BioTag::B]).unwrap(),
            Sentence::new(vec![7, 2, 3, 4], vec![BioTag::O, BioTag::O, BioTag::B, BioTag::O])
                .unwrap(),
        ]
    }

    #[test]
    fn clip_is_identity_inside_the_ball() {
        let grad = vector(&[0.6, 0.8]); // norm 1.0
        let clipped = clip(&grad, 2.0).unwrap();
        assert_eq!(grad, clipped);
    }

    #[test]
    fn clip_scales_to_the_bound_outside() {
        let grad = vector(&[3.0, 4.0]); // norm 5
        let clipped = clip(&grad, 2.5).unwrap();
        assert!((clipped.values()[0] - 1.5).abs() < 1e-15);
        assert!((clipped.values()[1] - 2.0).abs() < 1e-15);
        assert!((clipped.l2_norm() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn clip_never_increases_norm_and_preserves_direction() {
        let mut rng = seeded(40);
        for _ in 0..500 {
            let mut pv = ParameterVector::zeros(tiny_shape().layout_id());
            for v in pv.values_mut() {
                *v = rng.random_range(-10.0..10.0);
            }
            let c = rng.random_range(0.01..5.0);
            let clipped = clip(&pv, c).unwrap();
            assert!(clipped.l2_norm() <= c + 1e-12);
            let norm = pv.l2_norm();
            if norm > c {
                // scaled copies stay parallel
                let dot: f64 = pv
                    .values()
                    .iter()
                    .zip(clipped.values())
                    .map(|(a, b)| a * b)
                    .sum();
                assert!((dot - norm * c).abs() < 1e-9 * norm.max(1.0));
            } else {
                assert_eq!(pv, clipped);
            }
        }
    }

    #[test]
    fn clip_rejects_non_finite_gradients() {
        let grad = vector(&[f64::NAN]);
        assert!(clip(&grad, 1.0).is_err());
        assert!(clip(&vector(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn sigma_zero_matches_plain_averaged_step_bitwise() {
        let data = sentences();
        let lot: Vec<&Sentence> = data.iter().collect();

        let mut plain = TaggerModel::init(train_shape(), &mut seeded(1));
        let mut private = plain.clone();

        // Generous clip bound keeps every gradient inside the ball.
        sgd_step(&mut plain, &lot, 0.05).unwrap();
        dp_sgd_step(&mut private, &lot, 1e6, 0.0, lot.len(), 0.05, &mut seeded(9)).unwrap();

        assert_eq!(plain.values(), private.values());
        assert_eq!(plain.digest(), private.digest());
    }

    #[test]
    fn empty_lot_updates_are_unbiased_noise() {
        let shape = tiny_shape();
        let (sigma, clip_bound, lot_size, lr) = (2.0, 1.0, 4usize, 1.0);
        let trials = 10_000;
        let mut mean = vec![0.0; shape.param_count()];
        let mut rng = seeded(77);
        for _ in 0..trials {
            let mut model = TaggerModel::zeros(shape);
            dp_sgd_step(&mut model, &[], clip_bound, sigma, lot_size, lr, &mut rng).unwrap();
            for (m, v) in mean.iter_mut().zip(model.values()) {
                *m += v / trials as f64;
            }
        }
        let bound = 3.0 * sigma * clip_bound / (lot_size as f64 * (trials as f64).sqrt());
        for (i, m) in mean.iter().enumerate() {
            assert!(
                m.abs() < bound,
                "component {i} biased: |{m}| >= {bound}"
            );
        }
    }

    #[test]
    fn dp_step_is_bitwise_reproducible() {
        let data = sentences();
        let lot: Vec<&Sentence> = data.iter().collect();
        let run = || {
            let mut model = TaggerModel::init(train_shape(), &mut seeded(3));
            dp_sgd_step(&mut model, &lot, 1.0, 1.7, 8, 0.01, &mut seeded(55)).unwrap();
            model.digest()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn poisson_sampling_is_seeded_and_rate_sensitive() {
        let data = sentences();
        let a: Vec<usize> = poisson_sample(&data, 0.5, &mut seeded(8))
            .iter()
            .map(|s| s.len())
            .collect();
        let b: Vec<usize> = poisson_sample(&data, 0.5, &mut seeded(8))
            .iter()
            .map(|s| s.len())
            .collect();
        assert_eq!(a, b);
        assert_eq!(poisson_sample(&data, 1.0, &mut seeded(8)).len(), data.len());
        assert!(poisson_sample(&data, 1e-12, &mut seeded(8)).is_empty());
    }

    #[test]
    fn rejects_bad_step_config() {
        let mut model = TaggerModel::zeros(train_shape());
        assert!(dp_sgd_step(&mut model, &[], 1.0, 1.0, 0, 0.01, &mut seeded(0)).is_err());
        assert!(dp_sgd_step(&mut model, &[], 1.0, -0.5, 4, 0.01, &mut seeded(0)).is_err());
    }

    #[test]
    fn calibrated_spec_meets_its_budget() {
        let spec = PrivacySpec::calibrate(2.0, 1e-5, 1.0, 400, 8, 20, 1).unwrap();
        assert_eq!(spec.steps, 20 * 50);
        assert!((spec.sampling_rate - 0.02).abs() < 1e-12);
        let achieved = spec.achieved_epsilon().unwrap();
        assert!(achieved <= 2.0 && achieved >= 0.999 * 2.0);
        assert!(PrivacySpec::calibrate(2.0, 1e-5, 1.0, 0, 8, 20, 1).is_err());
    }
}
