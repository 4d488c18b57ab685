//! Reward environments.

use crate::bandit::Environment;
use crate::model::{Instance, Matching};
use crate::offline::{brute_force_opt, sp_matching, OfflineError};
use crate::sp::extract_order;

use super::rng::{derive, splitmix_at, unit_f64};

/// Optimal matching value of an instance. Uses the single-peaked dynamic
/// program when an exact order can be extracted, exhaustive search otherwise.
pub fn optimum_value(instance: &Instance) -> Result<f64, OfflineError> {
    let theta = instance.theta();
    match extract_order(theta, 0.0) {
        Ok(order) => {
            let arranged = instance.reorder_columns(&order);
            Ok(sp_matching(arranged.theta(), arranged.costs(), instance.budget())?.value)
        }
        Err(_) => Ok(brute_force_opt(theta, instance.costs(), instance.budget())?.value),
    }
}

/// Bernoulli rewards: the reward of `(u, k)` in round `t` is
/// `1` iff `unit(splitmix_at(key(u, k), t)) < theta[u][k]`, with
/// `key(u, k) = derive(seed, [u, k])`.
#[derive(Debug, Clone)]
pub struct BernoulliEnv {
    instance: Instance,
    optimum: f64,
    keys: Vec<u64>,
}

impl BernoulliEnv {
    pub fn new(instance: Instance, seed: u64) -> Result<Self, OfflineError> {
        let optimum = optimum_value(&instance)?;
        Ok(Self::with_optimum(instance, seed, optimum))
    }

    /// Skips the optimum computation when the caller already knows it.
    pub fn with_optimum(instance: Instance, seed: u64, optimum: f64) -> Self {
        let arms = instance.arms() as u64;
        let keys = (0..instance.users() as u64)
            .flat_map(|u| (0..arms).map(move |k| derive(seed, &[u, k])))
            .collect();
        Self {
            instance,
            optimum,
            keys,
        }
    }
}

impl Environment for BernoulliEnv {
    fn instance(&self) -> &Instance {
        &self.instance
    }

    fn optimum(&self) -> f64 {
        self.optimum
    }

    fn pull(&mut self, round: u64, matching: &Matching, rewards: &mut [f64]) {
        let arms = self.instance.arms();
        let theta = self.instance.theta();
        for (u, (&k, r)) in matching
            .assignment()
            .iter()
            .zip(rewards.iter_mut())
            .enumerate()
        {
            let draw = unit_f64(splitmix_at(self.keys[u * arms + k], round));
            *r = if draw < theta.get(u, k) { 1.0 } else { 0.0 };
        }
    }
}

/// Noise-free rewards equal to the means.
#[derive(Debug, Clone)]
pub struct DeterministicEnv {
    instance: Instance,
    optimum: f64,
}

impl DeterministicEnv {
    pub fn new(instance: Instance) -> Result<Self, OfflineError> {
        let optimum = optimum_value(&instance)?;
        Ok(Self { instance, optimum })
    }
}

impl Environment for DeterministicEnv {
    fn instance(&self) -> &Instance {
        &self.instance
    }

    fn optimum(&self) -> f64 {
        self.optimum
    }

    fn pull(&mut self, _round: u64, matching: &Matching, rewards: &mut [f64]) {
        let theta = self.instance.theta();
        for (u, (&k, r)) in matching
            .assignment()
            .iter()
            .zip(rewards.iter_mut())
            .enumerate()
        {
            *r = theta.get(u, k);
        }
    }
}
