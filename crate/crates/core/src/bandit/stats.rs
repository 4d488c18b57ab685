//! Pull statistics, confidence bounds and the maximal matrix of a confidence
//! set.

use crate::model::{ArmOrder, Matching, PreferenceMatrix};
use crate::sp::PeakProfile;

/// Per-pair pull counts and empirical means.
#[derive(Debug, Clone)]
pub struct BanditStats {
    users: usize,
    arms: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    log_horizon: f64,
}

impl BanditStats {
    pub fn new(users: usize, arms: usize, horizon: u64) -> Self {
        Self {
            users,
            arms,
            counts: vec![0; users * arms],
            sums: vec![0.0; users * arms],
            log_horizon: (horizon as f64).ln(),
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    #[inline]
    pub fn count(&self, user: usize, arm: usize) -> u64 {
        self.counts[user * self.arms + arm]
    }

    /// Empirical mean, `0` for unpulled pairs.
    #[inline]
    pub fn mean(&self, user: usize, arm: usize) -> f64 {
        let i = user * self.arms + arm;
        if self.counts[i] == 0 {
            0.0
        } else {
            self.sums[i] / self.counts[i] as f64
        }
    }

    /// Confidence radius `sqrt(2 ln T / n)`; infinite when unpulled.
    #[inline]
    pub fn radius(&self, user: usize, arm: usize) -> f64 {
        let n = self.count(user, arm);
        if n == 0 {
            f64::INFINITY
        } else {
            (2.0 * self.log_horizon / n as f64).sqrt()
        }
    }

    /// Records one semi-bandit round: `rewards[u]` was observed for the pair
    /// `(u, matching(u))`.
    pub fn record(&mut self, matching: &Matching, rewards: &[f64]) {
        debug_assert_eq!(rewards.len(), self.users);
        for (u, (&k, &r)) in matching.assignment().iter().zip(rewards).enumerate() {
            let i = u * self.arms + k;
            self.counts[i] += 1;
            self.sums[i] += r;
        }
    }

    pub fn means(&self) -> PreferenceMatrix {
        PreferenceMatrix::from_fn(self.users, self.arms, |u, k| self.mean(u, k))
            .expect("means of [0, 1] rewards stay in range")
    }

    #[inline]
    pub fn ucb(&self, user: usize, arm: usize) -> f64 {
        (self.mean(user, arm) + self.radius(user, arm)).clamp(0.0, 1.0)
    }

    #[inline]
    pub fn lcb(&self, user: usize, arm: usize) -> f64 {
        (self.mean(user, arm) - self.radius(user, arm)).clamp(0.0, 1.0)
    }

    pub fn bounds(&self) -> ConfidenceBounds {
        let ucb = PreferenceMatrix::from_fn(self.users, self.arms, |u, k| self.ucb(u, k))
            .expect("clamped");
        let lcb = PreferenceMatrix::from_fn(self.users, self.arms, |u, k| self.lcb(u, k))
            .expect("clamped");
        ConfidenceBounds { ucb, lcb }
    }
}

/// Upper and lower confidence bounds clamped to `[0, 1]`. Unpulled pairs
/// have `ucb = 1` and `lcb = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBounds {
    pub ucb: PreferenceMatrix,
    pub lcb: PreferenceMatrix,
}

impl ConfidenceBounds {
    /// Whether `theta` lies inside every box.
    pub fn contains(&self, theta: &PreferenceMatrix) -> bool {
        theta
            .as_slice()
            .iter()
            .zip(self.lcb.as_slice().iter().zip(self.ucb.as_slice()))
            .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }
}

/// The element-wise largest matrix that is single-peaked w.r.t. `order` with
/// the given peaks and lies below `ucb`: every entry is the running minimum
/// of upper bounds on the path from the entry to its user's peak.
///
/// `peaks` are positions in `order`; the output uses the column indexing of
/// `ucb`.
pub fn maximal_matrix(
    ucb: &PreferenceMatrix,
    order: &ArmOrder,
    peaks: &PeakProfile,
) -> PreferenceMatrix {
    let k = ucb.arms();
    let arms = order.as_slice();
    let mut values = vec![0.0; ucb.users() * k];
    for u in 0..ucb.users() {
        let row = ucb.row(u);
        let out = &mut values[u * k..(u + 1) * k];
        let p = peaks.peak(u);
        out[arms[p]] = row[arms[p]];
        let mut running = row[arms[p]];
        for pos in (0..p).rev() {
            running = running.min(row[arms[pos]]);
            out[arms[pos]] = running;
        }
        running = row[arms[p]];
        for &arm in &arms[p + 1..] {
            running = running.min(row[arm]);
            out[arm] = running;
        }
    }
    PreferenceMatrix::new(ucb.users(), k, values).expect("minima of bounds stay in range")
}
