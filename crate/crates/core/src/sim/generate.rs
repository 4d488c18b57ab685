//! Random single-peaked instances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{ArmOrder, Instance, PreferenceMatrix};
use crate::sp::PeakProfile;

use super::SimError;

/// Per-arm cost model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostsMode {
    /// Every arm costs 1.
    #[default]
    Unit,
    /// Independent uniform integers in `[1, min(max, B)]`.
    Uniform { max: u32 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetMode {
    /// `max(1, floor(K / 2))`.
    #[default]
    HalfArms,
    Fixed(u32),
}

impl BudgetMode {
    pub fn resolve(self, arms: usize) -> u32 {
        match self {
            BudgetMode::HalfArms => ((arms / 2) as u32).max(1),
            BudgetMode::Fixed(b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub users: usize,
    pub arms: usize,
    /// Entries are drawn uniformly from `[low, high)`.
    pub low: f64,
    pub high: f64,
    pub costs: CostsMode,
    pub budget: BudgetMode,
    pub horizon: u64,
    /// Redraw a user's values until the best one exceeds the runner-up by at
    /// least this much.
    pub peak_gap: Option<f64>,
}

impl GenParams {
    pub fn new(users: usize, arms: usize, horizon: u64) -> Self {
        Self {
            users,
            arms,
            low: 0.2,
            high: 0.9,
            costs: CostsMode::Unit,
            budget: BudgetMode::HalfArms,
            horizon,
            peak_gap: None,
        }
    }
}

/// A generated instance, single-peaked under the identity order.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    pub peaks: PeakProfile,
}

const MAX_REDRAWS: usize = 100_000;

/// Draws a single-peaked instance: per user, `K` uniform values and a
/// uniform peak position; the largest value goes to the peak and the rest,
/// in decreasing order, alternately fill the nearest free slot on the left
/// and then on the right (continuing on one side once the other is full).
pub fn generate_sp_instance(params: &GenParams, seed: u64) -> Result<Generated, SimError> {
    let (users, arms) = (params.users, params.arms);
    if users == 0 || arms == 0 {
        return Err(SimError::InvalidParameter(
            "users and arms must be positive".into(),
        ));
    }
    if !(0.0 <= params.low && params.low < params.high && params.high <= 1.0) {
        return Err(SimError::InvalidParameter(format!(
            "value range [{}, {}) is not inside [0, 1]",
            params.low, params.high
        )));
    }
    if let Some(gap) = params.peak_gap {
        if arms > 1 && !(gap >= 0.0 && gap < params.high - params.low) {
            return Err(SimError::InvalidParameter(format!(
                "peak gap {gap} is not attainable in [{}, {})",
                params.low, params.high
            )));
        }
    }
    let budget = params.budget.resolve(arms);
    if budget == 0 {
        return Err(SimError::InvalidParameter("budget must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(users * arms);
    let mut peaks = Vec::with_capacity(users);
    let mut draw = vec![0.0; arms];
    for _ in 0..users {
        let mut attempts = 0;
        loop {
            for v in draw.iter_mut() {
                *v = rng.gen_range(params.low..params.high);
            }
            draw.sort_by(|a, b| b.total_cmp(a));
            let separated = match params.peak_gap {
                Some(gap) if arms > 1 => draw[0] - draw[1] >= gap,
                _ => true,
            };
            if separated {
                break;
            }
            attempts += 1;
            if attempts == MAX_REDRAWS {
                return Err(SimError::InvalidParameter(format!(
                    "no row with peak gap {:?} after {MAX_REDRAWS} draws",
                    params.peak_gap
                )));
            }
        }
        let peak = rng.gen_range(0..arms);
        values.extend(place_unimodal(&draw, peak));
        peaks.push(peak);
    }
    let theta = PreferenceMatrix::new(users, arms, values)?;
    let costs = match params.costs {
        CostsMode::Unit => vec![1; arms],
        CostsMode::Uniform { max } => {
            let top = max.min(budget).max(1);
            (0..arms).map(|_| rng.gen_range(1..=top)).collect()
        }
    };
    let instance = Instance::new(theta, costs, budget, params.horizon)?;
    Ok(Generated {
        instance,
        peaks: PeakProfile::new(peaks),
    })
}

/// Lays out values sorted in decreasing order around `peak`.
fn place_unimodal(sorted_desc: &[f64], peak: usize) -> Vec<f64> {
    let k = sorted_desc.len();
    let mut row = vec![0.0; k];
    row[peak] = sorted_desc[0];
    let (mut left, mut right) = (peak, peak + 1);
    let mut go_left = true;
    for &v in &sorted_desc[1..] {
        let left_open = left > 0;
        let right_open = right < k;
        if (go_left && left_open) || !right_open {
            left -= 1;
            row[left] = v;
        } else {
            row[right] = v;
            right += 1;
        }
        go_left = !go_left;
    }
    row
}

/// Shuffles the columns with a seeded uniform permutation `perm`: column `j`
/// of the result is column `perm[j]` of the input. The input's column order
/// is recovered with `perm.inverse()`.
pub fn permute_columns(instance: &Instance, seed: u64) -> (Instance, ArmOrder) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..instance.arms()).collect();
    perm.shuffle(&mut rng);
    let perm = ArmOrder::new(perm).expect("shuffle of the identity");
    (instance.reorder_columns(&perm), perm)
}
