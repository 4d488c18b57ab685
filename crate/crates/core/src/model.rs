//! Problem-domain types shared by every solver and learner.
//!
//! All user and arm indices are 0-based. Serialized instance files use the
//! same convention.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("entry theta[{user}][{arm}] = {value} lies outside [0, 1]")]
    EntryOutOfRange { user: usize, arm: usize, value: f64 },
    #[error(
        "arm {arm} costs {cost}, more than the budget {budget} (every arm must satisfy c_k <= B)"
    )]
    CostExceedsBudget { arm: usize, cost: u32, budget: u32 },
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("index {index} out of range for {what} of size {size}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
}

/// A `users x arms` grid of expected rewards in `[0, 1]`, stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PreferenceMatrix {
    users: usize,
    arms: usize,
    values: Vec<f64>,
}

impl PreferenceMatrix {
    pub fn new(users: usize, arms: usize, values: Vec<f64>) -> Result<Self, ModelError> {
        if users == 0 || arms == 0 {
            return Err(ModelError::BadDimensions(format!(
                "need at least one user and one arm, got {users}x{arms}"
            )));
        }
        if values.len() != users * arms {
            return Err(ModelError::BadDimensions(format!(
                "{} values for a {users}x{arms} matrix",
                values.len()
            )));
        }
        for (idx, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::EntryOutOfRange {
                    user: idx / arms,
                    arm: idx % arms,
                    value,
                });
            }
        }
        Ok(Self {
            users,
            arms,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ModelError> {
        let arms = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * arms);
        for (u, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != arms {
                return Err(ModelError::BadDimensions(format!(
                    "row {u} has {} entries, expected {arms}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), arms, values)
    }

    /// Builds a matrix from a closure evaluated at every `(user, arm)`.
    pub fn from_fn(
        users: usize,
        arms: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, ModelError> {
        let mut values = Vec::with_capacity(users * arms);
        for u in 0..users {
            for k in 0..arms {
                values.push(f(u, k));
            }
        }
        Self::new(users, arms, values)
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    #[inline]
    pub fn get(&self, user: usize, arm: usize) -> f64 {
        self.values[user * self.arms + arm]
    }

    #[inline]
    pub fn row(&self, user: usize) -> &[f64] {
        &self.values[user * self.arms..(user + 1) * self.arms]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.arms)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Column `j` of the result is column `order[j]` of `self`.
    pub fn reorder_columns(&self, order: &ArmOrder) -> Self {
        assert_eq!(order.len(), self.arms, "order length must equal arm count");
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.rows() {
            values.extend(order.as_slice().iter().map(|&k| row[k]));
        }
        Self {
            users: self.users,
            arms: self.arms,
            values,
        }
    }

    /// Inverse of [`reorder_columns`](Self::reorder_columns).
    pub fn restore_columns(&self, order: &ArmOrder) -> Self {
        self.reorder_columns(&order.inverse())
    }

    /// Sup-norm distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.users, self.arms), (other.users, other.arms));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for PreferenceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl TryFrom<Vec<Vec<f64>>> for PreferenceMatrix {
    type Error = ModelError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<PreferenceMatrix> for Vec<Vec<f64>> {
    fn from(m: PreferenceMatrix) -> Self {
        m.rows().map(<[f64]>::to_vec).collect()
    }
}

/// A permutation of the arms. Position `i` holds the arm placed `i`-th.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ArmOrder(Vec<usize>);

impl ArmOrder {
    pub fn new(permutation: Vec<usize>) -> Result<Self, ModelError> {
        let k = permutation.len();
        let mut seen = vec![false; k];
        for &arm in &permutation {
            if arm >= k || std::mem::replace(&mut seen[arm], true) {
                return Err(ModelError::NotAPermutation(k));
            }
        }
        Ok(Self(permutation))
    }

    pub fn identity(arms: usize) -> Self {
        Self((0..arms).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// `positions()[arm]` is the position of `arm` in the order.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (i, &arm) in self.0.iter().enumerate() {
            pos[arm] = i;
        }
        pos
    }

    pub fn inverse(&self) -> Self {
        Self(self.positions())
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }
}

impl fmt::Debug for ArmOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArmOrder{:?}", self.0)
    }
}

impl TryFrom<Vec<usize>> for ArmOrder {
    type Error = ModelError;

    fn try_from(v: Vec<usize>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ArmOrder> for Vec<usize> {
    fn from(o: ArmOrder) -> Self {
        o.0
    }
}

/// Assignment of every user to exactly one arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    assignment: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Feasibility {
    pub feasible: bool,
    pub cost: u64,
}

impl Matching {
    pub fn new(assignment: Vec<usize>) -> Result<Self, ModelError> {
        if assignment.is_empty() {
            return Err(ModelError::BadDimensions(
                "a matching must assign at least one user".into(),
            ));
        }
        Ok(Self { assignment })
    }

    /// Every user on the same arm.
    pub fn constant(users: usize, arm: usize) -> Self {
        Self {
            assignment: vec![arm; users.max(1)],
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn arm_of(&self, user: usize) -> usize {
        self.assignment[user]
    }

    pub fn users(&self) -> usize {
        self.assignment.len()
    }

    /// The distinct selected arms, ascending.
    pub fn selected(&self) -> Vec<usize> {
        self.assignment
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Relabels arms through `map`, where arm `k` becomes `map[k]`.
    pub fn map_arms(&self, map: &[usize]) -> Self {
        Self {
            assignment: self.assignment.iter().map(|&k| map[k]).collect(),
        }
    }

    fn check_against(&self, users: usize, arms: usize) -> Result<(), ModelError> {
        if self.assignment.len() != users {
            return Err(ModelError::BadDimensions(format!(
                "matching covers {} users, matrix has {users}",
                self.assignment.len()
            )));
        }
        if let Some(&bad) = self.assignment.iter().find(|&&k| k >= arms) {
            return Err(ModelError::IndexOutOfRange {
                what: "arms",
                index: bad,
                size: arms,
            });
        }
        Ok(())
    }

    /// `V(pi; theta)`: the sum of matched entries.
    pub fn value(&self, theta: &PreferenceMatrix) -> Result<f64, ModelError> {
        self.check_against(theta.users(), theta.arms())?;
        Ok(self.value_unchecked(theta))
    }

    #[inline]
    pub(crate) fn value_unchecked(&self, theta: &PreferenceMatrix) -> f64 {
        self.assignment
            .iter()
            .enumerate()
            .map(|(u, &k)| theta.get(u, k))
            .sum()
    }

    /// Total cost of the distinct selected arms and whether it fits the budget.
    pub fn feasibility(&self, instance: &Instance) -> Result<Feasibility, ModelError> {
        self.check_against(instance.users(), instance.arms())?;
        let cost = selected_cost(&self.selected(), &instance.costs);
        Ok(Feasibility {
            feasible: cost <= u64::from(instance.budget),
            cost,
        })
    }
}

pub(crate) fn selected_cost(arms: &[usize], costs: &[u32]) -> u64 {
    arms.iter().map(|&k| u64::from(costs[k])).sum()
}

/// A checked problem statement: rewards, arm costs, per-round budget, horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    theta: PreferenceMatrix,
    costs: Vec<u32>,
    budget: u32,
    horizon: u64,
}

impl Instance {
    pub fn new(
        theta: PreferenceMatrix,
        costs: Vec<u32>,
        budget: u32,
        horizon: u64,
    ) -> Result<Self, ModelError> {
        let arms = theta.arms();
        if costs.len() != arms {
            return Err(ModelError::BadDimensions(format!(
                "{} costs for {arms} arms",
                costs.len()
            )));
        }
        if budget == 0 {
            return Err(ModelError::BadDimensions("budget must be positive".into()));
        }
        for (arm, &cost) in costs.iter().enumerate() {
            if cost == 0 {
                return Err(ModelError::BadDimensions(format!(
                    "arm {arm} has zero cost; costs must be positive integers"
                )));
            }
            if cost > budget {
                return Err(ModelError::CostExceedsBudget { arm, cost, budget });
            }
        }
        let min_horizon = arms.max(theta.users()) as u64;
        if horizon < min_horizon {
            return Err(ModelError::BadDimensions(format!(
                "horizon {horizon} is below max(K, U) = {min_horizon}"
            )));
        }
        Ok(Self {
            theta,
            costs,
            budget,
            horizon,
        })
    }

    pub fn theta(&self) -> &PreferenceMatrix {
        &self.theta
    }

    pub fn costs(&self) -> &[u32] {
        &self.costs
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn users(&self) -> usize {
        self.theta.users()
    }

    pub fn arms(&self) -> usize {
        self.theta.arms()
    }

    pub fn with_horizon(&self, horizon: u64) -> Result<Self, ModelError> {
        Self::new(self.theta.clone(), self.costs.clone(), self.budget, horizon)
    }

    pub fn with_theta(&self, theta: PreferenceMatrix) -> Result<Self, ModelError> {
        Self::new(theta, self.costs.clone(), self.budget, self.horizon)
    }

    /// Same instance with columns rearranged; costs follow their arms.
    pub fn reorder_columns(&self, order: &ArmOrder) -> Self {
        Self {
            theta: self.theta.reorder_columns(order),
            costs: order.as_slice().iter().map(|&k| self.costs[k]).collect(),
            budget: self.budget,
            horizon: self.horizon,
        }
    }
}

/// On-disk instance record. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub users: usize,
    pub arms: usize,
    pub theta: Vec<Vec<f64>>,
    pub costs: Vec<u32>,
    pub budget: u32,
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sp_order: Option<Vec<usize>>,
}

impl InstanceFile {
    pub fn from_instance(instance: &Instance, sp_order: Option<&ArmOrder>) -> Self {
        Self {
            users: instance.users(),
            arms: instance.arms(),
            theta: instance.theta().clone().into(),
            costs: instance.costs().to_vec(),
            budget: instance.budget(),
            horizon: instance.horizon(),
            sp_order: sp_order.map(|o| o.as_slice().to_vec()),
        }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, crate::Error> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files always serialize")
    }
}

/// Checks a raw record against every instance invariant, reporting the first
/// violation.
pub fn validate_instance(raw: &InstanceFile) -> Result<Instance, ModelError> {
    if raw.theta.len() != raw.users {
        return Err(ModelError::BadDimensions(format!(
            "`users` is {} but theta has {} rows",
            raw.users,
            raw.theta.len()
        )));
    }
    if let Some((u, row)) = raw
        .theta
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != raw.arms)
    {
        return Err(ModelError::BadDimensions(format!(
            "`arms` is {} but theta row {u} has {} entries",
            raw.arms,
            row.len()
        )));
    }
    let theta = PreferenceMatrix::from_rows(&raw.theta)?;
    let instance = Instance::new(theta, raw.costs.clone(), raw.budget, raw.horizon)?;
    if let Some(order) = &raw.sp_order {
        if order.len() != raw.arms {
            return Err(ModelError::BadDimensions(format!(
                "sp_order has {} entries for {} arms",
                order.len(),
                raw.arms
            )));
        }
        ArmOrder::new(order.clone())?;
    }
    Ok(instance)
}
