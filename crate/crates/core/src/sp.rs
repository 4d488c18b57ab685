//! Single-peakedness checks and transforms: peak profiles, the exact
//! approximate-single-peakedness gap, order extraction through a PQ-tree, and
//! projection of an approximately single-peaked matrix onto an exactly
//! single-peaked one.

use thiserror::Error;

use crate::model::{ArmOrder, PreferenceMatrix};
use crate::pqtree::PQTree;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpError {
    /// Row `user` has a valley: the entry at position `triple.1` is below
    /// both entries at `triple.0` and `triple.2` (positions in the order).
    #[error("user {user} is not single-peaked: valley at positions {triple:?}")]
    NotPsp {
        user: usize,
        triple: (usize, usize, usize),
    },
    #[error("no order keeps arms {constraint:?} (from user {user}) contiguous together with earlier constraints")]
    ExtractFailed { user: usize, constraint: Vec<usize> },
    #[error("order covers {got} arms, matrix has {expected}")]
    OrderLength { expected: usize, got: usize },
}

/// Peak position of every user, measured in positions of the working order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeakProfile {
    pub peaks: Vec<usize>,
}

impl PeakProfile {
    pub fn new(peaks: Vec<usize>) -> Self {
        Self { peaks }
    }

    pub fn peak(&self, user: usize) -> usize {
        self.peaks[user]
    }

    pub fn users(&self) -> usize {
        self.peaks.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AspReport {
    pub order: ArmOrder,
    /// Smallest `delta` for which the matrix is `delta`-ASP w.r.t. `order`.
    pub delta: f64,
}

fn check_order(theta: &PreferenceMatrix, order: &ArmOrder) -> Result<(), SpError> {
    if order.len() != theta.arms() {
        return Err(SpError::OrderLength {
            expected: theta.arms(),
            got: order.len(),
        });
    }
    Ok(())
}

/// Position of the first maximum.
pub(crate) fn leftmost_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Peak of every row after reindexing columns by `order`, or the first
/// valley found. Ties resolve to the leftmost position.
pub fn peaks_of(theta: &PreferenceMatrix, order: &ArmOrder) -> Result<PeakProfile, SpError> {
    check_order(theta, order)?;
    let arranged = theta.reorder_columns(order);
    let mut peaks = Vec::with_capacity(theta.users());
    for (user, row) in arranged.rows().enumerate() {
        let p = leftmost_argmax(row);
        if let Some(j) = (1..=p).find(|&j| row[j] < row[j - 1]) {
            return Err(SpError::NotPsp {
                user,
                triple: (j - 1, j, p),
            });
        }
        if let Some(j) = (p + 2..row.len()).find(|&j| row[j] > row[j - 1]) {
            return Err(SpError::NotPsp {
                user,
                triple: (p, j - 1, j),
            });
        }
        peaks.push(p);
    }
    Ok(PeakProfile { peaks })
}

/// Exact minimal valley depth over all users and ordered triples.
///
/// For a middle position `j` the deepest valley is
/// `min(max(row[..j]), max(row[j+1..])) - row[j]`, so one prefix-max and one
/// suffix-max sweep per row suffice.
pub fn asp_delta(theta: &PreferenceMatrix, order: &ArmOrder) -> Result<AspReport, SpError> {
    check_order(theta, order)?;
    let arranged = theta.reorder_columns(order);
    let k = theta.arms();
    let mut suffix = vec![f64::NEG_INFINITY; k + 1];
    let mut delta = 0.0_f64;
    for row in arranged.rows() {
        for j in (0..k).rev() {
            suffix[j] = suffix[j + 1].max(row[j]);
        }
        let mut prefix = f64::NEG_INFINITY;
        for j in 0..k {
            let valley = prefix.min(suffix[j + 1]) - row[j];
            if valley > delta {
                delta = valley;
            }
            prefix = prefix.max(row[j]);
        }
    }
    Ok(AspReport {
        order: order.clone(),
        delta,
    })
}

/// Recovers an order under which `theta` is approximately single-peaked.
///
/// Every user's arms are sorted by decreasing value (ties by arm index);
/// whenever two consecutive sorted values differ by more than `2 * eps` the
/// arms above the gap must be contiguous. The canonical frontier of the
/// resulting PQ-tree is returned. With `eps = 0` this recognizes exactly
/// single-peaked matrices.
pub fn extract_order(theta: &PreferenceMatrix, eps: f64) -> Result<ArmOrder, SpError> {
    let k = theta.arms();
    let mut tree = PQTree::new(k).expect("matrices have at least one arm");
    let mut sorted: Vec<usize> = Vec::with_capacity(k);
    for (user, row) in theta.rows().enumerate() {
        sorted.clear();
        sorted.extend(0..k);
        sorted.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for i in 0..k.saturating_sub(1) {
            if row[sorted[i]] - row[sorted[i + 1]] > 2.0 * eps {
                let prefix = &sorted[..=i];
                if !tree.reduce(prefix).expect("prefix arms are in range") {
                    let mut constraint = prefix.to_vec();
                    constraint.sort_unstable();
                    return Err(SpError::ExtractFailed { user, constraint });
                }
            }
        }
    }
    Ok(tree.frontier())
}

/// Projection onto matrices single-peaked w.r.t. `order`.
///
/// Each row keeps its leftmost maximum as the peak; entries left of it become
/// running prefix maxima and entries right of it running suffix maxima. The
/// result uses the same column indexing as `theta`. Returns the projected
/// matrix and its sup-norm distance to `theta`.
pub fn project_to_sp(
    theta: &PreferenceMatrix,
    order: &ArmOrder,
) -> Result<(PreferenceMatrix, f64), SpError> {
    check_order(theta, order)?;
    let k = theta.arms();
    let arms = order.as_slice();
    let mut values = theta.as_slice().to_vec();
    for u in 0..theta.users() {
        let row = theta.row(u);
        let out = &mut values[u * k..(u + 1) * k];
        let arranged: Vec<f64> = arms.iter().map(|&a| row[a]).collect();
        let p = leftmost_argmax(&arranged);
        let mut running = f64::NEG_INFINITY;
        for (pos, &a) in arms.iter().enumerate().take(p + 1) {
            running = running.max(arranged[pos]);
            out[a] = running;
        }
        running = f64::NEG_INFINITY;
        for pos in (p..k).rev() {
            running = running.max(arranged[pos]);
            out[arms[pos]] = running;
        }
    }
    let projected =
        PreferenceMatrix::new(theta.users(), k, values).expect("maxima of entries stay in range");
    let distance = projected.max_abs_diff(theta);
    Ok((projected, distance))
}
