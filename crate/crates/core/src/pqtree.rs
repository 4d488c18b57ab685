//! PQ-trees over a universe of arms `0..K`.
//!
//! A PQ-tree represents a family of permutations (its *frontiers*): P-nodes
//! let their children appear in any order, Q-nodes only in the stored order
//! or its reverse. [`PQTree::reduce`] restricts the family to the
//! permutations in which a given set of arms is contiguous, using the
//! Booth–Lueck templates applied bottom-up over the pertinent subtree.
//!
//! Each pertinent node is labelled *empty* (no constrained leaves below it),
//! *full* (only constrained leaves) or *partial*. Partial nodes are always
//! rewritten into a Q-node whose children read `[empty.., full..]` so the
//! parent can splice them.

use std::fmt;

use thiserror::Error;

use crate::model::ArmOrder;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PqError {
    #[error("a PQ-tree needs at least one leaf")]
    ZeroUniverse,
    #[error("arm {arm} is outside the universe 0..{universe}")]
    ArmOutOfRange { arm: usize, universe: usize },
    #[error("more than {cap} frontiers ({count} in total)")]
    CapExceeded { cap: usize, count: u128 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Leaf(usize),
    P(Vec<Node>),
    Q(Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Empty,
    Full,
    Partial,
}

/// Template mismatch: no frontier keeps the constraint contiguous.
struct Irreducible;

type Reduced = Result<(Node, Label), Irreducible>;

#[derive(Clone, PartialEq, Eq)]
pub struct PQTree {
    universe: usize,
    root: Node,
}

impl PQTree {
    /// The universal tree: one P-node over all leaves.
    pub fn new(universe: usize) -> Result<Self, PqError> {
        let root = match universe {
            0 => return Err(PqError::ZeroUniverse),
            1 => Node::Leaf(0),
            _ => Node::P((0..universe).map(Node::Leaf).collect()),
        };
        Ok(Self { universe, root })
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Restricts the frontiers to those where `constraint` is contiguous.
    ///
    /// Returns `Ok(false)` and leaves the tree untouched when no current
    /// frontier satisfies the constraint. Duplicates in `constraint` are
    /// ignored; singletons and the full universe are no-ops.
    pub fn reduce(&mut self, constraint: &[usize]) -> Result<bool, PqError> {
        let mut member = vec![false; self.universe];
        let mut size = 0;
        for &arm in constraint {
            if arm >= self.universe {
                return Err(PqError::ArmOutOfRange {
                    arm,
                    universe: self.universe,
                });
            }
            if !member[arm] {
                member[arm] = true;
                size += 1;
            }
        }
        if size <= 1 || size == self.universe {
            return Ok(true);
        }
        let ctx = Ctx { member, size };
        // Copy-on-write: a failed template leaves `self.root` as it was.
        match ctx.reduce_at_pertinent_root(self.root.clone()) {
            Ok(root) => {
                self.root = normalize(root);
                Ok(true)
            }
            Err(Irreducible) => Ok(false),
        }
    }

    /// The canonical frontier: leaves read left to right in stored order.
    pub fn frontier(&self) -> ArmOrder {
        let mut out = Vec::with_capacity(self.universe);
        collect_leaves(&self.root, &mut out);
        ArmOrder::new(out).expect("every arm appears as exactly one leaf")
    }

    /// Number of distinct frontiers, saturating at `u128::MAX`.
    pub fn frontier_count(&self) -> u128 {
        count_frontiers(&self.root)
    }

    /// Every frontier, sorted lexicographically. Fails with
    /// [`PqError::CapExceeded`] instead of truncating when there are more
    /// than `cap`.
    pub fn enumerate_frontiers(&self, cap: usize) -> Result<Vec<ArmOrder>, PqError> {
        let count = self.frontier_count();
        if count > cap as u128 {
            return Err(PqError::CapExceeded { cap, count });
        }
        let mut all: Vec<ArmOrder> = expand(&self.root)
            .into_iter()
            .map(|v| ArmOrder::new(v).expect("frontiers are permutations"))
            .collect();
        all.sort();
        Ok(all)
    }
}

impl fmt::Display for PQTree {
    /// P-nodes print as `(..)`, Q-nodes as `[..]`, leaves as their arm index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

impl fmt::Debug for PQTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PQTree({self})")
    }
}

fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let (open, close, children) = match node {
        Node::Leaf(k) => return write!(f, "{k}"),
        Node::P(c) => ('(', ')', c),
        Node::Q(c) => ('[', ']', c),
    };
    write!(f, "{open}")?;
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write_node(child, f)?;
    }
    write!(f, "{close}")
}

struct Ctx {
    member: Vec<bool>,
    size: usize,
}

impl Ctx {
    fn count(&self, node: &Node) -> usize {
        match node {
            Node::Leaf(k) => usize::from(self.member[*k]),
            Node::P(c) | Node::Q(c) => c.iter().map(|n| self.count(n)).sum(),
        }
    }

    /// Descends to the deepest node containing every constrained leaf and
    /// applies the root templates there.
    fn reduce_at_pertinent_root(&self, node: Node) -> Result<Node, Irreducible> {
        let (is_q, mut children) = match node {
            Node::Leaf(_) => return Ok(node),
            Node::P(c) => (false, c),
            Node::Q(c) => (true, c),
        };
        if let Some(i) = children.iter().position(|c| self.count(c) == self.size) {
            let child = std::mem::replace(&mut children[i], Node::Leaf(usize::MAX));
            children[i] = self.reduce_at_pertinent_root(child)?;
            return Ok(if is_q {
                Node::Q(children)
            } else {
                Node::P(children)
            });
        }
        let labelled = children
            .into_iter()
            .map(|c| self.reduce_below(c))
            .collect::<Result<Vec<_>, _>>()?;
        if is_q {
            self.q_root(labelled)
        } else {
            self.p_root(labelled)
        }
    }

    /// Reduces a node strictly below the pertinent root and reports its label.
    fn reduce_below(&self, node: Node) -> Reduced {
        let (is_q, children) = match node {
            Node::Leaf(k) => {
                let label = if self.member[k] {
                    Label::Full
                } else {
                    Label::Empty
                };
                return Ok((node, label));
            }
            Node::P(c) => (false, c),
            Node::Q(c) => (true, c),
        };
        let hits = children.iter().map(|c| self.count(c)).sum::<usize>();
        let node = if is_q {
            Node::Q(children)
        } else {
            Node::P(children)
        };
        if hits == 0 {
            return Ok((node, Label::Empty));
        }
        if hits == leaf_count(&node) {
            return Ok((node, Label::Full));
        }
        let (Node::P(children) | Node::Q(children)) = node else {
            unreachable!("leaves are never partial")
        };
        let labelled = children
            .into_iter()
            .map(|c| self.reduce_below(c))
            .collect::<Result<Vec<_>, _>>()?;
        let reduced = if is_q {
            q_partial(labelled)?
        } else {
            p_partial(labelled)?
        };
        Ok((reduced, Label::Partial))
    }

    fn p_root(&self, labelled: Vec<(Node, Label)>) -> Result<Node, Irreducible> {
        let Split {
            empty,
            full,
            partial,
        } = split(labelled);
        match partial.len() {
            // P2: gather the full children under a fresh P-node.
            0 => {
                if empty.is_empty() {
                    return Ok(Node::P(full));
                }
                let mut children = empty;
                children.extend(group(full));
                Ok(Node::P(children))
            }
            // P4: hang the full children off the full end of the partial Q.
            1 => {
                let mut seq = q_children(partial.into_iter().next().unwrap());
                seq.extend(group(full));
                Ok(replace_or_keep(empty, Node::Q(seq)))
            }
            // P6: join two partial Qs through the full children.
            2 => {
                let mut it = partial.into_iter();
                let mut seq = q_children(it.next().unwrap());
                seq.extend(group(full));
                seq.extend(q_children(it.next().unwrap()).into_iter().rev());
                Ok(replace_or_keep(empty, Node::Q(seq)))
            }
            _ => Err(Irreducible),
        }
    }

    fn q_root(&self, labelled: Vec<(Node, Label)>) -> Result<Node, Irreducible> {
        // Q2/Q3 at the root: empties, a partial, fulls, a partial, empties.
        arrange(labelled, true).map(Node::Q).ok_or(Irreducible)
    }
}

struct Split {
    empty: Vec<Node>,
    full: Vec<Node>,
    partial: Vec<Node>,
}

fn split(labelled: Vec<(Node, Label)>) -> Split {
    let mut s = Split {
        empty: Vec::new(),
        full: Vec::new(),
        partial: Vec::new(),
    };
    for (node, label) in labelled {
        match label {
            Label::Empty => s.empty.push(node),
            Label::Full => s.full.push(node),
            Label::Partial => s.partial.push(node),
        }
    }
    s
}

/// Zero nodes vanish, one node stands alone, more become a P-node.
fn group(mut nodes: Vec<Node>) -> Option<Node> {
    match nodes.len() {
        0 => None,
        1 => nodes.pop(),
        _ => Some(Node::P(nodes)),
    }
}

fn replace_or_keep(empty: Vec<Node>, q: Node) -> Node {
    if empty.is_empty() {
        q
    } else {
        let mut children = empty;
        children.push(q);
        Node::P(children)
    }
}

fn q_children(node: Node) -> Vec<Node> {
    match node {
        Node::Q(c) => c,
        _ => unreachable!("partial nodes are always Q-nodes"),
    }
}

/// P3 (no partial child) and P5 (one partial child) below the root.
fn p_partial(labelled: Vec<(Node, Label)>) -> Result<Node, Irreducible> {
    let Split {
        empty,
        full,
        partial,
    } = split(labelled);
    if partial.len() > 1 {
        return Err(Irreducible);
    }
    let mut seq: Vec<Node> = group(empty).into_iter().collect();
    if let Some(p) = partial.into_iter().next() {
        seq.extend(q_children(p));
    }
    seq.extend(group(full));
    Ok(Node::Q(seq))
}

/// Q2 below the root: the children must read `empty* [partial] full+` in one
/// of the two orientations.
fn q_partial(labelled: Vec<(Node, Label)>) -> Result<Node, Irreducible> {
    let labels: Vec<Label> = labelled.iter().map(|(_, l)| *l).collect();
    let n = labels.len();
    let lo = labels.iter().position(|&l| l != Label::Empty).unwrap();
    let hi = labels.iter().rposition(|&l| l != Label::Empty).unwrap();
    let forward = hi == n - 1 && (lo == hi || labels[hi] == Label::Full);
    let backward = lo == 0 && (lo == hi || labels[lo] == Label::Full);
    let labelled = match (forward, backward) {
        (true, _) => labelled,
        (false, true) => labelled.into_iter().rev().collect(),
        (false, false) => return Err(Irreducible),
    };
    arrange(labelled, false).map(Node::Q).ok_or(Irreducible)
}

/// Splices partial children into a Q-node child list so the flattened labels
/// read `empty* full+` (below the root) or `empty* full+ empty*` (at the
/// root). Returns `None` when the children cannot be arranged that way
/// without reversing the list.
fn arrange(labelled: Vec<(Node, Label)>, at_root: bool) -> Option<Vec<Node>> {
    let n = labelled.len();
    let lo = labelled.iter().position(|(_, l)| *l != Label::Empty)?;
    let hi = labelled.iter().rposition(|(_, l)| *l != Label::Empty)?;
    if lo < hi && labelled[lo + 1..hi].iter().any(|(_, l)| *l != Label::Full) {
        return None;
    }
    if !at_root && (hi != n - 1 || (lo != hi && labelled[hi].1 == Label::Partial)) {
        return None;
    }
    let mut out = Vec::with_capacity(n + 4);
    for (i, (node, label)) in labelled.into_iter().enumerate() {
        if label == Label::Partial {
            let inner = q_children(node);
            // The left boundary keeps [empty.., full..]; the right one flips.
            if i == lo {
                out.extend(inner);
            } else {
                out.extend(inner.into_iter().rev());
            }
        } else {
            out.push(node);
        }
    }
    Some(out)
}

/// Collapses unary internal nodes and turns two-child Q-nodes into P-nodes.
fn normalize(node: Node) -> Node {
    match node {
        Node::Leaf(_) => node,
        Node::P(c) | Node::Q(c) if c.len() == 1 => normalize(c.into_iter().next().unwrap()),
        Node::P(c) => Node::P(c.into_iter().map(normalize).collect()),
        Node::Q(c) if c.len() == 2 => Node::P(c.into_iter().map(normalize).collect()),
        Node::Q(c) => Node::Q(c.into_iter().map(normalize).collect()),
    }
}

fn leaf_count(node: &Node) -> usize {
    match node {
        Node::Leaf(_) => 1,
        Node::P(c) | Node::Q(c) => c.iter().map(leaf_count).sum(),
    }
}

fn collect_leaves(node: &Node, out: &mut Vec<usize>) {
    match node {
        Node::Leaf(k) => out.push(*k),
        Node::P(c) | Node::Q(c) => c.iter().for_each(|n| collect_leaves(n, out)),
    }
}

fn count_frontiers(node: &Node) -> u128 {
    match node {
        Node::Leaf(_) => 1,
        Node::P(c) => (1..=c.len() as u128)
            .chain(c.iter().map(count_frontiers))
            .fold(1u128, u128::saturating_mul),
        Node::Q(c) => c
            .iter()
            .map(count_frontiers)
            .fold(2u128, u128::saturating_mul),
    }
}

fn expand(node: &Node) -> Vec<Vec<usize>> {
    match node {
        Node::Leaf(k) => vec![vec![*k]],
        Node::P(c) => {
            let parts: Vec<_> = c.iter().map(expand).collect();
            let mut out = Vec::new();
            for perm in permutations(c.len()) {
                let ordered: Vec<&Vec<Vec<usize>>> = perm.iter().map(|&i| &parts[i]).collect();
                out.extend(product(&ordered));
            }
            out
        }
        Node::Q(c) => {
            let parts: Vec<_> = c.iter().map(expand).collect();
            let fwd: Vec<&Vec<Vec<usize>>> = parts.iter().collect();
            let rev: Vec<&Vec<Vec<usize>>> = parts.iter().rev().collect();
            let mut out = product(&fwd);
            out.extend(product(&rev));
            out
        }
    }
}

fn product(parts: &[&Vec<Vec<usize>>]) -> Vec<Vec<usize>> {
    let mut acc = vec![Vec::new()];
    for choices in parts {
        let mut next = Vec::with_capacity(acc.len() * choices.len());
        for prefix in &acc {
            for choice in choices.iter() {
                let mut v = prefix.clone();
                v.extend_from_slice(choice);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
