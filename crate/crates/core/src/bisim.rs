//! Bisimilarity approximants by round-indexed partition refinement.
//!
//! Round `k` of the refinement is exactly the kernel of `~_k`: round 0 is a
//! single block, and two states share a block in round `k + 1` iff their
//! successors hit the same *set* of round-`k` blocks. Splitting is global per
//! round rather than Paige–Tarjan style, so every intermediate kernel stays
//! observable.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::system::{FinSystem, PointedSystem, StateId};

/// Kernel of an equivalence on `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<StateId>>,
    block_of: Vec<usize>,
}

impl Partition {
    /// Builds a partition from per-state labels. Block indices are assigned
    /// in order of first occurrence, so equal kernels give equal values.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut renumber = HashMap::new();
        let mut blocks: Vec<Vec<StateId>> = Vec::new();
        let mut block_of = Vec::with_capacity(labels.len());
        for (s, l) in labels.iter().enumerate() {
            let b = *renumber.entry(*l).or_insert_with(|| {
                blocks.push(Vec::new());
                blocks.len() - 1
            });
            blocks[b].push(s);
            block_of.push(b);
        }
        Partition { blocks, block_of }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Vec<StateId>] {
        &self.blocks
    }

    pub fn block_of(&self, s: StateId) -> usize {
        self.block_of[s]
    }

    pub fn same_block(&self, a: StateId, b: StateId) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.blocks
            .iter()
            .all(|block| block.iter().all(|&s| coarser.same_block(s, block[0])))
    }
}

/// All refinement rounds of one system, up to the fixpoint.
#[derive(Clone, Debug)]
pub struct Refinement {
    rounds: Vec<Vec<usize>>,
    stable_at: Option<usize>,
}

impl Refinement {
    /// Refines until the partition stops changing.
    pub fn compute(sys: &FinSystem) -> Self {
        let mut r = Self::start(sys);
        while r.stable_at.is_none() {
            r.step(sys);
        }
        r
    }

    /// Refines for at least `k` rounds (or until stable, if earlier).
    pub fn up_to(sys: &FinSystem, k: usize) -> Self {
        let mut r = Self::start(sys);
        while r.stable_at.is_none() && r.rounds.len() <= k {
            r.step(sys);
        }
        r
    }

    fn start(sys: &FinSystem) -> Self {
        Refinement { rounds: vec![vec![0; sys.len()]], stable_at: None }
    }

    fn step(&mut self, sys: &FinSystem) {
        let prev = self.rounds.last().expect("round 0 always present");
        let next = refine_once(sys, prev);
        if block_count(&next) == block_count(prev) {
            self.stable_at = Some(self.rounds.len() - 1);
        } else {
            self.rounds.push(next);
        }
    }

    /// First round whose kernel equals every later one, if reached.
    pub fn fixpoint_round(&self) -> Option<usize> {
        self.stable_at
    }

    pub fn computed_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Labels of round `k`; rounds past the fixpoint reuse the fixpoint.
    pub fn labels(&self, k: usize) -> &[usize] {
        match self.stable_at {
            Some(r) if k > r => &self.rounds[r],
            _ => &self.rounds[k],
        }
    }

    pub fn partition(&self, k: usize) -> Partition {
        Partition::from_labels(self.labels(k))
    }

    pub fn equivalent(&self, a: StateId, b: StateId, k: usize) -> bool {
        let l = self.labels(k);
        l[a] == l[b]
    }

    /// Least round separating `a` and `b`; `None` when they are bisimilar.
    /// Requires a fully computed refinement.
    pub fn separation(&self, a: StateId, b: StateId) -> Option<usize> {
        assert!(self.stable_at.is_some(), "separation needs the fixpoint");
        self.rounds.iter().position(|l| l[a] != l[b])
    }

    pub fn bisimilar(&self, a: StateId, b: StateId) -> bool {
        self.separation(a, b).is_none()
    }
}

fn block_count(labels: &[usize]) -> usize {
    labels.iter().max().map_or(0, |m| m + 1)
}

fn refine_once(sys: &FinSystem, prev: &[usize]) -> Vec<usize> {
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    sys.states()
        .map(|s| {
            let mut sig: Vec<usize> = sys.successors(s).iter().map(|&t| prev[t]).collect();
            sig.sort_unstable();
            sig.dedup();
            let next = ids.len();
            *ids.entry(sig).or_insert(next)
        })
        .collect()
}

/// Kernel of `~_k` on `sys`.
pub fn approximant(sys: &FinSystem, k: usize) -> Partition {
    Refinement::up_to(sys, k).partition(k)
}

/// Two pointed systems placed side by side in one state space.
#[derive(Clone, Debug)]
pub struct JointSystem {
    pub system: Arc<FinSystem>,
    pub left: StateId,
    pub right: StateId,
}

impl JointSystem {
    pub fn new(x: &PointedSystem, y: &PointedSystem) -> Self {
        let (sys, offset) = x.system().disjoint_union(y.system());
        JointSystem { system: Arc::new(sys), left: x.root(), right: y.root() + offset }
    }
}

/// Whether `x ~_k y`.
pub fn bisim_at(x: &PointedSystem, y: &PointedSystem, k: usize) -> bool {
    let joint = JointSystem::new(x, y);
    Refinement::up_to(&joint.system, k).equivalent(joint.left, joint.right, k)
}

pub fn bisimilar(x: &PointedSystem, y: &PointedSystem) -> bool {
    let joint = JointSystem::new(x, y);
    Refinement::compute(&joint.system).bisimilar(joint.left, joint.right)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Level {
    Finite(usize),
    Infinite,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Finite(k) => write!(f, "{k}"),
            Level::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// An attacker strategy in the bisimulation game: a move on one side and,
/// for every possible reply on the other side, a strategy for the pair that
/// results. Depth `k` strategies certify `!~_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Distinguisher {
    pub side: Side,
    pub attack: StateId,
    pub replies: Vec<(StateId, Distinguisher)>,
}

impl Distinguisher {
    pub fn depth(&self) -> usize {
        1 + self.replies.iter().map(|(_, d)| d.depth()).max().unwrap_or(0)
    }

    /// Replays the strategy against `left`/`right` in `sys`: the attack must
    /// be a real transition and the replies must be exactly the defender's
    /// successors. Succeeding certifies `left !~_depth right`.
    pub fn verify(&self, sys: &FinSystem, left: StateId, right: StateId) -> bool {
        let (attacker, defender) = match self.side {
            Side::Left => (left, right),
            Side::Right => (right, left),
        };
        if !sys.successors(attacker).contains(&self.attack) {
            return false;
        }
        let mut replied: Vec<StateId> = self.replies.iter().map(|(r, _)| *r).collect();
        let mut expected = sys.successors(defender).to_vec();
        replied.sort_unstable();
        expected.sort_unstable();
        if replied != expected {
            return false;
        }
        self.replies.iter().all(|(reply, sub)| match self.side {
            Side::Left => sub.verify(sys, self.attack, *reply),
            Side::Right => sub.verify(sys, *reply, self.attack),
        })
    }

    pub fn render(&self, sys: &FinSystem) -> String {
        let mut out = String::new();
        self.render_into(sys, 0, &mut out);
        out
    }

    fn render_into(&self, sys: &FinSystem, indent: usize, out: &mut String) {
        use std::fmt::Write;
        let pad = "  ".repeat(indent);
        let side = match self.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        let _ = writeln!(out, "{pad}{side} moves to {}", sys.name(self.attack));
        if self.replies.is_empty() {
            let _ = writeln!(out, "{pad}  no reply possible");
        }
        for (reply, sub) in &self.replies {
            let _ = writeln!(out, "{pad}  reply {}:", sys.name(*reply));
            sub.render_into(sys, indent + 2, out);
        }
    }
}

fn build_distinguisher(
    sys: &FinSystem,
    refinement: &Refinement,
    left: StateId,
    right: StateId,
    k: usize,
) -> Distinguisher {
    debug_assert!(k >= 1 && !refinement.equivalent(left, right, k));
    let prev = refinement.labels(k - 1);
    let attack_from = |attacker: StateId, defender: StateId| {
        let defended: Vec<usize> = sys.successors(defender).iter().map(|&t| prev[t]).collect();
        sys.successors(attacker)
            .iter()
            .copied()
            .filter(|&z| !defended.contains(&prev[z]))
            .min()
    };
    let (side, attack) = match attack_from(left, right) {
        Some(z) => (Side::Left, z),
        None => (
            Side::Right,
            attack_from(right, left).expect("separated states differ on some successor block"),
        ),
    };
    let defender = if side == Side::Left { right } else { left };
    let mut replies_src = sys.successors(defender).to_vec();
    replies_src.sort_unstable();
    let replies = replies_src
        .into_iter()
        .map(|reply| {
            let (l, r) = if side == Side::Left { (attack, reply) } else { (reply, attack) };
            let sub_k = refinement.separation(l, r).expect("reply is separated from attack");
            debug_assert!(sub_k < k);
            (reply, build_distinguisher(sys, refinement, l, r, sub_k))
        })
        .collect();
    Distinguisher { side, attack, replies }
}

/// Least level at which two pointed systems come apart.
#[derive(Clone, Debug)]
pub struct SimVerdict {
    pub level: Level,
    pub witness: Option<Distinguisher>,
    pub joint: JointSystem,
}

impl SimVerdict {
    /// Re-checks the verdict without trusting the refinement that produced
    /// it: the witness must replay, and `~_{k-1}` must hold.
    pub fn certify(&self) -> bool {
        let JointSystem { system, left, right } = &self.joint;
        match (self.level, &self.witness) {
            (Level::Infinite, None) => true,
            (Level::Finite(k), Some(w)) => {
                k >= 1
                    && w.depth() == k
                    && w.verify(system, *left, *right)
                    && Refinement::up_to(system, k - 1).equivalent(*left, *right, k - 1)
            }
            _ => false,
        }
    }
}

pub fn sim_level(x: &PointedSystem, y: &PointedSystem) -> SimVerdict {
    let joint = JointSystem::new(x, y);
    let refinement = Refinement::compute(&joint.system);
    match refinement.separation(joint.left, joint.right) {
        None => SimVerdict { level: Level::Infinite, witness: None, joint },
        Some(k) => {
            let w = build_distinguisher(&joint.system, &refinement, joint.left, joint.right, k);
            SimVerdict { level: Level::Finite(k), witness: Some(w), joint }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{parent, von_neumann, von_neumann_naive, von_set, zermelo};
    use std::collections::BTreeSet;

    #[test]
    fn round_zero_is_one_block() {
        let (sys, _) = von_neumann(3).system().disjoint_union(zermelo(4).system());
        assert_eq!(approximant(&sys, 0).len(), 1);
    }

    #[test]
    fn two_copies_of_v3_give_four_blocks() {
        let v3 = von_neumann(3);
        let joint = JointSystem::new(&v3, &v3);
        let p = approximant(&joint.system, 3);
        assert_eq!(p.len(), 4);
        assert!(p.same_block(joint.left, joint.right));
    }

    #[test]
    fn v2_and_z2_split_at_round_two() {
        let joint = JointSystem::new(&von_neumann(2), &zermelo(2));
        assert!(approximant(&joint.system, 1).same_block(joint.left, joint.right));
        assert!(!approximant(&joint.system, 2).same_block(joint.left, joint.right));
    }

    #[test]
    fn bisimilarity_examples() {
        for i in 0..6 {
            assert!(bisimilar(&von_neumann(i), &von_neumann(i)));
        }
        assert!(!bisimilar(&von_neumann(2), &von_neumann(3)));
        assert!(bisimilar(&zermelo(1), &von_neumann(1)));
        assert!(!bisimilar(&von_set(&BTreeSet::from([1])), &von_neumann(2)));
        assert!(bisimilar(&von_set(&BTreeSet::from([0, 1, 2])), &von_neumann(3)));
    }

    #[test]
    fn sim_levels_of_consecutive_ordinals() {
        for i in 0..=6 {
            let v = sim_level(&von_neumann(i), &von_neumann(i + 1));
            assert_eq!(v.level, Level::Finite(i + 1));
            assert!(v.certify());
        }
        let v = sim_level(&von_neumann(2), &von_neumann(3));
        assert_eq!(v.level, Level::Finite(3));
        let same = sim_level(&zermelo(3), &zermelo(3));
        assert_eq!(same.level, Level::Infinite);
        assert!(same.certify());
    }

    #[test]
    fn z2_against_v2() {
        let v = sim_level(&von_neumann(2), &zermelo(2));
        assert_eq!(v.level, Level::Finite(2));
        assert!(v.certify());
        let w = v.witness.unwrap();
        // v2 attacks with its dead successor v0; z2's only reply z1 can move.
        assert_eq!(w.side, Side::Left);
        assert_eq!(v.joint.system.name(w.attack), "l.v0");
        assert_eq!(w.replies.len(), 1);
    }

    #[test]
    fn tampered_witness_fails_verification() {
        let v = sim_level(&von_neumann(3), &von_neumann(4));
        let mut w = v.witness.clone().unwrap();
        w.replies.pop();
        assert!(!w.verify(&v.joint.system, v.joint.left, v.joint.right));
    }

    #[test]
    fn sharing_preserves_approximants() {
        for i in 0..=4 {
            for j in 0..=4 {
                let shared = sim_level(&von_neumann(i), &von_neumann(j)).level;
                let naive = sim_level(&von_neumann_naive(i), &von_neumann_naive(j)).level;
                assert_eq!(shared, naive, "v{i} vs v{j}");
            }
        }
    }

    #[test]
    fn parent_copies_are_bisimilar_to_children() {
        let kids = [von_neumann(2), zermelo(3), von_set(&BTreeSet::from([0, 3]))];
        let p = parent(&kids);
        for (copy, kid) in p.successors().zip(&kids) {
            assert!(bisimilar(&copy, kid));
        }
    }

    #[test]
    fn fixpoint_within_state_count() {
        let (sys, _) = von_neumann(5).system().disjoint_union(zermelo(7).system());
        let r = Refinement::compute(&sys);
        assert!(r.fixpoint_round().unwrap() <= sys.len());
    }
}
