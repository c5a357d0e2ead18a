//! Elements of the limit level at omega, as lazily computed full branches.
//!
//! A branch `(b_n)` is backed by a pointed system and computed as its
//! projections, so coherence holds by naturality. Questions about finite
//! backings are decided exactly through bisimilarity; anything involving an
//! infinitely branching backing is answered up to an explicit depth and the
//! verdict says so.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Mutex;

use serde::Serialize;

use crate::bisim::{sim_level, Level};
use crate::chain::{Arena, Elem};
use crate::error::{Error, Result};
use crate::system::{AnySystem, GenSystem, PointedSystem};
use crate::trees::{extract_branch, Channel, Index};

/// Default depth for verdicts that cannot be decided exactly.
pub const DEFAULT_DEPTH: usize = 12;

#[derive(Clone, Debug)]
pub enum Backing {
    Finite(PointedSystem),
    Gen(GenSystem),
    /// A finite stretch of levels in text form; deeper levels are unknown.
    Prefix { label: String, levels: Vec<String> },
}

pub struct OmegaBranch {
    backing: Backing,
    // (arena session, levels 0..len)
    cache: Mutex<(u64, Vec<Elem>)>,
}

impl Clone for OmegaBranch {
    fn clone(&self) -> Self {
        OmegaBranch::new(self.backing.clone())
    }
}

impl fmt::Debug for OmegaBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OmegaBranch({})", self.label())
    }
}

impl OmegaBranch {
    fn new(backing: Backing) -> Self {
        OmegaBranch { backing, cache: Mutex::new((0, Vec::new())) }
    }

    pub fn from_prefix(label: impl Into<String>, arena: &Arena, levels: &[Elem]) -> Self {
        let levels = levels.iter().map(|&e| arena.display(e)).collect();
        OmegaBranch::new(Backing::Prefix { label: label.into(), levels })
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn label(&self) -> String {
        match &self.backing {
            Backing::Finite(x) => x.system().name(x.root()).to_string(),
            Backing::Gen(g) => g.label(),
            Backing::Prefix { label, .. } => label.clone(),
        }
    }

    pub fn finite(&self) -> Option<&PointedSystem> {
        match &self.backing {
            Backing::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Deepest level that can be computed, if bounded.
    pub fn max_depth(&self) -> Option<usize> {
        match &self.backing {
            Backing::Prefix { levels, .. } => levels.len().checked_sub(1),
            Backing::Gen(g) => g.generator().max_depth(),
            Backing::Finite(_) => None,
        }
    }

    /// Levels `b_0 ..= b_n`.
    pub fn prefix(&self, arena: &mut Arena, n: usize) -> Result<Vec<Elem>> {
        let mut cache = self.cache.lock().expect("branch cache poisoned");
        if cache.0 != arena.session() {
            *cache = (arena.session(), Vec::new());
        }
        if cache.1.len() <= n {
            cache.1 = match &self.backing {
                Backing::Finite(x) => arena.project_prefix(x, n),
                Backing::Gen(g) => (0..=n).map(|k| arena.project_gen(g, k)).collect::<Result<_>>()?,
                Backing::Prefix { label, levels } => {
                    if n >= levels.len() {
                        return Err(Error::DepthUnsupported { system: label.clone(), depth: n });
                    }
                    levels[..=n].iter().map(|t| arena.parse(t)).collect::<Result<_>>()?
                }
            };
        }
        Ok(cache.1[..=n].to_vec())
    }

    pub fn level(&self, arena: &mut Arena, n: usize) -> Result<Elem> {
        Ok(self.prefix(arena, n)?[n])
    }

    /// Level strings `b_0 ..= b_depth`.
    pub fn display(&self, arena: &mut Arena, depth: usize) -> Result<Vec<String>> {
        Ok(self.prefix(arena, depth)?.into_iter().map(|e| arena.display(e)).collect())
    }

    /// Whether `connect(b_{n+1}, n) = b_n` for all `n < depth`.
    pub fn is_coherent(&self, arena: &mut Arena, depth: usize) -> Result<bool> {
        let levels = self.prefix(arena, depth)?;
        for n in 0..depth {
            if arena.connect(levels[n + 1], n)? != levels[n] {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The full branch of projections of `x`.
pub fn branch_of(x: impl Into<AnySystem>) -> OmegaBranch {
    match x.into() {
        AnySystem::Finite(p) => OmegaBranch::new(Backing::Finite(p)),
        AnySystem::Gen(g) => OmegaBranch::new(Backing::Gen(g)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "depth")]
pub enum BranchVerdict {
    /// Decided equal (both backings finite and bisimilar).
    Equal,
    /// Equal at every level through the given depth; nothing beyond.
    EqualUpTo(usize),
    /// Levels agree below and differ at the given index.
    DistinguishedAt(usize),
}

impl BranchVerdict {
    pub fn decided(self) -> Option<bool> {
        match self {
            BranchVerdict::Equal => Some(true),
            BranchVerdict::DistinguishedAt(_) => Some(false),
            BranchVerdict::EqualUpTo(_) => None,
        }
    }
}

/// Equality of full branches. Exact when both backings are finite;
/// otherwise compared levelwise through `depth`.
pub fn branch_eq(arena: &mut Arena, b: &OmegaBranch, c: &OmegaBranch, depth: usize) -> Result<BranchVerdict> {
    if let (Some(x), Some(y)) = (b.finite(), c.finite()) {
        return Ok(match sim_level(x, y).level {
            Level::Infinite => BranchVerdict::Equal,
            Level::Finite(k) => BranchVerdict::DistinguishedAt(k),
        });
    }
    let limit = [Some(depth), b.max_depth(), c.max_depth()].into_iter().flatten().min().unwrap_or(depth);
    let lb = b.prefix(arena, limit)?;
    let lc = c.prefix(arena, limit)?;
    Ok(match (0..=limit).find(|&k| lb[k] != lc[k]) {
        Some(k) => BranchVerdict::DistinguishedAt(k),
        None => BranchVerdict::EqualUpTo(limit),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "depth")]
pub enum Probe {
    ConsistentUpTo(usize),
    FailsAt(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SuccVerdict {
    pub probe: Probe,
    /// Set when the answer is decided, not just probed.
    pub exact: Option<bool>,
}

/// Whether `a ~>_omega b`: `b_j ∈ a_{j+1}` for all `j < depth`, decided
/// exactly when `a` has a finite backing.
pub fn succ_check(arena: &mut Arena, a: &OmegaBranch, b: &OmegaBranch, depth: usize) -> Result<SuccVerdict> {
    assert!(depth >= 1, "succ_check needs depth >= 1");
    let la = a.prefix(arena, depth)?;
    let lb = b.prefix(arena, depth - 1)?;
    let probe = match (0..depth).find(|&j| !arena.children(la[j + 1]).contains(&lb[j])) {
        Some(j) => Probe::FailsAt(j),
        None => Probe::ConsistentUpTo(depth),
    };
    let exact = match a.finite() {
        Some(x) => {
            let mut any_undecided = false;
            let mut found = false;
            for y in x.successors() {
                match branch_eq(arena, &branch_of(y), b, depth)?.decided() {
                    Some(true) => {
                        found = true;
                        break;
                    }
                    Some(false) => {}
                    None => any_undecided = true,
                }
            }
            if found {
                Some(true)
            } else if any_undecided {
                None
            } else {
                Some(false)
            }
        }
        None => None,
    };
    Ok(SuccVerdict { probe, exact })
}

/// The successors of a finite-backed branch: one branch per successor of
/// the backing, without repetition.
pub fn exact_successors(x: &PointedSystem) -> Vec<OmegaBranch> {
    let mut out: Vec<PointedSystem> = Vec::new();
    for y in x.successors() {
        if !out.iter().any(|z| sim_level(z, &y).level == Level::Infinite) {
            out.push(y);
        }
    }
    out.into_iter().map(branch_of).collect()
}

/// A finite set of full branches: an element of the level above omega.
#[derive(Clone, Debug)]
pub struct BranchSet {
    members: Vec<OmegaBranch>,
    /// `None` when every duplicate was removed exactly; otherwise the depth
    /// through which kept members are known to differ.
    dedup_depth: Option<usize>,
}

impl BranchSet {
    pub fn new(arena: &mut Arena, branches: impl IntoIterator<Item = OmegaBranch>, depth: usize) -> Result<Self> {
        let mut members: Vec<OmegaBranch> = Vec::new();
        let mut dedup_depth = None;
        'next: for b in branches {
            for m in &members {
                match branch_eq(arena, m, &b, depth)? {
                    BranchVerdict::Equal => continue 'next,
                    BranchVerdict::EqualUpTo(d) => {
                        dedup_depth = Some(d);
                        continue 'next;
                    }
                    BranchVerdict::DistinguishedAt(_) => {}
                }
            }
            members.push(b);
        }
        Ok(BranchSet { members, dedup_depth })
    }

    pub fn members(&self) -> &[OmegaBranch] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dedup_depth(&self) -> Option<usize> {
        self.dedup_depth
    }

    /// Same members, decided exactly for finite backings.
    pub fn same_members(&self, arena: &mut Arena, other: &BranchSet, depth: usize) -> Result<bool> {
        if self.len() != other.len() {
            return Ok(false);
        }
        for m in &self.members {
            let mut hit = false;
            for o in &other.members {
                if branch_eq(arena, m, o, depth)?.decided() != Some(false) {
                    hit = true;
                    break;
                }
            }
            if !hit {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The range of `set` through levels `0..=depth`: level `i` is `{b_i}`.
pub fn range(arena: &mut Arena, set: &BranchSet, depth: usize) -> Result<Channel<Elem>> {
    let mut levels = vec![BTreeSet::new(); depth + 1];
    for b in set.members() {
        for (i, e) in b.prefix(arena, depth)?.into_iter().enumerate() {
            levels[i].insert(e);
        }
    }
    Ok(Channel { index: Index::Omega, levels })
}

/// Channel of the successors of `x`'s branch through levels `0..=depth`:
/// level `n` is the member set of `p_{n+1}(x)`.
pub fn successor_channel(arena: &mut Arena, x: &AnySystem, depth: usize) -> Result<Channel<Elem>> {
    let levels = (0..=depth)
        .map(|n| {
            let p = arena.project_any(x, n + 1)?;
            Ok(arena.children(p).iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    Ok(Channel { index: Index::Omega, levels })
}

/// König extraction from the range of a branch set. The probe depth is
/// raised until it separates every pair of members, so the extracted
/// prefix pins down exactly one member, which is returned.
pub fn konig_extract_range(arena: &mut Arena, set: &BranchSet, depth: usize) -> Result<OmegaBranch> {
    if set.is_empty() {
        return Err(Error::EmptyChannel { level: 0 });
    }
    let mut probe = depth;
    let members = set.members();
    for (k, b) in members.iter().enumerate() {
        for c in &members[k + 1..] {
            if let BranchVerdict::DistinguishedAt(d) = branch_eq(arena, b, c, depth)? {
                probe = probe.max(d);
            }
        }
    }
    let channel = range(arena, set, probe)?;
    let picked = extract_branch(arena, &channel)?;
    for b in members {
        if b.prefix(arena, probe)? == picked {
            return Ok(b.clone());
        }
    }
    Err(Error::NotAChannel("extracted prefix matches no member".into()))
}

/// König extraction from the successor channel of `x`, returned as a branch
/// known through `depth`. Choices are made against level `depth + 1`.
pub fn konig_extract_successors(arena: &mut Arena, x: &AnySystem, depth: usize) -> Result<OmegaBranch> {
    let channel = successor_channel(arena, x, depth + 1)?;
    let mut picked = extract_branch(arena, &channel)?;
    picked.truncate(depth + 1);
    Ok(OmegaBranch::from_prefix(format!("konig({})", x.label()), arena, &picked))
}

/// Whether every state reachable in fewer than `depth` steps has finitely
/// many successors. Generated systems are probed: a state counts as
/// infinitely branching when it enumerates more than `probe` successors and
/// its cover keeps growing between depths `probe` and `2 * probe`.
pub fn branching_at_depth(x: &AnySystem, depth: usize, probe: usize) -> bool {
    let g = match x {
        AnySystem::Finite(_) => return true,
        AnySystem::Gen(g) => g,
    };
    let mut frontier = vec![g.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for s in &frontier {
            let enumerated = s.enumerate().take(probe + 1).count();
            if enumerated > probe && s.cover(probe).len() != s.cover(2 * probe).len() {
                return false;
            }
            next.extend(s.enumerate().take(probe));
        }
        frontier = next;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{dead, parent, von_neumann, von_omega, von_omega_wrapped, von_set, zermelo};

    #[test]
    fn dead_branch_is_zero() {
        let mut arena = Arena::new();
        let b = branch_of(dead());
        for n in 0..=6 {
            let z = arena.zero(n);
            assert_eq!(b.level(&mut arena, n).unwrap(), z);
        }
    }

    #[test]
    fn von_omega_branch_matches_finite_ordinals() {
        let mut arena = Arena::new();
        let w = branch_of(von_omega());
        for n in 0..=6 {
            let p = arena.project(&von_neumann(n), n);
            assert_eq!(w.level(&mut arena, n).unwrap(), p);
        }
        assert!(w.is_coherent(&mut arena, 12).unwrap());
    }

    #[test]
    fn branch_equality() {
        let mut arena = Arena::new();
        let v3 = branch_of(von_neumann(3));
        let vs = branch_of(von_set(&BTreeSet::from([0, 1, 2])));
        assert_eq!(branch_eq(&mut arena, &v3, &vs, 12).unwrap(), BranchVerdict::Equal);
        let v2 = branch_of(von_neumann(2));
        assert_eq!(branch_eq(&mut arena, &v2, &v3, 12).unwrap(), BranchVerdict::DistinguishedAt(3));
        let w = branch_of(von_omega());
        assert_eq!(branch_eq(&mut arena, &w, &w, 12).unwrap(), BranchVerdict::EqualUpTo(12));
        let v5 = branch_of(von_neumann(5));
        assert_eq!(branch_eq(&mut arena, &w, &v5, 12).unwrap(), BranchVerdict::DistinguishedAt(6));
    }

    #[test]
    fn succ_check_examples() {
        let mut arena = Arena::new();
        let w = branch_of(von_omega());
        let v5 = branch_of(von_neumann(5));
        let r = succ_check(&mut arena, &w, &v5, 12).unwrap();
        assert_eq!(r.probe, Probe::ConsistentUpTo(12));
        assert_eq!(r.exact, None);
        let d = branch_of(dead());
        let r = succ_check(&mut arena, &d, &v5, 1).unwrap();
        assert_eq!(r.probe, Probe::FailsAt(0));
        assert_eq!(r.exact, Some(false));
        let v4 = von_neumann(4);
        for y in v4.successors() {
            let r = succ_check(&mut arena, &branch_of(v4.clone()), &branch_of(y), 8).unwrap();
            assert_eq!(r.exact, Some(true));
        }
        let r = succ_check(&mut arena, &branch_of(v4), &branch_of(von_neumann(4)), 8).unwrap();
        assert_eq!(r.exact, Some(false));
        assert_eq!(r.probe, Probe::FailsAt(4));
    }

    #[test]
    fn unique_successor() {
        let x = zermelo(4);
        let succ = exact_successors(&x);
        assert_eq!(succ.len(), 1);
        assert!(crate::bisim::bisimilar(succ[0].finite().unwrap(), &zermelo(3)));
        let dup = parent(&[zermelo(2), zermelo(2), von_neumann(1)]);
        assert_eq!(exact_successors(&dup).len(), 2);
    }

    #[test]
    fn range_of_small_ordinals() {
        let mut arena = Arena::new();
        let set = BranchSet::new(&mut arena, [branch_of(von_neumann(0)), branch_of(von_neumann(1))], 12).unwrap();
        let ch = range(&mut arena, &set, 3).unwrap();
        let shown: Vec<BTreeSet<String>> =
            ch.levels.iter().map(|l| l.iter().map(|&e| arena.display(e)).collect()).collect();
        assert_eq!(shown[0], BTreeSet::from(["()".to_string()]));
        assert_eq!(shown[1], BTreeSet::from(["{}@1".to_string(), "{()}@1".to_string()]));
        assert_eq!(shown[2], BTreeSet::from(["{}@2".to_string(), "{{}}@2".to_string()]));
        assert_eq!(shown[3], BTreeSet::from(["{}@3".to_string(), "{{}}@3".to_string()]));
        ch.check_laws(&mut arena).unwrap();
        let dead_only = BranchSet::new(&mut arena, [branch_of(dead())], 12).unwrap();
        let ch = range(&mut arena, &dead_only, 4).unwrap();
        for (i, level) in ch.levels.iter().enumerate() {
            let z = arena.zero(i);
            assert_eq!(level, &BTreeSet::from([z]));
        }
    }

    #[test]
    fn branch_sets_deduplicate() {
        let mut arena = Arena::new();
        let set = BranchSet::new(
            &mut arena,
            [branch_of(zermelo(1)), branch_of(von_neumann(1)), branch_of(zermelo(0)), branch_of(dead())],
            12,
        )
        .unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.dedup_depth(), None);
    }

    #[test]
    fn konig_examples() {
        let mut arena = Arena::new();
        let single = BranchSet::new(&mut arena, [branch_of(von_neumann(2))], 12).unwrap();
        let got = konig_extract_range(&mut arena, &single, 12).unwrap();
        assert_eq!(branch_eq(&mut arena, &got, &branch_of(von_neumann(2)), 12).unwrap(), BranchVerdict::Equal);
        let pair = BranchSet::new(&mut arena, [branch_of(von_neumann(0)), branch_of(von_neumann(1))], 12).unwrap();
        let got = konig_extract_range(&mut arena, &pair, 4).unwrap();
        assert!(pair.members().iter().any(|m| branch_eq(&mut arena, m, &got, 4).unwrap() == BranchVerdict::Equal));
        let w: AnySystem = von_omega().into();
        let got = konig_extract_successors(&mut arena, &w, 12).unwrap();
        assert_eq!(branch_eq(&mut arena, &got, &branch_of(von_omega()), 12).unwrap(), BranchVerdict::EqualUpTo(12));
        let d: AnySystem = dead().into();
        assert_eq!(konig_extract_successors(&mut arena, &d, 3).unwrap_err(), Error::EmptyChannel { level: 0 });
        let empty = BranchSet::new(&mut arena, [], 12).unwrap();
        assert!(matches!(konig_extract_range(&mut arena, &empty, 3), Err(Error::EmptyChannel { .. })));
    }

    #[test]
    fn branching_probes() {
        assert!(branching_at_depth(&von_neumann(5).into(), 10, 64));
        assert!(!branching_at_depth(&von_omega().into(), 1, 64));
        let wrapped: AnySystem = von_omega_wrapped(1).into();
        assert!(branching_at_depth(&wrapped, 1, 64));
        assert!(!branching_at_depth(&wrapped, 2, 64));
        assert!(branching_at_depth(&von_omega().into(), 0, 64));
    }

    #[test]
    fn prefix_branches_are_bounded() {
        let mut arena = Arena::new();
        let w: AnySystem = von_omega().into();
        let got = konig_extract_successors(&mut arena, &w, 5).unwrap();
        assert_eq!(got.max_depth(), Some(5));
        assert!(matches!(got.level(&mut arena, 6), Err(Error::DepthUnsupported { .. })));
        assert!(got.is_coherent(&mut arena, 5).unwrap());
    }
}
