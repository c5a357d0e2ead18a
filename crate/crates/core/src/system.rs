//! Finite and finitely presented pointed transition systems.
//!
//! A [`FinSystem`] is an unlabelled transition system over `0..len` whose
//! successor lists never repeat a state. [`PointedSystem`] picks a root in a
//! shared system, so moving to a successor is just a change of root.
//! [`GenSystem`] covers the infinitely branching case through a
//! [`Generator`] that, besides enumerating successors, hands out a finite
//! cover of them that is exact up to a given approximant.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StateId = usize;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FinSystem {
    names: Vec<String>,
    succ: Vec<Vec<StateId>>,
}

impl FinSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a system from parallel name and successor tables, validating
    /// membership and the no-repetition rule.
    pub fn from_parts(names: Vec<String>, succ: Vec<Vec<StateId>>) -> Result<Self> {
        if names.len() != succ.len() {
            return Err(Error::InvalidSystem(format!(
                "{} names for {} successor lists",
                names.len(),
                succ.len()
            )));
        }
        let mut sys = FinSystem { names, succ: vec![Vec::new(); succ.len()] };
        for (s, list) in succ.into_iter().enumerate() {
            sys.set_successors(s, list)?;
        }
        Ok(sys)
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> StateId {
        self.names.push(name.into());
        self.succ.push(Vec::new());
        self.names.len() - 1
    }

    pub fn set_successors(&mut self, s: StateId, list: Vec<StateId>) -> Result<()> {
        let n = self.len();
        if s >= n {
            return Err(Error::InvalidSystem(format!("unknown state {s}")));
        }
        let mut seen = HashSet::with_capacity(list.len());
        for &t in &list {
            if t >= n {
                return Err(Error::InvalidSystem(format!(
                    "successor {t} of {} is not a state",
                    self.names[s]
                )));
            }
            if !seen.insert(t) {
                return Err(Error::InvalidSystem(format!(
                    "state {} lists successor {} twice",
                    self.names[s], self.names[t]
                )));
            }
        }
        self.succ[s] = list;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    pub fn successors(&self, s: StateId) -> &[StateId] {
        &self.succ[s]
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn states(&self) -> std::ops::Range<StateId> {
        0..self.len()
    }

    pub fn transition_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// Copies `other` into `self` and returns the offset of its first state.
    pub fn absorb(&mut self, other: &FinSystem, prefix: &str) -> StateId {
        let offset = self.len();
        for s in other.states() {
            self.names.push(format!("{prefix}{}", other.names[s]));
            self.succ.push(other.succ[s].iter().map(|t| t + offset).collect());
        }
        offset
    }

    /// Disjoint union; states of `other` are shifted by the returned offset.
    pub fn disjoint_union(&self, other: &FinSystem) -> (FinSystem, StateId) {
        let mut out = FinSystem::new();
        out.absorb(self, "l.");
        let offset = out.absorb(other, "r.");
        (out, offset)
    }
}

#[derive(Clone, Debug)]
pub struct PointedSystem {
    sys: Arc<FinSystem>,
    root: StateId,
}

impl PointedSystem {
    pub fn new(sys: FinSystem, root: StateId) -> Result<Self> {
        Self::shared(Arc::new(sys), root)
    }

    pub fn shared(sys: Arc<FinSystem>, root: StateId) -> Result<Self> {
        if root >= sys.len() {
            return Err(Error::InvalidSystem(format!("root {root} is not a state")));
        }
        Ok(PointedSystem { sys, root })
    }

    pub fn system(&self) -> &FinSystem {
        &self.sys
    }

    pub fn shared_system(&self) -> &Arc<FinSystem> {
        &self.sys
    }

    pub fn root(&self) -> StateId {
        self.root
    }

    /// The same system pointed at `s`.
    pub fn at(&self, s: StateId) -> PointedSystem {
        assert!(s < self.sys.len(), "state {s} out of range");
        PointedSystem { sys: Arc::clone(&self.sys), root: s }
    }

    pub fn successors(&self) -> impl Iterator<Item = PointedSystem> + '_ {
        self.sys.successors(self.root).iter().map(|&s| self.at(s))
    }

    pub fn out_degree(&self) -> usize {
        self.sys.successors(self.root).len()
    }

    /// Restriction to the states reachable from the root, renumbered in
    /// breadth-first order so the root becomes state 0.
    pub fn reachable(&self) -> PointedSystem {
        let mut index = BTreeMap::new();
        let mut order = vec![self.root];
        index.insert(self.root, 0usize);
        let mut head = 0;
        while head < order.len() {
            let s = order[head];
            head += 1;
            for &t in self.sys.successors(s) {
                if let std::collections::btree_map::Entry::Vacant(slot) = index.entry(t) {
                    slot.insert(order.len());
                    order.push(t);
                }
            }
        }
        let names = order.iter().map(|&s| self.sys.name(s).to_string()).collect();
        let succ = order
            .iter()
            .map(|&s| self.sys.successors(s).iter().map(|t| index[t]).collect())
            .collect();
        PointedSystem { sys: Arc::new(FinSystem { names, succ }), root: 0 }
    }

    pub fn to_json(&self) -> SystemJson {
        let states: Vec<String> = self.sys.names.clone();
        let succ = self
            .sys
            .states()
            .map(|s| {
                let list = self.sys.successors(s).iter().map(|&t| states[t].clone()).collect();
                (states[s].clone(), list)
            })
            .collect();
        SystemJson { states: states.clone(), succ, root: states[self.root].clone() }
    }

    pub fn from_json(doc: &SystemJson) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, name) in doc.states.iter().enumerate() {
            if index.insert(name.as_str(), i).is_some() {
                return Err(Error::InvalidSystem(format!("state {name} declared twice")));
            }
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::InvalidSystem(format!("unknown state {name}")))
        };
        let mut succ = vec![Vec::new(); doc.states.len()];
        for (from, targets) in &doc.succ {
            let s = lookup(from)?;
            succ[s] = targets.iter().map(|t| lookup(t)).collect::<Result<_>>()?;
        }
        let root = lookup(&doc.root)?;
        PointedSystem::new(FinSystem::from_parts(doc.states.clone(), succ)?, root)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: SystemJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&doc)
    }
}

/// Wire form: `{"states":[...],"succ":{"s0":[...]},"root":"s0"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemJson {
    pub states: Vec<String>,
    #[serde(default)]
    pub succ: BTreeMap<String, Vec<String>>,
    pub root: String,
}

/// A pointed system whose root has one successor per child, each the root
/// of a fresh copy of that child's reachable part.
pub fn parent(children: &[PointedSystem]) -> PointedSystem {
    let mut sys = FinSystem::new();
    let root = sys.add_state("root");
    let mut roots = Vec::with_capacity(children.len());
    for (i, child) in children.iter().enumerate() {
        let part = child.reachable();
        let offset = sys.absorb(part.system(), &format!("c{i}."));
        roots.push(offset + part.root());
    }
    sys.set_successors(root, roots).expect("fresh copies are distinct");
    PointedSystem::new(sys, root).expect("root exists")
}

/// The von Neumann ordinal `i` with shared states: `k` has successors `0..k`.
pub fn von_neumann(i: usize) -> PointedSystem {
    let names = (0..=i).map(|k| format!("v{k}")).collect();
    let succ = (0..=i).map(|k| (0..k).collect()).collect();
    PointedSystem::new(FinSystem::from_parts(names, succ).unwrap(), i).unwrap()
}

/// The von Neumann ordinal built literally as iterated parents
/// (`2^i` states).
pub fn von_neumann_naive(i: usize) -> PointedSystem {
    let children: Vec<_> = (0..i).map(von_neumann_naive).collect();
    parent(&children)
}

/// A parent of `(v_j)_{j in set}`, sharing the ordinal states.
pub fn von_set(set: &BTreeSet<usize>) -> PointedSystem {
    let top = set.iter().next_back().map_or(0, |m| m + 1);
    let mut names: Vec<String> = (0..top).map(|k| format!("v{k}")).collect();
    let mut succ: Vec<Vec<StateId>> = (0..top).map(|k| (0..k).collect()).collect();
    names.push(format!("vset{}", fmt_set(set)));
    succ.push(set.iter().copied().collect());
    PointedSystem::new(FinSystem::from_parts(names, succ).unwrap(), top).unwrap()
}

/// Zermelo numeral: a chain `m -> m-1 -> ... -> 0`.
pub fn zermelo(m: usize) -> PointedSystem {
    let names = (0..=m).map(|k| format!("z{k}")).collect();
    let succ = (0..=m).map(|k| if k == 0 { vec![] } else { vec![k - 1] }).collect();
    PointedSystem::new(FinSystem::from_parts(names, succ).unwrap(), m).unwrap()
}

pub fn dead() -> PointedSystem {
    von_neumann(0)
}

pub(crate) fn fmt_set(set: &BTreeSet<usize>) -> String {
    let items: Vec<String> = set.iter().map(|k| k.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

pub type GenState = u64;

/// An infinitely branching system presented by enumeration plus finite
/// covers: every successor of `s` must be `~_depth` to a member of
/// `cover(s, depth)`.
pub trait Generator: fmt::Debug + Send + Sync {
    fn successors<'a>(&'a self, s: GenState) -> Box<dyn Iterator<Item = GenState> + 'a>;
    fn cover(&self, s: GenState, depth: usize) -> Vec<GenState>;
    fn label(&self, s: GenState) -> String;
    /// Largest depth at which `cover` is sound, if bounded.
    fn max_depth(&self) -> Option<usize> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct GenSystem {
    generator: Arc<dyn Generator>,
    root: GenState,
}

impl GenSystem {
    pub fn new(generator: Arc<dyn Generator>, root: GenState) -> Self {
        GenSystem { generator, root }
    }

    pub fn root(&self) -> GenState {
        self.root
    }

    pub fn generator(&self) -> &dyn Generator {
        &*self.generator
    }

    pub fn at(&self, s: GenState) -> GenSystem {
        GenSystem { generator: Arc::clone(&self.generator), root: s }
    }

    pub fn label(&self) -> String {
        self.generator.label(self.root)
    }

    pub fn cover(&self, depth: usize) -> Vec<GenSystem> {
        self.generator.cover(self.root, depth).into_iter().map(|s| self.at(s)).collect()
    }

    pub fn enumerate(&self) -> impl Iterator<Item = GenSystem> + '_ {
        self.generator.successors(self.root).map(|s| self.at(s))
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        match self.generator.max_depth() {
            Some(max) if depth > max => {
                Err(Error::DepthUnsupported { system: self.label(), depth })
            }
            _ => Ok(()),
        }
    }
}

/// `v_omega`, optionally wrapped in `wraps` singleton parents.
#[derive(Debug, Clone, Copy)]
pub struct VonOmega {
    wraps: u64,
}

const OMEGA: GenState = u64::MAX;

impl VonOmega {
    fn is_finite(s: GenState) -> bool {
        s < OMEGA - 64
    }
}

impl Generator for VonOmega {
    fn successors<'a>(&'a self, s: GenState) -> Box<dyn Iterator<Item = GenState> + 'a> {
        if s == OMEGA {
            Box::new(0..)
        } else if Self::is_finite(s) {
            Box::new(0..s)
        } else {
            Box::new(std::iter::once(s + 1))
        }
    }

    fn cover(&self, s: GenState, depth: usize) -> Vec<GenState> {
        if s == OMEGA {
            (0..=depth as GenState).collect()
        } else {
            self.successors(s).collect()
        }
    }

    fn label(&self, s: GenState) -> String {
        if s == OMEGA {
            "vomega".into()
        } else if Self::is_finite(s) {
            format!("v{s}")
        } else {
            format!("{{^{}}}vomega", OMEGA - s)
        }
    }
}

pub fn von_omega() -> GenSystem {
    von_omega_wrapped(0)
}

/// `{-}^wraps v_omega`: a chain of `wraps` single-successor states above
/// `v_omega`.
pub fn von_omega_wrapped(wraps: usize) -> GenSystem {
    assert!(wraps < 64, "at most 63 wrapping layers");
    let wraps = wraps as u64;
    GenSystem::new(Arc::new(VonOmega { wraps }), OMEGA - wraps)
}

impl VonOmega {
    pub fn wraps(&self) -> u64 {
        self.wraps
    }
}

/// Either kind of pointed system.
#[derive(Clone, Debug)]
pub enum AnySystem {
    Finite(PointedSystem),
    Gen(GenSystem),
}

impl From<PointedSystem> for AnySystem {
    fn from(x: PointedSystem) -> Self {
        AnySystem::Finite(x)
    }
}

impl From<GenSystem> for AnySystem {
    fn from(x: GenSystem) -> Self {
        AnySystem::Gen(x)
    }
}

impl AnySystem {
    pub fn label(&self) -> String {
        match self {
            AnySystem::Finite(x) => x.system().name(x.root()).to_string(),
            AnySystem::Gen(g) => g.label(),
        }
    }
}

/// Resolves a builtin name: `dead`, `v<k>`, `z<k>`, `vset:{a,b,...}`,
/// `vomega`.
pub fn builtin(name: &str) -> Result<AnySystem> {
    let name = name.trim();
    let bad = || Error::Parse(format!("unknown builtin system `{name}`"));
    if name == "dead" {
        return Ok(dead().into());
    }
    if name == "vomega" {
        return Ok(von_omega().into());
    }
    if let Some(body) = name.strip_prefix("vset:") {
        let inner = body
            .trim()
            .strip_prefix('{')
            .and_then(|b| b.strip_suffix('}'))
            .ok_or_else(bad)?;
        let set = inner
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<BTreeSet<_>>>()?;
        return Ok(von_set(&set).into());
    }
    let number = |rest: &str| rest.parse::<usize>().map_err(|_| bad());
    if let Some(rest) = name.strip_prefix('v') {
        return Ok(von_neumann(number(rest)?).into());
    }
    if let Some(rest) = name.strip_prefix('z') {
        return Ok(zermelo(number(rest)?).into());
    }
    Err(bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parent_of_nothing_is_dead() {
        let p = parent(&[]);
        assert_eq!(p.system().len(), 1);
        assert_eq!(p.out_degree(), 0);
    }

    #[test]
    fn parent_of_dead_is_two_states() {
        let p = parent(&[parent(&[])]);
        assert_eq!(p.system().len(), 2);
        assert_eq!(p.out_degree(), 1);
        let child = p.successors().next().unwrap();
        assert_eq!(child.out_degree(), 0);
    }

    #[test]
    fn parent_copies_repeated_children_disjointly() {
        let x = von_neumann(2);
        let p = parent(&[x.clone(), x]);
        let succ = p.system().successors(p.root());
        assert_eq!(succ.len(), 2);
        assert_ne!(succ[0], succ[1]);
        assert_eq!(p.system().len(), 1 + 2 * 3);
    }

    #[test]
    fn ordinals_have_expected_shapes() {
        assert_eq!(von_neumann(0).out_degree(), 0);
        let v3 = von_neumann(3);
        assert_eq!(v3.out_degree(), 3);
        assert_eq!(v3.system().len(), 4);
        assert_eq!(von_neumann_naive(3).system().len(), 8);
        assert_eq!(von_neumann_naive(4).system().len(), 16);
        let z = zermelo(3);
        assert_eq!(z.system().len(), 4);
        assert!(z.system().states().all(|s| z.system().successors(s).len() <= 1));
        assert_eq!(zermelo(0).out_degree(), 0);
        let vs = von_set(&BTreeSet::from([0, 2]));
        assert_eq!(vs.out_degree(), 2);
        assert_eq!(von_set(&BTreeSet::new()).out_degree(), 0);
    }

    #[test]
    fn duplicate_successors_rejected() {
        let doc = r#"{"states":["a","b"],"succ":{"a":["b","b"]},"root":"a"}"#;
        assert!(matches!(PointedSystem::parse_json(doc), Err(Error::InvalidSystem(_))));
    }

    #[test]
    fn unknown_states_rejected() {
        let doc = r#"{"states":["a"],"succ":{"a":["b"]},"root":"a"}"#;
        assert!(PointedSystem::parse_json(doc).is_err());
        let doc = r#"{"states":["a"],"succ":{},"root":"q"}"#;
        assert!(PointedSystem::parse_json(doc).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x = von_set(&BTreeSet::from([1, 3]));
        let text = serde_json::to_string(&x.to_json()).unwrap();
        let y = PointedSystem::parse_json(&text).unwrap();
        assert_eq!(x.system(), y.system());
        assert_eq!(x.root(), y.root());
    }

    #[test]
    fn reachable_drops_unreachable_states() {
        let v4 = von_neumann(4);
        let v2 = v4.at(2).reachable();
        assert_eq!(v2.system().len(), 3);
        assert_eq!(v2.root(), 0);
    }

    #[test]
    fn von_omega_cover_and_enumeration() {
        let w = von_omega();
        let cover: Vec<_> = w.cover(3).iter().map(GenSystem::label).collect();
        assert_eq!(cover, ["v0", "v1", "v2", "v3"]);
        let first: Vec<_> = w.enumerate().take(5).map(|g| g.label()).collect();
        assert_eq!(first, ["v0", "v1", "v2", "v3", "v4"]);
        let wrapped = von_omega_wrapped(2);
        let inner: Vec<_> = wrapped.enumerate().collect();
        assert_eq!(inner.len(), 1);
        assert_eq!(inner[0].enumerate().next().unwrap().label(), "vomega");
    }

    #[test]
    fn builtins_resolve() {
        assert!(matches!(builtin("v3"), Ok(AnySystem::Finite(x)) if x.out_degree() == 3));
        assert!(matches!(builtin("z2"), Ok(AnySystem::Finite(x)) if x.out_degree() == 1));
        assert!(matches!(builtin("vset:{0,2}"), Ok(AnySystem::Finite(x)) if x.out_degree() == 2));
        assert!(matches!(builtin("vset:{}"), Ok(AnySystem::Finite(x)) if x.out_degree() == 0));
        assert!(matches!(builtin("vomega"), Ok(AnySystem::Gen(_))));
        assert!(matches!(builtin("dead"), Ok(AnySystem::Finite(x)) if x.out_degree() == 0));
        assert!(builtin("w3").is_err());
        assert!(builtin("vx").is_err());
    }
}
