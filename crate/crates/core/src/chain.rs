//! Finite levels of the final chain of the finite powerset functor.
//!
//! Level 0 holds only the root token `()`; level `n + 1` holds the finite
//! sets of level-`n` elements. Elements are hash-consed in an [`Arena`], so
//! within one arena two [`Elem`] handles are equal iff the elements are.
//! Handles from different arenas must not be mixed; compare across arenas
//! through [`Arena::display`] or [`Arena::parse`].

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{AnySystem, FinSystem, GenState, GenSystem, PointedSystem};

/// Highest level that may be enumerated: `|nu_5| = 2^65536`.
pub const MAX_ENUMERABLE_LEVEL: usize = 4;

/// Handle to an interned level element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem(u32);

impl Elem {
    pub fn id(self) -> u32 {
        self.0
    }
}

#[derive(Clone, Debug)]
struct Node {
    level: usize,
    // Empty for the root token; canonical order otherwise.
    children: Vec<Elem>,
}

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

/// Interning table for level elements. One arena is one session: ids are
/// assigned on first interning and stable for the arena's lifetime.
#[derive(Debug)]
pub struct Arena {
    session: u64,
    nodes: Vec<Node>,
    table: HashMap<(usize, Vec<Elem>), Elem>,
    connect_memo: HashMap<(Elem, usize), Elem>,
}

impl Default for Arena {
    fn default() -> Self {
        Self::new()
    }
}

impl Arena {
    pub fn new() -> Self {
        let mut arena = Arena {
            session: NEXT_SESSION.fetch_add(1, AtomicOrdering::Relaxed),
            nodes: Vec::new(),
            table: HashMap::new(),
            connect_memo: HashMap::new(),
        };
        arena.intern(0, Vec::new());
        arena
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    /// Number of distinct elements interned so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn intern(&mut self, level: usize, children: Vec<Elem>) -> Elem {
        if let Some(&e) = self.table.get(&(level, children.clone())) {
            return e;
        }
        let e = Elem(u32::try_from(self.nodes.len()).expect("arena overflow"));
        self.nodes.push(Node { level, children: children.clone() });
        self.table.insert((level, children), e);
        e
    }

    /// The root token `()`, the only element of level 0.
    pub fn root(&self) -> Elem {
        Elem(0)
    }

    pub fn is_root(&self, e: Elem) -> bool {
        e == self.root()
    }

    pub fn level(&self, e: Elem) -> usize {
        self.nodes[e.0 as usize].level
    }

    /// Members of a set element (empty for the root token).
    pub fn children(&self, e: Elem) -> &[Elem] {
        &self.nodes[e.0 as usize].children
    }

    /// Interns the set of `members` at `level`; every member must sit at
    /// `level - 1`.
    pub fn set(&mut self, level: usize, members: impl IntoIterator<Item = Elem>) -> Result<Elem> {
        if level == 0 {
            return Err(Error::Parse("level 0 contains only the root token".into()));
        }
        let mut children: Vec<Elem> = members.into_iter().collect();
        if let Some(&bad) = children.iter().find(|&&c| self.level(c) != level - 1) {
            return Err(Error::Parse(format!(
                "member at level {} inside a level-{level} set",
                self.level(bad)
            )));
        }
        self.canonicalize(&mut children);
        Ok(self.intern(level, children))
    }

    fn canonicalize(&self, children: &mut Vec<Elem>) {
        children.sort_by(|&a, &b| self.compare(a, b));
        children.dedup();
    }

    /// Structural total order: by level, then lexicographically by the
    /// canonically ordered members.
    pub fn compare(&self, a: Elem, b: Elem) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (na, nb) = (&self.nodes[a.0 as usize], &self.nodes[b.0 as usize]);
        na.level.cmp(&nb.level).then_with(|| {
            for (&x, &y) in na.children.iter().zip(&nb.children) {
                match self.compare(x, y) {
                    Ordering::Equal => continue,
                    other => return other,
                }
            }
            na.children.len().cmp(&nb.children.len())
        })
    }

    /// `0(n)`: the root token at level 0, the empty set above.
    pub fn zero(&mut self, n: usize) -> Elem {
        if n == 0 {
            self.root()
        } else {
            self.intern(n, Vec::new())
        }
    }

    /// Connecting map `sigma_{j, level(a)}`.
    pub fn connect(&mut self, a: Elem, j: usize) -> Result<Elem> {
        let i = self.level(a);
        if j > i {
            return Err(Error::IndexOrder { j, i });
        }
        Ok(self.connect_unchecked(a, j))
    }

    fn connect_unchecked(&mut self, a: Elem, j: usize) -> Elem {
        if j == self.level(a) {
            return a;
        }
        if j == 0 {
            return self.root();
        }
        if let Some(&e) = self.connect_memo.get(&(a, j)) {
            return e;
        }
        let members: Vec<Elem> = self.children(a).to_vec();
        let images: Vec<Elem> = members.into_iter().map(|c| self.connect_unchecked(c, j - 1)).collect();
        let mut children = images;
        self.canonicalize(&mut children);
        let e = self.intern(j, children);
        self.connect_memo.insert((a, j), e);
        e
    }

    /// `{-}^m a`.
    pub fn singleton_tower(&mut self, a: Elem, m: usize) -> Result<Elem> {
        let top = self.level(a) + m;
        if top > MAX_ENUMERABLE_LEVEL {
            return Err(Error::LevelTooLarge { level: top, max: MAX_ENUMERABLE_LEVEL });
        }
        let mut e = a;
        for _ in 0..m {
            let next = self.level(e) + 1;
            e = self.intern(next, vec![e]);
        }
        Ok(e)
    }

    /// `a ~>_n b` iff `b` is a member of `a`; defined for `n >= 1`.
    pub fn transition_successors(&self, a: Elem) -> Result<Vec<Elem>> {
        if self.level(a) == 0 {
            return Err(Error::NoPredecessorLevel);
        }
        Ok(self.children(a).to_vec())
    }

    /// Transition successors including the level-0 case `() ~>_0 ()`.
    pub fn transitions(&self, a: Elem) -> Vec<Elem> {
        if self.is_root(a) {
            vec![a]
        } else {
            self.children(a).to_vec()
        }
    }

    /// Every element of `nu_n`, exactly once. Level 4 is streamed.
    pub fn enumerate(&mut self, n: usize) -> Result<LevelStream<'_>> {
        if n > MAX_ENUMERABLE_LEVEL {
            return Err(Error::LevelTooLarge { level: n, max: MAX_ENUMERABLE_LEVEL });
        }
        if n == 0 {
            return Ok(LevelStream { arena: self, level: 0, base: Vec::new(), next: 0, end: 1 });
        }
        let mut base: Vec<Elem> = self.enumerate(n - 1)?.collect();
        self.canonicalize(&mut base);
        let end = 1u64 << base.len();
        Ok(LevelStream { arena: self, level: n, base, next: 0, end })
    }

    pub fn level_elements(&mut self, n: usize) -> Result<Vec<Elem>> {
        Ok(self.enumerate(n)?.collect())
    }

    /// Coalgebra projections `p_n` of every state of `sys`.
    pub fn project_all(&mut self, sys: &FinSystem, n: usize) -> Vec<Elem> {
        let mut current = vec![self.root(); sys.len()];
        for level in 1..=n {
            current = sys
                .states()
                .map(|s| {
                    let mut children: Vec<Elem> =
                        sys.successors(s).iter().map(|&t| current[t]).collect();
                    self.canonicalize(&mut children);
                    self.intern(level, children)
                })
                .collect();
        }
        current
    }

    /// `p_0(x), ..., p_n(x)` for a finite pointed system.
    pub fn project_prefix(&mut self, x: &PointedSystem, n: usize) -> Vec<Elem> {
        let x = x.reachable();
        let sys = x.system();
        let mut out = Vec::with_capacity(n + 1);
        let mut current = vec![self.root(); sys.len()];
        out.push(current[x.root()]);
        for level in 1..=n {
            current = sys
                .states()
                .map(|s| {
                    let mut children: Vec<Elem> =
                        sys.successors(s).iter().map(|&t| current[t]).collect();
                    self.canonicalize(&mut children);
                    self.intern(level, children)
                })
                .collect();
            out.push(current[x.root()]);
        }
        out
    }

    pub fn project(&mut self, x: &PointedSystem, n: usize) -> Elem {
        let x = x.reachable();
        self.project_all(x.system(), n)[x.root()]
    }

    /// `p_n` of a generated system, recursing through `cover(s, n - 1)`.
    pub fn project_gen(&mut self, g: &GenSystem, n: usize) -> Result<Elem> {
        g.check_depth(n)?;
        let mut memo = HashMap::new();
        Ok(self.project_gen_rec(g, g.root(), n, &mut memo))
    }

    fn project_gen_rec(
        &mut self,
        g: &GenSystem,
        s: GenState,
        n: usize,
        memo: &mut HashMap<(GenState, usize), Elem>,
    ) -> Elem {
        if n == 0 {
            return self.root();
        }
        if let Some(&e) = memo.get(&(s, n)) {
            return e;
        }
        let cover = g.generator().cover(s, n - 1);
        let mut children: Vec<Elem> =
            cover.into_iter().map(|t| self.project_gen_rec(g, t, n - 1, memo)).collect();
        self.canonicalize(&mut children);
        let e = self.intern(n, children);
        memo.insert((s, n), e);
        e
    }

    pub fn project_any(&mut self, x: &AnySystem, n: usize) -> Result<Elem> {
        match x {
            AnySystem::Finite(p) => Ok(self.project(p, n)),
            AnySystem::Gen(g) => self.project_gen(g, n),
        }
    }

    /// Probes cover soundness: each of the first `probe` enumerated
    /// successors of the root must be `~_n` (equal `p_n`) to a cover member.
    /// Returns the first offending successor's label.
    pub fn check_cover(&mut self, g: &GenSystem, n: usize, probe: usize) -> Result<Option<String>> {
        let covered: HashSet<Elem> = g
            .cover(n)
            .iter()
            .map(|c| self.project_gen(c, n))
            .collect::<Result<_>>()?;
        let probed: Vec<GenSystem> = g.enumerate().take(probe).collect();
        for y in probed {
            if !covered.contains(&self.project_gen(&y, n)?) {
                return Ok(Some(y.label()));
            }
        }
        Ok(None)
    }

    /// The element as a pointed system: its hereditary members as states,
    /// membership as transitions, plus `() ~> ()`.
    pub fn to_system(&self, a: Elem) -> PointedSystem {
        let mut index: HashMap<Elem, usize> = HashMap::new();
        let mut order = vec![a];
        index.insert(a, 0);
        let mut head = 0;
        while head < order.len() {
            let e = order[head];
            head += 1;
            for &c in self.children(e) {
                if let std::collections::hash_map::Entry::Vacant(v) = index.entry(c) {
                    v.insert(order.len());
                    order.push(c);
                }
            }
        }
        let names = order.iter().map(|&e| self.short_name(e)).collect();
        let succ = order.iter().map(|&e| self.transitions(e).iter().map(|c| index[c]).collect()).collect();
        let sys = FinSystem::from_parts(names, succ).expect("membership lists are duplicate free");
        PointedSystem::new(sys, 0).expect("root is state 0")
    }

    fn short_name(&self, e: Elem) -> String {
        let text = self.display(e);
        if text.len() <= 48 {
            text
        } else {
            format!("#{}@{}", e.0, self.level(e))
        }
    }

    /// Every root token sits at membership depth equal to the level.
    pub fn is_graded(&self, a: Elem) -> bool {
        fn walk(arena: &Arena, e: Elem, remaining: usize) -> bool {
            if arena.is_root(e) {
                return remaining == 0;
            }
            remaining > 0 && arena.children(e).iter().all(|&c| walk(arena, c, remaining - 1))
        }
        walk(self, a, self.level(a))
    }

    /// Text form: `()` or `{...}@n`, members in canonical order.
    pub fn display(&self, e: Elem) -> String {
        let mut out = String::new();
        self.write_bare(e, &mut out);
        if !self.is_root(e) {
            out.push('@');
            out.push_str(&self.level(e).to_string());
        }
        out
    }

    fn write_bare(&self, e: Elem, out: &mut String) {
        if self.is_root(e) {
            out.push_str("()");
            return;
        }
        out.push('{');
        for (k, &c) in self.children(e).iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            self.write_bare(c, out);
        }
        out.push('}');
    }

    /// Parses the text form. The `@n` suffix may be omitted when the
    /// element contains a root token (its depth fixes the level).
    pub fn parse(&mut self, text: &str) -> Result<Elem> {
        let text: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let (body, suffix) = match text.rsplit_once('@') {
            Some((b, s)) => {
                let n = s.parse::<usize>().map_err(|_| Error::Parse(format!("bad level suffix `{s}`")))?;
                (b.to_string(), Some(n))
            }
            None => (text.clone(), None),
        };
        let mut pos = 0;
        let raw = parse_raw(body.as_bytes(), &mut pos)?;
        if pos != body.len() {
            return Err(Error::Parse(format!("trailing input at offset {pos} in `{text}`")));
        }
        let level = match (suffix, raw.root_depth()) {
            (Some(n), _) => n,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Parse(format!("`{text}` needs an explicit @level suffix")))
            }
        };
        self.build_raw(&raw, level)
    }

    fn build_raw(&mut self, raw: &Raw, level: usize) -> Result<Elem> {
        match raw {
            Raw::Root if level == 0 => Ok(self.root()),
            Raw::Root => Err(Error::Parse(format!("() found at level {level}, expected level 0"))),
            Raw::Set(_) if level == 0 => Err(Error::Parse("a set cannot sit at level 0".into())),
            Raw::Set(members) => {
                let children = members
                    .iter()
                    .map(|m| self.build_raw(m, level - 1))
                    .collect::<Result<Vec<_>>>()?;
                self.set(level, children)
            }
        }
    }

    /// Exhaustive injectivity/surjectivity audit of `sigma_{j,i}`.
    pub fn audit(&mut self, j: usize, i: usize) -> Result<AuditReport> {
        if i > MAX_ENUMERABLE_LEVEL {
            return Err(Error::LevelTooLarge { level: i, max: MAX_ENUMERABLE_LEVEL });
        }
        if j > i {
            return Err(Error::IndexOrder { j, i });
        }
        let sources = self.level_elements(i)?;
        let mut preimage: HashMap<Elem, Elem> = HashMap::new();
        let mut collision = None;
        for a in sources {
            let image = self.connect_unchecked(a, j);
            match preimage.get(&image) {
                Some(&first) if collision.is_none() => collision = Some((first, a)),
                Some(_) => {}
                None => {
                    preimage.insert(image, a);
                }
            }
        }
        let missed = self.enumerate(j)?.find(|t| !preimage.contains_key(t));
        Ok(AuditReport {
            j,
            i,
            surjective: missed.is_none(),
            injective: collision.is_none(),
            collision,
            missed,
        })
    }
}

/// Streaming enumeration of one level, as subsets of the level below.
pub struct LevelStream<'a> {
    arena: &'a mut Arena,
    level: usize,
    base: Vec<Elem>,
    next: u64,
    end: u64,
}

impl Iterator for LevelStream<'_> {
    type Item = Elem;

    fn next(&mut self) -> Option<Elem> {
        if self.next >= self.end {
            return None;
        }
        let mask = self.next;
        self.next += 1;
        if self.level == 0 {
            return Some(self.arena.root());
        }
        // `base` is in canonical order, so the subset already is.
        let children: Vec<Elem> = self
            .base
            .iter()
            .enumerate()
            .filter(|(k, _)| mask >> k & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        Some(self.arena.intern(self.level, children))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

/// `t(0) = 1`, `t(n + 1) = 2^t(n)`: the size of level `n`, while it fits.
pub fn level_size(n: usize) -> Option<u128> {
    let mut t: u128 = 1;
    for _ in 0..n {
        t = 1u128.checked_shl(u32::try_from(t).ok()?)?;
    }
    Some(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub j: usize,
    pub i: usize,
    pub surjective: bool,
    pub injective: bool,
    pub collision: Option<(Elem, Elem)>,
    pub missed: Option<Elem>,
}

impl AuditReport {
    /// Re-checks both witnesses against the connecting map.
    pub fn verify(&self, arena: &mut Arena) -> Result<bool> {
        if let Some((a, b)) = self.collision {
            if a == b || arena.connect(a, self.j)? != arena.connect(b, self.j)? {
                return Ok(false);
            }
        }
        if let Some(t) = self.missed {
            for a in arena.level_elements(self.i)? {
                if arena.connect(a, self.j)? == t {
                    return Ok(false);
                }
            }
        }
        Ok(self.injective == self.collision.is_none() && self.surjective == self.missed.is_none())
    }

    pub fn to_json(&self, arena: &Arena) -> AuditJson {
        AuditJson {
            map: (self.j, self.i),
            surjective: self.surjective,
            injective: self.injective,
            collision: self.collision.map(|(a, b)| (arena.display(a), arena.display(b))),
            missed: self.missed.map(|t| arena.display(t)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditJson {
    pub map: (usize, usize),
    pub surjective: bool,
    pub injective: bool,
    pub collision: Option<(String, String)>,
    pub missed: Option<String>,
}

#[derive(Debug)]
enum Raw {
    Root,
    Set(Vec<Raw>),
}

impl Raw {
    fn root_depth(&self) -> Option<usize> {
        match self {
            Raw::Root => Some(0),
            Raw::Set(members) => members.iter().find_map(Raw::root_depth).map(|d| d + 1),
        }
    }
}

fn parse_raw(bytes: &[u8], pos: &mut usize) -> Result<Raw> {
    let err = |pos: usize| Error::Parse(format!("unexpected input at offset {pos}"));
    match bytes.get(*pos) {
        Some(b'(') => {
            if bytes.get(*pos + 1) == Some(&b')') {
                *pos += 2;
                Ok(Raw::Root)
            } else {
                Err(err(*pos + 1))
            }
        }
        Some(b'{') => {
            *pos += 1;
            let mut members = Vec::new();
            if bytes.get(*pos) == Some(&b'}') {
                *pos += 1;
                return Ok(Raw::Set(members));
            }
            loop {
                members.push(parse_raw(bytes, pos)?);
                match bytes.get(*pos) {
                    Some(b',') => *pos += 1,
                    Some(b'}') => {
                        *pos += 1;
                        return Ok(Raw::Set(members));
                    }
                    _ => return Err(err(*pos)),
                }
            }
        }
        _ => Err(err(*pos)),
    }
}

/// Distinct states of `sys` grouped by their level-`n` projection.
pub fn projection_kernel(arena: &mut Arena, sys: &FinSystem, n: usize) -> Vec<usize> {
    let images = arena.project_all(sys, n);
    images.iter().map(|e| e.0 as usize).collect()
}

/// Successor set of `a` as a set of displayed elements, for tests and
/// reports that compare across arenas.
pub fn displayed(arena: &Arena, elems: &[Elem]) -> BTreeSet<String> {
    elems.iter().map(|&e| arena.display(e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisim::bisim_at;
    use crate::system::{dead, von_neumann, von_omega, zermelo};

    #[test]
    fn level_counts() {
        let mut arena = Arena::new();
        let counts: Vec<usize> = (0..=3).map(|n| arena.enumerate(n).unwrap().count()).collect();
        assert_eq!(counts, [1, 2, 4, 16]);
        assert_eq!(level_size(4), Some(65536));
        assert_eq!(level_size(5), None);
        assert!(matches!(arena.enumerate(5), Err(Error::LevelTooLarge { level: 5, .. })));
    }

    #[test]
    fn level_two_elements() {
        let mut arena = Arena::new();
        let shown: Vec<String> =
            arena.level_elements(2).unwrap().iter().map(|&e| arena.display(e)).collect();
        assert_eq!(shown, ["{}@2", "{{}}@2", "{{()}}@2", "{{},{()}}@2"]);
    }

    #[test]
    fn connect_examples() {
        let mut arena = Arena::new();
        let a = arena.parse("{{}}@2").unwrap();
        let c = arena.connect(a, 1).unwrap();
        assert_eq!(arena.display(c), "{()}@1");
        let b = arena.parse("{{},{()}}@2").unwrap();
        let c = arena.connect(b, 1).unwrap();
        assert_eq!(arena.display(c), "{()}@1");
        assert_eq!(arena.connect(b, 2).unwrap(), b);
        assert_eq!(arena.connect(b, 0).unwrap(), arena.root());
        assert_eq!(arena.connect(b, 3), Err(Error::IndexOrder { j: 3, i: 2 }));
    }

    #[test]
    fn zero_and_its_images() {
        let mut arena = Arena::new();
        assert_eq!(arena.zero(0), arena.root());
        let z3 = arena.zero(3);
        assert_eq!(arena.display(z3), "{}@3");
        for j in 0..=3 {
            let z = arena.zero(j);
            assert_eq!(arena.connect(z3, j).unwrap(), z);
        }
        for n in 1..=4 {
            let z = arena.zero(n);
            assert!(arena.transition_successors(z).unwrap().is_empty());
        }
        for n in 0..=4 {
            let z = arena.zero(n);
            assert_eq!(arena.project(&dead(), n), z);
        }
    }

    #[test]
    fn projections_of_small_ordinals() {
        let mut arena = Arena::new();
        let p = arena.project(&von_neumann(2), 3);
        assert_eq!(arena.display(p), "{{},{{}}}@3");
        let p = arena.project(&von_neumann(2), 2);
        assert_eq!(arena.display(p), "{{},{()}}@2");
        let w = von_omega();
        let p1 = arena.project_gen(&w, 1).unwrap();
        assert_eq!(arena.display(p1), "{()}@1");
        let p2 = arena.project_gen(&w, 2).unwrap();
        assert_eq!(arena.display(p2), "{{},{()}}@2");
        for n in 0..=6 {
            let a = arena.project_gen(&w, n).unwrap();
            let b = arena.project(&von_neumann(n), n);
            assert_eq!(a, b, "level {n}");
        }
    }

    #[test]
    fn singleton_towers() {
        let mut arena = Arena::new();
        let z1 = arena.zero(1);
        assert_eq!(arena.singleton_tower(z1, 0).unwrap(), z1);
        let t = arena.singleton_tower(z1, 2).unwrap();
        assert_eq!(arena.display(t), "{{{}}}@3");
        assert!(matches!(arena.singleton_tower(z1, 4), Err(Error::LevelTooLarge { .. })));
        let a = arena.parse("{{},{()}}@2").unwrap();
        let up = arena.singleton_tower(a, 1).unwrap();
        let lhs = arena.connect(up, 2).unwrap();
        let inner = arena.connect(a, 1).unwrap();
        let rhs = arena.set(2, [inner]).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn transitions_are_membership() {
        let mut arena = Arena::new();
        let a = arena.parse("{{},{()}}@2").unwrap();
        let succ = arena.transition_successors(a).unwrap();
        assert_eq!(displayed(&arena, &succ), BTreeSet::from(["{}@1".into(), "{()}@1".into()]));
        assert_eq!(arena.transition_successors(arena.root()), Err(Error::NoPredecessorLevel));
        assert_eq!(arena.transitions(arena.root()), vec![arena.root()]);
    }

    #[test]
    fn parse_rejects_bad_input() {
        let mut arena = Arena::new();
        assert!(arena.parse("{}").is_err());
        assert!(arena.parse("{()}@2").is_err());
        assert!(arena.parse("{{}").is_err());
        assert!(arena.parse("()@1").is_err());
        assert!(arena.parse("{(),{}}@1").is_err());
        assert_eq!(arena.parse("{{()}}").map(|e| arena.level(e)), Ok(2));
        assert_eq!(arena.parse("{ {}, {()} }@2").map(|e| arena.display(e)), Ok("{{},{()}}@2".into()));
    }

    #[test]
    fn to_system_shapes() {
        let mut arena = Arena::new();
        let z1 = arena.zero(1);
        let x = arena.to_system(z1);
        assert_eq!(x.out_degree(), 0);
        let z = zermelo(3);
        for n in 0..=4 {
            let p = arena.project(&z, n);
            assert!(bisim_at(&arena.to_system(p), &z, n));
        }
    }

    #[test]
    fn audit_examples() {
        let mut arena = Arena::new();
        let r = arena.audit(1, 2).unwrap();
        assert!(!r.injective && r.surjective);
        let (a, b) = r.collision.unwrap();
        assert_eq!((arena.display(a), arena.display(b)), ("{{}}@2".into(), "{{()}}@2".into()));
        assert!(r.verify(&mut arena).unwrap());
        let r = arena.audit(3, 3).unwrap();
        assert!(r.injective && r.surjective);
        let r = arena.audit(2, 3).unwrap();
        assert!(r.surjective && !r.injective);
        assert!(matches!(arena.audit(2, 5), Err(Error::LevelTooLarge { .. })));
        assert!(matches!(arena.audit(3, 2), Err(Error::IndexOrder { .. })));
    }

    #[test]
    fn cover_soundness_of_von_omega() {
        let mut arena = Arena::new();
        let w = von_omega();
        for n in 0..=6 {
            assert_eq!(arena.check_cover(&w, n, 64).unwrap(), None);
        }
    }

    #[test]
    fn separate_arenas_agree_structurally() {
        let mut a1 = Arena::new();
        let mut a2 = Arena::new();
        // Warm one arena with unrelated elements so ids diverge.
        a2.level_elements(3).unwrap();
        let x = a1.project(&von_neumann(3), 4);
        let y = a2.project(&von_neumann(3), 4);
        assert_ne!(a1.session(), a2.session());
        assert_eq!(a1.display(x), a2.display(y));
    }
}
