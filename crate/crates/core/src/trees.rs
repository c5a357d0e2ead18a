//! Inverse chains, channels and cofinal embeddings.
//!
//! Chains are indexed by a finite range `0..len` or by omega, in which case
//! only finitely many levels are ever generated. A [`Channel`] is stored as
//! an explicit prefix of levels. The two embeddings that matter here are the
//! bit-set encoding [`BetaEmbedding`] of the complete binary tree into the
//! final chain, and the zero-padding [`PadEmbedding`] between binary trees.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Debug, Write as _};
use std::hash::Hash;
use std::str::FromStr;

use serde::Serialize;

use crate::bisim::Refinement;
use crate::chain::{Arena, Elem};
use crate::error::{Error, Result};
use crate::system::{von_set, FinSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Index {
    /// Levels `0..len`.
    Finite(usize),
    Omega,
}

impl Index {
    pub fn contains(self, i: usize) -> bool {
        match self {
            Index::Finite(len) => i < len,
            Index::Omega => true,
        }
    }
}

/// Connecting maps of an inverse chain.
pub trait Connecting {
    type Node: Clone + Ord + Hash + Debug;

    /// `rho_{j,i}` applied to a node at level `i`; requires `j <= i`.
    fn connect(&mut self, j: usize, i: usize, x: &Self::Node) -> Self::Node;

    fn label(&self, x: &Self::Node) -> String;

    /// Order used for deterministic tie-breaking.
    fn order(&self, a: &Self::Node, b: &Self::Node) -> Ordering {
        a.cmp(b)
    }
}

/// A chain whose levels can be listed.
pub trait InverseChain: Connecting {
    fn index(&self) -> Index;
    fn level(&mut self, i: usize) -> Vec<Self::Node>;
}

impl Connecting for Arena {
    type Node = Elem;

    fn connect(&mut self, j: usize, i: usize, x: &Elem) -> Elem {
        debug_assert_eq!(self.level(*x), i);
        Arena::connect(self, *x, j).expect("j <= i")
    }

    fn label(&self, x: &Elem) -> String {
        self.display(*x)
    }

    fn order(&self, a: &Elem, b: &Elem) -> Ordering {
        self.compare(*a, *b)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString(bits)
    }

    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// `self` restricted to its first `j` bits.
    pub fn prefix(&self, j: usize) -> BitString {
        BitString(self.0[..j].to_vec())
    }

    /// All strings of length `len`, in lexicographic order.
    pub fn all(len: usize) -> Vec<BitString> {
        assert!(len < 32, "complete binary levels are enumerated eagerly");
        (0u32..1 << len)
            .map(|m| BitString((0..len).map(|k| m >> (len - 1 - k) & 1 == 1).collect()))
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for &b in &self.0 {
            f.write_char(if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "ε" || s == "-" {
            return Ok(BitString::default());
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("`{s}` is not a bit string"))),
            })
            .collect::<Result<_>>()
            .map(BitString)
    }
}

/// `<c> = { j < len(c) : c_j = 1 } ∪ { len(c) }`.
pub fn bits_encode(c: &BitString) -> BTreeSet<usize> {
    c.bits()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| j)
        .chain(std::iter::once(c.len()))
        .collect()
}

/// The complete binary tree: level `j` is `{0,1}^j`, connecting maps are
/// prefix restriction.
#[derive(Clone, Copy, Debug)]
pub struct CompleteBinary {
    index: Index,
}

pub fn complete_binary(index: Index) -> CompleteBinary {
    CompleteBinary { index }
}

impl Connecting for CompleteBinary {
    type Node = BitString;

    fn connect(&mut self, j: usize, i: usize, x: &BitString) -> BitString {
        debug_assert!(j <= i && x.len() == i);
        x.prefix(j)
    }

    fn label(&self, x: &BitString) -> String {
        x.to_string()
    }
}

impl InverseChain for CompleteBinary {
    fn index(&self) -> Index {
        self.index
    }

    fn level(&mut self, i: usize) -> Vec<BitString> {
        assert!(self.index.contains(i), "level {i} outside {:?}", self.index);
        BitString::all(i)
    }
}

/// A finite chain given by named nodes and a parent for every node above
/// level 0.
#[derive(Clone, Debug, Default)]
pub struct ExplicitChain {
    levels: Vec<Vec<String>>,
    parent: Vec<BTreeMap<String, String>>,
}

impl ExplicitChain {
    pub fn new(root_level: Vec<&str>) -> Self {
        ExplicitChain {
            levels: vec![root_level.into_iter().map(String::from).collect()],
            parent: vec![BTreeMap::new()],
        }
    }

    /// Adds a level; each entry is `(node, parent at the previous level)`.
    pub fn push_level(&mut self, nodes: &[(&str, &str)]) -> Result<()> {
        let below: HashSet<&String> = self.levels.last().expect("root level").iter().collect();
        let mut parents = BTreeMap::new();
        for &(node, up) in nodes {
            if !below.contains(&up.to_string()) {
                return Err(Error::InvalidSystem(format!("{node} has unknown parent {up}")));
            }
            if parents.insert(node.to_string(), up.to_string()).is_some() {
                return Err(Error::InvalidSystem(format!("{node} declared twice")));
            }
        }
        self.levels.push(nodes.iter().map(|(n, _)| n.to_string()).collect());
        self.parent.push(parents);
        Ok(())
    }
}

impl Connecting for ExplicitChain {
    type Node = String;

    fn connect(&mut self, j: usize, i: usize, x: &String) -> String {
        let mut node = x.clone();
        for level in (j + 1..=i).rev() {
            node = self.parent[level][&node].clone();
        }
        node
    }

    fn label(&self, x: &String) -> String {
        x.clone()
    }
}

impl InverseChain for ExplicitChain {
    fn index(&self) -> Index {
        Index::Finite(self.levels.len())
    }

    fn level(&mut self, i: usize) -> Vec<String> {
        self.levels[i].clone()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TidyFailure {
    EmptyLevel { level: usize },
    NoUniqueRoot { roots: usize },
    /// A node with no development at the next level.
    Dead { level: usize, node: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum LimitClause {
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TidyReport {
    pub tidy: bool,
    pub failure: Option<TidyFailure>,
    /// Levels examined (all of them for a finite index).
    pub checked_levels: usize,
    pub limit_clause: LimitClause,
}

/// Tidiness of a chain: a unique root and surjective connecting maps.
/// Omega-indexed chains are probed through level `probe`.
pub fn is_tidy<C: InverseChain>(chain: &mut C, probe: usize) -> TidyReport {
    let len = match chain.index() {
        Index::Finite(len) => len,
        Index::Omega => probe + 1,
    };
    let report = |failure: Option<TidyFailure>| TidyReport {
        tidy: failure.is_none(),
        failure,
        checked_levels: len,
        limit_clause: LimitClause::NotApplicable,
    };
    let mut below = chain.level(0);
    match below.len() {
        0 => return report(Some(TidyFailure::EmptyLevel { level: 0 })),
        1 => {}
        n => return report(Some(TidyFailure::NoUniqueRoot { roots: n })),
    }
    for i in 1..len {
        let level = chain.level(i);
        if level.is_empty() {
            return report(Some(TidyFailure::EmptyLevel { level: i }));
        }
        let hit: HashSet<C::Node> = level.iter().map(|x| chain.connect(i - 1, i, x)).collect();
        if let Some(dead) = below.iter().find(|y| !hit.contains(*y)) {
            return report(Some(TidyFailure::Dead { level: i - 1, node: chain.label(dead) }));
        }
        below = level;
    }
    report(None)
}

/// A levelwise subset family; over omega only the stored prefix exists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel<N> {
    pub index: Index,
    pub levels: Vec<BTreeSet<N>>,
}

impl<N: Clone + Ord + Hash + Debug> Channel<N> {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// The whole chain as a channel through itself.
    pub fn full<C: InverseChain<Node = N>>(chain: &mut C, probe: usize) -> Self {
        let len = match chain.index() {
            Index::Finite(len) => len,
            Index::Omega => probe + 1,
        };
        Channel {
            index: chain.index(),
            levels: (0..len).map(|i| chain.level(i).into_iter().collect()).collect(),
        }
    }

    /// Downward closure and extendability over every pair of stored levels.
    pub fn check_laws<C: Connecting<Node = N>>(&self, chain: &mut C) -> Result<()> {
        for i in 0..self.levels.len() {
            for j in 0..i {
                let images: HashSet<N> =
                    self.levels[i].iter().map(|x| chain.connect(j, i, x)).collect();
                if let Some(x) = images.iter().find(|y| !self.levels[j].contains(*y)) {
                    return Err(Error::NotAChannel(format!(
                        "{} at level {j} is an image from level {i} but not in the channel",
                        chain.label(x)
                    )));
                }
                if let Some(y) = self.levels[j].iter().find(|y| !images.contains(*y)) {
                    return Err(Error::NotAChannel(format!(
                        "{} at level {j} has no development at level {i}",
                        chain.label(y)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Full branches of a finite-index channel, one per top-level node.
    pub fn full_branches<C: Connecting<Node = N>>(&self, chain: &mut C) -> Vec<Vec<N>> {
        let Some(top) = self.levels.len().checked_sub(1) else {
            return vec![Vec::new()];
        };
        self.levels[top]
            .iter()
            .map(|x| (0..=top).map(|j| chain.connect(j, top, x)).collect())
            .collect()
    }
}

/// Greedy König extraction over the stored prefix: at each level pick, among
/// the developments of the previous choice, the one with the most
/// developments at the deepest stored level.
pub fn extract_branch<C: Connecting>(chain: &mut C, channel: &Channel<C::Node>) -> Result<Vec<C::Node>> {
    if let Some(level) = channel.levels.iter().position(BTreeSet::is_empty) {
        return Err(Error::EmptyChannel { level });
    }
    let Some(top) = channel.levels.len().checked_sub(1) else {
        return Ok(Vec::new());
    };
    let mut branch: Vec<C::Node> = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let mut counts: HashMap<C::Node, usize> = HashMap::new();
        for y in &channel.levels[top] {
            *counts.entry(chain.connect(n, top, y)).or_default() += 1;
        }
        let mut candidates: Vec<C::Node> = channel.levels[n]
            .iter()
            .filter(|x| counts.contains_key(*x))
            .filter(|x| n == 0 || chain.connect(n - 1, n, x) == branch[n - 1])
            .cloned()
            .collect();
        candidates.sort_by(|a, b| counts[b].cmp(&counts[a]).then_with(|| chain.order(a, b)));
        let pick = candidates
            .into_iter()
            .next()
            .ok_or_else(|| Error::NotAChannel(format!("no development at level {n}")))?;
        branch.push(pick);
    }
    Ok(branch)
}

/// A monotone cofinal index map with natural level injections.
pub trait CofinalEmbedding {
    type Source: InverseChain;
    type Target: Connecting;

    fn source(&self) -> Self::Source;
    /// Target levels are `0..target_len`.
    fn target_len(&self) -> usize;
    fn index_map(&self, i: usize) -> usize;
    fn map(
        &mut self,
        target: &mut Self::Target,
        i: usize,
        x: &<Self::Source as Connecting>::Node,
    ) -> <Self::Target as Connecting>::Node;
}

fn source_len<E: CofinalEmbedding>(e: &E) -> usize {
    match e.source().index() {
        Index::Finite(len) => len,
        Index::Omega => panic!("embeddings are verified on finite source prefixes"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmbeddingReport {
    pub monotone: bool,
    pub cofinal: bool,
    pub injective: bool,
    pub natural: bool,
    pub failure: Option<String>,
}

impl EmbeddingReport {
    pub fn ok(&self) -> bool {
        self.monotone && self.cofinal && self.injective && self.natural
    }
}

/// Exhaustively checks the embedding laws over every source level.
type LevelImage<E> =
    HashMap<<<E as CofinalEmbedding>::Source as Connecting>::Node, <<E as CofinalEmbedding>::Target as Connecting>::Node>;

pub fn verify_embedding<E: CofinalEmbedding>(e: &mut E, target: &mut E::Target) -> EmbeddingReport {
    let len = source_len(e);
    let mut source = e.source();
    let mut report =
        EmbeddingReport { monotone: true, cofinal: true, injective: true, natural: true, failure: None };
    let fail = |r: &mut EmbeddingReport, msg: String| {
        if r.failure.is_none() {
            r.failure = Some(msg);
        }
    };
    let f: Vec<usize> = (0..len).map(|i| e.index_map(i)).collect();
    if let Some(i) = (1..len).find(|&i| f[i] < f[i - 1]) {
        report.monotone = false;
        fail(&mut report, format!("index map decreases at {i}"));
    }
    if f.last().map_or(e.target_len() > 0, |&top| top + 1 < e.target_len())
        || f.iter().any(|&t| t >= e.target_len())
    {
        report.cofinal = false;
        fail(&mut report, "index map misses the top target level".into());
    }
    let mut images: Vec<LevelImage<E>> = Vec::with_capacity(len);
    for i in 0..len {
        let mut level_map = HashMap::new();
        let mut seen = HashMap::new();
        for x in source.level(i) {
            let y = e.map(target, i, &x);
            if let Some(prev) = seen.insert(y.clone(), x.clone()) {
                report.injective = false;
                fail(&mut report, format!(
                    "level {i}: {} and {} share an image",
                    source.label(&prev),
                    source.label(&x)
                ));
            }
            level_map.insert(x, y);
        }
        images.push(level_map);
    }
    for i in 0..len {
        let level: Vec<_> = images[i].iter().map(|(x, y)| (x.clone(), y.clone())).collect();
        for (x, y) in level {
            for j in 0..i {
                let down = source.connect(j, i, &x);
                let lhs = target.connect(f[j], f[i], &y);
                if images[j][&down] != lhs {
                    report.natural = false;
                    fail(&mut report, format!("naturality fails for {} between {j} and {i}", source.label(&x)));
                }
            }
        }
    }
    report
}

/// The channel through the target generated by the image of `channel`.
/// Unmapped target levels are connect-images of the next mapped level.
pub fn channel_image<E: CofinalEmbedding>(
    e: &mut E,
    target: &mut E::Target,
    channel: &Channel<<E::Source as Connecting>::Node>,
) -> Result<Channel<<E::Target as Connecting>::Node>> {
    let len = source_len(e);
    if channel.levels.len() != len {
        return Err(Error::NotAChannel(format!(
            "channel has {} levels, source has {len}",
            channel.levels.len()
        )));
    }
    channel.check_laws(&mut e.source())?;
    let mut levels: Vec<Option<BTreeSet<_>>> = vec![None; e.target_len()];
    for i in 0..len {
        let t = e.index_map(i);
        let image: BTreeSet<_> = channel.levels[i].iter().map(|x| e.map(target, i, x)).collect();
        levels[t] = Some(image);
    }
    for t in (0..levels.len()).rev() {
        if levels[t].is_some() {
            continue;
        }
        let above = (t + 1..levels.len())
            .find(|&u| levels[u].is_some())
            .ok_or_else(|| Error::NotAChannel(format!("target level {t} lies above every mapped level")))?;
        let from: Vec<_> = levels[above].as_ref().unwrap().iter().cloned().collect();
        levels[t] = Some(from.iter().map(|y| target.connect(t, above, y)).collect());
    }
    let out = Channel { index: Index::Finite(levels.len()), levels: levels.into_iter().map(Option::unwrap).collect() };
    out.check_laws(target)?;
    Ok(out)
}

/// `beta_j(c) = p_{j+1}(v{<c>})`, index map `j -> j + 1`.
#[derive(Clone, Copy, Debug)]
pub struct BetaEmbedding {
    depth: usize,
}

pub fn beta_embedding(depth: usize) -> BetaEmbedding {
    BetaEmbedding { depth }
}

impl CofinalEmbedding for BetaEmbedding {
    type Source = CompleteBinary;
    type Target = Arena;

    fn source(&self) -> CompleteBinary {
        complete_binary(Index::Finite(self.depth))
    }

    fn target_len(&self) -> usize {
        self.depth + 1
    }

    fn index_map(&self, j: usize) -> usize {
        j + 1
    }

    fn map(&mut self, arena: &mut Arena, j: usize, c: &BitString) -> Elem {
        debug_assert_eq!(c.len(), j);
        arena.project(&von_set(&bits_encode(c)), j + 1)
    }
}

/// Zero padding along `i_0 < i_1 < ... < i_m`: bit `c_k` lands at position
/// `i_k`, every other position is 0.
#[derive(Clone, Debug)]
pub struct PadEmbedding {
    subseq: Vec<usize>,
}

pub fn pad_embedding(subseq: &[usize]) -> Result<PadEmbedding> {
    if subseq.is_empty() {
        return Err(Error::NotIncreasing { position: 0 });
    }
    if let Some(position) = (1..subseq.len()).find(|&k| subseq[k] <= subseq[k - 1]) {
        return Err(Error::NotIncreasing { position });
    }
    Ok(PadEmbedding { subseq: subseq.to_vec() })
}

impl PadEmbedding {
    pub fn apply(&self, c: &BitString) -> BitString {
        let n = c.len();
        let mut d = vec![false; self.subseq[n]];
        for (m, &bit) in c.bits().iter().enumerate() {
            d[self.subseq[m]] = bit;
        }
        BitString(d)
    }
}

impl CofinalEmbedding for PadEmbedding {
    type Source = CompleteBinary;
    type Target = CompleteBinary;

    fn source(&self) -> CompleteBinary {
        complete_binary(Index::Finite(self.subseq.len()))
    }

    fn target_len(&self) -> usize {
        self.subseq.last().unwrap() + 1
    }

    fn index_map(&self, n: usize) -> usize {
        self.subseq[n]
    }

    fn map(&mut self, _target: &mut CompleteBinary, _n: usize, c: &BitString) -> BitString {
        self.apply(c)
    }
}

/// `second ∘ first`, routed through `first`'s target chain.
pub struct Composed<A: CofinalEmbedding, B> {
    first: A,
    second: B,
    middle: A::Target,
}

pub fn compose<A, B>(first: A, middle: A::Target, second: B) -> Composed<A, B>
where
    A: CofinalEmbedding,
    B: CofinalEmbedding,
    A::Target: Connecting<Node = <B::Source as Connecting>::Node>,
{
    Composed { first, second, middle }
}

impl<A, B> CofinalEmbedding for Composed<A, B>
where
    A: CofinalEmbedding,
    B: CofinalEmbedding,
    A::Target: Connecting<Node = <B::Source as Connecting>::Node>,
{
    type Source = A::Source;
    type Target = B::Target;

    fn source(&self) -> A::Source {
        self.first.source()
    }

    fn target_len(&self) -> usize {
        self.second.target_len()
    }

    fn index_map(&self, i: usize) -> usize {
        self.second.index_map(self.first.index_map(i))
    }

    fn map(
        &mut self,
        target: &mut B::Target,
        i: usize,
        x: &<A::Source as Connecting>::Node,
    ) -> <B::Target as Connecting>::Node {
        let mid = self.first.map(&mut self.middle, i, x);
        self.second.map(target, self.first.index_map(i), &mid)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelMapJson {
    pub source_index: usize,
    pub target_index: usize,
    pub map: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingJson {
    pub index_map: Vec<(usize, usize)>,
    pub levels: Vec<LevelMapJson>,
}

/// Index map and level maps as tables.
pub fn describe_embedding<E: CofinalEmbedding>(e: &mut E, target: &mut E::Target) -> EmbeddingJson {
    let len = source_len(e);
    let mut source = e.source();
    let index_map = (0..len).map(|i| (i, e.index_map(i))).collect();
    let levels = (0..len)
        .map(|i| {
            let map = source
                .level(i)
                .iter()
                .map(|x| {
                    let y = e.map(target, i, x);
                    (source.label(x), target.label(&y))
                })
                .collect();
            LevelMapJson { source_index: i, target_index: e.index_map(i), map }
        })
        .collect();
    EmbeddingJson { index_map, levels }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RestrictReport {
    pub checked: usize,
    pub violations: Vec<(String, String)>,
}

/// For all `j <= i` with `j <= jmax`, `i <= imax`, `c` of length `j` and `d`
/// of length `i`: `c` is a prefix of `d` iff `v{<c>} ~_{j+1} v{<d>}`.
pub fn restrict_lemma_check(jmax: usize, imax: usize) -> RestrictReport {
    assert!(jmax <= imax && imax <= 12, "restrict check bounded to small lengths");
    // One system: ordinals 0..=imax shared, then one root per bit string.
    let mut sys = FinSystem::new();
    for k in 0..=imax {
        let s = sys.add_state(format!("v{k}"));
        sys.set_successors(s, (0..k).collect()).unwrap();
    }
    let mut state_of: HashMap<BitString, usize> = HashMap::new();
    for len in 0..=imax {
        for c in BitString::all(len) {
            let s = sys.add_state(format!("v<{c}>"));
            sys.set_successors(s, bits_encode(&c).into_iter().collect()).unwrap();
            state_of.insert(c, s);
        }
    }
    let refinement = Refinement::up_to(&sys, jmax + 1);
    let mut report = RestrictReport::default();
    for i in 0..=imax {
        let ds = BitString::all(i);
        for j in 0..=jmax.min(i) {
            for c in BitString::all(j) {
                for d in &ds {
                    report.checked += 1;
                    let prefix = d.prefix(j) == c;
                    let similar = refinement.equivalent(state_of[&c], state_of[d], j + 1);
                    if prefix != similar {
                        report.violations.push((c.to_string(), d.to_string()));
                    }
                }
            }
        }
    }
    report
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT rendering of the first levels of a chain, nodes grouped by level and
/// connecting edges drawn downward. Channel members are highlighted.
pub fn chain_to_dot<C: InverseChain>(
    chain: &mut C,
    probe: usize,
    highlight: Option<&Channel<C::Node>>,
) -> String {
    let len = match chain.index() {
        Index::Finite(len) => len,
        Index::Omega => probe + 1,
    };
    let levels: Vec<Vec<C::Node>> = (0..len).map(|i| chain.level(i)).collect();
    render_dot(chain, &levels, |i, x| highlight.is_some_and(|h| h.levels.get(i).is_some_and(|l| l.contains(x))))
}

/// DOT rendering of a channel alone, for chains whose levels are too large
/// to list.
pub fn channel_to_dot<C: Connecting>(chain: &mut C, channel: &Channel<C::Node>) -> String {
    let levels: Vec<Vec<C::Node>> = channel.levels.iter().map(|l| l.iter().cloned().collect()).collect();
    render_dot(chain, &levels, |_, _| true)
}

fn render_dot<C: Connecting>(
    chain: &mut C,
    levels: &[Vec<C::Node>],
    highlighted: impl Fn(usize, &C::Node) -> bool,
) -> String {
    let mut out = String::from("digraph chain {\n  rankdir=TB;\n  node [shape=box, fontname=\"monospace\"];\n");
    let mut ids: Vec<HashMap<C::Node, usize>> = Vec::new();
    let mut next = 0;
    for (i, level) in levels.iter().enumerate() {
        let mut map = HashMap::new();
        let _ = writeln!(out, "  subgraph level_{i} {{\n    rank=same;");
        for x in level {
            let style = if highlighted(i, x) { ", style=filled, fillcolor=\"#ffd27f\"" } else { "" };
            let _ = writeln!(out, "    n{next} [label=\"{}\"{style}];", dot_escape(&chain.label(x)));
            map.insert(x.clone(), next);
            next += 1;
        }
        out.push_str("  }\n");
        ids.push(map);
    }
    for i in 1..levels.len() {
        for x in &levels[i] {
            let down = chain.connect(i - 1, i, x);
            if let Some(&to) = ids[i - 1].get(&down) {
                let _ = writeln!(out, "  n{} -> n{to};", ids[i][x]);
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::von_neumann;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn complete_binary_levels() {
        let mut t = complete_binary(Index::Finite(5));
        assert_eq!(t.level(0), vec![BitString::default()]);
        assert_eq!(t.level(3).len(), 8);
        assert_eq!(t.connect(2, 3, &bs("101")), bs("10"));
        assert!(is_tidy(&mut t, 0).tidy);
        let mut w = complete_binary(Index::Omega);
        let r = is_tidy(&mut w, 6);
        assert!(r.tidy);
        assert_eq!(r.checked_levels, 7);
        assert_eq!(r.limit_clause, LimitClause::NotApplicable);
    }

    #[test]
    fn isolated_node_breaks_tidiness() {
        let mut c = ExplicitChain::new(vec!["r"]);
        c.push_level(&[("a", "r"), ("b", "r")]).unwrap();
        c.push_level(&[("a0", "a"), ("a1", "a"), ("b0", "b")]).unwrap();
        c.push_level(&[("a00", "a0"), ("b00", "b0")]).unwrap();
        let r = is_tidy(&mut c, 0);
        assert!(!r.tidy);
        assert_eq!(r.failure, Some(TidyFailure::Dead { level: 2, node: "a1".into() }));
    }

    #[test]
    fn empty_level_or_many_roots() {
        let mut c = ExplicitChain::new(vec!["r"]);
        c.push_level(&[]).unwrap();
        assert_eq!(is_tidy(&mut c, 0).failure, Some(TidyFailure::EmptyLevel { level: 1 }));
        let mut c = ExplicitChain::new(vec![]);
        assert_eq!(is_tidy(&mut c, 0).failure, Some(TidyFailure::EmptyLevel { level: 0 }));
        let mut c = ExplicitChain::new(vec!["r", "s"]);
        assert_eq!(is_tidy(&mut c, 0).failure, Some(TidyFailure::NoUniqueRoot { roots: 2 }));
    }

    #[test]
    fn encode_examples() {
        assert_eq!(bits_encode(&BitString::default()), BTreeSet::from([0]));
        assert_eq!(bits_encode(&bs("101")), BTreeSet::from([0, 2, 3]));
        assert_eq!(bits_encode(&bs("000")), BTreeSet::from([3]));
        assert!("10x".parse::<BitString>().is_err());
    }

    #[test]
    fn beta_examples() {
        let mut arena = Arena::new();
        let mut beta = beta_embedding(4);
        let b0 = beta.map(&mut arena, 0, &BitString::default());
        assert_eq!(arena.display(b0), "{()}@1");
        let all = BitString::all(3);
        let images: HashSet<Elem> = all.iter().map(|c| beta.map(&mut arena, 3, c)).collect();
        assert_eq!(images.len(), 8);
        let b3 = beta.map(&mut arena, 3, &bs("101"));
        let b2 = beta.map(&mut arena, 2, &bs("10"));
        assert_eq!(Arena::connect(&mut arena, b3, 3).unwrap(), b2);
        assert!(verify_embedding(&mut beta, &mut arena).ok());
    }

    #[test]
    fn restrict_examples() {
        // <1> = {0,1}, <10> = {0,2}: prefix and ~_2 both hold.
        let sys_check = |c: &str, d: &str, k: usize| {
            let x = von_set(&bits_encode(&bs(c)));
            let y = von_set(&bits_encode(&bs(d)));
            crate::bisim::bisim_at(&x, &y, k)
        };
        assert!(sys_check("1", "10", 2));
        assert!(!sys_check("0", "10", 2));
        assert!(sys_check("0110", "0110", 5));
        let r = restrict_lemma_check(3, 4);
        assert!(r.violations.is_empty());
        assert!(r.checked > 0);
    }

    #[test]
    fn pad_examples() {
        let pad = pad_embedding(&[0, 2, 4]).unwrap();
        assert_eq!(pad.apply(&bs("10")), bs("1000"));
        assert_eq!(pad.apply(&bs("00")), bs("0000"));
        assert_eq!(pad.apply(&bs("11")), bs("1010"));
        assert_eq!(pad_embedding(&[0, 2, 2]).unwrap_err(), Error::NotIncreasing { position: 2 });
        let mut pad = pad;
        let mut target = complete_binary(Index::Finite(5));
        assert!(verify_embedding(&mut pad, &mut target).ok());
    }

    #[test]
    fn pad_then_beta_is_an_embedding() {
        let pad = pad_embedding(&[0, 1, 3]).unwrap();
        let middle = complete_binary(Index::Finite(4));
        let mut both = compose(pad, middle, beta_embedding(4));
        let mut arena = Arena::new();
        let r = verify_embedding(&mut both, &mut arena);
        assert!(r.ok(), "{r:?}");
    }

    #[test]
    fn beta_image_of_full_binary_channel() {
        let mut arena = Arena::new();
        let mut beta = beta_embedding(3);
        let full = Channel::full(&mut beta.source(), 0);
        let image = channel_image(&mut beta, &mut arena, &full).unwrap();
        let sizes: Vec<usize> = image.levels.iter().map(BTreeSet::len).collect();
        assert_eq!(sizes, [1, 1, 2, 4]);
        assert_eq!(image.full_branches(&mut arena).len(), 4);
    }

    #[test]
    fn image_of_a_single_branch() {
        let mut arena = Arena::new();
        let mut beta = beta_embedding(3);
        let path = ["", "0", "01"].map(|s| BTreeSet::from([if s.is_empty() { BitString::default() } else { bs(s) }]));
        let channel = Channel { index: Index::Finite(3), levels: path.to_vec() };
        let image = channel_image(&mut beta, &mut arena, &channel).unwrap();
        assert!(image.levels.iter().all(|l| l.len() == 1));
    }

    #[test]
    fn non_channels_are_rejected() {
        let mut beta = beta_embedding(2);
        let mut arena = Arena::new();
        let bad = Channel { index: Index::Finite(2), levels: vec![BTreeSet::from([BitString::default()]), BTreeSet::new()] };
        assert!(matches!(channel_image(&mut beta, &mut arena, &bad), Err(Error::NotAChannel(_))));
    }

    #[test]
    fn extraction_follows_the_heaviest_subtree() {
        let mut c = ExplicitChain::new(vec!["r"]);
        c.push_level(&[("a", "r"), ("b", "r")]).unwrap();
        c.push_level(&[("a0", "a"), ("b0", "b"), ("b1", "b")]).unwrap();
        let full = Channel::full(&mut c, 0);
        assert_eq!(extract_branch(&mut c, &full).unwrap(), ["r", "b", "b0"]);
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let mut t = complete_binary(Index::Finite(3));
        let dot = chain_to_dot(&mut t, 0, None);
        assert_eq!(dot.matches("label=").count(), 7);
        assert_eq!(dot.matches("->").count(), 6);
        let mut arena = Arena::new();
        let p = arena.project(&von_neumann(2), 2);
        let channel = Channel {
            index: Index::Finite(3),
            levels: vec![BTreeSet::from([arena.root()]), BTreeSet::from([Arena::connect(&mut arena, p, 1).unwrap()]), BTreeSet::from([p])],
        };
        let dot = channel_to_dot(&mut arena, &channel);
        assert!(dot.contains("{{},{()}}@2"));
        assert!(dot.contains("fillcolor"));
    }
}
