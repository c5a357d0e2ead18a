//! Runnable proposition suites.
//!
//! Each suite checks one structural fact about the final chain at the
//! indices where it can be computed, exhaustively where feasible and by
//! seeded sampling otherwise, and reports the first few counterexamples.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bisim::{bisim_at, bisimilar, JointSystem, Level, Partition, Refinement};
use crate::chain::{level_size, Arena, Elem, MAX_ENUMERABLE_LEVEL};
use crate::error::Result;
use crate::omega::{
    branch_eq, branch_of, exact_successors, konig_extract_range, konig_extract_successors, range,
    succ_check, BranchSet, BranchVerdict, OmegaBranch, Probe,
};
use crate::system::{von_neumann, von_omega, zermelo, AnySystem, FinSystem, PointedSystem};
use crate::trees::{beta_embedding, compose, complete_binary, pad_embedding, restrict_lemma_check, verify_embedding, Index};

#[derive(Clone, Copy, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Sampled pairs for the level-4 extensionality check.
    pub samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, samples: 100_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub failures: Vec<String>,
    pub failure_count: usize,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

const KEPT_FAILURES: usize = 5;

struct Tally {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
    failure_count: usize,
    started: Instant,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, checks: 0, failures: Vec::new(), failure_count: 0, started: Instant::now() }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(witness());
            }
        }
    }

    fn finish(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            checks: self.checks,
            failures: self.failures,
            failure_count: self.failure_count,
            elapsed: self.started.elapsed(),
        }
    }
}

type SuiteFn = fn(&SuiteConfig) -> Result<SuiteReport>;

/// Every suite, by name, in run order.
pub const SUITES: &[(&str, SuiteFn)] = &[
    ("level-counts", level_counts),
    ("strong-extensionality", strong_extensionality),
    ("von-neumann-table", von_neumann_table),
    ("kernel-projection", kernel_projection),
    ("audit-matrix", audit_matrix),
    ("ordinal-successors", ordinal_successors),
    ("omega-successors", omega_successors),
    ("restrict-lemma", restrict_lemma),
    ("konig", konig),
    ("range-injectivity", range_injectivity),
    ("functoriality", functoriality),
    ("projection-naturality", projection_naturality),
    ("transition-preservation", transition_preservation),
    ("non-injectivity", non_injectivity),
    ("successor-matching", successor_matching),
    ("successor-completeness", successor_completeness),
    ("embeddings", embeddings),
];

pub fn suite_names() -> impl Iterator<Item = &'static str> {
    SUITES.iter().map(|(n, _)| *n)
}

pub fn run_suite(name: &str, config: &SuiteConfig) -> Option<Result<SuiteReport>> {
    SUITES.iter().find(|(n, _)| *n == name).map(|(_, f)| f(config))
}

/// Random system with `1..=max_states` states and roughly two successors
/// per state.
pub fn random_system(rng: &mut impl Rng, max_states: usize) -> FinSystem {
    let n = rng.gen_range(1..=max_states);
    let mut sys = FinSystem::new();
    for s in 0..n {
        sys.add_state(format!("s{s}"));
    }
    let p = (2.0 / n as f64).min(0.9);
    for s in 0..n {
        let succ: Vec<usize> = (0..n).filter(|_| rng.gen_bool(p)).collect();
        sys.set_successors(s, succ).expect("filtered range has no repeats");
    }
    sys
}

fn pick_state(rng: &mut impl Rng, sys: &FinSystem) -> usize {
    rng.gen_range(0..sys.len())
}

pub fn level_counts(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("level-counts");
    let mut arena = Arena::new();
    for n in 0..=MAX_ENUMERABLE_LEVEL {
        let count = arena.enumerate(n)?.count() as u128;
        let expected = level_size(n).expect("small level");
        t.check(count == expected, || format!("|nu_{n}| = {count}, expected {expected}"));
    }
    Ok(t.finish())
}

fn extensional_pair(arena: &Arena, a: Elem, b: Elem, n: usize) -> bool {
    a == b || !bisim_at(&arena.to_system(a), &arena.to_system(b), n)
}

/// Distinct elements of `nu_n` are never `~_n`.
pub fn strong_extensionality(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("strong-extensionality");
    let mut arena = Arena::new();
    for n in 0..=3 {
        let elems = arena.level_elements(n)?;
        for &a in &elems {
            for &b in &elems {
                let ok = extensional_pair(&arena, a, b, n);
                t.check(ok, || format!("{} ~_{n} {}", arena.display(a), arena.display(b)));
            }
        }
    }
    let top = arena.level_elements(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.samples {
        let a = *top.choose(&mut rng).unwrap();
        let b = *top.choose(&mut rng).unwrap();
        let ok = extensional_pair(&arena, a, b, 4);
        t.check(ok, || format!("{} ~_4 {}", arena.display(a), arena.display(b)));
    }
    Ok(t.finish())
}

/// `v_i ~_k v_j` iff `i = j` or `k <= min(i, j)`; distinct ordinals are
/// never bisimilar.
pub fn von_neumann_table(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("von-neumann-table");
    let ordinals: Vec<PointedSystem> = (0..=8).map(von_neumann).collect();
    for i in 0..=8 {
        for j in 0..=8 {
            let joint = JointSystem::new(&ordinals[i], &ordinals[j]);
            let r = Refinement::compute(&joint.system);
            for k in 0..=8 {
                let got = r.equivalent(joint.left, joint.right, k);
                let expected = i == j || k <= i.min(j);
                t.check(got == expected, || format!("v{i} ~_{k} v{j} computed {got}"));
            }
            if i != j {
                let bis = r.bisimilar(joint.left, joint.right);
                t.check(!bis, || format!("v{i} ~ v{j}"));
            }
        }
    }
    Ok(t.finish())
}

/// Refinement kernel of `~_k` equals the kernel of `p_k`.
pub fn kernel_projection(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("kernel-projection");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6b65726e);
    let mut arena = Arena::new();
    for round in 0..200 {
        let sys = random_system(&mut rng, 30);
        let r = Refinement::up_to(&sys, 8);
        let mut projections = vec![arena.root(); sys.len()];
        for k in 0..=8 {
            if k > 0 {
                projections = step_projection(&mut arena, &sys, &projections, k);
            }
            let by_projection: Vec<usize> = projections.iter().map(|e| e.id() as usize).collect();
            let ok = r.partition(k) == Partition::from_labels(&by_projection);
            t.check(ok, || format!("system #{round} ({} states), k = {k}", sys.len()));
        }
    }
    Ok(t.finish())
}

fn step_projection(arena: &mut Arena, sys: &FinSystem, prev: &[Elem], level: usize) -> Vec<Elem> {
    sys.states()
        .map(|s| arena.set(level, sys.successors(s).iter().map(|&u| prev[u])).expect("graded"))
        .collect()
}

/// `sigma_{j,i}` is always onto and injective only at `j = i`.
pub fn audit_matrix(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("audit-matrix");
    let mut arena = Arena::new();
    for i in 0..=3 {
        for j in 0..=i {
            let r = arena.audit(j, i)?;
            let verified = r.verify(&mut arena)?;
            t.check(r.surjective, || format!("sigma_{j},{i} misses a target"));
            t.check(r.injective == (j == i), || format!("sigma_{j},{i} injective = {}", r.injective));
            t.check(verified, || format!("sigma_{j},{i} witnesses do not re-check"));
        }
    }
    Ok(t.finish())
}

fn pred(i: usize) -> usize {
    i.saturating_sub(1)
}

/// Successors of `p_i(v_j)` for `j <= i <= 4`: `p_{pred i}(v_k)` for
/// `k < j` when `j < i`, for `k <= pred i` when `j = i`, listed without
/// repetition.
pub fn ordinal_successors(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("ordinal-successors");
    let mut arena = Arena::new();
    for i in 0..=4 {
        for j in 0..=i {
            let a = arena.project(&von_neumann(j), i);
            let actual: BTreeSet<Elem> = arena.transitions(a).into_iter().collect();
            let ks: Vec<usize> = if j < i { (0..j).collect() } else { (0..=pred(i)).collect() };
            let listed: Vec<Elem> = ks.iter().map(|&k| arena.project(&von_neumann(k), pred(i))).collect();
            let expected: BTreeSet<Elem> = listed.iter().copied().collect();
            t.check(expected.len() == listed.len(), || format!("p_{i}(v{j}): listing repeats"));
            t.check(actual == expected, || format!("p_{i}(v{j}): successor sets differ"));
        }
    }
    Ok(t.finish())
}

/// `p(v_omega)` has each `p(v_k)` as successor, and those are distinct.
pub fn omega_successors(_: &SuiteConfig) -> Result<SuiteReport> {
    let depth = 12;
    let mut t = Tally::new("omega-successors");
    let mut arena = Arena::new();
    let w = branch_of(von_omega());
    let mut targets: Vec<OmegaBranch> = (0..=10).map(|k| branch_of(von_neumann(k))).collect();
    targets.push(w.clone());
    for b in &targets {
        let v = succ_check(&mut arena, &w, b, depth)?;
        t.check(v.probe == Probe::ConsistentUpTo(depth), || format!("{} is not a successor: {:?}", b.label(), v.probe));
    }
    for x in 0..targets.len() {
        for y in x + 1..targets.len() {
            let v = branch_eq(&mut arena, &targets[x], &targets[y], depth)?;
            let ok = matches!(v, BranchVerdict::DistinguishedAt(d) if d <= depth);
            t.check(ok, || format!("{} vs {}: {v:?}", targets[x].label(), targets[y].label()));
        }
    }
    Ok(t.finish())
}

/// Prefix order on bit strings matches `~_{j+1}` on `v{<c>}`.
pub fn restrict_lemma(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("restrict-lemma");
    let report = restrict_lemma_check(6, 6);
    t.checks = report.checked - report.violations.len();
    for (c, d) in &report.violations {
        t.check(false, || format!("c = {c}, d = {d}"));
    }
    Ok(t.finish())
}

pub fn branch_pool(max: usize) -> Vec<OmegaBranch> {
    (0..=max).map(|k| branch_of(von_neumann(k))).chain((0..=max).map(|k| branch_of(zermelo(k)))).collect()
}

/// Extraction from ranges of small branch sets yields a member, and from
/// the successor channel of `v_omega` yields `v_omega` itself.
pub fn konig(config: &SuiteConfig) -> Result<SuiteReport> {
    let depth = 12;
    let mut t = Tally::new("konig");
    let mut arena = Arena::new();
    let pool = branch_pool(4);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6b6f6e);
    for round in 0..50 {
        let size = rng.gen_range(1..=3);
        let picks: Vec<OmegaBranch> = pool.choose_multiple(&mut rng, size).cloned().collect();
        let labels: Vec<String> = picks.iter().map(OmegaBranch::label).collect();
        let set = BranchSet::new(&mut arena, picks, depth)?;
        let got = konig_extract_range(&mut arena, &set, depth)?;
        let mut member = false;
        for m in set.members() {
            if branch_eq(&mut arena, m, &got, depth)? == BranchVerdict::Equal {
                member = true;
            }
        }
        t.check(member, || format!("channel #{round} from {labels:?}: extracted {}", got.label()));
    }
    let w: AnySystem = von_omega().into();
    let got = konig_extract_successors(&mut arena, &w, depth)?;
    let v = branch_eq(&mut arena, &got, &branch_of(von_omega()), depth)?;
    t.check(v == BranchVerdict::EqualUpTo(depth), || format!("v_omega successor channel gave {v:?}"));
    Ok(t.finish())
}

/// Distinct branch sets from the builtin pool have distinct ranges.
pub fn range_injectivity(_: &SuiteConfig) -> Result<SuiteReport> {
    let depth = 10;
    let mut t = Tally::new("range-injectivity");
    let mut arena = Arena::new();
    let pool = branch_pool(4);
    let mut subsets: Vec<Vec<usize>> = vec![vec![]];
    for a in 0..pool.len() {
        subsets.push(vec![a]);
        for b in a + 1..pool.len() {
            subsets.push(vec![a, b]);
            for c in b + 1..pool.len() {
                subsets.push(vec![a, b, c]);
            }
        }
    }
    let mut sets = Vec::with_capacity(subsets.len());
    for s in &subsets {
        sets.push(BranchSet::new(&mut arena, s.iter().map(|&k| pool[k].clone()), depth)?);
    }
    let mut by_range: HashMap<Vec<BTreeSet<Elem>>, Vec<usize>> = HashMap::new();
    for (k, set) in sets.iter().enumerate() {
        by_range.entry(range(&mut arena, set, depth)?.levels).or_default().push(k);
    }
    let label = |k: usize| subsets[k].iter().map(|&m| pool[m].label()).collect::<Vec<_>>().join(",");
    for group in by_range.values() {
        for &other in &group[1..] {
            let same = sets[group[0]].same_members(&mut arena, &sets[other], depth)?;
            t.check(same, || format!("{{{}}} and {{{}}} share a range", label(group[0]), label(other)));
        }
        t.checks += 1;
    }
    Ok(t.finish())
}

/// `sigma_{k,j} ∘ sigma_{j,4} = sigma_{k,4}` on random level-4 elements.
pub fn functoriality(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("functoriality");
    let mut arena = Arena::new();
    let top = arena.level_elements(4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x66756e);
    for _ in 0..2000 {
        let a = *top.choose(&mut rng).unwrap();
        for j in 0..=4 {
            for k in 0..=j {
                let via = arena.connect(a, j)?;
                let lhs = arena.connect(via, k)?;
                let rhs = arena.connect(a, k)?;
                t.check(lhs == rhs, || format!("{} at {k} <= {j}", arena.display(a)));
            }
        }
    }
    Ok(t.finish())
}

/// `sigma_{j,i} p_i(x) = p_j(x)` and `p_n(x) ~_n x` for random systems.
pub fn projection_naturality(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("projection-naturality");
    let mut arena = Arena::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6e6174);
    for round in 0..200 {
        let sys = random_system(&mut rng, 20);
        let x = PointedSystem::new(sys.clone(), pick_state(&mut rng, &sys))?;
        let levels = arena.project_prefix(&x, 4);
        for i in 0..=4 {
            for j in 0..=i {
                let down = arena.connect(levels[i], j)?;
                t.check(down == levels[j], || format!("system #{round}: j = {j}, i = {i}"));
            }
            let back = arena.to_system(levels[i]);
            t.check(bisim_at(&back, &x, i), || format!("system #{round}: p_{i}(x) !~_{i} x"));
        }
    }
    Ok(t.finish())
}

/// `a ~>_i b` implies `sigma_{j,i} a ~>_j sigma_{pred j, pred i} b`.
pub fn transition_preservation(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("transition-preservation");
    let mut arena = Arena::new();
    for i in 0..=3 {
        for a in arena.level_elements(i)? {
            for b in arena.transitions(a) {
                for j in 0..=i {
                    let ca = arena.connect(a, j)?;
                    let cb = arena.connect(b, pred(j))?;
                    let ok = arena.transitions(ca).contains(&cb);
                    t.check(ok, || format!("{} ~> {} at j = {j}", arena.display(a), arena.display(b)));
                }
            }
        }
    }
    Ok(t.finish())
}

/// `p_n(v_n) = p_n(v_{n+1})` while `p_{n+1}` tells them apart.
pub fn non_injectivity(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("non-injectivity");
    let mut arena = Arena::new();
    for n in 0..=3 {
        let (a, b) = (von_neumann(n), von_neumann(n + 1));
        let low = arena.project(&a, n) == arena.project(&b, n);
        let high = arena.project(&a, n + 1) != arena.project(&b, n + 1);
        t.check(low && high, || format!("v{n}, v{}: equal at {n} = {low}, differ at {} = {high}", n + 1, n + 1));
    }
    Ok(t.finish())
}

/// For finite `x`: some successor is `~ y` iff for every `k` up to the
/// fixpoint some successor is `~_k y`.
pub fn successor_matching(config: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("successor-matching");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6d6174);
    for round in 0..300 {
        let sys = random_system(&mut rng, 12);
        let r = Refinement::compute(&sys);
        let x = pick_state(&mut rng, &sys);
        let y = pick_state(&mut rng, &sys);
        let succ = sys.successors(x);
        let exact = succ.iter().any(|&z| r.bisimilar(z, y));
        let top = r.fixpoint_round().expect("computed");
        let every_level = (0..=top + 1).all(|k| succ.iter().any(|&z| r.equivalent(z, y, k)));
        t.check(exact == every_level, || format!("system #{round}: x = s{x}, y = s{y}"));
    }
    Ok(t.finish())
}

/// Successors of a finite-backed branch, computed from the backing's
/// successors and by testing candidates with `succ_check`, agree.
pub fn successor_completeness(config: &SuiteConfig) -> Result<SuiteReport> {
    let depth = 10;
    let mut t = Tally::new("successor-completeness");
    let mut arena = Arena::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x636f6d);
    for round in 0..100 {
        let sys = random_system(&mut rng, 15);
        let x = PointedSystem::new(sys.clone(), pick_state(&mut rng, &sys))?;
        let expected = exact_successors(&x);
        let a = branch_of(x.clone());
        let mut found = 0;
        for s in sys.states() {
            let candidate = branch_of(x.at(s));
            let v = succ_check(&mut arena, &a, &candidate, depth)?;
            let is_expected = expected.iter().any(|e| bisimilar(e.finite().unwrap(), &x.at(s)));
            t.check(v.exact == Some(is_expected), || format!("system #{round}: candidate s{s}"));
            if is_expected {
                t.check(matches!(v.probe, Probe::ConsistentUpTo(_)), || format!("system #{round}: probe fails for s{s}"));
                found += 1;
            }
        }
        // Each state bisimilar to a successor was found; at least one per class.
        t.check(found >= expected.len(), || format!("system #{round}: {found} < {}", expected.len()));
        if let Some(l) = sim_levels_collapse(&expected) {
            t.check(false, || format!("system #{round}: successors {l} repeat"));
        }
    }
    Ok(t.finish())
}

fn sim_levels_collapse(branches: &[OmegaBranch]) -> Option<String> {
    for (k, b) in branches.iter().enumerate() {
        for c in &branches[k + 1..] {
            if crate::bisim::sim_level(b.finite()?, c.finite()?).level == Level::Infinite {
                return Some(format!("{} / {}", b.label(), c.label()));
            }
        }
    }
    None
}

/// `beta`, zero padding and their composite are cofinal embeddings.
pub fn embeddings(_: &SuiteConfig) -> Result<SuiteReport> {
    let mut t = Tally::new("embeddings");
    let mut arena = Arena::new();
    for depth in 1..=6 {
        let r = verify_embedding(&mut beta_embedding(depth), &mut arena);
        t.check(r.ok(), || format!("beta at depth {depth}: {:?}", r.failure));
    }
    for subseq in [vec![0, 2, 4], vec![1, 2, 5], vec![0, 1, 2, 3]] {
        let mut pad = pad_embedding(&subseq)?;
        let mut target = complete_binary(Index::Finite(subseq.last().unwrap() + 1));
        let r = verify_embedding(&mut pad, &mut target);
        t.check(r.ok(), || format!("pad {subseq:?}: {:?}", r.failure));
        let top = *subseq.last().unwrap();
        if top < 5 {
            let middle = complete_binary(Index::Finite(top + 1));
            let mut both = compose(pad, middle, beta_embedding(top + 1));
            let r = verify_embedding(&mut both, &mut arena);
            t.check(r.ok(), || format!("beta after pad {subseq:?}: {:?}", r.failure));
        }
    }
    Ok(t.finish())
}
