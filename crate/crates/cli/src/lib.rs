//! Command-line front end. [`run`] takes the argument vector and writes to
//! the given streams, so the binary and the tests share one code path.
//!
//! Exit codes: 0 on success or PASS, 1 on FAIL (a witness is printed), 2 on
//! usage errors and guarded sizes.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand};
use finalchain::bisim::{bisim_at, sim_level, Level};
use finalchain::chain::{Arena, MAX_ENUMERABLE_LEVEL};
use finalchain::omega::{
    branch_eq, branch_of, exact_successors, konig_extract_range, konig_extract_successors, range, successor_channel,
    BranchSet, BranchVerdict, DEFAULT_DEPTH,
};
use finalchain::props::{run_suite, suite_names, SuiteConfig};
use finalchain::system::{builtin, AnySystem, PointedSystem};
use finalchain::trees::{
    beta_embedding, bits_encode, chain_to_dot, channel_to_dot, complete_binary, describe_embedding, pad_embedding,
    verify_embedding, BitString, Channel, Index,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] finalchain::Error),
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "finalchain", version, about = "Explore the final chain of the finite powerset functor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the elements of level n in canonical order.
    Levels {
        n: usize,
        /// Print only the number of elements.
        #[arg(long, conflicts_with = "json")]
        count: bool,
        /// Print a JSON array of element strings.
        #[arg(long)]
        json: bool,
    },
    /// Project a system (JSON file or builtin name) to level n.
    Project { system: String, n: usize },
    /// Compare two systems by bisimilarity, printing a witness on failure.
    Bisim {
        x: String,
        y: String,
        /// Check only the approximant at this level.
        #[arg(long)]
        level: Option<usize>,
    },
    /// Surjectivity and injectivity of the connecting map from level i to level j.
    Audit { j: usize, i: usize },
    /// Successors of a level element, or of a system's full branch.
    Succ {
        target: String,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Encode a bit string as a set of naturals.
    Encode { bits: String },
    /// König extraction from `range:<sys>,<sys>,...` or `succ:<sys>`.
    Konig {
        spec: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
    /// Describe a cofinal embedding as JSON.
    Embed(EmbedArgs),
    /// Run property suites.
    Props {
        /// Suite to run; repeatable. All suites when omitted.
        #[arg(long = "suite")]
        suites: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// List suite names and exit.
        #[arg(long, conflicts_with_all = ["suites", "seed", "samples"])]
        list: bool,
    },
    /// DOT for `binary:<len>`, `levels:<n>`, `range:<sys>,...`, `succ:<sys>`, or a system.
    Dot {
        object: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// `beta` or `pad`.
    kind: String,
    /// Source length for `beta`.
    #[arg(long, conflicts_with = "subseq")]
    depth: Option<usize>,
    /// Strictly increasing positions for `pad`, comma separated.
    #[arg(long, value_delimiter = ',')]
    subseq: Option<Vec<usize>>,
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Levels { n, count, json } => levels(n, count, json, out),
        Command::Project { system, n } => project(&system, n, out),
        Command::Bisim { x, y, level } => bisim(&x, &y, level, out),
        Command::Audit { j, i } => audit(j, i, out),
        Command::Succ { target, depth } => succ(&target, depth, out),
        Command::Encode { bits } => encode(&bits, out),
        Command::Konig { spec, depth } => konig(&spec, depth, out),
        Command::Embed(args) => embed(args, out, err),
        Command::Props { suites, seed, samples, list } => props(suites, SuiteConfig { seed, samples }, list, out, err),
        Command::Dot { object, depth } => dot(&object, depth, out),
    }
}

/// A system argument: a JSON file when the path exists or ends in `.json`,
/// otherwise a builtin name.
pub fn load_system(arg: &str) -> Result<AnySystem> {
    if arg.ends_with(".json") || Path::new(arg).is_file() {
        let text =
            std::fs::read_to_string(arg).map_err(|source| CliError::Read { path: arg.to_string(), source })?;
        return Ok(PointedSystem::parse_json(&text)?.into());
    }
    Ok(builtin(arg)?)
}

fn load_finite(arg: &str) -> Result<PointedSystem> {
    match load_system(arg)? {
        AnySystem::Finite(x) => Ok(x),
        AnySystem::Gen(g) => Err(CliError::Usage(format!("`{}` is infinitely branching; a finite system is needed", g.label()))),
    }
}

fn levels(n: usize, count: bool, json: bool, out: &mut dyn Write) -> Result<i32> {
    let mut arena = Arena::new();
    if count {
        writeln!(out, "{}", arena.enumerate(n)?.count())?;
        return Ok(0);
    }
    let elems = arena.level_elements(n)?;
    let strings: Vec<String> = elems.iter().map(|&e| arena.display(e)).collect();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&strings).expect("strings serialize"))?;
    } else {
        for s in strings {
            writeln!(out, "{s}")?;
        }
    }
    Ok(0)
}

fn project(system: &str, n: usize, out: &mut dyn Write) -> Result<i32> {
    let x = load_system(system)?;
    let mut arena = Arena::new();
    let e = arena.project_any(&x, n)?;
    writeln!(out, "{}", arena.display(e))?;
    Ok(0)
}

fn bisim(x: &str, y: &str, level: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let (a, b) = (load_system(x)?, load_system(y)?);
    let (a, b) = match (a, b) {
        (AnySystem::Finite(a), AnySystem::Finite(b)) => (a, b),
        (a, b) => return bisim_probed(a, b, level.unwrap_or(DEFAULT_DEPTH), out),
    };
    let verdict = sim_level(&a, &b);
    if let Some(k) = level {
        if bisim_at(&a, &b, k) {
            writeln!(out, "equivalent at level {k}")?;
            return Ok(0);
        }
    }
    match (verdict.level, &verdict.witness) {
        (Level::Infinite, _) => {
            writeln!(out, "bisimilar")?;
            Ok(0)
        }
        (Level::Finite(k), Some(w)) => {
            writeln!(out, "distinguished at level {k}")?;
            write!(out, "{}", w.render(&verdict.joint.system))?;
            Ok(1)
        }
        (Level::Finite(_), None) => unreachable!("finite separation always carries a witness"),
    }
}

fn bisim_probed(a: AnySystem, b: AnySystem, depth: usize, out: &mut dyn Write) -> Result<i32> {
    let mut arena = Arena::new();
    let (ba, bb) = (branch_of(a), branch_of(b));
    match branch_eq(&mut arena, &ba, &bb, depth)? {
        BranchVerdict::Equal => {
            writeln!(out, "bisimilar")?;
            Ok(0)
        }
        BranchVerdict::EqualUpTo(d) => {
            writeln!(out, "equivalent through level {d} (not decided beyond)")?;
            Ok(0)
        }
        BranchVerdict::DistinguishedAt(k) => {
            writeln!(out, "distinguished at level {k}")?;
            for b in [&ba, &bb] {
                let e = b.level(&mut arena, k)?;
                writeln!(out, "  {}: {}", b.label(), arena.display(e))?;
            }
            Ok(1)
        }
    }
}

fn audit(j: usize, i: usize, out: &mut dyn Write) -> Result<i32> {
    let mut arena = Arena::new();
    let report = arena.audit(j, i)?;
    let verified = report.verify(&mut arena)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json(&arena)).expect("audit serializes"))?;
    Ok(if verified { 0 } else { 1 })
}

fn succ(target: &str, depth: usize, out: &mut dyn Write) -> Result<i32> {
    let trimmed = target.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('(') {
        let mut arena = Arena::new();
        let a = arena.parse(target)?;
        for b in arena.transitions(a) {
            writeln!(out, "{}", arena.display(b))?;
        }
        return Ok(0);
    }
    if depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let x = load_system(target)?;
    let mut arena = Arena::new();
    let top = arena.project_any(&x, depth)?;
    if let AnySystem::Finite(p) = &x {
        writeln!(out, "{} successor branches (exact)", exact_successors(p).len())?;
    }
    writeln!(out, "level {} values of successors:", depth - 1)?;
    for &b in arena.children(top) {
        writeln!(out, "{}", arena.display(b))?;
    }
    Ok(0)
}

fn encode(bits: &str, out: &mut dyn Write) -> Result<i32> {
    let c: BitString = bits.parse()?;
    writeln!(out, "{}", set_text(&bits_encode(&c)))?;
    Ok(0)
}

fn set_text(set: &BTreeSet<usize>) -> String {
    let items: Vec<String> = set.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

enum ChannelSpec {
    Range(Vec<AnySystem>),
    Succ(AnySystem),
}

fn channel_spec(spec: &str) -> Result<ChannelSpec> {
    if let Some(list) = spec.strip_prefix("range:") {
        let members = split_systems(list).iter().map(|s| load_system(s)).collect::<Result<Vec<_>>>()?;
        if members.is_empty() {
            return Err(CliError::Usage("range needs at least one system".into()));
        }
        return Ok(ChannelSpec::Range(members));
    }
    if let Some(sys) = spec.strip_prefix("succ:") {
        return Ok(ChannelSpec::Succ(load_system(sys)?));
    }
    Err(CliError::Usage(format!("channel spec must be `range:<sys>,...` or `succ:<sys>`, got `{spec}`")))
}

/// Splits on commas outside braces, so `vset:{0,2}` stays whole.
fn split_systems(list: &str) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut depth = 0usize;
    for ch in list.chars() {
        match ch {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(String::new());
                continue;
            }
            _ => {}
        }
        parts.last_mut().expect("nonempty").push(ch);
    }
    parts.into_iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

fn konig(spec: &str, depth: usize, out: &mut dyn Write) -> Result<i32> {
    let mut arena = Arena::new();
    match channel_spec(spec)? {
        ChannelSpec::Range(members) => {
            let set = BranchSet::new(&mut arena, members.into_iter().map(branch_of), depth)?;
            let picked = konig_extract_range(&mut arena, &set, depth)?;
            let mut member = false;
            for m in set.members() {
                if branch_eq(&mut arena, m, &picked, depth)?.decided() != Some(false) {
                    member = true;
                }
            }
            writeln!(out, "extracted {}", picked.label())?;
            if !member {
                writeln!(out, "FAIL: extracted branch is not a member")?;
                return Ok(1);
            }
            writeln!(out, "member of the set: yes")?;
        }
        ChannelSpec::Succ(x) => {
            let picked = konig_extract_successors(&mut arena, &x, depth)?;
            writeln!(out, "extracted {} through level {depth}", picked.label())?;
            for (i, s) in picked.display(&mut arena, depth)?.iter().enumerate() {
                writeln!(out, "  b_{i} = {s}")?;
            }
            if !picked.is_coherent(&mut arena, depth)? {
                writeln!(out, "FAIL: extracted levels are not coherent")?;
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn embed(args: EmbedArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (json, report) = match args.kind.as_str() {
        "beta" => {
            let depth = args.depth.ok_or_else(|| CliError::Usage("`embed beta` needs --depth".into()))?;
            if depth == 0 || depth > 8 {
                return Err(CliError::Usage("--depth must lie in 1..=8".into()));
            }
            let mut arena = Arena::new();
            let mut e = beta_embedding(depth);
            (describe_embedding(&mut e, &mut arena), verify_embedding(&mut e, &mut arena))
        }
        "pad" => {
            let subseq = args.subseq.ok_or_else(|| CliError::Usage("`embed pad` needs --subseq".into()))?;
            let mut e = pad_embedding(&subseq)?;
            let top = *subseq.last().expect("pad_embedding rejects empty");
            if top > 12 {
                return Err(CliError::Usage("pad positions must not exceed 12".into()));
            }
            let mut target = complete_binary(Index::Finite(top + 1));
            (describe_embedding(&mut e, &mut target), verify_embedding(&mut e, &mut target))
        }
        other => return Err(CliError::Usage(format!("unknown embedding `{other}`; use `beta` or `pad`"))),
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&json).expect("embedding serializes"))?;
    if let Some(failure) = report.failure {
        writeln!(err, "FAIL: {failure}")?;
        return Ok(1);
    }
    Ok(0)
}

fn props(
    suites: Vec<String>,
    config: SuiteConfig,
    list: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    if list {
        for name in suite_names() {
            writeln!(out, "{name}")?;
        }
        return Ok(0);
    }
    let names: Vec<String> = if suites.is_empty() { suite_names().map(String::from).collect() } else { suites };
    if let Some(bad) = names.iter().find(|n| !suite_names().any(|s| s == n.as_str())) {
        return Err(CliError::Usage(format!("unknown suite `{bad}`; try `props --list`")));
    }
    let mut code = 0;
    for name in &names {
        let report = run_suite(name, &config).expect("name checked")?;
        // Timing goes to stderr so stdout stays deterministic for a seed.
        writeln!(err, "{name}: {:.3?}", report.elapsed)?;
        if report.passed() {
            writeln!(out, "PASS {name} ({} checks)", report.checks)?;
        } else {
            code = 1;
            writeln!(out, "FAIL {name} ({} of {} checks failed)", report.failure_count, report.checks)?;
            for w in &report.failures {
                writeln!(out, "  witness: {w}")?;
            }
        }
    }
    Ok(code)
}

fn dot(object: &str, depth: usize, out: &mut dyn Write) -> Result<i32> {
    let text = if let Some(len) = object.strip_prefix("binary:") {
        let len: usize = len.parse().map_err(|_| CliError::Usage(format!("bad length in `{object}`")))?;
        if len > 8 {
            return Err(CliError::Usage("binary trees are drawn up to length 8".into()));
        }
        chain_to_dot(&mut complete_binary(Index::Finite(len + 1)), 0, None)
    } else if let Some(n) = object.strip_prefix("levels:") {
        let n: usize = n.parse().map_err(|_| CliError::Usage(format!("bad level in `{object}`")))?;
        if n >= MAX_ENUMERABLE_LEVEL {
            return Err(CliError::Usage(format!("levels are drawn up to {}", MAX_ENUMERABLE_LEVEL - 1)));
        }
        let mut arena = Arena::new();
        let levels = (0..=n)
            .map(|i| Ok(arena.level_elements(i)?.into_iter().collect()))
            .collect::<Result<Vec<BTreeSet<_>>>>()?;
        channel_to_dot(&mut arena, &Channel { index: Index::Finite(n + 1), levels })
    } else if object.starts_with("range:") || object.starts_with("succ:") {
        let mut arena = Arena::new();
        let channel = match channel_spec(object)? {
            ChannelSpec::Range(members) => {
                let set = BranchSet::new(&mut arena, members.into_iter().map(branch_of), DEFAULT_DEPTH)?;
                range(&mut arena, &set, depth)?
            }
            ChannelSpec::Succ(x) => successor_channel(&mut arena, &x, depth)?,
        };
        channel_to_dot(&mut arena, &channel)
    } else {
        system_dot(&load_finite(object)?.reachable())
    };
    write!(out, "{text}")?;
    Ok(0)
}

fn system_dot(x: &PointedSystem) -> String {
    let sys = x.system();
    let mut out = String::from("digraph system {\n  node [shape=circle];\n");
    for s in sys.states() {
        let shape = if s == x.root() { ", shape=doublecircle" } else { "" };
        let _ = writeln!(out, "  s{s} [label=\"{}\"{shape}];", sys.name(s).replace('"', "\\\""));
    }
    for s in sys.states() {
        for &t in sys.successors(s) {
            let _ = writeln!(out, "  s{s} -> s{t};");
        }
    }
    out.push_str("}\n");
    out
}
