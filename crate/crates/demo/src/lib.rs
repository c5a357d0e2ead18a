//! Browser bindings. Every export takes and returns plain strings (JSON for
//! structured results) so the page needs no generated glue beyond
//! wasm-bindgen's own.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use finalchain::bisim::{sim_level, Level};
use finalchain::chain::Arena;
use finalchain::system::{builtin, von_set, AnySystem, PointedSystem};
use finalchain::trees::{bits_encode, BitString};

/// Largest level the page will project to; strings grow fast beyond this.
const MAX_PAGE_LEVEL: usize = 8;

fn finite(name: &str) -> Result<PointedSystem, String> {
    match builtin(name).map_err(|e| e.to_string())? {
        AnySystem::Finite(x) => Ok(x),
        AnySystem::Gen(_) => Err(format!("`{name}` is infinitely branching; pick a finite system")),
    }
}

#[derive(Serialize)]
struct Comparison {
    bisimilar: bool,
    level: Option<usize>,
    witness: Option<String>,
}

/// Compares two builtin systems. On separation the result carries the level
/// and the attacker's strategy as text.
#[wasm_bindgen]
pub fn compare(x: &str, y: &str) -> Result<String, String> {
    let (a, b) = (finite(x)?, finite(y)?);
    let verdict = sim_level(&a, &b);
    let result = match verdict.level {
        Level::Infinite => Comparison { bisimilar: true, level: None, witness: None },
        Level::Finite(k) => Comparison {
            bisimilar: false,
            level: Some(k),
            witness: verdict.witness.as_ref().map(|w| w.render(&verdict.joint.system)),
        },
    };
    Ok(serde_json::to_string(&result).expect("comparison serializes"))
}

/// Projections `p_0 .. p_n` of a builtin system, as a JSON array of strings.
#[wasm_bindgen]
pub fn projections(name: &str, n: usize) -> Result<String, String> {
    if n > MAX_PAGE_LEVEL {
        return Err(format!("levels above {MAX_PAGE_LEVEL} are not shown here"));
    }
    let x = builtin(name).map_err(|e| e.to_string())?;
    let mut arena = Arena::new();
    let levels = (0..=n)
        .map(|k| arena.project_any(&x, k).map(|e| arena.display(e)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&levels).expect("strings serialize"))
}

#[derive(Serialize)]
struct Encoding {
    set: Vec<usize>,
    /// `(prefix, image of the prefix)` for every prefix length.
    images: Vec<(String, String)>,
}

/// The set encoding of a bit string and the images of all its prefixes
/// under the embedding of the binary tree into the chain.
#[wasm_bindgen]
pub fn encode(bits: &str) -> Result<String, String> {
    let c: BitString = bits.trim().parse().map_err(|e: finalchain::Error| e.to_string())?;
    if c.len() >= MAX_PAGE_LEVEL {
        return Err(format!("bit strings are limited to {} bits here", MAX_PAGE_LEVEL - 1));
    }
    let mut arena = Arena::new();
    let images = (0..=c.len())
        .map(|j| {
            let prefix = c.prefix(j);
            let e = arena.project(&von_set(&bits_encode(&prefix)), j + 1);
            (prefix.to_string(), arena.display(e))
        })
        .collect();
    let set = bits_encode(&c).into_iter().collect();
    Ok(serde_json::to_string(&Encoding { set, images }).expect("encoding serializes"))
}
