//! JSON graph input: `{"name": ..., "atoms": [{"element": "S", "variant": 6},
//! ...], "bonds": [[i, j, m], ...]}`. Hydrogens are materialized exactly as
//! for SDF input.

use serde::Deserialize;

use crate::error::{Error, Result};

use super::{materialize_hydrogens, Bond, ChemicalGraph, Element};

#[derive(Deserialize)]
struct GraphJson {
    #[serde(default)]
    name: String,
    atoms: Vec<AtomJson>,
    bonds: Vec<(usize, usize, u8)>,
}

#[derive(Deserialize)]
struct AtomJson {
    element: String,
    variant: Option<u8>,
}

/// Parses a single chemical graph from its JSON form.
pub fn parse_graph_json(text: &str) -> Result<ChemicalGraph> {
    let raw: GraphJson = serde_json::from_str(text).map_err(|e| Error::GraphJson(e.to_string()))?;
    let mut bsum = vec![0u32; raw.atoms.len()];
    for &(u, v, m) in &raw.bonds {
        if u >= raw.atoms.len() || v >= raw.atoms.len() {
            return Err(Error::GraphJson(format!(
                "bond ({u}, {v}) references a vertex out of range"
            )));
        }
        bsum[u] += u32::from(m);
        bsum[v] += u32::from(m);
    }
    let mut atoms = Vec::with_capacity(raw.atoms.len());
    for (i, a) in raw.atoms.iter().enumerate() {
        let el = match a.variant {
            Some(v) => Element::lookup(&a.element, Some(v))?,
            // Variant defaults to the unique valence; multi-valence elements
            // resolve to the smallest variant that fits the bonds.
            None => Element::lookup_at_least(&a.element, bsum[i])?,
        };
        atoms.push(el);
    }
    let name = if raw.name.is_empty() {
        "unnamed".to_string()
    } else {
        raw.name
    };
    let bonds = raw
        .bonds
        .into_iter()
        .map(|(u, v, m)| Bond { u, v, order: m })
        .collect();
    materialize_hydrogens(&name, atoms, bonds)
}
