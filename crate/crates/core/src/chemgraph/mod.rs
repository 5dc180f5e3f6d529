//! Chemical-graph data model: element table, labeled multigraph of atoms and
//! bonds, and hydrogen suppression.

mod json;
mod sdf;

pub use json::parse_graph_json;
pub(crate) use sdf::{parse_record as parse_sdf_record, split_records as sdf_records};
pub use sdf::{parse_sdf, write_sdf, write_sdf_record};

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One row of the compiled-in element table.
struct ElementRow {
    symbol: &'static str,
    /// Valence variant; equals the valence (an element used with valence `i`
    /// is written `a_(i)`, the suffix being dropped when unique).
    variant: u8,
    /// Integer mass in 0.1 Da units: floor(10 * standard atomic mass).
    mass_times_ten: u32,
}

/// Rows are sorted lexicographically by (symbol, variant) so the index order
/// doubles as the total order on elements used everywhere downstream.
const ELEMENT_TABLE: &[ElementRow] = &[
    ElementRow {
        symbol: "C",
        variant: 4,
        mass_times_ten: 120,
    },
    ElementRow {
        symbol: "Cl",
        variant: 1,
        mass_times_ten: 354,
    },
    ElementRow {
        symbol: "F",
        variant: 1,
        mass_times_ten: 190,
    },
    ElementRow {
        symbol: "H",
        variant: 1,
        mass_times_ten: 10,
    },
    ElementRow {
        symbol: "N",
        variant: 3,
        mass_times_ten: 140,
    },
    ElementRow {
        symbol: "O",
        variant: 2,
        mass_times_ten: 160,
    },
    ElementRow {
        symbol: "P",
        variant: 5,
        mass_times_ten: 309,
    },
    ElementRow {
        symbol: "S",
        variant: 2,
        mass_times_ten: 320,
    },
    ElementRow {
        symbol: "S",
        variant: 4,
        mass_times_ten: 320,
    },
    ElementRow {
        symbol: "S",
        variant: 6,
        mass_times_ten: 320,
    },
    ElementRow {
        symbol: "Si",
        variant: 4,
        mass_times_ten: 280,
    },
];

/// A valence-typed chemical element, e.g. `C`, `O`, `S_(6)`.
///
/// Two elements are equal iff (symbol, variant) are equal. The derived `Ord`
/// follows the table order, which is lexicographic on (symbol, variant).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

impl Element {
    pub const HYDROGEN: Element = Element(3);
    pub const CARBON: Element = Element(0);
    pub const OXYGEN: Element = Element(5);
    pub const NITROGEN: Element = Element(4);

    /// Looks up an element by symbol and optional valence variant.
    ///
    /// When `variant` is `None` the element must have a unique valence in the
    /// table (so `S` requires an explicit variant).
    pub fn lookup(symbol: &str, variant: Option<u8>) -> Result<Element> {
        let matches: Vec<usize> = ELEMENT_TABLE
            .iter()
            .enumerate()
            .filter(|(_, r)| r.symbol == symbol)
            .map(|(i, _)| i)
            .collect();
        if matches.is_empty() {
            return Err(Error::InvalidGraph(format!(
                "unknown element symbol {symbol:?}"
            )));
        }
        match variant {
            Some(v) => matches
                .iter()
                .copied()
                .find(|&i| ELEMENT_TABLE[i].variant == v)
                .map(Element::from_index)
                .ok_or_else(|| {
                    Error::InvalidGraph(format!("element {symbol} has no valence variant {v}"))
                }),
            None if matches.len() == 1 => Ok(Element::from_index(matches[0])),
            None => Err(Error::InvalidGraph(format!(
                "element {symbol} has multiple valence variants; one must be given"
            ))),
        }
    }

    /// Smallest variant of `symbol` whose valence is at least `need`; used to
    /// resolve multi-valence elements when materializing implicit hydrogens.
    pub fn lookup_at_least(symbol: &str, need: u32) -> Result<Element> {
        let mut any = false;
        for (i, r) in ELEMENT_TABLE.iter().enumerate() {
            if r.symbol == symbol {
                any = true;
                if u32::from(r.variant) >= need {
                    return Ok(Element::from_index(i));
                }
            }
        }
        if any {
            Err(Error::InvalidGraph(format!(
                "valence overflow: {symbol} cannot carry bond order sum {need}"
            )))
        } else {
            Err(Error::InvalidGraph(format!(
                "unknown element symbol {symbol:?}"
            )))
        }
    }

    fn from_index(i: usize) -> Element {
        Element(i as u8)
    }

    fn row(self) -> &'static ElementRow {
        &ELEMENT_TABLE[self.0 as usize]
    }

    pub fn symbol(self) -> &'static str {
        self.row().symbol
    }

    pub fn variant(self) -> u8 {
        self.row().variant
    }

    pub fn valence(self) -> u8 {
        // By construction the variant is the valence.
        self.row().variant
    }

    pub fn mass_times_ten(self) -> u32 {
        self.row().mass_times_ten
    }

    pub fn is_hydrogen(self) -> bool {
        self == Element::HYDROGEN
    }

    fn has_unique_valence(self) -> bool {
        ELEMENT_TABLE
            .iter()
            .filter(|r| r.symbol == self.symbol())
            .count()
            == 1
    }

    /// All table entries in the fixed total order.
    pub fn all() -> impl Iterator<Item = Element> {
        (0..ELEMENT_TABLE.len()).map(Element::from_index)
    }

    /// Parses the `Display` form: symbol, then the variant digit for
    /// multi-valence elements (e.g. `C`, `Si`, `S4`).
    pub fn parse_token(token: &str) -> Result<Element> {
        let sym_len = token
            .chars()
            .take_while(|c| c.is_ascii_alphabetic())
            .count();
        let (sym, rest) = token.split_at(sym_len);
        if rest.is_empty() {
            Element::lookup(sym, None)
        } else {
            let v: u8 = rest
                .parse()
                .map_err(|_| Error::InvalidGraph(format!("bad element token {token:?}")))?;
            Element::lookup(sym, Some(v))
        }
    }
}

impl fmt::Display for Element {
    /// Symbol, with the variant appended when the element has several
    /// valences in the table: `C`, `O`, `S2`, `S6`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.has_unique_valence() {
            write!(f, "{}", self.symbol())
        } else {
            write!(f, "{}{}", self.symbol(), self.variant())
        }
    }
}

impl Serialize for Element {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            element: &'a str,
            variant: u8,
        }
        Repr {
            element: self.symbol(),
            variant: self.variant(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Element {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Element, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            element: String,
            variant: Option<u8>,
        }
        let r = Repr::deserialize(d)?;
        Element::lookup(&r.element, r.variant).map_err(D::Error::custom)
    }
}

/// A bond between two atoms with multiplicity 1..=3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub u: usize,
    pub v: usize,
    pub order: u8,
}

/// A chemical graph: simple, connected, with explicit hydrogens.
///
/// Vertex ids are dense indices into `atoms`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ChemicalGraph {
    name: String,
    atoms: Vec<Element>,
    bonds: Vec<Bond>,
    adj: Vec<Vec<(usize, u8)>>,
}

impl ChemicalGraph {
    pub fn new(name: impl Into<String>, atoms: Vec<Element>, bonds: Vec<Bond>) -> Result<Self> {
        let name = name.into();
        let n = atoms.len();
        if n == 0 {
            return Err(Error::InvalidGraph(format!("{name}: empty molecule")));
        }
        let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::new();
        for b in &bonds {
            if b.u >= n || b.v >= n {
                return Err(Error::InvalidGraph(format!(
                    "{name}: bond ({}, {}) references a vertex out of range",
                    b.u, b.v
                )));
            }
            if b.u == b.v {
                return Err(Error::InvalidGraph(format!(
                    "{name}: self-loop at vertex {}",
                    b.u
                )));
            }
            if !(1..=3).contains(&b.order) {
                return Err(Error::InvalidGraph(format!(
                    "{name}: bond multiplicity {} out of range [1,3]",
                    b.order
                )));
            }
            let key = (b.u.min(b.v), b.u.max(b.v));
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!(
                    "{name}: duplicate bond between {} and {}",
                    b.u, b.v
                )));
            }
            adj[b.u].push((b.v, b.order));
            adj[b.v].push((b.u, b.order));
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let g = ChemicalGraph {
            name,
            atoms,
            bonds,
            adj,
        };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        for (v, &el) in self.atoms.iter().enumerate() {
            let bsum: u32 = self.adj[v].iter().map(|&(_, m)| u32::from(m)).sum();
            if bsum > u32::from(el.valence()) {
                return Err(Error::InvalidGraph(format!(
                    "{}: vertex {v} ({el}) has bond order sum {bsum} > valence {}",
                    self.name,
                    el.valence()
                )));
            }
            if el.is_hydrogen() && self.adj[v].len() != 1 {
                return Err(Error::InvalidGraph(format!(
                    "{}: hydrogen vertex {v} has degree {} (must be 1)",
                    self.name,
                    self.adj[v].len()
                )));
            }
        }
        // Connectivity.
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != n {
            return Err(Error::InvalidGraph(format!(
                "{}: graph is disconnected",
                self.name
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn element(&self, v: usize) -> Element {
        self.atoms[v]
    }

    pub fn atoms(&self) -> &[Element] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, u8)] {
        &self.adj[v]
    }

    pub fn n_heavy(&self) -> usize {
        self.atoms.iter().filter(|a| !a.is_hydrogen()).count()
    }

    /// Total mass* of the molecule, hydrogens included, in 0.1 Da units.
    pub fn mass_star(&self) -> u64 {
        mass_star_sum(self.atoms.iter().copied())
    }
}

/// Sum of mass* over a set of elements, in 0.1 Da units.
pub fn mass_star_sum(elements: impl IntoIterator<Item = Element>) -> u64 {
    elements
        .into_iter()
        .map(|e| u64::from(e.mass_times_ten()))
        .sum()
}

/// Hydrogen-suppressed view of a chemical graph.
///
/// Vertices are re-indexed densely over the non-hydrogen atoms, in the order
/// they appear in the base graph.
#[derive(Debug)]
pub struct HydrogenSuppressedGraph<'g> {
    base: &'g ChemicalGraph,
    /// Original vertex id of each kept vertex.
    kept: Vec<usize>,
    /// Number of hydrogens removed from each kept vertex.
    implicit_h: Vec<u32>,
    adj: Vec<Vec<(usize, u8)>>,
    edges: Vec<(usize, usize, u8)>,
}

/// Removes hydrogen vertices, recording per-vertex implicit H counts.
///
/// Fails when a kept vertex would have suppressed degree > 4.
pub fn suppress_hydrogens(g: &ChemicalGraph) -> Result<HydrogenSuppressedGraph<'_>> {
    let mut index = vec![usize::MAX; g.n_atoms()];
    let mut kept = Vec::new();
    for v in 0..g.n_atoms() {
        if !g.element(v).is_hydrogen() {
            index[v] = kept.len();
            kept.push(v);
        }
    }
    let mut implicit_h = vec![0u32; kept.len()];
    let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); kept.len()];
    let mut edges = Vec::new();
    for (i, &v) in kept.iter().enumerate() {
        for &(w, m) in g.neighbors(v) {
            if g.element(w).is_hydrogen() {
                implicit_h[i] += 1;
            } else {
                let j = index[w];
                adj[i].push((j, m));
                if i < j {
                    edges.push((i, j, m));
                }
            }
        }
    }
    for (i, a) in adj.iter().enumerate() {
        if a.len() > 4 {
            return Err(Error::InvalidGraph(format!(
                "{}: atom {} ({}) has {} non-hydrogen neighbors (max 4)",
                g.name(),
                kept[i],
                g.element(kept[i]),
                a.len()
            )));
        }
    }
    Ok(HydrogenSuppressedGraph {
        base: g,
        kept,
        implicit_h,
        adj,
        edges,
    })
}

impl<'g> HydrogenSuppressedGraph<'g> {
    pub fn base(&self) -> &'g ChemicalGraph {
        self.base
    }

    pub fn n(&self) -> usize {
        self.kept.len()
    }

    pub fn element(&self, v: usize) -> Element {
        self.base.element(self.kept[v])
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, u8)] {
        &self.adj[v]
    }

    /// Edges (u, v, multiplicity) with u < v.
    pub fn edges(&self) -> &[(usize, usize, u8)] {
        &self.edges
    }

    pub fn implicit_h(&self, v: usize) -> u32 {
        self.implicit_h[v]
    }

    pub fn original_id(&self, v: usize) -> usize {
        self.kept[v]
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].iter().any(|&(w, _)| w == v)
    }

    /// Cyclomatic rank |E| - |V| + 1 of the (connected) suppressed graph.
    pub fn rank(&self) -> usize {
        self.edges.len() + 1 - self.n()
    }
}

/// Resolves an element symbol and fills implicit hydrogens so that every
/// heavy atom's bond order sum reaches its valence. Shared by the SDF and
/// JSON parsers.
fn materialize_hydrogens(
    name: &str,
    mut atoms: Vec<Element>,
    mut bonds: Vec<Bond>,
) -> Result<ChemicalGraph> {
    let n = atoms.len();
    let mut bsum = vec![0u32; n];
    for b in &bonds {
        if b.u >= n || b.v >= n {
            return Err(Error::InvalidGraph(format!(
                "{name}: bond ({}, {}) references a vertex out of range",
                b.u, b.v
            )));
        }
        bsum[b.u] += u32::from(b.order);
        bsum[b.v] += u32::from(b.order);
    }
    for v in 0..n {
        let el = atoms[v];
        if el.is_hydrogen() {
            continue;
        }
        let val = u32::from(el.valence());
        if bsum[v] > val {
            return Err(Error::InvalidGraph(format!(
                "{name}: vertex {v} ({el}) has bond order sum {} > valence {val}",
                bsum[v]
            )));
        }
        for _ in 0..(val - bsum[v]) {
            let h = atoms.len();
            atoms.push(Element::HYDROGEN);
            bonds.push(Bond {
                u: v,
                v: h,
                order: 1,
            });
        }
    }
    ChemicalGraph::new(name, atoms, bonds)
}
