//! Canonical forms for labeled chemical rooted trees (fringe trees).
//!
//! The code is an AHU-style bottom-up form: each vertex renders as its
//! element token plus an `H` count, followed by its child codes wrapped in
//! parentheses with the bond multiplicity as prefix, children sorted by their
//! rendered string. Two rooted chemical trees are rooted-isomorphic iff their
//! codes are string-equal, and string order doubles as the total order used
//! for dictionary encodings.

use std::collections::BTreeMap;

use crate::chemgraph::{ChemicalGraph, Element};
use crate::error::{Error, Result};

/// A rooted chemical tree with hydrogens folded into per-vertex counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    pub element: Element,
    pub h_count: u8,
    /// (bond multiplicity to child, child subtree)
    pub children: Vec<(u8, RootedTree)>,
}

impl RootedTree {
    pub fn leaf(element: Element, h_count: u8) -> RootedTree {
        RootedTree {
            element,
            h_count,
            children: Vec::new(),
        }
    }

    /// Extracts the rooted tree spanned by `vertices` of `g`, rooted at
    /// `root`. Hydrogen neighbors of every selected vertex are folded in as
    /// counts. Fails if the selected fragment contains a cycle.
    pub fn from_graph(g: &ChemicalGraph, root: usize, vertices: &[usize]) -> Result<RootedTree> {
        let mut selected = vec![false; g.n_atoms()];
        for &v in vertices {
            selected[v] = true;
        }
        if !selected.get(root).copied().unwrap_or(false) {
            return Err(Error::InvalidGraph(
                "root missing from fringe-tree fragment".into(),
            ));
        }
        let mut visited = vec![false; g.n_atoms()];
        let tree = build_subtree(g, root, usize::MAX, &selected, &mut visited)?;
        for &v in vertices {
            if !visited[v] && !g.element(v).is_hydrogen() {
                return Err(Error::InvalidGraph(
                    "fringe-tree fragment is not connected through selected vertices".into(),
                ));
            }
        }
        Ok(tree)
    }

    fn render(&self, out: &mut String) {
        out.push_str(&self.element.to_string());
        match self.h_count {
            0 => {}
            1 => out.push('H'),
            h => {
                out.push('H');
                out.push_str(&h.to_string());
            }
        }
        let mut parts: Vec<String> = self
            .children
            .iter()
            .map(|(m, c)| {
                let mut s = String::new();
                s.push('(');
                s.push((b'0' + m) as char);
                c.render(&mut s);
                s.push(')');
                s
            })
            .collect();
        parts.sort();
        for p in parts {
            out.push_str(&p);
        }
    }

    fn mass_star(&self) -> u64 {
        u64::from(self.element.mass_times_ten())
            + u64::from(self.h_count) * u64::from(Element::HYDROGEN.mass_times_ten())
            + self
                .children
                .iter()
                .map(|(_, c)| c.mass_star())
                .sum::<u64>()
    }

    /// Height over non-hydrogen vertices (root at 0).
    fn height(&self) -> u32 {
        self.children
            .iter()
            .map(|(_, c)| 1 + c.height())
            .max()
            .unwrap_or(0)
    }

    /// Bond order consumed at the root inside the tree (children + hydrogens).
    fn root_bond_sum(&self) -> u32 {
        u32::from(self.h_count)
            + self
                .children
                .iter()
                .map(|&(m, _)| u32::from(m))
                .sum::<u32>()
    }

    fn count_elements(&self, skip_self: bool, acc: &mut BTreeMap<Element, u32>) {
        if !skip_self {
            *acc.entry(self.element).or_insert(0) += 1;
        }
        if self.h_count > 0 {
            *acc.entry(Element::HYDROGEN).or_insert(0) += u32::from(self.h_count);
        }
        for (_, c) in &self.children {
            c.count_elements(false, acc);
        }
    }

    /// Leaf-edge adjacency configurations in the hydrogen-suppressed form of
    /// the tree: for each non-root vertex with no heavy children, the ordered
    /// tuple (leaf element, parent element, multiplicity).
    fn leaf_adjacencies(&self, acc: &mut BTreeMap<(Element, Element, u8), u32>) {
        for &(m, ref c) in &self.children {
            if c.children.is_empty() {
                *acc.entry((c.element, self.element, m)).or_insert(0) += 1;
            } else {
                c.leaf_adjacencies(acc);
            }
        }
    }

    /// Checks chemical validity: every non-root vertex must use its valence
    /// exactly; the root may leave valence free for interior bonds.
    fn validate(&self, is_root: bool) -> Result<()> {
        if is_root {
            let used = self.root_bond_sum();
            let val = u32::from(self.element.valence());
            if used > val {
                return Err(Error::InvalidGraph(format!(
                    "fringe-tree root {} uses bond order {used} > valence {val}",
                    self.element
                )));
            }
        }
        for &(m, ref c) in &self.children {
            let total = c.root_bond_sum() + u32::from(m);
            if total != u32::from(c.element.valence()) {
                return Err(Error::InvalidGraph(format!(
                    "fringe-tree vertex {} has bond order sum {total}, expected valence {}",
                    c.element,
                    c.element.valence()
                )));
            }
            c.validate(false)?;
        }
        Ok(())
    }
}

fn build_subtree(
    g: &ChemicalGraph,
    v: usize,
    parent: usize,
    selected: &[bool],
    visited: &mut [bool],
) -> Result<RootedTree> {
    if visited[v] {
        return Err(Error::InvalidGraph(
            "fringe-tree fragment contains a cycle".into(),
        ));
    }
    visited[v] = true;
    let mut h_count = 0u8;
    let mut children = Vec::new();
    for &(w, m) in g.neighbors(v) {
        if w == parent || !selected[w] {
            continue;
        }
        if g.element(w).is_hydrogen() {
            visited[w] = true;
            h_count += 1;
        } else {
            children.push((m, build_subtree(g, w, v, selected, visited)?));
        }
    }
    Ok(RootedTree {
        element: g.element(v),
        h_count,
        children,
    })
}

/// Canonical code of a rooted chemical tree plus cached aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalTreeCode {
    code: String,
    root_element: Element,
    root_degree_heavy: u32,
    /// Bond order consumed by the root inside the tree (hydrogens included).
    val_ex: u32,
    height: u32,
    mass_star: u64,
    heavy_non_root_count: u32,
    per_element_non_root_counts: BTreeMap<Element, u32>,
    leaf_adjacency_counts: BTreeMap<(Element, Element, u8), u32>,
    /// Ion valence; fixed 0, the model carries no charges.
    ion_valence: i32,
}

impl CanonicalTreeCode {
    pub fn code(&self) -> &str {
        &self.code
    }
    pub fn root_element(&self) -> Element {
        self.root_element
    }
    pub fn root_degree_heavy(&self) -> u32 {
        self.root_degree_heavy
    }
    pub fn val_ex(&self) -> u32 {
        self.val_ex
    }
    pub fn height(&self) -> u32 {
        self.height
    }
    pub fn mass_star(&self) -> u64 {
        self.mass_star
    }
    pub fn heavy_non_root_count(&self) -> u32 {
        self.heavy_non_root_count
    }
    pub fn non_root_count(&self, el: Element) -> u32 {
        self.per_element_non_root_counts
            .get(&el)
            .copied()
            .unwrap_or(0)
    }
    pub fn leaf_adjacency_counts(&self) -> &BTreeMap<(Element, Element, u8), u32> {
        &self.leaf_adjacency_counts
    }
    pub fn ion_valence(&self) -> i32 {
        self.ion_valence
    }
}

impl std::fmt::Display for CanonicalTreeCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.code)
    }
}

/// Computes the canonical code and aggregates of a rooted chemical tree.
pub fn canonicalize(tree: &RootedTree) -> CanonicalTreeCode {
    let mut code = String::new();
    tree.render(&mut code);
    let mut per_element = BTreeMap::new();
    tree.count_elements(true, &mut per_element);
    let heavy_non_root = per_element
        .iter()
        .filter(|(el, _)| !el.is_hydrogen())
        .map(|(_, c)| *c)
        .sum::<u32>();
    let mut leaf_acc = BTreeMap::new();
    tree.leaf_adjacencies(&mut leaf_acc);
    CanonicalTreeCode {
        code,
        root_element: tree.element,
        root_degree_heavy: tree.children.len() as u32,
        val_ex: tree.root_bond_sum(),
        height: tree.height(),
        mass_star: tree.mass_star(),
        heavy_non_root_count: heavy_non_root,
        per_element_non_root_counts: per_element,
        leaf_adjacency_counts: leaf_acc,
        ion_valence: 0,
    }
}

/// True iff the two rooted trees are rooted-isomorphic.
pub fn codes_equal_under_rooted_isomorphism(t1: &RootedTree, t2: &RootedTree) -> bool {
    canonicalize(t1).code == canonicalize(t2).code
}

/// Parses a canonical code back into a rooted tree, validating valences and
/// requiring the input to be in canonical form.
pub fn parse_code(code: &str) -> Result<RootedTree> {
    let bytes = code.as_bytes();
    let mut pos = 0;
    let tree = parse_node(code, bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(Error::InvalidGraph(format!(
            "trailing input in fringe-tree code {code:?}"
        )));
    }
    tree.validate(true)?;
    let canon = canonicalize(&tree);
    if canon.code() != code {
        return Err(Error::InvalidGraph(format!(
            "fringe-tree code {code:?} is not canonical (expected {:?})",
            canon.code()
        )));
    }
    Ok(tree)
}

fn parse_node(code: &str, bytes: &[u8], pos: &mut usize) -> Result<RootedTree> {
    let bad = || Error::InvalidGraph(format!("malformed fringe-tree code {code:?}"));
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_alphabetic() && bytes[*pos] != b'H' {
        // Element symbols: one uppercase letter plus optional lowercase.
        if *pos > start && bytes[*pos].is_ascii_uppercase() {
            break;
        }
        *pos += 1;
    }
    if *pos == start {
        return Err(bad());
    }
    let symbol = &code[start..*pos];
    // Multi-valence element: a single variant digit follows the symbol.
    let multi = Element::lookup(symbol, None).is_err();
    let element = if multi {
        if *pos >= bytes.len() || !bytes[*pos].is_ascii_digit() {
            return Err(bad());
        }
        let v = bytes[*pos] - b'0';
        *pos += 1;
        Element::lookup(symbol, Some(v))?
    } else {
        Element::lookup(symbol, None)?
    };
    let mut h_count = 0u8;
    if *pos < bytes.len() && bytes[*pos] == b'H' {
        *pos += 1;
        let dstart = *pos;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        h_count = if *pos == dstart {
            1
        } else {
            code[dstart..*pos].parse().map_err(|_| bad())?
        };
    }
    let mut children = Vec::new();
    while *pos < bytes.len() && bytes[*pos] == b'(' {
        *pos += 1;
        if *pos >= bytes.len() || !(b'1'..=b'3').contains(&bytes[*pos]) {
            return Err(bad());
        }
        let m = bytes[*pos] - b'0';
        *pos += 1;
        let child = parse_node(code, bytes, pos)?;
        if *pos >= bytes.len() || bytes[*pos] != b')' {
            return Err(bad());
        }
        *pos += 1;
        children.push((m, child));
    }
    Ok(RootedTree {
        element,
        h_count,
        children,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c() -> Element {
        Element::CARBON
    }
    fn o() -> Element {
        Element::OXYGEN
    }
    fn n() -> Element {
        Element::NITROGEN
    }

    #[test]
    fn ring_carbon_codes() {
        // psi1: ring C with one H; psi2: ring C bearing O-H.
        let psi1 = RootedTree::leaf(c(), 1);
        let psi2 = RootedTree {
            element: c(),
            h_count: 0,
            children: vec![(1, RootedTree::leaf(o(), 1))],
        };
        let c1 = canonicalize(&psi1);
        let c2 = canonicalize(&psi2);
        assert_eq!(c1.code(), "CH");
        assert_eq!(c2.code(), "C(1OH)");
        assert_ne!(c1.code(), c2.code());
        assert_eq!(c1.mass_star(), 130);
        assert_eq!(c2.mass_star(), 290);
        assert_eq!(c1.height(), 0);
        assert_eq!(c2.height(), 1);
        assert_eq!(c2.val_ex(), 1);
        assert_eq!(c1.val_ex(), 1);
        assert_eq!(c2.root_degree_heavy(), 1);
        assert_eq!(c2.non_root_count(o()), 1);
        assert_eq!(c2.non_root_count(Element::HYDROGEN), 1);
        // Suppressed psi2 has one leaf edge (O, C, 1).
        assert_eq!(c2.leaf_adjacency_counts().get(&(o(), c(), 1)), Some(&1));
    }

    #[test]
    fn child_order_is_immaterial() {
        let a = RootedTree {
            element: c(),
            h_count: 0,
            children: vec![
                (1, RootedTree::leaf(o(), 1)),
                (2, RootedTree::leaf(n(), 1)),
                (1, RootedTree::leaf(c(), 3)),
            ],
        };
        let mut b = a.clone();
        b.children.reverse();
        assert!(codes_equal_under_rooted_isomorphism(&a, &b));
    }

    #[test]
    fn different_roots_differ() {
        // Path C-O rooted at C vs rooted at O.
        let at_c = RootedTree {
            element: c(),
            h_count: 3,
            children: vec![(1, RootedTree::leaf(o(), 1))],
        };
        let at_o = RootedTree {
            element: o(),
            h_count: 1,
            children: vec![(1, RootedTree::leaf(c(), 3))],
        };
        assert!(!codes_equal_under_rooted_isomorphism(&at_c, &at_o));
    }

    #[test]
    fn parse_round_trip() {
        let t = RootedTree {
            element: c(),
            h_count: 1,
            children: vec![(1, RootedTree::leaf(n(), 2)), (2, RootedTree::leaf(o(), 0))],
        };
        let code = canonicalize(&t).code().to_string();
        let parsed = parse_code(&code).unwrap();
        assert_eq!(canonicalize(&parsed).code(), code);
        // Non-canonical input rejected: swap children in the rendered code.
        assert!(parse_code("C(1OH)H").is_err());
        // Cycle-free parse of junk rejected.
        assert!(parse_code("C((").is_err());
        assert!(parse_code("").is_err());
    }

    #[test]
    fn parse_rejects_valence_violation() {
        // O with 3 hydrogens is over valence.
        assert!(parse_code("OH3").is_err());
        // Non-root C leaving valence unused is rejected (must be exact).
        assert!(parse_code("C(1CH2)").is_err());
    }

    #[test]
    fn from_graph_rejects_cycles() {
        use crate::chemgraph::Bond;
        let atoms = vec![c(), c(), c()];
        let bonds = vec![
            Bond {
                u: 0,
                v: 1,
                order: 1,
            },
            Bond {
                u: 1,
                v: 2,
                order: 1,
            },
            Bond {
                u: 2,
                v: 0,
                order: 1,
            },
        ];
        let g = ChemicalGraph::new("cyc", atoms, bonds).unwrap();
        assert!(RootedTree::from_graph(&g, 0, &[0, 1, 2]).is_err());
    }
}
