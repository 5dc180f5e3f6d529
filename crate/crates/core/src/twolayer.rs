//! Interior/exterior decomposition by iterated leaf deletion, fringe-tree
//! extraction, and the per-molecule two-layer descriptor computations.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chemgraph::{ChemicalGraph, Element, HydrogenSuppressedGraph};
use crate::error::{Error, Result};
use crate::features::DescriptorDictionary;
use crate::fringetree::{canonicalize, CanonicalTreeCode, RootedTree};

/// Partition of a hydrogen-suppressed graph into interior and exterior parts
/// at branch parameter `rho`.
#[derive(Debug)]
pub struct TwoLayerDecomposition {
    rho: u32,
    /// Deletion round per suppressed vertex; `None` for vertices that never
    /// become leaves (cycle vertices and isolated survivors).
    height: Vec<Option<u32>>,
    is_interior: Vec<bool>,
    interior_vertices: Vec<usize>,
    exterior_vertices: Vec<usize>,
    /// Indices into `edges()` of the suppressed graph.
    interior_edges: Vec<usize>,
    exterior_edges: Vec<usize>,
}

/// Iterated leaf deletion: a vertex deleted in round `i` has height `i`;
/// vertices with height < rho are exterior, the rest interior.
pub fn decompose(h: &HydrogenSuppressedGraph<'_>, rho: u32) -> Result<TwoLayerDecomposition> {
    assert!(rho >= 1, "branch parameter must be at least 1");
    let n = h.n();
    let mut degree: Vec<usize> = (0..n).map(|v| h.degree(v)).collect();
    let mut alive = vec![true; n];
    let mut height = vec![None; n];
    let mut round = 0u32;
    loop {
        let leaves: Vec<usize> = (0..n).filter(|&v| alive[v] && degree[v] == 1).collect();
        if leaves.is_empty() {
            break;
        }
        for &v in &leaves {
            alive[v] = false;
            height[v] = Some(round);
        }
        for &v in &leaves {
            for &(w, _) in h.neighbors(v) {
                if alive[w] {
                    degree[w] -= 1;
                }
            }
        }
        round += 1;
    }

    let is_interior: Vec<bool> = (0..n)
        .map(|v| height[v].is_none_or(|ht| ht >= rho))
        .collect();
    let interior_vertices: Vec<usize> = (0..n).filter(|&v| is_interior[v]).collect();
    let exterior_vertices: Vec<usize> = (0..n).filter(|&v| !is_interior[v]).collect();
    if interior_vertices.is_empty() {
        return Err(Error::NoInterior(format!(
            "{}: no vertex survives {rho} rounds of leaf deletion",
            h.base().name()
        )));
    }
    let mut interior_edges = Vec::new();
    let mut exterior_edges = Vec::new();
    for (i, &(u, v, _)) in h.edges().iter().enumerate() {
        if is_interior[u] && is_interior[v] {
            interior_edges.push(i);
        } else {
            exterior_edges.push(i);
        }
    }
    Ok(TwoLayerDecomposition {
        rho,
        height,
        is_interior,
        interior_vertices,
        exterior_vertices,
        interior_edges,
        exterior_edges,
    })
}

impl TwoLayerDecomposition {
    pub fn rho(&self) -> u32 {
        self.rho
    }
    pub fn is_interior(&self, v: usize) -> bool {
        self.is_interior[v]
    }
    pub fn height(&self, v: usize) -> Option<u32> {
        self.height[v]
    }
    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }
    pub fn exterior_vertices(&self) -> &[usize] {
        &self.exterior_vertices
    }
    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }
    pub fn exterior_edges(&self) -> &[usize] {
        &self.exterior_edges
    }
}

/// The fringe tree rooted at one interior vertex, hydrogens restored.
#[derive(Debug)]
pub struct FringeTreeInstance {
    /// Suppressed id of the interior root.
    pub root: usize,
    /// Suppressed ids covered by this tree (root first).
    pub vertices: Vec<usize>,
    pub code: CanonicalTreeCode,
}

impl FringeTreeInstance {
    pub fn mass_star(&self) -> u64 {
        self.code.mass_star()
    }
    pub fn height(&self) -> u32 {
        self.code.height()
    }
}

/// Extracts the fringe tree of every interior vertex. The vertex sets of the
/// instances partition the suppressed vertex set.
pub fn extract_fringe_trees(
    h: &HydrogenSuppressedGraph<'_>,
    d: &TwoLayerDecomposition,
) -> Result<BTreeMap<usize, FringeTreeInstance>> {
    let g = h.base();
    let mut owner = vec![usize::MAX; h.n()];
    let mut out = BTreeMap::new();
    for &u in d.interior_vertices() {
        owner[u] = u;
        // Collect the exterior component hanging off u.
        let mut members = vec![u];
        let mut stack: Vec<usize> = h
            .neighbors(u)
            .iter()
            .filter(|&&(w, _)| !d.is_interior(w))
            .map(|&(w, _)| w)
            .collect();
        while let Some(v) = stack.pop() {
            if owner[v] == u {
                continue;
            }
            if owner[v] != usize::MAX {
                return Err(Error::InvalidGraph(format!(
                    "{}: exterior vertex {v} reachable from two interior roots",
                    g.name()
                )));
            }
            owner[v] = u;
            members.push(v);
            for &(w, _) in h.neighbors(v) {
                if !d.is_interior(w) && owner[w] == usize::MAX {
                    stack.push(w);
                }
            }
        }
        // Original vertex ids plus their hydrogens.
        let mut selected: Vec<usize> = Vec::new();
        for &v in &members {
            let ov = h.original_id(v);
            selected.push(ov);
            for &(w, _) in g.neighbors(ov) {
                if g.element(w).is_hydrogen() {
                    selected.push(w);
                }
            }
        }
        let tree = RootedTree::from_graph(g, h.original_id(u), &selected)?;
        let code = canonicalize(&tree);
        out.insert(
            u,
            FringeTreeInstance {
                root: u,
                vertices: members,
                code,
            },
        );
    }
    // Every exterior vertex must have been claimed exactly once.
    for &v in d.exterior_vertices() {
        if owner[v] == usize::MAX {
            return Err(Error::InvalidGraph(format!(
                "{}: exterior vertex {v} not attached to any interior root",
                g.name()
            )));
        }
    }
    Ok(out)
}

/// Adjacency configuration (a, b, m) of an edge. Interior edges are stored in
/// canonical orientation (smaller endpoint first under the element order);
/// leaf edges keep the degree-1 endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AdjacencyConfig {
    pub a: Element,
    pub b: Element,
    pub m: u8,
}

impl AdjacencyConfig {
    pub fn canonical(a: Element, b: Element, m: u8) -> AdjacencyConfig {
        if a <= b {
            AdjacencyConfig { a, b, m }
        } else {
            AdjacencyConfig { a: b, b: a, m }
        }
    }

    pub fn reversed(self) -> AdjacencyConfig {
        AdjacencyConfig {
            a: self.b,
            b: self.a,
            m: self.m,
        }
    }

    /// Parses the `Display` form `a-b:m`.
    pub fn parse(s: &str) -> Result<AdjacencyConfig> {
        let bad = || Error::InvalidGraph(format!("bad adjacency configuration {s:?}"));
        let (pair, m) = s.rsplit_once(':').ok_or_else(bad)?;
        let (a, b) = pair.split_once('-').ok_or_else(bad)?;
        Ok(AdjacencyConfig {
            a: Element::parse_token(a)?,
            b: Element::parse_token(b)?,
            m: m.parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for AdjacencyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}:{}", self.a, self.b, self.m)
    }
}

/// Edge configuration (a d, b d', m) of an interior edge, in canonical
/// orientation under the (element, degree) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeConfig {
    pub a: Element,
    pub da: u8,
    pub b: Element,
    pub db: u8,
    pub m: u8,
}

impl EdgeConfig {
    pub fn canonical(a: Element, da: u8, b: Element, db: u8, m: u8) -> EdgeConfig {
        if (a, da) <= (b, db) {
            EdgeConfig { a, da, b, db, m }
        } else {
            EdgeConfig {
                a: b,
                da: db,
                b: a,
                db: da,
                m,
            }
        }
    }

    pub fn reversed(self) -> EdgeConfig {
        EdgeConfig {
            a: self.b,
            da: self.db,
            b: self.a,
            db: self.da,
            m: self.m,
        }
    }

    /// The adjacency configuration obtained by erasing degrees (canonical).
    pub fn erase_degrees(self) -> AdjacencyConfig {
        AdjacencyConfig::canonical(self.a, self.b, self.m)
    }

    /// Parses the `Display` form `a d-b d':m` (e.g. `C2-C3:2`).
    pub fn parse(s: &str) -> Result<EdgeConfig> {
        let bad = || Error::InvalidGraph(format!("bad edge configuration {s:?}"));
        let (pair, m) = s.rsplit_once(':').ok_or_else(bad)?;
        let (x, y) = pair.split_once('-').ok_or_else(bad)?;
        let split_deg = |t: &str| -> Result<(Element, u8)> {
            if t.is_empty() {
                return Err(bad());
            }
            let d = t.as_bytes()[t.len() - 1] - b'0';
            if !(1..=4).contains(&d) {
                return Err(bad());
            }
            Ok((Element::parse_token(&t[..t.len() - 1])?, d))
        };
        let (a, da) = split_deg(x)?;
        let (b, db) = split_deg(y)?;
        Ok(EdgeConfig {
            a,
            da,
            b,
            db,
            m: m.parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for EdgeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}-{}{}:{}", self.a, self.da, self.b, self.db, self.m)
    }
}

/// Edge configuration of interior edge `e` (an index into `h.edges()`).
pub fn edge_configuration(
    e: usize,
    h: &HydrogenSuppressedGraph<'_>,
    d: &TwoLayerDecomposition,
) -> Result<EdgeConfig> {
    if !d.interior_edges().contains(&e) {
        return Err(Error::InvalidGraph(format!(
            "edge {e} is not an interior edge"
        )));
    }
    let (u, v, m) = h.edges()[e];
    Ok(EdgeConfig::canonical(
        h.element(u),
        h.degree(u) as u8,
        h.element(v),
        h.degree(v) as u8,
        m,
    ))
}

/// Adjacency configuration of interior edge `e` (canonical orientation).
pub fn adjacency_configuration(e: usize, h: &HydrogenSuppressedGraph<'_>) -> AdjacencyConfig {
    let (u, v, m) = h.edges()[e];
    AdjacencyConfig::canonical(h.element(u), h.element(v), m)
}

/// Adjacency configuration of leaf edge `e`, degree-1 endpoint first.
pub fn leaf_adjacency_configuration(
    e: usize,
    h: &HydrogenSuppressedGraph<'_>,
) -> Result<AdjacencyConfig> {
    let (u, v, m) = h.edges()[e];
    let (du, dv) = (h.degree(u), h.degree(v));
    match (du, dv) {
        (1, 1) => {
            // Two-atom molecule; orient by element so the tuple is unique.
            let (a, b) = if h.element(u) <= h.element(v) {
                (h.element(u), h.element(v))
            } else {
                (h.element(v), h.element(u))
            };
            Ok(AdjacencyConfig { a, b, m })
        }
        (1, _) => Ok(AdjacencyConfig {
            a: h.element(u),
            b: h.element(v),
            m,
        }),
        (_, 1) => Ok(AdjacencyConfig {
            a: h.element(v),
            b: h.element(u),
            m,
        }),
        _ => Err(Error::InvalidGraph(format!("edge {e} is not a leaf edge"))),
    }
}

/// All two-layer counts of one molecule, prior to dictionary lookup.
#[derive(Debug)]
pub struct TwoLayerSurvey {
    pub n_heavy: u32,
    pub rank: u32,
    pub n_interior: u32,
    /// Exact average mass*: (sum over all atoms incl. H, atom count).
    pub mass_num: u64,
    pub mass_den: u64,
    /// Suppressed-degree counts for d = 1..=4.
    pub dg: [u32; 4],
    /// Suppressed-degree counts restricted to interior vertices.
    pub dg_interior: [u32; 4],
    /// Interior-degree counts for d = 1..=4.
    pub dg_int: [u32; 4],
    /// Interior bond-multiplicity counts for m = 1..=3.
    pub bd_int: [u32; 3],
    pub na_int: BTreeMap<Element, u32>,
    pub na_ex: BTreeMap<Element, u32>,
    pub ec_int: BTreeMap<EdgeConfig, u32>,
    pub ac_int: BTreeMap<AdjacencyConfig, u32>,
    pub fc: BTreeMap<String, u32>,
    pub ac_lf: BTreeMap<AdjacencyConfig, u32>,
    /// Fringe mass* per interior vertex (suppressed ids), for cycle ranking.
    pub fringe_mass: BTreeMap<usize, u64>,
    /// Canonical codes keyed by code string, for dictionary building.
    pub fringe_codes: BTreeMap<String, CanonicalTreeCode>,
}

/// Computes every 2L count of a molecule at branch parameter `rho`.
pub fn survey(
    g: &ChemicalGraph,
    h: &HydrogenSuppressedGraph<'_>,
    rho: u32,
) -> Result<TwoLayerSurvey> {
    let d = decompose(h, rho)?;
    let fringes = extract_fringe_trees(h, &d)?;

    let mut dg = [0u32; 4];
    let mut dg_interior = [0u32; 4];
    for v in 0..h.n() {
        let deg = h.degree(v);
        if (1..=4).contains(&deg) {
            dg[deg - 1] += 1;
            if d.is_interior(v) {
                dg_interior[deg - 1] += 1;
            }
        }
    }
    let mut dg_int = [0u32; 4];
    let mut int_deg = vec![0usize; h.n()];
    for &e in d.interior_edges() {
        let (u, v, _) = h.edges()[e];
        int_deg[u] += 1;
        int_deg[v] += 1;
    }
    for &v in d.interior_vertices() {
        if (1..=4).contains(&int_deg[v]) {
            dg_int[int_deg[v] - 1] += 1;
        }
    }
    let mut bd_int = [0u32; 3];
    for &e in d.interior_edges() {
        let (_, _, m) = h.edges()[e];
        bd_int[m as usize - 1] += 1;
    }
    let mut na_int = BTreeMap::new();
    for &v in d.interior_vertices() {
        *na_int.entry(h.element(v)).or_insert(0) += 1;
    }
    let mut na_ex = BTreeMap::new();
    for &v in d.exterior_vertices() {
        *na_ex.entry(h.element(v)).or_insert(0) += 1;
    }
    let mut ec_int = BTreeMap::new();
    let mut ac_int = BTreeMap::new();
    for &e in d.interior_edges() {
        *ec_int.entry(edge_configuration(e, h, &d)?).or_insert(0) += 1;
        *ac_int.entry(adjacency_configuration(e, h)).or_insert(0) += 1;
    }
    let mut fc = BTreeMap::new();
    let mut fringe_mass = BTreeMap::new();
    let mut fringe_codes = BTreeMap::new();
    for (&root, inst) in &fringes {
        *fc.entry(inst.code.code().to_string()).or_insert(0) += 1;
        fringe_mass.insert(root, inst.mass_star());
        fringe_codes
            .entry(inst.code.code().to_string())
            .or_insert_with(|| inst.code.clone());
    }
    let mut ac_lf = BTreeMap::new();
    for e in 0..h.edges().len() {
        let (u, v, _) = h.edges()[e];
        if h.degree(u) == 1 || h.degree(v) == 1 {
            *ac_lf
                .entry(leaf_adjacency_configuration(e, h)?)
                .or_insert(0) += 1;
        }
    }

    Ok(TwoLayerSurvey {
        n_heavy: h.n() as u32,
        rank: h.rank() as u32,
        n_interior: d.interior_vertices().len() as u32,
        mass_num: g.mass_star(),
        mass_den: g.n_atoms() as u64,
        dg,
        dg_interior,
        dg_int,
        bd_int,
        na_int,
        na_ex,
        ec_int,
        ac_int,
        fc,
        ac_lf,
        fringe_mass,
        fringe_codes,
    })
}

/// The 2L descriptor vector of one molecule under a dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorValues2L {
    /// Length 14 + |Lambda_int| + |Lambda_ex| + |Gamma_int| + |F| + |Gamma_lf|.
    pub values: Vec<f64>,
    /// Exact average mass* as a rational (numerator, denominator).
    pub avg_mass_num: u64,
    pub avg_mass_den: u64,
}

/// Assembles the 2L descriptor vector from a survey under a fixed dictionary.
///
/// Fails with an out-of-dictionary error when the molecule contains a
/// configuration the dictionary does not know.
pub fn descriptors_2l(
    s: &TwoLayerSurvey,
    dict: &DescriptorDictionary,
) -> Result<DescriptorValues2L> {
    let mut values = Vec::with_capacity(dict.k_2l());
    values.push(f64::from(s.n_heavy));
    values.push(f64::from(s.rank));
    values.push(f64::from(s.n_interior));
    values.push(s.mass_num as f64 / s.mass_den as f64);
    for d in 0..4 {
        values.push(f64::from(s.dg[d]));
    }
    for d in 0..4 {
        values.push(f64::from(s.dg_int[d]));
    }
    values.push(f64::from(s.bd_int[1]));
    values.push(f64::from(s.bd_int[2]));

    let mut block = vec![0f64; dict.lambda_int().len()];
    for (el, &c) in &s.na_int {
        let i = dict
            .lambda_int_index(*el)
            .ok_or_else(|| Error::OutOfDictionary(format!("interior element {el}")))?;
        block[i] = f64::from(c);
    }
    values.extend_from_slice(&block);

    let mut block = vec![0f64; dict.lambda_ex().len()];
    for (el, &c) in &s.na_ex {
        let i = dict
            .lambda_ex_index(*el)
            .ok_or_else(|| Error::OutOfDictionary(format!("exterior element {el}")))?;
        block[i] = f64::from(c);
    }
    values.extend_from_slice(&block);

    let mut block = vec![0f64; dict.gamma_int_ec().len()];
    for (ec, &c) in &s.ec_int {
        let i = dict
            .gamma_int_ec_index(ec)
            .ok_or_else(|| Error::OutOfDictionary(format!("edge configuration {ec}")))?;
        block[i] = f64::from(c);
    }
    values.extend_from_slice(&block);

    let mut block = vec![0f64; dict.fringe_codes().len()];
    for (code, &c) in &s.fc {
        let i = dict
            .fringe_index(code)
            .ok_or_else(|| Error::OutOfDictionary(format!("fringe configuration {code}")))?;
        block[i] = f64::from(c);
    }
    values.extend_from_slice(&block);

    let mut block = vec![0f64; dict.gamma_lf_ac().len()];
    for (ac, &c) in &s.ac_lf {
        let i = dict
            .gamma_lf_ac_index(ac)
            .ok_or_else(|| Error::OutOfDictionary(format!("leaf adjacency configuration {ac}")))?;
        block[i] = f64::from(c);
    }
    values.extend_from_slice(&block);

    debug_assert_eq!(values.len(), dict.k_2l());
    Ok(DescriptorValues2L {
        values,
        avg_mass_num: s.mass_num,
        avg_mass_den: s.mass_den,
    })
}
