//! Seed trees and the inference specification: available elements and
//! configurations per node, plus lower/upper bounds on every counted
//! quantity.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chemgraph::Element;
use crate::cycleconf::CycleConfig;
use crate::error::{Error, Result};
use crate::fringetree::{self, CanonicalTreeCode};
use crate::twolayer::{AdjacencyConfig, EdgeConfig};

/// A seed tree: an unrooted tree whose ring nodes expand to chordless cycles
/// and whose ring edges force two cycles to share an edge.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeedTree {
    pub nodes: Vec<SeedNode>,
    pub edges: Vec<SeedEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeedNode {
    pub id: usize,
    pub ring: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeedEdge {
    pub u: usize,
    pub v: usize,
    #[serde(default)]
    pub ring: bool,
}

impl SeedTree {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_ring_node(&self, id: usize) -> bool {
        self.nodes[id].ring
    }

    pub fn ring_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| n.ring).map(|n| n.id)
    }

    pub fn non_ring_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| !n.ring).map(|n| n.id)
    }

    /// Edge indices of ring edges.
    pub fn ring_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.ring)
            .map(|(i, _)| i)
    }

    pub fn non_ring_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.ring)
            .map(|(i, _)| i)
    }

    /// Ring edges incident to node `u`.
    pub fn ring_edges_at(&self, u: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.ring && (e.u == u || e.v == u))
            .map(|(i, _)| i)
            .collect()
    }

    /// Non-ring edges incident to node `u`.
    pub fn non_ring_edges_at(&self, u: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.ring && (e.u == u || e.v == u))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.edges.iter().filter(|e| e.u == u || e.v == u).count()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Spec("seed tree has no nodes".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::Spec(format!(
                    "seed tree node ids must be dense and ordered (expected {i}, found {})",
                    node.id
                )));
            }
        }
        if self.edges.len() + 1 != n {
            return Err(Error::Spec(format!(
                "a tree on {n} nodes needs {} edges, found {}",
                n - 1,
                self.edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.u >= n || e.v >= n || e.u == e.v {
                return Err(Error::Spec(format!(
                    "bad seed tree edge ({}, {})",
                    e.u, e.v
                )));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return Err(Error::Spec(format!(
                    "duplicate seed tree edge ({}, {})",
                    e.u, e.v
                )));
            }
            if e.ring && !(self.nodes[e.u].ring && self.nodes[e.v].ring) {
                return Err(Error::Spec(format!(
                    "ring edge ({}, {}) must join two ring nodes",
                    e.u, e.v
                )));
            }
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0];
        visited[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != n {
            return Err(Error::Spec("seed tree is disconnected".into()));
        }
        Ok(())
    }
}

/// Lower/upper bound pairs on counted quantities. Maps are keyed by the
/// canonical display form of the configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SpecBounds {
    pub n: Option<(u32, u32)>,
    pub n_int: Option<(u32, u32)>,
    #[serde(default)]
    pub na_int: BTreeMap<String, (u32, u32)>,
    #[serde(default)]
    pub na_ex: BTreeMap<String, (u32, u32)>,
    #[serde(default)]
    pub na: BTreeMap<String, (u32, u32)>,
    #[serde(default)]
    pub fc: BTreeMap<String, (u32, u32)>,
    #[serde(default)]
    pub ac_int: BTreeMap<String, (u32, u32)>,
    #[serde(default)]
    pub ac_lf: BTreeMap<String, (u32, u32)>,
    #[serde(default)]
    pub ec_int: BTreeMap<String, (u32, u32)>,
}

/// The full inference specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Specification {
    pub seed_tree: SeedTree,
    pub rho: u32,
    pub c_min: usize,
    pub c_max: usize,
    /// Available elements, sorted, hydrogen included.
    pub lambda: Vec<Element>,
    /// Cycle configurations available to each ring node.
    pub xi_per_ring_node: BTreeMap<usize, Vec<CycleConfig>>,
    /// Fringe-tree codes available to each node.
    pub fringe_per_node: BTreeMap<usize, Vec<String>>,
    /// Ordered adjacency configurations on interior edges (closed under
    /// reversal).
    pub gamma_ac_int: Vec<AdjacencyConfig>,
    /// Adjacency configurations on leaf edges (ordered, degree-1 end first).
    pub gamma_ac_lf: Vec<AdjacencyConfig>,
    /// Ordered edge configurations on interior edges (closed under reversal).
    pub gamma_ec_int: Vec<EdgeConfig>,
    pub bounds: SpecBounds,
    pub y_lb: f64,
    pub y_ub: f64,
}

pub const SPEC_FORMAT: &str = "inference-spec-v1";

#[derive(Serialize, Deserialize)]
struct SpecJson {
    format: String,
    #[serde(default = "default_rho")]
    rho: u32,
    #[serde(default = "default_cmin")]
    c_min: usize,
    #[serde(default = "default_cmax")]
    c_max: usize,
    seed_tree: Option<SeedTree>,
    lambda: Vec<Element>,
    #[serde(default)]
    xi: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    fringes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    ac_int: Vec<String>,
    #[serde(default)]
    ac_lf: Vec<String>,
    #[serde(default)]
    ec_int: Vec<String>,
    #[serde(default)]
    bounds: SpecBounds,
    y_lb: Option<f64>,
    y_ub: Option<f64>,
}

fn default_rho() -> u32 {
    2
}
fn default_cmin() -> usize {
    4
}
fn default_cmax() -> usize {
    6
}

/// Reads a seed tree JSON file.
pub fn read_seed_tree_json(path: &Path) -> Result<SeedTree> {
    let text = fs::read_to_string(path)?;
    let tree: SeedTree = serde_json::from_str(&text)?;
    tree.validate()?;
    Ok(tree)
}

/// Reads a specification JSON file. The seed tree may live in the same file
/// or be supplied separately; y bounds may be overridden by the caller.
pub fn read_spec_json(
    path: &Path,
    seed_tree: Option<SeedTree>,
    y_lb: Option<f64>,
    y_ub: Option<f64>,
) -> Result<Specification> {
    let text = fs::read_to_string(path)?;
    let raw: SpecJson = serde_json::from_str(&text)?;
    if raw.format != SPEC_FORMAT {
        return Err(Error::Spec(format!(
            "unsupported specification format {:?} (expected {SPEC_FORMAT:?})",
            raw.format
        )));
    }
    let tree = seed_tree
        .or(raw.seed_tree)
        .ok_or_else(|| Error::Spec("no seed tree given (file or --seed-tree)".into()))?;
    let parse_node_map =
        |m: &BTreeMap<String, Vec<String>>| -> Result<BTreeMap<usize, Vec<String>>> {
            m.iter()
                .map(|(k, v)| {
                    let id: usize = k
                        .parse()
                        .map_err(|_| Error::Spec(format!("bad node id {k:?} in specification")))?;
                    Ok((id, v.clone()))
                })
                .collect()
        };
    let xi_raw = parse_node_map(&raw.xi)?;
    let fringes = parse_node_map(&raw.fringes)?;
    let mut xi_per_ring_node = BTreeMap::new();
    for (node, configs) in xi_raw {
        let parsed: Vec<CycleConfig> = configs
            .iter()
            .map(|s| CycleConfig::parse(s))
            .collect::<Result<_>>()?;
        xi_per_ring_node.insert(node, parsed);
    }
    let ac_int: Vec<AdjacencyConfig> = raw
        .ac_int
        .iter()
        .map(|s| AdjacencyConfig::parse(s))
        .collect::<Result<_>>()?;
    let ac_lf: Vec<AdjacencyConfig> = raw
        .ac_lf
        .iter()
        .map(|s| AdjacencyConfig::parse(s))
        .collect::<Result<_>>()?;
    let ec_int: Vec<EdgeConfig> = raw
        .ec_int
        .iter()
        .map(|s| EdgeConfig::parse(s))
        .collect::<Result<_>>()?;

    let spec = Specification {
        seed_tree: tree,
        rho: raw.rho,
        c_min: raw.c_min,
        c_max: raw.c_max,
        lambda: raw.lambda,
        xi_per_ring_node,
        fringe_per_node: fringes,
        gamma_ac_int: ac_int,
        gamma_ac_lf: ac_lf,
        gamma_ec_int: ec_int,
        bounds: raw.bounds,
        y_lb: y_lb
            .or(raw.y_lb)
            .ok_or_else(|| Error::Spec("no y lower bound given".into()))?,
        y_ub: y_ub
            .or(raw.y_ub)
            .ok_or_else(|| Error::Spec("no y upper bound given".into()))?,
    };
    spec.normalized()
}

impl Specification {
    /// Validates the specification and returns a normalized copy: lambda
    /// sorted with hydrogen added, configuration sets closed under reversal
    /// and sorted, bound sanity checked.
    pub fn normalized(mut self) -> Result<Specification> {
        self.seed_tree.validate()?;
        if self.rho < 1 {
            return Err(Error::Spec("rho must be at least 1".into()));
        }
        if !(3 <= self.c_min && self.c_min <= self.c_max && self.c_max <= 8) {
            return Err(Error::Spec(format!(
                "cycle length window [{}, {}] out of supported range [3, 8]",
                self.c_min, self.c_max
            )));
        }
        if !self.lambda.contains(&Element::HYDROGEN) {
            self.lambda.push(Element::HYDROGEN);
        }
        self.lambda.sort_unstable();
        self.lambda.dedup();

        for u in self.seed_tree.ring_nodes() {
            let xis = self
                .xi_per_ring_node
                .get(&u)
                .ok_or_else(|| Error::Spec(format!("ring node {u} has no cycle configurations")))?;
            if xis.is_empty() {
                return Err(Error::Spec(format!(
                    "ring node {u} has no cycle configurations"
                )));
            }
            for xi in xis {
                if !(self.c_min..=self.c_max).contains(&xi.len()) {
                    return Err(Error::Spec(format!(
                        "cycle configuration {xi} at node {u} has length outside [{}, {}]",
                        self.c_min, self.c_max
                    )));
                }
                if !xi.is_canonical_rank_sequence() {
                    return Err(Error::Spec(format!(
                        "cycle configuration {xi} at node {u} is not a canonical rank sequence"
                    )));
                }
            }
        }
        for id in self.xi_per_ring_node.keys() {
            if *id >= self.seed_tree.n_nodes() || !self.seed_tree.is_ring_node(*id) {
                return Err(Error::Spec(format!(
                    "cycle configurations given for non-ring node {id}"
                )));
            }
        }

        for node in 0..self.seed_tree.n_nodes() {
            let codes = self
                .fringe_per_node
                .get(&node)
                .ok_or_else(|| Error::Spec(format!("node {node} has no fringe trees")))?;
            if codes.is_empty() {
                return Err(Error::Spec(format!("node {node} has no fringe trees")));
            }
            for code in codes {
                let stats = self.fringe_stats(code)?;
                if stats.height() > self.rho {
                    return Err(Error::Spec(format!(
                        "fringe tree {code} has height {} > rho {}",
                        stats.height(),
                        self.rho
                    )));
                }
            }
        }

        // Close the ordered interior configuration sets under reversal and
        // make sure every edge configuration projects to a known adjacency
        // configuration.
        let mut ac: std::collections::BTreeSet<AdjacencyConfig> =
            self.gamma_ac_int.iter().copied().collect();
        for g in self.gamma_ac_int.clone() {
            ac.insert(g.reversed());
        }
        let mut ec: std::collections::BTreeSet<EdgeConfig> =
            self.gamma_ec_int.iter().copied().collect();
        for t in self.gamma_ec_int.clone() {
            ec.insert(t.reversed());
        }
        for t in &ec {
            ac.insert(AdjacencyConfig {
                a: t.a,
                b: t.b,
                m: t.m,
            });
        }
        self.gamma_ac_int = ac.into_iter().collect();
        self.gamma_ec_int = ec.into_iter().collect();
        let mut lf = self.gamma_ac_lf.clone();
        lf.sort_unstable();
        lf.dedup();
        self.gamma_ac_lf = lf;

        // Elements referenced anywhere must be available.
        let known = |el: &Element| self.lambda.contains(el);
        for codes in self.fringe_per_node.values() {
            for code in codes {
                let tree = fringetree::parse_code(code)?;
                let stats = fringetree::canonicalize(&tree);
                if !known(&stats.root_element()) {
                    return Err(Error::Spec(format!(
                        "fringe tree {code} uses element {} outside lambda",
                        stats.root_element()
                    )));
                }
                for el in Element::all() {
                    if stats.non_root_count(el) > 0 && !known(&el) {
                        return Err(Error::Spec(format!(
                            "fringe tree {code} uses element {el} outside lambda"
                        )));
                    }
                }
            }
        }
        for g in &self.gamma_ac_int {
            if !known(&g.a) || !known(&g.b) {
                return Err(Error::Spec(format!(
                    "adjacency configuration {g} uses an element outside lambda"
                )));
            }
        }
        for t in &self.gamma_ec_int {
            if !known(&t.a) || !known(&t.b) {
                return Err(Error::Spec(format!(
                    "edge configuration {t} uses an element outside lambda"
                )));
            }
        }

        // Bound sanity.
        if self.y_lb > self.y_ub {
            return Err(Error::Spec(format!(
                "infeasible target range: y_lb {} > y_ub {}",
                self.y_lb, self.y_ub
            )));
        }
        let check = |name: &str, b: Option<(u32, u32)>| -> Result<()> {
            if let Some((lb, ub)) = b {
                if lb > ub {
                    return Err(Error::Spec(format!(
                        "infeasible bound {name}: [{lb}, {ub}]"
                    )));
                }
            }
            Ok(())
        };
        check("n", self.bounds.n)?;
        check("n_int", self.bounds.n_int)?;
        for (maps, label) in [
            (&self.bounds.na_int, "na_int"),
            (&self.bounds.na_ex, "na_ex"),
            (&self.bounds.na, "na"),
            (&self.bounds.fc, "fc"),
            (&self.bounds.ac_int, "ac_int"),
            (&self.bounds.ac_lf, "ac_lf"),
            (&self.bounds.ec_int, "ec_int"),
        ] {
            for (key, &(lb, ub)) in maps {
                if lb > ub {
                    return Err(Error::Spec(format!(
                        "infeasible bound {label}[{key}]: [{lb}, {ub}]"
                    )));
                }
            }
        }
        // Bound keys must name known quantities, else they would silently
        // never apply.
        for key in self.bounds.na_int.keys().chain(self.bounds.na_ex.keys()).chain(self.bounds.na.keys()) {
            let element = Element::parse_token(key)?;
            if !known(&element) {
                return Err(Error::Spec(format!("na bound for element {key} outside lambda")));
            }
        }
        let all_codes: std::collections::BTreeSet<&String> =
            self.fringe_per_node.values().flatten().collect();
        for key in self.bounds.fc.keys() {
            if !all_codes.contains(key) {
                return Err(Error::Spec(format!("fc bound for unavailable fringe tree {key}")));
            }
        }
        for key in self.bounds.ac_int.keys() {
            let g = AdjacencyConfig::parse(key)?;
            if !self.gamma_ac_int.contains(&g) {
                return Err(Error::Spec(format!(
                    "ac_int bound for unavailable configuration {key}"
                )));
            }
        }
        for key in self.bounds.ac_lf.keys() {
            let g = AdjacencyConfig::parse(key)?;
            if !self.gamma_ac_lf.contains(&g) {
                return Err(Error::Spec(format!(
                    "ac_lf bound for unavailable configuration {key}"
                )));
            }
        }
        for key in self.bounds.ec_int.keys() {
            let t = EdgeConfig::parse(key)?;
            if !self.gamma_ec_int.contains(&t) {
                return Err(Error::Spec(format!(
                    "ec_int bound for unavailable configuration {key}"
                )));
            }
        }
        Ok(self)
    }

    /// Parses and canonicalizes a fringe code, with caching left to callers.
    pub fn fringe_stats(&self, code: &str) -> Result<CanonicalTreeCode> {
        let tree = fringetree::parse_code(code)?;
        Ok(fringetree::canonicalize(&tree))
    }

    /// Default bounds per quantity when the specification leaves them open.
    pub fn n_bounds(&self) -> (u32, u32) {
        self.bounds.n.unwrap_or((1, 50))
    }

    pub fn n_int_bounds(&self) -> (u32, u32) {
        let (_, n_ub) = self.n_bounds();
        self.bounds.n_int.unwrap_or((1, n_ub))
    }

    pub fn na_bounds(&self, map: &BTreeMap<String, (u32, u32)>, el: Element) -> (u32, u32) {
        let (_, n_ub) = self.n_bounds();
        let default = if el.is_hydrogen() {
            (0, 4 * n_ub + 2)
        } else {
            (0, n_ub)
        };
        map.get(&el.to_string()).copied().unwrap_or(default)
    }

    pub fn fc_bounds(&self, code: &str) -> (u32, u32) {
        let (_, n_ub) = self.n_bounds();
        self.bounds.fc.get(code).copied().unwrap_or((0, n_ub))
    }

    pub fn ac_int_bounds(&self, g: &AdjacencyConfig) -> (u32, u32) {
        let (_, n_ub) = self.n_bounds();
        let ring = self.seed_tree.ring_nodes().count() as u32;
        let default = (0, n_ub + ring.saturating_sub(1));
        // Bounds are keyed by the canonical (unordered) form.
        let key = AdjacencyConfig::canonical(g.a, g.b, g.m).to_string();
        self.bounds.ac_int.get(&key).copied().unwrap_or(default)
    }

    pub fn ac_lf_bounds(&self, g: &AdjacencyConfig) -> (u32, u32) {
        let (_, n_ub) = self.n_bounds();
        self.bounds
            .ac_lf
            .get(&g.to_string())
            .copied()
            .unwrap_or((0, n_ub))
    }

    pub fn ec_int_bounds(&self, t: &EdgeConfig) -> (u32, u32) {
        let (_, n_ub) = self.n_bounds();
        let ring = self.seed_tree.ring_nodes().count() as u32;
        let default = (0, n_ub + ring.saturating_sub(1));
        let key = EdgeConfig::canonical(t.a, t.da, t.b, t.db, t.m).to_string();
        self.bounds.ec_int.get(&key).copied().unwrap_or(default)
    }
}
