//! Shared fixtures for the integration and acceptance suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use moldesc::chemgraph::{parse_graph_json, ChemicalGraph, Element};
use moldesc::cycleconf::CycleConfig;
use moldesc::features::{self, DescriptorDictionary, FeaturizeParams};
use moldesc::milp::{
    AssignmentTrace, Direction, RingChoice, SeedEdge, SeedNode, SeedTree, SpecBounds, Specification,
};
use moldesc::regress::Hyperplane;

pub fn el(sym: &str) -> Element {
    Element::lookup(sym, None).unwrap()
}

/// Benzene-like six-ring with oxygens attached at `oxygens`; `double_first`
/// picks which kekule pattern is used.
pub fn phenol_like(name: &str, oxygens: &[usize], double_first: bool) -> ChemicalGraph {
    let mut atoms = vec![r#"{"element":"C"}"#.to_string(); 6];
    let mut bonds = Vec::new();
    for i in 0..6 {
        let m = if (i % 2 == 0) == double_first { 2 } else { 1 };
        bonds.push(format!("[{},{},{}]", i, (i + 1) % 6, m));
    }
    for &p in oxygens {
        let o = atoms.len();
        atoms.push(r#"{"element":"O"}"#.to_string());
        bonds.push(format!("[{p},{o},1]"));
    }
    let text = format!(
        r#"{{"name":"{name}","atoms":[{}],"bonds":[{}]}}"#,
        atoms.join(","),
        bonds.join(",")
    );
    parse_graph_json(&text).unwrap()
}

pub fn catechol() -> ChemicalGraph {
    phenol_like("catechol", &[0, 1], true)
}
pub fn resorcinol() -> ChemicalGraph {
    phenol_like("resorcinol", &[0, 2], false)
}
pub fn hydroquinone() -> ChemicalGraph {
    phenol_like("hydroquinone", &[0, 3], false)
}

/// The single-ring-node toy: a 4-cycle with configuration (1,1,2,3) realized
/// by fringes CH2, CH2, CH(1NH2), CH(1OH).
pub fn toy_spec() -> Specification {
    Specification {
        seed_tree: SeedTree {
            nodes: vec![SeedNode { id: 0, ring: true }],
            edges: vec![],
        },
        rho: 2,
        c_min: 4,
        c_max: 6,
        lambda: vec![el("C"), el("N"), el("O")],
        xi_per_ring_node: BTreeMap::from([(0, vec![CycleConfig::parse("1,1,2,3").unwrap()])]),
        fringe_per_node: BTreeMap::from([(
            0,
            vec![
                "CH2".to_string(),
                "CH(1NH2)".to_string(),
                "CH(1OH)".to_string(),
            ],
        )]),
        gamma_ac_int: vec![moldesc::twolayer::AdjacencyConfig::parse("C-C:1").unwrap()],
        gamma_ac_lf: vec![
            moldesc::twolayer::AdjacencyConfig::parse("N-C:1").unwrap(),
            moldesc::twolayer::AdjacencyConfig::parse("O-C:1").unwrap(),
        ],
        gamma_ec_int: vec![
            moldesc::twolayer::EdgeConfig::parse("C2-C2:1").unwrap(),
            moldesc::twolayer::EdgeConfig::parse("C2-C3:1").unwrap(),
            moldesc::twolayer::EdgeConfig::parse("C3-C3:1").unwrap(),
        ],
        bounds: SpecBounds {
            n: Some((4, 12)),
            ..SpecBounds::default()
        },
        y_lb: 0.0,
        y_ub: 20.0,
    }
    .normalized()
    .unwrap()
}

pub fn toy_hyperplane() -> Hyperplane {
    Hyperplane {
        column_names: vec!["n".to_string(), "cc:1,1,2,3".to_string()],
        weights: vec![1.0, 2.0],
        bias: 0.5,
        scaling: vec![(0.0, 1.0), (0.0, 1.0)],
        lambda: 0.0,
        converged: true,
    }
}

pub fn toy_trace() -> AssignmentTrace {
    AssignmentTrace {
        ring: BTreeMap::from([(
            0,
            RingChoice {
                xi: CycleConfig::parse("1,1,2,3").unwrap(),
                start: 1,
                dir: Direction::Plus,
                fringe: vec![
                    "CH2".to_string(),
                    "CH2".to_string(),
                    "CH(1NH2)".to_string(),
                    "CH(1OH)".to_string(),
                ],
                beta: BTreeMap::from([(1, 1), (2, 1), (3, 1), (7, 1)]),
            },
        )]),
        node_fringe: BTreeMap::new(),
        edge_beta: BTreeMap::new(),
        ring_edge_gadget: BTreeMap::new(),
        attach: BTreeMap::new(),
    }
}

/// The molecule the toy trace realizes, built independently.
pub fn toy_molecule() -> ChemicalGraph {
    parse_graph_json(
        r#"{"name":"toy","atoms":[
            {"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},
            {"element":"N"},{"element":"O"}],
            "bonds":[[0,1,1],[1,2,1],[2,3,1],[3,0,1],[2,4,1],[3,5,1]]}"#,
    )
    .unwrap()
}

/// Dictionary built over the toy molecule, used for verification.
pub fn toy_dictionary() -> DescriptorDictionary {
    let params = FeaturizeParams {
        lambda: vec![el("C"), el("N"), el("O"), el("H")],
        ..FeaturizeParams::default()
    };
    let profile = features::profile_molecule("toy", &toy_molecule(), &params).unwrap();
    features::build_dictionary(std::slice::from_ref(&profile), &params).unwrap()
}

/// A fused two-ring toy: two six-cycles sharing an edge (decalin-like) plus
/// one extra interior vertex with a height-2 fringe chain.
pub fn fused_spec() -> Specification {
    let xi0 = CycleConfig::parse("1,1,2,2,2,2").unwrap();
    let xi1 = CycleConfig::parse("1,1,2,1,2,2").unwrap();
    Specification {
        seed_tree: SeedTree {
            nodes: vec![
                SeedNode { id: 0, ring: true },
                SeedNode { id: 1, ring: true },
                SeedNode { id: 2, ring: false },
            ],
            edges: vec![
                SeedEdge {
                    u: 0,
                    v: 1,
                    ring: true,
                },
                SeedEdge {
                    u: 1,
                    v: 2,
                    ring: false,
                },
            ],
        },
        rho: 2,
        c_min: 4,
        c_max: 6,
        lambda: vec![el("C")],
        xi_per_ring_node: BTreeMap::from([
            (0, vec![xi0.clone(), xi1.clone()]),
            (1, vec![xi0, xi1]),
        ]),
        fringe_per_node: BTreeMap::from([
            (0, vec!["CH".to_string(), "CH2".to_string()]),
            (1, vec!["CH".to_string(), "CH2".to_string()]),
            (2, vec!["CH2(1CH2(1CH3))".to_string()]),
        ]),
        gamma_ac_int: vec![moldesc::twolayer::AdjacencyConfig::parse("C-C:1").unwrap()],
        gamma_ac_lf: vec![moldesc::twolayer::AdjacencyConfig::parse("C-C:1").unwrap()],
        gamma_ec_int: vec![
            moldesc::twolayer::EdgeConfig::parse("C2-C2:1").unwrap(),
            moldesc::twolayer::EdgeConfig::parse("C2-C3:1").unwrap(),
            moldesc::twolayer::EdgeConfig::parse("C3-C3:1").unwrap(),
        ],
        bounds: SpecBounds {
            n: Some((4, 20)),
            ..SpecBounds::default()
        },
        y_lb: 0.0,
        y_ub: 100.0,
    }
    .normalized()
    .unwrap()
}

pub fn fused_hyperplane() -> Hyperplane {
    Hyperplane {
        column_names: vec!["n".to_string(), "rank".to_string()],
        weights: vec![1.0, 3.0],
        bias: 0.0,
        scaling: vec![(0.0, 1.0), (0.0, 1.0)],
        lambda: 0.0,
        converged: true,
    }
}

/// Hand assignment for the fused toy. Ring edge 0 identifies gadget edge 1 on
/// both sides anti-parallel; node 2 attaches at position 4 of ring node 1.
pub fn fused_trace() -> AssignmentTrace {
    let all_single =
        |edges: &[usize]| -> BTreeMap<usize, u8> { edges.iter().map(|&i| (i, 1)).collect() };
    AssignmentTrace {
        ring: BTreeMap::from([
            (
                0,
                RingChoice {
                    xi: CycleConfig::parse("1,1,2,2,2,2").unwrap(),
                    start: 1,
                    dir: Direction::Plus,
                    fringe: vec![
                        "CH".to_string(),
                        "CH".to_string(),
                        "CH2".to_string(),
                        "CH2".to_string(),
                        "CH2".to_string(),
                        "CH2".to_string(),
                    ],
                    beta: all_single(&[1, 2, 3, 4, 5, 6]),
                },
            ),
            (
                1,
                RingChoice {
                    xi: CycleConfig::parse("1,1,2,1,2,2").unwrap(),
                    start: 1,
                    dir: Direction::Plus,
                    fringe: vec![
                        "CH".to_string(),
                        "CH".to_string(),
                        "CH2".to_string(),
                        "CH".to_string(),
                        "CH2".to_string(),
                        "CH2".to_string(),
                    ],
                    beta: all_single(&[1, 2, 3, 4, 5, 6]),
                },
            ),
        ]),
        node_fringe: BTreeMap::from([(2, "CH2(1CH2(1CH3))".to_string())]),
        edge_beta: BTreeMap::from([(0, 1), (1, 1)]),
        ring_edge_gadget: BTreeMap::from([(0, (1, 1))]),
        attach: BTreeMap::from([(1, BTreeMap::from([(1, 4)]))]),
    }
}

/// Dictionary over the fused toy's realized molecule (decalin skeleton plus a
/// propyl-like chain).
pub fn fused_molecule() -> ChemicalGraph {
    // Interior: vertices 0..=10; ring 0 = {0,1,2,3,4,5}, ring 1 = {0,1,6,7,8,9}
    // sharing edge (0,1); vertex 10 attached to 7; exterior chain 11-12.
    parse_graph_json(
        r#"{"name":"fused","atoms":[
            {"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},
            {"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},
            {"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},
            {"element":"C"}],
            "bonds":[[0,1,1],[1,2,1],[2,3,1],[3,4,1],[4,5,1],[5,0,1],
                     [1,6,1],[6,7,1],[7,8,1],[8,9,1],[9,0,1],
                     [7,10,1],[10,11,1],[11,12,1]]}"#,
    )
    .unwrap()
}

pub fn fused_dictionary() -> DescriptorDictionary {
    let params = FeaturizeParams {
        lambda: vec![el("C"), el("H")],
        ..FeaturizeParams::default()
    };
    let profile = features::profile_molecule("fused", &fused_molecule(), &params).unwrap();
    features::build_dictionary(std::slice::from_ref(&profile), &params).unwrap()
}

/// Five ring nodes: two fused pairs plus one linked ring, every node
/// expanding to a six-cycle. Ring edges: (0,1) and (2,3); non-ring links:
/// (1,2) and (3,4).
pub fn five_ring_spec() -> Specification {
    let xis = vec![
        CycleConfig::parse("1,1,2,2,2,2").unwrap(),
        CycleConfig::parse("1,1,2,1,2,2").unwrap(),
        CycleConfig::parse("1,2,2,2,2,2").unwrap(),
    ];
    let fringes = vec!["CH".to_string(), "CH2".to_string()];
    Specification {
        seed_tree: SeedTree {
            nodes: (0..5).map(|id| SeedNode { id, ring: true }).collect(),
            edges: vec![
                SeedEdge {
                    u: 0,
                    v: 1,
                    ring: true,
                },
                SeedEdge {
                    u: 1,
                    v: 2,
                    ring: false,
                },
                SeedEdge {
                    u: 2,
                    v: 3,
                    ring: true,
                },
                SeedEdge {
                    u: 3,
                    v: 4,
                    ring: false,
                },
            ],
        },
        rho: 2,
        c_min: 4,
        c_max: 6,
        lambda: vec![el("C")],
        xi_per_ring_node: (0..5).map(|u| (u, xis.clone())).collect(),
        fringe_per_node: (0..5).map(|u| (u, fringes.clone())).collect(),
        gamma_ac_int: vec![moldesc::twolayer::AdjacencyConfig::parse("C-C:1").unwrap()],
        gamma_ac_lf: vec![],
        gamma_ec_int: vec![
            moldesc::twolayer::EdgeConfig::parse("C2-C2:1").unwrap(),
            moldesc::twolayer::EdgeConfig::parse("C2-C3:1").unwrap(),
            moldesc::twolayer::EdgeConfig::parse("C3-C3:1").unwrap(),
        ],
        bounds: SpecBounds {
            n: Some((10, 40)),
            ..SpecBounds::default()
        },
        y_lb: 0.0,
        y_ub: 100.0,
    }
    .normalized()
    .unwrap()
}

/// Assignment with rings 0/1 and 2/3 fused (gadget edge 1 on both sides) and
/// links attached at position 4 of nodes 1 and 2, position 4 of node 3 and
/// position 1 of node 4.
pub fn five_ring_trace() -> AssignmentTrace {
    let all_single =
        |edges: &[usize]| -> BTreeMap<usize, u8> { edges.iter().map(|&i| (i, 1)).collect() };
    let six = [1usize, 2, 3, 4, 5, 6];
    let ring = |xi: &str, fringe: [&str; 6]| RingChoice {
        xi: CycleConfig::parse(xi).unwrap(),
        start: 1,
        dir: Direction::Plus,
        fringe: fringe.iter().map(|s| s.to_string()).collect(),
        beta: all_single(&six),
    };
    AssignmentTrace {
        ring: BTreeMap::from([
            (
                0,
                ring("1,1,2,2,2,2", ["CH", "CH", "CH2", "CH2", "CH2", "CH2"]),
            ),
            (
                1,
                ring("1,1,2,1,2,2", ["CH", "CH", "CH2", "CH", "CH2", "CH2"]),
            ),
            (
                2,
                ring("1,1,2,1,2,2", ["CH", "CH", "CH2", "CH", "CH2", "CH2"]),
            ),
            (
                3,
                ring("1,1,2,1,2,2", ["CH", "CH", "CH2", "CH", "CH2", "CH2"]),
            ),
            (
                4,
                ring("1,2,2,2,2,2", ["CH", "CH2", "CH2", "CH2", "CH2", "CH2"]),
            ),
        ]),
        node_fringe: BTreeMap::new(),
        edge_beta: BTreeMap::from([(0, 1), (1, 1), (2, 1), (3, 1)]),
        ring_edge_gadget: BTreeMap::from([(0, (1, 1)), (2, (1, 1))]),
        attach: BTreeMap::from([
            (1, BTreeMap::from([(1, 4), (2, 4)])),
            (3, BTreeMap::from([(3, 4), (4, 1)])),
        ]),
    }
}
