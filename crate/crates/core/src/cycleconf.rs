//! Chordless-cycle enumeration and cycle-configuration descriptors.
//!
//! A cycle is chordless when no graph edge joins two non-consecutive cycle
//! vertices. Its cycle configuration is the lexicographically smallest
//! sequence, over all rotations and the reversal, of the ranks of the fringe
//! tree masses around the cycle.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chemgraph::HydrogenSuppressedGraph;
use crate::error::{Error, Result};
use crate::features::DescriptorDictionary;

/// A chordless cycle as a cyclically ordered vertex list.
///
/// The stored order is canonical: the minimum vertex id comes first and the
/// second entry is the smaller of its two cycle neighbors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChordlessCycle {
    pub vertices: Vec<usize>,
}

impl ChordlessCycle {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Enumerates every chordless cycle with length in `[c_min, c_max]` of a
/// hydrogen-suppressed graph, each exactly once.
pub fn enumerate_chordless_cycles(
    h: &HydrogenSuppressedGraph<'_>,
    c_min: usize,
    c_max: usize,
) -> Vec<ChordlessCycle> {
    let adj: Vec<Vec<usize>> = (0..h.n())
        .map(|v| h.neighbors(v).iter().map(|&(w, _)| w).collect())
        .collect();
    enumerate_chordless_cycles_adj(&adj, c_min, c_max)
}

/// Chordless-cycle enumeration over plain adjacency lists.
///
/// Works by extending induced paths: a path grows only through vertices not
/// adjacent to any non-endpoint path vertex, so a closure is exactly an
/// induced (chordless) cycle. Starting each search at the minimum cycle
/// vertex and forcing `path[1] < last` removes rotations and reflections.
pub fn enumerate_chordless_cycles_adj(
    adj: &[Vec<usize>],
    c_min: usize,
    c_max: usize,
) -> Vec<ChordlessCycle> {
    assert!(
        3 <= c_min && c_min <= c_max,
        "cycle length bounds out of range"
    );
    let n = adj.len();
    let adjacent = |a: usize, b: usize| adj[a].contains(&b);
    let mut out = Vec::new();
    let mut in_path = vec![false; n];
    for s in 0..n {
        let mut path = vec![s];
        in_path[s] = true;
        let mut iters: Vec<usize> = vec![0];
        // Iterative DFS over neighbor indices.
        while let Some(last_iter) = iters.last_mut() {
            let end = *path.last().unwrap();
            let next = adj[end].get(*last_iter).copied();
            *last_iter += 1;
            let Some(w) = next else {
                in_path[path.pop().unwrap()] = false;
                iters.pop();
                continue;
            };
            if w <= s || in_path[w] {
                continue;
            }
            if path.len() == 1 {
                path.push(w);
                in_path[w] = true;
                iters.push(0);
                continue;
            }
            // Chord test against non-endpoint path vertices.
            let mut chorded = false;
            for &p in &path[1..path.len() - 1] {
                if adjacent(w, p) {
                    chorded = true;
                    break;
                }
            }
            if chorded {
                continue;
            }
            if adjacent(w, s) {
                let len = path.len() + 1;
                if (c_min..=c_max).contains(&len) && path[1] < w {
                    let mut vs = path.clone();
                    vs.push(w);
                    out.push(ChordlessCycle { vertices: vs });
                }
                // w adjacent to s: extending through w would carry a chord.
                continue;
            }
            if path.len() < c_max {
                path.push(w);
                in_path[w] = true;
                iters.push(0);
            }
        }
        in_path[s] = false;
    }
    out.sort();
    out
}

/// Ranks of the fringe masses around a cycle: entry i is the rank of mass i
/// among the distinct masses on this cycle (1 = smallest).
pub fn rank_sequence(c: &ChordlessCycle, fringe_mass: &BTreeMap<usize, u64>) -> Result<Vec<u32>> {
    let masses: Vec<u64> =
        c.vertices
            .iter()
            .map(|v| {
                fringe_mass.get(v).copied().ok_or_else(|| {
                    Error::InvalidGraph(format!("cycle vertex {v} has no fringe mass"))
                })
            })
            .collect::<Result<_>>()?;
    let mut distinct: Vec<u64> = masses.clone();
    distinct.sort_unstable();
    distinct.dedup();
    Ok(masses
        .iter()
        .map(|m| (distinct.binary_search(m).unwrap() + 1) as u32)
        .collect())
}

/// A canonical cycle configuration: the lexicographic minimum of a rank
/// sequence over all rotations and reflected rotations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CycleConfig {
    ranks: Vec<u32>,
}

impl CycleConfig {
    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// True when the stored sequence is a canonical rank sequence: already
    /// lexicographically minimal, ranks start at 1 and are gap-free.
    pub fn is_canonical_rank_sequence(&self) -> bool {
        if self.ranks.is_empty() {
            return false;
        }
        let max = *self.ranks.iter().max().unwrap();
        let all_present = (1..=max).all(|r| self.ranks.contains(&r));
        all_present && canonicalize_cycle(&self.ranks) == *self
    }

    /// Parses the comma-joined form, e.g. `1,1,2,1,1,2`.
    pub fn parse(s: &str) -> Result<CycleConfig> {
        let ranks: Vec<u32> = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|_| Error::InvalidGraph(format!("bad cycle configuration {s:?}")))
            })
            .collect::<Result<_>>()?;
        if ranks.is_empty() {
            return Err(Error::InvalidGraph("empty cycle configuration".into()));
        }
        Ok(CycleConfig { ranks })
    }
}

impl fmt::Display for CycleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ranks.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for CycleConfig {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CycleConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<CycleConfig, D::Error> {
        let s = String::deserialize(d)?;
        CycleConfig::parse(&s).map_err(D::Error::custom)
    }
}

/// Lexicographic minimum over all `2 * len` rotations and reflected rotations.
pub fn canonicalize_cycle(ranks: &[u32]) -> CycleConfig {
    assert!(!ranks.is_empty(), "empty rank sequence");
    let l = ranks.len();
    let mut best: Option<Vec<u32>> = None;
    let mut reversed: Vec<u32> = ranks.to_vec();
    reversed.reverse();
    for seq in [ranks, reversed.as_slice()] {
        for start in 0..l {
            let cand: Vec<u32> = (0..l).map(|i| seq[(start + i) % l]).collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    CycleConfig {
        ranks: best.unwrap(),
    }
}

/// Cycle configurations of every in-range chordless cycle of a molecule.
pub fn cycle_configurations(
    h: &HydrogenSuppressedGraph<'_>,
    fringe_mass: &BTreeMap<usize, u64>,
    c_min: usize,
    c_max: usize,
) -> Result<BTreeMap<CycleConfig, u32>> {
    let mut out = BTreeMap::new();
    for c in enumerate_chordless_cycles(h, c_min, c_max) {
        let ranks = rank_sequence(&c, fringe_mass)?;
        *out.entry(canonicalize_cycle(&ranks)).or_insert(0) += 1;
    }
    Ok(out)
}

/// The CC feature block: per dictionary entry, the number of chordless
/// cycles with that configuration.
pub fn f_cc(
    cc_counts: &BTreeMap<CycleConfig, u32>,
    dict: &DescriptorDictionary,
) -> Result<Vec<f64>> {
    let mut block = vec![0f64; dict.xi_set().len()];
    for (xi, &c) in cc_counts {
        let i = dict
            .xi_index(xi)
            .ok_or_else(|| Error::OutOfDictionary(format!("cycle configuration {xi}")))?;
        block[i] = f64::from(c);
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemgraph::{parse_graph_json, suppress_hydrogens, ChemicalGraph};

    fn carbons_ring_graph(name: &str, n: usize, extra: &[(usize, usize)]) -> ChemicalGraph {
        // Plain carbon skeleton; bonds all single. Valence limits n <= small.
        let atoms: Vec<String> = (0..n).map(|_| r#"{"element":"C"}"#.to_string()).collect();
        let mut bonds: Vec<String> = (0..n)
            .map(|i| format!("[{},{},1]", i, (i + 1) % n))
            .collect();
        for &(u, v) in extra {
            bonds.push(format!("[{u},{v},1]"));
        }
        let text = format!(
            r#"{{"name":"{name}","atoms":[{}],"bonds":[{}]}}"#,
            atoms.join(","),
            bonds.join(",")
        );
        parse_graph_json(&text).unwrap()
    }

    #[test]
    fn benzene_has_one_six_cycle() {
        let g = carbons_ring_graph("ring6", 6, &[]);
        let h = suppress_hydrogens(&g).unwrap();
        let cycles = enumerate_chordless_cycles(&h, 3, 8);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 6);
        assert_eq!(cycles[0].vertices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn naphthalene_skeleton_has_two_six_cycles() {
        // Two fused six-rings sharing edge 0-5.
        let g = parse_graph_json(
            r#"{"atoms":[{"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},
                         {"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"},{"element":"C"}],
                "bonds":[[0,1,1],[1,2,1],[2,3,1],[3,4,1],[4,5,1],[5,0,1],
                         [5,6,1],[6,7,1],[7,8,1],[8,9,1],[9,0,1]]}"#,
        )
        .unwrap();
        let h = suppress_hydrogens(&g).unwrap();
        let cycles = enumerate_chordless_cycles(&h, 3, 10);
        assert_eq!(cycles.len(), 2);
        assert!(cycles.iter().all(|c| c.len() == 6));
    }

    #[test]
    fn k4_has_four_triangles_and_no_four_cycles() {
        let g = carbons_ring_graph("k4", 4, &[(0, 2), (1, 3)]);
        let h = suppress_hydrogens(&g).unwrap();
        let triangles = enumerate_chordless_cycles(&h, 3, 8);
        assert_eq!(triangles.len(), 4);
        assert!(triangles.iter().all(|c| c.len() == 3));
        let four_up = enumerate_chordless_cycles(&h, 4, 8);
        assert!(four_up.is_empty());
    }

    #[test]
    fn rank_sequence_of_paper_example() {
        // R = {3, 2, 5, 9}: ranks of (3, 2, 5, 9) are (2, 1, 3, 4).
        let cycle = ChordlessCycle {
            vertices: vec![0, 1, 2, 3],
        };
        let masses = BTreeMap::from([(0, 3u64), (1, 2), (2, 5), (3, 9)]);
        assert_eq!(rank_sequence(&cycle, &masses).unwrap(), vec![2, 1, 3, 4]);

        let equal = BTreeMap::from([(0, 7u64), (1, 7), (2, 7), (3, 7)]);
        assert_eq!(rank_sequence(&cycle, &equal).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn six_ring_rank_pattern() {
        let cycle = ChordlessCycle {
            vertices: vec![0, 1, 2, 3, 4, 5],
        };
        let masses = BTreeMap::from([(0, 13u64), (1, 13), (2, 29), (3, 13), (4, 29), (5, 13)]);
        assert_eq!(
            rank_sequence(&cycle, &masses).unwrap(),
            vec![1, 1, 2, 1, 2, 1]
        );
    }

    #[test]
    fn canonical_form_examples() {
        assert_eq!(
            canonicalize_cycle(&[2, 1, 2, 1, 1, 1]).to_string(),
            "1,1,1,2,1,2"
        );
        assert_eq!(
            canonicalize_cycle(&[2, 1, 1, 2, 1, 1]).to_string(),
            "1,1,2,1,1,2"
        );
        // Fig. 3-style C4 ring environment: masses (14,14,28,29) spread on a
        // six-ring as (1,1,2,3) style pattern.
        assert_eq!(
            canonicalize_cycle(&[1, 1, 1, 1, 2, 3]).to_string(),
            "1,1,1,1,2,3"
        );
        assert_eq!(
            canonicalize_cycle(&[3, 2, 1, 1, 1, 1]).to_string(),
            "1,1,1,1,2,3"
        );
    }

    #[test]
    fn canonicalization_is_symmetry_invariant() {
        let ranks = [1u32, 3, 2, 1, 2];
        let base = canonicalize_cycle(&ranks);
        let l = ranks.len();
        for start in 0..l {
            let rot: Vec<u32> = (0..l).map(|i| ranks[(start + i) % l]).collect();
            assert_eq!(canonicalize_cycle(&rot), base);
            let mut rev = rot.clone();
            rev.reverse();
            assert_eq!(canonicalize_cycle(&rev), base);
        }
    }

    #[test]
    fn cycle_config_parse_round_trip() {
        let xi = CycleConfig::parse("1,1,2,1,1,2").unwrap();
        assert_eq!(xi.to_string(), "1,1,2,1,1,2");
        assert!(xi.is_canonical_rank_sequence());
        assert!(!CycleConfig::parse("2,1,1")
            .unwrap()
            .is_canonical_rank_sequence());
        assert!(!CycleConfig::parse("1,3,3")
            .unwrap()
            .is_canonical_rank_sequence());
        assert!(CycleConfig::parse("").is_err());
    }
}
