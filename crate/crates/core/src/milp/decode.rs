//! Solution decoding: read a variable assignment back into ring-node
//! choices, realize the chemical graph, and (in the other direction) encode a
//! known set of choices into a complete feasible assignment.

use std::collections::{BTreeMap, HashMap};

use crate::chemgraph::{Bond, ChemicalGraph, Element};
use crate::cycleconf::CycleConfig;
use crate::error::{Error, Result};
use crate::fringetree::{self, RootedTree};
use crate::regress::Hyperplane;

use super::build::{names, BuildContext, Direction};
use super::model::MilpModel;
use super::spec::Specification;

/// Per-ring-node decoded choice.
#[derive(Debug, Clone)]
pub struct RingChoice {
    pub xi: CycleConfig,
    /// Start position mu0 (1-based).
    pub start: usize,
    pub dir: Direction,
    /// Fringe code per cycle position 1..=|xi|.
    pub fringe: Vec<String>,
    /// Multiplicity per active gadget edge.
    pub beta: BTreeMap<usize, u8>,
}

/// Everything a solution pins down, in seed-tree terms.
#[derive(Debug, Clone)]
pub struct AssignmentTrace {
    pub ring: BTreeMap<usize, RingChoice>,
    pub node_fringe: BTreeMap<usize, String>,
    /// Tree edge index -> multiplicity.
    pub edge_beta: BTreeMap<usize, u8>,
    /// Ring edge index -> chosen gadget edge on (smaller, larger) node side.
    pub ring_edge_gadget: BTreeMap<usize, (usize, usize)>,
    /// Non-ring edge index -> attachment position per ring-node endpoint.
    pub attach: BTreeMap<usize, BTreeMap<usize, usize>>,
}

/// A decoded solution: the chemical graph plus the assignment trace that
/// produced it.
#[derive(Debug)]
pub struct DecodedGraph {
    pub graph: ChemicalGraph,
    pub trace: AssignmentTrace,
    /// Interior vertex id per (node, position) slot; positions are 1-based
    /// for ring nodes and 0 for non-ring nodes.
    pub slot_vertex: BTreeMap<(usize, usize), usize>,
}

fn round_int(x: f64) -> i64 {
    x.round() as i64
}

fn is_one(x: f64) -> bool {
    (x - 1.0).abs() < 1e-5
}

/// Reads the trace out of a solution map. Fails when a selector does not pick
/// exactly one option or integrality is violated.
pub fn extract_trace(sol: &HashMap<String, f64>, spec: &Specification) -> Result<AssignmentTrace> {
    let ctx = BuildContext::new(spec)?;
    let g = ctx.gadget;
    let get = |name: &str| -> Result<f64> {
        sol.get(name)
            .copied()
            .ok_or_else(|| Error::Solution(format!("solution misses variable {name:?}")))
    };

    let mut ring = BTreeMap::new();
    for &u in &ctx.ring_nodes {
        let mut chosen: Option<(usize, usize, Direction)> = None;
        for &k in &ctx.xi_at[&u] {
            for s in 1..=ctx.xi(k).len() {
                for (dir, tag) in [(Direction::Plus, 'p'), (Direction::Minus, 'm')] {
                    if is_one(get(&names::xstart(u, k, s, tag))?) {
                        if chosen.is_some() {
                            return Err(Error::Solution(format!(
                                "ring node {u} has more than one cycle configuration selected"
                            )));
                        }
                        chosen = Some((k, s, dir));
                    }
                }
            }
        }
        let (k, start, dir) = chosen.ok_or_else(|| {
            Error::Solution(format!("ring node {u} has no cycle configuration selected"))
        })?;
        let xi = ctx.xi(k).clone();
        let len = xi.len();
        let mut fringe = Vec::with_capacity(len);
        for p in 1..=len {
            let mut code: Option<String> = None;
            for &f in &ctx.fr_at[&u] {
                if is_one(get(&names::fr_cycle(u, p, f))?) {
                    if code.is_some() {
                        return Err(Error::Solution(format!(
                            "cycle vertex {u}:{p} carries two fringe trees"
                        )));
                    }
                    code = Some(ctx.fringes[f].code.clone());
                }
            }
            fringe.push(code.ok_or_else(|| {
                Error::Solution(format!("cycle vertex {u}:{p} carries no fringe tree"))
            })?);
        }
        let mut beta = BTreeMap::new();
        for i in g.cycle_edges(len) {
            let b = round_int(get(&names::beta_g(u, i))?);
            if !(1..=3).contains(&b) {
                return Err(Error::Solution(format!(
                    "gadget edge {u}:{i} has bond multiplicity {b}"
                )));
            }
            beta.insert(i, b as u8);
        }
        ring.insert(
            u,
            RingChoice {
                xi,
                start,
                dir,
                fringe,
                beta,
            },
        );
    }

    let mut node_fringe = BTreeMap::new();
    for &vtx in &ctx.non_ring_nodes {
        let mut code: Option<String> = None;
        for &f in &ctx.fr_at[&vtx] {
            if is_one(get(&names::fr_node(vtx, f))?) {
                if code.is_some() {
                    return Err(Error::Solution(format!(
                        "node {vtx} carries two fringe trees"
                    )));
                }
                code = Some(ctx.fringes[f].code.clone());
            }
        }
        node_fringe.insert(
            vtx,
            code.ok_or_else(|| Error::Solution(format!("node {vtx} carries no fringe tree")))?,
        );
    }

    let mut edge_beta = BTreeMap::new();
    for e in 0..spec.seed_tree.edges.len() {
        let b = round_int(get(&names::beta_e(e))?);
        if !(1..=3).contains(&b) {
            return Err(Error::Solution(format!(
                "tree edge {e} has bond multiplicity {b}"
            )));
        }
        edge_beta.insert(e, b as u8);
    }

    let mut ring_edge_gadget = BTreeMap::new();
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        let pick = |side: usize| -> Result<usize> {
            let mut found = None;
            for i in 1..=g.n_edges() {
                if is_one(get(&names::xedge(e, side, i))?) {
                    if found.is_some() {
                        return Err(Error::Solution(format!(
                            "ring edge {e} picks two gadget edges on node {side}"
                        )));
                    }
                    found = Some(i);
                }
            }
            found.ok_or_else(|| {
                Error::Solution(format!("ring edge {e} picks no gadget edge on node {side}"))
            })
        };
        let nu = pick(u)?;
        let nu2 = pick(up)?;
        ring_edge_gadget.insert(e, (nu, nu2));
    }

    let mut attach: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for &e in &ctx.non_ring_edges {
        let (x, y) = ctx.edge_nodes(e);
        for side in [x, y] {
            if !spec.seed_tree.nodes[side].ring {
                continue;
            }
            let mut found = None;
            for p in 1..=g.c_max {
                if is_one(get(&names::xnode(e, side, p))?) {
                    if found.is_some() {
                        return Err(Error::Solution(format!(
                            "tree edge {e} attaches twice on ring node {side}"
                        )));
                    }
                    found = Some(p);
                }
            }
            let p = found.ok_or_else(|| {
                Error::Solution(format!(
                    "tree edge {e} has no attachment on ring node {side}"
                ))
            })?;
            attach.entry(e).or_default().insert(side, p);
        }
    }

    Ok(AssignmentTrace {
        ring,
        node_fringe,
        edge_beta,
        ring_edge_gadget,
        attach,
    })
}

/// The realized interior skeleton of a trace: slot classes after ring-edge
/// identification, plus interior edges between classes.
pub(crate) struct Realized {
    /// Slot list: (node, pos) with pos = 0 for non-ring nodes.
    pub slots: Vec<(usize, usize)>,
    pub slot_index: BTreeMap<(usize, usize), usize>,
    /// Class id per slot.
    pub class_of: Vec<usize>,
    pub n_classes: usize,
    /// Fringe code per class.
    pub class_code: Vec<String>,
    /// Interior edges (class a, class b, multiplicity), a < b, deduplicated.
    pub edges: Vec<(usize, usize, u8)>,
    /// Non-ring-edge attachment count per slot.
    pub slot_attach: Vec<u32>,
}

impl Realized {
    /// Interior degree of a class (edges in the skeleton).
    pub fn interior_degree(&self, class: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b, _)| a == class || b == class)
            .count()
    }
}

pub(crate) fn realize(ctx: &BuildContext, trace: &AssignmentTrace) -> Result<Realized> {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    let mut slots: Vec<(usize, usize)> = Vec::new();
    for (&u, choice) in &trace.ring {
        for p in 1..=choice.xi.len() {
            slots.push((u, p));
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        slots.push((vtx, 0));
    }
    let slot_index: BTreeMap<(usize, usize), usize> =
        slots.iter().enumerate().map(|(i, &s)| (s, i)).collect();

    // Union-find over slots for ring-edge identification.
    let mut parent: Vec<usize> = (0..slots.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for (&e, &(nu, nu2)) in &trace.ring_edge_gadget {
        let (u, up) = ctx.ring_edge_sides(e);
        let (i1, i2) = g.endpoints(nu);
        let (j1, j2) = g.endpoints(nu2);
        let pair = |a: (usize, usize), b: (usize, usize)| -> Result<(usize, usize)> {
            let ia = *slot_index.get(&a).ok_or_else(|| {
                Error::Solution(format!("ring edge {e} uses inactive cycle vertex {a:?}"))
            })?;
            let ib = *slot_index.get(&b).ok_or_else(|| {
                Error::Solution(format!("ring edge {e} uses inactive cycle vertex {b:?}"))
            })?;
            Ok((ia, ib))
        };
        // Anti-parallel identification: (i1, j2) and (i2, j1).
        for (a, b) in [((u, i1), (up, j2)), ((u, i2), (up, j1))] {
            let (ia, ib) = pair(a, b)?;
            let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut class_of = vec![usize::MAX; slots.len()];
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..slots.len() {
        let r = find(&mut parent, i);
        if class_of[r] == usize::MAX {
            class_of[r] = reps.len();
            reps.push(r);
        }
        class_of[i] = class_of[r];
    }
    let n_classes = reps.len();

    // Fringe code per slot; merged slots must agree.
    let code_at = |slot: (usize, usize)| -> &str {
        let (node, pos) = slot;
        if pos == 0 {
            &trace.node_fringe[&node]
        } else {
            &trace.ring[&node].fringe[pos - 1]
        }
    };
    let mut class_code: Vec<Option<String>> = vec![None; n_classes];
    for (i, &slot) in slots.iter().enumerate() {
        let code = code_at(slot);
        match &class_code[class_of[i]] {
            None => class_code[class_of[i]] = Some(code.to_string()),
            Some(existing) if existing == code => {}
            Some(existing) => {
                return Err(Error::Solution(format!(
                    "merged cycle vertices disagree on fringe trees ({existing} vs {code})"
                )));
            }
        }
    }
    let class_code: Vec<String> = class_code.into_iter().map(Option::unwrap).collect();

    // Interior edges.
    let mut edge_map: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut add_edge = |a: usize, b: usize, mult: u8| -> Result<()> {
        let key = (a.min(b), a.max(b));
        if key.0 == key.1 {
            return Err(Error::Solution(
                "ring-edge identification created a self-loop".into(),
            ));
        }
        match edge_map.get(&key) {
            None => {
                edge_map.insert(key, mult);
                Ok(())
            }
            Some(&m0) if m0 == mult => Ok(()),
            Some(&m0) => Err(Error::Solution(format!(
                "shared edge has conflicting multiplicities {m0} and {mult}"
            ))),
        }
    };
    for (&u, choice) in &trace.ring {
        for (&i, &mult) in &choice.beta {
            let (a, b) = g.endpoints(i);
            let ca = class_of[slot_index[&(u, a)]];
            let cb = class_of[slot_index[&(u, b)]];
            add_edge(ca, cb, mult)?;
        }
    }
    for &e in &ctx.non_ring_edges {
        let (x, y) = ctx.edge_nodes(e);
        let slot_for = |node: usize| -> Result<usize> {
            if tree.nodes[node].ring {
                let p = trace
                    .attach
                    .get(&e)
                    .and_then(|m| m.get(&node))
                    .copied()
                    .ok_or_else(|| {
                        Error::Solution(format!("tree edge {e} has no attachment on node {node}"))
                    })?;
                slot_index.get(&(node, p)).copied().ok_or_else(|| {
                    Error::Solution(format!(
                        "tree edge {e} attaches to inactive vertex {node}:{p}"
                    ))
                })
            } else {
                Ok(slot_index[&(node, 0)])
            }
        };
        let ca = class_of[slot_for(x)?];
        let cb = class_of[slot_for(y)?];
        add_edge(ca, cb, trace.edge_beta[&e])?;
    }
    // Ring edges are already present as identified gadget edges; check the
    // multiplicity agrees.
    for (&e, &(nu, _)) in &trace.ring_edge_gadget {
        let (u, _) = ctx.ring_edge_sides(e);
        let shared = trace.ring[&u].beta.get(&nu).copied().ok_or_else(|| {
            Error::Solution(format!("ring edge {e} identified an inactive gadget edge"))
        })?;
        if shared != trace.edge_beta[&e] {
            return Err(Error::Solution(format!(
                "ring edge {e} multiplicity {} disagrees with its shared edge {shared}",
                trace.edge_beta[&e]
            )));
        }
    }

    let edges: Vec<(usize, usize, u8)> =
        edge_map.into_iter().map(|((a, b), m)| (a, b, m)).collect();
    let mut slot_attach = vec![0u32; slots.len()];
    for (&e, m) in &trace.attach {
        let _ = e;
        for (&node, &p) in m {
            slot_attach[slot_index[&(node, p)]] += 1;
        }
    }
    Ok(Realized {
        slots,
        slot_index,
        class_of,
        n_classes,
        class_code,
        edges,
        slot_attach,
    })
}

/// Builds the chemical graph of a realized trace: interior vertices per
/// class, fringe subtrees with hydrogens, interior bonds.
fn build_graph(ctx: &BuildContext, real: &Realized) -> Result<ChemicalGraph> {
    let mut atoms: Vec<Element> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    for code in &real.class_code {
        let f = ctx
            .fringe_index(code)
            .ok_or_else(|| Error::Solution(format!("unknown fringe code {code:?}")))?;
        let _ = &ctx.fringes[f];
        atoms.push(ctx.fringes[f].stats.root_element());
    }
    for &(a, b, mult) in &real.edges {
        bonds.push(Bond {
            u: a,
            v: b,
            order: mult,
        });
    }
    // Attach fringe subtrees (exterior atoms and all hydrogens).
    fn attach(atoms: &mut Vec<Element>, bonds: &mut Vec<Bond>, at: usize, tree: &RootedTree) {
        for _ in 0..tree.h_count {
            let h = atoms.len();
            atoms.push(Element::HYDROGEN);
            bonds.push(Bond {
                u: at,
                v: h,
                order: 1,
            });
        }
        for (mult, child) in &tree.children {
            let c = atoms.len();
            atoms.push(child.element);
            bonds.push(Bond {
                u: at,
                v: c,
                order: *mult,
            });
            attach(atoms, bonds, c, child);
        }
    }
    for (class, code) in real.class_code.iter().enumerate() {
        let tree = fringetree::parse_code(code)?;
        attach(&mut atoms, &mut bonds, class, &tree);
    }
    ChemicalGraph::new("decoded", atoms, bonds)
}

/// Decodes a solver solution into a chemical graph.
///
/// The solution must assign every model variable, integral to 1e-5.
pub fn decode_solution(
    sol: &HashMap<String, f64>,
    model: &MilpModel,
    spec: &Specification,
) -> Result<DecodedGraph> {
    for var in &model.variables {
        let val = model.value_of(sol, &var.name)?;
        if matches!(
            var.kind,
            super::model::VarKind::Binary | super::model::VarKind::Integer
        ) && (val - val.round()).abs() > 1e-5
        {
            return Err(Error::Solution(format!(
                "variable {} = {val} violates integrality",
                var.name
            )));
        }
    }
    let trace = extract_trace(sol, spec)?;
    let ctx = BuildContext::new(spec)?;
    let real = realize(&ctx, &trace)?;
    let graph = build_graph(&ctx, &real)?;
    let slot_vertex: BTreeMap<(usize, usize), usize> = real
        .slots
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, real.class_of[i]))
        .collect();
    Ok(DecodedGraph {
        graph,
        trace,
        slot_vertex,
    })
}

/// Encodes a known assignment into a complete solution map that satisfies
/// every model constraint. Useful for constructing reference solutions and
/// solver warm starts.
pub fn encode_trace(
    trace: &AssignmentTrace,
    spec: &Specification,
    hyperplane: &Hyperplane,
) -> Result<HashMap<String, f64>> {
    let ctx = BuildContext::new(spec)?;
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    let real = realize(&ctx, trace)?;
    let graph = build_graph(&ctx, &real)?;
    let mut out: HashMap<String, f64> = HashMap::new();
    let mut set = |name: String, value: f64| {
        out.insert(name, value);
    };

    // Per-slot helpers.
    let class_at = |slot: (usize, usize)| real.class_of[real.slot_index[&slot]];
    let fringe_of = |slot: (usize, usize)| -> usize {
        ctx.fringe_index(&real.class_code[class_at(slot)])
            .expect("known code")
    };
    let mass_of_slot = |slot: (usize, usize)| ctx.fringes[fringe_of(slot)].stats.mass_star() as f64;
    // Full suppressed degree of the class vertex behind a slot.
    let degree_of_class = |class: usize| -> usize {
        let f = ctx
            .fringe_index(&real.class_code[class])
            .expect("known code");
        real.interior_degree(class) + ctx.fringes[f].stats.root_degree_heavy() as usize
    };

    // B.1 variables.
    for (&u, choice) in &trace.ring {
        let len = choice.xi.len();
        // Rank pattern of the chosen assignment.
        let xi_value_at = |p: usize| -> u32 {
            let l = len as i64;
            let idx = match choice.dir {
                Direction::Plus => (p as i64 - choice.start as i64).rem_euclid(l),
                Direction::Minus => (choice.start as i64 - p as i64).rem_euclid(l),
            };
            choice.xi.ranks()[idx as usize]
        };
        // Distinct masses on the cycle, sorted.
        let mut masses: Vec<f64> = (1..=len).map(|p| mass_of_slot((u, p))).collect();
        let mut distinct = masses.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        distinct.dedup();
        for p in 1..=len {
            let rank = distinct.iter().position(|&m| m == masses[p - 1]).unwrap() as u32 + 1;
            if rank != xi_value_at(p) {
                return Err(Error::Solution(format!(
                    "fringe masses on ring node {u} do not realize the assigned cycle configuration (position {p}: rank {rank}, expected {})",
                    xi_value_at(p)
                )));
            }
        }
        for r in 1..=g.c_max {
            let z = if r <= distinct.len() {
                distinct[r - 1]
            } else {
                distinct.last().copied().unwrap_or(0.0) + (r - distinct.len()) as f64
            };
            set(names::z(u, r), z);
        }
        for p in 1..=g.c_max {
            set(names::y(u, p), if p <= len { masses[p - 1] } else { 0.0 });
        }
        masses.clear();
        for &k in &ctx.xi_at[&u] {
            let sel = ctx.xi(k) == &choice.xi;
            set(names::xsel(u, k), if sel { 1.0 } else { 0.0 });
            for s in 1..=ctx.xi(k).len() {
                for (dir, tag) in [(Direction::Plus, 'p'), (Direction::Minus, 'm')] {
                    let on = sel && s == choice.start && dir == choice.dir;
                    set(names::xstart(u, k, s, tag), if on { 1.0 } else { 0.0 });
                }
            }
        }
    }
    for (k, xi) in ctx.xi_global.iter().enumerate() {
        let count = trace.ring.values().filter(|c| &c.xi == xi).count();
        set(names::cc(k), count as f64);
    }

    // B.2 variables.
    for (&u, choice) in &trace.ring {
        let len = choice.xi.len();
        for i in 1..=g.n_edges() {
            set(
                names::gadget_e(u, i),
                if g.edge_active(i, len) { 1.0 } else { 0.0 },
            );
        }
    }
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        let (nu, nu2) = trace.ring_edge_gadget[&e];
        for i in 1..=g.n_edges() {
            set(names::xedge(e, u, i), if i == nu { 1.0 } else { 0.0 });
            set(names::xedge(e, up, i), if i == nu2 { 1.0 } else { 0.0 });
        }
    }
    for &e in &ctx.non_ring_edges {
        let (x, y) = ctx.edge_nodes(e);
        for side in [x, y] {
            if !tree.nodes[side].ring {
                continue;
            }
            let p = trace.attach[&e][&side];
            for q in 1..=g.c_max {
                set(names::xnode(e, side, q), if q == p { 1.0 } else { 0.0 });
            }
        }
    }

    // B.3 variables.
    for (&u, choice) in &trace.ring {
        let len = choice.xi.len();
        for p in 1..=g.c_max {
            for &f in &ctx.fr_at[&u] {
                let on = p <= len && ctx.fringes[f].code == choice.fringe[p - 1];
                set(names::fr_cycle(u, p, f), if on { 1.0 } else { 0.0 });
            }
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        for &f in &ctx.fr_at[&vtx] {
            let on = ctx.fringes[f].code == trace.node_fringe[&vtx];
            set(names::fr_node(vtx, f), if on { 1.0 } else { 0.0 });
        }
    }
    for &e in &ctx.ring_edges {
        let (u, _) = ctx.ring_edge_sides(e);
        let (nu, _) = trace.ring_edge_gadget[&e];
        let (i1, i2) = g.endpoints(nu);
        for f in 0..ctx.fringes.len() {
            let mut count = 0.0;
            for p in [i1, i2] {
                if ctx.fringes[f].code == trace.ring[&u].fringe[p - 1] {
                    count += 1.0;
                }
            }
            set(names::fce(e, f), count);
        }
    }
    for (f, info) in ctx.fringes.iter().enumerate() {
        let count = real.class_code.iter().filter(|c| **c == info.code).count();
        set(names::fc(f), count as f64);
    }
    for (j, ac) in ctx.spec.gamma_ac_lf.iter().enumerate() {
        let mut total = 0u32;
        for (class, code) in real.class_code.iter().enumerate() {
            let _ = class;
            let f = ctx.fringe_index(code).unwrap();
            total += ctx.fringes[f]
                .stats
                .leaf_adjacency_counts()
                .get(&(ac.a, ac.b, ac.m))
                .copied()
                .unwrap_or(0);
        }
        set(names::aclf(j), f64::from(total));
    }
    set(names::rank(), ctx.ring_nodes.len() as f64);
    set(names::nint(), real.n_classes as f64);
    set(names::ng(), graph.n_heavy() as f64);

    // B.4 variables.
    let deg_of_slot = |slot: (usize, usize)| degree_of_class(class_at(slot));
    let dint_of_slot = |slot: (usize, usize)| real.interior_degree(class_at(slot));
    for (&u, choice) in &trace.ring {
        let len = choice.xi.len();
        for p in 1..=g.c_max {
            let (deg, dint) = if p <= len {
                (deg_of_slot((u, p)), dint_of_slot((u, p)))
            } else {
                (0, 0)
            };
            for d in 1..=4 {
                set(
                    names::degc(u, p, d),
                    if p <= len && deg == d { 1.0 } else { 0.0 },
                );
                set(
                    names::dintc(u, p, d),
                    if p <= len && dint == d { 1.0 } else { 0.0 },
                );
            }
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        let deg = deg_of_slot((vtx, 0));
        let dint = dint_of_slot((vtx, 0));
        for d in 1..=4 {
            set(names::degn(vtx, d), if deg == d { 1.0 } else { 0.0 });
            set(names::dintn(vtx, d), if dint == d { 1.0 } else { 0.0 });
        }
    }
    // Ring-edge transfer quantities.
    let attach_count = |slot: (usize, usize)| real.slot_attach[real.slot_index[&slot]] as f64;
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        let (nu, nu2) = trace.ring_edge_gadget[&e];
        let (i1, i2) = g.endpoints(nu);
        let (j1, j2) = g.endpoints(nu2);
        for (&side, &chosen) in [(&u, &nu), (&up, &nu2)] {
            let (a1, a2) = g.endpoints(chosen);
            for p in 1..=g.c_max {
                let on = p == a1 || p == a2;
                let dgp = if on {
                    1.0 + attach_count((side, p))
                } else {
                    0.0
                };
                set(names::dgp(e, side, p), dgp);
            }
        }
        // dgm mirrors the partner's dgp under the anti-parallel pairing.
        let partners = [
            ((u, i1), (up, j2)),
            ((u, i2), (up, j1)),
            ((up, j2), (u, i1)),
            ((up, j1), (u, i2)),
        ];
        for side in [u, up] {
            for p in 1..=g.c_max {
                let partner = partners
                    .iter()
                    .find(|((n, q), _)| *n == side && *q == p)
                    .map(|&(_, other)| other);
                let dgm = match partner {
                    Some(other) => 1.0 + attach_count(other),
                    None => 0.0,
                };
                set(names::dgm(e, side, p), dgm);
            }
        }
        // Per-ring-edge duplicates of the degree indicators.
        for d in 1..=4 {
            let mut dge = 0.0;
            let mut dginte = 0.0;
            for p in [i1, i2] {
                if deg_of_slot((u, p)) == d {
                    dge += 1.0;
                }
                if dint_of_slot((u, p)) == d {
                    dginte += 1.0;
                }
            }
            set(names::dge(e, d), dge);
            set(names::dginte(e, d), dginte);
        }
    }
    // Degree totals count union classes once.
    for d in 1..=4 {
        let dg = (0..real.n_classes)
            .filter(|&c| degree_of_class(c) == d)
            .count();
        let dgint = (0..real.n_classes)
            .filter(|&c| real.interior_degree(c) == d)
            .count();
        set(names::dg(d), dg as f64);
        set(names::dgint(d), dgint as f64);
    }

    // B.5 variables.
    for (&u, choice) in &trace.ring {
        for i in 1..=g.n_edges() {
            let beta = choice.beta.get(&i).copied().unwrap_or(0);
            set(names::beta_g(u, i), f64::from(beta));
            for mult in 1..=3u8 {
                set(
                    names::bbin_g(u, i, mult as usize),
                    if beta == mult { 1.0 } else { 0.0 },
                );
            }
        }
    }
    for e in 0..tree.edges.len() {
        let beta = trace.edge_beta[&e];
        set(names::beta_e(e), f64::from(beta));
        for mult in 1..=3u8 {
            set(
                names::bbin_e(e, mult as usize),
                if beta == mult { 1.0 } else { 0.0 },
            );
        }
    }
    for mult in 1..=3u8 {
        let count = real.edges.iter().filter(|&&(_, _, b)| b == mult).count();
        set(names::bd(mult as usize), count as f64);
    }

    // B.6 variables.
    let elem_code_of_class = |class: usize| -> f64 {
        let f = ctx.fringe_index(&real.class_code[class]).unwrap();
        ctx.element_code(ctx.fringes[f].stats.root_element())
            .unwrap() as f64
    };
    for (&u, choice) in &trace.ring {
        let len = choice.xi.len();
        for p in 1..=g.c_max {
            let code = if p <= len {
                elem_code_of_class(class_at((u, p)))
            } else {
                0.0
            };
            set(names::alpha_c(u, p), code);
            for a in 0..ctx.lambda.len() {
                set(
                    names::abin_c(u, p, a),
                    if p <= len && code == (a + 1) as f64 {
                        1.0
                    } else {
                        0.0
                    },
                );
            }
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        let code = elem_code_of_class(class_at((vtx, 0)));
        set(names::alpha_n(vtx), code);
        for a in 0..ctx.lambda.len() {
            set(
                names::abin_n(vtx, a),
                if code == (a + 1) as f64 { 1.0 } else { 0.0 },
            );
        }
    }
    for &u in &ctx.ring_nodes {
        for e in tree.non_ring_edges_at(u) {
            let p_attach = trace.attach[&e][&u];
            for p in 1..=g.c_max {
                let on = p == p_attach;
                set(
                    names::bnode(e, u, p),
                    if on {
                        f64::from(trace.edge_beta[&e])
                    } else {
                        0.0
                    },
                );
            }
        }
    }
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        let (nu, nu2) = trace.ring_edge_gadget[&e];
        let shared_beta = f64::from(trace.edge_beta[&e]);
        let bep_at = |side: usize, chosen: usize, p: usize, choice: &RingChoice| -> f64 {
            let (a1, a2) = g.endpoints(chosen);
            if p != a1 && p != a2 {
                return 0.0;
            }
            // Active cycle bonds at p minus the shared edge, plus attached
            // tree-edge bonds.
            let cycle_sum: f64 = choice
                .beta
                .iter()
                .filter(|(&i, _)| {
                    let (x, y) = g.endpoints(i);
                    x == p || y == p
                })
                .map(|(_, &b)| f64::from(b))
                .sum();
            let mut node_sum = 0.0;
            for e2 in tree.non_ring_edges_at(side) {
                if trace.attach[&e2][&side] == p {
                    node_sum += f64::from(trace.edge_beta[&e2]);
                }
            }
            cycle_sum - shared_beta + node_sum
        };
        let (i1, i2) = g.endpoints(nu);
        let (j1, j2) = g.endpoints(nu2);
        for p in 1..=g.c_max {
            set(names::bep(e, u, p), bep_at(u, nu, p, &trace.ring[&u]));
            set(names::bep(e, up, p), bep_at(up, nu2, p, &trace.ring[&up]));
        }
        let partners = [
            ((u, i1), (up, j2, nu2)),
            ((u, i2), (up, j1, nu2)),
            ((up, j2), (u, i1, nu)),
            ((up, j1), (u, i2, nu)),
        ];
        for side in [u, up] {
            for p in 1..=g.c_max {
                let val = partners
                    .iter()
                    .find(|((n, q), _)| *n == side && *q == p)
                    .map(|&(_, (on, oq, oe))| bep_at(on, oe, oq, &trace.ring[&on]))
                    .unwrap_or(0.0);
                set(names::bem(e, side, p), val);
            }
        }
    }
    for (a, el) in ctx.lambda.iter().enumerate() {
        for &e in &ctx.ring_edges {
            let (u, _) = ctx.ring_edge_sides(e);
            let (nu, _) = trace.ring_edge_gadget[&e];
            let (i1, i2) = g.endpoints(nu);
            let mut count = 0.0;
            for p in [i1, i2] {
                let f = fringe_of((u, p));
                if ctx.fringes[f].stats.root_element() == *el {
                    count += 1.0;
                }
            }
            set(names::nae(e, a), count);
        }
        let naint = (0..real.n_classes)
            .filter(|&c| {
                let f = ctx.fringe_index(&real.class_code[c]).unwrap();
                ctx.fringes[f].stats.root_element() == *el
            })
            .count() as f64;
        let naex: f64 = real
            .class_code
            .iter()
            .map(|code| {
                let f = ctx.fringe_index(code).unwrap();
                f64::from(ctx.fringes[f].stats.non_root_count(*el))
            })
            .sum();
        set(names::naint(a), naint);
        set(names::naex(a), naex);
        set(names::na(a), naint + naex);
    }
    let mass = graph.mass_star() as f64;
    set(names::mass(), mass);
    let atoms = graph.n_atoms() as u32;
    let (atm_lo, atm_hi) = ctx.atm_range();
    if !(atm_lo..=atm_hi).contains(&atoms) {
        return Err(Error::Solution(format!(
            "atom count {atoms} falls outside the indicator range [{atm_lo}, {atm_hi}]"
        )));
    }
    for i in atm_lo..=atm_hi {
        set(names::atm(i), if i == atoms { 1.0 } else { 0.0 });
    }
    set(names::msavg(), mass / f64::from(atoms));

    // B.7/B.8 variables.
    let gamma = &ctx.spec.gamma_ac_int;
    let taus = &ctx.spec.gamma_ec_int;
    let find_ac = |a: Element, b: Element, mult: u8| -> Result<usize> {
        gamma
            .iter()
            .position(|g| g.a == a && g.b == b && g.m == mult)
            .ok_or_else(|| {
                Error::Solution(format!(
                    "adjacency configuration {a}-{b}:{mult} not available in the specification"
                ))
            })
    };
    let find_ec = |a: Element, da: u8, b: Element, db: u8, mult: u8| -> Result<usize> {
        taus.iter()
            .position(|t| t.a == a && t.da == da && t.b == b && t.db == db && t.m == mult)
            .ok_or_else(|| {
                Error::Solution(format!(
                    "edge configuration {a}{da}-{b}{db}:{mult} not available in the specification"
                ))
            })
    };
    let elem_of_slot = |slot: (usize, usize)| -> Element {
        let f = fringe_of(slot);
        ctx.fringes[f].stats.root_element()
    };
    let mut ac_sel: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ec_sel: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&u, choice) in &trace.ring {
        for i in 1..=g.n_edges() {
            if let Some(&beta) = choice.beta.get(&i) {
                let (p1, p2) = g.endpoints(i);
                let c = find_ac(elem_of_slot((u, p1)), elem_of_slot((u, p2)), beta)?;
                let t = find_ec(
                    elem_of_slot((u, p1)),
                    deg_of_slot((u, p1)) as u8,
                    elem_of_slot((u, p2)),
                    deg_of_slot((u, p2)) as u8,
                    beta,
                )?;
                ac_sel.insert((u, i), c);
                ec_sel.insert((u, i), t);
            }
        }
        for i in 1..=g.n_edges() {
            for (c, _) in gamma.iter().enumerate() {
                set(
                    names::acg(u, i, c),
                    if ac_sel.get(&(u, i)) == Some(&c) {
                        1.0
                    } else {
                        0.0
                    },
                );
            }
            for (t, _) in taus.iter().enumerate() {
                set(
                    names::ecg(u, i, t),
                    if ec_sel.get(&(u, i)) == Some(&t) {
                        1.0
                    } else {
                        0.0
                    },
                );
            }
        }
    }
    // Tree edges: endpoint slots.
    let tree_edge_slots = |e: usize| -> ((usize, usize), (usize, usize)) {
        let (x, y) = ctx.edge_nodes(e);
        if ctx.spec.seed_tree.edges[e].ring {
            let (nu, _) = trace.ring_edge_gadget[&e];
            let (i1, i2) = g.endpoints(nu);
            ((x, i1), (x, i2))
        } else {
            let sx = if tree.nodes[x].ring {
                (x, trace.attach[&e][&x])
            } else {
                (x, 0)
            };
            let sy = if tree.nodes[y].ring {
                (y, trace.attach[&e][&y])
            } else {
                (y, 0)
            };
            (sx, sy)
        }
    };
    let mut ace_sel: BTreeMap<usize, usize> = BTreeMap::new();
    let mut ece_sel: BTreeMap<usize, usize> = BTreeMap::new();
    for e in 0..tree.edges.len() {
        let (sa, sb) = tree_edge_slots(e);
        let beta = trace.edge_beta[&e];
        let c = find_ac(elem_of_slot(sa), elem_of_slot(sb), beta)?;
        let t = find_ec(
            elem_of_slot(sa),
            deg_of_slot(sa) as u8,
            elem_of_slot(sb),
            deg_of_slot(sb) as u8,
            beta,
        )?;
        ace_sel.insert(e, c);
        ece_sel.insert(e, t);
        for (ci, _) in gamma.iter().enumerate() {
            set(names::ace(e, ci), if ci == c { 1.0 } else { 0.0 });
        }
        for (ti, _) in taus.iter().enumerate() {
            set(names::ece(e, ti), if ti == t { 1.0 } else { 0.0 });
        }
    }
    // Totals count unordered configurations over distinct interior edges.
    for (c, ac) in gamma.iter().enumerate() {
        let rev = ac.reversed();
        let crev = gamma.iter().position(|x| *x == rev).unwrap();
        let mut sources = vec![c];
        if crev != c {
            sources.push(crev);
        }
        let mut total = 0i64;
        for (&(_, _), &sel) in &ac_sel {
            if sources.contains(&sel) {
                total += 1;
            }
        }
        for &e in &ctx.non_ring_edges {
            if sources.contains(&ace_sel[&e]) {
                total += 1;
            }
        }
        for &e in &ctx.ring_edges {
            if sources.contains(&ace_sel[&e]) {
                total -= 1;
            }
        }
        set(names::acint(c), total as f64);
    }
    for (t, ec) in taus.iter().enumerate() {
        let rev = ec.reversed();
        let trev = taus.iter().position(|x| *x == rev).unwrap();
        let mut sources = vec![t];
        if trev != t {
            sources.push(trev);
        }
        let mut total = 0i64;
        for (&(_, _), &sel) in &ec_sel {
            if sources.contains(&sel) {
                total += 1;
            }
        }
        for &e in &ctx.non_ring_edges {
            if sources.contains(&ece_sel[&e]) {
                total += 1;
            }
        }
        for &e in &ctx.ring_edges {
            if sources.contains(&ece_sel[&e]) {
                total -= 1;
            }
        }
        set(names::ecint(t), total as f64);
    }

    // Release the closure's borrow before reading the map back.
    let _ = set;
    // Hyperplane value.
    let mut eta = hyperplane.bias;
    for (name, &w) in hyperplane.column_names.iter().zip(&hyperplane.weights) {
        if w == 0.0 {
            continue;
        }
        let key = crate::features::DescriptorKey::parse(name)?;
        let expr = super::build::descriptor_expression(&ctx, &key)?;
        let mut value = 0.0;
        for (var, coef) in expr {
            value += coef
                * out
                    .get(&var)
                    .copied()
                    .ok_or_else(|| Error::Solution(format!("encoder missed variable {var}")))?;
        }
        eta += w * value;
    }
    out.insert(names::eta(), eta);
    Ok(out)
}
